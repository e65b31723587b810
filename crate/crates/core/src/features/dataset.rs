//! Assembled per-flight table: features, targets and the CSV/JSON on-disk form.

use chrono::{DateTime, Utc};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::ingest::{format_time, parse_time, LabelVector};
use crate::{Error, Result};

/// Column families a model can be fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    /// Schedule attributes, inbound leg and missing-inbound flag.
    Reference,
    Atc,
    /// Encoded weather, used by the neural models.
    WeatherRaw,
    /// Principal components of the encoded weather, used by linear and tree
    /// models.
    WeatherPca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub group: FeatureGroup,
}

/// JSON sidecar describing the dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub version: u32,
    pub rows: usize,
    pub columns: Vec<ColumnSpec>,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub flight_ids: Vec<String>,
    /// Scheduled gate-out of each flight; the temporal ordering key.
    pub timestamps: Vec<DateTime<Utc>>,
    pub columns: Vec<ColumnSpec>,
    /// `rows × columns`
    pub x: Array2<f64>,
    /// `rows × 6`, ordered as [`LabelVector::NAMES`].
    pub y: Array2<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.flight_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flight_ids.is_empty()
    }

    pub fn column_indices(&self, groups: &[FeatureGroup]) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| groups.contains(&c.group))
            .map(|(i, _)| i)
            .collect()
    }

    /// Feature matrix restricted to `groups`, keeping column order, plus the
    /// selected column names.
    pub fn select(&self, groups: &[FeatureGroup]) -> (Array2<f64>, Vec<String>) {
        let idx = self.column_indices(groups);
        let names = idx.iter().map(|&i| self.columns[i].name.clone()).collect();
        (self.x.select(Axis(1), &idx), names)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn target(&self) -> ndarray::ArrayView1<'_, f64> {
        self.y.column(LabelVector::TOTAL)
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            flight_ids: rows.iter().map(|&i| self.flight_ids[i].clone()).collect(),
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            columns: self.columns.clone(),
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
        }
    }

    pub fn schema(&self) -> DatasetSchema {
        DatasetSchema {
            version: 1,
            rows: self.len(),
            columns: self.columns.clone(),
            targets: LabelVector::NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Writes `features.csv` style output; the sidecar goes to `schema_path`.
    pub fn write(&self, csv_path: &Path, schema_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
        let mut header = vec!["flight_id".to_string(), "sched_dep".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        header.extend(LabelVector::NAMES.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.flight_ids[i].clone(), format_time(&self.timestamps[i])];
            row.extend(self.x.row(i).iter().map(|v| v.to_string()));
            row.extend(self.y.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        let schema = serde_json::to_string_pretty(&self.schema())?;
        std::fs::write(schema_path, schema + "\n")?;
        Ok(())
    }

    pub fn read(csv_path: &Path, schema_path: &Path) -> Result<Dataset> {
        let schema: DatasetSchema = serde_json::from_reader(BufReader::new(File::open(schema_path)?))?;
        let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(csv_path)?));
        let headers = rdr.headers()?.clone();
        let d = schema.columns.len();
        let expected = 2 + d + schema.targets.len();
        if headers.len() != expected {
            return Err(Error::Schema(format!(
                "{}: expected {expected} columns from schema, found {}",
                csv_path.display(),
                headers.len()
            )));
        }
        for (i, c) in schema.columns.iter().enumerate() {
            if &headers[2 + i] != c.name.as_str() {
                return Err(Error::Schema(format!("column {} is `{}`, schema says `{}`", 2 + i, &headers[2 + i], c.name)));
            }
        }
        let mut flight_ids = Vec::new();
        let mut timestamps = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            flight_ids.push(rec[0].to_string());
            timestamps.push(parse_time(&rec[1]).ok_or_else(|| Error::Schema(format!("bad timestamp `{}`", &rec[1])))?);
            for (j, cell) in rec.iter().enumerate().skip(2) {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Schema(format!("non-numeric cell `{cell}` in column {j}")))?;
                if j < 2 + d {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        let n = flight_ids.len();
        if n != schema.rows {
            return Err(Error::Schema(format!("schema lists {} rows, csv has {n}", schema.rows)));
        }
        let nt = schema.targets.len();
        Ok(Dataset {
            flight_ids,
            timestamps,
            columns: schema.columns,
            x: Array2::from_shape_vec((n, d), xs).map_err(|e| Error::Schema(e.to_string()))?,
            y: Array2::from_shape_vec((n, nt), ys).map_err(|e| Error::Schema(e.to_string()))?,
        })
    }
}
