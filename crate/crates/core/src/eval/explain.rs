//! How much of the delay variance a single attribute explains, and summary
//! statistics of the delay distribution.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::features::{departures, minute_of_day, weekday_index};
use crate::ingest::FlightRecord;
use crate::learn::{mean, population_std};
use crate::{Error, Result};

/// A per-row attribute to explain the delay with.
#[derive(Debug, Clone, PartialEq)]
pub enum Attribute<'a> {
    Categorical(&'a [String]),
    Numeric(&'a [f64]),
}

/// RMSE of predicting each row's delay by its class mean.
pub fn categorical_rmse<K: Ord>(classes: &[K], y: &[f64]) -> Result<f64> {
    check(classes.len(), y)?;
    let mut sums: BTreeMap<&K, (f64, usize)> = BTreeMap::new();
    for (k, &v) in classes.iter().zip(y) {
        let e = sums.entry(k).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let sse: f64 = classes
        .iter()
        .zip(y)
        .map(|(k, &v)| {
            let (s, n) = sums[k];
            let d = v - s / n as f64;
            d * d
        })
        .sum();
    Ok((sse / y.len() as f64).sqrt())
}

/// RMSE of the least-squares line through `(x, y)`; a constant `x` gives
/// the mean.
pub fn numeric_rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x.len(), y)?;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let d = b - (my + slope * (a - mx));
            d * d
        })
        .sum();
    Ok((sse / y.len() as f64).sqrt())
}

fn check(n: usize, y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Parameter("no rows to explain".into()));
    }
    if n != y.len() {
        return Err(Error::Dimension { expected: y.len(), got: n });
    }
    Ok(())
}

pub fn explainability_rmse(y: &[f64], attribute: &Attribute<'_>) -> Result<f64> {
    match attribute {
        Attribute::Categorical(c) => categorical_rmse(c, y),
        Attribute::Numeric(x) => numeric_rmse(x, y),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Share of flights with delay ≤ 0.
    pub on_time_fraction: f64,
}

/// Population statistics of `delays`; all zero when empty.
pub fn delay_stats(delays: &[f64]) -> DelayStats {
    if delays.is_empty() {
        return DelayStats::default();
    }
    let mut sorted = delays.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    DelayStats {
        n,
        mean: mean(delays),
        median,
        std: population_std(delays),
        on_time_fraction: delays.iter().filter(|&&d| d <= 0.0).count() as f64 / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainRow {
    pub attribute: String,
    pub kind: String,
    pub classes: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub stats: DelayStats,
    pub attributes: Vec<ExplainRow>,
}

/// Delay statistics and per-attribute explainability of the departures from
/// `airport`.
pub fn analyze_schedule(schedule: &[FlightRecord], airport: &str) -> Result<Analysis> {
    let deps = departures(schedule, airport);
    let y: Vec<f64> = deps.iter().map(|f| f.dep_delay as f64).collect();
    let stats = delay_stats(&y);
    if y.is_empty() {
        return Ok(Analysis {
            stats,
            attributes: Vec::new(),
        });
    }
    let cat = |name: &str, f: &dyn Fn(&FlightRecord) -> String| -> Result<ExplainRow> {
        let keys: Vec<String> = deps.iter().map(|r| f(r)).collect();
        let mut distinct = keys.clone();
        distinct.sort();
        distinct.dedup();
        Ok(ExplainRow {
            attribute: name.into(),
            kind: "categorical".into(),
            classes: distinct.len(),
            rmse: categorical_rmse(&keys, &y)?,
        })
    };
    let num = |name: &str, f: &dyn Fn(&FlightRecord) -> f64| -> Result<ExplainRow> {
        let x: Vec<f64> = deps.iter().map(|r| f(r)).collect();
        Ok(ExplainRow {
            attribute: name.into(),
            kind: "numeric".into(),
            classes: 0,
            rmse: numeric_rmse(&x, &y)?,
        })
    };
    let attributes = vec![
        cat("all", &|_| String::new())?,
        cat("airline", &|f| f.airline.clone())?,
        cat("destination", &|f| f.destination.clone())?,
        cat("tail_number", &|f| f.tail_number.clone())?,
        cat("hour_of_day", &|f| format!("{:02}", minute_of_day(f.sched_dep) as i64 / 60))?,
        cat("weekday", &|f| format!("{}", weekday_index(f.sched_dep)))?,
        num("sched_dep_minute", &|f| minute_of_day(f.sched_dep))?,
        num("sched_elapsed_min", &|f| f.sched_elapsed_min as f64)?,
    ];
    Ok(Analysis { stats, attributes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_class_gives_std() {
        let y = [1.0, 5.0, -3.0, 20.0, 0.0];
        let keys = vec!["x".to_string(); 5];
        let r = explainability_rmse(&y, &Attribute::Categorical(&keys)).unwrap();
        assert!((r - population_std(&y)).abs() <= 1e-12 * population_std(&y));
    }

    #[test]
    fn label_as_numeric_feature_is_exact() {
        let y = [3.0, -1.0, 8.0, 2.5];
        assert!(explainability_rmse(&y, &Attribute::Numeric(&y)).unwrap() < 1e-12);
    }

    #[test]
    fn constant_classes_give_zero() {
        let keys: Vec<String> = ["a", "b", "a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(categorical_rmse(&keys, &[3.0, 7.0, 3.0, 7.0]).unwrap(), 0.0);
    }

    #[test]
    fn stats_of_small_sample() {
        let s = delay_stats(&[-2.0, 0.0, 1.0, 5.0]);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.on_time_fraction, 0.5);
        assert_eq!(delay_stats(&[]).n, 0);
    }

    #[test]
    fn empty_schedule_gives_empty_analysis() {
        let a = analyze_schedule(&[], "LAX").unwrap();
        assert_eq!(a.stats.n, 0);
        assert!(a.attributes.is_empty());
    }

    proptest! {
        #[test]
        fn class_means_never_exceed_std(
            rows in prop::collection::vec((0u8..4, -100.0f64..300.0), 1..60),
        ) {
            let keys: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
            prop_assert!(categorical_rmse(&keys, &y).unwrap() <= population_std(&y) + 1e-9);
        }
    }
}
