//! Trajectory images: per-flight 28×28 grids over the airport bounding box
//! with three channels (fix count, summed east velocity, summed north
//! velocity).

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::features::{TimeWindow, TrafficIndex};
use crate::geo::BoundingBox;
use crate::ingest::GpsPoint;
use crate::{Error, Result};

pub const GRID: usize = 28;
pub const CHANNELS: usize = 3;
pub const PIXELS: usize = GRID * GRID * CHANNELS;

/// Flat `[row][col][channel]` grid; row 0 is the northern edge.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajImage {
    pub flight_id: String,
    pub data: Vec<f64>,
}

#[inline]
pub fn offset(row: usize, col: usize, channel: usize) -> usize {
    (row * GRID + col) * CHANNELS + channel
}

impl TrajImage {
    pub fn zeros(flight_id: impl Into<String>) -> Self {
        TrajImage {
            flight_id: flight_id.into(),
            data: vec![0.0; PIXELS],
        }
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[offset(row, col, channel)]
    }

    pub fn channel_sum(&self, channel: usize) -> f64 {
        self.data.iter().skip(channel).step_by(CHANNELS).sum()
    }
}

/// Grid cell of an in-box position.
pub fn cell_of(lat: f64, lon: f64, bbox: &BoundingBox) -> (usize, usize) {
    let g = GRID as f64;
    let col = (g * (lon - bbox.lon_min) / (bbox.lon_max - bbox.lon_min)).floor();
    let row = (g * (bbox.lat_max - lat) / (bbox.lat_max - bbox.lat_min)).floor();
    let clamp = |v: f64| (v.max(0.0) as usize).min(GRID - 1);
    (clamp(row), clamp(col))
}

/// Accumulates `points` into an unscaled image. Returns the image and the
/// number of points dropped for lying outside `bbox`.
pub fn rasterize(flight_id: &str, points: &[GpsPoint], bbox: &BoundingBox) -> Result<(TrajImage, usize)> {
    bbox.validate()?;
    let mut img = TrajImage::zeros(flight_id);
    let mut dropped = 0;
    for p in points {
        if !bbox.contains(p.latitude, p.longitude) {
            dropped += 1;
            continue;
        }
        let (row, col) = cell_of(p.latitude, p.longitude, bbox);
        let (vx, vy) = p.velocity();
        img.data[offset(row, col, 0)] += 1.0;
        img.data[offset(row, col, 1)] += vx;
        img.data[offset(row, col, 2)] += vy;
    }
    Ok((img, dropped))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerMode {
    /// Separate min/max per channel.
    #[default]
    PerChannel,
    /// One min/max shared by all channels.
    Global,
}

/// Min-max scaler fitted on training images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageScaler {
    pub min: [f64; CHANNELS],
    pub max: [f64; CHANNELS],
}

pub fn fit_scaler(images: &[TrajImage], mode: ScalerMode) -> Result<ImageScaler> {
    if images.is_empty() {
        return Err(Error::Fit("image scaler needs at least one image".into()));
    }
    let mut min = [f64::INFINITY; CHANNELS];
    let mut max = [f64::NEG_INFINITY; CHANNELS];
    for img in images {
        for (i, &v) in img.data.iter().enumerate() {
            let c = i % CHANNELS;
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    if mode == ScalerMode::Global {
        let lo = min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        min = [lo; CHANNELS];
        max = [hi; CHANNELS];
    }
    Ok(ImageScaler { min, max })
}

impl ImageScaler {
    pub fn scale(&self, v: f64, channel: usize) -> f64 {
        let (lo, hi) = (self.min[channel], self.max[channel]);
        if hi <= lo {
            return 0.0;
        }
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

pub fn apply_scaler(scaler: &ImageScaler, image: &TrajImage) -> TrajImage {
    TrajImage {
        flight_id: image.flight_id.clone(),
        data: image
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| scaler.scale(v, i % CHANNELS))
            .collect(),
    }
}

/// Unscaled image of all surface traffic in each flight's observation
/// window. `ids[i]` names the flight of `windows[i]`.
pub fn window_images(
    index: &TrafficIndex,
    windows: &[TimeWindow],
    ids: &[String],
    bbox: &BoundingBox,
) -> Result<Vec<TrajImage>> {
    if windows.len() != ids.len() {
        return Err(Error::Dimension {
            expected: windows.len(),
            got: ids.len(),
        });
    }
    windows
        .par_iter()
        .zip(ids.par_iter())
        .map(|(w, id)| rasterize(id, index.window_points(w), bbox).map(|(img, _)| img))
        .collect()
}

/// Scaled images as matrix rows, in HWC order.
pub fn image_matrix(images: &[TrajImage], scaler: &ImageScaler) -> Array2<f64> {
    let mut m = Array2::zeros((images.len(), PIXELS));
    for (mut row, img) in m.rows_mut().into_iter().zip(images) {
        for (i, (dst, &v)) in row.iter_mut().zip(&img.data).enumerate() {
            *dst = scaler.scale(v, i % CHANNELS);
        }
    }
    m
}

/// Writes images as a little-endian tensor: four `u32` shape words
/// `[n, 28, 28, 3]` followed by `n·28·28·3` `f32` values.
pub fn write_tensor<W: Write>(mut w: W, images: &[TrajImage]) -> Result<()> {
    let shape = [images.len(), GRID, GRID, CHANNELS];
    for s in shape {
        let s = u32::try_from(s).map_err(|_| Error::Encoding("tensor too large".into()))?;
        w.write_all(&s.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(PIXELS * 4);
    for img in images {
        buf.clear();
        for &v in &img.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a tensor written by [`write_tensor`]; `ids` gives each row's flight.
pub fn read_tensor<R: Read>(mut r: R, ids: &[String]) -> Result<Vec<TrajImage>> {
    let mut word = [0u8; 4];
    let mut shape = [0usize; 4];
    for s in &mut shape {
        r.read_exact(&mut word)?;
        *s = u32::from_le_bytes(word) as usize;
    }
    if shape[1..] != [GRID, GRID, CHANNELS] {
        return Err(Error::Schema(format!("unexpected tensor shape {shape:?}")));
    }
    if shape[0] != ids.len() {
        return Err(Error::Dimension {
            expected: ids.len(),
            got: shape[0],
        });
    }
    let mut bytes = vec![0u8; PIXELS * 4];
    let mut out = Vec::with_capacity(shape[0]);
    for id in ids {
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        out.push(TrajImage {
            flight_id: id.clone(),
            data,
        });
    }
    Ok(out)
}

/// JSON index stored next to the tensor file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TensorIndex {
    pub shape: [usize; 4],
    pub rows: BTreeMap<String, usize>,
    pub scaler: Option<ImageScaler>,
}

impl TensorIndex {
    pub fn new(images: &[TrajImage], scaler: Option<ImageScaler>) -> TensorIndex {
        TensorIndex {
            shape: [images.len(), GRID, GRID, CHANNELS],
            rows: images.iter().enumerate().map(|(i, img)| (img.flight_id.clone(), i)).collect(),
            scaler,
        }
    }

    /// Flight ids in row order.
    pub fn ordered_ids(&self) -> Vec<String> {
        let mut v: Vec<(&String, &usize)> = self.rows.iter().collect();
        v.sort_by_key(|(_, &i)| i);
        v.into_iter().map(|(id, _)| id.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bbox() -> BoundingBox {
        BoundingBox::new(33.93, -118.435, 33.954, -118.38).unwrap()
    }

    fn pt(lat: f64, lon: f64, speed: f64, heading: f64) -> GpsPoint {
        GpsPoint {
            vehicle_id: "V".into(),
            time: Utc.with_ymd_and_hms(2016, 7, 1, 0, 0, 0).unwrap(),
            latitude: lat,
            longitude: lon,
            speed: Some(speed),
            heading: Some(heading),
        }
    }

    #[test]
    fn empty_points_give_zero_image() {
        let (img, dropped) = rasterize("f", &[], &bbox()).unwrap();
        assert_eq!(dropped, 0);
        assert!(img.data.iter().all(|&v| v == 0.0));
        assert_eq!(img.data.len(), PIXELS);
    }

    #[test]
    fn center_point_heading_east() {
        let (lat, lon) = bbox().center();
        let (img, _) = rasterize("f", &[pt(lat, lon, 10.0, PI / 2.0)], &bbox()).unwrap();
        assert_eq!(img.get(14, 14, 0), 1.0);
        assert!((img.get(14, 14, 1) - 10.0).abs() < 1e-12);
        assert!(img.get(14, 14, 2).abs() < 1e-12);
        assert_eq!(img.channel_sum(0), 1.0);
    }

    #[test]
    fn identical_points_add_up() {
        let p = pt(33.94, -118.40, 4.0, 0.0);
        let (img, _) = rasterize("f", &[p.clone(), p], &bbox()).unwrap();
        let (r, c) = cell_of(33.94, -118.40, &bbox());
        assert_eq!(img.get(r, c, 0), 2.0);
        assert!((img.get(r, c, 2) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn corners_and_outside() {
        let b = bbox();
        assert_eq!(cell_of(b.lat_max, b.lon_min, &b), (0, 0));
        assert_eq!(cell_of(b.lat_min, b.lon_max, &b), (27, 27));
        let (img, dropped) = rasterize("f", &[pt(34.5, -118.4, 1.0, 0.0)], &b).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(img.channel_sum(0), 0.0);
    }

    #[test]
    fn degenerate_bbox_is_rejected() {
        let b = BoundingBox {
            lat_min: 1.0,
            lon_min: 1.0,
            lat_max: 1.0,
            lon_max: 2.0,
        };
        assert!(matches!(rasterize("f", &[], &b), Err(Error::Geometry(_))));
    }

    #[test]
    fn scaler_rules() {
        let mut a = TrajImage::zeros("a");
        let mut b = TrajImage::zeros("b");
        a.data[offset(0, 0, 0)] = 5.0;
        b.data[offset(1, 1, 0)] = 10.0;
        b.data[offset(1, 1, 1)] = -4.0;
        let s = fit_scaler(&[a.clone(), b], ScalerMode::PerChannel).unwrap();
        assert_eq!((s.min[0], s.max[0]), (0.0, 10.0));
        assert_eq!((s.min[1], s.max[1]), (-4.0, 0.0));
        assert_eq!((s.min[2], s.max[2]), (0.0, 0.0));
        assert_eq!(s.scale(0.0, 0), 0.0);
        assert_eq!(s.scale(10.0, 0), 1.0);
        assert_eq!(s.scale(2.5, 0), 0.25);
        assert_eq!(s.scale(40.0, 0), 1.0);
        assert_eq!(s.scale(3.0, 2), 0.0);
        let scaled = apply_scaler(&s, &a);
        assert_eq!(scaled.get(0, 0, 0), 0.5);
        assert!(fit_scaler(&[], ScalerMode::PerChannel).is_err());
        let g = fit_scaler(&[a], ScalerMode::Global).unwrap();
        assert_eq!(g.min, [0.0; 3]);
        assert_eq!(g.max, [5.0; 3]);
    }

    #[test]
    fn tensor_round_trip() {
        let (lat, lon) = bbox().center();
        let (a, _) = rasterize("a", &[pt(lat, lon, 3.5, 1.0)], &bbox()).unwrap();
        let b = TrajImage::zeros("b");
        let mut buf = Vec::new();
        write_tensor(&mut buf, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(buf.len(), 16 + 2 * PIXELS * 4);
        assert_eq!(&buf[..4], &2u32.to_le_bytes());
        let idx = TensorIndex::new(&[a.clone(), b], None);
        let back = read_tensor(buf.as_slice(), &idx.ordered_ids()).unwrap();
        assert_eq!(back[0].flight_id, "a");
        for (x, y) in back[0].data.iter().zip(&a.data) {
            assert_eq!(*x, *y as f32 as f64);
        }
    }

    fn point_strategy() -> impl Strategy<Value = GpsPoint> {
        (33.92f64..33.96, -118.44f64..-118.37, 0.0f64..80.0, 0.0f64..(2.0 * PI))
            .prop_map(|(lat, lon, s, h)| pt(lat, lon, s, h))
    }

    proptest! {
        #[test]
        fn conservation_and_permutation(mut pts in prop::collection::vec(point_strategy(), 0..60)) {
            let b = bbox();
            let inside = pts.iter().filter(|p| b.contains(p.latitude, p.longitude)).count();
            let (img, dropped) = rasterize("f", &pts, &b).unwrap();
            prop_assert_eq!(img.channel_sum(0), inside as f64);
            prop_assert_eq!(dropped, pts.len() - inside);
            pts.reverse();
            let (rev, _) = rasterize("f", &pts, &b).unwrap();
            for (x, y) in img.data.iter().zip(&rev.data) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn velocity_bounded_by_speed_sum(pts in prop::collection::vec(point_strategy(), 1..40)) {
            let b = bbox();
            let (img, _) = rasterize("f", &pts, &b).unwrap();
            let mut speed_sum = vec![0.0; GRID * GRID];
            for p in pts.iter().filter(|p| b.contains(p.latitude, p.longitude)) {
                let (r, c) = cell_of(p.latitude, p.longitude, &b);
                speed_sum[r * GRID + c] += p.speed_or_zero();
            }
            for r in 0..GRID {
                for c in 0..GRID {
                    let norm = img.get(r, c, 1).hypot(img.get(r, c, 2));
                    prop_assert!(norm <= speed_sum[r * GRID + c] + 1e-9);
                }
            }
        }

        #[test]
        fn scaled_values_in_unit_interval(
            train in prop::collection::vec(prop::collection::vec(point_strategy(), 0..20), 1..4),
            test in prop::collection::vec(point_strategy(), 0..30),
        ) {
            let b = bbox();
            let imgs: Vec<_> = train.iter().map(|p| rasterize("t", p, &b).unwrap().0).collect();
            let s = fit_scaler(&imgs, ScalerMode::PerChannel).unwrap();
            let out = apply_scaler(&s, &rasterize("x", &test, &b).unwrap().0);
            prop_assert!(out.data.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
