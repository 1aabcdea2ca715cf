//! Evacuation priorities from exported road traffic densities.
//!
//! Density files are CSV with header `segment_id,x,y,mean_density`, where
//! `(x, y)` is the segment midpoint already expressed in the scenario's
//! local meter frame.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sim::{DeviceSpec, Point};

pub const DEFAULT_PRIORITY_RADIUS: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RoadSegment {
    pub id: String,
    pub midpoint: Point,
    /// Vehicles per km.
    pub mean_density: f64,
}

#[derive(Deserialize)]
struct SegmentRow {
    segment_id: String,
    x: f64,
    y: f64,
    mean_density: f64,
}

pub fn parse_density<R: Read>(reader: R, source: &Path) -> Result<Vec<RoadSegment>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["segment_id", "x", "y", "mean_density"];
    if headers.iter().ne(expected) {
        return Err(Error::Parse {
            path: source.to_path_buf(),
            line: 1,
            msg: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<SegmentRow>().enumerate() {
        let line = i as u64 + 2;
        let err = |msg: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            msg,
        };
        let row = row.map_err(|e| err(e.to_string()))?;
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(err("non-finite coordinates".to_string()));
        }
        if !(row.mean_density.is_finite() && row.mean_density >= 0.0) {
            return Err(err(format!("negative or non-finite density {}", row.mean_density)));
        }
        out.push(RoadSegment {
            id: row.segment_id,
            midpoint: Point::new(row.x, row.y),
            mean_density: row.mean_density,
        });
    }
    Ok(out)
}

pub fn load_density(path: &Path) -> Result<Vec<RoadSegment>> {
    let file = std::fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_density(file, path)
}

/// Densest segment within `radius` of the device, relative to the densest
/// segment overall. Zero when nothing is in range or every density is zero.
pub fn device_priority(device: &DeviceSpec, segments: &[RoadSegment], radius: f64) -> f64 {
    let global = segments.iter().map(|s| s.mean_density).fold(0.0, f64::max);
    if global <= 0.0 {
        return 0.0;
    }
    let local = segments
        .iter()
        .filter(|s| s.midpoint.distance(device.position) <= radius)
        .map(|s| s.mean_density)
        .fold(0.0, f64::max);
    (local / global).clamp(0.0, 1.0)
}

/// Copy of `scenario` with priority weights derived from `segments`.
pub fn assign_priorities(scenario: &Scenario, segments: &[RoadSegment], radius: f64) -> Result<Scenario> {
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!("priority radius must be positive, got {radius}")));
    }
    let mut out = scenario.clone();
    out.priority_weights = Some(
        scenario
            .devices
            .iter()
            .map(|d| device_priority(d, segments, radius))
            .collect(),
    );
    Ok(out)
}
