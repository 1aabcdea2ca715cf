//! Device hardware kinds, vision tasks, and the per-(kind, task) power draw
//! and processing-rate tables.
//!
//! The default table is embedded; a CSV with columns
//! `kind,task,power_w,rate_Bps` overrides individual cells.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeviceKind {
    RaspberryPi4B,
    RaspberryPi3B,
    Firefly,
    JetsonNano,
    NanoPCT4,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 5] = [
        DeviceKind::RaspberryPi4B,
        DeviceKind::RaspberryPi3B,
        DeviceKind::Firefly,
        DeviceKind::JetsonNano,
        DeviceKind::NanoPCT4,
    ];

    /// Idle draw in watts.
    pub fn standby_power(self) -> f64 {
        match self {
            DeviceKind::RaspberryPi4B => 2.65,
            DeviceKind::RaspberryPi3B => 1.69,
            DeviceKind::Firefly => 4.87,
            DeviceKind::JetsonNano => 2.82,
            DeviceKind::NanoPCT4 => 1.88,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::RaspberryPi4B => "RaspberryPi4B",
            DeviceKind::RaspberryPi3B => "RaspberryPi3B",
            DeviceKind::Firefly => "Firefly",
            DeviceKind::JetsonNano => "JetsonNano",
            DeviceKind::NanoPCT4 => "NanoPCT4",
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DeviceKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownName {
                what: "device kind",
                value: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "HAAR")]
    Haar,
    #[serde(rename = "MMOD")]
    Mmod,
    #[serde(rename = "DNN")]
    Dnn,
    Dlib,
    #[serde(rename = "YOLOv3")]
    Yolov3,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Haar,
        TaskKind::Mmod,
        TaskKind::Dnn,
        TaskKind::Dlib,
        TaskKind::Yolov3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Haar => "HAAR",
            TaskKind::Mmod => "MMOD",
            TaskKind::Dnn => "DNN",
            TaskKind::Dlib => "Dlib",
            TaskKind::Yolov3 => "YOLOv3",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownName {
                what: "task kind",
                value: s.to_string(),
            })
    }
}

/// Power draw while running a task (W) and how fast the task consumes input (B/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capability {
    pub power_w: f64,
    pub rate_bps: f64,
}

// Rows are tasks (HAAR, MMOD, DNN, Dlib, YOLOv3); columns are kinds in
// `DeviceKind::ALL` order.
const TASK_POWER_W: [[f64; 5]; 5] = [
    [2.165, 1.287, 2.352, 1.36, 3.391],
    [1.335, 1.621, 1.124, 0.92, 1.582],
    [3.234, 1.9, 2.972, 2.421, 2.595],
    [1.91, 4.38, 2.54, 1.01, 5.06],
    [3.268, 1.925, 3.07, 1.35, 2.874],
];

const PROCESSING_RATE_BPS: [[f64; 5]; 5] = [
    [74536.25, 2758.14, 4734.16, 23867.61, 1854.59],
    [12318.36, 1114.03, 1183.72, 5277.71, 949.66],
    [71731.84, 3767.51, 949.36, 40294.21, 973.1],
    [65088.52, 87894.05, 13020.39, 65264.07, 6957.73],
    [69985.94, 7066.79, 2733.97, 22230.58, 8298.13],
];

#[derive(Clone, Debug, PartialEq)]
pub struct CapabilityTable {
    cells: [[Capability; 5]; 5],
}

impl Default for CapabilityTable {
    fn default() -> Self {
        let mut cells = [[Capability {
            power_w: 0.0,
            rate_bps: 0.0,
        }; 5]; 5];
        for t in 0..5 {
            for k in 0..5 {
                cells[t][k] = Capability {
                    power_w: TASK_POWER_W[t][k],
                    rate_bps: PROCESSING_RATE_BPS[t][k],
                };
            }
        }
        Self { cells }
    }
}

#[derive(Deserialize)]
struct CapabilityRow {
    kind: String,
    task: String,
    power_w: f64,
    #[serde(rename = "rate_Bps")]
    rate_bps: f64,
}

impl CapabilityTable {
    pub fn get(&self, kind: DeviceKind, task: TaskKind) -> Capability {
        self.cells[task.index()][kind.index()]
    }

    pub fn set(&mut self, kind: DeviceKind, task: TaskKind, cap: Capability) {
        self.cells[task.index()][kind.index()] = cap;
    }

    /// Starts from the embedded table and replaces every cell named in the CSV.
    pub fn with_overrides<R: Read>(mut self, reader: R, source: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for (i, row) in rdr.deserialize::<CapabilityRow>().enumerate() {
            // header is line 1
            let line = i as u64 + 2;
            let parse_err = |msg: String| Error::Parse {
                path: source.to_path_buf(),
                line,
                msg,
            };
            let row = row.map_err(|e| parse_err(e.to_string()))?;
            let kind: DeviceKind = row.kind.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let task: TaskKind = row.task.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            if !(row.power_w.is_finite() && row.power_w >= 0.0) {
                return Err(parse_err(format!("power_w must be >= 0, got {}", row.power_w)));
            }
            if !(row.rate_bps.is_finite() && row.rate_bps > 0.0) {
                return Err(parse_err(format!("rate_Bps must be > 0, got {}", row.rate_bps)));
            }
            self.set(
                kind,
                task,
                Capability {
                    power_w: row.power_w,
                    rate_bps: row.rate_bps,
                },
            );
        }
        Ok(self)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::default().with_overrides(file, path)
    }
}
