//! Seeded scenario generation, outage assignment and the `scenario.json`
//! file format.

use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, OUTAGE_STREAM, SCENARIO_STREAM};
use crate::sim::{CommModel, DeviceSpec, Point, SimConfig, UavSpec};
use crate::tables::{CapabilityTable, DeviceKind, TaskKind};

pub const SCENARIO_FORMAT_VERSION: &str = "uavedge-scenario/1";

/// Device battery capacities are drawn uniformly from this range (J).
pub const DEVICE_BATTERY_RANGE: (f64, f64) = (50_000.0, 80_000.0);

/// A complete reproducible world.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub config: SimConfig,
    pub comm: CommModel,
    pub uav: UavSpec,
    pub devices: Vec<DeviceSpec>,
    pub seed: u64,
    /// Per-device evacuation priority in `[0, 1]`; `None` disables the
    /// priority bonus.
    pub priority_weights: Option<Vec<f64>>,
}

impl Scenario {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    /// Priority weight of `id` when priority mode is active.
    pub fn priority_weight(&self, id: usize) -> Option<f64> {
        self.priority_weights.as_ref().map(|w| w[id])
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.devices.len() != self.config.n_devices {
            return bad(format!(
                "config.n_devices = {} but {} devices listed",
                self.config.n_devices,
                self.devices.len()
            ));
        }
        let (cap_lo, cap_hi) = DEVICE_BATTERY_RANGE;
        for (i, d) in self.devices.iter().enumerate() {
            if d.id != i {
                return bad(format!("device at index {i} has id {}", d.id));
            }
            if !self.config.region.contains(d.position) {
                return bad(format!("device {i} at ({}, {}) lies outside the region", d.position.x, d.position.y));
            }
            if !(cap_lo..=cap_hi).contains(&d.battery_capacity) {
                return bad(format!(
                    "device {i} battery capacity {} J outside [{cap_lo}, {cap_hi}]",
                    d.battery_capacity
                ));
            }
            if !(d.task_power >= 0.0 && d.processing_rate > 0.0) {
                return bad(format!("device {i} has non-physical power/rate"));
            }
        }
        if let Some(w) = &self.priority_weights {
            if w.len() != self.devices.len() {
                return bad(format!("{} priority weights for {} devices", w.len(), self.devices.len()));
            }
            if let Some(x) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return bad(format!("priority weight {x} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&ScenarioFile::from(self))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario(&CapabilityTable::default())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Generates a scenario with every device powered and connected, using the
/// embedded capability table.
pub fn generate(seed: u64, config: &SimConfig, comm: &CommModel, uav: &UavSpec) -> Result<Scenario> {
    generate_with_table(seed, config, comm, uav, &CapabilityTable::default())
}

pub fn generate_with_table(
    seed: u64,
    config: &SimConfig,
    comm: &CommModel,
    uav: &UavSpec,
    table: &CapabilityTable,
) -> Result<Scenario> {
    config.validate()?;
    let mut rng = rng::stream(seed, SCENARIO_STREAM);
    let (cap_lo, cap_hi) = DEVICE_BATTERY_RANGE;
    let devices = (0..config.n_devices)
        .map(|id| {
            let x = rng.random_range(0.0..=config.region.width);
            let y = rng.random_range(0.0..=config.region.height);
            let kind = DeviceKind::ALL[rng.random_range(0..DeviceKind::ALL.len())];
            let task = TaskKind::ALL[rng.random_range(0..TaskKind::ALL.len())];
            let capacity = rng.random_range(cap_lo..=cap_hi);
            DeviceSpec::from_table(id, kind, task, Point::new(x, y), capacity, table)
        })
        .collect();
    Ok(Scenario {
        config: config.clone(),
        comm: *comm,
        uav: *uav,
        devices,
        seed,
        priority_weights: None,
    })
}

/// Keeps power on exactly `n_power` devices and communication on exactly
/// `n_comm` devices; the two sets are drawn independently, uniformly without
/// replacement.
pub fn assign_outages(scenario: &Scenario, n_power: usize, n_comm: usize, seed: u64) -> Result<Scenario> {
    let n = scenario.n_devices();
    for (what, value) in [("power count", n_power), ("comm count", n_comm)] {
        if value > n {
            return Err(Error::CountOutOfRange { what, value, max: n });
        }
    }
    let mut rng = rng::stream(seed, OUTAGE_STREAM);
    let powered = index::sample(&mut rng, n, n_power);
    let connected = index::sample(&mut rng, n, n_comm);
    let mut out = scenario.clone();
    for d in &mut out.devices {
        d.has_power = false;
        d.has_comm = false;
    }
    for i in powered.iter() {
        out.devices[i].has_power = true;
    }
    for i in connected.iter() {
        out.devices[i].has_comm = true;
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    version: String,
    seed: u64,
    config: SimConfig,
    comm: CommModel,
    uav: UavSpec,
    devices: Vec<DeviceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority_weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DeviceRecord {
    id: usize,
    kind: DeviceKind,
    task: TaskKind,
    x: f64,
    y: f64,
    #[serde(rename = "capacity_J")]
    capacity_j: f64,
    has_power: bool,
    has_comm: bool,
    // Absent in hand-written files: filled from the embedded table.
    #[serde(rename = "power_W", default, skip_serializing_if = "Option::is_none")]
    power_w: Option<f64>,
    #[serde(rename = "rate_Bps", default, skip_serializing_if = "Option::is_none")]
    rate_bps: Option<f64>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        Self {
            version: SCENARIO_FORMAT_VERSION.to_string(),
            seed: s.seed,
            config: s.config.clone(),
            comm: s.comm,
            uav: s.uav,
            devices: s
                .devices
                .iter()
                .map(|d| DeviceRecord {
                    id: d.id,
                    kind: d.kind,
                    task: d.task,
                    x: d.position.x,
                    y: d.position.y,
                    capacity_j: d.battery_capacity,
                    has_power: d.has_power,
                    has_comm: d.has_comm,
                    power_w: Some(d.task_power),
                    rate_bps: Some(d.processing_rate),
                })
                .collect(),
            priority_weights: s.priority_weights.clone(),
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self, table: &CapabilityTable) -> Result<Scenario> {
        if self.version != SCENARIO_FORMAT_VERSION {
            return Err(Error::InvalidScenario(format!(
                "unsupported format version `{}` (expected `{SCENARIO_FORMAT_VERSION}`)",
                self.version
            )));
        }
        let devices = self
            .devices
            .into_iter()
            .map(|r| {
                let cap = table.get(r.kind, r.task);
                DeviceSpec {
                    id: r.id,
                    kind: r.kind,
                    task: r.task,
                    position: Point::new(r.x, r.y),
                    battery_capacity: r.capacity_j,
                    has_power: r.has_power,
                    has_comm: r.has_comm,
                    task_power: r.power_w.unwrap_or(cap.power_w),
                    processing_rate: r.rate_bps.unwrap_or(cap.rate_bps),
                }
            })
            .collect();
        let scenario = Scenario {
            config: self.config,
            comm: self.comm,
            uav: self.uav,
            devices,
            seed: self.seed,
            priority_weights: self.priority_weights,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
