//! Time-slot dynamics of the UAV and the edge devices.

mod episode;
mod physics;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tables::{CapabilityTable, DeviceKind, TaskKind};

pub use episode::{Episode, Observation};
pub use physics::{
    channel_gain, devices_in_range, local_processing_energy, local_processing_time,
    offload_energy, step, transmission_rate, travel,
};

/// Horizontal position in meters; the region origin is a corner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

/// Static world parameters shared by every slot of every episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub region: Region,
    pub n_devices: usize,
    /// Per-slot task volume bounds in bytes, sampled uniformly.
    pub task_volume_min: f64,
    pub task_volume_max: f64,
    /// Largest tolerated data age in slots; exceeding it ends the episode.
    pub data_age_limit: u32,
    /// Local processing time is capped at this many seconds.
    pub slot_processing_cap: f64,
    /// Bytes of result data a device with a live link sends each slot.
    pub result_payload: f64,
    /// Serve every device within signal range of the hover point instead of
    /// only the visited one.
    #[serde(default)]
    pub serve_all_in_range: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            region: Region {
                width: 800.0,
                height: 800.0,
            },
            n_devices: 12,
            task_volume_min: 2.0e6,
            task_volume_max: 4.0e6,
            data_age_limit: 10,
            slot_processing_cap: 600.0,
            result_payload: 1024.0,
            serve_all_in_range: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidConfig(m.to_string()));
        if !(self.region.width > 0.0 && self.region.height > 0.0) {
            return bad("region dimensions must be positive");
        }
        if self.n_devices == 0 {
            return bad("n_devices must be at least 1");
        }
        if !(self.task_volume_min > 0.0 && self.task_volume_min <= self.task_volume_max) {
            return bad("task volume range must satisfy 0 < min <= max");
        }
        if !(self.slot_processing_cap > 0.0) {
            return bad("slot_processing_cap must be positive");
        }
        if !(self.result_payload >= 0.0) {
            return bad("result_payload must be non-negative");
        }
        Ok(())
    }
}

/// Air-to-ground link parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommModel {
    /// Hz.
    pub bandwidth: f64,
    /// Reference gain at 1 m (-50 dB).
    pub beta0: f64,
    pub theta: f64,
    /// W (-100 dBm).
    pub noise_power: f64,
}

impl Default for CommModel {
    fn default() -> Self {
        Self {
            bandwidth: 2.0e7,
            beta0: 1.0e-5,
            theta: 4.0,
            noise_power: 1.0e-13,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UavSpec {
    /// m/s.
    pub speed: f64,
    pub fly_power: f64,
    pub hover_power: f64,
    pub signal_range: f64,
    pub altitude: f64,
    /// J.
    pub battery_capacity: f64,
    /// Transmit power of the device side of the link, W.
    pub tx_power: f64,
}

impl Default for UavSpec {
    fn default() -> Self {
        Self {
            speed: 5.0,
            fly_power: 150.0,
            hover_power: 80.0,
            signal_range: 65.0,
            altitude: 10.0,
            battery_capacity: 1.6e6,
            tx_power: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceSpec {
    pub id: usize,
    pub kind: DeviceKind,
    pub task: TaskKind,
    pub position: Point,
    /// J.
    pub battery_capacity: f64,
    pub has_power: bool,
    pub has_comm: bool,
    /// W drawn while running the task, on top of standby.
    pub task_power: f64,
    /// B/s.
    pub processing_rate: f64,
}

impl DeviceSpec {
    /// Builds a spec whose power and rate come from `table`, with power and
    /// communication both available.
    pub fn from_table(
        id: usize,
        kind: DeviceKind,
        task: TaskKind,
        position: Point,
        battery_capacity: f64,
        table: &CapabilityTable,
    ) -> Self {
        let cap = table.get(kind, task);
        Self {
            id,
            kind,
            task,
            position,
            battery_capacity,
            has_power: true,
            has_comm: true,
            task_power: cap.power_w,
            processing_rate: cap.rate_bps,
        }
    }

    pub fn standby_power(&self) -> f64 {
        self.kind.standby_power()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceState {
    /// J remaining.
    pub battery: f64,
    /// Slots since this device last delivered results.
    pub data_age: u32,
}

impl DeviceState {
    pub fn fresh(spec: &DeviceSpec) -> Self {
        Self {
            battery: spec.battery_capacity,
            data_age: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UavState {
    pub position: Point,
    pub battery: f64,
}

impl UavState {
    pub fn fresh(spec: &UavSpec) -> Self {
        Self {
            position: Point::ORIGIN,
            battery: spec.battery_capacity,
        }
    }
}

/// Why an episode ended. Checked in this order: device battery, data age,
/// UAV battery; the lowest device id wins within a category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationCause {
    DeviceBatteryDepleted(usize),
    DataExpired(usize),
    UavBatteryDepleted,
}

impl TerminationCause {
    pub fn failed_device(self) -> Option<usize> {
        match self {
            TerminationCause::DeviceBatteryDepleted(id) | TerminationCause::DataExpired(id) => {
                Some(id)
            }
            TerminationCause::UavBatteryDepleted => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TerminationCause::DeviceBatteryDepleted(_) => "DeviceBatteryDepleted",
            TerminationCause::DataExpired(_) => "DataExpired",
            TerminationCause::UavBatteryDepleted => "UavBatteryDepleted",
        }
    }
}

impl fmt::Display for TerminationCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that happened during one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSlotOutcome {
    /// 1-based index of this slot within the episode.
    pub slot: u32,
    pub action: usize,
    /// Devices offloaded this slot, ascending.
    pub served_ids: Vec<usize>,
    /// Bytes of task data each device had this slot.
    pub volumes: Vec<f64>,
    pub travel_time: f64,
    pub travel_energy: f64,
    /// `(device id, seconds)` for every served device, in offload order.
    pub offload_times: Vec<(usize, f64)>,
    pub slot_duration: f64,
    /// Energy drawn from each device battery (zero for mains-powered devices).
    pub per_device_energy: Vec<f64>,
    /// Battery after the slot, clamped at zero.
    pub per_device_battery: Vec<f64>,
    pub per_device_age: Vec<u32>,
    pub uav_energy: f64,
    /// UAV battery after the slot, clamped at zero.
    pub uav_battery: f64,
    pub terminated: Option<TerminationCause>,
}

impl TimeSlotOutcome {
    pub fn min_device_battery(&self) -> f64 {
        self.per_device_battery.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_age(&self) -> u32 {
        self.per_device_age.iter().copied().max().unwrap_or(0)
    }
}
