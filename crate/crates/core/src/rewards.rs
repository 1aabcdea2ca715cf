//! Per-slot reward functions.
//!
//! Logarithmic variants use `ln(1 + x)` for ages and slot counts and clamp
//! the battery fraction at `1e-6`, so every reward is finite.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const MIN_BATTERY_FRACTION: f64 = 1e-6;

/// Quantities a reward may depend on, observed for one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardInputs {
    /// Data age of the visited device when the UAV arrived.
    pub visited_age: f64,
    /// Slots the UAV has completed, including this one.
    pub uav_slots: f64,
    /// Smallest remaining battery fraction over all devices.
    pub min_battery_fraction: f64,
    /// Oldest data age over all devices when the UAV arrived.
    pub oldest_age: f64,
    /// Priority of the visited device; `None` outside priority mode.
    pub priority_weight: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RewardId {
    /// `A`
    Age,
    /// `U`
    UavSlots,
    /// `M`
    MinBattery,
    /// `-O`
    NegOldest,
    /// `A + U + M - O`
    Sum,
    LogAge,
    LogUavSlots,
    LogMinBattery,
    NegLogOldest,
    /// `log A + log U + log M - log O`
    LogSum,
    /// `U + log(A / O)`
    SlotsPlusLogAgeRatio,
}

impl RewardId {
    pub const ALL: [RewardId; 11] = [
        RewardId::Age,
        RewardId::UavSlots,
        RewardId::MinBattery,
        RewardId::NegOldest,
        RewardId::Sum,
        RewardId::LogAge,
        RewardId::LogUavSlots,
        RewardId::LogMinBattery,
        RewardId::NegLogOldest,
        RewardId::LogSum,
        RewardId::SlotsPlusLogAgeRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RewardId::Age => "A",
            RewardId::UavSlots => "U",
            RewardId::MinBattery => "M",
            RewardId::NegOldest => "negO",
            RewardId::Sum => "sum",
            RewardId::LogAge => "logA",
            RewardId::LogUavSlots => "logU",
            RewardId::LogMinBattery => "logM",
            RewardId::NegLogOldest => "neglogO",
            RewardId::LogSum => "logsum",
            RewardId::SlotsPlusLogAgeRatio => "U_logAoverO",
        }
    }

    pub fn valid_ids() -> String {
        Self::ALL.map(RewardId::as_str).join(", ")
    }
}

impl fmt::Display for RewardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownReward {
                id: s.to_string(),
                valid: Self::valid_ids(),
            })
    }
}

impl Serialize for RewardId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RewardId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub id: RewardId,
    /// Scale of the priority bonus.
    pub kappa: f64,
}

impl RewardSpec {
    pub fn new(id: RewardId) -> Self {
        Self { id, kappa: 1.0 }
    }
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self::new(RewardId::SlotsPlusLogAgeRatio)
    }
}

pub fn compute_reward(spec: &RewardSpec, inputs: &RewardInputs) -> f64 {
    let a = inputs.visited_age;
    let u = inputs.uav_slots;
    let m = inputs.min_battery_fraction;
    let o = inputs.oldest_age;
    let ln_m = m.max(MIN_BATTERY_FRACTION).ln();
    let base = match spec.id {
        RewardId::Age => a,
        RewardId::UavSlots => u,
        RewardId::MinBattery => m,
        RewardId::NegOldest => -o,
        RewardId::Sum => a + u + m - o,
        RewardId::LogAge => a.ln_1p(),
        RewardId::LogUavSlots => u.ln_1p(),
        RewardId::LogMinBattery => ln_m,
        RewardId::NegLogOldest => -o.ln_1p(),
        RewardId::LogSum => a.ln_1p() + u.ln_1p() + ln_m - o.ln_1p(),
        RewardId::SlotsPlusLogAgeRatio => u + ((a + 1.0) / (o + 1.0)).ln(),
    };
    base + inputs.priority_weight.map_or(0.0, |w| spec.kappa * w)
}
