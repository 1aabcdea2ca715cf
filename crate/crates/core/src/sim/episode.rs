use super::{DeviceState, TerminationCause, TimeSlotOutcome, UavState};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::scenario::Scenario;

/// One run of the simulator from full batteries and zero data ages until
/// the first violated constraint.
#[derive(Clone, Debug)]
pub struct Episode<'a> {
    scenario: &'a Scenario,
    uav: UavState,
    devices: Vec<DeviceState>,
    slots: u32,
    last_action: Option<usize>,
    terminated: Option<TerminationCause>,
    volumes: SimRng,
}

impl<'a> Episode<'a> {
    /// `volumes` supplies the per-slot task volume draws.
    pub fn new(scenario: &'a Scenario, volumes: SimRng) -> Self {
        Self {
            scenario,
            uav: UavState::fresh(&scenario.uav),
            devices: scenario.devices.iter().map(DeviceState::fresh).collect(),
            slots: 0,
            last_action: None,
            terminated: None,
            volumes,
        }
    }

    pub fn reset(&mut self, volumes: SimRng) {
        *self = Self::new(self.scenario, volumes);
    }

    pub fn step(&mut self, action: usize) -> Result<TimeSlotOutcome> {
        if self.terminated.is_some() {
            return Err(Error::EpisodeTerminated);
        }
        let mut outcome = super::step(
            self.scenario,
            &mut self.uav,
            &mut self.devices,
            action,
            &mut self.volumes,
        )?;
        self.slots += 1;
        outcome.slot = self.slots;
        self.last_action = Some(action);
        self.terminated = outcome.terminated;
        Ok(outcome)
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn devices(&self) -> &[DeviceState] {
        &self.devices
    }

    pub fn uav(&self) -> &UavState {
        &self.uav
    }

    /// Slots completed so far.
    pub fn slots(&self) -> u32 {
        self.slots
    }

    pub fn terminated(&self) -> Option<TerminationCause> {
        self.terminated
    }

    pub fn observation(&self) -> Observation<'_> {
        Observation {
            scenario: self.scenario,
            devices: &self.devices,
            uav: &self.uav,
            slots: self.slots,
            last_action: self.last_action,
        }
    }
}

/// Read-only view of the world handed to policies before each slot.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub scenario: &'a Scenario,
    pub devices: &'a [DeviceState],
    pub uav: &'a UavState,
    pub slots: u32,
    pub last_action: Option<usize>,
}

impl Observation<'_> {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn battery_fraction(&self, id: usize) -> f64 {
        self.devices[id].battery / self.scenario.devices[id].battery_capacity
    }

    pub fn min_battery_fraction(&self) -> f64 {
        (0..self.n_devices())
            .map(|i| self.battery_fraction(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn oldest_age(&self) -> u32 {
        self.devices.iter().map(|d| d.data_age).max().unwrap_or(0)
    }

    /// Writes the learner state: battery fractions of every device followed
    /// by every device's data age (optionally divided by the age limit).
    pub fn write_state<T: Scalar>(&self, normalize_age: bool, out: &mut [T]) {
        let n = self.n_devices();
        assert_eq!(out.len(), 2 * n, "state buffer must hold 2 * n_devices entries");
        let age_scale = if normalize_age {
            1.0 / f64::from(self.scenario.config.data_age_limit.max(1))
        } else {
            1.0
        };
        for i in 0..n {
            out[i] = T::lit(self.battery_fraction(i));
            out[n + i] = T::lit(f64::from(self.devices[i].data_age) * age_scale);
        }
    }

    pub fn state_vector<T: Scalar>(&self, normalize_age: bool) -> Vec<T> {
        let mut v = vec![T::zero(); 2 * self.n_devices()];
        self.write_state(normalize_age, &mut v);
        v
    }
}
