use rand::Rng;

use super::{
    CommModel, DeviceSpec, DeviceState, Point, TerminationCause, TimeSlotOutcome, UavSpec,
    UavState,
};
use crate::channel;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Channel gain at link distance `l` meters.
pub fn channel_gain(l: f64, comm: &CommModel) -> Result<f64> {
    channel::path_loss_gain(comm.beta0, comm.theta, l)
}

/// Uplink rate in bit/s from a device to the UAV at link distance `l` meters.
pub fn transmission_rate(l: f64, comm: &CommModel, uav: &UavSpec) -> Result<f64> {
    let gain = channel_gain(l, comm)?;
    Ok(channel::shannon_rate(comm.bandwidth, uav.tx_power, gain, comm.noise_power))
}

/// Seconds spent processing `volume` bytes locally, capped at `cap`.
pub fn local_processing_time(spec: &DeviceSpec, volume: f64, cap: f64) -> f64 {
    (volume / spec.processing_rate).min(cap)
}

/// Energy of a slot in which the device processes its own task for `t_proc`
/// seconds and idles for the rest.
pub fn local_processing_energy(spec: &DeviceSpec, t_proc: f64, t_slot: f64) -> Result<f64> {
    if !(0.0..=t_slot).contains(&t_proc) {
        return Err(Error::Contract(format!(
            "processing time {t_proc} s outside slot of {t_slot} s"
        )));
    }
    let standby = spec.standby_power();
    Ok((spec.task_power + standby) * t_proc + standby * (t_slot - t_proc))
}

/// Energy of a slot in which the device hands its task to the UAV: transmit
/// for `t_tx` seconds on top of standby for the whole slot.
pub fn offload_energy(uav: &UavSpec, spec: &DeviceSpec, t_tx: f64, t_slot: f64) -> Result<f64> {
    if !(0.0..=t_slot).contains(&t_tx) {
        return Err(Error::Contract(format!(
            "transmission time {t_tx} s outside slot of {t_slot} s"
        )));
    }
    Ok(uav.tx_power * t_tx + spec.standby_power() * t_slot)
}

/// Straight-line flight at constant speed: `(seconds, joules)`.
pub fn travel(from: Point, to: Point, uav: &UavSpec) -> (f64, f64) {
    let time = from.distance(to) / uav.speed;
    (time, uav.fly_power * time)
}

fn link_distance(hover: Point, device: Point, uav: &UavSpec) -> f64 {
    hover.distance(device).hypot(uav.altitude)
}

/// Ids of every device whose slant distance to a UAV hovering at `altitude`
/// above `hover_point` is within signal range, ascending.
pub fn devices_in_range(hover_point: Point, uav: &UavSpec, devices: &[DeviceSpec]) -> Vec<usize> {
    devices
        .iter()
        .filter(|d| link_distance(hover_point, d.position, uav) <= uav.signal_range)
        .map(|d| d.id)
        .collect()
}

/// Advances one time slot: the UAV flies to and hovers above `action`'s
/// device, which offloads (with every other device in range when
/// `serve_all_in_range` is set), the rest process locally, and batteries,
/// data ages and termination are updated in place.
///
/// Callers must not step again after a slot that reports `terminated`;
/// [`super::Episode`] enforces this.
pub fn step<R: Rng + ?Sized>(
    scenario: &Scenario,
    uav_state: &mut UavState,
    device_states: &mut [DeviceState],
    action: usize,
    rng: &mut R,
) -> Result<TimeSlotOutcome> {
    let n = scenario.devices.len();
    if action >= n {
        return Err(Error::ActionOutOfRange {
            action,
            n_devices: n,
        });
    }
    if device_states.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: device_states.len(),
        });
    }
    let cfg = &scenario.config;
    let uav = &scenario.uav;

    let volumes: Vec<f64> = (0..n)
        .map(|_| rng.random_range(cfg.task_volume_min..=cfg.task_volume_max))
        .collect();

    let hover = scenario.devices[action].position;
    let (travel_time, travel_energy) = travel(uav_state.position, hover, uav);

    let served_ids = if cfg.serve_all_in_range {
        devices_in_range(hover, uav, &scenario.devices)
    } else {
        vec![action]
    };
    let mut served = vec![false; n];
    let mut tx_time = vec![0.0; n];
    let mut offload_times = Vec::with_capacity(served_ids.len());
    let order = std::iter::once(action).chain(served_ids.iter().copied().filter(|&i| i != action));
    for id in order {
        let d = &scenario.devices[id];
        let rate = transmission_rate(link_distance(hover, d.position, uav), &scenario.comm, uav)?;
        let t = volumes[id] * 8.0 / rate;
        served[id] = true;
        tx_time[id] = t;
        offload_times.push((id, t));
    }

    let proc_time: Vec<f64> = scenario
        .devices
        .iter()
        .map(|d| {
            if served[d.id] {
                0.0
            } else {
                local_processing_time(d, volumes[d.id], cfg.slot_processing_cap)
            }
        })
        .collect();

    let uav_busy = travel_time + offload_times.iter().map(|&(_, t)| t).sum::<f64>();
    let slot_duration = proc_time.iter().copied().fold(uav_busy, f64::max);

    let mut per_device_energy = vec![0.0; n];
    let mut per_device_battery = vec![0.0; n];
    let mut per_device_age = vec![0; n];
    let mut battery_failure = None;
    let mut age_failure = None;
    for (d, state) in scenario.devices.iter().zip(device_states.iter_mut()) {
        if !d.has_power {
            let e = if served[d.id] {
                offload_energy(uav, d, tx_time[d.id], slot_duration)?
            } else {
                local_processing_energy(d, proc_time[d.id], slot_duration)?
            };
            per_device_energy[d.id] = e;
            state.battery -= e;
            if state.battery < 0.0 {
                state.battery = 0.0;
                battery_failure.get_or_insert(d.id);
            }
        }
        state.data_age = if served[d.id] || d.has_comm {
            0
        } else {
            state.data_age + 1
        };
        if state.data_age > cfg.data_age_limit {
            age_failure.get_or_insert(d.id);
        }
        per_device_battery[d.id] = state.battery;
        per_device_age[d.id] = state.data_age;
    }

    let uav_energy = travel_energy + uav.hover_power * (slot_duration - travel_time);
    uav_state.position = hover;
    uav_state.battery -= uav_energy;
    let uav_failed = uav_state.battery <= 0.0;
    if uav_failed {
        uav_state.battery = 0.0;
    }

    let terminated = battery_failure
        .map(TerminationCause::DeviceBatteryDepleted)
        .or(age_failure.map(TerminationCause::DataExpired))
        .or(uav_failed.then_some(TerminationCause::UavBatteryDepleted));

    Ok(TimeSlotOutcome {
        slot: 0,
        action,
        served_ids,
        volumes,
        travel_time,
        travel_energy,
        offload_times,
        slot_duration,
        per_device_energy,
        per_device_battery,
        per_device_age,
        uav_energy,
        uav_battery: uav_state.battery,
        terminated,
    })
}
