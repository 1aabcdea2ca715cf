//! Policy rollouts, heuristic baselines, availability sweeps and
//! first-failure statistics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dqn::{train, Activations, QNetwork, TrainConfig};
use crate::error::{Error, Result};
use crate::rewards::RewardSpec;
use crate::rng::{self, SimRng, POLICY_STREAM, ROLLOUT_STREAM};
use crate::scalar::Scalar;
use crate::scenario::{assign_outages, generate_with_table, Scenario};
use crate::sim::{CommModel, Episode, Observation, SimConfig, TerminationCause, TimeSlotOutcome, UavSpec};
use crate::tables::CapabilityTable;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Chooses which device the UAV visits next.
pub trait Policy {
    fn name(&self) -> String;

    /// Called before each rollout with the rollout seed.
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, obs: &Observation<'_>) -> usize;
}

/// Argmax of a trained Q-network.
#[derive(Clone, Debug)]
pub struct GreedyPolicy<T> {
    net: QNetwork<T>,
    normalize_age: bool,
    state: Vec<T>,
    acts: Activations<T>,
}

impl<T: Scalar> GreedyPolicy<T> {
    pub fn new(net: QNetwork<T>, normalize_age: bool) -> Self {
        Self {
            state: vec![T::zero(); net.input_dim()],
            acts: net.activations(),
            net,
            normalize_age,
        }
    }

    pub fn network(&self) -> &QNetwork<T> {
        &self.net
    }
}

impl<T: Scalar> Policy for GreedyPolicy<T> {
    fn name(&self) -> String {
        "greedy".to_string()
    }

    fn act(&mut self, obs: &Observation<'_>) -> usize {
        obs.write_state(self.normalize_age, &mut self.state);
        self.net.forward_into(&self.state, &mut self.acts);
        argmax(self.acts.output())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Baseline {
    Random,
    RoundRobin,
    OldestDataFirst,
    LowestBatteryFirst,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [
        Baseline::Random,
        Baseline::RoundRobin,
        Baseline::OldestDataFirst,
        Baseline::LowestBatteryFirst,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Random => "random",
            Baseline::RoundRobin => "round_robin",
            Baseline::OldestDataFirst => "oldest_data_first",
            Baseline::LowestBatteryFirst => "lowest_battery_first",
        }
    }

    pub fn policy(self) -> BaselinePolicy {
        BaselinePolicy {
            kind: self,
            rng: rng::stream(0, POLICY_STREAM),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::UnknownName {
                what: "policy",
                value: s.to_string(),
            })
    }
}

#[derive(Clone, Debug)]
pub struct BaselinePolicy {
    kind: Baseline,
    rng: SimRng,
}

fn oldest_data_first(obs: &Observation<'_>) -> usize {
    let ages: Vec<u32> = obs.devices.iter().map(|d| d.data_age).collect();
    argmax(&ages)
}

impl Policy for BaselinePolicy {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn reset(&mut self, seed: u64) {
        self.rng = rng::stream(seed, POLICY_STREAM);
    }

    fn act(&mut self, obs: &Observation<'_>) -> usize {
        let n = obs.n_devices();
        match self.kind {
            Baseline::Random => self.rng.random_range(0..n),
            Baseline::RoundRobin => obs.last_action.map_or(0, |a| (a + 1) % n),
            Baseline::OldestDataFirst => oldest_data_first(obs),
            Baseline::LowestBatteryFirst => {
                let mut best: Option<(usize, f64)> = None;
                for (i, d) in obs.scenario.devices.iter().enumerate() {
                    if d.has_power {
                        continue;
                    }
                    let f = obs.battery_fraction(i);
                    if best.is_none_or(|(_, b)| f < b) {
                        best = Some((i, f));
                    }
                }
                best.map_or_else(|| oldest_data_first(obs), |(i, _)| i)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub length: u32,
    pub cause: TerminationCause,
    /// Device whose constraint ended the episode; `None` when the UAV ran out.
    pub first_failure_device: Option<usize>,
    pub trace: Vec<TimeSlotOutcome>,
}

impl EpisodeResult {
    pub const TRACE_HEADER: &'static str =
        "slot,action,served,travel_s,slot_s,uav_batt_J,min_dev_batt_J,max_age,terminated";

    /// One row per slot; `served` lists device ids separated by `;`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::TRACE_HEADER)?;
        for o in &self.trace {
            let served: Vec<String> = o.served_ids.iter().map(usize::to_string).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                o.slot,
                o.action,
                served.join(";"),
                o.travel_time,
                o.slot_duration,
                o.uav_battery,
                o.min_device_battery(),
                o.max_age(),
                o.terminated.map(|c| c.name()).unwrap_or_default()
            )?;
        }
        Ok(())
    }
}

/// Runs `policy` from a fresh episode until termination. Task volumes come
/// from the rollout stream of `seed`.
pub fn rollout(scenario: &Scenario, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeResult> {
    scenario.validate()?;
    let mut episode = Episode::new(scenario, rng::stream(seed, ROLLOUT_STREAM));
    policy.reset(seed);
    let mut trace = Vec::new();
    loop {
        let action = policy.act(&episode.observation());
        let outcome = episode.step(action)?;
        let done = outcome.terminated;
        trace.push(outcome);
        if let Some(cause) = done {
            return Ok(EpisodeResult {
                length: episode.slots(),
                cause,
                first_failure_device: cause.failed_device(),
                trace,
            });
        }
    }
}

/// Parameters for generating fresh scenarios.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorldTemplate {
    pub config: SimConfig,
    pub comm: CommModel,
    pub uav: UavSpec,
    pub table: CapabilityTable,
}

impl WorldTemplate {
    pub fn generate(&self, seed: u64) -> Result<Scenario> {
        generate_with_table(seed, &self.config, &self.comm, &self.uav, &self.table)
    }
}

/// Learner settings shared by sweep cells and failure-statistics runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub reward: RewardSpec,
    pub train: TrainConfig,
    /// Worker threads; results do not depend on this.
    pub workers: usize,
}

fn run_jobs<J, R, F>(workers: usize, jobs: &[J], f: F) -> Result<Vec<R>>
where
    J: Sync,
    R: Send,
    F: Fn(&J) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}

/// Trains on `scenario` and evaluates the greedy policy with the same seed.
pub fn train_and_rollout<T: Scalar>(scenario: &Scenario, exp: &Experiment, seed: u64) -> Result<EpisodeResult> {
    let (net, _) = train::<T>(scenario, exp.reward, &exp.train, seed)?;
    let mut policy = GreedyPolicy::new(net, exp.train.normalize_age);
    rollout(scenario, &mut policy, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub power: usize,
    pub comm: usize,
    pub seed: u64,
    pub length: u32,
    pub cause: String,
    pub first_failure: Option<usize>,
}

impl RunRecord {
    fn new(power: usize, comm: usize, seed: u64, r: &EpisodeResult) -> Self {
        Self {
            power,
            comm,
            seed,
            length: r.length,
            cause: r.cause.name().to_string(),
            first_failure: r.first_failure_device,
        }
    }
}

pub fn write_runs_csv<W: Write>(runs: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "power,comm,seed,length,cause,first_failure")?;
    for r in runs {
        let ff = r.first_failure.map(|d| d.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{},{}", r.power, r.comm, r.seed, r.length, r.cause, ff)?;
    }
    Ok(())
}

/// Mean greedy episode length per (power, comm) availability cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub power_counts: Vec<usize>,
    pub comm_counts: Vec<usize>,
    /// `means[row][col]` for `power_counts[row]`, `comm_counts[col]`.
    pub means: Vec<Vec<f64>>,
    /// Standard error of each mean (zero with a single seed).
    pub std_errs: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn cell(&self, power: usize, comm: usize) -> Option<f64> {
        let r = self.power_counts.iter().position(|&p| p == power)?;
        let c = self.comm_counts.iter().position(|&x| x == comm)?;
        Some(self.means[r][c])
    }

    pub fn std_err(&self, power: usize, comm: usize) -> Option<f64> {
        let r = self.power_counts.iter().position(|&p| p == power)?;
        let c = self.comm_counts.iter().position(|&x| x == comm)?;
        Some(self.std_errs[r][c])
    }

    pub fn max(&self) -> f64 {
        self.means.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Matrix layout: first column is the power count, one column per comm count.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let head: Vec<String> = self.comm_counts.iter().map(|c| format!("comm_{c}")).collect();
        writeln!(w, "power,{}", head.join(","))?;
        for (p, row) in self.power_counts.iter().zip(&self.means) {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{p},{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<RunRecord>,
    pub table: SweepTable,
}

/// For every (power, comm) cell and seed: generate, assign outages, train,
/// roll out greedily. Rows come back in grid-then-seed order.
pub fn sweep<T: Scalar>(
    world: &WorldTemplate,
    power_counts: &[usize],
    comm_counts: &[usize],
    seeds: &[u64],
    exp: &Experiment,
) -> Result<SweepReport> {
    let jobs: Vec<(usize, usize, u64)> = power_counts
        .iter()
        .flat_map(|&p| comm_counts.iter().flat_map(move |&c| seeds.iter().map(move |&s| (p, c, s))))
        .collect();
    let runs = run_jobs(exp.workers, &jobs, |&(p, c, seed)| {
        let base = world.generate(seed)?;
        let scenario = assign_outages(&base, p, c, seed)?;
        let result = train_and_rollout::<T>(&scenario, exp, seed)?;
        Ok(RunRecord::new(p, c, seed, &result))
    })?;

    let mut means = vec![vec![0.0; comm_counts.len()]; power_counts.len()];
    let mut std_errs = means.clone();
    for (r, &p) in power_counts.iter().enumerate() {
        for (c, &cc) in comm_counts.iter().enumerate() {
            let lens: Vec<f64> = runs
                .iter()
                .filter(|x| x.power == p && x.comm == cc)
                .map(|x| f64::from(x.length))
                .collect();
            let (m, se) = mean_and_std_err(&lens);
            means[r][c] = m;
            std_errs[r][c] = se;
        }
    }
    Ok(SweepReport {
        runs,
        table: SweepTable {
            power_counts: power_counts.to_vec(),
            comm_counts: comm_counts.to_vec(),
            means,
            std_errs,
        },
    })
}

pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// How often each device was the first to fail.
#[derive(Clone, Debug, PartialEq)]
pub struct FailureTally {
    pub counts: Vec<u64>,
}

impl FailureTally {
    pub fn new(n_devices: usize) -> Self {
        Self {
            counts: vec![0; n_devices],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "device_id,failure_count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailureReport {
    pub runs: Vec<RunRecord>,
    pub tally: FailureTally,
}

/// Repeats outage assignment, training and greedy rollout on a fixed
/// device layout, tallying which device fails first. Run `r` uses seed
/// `base_seed + r`.
pub fn failure_stats<T: Scalar>(
    base: &Scenario,
    n_power: usize,
    n_comm: usize,
    n_runs: usize,
    base_seed: u64,
    exp: &Experiment,
) -> Result<FailureReport> {
    let seeds: Vec<u64> = (0..n_runs as u64).map(|r| base_seed.wrapping_add(r)).collect();
    let runs = run_jobs(exp.workers, &seeds, |&seed| {
        let scenario = assign_outages(base, n_power, n_comm, seed)?;
        let result = train_and_rollout::<T>(&scenario, exp, seed)?;
        Ok(RunRecord::new(n_power, n_comm, seed, &result))
    })?;
    let mut tally = FailureTally::new(base.n_devices());
    for id in runs.iter().filter_map(|r| r.first_failure) {
        tally.counts[id] += 1;
    }
    Ok(FailureReport { runs, tally })
}
