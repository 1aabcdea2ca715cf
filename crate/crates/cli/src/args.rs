use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use uavedge::evac::DEFAULT_PRIORITY_RADIUS;
use uavedge::{RewardId, RewardSpec, TrainConfig};

#[derive(Debug, Parser, Serialize)]
#[command(name = "uavedge", version, about = "UAV-assisted edge computing simulator and DQN trainer")]
pub struct Cli {
    /// Master seed for scenario generation, training and rollouts.
    #[arg(long, global = true, default_value_t = 0, env = "UAVEDGE_SEED")]
    pub seed: u64,
    /// Directory receiving every artifact and the run manifest.
    #[arg(long, global = true, default_value = ".", env = "UAVEDGE_OUT_DIR")]
    pub out_dir: PathBuf,
    /// Worker threads for sweep and failstats; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1, env = "UAVEDGE_WORKERS")]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Generate a scenario file.
    Generate(GenerateArgs),
    /// Train a Q-network on a scenario.
    Train(TrainArgs),
    /// Roll out a trained network or a baseline policy.
    Eval(EvalArgs),
    /// Train and evaluate over a grid of power/comm availability counts.
    Sweep(SweepArgs),
    /// Tally first-failure devices over repeated outage draws.
    Failstats(FailstatsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PriorityArgs {
    /// Road density CSV (`segment_id,x,y,mean_density`) for evacuation priorities.
    #[arg(long)]
    pub priority_file: Option<PathBuf>,
    /// Meters within which a road segment counts as near a device.
    #[arg(long, default_value_t = DEFAULT_PRIORITY_RADIUS)]
    pub priority_radius: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// Devices with a power supply.
    #[arg(long)]
    pub power: usize,
    /// Devices with a communication channel.
    #[arg(long)]
    pub comm: usize,
    /// Output path, relative to the output directory.
    #[arg(short, long, default_value = "scenario.json")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub devices: usize,
    /// Also serve every device within signal range of the hover point.
    #[arg(long)]
    pub serve_all_in_range: bool,
    /// CSV overriding device capabilities (`kind,task,power_w,rate_Bps`).
    #[arg(long)]
    pub device_table: Option<PathBuf>,
    #[command(flatten)]
    pub priority: PriorityArgs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Args, Serialize)]
pub struct LearnerArgs {
    #[arg(long, default_value = "U_logAoverO")]
    pub reward: RewardId,
    /// Scale of the evacuation priority bonus.
    #[arg(long, default_value_t = 1.0)]
    pub priority_kappa: f64,
    /// Environment steps; the default depends on the command.
    #[arg(long, env = "UAVEDGE_ITERS")]
    pub iters: Option<u64>,
    #[arg(long, default_value_t = 0.98)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0071)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 50_000)]
    pub buffer: usize,
    /// Gradient steps between target-network syncs.
    #[arg(long, default_value_t = 1_000)]
    pub target_sync: u64,
    #[arg(long, default_value_t = 1_000)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0.35)]
    pub exploration_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    pub min_epsilon: f64,
    /// Gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = 10.0)]
    pub max_grad_norm: f64,
    /// Scale data ages to [0, 1] in the network input.
    #[arg(long)]
    pub normalize_age: bool,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
}

impl LearnerArgs {
    pub fn train_config(&self, default_iters: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch,
            gamma: self.gamma,
            learning_rate: self.lr,
            iterations: self.iters.unwrap_or(default_iters),
            exploration_fraction: self.exploration_fraction,
            min_epsilon: self.min_epsilon,
            buffer_capacity: self.buffer,
            target_sync_interval: self.target_sync,
            warmup: self.warmup,
            max_grad_norm: (self.max_grad_norm > 0.0).then_some(self.max_grad_norm),
            normalize_age: self.normalize_age,
            ..TrainConfig::default()
        }
    }

    pub fn reward_spec(&self) -> RewardSpec {
        RewardSpec {
            id: self.reward,
            kappa: self.priority_kappa,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Scenario file.
    #[arg(short, long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub priority: PriorityArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Scenario file.
    #[arg(short, long)]
    pub scenario: PathBuf,
    /// Weights file written by `train`.
    #[arg(long, conflicts_with = "policy", required_unless_present = "policy")]
    pub weights: Option<PathBuf>,
    /// Baseline policy instead of a trained network.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Availability counts used for both the power and the comm axis.
    #[arg(long, value_delimiter = ',', default_value = "12,10,8,6,4")]
    pub grid: Vec<usize>,
    /// Seeds per cell, counted up from the master seed.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FailstatsArgs {
    /// Device layout; generated from the master seed when absent.
    #[arg(short, long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    /// Devices without a power supply in every run.
    #[arg(long, default_value_t = 4)]
    pub power_out: usize,
    /// Devices without a communication channel in every run.
    #[arg(long, default_value_t = 6)]
    pub comm_out: usize,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub priority: PriorityArgs,
}
