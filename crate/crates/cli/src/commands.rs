use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::json;
use uavedge::dqn::{train, WeightsFile};
use uavedge::eval::{
    failure_stats, rollout, sweep, write_runs_csv, Experiment, FailureReport, SweepReport, WorldTemplate,
};
use uavedge::evac::{assign_priorities, load_density};
use uavedge::scenario::{assign_outages, generate_with_table};
use uavedge::sim::SimConfig;
use uavedge::tables::CapabilityTable;
use uavedge::{Baseline, EpisodeResult, GreedyPolicy, Policy, Scalar, Scenario};

use crate::args::{Cli, Command, EvalArgs, FailstatsArgs, GenerateArgs, LearnerArgs, Precision, PriorityArgs, SweepArgs, TrainArgs};
use crate::manifest::ManifestBuilder;

pub const TRAIN_ITERS: u64 = 1_000_000;
pub const SWEEP_ITERS: u64 = 200_000;
pub const FAILSTATS_ITERS: u64 = 300_000;

#[derive(Debug)]
pub enum CliError {
    /// Flags that parse but make no sense together; exit code 1.
    Usage(String),
    /// Unreadable or invalid input data; exit code 2.
    Data(anyhow::Error),
}

impl From<uavedge::Error> for CliError {
    fn from(e: uavedge::Error) -> Self {
        match e {
            uavedge::Error::CountOutOfRange { .. }
            | uavedge::Error::UnknownReward { .. }
            | uavedge::Error::UnknownName { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CmdResult<T = ()> = Result<T, CliError>;

pub fn run(cli: &Cli) -> CmdResult {
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating output directory {}", cli.out_dir.display()))?;
    match &cli.command {
        Command::Generate(a) => cmd_generate(cli, a),
        Command::Train(a) => cmd_train(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Failstats(a) => cmd_failstats(cli, a),
    }
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn with_priorities(scenario: Scenario, p: &PriorityArgs) -> CmdResult<Scenario> {
    match &p.priority_file {
        Some(path) => {
            let segments = load_density(path)?;
            Ok(assign_priorities(&scenario, &segments, p.priority_radius)?)
        }
        None => Ok(scenario),
    }
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> CmdResult {
    let manifest = ManifestBuilder::start("generate");
    for (flag, v) in [("--power", a.power), ("--comm", a.comm)] {
        if v > a.devices {
            return Err(CliError::Usage(format!("{flag} {v} exceeds the {} devices", a.devices)));
        }
    }
    let world = WorldTemplate {
        config: SimConfig {
            n_devices: a.devices,
            serve_all_in_range: a.serve_all_in_range,
            ..SimConfig::default()
        },
        table: match &a.device_table {
            Some(p) => CapabilityTable::from_csv_path(p)?,
            None => CapabilityTable::default(),
        },
        ..WorldTemplate::default()
    };
    let base = generate_with_table(cli.seed, &world.config, &world.comm, &world.uav, &world.table)?;
    let scenario = with_priorities(assign_outages(&base, a.power, a.comm, cli.seed)?, &a.priority)?;
    let out = cli.out_dir.join(&a.output);
    scenario.save(&out)?;
    println!("wrote {}", out.display());
    let config = json!({ "global": global(cli), "args": a, "sim": world.config });
    manifest.finish(config, vec![cli.seed], vec![out]).write(&cli.out_dir)?;
    Ok(())
}

fn global(cli: &Cli) -> serde_json::Value {
    json!({ "seed": cli.seed, "out_dir": cli.out_dir, "workers": cli.workers })
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> CmdResult {
    let manifest = ManifestBuilder::start("train");
    let scenario = with_priorities(Scenario::load(&a.scenario)?, &a.priority)?;
    let cfg = a.learner.train_config(TRAIN_ITERS);
    let reward = a.learner.reward_spec();
    let (weights, log) = match a.learner.precision {
        Precision::F32 => {
            let (net, log) = train::<f32>(&scenario, reward, &cfg, cli.seed)?;
            (WeightsFile::from_network(&net, cfg.normalize_age), log)
        }
        Precision::F64 => {
            let (net, log) = train::<f64>(&scenario, reward, &cfg, cli.seed)?;
            (WeightsFile::from_network(&net, cfg.normalize_age), log)
        }
    };
    let weights_path = cli.out_dir.join("weights.json");
    weights.save(&weights_path)?;
    let log_path = cli.out_dir.join("train_log.csv");
    log.write_csv(create(&log_path)?)?;
    match log.episodes.last() {
        Some(e) => println!("episodes={} last_length={}", log.episodes.len(), e.length),
        None => println!("episodes=0"),
    }
    let config = json!({ "global": global(cli), "args": a, "train": cfg, "reward": reward });
    manifest
        .finish(config, vec![cli.seed], vec![weights_path, log_path])
        .write(&cli.out_dir)?;
    Ok(())
}

fn greedy<T: Scalar>(w: &WeightsFile) -> CmdResult<Box<dyn Policy>> {
    Ok(Box::new(GreedyPolicy::new(w.to_network::<T>()?, w.normalize_age)))
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> CmdResult {
    let manifest = ManifestBuilder::start("eval");
    let scenario = Scenario::load(&a.scenario)?;
    let n = scenario.n_devices();
    let mut policy: Box<dyn Policy> = match (&a.weights, &a.policy) {
        (Some(path), _) => {
            let w = WeightsFile::load(path)?;
            let (n_in, n_out) = (w.layer_sizes.first().copied(), w.layer_sizes.last().copied());
            if n_in != Some(2 * n) || n_out != Some(n) {
                return Err(CliError::Data(anyhow::anyhow!(
                    "weights {} expect {} devices but the scenario has {n}",
                    path.display(),
                    n_out.unwrap_or(0)
                )));
            }
            match a.precision {
                Precision::F32 => greedy::<f32>(&w)?,
                Precision::F64 => greedy::<f64>(&w)?,
            }
        }
        (None, Some(name)) => Box::new(name.parse::<Baseline>()?.policy()),
        (None, None) => return Err(CliError::Usage("either --weights or --policy is required".into())),
    };
    let result = rollout(&scenario, policy.as_mut(), cli.seed)?;
    let failure = result
        .first_failure_device
        .map(|d| d.to_string())
        .unwrap_or_else(|| "none".to_string());
    println!("length={} cause={} first_failure={failure}", result.length, result.cause.name());
    let artifacts = write_eval(&cli.out_dir, &result)?;
    let config = json!({ "global": global(cli), "args": a });
    manifest.finish(config, vec![cli.seed], artifacts).write(&cli.out_dir)?;
    Ok(())
}

fn write_eval(dir: &Path, result: &EpisodeResult) -> CmdResult<Vec<PathBuf>> {
    let trace = dir.join("trace.csv");
    result.write_trace_csv(create(&trace)?)?;
    let summary = dir.join("eval.csv");
    let failure = result.first_failure_device.map(|d| d.to_string()).unwrap_or_default();
    std::fs::write(
        &summary,
        format!("length,cause,first_failure\n{},{},{failure}\n", result.length, result.cause.name()),
    )
    .with_context(|| format!("writing {}", summary.display()))?;
    Ok(vec![trace, summary])
}

fn experiment(cli: &Cli, l: &LearnerArgs, default_iters: u64) -> Experiment {
    Experiment {
        reward: l.reward_spec(),
        train: l.train_config(default_iters),
        workers: cli.workers,
    }
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> CmdResult {
    let manifest = ManifestBuilder::start("sweep");
    let world = WorldTemplate::default();
    if let Some(&bad) = a.grid.iter().find(|&&c| c > world.config.n_devices) {
        return Err(CliError::Usage(format!(
            "grid count {bad} exceeds the {} devices",
            world.config.n_devices
        )));
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|i| cli.seed.wrapping_add(i)).collect();
    let exp = experiment(cli, &a.learner, SWEEP_ITERS);
    let report: SweepReport = match a.learner.precision {
        Precision::F32 => sweep::<f32>(&world, &a.grid, &a.grid, &seeds, &exp)?,
        Precision::F64 => sweep::<f64>(&world, &a.grid, &a.grid, &seeds, &exp)?,
    };
    let runs = cli.out_dir.join("sweep.csv");
    write_runs_csv(&report.runs, create(&runs)?)?;
    let table = cli.out_dir.join("sweep_table.csv");
    report.table.write_csv(create(&table)?)?;
    report.table.write_csv(std::io::stdout().lock())?;
    let config = json!({ "global": global(cli), "args": a, "train": exp.train, "reward": exp.reward });
    manifest.finish(config, seeds, vec![runs, table]).write(&cli.out_dir)?;
    Ok(())
}

fn cmd_failstats(cli: &Cli, a: &FailstatsArgs) -> CmdResult {
    let manifest = ManifestBuilder::start("failstats");
    let base = match &a.scenario {
        Some(p) => Scenario::load(p)?,
        None => WorldTemplate::default().generate(cli.seed)?,
    };
    let n = base.n_devices();
    for (flag, v) in [("--power-out", a.power_out), ("--comm-out", a.comm_out)] {
        if v > n {
            return Err(CliError::Usage(format!("{flag} {v} exceeds the {n} devices")));
        }
    }
    let base = with_priorities(base, &a.priority)?;
    let exp = experiment(cli, &a.learner, FAILSTATS_ITERS);
    let (n_power, n_comm) = (n - a.power_out, n - a.comm_out);
    let report: FailureReport = match a.learner.precision {
        Precision::F32 => failure_stats::<f32>(&base, n_power, n_comm, a.runs, cli.seed, &exp)?,
        Precision::F64 => failure_stats::<f64>(&base, n_power, n_comm, a.runs, cli.seed, &exp)?,
    };
    let tally = cli.out_dir.join("tally.csv");
    report.tally.write_csv(create(&tally)?)?;
    let runs = cli.out_dir.join("failstats_runs.csv");
    write_runs_csv(&report.runs, create(&runs)?)?;
    report.tally.write_csv(std::io::stdout().lock())?;
    let seeds = report.runs.iter().map(|r| r.seed).collect();
    let config = json!({
        "global": global(cli),
        "args": a,
        "train": exp.train,
        "reward": exp.reward,
        "priority_weights": base.priority_weights,
    });
    manifest.finish(config, seeds, vec![tally, runs]).write(&cli.out_dir)?;
    Ok(())
}
