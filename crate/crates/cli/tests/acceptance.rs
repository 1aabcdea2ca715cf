//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Budgets: `UAVEDGE_SWEEP_ITERS` (default 200000) sets the per-cell
//! training iterations of the sweep criterion. `UAVEDGE_ACCEPTANCE=1,8`
//! runs only the listed criteria.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use uavedge::dqn::{td_loss_and_grad, BackpropScratch, TrainConfig};
use uavedge::eval::{failure_stats, rollout, sweep, train_and_rollout, Experiment, WorldTemplate};
use uavedge::evac::{assign_priorities, RoadSegment, DEFAULT_PRIORITY_RADIUS};
use uavedge::scenario::assign_outages;
use uavedge::sim::{transmission_rate, CommModel, Point, TerminationCause, UavSpec};
use uavedge::{rng, Baseline, Policy, QNetworkF64, RewardSpec, Scenario};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn world() -> WorldTemplate {
    WorldTemplate::default()
}

fn with_outages(seed: u64, power: usize, comm: usize) -> Scenario {
    assign_outages(&world().generate(seed).unwrap(), power, comm, seed).unwrap()
}

/// Visits device 0 forever.
struct Constant;

impl Policy for Constant {
    fn name(&self) -> String {
        "constant".to_string()
    }
    fn act(&mut self, _obs: &uavedge::sim::Observation<'_>) -> usize {
        0
    }
}

fn baseline_eleven() -> Outcome {
    let mut bad = Vec::new();
    let mut runs = 0;
    for seed in 0..10 {
        let s = with_outages(seed, 0, 0);
        let mut policies: Vec<Box<dyn Policy>> = Baseline::ALL.iter().map(|b| Box::new(b.policy()) as Box<dyn Policy>).collect();
        policies.push(Box::new(Constant));
        for p in policies.iter_mut() {
            let r = rollout(&s, p.as_mut(), seed).unwrap();
            runs += 1;
            if r.length != 11 || !matches!(r.cause, TerminationCause::DataExpired(_)) {
                bad.push(format!("seed {seed} {}: {} {}", p.name(), r.length, r.cause));
            }
        }
    }
    (bad.is_empty(), format!("{runs} rollouts over 10 seeds, exceptions: {bad:?}"))
}

fn uav_limited() -> Outcome {
    let mut lengths = Vec::new();
    let mut causes_ok = true;
    for seed in 0..3 {
        let s = with_outages(seed, 12, 12);
        let r = rollout(&s, &mut Baseline::RoundRobin.policy(), seed).unwrap();
        causes_ok &= r.cause == TerminationCause::UavBatteryDepleted;
        lengths.push(r.length);
    }
    let mean = lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / 3.0;
    (
        causes_ok && (27.0..=39.0).contains(&mean),
        format!("round_robin lengths {lengths:?}, mean {mean:.2}, all UavBatteryDepleted: {causes_ok}"),
    )
}

fn channel_points() -> Outcome {
    let (c, u) = (CommModel::default(), UavSpec::default());
    // SNR = p * beta0 * l^-4 / noise
    let oracle = |l: f64| 2e7 * (1.0 + 0.1 * 1e-5 * l.powi(-4) / 1e-13).log2();
    let r10 = transmission_rate(10.0, &c, &u).unwrap();
    let r65 = transmission_rate(65.0, &c, &u).unwrap();
    let close = |x: f64, y: f64| ((x - y) / y).abs() <= 1e-3;
    (
        close(r10, 1.9934e8) && close(r65, 1.284e7) && close(r10, oracle(10.0)) && close(r65, oracle(65.0)),
        format!("R(10 m) = {r10:.6e}, R(65 m) = {r65:.6e} bit/s"),
    )
}

fn gradient_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut r = rng::stream(seed, 99);
        let sizes = [r.random_range(2..7), r.random_range(3..10), r.random_range(3..10), r.random_range(2..6)];
        let mut net = QNetworkF64::he_uniform(&sizes, &mut r);
        for p in net.params_mut() {
            *p += r.random_range(-0.1..0.1);
        }
        let batch = r.random_range(1..10);
        let states: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..sizes[0]).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        let actions: Vec<usize> = (0..batch).map(|_| r.random_range(0..sizes[3])).collect();
        let targets: Vec<f64> = (0..batch).map(|_| r.random_range(-1.0..1.0)).collect();
        let loss = |n: &QNetworkF64| {
            states
                .iter()
                .zip(&actions)
                .zip(&targets)
                .map(|((s, &a), &y)| (n.forward(s).unwrap()[a] - y).powi(2))
                .sum::<f64>()
                / batch as f64
        };
        let refs: Vec<&[f64]> = states.iter().map(Vec::as_slice).collect();
        let mut grads = net.zero_gradients();
        td_loss_and_grad(&net, &refs, &actions, &targets, &mut grads, &mut net.activations(), &mut BackpropScratch::default());
        let analytic: Vec<f64> = grads.iter().copied().collect();
        let h = 1e-6;
        for (k, &g) in analytic.iter().enumerate() {
            let orig = *net.params().nth(k).unwrap();
            *net.params_mut().nth(k).unwrap() = orig + h;
            let up = loss(&net);
            *net.params_mut().nth(k).unwrap() = orig - h;
            let down = loss(&net);
            *net.params_mut().nth(k).unwrap() = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
        }
    }
    (worst < 1e-4, format!("20 networks, worst relative error {worst:.2e}"))
}

fn learner(iterations: u64) -> TrainConfig {
    TrainConfig {
        iterations,
        ..TrainConfig::default()
    }
}

fn learning_effect() -> Outcome {
    let exp = Experiment {
        reward: RewardSpec::default(),
        train: learner(200_000),
        workers: 1,
    };
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..3 {
        let s = with_outages(seed, 8, 8);
        let dqn = train_and_rollout::<f32>(&s, &exp, seed).unwrap().length;
        let random = rollout(&s, &mut Baseline::Random.policy(), seed).unwrap().length;
        let rr = rollout(&s, &mut Baseline::RoundRobin.policy(), seed).unwrap().length;
        if dqn > random.max(rr) {
            wins += 1;
        }
        rows.push(format!("seed {seed}: dqn {dqn} random {random} round_robin {rr}"));
    }
    (wins >= 2, format!("{wins}/3 wins ({})", rows.join("; ")))
}

fn sweep_trend() -> Outcome {
    let iters = std::env::var("UAVEDGE_SWEEP_ITERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(200_000);
    let exp = Experiment {
        reward: RewardSpec::default(),
        train: learner(iters),
        workers: 1,
    };
    let grid = [12, 8, 4];
    let report = sweep::<f32>(&world(), &grid, &grid, &[0, 1, 2], &exp).unwrap();
    let t = &report.table;
    let full = t.cell(12, 12).unwrap();
    let worst = t.cell(4, 4).unwrap();
    let is_max = t.means.iter().flatten().all(|&m| m <= full);
    let rows: Vec<String> = t
        .means
        .iter()
        .zip(&grid)
        .map(|(row, p)| format!("p{p}: {}", row.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>().join(" ")))
        .collect();
    (
        is_max && worst <= 0.7 * full,
        format!("{iters} iterations per cell; (12,12) = {full:.2}, (4,4) = {worst:.2}; table [{}]", rows.join(" | ")),
    )
}

fn evacuation_priority() -> Outcome {
    let base = world().generate(0).unwrap();
    // four devices with no neighbour within the priority radius carry a dense road
    let isolated: Vec<usize> = (0..base.n_devices())
        .filter(|&i| {
            base.devices
                .iter()
                .all(|d| d.id == i || d.position.distance(base.devices[i].position) > 2.0 * DEFAULT_PRIORITY_RADIUS)
        })
        .take(4)
        .collect();
    let segments: Vec<RoadSegment> = isolated
        .iter()
        .zip([100.0, 90.0, 85.0, 80.0])
        .map(|(&i, density)| RoadSegment {
            id: format!("road{i}"),
            midpoint: Point::new(base.devices[i].position.x + 5.0, base.devices[i].position.y),
            mean_density: density,
        })
        .collect();
    let base = assign_priorities(&base, &segments, DEFAULT_PRIORITY_RADIUS).unwrap();
    let weights = base.priority_weights.clone().unwrap();
    let high: Vec<usize> = (0..12).filter(|&i| weights[i] >= 0.8).collect();
    let zero: Vec<usize> = (0..12).filter(|&i| weights[i] == 0.0).collect();
    if high.len() != 4 || zero.len() != 8 {
        return (false, format!("weight setup failed: {weights:?}"));
    }
    let exp = Experiment {
        reward: RewardSpec::default(),
        train: learner(300_000),
        workers: 1,
    };
    let report = failure_stats::<f32>(&base, 8, 6, 20, 0, &exp).unwrap();
    let sum = |ids: &[usize]| ids.iter().map(|&i| report.tally.counts[i]).sum::<u64>();
    let (h, z) = (sum(&high), sum(&zero));
    (
        h < z,
        format!("high-weight devices {high:?}: {h} first failures; zero-weight: {z}; tally {:?}", report.tally.counts),
    )
}

fn run_cli(dir: &Path, out: &str, args: &[String]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_uavedge"))
        .current_dir(dir)
        .env("UAVEDGE_OUT_DIR", out)
        .env_remove("UAVEDGE_SEED")
        .env_remove("UAVEDGE_WORKERS")
        .env_remove("UAVEDGE_ITERS")
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn manifest_argv(path: &Path) -> Vec<String> {
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    m["argv"].as_array().unwrap()[1..].iter().map(|v| v.as_str().unwrap().to_string()).collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let strings = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let steps = [
        ("gen", strings(&["--seed", "3", "generate", "--power", "8", "--comm", "8", "-o", "../../s.json"])),
        ("train", strings(&["--seed", "3", "train", "-s", "s.json", "--iters", "20000"])),
        ("eval", strings(&["--seed", "3", "eval", "-s", "s.json", "--weights", "a/train/weights.json"])),
    ];
    for (name, args) in &steps {
        if !run_cli(d, &format!("a/{name}"), args) {
            return (false, format!("first `{name}` run failed"));
        }
    }
    // second pass re-runs each command from the argv recorded in its manifest
    for (name, _) in &steps {
        let argv = manifest_argv(&d.join(format!("a/{name}/manifest.json")));
        if !run_cli(d, &format!("b/{name}"), &argv) {
            return (false, format!("manifest replay of `{name}` failed"));
        }
    }
    let files = ["train/train_log.csv", "train/weights.json", "eval/trace.csv", "eval/eval.csv"];
    let differ: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(d.join("a").join(f)).ok() != std::fs::read(d.join("b").join(f)).ok())
        .collect();
    (differ.is_empty(), format!("compared {files:?}; differing: {differ:?}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 baseline-11", baseline_eleven),
        ("2 UAV-limited lifetime", uav_limited),
        ("3 channel point checks", channel_points),
        ("4 gradient correctness", gradient_check),
        ("5 learning effect", learning_effect),
        ("6 sweep trend", sweep_trend),
        ("7 evacuation priority", evacuation_priority),
        ("8 determinism", determinism),
    ];
    let only: Option<Vec<String>> = std::env::var("UAVEDGE_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').map(|x| x.trim().to_string()).collect());
    let mut failed = 0;
    for (name, check) in criteria {
        let number = name.split(' ').next().unwrap_or_default();
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == number)) {
            println!("SKIP criterion {name}");
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = check();
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name} ({:.1} s): {detail}", start.elapsed().as_secs_f64());
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
