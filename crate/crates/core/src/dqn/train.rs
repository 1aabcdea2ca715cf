use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::network::{td_loss_and_grad, Activations, BackpropScratch, Gradients, QNetwork};
use super::replay::{ReplayBuffer, TransitionRef};
use crate::error::Result;
use crate::eval::argmax;
use crate::rewards::{compute_reward, RewardInputs, RewardSpec};
use crate::rng::{self, SimRng, EXPLORE_STREAM, INIT_STREAM, REPLAY_STREAM};
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::sim::Episode;

/// Learner hyperparameters. Defaults follow the reference setup; the
/// buffer, sync, warmup and Adam constants are declared choices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub iterations: u64,
    pub exploration_fraction: f64,
    pub min_epsilon: f64,
    pub buffer_capacity: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync_interval: u64,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
    pub hidden_layers: Vec<usize>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Rescale the gradient when its L2 norm exceeds this.
    pub max_grad_norm: Option<f64>,
    /// Divide data ages by the age limit in the state vector.
    pub normalize_age: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            gamma: 0.98,
            learning_rate: 0.0071,
            iterations: 1_000_000,
            exploration_fraction: 0.35,
            min_epsilon: 0.05,
            buffer_capacity: 50_000,
            target_sync_interval: 1_000,
            warmup: 1_000,
            hidden_layers: vec![64, 64],
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_grad_norm: Some(10.0),
            normalize_age: false,
        }
    }
}

impl TrainConfig {
    pub fn layer_sizes(&self, n_devices: usize) -> Vec<usize> {
        let mut sizes = vec![2 * n_devices];
        sizes.extend(&self.hidden_layers);
        sizes.push(n_devices);
        sizes
    }
}

/// Exploration rate at iteration `i`: linear from 1 down to `min_epsilon`
/// over the first `exploration_fraction` of training, then flat.
pub fn epsilon(i: u64, cfg: &TrainConfig) -> f64 {
    let horizon = cfg.exploration_fraction * cfg.iterations as f64;
    if horizon <= 0.0 {
        return cfg.min_epsilon;
    }
    (1.0 - (1.0 - cfg.min_epsilon) * i as f64 / horizon).max(cfg.min_epsilon)
}

/// Bootstrap targets `r + gamma * max_a' Q_target(s', a')`, without the
/// bootstrap term on terminal transitions.
pub fn q_targets<T: Scalar>(batch: &[TransitionRef<'_, T>], target: &QNetwork<T>, gamma: T) -> Vec<T> {
    let mut acts = target.activations();
    batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                target.forward_into(t.next_state, &mut acts);
                let best = acts.output().iter().copied().fold(T::neg_infinity(), T::max);
                t.reward + gamma * best
            }
        })
        .collect()
}

/// Online and target networks plus optimizer state and work buffers.
#[derive(Clone, Debug)]
pub struct Learner<T> {
    pub online: QNetwork<T>,
    pub target: QNetwork<T>,
    adam: Adam<T>,
    grads: Gradients<T>,
    acts: Activations<T>,
    scratch: BackpropScratch<T>,
    gradient_steps: u64,
}

impl<T: Scalar> Learner<T> {
    pub fn new(online: QNetwork<T>, cfg: &TrainConfig) -> Self {
        Self {
            target: online.clone(),
            adam: Adam::new(&online, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps),
            grads: online.zero_gradients(),
            acts: online.activations(),
            scratch: BackpropScratch::default(),
            online,
            gradient_steps: 0,
        }
    }

    pub fn gradient_steps(&self) -> u64 {
        self.gradient_steps
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.online);
    }

    /// One minibatch update of the online network. Returns the batch loss,
    /// or `None` when the buffer holds fewer than
    /// `max(batch_size, warmup)` transitions.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer<T>,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Option<T> {
        if buffer.len() < cfg.batch_size.max(cfg.warmup) || cfg.batch_size == 0 {
            return None;
        }
        let idx = buffer.sample_indices(rng, cfg.batch_size)?;
        let batch: Vec<TransitionRef<'_, T>> = idx.iter().map(|&i| buffer.get(i)).collect();
        let targets = q_targets(&batch, &self.target, T::lit(cfg.gamma));
        let states: Vec<&[T]> = batch.iter().map(|t| t.state).collect();
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();

        self.grads.fill_zero();
        let loss = td_loss_and_grad(
            &self.online,
            &states,
            &actions,
            &targets,
            &mut self.grads,
            &mut self.acts,
            &mut self.scratch,
        );
        if let Some(max_norm) = cfg.max_grad_norm {
            let norm = self.grads.l2_norm();
            let max_norm = T::lit(max_norm);
            if norm > max_norm {
                self.grads.scale(max_norm / norm);
            }
        }
        self.adam.step(&mut self.online, &self.grads);
        self.gradient_steps += 1;
        if cfg.target_sync_interval > 0 && self.gradient_steps.is_multiple_of(cfg.target_sync_interval) {
            self.sync_target();
        }
        Some(loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: u64,
    /// Number of environment steps taken when the episode ended.
    pub end_iteration: u64,
    pub length: u32,
    /// Mean training loss over the episode's gradient steps.
    pub mean_loss: Option<f64>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub const CSV_HEADER: &'static str = "episode,end_iteration,length,mean_loss,epsilon";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for e in &self.episodes {
            let loss = e.mean_loss.map(|l| l.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", e.episode, e.end_iteration, e.length, loss, e.epsilon)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// What happened in one training iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationInfo {
    pub action: usize,
    pub reward: f64,
    pub loss: Option<f64>,
    pub done: bool,
}

/// Epsilon-greedy DQN training loop over one scenario.
pub struct Trainer<'a, T: Scalar> {
    cfg: TrainConfig,
    reward: RewardSpec,
    seed: u64,
    learner: Learner<T>,
    buffer: ReplayBuffer<T>,
    episode: Episode<'a>,
    episode_index: u64,
    iteration: u64,
    explore: SimRng,
    replay: SimRng,
    state: Vec<T>,
    next_state: Vec<T>,
    acts: Activations<T>,
    loss_sum: f64,
    loss_count: u64,
    log: TrainingLog,
}

impl<'a, T: Scalar> Trainer<'a, T> {
    pub fn new(scenario: &'a Scenario, reward: RewardSpec, cfg: TrainConfig, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let sizes = cfg.layer_sizes(scenario.n_devices());
        let online = QNetwork::he_uniform(&sizes, &mut rng::stream(seed, INIT_STREAM));
        let episode = Episode::new(scenario, rng::episode_stream(seed, 0));
        let dim = sizes[0];
        let mut state = vec![T::zero(); dim];
        episode.observation().write_state(cfg.normalize_age, &mut state);
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.buffer_capacity, dim),
            acts: online.activations(),
            learner: Learner::new(online, &cfg),
            reward,
            seed,
            episode,
            episode_index: 0,
            iteration: 0,
            explore: rng::stream(seed, EXPLORE_STREAM),
            replay: rng::stream(seed, REPLAY_STREAM),
            next_state: state.clone(),
            state,
            loss_sum: 0.0,
            loss_count: 0,
            log: TrainingLog::default(),
            cfg,
        })
    }

    pub fn learner(&self) -> &Learner<T> {
        &self.learner
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.cfg.iterations
    }

    /// Runs one environment step and, past warmup, one gradient step.
    pub fn step(&mut self) -> Result<IterationInfo> {
        let n = self.episode.scenario().n_devices();
        let eps = epsilon(self.iteration, &self.cfg);
        let action = if self.explore.random::<f64>() < eps {
            self.explore.random_range(0..n)
        } else {
            self.learner.online.forward_into(&self.state, &mut self.acts);
            argmax(self.acts.output())
        };

        let before = self.episode.observation();
        let visited_age = f64::from(before.devices[action].data_age);
        let oldest_age = f64::from(before.oldest_age());
        let scenario = self.episode.scenario();
        let outcome = self.episode.step(action)?;
        let after = self.episode.observation();
        let reward = compute_reward(
            &self.reward,
            &RewardInputs {
                visited_age,
                uav_slots: f64::from(after.slots),
                min_battery_fraction: after.min_battery_fraction(),
                oldest_age,
                priority_weight: scenario.priority_weight(action),
            },
        );
        after.write_state(self.cfg.normalize_age, &mut self.next_state);
        let done = outcome.terminated.is_some();
        self.buffer.push(&self.state, action, T::lit(reward), &self.next_state, done);

        let loss = self
            .learner
            .train_step(&self.buffer, &self.cfg, &mut self.replay)
            .map(Scalar::to_f64_lossy);
        if let Some(l) = loss {
            self.loss_sum += l;
            self.loss_count += 1;
        }
        self.iteration += 1;

        if done {
            self.log.episodes.push(EpisodeLog {
                episode: self.episode_index,
                end_iteration: self.iteration,
                length: outcome.slot,
                mean_loss: (self.loss_count > 0).then(|| self.loss_sum / self.loss_count as f64),
                epsilon: eps,
            });
            self.loss_sum = 0.0;
            self.loss_count = 0;
            self.episode_index += 1;
            self.episode
                .reset(rng::episode_stream(self.seed, self.episode_index));
            self.episode
                .observation()
                .write_state(self.cfg.normalize_age, &mut self.state);
        } else {
            std::mem::swap(&mut self.state, &mut self.next_state);
        }
        Ok(IterationInfo {
            action,
            reward,
            loss,
            done,
        })
    }

    pub fn run(mut self) -> Result<(QNetwork<T>, TrainingLog)> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok((self.learner.online, self.log))
    }
}

/// Trains a Q-network on `scenario` for `cfg.iterations` environment steps.
pub fn train<T: Scalar>(
    scenario: &Scenario,
    reward: RewardSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(QNetwork<T>, TrainingLog)> {
    Trainer::new(scenario, reward, cfg.clone(), seed)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule() {
        let cfg = TrainConfig {
            iterations: 1_000_000,
            ..TrainConfig::default()
        };
        assert_eq!(epsilon(0, &cfg), 1.0);
        assert!((epsilon(350_000, &cfg) - 0.05).abs() < 1e-12);
        assert!((epsilon(175_000, &cfg) - 0.525).abs() < 1e-12);
        assert_eq!(epsilon(1_000_000, &cfg), 0.05);
    }

    #[test]
    fn targets() {
        let s = [0.0f64; 2];
        let net = QNetwork::<f64>::from_row_major(&[2, 3], vec![vec![0.0; 6]], vec![vec![1.0, 5.0, 2.0]]).unwrap();
        let t = |r: f64, done: bool| TransitionRef {
            state: &s,
            action: 0,
            reward: r,
            next_state: &s,
            done,
        };
        assert_eq!(q_targets(&[t(3.0, true)], &net, 0.98), vec![3.0]);
        assert_eq!(q_targets(&[t(2.5, false)], &net, 0.0), vec![2.5]);
        let y = q_targets(&[t(1.0, false)], &net, 0.98);
        assert!((y[0] - 5.9).abs() < 1e-12);
    }

    #[test]
    fn train_step_waits_for_warmup() {
        let net = QNetwork::<f64>::zeros(&[2, 2]);
        let cfg = TrainConfig {
            warmup: 10,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let mut learner = Learner::new(net, &cfg);
        let mut buf = ReplayBuffer::new(100, 2);
        let mut rng = rng::stream(0, 0);
        for _ in 0..9 {
            buf.push(&[0.0, 1.0], 0, 1.0, &[1.0, 0.0], false);
            assert!(learner.train_step(&buf, &cfg, &mut rng).is_none());
        }
        buf.push(&[0.0, 1.0], 0, 1.0, &[1.0, 0.0], false);
        assert!(learner.train_step(&buf, &cfg, &mut rng).is_some());
        assert_eq!(learner.gradient_steps(), 1);
    }

    #[test]
    fn perfect_network_has_zero_loss() {
        // Q(s, a) = 1 everywhere, gamma 0, reward 1: targets equal predictions
        let net = QNetwork::<f64>::from_row_major(&[2, 2], vec![vec![0.0; 4]], vec![vec![1.0, 1.0]]).unwrap();
        let cfg = TrainConfig {
            warmup: 0,
            batch_size: 4,
            gamma: 0.0,
            ..TrainConfig::default()
        };
        let mut learner = Learner::new(net.clone(), &cfg);
        let mut buf = ReplayBuffer::new(8, 2);
        for a in 0..8 {
            buf.push(&[0.5, 1.0], a % 2, 1.0, &[1.0, 0.0], false);
        }
        let loss = learner.train_step(&buf, &cfg, &mut rng::stream(0, 0)).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(learner.online, net);
    }

    #[test]
    fn log_csv_format() {
        let log = TrainingLog {
            episodes: vec![
                EpisodeLog {
                    episode: 0,
                    end_iteration: 11,
                    length: 11,
                    mean_loss: None,
                    epsilon: 1.0,
                },
                EpisodeLog {
                    episode: 1,
                    end_iteration: 30,
                    length: 19,
                    mean_loss: Some(0.25),
                    epsilon: 0.5,
                },
            ],
        };
        assert_eq!(
            log.to_csv_string(),
            "episode,end_iteration,length,mean_loss,epsilon\n0,11,11,,1\n1,30,19,0.25,0.5\n"
        );
    }
}
