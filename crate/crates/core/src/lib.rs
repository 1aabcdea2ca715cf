//! Simulator of a UAV serving heterogeneous edge devices through power and
//! communication outages, with a from-scratch deep Q-network that learns
//! which device to visit each time slot.
//!
//! The learner and the channel math are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below name the common instantiations.

// `!(x > 0.0)` checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dqn;
mod error;
pub mod eval;
pub mod evac;
pub mod rewards;
pub mod rng;
mod scalar;
pub mod scenario;
pub mod sim;
pub mod tables;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use dqn::{QNetwork, TrainConfig, TrainingLog};
pub use eval::{Baseline, EpisodeResult, GreedyPolicy, Policy};
pub use rewards::{RewardId, RewardSpec};
pub use scenario::Scenario;

pub type QNetworkF32 = dqn::QNetwork<f32>;
pub type QNetworkF64 = dqn::QNetwork<f64>;
pub type GreedyPolicyF32 = eval::GreedyPolicy<f32>;
pub type GreedyPolicyF64 = eval::GreedyPolicy<f64>;
pub type ReplayBufferF32 = dqn::ReplayBuffer<f32>;
pub type ReplayBufferF64 = dqn::ReplayBuffer<f64>;
pub type LearnerF32 = dqn::Learner<f32>;
pub type LearnerF64 = dqn::Learner<f64>;
