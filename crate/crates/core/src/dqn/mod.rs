//! Deep Q-network learner built from scratch: dense ReLU network, Adam,
//! experience replay, target network and the epsilon-greedy training loop.

mod adam;
mod network;
mod replay;
mod train;
mod weights;

pub use adam::Adam;
pub use network::{td_loss_and_grad, Activations, BackpropScratch, Gradients, QNetwork};
pub use replay::{ReplayBuffer, Transition, TransitionRef};
pub use train::{
    epsilon, q_targets, train, EpisodeLog, IterationInfo, Learner, TrainConfig, Trainer,
    TrainingLog,
};
pub use weights::{WeightsFile, WEIGHTS_FORMAT_VERSION};
