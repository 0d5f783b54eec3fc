//! Conditional VAE that maps a (problem, profile) pair to a belief vector,
//! trained on the ELBO plus a decision-accuracy term.

mod checkpoint;
mod layout;
mod loss;
mod net;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, Tensor};
pub use layout::NetDims;
pub use loss::{
    kl_to_standard_normal, reconstruction_nll, squared_decision_loss, Example, ExampleNoise,
    LossParts, LossWeights,
};
pub use net::{BeliefNet, LOGVAR_MAX, LOGVAR_MIN};
pub use train::{
    build_examples, decision_coordinates, train, write_loss_trace, LossRecord, TrainConfig,
};
