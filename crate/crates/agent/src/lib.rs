//! Learning and search machinery for quantum circuit pass scheduling.
//!
//! The crate turns circuits from `rlpass-core` into graph observations,
//! runs them through a hand-rolled GINE-style message passing network with
//! policy and value heads, and trains that network with PPO against the
//! pass library.  Greedy and beam search over the same pass registry serve
//! as non-learned baselines, and checkpoints serialise trained weights
//! together with the action registry they were trained for.
//!
//! All float-bearing containers are generic over [`Scalar`] so the same
//! code runs in `f32` for training and in `f64` for gradient checks.

pub mod checkpoint;
pub mod error;
pub mod graph;
pub mod nn;
pub mod rl;
pub mod search;
mod scalar;

pub use error::AgentError;
pub use graph::{batch, encode, unbatch, GraphBatch, GraphObservation};
pub use nn::{AdamState, ArchConfig, PolicyParams};
pub use rl::{deploy_optimize, train, EnvState, PpoConfig, TrainOutcome};
pub use scalar::Scalar;
pub use search::{beam_search, greedy_search, BeamConfig};

/// Weight precision used for actual training and deployment.
pub type Policy = nn::PolicyParams<f32>;

/// Double precision variant used by gradient checking tests.
pub type PolicyF64 = nn::PolicyParams<f64>;
