//! Episode-varying communication graphs and synchronous consensus.
//!
//! A [`CommGraph`] is always connected; construction rejects anything else.
//! [`metropolis_weights`] turns it into a symmetric doubly stochastic
//! [`ConsensusWeights`] matrix that agents could build from one exchange of
//! degrees with their neighbors. [`consensus_step`] is the barrier every
//! distributed update goes through.

mod consensus;
mod graph;
mod text;

pub use consensus::{
    consensus_step, consensus_to_limit, metropolis_weights, ConsensusOutcome, ConsensusWeights,
    Payload,
};
pub use graph::{is_connected, CommGraph, GraphSampler};
pub use text::{parse_debug_text, to_debug_text};
