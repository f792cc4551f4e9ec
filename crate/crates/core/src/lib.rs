//! Decentralized cooperative multi-agent Q-learning.
//!
//! Agents learn individual Q-networks whose sum approximates a joint
//! Q-function. Instead of a centralized value decomposition layer, each agent
//! estimates the joint temporal difference through one consensus step over an
//! episode-varying communication graph (`algo::run_dvdn_round`). Homogeneous
//! agents can additionally align parameters and gradients with gradient
//! tracking (`algo::run_dvdn_gt_round`). Centralized VDN, VDN with parameter
//! sharing and independent Q-learning are provided as baselines.
//!
//! Module map:
//! - [`comms`]: connected graph sampling, Metropolis weights, consensus.
//! - [`neural`]: feed-forward Q-network with exact backprop and Adam.
//! - [`qcore`]: TD errors, replay with synchronized sampling, exploration.
//! - [`algo`]: DVDN, DVDN with gradient tracking, VDN and IQL rounds.
//! - [`envs`]: desk-scale cooperative environments.
//! - [`harness`]: configuration, training loops, metrics and statistics.
//! - [`verify`]: self-contained property suites.

pub mod algo;
pub mod comms;
pub mod envs;
mod error;
pub mod harness;
pub mod neural;
pub mod qcore;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
