//! Per-agent deep Q-learning machinery.

mod log;
mod policy;
mod replay;
mod reward;
mod target;
mod td;
mod transition;

pub use log::{write_episode_csv, EpisodeTrace};
pub use policy::{greedy_action, select_action, EpsilonSchedule};
pub use replay::{sample_synchronized_batch, IndexStream, ReplayBuffer, SyncedSample};
pub use reward::RewardStandardizer;
pub use target::{update_target, TargetUpdate};
pub use td::{iql_gradient, iql_loss, signal_gradient, td_pass, td_vector, TdPass};
pub use transition::{AgentBatch, Episode, Transition};
