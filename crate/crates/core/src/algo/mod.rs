//! Training rounds for distributed value decomposition and its baselines.
//!
//! Every round consumes one aligned batch per agent:
//!
//! | round                 | communication                      | loss per agent                     |
//! |-----------------------|------------------------------------|------------------------------------|
//! | [`run_iql_round`]     | none                               | `(1/T) sum delta_i^2`              |
//! | [`run_vdn_round`]     | centralized sum of Q-values        | `(1/N) sum (y_tot - Q_tot)^2`      |
//! | [`run_vdn_ps_round`]  | centralized, one shared network    | same, summed over agents           |
//! | [`run_dvdn_round`]    | one consensus step on TD vectors   | `(1/T) sum (delta_i + dhat_i)^2`   |
//! | [`run_dvdn_gt_round`] | consensus on TD, tracker, params   | as DVDN, then gradient tracking    |
//!
//! `dhat_i = N * (sum_j alpha_ij delta_j) - delta_i` is agent `i`'s local
//! estimate of its teammates' summed TD. On the complete graph it is exact,
//! so DVDN reproduces the centralized VDN gradient up to the factor `N/T`.

mod diagnostics;
mod jtd;
mod rounds;
mod state;
mod tracking;
mod vdn;

pub use diagnostics::{write_diagnostics_csv, RoundDiagnostics};
pub use jtd::{dvdn_gradient, dvdn_loss, estimate_network_jtd, network_jtd_all};
pub use rounds::{
    run_dvdn_gt_round, run_dvdn_round, run_iql_round, run_vdn_ps_round, run_vdn_round,
};
pub use state::{AgentLearnerState, RoundConfig, StepRule};
pub use tracking::gradient_tracking_update;
pub use vdn::{vdn_gradient_closed_form, vdn_gradient_expanded, vdn_joint_gradient, vdn_loss};
