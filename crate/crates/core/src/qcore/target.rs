use crate::neural::ParamVector;

/// How the target network follows the behavior network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetUpdate {
    /// Full copy every `period` optimizer steps.
    Hard { period: u64 },
    /// `target += rate * (params - target)` after every optimizer step.
    Soft { rate: f64 },
}

impl Default for TargetUpdate {
    fn default() -> Self {
        TargetUpdate::Hard { period: 200 }
    }
}

/// Applies the target rule after the `updates_done`-th optimizer step.
pub fn update_target(
    params: &ParamVector,
    target: &mut ParamVector,
    mode: TargetUpdate,
    updates_done: u64,
) {
    match mode {
        TargetUpdate::Hard { period } => {
            if period > 0 && updates_done.is_multiple_of(period) {
                target.clone_from(params);
            }
        }
        TargetUpdate::Soft { rate } => {
            for (t, p) in target.iter_mut().zip(params.iter()) {
                *t += rate * (p - *t);
            }
        }
    }
}
