use crate::neural::{clip_global_norm, AdamState, NetworkSpec, ParamVector};
use crate::qcore::{update_target, TargetUpdate};
use crate::Result;

/// Everything one agent keeps between rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentLearnerState {
    pub spec: NetworkSpec,
    pub params: ParamVector,
    pub target_params: ParamVector,
    pub adam: AdamState,
    /// Local gradient of the previous tracking round.
    pub prev_grad: ParamVector,
    /// Team-gradient tracker.
    pub tracker: ParamVector,
    /// Set once the tracker has been seeded with the first local gradient.
    pub initialized: bool,
    /// Completed gradient-tracking rounds.
    pub tracking_rounds: u64,
    /// Completed optimizer steps; drives hard target updates.
    pub updates: u64,
}

impl AgentLearnerState {
    pub fn new(spec: NetworkSpec, params: ParamVector, lr: f64) -> Self {
        let len = params.len();
        AgentLearnerState {
            spec,
            target_params: params.clone(),
            params,
            adam: AdamState::new(len, lr),
            prev_grad: ParamVector::zeros(len),
            tracker: ParamVector::zeros(len),
            initialized: false,
            tracking_rounds: 0,
            updates: 0,
        }
    }

    /// Clip (if configured) and take one Adam step along `direction`.
    pub(crate) fn adam_step(&mut self, direction: &ParamVector, clip: Option<f64>) -> Result<()> {
        match clip {
            Some(max_norm) => {
                let mut clipped = direction.clone();
                clip_global_norm(&mut clipped, max_norm);
                self.adam.step(&mut self.params, &clipped)
            }
            None => self.adam.step(&mut self.params, direction),
        }
    }

    /// Counts the optimizer step and moves the target network.
    pub(crate) fn finish_update(&mut self, mode: TargetUpdate) {
        self.updates += 1;
        update_target(&self.params, &mut self.target_params, mode, self.updates);
    }
}

/// Settings shared by every round type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundConfig {
    pub gamma: f64,
    /// Global-norm gradient clip applied to the optimizer input.
    pub grad_clip: Option<f64>,
    pub target_update: TargetUpdate,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig {
            gamma: 0.99,
            grad_clip: Some(10.0),
            target_update: TargetUpdate::default(),
        }
    }
}

/// Optimizer applied after gradient tracking.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// Each agent's own Adam state.
    Adam,
    /// `params = mixed - lr * tracker`.
    Plain { lr: f64 },
}
