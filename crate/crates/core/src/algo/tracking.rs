use crate::comms::{consensus_step, ConsensusWeights};
use crate::neural::{clip_global_norm, ParamVector};
use crate::{Error, Result};

use super::{AgentLearnerState, StepRule};

/// One gradient-tracking round over all agents.
///
/// First round: `z_i = g_i`, no parameter mixing. Afterwards
/// `z_i = (sum_j alpha_ij z_j - g_i_prev) + g_i` and
/// `params_i = sum_j alpha_ij params_j`. Each agent then steps along its own
/// tracker. Clipping touches only the optimizer input, never the stored tracker.
pub fn gradient_tracking_update(
    weights: &ConsensusWeights,
    states: &mut [AgentLearnerState],
    grads: &[ParamVector],
    rule: StepRule,
    clip: Option<f64>,
) -> Result<()> {
    let n = weights.n_agents();
    if states.len() != n {
        return Err(Error::shape("tracking agent count", n, states.len()));
    }
    if grads.len() != n {
        return Err(Error::shape("tracking gradient count", n, grads.len()));
    }
    let len = states[0].params.len();
    for (s, g) in states.iter().zip(grads) {
        if s.params.len() != len {
            return Err(Error::Heterogeneous(format!(
                "gradient tracking needs equal parameter counts, got {} and {}",
                len,
                s.params.len()
            )));
        }
        if g.len() != len {
            return Err(Error::shape("tracking gradient", len, g.len()));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("local gradient"));
        }
    }
    let round = states[0].tracking_rounds;
    let init = states[0].initialized;
    if let Some((i, s)) = states
        .iter()
        .enumerate()
        .find(|(_, s)| s.tracking_rounds != round || s.initialized != init)
    {
        return Err(Error::Desync(format!(
            "agent {i} is at tracking round {} but agent 0 is at round {round}",
            s.tracking_rounds
        )));
    }

    let (trackers, mixed): (Vec<ParamVector>, Vec<ParamVector>) = if init {
        let current: Vec<ParamVector> = states.iter().map(|s| s.tracker.clone()).collect();
        let mixed_z = consensus_step(weights, &current)?;
        let z = mixed_z
            .into_iter()
            .zip(states.iter())
            .zip(grads)
            .map(|((mut m, s), g)| {
                for ((x, p), gv) in m.iter_mut().zip(s.prev_grad.iter()).zip(g.iter()) {
                    *x = (*x - p) + gv;
                }
                m
            })
            .collect();
        let params: Vec<ParamVector> = states.iter().map(|s| s.params.clone()).collect();
        (z, consensus_step(weights, &params)?)
    } else {
        (grads.to_vec(), states.iter().map(|s| s.params.clone()).collect())
    };

    if !trackers.iter().all(ParamVector::is_finite) {
        return Err(Error::NonFinite("gradient tracker"));
    }
    for (((s, z), w), g) in states.iter_mut().zip(trackers).zip(mixed).zip(grads) {
        s.params = w;
        match rule {
            StepRule::Adam => s.adam_step(&z, clip)?,
            StepRule::Plain { lr } => {
                let mut dir = z.clone();
                if let Some(max_norm) = clip {
                    clip_global_norm(&mut dir, max_norm);
                }
                s.params.add_scaled(-lr, &dir);
            }
        }
        s.tracker = z;
        s.prev_grad = g.clone();
        s.initialized = true;
        s.tracking_rounds += 1;
    }
    Ok(())
}
