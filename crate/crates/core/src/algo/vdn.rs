use crate::neural::ParamVector;
use crate::qcore::{signal_gradient, td_pass, AgentBatch, TdPass};
use crate::{Error, Result};

use super::AgentLearnerState;

pub(crate) fn aligned_passes(
    states: &[AgentLearnerState],
    batches: &[AgentBatch],
    gamma: f64,
) -> Result<Vec<TdPass>> {
    if states.is_empty() {
        return Err(Error::Empty("agent set"));
    }
    if batches.len() != states.len() {
        return Err(Error::shape("batch count", states.len(), batches.len()));
    }
    let t = batches[0].len();
    if let Some(b) = batches.iter().find(|b| b.len() != t) {
        return Err(Error::shape("aligned batch length", t, b.len()));
    }
    states
        .iter()
        .zip(batches)
        .map(|(s, b)| td_pass(&s.spec, &s.params, &s.target_params, b, gamma))
        .collect()
}

/// Per-step residual of the summed decomposition, `y_tot - Q_tot`.
pub(crate) fn joint_residual(passes: &[TdPass]) -> Vec<f64> {
    let t = passes[0].td.len();
    (0..t)
        .map(|k| {
            let y: f64 = passes.iter().map(|p| p.targets[k]).sum();
            let q: f64 = passes.iter().map(|p| p.q_taken[k]).sum();
            y - q
        })
        .collect()
}

/// Centralized loss `(1/N) sum_t (sum_i y_i - sum_i Q_i)^2`.
pub fn vdn_loss(states: &[AgentLearnerState], batches: &[AgentBatch], gamma: f64) -> Result<f64> {
    let passes = aligned_passes(states, batches, gamma)?;
    let sum: f64 = joint_residual(&passes).iter().map(|r| r * r).sum();
    Ok(sum / states.len() as f64)
}

/// Per-agent gradients of [`vdn_loss`], back-propagated through the summing
/// mixer: each agent's output receives `-(2/N) (y_tot - Q_tot)`.
pub fn vdn_joint_gradient(
    states: &[AgentLearnerState],
    batches: &[AgentBatch],
    gamma: f64,
) -> Result<Vec<ParamVector>> {
    let passes = aligned_passes(states, batches, gamma)?;
    let residual = joint_residual(&passes);
    let scale = 2.0 / states.len() as f64;
    states
        .iter()
        .zip(batches)
        .zip(&passes)
        .map(|((s, b), p)| signal_gradient(&s.spec, &s.params, b, p.cache(), &residual, scale))
        .collect()
}

/// `-(2/N) sum_t (sum_j delta_j) grad Q_i`, built from the individual TD vectors.
pub fn vdn_gradient_closed_form(
    states: &[AgentLearnerState],
    batches: &[AgentBatch],
    gamma: f64,
) -> Result<Vec<ParamVector>> {
    let passes = aligned_passes(states, batches, gamma)?;
    let t = passes[0].td.len();
    let joint: Vec<f64> = (0..t).map(|k| passes.iter().map(|p| p.td[k]).sum()).collect();
    let scale = 2.0 / states.len() as f64;
    states
        .iter()
        .zip(batches)
        .zip(&passes)
        .map(|((s, b), p)| signal_gradient(&s.spec, &s.params, b, p.cache(), &joint, scale))
        .collect()
}

/// The same gradient from the expanded square: diagonal terms
/// `delta_i grad Q_i` plus both halves of every cross term
/// `delta_i grad Q_j + delta_j grad Q_i`, one backward pass per term.
pub fn vdn_gradient_expanded(
    states: &[AgentLearnerState],
    batches: &[AgentBatch],
    gamma: f64,
) -> Result<Vec<ParamVector>> {
    let passes = aligned_passes(states, batches, gamma)?;
    let n = states.len();
    let scale = 2.0 / n as f64;
    let mut grads: Vec<ParamVector> = states.iter().map(|s| ParamVector::zeros(s.params.len())).collect();
    let mut term = |owner: usize, source: usize| -> Result<()> {
        let s = &states[owner];
        let g = signal_gradient(
            &s.spec,
            &s.params,
            &batches[owner],
            passes[owner].cache(),
            &passes[source].td,
            scale,
        )?;
        grads[owner].add_scaled(1.0, &g);
        Ok(())
    };
    for i in 0..n {
        term(i, i)?;
    }
    for i in 0..n {
        for j in i + 1..n {
            term(j, i)?;
            term(i, j)?;
        }
    }
    Ok(grads)
}
