use crate::neural::{backward_batch, forward_batch, ForwardCache, NetworkSpec, ParamVector};
use crate::{Error, Result};

use super::AgentBatch;

/// TD errors of a batch together with the behavior-network activations,
/// so the gradient can be taken without a second forward pass.
#[derive(Clone, Debug)]
pub struct TdPass {
    pub td: Vec<f64>,
    /// `Q(o_t, a_t)` under the behavior parameters.
    pub q_taken: Vec<f64>,
    /// `r_t + gamma * (1 - done_t) * max_u Q(o'_t, u)` under the target parameters.
    pub targets: Vec<f64>,
    cache: ForwardCache,
}

impl TdPass {
    pub fn cache(&self) -> &ForwardCache {
        &self.cache
    }
}

fn check_batch(spec: &NetworkSpec, batch: &AgentBatch, gamma: f64) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("transition batch"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    if batch.obs_dim != spec.input_dim {
        return Err(Error::shape("batch observation", spec.input_dim, batch.obs_dim));
    }
    if let Some(&a) = batch.actions.iter().find(|&&a| a >= spec.output_dim) {
        return Err(Error::shape("action index", spec.output_dim, a));
    }
    Ok(())
}

/// Forward passes for a batch: behavior network on `o`, target network on `o'`.
pub fn td_pass(
    spec: &NetworkSpec,
    params: &[f64],
    target_params: &[f64],
    batch: &AgentBatch,
    gamma: f64,
) -> Result<TdPass> {
    check_batch(spec, batch, gamma)?;
    let rows = batch.len();
    let cache = forward_batch(spec, params, &batch.obs, rows)?;
    let next = forward_batch(spec, target_params, &batch.next_obs, rows)?;
    let mut td = Vec::with_capacity(rows);
    let mut q_taken = Vec::with_capacity(rows);
    let mut targets = Vec::with_capacity(rows);
    for t in 0..rows {
        let q = cache.output_row(t)[batch.actions[t]];
        let bootstrap = if batch.dones[t] {
            0.0
        } else {
            gamma * next.output_row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let y = batch.rewards[t] + bootstrap;
        td.push(y - q);
        q_taken.push(q);
        targets.push(y);
    }
    Ok(TdPass {
        td,
        q_taken,
        targets,
        cache,
    })
}

/// `delta_t = r_t + gamma * (1 - done_t) * max_u Q(o'_t, u; target) - Q(o_t, a_t; params)`
pub fn td_vector(
    spec: &NetworkSpec,
    params: &[f64],
    target_params: &[f64],
    batch: &AgentBatch,
    gamma: f64,
) -> Result<Vec<f64>> {
    Ok(td_pass(spec, params, target_params, batch, gamma)?.td)
}

/// Gradient of a squared-error loss whose derivative with respect to
/// `Q(o_t, a_t)` is `-scale * signal_t`. The target side is treated as data.
pub fn signal_gradient(
    spec: &NetworkSpec,
    params: &[f64],
    batch: &AgentBatch,
    cache: &ForwardCache,
    signal: &[f64],
    scale: f64,
) -> Result<ParamVector> {
    if signal.len() != batch.len() {
        return Err(Error::shape("error signal", batch.len(), signal.len()));
    }
    let out = spec.output_dim;
    let mut seeds = vec![0.0; batch.len() * out];
    for (t, (&s, &a)) in signal.iter().zip(&batch.actions).enumerate() {
        seeds[t * out + a] = -scale * s;
    }
    backward_batch(spec, params, cache, &seeds)
}

/// Independent learner loss `(1/T) sum_t delta_t^2`.
pub fn iql_loss(
    spec: &NetworkSpec,
    params: &[f64],
    target_params: &[f64],
    batch: &AgentBatch,
    gamma: f64,
) -> Result<f64> {
    let td = td_vector(spec, params, target_params, batch, gamma)?;
    Ok(td.iter().map(|d| d * d).sum::<f64>() / td.len() as f64)
}

/// Gradient of [`iql_loss`] with respect to the behavior parameters.
pub fn iql_gradient(
    spec: &NetworkSpec,
    params: &[f64],
    target_params: &[f64],
    batch: &AgentBatch,
    gamma: f64,
) -> Result<ParamVector> {
    let pass = td_pass(spec, params, target_params, batch, gamma)?;
    let scale = 2.0 / batch.len() as f64;
    signal_gradient(spec, params, batch, &pass.cache, &pass.td, scale)
}
