use crate::comms::{consensus_step, ConsensusWeights};
use crate::neural::{NetworkSpec, ParamVector};
use crate::qcore::{signal_gradient, td_pass, AgentBatch};
use crate::{Error, Result};

/// One consensus step over all agents' TD vectors, returned as each agent's
/// network estimate `N * (sum_j alpha_ij delta_j) - delta_i`.
pub fn network_jtd_all(weights: &ConsensusWeights, all_tds: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = weights.n_agents();
    let mixed = consensus_step(weights, all_tds)?;
    Ok(mixed
        .into_iter()
        .zip(all_tds)
        .map(|(m, own)| m.iter().zip(own).map(|(x, d)| n as f64 * x - d).collect())
        .collect())
}

/// Network-estimated joint TD at `agent`.
pub fn estimate_network_jtd(
    weights: &ConsensusWeights,
    all_tds: &[Vec<f64>],
    agent: usize,
) -> Result<Vec<f64>> {
    if agent >= weights.n_agents() {
        return Err(Error::shape("agent index", weights.n_agents(), agent));
    }
    Ok(network_jtd_all(weights, all_tds)?.swap_remove(agent))
}

fn check_network_td(batch: &AgentBatch, network_td: &[f64]) -> Result<()> {
    if network_td.len() != batch.len() {
        return Err(Error::shape("network TD", batch.len(), network_td.len()));
    }
    if !network_td.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("network TD"));
    }
    Ok(())
}

/// `(1/T) sum_t (delta_t + dhat_t)^2` with `dhat` held fixed.
pub fn dvdn_loss(
    spec: &NetworkSpec,
    params: &[f64],
    target_params: &[f64],
    batch: &AgentBatch,
    gamma: f64,
    network_td: &[f64],
) -> Result<f64> {
    check_network_td(batch, network_td)?;
    let pass = td_pass(spec, params, target_params, batch, gamma)?;
    let sum: f64 = pass
        .td
        .iter()
        .zip(network_td)
        .map(|(d, n)| (d + n) * (d + n))
        .sum();
    Ok(sum / batch.len() as f64)
}

/// Gradient of [`dvdn_loss`] with respect to `params`.
pub fn dvdn_gradient(
    spec: &NetworkSpec,
    params: &[f64],
    target_params: &[f64],
    batch: &AgentBatch,
    gamma: f64,
    network_td: &[f64],
) -> Result<ParamVector> {
    check_network_td(batch, network_td)?;
    let pass = td_pass(spec, params, target_params, batch, gamma)?;
    let signal: Vec<f64> = pass.td.iter().zip(network_td).map(|(d, n)| d + n).collect();
    signal_gradient(spec, params, batch, pass.cache(), &signal, 2.0 / batch.len() as f64)
}
