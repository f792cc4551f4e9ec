use crate::comms::{metropolis_weights, CommGraph};
use crate::neural::ParamVector;
use crate::qcore::{signal_gradient, td_pass, AgentBatch};
use crate::{Error, Result};

use super::diagnostics::{disagreement, l2};
use super::jtd::network_jtd_all;
use super::tracking::gradient_tracking_update;
use super::vdn::{aligned_passes, joint_residual};
use super::{AgentLearnerState, RoundConfig, RoundDiagnostics, StepRule};

fn check_counts(states: &[AgentLearnerState], batches: &[AgentBatch]) -> Result<()> {
    if states.is_empty() {
        return Err(Error::Empty("agent set"));
    }
    if batches.len() != states.len() {
        return Err(Error::shape("batch count", states.len(), batches.len()));
    }
    Ok(())
}

fn check_graph(states: &[AgentLearnerState], graph: &CommGraph) -> Result<()> {
    if graph.n_agents() != states.len() {
        return Err(Error::shape("graph size", states.len(), graph.n_agents()));
    }
    Ok(())
}

fn step_all(
    states: &mut [AgentLearnerState],
    grads: &[ParamVector],
    cfg: &RoundConfig,
) -> Result<()> {
    for (s, g) in states.iter().zip(grads) {
        if !g.is_finite() {
            return Err(Error::NonFinite("local gradient"));
        }
        if g.len() != s.params.len() {
            return Err(Error::shape("local gradient", s.params.len(), g.len()));
        }
    }
    for (s, g) in states.iter_mut().zip(grads) {
        s.adam_step(g, cfg.grad_clip)?;
        s.finish_update(cfg.target_update);
    }
    Ok(())
}

/// Independent Q-learning: every agent fits its own TD error.
pub fn run_iql_round(
    states: &mut [AgentLearnerState],
    batches: &[AgentBatch],
    cfg: &RoundConfig,
) -> Result<RoundDiagnostics> {
    check_counts(states, batches)?;
    let mut grads = Vec::with_capacity(states.len());
    let mut td_norms = Vec::with_capacity(states.len());
    for (s, b) in states.iter().zip(batches) {
        let pass = td_pass(&s.spec, &s.params, &s.target_params, b, cfg.gamma)?;
        let scale = 2.0 / b.len() as f64;
        grads.push(signal_gradient(&s.spec, &s.params, b, pass.cache(), &pass.td, scale)?);
        td_norms.push(l2(&pass.td));
    }
    step_all(states, &grads, cfg)?;
    Ok(RoundDiagnostics {
        round: states[0].updates,
        grad_norms: grads.iter().map(|g| g.norm()).collect(),
        tracker_norms: None,
        td_norms,
        network_td_norms: None,
        disagreement: disagreement(states.iter().map(|s| &s.params)),
    })
}

/// Centralized value decomposition with one network per agent.
pub fn run_vdn_round(
    states: &mut [AgentLearnerState],
    batches: &[AgentBatch],
    cfg: &RoundConfig,
) -> Result<RoundDiagnostics> {
    let passes = aligned_passes(states, batches, cfg.gamma)?;
    let residual = joint_residual(&passes);
    let scale = 2.0 / states.len() as f64;
    let grads = states
        .iter()
        .zip(batches)
        .zip(&passes)
        .map(|((s, b), p)| signal_gradient(&s.spec, &s.params, b, p.cache(), &residual, scale))
        .collect::<Result<Vec<_>>>()?;
    step_all(states, &grads, cfg)?;
    Ok(RoundDiagnostics {
        round: states[0].updates,
        grad_norms: grads.iter().map(|g| g.norm()).collect(),
        tracker_norms: None,
        td_norms: passes.iter().map(|p| l2(&p.td)).collect(),
        network_td_norms: None,
        disagreement: disagreement(states.iter().map(|s| &s.params)),
    })
}

/// Centralized value decomposition with a single network shared by all agents.
pub fn run_vdn_ps_round(
    shared: &mut AgentLearnerState,
    batches: &[AgentBatch],
    cfg: &RoundConfig,
) -> Result<RoundDiagnostics> {
    if batches.is_empty() {
        return Err(Error::Empty("agent set"));
    }
    let t = batches[0].len();
    if let Some(b) = batches.iter().find(|b| b.len() != t) {
        return Err(Error::shape("aligned batch length", t, b.len()));
    }
    let s = &*shared;
    let passes = batches
        .iter()
        .map(|b| td_pass(&s.spec, &s.params, &s.target_params, b, cfg.gamma))
        .collect::<Result<Vec<_>>>()?;
    let residual = joint_residual(&passes);
    let scale = 2.0 / batches.len() as f64;
    let mut grad = ParamVector::zeros(s.params.len());
    for (b, p) in batches.iter().zip(&passes) {
        let g = signal_gradient(&s.spec, &s.params, b, p.cache(), &residual, scale)?;
        grad.add_scaled(1.0, &g);
    }
    step_all(std::slice::from_mut(shared), std::slice::from_ref(&grad), cfg)?;
    Ok(RoundDiagnostics {
        round: shared.updates,
        grad_norms: vec![grad.norm()],
        tracker_norms: None,
        td_norms: passes.iter().map(|p| l2(&p.td)).collect(),
        network_td_norms: None,
        disagreement: Some(0.0),
    })
}

struct DvdnGradients {
    grads: Vec<ParamVector>,
    td_norms: Vec<f64>,
    network_td_norms: Option<Vec<f64>>,
}

fn dvdn_local_gradients(
    states: &[AgentLearnerState],
    batches: &[AgentBatch],
    graph: &CommGraph,
    cfg: &RoundConfig,
    use_jtd: bool,
) -> Result<DvdnGradients> {
    check_counts(states, batches)?;
    check_graph(states, graph)?;
    let passes = aligned_passes(states, batches, cfg.gamma)?;
    let network = if use_jtd {
        let tds: Vec<Vec<f64>> = passes.iter().map(|p| p.td.clone()).collect();
        Some(network_jtd_all(&metropolis_weights(graph), &tds)?)
    } else {
        None
    };
    let mut grads = Vec::with_capacity(states.len());
    for (i, ((s, b), p)) in states.iter().zip(batches).zip(&passes).enumerate() {
        let signal: Vec<f64> = match &network {
            Some(net) => p.td.iter().zip(&net[i]).map(|(d, e)| d + e).collect(),
            None => p.td.clone(),
        };
        let scale = 2.0 / b.len() as f64;
        grads.push(signal_gradient(&s.spec, &s.params, b, p.cache(), &signal, scale)?);
    }
    Ok(DvdnGradients {
        grads,
        td_norms: passes.iter().map(|p| l2(&p.td)).collect(),
        network_td_norms: network.map(|net| net.iter().map(|v| l2(v)).collect()),
    })
}

/// Distributed value decomposition: each agent augments its TD error with the
/// network estimate of its teammates' TD errors, obtained over `graph`.
pub fn run_dvdn_round(
    states: &mut [AgentLearnerState],
    batches: &[AgentBatch],
    graph: &CommGraph,
    cfg: &RoundConfig,
) -> Result<RoundDiagnostics> {
    let local = dvdn_local_gradients(states, batches, graph, cfg, true)?;
    step_all(states, &local.grads, cfg)?;
    Ok(RoundDiagnostics {
        round: states[0].updates,
        grad_norms: local.grads.iter().map(|g| g.norm()).collect(),
        tracker_norms: None,
        td_norms: local.td_norms,
        network_td_norms: local.network_td_norms,
        disagreement: disagreement(states.iter().map(|s| &s.params)),
    })
}

/// Gradient tracking on top of the local losses. With `use_jtd` the local
/// loss is the DVDN loss, otherwise the independent learner loss.
pub fn run_dvdn_gt_round(
    states: &mut [AgentLearnerState],
    batches: &[AgentBatch],
    graph: &CommGraph,
    cfg: &RoundConfig,
    use_jtd: bool,
) -> Result<RoundDiagnostics> {
    check_counts(states, batches)?;
    if let Some((i, s)) = states.iter().enumerate().find(|(_, s)| s.spec != states[0].spec) {
        return Err(Error::Heterogeneous(format!(
            "gradient tracking needs identical networks, agent {i} has {:?} but agent 0 has {:?}",
            s.spec, states[0].spec
        )));
    }
    let local = dvdn_local_gradients(states, batches, graph, cfg, use_jtd)?;
    let weights = metropolis_weights(graph);
    gradient_tracking_update(&weights, states, &local.grads, StepRule::Adam, cfg.grad_clip)?;
    for s in states.iter_mut() {
        s.finish_update(cfg.target_update);
    }
    Ok(RoundDiagnostics {
        round: states[0].updates,
        grad_norms: local.grads.iter().map(|g| g.norm()).collect(),
        tracker_norms: Some(states.iter().map(|s| s.tracker.norm()).collect()),
        td_norms: local.td_norms,
        network_td_norms: local.network_td_norms,
        disagreement: disagreement(states.iter().map(|s| &s.params)),
    })
}
