//! Self-check suites run by `dvdn verify`.
//!
//! Each suite draws random instances from a fixed seed, measures the worst
//! deviation from an invariant and compares it with a pinned tolerance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::algo::{
    dvdn_gradient, gradient_tracking_update, network_jtd_all, run_dvdn_gt_round,
    vdn_gradient_closed_form, vdn_gradient_expanded, vdn_joint_gradient, AgentLearnerState,
    RoundConfig, StepRule,
};
use crate::comms::{
    consensus_step, consensus_to_limit, is_connected, metropolis_weights, CommGraph, GraphSampler,
};
use crate::envs::DEFAULT_CLIMB_PAYOFFS;
use crate::neural::{backward, forward, init_params, AdamState, NetworkSpec, ParamVector};
use crate::qcore::{td_vector, AgentBatch, Transition};
use crate::rng::{stream_rng, Stream};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &'static str, worst: f64, tolerance: f64, detail: String) -> Self {
        SuiteReport {
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
            detail,
        }
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<22} worst={:.3e} tol={:.1e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.detail
        )
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn random_spec<R: Rng>(rng: &mut R) -> NetworkSpec {
    let input = rng.random_range(1..=5);
    let hidden = (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=6)).collect();
    NetworkSpec::new(input, hidden, rng.random_range(1..=4)).expect("positive dims")
}

fn random_vec<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

fn random_batch<R: Rng>(rng: &mut R, spec: &NetworkSpec, rewards: &[f64], dones: &[bool]) -> AgentBatch {
    let transitions: Vec<Transition> = rewards
        .iter()
        .zip(dones)
        .map(|(&reward, &done)| Transition {
            obs: random_vec(rng, spec.input_dim, 1.0),
            action: rng.random_range(0..spec.output_dim),
            reward,
            next_obs: random_vec(rng, spec.input_dim, 1.0),
            done,
        })
        .collect();
    AgentBatch::from_transitions(spec.input_dim, &transitions).expect("consistent dims")
}

/// Random connected graphs: connectivity, symmetry, row sums, conservation,
/// and convergence of repeated consensus to the mean.
pub fn consensus_suite(samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, Stream::Graph);
    let mut worst_row: f64 = 0.0;
    let mut worst_cons: f64 = 0.0;
    let mut slow = 0usize;
    let mut failures = 0usize;
    for k in 0..samples {
        let n = 2 + k % 7;
        let mut sampler = GraphSampler::new(stream_rng(seed ^ k as u64, Stream::Graph), n, rng.random())?;
        let g = sampler.sample();
        let w = metropolis_weights(&g);
        if !is_connected(n, g.edges()) {
            failures += 1;
        }
        for i in 0..n {
            for j in 0..n {
                let a = w.get(i, j);
                if a != w.get(j, i) || !(0.0..=1.0).contains(&a) || ((a > 0.0) != (i == j || g.has_edge(i, j))) {
                    failures += 1;
                }
            }
        }
        worst_row = worst_row.max(w.max_row_sum_error());
        let values: Vec<f64> = random_vec(&mut rng, n, 10.0);
        let out = consensus_step(&w, &values)?;
        let scale = n as f64 * max_abs(&values).max(1.0);
        worst_cons = worst_cons.max((out.iter().sum::<f64>() - values.iter().sum::<f64>()).abs() / scale);
        if k % 100 == 0 {
            let target = values.iter().sum::<f64>() / n as f64;
            let lim = consensus_to_limit(&g, &values, 500, 1e-6)?;
            let dev = lim.values.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
            if !lim.converged || dev >= 1e-6 {
                slow += 1;
            }
        }
    }
    let worst = if failures + slow > 0 { f64::INFINITY } else { worst_row.max(worst_cons) };
    Ok(SuiteReport::new(
        "consensus",
        worst,
        1e-10,
        format!("{samples} graphs, row-sum err {worst_row:.1e}, conservation {worst_cons:.1e}, structural failures {failures}, slow consensus {slow}"),
    ))
}

/// Backpropagation against central finite differences.
pub fn gradient_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, Stream::Init(0));
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let spec = random_spec(&mut rng);
        // nonzero biases keep pre-activations off the ReLU kink
        let params = random_vec(&mut rng, spec.param_count(), 1.0);
        let obs = random_vec(&mut rng, spec.input_dim, 1.0);
        let seed_vec = random_vec(&mut rng, spec.output_dim, 1.0);
        let g = backward(&spec, &params, &obs, &seed_vec)?;
        let f = |p: &[f64]| -> Result<f64> {
            Ok(forward(&spec, p, &obs)?.iter().zip(&seed_vec).map(|(q, s)| q * s).sum())
        };
        let mut p = params.clone();
        for k in 0..p.len() {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p)?;
            p[k] = orig - h;
            let down = f(&p)?;
            p[k] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    Ok(SuiteReport::new("gradient", worst, 1e-4, format!("{cases} random networks")))
}

fn random_team<R: Rng>(rng: &mut R, n: usize, t: usize, homogeneous: bool) -> (Vec<AgentLearnerState>, Vec<AgentBatch>) {
    let rewards = random_vec(rng, t, 2.0);
    let dones: Vec<bool> = (0..t).map(|_| rng.random_bool(0.2)).collect();
    let first = random_spec(rng);
    let mut states = Vec::with_capacity(n);
    let mut batches = Vec::with_capacity(n);
    for _ in 0..n {
        let spec = if homogeneous { first.clone() } else { random_spec(rng) };
        let params = init_params(&spec, rng);
        let mut s = AgentLearnerState::new(spec.clone(), params, 1e-3);
        s.target_params = init_params(&spec, rng);
        batches.push(random_batch(rng, &spec, &rewards, &dones));
        states.push(s);
    }
    (states, batches)
}

/// The summed-decomposition gradient computed three ways: through the mixer,
/// from the summed TD vector, and from the expanded square.
pub fn joint_td_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, Stream::Init(1));
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=4);
        let t = rng.random_range(1..=8);
        let (states, batches) = random_team(&mut rng, n, t, false);
        let gamma = rng.random_range(0.5..0.99);
        let joint = vdn_joint_gradient(&states, &batches, gamma)?;
        let closed = vdn_gradient_closed_form(&states, &batches, gamma)?;
        let expanded = vdn_gradient_expanded(&states, &batches, gamma)?;
        for ((a, b), c) in joint.iter().zip(&closed).zip(&expanded) {
            let scale = max_abs(a).max(1.0);
            worst = worst.max(max_abs_diff(a, b) / scale).max(max_abs_diff(a, c) / scale);
        }
    }
    Ok(SuiteReport::new("joint_td_gradient", worst, 1e-10, format!("{cases} random teams")))
}

fn climb_batches<R: Rng>(rng: &mut R, t: usize) -> Vec<AgentBatch> {
    let acts: Vec<(usize, usize)> = (0..t).map(|_| (rng.random_range(0..3), rng.random_range(0..3))).collect();
    (0..2)
        .map(|agent| {
            let transitions: Vec<Transition> = acts
                .iter()
                .map(|&(a, b)| Transition {
                    obs: vec![1.0],
                    action: if agent == 0 { a } else { b },
                    reward: DEFAULT_CLIMB_PAYOFFS[a][b],
                    next_obs: vec![1.0],
                    done: true,
                })
                .collect();
            AgentBatch::from_transitions(1, &transitions).expect("fixed dims")
        })
        .collect()
}

/// DVDN on the complete graph against the centralized gradient, and the
/// direction of the Adam updates the two gradients produce.
pub fn complete_graph_suite(rounds: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, Stream::Init(2));
    let spec = NetworkSpec::new(1, vec![16], 3)?;
    let mut states: Vec<AgentLearnerState> = (0..2)
        .map(|_| AgentLearnerState::new(spec.clone(), init_params(&spec, &mut rng), 1e-3))
        .collect();
    let mut dvdn_adam: Vec<AdamState> = (0..2).map(|_| AdamState::new(spec.param_count(), 1e-3)).collect();
    let n = states.len();
    let w = metropolis_weights(&CommGraph::complete(n));
    let gamma = 0.99;
    let mut worst_grad: f64 = 0.0;
    let mut worst_cos: f64 = 0.0;
    for _ in 0..rounds {
        let t = 32;
        let batches = climb_batches(&mut rng, t);
        let vdn = vdn_joint_gradient(&states, &batches, gamma)?;
        let tds = states
            .iter()
            .zip(&batches)
            .map(|(s, b)| td_vector(&s.spec, &s.params, &s.target_params, b, gamma))
            .collect::<Result<Vec<_>>>()?;
        let est = network_jtd_all(&w, &tds)?;
        for (i, s) in states.iter_mut().enumerate() {
            let g = dvdn_gradient(&s.spec, &s.params, &s.target_params, &batches[i], gamma, &est[i])?;
            let scaled: Vec<f64> = vdn[i].iter().map(|x| x * n as f64 / t as f64).collect();
            worst_grad = worst_grad.max(max_abs_diff(&g, &scaled) / max_abs(&scaled).max(1.0));

            let mut a = s.params.clone();
            dvdn_adam[i].step(&mut a, &g)?;
            let before = s.params.clone();
            s.adam.step(&mut s.params, &vdn[i])?;
            let mask: Vec<usize> = (0..g.len()).filter(|&k| vdn[i][k].abs() > 1e-3).collect();
            if !mask.is_empty() {
                let du: Vec<f64> = mask.iter().map(|&k| a[k] - before[k]).collect();
                let dv: Vec<f64> = mask.iter().map(|&k| s.params[k] - before[k]).collect();
                let cos = du.iter().zip(&dv).map(|(x, y)| x * y).sum::<f64>()
                    / (du.iter().map(|x| x * x).sum::<f64>().sqrt() * dv.iter().map(|x| x * x).sum::<f64>().sqrt());
                worst_cos = worst_cos.max(1.0 - cos);
            }
        }
    }
    let worst = (worst_grad / 1e-8).max(worst_cos / 1e-3) * 1e-8;
    Ok(SuiteReport::new(
        "complete_graph",
        worst,
        1e-8,
        format!("{rounds} rounds, gradient err {worst_grad:.1e}, 1-cos {worst_cos:.1e}"),
    ))
}

/// Tracker conservation on random graphs, and convergence of plain
/// gradient tracking on separable quadratics over a ring.
pub fn tracking_suite(rounds: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, Stream::Init(3));
    let spec = NetworkSpec::new(1, vec![1], 1)?;
    let n = 5;
    let dim = 4;
    let mut states: Vec<AgentLearnerState> = (0..n)
        .map(|_| AgentLearnerState::new(spec.clone(), ParamVector::from(random_vec(&mut rng, dim, 1.0)), 1e-3))
        .collect();
    let mut sampler = GraphSampler::new(stream_rng(seed, Stream::Graph), n, 0.3)?;
    let mut worst_cons: f64 = 0.0;
    for _ in 0..rounds {
        let g = sampler.sample();
        let grads: Vec<ParamVector> = (0..n).map(|_| ParamVector::from(random_vec(&mut rng, dim, 5.0))).collect();
        gradient_tracking_update(&metropolis_weights(&g), &mut states, &grads, StepRule::Adam, None)?;
        for k in 0..dim {
            let z: f64 = states.iter().map(|s| s.tracker[k]).sum();
            let gs: f64 = grads.iter().map(|g| g[k]).sum();
            worst_cons = worst_cons.max((z - gs).abs());
        }
    }

    let c: Vec<f64> = (0..n).map(|i| i as f64 * 1.5 - 2.0).collect();
    let target = c.iter().sum::<f64>() / n as f64;
    let ring = metropolis_weights(&CommGraph::ring(n));
    let mut quad: Vec<AgentLearnerState> = (0..n)
        .map(|_| AgentLearnerState::new(spec.clone(), ParamVector::from(vec![rng.random_range(-3.0..3.0)]), 0.0))
        .collect();
    for _ in 0..3000 {
        let grads: Vec<ParamVector> = quad
            .iter()
            .zip(&c)
            .map(|(s, ci)| ParamVector::from(vec![2.0 * (s.params[0] - ci)]))
            .collect();
        gradient_tracking_update(&ring, &mut quad, &grads, StepRule::Plain { lr: 0.05 }, None)?;
    }
    let worst_quad = quad.iter().map(|s| (s.params[0] - target).abs()).fold(0.0, f64::max);
    let worst = (worst_cons / 1e-9).max(worst_quad / 1e-5) * 1e-9;
    Ok(SuiteReport::new(
        "gradient_tracking",
        worst,
        1e-9,
        format!("conservation {worst_cons:.1e} over {rounds} rounds, quadratic err {worst_quad:.1e}"),
    ))
}

/// Identical agents on the complete graph stay bit-identical under DVDN-GT.
pub fn sharing_suite(rounds: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng: ChaCha8Rng = stream_rng(seed, Stream::Init(4));
    let spec = NetworkSpec::new(1, vec![16], 3)?;
    let params = init_params(&spec, &mut rng);
    let n = 3;
    let mut states: Vec<AgentLearnerState> =
        (0..n).map(|_| AgentLearnerState::new(spec.clone(), params.clone(), 1e-3)).collect();
    let graph = CommGraph::complete(n);
    let cfg = RoundConfig::default();
    let mut diverged = 0usize;
    for _ in 0..rounds {
        let b = climb_batches(&mut rng, 16).swap_remove(0);
        let batches = vec![b; n];
        run_dvdn_gt_round(&mut states, &batches, &graph, &cfg, true)?;
        if states.iter().any(|s| s.params != states[0].params) {
            diverged += 1;
        }
    }
    Ok(SuiteReport::new(
        "parameter_sharing",
        diverged as f64,
        0.0,
        format!("{rounds} rounds, rounds with differing parameters: {diverged}"),
    ))
}

/// Every suite at its acceptance size.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        consensus_suite(10_000, seed)?,
        gradient_suite(100, seed)?,
        joint_td_suite(100, seed)?,
        complete_graph_suite(1000, seed)?,
        tracking_suite(1000, seed)?,
        sharing_suite(100, seed)?,
    ])
}
