#![allow(dead_code)]

use std::path::PathBuf;

use dvdn::envs::DEFAULT_CLIMB_PAYOFFS;
use dvdn::neural::NetworkSpec;
use dvdn::qcore::{AgentBatch, Transition};
use rand::Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn random_vec<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_spec<R: Rng>(rng: &mut R) -> NetworkSpec {
    let input = rng.random_range(1..=5);
    let hidden = (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=6)).collect();
    NetworkSpec::new(input, hidden, rng.random_range(1..=4)).unwrap()
}

/// Straight matrix-vector forward pass: for each layer a weight block
/// stored output-major, then the biases, ReLU on all but the last layer.
pub fn oracle_forward(spec: &NetworkSpec, params: &[f64], obs: &[f64]) -> Vec<f64> {
    let dims: Vec<usize> = spec.dims().collect();
    let mut x = obs.to_vec();
    let mut offset = 0;
    for l in 0..dims.len() - 1 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let w = &params[offset..offset + fan_in * fan_out];
        let b = &params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
        offset += (fan_in + 1) * fan_out;
        let mut y = vec![0.0; fan_out];
        for o in 0..fan_out {
            let mut z = b[o];
            for i in 0..fan_in {
                z += w[o * fan_in + i] * x[i];
            }
            y[o] = if l + 2 < dims.len() { z.max(0.0) } else { z };
        }
        x = y;
    }
    assert_eq!(offset, params.len());
    x
}

/// `r + gamma (1 - done) max_u Q(o', u; target) - Q(o, a; params)` per row.
pub fn oracle_td(spec: &NetworkSpec, params: &[f64], target: &[f64], batch: &AgentBatch, gamma: f64) -> Vec<f64> {
    let d = batch.obs_dim;
    (0..batch.len())
        .map(|t| {
            let q = oracle_forward(spec, params, &batch.obs[t * d..(t + 1) * d]);
            let next = oracle_forward(spec, target, &batch.next_obs[t * d..(t + 1) * d]);
            let best = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let boot = if batch.dones[t] { 0.0 } else { gamma * best };
            batch.rewards[t] + boot - q[batch.actions[t]]
        })
        .collect()
}

/// Aligned batches of `t` uniformly random joint actions in the climb game.
pub fn climb_batches<R: Rng>(rng: &mut R, t: usize) -> Vec<AgentBatch> {
    let acts: Vec<(usize, usize)> = (0..t).map(|_| (rng.random_range(0..3), rng.random_range(0..3))).collect();
    (0..2)
        .map(|agent| {
            let tr: Vec<Transition> = acts
                .iter()
                .map(|&(a, b)| Transition {
                    obs: vec![1.0],
                    action: if agent == 0 { a } else { b },
                    reward: DEFAULT_CLIMB_PAYOFFS[a][b],
                    next_obs: vec![1.0],
                    done: true,
                })
                .collect();
            AgentBatch::from_transitions(1, &tr).unwrap()
        })
        .collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn bfs_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let other = if a == v { b } else if b == v { a } else { continue };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen.iter().all(|&s| s)
}
