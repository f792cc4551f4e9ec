use crate::neural::ParamVector;
use crate::{Error, Result};

use super::CommGraph;

/// Symmetric doubly stochastic mixing matrix for one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusWeights {
    n: usize,
    /// Dense row-major `n x n`.
    matrix: Vec<f64>,
    /// Nonzero entries of each row as `(column, weight)`, ascending columns,
    /// self included.
    rows: Vec<Vec<(usize, f64)>>,
}

impl ConsensusWeights {
    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn dense_row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.n..(i + 1) * self.n]
    }

    fn from_dense(n: usize, matrix: Vec<f64>) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let w = matrix[i * n + j];
                        (w != 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect();
        ConsensusWeights { n, matrix, rows }
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.dense_row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Metropolis weights: `1 / (1 + max(d(n), d(m)))` on edges, the remainder of
/// the row on the diagonal, zero elsewhere.
///
/// The diagonal is evaluated as an exact rational and rounded once, so the
/// complete graph yields bit-identical entries `1/N` everywhere.
pub fn metropolis_weights(graph: &CommGraph) -> ConsensusWeights {
    let n = graph.n_agents();
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        let mut denominators = Vec::with_capacity(graph.degree(i));
        for &j in graph.neighbors(i) {
            let k = 1 + graph.degree(i).max(graph.degree(j));
            matrix[i * n + j] = 1.0 / k as f64;
            denominators.push(k as u64);
        }
        matrix[i * n + i] = self_weight(&denominators, &matrix[i * n..(i + 1) * n]);
    }
    ConsensusWeights::from_dense(n, matrix)
}

/// `1 - sum(1/k)` for the given denominators.
fn self_weight(denominators: &[u64], row: &[f64]) -> f64 {
    const EXACT_LIMIT: u64 = 1 << 53;
    let lcm = denominators.iter().try_fold(1u64, |acc, &k| {
        let l = acc / gcd(acc, k) * k;
        (l <= EXACT_LIMIT).then_some(l)
    });
    match lcm {
        Some(l) => {
            let taken: u64 = denominators.iter().map(|&k| l / k).sum();
            // Both operands are exact integers below 2^53, so the quotient is
            // correctly rounded.
            (l - taken) as f64 / l as f64
        }
        None => 1.0 - row.iter().sum::<f64>(),
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Anything that can travel through a consensus step: a scalar, a vector or
/// a flat parameter vector.
pub trait Payload: Sized {
    fn as_flat(&self) -> &[f64];
    fn from_flat(values: Vec<f64>) -> Self;
}

impl Payload for f64 {
    fn as_flat(&self) -> &[f64] {
        std::slice::from_ref(self)
    }
    fn from_flat(values: Vec<f64>) -> Self {
        values[0]
    }
}

impl Payload for Vec<f64> {
    fn as_flat(&self) -> &[f64] {
        self
    }
    fn from_flat(values: Vec<f64>) -> Self {
        values
    }
}

impl Payload for ParamVector {
    fn as_flat(&self) -> &[f64] {
        self.as_slice()
    }
    fn from_flat(values: Vec<f64>) -> Self {
        ParamVector::from(values)
    }
}

/// One synchronous round: `out_i = sum_j alpha_ij * values_j`, summed over the
/// closed neighborhood of `i` in ascending agent order.
pub fn consensus_step<P: Payload>(weights: &ConsensusWeights, values: &[P]) -> Result<Vec<P>> {
    if values.len() != weights.n {
        return Err(Error::shape("consensus payload count", weights.n, values.len()));
    }
    let len = values.first().map_or(0, |v| v.as_flat().len());
    for v in values {
        if v.as_flat().len() != len {
            return Err(Error::shape("consensus payload length", len, v.as_flat().len()));
        }
    }
    let out = weights
        .rows
        .iter()
        .map(|row| {
            let (first, rest) = row.split_first().expect("closed neighborhood is nonempty");
            let mut acc: Vec<f64> = values[first.0]
                .as_flat()
                .iter()
                .map(|x| first.1 * x)
                .collect();
            for &(j, w) in rest {
                for (a, x) in acc.iter_mut().zip(values[j].as_flat()) {
                    *a += w * x;
                }
            }
            P::from_flat(acc)
        })
        .collect();
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ConsensusOutcome<P> {
    pub values: Vec<P>,
    pub iterations: usize,
    pub converged: bool,
}

/// Repeats [`consensus_step`] on a fixed graph until every entry is within
/// `tol` of the initial network average or `max_iters` is reached.
/// Non-convergence is reported through [`ConsensusOutcome::converged`].
pub fn consensus_to_limit<P: Payload + Clone>(
    graph: &CommGraph,
    values: &[P],
    max_iters: usize,
    tol: f64,
) -> Result<ConsensusOutcome<P>> {
    let weights = metropolis_weights(graph);
    if values.len() != weights.n {
        return Err(Error::shape("consensus payload count", weights.n, values.len()));
    }
    let len = values.first().map_or(0, |v| v.as_flat().len());
    let mut mean = vec![0.0; len];
    for v in values {
        if v.as_flat().len() != len {
            return Err(Error::shape("consensus payload length", len, v.as_flat().len()));
        }
        for (m, x) in mean.iter_mut().zip(v.as_flat()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= values.len() as f64);

    let deviation = |vs: &[P]| -> f64 {
        vs.iter()
            .flat_map(|v| v.as_flat().iter().zip(&mean).map(|(x, m)| (x - m).abs()))
            .fold(0.0, f64::max)
    };

    let mut current = values.to_vec();
    let mut iterations = 0;
    while deviation(&current) >= tol {
        if iterations == max_iters {
            return Ok(ConsensusOutcome {
                values: current,
                iterations,
                converged: false,
            });
        }
        current = consensus_step(&weights, &current)?;
        iterations += 1;
    }
    Ok(ConsensusOutcome {
        values: current,
        iterations,
        converged: true,
    })
}
