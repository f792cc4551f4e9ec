use rand::Rng;

use crate::neural::{forward, NetworkSpec};
use crate::{Error, Result};

/// Linear epsilon decay from `start` to `end` over `anneal_steps`
/// environment steps, constant afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_steps: u64,
    pub eval_epsilon: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            anneal_steps: 50_000,
            eval_epsilon: 0.0,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if step >= self.anneal_steps {
            return self.end;
        }
        let frac = step as f64 / self.anneal_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn greedy_action(q: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = a;
        }
    }
    best
}

/// Epsilon-greedy action. Always consumes one uniform draw, plus one more
/// when exploring.
pub fn select_action<R: Rng + ?Sized>(
    spec: &NetworkSpec,
    params: &[f64],
    obs: &[f64],
    eps: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::config("epsilon", format!("must lie in [0, 1], got {eps}")));
    }
    if rng.random::<f64>() < eps {
        return Ok(rng.random_range(0..spec.output_dim));
    }
    Ok(greedy_action(&forward(spec, params, obs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_params;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn schedule_endpoints_are_exact() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            anneal_steps: 1000,
            eval_epsilon: 0.0,
        };
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(1000), 0.05);
        assert_eq!(s.value(5000), 0.05);
        assert!((s.value(500) - 0.525).abs() < 1e-15);
        let instant = EpsilonSchedule {
            anneal_steps: 0,
            ..s
        };
        assert_eq!(instant.value(0), 0.05);
    }

    #[test]
    fn ties_break_low() {
        assert_eq!(greedy_action(&[0.1, 0.9, 0.9]), 1);
        assert_eq!(greedy_action(&[0.1 + 5.0, 0.9 + 5.0, 0.9 + 5.0]), 1);
        assert_eq!(greedy_action(&[2.0, 2.0]), 0);
    }

    #[test]
    fn greedy_is_shift_invariant() {
        let spec = NetworkSpec::new(3, vec![8], 4).unwrap();
        let mut params = init_params(&spec, &mut stream_rng(1, Stream::Init(0)));
        let obs = [0.2, -0.4, 0.9];
        let mut rng = stream_rng(0, Stream::Explore(0));
        let a = select_action(&spec, &params, &obs, 0.0, &mut rng).unwrap();
        // Output biases are the last four entries.
        let n = params.len();
        params[n - 4..].iter_mut().for_each(|b| *b += 3.25);
        let b = select_action(&spec, &params, &obs, 0.0, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let spec = NetworkSpec::new(1, vec![2], 2).unwrap();
        let params = init_params(&spec, &mut stream_rng(1, Stream::Init(0)));
        let mut rng = stream_rng(0, Stream::Explore(0));
        assert!(select_action(&spec, &params, &[0.0], 1.5, &mut rng).is_err());
    }
}
