use super::{check_actions, EnvSpec, Environment, StepResult};
use crate::{Error, Result};

pub const DEFAULT_CLIMB_PAYOFFS: [[f64; 3]; 3] =
    [[11.0, -30.0, 0.0], [-30.0, 7.0, 0.0], [0.0, 6.0, 5.0]];

#[derive(Clone, Debug, PartialEq)]
pub struct ClimbConfig {
    /// `payoffs[a_1][a_2]`; must be 3x3.
    pub payoffs: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl Default for ClimbConfig {
    fn default() -> Self {
        ClimbConfig {
            payoffs: DEFAULT_CLIMB_PAYOFFS.iter().map(|r| r.to_vec()).collect(),
            gamma: 0.99,
        }
    }
}

/// Two agents, one step, constant observation.
#[derive(Clone, Debug)]
pub struct Climb {
    spec: EnvSpec,
    payoffs: [[f64; 3]; 3],
    done: bool,
}

impl Climb {
    pub fn new(config: ClimbConfig) -> Result<Self> {
        if config.payoffs.len() != 3 || config.payoffs.iter().any(|r| r.len() != 3) {
            let shape: Vec<usize> = config.payoffs.iter().map(Vec::len).collect();
            return Err(Error::InvalidEnv(format!("climb payoffs must be 3x3, got rows {shape:?}")));
        }
        if config.payoffs.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidEnv("climb payoffs must be finite".into()));
        }
        let mut payoffs = [[0.0; 3]; 3];
        for (dst, src) in payoffs.iter_mut().zip(&config.payoffs) {
            dst.copy_from_slice(src);
        }
        let spec = EnvSpec {
            n_agents: 2,
            obs_dims: vec![1, 1],
            n_actions: vec![3, 3],
            horizon: 1,
            gamma: config.gamma,
        };
        spec.validate()?;
        Ok(Climb { spec, payoffs, done: true })
    }

    pub fn payoff(&self, a1: usize, a2: usize) -> f64 {
        self.payoffs[a1][a2]
    }

    fn observations() -> Vec<Vec<f64>> {
        vec![vec![1.0], vec![1.0]]
    }
}

impl Environment for Climb {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Vec<Vec<f64>> {
        self.done = false;
        Self::observations()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(&self.spec, actions)?;
        if self.done {
            return Err(Error::InvalidEnv("step called on a finished episode".into()));
        }
        self.done = true;
        Ok(StepResult {
            observations: Self::observations(),
            reward: self.payoffs[actions[0]][actions[1]],
            done: true,
        })
    }
}
