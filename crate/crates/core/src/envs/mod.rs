//! Small cooperative environments with a shared team reward.
//!
//! * [`Foraging`]: grid world where agents load fruits whose level may exceed
//!   any single agent's level.
//! * [`Spread`]: agents move on the unit square to cover landmarks.
//! * [`Climb`]: one-step matrix game with miscoordination penalties.

mod climb;
mod foraging;
mod spread;

pub use climb::{Climb, ClimbConfig, DEFAULT_CLIMB_PAYOFFS};
pub use foraging::{Foraging, ForagingConfig, ForagingLayout};
pub use spread::{Spread, SpreadConfig};

use crate::{Error, Result};

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub n_agents: usize,
    pub obs_dims: Vec<usize>,
    pub n_actions: Vec<usize>,
    pub horizon: usize,
    pub gamma: f64,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::InvalidEnv("at least one agent is required".into()));
        }
        if self.obs_dims.len() != self.n_agents || self.n_actions.len() != self.n_agents {
            return Err(Error::InvalidEnv("per-agent dimension lists must have one entry per agent".into()));
        }
        if self.obs_dims.contains(&0) || self.n_actions.contains(&0) {
            return Err(Error::InvalidEnv("observation and action dimensions must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidEnv("horizon must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidEnv(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }

    /// All agents share observation and action spaces.
    pub fn is_homogeneous(&self) -> bool {
        self.obs_dims.windows(2).all(|w| w[0] == w[1]) && self.n_actions.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Vec<f64>>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode; the same seed always produces the same episode.
    fn reset(&mut self, seed: u64) -> Vec<Vec<f64>>;

    fn step(&mut self, actions: &[usize]) -> Result<StepResult>;
}

/// Environment id plus parameters, as selected by an experiment config.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvConfig {
    Foraging(ForagingConfig),
    Spread(SpreadConfig),
    Climb(ClimbConfig),
}

impl EnvConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EnvConfig::Foraging(_) => "foraging",
            EnvConfig::Spread(_) => "spread",
            EnvConfig::Climb(_) => "climb",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvConfig::Foraging(c) => Box::new(Foraging::new(c.clone())?),
            EnvConfig::Spread(c) => Box::new(Spread::new(c.clone())?),
            EnvConfig::Climb(c) => Box::new(Climb::new(c.clone())?),
        })
    }
}

pub(crate) fn check_actions(spec: &EnvSpec, actions: &[usize]) -> Result<()> {
    if actions.len() != spec.n_agents {
        return Err(Error::shape("joint action", spec.n_agents, actions.len()));
    }
    for (&a, &n) in actions.iter().zip(&spec.n_actions) {
        if a >= n {
            return Err(Error::shape("action index", n, a));
        }
    }
    Ok(())
}
