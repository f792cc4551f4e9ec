use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_actions, EnvSpec, Environment, StepResult};
use crate::{Error, Result};

pub const STEP_SIZE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct SpreadConfig {
    pub n_agents: usize,
    pub n_landmarks: usize,
    pub horizon: usize,
    pub gamma: f64,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        SpreadConfig {
            n_agents: 2,
            n_landmarks: 2,
            horizon: 25,
            gamma: 0.99,
        }
    }
}

/// Agents on the unit square covering landmarks.
///
/// Actions: `0` noop, `1` +x, `2` -x, `3` +y, `4` -y, each a 0.05 move
/// clamped to the square. Reward per step is minus the sum over landmarks of
/// the distance to the nearest agent. Observation: own position, offset to
/// the closest landmark, offset to the closest teammate (zeros when alone).
#[derive(Clone, Debug)]
pub struct Spread {
    spec: EnvSpec,
    n_landmarks: usize,
    agents: Vec<[f64; 2]>,
    landmarks: Vec<[f64; 2]>,
    t: usize,
    done: bool,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn closest_offset(from: [f64; 2], others: impl Iterator<Item = [f64; 2]>) -> [f64; 2] {
    let mut best: Option<(f64, [f64; 2])> = None;
    for o in others {
        let d = dist(from, o);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, [o[0] - from[0], o[1] - from[1]]));
        }
    }
    best.map_or([0.0, 0.0], |b| b.1)
}

impl Spread {
    pub fn new(config: SpreadConfig) -> Result<Self> {
        if config.n_landmarks == 0 {
            return Err(Error::InvalidEnv("need at least one landmark".into()));
        }
        let spec = EnvSpec {
            n_agents: config.n_agents,
            obs_dims: vec![6; config.n_agents],
            n_actions: vec![5; config.n_agents],
            horizon: config.horizon,
            gamma: config.gamma,
        };
        spec.validate()?;
        Ok(Spread {
            spec,
            n_landmarks: config.n_landmarks,
            agents: Vec::new(),
            landmarks: Vec::new(),
            t: 0,
            done: true,
        })
    }

    /// Places agents and landmarks explicitly, for scripted scenarios.
    pub fn set_positions(&mut self, agents: Vec<[f64; 2]>, landmarks: Vec<[f64; 2]>) -> Result<()> {
        if agents.len() != self.spec.n_agents || landmarks.is_empty() {
            return Err(Error::InvalidEnv("position counts do not match the environment".into()));
        }
        self.agents = agents;
        self.landmarks = landmarks;
        self.t = 0;
        self.done = false;
        Ok(())
    }

    pub fn agents(&self) -> &[[f64; 2]] {
        &self.agents
    }

    pub fn landmarks(&self) -> &[[f64; 2]] {
        &self.landmarks
    }

    /// `-sum_l min_i |agent_i - landmark_l|` at the current positions.
    pub fn coverage_reward(&self) -> f64 {
        -self
            .landmarks
            .iter()
            .map(|&l| self.agents.iter().map(|&a| dist(a, l)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
    }

    fn observations(&self) -> Vec<Vec<f64>> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let l = closest_offset(p, self.landmarks.iter().copied());
                let m = closest_offset(
                    p,
                    self.agents.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &a)| a),
                );
                vec![p[0], p[1], l[0], l[1], m[0], m[1]]
            })
            .collect()
    }
}

impl Environment for Spread {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = || [rng.random::<f64>(), rng.random::<f64>()];
        self.agents = (0..self.spec.n_agents).map(|_| point()).collect();
        self.landmarks = (0..self.n_landmarks).map(|_| point()).collect();
        self.t = 0;
        self.done = false;
        self.observations()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(&self.spec, actions)?;
        if self.done {
            return Err(Error::InvalidEnv("step called on a finished episode".into()));
        }
        for (p, &a) in self.agents.iter_mut().zip(actions) {
            let (axis, sign) = match a {
                1 => (0, 1.0),
                2 => (0, -1.0),
                3 => (1, 1.0),
                4 => (1, -1.0),
                _ => continue,
            };
            p[axis] = (p[axis] + sign * STEP_SIZE).clamp(0.0, 1.0);
        }
        self.t += 1;
        self.done = self.t >= self.spec.horizon;
        Ok(StepResult {
            observations: self.observations(),
            reward: self.coverage_reward(),
            done: self.done,
        })
    }
}
