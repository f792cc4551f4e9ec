use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_actions, EnvSpec, Environment, StepResult};
use crate::{Error, Result};

pub const MAX_AGENT_LEVEL: u32 = 2;

const NOOP: usize = 0;
const LOAD: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct ForagingConfig {
    pub grid_size: usize,
    pub n_agents: usize,
    pub n_fruits: usize,
    pub sight_radius: usize,
    pub horizon: usize,
    pub gamma: f64,
}

impl Default for ForagingConfig {
    fn default() -> Self {
        ForagingConfig {
            grid_size: 8,
            n_agents: 2,
            n_fruits: 3,
            sight_radius: 2,
            horizon: 25,
            gamma: 0.99,
        }
    }
}

/// A fixed board: `(x, y)` cells and levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ForagingLayout {
    pub agents: Vec<((usize, usize), u32)>,
    pub fruits: Vec<((usize, usize), u32)>,
}

/// Level-based foraging on a square grid.
///
/// Actions: `0` noop, `1` north, `2` south, `3` east, `4` west, `5` load.
/// A move succeeds when the target cell is inside the grid, holds no fruit,
/// holds no agent at the start of the step, and no other agent targets it.
/// A fruit is collected when the loading agents 4-adjacent to it have a
/// summed level at least the fruit's level. Collecting pays
/// `fruit level / total fruit level`.
///
/// Observation: an egocentric `(2r+1)^2` window with an agent-level and a
/// fruit-level channel, then the agent's own position scaled to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Foraging {
    config: ForagingConfig,
    spec: EnvSpec,
    fixed: Option<ForagingLayout>,
    agents: Vec<((usize, usize), u32)>,
    fruits: Vec<Option<((usize, usize), u32)>>,
    total_level: u32,
    t: usize,
    done: bool,
}

fn fruit_cells(grid: usize) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for y in 1..grid.saturating_sub(1) {
        for x in 1..grid - 1 {
            if (x + y) % 2 == 0 {
                cells.push((x, y));
            }
        }
    }
    cells
}

impl Foraging {
    pub fn new(config: ForagingConfig) -> Result<Self> {
        let g = config.grid_size;
        if g < 3 {
            return Err(Error::InvalidEnv(format!("grid_size must be at least 3, got {g}")));
        }
        if config.n_agents == 0 || config.n_fruits == 0 {
            return Err(Error::InvalidEnv("need at least one agent and one fruit".into()));
        }
        let slots = fruit_cells(g).len();
        if config.n_fruits > slots {
            return Err(Error::InvalidEnv(format!(
                "{} fruits do not fit on a {g}x{g} grid (at most {slots})",
                config.n_fruits
            )));
        }
        if config.n_agents + config.n_fruits > g * g {
            return Err(Error::InvalidEnv(format!(
                "{} agents and {} fruits do not fit on a {g}x{g} grid",
                config.n_agents, config.n_fruits
            )));
        }
        let window = 2 * config.sight_radius + 1;
        let obs_dim = 2 * window * window + 2;
        let spec = EnvSpec {
            n_agents: config.n_agents,
            obs_dims: vec![obs_dim; config.n_agents],
            n_actions: vec![6; config.n_agents],
            horizon: config.horizon,
            gamma: config.gamma,
        };
        spec.validate()?;
        Ok(Foraging {
            config,
            spec,
            fixed: None,
            agents: Vec::new(),
            fruits: Vec::new(),
            total_level: 0,
            t: 0,
            done: true,
        })
    }

    /// An environment that resets to `layout` regardless of seed.
    pub fn from_layout(config: ForagingConfig, layout: ForagingLayout) -> Result<Self> {
        let g = config.grid_size;
        let cfg = ForagingConfig {
            n_agents: layout.agents.len(),
            n_fruits: layout.fruits.len(),
            ..config
        };
        if g < 2 || layout.agents.is_empty() || layout.fruits.is_empty() {
            return Err(Error::InvalidEnv("layout needs a grid, agents and fruits".into()));
        }
        let mut seen = Vec::new();
        for &(cell, level) in layout.agents.iter().chain(&layout.fruits) {
            if cell.0 >= g || cell.1 >= g {
                return Err(Error::InvalidEnv(format!("cell {cell:?} lies outside the grid")));
            }
            if level == 0 {
                return Err(Error::InvalidEnv("levels must be positive".into()));
            }
            if seen.contains(&cell) {
                return Err(Error::InvalidEnv(format!("cell {cell:?} is occupied twice")));
            }
            seen.push(cell);
        }
        let window = 2 * cfg.sight_radius + 1;
        let spec = EnvSpec {
            n_agents: cfg.n_agents,
            obs_dims: vec![2 * window * window + 2; cfg.n_agents],
            n_actions: vec![6; cfg.n_agents],
            horizon: cfg.horizon,
            gamma: cfg.gamma,
        };
        spec.validate()?;
        Ok(Foraging {
            config: cfg,
            spec,
            fixed: Some(layout),
            agents: Vec::new(),
            fruits: Vec::new(),
            total_level: 0,
            t: 0,
            done: true,
        })
    }

    pub fn agents(&self) -> &[((usize, usize), u32)] {
        &self.agents
    }

    /// Fruits still on the board.
    pub fn remaining_fruits(&self) -> Vec<((usize, usize), u32)> {
        self.fruits.iter().flatten().copied().collect()
    }

    fn place(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = self.config.grid_size;
        let mut candidates = fruit_cells(g);
        candidates.shuffle(&mut rng);
        let fruit_pos: Vec<(usize, usize)> = candidates[..self.config.n_fruits].to_vec();
        let mut free: Vec<(usize, usize)> = (0..g)
            .flat_map(|y| (0..g).map(move |x| (x, y)))
            .filter(|c| !fruit_pos.contains(c))
            .collect();
        free.shuffle(&mut rng);
        self.agents = free[..self.config.n_agents]
            .iter()
            .map(|&c| (c, rng.random_range(1..=MAX_AGENT_LEVEL)))
            .collect();
        let team: u32 = self.agents.iter().map(|a| a.1).sum();
        self.fruits = fruit_pos
            .into_iter()
            .map(|c| Some((c, rng.random_range(1..=team))))
            .collect();
    }

    fn agent_at(&self, cell: (usize, usize)) -> Option<u32> {
        self.agents.iter().find(|a| a.0 == cell).map(|a| a.1)
    }

    fn fruit_at(&self, cell: (usize, usize)) -> Option<u32> {
        self.fruits.iter().flatten().find(|f| f.0 == cell).map(|f| f.1)
    }

    fn observe(&self, agent: usize) -> Vec<f64> {
        let r = self.config.sight_radius as isize;
        let g = self.config.grid_size as isize;
        let (ax, ay) = self.agents[agent].0;
        let fruit_scale = (MAX_AGENT_LEVEL as usize * self.config.n_agents) as f64;
        let mut obs = Vec::with_capacity(self.spec.obs_dims[agent]);
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (ax as isize + dx, ay as isize + dy);
                if x < 0 || y < 0 || x >= g || y >= g {
                    obs.extend([0.0, 0.0]);
                    continue;
                }
                let cell = (x as usize, y as usize);
                let a = self.agent_at(cell).map_or(0.0, |l| l as f64 / MAX_AGENT_LEVEL as f64);
                let f = self.fruit_at(cell).map_or(0.0, |l| l as f64 / fruit_scale);
                obs.extend([a, f]);
            }
        }
        let scale = (g - 1).max(1) as f64;
        obs.push(ax as f64 / scale);
        obs.push(ay as f64 / scale);
        obs
    }

    fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.agents.len()).map(|i| self.observe(i)).collect()
    }

    fn target(&self, cell: (usize, usize), action: usize) -> Option<(usize, usize)> {
        let g = self.config.grid_size;
        let (x, y) = cell;
        match action {
            1 if y > 0 => Some((x, y - 1)),
            2 if y + 1 < g => Some((x, y + 1)),
            3 if x + 1 < g => Some((x + 1, y)),
            4 if x > 0 => Some((x - 1, y)),
            _ => None,
        }
    }
}

fn adjacent(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1
}

impl Environment for Foraging {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        match &self.fixed {
            Some(layout) => {
                self.agents = layout.agents.clone();
                self.fruits = layout.fruits.iter().copied().map(Some).collect();
            }
            None => self.place(seed),
        }
        self.total_level = self.fruits.iter().flatten().map(|f| f.1).sum();
        self.t = 0;
        self.done = false;
        self.observations()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult> {
        check_actions(&self.spec, actions)?;
        if self.done {
            return Err(Error::InvalidEnv("step called on a finished episode".into()));
        }
        let targets: Vec<Option<(usize, usize)>> = self
            .agents
            .iter()
            .zip(actions)
            .map(|(a, &act)| {
                if act == NOOP || act == LOAD {
                    return None;
                }
                self.target(a.0, act)
                    .filter(|&c| self.agent_at(c).is_none() && self.fruit_at(c).is_none())
            })
            .collect();
        for (i, t) in targets.iter().enumerate() {
            if let Some(cell) = t {
                let contested = targets
                    .iter()
                    .enumerate()
                    .any(|(j, o)| j != i && o.as_ref() == Some(cell));
                if !contested {
                    self.agents[i].0 = *cell;
                }
            }
        }

        let mut reward = 0.0;
        for slot in self.fruits.iter_mut() {
            if let Some((cell, level)) = *slot {
                let loading: u32 = self
                    .agents
                    .iter()
                    .zip(actions)
                    .filter(|(a, &act)| act == LOAD && adjacent(a.0, cell))
                    .map(|(a, _)| a.1)
                    .sum();
                if loading >= level {
                    reward += level as f64 / self.total_level as f64;
                    *slot = None;
                }
            }
        }

        self.t += 1;
        self.done = self.t >= self.spec.horizon || self.fruits.iter().all(Option::is_none);
        Ok(StepResult {
            observations: self.observations(),
            reward,
            done: self.done,
        })
    }
}
