use crate::{Error, Result};

/// One step seen by one agent. The reward is the shared team reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// One agent's trajectory of one episode. The id is common to all agents.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub id: u64,
    pub transitions: Vec<Transition>,
}

/// Column-wise batch of `len()` transitions for one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentBatch {
    pub obs_dim: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub dones: Vec<bool>,
}

impl AgentBatch {
    pub fn from_transitions<'a, I>(obs_dim: usize, transitions: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Transition>,
    {
        let mut batch = AgentBatch {
            obs_dim,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_obs: Vec::new(),
            dones: Vec::new(),
        };
        for t in transitions {
            if t.obs.len() != obs_dim {
                return Err(Error::shape("transition observation", obs_dim, t.obs.len()));
            }
            if t.next_obs.len() != obs_dim {
                return Err(Error::shape("transition next observation", obs_dim, t.next_obs.len()));
            }
            batch.obs.extend_from_slice(&t.obs);
            batch.actions.push(t.action);
            batch.rewards.push(t.reward);
            batch.next_obs.extend_from_slice(&t.next_obs);
            batch.dones.push(t.done);
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn map_rewards(&mut self, f: impl Fn(f64) -> f64) {
        self.rewards.iter_mut().for_each(|r| *r = f(*r));
    }
}
