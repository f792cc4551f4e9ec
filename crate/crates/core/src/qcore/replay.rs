use std::collections::VecDeque;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

use super::{AgentBatch, Episode};

/// A position in the common list of random replay indices. Every agent holds
/// its own copy seeded identically, so agents that consume it in lockstep draw
/// the same episodes without talking to each other.
#[derive(Clone, Debug)]
pub struct IndexStream {
    rng: ChaCha8Rng,
    position: u64,
}

impl IndexStream {
    pub fn new(rng: ChaCha8Rng) -> Self {
        IndexStream { rng, position: 0 }
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// Consumes `count` entries of the list, mapped onto `0..len`.
    /// Returns the position of the first consumed entry with the indices.
    pub fn draw(&mut self, count: usize, len: usize) -> (u64, Vec<usize>) {
        let start = self.position;
        let indices = (0..count)
            .map(|_| (self.rng.next_u64() % len as u64) as usize)
            .collect();
        self.position += count as u64;
        (start, indices)
    }
}

/// Ring buffer of whole episodes for one agent.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<Episode>,
    stream: IndexStream,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, stream: IndexStream) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            episodes: VecDeque::with_capacity(capacity.min(4096)),
            stream,
        }
    }

    pub fn push(&mut self, episode: Episode) {
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stream_position(&self) -> u64 {
        self.stream.position()
    }

    pub fn episode(&self, slot: usize) -> &Episode {
        &self.episodes[slot]
    }

    pub fn episode_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.episodes.iter().map(|e| e.id)
    }
}

/// Per-agent batches drawn from the same episodes and timesteps.
#[derive(Clone, Debug)]
pub struct SyncedSample {
    pub batches: Vec<AgentBatch>,
    pub episode_ids: Vec<u64>,
    /// Stream position of the first index consumed by this sample.
    pub stream_position: u64,
    /// `(episode id, timestep)` of every row, identical for all agents.
    pub slots: Vec<(u64, usize)>,
}

/// Draws `batch_size` episodes (with replacement) from every agent's buffer by
/// consuming each agent's copy of the shared index stream, and flattens the
/// selected episodes into one batch per agent.
///
/// Returns `Ok(None)` without consuming the stream when any buffer holds
/// fewer than `batch_size` episodes.
pub fn sample_synchronized_batch(
    buffers: &mut [ReplayBuffer],
    batch_size: usize,
) -> Result<Option<SyncedSample>> {
    if buffers.is_empty() {
        return Err(Error::Empty("replay buffers"));
    }
    if batch_size == 0 || buffers.iter().any(|b| b.len() < batch_size) {
        return Ok(None);
    }
    let len = buffers[0].len();
    let mut draws = Vec::with_capacity(buffers.len());
    for (agent, buffer) in buffers.iter_mut().enumerate() {
        if buffer.len() != len {
            return Err(Error::Desync(format!(
                "agent {agent} holds {} episodes, agent 0 holds {len}",
                buffer.len()
            )));
        }
        draws.push(buffer.stream.draw(batch_size, len));
    }
    let (position, indices) = draws[0].clone();
    for (agent, draw) in draws.iter().enumerate().skip(1) {
        if *draw != (position, indices.clone()) {
            return Err(Error::Desync(format!(
                "agent {agent} drew different replay indices than agent 0"
            )));
        }
    }
    let episode_ids: Vec<u64> = indices.iter().map(|&i| buffers[0].episodes[i].id).collect();
    let mut slots = Vec::new();
    for &i in &indices {
        let ep = &buffers[0].episodes[i];
        slots.extend((0..ep.transitions.len()).map(|t| (ep.id, t)));
    }
    let mut batches = Vec::with_capacity(buffers.len());
    for (agent, buffer) in buffers.iter().enumerate() {
        let selected: Vec<&Episode> = indices.iter().map(|&i| &buffer.episodes[i]).collect();
        for (ep, &id) in selected.iter().zip(&episode_ids) {
            if ep.id != id {
                return Err(Error::Desync(format!(
                    "agent {agent} holds episode {} where agent 0 holds {id}",
                    ep.id
                )));
            }
        }
        let obs_dim = selected
            .iter()
            .flat_map(|e| e.transitions.first())
            .map(|t| t.obs.len())
            .next()
            .unwrap_or(0);
        let batch =
            AgentBatch::from_transitions(obs_dim, selected.iter().flat_map(|e| &e.transitions))?;
        if batch.len() != slots.len() {
            return Err(Error::Desync(format!(
                "agent {agent} episode lengths differ from agent 0"
            )));
        }
        batches.push(batch);
    }
    Ok(Some(SyncedSample {
        batches,
        episode_ids,
        stream_position: position,
        slots,
    }))
}
