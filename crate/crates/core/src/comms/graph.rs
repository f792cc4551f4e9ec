use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Connected undirected graph over agents `0..n_agents`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommGraph {
    n_agents: usize,
    /// Sorted, each pair stored once with `i < j`.
    edges: Vec<(usize, usize)>,
    /// Sorted neighbor lists (self excluded).
    adjacency: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Builds a graph from an edge list. Pairs may appear in either
    /// orientation; self-loops, duplicates, out-of-range endpoints and
    /// disconnected edge sets are rejected.
    pub fn new(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::InvalidGraph("graph needs at least one agent".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_agents || b >= n_agents {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {n_agents} agents"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at agent {a}")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        if !is_connected(n_agents, &normalized) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        let mut adjacency = vec![Vec::new(); n_agents];
        for &(a, b) in &normalized {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(CommGraph {
            n_agents,
            edges: normalized,
            adjacency,
        })
    }

    pub fn complete(n_agents: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n_agents {
            for j in i + 1..n_agents {
                edges.push((i, j));
            }
        }
        Self::new(n_agents, &edges).expect("complete graph is connected")
    }

    pub fn path(n_agents: usize) -> Self {
        let edges: Vec<_> = (1..n_agents).map(|i| (i - 1, i)).collect();
        Self::new(n_agents, &edges).expect("path graph is connected")
    }

    /// Cycle over all agents; for fewer than three agents this is the path.
    pub fn ring(n_agents: usize) -> Self {
        let mut edges: Vec<_> = (1..n_agents).map(|i| (i - 1, i)).collect();
        if n_agents >= 3 {
            edges.push((0, n_agents - 1));
        }
        Self::new(n_agents, &edges).expect("ring graph is connected")
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.adjacency[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.adjacency[agent].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n_agents * (self.n_agents - 1) / 2
    }
}

/// Union-find connectivity test over `0..n`.
pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

/// Seeded source of connected graphs, shared by all agents.
///
/// Each draw takes a uniform random labelled spanning tree (decoded from a
/// uniform Prüfer sequence) and then adds every non-tree edge independently
/// with probability `p_extra`.
#[derive(Clone, Debug)]
pub struct GraphSampler {
    rng: ChaCha8Rng,
    n_agents: usize,
    p_extra: f64,
}

impl GraphSampler {
    pub fn new(rng: ChaCha8Rng, n_agents: usize, p_extra: f64) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::InvalidGraph("sampler needs at least one agent".into()));
        }
        if !(0.0..=1.0).contains(&p_extra) {
            return Err(Error::InvalidGraph(format!(
                "p_extra must lie in [0, 1], got {p_extra}"
            )));
        }
        Ok(GraphSampler {
            rng,
            n_agents,
            p_extra,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn sample(&mut self) -> CommGraph {
        let n = self.n_agents;
        if n == 1 {
            return CommGraph::new(1, &[]).expect("single node is connected");
        }
        let prufer: Vec<usize> = (0..n.saturating_sub(2))
            .map(|_| self.rng.random_range(0..n))
            .collect();
        let tree = decode_prufer(n, &prufer);
        let mut in_tree = vec![false; n * n];
        for &(a, b) in &tree {
            in_tree[a * n + b] = true;
            in_tree[b * n + a] = true;
        }
        let mut edges = tree;
        for i in 0..n {
            for j in i + 1..n {
                if !in_tree[i * n + j] && self.rng.random_bool(self.p_extra) {
                    edges.push((i, j));
                }
            }
        }
        CommGraph::new(n, &edges).expect("spanning tree keeps the graph connected")
    }
}

/// Decodes a Prüfer sequence of length `n - 2` into the edges of a labelled
/// tree on `n >= 2` nodes.
fn decode_prufer(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len(), n - 2);
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}
