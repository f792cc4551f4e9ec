use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algo::{
    run_dvdn_gt_round, run_dvdn_round, run_iql_round, run_vdn_ps_round, run_vdn_round,
    write_diagnostics_csv, AgentLearnerState, RoundConfig, RoundDiagnostics,
};
use crate::comms::{CommGraph, GraphSampler};
use crate::envs::{EnvSpec, Environment};
use crate::neural::{init_params, write_params, NetworkSpec};
use crate::qcore::{
    sample_synchronized_batch, select_action, Episode, IndexStream, ReplayBuffer,
    RewardStandardizer, Transition,
};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

use super::config::{Algorithm, ExperimentConfig, GraphMode, RawConfig, TrainEvery};
use super::metrics::{write_metrics_csv, MetricsRecord};
use super::stats::{bootstrap_ci, mean};

/// Evaluation returns of one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub returns: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SeedResult {
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Final learner state, one per agent (one in total for VDN_PS).
    pub learners: Vec<AgentLearnerState>,
    pub diagnostics: Vec<RoundDiagnostics>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub seeds: Vec<SeedResult>,
    pub records: Vec<MetricsRecord>,
}

enum Learners {
    Separate(Vec<AgentLearnerState>),
    Shared(AgentLearnerState),
}

impl Learners {
    fn new(cfg: &ExperimentConfig, spec: &EnvSpec, seed: u64) -> Result<Self> {
        let net = |i: usize| {
            NetworkSpec::new(spec.obs_dims[i], cfg.hidden.clone(), spec.n_actions[i])
        };
        let make = |i: usize| -> Result<AgentLearnerState> {
            let ns = net(i)?;
            let params = init_params(&ns, &mut stream_rng(seed, Stream::Init(i as u32)));
            Ok(AgentLearnerState::new(ns, params, cfg.lr))
        };
        Ok(match cfg.algorithm {
            Algorithm::VdnPs => Learners::Shared(make(0)?),
            _ => Learners::Separate((0..spec.n_agents).map(make).collect::<Result<_>>()?),
        })
    }

    fn policy(&self, agent: usize) -> &AgentLearnerState {
        match self {
            Learners::Separate(v) => &v[agent],
            Learners::Shared(s) => s,
        }
    }

    fn into_states(self) -> Vec<AgentLearnerState> {
        match self {
            Learners::Separate(v) => v,
            Learners::Shared(s) => vec![s],
        }
    }
}

fn round(
    learners: &mut Learners,
    algorithm: Algorithm,
    batches: &[crate::qcore::AgentBatch],
    graph: Option<&CommGraph>,
    rc: &RoundConfig,
) -> Result<RoundDiagnostics> {
    let graph = || graph.ok_or_else(|| Error::InvalidGraph("no graph sampled for this episode".into()));
    match (learners, algorithm) {
        (Learners::Shared(s), Algorithm::VdnPs) => run_vdn_ps_round(s, batches, rc),
        (Learners::Separate(v), Algorithm::Iql) => run_iql_round(v, batches, rc),
        (Learners::Separate(v), Algorithm::Vdn) => run_vdn_round(v, batches, rc),
        (Learners::Separate(v), Algorithm::Dvdn) => run_dvdn_round(v, batches, graph()?, rc),
        (Learners::Separate(v), Algorithm::DvdnGt) => run_dvdn_gt_round(v, batches, graph()?, rc, true),
        (Learners::Separate(v), Algorithm::Gt) => run_dvdn_gt_round(v, batches, graph()?, rc, false),
        _ => unreachable!("learner layout follows the algorithm"),
    }
}

/// Greedy-ish rollouts with `eval_epsilon`. Builds its own environment and
/// draws from the evaluation stream only, so it cannot touch learner state.
fn evaluate(cfg: &ExperimentConfig, learners: &Learners, seed: u64) -> Result<Vec<f64>> {
    let mut env = cfg.env.build()?;
    let n = env.spec().n_agents;
    let mut rng = stream_rng(seed, Stream::Eval);
    let mut returns = Vec::with_capacity(cfg.eval_episodes);
    for _ in 0..cfg.eval_episodes {
        let mut obs = env.reset(rng.random());
        let mut total = 0.0;
        loop {
            let actions = (0..n)
                .map(|i| {
                    let p = learners.policy(i);
                    select_action(&p.spec, &p.params, &obs[i], cfg.epsilon.eval_epsilon, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let res = env.step(&actions)?;
            total += res.reward;
            obs = res.observations;
            if res.done {
                break;
            }
        }
        returns.push(total);
    }
    Ok(returns)
}

struct Trainer<'a> {
    cfg: &'a ExperimentConfig,
    learners: Learners,
    buffers: Vec<ReplayBuffer>,
    standardizer: RewardStandardizer,
    rc: RoundConfig,
    diagnostics: Vec<RoundDiagnostics>,
}

impl Trainer<'_> {
    fn maybe_train(&mut self, graph: Option<&CommGraph>) -> Result<()> {
        let Some(sample) = sample_synchronized_batch(&mut self.buffers, self.cfg.batch_size)? else {
            return Ok(());
        };
        let mut batches = sample.batches;
        if self.standardizer.enabled {
            for b in &mut batches {
                b.map_rewards(|r| self.standardizer.standardize(r));
            }
        }
        let d = round(&mut self.learners, self.cfg.algorithm, &batches, graph, &self.rc)?;
        if self.cfg.diagnostics {
            self.diagnostics.push(d);
        }
        Ok(())
    }
}

/// One independent training run.
pub fn train_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult> {
    let mut env: Box<dyn Environment> = cfg.env.build()?;
    let spec = env.spec().clone();
    let n = spec.n_agents;
    let index_rng = stream_rng(seed, Stream::ReplayIndices);
    let mut t = Trainer {
        cfg,
        learners: Learners::new(cfg, &spec, seed)?,
        buffers: (0..n)
            .map(|_| ReplayBuffer::new(cfg.buffer_capacity, IndexStream::new(index_rng.clone())))
            .collect(),
        standardizer: RewardStandardizer::new(cfg.reward_standardization),
        rc: RoundConfig {
            gamma: spec.gamma,
            grad_clip: cfg.grad_clip,
            target_update: cfg.target_update,
        },
        diagnostics: Vec::new(),
    };
    let mut sampler = GraphSampler::new(stream_rng(seed, Stream::Graph), n, cfg.p_extra)?;
    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut explore: Vec<ChaCha8Rng> = (0..n).map(|i| stream_rng(seed, Stream::Explore(i as u32))).collect();

    let mut checkpoints = Vec::new();
    if cfg.total_steps > 0 {
        checkpoints.push(Checkpoint {
            step: 0,
            returns: evaluate(cfg, &t.learners, seed)?,
        });
    }
    let mut steps = 0u64;
    let mut episode_id = 0u64;
    while steps < cfg.total_steps {
        let mut obs = env.reset(env_rng.random());
        let graph = match (cfg.algorithm.uses_graph(), cfg.graph_mode) {
            (false, _) => None,
            (true, GraphMode::Random) => Some(sampler.sample()),
            (true, GraphMode::Complete) => Some(CommGraph::complete(n)),
        };
        let mut trajectories: Vec<Vec<Transition>> = vec![Vec::new(); n];
        let mut finished = false;
        while !finished && steps < cfg.total_steps {
            let eps = cfg.epsilon.value(steps);
            let actions = (0..n)
                .map(|i| {
                    let p = t.learners.policy(i);
                    select_action(&p.spec, &p.params, &obs[i], eps, &mut explore[i])
                })
                .collect::<Result<Vec<_>>>()?;
            let res = env.step(&actions)?;
            t.standardizer.observe(res.reward);
            for (i, traj) in trajectories.iter_mut().enumerate() {
                traj.push(Transition {
                    obs: std::mem::take(&mut obs[i]),
                    action: actions[i],
                    reward: res.reward,
                    next_obs: res.observations[i].clone(),
                    done: res.done,
                });
            }
            obs = res.observations;
            finished = res.done;
            steps += 1;
            if cfg.train_every == TrainEvery::Step {
                t.maybe_train(graph.as_ref())?;
            }
            if steps.is_multiple_of(cfg.eval_interval) {
                checkpoints.push(Checkpoint {
                    step: steps,
                    returns: evaluate(cfg, &t.learners, seed)?,
                });
            }
        }
        if !finished {
            break;
        }
        for (buffer, transitions) in t.buffers.iter_mut().zip(trajectories) {
            buffer.push(Episode {
                id: episode_id,
                transitions,
            });
        }
        episode_id += 1;
        if cfg.train_every == TrainEvery::Episode {
            t.maybe_train(graph.as_ref())?;
        }
    }
    Ok(SeedResult {
        seed,
        checkpoints,
        learners: t.learners.into_states(),
        diagnostics: t.diagnostics,
    })
}

fn interval(samples: &[f64], resamples: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        let m = mean(samples);
        return Ok((m, m));
    }
    bootstrap_ci(samples, 0.95, resamples, rng)
}

/// Metrics rows: for every checkpoint, one row per seed (CI over evaluation
/// episodes) followed by the aggregate row (CI over seed means).
pub fn summarize(cfg: &ExperimentConfig, seeds: &[SeedResult]) -> Result<Vec<MetricsRecord>> {
    let mut records = Vec::new();
    let Some(first) = seeds.first() else {
        return Ok(records);
    };
    let env = cfg.env.id().to_string();
    for (c, ck) in first.checkpoints.iter().enumerate() {
        let mut seed_means = Vec::with_capacity(seeds.len());
        for s in seeds {
            let this = s
                .checkpoints
                .get(c)
                .filter(|x| x.step == ck.step)
                .ok_or_else(|| Error::Desync(format!("seed {} has no checkpoint at step {}", s.seed, ck.step)))?;
            let m = mean(&this.returns);
            let mut rng = stream_rng(s.seed, Stream::Bootstrap(c as u32));
            let (lo, hi) = interval(&this.returns, cfg.bootstrap_resamples, &mut rng)?;
            records.push(MetricsRecord {
                run_id: cfg.run_id.clone(),
                algorithm: cfg.algorithm.name().into(),
                env: env.clone(),
                seed: Some(s.seed),
                checkpoint_step: ck.step,
                mean_return: m,
                ci_low: lo,
                ci_high: hi,
            });
            seed_means.push(m);
        }
        let mut rng = stream_rng(cfg.stats_seed, Stream::Bootstrap(c as u32));
        let (lo, hi) = interval(&seed_means, cfg.bootstrap_resamples, &mut rng)?;
        records.push(MetricsRecord {
            run_id: cfg.run_id.clone(),
            algorithm: cfg.algorithm.name().into(),
            env: env.clone(),
            seed: None,
            checkpoint_step: ck.step,
            mean_return: mean(&seed_means),
            ci_low: lo,
            ci_high: hi,
        });
    }
    Ok(records)
}

/// Trains every seed. `threads <= 1` runs them one after another; more
/// threads run seeds in parallel with identical results.
pub fn train(cfg: &ExperimentConfig, threads: usize) -> Result<RunResult> {
    cfg.validate()?;
    let seeds: Vec<SeedResult> = if threads <= 1 {
        cfg.seeds.iter().map(|&s| train_seed(cfg, s)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?;
        pool.install(|| cfg.seeds.par_iter().map(|&s| train_seed(cfg, s)).collect::<Result<_>>())?
    };
    let records = summarize(cfg, &seeds)?;
    Ok(RunResult { seeds, records })
}

/// Writes `metrics.csv`, the resolved `config.cfg`, final parameters and,
/// when enabled, per-seed diagnostics into `dir`.
pub fn write_run(dir: &Path, raw: &RawConfig, run: &RunResult) -> Result<()> {
    fs::create_dir_all(dir.join("checkpoints"))?;
    write_metrics_csv(BufWriter::new(fs::File::create(dir.join("metrics.csv"))?), &run.records)?;
    fs::write(dir.join("config.cfg"), raw.to_text())?;
    for s in &run.seeds {
        for (i, l) in s.learners.iter().enumerate() {
            let path = dir.join("checkpoints").join(format!("seed{}_agent{}.params", s.seed, i));
            write_params(BufWriter::new(fs::File::create(path)?), &l.spec, &l.params)?;
        }
        if !s.diagnostics.is_empty() {
            let path = dir.join(format!("diagnostics_seed{}.csv", s.seed));
            write_diagnostics_csv(BufWriter::new(fs::File::create(path)?), &s.diagnostics)?;
        }
    }
    Ok(())
}
