//! Flat `key = value` experiment configuration.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines are
//! ignored, keys are dotted paths from [`KEYS`]. A file may not repeat a key.
//! Resolution order is defaults, then the `preset` named in the file or the
//! overrides, then the file's own keys, then overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::envs::{ClimbConfig, EnvConfig, ForagingConfig, SpreadConfig, DEFAULT_CLIMB_PAYOFFS};
use crate::qcore::{EpsilonSchedule, TargetUpdate};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Iql,
    Vdn,
    VdnPs,
    Dvdn,
    DvdnGt,
    /// Gradient tracking over the independent learner loss.
    Gt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Iql,
        Algorithm::Vdn,
        Algorithm::VdnPs,
        Algorithm::Dvdn,
        Algorithm::DvdnGt,
        Algorithm::Gt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Iql => "IQL",
            Algorithm::Vdn => "VDN",
            Algorithm::VdnPs => "VDN_PS",
            Algorithm::Dvdn => "DVDN",
            Algorithm::DvdnGt => "DVDN_GT",
            Algorithm::Gt => "GT",
        }
    }

    pub fn needs_homogeneous(self) -> bool {
        matches!(self, Algorithm::VdnPs | Algorithm::DvdnGt | Algorithm::Gt)
    }

    pub fn uses_graph(self) -> bool {
        matches!(self, Algorithm::Dvdn | Algorithm::DvdnGt | Algorithm::Gt)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', ' ', '(', ')'], "_");
        let norm = norm.trim_matches('_').replace("__", "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| format!("unknown algorithm `{s}`, expected one of IQL, VDN, VDN_PS, DVDN, DVDN_GT, GT"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphMode {
    /// A fresh random connected graph per training episode.
    Random,
    /// The complete graph every episode.
    Complete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainEvery {
    Step,
    Episode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub env: EnvConfig,
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    /// Episodes per synchronized sample.
    pub batch_size: usize,
    /// Episodes kept per agent.
    pub buffer_capacity: usize,
    pub target_update: TargetUpdate,
    pub grad_clip: Option<f64>,
    pub reward_standardization: bool,
    pub train_every: TrainEvery,
    pub epsilon: EpsilonSchedule,
    pub p_extra: f64,
    pub graph_mode: GraphMode,
    pub bootstrap_resamples: usize,
    pub stats_seed: u64,
    /// Record per-round diagnostics.
    pub diagnostics: bool,
}

/// Every accepted key, in the order the resolved file lists them.
pub const KEYS: &[&str] = &[
    "run_id",
    "algorithm",
    "seeds",
    "total_steps",
    "eval_interval",
    "eval_episodes",
    "env.id",
    "env.gamma",
    "env.n_agents",
    "env.horizon",
    "env.foraging.grid_size",
    "env.foraging.n_fruits",
    "env.foraging.sight_radius",
    "env.spread.n_landmarks",
    "env.climb.payoffs",
    "net.hidden",
    "train.lr",
    "train.batch_size",
    "train.buffer_capacity",
    "train.target_update",
    "train.grad_clip",
    "train.reward_standardization",
    "train.train_every",
    "explore.start",
    "explore.final",
    "explore.anneal_steps",
    "explore.eval",
    "graph.p_extra",
    "graph.mode",
    "stats.resamples",
    "stats.seed",
    "output.diagnostics",
];

/// Keys accepted on input besides [`KEYS`].
const ALIASES: &[(&str, &str)] = &[("seed", "seeds")];

const PRESET_KEY: &str = "preset";

fn defaults() -> BTreeMap<&'static str, String> {
    let payoffs = DEFAULT_CLIMB_PAYOFFS
        .iter()
        .map(|r| r.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";");
    let pairs: Vec<(&str, String)> = vec![
        ("run_id", "run".into()),
        ("algorithm", "DVDN".into()),
        ("seeds", "0,1,2,3,4,5,6,7,8,9".into()),
        ("total_steps", "100000".into()),
        ("eval_interval", "5000".into()),
        ("eval_episodes", "50".into()),
        ("env.id", "climb".into()),
        ("env.gamma", "0.99".into()),
        ("env.n_agents", "2".into()),
        ("env.horizon", "25".into()),
        ("env.foraging.grid_size", "8".into()),
        ("env.foraging.n_fruits", "3".into()),
        ("env.foraging.sight_radius", "2".into()),
        ("env.spread.n_landmarks", "2".into()),
        ("env.climb.payoffs", payoffs),
        ("net.hidden", "64".into()),
        ("train.lr", "0.0005".into()),
        ("train.batch_size", "32".into()),
        ("train.buffer_capacity", "5000".into()),
        ("train.target_update", "hard:200".into()),
        ("train.grad_clip", "10".into()),
        ("train.reward_standardization", "true".into()),
        ("train.train_every", "step".into()),
        ("explore.start", "1".into()),
        ("explore.final", "0.05".into()),
        ("explore.anneal_steps", "50000".into()),
        ("explore.eval", "0".into()),
        ("graph.p_extra", "0.5".into()),
        ("graph.mode", "random".into()),
        ("stats.resamples", "20000".into()),
        ("stats.seed", "0".into()),
        ("output.diagnostics", "false".into()),
    ];
    pairs.into_iter().collect()
}

/// Named hyperparameter sets. Anneal times are scaled down by 50 to match
/// the desk-scale step budget.
pub const PRESETS: &[(&str, &[(&str, &str)])] = &[
    ("lbf_iql", &[("algorithm", "IQL"), ("net.hidden", "64"), ("train.lr", "0.0003"), ("train.reward_standardization", "true"), ("explore.eval", "0.05"), ("explore.anneal_steps", "5000"), ("train.target_update", "hard:200")]),
    ("lbf_dvdn", &[("algorithm", "DVDN"), ("net.hidden", "128"), ("train.lr", "0.0001"), ("train.reward_standardization", "true"), ("explore.eval", "0.05"), ("explore.anneal_steps", "10000"), ("train.target_update", "soft:0.01")]),
    ("lbf_vdn", &[("algorithm", "VDN"), ("net.hidden", "64"), ("train.lr", "0.0001"), ("train.reward_standardization", "true"), ("explore.eval", "0.05"), ("explore.anneal_steps", "10000"), ("train.target_update", "hard:200")]),
    ("mpe_iql", &[("algorithm", "IQL"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "10000"), ("train.target_update", "soft:0.01")]),
    ("mpe_dvdn", &[("algorithm", "DVDN"), ("net.hidden", "128"), ("train.lr", "0.0003"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "10000"), ("train.target_update", "hard:200")]),
    ("mpe_vdn", &[("algorithm", "VDN"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "2500"), ("train.target_update", "hard:200")]),
    ("lbf_gt_iql", &[("algorithm", "IQL"), ("net.hidden", "64"), ("train.lr", "0.0003"), ("train.reward_standardization", "true"), ("explore.eval", "0.05"), ("explore.anneal_steps", "5000"), ("train.target_update", "hard:200")]),
    ("lbf_dvdn_gt", &[("algorithm", "DVDN_GT"), ("net.hidden", "128"), ("train.lr", "0.0003"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "10000"), ("train.target_update", "soft:0.01")]),
    ("lbf_vdn_ps", &[("algorithm", "VDN_PS"), ("net.hidden", "128"), ("train.lr", "0.0003"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "10000"), ("train.target_update", "soft:0.01")]),
    ("mpe_gt_iql", &[("algorithm", "IQL"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "10000"), ("train.target_update", "soft:0.01")]),
    ("mpe_dvdn_gt", &[("algorithm", "DVDN_GT"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "2500"), ("train.target_update", "hard:200")]),
    ("mpe_vdn_ps", &[("algorithm", "VDN_PS"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "2500"), ("train.target_update", "hard:200")]),
    ("marbler_iql", &[("algorithm", "IQL"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "1000"), ("train.target_update", "hard:200")]),
    ("marbler_dvdn", &[("algorithm", "DVDN"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0"), ("explore.anneal_steps", "1000"), ("train.target_update", "soft:0.01")]),
    ("marbler_vdn", &[("algorithm", "VDN"), ("net.hidden", "64"), ("train.lr", "0.0005"), ("train.reward_standardization", "false"), ("explore.eval", "0"), ("explore.anneal_steps", "1000"), ("train.target_update", "hard:200")]),
    ("marbler_dvdn_gt", &[("algorithm", "DVDN_GT"), ("net.hidden", "128"), ("train.lr", "0.0005"), ("train.reward_standardization", "true"), ("explore.eval", "0.05"), ("explore.anneal_steps", "1000"), ("train.target_update", "soft:0.01")]),
    ("marbler_vdn_ps", &[("algorithm", "VDN_PS"), ("net.hidden", "128"), ("train.lr", "0.0003"), ("train.reward_standardization", "false"), ("explore.eval", "0"), ("explore.anneal_steps", "1000"), ("train.target_update", "hard:200")]),
];

fn canonical_key(key: &str) -> Result<&'static str> {
    if let Some(k) = KEYS.iter().find(|k| **k == key) {
        return Ok(k);
    }
    if let Some((_, target)) = ALIASES.iter().find(|(alias, _)| *alias == key) {
        return Ok(target);
    }
    Err(Error::config(key, "unknown key"))
}

/// Splits `key = value` text into pairs, rejecting malformed lines and
/// repeated keys.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            what: "config",
            msg: format!("line {}: expected `key = value`, got `{}`", n + 1, raw.trim()),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse {
                what: "config",
                msg: format!("line {}: empty key", n + 1),
            });
        }
        if pairs.iter().any(|(p, _)| p == k) {
            return Err(Error::config(k, format!("repeated on line {}", n + 1)));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}

/// Parses a command-line `key=value` override.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text.split_once('=').ok_or_else(|| Error::Parse {
        what: "override",
        msg: format!("expected `key=value`, got `{text}`"),
    })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Raw resolved key/value table.
#[derive(Clone, Debug, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<&'static str, String>,
}

impl RawConfig {
    pub fn defaults() -> Self {
        RawConfig { values: defaults() }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = canonical_key(key)?;
        self.values.insert(k, value.to_string());
        Ok(())
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let (_, pairs) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::config(PRESET_KEY, format!("unknown preset `{name}`")))?;
        for (k, v) in pairs.iter() {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Defaults, then preset, then `file`, then `overrides`.
    pub fn resolve(file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self> {
        let mut raw = RawConfig::defaults();
        let preset = overrides
            .iter()
            .rev()
            .chain(file.iter().rev())
            .find(|(k, _)| k == PRESET_KEY)
            .map(|(_, v)| v.clone());
        if let Some(p) = preset {
            raw.apply_preset(&p)?;
        }
        for (k, v) in file.iter().chain(overrides) {
            if k != PRESET_KEY {
                raw.set(k, v)?;
            }
        }
        Ok(raw)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&self.values[k]);
            out.push('\n');
        }
        out
    }

    fn parse<T: std::str::FromStr>(&self, key: &'static str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = &self.values[key];
        v.parse::<T>().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}")))
    }

    fn list<T: std::str::FromStr>(&self, key: &'static str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let v = &self.values[key];
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| Error::config(key, format!("cannot parse `{s}`: {e}"))))
            .collect()
    }

    fn flag(&self, key: &'static str) -> Result<bool> {
        match self.values[key].to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            other => Err(Error::config(key, format!("expected true or false, got `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let algorithm: Algorithm = self.parse("algorithm")?;
        let gamma: f64 = self.parse("env.gamma")?;
        let n_agents: usize = self.parse("env.n_agents")?;
        let horizon: usize = self.parse("env.horizon")?;
        let env = match self.values["env.id"].as_str() {
            "climb" => EnvConfig::Climb(ClimbConfig {
                payoffs: parse_matrix(&self.values["env.climb.payoffs"])
                    .map_err(|m| Error::config("env.climb.payoffs", m))?,
                gamma,
            }),
            "foraging" => EnvConfig::Foraging(ForagingConfig {
                grid_size: self.parse("env.foraging.grid_size")?,
                n_agents,
                n_fruits: self.parse("env.foraging.n_fruits")?,
                sight_radius: self.parse("env.foraging.sight_radius")?,
                horizon,
                gamma,
            }),
            "spread" => EnvConfig::Spread(SpreadConfig {
                n_agents,
                n_landmarks: self.parse("env.spread.n_landmarks")?,
                horizon,
                gamma,
            }),
            other => {
                return Err(Error::config(
                    "env.id",
                    format!("unknown environment `{other}`, expected climb, foraging or spread"),
                ))
            }
        };
        let target_update = parse_target(&self.values["train.target_update"])
            .map_err(|m| Error::config("train.target_update", m))?;
        let grad_clip = match self.values["train.grad_clip"].as_str() {
            "none" | "off" => None,
            _ => Some(self.parse::<f64>("train.grad_clip")?),
        };
        let train_every = match self.values["train.train_every"].as_str() {
            "step" => TrainEvery::Step,
            "episode" => TrainEvery::Episode,
            other => {
                return Err(Error::config("train.train_every", format!("expected step or episode, got `{other}`")))
            }
        };
        let graph_mode = match self.values["graph.mode"].as_str() {
            "random" => GraphMode::Random,
            "complete" => GraphMode::Complete,
            other => {
                return Err(Error::config("graph.mode", format!("expected random or complete, got `{other}`")))
            }
        };
        let cfg = ExperimentConfig {
            run_id: self.values["run_id"].clone(),
            algorithm,
            env,
            seeds: self.list("seeds")?,
            total_steps: self.parse("total_steps")?,
            eval_interval: self.parse("eval_interval")?,
            eval_episodes: self.parse("eval_episodes")?,
            hidden: self.list("net.hidden")?,
            lr: self.parse("train.lr")?,
            batch_size: self.parse("train.batch_size")?,
            buffer_capacity: self.parse("train.buffer_capacity")?,
            target_update,
            grad_clip,
            reward_standardization: self.flag("train.reward_standardization")?,
            train_every,
            epsilon: EpsilonSchedule {
                start: self.parse("explore.start")?,
                end: self.parse("explore.final")?,
                anneal_steps: self.parse("explore.anneal_steps")?,
                eval_epsilon: self.parse("explore.eval")?,
            },
            p_extra: self.parse("graph.p_extra")?,
            graph_mode,
            bootstrap_resamples: self.parse("stats.resamples")?,
            stats_seed: self.parse("stats.seed")?,
            diagnostics: self.flag("output.diagnostics")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_matrix(text: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("cannot parse `{}`: {e}", x.trim())))
                .collect()
        })
        .collect()
}

fn parse_target(text: &str) -> std::result::Result<TargetUpdate, String> {
    let (mode, arg) = text.split_once(':').unwrap_or((text, ""));
    match mode.trim() {
        "hard" => {
            let period = if arg.is_empty() { 200 } else { arg.trim().parse().map_err(|e| format!("bad period: {e}"))? };
            if period == 0 {
                return Err("hard period must be positive".into());
            }
            Ok(TargetUpdate::Hard { period })
        }
        "soft" => {
            let rate: f64 = if arg.is_empty() { 0.01 } else { arg.trim().parse().map_err(|e| format!("bad rate: {e}"))? };
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(format!("soft rate must lie in (0, 1], got {rate}"));
            }
            Ok(TargetUpdate::Soft { rate })
        }
        other => Err(format!("expected hard:<period> or soft:<rate>, got `{other}`")),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        if self.eval_interval == 0 {
            return Err(Error::config("eval_interval", "must be positive"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("net.hidden", "needs at least one positive layer width"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config("train.lr", "must be finite and non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be positive"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::config("train.buffer_capacity", "must hold at least one batch"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::config("train.grad_clip", "must be positive or `none`"));
            }
        }
        let e = &self.epsilon;
        for (key, v) in [("explore.start", e.start), ("explore.final", e.end), ("explore.eval", e.eval_epsilon)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(key, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_extra) {
            return Err(Error::config("graph.p_extra", "must lie in [0, 1]"));
        }
        if self.bootstrap_resamples == 0 {
            return Err(Error::config("stats.resamples", "must be positive"));
        }
        let env = self.env.build()?;
        let spec = env.spec();
        if self.algorithm.needs_homogeneous() && !spec.is_homogeneous() {
            return Err(Error::Heterogeneous(format!(
                "{} needs agents with identical observation and action spaces",
                self.algorithm
            )));
        }
        Ok(())
    }
}

/// Reads a config file and applies overrides.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<(RawConfig, ExperimentConfig)> {
    let text = std::fs::read_to_string(path)?;
    let raw = RawConfig::resolve(&parse_pairs(&text)?, overrides)?;
    let cfg = raw.build()?;
    Ok((raw, cfg))
}
