use crate::rng::{stream_rng, Stream};
use crate::Result;

use super::config::{Algorithm, ExperimentConfig};
use super::metrics::{aggregate_rows, max_average_return, seed_values_at, MetricsRecord};
use super::stats::{bootstrap_ci, mean, rank_compare, Comparison};
use super::train::train;

/// Checkpoints pooled on each side of the best one.
pub const NEIGHBORHOOD: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationGroup {
    /// No consensus at all.
    Iql,
    /// Network-estimated joint TD only.
    Jtd,
    /// Gradient tracking with the joint-TD estimate forced to zero.
    Gt,
    /// Both mechanisms.
    GtJtd,
}

impl AblationGroup {
    pub const ALL: [AblationGroup; 4] = [AblationGroup::Iql, AblationGroup::Jtd, AblationGroup::Gt, AblationGroup::GtJtd];

    pub fn name(self) -> &'static str {
        match self {
            AblationGroup::Iql => "IQL",
            AblationGroup::Jtd => "JTD",
            AblationGroup::Gt => "GT",
            AblationGroup::GtJtd => "GT+JTD",
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            AblationGroup::Iql => Algorithm::Iql,
            AblationGroup::Jtd => Algorithm::Dvdn,
            AblationGroup::Gt => Algorithm::Gt,
            AblationGroup::GtJtd => Algorithm::DvdnGt,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupResult {
    pub group: AblationGroup,
    pub best_step: u64,
    /// Per-seed values from the best checkpoint and its neighbors.
    pub pooled: Vec<f64>,
    pub mean: f64,
    pub ci: (f64, f64),
    /// Fewer than `2 * NEIGHBORHOOD + 1` checkpoints were available.
    pub narrowed: bool,
    pub records: Vec<MetricsRecord>,
}

/// Pools the per-seed values of the best aggregate checkpoint and up to
/// [`NEIGHBORHOOD`] checkpoints on either side, clipped at the run ends.
pub fn pool_best_neighborhood(records: &[MetricsRecord]) -> Result<(u64, Vec<f64>, bool)> {
    let best = max_average_return(records)?;
    let steps: Vec<u64> = aggregate_rows(records).iter().map(|r| r.checkpoint_step).collect();
    let c = steps.iter().position(|&s| s == best.checkpoint_step).unwrap_or(0);
    let lo = c.saturating_sub(NEIGHBORHOOD);
    let hi = (c + NEIGHBORHOOD).min(steps.len() - 1);
    let pooled: Vec<f64> = steps[lo..=hi]
        .iter()
        .flat_map(|&s| seed_values_at(records, s))
        .collect();
    Ok((best.checkpoint_step, pooled, hi - lo < 2 * NEIGHBORHOOD))
}

pub fn summarize_group(
    group: AblationGroup,
    records: Vec<MetricsRecord>,
    resamples: usize,
    stats_seed: u64,
) -> Result<GroupResult> {
    let (best_step, pooled, narrowed) = pool_best_neighborhood(&records)?;
    let m = mean(&pooled);
    let mut rng = stream_rng(stats_seed, Stream::Bootstrap(group as u32));
    let ci = if pooled.len() >= 2 {
        bootstrap_ci(&pooled, 0.95, resamples, &mut rng)?
    } else {
        (m, m)
    };
    Ok(GroupResult {
        group,
        best_step,
        pooled,
        mean: m,
        ci,
        narrowed,
        records,
    })
}

/// Trains each group with `base` (algorithm replaced) and summarizes it.
pub fn run_ablation(
    base: &ExperimentConfig,
    groups: &[AblationGroup],
    threads: usize,
) -> Result<Vec<GroupResult>> {
    groups
        .iter()
        .map(|&g| {
            let mut cfg = base.clone();
            cfg.algorithm = g.algorithm();
            cfg.run_id = format!("{}_{}", base.run_id, g.name());
            let run = train(&cfg, threads)?;
            summarize_group(g, run.records, base.bootstrap_resamples, base.stats_seed)
        })
        .collect()
}

/// Ranking test between two groups' pooled samples.
pub fn compare_groups(a: &GroupResult, b: &GroupResult, resamples: usize, seed: u64) -> Result<Comparison> {
    rank_compare(&a.pooled, &b.pooled, resamples, &mut stream_rng(seed, Stream::Bootstrap(0)))
}
