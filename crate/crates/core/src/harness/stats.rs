use rand::Rng;

use crate::{Error, Result};

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn resampled_mean<R: Rng + ?Sized>(samples: &[f64], rng: &mut R) -> f64 {
    let n = samples.len();
    let mut sum = 0.0;
    for _ in 0..n {
        sum += samples[rng.random_range(0..n)];
    }
    sum / n as f64
}

/// Lower and upper percentile of a sorted sample for a two-sided `level`.
fn percentile_bounds(sorted: &[f64], level: f64) -> (f64, f64) {
    let r = sorted.len();
    let tail = (1.0 - level) / 2.0;
    let lo = ((tail * r as f64).floor() as usize).min(r - 1);
    let hi = (((1.0 - tail) * r as f64).ceil() as usize).clamp(1, r) - 1;
    (sorted[lo], sorted[hi.max(lo)])
}

fn check_level(level: f64, resamples: usize) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Statistics(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if resamples == 0 {
        return Err(Error::Statistics("at least one resample is required".into()));
    }
    Ok(())
}

/// Percentile bootstrap interval for the mean.
///
/// The interval always contains the sample mean; a constant sample gives the
/// zero-width interval at that constant.
pub fn bootstrap_ci<R: Rng + ?Sized>(
    samples: &[f64],
    level: f64,
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_level(level, resamples)?;
    if samples.len() < 2 {
        return Err(Error::Statistics(format!(
            "bootstrap needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !samples.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("bootstrap sample"));
    }
    let m = mean(samples);
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok((samples[0], samples[0]));
    }
    let mut means: Vec<f64> = (0..resamples).map(|_| resampled_mean(samples, rng)).collect();
    means.sort_by(f64::total_cmp);
    let (lo, hi) = percentile_bounds(&means, level);
    Ok((lo.min(m), hi.max(m)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comparison {
    Matches,
    Outperforms,
    Underperforms,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::Matches => "matches",
            Comparison::Outperforms => "outperforms",
            Comparison::Underperforms => "underperforms",
        }
    }
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bootstrap test of `mean(a) - mean(b)` at 95%: "matches" when the
/// difference interval contains 0, otherwise the sign of the observed
/// difference decides.
pub fn rank_compare<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    rng: &mut R,
) -> Result<Comparison> {
    check_level(0.95, resamples)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Statistics("rank comparison needs two nonempty samples".into()));
    }
    if !a.iter().chain(b).all(|x| x.is_finite()) {
        return Err(Error::NonFinite("comparison sample"));
    }
    let mut diffs: Vec<f64> = (0..resamples)
        .map(|_| resampled_mean(a, rng) - resampled_mean(b, rng))
        .collect();
    diffs.sort_by(f64::total_cmp);
    let (lo, hi) = percentile_bounds(&diffs, 0.95);
    let observed = mean(a) - mean(b);
    Ok(if lo <= 0.0 && 0.0 <= hi {
        Comparison::Matches
    } else if observed > 0.0 {
        Comparison::Outperforms
    } else {
        Comparison::Underperforms
    })
}
