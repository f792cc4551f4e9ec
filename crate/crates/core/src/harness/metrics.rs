use std::io::{BufRead, Write};

use crate::{Error, Result};

pub const METRICS_HEADER: &str = "run_id,algorithm,env,seed,checkpoint_step,mean_return,ci_low,ci_high";

/// One row of the metrics file. `seed == None` marks the across-seed aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub algorithm: String,
    pub env: String,
    pub seed: Option<u64>,
    pub checkpoint_step: u64,
    pub mean_return: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn write_metrics_csv<W: Write>(mut w: W, records: &[MetricsRecord]) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in records {
        let seed = r.seed.map_or_else(|| "all".to_string(), |s| s.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{:?},{:?},{:?}",
            r.run_id, r.algorithm, r.env, seed, r.checkpoint_step, r.mean_return, r.ci_low, r.ci_high
        )?;
    }
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse {
        what: "metrics csv",
        msg: format!("line {line}: {msg}"),
    }
}

pub fn read_metrics_csv<R: BufRead>(r: R) -> Result<Vec<MetricsRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(METRICS_HEADER) {
        return Err(bad(1, format!("expected header `{METRICS_HEADER}`")));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(n + 2, format!("expected 8 fields, got {}", f.len())));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|e| bad(n + 2, e));
        out.push(MetricsRecord {
            run_id: f[0].to_string(),
            algorithm: f[1].to_string(),
            env: f[2].to_string(),
            seed: match f[3] {
                "all" => None,
                s => Some(s.parse().map_err(|e| bad(n + 2, e))?),
            },
            checkpoint_step: f[4].parse().map_err(|e| bad(n + 2, e))?,
            mean_return: num(5)?,
            ci_low: num(6)?,
            ci_high: num(7)?,
        });
    }
    Ok(out)
}

/// Aggregate rows in checkpoint order.
pub fn aggregate_rows(records: &[MetricsRecord]) -> Vec<&MetricsRecord> {
    let mut rows: Vec<&MetricsRecord> = records.iter().filter(|r| r.seed.is_none()).collect();
    rows.sort_by_key(|r| r.checkpoint_step);
    rows
}

/// The aggregate checkpoint with the highest mean; ties go to the earliest.
pub fn max_average_return(records: &[MetricsRecord]) -> Result<MetricsRecord> {
    let mut best: Option<&MetricsRecord> = None;
    for r in aggregate_rows(records) {
        if best.is_none_or(|b| r.mean_return > b.mean_return) {
            best = Some(r);
        }
    }
    best.cloned().ok_or(Error::Empty("metrics checkpoints"))
}

/// Per-seed means at `checkpoint_step`, in seed order.
pub fn seed_values_at(records: &[MetricsRecord], checkpoint_step: u64) -> Vec<f64> {
    let mut rows: Vec<&MetricsRecord> = records
        .iter()
        .filter(|r| r.seed.is_some() && r.checkpoint_step == checkpoint_step)
        .collect();
    rows.sort_by_key(|r| r.seed);
    rows.iter().map(|r| r.mean_return).collect()
}

/// Per-seed values at the best aggregate checkpoint: the sample the
/// ranking test compares.
pub fn best_checkpoint_samples(records: &[MetricsRecord]) -> Result<Vec<f64>> {
    let best = max_average_return(records)?;
    Ok(seed_values_at(records, best.checkpoint_step))
}
