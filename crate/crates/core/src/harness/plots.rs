use std::collections::BTreeMap;

use super::metrics::MetricsRecord;

pub const PLOT_HEADER: &str = "figure,run_id,algorithm,seed,checkpoint_step,statistic,value";

/// Long-format plot tables, one per environment ("figure"). Each metrics row
/// becomes three rows: `mean`, `ci_low` and `ci_high`.
pub fn plot_tables(records: &[MetricsRecord]) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    for r in records {
        let text = out
            .entry(r.env.clone())
            .or_insert_with(|| format!("{PLOT_HEADER}\n"));
        let seed = r.seed.map_or_else(|| "all".to_string(), |s| s.to_string());
        for (stat, v) in [("mean", r.mean_return), ("ci_low", r.ci_low), ("ci_high", r.ci_high)] {
            text.push_str(&format!(
                "{},{},{},{},{},{},{:?}\n",
                r.env, r.run_id, r.algorithm, seed, r.checkpoint_step, stat, v
            ));
        }
    }
    out
}
