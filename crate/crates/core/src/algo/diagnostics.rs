use std::io::Write;

use crate::neural::ParamVector;
use crate::Result;

/// Per-round numbers for inspecting a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundDiagnostics {
    /// Optimizer steps completed by agent 0 after this round.
    pub round: u64,
    pub grad_norms: Vec<f64>,
    pub tracker_norms: Option<Vec<f64>>,
    pub td_norms: Vec<f64>,
    pub network_td_norms: Option<Vec<f64>>,
    /// `max_i |params_i - mean params|`; absent when parameter counts differ.
    pub disagreement: Option<f64>,
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn disagreement<'a, I>(params: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a ParamVector>,
{
    let all: Vec<&ParamVector> = params.into_iter().collect();
    let len = all.first()?.len();
    if all.iter().any(|p| p.len() != len) {
        return None;
    }
    let mut mean = vec![0.0; len];
    for p in &all {
        for (m, x) in mean.iter_mut().zip(p.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= all.len() as f64;
    }
    Some(
        all.iter()
            .map(|p| l2(&p.iter().zip(&mean).map(|(x, m)| x - m).collect::<Vec<_>>()))
            .fold(0.0, f64::max),
    )
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// One row per agent per round.
pub fn write_diagnostics_csv<W: Write>(mut w: W, rounds: &[RoundDiagnostics]) -> Result<()> {
    writeln!(w, "round,agent,grad_norm,tracker_norm,td_norm,network_td_norm,disagreement")?;
    for d in rounds {
        for i in 0..d.td_norms.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                d.round,
                i,
                cell(d.grad_norms.get(i).copied()),
                cell(d.tracker_norms.as_ref().and_then(|v| v.get(i).copied())),
                cell(Some(d.td_norms[i])),
                cell(d.network_td_norms.as_ref().and_then(|v| v.get(i).copied())),
                cell(d.disagreement),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disagreement_of_equal_params_is_zero() {
        let p = ParamVector::from(vec![1.0, -2.0]);
        assert_eq!(disagreement([&p, &p.clone()]), Some(0.0));
        let q = ParamVector::from(vec![3.0, -2.0]);
        assert_eq!(disagreement([&p, &q]), Some(1.0));
        assert_eq!(disagreement([&p, &ParamVector::zeros(3)]), None);
    }

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let d = RoundDiagnostics {
            round: 3,
            grad_norms: vec![1.0],
            tracker_norms: None,
            td_norms: vec![0.5, 0.25],
            network_td_norms: None,
            disagreement: None,
        };
        let mut out = Vec::new();
        write_diagnostics_csv(&mut out, &[d]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "3,0,1.0,,0.5,,");
        assert_eq!(lines[2], "3,1,,,0.25,,");
    }
}
