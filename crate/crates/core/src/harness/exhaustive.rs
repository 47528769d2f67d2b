use rayon::prelude::*;

use super::{Cell, ExperimentConfig, ExperimentResult, SymbolBank};
use crate::channel::{ChannelRealization, RngStream};
use crate::error::Result;
use crate::receiver::{demodulate_pipeline, DemodMode, ReceiverConfig};
use crate::waveform::ModulationParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveRow {
    pub n: usize,
    pub k: usize,
    pub tuples: usize,
    pub failures: usize,
    pub first_failure: Option<Vec<usize>>,
}

fn all_tuples(k: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..=max).map(move |m| {
                    let mut t = t.clone();
                    t.push(m);
                    t
                })
            })
            .collect();
    }
    out
}

/// Checks every admissible tuple for `params` without noise.
///
/// Sum for every `K`; difference and maximum as well when `K = 2`.
pub fn exhaustive_check(params: &ModulationParams, receiver: &ReceiverConfig) -> Result<ExhaustiveRow> {
    let k = params.n_users;
    let bank = SymbolBank::new(params)?;
    let ch = ChannelRealization::awgn(k, 1.0, 0.0);
    let mode = if k == 2 { DemodMode::Max } else { DemodMode::Sum };
    let tuples = all_tuples(k, params.max_symbol());
    let ok: Vec<bool> = tuples
        .par_iter()
        .map(|t| {
            let y = bank.transmit(t, &ch, &mut RngStream::new(0, 0).rng());
            let det = demodulate_pipeline(&y, &ch, params, receiver, mode)?;
            let sum: usize = t.iter().sum();
            let mut good = !det.erasure && det.detected_sum == sum;
            if k == 2 {
                good &= det.detected_difference == Some(t[0].abs_diff(t[1]));
                good &= det.detected_max == Some(t[0].max(t[1]));
            }
            Ok(good)
        })
        .collect::<Result<_>>()?;
    let first = ok.iter().position(|g| !g);
    Ok(ExhaustiveRow {
        n: params.n_samples,
        k,
        tuples: tuples.len(),
        failures: ok.iter().filter(|g| !**g).count(),
        first_failure: first.map(|i| tuples[i].clone()),
    })
}

/// Noiseless brute force over `K = 1, 2, 3` at the configured `N` and `beta` scale.
pub fn run_noiseless_exhaustive(cfg: &ExperimentConfig) -> Result<Vec<ExhaustiveRow>> {
    cfg.validate()?;
    (1..=3)
        .map(|k| {
            let mut pc = cfg.params;
            pc.n_users = k;
            exhaustive_check(&pc.to_params()?, &cfg.receiver)
        })
        .collect()
}

pub(super) fn table(cfg: &ExperimentConfig, rows: &[ExhaustiveRow]) -> ExperimentResult {
    let mut r = ExperimentResult::new(cfg, &["n", "k", "tuples", "failures"]);
    for row in rows {
        r.push(vec![Cell::from(row.n), row.k.into(), row.tuples.into(), row.failures.into()]);
        if let Some(t) = &row.first_failure {
            r.note(&format!("first_failure_k{}", row.k), t.clone());
        }
    }
    r.note("total_failures", rows.iter().map(|x| x.failures).sum::<usize>());
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_enumeration() {
        let t = all_tuples(2, 2);
        assert_eq!(t.len(), 9);
        assert_eq!(t[0], vec![0, 0]);
        assert_eq!(t[8], vec![2, 2]);
    }

    #[test]
    fn small_grids_pass() {
        for k in 1..=3 {
            let p = ModulationParams::with_default_beta(16, k).unwrap();
            let row = exhaustive_check(&p, &ReceiverConfig::default()).unwrap();
            assert_eq!(row.failures, 0, "{row:?}");
        }
    }
}
