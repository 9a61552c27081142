//! Parallel drivers. Every work item draws from its own RNG substream and
//! results are collected in input order, so output is independent of the
//! thread count.

use postsel_core::diamond::DiamondOptions;
use postsel_core::linalg::{stream, Operator};
use postsel_core::postselect::{check_covariance, random_twirled_difference, theorem1_check_with, Covariance, PostSelectionReport};
use postsel_core::qkd::{general_bound, key_penalty};
use postsel_core::symmetric::{tau_family_with_limit, tau_monte_carlo, TauFamily};
use rayon::prelude::*;

use crate::format::{fmt_f64, to_csv, SweepRow};
use crate::io::CliError;

pub const BATCH_HEADER: [&str; 6] = ["seed", "n", "d", "lhs", "rhs", "slack"];
pub const SWEEP_HEADER: [&str; 5] = ["n", "exponent", "bound", "penalty_bits_exact", "penalty_bits_bound"];

#[derive(Clone, Debug, PartialEq)]
pub struct BatchRow {
    pub seed: u64,
    pub report: PostSelectionReport,
}

/// Certifies the twirled difference generated from `seed`.
pub fn certify_seed(n: usize, d: usize, seed: u64, tau: &TauFamily, options: &DiamondOptions) -> Result<PostSelectionReport, CliError> {
    let mut rng = stream(seed, 0);
    let delta = random_twirled_difference(n, d, &mut rng)?;
    let cm = check_covariance(&delta, n, d, Covariance::Strict)?;
    Ok(theorem1_check_with(&cm, tau, options, &mut rng)?)
}

/// Instances use seeds `base, base + 1, …, base + count - 1`.
pub fn certify_batch(
    n: usize,
    d: usize,
    count: usize,
    base: u64,
    options: &DiamondOptions,
    tau_limit: u128,
) -> Result<Vec<BatchRow>, CliError> {
    let tau = tau_family_with_limit(n, d, tau_limit)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base.wrapping_add(i);
            certify_seed(n, d, seed, &tau, options).map(|report| BatchRow { seed, report })
        })
        .collect()
}

pub fn batch_csv(rows: &[BatchRow]) -> Result<String, CliError> {
    to_csv(
        &BATCH_HEADER,
        rows.iter().map(|r| {
            vec![
                r.seed.to_string(),
                r.report.n.to_string(),
                r.report.d.to_string(),
                fmt_f64(r.report.lhs.value),
                fmt_f64(r.report.rhs),
                fmt_f64(r.report.slack),
            ]
        }),
    )
}

/// Up to `points` distinct integers from `lo` to `hi`, log-spaced, both ends included.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    if lo >= hi || points <= 1 {
        return vec![lo.min(hi)];
    }
    if hi - lo < points as u64 {
        return (lo..=hi).collect();
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..points)
        .map(|k| {
            let t = k as f64 / (points - 1) as f64;
            ((a + t * (b - a)).exp().round() as u64).clamp(lo, hi)
        })
        .collect();
    out[0] = lo;
    *out.last_mut().unwrap() = hi;
    out.dedup();
    out
}

pub fn sweep(c: f64, delta: f64, d: u64, grid: &[u64]) -> Result<Vec<SweepRow>, CliError> {
    grid.par_iter()
        .map(|&n| {
            Ok(SweepRow {
                n,
                bound: general_bound(c, delta, n, d)?,
                penalty: key_penalty(n, d)?,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    to_csv(
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.bound.exponent),
                fmt_f64(r.bound.bound),
                fmt_f64(r.penalty.exact_bits),
                fmt_f64(r.penalty.bound_bits),
            ]
        }),
    )
}

/// Samples per work item in [`tau_monte_carlo_parallel`].
pub const MONTE_CARLO_CHUNK: usize = 5_000;

/// Mean of `σ^⊗n` over `samples` Hilbert-Schmidt draws; chunk `k` uses
/// substream `k` of `seed`.
pub fn tau_monte_carlo_parallel(n: usize, d: usize, samples: usize, seed: u64) -> Result<Operator, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("Monte Carlo needs at least one sample".into()));
    }
    let chunks = samples.div_ceil(MONTE_CARLO_CHUNK);
    let parts: Vec<(usize, Operator)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let size = MONTE_CARLO_CHUNK.min(samples - k * MONTE_CARLO_CHUNK);
            let mut rng = stream(seed, k as u64);
            tau_monte_carlo(n, d, size, &mut rng).map(|m| (size, m))
        })
        .collect::<Result<_, _>>()?;
    let dim = parts[0].1.rows();
    let mut acc = Operator::zeros(dim, dim);
    for (size, m) in &parts {
        acc += &m.scale(*size as f64 / samples as f64);
    }
    Ok(acc.with_dims(vec![d; n])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1, 100_000, 50);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 100_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_grid(5, 8, 50), vec![5, 6, 7, 8]);
    }

    #[test]
    fn batch_is_ordered_and_reproducible() {
        let opts = DiamondOptions::default();
        let a = certify_batch(1, 2, 6, 40, &opts, u128::MAX).unwrap();
        let b = certify_batch(1, 2, 6, 40, &opts, u128::MAX).unwrap();
        assert_eq!(batch_csv(&a).unwrap(), batch_csv(&b).unwrap());
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), (40..46).collect::<Vec<_>>());
        assert!(a.iter().all(|r| r.report.holds));
    }

    #[test]
    fn monte_carlo_chunks_are_deterministic() {
        let a = tau_monte_carlo_parallel(2, 2, 12_000, 3).unwrap();
        let b = tau_monte_carlo_parallel(2, 2, 12_000, 3).unwrap();
        assert_eq!(a.data(), b.data());
        assert!((a.trace().re - 1.0).abs() < 1e-12);
    }
}
