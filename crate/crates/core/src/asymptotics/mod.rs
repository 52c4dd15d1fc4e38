//! Monte Carlo evaluation of local asymptotic power in the normal-means
//! model: iid sampling, two-stage adaptive sampling, the oracle iid weight
//! search, heatmap grids and exploration/reweighting sweeps, plus the
//! finite-n simulator used to cross-check them.
//!
//! Arm index 0 is the signal arm throughout; the last arm is the reference
//! whose fluctuation is the linear completion of the others.

mod adaptive;
mod finite;
mod gaussian;
mod grid;
mod iid;

pub use adaptive::{power_adaptive, AdaptiveSpec, LastArmShift};
pub use finite::{finite_n_nmm_power, NormalMeansScenario};
pub use gaussian::{gaussian_spec, max_of, ArmFluctuation, GaussianSpec, SquareMatrix, PSD_TOLERANCE};
pub use grid::{
    oracle_q_star, oracle_weights, power_heatmap, sweep_epsilon_t, HeatCell, HeatmapMode, HeatmapParams, OracleResult,
    PowerGrid, SweepRow,
};
pub use iid::{power_iid, power_iid_with, QUANTILE_OVERSAMPLE};

use crate::error::{Error, Result};

/// Draws per indexed stream when a Monte Carlo loop is split into chunks.
pub(crate) const CHUNK: usize = 4096;

/// Default inner sample size for conditional quantiles.
pub const DEFAULT_N_INNER: usize = 1000;
/// Default number of outer draws.
pub const DEFAULT_N_OUTER: usize = 20_000;

/// 1-based rank of the empirical `(1 - alpha)` quantile: `ceil((1 - alpha) n)`.
pub fn quantile_rank(alpha: f64, n: usize) -> usize {
    let r = ((1.0 - alpha) * n as f64 - 1e-9).ceil() as usize;
    r.clamp(1, n)
}

/// Order statistic at [`quantile_rank`]; reorders `values`.
pub fn upper_quantile<T: PartialOrd + Copy>(values: &mut [T], alpha: f64) -> T {
    let k = quantile_rank(alpha, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).expect("NaN in quantile sample"));
    *v
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")))
    }
}

pub(crate) fn check_h0(h0: f64) -> Result<()> {
    if h0 >= 0.0 && h0.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("h0", format!("{h0} must be finite and non-negative")))
    }
}

/// Chunk sizes covering `n` draws.
pub(crate) fn chunks(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n.div_ceil(CHUNK)).map(move |c| (c, CHUNK.min(n - c * CHUNK)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_is_ceiling() {
        assert_eq!(quantile_rank(0.05, 1000), 950);
        assert_eq!(quantile_rank(0.1, 1000), 900);
        assert_eq!(quantile_rank(0.05, 99), 95);
        assert_eq!(quantile_rank(0.999, 10), 1);
    }

    #[test]
    fn order_statistic() {
        let mut v: Vec<f64> = (1..=20).rev().map(f64::from).collect();
        assert_eq!(upper_quantile(&mut v, 0.1), 18.0);
    }

    #[test]
    fn chunking_covers() {
        let c: Vec<_> = chunks(2 * CHUNK + 5).collect();
        assert_eq!(c, vec![(0, CHUNK), (1, CHUNK), (2, 5)]);
        assert_eq!(chunks(0).count(), 0);
    }
}
