//! Test statistics `T(X, Z, Y)`.
//!
//! A statistic is bound once to the observed `(Z, Y)` and a seed, then
//! evaluated on the observed X and on every resample. Binding lets a
//! statistic precompute whatever depends only on `(Z, Y)`; the seed fixes any
//! internal randomness (cross-validation folds) so the bound statistic is a
//! pure function of X.

mod augment;
mod fstat;
mod lasso;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Real;

pub use augment::{augment_no_profile_order, AugmentedDesign};
pub use fstat::{one_way_f, stat_f, FStatistic};
pub use lasso::{
    cv_lasso_cells, fit_lasso_path, lambda_grid, lambda_max, pair_folds, stat_lasso_logistic, CellTable, CvOutcome,
    LassoConfig, LassoFit, LassoStatistic, LassoStatus,
};

pub trait TestStatistic: Send + Sync {
    fn name(&self) -> &str;

    fn bind<'a>(&'a self, z: &'a [usize], y: &'a [f64], seed: u64) -> Result<Box<dyn BoundStatistic + 'a>>;
}

pub trait BoundStatistic {
    fn eval(&mut self, x: &[usize]) -> Result<f64>;

    /// Notes accumulated across evaluations (degenerate fits and the like).
    fn diagnostics(&self) -> Vec<String> {
        Vec::new()
    }
}

/// Evaluates a statistic once.
pub fn evaluate(stat: &dyn TestStatistic, x: &[usize], z: &[usize], y: &[f64], seed: u64) -> Result<f64> {
    stat.bind(z, y, seed)?.eval(x)
}

/// Largest per-arm sample mean over arms pulled at least once. Returns
/// negative infinity when `x` is empty.
pub fn max_arm_mean<T: Real>(x: &[usize], y: &[T], arms: usize) -> T {
    let mut counts = vec![0usize; arms];
    let mut sums = vec![T::zero(); arms];
    max_arm_mean_with(x, y, &mut counts, &mut sums)
}

fn max_arm_mean_with<T: Real>(x: &[usize], y: &[T], counts: &mut [usize], sums: &mut [T]) -> T {
    counts.fill(0);
    sums.fill(T::zero());
    for (&a, &v) in x.iter().zip(y) {
        counts[a] += 1;
        sums[a] = sums[a] + v;
    }
    counts
        .iter()
        .zip(sums.iter())
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &s)| s / T::from_usize(c).unwrap())
        .fold(T::neg_infinity(), T::max)
}

#[derive(Clone, Debug)]
pub struct MaxArmMean {
    pub arms: usize,
}

struct BoundMaxArmMean<'a> {
    y: &'a [f64],
    counts: Vec<usize>,
    sums: Vec<f64>,
}

impl BoundStatistic for BoundMaxArmMean<'_> {
    fn eval(&mut self, x: &[usize]) -> Result<f64> {
        Ok(max_arm_mean_with(x, self.y, &mut self.counts, &mut self.sums))
    }
}

impl TestStatistic for MaxArmMean {
    fn name(&self) -> &str {
        "max_arm_mean"
    }

    fn bind<'a>(&'a self, _z: &'a [usize], y: &'a [f64], _seed: u64) -> Result<Box<dyn BoundStatistic + 'a>> {
        Ok(Box::new(BoundMaxArmMean {
            y,
            counts: vec![0; self.arms],
            sums: vec![0.0; self.arms],
        }))
    }
}

/// Statistic names accepted in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    MaxArmMean,
    LassoLogistic,
    FStat,
}

impl StatisticKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatisticKind::MaxArmMean => "max_arm_mean",
            StatisticKind::LassoLogistic => "lasso_logistic",
            StatisticKind::FStat => "f_stat",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direct_arithmetic() {
        // Arms 1 and 2 of the worked example are indices 0 and 1.
        assert_eq!(max_arm_mean(&[0, 0, 1], &[1.0, 3.0, -2.0], 2), 2.0);
    }

    #[test]
    fn constant_response() {
        assert_eq!(max_arm_mean(&[0, 2, 1, 2], &[4.5; 4], 3), 4.5);
    }

    #[test]
    fn unpulled_arm_excluded() {
        assert_eq!(max_arm_mean(&[0, 0, 1, 1], &[0.0, 1.0, 1.0, 2.0], 3), 1.5);
        assert_eq!(max_arm_mean(&[0], &[-7.0], 3), -7.0);
    }

    #[test]
    fn f32_instance() {
        assert_eq!(max_arm_mean(&[0, 1], &[1.0f32, 2.0], 2), 2.0f32);
    }

    #[test]
    fn bound_matches_free_function() {
        let stat = MaxArmMean { arms: 3 };
        let y = [0.3, -1.0, 2.0, 0.7];
        let mut b = stat.bind(&[], &y, 0).unwrap();
        assert_eq!(b.eval(&[0, 1, 2, 0]).unwrap(), 2.0);
        assert!((b.eval(&[1, 1, 0, 0]).unwrap() - 1.35).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            data in proptest::collection::vec((0usize..4, -10.0f64..10.0), 1..60),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let (x, y): (Vec<usize>, Vec<f64>) = data.iter().cloned().unzip();
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let xp: Vec<usize> = idx.iter().map(|&i| x[i]).collect();
            let yp: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let a = max_arm_mean(&x, &y, 4);
            let b = max_arm_mean(&xp, &yp, 4);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
