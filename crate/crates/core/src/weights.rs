//! Strictly positive probability vectors over a finite set of arms.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Entries below this value after normalization are lifted to it.
pub const WEIGHT_FLOOR: f64 = 1e-9;

/// A probability vector with every entry strictly positive.
///
/// Construct through [`normalize`] or [`WeightVector::uniform`]; the
/// cumulative sums used for sampling are kept alongside the probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<T = f64> {
    probs: Vec<T>,
    cumulative: Vec<f64>,
}

impl<T: Real> WeightVector<T> {
    pub fn uniform(arms: usize) -> Self {
        assert!(arms > 0, "uniform weights need at least one arm");
        let w = T::one() / T::from_usize(arms).unwrap();
        let mut out = Self {
            probs: vec![w; arms],
            cumulative: Vec::with_capacity(arms),
        };
        out.refresh_cumulative();
        out
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, arm: usize) -> T {
        self.probs[arm]
    }

    /// Draws an arm index.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let last = self.cumulative.len() - 1;
        for (j, &c) in self.cumulative[..last].iter().enumerate() {
            if u < c {
                return j;
            }
        }
        last
    }

    /// Outer product of two weight vectors, first factor most significant.
    pub fn outer(&self, other: &WeightVector<T>) -> WeightVector<T> {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for &a in &self.probs {
            for &b in &other.probs {
                probs.push(a * b);
            }
        }
        let mut out = Self {
            probs,
            cumulative: Vec::new(),
        };
        out.refresh_cumulative();
        out
    }

    /// Overwrites this vector with the normalization of `raw`, reusing storage.
    pub fn assign_normalized(&mut self, raw: &[T]) -> Result<()> {
        let sum = checked_sum(raw)?;
        self.probs.clear();
        self.probs.extend(raw.iter().map(|&v| v / sum));
        apply_floor(&mut self.probs);
        self.refresh_cumulative();
        Ok(())
    }

    fn refresh_cumulative(&mut self) {
        self.cumulative.clear();
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p.as_f64();
            self.cumulative.push(acc);
        }
    }
}

fn checked_sum<T: Real>(raw: &[T]) -> Result<T> {
    if raw.is_empty() {
        return Err(Error::DegenerateWeights("empty weight vector".into()));
    }
    let mut sum = T::zero();
    for (j, &v) in raw.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::DegenerateWeights(format!("entry {j} is not finite")));
        }
        if v < T::zero() {
            return Err(Error::DegenerateWeights(format!("entry {j} is negative ({v})")));
        }
        sum = sum + v;
    }
    if sum <= T::zero() || !sum.is_finite() {
        return Err(Error::DegenerateWeights("all entries are zero".into()));
    }
    Ok(sum)
}

fn apply_floor<T: Real>(probs: &mut [T]) {
    let floor = T::lit(WEIGHT_FLOOR);
    if probs.iter().any(|&p| p < floor) {
        for p in probs.iter_mut() {
            if *p < floor {
                *p = floor;
            }
        }
        let total: T = probs.iter().copied().sum();
        for p in probs.iter_mut() {
            *p = *p / total;
        }
    }
}

/// Scales non-negative raw weights to sum to one, lifting tiny entries to
/// [`WEIGHT_FLOOR`].
pub fn normalize<T: Real>(raw: &[T]) -> Result<WeightVector<T>> {
    let mut out = WeightVector {
        probs: Vec::with_capacity(raw.len()),
        cumulative: Vec::with_capacity(raw.len()),
    };
    out.assign_normalized(raw)?;
    Ok(out)
}
