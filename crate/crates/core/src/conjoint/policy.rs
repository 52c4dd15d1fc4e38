use std::sync::Arc;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::policies::{AdaptivePolicy, MarginalRule, MarginalTracker};
use crate::record::PolicyKind;
use crate::seed::Stream;
use crate::Weights;

/// Standard deviation of the half-normal perturbation added to every arm.
pub const PERTURBATION_SD: f64 = 0.01;

/// Adaptive rule over the `levels²` (left, right) pairs of one factor.
///
/// Uniform for the first `floor(horizon * epsilon)` steps; afterwards arm
/// `j` gets weight `|Ybar_j - 0.5| + |N(0, 0.01²)|`, with a fresh
/// perturbation per arm and step. An arm never pulled so far uses
/// `Ybar_j = 0.5`.
#[derive(Clone, Debug)]
pub struct PairAdaptiveRule {
    levels: usize,
    epsilon: f64,
}

impl PairAdaptiveRule {
    pub fn new(levels: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("{epsilon} not in (0, 1)")));
        }
        if levels < 2 {
            return Err(Error::invalid("levels", "need at least two levels"));
        }
        Ok(Self { levels, epsilon })
    }
}

struct PairAdaptiveTracker {
    first_stage: usize,
    seen: usize,
    counts: Vec<u32>,
    sums: Vec<f64>,
    uniform: Weights,
    current: Weights,
    raw: Vec<f64>,
    noise: Normal<f64>,
}

impl MarginalTracker for PairAdaptiveTracker {
    fn weights(&mut self, rng: &mut Stream) -> Result<&Weights> {
        if self.seen < self.first_stage {
            return Ok(&self.uniform);
        }
        self.raw.clear();
        for (&c, &s) in self.counts.iter().zip(&self.sums) {
            let mean = if c == 0 { 0.5 } else { s / c as f64 };
            self.raw.push((mean - 0.5).abs() + self.noise.sample(rng).abs());
        }
        self.current.assign_normalized(&self.raw)?;
        Ok(&self.current)
    }

    fn observe(&mut self, value: usize, y: f64) {
        self.counts[value] += 1;
        self.sums[value] += y;
        self.seen += 1;
    }
}

impl MarginalRule for PairAdaptiveRule {
    fn arms(&self) -> usize {
        self.levels * self.levels
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::ConjointAdaptive
    }

    fn label(&self) -> String {
        format!("conjoint_adaptive(eps={},levels={})", self.epsilon, self.levels)
    }

    fn tracker(&self, horizon: usize) -> Box<dyn MarginalTracker> {
        let arms = self.arms();
        Box::new(PairAdaptiveTracker {
            first_stage: (horizon as f64 * self.epsilon).floor() as usize,
            seen: 0,
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            uniform: Weights::uniform(arms),
            current: Weights::uniform(arms),
            raw: Vec::with_capacity(arms),
            noise: Normal::new(0.0, PERTURBATION_SD).unwrap(),
        })
    }
}

/// Adaptive conjoint policy: independent pair-adaptive rules for X (`k`
/// levels) and Z (`l` levels), each reading only its own history and Y.
pub fn conjoint_adaptive_policy(epsilon: f64, k: usize, l: usize) -> Result<AdaptivePolicy> {
    let x = PairAdaptiveRule::new(k, epsilon)?;
    let z = PairAdaptiveRule::new(l, epsilon)?;
    Ok(AdaptivePolicy::from_marginal(Arc::new(x)).with_z_rule(Arc::new(z)))
}

/// Uniform iid sampling of (left, right) pairs for both factors.
pub fn conjoint_uniform_policy(k: usize, l: usize) -> AdaptivePolicy {
    crate::policies::iid_policy(Weights::uniform(k * k))
        .with_z_rule(Arc::new(crate::policies::IidRule::new(Weights::uniform(l * l))))
}
