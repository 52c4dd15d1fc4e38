use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AdaptivePolicy, MarginalRule, MarginalTracker};
use crate::error::{Error, Result};
use crate::record::PolicyKind;
use crate::scalar::Real;
use crate::seed::Stream;
use crate::weights::{normalize, WeightVector, WEIGHT_FLOOR};
use crate::Weights;

/// Function mapping scaled first-stage means to unnormalized weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reweight {
    #[default]
    Exp,
    /// `max(x, floor)`
    IdentityPositive,
}

impl Reweight {
    /// Normalized weights proportional to `f(args)`.
    pub fn weights<T: Real>(&self, args: &[T]) -> Result<WeightVector<T>> {
        let mut out = WeightVector::uniform(args.len());
        let mut scratch = Vec::with_capacity(args.len());
        self.weights_into(args, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Same as [`Reweight::weights`] reusing caller-owned buffers.
    pub fn weights_into<T: Real>(&self, args: &[T], scratch: &mut Vec<T>, out: &mut WeightVector<T>) -> Result<()> {
        scratch.clear();
        match self {
            Reweight::Exp => {
                // exp is shift-equivariant, so subtracting the max changes nothing after normalization.
                let m = args.iter().copied().fold(T::neg_infinity(), T::max);
                if !m.is_finite() {
                    return Err(Error::DegenerateWeights("non-finite reweighting argument".into()));
                }
                scratch.extend(args.iter().map(|&a| (a - m).exp()));
            }
            Reweight::IdentityPositive => {
                let floor = T::lit(WEIGHT_FLOOR);
                scratch.extend(args.iter().map(|&a| a.max(floor)));
            }
        }
        out.assign_normalized(scratch)
    }
}

/// Explore with `q` for `floor(n * epsilon)` steps, then sample iid from
/// `Q_j ∝ f(t_scale * sqrt(n) * first-stage mean of arm j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStageConfig {
    pub epsilon: f64,
    pub t_scale: f64,
    pub reweight: Reweight,
    pub q: Weights,
    pub n: usize,
}

impl TwoStageConfig {
    pub fn first_stage_len(&self) -> usize {
        (self.n as f64 * self.epsilon).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("{} not in (0, 1)", self.epsilon)));
        }
        if !self.t_scale.is_finite() {
            return Err(Error::invalid("t_scale", "must be finite"));
        }
        let m = self.first_stage_len();
        if m < 1 || m + 1 > self.n {
            return Err(Error::invalid(
                "epsilon",
                format!("floor(n*epsilon) = {m} leaves an empty stage for n = {}", self.n),
            ));
        }
        if self.q.len() < 2 {
            return Err(Error::invalid("q", "need at least two arms"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TwoStageRule {
    cfg: TwoStageConfig,
}

struct TwoStageTracker {
    cfg: TwoStageConfig,
    first_stage: usize,
    seen: usize,
    counts: Vec<usize>,
    sums: Vec<f64>,
    second: Option<Weights>,
    empty_arms: usize,
}

impl TwoStageTracker {
    fn second_stage_weights(&mut self) -> Result<()> {
        let scale = self.cfg.t_scale * (self.cfg.n as f64).sqrt();
        // Arms never pulled in stage one get the null mean 0.
        let args: Vec<f64> = self
            .counts
            .iter()
            .zip(&self.sums)
            .map(|(&c, &s)| if c == 0 { 0.0 } else { scale * s / c as f64 })
            .collect();
        self.empty_arms = self.counts.iter().filter(|&&c| c == 0).count();
        self.second = Some(self.cfg.reweight.weights(&args)?);
        Ok(())
    }
}

impl MarginalTracker for TwoStageTracker {
    fn weights(&mut self, _rng: &mut Stream) -> Result<&Weights> {
        if self.seen < self.first_stage {
            return Ok(&self.cfg.q);
        }
        if self.second.is_none() {
            self.second_stage_weights()?;
        }
        Ok(self.second.as_ref().unwrap())
    }

    fn observe(&mut self, value: usize, y: f64) {
        if self.seen < self.first_stage {
            self.counts[value] += 1;
            self.sums[value] += y;
        }
        self.seen += 1;
    }

    fn diagnostics(&self) -> Vec<String> {
        if self.empty_arms > 0 {
            vec![format!(
                "{} arm(s) had no first-stage pulls; their mean was set to 0",
                self.empty_arms
            )]
        } else {
            Vec::new()
        }
    }
}

impl MarginalRule for TwoStageRule {
    fn arms(&self) -> usize {
        self.cfg.q.len()
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::TwoStage
    }

    fn label(&self) -> String {
        format!(
            "two_stage(eps={},t={},{:?},p={})",
            self.cfg.epsilon,
            self.cfg.t_scale,
            self.cfg.reweight,
            self.cfg.q.len()
        )
    }

    fn tracker(&self, _horizon: usize) -> Box<dyn MarginalTracker> {
        let p = self.cfg.q.len();
        Box::new(TwoStageTracker {
            cfg: self.cfg.clone(),
            first_stage: self.cfg.first_stage_len(),
            seen: 0,
            counts: vec![0; p],
            sums: vec![0.0; p],
            second: None,
            empty_arms: 0,
        })
    }
}

impl TwoStageRule {
    pub fn config(&self) -> &TwoStageConfig {
        &self.cfg
    }
}

pub fn two_stage_policy(cfg: TwoStageConfig) -> Result<AdaptivePolicy> {
    cfg.validate()?;
    Ok(AdaptivePolicy::from_marginal(Arc::new(TwoStageRule { cfg })))
}

/// Convenience: uniform first stage over `p` arms.
pub fn uniform_two_stage(p: usize, n: usize, epsilon: f64, t_scale: f64) -> Result<AdaptivePolicy> {
    two_stage_policy(TwoStageConfig {
        epsilon,
        t_scale,
        reweight: Reweight::Exp,
        q: normalize(&vec![1.0; p])?,
        n,
    })
}
