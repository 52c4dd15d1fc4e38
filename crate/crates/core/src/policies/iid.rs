use std::sync::Arc;

use super::{AdaptivePolicy, MarginalRule, MarginalTracker};
use crate::error::Result;
use crate::record::PolicyKind;
use crate::seed::Stream;
use crate::Weights;

/// Draws every value independently from a fixed weight vector.
#[derive(Clone, Debug)]
pub struct IidRule {
    q: Weights,
}

impl IidRule {
    pub fn new(q: Weights) -> Self {
        Self { q }
    }

    pub fn weights(&self) -> &Weights {
        &self.q
    }
}

struct IidTracker {
    q: Weights,
}

impl MarginalTracker for IidTracker {
    #[inline]
    fn weights(&mut self, _rng: &mut Stream) -> Result<&Weights> {
        Ok(&self.q)
    }

    #[inline]
    fn observe(&mut self, _value: usize, _y: f64) {}
}

impl MarginalRule for IidRule {
    fn arms(&self) -> usize {
        self.q.len()
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::Iid
    }

    fn label(&self) -> String {
        let p = self.q.len();
        let uniform = self.q.probs().iter().all(|&w| (w - 1.0 / p as f64).abs() < 1e-12);
        if uniform {
            format!("iid(uniform,{p})")
        } else {
            format!("iid({p})")
        }
    }

    fn tracker(&self, _horizon: usize) -> Box<dyn MarginalTracker> {
        Box::new(IidTracker { q: self.q.clone() })
    }
}

pub fn iid_policy(q: Weights) -> AdaptivePolicy {
    AdaptivePolicy::from_marginal(Arc::new(IidRule::new(q)))
}
