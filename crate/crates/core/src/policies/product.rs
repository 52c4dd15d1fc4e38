use std::sync::Arc;

use super::{AdaptivePolicy, MarginalRule, MarginalTracker, XRule};
use crate::error::{Error, Result};
use crate::record::PolicyKind;
use crate::seed::Stream;
use crate::weights::WeightVector;
use crate::Weights;

/// Joint rule over several variables, each driven by its own marginal rule.
///
/// Joint values are mixed-radix encoded with the first component most
/// significant; the joint distribution is the outer product of the
/// component distributions.
#[derive(Clone, Debug)]
pub struct ProductRule {
    components: Vec<Arc<dyn MarginalRule>>,
}

impl ProductRule {
    pub fn components(&self) -> &[Arc<dyn MarginalRule>] {
        &self.components
    }

    /// Splits a joint value into per-component values.
    pub fn decode(&self, mut value: usize) -> Vec<usize> {
        let mut out = vec![0; self.components.len()];
        for (slot, c) in out.iter_mut().zip(&self.components).rev() {
            let r = c.arms();
            *slot = value % r;
            value /= r;
        }
        out
    }

    pub fn encode(&self, parts: &[usize]) -> usize {
        parts
            .iter()
            .zip(&self.components)
            .fold(0, |acc, (&v, c)| acc * c.arms() + v)
    }
}

struct ProductTracker {
    radices: Vec<usize>,
    parts: Vec<Box<dyn MarginalTracker>>,
    joint: Weights,
    raw: Vec<f64>,
}

impl MarginalTracker for ProductTracker {
    fn weights(&mut self, rng: &mut Stream) -> Result<&Weights> {
        self.raw.clear();
        self.raw.push(1.0);
        for part in self.parts.iter_mut() {
            let w = part.weights(rng)?;
            let prev = std::mem::take(&mut self.raw);
            self.raw.reserve(prev.len() * w.len());
            for a in prev {
                for &b in w.probs() {
                    self.raw.push(a * b);
                }
            }
        }
        self.joint.assign_normalized(&self.raw)?;
        Ok(&self.joint)
    }

    fn observe(&mut self, mut value: usize, y: f64) {
        for (part, &r) in self.parts.iter_mut().zip(&self.radices).rev() {
            part.observe(value % r, y);
            value /= r;
        }
    }

    fn diagnostics(&self) -> Vec<String> {
        self.parts.iter().flat_map(|p| p.diagnostics()).collect()
    }
}

impl MarginalRule for ProductRule {
    fn arms(&self) -> usize {
        self.components.iter().map(|c| c.arms()).product()
    }

    fn kind(&self) -> PolicyKind {
        if self.components.iter().all(|c| c.kind() == PolicyKind::Iid) {
            PolicyKind::Iid
        } else {
            PolicyKind::Product
        }
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|c| c.label()).collect();
        format!("product[{}]", parts.join(" x "))
    }

    fn tracker(&self, horizon: usize) -> Box<dyn MarginalTracker> {
        Box::new(ProductTracker {
            radices: self.components.iter().map(|c| c.arms()).collect(),
            parts: self.components.iter().map(|c| c.tracker(horizon)).collect(),
            joint: WeightVector::uniform(self.arms()),
            raw: Vec::with_capacity(self.arms()),
        })
    }
}

/// Combines one policy per variable into a joint policy. Every component
/// must read only its own variable's history and the responses; a component
/// with a conditional X rule or its own Z rule is rejected.
pub fn product_policy(policies: &[AdaptivePolicy]) -> Result<AdaptivePolicy> {
    if policies.is_empty() {
        return Err(Error::invalid("policies", "need at least one component"));
    }
    let mut components = Vec::with_capacity(policies.len());
    for (index, p) in policies.iter().enumerate() {
        match (p.x_rule(), p.z_rule()) {
            (XRule::Marginal(rule), None) => components.push(Arc::clone(rule)),
            _ => return Err(Error::ForeignHistory { index }),
        }
    }
    Ok(AdaptivePolicy::from_marginal(Arc::new(ProductRule { components })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{iid_policy, two_stage_policy, HistoryView, Reweight, TwoStageConfig};
    use crate::seed::{derive_stream, SeedPlan};
    use crate::weights::normalize;

    #[test]
    fn uniform_components_give_uniform_joint() {
        let p = product_policy(&[iid_policy(Weights::uniform(4)), iid_policy(Weights::uniform(4))]).unwrap();
        assert_eq!(p.x_arms(), 16);
        assert_eq!(p.kind(), PolicyKind::Iid);
        let mut rng = derive_stream(SeedPlan::new(0));
        let w = p.x_weights_at(&HistoryView::at(1, &[], &[], &[]), 1, &mut rng).unwrap();
        assert!(w.probs().iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn outer_product_weights() {
        let a = iid_policy(normalize(&[0.5, 0.5]).unwrap());
        let b = iid_policy(normalize(&[0.9, 0.1]).unwrap());
        let p = product_policy(&[a, b]).unwrap();
        let mut rng = derive_stream(SeedPlan::new(0));
        let w = p.x_weights_at(&HistoryView::at(1, &[], &[], &[]), 1, &mut rng).unwrap();
        for (got, want) in w.probs().iter().zip([0.45, 0.05, 0.45, 0.05]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn components_see_only_their_own_values() {
        // Second component is two-stage; its stage-one means must come from its own coordinate.
        let ts = two_stage_policy(TwoStageConfig {
            epsilon: 0.5,
            t_scale: 1.0,
            reweight: Reweight::Exp,
            q: Weights::uniform(2),
            n: 4,
        })
        .unwrap();
        let p = product_policy(&[iid_policy(Weights::uniform(3)), ts]).unwrap();
        let rule = match p.x_rule() {
            XRule::Marginal(r) => r.clone(),
            _ => unreachable!(),
        };
        let mut a = rule.tracker(4);
        let mut b = rule.tracker(4);
        // Same second-coordinate history, different first coordinates.
        a.observe(0, 1.0);
        a.observe(1, 0.0);
        b.observe(4, 1.0);
        b.observe(2 * 2 + 1, 0.0);
        let mut r1 = derive_stream(SeedPlan::new(0));
        let mut r2 = derive_stream(SeedPlan::new(0));
        assert_eq!(a.weights(&mut r1).unwrap(), b.weights(&mut r2).unwrap());
    }

    #[test]
    fn conditional_component_rejected() {
        let with_z = iid_policy(Weights::uniform(2)).with_z_rule(Arc::new(crate::policies::IidRule::new(Weights::uniform(3))));
        let err = product_policy(&[iid_policy(Weights::uniform(2)), with_z]).unwrap_err();
        assert_eq!(err, Error::ForeignHistory { index: 1 });
    }

    #[test]
    fn encode_decode() {
        let rule = ProductRule {
            components: vec![
                Arc::new(crate::policies::IidRule::new(Weights::uniform(3))),
                Arc::new(crate::policies::IidRule::new(Weights::uniform(4))),
            ],
        };
        for v in 0..12 {
            assert_eq!(rule.encode(&rule.decode(v)), v);
        }
        assert_eq!(rule.decode(7), vec![1, 3]);
    }
}
