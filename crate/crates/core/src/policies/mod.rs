//! Sequential adaptive sampling policies.
//!
//! A policy is split into an X rule and an optional Z rule. The Z rule only
//! ever sees its own past draws and past responses ([`MarginalRule`]), so a
//! policy in which Z adapts to past X cannot be expressed. The X rule may
//! either be marginal as well, or conditional on the current and past Z.
//!
//! Rules hand out *trackers*: a tracker is the fold of a history, updated one
//! observation at a time. Replaying any history (observed or counterfactual)
//! into a fresh tracker yields the policy's next-sample distribution for that
//! history; no state survives between replays.

mod iid;
mod product;
mod run;
mod spec;
mod two_stage;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::record::PolicyKind;
use crate::seed::Stream;
use crate::Weights;

pub use iid::{iid_policy, IidRule};
pub use product::{product_policy, ProductRule};
pub use run::{drive_experiment, run_experiment, NormalMeans, ResponseModel};
pub use spec::PolicySpec;
pub use two_stage::{two_stage_policy, uniform_two_stage, Reweight, TwoStageConfig, TwoStageRule};

/// Rule for one variable that reads only that variable's past values and the
/// past responses.
pub trait MarginalRule: Send + Sync + fmt::Debug {
    fn arms(&self) -> usize;
    fn kind(&self) -> PolicyKind;
    fn label(&self) -> String;
    /// Fresh tracker for an experiment of `horizon` steps.
    fn tracker(&self, horizon: usize) -> Box<dyn MarginalTracker>;
}

pub trait MarginalTracker: Send {
    /// Distribution of the next value given everything observed so far.
    fn weights(&mut self, rng: &mut Stream) -> Result<&Weights>;
    fn observe(&mut self, value: usize, y: f64);
    fn diagnostics(&self) -> Vec<String> {
        Vec::new()
    }
}

/// X rule that may also read the Z history, including the current Z.
pub trait ConditionalRule: Send + Sync + fmt::Debug {
    fn arms(&self) -> usize;
    fn z_arms(&self) -> usize;
    fn kind(&self) -> PolicyKind;
    fn label(&self) -> String;
    fn tracker(&self, horizon: usize) -> Box<dyn ConditionalTracker>;
}

pub trait ConditionalTracker: Send {
    fn weights(&mut self, z_now: usize, rng: &mut Stream) -> Result<&Weights>;
    fn observe(&mut self, x: usize, z: usize, y: f64);
    fn diagnostics(&self) -> Vec<String> {
        Vec::new()
    }
}

#[derive(Clone, Debug)]
pub enum XRule {
    Marginal(Arc<dyn MarginalRule>),
    Conditional(Arc<dyn ConditionalRule>),
}

impl XRule {
    pub fn arms(&self) -> usize {
        match self {
            XRule::Marginal(r) => r.arms(),
            XRule::Conditional(r) => r.arms(),
        }
    }

    pub fn tracker(&self, horizon: usize) -> XTracker {
        match self {
            XRule::Marginal(r) => XTracker::Marginal(r.tracker(horizon)),
            XRule::Conditional(r) => XTracker::Conditional(r.tracker(horizon)),
        }
    }
}

pub enum XTracker {
    Marginal(Box<dyn MarginalTracker>),
    Conditional(Box<dyn ConditionalTracker>),
}

impl XTracker {
    #[inline]
    pub fn weights(&mut self, z_now: Option<usize>, rng: &mut Stream) -> Result<&Weights> {
        match self {
            XTracker::Marginal(t) => t.weights(rng),
            XTracker::Conditional(t) => match z_now {
                Some(z) => t.weights(z, rng),
                None => Err(Error::PolicyMismatch(
                    "conditional X rule needs a Z value at every step".into(),
                )),
            },
        }
    }

    #[inline]
    pub fn observe(&mut self, x: usize, z: Option<usize>, y: f64) {
        match self {
            XTracker::Marginal(t) => t.observe(x, y),
            XTracker::Conditional(t) => t.observe(x, z.unwrap_or(0), y),
        }
    }

    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            XTracker::Marginal(t) => t.diagnostics(),
            XTracker::Conditional(t) => t.diagnostics(),
        }
    }
}

/// History available when choosing X at time `t` (1-based): X and Y for
/// times `1..t-1`, Z for times `1..t`.
#[derive(Clone, Copy, Debug)]
pub struct HistoryView<'a> {
    pub x_hist: &'a [usize],
    pub z_hist: &'a [usize],
    pub y_hist: &'a [f64],
}

impl<'a> HistoryView<'a> {
    /// View of the first `t - 1` steps of a full history.
    pub fn at(t: usize, x: &'a [usize], z: &'a [usize], y: &'a [f64]) -> Self {
        assert!(t >= 1 && t <= x.len() + 1);
        let z_hist = if z.is_empty() { z } else { &z[..t.min(z.len())] };
        HistoryView {
            x_hist: &x[..t - 1],
            z_hist,
            y_hist: &y[..t - 1],
        }
    }

    pub fn t(&self) -> usize {
        self.x_hist.len() + 1
    }

    fn validate(&self) -> Result<()> {
        if self.y_hist.len() != self.x_hist.len() {
            return Err(Error::LengthMismatch("history x and y differ in length".into()));
        }
        if !self.z_hist.is_empty() && self.z_hist.len() != self.x_hist.len() + 1 {
            return Err(Error::LengthMismatch(
                "history z must include the current step".into(),
            ));
        }
        Ok(())
    }
}

/// A complete sampling policy: the X rule plus an optional Z rule.
#[derive(Clone, Debug)]
pub struct AdaptivePolicy {
    x_rule: XRule,
    z_rule: Option<Arc<dyn MarginalRule>>,
    kind: PolicyKind,
    id: String,
}

impl AdaptivePolicy {
    pub fn from_marginal(rule: Arc<dyn MarginalRule>) -> Self {
        let kind = rule.kind();
        let id = rule.label();
        Self {
            x_rule: XRule::Marginal(rule),
            z_rule: None,
            kind,
            id,
        }
    }

    pub fn from_conditional(rule: Arc<dyn ConditionalRule>, z_rule: Arc<dyn MarginalRule>) -> Result<Self> {
        if rule.z_arms() != z_rule.arms() {
            return Err(Error::DomainMismatch(format!(
                "X rule expects {} Z arms, Z rule draws from {}",
                rule.z_arms(),
                z_rule.arms()
            )));
        }
        let kind = rule.kind();
        let id = format!("{}|z:{}", rule.label(), z_rule.label());
        Ok(Self {
            x_rule: XRule::Conditional(rule),
            z_rule: Some(z_rule),
            kind,
            id,
        })
    }

    /// Attaches a Z rule to a policy with a marginal X rule.
    pub fn with_z_rule(mut self, z_rule: Arc<dyn MarginalRule>) -> Self {
        if self.kind != z_rule.kind() {
            self.kind = PolicyKind::Product;
        }
        self.id = format!("{}|z:{}", self.id, z_rule.label());
        self.z_rule = Some(z_rule);
        self
    }

    pub fn x_rule(&self) -> &XRule {
        &self.x_rule
    }

    pub fn z_rule(&self) -> Option<&Arc<dyn MarginalRule>> {
        self.z_rule.as_ref()
    }

    pub fn x_arms(&self) -> usize {
        self.x_rule.arms()
    }

    pub fn z_arms(&self) -> usize {
        self.z_rule.as_ref().map_or(0, |r| r.arms())
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn needs_z(&self) -> bool {
        matches!(self.x_rule, XRule::Conditional(_))
    }

    /// Distribution of X at time `view.t()` for the given history.
    pub fn x_weights_at(&self, view: &HistoryView<'_>, horizon: usize, rng: &mut Stream) -> Result<Weights> {
        view.validate()?;
        let mut tracker = self.x_rule.tracker(horizon);
        let has_z = !view.z_hist.is_empty();
        for (s, (&x, &y)) in view.x_hist.iter().zip(view.y_hist).enumerate() {
            tracker.observe(x, has_z.then(|| view.z_hist[s]), y);
        }
        let z_now = if has_z { view.z_hist.last().copied() } else { None };
        tracker.weights(z_now, rng).cloned()
    }

    /// Distribution of Z at time `z_hist.len() + 1`. Only Z and Y history
    /// can be supplied.
    pub fn z_weights_at(&self, z_hist: &[usize], y_hist: &[f64], horizon: usize, rng: &mut Stream) -> Result<Option<Weights>> {
        let Some(rule) = &self.z_rule else {
            return Ok(None);
        };
        if z_hist.len() != y_hist.len() {
            return Err(Error::LengthMismatch("z and y history differ in length".into()));
        }
        let mut tracker = rule.tracker(horizon);
        for (&z, &y) in z_hist.iter().zip(y_hist) {
            tracker.observe(z, y);
        }
        tracker.weights(rng).cloned().map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{derive_stream, SeedPlan};
    use crate::weights::normalize;

    #[test]
    fn uniform_iid_ignores_history() {
        let p = 5;
        let policy = iid_policy(Weights::uniform(p));
        let mut rng = derive_stream(SeedPlan::new(1));
        let x = [0, 1, 2, 3];
        let y = [9.0, -9.0, 3.0, 0.0];
        for t in 1..=5 {
            let view = HistoryView::at(t, &x, &[], &y);
            let w = policy.x_weights_at(&view, 5, &mut rng).unwrap();
            assert_eq!(w.probs(), &[0.2; 5]);
        }
    }

    #[test]
    fn iid_with_strong_signal_history() {
        let q = normalize(&[0.7, 0.3]).unwrap();
        let policy = iid_policy(q.clone());
        let mut rng = derive_stream(SeedPlan::new(1));
        let x = [1, 1, 1, 1];
        let y = [50.0, 40.0, 60.0, 55.0];
        let view = HistoryView::at(5, &x, &[], &y);
        assert_eq!(policy.x_weights_at(&view, 10, &mut rng).unwrap(), q);
    }

    #[test]
    fn no_look_ahead() {
        // Perturbing entries at or after t never changes the weights emitted at t.
        let cfg = TwoStageConfig {
            epsilon: 0.5,
            t_scale: 0.3,
            reweight: Reweight::Exp,
            q: Weights::uniform(3),
            n: 8,
        };
        let policy = two_stage_policy(cfg).unwrap();
        let x = vec![0, 1, 2, 0, 1, 2, 0, 1];
        let y = vec![1.0, -0.5, 0.2, 2.0, 0.1, -1.0, 0.3, 0.0];
        for t in 1..=8 {
            let base = {
                let mut rng = derive_stream(SeedPlan::new(4));
                policy.x_weights_at(&HistoryView::at(t, &x, &[], &y), 8, &mut rng).unwrap()
            };
            let mut x2 = x.clone();
            let mut y2 = y.clone();
            for s in (t - 1)..8 {
                x2[s] = (x2[s] + 1) % 3;
                y2[s] += 10.0;
            }
            let mut rng = derive_stream(SeedPlan::new(4));
            let perturbed = policy.x_weights_at(&HistoryView::at(t, &x2, &[], &y2), 8, &mut rng).unwrap();
            assert_eq!(base, perturbed, "t={t}");
        }
    }
}
