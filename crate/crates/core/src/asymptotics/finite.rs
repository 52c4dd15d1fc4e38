use serde_json::json;

use crate::engine::{art_p_value, empirical_power, PowerEstimate, Replicate, Scenario};
use crate::error::{Error, Result};
use crate::policies::{run_experiment, AdaptivePolicy, NormalMeans, PolicySpec};
use crate::seed::{SeedPlan, StreamRole};
use crate::stats::{MaxArmMean, StatisticKind};

/// Normal-means experiment with one signal arm of mean `h0 / sqrt(n)`,
/// analysed by the randomization test with the max-arm-mean statistic.
#[derive(Clone, Debug)]
pub struct NormalMeansScenario {
    pub n: usize,
    pub p: usize,
    pub h0: f64,
    pub b: usize,
    pub policy_spec: PolicySpec,
    policy: AdaptivePolicy,
    model: NormalMeans,
}

impl NormalMeansScenario {
    pub fn new(n: usize, p: usize, h0: f64, policy_spec: PolicySpec, b: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid("p", "need at least two arms"));
        }
        if n < p {
            return Err(Error::invalid("n", format!("{n} < p = {p}")));
        }
        if !(h0.is_finite() && h0 >= 0.0) {
            return Err(Error::invalid("h0", format!("{h0} must be finite and non-negative")));
        }
        if b < 1 {
            return Err(Error::invalid("b", "need at least one resample"));
        }
        let policy = policy_spec.build(p, n)?;
        if policy.x_arms() != p {
            return Err(Error::invalid("policy", format!("has {} arms, scenario has {p}", policy.x_arms())));
        }
        if policy.needs_z() {
            return Err(Error::invalid("policy", "normal-means scenarios have no Z"));
        }
        Ok(Self {
            n,
            p,
            h0,
            b,
            policy_spec,
            policy,
            model: NormalMeans::local_alternative(p, h0, n),
        })
    }
}

impl Scenario for NormalMeansScenario {
    fn describe(&self) -> serde_json::Value {
        json!({
            "scenario": "normal_means",
            "n": self.n,
            "p": self.p,
            "h0": self.h0,
            "b": self.b,
            "policy": self.policy_spec,
            "statistic": StatisticKind::MaxArmMean.as_str(),
        })
    }

    fn replicate(&self, plan: SeedPlan) -> Result<Replicate> {
        let record = run_experiment(&self.policy, &self.model, self.n, plan.child(StreamRole::Experiment, 0))?;
        let p = art_p_value(&record, &self.policy, &MaxArmMean { arms: self.p }, self.b, plan)?;
        Ok(Replicate {
            p,
            seed: record.seed,
            diagnostics: Vec::new(),
        })
    }
}

/// Finite-n power of the randomization test in the normal-means model.
#[allow(clippy::too_many_arguments)]
pub fn finite_n_nmm_power(
    n: usize,
    p: usize,
    h0: f64,
    policy: PolicySpec,
    stat: StatisticKind,
    b: usize,
    n_mc: usize,
    alpha: f64,
    plan: SeedPlan,
    workers: Option<usize>,
) -> Result<PowerEstimate> {
    if stat != StatisticKind::MaxArmMean {
        return Err(Error::invalid(
            "statistic",
            format!("{} is not defined for the normal-means model", stat.as_str()),
        ));
    }
    let scenario = NormalMeansScenario::new(n, p, h0, policy, b)?;
    empirical_power(&scenario, n_mc, alpha, plan, workers)
}
