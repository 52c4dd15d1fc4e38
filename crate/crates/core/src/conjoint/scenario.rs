use serde::{Deserialize, Serialize};

use super::{conjoint_adaptive_policy, conjoint_uniform_policy, ConjointResponseModel};
use crate::engine::{art_p_value, empirical_power, PowerEstimate, Replicate, Scenario};
use crate::error::{Error, Result};
use crate::policies::{run_experiment, AdaptivePolicy};
use crate::seed::{SeedPlan, StreamRole};
use crate::stats::{FStatistic, LassoStatistic, TestStatistic};

/// How pairs are sampled. `Iid` is uniform over every (X, Z) pair, so its
/// randomization test is the CRT.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConjointDesign {
    Adaptive { epsilon: f64 },
    Iid,
}

impl ConjointDesign {
    pub fn policy(&self, k: usize, l: usize) -> Result<AdaptivePolicy> {
        match self {
            ConjointDesign::Adaptive { epsilon } => conjoint_adaptive_policy(*epsilon, k, l),
            ConjointDesign::Iid => Ok(conjoint_uniform_policy(k, l)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjointStatistic {
    #[default]
    LassoLogistic,
    FStat,
}

impl ConjointStatistic {
    pub fn build(&self, k: usize, l: usize) -> Box<dyn TestStatistic> {
        match self {
            ConjointStatistic::LassoLogistic => Box::new(LassoStatistic::new(k, l)),
            ConjointStatistic::FStat => Box::new(FStatistic { k }),
        }
    }
}

/// Simulated forced-choice study with one X factor and one Z factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjointScenario {
    pub n: usize,
    pub model: ConjointResponseModel,
    pub design: ConjointDesign,
    #[serde(default)]
    pub statistic: ConjointStatistic,
    pub b: usize,
}

impl ConjointScenario {
    pub fn validate(&self) -> Result<()> {
        let (k, l) = (self.model.k, self.model.l);
        if k < 2 || l < 2 {
            return Err(Error::invalid("levels", format!("need k, l >= 2, got k = {k}, l = {l}")));
        }
        if self.n < 2 {
            return Err(Error::invalid("n", "need at least two samples"));
        }
        if self.b < 1 {
            return Err(Error::invalid("b", "need at least one resample"));
        }
        for (name, v) in [
            ("beta_x", self.model.beta_x),
            ("beta_z", self.model.beta_z),
            ("beta_xz", self.model.beta_xz),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        self.design.policy(k, l).map(|_| ())
    }
}

impl Scenario for ConjointScenario {
    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "scenario": "conjoint", "config": self })
    }

    fn replicate(&self, plan: SeedPlan) -> Result<Replicate> {
        let (k, l) = (self.model.k, self.model.l);
        let policy = self.design.policy(k, l)?;
        let record = run_experiment(&policy, &self.model, self.n, plan.child(StreamRole::Experiment, 0))?;
        let stat = self.statistic.build(k, l);
        let p = art_p_value(&record, &policy, stat.as_ref(), self.b, plan)?;
        Ok(Replicate {
            p,
            seed: record.seed,
            diagnostics: record.diagnostics,
        })
    }
}

/// Empirical power of the conjoint randomization test.
pub fn simulate_conjoint_power(
    scenario: &ConjointScenario,
    n_mc: usize,
    alpha: f64,
    plan: SeedPlan,
    workers: Option<usize>,
) -> Result<PowerEstimate> {
    scenario.validate()?;
    empirical_power(scenario, n_mc, alpha, plan, workers)
}
