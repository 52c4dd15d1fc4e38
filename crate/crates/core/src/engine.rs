//! Randomization p-values and the Monte Carlo power harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::narp::{check_compatible, resample_into, resample_plan};
use crate::policies::{iid_policy, AdaptivePolicy};
use crate::record::{ExperimentRecord, PolicyKind};
use crate::seed::{derive_stream, SeedPlan, StreamRole};
use crate::stats::TestStatistic;
use crate::Weights;

/// `(1 + k) / (B + 1)` where `k` counts resampled statistics `>=` the
/// observed one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub value: f64,
    pub b: usize,
    pub exceedances: usize,
    pub tie_count: usize,
    pub stat_obs: f64,
}

impl PValue {
    /// Builds the p-value from the observed and resampled statistics.
    pub fn from_statistics(stat_obs: f64, resampled: &[f64]) -> Self {
        let mut k = 0;
        let mut ties = 0;
        for &t in resampled {
            if t >= stat_obs {
                k += 1;
            }
            if t == stat_obs {
                ties += 1;
            }
        }
        Self {
            value: (1 + k) as f64 / (resampled.len() + 1) as f64,
            b: resampled.len(),
            exceedances: k,
            tie_count: ties,
            stat_obs,
        }
    }
}

/// ART p-value: resamples X by replaying `policy` on the record's (Z, Y).
/// The statistic is bound with the record's seed; resample `b` uses the
/// stream `plan.child(Resample, b)`.
pub fn art_p_value(
    record: &ExperimentRecord,
    policy: &AdaptivePolicy,
    stat: &dyn TestStatistic,
    b: usize,
    plan: SeedPlan,
) -> Result<PValue> {
    if b < 1 {
        return Err(Error::invalid("b", "need at least one resample"));
    }
    check_compatible(policy, record)?;
    let mut bound = stat.bind(&record.z, &record.y, record.seed)?;
    let stat_obs = bound.eval(&record.x)?;
    if stat_obs.is_nan() {
        return Err(Error::DegenerateFit("observed statistic is NaN".into()));
    }
    let mut resampled = Vec::with_capacity(b);
    let mut x = Vec::with_capacity(record.n());
    for i in 0..b {
        let mut rng = derive_stream(resample_plan(plan, i));
        resample_into(policy, &record.z, &record.y, &mut rng, &mut x)?;
        resampled.push(bound.eval(&x)?);
    }
    Ok(PValue::from_statistics(stat_obs, &resampled))
}

/// CRT p-value with iid resampling from `q`. Only offered for records
/// collected by an iid policy.
pub fn crt_p_value(
    record: &ExperimentRecord,
    q: &Weights,
    stat: &dyn TestStatistic,
    b: usize,
    plan: SeedPlan,
) -> Result<PValue> {
    if record.policy_kind != PolicyKind::Iid {
        return Err(Error::PolicyMismatch(format!(
            "CRT resampling needs iid-collected data, record came from a {:?} policy",
            record.policy_kind
        )));
    }
    art_p_value(record, &iid_policy(q.clone()), stat, b, plan)
}

/// One finished pipeline run (experiment, resampling, p-value).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub p: PValue,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationOutcome {
    pub index: usize,
    pub result: Result<Replicate>,
}

/// A complete simulation configuration that can run one replication.
pub trait Scenario: Send + Sync {
    /// Canonical description; its hash is the configuration fingerprint.
    fn describe(&self) -> serde_json::Value;

    fn replicate(&self, plan: SeedPlan) -> Result<Replicate>;

    fn fingerprint(&self) -> String {
        fingerprint(&self.describe())
    }
}

/// Hex SHA-256 of the canonical (sorted-key, compact) JSON encoding.
pub fn fingerprint(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(value).expect("JSON values always serialize");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Plan of replication `index` below `plan`.
pub fn replication_plan(plan: SeedPlan, index: usize) -> SeedPlan {
    plan.child(StreamRole::Replication, index as u64)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Runs `n_mc` replications; outcomes are ordered by index whatever the
/// schedule.
pub fn run_replications(
    scenario: &dyn Scenario,
    n_mc: usize,
    plan: SeedPlan,
    workers: Option<usize>,
) -> Vec<ReplicationOutcome> {
    with_workers(workers, || {
        (0..n_mc)
            .into_par_iter()
            .map(|index| ReplicationOutcome {
                index,
                result: scenario.replicate(replication_plan(plan, index)),
            })
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub se: f64,
    /// Successful replications the estimate is based on.
    pub n_mc: usize,
    pub failures: usize,
    pub alpha: f64,
    pub config_fingerprint: String,
}

impl PowerEstimate {
    /// Proportion of `p_values` at or below `alpha`.
    pub fn from_p_values(p_values: &[f64], alpha: f64, failures: usize, config_fingerprint: String) -> Self {
        let n = p_values.len();
        let hits = p_values.iter().filter(|&&p| p <= alpha).count();
        Self::from_counts(hits, n, alpha, failures, config_fingerprint)
    }

    pub fn from_counts(hits: usize, n: usize, alpha: f64, failures: usize, config_fingerprint: String) -> Self {
        let (power, se) = if n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = hits as f64 / n as f64;
            (p, (p * (1.0 - p) / n as f64).sqrt())
        };
        Self {
            power,
            se,
            n_mc: n,
            failures,
            alpha,
            config_fingerprint,
        }
    }

    /// Power estimate from replication outcomes; failures are excluded and
    /// never count as rejections.
    pub fn from_outcomes(outcomes: &[ReplicationOutcome], alpha: f64, config_fingerprint: String) -> Self {
        let ps: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|r| r.p.value))
            .collect();
        let failures = outcomes.len() - ps.len();
        Self::from_p_values(&ps, alpha, failures, config_fingerprint)
    }
}

/// Empirical power of the scenario's test at level `alpha`.
pub fn empirical_power(
    scenario: &dyn Scenario,
    n_mc: usize,
    alpha: f64,
    plan: SeedPlan,
    workers: Option<usize>,
) -> Result<PowerEstimate> {
    if n_mc < 1 {
        return Err(Error::invalid("n_mc", "need at least one replication"));
    }
    let outcomes = run_replications(scenario, n_mc, plan, workers);
    Ok(PowerEstimate::from_outcomes(&outcomes, alpha, scenario.fingerprint()))
}
