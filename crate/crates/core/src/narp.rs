//! Natural adaptive resampling: fake X sequences obtained by replaying the
//! policy's X rule on (resampled X, observed Z, observed Y) histories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::AdaptivePolicy;
use crate::record::ExperimentRecord;
use crate::seed::{derive_stream, SeedPlan, Stream, StreamRole};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampleBundle {
    pub resamples: Vec<Vec<usize>>,
    pub source_record_id: String,
}

impl ResampleBundle {
    pub fn b(&self) -> usize {
        self.resamples.len()
    }
}

/// Checks that `record` can be resampled under `policy`.
pub fn check_compatible(policy: &AdaptivePolicy, record: &ExperimentRecord) -> Result<()> {
    record.validate()?;
    if policy.x_arms() != record.x_arms {
        return Err(Error::PolicyMismatch(format!(
            "policy has {} X arms, record has {}",
            policy.x_arms(),
            record.x_arms
        )));
    }
    if policy.needs_z() && !record.has_z() {
        return Err(Error::PolicyMismatch(
            "policy conditions on Z but the record has no Z".into(),
        ));
    }
    if policy.z_rule().is_some() && record.has_z() && policy.z_arms() != record.z_arms {
        return Err(Error::PolicyMismatch(format!(
            "policy has {} Z arms, record has {}",
            policy.z_arms(),
            record.z_arms
        )));
    }
    Ok(())
}

/// Draws one fake X sequence into `out`. Only the observed Z and Y are
/// supplied, so the observed X cannot influence the draw.
pub fn resample_into(
    policy: &AdaptivePolicy,
    z: &[usize],
    y: &[f64],
    rng: &mut Stream,
    out: &mut Vec<usize>,
) -> Result<()> {
    let n = y.len();
    if !z.is_empty() && z.len() != n {
        return Err(Error::LengthMismatch(format!("z has {} entries, y has {n}", z.len())));
    }
    out.clear();
    out.reserve(n);
    let mut tracker = policy.x_rule().tracker(n);
    for (t, &y_t) in y.iter().enumerate() {
        let z_t = z.get(t).copied();
        let w = tracker.weights(z_t, rng).map_err(|e| Error::InvalidPolicyOutput {
            t: t + 1,
            reason: e.to_string(),
        })?;
        let x_t = w.sample(rng);
        tracker.observe(x_t, z_t, y_t);
        out.push(x_t);
    }
    Ok(())
}

/// Stream used for the `b`-th resample below `plan`.
pub fn resample_plan(plan: SeedPlan, b: usize) -> SeedPlan {
    plan.child(StreamRole::Resample, b as u64)
}

/// The `b`-th resample of a bundle drawn with `plan`.
pub fn resample_one(policy: &AdaptivePolicy, z: &[usize], y: &[f64], b: usize, plan: SeedPlan) -> Result<Vec<usize>> {
    let mut rng = derive_stream(resample_plan(plan, b));
    let mut out = Vec::with_capacity(y.len());
    resample_into(policy, z, y, &mut rng, &mut out)?;
    Ok(out)
}

/// Draws `b` conditionally independent resamples of the record's X.
pub fn narp_resample(policy: &AdaptivePolicy, record: &ExperimentRecord, b: usize, plan: SeedPlan) -> Result<ResampleBundle> {
    check_compatible(policy, record)?;
    let (z, y) = (&record.z[..], &record.y[..]);
    let resamples = (0..b)
        .into_par_iter()
        .map(|i| resample_one(policy, z, y, i, plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResampleBundle {
        resamples,
        source_record_id: record.id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{iid_policy, run_experiment, uniform_two_stage, NormalMeans};
    use crate::Weights;

    #[test]
    fn bundle_shape_and_reproducibility() {
        let policy = uniform_two_stage(4, 30, 0.5, 0.5).unwrap();
        let rec = run_experiment(&policy, &NormalMeans::local_alternative(4, 2.0, 30), 30, SeedPlan::new(1)).unwrap();
        let a = narp_resample(&policy, &rec, 10, SeedPlan::new(2)).unwrap();
        let b = narp_resample(&policy, &rec, 10, SeedPlan::new(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.b(), 10);
        assert!(a.resamples.iter().all(|r| r.len() == 30));
    }

    #[test]
    fn observed_x_does_not_matter() {
        let policy = uniform_two_stage(3, 20, 0.5, 1.0).unwrap();
        let rec = run_experiment(&policy, &NormalMeans::null(3), 20, SeedPlan::new(3)).unwrap();
        let mut other = rec.clone();
        other.x = other.x.iter().map(|&v| (v + 1) % 3).collect();
        let a = narp_resample(&policy, &rec, 5, SeedPlan::new(9)).unwrap();
        let b = narp_resample(&policy, &other, 5, SeedPlan::new(9)).unwrap();
        assert_eq!(a.resamples, b.resamples);
    }

    #[test]
    fn mismatched_policy_rejected() {
        let rec = run_experiment(&iid_policy(Weights::uniform(3)), &NormalMeans::null(3), 5, SeedPlan::new(0)).unwrap();
        let err = narp_resample(&iid_policy(Weights::uniform(4)), &rec, 2, SeedPlan::new(0)).unwrap_err();
        assert!(matches!(err, Error::PolicyMismatch(_)));
        let mut bad = rec.clone();
        bad.y.pop();
        assert!(matches!(
            narp_resample(&iid_policy(Weights::uniform(3)), &bad, 2, SeedPlan::new(0)),
            Err(Error::LengthMismatch(_))
        ));
    }
}
