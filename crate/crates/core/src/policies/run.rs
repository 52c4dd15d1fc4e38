use rand_distr::{Distribution, StandardNormal};

use super::AdaptivePolicy;
use crate::error::{Error, Result};
use crate::record::ExperimentRecord;
use crate::seed::{derive_stream, SeedPlan, Stream};

/// Nature's response: a stochastic function of the current `(x, z)` only.
pub trait ResponseModel: Send + Sync {
    fn draw(&self, x: usize, z: Option<usize>, rng: &mut Stream) -> f64;
}

impl<F> ResponseModel for F
where
    F: Fn(usize, Option<usize>, &mut Stream) -> f64 + Send + Sync,
{
    fn draw(&self, x: usize, z: Option<usize>, rng: &mut Stream) -> f64 {
        self(x, z, rng)
    }
}

/// `Y | X = j ~ N(theta_j, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMeans {
    pub theta: Vec<f64>,
}

impl NormalMeans {
    pub fn null(p: usize) -> Self {
        Self { theta: vec![0.0; p] }
    }

    /// One signal arm (index 0) with mean `h0 / sqrt(n)`.
    pub fn local_alternative(p: usize, h0: f64, n: usize) -> Self {
        let mut theta = vec![0.0; p];
        theta[0] = h0 / (n as f64).sqrt();
        Self { theta }
    }
}

impl ResponseModel for NormalMeans {
    #[inline]
    fn draw(&self, x: usize, _z: Option<usize>, rng: &mut Stream) -> f64 {
        let e: f64 = StandardNormal.sample(rng);
        self.theta[x] + e
    }
}

/// Runs the policy for `n` steps: Z from the Z rule, then X given the
/// history and the current Z, then Y from the response model.
pub fn run_experiment(
    policy: &AdaptivePolicy,
    response: &dyn ResponseModel,
    n: usize,
    plan: SeedPlan,
) -> Result<ExperimentRecord> {
    drive_experiment(policy, n, plan, |_t, x, z, rng| Ok(response.draw(x, z, rng)))
}

/// Experiment loop with a fallible responder `respond(t, x, z, rng)`; `t`
/// is 1-based.
pub fn drive_experiment<F>(policy: &AdaptivePolicy, n: usize, plan: SeedPlan, mut respond: F) -> Result<ExperimentRecord>
where
    F: FnMut(usize, usize, Option<usize>, &mut Stream) -> Result<f64>,
{
    let mut rng = derive_stream(plan);
    let x_arms = policy.x_arms();
    let z_arms = policy.z_arms();
    let mut x_tracker = policy.x_rule().tracker(n);
    let mut z_tracker = policy.z_rule().map(|r| r.tracker(n));
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(if z_tracker.is_some() { n } else { 0 });
    let mut y = Vec::with_capacity(n);

    for t in 1..=n {
        let z_t = match z_tracker.as_mut() {
            Some(zt) => {
                let w = zt.weights(&mut rng).map_err(|e| policy_error(t, e))?;
                check_len(t, w.len(), z_arms)?;
                Some(w.sample(&mut rng))
            }
            None => None,
        };
        let w = x_tracker.weights(z_t, &mut rng).map_err(|e| policy_error(t, e))?;
        check_len(t, w.len(), x_arms)?;
        let x_t = w.sample(&mut rng);
        let y_t = respond(t, x_t, z_t, &mut rng)?;
        x_tracker.observe(x_t, z_t, y_t);
        if let (Some(zt), Some(zv)) = (z_tracker.as_mut(), z_t) {
            zt.observe(zv, y_t);
            z.push(zv);
        }
        x.push(x_t);
        y.push(y_t);
    }

    let mut diagnostics = x_tracker.diagnostics();
    if let Some(zt) = &z_tracker {
        diagnostics.extend(zt.diagnostics());
    }
    Ok(ExperimentRecord {
        x,
        z,
        y,
        x_arms,
        z_arms,
        policy_kind: policy.kind(),
        policy_id: policy.id().to_string(),
        seed: plan.seed_value(),
        diagnostics,
    })
}

fn policy_error(t: usize, e: Error) -> Error {
    match e {
        Error::InvalidPolicyOutput { .. } => e,
        other => Error::InvalidPolicyOutput {
            t,
            reason: other.to_string(),
        },
    }
}

fn check_len(t: usize, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidPolicyOutput {
            t,
            reason: format!("{got} weights for a domain of {want} arms"),
        });
    }
    Ok(())
}
