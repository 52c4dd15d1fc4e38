use rayon::prelude::*;
use serde_json::json;

use super::gaussian::{max_of, ArmFluctuation};
use super::{check_alpha, check_h0, chunks, upper_quantile};
use crate::engine::{fingerprint, PowerEstimate};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::{derive_stream, SeedPlan, StreamRole};
use crate::weights::WeightVector;

/// Quantile-phase draws per exceedance-phase draw in [`power_iid`].
pub const QUANTILE_OVERSAMPLE: usize = 50;

/// Power of the randomization test under iid sampling with weights `q`:
/// `P(T ≥ z_{1-α}(T̃))` with
/// `T = max(H_1 + h0, H_2, ..., H_p)` and `T̃ = h0 q_1 + max(G_1, ..., G_p)`,
/// where the p-th coordinate is the linear completion.
///
/// The quantile is estimated from `QUANTILE_OVERSAMPLE * n_mc` draws so the
/// reported standard error (binomial in `n_mc`) is not understated.
pub fn power_iid<T: Real>(q: &WeightVector<T>, h0: T, alpha: f64, n_mc: usize, plan: SeedPlan) -> Result<PowerEstimate> {
    power_iid_with(q, h0, alpha, QUANTILE_OVERSAMPLE * n_mc, n_mc, plan)
}

/// [`power_iid`] with an explicit quantile-phase sample size.
pub fn power_iid_with<T: Real>(
    q: &WeightVector<T>,
    h0: T,
    alpha: f64,
    n_quantile: usize,
    n_mc: usize,
    plan: SeedPlan,
) -> Result<PowerEstimate> {
    check_alpha(alpha)?;
    check_h0(h0.as_f64())?;
    if q.len() < 2 {
        return Err(Error::invalid("q", "need at least two arms"));
    }
    if n_mc < 1 || n_quantile < 1 {
        return Err(Error::invalid("n_mc", "need at least one draw"));
    }
    let sampler = ArmFluctuation::new(q.probs());
    let p = q.len();
    let shift = h0 * q.get(0);

    let null_draws: Vec<Vec<T>> = chunks(n_quantile)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = derive_stream(plan.child(StreamRole::Quantile, c as u64));
            let mut g = vec![T::zero(); p];
            (0..len)
                .map(|_| {
                    sampler.draw(&mut rng, &mut g);
                    shift + max_of(&g)
                })
                .collect()
        })
        .collect();
    let mut null_draws: Vec<T> = null_draws.concat();
    let z = upper_quantile(&mut null_draws, alpha);

    let hits: usize = chunks(n_mc)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = derive_stream(plan.child(StreamRole::Exceedance, c as u64));
            let mut h = vec![T::zero(); p];
            (0..len)
                .filter(|_| {
                    sampler.draw(&mut rng, &mut h);
                    h[0] = h[0] + h0;
                    max_of(&h) >= z
                })
                .count()
        })
        .sum();

    let config = json!({
        "op": "power_iid",
        "q": q.probs().iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
        "h0": h0.as_f64(),
        "alpha": alpha,
        "n_quantile": n_quantile,
        "n_mc": n_mc,
    });
    Ok(PowerEstimate::from_counts(hits, n_mc, alpha, 0, fingerprint(&config)))
}
