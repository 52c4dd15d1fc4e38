use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::gaussian::ArmFluctuation;
use super::{check_alpha, check_h0, upper_quantile, DEFAULT_N_INNER, DEFAULT_N_OUTER};
use crate::engine::{fingerprint, PowerEstimate};
use crate::error::{Error, Result};
use crate::policies::Reweight;
use crate::scalar::Real;
use crate::seed::{derive_stream, SeedPlan, Stream, StreamRole};
use crate::weights::WeightVector;

/// Mean shift of the reference arm's first-stage limit `W_p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LastArmShift {
    /// No shift, like every other non-signal arm.
    #[default]
    Zero,
    /// `sqrt(ε) h0 q_1 (1 - q_1)` as literally stated.
    AsStated,
}

/// Configuration of the two-stage asymptotic power evaluator.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveSpec<T = f64> {
    pub epsilon: T,
    /// Reweighting scale; second-stage weights are `∝ f(t W_j / sqrt(ε))`.
    pub t: T,
    pub reweight: Reweight,
    pub q: WeightVector<T>,
    pub h0: T,
    pub alpha: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub last_arm: LastArmShift,
}

impl<T: Real> AdaptiveSpec<T> {
    /// Uniform first stage, exponential reweighting, default sample sizes.
    pub fn uniform(p: usize, epsilon: T, t: T, h0: T, alpha: f64) -> Self {
        Self {
            epsilon,
            t,
            reweight: Reweight::Exp,
            q: WeightVector::uniform(p),
            h0,
            alpha,
            n_outer: DEFAULT_N_OUTER,
            n_inner: DEFAULT_N_INNER,
            last_arm: LastArmShift::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon.as_f64();
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid("epsilon", format!("{eps} not in (0, 1)")));
        }
        if !self.t.is_finite() {
            return Err(Error::invalid("t", "must be finite"));
        }
        check_alpha(self.alpha)?;
        check_h0(self.h0.as_f64())?;
        if self.q.len() < 2 {
            return Err(Error::invalid("q", "need at least two arms"));
        }
        if self.n_inner < 200 {
            return Err(Error::invalid("n_inner", format!("{} < 200", self.n_inner)));
        }
        if self.n_outer < 1 {
            return Err(Error::invalid("n_outer", "need at least one draw"));
        }
        Ok(())
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "op": "power_adaptive",
            "epsilon": self.epsilon.as_f64(),
            "t": self.t.as_f64(),
            "reweight": self.reweight,
            "q": self.q.probs().iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
            "h0": self.h0.as_f64(),
            "alpha": self.alpha,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
            "last_arm": self.last_arm,
        })
    }
}

/// Per-worker buffers.
struct Scratch<T> {
    first: ArmFluctuation<T>,
    second: ArmFluctuation<T>,
    fluct: Vec<T>,
    w: Vec<T>,
    args: Vec<T>,
    raw: Vec<T>,
    weights: WeightVector<T>,
    inner: Vec<T>,
}

/// Constants shared by every draw.
struct Consts<T> {
    q: Vec<T>,
    sqrt_eps: T,
    sqrt_rest: T,
    eps: T,
    rest: T,
    h0: T,
    t_over_sqrt_eps: T,
    last_shift: T,
}

impl<T: Real> Consts<T> {
    /// `max_j [q_j sqrt(ε) W_j + Q_j sqrt(1-ε) (S_j + R_S + shift_j)] / [ε q_j + (1-ε) Q_j]`.
    #[inline]
    fn statistic(&self, w: &[T], big_q: &[T], second: &[T], r_s: T, shift: impl Fn(usize) -> T) -> T {
        let mut best = T::neg_infinity();
        for j in 0..w.len() {
            let num = self.q[j] * self.sqrt_eps * w[j] + big_q[j] * self.sqrt_rest * (second[j] + r_s + shift(j));
            let den = self.eps * self.q[j] + self.rest * big_q[j];
            best = best.max(num / den);
        }
        best
    }
}

fn second_stage_weights<T: Real>(reweight: Reweight, c: &Consts<T>, s: &mut Scratch<T>) -> Result<()> {
    s.args.clear();
    s.args.extend(s.w.iter().map(|&w| c.t_over_sqrt_eps * w));
    reweight.weights_into(&s.args, &mut s.raw, &mut s.weights)
}

/// One outer draw: returns whether `T_adap` reaches the conditional quantile.
fn outer_draw<T: Real>(spec: &AdaptiveSpec<T>, c: &Consts<T>, s: &mut Scratch<T>, rng: &mut Stream) -> Result<bool> {
    let p = c.q.len();
    let r_f = T::standard_normal(rng);
    s.first.draw(rng, &mut s.fluct);
    s.w.clear();
    for j in 0..p {
        let shift = if j == 0 {
            c.sqrt_eps * c.h0
        } else if j == p - 1 {
            c.last_shift
        } else {
            T::zero()
        };
        s.w.push(s.fluct[j] + r_f + shift);
    }
    second_stage_weights(spec.reweight, c, s)?;
    let big_q: Vec<T> = s.weights.probs().to_vec();
    let w_obs = s.w.clone();
    let r_s = T::standard_normal(rng);
    s.second.reset(&big_q);
    s.second.draw(rng, &mut s.fluct);
    let signal = c.sqrt_rest * c.h0;
    let t_obs = c.statistic(&w_obs, &big_q, &s.fluct, r_s, |j| if j == 0 { signal } else { T::zero() });

    let first_mean = c.sqrt_eps * c.h0 * c.q[0];
    let second_mean = c.sqrt_rest * c.h0 * big_q[0];
    s.inner.clear();
    for _ in 0..spec.n_inner {
        s.first.draw(rng, &mut s.fluct);
        s.w.clear();
        s.w.extend(s.fluct.iter().map(|&g| g + r_f + first_mean));
        second_stage_weights(spec.reweight, c, s)?;
        s.second.reset(s.weights.probs());
        s.second.draw(rng, &mut s.fluct);
        let v = c.statistic(&s.w, s.weights.probs(), &s.fluct, r_s, |_| second_mean);
        s.inner.push(v);
    }
    let z = upper_quantile(&mut s.inner, spec.alpha);
    Ok(t_obs >= z)
}

/// Power of the adaptive randomization test under two-stage sampling:
/// the outer average of `1{T_adap ≥ z_{1-α}(T̃_adap | R_F, R_S, H_F, H_S)}`,
/// with the conditional quantile estimated from `n_inner` draws.
///
/// Outer draw `i` uses the stream `plan.child(Outer, i)`, so the result does
/// not depend on the worker count.
pub fn power_adaptive<T: Real>(spec: &AdaptiveSpec<T>, plan: SeedPlan) -> Result<PowerEstimate> {
    spec.validate()?;
    let p = spec.q.len();
    let q = spec.q.probs().to_vec();
    let eps = spec.epsilon;
    let sqrt_eps = eps.sqrt();
    let last_shift = match spec.last_arm {
        LastArmShift::Zero => T::zero(),
        LastArmShift::AsStated => sqrt_eps * spec.h0 * q[0] * (T::one() - q[0]),
    };
    let c = Consts {
        sqrt_eps,
        sqrt_rest: (T::one() - eps).sqrt(),
        eps,
        rest: T::one() - eps,
        h0: spec.h0,
        t_over_sqrt_eps: spec.t / sqrt_eps,
        last_shift,
        q: q.clone(),
    };
    let hits: Result<usize> = (0..spec.n_outer)
        .into_par_iter()
        .map_init(
            || Scratch {
                first: ArmFluctuation::new(&q),
                second: ArmFluctuation::new(&q),
                fluct: vec![T::zero(); p],
                w: Vec::with_capacity(p),
                args: Vec::with_capacity(p),
                raw: Vec::with_capacity(p),
                weights: WeightVector::uniform(p),
                inner: Vec::with_capacity(spec.n_inner),
            },
            |s, i| {
                let mut rng = derive_stream(plan.child(StreamRole::Outer, i as u64));
                outer_draw(spec, &c, s, &mut rng).map(usize::from)
            },
        )
        .sum();
    Ok(PowerEstimate::from_counts(
        hits?,
        spec.n_outer,
        spec.alpha,
        0,
        fingerprint(&spec.describe()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: usize, t: f64, h0: f64) -> AdaptiveSpec {
        AdaptiveSpec {
            n_outer: 2000,
            n_inner: 400,
            ..AdaptiveSpec::uniform(p, 0.5, t, h0, 0.05)
        }
    }

    #[test]
    fn null_is_calibrated() {
        let est = power_adaptive(&small(5, 0.3, 0.0), SeedPlan::new(1)).unwrap();
        // Exact level of the order-statistic test is (n_inner - rank + 1) / (n_inner + 1).
        let level = 21.0 / 401.0;
        assert!((est.power - level).abs() < 3.0 * est.se, "{est:?}");
    }

    #[test]
    fn signal_raises_power() {
        let lo = power_adaptive(&small(5, 0.1, 2.0), SeedPlan::new(2)).unwrap();
        let hi = power_adaptive(&small(5, 0.1, 6.0), SeedPlan::new(2)).unwrap();
        assert!(hi.power > lo.power + 0.2);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let spec = AdaptiveSpec {
            n_outer: 64,
            n_inner: 200,
            ..small(4, 0.2, 3.0)
        };
        let a = crate::engine::with_workers(Some(1), || power_adaptive(&spec, SeedPlan::new(5)).unwrap());
        let b = crate::engine::with_workers(Some(4), || power_adaptive(&spec, SeedPlan::new(5)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn validation() {
        let mut s = small(3, 0.1, 1.0);
        s.epsilon = 1.0;
        assert!(power_adaptive(&s, SeedPlan::new(0)).is_err());
        let mut s = small(3, 0.1, 1.0);
        s.n_inner = 100;
        assert!(power_adaptive(&s, SeedPlan::new(0)).is_err());
    }
}
