#![allow(dead_code)]

use std::sync::Arc;

use artkit::narp::resample_one;
use artkit::policies::{AdaptivePolicy, MarginalRule, MarginalTracker};
use artkit::{normalize, PolicyKind, Result, SeedPlan, Stream, Weights};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Binary-X rule whose next weight on arm 1 is `(1 + s1) / (2 + s0 + s1)`,
/// where `s_a` is the summed response among past samples on arm `a`.
#[derive(Debug)]
pub struct LearningRule;

pub fn learning_prob_one(x: &[usize], y: &[f64]) -> f64 {
    let (mut s0, mut s1) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        if xi == 1 {
            s1 += yi;
        } else {
            s0 += yi;
        }
    }
    (1.0 + s1) / (2.0 + s0 + s1)
}

struct LearningTracker {
    x: Vec<usize>,
    y: Vec<f64>,
    w: Weights,
}

impl MarginalTracker for LearningTracker {
    fn weights(&mut self, _rng: &mut Stream) -> Result<&Weights> {
        let p1 = learning_prob_one(&self.x, &self.y);
        self.w = normalize(&[1.0 - p1, p1])?;
        Ok(&self.w)
    }

    fn observe(&mut self, value: usize, y: f64) {
        self.x.push(value);
        self.y.push(y);
    }
}

impl MarginalRule for LearningRule {
    fn arms(&self) -> usize {
        2
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::Custom
    }

    fn label(&self) -> String {
        "learning".into()
    }

    fn tracker(&self, _horizon: usize) -> Box<dyn MarginalTracker> {
        Box::new(LearningTracker {
            x: Vec::new(),
            y: Vec::new(),
            w: Weights::uniform(2),
        })
    }
}

pub fn learning_policy() -> AdaptivePolicy {
    AdaptivePolicy::from_marginal(Arc::new(LearningRule))
}

/// Conditional law of the binary sequence X given Y under the learning rule,
/// by enumerating all `2^n` paths. Index `Σ x_t 2^t`.
pub fn enumerate_conditional(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..1usize << n)
        .map(|code| {
            let x: Vec<usize> = (0..n).map(|t| (code >> t) & 1).collect();
            (0..n)
                .map(|t| {
                    let p1 = learning_prob_one(&x[..t], &y[..t]);
                    if x[t] == 1 {
                        p1
                    } else {
                        1.0 - p1
                    }
                })
                .product()
        })
        .collect()
}

/// Histogram of `draws` natural resamples of X given Y.
pub fn narp_histogram(policy: &AdaptivePolicy, y: &[f64], draws: usize, plan: SeedPlan) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << y.len()];
    for b in 0..draws {
        let x = resample_one(policy, &[], y, b, plan).unwrap();
        let code: usize = x.iter().enumerate().map(|(t, &v)| v << t).sum();
        counts[code] += 1;
    }
    counts
}

/// Pearson chi-square goodness-of-fit p-value.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut df = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p > 0.0 {
            let e = p * total as f64;
            stat += (c as f64 - e).powi(2) / e;
            df += 1;
        } else {
            assert_eq!(c, 0, "draw in a zero-probability cell");
        }
    }
    1.0 - ChiSquared::new((df - 1) as f64).unwrap().cdf(stat)
}
