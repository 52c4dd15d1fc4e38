use super::augment::check_binary;
use super::{AugmentedDesign, BoundStatistic, TestStatistic};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// F statistic from per-group count, sum and sum of squares. Groups with no
/// rows are dropped. Returns the statistic and the number of dropped groups.
fn f_from_moments<T: Real>(count: &[T], sum: &[T], sumsq: &[T]) -> Result<(T, usize)> {
    let mut g = 0usize;
    let mut total_n = T::zero();
    let mut total_s = T::zero();
    let mut ssw = T::zero();
    let mut between = T::zero();
    for ((&c, &s), &q) in count.iter().zip(sum).zip(sumsq) {
        if c > T::zero() {
            g += 1;
            total_n = total_n + c;
            total_s = total_s + s;
            ssw = ssw + (q - s * s / c);
            between = between + s * s / c;
        }
    }
    let dropped = count.len() - g;
    if g < 2 {
        return Err(Error::DegenerateFit(format!("{g} distinct group(s) present, need 2")));
    }
    let n = total_n.to_usize().unwrap_or(0);
    if n <= g {
        return Err(Error::DegenerateFit(format!("{n} rows for {g} groups")));
    }
    let ssb = (between - total_s * total_s / total_n).max(T::zero());
    let ssw = ssw.max(T::zero());
    let df_b = T::from_usize(g - 1).unwrap();
    let df_w = T::from_usize(n - g).unwrap();
    let tiny = T::epsilon() * total_n;
    let f = if ssw <= tiny {
        if ssb <= tiny {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        (ssb / df_b) / (ssw / df_w)
    };
    Ok((f, dropped))
}

/// One-way ANOVA F statistic of `y` grouped by `groups` (values in
/// `0..levels`). Equal to the OLS F test of all group dummies.
pub fn one_way_f<T: Real>(groups: &[usize], y: &[T], levels: usize) -> Result<T> {
    if groups.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "{} groups for {} responses",
            groups.len(),
            y.len()
        )));
    }
    let mut count = vec![T::zero(); levels];
    let mut sum = vec![T::zero(); levels];
    let mut sumsq = vec![T::zero(); levels];
    for (&g, &v) in groups.iter().zip(y) {
        if g >= levels {
            return Err(Error::DomainMismatch(format!("group {g} outside 0..{levels}")));
        }
        count[g] = count[g] + T::one();
        sum[g] = sum[g] + v;
        sumsq[g] = sumsq[g] + v * v;
    }
    f_from_moments(&count, &sum, &sumsq).map(|r| r.0)
}

/// F statistic for the X levels over the augmented design.
pub fn stat_f(design: &AugmentedDesign, k: usize) -> Result<f64> {
    if design.rows() <= k {
        return Err(Error::invalid("design", format!("{} rows for {k} levels", design.rows())));
    }
    one_way_f(&design.x, &design.response, k)
}

/// F statistic on conjoint records whose X arms encode (left, right) pairs
/// of `k` levels.
#[derive(Clone, Debug)]
pub struct FStatistic {
    pub k: usize,
}

struct BoundF<'a> {
    k: usize,
    y: &'a [f64],
    count: Vec<f64>,
    sum: Vec<f64>,
    dropped: usize,
}

impl BoundStatistic for BoundF<'_> {
    fn eval(&mut self, x: &[usize]) -> Result<f64> {
        if x.len() != self.y.len() {
            return Err(Error::LengthMismatch(format!("{} x for {} y", x.len(), self.y.len())));
        }
        self.count.fill(0.0);
        self.sum.fill(0.0);
        for (&arm, &y) in x.iter().zip(self.y) {
            let (l, r) = (arm / self.k, arm % self.k);
            self.count[l] += 1.0;
            self.sum[l] += y;
            self.count[r] += 1.0;
            self.sum[r] += 1.0 - y;
        }
        // Binary responses: sum of squares equals the sum.
        let (f, dropped) = f_from_moments(&self.count, &self.sum, &self.sum)?;
        self.dropped += dropped;
        Ok(f)
    }

    fn diagnostics(&self) -> Vec<String> {
        if self.dropped > 0 {
            vec![format!("{} absent X level(s) dropped from the F test", self.dropped)]
        } else {
            Vec::new()
        }
    }
}

impl TestStatistic for FStatistic {
    fn name(&self) -> &str {
        "f_stat"
    }

    fn bind<'a>(&'a self, _z: &'a [usize], y: &'a [f64], _seed: u64) -> Result<Box<dyn BoundStatistic + 'a>> {
        check_binary(y)?;
        Ok(Box::new(BoundF {
            k: self.k,
            y,
            count: vec![0.0; self.k],
            sum: vec![0.0; self.k],
            dropped: 0,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::augment_no_profile_order;

    #[test]
    fn equal_means_give_zero() {
        let f = one_way_f(&[0, 0, 1, 1], &[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn hand_computed_anova() {
        // Groups (0,0,1,1) | (1,1,1,1): SSB = 0.5, SSW = 1, df = (1, 6).
        let f = one_way_f(&[0, 0, 0, 0, 1, 1, 1, 1], &[0.0f64, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert!((f - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_groups_is_squared_t() {
        let a = [0.3, 1.2, -0.4, 2.2, 0.9];
        let b = [1.5, 2.5, 0.1, 3.3];
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
        };
        let sp2 = (var(&a) + var(&b)) / (a.len() + b.len() - 2) as f64;
        let t = (mean(&a) - mean(&b)) / (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
        let groups: Vec<usize> = [vec![0; 5], vec![1; 4]].concat();
        let y: Vec<f64> = a.iter().chain(&b).copied().collect();
        let f = one_way_f(&groups, &y, 2).unwrap();
        assert!((f - t * t).abs() < 1e-10);
    }

    #[test]
    fn absent_level_dropped() {
        let f3 = one_way_f(&[0, 0, 2, 2], &[0.0, 1.0, 1.0, 1.0], 3).unwrap();
        let f2 = one_way_f(&[0, 0, 1, 1], &[0.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(f3, f2);
        assert!(one_way_f(&[1, 1], &[0.0, 1.0], 3).is_err());
    }

    #[test]
    fn bound_matches_design_route() {
        let x_arms = [1, 4, 6, 11, 15, 2, 8];
        let y = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let pairs: Vec<(usize, usize)> = x_arms.iter().map(|&a| (a / 4, a % 4)).collect();
        let d = augment_no_profile_order(&pairs, &[], &y).unwrap();
        let direct = stat_f(&d, 4).unwrap();
        let stat = FStatistic { k: 4 };
        let bound = stat.bind(&[], &y, 0).unwrap().eval(&x_arms).unwrap();
        assert!((direct - bound).abs() < 1e-12);
    }
}
