use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::weights::WeightVector;

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T = f64> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi rotations).
    pub fn min_eigenvalue(&self) -> T {
        let n = self.dim;
        if n == 0 {
            return T::zero();
        }
        let mut a = self.clone();
        let two = T::lit(2.0);
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off = off + a.get(i, j) * a.get(i, j);
                    }
                }
            }
            let scale: T = (0..n).map(|i| a.get(i, i) * a.get(i, i)).sum::<T>() + off;
            if off <= T::epsilon() * T::epsilon() * scale.max(T::min_positive_value()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (two * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        (0..n).map(|i| a.get(i, i)).fold(T::infinity(), T::min)
    }
}

/// Covariance matrices of the limiting arm-mean fluctuations for sampling
/// weights `q` (first `p - 1` arms):
/// `sigma0 = diag(q) - q qᵀ`, `d = diag(q)`, `sigma = d⁻¹ sigma0 d⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSpec<T = f64> {
    pub sigma0: SquareMatrix<T>,
    pub d: SquareMatrix<T>,
    pub sigma: SquareMatrix<T>,
}

/// Eigenvalue floor for the PSD check.
pub const PSD_TOLERANCE: f64 = -1e-10;

pub fn gaussian_spec<T: Real>(q: &WeightVector<T>) -> Result<GaussianSpec<T>> {
    let p = q.len();
    if p < 2 {
        return Err(Error::invalid("q", "need at least two arms"));
    }
    let m = p - 1;
    let qs = q.probs();
    let mut sigma0 = SquareMatrix::zeros(m);
    let mut d = SquareMatrix::zeros(m);
    let mut sigma = SquareMatrix::zeros(m);
    for i in 0..m {
        d.set(i, i, qs[i]);
        for j in 0..m {
            let v = if i == j {
                qs[i] * (T::one() - qs[i])
            } else {
                -(qs[i] * qs[j])
            };
            sigma0.set(i, j, v);
            let s = if i == j {
                T::one() / qs[i] - T::one()
            } else {
                -T::one()
            };
            sigma.set(i, j, s);
        }
    }
    let min_eig = sigma.min_eigenvalue();
    if min_eig < T::lit(PSD_TOLERANCE) {
        return Err(Error::NotPositiveSemidefinite(min_eig.as_f64()));
    }
    Ok(GaussianSpec { sigma0, d, sigma })
}

/// Draws `(H_1, ..., H_p)` where the first `p - 1` coordinates follow
/// `N(0, sigma(q))` and `H_p = -(1/q_p) Σ_{j<p} q_j H_j`, using `p`
/// standard normals.
///
/// With `U_j = sqrt(q_j) ξ_j` and `V = U - q Σ_i U_i`, `V` has the
/// multinomial covariance `diag(q) - q qᵀ`, and `H_j = V_j / q_j`.
#[derive(Clone, Debug)]
pub struct ArmFluctuation<T = f64> {
    q: Vec<T>,
    sqrt_q: Vec<T>,
}

impl<T: Real> ArmFluctuation<T> {
    pub fn new(q: &[T]) -> Self {
        Self {
            q: q.to_vec(),
            sqrt_q: q.iter().map(|v| v.sqrt()).collect(),
        }
    }

    /// Reuses the allocation for new weights.
    pub fn reset(&mut self, q: &[T]) {
        self.q.clear();
        self.q.extend_from_slice(q);
        self.sqrt_q.clear();
        self.sqrt_q.extend(q.iter().map(|v| v.sqrt()));
    }

    pub fn arms(&self) -> usize {
        self.q.len()
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        let mut total = T::zero();
        for (o, &s) in out.iter_mut().zip(&self.sqrt_q) {
            let u = s * T::standard_normal(rng);
            *o = u;
            total = total + u;
        }
        for (o, &q) in out.iter_mut().zip(&self.q) {
            *o = (*o - q * total) / q;
        }
    }
}

/// `max_j H_j` over the `p` coordinates including the completion.
#[inline]
pub fn max_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::neg_infinity(), T::max)
}
