use crate::conjoint::split_arm;
use crate::error::{Error, Result};

/// Stacked design that removes profile order: rows `0..n` are the left
/// profiles with response `y`, rows `n..2n` the right profiles with `1 - y`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDesign {
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    pub response: Vec<f64>,
}

impl AugmentedDesign {
    /// Number of original samples.
    pub fn n(&self) -> usize {
        self.response.len() / 2
    }

    pub fn rows(&self) -> usize {
        self.response.len()
    }

    pub fn has_z(&self) -> bool {
        !self.z.is_empty()
    }

    /// Builds the design from pair arms (`left * levels + right`).
    pub fn from_arms(x_arms: &[usize], z_arms: &[usize], y: &[f64], k: usize, l: usize) -> Result<Self> {
        let x: Vec<(usize, usize)> = x_arms.iter().map(|&a| split_arm(a, k)).collect();
        let z: Vec<(usize, usize)> = z_arms.iter().map(|&a| split_arm(a, l)).collect();
        augment_no_profile_order(&x, &z, y)
    }
}

pub(crate) fn check_binary(y: &[f64]) -> Result<()> {
    match y.iter().position(|&v| v != 0.0 && v != 1.0) {
        Some(row) => Err(Error::NonBinaryResponse { row, value: y[row] }),
        None => Ok(()),
    }
}

/// `x` and `z` hold (left, right) level pairs; `z` may be empty.
pub fn augment_no_profile_order(x: &[(usize, usize)], z: &[(usize, usize)], y: &[f64]) -> Result<AugmentedDesign> {
    let n = y.len();
    if x.len() != n || (!z.is_empty() && z.len() != n) {
        return Err(Error::LengthMismatch(format!(
            "x has {}, z has {}, y has {n} entries",
            x.len(),
            z.len()
        )));
    }
    check_binary(y)?;
    let mut xs = Vec::with_capacity(2 * n);
    xs.extend(x.iter().map(|p| p.0));
    xs.extend(x.iter().map(|p| p.1));
    let mut zs = Vec::with_capacity(if z.is_empty() { 0 } else { 2 * n });
    if !z.is_empty() {
        zs.extend(z.iter().map(|p| p.0));
        zs.extend(z.iter().map(|p| p.1));
    }
    let mut response = Vec::with_capacity(2 * n);
    response.extend_from_slice(y);
    response.extend(y.iter().map(|&v| 1.0 - v));
    Ok(AugmentedDesign { x: xs, z: zs, response })
}
