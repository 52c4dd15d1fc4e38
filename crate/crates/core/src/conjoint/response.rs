use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProfilePair;
use crate::policies::ResponseModel;
use crate::seed::Stream;

/// Logistic forced-choice model with effects on one level of X (index 0),
/// one level of Z (index 0) and the (X = 0, Z = 1) profile combination.
/// `Y = 1` means the left profile was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjointResponseModel {
    pub beta_x: f64,
    pub beta_z: f64,
    pub beta_xz: f64,
    pub k: usize,
    pub l: usize,
}

fn side(a: bool, b: bool) -> f64 {
    (a as i8 - b as i8) as f64
}

impl ConjointResponseModel {
    pub fn null(k: usize, l: usize) -> Self {
        Self {
            beta_x: 0.0,
            beta_z: 0.0,
            beta_xz: 0.0,
            k,
            l,
        }
    }

    pub fn linear_predictor(&self, p: &ProfilePair) -> f64 {
        let x_main = side(p.x_left == 0 && p.x_right != 0, p.x_left != 0 && p.x_right == 0);
        let z_main = side(p.z_left == 0 && p.z_right != 0, p.z_left != 0 && p.z_right == 0);
        let left_combo = p.x_left == 0 && p.z_left == 1;
        let right_combo = p.x_right == 0 && p.z_right == 1;
        let inter = side(left_combo && !right_combo, right_combo && !left_combo);
        self.beta_x * x_main + self.beta_z * z_main + self.beta_xz * inter
    }

    /// `Pr(Y = 1)` for a profile pair.
    pub fn prob(&self, p: &ProfilePair) -> f64 {
        // Computed so that prob(pair) + prob(swapped pair) == 1 exactly.
        let eta = self.linear_predictor(p);
        let s = 1.0 / (1.0 + (-eta.abs()).exp());
        if eta >= 0.0 {
            s
        } else {
            1.0 - s
        }
    }

    pub fn draw_pair(&self, p: &ProfilePair, rng: &mut Stream) -> f64 {
        let u: f64 = rng.random();
        if u < self.prob(p) {
            1.0
        } else {
            0.0
        }
    }
}

impl ResponseModel for ConjointResponseModel {
    fn draw(&self, x: usize, z: Option<usize>, rng: &mut Stream) -> f64 {
        let pair = ProfilePair::from_arms(x, z.unwrap_or(0), self.k, self.l);
        self.draw_pair(&pair, rng)
    }
}
