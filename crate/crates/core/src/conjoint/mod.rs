//! Forced-choice conjoint designs: profile pairs, the logistic response
//! model, the adaptive pair-sampling policy, power simulation and replay of
//! an existing dataset.
//!
//! Levels are 0-based. A factor with `k` levels has `k²` arms; arm
//! `left * k + right` is the (left, right) level pair.

mod policy;
mod replay;
mod response;
mod scenario;

use serde::{Deserialize, Serialize};

pub use policy::{conjoint_adaptive_policy, conjoint_uniform_policy, PairAdaptiveRule, PERTURBATION_SD};
pub use replay::{
    ingest_replay_dataset, parse_replay_dataset, replay_experiment, replay_experiment_traced, ReplayColumns, ReplayDataset,
    ReplayPools, ReplayRow, ReplayScenario, ReplaySchema,
};
pub use response::ConjointResponseModel;
pub use scenario::{simulate_conjoint_power, ConjointDesign, ConjointScenario, ConjointStatistic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProfilePair {
    pub x_left: usize,
    pub x_right: usize,
    pub z_left: usize,
    pub z_right: usize,
}

impl ProfilePair {
    pub fn new(x_left: usize, x_right: usize, z_left: usize, z_right: usize) -> Self {
        Self {
            x_left,
            x_right,
            z_left,
            z_right,
        }
    }

    pub fn from_arms(x_arm: usize, z_arm: usize, k: usize, l: usize) -> Self {
        Self::new(x_arm / k, x_arm % k, z_arm / l, z_arm % l)
    }

    pub fn x_arm(&self, k: usize) -> usize {
        self.x_left * k + self.x_right
    }

    pub fn z_arm(&self, l: usize) -> usize {
        self.z_left * l + self.z_right
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.x_right, self.x_left, self.z_right, self.z_left)
    }
}

/// Splits a pair arm into (left, right) levels.
#[inline]
pub fn split_arm(arm: usize, levels: usize) -> (usize, usize) {
    (arm / levels, arm % levels)
}
