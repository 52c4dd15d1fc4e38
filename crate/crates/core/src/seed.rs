//! Deterministic, splittable seeding.
//!
//! Every random stream in the crate is addressed by a [`SeedPlan`]. Child plans
//! are derived by hashing the parent with a role tag and an index, so a Monte
//! Carlo replication, a resample or an outer draw always gets the same stream
//! no matter which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Random stream handle. Single owner; never shared between workers.
pub type Stream = ChaCha8Rng;

/// Tags separating the purposes a child stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamRole {
    Replication = 0x5245_504c,
    Experiment = 0x4558_5045,
    Resample = 0x5253_4d50,
    Folds = 0x464f_4c44,
    Quantile = 0x5155_414e,
    Exceedance = 0x4558_4345,
    Outer = 0x4f55_5445,
    Cell = 0x4345_4c4c,
    Arm = 0x4152_4d53,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
    pub stream_index: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_index: 0,
        }
    }

    pub fn with_index(self, stream_index: u64) -> Self {
        Self {
            stream_index,
            ..self
        }
    }

    /// Derives the plan for the `index`-th stream of `role` below this plan.
    pub fn child(&self, role: StreamRole, index: u64) -> SeedPlan {
        let key = splitmix64(
            splitmix64(self.master_seed ^ splitmix64(self.stream_index)) ^ (role as u64),
        );
        SeedPlan {
            master_seed: key,
            stream_index: index,
        }
    }

    /// A single 64-bit value identifying this plan, stored in records.
    pub fn seed_value(&self) -> u64 {
        splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(1)))
    }
}

/// Returns the generator for `plan`; the output is a pure function of
/// `(master_seed, stream_index)`.
pub fn derive_stream(plan: SeedPlan) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.master_seed);
    rng.set_stream(plan.stream_index);
    rng
}
