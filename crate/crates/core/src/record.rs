use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family a sampling policy belongs to. CRT resampling is only offered for
/// records produced by `Iid` policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Iid,
    TwoStage,
    ConjointAdaptive,
    Product,
    Custom,
}

/// One sequentially collected experiment: aligned arms, covariate arms and
/// responses.
///
/// `x` and `z` hold arm indices (`0..x_arms`, `0..z_arms`); `z` is empty
/// when the design has no covariate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    pub y: Vec<f64>,
    pub x_arms: usize,
    pub z_arms: usize,
    pub policy_kind: PolicyKind,
    pub policy_id: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl ExperimentRecord {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn has_z(&self) -> bool {
        !self.z.is_empty()
    }

    pub fn id(&self) -> String {
        format!("{}#{:016x}", self.policy_id, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if self.y.len() != n {
            return Err(Error::LengthMismatch(format!(
                "x has {n} entries but y has {}",
                self.y.len()
            )));
        }
        if !self.z.is_empty() && self.z.len() != n {
            return Err(Error::LengthMismatch(format!(
                "x has {n} entries but z has {}",
                self.z.len()
            )));
        }
        if let Some((t, &v)) = self.x.iter().enumerate().find(|(_, &v)| v >= self.x_arms) {
            return Err(Error::DomainMismatch(format!(
                "x[{t}] = {v} outside 0..{}",
                self.x_arms
            )));
        }
        if let Some((t, &v)) = self.z.iter().enumerate().find(|(_, &v)| v >= self.z_arms) {
            return Err(Error::DomainMismatch(format!(
                "z[{t}] = {v} outside 0..{}",
                self.z_arms
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ExperimentRecord {
        ExperimentRecord {
            x: vec![0, 1, 2],
            z: vec![],
            y: vec![0.1, 0.2, 0.3],
            x_arms: 3,
            z_arms: 0,
            policy_kind: PolicyKind::Iid,
            policy_id: "iid".into(),
            seed: 1,
            diagnostics: vec![],
        }
    }

    #[test]
    fn valid_record() {
        record().validate().unwrap();
    }

    #[test]
    fn length_and_domain_errors() {
        let mut r = record();
        r.y.pop();
        assert!(matches!(r.validate(), Err(Error::LengthMismatch(_))));
        let mut r = record();
        r.x[1] = 3;
        assert!(matches!(r.validate(), Err(Error::DomainMismatch(_))));
        let mut r = record();
        r.z = vec![0, 0];
        r.z_arms = 1;
        assert!(matches!(r.validate(), Err(Error::LengthMismatch(_))));
    }
}
