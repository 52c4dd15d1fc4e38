use serde::{Deserialize, Serialize};

use super::{iid_policy, product_policy, two_stage_policy, AdaptivePolicy, Reweight, TwoStageConfig};
use crate::conjoint::conjoint_adaptive_policy;
use crate::error::{Error, Result};
use crate::weights::normalize;
use crate::Weights;

/// Serializable description of a policy, as written in run configurations.
///
/// `arms` may be omitted when the surrounding scenario fixes the X domain;
/// `q` defaults to uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Iid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<usize>,
    },
    TwoStage {
        epsilon: f64,
        t: f64,
        #[serde(default)]
        reweight: Reweight,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<usize>,
    },
    ConjointAdaptive {
        epsilon: f64,
        k: usize,
        l: usize,
    },
    Product {
        components: Vec<PolicySpec>,
    },
}

fn first_stage(q: &Option<Vec<f64>>, arms: Option<usize>, default_arms: usize) -> Result<Weights> {
    match q {
        Some(raw) => {
            if let Some(a) = arms {
                if a != raw.len() {
                    return Err(Error::invalid("q", format!("has {} entries but arms = {a}", raw.len())));
                }
            }
            normalize(raw).map_err(|e| Error::invalid("q", e.to_string()))
        }
        None => {
            let a = arms.unwrap_or(default_arms);
            if a < 1 {
                return Err(Error::invalid("arms", "must be at least 1"));
            }
            Ok(Weights::uniform(a))
        }
    }
}

impl PolicySpec {
    /// Builds the policy for an experiment of `n` steps over `default_arms`
    /// X values (used when the spec leaves `arms` and `q` out).
    pub fn build(&self, default_arms: usize, n: usize) -> Result<AdaptivePolicy> {
        match self {
            PolicySpec::Iid { q, arms } => Ok(iid_policy(first_stage(q, *arms, default_arms)?)),
            PolicySpec::TwoStage {
                epsilon,
                t,
                reweight,
                q,
                arms,
            } => two_stage_policy(TwoStageConfig {
                epsilon: *epsilon,
                t_scale: *t,
                reweight: *reweight,
                q: first_stage(q, *arms, default_arms)?,
                n,
            }),
            PolicySpec::ConjointAdaptive { epsilon, k, l } => conjoint_adaptive_policy(*epsilon, *k, *l),
            PolicySpec::Product { components } => {
                let built = components
                    .iter()
                    .map(|c| c.build(default_arms, n))
                    .collect::<Result<Vec<_>>>()?;
                product_policy(&built)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PolicySpec::Iid { .. } => "iid",
            PolicySpec::TwoStage { .. } => "two_stage",
            PolicySpec::ConjointAdaptive { .. } => "conjoint_adaptive",
            PolicySpec::Product { .. } => "product",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::PolicyKind;

    #[test]
    fn parse_and_build_two_stage() {
        let spec: PolicySpec =
            serde_json::from_str(r#"{"kind":"two_stage","epsilon":0.5,"t":0.069}"#).unwrap();
        let p = spec.build(15, 500).unwrap();
        assert_eq!(p.x_arms(), 15);
        assert_eq!(p.kind(), PolicyKind::TwoStage);
    }

    #[test]
    fn unknown_key_rejected() {
        let r: std::result::Result<PolicySpec, _> =
            serde_json::from_str(r#"{"kind":"iid","arms":3,"bogus":1}"#);
        assert!(r.is_err());
    }

    #[test]
    fn product_of_iid() {
        let spec: PolicySpec = serde_json::from_str(
            r#"{"kind":"product","components":[{"kind":"iid","arms":4},{"kind":"iid","q":[1,3]}]}"#,
        )
        .unwrap();
        let p = spec.build(1, 10).unwrap();
        assert_eq!(p.x_arms(), 8);
    }

    #[test]
    fn q_arms_conflict() {
        let spec = PolicySpec::Iid {
            q: Some(vec![1.0, 1.0]),
            arms: Some(3),
        };
        assert!(spec.build(3, 10).is_err());
    }
}
