use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scenario::{ConjointDesign, ConjointStatistic};
use crate::engine::{art_p_value, Replicate, Scenario};
use crate::error::{Error, Result};
use crate::policies::{drive_experiment, AdaptivePolicy};
use crate::record::ExperimentRecord;
use crate::seed::{SeedPlan, StreamRole};

/// Column names in the raw file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayColumns {
    pub y: String,
    pub x_left: String,
    pub x_right: String,
    pub z_left: String,
    pub z_right: String,
}

impl Default for ReplayColumns {
    fn default() -> Self {
        Self {
            y: "y".into(),
            x_left: "x_left".into(),
            x_right: "x_right".into(),
            z_left: "z_left".into(),
            z_right: "z_right".into(),
        }
    }
}

/// Sidecar schema: column mapping and the raw labels of each factor's
/// levels, in level order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySchema {
    #[serde(default)]
    pub columns: ReplayColumns,
    pub x_levels: Vec<String>,
    pub z_levels: Vec<String>,
}

impl ReplaySchema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Dataset(format!("schema {}: {e}", path.display())))
    }

    pub fn k(&self) -> usize {
        self.x_levels.len()
    }

    pub fn l(&self) -> usize {
        self.z_levels.len()
    }

    fn validate(&self) -> Result<()> {
        for (name, levels) in [("x_levels", &self.x_levels), ("z_levels", &self.z_levels)] {
            if levels.len() < 2 {
                return Err(Error::Dataset(format!("schema {name} needs at least two levels")));
            }
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = levels.iter().find(|v| !seen.insert(v.as_str())) {
                return Err(Error::Dataset(format!("schema {name} repeats label {dup:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub x_arm: usize,
    pub z_arm: usize,
    pub y: f64,
}

/// Immutable population of observed choices, grouped by (X pair, Z pair).
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayDataset {
    pub k: usize,
    pub l: usize,
    pub rows: Vec<ReplayRow>,
    /// Row count of each pool, indexed by `x_arm * l² + z_arm`.
    pub pool_sizes: Vec<usize>,
    pub warnings: Vec<String>,
}

impl ReplayDataset {
    pub fn from_rows(k: usize, l: usize, rows: Vec<ReplayRow>) -> Result<Self> {
        let (xa, za) = (k * k, l * l);
        let mut pool_sizes = vec![0; xa * za];
        for (i, r) in rows.iter().enumerate() {
            if r.x_arm >= xa || r.z_arm >= za {
                return Err(Error::Dataset(format!("row {i}: arm outside the declared levels")));
            }
            if r.y != 0.0 && r.y != 1.0 {
                return Err(Error::Dataset(format!("row {i}: y = {} is not binary", r.y)));
            }
            pool_sizes[r.x_arm * za + r.z_arm] += 1;
        }
        let empty = pool_sizes.iter().filter(|&&c| c == 0).count();
        let mut warnings = Vec::new();
        if empty > 0 {
            warnings.push(format!(
                "{empty} of {} (x pair, z pair) pools are empty; replications that reach them fail",
                pool_sizes.len()
            ));
        }
        Ok(Self {
            k,
            l,
            rows,
            pool_sizes,
            warnings,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pool_size(&self, x_arm: usize, z_arm: usize) -> usize {
        self.pool_sizes[x_arm * self.l * self.l + z_arm]
    }

    /// Fresh consumption state: every row available once.
    pub fn pools(&self) -> ReplayPools {
        let za = self.l * self.l;
        let mut pools = vec![Vec::new(); self.pool_sizes.len()];
        for (i, r) in self.rows.iter().enumerate() {
            pools[r.x_arm * za + r.z_arm].push(i);
        }
        ReplayPools { pools, z_arms: za }
    }

    /// Content hash of the rows.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.k as u64).to_le_bytes());
        h.update((self.l as u64).to_le_bytes());
        for r in &self.rows {
            h.update((r.x_arm as u64).to_le_bytes());
            h.update((r.z_arm as u64).to_le_bytes());
            h.update([r.y as u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Pool sizes keyed by raw labels `"xL|xR / zL|zR"`.
    pub fn summary(&self, schema: &ReplaySchema) -> BTreeMap<String, usize> {
        let (k, l) = (self.k, self.l);
        let mut out = BTreeMap::new();
        for xa in 0..k * k {
            for za in 0..l * l {
                let key = format!(
                    "{}|{} / {}|{}",
                    schema.x_levels[xa / k],
                    schema.x_levels[xa % k],
                    schema.z_levels[za / l],
                    schema.z_levels[za % l]
                );
                out.insert(key, self.pool_size(xa, za));
            }
        }
        out
    }
}

/// Per-replication cursor over the unconsumed rows of each pool.
#[derive(Clone, Debug)]
pub struct ReplayPools {
    pools: Vec<Vec<usize>>,
    z_arms: usize,
}

impl ReplayPools {
    /// Removes and returns a uniformly chosen unconsumed row of the pool.
    pub fn take<R: Rng + ?Sized>(&mut self, x_arm: usize, z_arm: usize, rng: &mut R) -> Option<usize> {
        let pool = &mut self.pools[x_arm * self.z_arms + z_arm];
        if pool.is_empty() {
            return None;
        }
        let i = rng.random_range(0..pool.len());
        Some(pool.swap_remove(i))
    }

    pub fn remaining(&self, x_arm: usize, z_arm: usize) -> usize {
        self.pools[x_arm * self.z_arms + z_arm].len()
    }

    pub fn total_remaining(&self) -> usize {
        self.pools.iter().map(Vec::len).sum()
    }
}

fn parse_level(raw: &str, levels: &[String], column: &str, line: u64, errors: &mut Vec<String>) -> usize {
    match levels.iter().position(|v| v == raw.trim()) {
        Some(i) => i,
        None => {
            errors.push(format!("line {line}: {column} label {raw:?} is not in the schema"));
            0
        }
    }
}

/// Parses a headered CSV population. Every malformed row is reported with
/// its line number and the file is rejected.
pub fn parse_replay_dataset<R: Read>(reader: R, schema: &ReplaySchema) -> Result<ReplayDataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Dataset(e.to_string()))?.clone();
    let c = &schema.columns;
    let mut idx = [0usize; 5];
    let mut missing = Vec::new();
    for (slot, name) in idx.iter_mut().zip([&c.y, &c.x_left, &c.x_right, &c.z_left, &c.z_right]) {
        match headers.iter().position(|h| h.trim() == name) {
            Some(i) => *slot = i,
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Dataset(format!("missing column(s): {}", missing.join(", "))));
    }
    let (k, l) = (schema.k(), schema.l());
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                errors.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let y = match field(idx[0]).trim() {
            "0" => 0.0,
            "1" => 1.0,
            other => {
                errors.push(format!("line {line}: {} = {other:?} is not binary (0/1)", c.y));
                continue;
            }
        };
        let before = errors.len();
        let xl = parse_level(field(idx[1]), &schema.x_levels, &c.x_left, line, &mut errors);
        let xr = parse_level(field(idx[2]), &schema.x_levels, &c.x_right, line, &mut errors);
        let zl = parse_level(field(idx[3]), &schema.z_levels, &c.z_left, line, &mut errors);
        let zr = parse_level(field(idx[4]), &schema.z_levels, &c.z_right, line, &mut errors);
        if errors.len() == before {
            rows.push(ReplayRow {
                x_arm: xl * k + xr,
                z_arm: zl * l + zr,
                y,
            });
        }
    }
    if !errors.is_empty() {
        return Err(Error::Dataset(format!("{} malformed row(s): {}", errors.len(), errors.join("; "))));
    }
    if rows.is_empty() {
        return Err(Error::Dataset("no data rows".into()));
    }
    ReplayDataset::from_rows(k, l, rows)
}

pub fn ingest_replay_dataset(path: &Path, schema: &ReplaySchema) -> Result<ReplayDataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_replay_dataset(f, schema)
}

/// Replays `policy` against the population: at each step the policy picks
/// (X, Z) and Y comes from a uniformly drawn unconsumed row of the matching
/// pool. Returns the record and the served row indices.
pub fn replay_experiment_traced(
    dataset: &ReplayDataset,
    policy: &AdaptivePolicy,
    n: usize,
    plan: SeedPlan,
) -> Result<(ExperimentRecord, Vec<usize>)> {
    let (xa, za) = (dataset.k * dataset.k, dataset.l * dataset.l);
    if policy.x_arms() != xa || policy.z_arms() != za || policy.z_rule().is_none() {
        return Err(Error::PolicyMismatch(format!(
            "policy domain ({} x arms, {} z arms) does not match the dataset ({xa}, {za})",
            policy.x_arms(),
            policy.z_arms()
        )));
    }
    if n > dataset.len() {
        return Err(Error::invalid("n", format!("{n} exceeds the dataset size {}", dataset.len())));
    }
    let mut pools = dataset.pools();
    let mut served = Vec::with_capacity(n);
    let record = drive_experiment(policy, n, plan, |t, x, z, rng| {
        let z = z.expect("policy has a Z rule");
        let row = pools.take(x, z, rng).ok_or(Error::EmptyPool { t, x_arm: x, z_arm: z })?;
        served.push(row);
        Ok(dataset.rows[row].y)
    })?;
    Ok((record, served))
}

pub fn replay_experiment(dataset: &ReplayDataset, policy: &AdaptivePolicy, n: usize, plan: SeedPlan) -> Result<ExperimentRecord> {
    replay_experiment_traced(dataset, policy, n, plan).map(|r| r.0)
}

/// Quasi-experiment: replay on a fixed population, then test.
#[derive(Clone, Debug)]
pub struct ReplayScenario {
    pub dataset: Arc<ReplayDataset>,
    pub n: usize,
    pub design: ConjointDesign,
    pub statistic: ConjointStatistic,
    pub b: usize,
    dataset_hash: String,
}

impl ReplayScenario {
    pub fn new(
        dataset: Arc<ReplayDataset>,
        n: usize,
        design: ConjointDesign,
        statistic: ConjointStatistic,
        b: usize,
    ) -> Result<Self> {
        if n > dataset.len() {
            return Err(Error::invalid("n", format!("{n} exceeds the dataset size {}", dataset.len())));
        }
        if b < 1 {
            return Err(Error::invalid("b", "need at least one resample"));
        }
        design.policy(dataset.k, dataset.l)?;
        let dataset_hash = dataset.fingerprint();
        Ok(Self {
            dataset,
            n,
            design,
            statistic,
            b,
            dataset_hash,
        })
    }
}

impl Scenario for ReplayScenario {
    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "scenario": "conjoint_replay",
            "dataset": self.dataset_hash,
            "n": self.n,
            "design": self.design,
            "statistic": self.statistic,
            "b": self.b,
        })
    }

    fn replicate(&self, plan: SeedPlan) -> Result<Replicate> {
        let (k, l) = (self.dataset.k, self.dataset.l);
        let policy = self.design.policy(k, l)?;
        let record = replay_experiment(&self.dataset, &policy, self.n, plan.child(StreamRole::Experiment, 0))?;
        let stat = self.statistic.build(k, l);
        let p = art_p_value(&record, &policy, stat.as_ref(), self.b, plan)?;
        Ok(Replicate {
            p,
            seed: record.seed,
            diagnostics: record.diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> ReplaySchema {
        ReplaySchema {
            columns: ReplayColumns::default(),
            x_levels: vec!["Male".into(), "Female".into()],
            z_levels: vec!["Dem".into(), "Rep".into()],
        }
    }

    #[test]
    fn parses_and_groups() {
        let text = "y,x_left,x_right,z_left,z_right\n1,Male,Female,Dem,Dem\n0,Female,Female,Rep,Dem\n1,Male,Female,Dem,Dem\n";
        let d = parse_replay_dataset(text.as_bytes(), &schema()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.pool_size(1, 0), 2);
        assert_eq!(d.pool_size(3, 2), 1);
        assert_eq!(d.summary(&schema())["Male|Female / Dem|Dem"], 2);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn reports_every_bad_line() {
        let text = "y,x_left,x_right,z_left,z_right\n2,Male,Female,Dem,Dem\n1,Male,Female,Dem,Dem\n0,Other,Female,Dem,Dem\n";
        let err = parse_replay_dataset(text.as_bytes(), &schema()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("line 4"), "{err}");
        assert!(!err.contains("line 3"), "{err}");
    }

    #[test]
    fn missing_column() {
        let err = parse_replay_dataset("y,x_left\n1,Male\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("x_right"));
    }

    #[test]
    fn take_drains_pool() {
        let d = ReplayDataset::from_rows(
            2,
            2,
            vec![
                ReplayRow { x_arm: 0, z_arm: 0, y: 1.0 },
                ReplayRow { x_arm: 0, z_arm: 0, y: 0.0 },
            ],
        )
        .unwrap();
        let mut pools = d.pools();
        let mut rng = crate::derive_stream(SeedPlan::new(0));
        let mut got = vec![pools.take(0, 0, &mut rng).unwrap(), pools.take(0, 0, &mut rng).unwrap()];
        got.sort();
        assert_eq!(got, vec![0, 1]);
        assert!(pools.take(0, 0, &mut rng).is_none());
        assert_eq!(d.pool_size(0, 0), 2);
    }
}
