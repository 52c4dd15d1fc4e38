//! Parameters and runners of every subcommand.

use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use artkit::asymptotics::{
    oracle_q_star, power_adaptive, power_heatmap, power_iid, sweep_epsilon_t, AdaptiveSpec, HeatmapMode, HeatmapParams,
    LastArmShift, NormalMeansScenario, DEFAULT_N_INNER, DEFAULT_N_OUTER,
};
use artkit::conjoint::{
    ingest_replay_dataset, ConjointDesign, ConjointResponseModel, ConjointScenario, ConjointStatistic, ReplayScenario,
    ReplaySchema,
};
use artkit::engine::{art_p_value, fingerprint, run_replications, PowerEstimate, ReplicationOutcome, Scenario};
use artkit::policies::{PolicySpec, Reweight};
use artkit::report::{
    artifact_path, format_real, grid_table, power_table, replication_table, sweep_table, write_json, RunHeader, Table,
    TOOL_VERSION,
};
use artkit::stats::{FStatistic, LassoStatistic, MaxArmMean, StatisticKind, TestStatistic};
use artkit::{normalize, ExperimentRecord, SeedPlan, Weights};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{check_finite, check_min, check_non_negative, check_unit_open, Params, RunSettings};
use crate::error::{CliError, Issue};

/// Where a command writes, and the provenance stamped on every artifact.
pub struct Context {
    pub command: &'static str,
    pub settings: RunSettings,
    pub config_hash: String,
    pub artifacts: Vec<PathBuf>,
}

impl Context {
    pub fn new(command: &'static str, settings: RunSettings, config_hash: String) -> Self {
        Self {
            command,
            settings,
            config_hash,
            artifacts: Vec::new(),
        }
    }

    pub fn plan(&self) -> SeedPlan {
        SeedPlan::new(self.settings.master_seed)
    }

    fn header(&self) -> RunHeader {
        RunHeader::new(self.config_hash.clone(), self.settings.master_seed)
    }

    fn path(&self, suffix: Option<&str>, ext: &str) -> PathBuf {
        let stem = match suffix {
            Some(s) => format!("{}-{s}", self.command),
            None => self.command.to_string(),
        };
        artifact_path(&self.settings.output_dir, &stem, &self.config_hash, ext)
    }

    pub fn write_table(&mut self, suffix: Option<&str>, table: &Table) -> Result<(), CliError> {
        let path = self.path(suffix, "csv");
        table.write(&path, &self.header())?;
        self.artifacts.push(path);
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, suffix: &str, value: &S) -> Result<(), CliError> {
        let path = self.path(Some(suffix), "json");
        write_json(&path, value)?;
        self.artifacts.push(path);
        Ok(())
    }

    /// Writes the resolved configuration next to the artifacts.
    pub fn write_config_echo(&mut self, echo: &Value) -> Result<(), CliError> {
        let doc = json!({
            "version": TOOL_VERSION,
            "config_hash": self.config_hash,
            "config": echo,
        });
        self.write_json("config", &doc)
    }
}

/// Hash of everything that determines the numbers: command, seed and the
/// resolved parameters.
pub fn config_hash(command: &str, master_seed: u64, params: &Value, extra: Option<String>) -> String {
    let mut doc = json!({ "command": command, "master_seed": master_seed, "params": params });
    if let Some(x) = extra {
        doc["inputs"] = Value::String(x);
    }
    fingerprint(&doc)
}

fn check_alpha(issues: &mut Vec<Issue>, alpha: f64) {
    check_unit_open(issues, "alpha", alpha);
}

fn check_file(issues: &mut Vec<Issue>, field: &str, path: &Option<PathBuf>, needed_by: &str) {
    match path {
        None => issues.push(Issue::new(format!("params.{field}"), format!("{needed_by} needs a {field} path"))),
        Some(p) if !p.is_file() => {
            issues.push(Issue::new(format!("params.{field}"), format!("{} does not exist", p.display())))
        }
        Some(_) => {}
    }
}

fn estimate_json(e: &PowerEstimate) -> Value {
    json!({ "power": e.power, "se": e.se, "n_mc": e.n_mc, "failures": e.failures, "alpha": e.alpha })
}

/// Power summary of a batch of replications; fails only if every
/// replication failed.
fn finish_replications(
    ctx: &mut Context,
    label: &str,
    outcomes: &[ReplicationOutcome],
    alpha: f64,
    scenario_fp: String,
) -> Result<Value, CliError> {
    ctx.write_table(Some("replications"), &replication_table(outcomes))?;
    let failed: Vec<usize> = outcomes.iter().filter(|o| o.result.is_err()).map(|o| o.index).collect();
    if failed.len() == outcomes.len() {
        let first = outcomes
            .iter()
            .find_map(|o| o.result.as_ref().err())
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(CliError::Runtime {
            message: format!("every replication failed; first error: {first}"),
            failed_replications: failed,
        });
    }
    let est = PowerEstimate::from_outcomes(outcomes, alpha, scenario_fp);
    ctx.write_table(None, &power_table(&[(label.to_string(), est.clone())]))?;
    let mut summary = estimate_json(&est);
    summary["failed_replications"] = json!(failed);
    Ok(summary)
}

// ---------------------------------------------------------------- pvalue

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PValueParams {
    /// Experiment record (JSON) to test.
    pub record: Option<PathBuf>,
    pub policy: PolicySpec,
    pub statistic: StatisticKind,
    pub b: usize,
}

impl Default for PValueParams {
    fn default() -> Self {
        Self {
            record: None,
            policy: PolicySpec::Iid { q: None, arms: None },
            statistic: StatisticKind::MaxArmMean,
            b: 999,
        }
    }
}

impl Params for PValueParams {
    const REPS_KEY: &'static str = "b";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_file(issues, "record", &self.record, "pvalue");
        check_min(issues, "b", self.b, 1);
    }
}

fn levels(arms: usize, factor: &str) -> Result<usize, CliError> {
    let k = (arms as f64).sqrt().round() as usize;
    if k * k != arms || k < 2 {
        return Err(CliError::config(
            "params.statistic",
            format!("{factor} has {arms} arms, which is not a square number of profile pairs"),
        ));
    }
    Ok(k)
}

pub fn run_pvalue(p: &PValueParams, ctx: &mut Context) -> Result<Value, CliError> {
    let path = p.record.as_ref().expect("checked");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config("params.record", e.to_string()))?;
    let record: ExperimentRecord =
        serde_json::from_str(&text).map_err(|e| CliError::config("params.record", e.to_string()))?;
    record.validate()?;
    let policy = p.policy.build(record.x_arms, record.n())?;
    let stat: Box<dyn TestStatistic> = match p.statistic {
        StatisticKind::MaxArmMean => Box::new(MaxArmMean { arms: record.x_arms }),
        StatisticKind::FStat => Box::new(FStatistic {
            k: levels(record.x_arms, "X")?,
        }),
        StatisticKind::LassoLogistic => Box::new(LassoStatistic::new(
            levels(record.x_arms, "X")?,
            levels(record.z_arms, "Z")?,
        )),
    };
    let pv = art_p_value(&record, &policy, stat.as_ref(), p.b, ctx.plan())?;
    let mut t = Table::new(&["record", "statistic", "p_value", "stat_obs", "b", "exceedances", "ties"]);
    t.push(vec![
        record.id(),
        p.statistic.as_str().into(),
        format_real(pv.value),
        format_real(pv.stat_obs),
        pv.b.to_string(),
        pv.exceedances.to_string(),
        pv.tie_count.to_string(),
    ]);
    ctx.write_table(None, &t)?;
    Ok(json!({ "p_value": pv.value, "stat_obs": pv.stat_obs, "exceedances": pv.exceedances, "ties": pv.tie_count }))
}

// ---------------------------------------------------------------- nmm-sim

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmmSimParams {
    pub n: usize,
    pub p: usize,
    pub h0: f64,
    pub policy: PolicySpec,
    pub statistic: StatisticKind,
    pub b: usize,
    pub reps: usize,
    pub alpha: f64,
}

impl Default for NmmSimParams {
    fn default() -> Self {
        Self {
            n: 1000,
            p: 15,
            h0: 0.0,
            policy: PolicySpec::Iid { q: None, arms: None },
            statistic: StatisticKind::MaxArmMean,
            b: 199,
            reps: 1000,
            alpha: 0.05,
        }
    }
}

impl Params for NmmSimParams {
    const REPS_KEY: &'static str = "reps";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_min(issues, "p", self.p, 2);
        check_min(issues, "n", self.n, self.p.max(2));
        check_non_negative(issues, "h0", self.h0);
        check_min(issues, "b", self.b, 1);
        check_min(issues, "reps", self.reps, 1);
        check_alpha(issues, self.alpha);
        if self.statistic != StatisticKind::MaxArmMean {
            issues.push(Issue::new(
                "params.statistic",
                format!("{} is not defined for the normal-means model", self.statistic.as_str()),
            ));
        }
        if let PolicySpec::TwoStage { epsilon, .. } = self.policy {
            check_unit_open(issues, "policy.epsilon", epsilon);
        }
    }
}

pub fn run_nmm_sim(p: &NmmSimParams, ctx: &mut Context) -> Result<Value, CliError> {
    let scenario = NormalMeansScenario::new(p.n, p.p, p.h0, p.policy.clone(), p.b)?;
    let outcomes = run_replications(&scenario, p.reps, ctx.plan(), ctx.settings.workers);
    finish_replications(ctx, p.policy.kind_name(), &outcomes, p.alpha, scenario.fingerprint())
}

// ---------------------------------------------------------- nmm-power-iid

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerIidParams {
    pub p: usize,
    /// Sampling weights; uniform over `p` arms when absent.
    pub q: Option<Vec<f64>>,
    pub h0: f64,
    pub alpha: f64,
    pub n_mc: usize,
}

impl Default for PowerIidParams {
    fn default() -> Self {
        Self {
            p: 15,
            q: None,
            h0: 10.0,
            alpha: 0.05,
            n_mc: DEFAULT_N_OUTER,
        }
    }
}

impl Params for PowerIidParams {
    const REPS_KEY: &'static str = "n_mc";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_min(issues, "p", self.p, 2);
        check_non_negative(issues, "h0", self.h0);
        check_alpha(issues, self.alpha);
        check_min(issues, "n_mc", self.n_mc, 1);
        if let Some(q) = &self.q {
            if q.len() != self.p {
                issues.push(Issue::new("params.q", format!("has {} entries, p = {}", q.len(), self.p)));
            }
            if normalize(q).is_err() {
                issues.push(Issue::new("params.q", "must be finite, non-negative and not all zero"));
            }
        }
    }
}

fn weights_or_uniform(q: &Option<Vec<f64>>, p: usize) -> Result<Weights, CliError> {
    match q {
        Some(raw) => Ok(normalize(raw)?),
        None => Ok(Weights::uniform(p)),
    }
}

pub fn run_power_iid(p: &PowerIidParams, ctx: &mut Context) -> Result<Value, CliError> {
    let q = weights_or_uniform(&p.q, p.p)?;
    let est = power_iid(&q, p.h0, p.alpha, p.n_mc, ctx.plan())?;
    ctx.write_table(None, &power_table(&[("iid".into(), est.clone())]))?;
    Ok(estimate_json(&est))
}

// ----------------------------------------------------- nmm-power-adaptive

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerAdaptiveParams {
    pub p: usize,
    pub q: Option<Vec<f64>>,
    pub h0: f64,
    pub epsilon: f64,
    /// Reweighting scale; when absent it is `t0 / h0`.
    pub t: Option<f64>,
    pub t0: f64,
    pub reweight: Reweight,
    pub alpha: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub last_arm: LastArmShift,
}

impl Default for PowerAdaptiveParams {
    fn default() -> Self {
        Self {
            p: 15,
            q: None,
            h0: 10.0,
            epsilon: 0.5,
            t: None,
            t0: LN_2,
            reweight: Reweight::Exp,
            alpha: 0.05,
            n_outer: DEFAULT_N_OUTER,
            n_inner: DEFAULT_N_INNER,
            last_arm: LastArmShift::Zero,
        }
    }
}

impl PowerAdaptiveParams {
    fn t(&self) -> f64 {
        self.t.unwrap_or(if self.h0 > 0.0 { self.t0 / self.h0 } else { 0.0 })
    }
}

impl Params for PowerAdaptiveParams {
    const REPS_KEY: &'static str = "n_outer";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_min(issues, "p", self.p, 2);
        check_non_negative(issues, "h0", self.h0);
        check_unit_open(issues, "epsilon", self.epsilon);
        check_finite(issues, "t0", self.t0);
        if let Some(t) = self.t {
            check_finite(issues, "t", t);
        }
        check_alpha(issues, self.alpha);
        check_min(issues, "n_outer", self.n_outer, 1);
        check_min(issues, "n_inner", self.n_inner, 200);
        if let Some(q) = &self.q {
            if q.len() != self.p {
                issues.push(Issue::new("params.q", format!("has {} entries, p = {}", q.len(), self.p)));
            }
        }
    }
}

pub fn run_power_adaptive(p: &PowerAdaptiveParams, ctx: &mut Context) -> Result<Value, CliError> {
    let spec = AdaptiveSpec {
        epsilon: p.epsilon,
        t: p.t(),
        reweight: p.reweight,
        q: weights_or_uniform(&p.q, p.p)?,
        h0: p.h0,
        alpha: p.alpha,
        n_outer: p.n_outer,
        n_inner: p.n_inner,
        last_arm: p.last_arm,
    };
    let est = power_adaptive(&spec, ctx.plan())?;
    ctx.write_table(None, &power_table(&[("two_stage".into(), est.clone())]))?;
    let mut out = estimate_json(&est);
    out["t"] = json!(spec.t);
    Ok(out)
}

// ------------------------------------------------------------- nmm-oracle

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub p: usize,
    pub h0: f64,
    pub alpha: f64,
    pub resolution: usize,
    pub n_mc: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            p: 15,
            h0: 10.0,
            alpha: 0.05,
            resolution: 41,
            n_mc: DEFAULT_N_OUTER,
        }
    }
}

impl Params for OracleParams {
    const REPS_KEY: &'static str = "n_mc";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_min(issues, "p", self.p, 2);
        check_non_negative(issues, "h0", self.h0);
        check_alpha(issues, self.alpha);
        check_min(issues, "resolution", self.resolution, 11);
        check_min(issues, "n_mc", self.n_mc, 1);
    }
}

pub fn run_oracle(p: &OracleParams, ctx: &mut Context) -> Result<Value, CliError> {
    let res = oracle_q_star(p.p, p.h0, p.alpha, p.resolution, p.n_mc, ctx.plan())?;
    let mut t = Table::new(&["q1", "power"]);
    for &(q1, pw) in &res.curve {
        t.push(vec![format_real(q1), format_real(pw)]);
    }
    ctx.write_table(Some("curve"), &t)?;
    ctx.write_json("result", &res)?;
    Ok(json!({ "q1_star": res.q1_star, "power_star": res.power_star, "se_star": res.se_star, "flat": res.flat }))
}

// ------------------------------------------------------------ nmm-heatmap

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapCliParams {
    pub mode: HeatmapMode,
    pub h0_grid: Vec<f64>,
    pub p_grid: Vec<usize>,
    pub epsilon: f64,
    pub t0: f64,
    pub reweight: Reweight,
    pub alpha: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub n_mc: usize,
    pub oracle_resolution: usize,
    pub last_arm: LastArmShift,
}

impl Default for HeatmapCliParams {
    fn default() -> Self {
        let d = HeatmapParams::default();
        Self {
            mode: HeatmapMode::AdaptiveVsUniform,
            h0_grid: (1..=7).map(|i| 2.0 * i as f64).collect(),
            p_grid: vec![15],
            epsilon: d.epsilon,
            t0: d.t0,
            reweight: d.reweight,
            alpha: d.alpha,
            n_outer: d.n_outer,
            n_inner: d.n_inner,
            n_mc: d.n_mc,
            oracle_resolution: d.oracle_resolution,
            last_arm: d.last_arm,
        }
    }
}

impl Params for HeatmapCliParams {
    const REPS_KEY: &'static str = "n_outer";

    fn check(&self, issues: &mut Vec<Issue>) {
        if self.h0_grid.is_empty() {
            issues.push(Issue::new("params.h0_grid", "must be non-empty"));
        }
        if self.h0_grid.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            issues.push(Issue::new("params.h0_grid", "entries must be finite and non-negative"));
        }
        if self.p_grid.is_empty() || self.p_grid.iter().any(|&p| p < 2) {
            issues.push(Issue::new("params.p_grid", "must be non-empty with every p >= 2"));
        }
        check_unit_open(issues, "epsilon", self.epsilon);
        check_finite(issues, "t0", self.t0);
        check_alpha(issues, self.alpha);
        check_min(issues, "n_outer", self.n_outer, 1);
        check_min(issues, "n_inner", self.n_inner, 200);
        check_min(issues, "n_mc", self.n_mc, 1);
        check_min(issues, "oracle_resolution", self.oracle_resolution, 11);
    }
}

pub fn run_heatmap(p: &HeatmapCliParams, ctx: &mut Context) -> Result<Value, CliError> {
    let params = HeatmapParams {
        epsilon: p.epsilon,
        t0: p.t0,
        reweight: p.reweight,
        alpha: p.alpha,
        n_outer: p.n_outer,
        n_inner: p.n_inner,
        n_mc: p.n_mc,
        oracle_resolution: p.oracle_resolution,
        last_arm: p.last_arm,
    };
    let grid = power_heatmap(&p.h0_grid, &p.p_grid, p.mode, &params, ctx.plan())?;
    ctx.write_table(None, &grid_table(&grid))?;
    let failed: Vec<Value> = grid
        .cells
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| json!({ "h0": c.h0, "p": c.p, "error": e })))
        .collect();
    if failed.len() == grid.cells.len() {
        return Err(CliError::runtime(format!("every heatmap cell failed: {}", failed[0])));
    }
    Ok(json!({ "mode": p.mode.as_str(), "cells": grid.cells.len(), "failed_cells": failed }))
}

// -------------------------------------------------------------- nmm-sweep

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub p: usize,
    pub h0_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub t0_list: Vec<f64>,
    pub alpha: f64,
    pub n_outer: usize,
    pub n_inner: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            p: 15,
            h0_list: vec![6.0, 10.0, 14.0],
            eps_list: vec![0.25, 0.5, 0.75],
            t0_list: vec![0.5 * LN_2, LN_2, 2.0 * LN_2],
            alpha: 0.05,
            n_outer: 5000,
            n_inner: DEFAULT_N_INNER,
        }
    }
}

impl Params for SweepParams {
    const REPS_KEY: &'static str = "n_outer";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_min(issues, "p", self.p, 2);
        for (name, list) in [("h0_list", &self.h0_list), ("eps_list", &self.eps_list), ("t0_list", &self.t0_list)] {
            if list.is_empty() {
                issues.push(Issue::new(format!("params.{name}"), "must be non-empty"));
            }
        }
        for &e in &self.eps_list {
            check_unit_open(issues, "eps_list", e);
        }
        for &h in &self.h0_list {
            check_non_negative(issues, "h0_list", h);
        }
        check_alpha(issues, self.alpha);
        check_min(issues, "n_outer", self.n_outer, 1);
        check_min(issues, "n_inner", self.n_inner, 200);
    }
}

pub fn run_sweep(p: &SweepParams, ctx: &mut Context) -> Result<Value, CliError> {
    let rows = sweep_epsilon_t(p.p, &p.h0_list, &p.eps_list, &p.t0_list, p.alpha, p.n_outer, p.n_inner, ctx.plan())?;
    ctx.write_table(None, &sweep_table(&rows))?;
    let best = rows
        .iter()
        .max_by(|a, b| a.power.total_cmp(&b.power))
        .map(|r| json!({ "epsilon": r.epsilon, "t0": r.t0, "h0": r.h0, "power": r.power }));
    Ok(json!({ "rows": rows.len(), "best": best }))
}

// ------------------------------------------------------ conjoint commands

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignName {
    Adaptive,
    Iid,
}

fn conjoint_design(name: DesignName, epsilon: f64) -> ConjointDesign {
    match name {
        DesignName::Adaptive => ConjointDesign::Adaptive { epsilon },
        DesignName::Iid => ConjointDesign::Iid,
    }
}

fn conjoint_statistic(kind: StatisticKind) -> Result<ConjointStatistic, CliError> {
    match kind {
        StatisticKind::LassoLogistic => Ok(ConjointStatistic::LassoLogistic),
        StatisticKind::FStat => Ok(ConjointStatistic::FStat),
        StatisticKind::MaxArmMean => Err(CliError::config(
            "params.statistic",
            "max_arm_mean is not defined for conjoint designs",
        )),
    }
}

fn check_conjoint_common(issues: &mut Vec<Issue>, design: DesignName, epsilon: f64, statistic: StatisticKind) {
    if design == DesignName::Adaptive {
        check_unit_open(issues, "epsilon", epsilon);
    }
    if statistic == StatisticKind::MaxArmMean {
        issues.push(Issue::new("params.statistic", "max_arm_mean is not defined for conjoint designs"));
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjointSimParams {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub beta_x: f64,
    pub beta_z: f64,
    pub beta_xz: f64,
    pub design: DesignName,
    pub epsilon: f64,
    pub statistic: StatisticKind,
    pub b: usize,
    pub reps: usize,
    pub alpha: f64,
}

impl Default for ConjointSimParams {
    fn default() -> Self {
        Self {
            n: 1000,
            k: 4,
            l: 4,
            beta_x: 0.6,
            beta_z: 0.6,
            beta_xz: 0.9,
            design: DesignName::Adaptive,
            epsilon: 0.5,
            statistic: StatisticKind::LassoLogistic,
            b: 300,
            reps: 1000,
            alpha: 0.05,
        }
    }
}

impl Params for ConjointSimParams {
    const REPS_KEY: &'static str = "reps";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_min(issues, "n", self.n, 2);
        check_min(issues, "k", self.k, 2);
        check_min(issues, "l", self.l, 2);
        for (name, v) in [("beta_x", self.beta_x), ("beta_z", self.beta_z), ("beta_xz", self.beta_xz)] {
            check_finite(issues, name, v);
        }
        check_conjoint_common(issues, self.design, self.epsilon, self.statistic);
        check_min(issues, "b", self.b, 1);
        check_min(issues, "reps", self.reps, 1);
        check_alpha(issues, self.alpha);
    }
}

pub fn run_conjoint_sim(p: &ConjointSimParams, ctx: &mut Context) -> Result<Value, CliError> {
    let scenario = ConjointScenario {
        n: p.n,
        model: ConjointResponseModel {
            beta_x: p.beta_x,
            beta_z: p.beta_z,
            beta_xz: p.beta_xz,
            k: p.k,
            l: p.l,
        },
        design: conjoint_design(p.design, p.epsilon),
        statistic: conjoint_statistic(p.statistic)?,
        b: p.b,
    };
    scenario.validate()?;
    let outcomes = run_replications(&scenario, p.reps, ctx.plan(), ctx.settings.workers);
    let label = match p.design {
        DesignName::Adaptive => "art",
        DesignName::Iid => "crt",
    };
    finish_replications(ctx, label, &outcomes, p.alpha, scenario.fingerprint())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjointReplayParams {
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub n: usize,
    pub design: DesignName,
    pub epsilon: f64,
    pub statistic: StatisticKind,
    pub b: usize,
    pub reps: usize,
    pub alpha: f64,
}

impl Default for ConjointReplayParams {
    fn default() -> Self {
        Self {
            dataset: None,
            schema: None,
            n: 3000,
            design: DesignName::Adaptive,
            epsilon: 0.5,
            statistic: StatisticKind::LassoLogistic,
            b: 300,
            reps: 1000,
            alpha: 0.1,
        }
    }
}

impl Params for ConjointReplayParams {
    const REPS_KEY: &'static str = "reps";

    fn check(&self, issues: &mut Vec<Issue>) {
        check_file(issues, "dataset", &self.dataset, "conjoint-replay");
        check_file(issues, "schema", &self.schema, "conjoint-replay");
        check_min(issues, "n", self.n, 2);
        check_conjoint_common(issues, self.design, self.epsilon, self.statistic);
        check_min(issues, "b", self.b, 1);
        check_min(issues, "reps", self.reps, 1);
        check_alpha(issues, self.alpha);
    }
}

impl ConjointReplayParams {
    /// Hash of the input files, folded into the configuration hash.
    pub fn input_digest(&self) -> Option<String> {
        let read = |p: &Option<PathBuf>| p.as_deref().and_then(|p: &Path| std::fs::read(p).ok());
        let (d, s) = (read(&self.dataset)?, read(&self.schema)?);
        Some(fingerprint(&json!({
            "dataset": String::from_utf8_lossy(&d),
            "schema": String::from_utf8_lossy(&s),
        })))
    }
}

pub fn run_conjoint_replay(p: &ConjointReplayParams, ctx: &mut Context) -> Result<Value, CliError> {
    let schema = ReplaySchema::load(p.schema.as_ref().expect("checked"))?;
    let data = ingest_replay_dataset(p.dataset.as_ref().expect("checked"), &schema)?;
    let summary = data.summary(&schema);
    let warnings = data.warnings.clone();
    let rows = data.len();
    let scenario = ReplayScenario::new(
        Arc::new(data),
        p.n,
        conjoint_design(p.design, p.epsilon),
        conjoint_statistic(p.statistic)?,
        p.b,
    )?;
    ctx.write_json("pools", &summary)?;
    let outcomes = run_replications(&scenario, p.reps, ctx.plan(), ctx.settings.workers);
    let label = match p.design {
        DesignName::Adaptive => "art",
        DesignName::Iid => "crt",
    };
    let mut out = finish_replications(ctx, label, &outcomes, p.alpha, scenario.fingerprint())?;
    out["dataset_rows"] = json!(rows);
    out["dataset_warnings"] = json!(warnings);
    Ok(out)
}
