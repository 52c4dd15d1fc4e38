use serde::{Deserialize, Serialize};

use super::adaptive::{power_adaptive, AdaptiveSpec, LastArmShift};
use super::iid::power_iid;
use super::{check_alpha, check_h0, DEFAULT_N_INNER, DEFAULT_N_OUTER};
use crate::error::{Error, Result};
use crate::policies::Reweight;
use crate::weights::normalize;
use crate::{SeedPlan, Weights};

/// Weights `(q1, (1-q1)/(p-1), ..., (1-q1)/(p-1))`.
pub fn oracle_weights(p: usize, q1: f64) -> Result<Weights> {
    if p < 2 {
        return Err(Error::invalid("p", "need at least two arms"));
    }
    if !(q1 > 0.0 && q1 < 1.0) {
        return Err(Error::invalid("q1", format!("{q1} not in (0, 1)")));
    }
    let mut raw = vec![(1.0 - q1) / (p - 1) as f64; p];
    raw[0] = q1;
    normalize(&raw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub q1_star: f64,
    pub power_star: f64,
    pub se_star: f64,
    /// Set when the power curve varies by no more than three standard
    /// errors, so the maximizer is not identified.
    pub flat: bool,
    /// `(q1, power)` at every grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Grid search for the signal-arm weight maximizing iid power, the other
/// arms sharing the rest equally. Grid points are `(i + 0.5) / resolution`
/// plus the uniform weight `1 / p`; every point reuses the same random
/// numbers, so the oracle is never below uniform sampling.
pub fn oracle_q_star(p: usize, h0: f64, alpha: f64, resolution: usize, n_mc: usize, plan: SeedPlan) -> Result<OracleResult> {
    if resolution < 11 {
        return Err(Error::invalid("grid_resolution", format!("{resolution} < 11")));
    }
    check_alpha(alpha)?;
    check_h0(h0)?;
    let mut grid: Vec<f64> = (0..resolution).map(|i| (i as f64 + 0.5) / resolution as f64).collect();
    let flat_q = 1.0 / p as f64;
    if !grid.iter().any(|&q| (q - flat_q).abs() < 1e-12) {
        grid.push(flat_q);
        grid.sort_by(f64::total_cmp);
    }
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for q1 in grid {
        let est = power_iid(&oracle_weights(p, q1)?, h0, alpha, n_mc, plan)?;
        curve.push((q1, est.power));
        if best.is_none_or(|b| est.power > b.1) {
            best = Some((q1, est.power, est.se));
        }
    }
    let (q1_star, power_star, se_star) = best.expect("resolution >= 11");
    let lo = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    Ok(OracleResult {
        q1_star,
        power_star,
        se_star,
        flat: power_star - lo <= 3.0 * se_star.max(1.0 / n_mc as f64),
        curve,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    /// `a` = two-stage adaptive, `b` = uniform iid.
    AdaptiveVsUniform,
    /// `a` = two-stage adaptive, `b` = oracle iid.
    AdaptiveVsOracle,
    /// `a` = oracle iid, `b` = uniform iid; reports the oracle weight.
    OracleQ1,
}

impl HeatmapMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeatmapMode::AdaptiveVsUniform => "adaptive_vs_uniform",
            HeatmapMode::AdaptiveVsOracle => "adaptive_vs_oracle",
            HeatmapMode::OracleQ1 => "oracle_q1",
        }
    }
}

/// Settings shared by every grid cell. The reweighting scale of a cell is
/// `t0 / h0` (zero when `h0 = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapParams {
    pub epsilon: f64,
    pub t0: f64,
    #[serde(default)]
    pub reweight: Reweight,
    pub alpha: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    /// Draws for iid power evaluations.
    pub n_mc: usize,
    pub oracle_resolution: usize,
    #[serde(default)]
    pub last_arm: LastArmShift,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            t0: std::f64::consts::LN_2,
            reweight: Reweight::Exp,
            alpha: 0.05,
            n_outer: DEFAULT_N_OUTER,
            n_inner: DEFAULT_N_INNER,
            n_mc: DEFAULT_N_OUTER,
            oracle_resolution: 41,
            last_arm: LastArmShift::Zero,
        }
    }
}

impl HeatmapParams {
    pub fn t_for(&self, h0: f64) -> f64 {
        if h0 > 0.0 {
            self.t0 / h0
        } else {
            0.0
        }
    }

    pub fn adaptive_spec(&self, p: usize, h0: f64) -> AdaptiveSpec {
        AdaptiveSpec {
            epsilon: self.epsilon,
            t: self.t_for(h0),
            reweight: self.reweight,
            q: Weights::uniform(p),
            h0,
            alpha: self.alpha,
            n_outer: self.n_outer,
            n_inner: self.n_inner,
            last_arm: self.last_arm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub h0: f64,
    pub p: usize,
    pub power_a: f64,
    pub se_a: f64,
    pub power_b: f64,
    pub se_b: f64,
    pub diff: f64,
    pub diff_se: f64,
    pub q1_star: Option<f64>,
    pub error: Option<String>,
}

impl HeatCell {
    fn failed(h0: f64, p: usize, e: Error) -> Self {
        Self {
            h0,
            p,
            power_a: f64::NAN,
            se_a: f64::NAN,
            power_b: f64::NAN,
            se_b: f64::NAN,
            diff: f64::NAN,
            diff_se: f64::NAN,
            q1_star: None,
            error: Some(e.to_string()),
        }
    }
}

/// Cells in row-major order: `p` outer, `h0` inner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub mode: HeatmapMode,
    pub h0_grid: Vec<f64>,
    pub p_grid: Vec<usize>,
    pub cells: Vec<HeatCell>,
}

impl PowerGrid {
    pub fn cell(&self, h0_index: usize, p_index: usize) -> &HeatCell {
        &self.cells[p_index * self.h0_grid.len() + h0_index]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

fn heat_cell(mode: HeatmapMode, h0: f64, p: usize, params: &HeatmapParams, plan: SeedPlan) -> Result<HeatCell> {
    let uniform = || power_iid(&Weights::uniform(p), h0, params.alpha, params.n_mc, plan);
    let oracle = || oracle_q_star(p, h0, params.alpha, params.oracle_resolution, params.n_mc, plan);
    let (a, se_a, b, se_b, q1_star) = match mode {
        HeatmapMode::AdaptiveVsUniform => {
            let a = power_adaptive(&params.adaptive_spec(p, h0), plan)?;
            let b = uniform()?;
            (a.power, a.se, b.power, b.se, None)
        }
        HeatmapMode::AdaptiveVsOracle => {
            let a = power_adaptive(&params.adaptive_spec(p, h0), plan)?;
            let o = oracle()?;
            (a.power, a.se, o.power_star, o.se_star, Some(o.q1_star))
        }
        HeatmapMode::OracleQ1 => {
            let o = oracle()?;
            let b = uniform()?;
            (o.power_star, o.se_star, b.power, b.se, Some(o.q1_star))
        }
    };
    Ok(HeatCell {
        h0,
        p,
        power_a: a,
        se_a,
        power_b: b,
        se_b,
        diff: a - b,
        diff_se: (se_a * se_a + se_b * se_b).sqrt(),
        q1_star,
        error: None,
    })
}

/// Evaluates `mode` on every `(h0, p)` cell with common random numbers (all
/// cells share `plan`). A failing cell is recorded and the grid completes.
pub fn power_heatmap(
    h0_grid: &[f64],
    p_grid: &[usize],
    mode: HeatmapMode,
    params: &HeatmapParams,
    plan: SeedPlan,
) -> Result<PowerGrid> {
    if h0_grid.is_empty() || p_grid.is_empty() {
        return Err(Error::invalid("grid", "h0 and p grids must be non-empty"));
    }
    let mut cells = Vec::with_capacity(h0_grid.len() * p_grid.len());
    for &p in p_grid {
        for &h0 in h0_grid {
            cells.push(heat_cell(mode, h0, p, params, plan).unwrap_or_else(|e| HeatCell::failed(h0, p, e)));
        }
    }
    Ok(PowerGrid {
        mode,
        h0_grid: h0_grid.to_vec(),
        p_grid: p_grid.to_vec(),
        cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub h0: f64,
    pub epsilon: f64,
    pub t0: f64,
    pub power: f64,
    pub se: f64,
}

/// Two-stage power for every `(ε, t0, h0)` at fixed `p`, with `t = t0 / h0`.
/// Rows are ordered by ε, then t0, then h0.
#[allow(clippy::too_many_arguments)]
pub fn sweep_epsilon_t(
    p: usize,
    h0_list: &[f64],
    eps_list: &[f64],
    t0_list: &[f64],
    alpha: f64,
    n_outer: usize,
    n_inner: usize,
    plan: SeedPlan,
) -> Result<Vec<SweepRow>> {
    if h0_list.is_empty() || eps_list.is_empty() || t0_list.is_empty() {
        return Err(Error::invalid("sweep", "lists must be non-empty"));
    }
    let mut rows = Vec::new();
    for &epsilon in eps_list {
        for &t0 in t0_list {
            for &h0 in h0_list {
                let params = HeatmapParams {
                    epsilon,
                    t0,
                    alpha,
                    n_outer,
                    n_inner,
                    ..HeatmapParams::default()
                };
                let est = power_adaptive(&params.adaptive_spec(p, h0), plan)?;
                rows.push(SweepRow {
                    p,
                    h0,
                    epsilon,
                    t0,
                    power: est.power,
                    se: est.se,
                });
            }
        }
    }
    Ok(rows)
}
