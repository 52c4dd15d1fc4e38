//! Cross-validated L1-penalized logistic regression on the augmented
//! conjoint design.
//!
//! Every augmented row is one of `k * l` (X level, Z level) cells and all
//! features are cell indicators, so the fit only needs each cell's row count
//! and number of positive responses. The cost of a fit is independent of the
//! sample size.

use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::augment::check_binary;
use super::{AugmentedDesign, BoundStatistic, TestStatistic};
use crate::conjoint::split_arm;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::Stream;

const PROB_CLAMP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoConfig {
    pub folds: usize,
    pub n_lambda: usize,
    /// Smallest penalty as a fraction of the largest.
    pub lambda_ratio: f64,
    /// Convergence threshold on the largest coefficient change.
    pub tol: f64,
    pub max_iter: usize,
    /// Select the largest penalty within one standard error of the minimum
    /// cross-validated deviance instead of the minimizer.
    pub one_se_rule: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            n_lambda: 50,
            lambda_ratio: 0.01,
            tol: 1e-9,
            max_iter: 10_000,
            one_se_rule: false,
        }
    }
}

/// Dummy coding over the cells: `k - 1` X dummies, `l - 1` Z dummies and
/// `(k - 1)(l - 1)` interactions, level 0 as baseline for both factors.
#[derive(Clone, Debug)]
struct Layout {
    cells: usize,
    members: Vec<Vec<usize>>,
    /// Features covering each cell.
    covering: Vec<Vec<usize>>,
    tracked: Vec<bool>,
}

impl Layout {
    fn new(k: usize, l: usize) -> Self {
        let cell = |a: usize, b: usize| a * l + b;
        let mut members = Vec::new();
        let mut tracked = Vec::new();
        for a in 1..k {
            members.push((0..l).map(|b| cell(a, b)).collect());
            tracked.push(true);
        }
        for b in 1..l {
            members.push((0..k).map(|a| cell(a, b)).collect());
            tracked.push(false);
        }
        for a in 1..k {
            for b in 1..l {
                members.push(vec![cell(a, b)]);
                tracked.push(true);
            }
        }
        let mut covering = vec![Vec::new(); k * l];
        for (j, cells) in members.iter().enumerate() {
            for &c in cells {
                covering[c].push(j);
            }
        }
        Self {
            cells: k * l,
            members,
            covering,
            tracked,
        }
    }

    fn features(&self) -> usize {
        self.members.len()
    }
}

/// Row count and positive count for every (X level, Z level) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellTable<T = f64> {
    pub k: usize,
    pub l: usize,
    pub count: Vec<T>,
    pub positive: Vec<T>,
}

impl<T: Real> CellTable<T> {
    pub fn new(k: usize, l: usize) -> Self {
        Self {
            k,
            l,
            count: vec![T::zero(); k * l],
            positive: vec![T::zero(); k * l],
        }
    }

    #[inline]
    pub fn add(&mut self, x_level: usize, z_level: usize, y: T) {
        let c = x_level * self.l + z_level;
        self.count[c] = self.count[c] + T::one();
        self.positive[c] = self.positive[c] + y;
    }

    pub fn clear(&mut self) {
        self.count.fill(T::zero());
        self.positive.fill(T::zero());
    }

    pub fn rows(&self) -> T {
        self.count.iter().copied().sum()
    }

    pub fn positives(&self) -> T {
        self.positive.iter().copied().sum()
    }

    /// `self - other`, cell by cell.
    pub fn minus_into(&self, other: &Self, out: &mut Self) {
        for c in 0..self.count.len() {
            out.count[c] = self.count[c] - other.count[c];
            out.positive[c] = self.positive[c] - other.positive[c];
        }
    }

    /// Table of an augmented design; a design without Z uses a single Z level.
    pub fn from_design(design: &AugmentedDesign, k: usize, l: usize) -> Result<Self> {
        check_binary(&design.response)?;
        let mut t = Self::new(k, l);
        for i in 0..design.rows() {
            let z = if design.has_z() { design.z[i] } else { 0 };
            if design.x[i] >= k || z >= l {
                return Err(Error::DomainMismatch(format!("row {i} outside the {k}x{l} level grid")));
            }
            t.add(design.x[i], z, T::lit(design.response[i]));
        }
        Ok(t)
    }
}

/// Coefficients on the original (unstandardized) scale.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoFit<T = f64> {
    pub lambda: T,
    pub intercept: T,
    /// X dummies, then Z dummies, then interactions (X-major).
    pub beta: Vec<T>,
}

#[inline]
fn sigmoid<T: Real>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

#[inline]
fn softplus<T: Real>(eta: T) -> T {
    if eta > T::zero() {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

#[inline]
fn soft_threshold<T: Real>(g: T, thr: T) -> T {
    if g > thr {
        g - thr
    } else if g < -thr {
        g + thr
    } else {
        T::zero()
    }
}

fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// Penalty factors: the feature standard deviation on the fitted table.
/// Penalizing `sigma_j * |beta_j|` on the original scale is the same as
/// penalizing standardized coefficients. Features with zero spread stay at 0.
fn penalty_factors<T: Real>(layout: &Layout, table: &CellTable<T>) -> Vec<T> {
    let n = table.rows();
    layout
        .members
        .iter()
        .map(|cells| {
            let m = cells.iter().map(|&c| table.count[c]).sum::<T>() / n;
            (m * (T::one() - m)).max(T::zero()).sqrt()
        })
        .collect()
}

struct Solver<'a, T: Real> {
    layout: &'a Layout,
    table: &'a CellTable<T>,
    n_inv: T,
    pf: Vec<T>,
    tol: T,
    max_iter: usize,
    intercept: T,
    beta: Vec<T>,
    eta: Vec<T>,
    v: Vec<T>,
    q: Vec<T>,
    old_beta: Vec<T>,
    new_beta: Vec<T>,
}

impl<'a, T: Real> Solver<'a, T> {
    fn new(layout: &'a Layout, table: &'a CellTable<T>, cfg: &LassoConfig) -> Self {
        let n = table.rows();
        let ybar = table.positives() / n;
        let cells = layout.cells;
        Self {
            layout,
            table,
            n_inv: T::one() / n,
            pf: penalty_factors(layout, table),
            tol: T::lit(cfg.tol),
            max_iter: cfg.max_iter,
            intercept: logit(ybar),
            beta: vec![T::zero(); layout.features()],
            eta: vec![T::zero(); cells],
            v: vec![T::zero(); cells],
            q: vec![T::zero(); cells],
            old_beta: Vec::new(),
            new_beta: Vec::new(),
        }
    }

    fn fill_eta(&mut self) {
        self.eta.fill(self.intercept);
        for (cells, &b) in self.layout.members.iter().zip(&self.beta) {
            if b != T::zero() {
                for &c in cells {
                    self.eta[c] = self.eta[c] + b;
                }
            }
        }
    }

    /// Penalized objective at the current coefficients; leaves the linear
    /// predictor in `eta`.
    fn objective(&mut self, lambda: T) -> T {
        self.fill_eta();
        let mut loss = T::zero();
        for c in 0..self.layout.cells {
            let w = self.table.count[c];
            if w > T::zero() {
                loss = loss + w * softplus(self.eta[c]) - self.table.positive[c] * self.eta[c];
            }
        }
        let pen: T = self.beta.iter().zip(&self.pf).map(|(&b, &p)| p * b.abs()).sum();
        loss * self.n_inv + lambda * pen
    }

    /// Largest penalty at which some coefficient leaves zero.
    fn lambda_max(&mut self) -> T {
        let n = self.table.rows();
        let p = self.table.positives() / n;
        let mut best = T::zero();
        for (cells, &pf) in self.layout.members.iter().zip(&self.pf) {
            if pf <= T::zero() {
                continue;
            }
            let g: T = cells
                .iter()
                .map(|&c| self.table.positive[c] - self.table.count[c] * p)
                .sum::<T>()
                * self.n_inv;
            best = best.max(g.abs() / pf);
        }
        best
    }

    /// Minimizes the penalized objective at `lambda`, warm-started from the
    /// current coefficients.
    fn solve(&mut self, lambda: T) -> Result<()> {
        let clamp_lo = T::lit(PROB_CLAMP);
        let clamp_hi = T::one() - clamp_lo;
        let half = T::lit(0.5);
        // Once the quadratic model is solved exactly, Newton steps converge
        // quadratically and a step this small leaves an error far below tol.
        let fast_tol = self.tol.sqrt() * T::lit(0.01);
        let mut f_cur = self.objective(lambda);
        for _outer in 0..self.max_iter {
            let old_intercept = self.intercept;
            self.old_beta.clone_from(&self.beta);
            // eta holds the linear predictor at the current point.
            for c in 0..self.layout.cells {
                let w = self.table.count[c];
                let p = sigmoid(self.eta[c]).max(clamp_lo).min(clamp_hi);
                self.v[c] = w * p * (T::one() - p) * self.n_inv;
                self.q[c] = (self.table.positive[c] - w * p) * self.n_inv;
            }
            let exact = self.coordinate_descent(lambda);

            // Backtrack along the Newton direction if the step overshoots.
            let new_intercept = self.intercept;
            self.new_beta.clone_from(&self.beta);
            let mut step = T::one();
            let mut f_new = self.objective(lambda);
            let slack = T::lit(1e-12) * f_cur.abs().max(T::one());
            let mut tries = 0;
            while f_new > f_cur + slack && tries < 30 {
                step = step * half;
                self.intercept = old_intercept + step * (new_intercept - old_intercept);
                for j in 0..self.beta.len() {
                    self.beta[j] = self.old_beta[j] + step * (self.new_beta[j] - self.old_beta[j]);
                }
                f_new = self.objective(lambda);
                tries += 1;
            }
            f_cur = f_new;

            let mut change = (self.intercept - old_intercept).abs();
            for (a, b) in self.beta.iter().zip(&self.old_beta) {
                change = change.max((*a - *b).abs());
            }
            if !change.is_finite() || !self.intercept.is_finite() {
                return Err(Error::DegenerateFit("non-finite coefficients".into()));
            }
            if change < self.tol || (exact && tries == 0 && change < fast_tol) {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Cyclic coordinate descent on the quadratic approximation held in
    /// (`v`, `q`); `q` tracks the negative gradient as coefficients move.
    /// Every few sweeps the current sign pattern is solved exactly; the
    /// result is kept when signs and the inactive-set KKT conditions hold.
    fn coordinate_descent(&mut self, lambda: T) -> bool {
        let layout = self.layout;
        let h0: T = self.v.iter().copied().sum();
        for sweep in 0..self.max_iter {
            let mut max_delta = T::zero();
            if h0 > T::zero() {
                let g: T = self.q.iter().copied().sum();
                let d = g / h0;
                if d != T::zero() {
                    self.intercept = self.intercept + d;
                    for c in 0..layout.cells {
                        self.q[c] = self.q[c] - self.v[c] * d;
                    }
                    max_delta = max_delta.max(d.abs());
                }
            }
            for (j, cells) in layout.members.iter().enumerate() {
                let pf = self.pf[j];
                if pf <= T::zero() {
                    continue;
                }
                let mut h = T::zero();
                let mut g = T::zero();
                for &c in cells {
                    h = h + self.v[c];
                    g = g + self.q[c];
                }
                if h <= T::zero() {
                    continue;
                }
                let b = self.beta[j];
                let new = soft_threshold(g + h * b, lambda * pf) / h;
                let d = new - b;
                if d != T::zero() {
                    for &c in cells {
                        self.q[c] = self.q[c] - self.v[c] * d;
                    }
                    self.beta[j] = new;
                    max_delta = max_delta.max(d.abs());
                }
            }
            if max_delta < self.tol * T::lit(0.1) {
                return false;
            }
            if sweep % 4 == 3 && h0 > T::zero() && self.active_set_step(lambda) {
                return true;
            }
        }
        false
    }

    /// Solves the quadratic model exactly on the current active set with
    /// the current signs. Returns true when the solution is optimal.
    fn active_set_step(&mut self, lambda: T) -> bool {
        let layout = self.layout;
        let active: Vec<usize> = (0..self.beta.len()).filter(|&j| self.beta[j] != T::zero()).collect();
        let m = active.len() + 1;
        // Variable 0 is the intercept, variable i + 1 is active[i].
        let mut slot = vec![usize::MAX; self.beta.len()];
        for (i, &j) in active.iter().enumerate() {
            slot[j] = i + 1;
        }
        let mut a = vec![T::zero(); m * m];
        let mut r = vec![T::zero(); m];
        let mut vars = Vec::with_capacity(4);
        for c in 0..layout.cells {
            vars.clear();
            vars.push(0);
            vars.extend(layout.covering[c].iter().map(|&j| slot[j]).filter(|&s| s != usize::MAX));
            let (vc, qc) = (self.v[c], self.q[c]);
            for &x in &vars {
                r[x] = r[x] + qc;
                for &y in &vars {
                    a[x * m + y] = a[x * m + y] + vc;
                }
            }
        }
        for (i, &j) in active.iter().enumerate() {
            r[i + 1] = r[i + 1] - lambda * self.pf[j] * self.beta[j].signum();
        }
        let Some(delta) = solve_dense(&mut a, &mut r, m) else {
            return false;
        };
        for (i, &j) in active.iter().enumerate() {
            let nb = self.beta[j] + delta[i + 1];
            if nb == T::zero() || nb.signum() != self.beta[j].signum() {
                return false;
            }
        }
        // Tentatively apply and check the inactive coordinates.
        let mut q_new = self.q.clone();
        for c in 0..layout.cells {
            let mut d = delta[0];
            for &j in &layout.covering[c] {
                if slot[j] != usize::MAX {
                    d = d + delta[slot[j]];
                }
            }
            q_new[c] = q_new[c] - self.v[c] * d;
        }
        let slack = T::lit(1e-12);
        for (j, cells) in layout.members.iter().enumerate() {
            if self.beta[j] != T::zero() || self.pf[j] <= T::zero() {
                continue;
            }
            let g: T = cells.iter().map(|&c| q_new[c]).sum();
            if g.abs() > lambda * self.pf[j] + slack {
                return false;
            }
        }
        self.intercept = self.intercept + delta[0];
        for (i, &j) in active.iter().enumerate() {
            self.beta[j] = self.beta[j] + delta[i + 1];
        }
        self.q = q_new;
        true
    }

    fn fit(&self, lambda: T) -> LassoFit<T> {
        LassoFit {
            lambda,
            intercept: self.intercept,
            beta: self.beta.clone(),
        }
    }

    /// Held-out deviance of the current coefficients on `table`.
    fn deviance(&mut self, table: &CellTable<T>) -> T {
        let lo = T::lit(PROB_CLAMP);
        let hi = T::one() - lo;
        self.fill_eta();
        let mut dev = T::zero();
        for c in 0..self.layout.cells {
            let w = table.count[c];
            if w > T::zero() {
                let p = sigmoid(self.eta[c]).max(lo).min(hi);
                let s = table.positive[c];
                dev = dev - (s * p.ln() + (w - s) * (T::one() - p).ln());
            }
        }
        dev + dev
    }
}

/// Gaussian elimination with partial pivoting on a row-major `m x m`
/// system. Returns `None` for a numerically singular matrix.
fn solve_dense<T: Real>(a: &mut [T], b: &mut [T], m: usize) -> Option<Vec<T>> {
    let scale = a.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale <= T::zero() {
        return None;
    }
    let tiny = scale * T::lit(1e-13);
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i * m + col].abs().partial_cmp(&a[j * m + col].abs()).unwrap())?;
        if a[piv * m + col].abs() <= tiny {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
            }
            b.swap(piv, col);
        }
        let d = a[col * m + col];
        for i in (col + 1)..m {
            let f = a[i * m + col] / d;
            if f != T::zero() {
                for k in col..m {
                    a[i * m + k] = a[i * m + k] - f * a[col * m + k];
                }
                b[i] = b[i] - f * b[col];
            }
        }
    }
    let mut x = vec![T::zero(); m];
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in (i + 1)..m {
            s = s - a[i * m + k] * x[k];
        }
        x[i] = s / a[i * m + i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

fn check_table<T: Real>(table: &CellTable<T>) -> Result<()> {
    let n = table.rows();
    let s = table.positives();
    if n <= T::zero() {
        return Err(Error::DegenerateFit("no rows".into()));
    }
    if s <= T::zero() || s >= n {
        return Err(Error::DegenerateFit("response has a single class".into()));
    }
    Ok(())
}

/// Largest useful penalty for the table.
pub fn lambda_max<T: Real>(table: &CellTable<T>) -> Result<T> {
    check_table(table)?;
    let layout = Layout::new(table.k, table.l);
    let cfg = LassoConfig::default();
    Ok(Solver::new(&layout, table, &cfg).lambda_max())
}

/// Log-spaced penalties from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_grid<T: Real>(lambda_max: T, cfg: &LassoConfig) -> Vec<T> {
    let m = cfg.n_lambda;
    if m == 1 {
        return vec![lambda_max];
    }
    let ratio = T::lit(cfg.lambda_ratio);
    (0..m)
        .map(|i| lambda_max * ratio.powf(T::from_usize(i).unwrap() / T::from_usize(m - 1).unwrap()))
        .collect()
}

/// Fits the penalized regression at each penalty in order, warm-starting
/// each fit from the previous one.
pub fn fit_lasso_path<T: Real>(table: &CellTable<T>, lambdas: &[T], cfg: &LassoConfig) -> Result<Vec<LassoFit<T>>> {
    check_table(table)?;
    let layout = Layout::new(table.k, table.l);
    let mut solver = Solver::new(&layout, table, cfg);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        solver.solve(lam)?;
        out.push(solver.fit(lam));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LassoStatus {
    Fitted,
    /// No penalty leaves zero or the response has one class; statistic is 0.
    Degenerate,
}

/// Outcome of cross-validated selection and the final fit.
#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome<T = f64> {
    pub statistic: T,
    pub lambda: T,
    pub index: usize,
    pub status: LassoStatus,
}

/// Shared state for repeated cross-validated fits with one layout.
struct CvWorkspace<T: Real> {
    layout: Layout,
    train: CellTable<T>,
    total_dev: Vec<T>,
    /// Per-fold mean deviance, fold-major.
    fold_dev: Vec<T>,
}

impl<T: Real> CvWorkspace<T> {
    fn new(k: usize, l: usize, n_lambda: usize) -> Self {
        Self {
            layout: Layout::new(k, l),
            train: CellTable::new(k, l),
            total_dev: vec![T::zero(); n_lambda],
            fold_dev: Vec::new(),
        }
    }

    fn run(&mut self, full: &CellTable<T>, held_out: &[CellTable<T>], cfg: &LassoConfig) -> Result<CvOutcome<T>> {
        let degenerate = CvOutcome {
            statistic: T::zero(),
            lambda: T::zero(),
            index: 0,
            status: LassoStatus::Degenerate,
        };
        if check_table(full).is_err() {
            return Ok(degenerate);
        }
        let lam_max = Solver::new(&self.layout, full, cfg).lambda_max();
        if !(lam_max > T::zero()) {
            return Ok(degenerate);
        }
        let grid = lambda_grid(lam_max, cfg);
        self.total_dev.clear();
        self.total_dev.resize(grid.len(), T::zero());
        self.fold_dev.clear();
        for fold in held_out {
            full.minus_into(fold, &mut self.train);
            if check_table(&self.train).is_err() {
                return Ok(degenerate);
            }
            let mut solver = Solver::new(&self.layout, &self.train, cfg);
            for (i, &lam) in grid.iter().enumerate() {
                solver.solve(lam)?;
                let d = solver.deviance(fold);
                self.total_dev[i] = self.total_dev[i] + d;
                if cfg.one_se_rule {
                    self.fold_dev.push(d / fold.rows().max(T::one()));
                }
            }
        }
        // Ties go to the larger penalty.
        let mut best = 0;
        for i in 1..grid.len() {
            if self.total_dev[i] < self.total_dev[best] {
                best = i;
            }
        }
        if cfg.one_se_rule && held_out.len() > 1 {
            best = self.one_se_index(best, full, held_out, grid.len());
        }
        let mut solver = Solver::new(&self.layout, full, cfg);
        for &lam in &grid[..=best] {
            solver.solve(lam)?;
        }
        let statistic = solver
            .beta
            .iter()
            .zip(&self.layout.tracked)
            .filter(|(_, &t)| t)
            .map(|(b, _)| b.abs())
            .sum();
        Ok(CvOutcome {
            statistic,
            lambda: grid[best],
            index: best,
            status: LassoStatus::Fitted,
        })
    }

    /// Largest penalty whose mean deviance is within one standard error
    /// (across folds, weighted by fold size) of the minimum.
    fn one_se_index(&self, best: usize, full: &CellTable<T>, held_out: &[CellTable<T>], m: usize) -> usize {
        let folds = held_out.len();
        let total = full.rows();
        let fold_w: Vec<T> = held_out.iter().map(|f| f.rows() / total).collect();
        let mean = self.total_dev[best] / total;
        let mut var = T::zero();
        for f in 0..folds {
            let d = self.fold_dev[f * m + best] - mean;
            var = var + fold_w[f] * d * d;
        }
        let se = (var / T::from_usize(folds - 1).unwrap()).sqrt();
        (0..=best)
            .find(|&i| self.total_dev[i] / total <= mean + se)
            .unwrap_or(best)
    }
}

/// Cross-validated statistic from the full table and one held-out table per
/// fold. Training tables are `full - held_out[f]`.
pub fn cv_lasso_cells<T: Real>(full: &CellTable<T>, held_out: &[CellTable<T>], cfg: &LassoConfig) -> Result<CvOutcome<T>> {
    CvWorkspace::new(full.k, full.l, cfg.n_lambda).run(full, held_out, cfg)
}

/// Fold of each original sample: a seeded permutation dealt round-robin.
/// Both augmented rows of a sample share its fold.
pub fn pair_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut Stream::seed_from_u64(seed));
    let mut out = vec![0; n];
    for (i, &s) in idx.iter().enumerate() {
        out[s] = i % folds;
    }
    out
}

/// Sum of absolute X main-effect and X-Z interaction coefficients of the
/// cross-validated fit on an augmented design.
pub fn stat_lasso_logistic(design: &AugmentedDesign, k: usize, l: usize, seed: u64, cfg: &LassoConfig) -> Result<f64> {
    let full = CellTable::from_design(design, k, l)?;
    let n = design.n();
    let folds = pair_folds(n, cfg.folds, seed);
    let mut held = vec![CellTable::new(k, l); cfg.folds];
    for i in 0..design.rows() {
        let z = if design.has_z() { design.z[i] } else { 0 };
        held[folds[i % n]].add(design.x[i], z, design.response[i]);
    }
    Ok(cv_lasso_cells(&full, &held, cfg)?.statistic)
}

/// Lasso statistic on conjoint records with pair-encoded X (`k` levels) and
/// Z (`l` levels) arms.
#[derive(Clone, Debug)]
pub struct LassoStatistic {
    pub k: usize,
    pub l: usize,
    pub config: LassoConfig,
}

impl LassoStatistic {
    pub fn new(k: usize, l: usize) -> Self {
        Self {
            k,
            l,
            config: LassoConfig::default(),
        }
    }
}

struct BoundLasso<'a> {
    stat: &'a LassoStatistic,
    z: Vec<(usize, usize)>,
    y: &'a [f64],
    folds: Vec<usize>,
    full: CellTable<f64>,
    held: Vec<CellTable<f64>>,
    work: CvWorkspace<f64>,
    degenerate: usize,
}

impl BoundStatistic for BoundLasso<'_> {
    fn eval(&mut self, x: &[usize]) -> Result<f64> {
        if x.len() != self.y.len() {
            return Err(Error::LengthMismatch(format!("{} x for {} y", x.len(), self.y.len())));
        }
        let k = self.stat.k;
        for t in self.held.iter_mut() {
            t.clear();
        }
        for (i, (&arm, &y)) in x.iter().zip(self.y).enumerate() {
            let (xl, xr) = split_arm(arm, k);
            let (zl, zr) = self.z[i];
            let fold = &mut self.held[self.folds[i]];
            fold.add(xl, zl, y);
            fold.add(xr, zr, 1.0 - y);
        }
        self.full.clear();
        for t in &self.held {
            for c in 0..self.full.count.len() {
                self.full.count[c] += t.count[c];
                self.full.positive[c] += t.positive[c];
            }
        }
        let out = self.work.run(&self.full, &self.held, &self.stat.config)?;
        if out.status == LassoStatus::Degenerate {
            self.degenerate += 1;
        }
        Ok(out.statistic)
    }

    fn diagnostics(&self) -> Vec<String> {
        if self.degenerate > 0 {
            vec![format!("{} degenerate lasso fit(s) scored as 0", self.degenerate)]
        } else {
            Vec::new()
        }
    }
}

impl TestStatistic for LassoStatistic {
    fn name(&self) -> &str {
        "lasso_logistic"
    }

    fn bind<'a>(&'a self, z: &'a [usize], y: &'a [f64], seed: u64) -> Result<Box<dyn BoundStatistic + 'a>> {
        check_binary(y)?;
        let n = y.len();
        let z_pairs: Vec<(usize, usize)> = if z.is_empty() {
            vec![(0, 0); n]
        } else if z.len() == n {
            z.iter().map(|&a| split_arm(a, self.l)).collect()
        } else {
            return Err(Error::LengthMismatch(format!("z has {} entries, y has {n}", z.len())));
        };
        let l = if z.is_empty() { 1 } else { self.l };
        Ok(Box::new(BoundLasso {
            stat: self,
            z: z_pairs,
            y,
            folds: pair_folds(n, self.config.folds, seed),
            full: CellTable::new(self.k, l),
            held: vec![CellTable::new(self.k, l); self.config.folds],
            work: CvWorkspace::new(self.k, l, self.config.n_lambda),
            degenerate: 0,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::augment_no_profile_order;

    fn toy_design(seed: u64, n: usize, beta_x: f64) -> AugmentedDesign {
        use rand::Rng;
        let mut rng = Stream::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut z = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let p = (rng.random_range(0..4), rng.random_range(0..4));
            let q = (rng.random_range(0..4), rng.random_range(0..4));
            let eta = beta_x * (((p.0 == 0) as i32 - (p.1 == 0) as i32) as f64);
            let pr = 1.0 / (1.0 + (-eta).exp());
            y.push(if rng.random::<f64>() < pr { 1.0 } else { 0.0 });
            x.push(p);
            z.push(q);
        }
        augment_no_profile_order(&x, &z, &y).unwrap()
    }

    #[test]
    fn full_shrinkage_at_lambda_max() {
        let d = toy_design(1, 200, 2.0);
        let t = CellTable::<f64>::from_design(&d, 4, 4).unwrap();
        let lm = lambda_max(&t).unwrap();
        let fits = fit_lasso_path(&t, &[lm, lm * 2.0], &LassoConfig::default()).unwrap();
        for f in fits {
            assert!(f.beta.iter().all(|&b| b == 0.0));
        }
        let below = fit_lasso_path(&t, &[lm * 0.9], &LassoConfig::default()).unwrap();
        assert!(below[0].beta.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn statistic_nonnegative_and_seeded() {
        let d = toy_design(2, 300, 1.0);
        let cfg = LassoConfig::default();
        let a = stat_lasso_logistic(&d, 4, 4, 7, &cfg).unwrap();
        let b = stat_lasso_logistic(&d, 4, 4, 7, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn bound_statistic_matches_design_route() {
        use rand::Rng;
        let mut rng = Stream::seed_from_u64(4);
        let n = 150;
        let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..16)).collect();
        let z: Vec<usize> = (0..n).map(|_| rng.random_range(0..16)).collect();
        let y: Vec<f64> = x.iter().map(|&a| if a / 4 == 0 && rng.random::<f64>() < 0.8 { 1.0 } else { (rng.random::<f64>() < 0.4) as u8 as f64 }).collect();
        let d = AugmentedDesign::from_arms(&x, &z, &y, 4, 4).unwrap();
        let direct = stat_lasso_logistic(&d, 4, 4, 11, &LassoConfig::default()).unwrap();
        let stat = LassoStatistic::new(4, 4);
        let bound = stat.bind(&z, &y, 11).unwrap().eval(&x).unwrap();
        assert!((direct - bound).abs() < 1e-9, "{direct} vs {bound}");
    }

    #[test]
    fn single_class_is_degenerate() {
        let mut t = CellTable::<f64>::new(2, 2);
        t.add(0, 0, 1.0);
        t.add(1, 1, 1.0);
        let out = cv_lasso_cells(&t, &[t.clone()], &LassoConfig::default()).unwrap();
        assert_eq!(out.status, LassoStatus::Degenerate);
        assert_eq!(out.statistic, 0.0);
    }

    #[test]
    fn f32_path_close_to_f64() {
        let d = toy_design(3, 200, 1.5);
        let t64 = CellTable::<f64>::from_design(&d, 4, 4).unwrap();
        let t32 = CellTable::<f32>::from_design(&d, 4, 4).unwrap();
        let lm = lambda_max(&t64).unwrap();
        let cfg = LassoConfig {
            tol: 1e-6,
            ..LassoConfig::default()
        };
        let a = fit_lasso_path(&t64, &[lm * 0.3], &cfg).unwrap();
        let b = fit_lasso_path(&t32, &[(lm * 0.3) as f32], &cfg).unwrap();
        for (u, v) in a[0].beta.iter().zip(&b[0].beta) {
            assert!((u - *v as f64).abs() < 1e-3);
        }
    }

    #[test]
    fn one_se_rule_selects_a_larger_penalty() {
        let d = toy_design(5, 400, 0.6);
        let full = CellTable::<f64>::from_design(&d, 4, 4).unwrap();
        let folds = pair_folds(d.n(), 5, 3);
        let mut held = vec![CellTable::new(4, 4); 5];
        for i in 0..d.rows() {
            held[folds[i % d.n()]].add(d.x[i], d.z[i], d.response[i]);
        }
        let min = cv_lasso_cells(&full, &held, &LassoConfig::default()).unwrap();
        let cfg = LassoConfig {
            one_se_rule: true,
            ..LassoConfig::default()
        };
        let se = cv_lasso_cells(&full, &held, &cfg).unwrap();
        assert!(se.index <= min.index);
        assert!(se.lambda >= min.lambda);
    }

    #[test]
    fn folds_balanced() {
        let f = pair_folds(23, 5, 1);
        let mut counts = [0; 5];
        for &v in &f {
            counts[v] += 1;
        }
        assert!(counts.iter().all(|&c| c == 4 || c == 5));
    }
}
