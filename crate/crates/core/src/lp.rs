//! Dense revised primal simplex.
//!
//! The engine works on standard form `min c·y  s.t.  A y = b, y ≥ 0` with an
//! explicit basis inverse and two phases from an artificial start basis.
//! Pricing is Dantzig's rule with a Harris ratio test. Long runs of
//! degenerate pivots switch to an anti-cycling mode: either Bland's rule, or
//! a small random shift of the basic values that is removed again at the
//! end by dual simplex pivots. Columns can be appended between solves and the
//! current basis stays feasible, which is what makes the cutting-plane loop
//! in [`crate::mk`] cheap: cuts of the primal problem are columns of this
//! (dual) form.
//!
//! [`simplex_solve`] is the general entry point for small LPs in
//! inequality form.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
/// Reduced-cost slack accepted when certifying optimality.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;
const PRIMAL_FEASIBILITY_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 40;
const DEGENERATE_RUN: usize = 30;
const MAX_RESTARTS: usize = 8;
const MAX_PERTURBATIONS: usize = 4;
const HARRIS_SLACK: f64 = 1e-9;
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// What to do once degenerate pivots pile up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AntiCycling {
    /// Switch permanently to Bland's smallest-index rule.
    Bland,
    /// Shift basic values by a tiny random amount, Bland as a last resort.
    Perturb,
}

/// Standard-form LP with appendable columns.
#[derive(Debug, Clone)]
pub(crate) struct StandardLp {
    m: usize,
    b: Vec<f64>,
    /// Right-hand side in use, `b` plus any active perturbation.
    rhs: Vec<f64>,
    /// Columns `0..m` are artificials `sign(b_i) e_i`; real columns follow.
    cols: Vec<Vec<f64>>,
    costs: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    feasible: bool,
    anti_cycling: AntiCycling,
    bland: bool,
    perturbed: bool,
    perturbations: usize,
    rng: ChaCha8Rng,
    degenerate_run: usize,
    since_refactor: usize,
    pivots: usize,
    pivot_cap: usize,
    restarts: usize,
    reset_pending: bool,
}

impl StandardLp {
    pub(crate) fn new(b: Vec<f64>, anti_cycling: AntiCycling) -> Self {
        let m = b.len();
        let mut cols = Vec::with_capacity(m);
        let mut binv = vec![0.0; m * m];
        for (i, &bi) in b.iter().enumerate() {
            let s = if bi < 0.0 { -1.0 } else { 1.0 };
            let mut col = vec![0.0; m];
            col[i] = s;
            cols.push(col);
            binv[i * m + i] = s;
        }
        StandardLp {
            m,
            xb: b.iter().map(|x| x.abs()).collect(),
            rhs: b.clone(),
            b,
            costs: vec![0.0; m],
            cols,
            basis: (0..m).collect(),
            is_basic: vec![true; m],
            binv,
            feasible: m == 0,
            anti_cycling,
            bland: false,
            perturbed: false,
            perturbations: 0,
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
            degenerate_run: 0,
            since_refactor: 0,
            pivots: 0,
            pivot_cap: 0,
            restarts: 0,
            reset_pending: false,
        }
    }

    pub(crate) fn num_real_columns(&self) -> usize {
        self.cols.len() - self.m
    }

    /// Appends a column; returns its index among real columns.
    pub(crate) fn add_column(&mut self, col: Vec<f64>, cost: f64) -> usize {
        debug_assert_eq!(col.len(), self.m);
        self.cols.push(col);
        self.costs.push(cost);
        self.is_basic.push(false);
        self.cols.len() - 1 - self.m
    }

    /// Whether a real column with this cost lies within `tol` (max-norm) of `col`.
    pub(crate) fn has_column_near(&self, col: &[f64], cost: f64, tol: f64) -> bool {
        (self.m..self.cols.len()).any(|j| {
            self.costs[j] == cost
                && self.cols[j]
                    .iter()
                    .zip(col)
                    .all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    fn is_artificial(&self, j: usize) -> bool {
        j < self.m
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.cols[j][i];
            }
        }
        match invert(m, a) {
            Some(inv) => self.binv = inv,
            None => {
                // numerically singular basis: restart from the artificial basis
                self.restarts += 1;
                if self.restarts > MAX_RESTARTS {
                    return Err(Error::Internal(
                        "simplex basis repeatedly became singular".into(),
                    ));
                }
                self.reset_basis();
                return Ok(());
            }
        }
        self.xb = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| self.binv[i * m + k] * self.rhs[k])
                    .sum::<f64>()
            })
            .map(|x: f64| {
                if x < 0.0 && x > -PRIMAL_FEASIBILITY_TOL {
                    0.0
                } else {
                    x
                }
            })
            .collect();
        self.since_refactor = 0;
        Ok(())
    }

    fn reset_basis(&mut self) {
        let m = self.m;
        self.is_basic.iter_mut().for_each(|b| *b = false);
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.basis[i] = i;
            self.is_basic[i] = true;
            self.binv[i * m + i] = self.cols[i][i];
        }
        self.rhs = self.b.clone();
        self.perturbed = false;
        self.xb = self.b.iter().map(|x| x.abs()).collect();
        self.feasible = m == 0;
        self.since_refactor = 0;
        self.degenerate_run = 0;
        self.reset_pending = true;
    }

    fn multipliers(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = costs[j];
            if c != 0.0 {
                for k in 0..m {
                    pi[k] += c * self.binv[i * m + k];
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, costs: &[f64], pi: &[f64], j: usize) -> f64 {
        costs[j]
            - pi.iter()
                .zip(&self.cols[j])
                .map(|(p, a)| p * a)
                .sum::<f64>()
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let col = &self.cols[j];
        (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * col[k]).sum())
            .collect()
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &[f64]) {
        let m = self.m;
        let theta = self.xb[r] / alpha[r];
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * alpha[i];
                if self.xb[i] < 0.0 && self.xb[i] > -2.0 * HARRIS_SLACK {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                }
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.pivots += 1;
        self.since_refactor += 1;
        if theta.abs() < 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
    }

    /// Shifts every basic value up by a small random amount and moves the
    /// right-hand side along, so the current basis stays feasible.
    fn perturb(&mut self) {
        let m = self.m;
        for i in 0..m {
            let eps = PERTURBATION * (1.0 + self.xb[i].abs()) * self.rng.random_range(0.5..1.0);
            self.xb[i] += eps;
            let col = &self.cols[self.basis[i]];
            for k in 0..m {
                self.rhs[k] += eps * col[k];
            }
        }
        self.perturbed = true;
        self.perturbations += 1;
        self.degenerate_run = 0;
    }

    fn on_degenerate_run(&mut self, phase_two: bool) {
        if self.degenerate_run <= DEGENERATE_RUN || self.bland {
            return;
        }
        let may_perturb = self.anti_cycling == AntiCycling::Perturb
            && phase_two
            && !self.perturbed
            && self.perturbations < MAX_PERTURBATIONS;
        if may_perturb {
            self.perturb();
        } else {
            self.bland = true;
        }
    }

    /// Runs simplex iterations under `costs`. `phase_two` bars artificials from
    /// entering and keeps basic artificials pinned at zero.
    fn iterate(&mut self, costs: &[f64], phase_two: bool) -> Result<LpStatus> {
        let mut verified_once = false;
        loop {
            if self.pivots > self.pivot_cap {
                return Err(Error::Convergence {
                    message: format!("simplex stalled after {} pivots", self.pivots),
                    lower: f64::NAN,
                    upper: f64::NAN,
                });
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                if self.reset_pending {
                    return Ok(LpStatus::Optimal);
                }
            }
            let pi = self.multipliers(costs);
            let mut entering: Option<(usize, f64)> = None;
            for j in self.m..self.cols.len() {
                if self.is_basic[j] {
                    continue;
                }
                let d = self.reduced_cost(costs, &pi, j);
                if d < -OPT_TOL {
                    if self.bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d < best) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((j, _)) = entering else {
                if verified_once || self.since_refactor == 0 {
                    return Ok(LpStatus::Optimal);
                }
                self.refactor()?;
                if self.reset_pending {
                    return Ok(LpStatus::Optimal);
                }
                verified_once = true;
                continue;
            };
            verified_once = false;

            let alpha = self.ftran(j);
            let Some(r) = self.ratio_test(&alpha, phase_two) else {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    if self.reset_pending {
                        return Ok(LpStatus::Optimal);
                    }
                    continue;
                }
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(r, j, &alpha);
            self.on_degenerate_run(phase_two);
        }
    }

    /// Harris two-pass ratio test: bound the step with a small feasibility
    /// slack, then take the largest pivot among rows within that bound.
    /// Under Bland's rule: exact minimum ratio, ties to the lowest column.
    /// Basic artificials in phase two leave at step zero.
    fn ratio_test(&self, alpha: &[f64], phase_two: bool) -> Option<usize> {
        let scale = alpha.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        let piv_tol = PIVOT_TOL * scale;
        if phase_two {
            let art = (0..self.m)
                .filter(|&i| self.is_artificial(self.basis[i]) && alpha[i].abs() > piv_tol)
                .max_by(|&a, &b| alpha[a].abs().total_cmp(&alpha[b].abs()));
            if art.is_some() {
                return art;
            }
        }
        if self.bland {
            let rows: Vec<usize> = (0..self.m).filter(|&i| alpha[i] > 1e-7 * scale).collect();
            let ratio = |i: usize| self.xb[i].max(0.0) / alpha[i];
            let theta = rows.iter().map(|&i| ratio(i)).fold(f64::INFINITY, f64::min);
            return rows
                .into_iter()
                .filter(|&i| ratio(i) <= theta)
                .min_by_key(|&i| self.basis[i]);
        }
        let rows: Vec<usize> = (0..self.m).filter(|&i| alpha[i] > piv_tol).collect();
        let bound = rows
            .iter()
            .map(|&i| (self.xb[i].max(0.0) + HARRIS_SLACK) / alpha[i])
            .fold(f64::INFINITY, f64::min);
        rows.into_iter()
            .filter(|&i| self.xb[i].max(0.0) / alpha[i] <= bound)
            .max_by(|&a, &b| alpha[a].total_cmp(&alpha[b]))
    }

    /// Dual simplex pivots from a dual-feasible basis until the basic values
    /// are nonnegative. Returns whether that was reached.
    fn dual_cleanup(&mut self, costs: &[f64]) -> Result<bool> {
        let m = self.m;
        for _ in 0..(20 * m + 200) {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                if self.reset_pending {
                    return Ok(false);
                }
            }
            let Some(r) = (0..m).min_by(|&a, &b| self.xb[a].total_cmp(&self.xb[b])) else {
                return Ok(true);
            };
            if self.xb[r] >= -PRIMAL_FEASIBILITY_TOL {
                return Ok(true);
            }
            let pi = self.multipliers(costs);
            let row = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, f64, f64)> = None;
            for j in m..self.cols.len() {
                if self.is_basic[j] {
                    continue;
                }
                let a: f64 = row.iter().zip(&self.cols[j]).map(|(p, q)| p * q).sum();
                if a < -PIVOT_TOL {
                    let key = self.reduced_cost(costs, &pi, j).max(0.0) / -a;
                    let better = match best {
                        None => true,
                        Some((_, k, aa)) => key < k - 1e-15 || (key <= k + 1e-15 && -a > aa),
                    };
                    if better {
                        best = Some((j, key, -a));
                    }
                }
            }
            let Some((j, _, _)) = best else {
                return Ok(false);
            };
            let alpha = self.ftran(j);
            self.pivot(r, j, &alpha);
        }
        Ok(false)
    }

    /// Restores the true right-hand side and repairs primal feasibility.
    fn remove_perturbation(&mut self, costs: &[f64]) -> Result<()> {
        self.rhs = self.b.clone();
        self.perturbed = false;
        self.refactor()?;
        if self.reset_pending {
            return Ok(());
        }
        if !self.dual_cleanup(costs)? && !self.reset_pending {
            // give up on this basis; Bland from scratch terminates
            self.bland = true;
            self.reset_basis();
        }
        Ok(())
    }

    pub(crate) fn solve(&mut self) -> Result<LpStatus> {
        self.pivot_cap = self.pivots + 200 * (self.m + self.cols.len()) + 10_000;
        self.perturbations = 0;
        self.bland = false;
        self.degenerate_run = 0;
        loop {
            let status = self.solve_once()?;
            if self.reset_pending {
                self.reset_pending = false;
                continue;
            }
            return Ok(status);
        }
    }

    fn solve_once(&mut self) -> Result<LpStatus> {
        if !self.feasible {
            let phase1: Vec<f64> = (0..self.cols.len())
                .map(|j| if self.is_artificial(j) { 1.0 } else { 0.0 })
                .collect();
            self.iterate(&phase1, false)?;
            self.refactor()?;
            if self.reset_pending {
                return Ok(LpStatus::Infeasible);
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&j, _)| self.is_artificial(j))
                .map(|(_, x)| x.abs())
                .sum();
            let scale = 1.0 + self.b.iter().map(|x| x.abs()).sum::<f64>();
            if infeas > 1e-8 * scale {
                return Ok(LpStatus::Infeasible);
            }
            self.feasible = true;
            if self.anti_cycling == AntiCycling::Perturb {
                self.bland = false;
            }
        }
        self.drive_out_artificials();
        let costs = self.costs.clone();
        loop {
            let status = self.iterate(&costs, true)?;
            if self.reset_pending || status != LpStatus::Optimal {
                return Ok(status);
            }
            if !self.perturbed {
                break;
            }
            self.remove_perturbation(&costs)?;
            if self.reset_pending {
                return Ok(status);
            }
        }
        self.refactor()?;
        if self.reset_pending {
            return Ok(LpStatus::Optimal);
        }
        let pi = self.multipliers(&costs);
        let worst = (self.m..self.cols.len())
            .map(|j| self.reduced_cost(&costs, &pi, j))
            .fold(0.0f64, f64::min);
        if worst < -DUAL_FEASIBILITY_TOL {
            return Err(Error::Internal(format!(
                "optimal basis fails dual feasibility by {worst:e}"
            )));
        }
        Ok(LpStatus::Optimal)
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let m = self.m;
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let cand = (m..self.cols.len()).find(|&j| {
                !self.is_basic[j]
                    && row
                        .iter()
                        .zip(&self.cols[j])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        .abs()
                        > 1e-7
            });
            if let Some(j) = cand {
                let alpha = self.ftran(j);
                self.pivot(r, j, &alpha);
            }
        }
    }

    pub(crate) fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&j, x)| self.costs[j] * x)
            .sum()
    }

    /// Values of the real columns.
    pub(crate) fn primal(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.num_real_columns()];
        for (&j, &x) in self.basis.iter().zip(&self.xb) {
            if !self.is_artificial(j) {
                y[j - self.m] = x;
            }
        }
        y
    }

    /// Simplex multipliers `π = c_B B⁻¹`, one per row.
    pub(crate) fn duals(&self) -> Vec<f64> {
        self.multipliers(&self.costs)
    }
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(n: usize, mut a: Vec<f64>) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv =
            (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-13 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// `maximize objective·x` subject to `rows` and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, bounds: Vec<VarBound>) -> Self {
        LinearProgram {
            objective,
            rows: vec![],
            bounds,
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) {
        self.rows.push(Row { coeffs, kind, rhs });
    }

    fn check(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::Shape(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.objective.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("objective has non-finite entries".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::Shape(format!(
                    "row {k} has {} coefficients",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("row {k} has non-finite entries")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective value, when `status` is optimal.
    pub optimum: Option<f64>,
    /// Optimal point in the original variables, when `status` is optimal.
    pub solution: Vec<f64>,
}

/// Solves a general LP by conversion to standard form (split free variables,
/// slack and surplus columns).
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.check()?;
    let n = lp.objective.len();
    let m = lp.rows.len();
    let mut std = StandardLp::new(lp.rows.iter().map(|r| r.rhs).collect(), AntiCycling::Bland);
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    for v in 0..n {
        let col: Vec<f64> = lp.rows.iter().map(|r| r.coeffs[v]).collect();
        let neg: Vec<f64> = col.iter().map(|x| -x).collect();
        let plus = std.add_column(col, -lp.objective[v]);
        let minus = match lp.bounds[v] {
            VarBound::NonNegative => None,
            VarBound::Free => Some(std.add_column(neg, lp.objective[v])),
        };
        var_cols.push((plus, minus));
    }
    for (k, row) in lp.rows.iter().enumerate() {
        let sign = match row.kind {
            RowKind::Le => 1.0,
            RowKind::Ge => -1.0,
            RowKind::Eq => continue,
        };
        let mut col = vec![0.0; m];
        col[k] = sign;
        std.add_column(col, 0.0);
    }
    let status = std.solve()?;
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            status,
            optimum: None,
            solution: vec![],
        });
    }
    let y = std.primal();
    let solution: Vec<f64> = var_cols
        .iter()
        .map(|&(p, q)| y[p] - q.map_or(0.0, |q| y[q]))
        .collect();
    let optimum = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    Ok(LpSolution {
        status,
        optimum: Some(optimum),
        solution,
    })
}
