//! Dense linear-programming core.
//!
//! Primal revised simplex over the standard-form conversion of
//! `min c'x  s.t.  A x = b, G x <= d`, with per-variable bounds,
//! two-phase start, Dantzig pricing switching to Bland's rule after
//! 50 * rows iterations, product-form basis updates, and an LU
//! refactorization every 64 pivots. Equality duals come straight from the
//! final basis (y = B^-T c_B), which downstream modules rely on for
//! potentials and calibration certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_inf;

const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    /// Objective vector c.
    pub objective: Vec<f64>,
    /// Equality rows A with right-hand side b.
    pub eq: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Inequality rows G with right-hand side d, meaning G x <= d.
    pub ineq: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    /// Per-variable (lower, upper); `None` means unbounded. Default free.
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        eq: Vec<Vec<f64>>,
        eq_rhs: Vec<f64>,
        ineq: Vec<Vec<f64>>,
        ineq_rhs: Vec<f64>,
    ) -> Result<Self> {
        let nvars = objective.len();
        let bounds = vec![(None, None); nvars];
        Self::with_bounds(objective, eq, eq_rhs, ineq, ineq_rhs, bounds)
    }

    pub fn with_bounds(
        objective: Vec<f64>,
        eq: Vec<Vec<f64>>,
        eq_rhs: Vec<f64>,
        ineq: Vec<Vec<f64>>,
        ineq_rhs: Vec<f64>,
        bounds: Vec<(Option<f64>, Option<f64>)>,
    ) -> Result<Self> {
        let nvars = objective.len();
        if nvars == 0 {
            return Err(Error::Input("LP needs at least one variable".into()));
        }
        if eq.len() != eq_rhs.len() || ineq.len() != ineq_rhs.len() {
            return Err(Error::Input("row/rhs count mismatch".into()));
        }
        if bounds.len() != nvars {
            return Err(Error::Input("bounds length must match variables".into()));
        }
        for row in eq.iter().chain(ineq.iter()) {
            if row.len() != nvars {
                return Err(Error::Input("row length must match variables".into()));
            }
        }
        let finite = |v: &f64| v.is_finite();
        if !objective.iter().all(finite)
            || !eq_rhs.iter().all(finite)
            || !ineq_rhs.iter().all(finite)
            || !eq.iter().chain(ineq.iter()).all(|r| r.iter().all(finite))
        {
            return Err(Error::Input("LP data must be finite".into()));
        }
        for (lo, hi) in &bounds {
            if let (Some(l), Some(h)) = (lo, hi) {
                if l > h {
                    return Err(Error::Input("lower bound exceeds upper bound".into()));
                }
            }
        }
        Ok(LinearProgram {
            objective,
            eq,
            eq_rhs,
            ineq,
            ineq_rhs,
            bounds,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Explicit dual: max b'y - d'lambda s.t. A'y - G'lambda = c, lambda >= 0,
    /// written as a minimization. Finite variable bounds are folded into the
    /// inequality block first.
    pub fn dual(&self) -> Result<LinearProgram> {
        let folded = self.fold_bounds();
        let n = folded.num_vars();
        let ne = folded.eq.len();
        let ni = folded.ineq.len();
        // Dual variables: y (ne, free) then lambda (ni, >= 0).
        let mut objective = Vec::with_capacity(ne + ni);
        objective.extend(folded.eq_rhs.iter().map(|b| -b));
        objective.extend(folded.ineq_rhs.iter().cloned());
        let mut eq = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(ne + ni);
            row.extend(folded.eq.iter().map(|r| r[j]));
            row.extend(folded.ineq.iter().map(|r| -r[j]));
            eq.push(row);
        }
        let eq_rhs = folded.objective.clone();
        let mut bounds = vec![(None, None); ne];
        bounds.extend(std::iter::repeat((Some(0.0), None)).take(ni));
        LinearProgram::with_bounds(objective, eq, eq_rhs, Vec::new(), Vec::new(), bounds)
    }

    fn fold_bounds(&self) -> LinearProgram {
        let n = self.num_vars();
        let mut ineq = self.ineq.clone();
        let mut ineq_rhs = self.ineq_rhs.clone();
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            if let Some(l) = lo {
                let mut row = vec![0.0; n];
                row[j] = -1.0;
                ineq.push(row);
                ineq_rhs.push(-l);
            }
            if let Some(h) = hi {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                ineq.push(row);
                ineq_rhs.push(*h);
            }
        }
        LinearProgram {
            objective: self.objective.clone(),
            eq: self.eq.clone(),
            eq_rhs: self.eq_rhs.clone(),
            ineq,
            ineq_rhs,
            bounds: vec![(None, None); n],
        }
    }

    /// Plain-text dump with sections OBJ/EQ/INEQ/BOUNDS for external
    /// cross-checking.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "OBJ").unwrap();
        writeln!(s, "{}", join(&self.objective)).unwrap();
        writeln!(s, "EQ").unwrap();
        for (row, rhs) in self.eq.iter().zip(&self.eq_rhs) {
            writeln!(s, "{} = {}", join(row), fmt_num(*rhs)).unwrap();
        }
        writeln!(s, "INEQ").unwrap();
        for (row, rhs) in self.ineq.iter().zip(&self.ineq_rhs) {
            writeln!(s, "{} <= {}", join(row), fmt_num(*rhs)).unwrap();
        }
        writeln!(s, "BOUNDS").unwrap();
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            let lo = lo.map_or("-inf".to_string(), |v| fmt_num(v));
            let hi = hi.map_or("+inf".to_string(), |v| fmt_num(v));
            writeln!(s, "x{j} in [{lo}, {hi}]").unwrap();
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.17e}")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Duals of the equality rows.
    pub y_eq: Vec<f64>,
    /// Duals of the inequality rows, nonnegative; the dual objective is
    /// b'y - d'lambda (+ bound terms).
    pub lambda_ineq: Vec<f64>,
    /// Multipliers of active finite bounds (one per variable, signed:
    /// positive pushes up from a lower bound, negative down from an upper).
    pub bound_duals: Vec<f64>,
    pub dual_objective: f64,
    /// max_i |lambda_i (d - Gx)_i| plus the bound counterpart.
    pub complementarity: f64,
    /// (entering column, leaving column) per pivot, for reproducibility
    /// checks.
    pub pivots: Vec<(usize, usize)>,
    pub iterations: usize,
}

/// Solve an LP. Returns `Err(Error::Numerical)` on breakdown rather than a
/// silently wrong answer; `Infeasible`/`Unbounded` are reported in the
/// status with empty solution vectors.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    Simplex::new(lp)?.run()
}

// ---------------------------------------------------------------------------
// standard form conversion
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct SparseCol {
    entries: Vec<(usize, f64)>,
}

impl SparseCol {
    fn dot(&self, y: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * y[i]).sum()
    }
}

enum VarMap {
    Free { pos: usize, neg: usize },
    Shifted { col: usize, lo: f64 },
    Mirrored { col: usize, hi: f64 },
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    nrows: usize,
    n_eq: usize,
    n_ineq: usize,
    cols: Vec<SparseCol>,
    costs: Vec<f64>,
    rhs: Vec<f64>,
    row_sign: Vec<f64>,
    var_map: Vec<VarMap>,
    n_real: usize,
    art_of_row: Vec<Option<usize>>,

    basis: Vec<usize>,
    in_basis: Vec<bool>,
    xb: Vec<f64>,
    lu: Lu,
    etas: Vec<(usize, Vec<f64>)>,
    pivots: Vec<(usize, usize)>,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Result<Self> {
        let n = lp.num_vars();
        // Double-bounded variables get the lower-bound shift plus an extra
        // cap row x_j <= hi (in original variables; the shift below rewrites
        // it to z <= hi - lo).
        let mut extra_rows: Vec<(usize, f64)> = Vec::new();
        for (j, (lo, hi)) in lp.bounds.iter().enumerate() {
            if let (Some(_), Some(h)) = (lo, hi) {
                extra_rows.push((j, *h));
            }
        }
        let n_eq = lp.eq.len();
        let n_ineq = lp.ineq.len() + extra_rows.len();
        let nrows = n_eq + n_ineq;
        if nrows == 0 {
            return Err(Error::Input("LP has no constraints".into()));
        }

        // Assemble structural columns in original row order.
        let mut var_map = Vec::with_capacity(n);
        let mut cols: Vec<SparseCol> = Vec::new();
        let mut costs: Vec<f64> = Vec::new();
        let mut rhs: Vec<f64> = Vec::with_capacity(nrows);
        rhs.extend_from_slice(&lp.eq_rhs);
        rhs.extend_from_slice(&lp.ineq_rhs);
        for &(_, cap) in &extra_rows {
            rhs.push(cap);
        }

        let column_of = |j: usize| -> SparseCol {
            let mut entries = Vec::new();
            for (i, row) in lp.eq.iter().enumerate() {
                if row[j] != 0.0 {
                    entries.push((i, row[j]));
                }
            }
            for (i, row) in lp.ineq.iter().enumerate() {
                if row[j] != 0.0 {
                    entries.push((n_eq + i, row[j]));
                }
            }
            for (k, &(var, _)) in extra_rows.iter().enumerate() {
                if var == j {
                    entries.push((n_eq + lp.ineq.len() + k, 1.0));
                }
            }
            SparseCol { entries }
        };

        for j in 0..n {
            let base = column_of(j);
            match lp.bounds[j] {
                (None, None) => {
                    let pos = cols.len();
                    cols.push(base.clone());
                    costs.push(lp.objective[j]);
                    let neg = cols.len();
                    cols.push(SparseCol {
                        entries: base.entries.iter().map(|&(i, v)| (i, -v)).collect(),
                    });
                    costs.push(-lp.objective[j]);
                    var_map.push(VarMap::Free { pos, neg });
                }
                (Some(lo), _) => {
                    // x = lo + z (double bounds got their cap row above)
                    for &(i, v) in &base.entries {
                        rhs[i] -= v * lo;
                    }
                    let col = cols.len();
                    cols.push(base);
                    costs.push(lp.objective[j]);
                    var_map.push(VarMap::Shifted { col, lo });
                }
                (None, Some(hi)) => {
                    // x = hi - z
                    for &(i, v) in &base.entries {
                        rhs[i] -= v * hi;
                    }
                    let col = cols.len();
                    cols.push(SparseCol {
                        entries: base.entries.iter().map(|&(i, v)| (i, -v)).collect(),
                    });
                    costs.push(-lp.objective[j]);
                    var_map.push(VarMap::Mirrored { col, hi });
                }
            }
        }

        // Slacks for every inequality row.
        let mut slack_cols = Vec::with_capacity(n_ineq);
        for i in 0..n_ineq {
            let col = cols.len();
            cols.push(SparseCol {
                entries: vec![(n_eq + i, 1.0)],
            });
            costs.push(0.0);
            slack_cols.push(col);
        }

        // Normalize rhs >= 0.
        let mut row_sign = vec![1.0; nrows];
        for i in 0..nrows {
            if rhs[i] < 0.0 {
                row_sign[i] = -1.0;
                rhs[i] = -rhs[i];
                for c in cols.iter_mut() {
                    for e in c.entries.iter_mut() {
                        if e.0 == i {
                            e.1 = -e.1;
                        }
                    }
                }
            }
        }

        let n_real = cols.len();

        // Initial basis: positive slack where available, artificial otherwise.
        let mut basis = Vec::with_capacity(nrows);
        let mut art_of_row = vec![None; nrows];
        for i in 0..nrows {
            let slack_ok = i >= n_eq && row_sign[i] > 0.0;
            if slack_ok {
                basis.push(slack_cols[i - n_eq]);
            } else {
                let col = cols.len();
                cols.push(SparseCol {
                    entries: vec![(i, 1.0)],
                });
                costs.push(0.0);
                art_of_row[i] = Some(col);
                basis.push(col);
            }
        }

        let mut in_basis = vec![false; cols.len()];
        for &b in &basis {
            in_basis[b] = true;
        }

        let xb = rhs.clone();
        Ok(Simplex {
            lp,
            nrows,
            n_eq,
            n_ineq,
            cols,
            costs,
            rhs,
            row_sign,
            var_map,
            n_real,
            art_of_row,
            basis,
            in_basis,
            xb,
            lu: Lu::identity(nrows),
            etas: Vec::new(),
            pivots: Vec::new(),
            iterations: 0,
        })
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.nrows;
        let mut dense = vec![0.0; n * n];
        for (r, &col) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[col].entries {
                dense[i * n + r] = v;
            }
        }
        self.lu = Lu::factorize(n, dense).ok_or_else(|| {
            Error::Numerical("singular basis during refactorization".into())
        })?;
        self.etas.clear();
        self.xb = self.solve_b(&self.rhs);
        Ok(())
    }

    fn solve_b(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(b);
        for (r, w) in &self.etas {
            let xr = x[*r] / w[*r];
            for i in 0..x.len() {
                if i == *r {
                    continue;
                }
                x[i] -= w[i] * xr;
            }
            x[*r] = xr;
        }
        x
    }

    fn solve_bt(&self, c: &[f64]) -> Vec<f64> {
        let mut z = c.to_vec();
        for (r, w) in self.etas.iter().rev() {
            let mut acc = z[*r];
            for i in 0..z.len() {
                if i == *r {
                    continue;
                }
                acc -= w[i] * z[i];
            }
            z[*r] = acc / w[*r];
        }
        self.lu.solve_transpose(&z)
    }

    /// One simplex phase over the given costs. `allow` filters columns
    /// eligible to enter.
    fn phase(&mut self, costs: &[f64], allow: &dyn Fn(usize) -> bool) -> Result<PhaseEnd> {
        let bland_after = 50 * self.nrows;
        let max_iters = 20_000 + 400 * self.nrows;
        let mut local_iters = 0usize;
        self.refactor()?;
        loop {
            if local_iters > max_iters {
                return Err(Error::Numerical(format!(
                    "iteration limit reached ({max_iters}) with {} rows",
                    self.nrows
                )));
            }
            let cb: Vec<f64> = self.basis.iter().map(|&b| costs[b]).collect();
            let y = self.solve_bt(&cb);
            // Pricing.
            let bland = local_iters >= bland_after;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.in_basis[j] || !allow(j) {
                    continue;
                }
                let dj = costs[j] - self.cols[j].dot(&y);
                if dj < -OPT_TOL {
                    if bland {
                        entering = Some((j, dj));
                        break;
                    }
                    match entering {
                        Some((_, best)) if dj >= best => {}
                        _ => entering = Some((j, dj)),
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let aq: Vec<f64> = {
                let mut dense = vec![0.0; self.nrows];
                for &(i, v) in &self.cols[q].entries {
                    dense[i] = v;
                }
                self.solve_b(&dense)
            };
            // Ratio test; ties go to the lowest row index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.nrows {
                if aq[i] > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / aq[i];
                    match leave {
                        Some((_, best)) if ratio >= best - 1e-12 => {}
                        _ => leave = Some((i, ratio)),
                    }
                }
            }
            let Some((r, t)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            // Pivot.
            for i in 0..self.nrows {
                self.xb[i] -= aq[i] * t;
            }
            self.xb[r] = t;
            let leaving = self.basis[r];
            self.in_basis[leaving] = false;
            self.in_basis[q] = true;
            self.basis[r] = q;
            self.pivots.push((q, leaving));
            self.etas.push((r, aq));
            self.iterations += 1;
            local_iters += 1;
            if self.etas.len() >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }

    fn run(mut self) -> Result<LpSolution> {
        // Phase 1: drive artificials to zero.
        let needs_phase1 = self.art_of_row.iter().any(|a| a.is_some());
        if needs_phase1 {
            let mut costs1 = vec![0.0; self.cols.len()];
            for a in self.art_of_row.iter().flatten() {
                costs1[*a] = 1.0;
            }
            match self.phase(&costs1.clone(), &|_| true)? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => {
                    return Err(Error::Numerical(
                        "phase-1 objective unbounded below zero".into(),
                    ))
                }
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(b, _)| costs1[**b] > 0.0)
                .map(|(_, v)| v.max(0.0))
                .sum();
            if infeas > PHASE1_TOL {
                return Ok(self.report_infeasible());
            }
        }

        // Phase 2 over real columns; artificials may linger basic at zero but
        // never price in.
        let mut costs2 = vec![0.0; self.cols.len()];
        costs2[..self.n_real].copy_from_slice(&self.costs[..self.n_real]);
        let n_real = self.n_real;
        let status = self.phase(&costs2.clone(), &move |j| j < n_real)?;
        match status {
            PhaseEnd::Unbounded => Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: Vec::new(),
                objective: 0.0,
                y_eq: Vec::new(),
                lambda_ineq: Vec::new(),
                bound_duals: Vec::new(),
                dual_objective: 0.0,
                complementarity: 0.0,
                pivots: std::mem::take(&mut self.pivots),
                iterations: self.iterations,
            }),
            PhaseEnd::Optimal => self.report_optimal(&costs2),
        }
    }

    fn report_infeasible(mut self) -> LpSolution {
        LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: 0.0,
            y_eq: Vec::new(),
            lambda_ineq: Vec::new(),
            bound_duals: Vec::new(),
            dual_objective: 0.0,
            complementarity: 0.0,
            pivots: std::mem::take(&mut self.pivots),
            iterations: self.iterations,
        }
    }

    fn report_optimal(mut self, costs: &[f64]) -> Result<LpSolution> {
        // Recover z, then x.
        let mut z = vec![0.0; self.cols.len()];
        for (r, &b) in self.basis.iter().enumerate() {
            z[b] = self.xb[r];
        }
        let n = self.lp.num_vars();
        let mut x = vec![0.0; n];
        for (j, vm) in self.var_map.iter().enumerate() {
            x[j] = match vm {
                VarMap::Free { pos, neg } => z[*pos] - z[*neg],
                VarMap::Shifted { col, lo } => lo + z[*col],
                VarMap::Mirrored { col, hi } => hi - z[*col],
            };
        }
        let objective: f64 = self
            .lp
            .objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum();

        // Duals from the final basis.
        let cb: Vec<f64> = self.basis.iter().map(|&b| costs[b]).collect();
        let y_std = self.solve_bt(&cb);
        let y_orig: Vec<f64> = (0..self.nrows)
            .map(|i| self.row_sign[i] * y_std[i])
            .collect();
        let y_eq = y_orig[..self.n_eq].to_vec();
        let lambda_all: Vec<f64> = (0..self.n_ineq)
            .map(|i| (-y_orig[self.n_eq + i]).max(0.0))
            .collect();
        let lambda_ineq = lambda_all[..self.lp.ineq.len()].to_vec();

        // Bound multipliers from reduced costs of shifted/mirrored columns;
        // the extra cap rows cover upper bounds of doubly bounded variables.
        let mut bound_duals = vec![0.0; n];
        for (j, vm) in self.var_map.iter().enumerate() {
            match vm {
                VarMap::Free { .. } => {}
                VarMap::Shifted { col, .. } => {
                    let rc = costs[*col] - self.cols[*col].dot(&y_std);
                    bound_duals[j] = rc.max(0.0);
                }
                VarMap::Mirrored { col, .. } => {
                    let rc = costs[*col] - self.cols[*col].dot(&y_std);
                    bound_duals[j] = -rc.max(0.0);
                }
            }
        }
        let mut cap_row = self.n_eq + self.lp.ineq.len();
        for (j, (lo, hi)) in self.lp.bounds.iter().enumerate() {
            if let (Some(_), Some(_)) = (lo, hi) {
                let lam = lambda_all[cap_row - self.n_eq];
                if lam > 0.0 {
                    bound_duals[j] -= lam;
                }
                cap_row += 1;
            }
        }

        // Dual objective: b'y - d'lambda + bound terms.
        let mut dual_objective: f64 = self
            .lp
            .eq_rhs
            .iter()
            .zip(&y_eq)
            .map(|(b, y)| b * y)
            .sum::<f64>()
            - self
                .lp
                .ineq_rhs
                .iter()
                .zip(&lambda_ineq)
                .map(|(d, l)| d * l)
                .sum::<f64>();
        for (j, (lo, hi)) in self.lp.bounds.iter().enumerate() {
            let bd = bound_duals[j];
            if bd > 0.0 {
                if let Some(l) = lo {
                    dual_objective += l * bd;
                }
            } else if bd < 0.0 {
                if let Some(h) = hi {
                    dual_objective += h * bd;
                }
            }
        }

        // Complementarity residual.
        let mut comp: f64 = 0.0;
        for (i, (row, d)) in self.lp.ineq.iter().zip(&self.lp.ineq_rhs).enumerate() {
            let slack = d - row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>();
            comp = comp.max((lambda_ineq[i] * slack).abs());
        }
        for (j, (lo, hi)) in self.lp.bounds.iter().enumerate() {
            let bd = bound_duals[j];
            if bd > 0.0 {
                if let Some(l) = lo {
                    comp = comp.max((bd * (x[j] - l)).abs());
                }
            } else if bd < 0.0 {
                if let Some(h) = hi {
                    comp = comp.max((bd * (h - x[j])).abs());
                }
            }
        }

        self.verify(&x, objective, dual_objective)?;

        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            y_eq,
            lambda_ineq,
            bound_duals,
            dual_objective,
            complementarity: comp,
            pivots: std::mem::take(&mut self.pivots),
            iterations: self.iterations,
        })
    }

    /// Post-solve certification of the LpSolution contract; a violation is a
    /// numerical failure, never a silent wrong answer.
    fn verify(&self, x: &[f64], objective: f64, dual_objective: f64) -> Result<()> {
        let scale = 1.0
            + norm_inf(&self.lp.eq_rhs).max(norm_inf(&self.lp.ineq_rhs))
            + norm_inf(x);
        for (row, b) in self.lp.eq.iter().zip(&self.lp.eq_rhs) {
            let r = row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b;
            if r.abs() > 1e-8 * scale {
                return Err(Error::Numerical(format!(
                    "equality residual {r:.3e} exceeds tolerance"
                )));
            }
        }
        for (row, d) in self.lp.ineq.iter().zip(&self.lp.ineq_rhs) {
            let r = row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - d;
            if r > 1e-8 * scale {
                return Err(Error::Numerical(format!(
                    "inequality violated by {r:.3e}"
                )));
            }
        }
        let gap = (objective - dual_objective).abs();
        if gap > 1e-7 * (1.0 + objective.abs()) {
            return Err(Error::Numerical(format!(
                "duality gap {gap:.3e} exceeds tolerance"
            )));
        }
        Ok(())
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

// ---------------------------------------------------------------------------
// dense LU with partial pivoting
// ---------------------------------------------------------------------------

struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn identity(n: usize) -> Self {
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            lu[i * n + i] = 1.0;
        }
        Lu {
            n,
            lu,
            perm: (0..n).collect(),
        }
    }

    fn factorize(n: usize, mut a: Vec<f64>) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut p = col;
            let mut best = a[perm[col] * n + col].abs();
            for r in col + 1..n {
                let v = a[perm[r] * n + col].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-12 {
                return None;
            }
            perm.swap(col, p);
            let prow = perm[col];
            let pivot = a[prow * n + col];
            for r in col + 1..n {
                let row = perm[r];
                let f = a[row * n + col] / pivot;
                if f != 0.0 {
                    a[row * n + col] = f;
                    for c in col + 1..n {
                        a[row * n + c] -= f * a[prow * n + c];
                    }
                } else {
                    a[row * n + col] = 0.0;
                }
            }
        }
        Some(Lu { n, lu: a, perm })
    }

    /// Solve B x = b.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = self.perm[i];
            let mut v = b[row];
            for c in 0..i {
                v -= self.lu[row * n + c] * y[c];
            }
            y[i] = v;
        }
        for i in (0..n).rev() {
            let row = self.perm[i];
            let mut v = y[i];
            for c in i + 1..n {
                v -= self.lu[row * n + c] * y[c];
            }
            y[i] = v / self.lu[row * n + i];
        }
        y
    }

    /// Solve B^T y = c.
    fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        // U^T z = c (forward), then L^T w = z (backward), y = P^T w.
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut v = c[i];
            for r in 0..i {
                v -= self.lu[self.perm[r] * n + i] * z[r];
            }
            z[i] = v / self.lu[self.perm[i] * n + i];
        }
        for i in (0..n).rev() {
            let mut v = z[i];
            for r in i + 1..n {
                v -= self.lu[self.perm[r] * n + i] * z[r];
            }
            z[i] = v;
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.perm[i]] = z[i];
        }
        y
    }
}

// ---------------------------------------------------------------------------
// brute-force reference optimum
// ---------------------------------------------------------------------------

/// Reference evaluator independent of the simplex path: enumerate candidate
/// vertices (active sets drawn from inequality rows and finite bounds, with
/// all equalities active), keep the best feasible objective. Exponential in
/// the variable count; meant for cross-checking small LPs only.
pub mod reference {
    use super::LinearProgram;
    use crate::error::{Error, Result};

    pub fn best_vertex(lp: &LinearProgram) -> Result<Option<(f64, Vec<f64>)>> {
        let folded = lp.fold_bounds();
        let n = folded.num_vars();
        let ne = folded.eq.len();
        if ne > n {
            return Err(Error::Input("more equalities than variables".into()));
        }
        let need = n - ne;
        let ni = folded.ineq.len();
        if need > ni {
            return Ok(None);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut idx: Vec<usize> = (0..need).collect();
        loop {
            let mut rows: Vec<Vec<f64>> = folded.eq.clone();
            let mut rhs: Vec<f64> = folded.eq_rhs.clone();
            for &i in &idx {
                rows.push(folded.ineq[i].clone());
                rhs.push(folded.ineq_rhs[i]);
            }
            if let Some(x) = crate::polytope::solve_square(&rows, &rhs) {
                let feasible = folded
                    .ineq
                    .iter()
                    .zip(&folded.ineq_rhs)
                    .all(|(row, d)| {
                        row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() <= d + 1e-7
                    })
                    && folded.eq.iter().zip(&folded.eq_rhs).all(|(row, b)| {
                        (row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - b).abs() <= 1e-7
                    });
                if feasible {
                    let obj: f64 = folded.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    match &best {
                        Some((bv, _)) if *bv <= obj => {}
                        _ => best = Some((obj, x)),
                    }
                }
            }
            if need == 0 || !next_combination(&mut idx, ni) {
                break;
            }
        }
        Ok(best)
    }

    fn next_combination(idx: &mut [usize], n: usize) -> bool {
        let k = idx.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_x_geq_one() {
        // min x s.t. x >= 1, i.e. -x <= -1.
        let lp = LinearProgram::new(
            vec![1.0],
            vec![],
            vec![],
            vec![vec![-1.0]],
            vec![-1.0],
        )
        .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.lambda_ineq[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective - sol.dual_objective).abs() < 1e-9);
    }

    #[test]
    fn abs_epigraph() {
        // min t s.t. t >= theta, t >= -theta, theta = 5. Vars (theta, t).
        let lp = LinearProgram::new(
            vec![0.0, 1.0],
            vec![vec![1.0, 0.0]],
            vec![5.0],
            vec![vec![1.0, -1.0], vec![-1.0, -1.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[1] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x <= -1 and x >= 1.
        let lp = LinearProgram::new(
            vec![1.0],
            vec![],
            vec![],
            vec![vec![1.0], vec![-1.0]],
            vec![-1.0, -1.0],
        )
        .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::new(vec![-1.0], vec![], vec![], vec![vec![-1.0]], vec![0.0])
            .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_and_duals() {
        // min -x - 2y s.t. x + y <= 3, 0 <= x <= 2, 0 <= y <= 2.
        let lp = LinearProgram::with_bounds(
            vec![-1.0, -2.0],
            vec![],
            vec![],
            vec![vec![1.0, 1.0]],
            vec![3.0],
            vec![(Some(0.0), Some(2.0)), (Some(0.0), Some(2.0))],
        )
        .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] - 2.0).abs() < 1e-9);
        assert!((sol.objective + 5.0).abs() < 1e-9);
        assert!((sol.objective - sol.dual_objective).abs() < 1e-7);
    }

    #[test]
    fn dual_lp_matches() {
        let lp = LinearProgram::new(
            vec![2.0, 3.0, 1.0],
            vec![vec![1.0, 1.0, 1.0]],
            vec![4.0],
            vec![
                vec![-1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, -1.0],
                vec![1.0, 2.0, 0.0],
            ],
            vec![0.0, 0.0, 0.0, 5.0],
        )
        .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let dual = lp.dual().unwrap();
        let dsol = solve_lp(&dual).unwrap();
        assert_eq!(dsol.status, LpStatus::Optimal);
        // max of the dual = -min of its negation
        assert!((sol.objective + dsol.objective).abs() < 1e-7);
    }

    #[test]
    fn pivot_trace_reproducible() {
        let lp = LinearProgram::new(
            vec![-3.0, -5.0],
            vec![],
            vec![],
            vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            vec![4.0, 12.0, 18.0],
        )
        .unwrap();
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a.pivots, b.pivots);
        assert!((a.objective + 36.0).abs() < 1e-9);
    }

    #[test]
    fn dump_has_sections() {
        let lp = LinearProgram::new(vec![1.0], vec![], vec![], vec![vec![-1.0]], vec![-1.0])
            .unwrap();
        let s = lp.dump();
        for section in ["OBJ", "EQ", "INEQ", "BOUNDS"] {
            assert!(s.contains(section));
        }
    }
}
