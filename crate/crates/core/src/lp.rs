//! Dense bounded-variable primal simplex.
//!
//! Solves `max c.x` subject to `A_eq x = b_eq`, `A_le x <= b_le` and
//! `lo <= x <= hi` (infinite bounds allowed). The tableau is dense; rows are
//! supplied sparse because the trajectory programs are banded.
//!
//! Phase 1 minimises the sum of artificial variables; phase 2 then fixes the
//! artificials at zero. Non-basic variables sit at a finite bound, or at zero
//! when free. Bland's rule (lowest eligible index, ties in the ratio test to
//! the lowest basic index) keeps the method finite.

use thiserror::Error;

/// Relative feasibility tolerance.
pub const EPS_LP: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {0} has lower bound above upper bound")]
    Bounds(usize),
}

/// A sparse row `sum coeffs[k].1 * x[coeffs[k].0]`.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_eq: Vec<SparseRow>,
    pub b_eq: Vec<f64>,
    pub a_le: Vec<SparseRow>,
    pub b_le: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `n` variables, all non-negative, zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: SparseRow, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn add_le(&mut self, row: SparseRow, rhs: f64) {
        self.a_le.push(row);
        self.b_le.push(rhs);
    }

    /// Builds rows from dense coefficient vectors.
    pub fn dense_row(coeffs: &[f64]) -> SparseRow {
        coeffs.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(j, &a)| (j, a)).collect()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{n} variables but {} / {} bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.a_eq.len() != self.b_eq.len() || self.a_le.len() != self.b_le.len() {
            return Err(LpError::Dimension("row count differs from right-hand side length".into()));
        }
        for row in self.a_eq.iter().chain(self.a_le.iter()) {
            if let Some(&(j, _)) = row.iter().find(|&&(j, _)| j >= n) {
                return Err(LpError::Dimension(format!("column {j} out of range")));
            }
        }
        if let Some(j) = (0..n).find(|&j| self.lower[j] > self.upper[j]) {
            return Err(LpError::Bounds(j));
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &SparseRow| row.iter().map(|&(j, a)| a * x[j]).sum::<f64>();
        let mut worst: f64 = 0.0;
        for (row, &b) in self.a_eq.iter().zip(&self.b_eq) {
            worst = worst.max((dot(row) - b).abs());
        }
        for (row, &b) in self.a_le.iter().zip(&self.b_le) {
            worst = worst.max(dot(row) - b);
        }
        for ((&v, &lo), &hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The iteration cap was hit; `x` is not a certified optimum.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    /// Lowest-index improving column.
    Bland,
    /// Largest reduced cost, dropping to Bland after a run of degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub pricing: Pricing,
    /// Iteration cap as a multiple of `rows + cols`.
    pub cap_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { pricing: Pricing::Bland, cap_factor: 50 }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: SolverOptions) -> Result<LpSolution, LpError> {
    lp.check()?;
    let mut t = Tableau::build(lp);
    let cap = opts.cap_factor * (t.m + lp.num_vars()).max(1);
    let mut iterations = 0;

    if t.n_art > 0 {
        let c1: Vec<f64> = (0..t.ncols).map(|j| if t.is_art(j) { -1.0 } else { 0.0 }).collect();
        t.set_objective(&c1);
        match t.run(opts.pricing, cap, &mut iterations) {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase 1 objective is bounded"),
            Outcome::Stalled => return Ok(t.solution(lp, LpStatus::Stalled, iterations)),
        }
        t.refresh_values();
        let infeas: f64 = (0..t.ncols).filter(|&j| t.is_art(j)).map(|j| t.value(j)).sum();
        let scale = 1.0 + lp.b_eq.iter().chain(&lp.b_le).fold(0.0f64, |m, b| m.max(b.abs()));
        if infeas > EPS_LP * scale {
            return Ok(t.solution(lp, LpStatus::Infeasible, iterations));
        }
        t.retire_artificials();
    }
    let mut c2 = vec![0.0; t.ncols];
    c2[..lp.num_vars()].copy_from_slice(&lp.objective);
    t.set_objective(&c2);
    let status = match t.run(opts.pricing, cap, &mut iterations) {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::Stalled => LpStatus::Stalled,
    };
    t.refresh_values();
    let mut sol = t.solution(lp, status, iterations);
    if sol.status == LpStatus::Optimal {
        let scale = 1.0 + sol.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if lp.max_violation(&sol.x) > EPS_LP * scale {
            sol.status = LpStatus::Stalled;
        }
    }
    Ok(sol)
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    n_art: usize,
    art_start: usize,
    /// Row-major `m x ncols` matrix `B^-1 A`.
    a: Vec<f64>,
    /// `B^-1 b`.
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when non-basic.
    row_of: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Values of non-basic columns (basic values live in `beta`).
    xval: Vec<f64>,
    beta: Vec<f64>,
    cost: Vec<f64>,
    /// Reduced costs `c_B B^-1 A_j - c_j`.
    d: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars();
        let m_eq = lp.a_eq.len();
        let m_le = lp.a_le.len();
        let m = m_eq + m_le;
        let start = |j: usize| {
            if lp.lower[j].is_finite() {
                lp.lower[j]
            } else if lp.upper[j].is_finite() {
                lp.upper[j]
            } else {
                0.0
            }
        };
        let x0: Vec<f64> = (0..n).map(start).collect();
        let rows: Vec<(&SparseRow, f64, bool)> = lp
            .a_eq
            .iter()
            .zip(&lp.b_eq)
            .map(|(r, &b)| (r, b, false))
            .chain(lp.a_le.iter().zip(&lp.b_le).map(|(r, &b)| (r, b, true)))
            .collect();
        let resid: Vec<f64> = rows.iter().map(|(r, b, _)| b - r.iter().map(|&(j, a)| a * x0[j]).sum::<f64>()).collect();
        // Slack-started `<=` rows need no artificial.
        let needs_art: Vec<bool> = rows.iter().zip(&resid).map(|((_, _, le), &res)| !(*le && res >= 0.0)).collect();
        let n_art = needs_art.iter().filter(|&&b| b).count();
        let art_start = n + m_le;
        let ncols = art_start + n_art;

        let mut a = vec![0.0; m * ncols];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut lo = vec![0.0; ncols];
        let mut hi = vec![f64::INFINITY; ncols];
        lo[..n].copy_from_slice(&lp.lower);
        hi[..n].copy_from_slice(&lp.upper);
        let mut xval = vec![0.0; ncols];
        xval[..n].copy_from_slice(&x0);
        let mut beta = vec![0.0; m];
        let mut next_art = art_start;
        let mut slack = n;
        for (i, (row, b, le)) in rows.iter().enumerate() {
            let sign = if needs_art[i] && resid[i] < 0.0 { -1.0 } else { 1.0 };
            let r = &mut a[i * ncols..(i + 1) * ncols];
            for &(j, v) in row.iter() {
                r[j] += sign * v;
            }
            rhs[i] = sign * b;
            if *le {
                r[slack] = sign;
                if !needs_art[i] {
                    basis[i] = slack;
                    beta[i] = resid[i];
                }
                slack += 1;
            }
            if needs_art[i] {
                r[next_art] = 1.0;
                basis[i] = next_art;
                beta[i] = resid[i].abs();
                next_art += 1;
            }
        }
        let mut row_of = vec![usize::MAX; ncols];
        for (i, &b) in basis.iter().enumerate() {
            row_of[b] = i;
        }
        Tableau {
            m,
            ncols,
            n_struct: n,
            n_art,
            art_start,
            a,
            rhs,
            basis,
            row_of,
            lo,
            hi,
            xval,
            beta,
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
        }
    }

    fn is_art(&self, j: usize) -> bool {
        j >= self.art_start
    }

    fn value(&self, j: usize) -> f64 {
        match self.row_of[j] {
            usize::MAX => self.xval[j],
            r => self.beta[r],
        }
    }

    fn set_objective(&mut self, c: &[f64]) {
        self.cost.copy_from_slice(c);
        self.d.iter_mut().zip(c).for_each(|(d, &cj)| *d = -cj);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
                for (d, &v) in self.d.iter_mut().zip(row) {
                    *d += cb * v;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Recomputes basic values from the current tableau to shed drift.
    fn refresh_values(&mut self) {
        for i in 0..self.m {
            let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
            let mut v = self.rhs[i];
            for (j, &aij) in row.iter().enumerate() {
                if aij != 0.0 && self.row_of[j] == usize::MAX {
                    v -= aij * self.xval[j];
                }
            }
            self.beta[i] = v;
        }
    }

    /// Pins artificials to zero for phase 2.
    fn retire_artificials(&mut self) {
        for j in self.art_start..self.ncols {
            self.hi[j] = 0.0;
            if self.row_of[j] == usize::MAX {
                self.xval[j] = 0.0;
            }
        }
    }

    /// Direction in which non-basic `j` improves the objective, if any.
    fn improving(&self, j: usize) -> Option<f64> {
        if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
            return None;
        }
        let dj = self.d[j];
        let x = self.xval[j];
        if dj < -COST_TOL && x < self.hi[j] {
            Some(1.0)
        } else if dj > COST_TOL && x > self.lo[j] {
            Some(-1.0)
        } else {
            None
        }
    }

    fn run(&mut self, pricing: Pricing, cap: usize, iterations: &mut usize) -> Outcome {
        let mut degenerate_run = 0usize;
        loop {
            if *iterations >= cap {
                return Outcome::Stalled;
            }
            let use_bland = pricing == Pricing::Bland || degenerate_run > 50;
            let entering = if use_bland {
                (0..self.ncols).find_map(|j| self.improving(j).map(|dir| (j, dir)))
            } else {
                let mut best: Option<(usize, f64)> = None;
                let mut best_score = 0.0;
                for j in 0..self.ncols {
                    if let Some(dir) = self.improving(j) {
                        let score = self.d[j].abs();
                        if score > best_score {
                            best_score = score;
                            best = Some((j, dir));
                        }
                    }
                }
                best
            };
            let Some((q, dir)) = entering else {
                return Outcome::Optimal;
            };
            *iterations += 1;

            // Harris two-pass ratio test: find the largest step that keeps
            // every basic variable within its bound plus a small tolerance,
            // then among the rows blocking within that step take the largest
            // pivot (ties to the lowest basic index).
            let harris = |alpha: f64, i: usize, tol: f64| -> (f64, bool) {
                let b = self.basis[i];
                if alpha > 0.0 {
                    ((self.beta[i] - self.lo[b] + tol) / alpha, false)
                } else {
                    ((self.hi[b] - self.beta[i] + tol) / -alpha, true)
                }
            };
            let mut relaxed = f64::INFINITY;
            for i in 0..self.m {
                let alpha = self.a[i * self.ncols + q] * dir;
                if alpha.abs() > PIVOT_TOL {
                    relaxed = relaxed.min(harris(alpha, i, FEAS_TOL).0);
                }
            }
            let mut step = self.hi[q] - self.lo[q];
            let mut leave: Option<usize> = None;
            let mut leave_to_upper = false;
            if relaxed < step {
                let mut best_alpha = 0.0;
                for i in 0..self.m {
                    let alpha = self.a[i * self.ncols + q] * dir;
                    if alpha.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let (limit, to_upper) = harris(alpha, i, 0.0);
                    if limit <= relaxed {
                        let better = alpha.abs() > best_alpha * (1.0 + 1e-12)
                            || (alpha.abs() >= best_alpha * (1.0 - 1e-12)
                                && leave.is_some_and(|r| self.basis[i] < self.basis[r]));
                        if leave.is_none() || better {
                            best_alpha = alpha.abs();
                            leave = Some(i);
                            leave_to_upper = to_upper;
                            step = limit.max(0.0);
                        }
                    }
                }
            }
            if !step.is_finite() {
                return Outcome::Unbounded;
            }
            degenerate_run = if step <= 1e-12 { degenerate_run + 1 } else { 0 };

            let delta = dir * step;
            for i in 0..self.m {
                let aiq = self.a[i * self.ncols + q];
                if aiq != 0.0 {
                    self.beta[i] -= aiq * delta;
                }
            }
            let new_q = self.xval[q] + delta;
            match leave {
                None => {
                    self.xval[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some(r) => {
                    let out = self.basis[r];
                    self.xval[out] = if leave_to_upper { self.hi[out] } else { self.lo[out] };
                    self.pivot(r, q);
                    self.beta[r] = new_q;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.a[r * nc + q];
        {
            let row = &mut self.a[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
        }
        self.rhs[r] /= piv;
        let nz: Vec<usize> = (0..nc).filter(|&j| self.a[r * nc + j] != 0.0).collect();
        let (rhs_r, rowr): (f64, Vec<f64>) = (self.rhs[r], nz.iter().map(|&j| self.a[r * nc + j]).collect());
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * nc..(i + 1) * nc];
            for (k, &j) in nz.iter().enumerate() {
                row[j] -= f * rowr[k];
            }
            row[q] = 0.0;
            self.rhs[i] -= f * rhs_r;
        }
        let f = self.d[q];
        if f != 0.0 {
            for (k, &j) in nz.iter().enumerate() {
                self.d[j] -= f * rowr[k];
            }
            self.d[q] = 0.0;
        }
        let out = self.basis[r];
        self.row_of[out] = usize::MAX;
        self.basis[r] = q;
        self.row_of[q] = r;
    }

    fn solution(&self, lp: &LinearProgram, status: LpStatus, iterations: usize) -> LpSolution {
        let x: Vec<f64> = (0..self.n_struct).map(|j| self.value(j)).collect();
        let objective_value = lp.objective_at(&x);
        LpSolution { status, x, objective_value, iterations }
    }
}

/// Exhaustive vertex enumeration for tiny programs (reference oracle).
///
/// Every vertex is the solution of `n` independent active constraints chosen
/// among the rows and finite bounds; equalities are enforced by the
/// feasibility check. Returns `None` when no vertex is feasible; the
/// caller must ensure the program is bounded (e.g. finite boxes).
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let mut cands: Vec<(Vec<f64>, f64)> = Vec::new();
    let dense = |row: &SparseRow| {
        let mut v = vec![0.0; n];
        for &(j, a) in row {
            v[j] += a;
        }
        v
    };
    for (row, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
        cands.push((dense(row), b));
    }
    for (row, &b) in lp.a_le.iter().zip(&lp.b_le) {
        cands.push((dense(row), b));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if lp.lower[j].is_finite() {
            cands.push((e.clone(), lp.lower[j]));
        }
        if lp.upper[j].is_finite() {
            cands.push((e, lp.upper[j]));
        }
    }
    let need = n;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick = Vec::new();
    fn choose(start: usize, need: usize, pool: usize, pick: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pick.len() == need {
            visit(pick);
            return;
        }
        for k in start..pool {
            pick.push(k);
            choose(k + 1, need, pool, pick, visit);
            pick.pop();
        }
    }
    let mut visit = |sel: &[usize]| {
        let (mut rows, mut rhs) = (Vec::new(), Vec::new());
        for &k in sel {
            rows.push(cands[k].0.clone());
            rhs.push(cands[k].1);
        }
        if let Some(x) = gauss_solve(rows, rhs) {
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if lp.max_violation(&x) <= 1e-9 * scale {
                let obj = lp.objective_at(&x);
                if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                    best = Some((obj, x));
                }
            }
        }
    };
    choose(0, need, cands.len(), &mut pick, &mut visit);
    best
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            if f != 0.0 {
                let (top, rest) = a.split_at_mut(i);
                for (dst, src) in rest[0][col..n].iter_mut().zip(&top[col][col..n]) {
                    *dst -= f * src;
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.upper[0] = 1.0;
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_textbook() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_le(vec![(0, 1.0), (1, 2.0)], 4.0);
        lp.add_le(vec![(0, 3.0), (1, 1.0)], 6.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
        assert!((s.objective_value - 2.8).abs() < 1e-9);
    }

    #[test]
    fn contradictory_constraints() {
        let mut lp = LinearProgram::new(1);
        lp.lower[0] = f64::NEG_INFINITY;
        lp.add_le(vec![(0, -1.0)], -1.0); // x >= 1
        lp.add_le(vec![(0, 1.0)], 0.0); // x <= 0
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_le(vec![(0, 1.0), (1, -1.0)], 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equalities_and_free_variables() {
        // max x - y, x + y = 2, x - 2y free, y in [-1, 3]
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, -1.0];
        lp.lower = vec![f64::NEG_INFINITY, -1.0];
        lp.upper = vec![f64::INFINITY, 3.0];
        lp.add_eq(vec![(0, 1.0), (1, 1.0)], 2.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9 && (s.x[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut lp = LinearProgram::new(2);
        lp.add_le(vec![(5, 1.0)], 1.0);
        assert!(matches!(solve(&lp), Err(LpError::Dimension(_))));
    }

    #[test]
    fn pricing_rules_agree() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![3.0, 2.0, 4.0];
        lp.upper = vec![4.0, 4.0, 4.0];
        lp.add_le(vec![(0, 1.0), (1, 1.0), (2, 2.0)], 4.0);
        lp.add_le(vec![(0, 2.0), (2, 3.0)], 5.0);
        lp.add_le(vec![(0, 2.0), (1, 1.0), (2, 3.0)], 7.0);
        let a = solve(&lp).unwrap();
        let b = solve_with(&lp, SolverOptions { pricing: Pricing::Dantzig, ..Default::default() }).unwrap();
        assert!((a.objective_value - b.objective_value).abs() < 1e-9);
        let (best, _) = vertex_enumeration(&lp).unwrap();
        assert!((a.objective_value - best).abs() < 1e-9);
    }
}
