//! Dense two-phase simplex for small box-constrained LPs:
//!
//! ```text
//! minimize cᵀy  subject to  lo ≤ y ≤ hi,  A y ≥ b
//! ```
//!
//! [`simplex_solve`] runs a bounded dual simplex from the box vertex that
//! minimizes the objective, which is dual feasible by construction. If it
//! stalls it hands over to [`two_phase_solve`], a two-phase tableau method
//! under Bland's rule.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Rows `a` of the constraints `aᵀy ≥ rhs`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

const PIVOT_EPS: f64 = 1e-11;

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `costᵀx` over the current feasible basis. Columns with
    /// `allowed[c] == false` never enter.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        let m = self.t.len();
        let scale = 1.0 + cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for _ in 0..10_000 {
            // Reduced costs d_c = cost_c − Σ_r cost_{basis r} t[r][c].
            let mut entering = None;
            for c in 0..self.cols {
                if !allowed[c] || self.basis.contains(&c) {
                    continue;
                }
                let mut d = cost[c];
                for r in 0..m {
                    d -= cost[self.basis[r]] * self.t[r][c];
                }
                if d < -PIVOT_EPS * scale {
                    entering = Some(c);
                    break;
                }
            }
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.t[r][c];
                if a > PIVOT_EPS {
                    let ratio = self.t[r][self.cols] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14 * (1.0 + lratio.abs())
                                || (ratio <= lratio + 1e-14 * (1.0 + lratio.abs()) && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return Err(Error::Unbounded) };
            self.pivot(r, c);
        }
        Err(Error::Unbounded)
    }

    fn value_of(&self, var: usize) -> f64 {
        self.basis.iter().position(|&b| b == var).map_or(0.0, |r| self.t[r][self.cols])
    }
}

fn check_shape(lp: &LinearProgram) -> Result<()> {
    let n = lp.objective.len();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: lp.lower.len().min(lp.upper.len()) });
    }
    if lp.rows.len() != lp.rhs.len() || lp.rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: lp.rows.len(), found: lp.rhs.len() });
    }
    if (0..n).any(|i| !(lp.lower[i] <= lp.upper[i])) {
        return Err(Error::Infeasible);
    }
    Ok(())
}

pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    check_shape(lp)?;
    let finite = lp.lower.iter().chain(&lp.upper).all(|v| v.is_finite());
    let rows: Vec<&[f64]> = lp.rows.iter().map(Vec::as_slice).collect();
    match finite.then(|| dual_bounded(&lp.objective, &lp.lower, &lp.upper, &rows, &lp.rhs)).flatten() {
        Some(r) => r,
        None => two_phase_solve(lp),
    }
}

/// [`simplex_solve`] on borrowed data. Bounds must be finite and ordered.
pub fn simplex_solve_parts(objective: &[f64], lower: &[f64], upper: &[f64], rows: &[&[f64]], rhs: &[f64]) -> Result<LpSolution> {
    match dual_bounded(objective, lower, upper, rows, rhs) {
        Some(r) => r,
        None => two_phase_solve(&LinearProgram {
            objective: objective.to_vec(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            rhs: rhs.to_vec(),
        }),
    }
}

fn dual_bounded(objective: &[f64], lower: &[f64], upper: &[f64], rows: &[&[f64]], rhs: &[f64]) -> Option<Result<LpSolution>> {
    let mut tab = BoundedTableau::new(objective, lower, upper, rows, rhs);
    match tab.dual(objective)? {
        Ok(()) => Some(Ok(tab.solution(objective))),
        Err(e) => Some(Err(e)),
    }
}

/// Solver for a sequence of LPs that share bounds and constraints but not the
/// objective. The optimal basis of the previous call seeds a primal simplex.
#[derive(Clone, Debug, Default)]
pub struct WarmSimplex {
    key: Vec<usize>,
    tab: Option<BoundedTableau>,
}

impl WarmSimplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Re-solves with a new objective from the stored basis, provided the
    /// constraint data is the one tagged `key`.
    pub fn resolve(&mut self, key: &[usize], objective: &[f64]) -> Option<LpSolution> {
        if self.key.as_slice() != key {
            return None;
        }
        let tab = self.tab.as_mut().filter(|t| t.n == objective.len())?;
        match tab.primal(objective) {
            Some(Ok(())) => Some(tab.solution(objective)),
            _ => {
                self.tab = None;
                None
            }
        }
    }

    /// `key` identifies the constraint data; a different key forces a cold solve.
    pub fn solve(&mut self, key: &[usize], objective: &[f64], lower: &[f64], upper: &[f64], rows: &[&[f64]], rhs: &[f64]) -> Result<LpSolution> {
        if let Some(sol) = self.resolve(key, objective) {
            return Ok(sol);
        }
        self.tab = None;
        let mut tab = BoundedTableau::new(objective, lower, upper, rows, rhs);
        match tab.dual(objective) {
            Some(Ok(())) => {
                let sol = tab.solution(objective);
                self.key = key.to_vec();
                self.tab = Some(tab);
                Ok(sol)
            }
            Some(Err(e)) => Err(e),
            None => simplex_solve_parts(objective, lower, upper, rows, rhs),
        }
    }
}

/// Bounded-variable tableau on `A y − s = b`, `s ≥ 0`. Rows express basic
/// variables: `x_B(r) + Σ_q t[r][q] x_q = const`.
#[derive(Clone, Debug)]
struct BoundedTableau {
    n: usize,
    m: usize,
    t: Vec<f64>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    feas: f64,
}

impl BoundedTableau {
    /// Slack basis, structural variables at the bound the objective prefers.
    fn new(objective: &[f64], lower: &[f64], upper: &[f64], rows: &[&[f64]], rhs: &[f64]) -> Self {
        let n = objective.len();
        let m = rows.len();
        let cols = n + m;
        // s_r − Σ_j a_rj y_j = −b_r
        let mut t = vec![0.0; m * cols];
        for r in 0..m {
            for j in 0..n {
                t[r * cols + j] = -rows[r][j];
            }
            t[r * cols + n + r] = 1.0;
        }
        let mut lo = lower.to_vec();
        lo.resize(cols, 0.0);
        let mut hi = upper.to_vec();
        hi.resize(cols, f64::INFINITY);
        let mut x: Vec<f64> = (0..cols).map(|j| if j < n && objective[j] < 0.0 { hi[j] } else { lo[j] }).collect();
        for r in 0..m {
            x[n + r] = dot(rows[r], &x[..n]) - rhs[r];
        }
        let mut is_basic = vec![false; cols];
        is_basic[n..].iter_mut().for_each(|b| *b = true);
        let scale = 1.0 + rhs.iter().chain(lower).chain(upper).fold(0.0f64, |a, v| a.max(v.abs()));
        Self { n, m, t, x, lo, hi, basis: (n..cols).collect(), is_basic, feas: 1e-13 * scale }
    }

    fn cols(&self) -> usize {
        self.n + self.m
    }

    fn reduced_costs(&self, objective: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        let cost = |j: usize| if j < self.n { objective[j] } else { 0.0 };
        let mut d: Vec<f64> = (0..cols).map(cost).collect();
        for r in 0..self.m {
            let cb = cost(self.basis[r]);
            if cb != 0.0 {
                for (dj, tj) in d.iter_mut().zip(&self.t[r * cols..(r + 1) * cols]) {
                    *dj -= cb * tj;
                }
            }
        }
        d
    }

    /// Moves nonbasic `q` by `theta` and updates the basic values.
    fn shift(&mut self, q: usize, theta: f64) {
        let cols = self.cols();
        self.x[q] += theta;
        for i in 0..self.m {
            let b = self.basis[i];
            self.x[b] -= theta * self.t[i * cols + q];
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols();
        let a = self.t[r * cols + q];
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v /= a;
        }
        let (head, rest) = self.t.split_at_mut(r * cols);
        let (piv_row, tail) = rest.split_at_mut(cols);
        for other in head.chunks_exact_mut(cols).chain(tail.chunks_exact_mut(cols)) {
            let f = other[q];
            if f != 0.0 {
                for (v, p) in other.iter_mut().zip(piv_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        let p = self.basis[r];
        self.is_basic[p] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Dual simplex from a dual feasible basis. `None` when the pivot budget runs out.
    fn dual(&mut self, objective: &[f64]) -> Option<Result<()>> {
        let cols = self.cols();
        let mut d = self.reduced_costs(objective);
        for _ in 0..50 * (cols + 1) {
            // Leaving row: most violated basic variable, lowest index on ties.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let b = self.basis[r];
                let viol = (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]);
                if viol > self.feas && leave.is_none_or(|(_, w)| viol > w) {
                    leave = Some((r, viol));
                }
            }
            let Some((r, _)) = leave else { return Some(Ok(())) };
            let p = self.basis[r];
            let below = self.x[p] < self.lo[p];
            let target = if below { self.lo[p] } else { self.hi[p] };
            // x_p = const − Σ t[r][q] x_q. To raise x_p a nonbasic at its lower
            // bound must have t < 0, one at its upper bound t > 0; mirrored to lower x_p.
            let row = &self.t[r * cols..(r + 1) * cols];
            let mut enter: Option<(usize, f64)> = None;
            for q in 0..cols {
                if self.is_basic[q] || self.lo[q] == self.hi[q] {
                    continue;
                }
                let a = row[q];
                if a.abs() <= PIVOT_EPS {
                    continue;
                }
                let at_lower = self.x[q] == self.lo[q];
                let ok = if below { (at_lower && a < 0.0) || (!at_lower && a > 0.0) } else { (at_lower && a > 0.0) || (!at_lower && a < 0.0) };
                if !ok {
                    continue;
                }
                let ratio = (d[q] / a).abs();
                if enter.is_none_or(|(_, best)| ratio < best - 1e-15 * (1.0 + best)) {
                    enter = Some((q, ratio));
                }
            }
            let Some((q, _)) = enter else { return Some(Err(Error::Infeasible)) };
            let theta = (self.x[p] - target) / row[q];
            self.shift(q, theta);
            self.x[p] = target;
            self.pivot(r, q);
            let f = d[q];
            for j in 0..cols {
                d[j] -= f * self.t[r * cols + j];
            }
            d[q] = 0.0;
        }
        None
    }

    /// Primal simplex from a primal feasible basis. `None` when it cannot finish.
    fn primal(&mut self, objective: &[f64]) -> Option<Result<()>> {
        let cols = self.cols();
        let tol = 1e-12 * (1.0 + objective.iter().fold(0.0f64, |a, c| a.max(c.abs())));
        for _ in 0..50 * (cols + 1) {
            let d = self.reduced_costs(objective);
            // Dantzig pricing: largest improving reduced cost.
            let mut enter: Option<(usize, f64)> = None;
            for q in 0..cols {
                if self.is_basic[q] || self.lo[q] == self.hi[q] {
                    continue;
                }
                let at_lower = self.x[q] == self.lo[q];
                let gain = if at_lower { -d[q] } else { d[q] };
                if gain > tol && enter.is_none_or(|(_, g)| gain > g) {
                    enter = Some((q, gain));
                }
            }
            let Some((q, _)) = enter else { return Some(Ok(())) };
            let dir = if self.x[q] == self.lo[q] { 1.0 } else { -1.0 };
            // x_B(r) moves by −dir θ t[r][q].
            let mut step = self.hi[q] - self.lo[q];
            let mut block: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let b = self.basis[r];
                let g = -dir * self.t[r * cols + q];
                let limit = if g < -PIVOT_EPS {
                    (self.x[b] - self.lo[b]).max(0.0) / -g
                } else if g > PIVOT_EPS && self.hi[b].is_finite() {
                    (self.hi[b] - self.x[b]).max(0.0) / g
                } else {
                    continue;
                };
                if limit < step {
                    step = limit;
                    block = Some((r, if g < 0.0 { self.lo[b] } else { self.hi[b] }));
                }
            }
            if !step.is_finite() {
                return None;
            }
            self.shift(q, dir * step);
            match block {
                None => self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] },
                Some((r, bound)) => {
                    let p = self.basis[r];
                    self.x[p] = bound;
                    self.pivot(r, q);
                }
            }
        }
        None
    }

    fn solution(&self, objective: &[f64]) -> LpSolution {
        let y: Vec<f64> = (0..self.n).map(|j| self.x[j].clamp(self.lo[j], self.hi[j])).collect();
        let value = dot(objective, &y);
        LpSolution { x: y, value }
    }
}

/// Two-phase tableau simplex with Bland's rule.
pub fn two_phase_solve(lp: &LinearProgram) -> Result<LpSolution> {
    check_shape(lp)?;
    let n = lp.objective.len();
    let m = lp.rows.len();
    // y = lo + s. Columns: s (n), box slacks (n), surplus (m), artificials.
    let shifted: Vec<f64> = (0..m).map(|r| lp.rhs[r] - dot(&lp.rows[r], &lp.lower)).collect();
    let needs_art: Vec<bool> = shifted.iter().map(|&b| b > 0.0).collect();
    let n_art = needs_art.iter().filter(|&&x| x).count();
    let cols = 2 * n + m + n_art;
    let mut t = Vec::with_capacity(n + m);
    let mut basis = Vec::with_capacity(n + m);
    for i in 0..n {
        let mut row = vec![0.0; cols + 1];
        row[i] = 1.0;
        row[n + i] = 1.0;
        row[cols] = lp.upper[i] - lp.lower[i];
        t.push(row);
        basis.push(n + i);
    }
    let mut art = 2 * n + m;
    for r in 0..m {
        let mut row = vec![0.0; cols + 1];
        if needs_art[r] {
            row[..n].copy_from_slice(&lp.rows[r]);
            row[2 * n + r] = -1.0;
            row[art] = 1.0;
            row[cols] = shifted[r];
            basis.push(art);
            art += 1;
        } else {
            for i in 0..n {
                row[i] = -lp.rows[r][i];
            }
            row[2 * n + r] = 1.0;
            row[cols] = -shifted[r];
            basis.push(2 * n + r);
        }
        t.push(row);
    }
    let mut tab = Tableau { t, basis, cols };
    let is_art = |c: usize| c >= 2 * n + m;

    if n_art > 0 {
        let cost: Vec<f64> = (0..cols).map(|c| if is_art(c) { 1.0 } else { 0.0 }).collect();
        tab.optimize(&cost, &vec![true; cols])?;
        let infeas: f64 = (2 * n + m..cols).map(|c| tab.value_of(c)).sum();
        let scale = 1.0 + shifted.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > 1e-9 * scale {
            return Err(Error::Infeasible);
        }
        // Drive remaining (zero-level) artificials out of the basis where possible.
        for r in 0..tab.t.len() {
            if is_art(tab.basis[r]) {
                if let Some(c) = (0..2 * n + m).find(|&c| tab.t[r][c].abs() > PIVOT_EPS && !tab.basis.contains(&c)) {
                    tab.pivot(r, c);
                }
            }
        }
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..cols).map(|c| !is_art(c)).collect();
    tab.optimize(&cost, &allowed)?;
    let x: Vec<f64> = (0..n).map(|i| (lp.lower[i] + tab.value_of(i)).clamp(lp.lower[i], lp.upper[i])).collect();
    let value = dot(&lp.objective, &x);
    Ok(LpSolution { x, value })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable() {
        let lp = LinearProgram { objective: vec![1.0], lower: vec![-2.0], upper: vec![3.0], rows: vec![], rhs: vec![] };
        let s = simplex_solve(&lp).unwrap();
        assert_eq!(s.x, vec![-2.0]);
        assert_eq!(s.value, -2.0);
    }

    #[test]
    fn box_only_follows_objective_sign() {
        let lp = LinearProgram { objective: vec![1.0, -2.0, 0.0], lower: vec![0.0, -1.0, 4.0], upper: vec![1.0, 5.0, 4.0], rows: vec![], rhs: vec![] };
        let s = simplex_solve(&lp).unwrap();
        assert_eq!(s.x, vec![0.0, 5.0, 4.0]);
        assert_eq!(s.value, -10.0);
    }

    #[test]
    fn constraint_binds() {
        // min x + y, x + y ≥ 1, x - y ≥ -0.5 on [0, 2]².
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            lower: vec![0.0, 0.0],
            upper: vec![2.0, 2.0],
            rows: vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            rhs: vec![1.0, -0.5],
        };
        let s = simplex_solve(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let lp = LinearProgram { objective: vec![1.0], lower: vec![0.0], upper: vec![1.0], rows: vec![vec![1.0]], rhs: vec![2.0] };
        assert_eq!(simplex_solve(&lp), Err(Error::Infeasible));
    }
}
