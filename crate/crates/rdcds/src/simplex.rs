//! Exact linear programming over rationals.
//!
//! A small dense two-phase simplex with Bland's pivoting rule: entering
//! variable is the lowest-index column with negative reduced cost, leaving row
//! breaks ratio ties by lowest basic index. Bland's rule cannot cycle, and
//! with exact rational arithmetic there is no tolerance tuning — optimality
//! certificates are exact. Problem sizes here are tiny (tens of variables and
//! rows), so the dense tableau is the right tool.

use crate::error::{Error, Result};
use crate::rational::Rat;

/// One covering row: `coeffs . x >= bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub bound: Rat,
}

/// Minimize `objective . x` over `x >= 0` subject to the constraint rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rat,
    /// One optimal assignment of the structural variables.
    pub solution: Vec<Rat>,
}

struct Tableau {
    /// `m x (cols + 1)`; the last column is the right-hand side, kept >= 0.
    rows: Vec<Vec<Rat>>,
    cols: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip().expect("pivot entry is nonzero");
        for v in &mut self.rows[r] {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = self.rows[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for j in 0..=self.cols {
                let d = f.clone() * pivot_row[j].clone();
                self.rows[i][j] -= &d;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs for `cost`, with the negated objective value appended.
    fn reduced(&self, cost: &[Rat]) -> Vec<Rat> {
        let mut z: Vec<Rat> = cost.to_vec();
        z.push(Rat::zero());
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.cols {
                let d = cb.clone() * row[j].clone();
                z[j] -= &d;
            }
        }
        z
    }

    /// Runs Bland's rule to optimality for `cost`, considering only columns
    /// below `allowed` as entering candidates. Returns the objective value.
    fn optimize(&mut self, cost: &[Rat], allowed: usize) -> Result<Rat> {
        let mut z = self.reduced(cost);
        loop {
            let Some(c) = (0..allowed).position(|j| z[j].is_negative()) else {
                return Ok(-z[self.cols].clone());
            };
            let mut leaving: Option<(Rat, usize)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][c].is_positive() {
                    continue;
                }
                let ratio = self.rhs(i).checked_div(&self.rows[i][c])?;
                let better = match &leaving {
                    None => true,
                    Some((best, row)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*row])
                    }
                };
                if better {
                    leaving = Some((ratio, i));
                }
            }
            let Some((_, r)) = leaving else { return Err(Error::Unbounded) };
            let zc = z[c].clone();
            self.pivot(r, c);
            for j in 0..=self.cols {
                let d = zc.clone() * self.rows[r][j].clone();
                z[j] -= &d;
            }
        }
    }
}

/// Solves the program exactly. Errors with [`Error::Infeasible`] or
/// [`Error::Unbounded`] when no optimum exists.
pub fn solve_min(lp: &LinearProgram) -> Result<LpSolution> {
    let nv = lp.objective.len();
    for c in &lp.constraints {
        if c.coeffs.len() != nv {
            return Err(Error::ShapeMismatch(format!(
                "constraint has {} coefficients, expected {nv}",
                c.coeffs.len()
            )));
        }
    }
    let m = lp.constraints.len();
    let artificial_rows: Vec<bool> =
        lp.constraints.iter().map(|c| c.bound.is_positive()).collect();
    let n_art = artificial_rows.iter().filter(|&&a| a).count();
    let artificial_start = nv + m;
    let cols = artificial_start + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art_next = artificial_start;
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![Rat::zero(); cols + 1];
        if artificial_rows[i] {
            // a.x - surplus + artificial = bound, artificial basic.
            row[..nv].clone_from_slice(&c.coeffs);
            row[nv + i] = -Rat::one();
            row[art_next] = Rat::one();
            row[cols] = c.bound.clone();
            basis.push(art_next);
            art_next += 1;
        } else {
            // Nonpositive bound: flip to (-a).x + slack = -bound, slack basic.
            for (j, v) in c.coeffs.iter().enumerate() {
                row[j] = -v.clone();
            }
            row[nv + i] = Rat::one();
            row[cols] = -c.bound.clone();
            basis.push(nv + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, cols, basis };

    if n_art > 0 {
        let mut phase1 = vec![Rat::zero(); cols];
        for c in artificial_start..cols {
            phase1[c] = Rat::one();
        }
        let residual = t.optimize(&phase1, cols)?;
        if residual.is_positive() {
            return Err(Error::Infeasible);
        }
        // Degenerate basic artificials are pivoted out where possible; a row
        // with no eligible column is redundant and stays inert at zero.
        for i in 0..m {
            if t.basis[i] >= artificial_start {
                if let Some(c) = (0..artificial_start).position(|j| !t.rows[i][j].is_zero()) {
                    t.pivot(i, c);
                }
            }
        }
    }

    let mut cost = vec![Rat::zero(); cols];
    cost[..nv].clone_from_slice(&lp.objective);
    let value = t.optimize(&cost, artificial_start)?;

    let mut solution = vec![Rat::zero(); nv];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < nv {
            solution[b] = t.rhs(i).clone();
        }
    }
    Ok(LpSolution { value, solution })
}
