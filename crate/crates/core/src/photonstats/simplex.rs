//! Dense two-phase simplex with Bland's pivoting rule.
//!
//! Problems here have at most a few dozen rows and columns, so a full tableau
//! is the simplest robust choice. Variables are shifted to their lower bounds
//! and upper bounds become explicit `<=` rows. Once the optimal basis is found
//! the basic values are recomputed from the original data, which removes the
//! rounding accumulated during pivoting.

use super::lp::{
    ActiveConstraint, InfeasibilityCertificate, LpProblem, LpSolution, LpStatus, Relation,
};
use crate::error::{Error, Result};
use crate::model::PhotonDistribution;

const EPS_COST: f64 = 1e-12;
const EPS_PIVOT: f64 = 1e-12;
const EPS_RATIO: f64 = 1e-13;
const FEASIBILITY_TOL: f64 = 1e-11;
const WITNESS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy)]
enum Origin {
    Row(usize),
    Upper(usize),
}

struct Constraint {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
    origin: Origin,
    /// +1 or -1, the factor applied to make `rhs >= 0`.
    sign: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs; the last entry is minus the objective value.
    costs: Vec<f64>,
    basis: Vec<usize>,
    dropped: Vec<bool>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let width = self.ncols + 1;
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][e] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || self.dropped[i] {
                continue;
            }
            let factor = row[e];
            if factor != 0.0 {
                for j in 0..width {
                    row[j] -= factor * pivot_row[j];
                }
                row[e] = 0.0;
            }
        }
        let factor = self.costs[e];
        if factor != 0.0 {
            for j in 0..width {
                self.costs[j] -= factor * pivot_row[j];
            }
            self.costs[e] = 0.0;
        }
        self.basis[r] = e;
    }

    fn reset_costs(&mut self, col_cost: &[f64]) {
        let mut costs = col_cost.to_vec();
        costs.push(0.0);
        for (i, row) in self.rows.iter().enumerate() {
            if self.dropped[i] {
                continue;
            }
            let cb = col_cost[self.basis[i]];
            if cb != 0.0 {
                for (c, v) in costs.iter_mut().zip(row) {
                    *c -= cb * v;
                }
            }
        }
        self.costs = costs;
    }

    /// Runs Bland's rule over columns `< allowed`. Returns `false` if unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(e) = (0..allowed).find(|&j| self.costs[j] < -EPS_COST) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                if self.dropped[i] {
                    continue;
                }
                let a = self.rows[i][e];
                if a <= EPS_PIVOT {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= EPS_RATIO * br.abs().max(1.0);
                        if (!tie && ratio < br) || (tie && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, e),
                None => return Ok(false),
            }
        }
        Err(Error::Solver(format!("no convergence after {MAX_PIVOTS} pivots")))
    }
}

pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();
    let lower: Vec<f64> = problem.bounds.iter().map(|b| b.0).collect();

    let mut cons: Vec<Constraint> = Vec::new();
    for (i, row) in problem.rows.iter().enumerate() {
        let shift: f64 = row.coeffs.iter().zip(&lower).map(|(a, l)| a * l).sum();
        cons.push(Constraint {
            coeffs: row.coeffs.clone(),
            relation: row.relation,
            rhs: row.rhs - shift,
            origin: Origin::Row(i),
            sign: 1.0,
        });
    }
    for (i, &(lo, hi)) in problem.bounds.iter().enumerate() {
        let mut coeffs = vec![0.0; n];
        coeffs[i] = 1.0;
        cons.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: hi - lo,
            origin: Origin::Upper(i),
            sign: 1.0,
        });
    }
    for c in cons.iter_mut() {
        if c.rhs < 0.0 {
            c.sign = -1.0;
            c.rhs = -c.rhs;
            c.coeffs.iter_mut().for_each(|a| *a = -*a);
            c.relation = match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = cons.len();
    let mut slack_col = vec![None; m];
    let mut art_col = vec![None; m];
    let mut ncols = n;
    for (i, c) in cons.iter().enumerate() {
        if c.relation != Relation::Eq {
            slack_col[i] = Some(ncols);
            ncols += 1;
        }
    }
    let first_art = ncols;
    for (i, c) in cons.iter().enumerate() {
        if c.relation != Relation::Le {
            art_col[i] = Some(ncols);
            ncols += 1;
        }
    }

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, c) in cons.iter().enumerate() {
        let mut row = vec![0.0; ncols + 1];
        row[..n].copy_from_slice(&c.coeffs);
        if let Some(s) = slack_col[i] {
            row[s] = if c.relation == Relation::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = art_col[i] {
            row[a] = 1.0;
        }
        row[ncols] = c.rhs;
        rows.push(row);
        basis.push(art_col[i].or(slack_col[i]).expect("every row has a starting basic column"));
    }
    let mut tab = Tableau { rows, costs: Vec::new(), basis, dropped: vec![false; m], ncols };

    // phase 1: minimize the sum of artificials
    let phase1_cost: Vec<f64> = (0..ncols).map(|j| if j >= first_art { 1.0 } else { 0.0 }).collect();
    tab.reset_costs(&phase1_cost);
    tab.optimize(ncols)?;
    let infeasibility = -tab.costs[ncols];
    if infeasibility > FEASIBILITY_TOL {
        return Ok(infeasible(problem, &cons, &tab, &slack_col, &art_col, infeasibility));
    }

    // drive zero-valued artificials out of the basis, dropping redundant rows
    for i in 0..m {
        if tab.basis[i] < first_art {
            continue;
        }
        match (0..first_art).find(|&j| tab.rows[i][j].abs() > EPS_PIVOT) {
            Some(j) => tab.pivot(i, j),
            None => tab.dropped[i] = true,
        }
    }

    let mut phase2_cost = vec![0.0; ncols];
    phase2_cost[..n].copy_from_slice(&problem.objective);
    tab.reset_costs(&phase2_cost);
    if !tab.optimize(first_art)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: f64::NAN,
            witness: None,
            active_basis: Vec::new(),
            certificate: None,
        });
    }

    let shifted = refine(&cons, &tab, &slack_col, n);
    let x: Vec<f64> = shifted
        .iter()
        .zip(&problem.bounds)
        .map(|(&y, &(lo, hi))| (lo + y).clamp(lo, hi))
        .collect();
    let violation = problem.max_violation(&x);
    if violation > WITNESS_TOL {
        return Err(Error::Solver(format!("optimal vertex violates constraints by {violation:e}")));
    }

    let mut active = Vec::new();
    for (i, c) in cons.iter().enumerate() {
        let tight = match slack_col[i] {
            None => true,
            Some(s) => !tab.basis.iter().zip(&tab.dropped).any(|(&b, &d)| !d && b == s),
        };
        if tight {
            active.push(match c.origin {
                Origin::Row(r) => ActiveConstraint::Row(r),
                Origin::Upper(v) => ActiveConstraint::Upper(v),
            });
        }
    }
    for j in 0..n {
        if !tab.basis.iter().zip(&tab.dropped).any(|(&b, &d)| !d && b == j) {
            active.push(ActiveConstraint::Lower(j));
        }
    }
    active.sort();

    let value = problem.objective_value(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        witness: Some(PhotonDistribution::new(x)?),
        active_basis: active,
        certificate: None,
    })
}

/// Recomputes basic values from the original constraint data. Falls back to
/// the tableau values if the basis matrix is numerically singular.
fn refine(cons: &[Constraint], tab: &Tableau, slack_col: &[Option<usize>], n: usize) -> Vec<f64> {
    let live: Vec<usize> = (0..cons.len()).filter(|&i| !tab.dropped[i]).collect();
    let k = live.len();
    let column = |col: usize, row: usize| -> f64 {
        let c = &cons[row];
        if col < n {
            c.coeffs[col]
        } else if slack_col[row] == Some(col) {
            if c.relation == Relation::Le { 1.0 } else { -1.0 }
        } else {
            0.0
        }
    };
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &row) in live.iter().enumerate() {
        for (b, &i) in live.iter().enumerate() {
            a[r][b] = column(tab.basis[i], row);
        }
        a[r][k] = cons[row].rhs;
    }
    let solved = gauss_solve(a);

    let mut y = vec![0.0; n];
    for (b, &i) in live.iter().enumerate() {
        let col = tab.basis[i];
        if col < n {
            y[col] = match &solved {
                Some(v) => v[b],
                None => tab.rhs(i),
            };
        }
    }
    y.iter_mut().for_each(|v| *v = v.max(0.0));
    y
}

/// Solves an augmented `k x (k+1)` system with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let tail: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][k] - tail) / a[r][r];
    }
    Some(x)
}

fn infeasible(
    problem: &LpProblem,
    cons: &[Constraint],
    tab: &Tableau,
    slack_col: &[Option<usize>],
    art_col: &[Option<usize>],
    residual: f64,
) -> LpSolution {
    // Phase-1 duals: the reduced cost of each row's starting column is its
    // phase-1 cost minus the dual value.
    let mut row_weights = vec![0.0; problem.rows.len()];
    let mut upper_bound_weights = vec![0.0; problem.num_vars()];
    for (i, c) in cons.iter().enumerate() {
        let dual = match art_col[i] {
            Some(a) => 1.0 - tab.costs[a],
            None => -tab.costs[slack_col[i].expect("<= rows carry a slack")],
        };
        let weight = c.sign * dual;
        match c.origin {
            Origin::Row(r) => row_weights[r] = weight,
            Origin::Upper(v) => upper_bound_weights[v] = weight,
        }
    }
    LpSolution {
        status: LpStatus::Infeasible,
        value: f64::NAN,
        witness: None,
        active_basis: Vec::new(),
        certificate: Some(InfeasibilityCertificate { residual, row_weights, upper_bound_weights }),
    }
}
