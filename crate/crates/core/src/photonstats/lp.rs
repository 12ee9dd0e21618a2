//! Linear programs over photon-number distributions and their text format.
//!
//! Problem file:
//!
//! ```text
//! # comment
//! minimize 0 0.19 0.3078
//! 1 1 1 = 1
//! 0.0 0.19 0.3439 <= 0.02
//! bound 2 0 0.5
//! ```
//!
//! The `minimize` line fixes the variable count; every other non-comment line
//! is one constraint: coefficients, a relation (`<=`, `>=`, `=`), then the
//! right-hand side. `bound i lo hi` narrows the default `[0, 1]` bound of
//! variable `i`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::PhotonDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    /// Signed violation of `lhs rel rhs`, zero when satisfied.
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::Le => (lhs - rhs).max(0.0),
            Relation::Ge => (rhs - lhs).max(0.0),
            Relation::Eq => (lhs - rhs).abs(),
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "<=" => Ok(Relation::Le),
            ">=" => Ok(Relation::Ge),
            "=" | "==" => Ok(Relation::Eq),
            other => Err(format!("unknown relation '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LpRow {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.relation.violation(self.lhs(x), self.rhs)
    }

    fn is_normalization(&self) -> bool {
        self.relation == Relation::Eq && self.rhs == 1.0 && self.coeffs.iter().all(|&c| c == 1.0)
    }
}

/// Minimize `objective . p` over `p_0 ..= p_{n_max}` subject to `rows` and
/// per-variable bounds inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// Problem with the normalization row `sum p_n = 1` and unit bounds.
    pub fn over_distributions(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: vec![LpRow::new(vec![1.0; n], Relation::Eq, 1.0)],
            bounds: vec![(0.0, 1.0); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn equality_rows(&self) -> impl Iterator<Item = &LpRow> {
        self.rows.iter().filter(|r| r.relation == Relation::Eq)
    }

    pub fn inequality_rows(&self) -> impl Iterator<Item = &LpRow> {
        self.rows.iter().filter(|r| r.relation != Relation::Eq)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::Validation("LP needs at least one variable".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("objective coefficients must be finite".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::Validation(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!("row {i} has a non-finite entry")));
            }
        }
        if !self.rows.iter().any(LpRow::is_normalization) {
            return Err(Error::Validation("LP is missing the normalization row sum p_n = 1".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::Validation(format!(
                "{} bounds given for {n} variables",
                self.bounds.len()
            )));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::Validation(format!("bound [{lo}, {hi}] of p_{i} not inside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# photon-number LP, {} variables", self.num_vars());
        let _ = writeln!(out, "minimize {}", join(&self.objective));
        for row in &self.rows {
            let _ = writeln!(out, "{} {} {}", join(&row.coeffs), row.relation.symbol(), num(row.rhs));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if (lo, hi) != (0.0, 1.0) {
                let _ = writeln!(out, "bound {i} {} {}", num(lo), num(hi));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut objective: Option<Vec<f64>> = None;
        let mut rows = Vec::new();
        let mut narrowed = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "minimize" => {
                    if objective.is_some() {
                        return Err(err("duplicate objective line".into()));
                    }
                    let coeffs = parse_numbers(&tokens[1..]).map_err(err)?;
                    if coeffs.is_empty() {
                        return Err(err("objective has no coefficients".into()));
                    }
                    objective = Some(coeffs);
                }
                "bound" => {
                    if tokens.len() != 4 {
                        return Err(err("expected 'bound <index> <lo> <hi>'".into()));
                    }
                    let i: usize = tokens[1]
                        .parse()
                        .map_err(|_| err(format!("bad variable index '{}'", tokens[1])))?;
                    let v = parse_numbers(&tokens[2..]).map_err(err)?;
                    narrowed.push((line_no, i, v[0], v[1]));
                }
                _ => {
                    let n = objective
                        .as_ref()
                        .ok_or_else(|| err("constraint before the 'minimize' line".into()))?
                        .len();
                    if tokens.len() != n + 2 {
                        return Err(err(format!(
                            "expected {n} coefficients, a relation and a right-hand side, found {} fields",
                            tokens.len()
                        )));
                    }
                    let relation: Relation = tokens[n].parse().map_err(err)?;
                    let coeffs = parse_numbers(&tokens[..n]).map_err(err)?;
                    let rhs = parse_numbers(&tokens[n + 1..]).map_err(err)?[0];
                    rows.push(LpRow::new(coeffs, relation, rhs));
                }
            }
        }
        let objective = objective.ok_or(Error::Parse { line: 0, message: "missing 'minimize' line".into() })?;
        let mut bounds = vec![(0.0, 1.0); objective.len()];
        for (line, i, lo, hi) in narrowed {
            let slot = bounds
                .get_mut(i)
                .ok_or_else(|| Error::Parse { line, message: format!("variable index {i} out of range") })?;
            *slot = (lo, hi);
        }
        let problem = Self { objective, rows, bounds };
        problem.validate()?;
        Ok(problem)
    }
}

impl fmt::Display for LpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_numbers(tokens: &[&str]) -> std::result::Result<Vec<f64>, String> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number"))
        })
        .collect()
}

/// Round-trip decimal rendering, 17 significant digits.
pub(crate) fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

/// One of the tight constraints that pin down a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActiveConstraint {
    /// Constraint row, by position in [`LpProblem::rows`].
    Row(usize),
    Lower(usize),
    Upper(usize),
}

impl fmt::Display for ActiveConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActiveConstraint::Row(i) => write!(f, "row:{i}"),
            ActiveConstraint::Lower(i) => write!(f, "lb:p{i}"),
            ActiveConstraint::Upper(i) => write!(f, "ub:p{i}"),
        }
    }
}

/// Farkas certificate of infeasibility.
///
/// With `w` the row weights (rows first, then one weight per upper bound) and
/// `a`, `b` the constraints after shifting variables to their lower bounds,
/// `sum_i w_i a_i <= 0` componentwise while `sum_i w_i b_i = residual > 0`,
/// which no point with nonnegative shifted variables can satisfy. Weights of
/// `<=` rows are nonpositive and of `>=` rows nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityCertificate {
    pub residual: f64,
    pub row_weights: Vec<f64>,
    pub upper_bound_weights: Vec<f64>,
}

impl fmt::Display for InfeasibilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "minimum total constraint violation {:.6e}; separating row weights [", self.residual)?;
        for (i, w) in self.row_weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w:.6e}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective optimum; NaN unless optimal.
    pub value: f64,
    pub witness: Option<PhotonDistribution>,
    /// Tight constraints defining the optimal vertex, sorted.
    pub active_basis: Vec<ActiveConstraint>,
    pub certificate: Option<InfeasibilityCertificate>,
}

impl LpSolution {
    /// Optimum and witness, or the reason there is none.
    pub fn optimum(&self) -> Result<(f64, &PhotonDistribution)> {
        match (self.status, &self.witness) {
            (LpStatus::Optimal, Some(w)) => Ok((self.value, w)),
            (LpStatus::Infeasible, _) => Err(Error::Infeasible(
                self.certificate.as_ref().map(|c| c.to_string()).unwrap_or_default(),
            )),
            (status, _) => Err(Error::Solver(format!("no optimum: status {}", status.as_str()))),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "status {}", self.status.as_str());
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "value {}", num(self.value));
            let _ = writeln!(out, "witness {}", join(w.probs()));
            let basis: Vec<String> = self.active_basis.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "active {}", basis.join(" "));
        }
        if let Some(c) = &self.certificate {
            let _ = writeln!(out, "certificate {c}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_problem() {
        let p = LpProblem::parse("minimize 0 1\n1 1 = 1\n").unwrap();
        assert_eq!(p.num_vars(), 2);
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.bounds, vec![(0.0, 1.0); 2]);
        assert_eq!(p.equality_rows().count(), 1);
        assert_eq!(p.inequality_rows().count(), 0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut p = LpProblem::over_distributions(vec![0.0, 0.19, 0.1 + 0.2, 1.0 / 3.0]);
        p.rows.push(LpRow::new(vec![1.28e-7, 0.19, 0.34, 0.47], Relation::Le, 1.602028638591e-6));
        p.rows.push(LpRow::new(vec![0.0, 1.0, 0.0, 0.0], Relation::Ge, 1e-300));
        p.bounds[2] = (0.0, 0.25);
        let back = LpProblem::parse(&p.to_text()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "# header\nminimize 0 1\n1 1 = 1\n1 2 <> 3\n";
        match LpProblem::parse(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("relation"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match LpProblem::parse("minimize 0 1\n1 1 = 1\n1 <= 3\n") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
        match LpProblem::parse("minimize 0 1\n1 x = 1\n") {
            Err(Error::Parse { line: 2, message }) => assert!(message.contains("'x'")),
            other => panic!("expected parse error on line 2, got {other:?}"),
        }
    }

    #[test]
    fn validation_requires_normalization_and_unit_bounds() {
        let mut p = LpProblem::over_distributions(vec![0.0, 1.0]);
        p.rows.clear();
        assert!(p.validate().is_err());
        let mut p = LpProblem::over_distributions(vec![0.0, 1.0]);
        p.bounds[0] = (0.0, 2.0);
        assert!(p.validate().is_err());
        let mut p = LpProblem::over_distributions(vec![0.0, 1.0]);
        p.rows.push(LpRow::new(vec![1.0], Relation::Le, 1.0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn rendering_keeps_at_least_twelve_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }
}
