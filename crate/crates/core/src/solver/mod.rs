//! Linear and mixed-binary linear programming.
//!
//! Problems are stored densely as `min cᵀx` subject to `row_lower ≤ A x ≤ row_upper` and
//! `col_lower ≤ x ≤ col_upper`; any bound may be infinite. Equality rows use identical
//! lower and upper row bounds. The LP engine is a bounded-variable revised simplex
//! ([`simplex`]); the MILP layer is a depth-first branch and bound over binary columns
//! ([`milp`]).

mod milp;
mod simplex;

use std::fmt::Write as _;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};

pub use milp::{solve_milp, solve_milp_branching, solve_milp_with, Brancher, MilpOptions};
pub use simplex::{solve_lp_with_basis, Basis};

/// Primal and dual feasibility tolerance of the simplex engine.
pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vector,
    pub matrix: Mat,
    pub row_lower: Vector,
    pub row_upper: Vector,
    pub col_lower: Vector,
    pub col_upper: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal solution, present iff `status == Optimal`.
    pub x: Option<Vector>,
    pub objective_value: f64,
    /// Row multipliers `y` with reduced costs `c - Aᵀy`, present iff optimal.
    pub duals: Option<Vector>,
}

impl LpSolution {
    pub(crate) fn infeasible() -> Self {
        Self {
            status: LpStatus::Infeasible,
            x: None,
            objective_value: f64::INFINITY,
            duals: None,
        }
    }

    pub(crate) fn unbounded() -> Self {
        Self {
            status: LpStatus::Unbounded,
            x: None,
            objective_value: f64::NEG_INFINITY,
            duals: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LpProblem {
    /// Equality-form problem `min cᵀx s.t. A x = b, lower ≤ x ≤ upper`.
    pub fn new(objective: Vector, a: Mat, b: Vector, lower: Vector, upper: Vector) -> Result<Self> {
        Self::with_row_bounds(objective, a, b.clone(), b, lower, upper)
    }

    pub fn with_row_bounds(
        objective: Vector,
        matrix: Mat,
        row_lower: Vector,
        row_upper: Vector,
        col_lower: Vector,
        col_upper: Vector,
    ) -> Result<Self> {
        let n = objective.len();
        check_dim("lp columns", n, matrix.ncols())?;
        check_dim("lp column lower bounds", n, col_lower.len())?;
        check_dim("lp column upper bounds", n, col_upper.len())?;
        check_dim("lp row lower bounds", matrix.nrows(), row_lower.len())?;
        check_dim("lp row upper bounds", matrix.nrows(), row_upper.len())?;
        if !matrix.iter().chain(objective.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("lp data"));
        }
        for (l, u) in col_lower.iter().zip(col_upper.iter()).chain(row_lower.iter().zip(row_upper.iter())) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("inconsistent bounds [{l}, {u}]")));
            }
        }
        Ok(Self {
            objective,
            matrix,
            row_lower,
            row_upper,
            col_lower,
            col_upper,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Fixed-width textual dump for debugging.
    pub fn to_lp_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "MINIMIZE");
        for j in 0..self.num_vars() {
            if self.objective[j] != 0.0 {
                let _ = writeln!(s, "  {:>14.6e} x{:<6}", self.objective[j], j);
            }
        }
        let _ = writeln!(s, "SUBJECT TO");
        for i in 0..self.num_rows() {
            let _ = write!(s, "  r{:<6} {:>14.6e} <=", i, self.row_lower[i]);
            for j in 0..self.num_vars() {
                let a = self.matrix[(i, j)];
                if a != 0.0 {
                    let _ = write!(s, " {:>+14.6e} x{}", a, j);
                }
            }
            let _ = writeln!(s, " <= {:>14.6e}", self.row_upper[i]);
        }
        let _ = writeln!(s, "BOUNDS");
        for j in 0..self.num_vars() {
            let _ = writeln!(
                s,
                "  {:>14.6e} <= x{:<6} <= {:>14.6e}",
                self.col_lower[j], j, self.col_upper[j]
            );
        }
        s
    }
}

/// Solve an LP from the slack basis.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with_basis(p, None).map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub lp: LpProblem,
    /// Indices of binary columns; their bounds are intersected with [0, 1].
    pub binaries: Vec<usize>,
}

impl MilpProblem {
    pub fn new(lp: LpProblem, binaries: Vec<usize>) -> Result<Self> {
        for &j in &binaries {
            if j >= lp.num_vars() {
                return Err(Error::IndexOutOfRange(format!("binary column {j}")));
            }
        }
        Ok(Self { lp, binaries })
    }
}

/// Incremental sparse builder producing a dense [`LpProblem`].
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, f64, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    /// Adds `count` variables sharing bounds and cost; returns the first index.
    pub fn add_vars(&mut self, count: usize, lower: f64, upper: f64, cost: f64) -> usize {
        let first = self.cost.len();
        for _ in 0..count {
            self.add_var(lower, upper, cost);
        }
        first
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, lower: f64, upper: f64) -> usize {
        self.rows.push((coeffs, lower, upper));
        self.rows.len() - 1
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.add_row(coeffs, rhs, rhs)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn build(&self) -> Result<LpProblem> {
        let n = self.cost.len();
        let m = self.rows.len();
        let mut a = Mat::zeros(m, n);
        let mut rl = Vector::zeros(m);
        let mut ru = Vector::zeros(m);
        for (i, (coeffs, lo, hi)) in self.rows.iter().enumerate() {
            for &(j, v) in coeffs {
                a[(i, j)] += v;
            }
            rl[i] = *lo;
            ru[i] = *hi;
        }
        LpProblem::with_row_bounds(
            Vector::from_vec(self.cost.clone()),
            a,
            rl,
            ru,
            Vector::from_vec(self.lower.clone()),
            Vector::from_vec(self.upper.clone()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_box() {
        let p = LpProblem::new(
            Vector::from_vec(vec![1.0]),
            Mat::zeros(0, 1),
            Vector::zeros(0),
            Vector::from_vec(vec![-1.0]),
            Vector::from_vec(vec![1.0]),
        )
        .unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective_value, -1.0);
    }

    #[test]
    fn kappa_shape_outside_unit_box() {
        // min κ s.t. ξ = 2, |ξ| ≤ 1 + κ
        let mut b = LpBuilder::new();
        let xi = b.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let k = b.add_var(-1.0, f64::INFINITY, 1.0);
        b.add_eq(vec![(xi, 1.0)], 2.0);
        b.add_row(vec![(xi, 1.0), (k, -1.0)], f64::NEG_INFINITY, 1.0);
        b.add_row(vec![(xi, -1.0), (k, -1.0)], f64::NEG_INFINITY, 1.0);
        let s = solve_lp(&b.build().unwrap()).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_unbounded_free_direction() {
        let mut b = LpBuilder::new();
        let x = b.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let y = b.add_var(0.0, 1.0, 0.0);
        b.add_eq(vec![(x, 1.0), (y, -1.0)], 0.0);
        let p = b.build().unwrap();
        // x = y is bounded; now drop the row to make x free
        assert_eq!(solve_lp(&p).unwrap().objective_value, 0.0);
        let mut b2 = LpBuilder::new();
        b2.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        assert_eq!(solve_lp(&b2.build().unwrap()).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn detects_infeasible_rows() {
        let mut b = LpBuilder::new();
        let x = b.add_var(-1.0, 1.0, 0.0);
        b.add_eq(vec![(x, 1.0)], 3.0);
        assert_eq!(solve_lp(&b.build().unwrap()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn rejects_inverted_bounds() {
        let r = LpProblem::new(
            Vector::from_vec(vec![0.0]),
            Mat::zeros(0, 1),
            Vector::zeros(0),
            Vector::from_vec(vec![1.0]),
            Vector::from_vec(vec![0.0]),
        );
        assert!(r.is_err());
    }

    #[test]
    fn text_dump_lists_rows() {
        let mut b = LpBuilder::new();
        let x = b.add_var(0.0, 1.0, 2.0);
        b.add_eq(vec![(x, 1.0)], 0.5);
        let t = b.build().unwrap().to_lp_text();
        assert!(t.contains("MINIMIZE") && t.contains("r0") && t.contains("x0"));
    }
}
