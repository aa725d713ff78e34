//! Dense bounded-variable revised simplex.
//!
//! Every row gets a logical variable `s_r = a_rᵀx` bounded by the row bounds, so the
//! working system is `A x - s = 0` and the all-logical basis is always a valid start.
//! Phase 1 minimises the total bound violation of basic variables (composite phase 1);
//! phase 2 minimises the true objective. `B⁻¹` is kept explicitly, updated by
//! elementary row operations and rebuilt from scratch periodically.

use std::sync::Arc;

use super::{LpProblem, LpSolution, LpStatus, LP_TOL};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

const PIVOT_TOL: f64 = 1e-9;
const HARRIS_RELAX: f64 = 0.5 * LP_TOL;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_BEFORE_BLAND: usize = 50;

/// Final basis of a solve, usable as a warm start for a problem of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    /// Basic variable per row; indices `>= n` denote row logicals.
    pub basic: Vec<usize>,
    /// Whether each variable (structurals then logicals) rests at its upper bound.
    pub at_upper: Vec<bool>,
    inverse: Option<Arc<Mat>>,
}

impl Basis {
    pub fn new(basic: Vec<usize>, at_upper: Vec<bool>) -> Self {
        Self {
            basic,
            at_upper,
            inverse: None,
        }
    }

    /// Drops the cached basis inverse, keeping only the combinatorial data.
    pub fn without_inverse(mut self) -> Self {
        self.inverse = None;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Engine {
    m: usize,
    n: usize,
    a: Mat,
    row_scale: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    x: Vec<f64>,
    binv: Mat,
    since_refactor: usize,
}

fn pow2_scale(max: f64) -> f64 {
    if max == 0.0 || !max.is_finite() {
        1.0
    } else {
        2f64.powi(-(max.log2().round() as i32))
    }
}

impl Engine {
    fn new(p: &LpProblem) -> Self {
        let (m, n) = (p.num_rows(), p.num_vars());
        let mut a = p.matrix.clone();
        let mut row_scale = vec![1.0; m];
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        lo.extend(p.col_lower.iter());
        hi.extend(p.col_upper.iter());
        for r in 0..m {
            let mx = a.row(r).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let s = pow2_scale(mx);
            row_scale[r] = s;
            if s != 1.0 {
                a.row_mut(r).scale_mut(s);
            }
            lo.push(p.row_lower[r] * s);
            hi.push(p.row_upper[r] * s);
        }
        let mut cost: Vec<f64> = p.objective.iter().copied().collect();
        cost.resize(n + m, 0.0);
        Self {
            m,
            n,
            a,
            row_scale,
            cost,
            lo,
            hi,
            state: vec![State::Lower; n + m],
            basis: (n..n + m).collect(),
            x: vec![0.0; n + m],
            binv: -Mat::identity(m, m),
            since_refactor: 0,
        }
    }

    fn resting_state(&self, j: usize, prefer_upper: bool) -> State {
        let (l, u) = (self.lo[j], self.hi[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) if prefer_upper => State::Upper,
            (true, _) => State::Lower,
            (false, true) => State::Upper,
            (false, false) => State::Free,
        }
    }

    fn place_nonbasic(&mut self, j: usize, st: State) {
        self.state[j] = st;
        self.x[j] = match st {
            State::Lower => self.lo[j],
            State::Upper => self.hi[j],
            _ => 0.0,
        };
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.basis = (n..n + m).collect();
        for j in 0..n {
            let st = self.resting_state(j, false);
            self.place_nonbasic(j, st);
        }
        for j in n..n + m {
            self.state[j] = State::Basic;
        }
    }

    fn install(&mut self, hint: Option<&Basis>) {
        let total = self.n + self.m;
        let valid = hint.filter(|h| {
            let mut seen = vec![false; total];
            h.basic.len() == self.m
                && h.at_upper.len() == total
                && h.basic.iter().all(|&j| {
                    let ok = j < total && !seen[j];
                    if ok {
                        seen[j] = true;
                    }
                    ok
                })
        });
        match valid {
            None => self.slack_basis(),
            Some(h) => {
                let mut is_basic = vec![false; total];
                for &j in &h.basic {
                    is_basic[j] = true;
                }
                self.basis = h.basic.clone();
                for j in 0..total {
                    if is_basic[j] {
                        self.state[j] = State::Basic;
                    } else {
                        let st = self.resting_state(j, h.at_upper[j]);
                        self.place_nonbasic(j, st);
                    }
                }
                if let Some(inv) = h.inverse.as_ref().filter(|inv| inv.shape() == (self.m, self.m)) {
                    // same matrix, same basis: only the bounds moved
                    self.binv = Mat::clone(inv);
                    self.since_refactor = 0;
                    self.recompute_basic_values();
                    return;
                }
            }
        }
        if !self.refactor() {
            self.slack_basis();
            self.refactor();
        }
    }

    /// Rebuilds `B⁻¹` and the basic values. Returns false when the basis is singular.
    ///
    /// Only the block of structural columns on the rows whose logical is nonbasic needs a
    /// dense inverse; basic logicals contribute unit columns.
    fn refactor(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        let mut pos_of_logical = vec![usize::MAX; m];
        let mut structural = Vec::new();
        for (k, &j) in self.basis.iter().enumerate() {
            if j < n {
                structural.push((k, j));
            } else {
                pos_of_logical[j - n] = k;
            }
        }
        let tight: Vec<usize> = (0..m).filter(|&r| pos_of_logical[r] == usize::MAX).collect();
        if tight.len() != structural.len() {
            return false;
        }
        let nk = tight.len();
        let block = Mat::from_fn(nk, nk, |i, c| self.a[(tight[i], structural[c].1)]);
        let kinv = if nk == 0 { Some(Mat::zeros(0, 0)) } else { block.try_inverse() };
        let Some(kinv) = kinv.filter(|k| k.iter().all(|v| v.is_finite())) else {
            return false;
        };
        let mut binv = Mat::zeros(m, m);
        for (i, &rc) in tight.iter().enumerate() {
            for (c, &(k, _)) in structural.iter().enumerate() {
                binv[(k, rc)] = kinv[(c, i)];
            }
        }
        for r in 0..m {
            let k = pos_of_logical[r];
            if k == usize::MAX {
                continue;
            }
            binv[(k, r)] = -1.0;
            // logical of row r = a_r,S · x_S - rhs_r
            for (i, &rc) in tight.iter().enumerate() {
                let mut acc = 0.0;
                for (c, &(_, j)) in structural.iter().enumerate() {
                    acc += self.a[(r, j)] * kinv[(c, i)];
                }
                binv[(k, rc)] = acc;
            }
        }
        self.binv = binv;
        self.since_refactor = 0;
        self.recompute_basic_values();
        true
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = Vector::zeros(m);
        for j in 0..self.n {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.a.column(j), 1.0);
            }
        }
        for r in 0..m {
            let j = self.n + r;
            if self.state[j] != State::Basic {
                rhs[r] += self.x[j];
            }
        }
        let xb = &self.binv * rhs;
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[k];
        }
    }

    fn col_dot(&self, j: usize, y: &Vector) -> f64 {
        if j < self.n {
            self.a.column(j).dot(y)
        } else {
            -y[j - self.n]
        }
    }

    fn ftran(&self, j: usize) -> Vector {
        if j < self.n {
            &self.binv * self.a.column(j)
        } else {
            -self.binv.column(j - self.n).into_owned()
        }
    }

    fn pivot(&mut self, r: usize, alpha: &Vector) {
        let ar = alpha[r];
        for c in 0..self.m {
            let pr = self.binv[(r, c)] / ar;
            if pr == 0.0 {
                continue;
            }
            let mut col = self.binv.column_mut(c);
            for i in 0..self.m {
                if i == r {
                    col[i] = pr;
                } else if alpha[i] != 0.0 {
                    col[i] -= alpha[i] * pr;
                }
            }
        }
        self.since_refactor += 1;
    }

    /// Phase-1 costs of basic variables, or `None` when the basis is primal feasible.
    fn infeasibility_costs(&self) -> Option<Vector> {
        let mut c = Vector::zeros(self.m);
        let mut any = false;
        for (k, &j) in self.basis.iter().enumerate() {
            let v = self.x[j];
            if v < self.lo[j] - LP_TOL {
                c[k] = -1.0;
                any = true;
            } else if v > self.hi[j] + LP_TOL {
                c[k] = 1.0;
                any = true;
            }
        }
        any.then_some(c)
    }

    fn run(&mut self, max_iter: usize) -> Result<LpStatus> {
        let total = self.n + self.m;
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut iter = 0usize;
        loop {
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return Err(Error::Numerical("singular basis during refactorisation".into()));
            }
            let phase1 = self.infeasibility_costs();
            let cb = match &phase1 {
                Some(c) => c.clone(),
                None => Vector::from_iterator(self.m, self.basis.iter().map(|&j| self.cost[j])),
            };
            let y = self.binv.tr_mul(&cb);

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || (st != State::Free && self.lo[j] == self.hi[j]) {
                    continue;
                }
                let cj = if phase1.is_some() { 0.0 } else { self.cost[j] };
                let d = cj - self.col_dot(j, &y);
                let dir = match st {
                    State::Lower if d < -LP_TOL => 1.0,
                    State::Upper if d > LP_TOL => -1.0,
                    State::Free if d.abs() > LP_TOL => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir, d));
                    break;
                }
                if entering.map_or(true, |(_, _, best)| d.abs() > best.abs()) {
                    entering = Some((j, dir, d));
                }
            }

            let Some((q, dir, _)) = entering else {
                if self.since_refactor > 0 {
                    if !self.refactor() {
                        return Err(Error::Numerical("singular basis at termination".into()));
                    }
                    continue;
                }
                return Ok(if phase1.is_some() {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                });
            };

            iter += 1;
            if iter > max_iter {
                return Err(Error::IterationLimit(max_iter));
            }

            let alpha = self.ftran(q);
            let in_phase1 = phase1.is_some();
            // (row, exact step, target is upper bound)
            let mut limits: Vec<(usize, f64, f64, bool)> = Vec::new();
            let mut theta_max = f64::INFINITY;
            for k in 0..self.m {
                let ak = alpha[k];
                if ak.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[k];
                let rate = -dir * ak;
                let (v, l, u) = (self.x[j], self.lo[j], self.hi[j]);
                let target = if rate < 0.0 {
                    if in_phase1 && v > u + LP_TOL {
                        Some((u, true))
                    } else if l.is_finite() && v >= l - LP_TOL {
                        Some((l, false))
                    } else {
                        None
                    }
                } else if in_phase1 && v < l - LP_TOL {
                    Some((l, false))
                } else if u.is_finite() && v <= u + LP_TOL {
                    Some((u, true))
                } else {
                    None
                };
                if let Some((t, upper)) = target {
                    let exact = ((t - v) / rate).max(0.0);
                    let loose = ((t + HARRIS_RELAX * rate.signum() - v) / rate).max(0.0);
                    theta_max = theta_max.min(loose);
                    limits.push((k, exact, ak.abs(), upper));
                }
            }

            let flip = if self.lo[q].is_finite() && self.hi[q].is_finite() {
                self.hi[q] - self.lo[q]
            } else {
                f64::INFINITY
            };

            let chosen = if bland {
                limits
                    .iter()
                    .filter(|l| l.1 <= theta_max)
                    .min_by(|a, b| {
                        a.1.partial_cmp(&b.1)
                            .unwrap()
                            .then(self.basis[a.0].cmp(&self.basis[b.0]))
                    })
                    .copied()
            } else {
                limits
                    .iter()
                    .filter(|l| l.1 <= theta_max)
                    .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(b.0.cmp(&a.0)))
                    .copied()
            };

            let basic_step = chosen.map_or(f64::INFINITY, |c| c.1);
            if flip.is_finite() && flip <= basic_step {
                // entering variable runs into its own opposite bound
                let step = flip;
                for k in 0..self.m {
                    if alpha[k] != 0.0 {
                        let j = self.basis[k];
                        self.x[j] -= dir * step * alpha[k];
                    }
                }
                let st = if dir > 0.0 { State::Upper } else { State::Lower };
                self.place_nonbasic(q, st);
                degenerate = 0;
                bland = false;
                continue;
            }
            let Some((r, step, _, to_upper)) = chosen else {
                if in_phase1 {
                    return Err(Error::Numerical("phase-1 ray without breakpoint".into()));
                }
                return Ok(LpStatus::Unbounded);
            };

            for k in 0..self.m {
                if alpha[k] != 0.0 {
                    let j = self.basis[k];
                    self.x[j] -= dir * step * alpha[k];
                }
            }
            self.x[q] += dir * step;
            let leaving = self.basis[r];
            self.pivot(r, &alpha);
            self.basis[r] = q;
            self.state[q] = State::Basic;
            let st = if to_upper { State::Upper } else { State::Lower };
            self.place_nonbasic(leaving, st);

            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    fn basis_out(&self) -> Basis {
        Basis {
            basic: self.basis.clone(),
            at_upper: self.state.iter().map(|s| *s == State::Upper).collect(),
            inverse: (self.since_refactor == 0).then(|| Arc::new(self.binv.clone())),
        }
    }
}

/// Solves `p`, optionally warm-started from a previous basis of a same-shaped problem.
/// Returns the solution together with the final basis.
pub fn solve_lp_with_basis(p: &LpProblem, hint: Option<&Basis>) -> Result<(LpSolution, Basis)> {
    let mut e = Engine::new(p);
    e.install(hint);
    let max_iter = 50 * (e.m + e.n) + 1000;
    let status = e.run(max_iter)?;
    let basis = e.basis_out();
    let sol = match status {
        LpStatus::Infeasible => LpSolution::infeasible(),
        LpStatus::Unbounded => LpSolution::unbounded(),
        LpStatus::Optimal => {
            let x = Vector::from_iterator(e.n, e.x[..e.n].iter().copied());
            let cb = Vector::from_iterator(e.m, e.basis.iter().map(|&j| e.cost[j]));
            let mut y = e.binv.tr_mul(&cb);
            for r in 0..e.m {
                y[r] *= e.row_scale[r];
            }
            let obj = p.objective.dot(&x);
            LpSolution {
                status,
                x: Some(x),
                objective_value: obj,
                duals: Some(y),
            }
        }
    };
    Ok((sol, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::LpBuilder;

    #[test]
    fn textbook_two_variable() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18, x, y ≥ 0  ->  36 at (2, 6)
        let mut b = LpBuilder::new();
        let x = b.add_var(0.0, f64::INFINITY, -3.0);
        let y = b.add_var(0.0, f64::INFINITY, -5.0);
        b.add_row(vec![(x, 1.0)], f64::NEG_INFINITY, 4.0);
        b.add_row(vec![(y, 2.0)], f64::NEG_INFINITY, 12.0);
        b.add_row(vec![(x, 3.0), (y, 2.0)], f64::NEG_INFINITY, 18.0);
        let (s, _) = solve_lp_with_basis(&b.build().unwrap(), None).unwrap();
        assert!((s.objective_value + 36.0).abs() < 1e-9);
        let xs = s.x.unwrap();
        assert!((xs[0] - 2.0).abs() < 1e-9 && (xs[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let mut b = LpBuilder::new();
        let x = b.add_var(0.0, 10.0, -1.0);
        let y = b.add_var(0.0, 10.0, -1.0);
        b.add_row(vec![(x, 1.0), (y, 2.0)], f64::NEG_INFINITY, 8.0);
        b.add_row(vec![(x, 3.0), (y, 1.0)], f64::NEG_INFINITY, 9.0);
        let p = b.build().unwrap();
        let (s1, basis) = solve_lp_with_basis(&p, None).unwrap();
        let (s2, _) = solve_lp_with_basis(&p, Some(&basis)).unwrap();
        assert!((s1.objective_value - s2.objective_value).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // many constraints through the optimum
        let mut b = LpBuilder::new();
        let x = b.add_var(0.0, f64::INFINITY, -1.0);
        let y = b.add_var(0.0, f64::INFINITY, -1.0);
        for k in 1..20 {
            let t = k as f64 / 20.0;
            b.add_row(vec![(x, t), (y, 1.0 - t)], f64::NEG_INFINITY, 1.0);
        }
        b.add_row(vec![(x, 1.0)], f64::NEG_INFINITY, 1.0);
        b.add_row(vec![(y, 1.0)], f64::NEG_INFINITY, 1.0);
        let (s, _) = solve_lp_with_basis(&b.build().unwrap(), None).unwrap();
        assert!((s.objective_value + 2.0).abs() < 1e-9);
    }
}
