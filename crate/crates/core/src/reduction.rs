//! Complexity reduction: exact line elimination, constraint elimination, generator
//! reduction in the lifted space and line compression.
//!
//! Every routine takes an optional count of trailing generator columns that must be kept
//! untouched (`protected`); these are never substituted out or merged.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{effective_rank, orthonormal_columns, svd_sorted, Mat, Vector};
use crate::sets::LineZonotope;

const SWAP_ROUNDS: usize = 50;
const SWAP_PIVOT_TOL: f64 = 1e-8;

/// Relative pivot tolerance against the row's ∞-norm.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionLimits {
    pub max_generators: usize,
    pub max_constraints: usize,
    pub minimize_lines: bool,
}

impl ReductionLimits {
    pub fn new(max_generators: usize, max_constraints: usize, minimize_lines: bool) -> Self {
        Self {
            max_generators,
            max_constraints,
            minimize_lines,
        }
    }
}

struct Parts {
    m: Mat,
    g: Mat,
    c: Vector,
    s: Mat,
    a: Mat,
    b: Vector,
}

impl Parts {
    fn of(z: &LineZonotope) -> Self {
        let (m, g, c, s, a, b) = z.clone().into_parts();
        Self { m, g, c, s, a, b }
    }

    fn build(self) -> LineZonotope {
        LineZonotope::new(self.m, self.g, self.c, self.s, self.a, self.b)
            .expect("reduction preserves shapes and finiteness")
    }

    fn row_norm(&self, i: usize) -> f64 {
        let s = self.s.row(i).iter().fold(0.0_f64, |x, v| x.max(v.abs()));
        self.a.row(i).iter().fold(s, |x, v| x.max(v.abs()))
    }

    /// Solves constraint `row` for a line (`line = true`) or generator variable `col` and
    /// substitutes it everywhere, then drops the row and the variable.
    fn substitute(mut self, row: usize, col: usize, line: bool) -> Self {
        let (k_row_s, k_row_a, b_row) = (self.s.row(row).into_owned(), self.a.row(row).into_owned(), self.b[row]);
        let p = if line { self.s[(row, col)] } else { self.a[(row, col)] };
        let effect: Vector = if line { self.m.column(col).into_owned() } else { self.g.column(col).into_owned() };
        self.c.axpy(b_row / p, &effect, 1.0);
        self.m -= &effect * (&k_row_s / p);
        self.g -= &effect * (&k_row_a / p);
        for r in 0..self.b.len() {
            if r == row {
                continue;
            }
            let f = if line { self.s[(r, col)] } else { self.a[(r, col)] } / p;
            if f != 0.0 {
                let sr = self.s.row(r) - &k_row_s * f;
                self.s.set_row(r, &sr);
                let ar = self.a.row(r) - &k_row_a * f;
                self.a.set_row(r, &ar);
                self.b[r] -= f * b_row;
            }
        }
        self.s = self.s.remove_row(row);
        self.a = self.a.remove_row(row);
        self.b = self.b.remove_row(row);
        if line {
            self.m = self.m.remove_column(col);
            self.s = self.s.remove_column(col);
        } else {
            self.g = self.g.remove_column(col);
            self.a = self.a.remove_column(col);
        }
        self
    }
}

/// Removes line `j` using constraint `i` as pivot; the set is unchanged.
pub fn eliminate_line(z: &LineZonotope, i: usize, j: usize) -> Result<LineZonotope> {
    if i >= z.num_constraints() || j >= z.num_lines() {
        return Err(Error::IndexOutOfRange(format!(
            "pivot ({i}, {j}) outside a {}x{} line-constraint block",
            z.num_constraints(),
            z.num_lines()
        )));
    }
    let parts = Parts::of(z);
    let piv = parts.s[(i, j)].abs();
    if piv == 0.0 || piv <= PIVOT_TOL * parts.row_norm(i) {
        return Err(Error::ZeroPivot { row: i, col: j });
    }
    Ok(parts.substitute(i, j, true).build())
}

/// Eliminates lines with the largest admissible pivot until none is left, then clears the
/// numerically zero remainder of the line-constraint block and drops `0 = 0` rows.
pub fn eliminate_all_lines(z: &LineZonotope) -> LineZonotope {
    let mut p = Parts::of(z);
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..p.b.len() {
            let tol = PIVOT_TOL * p.row_norm(i);
            for j in 0..p.m.ncols() {
                let v = p.s[(i, j)].abs();
                if v > tol && v > 0.0 && best.map_or(true, |(_, _, bv)| v > bv) {
                    best = Some((i, j, v));
                }
            }
        }
        match best {
            Some((i, j, _)) => p = p.substitute(i, j, true),
            None => break,
        }
    }
    p.s.fill(0.0);
    drop_trivial_rows(p).build()
}

fn drop_trivial_rows(mut p: Parts) -> Parts {
    let mut r = 0;
    while r < p.b.len() {
        let zero_row = p.s.row(r).iter().all(|v| *v == 0.0)
            && p.a.row(r).iter().all(|v| v.abs() <= PIVOT_TOL);
        if zero_row && p.b[r].abs() <= PIVOT_TOL {
            p.s = p.s.remove_row(r);
            p.a = p.a.remove_row(r);
            p.b = p.b.remove_row(r);
        } else {
            r += 1;
        }
    }
    p
}

fn lines_free(z: &LineZonotope) -> bool {
    z.line_constraints().iter().all(|v| *v == 0.0)
}

/// Interval bounds on ξ implied by `Aξ = b` and `‖ξ‖∞ ≤ 1` (a few propagation sweeps).
fn propagate_bounds(a: &Mat, b: &Vector) -> (Vec<f64>, Vec<f64>) {
    let ng = a.ncols();
    let mut lo = vec![-1.0; ng];
    let mut hi = vec![1.0; ng];
    for _ in 0..10 {
        let mut changed = false;
        for r in 0..b.len() {
            for j in 0..ng {
                let arj = a[(r, j)];
                if arj == 0.0 {
                    continue;
                }
                let (l, u) = row_range(a, b, r, j, &lo, &hi);
                if l > lo[j] + 1e-12 {
                    lo[j] = l;
                    changed = true;
                }
                if u < hi[j] - 1e-12 {
                    hi[j] = u;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (lo, hi)
}

/// Range of `ξ_j = (b_r - Σ_{k≠j} A_rk ξ_k) / A_rj` with `ξ_k ∈ [lo_k, hi_k]`.
fn row_range(a: &Mat, b: &Vector, r: usize, j: usize, lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let arj = a[(r, j)];
    let (mut smin, mut smax) = (b[r], b[r]);
    for k in 0..a.ncols() {
        if k == j {
            continue;
        }
        let ark = a[(r, k)];
        if ark > 0.0 {
            smin -= ark * hi[k];
            smax -= ark * lo[k];
        } else if ark < 0.0 {
            smin -= ark * lo[k];
            smax -= ark * hi[k];
        }
    }
    if arj > 0.0 {
        (smin / arj, smax / arj)
    } else {
        (smax / arj, smin / arj)
    }
}

/// Removes one constraint and one generator, enlarging the set. Lines must already be
/// free of constraints.
pub fn eliminate_constraint(z: &LineZonotope) -> Result<LineZonotope> {
    eliminate_constraint_protected(z, 0)
}

pub fn eliminate_constraint_protected(z: &LineZonotope, protected: usize) -> Result<LineZonotope> {
    if z.num_constraints() == 0 {
        return Err(Error::InvalidArgument("no constraints to eliminate".into()));
    }
    if !lines_free(z) {
        return Err(Error::InvalidArgument("lines must be eliminated before constraints".into()));
    }
    let p = Parts::of(z);
    let free = p.g.ncols().saturating_sub(protected);
    let (lo, hi) = propagate_bounds(&p.a, &p.b);
    let mut best: Option<(usize, usize, f64)> = None;
    for r in 0..p.b.len() {
        let tol = PIVOT_TOL * p.row_norm(r);
        for j in 0..free {
            let arj = p.a[(r, j)];
            if arj.abs() <= tol || arj == 0.0 {
                continue;
            }
            let (rl, ru) = row_range(&p.a, &p.b, r, j, &lo, &hi);
            let growth = 0.0_f64.max(ru - 1.0).max(-1.0 - rl);
            let score = p.g.column(j).norm() * growth;
            if best.map_or(true, |(_, _, s)| score < s) {
                best = Some((r, j, score));
            }
        }
    }
    let (r, j, _) = best.ok_or_else(|| Error::InvalidArgument("no eliminable constraint".into()))?;
    Ok(drop_trivial_rows(p.substitute(r, j, false)).build())
}

/// Generators `T diag(s)` of a parallelotope containing `V·B∞`, with `s` the row sums of
/// `|T⁻¹V|`. The basis starts as the smallest-volume one among the axes, the largest
/// independent columns of `V` and the principal directions of `V`, then columns are
/// swapped for columns of `V` while that shrinks the volume.
fn parallelotope_enclosure(v: &Mat) -> Mat {
    let d = v.nrows();
    let mut candidates = vec![Mat::identity(d, d)];
    let mut order: Vec<usize> = (0..v.ncols()).collect();
    order.sort_by(|&x, &y| v.column(y).norm().total_cmp(&v.column(x).norm()).then(x.cmp(&y)));
    let mut basis: Vec<Vector> = Vec::new();
    for &j in &order {
        if basis.len() == d {
            break;
        }
        let mut trial = basis.clone();
        trial.push(v.column(j).into_owned());
        if effective_rank(&Mat::from_columns(&trial), 1e-8) == trial.len() {
            basis = trial;
        }
    }
    for i in 0..d {
        if basis.len() == d {
            break;
        }
        let mut trial = basis.clone();
        trial.push(Vector::from_fn(d, |r, _| (r == i) as u8 as f64));
        if effective_rank(&Mat::from_columns(&trial), 1e-8) == trial.len() {
            basis = trial;
        }
    }
    if basis.len() == d {
        candidates.push(Mat::from_columns(&basis));
    }
    if v.ncols() >= d {
        let (u, _, _) = svd_sorted(v);
        if u.ncols() == d {
            candidates.push(u);
        }
    }
    let log_volume = |t: &Mat| -> Option<(f64, Vector)> {
        let tinv = t.clone().try_inverse()?;
        let s = (&tinv * v).abs().column_sum();
        // degenerate directions cost nothing
        let lv = t.determinant().abs().ln() + s.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).sum::<f64>();
        (lv.is_finite() && s.iter().all(|x| x.is_finite())).then_some((lv, s))
    };
    let mut best: Option<(f64, Mat, Vector)> = None;
    for t in candidates {
        if let Some((lv, s)) = log_volume(&t) {
            if best.as_ref().map_or(true, |b| lv < b.0) {
                best = Some((lv, t, s));
            }
        }
    }
    let Some((mut lv, mut t, mut s)) = best else {
        return Mat::zeros(d, 0);
    };
    // swap basis columns for pool generators while the volume drops; with W = T⁻¹V,
    // replacing column i by v_j scales det T by W_ij and updates W by a rank-one term
    for _ in 0..SWAP_ROUNDS {
        let Some(tinv) = t.clone().try_inverse() else { break };
        let w = &tinv * v;
        let log_det = t.determinant().abs().ln();
        let mut step: Option<(f64, usize, usize)> = None;
        let mut row = vec![0.0; d];
        for j in 0..v.ncols() {
            let y = w.column(j);
            for i in 0..d {
                let yi = y[i];
                if yi.abs() <= SWAP_PIVOT_TOL * y.amax() || yi == 0.0 {
                    continue;
                }
                for (r, sr) in row.iter_mut().enumerate() {
                    *sr = if r == i {
                        w.row(i).iter().map(|x| x.abs()).sum::<f64>() / yi.abs()
                    } else {
                        let f = y[r] / yi;
                        w.row(r).iter().zip(w.row(i).iter()).map(|(a, b)| (a - f * b).abs()).sum::<f64>()
                    };
                }
                let tv = log_det + yi.abs().ln() + row.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).sum::<f64>();
                if tv.is_finite() && tv < lv - 1e-9 * lv.abs().max(1.0) && step.map_or(true, |b| tv < b.0) {
                    step = Some((tv, i, j));
                }
            }
        }
        let Some((_, i, j)) = step else { break };
        let mut trial = t.clone();
        trial.set_column(i, &v.column(j));
        let Some((tv, ts)) = log_volume(&trial) else { break };
        if tv >= lv {
            break;
        }
        t = trial;
        lv = tv;
        s = ts;
    }
    let cols: Vec<Vector> = (0..d).filter(|&i| s[i] > 0.0).map(|i| t.column(i) * s[i]).collect();
    if cols.is_empty() {
        Mat::zeros(d, 0)
    } else {
        Mat::from_columns(&cols)
    }
}

/// Encloses the set with at most `target` generators by merging the smallest lifted
/// generators `[g; a]` into a parallelotope. Lines are untouched.
pub fn reduce_generators(z: &LineZonotope, target: usize) -> Result<LineZonotope> {
    reduce_generators_protected(z, target, 0)
}

pub fn reduce_generators_protected(z: &LineZonotope, target: usize, protected: usize) -> Result<LineZonotope> {
    if !lines_free(z) {
        return Err(Error::InvalidArgument("lines must be eliminated before generator reduction".into()));
    }
    let p = Parts::of(z);
    let (n, nc, ng) = (p.c.len(), p.b.len(), p.g.ncols());
    let free = ng.saturating_sub(protected);
    if free <= target {
        return Ok(z.clone());
    }
    let d = n + nc;
    let mut target = target;
    if target < d {
        warn!("generator target {target} below lifted dimension {d}; clamping");
        target = d;
        if free <= target {
            return Ok(z.clone());
        }
    }
    let lifted = |j: usize| -> Vector {
        let mut v = Vector::zeros(d);
        v.rows_mut(0, n).copy_from(&p.g.column(j));
        v.rows_mut(n, nc).copy_from(&p.a.column(j));
        v
    };
    let mut scored: Vec<(usize, f64)> = (0..free)
        .map(|j| {
            let v = lifted(j);
            (j, v.norm() - v.amax())
        })
        .collect();
    scored.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));
    let k = free - target + d;
    let mut merged = vec![false; free];
    for &(j, _) in scored.iter().take(k) {
        merged[j] = true;
    }
    let pool = Mat::from_columns(&(0..free).filter(|&j| merged[j]).map(lifted).collect::<Vec<_>>());
    let enclosure = parallelotope_enclosure(&pool);
    let kept: Vec<usize> = (0..free).filter(|&j| !merged[j]).collect();
    let total = kept.len() + enclosure.ncols() + protected;
    let mut g = Mat::zeros(n, total);
    let mut a = Mat::zeros(nc, total);
    for (col, &j) in kept.iter().enumerate() {
        g.set_column(col, &p.g.column(j));
        a.set_column(col, &p.a.column(j));
    }
    for (k, v) in enclosure.column_iter().enumerate() {
        let col = kept.len() + k;
        g.set_column(col, &v.rows(0, n));
        a.set_column(col, &v.rows(n, nc));
    }
    for t in 0..protected {
        let col = kept.len() + enclosure.ncols() + t;
        g.set_column(col, &p.g.column(free + t));
        a.set_column(col, &p.a.column(free + t));
    }
    Ok(Parts { g, a, ..p }.build())
}

/// Replaces the line directions by an orthonormal basis of their span. Lines still tied
/// to constraints are eliminated first (exactly).
pub fn compress_lines(z: &LineZonotope) -> LineZonotope {
    let z = if lines_free(z) { z.clone() } else { eliminate_all_lines(z) };
    let mut p = Parts::of(&z);
    p.m = orthonormal_columns(&p.m, PIVOT_TOL);
    p.s = Mat::zeros(p.b.len(), p.m.ncols());
    p.build()
}

/// Lines, then constraints, then generators, then (optionally) line compression.
pub fn reduce(z: &LineZonotope, limits: &ReductionLimits) -> Result<LineZonotope> {
    reduce_protected(z, limits, 0)
}

/// As [`reduce`], keeping the trailing `protected` generator columns intact. The
/// generator limit counts only unprotected columns.
pub fn reduce_protected(z: &LineZonotope, limits: &ReductionLimits, protected: usize) -> Result<LineZonotope> {
    let mut out = eliminate_all_lines(z);
    while out.num_constraints() > limits.max_constraints {
        match eliminate_constraint_protected(&out, protected) {
            Ok(next) => out = next,
            Err(_) => {
                warn!(
                    "constraint limit {} not reachable; stopping at {}",
                    limits.max_constraints,
                    out.num_constraints()
                );
                break;
            }
        }
    }
    if out.num_generators().saturating_sub(protected) > limits.max_generators {
        out = reduce_generators_protected(&out, limits.max_generators, protected)?;
    }
    if limits.minimize_lines {
        out = compress_lines(&out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_from_rows;
    use crate::sets::{lz_from_strip, lz_zonotope, membership, Strip, DEFAULT_TOL};

    #[test]
    fn zero_pivot_is_rejected() {
        let z = LineZonotope::new(
            Mat::identity(2, 2),
            Mat::zeros(2, 0),
            Vector::zeros(2),
            Mat::zeros(1, 2),
            Mat::zeros(1, 0),
            Vector::zeros(1),
        )
        .unwrap();
        assert_eq!(eliminate_line(&z, 0, 0), Err(Error::ZeroPivot { row: 0, col: 0 }));
        assert!(eliminate_line(&z, 3, 0).is_err());
    }

    #[test]
    fn strip_line_elimination_keeps_membership() {
        let s = Strip::new(Vector::from_vec(vec![-1.0, 1.0]), 1.0, 0.5).unwrap();
        let z = lz_from_strip(&s);
        let e = eliminate_line(&z, 0, 1).unwrap();
        assert_eq!((e.num_lines(), e.num_constraints()), (1, 0));
        for &(x, y) in &[(0.0, 1.0), (0.0, 1.5), (3.0, 4.4), (0.0, 2.0), (0.0, 0.4)] {
            let v = Vector::from_vec(vec![x, y]);
            let inside = ((y - x) - 1.0f64).abs() <= 0.5 + 1e-9;
            assert_eq!(membership(&v, &e, DEFAULT_TOL).unwrap(), inside, "({x},{y})");
        }
    }

    #[test]
    fn collinear_lines_collapse() {
        let v = Vector::from_vec(vec![1.0, 2.0, 2.0]);
        let m = crate::linalg::hcat(3, &[&Mat::from_column_slice(3, 1, v.as_slice()), &Mat::from_column_slice(3, 1, (2.0 * &v).as_slice())]);
        let z = LineZonotope::new(m, Mat::zeros(3, 0), Vector::zeros(3), Mat::zeros(0, 2), Mat::zeros(0, 0), Vector::zeros(0)).unwrap();
        let out = compress_lines(&z);
        assert_eq!(out.num_lines(), 1);
        let u = out.lines().column(0);
        assert!((u - &v / 3.0).norm() < 1e-15 || (u + &v / 3.0).norm() < 1e-15);
    }

    #[test]
    fn loose_limits_are_identity() {
        let z = lz_zonotope(mat_from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]), Vector::zeros(2)).unwrap();
        assert_eq!(reduce(&z, &ReductionLimits::new(10, 10, false)).unwrap(), z);
        assert!(eliminate_constraint(&z).is_err());
    }

    #[test]
    fn generator_box_merge_reaches_target() {
        let g = mat_from_rows(&[
            vec![1.0, 0.1, 0.2, -0.1, 0.05, 0.3],
            vec![0.0, 0.2, -0.1, 0.1, 0.05, 0.3],
        ]);
        let z = lz_zonotope(g, Vector::zeros(2)).unwrap();
        let r = reduce_generators(&z, 3).unwrap();
        assert!(r.num_generators() <= 3);
    }
}
