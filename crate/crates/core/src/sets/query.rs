use rand::Rng;

use super::{Interval, LineZonotope};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};
use crate::solver::{solve_lp, LpProblem, LpStatus};

pub const DEFAULT_TOL: f64 = 1e-9;

/// LP over `(δ, ξ)` with the set's constraints. `point` adds `c + Mδ + Gξ = point`.
fn parameter_lp(
    z: &LineZonotope,
    objective: Vector,
    point: Option<&Vector>,
    tol: f64,
    line_box: f64,
) -> Result<LpProblem> {
    let (nd, ng, nc, n) = (z.num_lines(), z.num_generators(), z.num_constraints(), z.dim());
    let nv = nd + ng;
    let rows = nc + if point.is_some() { n } else { 0 };
    let mut a = Mat::zeros(rows, nv);
    let mut lo = Vector::zeros(rows);
    let mut hi = Vector::zeros(rows);
    if nc > 0 {
        a.view_mut((0, 0), (nc, nd)).copy_from(&z.s);
        a.view_mut((0, nd), (nc, ng)).copy_from(&z.a);
    }
    for i in 0..nc {
        let slack = tol * (1.0 + z.b[i].abs());
        lo[i] = z.b[i] - slack;
        hi[i] = z.b[i] + slack;
    }
    if let Some(x) = point {
        a.view_mut((nc, 0), (n, nd)).copy_from(&z.m);
        a.view_mut((nc, nd), (n, ng)).copy_from(&z.g);
        for i in 0..n {
            let t = x[i] - z.c[i];
            let slack = tol * (1.0 + t.abs());
            lo[nc + i] = t - slack;
            hi[nc + i] = t + slack;
        }
    }
    let mut cl = Vector::from_element(nv, -(1.0 + tol));
    let mut cu = Vector::from_element(nv, 1.0 + tol);
    for j in 0..nd {
        cl[j] = -line_box;
        cu[j] = line_box;
    }
    LpProblem::with_row_bounds(objective, a, lo, hi, cl, cu)
}

/// Whether `x ∈ Z` up to `tol` (generator box and equalities relaxed by `tol`).
pub fn membership(x: &Vector, z: &LineZonotope, tol: f64) -> Result<bool> {
    check_dim("membership point", z.dim(), x.len())?;
    let nv = z.num_lines() + z.num_generators();
    let lp = parameter_lp(z, Vector::zeros(nv), Some(x), tol, f64::INFINITY)?;
    Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
}

pub fn is_empty(z: &LineZonotope, tol: f64) -> Result<bool> {
    if z.num_constraints() == 0 {
        return Ok(false);
    }
    let nv = z.num_lines() + z.num_generators();
    let lp = parameter_lp(z, Vector::zeros(nv), None, tol, f64::INFINITY)?;
    Ok(solve_lp(&lp)?.status == LpStatus::Infeasible)
}

/// `max_{x ∈ Z} dᵀx`, `+∞` when unbounded in direction `d`.
pub fn support(z: &LineZonotope, d: &Vector) -> Result<f64> {
    check_dim("support direction", z.dim(), d.len())?;
    let dm = z.m.tr_mul(d);
    let dg = z.g.tr_mul(d);
    let obj = -crate::linalg::vcat_vec(&[&dm, &dg]);
    let lp = parameter_lp(z, obj, None, 0.0, f64::INFINITY)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Infeasible => Err(Error::EmptySet),
        LpStatus::Unbounded => Ok(f64::INFINITY),
        LpStatus::Optimal => Ok(d.dot(&z.c) - sol.objective_value),
    }
}

pub fn interval_hull(z: &LineZonotope) -> Result<Interval> {
    let n = z.dim();
    let mut lower = Vector::zeros(n);
    let mut upper = Vector::zeros(n);
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        upper[i] = support(z, &e)?;
        lower[i] = -support(z, &(-e))?;
    }
    Ok(Interval { lower, upper })
}

/// Half of the largest interval-hull edge; `+∞` for unbounded sets.
pub fn radius(z: &LineZonotope) -> Result<f64> {
    Ok(interval_hull(z)?.radius())
}

/// Points of `Z` drawn as random convex combinations of LP vertices in random directions.
/// Line coefficients are confined to `[-line_box, line_box]`, so unbounded sets are
/// sampled on a bounded slice.
pub fn sample_points<R: Rng + ?Sized>(
    z: &LineZonotope,
    count: usize,
    line_box: f64,
    rng: &mut R,
) -> Result<Vec<Vector>> {
    let (n, nd, ng) = (z.dim(), z.num_lines(), z.num_generators());
    let n_vertices = (2 * (n + nd + ng)).clamp(8, 64);
    let mut vertices: Vec<Vector> = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let obj = Vector::from_fn(nd + ng, |_, _| rng.gen_range(-1.0..1.0));
        let lp = parameter_lp(z, obj, None, 0.0, line_box)?;
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let p = sol.x.expect("optimal");
                let x = &z.c + &z.m * p.rows(0, nd) + &z.g * p.rows(nd, ng);
                vertices.push(x);
            }
            LpStatus::Infeasible => return Err(Error::EmptySet),
            LpStatus::Unbounded => return Err(Error::Numerical("bounded sampling LP unbounded".into())),
        }
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let w: Vec<f64> = (0..vertices.len())
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = w.iter().sum();
        let mut x = Vector::zeros(n);
        for (v, wi) in vertices.iter().zip(&w) {
            x.axpy(wi / total, v, 1.0);
        }
        out.push(x);
    }
    Ok(out)
}
