//! Line zonotopes in constrained lines-generators representation.
//!
//! A line zonotope is `{c + Mδ + Gξ : δ free, ‖ξ‖∞ ≤ 1, Sδ + Aξ = b}`. Zonotopes
//! (no lines, no constraints) and constrained zonotopes (no lines) are special cases.

mod json;
pub use json::fmt_f64;
mod query;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{bdiag, hcat, vcat, vcat_vec, Mat, Vector};

pub use query::{
    interval_hull, is_empty, membership, radius, sample_points, support, DEFAULT_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LineZonotope {
    m: Mat,
    g: Mat,
    c: Vector,
    s: Mat,
    a: Mat,
    b: Vector,
}

/// A line zonotope without lines.
pub type ConstrainedZonotope = LineZonotope;

impl LineZonotope {
    pub fn new(m: Mat, g: Mat, c: Vector, s: Mat, a: Mat, b: Vector) -> Result<Self> {
        let n = c.len();
        check_dim("line matrix rows", n, m.nrows())?;
        check_dim("generator matrix rows", n, g.nrows())?;
        check_dim("line-constraint rows", b.len(), s.nrows())?;
        check_dim("generator-constraint rows", b.len(), a.nrows())?;
        check_dim("line-constraint columns", m.ncols(), s.ncols())?;
        check_dim("generator-constraint columns", g.ncols(), a.ncols())?;
        let finite = [&m, &g, &s, &a].iter().all(|x| x.iter().all(|v| v.is_finite()))
            && c.iter().chain(b.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("line zonotope"));
        }
        Ok(Self { m, g, c, s, a, b })
    }

    /// Constructor for internal callers that already guarantee consistent shapes.
    pub(crate) fn from_parts(m: Mat, g: Mat, c: Vector, s: Mat, a: Mat, b: Vector) -> Self {
        debug_assert!(Self::new(m.clone(), g.clone(), c.clone(), s.clone(), a.clone(), b.clone()).is_ok());
        Self { m, g, c, s, a, b }
    }

    pub fn constrained(g: Mat, c: Vector, a: Mat, b: Vector) -> Result<Self> {
        let n = c.len();
        let nc = b.len();
        Self::new(Mat::zeros(n, 0), g, c, Mat::zeros(nc, 0), a, b)
    }

    pub fn lines(&self) -> &Mat {
        &self.m
    }
    pub fn generators(&self) -> &Mat {
        &self.g
    }
    pub fn center(&self) -> &Vector {
        &self.c
    }
    /// Line block `S` of the constraints.
    pub fn line_constraints(&self) -> &Mat {
        &self.s
    }
    /// Generator block `A` of the constraints.
    pub fn generator_constraints(&self) -> &Mat {
        &self.a
    }
    pub fn constraint_rhs(&self) -> &Vector {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
    pub fn num_lines(&self) -> usize {
        self.m.ncols()
    }
    pub fn num_generators(&self) -> usize {
        self.g.ncols()
    }
    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }
    pub fn is_constrained_zonotope(&self) -> bool {
        self.num_lines() == 0
    }

    pub fn into_parts(self) -> (Mat, Mat, Vector, Mat, Mat, Vector) {
        (self.m, self.g, self.c, self.s, self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    rho: Vector,
    d: f64,
    sigma: f64,
}

impl Strip {
    /// `{x : |ρᵀx - d| ≤ σ}`.
    pub fn new(rho: Vector, d: f64, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("strip half-width {sigma} must be >= 0")));
        }
        if !d.is_finite() || !rho.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("strip"));
        }
        Ok(Self { rho, d, sigma })
    }

    pub fn normal(&self) -> &Vector {
        &self.rho
    }
    pub fn offset(&self) -> f64 {
        self.d
    }
    pub fn half_width(&self) -> f64 {
        self.sigma
    }
}

/// Axis-aligned box; components may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lower: Vector,
    pub upper: Vector,
}

impl Interval {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("interval bounds", lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidArgument("interval with lower > upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(self.upper.iter()).all(|v| v.is_finite())
    }

    /// Half of the largest edge length, infinite when unbounded.
    pub fn radius(&self) -> f64 {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| 0.5 * (u - l))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }
}

/// The zonotope `c ⊕ G B∞`.
pub fn lz_zonotope(g: Mat, c: Vector) -> Result<LineZonotope> {
    let n = c.len();
    let ng = g.ncols();
    LineZonotope::new(Mat::zeros(n, 0), g, c, Mat::zeros(0, 0), Mat::zeros(0, ng), Vector::zeros(0))
}

/// The whole space `Rⁿ` as `(I, _, 0)`.
pub fn lz_realspace(n: usize) -> Result<LineZonotope> {
    if n == 0 {
        return Err(Error::InvalidArgument("real space needs dimension >= 1".into()));
    }
    Ok(LineZonotope::from_parts(
        Mat::identity(n, n),
        Mat::zeros(n, 0),
        Vector::zeros(n),
        Mat::zeros(0, n),
        Mat::zeros(0, 0),
        Vector::zeros(0),
    ))
}

/// `(I, 0, 0, ρᵀ, -σ, d)`: a point `x = δ` with `ρᵀδ - σξ = d`.
pub fn lz_from_strip(s: &Strip) -> LineZonotope {
    let n = s.rho.len();
    LineZonotope::from_parts(
        Mat::identity(n, n),
        Mat::zeros(n, 1),
        Vector::zeros(n),
        Mat::from_row_slice(1, n, s.rho.as_slice()),
        Mat::from_element(1, 1, -s.sigma),
        Vector::from_element(1, s.d),
    )
}

pub fn linear_map(r: &Mat, z: &LineZonotope) -> Result<LineZonotope> {
    check_dim("linear map columns", z.dim(), r.ncols())?;
    Ok(LineZonotope::from_parts(
        r * &z.m,
        r * &z.g,
        r * &z.c,
        z.s.clone(),
        z.a.clone(),
        z.b.clone(),
    ))
}

pub fn minkowski_sum(z: &LineZonotope, w: &LineZonotope) -> Result<LineZonotope> {
    check_dim("minkowski sum", z.dim(), w.dim())?;
    let n = z.dim();
    Ok(LineZonotope::from_parts(
        hcat(n, &[&z.m, &w.m]),
        hcat(n, &[&z.g, &w.g]),
        &z.c + &w.c,
        bdiag(&[&z.s, &w.s]),
        bdiag(&[&z.a, &w.a]),
        vcat_vec(&[&z.b, &w.b]),
    ))
}

/// `Z ∩_R Y = {z ∈ Z : R z ∈ Y}`.
pub fn generalized_intersection(z: &LineZonotope, y: &LineZonotope, r: &Mat) -> Result<LineZonotope> {
    check_dim("intersection map rows", y.dim(), r.nrows())?;
    check_dim("intersection map columns", z.dim(), r.ncols())?;
    let n = z.dim();
    let m = hcat(n, &[&z.m, &Mat::zeros(n, y.num_lines())]);
    let g = hcat(n, &[&z.g, &Mat::zeros(n, y.num_generators())]);
    let nd = z.num_lines() + y.num_lines();
    let ng = z.num_generators() + y.num_generators();
    let s = vcat(nd, &[&bdiag(&[&z.s, &y.s]), &hcat(y.dim(), &[&(r * &z.m), &(-&y.m)])]);
    let a = vcat(ng, &[&bdiag(&[&z.a, &y.a]), &hcat(y.dim(), &[&(r * &z.g), &(-&y.g)])]);
    let b = vcat_vec(&[&z.b, &y.b, &(&y.c - r * &z.c)]);
    Ok(LineZonotope::from_parts(m, g, z.c.clone(), s, a, b))
}

pub fn cartesian_product(z: &LineZonotope, w: &LineZonotope) -> LineZonotope {
    LineZonotope::from_parts(
        bdiag(&[&z.m, &w.m]),
        bdiag(&[&z.g, &w.g]),
        vcat_vec(&[&z.c, &w.c]),
        bdiag(&[&z.s, &w.s]),
        bdiag(&[&z.a, &w.a]),
        vcat_vec(&[&z.b, &w.b]),
    )
}

/// `Rⁿ ∩_{[R₁; …; R_p]} (Z₁ × … × Z_p)`: the points whose images `R_i x` lie in `Z_i`.
pub fn multi_intersection(zs: &[LineZonotope], rs: &[Mat]) -> Result<LineZonotope> {
    if zs.is_empty() {
        return Err(Error::InvalidArgument("multi_intersection needs at least one set".into()));
    }
    check_dim("multi_intersection maps", zs.len(), rs.len())?;
    let n = rs[0].ncols();
    for (z, r) in zs.iter().zip(rs) {
        check_dim("multi_intersection map columns", n, r.ncols())?;
        check_dim("multi_intersection map rows", z.dim(), r.nrows())?;
    }
    let mut prod = zs[0].clone();
    for z in &zs[1..] {
        prod = cartesian_product(&prod, z);
    }
    let blocks: Vec<&Mat> = rs.iter().collect();
    let stacked = vcat(n, &blocks);
    generalized_intersection(&lz_realspace(n)?, &prod, &stacked)
}
