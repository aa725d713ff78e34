use rayon::prelude::*;

use super::{FaultModelSet, TransformedModel};
use crate::error::{check_dim, Result};
use crate::linalg::{bdiag, bdiag_repeat, hcat, repeat_vec, vcat, vcat_vec, Mat, Vector};
use crate::sets::{cartesian_product, generalized_intersection, linear_map, lz_zonotope, minkowski_sum, LineZonotope};

/// A line zonotope whose center and constraint right-hand side depend affinely on an
/// input vector: `c(u) = c0 + cu·u`, `b(u) = b0 + bu·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLz {
    pub m: Mat,
    pub g: Mat,
    pub s: Mat,
    pub a: Mat,
    pub c0: Vector,
    pub cu: Mat,
    pub b0: Vector,
    pub bu: Mat,
}

impl AffineLz {
    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.cu.ncols()
    }

    pub fn at(&self, u: &Vector) -> Result<LineZonotope> {
        check_dim("affine set input", self.num_inputs(), u.len())?;
        LineZonotope::new(
            self.m.clone(),
            self.g.clone(),
            &self.c0 + &self.cu * u,
            self.s.clone(),
            self.a.clone(),
            &self.b0 + &self.bu * u,
        )
    }
}

/// State reachable tube in closed form. Stacked states `(z₀, …, z_N)` have center
/// `Q c_σ + p + H ū` and constraint right-hand side `α + Λ c_σ + Ω ū`.
///
/// Parameter columns are ordered `(initial, admissible step 1, …, step N)` for both lines
/// and generators. Constraint rows are the initial-set rows, then one static block per
/// step `0..=N`, then the admissible-set rows of steps `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTube {
    pub horizon: usize,
    pub state_dim: usize,
    pub q: Mat,
    pub p: Vector,
    pub h: Mat,
    pub m: Mat,
    pub g: Mat,
    pub s: Mat,
    pub a: Mat,
    pub alpha: Vector,
    pub lambda: Mat,
    pub omega: Mat,
    pub c_sigma: Vector,
    pub initial_rows: usize,
    pub static_rows: usize,
    pub admissible_rows: usize,
}

impl StateTube {
    pub fn affine(&self) -> AffineLz {
        AffineLz {
            m: self.m.clone(),
            g: self.g.clone(),
            s: self.s.clone(),
            a: self.a.clone(),
            c0: &self.q * &self.c_sigma + &self.p,
            cu: self.h.clone(),
            b0: &self.alpha + &self.lambda * &self.c_sigma,
            bu: self.omega.clone(),
        }
    }

    pub fn at(&self, u: &Vector) -> Result<LineZonotope> {
        self.affine().at(u)
    }
}

fn put(dst: &mut Mat, r: usize, c: usize, src: &Mat) {
    if src.nrows() > 0 && src.ncols() > 0 {
        dst.view_mut((r, c), src.shape()).copy_from(src);
    }
}

pub fn build_state_tube(tm: &TransformedModel, horizon: usize) -> StateTube {
    let n_steps = horizon + 1;
    let d = tm.state_dim();
    let nz = tm.n_z();
    let nf = d - nz;
    let nu = tm.dyn_input.ncols();
    let ns = tm.static_state.nrows();
    let zs = &tm.initial;
    let za = &tm.admissible;
    let (l0, g0, c0r) = (zs.num_lines(), zs.num_generators(), zs.num_constraints());
    let (la, ga, car) = (za.num_lines(), za.num_generators(), za.num_constraints());

    let phi = vcat(d, &[&tm.dyn_state, &Mat::zeros(nf, d)]);
    let bp = vcat(nu, &[&tm.dyn_input, &Mat::zeros(nf, nu)]);
    let embed = vcat(nf, &[&Mat::zeros(nz, nf), &Mat::identity(nf, nf)]);
    let mut pow = vec![Mat::identity(d, d)];
    for k in 1..n_steps {
        pow.push(&phi * &pow[k - 1]);
    }
    let ea_m = &embed * za.lines();
    let ea_g = &embed * za.generators();
    let ea_c = &embed * za.center();

    let nl = l0 + horizon * la;
    let ng = g0 + horizon * ga;
    let nrows = c0r + n_steps * ns + horizon * car;
    let mut q = Mat::zeros(n_steps * d, d);
    let mut p = Vector::zeros(n_steps * d);
    let mut h = Mat::zeros(n_steps * d, n_steps * nu);
    let mut m = Mat::zeros(n_steps * d, nl);
    let mut g = Mat::zeros(n_steps * d, ng);
    for k in 0..n_steps {
        let r = k * d;
        put(&mut q, r, 0, &pow[k]);
        put(&mut m, r, 0, &(&pow[k] * zs.lines()));
        put(&mut g, r, 0, &(&pow[k] * zs.generators()));
        for j in 1..=k {
            let ph = &pow[k - j];
            put(&mut h, r, (j - 1) * nu, &(ph * &bp));
            put(&mut m, r, l0 + (j - 1) * la, &(ph * &ea_m));
            put(&mut g, r, g0 + (j - 1) * ga, &(ph * &ea_g));
            p.rows_mut(r, d).axpy(1.0, &(ph * &ea_c), 1.0);
        }
    }

    let mut s = Mat::zeros(nrows, nl);
    let mut a = Mat::zeros(nrows, ng);
    let mut beta = Vector::zeros(nrows);
    let mut upsilon = Mat::zeros(nrows, n_steps * d);
    let mut gamma = Mat::zeros(nrows, n_steps * nu);
    put(&mut s, 0, 0, zs.line_constraints());
    put(&mut a, 0, 0, zs.generator_constraints());
    beta.rows_mut(0, c0r).copy_from(zs.constraint_rhs());
    for k in 0..n_steps {
        let r = c0r + k * ns;
        put(&mut s, r, 0, &(&tm.static_state * m.rows(k * d, d)));
        put(&mut a, r, 0, &(&tm.static_state * g.rows(k * d, d)));
        put(&mut upsilon, r, k * d, &(-&tm.static_state));
        put(&mut gamma, r, k * nu, &(-&tm.static_input));
    }
    for j in 1..n_steps {
        let r = c0r + n_steps * ns + (j - 1) * car;
        put(&mut s, r, l0 + (j - 1) * la, za.line_constraints());
        put(&mut a, r, g0 + (j - 1) * ga, za.generator_constraints());
        beta.rows_mut(r, car).copy_from(za.constraint_rhs());
    }
    let alpha = &beta + &upsilon * &p;
    let lambda = &upsilon * &q;
    let omega = &gamma + &upsilon * &h;
    StateTube {
        horizon,
        state_dim: d,
        q,
        p,
        h,
        m,
        g,
        s,
        a,
        alpha,
        lambda,
        omega,
        c_sigma: zs.center().clone(),
        initial_rows: c0r,
        static_rows: ns,
        admissible_rows: car,
    }
}

/// The tube for a fixed input, built step by step from the set operations. Rows come out
/// interleaved as `(initial, static 0, admissible 1, static 1, …)`.
pub fn state_tube_recursion(tm: &TransformedModel, horizon: usize, u: &Vector) -> Result<LineZonotope> {
    let d = tm.state_dim();
    let nz = tm.n_z();
    let nf = d - nz;
    let nu = tm.dyn_input.ncols();
    check_dim("input sequence", (horizon + 1) * nu, u.len())?;
    let ns = tm.static_state.nrows();
    let step = |k: usize| u.rows(k * nu, nu).into_owned();
    let static_point = |k: usize| lz_zonotope(Mat::zeros(ns, 0), -(&tm.static_input * step(k)));
    let mut tube = generalized_intersection(&tm.initial, &static_point(0)?, &tm.static_state)?;
    let phi = vcat(d, &[&tm.dyn_state, &Mat::zeros(nf, d)]);
    let embed = vcat(nf, &[&Mat::zeros(nz, nf), &Mat::identity(nf, nf)]);
    for k in 1..=horizon {
        let prev = k * d;
        let mut last = Mat::zeros(d, prev);
        last.view_mut((0, prev - d), (d, d)).fill_with_identity();
        let prod = cartesian_product(&tube, &tm.admissible);
        let r = vcat(
            prev + nf,
            &[&hcat(prev, &[&Mat::identity(prev, prev), &Mat::zeros(prev, nf)]), &hcat(d, &[&(&phi * &last), &embed])],
        );
        let mapped = linear_map(&r, &prod)?;
        let mut shift = Vector::zeros(prev + d);
        shift.rows_mut(prev, nz).copy_from(&(&tm.dyn_input * step(k - 1)));
        let moved = minkowski_sum(&mapped, &lz_zonotope(Mat::zeros(prev + d, 0), shift)?)?;
        let mut sel = Mat::zeros(ns, prev + d);
        put(&mut sel, 0, prev, &tm.static_state);
        tube = generalized_intersection(&moved, &static_point(k)?, &sel)?;
    }
    Ok(tube)
}

/// Output tube `F̄ Z̄ ⊕ D̄ū ⊕ D̄v V̄` with its affine dependence on `ū`.
pub fn build_output_tube(tm: &TransformedModel, tube: &StateTube, v: &LineZonotope) -> Result<AffineLz> {
    let n_steps = tube.horizon + 1;
    check_dim("noise set", tm.noise_output.ncols(), v.dim())?;
    let f = bdiag_repeat(&tm.output, n_steps);
    let dd = bdiag_repeat(&tm.feedthrough, n_steps);
    let dv = bdiag_repeat(&tm.noise_output, n_steps);
    let vm = bdiag_repeat(v.lines(), n_steps);
    let vg = bdiag_repeat(v.generators(), n_steps);
    let vs = bdiag_repeat(v.line_constraints(), n_steps);
    let va = bdiag_repeat(v.generator_constraints(), n_steps);
    let vc = repeat_vec(v.center(), n_steps);
    let vb = repeat_vec(v.constraint_rhs(), n_steps);
    let rows = f.nrows();
    let st = tube.affine();
    Ok(AffineLz {
        m: hcat(rows, &[&(&f * &st.m), &(&dv * &vm)]),
        g: hcat(rows, &[&(&f * &st.g), &(&dv * &vg)]),
        s: bdiag(&[&st.s, &vs]),
        a: bdiag(&[&st.a, &va]),
        c0: &f * &st.c0 + &dv * vc,
        cu: &f * &st.cu + dd,
        b0: vcat_vec(&[&st.b0, &vb]),
        bu: vcat(st.bu.ncols(), &[&st.bu, &Mat::zeros(vb.len(), st.bu.ncols())]),
    })
}

/// Output tubes of every model, in model order.
pub fn output_tubes(f: &FaultModelSet, models: &[TransformedModel]) -> Result<Vec<AffineLz>> {
    models
        .par_iter()
        .map(|tm| build_output_tube(tm, &build_state_tube(tm, f.horizon), &f.v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afd::tests::scalar_set;
    use crate::afd::transform_fault_models;

    #[test]
    fn horizon_zero_is_the_initial_set() {
        let f = scalar_set(&[0.2]);
        let tm = &transform_fault_models(&f).unwrap()[0];
        let tube = build_state_tube(tm, 0);
        assert_eq!(tube.at(&Vector::zeros(1)).unwrap(), tm.initial_set(&Vector::zeros(1)).unwrap());
        assert_eq!(tube.h, Mat::zeros(2, 1));
    }

    #[test]
    fn one_step_input_block() {
        let f = scalar_set(&[0.2]);
        let tm = &transform_fault_models(&f).unwrap()[0];
        let tube = build_state_tube(tm, 1);
        // z₁ = (0.2 x₀ + w₀ + u₀, w₁): only the dynamic row sees u₀
        let mut expected = Mat::zeros(4, 2);
        expected[(2, 0)] = 1.0;
        assert_eq!(tube.h, expected);
    }
}
