//! Open-loop active fault diagnosis with reachable tubes.
//!
//! Every candidate model is written in SVD coordinates with the disturbance appended to
//! the state, `z = (T⁻¹x, w)`. The tube of all state trajectories over `[0, N]` is a line
//! zonotope whose center and constraint right-hand side are affine in the stacked input
//! `ū`. An input separates two models when the difference of their output tubes misses
//! the origin, which is certified by a small LP and designed with a MILP.

mod design;
mod separation;
mod tube;
mod verify;

pub use design::{design_from_tubes, design_input, design_input_cz, Design, PairCertificate};
pub use separation::{
    bound_kappa_max, build_separation_problem, check_separation, input_dependent_reduce, input_problem,
    model_pairs, ring_facets, ring_kappa, zonotope_equivalent, ReducedSeparation, RingFacet, RingForm, SeparationProblem,
};
pub use tube::{
    build_output_tube, build_state_tube, output_tubes, state_tube_recursion, AffineLz, StateTube,
};
pub use verify::{intersection_table, sample_output_sequences, verify_diagnosis, PairIntersection};

use crate::error::{check_dim, Error, Result};
use crate::estimator::{svd_transform, DescriptorModel, SvdTransform, RANK_TOL};
use crate::linalg::{hcat, Mat, Vector};
use crate::sets::{cartesian_product, generalized_intersection, linear_map, lz_realspace, lz_zonotope, LineZonotope};

/// Complexity limits for the separation sets. The generator cap is
/// `floor(generator_factor × dim)`, counted without the input generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfdLimits {
    pub generator_factor: f64,
    pub max_constraints: Option<usize>,
}

impl AfdLimits {
    pub fn generator_cap(&self, dim: usize) -> usize {
        (self.generator_factor * dim as f64).floor().max(1.0) as usize
    }
}

/// Candidate models with their shared bounds and the input design data.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultModelSet {
    pub models: Vec<DescriptorModel>,
    pub x0: LineZonotope,
    pub w: LineZonotope,
    pub v: LineZonotope,
    /// Set of admissible input sequences `(u₀, …, u_N)`, without lines.
    pub input_set: LineZonotope,
    pub u0: Vector,
    pub horizon: usize,
    pub epsilon: f64,
    pub reference: Vector,
    /// Diagonal of the cost weight `R` in `‖R(ū - ũ)‖₁`.
    pub cost_weights: Vector,
    pub limits: AfdLimits,
}

impl FaultModelSet {
    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.models.first() else {
            return Err(Error::InvalidArgument("at least one model is required".into()));
        };
        let dims = |m: &DescriptorModel| (m.n(), m.n_u(), m.n_w(), m.n_y(), m.n_v());
        let d0 = dims(first);
        if self.models.iter().any(|m| dims(m) != d0) {
            return Err(Error::InvalidArgument("models must share n, n_u, n_w, n_y and n_v".into()));
        }
        let (n, nu, nw, _, nv) = d0;
        check_dim("initial set", n, self.x0.dim())?;
        check_dim("disturbance set", nw, self.w.dim())?;
        check_dim("noise set", nv, self.v.dim())?;
        let len = self.sequence_len();
        check_dim("input sequence set", len, self.input_set.dim())?;
        check_dim("initial input", nu, self.u0.len())?;
        check_dim("reference sequence", len, self.reference.len())?;
        check_dim("cost weights", len, self.cost_weights.len())?;
        if self.input_set.num_lines() > 0 {
            return Err(Error::InvalidArgument("the input set must be bounded (no lines)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("separation threshold must be positive".into()));
        }
        if self.cost_weights.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidArgument("cost weights must be positive".into()));
        }
        if !(self.limits.generator_factor > 0.0) {
            return Err(Error::InvalidArgument("generator factor must be positive".into()));
        }
        Ok(())
    }

    pub fn n_u(&self) -> usize {
        self.models[0].n_u()
    }

    pub fn n_y(&self) -> usize {
        self.models[0].n_y()
    }

    /// Length of the stacked input `ū`.
    pub fn sequence_len(&self) -> usize {
        (self.horizon + 1) * self.models.first().map_or(0, |m| m.n_u())
    }
}

/// `U × … × U` with `steps` factors.
pub fn sequence_set(per_step: &LineZonotope, steps: usize) -> Result<LineZonotope> {
    if steps == 0 {
        return Err(Error::InvalidArgument("a sequence needs at least one step".into()));
    }
    let mut out = per_step.clone();
    for _ in 1..steps {
        out = cartesian_product(&out, per_step);
    }
    Ok(out)
}

/// A model in the augmented coordinates `z = (T⁻¹x, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedModel {
    pub svd: SvdTransform,
    /// `F = C T [I 0]`.
    pub output: Mat,
    pub feedthrough: Mat,
    pub noise_output: Mat,
    /// `[Ã B̃w]`.
    pub dyn_state: Mat,
    pub dyn_input: Mat,
    /// `[Ǎ B̌w]`.
    pub static_state: Mat,
    pub static_input: Mat,
    /// `T⁻¹X₀ × W`.
    pub initial: LineZonotope,
    /// Set for the coordinates not driven by the dynamics, `ž = (static part, w)`.
    pub admissible: LineZonotope,
}

impl TransformedModel {
    pub fn state_dim(&self) -> usize {
        self.dyn_state.ncols()
    }

    pub fn n_z(&self) -> usize {
        self.svd.n_z
    }

    /// The initial set with the static rows at `k = 0` imposed for input `u₀`.
    pub fn initial_set(&self, u0: &Vector) -> Result<LineZonotope> {
        let point = lz_zonotope(Mat::zeros(self.static_state.nrows(), 0), -(&self.static_input * u0))?;
        generalized_intersection(&self.initial, &point, &self.static_state)
    }
}

fn transform_one(m: &DescriptorModel, f: &FaultModelSet, admissible_static: &dyn Fn(&SvdTransform) -> Result<Option<LineZonotope>>) -> Result<TransformedModel> {
    let t = svd_transform(m, RANK_TOL)?;
    let (n, nw) = (m.n(), m.n_w());
    let output = hcat(m.n_y(), &[&(&m.c * &t.t), &Mat::zeros(m.n_y(), nw)]);
    let dyn_state = hcat(t.n_z, &[&t.dyn_state, &t.dyn_noise]);
    let static_state = hcat(n - t.n_z, &[&t.static_state, &t.static_noise]);
    let initial = cartesian_product(&linear_map(&t.t_inv, &f.x0)?, &f.w);
    let admissible = match admissible_static(&t)? {
        Some(s) => cartesian_product(&s, &f.w),
        None => f.w.clone(),
    };
    Ok(TransformedModel {
        output,
        feedthrough: m.d.clone(),
        noise_output: m.dv.clone(),
        dyn_state,
        dyn_input: t.dyn_input.clone(),
        static_state,
        static_input: t.static_input.clone(),
        initial,
        admissible,
        svd: t,
    })
}

/// Augmented models where the static coordinates are unrestricted (`ℝ^{n-n_z} × W`).
pub fn transform_fault_models(f: &FaultModelSet) -> Result<Vec<TransformedModel>> {
    f.validate()?;
    f.models
        .iter()
        .map(|m| {
            transform_one(m, f, &|t| {
                let ns = t.n() - t.n_z;
                if ns == 0 {
                    Ok(None)
                } else {
                    Ok(Some(lz_realspace(ns)?))
                }
            })
        })
        .collect()
}

/// Augmented models for the bounded baseline: the static coordinates are confined to the
/// matching rows of `T⁻¹X_A`.
pub fn transform_fault_models_cz(f: &FaultModelSet, x_a: &LineZonotope) -> Result<Vec<TransformedModel>> {
    f.validate()?;
    check_dim("admissible set", f.models[0].n(), x_a.dim())?;
    f.models
        .iter()
        .map(|m| {
            transform_one(m, f, &|t| {
                if t.n() == t.n_z {
                    Ok(None)
                } else {
                    Ok(Some(linear_map(&t.static_coordinates(), x_a)?))
                }
            })
        })
        .collect()
}
