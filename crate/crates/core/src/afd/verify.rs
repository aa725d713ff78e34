use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::separation::{build_separation_problem, check_separation, model_pairs};
use super::{output_tubes, transform_fault_models, AffineLz, FaultModelSet, TransformedModel};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{inverse, vcat_vec, Vector};
use crate::sets::{membership, sample_points, LineZonotope};

/// Membership tolerance used when testing sampled outputs against tubes.
const SAMPLE_TOL: f64 = 1e-7;

fn draw<R: Rng>(z: &LineZonotope, line_box: f64, rng: &mut R) -> Result<Vector> {
    if z.num_lines() == 0 && z.num_constraints() == 0 {
        let xi = Vector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
        return Ok(z.center() + z.generators() * xi);
    }
    Ok(sample_points(z, 1, line_box, rng)?.remove(0))
}

/// Simulated output sequences `(y₀, …, y_N)` of one model under input `ū`. The initial
/// augmented state is drawn from the initial feasible set (lines confined to
/// `[-line_box, line_box]`), disturbances and noise from their sets, and the algebraic
/// states from the static relation.
pub fn sample_output_sequences<R: Rng>(
    f: &FaultModelSet,
    tm: &TransformedModel,
    u: &Vector,
    count: usize,
    line_box: f64,
    rng: &mut R,
) -> Result<Vec<Vector>> {
    let nu = f.n_u();
    check_dim("input sequence", f.sequence_len(), u.len())?;
    let step = |k: usize| u.rows(k * nu, nu).into_owned();
    let (d, nz) = (tm.state_dim(), tm.n_z());
    let n = tm.svd.n();
    let ns = n - nz;
    let nw = d - n;
    let alg = tm.static_state.columns(nz, ns).into_owned();
    let alg_inv = inverse(&alg).ok_or_else(|| Error::Numerical("algebraic states are not determined by the static rows".into()))?;
    let starts = if count == 0 { Vec::new() } else { sample_points(&tm.initial_set(&step(0))?, count, line_box, rng)? };
    let mut out = Vec::with_capacity(count);
    for z0 in starts {
        let mut z = z0;
        let mut ys = Vec::with_capacity(f.horizon + 1);
        for k in 0..=f.horizon {
            if k > 0 {
                let dynamic = &tm.dyn_state * &z + &tm.dyn_input * step(k - 1);
                let w = draw(&f.w, line_box, rng)?;
                let mut next = vcat_vec(&[&dynamic, &Vector::zeros(ns), &w]);
                if ns > 0 {
                    let rhs = -(&tm.static_state * &next) - &tm.static_input * step(k);
                    next.rows_mut(nz, ns).copy_from(&(&alg_inv * rhs));
                }
                z = next;
            }
            debug_assert_eq!(z.len(), nz + ns + nw);
            let v = draw(&f.v, line_box, rng)?;
            ys.push(&tm.output * &z + &tm.feedthrough * step(k) + &tm.noise_output * v);
        }
        let refs: Vec<&Vector> = ys.iter().collect();
        out.push(vcat_vec(&refs));
    }
    Ok(out)
}

/// `counts[i][j]`: how many of `n_samples` simulated output sequences of model `i` lie in
/// the output tube of model `j`.
pub fn verify_diagnosis(f: &FaultModelSet, u: &Vector, n_samples: usize, seed: u64, line_box: f64) -> Result<Vec<Vec<usize>>> {
    let models = transform_fault_models(f)?;
    let tubes = output_tubes(f, &models)?;
    let sets: Vec<LineZonotope> = tubes.iter().map(|t| t.at(u)).collect::<Result<_>>()?;
    models
        .par_iter()
        .enumerate()
        .map(|(i, tm)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let ys = sample_output_sequences(f, tm, u, n_samples, line_box, &mut rng)?;
            sets.iter()
                .map(|set| {
                    let mut hits = 0;
                    for y in &ys {
                        if membership(y, set, SAMPLE_TOL)? {
                            hits += 1;
                        }
                    }
                    Ok(hits)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntersection {
    pub pair: (usize, usize),
    pub kappa: f64,
    /// Whether the two output tubes are disjoint (`κ̂ > 0`).
    pub empty: bool,
}

/// Pairwise intersection status of the output tubes under input `ū`.
pub fn intersection_table(tubes: &[AffineLz], u: &Vector) -> Result<Vec<PairIntersection>> {
    model_pairs(tubes.len())
        .par_iter()
        .map(|&q| {
            let kappa = check_separation(&build_separation_problem(tubes, q)?, u)?;
            Ok(PairIntersection {
                pair: q,
                kappa,
                empty: kappa > 0.0,
            })
        })
        .collect()
}
