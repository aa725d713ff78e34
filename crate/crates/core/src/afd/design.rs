use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::separation::{
    bound_kappa_max, build_separation_problem, check_separation, input_dependent_reduce, model_pairs, ring_facets,
    ring_kappa, zonotope_equivalent, RingFacet, RingForm, SeparationProblem,
};
use super::{output_tubes, transform_fault_models, transform_fault_models_cz, AffineLz, FaultModelSet};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::sets::LineZonotope;
use crate::solver::{solve_milp_branching, Brancher, LpBuilder, LpStatus, MilpOptions, MilpProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCertificate {
    pub pair: (usize, usize),
    /// `κ̂` of the unreduced problem at the designed input.
    pub kappa: f64,
    /// `κ̂` of the reduced zonotope form at the designed input factors.
    pub reduced_kappa: f64,
    /// Big-M bound used in the MILP.
    pub kappa_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub input: Vector,
    pub factors: Vector,
    pub cost: f64,
    pub certificates: Vec<PairCertificate>,
    /// Summed time spent reducing the pairwise separation sets.
    pub reduce_seconds: f64,
}

/// Designs a separating input for the line zonotope tubes.
pub fn design_input(f: &FaultModelSet) -> Result<Design> {
    let models = transform_fault_models(f)?;
    design_from_tubes(f, &output_tubes(f, &models)?)
}

/// Designs a separating input for the bounded baseline with admissible state set `x_a`.
pub fn design_input_cz(f: &FaultModelSet, x_a: &LineZonotope) -> Result<Design> {
    let models = transform_fault_models_cz(f, x_a)?;
    design_from_tubes(f, &output_tubes(f, &models)?)
}

pub fn design_from_tubes(f: &FaultModelSet, tubes: &[AffineLz]) -> Result<Design> {
    f.validate()?;
    let horizon = f.horizon;
    let pairs = model_pairs(tubes.len());
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("at least two models are needed for a diagnosis".into()));
    }
    let problems: Vec<SeparationProblem> = pairs
        .iter()
        .map(|&q| build_separation_problem(tubes, q))
        .collect::<Result<_>>()?;
    let reduced: Vec<(RingForm, f64)> = problems
        .par_iter()
        .map(|sp| {
            let t0 = Instant::now();
            let r = input_dependent_reduce(sp, &f.input_set, &f.limits)?;
            let secs = t0.elapsed().as_secs_f64();
            Ok((zonotope_equivalent(&r)?, secs))
        })
        .collect::<Result<_>>()?;
    let reduce_seconds = reduced.iter().map(|(_, s)| s).sum();
    let rings: Vec<RingForm> = reduced.into_iter().map(|(r, _)| r).collect();
    let mut kappa_max = Vec::with_capacity(rings.len());
    for ring in &rings {
        if ring.generators.nrows() == 0 {
            return Err(Error::NoSeparatingInput(horizon));
        }
        let km = bound_kappa_max(ring)?;
        if km < f.epsilon {
            info!("pair {:?} cannot reach the threshold (bound {km})", ring.pair);
            return Err(Error::NoSeparatingInput(horizon));
        }
        kappa_max.push(km);
    }

    let (milp, layout) = build_design_milp(f, &rings, &kappa_max)?;
    let facets: Vec<Option<Vec<RingFacet>>> = rings.par_iter().map(|r| ring_facets(r, MAX_FACET_SUBSETS)).collect();
    let brancher = PatternBrancher {
        rings: &rings,
        facets: &facets,
        layout: &layout,
    };
    let sol = solve_milp_branching(&milp, &MilpOptions::default(), &brancher)?;
    let xi_first = layout.xi;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NoSeparatingInput(horizon));
    }
    let x = sol.x.expect("optimal");
    let ngu = f.input_set.num_generators();
    let factors = x.rows(xi_first, ngu).into_owned();
    let mut input = f.input_set.center() + f.input_set.generators() * &factors;
    let nu = f.n_u();
    input.rows_mut(0, nu).copy_from(&f.u0);
    let cost = (&input - &f.reference)
        .iter()
        .zip(f.cost_weights.iter())
        .map(|(d, r)| (r * d).abs())
        .sum();

    let certificates: Vec<PairCertificate> = problems
        .par_iter()
        .zip(rings.par_iter())
        .zip(kappa_max.par_iter())
        .map(|((sp, ring), &km)| {
            Ok(PairCertificate {
                pair: sp.pair,
                kappa: check_separation(sp, &input)?,
                reduced_kappa: ring_kappa(ring, &factors)?,
                kappa_max: km,
            })
        })
        .collect::<Result<_>>()?;
    for c in &certificates {
        if c.kappa <= 0.0 {
            return Err(Error::Numerical(format!(
                "designed input fails certification for pair {:?} (kappa {})",
                c.pair, c.kappa
            )));
        }
        if c.kappa < f.epsilon * (1.0 - 1e-6) {
            warn!("pair {:?} certified at {} below the threshold {}", c.pair, c.kappa, f.epsilon);
        }
    }
    Ok(Design {
        input,
        factors,
        cost,
        certificates,
        reduce_seconds,
    })
}

/// Column positions of the design MILP.
struct MilpLayout {
    xi: usize,
    n_xi: usize,
    /// First `p₁` and `p₂` column and generator count per pair.
    pairs: Vec<(usize, usize, usize)>,
}

const MAX_FACET_SUBSETS: usize = 200_000;

/// Branches on a whole pair at once: every child fixes the pair's binaries to the active
/// pattern of one facet of its zonotope form. A separating `ξ_u` puts the pair's target
/// outside the scaled zonotope, hence beyond one of its facets, so the children cover
/// every feasible input.
struct PatternBrancher<'a> {
    rings: &'a [RingForm],
    facets: &'a [Option<Vec<RingFacet>>],
    layout: &'a MilpLayout,
}

impl Brancher for PatternBrancher<'_> {
    fn branch(&self, x: &Vector, lower: &Vector, upper: &Vector) -> Option<Vec<Vec<(usize, f64)>>> {
        let xi = x.rows(self.layout.xi, self.layout.n_xi).into_owned();
        let fixed = |c: usize| lower[c] == upper[c];
        let allows = |c: usize, v: f64| lower[c] <= v && v <= upper[c];
        let mut pick: Option<(f64, Vec<(f64, usize)>, usize)> = None;
        for (q, &(p1, p2, ng)) in self.layout.pairs.iter().enumerate() {
            let Some(facets) = &self.facets[q] else { continue };
            if (0..ng).all(|j| fixed(p1 + j) && fixed(p2 + j)) {
                continue;
            }
            let ring = &self.rings[q];
            let target = &ring.input_map * &xi - &ring.center;
            let mut scored: Vec<(f64, usize)> = facets
                .iter()
                .enumerate()
                .filter(|(_, fc)| {
                    fc.pattern.iter().enumerate().all(|(j, &s)| allows(p1 + j, (s == 1) as u8 as f64) && allows(p2 + j, (s == -1) as u8 as f64))
                })
                .map(|(i, fc)| (fc.normal.dot(&target), i))
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let worst = scored.first().map_or(f64::NEG_INFINITY, |s| s.0);
            if pick.as_ref().map_or(true, |p| worst < p.0) {
                pick = Some((worst, scored, q));
            }
        }
        let (_, scored, q) = pick?;
        let (p1, p2, _) = self.layout.pairs[q];
        let facets = self.facets[q].as_ref().expect("picked pairs have facets");
        Some(
            scored
                .into_iter()
                .map(|(_, i)| {
                    facets[i]
                        .pattern
                        .iter()
                        .enumerate()
                        .flat_map(|(j, &s)| [(p1 + j, (s == 1) as u8 as f64), (p2 + j, (s == -1) as u8 as f64)])
                        .collect()
                })
                .collect(),
        )
    }
}

/// The mixed-integer program over `ξ_u`: each pair's zonotope-form LP is replaced by its
/// optimality conditions, with binaries selecting the active bound of every generator.
fn build_design_milp(f: &FaultModelSet, rings: &[RingForm], kappa_max: &[f64]) -> Result<(MilpProblem, MilpLayout)> {
    let u = &f.input_set;
    let (gu, cu, au, bu) = (u.generators(), u.center(), u.generator_constraints(), u.constraint_rhs());
    let ngu = gu.ncols();
    let len = f.sequence_len();
    let mut lp = LpBuilder::new();
    let mut binaries = Vec::new();
    let xi = lp.add_vars(ngu, -1.0, 1.0, 0.0);
    let mut layout = MilpLayout {
        xi,
        n_xi: ngu,
        pairs: Vec::with_capacity(rings.len()),
    };
    let t = lp.add_vars(len, 0.0, f64::INFINITY, 1.0);
    let xi_terms = |r: usize, scale: f64| -> Vec<(usize, f64)> {
        (0..ngu).filter(|&c| gu[(r, c)] != 0.0).map(|c| (xi + c, scale * gu[(r, c)])).collect()
    };
    for r in 0..len {
        let w = f.cost_weights[r];
        let off = w * (cu[r] - f.reference[r]);
        let mut up = xi_terms(r, -w);
        up.push((t + r, 1.0));
        lp.add_row(up, off, f64::INFINITY);
        let mut down = xi_terms(r, w);
        down.push((t + r, 1.0));
        lp.add_row(down, -off, f64::INFINITY);
    }
    for r in 0..au.nrows() {
        let row = (0..ngu).filter(|&c| au[(r, c)] != 0.0).map(|c| (xi + c, au[(r, c)])).collect();
        lp.add_eq(row, bu[r]);
    }
    for r in 0..f.n_u() {
        lp.add_eq(xi_terms(r, 1.0), f.u0[r] - cu[r]);
    }

    for (ring, &km) in rings.iter().zip(kappa_max) {
        let (m, ng) = ring.generators.shape();
        let big = 2.0 * (1.0 + km);
        let kappa = lp.add_var(f.epsilon, km, 0.0);
        let z = lp.add_vars(ng, -(1.0 + km), 1.0 + km, 0.0);
        let lam = lp.add_vars(m, f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let mu1 = lp.add_vars(ng, 0.0, 1.0, 0.0);
        let mu2 = lp.add_vars(ng, 0.0, 1.0, 0.0);
        let p1 = lp.add_vars(ng, 0.0, 1.0, 0.0);
        let p2 = lp.add_vars(ng, 0.0, 1.0, 0.0);
        binaries.extend(p1..p1 + ng);
        binaries.extend(p2..p2 + ng);
        layout.pairs.push((p1, p2, ng));
        for r in 0..m {
            let mut row: Vec<(usize, f64)> = (0..ngu)
                .filter(|&c| ring.input_map[(r, c)] != 0.0)
                .map(|c| (xi + c, ring.input_map[(r, c)]))
                .collect();
            row.extend((0..ng).filter(|&c| ring.generators[(r, c)] != 0.0).map(|c| (z + c, -ring.generators[(r, c)])));
            lp.add_eq(row, ring.center[r]);
        }
        for j in 0..ng {
            lp.add_row(vec![(z + j, 1.0), (kappa, -1.0)], f64::NEG_INFINITY, 1.0);
            lp.add_row(vec![(z + j, -1.0), (kappa, -1.0)], f64::NEG_INFINITY, 1.0);
            let mut stat: Vec<(usize, f64)> = (0..m)
                .filter(|&r| ring.generators[(r, j)] != 0.0)
                .map(|r| (lam + r, ring.generators[(r, j)]))
                .collect();
            stat.push((mu1 + j, -1.0));
            stat.push((mu2 + j, 1.0));
            lp.add_eq(stat, 0.0);
            lp.add_row(vec![(mu1 + j, 1.0), (p1 + j, -1.0)], f64::NEG_INFINITY, 0.0);
            lp.add_row(vec![(mu2 + j, 1.0), (p2 + j, -1.0)], f64::NEG_INFINITY, 0.0);
            lp.add_row(vec![(z + j, 1.0), (kappa, -1.0), (p1 + j, -big)], 1.0 - big, f64::INFINITY);
            lp.add_row(vec![(z + j, 1.0), (kappa, 1.0), (p2 + j, big)], f64::NEG_INFINITY, big - 1.0);
            lp.add_row(vec![(p1 + j, 1.0), (p2 + j, 1.0)], f64::NEG_INFINITY, 1.0);
        }
        let sum: Vec<(usize, f64)> = (0..ng).flat_map(|j| [(mu1 + j, 1.0), (mu2 + j, 1.0)]).collect();
        lp.add_eq(sum, 1.0);
    }
    Ok((MilpProblem::new(lp.build()?, binaries)?, layout))
}
