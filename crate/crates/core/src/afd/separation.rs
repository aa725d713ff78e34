use super::{AfdLimits, AffineLz};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{bdiag, effective_rank, hcat, independent_rows, inverse, pinv, select_entries, select_rows, vcat, vcat_vec, Mat, Vector};
use crate::reduction::{reduce_protected, ReductionLimits};
use crate::sets::LineZonotope;
use crate::solver::{solve_lp, LpBuilder, LpStatus};

/// Ordered pairs `(i, j)`, `i < j`.
pub fn model_pairs(count: usize) -> Vec<(usize, usize)> {
    (0..count).flat_map(|i| (i + 1..count).map(move |j| (i, j))).collect()
}

/// Pairwise separation data. The tubes of models `i` and `j` intersect for input `ū`
/// iff `[N; Ω] ū` lies in the lifted set `([M; S], [G; A], [c; -b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationProblem {
    pub pair: (usize, usize),
    pub input_map: Mat,
    pub rhs_map: Mat,
    pub lines: Mat,
    pub generators: Mat,
    pub center: Vector,
    pub line_constraints: Mat,
    pub generator_constraints: Mat,
    pub rhs: Vector,
}

impl SeparationProblem {
    /// The lifted set as an unconstrained line zonotope.
    pub fn lifted_set(&self) -> LineZonotope {
        let nl = self.lines.ncols();
        let ng = self.generators.ncols();
        LineZonotope::new(
            vcat(nl, &[&self.lines, &self.line_constraints]),
            vcat(ng, &[&self.generators, &self.generator_constraints]),
            vcat_vec(&[&self.center, &(-&self.rhs)]),
            Mat::zeros(0, nl),
            Mat::zeros(0, ng),
            Vector::zeros(0),
        )
        .expect("consistent block shapes")
    }

    pub fn lifted_point(&self, u: &Vector) -> Vector {
        vcat_vec(&[&(&self.input_map * u), &(&self.rhs_map * u)])
    }
}

pub fn build_separation_problem(tubes: &[AffineLz], pair: (usize, usize)) -> Result<SeparationProblem> {
    let (i, j) = pair;
    if i == j {
        return Err(Error::InvalidArgument("a model cannot be separated from itself".into()));
    }
    if i >= tubes.len() || j >= tubes.len() {
        return Err(Error::IndexOutOfRange(format!("pair ({i}, {j}) with {} models", tubes.len())));
    }
    let (ti, tj) = (&tubes[i], &tubes[j]);
    check_dim("output tube dimension", ti.dim(), tj.dim())?;
    check_dim("output tube inputs", ti.num_inputs(), tj.num_inputs())?;
    let rows = ti.dim();
    Ok(SeparationProblem {
        pair,
        input_map: &tj.cu - &ti.cu,
        rhs_map: vcat(ti.num_inputs(), &[&ti.bu, &tj.bu]),
        lines: hcat(rows, &[&ti.m, &(-&tj.m)]),
        generators: hcat(rows, &[&ti.g, &(-&tj.g)]),
        center: &ti.c0 - &tj.c0,
        line_constraints: bdiag(&[&ti.s, &tj.s]),
        generator_constraints: bdiag(&[&ti.a, &tj.a]),
        rhs: vcat_vec(&[&ti.b0, &tj.b0]),
    })
}

/// `min κ` subject to `lines·δ + gens·ξ = target`, `‖ξ‖∞ ≤ 1 + κ`. Infeasible targets
/// give `+∞`; with no generators a feasible target gives `-1`.
pub(crate) fn kappa_lp(lines: &Mat, gens: &Mat, target: &Vector) -> Result<f64> {
    let (nl, ng) = (lines.ncols(), gens.ncols());
    let mut lp = LpBuilder::new();
    let d0 = lp.add_vars(nl, f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let x0 = lp.add_vars(ng, f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let kappa = lp.add_var(-1.0, f64::INFINITY, 1.0);
    for r in 0..target.len() {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(nl + ng);
        row.extend((0..nl).filter(|&c| lines[(r, c)] != 0.0).map(|c| (d0 + c, lines[(r, c)])));
        row.extend((0..ng).filter(|&c| gens[(r, c)] != 0.0).map(|c| (x0 + c, gens[(r, c)])));
        lp.add_eq(row, target[r]);
    }
    for c in 0..ng {
        lp.add_row(vec![(x0 + c, 1.0), (kappa, -1.0)], f64::NEG_INFINITY, 1.0);
        lp.add_row(vec![(x0 + c, -1.0), (kappa, -1.0)], f64::NEG_INFINITY, 1.0);
    }
    let sol = solve_lp(&lp.build()?)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective_value),
        LpStatus::Infeasible => Ok(f64::INFINITY),
        LpStatus::Unbounded => Err(Error::Numerical("separation LP unbounded".into())),
    }
}

/// Optimal `κ̂` for input `ū`; the tubes are disjoint iff `κ̂ > 0`.
pub fn check_separation(sp: &SeparationProblem, u: &Vector) -> Result<f64> {
    check_dim("input sequence", sp.input_map.ncols(), u.len())?;
    let lifted = sp.lifted_set();
    let target = sp.lifted_point(u) - lifted.center();
    kappa_lp(lifted.lines(), lifted.generators(), &target)
}

/// The separation set rewritten over the input-set factors `ξ_u` (`ū = c_u + G_u ξ_u`):
/// the tubes are disjoint iff `0` is not in this set for the chosen `ξ_u`. The input
/// generators are the trailing columns.
pub fn input_problem(sp: &SeparationProblem, input_set: &LineZonotope) -> Result<LineZonotope> {
    check_dim("input set", sp.input_map.ncols(), input_set.dim())?;
    let (gu, cu, au, bu) = (input_set.generators(), input_set.center(), input_set.generator_constraints(), input_set.constraint_rhs());
    let nl = sp.lines.ncols();
    let ng = sp.generators.ncols();
    let ngu = gu.ncols();
    let ncy = sp.rhs.len();
    let ncu = bu.len();
    let dim = sp.center.len();
    let g = hcat(dim, &[&sp.generators, &(-(&sp.input_map * gu))]);
    let c = &sp.center - &sp.input_map * cu;
    let s = vcat(nl, &[&sp.line_constraints, &Mat::zeros(ncu, nl)]);
    let a = vcat(
        ng + ngu,
        &[
            &hcat(ncy, &[&sp.generator_constraints, &(-(&sp.rhs_map * gu))]),
            &hcat(ncu, &[&Mat::zeros(ncu, ng), au]),
        ],
    );
    let b = vcat_vec(&[&(&sp.rhs + &sp.rhs_map * cu), bu]);
    LineZonotope::new(sp.lines.clone(), g, c, s, a, b)
}

/// Reduced separation set whose trailing `protected` generator columns carry `ξ_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSeparation {
    pub pair: (usize, usize),
    pub set: LineZonotope,
    pub protected: usize,
}

/// Reduces the input-parametrised separation set while keeping the input generators.
/// Lines end up free of constraints and with full column rank.
pub fn input_dependent_reduce(sp: &SeparationProblem, input_set: &LineZonotope, limits: &AfdLimits) -> Result<ReducedSeparation> {
    let z = input_problem(sp, input_set)?;
    let protected = input_set.num_generators();
    let lim = ReductionLimits::new(
        limits.generator_cap(z.dim()),
        limits.max_constraints.unwrap_or(usize::MAX),
        true,
    );
    let set = reduce_protected(&z, &lim, protected)?;
    Ok(ReducedSeparation {
        pair: sp.pair,
        set,
        protected,
    })
}

/// Zonotope form of the reduced condition: separation holds for `ξ_u` iff
/// `input_map·ξ_u ∉ (generators, center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingForm {
    pub pair: (usize, usize),
    pub input_map: Mat,
    pub generators: Mat,
    pub center: Vector,
}

pub fn zonotope_equivalent(r: &ReducedSeparation) -> Result<RingForm> {
    let z = &r.set;
    if z.num_lines() > 0 && z.line_constraints().iter().any(|&x| x != 0.0) {
        return Err(Error::InvalidArgument("lines must be free of constraints".into()));
    }
    let free = z.num_generators() - r.protected;
    let dim = z.dim();
    let nc = z.num_constraints();
    let rows = dim + nc;
    let nl = z.num_lines();
    let (g, a) = (z.generators(), z.generator_constraints());
    let input_map = -vcat(r.protected, &[&g.columns(free, r.protected).into_owned(), &a.columns(free, r.protected).into_owned()]);
    let lines = vcat(nl, &[z.lines(), &Mat::zeros(nc, nl)]);
    let gens = vcat(free, &[&g.columns(0, free).into_owned(), &a.columns(0, free).into_owned()]);
    let center = vcat_vec(&[z.center(), &(-z.constraint_rhs())]);
    if nl == 0 {
        return Ok(RingForm {
            pair: r.pair,
            input_map,
            generators: gens,
            center,
        });
    }
    if effective_rank(&lines, 1e-10) < nl {
        return Err(Error::Numerical("line matrix is rank deficient".into()));
    }
    let plus = independent_rows(&lines, nl);
    let minus: Vec<usize> = (0..rows).filter(|i| !plus.contains(i)).collect();
    let mp_inv = inverse(&select_rows(&lines, &plus)).ok_or_else(|| Error::Numerical("line pivot block is singular".into()))?;
    let proj = select_rows(&lines, &minus) * mp_inv;
    let eliminate = |x: &Mat| select_rows(x, &minus) - &proj * select_rows(x, &plus);
    Ok(RingForm {
        pair: r.pair,
        input_map: eliminate(&input_map),
        generators: eliminate(&gens),
        center: select_entries(&center, &minus) - &proj * select_entries(&center, &plus),
    })
}

/// `κ̂` of the zonotope form at `ξ_u`.
pub fn ring_kappa(ring: &RingForm, xi_u: &Vector) -> Result<f64> {
    check_dim("input factors", ring.input_map.ncols(), xi_u.len())?;
    let target = &ring.input_map * xi_u - &ring.center;
    kappa_lp(&Mat::zeros(target.len(), 0), &ring.generators, &target)
}

/// Upper bound on `κ̂(ξ_u)` over `‖ξ_u‖∞ ≤ 1` from the minimum-norm solution
/// `ξ = P(N̊ξ_u - c̊)`, `P = pinv(G̊)`, bounded entrywise by interval arithmetic.
pub fn bound_kappa_max(ring: &RingForm) -> Result<f64> {
    let rows = ring.generators.nrows();
    if ring.input_map.ncols() == 0 {
        return ring_kappa(ring, &Vector::zeros(0));
    }
    if rows == 0 {
        return Err(Error::Numerical("zonotope form has no rows; the pair cannot be separated".into()));
    }
    if effective_rank(&ring.generators, 1e-10) < rows {
        return Err(Error::Numerical("zonotope form generators do not span its space; the bound is unbounded".into()));
    }
    let p = pinv(&ring.generators, 1e-12);
    let pc = &p * &ring.center;
    let pn = &p * &ring.input_map;
    let worst = (0..p.nrows())
        .map(|i| pc[i].abs() + pn.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    Ok(worst - 1.0)
}

/// A facet of the zonotope `{generators·ξ : ‖ξ‖∞ ≤ 1}` of a ring form.
#[derive(Debug, Clone, PartialEq)]
pub struct RingFacet {
    /// Outer normal scaled so that the support value is one: `‖Gᵀ·normal‖₁ = 1`.
    pub normal: Vector,
    /// Sign of each generator's contribution on the facet (`0` for generators parallel
    /// to it).
    pub pattern: Vec<i8>,
}

const FACET_ZERO_TOL: f64 = 1e-10;

fn cofactor_normal(cols: &Mat) -> Vector {
    let m = cols.nrows();
    if m == 1 {
        return Vector::from_element(1, 1.0);
    }
    Vector::from_fn(m, |i, _| {
        let minor = cols.clone().remove_row(i);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All facets of the ring zonotope, each listed once per orientation. `None` when the
/// generators do not span the space or the enumeration would exceed `max_facets`
/// candidate subsets.
pub fn ring_facets(ring: &RingForm, max_facets: usize) -> Option<Vec<RingFacet>> {
    let g = &ring.generators;
    let m = g.nrows();
    if m == 0 || effective_rank(g, 1e-10) < m {
        return None;
    }
    let scale = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let live: Vec<usize> = (0..g.ncols()).filter(|&j| g.column(j).amax() > 1e-14 * scale).collect();
    let k = m - 1;
    if binomial(live.len(), k) > max_facets as f64 {
        return None;
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let cols = Mat::from_fn(m, k, |r, c| g[(r, live[idx[c]])]);
        let a = cofactor_normal(&cols);
        let norm = a.norm();
        let bound: f64 = (0..k).map(|c| cols.column(c).norm()).product();
        if norm > 1e-10 * bound.max(f64::MIN_POSITIVE) {
            let unit = &a / norm;
            let lead = unit.iter().find(|v| v.abs() > 1e-9).map_or(1.0, |v| v.signum());
            let key: Vec<i64> = unit.iter().map(|v| (v * lead * 1e8).round() as i64).collect();
            if seen.insert(key) {
                let proj = g.tr_mul(&unit);
                let support = proj.iter().map(|v| v.abs()).sum::<f64>();
                for sign in [1.0, -1.0] {
                    let pattern = proj
                        .iter()
                        .map(|&v| {
                            if v.abs() <= FACET_ZERO_TOL * support {
                                0
                            } else if sign * v > 0.0 {
                                1
                            } else {
                                -1
                            }
                        })
                        .collect();
                    out.push(RingFacet {
                        normal: &unit * (sign / support),
                        pattern,
                    });
                }
            }
        }
        if k == 0 || !next_combination(&mut idx, live.len()) {
            break;
        }
    }
    Some(out)
}
