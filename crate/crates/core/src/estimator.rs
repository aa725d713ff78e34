//! Set-based state estimation for linear descriptor systems
//! `E x_k = A x_{k-1} + B u_{k-1} + Bw w_{k-1}`, `y_k = C x_k + D u_k + Dv v_k`.
//!
//! The state is moved to SVD coordinates `z = T⁻¹x = (z̃, ž)`, where `z̃` follows the
//! dynamics and `ž` is fixed only implicitly by the static rows
//! `0 = Ǎ z + B̌ u + B̌w w`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{bdiag, hcat, inverse, svd_sorted, vcat, vcat_vec, Mat, Vector};
use crate::reduction::{reduce, ReductionLimits};
use crate::sets::{generalized_intersection, is_empty, linear_map, lz_realspace, LineZonotope, DEFAULT_TOL};

/// Relative singular-value cutoff used to decide the rank of `E`.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorModel {
    pub e: Mat,
    pub a: Mat,
    pub b: Mat,
    pub bw: Mat,
    pub c: Mat,
    pub d: Mat,
    pub dv: Mat,
}

impl DescriptorModel {
    pub fn new(e: Mat, a: Mat, b: Mat, bw: Mat, c: Mat, d: Mat, dv: Mat) -> Result<Self> {
        let n = a.nrows();
        check_dim("E rows", n, e.nrows())?;
        check_dim("E columns", n, e.ncols())?;
        check_dim("A columns", n, a.ncols())?;
        check_dim("B rows", n, b.nrows())?;
        check_dim("Bw rows", n, bw.nrows())?;
        check_dim("C columns", n, c.ncols())?;
        check_dim("D rows", c.nrows(), d.nrows())?;
        check_dim("D columns", b.ncols(), d.ncols())?;
        check_dim("Dv rows", c.nrows(), dv.nrows())?;
        for m in [&e, &a, &b, &bw, &c, &d, &dv] {
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("descriptor model"));
            }
        }
        Ok(Self { e, a, b, bw, c, d, dv })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_w(&self) -> usize {
        self.bw.ncols()
    }
    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }
    pub fn n_v(&self) -> usize {
        self.dv.ncols()
    }
}

/// Model matrices in SVD coordinates, split into dynamic (`~`) and static (`ˇ`) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTransform {
    pub t: Mat,
    pub t_inv: Mat,
    pub u: Mat,
    pub singular_values: Vector,
    pub n_z: usize,
    pub dyn_state: Mat,
    pub dyn_input: Mat,
    pub dyn_noise: Mat,
    pub static_state: Mat,
    pub static_input: Mat,
    pub static_noise: Mat,
}

impl SvdTransform {
    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// Rows of `T⁻¹` giving the static coordinates `ž`.
    pub fn static_coordinates(&self) -> Mat {
        self.t_inv.rows(self.n_z, self.n() - self.n_z).into_owned()
    }
}

pub fn svd_transform(m: &DescriptorModel, rank_tol: f64) -> Result<SvdTransform> {
    let n = m.n();
    let (u, s, v) = svd_sorted(&m.e);
    let smax = s.get(0).copied().unwrap_or(0.0);
    let n_z = s.iter().filter(|&&x| smax > 0.0 && x > rank_tol * smax).count();
    let t = v.clone();
    let t_inv = v.transpose();
    let mut scale = Vector::from_element(n, 1.0);
    for i in 0..n_z {
        scale[i] = 1.0 / s[i];
    }
    let ut = u.transpose();
    let scaled = |x: &Mat| -> Mat {
        let mut r = &ut * x;
        for i in 0..n {
            r.row_mut(i).scale_mut(scale[i]);
        }
        r
    };
    let sa = scaled(&(&m.a * &t));
    let sb = scaled(&m.b);
    let sw = scaled(&m.bw);
    let ns = n - n_z;
    Ok(SvdTransform {
        dyn_state: sa.rows(0, n_z).into_owned(),
        dyn_input: sb.rows(0, n_z).into_owned(),
        dyn_noise: sw.rows(0, n_z).into_owned(),
        static_state: sa.rows(n_z, ns).into_owned(),
        static_input: sb.rows(n_z, ns).into_owned(),
        static_noise: sw.rows(n_z, ns).into_owned(),
        t,
        t_inv,
        u,
        singular_values: s,
        n_z,
    })
}

/// `(y - D u) ⊕ (-Dv V)`: the states' output images consistent with a measurement.
pub fn measurement_set(m: &DescriptorModel, v: &LineZonotope, u: &Vector, y: &Vector) -> Result<LineZonotope> {
    check_dim("measurement", m.n_y(), y.len())?;
    check_dim("input", m.n_u(), u.len())?;
    let img = linear_map(&(-&m.dv), v)?;
    let (mm, g, c, s, a, b) = img.into_parts();
    LineZonotope::new(mm, g, c + y - &m.d * u, s, a, b)
}

/// `{x ∈ X0 : C x + D u0 + Dv v = y0, v ∈ V}`.
pub fn measurement_consistent_set(
    m: &DescriptorModel,
    x0: &LineZonotope,
    v: &LineZonotope,
    u0: &Vector,
    y0: &Vector,
) -> Result<LineZonotope> {
    generalized_intersection(x0, &measurement_set(m, v, u0, y0)?, &m.c)
}

/// Appends `w ∈ W` and the static rows `Ǎ z + B̌ u + B̌w w = 0` to a set in z-coordinates.
fn with_static_rows(t: &SvdTransform, z: &LineZonotope, w: &LineZonotope, u: &Vector) -> LineZonotope {
    let (m0, g0, c0, s0, a0, b0) = z.clone().into_parts();
    let n = z.dim();
    let (nd, ng) = (m0.ncols() + w.num_lines(), g0.ncols() + w.num_generators());
    let chk = &t.static_state;
    let m = hcat(n, &[&m0, &Mat::zeros(n, w.num_lines())]);
    let g = hcat(n, &[&g0, &Mat::zeros(n, w.num_generators())]);
    let ns = chk.nrows();
    let s = vcat(
        nd,
        &[
            &bdiag(&[&s0, w.line_constraints()]),
            &hcat(ns, &[&(chk * &m0), &(&t.static_noise * w.lines())]),
        ],
    );
    let a = vcat(
        ng,
        &[
            &bdiag(&[&a0, w.generator_constraints()]),
            &hcat(ns, &[&(chk * &g0), &(&t.static_noise * w.generators())]),
        ],
    );
    let rhs = -(chk * &c0) - &t.static_noise * w.center() - &t.static_input * u;
    let b = vcat_vec(&[&b0, w.constraint_rhs(), &rhs]);
    LineZonotope::new(m, g, c0, s, a, b).expect("consistent blocks")
}

/// Initial set in z-coordinates: the measurement-consistent initial states, mapped by
/// `T⁻¹`, with the static relation at time 0 attached (one copy of `W` for `w₀`).
pub fn initial_feasible_set(
    m: &DescriptorModel,
    t: &SvdTransform,
    x0: &LineZonotope,
    w: &LineZonotope,
    v: &LineZonotope,
    u0: &Vector,
    y0: &Vector,
) -> Result<LineZonotope> {
    check_dim("initial set", m.n(), x0.dim())?;
    check_dim("disturbance set", m.n_w(), w.dim())?;
    let xhat0 = measurement_consistent_set(m, x0, v, u0, y0)?;
    let z0 = linear_map(&t.t_inv, &xhat0)?;
    Ok(with_static_rows(t, &z0, w, u0))
}

/// Prediction with `ž_k` unconstrained.
pub fn predict(
    t: &SvdTransform,
    zhat_prev: &LineZonotope,
    w: &LineZonotope,
    u_prev: &Vector,
    u_k: &Vector,
) -> Result<LineZonotope> {
    let ns = t.n() - t.n_z;
    if ns == 0 {
        let empty = LineZonotope::new(
            Mat::zeros(0, 0),
            Mat::zeros(0, 0),
            Vector::zeros(0),
            Mat::zeros(0, 0),
            Mat::zeros(0, 0),
            Vector::zeros(0),
        )?;
        return predict_with_static(t, zhat_prev, w, &empty, u_prev, u_k);
    }
    predict_with_static(t, zhat_prev, w, &lz_realspace(ns)?, u_prev, u_k)
}

/// Prediction where the static coordinates `ž_k` range over `static_set`.
/// Column blocks: previous set, `w_{k-1}`, `w_k`, then the static set.
pub fn predict_with_static(
    t: &SvdTransform,
    zhat_prev: &LineZonotope,
    w: &LineZonotope,
    static_set: &LineZonotope,
    u_prev: &Vector,
    u_k: &Vector,
) -> Result<LineZonotope> {
    let (n, nz) = (t.n(), t.n_z);
    let ns = n - nz;
    check_dim("previous set", n, zhat_prev.dim())?;
    check_dim("static set", ns, static_set.dim())?;
    check_dim("disturbance set", t.dyn_noise.ncols(), w.dim())?;
    let at = &t.dyn_state;
    let bwt = &t.dyn_noise;
    let (mh, gh, ch) = (zhat_prev.lines(), zhat_prev.generators(), zhat_prev.center());
    let (mw, gw, cw) = (w.lines(), w.generators(), w.center());
    let (ms, gs, cs) = (static_set.lines(), static_set.generators(), static_set.center());
    let (ndh, ndw, nds) = (mh.ncols(), mw.ncols(), ms.ncols());
    let (ngh, ngw, ngs) = (gh.ncols(), gw.ncols(), gs.ncols());

    let top_m = hcat(nz, &[&(at * mh), &(bwt * mw), &Mat::zeros(nz, ndw), &Mat::zeros(nz, nds)]);
    let bot_m = hcat(ns, &[&Mat::zeros(ns, ndh + 2 * ndw), ms]);
    let m = vcat(ndh + 2 * ndw + nds, &[&top_m, &bot_m]);
    let top_g = hcat(nz, &[&(at * gh), &(bwt * gw), &Mat::zeros(nz, ngw), &Mat::zeros(nz, ngs)]);
    let bot_g = hcat(ns, &[&Mat::zeros(ns, ngh + 2 * ngw), gs]);
    let g = vcat(ngh + 2 * ngw + ngs, &[&top_g, &bot_g]);
    let c_dyn = at * ch + &t.dyn_input * u_prev + bwt * cw;
    let c = vcat_vec(&[&c_dyn, cs]);

    // Ǎ acting on the (z̃, ž) blocks
    let chk_dyn = t.static_state.columns(0, nz).into_owned();
    let chk_st = t.static_state.columns(nz, ns).into_owned();
    let nrow = t.static_state.nrows();
    let s_static = hcat(
        nrow,
        &[&(&chk_dyn * at * mh), &(&chk_dyn * bwt * mw), &(&t.static_noise * mw), &(&chk_st * ms)],
    );
    let a_static = hcat(
        nrow,
        &[&(&chk_dyn * at * gh), &(&chk_dyn * bwt * gw), &(&t.static_noise * gw), &(&chk_st * gs)],
    );
    let s = vcat(
        m.ncols(),
        &[
            &bdiag(&[zhat_prev.line_constraints(), w.line_constraints(), w.line_constraints(), static_set.line_constraints()]),
            &s_static,
        ],
    );
    let a = vcat(
        g.ncols(),
        &[
            &bdiag(&[
                zhat_prev.generator_constraints(),
                w.generator_constraints(),
                w.generator_constraints(),
                static_set.generator_constraints(),
            ]),
            &a_static,
        ],
    );
    let rhs = -(&t.static_state * &c) - &t.static_input * u_k - &t.static_noise * cw;
    let b = vcat_vec(&[
        zhat_prev.constraint_rhs(),
        w.constraint_rhs(),
        w.constraint_rhs(),
        static_set.constraint_rhs(),
        &rhs,
    ]);
    LineZonotope::new(m, g, c, s, a, b)
}

/// Measurement update `Z̄ ∩_{CT} ((y - D u) ⊕ (-Dv V))`. An empty result is returned as is.
pub fn update(
    t: &SvdTransform,
    zbar: &LineZonotope,
    m: &DescriptorModel,
    v: &LineZonotope,
    u_k: &Vector,
    y_k: &Vector,
) -> Result<LineZonotope> {
    let meas = measurement_set(m, v, u_k, y_k)?;
    generalized_intersection(zbar, &meas, &(&m.c * &t.t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub k: usize,
    /// Enclosure in z-coordinates.
    pub zhat: LineZonotope,
    /// Enclosure in x-coordinates.
    pub xhat: LineZonotope,
    /// The update returned an empty set (measurements inconsistent with the model bounds).
    pub empty: bool,
    /// Time spent in complexity reduction at this step.
    pub reduce_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub limits: ReductionLimits,
    /// Admissible state set. When given, the static coordinates are confined to its image
    /// and the initial set is intersected with it (the constrained-zonotope baseline).
    pub admissible: Option<LineZonotope>,
}

pub fn estimate_run(
    m: &DescriptorModel,
    x0: &LineZonotope,
    w: &LineZonotope,
    v: &LineZonotope,
    inputs: &[Vector],
    outputs: &[Vector],
    limits: &ReductionLimits,
) -> Result<Vec<EstimatorState>> {
    estimate_run_with(
        m,
        x0,
        w,
        v,
        inputs,
        outputs,
        &RunOptions {
            limits: *limits,
            admissible: None,
        },
    )
}

pub fn estimate_run_with(
    m: &DescriptorModel,
    x0: &LineZonotope,
    w: &LineZonotope,
    v: &LineZonotope,
    inputs: &[Vector],
    outputs: &[Vector],
    opt: &RunOptions,
) -> Result<Vec<EstimatorState>> {
    if inputs.is_empty() || inputs.len() != outputs.len() {
        return Err(Error::InvalidArgument(format!(
            "need aligned non-empty input/output sequences, got {} and {}",
            inputs.len(),
            outputs.len()
        )));
    }
    let t = svd_transform(m, RANK_TOL)?;
    let ns = t.n() - t.n_z;
    let (x0, static_set) = match &opt.admissible {
        Some(xa) => {
            let x0a = generalized_intersection(x0, xa, &Mat::identity(m.n(), m.n()))?;
            (x0a, Some(linear_map(&t.static_coordinates(), xa)?))
        }
        None => (x0.clone(), None),
    };

    let mut states = Vec::with_capacity(inputs.len());
    let xhat0 = measurement_consistent_set(m, &x0, v, &inputs[0], &outputs[0])?;
    let z0 = initial_feasible_set(m, &t, &x0, w, v, &inputs[0], &outputs[0])?;
    let (zhat, empty, secs) = finish_step(&z0, opt)?;
    states.push(EstimatorState {
        k: 0,
        xhat: if empty { linear_map(&t.t, &zhat)? } else { xhat0 },
        zhat,
        empty,
        reduce_seconds: secs,
    });

    for k in 1..inputs.len() {
        let prev = states.last().expect("k >= 1");
        if prev.empty {
            let mut s = prev.clone();
            s.k = k;
            s.reduce_seconds = 0.0;
            states.push(s);
            continue;
        }
        let zbar = match &static_set {
            Some(st) if ns > 0 => predict_with_static(&t, &prev.zhat, w, st, &inputs[k - 1], &inputs[k])?,
            _ => predict(&t, &prev.zhat, w, &inputs[k - 1], &inputs[k])?,
        };
        let zk = update(&t, &zbar, m, v, &inputs[k], &outputs[k])?;
        let (zhat, empty, secs) = finish_step(&zk, opt)?;
        states.push(EstimatorState {
            k,
            xhat: linear_map(&t.t, &zhat)?,
            zhat,
            empty,
            reduce_seconds: secs,
        });
    }
    Ok(states)
}

fn finish_step(z: &LineZonotope, opt: &RunOptions) -> Result<(LineZonotope, bool, f64)> {
    if is_empty(z, DEFAULT_TOL)? {
        return Ok((z.clone(), true, 0.0));
    }
    let start = Instant::now();
    let r = reduce(z, &opt.limits)?;
    Ok((r, false, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub outputs: Vec<Vector>,
    pub disturbances: Vec<Vector>,
    pub noise: Vec<Vector>,
}

fn box_sample<R: Rng>(z: &LineZonotope, rng: &mut R, what: &str) -> Result<Vector> {
    if z.num_lines() > 0 || z.num_constraints() > 0 {
        return Err(Error::InvalidArgument(format!("{what} must be a zonotope for sampling")));
    }
    let xi = Vector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
    Ok(z.center() + z.generators() * xi)
}

/// Recovers `ž` from the static relation given `z̃`, `u` and `w`.
fn solve_static(t: &SvdTransform, z_dyn: &Vector, u: &Vector, w: &Vector) -> Result<Vector> {
    let (n, nz) = (t.n(), t.n_z);
    let ns = n - nz;
    if ns == 0 {
        return Ok(Vector::zeros(0));
    }
    let a1 = t.static_state.columns(0, nz);
    let a2 = t.static_state.columns(nz, ns).into_owned();
    let inv = inverse(&a2).ok_or_else(|| Error::Numerical("static block is singular; algebraic states are not determined".into()))?;
    let rhs = -(a1 * z_dyn) - &t.static_input * u - &t.static_noise * w;
    Ok(inv * rhs)
}

/// Simulates the model with disturbances and measurement noise drawn uniformly from the
/// generator boxes of `W` and `V`. The algebraic part of `x0` is recomputed so that the
/// static relation holds with the sampled `w₀`.
pub fn simulate(
    m: &DescriptorModel,
    x0: &Vector,
    inputs: &[Vector],
    w: &LineZonotope,
    v: &LineZonotope,
    seed: u64,
) -> Result<Trajectory> {
    check_dim("initial state", m.n(), x0.len())?;
    let t = svd_transform(m, RANK_TOL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nz = t.n_z;
    let mut tr = Trajectory {
        states: Vec::new(),
        outputs: Vec::new(),
        disturbances: Vec::new(),
        noise: Vec::new(),
    };
    let mut z_dyn: Vector = (&t.t_inv * x0).rows(0, nz).into_owned();
    for (k, u) in inputs.iter().enumerate() {
        check_dim("input", m.n_u(), u.len())?;
        if k > 0 {
            let zp = &t.t_inv * &tr.states[k - 1];
            z_dyn = &t.dyn_state * zp + &t.dyn_input * &inputs[k - 1] + &t.dyn_noise * &tr.disturbances[k - 1];
        }
        let wk = box_sample(w, &mut rng, "W")?;
        let vk = box_sample(v, &mut rng, "V")?;
        let z_st = solve_static(&t, &z_dyn, u, &wk)?;
        let x = &t.t * vcat_vec(&[&z_dyn, &z_st]);
        let y = &m.c * &x + &m.d * u + &m.dv * &vk;
        tr.states.push(x);
        tr.outputs.push(y);
        tr.disturbances.push(wk);
        tr.noise.push(vk);
    }
    Ok(tr)
}
