#![allow(dead_code)]

use lz_setkit::afd::{AfdLimits, FaultModelSet};
use lz_setkit::estimator::DescriptorModel;
use lz_setkit::linalg::{eye, mat_from_rows, repeat_vec, Mat, Vector};
use lz_setkit::sets::{lz_realspace, lz_zonotope, LineZonotope};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn unit_box(n: usize) -> LineZonotope {
    lz_zonotope(eye(n), Vector::zeros(n)).unwrap()
}

pub fn random_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

/// A random nonempty line zonotope: the right-hand side is generated from a feasible
/// parameter with `‖ξ‖∞ ≤ 0.5`.
pub fn random_lz<R: Rng>(rng: &mut R, n: usize, lines: usize, gens: usize, cons: usize) -> LineZonotope {
    let m = random_mat(rng, n, lines, 1.0);
    let g = random_mat(rng, n, gens, 1.0);
    let c = random_vec(rng, n, 1.0);
    let s = random_mat(rng, cons, lines, 1.0);
    let a = random_mat(rng, cons, gens, 1.0);
    let delta = random_vec(rng, lines, 1.0);
    let xi = random_vec(rng, gens, 0.5);
    let b = &s * delta + &a * xi;
    LineZonotope::new(m, g, c, s, a, b).unwrap()
}

/// Points near `z`: samples of the set, half of them pushed off by a random offset.
pub fn probe_points<R: Rng>(rng: &mut R, z: &LineZonotope, count: usize, offset: f64) -> Vec<Vector> {
    let inside = lz_setkit::sets::sample_points(z, count, 3.0, rng).unwrap();
    inside
        .into_iter()
        .enumerate()
        .map(|(i, x)| if i % 2 == 0 { x } else { &x + random_vec(rng, z.dim(), offset) })
        .collect()
}

/// The estimation benchmark system (three states, one algebraic).
pub fn estimation_model() -> DescriptorModel {
    DescriptorModel::new(
        Mat::from_diagonal(&v(&[1.0, 1.0, 0.0])),
        mat_from_rows(&[vec![0.5, 0.0, 0.5], vec![0.8, 0.95, 0.0], vec![-1.0, 0.5, 1.0]]),
        mat_from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]),
        Mat::from_diagonal(&v(&[0.1, 1.5, 0.6])),
        mat_from_rows(&[vec![1.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]]),
        Mat::zeros(2, 2),
        Mat::from_diagonal(&v(&[0.5, 1.5])),
    )
    .unwrap()
}

pub fn estimation_inputs(steps: usize) -> Vec<Vector> {
    let ts = 0.1 * std::f64::consts::PI;
    (0..steps)
        .map(|k| {
            let t = k as f64 * ts;
            v(&[0.5 * t.sin() + 1.0, -2.0 * t.cos()])
        })
        .collect()
}

pub fn estimation_x0() -> LineZonotope {
    lz_zonotope(Mat::from_diagonal(&v(&[0.1, 1.5, 0.6])), v(&[0.5, 0.5, 0.25])).unwrap()
}

pub fn motivational_a() -> Mat {
    mat_from_rows(&[vec![0.5, 0.0, 0.0], vec![0.8, 0.95, 0.0], vec![0.3, 0.1, 0.1]])
}

/// `E x_k = A x_{k-1}` with no input, disturbance or measurement.
pub fn motivational_model() -> DescriptorModel {
    DescriptorModel::new(
        Mat::from_diagonal(&v(&[1.0, 1.0, 0.0])),
        motivational_a(),
        Mat::zeros(3, 1),
        Mat::zeros(3, 1),
        Mat::zeros(1, 3),
        Mat::zeros(1, 1),
        Mat::zeros(1, 1),
    )
    .unwrap()
}

pub fn four_model_set() -> FaultModelSet {
    let e = Mat::from_diagonal(&v(&[1.0, 1.0, 0.0]));
    let a1 = mat_from_rows(&[vec![0.5, 0.0, 0.0], vec![0.8, 0.95, 0.0], vec![-1.0, 0.5, 1.0]]);
    let a2 = mat_from_rows(&[vec![0.5, 0.0, 0.5], vec![0.8, 0.95, 0.0], vec![-1.0, 0.5, 1.0]]);
    let b1 = mat_from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]);
    let b3 = mat_from_rows(&[vec![1.0, 0.0], vec![0.0, 0.9], vec![-0.1, 0.0]]);
    let bw = Mat::from_diagonal(&v(&[0.1, 1.5, 0.6]));
    let c1 = mat_from_rows(&[vec![1.0, -1.0, 0.0]]);
    let c4 = mat_from_rows(&[vec![1.0, -1.0, 0.1]]);
    let mk = |a: &Mat, b: &Mat, c: &Mat| {
        DescriptorModel::new(e.clone(), a.clone(), b.clone(), bw.clone(), c.clone(), Mat::zeros(1, 2), Mat::from_element(1, 1, 0.5)).unwrap()
    };
    let horizon = 3;
    let len = 2 * (horizon + 1);
    let u0 = v(&[0.5, -1.0]);
    FaultModelSet {
        models: vec![mk(&a1, &b1, &c1), mk(&a2, &b1, &c1), mk(&a1, &b3, &c1), mk(&a1, &b1, &c4)],
        x0: estimation_x0(),
        w: lz_zonotope(0.1 * eye(3), Vector::zeros(3)).unwrap(),
        v: lz_zonotope(0.1 * eye(1), Vector::zeros(1)).unwrap(),
        input_set: lz_zonotope(8.0 * eye(len), Vector::zeros(len)).unwrap(),
        reference: repeat_vec(&u0, horizon + 1),
        u0,
        horizon,
        epsilon: 1e-4,
        cost_weights: Vector::from_element(len, 1.0),
        limits: AfdLimits {
            generator_factor: 1.6,
            max_constraints: Some(2),
        },
    }
}

/// First-order models `x_k = a x_{k-1} + u_{k-1} + w_{k-1}` with `x_0 ∈ ℝ`.
pub fn scalar_set(a: &[f64]) -> FaultModelSet {
    let one = Mat::identity(1, 1);
    let models = a
        .iter()
        .map(|&ai| {
            DescriptorModel::new(one.clone(), Mat::from_element(1, 1, ai), one.clone(), one.clone(), one.clone(), Mat::zeros(1, 1), one.clone())
                .unwrap()
        })
        .collect();
    let horizon = 3;
    FaultModelSet {
        models,
        x0: lz_realspace(1).unwrap(),
        w: lz_zonotope(0.1 * eye(1), Vector::zeros(1)).unwrap(),
        v: lz_zonotope(0.1 * eye(1), Vector::zeros(1)).unwrap(),
        input_set: lz_zonotope(2.0 * eye(horizon + 1), Vector::zeros(horizon + 1)).unwrap(),
        u0: Vector::zeros(1),
        horizon,
        epsilon: 0.1,
        reference: Vector::zeros(horizon + 1),
        cost_weights: Vector::from_element(horizon + 1, 1.0),
        limits: AfdLimits {
            generator_factor: 3.0,
            max_constraints: None,
        },
    }
}

pub fn paper_scalar_set() -> FaultModelSet {
    scalar_set(&[1.0, 0.2, -0.5])
}

/// Vertices of `{x ∈ ℝ³ : Hx ≤ h, Ex = e}` by trying every triple of active planes.
pub fn polytope_vertices(ineq: &[(Vector3<f64>, f64)], eq: &[(Vector3<f64>, f64)]) -> Vec<Vector3<f64>> {
    let planes: Vec<(Vector3<f64>, f64)> = eq.iter().chain(ineq.iter()).copied().collect();
    let mut out: Vec<Vector3<f64>> = Vec::new();
    let n = planes.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let chosen = [i, j, k];
                if (0..eq.len()).any(|e| !chosen.contains(&e)) {
                    continue;
                }
                let m = Matrix3::from_rows(&[planes[i].0.transpose(), planes[j].0.transpose(), planes[k].0.transpose()]);
                let rhs = Vector3::new(planes[i].1, planes[j].1, planes[k].1);
                if m.determinant().abs() < 1e-12 {
                    continue;
                }
                let Some(x) = m.lu().solve(&rhs) else { continue };
                let feasible = ineq.iter().all(|(a, b)| a.dot(&x) <= b + 1e-9) && eq.iter().all(|(a, b)| (a.dot(&x) - b).abs() <= 1e-9);
                if feasible && out.iter().all(|p| (p - x).norm() > 1e-9) {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Box `{x : |x_i - c_i| ≤ r_i}` as six half-spaces.
pub fn box_halfspaces(c: [f64; 3], r: [f64; 3]) -> Vec<(Vector3<f64>, f64)> {
    let mut out = Vec::new();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        out.push((e, c[i] + r[i]));
        out.push((-e, -(c[i] - r[i])));
    }
    out
}

pub fn to_dvec(x: &Vector3<f64>) -> Vector {
    v(&[x[0], x[1], x[2]])
}
