mod common;

use common::*;
use lz_setkit::linalg::{Mat, Vector};
use lz_setkit::sets::membership;
use lz_setkit::solver::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum of `cᵀx` over `{Ax = b, l ≤ x ≤ u}` (finite bounds) by visiting every basic
/// solution: choose `m` basic columns, put the others at a bound, solve.
fn brute_force_lp(c: &Vector, a: &Mat, b: &Vector, l: &Vector, u: &Vector) -> Option<f64> {
    let (m, n) = a.shape();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let basic: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let rest: Vec<usize> = (0..n).filter(|j| mask & (1 << j) == 0).collect();
        let ab = Mat::from_fn(m, m, |r, k| a[(r, basic[k])]);
        let Some(inv) = ab.clone().try_inverse() else { continue };
        for bounds in 0u32..(1 << rest.len()) {
            let mut x = Vector::zeros(n);
            for (t, &j) in rest.iter().enumerate() {
                x[j] = if bounds & (1 << t) != 0 { u[j] } else { l[j] };
            }
            let xb = &inv * (b - a * &x);
            for (k, &j) in basic.iter().enumerate() {
                x[j] = xb[k];
            }
            if (0..n).all(|j| x[j] >= l[j] - 1e-9 && x[j] <= u[j] + 1e-9) && (a * &x - b).norm() < 1e-8 {
                let val = c.dot(&x);
                best = Some(best.map_or(val, |bv: f64| bv.min(val)));
            }
        }
    }
    best
}

#[test]
fn bounded_scalar() {
    let mut b = LpBuilder::new();
    b.add_var(-1.0, 1.0, 1.0);
    let s = solve_lp(&b.build().unwrap()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(s.objective_value, -1.0);
}

#[test]
fn one_dimensional_kappa() {
    // min κ s.t. ξ = 2, -1-κ ≤ ξ ≤ 1+κ
    let mut b = LpBuilder::new();
    let xi = b.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let k = b.add_var(-1.0, f64::INFINITY, 1.0);
    b.add_eq(vec![(xi, 1.0)], 2.0);
    b.add_row(vec![(xi, 1.0), (k, -1.0)], f64::NEG_INFINITY, 1.0);
    b.add_row(vec![(xi, -1.0), (k, -1.0)], f64::NEG_INFINITY, 1.0);
    let s = solve_lp(&b.build().unwrap()).unwrap();
    assert!((s.objective_value - 1.0).abs() < 1e-12);
}

#[test]
fn outside_point_is_infeasible() {
    assert!(!membership(&v(&[2.0, 0.0]), &unit_box(2), 1e-9).unwrap());
    let mut b = LpBuilder::new();
    let x = b.add_var(-1.0, 1.0, 0.0);
    b.add_eq(vec![(x, 1.0)], 2.0);
    assert_eq!(solve_lp(&b.build().unwrap()).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn free_direction_is_unbounded() {
    let mut free = LpBuilder::new();
    free.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    assert_eq!(solve_lp(&free.build().unwrap()).unwrap().status, LpStatus::Unbounded);
    // tying the free column to a bounded one: x = y - 5, y ∈ [0, 1]
    let mut tied = LpBuilder::new();
    let x = tied.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let y = tied.add_var(0.0, 1.0, 0.0);
    tied.add_eq(vec![(x, 1.0), (y, -1.0)], -5.0);
    let s = solve_lp(&tied.build().unwrap()).unwrap();
    assert!((s.objective_value + 5.0).abs() < 1e-12);
}

#[test]
fn milp_without_binaries_is_the_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = random_mat(&mut rng, 2, 5, 1.0);
    let x0 = random_vec(&mut rng, 5, 0.5);
    let lp = LpProblem::new(random_vec(&mut rng, 5, 1.0), a.clone(), &a * x0, Vector::from_element(5, -1.0), Vector::from_element(5, 1.0)).unwrap();
    let direct = solve_lp(&lp).unwrap();
    let viamilp = solve_milp(&MilpProblem::new(lp, vec![]).unwrap()).unwrap();
    assert!((direct.objective_value - viamilp.objective_value).abs() < 1e-12);
}

#[test]
fn knapsack_toy() {
    let mut b = LpBuilder::new();
    let x1 = b.add_var(0.0, 1.0, -1.0);
    let x2 = b.add_var(0.0, 1.0, -1.0);
    b.add_row(vec![(x1, 1.0), (x2, 1.0)], f64::NEG_INFINITY, 1.0);
    let s = solve_milp(&MilpProblem::new(b.build().unwrap(), vec![x1, x2]).unwrap()).unwrap();
    assert_eq!(s.objective_value, -1.0);
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut b = LpBuilder::new();
    let xs: Vec<usize> = (0..8).map(|_| b.add_var(0.0, 1.0, -rng.gen_range(1.0..5.0))).collect();
    b.add_row(xs.iter().map(|&j| (j, rng.gen_range(1.0..4.0))).collect(), f64::NEG_INFINITY, 7.0);
    b.add_row(xs.iter().map(|&j| (j, rng.gen_range(1.0..4.0))).collect(), f64::NEG_INFINITY, 6.0);
    let p = MilpProblem::new(b.build().unwrap(), xs).unwrap();
    let (s1, s2) = (solve_milp(&p).unwrap(), solve_milp(&p).unwrap());
    assert_eq!(format!("{s1:?}"), format!("{s2:?}"));
    assert!(!p.lp.to_lp_text().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_optimum_matches_basis_enumeration(seed in 0u64..1_000_000, n in 3usize..=6, m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mat(&mut rng, m, n, 1.0);
        let c = random_vec(&mut rng, n, 1.0);
        let l = Vector::from_fn(n, |_, _| rng.gen_range(-2.0..0.0));
        let u = Vector::from_fn(n, |_, _| rng.gen_range(0.0..2.0));
        // small right-hand sides are almost always feasible, large ones often not
        let b = if seed % 2 == 0 { random_vec(&mut rng, m, 0.1) } else { random_vec(&mut rng, m, 6.0) };
        let sol = solve_lp(&LpProblem::new(c.clone(), a.clone(), b.clone(), l.clone(), u.clone()).unwrap()).unwrap();
        match brute_force_lp(&c, &a, &b, &l, &u) {
            Some(opt) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective_value - opt).abs() < 1e-7, "{} vs {}", sol.objective_value, opt);
                let x = sol.x.unwrap();
                prop_assert!((&a * &x - &b).amax() < 1e-8);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn milp_matches_enumeration(seed in 0u64..1_000_000, n in 2usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
        let val: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
        let cap = w.iter().sum::<f64>() * rng.gen_range(0.2..0.8);
        let mut b = LpBuilder::new();
        let xs: Vec<usize> = val.iter().map(|&vi| b.add_var(0.0, 1.0, -vi)).collect();
        // one continuous helper to keep the relaxation non-trivial
        let y = b.add_var(0.0, 1.0, -0.5);
        let mut row: Vec<(usize, f64)> = xs.iter().zip(&w).map(|(&j, &wj)| (j, wj)).collect();
        row.push((y, 1.0));
        b.add_row(row, f64::NEG_INFINITY, cap);
        let sol = solve_milp(&MilpProblem::new(b.build().unwrap(), xs.clone()).unwrap()).unwrap();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let tw: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| w[i]).sum();
            if tw <= cap {
                let tv: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| val[i]).sum();
                best = best.min(-tv - 0.5 * (cap - tw).min(1.0));
            }
        }
        prop_assert!((sol.objective_value - best).abs() < 1e-6, "{} vs {}", sol.objective_value, best);
        let x = sol.x.unwrap();
        for &j in &xs {
            prop_assert!((x[j] - x[j].round()).abs() <= 1e-6);
        }
        let used: f64 = xs.iter().zip(&w).map(|(&j, &wj)| wj * x[j]).sum::<f64>() + x[y];
        prop_assert!(used <= cap + 1e-7);
    }
}
