mod common;

use common::*;
use lz_setkit::linalg::{effective_rank, eye, mat_from_rows, Mat, Vector};
use lz_setkit::reduction::*;
use lz_setkit::sets::*;
use lz_setkit::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn agree(a: &LineZonotope, b: &LineZonotope, pts: &[Vector], tol: f64) -> Option<Vector> {
    pts.iter()
        .find(|x| membership(x, a, tol).unwrap() != membership(x, b, tol).unwrap())
        .cloned()
}

fn contains_all(outer: &LineZonotope, pts: &[Vector]) -> bool {
    pts.iter().all(|x| membership(x, outer, 1e-7).unwrap())
}

#[test]
fn zero_pivot_and_bad_indices() {
    let z = LineZonotope::new(eye(2), Mat::zeros(2, 1), Vector::zeros(2), Mat::zeros(1, 2), Mat::from_element(1, 1, 1.0), v(&[0.0])).unwrap();
    assert!(matches!(eliminate_line(&z, 0, 1), Err(Error::ZeroPivot { .. })));
    assert!(matches!(eliminate_line(&z, 5, 0), Err(Error::IndexOutOfRange(_))));
    assert_eq!(eliminate_all_lines(&z), z);
}

#[test]
fn strip_pivot_elimination() {
    let s = Strip::new(v(&[1.0, -1.0]), 0.5, 0.3).unwrap();
    let z = lz_from_strip(&s);
    let e = eliminate_line(&z, 0, 0).unwrap();
    assert_eq!((e.num_lines(), e.num_constraints()), (1, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let x = random_vec(&mut rng, 2, 3.0);
        let gap = (x[0] - x[1] - 0.5).abs() - 0.3;
        if gap.abs() > 1e-7 {
            assert_eq!(membership(&x, &e, 1e-9).unwrap(), gap < 0.0);
        }
    }
}

#[test]
fn two_eliminations_clear_a_rank_two_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let z = random_lz(&mut rng, 3, 2, 4, 2);
    assert_eq!(effective_rank(z.line_constraints(), 1e-10), 2);
    let once = eliminate_line(&z, 0, 0).unwrap();
    let (i, j) = (0..once.num_constraints())
        .flat_map(|i| (0..once.num_lines()).map(move |j| (i, j)))
        .max_by(|a, b| once.line_constraints()[*a].abs().total_cmp(&once.line_constraints()[*b].abs()))
        .unwrap();
    let twice = eliminate_line(&once, i, j).unwrap();
    assert!(twice.line_constraints().iter().all(|x| x.abs() < 1e-10));
    let pts = probe_points(&mut rng, &z, 300, 0.5);
    assert_eq!(agree(&z, &twice, &pts, 1e-7), None);
}

#[test]
fn all_lines_of_a_constrained_zonotope() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cz = random_lz(&mut rng, 3, 0, 5, 2);
    assert_eq!(eliminate_all_lines(&cz), cz);
    // rank(S) = number of lines: the result has no lines left
    let z = random_lz(&mut rng, 3, 2, 4, 3);
    let e = eliminate_all_lines(&z);
    assert_eq!(e.num_lines(), 0);
    assert!(e.is_constrained_zonotope());
    let pts = probe_points(&mut rng, &z, 300, 0.5);
    assert_eq!(agree(&z, &e, &pts, 1e-7), None);
}

#[test]
fn constraint_elimination_is_conservative() {
    let dup = LineZonotope::constrained(eye(2), Vector::zeros(2), mat_from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]), v(&[0.0, 0.0])).unwrap();
    let e = eliminate_constraint(&dup).unwrap();
    // the duplicate row becomes 0 = 0 and is dropped as well
    assert_eq!((e.num_constraints(), e.num_generators()), (0, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    assert!(contains_all(&e, &sample_points(&dup, 300, 1.0, &mut rng).unwrap()));
    assert!(eliminate_constraint(&unit_box(2)).is_err());

    let z = random_lz(&mut rng, 3, 0, 6, 2);
    let e = eliminate_constraint(&z).unwrap();
    let (h0, h1) = (interval_hull(&z).unwrap(), interval_hull(&e).unwrap());
    for i in 0..3 {
        assert!(h1.lower[i] <= h0.lower[i] + 1e-9 && h1.upper[i] >= h0.upper[i] - 1e-9);
    }
}

#[test]
fn generator_reduction_contains_the_original() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let z = lz_zonotope(random_mat(&mut rng, 2, 10, 1.0), random_vec(&mut rng, 2, 1.0)).unwrap();
    assert_eq!(reduce_generators(&z, 12).unwrap(), z);
    let r = reduce_generators(&z, 4).unwrap();
    assert!(r.num_generators() <= 4);
    let mut pts = sample_points(&z, 1000, 1.0, &mut rng).unwrap();
    // the extreme corners as well
    for _ in 0..50 {
        let signs = Vector::from_fn(10, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 });
        pts.push(z.center() + z.generators() * signs);
    }
    assert!(contains_all(&r, &pts));
}

#[test]
fn line_compression() {
    let m = mat_from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![2.0, 0.0, 2.0]]);
    let z = LineZonotope::new(m, eye(3) * 0.1, Vector::zeros(3), Mat::zeros(0, 3), Mat::zeros(0, 3), Vector::zeros(0)).unwrap();
    let c = compress_lines(&z);
    assert_eq!(c.num_lines(), 2);
    let gram = c.lines().transpose() * c.lines();
    assert!((gram - eye(2)).abs().max() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let pts: Vec<Vector> = (0..300).map(|_| random_vec(&mut rng, 3, 3.0)).collect();
    assert_eq!(agree(&z, &c, &pts, 1e-7), None);

    let q = LineZonotope::new(eye(3).columns(0, 2).into_owned(), Mat::zeros(3, 0), Vector::zeros(3), Mat::zeros(0, 2), Mat::zeros(0, 0), Vector::zeros(0)).unwrap();
    let qc = compress_lines(&q);
    assert_eq!(qc.lines().abs(), q.lines().abs());
}

#[test]
fn pipeline_respects_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let z = random_lz(&mut rng, 3, 2, 12, 5);
    assert_eq!(reduce(&z, &ReductionLimits::new(100, 100, false)).unwrap(), eliminate_all_lines(&z));
    let r = reduce(&z, &ReductionLimits::new(6, 1, true)).unwrap();
    assert!(r.num_generators() <= 6 && r.num_constraints() <= 1);
    assert!(r.line_constraints().iter().all(|x| x.abs() < 1e-10));
    assert_eq!(r.num_lines(), effective_rank(r.lines(), 1e-10));
    let pts = sample_points(&z, 300, 3.0, &mut rng).unwrap();
    assert!(contains_all(&r, &pts));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn line_elimination_is_exact(seed in 0u64..100_000, n in 2usize..=5, lines in 1usize..=3, cons in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_lz(&mut rng, n, lines, n + 1, cons);
        let e = eliminate_all_lines(&z);
        prop_assert!(e.line_constraints().iter().all(|x| x.abs() <= 1e-10 * (1.0 + e.line_constraints().abs().max())));
        let pts = probe_points(&mut rng, &z, 60, 0.5);
        prop_assert_eq!(agree(&z, &e, &pts, 1e-6), None);
    }

    #[test]
    fn every_stage_contains_its_input(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_lz(&mut rng, 3, 1, 8, 3);
        let pts = sample_points(&z, 60, 3.0, &mut rng).unwrap();
        let lines_gone = eliminate_all_lines(&z);
        prop_assert!(contains_all(&lines_gone, &pts));
        if lines_gone.num_constraints() > 0 {
            let fewer = eliminate_constraint(&lines_gone).unwrap();
            prop_assert!(contains_all(&fewer, &pts));
        }
        let red = reduce_generators(&lines_gone, 4).unwrap();
        prop_assert!(contains_all(&red, &pts));
        let full = reduce(&z, &ReductionLimits::new(4, 1, true)).unwrap();
        prop_assert!(full.num_generators() <= 4 && full.num_constraints() <= 1);
        prop_assert!(contains_all(&full, &pts));
    }
}
