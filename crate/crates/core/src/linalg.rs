//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn zeros(rows: usize, cols: usize) -> Mat {
    Mat::zeros(rows, cols)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

/// Horizontal concatenation. `rows` fixes the height when every block is empty.
pub fn hcat(rows: usize, blocks: &[&Mat]) -> Mat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row mismatch");
        if b.ncols() > 0 {
            out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        }
        at += b.ncols();
    }
    out
}

/// Vertical concatenation. `cols` fixes the width when every block is empty.
pub fn vcat(cols: usize, blocks: &[&Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vcat: column mismatch");
        if b.nrows() > 0 {
            out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        }
        at += b.nrows();
    }
    out
}

pub fn vcat_vec(blocks: &[&Vector]) -> Vector {
    let n: usize = blocks.iter().map(|b| b.len()).sum();
    let mut out = Vector::zeros(n);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.len()).copy_from(*b);
        at += b.len();
    }
    out
}

pub fn bdiag(blocks: &[&Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        if b.nrows() > 0 && b.ncols() > 0 {
            out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        }
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `count` copies of `block` on the diagonal.
pub fn bdiag_repeat(block: &Mat, count: usize) -> Mat {
    let blocks: Vec<&Mat> = std::iter::repeat(block).take(count).collect();
    bdiag(&blocks)
}

pub fn repeat_vec(v: &Vector, count: usize) -> Vector {
    let blocks: Vec<&Vector> = std::iter::repeat(v).take(count).collect();
    vcat_vec(&blocks)
}

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn select_rows(m: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

pub fn select_cols(m: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

pub fn select_entries(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_fn(idx.len(), |i, _| v[idx[i]])
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Singular value decomposition with singular values sorted in descending order.
/// Returns thin factors `(U, sigma, V)` with `m = U diag(sigma) V^T`.
pub fn svd_sorted(m: &Mat) -> (Mat, Vector, Mat) {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return (Mat::zeros(r, 0), Vector::zeros(0), Mat::zeros(c, 0));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("U requested");
    let vt = svd.v_t.expect("V^T requested");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let u_s = select_cols(&u, &order);
    let v_s = select_cols(&vt.transpose(), &order);
    let s_s = select_entries(&s, &order);
    (u_s, s_s, v_s)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn effective_rank(m: &Mat, rel_tol: f64) -> usize {
    let (_, s, _) = svd_sorted(m);
    if s.is_empty() || s[0] == 0.0 {
        return 0;
    }
    let cut = rel_tol * s[0];
    s.iter().filter(|&&x| x > cut).count()
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(m: &Mat, rel_tol: f64) -> Mat {
    let (u, s, v) = svd_sorted(m);
    let (r, c) = m.shape();
    let mut out = Mat::zeros(c, r);
    if s.is_empty() || s[0] == 0.0 {
        return out;
    }
    let cut = rel_tol * s[0];
    for k in 0..s.len() {
        if s[k] > cut {
            let vk = v.column(k);
            let uk = u.column(k);
            out += (vk * uk.transpose()) / s[k];
        }
    }
    out
}

/// Orthonormal basis of the column space, built column by column with re-orthogonalised
/// Gram-Schmidt. Columns whose residual falls below `rel_tol` times the largest column
/// norm are dropped, so an already orthonormal input is returned unchanged.
pub fn orthonormal_columns(m: &Mat, rel_tol: f64) -> Mat {
    let n = m.nrows();
    let scale = (0..m.ncols())
        .map(|j| m.column(j).norm())
        .fold(0.0_f64, f64::max);
    let mut basis: Vec<Vector> = Vec::new();
    if scale == 0.0 {
        return Mat::zeros(n, 0);
    }
    for j in 0..m.ncols() {
        let mut v: Vector = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let nv = v.norm();
        if nv > rel_tol * scale {
            basis.push(v / nv);
        }
    }
    let mut out = Mat::zeros(n, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Greedy pivoted selection of `k` linearly independent rows (largest residual first).
pub fn independent_rows(m: &Mat, k: usize) -> Vec<usize> {
    let rows: Vec<Vector> = (0..m.nrows()).map(|i| m.row(i).transpose()).collect();
    let mut residual = rows.clone();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = None;
        let mut best_norm = -1.0;
        for (i, r) in residual.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let nr = r.norm();
            if nr > best_norm {
                best_norm = nr;
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        chosen.push(p);
        let q = residual[p].clone() / best_norm.max(f64::MIN_POSITIVE);
        for (i, r) in residual.iter_mut().enumerate() {
            if !chosen.contains(&i) {
                let d = q.dot(r);
                r.axpy(-d, &q, 1.0);
            }
        }
    }
    chosen
}

/// Solve `a x = b` for square `a`, or `None` when `a` is singular.
pub fn solve(a: &Mat, b: &Mat) -> Option<Mat> {
    if a.nrows() == 0 {
        return Some(Mat::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

pub fn inverse(a: &Mat) -> Option<Mat> {
    if a.nrows() == 0 {
        return Some(Mat::zeros(0, 0));
    }
    a.clone().try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_helpers_handle_empty_blocks() {
        let a = eye(2);
        let e = zeros(0, 3);
        let d = bdiag(&[&a, &e]);
        assert_eq!(d.shape(), (2, 5));
        let h = hcat(2, &[&zeros(2, 0), &a]);
        assert_eq!(h, a);
        let v = vcat(2, &[&zeros(0, 2), &a]);
        assert_eq!(v, a);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = mat_from_rows(&[vec![0.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![1.0, 0.0, 0.0]]);
        let (u, s, v) = svd_sorted(&m);
        assert!(s[0] >= s[1] && s[1] >= s[2]);
        let rec = &u * Mat::from_diagonal(&s) * v.transpose();
        assert!((rec - m).norm() < 1e-12);
    }

    #[test]
    fn orthonormal_columns_collapses_collinear() {
        let m = mat_from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]);
        let q = orthonormal_columns(&m, 1e-10);
        assert_eq!(q.ncols(), 1);
        assert!((q[(0, 0)] - 0.5_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn independent_rows_picks_a_basis() {
        let m = mat_from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]);
        let mut rows = independent_rows(&m, 2);
        rows.sort();
        assert_eq!(rows, vec![1, 2]);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let m = mat_from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let p = pinv(&m, 1e-12);
        assert!((&m * &p * &m - &m).norm() < 1e-12);
    }
}
