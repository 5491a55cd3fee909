//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Induced infinity norm: largest absolute row sum.
pub fn norm_inf(m: &Mat) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn vec_norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Numerical rank with singular-value threshold `1e-9 * sigma_max`.
pub fn rank(m: &Mat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * smax).count()
}

pub fn mat_pow(m: &Mat, k: usize) -> Mat {
    let mut out = Mat::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

pub fn spectral_radius(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `[B, AB, ..., A^(k-1) B]`.
pub fn krylov(a: &Mat, b: &Mat, k: usize) -> Mat {
    let mut blocks = Vec::with_capacity(k);
    let mut cur = b.clone();
    for _ in 0..k {
        blocks.push(cur.clone());
        cur = a * &cur;
    }
    hcat(&blocks)
}

pub fn hcat(blocks: &[Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

pub fn vcat(blocks: &[Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_rank() {
        let m = Mat::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.5]);
        assert_eq!(norm_inf(&m), 3.5);
        assert_eq!(vec_norm_inf(&[0.1, -4.0, 2.0]), 4.0);
        assert_eq!(rank(&m), 2);
        assert_eq!(rank(&Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])), 1);
        assert_eq!(rank(&Mat::zeros(3, 3)), 0);
    }

    #[test]
    fn radius_and_powers() {
        let m = Mat::from_row_slice(2, 2, &[0.0, 1.0, -0.25, 0.0]);
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-12);
        assert_eq!(mat_pow(&m, 2), Mat::from_row_slice(2, 2, &[-0.25, 0.0, 0.0, -0.25]));
        let k = krylov(&m, &Mat::from_row_slice(2, 1, &[0.0, 1.0]), 2);
        assert_eq!(k, Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }
}
