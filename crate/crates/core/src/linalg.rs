//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    assert_eq!(m.nrows(), m.ncols(), "eigenvalues of a non-square matrix");
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    let s = symmetrize(m);
    let mut ev = SymmetricEigen::new(s).eigenvalues;
    ev.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest eigenvalue; `+inf` for an empty matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue; `-inf` for an empty matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m)
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue together with a unit eigenvector.
pub fn top_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let (k, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("empty matrix has no eigenpair");
    (val, eig.eigenvectors.column(k).into_owned())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Spectral radius via the (possibly complex) eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    // the unbounded Schur iteration can stall on nilpotent inputs
    match nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        None => gelfand_radius(m),
    }
}

/// `‖A^(2^k)‖^(1/2^k)` by repeated normalised squaring; an upper bound that
/// converges to the spectral radius.
fn gelfand_radius(m: &DMatrix<f64>) -> f64 {
    let mut a = m.clone();
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..40 {
        let nrm = a.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        a /= nrm;
        log_scale += nrm.ln() / power;
        a = &a * &a;
        power *= 2.0;
    }
    let nrm = a.norm();
    if nrm == 0.0 {
        return 0.0;
    }
    (log_scale + nrm.ln() / power).exp()
}

pub fn block_diag(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for p in parts {
        out.view_mut((r, c), (p.nrows(), p.ncols())).copy_from(p);
        r += p.nrows();
        c += p.ncols();
    }
    out
}

/// Largest absolute entry, 0 for empty matrices.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_extremes() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
        assert!((max_eigenvalue(&m) - 3.0).abs() < 1e-12);
        let (v, u) = top_eigenpair(&m);
        assert!((v - 3.0).abs() < 1e-12);
        assert!(((&m * &u) - &u * 3.0).norm() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 1.0, 0.0, 1.0, 1.0]);
        let a = &b * b.transpose();
        let r = psd_sqrt(&a);
        assert!((&r * &r - &a).norm() < 1e-10);
    }

    #[test]
    fn rotation_radius_is_one() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((spectral_radius(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_and_zero_radius() {
        assert_eq!(spectral_radius(&DMatrix::zeros(6, 6)), 0.0);
        let shift = DMatrix::from_fn(4, 4, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        assert!(spectral_radius(&shift) < 1e-6);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, -0.7]));
        assert!((gelfand_radius(&d) - 0.7).abs() < 1e-9);
    }
}
