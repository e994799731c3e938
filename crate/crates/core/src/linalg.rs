//! Dense linear-algebra helpers shared by the model analysis and the theory solver.
//!
//! Every rank decision uses the same threshold: singular values below
//! `max(rows, cols) * sigma_max * RANK_RTOL` count as zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub const RANK_RTOL: f64 = 1e-12;

pub fn rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * sigma_max * RANK_RTOL
}

fn sigma_max(svals: &DVector<f64>) -> f64 {
    svals.iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    m.singular_values()
}

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = singular_values(m);
    let tol = rank_threshold(m.nrows(), m.ncols(), sigma_max(&s));
    s.iter().filter(|&&v| v > tol && v > 0.0).count()
}

/// Induced 2-norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    sigma_max(&singular_values(m))
}

/// `||m^+||^2`, i.e. one over the smallest non-negligible singular value squared.
/// Zero for an all-zero matrix.
pub fn pinv_norm_sq(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    let tol = rank_threshold(m.nrows(), m.ncols(), sigma_max(&s));
    s.iter()
        .filter(|&&v| v > tol && v > 0.0)
        .cloned()
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })
        .map_or(0.0, |smin| 1.0 / (smin * smin))
}

/// Minimum-norm least-squares solution of `m x = y` via SVD.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: DVector<f64>,
    pub rank: usize,
}

pub fn least_squares(m: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let n = m.ncols();
    if m.nrows() == 0 {
        return LeastSquares {
            x: DVector::zeros(n),
            rank: 0,
        };
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = sigma_max(&svd.singular_values);
    let tol = rank_threshold(m.nrows(), n, smax);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut x = DVector::zeros(n);
    let mut rank = 0;
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > tol && sv > 0.0 {
            rank += 1;
            let coeff = u.column(k).dot(y) / sv;
            x.axpy(coeff, &v_t.row(k).transpose(), 1.0);
        }
    }
    LeastSquares { x, rank }
}

/// Moore-Penrose pseudo-inverse via SVD with the shared rank threshold.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = SVD::new(m.clone(), true, true);
    let tol = rank_threshold(r, c, sigma_max(&svd.singular_values));
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(c, r);
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > tol && sv > 0.0 {
            out += (v_t.row(k).transpose() * u.column(k).transpose()) / sv;
        }
    }
    out
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

/// Largest eigenvalue of `num * den^{-1}` for symmetric PSD `num` and symmetric PSD `den`.
///
/// Computed as `lambda_max(W^T num W)` with `W = V D^{-1/2}` from the eigendecomposition of
/// `den`, which shares its nonzero spectrum with `num den^{-1}`. When `den` is singular the
/// call fails unless `allow_singular` is set, in which case `den^{+}` stands in for the inverse.
pub fn max_generalized_eigenvalue(
    num: &DMatrix<f64>,
    den: &DMatrix<f64>,
    allow_singular: bool,
) -> std::result::Result<f64, SingularDenominator> {
    let n = den.nrows();
    let eig = SymmetricEigen::new(den.clone());
    let dmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = rank_threshold(n, n, dmax);
    let mut w = DMatrix::zeros(n, n);
    let mut singular = false;
    for k in 0..n {
        let d = eig.eigenvalues[k];
        if d > tol && d > 0.0 {
            let col = eig.eigenvectors.column(k) / d.sqrt();
            w.set_column(k, &col);
        } else {
            singular = true;
        }
    }
    if singular && !allow_singular {
        return Err(SingularDenominator);
    }
    let m = w.transpose() * num * &w;
    let m = (&m + m.transpose()) * 0.5;
    let lam = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(if n == 0 { 0.0 } else { lam.max(0.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularDenominator;

/// `lambda_max{ A (A + B)^{-1} }` for symmetric PSD `A` and symmetric PD `B`.
pub fn spectral_helper_check(a_psd: &DMatrix<f64>, b_pd: &DMatrix<f64>) -> Result<f64> {
    if !a_psd.is_square() || a_psd.shape() != b_pd.shape() {
        return Err(Error::Dimension(format!(
            "expected equal square matrices, got {:?} and {:?}",
            a_psd.shape(),
            b_pd.shape()
        )));
    }
    let sym_tol = 1e-10;
    if !is_symmetric(a_psd, sym_tol) || !is_symmetric(b_pd, sym_tol) {
        return Err(Error::NotDefinite("input is not symmetric".into()));
    }
    let n = a_psd.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let ea = SymmetricEigen::new(a_psd.clone()).eigenvalues;
    let eb = SymmetricEigen::new(b_pd.clone()).eigenvalues;
    let amax = ea.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
    let bmax = eb.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
    if ea
        .iter()
        .any(|&v| v < -rank_threshold(n, n, amax.max(f64::MIN_POSITIVE)))
    {
        return Err(Error::NotDefinite("first argument is indefinite".into()));
    }
    if eb.iter().any(|&v| v <= rank_threshold(n, n, bmax)) {
        return Err(Error::NotDefinite(
            "second argument is not positive definite".into(),
        ));
    }
    let sum = a_psd + b_pd;
    max_generalized_eigenvalue(a_psd, &sum, false)
        .map_err(|_| Error::NotDefinite("A + B is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rank_of_repeated_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 3)), 0);
        assert_eq!(numerical_rank(&DMatrix::identity(3, 3)), 3);
    }

    #[test]
    fn least_squares_min_norm_on_deficient() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1)
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let ls = least_squares(&m, &DVector::from_vec(vec![2.0]));
        assert_eq!(ls.rank, 1);
        assert_relative_eq!(ls.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ls.x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pinv_norm_of_ones_vector() {
        for k in 1..6 {
            let m = DMatrix::from_element(k, 1, 1.0);
            assert_relative_eq!(pinv_norm_sq(&m), 1.0 / k as f64, epsilon = 1e-12);
        }
        assert_eq!(pinv_norm_sq(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn pinv_matches_penrose_conditions() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 1.0]);
        let p = pinv(&m);
        let mpm = &m * &p * &m;
        assert_relative_eq!(mpm, m, epsilon = 1e-10);
        let pmp = &p * &m * &p;
        assert_relative_eq!(pmp, p, epsilon = 1e-10);
    }

    #[test]
    fn spectral_helper_closed_forms() {
        let z = DMatrix::zeros(3, 3);
        let i = DMatrix::identity(3, 3);
        assert!(spectral_helper_check(&z, &i).unwrap().abs() < 1e-12);
        assert!((spectral_helper_check(&i, &i).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectral_helper_rejects_bad_inputs() {
        let i = DMatrix::<f64>::identity(2, 2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            spectral_helper_check(&asym, &i),
            Err(Error::NotDefinite(_))
        ));
        let neg = -DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            spectral_helper_check(&neg, &i),
            Err(Error::NotDefinite(_))
        ));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            spectral_helper_check(&i, &singular),
            Err(Error::NotDefinite(_))
        ));
        assert!(matches!(
            spectral_helper_check(&i, &DMatrix::identity(3, 3)),
            Err(Error::Dimension(_))
        ));
    }
}
