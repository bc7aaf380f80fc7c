//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex<f64>>;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_SWEEPS: usize = 10_000;

/// Largest eigenvalue modulus of a square matrix.
///
/// Uses the eigenvalues of a real Schur decomposition; if the QR sweeps do not
/// converge, falls back to the Gelfand limit `‖M^(2^j)‖^(1/2^j)` computed by
/// normalized repeated squaring.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    check_square(m, "spectral_radius")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure {
            what: "spectral_radius: non-finite entry".into(),
            residual: f64::NAN,
        });
    }
    match Schur::try_new(m.clone(), SCHUR_EPS, SCHUR_MAX_SWEEPS) {
        Some(schur) => Ok(schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)),
        None => gelfand_radius(m),
    }
}

/// Spectral radius through normalized repeated squaring.
pub fn gelfand_radius(m: &Mat) -> Result<f64> {
    check_square(m, "gelfand_radius")?;
    let scale = op_norm2(m);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut b = m / scale;
    // log of the scalar factor carried outside `b` after j squarings,
    // divided by 2^j.
    let mut log_est = scale.ln();
    let mut prev = f64::INFINITY;
    let mut weight = 1.0;
    for _ in 0..64 {
        b = &b * &b;
        weight *= 0.5;
        let s = op_norm2(&b);
        if s == 0.0 {
            return Ok(0.0);
        }
        b /= s;
        log_est += weight * s.ln();
        let est = log_est.exp();
        if (est - prev).abs() <= 1e-10 * est.max(1.0) {
            return Ok(est);
        }
        prev = est;
    }
    Err(Error::NumericalFailure {
        what: "spectral_radius: repeated squaring did not settle".into(),
        residual: (log_est.exp() - prev).abs(),
    })
}

/// Operator 2-norm (largest singular value).
pub fn op_norm2(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Smallest singular value.
pub fn min_singular(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.min()
}

/// 2-norm condition number.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = SVD::new(m.clone(), false, false).singular_values;
    sv.max() / sv.min()
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn sym_sqrt(m: &Mat) -> Mat {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Eigenvector matrix of a real matrix, from a complex Schur form.
///
/// Returns `None` when the matrix is numerically defective (a repeated
/// eigenvalue without a full set of eigenvectors) or the Schur sweeps fail.
/// Columns are normalized to unit 2-norm.
pub fn eigenbasis(m: &Mat) -> Option<CMat> {
    let n = m.nrows();
    let mc = m.map(|x| Complex::new(x, 0.0));
    let (q, t) = Schur::try_new(mc, SCHUR_EPS, SCHUR_MAX_SWEEPS)?.unpack();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tiny = 1e-12 * scale;
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = Complex::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let pivot = t[(j, j)] - lambda;
            if pivot.norm() <= tiny {
                if acc.norm() <= tiny {
                    // Semisimple repeat: this component is free, pick zero.
                    continue;
                }
                return None;
            }
            y[(j, k)] = -acc / pivot;
        }
        let norm = y.column(k).norm();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        let mut col = y.column_mut(k);
        col /= Complex::new(norm, 0.0);
    }
    let v = q * y;
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(v)
}

/// Real symmetric positive-definite `S` with `‖S x‖₂ = ‖M x‖₂` for every real `x`.
pub fn realify_transform(m: &CMat) -> Mat {
    let gram = m.adjoint() * m;
    sym_sqrt(&gram.map(|z| z.re))
}

/// Solves `m x = b` by LU with partial pivoting.
pub fn solve(m: &Mat, b: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(b)
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

pub(crate) fn check_square(m: &Mat, what: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            what,
            expected: (m.nrows(), m.nrows()),
            got: (m.nrows(), m.ncols()),
        });
    }
    Ok(())
}
