//! Spectral radius with an independent characteristic-polynomial cross-check.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;
/// Largest size for which the characteristic-polynomial bounds are checked.
pub const CROSS_CHECK_MAX_DIM: usize = 4;

/// Eigenvalues of a real square matrix.
///
/// Sizes 1 and 2 use closed forms; larger sizes use the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigenvalues of a {:?} matrix", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spectral("matrix has non-finite entries".into()));
    }
    match m.nrows() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex::new(m[(0, 0)], 0.0)]),
        2 => {
            let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = half_tr * half_tr - det;
            Ok(if disc >= 0.0 {
                let r = disc.sqrt();
                vec![Complex::new(half_tr + r, 0.0), Complex::new(half_tr - r, 0.0)]
            } else {
                let r = (-disc).sqrt();
                vec![Complex::new(half_tr, r), Complex::new(half_tr, -r)]
            })
        }
        n => {
            // Equal-modulus spectra (e.g. scaled permutations) can stall the QR
            // sweep; a diagonal shift moves the moduli apart without changing
            // the eigenvectors.
            let scale = m.abs().max().max(f64::MIN_POSITIVE);
            for shift in [0.0, 0.5, -0.37, 1.3] {
                let s = shift * scale;
                let shifted = m + DMatrix::<f64>::identity(n, n) * s;
                if let Some(schur) = shifted.try_schur(SCHUR_EPS, SCHUR_MAX_ITER) {
                    return Ok(schur
                        .complex_eigenvalues()
                        .iter()
                        .map(|z| z - Complex::new(s, 0.0))
                        .collect());
                }
            }
            Err(Error::Spectral(format!(
                "real Schur iteration did not converge for {n}x{n} matrix after {SCHUR_MAX_ITER} sweeps"
            )))
        }
    }
}

/// Coefficients `c_0..c_{n-1}` of the monic characteristic polynomial
/// `det(zI - A) = z^n + c_{n-1} z^{n-1} + ... + c_0` (Faddeev–LeVerrier).
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n];
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let eye = DMatrix::<f64>::identity(n, n);
    let mut c_prev = 1.0;
    for k in 1..=n {
        mk = a * &mk + &eye * c_prev;
        let c = -(a * &mk).trace() / k as f64;
        coeffs[n - k] = c;
        c_prev = c;
    }
    coeffs
}

/// Fujiwara upper bound on the modulus of every root of a monic polynomial.
pub fn fujiwara_bound(coeffs: &[f64]) -> f64 {
    let n = coeffs.len();
    (1..=n)
        .map(|k| {
            let c = coeffs[n - k].abs();
            if k == n {
                (0.5 * c).powf(1.0 / k as f64)
            } else {
                c.powf(1.0 / k as f64)
            }
        })
        .fold(0.0, f64::max)
        * 2.0
}

/// Largest eigenvalue modulus.
///
/// For sizes up to [`CROSS_CHECK_MAX_DIM`] the result is checked against the
/// Fujiwara upper bound and the lower bounds `|det|^(1/n)` and `|trace|/n`;
/// a mismatch is reported as an error.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let eig = eigenvalues(m)?;
    let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = m.nrows();
    if (3..=CROSS_CHECK_MAX_DIM).contains(&n) {
        let coeffs = characteristic_polynomial(m);
        let scale = m.abs().max().max(1e-300);
        let slack = 1e-8 * scale;
        let upper = fujiwara_bound(&coeffs);
        let lower = coeffs[0].abs().powf(1.0 / n as f64).max(m.trace().abs() / n as f64);
        if rho > upper + slack || rho + slack < lower {
            return Err(Error::Spectral(format!(
                "radius {rho} outside characteristic-polynomial bounds [{lower}, {upper}]"
            )));
        }
    }
    Ok(rho)
}
