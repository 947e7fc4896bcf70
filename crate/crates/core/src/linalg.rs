//! Small complex linear-algebra helpers shared by the estimation and
//! precoding stages.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `exp(j * phase)`.
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let (r, c) = m.shape();
    let mut worst = 0.0f64;
    for i in 0..r {
        for j in 0..c {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Solves `G X = B` for Hermitian positive-definite `G`.
///
/// Falls back to the pseudo-inverse when `G` is only semidefinite, which is
/// the noiseless rank-deficient case of the MMSE filter.
pub fn solve_hpd(g: &CMat, b: &CMat) -> Result<CMat> {
    if g.nrows() != b.nrows() {
        return Err(Error::Dimension {
            expected: g.nrows(),
            actual: b.nrows(),
        });
    }
    if let Some(chol) = g.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    log::warn!("Hermitian system not positive definite; using pseudo-inverse");
    let pinv = g
        .clone()
        .pseudo_inverse(1e-12 * g.norm().max(f64::MIN_POSITIVE))
        .map_err(|_| Error::Singular("pseudo-inverse failed"))?;
    Ok(pinv * b)
}
