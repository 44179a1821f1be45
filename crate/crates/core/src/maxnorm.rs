//! Closest unstable and closest stable Metzler matrices in the max-norm.

use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix, MetzlerMatrix, NormKind};
use crate::perron::{spectral_abscissa, spectral_radius, SpectralConfig};

/// Result of a max-norm (de)stabilization.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxStabilization {
    pub matrix: MetzlerMatrix,
    /// Distance `||X - A||_max`.
    pub tau: f64,
    /// `-A(tau_2)^{-1} H` had a zero row, so the boundary formula is used
    /// outside the strictly positive case and deserves an independent check.
    pub needs_verification: bool,
}

/// `A(tau)`: diagonal shifted down by `tau`, off-diagonal entries `max(0, a_ij - tau)`.
pub fn clamp_shift(a: &MetzlerMatrix, tau: f64) -> MetzlerMatrix {
    let d = a.dim();
    let mut m = a.as_matrix().clone();
    for i in 0..d {
        for (j, x) in m.row_mut(i).iter_mut().enumerate() {
            *x = if i == j { *x - tau } else { (*x - tau).max(0.0) };
        }
    }
    MetzlerMatrix::new(m).expect("clamp_shift keeps the Metzler property")
}

/// Closest Hurwitz unstable matrix: `X = A + tau E` with `tau = 1 / sum_ij |A^{-1}_ij|`.
pub fn closest_unstable_max(a: &MetzlerMatrix, cfg: &SpectralConfig) -> Result<MaxStabilization> {
    let eta = spectral_abscissa(a, cfg)?;
    if eta >= 0.0 {
        return Err(Error::precondition(format!(
            "matrix must be strictly Hurwitz stable, spectral abscissa is {eta}"
        )));
    }
    let inv = a
        .inverse()
        .ok_or_else(|| Error::precondition("stable matrix turned out numerically singular"))?;
    let total: f64 = inv.as_slice().iter().map(|x| x.abs()).sum();
    let tau = 1.0 / total;
    let x = a.as_matrix().map(|v| v + tau);
    Ok(MaxStabilization {
        matrix: MetzlerMatrix::new(x)?,
        tau,
        needs_verification: false,
    })
}

/// Closest Hurwitz stable matrix in the max-norm, which is `A(tau*)` with
/// `tau*` the root of `eta(A(tau)) = 0`.
///
/// The root is bracketed between two consecutive values of
/// `{0} U {a_ij > 0}`, where `A(tau)` is affine in `tau`, and then found in
/// closed form from a leading eigenvalue.
pub fn closest_stable_max(a: &MetzlerMatrix, cfg: &SpectralConfig) -> Result<MaxStabilization> {
    let eta = spectral_abscissa(a, cfg)?;
    if eta <= 0.0 {
        return Err(Error::precondition(format!(
            "matrix must be Hurwitz unstable, spectral abscissa is {eta}"
        )));
    }
    let d = a.dim();
    let max_diag = a.diag().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let max_off = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)])
        .fold(f64::NEG_INFINITY, f64::max);
    if max_diag >= max_off {
        return Ok(MaxStabilization {
            matrix: clamp_shift(a, max_diag),
            tau: max_diag,
            needs_verification: false,
        });
    }

    let mut levels: Vec<f64> = a.as_slice().iter().copied().filter(|&x| x > 0.0).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let zero_tol = cfg.tol * norm(a, NormKind::Max).max(1.0);
    // eta(A(levels[lo])) > 0 and eta(A(levels[hi])) < 0 throughout.
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let e = spectral_abscissa(&clamp_shift(a, levels[mid]), cfg)?;
        if e.abs() <= zero_tol {
            return Ok(MaxStabilization {
                matrix: clamp_shift(a, levels[mid]),
                tau: levels[mid],
                needs_verification: false,
            });
        }
        if e > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (t1, t2) = (levels[lo], levels[hi]);
    let a1 = clamp_shift(a, t1);
    let a2 = clamp_shift(a, t2);
    let h = a1.as_matrix().sub(a2.as_matrix()).scaled(1.0 / (t2 - t1));
    // A singular A(tau_2) means its abscissa is exactly zero and the power
    // method only missed it by rounding.
    let Some(inv) = a2.inverse() else {
        return Ok(MaxStabilization {
            matrix: a2,
            tau: t2,
            needs_verification: false,
        });
    };
    let b = clip_nonnegative(&inv.matmul(&h).scaled(-1.0));
    let needs_verification = (0..d).any(|i| b.row(i).iter().all(|&x| x == 0.0));
    let rho = spectral_radius(&b, cfg)?;
    let tau = t2 - 1.0 / rho;
    Ok(MaxStabilization {
        matrix: clamp_shift(a, tau),
        tau,
        needs_verification,
    })
}

// Rounding leaves tiny negative entries in products that are non-negative in exact arithmetic.
pub(crate) fn clip_nonnegative(m: &Matrix) -> Matrix {
    let scale = norm(m, NormKind::Max).max(f64::MIN_POSITIVE);
    m.map(|x| if x < 0.0 && x >= -1e-12 * scale { 0.0 } else { x.max(0.0) })
}
