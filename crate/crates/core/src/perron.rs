//! Perron machinery for Metzler matrices.
//!
//! The leading eigenvalue of a Metzler matrix is real and equals its spectral
//! abscissa. It is computed with the translative power method: power
//! iteration on the non-negative matrix `A + (h + 1) I`, started from the
//! all-ones vector, which converges to the *selected* leading eigenvector
//! (the limit of leading eigenvectors of `A + eps E` as `eps -> 0`).

use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix, MetzlerMatrix, NormKind};

/// Dimension up to which a stalled power iteration is finished by repeated squaring.
pub const DENSE_FALLBACK_DIM: usize = 64;

/// Plain iterations allowed before switching to repeated squaring (small dimensions only).
const STALL_ITERATIONS: usize = 2_000;

const POLISH_STEPS: usize = 4;
const SQUARINGS: usize = 80;

/// Tolerances shared by every routine that computes leading eigenpairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralConfig {
    /// Convergence tolerance of the power iteration.
    pub tol: f64,
    /// Power iteration budget.
    pub max_iter: usize,
    /// Absolute tolerance used when comparing an abscissa against a stability level.
    pub stability_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            tol: 1e-12,
            max_iter: 100_000,
            stability_tol: 1e-9,
        }
    }
}

/// Leading eigenvalue with its selected, l1-normalised, non-negative eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Power iterations spent (repeated squarings are counted as one each).
    pub iterations: usize,
    /// `||A v - value v||_inf`.
    pub residual: f64,
}

impl EigenPair {
    /// Indices whose eigenvector entry is positive relative to the largest entry.
    pub fn support(&self) -> Vec<usize> {
        support(&self.vector)
    }

    pub fn is_positive(&self) -> bool {
        self.support().len() == self.vector.len()
    }
}

/// Relative threshold below which an eigenvector entry counts as zero.
///
/// Entries outside the support of the limit vector decay geometrically in
/// the power iteration and stop just short of exact zero.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Indices `j` with `v[j] > SUPPORT_TOL * max(v)`.
pub fn support(v: &[f64]) -> Vec<usize> {
    let top = v.iter().fold(0.0f64, |m, &x| m.max(x));
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x > SUPPORT_TOL * top)
        .map(|(i, _)| i)
        .collect()
}

/// Smallest `h >= 0` making `A + h I` non-negative.
pub fn translation_shift(a: &MetzlerMatrix) -> f64 {
    let min_diag = a.diag().into_iter().fold(f64::INFINITY, f64::min);
    (-min_diag).max(0.0)
}

/// Leading eigenpair of a Metzler matrix by the translative power method.
pub fn selected_leading_eigenpair(a: &MetzlerMatrix, cfg: &SpectralConfig) -> Result<EigenPair> {
    let shift = translation_shift(a) + 1.0;
    let b = a.as_matrix().shifted(shift);
    let mut pair = nonnegative_eigenpair(&b, cfg)?;
    pair.value -= shift;
    Ok(pair)
}

/// Spectral abscissa (largest real part of the spectrum) of a Metzler matrix.
pub fn spectral_abscissa(a: &MetzlerMatrix, cfg: &SpectralConfig) -> Result<f64> {
    selected_leading_eigenpair(a, cfg).map(|p| p.value)
}

/// Spectral radius of a non-negative matrix; coincides with its spectral abscissa.
pub fn spectral_radius(a: &Matrix, cfg: &SpectralConfig) -> Result<f64> {
    a.check_nonnegative()?;
    let m = MetzlerMatrix::new(a.clone())?;
    spectral_abscissa(&m, cfg)
}

/// Hurwitz stability of a Metzler matrix.
///
/// Strict mode uses the inverse criterion: `A` is strictly stable iff it is
/// invertible and `-A^{-1} >= 0`. Weak mode checks `eta(A) <= stability_tol`.
pub fn is_hurwitz_stable(a: &MetzlerMatrix, strict: bool, cfg: &SpectralConfig) -> Result<bool> {
    if strict {
        Ok(match a.inverse() {
            None => false,
            Some(inv) => inverse_sign_test(&inv, -1.0),
        })
    } else {
        Ok(spectral_abscissa(a, cfg)? <= cfg.stability_tol)
    }
}

/// Schur stability of a non-negative matrix.
///
/// Strict mode: `(I - A)^{-1}` exists and is non-negative. Weak mode:
/// `rho(A) <= 1 + stability_tol`.
pub fn is_schur_stable(a: &Matrix, strict: bool, cfg: &SpectralConfig) -> Result<bool> {
    a.check_nonnegative()?;
    if strict {
        let i_minus_a = Matrix::identity(a.dim()).sub(a);
        Ok(match i_minus_a.inverse() {
            None => false,
            Some(inv) => inverse_sign_test(&inv, 1.0),
        })
    } else {
        Ok(spectral_radius(a, cfg)? <= 1.0 + cfg.stability_tol)
    }
}

// sign * inv must be entrywise non-negative up to rounding.
fn inverse_sign_test(inv: &Matrix, sign: f64) -> bool {
    let scale = norm(inv, NormKind::Max).max(1.0);
    inv.as_slice().iter().all(|&x| sign * x >= -1e-12 * scale)
}

/// Power iteration on a non-negative matrix with a positive diagonal, started at `e`.
pub(crate) fn nonnegative_eigenpair(b: &Matrix, cfg: &SpectralConfig) -> Result<EigenPair> {
    let d = b.dim();
    let scale = norm(b, NormKind::Inf).max(1.0);
    let threshold = cfg.tol * scale;

    let mut v = vec![1.0 / d as f64; d];
    let mut w = vec![0.0; d];
    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    let budget = if d <= DENSE_FALLBACK_DIM {
        cfg.max_iter.min(STALL_ITERATIONS)
    } else {
        cfg.max_iter
    };

    for it in 1..=budget {
        b.matvec_into(&v, &mut w);
        let lambda: f64 = w.iter().sum();
        residual = linf_residual(&w, &v, lambda);
        let settled = (lambda - prev).abs() <= cfg.tol * lambda.abs().max(1.0);
        if settled && residual <= threshold {
            return Ok(polish(b, v, lambda, residual, it));
        }
        prev = lambda;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / lambda;
        }
    }

    if d <= DENSE_FALLBACK_DIM {
        let pair = squaring_eigenpair(b, budget);
        if pair.residual <= threshold {
            return Ok(pair);
        }
        residual = pair.residual;
        v = pair.vector;
    }
    Err(Error::IterationLimit {
        context: "selected leading eigenpair",
        iterations: budget,
        residual,
        best: v,
    })
}

fn linf_residual(bv: &[f64], v: &[f64], lambda: f64) -> f64 {
    bv.iter()
        .zip(v)
        .map(|(x, y)| (x - lambda * y).abs())
        .fold(0.0, f64::max)
}

// A few extra steps once converged, keeping the smallest residual seen.
fn polish(b: &Matrix, mut v: Vec<f64>, mut lambda: f64, mut residual: f64, iterations: usize) -> EigenPair {
    let mut w = vec![0.0; v.len()];
    let mut cand = v.clone();
    let mut steps = 0;
    for _ in 0..POLISH_STEPS {
        b.matvec_into(&cand, &mut w);
        let lam: f64 = w.iter().sum();
        for (c, wi) in cand.iter_mut().zip(&w) {
            *c = wi / lam;
        }
        b.matvec_into(&cand, &mut w);
        let lam_next: f64 = w.iter().sum();
        let res = linf_residual(&w, &cand, lam_next);
        steps += 1;
        if res < residual {
            residual = res;
            lambda = lam_next;
            v.clone_from(&cand);
        }
    }
    EigenPair {
        value: lambda,
        vector: v,
        iterations: iterations + steps,
        residual,
    }
}

// Limit of B^n e / |B^n e|_1 through the subsequence n = 2^k. Handles the
// sublinear convergence caused by Jordan blocks at the leading eigenvalue.
fn squaring_eigenpair(b: &Matrix, spent: usize) -> EigenPair {
    let d = b.dim();
    let mut p = b.scaled(1.0 / norm(b, NormKind::Inf));
    for _ in 0..SQUARINGS {
        p = p.matmul(&p);
        let s = norm(&p, NormKind::Inf);
        if s == 0.0 || !s.is_finite() {
            break;
        }
        p = p.scaled(1.0 / s);
    }
    let mut v = p.matvec(&vec![1.0; d]);
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    let w = b.matvec(&v);
    let lambda: f64 = w.iter().sum();
    let residual = linf_residual(&w, &v, lambda);
    EigenPair {
        value: lambda,
        vector: v,
        iterations: spent + SQUARINGS,
        residual,
    }
}

/// Outcome of the ordinary (unshifted) power method.
#[derive(Clone, Debug, PartialEq)]
pub struct PlainPowerReport {
    pub converged: bool,
    pub iterations: usize,
    /// Number of steps where the sign pattern of the iterate changed.
    pub sign_changes: usize,
    pub last_vector: Vec<f64>,
}

impl PlainPowerReport {
    /// The iteration failed and the sign pattern kept flipping.
    pub fn oscillates(&self) -> bool {
        !self.converged && self.sign_changes * 4 >= self.iterations
    }
}

/// Ordinary power method `x_{k+1} = A x_k / |A x_k|_2` from `e`, without translation.
///
/// Kept as a diagnostic: on strict Metzler matrices it may never converge.
pub fn plain_power_iteration(a: &Matrix, max_iter: usize, tol: f64) -> PlainPowerReport {
    let d = a.dim();
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut sign_changes = 0;
    let pattern = |x: &[f64]| -> Vec<i8> {
        let m = x.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        x.iter()
            .map(|&y| {
                if y.abs() <= 1e-12 * m {
                    0
                } else if y > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    };
    let mut last_pattern = pattern(&v);
    for it in 1..=max_iter {
        let mut w = a.matvec(&v);
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return PlainPowerReport {
                converged: false,
                iterations: it,
                sign_changes,
                last_vector: w,
            };
        }
        for x in &mut w {
            *x /= n;
        }
        let p = pattern(&w);
        if p != last_pattern {
            sign_changes += 1;
        }
        let delta = w.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        last_pattern = p;
        v = w;
        if delta <= tol {
            return PlainPowerReport {
                converged: true,
                iterations: it,
                sign_changes,
                last_vector: v,
            };
        }
    }
    PlainPowerReport {
        converged: false,
        iterations: max_iter,
        sign_changes,
        last_vector: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metzler(rows: &[&[f64]]) -> MetzlerMatrix {
        MetzlerMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn shift_values() {
        let a = metzler(&[&[-2.0, 2.0, 0.0], &[0.0, -6.0, 5.0], &[2.0, 2.0, -9.0]]);
        assert_eq!(translation_shift(&a), 9.0);
        assert_eq!(translation_shift(&metzler(&[&[1.0, 2.0], &[0.0, 3.0]])), 0.0);
        assert_eq!(translation_shift(&metzler(&[&[-3.0]])), 3.0);
    }

    #[test]
    fn diagonal_and_swap_pairs() {
        let cfg = SpectralConfig::default();
        let p = selected_leading_eigenpair(&metzler(&[&[-1.0, 0.0], &[0.0, -4.0]]), &cfg).unwrap();
        assert!((p.value + 1.0).abs() < 1e-12);
        assert!((p.vector[0] - 1.0).abs() < 1e-12 && p.vector[1].abs() < 1e-12);

        let p = selected_leading_eigenpair(&metzler(&[&[0.0, 1.0], &[1.0, 0.0]]), &cfg).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
        assert!((p.vector[0] - 0.5).abs() < 1e-12 && (p.vector[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jordan_block_falls_back_to_squaring() {
        // -I + nilpotent: eta = -1 with a Jordan chain, power iteration is sublinear.
        let a = metzler(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[0.0, 0.0, -1.0]]);
        let p = selected_leading_eigenpair(&a, &SpectralConfig::default()).unwrap();
        assert!((p.value + 1.0).abs() < 1e-9);
        assert!(p.vector[0] > 0.999);
    }

    #[test]
    fn stability_predicates() {
        let cfg = SpectralConfig::default();
        let zero = MetzlerMatrix::new(Matrix::zeros(3)).unwrap();
        assert!(is_hurwitz_stable(&zero, false, &cfg).unwrap());
        assert!(!is_hurwitz_stable(&zero, true, &cfg).unwrap());

        let half = Matrix::from_rows(&[[0.5]]).unwrap();
        assert!(is_schur_stable(&half, true, &cfg).unwrap());
        let id = Matrix::identity(3);
        assert!(is_schur_stable(&id, false, &cfg).unwrap());
        assert!(!is_schur_stable(&id, true, &cfg).unwrap());
        let big = Matrix::from_rows(&[[1.0, 9.0], [6.0, 0.0]]).unwrap();
        assert!(!is_schur_stable(&big, true, &cfg).unwrap());
        assert!(!is_schur_stable(&big, false, &cfg).unwrap());
        assert!(matches!(
            is_schur_stable(&Matrix::from_rows(&[[-1.0]]).unwrap(), true, &cfg),
            Err(Error::NotNonNegative { .. })
        ));
    }
}
