//! Positive linear switching systems `x' = A_sigma(t) x`.
//!
//! Two stabilization routes are provided: a convex-hull procedure for planar
//! systems, and a dimension-free route through the sign pattern of the sum
//! of the modes.

use crate::error::{Error, Result};
use crate::infnorm::{closest_stable_inf_hurwitz, StabilizeOptions};
use crate::matrix::{norm, Matrix, MetzlerMatrix, NormKind};
use crate::perron::{spectral_abscissa, SpectralConfig};
use crate::sign::{closest_stable_sign, is_sign_stable, Sign, SignMatrix};

/// Finite set of Metzler modes of equal dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingSystem {
    dim: usize,
    modes: Vec<MetzlerMatrix>,
}

impl SwitchingSystem {
    pub fn new(modes: Vec<MetzlerMatrix>) -> Result<Self> {
        let first = modes
            .first()
            .ok_or_else(|| Error::Structural("switching system needs at least one mode".into()))?;
        let dim = first.dim();
        if let Some(m) = modes.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        Ok(SwitchingSystem { dim, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[MetzlerMatrix] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `sum_i weights[i] A_i`.
    pub fn combination(&self, weights: &[f64]) -> MetzlerMatrix {
        let mut acc = Matrix::zeros(self.dim);
        for (m, &w) in self.modes.iter().zip(weights) {
            if w != 0.0 {
                acc = acc.add(&m.as_matrix().scaled(w));
            }
        }
        MetzlerMatrix::new(acc).expect("convex combinations of Metzler matrices are Metzler")
    }
}

/// Worst convex combination found by [`hull_max_abscissa`].
#[derive(Clone, Debug, PartialEq)]
pub struct HullMax {
    pub weights: Vec<f64>,
    pub eta: f64,
    /// Largest abscissa over the grid points alone.
    pub grid_eta: f64,
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Approximate maximum of the spectral abscissa over the convex hull of the modes.
///
/// Scans the simplex grid with step `1 / resolution` (keeping the first
/// maximiser in lexicographic order of weights), then refines: by
/// golden-section search on the neighbouring grid cell for two modes, or by
/// moving weight between pairs of modes otherwise. The result is a lower
/// bound on the true maximum.
pub fn hull_max_abscissa(system: &SwitchingSystem, resolution: usize, cfg: &SpectralConfig) -> Result<HullMax> {
    let n = system.len();
    let eta_at = |w: &[f64]| spectral_abscissa(&system.combination(w), cfg);
    if n == 1 {
        let e = eta_at(&[1.0])?;
        return Ok(HullMax {
            weights: vec![1.0],
            eta: e,
            grid_eta: e,
        });
    }
    let res = resolution.max(1);
    let mut grid = compositions(res, n);
    grid.sort();
    let mut best_w = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for c in &grid {
        let w: Vec<f64> = c.iter().map(|&k| k as f64 / res as f64).collect();
        let e = eta_at(&w)?;
        if e > best {
            best = e;
            best_w = w;
        }
    }
    let grid_eta = best;

    if n == 2 {
        let step = 1.0 / res as f64;
        let (lo, hi) = ((best_w[0] - step).max(0.0), (best_w[0] + step).min(1.0));
        let f = |t: f64| eta_at(&[t, 1.0 - t]);
        let (t, e) = golden_max(f, lo, hi, 1e-10)?;
        if e > best {
            best = e;
            best_w = vec![t, 1.0 - t];
        }
    } else {
        let mut step = 1.0 / res as f64;
        while step > 1e-6 {
            let mut improved = false;
            for p in 0..n {
                for q in (0..n).filter(|&q| q != p) {
                    let mv = step.min(best_w[p]);
                    if mv <= 0.0 {
                        continue;
                    }
                    let mut w = best_w.clone();
                    w[p] -= mv;
                    w[q] += mv;
                    let e = eta_at(&w)?;
                    if e > best {
                        best = e;
                        best_w = w;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
    }
    Ok(HullMax {
        weights: best_w,
        eta: best,
        grid_eta,
    })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lss2dOptions {
    /// Simplex grid resolution for the hull scan.
    pub resolution: usize,
    /// Target abscissa is `-margin * max(1, max_i ||A_i||_inf)`, keeping the hull strictly stable.
    pub margin: f64,
    /// Stabilize-and-split rounds before giving up.
    pub max_rounds: usize,
    pub stabilize: StabilizeOptions,
}

impl Default for Lss2dOptions {
    fn default() -> Self {
        Lss2dOptions {
            resolution: 200,
            margin: 1e-3,
            max_rounds: 25,
            stabilize: StabilizeOptions::default(),
        }
    }
}

/// Outcome of the planar hull stabilization.
#[derive(Clone, Debug, PartialEq)]
pub struct Lss2dResult {
    pub system: SwitchingSystem,
    /// Hull scan of the returned system; `eta < 0` certifies it.
    pub hull: HullMax,
    pub rounds: usize,
    /// `||A_i - A'_i||_inf` per mode.
    pub distances: Vec<f64>,
}

// Closest matrix with abscissa -mu: stabilize A + mu I, then shift back.
fn stabilize_at_level(a: &MetzlerMatrix, mu: f64, opts: &StabilizeOptions) -> Result<Matrix> {
    let r = closest_stable_inf_hurwitz(&a.shifted(mu), opts)?;
    Ok(r.matrix.shifted(-mu))
}

/// Makes every matrix in the convex hull of a planar system Hurwitz stable.
///
/// Unstable modes are first replaced by their closest stable matrices. Then,
/// while the worst convex combination `A = sum a_i A_i` is not stable, it is
/// replaced by its closest stable matrix `A'` and the reduction `A - A'` is
/// split among the modes: off-diagonal reductions in proportion to each
/// mode's entry, diagonal reductions equally, so that `sum a_i A'_i = A'`.
pub fn stabilize_2d_lss(system: &SwitchingSystem, opts: &Lss2dOptions) -> Result<Lss2dResult> {
    if system.dim() != 2 {
        return Err(Error::precondition("hull stabilization is limited to 2x2 modes"));
    }
    let cfg = &opts.stabilize.spectral;
    let scale = system
        .modes()
        .iter()
        .map(|m| norm(m, NormKind::Inf))
        .fold(1.0, f64::max);
    let mu = opts.margin * scale;

    let mut modes: Vec<MetzlerMatrix> = Vec::with_capacity(system.len());
    for m in system.modes() {
        if spectral_abscissa(m, cfg)? >= -mu {
            modes.push(MetzlerMatrix::new(stabilize_at_level(m, mu, &opts.stabilize)?)?);
        } else {
            modes.push(m.clone());
        }
    }

    let mut rounds = 0;
    loop {
        let current = SwitchingSystem::new(modes.clone())?;
        let hull = hull_max_abscissa(&current, opts.resolution, cfg)?;
        if hull.eta < 0.0 {
            let distances = system
                .modes()
                .iter()
                .zip(current.modes())
                .map(|(a, b)| norm(&a.sub(b), NormKind::Inf))
                .collect();
            return Ok(Lss2dResult {
                system: current,
                hull,
                rounds,
                distances,
            });
        }
        if rounds == opts.max_rounds {
            return Err(Error::BudgetExhausted {
                context: "planar switching system stabilization",
                budget: opts.max_rounds,
                best_value: hull.eta,
            });
        }
        rounds += 1;

        let a = current.combination(&hull.weights);
        let target = stabilize_at_level(&a, mu, &opts.stabilize)?;
        let reduction = a.sub(&target);
        for m in &mut modes {
            let mut next = m.as_matrix().clone();
            for i in 0..2 {
                for j in 0..2 {
                    let r = reduction[(i, j)];
                    if r <= 0.0 {
                        continue;
                    }
                    let cut = if i == j { r } else { r * m[(i, j)] / a[(i, j)] };
                    next.row_mut(i)[j] -= cut;
                    if i != j {
                        next.row_mut(i)[j] = next[(i, j)].max(0.0);
                    }
                }
            }
            *m = MetzlerMatrix::new(next)?;
        }
    }
}

/// Outcome of the sign-pattern stabilization of a switching system.
#[derive(Clone, Debug, PartialEq)]
pub struct SignStabilization {
    /// Modes with the removed interactions set to zero.
    pub system: SwitchingSystem,
    /// Sign sum `M` of the original modes and `eta(sgn M)`.
    pub sum: SignMatrix,
    pub sum_eta: f64,
    /// Closest stable sign matrix `M'` and its distance `k*` from `M`.
    pub target: SignMatrix,
    pub k_star: usize,
    /// Sign patterns `M'_i` of the new modes and `k_i = ||M_i - M'_i||`.
    pub mode_signs: Vec<SignMatrix>,
    pub mode_distances: Vec<usize>,
    /// `eta(sgn M')`.
    pub eta: f64,
    /// `M'` has negative diagonal and an acyclic off-diagonal graph.
    pub strict: bool,
}

/// Stabilizes a switching system through the sign pattern of its modes.
///
/// Every mode must have a negative diagonal. The sign sum `M` of the modes
/// is replaced by its closest stable sign matrix `M'`, and every entry removed
/// from `M` is set to zero in each mode that has it, so that the sign sum of
/// the new modes is exactly `M'`.
pub fn stabilize_lss_by_signs(system: &SwitchingSystem, cfg: &SpectralConfig) -> Result<SignStabilization> {
    let d = system.dim();
    let signs: Vec<SignMatrix> = system.modes().iter().map(|m| SignMatrix::of(m)).collect();
    for (n, s) in signs.iter().enumerate() {
        if let Some(i) = (0..d).find(|&i| s.get(i, i) != Sign::Minus) {
            return Err(Error::precondition(format!(
                "mode {} has a non-negative diagonal entry at {}",
                n + 1,
                i + 1
            )));
        }
    }
    let sum = SignMatrix::sum(&signs)?;
    let sum_eta = spectral_abscissa(&crate::sign::sgn_realize(&sum)?, cfg)?;
    let closest = closest_stable_sign(&sum, cfg)?;

    let mut modes: Vec<Matrix> = system.modes().iter().map(|m| m.as_matrix().clone()).collect();
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            if sum.get(i, j) == Sign::Plus && closest.matrix.get(i, j) == Sign::Zero {
                for m in &mut modes {
                    m.row_mut(i)[j] = 0.0;
                }
            }
        }
    }
    let modes = modes.into_iter().map(MetzlerMatrix::new).collect::<Result<Vec<_>>>()?;
    let mode_signs: Vec<SignMatrix> = modes.iter().map(|m| SignMatrix::of(m)).collect();
    let mode_distances = signs.iter().zip(&mode_signs).map(|(a, b)| a.distance(b)).collect();
    let new_sum = SignMatrix::sum(&mode_signs)?;
    if new_sum != closest.matrix {
        return Err(Error::Structural(
            "closest stable sign matrix changes diagonal entries and cannot be split over the modes".into(),
        ));
    }
    let strict = is_sign_stable(&new_sum, true, cfg)?;
    Ok(SignStabilization {
        system: SwitchingSystem::new(modes)?,
        sum,
        sum_eta,
        target: closest.matrix,
        k_star: closest.k,
        mode_signs,
        mode_distances,
        eta: closest.eta,
        strict,
    })
}
