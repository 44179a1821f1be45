//! Closest unstable and closest stable matrices in the l-infinity norm.
//!
//! Destabilization has a closed form: one column is raised uniformly. The
//! stabilizers search over `tau` with the selective greedy method minimising
//! the abscissa on the ball of radius `tau` around `A`; each row of the ball
//! is optimised by [`ball_row_minimizer`], and once a stable matrix is found
//! the next radius is read off the leading eigenvalue of a small pencil.

use crate::error::{Error, Result};
use crate::family::{run_greedy, Direction, GreedyOptions, RowSearch};
use crate::matrix::{norm, Matrix, MetzlerMatrix, NormKind};
use crate::maxnorm::clip_nonnegative;
use crate::perron::{spectral_abscissa, spectral_radius, support, SpectralConfig};

/// Result of a closed-form l-infinity destabilization.
#[derive(Clone, Debug, PartialEq)]
pub struct InfDestabilization {
    pub matrix: Matrix,
    pub tau: f64,
    /// Raised column (0-based).
    pub column: usize,
    /// Largest component of the vector whose argmax picks the column.
    pub component: f64,
}

fn argmax_first(w: &[f64]) -> (usize, f64) {
    w.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(k, m), (j, &x)| if x > m { (j, x) } else { (k, m) })
}

fn raise_column(a: &Matrix, k: usize, tau: f64) -> Matrix {
    let mut x = a.clone();
    for i in 0..x.dim() {
        x.row_mut(i)[k] += tau;
    }
    x
}

/// Closest Hurwitz unstable Metzler matrix in the l-infinity norm.
///
/// With `w = -A^{-1} e`, the distance is `1 / max_k w_k` and the optimum
/// raises column `k = argmax w` (smallest index on ties) by that amount.
pub fn closest_unstable_inf_hurwitz(a: &MetzlerMatrix, cfg: &SpectralConfig) -> Result<InfDestabilization> {
    let eta = spectral_abscissa(a, cfg)?;
    if eta >= 0.0 {
        return Err(Error::precondition(format!(
            "matrix must be strictly Hurwitz stable, spectral abscissa is {eta}"
        )));
    }
    let d = a.dim();
    let x = a
        .solve(&vec![1.0; d])
        .ok_or_else(|| Error::precondition("stable matrix turned out numerically singular"))?;
    let w: Vec<f64> = x.iter().map(|v| -v).collect();
    let (column, component) = argmax_first(&w);
    let tau = 1.0 / component;
    Ok(InfDestabilization {
        matrix: raise_column(a.as_matrix(), column, tau),
        tau,
        column,
        component,
    })
}

/// Closest non-negative matrix with spectral radius `level` (the Schur
/// boundary for `level = 1`), using `w = (level I - A)^{-1} e`.
pub fn closest_unstable_inf_schur(a: &Matrix, level: f64, cfg: &SpectralConfig) -> Result<InfDestabilization> {
    if level <= 0.0 {
        return Err(Error::precondition("level must be positive"));
    }
    let rho = spectral_radius(a, cfg)?;
    if rho >= level {
        return Err(Error::precondition(format!(
            "spectral radius {rho} must be below the level {level}"
        )));
    }
    let d = a.dim();
    let shifted = Matrix::identity(d).scaled(level).sub(a);
    let w = shifted
        .solve(&vec![1.0; d])
        .ok_or_else(|| Error::precondition("level I - A is numerically singular"))?;
    let (column, component) = argmax_first(&w);
    let tau = 1.0 / component;
    Ok(InfDestabilization {
        matrix: raise_column(a, column, tau),
        tau,
        column,
        component,
    })
}

/// Which matrices the ball around the center contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BallKind {
    /// Metzler matrices; diagonal entries may go arbitrarily negative.
    Metzler,
    /// Non-negative matrices.
    NonNegative,
}

/// Ball `{X : ||X - A||_inf <= radius}` intersected with the class given by `kind`.
///
/// Minimisers of the abscissa can always be taken below the center, so only
/// that part of the ball is searched.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub center: MetzlerMatrix,
    pub radius: f64,
    pub kind: BallKind,
}

impl BallSpec {
    pub fn new(center: MetzlerMatrix, radius: f64, kind: BallKind) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::precondition("ball radius must be finite and non-negative"));
        }
        if kind == BallKind::NonNegative {
            center.check_nonnegative()?;
        }
        Ok(BallSpec { center, radius, kind })
    }
}

/// Row of the ball minimising `<x, v>`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallRow {
    pub row: Vec<f64>,
    /// Column that absorbed the last part of the budget, if the budget ran out inside the support.
    pub cut: Option<usize>,
    /// Support in the order the budget is spent: descending `v`, ascending index on ties.
    pub order: Vec<usize>,
}

/// Minimises `<x, v>` over rows `x <= a_row` with `sum_j (a_j - x_j) <= tau`.
///
/// The budget goes to the entries with the largest weights first. Entries
/// off the diagonal cannot drop below zero, the diagonal entry can in the
/// Metzler ball; in the non-negative ball every entry stops at zero.
/// Entries outside `support` are left as they are.
pub fn ball_row_minimizer(
    a_row: &[f64],
    v: &[f64],
    support: &[usize],
    tau: f64,
    diag_index: usize,
    kind: BallKind,
) -> BallRow {
    let mut order = support.to_vec();
    order.sort_by(|&p, &q| v[q].total_cmp(&v[p]).then(p.cmp(&q)));
    let mut row = a_row.to_vec();
    let mut budget = tau;
    let mut cut = None;
    for &j in &order {
        let cap = if j == diag_index && kind == BallKind::Metzler {
            f64::INFINITY
        } else {
            a_row[j].max(0.0)
        };
        if cap >= budget {
            row[j] = a_row[j] - budget;
            cut = Some(j);
            break;
        }
        row[j] = a_row[j] - cap;
        budget -= cap;
    }
    BallRow { row, cut, order }
}

/// `X = C - tau R` split of a greedy iterate on the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct CrDecomposition {
    pub c: Matrix,
    /// 0/1 matrix with at most one 1 per row, at the cut position.
    pub r: Matrix,
    pub tau: f64,
}

impl CrDecomposition {
    /// `C - t R`.
    pub fn at(&self, t: f64) -> Matrix {
        self.c.sub(&self.r.scaled(t))
    }
}

/// Splits the iterate `x` (from the ball around `a` with radius `tau`) along the eigenvector `v`.
///
/// On a cut row the cut entry of `C` is the partial row mass up to the cut,
/// so that `C - tau R` reproduces `x`. A non-negative row whose budget
/// exceeds its support mass puts the whole mass on the last support entry.
pub fn cr_decomposition(a: &Matrix, x: &Matrix, v: &[f64], tau: f64, kind: BallKind) -> CrDecomposition {
    let d = a.dim();
    let s = support(v);
    let mut c = x.clone();
    let mut r = Matrix::zeros(d);
    for &i in &s {
        let br = ball_row_minimizer(a.row(i), v, &s, tau, i, kind);
        match br.cut {
            Some(j) => {
                c.row_mut(i)[j] = x[(i, j)] + tau;
                r.row_mut(i)[j] = 1.0;
            }
            None => {
                let Some(&last) = br.order.last() else { continue };
                let mass: f64 = br.order.iter().map(|&j| a[(i, j)]).sum();
                c.row_mut(i)[last] = mass;
                r.row_mut(i)[last] = 1.0;
            }
        }
    }
    CrDecomposition { c, r, tau }
}

struct BallSearch<'a> {
    center: &'a Matrix,
    tau: f64,
    kind: BallKind,
}

impl RowSearch for BallSearch<'_> {
    type Choice = Vec<f64>;

    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn write_row(&self, _i: usize, choice: &Vec<f64>, out: &mut [f64]) {
        out.copy_from_slice(choice);
    }

    fn optimize(&self, i: usize, v: &[f64], _incumbent: &Vec<f64>, _opts: &GreedyOptions) -> Option<Vec<f64>> {
        let s = support(v);
        if s.binary_search(&i).is_err() {
            return None;
        }
        Some(ball_row_minimizer(self.center.row(i), v, &s, self.tau, i, self.kind).row)
    }
}

/// One radius tried by a stabilizer.
#[derive(Clone, Debug, PartialEq)]
pub struct TauProbe {
    pub tau: f64,
    /// Abscissa of the last greedy iterate on this ball.
    pub eta: f64,
    /// The greedy run reached an abscissa below the target before finishing.
    pub stable: bool,
    pub greedy_iterations: usize,
    /// Radius proposed from this probe's `C - tau R` split, if any.
    pub candidate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizeOptions {
    pub spectral: SpectralConfig,
    /// Greedy iteration budget per probe.
    pub greedy_max_iter: usize,
    /// Radius probe budget.
    pub max_probes: usize,
    /// A finished greedy run is accepted when `|eta - target| <= accept_tol`.
    pub accept_tol: f64,
    /// Early exit once `eta < target - early_exit_tol`.
    pub early_exit_tol: f64,
    /// Stop once the radius bracket is narrower than this times `||A||_inf`.
    pub bracket_tol: f64,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        StabilizeOptions {
            spectral: SpectralConfig::default(),
            greedy_max_iter: 1_000,
            max_probes: 200,
            accept_tol: 1e-8,
            early_exit_tol: 1e-9,
            bracket_tol: 1e-10,
        }
    }
}

/// Result of an l-infinity stabilization.
#[derive(Clone, Debug, PartialEq)]
pub struct InfStabilization {
    pub matrix: Matrix,
    pub tau: f64,
    /// Abscissa (or spectral radius) of `matrix`.
    pub eta: f64,
    /// `|eta - target|`.
    pub residual: f64,
    pub probes: Vec<TauProbe>,
    /// Greedy iterations summed over all probes.
    pub iterations: usize,
    /// Ended by bracket collapse rather than by a finished greedy run at the boundary.
    pub bracket_stop: bool,
}

/// Closest Hurwitz stable Metzler matrix in the l-infinity norm.
pub fn closest_stable_inf_hurwitz(a: &MetzlerMatrix, opts: &StabilizeOptions) -> Result<InfStabilization> {
    let eta = spectral_abscissa(a, &opts.spectral)?;
    if eta <= 0.0 {
        return Err(Error::precondition(format!(
            "matrix must be Hurwitz unstable, spectral abscissa is {eta}"
        )));
    }
    stabilize(a, BallKind::Metzler, 0.0, opts)
}

/// Closest Schur stable matrix in the l-infinity norm.
///
/// `A` must be non-negative with spectral radius above one. The search runs
/// over non-negative matrices, or over Metzler matrices (target abscissa one)
/// when `allow_metzler` is set.
pub fn closest_stable_inf_schur(a: &Matrix, allow_metzler: bool, opts: &StabilizeOptions) -> Result<InfStabilization> {
    let rho = spectral_radius(a, &opts.spectral)?;
    if rho <= 1.0 {
        return Err(Error::precondition(format!("spectral radius {rho} is not above one")));
    }
    let kind = if allow_metzler {
        BallKind::Metzler
    } else {
        BallKind::NonNegative
    };
    stabilize(&MetzlerMatrix::new(a.clone())?, kind, 1.0, opts)
}

struct Probe {
    x: Matrix,
    eta: f64,
    vector: Vec<f64>,
    stable: bool,
    iterations: usize,
}

fn probe(a: &MetzlerMatrix, tau: f64, kind: BallKind, target: f64, opts: &StabilizeOptions) -> Result<Probe> {
    let search = BallSearch {
        center: a.as_matrix(),
        tau,
        kind,
    };
    let greedy = GreedyOptions {
        direction: Direction::Min,
        tie_tol: 1e-12,
        max_iter: opts.greedy_max_iter,
        spectral: opts.spectral,
    };
    let start = a.to_rows();
    let threshold = target - opts.early_exit_tol * target.abs().max(1.0);
    let run = run_greedy(&search, start, &greedy, |e| e.value < threshold)?;
    Ok(Probe {
        x: run.matrix.into_matrix(),
        eta: run.eigen.value,
        vector: run.eigen.vector,
        stable: run.stopped_early,
        iterations: run.iterations,
    })
}

// Radius at which the pencil C - t R reaches the target abscissa.
fn pencil_candidate(cr: &CrDecomposition, target: f64, cfg: &SpectralConfig) -> Option<f64> {
    let d = cr.c.dim();
    let k = cr.at(cr.tau).sub(&Matrix::identity(d).scaled(target));
    let inv = k.inverse()?;
    let m = clip_nonnegative(&inv.matmul(&cr.r).scaled(-1.0));
    let lambda = spectral_radius(&m, cfg).ok()?;
    (lambda > 0.0 && lambda.is_finite()).then(|| cr.tau - 1.0 / lambda)
}

fn stabilize(a: &MetzlerMatrix, kind: BallKind, target: f64, opts: &StabilizeOptions) -> Result<InfStabilization> {
    let scale = norm(a, NormKind::Inf);
    let (mut lo, mut hi) = (0.0, scale);
    let mut tau = scale / 2.0;
    let mut probes = Vec::new();
    let mut iterations = 0;
    let mut best: Option<(f64, Matrix, f64)> = None;

    for _ in 0..opts.max_probes {
        let p = probe(a, tau, kind, target, opts)?;
        iterations += p.iterations;
        let mut record = TauProbe {
            tau,
            eta: p.eta,
            stable: p.stable,
            greedy_iterations: p.iterations,
            candidate: None,
        };

        if !p.stable {
            if (p.eta - target).abs() <= opts.accept_tol {
                probes.push(record);
                return Ok(InfStabilization {
                    matrix: p.x,
                    tau,
                    eta: p.eta,
                    residual: (p.eta - target).abs(),
                    probes,
                    iterations,
                    bracket_stop: false,
                });
            }
            lo = tau;
            tau = 0.5 * (lo + hi);
        } else {
            hi = tau;
            best = Some((tau, p.x.clone(), p.eta));
            let cr = cr_decomposition(a.as_matrix(), &p.x, &p.vector, tau, kind);
            record.candidate = pencil_candidate(&cr, target, &opts.spectral);
            tau = match record.candidate {
                Some(t) if t > lo && t < hi => t,
                _ => 0.5 * (lo + hi),
            };
        }
        probes.push(record);

        if hi - lo <= opts.bracket_tol * scale.max(1.0) {
            if let Some((t, x, eta)) = best {
                return Ok(InfStabilization {
                    matrix: x,
                    tau: t,
                    eta,
                    residual: (eta - target).abs(),
                    probes,
                    iterations,
                    bracket_stop: true,
                });
            }
        }
    }
    Err(Error::BudgetExhausted {
        context: "l-infinity stabilization",
        budget: opts.max_probes,
        best_value: best.map_or(f64::NAN, |b| b.0),
    })
}

/// Minimal abscissa over the ball by the selective greedy method, with its minimiser.
pub fn minimize_on_ball(ball: &BallSpec, opts: &StabilizeOptions) -> Result<(Matrix, f64)> {
    let search = BallSearch {
        center: ball.center.as_matrix(),
        tau: ball.radius,
        kind: ball.kind,
    };
    let greedy = GreedyOptions {
        direction: Direction::Min,
        tie_tol: 1e-12,
        max_iter: opts.greedy_max_iter,
        spectral: opts.spectral,
    };
    let run = run_greedy(&search, ball.center.to_rows(), &greedy, |_| false)?;
    Ok((run.matrix.into_matrix(), run.eigen.value))
}
