//! Independent oracles and random instance generators shared by the test suites.
#![allow(dead_code)]

use metzler::{BallKind, Matrix, MetzlerMatrix, ProductFamily, Sign, SignMatrix};
use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mat(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

pub fn metz(rows: &[&[f64]]) -> MetzlerMatrix {
    MetzlerMatrix::from_rows(rows).unwrap()
}

/// Largest real part of the spectrum by a dense Schur decomposition.
///
/// The unshifted QR iteration can stall on highly structured inputs (cyclic
/// patterns with equal weights), so failed attempts are retried on a random
/// orthogonal similarity of the matrix.
pub fn dense_abscissa(m: &Matrix) -> f64 {
    let d = m.dim();
    let mut a = DMatrix::from_row_slice(d, d, m.as_slice());
    let mut r = rng(0x5eed);
    for _ in 0..8 {
        if let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let g = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
        let q = g.qr().q();
        a = &q * a * q.transpose();
    }
    panic!("dense eigensolver did not converge");
}

pub fn random_metzler(r: &mut ChaCha8Rng, d: usize, density: f64) -> MetzlerMatrix {
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] = if i == j {
                r.random_range(-6.0..2.0)
            } else if r.random_bool(density) {
                r.random_range(0.0..3.0)
            } else {
                0.0
            };
        }
    }
    MetzlerMatrix::new(Matrix::from_row_major(d, data).unwrap()).unwrap()
}

/// Random Metzler matrix with `eta < -margin`.
pub fn random_stable(r: &mut ChaCha8Rng, d: usize, margin: f64) -> MetzlerMatrix {
    let a = random_metzler(r, d, 0.7);
    let eta = dense_abscissa(&a);
    a.shifted(-(eta + margin + r.random_range(0.0..2.0)))
}

/// Random Metzler matrix with `eta > margin`.
pub fn random_unstable(r: &mut ChaCha8Rng, d: usize, margin: f64) -> MetzlerMatrix {
    let a = random_metzler(r, d, 0.7);
    let eta = dense_abscissa(&a);
    a.shifted(margin + r.random_range(0.0..2.0) - eta)
}

pub fn random_nonnegative(r: &mut ChaCha8Rng, d: usize) -> Matrix {
    let data = (0..d * d).map(|_| r.random_range(0.0..3.0)).collect();
    Matrix::from_row_major(d, data).unwrap()
}

/// Family whose rows all have strictly positive off-diagonal entries.
pub fn random_full_family(r: &mut ChaCha8Rng, d: usize, max_rows: usize) -> ProductFamily {
    let sets = (0..d)
        .map(|i| {
            let m = r.random_range(1..=max_rows);
            (0..m)
                .map(|_| {
                    (0..d)
                        .map(|j| {
                            if i == j {
                                r.random_range(-3.0..1.0)
                            } else {
                                r.random_range(0.05..2.0)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    ProductFamily::from_rows(sets).unwrap()
}

/// Extreme abscissa over all vertex matrices, and a maximising/minimising choice.
pub fn enumerate_family(f: &ProductFamily, maximize: bool) -> (f64, Vec<usize>) {
    let d = f.dim();
    let sizes: Vec<usize> = f.sets().iter().map(|s| s.len()).collect();
    let mut choice = vec![0usize; d];
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut arg = choice.clone();
    loop {
        let e = dense_abscissa(f.matrix(&choice).unwrap().as_matrix());
        if (maximize && e > best) || (!maximize && e < best) {
            best = e;
            arg.clone_from(&choice);
        }
        let mut k = 0;
        loop {
            if k == d {
                return (best, arg);
            }
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Minimum of `<x, v>` over `x = a - r` with `0 <= r_j <= cap_j` on the support,
/// `r_j = 0` off it, and `sum r <= tau`, by enumerating every basic solution:
/// each variable at a bound except at most one, which is fixed by the budget.
pub fn lp_row_oracle(a: &[f64], v: &[f64], support: &[usize], tau: f64, i: usize, kind: BallKind) -> f64 {
    let caps: Vec<f64> = support
        .iter()
        .map(|&j| {
            if j == i && kind == BallKind::Metzler {
                tau
            } else {
                a[j].max(0.0).min(tau)
            }
        })
        .collect();
    let n = support.len();
    let base: f64 = a.iter().zip(v).map(|(x, y)| x * y).sum();
    let mut best = base;
    for mask in 0u32..(1 << n) {
        let at_cap = |k: usize| mask >> k & 1 == 1;
        let used: f64 = (0..n).filter(|&k| at_cap(k)).map(|k| caps[k]).sum();
        if used > tau + 1e-12 {
            continue;
        }
        let gain: f64 = (0..n).filter(|&k| at_cap(k)).map(|k| caps[k] * v[support[k]]).sum();
        best = best.min(base - gain);
        // One free variable at zero bound takes the remaining budget.
        for free in (0..n).filter(|&k| !at_cap(k)) {
            let r = (tau - used).min(caps[free]).max(0.0);
            best = best.min(base - gain - r * v[support[free]]);
        }
    }
    best
}

/// Root of `eta(A(tau)) = 0` by scalar bisection with the dense oracle.
pub fn max_norm_root(a: &MetzlerMatrix) -> f64 {
    let top = a.as_slice().iter().fold(0.0f64, |m, &x| m.max(x));
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dense_abscissa(metzler::clamp_shift(a, mid).as_matrix()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * top.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// Integer polynomials, coefficients from low to high degree.
type Poly = Vec<i128>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    p
}

fn primitive(p: Poly) -> Poly {
    let g = p.iter().fold(0i128, |g, &c| gcd_i(g, c.abs()));
    if g <= 1 {
        p
    } else {
        p.into_iter().map(|c| c / g).collect()
    }
}

fn is_zero(p: &Poly) -> bool {
    p.iter().all(|&c| c == 0)
}

fn gcd_i(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd_i(b, a % b) }
}

/// Pseudo-division `c a = q b + r` for some integer `c`; returns `(q, r)`.
/// The common content of `q` and `r` is removed each step to keep the
/// coefficients small, which is harmless since only roots matter here.
fn pseudo_divide(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lb = b[db];
    let mut q = vec![0i128; a.len().saturating_sub(db).max(1)];
    while r.len() > db && !is_zero(&r) {
        let shift = r.len() - 1 - db;
        let lr = *r.last().unwrap();
        for c in q.iter_mut().chain(r.iter_mut()) {
            *c *= lb;
        }
        q[shift] += lr;
        for (k, &bk) in b.iter().enumerate() {
            r[k + shift] -= lr * bk;
        }
        r.pop();
        r = trim(r);
        let g = q.iter().chain(r.iter()).fold(0i128, |g, &c| gcd_i(g, c.abs()));
        if g > 1 {
            for c in q.iter_mut().chain(r.iter_mut()) {
                *c /= g;
            }
        }
    }
    (trim(q), r)
}

fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (primitive(a.clone()), primitive(b.clone()));
    while !is_zero(&b) {
        let (_, r) = pseudo_divide(&a, &b);
        a = b;
        b = if is_zero(&r) { r } else { primitive(r) };
    }
    a
}

/// `det(xI - A)` by the Faddeev-LeVerrier recursion, exact for integer `A`.
fn char_poly(a: &[Vec<i128>]) -> Poly {
    let n = a.len();
    let mut c = vec![0i128; n + 1];
    c[n] = 1;
    let mut m = vec![vec![0i128; n]; n];
    for k in 1..=n {
        let mut next = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum::<i128>();
            }
            next[i][i] += c[n + 1 - k];
        }
        let trace: i128 = (0..n).map(|i| (0..n).map(|l| a[i][l] * next[l][i]).sum::<i128>()).sum();
        c[n - k] = -trace / k as i128;
        m = next;
    }
    c
}

fn eval(p: &Poly, x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// Abscissa of a Metzler matrix with integer entries, to full precision.
///
/// The dense estimate loses about half the digits at defective eigenvalues,
/// so it is polished by Newton's method on the square-free part of the
/// characteristic polynomial, where every root is simple.
pub fn integer_abscissa(m: &Matrix) -> f64 {
    let a: Vec<Vec<i128>> = m.rows().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    assert!(m.as_slice().iter().all(|x| x.fract() == 0.0), "integer entries expected");
    let p = char_poly(&a);
    let dp: Poly = trim((1..p.len()).map(|k| k as i128 * p[k]).collect());
    let g = poly_gcd(&p, &dp);
    let q = pseudo_divide(&p, &g).0;
    let dq: Poly = trim((1..q.len()).map(|k| k as i128 * q[k]).collect());
    let start = dense_abscissa(m);
    let mut x = start;
    for _ in 0..100 {
        let step = eval(&q, x) / eval(&dq, x);
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    assert!((x - start).abs() < 1e-2, "Newton polish left the root: {start} -> {x}");
    x
}

/// Exact Hurwitz test for a Metzler matrix with integer entries: `-A` must be
/// a non-singular M-matrix, i.e. every leading principal minor of `-A` is positive.
pub fn integer_hurwitz(m: &Matrix) -> bool {
    assert!(m.as_slice().iter().all(|x| x.fract() == 0.0), "integer entries expected");
    let mut a: Vec<Vec<i128>> = m.rows().map(|r| r.iter().map(|&x| -(x as i128)).collect()).collect();
    let n = a.len();
    // Bareiss elimination without pivoting; the k-th pivot is the k-th leading minor.
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] <= 0 {
            return false;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    true
}

fn realize(rows: &[Vec<i8>]) -> Matrix {
    let data = rows.iter().flatten().map(|&x| f64::from(x)).collect();
    Matrix::from_row_major(rows.len(), data).unwrap()
}

/// Every Metzler sign row within distance `k` of `row` (any direction of change).
fn sign_rows_within(row: &[i8], i: usize, k: usize) -> Vec<Vec<i8>> {
    let d = row.len();
    let mut out = Vec::new();
    let mut cur = vec![0i8; d];
    fn rec(j: usize, row: &[i8], i: usize, k: usize, used: usize, cur: &mut Vec<i8>, out: &mut Vec<Vec<i8>>) {
        if j == row.len() {
            out.push(cur.clone());
            return;
        }
        let options: &[i8] = if j == i { &[-1, 0, 1] } else { &[0, 1] };
        for &s in options {
            let c = (s - row[j]).unsigned_abs() as usize;
            if used + c <= k {
                cur[j] = s;
                rec(j + 1, row, i, k, used + c, cur, out);
            }
        }
    }
    rec(0, row, i, k, 0, &mut cur, &mut out);
    debug_assert!(d > 0);
    out
}

/// Minimal `eta(sgn X)` over all Metzler sign matrices in the ball of radius `k`.
pub fn sign_ball_exhaustive(m: &SignMatrix, k: usize) -> f64 {
    let d = m.dim();
    let rows: Vec<Vec<i8>> = (0..d).map(|i| m.row(i).iter().map(|s| s.value()).collect()).collect();
    let options: Vec<Vec<Vec<i8>>> = (0..d).map(|i| sign_rows_within(&rows[i], i, k)).collect();
    let mut idx = vec![0usize; d];
    let mut best = f64::INFINITY;
    loop {
        let pick: Vec<Vec<i8>> = (0..d).map(|i| options[i][idx[i]].clone()).collect();
        best = best.min(integer_abscissa(&realize(&pick)));
        let mut p = 0;
        loop {
            if p == d {
                return best;
            }
            idx[p] += 1;
            if idx[p] < options[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

pub fn random_sign_metzler(r: &mut ChaCha8Rng, d: usize) -> SignMatrix {
    let mut e = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            e.push(if i == j {
                [Sign::Minus, Sign::Zero, Sign::Plus][r.random_range(0..3)]
            } else if r.random_bool(0.4) {
                Sign::Plus
            } else {
                Sign::Zero
            });
        }
    }
    SignMatrix::new(d, e).unwrap()
}

// Worked examples.

pub fn stable_5x5() -> MetzlerMatrix {
    metz(&[
        &[-4.0, 0.0, 0.0, 0.0, 4.0],
        &[0.0, -2.0, 0.0, 2.0, 0.0],
        &[0.0, 2.0, -1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, -4.0, 0.0],
        &[0.0, 0.0, 0.0, 3.0, -9.0],
    ])
}

pub fn stable_5x5_destabilized() -> Matrix {
    mat(&[
        &[-4.0, 0.0, 0.4, 0.0, 4.0],
        &[0.0, -2.0, 0.4, 2.0, 0.0],
        &[0.0, 2.0, -0.6, 0.0, 0.0],
        &[0.0, 0.0, 0.4, -4.0, 0.0],
        &[0.0, 0.0, 0.4, 3.0, -9.0],
    ])
}

pub fn unstable_5x5() -> MetzlerMatrix {
    metz(&[
        &[3.0, 0.0, 2.0, 1.0, 4.0],
        &[7.0, -4.0, 6.0, 5.0, 7.0],
        &[3.0, 4.0, 2.0, 3.0, 0.0],
        &[2.0, 1.0, 1.0, -1.0, 8.0],
        &[8.0, 0.0, 0.0, 4.0, 9.0],
    ])
}

pub fn unstable_5x5_stabilized() -> Matrix {
    mat(&[
        &[0.0, 0.0, 0.0, 0.0, 0.0],
        &[7.0, -7.0, 6.0, 5.0, 0.0],
        &[3.0, 0.0, -4.0, 3.0, 0.0],
        &[2.0, 0.0, 0.0, -1.0, 0.0],
        &[8.0, 0.0, 0.0, 4.0, -1.0],
    ])
}

pub fn oscillating_3x3() -> MetzlerMatrix {
    metz(&[&[-2.0, 2.0, 0.0], &[0.0, -6.0, 5.0], &[2.0, 2.0, -9.0]])
}

pub fn schur_2x2() -> Matrix {
    mat(&[&[1.0, 9.0], &[6.0, 0.0]])
}

pub fn signs(rows: &[&str]) -> SignMatrix {
    SignMatrix::parse_rows(rows).unwrap()
}

pub fn sign_example_one() -> SignMatrix {
    signs(&["0 + + + 0", "+ + 0 + +", "+ + 0 0 +", "+ 0 0 - +", "0 0 + + +"])
}

pub fn sign_example_one_solution() -> SignMatrix {
    signs(&["0 0 0 + 0", "+ - 0 + +", "+ 0 - 0 +", "0 0 0 - 0", "0 0 0 + 0"])
}

pub fn sign_example_two() -> SignMatrix {
    signs(&["- + 0 0 +", "+ 0 0 + +", "+ 0 0 + 0", "+ + + 0 0", "0 + + 0 -"])
}

pub fn sign_example_two_solution() -> SignMatrix {
    signs(&["- 0 0 0 0", "+ - 0 0 +", "+ 0 - 0 0", "+ 0 + - 0", "0 0 0 0 -"])
}

pub fn sign_example_two_radius_one() -> SignMatrix {
    signs(&["- 0 0 0 +", "+ 0 0 0 +", "+ 0 0 0 0", "+ + + - 0", "0 0 + 0 -"])
}

pub fn lss_modes() -> Vec<MetzlerMatrix> {
    vec![
        metz(&[
            &[-8.0, 0.0, 0.0, 0.0],
            &[0.0, -4.0, 2.0, 0.0],
            &[7.0, 0.0, -8.0, 3.0],
            &[0.0, 1.0, 9.0, -9.0],
        ]),
        metz(&[
            &[-5.0, 0.0, 0.0, 2.0],
            &[0.0, -3.0, 0.0, 0.0],
            &[2.0, 2.0, -1.0, 3.0],
            &[0.0, 5.0, 0.0, -8.0],
        ]),
        metz(&[
            &[-9.0, 0.0, 2.0, 0.0],
            &[0.0, -9.0, 0.0, 2.0],
            &[0.0, 7.0, -2.0, 3.0],
            &[0.0, 0.0, 0.0, -4.0],
        ]),
    ]
}

pub fn lss_cut_modes() -> Vec<MetzlerMatrix> {
    vec![
        metz(&[
            &[-8.0, 0.0, 0.0, 0.0],
            &[0.0, -4.0, 0.0, 0.0],
            &[7.0, 0.0, -8.0, 0.0],
            &[0.0, 1.0, 0.0, -9.0],
        ]),
        metz(&[
            &[-5.0, 0.0, 0.0, 2.0],
            &[0.0, -3.0, 0.0, 0.0],
            &[2.0, 2.0, -1.0, 0.0],
            &[0.0, 5.0, 0.0, -8.0],
        ]),
        metz(&[
            &[-9.0, 0.0, 0.0, 0.0],
            &[0.0, -9.0, 0.0, 2.0],
            &[0.0, 7.0, -2.0, 0.0],
            &[0.0, 0.0, 0.0, -4.0],
        ]),
    ]
}

pub fn lss_sum() -> SignMatrix {
    signs(&["- 0 + +", "0 - + +", "+ + - +", "0 + + -"])
}

pub fn lss_target() -> SignMatrix {
    signs(&["- 0 0 +", "0 - 0 +", "+ + - 0", "0 + 0 -"])
}
