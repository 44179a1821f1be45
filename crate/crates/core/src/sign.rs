//! Sign-matrices: stability tests and closest stable sign patterns.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::family::{run_greedy, Direction, GreedyOptions, RowSearch};
use crate::matrix::{Matrix, MetzlerMatrix};
use crate::perron::{spectral_abscissa, SpectralConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Zero,
    Plus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Plus
        } else if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Minus => -1,
            Sign::Zero => 0,
            Sign::Plus => 1,
        }
    }

    fn from_value(v: i8) -> Sign {
        match v.signum() {
            -1 => Sign::Minus,
            0 => Sign::Zero,
            _ => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Zero => '0',
            Sign::Plus => '+',
        }
    }

    pub fn parse(token: &str) -> Option<Sign> {
        match token {
            "-" => Some(Sign::Minus),
            "0" => Some(Sign::Zero),
            "+" => Some(Sign::Plus),
            _ => None,
        }
    }

    /// Sign of a sum of terms with these signs; `None` when `+` meets `-`.
    pub fn add(self, other: Sign) -> Option<Sign> {
        match (self, other) {
            (Sign::Zero, s) | (s, Sign::Zero) => Some(s),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }
}

/// Square matrix over `{-, 0, +}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignMatrix {
    dim: usize,
    entries: Vec<Sign>,
}

impl SignMatrix {
    pub fn new(dim: usize, entries: Vec<Sign>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: if dim == 0 { 0 } else { entries.len() / dim },
            });
        }
        Ok(SignMatrix { dim, entries })
    }

    pub fn from_rows<R: AsRef<[Sign]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        let mut entries = Vec::with_capacity(d * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::NotSquare { rows: d, cols: r.len() });
            }
            entries.extend_from_slice(r);
        }
        Self::new(d, entries)
    }

    /// Parses rows of `-`/`0`/`+` tokens separated by whitespace.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.split_whitespace()
                    .map(|t| {
                        Sign::parse(t).ok_or_else(|| Error::Parse {
                            line: i + 1,
                            message: format!("unknown sign token {t:?}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&parsed)
    }

    /// Sign pattern of a real matrix.
    pub fn of(a: &Matrix) -> Self {
        SignMatrix {
            dim: a.dim(),
            entries: a.as_slice().iter().map(|&x| Sign::of(x)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Sign {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Sign) {
        self.entries[i * self.dim + j] = s;
    }

    pub fn row(&self, i: usize) -> &[Sign] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    /// No `-` off the diagonal.
    pub fn is_metzler(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) != Sign::Minus))
    }

    pub fn check_metzler(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in (0..self.dim).filter(|&j| j != i) {
                if self.get(i, j) == Sign::Minus {
                    return Err(Error::NotMetzler {
                        row: i,
                        col: j,
                        value: -1.0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Entrywise sign sum; fails where `+` and `-` meet.
    pub fn sum(terms: &[SignMatrix]) -> Result<SignMatrix> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Structural("sign sum of no matrices".into()))?;
        let mut out = first.clone();
        for t in &terms[1..] {
            if t.dim != out.dim {
                return Err(Error::DimensionMismatch {
                    expected: out.dim,
                    found: t.dim,
                });
            }
            for (k, (o, &s)) in out.entries.iter_mut().zip(&t.entries).enumerate() {
                *o = o.add(s).ok_or_else(|| {
                    Error::Structural(format!(
                        "sign sum is indeterminate at ({}, {})",
                        k / out.dim,
                        k % out.dim
                    ))
                })?;
            }
        }
        Ok(out)
    }

    /// `||sgn(self) - sgn(other)||_inf`.
    pub fn distance(&self, other: &SignMatrix) -> usize {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(other.row(i))
                    .map(|(a, b)| (a.value() - b.value()).unsigned_abs() as usize)
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }

    /// `||sgn(self)||_inf`.
    pub fn sgn_norm(&self) -> usize {
        (0..self.dim)
            .map(|i| self.row(i).iter().filter(|s| **s != Sign::Zero).count())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let line: Vec<String> = self.row(i).iter().map(|s| s.symbol().to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignMatrix[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: String = self.row(i).iter().map(|s| s.symbol()).collect();
            write!(f, "{row}")?;
        }
        write!(f, "]")
    }
}

/// The real matrix with entries `-1, 0, 1` following the pattern.
pub fn sgn_realize(m: &SignMatrix) -> Result<MetzlerMatrix> {
    m.check_metzler()?;
    let data = m.entries.iter().map(|s| f64::from(s.value())).collect();
    MetzlerMatrix::new(Matrix::from_row_major(m.dim, data)?)
}

/// Hurwitz stability of every matrix with the given sign pattern.
///
/// Strict stability holds iff all diagonal entries are `-` and the graph of
/// the off-diagonal `+` entries is acyclic. Weak stability is
/// `eta(sgn M) <= stability_tol`.
pub fn is_sign_stable(m: &SignMatrix, strict: bool, cfg: &SpectralConfig) -> Result<bool> {
    m.check_metzler()?;
    if strict {
        Ok(strictly_stable_by_graph(m))
    } else {
        Ok(spectral_abscissa(&sgn_realize(m)?, cfg)? <= cfg.stability_tol)
    }
}

fn strictly_stable_by_graph(m: &SignMatrix) -> bool {
    let d = m.dim;
    if (0..d).any(|i| m.get(i, i) != Sign::Minus) {
        return false;
    }
    let mut g = DiGraph::<(), ()>::with_capacity(d, 0);
    let nodes: Vec<_> = (0..d).map(|_| g.add_node(())).collect();
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            if m.get(i, j) == Sign::Plus {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    !is_cyclic_directed(&g)
}

/// Stability report for a sign matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SignStable {
    pub matrix: SignMatrix,
    /// Distance `||sgn M - sgn M*||_inf`.
    pub k: usize,
    /// `eta(sgn M*)`.
    pub eta: f64,
    /// Negative diagonal and acyclic off-diagonal graph.
    pub strict: bool,
}

// Row search over the sign ball of radius `k`: each unit of budget either
// clears one off-diagonal `+` or lowers the diagonal one step towards `-`.
struct SignBall<'a> {
    center: &'a SignMatrix,
    k: usize,
}

impl SignBall<'_> {
    fn best_row(&self, i: usize, v: &[f64]) -> Vec<i8> {
        let row = self.center.row(i);
        let top = v.iter().fold(0.0f64, |m, &x| m.max(x));
        // Weights equal up to rounding noise count as ties; ties prefer the higher column.
        let key = |j: usize| -> i64 {
            if top > 0.0 {
                (v[j] / top * 1e9).round() as i64
            } else {
                0
            }
        };
        let mut units: Vec<usize> = Vec::new();
        for (j, s) in row.iter().enumerate() {
            let n = if j == i {
                (s.value() + 1) as usize
            } else {
                usize::from(*s == Sign::Plus)
            };
            if key(j) > 0 {
                units.extend(std::iter::repeat_n(j, n));
            }
        }
        units.sort_by(|&p, &q| key(q).cmp(&key(p)).then(q.cmp(&p)));
        let mut out: Vec<i8> = row.iter().map(|s| s.value()).collect();
        for &j in units.iter().take(self.k) {
            out[j] -= 1;
        }
        out
    }
}

impl RowSearch for SignBall<'_> {
    type Choice = Vec<i8>;

    fn dim(&self) -> usize {
        self.center.dim
    }

    fn write_row(&self, _i: usize, choice: &Vec<i8>, out: &mut [f64]) {
        for (o, &c) in out.iter_mut().zip(choice) {
            *o = f64::from(c);
        }
    }

    fn optimize(&self, i: usize, v: &[f64], _incumbent: &Vec<i8>, _opts: &GreedyOptions) -> Option<Vec<i8>> {
        Some(self.best_row(i, v))
    }
}

/// Minimal `eta(sgn X)` over Metzler sign matrices `X` with
/// `||sgn M - sgn X||_inf <= k`, by the selective greedy method.
pub fn sign_ball_minimize(m: &SignMatrix, k: usize, cfg: &SpectralConfig) -> Result<(SignMatrix, f64)> {
    m.check_metzler()?;
    let ball = SignBall { center: m, k };
    let start = (0..m.dim).map(|i| m.row(i).iter().map(|s| s.value()).collect()).collect();
    let opts = GreedyOptions {
        direction: Direction::Min,
        tie_tol: 1e-12,
        max_iter: 1_000,
        spectral: *cfg,
    };
    let run = run_greedy(&ball, start, &opts, |_| false)?;
    let entries = run.choices.iter().flatten().map(|&x| Sign::from_value(x)).collect();
    Ok((SignMatrix::new(m.dim, entries)?, run.eigen.value))
}

/// Closest sign matrix with `eta(sgn M*) <= 0`, by bisection on the ball radius.
///
/// The smallest ball abscissa is expected to be non-increasing in `k`; if a
/// probe contradicts this, the radius is found by a linear scan instead.
pub fn closest_stable_sign(m: &SignMatrix, cfg: &SpectralConfig) -> Result<SignStable> {
    m.check_metzler()?;
    let tol = cfg.stability_tol;
    let mut memo: BTreeMap<usize, (SignMatrix, f64)> = BTreeMap::new();
    let eval = |k: usize, memo: &mut BTreeMap<usize, (SignMatrix, f64)>| -> Result<f64> {
        if let Some((_, e)) = memo.get(&k) {
            return Ok(*e);
        }
        let r = sign_ball_minimize(m, k, cfg)?;
        let e = r.1;
        memo.insert(k, r);
        Ok(e)
    };

    let mut chosen = if eval(0, &mut memo)? <= tol {
        0
    } else {
        // The ball of radius ||sgn M||_inf + 1 contains -I.
        let top = m.sgn_norm() + 1;
        if eval(top, &mut memo)? > tol {
            return Err(Error::Structural("no stable sign matrix found in the largest ball".into()));
        }
        let (mut lo, mut hi) = (0usize, top);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if eval(mid, &mut memo)? <= tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let monotone = memo
        .iter()
        .zip(memo.iter().skip(1))
        .all(|((_, (_, a)), (_, (_, b)))| *b <= *a + tol);
    if !monotone {
        chosen = (0..).find_map(|k| match eval(k, &mut memo) {
            Ok(e) if e <= tol => Some(Ok(k)),
            Ok(_) => None,
            Err(err) => Some(Err(err)),
        })
        .expect("the scan stops at the first stable ball")?;
    }

    let (matrix, eta) = memo.remove(&chosen).expect("chosen radius was evaluated");
    let strict = strictly_stable_by_graph(&matrix);
    Ok(SignStable {
        k: m.distance(&matrix),
        matrix,
        eta,
        strict,
    })
}
