//! Product families of Metzler matrices and the selective greedy method.
//!
//! A product family is the set of all matrices whose `i`-th row is taken from
//! the uncertainty set `F_i`. The greedy method alternates between computing
//! the selected leading eigenvector `v` of the current matrix and replacing
//! every row by the one that extremises `<row, v>` over its uncertainty set.
//! Rows are only replaced on strict improvement, which together with the
//! selected eigenvector rules out cycling.

use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, MetzlerMatrix};
use crate::perron::{selected_leading_eigenpair, support, EigenPair, SpectralConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    /// True when `candidate` beats `incumbent` by more than `tol`.
    #[inline]
    pub fn improves(self, candidate: f64, incumbent: f64, tol: f64) -> bool {
        let margin = tol * incumbent.abs().max(1.0);
        match self {
            Direction::Max => candidate > incumbent + margin,
            Direction::Min => candidate < incumbent - margin,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Max => "max",
            Direction::Min => "min",
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Finite uncertainty set for one row of a product family.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintySet {
    row_index: usize,
    rows: Vec<Vec<f64>>,
}

impl UncertaintySet {
    /// Every row must have non-negative entries off position `row_index`.
    pub fn new(row_index: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Structural(format!("uncertainty set {row_index} is empty")));
        };
        let dim = first.len();
        if row_index >= dim {
            return Err(Error::Structural(format!(
                "row index {row_index} out of range for vectors of length {dim}"
            )));
        }
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: row_index, col: j });
                }
                if j != row_index && x < 0.0 {
                    return Err(Error::NotMetzler {
                        row: row_index,
                        col: j,
                        value: x,
                    });
                }
            }
        }
        Ok(UncertaintySet { row_index, rows })
    }

    pub fn row_index(&self) -> usize {
        self.row_index
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }
}

/// Result of optimising one row against an eigenvector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowPick {
    pub index: usize,
    pub score: f64,
}

/// Extreme inner product `<row, v>` over a finite uncertainty set.
///
/// Ties (within `tie_tol`) keep the incumbent when it is among the optima,
/// otherwise the lowest list index wins.
pub fn row_optimize(
    set: &UncertaintySet,
    v: &[f64],
    direction: Direction,
    incumbent: Option<usize>,
    tie_tol: f64,
) -> Result<RowPick> {
    if set.is_empty() {
        return Err(Error::Structural("empty uncertainty set".into()));
    }
    if v.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: v.len(),
        });
    }
    let mut best = RowPick {
        index: 0,
        score: dot(&set.rows[0], v),
    };
    for (k, row) in set.rows.iter().enumerate().skip(1) {
        let s = dot(row, v);
        if direction.improves(s, best.score, tie_tol) {
            best = RowPick { index: k, score: s };
        }
    }
    if let Some(inc) = incumbent {
        let s = dot(&set.rows[inc], v);
        if !direction.improves(best.score, s, tie_tol) {
            return Ok(RowPick { index: inc, score: s });
        }
    }
    Ok(best)
}

/// Product family `F_1 x ... x F_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductFamily {
    dim: usize,
    sets: Vec<UncertaintySet>,
}

impl ProductFamily {
    pub fn new(sets: Vec<UncertaintySet>) -> Result<Self> {
        let dim = sets.len();
        if dim == 0 {
            return Err(Error::Structural("product family needs at least one row set".into()));
        }
        for (i, set) in sets.iter().enumerate() {
            if set.row_index != i {
                return Err(Error::Structural(format!(
                    "uncertainty set at position {i} is labelled for row {}",
                    set.row_index
                )));
            }
            if set.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: set.dim(),
                });
            }
        }
        Ok(ProductFamily { dim, sets })
    }

    /// Family from raw row lists, `sets[i]` being the candidates for row `i`.
    pub fn from_rows(sets: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let sets = sets
            .into_iter()
            .enumerate()
            .map(|(i, rows)| UncertaintySet::new(i, rows))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sets(&self) -> &[UncertaintySet] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &UncertaintySet {
        &self.sets[i]
    }

    /// Number of vertex matrices (saturating).
    pub fn vertex_count(&self) -> usize {
        self.sets.iter().fold(1usize, |n, s| n.saturating_mul(s.len()))
    }

    /// Assembles the member matrix for the given row choices.
    pub fn matrix(&self, choices: &[usize]) -> Result<MetzlerMatrix> {
        if choices.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: choices.len(),
            });
        }
        let mut data = Vec::with_capacity(self.dim * self.dim);
        for (set, &c) in self.sets.iter().zip(choices) {
            let row = set
                .rows
                .get(c)
                .ok_or_else(|| Error::Structural(format!("choice {c} out of range for row {}", set.row_index)))?;
            data.extend_from_slice(row);
        }
        MetzlerMatrix::new(Matrix::from_row_major(self.dim, data)?)
    }

    /// Restriction to the index block `idx` (rows and columns).
    pub fn restrict(&self, idx: &[usize]) -> ProductFamily {
        let sets = idx
            .iter()
            .enumerate()
            .map(|(local, &i)| UncertaintySet {
                row_index: local,
                rows: self.sets[i]
                    .rows
                    .iter()
                    .map(|r| idx.iter().map(|&j| r[j]).collect())
                    .collect(),
            })
            .collect();
        ProductFamily { dim: idx.len(), sets }
    }
}

/// Options for the selective greedy method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyOptions {
    pub direction: Direction,
    /// Relative tolerance on inner-product comparisons.
    pub tie_tol: f64,
    pub max_iter: usize,
    pub spectral: SpectralConfig,
}

impl GreedyOptions {
    pub fn new(direction: Direction) -> Self {
        GreedyOptions {
            direction,
            tie_tol: 1e-12,
            max_iter: 1_000,
            spectral: SpectralConfig::default(),
        }
    }
}

/// Row search space consumed by the greedy engine.
///
/// Finite uncertainty sets, l-infinity balls and sign-matrix balls all
/// implement this, so the same greedy loop drives every optimisation.
pub(crate) trait RowSearch {
    type Choice: Clone + PartialEq + fmt::Debug;

    fn dim(&self) -> usize;

    fn write_row(&self, i: usize, choice: &Self::Choice, out: &mut [f64]);

    /// Optimal choice for row `i` against `v`, or `None` to keep the incumbent.
    fn optimize(&self, i: usize, v: &[f64], incumbent: &Self::Choice, opts: &GreedyOptions) -> Option<Self::Choice>;
}

#[derive(Clone, Debug)]
pub(crate) struct GreedyRun<C> {
    pub choices: Vec<C>,
    pub matrix: MetzlerMatrix,
    pub eigen: EigenPair,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub stopped_early: bool,
}

/// Greedy loop; `stop` is checked on each iterate's eigenpair before rows are updated.
pub(crate) fn run_greedy<S: RowSearch>(
    search: &S,
    start: Vec<S::Choice>,
    opts: &GreedyOptions,
    mut stop: impl FnMut(&EigenPair) -> bool,
) -> Result<GreedyRun<S::Choice>> {
    let d = search.dim();
    let mut choices = start;
    let mut trace = Vec::new();
    let mut row = vec![0.0; d];
    let mut candidate_row = vec![0.0; d];

    for iteration in 1..=opts.max_iter {
        let matrix = assemble(search, &choices)?;
        let eigen = selected_leading_eigenpair(&matrix, &opts.spectral)?;
        trace.push(eigen.value);
        if stop(&eigen) {
            return Ok(GreedyRun {
                choices,
                matrix,
                eigen,
                iterations: iteration,
                trace,
                stopped_early: true,
            });
        }

        let mut changed = false;
        let mut next = choices.clone();
        for i in 0..d {
            let Some(cand) = search.optimize(i, &eigen.vector, &choices[i], opts) else {
                continue;
            };
            if cand == choices[i] {
                continue;
            }
            search.write_row(i, &choices[i], &mut row);
            search.write_row(i, &cand, &mut candidate_row);
            let current = dot(&row, &eigen.vector);
            let proposed = dot(&candidate_row, &eigen.vector);
            if opts.direction.improves(proposed, current, opts.tie_tol) {
                next[i] = cand;
                changed = true;
            }
        }
        if !changed {
            return Ok(GreedyRun {
                choices,
                matrix,
                eigen,
                iterations: iteration,
                trace,
                stopped_early: false,
            });
        }
        choices = next;
    }
    Err(Error::CycleSuspected {
        iterations: opts.max_iter,
        trace,
    })
}

fn assemble<S: RowSearch>(search: &S, choices: &[S::Choice]) -> Result<MetzlerMatrix> {
    let d = search.dim();
    let mut data = vec![0.0; d * d];
    for (i, c) in choices.iter().enumerate() {
        search.write_row(i, c, &mut data[i * d..(i + 1) * d]);
    }
    MetzlerMatrix::new(Matrix::from_row_major(d, data)?)
}

impl RowSearch for ProductFamily {
    type Choice = usize;

    fn dim(&self) -> usize {
        self.dim
    }

    fn write_row(&self, i: usize, choice: &usize, out: &mut [f64]) {
        out.copy_from_slice(&self.sets[i].rows[*choice]);
    }

    fn optimize(&self, i: usize, v: &[f64], incumbent: &usize, opts: &GreedyOptions) -> Option<usize> {
        row_optimize(&self.sets[i], v, opts.direction, Some(*incumbent), opts.tie_tol)
            .ok()
            .map(|p| p.index)
    }
}

/// Result of the selective greedy method on a product family.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub matrix: MetzlerMatrix,
    pub abscissa: f64,
    pub row_choices: Vec<usize>,
    pub iterations: usize,
    pub eigenvector: Vec<f64>,
    /// Maximisation ended on an eigenvector with zero entries; optimality is not certified.
    pub reducibility_flag: bool,
    /// Spectral abscissa of every iterate.
    pub trace: Vec<f64>,
}

/// Selective greedy method for maximising or minimising the spectral abscissa.
///
/// Starts from `start` when given, otherwise from the first row of every set.
pub fn selective_greedy(
    family: &ProductFamily,
    start: Option<&[usize]>,
    opts: &GreedyOptions,
) -> Result<GreedyOutcome> {
    let start = match start {
        Some(s) => {
            family.matrix(s)?;
            s.to_vec()
        }
        None => vec![0; family.dim],
    };
    let run = run_greedy(family, start, opts, |_| false)?;
    let reducible = opts.direction == Direction::Max && support(&run.eigen.vector).len() < family.dim;
    Ok(GreedyOutcome {
        abscissa: run.eigen.value,
        matrix: run.matrix,
        row_choices: run.choices,
        iterations: run.iterations,
        eigenvector: run.eigen.vector,
        reducibility_flag: reducible,
        trace: run.trace,
    })
}

/// Perturbation `H = alpha P - beta I` with `P` the cyclic permutation `i -> i+1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchOptions {
    pub alpha: f64,
    pub beta: f64,
    /// Halvings of `(alpha, beta)` tried before falling back to block splitting.
    pub retries: usize,
}

impl Default for PatchOptions {
    fn default() -> Self {
        PatchOptions {
            alpha: 1.0,
            beta: 0.0,
            retries: 3,
        }
    }
}

/// How a maximisation result was certified.
#[derive(Clone, Debug, PartialEq)]
pub enum Certification {
    /// The plain run ended on a positive eigenvector.
    Direct,
    /// The patched family produced a result using no patch rows.
    Patched { alpha: f64, beta: f64 },
    /// Optimised block by block over the strongly connected components.
    Frobenius { blocks: Vec<Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchedOutcome {
    pub outcome: GreedyOutcome,
    pub certification: Certification,
}

fn patch_family(family: &ProductFamily, alpha: f64, beta: f64) -> ProductFamily {
    let d = family.dim;
    let sets = family
        .sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut h = vec![0.0; d];
            h[(i + 1) % d] += alpha;
            h[i] -= beta;
            let mut rows = s.rows.clone();
            rows.push(h);
            UncertaintySet { row_index: i, rows }
        })
        .collect();
    ProductFamily { dim: d, sets }
}

/// Maximisation that resolves reducible terminations.
///
/// Runs the plain method first. If it ends on an eigenvector with zero
/// entries, each `F_i` is augmented with the `i`-th row of `H = alpha P - beta I`
/// (which makes the family irreducible); a result that uses no row of `H` is
/// optimal for the original family. Otherwise `(alpha, beta)` is halved up to
/// `retries` times, after which the family is split into its Frobenius blocks.
pub fn optimize_with_irreducibility_patch(
    family: &ProductFamily,
    opts: &GreedyOptions,
    patch: &PatchOptions,
) -> Result<PatchedOutcome> {
    if opts.direction != Direction::Max {
        return Err(Error::precondition("the irreducibility patch applies to maximisation only"));
    }
    if patch.alpha <= 0.0 || patch.beta < 0.0 {
        return Err(Error::precondition("patch requires alpha > 0 and beta >= 0"));
    }
    let plain = selective_greedy(family, None, opts)?;
    if !plain.reducibility_flag {
        return Ok(PatchedOutcome {
            outcome: plain,
            certification: Certification::Direct,
        });
    }
    let mut iterations = plain.iterations;
    let (mut alpha, mut beta) = (patch.alpha, patch.beta);
    for _ in 0..=patch.retries {
        let patched = patch_family(family, alpha, beta);
        let out = selective_greedy(&patched, None, opts)?;
        iterations += out.iterations;
        let uses_patch = out
            .row_choices
            .iter()
            .zip(&family.sets)
            .any(|(&c, s)| c >= s.len());
        if !uses_patch {
            let mut outcome = out;
            outcome.iterations = iterations;
            return Ok(PatchedOutcome {
                outcome,
                certification: Certification::Patched { alpha, beta },
            });
        }
        alpha /= 2.0;
        beta /= 2.0;
    }
    let mut res = maximize_by_blocks(family, opts)?;
    res.outcome.iterations += iterations;
    Ok(res)
}

/// Strongly connected components of the union sparsity graph.
#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusSplit {
    /// Index blocks in topological order of the condensation; indices ascending within a block.
    pub blocks: Vec<Vec<usize>>,
    pub families: Vec<ProductFamily>,
}

/// Splits a family along the strongly connected components of the graph
/// with an edge `i -> j` whenever some row of `F_i` has a non-zero entry `j != i`.
pub fn frobenius_blocks(family: &ProductFamily) -> FrobeniusSplit {
    let d = family.dim;
    let mut g = DiGraph::<(), ()>::with_capacity(d, 0);
    let nodes: Vec<_> = (0..d).map(|_| g.add_node(())).collect();
    for (i, set) in family.sets.iter().enumerate() {
        for j in (0..d).filter(|&j| j != i) {
            if set.rows.iter().any(|r| r[j] != 0.0) {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    // tarjan_scc yields components in reverse topological order.
    let mut blocks: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .rev()
        .map(|c| {
            let mut b: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            b.sort_unstable();
            b
        })
        .collect();
    blocks.shrink_to_fit();
    let families = blocks.iter().map(|b| family.restrict(b)).collect();
    FrobeniusSplit { blocks, families }
}

fn maximize_by_blocks(family: &ProductFamily, opts: &GreedyOptions) -> Result<PatchedOutcome> {
    let split = frobenius_blocks(family);
    let mut choices = vec![0usize; family.dim];
    let mut best = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut flagged = false;
    for (block, sub) in split.blocks.iter().zip(&split.families) {
        let mut out = selective_greedy(sub, None, opts)?;
        if out.reducibility_flag && sub.dim > 1 {
            // Blocks are irreducible families, so the patch cannot recurse further.
            let patched = patch_family(sub, 1.0, 0.0);
            let alt = selective_greedy(&patched, None, opts)?;
            let clean = alt.row_choices.iter().zip(&sub.sets).all(|(&c, s)| c < s.len());
            if clean && alt.abscissa >= out.abscissa {
                out = alt;
            }
            flagged |= out.reducibility_flag;
        }
        iterations += out.iterations;
        best = best.max(out.abscissa);
        for (&global, &c) in block.iter().zip(&out.row_choices) {
            choices[global] = c;
        }
    }
    let matrix = family.matrix(&choices)?;
    let eigen = selected_leading_eigenpair(&matrix, &opts.spectral)?;
    Ok(PatchedOutcome {
        outcome: GreedyOutcome {
            matrix,
            abscissa: best,
            row_choices: choices,
            iterations,
            eigenvector: eigen.vector,
            reducibility_flag: flagged,
            trace: vec![best],
        },
        certification: Certification::Frobenius { blocks: split.blocks },
    })
}
