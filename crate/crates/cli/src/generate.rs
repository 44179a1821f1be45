//! Random product families for experiments.

use clap::ValueEnum;
use metzler::{ProductFamily, Result, UncertaintySet};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    /// Every off-diagonal entry positive, density ignored.
    Full,
    /// Metzler rows with the requested density; the diagonal may be negative.
    Sparse,
    /// Non-negative rows with the requested density.
    Nonneg,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Full => "full",
            FamilyKind::Sparse => "sparse",
            FamilyKind::Nonneg => "nonneg",
        }
    }
}

/// Specification of a random family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub dim: usize,
    pub rows: usize,
    /// Percent range `[lo, hi]` from which each set draws its density.
    pub density: (u32, u32),
    pub kind: FamilyKind,
}

impl FamilySpec {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let (lo, hi) = self.density;
        if self.dim == 0 || self.rows == 0 {
            return Err("dimension and set size must be positive".into());
        }
        if !(1 <= lo && lo <= hi && hi <= 100) {
            return Err(format!("density range must satisfy 1 <= lo <= hi <= 100, got {lo} {hi}"));
        }
        Ok(())
    }

    /// Bounds on the number of non-zero entries of a generated row.
    pub fn nonzero_bounds(&self) -> (usize, usize) {
        let d = self.dim as f64;
        let count = |p: u32| ((p as f64 / 100.0 * d).round() as usize).clamp(1, self.dim);
        (count(self.density.0), count(self.density.1))
    }
}

/// Draws a product family; identical seeds give identical families.
///
/// Each set `F_i` draws its density `gamma_i` uniformly from the range and
/// every row of `F_i` then has `round(gamma_i d / 100)` non-zero entries at
/// random positions. Off-diagonal values are uniform in `(0, 1]`; diagonal
/// values are uniform in `[-1, 1)` (or `(0, 1]` for non-negative families).
pub fn generate_family(spec: &FamilySpec, seed: u64) -> Result<ProductFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with(spec, &mut rng)
}

pub fn generate_with(spec: &FamilySpec, rng: &mut ChaCha8Rng) -> Result<ProductFamily> {
    if let Err(e) = spec.validate() {
        return Err(metzler::Error::Precondition(e));
    }
    let d = spec.dim;
    let positive = |rng: &mut ChaCha8Rng| 1.0 - rng.random::<f64>();
    let diagonal = |rng: &mut ChaCha8Rng| match spec.kind {
        FamilyKind::Nonneg => 1.0 - rng.random::<f64>(),
        _ => rng.random_range(-1.0..1.0),
    };

    let mut sets = Vec::with_capacity(d);
    for i in 0..d {
        let rows = match spec.kind {
            FamilyKind::Full => (0..spec.rows)
                .map(|_| (0..d).map(|j| if j == i { diagonal(rng) } else { positive(rng) }).collect())
                .collect(),
            FamilyKind::Sparse | FamilyKind::Nonneg => {
                let gamma = rng.random_range(spec.density.0 as f64..=spec.density.1 as f64);
                let k = ((gamma / 100.0 * d as f64).round() as usize).clamp(1, d);
                (0..spec.rows)
                    .map(|_| {
                        let mut row = vec![0.0; d];
                        for j in index::sample(rng, d, k) {
                            row[j] = if j == i { diagonal(rng) } else { positive(rng) };
                        }
                        row
                    })
                    .collect()
            }
        };
        sets.push(UncertaintySet::new(i, rows)?);
    }
    ProductFamily::new(sets)
}
