//! Iteration-count experiments for the selective greedy method.

use std::fmt::Write as _;
use std::time::Instant;

use metzler::{selective_greedy, Direction, GreedyOptions, Result, SpectralConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::generate::{generate_family, FamilyKind, FamilySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub rows: Vec<usize>,
    pub density: (u32, u32),
    pub kind: FamilyKind,
    pub direction: Direction,
    pub trials: usize,
    pub seed: u64,
    pub spectral: SpectralConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub dim: usize,
    pub rows: usize,
    pub density_lo: u32,
    pub density_hi: u32,
    pub kind: &'static str,
    pub direction: &'static str,
    pub trials: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub mean_ms: f64,
    pub mean_eta: f64,
}

/// Seed of one trial, a fixed function of the master seed and the trial's position.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    // splitmix64 finalizer over the packed coordinates
    let mut z = master ^ ((cell as u64) << 32 | trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Trial {
    iterations: usize,
    ms: f64,
    eta: f64,
}

/// Runs every `(dim, rows)` cell; trials within a cell run on the rayon pool.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    let mut opts = GreedyOptions::new(cfg.direction);
    opts.spectral = cfg.spectral;
    for &dim in &cfg.dims {
        for &rows in &cfg.rows {
            let index = cells.len();
            let spec = FamilySpec {
                dim,
                rows,
                density: cfg.density,
                kind: cfg.kind,
            };
            let trials: Vec<Trial> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let family = generate_family(&spec, trial_seed(cfg.seed, index, t))?;
                    let start = Instant::now();
                    let out = selective_greedy(&family, None, &opts)?;
                    Ok(Trial {
                        iterations: out.iterations,
                        ms: start.elapsed().as_secs_f64() * 1e3,
                        eta: out.abscissa,
                    })
                })
                .collect::<Result<_>>()?;
            let n = trials.len().max(1) as f64;
            cells.push(Cell {
                dim,
                rows,
                density_lo: cfg.density.0,
                density_hi: cfg.density.1,
                kind: cfg.kind.name(),
                direction: match cfg.direction {
                    Direction::Max => "max",
                    Direction::Min => "min",
                },
                trials: trials.len(),
                mean_iterations: trials.iter().map(|t| t.iterations as f64).sum::<f64>() / n,
                max_iterations: trials.iter().map(|t| t.iterations).max().unwrap_or(0),
                mean_ms: trials.iter().map(|t| t.ms).sum::<f64>() / n,
                mean_eta: trials.iter().map(|t| t.eta).sum::<f64>() / n,
            });
        }
    }
    Ok(cells)
}

pub fn to_csv(cells: &[Cell]) -> String {
    let mut out =
        String::from("dim,rows,density_lo,density_hi,kind,direction,trials,mean_iterations,max_iterations,mean_ms,mean_eta\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.3},{}",
            c.dim,
            c.rows,
            c.density_lo,
            c.density_hi,
            c.kind,
            c.direction,
            c.trials,
            c.mean_iterations,
            c.max_iterations,
            c.mean_ms,
            c.mean_eta
        );
    }
    out
}

pub fn to_table(cells: &[Cell]) -> String {
    let mut out = format!(
        "{:>6} {:>6} {:>9} {:>7} {:>4} {:>7} {:>10} {:>8} {:>11}\n",
        "d", "N", "density", "kind", "dir", "trials", "mean iter", "max iter", "mean ms"
    );
    for c in cells {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>9} {:>7} {:>4} {:>7} {:>10.2} {:>8} {:>11.3}",
            c.dim,
            c.rows,
            format!("{}-{}%", c.density_lo, c.density_hi),
            c.kind,
            c.direction,
            c.trials,
            c.mean_iterations,
            c.max_iterations,
            c.mean_ms
        );
    }
    out
}
