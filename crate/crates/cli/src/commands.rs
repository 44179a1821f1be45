use std::fmt::Write as _;
use std::path::Path;

use metzler::io::{
    format_family, format_matrix, format_number, format_sign_matrix, format_system, parse_family, parse_matrix,
    parse_sign_matrix, parse_system,
};
use metzler::{
    closest_stable_inf_hurwitz, closest_stable_inf_schur, closest_stable_max, closest_stable_sign,
    closest_unstable_inf_hurwitz, closest_unstable_inf_schur, closest_unstable_max, hull_max_abscissa,
    is_sign_stable, metzlerize, optimize_with_irreducibility_patch, selected_leading_eigenpair, selective_greedy,
    spectral_abscissa, stabilize_2d_lss, stabilize_lss_by_signs, Certification, Direction, GreedyOptions,
    InfDestabilization, InfStabilization, Lss2dOptions, Matrix, MetzlerMatrix, PatchOptions, SignMatrix,
    SpectralConfig, StabilizeOptions,
};
use serde_json::{json, Map, Value};

use crate::args::{BenchArgs, Cli, Command, DirectionArg, GenArgs, Global, NormArg};
use crate::bench::{run_bench, to_csv, to_table, BenchConfig};
use crate::generate::{generate_family, FamilySpec};

/// Version of the `--json` object layout.
pub const SCHEMA_VERSION: u32 = 1;

/// What a command writes and how the process should exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

#[derive(Debug)]
enum Failure {
    Lib(metzler::Error),
    Io(String),
    Usage(String),
}

impl From<metzler::Error> for Failure {
    fn from(e: metzler::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Lib(e) if e.is_budget() => 3,
            Failure::Lib(
                metzler::Error::Precondition(_) | metzler::Error::NotMetzler { .. } | metzler::Error::NotNonNegative { .. },
            ) => 2,
            Failure::Usage(_) => 2,
            Failure::Lib(_) | Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(m) | Failure::Usage(m) => m.clone(),
        }
    }
}

// Scalar header fields, an optional text body, and the matching JSON payload.
struct Report {
    command: &'static str,
    fields: Vec<(&'static str, Value)>,
    body: String,
    payload: Vec<(&'static str, Value)>,
    summary: String,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Report {
            command,
            fields: Vec::new(),
            body: String::new(),
            payload: Vec::new(),
            summary: String::new(),
        }
    }

    fn field(mut self, key: &'static str, v: impl Into<Value>) -> Self {
        self.fields.push((key, v.into()));
        self
    }

    fn matrix(mut self, m: &Matrix) -> Self {
        self.body = format_matrix(m);
        self.payload.push(("matrix", json!(m.to_rows())));
        self
    }

    fn summary(mut self, s: String) -> Self {
        self.summary = s;
        self
    }

    fn render(self, as_json: bool) -> (String, String) {
        let stdout = if as_json {
            let mut obj = Map::new();
            obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
            obj.insert("command".into(), json!(self.command));
            for (k, v) in self.fields.into_iter().chain(self.payload) {
                obj.insert(k.into(), v);
            }
            let mut s = serde_json::to_string(&Value::Object(obj)).expect("JSON values serialize");
            s.push('\n');
            s
        } else {
            let mut s = String::new();
            for (k, v) in &self.fields {
                let _ = writeln!(s, "# {k} {}", text_value(v));
            }
            s.push_str(&self.body);
            s
        };
        let mut stderr = self.summary;
        if !stderr.is_empty() && !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        (stdout, stderr)
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.to_string(),
            None => format_number(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(text_value).collect::<Vec<_>>().join(" "),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

// NaN and infinities have no JSON form.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| Failure::Io(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }
}

fn spectral(g: &Global) -> SpectralConfig {
    let d = SpectralConfig::default();
    SpectralConfig {
        tol: g.tol,
        max_iter: g.max_iter.unwrap_or(d.max_iter),
        ..d
    }
}

fn stabilize_options(g: &Global) -> StabilizeOptions {
    let d = StabilizeOptions::default();
    StabilizeOptions {
        spectral: spectral(g),
        greedy_max_iter: g.max_iter.unwrap_or(d.greedy_max_iter),
        ..d
    }
}

fn greedy_options(g: &Global, direction: Direction) -> GreedyOptions {
    let mut opts = GreedyOptions::new(direction);
    opts.spectral = spectral(g);
    if let Some(n) = g.max_iter {
        opts.max_iter = n;
    }
    opts
}

// Inf-norm commands also serve the one-norm by working on the transpose.
fn transposed(g: &Global, cmd: &str) -> Result<bool, Failure> {
    match g.norm {
        None | Some(NormArg::Inf) => Ok(false),
        Some(NormArg::One) => Ok(true),
        Some(NormArg::Max) => Err(Failure::Usage(format!("{cmd} works in the inf- or one-norm; use the -max variant"))),
    }
}

fn max_norm_only(g: &Global, cmd: &str) -> Result<(), Failure> {
    match g.norm {
        None | Some(NormArg::Max) => Ok(()),
        Some(_) => Err(Failure::Usage(format!("{cmd} works in the max-norm only; use the -inf variant"))),
    }
}

fn orient(m: Matrix, t: bool) -> Matrix {
    if t {
        m.transpose()
    } else {
        m
    }
}

fn read_metzler(path: &Path) -> Result<MetzlerMatrix, Failure> {
    Ok(MetzlerMatrix::new(parse_matrix(&read_input(path)?)?)?)
}

// Stabilization distances are unchanged by dropping negative off-diagonal entries.
fn read_for_stabilization(path: &Path, notes: &mut String) -> Result<MetzlerMatrix, Failure> {
    let a = parse_matrix(&read_input(path)?)?;
    if a.is_metzler() {
        return Ok(MetzlerMatrix::new(a)?);
    }
    notes.push_str("note: negative off-diagonal entries replaced by zero\n");
    Ok(metzlerize(&a))
}

/// Runs one parsed command line.
pub fn execute(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok((stdout, stderr)) => Outcome { stdout, stderr, code: 0 },
        Err(f) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {}\n", f.message()),
            code: f.code(),
        },
    }
}

fn dispatch(cli: &Cli) -> Result<(String, String), Failure> {
    let g = &cli.global;
    let cfg = spectral(g);
    let mut notes = String::new();
    let report = match &cli.command {
        Command::Eig { input } => {
            let a = read_metzler(input)?;
            let p = selected_leading_eigenpair(&a, &cfg)?;
            let mut r = Report::new("eig")
                .field("eta", num(p.value))
                .field("iterations", p.iterations)
                .field("residual", num(p.residual))
                .summary(format!("eta = {}", format_number(p.value)));
            r.body = format!("{}\n", p.vector.iter().map(|&x| format_number(x)).collect::<Vec<_>>().join(" "));
            r.payload.push(("vector", nums(&p.vector)));
            r
        }
        Command::StabMax { input } => {
            max_norm_only(g, "stab-max")?;
            let a = read_for_stabilization(input, &mut notes)?;
            let s = closest_stable_max(&a, &cfg)?;
            let eta = spectral_abscissa(&s.matrix, &cfg)?;
            Report::new("stab-max")
                .field("tau_star", num(s.tau))
                .field("iterations", 0)
                .field("residual", num(eta.abs()))
                .field("needs_verification", s.needs_verification)
                .matrix(s.matrix.as_matrix())
                .summary(format!("closest stable matrix at max-norm distance {}", format_number(s.tau)))
        }
        Command::DestabMax { input } => {
            max_norm_only(g, "destab-max")?;
            let a = read_metzler(input)?;
            let s = closest_unstable_max(&a, &cfg)?;
            let eta = spectral_abscissa(&s.matrix, &cfg)?;
            Report::new("destab-max")
                .field("tau_star", num(s.tau))
                .field("iterations", 0)
                .field("residual", num(eta.abs()))
                .matrix(s.matrix.as_matrix())
                .summary(format!("closest unstable matrix at max-norm distance {}", format_number(s.tau)))
        }
        Command::StabInf { input } => {
            let t = transposed(g, "stab-inf")?;
            let a = read_for_stabilization(input, &mut notes)?;
            let a = if t { a.transpose() } else { a };
            let s = closest_stable_inf_hurwitz(&a, &stabilize_options(g))?;
            stabilization_report("stab-inf", s, t)
        }
        Command::DestabInf { input } => {
            let t = transposed(g, "destab-inf")?;
            let a = read_metzler(input)?;
            let a = if t { a.transpose() } else { a };
            let s = closest_unstable_inf_hurwitz(&a, &cfg)?;
            let eta = spectral_abscissa(&MetzlerMatrix::new(s.matrix.clone())?, &cfg)?;
            destabilization_report("destab-inf", s, eta.abs(), t)
        }
        Command::StabSchur { input, allow_metzler } => {
            let t = transposed(g, "stab-schur")?;
            let a = orient(parse_matrix(&read_input(input)?)?, t);
            let s = closest_stable_inf_schur(&a, *allow_metzler, &stabilize_options(g))?;
            stabilization_report("stab-schur", s, t)
        }
        Command::DestabSchur { input, level } => {
            let t = transposed(g, "destab-schur")?;
            let a = orient(parse_matrix(&read_input(input)?)?, t);
            let s = closest_unstable_inf_schur(&a, *level, &cfg)?;
            let rho = metzler::spectral_radius(&s.matrix, &cfg)?;
            destabilization_report("destab-schur", s, (rho - level).abs(), t)
        }
        Command::OptFamily { input, direction } => {
            let family = parse_family(&read_input(input)?)?;
            let dir = match direction {
                DirectionArg::Max => Direction::Max,
                DirectionArg::Min => Direction::Min,
            };
            let opts = greedy_options(g, dir);
            let (out, cert) = match dir {
                Direction::Max => {
                    let p = optimize_with_irreducibility_patch(&family, &opts, &PatchOptions::default())?;
                    (p.outcome, Some(p.certification))
                }
                Direction::Min => (selective_greedy(&family, None, &opts)?, None),
            };
            let certification = match cert {
                None => "none".to_string(),
                Some(Certification::Direct) => "direct".into(),
                Some(Certification::Patched { alpha, beta }) => {
                    format!("patched alpha={} beta={}", format_number(alpha), format_number(beta))
                }
                Some(Certification::Frobenius { blocks }) => {
                    let parts: Vec<String> = blocks
                        .iter()
                        .map(|b| b.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","))
                        .collect();
                    format!("frobenius {}", parts.join(" "))
                }
            };
            let rows: Vec<usize> = out.row_choices.iter().map(|&c| c + 1).collect();
            Report::new("opt-family")
                .field("direction", dir.to_string())
                .field("eta", num(out.abscissa))
                .field("iterations", out.iterations)
                .field("rows", rows)
                .field("certification", certification)
                .field("reducible", out.reducibility_flag)
                .matrix(out.matrix.as_matrix())
                .summary(format!(
                    "{} abscissa {} after {} iterations",
                    dir,
                    format_number(out.abscissa),
                    out.iterations
                ))
        }
        Command::SignStab { input } => {
            let m = parse_sign_matrix(&read_input(input)?)?;
            let s = closest_stable_sign(&m, &cfg)?;
            let mut r = Report::new("sign-stab")
                .field("k_star", s.k)
                .field("eta", num(s.eta))
                .field("strict", s.strict)
                .summary(format!("sign-stable pattern at distance {}", s.k));
            r.body = format_sign_matrix(&s.matrix);
            r.payload.push(("signs", sign_rows(&s.matrix)));
            r
        }
        Command::LssCheck { input, resolution } => {
            let sys = parse_system(&read_input(input)?)?;
            let mode_eta: Vec<f64> = sys
                .modes()
                .iter()
                .map(|m| spectral_abscissa(m, &cfg))
                .collect::<metzler::Result<_>>()?;
            let hull = hull_max_abscissa(&sys, *resolution, &cfg)?;
            let signs: Vec<SignMatrix> = sys.modes().iter().map(|m| SignMatrix::of(m.as_matrix())).collect();
            let negative_diagonals = sys.modes().iter().all(|m| m.diag().iter().all(|&x| x < 0.0));
            let sign_certificate = match SignMatrix::sum(&signs) {
                Ok(sum) if negative_diagonals => is_sign_stable(&sum, true, &cfg)?,
                _ => false,
            };
            let verdict = if sign_certificate || (sys.dim() == 2 && hull.eta < 0.0) {
                "stable"
            } else if hull.eta > cfg.stability_tol {
                "unstable"
            } else {
                "inconclusive"
            };
            Report::new("lss-check")
                .field("modes", sys.len())
                .field("mode_eta", nums(&mode_eta))
                .field("hull_eta", num(hull.eta))
                .field("hull_weights", nums(&hull.weights))
                .field("sign_certificate", sign_certificate)
                .field("verdict", verdict)
                .summary(format!("switching system: {verdict}"))
        }
        Command::LssStab2d { input, resolution } => {
            let sys = parse_system(&read_input(input)?)?;
            let opts = Lss2dOptions {
                resolution: *resolution,
                stabilize: stabilize_options(g),
                ..Lss2dOptions::default()
            };
            let r = stabilize_2d_lss(&sys, &opts)?;
            let mut rep = Report::new("lss-stab-2d")
                .field("rounds", r.rounds)
                .field("hull_eta", num(r.hull.eta))
                .field("hull_weights", nums(&r.hull.weights))
                .field("distances", nums(&r.distances))
                .summary(format!("hull abscissa {} after {} rounds", format_number(r.hull.eta), r.rounds));
            rep.body = format_system(&r.system);
            rep.payload.push((
                "modes",
                Value::Array(r.system.modes().iter().map(|m| json!(m.to_rows())).collect()),
            ));
            rep
        }
        Command::LssStabSign { input } => {
            let sys = parse_system(&read_input(input)?)?;
            let r = stabilize_lss_by_signs(&sys, &cfg)?;
            let mut rep = Report::new("lss-stab-sign")
                .field("sum_eta", num(r.sum_eta))
                .field("k_star", r.k_star)
                .field("mode_distances", r.mode_distances.clone())
                .field("eta", num(r.eta))
                .field("strict", r.strict)
                .summary(format!(
                    "sum pattern moved by {}, modes cut by {:?}",
                    r.k_star, r.mode_distances
                ));
            rep.body = format_system(&r.system);
            rep.payload.push(("target", sign_rows(&r.target)));
            rep.payload.push((
                "modes",
                Value::Array(r.system.modes().iter().map(|m| json!(m.to_rows())).collect()),
            ));
            rep
        }
        Command::Gen(args) => gen_report(args, g)?,
        Command::Bench(args) => return bench(args, g),
    };
    let (stdout, stderr) = report.render(g.json);
    Ok((stdout, notes + &stderr))
}

fn sign_rows(m: &SignMatrix) -> Value {
    Value::Array(
        (0..m.dim())
            .map(|i| json!(m.row(i).iter().map(|s| s.symbol().to_string()).collect::<Vec<_>>().join(" ")))
            .collect(),
    )
}

fn stabilization_report(command: &'static str, s: InfStabilization, t: bool) -> Report {
    let probes = s.probes.len();
    Report::new(command)
        .field("tau_star", num(s.tau))
        .field("iterations", s.iterations)
        .field("residual", num(s.residual))
        .field("probes", probes)
        .field("bracket_stop", s.bracket_stop)
        .matrix(&orient(s.matrix, t))
        .summary(format!(
            "closest stable matrix at distance {} ({} probes)",
            format_number(s.tau),
            probes
        ))
}

fn destabilization_report(command: &'static str, s: InfDestabilization, residual: f64, t: bool) -> Report {
    // Under transposition the raised column becomes a raised row.
    let key = if t { "row" } else { "column" };
    Report::new(command)
        .field("tau_star", num(s.tau))
        .field("iterations", 0)
        .field("residual", num(residual))
        .field(key, s.column + 1)
        .field("component", num(s.component))
        .matrix(&orient(s.matrix, t))
        .summary(format!(
            "closest unstable matrix at distance {}, {key} {} raised",
            format_number(s.tau),
            s.column + 1
        ))
}

fn density(v: &[u32]) -> (u32, u32) {
    (v[0], v[1])
}

fn gen_report(args: &GenArgs, g: &Global) -> Result<Report, Failure> {
    let spec = FamilySpec {
        dim: args.dim,
        rows: args.rows,
        density: density(&args.density),
        kind: args.kind,
    };
    spec.validate().map_err(Failure::Usage)?;
    let f = generate_family(&spec, g.seed)?;
    let mut r = Report::new("gen")
        .field("dim", args.dim)
        .field("rows", args.rows)
        .field("kind", args.kind.name())
        .field("seed", g.seed);
    r.body = format_family(&f);
    r.payload.push((
        "family",
        Value::Array(f.sets().iter().map(|s| json!(s.rows())).collect()),
    ));
    Ok(r)
}

fn bench(args: &BenchArgs, g: &Global) -> Result<(String, String), Failure> {
    let cfg = BenchConfig {
        dims: args.dims.clone(),
        rows: args.rows.clone(),
        density: density(&args.density),
        kind: args.kind,
        direction: match args.direction {
            DirectionArg::Max => Direction::Max,
            DirectionArg::Min => Direction::Min,
        },
        trials: args.trials,
        seed: g.seed,
        spectral: spectral(g),
    };
    for &dim in &cfg.dims {
        FamilySpec {
            dim,
            rows: cfg.rows.first().copied().unwrap_or(1),
            density: cfg.density,
            kind: cfg.kind,
        }
        .validate()
        .map_err(Failure::Usage)?;
    }
    let cells = run_bench(&cfg)?;
    let csv = to_csv(&cells);
    let stdout = if g.json {
        let v = json!({ "schema_version": SCHEMA_VERSION, "command": "bench", "cells": cells });
        serde_json::to_string(&v).expect("JSON values serialize") + "\n"
    } else {
        let mut s = to_table(&cells);
        if args.csv.is_none() {
            s.push('\n');
            s.push_str(&csv);
        }
        s
    };
    if let Some(path) = &args.csv {
        std::fs::write(path, &csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok((stdout, format!("{} cells\n", cells.len())))
}
