//! `gensol`: prolongation, range checks, sequence construction and verification
//! for PDE files.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gensol_core::constructor::{
    construct_sequence, enumerate_dense, enumerate_dense_in, ConstructOptions, DenseScheme, Manifest, SolutionSequence,
};
use gensol_core::demos::{lewy_operator, lewy_text};
use gensol_core::expr::{evaluate, parse_expression, rational_text, Expr, ParseContext, PointAssignment, Rational, Scalar};
use gensol_core::ideal::{check_vanishing, power_product_sequence, verify_solution, SingularityComplement, DEFAULT_ZERO_TOL};
use gensol_core::jet::{parse_pde, prolong, ArithmeticMode, PdeOperator};
use gensol_core::range::{range_condition_check, RangeReport, SolveOptions};
use gensol_core::report::Report;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gensol", version, about = "Jets, range conditions and explicit sequence solutions of PDE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the prolonged equations D^p G_j = 0 for |p| <= level, graded-lex by p.
    Prolong {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: u32,
    },
    /// Range check at the first points of a dense stream in the domain.
    Range {
        file: PathBuf,
        /// Highest prolongation level checked.
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        numeric: Numeric,
        /// Directory for range.json; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the stages s_0..s_N and write the manifest and grid samples.
    Construct {
        file: PathBuf,
        #[command(flatten)]
        stages: StageArgs,
        #[command(flatten)]
        numeric: Numeric,
        /// Directory for manifest.json and stage_<k>.csv; manifest on stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a manifest: every stage vanishes to its order at each of its points.
    Verify {
        manifest: PathBuf,
        #[command(flatten)]
        numeric: Numeric,
        /// Directory for verify.json; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in problems.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Lewy operator D_x + i D_y - 2(x + i y) D_z on (-1, 1)^3, split into real form:
    /// range check, construction and verification.
    Lewy {
        /// Real part of the right-hand side.
        #[arg(long, default_value = "x")]
        f: String,
        /// Imaginary part of the right-hand side.
        #[arg(long, default_value = "0")]
        f_im: String,
        /// Highest prolongation level for the range check.
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Points for the range check.
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[command(flatten)]
        stages: StageArgs,
        #[command(flatten)]
        numeric: Numeric,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// w_k(x) = prod_j (x - x_j)^(l_k) on (0, 1) over a dense prefix, checked for
    /// vanishing at every point.
    Example11 {
        #[command(flatten)]
        sampling: Sampling,
        /// Orders l_k: comma-separated list or "nu+1" (the default).
        #[arg(long, default_value = "nu+1")]
        schedule: String,
        #[command(flatten)]
        numeric: Numeric,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Sampling {
    /// Number of points.
    #[arg(long, default_value_t = 5)]
    points: usize,
    /// Dense point stream: dyadic or diagonal.
    #[arg(long, default_value = "dyadic")]
    scheme: DenseScheme,
    /// Keep only stream points where this expression in the space variables is positive.
    #[arg(long)]
    region: Option<String>,
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Last stage index N; stages 0..=N are built.
    #[arg(long, default_value_t = 3)]
    stages: usize,
    /// Orders l_0..l_N: comma-separated list, "nu" for l_k = k or "nu+1".
    #[arg(long, default_value = "nu")]
    schedule: String,
    /// Dense point stream: dyadic or diagonal.
    #[arg(long, default_value = "dyadic")]
    scheme: DenseScheme,
    /// Keep only stream points where this expression in the space variables is positive.
    #[arg(long)]
    region: Option<String>,
    /// Grid points per axis in the CSV samples (0: about 2000 points in total).
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Args, Clone)]
struct Numeric {
    /// Zero tolerance for floating point values.
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    tol: f64,
    /// exact (rational, falling back to floats where needed) or float.
    #[arg(long, default_value = "exact")]
    arith: ArithmeticMode,
}

/// Usage or input errors exit with 2, mathematical failures with 1.
enum Failure {
    Usage(String),
    Math(String),
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

type Run = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prolong { file, level } => cmd_prolong(&file, level),
        Command::Range { file, level, sampling, numeric, out } => {
            read_pde(&file).and_then(|op| cmd_range(&op, level, &sampling, &numeric, out.as_deref()))
        }
        Command::Construct { file, stages, numeric, out } => {
            read_pde(&file).and_then(|op| cmd_construct(&op, &stages, &numeric, out.as_deref(), true).map(|_| ()))
        }
        Command::Verify { manifest, numeric, out } => cmd_verify(&manifest, &numeric, out.as_deref()),
        Command::Demo { demo: Demo::Lewy { f, f_im, level, points, stages, numeric, out } } => {
            let sampling = Sampling { points, scheme: stages.scheme, region: stages.region.clone() };
            demo_lewy(&f, &f_im, level, &sampling, &stages, &numeric, out.as_deref())
        }
        Command::Demo { demo: Demo::Example11 { sampling, schedule, numeric, out } } => {
            demo_example11(&sampling, &schedule, &numeric, out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Math(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_pde(path: &Path) -> Result<PdeOperator, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let op = parse_pde(&text).map_err(|d| usage(format!("{}:{d}", path.display())))?;
    for w in op.arity_warnings() {
        eprintln!("warning: {w}");
    }
    Ok(op)
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Run {
    std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let target = dir.join(name);
    let io = |e: std::io::Error| usage(format!("{}: {e}", target.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit<T: Serialize>(out: Option<&Path>, name: &str, body: T) -> Run {
    let json = Report::new(body).to_json() + "\n";
    match out {
        Some(dir) => write_atomic(dir, name, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn parse_schedule(text: &str, stages: usize) -> Result<Vec<u32>, Failure> {
    let t = text.trim();
    if let Some(offset) = [("nu", 0), ("nu+1", 1)].iter().find(|(name, _)| *name == t).map(|(_, k)| *k) {
        return Ok((0..stages as u32).map(|k| k + offset).collect());
    }
    let list = t
        .split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|_| usage(format!("invalid schedule entry `{}`", s.trim()))))
        .collect::<Result<Vec<u32>, _>>()?;
    if list.len() != stages {
        return Err(usage(format!("schedule has {} entries for {stages} stages", list.len())));
    }
    if let Some(k) = list.windows(2).position(|w| w[1] < w[0]) {
        return Err(usage(format!("schedule decreases at entry {}", k + 1)));
    }
    Ok(list)
}

fn check_tol(tol: f64) -> Run {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("tolerance must be positive, got {tol}")))
    }
}

fn solve_options(numeric: &Numeric) -> SolveOptions {
    SolveOptions { tol: numeric.tol.max(SolveOptions::default().tol), mode: numeric.arith, ..SolveOptions::default() }
}

fn multi_index_text(p: &[u32]) -> String {
    let parts: Vec<String> = p.iter().map(u32::to_string).collect();
    format!("({})", parts.join(", "))
}

fn cmd_prolong(file: &Path, level: u32) -> Run {
    let op = read_pde(file)?;
    let sys = prolong(&op, level);
    for eq in &sys.equations {
        println!("eq: {} = 0  # j = {}, p = {}", eq.expr, eq.equation, multi_index_text(eq.index.entries()));
    }
    Ok(())
}

const REGION_SCAN_LIMIT: usize = 100_000;

fn region_value(e: &Expr, p: &[Rational]) -> bool {
    match evaluate::<Rational, _>(e, &PointAssignment::space_only(p)) {
        Ok(v) => v > Rational::from_integer(0.into()),
        Err(_) => {
            let pf: Vec<f64> = p.iter().map(Scalar::as_f64).collect();
            evaluate::<f64, _>(e, &PointAssignment::space_only(&pf)).is_ok_and(|v| v > 0.0)
        }
    }
}

/// First `count` stream points, restricted to `{region > 0}` when given.
fn stream_points(
    op: &PdeOperator,
    scheme: DenseScheme,
    count: usize,
    region: Option<&str>,
) -> Result<Vec<Vec<Rational>>, Failure> {
    let Some(text) = region else {
        return enumerate_dense(op.domain(), scheme, count).map_err(usage);
    };
    let e = parse_expression(text, &ParseContext::new(op.naming().clone()))
        .map_err(|d| usage(format!("region: {d}")))?;
    if e.contains_jets() {
        return Err(usage("region may only use the space variables"));
    }
    enumerate_dense_in(op.domain(), scheme, count, |p| region_value(&e, p), REGION_SCAN_LIMIT).map_err(usage)
}

fn range_points(op: &PdeOperator, sampling: &Sampling) -> Result<Vec<Vec<Rational>>, Failure> {
    stream_points(op, sampling.scheme, sampling.points, sampling.region.as_deref())
}

fn range_failure(report: &RangeReport) -> Run {
    let bad: Vec<String> = report
        .entries
        .iter()
        .filter(|e| !e.outcome.holds())
        .map(|e| format!("point {} ({}) level {}", e.point_index, e.point.join(", "), e.level))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Math(format!("range condition fails at {}", bad.join("; "))))
    }
}

fn cmd_range(op: &PdeOperator, level: u32, sampling: &Sampling, numeric: &Numeric, out: Option<&Path>) -> Run {
    check_tol(numeric.tol)?;
    let points = range_points(op, sampling)?;
    let report = range_condition_check(op, &points, level, &solve_options(numeric));
    eprintln!(
        "range: {} of {} (point, level) checks hold{}",
        report.entries.iter().filter(|e| e.outcome.holds()).count(),
        report.entries.len(),
        if report.linear { ", linear operator" } else { "" }
    );
    emit(out, "range.json", &report)?;
    range_failure(&report)
}

fn per_axis(requested: usize, dim: usize) -> usize {
    if requested > 0 {
        return requested;
    }
    ((2000f64).powf(1.0 / dim.max(1) as f64).floor() as usize).max(2)
}

fn write_samples(dir: &Path, seq: &SolutionSequence, requested: usize) -> Run {
    let dim = seq.op.dim();
    let k = per_axis(requested, dim);
    for stage in &seq.stages {
        let rows = stage.samples(seq.op.domain(), k).map_err(|e| Failure::Math(format!("stage {}: {e}", stage.index)))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        header.extend(["unknown".to_string(), "value".to_string()]);
        w.write_record(&header).map_err(usage)?;
        for (p, u, v) in rows {
            let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
            rec.push(seq.op.naming().unknowns[u].clone());
            rec.push(v.to_string());
            w.write_record(&rec).map_err(usage)?;
        }
        let bytes = w.into_inner().map_err(usage)?;
        write_atomic(dir, &format!("stage_{}.csv", stage.index), &bytes)?;
    }
    Ok(())
}

fn cmd_construct(
    op: &PdeOperator,
    args: &StageArgs,
    numeric: &Numeric,
    out: Option<&Path>,
    echo: bool,
) -> Result<SolutionSequence, Failure> {
    check_tol(numeric.tol)?;
    let count = args.stages + 1;
    let schedule = parse_schedule(&args.schedule, count)?;
    let z = stream_points(op, args.scheme, count, args.region.as_deref())?;
    let opts = ConstructOptions { solve: solve_options(numeric), ..ConstructOptions::default() };
    let (seq, manifest, failure) = match construct_sequence(op, &z, &schedule, &opts) {
        Ok(seq) => {
            let m = Manifest::from_sequence(&seq);
            (seq, m, None)
        }
        Err(f) => {
            let m = Manifest::from_failure(&f);
            let msg = format!("stage {}: {}", f.stage, f.error);
            (f.partial, m, Some(msg))
        }
    };
    eprintln!("construct: {} of {count} stages built, schedule {schedule:?}", seq.stages.len());
    let json = manifest.to_json() + "\n";
    match out {
        Some(dir) => {
            write_atomic(dir, "manifest.json", json.as_bytes())?;
            write_samples(dir, &seq, args.samples)?;
        }
        None if echo => print!("{json}"),
        None => {}
    }
    match failure {
        None => Ok(seq),
        Some(msg) => Err(Failure::Math(msg)),
    }
}

fn verify_sequence(seq: &SolutionSequence, numeric: &Numeric, out: Option<&Path>) -> Run {
    let report = verify_solution(seq, numeric.arith, numeric.tol).map_err(|e| Failure::Math(e.to_string()))?;
    eprintln!(
        "verify: {} in {:?} arithmetic over {} (stage, point) pairs",
        if report.pass { "PASS" } else { "FAIL" },
        report.arithmetic,
        report.checked
    );
    emit(out, "verify.json", &report)?;
    match report.failures.first() {
        None => Ok(()),
        Some(f) => Err(Failure::Math(format!(
            "equation {} stage {} point {} ({}): D^{} = {}",
            f.equation,
            f.stage,
            f.point_index,
            f.point.join(", "),
            multi_index_text(&f.index),
            f.value
        ))),
    }
}

fn cmd_verify(path: &Path, numeric: &Numeric, out: Option<&Path>) -> Run {
    check_tol(numeric.tol)?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let manifest = Manifest::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if let Some(f) = &manifest.failure {
        eprintln!("warning: manifest records a failed construction at stage {}: {}", f.stage, f.message);
    }
    let seq = manifest.to_sequence().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    verify_sequence(&seq, numeric, out)
}

fn demo_lewy(
    f: &str,
    f_im: &str,
    level: u32,
    sampling: &Sampling,
    stages: &StageArgs,
    numeric: &Numeric,
    out: Option<&Path>,
) -> Run {
    let op = lewy_operator(f, f_im).map_err(|d| usage(format!("right-hand side: {d}")))?;
    if let Some(dir) = out {
        write_atomic(dir, "lewy.pde", lewy_text(f, f_im).as_bytes())?;
    }
    eprintln!("lewy: f = ({f}) + i ({f_im})");
    check_tol(numeric.tol)?;
    let points = range_points(&op, sampling)?;
    let report = range_condition_check(&op, &points, level, &solve_options(numeric));
    eprintln!(
        "range: {} of {} (point, level) checks hold",
        report.entries.iter().filter(|e| e.outcome.holds()).count(),
        report.entries.len()
    );
    if let Some(dir) = out {
        emit(Some(dir), "range.json", &report)?;
    }
    range_failure(&report)?;
    let seq = cmd_construct(&op, stages, numeric, out, false)?;
    verify_sequence(&seq, numeric, out)
}

fn demo_example11(sampling: &Sampling, schedule: &str, numeric: &Numeric, out: Option<&Path>) -> Run {
    check_tol(numeric.tol)?;
    let domain = vec![(Rational::from_integer(0.into()), Rational::from_integer(1.into()))];
    let points = enumerate_dense(&domain, sampling.scheme, sampling.points).map_err(usage)?;
    let schedule = parse_schedule(schedule, points.len())?;
    let w = power_product_sequence(&points, &schedule).map_err(|e| Failure::Math(e.to_string()))?;
    for (k, t) in w.terms.iter().enumerate() {
        eprintln!("w_{k} = {t}");
    }
    let z = SingularityComplement::new(domain, points.clone()).map_err(|e| Failure::Math(e.to_string()))?;
    let top = schedule.last().copied().unwrap_or(0);
    let orders: Vec<u32> = (0..top).collect();
    let report = check_vanishing(&w, &z, &orders, numeric.arith, numeric.tol).map_err(|e| Failure::Math(e.to_string()))?;
    eprintln!(
        "example11: {} points {}, {:?} arithmetic",
        points.len(),
        points.iter().map(|p| rational_text(&p[0])).collect::<Vec<_>>().join(", "),
        report.arithmetic
    );
    emit(out, "vanishing.json", &report)?;
    if report.all_witnessed() {
        Ok(())
    } else {
        Err(Failure::Math("some (point, order) pairs have no vanishing witness".into()))
    }
}
