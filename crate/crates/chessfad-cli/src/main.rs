//! Command-line front end: validation suite, single Hessian/HVP
//! computation, batch benchmarking, and operation-count tables.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/config error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use chessfad::analysis::{
    count_chunk_hess_dyn, count_schunk_hess_dyn, fd_gradient, fd_hessian, optimal_chunk,
    predict_chunk_counts, predict_schunk_counts,
};
use chessfad::batch::{
    default_workers, l0_batch_hvp_dyn, l1_batch_hvp_dyn, l2_batch_hvp_dyn, seq_batch_hvp_dyn,
};
use chessfad::hessian::{chunk_hess_dyn, hessian_full, hessian_sym, schunk_hess_dyn, CountedFn};
use chessfad::hvp::{chess_vec_dyn, sc_hess_vec_dyn};
use chessfad::sample::random_point;
use chessfad::testfuncs::Func;
use chessfad::{BatchData, HessianMatrix};

#[derive(Parser)]
#[command(name = "chessfad", version, about = "Chunked second-order forward-mode AD harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the property suite at the configured size and emit a JSON report
    Validate(ValidateArgs),
    /// Compute one Hessian (and gradient, for the chunked engines)
    Hessian(HessianArgs),
    /// Compute one Hessian-vector product
    Hvp(HvpArgs),
    /// Time batch HVP runs and append BenchRecord rows
    Bench(BenchArgs),
    /// Print measured vs predicted scalar operation counts
    Opcount(OpcountArgs),
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Full,
    Sym,
    Chunk,
    Schunk,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Level {
    Seq,
    L0,
    L1,
    L2,
}

#[derive(Args)]
struct Common {
    /// Test function: rosenbrock | ackley | fletcher-powell | prodsum
    #[arg(long, default_value = "rosenbrock")]
    func: String,
    /// Number of variables
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Chunk size; defaults to the cost-optimal divisor of n
    #[arg(long)]
    csize: Option<usize>,
    /// Seed for all deterministic random inputs
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (stdout if omitted; bench appends)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PointSource {
    /// Inline point, comma-separated
    #[arg(long)]
    point: Option<String>,
    /// File with one comma-separated row (first row is used)
    #[arg(long)]
    point_file: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    point: PointSource,
    /// Worker count for the batch checks (or CHESSFAD_WORKERS)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct HessianArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    point: PointSource,
    #[arg(long, value_enum, default_value_t = Mode::Chunk)]
    mode: Mode,
}

#[derive(Args)]
struct HvpArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    point: PointSource,
    /// Inline multiplicand vector, comma-separated
    #[arg(long)]
    vec: Option<String>,
    /// File with one comma-separated row (first row is used)
    #[arg(long)]
    vec_file: Option<PathBuf>,
    /// chunk = plain row sweep, schunk = symmetry-exploiting
    #[arg(long, value_enum, default_value_t = Mode::Chunk)]
    mode: Mode,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Level::Seq)]
    level: Level,
    /// Number of instances
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Worker count (or CHESSFAD_WORKERS; ignored for seq)
    #[arg(long)]
    workers: Option<usize>,
    /// Sweep n over start:end:step instead of a single --n
    #[arg(long)]
    n_sweep: Option<String>,
}

#[derive(Args)]
struct OpcountArgs {
    #[command(flatten)]
    common: Common,
    /// One row per divisor of n instead of a single csize
    #[arg(long)]
    all_divisors: bool,
}

enum CliError {
    Check(String),
    Config(String),
}

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Config(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Hessian(a) => cmd_hessian(a),
        Cmd::Hvp(a) => cmd_hvp(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Opcount(a) => cmd_opcount(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

impl Common {
    fn func(&self) -> Result<Func> {
        Func::by_name(&self.func, self.n, self.seed)
            .ok_or_else(|| CliError::Config(format!("unknown function '{}'", self.func)))
    }

    fn csize(&self) -> Result<usize> {
        let c = self.csize.unwrap_or_else(|| optimal_chunk(self.n));
        if c == 0 || self.n % c != 0 {
            return Err(CliError::Config(format!(
                "chunk size {c} does not divide the variable count {}",
                self.n
            )));
        }
        if !chessfad::SUPPORTED_CSIZES.contains(&c) {
            return Err(CliError::Config(format!(
                "unsupported chunk size {c} (supported: {:?})",
                chessfad::SUPPORTED_CSIZES
            )));
        }
        Ok(c)
    }

    fn writer(&self, append: bool) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => {
                let file =
                    fs::OpenOptions::new().create(true).append(append).write(true).open(path)?;
                Box::new(file)
            }
            None => Box::new(std::io::stdout()),
        })
    }
}

fn parse_row(s: &str, n: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        s.trim().split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| CliError::Config(format!("malformed number list '{s}': {e}")))?;
    if vals.len() != n {
        return Err(CliError::Config(format!("expected {n} values, got {}", vals.len())));
    }
    Ok(vals)
}

impl PointSource {
    fn resolve(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        inline_or_file_or_random(&self.point, &self.point_file, n, seed)
    }
}

fn inline_or_file_or_random(
    inline: &Option<String>,
    file: &Option<PathBuf>,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if let Some(s) = inline {
        return parse_row(s, n);
    }
    if let Some(path) = file {
        let text = fs::read_to_string(path)?;
        let first = text.lines().next().ok_or_else(|| CliError::Config("empty file".into()))?;
        return parse_row(first, n);
    }
    Ok(random_point(n, seed))
}

fn workers_from(flag: Option<usize>) -> Result<usize> {
    let w = match flag {
        Some(w) => w,
        None => match std::env::var("CHESSFAD_WORKERS") {
            Ok(s) => s
                .parse()
                .map_err(|_| CliError::Config(format!("bad CHESSFAD_WORKERS value '{s}'")))?,
            Err(_) => default_workers(),
        },
    };
    if w == 0 {
        return Err(CliError::Config("worker count must be at least 1".into()));
    }
    Ok(w)
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that parses back to the same bits
    format!("{v}")
}

/// Row-oriented output in either format; owns the destination.
enum Sink {
    Csv(csv::Writer<Box<dyn Write>>),
    Json(Box<dyn Write>),
}

impl Sink {
    fn new(format: Format, out: Box<dyn Write>) -> Sink {
        match format {
            Format::Csv => Sink::Csv(csv::Writer::from_writer(out)),
            Format::Json => Sink::Json(out),
        }
    }

    fn header(&mut self, fields: &[&str]) -> Result<()> {
        if let Sink::Csv(w) = self {
            w.write_record(fields)?;
        }
        Ok(())
    }

    /// One record: CSV row from the string values, or a JSON object line.
    fn row(&mut self, csv_fields: Vec<String>, obj: serde_json::Value) -> Result<()> {
        match self {
            Sink::Csv(w) => w.write_record(csv_fields)?,
            Sink::Json(out) => writeln!(out, "{obj}")?,
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        match self {
            Sink::Csv(w) => w.flush()?,
            Sink::Json(out) => out.flush()?,
        }
        Ok(())
    }
}

fn supported_divisors(n: usize) -> Vec<usize> {
    chessfad::analysis::divisors(n)
        .into_iter()
        .filter(|c| chessfad::SUPPORTED_CSIZES.contains(c))
        .collect()
}

// ---------------------------------------------------------------- validate

struct Check {
    name: &'static str,
    pass: bool,
    gating: bool,
    max_err: Option<f64>,
    note: Option<String>,
}

impl Check {
    fn gate(name: &'static str, pass: bool, max_err: Option<f64>, note: Option<String>) -> Check {
        Check { name, pass, gating: true, max_err, note }
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let n = args.common.n;
    let csize = args.common.csize()?;
    let f = args.common.func()?;
    let seed = args.common.seed;
    let workers = workers_from(args.workers)?;
    let pinned = match (&args.point.point, &args.point.point_file) {
        (None, None) => None,
        _ => Some(args.point.resolve(n, seed)?),
    };
    // a pinned ackley origin is the documented singularity showcase: the
    // numeric checks run on a seeded point instead and the NaN behavior
    // becomes an explicit expected-failure check
    let origin_case = f.name() == "ackley"
        && pinned.as_ref().is_some_and(|p| p.iter().all(|&x| x == 0.0));
    let a = match &pinned {
        Some(p) if !origin_case => p.clone(),
        _ => random_point(n, seed),
    };

    let mut checks: Vec<Check> = Vec::new();

    // engine cross-equivalence, bitwise on the upper triangle
    let full = hessian_full::<f64, _>(&f, &a)?;
    let sym = hessian_sym::<f64, _>(&f, &a)?;
    let (chunk, grad) = chunk_hess_dyn(&f, &a, csize)?;
    let (schunk, _) = schunk_hess_dyn(&f, &a, csize)?;
    let mut max_err = 0.0f64;
    let mut bitwise = true;
    for i in 0..n {
        for j in i..n {
            let v = full.get(i, j);
            for h in [&sym, &chunk, &schunk] {
                bitwise &= h.get(i, j).to_bits() == v.to_bits();
                max_err = max_err.max((h.get(i, j) - v).abs());
            }
        }
    }
    bitwise &= sym.is_symmetric_bitwise() && schunk.is_symmetric_bitwise();
    checks.push(Check::gate("engine-equivalence", bitwise, Some(max_err), None));

    // chunk invariance over every supported divisor
    let (base, _) = chunk_hess_dyn(&f, &a, 1)?;
    let invariant = supported_divisors(n).into_iter().all(|c| {
        chunk_hess_dyn(&f, &a, c).map(|(h, _)| {
            h.as_slice().iter().zip(base.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits())
        }) == Ok(true)
    });
    checks.push(Check::gate("chunk-invariance", invariant, None, None));

    // finite-difference oracle agreement
    let hstep = if f.name() == "ackley" { 5e-5 } else { 1e-3 };
    let gstep = if f.name() == "fletcher-powell" { 1e-4 } else { 1e-5 };
    let href = fd_hessian(&f, &a, hstep);
    let mut fd_pass = true;
    let mut fd_err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = chunk.get(i, j);
            let scale = want.abs().max(1.0);
            // absolute floor 2e-6: the central-difference oracle itself
            // carries ~1e-6 of truncation + cancellation noise on
            // small-magnitude entries at unlucky points
            let tol = (1e-4 * want.abs()).max(2e-6);
            let diff = (href.get(i, j) - want).abs();
            fd_pass &= diff <= tol;
            fd_err = fd_err.max(diff / scale);
        }
    }
    let gref = fd_gradient(&f, &a, gstep);
    let gscale = grad.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    fd_pass &= grad.iter().zip(&gref).all(|(x, y)| (x - y).abs() <= 1e-6 * gscale);
    checks.push(Check::gate("fd-oracle", fd_pass, Some(fd_err), None));

    // HVP agreement with the dense product, plus linearity
    let mut hvp_pass = true;
    let mut hvp_err = 0.0f64;
    for k in 0..10u64 {
        let v = chessfad::sample::random_point(n, seed ^ (k + 1));
        let u = chessfad::sample::random_point(n, seed ^ (k + 101));
        let dense = chunk.mul_vec(&v);
        let hv = chess_vec_dyn(&f, &a, &v, csize)?;
        let shv = sc_hess_vec_dyn(&f, &a, &v, csize)?;
        let hu = chess_vec_dyn(&f, &a, &u, csize)?;
        let lin: Vec<f64> = u.iter().zip(&v).map(|(x, y)| 2.0 * x + 3.0 * y).collect();
        let hlin = chess_vec_dyn(&f, &a, &lin, csize)?;
        for i in 0..n {
            let scale = dense[i].abs().max(1.0);
            hvp_pass &= (hv[i] - dense[i]).abs() <= 1e-12 * scale;
            hvp_pass &= (shv[i] - dense[i]).abs() <= 1e-10 * scale;
            hvp_err = hvp_err.max((shv[i] - dense[i]).abs() / scale);
            let want = 2.0 * hu[i] + 3.0 * hv[i];
            hvp_pass &= (hlin[i] - want).abs() <= 1e-12 * want.abs().max(1.0);
        }
    }
    checks.push(Check::gate("hvp-linearity", hvp_pass, Some(hvp_err), None));

    // batch executor: every level, several worker counts, one checksum
    let batch = BatchData::random(32, n, seed);
    let seq = seq_batch_hvp_dyn(&f, &batch, csize)?;
    let mut batch_pass = true;
    for w in [1, workers] {
        for run in [
            l0_batch_hvp_dyn(&f, &batch, csize, w)?,
            l1_batch_hvp_dyn(&f, &batch, csize, w)?,
            l2_batch_hvp_dyn(&f, &batch, csize, w)?,
        ] {
            batch_pass &= run.iter().zip(&seq).all(|(x, y)| x.to_bits() == y.to_bits());
        }
    }
    checks.push(Check::gate("batch-equivalence", batch_pass, None, None));

    // evaluation-count formulas
    let counted = CountedFn::new(&f);
    hessian_full::<f64, _>(&counted, &a)?;
    let mut count_pass = counted.calls() == n * n;
    let counted = CountedFn::new(&f);
    hessian_sym::<f64, _>(&counted, &a)?;
    count_pass &= counted.calls() == n * (n + 1) / 2;
    let counted = CountedFn::new(&f);
    chunk_hess_dyn(&counted, &a, csize)?;
    count_pass &= counted.calls() == n * n / csize;
    let counted = CountedFn::new(&f);
    schunk_hess_dyn(&counted, &a, csize)?;
    count_pass &= counted.calls() == n * (n / csize + 1) / 2;
    checks.push(Check::gate("evaluation-counts", count_pass, None, None));

    // operation-count model, gated on multiplications; the addition model
    // is reported informationally (it is short one add per dual multiply)
    if n >= 2 {
        let ps = Func::by_name("prodsum", n, seed).unwrap();
        let (m, ad) = ((n - 1) as u64, (n - 2) as u64);
        let got = count_chunk_hess_dyn(&ps, &a, csize, true)?;
        let want = predict_chunk_counts(n, csize, m, ad)?;
        let sgot = count_schunk_hess_dyn(&ps, &a, csize, true)?;
        let swant = predict_schunk_counts(n, csize, m)?.1;
        checks.push(Check::gate(
            "opcount-mults",
            got.mults == want.mults && sgot.mults == swant,
            None,
            Some(format!(
                "adds measured {} vs modeled {} (model omits one add per dual multiply)",
                got.adds, want.adds
            )),
        ));
    }

    if origin_case {
        let hy = hessian_full::<f64, _>(&f, &vec![0.0; n])?;
        let nan = (0..n).all(|i| hy.get(i, i).is_nan());
        checks.push(Check {
            name: "ackley-origin-nan",
            pass: nan,
            gating: true,
            max_err: None,
            note: Some(
                "expected failure case: the radial sqrt is not differentiable at the \
                 origin, so derivative slots are NaN by design"
                    .into(),
            ),
        });
    }

    let all_pass = checks.iter().all(|c| c.pass || !c.gating);
    let report = json!({
        "func": f.name(),
        "n": n,
        "csize": csize,
        "seed": seed,
        "workers": workers,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "pass": c.pass,
            "max_err": c.max_err,
            "note": c.note,
        })).collect::<Vec<_>>(),
        "pass": all_pass,
    });
    let mut out = args.common.writer(false)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    if !all_pass {
        let first = checks.iter().find(|c| !c.pass && c.gating).unwrap();
        return Err(CliError::Check(first.name.into()));
    }
    Ok(())
}

// ----------------------------------------------------------- hessian / hvp

fn write_matrix(
    out: &mut dyn Write,
    args: &HessianArgs,
    h: &HessianMatrix,
    grad: Option<&[f64]>,
    point: &[f64],
    csize: usize,
) -> Result<()> {
    match args.common.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in h.rows() {
                w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
            }
            if let Some(g) = grad {
                w.write_record(g.iter().map(|v| fmt_f64(*v)))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> = h.rows().map(|r| r.to_vec()).collect();
            let obj = json!({
                "func": args.common.func,
                "n": args.common.n,
                "csize": csize,
                "mode": mode_name(args.mode),
                "point": point,
                "hessian": rows,
                "gradient": grad,
            });
            writeln!(out, "{obj}")?;
        }
    }
    Ok(())
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Full => "full",
        Mode::Sym => "sym",
        Mode::Chunk => "chunk",
        Mode::Schunk => "schunk",
    }
}

fn cmd_hessian(args: HessianArgs) -> Result<()> {
    let f = args.common.func()?;
    let csize = args.common.csize()?;
    let a = args.point.resolve(args.common.n, args.common.seed)?;
    let (h, grad) = match args.mode {
        Mode::Full => (hessian_full::<f64, _>(&f, &a)?, None),
        Mode::Sym => (hessian_sym::<f64, _>(&f, &a)?, None),
        Mode::Chunk => {
            let (h, g) = chunk_hess_dyn(&f, &a, csize)?;
            (h, Some(g))
        }
        Mode::Schunk => {
            let (h, g) = schunk_hess_dyn(&f, &a, csize)?;
            (h, Some(g))
        }
    };
    let mut out = args.common.writer(false)?;
    write_matrix(&mut out, &args, &h, grad.as_deref(), &a, csize)
}

fn cmd_hvp(args: HvpArgs) -> Result<()> {
    let f = args.common.func()?;
    let n = args.common.n;
    let csize = args.common.csize()?;
    let a = args.point.resolve(n, args.common.seed)?;
    // different stream than the point so seeded point and vector differ
    let v = inline_or_file_or_random(&args.vec, &args.vec_file, n, args.common.seed ^ 1)?;
    let out_vec = match args.mode {
        Mode::Chunk => chess_vec_dyn(&f, &a, &v, csize)?,
        Mode::Schunk => sc_hess_vec_dyn(&f, &a, &v, csize)?,
        _ => return Err(CliError::Config("hvp mode must be chunk or schunk".into())),
    };
    let mut out = args.common.writer(false)?;
    match args.common.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(out_vec.iter().map(|x| fmt_f64(*x)))?;
            w.flush()?;
        }
        Format::Json => {
            let obj = json!({
                "func": args.common.func,
                "n": n,
                "csize": csize,
                "mode": mode_name(args.mode),
                "point": a,
                "vec": v,
                "out": out_vec,
            });
            writeln!(out, "{obj}")?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ bench

const BENCH_HEADER: [&str; 10] = [
    "func",
    "n",
    "csize",
    "mode",
    "level",
    "m",
    "workers",
    "wall_time_ns",
    "time_per_instance_ns",
    "checksum",
];

fn parse_sweep(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Config(format!("bad sweep '{s}', expected start:end:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> =
        parts.iter().map(|p| p.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || start == 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step).collect())
}

fn level_name(l: Level) -> &'static str {
    match l {
        Level::Seq => "seq",
        Level::L0 => "l0",
        Level::L1 => "l1",
        Level::L2 => "l2",
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let sizes = match &args.n_sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![args.common.n],
    };
    let workers = workers_from(args.workers)?;
    if args.m == 0 {
        return Err(CliError::Config("instance count m must be at least 1".into()));
    }
    let append = args.common.output.is_some();
    let write_header = match &args.common.output {
        Some(p) => fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true),
        None => true,
    };
    let mut sink = Sink::new(args.common.format, args.common.writer(append)?);
    if write_header {
        sink.header(&BENCH_HEADER)?;
    }

    for n in sizes {
        let csize = match args.common.csize {
            Some(c) if n % c == 0 && chessfad::SUPPORTED_CSIZES.contains(&c) => c,
            Some(c) => {
                return Err(CliError::Config(format!(
                    "chunk size {c} unusable at n = {n} in sweep"
                )))
            }
            None => optimal_chunk(n),
        };
        let f = args.common.func()?;
        let f = match Func::by_name(f.name(), n, args.common.seed) {
            Some(f) => f,
            None => unreachable!(),
        };
        let batch = BatchData::random(args.m, n, args.common.seed);
        // timed region covers the computation only, not instance
        // generation or output writing
        let t = Instant::now();
        let res = match args.level {
            Level::Seq => seq_batch_hvp_dyn(&f, &batch, csize)?,
            Level::L0 => l0_batch_hvp_dyn(&f, &batch, csize, workers)?,
            Level::L1 => l1_batch_hvp_dyn(&f, &batch, csize, workers)?,
            Level::L2 => l2_batch_hvp_dyn(&f, &batch, csize, workers)?,
        };
        let wall = t.elapsed().as_nanos() as u64;
        let checksum: f64 = res.iter().sum();
        let per_instance = wall / args.m as u64;
        sink.row(
            vec![
                f.name().to_string(),
                n.to_string(),
                csize.to_string(),
                "chunk".to_string(),
                level_name(args.level).to_string(),
                args.m.to_string(),
                workers.to_string(),
                wall.to_string(),
                per_instance.to_string(),
                fmt_f64(checksum),
            ],
            json!({
                "func": f.name(),
                "n": n,
                "csize": csize,
                "mode": "chunk",
                "level": level_name(args.level),
                "m": args.m,
                "workers": workers,
                "wall_time_ns": wall,
                "time_per_instance_ns": per_instance,
                "checksum": checksum,
            }),
        )?;
    }
    sink.flush()
}

// ---------------------------------------------------------------- opcount

fn cmd_opcount(args: OpcountArgs) -> Result<()> {
    let n = args.common.n;
    if n < 2 {
        return Err(CliError::Config("opcount needs n >= 2".into()));
    }
    let f = args.common.func()?;
    let a = random_point(n, args.common.seed);
    let strict = f.name() == "prodsum";
    let csizes = if args.all_divisors {
        supported_divisors(n)
    } else {
        vec![args.common.csize()?]
    };
    let mut sink = Sink::new(args.common.format, args.common.writer(false)?);
    sink.header(&[
        "func",
        "n",
        "csize",
        "measured_mults",
        "measured_adds",
        "predicted_mults",
        "predicted_adds",
        "match",
        "optimal_csize",
    ])?;
    for c in csizes {
        let got = count_chunk_hess_dyn(&f, &a, c, strict)?;
        // the closed-form model covers only the strict add/mul function;
        // other functions get measured-only rows. `match` compares
        // multiplications, which the model predicts exactly; the addition
        // model is off by one add per dual multiply and is reported as-is.
        let predicted = strict
            .then(|| predict_chunk_counts(n, c, (n - 1) as u64, (n - 2) as u64))
            .transpose()?;
        let matches = predicted.map(|p| p.mults == got.mults);
        sink.row(
            vec![
                f.name().to_string(),
                n.to_string(),
                c.to_string(),
                got.mults.to_string(),
                got.adds.to_string(),
                predicted.map(|p| p.mults.to_string()).unwrap_or_default(),
                predicted.map(|p| p.adds.to_string()).unwrap_or_default(),
                matches.map(|b| b.to_string()).unwrap_or_default(),
                optimal_chunk(n).to_string(),
            ],
            json!({
                "func": f.name(),
                "n": n,
                "csize": c,
                "measured_mults": got.mults,
                "measured_adds": got.adds,
                "predicted_mults": predicted.map(|p| p.mults),
                "predicted_adds": predicted.map(|p| p.adds),
                "match": matches,
                "optimal_csize": optimal_chunk(n),
            }),
        )?;
    }
    sink.flush()
}
