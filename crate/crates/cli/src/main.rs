//! `convendo`: evaluate endomorphisms of convex functions, run property
//! suites and work with 1D kernels.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use convendo::ext::ExtReal;
use convendo::oned::{detect_r, kernel_decompose, kernel_extract, Kernel1D};
use convendo::par::{map_slice, Exec};
use convendo::random;
use convendo::sample::linspace;
use convendo::schema::{self, Endo, EndoDesc, FnDesc};
use convendo::suites::{self, run_suite_with, Suite};
use convendo::Interval;
use rand::Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "convendo", version, about = "Additive endomorphisms of convex functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate Ψ(f) at sample points and write `x1,...,xn,value` CSV.
    Eval(EvalArgs),
    /// Run a randomised property suite.
    Check(CheckArgs),
    /// Extract or round-trip the kernel of a 1D endomorphism.
    #[command(subcommand)]
    Kernel(KernelCommand),
}

#[derive(Args)]
struct EvalArgs {
    /// Endomorphism descriptor (JSON).
    #[arg(long)]
    endo: PathBuf,
    /// Function descriptor (JSON).
    #[arg(long = "fn")]
    func: PathBuf,
    /// CSV file of sample points, one per row.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    points: Option<PathBuf>,
    /// Tensor grid `lo:hi:step` used on every axis.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Judge every property against this tolerance instead of its default.
    #[arg(long)]
    tol: Option<f64>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Tabulate ψ(x, y) = Ψ((· - y)₊)[x] as CSV (rows x, columns y).
    Extract(ExtractArgs),
    /// Extract, decompose and re-evaluate on random inputs; report the
    /// largest deviation from direct evaluation.
    Roundtrip(RoundtripArgs),
}

#[derive(Args)]
struct GridArgs {
    /// `lo:hi:step` for x.
    #[arg(long = "x-grid", allow_hyphen_values = true, default_value = "-1:1:0.03125")]
    x_grid: String,
    /// `lo:hi:step` for y.
    #[arg(long = "y-grid", allow_hyphen_values = true, default_value = "-3:3:0.001953125")]
    y_grid: String,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    endo: PathBuf,
    #[command(flatten)]
    grids: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[arg(long)]
    endo: PathBuf,
    #[command(flatten)]
    grids: GridArgs,
    /// Support radius; detected from the kernel when omitted.
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Exit with status 1 when the deviation exceeds this.
    #[arg(long)]
    tol: Option<f64>,
}

/// Failure classes and their exit codes.
enum Failure {
    /// A property failed (1).
    Check,
    /// Bad input: schema, descriptor validation, files, grids (2).
    Input(anyhow::Error),
    /// Evaluation failed on valid input (3).
    Eval(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check => 1,
            Failure::Input(_) => 2,
            Failure::Eval(_) => 3,
        }
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn eval_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Eval(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Check(a) => cmd_check(a),
        Command::Kernel(KernelCommand::Extract(a)) => cmd_extract(a),
        Command::Kernel(KernelCommand::Roundtrip(a)) => cmd_roundtrip(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) | Failure::Eval(e) => eprintln!("error: {e:#}"),
                Failure::Check => {}
            }
            ExitCode::from(f.code())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(input)?;
    schema::parse(&text).map_err(|e| input(anyhow!("{}: {e}", path.display())))
}

fn load_endo(path: &Path) -> Result<Endo, Failure> {
    let desc: EndoDesc = read_json(path)?;
    desc.build().with_context(|| format!("{}", path.display())).map_err(input)
}

/// Parses `lo:hi:step`; `hi - lo` must be a whole number of steps.
fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts[..] else { bail!("grid `{spec}` is not of the form lo:hi:step") };
    let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}` in grid `{spec}`"));
    let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        bail!("grid `{spec}` needs finite lo <= hi and step > 0");
    }
    let steps = (hi - lo) / step;
    let k = steps.round();
    if (steps - k).abs() > 1e-9 * (1.0 + k) || k > 1e7 {
        bail!("grid `{spec}`: (hi - lo) / step = {steps} is not a whole number of steps");
    }
    Ok(linspace(lo, hi, k as usize + 1))
}

fn tensor(axis: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![]];
    for _ in 0..n {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    pts
}

fn read_points(path: &Path, n: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match row {
            Ok(p) if p.len() == n => out.push(p),
            Ok(p) => bail!("{}: row {} has {} coordinates, expected {n}", path.display(), i + 1, p.len()),
            // A non-numeric first row is a header.
            Err(_) if i == 0 => continue,
            Err(e) => bail!("{}: row {}: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn writer(out: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>, Failure> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display())).map_err(input)?,
        ),
        None => Box::new(io::stdout()),
    };
    Ok(csv::WriterBuilder::new().from_writer(sink))
}

fn fmt_value(v: ExtReal) -> String {
    match v {
        ExtReal::Finite(x) => format!("{x}"),
        ExtReal::PosInf => "inf".into(),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let endo = load_endo(&a.endo)?;
    let fdesc: FnDesc = read_json(&a.func)?;
    let f = fdesc.build().with_context(|| format!("{}", a.func.display())).map_err(input)?;
    let n = endo.dim();
    let points = match (&a.points, &a.grid) {
        (Some(p), _) => read_points(p, n).map_err(input)?,
        (None, Some(g)) => tensor(&parse_grid(g).map_err(input)?, n),
        (None, None) => unreachable!("clap requires one of --points, --grid"),
    };
    let values = map_slice(Exec::default(), &points, |x| endo.eval(&f, x));
    let mut w = writer(&a.out)?;
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain(["value".to_string()]).collect();
    w.write_record(&header).map_err(input)?;
    for (x, v) in points.iter().zip(values) {
        let v = v.with_context(|| format!("evaluating at {x:?}")).map_err(eval_err)?;
        let row: Vec<String> = x.iter().map(|t| format!("{t}")).chain([fmt_value(v)]).collect();
        w.write_record(&row).map_err(input)?;
    }
    w.flush().map_err(input)
}

#[derive(Serialize)]
struct Dump<'a> {
    suite: &'a str,
    seed: u64,
    property: &'a str,
    max_error: f64,
    tolerance: f64,
    counterexample: &'a Option<serde_json::Value>,
}

fn cmd_check(a: CheckArgs) -> Result<(), Failure> {
    let exec = if a.sequential { Exec::Sequential } else { Exec::default() };
    let report = run_suite_with(a.suite, a.seed, a.trials, exec, a.tol);
    println!("{report}");
    if report.pass() {
        return Ok(());
    }
    for p in report.properties.iter().filter(|p| !p.pass) {
        let dump = Dump {
            suite: a.suite.name(),
            seed: a.seed,
            property: &p.name,
            max_error: p.max_error,
            tolerance: p.tolerance,
            counterexample: &p.counterexample,
        };
        println!("{}", serde_json::to_string(&dump).expect("serialisable"));
    }
    Err(Failure::Check)
}

struct Tabulated {
    endo: Endo,
    xs: Vec<f64>,
    ys: Vec<f64>,
    kernel: Kernel1D,
}

fn tabulate(endo_path: &Path, grids: &GridArgs) -> Result<Tabulated, Failure> {
    let endo = load_endo(endo_path)?;
    let xs = parse_grid(&grids.x_grid).map_err(input)?;
    let ys = parse_grid(&grids.y_grid).map_err(input)?;
    let Some(e1) = endo.as_1d() else {
        return Err(input(anyhow!("kernels exist for endomorphisms on ℝ only")));
    };
    // A tabulated kernel is only known on its own grid box.
    if let Endo::Kernel(k) = &endo {
        let (xb, yb, a) = (k.0.kernel().x_box(), k.0.kernel().y_box(), k.0.a());
        let inside = |iv: Interval, v: &[f64]| v.iter().all(|&t| iv.lo <= t && t <= iv.hi);
        if !inside(a, &xs) || !inside(xb, &xs) {
            return Err(input(anyhow!("x grid leaves the kernel's validity region [{}, {}]", a.lo.max(xb.lo), a.hi.min(xb.hi))));
        }
        if !inside(yb, &ys) {
            return Err(input(anyhow!("y grid leaves the kernel's validity region [{}, {}]", yb.lo, yb.hi)));
        }
    }
    let kernel = kernel_extract(e1, &xs, &ys, Exec::default()).map_err(eval_err)?;
    Ok(Tabulated { endo, xs, ys, kernel })
}

fn cmd_extract(a: ExtractArgs) -> Result<(), Failure> {
    let t = tabulate(&a.endo, &a.grids)?;
    let grid = t.kernel.grid().expect("extracted kernels are tabulated");
    let mut w = writer(&a.out)?;
    let header: Vec<String> = ["x\\y".to_string()].into_iter().chain(t.ys.iter().map(|y| format!("{y}"))).collect();
    w.write_record(&header).map_err(input)?;
    for (x, row) in t.xs.iter().zip(grid.values()) {
        let rec: Vec<String> = [format!("{x}")].into_iter().chain(row.iter().map(|v| format!("{v}"))).collect();
        w.write_record(&rec).map_err(input)?;
    }
    w.flush().map_err(input)
}

fn cmd_roundtrip(a: RoundtripArgs) -> Result<(), Failure> {
    let t = tabulate(&a.endo, &a.grids)?;
    let (lo, hi) = (t.xs[0], t.xs[t.xs.len() - 1]);
    let area = Interval::new(lo, hi);
    let r = match a.r {
        Some(r) => r,
        None => detect_r(&t.kernel, area, 1.0)
            .ok_or_else(|| input(anyhow!("no support radius found within the y grid; pass --R")))?,
    };
    let d = kernel_decompose(&t.kernel, area, r).map_err(input)?;
    let fam = suites::OneDFamily {
        name: "input",
        endo: Box::new(CliEndo(t.endo)),
        xs: t.xs,
        ys: t.ys,
        tol: a.tol.unwrap_or(f64::INFINITY),
        descriptor: serde_json::Value::Null,
    };
    let mut rng = random::rng(a.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..a.trials {
        let f = suites::kernel_input(&mut rng);
        let xs: Vec<f64> = (0..10).map(|_| fam.xs[rng.random_range(0..fam.xs.len())]).collect();
        worst = worst.max(suites::roundtrip_deviation(&fam, &d, &f, &xs).map_err(eval_err)?);
    }
    println!(
        "round trip: A = [{lo}, {hi}], R = {r}, {} inputs x 10 grid points, max deviation {worst:e}",
        a.trials
    );
    match a.tol {
        Some(tol) if worst > tol => {
            println!("FAIL: deviation exceeds {tol:e}");
            Err(Failure::Check)
        }
        _ => Ok(()),
    }
}

struct CliEndo(Endo);

impl convendo::Endo1D for CliEndo {
    fn apply_1d(&self, f: &convendo::PwlFunction, x: f64) -> convendo::Result<ExtReal> {
        self.0.as_1d().expect("checked to act on ℝ").apply_1d(f, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("-1:1:0.5").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0:0:1").unwrap(), vec![0.0]);
        assert!(parse_grid("0:1:0.3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.5").is_err());
    }

    #[test]
    fn tensor_grid_order() {
        let t = tensor(&[0.0, 1.0], 2);
        assert_eq!(t, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn values_render() {
        assert_eq!(fmt_value(ExtReal::PosInf), "inf");
        assert_eq!(fmt_value(ExtReal::Finite(0.25)), "0.25");
    }
}
