//! `hcsos`: Θ tables, SOS lower bounds, smoothing and certificate checks.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use hypercube_sos::certificates::{norm_gap_certificate, Certificate};
use hypercube_sos::jackson::{apriori_gap_bound, product_kernel, smooth, GapBound};
use hypercube_sos::sdp::SolveStatus;
use hypercube_sos::sos::{self, PreorderingScheme, SosError};
use hypercube_sos::{Basis, Poly};

/// Residual above which a certificate is rejected.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "hcsos",
    version,
    about = "SOS bounds and certificates on the hypercube [-1,1]^n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Θ upper bounds for a range of (r, d), rows r and columns d.
    ThetaTable(TableArgs),
    /// Lower bound on min f over the cube from a truncated pre-ordering.
    LowerBound(LowerBoundArgs),
    /// Writes a certificate for ‖p‖₁,T − p and prints its residual.
    CertifyNorm(CertifyArgs),
    /// Re-checks a certificate file.
    VerifyCertificate { file: PathBuf },
    /// Smooths f with the product Jackson kernel of per-variable degree r.
    JacksonSmooth(SmoothArgs),
    /// 1-norm distance of f to sums of squares of degree 2d.
    Rho(RhoArgs),
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    n: usize,
    /// Degrees as `k` or an inclusive range `a..b`.
    #[arg(long, value_parser = parse_range)]
    d: Range,
    /// Truncation degrees as `k` or an inclusive range `a..b`.
    #[arg(long, value_parser = parse_range)]
    r: Range,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Seconds per cell before it is reported as timed out.
    #[arg(long, default_value_t = 120.0)]
    time_budget: f64,
    /// Permit n = 4.
    #[arg(long)]
    allow_large_n: bool,
}

#[derive(Args)]
struct LowerBoundArgs {
    /// Polynomial file, JSON or text expression.
    file: PathBuf,
    #[arg(long)]
    r: u32,
    #[arg(long, value_enum, default_value_t = Scheme::Plusminus)]
    scheme: Scheme,
    /// Number of variables when the file uses fewer.
    #[arg(long)]
    n: Option<usize>,
    /// Writes the Gram matrices as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    file: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Certificate destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    file: PathBuf,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolyFormat::Text)]
    format: PolyFormat,
}

#[derive(Args)]
struct RhoArgs {
    file: PathBuf,
    #[arg(long)]
    d: u32,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolyFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Plusminus,
    Squares,
}

impl From<Scheme> for PreorderingScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Plusminus => PreorderingScheme::PlusMinus,
            Scheme::Squares => PreorderingScheme::Squares,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Range {
    lo: u32,
    hi: u32,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|e| format!("bad number {t:?}: {e}"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let k = num(s)?;
            (k, k)
        }
    };
    if lo == 0 || lo > hi {
        return Err(format!("range {s:?} must satisfy 1 ≤ lo ≤ hi"));
    }
    Ok(Range { lo, hi })
}

/// Error with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn solver(message: impl fmt::Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn verification(message: impl fmt::Display) -> Self {
        Failure {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<SosError> for Failure {
    fn from(e: SosError) -> Self {
        match e {
            SosError::Solver { .. } | SosError::Sdp(_) => Failure::solver(e),
            _ => Failure::input(e),
        }
    }
}

fn read_poly(path: &Path, nvars: Option<usize>) -> Result<Poly, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Poly::parse_any(&text, nvars).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

/// Side information goes to stderr while stdout carries the data.
fn report(data_in_file: bool, line: &str) {
    if data_in_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

enum Cell {
    Value(f64),
    TimedOut,
    Failed(String),
}

fn theta_table(args: TableArgs) -> Result<(), Failure> {
    match args.n {
        0 => return Err(Failure::input("n must be at least 1")),
        1..=3 => {}
        4 if args.allow_large_n => {
            eprintln!("warning: n = 4 builds 256 Gram blocks per cell and may be slow")
        }
        4 => return Err(Failure::input("n = 4 needs --allow-large-n")),
        n => {
            return Err(Failure::input(format!(
                "n = {n} is not supported (at most 4)"
            )))
        }
    }
    if args.time_budget.is_nan() || args.time_budget <= 0.0 {
        return Err(Failure::input("time budget must be positive"));
    }
    let options = hypercube_sos::sdp::SolverOptions {
        time_limit: Some(Duration::from_secs_f64(args.time_budget)),
        ..hypercube_sos::sdp::SolverOptions::default()
    };
    let cells: Vec<(u32, u32)> = (args.r.lo..=args.r.hi)
        .flat_map(|r| (args.d.lo..=args.d.hi.min(r)).map(move |d| (r, d)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(Failure::input)?;
    let n = args.n;
    let results: Vec<Cell> = pool.install(|| {
        cells
            .par_iter()
            .map(
                |&(r, d)| match sos::theta_upper_bound_with(n, d, r, &options) {
                    Ok(t) => Cell::Value(t.bound),
                    Err(SosError::Solver {
                        status: SolveStatus::TimeLimit,
                    }) => Cell::TimedOut,
                    Err(e) => Cell::Failed(e.to_string()),
                },
            )
            .collect()
    });

    let text = match args.format {
        Format::Csv => table_csv(&args, &cells, &results),
        Format::Json => table_json(n, &cells, &results),
    };
    write_output(args.out.as_deref(), &text)?;
    let failed: Vec<String> = cells
        .iter()
        .zip(&results)
        .filter_map(|(&(r, d), c)| match c {
            Cell::Failed(e) => Some(format!("(r={r}, d={d}): {e}")),
            _ => None,
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::solver(format!(
            "{} cell(s) failed: {}",
            failed.len(),
            failed.join("; ")
        )))
    }
}

fn table_csv(args: &TableArgs, cells: &[(u32, u32)], results: &[Cell]) -> String {
    let mut out = String::from("r");
    for d in args.d.lo..=args.d.hi {
        out.push_str(&format!(",d={d}"));
    }
    out.push('\n');
    let mut it = cells.iter().zip(results).peekable();
    for r in args.r.lo..=args.r.hi {
        out.push_str(&r.to_string());
        for d in args.d.lo..=args.d.hi {
            out.push(',');
            if let Some(((_, _), cell)) = it.next_if(|((cr, cd), _)| *cr == r && *cd == d) {
                match cell {
                    Cell::Value(v) => out.push_str(&format!("{v:.4}")),
                    Cell::TimedOut => out.push('—'),
                    Cell::Failed(_) => out.push_str("ERR"),
                }
            }
        }
        out.push('\n');
    }
    out
}

fn table_json(n: usize, cells: &[(u32, u32)], results: &[Cell]) -> String {
    let rows: Vec<_> = cells
        .iter()
        .zip(results)
        .map(|(&(r, d), cell)| match cell {
            Cell::Value(v) => json!({"n": n, "r": r, "d": d, "status": "ok", "bound": v}),
            Cell::TimedOut => json!({"n": n, "r": r, "d": d, "status": "timeout", "bound": null}),
            Cell::Failed(e) => {
                json!({"n": n, "r": r, "d": d, "status": "error", "bound": null, "error": e})
            }
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("plain data serializes");
    s.push('\n');
    s
}

fn lower_bound(args: LowerBoundArgs) -> Result<(), Failure> {
    let f = read_poly(&args.file, args.n)?;
    let lb = sos::lower_bound(&f, args.r, args.scheme.into())?;
    println!("lower bound: {:.6}", lb.value);
    println!("status: {:?}", lb.report.status);
    let n = f.nvars();
    let norm = f
        .to_basis(Basis::Chebyshev)
        .coeff_one_norm(Basis::Chebyshev);
    let rp = args.r / n as u32;
    let d = f.degree();
    match (rp, apriori_gap_bound(n, d, rp, norm)) {
        (0, _) | (_, GapBound::Vacuous) => println!("a-priori Jackson bound: vacuous at r' = {rp}"),
        (_, GapBound::Certified(g)) => {
            println!("a-priori Jackson bound: f_min - bound <= {g:.6} (r' = {rp}, ||f||_1,T = {norm:.6})")
        }
    }
    if let Some(path) = args.out {
        let blocks: Vec<_> = lb
            .blocks
            .iter()
            .zip(&lb.report.x)
            .map(|(b, x)| {
                let rows: Vec<Vec<f64>> = (0..x.nrows())
                    .map(|i| x.row(i).iter().copied().collect())
                    .collect();
                let basis: Vec<Vec<u32>> = b.basis.iter().map(|a| a.as_slice().to_vec()).collect();
                json!({"multiplier": b.label, "basis": basis, "gram": rows})
            })
            .collect();
        let text = serde_json::to_string_pretty(&json!({"bound": lb.value, "blocks": blocks}))
            .expect("plain data serializes");
        write_output(Some(&path), &text)?;
    }
    Ok(())
}

fn certify_norm(args: CertifyArgs) -> Result<(), Failure> {
    let p = read_poly(&args.file, args.n)?;
    let cert = norm_gap_certificate(&p).map_err(Failure::input)?;
    let residual = cert.verify();
    let mut text = cert.to_json();
    text.push('\n');
    write_output(args.out.as_deref(), &text)?;
    report(args.out.is_some(), &format!("residual: {residual:.3e}"));
    if residual > VERIFY_TOL {
        return Err(Failure::verification(format!(
            "residual {residual:.3e} exceeds {VERIFY_TOL:e}"
        )));
    }
    Ok(())
}

fn verify_certificate(file: PathBuf) -> Result<(), Failure> {
    let text = fs::read_to_string(&file)
        .map_err(|e| Failure::input(format!("{}: {e}", file.display())))?;
    let cert = Certificate::from_json(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", file.display())))?;
    let residual = cert.verify();
    println!("residual: {residual:.3e}");
    cert.check_structure().map_err(Failure::verification)?;
    if residual > VERIFY_TOL {
        return Err(Failure::verification(format!(
            "residual {residual:.3e} exceeds {VERIFY_TOL:e}"
        )));
    }
    println!("certificate ok");
    Ok(())
}

fn jackson_smooth(args: SmoothArgs) -> Result<(), Failure> {
    let f = read_poly(&args.file, args.n)?;
    let n = f.nvars();
    let kernel = product_kernel(n, args.r, args.r * n as u32).map_err(Failure::input)?;
    let g = smooth(&f, &kernel).map_err(Failure::input)?;
    let diff = f
        .to_basis(Basis::Chebyshev)
        .sub(&g)
        .map_err(Failure::input)?
        .coeff_one_norm(Basis::Chebyshev);
    let mut text = match args.format {
        PolyFormat::Text => g.to_string(),
        PolyFormat::Json => g.to_json(),
    };
    text.push('\n');
    write_output(args.out.as_deref(), &text)?;
    let to_file = args.out.is_some();
    let worst = f
        .to_basis(Basis::Chebyshev)
        .iter()
        .filter_map(|(a, _)| kernel.lambda(a))
        .map(|l| (1.0 - l).abs())
        .fold(0.0, f64::max);
    report(
        to_file,
        &format!("max |1 - lambda| on the support of f: {worst:.6}"),
    );
    report(to_file, &format!("||f - smoothed||_1,T: {diff:.6}"));
    Ok(())
}

fn rho(args: RhoArgs) -> Result<(), Failure> {
    let f = read_poly(&args.file, args.n)?;
    let res = sos::rho(&f, args.d)?;
    println!("rho: {:.6e}", res.rho);
    let lam: Vec<String> = res.lambda_star.iter().map(|l| format!("{l:.6e}")).collect();
    println!("lambda: [{}]", lam.join(", "));
    println!("lower bound: {:.6e}", -res.rho);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ThetaTable(a) => theta_table(a),
        Command::LowerBound(a) => lower_bound(a),
        Command::CertifyNorm(a) => certify_norm(a),
        Command::VerifyCertificate { file } => verify_certificate(file),
        Command::JacksonSmooth(a) => jackson_smooth(a),
        Command::Rho(a) => rho(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
