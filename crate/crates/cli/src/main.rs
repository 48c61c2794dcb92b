//! `stj`: command-line front end for stj-core.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod report;
mod spec;

/// A failed run: exit code, error name and a one-line message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub name: String,
    pub message: String,
}

impl Failure {
    pub fn input(message: String) -> Self {
        Self { code: 2, name: "InvalidInput".into(), message }
    }

    pub fn io(message: String) -> Self {
        Self { code: 1, name: "IoError".into(), message }
    }

    pub fn core(e: stj_core::Error) -> Self {
        let code = if e.is_validation() { 2 } else { 1 };
        Self { code, name: e.name().into(), message: e.to_string() }
    }
}

impl From<stj_core::Error> for Failure {
    fn from(e: stj_core::Error) -> Self {
        Self::core(e)
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{s}`"));
    }
    let a = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect()
}

/// `p ∈ [1, ∞]`, with `inf` spelled literally.
fn parse_p(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number or `inf`"))?;
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(format!("p must lie in [1, inf], got {s}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "stj", version, about = "Stieltjes calculus toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory for the JSON report and CSV tables.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write CSV tables.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Numerical tolerance; overrides STJ_TOL.
    #[arg(long, global = true, value_parser = parse_positive)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Inspect a derivator.
    Derivator {
        #[command(subcommand)]
        action: DerivatorCmd,
    },
    /// Lebesgue–Stieltjes integral of f over [c, d).
    Integrate {
        g: PathBuf,
        f: PathBuf,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        interval: Option<(f64, f64)>,
        #[arg(long, value_enum, default_value_t = IntegrateMethod::Quad)]
        method: IntegrateMethod,
        /// Cells for the direct Riemann–Stieltjes sum.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Stieltjes derivative of f at a point.
    Derive {
        g: PathBuf,
        f: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
        /// Ignore a declared derivative.
        #[arg(long)]
        numeric: bool,
    },
    /// L^p_g norm of a function, or the Sobolev norm with --sobolev.
    Norm {
        g: PathBuf,
        f: PathBuf,
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        interval: Option<(f64, f64)>,
        /// Treat the file as a Sobolev function and report the embedding.
        #[arg(long)]
        sobolev: bool,
    },
    /// Factor f = f̃ ∘ g.
    Factorize {
        g: PathBuf,
        f: PathBuf,
        #[arg(long, default_value_t = 20_001)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-6, value_parser = parse_positive)]
        recon_tol: f64,
    },
    /// Polynomial approximation of f in powers of g.
    Weierstrass {
        g: PathBuf,
        f: PathBuf,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = FitArg::LeastSquares)]
        method: FitArg,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
    },
    /// The g-exponential exp_g(λ; α, t).
    Expg {
        g: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<f64>,
        /// Check the integral equation on a grid of this many points.
        #[arg(long)]
        verify: Option<usize>,
    },
    /// Extend a Sobolev function beyond its interval.
    Extend {
        g: PathBuf,
        sobolev: PathBuf,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        window: (f64, f64),
        #[arg(long, value_parser = parse_p)]
        p: f64,
    },
    /// Finite-scale compactness certificates.
    Compact {
        #[command(subcommand)]
        kind: CompactCmd,
    },
    /// Additive and multiplicative decompositions.
    Decompose {
        #[command(subcommand)]
        kind: DecomposeCmd,
    },
}

#[derive(Subcommand, Debug)]
pub enum DerivatorCmd {
    /// Jumps, constancy intervals and the continuous/jump split.
    Analyze { g: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrateMethod {
    Quad,
    Direct,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitArg {
    LeastSquares,
    ChebyshevNodes,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricArg {
    Sup,
    Lp,
    Dc,
}

#[derive(clap::Args, Debug)]
pub struct FamilyArgs {
    pub g: PathBuf,
    pub family: PathBuf,
    #[arg(long, value_parser = parse_positive)]
    pub eps: f64,
    /// Comma-separated δ values; a log grid over the window by default.
    #[arg(long, value_parser = parse_list)]
    pub delta: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum CompactCmd {
    Bc(FamilyArgs),
    Buc(FamilyArgs),
    Dc {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: Option<usize>,
    },
    Lp {
        g: PathBuf,
        family: PathBuf,
        #[arg(long, value_parser = parse_positive)]
        eps: f64,
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        n: Option<usize>,
    },
    Net {
        g: PathBuf,
        family: PathBuf,
        #[arg(long, value_parser = parse_positive)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = MetricArg::Sup)]
        metric: MetricArg,
        #[arg(long, value_parser = parse_p, default_value = "2")]
        p: f64,
        #[arg(long, default_value_t = 64)]
        cap: usize,
    },
    /// Truncated sequences in ℓ^p.
    Seq {
        sequences: PathBuf,
        #[arg(long, value_parser = parse_positive)]
        eps: f64,
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum DecomposeCmd {
    Add {
        g: PathBuf,
        f: PathBuf,
    },
    Mul {
        g: PathBuf,
        f: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
    },
}

fn tolerance(flag: Option<f64>) -> Result<f64, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("STJ_TOL") {
        Ok(s) => parse_positive(&s).map_err(|e| Failure::input(format!("STJ_TOL: {e}"))),
        Err(_) => Ok(stj_core::DEFAULT_TOL),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(format!("--threads: {e}")))?;
    }
    let tol = tolerance(cli.tol)?;
    let output = commands::dispatch(&cli.command, tol)?;
    report::emit(&output, cli.out.as_deref(), cli.csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let message = f.message.replace('\n', " ");
            eprintln!("error[{}]: {}", f.name, message);
            ExitCode::from(f.code)
        }
    }
}
