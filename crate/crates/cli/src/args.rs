//! Command-line flags and their validation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hilbert_weak11::measure::{BaseSupport, ConstructionParams};
use hilbert_weak11::verify::{QuadratureParams, VerifyOptions};
use hilbert_weak11::Rational;

use crate::Failure;

#[derive(Parser, Debug)]
#[command(name = "hw11", version, about = "Build and verify the finite-depth weak (1,1) counterexample weight")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Build `w_N` and its sign table and write the weight file.
    Build,
    /// Run the selected checks on a built or loaded weight and write a report.
    Verify,
    /// Compute the L² ratio and its certified lower bound.
    Ratio,
    /// Run the test-function pipeline for the weak-type functionals.
    Demo,
    /// One CSV row of summary quantities per k.
    Scan,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseArg {
    Literal,
    Recursive,
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// A single k or an inclusive range `A..B` (ranges only for `scan`).
    #[arg(long, global = true)]
    pub k: Option<String>,
    #[arg(long, global = true, default_value_t = 2)]
    pub depth: u32,
    #[arg(long = "precision-bits", global = true, default_value_t = ConstructionParams::DEFAULT_PRECISION)]
    pub precision_bits: u32,
    /// Sign-decider tolerance as a rational `p/q`.
    #[arg(long, global = true)]
    pub tolerance: Option<String>,
    #[arg(long, global = true, default_value_t = 3)]
    pub samples: usize,
    /// Demo cells per support piece.
    #[arg(long, global = true, default_value_t = 3)]
    pub grid: usize,
    #[arg(long = "quad-order", global = true, default_value_t = 16)]
    pub quad_order: usize,
    /// Geometric panel levels per half piece in the L² quadrature.
    #[arg(long = "quad-levels", global = true, default_value_t = 12)]
    pub quad_levels: u32,
    #[arg(long = "base-support", global = true, value_enum, default_value_t = BaseArg::Recursive)]
    pub base_support: BaseArg,
    /// Coefficient `c` of the Gaussian floor `c·e^{−x²}`, as a rational.
    #[arg(long = "floor-c", global = true, requires = "floor_window")]
    pub floor_c: Option<String>,
    /// Half-width `R` of the floor window `[−R, R]`, as a rational.
    #[arg(long = "floor-window", global = true, requires = "floor_c")]
    pub floor_window: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Weight file to load instead of building.
    #[arg(long, global = true)]
    pub weight: Option<PathBuf>,
    /// Comma-separated subset of intcompare, mwcompare, terms, decomposition, signs.
    #[arg(long, global = true, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Fill the `wall_seconds` scan column.
    #[arg(long, global = true)]
    pub timing: bool,
}

pub const ALL_CHECKS: [&str; 5] = ["intcompare", "mwcompare", "terms", "decomposition", "signs"];

/// Floor coefficient and window.
#[derive(Clone, Debug, PartialEq)]
pub struct Floor {
    pub c: Rational,
    pub window: Rational,
}

/// Cells of the Gaussian floor on `[−R, R]`.
pub const FLOOR_CELLS: usize = 2187;

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub k_range: Option<(u32, u32)>,
    pub depth: u32,
    pub precision_bits: u32,
    pub tolerance: Option<Rational>,
    pub base: BaseSupport,
    pub verify: VerifyOptions,
    pub quadrature: QuadratureParams,
    pub grid: usize,
    pub floor: Option<Floor>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub weight: Option<PathBuf>,
    pub checks: Vec<String>,
    pub quiet: bool,
    pub timing: bool,
}

fn parse_rational(flag: &str, s: &str) -> Result<Rational, Failure> {
    s.parse::<Rational>().map_err(|e| Failure::config(format!("--{flag}: `{s}` is not a rational: {e}")))
}

fn parse_k(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::config(format!("--k: expected an integer or `A..B`, got `{s}`"));
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(Failure::config(format!("--k: empty range {s}")));
            }
            Ok((a, b))
        }
        None => {
            let k: u32 = s.trim().parse().map_err(|_| bad())?;
            Ok((k, k))
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, Failure> {
        let f = cli.flags;
        let k_range = f.k.as_deref().map(parse_k).transpose()?;
        if let Some((a, b)) = k_range {
            if a != b && cli.command != Command::Scan {
                return Err(Failure::config("--k ranges are only accepted by `scan`".into()));
            }
        }
        let tolerance = f.tolerance.as_deref().map(|s| parse_rational("tolerance", s)).transpose()?;
        let floor = match (f.floor_c.as_deref(), f.floor_window.as_deref()) {
            (Some(c), Some(r)) => {
                Some(Floor { c: parse_rational("floor-c", c)?, window: parse_rational("floor-window", r)? })
            }
            _ => None,
        };
        let checks = match f.checks {
            Some(list) => {
                let mut out = Vec::new();
                for c in list {
                    let c = c.trim().to_string();
                    if !ALL_CHECKS.contains(&c.as_str()) {
                        return Err(Failure::config(format!(
                            "--checks: unknown check `{c}` (expected {})",
                            ALL_CHECKS.join(", ")
                        )));
                    }
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
                out
            }
            None => ALL_CHECKS.iter().map(|s| s.to_string()).collect(),
        };
        if f.samples == 0 {
            return Err(Failure::config("--samples must be positive".into()));
        }
        if f.grid == 0 {
            return Err(Failure::config("--grid must be positive".into()));
        }
        if f.threads == Some(0) {
            return Err(Failure::config("--threads must be positive".into()));
        }
        let quadrature = QuadratureParams { order: f.quad_order, levels: f.quad_levels, ..QuadratureParams::default() };
        quadrature.validate().map_err(Failure::from)?;
        let needs_k = match cli.command {
            Command::Verify | Command::Ratio | Command::Demo => f.weight.is_none(),
            Command::Build | Command::Scan => true,
        };
        if needs_k && k_range.is_none() {
            return Err(Failure::config("--k is required".into()));
        }
        let cfg = RunConfig {
            command: cli.command,
            k_range,
            depth: f.depth,
            precision_bits: f.precision_bits,
            tolerance,
            base: match f.base_support {
                BaseArg::Literal => BaseSupport::Literal,
                BaseArg::Recursive => BaseSupport::Recursive,
            },
            verify: VerifyOptions {
                samples: f.samples,
                seed: f.seed,
                precision: f.precision_bits,
                ..VerifyOptions::default()
            },
            quadrature,
            grid: f.grid,
            floor,
            threads: f.threads,
            out: f.out,
            report: f.report,
            weight: f.weight,
            checks,
            quiet: f.quiet,
            timing: f.timing,
        };
        if let Some((a, b)) = cfg.k_range {
            for k in a..=b {
                cfg.params(k, cfg.depth)?;
            }
        }
        Ok(cfg)
    }

    /// Construction parameters for one `(k, depth)`, validated.
    pub fn params(&self, k: u32, depth: u32) -> Result<ConstructionParams, Failure> {
        let mut p = ConstructionParams::new(k, depth)?
            .with_precision(self.precision_bits)?
            .with_base_support(self.base);
        if let Some(t) = &self.tolerance {
            p = p.with_tolerance(t.clone())?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn runs(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == check)
    }
}
