use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use degpar::solution::Variant;
use degpar::spectrum::BoundaryKind;

use crate::output::Format;

/// Spectra, modal solutions and uniqueness checks for degenerate parabolic
/// problems with nonlocal conditions.
///
/// Complex numbers are written `re,im`. Every output file echoes the
/// settings (including defaults) it was produced with.
#[derive(Debug, Parser)]
#[command(name = "degpar", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv for tables, json for reports]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Positive zeros of the Bessel function J_nu
    Roots(RootsArgs),
    /// Spatial eigenvalues of X'' + mu x^e X = 0 on (0, 1)
    Eigen(EigenArgs),
    /// Temporal spectral parameters with admissibility flags
    Lambda(LambdaArgs),
    /// Assemble a mode and dump field samples
    Solve(SolveArgs),
    /// Residual, boundary, nonlocal and energy checks for a mode
    Verify(VerifyArgs),
    /// Uniqueness verdict for a given spectral parameter
    Classify(ClassifyArgs),
    /// Classify the alpha plane on a square lattice
    Scan(ScanArgs),
    /// Compare splits of mu between the y and t factors of the
    /// two-condition problem
    #[command(name = "adjudicate-splitA")]
    AdjudicateSplitA(AdjudicateArgs),
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    /// Bessel order in (0, 1]
    #[arg(long)]
    pub nu: f64,
    /// Number of zeros
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EigenMethod {
    /// Bessel closed form (Dirichlet at both ends only)
    Closed,
    /// Shooting with RK4
    Shooting,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    /// Degeneracy exponent e >= 0
    #[arg(long)]
    pub exponent: f64,
    /// Number of eigenvalues
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    /// End conditions at x = 0 and x = 1 (D = Dirichlet, N = Neumann)
    #[arg(long, default_value = "DD")]
    pub bc: BoundaryKind,
    /// Solver [default: closed for DD, shooting otherwise]
    #[arg(long, value_enum)]
    pub method: Option<EigenMethod>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Branch {
    /// atan2(im, re)
    Principal,
    /// arctan(im / re)
    Arctan,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    /// Nonlocal coefficient alpha as re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: (f64, f64),
    /// Degeneracy exponent of t
    #[arg(long)]
    pub k: f64,
    /// Separation constant; if omitted, generated from --n and --m
    #[arg(long, conflicts_with_all = ["n", "m"])]
    pub mu: Option<f64>,
    /// Exponent n (with --m, tabulates mu_1l + mu_2p)
    #[arg(long, requires = "m")]
    pub n: Option<f64>,
    /// Exponent m
    #[arg(long, requires = "n")]
    pub m: Option<f64>,
    /// Single shift s; otherwise 0..=s-max
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long, default_value_t = 8)]
    pub s_max: u32,
    #[arg(long, default_value_t = 5)]
    pub l_max: usize,
    #[arg(long, default_value_t = 5)]
    pub p_max: usize,
    #[arg(long, value_enum, default_value_t = Branch::Principal)]
    pub branch: Branch,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem: 1, p2..p9 (mixed boundary data) or A (two nonlocal conditions)
    #[arg(long, default_value = "1", value_parser = parse_variant)]
    pub problem: Variant,
    /// Degeneracy exponent of x
    #[arg(long)]
    pub n: f64,
    /// Degeneracy exponent of y
    #[arg(long)]
    pub m: f64,
    /// Degeneracy exponent of t
    #[arg(long)]
    pub k: f64,
    /// Nonlocal coefficient in t (problems 1, p2..p9), re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Option<(f64, f64)>,
    /// Nonlocal coefficient in y (problem A), re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta: Option<(f64, f64)>,
    /// Nonlocal coefficient in t (problem A), re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub gamma: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct ModeArgs {
    /// Mode l,p,s (problem A: l,s or l,s_y,s_t)
    #[arg(long, value_parser = parse_indices)]
    pub mode: Indices,
    /// Share of mu given to the y factor (problem A)
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// Samples per axis on the closed unit cube
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// Residual grid nodes per axis
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Interior margin of the residual grid
    #[arg(long, default_value_t = 1e-3)]
    pub offset: f64,
    /// Samples per axis on boundary faces and nonlocal planes
    #[arg(long, default_value_t = 41)]
    pub surface_samples: usize,
    /// Simpson panels per axis for the energy identity
    #[arg(long, default_value_t = 128)]
    pub panels: usize,
    /// Finite-difference steps
    #[arg(long, value_delimiter = ',', default_value = "1e-2,5e-3,2.5e-3")]
    pub fd_steps: Vec<f64>,
    /// Finite-difference grid nodes per axis
    #[arg(long, default_value_t = 7)]
    pub fd_grid: usize,
    /// Interior margin of the finite-difference grid
    #[arg(long, default_value_t = 0.05)]
    pub fd_offset: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoxArgs {
    #[arg(long, default_value_t = 5)]
    pub l_max: usize,
    #[arg(long, default_value_t = 5)]
    pub p_max: usize,
    #[arg(long, default_value_t = 8)]
    pub s_max: u32,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Spectral parameter re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambda: (f64, f64),
    #[command(flatten)]
    pub search: BoxArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Degeneracy exponent of x
    #[arg(long)]
    pub n: f64,
    /// Degeneracy exponent of y
    #[arg(long)]
    pub m: f64,
    /// Degeneracy exponent of t
    #[arg(long)]
    pub k: f64,
    /// Lattice half-width; points with |alpha| > r-max are dropped
    #[arg(long, default_value_t = 2.0)]
    pub r_max: f64,
    /// Lattice points per axis
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    /// Mode whose spectral parameter is classified, l,p,s
    #[arg(long, value_parser = parse_indices, default_value = "1,1,0")]
    pub mode: Indices,
    #[command(flatten)]
    pub search: BoxArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AdjudicateArgs {
    /// Degeneracy exponent of x
    #[arg(long)]
    pub n: f64,
    /// Degeneracy exponent of y
    #[arg(long)]
    pub m: f64,
    /// Degeneracy exponent of t
    #[arg(long)]
    pub k: f64,
    /// Nonlocal coefficient in y, re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta: (f64, f64),
    /// Nonlocal coefficient in t, re,im
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub gamma: (f64, f64),
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Common shift for the y and t factors
    #[arg(long, default_value_t = 0)]
    pub s: u32,
    /// Shift of the y factor [default: --s]
    #[arg(long)]
    pub s_y: Option<u32>,
    /// Shift of the t factor [default: --s]
    #[arg(long)]
    pub s_t: Option<u32>,
    /// Candidate splits
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    pub thetas: Vec<f64>,
    /// Residual grid nodes per axis
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Interior margin of the residual grid
    #[arg(long, default_value_t = 1e-3)]
    pub offset: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected re,im but got '{s}'"))?;
    let p = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{v}' is not a number"))
            .and_then(|x| {
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(format!("'{v}' is not finite"))
                }
            })
    };
    Ok((p(re)?, p(im)?))
}

/// Comma-separated mode indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indices(pub Vec<usize>);

fn parse_indices(s: &str) -> Result<Indices, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{v}' is not a nonnegative integer"))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if (2..=3).contains(&v.len()) {
                Ok(Indices(v))
            } else {
                Err(format!(
                    "expected 2 or 3 comma-separated indices, got '{s}'"
                ))
            }
        })
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}
