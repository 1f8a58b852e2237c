use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

const ENVIRONMENT: &str = "Environment:\n  SPECGEO_THREADS  cap on worker threads (results do not depend on it)\n\n\
Exit status: 0 success, 1 usage or I/O error, 2 computed but a tolerance or contract check failed.";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "specgeo",
    version,
    about = "Numerical spectral geometry on flat and noncommutative tori",
    after_help = ENVIRONMENT
)]
pub struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Eigenvalue shells |k|² of the Laplacian or Dirac operator on the flat torus T^d
    Shells(ShellsArgs),
    /// Epstein zeta Σ'|k|^{-s}, polynomial-weighted lattice zetas and the twisted 1-d series, with Laurent data
    Zeta(ZetaArgs),
    /// Continued fractions, approximation exponents and the badly-approximable test for deformation matrices
    Dioph(DiophArgs),
    /// Heat-trace coefficients a_k: least-squares fit from samples, or Seeley-DeWitt invariants of a Laplace-type operator
    Heat(HeatArgs),
    /// Wodzicki residue of an order -d classical symbol, with the Dixmier-trace comparison
    Wres(WresArgs),
    /// Cesàro partial-sum estimate of the Dixmier trace of (1+Δ)^{-p} on T^d
    Dixmier(DixmierArgs),
    /// Spectral action Tr f(D²/Λ²) on T^d against its heat-coefficient expansion over a Λ ladder
    Action(ActionArgs),
    /// Spectral action, Yang-Mills density τ(FF) and the ζ_{D_A}(0) identity on the noncommutative torus
    Nctorus(NctorusArgs),
    /// Moyal star products, left-multiplication norm bounds and Dixmier traces in the oscillator basis f_mn
    Moyal(MoyalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ShellsArgs {
    /// Torus dimension d.
    #[arg(long)]
    pub dim: usize,
    /// Largest |k|² enumerated.
    #[arg(long)]
    pub max: u64,
    /// Count Dirac eigenvalues (spinor multiplicity 2^⌊d/2⌋) instead of Laplacian ones.
    #[arg(long)]
    pub dirac: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("series").required(true).args(["epstein", "poly", "twisted"])))]
pub struct ZetaArgs {
    /// Z_n(s) = Σ'_{k∈Z^n} |k|^{-s}.
    #[arg(long, num_args = 2, value_names = ["N", "S"], allow_negative_numbers = true)]
    pub epstein: Option<Vec<String>>,
    /// Σ' k^p |k|^{-s} with exponents P given as p1,..,pn; the pole sits at s = n + |p|.
    #[arg(long, num_args = 3, value_names = ["N", "P", "S"], allow_negative_numbers = true)]
    pub poly: Option<Vec<String>>,
    /// Σ'_{k∈Z} |k + A|^{-s}.
    #[arg(long, num_args = 2, value_names = ["A", "S"], allow_negative_numbers = true)]
    pub twisted: Option<Vec<String>>,
    /// Imaginary part of s.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub im: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["value", "matrix"])))]
pub struct DiophArgs {
    /// A real number: p/q is exact, a decimal is read as the nearest double.
    #[arg(long, allow_hyphen_values = true)]
    pub value: Option<String>,
    /// Read a decimal --value as the exact rational it spells.
    #[arg(long, requires = "value")]
    pub exact: bool,
    /// JSON matrix M = Θ/2π; rows of numbers (doubles) or strings (exact rationals).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// The matrix file holds Θ itself; divide by 2π first.
    #[arg(long, requires = "matrix")]
    pub divide_2pi: bool,
    /// Number of partial quotients.
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    /// Largest |u|∞ tried in the matrix test.
    #[arg(long, default_value_t = 2)]
    pub search_depth: usize,
    /// Allowed excess of the approximation exponent over 1.
    #[arg(long, default_value_t = specgeo::diophantine::DEFAULT_EXPONENT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("mode").required(true).args(["fit", "sdw"])))]
pub struct HeatArgs {
    /// CSV of t,trace samples to fit.
    #[arg(long, requires = "dim")]
    pub fit: Option<PathBuf>,
    /// Dimension of the fitted trace.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Highest coefficient index in the fit.
    #[arg(long, default_value_t = 12)]
    pub k_max: usize,
    /// JSON description of a constant-coefficient Laplace-type operator.
    #[arg(long)]
    pub sdw: Option<PathBuf>,
    /// Constant smearing function multiplying the local coefficients.
    #[arg(long, default_value_t = 1.0)]
    pub smear: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// |ξ|^{-d}, the principal symbol of (1+Δ)^{-d/2}
    Laplacian,
    /// ξ^p |ξ|^{-d-|p|}
    Monomial,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["symbol", "input"])))]
pub struct WresArgs {
    #[arg(long, value_enum)]
    pub symbol: Option<SymbolKind>,
    /// Torus dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Bundle rank for the Laplacian symbol.
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Exponents p1,..,pd of the monomial symbol.
    #[arg(long, value_delimiter = ',')]
    pub exponent: Vec<u32>,
    /// JSON polynomial symbol {dimension, volume, entries}.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Tolerance of Tr_Dix = WRes/d.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DixmierArgs {
    /// Torus dimension d (2 or 4).
    #[arg(long)]
    pub dim: usize,
    /// Number of singular values summed.
    #[arg(long = "N")]
    pub n: u64,
    /// Power p of (1+Δ)^{-p}; defaults to d/2.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Relative tolerance of σ_N/ln N against the zeta-residue value.
    #[arg(long, default_value_t = 0.10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// f = 1 on [0, 1], 0 beyond
    Sharp,
    /// f(x) = e^{-x}
    Exp,
}

#[derive(Debug, Args, Serialize)]
pub struct ActionArgs {
    /// Torus dimension d.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, value_enum)]
    pub cutoff: CutoffKind,
    /// Comma-separated Λ values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda_ladder: Vec<f64>,
    /// Relative tolerance of the expansion at the largest Λ.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NcMode {
    /// Λ-expansion of Tr f(D_A²/Λ²)
    Action,
    /// τ(F F) and the residue integrals I2, I3, I4
    Ym,
    /// ζ_{D_A}(0) from the residue integrals against -(4π²/3)τ(F F)
    Check,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "random"])))]
pub struct NctorusArgs {
    #[arg(value_enum)]
    pub mode: NcMode,
    /// JSON one-form {n, theta (row-major), components}.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Check this many random one-forms over the golden-ratio Θ on T⁴.
    #[arg(long, requires = "seed")]
    pub random: Option<usize>,
    /// Seed of the random one-form generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fourier modes per random component.
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Largest |l|∞ of a random mode.
    #[arg(long, default_value_t = 2)]
    pub radius: i64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = CutoffKind::Exp)]
    pub cutoff: CutoffKind,
    /// Relative tolerance of the two-path identity.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoyalMode {
    /// f ⋆ g as a coefficient matrix
    Star,
    /// Tr⁺(L_f (D² + ε²)^{-N}) against its closed form
    Dixmier,
    /// ‖L_f‖ against (2πθ)^{-N/2}‖f‖₂
    Norms,
}

#[derive(Debug, Args, Serialize)]
pub struct MoyalArgs {
    #[arg(value_enum)]
    pub mode: MoyalMode,
    /// Deformation parameter θ > 0.
    #[arg(long)]
    pub theta: f64,
    /// Largest oscillator index K per coordinate pair.
    #[arg(long)]
    pub cutoff: usize,
    /// JSON {n, f: [{m, n, re, im}], g: [...]}.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Absolute tolerance of the Dixmier limit.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}
