use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use specgeo::diophantine::{
    approx_exponent, cf_expand_real, matrix_badly_approximable, theta_over_2pi, ExpansionStatus, ExponentEstimate,
    MatrixTestOptions, MatrixVerdict, Real,
};
use specgeo::dixmier_trace::{dixmier_estimate, DixmierEstimate};
use specgeo::heat_asymptotics::{
    fit_heat_coefficients, local_invariants, seeley_dewitt, HeatCoefficients, HeatFit, LaplaceTypeData,
    LocalInvariants, FIT_CONDITION_LIMIT,
};
use specgeo::lattice_spectra::{dirac_spectrum, laplace_spectrum, max_norm_sq_for_heat, DEFAULT_TAIL_TOL};
use specgeo::moyal_plane::{
    left_mult_norm_bound, moyal_dixmier, star, EntryInput, MoyalDixmier, MoyalMatrix, NormBound,
};
use specgeo::nc_torus::{
    golden_theta, nc_integral_powers, spectral_action_nc, two_path_batch, two_path_check, yang_mills_density,
    NcAction, NcIntegrals, OneForm, OneFormInput, TwoPathCheck, YM_CONSTANT,
};
use specgeo::spectral_action::{expansion_vs_direct, AVERAGING_WINDOW, torus_coefficients_from_zeta, ComparisonRow, CutoffFunction};
use specgeo::wodzicki_residue::{connes_trace_check, wres, ConnesCheck, PolySymbol};
use specgeo::zeta_engine::{epstein_zeta, poly_zeta, twisted_zeta_1d, MeroValue, PolyExponent};
use specgeo::Complex64;

use crate::args::*;
use crate::emit::{finite_json, Cell, Table};
use crate::error::{CliError, FlagContext};

/// Structured outcome of one subcommand.
pub struct Report {
    pub result: serde_json::Value,
    pub table: Option<Table>,
    pub default_format: Format,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub violations: Vec<String>,
}

impl Report {
    fn json<T: Serialize>(value: &T) -> Result<Self, CliError> {
        Ok(Report {
            result: finite_json(value)?,
            table: None,
            default_format: Format::Json,
            tolerances: BTreeMap::new(),
            violations: Vec::new(),
        })
    }

    fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self.default_format = Format::Csv;
        self
    }

    fn tolerance(mut self, name: &'static str, value: f64) -> Self {
        self.tolerances.insert(name, value);
        self
    }

    fn violation_if(mut self, failed: bool, msg: impl FnOnce() -> String) -> Self {
        if failed {
            self.violations.push(msg());
        }
        self
    }
}

pub fn run(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Shells(a) => shells(a),
        Command::Zeta(a) => zeta(a),
        Command::Dioph(a) => dioph(a),
        Command::Heat(a) => heat(a),
        Command::Wres(a) => wres_cmd(a),
        Command::Dixmier(a) => dixmier(a),
        Command::Action(a) => action(a),
        Command::Nctorus(a) => nctorus(a),
        Command::Moyal(a) => moyal(a),
    }
}

fn read_text(flag: &str, path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{flag}: {}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(flag: &str, path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(flag, path)?).map_err(|e| CliError::usage(flag, format!("{}: {e}", path.display())))
}

fn parse_num<T: std::str::FromStr>(flag: &str, what: &str, s: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| CliError::usage(flag, format!("{what} {s:?}: {e}")))
}

fn shells(a: &ShellsArgs) -> Result<Report, CliError> {
    let spec = if a.dirac { dirac_spectrum(a.dim, a.max) } else { laplace_spectrum(a.dim, a.max) }.flag("--dim")?;
    let mut table = Table::new(&["norm_sq", "count"]);
    for s in &spec.shells {
        table.push(vec![Cell::from(s.norm_sq), Cell::from(s.lattice_count * spec.spinor_rank)]);
    }
    Ok(Report::json(&spec)?.with_table(table))
}

fn zeta(a: &ZetaArgs) -> Result<Report, CliError> {
    let point = |flag: &str, s: &str| -> Result<Complex64, CliError> { Ok(Complex64::new(parse_num(flag, "s", s)?, a.im)) };
    let value: MeroValue = if let Some(v) = &a.epstein {
        let n = parse_num("--epstein", "dimension", &v[0])?;
        epstein_zeta(n, point("--epstein", &v[1])?).flag("--epstein")?
    } else if let Some(v) = &a.poly {
        let n = parse_num("--poly", "dimension", &v[0])?;
        let p = v[1].split(',').map(|x| parse_num("--poly", "exponent", x)).collect::<Result<Vec<u32>, _>>()?;
        poly_zeta(n, &PolyExponent(p), point("--poly", &v[2])?).flag("--poly")?
    } else if let Some(v) = &a.twisted {
        let shift = parse_num("--twisted", "twist", &v[0])?;
        twisted_zeta_1d(shift, point("--twisted", &v[1])?).flag("--twisted")?
    } else {
        unreachable!("clap requires one series")
    };
    Report::json(&value)
}

/// Continued fraction of a single number; big integers are written as
/// decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfReport {
    pub value: f64,
    pub partial_quotients: Vec<String>,
    pub convergents: Vec<[String; 2]>,
    pub status: ExpansionStatus,
    pub rational: bool,
    /// Absent for rational input.
    pub exponent: Option<ExponentEstimate>,
}

/// Matrix entries in JSON: plain numbers or exact "p/q" strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Number(f64),
    Text(String),
}

fn dioph(a: &DiophArgs) -> Result<Report, CliError> {
    if let Some(s) = &a.value {
        let x = if a.exact || s.contains('/') {
            Real::parse(s).flag("--value")?
        } else {
            Real::Float(parse_num("--value", "number", s)?)
        };
        let cf = cf_expand_real(&x, a.depth).flag("--depth")?;
        let exponent = if cf.rational { None } else { Some(approx_exponent(&x, a.depth).flag("--depth")?) };
        let report = CfReport {
            value: cf.value,
            partial_quotients: cf.partial_quotients.iter().map(|q| q.to_string()).collect(),
            convergents: cf.convergents.iter().map(|(p, q)| [p.to_string(), q.to_string()]).collect(),
            status: cf.status,
            rational: cf.rational,
            exponent,
        };
        return Report::json(&report);
    }
    let path = a.matrix.as_ref().expect("clap requires --value or --matrix");
    let rows: Vec<Vec<Entry>> = read_json("--matrix", path)?;
    let m: Vec<Vec<Real>> = if a.divide_2pi {
        let theta = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| match e {
                        Entry::Number(x) => Ok(*x),
                        Entry::Text(t) => parse_num("--matrix", "entry", t),
                    })
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        theta_over_2pi(&theta)
    } else {
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|e| match e {
                        Entry::Number(x) => Ok(Real::Float(*x)),
                        Entry::Text(t) => Real::parse(t).flag("--matrix"),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let verdict: MatrixVerdict =
        matrix_badly_approximable(&m, a.search_depth, MatrixTestOptions { cf_depth: a.depth, tol: a.tol })
            .flag("--matrix")?;
    Ok(Report::json(&verdict)?.tolerance("exponent_excess", a.tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdwReport {
    pub coefficients: HeatCoefficients,
    pub invariants: LocalInvariants,
}

fn heat(a: &HeatArgs) -> Result<Report, CliError> {
    if let Some(path) = &a.fit {
        let d = a.dim.expect("clap requires --dim with --fit");
        let text = read_text("--fit", path)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut samples = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CliError::usage("--fit", e))?;
            if rec.len() != 2 {
                return Err(CliError::usage("--fit", format!("line {}: expected t,trace", i + 1)));
            }
            // A leading header row is allowed.
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(t), Ok(v)) => samples.push((t, v)),
                _ if i == 0 => {}
                _ => return Err(CliError::usage("--fit", format!("line {}: not two numbers", i + 1))),
            }
        }
        let fit: HeatFit = fit_heat_coefficients(&samples, d, a.k_max).flag("--fit")?;
        let warning = fit.warning.clone();
        return Ok(Report::json(&fit)?
            .tolerance("condition_limit", FIT_CONDITION_LIMIT)
            .violation_if(warning.is_some(), || warning.unwrap_or_default()));
    }
    let path = a.sdw.as_ref().expect("clap requires --fit or --sdw");
    let data: LaplaceTypeData = read_json("--sdw", path)?;
    let report = SdwReport {
        coefficients: seeley_dewitt(&data, a.smear).flag("--sdw")?,
        invariants: local_invariants(&data).flag("--sdw")?,
    };
    Report::json(&report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WresReport {
    pub dimension: usize,
    pub residue: Complex64,
    /// Present for the Laplacian symbol.
    pub connes: Option<ConnesCheck>,
}

fn wres_cmd(a: &WresArgs) -> Result<Report, CliError> {
    let symbol = match (a.symbol, &a.input) {
        (Some(SymbolKind::Laplacian), _) => {
            let d = a.dim.ok_or_else(|| CliError::usage("--dim", "required for the Laplacian symbol"))?;
            PolySymbol::laplacian(d, a.rank)
        }
        (Some(SymbolKind::Monomial), _) => {
            if a.exponent.is_empty() {
                return Err(CliError::usage("--exponent", "required for the monomial symbol"));
            }
            if a.dim.is_some_and(|d| d != a.exponent.len()) {
                return Err(CliError::usage("--exponent", "length must equal --dim"));
            }
            PolySymbol::monomial(&a.exponent)
        }
        (None, Some(path)) => read_json("--input", path)?,
        (None, None) => unreachable!("clap requires --symbol or --input"),
    };
    symbol.validate().flag("--input")?;
    let residue = wres(&symbol).flag("--dim")?;
    let connes = match a.symbol {
        Some(SymbolKind::Laplacian) => Some(connes_trace_check(symbol.dimension, a.rank).flag("--dim")?),
        _ => None,
    };
    let report = WresReport { dimension: symbol.dimension, residue, connes };
    let tol = a.tol;
    Ok(Report::json(&report)?.tolerance("connes_relative", tol).violation_if(
        connes.is_some_and(|c| (c.dixmier - c.wres_over_d).abs() > tol * c.wres_over_d.abs().max(1.0)),
        || format!("Tr_Dix and WRes/d differ by more than {tol:e}"),
    ))
}

fn dixmier(a: &DixmierArgs) -> Result<Report, CliError> {
    let p = a.exponent.unwrap_or(a.dim as f64 / 2.0);
    let est: DixmierEstimate = dixmier_estimate(a.dim, p, a.n).map_err(|e| {
        let flag = match e {
            specgeo::SpecError::InvalidArgument(ref m) if m.contains("N ") => "--N",
            specgeo::SpecError::InvalidArgument(ref m) if m.contains("dimension") => "--dim",
            _ => "--exponent",
        };
        crate::error::at_flag(flag, e)
    })?;
    let mut table = Table::new(&["n", "sigma", "mean", "cesaro"]);
    for r in &est.ladder {
        table.push(vec![Cell::from(r.n), r.sigma.into(), r.mean.into(), r.cesaro.into()]);
    }
    let target = est.zeta_residue;
    let gap = (est.raw - target).abs();
    let tol = a.tol;
    Ok(Report::json(&est)?.with_table(table).tolerance("relative", tol).violation_if(
        gap > tol * target.abs().max(f64::MIN_POSITIVE),
        || format!("sigma_N/ln N = {} is {:.3}% from {target} at N = {}", est.raw, 100.0 * gap / target.abs(), est.n_max),
    ))
}

fn cutoff(kind: CutoffKind) -> CutoffFunction {
    match kind {
        CutoffKind::Sharp => CutoffFunction::Sharp,
        CutoffKind::Exp => CutoffFunction::Exponential,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub coefficients: HeatCoefficients,
    pub rows: Vec<ComparisonRow>,
}

fn action(a: &ActionArgs) -> Result<Report, CliError> {
    let top = a.lambda_ladder.iter().copied().fold(0.0, f64::max);
    if !(top.is_finite() && top > 0.0) || a.lambda_ladder.iter().any(|l| !(*l > 0.0)) {
        return Err(CliError::usage("--lambda-ladder", "values must be positive and finite"));
    }
    let f = cutoff(a.cutoff);
    let max_norm_sq = match a.cutoff {
        // The averaged gap samples Λ up to (1 + AVERAGING_WINDOW)Λ.
        CutoffKind::Sharp => (top * (1.0 + AVERAGING_WINDOW)).powi(2).ceil() as u64 + 1,
        CutoffKind::Exp => max_norm_sq_for_heat(a.dim, 1.0 / (top * top), 0.1 * DEFAULT_TAIL_TOL),
    };
    let spec = dirac_spectrum(a.dim, max_norm_sq).flag("--dim")?;
    let coefficients = torus_coefficients_from_zeta(a.dim, spec.spinor_rank).flag("--dim")?;
    let rows = expansion_vs_direct(&spec, &f, &coefficients, &a.lambda_ladder).flag("--lambda-ladder")?;
    let mut table = Table::new(&[
        "lambda",
        "direct",
        "expansion",
        "abs_gap",
        "rel_gap",
        "gap_over_lambda_sq",
        "averaged_gap_over_lambda_sq",
    ]);
    for r in &rows {
        table.push(
            [r.lambda, r.direct, r.expansion, r.abs_gap, r.rel_gap, r.gap_over_lambda_sq, r.averaged_gap_over_lambda_sq]
                .map(Cell::from)
                .to_vec(),
        );
    }
    let last = *rows.iter().max_by(|x, y| x.lambda.total_cmp(&y.lambda)).expect("ladder is nonempty");
    let tol = a.tol;
    Ok(Report::json(&ActionReport { coefficients, rows })?.with_table(table).tolerance("relative", tol).violation_if(
        last.rel_gap > tol,
        || format!("relative gap {:e} at Lambda = {} exceeds {tol:e}", last.rel_gap, last.lambda),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YmReport {
    pub tau_ff: f64,
    pub integrals: NcIntegrals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub seed: u64,
    pub checks: Vec<TwoPathCheck>,
    /// max |difference| / (1 + |τ(FF)|).
    pub max_scaled_residual: f64,
}

fn scaled_residual(c: &TwoPathCheck) -> f64 {
    c.difference.abs() / (1.0 + c.ym_term.abs() / YM_CONSTANT)
}

fn load_one_form(a: &NctorusArgs) -> Result<OneForm, CliError> {
    let path = a.input.as_ref().ok_or_else(|| CliError::usage("--random", "only the check mode draws random one-forms"))?;
    let input: OneFormInput = read_json("--input", path)?;
    input.to_one_form().flag("--input")
}

fn nctorus(a: &NctorusArgs) -> Result<Report, CliError> {
    let tol = a.tol;
    match a.mode {
        NcMode::Action => {
            let form = load_one_form(a)?;
            let act: NcAction =
                spectral_action_nc(form.dimension(), &form, &cutoff(a.cutoff), a.lambda).flag("--lambda")?;
            Report::json(&act)
        }
        NcMode::Ym => {
            let form = load_one_form(a)?;
            let report = YmReport {
                tau_ff: yang_mills_density(&form).flag("--input")?,
                integrals: nc_integral_powers(&form).flag("--input")?,
            };
            Report::json(&report)
        }
        NcMode::Check => {
            if let Some(count) = a.random {
                let seed = a.seed.expect("clap requires --seed with --random");
                let theta = golden_theta(4).flag("--random")?;
                let checks = two_path_batch(&theta, count, a.modes, a.radius, seed).flag("--modes")?;
                let worst = checks.iter().map(scaled_residual).fold(0.0, f64::max);
                let report = BatchReport { seed, checks, max_scaled_residual: worst };
                return Ok(Report::json(&report)?
                    .tolerance("two_path_relative", tol)
                    .violation_if(worst > tol, || format!("two-path residual {worst:e} exceeds {tol:e}")));
            }
            let form = load_one_form(a)?;
            let check = two_path_check(&form).flag("--input")?;
            let r = scaled_residual(&check);
            Ok(Report::json(&check)?
                .tolerance("two_path_relative", tol)
                .violation_if(r > tol, || format!("two-path residual {r:e} exceeds {tol:e}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoyalInput {
    /// Half dimension N of R^{2N}.
    pub n: usize,
    pub f: Vec<EntryInput>,
    #[serde(default)]
    pub g: Option<Vec<EntryInput>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub product: Vec<EntryInput>,
    pub truncation_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2_norm: f64,
    pub norms: NormBound,
}

fn entries(f: &MoyalMatrix) -> Vec<EntryInput> {
    let side = f.side();
    let mut out = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let c = f.coeffs[(i, j)];
            if c.norm() > 0.0 {
                out.push(EntryInput { m: f.multi_index(i), n: f.multi_index(j), re: c.re, im: c.im });
            }
        }
    }
    out
}

fn moyal(a: &MoyalArgs) -> Result<Report, CliError> {
    let input: MoyalInput = read_json("--input", &a.input)?;
    let build = |e: &[EntryInput]| MoyalMatrix::from_entries(input.n, a.theta, a.cutoff, e);
    let f = build(&input.f).map_err(|e| crate::error::at_flag("--input", e))?;
    match a.mode {
        MoyalMode::Star => {
            let g = input.g.as_deref().ok_or_else(|| CliError::usage("--input", "star needs a second element g"))?;
            let g = build(g).flag("--input")?;
            let p = star(&f, &g).flag("--input")?;
            Report::json(&StarReport { product: entries(&p), truncation_defect: p.truncation_defect() })
        }
        MoyalMode::Norms => {
            let norms = left_mult_norm_bound(&f);
            let report = NormReport { l2_norm: f.l2_norm(), norms };
            let slack = 1e-12;
            Ok(Report::json(&report)?.tolerance("bound_slack", slack).violation_if(
                norms.op_norm_estimate > norms.bound * (1.0 + slack),
                || format!("operator norm {} exceeds the bound {}", norms.op_norm_estimate, norms.bound),
            ))
        }
        MoyalMode::Dixmier => {
            let d: MoyalDixmier = moyal_dixmier(&f, a.epsilon).flag("--epsilon")?;
            let gap = (d.limit_estimate - d.closed_form).abs();
            let tol = a.tol;
            Ok(Report::json(&d)?
                .tolerance("absolute", tol)
                .violation_if(gap > tol, || format!("Dixmier limit is {gap:e} from the closed form")))
        }
    }
}
