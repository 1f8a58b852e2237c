//! Singular-value partial sums σ_N, logarithmic Cesàro means, measurability
//! diagnostics and Dixmier-trace estimates for (1+Δ)^{−p} on T^d.
//!
//! A stream is either a finite list of values stored as runs of equal
//! entries, or an infinite non-increasing function n ↦ μ_n whose partial sums
//! beyond [`DIRECT_TERMS`] come from Euler–Maclaurin with the integral taken
//! in the variable v = ln ln x.

use crate::error::{invalid, Result, SpecError};
use crate::lattice_spectra::{laplace_spectrum, ShellSpectrum};
use crate::quadrature::{gauss_legendre, Rule};
use crate::special::gamma_real;
use crate::zeta_engine::epstein_zeta;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::sync::{Arc, OnceLock};

/// Function streams are summed term by term up to this index.
pub const DIRECT_TERMS: usize = 1 << 16;

/// Width of the Gauss–Legendre panels in v = ln ln x.
const LOGLOG_PANEL: f64 = 0.05;

/// Relative fit residual below which a ladder counts as converging.
pub const CONVERGENCE_TOL: f64 = 1e-2;

type StreamFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Runs {
        values: Vec<f64>,
        /// Index of the first entry of each run, plus the total length.
        starts: Vec<u64>,
        /// σ at the start of each run, plus the full sum.
        prefix: Vec<f64>,
    },
    Function {
        g: StreamFn,
        /// σ_n for n ≤ DIRECT_TERMS.
        prefix: Vec<f64>,
    },
}

/// Non-increasing sequence μ₀ ≥ μ₁ ≥ … of non-negative singular values.
#[derive(Clone)]
pub struct SingularValueStream {
    kind: Kind,
}

impl std::fmt::Debug for SingularValueStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Runs { values, starts, .. } => f
                .debug_struct("SingularValueStream")
                .field("runs", &values.len())
                .field("len", starts.last().unwrap_or(&0))
                .finish(),
            Kind::Function { .. } => f.debug_struct("SingularValueStream").field("len", &"infinite").finish(),
        }
    }
}

fn gl10() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(10))
}

fn gl20() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// ∫_a^b f over `panels` equal pieces with the given rule.
fn panel_sum(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &Rule) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// ∫_a^b dρ / ln ρ for e ≤ a ≤ b, integrated in u = ln ρ.
fn delta_li(a: f64, b: f64) -> f64 {
    let (ua, ub) = (a.ln(), b.ln());
    let panels = ((ub - ua) / 0.5).ceil().max(1.0) as usize;
    panel_sum(|u| u.exp() / u, ua, ub, panels, gl10())
}

/// ln ln b − ln ln a without cancellation for nearby a, b.
fn delta_lnln(a: f64, b: f64) -> f64 {
    let la = a.ln();
    (((b - a) / a).ln_1p() / la).ln_1p()
}

impl SingularValueStream {
    fn from_runs(mut pairs: Vec<(f64, u64)>) -> Result<Self> {
        if pairs.iter().any(|(v, _)| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("singular values must be finite and non-negative"));
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for (v, c) in pairs.into_iter().filter(|p| p.1 > 0) {
            if values.last() == Some(&v) {
                *counts.last_mut().expect("nonempty") += c;
            } else {
                values.push(v);
                counts.push(c);
            }
        }
        let mut starts = Vec::with_capacity(values.len() + 1);
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let (mut n, mut s) = (0u64, 0.0);
        for (v, c) in values.iter().zip(&counts) {
            starts.push(n);
            prefix.push(s);
            n += c;
            s += v * *c as f64;
        }
        starts.push(n);
        prefix.push(s);
        Ok(SingularValueStream { kind: Kind::Runs { values, starts, prefix } })
    }

    /// Values of `transform(|k|²)` over the shells of `spec`, each repeated
    /// lattice_count·spinor_rank times.
    pub fn from_spectrum(spec: &ShellSpectrum, transform: impl Fn(u64) -> f64) -> Result<Self> {
        Self::from_runs(
            spec.shells
                .iter()
                .map(|s| (transform(s.norm_sq), s.lattice_count * spec.spinor_rank))
                .collect(),
        )
    }

    /// Any finite list; it is sorted into non-increasing order.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_runs(values.iter().map(|&v| (v, 1)).collect())
    }

    /// Infinite stream μ_n = g(n). `g` must be smooth, non-negative and
    /// non-increasing on [0, ∞); the first [`DIRECT_TERMS`] values are checked.
    pub fn from_fn(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mut prefix = Vec::with_capacity(DIRECT_TERMS + 1);
        prefix.push(0.0);
        let mut prev = f64::INFINITY;
        for n in 0..DIRECT_TERMS {
            let v = g(n as f64);
            if !(v.is_finite() && v >= 0.0) || v > prev * (1.0 + 1e-12) {
                return Err(invalid(format!("stream must be non-negative and non-increasing; fails at n = {n}")));
            }
            prev = v;
            prefix.push(prefix[n] + v);
        }
        Ok(SingularValueStream { kind: Kind::Function { g: Arc::new(g), prefix } })
    }

    /// Number of values, `None` for infinite streams.
    pub fn len(&self) -> Option<u64> {
        match &self.kind {
            Kind::Runs { starts, .. } => starts.last().copied(),
            Kind::Function { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    fn limit(&self) -> f64 {
        self.len().map_or(f64::INFINITY, |n| n as f64)
    }

    /// μ_n.
    pub fn mu(&self, n: u64) -> Result<f64> {
        match &self.kind {
            Kind::Runs { values, starts, .. } => {
                if n >= *starts.last().expect("sentinel") {
                    return Err(SpecError::OutOfRange { what: "index", value: n as f64, max: self.limit() - 1.0 });
                }
                let r = starts.partition_point(|&s| s <= n) - 1;
                Ok(values[r])
            }
            Kind::Function { g, .. } => Ok(g(n as f64)),
        }
    }

    /// Partial trace σ_N = Σ_{n<N} μ_n.
    pub fn partial_trace(&self, n: u64) -> Result<f64> {
        self.sigma(n as f64)
    }

    /// σ_ρ = σ_N + (ρ − N)μ_N for ρ ∈ [N, N+1].
    pub fn sigma(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) || rho > self.limit() {
            return Err(SpecError::OutOfRange { what: "N", value: rho, max: self.limit() });
        }
        match &self.kind {
            Kind::Runs { values, starts, prefix } => {
                let r = starts.partition_point(|&s| (s as f64) <= rho) - 1;
                if r == values.len() {
                    return Ok(prefix[r]);
                }
                Ok(prefix[r] + (rho - starts[r] as f64) * values[r])
            }
            Kind::Function { g, prefix } => {
                if rho <= DIRECT_TERMS as f64 {
                    let n = rho.floor() as usize;
                    let frac = rho - n as f64;
                    return Ok(prefix[n] + if frac > 0.0 { frac * g(n as f64) } else { 0.0 });
                }
                Ok(prefix[DIRECT_TERMS] + self.tail_sum(DIRECT_TERMS as f64, rho))
            }
        }
    }

    /// Σ_{a ≤ n < b} g(n) by Euler–Maclaurin; exact to O(g‴) at integer b.
    fn tail_sum(&self, a: f64, b: f64) -> f64 {
        let Kind::Function { g, .. } = &self.kind else { unreachable!("function streams only") };
        let dg = |x: f64| {
            let h = 1e-3 * x;
            (g(x + h) - g(x - h)) / (2.0 * h)
        };
        self.integral_g(a, b) - 0.5 * (g(b) - g(a)) + (dg(b) - dg(a)) / 12.0
    }

    /// ∫_a^b g(x) dx with x = e^{e^v}.
    fn integral_g(&self, a: f64, b: f64) -> f64 {
        let Kind::Function { g, .. } = &self.kind else { unreachable!("function streams only") };
        let (va, vb) = (a.ln().ln(), b.ln().ln());
        let panels = ((vb - va) / LOGLOG_PANEL).ceil().max(1.0) as usize;
        panel_sum(
            |v| {
                let lx = v.exp();
                let x = lx.exp();
                g(x) * x * lx
            },
            va,
            vb,
            panels,
            gl20(),
        )
    }

    /// Cesàro mean τ_λ = (1/ln λ)∫_e^λ (σ_ρ / ln ρ) dρ/ρ.
    pub fn cesaro_tau(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= E) {
            return Err(invalid(format!("lambda must be at least e, got {lambda}")));
        }
        if lambda > self.limit() {
            return Err(SpecError::OutOfRange { what: "lambda", value: lambda, max: self.limit() });
        }
        let integral = match &self.kind {
            Kind::Runs { values, starts, prefix } => {
                let mut acc = 0.0;
                for r in 0..values.len() {
                    let (a, b) = ((starts[r] as f64).max(E), (starts[r + 1] as f64).min(lambda));
                    if b <= a {
                        if starts[r] as f64 >= lambda {
                            break;
                        }
                        continue;
                    }
                    // σ_ρ = c + μρ on the run
                    let mu = values[r];
                    let c = prefix[r] - starts[r] as f64 * mu;
                    acc += c * delta_lnln(a, b) + mu * delta_li(a, b);
                }
                acc
            }
            Kind::Function { g, prefix } => {
                let split = lambda.min(DIRECT_TERMS as f64);
                let mut acc = 0.0;
                let mut n = 2usize;
                while (n as f64) < split {
                    let (a, b) = ((n as f64).max(E), ((n + 1) as f64).min(split));
                    if b > a {
                        let mu = g(n as f64);
                        acc += (prefix[n] - n as f64 * mu) * delta_lnln(a, b) + mu * delta_li(a, b);
                    }
                    n += 1;
                }
                if lambda > split {
                    // (σ_ρ/ln ρ) dρ/ρ = σ_ρ dv with v = ln ln ρ
                    let (va, vb) = (split.ln().ln(), lambda.ln().ln());
                    let panels = ((vb - va) / LOGLOG_PANEL).ceil().max(1.0) as usize;
                    acc += panel_sum(
                        |v| prefix[DIRECT_TERMS] + self.tail_sum(DIRECT_TERMS as f64, v.exp().exp()),
                        va,
                        vb,
                        panels,
                        gl20(),
                    );
                }
                acc
            }
        };
        Ok(integral / lambda.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Measurability {
    Converging { limit: f64 },
    Diverging,
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurabilityReport {
    pub ladder: Vec<f64>,
    /// σ_N / ln N along the ladder.
    pub means: Vec<f64>,
    /// max − min of the means over the upper half of the ladder.
    pub cauchy_variation: f64,
    pub sign_changes: usize,
    /// Least-squares fit means ≈ a + b/ln N.
    pub fit_a: f64,
    pub fit_b: f64,
    pub fit_residual: f64,
    pub verdict: Measurability,
}

/// Least-squares a + b·x.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let resid = x.iter().zip(y).map(|(u, v)| (v - a - b * u).abs()).fold(0.0, f64::max);
    (a, b, resid)
}

/// Trend of σ_N/ln N along an increasing ladder of N ≥ 3.
pub fn measurability_check(sv: &SingularValueStream, ladder: &[f64]) -> Result<MeasurabilityReport> {
    if ladder.len() < 3 {
        return Err(invalid("ladder needs at least three values of N"));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] < 3.0 {
        return Err(invalid("ladder must be increasing and start at N >= 3"));
    }
    let means = ladder
        .iter()
        .map(|&n| Ok(sv.sigma(n)? / n.ln()))
        .collect::<Result<Vec<f64>>>()?;
    let scale = means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let upper = &means[means.len() / 2..];
    let cauchy_variation = upper.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - upper.iter().cloned().fold(f64::INFINITY, f64::min);
    let diffs: Vec<f64> = means
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > 1e-9 * scale.max(1e-300))
        .collect();
    let sign_changes = diffs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    let inv_log: Vec<f64> = ladder.iter().map(|n| 1.0 / n.ln()).collect();
    let (fit_a, fit_b, fit_residual) = linear_fit(&inv_log, &means);
    let verdict = if sign_changes >= 2 {
        Measurability::Oscillating
    } else if fit_residual <= CONVERGENCE_TOL * fit_a.abs().max(1e-3 * scale).max(1e-300) || scale == 0.0 {
        Measurability::Converging { limit: fit_a }
    } else {
        Measurability::Diverging
    };
    Ok(MeasurabilityReport {
        ladder: ladder.to_vec(),
        means,
        cauchy_variation,
        sign_changes,
        fit_a,
        fit_b,
        fit_residual,
        verdict,
    })
}

/// Spectrum of (1+Δ)^{−p} on T^d with at least `n` eigenvalues.
pub fn resolvent_power_stream(d: usize, p: f64, n: u64) -> Result<SingularValueStream> {
    if !(p.is_finite() && p > 0.0) {
        return Err(invalid(format!("exponent must be positive, got {p}")));
    }
    let vol = crate::special::sphere_volume(d) / d as f64;
    let mut r2 = ((1.05 * n as f64 / vol).powf(2.0 / d as f64) + 4.0 * (d as f64)).ceil() as u64;
    loop {
        let spec = laplace_spectrum(d, r2)?;
        if spec.total_states() >= n {
            return SingularValueStream::from_spectrum(&spec, |m| (1.0 + m as f64).powf(-p));
        }
        r2 = r2 + r2 / 4 + 1;
    }
}

/// Res_{s=1} Tr((1+Δ)^{−ps}) on T^d: Res_{u=d} Z_d(u)/(2p) when 2p = d, zero when 2p > d.
pub fn zeta_residue_estimate(d: usize, p: f64) -> Result<f64> {
    let twice = 2.0 * p;
    if (twice - d as f64).abs() < 1e-12 {
        // (1+|k|²)^{−u/2} − |k|^{−u} is summable near u = d, so the residue is Epstein's.
        let z = epstein_zeta(d, Complex64::new(d as f64, 0.0))?;
        Ok(z.residue.re / d as f64)
    } else if twice > d as f64 {
        Ok(0.0)
    } else {
        Err(invalid(format!("(1+Δ)^-{p} on T^{d} is not in L^(1,∞): Dixmier trace is infinite")))
    }
}

/// π^{d/2}/Γ(d/2 + 1), the Dixmier trace of (1+Δ)^{−d/2} on T^d.
pub fn dixmier_closed_form(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_real(d as f64 / 2.0 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: u64,
    pub sigma: f64,
    pub mean: f64,
    pub cesaro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DixmierEstimate {
    pub dimension: usize,
    pub exponent: f64,
    pub n_max: u64,
    /// σ_N / ln N at N = n_max.
    pub raw: f64,
    /// a in σ_N/ln N ≈ a + b/ln N over the ladder.
    pub extrapolated: f64,
    pub uncertainty: f64,
    pub zeta_residue: f64,
    pub ladder: Vec<LadderRow>,
    pub warning: Option<String>,
}

/// Below this the raw Cesàro mean is dominated by the 1/ln N correction.
pub const MIN_RELIABLE_N: u64 = 100_000;

/// Both Dixmier-trace estimators for (1+Δ)^{−p} on T^d.
pub fn dixmier_estimate(d: usize, p: f64, n_max: u64) -> Result<DixmierEstimate> {
    if !(d == 2 || d == 4) {
        return Err(invalid(format!("dimension must be 2 or 4, got {d}")));
    }
    if n_max < 100 {
        return Err(invalid(format!("N must be at least 100, got {n_max}")));
    }
    let zeta_residue = zeta_residue_estimate(d, p)?;
    let sv = resolvent_power_stream(d, p, n_max)?;
    let mut ns: Vec<u64> = (0..4).map(|j| n_max / 10u64.pow(j)).filter(|&n| n >= 10).collect();
    ns.reverse();
    let ladder = ns
        .iter()
        .map(|&n| {
            let sigma = sv.partial_trace(n)?;
            Ok(LadderRow { n, sigma, mean: sigma / (n as f64).ln(), cesaro: sv.cesaro_tau(n as f64)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = ladder.iter().map(|r| 1.0 / (r.n as f64).ln()).collect();
    let y: Vec<f64> = ladder.iter().map(|r| r.mean).collect();
    let raw = *y.last().expect("ladder nonempty");
    let (a, _, resid) = linear_fit(&x, &y);
    let uncertainty = if x.len() >= 3 {
        let (a_top, _, _) = linear_fit(&x[1..], &y[1..]);
        (a - a_top).abs() + resid
    } else {
        (a - raw).abs()
    };
    let warning = (n_max < MIN_RELIABLE_N).then(|| {
        format!("N = {n_max} is below {MIN_RELIABLE_N}; the raw mean carries an O(1/ln N) bias")
    });
    Ok(DixmierEstimate {
        dimension: d,
        exponent: p,
        n_max,
        raw,
        extrapolated: a,
        uncertainty,
        zeta_residue,
        ladder,
        warning,
    })
}
