//! Spectral action Tr f(D²/Λ²): direct evaluation from torus spectra, cutoff
//! moments, and the large-Λ expansion Σ_{k=1}^{d} f_k Λ^k a_{d−k} + f(0) a_d.

use crate::error::{invalid, Result, SpecError};
use crate::heat_asymptotics::HeatCoefficients;
use crate::lattice_spectra::{heat_trace, ShellSpectrum};
use crate::special::{gamma_real, rgamma_real};
use crate::zeta_engine::epstein_zeta;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Cutoff f on [0, ∞), applied to D²/Λ².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffFunction {
    /// Indicator of [0, 1].
    Sharp,
    /// e^{−x}.
    Exponential,
    /// Piecewise linear through (x, f(x)) starting at x = 0, zero after the
    /// last point.
    Tabulated { points: Vec<(f64, f64)> },
}

impl CutoffFunction {
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let f = CutoffFunction::Tabulated { points };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if let CutoffFunction::Tabulated { points } = self {
            if points.len() < 2 || points[0].0 != 0.0 {
                return Err(invalid("tabulated cutoff needs at least two points starting at x = 0"));
            }
            for w in points.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(invalid("tabulated cutoff abscissae must increase"));
                }
                if w[1].1 > w[0].1 {
                    return Err(invalid("tabulated cutoff must be non-increasing"));
                }
            }
            if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite() && p.1 >= 0.0)) {
                return Err(invalid("tabulated cutoff values must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            CutoffFunction::Sharp => {
                if x <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffFunction::Exponential => (-x).exp(),
            CutoffFunction::Tabulated { points } => {
                let last = points.last().expect("validated");
                if x > last.0 {
                    return 0.0;
                }
                let i = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
                let (a, b) = (points[i - 1], points[i]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        }
    }

    /// Largest x with f(x) ≠ 0, if bounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            CutoffFunction::Sharp => Some(1.0),
            CutoffFunction::Exponential => None,
            CutoffFunction::Tabulated { points } => points.last().map(|p| p.0),
        }
    }

    /// f_k = (1/Γ(k/2)) ∫₀^∞ f(s) s^{k/2−1} ds for k ≥ 1.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(invalid("moments are defined for k >= 1; use value(0) for f(0)"));
        }
        let h = k as f64 / 2.0;
        Ok(match self {
            CutoffFunction::Sharp => rgamma_real(h + 1.0),
            CutoffFunction::Exponential => 1.0,
            CutoffFunction::Tabulated { points } => {
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let ((a, fa), (b, fb)) = (w[0], w[1]);
                    let beta = (fb - fa) / (b - a);
                    let alpha = fa - beta * a;
                    acc += alpha * (b.powf(h) - a.powf(h)) / h + beta * (b.powf(h + 1.0) - a.powf(h + 1.0)) / (h + 1.0);
                }
                acc * rgamma_real(h)
            }
        })
    }

    /// ∫₀^∞ F(x) x^{k−1} dx for the even cutoff F(x) = f(x²) in D/Λ, which is
    /// ½Γ(k/2) f_k.
    pub fn half_line_moment(&self, k: usize) -> Result<f64> {
        Ok(0.5 * gamma_real(k as f64 / 2.0) * self.moment(k)?)
    }
}

/// Tr f(D²/Λ²) summed over the shells of `spec`.
pub fn action_direct(spec: &ShellSpectrum, f: &CutoffFunction, lambda: f64) -> Result<f64> {
    f.validate()?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("Lambda must be positive, got {lambda}")));
    }
    let l2 = lambda * lambda;
    if let CutoffFunction::Exponential = f {
        return Ok(heat_trace(spec, 1.0 / l2, 0.0)?.value);
    }
    let end = f.support_end().expect("bounded support");
    if end * l2 > spec.max_norm_sq as f64 {
        return Err(SpecError::OutOfRange { what: "support of f times Lambda^2", value: end * l2, max: spec.max_norm_sq as f64 });
    }
    let rank = spec.spinor_rank as f64;
    Ok(spec
        .shells
        .iter()
        .rev()
        .map(|s| s.lattice_count as f64 * rank * f.value(s.norm_sq as f64 / l2))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    /// Power of Λ.
    pub power: usize,
    pub label: String,
    pub moment: f64,
    pub coefficient: f64,
    pub value: f64,
}

/// Σ_{k=1}^{d} f_k Λ^k a_{d−k} + f(0) a_d, one labelled term per k.
pub fn action_expansion(coeffs: &HeatCoefficients, f: &CutoffFunction, lambda: f64, d: usize) -> Result<Vec<ExpansionTerm>> {
    f.validate()?;
    let mut out = Vec::with_capacity(d + 1);
    for k in (1..=d).rev() {
        let m = f.moment(k)?;
        let a = coeffs.a(d - k);
        out.push(ExpansionTerm {
            power: k,
            label: format!("f_{k} Lambda^{k} a_{}", d - k),
            moment: m,
            coefficient: a,
            value: m * lambda.powi(k as i32) * a,
        });
    }
    let f0 = f.value(0.0);
    out.push(ExpansionTerm {
        power: 0,
        label: format!("f(0) a_{d}"),
        moment: f0,
        coefficient: coeffs.a(d),
        value: f0 * coeffs.a(d),
    });
    Ok(out)
}

/// Heat coefficients from noncommutative integrals:
/// a_k = ½Γ((d−k)/2)∮|D|^{−d+k} for k < d and a_d = dim Ker D + ζ_{D²}(0).
pub fn coefficients_from_residues(d: usize, integrals: &[f64], kernel_dim: f64, zeta_d2_zero: f64) -> Result<HeatCoefficients> {
    if integrals.len() != d {
        return Err(invalid(format!("expected {d} integrals for k = 0..{}", d.saturating_sub(1))));
    }
    let mut values: Vec<f64> = (0..d).map(|k| 0.5 * gamma_real((d - k) as f64 / 2.0) * integrals[k]).collect();
    values.push(kernel_dim + zeta_d2_zero);
    Ok(HeatCoefficients { dimension: d, values })
}

/// Heat coefficients of D² on T^d from the Epstein zeta function: the only
/// pole of Tr|D|^{−s} is at s = d, and ζ_{D²}(0) = rank·Z_d(0).
pub fn torus_coefficients_from_zeta(d: usize, spinor_rank: u64) -> Result<HeatCoefficients> {
    let rank = spinor_rank as f64;
    let at_d = epstein_zeta(d, Complex64::new(d as f64, 0.0))?;
    let mut integrals = vec![0.0; d];
    integrals[0] = rank * at_d.residue.re;
    let z0 = epstein_zeta(d, Complex64::new(0.0, 0.0))?;
    coefficients_from_residues(d, &integrals, rank, rank * z0.finite_part.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub direct: f64,
    pub expansion: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub gap_over_lambda_sq: f64,
    /// Signed gap divided by Λ'², averaged over Λ' ∈ [Λ(1−w), Λ(1+w)]. This is
    /// the quantity that decays for discontinuous cutoffs.
    pub averaged_gap_over_lambda_sq: f64,
}

/// Half-width w of the averaging window, relative to Λ.
pub const AVERAGING_WINDOW: f64 = 0.05;
const AVERAGING_SAMPLES: usize = 64;

/// Direct action against the truncated expansion along a ladder of Λ.
pub fn expansion_vs_direct(spec: &ShellSpectrum, f: &CutoffFunction, coeffs: &HeatCoefficients, ladder: &[f64]) -> Result<Vec<ComparisonRow>> {
    ladder
        .iter()
        .map(|&lambda| {
            let gap_at = |l: f64| -> Result<(f64, f64)> {
                let direct = action_direct(spec, f, l)?;
                let expansion: f64 = action_expansion(coeffs, f, l, spec.dimension)?.iter().map(|t| t.value).sum();
                Ok((direct, expansion))
            };
            let (direct, expansion) = gap_at(lambda)?;
            let abs_gap = (direct - expansion).abs();
            let mut avg = 0.0;
            for i in 0..AVERAGING_SAMPLES {
                let l = lambda * (1.0 - AVERAGING_WINDOW + 2.0 * AVERAGING_WINDOW * (i as f64 + 0.5) / AVERAGING_SAMPLES as f64);
                let (d, e) = gap_at(l)?;
                avg += (d - e) / (l * l);
            }
            Ok(ComparisonRow {
                lambda,
                direct,
                expansion,
                abs_gap,
                rel_gap: abs_gap / direct.abs().max(f64::MIN_POSITIVE),
                gap_over_lambda_sq: abs_gap / (lambda * lambda),
                averaged_gap_over_lambda_sq: avg / AVERAGING_SAMPLES as f64,
            })
        })
        .collect()
}
