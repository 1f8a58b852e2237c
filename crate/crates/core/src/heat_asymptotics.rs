//! Heat-kernel coefficients of Laplace-type operators
//! P = −(g^{μν}∂_μ∂_ν + A^μ∂_μ + B) with constant coefficients on a flat torus.
//!
//! Coefficients follow the convention Tr(f e^{−tP}) ∼ Σ_k a_k(f, P) t^{(k−d)/2},
//! with the (4π)^{−d/2} factor folded into each a_k.

use crate::error::{invalid, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Constants α₀..α₁₀ of the a₀, a₂, a₄ invariants, in the order
/// a₀: α₀; a₂: α₁ E, α₂ s; a₄: α₃ E;kk, α₄ Es, α₅ E², α₆ R;kk, α₇ s²,
/// α₈ Ric², α₉ Riem², α₁₀ Ω².
pub const SDW_CONSTANTS: [f64; 11] = [1.0, 6.0, 1.0, 60.0, 60.0, 180.0, 12.0, 5.0, -2.0, 2.0, 30.0];

/// Finite-difference step for the variational identities.
pub const VARIATION_STEP: f64 = 1e-4;

/// Condition number above which a fit window is reported as ill conditioned.
pub const FIT_CONDITION_LIMIT: f64 = 1e12;

/// Constant-coefficient operator data. `volume` is the coordinate volume of
/// the torus; the Riemannian volume is volume·det(g^{μν})^{−1/2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceTypeData {
    pub dimension: usize,
    pub metric_inverse: Vec<Vec<f64>>,
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub omega: Vec<Vec<Vec<f64>>>,
    pub e: Vec<Vec<f64>>,
}

/// a₀, a₁, …; odd entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCoefficients {
    pub dimension: usize,
    pub values: Vec<f64>,
}

impl HeatCoefficients {
    pub fn a(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatFit {
    pub coefficients: HeatCoefficients,
    /// 2-norm condition number of the scaled design matrix.
    pub condition: f64,
    pub warning: Option<String>,
}

/// Finite-difference derivative and the value the identity predicts, per k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationCheck {
    pub k: Vec<usize>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// max(1, max_k |a_k(1, P)|), the size of the differenced values.
    pub scale: f64,
}

impl VariationCheck {
    /// |lhs − rhs| ≤ rel·|rhs| + abs·scale for every k. Entries with rhs = 0
    /// carry finite-difference roundoff proportional to `scale`.
    pub fn holds(&self, rel: f64, abs: f64) -> bool {
        self.lhs.iter().zip(&self.rhs).all(|(l, r)| (l - r).abs() <= rel * r.abs() + abs * self.scale)
    }
}

struct Operator {
    d: usize,
    g_inv: DMatrix<f64>,
    g: DMatrix<f64>,
    a: Vec<DMatrix<f64>>,
    b: DMatrix<f64>,
    rank: usize,
    riemann_volume: f64,
}

fn to_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what} must be {n}x{n}")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{what} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl LaplaceTypeData {
    /// Δ + m² on the standard torus R^d/2πZ^d acting on rank-r bundles.
    pub fn laplacian_with_mass(d: usize, mass: f64, rank: usize) -> Self {
        let id = |n: usize, s: f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| if i == j { s } else { 0.0 }).collect()).collect()
        };
        LaplaceTypeData {
            dimension: d,
            metric_inverse: id(d, 1.0),
            a: vec![id(rank, 0.0); d],
            b: id(rank, -mass * mass),
            volume: (2.0 * PI).powi(d as i32),
        }
    }

    pub fn fiber_rank(&self) -> usize {
        self.b.len()
    }

    /// The operator e^{λ}·P for scalar λ.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |m: &Vec<Vec<f64>>| m.iter().map(|r| r.iter().map(|x| x * factor).collect()).collect();
        LaplaceTypeData {
            dimension: self.dimension,
            metric_inverse: s(&self.metric_inverse),
            a: self.a.iter().map(s).collect(),
            b: s(&self.b),
            volume: self.volume,
        }
    }

    /// P − h·Id for a constant h.
    pub fn shifted(&self, h: f64) -> Self {
        let mut out = self.clone();
        for (i, row) in out.b.iter_mut().enumerate() {
            row[i] += h;
        }
        out
    }

    fn operator(&self) -> Result<Operator> {
        let d = self.dimension;
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(invalid("volume must be positive"));
        }
        let g_inv = to_matrix(&self.metric_inverse, d, "metric_inverse")?;
        if (&g_inv - g_inv.transpose()).amax() > 1e-12 * g_inv.amax() {
            return Err(invalid("metric_inverse must be symmetric"));
        }
        let chol = g_inv
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("metric_inverse must be positive definite"))?;
        let g = chol.inverse();
        let det_g_inv: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
        let rank = self.b.len();
        if rank == 0 {
            return Err(invalid("fiber rank must be positive"));
        }
        let b = to_matrix(&self.b, rank, "B")?;
        if self.a.len() != d {
            return Err(invalid(format!("expected {d} first-order coefficients, got {}", self.a.len())));
        }
        let a = self.a.iter().map(|m| to_matrix(m, rank, "A^mu")).collect::<Result<Vec<_>>>()?;
        Ok(Operator { d, g_inv, g, a, b, rank, riemann_volume: self.volume / det_g_inv.sqrt() })
    }
}

fn omega_and_e(op: &Operator) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
    let zero = DMatrix::<f64>::zeros(op.rank, op.rank);
    let omega: Vec<DMatrix<f64>> = (0..op.d)
        .map(|nu| (0..op.d).fold(zero.clone(), |acc, mu| acc + &op.a[mu] * (0.5 * op.g[(nu, mu)])))
        .collect();
    let mut e = op.b.clone();
    for nu in 0..op.d {
        for mu in 0..op.d {
            e -= &omega[nu] * &omega[mu] * op.g_inv[(nu, mu)];
        }
    }
    (omega, e)
}

/// ω_ν = ½ g_{νμ}A^μ and E = B − g^{νμ}ω_ν ω_μ.
pub fn normal_form(data: &LaplaceTypeData) -> Result<NormalForm> {
    let op = data.operator()?;
    let (omega, e) = omega_and_e(&op);
    Ok(NormalForm { omega: omega.iter().map(from_matrix).collect(), e: from_matrix(&e) })
}

/// Fiber traces of the local invariants entering a₀, a₂, a₄.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalInvariants {
    pub rank: f64,
    pub e: f64,
    pub s: f64,
    pub e_laplacian: f64,
    pub e_s: f64,
    pub e_sq: f64,
    pub s_laplacian: f64,
    pub s_sq: f64,
    pub ricci_sq: f64,
    pub riemann_sq: f64,
    pub omega_sq: f64,
}

/// Invariants of a flat constant-coefficient operator: curvature and
/// derivative terms vanish, Ω_{μν} = [ω_μ, ω_ν].
pub fn local_invariants(data: &LaplaceTypeData) -> Result<LocalInvariants> {
    let op = data.operator()?;
    let (omega, e) = omega_and_e(&op);
    let mut omega_sq = 0.0;
    for m1 in 0..op.d {
        for n1 in 0..op.d {
            let f1 = &omega[m1] * &omega[n1] - &omega[n1] * &omega[m1];
            for m2 in 0..op.d {
                for n2 in 0..op.d {
                    let w = op.g_inv[(m1, m2)] * op.g_inv[(n1, n2)];
                    if w != 0.0 {
                        let f2 = &omega[m2] * &omega[n2] - &omega[n2] * &omega[m2];
                        omega_sq += w * (&f1 * &f2).trace();
                    }
                }
            }
        }
    }
    Ok(LocalInvariants {
        rank: op.rank as f64,
        e: e.trace(),
        e_sq: (&e * &e).trace(),
        omega_sq,
        ..Default::default()
    })
}

/// a₀, a₂, a₄ of P smeared with the constant `f`.
pub fn seeley_dewitt(data: &LaplaceTypeData, f: f64) -> Result<HeatCoefficients> {
    let op = data.operator()?;
    let inv = local_invariants(data)?;
    let c = &SDW_CONSTANTS;
    let norm = (4.0 * PI).powf(-(op.d as f64) / 2.0) * f * op.riemann_volume;
    let a0 = norm * c[0] * inv.rank;
    let a2 = norm / 6.0 * (c[1] * inv.e + c[2] * inv.s);
    let a4 = norm / 360.0
        * (c[3] * inv.e_laplacian
            + c[4] * inv.e_s
            + c[5] * inv.e_sq
            + c[6] * inv.s_laplacian
            + c[7] * inv.s_sq
            + c[8] * inv.ricci_sq
            + c[9] * inv.riemann_sq
            + c[10] * inv.omega_sq);
    Ok(HeatCoefficients { dimension: op.d, values: vec![a0, 0.0, a2, 0.0, a4] })
}

/// Least-squares fit of trace(t) ≈ Σ_{k even ≤ k_max} a_k t^{(k−d)/2}.
///
/// Rows are weighted by 1/|trace| and t is rescaled by the geometric mean of
/// the window before solving.
pub fn fit_heat_coefficients(samples: &[(f64, f64)], d: usize, k_max: usize) -> Result<HeatFit> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if k_max % 2 != 0 {
        return Err(invalid(format!("k_max must be even, got {k_max}")));
    }
    let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    if samples.iter().any(|(t, y)| !(t.is_finite() && *t > 0.0 && y.is_finite() && *y != 0.0)) {
        return Err(invalid("samples need t > 0 and finite nonzero traces"));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let cols = k_max / 2 + 1;
    if ts.len() < cols + 1 {
        return Err(invalid(format!(
            "need at least {} distinct t values for k_max = {k_max}, got {}",
            cols + 1,
            ts.len()
        )));
    }
    let t_ref = (samples.iter().map(|s| s.0.ln()).sum::<f64>() / samples.len() as f64).exp();
    let power = |j: usize| (2 * j) as f64 / 2.0 - d as f64 / 2.0;
    let design = DMatrix::from_fn(samples.len(), cols, |i, j| {
        let (t, y) = samples[i];
        (t / t_ref).powf(power(j)) / y.abs()
    });
    let rhs = nalgebra::DVector::from_fn(samples.len(), |i, _| samples[i].1 / samples[i].1.abs());
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let sol = svd
        .solve(&rhs, smax * 1e-15)
        .map_err(|e| invalid(format!("least-squares solve failed: {e}")))?;
    let mut values = vec![0.0; k_max + 1];
    for j in 0..cols {
        values[2 * j] = sol[j] * t_ref.powf(-power(j));
    }
    let warning = (condition > FIT_CONDITION_LIMIT).then(|| {
        format!("ill-conditioned window: condition number {condition:.3e} exceeds {FIT_CONDITION_LIMIT:.0e}")
    });
    Ok(HeatFit { coefficients: HeatCoefficients { dimension: d, values }, condition, warning })
}

/// Central difference with one Richardson step.
fn derivative<F: Fn(f64) -> Result<Vec<f64>>>(f: F, h: f64) -> Result<Vec<f64>> {
    let diff = |h: f64| -> Result<Vec<f64>> {
        let (p, m) = (f(h)?, f(-h)?);
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let (coarse, fine) = (diff(h)?, diff(h / 2.0)?);
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

/// d/dε a_k(1, e^{−2εc}P) at ε = 0 against (d − k)·a_k(c, P), for k = 0, 2, 4.
pub fn conformal_variation_check(data: &LaplaceTypeData, c: f64) -> Result<VariationCheck> {
    let ks = vec![0, 2, 4];
    let lhs = derivative(
        |eps| {
            let sc = seeley_dewitt(&data.scaled((-2.0 * eps * c).exp()), 1.0)?;
            Ok(ks.iter().map(|&k| sc.a(k)).collect())
        },
        VARIATION_STEP,
    )?;
    let base = seeley_dewitt(data, c)?;
    let d = data.dimension as f64;
    let rhs = ks.iter().map(|&k| (d - k as f64) * base.a(k)).collect();
    let scale = magnitude(data)?;
    Ok(VariationCheck { k: ks, lhs, rhs, scale })
}

/// d/dε a_k(1, P − εh) at ε = 0 against a_{k−2}(h, P), for k = 2, 4.
pub fn potential_variation_check(data: &LaplaceTypeData, h: f64) -> Result<VariationCheck> {
    let ks = vec![2, 4];
    let lhs = derivative(
        |eps| {
            let sc = seeley_dewitt(&data.shifted(eps * h), 1.0)?;
            Ok(ks.iter().map(|&k| sc.a(k)).collect())
        },
        VARIATION_STEP,
    )?;
    let base = seeley_dewitt(data, h)?;
    let rhs = ks.iter().map(|&k| base.a(k - 2)).collect();
    let scale = magnitude(data)?;
    Ok(VariationCheck { k: ks, lhs, rhs, scale })
}

fn magnitude(data: &LaplaceTypeData) -> Result<f64> {
    Ok(seeley_dewitt(data, 1.0)?.values.iter().fold(1.0, |m, a| m.max(a.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_spectra::heat_trace_product;
    use nalgebra::{Complex, Matrix3};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Coefficients of e^{−tm²}·(π/t)^{d/2}·rank, the small-t form of the torus trace.
    fn mass_oracle(d: usize, m: f64, rank: f64) -> [f64; 3] {
        let lead = PI.powf(d as f64 / 2.0) * rank;
        [lead, -m * m * lead, m.powi(4) / 2.0 * lead]
    }

    fn samples(window: (f64, f64), count: usize, trace: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..count)
            .map(|i| {
                let t = window.0 + (window.1 - window.0) * i as f64 / (count - 1) as f64;
                (t, trace(t))
            })
            .collect()
    }

    #[test]
    fn normal_form_examples() {
        let nf = normal_form(&LaplaceTypeData::laplacian_with_mass(3, 1.5, 2)).unwrap();
        assert!(nf.omega.iter().flatten().flatten().all(|&x| x == 0.0));
        assert_eq!(nf.e, vec![vec![-2.25, 0.0], vec![0.0, -2.25]]);

        let c = [0.3, -1.2];
        let mut data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 1);
        data.a = vec![vec![vec![2.0 * c[0]]], vec![vec![2.0 * c[1]]]];
        let nf = normal_form(&data).unwrap();
        assert!((nf.omega[0][0][0] - c[0]).abs() < 1e-15);
        assert!((nf.omega[1][0][0] - c[1]).abs() < 1e-15);
        assert!((nf.e[0][0] + c[0] * c[0] + c[1] * c[1]).abs() < 1e-15);

        let mut data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 2);
        data.b = vec![vec![0.7, 0.0], vec![0.0, -0.2]];
        assert_eq!(normal_form(&data).unwrap().e, data.b);
    }

    #[test]
    fn completing_the_square() {
        // e^{−c·x}Δe^{c·x} = Δ + 2c·∂ + |c|², so P = −(Δ + 2c·∂) has E = −|c|².
        let c = [0.4, 0.1, -0.7];
        let mut data = LaplaceTypeData::laplacian_with_mass(3, 0.0, 1);
        data.a = c.iter().map(|x| vec![vec![2.0 * x]]).collect();
        let nf = normal_form(&data).unwrap();
        let c2: f64 = c.iter().map(|x| x * x).sum();
        assert!((nf.e[0][0] + c2).abs() < 1e-15);
    }

    #[test]
    fn flat_torus_coefficients() {
        let sc = seeley_dewitt(&LaplaceTypeData::laplacian_with_mass(2, 0.0, 1), 1.0).unwrap();
        assert!(rel(sc.a(0), PI) < 1e-15);
        assert_eq!((sc.a(1), sc.a(2), sc.a(3), sc.a(4)), (0.0, 0.0, 0.0, 0.0));
        for d in 1..=5 {
            for m in [0.5, 1.0, 2.0] {
                let sc = seeley_dewitt(&LaplaceTypeData::laplacian_with_mass(d, m, 1), 1.0).unwrap();
                let o = mass_oracle(d, m, 1.0);
                for (k, expect) in [0, 2, 4].iter().zip(o) {
                    assert!(rel(sc.a(*k), expect) < 1e-13, "d={d} m={m} k={k}");
                }
            }
        }
    }

    #[test]
    fn metric_scaling_changes_riemannian_volume() {
        // g^{μν} = λ·Id is the torus with side 2π/√λ.
        let data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 1).scaled(4.0);
        let sc = seeley_dewitt(&data, 1.0).unwrap();
        assert!(rel(sc.a(0), PI / 4.0) < 1e-15);
    }

    #[test]
    fn constants_in_e() {
        let data = LaplaceTypeData::laplacian_with_mass(4, 0.0, 1).shifted(1.0);
        let sc = seeley_dewitt(&data, 1.0).unwrap();
        // E = 1: a₂/a₀ = α₁/6 = 1 and a₄/a₀ = α₅/360 = 1/2.
        assert!(rel(sc.a(2) / sc.a(0), 1.0) < 1e-15);
        assert!(rel(sc.a(4) / sc.a(0), 0.5) < 1e-15);
    }

    #[test]
    fn fit_single_term_model() {
        let s = samples((0.005, 0.02), 12, |t| PI / t);
        let fit = fit_heat_coefficients(&s, 2, 4).unwrap();
        assert!(rel(fit.coefficients.a(0), PI) < 1e-12);
        for k in [2, 4] {
            assert!(fit.coefficients.a(k).abs() < 1e-10, "k={k} {:?}", fit.coefficients);
        }
        assert!(fit.warning.is_none());
    }

    #[test]
    fn fit_recovers_exact_torus_coefficients() {
        for d in [2usize, 4] {
            for m in [0.0, 1.0, 2.0] {
                let s = samples((0.005, 0.02), 40, |t| heat_trace_product(d, t, m * m, 1));
                let fit = fit_heat_coefficients(&s, d, 12).unwrap();
                let sc = seeley_dewitt(&LaplaceTypeData::laplacian_with_mass(d, m, 1), 1.0).unwrap();
                for k in [0, 2, 4] {
                    let (got, expect) = (fit.coefficients.a(k), sc.a(k));
                    let err = if expect == 0.0 { got.abs() / sc.a(0) } else { rel(got, expect) };
                    assert!(err < 1e-6, "d={d} m={m} k={k}: {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn fit_dirac_squared_on_t2() {
        let s = samples((0.005, 0.02), 30, |t| heat_trace_product(2, t, 0.0, 2));
        let fit = fit_heat_coefficients(&s, 2, 12).unwrap();
        assert!(rel(fit.coefficients.a(0), 2.0 * PI) < 1e-9);
        assert!(fit.coefficients.a(2).abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_short_windows() {
        let s = samples((0.01, 0.02), 4, |t| PI / t);
        assert!(fit_heat_coefficients(&s, 2, 6).is_err());
        assert!(fit_heat_coefficients(&s, 2, 3).is_err());
    }

    #[test]
    fn ill_conditioned_window_is_flagged() {
        let s = samples((0.0100, 0.0101), 30, |t| PI / t);
        let fit = fit_heat_coefficients(&s, 2, 12).unwrap();
        assert!(fit.warning.is_some(), "condition {}", fit.condition);
    }

    #[test]
    fn curvature_of_noncommuting_connection() {
        // P = −Σ(∂_μ + ω_μ)² with ω₁ = aL_x, ω₂ = bL_y in so(3): E = 0 and
        // Ω₁₂ = ab·L_z, so a₄ = (π/6)·tr(Ω₁₂²)·... = −(π/3)a²b².
        // Oracle: Σ_k tr exp(−t M(k)), M(k) = −Σ(ik_μ + ω_μ)², fitted at small t.
        let (a, b) = (0.5, 0.8);
        let lx = Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        let ly = Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0);
        let w = [lx * a, ly * b];
        let mut data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 3);
        let rows = |m: &Matrix3<f64>| (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect::<Vec<_>>();
        data.a = w.iter().map(|m| rows(&(m * 2.0))).collect();
        data.b = rows(&(w[0] * w[0] + w[1] * w[1]));
        let sc = seeley_dewitt(&data, 1.0).unwrap();
        assert!(sc.a(2).abs() < 1e-15);
        assert!(rel(sc.a(4), -PI / 3.0 * a * a * b * b) < 1e-14);

        let trace = |t: f64| -> f64 {
            let kmax = (45.0 / t).sqrt() as i64 + 2;
            let one = Complex::new(1.0, 0.0);
            crate::par::sum(((2 * kmax + 1) * (2 * kmax + 1)) as usize, |idx| {
                let k = [(idx as i64 / (2 * kmax + 1)) - kmax, (idx as i64 % (2 * kmax + 1)) - kmax];
                let mut m = Matrix3::<Complex<f64>>::zeros();
                for mu in 0..2 {
                    let x = Matrix3::<Complex<f64>>::identity() * Complex::new(0.0, k[mu] as f64)
                        + w[mu].map(|v| one * v);
                    m -= x * x;
                }
                let eig = m.symmetric_eigen();
                eig.eigenvalues.iter().map(|l| (-t * l).exp()).sum::<f64>()
            })
        };
        let s = samples((0.005, 0.02), 24, trace);
        let fit = fit_heat_coefficients(&s, 2, 10).unwrap();
        assert!(rel(fit.coefficients.a(0), 3.0 * PI) < 1e-9);
        assert!(fit.coefficients.a(2).abs() < 1e-6);
        assert!(rel(fit.coefficients.a(4), sc.a(4)) < 1e-5, "{} vs {}", fit.coefficients.a(4), sc.a(4));
    }

    #[test]
    fn conformal_variation_examples() {
        let c = 0.3;
        let chk = conformal_variation_check(&LaplaceTypeData::laplacian_with_mass(2, 0.0, 1), c).unwrap();
        assert!(rel(chk.lhs[0], 2.0 * c * PI) < 1e-9);
        assert!(chk.lhs[1].abs() < 1e-12 && chk.rhs[1] == 0.0);
        let data = LaplaceTypeData::laplacian_with_mass(4, 1.0, 1);
        let chk = conformal_variation_check(&data, c).unwrap();
        let a2 = seeley_dewitt(&data, 1.0).unwrap().a(2);
        assert!(rel(chk.lhs[1], 2.0 * c * a2) < 1e-9);
        assert!(chk.lhs[2].abs() < 1e-9 && chk.rhs[2] == 0.0);
    }

    #[test]
    fn invalid_operator_data() {
        let mut data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 1);
        data.metric_inverse = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(seeley_dewitt(&data, 1.0).is_err());
        let mut data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 1);
        data.a.pop();
        assert!(normal_form(&data).is_err());
        let mut data = LaplaceTypeData::laplacian_with_mass(2, 0.0, 1);
        data.volume = -1.0;
        assert!(seeley_dewitt(&data, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn conformal_identity_holds(d in 1usize..=6, m in 0.0f64..3.0, c in -1.0f64..1.0, rank in 1usize..=3) {
            let chk = conformal_variation_check(&LaplaceTypeData::laplacian_with_mass(d, m, rank), c).unwrap();
            prop_assert!(chk.holds(1e-6, 1e-10), "{chk:?}");
        }

        #[test]
        fn potential_identity_holds(d in 1usize..=6, m in 0.0f64..3.0, h in -2.0f64..2.0, shift in -1.0f64..1.0) {
            let data = LaplaceTypeData::laplacian_with_mass(d, m, 2).shifted(shift);
            let chk = potential_variation_check(&data, h).unwrap();
            prop_assert!(chk.holds(1e-6, 1e-10), "{chk:?}");
        }

        #[test]
        fn coefficients_linear_in_smearing(f in -3.0f64..3.0, m in 0.0f64..2.0) {
            let data = LaplaceTypeData::laplacian_with_mass(3, m, 1);
            let one = seeley_dewitt(&data, 1.0).unwrap();
            let sf = seeley_dewitt(&data, f).unwrap();
            for k in 0..5 {
                prop_assert!((sf.a(k) - f * one.a(k)).abs() <= 1e-14 * (1.0 + one.a(k).abs()));
            }
        }
    }
}
