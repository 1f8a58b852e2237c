//! Wodzicki residue of a classical pseudodifferential operator on a flat torus
//! from its order −d symbol:
//! WRes P = ∫ c_P(x) dx with c_P(x) = (2π)^{−d} ∫_{S^{d−1}} tr σ_{−d}(x, ξ) dξ.

use crate::dixmier_trace::zeta_residue_estimate;
use crate::error::{invalid, Result, SpecError};
use crate::par;
use crate::quadrature::SphereRule;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative agreement required between two refinement levels.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Allowed |σ(x, 2ξ) − 2^{−d}σ(x, ξ)| relative to |σ(x, ξ)|.
pub const HOMOGENEITY_TOL: f64 = 1e-10;

const HOMOGENEITY_SAMPLES: usize = 100;

/// Order −d matrix-valued symbol on T^d × (R^d \ 0).
pub trait Symbol: Sync {
    fn dimension(&self) -> usize;
    fn fiber_rank(&self) -> usize;
    /// Volume of the x-domain, a cube of side volume^{1/d}.
    fn x_volume(&self) -> f64;
    fn depends_on_x(&self) -> bool {
        false
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> DMatrix<Complex64>;
    fn trace(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        self.eval(x, xi).trace()
    }
}

/// c·ξ^p·|ξ|^{−d−|p|}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub coeff: Complex64,
    pub p: Vec<u32>,
}

/// Matrix of sums of monomial terms; x-independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySymbol {
    pub dimension: usize,
    pub volume: f64,
    pub entries: Vec<Vec<Vec<MonomialTerm>>>,
}

impl PolySymbol {
    /// rank × rank identity times the given terms, on the torus (2π)^d.
    pub fn scalar(dimension: usize, rank: usize, terms: Vec<MonomialTerm>) -> Self {
        let entries = (0..rank)
            .map(|i| (0..rank).map(|j| if i == j { terms.clone() } else { vec![] }).collect())
            .collect();
        PolySymbol { dimension, volume: (2.0 * PI).powi(dimension as i32), entries }
    }

    /// Principal symbol |ξ|^{−d} of (1+Δ)^{−d/2}.
    pub fn laplacian(dimension: usize, rank: usize) -> Self {
        Self::scalar(dimension, rank, vec![MonomialTerm { coeff: Complex64::new(1.0, 0.0), p: vec![0; dimension] }])
    }

    /// ξ^p |ξ|^{−d−|p|}.
    pub fn monomial(p: &[u32]) -> Self {
        Self::scalar(p.len(), 1, vec![MonomialTerm { coeff: Complex64::new(1.0, 0.0), p: p.to_vec() }])
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.entries.len();
        if r == 0 || self.entries.iter().any(|row| row.len() != r) {
            return Err(invalid("symbol entries must form a nonempty square matrix"));
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(invalid("x-domain volume must be positive"));
        }
        for t in self.entries.iter().flatten().flatten() {
            if t.p.len() != self.dimension {
                return Err(invalid(format!("exponent {:?} does not have {} entries", t.p, self.dimension)));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(invalid("non-finite coefficient"));
            }
        }
        Ok(())
    }
}

fn monomial_value(t: &MonomialTerm, xi: &[f64], norm: f64) -> Complex64 {
    let d = xi.len() as i32;
    let deg: u32 = t.p.iter().sum();
    let mono: f64 = xi.iter().zip(&t.p).map(|(x, &e)| x.powi(e as i32)).product();
    t.coeff * (mono * norm.powi(-d - deg as i32))
}

impl Symbol for PolySymbol {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn fiber_rank(&self) -> usize {
        self.entries.len()
    }
    fn x_volume(&self) -> f64 {
        self.volume
    }
    fn eval(&self, _x: &[f64], xi: &[f64]) -> DMatrix<Complex64> {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = self.entries.len();
        DMatrix::from_fn(r, r, |i, j| self.entries[i][j].iter().map(|t| monomial_value(t, xi, norm)).sum())
    }
    fn trace(&self, _x: &[f64], xi: &[f64]) -> Complex64 {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        (0..self.entries.len())
            .flat_map(|i| self.entries[i][i].iter())
            .map(|t| monomial_value(t, xi, norm))
            .sum()
    }
}

type SymbolFn = dyn Fn(&[f64], &[f64]) -> DMatrix<Complex64> + Send + Sync;

/// Symbol given by a closure.
pub struct FnSymbol {
    pub dimension: usize,
    pub rank: usize,
    pub volume: f64,
    pub x_dependent: bool,
    f: Box<SymbolFn>,
}

impl FnSymbol {
    pub fn new(
        dimension: usize,
        rank: usize,
        volume: f64,
        x_dependent: bool,
        f: impl Fn(&[f64], &[f64]) -> DMatrix<Complex64> + Send + Sync + 'static,
    ) -> Self {
        FnSymbol { dimension, rank, volume, x_dependent, f: Box::new(f) }
    }
}

impl Symbol for FnSymbol {
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn fiber_rank(&self) -> usize {
        self.rank
    }
    fn x_volume(&self) -> f64 {
        self.volume
    }
    fn depends_on_x(&self) -> bool {
        self.x_dependent
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> DMatrix<Complex64> {
        (self.f)(x, xi)
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if (2..=4).contains(&d) {
        Ok(())
    } else {
        Err(invalid(format!("residue density supports d in {{2, 3, 4}}, got {d}")))
    }
}

/// Spot-checks σ(x, 2ξ) = 2^{−d}σ(x, ξ) at fixed pseudo-random unit ξ.
pub fn check_homogeneity<S: Symbol + ?Sized>(sym: &S, x: &[f64]) -> Result<()> {
    let d = sym.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let scale = 2f64.powi(-(d as i32));
    let mut worst: f64 = 0.0;
    for _ in 0..HOMOGENEITY_SAMPLES {
        let mut xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-3 {
            continue;
        }
        xi.iter_mut().for_each(|v| *v /= n);
        let a = sym.eval(x, &xi);
        let xi2: Vec<f64> = xi.iter().map(|v| 2.0 * v).collect();
        let b = sym.eval(x, &xi2);
        let dev = (b - &a * Complex64::new(scale, 0.0)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let size = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
        worst = worst.max(dev / size);
    }
    if worst > HOMOGENEITY_TOL {
        return Err(SpecError::Homogeneity { deviation: worst });
    }
    Ok(())
}

fn max_level(d: usize) -> usize {
    match d {
        2 => 1 << 14,
        3 => 1 << 10,
        _ => 1 << 7,
    }
}

/// ∫_{S^{d−1}} tr σ(x, ξ) dξ with dyadic refinement of the product rule.
fn sphere_integral<S: Symbol + ?Sized>(sym: &S, x: &[f64]) -> Result<Complex64> {
    let d = sym.dimension();
    let eval = |level: usize| -> Result<(Complex64, f64)> {
        let rule = SphereRule::new(d, level)?;
        let val = par::sum_complex(rule.len(), |i| sym.trace(x, &rule.points[i]) * rule.weights[i]);
        let mass = par::sum(rule.len(), |i| sym.trace(x, &rule.points[i]).norm() * rule.weights[i]);
        Ok((val, mass))
    };
    let mut level = 8;
    let (mut prev, _) = eval(level)?;
    while level < max_level(d) {
        level *= 2;
        let (cur, mass) = eval(level)?;
        if (cur - prev).norm() <= QUADRATURE_TOL * cur.norm() + 1e-14 * mass {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SpecError::Quadrature(format!("sphere rule did not settle by level {level}")))
}

/// c_P(x) = (2π)^{−d} ∫_{S^{d−1}} tr σ(x, ξ) dξ.
pub fn local_density<S: Symbol + ?Sized>(sym: &S, x: &[f64]) -> Result<Complex64> {
    let d = sym.dimension();
    check_dimension(d)?;
    if x.len() != d {
        return Err(invalid(format!("point has {} coordinates, expected {d}", x.len())));
    }
    check_homogeneity(sym, x)?;
    Ok(sphere_integral(sym, x)? * (2.0 * PI).powi(-(d as i32)))
}

/// Periodic trapezoid sum of c_P over an m^d grid of the x-cube.
fn grid_integral<S: Symbol + ?Sized>(sym: &S, m: usize) -> Result<Complex64> {
    let d = sym.dimension();
    let side = sym.x_volume().powf(1.0 / d as f64);
    let total = m.pow(d as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for idx in 0..total {
        let mut rest = idx;
        let x: Vec<f64> = (0..d)
            .map(|_| {
                let c = rest % m;
                rest /= m;
                side * c as f64 / m as f64
            })
            .collect();
        acc += local_density(sym, &x)?;
    }
    Ok(acc * (sym.x_volume() / total as f64))
}

/// WRes P = ∫ c_P(x) dx.
pub fn wres<S: Symbol + ?Sized>(sym: &S) -> Result<Complex64> {
    let d = sym.dimension();
    check_dimension(d)?;
    if !(sym.x_volume().is_finite() && sym.x_volume() > 0.0) {
        return Err(invalid("x-domain volume must be positive"));
    }
    if !sym.depends_on_x() {
        return Ok(local_density(sym, &vec![0.0; d])? * sym.x_volume());
    }
    let cap = [0, 0, 64, 16, 8][d];
    let mut m = 4;
    let mut prev = grid_integral(sym, m)?;
    while m < cap {
        m *= 2;
        let cur = grid_integral(sym, m)?;
        if (cur - prev).norm() <= QUADRATURE_TOL * cur.norm().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SpecError::Quadrature(format!("x-grid did not settle at {m} points per axis")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnesCheck {
    pub dimension: usize,
    pub rank: usize,
    /// Zeta-residue Dixmier trace of (1+Δ)^{−d/2} on rank-r bundles.
    pub dixmier: f64,
    pub wres_over_d: f64,
}

/// Tr_Dix((1+Δ)^{−d/2}) against WRes/d on T^d.
pub fn connes_trace_check(d: usize, rank: usize) -> Result<ConnesCheck> {
    if !(d == 2 || d == 4) {
        return Err(invalid(format!("dimension must be 2 or 4, got {d}")));
    }
    if rank == 0 {
        return Err(invalid("rank must be positive"));
    }
    let w = wres(&PolySymbol::laplacian(d, rank))?;
    Ok(ConnesCheck {
        dimension: d,
        rank,
        dixmier: rank as f64 * zeta_residue_estimate(d, d as f64 / 2.0)?,
        wres_over_d: w.re / d as f64,
    })
}
