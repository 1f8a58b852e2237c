//! Lattice shells of Z^n and the Laplace/Dirac spectra of flat tori R^n / 2πZ^n.
//!
//! The Laplacian has eigenvalues |k|^2 for k in Z^n; the Dirac operator has
//! eigenvalues ±|k| on spinors of rank 2^⌊n/2⌋, so each lattice point carries
//! `spinor_rank` states. The zero shell (the kernel) is always kept.

use crate::error::{invalid, Result, SpecError};
use crate::quadrature::{gauss_legendre, integrate_panels};
use crate::special::sphere_volume;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shell {
    pub norm_sq: u64,
    pub lattice_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellSpectrum {
    pub dimension: usize,
    pub max_norm_sq: u64,
    pub spinor_rank: u64,
    pub shells: Vec<Shell>,
}

/// Heat-trace value together with a rigorous bound on the relative
/// contribution of the lattice points beyond the enumerated range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatTrace {
    pub value: f64,
    pub rel_tail_bound: f64,
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Spinor rank 2^⌊n/2⌋ of the Dirac operator on T^n.
pub fn dirac_spinor_rank(n: usize) -> u64 {
    1u64 << (n / 2)
}

/// All shells of Z^n with |k|^2 <= max_norm_sq, by a bounded scan of the
/// lattice ball bucketed by squared norm.
pub fn enumerate_shells(n: usize, max_norm_sq: u64) -> Result<ShellSpectrum> {
    if n == 0 {
        return Err(invalid("lattice dimension must be at least 1"));
    }
    if n > 8 {
        return Err(invalid(format!("lattice dimension {n} is above the supported 8")));
    }
    let buckets = count_ball(n, max_norm_sq);
    let shells = buckets
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(m, c)| Shell { norm_sq: m as u64, lattice_count: c })
        .collect();
    Ok(ShellSpectrum { dimension: n, max_norm_sq, spinor_rank: 1, shells })
}

/// Scalar Laplacian spectrum on T^n.
pub fn laplace_spectrum(n: usize, max_norm_sq: u64) -> Result<ShellSpectrum> {
    enumerate_shells(n, max_norm_sq)
}

/// Spectrum of |D| on T^n: lattice shells with multiplicity 2^⌊n/2⌋.
pub fn dirac_spectrum(n: usize, max_norm_sq: u64) -> Result<ShellSpectrum> {
    let mut s = enumerate_shells(n, max_norm_sq)?;
    s.spinor_rank = dirac_spinor_rank(n);
    Ok(s)
}

fn isqrt(m: u64) -> u64 {
    let mut r = (m as f64).sqrt() as u64;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

fn count_ball(n: usize, max: u64) -> Vec<u64> {
    let r = isqrt(max) as i64;
    let len = max as usize + 1;
    let slice = |k1: i64, acc: &mut Vec<u64>| {
        let used = (k1 * k1) as u64;
        scan(n - 1, used, max, acc);
    };
    #[cfg(feature = "parallel")]
    {
        (-r..=r)
            .into_par_iter()
            .fold(
                || vec![0u64; len],
                |mut acc, k1| {
                    slice(k1, &mut acc);
                    acc
                },
            )
            .reduce(
                || vec![0u64; len],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = vec![0u64; len];
        for k1 in -r..=r {
            slice(k1, &mut acc);
        }
        acc
    }
}

// Adds every completion of a partial lattice point with squared norm `used`
// by `rem` more coordinates.
fn scan(rem: usize, used: u64, max: u64, acc: &mut [u64]) {
    if rem == 0 {
        acc[used as usize] += 1;
        return;
    }
    let r = isqrt(max - used) as i64;
    for k in -r..=r {
        scan(rem - 1, used + (k * k) as u64, max, acc);
    }
}

impl ShellSpectrum {
    /// Total number of states (lattice points times spinor rank).
    pub fn total_states(&self) -> u64 {
        self.shells.iter().map(|s| s.lattice_count).sum::<u64>() * self.spinor_rank
    }

    pub fn kernel_dimension(&self) -> u64 {
        self.shells
            .first()
            .filter(|s| s.norm_sq == 0)
            .map_or(0, |s| s.lattice_count * self.spinor_rank)
    }
}

/// Number of eigenvalues of |D| (or of √Δ) in [0, lambda], kernel included.
pub fn counting_function(spec: &ShellSpectrum, lambda: f64) -> Result<u64> {
    if !(lambda >= 0.0) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let l2 = lambda * lambda;
    if l2 > spec.max_norm_sq as f64 {
        return Err(SpecError::OutOfRange {
            what: "lambda^2",
            value: l2,
            max: spec.max_norm_sq as f64,
        });
    }
    let n: u64 = spec
        .shells
        .iter()
        .take_while(|s| (s.norm_sq as f64) <= l2)
        .map(|s| s.lattice_count)
        .sum();
    Ok(n * spec.spinor_rank)
}

/// Upper bound for the number of lattice points in the closed ball of squared
/// radius x: every such point owns a unit cube inside the ball of radius
/// sqrt(x) + sqrt(n)/2.
fn lattice_count_upper(n: usize, x: f64) -> f64 {
    let v = sphere_volume(n) / n as f64;
    v * (x.sqrt() + 0.5 * (n as f64).sqrt()).powi(n as i32)
}

/// Bound on sum over |k|^2 > m of e^{-t |k|^2}, by Stieltjes integration by
/// parts against the lattice-count upper bound.
fn heat_tail_bound(n: usize, t: f64, m: f64) -> f64 {
    let span = 80.0 / t;
    let rule = gauss_legendre(24);
    t * integrate_panels(
        |x| (-t * x).exp() * lattice_count_upper(n, x),
        m,
        m + span,
        64,
        &rule,
    ) + (-t * (m + span)).exp() * lattice_count_upper(n, m + span)
}

/// Tr e^{-t(P + shift)} summed over the enumerated shells, with the relative
/// truncation bound. Fails when that bound exceeds `tol`.
pub fn heat_trace_tol(spec: &ShellSpectrum, t: f64, shift: f64, tol: f64) -> Result<HeatTrace> {
    if !(t > 0.0) {
        return Err(invalid(format!("heat time must be positive, got {t}")));
    }
    if !(shift >= 0.0) {
        return Err(invalid(format!("shift must be non-negative, got {shift}")));
    }
    let lattice_sum: f64 = spec
        .shells
        .iter()
        .rev()
        .map(|s| s.lattice_count as f64 * (-t * s.norm_sq as f64).exp())
        .sum();
    let tail = heat_tail_bound(spec.dimension, t, spec.max_norm_sq as f64);
    let rel = tail / lattice_sum;
    if rel > tol {
        return Err(SpecError::TailBound { bound: rel, tol });
    }
    let value = spec.spinor_rank as f64 * (-t * shift).exp() * lattice_sum;
    Ok(HeatTrace { value, rel_tail_bound: rel })
}

pub fn heat_trace(spec: &ShellSpectrum, t: f64, shift: f64) -> Result<HeatTrace> {
    heat_trace_tol(spec, t, shift, DEFAULT_TAIL_TOL)
}

/// Smallest enumeration range that meets the default tail tolerance at heat time t.
pub fn max_norm_sq_for_heat(n: usize, t: f64, tol: f64) -> u64 {
    let mut m = (1.0 / t).ceil() as u64;
    loop {
        let main = (std::f64::consts::PI / t).powf(n as f64 / 2.0).max(1.0);
        if heat_tail_bound(n, t, m as f64) / main <= 0.5 * tol {
            return m;
        }
        m = m + m / 4 + 1;
    }
}

/// θ(t) = Σ_{k∈Z} e^{-t k^2}, the one-dimensional torus heat trace.
pub fn theta1(t: f64) -> f64 {
    let mut s = 0.0;
    let kmax = (40.0 / t).sqrt().ceil() as i64 + 1;
    for k in (1..=kmax).rev() {
        s += (-t * (k * k) as f64).exp();
    }
    1.0 + 2.0 * s
}

/// Product form spinor_rank · e^{-t shift} · θ(t)^n of the torus heat trace.
pub fn heat_trace_product(n: usize, t: f64, shift: f64, spinor_rank: u64) -> f64 {
    spinor_rank as f64 * (-t * shift).exp() * theta1(t).powi(n as i32)
}
