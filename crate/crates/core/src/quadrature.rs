//! Gaussian rules, composite panel integration, and product rules on spheres.

use crate::error::{Result, SpecError};
use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Zero;
use std::f64::consts::PI;
use std::ops::{Add, Mul};

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss–Hermite rule for the weight e^{-x^2} on the real line (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Composite Gauss–Legendre over `panels` equal sub-intervals of [a, b].
pub fn integrate_panels<T, F>(f: F, a: f64, b: f64, panels: usize, rule: &Rule) -> T
where
    T: Zero + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(f64) -> T,
{
    let h = (b - a) / panels as f64;
    let mut acc = T::zero();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            acc = acc + f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// Adaptive bisection with a 20-point Gauss–Legendre rule on each piece.
pub fn integrate_adaptive<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let rule = gauss_legendre(20);
    let whole = integrate_panels(f, a, b, 1, &rule);
    adapt(f, a, b, whole, tol, &rule, 0)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    rule: &Rule,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = integrate_panels(f, a, m, 1, rule);
    let right = integrate_panels(f, m, b, 1, rule);
    let refined = left + right;
    if (refined - whole).abs() <= tol.max(1e-15 * refined.abs()) {
        return Ok(refined);
    }
    if depth >= 40 {
        return Err(SpecError::Quadrature(format!(
            "adaptive rule on [{a}, {b}] still changes by {:.3e}",
            (refined - whole).abs()
        )));
    }
    Ok(adapt(f, a, m, left, 0.5 * tol, rule, depth + 1)?
        + adapt(f, m, b, right, 0.5 * tol, rule, depth + 1)?)
}

/// Product rule on the unit sphere S^{d-1} in R^d for d in {2, 3, 4}.
///
/// `level` sets the number of nodes per angle; polynomial integrands of degree
/// below `2 * level` are integrated exactly.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(dim: usize, level: usize) -> Result<Self> {
        let level = level.max(2);
        let azimuth: Vec<(f64, f64)> = {
            let m = 2 * level;
            (0..m)
                .map(|j| {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                    (phi, 2.0 * PI / m as f64)
                })
                .collect()
        };
        let legendre = gauss_legendre(level);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            2 => {
                for &(phi, w) in &azimuth {
                    points.push(vec![phi.cos(), phi.sin()]);
                    weights.push(w);
                }
            }
            3 => {
                for (t, wt) in legendre.nodes.iter().zip(&legendre.weights) {
                    let s = (1.0 - t * t).sqrt();
                    for &(phi, w) in &azimuth {
                        points.push(vec![*t, s * phi.cos(), s * phi.sin()]);
                        weights.push(wt * w);
                    }
                }
            }
            4 => {
                // Gauss–Chebyshev of the second kind carries the sin^2 weight of the top angle.
                let n = level;
                for k in 1..=n {
                    let a = k as f64 * PI / (n as f64 + 1.0);
                    let (c, s) = (a.cos(), a.sin());
                    let wc = PI / (n as f64 + 1.0) * s * s;
                    for (t, wt) in legendre.nodes.iter().zip(&legendre.weights) {
                        let st = (1.0 - t * t).sqrt();
                        for &(phi, w) in &azimuth {
                            points.push(vec![c, s * t, s * st * phi.cos(), s * st * phi.sin()]);
                            weights.push(wc * wt * w);
                        }
                    }
                }
            }
            _ => {
                return Err(SpecError::InvalidArgument(format!(
                    "sphere quadrature supports d in {{2, 3, 4}}, got {dim}"
                )))
            }
        }
        Ok(SphereRule { dim, points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
