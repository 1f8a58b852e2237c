//! Epstein zeta Z_n(s) = Σ' |k|^{-s}, polynomial lattice zetas Σ' k^p |k|^{-s},
//! and the one-dimensional twisted zeta Σ' e^{2πika} |k|^{-s}.
//!
//! All three are continued to the whole plane through their Mellin transforms:
//! the theta series is split at t = 1, the small-t half is mapped to large t by
//! Poisson summation, and what remains is a pair of explicit pole terms plus an
//! exponentially convergent integral over [1, ∞).

use crate::error::{invalid, Result};
use crate::quadrature::{gauss_legendre, integrate_panels, Rule};
use crate::special::{digamma, gamma_real, hermite, rgamma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Value of a meromorphic function near a point: the constant Laurent term and
/// the residue of a simple pole (zero when `pole_order` is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeroValue {
    pub at_point: Complex64,
    pub finite_part: Complex64,
    pub pole_order: u8,
    pub residue: Complex64,
}

impl MeroValue {
    fn regular(s: Complex64, v: Complex64) -> Self {
        MeroValue { at_point: s, finite_part: v, pole_order: 0, residue: Complex64::new(0.0, 0.0) }
    }

    fn zero(s: Complex64) -> Self {
        Self::regular(s, Complex64::new(0.0, 0.0))
    }
}

/// Exponent tuple p of the monomial k^p = k_1^{p_1} ... k_n^{p_n}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyExponent(pub Vec<u32>);

impl PolyExponent {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn all_even(&self) -> bool {
        self.0.iter().all(|p| p % 2 == 0)
    }
}

pub const MAX_EPSTEIN_DIM: usize = 8;
const MAX_POLY_DEGREE: u32 = 8;
const PANEL_ORDER: usize = 24;
// Gaussian tails are cut once e^{-π t} falls below this.
const TAIL_EPS: f64 = 1e-19;

fn rule() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Upper end T of [1, T] beyond which an integrand bounded by
/// poly(t) · e^{-rate t} · t^{growth} is negligible.
fn cutoff(rate: f64, growth: f64) -> f64 {
    let mut t = 1.0 + (-TAIL_EPS.ln()) / rate;
    for _ in 0..50 {
        let next = 1.0 + (-TAIL_EPS.ln() + growth.max(0.0) * t.ln() + 5.0) / rate;
        if (next - t).abs() < 1e-3 {
            break;
        }
        t = next;
    }
    t
}

fn integrate_tail<F: Fn(f64) -> Complex64>(f: F, rate: f64, growth: f64) -> Complex64 {
    let t_max = cutoff(rate, growth);
    // Panels of at most two e-folds of the decay, graded geometrically so the
    // power factor t^{s/2} is resolved near t = 1.
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = 1.0;
    while lo < t_max {
        let width = (2.0 / rate).min(0.25 * lo).max(1e-3);
        let hi = (lo + width).min(t_max);
        acc += integrate_panels(&f, lo, hi, 1, rule());
        lo = hi;
    }
    acc
}

/// θ_1(t) − 1 = 2 Σ_{k≥1} e^{-π t k²}, for t ≥ 1/4.
fn theta_minus_one(t: f64) -> f64 {
    let mut s = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-PI * t * k * k).exp();
        s += term;
        if term < 1e-18 * s {
            break;
        }
        k += 1.0;
    }
    2.0 * s
}

/// (1 + e)^n − 1 without cancellation for small e.
fn power_minus_one(e: f64, n: usize) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 1..=n {
        binom *= (n - j + 1) as f64 / j as f64;
        acc += binom * e.powi(j as i32);
    }
    acc
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_EPSTEIN_DIM {
        return Err(invalid(format!(
            "lattice dimension must be in 1..={MAX_EPSTEIN_DIM}, got {n}"
        )));
    }
    Ok(())
}

/// π^{s/2} / Γ(s/2) and its derivative in s.
fn mellin_prefactor(s: Complex64) -> (Complex64, Complex64) {
    let h = (0.5 * PI.ln() * s).exp() * rgamma(0.5 * s);
    let dh = h * (0.5 * PI.ln() - 0.5 * digamma(0.5 * s));
    (h, dh)
}

fn is_at(s: Complex64, x: f64) -> bool {
    (s - c(x)).norm() == 0.0
}

/// Z_n(s) = Σ_{k ∈ Z^n \ 0} |k|^{-s}. At s = n the result carries the simple
/// pole (residue 2π^{n/2}/Γ(n/2)) and the constant Laurent coefficient.
pub fn epstein_zeta(n: usize, s: Complex64) -> Result<MeroValue> {
    check_dim(n)?;
    let nf = n as f64;
    let integral = |s: Complex64| {
        integrate_tail(
            |t| {
                let th = power_minus_one(theta_minus_one(t), n);
                c(th) * ((0.5 * s - 1.0) * t.ln()).exp()
                    + c(th) * ((0.5 * (nf - s) - 1.0) * t.ln()).exp()
            },
            PI,
            0.5 * s.re.abs().max((nf - s.re).abs()),
        )
    };
    let (h, dh) = mellin_prefactor(s);
    let base = (0.5 * PI.ln() * s).exp();
    let smooth = -base * rgamma(0.5 * s + 1.0) + h * integral(s);
    if is_at(s, nf) {
        let finite = smooth + 2.0 * dh;
        return Ok(MeroValue { at_point: s, finite_part: finite, pole_order: 1, residue: 2.0 * h });
    }
    Ok(MeroValue::regular(s, smooth - 2.0 * h / (nf - s)))
}

/// Closed form of the residue of Z_n at s = n.
pub fn epstein_residue_closed_form(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_real(n as f64 / 2.0)
}

/// ∫_{S^{n-1}} u^p dS = 2 Π Γ((p_i+1)/2) / Γ((n+|p|)/2), zero for odd p_i.
pub fn sphere_monomial_integral(n: usize, p: &PolyExponent) -> Result<f64> {
    if n == 0 || p.0.len() != n {
        return Err(invalid(format!("exponent tuple has length {}, expected {n}", p.0.len())));
    }
    if !p.all_even() {
        return Ok(0.0);
    }
    let num: f64 = p.0.iter().map(|&pi| gamma_real((pi as f64 + 1.0) / 2.0)).product();
    Ok(2.0 * num / gamma_real((n as f64 + p.degree() as f64) / 2.0))
}

/// Σ_{k∈Z} k^p e^{-π t k²} for even p (the k = 0 term is 1 when p = 0).
fn weighted_theta(p: u32, t: f64) -> f64 {
    let mut s = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = k.powi(p as i32) * (-PI * t * k * k).exp();
        s += term;
        if k * k * PI * t > 40.0 + p as f64 * k.ln().max(1.0) && term < 1e-18 * s.max(1e-300) {
            break;
        }
        k += 1.0;
    }
    if p == 0 {
        1.0 + 2.0 * s
    } else {
        2.0 * s
    }
}

/// Relative correction E_p(1/u) in Σ_k k^p e^{-π k²/u} = G_p(1/u)(1 + E_p(1/u)),
/// G_p(t) = Γ((p+1)/2)(πt)^{-(p+1)/2}, from Poisson summation.
fn poisson_correction(p: u32, u: f64) -> f64 {
    let g = gamma_real((p as f64 + 1.0) / 2.0);
    let sign = if (p / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let pref = PI.sqrt() * 2f64.powi(-(p as i32)) * sign / g;
    let mut s = 0.0;
    let mut m = 1.0f64;
    loop {
        let term = hermite(p as usize, m * (PI * u).sqrt()) * (-PI * m * m * u).exp();
        s += term;
        if m * m * PI * u > 45.0 + 2.0 * p as f64 * (m * (PI * u).sqrt()).ln().max(1.0) {
            break;
        }
        m += 1.0;
    }
    2.0 * pref * s
}

/// ζ_p(s) = Σ_{k ∈ Z^n \ 0} k^p |k|^{-s}; identically zero when some p_i is odd.
/// The unique pole sits at s = n + |p|.
pub fn poly_zeta(n: usize, p: &PolyExponent, s: Complex64) -> Result<MeroValue> {
    check_dim(n)?;
    if p.0.len() != n {
        return Err(invalid(format!("exponent tuple has length {}, expected {n}", p.0.len())));
    }
    if p.degree() > MAX_POLY_DEGREE {
        return Err(invalid(format!("|p| = {} exceeds {MAX_POLY_DEGREE}", p.degree())));
    }
    if !p.all_even() {
        return Ok(MeroValue::zero(s));
    }
    let big_n = n as f64 + p.degree() as f64;
    let is_constant = p.degree() == 0;
    let cg: f64 = p.0.iter().map(|&pi| gamma_real((pi as f64 + 1.0) / 2.0)).product::<f64>()
        * PI.powf(-big_n / 2.0);

    // [1, ∞): the weighted theta product itself.
    let large_t = integrate_tail(
        |t| {
            let th = if is_constant {
                power_minus_one(theta_minus_one(t), n)
            } else {
                p.0.iter().map(|&pi| weighted_theta(pi, t)).product()
            };
            c(th) * ((0.5 * s - 1.0) * t.ln()).exp()
        },
        PI,
        0.5 * s.re.abs() + p.degree() as f64,
    );
    // (0, 1] with u = 1/t: G(1/u) (Π(1 + E_i) − 1) u^{-s/2 - 1}.
    let small_t = integrate_tail(
        |u| {
            let mut prod_minus_one = 0.0;
            for &pi in &p.0 {
                let e = poisson_correction(pi, u);
                prod_minus_one = prod_minus_one * (1.0 + e) + e;
            }
            c(cg * prod_minus_one) * ((0.5 * big_n - 0.5 * s - 1.0) * u.ln()).exp()
        },
        PI,
        0.5 * (big_n - s.re).abs() + p.degree() as f64,
    );
    let (h, dh) = mellin_prefactor(s);
    let base = (0.5 * PI.ln() * s).exp();
    let mut smooth = h * (large_t + small_t);
    if is_constant {
        smooth -= base * rgamma(0.5 * s + 1.0);
    }
    if is_at(s, big_n) {
        return Ok(MeroValue {
            at_point: s,
            finite_part: smooth + 2.0 * cg * dh,
            pole_order: 1,
            residue: 2.0 * cg * h,
        });
    }
    Ok(MeroValue::regular(s, smooth + 2.0 * cg * h / (s - big_n)))
}

fn frac_distance(a: f64) -> f64 {
    let f = a - a.floor();
    f.min(1.0 - f)
}

/// f_a(s) = Σ'_{k∈Z} e^{2πika} |k|^{-s} = 2 Σ_{k≥1} cos(2πka) k^{-s}, entire
/// for a ∉ Z. Integer a is delegated to the Epstein zeta in dimension 1.
pub fn twisted_zeta_1d(a: f64, s: Complex64) -> Result<MeroValue> {
    if !a.is_finite() {
        return Err(invalid("twist must be finite"));
    }
    let dist = frac_distance(a);
    if dist == 0.0 {
        return epstein_zeta(1, s);
    }
    let i1 = integrate_tail(
        |t| {
            let mut acc = 0.0;
            let mut k = 1.0f64;
            loop {
                let g = (-PI * t * k * k).exp();
                acc += (2.0 * PI * k * a).cos() * g;
                if g < 1e-19 {
                    break;
                }
                k += 1.0;
            }
            c(2.0 * acc) * ((0.5 * s - 1.0) * t.ln()).exp()
        },
        PI,
        0.5 * s.re.abs(),
    );
    // Poisson-dual half: Σ_m e^{-π (m-a)^2 u} u^{(1-s)/2 - 1}.
    let f = a - a.floor();
    let i2 = integrate_tail(
        |u| {
            let mut acc = 0.0;
            for m in -60i64..=60 {
                let x = m as f64 - f;
                acc += (-PI * x * x * u).exp();
            }
            c(acc) * ((0.5 * (1.0 - s) - 1.0) * u.ln()).exp()
        },
        PI * dist * dist,
        0.5 * (1.0 - s.re).abs(),
    );
    let (h, _) = mellin_prefactor(s);
    let base = (0.5 * PI.ln() * s).exp();
    Ok(MeroValue::regular(s, h * (i1 + i2) - base * rgamma(0.5 * s + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductResidue {
    pub lhs: f64,
    pub rhs: f64,
}

/// Residue of Z_{d1+d2} at d1+d2 against
/// ½ Γ(d1/2)Γ(d2/2)/Γ((d1+d2)/2) · Res Z_{d1} · Res Z_{d2}.
pub fn product_residue_check(d1: usize, d2: usize) -> Result<ProductResidue> {
    if !(1..=4).contains(&d1) || !(1..=4).contains(&d2) {
        return Err(invalid("product residue check takes d1, d2 in 1..=4"));
    }
    let res = |d: usize| -> Result<f64> { Ok(epstein_zeta(d, c(d as f64))?.residue.re) };
    let d = d1 + d2;
    let lhs = res(d)?;
    let beta = 0.5 * gamma_real(d1 as f64 / 2.0) * gamma_real(d2 as f64 / 2.0)
        / gamma_real(d as f64 / 2.0);
    let rhs = beta * res(d1)? * res(d2)?;
    Ok(ProductResidue { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::EULER_GAMMA;
    use proptest::prelude::*;

    fn cr(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    // Riemann zeta by Euler–Maclaurin, independent of the theta machinery.
    fn riemann_zeta(s: f64) -> f64 {
        let n = 30usize;
        let mut acc: f64 = (1..n).map(|k| (k as f64).powf(-s)).sum();
        let nf = n as f64;
        acc += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
        let bern = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
        let mut fact = 1.0;
        let mut rising = s;
        let mut pw = nf.powf(-s - 1.0);
        for (j, b) in bern.iter().enumerate() {
            let k = 2 * (j + 1);
            fact *= ((k - 1) * k) as f64;
            acc += b / fact * rising * pw;
            rising *= (s + k as f64 - 1.0) * (s + k as f64);
            pw /= nf * nf;
        }
        acc
    }

    // Direct lattice sum in dimension 2 with an integral tail estimate.
    fn direct_z2(s: f64, r: i64) -> f64 {
        let mut acc = 0.0;
        for a in -r..=r {
            for b in -r..=r {
                let m = (a * a + b * b) as f64;
                if m > 0.0 && m <= (r * r) as f64 {
                    acc += m.powf(-s / 2.0);
                }
            }
        }
        acc + 2.0 * PI * (r as f64).powf(2.0 - s) / (s - 2.0)
    }

    #[test]
    fn riemann_oracle_sanity() {
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((riemann_zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_epstein_is_twice_riemann() {
        for s in [3.0, 4.0, 6.0, 2.5, 7.5] {
            let z = epstein_zeta(1, cr(s)).unwrap().finite_part.re;
            assert!((z - 2.0 * riemann_zeta(s)).abs() < 1e-12, "s={s}: {z}");
        }
    }

    #[test]
    fn value_at_zero_and_residues() {
        for n in 1..=MAX_EPSTEIN_DIM {
            let z0 = epstein_zeta(n, cr(0.0)).unwrap();
            assert!((z0.finite_part.re + 1.0).abs() < 1e-12, "n={n}");
            let p = epstein_zeta(n, cr(n as f64)).unwrap();
            assert_eq!(p.pole_order, 1);
            assert!((p.residue.re - epstein_residue_closed_form(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_part_of_riemann_pole() {
        // 2 ζ(s) = 2/(s-1) + 2γ + O(s-1)
        let p = epstein_zeta(1, cr(1.0)).unwrap();
        assert!((p.finite_part.re - 2.0 * EULER_GAMMA).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_value_against_lattice_sum() {
        let z = epstein_zeta(2, cr(4.0)).unwrap().finite_part.re;
        assert!((z - 6.026_812_039_691_94).abs() < 1e-12);
        // 4 ζ(2) β(2) with Catalan's constant
        let catalan = 0.915_965_594_177_219_0;
        assert!((z - 4.0 * PI * PI / 6.0 * catalan).abs() < 1e-12);
        let direct = direct_z2(6.0, 300);
        let z6 = epstein_zeta(2, cr(6.0)).unwrap().finite_part.re;
        assert!((z6 - direct).abs() < 1e-6);
    }

    #[test]
    fn trivial_zeros_at_negative_even_integers() {
        for n in 1..=4 {
            for k in 1..4 {
                let z = epstein_zeta(n, cr(-2.0 * k as f64)).unwrap().finite_part;
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn functional_equation_off_axis() {
        for n in 1..=4 {
            let nf = n as f64;
            for s in [Complex64::new(0.3, 2.0), Complex64::new(-3.1, -1.4), Complex64::new(5.5, 7.0)] {
                let lam = |s: Complex64| {
                    (-0.5 * PI.ln() * s).exp()
                        * crate::special::gamma(0.5 * s)
                        * epstein_zeta(n, s).unwrap().finite_part
                };
                let a = lam(s);
                let b = lam(cr(nf) - s);
                assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn sphere_monomials() {
        let p = |v: &[u32]| PolyExponent(v.to_vec());
        assert!((sphere_monomial_integral(2, &p(&[0, 0])).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_monomial_integral(2, &p(&[2, 0])).unwrap() - PI).abs() < 1e-14);
        assert!((sphere_monomial_integral(3, &p(&[2, 0, 0])).unwrap() - 4.0 * PI / 3.0).abs() < 1e-13);
        assert_eq!(sphere_monomial_integral(3, &p(&[1, 2, 0])).unwrap(), 0.0);
    }

    #[test]
    fn sphere_monomials_against_quadrature() {
        use crate::quadrature::SphereRule;
        for n in 2..=4 {
            let rule = SphereRule::new(n, 12).unwrap();
            for exps in [[2u32, 0, 0, 0], [2, 2, 0, 0], [4, 0, 0, 0], [2, 0, 2, 0], [0, 0, 0, 4]] {
                let e: Vec<u32> = exps[..n].to_vec();
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(u, w)| w * u.iter().zip(&e).map(|(x, &k)| x.powi(k as i32)).product::<f64>())
                    .sum();
                let closed = sphere_monomial_integral(n, &PolyExponent(e.clone())).unwrap();
                assert!((q - closed).abs() < 1e-12, "n={n} p={e:?}");
            }
        }
    }

    #[test]
    fn poisson_correction_matches_direct_theta() {
        for p in [0u32, 2, 4, 6] {
            for t in [0.3, 0.7, 1.0] {
                let direct = weighted_theta(p, t);
                let g = gamma_real((p as f64 + 1.0) / 2.0) * (PI * t).powf(-(p as f64 + 1.0) / 2.0);
                let dual = g * (1.0 + poisson_correction(p, 1.0 / t));
                assert!((direct - dual).abs() < 1e-13 * direct.abs().max(1.0), "p={p} t={t}");
            }
        }
    }

    #[test]
    fn poly_zeta_examples() {
        let p = |v: &[u32]| PolyExponent(v.to_vec());
        assert_eq!(poly_zeta(2, &p(&[1, 1]), cr(5.0)).unwrap().finite_part.norm(), 0.0);
        let r = poly_zeta(2, &p(&[2, 0]), cr(4.0)).unwrap();
        assert_eq!(r.pole_order, 1);
        assert!((r.residue.re - PI).abs() < 1e-12);
        let r = poly_zeta(4, &p(&[2, 2, 0, 0]), cr(8.0)).unwrap();
        assert!((r.residue.re - PI * PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn constant_exponent_reproduces_epstein() {
        for n in 1..=4 {
            let zero = PolyExponent(vec![0; n]);
            for s in [cr(-1.5), cr(0.0), Complex64::new(2.2, 1.0), cr(7.0)] {
                let a = poly_zeta(n, &zero, s).unwrap().finite_part;
                let b = epstein_zeta(n, s).unwrap().finite_part;
                assert!((a - b).norm() < 1e-11 * b.norm().max(1.0), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn quadratic_weight_is_shifted_epstein() {
        let p = PolyExponent(vec![2, 0]);
        for s in [cr(-3.0), cr(1.0), Complex64::new(3.3, -2.0), cr(9.0)] {
            let a = poly_zeta(2, &p, s).unwrap().finite_part;
            let b = 0.5 * epstein_zeta(2, s - 2.0).unwrap().finite_part;
            assert!((a - b).norm() < 1e-11 * b.norm().max(1.0), "s={s}");
        }
        let at_pole = poly_zeta(2, &p, cr(4.0)).unwrap();
        let e = epstein_zeta(2, cr(2.0)).unwrap();
        assert!((at_pole.finite_part - 0.5 * e.finite_part).norm() < 1e-11);
    }

    #[test]
    fn quartic_weight_against_direct_sum() {
        let p = PolyExponent(vec![2, 2]);
        let s = 12.0;
        let mut direct = 0.0;
        for a in -200i64..=200 {
            for b in -200i64..=200 {
                let m = (a * a + b * b) as f64;
                if m > 0.0 {
                    direct += (a * a * b * b) as f64 * m.powf(-s / 2.0);
                }
            }
        }
        let z = poly_zeta(2, &p, cr(s)).unwrap().finite_part.re;
        assert!((z - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn twisted_examples() {
        let v = twisted_zeta_1d(0.5, cr(2.0)).unwrap().finite_part.re;
        assert!((v + PI * PI / 6.0).abs() < 1e-10);
        let v = twisted_zeta_1d(1.0 / 3.0, cr(2.0)).unwrap().finite_part.re;
        assert!((v + PI * PI / 9.0).abs() < 1e-10);
        let v = twisted_zeta_1d(0.2, cr(0.0)).unwrap();
        assert_eq!(v.pole_order, 0);
        assert!((v.finite_part.re + 1.0).abs() < 1e-10);
    }

    #[test]
    fn twisted_against_direct_sum_and_continuation() {
        for a in [0.1, 0.2, 0.37, 0.5] {
            let s = 3.0;
            let direct: f64 = 2.0 * (1..200_000).map(|k| (2.0 * PI * k as f64 * a).cos() * (k as f64).powf(-s)).sum::<f64>();
            let v = twisted_zeta_1d(a, cr(s)).unwrap().finite_part.re;
            assert!((v - direct).abs() < 1e-9, "a={a}: {v} vs {direct}");
        }
        // Σ' e^{2πika} |k|^{-s} at s = -2 is 0 for every non-integer a (even polynomial)
        for a in [0.1, 0.25, 0.4] {
            let v = twisted_zeta_1d(a, cr(-2.0)).unwrap().finite_part;
            assert!(v.norm() < 1e-9);
        }
    }

    #[test]
    fn twisted_integer_delegates_to_epstein() {
        let v = twisted_zeta_1d(3.0, cr(1.0)).unwrap();
        assert_eq!(v.pole_order, 1);
    }

    #[test]
    fn product_residue_examples() {
        for (a, b) in [(1, 1), (2, 2), (1, 3), (3, 4), (4, 4)] {
            let r = product_residue_check(a, b).unwrap();
            assert!((r.lhs - r.rhs).abs() < 1e-10, "{a},{b}");
        }
        let r = product_residue_check(1, 1).unwrap();
        assert!((r.lhs - 2.0 * PI).abs() < 1e-12);
        let r = product_residue_check(2, 2).unwrap();
        assert!((r.lhs - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn dimension_guard() {
        assert!(epstein_zeta(0, cr(1.0)).is_err());
        assert!(epstein_zeta(9, cr(1.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn poly_zeta_symmetric_under_permutation(a in 0u32..3, b in 0u32..3, s in -4.0f64..12.0) {
            let p1 = PolyExponent(vec![2 * a, 2 * b, 0]);
            let p2 = PolyExponent(vec![0, 2 * b, 2 * a]);
            let big_n = 3.0 + 2.0 * (a + b) as f64;
            prop_assume!((s - big_n).abs() > 1e-3);
            let z1 = poly_zeta(3, &p1, cr(s)).unwrap().finite_part;
            let z2 = poly_zeta(3, &p2, cr(s)).unwrap().finite_part;
            prop_assert!((z1 - z2).norm() <= 1e-11 * z1.norm().max(1.0));
        }

        #[test]
        fn reflection_on_random_points(n in 1usize..=4, re in -6.0f64..10.0, im in -8.0f64..8.0) {
            let s = Complex64::new(re, im);
            let nf = n as f64;
            prop_assume!((s - nf).norm() > 1e-3 && s.norm() > 1e-3);
            let lam = |s: Complex64| {
                (-0.5 * PI.ln() * s).exp() * crate::special::gamma(0.5 * s) * epstein_zeta(n, s).unwrap().finite_part
            };
            let a = lam(s);
            let b = lam(cr(nf) - s);
            prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }
}
