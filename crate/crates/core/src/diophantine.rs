//! Continued fractions, approximation exponents, and a badly-approximable
//! test for deformation matrices.
//!
//! A real x is δ-badly approximable when |q x − m| ≥ c |q|^{-δ} for all
//! integers q ≠ 0 and m. The exponent is estimated from the convergents, which
//! are the best approximations. Matrix tests always act on Θ/2π.
//!
//! Doubles are expanded exactly as the dyadic rationals they are, and the
//! expansion stops once a convergent falls inside the rounding interval of the
//! double, past which the digits carry no information about the real number.
//! Exact rationals are accepted as high-precision stand-ins for irrationals.

use crate::error::{invalid, Result, SpecError};
use crate::par;
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

/// Expansions ending at a denominator at most this large count as rational.
pub const RATIONAL_DENOMINATOR_LIMIT: u64 = 1 << 20;
/// Convergent index used to anchor the exponent estimate: first q ≥ this.
pub const ANCHOR_MIN_DENOMINATOR: u64 = 10;
pub const MAX_DEPTH: usize = 60;
pub const DEFAULT_EXPONENT_TOL: f64 = 0.05;

/// A real number given either as a double or as an exact rational.
#[derive(Debug, Clone, PartialEq)]
pub enum Real {
    Float(f64),
    Exact(BigRational),
}

impl Real {
    /// Parses "p/q" and decimal strings as exact rationals.
    pub fn parse(s: &str) -> Result<Real> {
        let s = s.trim();
        let bad = || invalid(format!("cannot parse real number {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Real::Exact(BigRational::new(p, q)));
        }
        let (mantissa, exp10) = match s.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let neg = mantissa.starts_with('-');
        let body = mantissa.trim_start_matches(['-', '+']);
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let mut num: BigInt = digits.parse().map_err(|_| bad())?;
        if neg {
            num = -num;
        }
        let scale = exp10 - frac_part.len() as i64;
        let ten = BigInt::from(10);
        let r = if scale >= 0 {
            BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Real::Exact(r))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Float(x) => *x,
            Real::Exact(r) => rational_to_f64(r),
        }
    }

    /// Σ c_i x_i, exact when every x_i is exact.
    pub fn is_zero(&self) -> bool {
        match self {
            Real::Float(v) => *v == 0.0,
            Real::Exact(r) => r.is_zero(),
        }
    }

    pub fn combine(coeffs: &[i64], xs: &[&Real]) -> Real {
        if xs.iter().all(|x| matches!(x, Real::Exact(_))) {
            let mut acc = BigRational::zero();
            for (c, x) in coeffs.iter().zip(xs) {
                if let Real::Exact(r) = x {
                    acc += r * BigRational::from_integer(BigInt::from(*c));
                }
            }
            Real::Exact(acc)
        } else {
            Real::Float(coeffs.iter().zip(xs).map(|(c, x)| *c as f64 * x.to_f64()).sum())
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    let shift = (n.bits().max(d.bits()) as i64 - 60).max(0);
    let nf = (n >> shift as usize).to_f64().unwrap_or(f64::NAN);
    let df = (d >> shift as usize).to_f64().unwrap_or(f64::NAN);
    if df == 0.0 {
        // numerator dominates: fall back to logs
        return n.sign_f64() * (ln_big(n) - ln_big(d)).exp();
    }
    nf / df
}

trait SignF64 {
    fn sign_f64(&self) -> f64;
}

impl SignF64 for BigInt {
    fn sign_f64(&self) -> f64 {
        if self.sign() == Sign::Minus {
            -1.0
        } else {
            1.0
        }
    }
}

/// Natural log of |n| for arbitrarily large integers.
pub fn ln_big(n: &BigInt) -> f64 {
    let n = n.abs();
    let bits = n.bits() as i64;
    let shift = (bits - 60).max(0);
    let top = (&n >> shift as usize).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_rational(r: &BigRational) -> f64 {
    ln_big(r.numer()) - ln_big(r.denom())
}

/// Exact rational value of a finite double.
pub fn f64_to_rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| invalid(format!("{x} is not finite")))
}

/// Half the spacing of doubles around x: the rounding interval radius.
fn half_ulp(x: f64) -> BigRational {
    let ax = x.abs();
    let ulp = if ax == 0.0 {
        f64::from_bits(1)
    } else {
        f64::from_bits(ax.to_bits() + 1) - ax
    };
    f64_to_rational(ulp).expect("finite ulp") / BigRational::from_integer(BigInt::from(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionStatus {
    /// The requested number of partial quotients was produced.
    DepthReached,
    /// The input is an exact rational and its expansion ended.
    Terminated,
    /// A convergent entered the rounding interval of the double input; later
    /// quotients would reflect rounding, not the number.
    PrecisionLimited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    pub value: f64,
    pub partial_quotients: Vec<BigInt>,
    pub convergents: Vec<(BigInt, BigInt)>,
    pub status: ExpansionStatus,
    /// The expansion ended at a denominator within [`RATIONAL_DENOMINATOR_LIMIT`].
    pub rational: bool,
}

/// Continued fraction of a double, up to `depth` partial quotients.
pub fn cf_expand(x: f64, depth: usize) -> Result<ContinuedFraction> {
    cf_expand_real(&Real::Float(x), depth)
}

pub fn cf_expand_real(x: &Real, depth: usize) -> Result<ContinuedFraction> {
    match x {
        Real::Float(v) => expand(&f64_to_rational(*v)?, Some(&half_ulp(*v)), depth, *v),
        Real::Exact(r) => expand(r, None, depth, x.to_f64()),
    }
}

/// Expansion of `exact`, where `window` is the half-width of the interval of
/// reals it stands for (`None` for an exact input).
fn expand(exact: &BigRational, window: Option<&BigRational>, depth: usize, value: f64) -> Result<ContinuedFraction> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(invalid(format!("depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    let mut quotients = exact_quotients(exact, depth);
    let mut status = if quotients.len() < depth {
        ExpansionStatus::Terminated
    } else {
        ExpansionStatus::DepthReached
    };
    let mut rational = status == ExpansionStatus::Terminated;
    if let Some(h) = window {
        // Every real in the interval shares the quotients common to both endpoints.
        let lo = exact_quotients(&(exact - h), depth + 1);
        let hi = exact_quotients(&(exact + h), depth + 1);
        let mut keep = lo.iter().zip(&hi).take_while(|(a, b)| a == b).count();
        // A convergent inside the interval is indistinguishable from the input;
        // the endpoints split at it, possibly one quotient early.
        let convs = convergents_of(&quotients);
        let limit = BigInt::from(RATIONAL_DENOMINATOR_LIMIT);
        let inside = convs.iter().position(|(p, q)| {
            *q <= limit && (BigRational::new(p.clone(), q.clone()) - exact).abs() <= *h
        });
        rational = false;
        if let Some(k) = inside {
            if k <= keep {
                keep = k + 1;
                rational = true;
            }
        }
        if keep < quotients.len() {
            quotients.truncate(keep.max(1));
            status = ExpansionStatus::PrecisionLimited;
        }
    }
    let convergents = convergents_of(&quotients);
    let last_q = &convergents.last().expect("at least one quotient").1;
    let rational = rational && *last_q <= BigInt::from(RATIONAL_DENOMINATOR_LIMIT);
    Ok(ContinuedFraction {
        value,
        partial_quotients: quotients,
        convergents,
        status,
        rational,
    })
}

/// Partial quotients of an exact rational, at most `depth` of them.
fn exact_quotients(r: &BigRational, depth: usize) -> Vec<BigInt> {
    let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
    let mut out = Vec::new();
    while out.len() < depth {
        let a = num.div_floor(&den);
        let rem = &num - &a * &den;
        out.push(a);
        if rem.is_zero() {
            break;
        }
        num = std::mem::replace(&mut den, rem);
    }
    out
}

fn convergents_of(quotients: &[BigInt]) -> Vec<(BigInt, BigInt)> {
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::with_capacity(quotients.len());
    for a in quotients {
        let p = a * &p1 + &p2;
        let q = a * &q1 + &q2;
        out.push((p.clone(), q.clone()));
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub delta: f64,
    pub anchor_denominator: f64,
    pub convergents_used: usize,
    pub status: ExpansionStatus,
}

/// Canonical representative of x modulo Z and sign: frac(|x|) folded to
/// [0, 1/2], with the rounding half-width of the original double if any.
fn canonical(x: &Real) -> Result<(BigRational, Option<BigRational>)> {
    let (r, window) = match x {
        Real::Float(v) => (f64_to_rational(*v)?, Some(half_ulp(*v))),
        Real::Exact(r) => (r.clone(), None),
    };
    let a = r.abs();
    let f = &a - a.floor();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    Ok((if f > half { BigRational::one() - f } else { f }, window))
}

/// Smallest δ consistent with the convergent errors e_k = |q_k x − p_k|:
/// the largest slope log(e_a / e_k) / log(q_k / q_a) measured from an anchor
/// convergent with q_a ≥ 10. δ ≈ 1 for badly approximable numbers.
pub fn approx_exponent(x: &Real, depth: usize) -> Result<ExponentEstimate> {
    let (exact, window) = canonical(x)?;
    let cf = expand(&exact, window.as_ref(), depth, x.to_f64())?;
    if cf.rational {
        return Err(SpecError::Rational(format!("{}", x.to_f64())));
    }
    let mut convs = cf.convergents.clone();
    if cf.status == ExpansionStatus::Terminated {
        // the last convergent is the stand-in itself, with zero error
        convs.pop();
    }
    let errors: Vec<(f64, f64)> = convs
        .iter()
        .filter(|(_, q)| q.is_positive())
        .map(|(p, q)| {
            let e = (BigRational::from_integer(q.clone()) * &exact - BigRational::from_integer(p.clone())).abs();
            (ln_big(q), if e.is_zero() { f64::NEG_INFINITY } else { ln_rational(&e) })
        })
        .collect();
    let anchor = errors
        .iter()
        .position(|(lq, _)| *lq >= (ANCHOR_MIN_DENOMINATOR as f64).ln())
        .ok_or_else(|| invalid("expansion too short to reach the anchor denominator"))?;
    let (lqa, lea) = errors[anchor];
    let mut delta = f64::NEG_INFINITY;
    for &(lq, le) in &errors[anchor + 1..] {
        if lq > lqa && le.is_finite() {
            delta = delta.max((lea - le) / (lq - lqa));
        }
    }
    if !delta.is_finite() {
        return Err(invalid("expansion too short beyond the anchor convergent"));
    }
    Ok(ExponentEstimate {
        delta,
        anchor_denominator: lqa.exp(),
        convergents_used: errors.len() - anchor,
        status: cf.status,
    })
}

/// Σ_{k=1}^{terms} 10^{-k!} as an exact rational.
pub fn liouville_number(terms: usize) -> BigRational {
    let mut acc = BigRational::zero();
    let mut fact = 1usize;
    for k in 1..=terms {
        fact *= k;
        acc += BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), fact));
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    NoEvidence,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixVerdict {
    pub verdict: Verdict,
    pub witness: Option<Vec<i64>>,
    /// Exponent estimates of the witness entries (None for rational entries).
    pub witness_exponents: Vec<Option<f64>>,
    pub search_depth: usize,
    pub vectors_tested: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixTestOptions {
    pub cf_depth: usize,
    pub tol: f64,
}

impl Default for MatrixTestOptions {
    fn default() -> Self {
        MatrixTestOptions { cf_depth: 40, tol: DEFAULT_EXPONENT_TOL }
    }
}

fn is_rational(x: &Real, depth: usize) -> Result<bool> {
    let (exact, window) = canonical(x)?;
    Ok(expand(&exact, window.as_ref(), depth, x.to_f64())?.rational)
}

/// Integer vectors u ≠ 0 with |u|∞ = r, one per ± pair, with gcd 1, in
/// lexicographic order.
fn shell_vectors(n: usize, r: i64) -> Vec<Vec<i64>> {
    let side = 2 * r + 1;
    let total = side.pow(n as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let mut u = vec![0i64; n];
        for slot in u.iter_mut().rev() {
            *slot = rest % side - r;
            rest /= side;
        }
        if u.iter().map(|x| x.abs()).max() != Some(r) {
            continue;
        }
        if u.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
            continue;
        }
        let g = u.iter().fold(0i64, |g, &x| g.gcd(&x));
        if g != 1 {
            continue;
        }
        out.push(u);
    }
    out
}

/// Searches u ∈ Z^n, 0 < |u|∞ ≤ depth, for which every irrational entry of
/// ᵗM u has approximation exponent ≤ 1 + tol, where M = Θ/2π. Rational
/// entries carry no Diophantine information and are skipped.
pub fn matrix_badly_approximable(
    theta_over_2pi: &[Vec<Real>],
    depth: usize,
    opts: MatrixTestOptions,
) -> Result<MatrixVerdict> {
    let n = theta_over_2pi.len();
    if !(n == 2 || n == 4) || theta_over_2pi.iter().any(|row| row.len() != n) {
        return Err(invalid("deformation matrix must be 2x2 or 4x4"));
    }
    for i in 0..n {
        for j in 0..n {
            let a = theta_over_2pi[i][j].to_f64();
            let b = theta_over_2pi[j][i].to_f64();
            if (a + b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(invalid(format!("matrix is not skew-symmetric at ({i}, {j})")));
            }
        }
    }
    let mut all_rational = true;
    for row in theta_over_2pi {
        for x in row {
            if !is_rational(x, opts.cf_depth)? {
                all_rational = false;
            }
        }
    }
    if all_rational {
        return Ok(MatrixVerdict {
            verdict: Verdict::Rational,
            witness: None,
            witness_exponents: vec![],
            search_depth: depth,
            vectors_tested: 0,
        });
    }
    // Column j of u·Θ only sees the coordinates of u where column j is nonzero,
    // so that projection is an exact cache key.
    let support: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| !theta_over_2pi[i][j].is_zero()).collect())
        .collect();
    let cache: Mutex<HashMap<(usize, Vec<i64>), Option<f64>>> = Mutex::new(HashMap::new());
    let exponent_of = |j: usize, u: &[i64]| -> Option<f64> {
        let key = (j, support[j].iter().map(|&i| u[i]).collect::<Vec<_>>());
        if let Some(v) = cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let col: Vec<&Real> = (0..n).map(|i| &theta_over_2pi[i][j]).collect();
        let v = match approx_exponent(&Real::combine(u, &col), opts.cf_depth) {
            Ok(e) => Some(e.delta),
            Err(SpecError::Rational(_)) => None,
            Err(_) => Some(f64::INFINITY),
        };
        cache.lock().expect("cache lock").insert(key, v);
        v
    };
    let mut tested = 0;
    for r in 1..=depth as i64 {
        let candidates = shell_vectors(n, r);
        tested += candidates.len();
        let results = par::map_slice(&candidates, |u| {
            let mut exps = Vec::with_capacity(n);
            let mut any_irrational = false;
            for j in 0..n {
                let e = exponent_of(j, u);
                if let Some(d) = e {
                    any_irrational = true;
                    if d > 1.0 + opts.tol {
                        return None;
                    }
                }
                exps.push(e);
            }
            any_irrational.then_some(exps)
        });
        if let Some((u, exps)) = candidates.iter().zip(results).find_map(|(u, e)| e.map(|e| (u, e))) {
            return Ok(MatrixVerdict {
                verdict: Verdict::Yes,
                witness: Some(u.clone()),
                witness_exponents: exps,
                search_depth: depth,
                vectors_tested: tested,
            });
        }
    }
    Ok(MatrixVerdict {
        verdict: Verdict::NoEvidence,
        witness: None,
        witness_exponents: vec![],
        search_depth: depth,
        vectors_tested: tested,
    })
}

/// Θ/2π from a deformation matrix given in doubles.
pub fn theta_over_2pi(theta: &[Vec<f64>]) -> Vec<Vec<Real>> {
    theta
        .iter()
        .map(|row| row.iter().map(|&x| Real::Float(x / (2.0 * std::f64::consts::PI))).collect())
        .collect()
}
