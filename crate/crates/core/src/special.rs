//! Gamma-family special functions on the complex plane.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// sin(pi z) with the integer part removed first, so zeros at the integers are exact.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let w = Complex64::new(z.re - n, z.im);
    let s = (w * PI).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Log gamma. Left of Re z = 1/2 the imaginary part is not reduced to the principal branch.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        ln_gamma_right(z)
    } else {
        (PI / sin_pi(z)).ln() - ln_gamma_right(1.0 - z)
    }
}

pub fn gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        ln_gamma_right(z).exp()
    } else {
        PI / (sin_pi(z) * ln_gamma_right(1.0 - z).exp())
    }
}

/// 1/Gamma(z), entire, with exact zeros at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    }
}

pub fn digamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = sin_pi(z);
        let c = (z * PI).cos();
        return digamma(1.0 - z) - PI * c / s;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 12.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    let w2 = (w * w).inv();
    let series = w2
        * (1.0 / 12.0
            - w2 * (1.0 / 120.0 - w2 * (1.0 / 252.0 - w2 * (1.0 / 240.0 - w2 * (1.0 / 132.0)))));
    acc + w.ln() - 0.5 / w - series
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

pub fn rgamma_real(x: f64) -> f64 {
    rgamma(Complex64::new(x, 0.0)).re
}

pub fn ln_gamma_real(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma_real needs a positive argument");
    ln_gamma_right(Complex64::new(x, 0.0)).re
}

/// Physicists' Hermite polynomial H_n(x).
pub fn hermite(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Generalized Laguerre polynomial L_n^α(x).
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 + alpha - x);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - x) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Volume of the unit sphere S^{d-1} in R^d.
pub fn sphere_volume(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_real(d as f64 / 2.0)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
