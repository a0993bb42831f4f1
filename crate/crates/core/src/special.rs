//! Gamma-family special functions on the real line and in the complex plane.
//!
//! Everything is built on a Lanczos approximation (g = 7, nine coefficients)
//! with the reflection formula for the left half-plane. Trigonometric factors
//! of the form `sin(pi x)` are range-reduced before evaluation so that
//! reflection stays accurate next to the poles.

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
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
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// `sin(pi x)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let n = x.round();
    let f = x - n;
    let s = (PI * f).sin();
    if (n as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

/// `cos(pi x)` with exact zeros at the half-integers.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// True when `x` is 0, -1, -2, ...
pub fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn lanczos_sum(z: f64) -> f64 {
    // z here is the shifted argument (x - 1)
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    acc
}

/// Gamma function on the real line. Returns `inf`/`nan` at the poles.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x == x.round() && x <= 30.0 {
        // exact factorials
        let mut p = 1.0;
        let mut k = 2.0;
        while k < x {
            p *= k;
            k += 1.0;
        }
        return p;
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power to avoid premature overflow
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z)
}

/// `ln |Gamma(x)|` together with the sign of `Gamma(x)`.
///
/// At the poles the log magnitude is `+inf` and the sign is reported as `0`.
pub fn ln_gamma_sign(x: f64) -> (f64, f64) {
    if is_nonpositive_integer(x) {
        return (f64::INFINITY, 0.0);
    }
    if x < 0.5 {
        let s = sin_pi(x);
        let (lg, _) = ln_gamma_sign(1.0 - x);
        return (LN_PI - s.abs().ln() - lg, s.signum());
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (LN_SQRT_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln(), 1.0)
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_sign(x).0
}

/// Reciprocal Gamma function `1/Gamma(x)`, an entire function (zero at the
/// non-positive integers).
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
        let g = gamma(1.0 - x);
        if g.is_infinite() {
            let (lg, _) = ln_gamma_sign(1.0 - x);
            return sin_pi(x) * (lg - LN_PI).exp();
        }
        return sin_pi(x) * g / PI;
    }
    if x > 171.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

/// `ln sin(pi z)` for complex `z`, stable for large `|Im z|`.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let f = Complex64::new(z.re - n, z.im);
    let w = f * PI;
    let parity = if (n as i64).rem_euclid(2) == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, PI)
    };
    let i = Complex64::i();
    let body = if w.im > 8.0 {
        // sin w = (i/2) e^{-iw} (1 - e^{2iw})
        -i * w + Complex64::new(0.5f64.ln(), PI / 2.0) + (1.0 - (2.0 * i * w).exp()).ln()
    } else if w.im < -8.0 {
        // sin w = (-i/2) e^{iw} (1 - e^{-2iw})
        i * w + Complex64::new(0.5f64.ln(), -PI / 2.0) + (1.0 - (-2.0 * i * w).exp()).ln()
    } else {
        w.sin().ln()
    };
    body + parity
}

/// `ln sin(w)` for complex `w` (not scaled by pi).
pub fn ln_sin(w: Complex64) -> Complex64 {
    ln_sin_pi(w / PI)
}

/// Principal-branch-free `ln Gamma(z)` for complex `z`: the imaginary part is
/// only meaningful modulo `2 pi`, which is all the callers need.
pub fn ln_gamma_c(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        if z.im == 0.0 && is_nonpositive_integer(z.re) {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        return Complex64::new(LN_PI, 0.0) - ln_sin_pi(z) - ln_gamma_c(1.0 - z);
    }
    let zm = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += *c / (zm + k as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (zm + 0.5) * t.ln() - t + acc.ln()
}

/// Complex Gamma function.
pub fn gamma_c(z: Complex64) -> Complex64 {
    ln_gamma_c(z).exp()
}

/// Complex reciprocal Gamma function (entire).
pub fn rgamma_c(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new(rgamma(z.re), 0.0);
    }
    (-ln_gamma_c(z)).exp()
}

// B_{2j} for j = 1..15
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// Riemann zeta function for complex `s != 1` by Euler-Maclaurin summation.
pub fn zeta_c(s: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if s == one {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    let n = 12 + s.norm().ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..n {
        sum += (-s * (k as f64).ln()).exp();
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_s = (-s * ln_n).exp();
    sum += n_s * nf / (s - one) + n_s * 0.5;
    // B_{2j}/(2j)! s (s+1) ... (s+2j-2) N^{-s-2j+1}
    let mut poch = s;
    let mut fact = 2.0;
    let mut npow = n_s / nf;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = poch * npow * (b / fact);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
        let k = 2.0 * j as f64 + 2.0;
        poch *= (s + k - 1.0) * (s + k);
        fact *= (k + 1.0) * (k + 2.0);
        npow /= nf * nf;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // mpmath, 30 digits
    const ZETA_CHECK: (f64, f64) = (-43.042_068_340_508_317, -126.853_196_407_355_47);

    #[test]
    fn zeta_values() {
        let z = |re: f64, im: f64| zeta_c(Complex64::new(re, im));
        assert!(rel(z(2.0, 0.0).re, PI * PI / 6.0) < 1e-14);
        assert!(rel(z(-1.0, 0.0).re, -1.0 / 12.0) < 1e-14);
        assert!(rel(z(0.0, 0.0).re, -0.5) < 1e-14);
        // trivial zero, reached through cancellation of terms of size N^5
        assert!(z(-4.0, 0.0).norm() < 1e-9);
        // first nontrivial zero
        assert!(z(0.5, 14.134_725_141_734_693).norm() < 1e-12);
        // mpmath zeta(-3.7 + 20i)
        let v = z(-3.7, 20.0);
        assert!((v - Complex64::new(ZETA_CHECK.0, ZETA_CHECK.1)).norm() < 1e-10 * v.norm(), "{v}");
    }

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma(-1.5), 4.0 * PI.sqrt() / 3.0) < 1e-14);
        // mpmath: gamma(0.2), gamma(7.3), gamma(-3.7)
        assert!(rel(gamma(0.2), 4.590_843_711_998_803) < 1e-14);
        assert!(rel(gamma(7.3), 1_271.423_633_663_908_8) < 1e-13);
        assert!(rel(gamma(-3.7), 0.251_643_995_902_422_7) < 1e-13);
    }

    #[test]
    fn reciprocal_gamma_zeros() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!(rel(rgamma(-0.5), -1.0 / (2.0 * PI.sqrt())) < 1e-14);
    }

    #[test]
    fn log_gamma_matches_gamma() {
        for &x in &[0.3, 1.7, 4.2, 11.5, -0.3, -2.6] {
            let (lg, s) = ln_gamma_sign(x);
            assert!(rel(s * lg.exp(), gamma(x)) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn complex_gamma_reflection_and_conjugation() {
        let z = Complex64::new(0.3, 2.0);
        let g = gamma_c(z);
        let gc = gamma_c(z.conj());
        assert!((g.conj() - gc).norm() < 1e-15 * g.norm());
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let lhs = g * gamma_c(1.0 - z);
        let rhs = PI / (z * PI).sin();
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
        // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
        let y = 30.0;
        let m = ln_gamma_c(Complex64::new(0.5, y)).re;
        let expected = 0.5 * (PI.ln() - (PI * y).cosh().ln());
        assert!((m - expected).abs() < 1e-12);
    }

    #[test]
    fn ln_sin_large_imaginary() {
        let z = Complex64::new(0.37, 40.0);
        let direct = (z * PI).sin();
        let lg = ln_sin_pi(z).exp();
        assert!((direct - lg).norm() < 1e-12 * direct.norm());
    }
}
