//! Riesz-Feller Fourier symbols.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::params::MultiTermParams;

/// `|k|^alpha exp(i sign(k) theta pi / 2)`, with `sign(0) = 0`.
pub fn psi(alpha: f64, theta: f64, k: f64) -> Complex64 {
    if k == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let m = k.abs().powf(alpha);
    if theta == 0.0 {
        return Complex64::new(m, 0.0);
    }
    let phase = k.signum() * theta * FRAC_PI_2;
    Complex64::new(m * phase.cos(), m * phase.sin())
}

/// `sum_j eta_j psi(alpha_j, theta_j, k)`.
pub fn psi_multi(p: &MultiTermParams, k: f64) -> Complex64 {
    p.terms
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, t| acc + psi(t.alpha, t.theta, k) * t.eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SpaceTerm;

    #[test]
    fn examples() {
        assert_eq!(psi(2.0, 0.0, 3.0), Complex64::new(9.0, 0.0));
        let v = psi(1.5, 0.3, -2.0);
        // 2^1.5 exp(-0.15 i pi)
        assert!((v.re - 2.520_147_021_340_202).abs() < 1e-13, "{v}");
        assert!((v.im + 1.284_079_043_840_412).abs() < 1e-13, "{v}");
        assert_eq!(psi(1.3, 0.4, 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn multi_examples() {
        let mk = |terms: Vec<(f64, f64, f64)>| MultiTermParams {
            mu: 1.0,
            nu: 1.0,
            terms: terms.into_iter().map(|(eta, alpha, theta)| SpaceTerm { eta, alpha, theta }).collect(),
        };
        assert_eq!(psi_multi(&mk(vec![(1.0, 2.0, 0.0)]), 2.0), Complex64::new(4.0, 0.0));
        assert_eq!(psi_multi(&mk(vec![(1.0, 2.0, 0.0), (1.0, 1.0, 0.0)]), 2.0), Complex64::new(6.0, 0.0));
        let v = psi_multi(&mk(vec![(1.0, 1.5, 0.5), (0.5, 0.8, -0.2)]), 1.0);
        // exp(i pi/4) + 0.5 exp(-i pi/10)
        assert!((v.re - 1.182_635_039_334_124).abs() < 1e-12, "{v}");
        assert!((v.im - 0.552_598_283_999_074).abs() < 1e-12, "{v}");
    }
}
