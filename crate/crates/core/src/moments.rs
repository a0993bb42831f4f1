//! Fractional moments `<|x(t)|^delta> = int |x|^delta G1(x, t) dx`.
//!
//! The Mellin transform of each half of the density gives, with
//! `u = eta t^mu`, `beta = mu + nu(1 - mu)` and `rho = (alpha - theta) / (2 alpha)`,
//!
//! ```text
//! M+(theta) = int_0^inf x^delta G1 dx
//!           = t^{beta-1} u^{delta/alpha} / alpha
//!             * Gamma(-delta/alpha) Gamma(1+delta/alpha) Gamma(1+delta)
//!             / (Gamma(beta + mu delta/alpha) Gamma(-rho delta) Gamma(1+rho delta))
//! ```
//!
//! and the left half is `M+(-theta)`. [`moment_closed`] returns the folded
//! form `2 M+(theta)`, which is the whole moment only for `theta = 0`;
//! [`moment_closed_two_sided`] returns `M+(theta) + M+(-theta)`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::green_fourier::GreenKind;
use crate::green_series::Router;
use crate::params::{DiffusionParams, QuadratureConfig};
use crate::quad;
use crate::special::{is_nonpositive_integer, ln_gamma_sign, sin_pi};

/// Metadata flag attached to closed-form moments with `theta != 0`.
pub const UNVERIFIED_ASYMMETRIC: &str = "unverified-asymmetric";

/// Order `delta` of a fractional moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOrder {
    pub delta: f64,
}

impl MomentOrder {
    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    /// Lower end of the closed form's strip, `-min(alpha, 1)`.
    pub fn lower_bound(alpha: f64) -> f64 {
        -alpha.min(1.0)
    }

    /// Checks `-min(alpha, 1) < delta < 0`.
    pub fn check(self, alpha: f64) -> Result<Self> {
        let lower = Self::lower_bound(alpha);
        if !(self.delta > lower && self.delta < 0.0) {
            return Err(FracError::DomainViolation { delta: self.delta, lower });
        }
        Ok(self)
    }
}

impl From<f64> for MomentOrder {
    fn from(delta: f64) -> Self {
        Self::new(delta)
    }
}

/// `true` when the folded closed form is not the full moment.
pub fn is_unverified_asymmetric(p: &DiffusionParams) -> bool {
    p.theta != 0.0
}

/// Right-half moment `M+(theta)`.
pub fn half_moment(p: &DiffusionParams, delta: MomentOrder, t: f64, theta: f64) -> Result<f64> {
    let p = p.validate()?;
    let d = delta.check(p.alpha)?.delta;
    if !(t > 0.0 && t.is_finite()) {
        return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
    }
    let a = p.alpha;
    let beta = p.beta();
    let rho = (a - theta) / (2.0 * a);
    let num = [-d / a, 1.0 + d / a, 1.0 + d];
    let den = [beta + p.mu * d / a, -rho * d, 1.0 + rho * d];
    if let Some(&g) = num.iter().chain(&den).find(|&&g| is_nonpositive_integer(g)) {
        return Err(FracError::GammaPole(g));
    }
    let mut ln = 0.0;
    let mut sign = 1.0;
    for g in num {
        let (l, s) = ln_gamma_sign(g);
        ln += l;
        sign *= s;
    }
    for g in den {
        let (l, s) = ln_gamma_sign(g);
        ln -= l;
        sign *= s;
    }
    let u = p.eta * t.powf(p.mu);
    Ok(sign * (ln + (beta - 1.0) * t.ln() + d / a * u.ln()).exp() / a)
}

/// The closed form as folded onto the half line:
///
/// ```text
/// (2/alpha) eta^{delta/alpha} t^{beta - 1 + mu delta/alpha}
///   Gamma(-delta/alpha) Gamma(1+delta) Gamma(1+delta/alpha)
///   / (Gamma(-rho delta) Gamma(beta + mu delta/alpha) Gamma(1+rho delta))
/// ```
///
/// Equal to the moment for `theta = 0`; see [`is_unverified_asymmetric`].
pub fn moment_closed(p: &DiffusionParams, delta: MomentOrder, t: f64) -> Result<f64> {
    Ok(2.0 * half_moment(p, delta, t, p.theta)?)
}

/// `M+(theta) + M+(-theta)`, the moment of the full line for any `theta`.
pub fn moment_closed_two_sided(p: &DiffusionParams, delta: MomentOrder, t: f64) -> Result<f64> {
    Ok(half_moment(p, delta, t, p.theta)? + half_moment(p, delta, t, -p.theta)?)
}

/// Largest similarity variable the tail search will reach.
const Z_MAX: f64 = 1e12;

/// `int |x|^delta G1(x, t) dx` by quadrature of the density.
///
/// Near the origin `x = v^{1/(1+delta)}` turns `x^delta dx` into
/// `dv / (1 + delta)`. Beyond a cut `X` the algebraic tail is integrated term
/// by term from the large-`x` expansion `sum_n c_n x^{-1-alpha n}`; densities
/// without an algebraic tail are integrated outward until the panels vanish.
pub fn moment_numeric(p: &DiffusionParams, delta: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let p = p.validate()?;
    let cfg = cfg.validate()?;
    if !delta.is_finite() {
        return Err(FracError::InvalidInput(format!("delta = {delta}")));
    }
    if delta <= -1.0 {
        return Err(FracError::DomainViolation { delta, lower: -1.0 });
    }
    if p.alpha < 2.0 && delta >= p.alpha {
        return Err(FracError::NonConvergentTail(delta));
    }
    let mut router = Router::new(&p, GreenKind::G1, t, &cfg)?;
    let right = half_numeric(&mut router, &p, delta, t, 1.0, &cfg)?;
    if p.theta == 0.0 {
        return Ok(2.0 * right);
    }
    let left = half_numeric(&mut router, &p, delta, t, -1.0, &cfg)?;
    Ok(right + left)
}

fn half_numeric(
    router: &mut Router,
    p: &DiffusionParams,
    delta: f64,
    t: f64,
    side: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let u = p.eta * t.powf(p.mu);
    let scale = u.powf(1.0 / p.alpha);
    // the density on this side is the right half of the reflected kernel
    let theta = side * p.theta;
    let tol = cfg.rel_tol.max(1e-13);
    let magnitude = t.powf(p.beta() - 1.0) * scale.powf(delta);

    let failure = RefCell::new(None);
    let mut density = |x: f64| match router.eval(side * x) {
        Ok(r) => r.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };

    let e = 1.0 + delta;
    let mut total = 0.0;
    let piece = |density: &mut dyn FnMut(f64) -> f64, x0: f64, x1: f64| -> Result<f64> {
        let g = |v: f64| density(v.powf(1.0 / e)) / e;
        let r = quad::integrate(g, x0.powf(e), x1.powf(e), 1e-3 * tol * magnitude, 0.1 * tol, 400);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        if !r.value.is_finite() || (!r.converged && r.error > tol * magnitude.max(r.value.abs())) {
            return Err(FracError::ToleranceNotMet { achieved: r.error / magnitude, requested: tol });
        }
        Ok(r.value)
    };

    // near field up to z = 1 in octaves of the natural length scale
    let mut lo = 0.0;
    let mut hi = scale / 64.0;
    while hi <= scale {
        total += piece(&mut density, lo, hi)?;
        lo = hi;
        hi *= 2.0;
    }
    let mut x_cut = lo;
    let algebraic = ((p.alpha - theta) * 0.5).fract() != 0.0;
    loop {
        let z = x_cut.powf(p.alpha) / u;
        if algebraic {
            if let Some(tail) = algebraic_tail(p, theta, delta, t, x_cut, tol * magnitude.max(total.abs()))? {
                total += tail;
                break;
            }
        } else {
            // exponentially decaying side: stop once a doubling adds nothing
            let add = piece(&mut density, x_cut, 2.0 * x_cut)?;
            total += add;
            x_cut *= 2.0;
            if add.abs() <= 1e-3 * tol * total.abs().max(magnitude) {
                break;
            }
            if z > Z_MAX {
                return Err(FracError::ToleranceNotMet { achieved: add.abs() / magnitude, requested: tol });
            }
            continue;
        }
        if z > Z_MAX {
            return Err(FracError::NonConvergentTail(delta));
        }
        total += piece(&mut density, x_cut, 2.0 * x_cut)?;
        x_cut *= 2.0;
    }
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `int_X^inf x^delta G1(x) dx` from the large-`x` expansion of the right
/// half with skewness `theta`, or `None` when the expansion cannot reach
/// `abs_tol` at this `X`.
fn algebraic_tail(p: &DiffusionParams, theta: f64, delta: f64, t: f64, x: f64, abs_tol: f64) -> Result<Option<f64>> {
    let (a, mu, b) = (p.alpha, p.mu, p.beta());
    let ln_w = (p.eta * t.powf(mu)).ln() - a * x.ln();
    let pref = t.powf(b - 1.0) / std::f64::consts::PI * x.powf(delta);
    let mut sum = 0.0;
    let mut smallest = f64::INFINITY;
    for n in 1..400 {
        let nf = n as f64;
        let s = sin_pi(0.5 * nf * (theta - a));
        if s == 0.0 {
            continue;
        }
        let (lg1, s1) = ln_gamma_sign(1.0 + a * nf);
        let (lg2, s2) = ln_gamma_sign(b + mu * nf);
        if s2 == 0.0 {
            continue;
        }
        let sign = s1 * s2 * s.signum() * if n % 2 == 1 { -1.0 } else { 1.0 };
        let term = pref * sign * (lg1 - lg2 + s.abs().ln() + nf * ln_w).exp() / (a * nf - delta);
        let m = term.abs();
        if m > smallest {
            // asymptotic expansion started to diverge
            return Ok(None);
        }
        smallest = m;
        sum += term;
        if m <= 1e-3 * abs_tol {
            return Ok(Some(sum));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> DiffusionParams {
        DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_closed_value() {
        let m = moment_closed(&gauss(), (-0.5).into(), 1.0).unwrap();
        let exact = crate::special::gamma(0.5) / crate::special::gamma(0.75);
        assert!((m - exact).abs() < 1e-13, "{m}");
    }

    #[test]
    fn strip_gate() {
        let r = moment_closed(&gauss(), (-1.5).into(), 1.0);
        assert!(matches!(r, Err(FracError::DomainViolation { .. })));
        assert!(matches!(moment_closed(&gauss(), 0.0.into(), 1.0), Err(FracError::DomainViolation { .. })));
    }

    #[test]
    fn gaussian_numeric() {
        let m = moment_numeric(&gauss(), -0.5, 1.0, &QuadratureConfig::default()).unwrap();
        let exact = crate::special::gamma(0.5) / crate::special::gamma(0.75);
        assert!((m - exact).abs() < 1e-9, "{m} {exact}");
    }

    #[test]
    fn stable_numeric_matches_closed() {
        let p = DiffusionParams::new(0.8, 1.0, 1.5, 0.0, 1.0).unwrap();
        let c = moment_closed(&p, (-0.25).into(), 1.0).unwrap();
        let n = moment_numeric(&p, -0.25, 1.0, &QuadratureConfig::default()).unwrap();
        assert!(((c - n) / c).abs() < 1e-8, "{c} {n}");
    }

    #[test]
    fn folded_form_mass_limit() {
        let p = DiffusionParams::new(0.7, 0.5, 1.5, 0.3, 1.0).unwrap();
        let mass = crate::special::rgamma(p.beta());
        let two = moment_closed_two_sided(&p, (-1e-9).into(), 1.0).unwrap();
        let folded = moment_closed(&p, (-1e-9).into(), 1.0).unwrap();
        assert!((two - mass).abs() < 1e-7);
        assert!((folded - mass * (p.alpha - p.theta) / p.alpha).abs() < 1e-7);
    }
}
