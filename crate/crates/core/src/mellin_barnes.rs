//! Fundamental solution by numerical Mellin-Barnes contour integration.
//!
//! ```text
//! G(x, t) = t^{b-1} / (pi x) * (1 / 2 pi i) int_L
//!     Gamma(s) Gamma(1-s) Gamma(1 - alpha s) / Gamma(b - mu s)
//!     * sin(pi s (alpha - theta) / 2) * z^s ds,      z = x^alpha / (eta t^mu)
//! ```
//!
//! on the line `Re s = gamma`, `0 < gamma < min(1, 1/alpha)`. Along the line
//! the integrand decays like `exp(-pi (1 - (mu - theta)/2) |Im s|)`, so the
//! trapezoid rule in `Im s` converges geometrically.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::green_fourier::{kernel_ml_params, GreenKind};
use crate::params::{DiffusionParams, QuadratureConfig};
use crate::special::{is_nonpositive_integer, ln_gamma_c, ln_sin_pi, rgamma, sin_pi, zeta_c};

/// Vertical contour `Re s = gamma_abscissa`, truncated at `|Im s| = height`
/// and sampled with `nodes` trapezoid intervals on `[0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub gamma_abscissa: f64,
    pub height: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbValue {
    pub value: f64,
    pub err_est: f64,
}

/// `ln` of `Gamma(s) Gamma(1-s) Gamma(1 - alpha s) / Gamma(b - mu s) * sin(pi s (alpha - theta)/2)`.
/// `None` where the reciprocal Gamma or the sine vanishes.
pub(crate) fn ln_mb_kernel(s: Complex64, alpha: f64, theta: f64, mu: f64, b: f64) -> Option<Complex64> {
    if alpha == theta {
        return None;
    }
    let w = b - mu * s;
    if w.im == 0.0 && is_nonpositive_integer(w.re) {
        return None;
    }
    // Gamma(s) Gamma(1 - s) = pi / sin(pi s)
    let v = Complex64::new(PI.ln(), 0.0) - ln_sin_pi(s) + ln_gamma_c(1.0 - alpha * s) - ln_gamma_c(w)
        + ln_sin_pi(s * (0.5 * (alpha - theta)));
    v.re.is_finite().then_some(v)
}

/// Decay rate in `|Im s|` of the general kernel.
fn mb_decay(mu: f64, theta: f64) -> f64 {
    PI * (1.0 - 0.5 * (mu - theta))
}

struct Line<'a> {
    f: &'a dyn Fn(Complex64) -> Complex64,
    gamma: f64,
    decay: f64,
}

struct Trapezoid {
    sum: f64,
    abs: f64,
    last: f64,
}

impl Line<'_> {
    fn at(&self, tau: f64) -> Complex64 {
        (self.f)(Complex64::new(self.gamma, tau))
    }

    /// `(1/pi) int_0^T Re f(gamma + i tau) dtau` with `n` intervals.
    fn trapezoid(&self, height: f64, n: usize) -> Trapezoid {
        let h = height / n as f64;
        let f0 = self.at(0.0);
        let mut sum = 0.5 * f0.re;
        let mut abs = 0.5 * f0.norm();
        let mut last = 0.0;
        for k in 1..=n {
            let v = self.at(k as f64 * h);
            sum += v.re;
            abs += v.norm();
            last = v.norm();
        }
        Trapezoid { sum: sum * h / PI, abs: abs * h / PI, last }
    }

    /// Height and node count meeting `tol` relative to the integral.
    fn auto(&self, strip: f64, ln_z: f64, tol: f64) -> ContourSpec {
        let h = 2.0 * PI * strip / (tol.recip().ln() + strip * ln_z.abs());
        let mut sum = 0.5 * self.at(0.0).re * h / PI;
        let mut abs = sum.abs();
        let mut k = 0usize;
        // walk out until the tail bound |f(T)| / decay is negligible against
        // the accumulated magnitude
        loop {
            k += 1;
            let v = self.at(k as f64 * h);
            sum += v.re * h / PI;
            abs += v.norm() * h / PI;
            let tail = v.norm() / self.decay / PI;
            if (tail <= 1e-3 * tol * abs && k >= 4) || k > 200_000 || !tail.is_finite() {
                break;
            }
        }
        let mut height = k as f64 * h;
        if sum.abs() > 0.0 && sum.abs() < abs {
            // cancellation: the tail must also be small against the result
            height += (abs / sum.abs()).ln() / self.decay;
        }
        let nodes = (height / h).ceil().max(4.0) as usize;
        ContourSpec { gamma_abscissa: self.gamma, height: nodes as f64 * h, nodes }
    }

    fn run(&self, c: &ContourSpec) -> (f64, f64) {
        let coarse = self.trapezoid(c.height, c.nodes);
        let fine = self.trapezoid(c.height, 2 * c.nodes);
        let tail = coarse.last / self.decay / PI;
        let err = (fine.sum - coarse.sum).abs() + tail + 8.0 * f64::EPSILON * fine.abs;
        (fine.sum, err)
    }
}

fn check_abscissa(gamma: f64, upper: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < upper) {
        return Err(FracError::ContourInvalid { gamma, upper });
    }
    Ok(())
}

fn check_spec(c: &ContourSpec) -> Result<()> {
    if !(c.height > 0.0 && c.height.is_finite()) || c.nodes == 0 {
        return Err(FracError::InvalidInput("contour height must be positive and nodes >= 1".into()));
    }
    Ok(())
}

struct Setup {
    p: DiffusionParams,
    x: f64,
    b: f64,
    ln_z: f64,
    pref: f64,
}

fn setup(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64) -> Result<Setup> {
    let p = p.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
    }
    if x == 0.0 || !x.is_finite() {
        return Err(FracError::InvalidInput("the contour representation excludes x = 0".into()));
    }
    // the representation holds for x > 0; the other half line by reflection
    let (p, x) = if x < 0.0 { (p.reflected(), -x) } else { (p, x) };
    if mb_decay(p.mu, p.theta) <= 0.0 || (p.is_boundary() && p.mu == 1.0) {
        return Err(FracError::UnsupportedAtBoundary(
            "the Mellin-Barnes integrand does not decay on vertical lines".into(),
        ));
    }
    let b = kernel_ml_params(p.mu, p.nu, kind).b;
    let ln_z = p.alpha * x.ln() - p.eta.ln() - p.mu * t.ln();
    let pref = t.powf(b - 1.0) / (PI * x);
    Ok(Setup { p, x, b, ln_z, pref })
}

/// Default contour for the general kernel: `gamma = min(1, 1/alpha)/2`
/// unless overridden in `cfg`, spacing and height from `cfg.rel_tol`.
pub fn default_contour(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64, cfg: &QuadratureConfig) -> Result<ContourSpec> {
    let s = setup(p, kind, x, t)?;
    let upper = 1.0f64.min(1.0 / s.p.alpha);
    let gamma = cfg.contour_abscissa.unwrap_or(0.5 * upper);
    check_abscissa(gamma, upper)?;
    let strip = 0.8 * gamma.min(upper - gamma);
    let f = general_integrand(&s);
    let line = Line { f: &f, gamma, decay: mb_decay(s.p.mu, s.p.theta) };
    let mut spec = line.auto(strip, s.ln_z, cfg.rel_tol.max(1e-15));
    if let Some(hgt) = cfg.contour_height {
        let h = spec.height / spec.nodes as f64;
        spec.nodes = (hgt / h).ceil().max(1.0) as usize;
        spec.height = hgt;
    }
    Ok(spec)
}

fn general_integrand(s: &Setup) -> impl Fn(Complex64) -> Complex64 + '_ {
    move |w: Complex64| match ln_mb_kernel(w, s.p.alpha, s.p.theta, s.p.mu, s.b) {
        Some(l) => (l + w * s.ln_z).exp(),
        None => Complex64::new(0.0, 0.0),
    }
}

/// `G1(x, t)` by the contour integral; `x < 0` is handled by reflection.
pub fn mb_density(p: &DiffusionParams, x: f64, t: f64, c: &ContourSpec) -> Result<MbValue> {
    mb_density_kind(p, GreenKind::G1, x, t, c)
}

pub fn mb_density_kind(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64, c: &ContourSpec) -> Result<MbValue> {
    if x == 0.0 {
        return mb_origin(p, kind, t);
    }
    let s = setup(p, kind, x, t)?;
    check_abscissa(c.gamma_abscissa, 1.0f64.min(1.0 / s.p.alpha))?;
    check_spec(c)?;
    let f = general_integrand(&s);
    let line = Line { f: &f, gamma: c.gamma_abscissa, decay: mb_decay(s.p.mu, s.p.theta) };
    let (v, e) = line.run(c);
    let _ = s.x;
    Ok(MbValue { value: s.pref * v, err_est: s.pref * e })
}

/// Convenience: default contour then [`mb_density_kind`].
pub fn mb_auto(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64, cfg: &QuadratureConfig) -> Result<MbValue> {
    if x == 0.0 {
        return mb_origin(p, kind, t);
    }
    let c = default_contour(p, kind, x, t, cfg)?;
    mb_density_kind(p, kind, x, t, &c)
}

/// The limit `x -> 0` of the contour integral. Shifting the line to the
/// right, every residue but the one at `s = 1/alpha` carries a positive power
/// of `x`, so for `alpha > 1`
///
/// ```text
/// G(0, t) = t^{b-1} sin(pi (alpha - theta) / (2 alpha))
///           / (alpha sin(pi / alpha) Gamma(b - mu/alpha) (eta t^mu)^{1/alpha})
/// ```
pub fn mb_origin(p: &DiffusionParams, kind: GreenKind, t: f64) -> Result<MbValue> {
    let p = p.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
    }
    if p.alpha <= 1.0 {
        return Err(FracError::NotApplicable("the contour limit at x = 0 needs alpha > 1".into()));
    }
    let b = kernel_ml_params(p.mu, p.nu, kind).b;
    let a = p.alpha;
    let v = t.powf(b - 1.0) * sin_pi(0.5 * (a - p.theta) / a) * rgamma(b - p.mu / a)
        / (a * sin_pi(1.0 / a) * (p.eta * t.powf(p.mu)).powf(1.0 / a));
    Ok(MbValue { value: v, err_est: 16.0 * f64::EPSILON * v.abs() })
}

/// Constants of the generalized Euler-Maclaurin expansion of the rectangle
/// rule against `G1`. For smooth `F` and step `h`,
///
/// ```text
/// h sum_{j>=1} G1(+-j h) F(j h) - int_0^inf G1(+-y) F(y) dy
///     ~ sum_k F^(k)(0) / k! h^{k+1} C_k^{+-}
/// ```
///
/// with `C_k = t^{b-1}/(pi h) (1/2 pi i) int K(s) (h^alpha/u)^s zeta(1 - alpha s - k) ds`:
/// every power `y^q` of the expansion of `G1` at the origin contributes
/// `zeta(-q-k) h^q`, and the contour integral sums them, logarithmic terms
/// at coalescing poles included. Returns `[C_k^+, C_k^-]` for `k < orders`.
pub fn rectangle_corrections(p: &DiffusionParams, t: f64, h: f64, orders: usize) -> Result<Vec<[f64; 2]>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FracError::InvalidInput(format!("step {h} must be > 0")));
    }
    let mut out = vec![[0.0; 2]; orders];
    for (side, x) in [h, -h].into_iter().enumerate() {
        let s = setup(p, GreenKind::G1, x, t)?;
        let upper = 1.0f64.min(1.0 / s.p.alpha);
        let gamma = 0.5 * upper;
        let strip = 0.8 * gamma.min(upper - gamma);
        for (k, c) in out.iter_mut().enumerate() {
            let f = |w: Complex64| match ln_mb_kernel(w, s.p.alpha, s.p.theta, s.p.mu, s.b) {
                Some(l) => (l + w * s.ln_z).exp() * zeta_c(1.0 - s.p.alpha * w - k as f64),
                None => Complex64::new(0.0, 0.0),
            };
            let line = Line { f: &f, gamma, decay: mb_decay(s.p.mu, s.p.theta) };
            let spec = line.auto(strip, s.ln_z, 1e-13);
            c[side] = s.pref * line.run(&spec).0;
        }
    }
    Ok(out)
}

fn neutral_decay(alpha: f64, theta: f64) -> f64 {
    PI * (2.0 - alpha + theta) / (2.0 * alpha)
}

fn neutral_integrand(alpha: f64, theta: f64, ln_y: f64) -> impl Fn(Complex64) -> Complex64 {
    move |s: Complex64| {
        if alpha == theta {
            return Complex64::new(0.0, 0.0);
        }
        // Gamma(s/alpha) Gamma(1 - s/alpha) = pi / sin(pi s / alpha)
        let l = Complex64::new(PI.ln(), 0.0) + ln_sin_pi(s * ((alpha - theta) / (2.0 * alpha)))
            - ln_sin_pi(s / alpha)
            + s * ln_y;
        if l.re.is_finite() {
            l.exp()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

fn neutral_check(alpha: f64, theta: f64, x: f64, t: f64) -> Result<()> {
    crate::params::validate(alpha.min(1.0), 1.0, alpha, theta, 1.0)?;
    if !(x > 0.0 && t > 0.0) {
        return Err(FracError::InvalidInput("neutral contour needs x > 0 and t > 0".into()));
    }
    if neutral_decay(alpha, theta) <= 0.0 {
        return Err(FracError::UnsupportedAtBoundary("theta = alpha - 2 has no decaying contour integrand".into()));
    }
    Ok(())
}

/// Default contour for the neutral case, `gamma = alpha / 2`.
pub fn default_neutral_contour(alpha: f64, theta: f64, x: f64, t: f64, tol: f64) -> Result<ContourSpec> {
    neutral_check(alpha, theta, x, t)?;
    let gamma = 0.5 * alpha;
    let ln_y = (x / t).ln();
    let f = neutral_integrand(alpha, theta, ln_y);
    let line = Line { f: &f, gamma, decay: neutral_decay(alpha, theta) };
    Ok(line.auto(0.8 * gamma, ln_y, tol))
}

/// Neutral diffusion (`mu = alpha`, `nu = 1`, `eta = 1`):
///
/// ```text
/// N(x, t) = 1 / (pi alpha x) (1 / 2 pi i) int Gamma(s/alpha) Gamma(1 - s/alpha)
///           sin(pi s (alpha - theta) / (2 alpha)) (x/t)^s ds,   0 < gamma < alpha
/// ```
pub fn mb_neutral(alpha: f64, theta: f64, x: f64, t: f64, c: &ContourSpec) -> Result<MbValue> {
    neutral_check(alpha, theta, x, t)?;
    check_abscissa(c.gamma_abscissa, alpha)?;
    check_spec(c)?;
    let f = neutral_integrand(alpha, theta, (x / t).ln());
    let line = Line { f: &f, gamma: c.gamma_abscissa, decay: neutral_decay(alpha, theta) };
    let (v, e) = line.run(c);
    let pref = 1.0 / (PI * alpha * x);
    Ok(MbValue { value: pref * v, err_est: pref * e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_half() {
        let p = DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let v = mb_auto(&p, GreenKind::G1, 0.5, 1.0, &cfg).unwrap();
        let exact = (4.0 * PI).powf(-0.5) * (-0.0625f64).exp();
        assert!(((v.value - exact) / exact).abs() < 1e-9, "{v:?} {exact}");
    }

    #[test]
    fn origin_limit() {
        let cfg = QuadratureConfig::default();
        let g = DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        let v = mb_auto(&g, GreenKind::G1, 0.0, 2.0, &cfg).unwrap().value;
        assert!((v - (8.0 * PI).powf(-0.5)).abs() < 1e-15);
        let p = DiffusionParams::new(0.7, 0.3, 1.6, -0.2, 1.5).unwrap();
        let near = mb_auto(&p, GreenKind::G2, 1e-7, 1.3, &cfg).unwrap().value;
        let at = mb_auto(&p, GreenKind::G2, 0.0, 1.3, &cfg).unwrap().value;
        assert!(((near - at) / at).abs() < 1e-6, "{near} {at}");
    }

    #[test]
    fn contour_gate() {
        let p = DiffusionParams::new(0.8, 0.5, 1.5, 0.3, 1.0).unwrap();
        let c = ContourSpec { gamma_abscissa: 0.7, height: 30.0, nodes: 300 };
        assert!(matches!(mb_density(&p, 0.4, 1.0, &c), Err(FracError::ContourInvalid { .. })));
    }

    #[test]
    fn cauchy_neutral() {
        let c = default_neutral_contour(1.0, 0.0, 1.0, 1.0, 1e-12).unwrap();
        let v = mb_neutral(1.0, 0.0, 1.0, 1.0, &c).unwrap();
        assert!((v.value - 0.5 / PI).abs() < 1e-11, "{v:?}");
    }
}
