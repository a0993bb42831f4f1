//! Green functions by direct quadrature of the inverse Fourier integral
//!
//! ```text
//! G(x, t) = t^{b-1} / (2 pi) int e^{-ikx} E_{mu,b}(-t^mu S(k)) dk
//!         = t^{b-1} / pi  Re int_0^inf e^{-ikx} E_{mu,b}(-t^mu S(k)) dk
//! ```
//!
//! with `S` the (multi-term) Riesz-Feller symbol, `b = mu + nu (1 - mu)` for
//! the initial-value kernel G1 and `b = mu` for the source kernel G2.
//!
//! For `mu < 1` the integrand decays only algebraically. The half line is cut
//! into half-periods of the oscillation; once the Mittag-Leffler factor is in
//! its asymptotic regime the alternating panel sums are accelerated with the
//! Euler transformation.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::mittag_leffler::{ml, MLParams, MlRay, ASYMPTOTIC_RADIUS};
use crate::params::{DiffusionParams, MultiTermParams, QuadratureConfig};
use crate::quad::{self, gauss_legendre};
use crate::rf_symbol::psi_multi;
use crate::special::rgamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenKind {
    /// Initial-value kernel, `E_{mu, mu + nu(1 - mu)}` with prefactor
    /// `t^{mu + nu(1 - mu) - 1}`.
    G1,
    /// Source kernel, `E_{mu,mu}` with prefactor `t^{mu - 1}`.
    G2,
}

/// A kernel value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    pub err_est: f64,
}

/// Mittag-Leffler parameters of a kernel.
pub fn kernel_ml_params(mu: f64, nu: f64, kind: GreenKind) -> MLParams {
    match kind {
        GreenKind::G1 => MLParams { a: mu, b: crate::params::beta_of(mu, nu) },
        GreenKind::G2 => MLParams { a: mu, b: mu },
    }
}

enum Evaluator {
    // mu = 1: E_{1,1} = exp
    Exp,
    // all terms share one skewness, so arg(-S(k)) is fixed for k > 0
    Ray(MlRay),
    Direct,
}

/// `k -> E_{a,b}(-t^mu S(k))` for one parameter set and time, prepared once
/// and shared by every `x`.
pub struct SymbolKernel {
    p: MultiTermParams,
    ml: MLParams,
    tmu: f64,
    eval: Evaluator,
    tol: f64,
    common_theta: Option<f64>,
    failure: RefCell<Option<FracError>>,
}

// The RefCell only records the first evaluation failure inside one thread's
// call; kernels are cloned per worker by `green_grid`.
impl Clone for SymbolKernel {
    fn clone(&self) -> Self {
        Self {
            p: self.p.clone(),
            ml: self.ml,
            tmu: self.tmu,
            eval: match &self.eval {
                Evaluator::Exp => Evaluator::Exp,
                Evaluator::Ray(r) => Evaluator::Ray(r.clone()),
                Evaluator::Direct => Evaluator::Direct,
            },
            tol: self.tol,
            common_theta: self.common_theta,
            failure: RefCell::new(None),
        }
    }
}

impl SymbolKernel {
    pub fn new(p: &MultiTermParams, ml: MLParams, t: f64, tol: f64) -> Result<Self> {
        let tmu = t.powf(p.mu);
        let first = p.terms[0].theta;
        let common_theta = p.terms.iter().all(|s| s.theta == first).then_some(first);
        let eval = if ml.a == 1.0 && ml.b == 1.0 {
            Evaluator::Exp
        } else if let Some(theta) = common_theta {
            Evaluator::Ray(MlRay::new(ml, PI + theta * FRAC_PI_2, tol)?)
        } else {
            Evaluator::Direct
        };
        // exp is correctly rounded; the other evaluators carry their tolerance
        let tol = if matches!(eval, Evaluator::Exp) { 4.0 * f64::EPSILON } else { tol };
        Ok(Self { p: p.clone(), ml, tmu, eval, tol, common_theta, failure: RefCell::new(None) })
    }

    /// `t^mu S(k)`.
    pub fn scaled_symbol(&self, k: f64) -> Complex64 {
        psi_multi(&self.p, k) * self.tmu
    }

    /// `E_{a,b}(-t^mu S(k))` for any real `k`.
    pub fn eval(&self, k: f64) -> Complex64 {
        match &self.eval {
            Evaluator::Exp => (-self.scaled_symbol(k)).exp(),
            Evaluator::Ray(ray) => {
                // with a common skewness |S(k)| = sum eta_j |k|^alpha_j exactly
                let m: f64 = self.p.terms.iter().map(|s| s.eta * k.abs().powf(s.alpha)).sum::<f64>() * self.tmu;
                let v = ray.eval(m);
                if k < 0.0 {
                    v.conj()
                } else {
                    v
                }
            }
            Evaluator::Direct => self.eval_direct(k),
        }
    }

    /// Evaluation that bypasses the tabulated ray.
    pub fn eval_direct(&self, k: f64) -> Complex64 {
        let z = -self.scaled_symbol(k);
        if self.ml.a == 1.0 && self.ml.b == 1.0 {
            return z.exp();
        }
        match ml(self.ml, z, self.tol) {
            Ok(v) => v,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        }
    }

    fn take_failure(&self) -> Option<FracError> {
        self.failure.borrow_mut().take()
    }

    fn alpha_max(&self) -> f64 {
        self.p.alpha_max()
    }

    /// Argument of the leading large-`k` part of `S(k)`, `k > 0`.
    fn lead_arg(&self) -> f64 {
        let am = self.alpha_max();
        let lead: Complex64 = self
            .p
            .terms
            .iter()
            .filter(|s| s.alpha == am)
            .map(|s| Complex64::from_polar(s.eta, s.theta * FRAC_PI_2))
            .sum();
        lead.arg()
    }

    /// Index of the first non-vanishing term of `E(-w) ~ -sum_j (-w)^{-j} / Gamma(b - a j)`,
    /// or `None` when every term vanishes (`E_{1,1}` decays exponentially).
    fn lead_power(&self) -> Option<usize> {
        if matches!(self.eval, Evaluator::Exp) {
            return None;
        }
        (1..=8).find(|&j| rgamma(self.ml.b - self.ml.a * j as f64) != 0.0)
    }

    /// Smallest `k` with `t^mu |S(k)| >= w`.
    fn k_where_symbol_reaches(&self, w: f64) -> f64 {
        let f = |k: f64| self.scaled_symbol(k).norm();
        let mut hi = 1.0;
        while f(hi) < w {
            hi *= 2.0;
            if hi > 1e300 {
                return hi;
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if f(m) < w {
                lo = m;
            } else {
                hi = m;
            }
        }
        hi
    }

    /// Cut-off beyond which `|exp(-t S(k))| < e^{-40}`; `None` when the real
    /// part of the symbol does not grow.
    fn exp_cutoff(&self) -> Option<f64> {
        let re = |k: f64| self.scaled_symbol(k).re;
        let mut k = 1.0;
        while re(k) < 40.0 {
            k *= 1.5;
            if k > 1e12 {
                return None;
            }
        }
        Some(k)
    }
}

/// `G(x, t)` for a single-term parameter set.
pub fn green_point(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64, cfg: &QuadratureConfig) -> Result<GreenValue> {
    green_point_multi(&MultiTermParams::from(*p), kind, x, t, cfg)
}

/// `G(x, t)` with the aggregated multi-term symbol.
pub fn green_point_multi(
    p: &MultiTermParams,
    kind: GreenKind,
    x: f64,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<GreenValue> {
    FourierEvaluator::new(p, kind, t, cfg)?.eval(x)
}

/// A prepared kernel for repeated evaluation at arbitrary points of one
/// parameter set and time. Not `Sync`; clone it per thread.
#[derive(Clone)]
pub struct FourierEvaluator {
    kernel: SymbolKernel,
    kind: GreenKind,
    t: f64,
    cfg: QuadratureConfig,
}

impl FourierEvaluator {
    pub fn new(p: &MultiTermParams, kind: GreenKind, t: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let kernel = prepare(p, kind, t, cfg)?;
        Ok(Self { kernel, kind, t, cfg: *cfg })
    }

    pub fn eval(&self, x: f64) -> Result<GreenValue> {
        inverse_fourier(&self.kernel, self.kind, self.t, x, &self.cfg)
    }
}

/// Pointwise evaluation on a grid. Each entry carries its own result; one
/// failing point does not stop the others. Results do not depend on the
/// evaluation order or the number of worker threads.
pub fn green_grid(
    p: &DiffusionParams,
    kind: GreenKind,
    xs: &[f64],
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<Result<GreenValue>>> {
    green_grid_multi(&MultiTermParams::from(*p), kind, xs, t, cfg)
}

pub fn green_grid_multi(
    p: &MultiTermParams,
    kind: GreenKind,
    xs: &[f64],
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<Result<GreenValue>>> {
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(FracError::InvalidInput("grid must be strictly increasing".into()));
    }
    let kernel = prepare(p, kind, t, cfg)?;
    Ok(xs
        .par_iter()
        .map_with(kernel, |k, &x| inverse_fourier(k, kind, t, x, cfg))
        .collect())
}

fn prepare(p: &MultiTermParams, kind: GreenKind, t: f64, cfg: &QuadratureConfig) -> Result<SymbolKernel> {
    let p = p.clone().validate()?;
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
    }
    if p.is_boundary() && p.mu == 1.0 {
        return Err(FracError::UnsupportedAtBoundary(
            "|theta| = alpha with mu = 1 is a one-sided drift; the kernel is not a function".into(),
        ));
    }
    let ml = kernel_ml_params(p.mu, p.nu, kind);
    let ray_tol = (0.1 * cfg.rel_tol).clamp(1e-13, 1e-8);
    SymbolKernel::new(&p, ml, t, ray_tol)
}

fn prefactor(kernel: &SymbolKernel, t: f64) -> f64 {
    t.powf(kernel.ml.b - 1.0)
}

/// Real part of `e^{-ikx} F(k)`.
fn integrand(kernel: &SymbolKernel, x: f64, k: f64) -> f64 {
    let f = kernel.eval(k);
    let (s, c) = (k * x).sin_cos();
    c * f.re + s * f.im
}

struct Accum {
    value: f64,
    error: f64,
    l1: f64,
    // a panel ran out of subdivisions before meeting its tolerance
    stalled: bool,
}

impl Accum {
    fn add(&mut self, r: &quad::Adaptive<f64>) {
        self.value += r.value;
        self.error += r.error;
        self.l1 += r.l1;
        self.stalled |= !r.converged;
    }
}

fn inverse_fourier(kernel: &SymbolKernel, kind: GreenKind, t: f64, x: f64, cfg: &QuadratureConfig) -> Result<GreenValue> {
    let _ = kind;
    let pref = prefactor(kernel, t) / PI;
    // tolerances in units of the bare integral
    let abs_target = cfg.abs_tol / pref;
    let result = if x == 0.0 { origin_integral(kernel, abs_target, cfg) } else { oscillatory_integral(kernel, x, abs_target, cfg) };
    if let Some(e) = kernel.take_failure() {
        return Err(e);
    }
    let acc = result?;
    if x != 0.0 {
        imaginary_residue_check(kernel, x, pref, cfg)?;
    }
    let value = pref * acc.value;
    // rounding of the Mittag-Leffler values enters through int |F|
    let err = pref * (acc.error + kernel.tol * acc.l1);
    // Every panel met its own tolerance unless `stalled`; the summed
    // estimates are then reported as they are, since with strong cancellation
    // (int |F| >> |G|) they sit at the rounding level of the panels.
    let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
    if !err.is_finite() || (acc.stalled && err > target) {
        return Err(FracError::ToleranceNotMet { achieved: err, requested: target });
    }
    Ok(GreenValue { value, err_est: err })
}

const PANEL_SEGMENTS: usize = 200;

fn origin_integral(kernel: &SymbolKernel, abs_target: f64, cfg: &QuadratureConfig) -> Result<Accum> {
    let f = |k: f64| kernel.eval(k).re;
    let mut acc = Accum { value: 0.0, error: 0.0, l1: 0.0, stalled: false };
    let rel = 0.1 * cfg.rel_tol;
    match kernel.lead_power() {
        None => {
            let cut = kernel.exp_cutoff().ok_or_else(|| {
                FracError::UnsupportedAtBoundary("symbol has no growing real part".into())
            })?;
            let mut a = 0.0;
            let mut b = 1.0f64.min(cut);
            while a < cut {
                let r = quad::integrate(f, a, b, 0.1 * abs_target, rel, PANEL_SEGMENTS);
                acc.add(&r);
                a = b;
                b = (2.0 * b).min(cut);
            }
        }
        Some(j) => {
            let am = kernel.alpha_max();
            let p = am * j as f64;
            if p <= 1.0 {
                return Err(FracError::DivergentAtOrigin);
            }
            let kk = kernel.k_where_symbol_reaches(ASYMPTOTIC_RADIUS);
            let mut a = 0.0;
            let mut b = kk.min(1.0);
            while a < kk {
                let r = quad::integrate(f, a, b, 0.1 * abs_target, rel, PANEL_SEGMENTS);
                acc.add(&r);
                a = b;
                b = (2.0 * b).min(kk);
            }
            // k = K s^{-q} flattens the k^{-p} tail into a smooth integrand on (0, 1]
            let q = 1.0 / (p - 1.0);
            let tail = |s: f64| {
                if s == 0.0 {
                    return 0.0;
                }
                let k = kk * s.powf(-q);
                f(k) * kk * q * s.powf(-q - 1.0)
            };
            let r = quad::integrate(tail, 0.0, 1.0, 0.1 * abs_target, rel, 2000);
            if !r.converged && r.error > abs_target.max(cfg.rel_tol * (acc.value + r.value).abs()) {
                return Err(FracError::ToleranceNotMet { achieved: r.error, requested: abs_target });
            }
            acc.add(&r);
        }
    }
    Ok(acc)
}

fn oscillatory_integral(kernel: &SymbolKernel, x: f64, abs_target: f64, cfg: &QuadratureConfig) -> Result<Accum> {
    let xa = x.abs();
    let width = PI / xa;
    let lead = kernel.lead_power();
    let phase = kernel.lead_arg() * lead.unwrap_or(1) as f64;
    // zeros of cos(k x + j arg S): k |x| = phi0 + n pi
    let phi0 = (FRAC_PI_2 - x.signum() * phase).rem_euclid(PI);
    let f = |k: f64| integrand(kernel, x, k);
    let rel = 0.1 * cfg.rel_tol;
    let mut acc = Accum { value: 0.0, error: 0.0, l1: 0.0, stalled: false };
    let mut edge = phi0 / xa;
    // split the absolute budget over the panels expected before the
    // accelerated tail takes over
    let reach = match lead {
        None => kernel.exp_cutoff().unwrap_or(0.0),
        Some(_) => kernel.k_where_symbol_reaches(ASYMPTOTIC_RADIUS),
    };
    let expected = (reach / width).min(cfg.max_panels as f64) + 48.0;
    let panel_abs = 0.5 * abs_target / expected;
    if edge > 0.0 {
        let r = quad::integrate(f, 0.0, edge, panel_abs, rel, PANEL_SEGMENTS);
        acc.add(&r);
    }
    let mut panels = 1usize;
    let panel = |a: f64| quad::integrate(f, a, a + width, panel_abs, rel, PANEL_SEGMENTS);

    match lead {
        None => {
            let cut = kernel
                .exp_cutoff()
                .ok_or_else(|| FracError::UnsupportedAtBoundary("symbol has no growing real part".into()))?;
            while edge < cut {
                let r = panel(edge);
                acc.add(&r);
                edge += width;
                panels += 1;
                if panels > cfg.max_panels || edge > cfg.k_max {
                    return Err(FracError::ToleranceNotMet { achieved: acc.error.max(r.value.abs()), requested: abs_target });
                }
            }
            Ok(acc)
        }
        Some(_) => {
            let k_asym = kernel.k_where_symbol_reaches(ASYMPTOTIC_RADIUS);
            while edge < k_asym {
                let r = panel(edge);
                acc.add(&r);
                edge += width;
                panels += 1;
                if panels > cfg.max_panels || edge > cfg.k_max {
                    return Err(FracError::ToleranceNotMet { achieved: f64::INFINITY, requested: abs_target });
                }
            }
            // alternating tail
            let mut terms: Vec<f64> = Vec::new();
            let mut tail_err = 0.0;
            let mut tail_l1 = 0.0;
            let mut last: Option<f64> = None;
            loop {
                let r = panel(edge);
                terms.push(r.value);
                tail_err += r.error;
                tail_l1 += r.l1;
                edge += width;
                panels += 1;
                if terms.len() >= 8 && terms.len().is_multiple_of(4) {
                    let (s, e) = quad::euler_sum(&terms);
                    let target = abs_target.max(cfg.rel_tol * (acc.value + s).abs()) * 0.25;
                    let stable = last.map(|l| (l - s).abs() <= target).unwrap_or(false);
                    if e <= target && stable {
                        acc.value += s;
                        acc.error += tail_err + e.max(last.map(|l| (l - s).abs()).unwrap_or(0.0));
                        acc.l1 += tail_l1;
                        return Ok(acc);
                    }
                    last = Some(s);
                }
                if panels > cfg.max_panels || edge > cfg.k_max {
                    let (s, e) = quad::euler_sum(&terms);
                    return Err(FracError::ToleranceNotMet {
                        achieved: e + tail_err,
                        requested: abs_target.max(cfg.rel_tol * (acc.value + s).abs()),
                    });
                }
            }
        }
    }
}

/// The folded integral is real by construction. As a guard against sign or
/// conjugation mistakes in the symbol, the unfolded integrand is integrated
/// over a symmetric window with `F(-k)` computed independently of `F(k)`;
/// its imaginary part must vanish.
fn imaginary_residue_check(kernel: &SymbolKernel, x: f64, pref: f64, cfg: &QuadratureConfig) -> Result<()> {
    let half = (PI / x.abs()).min(kernel.k_where_symbol_reaches(1.0).max(1e-3));
    let (nodes, weights) = gauss_legendre(16);
    let mut im = 0.0;
    let mut scale = 0.0;
    for (u, w) in nodes.iter().zip(&weights) {
        let k = half * u;
        let fk = if k >= 0.0 { kernel.eval(k) } else { kernel.eval_direct(k) };
        let v = Complex64::from_polar(1.0, -k * x) * fk;
        im += w * v.im;
        scale += w * v.norm();
    }
    if let Some(e) = kernel.take_failure() {
        return Err(e);
    }
    // same normalisation as G: t^{b-1} / (2 pi) over the full line
    let residue = 0.5 * pref * half * im.abs();
    let bound = (10.0 * cfg.abs_tol).max(0.5 * pref * half * scale * 1e3 * f64::EPSILON.max(kernel.tol));
    if residue > bound {
        return Err(FracError::ImaginaryResidueTooLarge { residue, bound });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SpaceTerm;

    fn gauss(eta: f64, x: f64, t: f64) -> f64 {
        (4.0 * PI * eta * t).powf(-0.5) * (-x * x / (4.0 * eta * t)).exp()
    }

    #[test]
    fn gaussian_origin() {
        let p = DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        let v = green_point(&p, GreenKind::G1, 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v.value - 0.282_094_791_773_878_1).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn gaussian_off_origin_and_g2() {
        let p = DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        for &x in &[0.3, -1.7, 4.9] {
            let g1 = green_point(&p, GreenKind::G1, x, 0.5, &cfg).unwrap();
            let g2 = green_point(&p, GreenKind::G2, x, 0.5, &cfg).unwrap();
            let exact = gauss(1.0, x, 0.5);
            assert!(((g1.value - exact) / exact).abs() < 1e-8, "x={x} {g1:?} {exact}");
            assert_eq!(g1.value, g2.value);
        }
    }

    #[test]
    fn cauchy_value() {
        let p = DiffusionParams::new(1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let v = green_point(&p, GreenKind::G1, 1.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v.value - 1.0 / (2.0 * PI)).abs() < 1e-11, "{v:?}");
    }

    #[test]
    fn reflection_example() {
        let p = DiffusionParams::new(0.8, 0.5, 1.5, 0.3, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let a = green_point(&p, GreenKind::G1, 0.7, 1.0, &cfg).unwrap();
        let b = green_point(&p.reflected(), GreenKind::G1, -0.7, 1.0, &cfg).unwrap();
        assert!((a.value - b.value).abs() < 1e-10, "{a:?} {b:?}");
    }

    #[test]
    fn divergent_origin() {
        let p = DiffusionParams::new(0.7, 1.0, 0.9, 0.0, 1.0).unwrap();
        let r = green_point(&p, GreenKind::G1, 0.0, 1.0, &QuadratureConfig::default());
        assert_eq!(r.unwrap_err(), FracError::DivergentAtOrigin);
    }

    #[test]
    fn duplicate_terms_double_eta() {
        let m = MultiTermParams::new(
            1.0,
            1.0,
            vec![SpaceTerm { eta: 1.0, alpha: 2.0, theta: 0.0 }, SpaceTerm { eta: 1.0, alpha: 2.0, theta: 0.0 }],
        )
        .unwrap();
        let v = green_point_multi(&m, GreenKind::G1, 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v.value - (8.0 * PI).powf(-0.5)).abs() < 1e-10);
    }
}
