//! Series and closed-form evaluation of the fundamental solution.
//!
//! Residues of the contour integrand to the right of the line give a series
//! in ascending powers of `x`; residues of `Gamma(s)` to the left give
//! descending powers. With `z = |x|^alpha / (eta t^mu)`:
//!
//! * ascending: entire in `z` for `alpha > mu`, radius 1 for `alpha = mu`,
//!   asymptotic only for `alpha < mu`;
//! * descending: entire in `1/z` for `alpha < mu`, radius 1 for
//!   `alpha = mu`, asymptotic (optimal truncation) for `alpha > mu`.
//!
//! Poles of `Gamma(1-s)` and `Gamma(1-alpha s)` that coincide or nearly
//! coincide are summed together by a circular contour around the cluster,
//! which keeps double poles and near-cancelling pairs accurate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::green_fourier::{kernel_ml_params, FourierEvaluator, GreenKind};
use crate::mellin_barnes::{ln_mb_kernel, mb_auto};
use crate::params::{DiffusionParams, QuadratureConfig};
use crate::special::{is_nonpositive_integer, ln_gamma_sign, sin_pi};

/// Relative size below which a term no longer changes the sum.
pub const SERIES_TOL: f64 = 1e-15;
/// A series value is only trusted when its rounding estimate stays below
/// this fraction of the value.
pub const ROUNDOFF_ACCEPT: f64 = 1e-9;
/// Ascending series used by [`route_auto`] up to this `z`.
pub const ASCENDING_LIMIT: f64 = 0.8;
/// Descending series used by [`route_auto`] from this `z` on.
pub const DESCENDING_LIMIT: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    /// Truncation plus rounding error bound, in the units of `value`.
    pub truncation_bound: f64,
    /// `false` when the sum must not be treated as converged.
    pub domain_ok: bool,
}

impl SeriesResult {
    fn rejected() -> Self {
        Self { value: 0.0, terms_used: 0, truncation_bound: f64::INFINITY, domain_ok: false }
    }
}

struct Setup {
    alpha: f64,
    theta: f64,
    mu: f64,
    b: f64,
    x: f64,
    ln_u: f64,
    pref: f64,
}

fn setup(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64) -> Result<Setup> {
    let p = p.validate()?;
    if !(t > 0.0 && t.is_finite() && x.is_finite()) {
        return Err(FracError::InvalidInput("need finite x and t > 0".into()));
    }
    // written for x >= 0; the other half line by reflection
    let (p, x) = if x < 0.0 { (p.reflected(), -x) } else { (p, x) };
    let b = kernel_ml_params(p.mu, p.nu, kind).b;
    Ok(Setup {
        alpha: p.alpha,
        theta: p.theta,
        mu: p.mu,
        b,
        x,
        ln_u: p.eta.ln() + p.mu * t.ln(),
        pref: t.powf(b - 1.0) / PI,
    })
}

/// `sign * exp(ln)` with a zero sign meaning an exactly vanishing term.
/// `mag` is the sum of the magnitudes of the pieces added up in `ln`: their
/// rounding errors reach the term as a relative error of about `eps mag`.
#[derive(Clone, Copy)]
struct Term {
    ln: f64,
    sign: f64,
    mag: f64,
}

impl Term {
    const ZERO: Term = Term { ln: f64::NEG_INFINITY, sign: 0.0, mag: 0.0 };
    fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    /// Value and its rounding error.
    fn eval(self) -> (f64, f64) {
        let v = self.value();
        if v == 0.0 {
            return (0.0, 0.0);
        }
        (v, v.abs() * f64::EPSILON * self.mag)
    }
}

fn mag(parts: &[f64]) -> f64 {
    parts.iter().map(|p| p.abs()).sum()
}

fn parity(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn ln_fact(n: usize) -> f64 {
    ln_gamma_sign(n as f64 + 1.0).0
}

impl Setup {
    fn ln_x(&self) -> f64 {
        self.x.ln()
    }

    /// Residue of `Gamma(1 - s)` at `s = 1 + n`, divided by `x`.
    fn a_term(&self, n: usize, b: f64) -> Term {
        let k = (n + 1) as f64;
        let sine = sin_pi(0.5 * k * (self.alpha - self.theta));
        let w = b - self.mu * k;
        if sine == 0.0 || is_nonpositive_integer(w) {
            return Term::ZERO;
        }
        let (lg1, s1) = ln_gamma_sign(1.0 - self.alpha * k);
        let (lg2, s2) = ln_gamma_sign(w);
        let parts = [lg1, -lg2, sine.abs().ln(), (self.alpha * k - 1.0) * self.ln_x(), -k * self.ln_u];
        Term { ln: parts.iter().sum(), sign: parity(n) * s1 * s2 * sine.signum(), mag: mag(&parts) }
    }

    /// Residue of `Gamma(1 - alpha s)` at `s = (1 + m)/alpha`, divided by `x`.
    fn b_term(&self, m: usize, b: f64) -> Term {
        let s0 = (m + 1) as f64 / self.alpha;
        let sine = sin_pi(0.5 * s0 * (self.alpha - self.theta));
        let w = b - self.mu * s0;
        if sine == 0.0 || is_nonpositive_integer(w) {
            return Term::ZERO;
        }
        // Gamma(s0) Gamma(1 - s0) = pi / sin(pi s0)
        let sp = sin_pi(s0);
        let (lg2, s2) = ln_gamma_sign(w);
        let ln_xm = if m == 0 { 0.0 } else { m as f64 * self.ln_x() };
        let parts =
            [PI.ln(), -sp.abs().ln(), -self.alpha.ln(), -ln_fact(m), -lg2, sine.abs().ln(), ln_xm, -s0 * self.ln_u];
        Term { ln: parts.iter().sum(), sign: parity(m) * sp.signum() * s2 * sine.signum(), mag: mag(&parts) }
    }

    /// Minus the summed residues inside a circle, divided by `x`, and the
    /// rounding error of that sum.
    fn cluster(&self, center: f64, radius: f64, b: f64) -> (f64, f64) {
        const NODES: usize = 64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for j in 0..NODES {
            let phi = 2.0 * PI * (j as f64 + 0.5) / NODES as f64;
            let e = Complex64::from_polar(1.0, phi);
            let s = center + e * radius;
            if let Some(l) = ln_mb_kernel(s, self.alpha, self.theta, self.mu, b) {
                // z^s / x = x^{alpha s - 1} u^{-s}
                let w = (s * self.alpha - 1.0) * self.ln_x() - s * self.ln_u;
                let v = (l + w).exp();
                acc += v * e;
                err += v.norm() * (4.0 + l.norm() + w.norm());
            }
        }
        let scale = radius / NODES as f64;
        (-(acc * scale).re, f64::EPSILON * err * scale)
    }

    /// Descending term `n >= 1`, divided by `x`.
    fn d_term(&self, n: usize, b: f64, ln_z: f64) -> Term {
        let nf = n as f64;
        let sine = sin_pi(0.5 * nf * (self.theta - self.alpha));
        if sine == 0.0 {
            return Term::ZERO;
        }
        let (lg1, _) = ln_gamma_sign(1.0 + self.alpha * nf);
        let (lg2, s2) = ln_gamma_sign(b + self.mu * nf);
        let parts = [lg1, -lg2, sine.abs().ln(), -nf * ln_z, -self.ln_x()];
        Term { ln: parts.iter().sum(), sign: parity(n) * s2 * sine.signum(), mag: mag(&parts) }
    }
}

/// Running sum with the stopping rules shared by the series.
struct Summation {
    sum: f64,
    abs: f64,
    /// Rounding carried in by the terms themselves.
    term_err: f64,
    used: usize,
    small_run: usize,
    zero_run: usize,
    last: f64,
}

impl Summation {
    fn new() -> Self {
        Self { sum: 0.0, abs: 0.0, term_err: 0.0, used: 0, small_run: 0, zero_run: 0, last: 0.0 }
    }

    /// Adds a term; returns true once three consecutive non-zero terms were
    /// negligible (or a long run of exact zeros).
    fn push(&mut self, v: f64, tol: f64) -> bool {
        self.push_with(v, 0.0, tol)
    }

    fn push_with(&mut self, v: f64, err: f64, tol: f64) -> bool {
        self.term_err += err;
        self.sum += v;
        self.abs += v.abs();
        self.used += 1;
        if v == 0.0 {
            self.zero_run += 1;
            return self.zero_run >= 12 && self.used > 12;
        }
        self.zero_run = 0;
        self.last = v.abs();
        if v.abs() <= tol * self.sum.abs() {
            self.small_run += 1;
        } else {
            self.small_run = 0;
        }
        self.small_run >= 3
    }

    fn roundoff(&self) -> f64 {
        4.0 * f64::EPSILON * self.abs + self.term_err
    }
}

enum Pole {
    A(usize),
    B(usize),
    Cluster { n: usize, m: usize },
}

/// Poles right of the contour in increasing order, near-coincident pairs
/// merged.
struct PoleWalk {
    alpha: f64,
    n: usize,
    m: usize,
    merge: f64,
    ln_z: f64,
}

impl PoleWalk {
    fn new(alpha: f64, ln_z: f64) -> Self {
        Self { alpha, n: 0, m: 0, merge: 0.25 * 1.0f64.min(1.0 / alpha), ln_z }
    }

    /// Two residues a distance `d` apart cancel to about `1/d`; summing them
    /// on a circle of radius `r` instead costs `exp(r |ln z|)` through the
    /// spread of `z^s` around it. Merge only when the circle loses less.
    fn merges(&self, n: usize, m: usize) -> bool {
        let d = (self.pos_a(n) - self.pos_b(m)).abs();
        d < self.merge && self.circle(n, m).1 * self.ln_z.abs() < (1.0 / d).ln().max(1.0)
    }

    fn pos_a(&self, n: usize) -> f64 {
        (n + 1) as f64
    }
    fn pos_b(&self, m: usize) -> f64 {
        (m + 1) as f64 / self.alpha
    }

    fn next(&mut self) -> Pole {
        let (a, b) = (self.pos_a(self.n), self.pos_b(self.m));
        if self.merges(self.n, self.m) {
            let p = Pole::Cluster { n: self.n, m: self.m };
            self.n += 1;
            self.m += 1;
            p
        } else if a < b {
            self.n += 1;
            Pole::A(self.n - 1)
        } else {
            self.m += 1;
            Pole::B(self.m - 1)
        }
    }

    /// Circle around a merged pair, well inside the gap to other poles.
    fn circle(&self, n: usize, m: usize) -> (f64, f64) {
        let (a, b) = (self.pos_a(n), self.pos_b(m));
        let c = 0.5 * (a + b);
        let half = 0.5 * (a - b).abs();
        let mut others = vec![self.pos_b(m + 1), self.pos_a(n + 1)];
        if n > 0 {
            others.push(self.pos_a(n - 1));
        }
        if m > 0 {
            others.push(self.pos_b(m - 1));
        }
        // poles at s <= 0 belong to Gamma(s)
        others.push(0.0);
        let gap = others.iter().map(|o| (o - c).abs()).fold(f64::INFINITY, f64::min);
        (c, 0.5 * (half + gap))
    }
}

/// Ascending series for `G1`.
pub fn series_ascending(p: &DiffusionParams, x: f64, t: f64, max_terms: usize) -> Result<SeriesResult> {
    series_ascending_kind(p, GreenKind::G1, x, t, max_terms)
}

pub fn series_ascending_kind(
    p: &DiffusionParams,
    kind: GreenKind,
    x: f64,
    t: f64,
    max_terms: usize,
) -> Result<SeriesResult> {
    let s = setup(p, kind, x, t)?;
    let b = s.b;
    ascending_with_b(&s, b, max_terms)
}

fn ascending_with_b(s: &Setup, b: f64, max_terms: usize) -> Result<SeriesResult> {
    if s.x == 0.0 {
        return ascending_origin(s, b);
    }
    let convergent = s.alpha > s.mu || (s.alpha == s.mu && s.alpha * s.ln_x() - s.ln_u < 0.0);
    let mut walk = PoleWalk::new(s.alpha, s.alpha * s.ln_x() - s.ln_u);
    let mut acc = Summation::new();
    let mut converged = false;
    let mut smallest = f64::INFINITY;
    while acc.used < max_terms {
        let (v, e) = match walk.next() {
            Pole::A(n) => s.a_term(n, b).eval(),
            Pole::B(m) => s.b_term(m, b).eval(),
            Pole::Cluster { n, m } => {
                let (c, r) = walk.circle(n, m);
                s.cluster(c, r, b)
            }
        };
        if !convergent && v != 0.0 {
            // asymptotic: stop before the terms start to grow
            if v.abs() > smallest && acc.used > 2 {
                break;
            }
            smallest = smallest.min(v.abs());
        }
        if acc.push_with(v, e, SERIES_TOL) {
            converged = true;
            break;
        }
    }
    let bound = if converged { acc.last } else { acc.last.max(smallest.min(f64::MAX)) };
    let truncation_bound = s.pref * (bound + acc.roundoff());
    let value = s.pref * acc.sum;
    let domain_ok = convergent && converged && acc.roundoff() <= ROUNDOFF_ACCEPT * acc.sum.abs();
    Ok(SeriesResult { value, terms_used: acc.used, truncation_bound, domain_ok })
}

fn ascending_origin(s: &Setup, b: f64) -> Result<SeriesResult> {
    // only terms with x^0 survive; a negative power makes the kernel blow up
    let mut n = 0usize;
    loop {
        let k = (n + 1) as f64;
        let power = s.alpha * k - 1.0;
        if power > 0.0 {
            break;
        }
        let vanishes = is_nonpositive_integer(b - s.mu * k) || sin_pi(0.5 * k * (s.alpha - s.theta)) == 0.0;
        // alpha k = 1 with alpha = 1 collides with the B family: a
        // logarithm, or a negative power of x
        if !vanishes && (power < 0.0 || (power == 0.0 && s.alpha == 1.0)) {
            return Err(FracError::DivergentAtOrigin);
        }
        n += 1;
    }
    let t0 = s.b_term(0, b);
    if (1.0f64 / s.alpha).fract() == 0.0 && s.alpha <= 1.0 {
        return Ok(SeriesResult::rejected());
    }
    let value = s.pref * t0.value();
    Ok(SeriesResult { value, terms_used: 1, truncation_bound: 4.0 * f64::EPSILON * value.abs(), domain_ok: true })
}

/// The ascending terms in the Caputo case, written with `b = 1`.
pub fn caputo_ascending_terms(p: &DiffusionParams, x: f64, t: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    let s = setup(p, GreenKind::G1, x, t)?;
    Ok((0..count).map(|n| (s.a_term(n, 1.0).value(), s.b_term(n, 1.0).value())).collect())
}

/// The ascending terms with the general `b`.
pub fn ascending_terms(p: &DiffusionParams, x: f64, t: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    let s = setup(p, GreenKind::G1, x, t)?;
    Ok((0..count).map(|n| (s.a_term(n, s.b).value(), s.b_term(n, s.b).value())).collect())
}

/// Descending series for `G1`.
pub fn series_descending(p: &DiffusionParams, x: f64, t: f64, max_terms: usize) -> Result<SeriesResult> {
    series_descending_kind(p, GreenKind::G1, x, t, max_terms)
}

pub fn series_descending_kind(
    p: &DiffusionParams,
    kind: GreenKind,
    x: f64,
    t: f64,
    max_terms: usize,
) -> Result<SeriesResult> {
    let s = setup(p, kind, x, t)?;
    if s.x == 0.0 {
        return Ok(SeriesResult::rejected());
    }
    let ln_z = s.alpha * s.ln_x() - s.ln_u;
    if ln_z <= 0.0 {
        return Ok(SeriesResult::rejected());
    }
    if ((s.alpha - s.theta) * 0.5).fract() == 0.0 {
        // sin(n pi (theta - alpha)/2) = 0 for every n: the algebraic tail is
        // identically zero and says nothing about the (faster) true decay
        return Ok(SeriesResult { value: 0.0, terms_used: 0, truncation_bound: f64::INFINITY, domain_ok: false });
    }
    let convergent = s.alpha <= s.mu;
    let mut acc = Summation::new();
    let mut converged = false;
    let mut smallest = f64::INFINITY;
    let mut n = 1;
    while acc.used < max_terms {
        let (v, e) = s.d_term(n, s.b, ln_z).eval();
        n += 1;
        if !convergent && v != 0.0 {
            if v.abs() > smallest {
                break;
            }
            smallest = v.abs();
        }
        if acc.push_with(v, e, SERIES_TOL) {
            converged = true;
            break;
        }
    }
    let bound = if converged { acc.last } else { smallest.min(f64::MAX) };
    let value = s.pref * acc.sum;
    let truncation_bound = s.pref * (bound + acc.roundoff());
    let domain_ok = (converged || bound <= ROUNDOFF_ACCEPT * acc.sum.abs()) && acc.roundoff() <= ROUNDOFF_ACCEPT * acc.sum.abs();
    Ok(SeriesResult { value, terms_used: acc.used, truncation_bound, domain_ok })
}

/// Neutral diffusion (`mu = alpha`, `nu = 1`, `eta = 1`) in closed form,
/// `y = x / t`:
///
/// ```text
/// N = y^{alpha-1} sin(pi (alpha - theta)/2) / (t pi (1 + 2 y^alpha cos(pi (alpha - theta)/2) + y^{2 alpha}))
/// ```
///
/// Negative `x` by reflection.
pub fn neutral_closed(alpha: f64, theta: f64, x: f64, t: f64) -> f64 {
    let (theta, x) = if x < 0.0 { (-theta, -x) } else { (theta, x) };
    let y = x / t;
    let phi = 0.5 * (alpha - theta);
    let ya = y.powf(alpha);
    y.powf(alpha - 1.0) * sin_pi(phi) / (t * PI * (1.0 + 2.0 * ya * crate::special::cos_pi(phi) + ya * ya))
}

/// Geometric series of the neutral kernel: powers of `(x/t)^alpha` for
/// `x < t` and of `(x/t)^{-alpha}` for `x > t`. `x = t` is outside both.
pub fn neutral_series(alpha: f64, theta: f64, x: f64, t: f64, max_terms: usize) -> SeriesResult {
    let (theta, x) = if x < 0.0 { (-theta, -x) } else { (theta, x) };
    let y = x / t;
    if y == 1.0 || x == 0.0 || !y.is_finite() {
        return SeriesResult::rejected();
    }
    let r = if y < 1.0 { y.powf(alpha) } else { y.powf(-alpha) };
    let mut acc = Summation::new();
    let mut power = 1.0;
    let mut converged = false;
    for n in 1..=max_terms {
        power *= -r;
        let v = sin_pi(0.5 * n as f64 * (theta - alpha)) * power;
        if acc.push(v, SERIES_TOL) {
            converged = true;
            break;
        }
    }
    let pref = 1.0 / (PI * x);
    SeriesResult {
        value: pref * acc.sum,
        terms_used: acc.used,
        truncation_bound: pref * (acc.last * r / (1.0 - r) + acc.roundoff()),
        domain_ok: converged,
    }
}

/// `(4 pi eta t)^{-1/2} exp(-x^2 / (4 eta t))`.
pub fn gaussian_closed(eta: f64, x: f64, t: f64) -> f64 {
    (4.0 * PI * eta * t).powf(-0.5) * (-x * x / (4.0 * eta * t)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteTag {
    ClosedGaussian,
    ClosedNeutral,
    SeriesAscending,
    SeriesDescending,
    Fourier,
    Mellin,
}

impl RouteTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RouteTag::ClosedGaussian => "closed_gaussian",
            RouteTag::ClosedNeutral => "closed_neutral",
            RouteTag::SeriesAscending => "series_ascending",
            RouteTag::SeriesDescending => "series_descending",
            RouteTag::Fourier => "fourier",
            RouteTag::Mellin => "mellin",
        }
    }
}

impl std::fmt::Display for RouteTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Routed {
    pub value: f64,
    pub err_est: f64,
    pub route: RouteTag,
}

/// Which closed form, if any, applies to the kernel.
pub fn closed_form(p: &DiffusionParams, kind: GreenKind) -> Option<RouteTag> {
    let b = kernel_ml_params(p.mu, p.nu, kind).b;
    if p.mu == 1.0 && p.alpha == 2.0 && p.theta == 0.0 {
        Some(RouteTag::ClosedGaussian)
    } else if p.mu == p.alpha && b == 1.0 && !p.is_boundary() {
        Some(RouteTag::ClosedNeutral)
    } else {
        None
    }
}

/// Evaluates a closed form selected by [`closed_form`].
pub fn closed_value(p: &DiffusionParams, tag: RouteTag, x: f64, t: f64) -> Result<f64> {
    match tag {
        RouteTag::ClosedGaussian => Ok(gaussian_closed(p.eta, x, t)),
        RouteTag::ClosedNeutral => {
            if x == 0.0 && p.alpha <= 1.0 {
                return Err(FracError::DivergentAtOrigin);
            }
            // eta rescales space by eta^{1/alpha}
            let l = p.eta.powf(1.0 / p.alpha);
            Ok(neutral_closed(p.alpha, p.theta, x / l, t) / l)
        }
        _ => Err(FracError::InvalidInput(format!("{tag} is not a closed form"))),
    }
}

/// `z = |x|^alpha / (eta t^mu)`.
pub fn similarity_variable(p: &DiffusionParams, x: f64, t: f64) -> f64 {
    x.abs().powf(p.alpha) / (p.eta * t.powf(p.mu))
}

/// Picks the cheapest trustworthy route: closed form, ascending series for
/// `z <= 0.8`, descending series for `z >= 1.25`, the Fourier integral in
/// between and wherever a series cannot vouch for its sum. The line integral
/// takes over where the Fourier route runs out of panels.
pub fn route_auto(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64, cfg: &QuadratureConfig) -> Result<Routed> {
    Router::new(p, kind, t, cfg)?.eval(x)
}

/// [`route_auto`] for many points of one parameter set and time. The Fourier
/// kernel is prepared on first use and kept.
#[derive(Clone)]
pub struct Router {
    p: DiffusionParams,
    kind: GreenKind,
    t: f64,
    cfg: QuadratureConfig,
    closed: Option<RouteTag>,
    fourier: Option<FourierEvaluator>,
}

impl Router {
    pub fn new(p: &DiffusionParams, kind: GreenKind, t: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let p = p.validate()?;
        let cfg = cfg.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
        }
        Ok(Self { p, kind, t, cfg, closed: closed_form(&p, kind), fourier: None })
    }

    pub fn params(&self) -> &DiffusionParams {
        &self.p
    }

    /// The route [`Router::eval`] tries first at `x`, before any fallback.
    pub fn preferred(&self, x: f64) -> RouteTag {
        if let Some(tag) = self.closed {
            return tag;
        }
        let z = similarity_variable(&self.p, x, self.t);
        if z <= ASCENDING_LIMIT {
            RouteTag::SeriesAscending
        } else if z >= DESCENDING_LIMIT {
            RouteTag::SeriesDescending
        } else {
            RouteTag::Fourier
        }
    }

    pub fn eval(&mut self, x: f64) -> Result<Routed> {
        let (p, kind, t, cfg) = (self.p, self.kind, self.t, self.cfg);
        let accept = |r: &SeriesResult| r.domain_ok && r.truncation_bound <= cfg.abs_tol.max(cfg.rel_tol * r.value.abs());
        match self.preferred(x) {
            tag @ (RouteTag::ClosedGaussian | RouteTag::ClosedNeutral) => {
                let v = closed_value(&p, tag, x, t)?;
                return Ok(Routed { value: v, err_est: 8.0 * f64::EPSILON * v.abs(), route: tag });
            }
            RouteTag::SeriesAscending => match series_ascending_kind(&p, kind, x, t, cfg.series_max_terms) {
                Ok(r) if accept(&r) => {
                    return Ok(Routed { value: r.value, err_est: r.truncation_bound, route: RouteTag::SeriesAscending })
                }
                Err(FracError::DivergentAtOrigin) => return Err(FracError::DivergentAtOrigin),
                _ => {}
            },
            RouteTag::SeriesDescending => {
                if let Ok(r) = series_descending_kind(&p, kind, x, t, cfg.series_max_terms) {
                    if accept(&r) {
                        return Ok(Routed { value: r.value, err_est: r.truncation_bound, route: RouteTag::SeriesDescending });
                    }
                }
            }
            _ => {}
        }
        let fourier = self.fourier().and_then(|f| f.eval(x));
        match fourier {
            Ok(g) => Ok(Routed { value: g.value, err_est: g.err_est, route: RouteTag::Fourier }),
            // very small |x| needs more oscillation periods than the Fourier
            // route may spend; the line integral has no such limit
            Err(e @ FracError::ToleranceNotMet { .. }) => {
                let Ok(m) = mb_auto(&p, kind, x, t, &cfg) else { return Err(e) };
                if m.err_est <= cfg.abs_tol.max(cfg.rel_tol * m.value.abs()) {
                    return Ok(Routed { value: m.value, err_est: m.err_est, route: RouteTag::Mellin });
                }
                // closer still to the origin with alpha < mu: the ascending
                // expansion is only asymptotic but its terms fall off fast; it
                // is used if it is sharp and consistent with the line integral
                match series_ascending_kind(&p, kind, x, t, cfg.series_max_terms) {
                    Ok(r) if r.truncation_bound <= cfg.abs_tol.max(cfg.rel_tol * r.value.abs())
                        && (r.value - m.value).abs() <= m.err_est + r.truncation_bound =>
                    {
                        Ok(Routed { value: r.value, err_est: r.truncation_bound, route: RouteTag::SeriesAscending })
                    }
                    _ => Err(e),
                }
            }
            Err(e) => Err(e),
        }
    }

    fn fourier(&mut self) -> Result<&FourierEvaluator> {
        if self.fourier.is_none() {
            self.fourier = Some(FourierEvaluator::new(&self.p.into(), self.kind, self.t, &self.cfg)?);
        }
        Ok(self.fourier.as_ref().expect("prepared above"))
    }
}

/// [`route_auto`] over a grid, order preserving and per-point.
pub fn route_auto_grid(
    p: &DiffusionParams,
    kind: GreenKind,
    xs: &[f64],
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<Result<Routed>>> {
    let mut router = Router::new(p, kind, t, cfg)?;
    if router.closed.is_none() {
        // one shared kernel for every point that ends up on the Fourier route;
        // a failure here resurfaces at those points only
        let _ = router.fourier();
    }
    Ok(xs.par_iter().map_with(router, |r, &x| r.eval(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_ascending() {
        let p = DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        for &x in &[0.0, 0.5, -1.3, 3.0] {
            let r = series_ascending(&p, x, 1.0, 400).unwrap();
            let exact = gaussian_closed(1.0, x, 1.0);
            assert!(((r.value - exact) / exact).abs() < 1e-12, "x={x} {r:?} {exact}");
            assert!(r.domain_ok);
        }
    }

    #[test]
    fn cauchy_descending() {
        let p = DiffusionParams::new(1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let r = series_descending(&p, 3.0, 1.0, 400).unwrap();
        assert!((r.value - 1.0 / (10.0 * PI)).abs() < 1e-13, "{r:?}");
        assert!(r.domain_ok);
    }

    #[test]
    fn neutral_pair_matches_closed() {
        for &(a, th) in &[(0.75, 0.2), (1.0, 0.0), (1.5, -0.2)] {
            for &x in &[0.1, 0.6, 1.7, 9.0] {
                let c = neutral_closed(a, th, x, 1.0);
                let s = neutral_series(a, th, x, 1.0, 2000);
                assert!(s.domain_ok);
                assert!((s.value - c).abs() < 1e-12 * c.abs().max(1e-3), "{a} {th} {x}: {s:?} {c}");
            }
        }
    }

    #[test]
    fn gaussian_closed_values() {
        assert!((gaussian_closed(1.0, 2.0, 1.0) - 0.103_776_874_355_148_7).abs() < 1e-15);
    }

    #[test]
    fn routes_and_tags() {
        let cfg = QuadratureConfig::default();
        let g = DiffusionParams::new(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(route_auto(&g, GreenKind::G1, 1.0, 1.0, &cfg).unwrap().route, RouteTag::ClosedGaussian);
        let p = DiffusionParams::new(0.8, 0.5, 1.5, 0.3, 1.0).unwrap();
        let r = route_auto(&p, GreenKind::G1, 0.4, 1.0, &cfg).unwrap();
        assert_eq!(r.route, RouteTag::SeriesAscending);
        let f = crate::green_fourier::green_point(&p, GreenKind::G1, 0.4, 1.0, &cfg).unwrap();
        assert!((r.value - f.value).abs() < r.err_est + f.err_est + 1e-12, "{r:?} {f:?}");
        assert_eq!(route_auto(&p, GreenKind::G1, 1.0, 1.0, &cfg).unwrap().route, RouteTag::Fourier);
    }
}
