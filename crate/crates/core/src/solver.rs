//! Full solutions on a periodic grid.
//!
//! With `N*(k) = int e^{ikx} N dx`, `S` the Riesz-Feller symbol and
//! `beta = mu + nu (1 - mu)`:
//!
//! ```text
//! N*(k, t) = N0*(k) t^{beta-1} E_{mu,beta}(-t^mu S(k))
//!          + int_0^t phi*(k, t - xi) xi^{mu-1} E_{mu,mu}(-S(k) xi^mu) dxi
//! ```
//!
//! Transforms are discrete on the grid, so the result is exact for the
//! periodic, band-limited interpretation of the samples. The source is
//! linear in time between slices; against such a source the time integral
//! is done exactly from
//!
//! ```text
//! int xi^{mu-1} E_{mu,mu}(l xi^mu) dxi = xi^mu E_{mu,mu+1}(l xi^mu)
//! int xi^mu     E_{mu,mu}(l xi^mu) dxi = xi^{mu+1} (E_{mu,mu+1} - E_{mu,mu+2})(l xi^mu)
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{FracError, Result};
use crate::field::{SampledField, SourceField};
use crate::green_fourier::{green_grid_multi, kernel_ml_params, GreenKind};
use crate::green_series::route_auto_grid;
use crate::mellin_barnes::rectangle_corrections;
use crate::mittag_leffler::{ml, MLParams, MlRay};
use crate::params::{DiffusionParams, MultiTermParams, QuadratureConfig};
use crate::rf_symbol::psi_multi;

/// Share of the grid at each end watched for leakage.
pub const EDGE_FRACTION: f64 = 0.02;
/// Leak threshold in units of `abs_tol`.
pub const LEAK_FACTOR: f64 = 100.0;

/// Mittag-Leffler factors `E_{mu,b}(-c S(k))` for a few `b`, tabulated along
/// the ray of `-S(k)` when every term shares one skewness.
struct Multipliers {
    p: MultiTermParams,
    ml: Vec<MLParams>,
    rays: Option<Vec<MlRay>>,
    tol: f64,
}

impl Multipliers {
    fn new(p: &MultiTermParams, bs: &[f64], tol: f64) -> Result<Self> {
        let ml: Vec<MLParams> = bs.iter().map(|&b| MLParams { a: p.mu, b }).collect();
        let first = p.terms[0].theta;
        let rays = if p.terms.iter().all(|s| s.theta == first) {
            let phi = PI + first * FRAC_PI_2;
            Some(ml.iter().map(|&m| MlRay::new(m, phi, tol)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(Self { p: p.clone(), ml, rays, tol })
    }

    /// `E_{mu, b_i}(-c S(k))`.
    fn eval(&self, i: usize, k: f64, c: f64) -> Result<Complex64> {
        match &self.rays {
            Some(rays) => {
                let r: f64 = self.p.terms.iter().map(|s| s.eta * k.abs().powf(s.alpha)).sum::<f64>() * c;
                let v = rays[i].eval(r);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(FracError::ToleranceNotMet { achieved: f64::INFINITY, requested: self.tol });
                }
                Ok(if k < 0.0 { v.conj() } else { v })
            }
            None => ml(self.ml[i], -psi_multi(&self.p, k) * c, self.tol),
        }
    }
}

/// Wavenumber of DFT bin `m` on `n` points of spacing `dx`.
fn wavenumber(m: usize, n: usize, dx: f64) -> f64 {
    let j = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * j / (n as f64 * dx)
}

fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re / n as f64).collect()
}

/// Solves on the periodic grid of `n0` and checks the edges for leakage.
pub fn solve(
    p: impl Into<MultiTermParams>,
    n0: &SampledField,
    phi: Option<&SourceField>,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<SampledField> {
    let out = solve_unchecked(p, n0, phi, t, cfg)?;
    check_leak(&out, cfg)
}

/// [`solve`] without the leak check.
pub fn solve_unchecked(
    p: impl Into<MultiTermParams>,
    n0: &SampledField,
    phi: Option<&SourceField>,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<SampledField> {
    let p = p.into().validate()?;
    let cfg = cfg.validate()?;
    let n0 = n0.clone().validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
    }
    if let Some(phi) = phi {
        if !phi.grid().same_grid(&n0) {
            return Err(FracError::InvalidInput("source and initial field grids differ".into()));
        }
        phi.covers(t)?;
    }
    let n = n0.len();
    let dx = n0.dx;
    let tol = (0.1 * cfg.rel_tol).clamp(1e-13, 1e-8);
    let beta = kernel_ml_params(p.mu, p.nu, GreenKind::G1).b;
    let initial = Multipliers::new(&p, &[beta], tol)?;
    let tpref = t.powf(beta - 1.0);
    let tmu = t.powf(p.mu);

    let n0_hat = forward(&n0.values);
    let phi_hat: Vec<Vec<Complex64>> = phi.map(|s| s.slices.iter().map(|f| forward(&f.values)).collect()).unwrap_or_default();
    let source = match phi {
        Some(_) => Some(Multipliers::new(&p, &[p.mu + 1.0, p.mu + 2.0], tol)?),
        None => None,
    };

    let modes: Vec<Result<Complex64>> = (0..n)
        .into_par_iter()
        .map(|m| {
            // the forward DFT carries e^{-i kappa x}: bin kappa holds N*(-kappa)
            let k = -wavenumber(m, n, dx);
            let mut v = n0_hat[m] * initial.eval(0, k, tmu)? * tpref;
            if let (Some(src), Some(phi)) = (&source, phi) {
                v += source_mode(src, phi, &phi_hat, m, k, p.mu, t)?;
            }
            if n % 2 == 0 && m == n / 2 {
                // Nyquist bin: the two wavenumbers +-pi/dx share it
                v = Complex64::new(v.re, 0.0);
            }
            Ok(v)
        })
        .collect();
    let spectrum = modes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SampledField { x0: n0.x0, dx, values: inverse_real(spectrum) })
}

/// Time integral of one mode for a source linear between slices.
fn source_mode(
    src: &Multipliers,
    phi: &SourceField,
    phi_hat: &[Vec<Complex64>],
    m: usize,
    k: f64,
    mu: f64,
    t: f64,
) -> Result<Complex64> {
    // antiderivatives in xi of xi^{mu-1} E_{mu,mu}(l xi^mu) and xi^mu E_{mu,mu}(l xi^mu)
    let anti = |xi: f64| -> Result<(Complex64, Complex64)> {
        if xi == 0.0 {
            return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        }
        let c = xi.powf(mu);
        let e1 = src.eval(0, k, c)?;
        let e2 = src.eval(1, k, c)?;
        Ok((e1 * c, (e1 - e2) * (c * xi)))
    };
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..phi.times.len() - 1 {
        let (s0, s1) = (phi.times[i], phi.times[i + 1]);
        if s0 >= t {
            break;
        }
        let sb = s1.min(t);
        // phi(s) = phi_i + w (s - s0) with s = t - xi
        let w = (phi_hat[i + 1][m] - phi_hat[i][m]) / (s1 - s0);
        let a = phi_hat[i][m] + w * (t - s0);
        let (p_lo, q_lo) = anti(t - sb)?;
        let (p_hi, q_hi) = anti(t - s0)?;
        total += a * (p_hi - p_lo) - w * (q_hi - q_lo);
    }
    Ok(total)
}

/// Largest `|N|` on the outer `EDGE_FRACTION` of the grid at either end.
pub fn edge_magnitude(f: &SampledField) -> f64 {
    let n = f.len();
    let e = ((EDGE_FRACTION * n as f64).ceil() as usize).max(1);
    f.values[..e].iter().chain(&f.values[n - e..]).fold(0.0, |m, v| m.max(v.abs()))
}

fn check_leak(f: &SampledField, cfg: &QuadratureConfig) -> Result<SampledField> {
    let magnitude = edge_magnitude(f);
    let bound = LEAK_FACTOR * cfg.abs_tol;
    if magnitude > bound {
        return Err(FracError::BoundaryLeak { magnitude, bound });
    }
    Ok(f.clone())
}

/// Whole-line convolution `int G1(x - y, t) n0(y) dy` on the grid of `n0`,
/// with `G1` evaluated pointwise at every grid offset.
pub fn convolve_green(p: impl Into<MultiTermParams>, n0: &SampledField, t: f64, cfg: &QuadratureConfig) -> Result<SampledField> {
    let out = convolve_green_unchecked(p, n0, t, cfg)?;
    check_leak(&out, cfg)
}

/// [`convolve_green`] without the leak check.
pub fn convolve_green_unchecked(
    p: impl Into<MultiTermParams>,
    n0: &SampledField,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<SampledField> {
    let p = p.into().validate()?;
    let n0 = n0.clone().validate()?;
    let n = n0.len();
    let offsets: Vec<f64> = (0..2 * n - 1).map(|j| (j as f64 - (n - 1) as f64) * n0.dx).collect();
    let green: Vec<f64> = match p.as_single() {
        Some(single) => route_auto_grid(&single, GreenKind::G1, &offsets, t, cfg)?
            .into_iter()
            .map(|r| r.map(|r| r.value))
            .collect::<Result<_>>()?,
        None => green_grid_multi(&p, GreenKind::G1, &offsets, t, cfg)?
            .into_iter()
            .map(|r| r.map(|g| g.value))
            .collect::<Result<_>>()?,
    };
    let values = linear_convolution(&n0.values, &green, n0.dx);
    Ok(SampledField { x0: n0.x0, dx: n0.dx, values })
}

/// Number of derivative orders used by [`convolve_green_corrected`].
pub const CORRECTION_ORDERS: usize = 8;

/// Whole-line convolution with the rectangle rule corrected for the
/// non-smooth behaviour of `G1` at the origin.
///
/// For `mu < 1` the kernel has a cusp `|x|^{alpha-1}` (and weaker
/// singular powers) at the origin, so the plain rule of [`convolve_green`]
/// converges only like `h^alpha`. Here the `G1(0)` node is left out and the
/// error expansion of each half line,
/// `sum_k F^(k)(0)/k! h^{k+1} C_k`, is subtracted, with the constants from
/// [`crate::mellin_barnes::rectangle_corrections`] and the derivatives of
/// `n0` taken spectrally. Meant for smooth `n0`.
pub fn convolve_green_corrected(
    p: &DiffusionParams,
    n0: &SampledField,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<SampledField> {
    let p = p.validate()?;
    if p.mu == 1.0 {
        // smooth kernels: the plain rule is already spectrally accurate
        return convolve_green(p, n0, t, cfg);
    }
    let n0 = n0.clone().validate()?;
    let n = n0.len();
    let h = n0.dx;
    let offsets: Vec<f64> = (0..2 * n - 1)
        .map(|j| (j as f64 - (n - 1) as f64) * h)
        .filter(|&x| x != 0.0)
        .collect();
    let mut green: Vec<f64> = route_auto_grid(&p, GreenKind::G1, &offsets, t, cfg)?
        .into_iter()
        .map(|r| r.map(|r| r.value))
        .collect::<Result<_>>()?;
    green.insert(n - 1, 0.0);
    let mut values = linear_convolution(&n0.values, &green, h);
    let c = rectangle_corrections(&p, t, h, CORRECTION_ORDERS)?;
    let spectrum = forward(&n0.values);
    let mut fact = 1.0;
    for (k, ck) in c.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let weight = h.powi(k as i32 + 1) / fact * (sign * ck[0] + ck[1]);
        let deriv = derivative(&spectrum, k, h);
        for (v, d) in values.iter_mut().zip(&deriv) {
            *v -= weight * d;
        }
    }
    check_leak(&SampledField { x0: n0.x0, dx: h, values }, cfg)
}

/// `k`-th derivative of the trigonometric interpolant at the nodes.
fn derivative(spectrum: &[Complex64], k: usize, dx: f64) -> Vec<f64> {
    let n = spectrum.len();
    let scaled: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(m, v)| {
            if k % 2 == 1 && n.is_multiple_of(2) && m == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            v * Complex64::new(0.0, wavenumber(m, n, dx)).powu(k as u32)
        })
        .collect();
    inverse_real(scaled)
}

/// `h sum_j g[i - j + n - 1] a[j]` for `i < n`, `g` holding offsets
/// `-(n-1)..=(n-1)`.
fn linear_convolution(a: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    let n = a.len();
    let len = (2 * n).next_power_of_two();
    let mut ap = vec![0.0; len];
    ap[..n].copy_from_slice(a);
    let mut gp = vec![0.0; len];
    for (j, v) in g.iter().enumerate() {
        let d = j as isize - (n as isize - 1);
        gp[d.rem_euclid(len as isize) as usize] = *v;
    }
    let prod: Vec<Complex64> = forward(&ap).iter().zip(forward(&gp)).map(|(x, y)| x * y).collect();
    inverse_real(prod)[..n].iter().map(|v| v * h).collect()
}

/// Bound on the part of a discrete delta's response lost above the Nyquist
/// wavenumber `pi/dx`, at distance `r != 0` from the delta. Uses the
/// algebraic decay `|K(k)| ~ k^{-alpha}` of the multiplier; infinite when
/// that tail is not integrable.
pub fn band_limit_bound(p: impl Into<MultiTermParams>, dx: f64, r: f64, t: f64) -> Result<f64> {
    let p = p.into().validate()?;
    let beta = kernel_ml_params(p.mu, p.nu, GreenKind::G1).b;
    let kn = PI / dx;
    let mult = Multipliers::new(&p, &[beta], 1e-10)?;
    let kv = (mult.eval(0, kn, t.powf(p.mu))? * t.powf(beta - 1.0)).norm();
    let alpha = p.alpha_max();
    let integral = if alpha > 1.0 { kv * kn / (alpha - 1.0) } else { f64::INFINITY };
    // one integration by parts against e^{-ikr}
    let oscillatory = if r != 0.0 { 2.0 * kv / r.abs() } else { f64::INFINITY };
    Ok(integral.min(oscillatory) / PI)
}
