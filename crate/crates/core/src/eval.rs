//! Grid evaluation through a chosen route, route comparison, and the row
//! formats written by the command-line tool.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::field::format_real;
use crate::green_fourier::{FourierEvaluator, GreenKind};
use crate::green_series::{
    closed_form, closed_value, route_auto_grid, series_ascending_kind, series_descending_kind, similarity_variable,
    RouteTag,
};
use crate::mellin_barnes::mb_auto;
use crate::params::{AnyParams, DiffusionParams, QuadratureConfig};

/// Route requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Auto,
    Fourier,
    Series,
    Mellin,
    Closed,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Auto => "auto",
            Route::Fourier => "fourier",
            Route::Series => "series",
            Route::Mellin => "mellin",
            Route::Closed => "closed",
        }
    }
}

impl FromStr for Route {
    type Err = FracError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Route::Auto,
            "fourier" => Route::Fourier,
            "series" => Route::Series,
            "mellin" => Route::Mellin,
            "closed" => Route::Closed,
            _ => return Err(FracError::InvalidInput(format!("unknown route {s:?}"))),
        })
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub x: f64,
    pub value: f64,
    pub err_est: f64,
    pub route: RouteTag,
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite()) || n == 0 || (n > 1 && !(a < b)) {
        return Err(FracError::InvalidInput(format!("bad grid [{a}, {b}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let h = (b - a) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect())
}

/// Evaluates the kernel at every `x`. Errors that concern the whole request
/// (bad parameters, a route that cannot apply to these parameters at all)
/// come back as the outer error; per-point failures stay with their point.
pub fn evaluate(
    p: &AnyParams,
    kind: GreenKind,
    route: Route,
    xs: &[f64],
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<Result<EvalRow>>> {
    let p = p.clone().validate()?;
    let cfg = cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(FracError::InvalidInput(format!("t = {t} must be > 0")));
    }
    let multi = p.to_multi();
    let single = multi.as_single();
    match (route, single) {
        (Route::Fourier, _) | (Route::Auto, None) => {
            let ev = FourierEvaluator::new(&multi, kind, t, &cfg)?;
            Ok(xs
                .par_iter()
                .map_with(ev, |ev, &x| {
                    ev.eval(x).map(|g| EvalRow { x, value: g.value, err_est: g.err_est, route: RouteTag::Fourier })
                })
                .collect())
        }
        (Route::Auto, Some(s)) => Ok(route_auto_grid(&s, kind, xs, t, &cfg)?
            .into_iter()
            .zip(xs)
            .map(|(r, &x)| r.map(|r| EvalRow { x, value: r.value, err_est: r.err_est, route: r.route }))
            .collect()),
        (Route::Series, Some(s)) => Ok(xs.par_iter().map(|&x| series_point(&s, kind, x, t, &cfg)).collect()),
        (Route::Mellin, Some(s)) => Ok(xs
            .par_iter()
            .map(|&x| {
                let v = mb_auto(&s, kind, x, t, &cfg)?;
                Ok(EvalRow { x, value: v.value, err_est: v.err_est, route: RouteTag::Mellin })
            })
            .collect()),
        (Route::Closed, Some(s)) => {
            let tag = closed_form(&s, kind)
                .ok_or_else(|| FracError::NotApplicable("no closed form for these parameters".into()))?;
            Ok(xs
                .iter()
                .map(|&x| {
                    let v = closed_value(&s, tag, x, t)?;
                    Ok(EvalRow { x, value: v, err_est: 8.0 * f64::EPSILON * v.abs(), route: tag })
                })
                .collect())
        }
        (r, None) => Err(FracError::NotApplicable(format!("route {r} needs a single space term"))),
    }
}

/// The series whose domain contains `x`, falling back to the other one; a
/// point neither can vouch for is not applicable.
fn series_point(p: &DiffusionParams, kind: GreenKind, x: f64, t: f64, cfg: &QuadratureConfig) -> Result<EvalRow> {
    let z = similarity_variable(p, x, t);
    let asc = |_| series_ascending_kind(p, kind, x, t, cfg.series_max_terms).map(|r| (r, RouteTag::SeriesAscending));
    let desc = |_| series_descending_kind(p, kind, x, t, cfg.series_max_terms).map(|r| (r, RouteTag::SeriesDescending));
    let order: [&dyn Fn(()) -> Result<_>; 2] = if z <= 1.0 { [&asc, &desc] } else { [&desc, &asc] };
    for f in order {
        match f(()) {
            Ok((r, tag)) if r.domain_ok => {
                return Ok(EvalRow { x, value: r.value, err_est: r.truncation_bound, route: tag })
            }
            Err(FracError::DivergentAtOrigin) => return Err(FracError::DivergentAtOrigin),
            _ => {}
        }
    }
    Err(FracError::NotApplicable(format!("no series converges reliably at x = {x}")))
}

/// `x,value,err_est,route_tag` with 17 significant digits.
pub fn rows_to_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from("x,value,err_est,route_tag\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", format_real(r.x), format_real(r.value), format_real(r.err_est), r.route);
    }
    out
}

/// JSON array of row objects; numbers carry the same digits as the CSV.
pub fn rows_to_json(rows: &[EvalRow]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in rows.iter().enumerate() {
        let sep = if i + 1 < rows.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "  {{\"x\": {}, \"value\": {}, \"err_est\": {}, \"route_tag\": \"{}\"}}{sep}",
            format_real(r.x),
            format_real(r.value),
            format_real(r.err_est),
            r.route
        );
    }
    out.push_str("]\n");
    out
}

/// Outcome of comparing two routes point by point.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub compared: usize,
    /// Points where either route was not applicable.
    pub skipped: usize,
    /// Points where either route failed outright.
    pub failed: Vec<(f64, String)>,
    pub max_rel: f64,
    pub mean_rel: f64,
    pub worst_x: f64,
    /// Every compared point satisfied `|a - b| <= err_a + err_b`.
    pub within_estimates: bool,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.failed.is_empty() && self.within_estimates && self.compared > 0
    }
}

pub fn compare_rows(a: &[Result<EvalRow>], b: &[Result<EvalRow>], xs: &[f64]) -> Comparison {
    let mut c = Comparison {
        compared: 0,
        skipped: 0,
        failed: Vec::new(),
        max_rel: 0.0,
        mean_rel: 0.0,
        worst_x: f64::NAN,
        within_estimates: true,
    };
    let mut sum = 0.0;
    for ((ra, rb), &x) in a.iter().zip(b).zip(xs) {
        match (ra, rb) {
            (Ok(ra), Ok(rb)) => {
                let d = (ra.value - rb.value).abs();
                let scale = ra.value.abs().max(rb.value.abs());
                let rel = if scale > 0.0 { d / scale } else { 0.0 };
                // a few ulps of slack for rows that are both exact
                if d > ra.err_est + rb.err_est + 16.0 * f64::EPSILON * scale {
                    c.within_estimates = false;
                }
                if !(rel <= c.max_rel) {
                    c.max_rel = rel;
                    c.worst_x = x;
                }
                sum += rel;
                c.compared += 1;
            }
            (Err(FracError::NotApplicable(_)), _) | (_, Err(FracError::NotApplicable(_))) => c.skipped += 1,
            (Err(e), _) | (_, Err(e)) => c.failed.push((x, e.to_string())),
        }
    }
    if c.compared > 0 {
        c.mean_rel = sum / c.compared as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-5.0, 5.0, 101).unwrap();
        assert_eq!(v[0], -5.0);
        assert_eq!(v[100], 5.0);
        assert!((v[50]).abs() < 1e-15);
        assert!(linspace(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = [EvalRow { x: -1.0, value: 0.25, err_est: 0.0, route: RouteTag::Fourier }];
        assert_eq!(
            rows_to_csv(&rows),
            "x,value,err_est,route_tag\n-1.0000000000000000e0,2.5000000000000000e-1,0.0000000000000000e0,fourier\n"
        );
        let json: serde_json::Value = serde_json::from_str(&rows_to_json(&rows)).unwrap();
        assert_eq!(json[0]["route_tag"], "fourier");
        assert_eq!(json[0]["value"], 0.25);
    }

    #[test]
    fn closed_needs_closed_form() {
        let p = AnyParams::Single(DiffusionParams::new(0.7, 1.0, 1.5, 0.0, 1.0).unwrap());
        let r = evaluate(&p, GreenKind::G1, Route::Closed, &[0.5], 1.0, &QuadratureConfig::default());
        assert!(matches!(r, Err(FracError::NotApplicable(_))));
    }
}
