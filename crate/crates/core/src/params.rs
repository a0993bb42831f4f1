//! Parameter objects and their domain constraints.

use serde::{Deserialize, Serialize};

use crate::error::{ConstraintViolation, FracError, Result};

// slack for constraints such as |theta| <= 2 - alpha written with decimal
// literals (0.5 vs 2 - 1.5)
const SLACK: f64 = 8.0 * f64::EPSILON;

fn violation(field: &str, bound: String) -> ConstraintViolation {
    ConstraintViolation { field: field.to_string(), bound }
}

fn check_time(mu: f64, nu: f64, out: &mut Vec<ConstraintViolation>) {
    if !(mu.is_finite() && mu > 0.0 && mu <= 1.0) {
        out.push(violation("mu", format!("{mu} not in (0, 1]")));
    }
    if !(nu.is_finite() && (0.0..=1.0).contains(&nu)) {
        out.push(violation("nu", format!("{nu} not in [0, 1]")));
    }
}

fn check_space(prefix: &str, alpha: f64, theta: f64, eta: f64, out: &mut Vec<ConstraintViolation>) {
    let name = |f: &str| format!("{prefix}{f}");
    let alpha_ok = alpha.is_finite() && alpha > 0.0 && alpha <= 2.0;
    if !alpha_ok {
        out.push(violation(&name("alpha"), format!("{alpha} not in (0, 2]")));
    }
    if !theta.is_finite() {
        out.push(violation(&name("theta"), format!("{theta} is not finite")));
    } else if alpha_ok {
        let lim = alpha.min(2.0 - alpha);
        if theta.abs() > lim + SLACK {
            out.push(violation(
                &name("theta"),
                format!("|{theta}| > min({alpha}, {})", 2.0 - alpha),
            ));
        }
    }
    if !(eta.is_finite() && eta > 0.0) {
        out.push(violation(&name("eta"), format!("{eta} not > 0")));
    }
}

/// `mu + nu (1 - mu)`, returned as exactly 1 whenever `mu` or `nu` is 1.
pub fn beta_of(mu: f64, nu: f64) -> f64 {
    if mu == 1.0 || nu == 1.0 {
        1.0
    } else {
        mu + nu * (1.0 - mu)
    }
}

/// The five-parameter set `(mu, nu, alpha, theta, eta)` of a single-term
/// equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionParams {
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
    pub theta: f64,
    pub eta: f64,
}

/// Validate five raw numbers, reporting every violated constraint at once.
pub fn validate(mu: f64, nu: f64, alpha: f64, theta: f64, eta: f64) -> Result<DiffusionParams> {
    DiffusionParams { mu, nu, alpha, theta, eta }.validate()
}

impl DiffusionParams {
    pub fn new(mu: f64, nu: f64, alpha: f64, theta: f64, eta: f64) -> Result<Self> {
        validate(mu, nu, alpha, theta, eta)
    }

    pub fn validate(self) -> Result<Self> {
        let mut v = Vec::new();
        check_time(self.mu, self.nu, &mut v);
        check_space("", self.alpha, self.theta, self.eta, &mut v);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(FracError::InvalidParams(v))
        }
    }

    /// `rho = (alpha - theta) / (2 alpha)`.
    pub fn rho(&self) -> f64 {
        (self.alpha - self.theta) / (2.0 * self.alpha)
    }

    /// Second Mittag-Leffler parameter of the initial-value kernel.
    pub fn beta(&self) -> f64 {
        beta_of(self.mu, self.nu)
    }

    /// Exponent of the `t` prefactor of G1: `mu + nu (1 - mu) - 1`.
    pub fn time_exponent(&self) -> f64 {
        self.beta() - 1.0
    }

    /// True when `rho` sits at 0 or `1/alpha` (only possible for
    /// `|theta| = alpha <= 1`). Several gamma factors degenerate there.
    pub fn is_boundary(&self) -> bool {
        (self.theta.abs() - self.alpha).abs() <= SLACK
    }

    /// The same parameters with `theta -> -theta`.
    pub fn reflected(&self) -> Self {
        Self { theta: -self.theta, ..*self }
    }

    /// `mu = nu = 1`: the classical first-order time derivative.
    pub fn is_markovian(&self) -> bool {
        self.mu == 1.0 && self.beta() == 1.0
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| FracError::InvalidInput(e.to_string()))?;
        p.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// One `(eta_j, alpha_j, theta_j)` triple of a multi-term operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTerm {
    pub eta: f64,
    pub alpha: f64,
    pub theta: f64,
}

/// Time parameters plus a finite sum of Riesz-Feller terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTermParams {
    pub mu: f64,
    pub nu: f64,
    pub terms: Vec<SpaceTerm>,
}

impl MultiTermParams {
    pub fn new(mu: f64, nu: f64, terms: Vec<SpaceTerm>) -> Result<Self> {
        Self { mu, nu, terms }.validate()
    }

    pub fn validate(self) -> Result<Self> {
        let mut v = Vec::new();
        check_time(self.mu, self.nu, &mut v);
        if self.terms.is_empty() {
            v.push(violation("terms", "at least one term required".into()));
        }
        for (j, t) in self.terms.iter().enumerate() {
            check_space(&format!("terms[{j}]."), t.alpha, t.theta, t.eta, &mut v);
        }
        if v.is_empty() {
            Ok(self)
        } else {
            Err(FracError::InvalidParams(v))
        }
    }

    pub fn beta(&self) -> f64 {
        beta_of(self.mu, self.nu)
    }

    pub fn time_exponent(&self) -> f64 {
        self.beta() - 1.0
    }

    /// Largest space order; it governs the large-`k` behaviour of the
    /// aggregated symbol.
    pub fn alpha_max(&self) -> f64 {
        self.terms.iter().map(|t| t.alpha).fold(0.0, f64::max)
    }

    pub fn is_boundary(&self) -> bool {
        self.terms.iter().any(|t| (t.theta.abs() - t.alpha).abs() <= SLACK)
    }

    /// Single-term view when `m = 1`.
    pub fn as_single(&self) -> Option<DiffusionParams> {
        match self.terms.as_slice() {
            [t] => Some(DiffusionParams { mu: self.mu, nu: self.nu, alpha: t.alpha, theta: t.theta, eta: t.eta }),
            _ => None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| FracError::InvalidInput(e.to_string()))?;
        p.validate()
    }
}

impl From<DiffusionParams> for MultiTermParams {
    fn from(p: DiffusionParams) -> Self {
        Self {
            mu: p.mu,
            nu: p.nu,
            terms: vec![SpaceTerm { eta: p.eta, alpha: p.alpha, theta: p.theta }],
        }
    }
}

/// Either parameter form, as found in a params file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyParams {
    Single(DiffusionParams),
    Multi(MultiTermParams),
}

impl AnyParams {
    /// Parse and validate a params file body. Structural problems are
    /// reported as `InvalidInput`, constraint failures as `InvalidParams`.
    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| FracError::InvalidInput(e.to_string()))?;
        let parsed = if value.get("terms").is_some() {
            AnyParams::Multi(serde_json::from_value(value).map_err(|e| FracError::InvalidInput(e.to_string()))?)
        } else {
            AnyParams::Single(serde_json::from_value(value).map_err(|e| FracError::InvalidInput(e.to_string()))?)
        };
        parsed.validate()
    }

    pub fn validate(self) -> Result<Self> {
        Ok(match self {
            AnyParams::Single(p) => AnyParams::Single(p.validate()?),
            AnyParams::Multi(p) => AnyParams::Multi(p.validate()?),
        })
    }

    pub fn to_multi(&self) -> MultiTermParams {
        match self {
            AnyParams::Single(p) => (*p).into(),
            AnyParams::Multi(p) => p.clone(),
        }
    }
}

/// Tolerances and truncation controls shared by every numerical route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest wavenumber the Fourier route may reach.
    pub k_max: f64,
    pub max_panels: usize,
    /// Mellin-Barnes line `Re(s) = gamma`; `None` picks the strip midpoint.
    pub contour_abscissa: Option<f64>,
    /// Mellin-Barnes truncation `|Im s| <= T`; `None` derives it from the
    /// integrand's decay.
    pub contour_height: Option<f64>,
    pub series_max_terms: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            k_max: 1e7,
            max_panels: 20_000,
            contour_abscissa: None,
            contour_height: None,
            series_max_terms: 400,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(self) -> Result<Self> {
        let mut v = Vec::new();
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            v.push(violation("rel_tol", format!("{} not > 0", self.rel_tol)));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            v.push(violation("abs_tol", format!("{} not > 0", self.abs_tol)));
        }
        if !(self.k_max > 0.0) {
            v.push(violation("k_max", format!("{} not > 0", self.k_max)));
        }
        if self.max_panels < 1 {
            v.push(violation("max_panels", "must be >= 1".into()));
        }
        if self.series_max_terms < 1 {
            v.push(violation("series_max_terms", "must be >= 1".into()));
        }
        if let Some(h) = self.contour_height {
            if !(h.is_finite() && h > 0.0) {
                v.push(violation("contour_height", format!("{h} not > 0")));
            }
        }
        if v.is_empty() {
            Ok(self)
        } else {
            Err(FracError::InvalidParams(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_example_and_rho() {
        let p = validate(0.8, 0.5, 1.5, 0.3, 1.0).unwrap();
        assert!((p.rho() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn theta_violation_names_field() {
        let err = validate(0.8, 0.5, 1.5, 0.6, 1.0).unwrap_err();
        match err {
            FracError::InvalidParams(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].field, "theta");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn all_violations_reported() {
        match validate(1.5, -0.1, 2.5, 0.0, -1.0).unwrap_err() {
            FracError::InvalidParams(v) => {
                let fields: Vec<_> = v.iter().map(|c| c.field.as_str()).collect();
                assert_eq!(fields, ["mu", "nu", "alpha", "eta"]);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn classical_limit_is_valid() {
        let p = validate(1.0, 1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(p.time_exponent(), 0.0);
        assert!(p.is_markovian());
    }

    #[test]
    fn time_exponent_examples() {
        let p = |mu, nu| DiffusionParams { mu, nu, alpha: 1.0, theta: 0.0, eta: 1.0 };
        assert_eq!(p(1.0, 1.0).time_exponent(), 0.0);
        assert!((p(0.8, 0.5).time_exponent() + 0.1).abs() < 1e-15);
        assert!((p(0.5, 0.0).time_exponent() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_flag() {
        assert!(validate(0.9, 1.0, 1.0, 1.0, 1.0).unwrap().is_boundary());
        assert!(validate(0.9, 1.0, 0.5, -0.5, 1.0).unwrap().is_boundary());
        assert!(!validate(0.9, 1.0, 1.5, 0.5, 1.0).unwrap().is_boundary());
    }

    #[test]
    fn json_forms() {
        let s = r#"{"mu":0.8,"nu":0.5,"alpha":1.5,"theta":0.3,"eta":1.0}"#;
        let p = DiffusionParams::from_json(s).unwrap();
        assert_eq!(DiffusionParams::from_json(&p.to_json()).unwrap(), p);
        let m = r#"{"mu":0.9,"nu":1,"terms":[{"eta":1,"alpha":1.8,"theta":0.1},{"eta":0.5,"alpha":0.6,"theta":-0.2}]}"#;
        match AnyParams::from_json(m).unwrap() {
            AnyParams::Multi(mp) => assert_eq!(mp.terms.len(), 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(AnyParams::from_json(s).unwrap(), AnyParams::Single(_)));
        assert!(matches!(AnyParams::from_json("{\"mu\":1}"), Err(FracError::InvalidInput(_))));
        assert!(matches!(
            AnyParams::from_json(r#"{"mu":0.8,"nu":0.5,"alpha":1.5,"theta":0.6,"eta":1.0}"#),
            Err(FracError::InvalidParams(_))
        ));
    }

    #[test]
    fn quadrature_config_json_defaults() {
        let c: QuadratureConfig = serde_json::from_str(r#"{"rel_tol":1e-6}"#).unwrap();
        assert_eq!(c.rel_tol, 1e-6);
        assert_eq!(c.max_panels, QuadratureConfig::default().max_panels);
        assert!(QuadratureConfig { abs_tol: 0.0, ..c }.validate().is_err());
    }
}
