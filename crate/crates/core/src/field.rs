//! Functions sampled on uniform grids, with JSON and CSV encodings.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};

/// Fewest samples a field may have.
pub const MIN_POINTS: usize = 8;

/// Relative slack allowed when a CSV grid is checked for uniform spacing.
const GRID_SLACK: f64 = 1e-9;

/// Round-trip formatting used by every text output: 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        // keeps the sign of -0.0 out of the files
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// `values[i]` sampled at `x0 + i dx`; the implied periodic domain is
/// `[x0, x0 + n dx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledField {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        Self { x0, dx, values }.validate()
    }

    /// Samples `f` at `n` points starting at `x0`.
    pub fn from_fn(x0: f64, dx: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(x0, dx, (0..n).map(|i| f(x0 + i as f64 * dx)).collect())
    }

    /// Unit discrete mass (`1/dx`) at node `at`, zero elsewhere.
    pub fn delta(x0: f64, dx: f64, n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(FracError::InvalidInput(format!("delta node {at} outside 0..{n}")));
        }
        let mut values = vec![0.0; n];
        values[at] = 1.0 / dx;
        Self::new(x0, dx, values)
    }

    pub fn validate(self) -> Result<Self> {
        if !self.x0.is_finite() {
            return Err(FracError::InvalidInput(format!("x0 = {} is not finite", self.x0)));
        }
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return Err(FracError::InvalidInput(format!("dx = {} must be > 0", self.dx)));
        }
        if self.values.len() < MIN_POINTS {
            return Err(FracError::InvalidInput(format!(
                "{} samples, at least {MIN_POINTS} required",
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(FracError::InvalidInput(format!("value {i} is not finite")));
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Rectangle-rule integral, exact for the periodic trigonometric
    /// interpolant.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }

    pub fn same_grid(&self, other: &SampledField) -> bool {
        self.x0 == other.x0 && self.dx == other.dx && self.len() == other.len()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s).map_err(|e| FracError::InvalidInput(e.to_string()))?;
        f.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }

    /// Reads `x,value` rows. The grid must be uniform and increasing.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(s.as_bytes());
        let headers = rdr.headers().map_err(|e| FracError::InvalidInput(e.to_string()))?;
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(FracError::InvalidInput(format!("expected header x,value, found {:?}", headers)));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| FracError::InvalidInput(e.to_string()))?;
            if rec.len() != 2 {
                return Err(FracError::InvalidInput(format!("row {}: expected 2 columns", row + 1)));
            }
            let parse = |c: &str| {
                c.parse::<f64>().map_err(|e| FracError::InvalidInput(format!("row {}: {c:?}: {e}", row + 1)))
            };
            xs.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        if xs.len() < MIN_POINTS {
            return Err(FracError::InvalidInput(format!("{} samples, at least {MIN_POINTS} required", xs.len())));
        }
        let n = xs.len();
        let x0 = xs[0];
        let dx = (xs[n - 1] - x0) / (n - 1) as f64;
        if !(dx.is_finite() && dx > 0.0) {
            return Err(FracError::InvalidInput("x must increase".into()));
        }
        for (i, &x) in xs.iter().enumerate() {
            let expect = x0 + i as f64 * dx;
            if (x - expect).abs() > GRID_SLACK * dx.max(expect.abs()) {
                return Err(FracError::InvalidInput(format!("row {}: x = {x} breaks the uniform grid", i + 1)));
            }
        }
        Self::new(x0, dx, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format_real(self.x(i)));
            out.push(',');
            out.push_str(&format_real(*v));
            out.push('\n');
        }
        out
    }

    /// `a self + b other` on a shared grid.
    pub fn combine(&self, a: f64, other: &SampledField, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(FracError::InvalidInput("fields live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { x0: self.x0, dx: self.dx, values })
    }
}

/// A source `phi(x, s)` given by slices at increasing times, linear in time
/// between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceField {
    pub times: Vec<f64>,
    pub slices: Vec<SampledField>,
}

impl SourceField {
    pub fn new(times: Vec<f64>, slices: Vec<SampledField>) -> Result<Self> {
        Self { times, slices }.validate()
    }

    /// The same field at times `0` and `t_end`.
    pub fn constant(f: SampledField, t_end: f64) -> Result<Self> {
        Self::new(vec![0.0, t_end], vec![f.clone(), f])
    }

    pub fn validate(self) -> Result<Self> {
        if self.times.is_empty() || self.times.len() != self.slices.len() {
            return Err(FracError::InvalidInput(format!(
                "{} times for {} slices",
                self.times.len(),
                self.slices.len()
            )));
        }
        if !self.times.iter().all(|t| t.is_finite() && *t >= 0.0) {
            return Err(FracError::InvalidInput("times must be finite and >= 0".into()));
        }
        if self.times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FracError::InvalidInput("times must be strictly increasing".into()));
        }
        let slices = self.slices.into_iter().map(SampledField::validate).collect::<Result<Vec<_>>>()?;
        if slices.iter().any(|s| !s.same_grid(&slices[0])) {
            return Err(FracError::InvalidInput("slices must share one grid".into()));
        }
        Ok(Self { times: self.times, slices })
    }

    pub fn grid(&self) -> &SampledField {
        &self.slices[0]
    }

    /// Checks that `[0, t]` is covered.
    pub fn covers(&self, t: f64) -> Result<()> {
        let (a, b) = (self.times[0], self.times[self.times.len() - 1]);
        if a > 0.0 || b < t {
            return Err(FracError::InvalidInput(format!("source times [{a}, {b}] do not cover [0, {t}]")));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s).map_err(|e| FracError::InvalidInput(e.to_string()))?;
        f.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let f = SampledField::from_fn(-1.5, 0.25, 12, |x| (-x * x).exp()).unwrap();
        let back = SampledField::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.len(), 12);
        assert_eq!(back.values, f.values);
        assert!((back.dx - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_short_and_ragged() {
        assert!(SampledField::new(0.0, 1.0, vec![0.0; 7]).is_err());
        let csv = "x,value\n0,1\n1,1\n2,1\n3,1\n4,1\n5,1\n6,1\n7.5,1\n";
        assert!(SampledField::from_csv(csv).is_err());
    }

    #[test]
    fn source_grid_checks() {
        let a = SampledField::new(0.0, 1.0, vec![0.0; 8]).unwrap();
        let b = SampledField::new(0.0, 0.5, vec![0.0; 8]).unwrap();
        assert!(SourceField::new(vec![0.0, 1.0], vec![a.clone(), b]).is_err());
        assert!(SourceField::new(vec![1.0, 0.0], vec![a.clone(), a.clone()]).is_err());
        let s = SourceField::constant(a, 2.0).unwrap();
        assert!(s.covers(2.0).is_ok());
        assert!(s.covers(2.5).is_err());
    }
}
