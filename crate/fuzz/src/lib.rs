//! Checks shared by the fuzz targets and the seed-corpus test: parsing
//! arbitrary input never panics, and whatever parses survives a round trip.

use fracgreen::field::{SampledField, SourceField};
use fracgreen::{AnyParams, DiffusionParams, MultiTermParams};

pub fn params_json(s: &str) {
    if let Ok(p) = DiffusionParams::from_json(s) {
        assert_eq!(DiffusionParams::from_json(&p.to_json()).unwrap(), p);
        assert_eq!(p.validate().unwrap(), p);
    }
    if let Ok(p) = AnyParams::from_json(s) {
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(AnyParams::from_json(&text).unwrap(), p);
    }
}

pub fn multi_term_json(s: &str) {
    if let Ok(p) = MultiTermParams::from_json(s) {
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(MultiTermParams::from_json(&text).unwrap(), p);
        if let Some(single) = p.as_single() {
            assert_eq!(MultiTermParams::from(single), p);
        }
    }
}

pub fn sampled_field_json(s: &str) {
    if let Ok(f) = SampledField::from_json(s) {
        assert_eq!(SampledField::from_json(&f.to_json()).unwrap(), f);
    }
}

pub fn sampled_field_csv(s: &str) {
    if let Ok(f) = SampledField::from_csv(s) {
        // x0 and the values come back exactly; dx is recomputed from the
        // rounded last abscissa
        let back = SampledField::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.x0, f.x0);
        let span = (f.len() - 1) as f64;
        let slack = 8.0 * f64::EPSILON * (f.x0.abs() + span * f.dx);
        assert!((back.dx - f.dx).abs() * span <= slack, "{} vs {}", back.dx, f.dx);
    }
}

pub fn source_field_json(s: &str) {
    if let Ok(f) = SourceField::from_json(s) {
        assert_eq!(SourceField::from_json(&f.to_json()).unwrap(), f);
    }
}
