//! The six shipped example instances and their reference values.

use std::path::Path;

use crate::error::Error;
use crate::format::{parse_instance, Parsed};
use crate::solve::{AlphaSpec, Request};

pub const NAMES: [&str; 6] = ["example1", "example2", "example3", "example4", "example5", "example6"];

const TEXTS: [&str; 6] = [
    include_str!("../../../fixtures/example1.qcqp"),
    include_str!("../../../fixtures/example2.qcqp"),
    include_str!("../../../fixtures/example3.qcqp"),
    include_str!("../../../fixtures/example4.qcqp"),
    include_str!("../../../fixtures/example5.qcqp"),
    include_str!("../../../fixtures/example6.qcqp"),
];

pub fn embedded(name: &str) -> Option<&'static str> {
    NAMES.iter().position(|n| *n == name).map(|i| TEXTS[i])
}

/// Loads `spec` as a file path, then as `spec.qcqp`, then as the name of
/// an embedded fixture (`example3`, `fixtures/example3`).
pub fn load(spec: &str) -> Result<Parsed, Error> {
    for cand in [spec.to_string(), format!("{spec}.qcqp")] {
        let p = Path::new(&cand);
        if p.is_file() {
            let bytes = std::fs::read(p).map_err(|e| Error::io(cand.clone(), e))?;
            return parse_instance(&bytes);
        }
    }
    let stem = Path::new(spec).file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    match embedded(stem) {
        Some(text) => parse_instance(text.as_bytes()),
        None => Err(Error::FixtureNotFound(spec.to_string())),
    }
}

/// What a reference value is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Bound(Request),
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub fixture: &'static str,
    pub target: Target,
    pub alpha: Option<AlphaSpec>,
    pub value: f64,
    pub tol: f64,
    /// Documented as not reproducible; reported but never fatal.
    pub known_deviation: bool,
}

impl Reference {
    pub fn label(&self) -> String {
        match &self.target {
            Target::Bound(r) => r.label(),
            Target::Oracle => "oracle".into(),
        }
    }
}

fn pinned(u: &[f64], alpha: f64) -> Option<AlphaSpec> {
    Some(AlphaSpec { u: u.to_vec(), alpha: Some(alpha) })
}

/// Published reference values for the shipped examples.
pub fn references() -> Vec<Reference> {
    use qrelax_core::relax::Family::*;
    let b = |fixture, req, alpha, value, tol| Reference {
        fixture,
        target: Target::Bound(req),
        alpha,
        value,
        tol,
        known_deviation: false,
    };
    let o = |fixture, value| Reference { fixture, target: Target::Oracle, alpha: None, value, tol: 1e-3, known_deviation: false };
    let p = Request::plain;
    let a = Request::with_alpha;
    let ex3 = pinned(&[1.0, 2.0], 1.8029);
    let ex4 = pinned(&[1.0, 1.0], 0.6667);
    let mut refs = vec![
        b("example1", p(Sdp), None, -1.9900, 1e-3),
        b("example1", p(GsrtA), None, -1.2249, 1e-3),
        o("example1", -1.21788),
        b("example2", p(Rlt), None, -1.9252, 1e-3),
        b("example2", p(GsrtA), None, -0.7449, 1e-3),
        o("example2", -0.7449),
        b("example3", p(Sdp), None, -20.28, 1e-2),
        b("example3", p(Rlt), None, -16.23, 1e-2),
        b("example3", p(SocRlt), None, -13.99, 1e-2),
        b("example3", p(AlphaLmi), ex3.clone(), -10.86, 1e-2),
        b("example3", p(GsrtA), None, -6.011, 1e-2),
        b("example3", p(GsrtB), None, -3.331, 1e-2),
        b("example3", a(Rlt), ex3.clone(), -11.66, 1e-2),
        b("example3", a(SocRlt), ex3.clone(), -8.445, 1e-2),
        b("example3", a(GsrtA), ex3.clone(), -4.887, 1e-2),
        b("example3", a(GsrtB), ex3, -3.327, 1e-2),
        o("example3", -3.327),
        b("example4", p(Sdp), None, -103.43, 1e-2),
        b("example4", p(Rlt), None, -26.67, 1e-2),
        b("example4", p(SocRlt), None, -24.63, 1e-2),
        b("example4", p(Rtc), ex4.clone(), -19.61, 1e-2),
        b("example4", p(GsrtA), None, -24.08, 1e-2),
        b("example4", p(GsrtB), None, -6.4444, 1e-2),
        b("example4", a(Rlt), ex4.clone(), -6.4447, 1e-2),
        b("example4", a(SocRlt), ex4.clone(), -6.4447, 1e-2),
        b("example4", a(GsrtA), ex4.clone(), -6.4445, 1e-2),
        b("example4", a(GsrtB), ex4, -6.4444, 1e-2),
        o("example4", -6.4444),
        b("example5", p(GsrtA), None, -21.3379, 1e-2),
        b("example6", p(GsrtA), None, -5.51378, 1e-2),
    ];
    for (fixture, value) in [("example5", -21.3151), ("example6", -5.3560)] {
        refs.push(Reference { known_deviation: true, ..b(fixture, p(Sst), None, value, 1e-2) });
    }
    refs
}
