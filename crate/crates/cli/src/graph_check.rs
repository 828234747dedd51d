//! Independent re-verification of a serialized overlay.

use std::fmt;

use expanderquorum::overlay::{eigen_lambda, ramanujan_bound, Certificate, OverlayGraph};

const LAMBDA_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport {
    pub nodes: usize,
    pub degree: usize,
    pub regular: bool,
    pub certificate: Certificate,
    pub recorded_lambda: f64,
    pub measured_lambda: f64,
    /// Spectral bound implied by the certificate, if any.
    pub bound: Option<f64>,
    pub failures: Vec<String>,
}

impl GraphReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify(g: &OverlayGraph) -> GraphReport {
    let measured = eigen_lambda(g);
    let mut failures = Vec::new();
    if (measured - g.lambda()).abs() > LAMBDA_TOLERANCE * g.lambda().abs().max(1.0) {
        failures.push(format!("recorded lambda {} differs from measured {measured}", g.lambda()));
    }
    let bound = match g.certificate() {
        Certificate::CertifiedRamanujan(slack) => {
            if !g.is_regular() {
                failures.push("certified graph is not regular".into());
            }
            let b = ramanujan_bound(g.degree()) * (1.0 + slack);
            if measured > b {
                failures.push(format!("lambda {measured} exceeds bound {b}"));
            }
            Some(b)
        }
        Certificate::CompleteFallback => {
            if !g.is_complete() {
                failures.push("complete-fallback graph is not complete".into());
            }
            None
        }
        Certificate::UncertifiedRandom => None,
    };
    GraphReport {
        nodes: g.node_count(),
        degree: g.degree(),
        regular: g.is_regular(),
        certificate: g.certificate(),
        recorded_lambda: g.lambda(),
        measured_lambda: measured,
        bound,
        failures,
    }
}

impl fmt::Display for GraphReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(f, "degree: {}", self.degree)?;
        writeln!(f, "regular: {}", self.regular)?;
        writeln!(f, "certificate: {}", self.certificate)?;
        writeln!(f, "recorded_lambda: {}", self.recorded_lambda)?;
        writeln!(f, "measured_lambda: {}", self.measured_lambda)?;
        if let Some(b) = self.bound {
            writeln!(f, "bound: {b}")?;
        }
        for fail in &self.failures {
            writeln!(f, "FAIL: {fail}")?;
        }
        write!(f, "verdict: {}", if self.ok() { "ok" } else { "rejected" })
    }
}
