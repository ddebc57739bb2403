//! Boolean decisions with numeric defects and certificates.

use crate::C64;
use serde::{Deserialize, Serialize};

/// Witness attached to a failing (or passing) verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Certificate {
    /// An offending root of a characteristic polynomial.
    Root(C64),
    /// An offending point (of ℂ^n or of the torus).
    Point(Vec<C64>),
    /// Identifier of a violating polynomial, with a readable rendering.
    Polynomial(String),
    /// A named operator identity that failed.
    Identity(String),
}

/// Outcome of a tolerance-based decision: `holds` iff `defect` did not exceed
/// the tolerance the test was run at.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    /// Distance-to-satisfaction surrogate; non-negative, 0 means exact.
    pub defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    /// Route disagreements, tolerance escalations, cluster collapses.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl Verdict {
    /// Verdict determined by comparing a defect against a tolerance.
    pub fn from_defect(defect: f64, tol: f64) -> Self {
        Verdict { holds: defect <= tol, defect: defect.max(0.0), certificate: None, diagnostics: Vec::new() }
    }

    pub fn with_certificate(mut self, cert: Certificate) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn with_diagnostic(mut self, diag: impl Into<String>) -> Self {
        self.diagnostics.push(diag.into());
        self
    }

    /// Combine with another verdict: holds iff both hold, defect is the max.
    pub fn and(mut self, other: Verdict) -> Self {
        self.holds &= other.holds;
        if other.defect > self.defect {
            self.defect = other.defect;
            if other.certificate.is_some() {
                self.certificate = other.certificate;
            }
        } else if self.certificate.is_none() {
            self.certificate = other.certificate;
        }
        self.diagnostics.extend(other.diagnostics);
        self
    }
}
