//! Named pass/fail entries collected into run reports.

use serde::Serialize;

use crate::sample::{Witness, ZeroTest, DEFAULT_SEED};

/// How identities are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Sampling {
        Sampling {
            samples: 200,
            tol: 1e-9,
            seed: DEFAULT_SEED,
        }
    }
}

impl Sampling {
    pub fn with_tol(self, tol: f64) -> Sampling {
        Sampling { tol, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn from_zero_test(name: impl Into<String>, t: &ZeroTest) -> Check {
        Check {
            name: name.into(),
            residual: t.max_relative,
            tolerance: t.tolerance,
            passed: t.passed,
            witness: t.witness.clone(),
            value: t.witness_value,
            note: None,
        }
    }

    /// `residual <= tolerance`, NaN failing.
    pub fn bound(name: impl Into<String>, residual: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
            witness: None,
            value: None,
            note: None,
        }
    }

    pub fn failed(name: impl Into<String>, note: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            residual: f64::INFINITY,
            tolerance: 0.0,
            passed: false,
            witness: None,
            value: None,
            note: Some(note.into()),
        }
    }

    pub fn with_value(mut self, v: f64) -> Check {
        self.value = Some(v);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}
