//! The JSON problem-spec format read by the CLI and emitted by `export`.
//!
//! Expression fields are strings in the expression grammar. Basis functions
//! declared under `bases` are available to every expression as
//! `<name>1`, `<name>2` and their derivatives `d<name>1`, `d<name>2`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// `F(x)` for members of a parametrized family; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bases: Vec<BasisSpec>,
    pub phi: String,
    pub lambda1: String,
    pub lambda2: String,
    pub f1: String,
    pub f2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<String>,
    #[serde(rename = "box")]
    pub sample_box: BoxSpec,
    pub base_point: [f64; 3],
    #[serde(default)]
    pub closed_forms: ClosedFormSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<TrajectorySpec>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }
}

/// Fundamental pair of `psi'' = q(x) psi` normalized at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub name: String,
    pub q: String,
    pub x0: f64,
    pub span: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub ux: [f64; 2],
    /// Expressions whose zero sets are avoided.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
    /// Expressions required to be positive (branch selection).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positive: Vec<String>,
}

/// Reference closed forms. `w`'s and `g`'s in jet coordinates, `phi1`,
/// `phi2`, `g*_reduced` in `(x, w)`. `i*_scale` is the factor relating the
/// reference first integral to the potential of the computed form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1_reduced: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2_reduced: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i1: Option<ScaledSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i2: Option<ScaledSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub auxiliary: Vec<AuxiliarySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<SolutionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledSpec {
    pub expr: String,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// An auxiliary equation `ux = h(x, u, C)` of symmetry `index`, checked on
/// an `(x, u)` box with `C` fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliarySpec {
    pub index: usize,
    pub h: String,
    pub c: f64,
    pub x: [f64; 2],
    pub u: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
    /// Reference factor; checked against the computed one when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<String>,
}

/// `u(x)` with constants `C1`, `C2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub label: String,
    pub u: String,
    pub c1: f64,
    pub c2: f64,
    pub interval: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub ic: [f64; 3],
    pub x_end: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_parses() {
        let text = r#"{
            "name": "free",
            "phi": "0",
            "lambda1": "1",
            "lambda2": "2",
            "f1": "1",
            "f2": "1",
            "box": {"x": [0, 1], "u": [0, 1], "ux": [0, 1]},
            "base_point": [0, 0.5, 0.5]
        }"#;
        let s: ProblemSpec = serde_json::from_str(text).unwrap();
        assert_eq!(s.name, "free");
        assert!(s.g1.is_none());
        assert_eq!(s.closed_forms, ClosedFormSpec::default());
        let back: ProblemSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"name": "x", "phi": "0", "lambda1": "1", "lambda2": "2", "f1": "1", "f2": "1",
            "box": {"x": [0, 1], "u": [0, 1], "ux": [0, 1]}, "base_point": [0, 0, 0], "extra": 1}"#;
        assert!(serde_json::from_str::<ProblemSpec>(text).is_err());
    }
}
