//! Built-in problems and their compilation from the JSON problem format.

mod basis;

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{parse_with, Expr, ExprError, Scope, Var};
use crate::numverify::ClosedFormSolution;
use crate::sample::{Interval, Point, SampleBox};
use crate::spec::{
    AuxiliarySpec, BasisSpec, BoxSpec, ClosedFormSpec, ProblemSpec, ScaledSpec, SolutionSpec,
    TrajectorySpec,
};

pub use basis::{make_linear_basis, BasisError, LinearBasis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown problem `{0}`; try `catalog list`")]
    Unknown(String),
    #[error("field `{field}`: {source}")]
    Expr { field: String, source: ExprError },
    #[error("basis `{name}`: {source}")]
    Basis { name: String, source: BasisError },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

/// Names accepted by [`get_problem`]; `pg27_general` also takes `(F)`.
pub const NAMES: [&str; 4] = ["pg27_general", "pg27_f0", "pg27_airy", "example9"];

const DEFAULT_F: &str = "sin(x)";

/// `w1`, `w2` of the running family (independent of F).
const W1: &str = "-(ux + u^2 + 1)/(2*u)";
const W2: &str = "(ux + u^2 - 1)/(2*u)";

pub fn list() -> Vec<(&'static str, &'static str)> {
    vec![
        ("pg27_general", "u'' = ux^2/(2u) - 2u ux - u^3/2 + F(x) u - 1/(2u); F defaults to sin(x), or pg27_general(<F>)"),
        ("pg27_f0", "the running family with F = 0, with closed-form first integrals and general solution"),
        ("pg27_airy", "the running family with F = 2x + 1; linear bases generated numerically"),
        ("example9", "u'' + ux/u + 1/u + u = 0, whose only Lie point symmetry is d/dx"),
    ]
}

fn phi_of(f: &str) -> String {
    format!("ux^2/(2*u) - 2*u*ux - u^3/2 + ({f})*u - 1/(2*u)")
}

fn pg27_common(name: &str, description: &str, f: &str) -> ProblemSpec {
    ProblemSpec {
        name: name.to_string(),
        description: description.to_string(),
        family_parameter: Some(f.to_string()),
        bases: Vec::new(),
        phi: phi_of(f),
        lambda1: "ux/u - u + 1/u".into(),
        lambda2: "ux/u - u - 1/u".into(),
        f1: "u^2".into(),
        f2: "u^2".into(),
        g1: None,
        g2: None,
        sample_box: BoxSpec {
            x: [0.0, 1.0],
            u: [0.5, 2.0],
            ux: [-2.0, 2.0],
            exclude: vec!["u".into()],
            positive: Vec::new(),
        },
        base_point: [0.0, 1.0, 0.0],
        closed_forms: ClosedFormSpec {
            w1: Some(W1.into()),
            w2: Some(W2.into()),
            phi1: Some(format!("w^2 - (({f}) + 1)/2")),
            phi2: Some(format!("-w^2 + (({f}) - 1)/2")),
            ..ClosedFormSpec::default()
        },
        trajectories: Vec::new(),
    }
}

/// The running family for a given `F(x)`, with `g`'s built from numerical
/// fundamental pairs of `psi'' = (F+1)/2 psi` and `theta'' = (F-1)/2 theta`.
fn pg27_bases(name: &str, description: &str, f: &str) -> ProblemSpec {
    let mut s = pg27_common(name, description, f);
    s.bases = vec![
        BasisSpec {
            name: "psi".into(),
            q: format!("(({f}) + 1)/2"),
            x0: 0.0,
            span: [-1.0, 2.0],
        },
        BasisSpec {
            name: "theta".into(),
            q: format!("(({f}) - 1)/2"),
            x0: 0.0,
            span: [-1.0, 2.0],
        },
    ];
    // W1 = W2 = 1 for the normalized pairs.
    let g1 = format!("(theta2*{W2} - dtheta2)^2");
    let g2 = format!("(psi2*{W1} + dpsi2)^2");
    s.sample_box.exclude.push(format!("theta2*{W2} - dtheta2"));
    s.sample_box.exclude.push(format!("psi2*{W1} + dpsi2"));
    s.g1 = Some(g1);
    s.g2 = Some(g2);
    s.closed_forms.g1_reduced = Some("(theta2*w - dtheta2)^2".into());
    s.closed_forms.g2_reduced = Some("(psi2*w + dpsi2)^2".into());
    let h1 = "2*u*(C*dpsi2 - dpsi1)/(C*psi2 - psi1) - u^2 - 1";
    s.closed_forms.auxiliary = vec![AuxiliarySpec {
        index: 1,
        h: h1.into(),
        c: 0.3,
        x: [0.0, 1.0],
        u: [0.5, 2.0],
        exclude: vec!["C*psi2 - psi1".into()],
        nu: None,
    }];
    s.trajectories = vec![TrajectorySpec {
        ic: [0.0, 1.0, 0.0],
        x_end: 0.5,
    }];
    s
}

fn pg27_general(f: &str) -> ProblemSpec {
    pg27_bases(
        &format!("pg27_general({f})"),
        "Running family for a supplied F(x); g's from numerical linear bases",
        f,
    )
}

fn pg27_airy() -> ProblemSpec {
    pg27_bases(
        "pg27_airy",
        "Running family with F = 2x + 1; the linear equations are shifted Airy equations",
        "2*x + 1",
    )
}

fn pg27_f0() -> ProblemSpec {
    let mut s = pg27_common(
        "pg27_f0",
        "Running family with F = 0; first integrals, factors and general solution in closed form",
        "0",
    );
    s.phi = "ux^2/(2*u) - 2*u*ux - u^3/2 - 1/(2*u)".into();
    s.g1 = Some(format!("2*({W2})^2 + 1"));
    s.g2 = Some(format!("2*({W1})^2 - 1"));
    // Real branch of the arctanh in I1, which also keeps g2 away from zero.
    s.sample_box.ux = [-6.0, 0.0];
    s.sample_box.exclude.push("(u^2 + ux + 1)^2 - 2*u^2".into());
    s.sample_box
        .positive
        .push("2*u^2 - (u^2 + ux + 1)^2".into());
    s.base_point = [0.0, 1.0, -2.0];
    let c = &mut s.closed_forms;
    c.phi1 = Some("w^2 - 1/2".into());
    c.phi2 = Some("-w^2 - 1/2".into());
    c.g1_reduced = Some("2*w^2 + 1".into());
    c.g2_reduced = Some("2*w^2 - 1".into());
    c.i1 = Some(ScaledSpec {
        expr: "-(x - sqrt(2)*arctanh((u^2 + ux + 1)/(sqrt(2)*u)))/2".into(),
        scale: 1.0,
    });
    c.i2 = Some(ScaledSpec {
        expr: "(x + sqrt(2)*arctan((u^2 + ux - 1)/(sqrt(2)*u)))/2".into(),
        scale: 1.0,
    });
    c.mu1 = Some("-u/((u^2 + ux + 1)^2 - 2*u^2)".into());
    c.mu2 = Some("u/((u^2 + ux - 1)^2 + 2*u^2)".into());
    c.m = Some("-2*u/(((u^2 + ux - 1)^2 + 2*u^2)*((u^2 + ux + 1)^2 - 2*u^2))".into());
    c.auxiliary = vec![
        AuxiliarySpec {
            index: 1,
            h: "sqrt(2)*u*tanh((x + 2*C)/sqrt(2)) - u^2 - 1".into(),
            c: 0.3,
            x: [0.0, 1.0],
            u: [0.5, 2.0],
            exclude: Vec::new(),
            nu: Some("2/((sqrt(2)*u*tanh((x + 2*C)/sqrt(2)) - 2)^2 + 2*u^2)".into()),
        },
        AuxiliarySpec {
            index: 2,
            h: "sqrt(2)*u*tan((2*C - x)/sqrt(2)) - u^2 + 1".into(),
            c: 0.7,
            x: [0.0, 1.0],
            u: [0.5, 2.0],
            exclude: vec!["(sqrt(2)*u*tan((2*C - x)/sqrt(2)) + 2)^2 - 2*u^2".into()],
            nu: None,
        },
    ];
    let template = "sqrt(2)/(tanh(sqrt(2)/2*(x + 2*C1)) - tan(sqrt(2)/2*(-x + 2*C2)))";
    c.solutions = vec![
        SolutionSpec {
            label: "tanh branch".into(),
            u: template.into(),
            c1: 0.3,
            c2: 0.7,
            interval: [0.0, 0.4],
        },
        SolutionSpec {
            label: "coth branch through (0, 1, 0)".into(),
            u: "sqrt(2)/(1/tanh(sqrt(2)/2*(x + 2*C1)) - tan(sqrt(2)/2*(-x + 2*C2)))".into(),
            c1: std::f64::consts::FRAC_1_SQRT_2.atanh() * std::f64::consts::FRAC_1_SQRT_2,
            c2: 0.0,
            interval: [0.0, 0.5],
        },
    ];
    s.trajectories = vec![TrajectorySpec {
        ic: [0.0, 1.0, 0.0],
        x_end: 0.5,
    }];
    s
}

fn example9() -> ProblemSpec {
    let r = "sqrt(u^2 + (ux + 1)^2)";
    ProblemSpec {
        name: "example9".into(),
        description: "u'' = -ux/u - 1/u - u; two non-equivalent lambda-symmetries, g1 = g2 = 1"
            .into(),
        family_parameter: None,
        bases: Vec::new(),
        phi: "-ux/u - 1/u - u".into(),
        lambda1: "-(1/u + (u^2 + 1)/(ux*u))".into(),
        lambda2: "(ux + 1)/u".into(),
        f1: "ux".into(),
        f2: format!("u/{r}"),
        g1: Some("1".into()),
        g2: Some("1".into()),
        sample_box: BoxSpec {
            x: [0.0, 1.0],
            u: [0.5, 2.0],
            ux: [0.1, 2.0],
            exclude: vec!["u".into(), "ux".into()],
            positive: Vec::new(),
        },
        base_point: [0.0, 1.0, 1.0],
        closed_forms: ClosedFormSpec {
            w1: Some(format!("{r} - ln(abs(({r} + ux + 1)/u))")),
            w2: Some("arctan(u/(1 + ux))".into()),
            phi1: Some("0".into()),
            phi2: Some("1".into()),
            g1_reduced: Some("1".into()),
            g2_reduced: Some("1".into()),
            i1: Some(ScaledSpec {
                expr: format!("{r} - arctanh((ux + 1)/{r})"),
                scale: 1.0,
            }),
            i2: Some(ScaledSpec {
                expr: "x - arctan(u/(ux + 1))".into(),
                scale: -1.0,
            }),
            mu1: Some(format!("ux/{r}")),
            mu2: Some("-u/(u^2 + (ux + 1)^2)".into()),
            m: Some(format!("1/{r}")),
            auxiliary: vec![AuxiliarySpec {
                index: 2,
                h: "u*cos(x - C)/sin(x - C) - 1".into(),
                c: -1.0,
                x: [0.0, 1.0],
                u: [0.5, 2.0],
                exclude: Vec::new(),
                nu: Some("1/abs(sin(x - C))".into()),
            }],
            solutions: vec![SolutionSpec {
                label: "general solution".into(),
                u: "sin(C2 - x)*(C1 - arctanh(cos(C2 - x)))".into(),
                c1: 1.0,
                c2: std::f64::consts::FRAC_PI_2,
                interval: [0.0, 1.0],
            }],
        },
        trajectories: vec![TrajectorySpec {
            ic: [0.0, 1.0, -1.0],
            x_end: 1.0,
        }],
    }
}

/// Spec of a catalog problem. `pg27_general(<F>)` selects the family member.
pub fn get_spec(name: &str) -> Result<ProblemSpec, CatalogError> {
    let name = name.trim();
    match name {
        "pg27_f0" => Ok(pg27_f0()),
        "pg27_airy" => Ok(pg27_airy()),
        "example9" => Ok(example9()),
        "pg27_general" => Ok(pg27_general(DEFAULT_F)),
        _ => match name
            .strip_prefix("pg27_general(")
            .and_then(|r| r.strip_suffix(')'))
        {
            Some(f) if !f.trim().is_empty() => Ok(pg27_general(f.trim())),
            _ => Err(CatalogError::Unknown(name.to_string())),
        },
    }
}

pub fn get_problem(name: &str) -> Result<Problem, CatalogError> {
    Problem::from_spec(get_spec(name)?)
}

/// A reference first integral `I` with `scale·I` equal to the computed
/// potential up to a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    pub expr: Expr,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Auxiliary {
    pub index: usize,
    pub h: Expr,
    pub c: f64,
    pub sbox: SampleBox,
    pub nu: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub label: String,
    pub solution: ClosedFormSolution,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClosedForms {
    pub w1: Option<Expr>,
    pub w2: Option<Expr>,
    pub phi1: Option<Expr>,
    pub phi2: Option<Expr>,
    pub g1_reduced: Option<Expr>,
    pub g2_reduced: Option<Expr>,
    pub i1: Option<Scaled>,
    pub i2: Option<Scaled>,
    pub mu1: Option<Expr>,
    pub mu2: Option<Expr>,
    pub m: Option<Expr>,
    pub auxiliary: Vec<Auxiliary>,
    pub solutions: Vec<Solution>,
}

/// A compiled problem: parsed expressions, sampling box and bases.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub name: String,
    pub phi: Expr,
    pub lambda1: Expr,
    pub lambda2: Expr,
    pub f1: Expr,
    pub f2: Expr,
    pub g1: Option<Expr>,
    pub g2: Option<Expr>,
    pub sbox: SampleBox,
    pub base: Point,
    pub bases: Vec<Arc<LinearBasis>>,
    pub closed: ClosedForms,
    pub trajectories: Vec<TrajectorySpec>,
}

fn interval(field: &str, r: [f64; 2]) -> Result<Interval, CatalogError> {
    if r[0] < r[1] && r.iter().all(|v| v.is_finite()) {
        Ok(Interval::new(r[0], r[1]))
    } else {
        Err(CatalogError::Invalid {
            field: field.to_string(),
            message: format!("[{}, {}] is not a proper interval", r[0], r[1]),
        })
    }
}

impl Problem {
    pub fn from_spec(spec: ProblemSpec) -> Result<Problem, CatalogError> {
        let mut scope = Scope::new();
        let mut bases = Vec::new();
        for b in &spec.bases {
            let field = format!("bases.{}.q", b.name);
            let q =
                parse_with(&b.q, &scope).map_err(|source| CatalogError::Expr { field, source })?;
            let span = interval(&format!("bases.{}.span", b.name), b.span)?;
            let basis = Arc::new(
                make_linear_basis(&b.name, &q, b.x0, span).map_err(|source| {
                    CatalogError::Basis {
                        name: b.name.clone(),
                        source,
                    }
                })?,
            );
            scope = scope.with_basis(basis.clone());
            bases.push(basis);
        }
        let p = |field: &str, text: &str| {
            parse_with(text, &scope).map_err(|source| CatalogError::Expr {
                field: field.to_string(),
                source,
            })
        };
        let opt =
            |field: &str, text: &Option<String>| text.as_deref().map(|t| p(field, t)).transpose();

        let bs = &spec.sample_box;
        let mut sbox = SampleBox::jet(
            interval("box.x", bs.x)?,
            interval("box.u", bs.u)?,
            interval("box.ux", bs.ux)?,
        );
        for (k, e) in bs.exclude.iter().enumerate() {
            sbox = sbox.excluding(p(&format!("box.exclude[{k}]"), e)?);
        }
        for (k, e) in bs.positive.iter().enumerate() {
            sbox = sbox.requiring_positive(p(&format!("box.positive[{k}]"), e)?);
        }

        let c = &spec.closed_forms;
        let scaled =
            |field: &str, s: &Option<ScaledSpec>| -> Result<Option<Scaled>, CatalogError> {
                s.as_ref()
                    .map(|s| {
                        Ok(Scaled {
                            expr: p(field, &s.expr)?,
                            scale: s.scale,
                        })
                    })
                    .transpose()
            };
        let mut auxiliary = Vec::new();
        for (k, a) in c.auxiliary.iter().enumerate() {
            let field = |f: &str| format!("closed_forms.auxiliary[{k}].{f}");
            if a.index != 1 && a.index != 2 {
                return Err(CatalogError::Invalid {
                    field: field("index"),
                    message: "must be 1 or 2".into(),
                });
            }
            let mut abox = SampleBox::new(vec![
                (Var::X, interval(&field("x"), a.x)?),
                (Var::U, interval(&field("u"), a.u)?),
            ])
            .fixing(Var::C, a.c)
            .excluding(Expr::u());
            for e in &a.exclude {
                abox = abox.excluding(p(&field("exclude"), e)?);
            }
            auxiliary.push(Auxiliary {
                index: a.index,
                h: p(&field("h"), &a.h)?,
                c: a.c,
                sbox: abox,
                nu: opt(&field("nu"), &a.nu)?,
            });
        }
        let mut solutions = Vec::new();
        for (k, s) in c.solutions.iter().enumerate() {
            let field = |f: &str| format!("closed_forms.solutions[{k}].{f}");
            solutions.push(Solution {
                label: s.label.clone(),
                solution: ClosedFormSolution {
                    u: p(&field("u"), &s.u)?,
                    c1: s.c1,
                    c2: s.c2,
                    interval: interval(&field("interval"), s.interval)?,
                },
            });
        }
        let closed = ClosedForms {
            w1: opt("closed_forms.w1", &c.w1)?,
            w2: opt("closed_forms.w2", &c.w2)?,
            phi1: opt("closed_forms.phi1", &c.phi1)?,
            phi2: opt("closed_forms.phi2", &c.phi2)?,
            g1_reduced: opt("closed_forms.g1_reduced", &c.g1_reduced)?,
            g2_reduced: opt("closed_forms.g2_reduced", &c.g2_reduced)?,
            i1: scaled("closed_forms.i1", &c.i1)?,
            i2: scaled("closed_forms.i2", &c.i2)?,
            mu1: opt("closed_forms.mu1", &c.mu1)?,
            mu2: opt("closed_forms.mu2", &c.mu2)?,
            m: opt("closed_forms.m", &c.m)?,
            auxiliary,
            solutions,
        };
        let [bx, bu, bux] = spec.base_point;
        Ok(Problem {
            name: spec.name.clone(),
            phi: p("phi", &spec.phi)?,
            lambda1: p("lambda1", &spec.lambda1)?,
            lambda2: p("lambda2", &spec.lambda2)?,
            f1: p("f1", &spec.f1)?,
            f2: p("f2", &spec.f2)?,
            g1: opt("g1", &spec.g1)?,
            g2: opt("g2", &spec.g2)?,
            sbox,
            base: Point::new(bx, bu, bux),
            bases,
            closed,
            trajectories: spec.trajectories.clone(),
            spec,
        })
    }

    /// Loci where the forms of the problem are singular, used to split
    /// trajectories into runs.
    pub fn loci(&self) -> &[Expr] {
        &self.sbox.excluded
    }
}
