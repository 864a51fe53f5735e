//! The classification table: 26 normal forms over four symmetry classes,
//! with focal curves, reduction invariants, reduced surfaces and branch data.

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use super::{CurveKind, Family, LinearWeb3, ParamFlow, SymClass, WebSymmetry};
use crate::error::{Error, Result};
use crate::polycore::{MultiPoly, PolyRing, Rational};

const INF: f64 = f64::INFINITY;

/// Parameters of a normal form; exact rationals carried alongside their f64
/// values so branch-polynomial identities can be checked exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSet {
    pub lambda: Option<Rational>,
    pub mu: Option<Rational>,
    pub beta: Option<Rational>,
}

impl ParamSet {
    pub fn none() -> Self {
        ParamSet { lambda: None, mu: None, beta: None }
    }

    fn lam(&self) -> f64 {
        self.lambda.as_ref().map(|r| r.to_f64()).unwrap_or(0.0)
    }

    fn mu(&self) -> f64 {
        self.mu.as_ref().map(|r| r.to_f64()).unwrap_or(0.0)
    }

    fn beta(&self) -> f64 {
        self.beta.as_ref().map(|r| r.to_f64()).unwrap_or(0.0)
    }
}

/// Static descriptor of a catalog row.
#[derive(Debug, Clone, Serialize)]
pub struct FormSpec {
    pub id: String,
    pub class: SymClass,
    pub case: u8,
    /// Names of the free parameters of this row.
    pub arity: Vec<&'static str>,
    pub has_real_window: bool,
}

/// One fully instantiated catalog row.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub id: String,
    pub class: SymClass,
    pub case: u8,
    pub params: ParamSet,
    pub web: LinearWeb3,
    pub reduction: Reduction,
    /// A validated base point for profile extraction, with per-family
    /// parameter seeds; `None` for the rows with no real nondegenerate
    /// window (all three arcs on one transcendental curve).
    pub default_base: Option<((f64, f64), [f64; 3])>,
    /// Windows used when sampling web-equation solutions.
    pub sample_windows: [(f64, f64); 2],
}

/// Symmetry reduction of the web equation: invariant definitions and the
/// reduced surface f(z, w) = 0, with branch data when the row is algebraic.
#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    pub z_def: &'static str,
    pub w_def: &'static str,
    pub surface: &'static str,
    /// Printed branch polynomial in z_b (ascending coefficients), when given.
    pub branch: Option<Vec<Rational>>,
}

fn curve(kind: CurveKind, flow: ParamFlow, window: (f64, f64)) -> Family {
    Family::Curve { kind, flow, window }
}

fn pos() -> (f64, f64) {
    (0.0, INF)
}

fn all() -> (f64, f64) {
    (-INF, INF)
}

fn parabola(offset: f64) -> Family {
    curve(CurveKind::Parabola { offset }, ParamFlow::Translation, all())
}

fn hyperbola(c: f64) -> Family {
    curve(CurveKind::Hyperbola { c }, ParamFlow::Scaling(1.0), pos())
}

fn q_zero_scaled() -> Family {
    curve(CurveKind::QZero, ParamFlow::Scaling(1.0), pos())
}

fn log_curve(c: f64) -> Family {
    curve(CurveKind::LogCurve { c }, ParamFlow::Scaling(1.0), pos())
}

fn power_curve(c: f64, beta: f64) -> Family {
    curve(CurveKind::PowerCurve { c, beta }, ParamFlow::Scaling(1.0), pos())
}

/// Lists the 26 rows of the classification with their parameter arities.
pub fn list_forms() -> Vec<FormSpec> {
    let mut out = Vec::new();
    let mut push = |class: SymClass, case: u8, arity: Vec<&'static str>, real: bool| {
        out.push(FormSpec {
            id: format!("{}:{}", class.label(), case),
            class,
            case,
            arity,
            has_real_window: real,
        });
    };
    push(SymClass::Xi1, 1, vec!["lambda"], true);
    push(SymClass::Xi1, 2, vec![], true);
    push(SymClass::Xi1, 3, vec![], true);
    for (case, ar) in [(1u8, vec!["lambda", "mu"]), (2, vec!["lambda"]), (3, vec!["lambda"]), (4, vec![]), (5, vec!["lambda"]), (6, vec![])] {
        push(SymClass::Xi32, case, ar, true);
    }
    for case in 1u8..=8 {
        let ar = match case {
            1 => vec!["lambda", "mu"],
            2 | 4 | 6 => vec!["lambda"],
            _ => vec![],
        };
        push(SymClass::Xi23, case, ar, case != 3);
    }
    for case in 1u8..=9 {
        let mut ar = vec!["beta"];
        match case {
            1 => ar.extend(["lambda", "mu"]),
            2 | 4 | 7 => ar.push("lambda"),
            _ => {}
        }
        push(SymClass::Xi33, case, ar, case != 3);
    }
    out
}

/// Parses an id like `Xi32:4`.
pub fn parse_id(id: &str) -> Result<(SymClass, u8)> {
    let (cls, case) = id
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("bad form id {id}")))?;
    let class = match cls {
        "Xi1" => SymClass::Xi1,
        "Xi32" => SymClass::Xi32,
        "Xi23" => SymClass::Xi23,
        "Xi33" => SymClass::Xi33,
        _ => return Err(Error::InvalidInput(format!("unknown symmetry class {cls}"))),
    };
    let case: u8 = case
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad case number in {id}")))?;
    let max = match class {
        SymClass::Xi1 => 3,
        SymClass::Xi32 => 6,
        SymClass::Xi23 => 8,
        SymClass::Xi33 => 9,
    };
    if case == 0 || case > max {
        return Err(Error::InvalidInput(format!("no case {case} for {cls}")));
    }
    Ok((class, case))
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameters(msg.to_string()))
    }
}

fn not_in(v: &Rational, excluded: &[(i64, i64)], what: &str) -> Result<()> {
    for &(n, d) in excluded {
        if *v == q(n, d) {
            return Err(Error::InvalidParameters(format!("{what} = {v} excluded")));
        }
    }
    Ok(())
}

/// Instantiates a catalog row. Parameters not supplied fall back to the
/// defaults used throughout the test suite (lambda = 2, mu = 3, beta = 4,
/// except Xi23:2 where lambda = 1/2 keeps the real window reachable).
pub fn instantiate(id: &str, params: &ParamSet) -> Result<NormalForm> {
    let (class, case) = parse_id(id)?;
    let spec_arity: Vec<&str> = list_forms()
        .into_iter()
        .find(|s| s.class == class && s.case == case)
        .map(|s| s.arity)
        .unwrap();
    let mut p = params.clone();
    if spec_arity.contains(&"lambda") && p.lambda.is_none() {
        p.lambda = Some(if class == SymClass::Xi23 && case == 2 { q(1, 2) } else { q(2, 1) });
    }
    if spec_arity.contains(&"mu") && p.mu.is_none() {
        p.mu = Some(q(3, 1));
    }
    if spec_arity.contains(&"beta") && p.beta.is_none() {
        p.beta = Some(q(4, 1));
    }
    if !spec_arity.contains(&"lambda") {
        p.lambda = None;
    }
    if !spec_arity.contains(&"mu") {
        p.mu = None;
    }
    if !spec_arity.contains(&"beta") {
        p.beta = None;
    }

    // admissibility
    if let Some(l) = &p.lambda {
        not_in(l, &[(0, 1), (1, 1)], "lambda")?;
        if class == SymClass::Xi23 {
            // only lambda != 0 matters for the exponential rows
        }
    }
    if let Some(m) = &p.mu {
        not_in(m, &[(0, 1), (1, 1)], "mu")?;
        check(p.lambda.as_ref() != Some(m), "lambda = mu")?;
    }
    if let Some(b) = &p.beta {
        not_in(b, &[(0, 1), (1, 1), (-1, 1), (2, 1), (1, 2)], "beta")?;
        if case == 3 {
            not_in(b, &[(3, 1), (1, 3), (3, 2), (2, 3)], "beta (cubic values)")?;
        }
    }

    let lam = p.lam();
    let mu = p.mu();
    let beta = p.beta();
    let sym = |b: f64| Some(WebSymmetry::new(class, b));

    let (families, reduction, base, windows): (
        [Family; 3],
        Reduction,
        Option<((f64, f64), [f64; 3])>,
        [(f64, f64); 2],
    ) = match (class, case) {
        (SymClass::Xi1, 1) => (
            [parabola(0.0), parabola(1.0), parabola(lam)],
            Reduction {
                z_def: "p2 - p1",
                w_def: "p3 - p1",
                surface: "z w^2 - (z^2 + 2) w + 2 lambda z",
                branch: Some(vec![q(4, 1), Rational::zero(), q(4, 1) - q(8, 1) * p.lambda.clone().unwrap(), Rational::zero(), q(1, 1)]),
            },
            Some(((-3.0, -2.0), [0.764, 4.732, 2.0])),
            [(0.5, 1.5), (5.0, 8.0)],
        ),
        (SymClass::Xi1, 2) => (
            [parabola(0.0), parabola(0.0), parabola(1.0)],
            Reduction {
                z_def: "p2 - p1",
                w_def: "p3 - p1",
                surface: "w^2 - z w + 2",
                branch: Some(vec![q(-8, 1), Rational::zero(), q(1, 1)]),
            },
            Some(((-3.0, -3.0), [1.268, 4.732, 2.0])),
            [(0.5, 1.5), (4.5, 8.0)],
        ),
        (SymClass::Xi1, 3) => (
            [
                parabola(0.0),
                parabola(1.0),
                Family::Pencil { flow: ParamFlow::Translation, window: all() },
            ],
            Reduction {
                z_def: "p3 - p1",
                w_def: "p2 - p1",
                surface: "w^2 - 2 z w + 2",
                branch: Some(vec![q(-2, 1), Rational::zero(), q(1, 1)]),
            },
            Some(((-3.0, -3.0), [1.268, 2.0, 3.0])),
            [(0.5, 3.0), (3.6, 7.0)],
        ),
        (SymClass::Xi32, 1) => (
            [hyperbola(1.0), hyperbola(lam), hyperbola(mu)],
            Reduction {
                z_def: "p2 / p1",
                w_def: "p3 / p1",
                surface: "(z - lambda) w^2 + (lambda - z^2) w + mu z (z - 1)",
                branch: {
                    let (l, m) = (p.lambda.clone().unwrap(), p.mu.clone().unwrap());
                    // discriminant of the surface in w
                    Some(vec![
                        l.clone() * l.clone(),
                        -(q(4, 1) * m.clone() * l.clone()),
                        q(4, 1) * m.clone() + q(4, 1) * m.clone() * l.clone() - q(2, 1) * l.clone(),
                        -(q(4, 1) * m),
                        q(1, 1),
                    ])
                },
            },
            Some(((-3.0, -2.0), [1.0, 1.215, 1.387])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi32, 2) => (
            [hyperbola(1.0), hyperbola(1.0), hyperbola(lam)],
            Reduction {
                z_def: "p2 / p1",
                w_def: "p3 / p1",
                surface: "w^2 - (z + 1) w + lambda z",
                branch: Some(vec![q(1, 1), q(2, 1) - q(4, 1) * p.lambda.clone().unwrap(), q(1, 1)]),
            },
            Some(((0.5, 3.0), [0.354, 5.646, 0.764])),
            [(0.3, 1.2), (4.0, 9.0)],
        ),
        (SymClass::Xi32, 3) => (
            [hyperbola(1.0), hyperbola(lam), q_zero_scaled()],
            Reduction {
                z_def: "p3 / p1",
                w_def: "p2 / p1",
                surface: "w^2 - w z + lambda (z - 1)",
                branch: Some(vec![q(4, 1) * p.lambda.clone().unwrap(), -(q(4, 1) * p.lambda.clone().unwrap()), q(1, 1)]),
            },
            Some(((0.5, 3.0), [0.354, 5.236, 6.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi32, 4) => (
            [hyperbola(1.0), q_zero_scaled(), curve(CurveKind::PZeroRecip, ParamFlow::Scaling(1.0), pos())],
            Reduction {
                z_def: "p3 / p2",
                w_def: "p1 / p2",
                surface: "w^2 - w + z",
                branch: Some(vec![q(1, 1), q(-4, 1)]),
            },
            Some(((0.5, 2.0), [0.586, 4.0, 0.5])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi32, 5) => (
            [hyperbola(1.0), hyperbola(lam), Family::Pencil { flow: ParamFlow::Scaling(-2.0), window: pos() }],
            Reduction {
                z_def: "p3 p2^2",
                w_def: "p1 / p2",
                surface: "z w^2 + (lambda - z) w - 1",
                branch: Some(vec![
                    p.lambda.clone().unwrap().powi(2),
                    q(4, 1) - q(2, 1) * p.lambda.clone().unwrap(),
                    q(1, 1),
                ]),
            },
            Some(((-3.0, -0.5), [0.667, 0.904, 3.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi32, 6) => (
            [hyperbola(1.0), q_zero_scaled(), Family::Pencil { flow: ParamFlow::Scaling(-2.0), window: pos() }],
            Reduction {
                z_def: "p3 p2^2",
                w_def: "p1 / p2",
                surface: "z w^2 - z w - 1",
                branch: Some(vec![q(4, 1), q(1, 1)]),
            },
            Some(((-3.0, -1.0), [0.768, 0.333, 3.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi23, 1) => (
            [log_curve(0.0), log_curve(lam), log_curve(mu)],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i})",
                w_def: "t2 - t3",
                surface: "w e^w (1 - e^z) + z e^z (e^w - 1) + (lambda - mu) e^w + mu e^z - lambda e^{z+w}",
                branch: None,
            },
            Some(((-2.0, 0.5), [7.874, 1.422, 0.730])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi23, 2) => (
            [log_curve(0.0), log_curve(0.0), log_curve(lam)],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i})",
                w_def: "t2 - t3",
                surface: "w e^w (1 - e^z) + z e^z (e^w - 1) + lambda (e^z - e^w)",
                branch: None,
            },
            Some(((-3.0, -3.0), [16.80, 1.0, 1.375])),
            [(0.5, 1.5), (12.0, 45.0)],
        ),
        (SymClass::Xi23, 3) => (
            [log_curve(0.0), log_curve(0.0), log_curve(0.0)],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i})",
                w_def: "t2 - t3",
                surface: "w e^w (1 - e^z) + z e^z (e^w - 1)",
                branch: None,
            },
            None, // no real nondegenerate window: at most two real tangents
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi23, 4) => (
            [log_curve(0.0), log_curve(lam), curve(CurveKind::PZero, ParamFlow::Scaling(1.0), pos())],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i}, q_3 = e^{t_3})",
                w_def: "t2 - t3",
                surface: "e^w - e^z + (w - z + lambda) e^{z+w}",
                branch: None,
            },
            Some(((-2.0, 1.0), [8.331, 1.763, 1.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi23, 5) => (
            // the real window forces q < 0 on the third family; on that
            // branch (t3 = -e^{a}) the surface picks up a sign on (w - z)
            [log_curve(0.0), log_curve(0.0), curve(CurveKind::PZero, ParamFlow::Scaling(1.0), (-INF, 0.0))],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i}, q_3 = -e^{t_3})",
                w_def: "t2 - t3",
                surface: "e^w - e^z - (w - z) e^{z+w}",
                branch: None,
            },
            Some(((-3.0, -3.0), [16.80, 1.0, -3.0])),
            [(0.5, 1.5), (12.0, 45.0)],
        ),
        (SymClass::Xi23, 6) => (
            [log_curve(0.0), log_curve(lam), Family::Pencil { flow: ParamFlow::Translation, window: all() }],
            Reduction {
                z_def: "t1 - p3 (p_i = e^{t_i})",
                w_def: "t2 - p3",
                surface: "w e^w - z e^z + lambda e^w",
                branch: None,
            },
            Some(((-3.0, -0.5), [0.093, 2.156, 3.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi23, 7) => (
            [log_curve(0.0), log_curve(0.0), Family::Pencil { flow: ParamFlow::Translation, window: all() }],
            Reduction {
                z_def: "t1 - p3 (p_i = e^{t_i})",
                w_def: "t2 - p3",
                surface: "w e^w - z e^z",
                branch: None,
            },
            Some(((-3.0, -3.0), [16.80, 1.0, 3.0])),
            [(0.5, 1.5), (12.0, 45.0)],
        ),
        (SymClass::Xi23, 8) => (
            [log_curve(0.0), curve(CurveKind::PZero, ParamFlow::Scaling(1.0), pos()), Family::Pencil { flow: ParamFlow::Translation, window: all() }],
            Reduction {
                z_def: "t2 - p3 (p_1 = e^{t_1}, q_2 = e^{t_2})",
                w_def: "t1 - p3",
                surface: "w e^w - e^z",
                branch: None,
            },
            Some(((-2.0, 0.5), [7.874, 0.5, 2.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 1) => (
            [power_curve(1.0, beta), power_curve(lam, beta), power_curve(mu, beta)],
            Reduction {
                z_def: "t2 - t1 (p_i = e^{t_i})",
                w_def: "t3 - t1",
                surface: "mu e^{beta w} (e^z - 1) - lambda e^{beta z} (e^w - 1) + e^w - e^z",
                branch: None,
            },
            Some(((-3.0, -1.0), [0.338, 1.0, 0.348])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 2) => (
            [power_curve(1.0, beta), power_curve(1.0, beta), power_curve(lam, beta)],
            Reduction {
                z_def: "t2 - t1 (p_i = e^{t_i})",
                w_def: "t3 - t1",
                surface: "lambda e^{beta w} (e^z - 1) - e^{beta z} (e^w - 1) + e^w - e^z",
                branch: None,
            },
            Some(((-3.0, -1.0), [0.338, 1.307, 0.343])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 3) => (
            [power_curve(1.0, beta), power_curve(1.0, beta), power_curve(1.0, beta)],
            Reduction {
                z_def: "t2 - t1 (p_i = e^{t_i})",
                w_def: "t3 - t1",
                surface: "e^{beta w} (e^z - 1) - e^{beta z} (e^w - 1) + e^w - e^z",
                branch: None,
            },
            None, // no real nondegenerate window: the arc is strictly convex
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 4) => (
            [power_curve(1.0, beta), power_curve(lam, beta), q_zero_scaled()],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i})",
                w_def: "t2 - t3",
                surface: "lambda e^{beta w} (e^z - 1) - e^{beta z} (e^w - 1)",
                branch: None,
            },
            Some(((-3.0, -1.0), [0.338, 1.0, 0.333])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 5) => (
            [power_curve(1.0, beta), power_curve(1.0, beta), q_zero_scaled()],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i})",
                w_def: "t2 - t3",
                surface: "e^{beta w} (e^z - 1) - e^{beta z} (e^w - 1)",
                branch: None,
            },
            Some(((-3.0, -2.0), [0.811, 1.0, 0.667])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 6) => (
            [power_curve(1.0, beta), q_zero_scaled(), curve(CurveKind::PZero, ParamFlow::Scaling(beta), pos())],
            Reduction {
                z_def: "t2 - t3 (p_i = e^{t_i}, q_3 = e^{beta t_3})",
                w_def: "t1 - t3",
                surface: "e^z (e^{beta w} - 1) + e^w",
                branch: None,
            },
            Some(((0.5, 0.5), [0.648, 1.0, 0.5])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 7) => (
            [power_curve(1.0, beta), power_curve(lam, beta), Family::Pencil { flow: ParamFlow::Scaling(beta - 1.0), window: pos() }],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i}, p_3 = e^{(beta-1) t_3})",
                w_def: "t2 - t3",
                surface: "lambda e^{beta w} - e^w + e^z - e^{beta z}",
                branch: None,
            },
            Some(((-3.0, -1.0), [0.338, 1.0, 3.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 8) => (
            [power_curve(1.0, beta), power_curve(1.0, beta), Family::Pencil { flow: ParamFlow::Scaling(beta - 1.0), window: pos() }],
            Reduction {
                z_def: "t1 - t3 (p_i = e^{t_i}, p_3 = e^{(beta-1) t_3})",
                w_def: "t2 - t3",
                surface: "e^{beta w} - e^w + e^z - e^{beta z}",
                branch: None,
            },
            Some(((-3.0, -2.0), [0.811, 1.0, 3.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        (SymClass::Xi33, 9) => (
            [power_curve(1.0, beta), q_zero_scaled(), Family::Pencil { flow: ParamFlow::Scaling(beta - 1.0), window: pos() }],
            Reduction {
                z_def: "t1 - t2 (p_i = e^{t_i}, p_3 = e^{(beta-1) t_3})",
                w_def: "t3 - t2",
                surface: "e^{(beta-1) w} (1 - e^z) + e^{beta z}",
                branch: None,
            },
            Some(((-3.0, -2.0), [1.0, 0.667, 3.0])),
            [(0.5, 3.0), (0.5, 7.0)],
        ),
        _ => unreachable!(),
    };

    Ok(NormalForm {
        id: format!("{}:{}", class.label(), case),
        class,
        case,
        params: p,
        web: LinearWeb3 {
            families,
            symmetry: sym(beta),
        },
        reduction,
        default_base: base,
        sample_windows: windows,
    })
}

impl NormalForm {
    /// Normalized (additive) parameter of family `i` at raw parameter `t`,
    /// i.e. the coordinate in which the symmetry acts by translation.
    fn normalized(&self, i: usize, t: f64) -> Result<f64> {
        match self.web.families[i].flow() {
            ParamFlow::Translation => Ok(t),
            ParamFlow::Scaling(k) => {
                if t == 0.0 {
                    return Err(Error::DomainError("log of zero parameter".into()));
                }
                Ok(t.abs().ln() / k)
            }
        }
    }

    /// The row's reduction invariants (z, w) of a raw parameter triple.
    pub fn reduction_invariants(&self, t: [f64; 3]) -> Result<(f64, f64)> {
        // multiplicative rows use ratios directly; exponential rows use
        // differences of normalized parameters
        match (self.class, self.case) {
            (SymClass::Xi1, 1) | (SymClass::Xi1, 2) => Ok((t[1] - t[0], t[2] - t[0])),
            (SymClass::Xi1, 3) => Ok((t[2] - t[0], t[1] - t[0])),
            (SymClass::Xi32, 1) | (SymClass::Xi32, 2) => Ok((t[1] / t[0], t[2] / t[0])),
            (SymClass::Xi32, 3) => Ok((t[2] / t[0], t[1] / t[0])),
            (SymClass::Xi32, 4) => Ok((t[2] / t[1], t[0] / t[1])),
            (SymClass::Xi32, 5) | (SymClass::Xi32, 6) => Ok((t[2] * t[1] * t[1], t[0] / t[1])),
            (SymClass::Xi23, 1..=5) => {
                let a = [self.normalized(0, t[0])?, self.normalized(1, t[1])?, self.normalized(2, t[2])?];
                Ok((a[0] - a[2], a[1] - a[2]))
            }
            (SymClass::Xi23, 6) | (SymClass::Xi23, 7) => {
                Ok((self.normalized(0, t[0])? - t[2], self.normalized(1, t[1])? - t[2]))
            }
            (SymClass::Xi23, 8) => {
                Ok((self.normalized(1, t[1])? - t[2], self.normalized(0, t[0])? - t[2]))
            }
            (SymClass::Xi33, 1..=3) => {
                let a = [self.normalized(0, t[0])?, self.normalized(1, t[1])?, self.normalized(2, t[2])?];
                Ok((a[1] - a[0], a[2] - a[0]))
            }
            (SymClass::Xi33, 4..=8) => {
                let a = [self.normalized(0, t[0])?, self.normalized(1, t[1])?, self.normalized(2, t[2])?];
                Ok((a[0] - a[2], a[1] - a[2]))
            }
            (SymClass::Xi33, 9) => {
                let a = [self.normalized(0, t[0])?, self.normalized(1, t[1])?, self.normalized(2, t[2])?];
                Ok((a[0] - a[1], a[2] - a[1]))
            }
            _ => unreachable!(),
        }
    }

    /// Evaluates the reduced surface f(z, w); the second component is the
    /// magnitude scale (sum of absolute term values) for relative tests.
    pub fn reduction_residual_scaled(&self, z: f64, w: f64) -> Result<(f64, f64)> {
        let l = self.params.lam();
        let m = self.params.mu();
        let b = self.params.beta();
        let terms: Vec<f64> = match (self.class, self.case) {
            (SymClass::Xi1, 1) => vec![z * w * w, -(z * z + 2.0) * w, 2.0 * l * z],
            (SymClass::Xi1, 2) => vec![w * w, -z * w, 2.0],
            (SymClass::Xi1, 3) => vec![w * w, -2.0 * z * w, 2.0],
            (SymClass::Xi32, 1) => vec![(z - l) * w * w, (l - z * z) * w, m * z * (z - 1.0)],
            (SymClass::Xi32, 2) => vec![w * w, -(z + 1.0) * w, l * z],
            (SymClass::Xi32, 3) => vec![w * w, -w * z, l * (z - 1.0)],
            (SymClass::Xi32, 4) => vec![w * w, -w, z],
            (SymClass::Xi32, 5) => vec![z * w * w, (l - z) * w, -1.0],
            (SymClass::Xi32, 6) => vec![z * w * w, -z * w, -1.0],
            (SymClass::Xi23, 1) => vec![
                w * w.exp() * (1.0 - z.exp()),
                z * z.exp() * (w.exp() - 1.0),
                (l - m) * w.exp(),
                m * z.exp(),
                -l * (z + w).exp(),
            ],
            (SymClass::Xi23, 2) => vec![
                w * w.exp() * (1.0 - z.exp()),
                z * z.exp() * (w.exp() - 1.0),
                l * (z.exp() - w.exp()),
            ],
            (SymClass::Xi23, 3) => vec![
                w * w.exp() * (1.0 - z.exp()),
                z * z.exp() * (w.exp() - 1.0),
            ],
            (SymClass::Xi23, 4) => vec![w.exp(), -z.exp(), (w - z + l) * (z + w).exp()],
            (SymClass::Xi23, 5) => vec![w.exp(), -z.exp(), -(w - z) * (z + w).exp()],
            (SymClass::Xi23, 6) => vec![w * w.exp(), -z * z.exp(), l * w.exp()],
            (SymClass::Xi23, 7) => vec![w * w.exp(), -z * z.exp()],
            (SymClass::Xi23, 8) => vec![w * w.exp(), -z.exp()],
            (SymClass::Xi33, 1) => vec![
                m * (b * w).exp() * (z.exp() - 1.0),
                -l * (b * z).exp() * (w.exp() - 1.0),
                w.exp(),
                -z.exp(),
            ],
            (SymClass::Xi33, 2) => vec![
                l * (b * w).exp() * (z.exp() - 1.0),
                -(b * z).exp() * (w.exp() - 1.0),
                w.exp(),
                -z.exp(),
            ],
            (SymClass::Xi33, 3) => vec![
                (b * w).exp() * (z.exp() - 1.0),
                -(b * z).exp() * (w.exp() - 1.0),
                w.exp(),
                -z.exp(),
            ],
            (SymClass::Xi33, 4) => vec![
                l * (b * w).exp() * (z.exp() - 1.0),
                -(b * z).exp() * (w.exp() - 1.0),
            ],
            (SymClass::Xi33, 5) => vec![
                (b * w).exp() * (z.exp() - 1.0),
                -(b * z).exp() * (w.exp() - 1.0),
            ],
            (SymClass::Xi33, 6) => vec![z.exp() * ((b * w).exp() - 1.0), w.exp()],
            (SymClass::Xi33, 7) => vec![l * (b * w).exp(), -w.exp(), z.exp(), -(b * z).exp()],
            (SymClass::Xi33, 8) => vec![(b * w).exp(), -w.exp(), z.exp(), -(b * z).exp()],
            (SymClass::Xi33, 9) => vec![((b - 1.0) * w).exp() * (1.0 - z.exp()), (b * z).exp()],
            _ => unreachable!(),
        };
        let value: f64 = terms.iter().sum();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>().max(1e-30);
        if !value.is_finite() {
            return Err(Error::DomainError("surface evaluation overflowed".into()));
        }
        Ok((value, scale))
    }

    /// Evaluates the reduced surface f(z, w).
    pub fn reduction_residual(&self, z: f64, w: f64) -> Result<f64> {
        Ok(self.reduction_residual_scaled(z, w)?.0)
    }

    /// The printed branch polynomial in `z_b`, for the algebraic rows.
    pub fn branch_polynomial(&self) -> Result<MultiPoly> {
        let coeffs = self.reduction.branch.as_ref().ok_or(Error::NotProvided)?;
        let ring = PolyRing::new(&["z_b"]);
        let z = ring.var("z_b");
        let mut acc = ring.zero();
        let mut pw = ring.int(1);
        for c in coeffs {
            acc = &acc + &pw.scale(c);
            pw = &pw * &z;
        }
        Ok(acc)
    }

    /// The reduced surface as an exact polynomial in (z, w), for the
    /// algebraic rows (symmetry classes with rational focal curves).
    pub fn surface_polynomial(&self) -> Result<MultiPoly> {
        let ring = PolyRing::new(&["z_b", "w"]);
        let z = ring.var("z_b");
        let w = ring.var("w");
        let one = ring.int(1);
        let l = self.params.lambda.clone().unwrap_or_else(Rational::zero);
        let m = self.params.mu.clone().unwrap_or_else(Rational::zero);
        let lam = ring.constant(l);
        let mu = ring.constant(m);
        let w2 = &w * &w;
        Ok(match (self.class, self.case) {
            (SymClass::Xi1, 1) => {
                &(&(&z * &w2) - &(&(&(&z * &z) + &ring.int(2)) * &w)) + &(&(&lam * &z).scale(&q(2, 1)))
            }
            (SymClass::Xi1, 2) => &(&w2 - &(&z * &w)) + &ring.int(2),
            (SymClass::Xi1, 3) => &(&w2 - &(&z * &w).scale(&q(2, 1))) + &ring.int(2),
            (SymClass::Xi32, 1) => {
                let t1 = &(&z - &lam) * &w2;
                let t2 = &(&lam - &(&z * &z)) * &w;
                let t3 = &(&mu * &z) * &(&z - &one);
                &(&t1 + &t2) + &t3
            }
            (SymClass::Xi32, 2) => &(&w2 - &(&(&z + &one) * &w)) + &(&lam * &z),
            (SymClass::Xi32, 3) => &(&w2 - &(&w * &z)) + &(&lam * &(&z - &one)),
            (SymClass::Xi32, 4) => &(&w2 - &w) + &z,
            (SymClass::Xi32, 5) => &(&(&z * &w2) + &(&(&lam - &z) * &w)) - &one,
            (SymClass::Xi32, 6) => &(&(&z * &w2) - &(&z * &w)) - &one,
            _ => return Err(Error::NotProvided),
        })
    }

    /// Draws a random web-equation solution: two parameters in the sampling
    /// windows, the third by incidence through their intersection point.
    /// The rows without a real window return a degenerate diagonal solution.
    pub fn sample_web_solution<R: Rng>(&self, rng: &mut R) -> Option<[f64; 3]> {
        let (w1, w2) = (self.sample_windows[0], self.sample_windows[1]);
        for _ in 0..400 {
            let t1 = rng.random_range(w1.0..w1.1);
            let t2 = rng.random_range(w2.0..w2.1);
            if (t1 - t2).abs() < 0.05 {
                continue;
            }
            if self.default_base.is_none() {
                // degenerate-component sample: two coincident lines
                return Some([t1, t2, t1]);
            }
            let l1 = self.web.families[0].dual_point(t1).ok()?;
            let l2 = self.web.families[1].dual_point(t2).ok()?;
            let pt = match super::intersect_dual(&l1, &l2) {
                Some(p) => p,
                None => continue,
            };
            if !pt.0.is_finite() || !pt.1.is_finite() {
                continue;
            }
            let roots = self.web.families[2].incidences(pt.0, pt.1);
            if let Some(&t3) = roots.first() {
                if self.web.web_equation_residual([t1, t2, t3]).map(f64::abs).unwrap_or(1.0) < 1e-7 {
                    return Some([t1, t2, t3]);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_six_rows() {
        let forms = list_forms();
        assert_eq!(forms.len(), 26);
        assert_eq!(forms.iter().filter(|f| f.class == SymClass::Xi1).count(), 3);
        assert_eq!(forms.iter().filter(|f| f.class == SymClass::Xi32).count(), 6);
        assert_eq!(forms.iter().filter(|f| f.class == SymClass::Xi23).count(), 8);
        assert_eq!(forms.iter().filter(|f| f.class == SymClass::Xi33).count(), 9);
        // arities
        let get = |id: &str| forms.iter().find(|f| f.id == id).unwrap().arity.clone();
        assert_eq!(get("Xi1:1"), vec!["lambda"]);
        assert!(get("Xi1:2").is_empty() && get("Xi1:3").is_empty());
        assert_eq!(get("Xi33:1"), vec!["beta", "lambda", "mu"]);
        for case in 1..=9 {
            assert!(get(&format!("Xi33:{case}")).contains(&"beta"));
        }
    }

    #[test]
    fn admissibility() {
        let mut p = ParamSet::none();
        p.lambda = Some(Rational::from_i64(1));
        assert!(matches!(
            instantiate("Xi1:1", &p),
            Err(Error::InvalidParameters(_))
        ));
        p.lambda = Some(Rational::from_i64(0));
        assert!(instantiate("Xi1:1", &p).is_err());
        let mut p = ParamSet::none();
        p.beta = Some(Rational::new(3, 1));
        assert!(instantiate("Xi33:3", &p).is_err());
        assert!(instantiate("Xi33:5", &p).is_ok());
        assert!(instantiate("Xi99:1", &ParamSet::none()).is_err());
    }

    #[test]
    fn xi1_case3_families() {
        let f = instantiate("Xi1:3", &ParamSet::none()).unwrap();
        // y = p1 x + p1^2/2 ; y = p2 x + p2^2/2 + 1 ; x + p3 = 0
        let d = f.web.families[0].dual_point(2.0).unwrap();
        assert_eq!(d, [2.0, 2.0, 1.0]);
        let d = f.web.families[1].dual_point(1.0).unwrap();
        assert_eq!(d, [1.0, 1.5, 1.0]);
        assert!(f.web.families[2].is_pencil());
    }

    #[test]
    fn xi32_case4_families() {
        let f = instantiate("Xi32:4", &ParamSet::none()).unwrap();
        assert_eq!(f.web.families[0].dual_point(2.0).unwrap(), [2.0, 0.5, 1.0]);
        assert_eq!(f.web.families[1].dual_point(3.0).unwrap(), [3.0, 0.0, 1.0]);
        assert_eq!(f.web.families[2].dual_point(4.0).unwrap(), [0.0, 0.25, 1.0]);
    }

    #[test]
    fn web_equation_and_solve_third() {
        // lines y = 0, y = x + 3/2, x = -3/2 meet at (-3/2, 0)
        let f = instantiate("Xi1:3", &ParamSet::none()).unwrap();
        let r = f.web.web_equation_residual([0.0, 1.0, 1.5]).unwrap();
        assert!(r.abs() < 1e-14);
        // fixing p1 = 0, p3 = 3/2: solutions p2 in {1, 2}
        let sol = f.web.solve_third(1, [(0, 0.0), (2, 1.5)]).unwrap();
        assert_eq!(sol.len(), 2);
        assert!((sol[0] - 1.0).abs() < 1e-9 && (sol[1] - 2.0).abs() < 1e-9);
        // fixing p1 = 0, p2 = 1: p3 = 3/2 (linear)
        let sol = f.web.solve_third(2, [(0, 0.0), (1, 1.0)]).unwrap();
        assert_eq!(sol.len(), 1);
        assert!((sol[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn parallel_fixed_lines_rejected() {
        let f = instantiate("Xi1:2", &ParamSet::none()).unwrap();
        // families 1,2 are the same parabola: equal parameters give parallel
        // (coincident) lines
        assert!(matches!(
            f.web.solve_third(2, [(0, 1.0), (1, 1.0)]),
            Err(Error::NoIntersection)
        ));
    }

    #[test]
    fn reduction_examples() {
        let f = instantiate("Xi1:3", &ParamSet::none()).unwrap();
        assert!(f.reduction_residual(1.5, 1.0).unwrap().abs() < 1e-15);
        let f = instantiate("Xi32:4", &ParamSet::none()).unwrap();
        assert!(f.reduction_residual(-2.0, 2.0).unwrap().abs() < 1e-15);
        let f = instantiate("Xi23:7", &ParamSet::none()).unwrap();
        for c in [0.3, 1.0, -0.7] {
            assert!(f.reduction_residual(c, c).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn branch_polynomials() {
        let f = instantiate("Xi1:3", &ParamSet::none()).unwrap();
        let b = f.branch_polynomial().unwrap();
        assert_eq!(b.to_string(), "1*z_b^2 + -2");
        let f = instantiate("Xi32:4", &ParamSet::none()).unwrap();
        let b = f.branch_polynomial().unwrap();
        assert_eq!(b.to_string(), "-4*z_b + 1");
        let f = instantiate("Xi23:1", &ParamSet::none()).unwrap();
        assert!(matches!(f.branch_polynomial(), Err(Error::NotProvided)));
    }

    #[test]
    fn slopes_at_examples() {
        let f = instantiate("Xi1:3", &ParamSet::none()).unwrap();
        // family 1 at (-3/2, 0): p^2/2 - (3/2)p = 0 -> p in {0, 3}
        let sol = f.web.slopes_at((-1.5, 0.0)).unwrap();
        let fam1: Vec<f64> = sol.iter().filter(|s| s.0 == 0).map(|s| s.1).collect();
        assert_eq!(fam1.len(), 2);
        assert!(fam1[0].abs() < 1e-9 && (fam1[1] - 3.0).abs() < 1e-9);
        let fam3: Vec<_> = sol.iter().filter(|s| s.0 == 2).collect();
        assert_eq!(fam3.len(), 1);
        assert!((fam3[0].1 - 1.5).abs() < 1e-12 && fam3[0].2.is_none());
    }
}
