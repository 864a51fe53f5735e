//! The classification catalog: normal forms of non-flat symmetric linear
//! 3-webs, their dual focal curves, web equations, symmetry reductions with
//! branch-point data, and flatness tests.

mod flatness;
mod forms;

pub use flatness::{
    flat_config_web, graf_sauer_test, hexagonality_closure, symmetry_characterization,
    DirectionField, FlatConfig, Foliation, GrafSauerReport, HexReport,
};
pub use forms::{instantiate, list_forms, parse_id, FormSpec, NormalForm, ParamSet, Reduction};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polycore::{newton_f64, Jet1, Scalar};

/// Flow of the symmetry on a family's raw parameter: `dt/ds = c(t)` with
/// `c = 1` (translation) or `c = kappa * t` (scaling).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ParamFlow {
    Translation,
    Scaling(f64),
}

impl ParamFlow {
    /// Raw parameter as a jet of the normalized (additive) parameter `a`,
    /// anchored so that `a = 0` maps to `t0`.
    pub fn gamma_jet(&self, t0: f64, a: &Jet1<f64>) -> Result<Jet1<f64>> {
        match self {
            ParamFlow::Translation => Ok(a.add_scalar(&t0)),
            ParamFlow::Scaling(k) => {
                if t0 == 0.0 {
                    return Err(Error::StationaryOrbit);
                }
                Ok(a.scale(k).exp()?.scale(&t0))
            }
        }
    }

    /// Flow speed `c(t)` at a raw parameter value.
    pub fn speed(&self, t: f64) -> f64 {
        match self {
            ParamFlow::Translation => 1.0,
            ParamFlow::Scaling(k) => k * t,
        }
    }
}

/// Shape of a dual focal curve `(p(t), q(t))`, the lines being `y = px + q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CurveKind {
    /// `(t, t^2/2 + c)`
    Parabola { offset: f64 },
    /// `(t, c/t)`
    Hyperbola { c: f64 },
    /// `(t, 0)` — the line `q = 0` (pencil through the origin)
    QZero,
    /// `(0, 1/t)` — the line `p = 0` parametrized reciprocally
    PZeroRecip,
    /// `(0, t)` — the line `p = 0` parametrized by `q`
    PZero,
    /// `(t, t (ln t + c))`
    LogCurve { c: f64 },
    /// `(t, c t^beta)`
    PowerCurve { c: f64, beta: f64 },
    /// `(t^3, t)` — the cuspidal cubic `p = q^3`
    CuspCubic,
    /// `(p0, t)` — the dual line `p = p0` (a family of parallel lines)
    DualLine { p0: f64 },
}

impl CurveKind {
    pub fn pq_jets(&self, t: &Jet1<f64>) -> Result<(Jet1<f64>, Jet1<f64>)> {
        let one_t = |v: f64| Jet1::constant(v, t.order(), *t.base());
        Ok(match *self {
            CurveKind::Parabola { offset } => {
                (t.clone(), t.mul(t).scale(&0.5).add_scalar(&offset))
            }
            CurveKind::Hyperbola { c } => (t.clone(), t.recip()?.scale(&c)),
            CurveKind::QZero => (t.clone(), one_t(0.0)),
            CurveKind::PZeroRecip => (one_t(0.0), t.recip()?),
            CurveKind::PZero => (one_t(0.0), t.clone()),
            CurveKind::LogCurve { c } => {
                let l = t.ln()?;
                (t.clone(), t.mul(&l.add_scalar(&c)))
            }
            CurveKind::PowerCurve { c, beta } => (t.clone(), t.pow(&beta)?.scale(&c)),
            CurveKind::CuspCubic => (t.powi(3), t.clone()),
            CurveKind::DualLine { p0 } => (one_t(p0), t.clone()),
        })
    }
}

/// One family of a linear 3-web: a parametrized dual focal curve or the
/// pencil of vertical lines `x = -t` (dual points on the line at infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Family {
    Curve {
        kind: CurveKind,
        flow: ParamFlow,
        window: (f64, f64),
    },
    Pencil {
        flow: ParamFlow,
        window: (f64, f64),
    },
}

impl Family {
    pub fn window(&self) -> (f64, f64) {
        match self {
            Family::Curve { window, .. } | Family::Pencil { window, .. } => *window,
        }
    }

    pub fn flow(&self) -> ParamFlow {
        match self {
            Family::Curve { flow, .. } | Family::Pencil { flow, .. } => *flow,
        }
    }

    pub fn is_pencil(&self) -> bool {
        matches!(self, Family::Pencil { .. })
    }

    pub fn in_window(&self, t: f64) -> bool {
        let (a, b) = self.window();
        t > a && t < b
    }

    /// Homogeneous dual coordinates (P, Q, R) of the line with parameter `t`.
    pub fn dual_point(&self, t: f64) -> Result<[f64; 3]> {
        match self {
            Family::Pencil { .. } => Ok([1.0, t, 0.0]),
            Family::Curve { kind, .. } => {
                let tj = Jet1::constant(t, 0, t);
                let (p, q) = kind.pq_jets(&tj)?;
                Ok([*p.value(), *q.value(), 1.0])
            }
        }
    }

    /// Slope of the line with parameter `t`; `None` for vertical lines.
    pub fn slope(&self, t: f64) -> Result<Option<f64>> {
        match self {
            Family::Pencil { .. } => Ok(None),
            Family::Curve { kind, .. } => {
                let tj = Jet1::constant(t, 0, t);
                let (p, _) = kind.pq_jets(&tj)?;
                Ok(Some(*p.value()))
            }
        }
    }

    /// Unit direction of the line with parameter `t`.
    pub fn direction(&self, t: f64) -> Result<(f64, f64)> {
        match self.slope(t)? {
            None => Ok((0.0, 1.0)),
            Some(p) => {
                let n = (1.0 + p * p).sqrt();
                Ok((1.0 / n, p / n))
            }
        }
    }

    /// Signed incidence residual of the line `t` against the point `(x, y)`.
    pub fn incidence_jet(&self, t: &Jet1<f64>, x: f64, y: f64) -> Result<Jet1<f64>> {
        match self {
            Family::Pencil { .. } => Ok(t.add_scalar(&x)), // x + t = 0
            Family::Curve { kind, .. } => {
                let (p, q) = kind.pq_jets(t)?;
                Ok(p.scale(&x).add(&q).add_scalar(&-y))
            }
        }
    }

    /// Solves for the parameter of a line of this family through `(x, y)`
    /// near `seed`. Scale-flow families are solved in log space so the sign
    /// of the seed selects the branch.
    pub fn solve_incidence(&self, x: f64, y: f64, seed: f64) -> Result<f64> {
        if let Family::Pencil { .. } = self {
            let t = -x;
            return if self.in_window(t) {
                Ok(t)
            } else {
                Err(Error::EmptyFamily)
            };
        }
        let t = match self.flow() {
            ParamFlow::Translation => {
                newton_f64(|tj| self.incidence_jet(tj, x, y), seed, 1e-14, 80)?
            }
            ParamFlow::Scaling(_) => {
                if seed == 0.0 {
                    return Err(Error::InvalidInput("zero seed for scale flow".into()));
                }
                let sgn = seed.signum();
                let s = newton_f64(
                    |sj| self.incidence_jet(&sj.exp()?.scale(&sgn), x, y),
                    seed.abs().ln(),
                    1e-14,
                    80,
                )?;
                if s.abs() > 50.0 {
                    return Err(Error::EmptyFamily);
                }
                sgn * s.exp()
            }
        };
        if self.in_window(t) {
            Ok(t)
        } else {
            Err(Error::EmptyFamily)
        }
    }

    /// All incidence solutions in the window found from a seed sweep.
    pub fn incidences(&self, x: f64, y: f64) -> Vec<f64> {
        if self.is_pencil() {
            return if self.in_window(-x) { vec![-x] } else { vec![] };
        }
        let (a, b) = self.window();
        let mut roots: Vec<f64> = Vec::new();
        let lo = if a.is_finite() { a.max(-60.0) } else { -60.0 };
        let hi = if b.is_finite() { b.min(60.0) } else { 60.0 };
        let n = 48;
        for i in 0..=n {
            let seed = lo + (hi - lo) * i as f64 / n as f64;
            if seed == 0.0 {
                continue;
            }
            if let Ok(t) = self.solve_incidence(x, y, seed) {
                if roots.iter().all(|r| (r - t).abs() > 1e-7 * (1.0 + t.abs())) {
                    roots.push(t);
                }
            }
        }
        roots.sort_by(|p, q| p.partial_cmp(q).unwrap());
        roots
    }
}

/// An infinitesimal projective symmetry: the traceless matrix together with
/// its dual-plane and geometric-coordinates vector fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WebSymmetry {
    pub matrix: [[f64; 3]; 3],
    pub class: SymClass,
    pub beta: f64,
}

/// The four symmetry classes of the classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SymClass {
    Xi1,
    Xi32,
    Xi23,
    Xi33,
}

impl SymClass {
    pub fn label(&self) -> &'static str {
        match self {
            SymClass::Xi1 => "Xi1",
            SymClass::Xi32 => "Xi32",
            SymClass::Xi23 => "Xi23",
            SymClass::Xi33 => "Xi33",
        }
    }
}

impl WebSymmetry {
    pub fn new(class: SymClass, beta: f64) -> Self {
        let matrix = match class {
            // chosen so that the Eq-13 operator is the catalog representative
            SymClass::Xi1 => [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            SymClass::Xi32 => [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]],
            SymClass::Xi23 => {
                let t = 1.0 / 3.0;
                [[t, 0.0, 0.0], [1.0, t, 0.0], [0.0, 0.0, t - 1.0]]
            }
            SymClass::Xi33 => {
                let a = (2.0 - beta) / 3.0;
                let b = (2.0 * beta - 1.0) / 3.0;
                [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, -(a + b)]]
            }
        };
        WebSymmetry { matrix, class, beta }
    }

    /// Dual-plane vector field (d/dp, d/dq) at (p, q).
    pub fn dual_field(&self, p: f64, q: f64) -> (f64, f64) {
        operator_from_matrix(&self.matrix, p, q)
    }

    /// Geometric vector field (d/dx, d/dy) at (x, y).
    pub fn geometric_field(&self, x: f64, y: f64) -> (f64, f64) {
        match self.class {
            SymClass::Xi1 => (-1.0, x),
            SymClass::Xi32 => (-2.0 * x, -y),
            SymClass::Xi23 => (-1.0, y),
            SymClass::Xi33 => ((self.beta - 1.0) * x, self.beta * y),
        }
    }
}

/// Dual-plane operator of a 3x3 traceless matrix acting on homogeneous line
/// coordinates `(P, Q, R)` of `R Y = P X + Q Z`, in affine coordinates
/// `(p, q) = (P/R, Q/R)`.
pub fn operator_from_matrix(m: &[[f64; 3]; 3], p: f64, q: f64) -> (f64, f64) {
    let dp = (m[0][0] - m[2][2]) * p + m[0][1] * q + m[0][2] - m[2][0] * p * p - m[2][1] * p * q;
    let dq = m[1][0] * p + (m[1][1] - m[2][2]) * q + m[1][2] - m[2][0] * p * q - m[2][1] * q * q;
    (dp, dq)
}

/// A linear 3-web given by three families of lines, optionally carrying its
/// infinitesimal symmetry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearWeb3 {
    pub families: [Family; 3],
    pub symmetry: Option<WebSymmetry>,
}

impl LinearWeb3 {
    /// Web-equation residual: the 3x3 determinant of the homogeneous rows
    /// `(R, P, Q)`; zero exactly when the three lines are concurrent.
    pub fn web_equation_residual(&self, t: [f64; 3]) -> Result<f64> {
        let jets = [
            Jet1::constant(t[0], 0, t[0]),
            Jet1::constant(t[1], 0, t[1]),
            Jet1::constant(t[2], 0, t[2]),
        ];
        Ok(*self.web_det_jets(&jets)?.value())
    }

    /// Jet-valued web-equation determinant; rows are `(1, p, q)` for affine
    /// families and `(0, 1, t)` for the vertical pencil.
    pub fn web_det_jets(&self, t: &[Jet1<f64>; 3]) -> Result<Jet1<f64>> {
        let order = t.iter().map(|j| j.order()).min().unwrap();
        let row = |fam: &Family, tj: &Jet1<f64>| -> Result<[Jet1<f64>; 3]> {
            let c = |v: f64| Jet1::constant(v, order, *tj.base());
            match fam {
                Family::Pencil { .. } => Ok([c(0.0), c(1.0), tj.truncate(order)]),
                Family::Curve { kind, .. } => {
                    let (p, q) = kind.pq_jets(&tj.truncate(order))?;
                    Ok([c(1.0), p, q])
                }
            }
        };
        let r0 = row(&self.families[0], &t[0])?;
        let r1 = row(&self.families[1], &t[1])?;
        let r2 = row(&self.families[2], &t[2])?;
        let det2 = |a: &Jet1<f64>, b: &Jet1<f64>, c: &Jet1<f64>, d: &Jet1<f64>| {
            a.mul(d).sub(&b.mul(c))
        };
        let m0 = det2(&r1[1], &r1[2], &r2[1], &r2[2]);
        let m1 = det2(&r1[0], &r1[2], &r2[0], &r2[2]);
        let m2 = det2(&r1[0], &r1[1], &r2[0], &r2[1]);
        Ok(r0[0].mul(&m0).sub(&r0[1].mul(&m1)).add(&r0[2].mul(&m2)))
    }

    /// All `(family, t, slope)` solutions incident with a point; slope `None`
    /// means a vertical line.
    pub fn slopes_at(&self, point: (f64, f64)) -> Result<Vec<(usize, f64, Option<f64>)>> {
        let mut out = Vec::new();
        for (i, fam) in self.families.iter().enumerate() {
            let roots = fam.incidences(point.0, point.1);
            if roots.is_empty() {
                return Err(Error::EmptyFamily);
            }
            for t in roots {
                out.push((i, t, fam.slope(t)?));
            }
        }
        Ok(out)
    }

    /// Solutions `t_k` of the web equation with the other two parameters
    /// fixed: the lines of family `k` through the intersection point of the
    /// two fixed lines.
    pub fn solve_third(&self, k: usize, fixed: [(usize, f64); 2]) -> Result<Vec<f64>> {
        let line = |i: usize, t: f64| self.families[i].dual_point(t);
        let l1 = line(fixed[0].0, fixed[0].1)?;
        let l2 = line(fixed[1].0, fixed[1].1)?;
        // intersection of y = p1 x + q1 (R=1) rows, with pencil rows vertical
        let pt = intersect_dual(&l1, &l2).ok_or(Error::NoIntersection)?;
        let roots = self.families[k].incidences(pt.0, pt.1);
        if roots.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(roots)
    }
}

/// Intersection point of two lines given in homogeneous dual coordinates.
pub(crate) fn intersect_dual(l1: &[f64; 3], l2: &[f64; 3]) -> Option<(f64, f64)> {
    // line: R y = P x + Q, affine rows have R = 1, pencil rows R = 0 (x = -Q/P)
    match (l1[2] == 0.0, l2[2] == 0.0) {
        (true, true) => None,
        (true, false) => {
            let x = -l1[1] / l1[0];
            Some((x, l2[0] * x + l2[1]))
        }
        (false, true) => {
            let x = -l2[1] / l2[0];
            Some((x, l1[0] * x + l1[1]))
        }
        (false, false) => {
            if (l1[0] - l2[0]).abs() < 1e-12 {
                return None;
            }
            let x = (l2[1] - l1[1]) / (l1[0] - l2[0]);
            Some((x, l1[0] * x + l1[1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_from_matrix_examples() {
        // the printed Jordan representative of the one-block class: q dp + dq
        let xi1 = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        let (p, q) = (0.7, -1.3);
        assert_eq!(operator_from_matrix(&xi1, p, q), (q, 1.0));
        // diag(1, -1, 0): p dp - q dq
        let xi32 = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(operator_from_matrix(&xi32, p, q), (p, -q));
        // zero matrix: zero field
        let z = [[0.0; 3]; 3];
        assert_eq!(operator_from_matrix(&z, p, q), (0.0, 0.0));
    }

    #[test]
    fn adapted_matrices_reproduce_catalog_operators() {
        let (p, q) = (1.3, 0.4);
        let s = WebSymmetry::new(SymClass::Xi1, 0.0);
        assert_eq!(s.dual_field(p, q), (1.0, p)); // dp + p dq
        let s = WebSymmetry::new(SymClass::Xi32, 0.0);
        assert_eq!(s.dual_field(p, q), (p, -q));
        let s = WebSymmetry::new(SymClass::Xi23, 0.0);
        let (dp, dq) = s.dual_field(p, q);
        assert!((dp - p).abs() < 1e-15 && (dq - (p + q)).abs() < 1e-15);
        let s = WebSymmetry::new(SymClass::Xi33, 4.0);
        let (dp, dq) = s.dual_field(p, q);
        assert!((dp - p).abs() < 1e-15 && (dq - 4.0 * q).abs() < 1e-15);
    }

    #[test]
    fn web_equation_rows() {
        // rows (1,0,0), (1,1,0), (1,0,1) -> determinant 1
        let w = LinearWeb3 {
            families: [
                Family::Curve {
                    kind: CurveKind::QZero,
                    flow: ParamFlow::Translation,
                    window: (-10.0, 10.0),
                },
                Family::Curve {
                    kind: CurveKind::QZero,
                    flow: ParamFlow::Translation,
                    window: (-10.0, 10.0),
                },
                Family::Curve {
                    kind: CurveKind::DualLine { p0: 0.0 },
                    flow: ParamFlow::Translation,
                    window: (-10.0, 10.0),
                },
            ],
            symmetry: None,
        };
        // (1, p, q): t1=0 -> (1,0,0); t2=1 -> (1,1,0); t3: DualLine p0=0 -> (1,0,1)
        let r = w.web_equation_residual([0.0, 1.0, 1.0]).unwrap();
        assert_eq!(r, 1.0);
        // concurrent lines through origin: zero
        let r = w.web_equation_residual([0.0, 1.0, 0.0]).unwrap();
        assert_eq!(r, 0.0);
    }
}
