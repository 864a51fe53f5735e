//! Multi-dimensional Schwarzian derivative of planar maps, the differential
//! syzygies its components satisfy, and the cubic linearizability residuals
//! for a 3-web.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::polycore::Jet2;

/// Bivariate scalar field, evaluable as a Taylor jet of requested order.
pub type Field2 = Rc<dyn Fn(&(f64, f64), usize) -> Result<Jet2<f64>>>;

/// A local diffeomorphism of the plane, component-wise jet-evaluable.
#[derive(Clone)]
pub struct PlaneMap {
    comp: [Field2; 2],
}

impl PlaneMap {
    pub fn new(phi1: Field2, phi2: Field2) -> Self {
        PlaneMap { comp: [phi1, phi2] }
    }

    /// Polynomial map from term lists `(i, j, coefficient)` meaning `c x^i y^j`.
    pub fn polynomial(terms1: Vec<(u32, u32, f64)>, terms2: Vec<(u32, u32, f64)>) -> Self {
        let make = |terms: Vec<(u32, u32, f64)>| -> Field2 {
            Rc::new(move |p: &(f64, f64), order: usize| {
                let x = Jet2::var_x(*p, order);
                let y = Jet2::var_y(*p, order);
                let mut acc = Jet2::constant(0.0, order, *p);
                for &(i, j, c) in &terms {
                    let mut t = Jet2::constant(c, order, *p);
                    for _ in 0..i {
                        t = t.mul(&x);
                    }
                    for _ in 0..j {
                        t = t.mul(&y);
                    }
                    acc = acc.add(&t);
                }
                Ok(acc)
            })
        };
        PlaneMap::new(make(terms1), make(terms2))
    }

    /// Projective map given by a 3x3 matrix acting on (x : y : 1).
    pub fn projective(m: [[f64; 3]; 3]) -> Self {
        let row = |r: [f64; 3]| {
            move |p: &(f64, f64), order: usize| -> Jet2<f64> {
                let x = Jet2::var_x(*p, order);
                let y = Jet2::var_y(*p, order);
                x.scale(&r[0]).add(&y.scale(&r[1])).add_scalar(&r[2])
            }
        };
        let (r1, r2, r3) = (row(m[0]), row(m[1]), row(m[2]));
        let make = |num: Box<dyn Fn(&(f64, f64), usize) -> Jet2<f64>>,
                    den: Box<dyn Fn(&(f64, f64), usize) -> Jet2<f64>>|
         -> Field2 {
            Rc::new(move |p, order| num(p, order).div(&den(p, order)))
        };
        let r3b = row(m[2]);
        PlaneMap::new(
            make(Box::new(r1), Box::new(r3)),
            make(Box::new(r2), Box::new(r3b)),
        )
    }

    pub fn eval(&self, i: usize, p: &(f64, f64), order: usize) -> Result<Jet2<f64>> {
        (self.comp[i])(p, order)
    }
}

/// The four independent Schwarzian components of a plane map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzianKlmn {
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
}

impl SchwarzianKlmn {
    /// Reconstructs the full tensor S^k_ij from (K, L, M, N); the symmetry
    /// S^k_ij = S^k_ji and the trace relations hold by construction, with
    /// S^2_12 = -K and S^1_12 = -N.
    pub fn full_tensor(&self) -> [[[f64; 2]; 2]; 2] {
        let mut s = [[[0.0; 2]; 2]; 2];
        s[0][0][0] = self.k;
        s[0][1][1] = self.l;
        s[1][0][0] = self.m;
        s[1][1][1] = self.n;
        s[0][0][1] = -self.n;
        s[0][1][0] = -self.n;
        s[1][0][1] = -self.k;
        s[1][1][0] = -self.k;
        s
    }
}

/// Schwarzian components of `map` at `point` as bivariate jets of the given
/// order (the map itself is queried at order + 2).
pub fn schwarzian_jets(
    map: &PlaneMap,
    point: &(f64, f64),
    order: usize,
) -> Result<[Jet2<f64>; 4]> {
    let mo = order + 2;
    let p1 = map.eval(0, point, mo)?;
    let p2 = map.eval(1, point, mo)?;
    let j11 = p1.partial_x();
    let j12 = p1.partial_y();
    let j21 = p2.partial_x();
    let j22 = p2.partial_y();
    let det = j11.mul(&j22).sub(&j12.mul(&j21));
    if det.value().abs() < 1e-12 {
        return Err(Error::SingularMap);
    }
    // inverse Jacobian entries (du^k / d phi^l) via the adjugate
    let inv = det.recip()?;
    let iu = [
        [j22.mul(&inv), j12.neg().mul(&inv)],
        [j21.neg().mul(&inv), j11.mul(&inv)],
    ];
    // derivatives of ln det from the quotient rule, never finite differences
    let ld = [det.partial_x().div(&det)?, det.partial_y().div(&det)?];
    let second = |f: &Jet2<f64>, i: usize, j: usize| -> Jet2<f64> {
        let d1 = if i == 0 { f.partial_x() } else { f.partial_y() };
        if j == 0 {
            d1.partial_x()
        } else {
            d1.partial_y()
        }
    };
    let third = 1.0 / 3.0;
    let s_comp = |k: usize, i: usize, j: usize| -> Jet2<f64> {
        let mut acc = second(&p1, i, j).mul(&iu[k][0]).add(&second(&p2, i, j).mul(&iu[k][1]));
        if k == i {
            acc = acc.sub(&ld[j].scale(&third));
        }
        if k == j {
            acc = acc.sub(&ld[i].scale(&third));
        }
        acc.truncate(order)
    };
    Ok([
        s_comp(0, 0, 0), // K
        s_comp(0, 1, 1), // L
        s_comp(1, 0, 0), // M
        s_comp(1, 1, 1), // N
    ])
}

/// (K, L, M, N) of `map` at `point`.
pub fn schwarzian_of_map(map: &PlaneMap, point: &(f64, f64)) -> Result<SchwarzianKlmn> {
    let [k, l, m, n] = schwarzian_jets(map, point, 0)?;
    Ok(SchwarzianKlmn {
        k: *k.value(),
        l: *l.value(),
        m: *m.value(),
        n: *n.value(),
    })
}

/// Four scalar fields forming a candidate Schwarzian.
#[derive(Clone)]
pub struct KlmnField {
    pub k: Field2,
    pub l: Field2,
    pub m: Field2,
    pub n: Field2,
}

impl KlmnField {
    /// The Schwarzian field of an explicit map.
    pub fn of_map(map: &PlaneMap) -> Self {
        let mk = |idx: usize| -> Field2 {
            let map = map.clone();
            Rc::new(move |p: &(f64, f64), order: usize| {
                Ok(schwarzian_jets(&map, p, order)?[idx].clone())
            })
        };
        KlmnField {
            k: mk(0),
            l: mk(1),
            m: mk(2),
            n: mk(3),
        }
    }
}

/// Left-hand sides of the two second-order syzygies that characterize which
/// quadruples (K, L, M, N) arise as Schwarzians of actual maps.
pub fn syzygy_residuals(field: &KlmnField, point: &(f64, f64)) -> Result<(f64, f64)> {
    let k = (field.k)(point, 2)?;
    let l = (field.l)(point, 2)?;
    let m = (field.m)(point, 2)?;
    let n = (field.n)(point, 2)?;
    let pv = |f: &Jet2<f64>, i: usize, j: usize| f.partial_value(i, j);
    let r1 = 2.0 * pv(&k, 1, 1) + pv(&m, 0, 2) + pv(&n, 2, 0) - 6.0 * k.value() * pv(&k, 0, 1)
        + 2.0 * m.value() * pv(&l, 1, 0)
        + l.value() * pv(&m, 1, 0)
        + 3.0 * n.value() * pv(&m, 0, 1)
        - 3.0 * k.value() * pv(&n, 1, 0)
        + 3.0 * m.value() * pv(&n, 0, 1);
    let r2 = pv(&k, 0, 2) + pv(&l, 2, 0) + 2.0 * pv(&n, 1, 1) + 3.0 * l.value() * pv(&k, 1, 0)
        - 3.0 * n.value() * pv(&k, 0, 1)
        + 3.0 * k.value() * pv(&l, 1, 0)
        + m.value() * pv(&l, 0, 1)
        + 2.0 * l.value() * pv(&m, 0, 1)
        - 6.0 * n.value() * pv(&n, 1, 0);
    Ok((r1, r2))
}

/// Directional derivative `V_i(lambda_i) = d_x lambda + lambda d_y lambda`.
fn advect(slope: &Jet2<f64>) -> f64 {
    slope.partial_value(1, 0) + slope.value() * slope.partial_value(0, 1)
}

/// Residuals of the linearity condition `V_i(lambda_i) = 0` for three slopes.
pub fn linearity_residuals(slopes: &[Field2; 3], point: &(f64, f64)) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (i, s) in slopes.iter().enumerate() {
        out[i] = advect(&s(point, 1)?);
    }
    Ok(out)
}

/// Residuals of the cubic linearizability condition
/// `L l^3 - 3 N l^2 + 3 K l - M = V_i(l)` for the three web slopes.
pub fn henaut_residuals(
    slopes: &[Field2; 3],
    klmn: &SchwarzianKlmn,
    point: &(f64, f64),
) -> Result<[f64; 3]> {
    let jets: Vec<Jet2<f64>> = slopes
        .iter()
        .map(|s| s(point, 1))
        .collect::<Result<_>>()?;
    for i in 0..3 {
        for j in i + 1..3 {
            if (jets[i].value() - jets[j].value()).abs() < 1e-9 {
                return Err(Error::DegenerateWeb);
            }
        }
    }
    let mut out = [0.0; 3];
    for (i, sj) in jets.iter().enumerate() {
        let lam = *sj.value();
        let cubic = klmn.l * lam.powi(3) - 3.0 * klmn.n * lam * lam + 3.0 * klmn.k * lam - klmn.m;
        out[i] = cubic - advect(sj);
    }
    Ok(out)
}

/// Slope fields of the pullback of the parallel web with target slopes `c`
/// under `map`: a source direction (1, lambda) maps to a line of target slope
/// c exactly when lambda = (c J11 - J21) / (J22 - c J12).
pub fn pullback_parallel_slopes(map: &PlaneMap, c: [f64; 3]) -> [Field2; 3] {
    let mk = |ci: f64| -> Field2 {
        let map = map.clone();
        Rc::new(move |p: &(f64, f64), order: usize| {
            let p1 = map.eval(0, p, order + 1)?;
            let p2 = map.eval(1, p, order + 1)?;
            let num = p1.partial_x().scale(&ci).sub(&p2.partial_x());
            let den = p2.partial_y().sub(&p1.partial_y().scale(&ci));
            num.div(&den)
        })
    };
    [mk(c[0]), mk(c[1]), mk(c[2])]
}

/// Constant slope field.
pub fn constant_slope(c: f64) -> Field2 {
    Rc::new(move |p: &(f64, f64), order: usize| Ok(Jet2::constant(c, order, *p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident() -> PlaneMap {
        PlaneMap::polynomial(vec![(1, 0, 1.0)], vec![(0, 1, 1.0)])
    }

    #[test]
    fn identity_map_has_zero_schwarzian() {
        let s = schwarzian_of_map(&ident(), &(0.7, -0.3)).unwrap();
        assert_eq!((s.k, s.l, s.m, s.n), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn shear_map_gives_constant_m() {
        // (x, y + x^2) -> (K, L, M, N) = (0, 0, 2, 0) exactly
        let map = PlaneMap::polynomial(vec![(1, 0, 1.0)], vec![(0, 1, 1.0), (2, 0, 1.0)]);
        for p in [(0.0, 0.0), (1.3, -2.0), (-0.4, 0.9)] {
            let s = schwarzian_of_map(&map, &p).unwrap();
            assert_eq!((s.k, s.l, s.m, s.n), (0.0, 0.0, 2.0, 0.0));
        }
    }

    #[test]
    fn projective_maps_have_zero_schwarzian() {
        let map = PlaneMap::projective([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]);
        let s = schwarzian_of_map(&map, &(0.0, 0.0)).unwrap();
        for v in [s.k, s.l, s.m, s.n] {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn tensor_relations_hold() {
        let map = PlaneMap::polynomial(
            vec![(1, 0, 1.0), (2, 1, 0.1)],
            vec![(0, 1, 1.0), (3, 0, 0.2), (0, 2, 0.05)],
        );
        let s = schwarzian_of_map(&map, &(0.2, 0.1)).unwrap();
        let t = s.full_tensor();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(t[k][i][j], t[k][j][i]);
                }
            }
        }
        for i in 0..2 {
            let trace: f64 = (0..2).map(|l| t[l][i][l]).sum();
            assert_eq!(trace, 0.0);
        }
    }

    #[test]
    fn singular_jacobian_detected() {
        let map = PlaneMap::polynomial(vec![(1, 0, 1.0)], vec![(1, 0, 1.0)]);
        assert!(matches!(
            schwarzian_of_map(&map, &(0.0, 0.0)),
            Err(Error::SingularMap)
        ));
    }

    #[test]
    fn syzygies_vanish_for_genuine_schwarzians() {
        let map = PlaneMap::polynomial(
            vec![(1, 0, 1.0), (3, 0, 0.3)],
            vec![(0, 1, 1.0), (2, 1, 0.15)],
        );
        let field = KlmnField::of_map(&map);
        for p in [(0.1, 0.2), (-0.3, 0.15), (0.05, -0.12)] {
            let (r1, r2) = syzygy_residuals(&field, &p).unwrap();
            assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9, "({r1}, {r2})");
        }
    }

    #[test]
    fn syzygy_example_k_equals_y() {
        // K = y, L = M = N = 0 -> residuals (-6y, 0)
        let zero: Field2 = Rc::new(|p, o| Ok(Jet2::constant(0.0, o, *p)));
        let ky: Field2 = Rc::new(|p: &(f64, f64), o| Ok(Jet2::var_y(*p, o)));
        let field = KlmnField {
            k: ky,
            l: zero.clone(),
            m: zero.clone(),
            n: zero,
        };
        let (r1, r2) = syzygy_residuals(&field, &(0.4, 1.7)).unwrap();
        assert!((r1 + 6.0 * 1.7).abs() < 1e-12);
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn henaut_examples() {
        // constant slopes + zero Schwarzian: linear web, zero residuals
        let slopes = [constant_slope(0.0), constant_slope(1.0), constant_slope(2.0)];
        let zero = SchwarzianKlmn { k: 0.0, l: 0.0, m: 0.0, n: 0.0 };
        assert_eq!(
            henaut_residuals(&slopes, &zero, &(0.3, 0.4)).unwrap(),
            [0.0, 0.0, 0.0]
        );
        // pulled-back parallel web under (x, y + x^2) with its Schwarzian
        let map = PlaneMap::polynomial(vec![(1, 0, 1.0)], vec![(0, 1, 1.0), (2, 0, 1.0)]);
        let pulled = pullback_parallel_slopes(&map, [0.0, 1.0, 2.0]);
        let s = schwarzian_of_map(&map, &(0.7, 0.1)).unwrap();
        let r = henaut_residuals(&pulled, &s, &(0.7, 0.1)).unwrap();
        for v in r {
            assert!(v.abs() < 1e-10, "{v}");
        }
        // mismatched combination: constant slopes with M = 2 -> (-2, -2, -2)
        let r = henaut_residuals(&slopes, &s, &(0.7, 0.1)).unwrap();
        assert_eq!(r, [-2.0, -2.0, -2.0]);
    }

    #[test]
    fn coincident_slopes_rejected() {
        let slopes = [constant_slope(1.0), constant_slope(1.0), constant_slope(2.0)];
        let zero = SchwarzianKlmn { k: 0.0, l: 0.0, m: 0.0, n: 0.0 };
        assert!(matches!(
            henaut_residuals(&slopes, &zero, &(0.0, 0.0)),
            Err(Error::DegenerateWeb)
        ));
    }

    #[test]
    fn linearity_residual_examples() {
        let slopes = [constant_slope(0.0), constant_slope(1.0), constant_slope(2.0)];
        assert_eq!(linearity_residuals(&slopes, &(1.0, 2.0)).unwrap(), [0.0; 3]);
        // slope field x: V(x) = 1
        let sx: Field2 = Rc::new(|p: &(f64, f64), o| Ok(Jet2::var_x(*p, o)));
        let slopes = [sx, constant_slope(1.0), constant_slope(2.0)];
        assert_eq!(
            linearity_residuals(&slopes, &(0.5, 0.0)).unwrap(),
            [1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn pulled_back_slopes_match_hand_formula() {
        // under (x, y + x^2): lambda_i = c_i - 2x
        let map = PlaneMap::polynomial(vec![(1, 0, 1.0)], vec![(0, 1, 1.0), (2, 0, 1.0)]);
        let pulled = pullback_parallel_slopes(&map, [0.0, 1.0, 2.0]);
        let p = (0.37, -0.9);
        for (i, c) in [0.0, 1.0, 2.0].iter().enumerate() {
            let j = pulled[i](&p, 0).unwrap();
            assert!((j.value() - (c - 2.0 * p.0)).abs() < 1e-13);
        }
    }
}
