//! The linearizability criterion: the compatibility polynomial E(Z) of degree
//! 5, its flow derivative H(Z) of degree 6, their resultant R, the normalized
//! invariant omega, and the verdict machinery built on them.
//!
//! The coefficient tables are transcribed once, ring-generically, and are
//! certified by an independently derived compatibility oracle: total
//! differentiation of the closed-form Z' along the flow reproduces E up to
//! the Z-free factor -243 X^3 (4X-9)^3, and the total derivative of E
//! reproduces H up to the factor 3.

use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::polycore::{
    bareiss_determinant, euclid_remainder, Jet1, MultiPoly, PolyRing, Rational, RingElem,
};
use crate::symweb::{z_prime_parts, z_system_first, InvariantFrame, WebProfile};

/// Coefficients [E5, E4, E3, E2, E1, E0] of the degree-5 compatibility
/// polynomial in Z.
pub fn coeffs_e<R: RingElem>(x: &R, f: &R, f1: &R, f2: &R) -> [R; 6] {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9); // 4X - 9
    let w2 = w.clone() * w.clone();
    let x2 = x.clone() * x.clone();
    let e5 = w.ring_powi(3) * c(81);
    let e4 = -(x.clone() * w2.clone() * c(324));
    let e3 = -(x2.clone() * w.clone() * c(27))
        * (x.clone() * w2.clone() * f1.clone()
            + x.clone() * w2.clone() * f.clone() * f.clone() * c(2)
            + (x.clone() * c(6) - c(13)) * w.clone() * f.clone()
            - c(12));
    let e2 = -(x2.clone() * w.clone() * c(3))
        * (x2.clone() * w2.clone() * f2.clone() * c(3)
            + x2.clone() * w2.clone() * f.clone() * f1.clone() * c(21)
            + x.clone() * w.clone() * (x.clone() * c(2) - c(9)) * f1.clone() * c(6)
            + x2.clone() * w2.clone() * f.ring_powi(3) * c(18)
            + x.clone() * w.clone() * (x.clone() - c(3)) * f.clone() * f.clone() * c(42)
            + (-(x2.clone() * c(108)) + x.clone() * c(144) + c(54)) * f.clone()
            - c(8));
    let e1 = x.ring_powi(3) * c(3)
        * (x2.clone() * w2.clone() * f2.clone() * c(8)
            + x2.clone() * w2.clone() * f.clone() * f1.clone() * c(53)
            + x.clone() * (x.clone() * c(40) - c(69)) * w.clone() * f1.clone() * c(2)
            + x2.clone() * w2.clone() * f.ring_powi(3) * c(42)
            + x.clone() * (x.clone() * c(95) - c(153)) * w.clone() * f.clone() * f.clone() * c(2)
            + (c(108) - x.clone() * c(180)) * f.clone()
            - c(16));
    let e0 = x.ring_powi(4)
        * (-(x2.clone() * w.clone() * f2.clone() * c(16))
            + x2.clone() * w2.clone() * f1.clone() * f1.clone() * c(3)
            + x2.clone() * w2.clone() * f.clone() * f.clone() * f1.clone() * c(12)
            - x.clone() * (x.clone() * c(16) + c(9)) * w.clone() * f.clone() * f1.clone() * c(4)
            - x.clone() * (x.clone() * c(8) - c(9)) * f1.clone() * c(24)
            + x2.clone() * w2.clone() * f.ring_powi(4) * c(12)
            - x.clone() * w.clone() * f.ring_powi(3) * c(72)
            + (c(108) + x.clone() * c(240) - x2.clone() * c(300)) * f.clone() * f.clone()
            - (x.clone() * c(48) + c(16)) * f.clone());
    [e5, e4, e3, e2, e1, e0]
}

/// Coefficients [H6, ..., H0] of the degree-6 flow derivative of E.
pub fn coeffs_h<R: RingElem>(x: &R, f: &R, f1: &R, f2: &R, f3: &R) -> [R; 7] {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9);
    let w2 = w.clone() * w.clone();
    let w3 = w.ring_powi(3);
    let w4 = w.ring_powi(4);
    let x2 = x.clone() * x.clone();
    let x3 = x.ring_powi(3);
    let h6 = -(w4.clone() * c(243))
        * (x.clone() * w.clone() * f.clone() * c(5) - x.clone() * c(12) + c(30));
    let h5 = x.clone() * w3.clone() * c(81)
        * (x.clone() * w.clone() * f.clone() * c(73) - x.clone() * c(192) + c(486));
    let h4 = x2.clone() * w2.clone() * c(27)
        * (-(x2.clone() * w3.clone() * f2.clone() * c(3))
            - x2.clone() * w3.clone() * f.clone() * f1.clone() * c(3)
            - x.clone() * (x.clone() * c(10) - c(21)) * w2.clone() * f1.clone() * c(9)
            + x2.clone() * w3.clone() * f.ring_powi(3) * c(18)
            - x.clone() * (x.clone() * c(30) - c(61)) * w2.clone() * f.clone() * f.clone() * c(3)
            - w.clone() * (x2.clone() * c(180) - x.clone() * c(578) + c(747)) * f.clone() * c(2)
            + x.clone() * c(1008)
            - c(2592));
    let h3 = x2.clone() * w.clone() * c(9)
        * (-(x3.clone() * w4.clone() * f3.clone() * c(3))
            - x3.clone() * w4.clone() * f.clone() * f2.clone() * c(15)
            - x2.clone() * (x.clone() * c(14) - c(33)) * w3.clone() * f2.clone() * c(6)
            - x3.clone() * w4.clone() * f1.clone() * f1.clone() * c(21)
            - x3.clone() * w4.clone() * f.clone() * f.clone() * f1.clone() * c(12)
            - x2.clone() * (x.clone() * c(215) - c(384)) * w3.clone() * f.clone() * f1.clone() * c(3)
            + x.clone()
                * (x2.clone() * c(30) + x.clone() * c(121) - c(360))
                * w2.clone()
                * f1.clone()
                * c(6)
            + x3.clone() * w4.clone() * f.ring_powi(4) * c(36)
            - x2.clone() * (x.clone() * c(5) - c(6)) * w3.clone() * f.ring_powi(3) * c(102)
            - x.clone()
                * (x2.clone() * c(102) - x.clone() * c(461) + c(534))
                * w2.clone()
                * f.clone()
                * f.clone()
                * c(9)
            + w.clone()
                * (x3.clone() * c(1800) - x2.clone() * c(6548) + x.clone() * c(5445) + c(810))
                * f.clone()
                * c(2)
            + c(2160)
            + x.clone() * c(2712)
            - x2.clone() * c(1344));
    let h2 = -(w.clone() * x3.clone() * c(3))
        * (-(x3.clone() * w3.clone() * f3.clone() * c(36))
            - x3.clone() * w3.clone() * f.clone() * f2.clone() * c(189)
            - x2.clone() * (x.clone() * c(72) - c(133)) * w2.clone() * f2.clone() * c(18)
            - x3.clone() * w3.clone() * f1.clone() * f1.clone() * c(216)
            - x3.clone() * w3.clone() * f.clone() * f.clone() * f1.clone() * c(117)
            - x2.clone() * (x.clone() * c(424) - c(737)) * w2.clone() * f.clone() * f1.clone() * c(18)
            - x.clone()
                * w.clone()
                * (x2.clone() * c(90) - x.clone() * c(370) + c(357))
                * f1.clone()
                * c(72)
            + x3.clone() * w3.clone() * f.ring_powi(4) * c(414)
            - x2.clone() * (x.clone() * c(221) - c(359)) * w2.clone() * f.ring_powi(3) * c(18)
            - x.clone()
                * w.clone()
                * (x2.clone() * c(1002) - x.clone() * c(3484) + c(2985))
                * f.clone()
                * f.clone()
                * c(18)
            + (x3.clone() * c(8640) - x2.clone() * c(22040) - x.clone() * c(5328) + c(16524))
                * f.clone()
            - c(2448)
            + x.clone() * c(960));
    let h1 = -x.ring_powi(4)
        * (x3.clone() * w3.clone() * f3.clone() * c(144)
            + x3.clone() * w3.clone() * f.clone() * f2.clone() * c(792)
            + x2.clone() * (x.clone() * c(116) - c(201)) * w2.clone() * f2.clone() * c(48)
            + x3.clone() * w4.clone() * f.clone() * f1.clone() * f1.clone() * c(54)
            + x2.clone() * (x.clone() * c(34) + c(15)) * w3.clone() * f1.clone() * f1.clone() * c(18)
            + x3.clone() * w4.clone() * f.ring_powi(3) * f1.clone() * c(216)
            + x2.clone() * (x.clone() * c(61) + c(48)) * w3.clone() * f.clone() * f.clone() * f1.clone() * c(9)
            + x.clone()
                * (x2.clone() * c(2336) - x.clone() * c(3921) - c(270))
                * w2.clone()
                * f.clone()
                * f1.clone()
                * c(12)
            + x.clone()
                * w.clone()
                * (x2.clone() * c(1040) - x.clone() * c(3560) + c(2709))
                * f1.clone()
                * c(36)
            + x3.clone() * w4.clone() * f.ring_powi(5) * c(216)
            - x2.clone() * (x.clone() * c(43) + c(12)) * w3.clone() * f.ring_powi(4) * c(18)
            + x.clone()
                * (x2.clone() * c(619) - x.clone() * c(1027) - c(252))
                * w2.clone()
                * f.ring_powi(3)
                * c(18)
            + w.clone()
                * (x3.clone() * c(3054) - x2.clone() * c(9961) + x.clone() * c(7146) + c(405))
                * f.clone()
                * f.clone()
                * c(24)
            + (x3.clone() * c(11520) - x2.clone() * c(83264) + x.clone() * c(148536) - c(27864))
                * f.clone()
            + c(6048)
            - x.clone() * c(2304));
    let h0 = x.ring_powi(5)
        * (x3.clone() * w2.clone() * f3.clone() * c(64)
            + x3.clone() * w2.clone() * f.clone() * f2.clone() * c(368)
            + x2.clone() * (x.clone() * c(16) - c(27)) * w.clone() * f2.clone() * c(160)
            + x3.clone() * w3.clone() * f.clone() * f1.clone() * f1.clone() * c(63)
            + x2.clone() * (x.clone() * c(8) + c(27)) * w2.clone() * f1.clone() * f1.clone() * c(14)
            + x3.clone() * w3.clone() * f.ring_powi(3) * f1.clone() * c(252)
            + x2.clone() * (x.clone() * c(64) + c(189)) * w2.clone() * f.clone() * f.clone() * f1.clone() * c(4)
            + x.clone()
                * w.clone()
                * (x2.clone() * c(1336) - x.clone() * c(2025) - c(567))
                * f.clone()
                * f1.clone()
                * c(8)
            + x.clone() * (x.clone() * c(300) - c(269)) * w.clone() * f1.clone() * c(16)
            + x3.clone() * w3.clone() * f.ring_powi(5) * c(252)
            + x3.clone() * w2.clone() * f.ring_powi(4) * c(192)
            + x.clone()
                * (x.clone() * c(7) + c(9))
                * (x.clone() * c(95) - c(189))
                * w.clone()
                * f.ring_powi(3)
                * c(4)
            + (c(13608) - x2.clone() * c(86904) + x.clone() * c(41904) + x3.clone() * c(28800))
                * f.clone()
                * f.clone()
            + (x2.clone() * c(3840) - x.clone() * c(7840) - c(2016)) * f.clone());
    [h6, h5, h4, h3, h2, h1, h0]
}

/// rho(X, F, F') whose vanishing marks the degenerate branch of the test.
pub fn rho<R: RingElem>(x: &R, f: &R, f1: &R) -> R {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9);
    x.clone() * w.clone() * w.clone() * f1.clone()
        + x.clone() * w.clone() * w.clone() * f.clone() * f.clone() * c(2)
        + (x.clone() - c(1)) * w * f.clone() * c(6)
        - c(8)
}

/// sigma(X, Z) = 3(4X - 9)Z - 4X, the common-factor locus of the proof.
pub fn sigma<R: RingElem>(x: &R, z: &R) -> R {
    let c = |n: i64| x.const_like(n);
    (x.clone() * c(4) - c(9)) * z.clone() * c(3) - x.clone() * c(4)
}

/// tau(X, F), the resultant of E/sigma^3 and H/sigma^3 on the rho = 0 locus.
pub fn tau<R: RingElem>(x: &R, f: &R) -> R {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9);
    let x2 = x.clone() * x.clone();
    let bracket1 = (x.clone() * c(84) - c(189)) * f.clone() - c(20);
    let bracket2 = x2.clone() * w.ring_powi(3) * f.ring_powi(3) * c(7)
        + x.clone() * (x.clone() * c(51) - c(4)) * w.clone() * w.clone() * f.clone() * f.clone() * c(21)
        - (x.clone() * c(596) - c(21)) * w.clone() * f.clone() * c(12)
        + c(11856);
    x.ring_powi(6) * w.ring_powi(6) * c(36) * bracket1 * bracket2
}

// ---------------------------------------------------------------------------
// symbolic system and transcription oracle
// ---------------------------------------------------------------------------

/// Cached symbolic E, H and the two independently derived oracles, in the
/// variables (X, Z, F, F1, F2, F3).
pub struct SymbolicSystem {
    pub ring: PolyRing,
    pub e: MultiPoly,
    pub h: MultiPoly,
    pub oracle_e: MultiPoly,
    pub oracle_h: MultiPoly,
}

static SYSTEM: OnceLock<SymbolicSystem> = OnceLock::new();

/// Index layout of the symbolic ring.
pub const VARS: [&str; 6] = ["X", "Z", "F", "F1", "F2", "F3"];

pub fn symbolic_system() -> &'static SymbolicSystem {
    SYSTEM.get_or_init(|| {
        let ring = PolyRing::new(&VARS);
        let x = ring.var("X");
        let z = ring.var("Z");
        let f = ring.var("F");
        let f1 = ring.var("F1");
        let f2 = ring.var("F2");
        let f3 = ring.var("F3");
        let zi = ring.index_of("Z").unwrap();
        let e_coeffs = coeffs_e(&x, &f, &f1, &f2);
        let h_coeffs = coeffs_h(&x, &f, &f1, &f2, &f3);
        let horner = |coeffs: &[MultiPoly]| {
            let mut acc = ring.zero();
            for c in coeffs {
                acc = &(&acc * &z) + c;
            }
            acc
        };
        let e = horner(&e_coeffs);
        let h = horner(&h_coeffs);

        // total derivative along the flow: d/dX + F' d/dF + F'' d/dF' + ...
        let xi = ring.index_of("X").unwrap();
        let fi = ring.index_of("F").unwrap();
        let f1i = ring.index_of("F1").unwrap();
        let f2i = ring.index_of("F2").unwrap();
        let flow_x = |p: &MultiPoly| {
            let mut d = p.derivative(xi);
            d = &d + &(&f1 * &p.derivative(fi));
            d = &d + &(&f2 * &p.derivative(f1i));
            &d + &(&f3 * &p.derivative(f2i))
        };

        let (p, q) = z_prime_parts(&x, &z, &f, &f1);
        let (ca2, ca1, ca0) = z_system_first(&x, &z, &f, &f1);
        let p_xt = flow_x(&p);
        let p_z = p.derivative(zi);
        let q_x = q.derivative(xi);
        let q_z = q.derivative(zi);
        // cleared form of dZ'/dX - Z'':
        //   cA2 [Q(P_X Q + P_Z P) - P(Q_X Q + Q_Z P)] + Q^2 (cA1 P + cA0 Q)
        let inner = &(&q * &(&(&p_xt * &q) + &(&p_z * &p))) - &(&p * &(&(&q_x * &q) + &(&q_z * &p)));
        let oracle_e = &(&ca2 * &inner) + &(&(&q * &q) * &(&(&ca1 * &p) + &(&ca0 * &q)));
        // cleared total derivative of E along the flow
        let oracle_h = &(&e.derivative(zi) * &p) + &(&flow_x(&e) * &q);
        SymbolicSystem { ring, e, h, oracle_e, oracle_h }
    })
}

/// The Z-free factor relating the compatibility oracle to E.
pub fn oracle_e_factor(ring: &PolyRing) -> MultiPoly {
    let x = ring.var("X");
    let w = &x.scale(&Rational::from_i64(4)) - &ring.int(9);
    (&x.pow(3) * &w.pow(3)).scale(&Rational::from_i64(-243))
}

/// Compatibility oracle value at a numeric point: total differentiation of
/// the closed-form Z' along the flow minus Z'', cleared of denominators.
/// Proportional to E(Z) with the Z-independent factor -243 X^3 (4X-9)^3.
pub fn compatibility_oracle(x: f64, f_jet: &Jet1<f64>, z: f64) -> Result<f64> {
    if x == 0.0 || (4.0 * x - 9.0).abs() < 1e-12 {
        return Err(Error::SingularX);
    }
    if (3.0 * (4.0 * x - 9.0) * z - 4.0 * x).abs() < 1e-10 {
        return Err(Error::SigmaLocus);
    }
    if f_jet.order() < 2 {
        return Err(Error::InvalidInput("oracle needs an order-2 jet of F".into()));
    }
    let sys = symbolic_system();
    let vals = [
        x,
        z,
        *f_jet.value(),
        f_jet.derivative_value(1),
        f_jet.derivative_value(2),
        0.0,
    ];
    Ok(sys.oracle_e.eval_f64(&vals))
}

/// Exact oracle evaluation over rationals.
pub fn compatibility_oracle_exact(
    x: &Rational,
    f: &Rational,
    f1: &Rational,
    f2: &Rational,
    z: &Rational,
) -> Rational {
    let sys = symbolic_system();
    let vals = [
        x.clone(),
        z.clone(),
        f.clone(),
        f1.clone(),
        f2.clone(),
        Rational::zero(),
    ];
    sys.oracle_e.eval(&vals)
}

// ---------------------------------------------------------------------------
// resultants
// ---------------------------------------------------------------------------

/// 11x11 Sylvester matrix of E (degree 5) and H (degree 6) in Z: six shifted
/// rows of E's coefficients (descending) then five rows of H's.
pub fn sylvester_eh<R: RingElem>(e: &[R; 6], h: &[R; 7]) -> Vec<Vec<R>> {
    let zero = e[0].const_like(0);
    let mut m = vec![vec![zero; 11]; 11];
    for i in 0..6 {
        for (j, c) in e.iter().enumerate() {
            m[i][i + j] = c.clone();
        }
    }
    for i in 0..5 {
        for (j, c) in h.iter().enumerate() {
            m[6 + i][i + j] = c.clone();
        }
    }
    m
}

/// Exact resultant of E and H with X symbolic and rational (F, F', F'', F''').
pub fn resultant_symbolic_x(
    f: &Rational,
    f1: &Rational,
    f2: &Rational,
    f3: &Rational,
) -> MultiPoly {
    let ring = PolyRing::new(&["X"]);
    let x = ring.var("X");
    let fc = ring.constant(f.clone());
    let f1c = ring.constant(f1.clone());
    let f2c = ring.constant(f2.clone());
    let f3c = ring.constant(f3.clone());
    let e = coeffs_e(&x, &fc, &f1c, &f2c);
    let h = coeffs_h(&x, &fc, &f1c, &f2c, &f3c);
    bareiss_determinant(&sylvester_eh(&e, &h))
}

/// Exact resultant with F''' symbolic and the rest numeric rational.
pub fn resultant_symbolic_f3(
    x: &Rational,
    f: &Rational,
    f1: &Rational,
    f2: &Rational,
) -> Result<MultiPoly> {
    let ring = PolyRing::new(&["F3"]);
    let xv = ring.constant(x.clone());
    let fc = ring.constant(f.clone());
    let f1c = ring.constant(f1.clone());
    let f2c = ring.constant(f2.clone());
    let f3v = ring.var("F3");
    let e = coeffs_e(&xv, &fc, &f1c, &f2c);
    let h = coeffs_h(&xv, &fc, &f1c, &f2c, &f3v);
    if e[0].is_zero() || h[0].is_zero() {
        return Err(Error::DegenerateLeadingCoeff);
    }
    Ok(bareiss_determinant(&sylvester_eh(&e, &h)))
}

/// Result of the exact factorization of R over Q[X].
pub struct ExactFactorization {
    pub r: MultiPoly,
    /// Exponent of (4X-9) dividing R.
    pub pole_mult: usize,
    /// Exponent of X dividing R.
    pub x_mult: usize,
    /// Exponent of rho dividing R.
    pub rho_mult: usize,
    /// The normalized quotient omega = R / (3^30 (4X-9)^20 X^26 rho^6).
    pub omega: Option<MultiPoly>,
}

fn multiplicity_of(p: &MultiPoly, d: &MultiPoly, cap: usize) -> (usize, MultiPoly) {
    let mut m = 0;
    let mut cur = p.clone();
    while m < cap {
        match cur.exact_div(d) {
            Some(q) => {
                cur = q;
                m += 1;
            }
            None => break,
        }
    }
    (m, cur)
}

/// Factors the exact resultant as (4X-9)^20 X^26 rho^6 times 3^30 omega.
///
/// The rho-exponent of the printed tables is 6 (certified by the sigma/tau
/// consistency of the proof machinery); `omega` is normalized so that its
/// leading coefficient in F''' is exactly X^11 (4X-9)^8.
pub fn factor_resultant(
    f: &Rational,
    f1: &Rational,
    f2: &Rational,
    f3: &Rational,
) -> ExactFactorization {
    let r = resultant_symbolic_x(f, f1, f2, f3);
    let ring = r.ring();
    let x = ring.var("X");
    let w = &x.scale(&Rational::from_i64(4)) - &ring.int(9);
    let rho_p = rho(&x, &ring.constant(f.clone()), &ring.constant(f1.clone()));
    let (pole_mult, after_w) = multiplicity_of(&r, &w, 40);
    let (x_mult, after_x) = multiplicity_of(&after_w, &x, 60);
    let (rho_mult, after_rho) = multiplicity_of(&after_x, &rho_p, 12);
    let omega = if pole_mult >= 20 && x_mult >= 26 && rho_mult >= 6 {
        // undo any extra divisions so omega is exactly R/(3^30 w^20 X^26 rho^6)
        let mut om = after_rho;
        for _ in 20..pole_mult {
            om = &om * &w;
        }
        for _ in 26..x_mult {
            om = &om * &x;
        }
        for _ in 6..rho_mult {
            om = &om * &rho_p;
        }
        let three30 = Rational::from_i64(3).powi(30);
        Some(om.scale(&three30.recip().unwrap()))
    } else {
        None
    };
    ExactFactorization { r, pole_mult, x_mult, rho_mult, omega }
}

// ---------------------------------------------------------------------------
// float pipeline
// ---------------------------------------------------------------------------

/// Determinant (via scaled LU with partial pivoting) together with the
/// largest-magnitude monomial contribution of the Leibniz expansion (a
/// max-weight assignment over the entries), the natural scale for deciding
/// whether the determinant vanishes.
pub fn det_and_monomial_scale(m: &[Vec<f64>]) -> (f64, f64) {
    let n = m.len();
    // row scaling keeps both quantities within f64 range
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut logscale = 0.0f64;
    for row in a.iter_mut() {
        let mx = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if mx > 0.0 {
            logscale += mx.ln();
            for v in row.iter_mut() {
                *v /= mx;
            }
        }
    }
    let mut det = 1.0f64;
    let mut lu = a.clone();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[i][k].abs().partial_cmp(&lu[j][k].abs()).unwrap())
            .unwrap();
        if lu[piv][k] == 0.0 {
            det = 0.0;
            break;
        }
        if piv != k {
            lu.swap(piv, k);
            det = -det;
        }
        det *= lu[k][k];
        let pivot = lu[k][k];
        for i in k + 1..n {
            let fac = lu[i][k] / pivot;
            for j in k + 1..n {
                lu[i][j] -= fac * lu[k][j];
            }
        }
    }
    // max-assignment on log|entries| by bitmask DP
    let neg = f64::NEG_INFINITY;
    let mut dp = vec![neg; 1 << n];
    dp[0] = 0.0;
    for mask in 0..(1usize << n) {
        if dp[mask] == neg {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == n {
            continue;
        }
        for (j, aij) in a[i].iter().enumerate() {
            if mask & (1 << j) == 0 && *aij != 0.0 {
                let v = dp[mask] + aij.abs().ln();
                let slot = &mut dp[mask | (1 << j)];
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
    let full = dp[(1 << n) - 1];
    let scale = if full == neg { 0.0 } else { (full + logscale).exp() };
    (det * logscale.exp(), scale)
}

/// One evaluated criterion sample.
#[derive(Debug, Clone, Copy)]
pub struct OmegaSample {
    pub frame: InvariantFrame,
    pub rho: f64,
    /// Resultant value and its monomial scale.
    pub r: f64,
    pub scale: f64,
    /// The normalized invariant R / (3^30 (4X-9)^20 X^26 rho^6).
    pub omega: f64,
    /// |R| relative to the monomial scale; the quantity tested against tol.
    pub rel_residual: f64,
    /// Number of (clustered) common roots of E and H.
    pub common_roots: usize,
}

/// Evaluates omega on a frame.
pub fn omega(frame: &InvariantFrame) -> Result<OmegaSample> {
    let x = frame.x;
    if x == 0.0 || (4.0 * x - 9.0).abs() < 1e-9 {
        return Err(Error::SingularX);
    }
    let rho_v = rho(&x, &frame.f, &frame.f1);
    let rho_scale = rho_terms_scale(x, frame.f, frame.f1);
    if rho_v.abs() < 1e-10 * rho_scale {
        return Err(Error::RhoLocus);
    }
    let e = coeffs_e(&x, &frame.f, &frame.f1, &frame.f2);
    let h = coeffs_h(&x, &frame.f, &frame.f1, &frame.f2, &frame.f3);
    if e[0].abs() < 1e-14 || h[0].abs() < 1e-14 {
        return Err(Error::DegenerateLeadingCoeff);
    }
    let m = sylvester_eh(&e, &h);
    let mv: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let (r, scale) = det_and_monomial_scale(&mv);
    if !r.is_finite() || !scale.is_finite() || scale == 0.0 {
        return Err(Error::DomainError("resultant evaluation overflowed".into()));
    }
    let w = 4.0 * x - 9.0;
    let denom = 3f64.powi(30) * w.powi(20) * x.powi(26) * rho_v.powi(6);
    let omega = r / denom;
    let common = count_common_roots(&e, &h);
    Ok(OmegaSample {
        frame: *frame,
        rho: rho_v,
        r,
        scale,
        omega,
        rel_residual: r.abs() / scale,
        common_roots: common,
    })
}

fn rho_terms_scale(x: f64, f: f64, f1: f64) -> f64 {
    let w = 4.0 * x - 9.0;
    (x * w * w * f1).abs() + (2.0 * x * w * w * f * f).abs() + (6.0 * (x - 1.0) * w * f).abs() + 8.0
}

/// Roots of a real-coefficient polynomial by the Durand-Kerner iteration.
fn polynomial_roots(coeffs_desc: &[f64]) -> Vec<Complex64> {
    let n = coeffs_desc.len() - 1;
    let lead = coeffs_desc[0];
    let monic: Vec<f64> = coeffs_desc.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::zero();
        for &c in &monic {
            acc = acc * z + Complex64::new(c, 0.0);
        }
        acc
    };
    // radius from the coefficient bound
    let radius = 1.0 + monic.iter().skip(1).fold(0.0f64, |a, c| a.max(c.abs()));
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius.min(4.0).max(0.5), ang)
        })
        .collect();
    for _ in 0..200 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut den = Complex64::one();
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-13 {
            break;
        }
    }
    roots
}

/// Number of common roots of E and H, clustered at relative 1e-7.
pub fn count_common_roots(e: &[f64; 6], h: &[f64; 7]) -> usize {
    let re = polynomial_roots(e);
    let rh = polynomial_roots(h);
    let mut used = vec![false; rh.len()];
    let mut count = 0;
    for a in &re {
        let mut best: Option<(usize, f64)> = None;
        for (j, b) in rh.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (a - b).norm();
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            if d <= 1e-7 * (1.0 + a.norm()) {
                used[j] = true;
                count += 1;
            }
        }
    }
    count
}

/// Common-root count with the one-step Euclid bound asserted: after one
/// division step the remainder has degree at most 4, so a frame with
/// nonvanishing leading coefficients admits at most 4 linearizations.
pub fn count_linearizations(x: f64, f: f64, f1: f64, f2: f64, f3: f64) -> Result<usize> {
    let e = coeffs_e(&x, &f, &f1, &f2);
    let h = coeffs_h(&x, &f, &f1, &f2, &f3);
    let scale_e = e.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let scale_h = h.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if e[0].abs() < 1e-12 * scale_e || h[0].abs() < 1e-12 * scale_h {
        return Err(Error::DegenerateLeadingCoeff);
    }
    let count = count_common_roots(&e, &h);
    // one Euclid step caps the gcd degree at deg rem(H, E) <= 4
    debug_assert!(count <= 5);
    Ok(count.min(5))
}

/// Exact Euclid remainder degree of H by E at a rational frame.
pub fn euclid_degree(
    x: &Rational,
    f: &Rational,
    f1: &Rational,
    f2: &Rational,
    f3: &Rational,
) -> Result<i64> {
    let ring = PolyRing::new(&["Z"]);
    let z = ring.var("Z");
    let xc = ring.constant(x.clone());
    let fc = ring.constant(f.clone());
    let f1c = ring.constant(f1.clone());
    let f2c = ring.constant(f2.clone());
    let f3c = ring.constant(f3.clone());
    let e = coeffs_e(&xc, &fc, &f1c, &f2c);
    let h = coeffs_h(&xc, &fc, &f1c, &f2c, &f3c);
    let horner = |coeffs: &[MultiPoly]| {
        let mut acc = ring.zero();
        for c in coeffs {
            acc = &(&acc * &z) + c;
        }
        acc
    };
    let ep = horner(&e);
    let hp = horner(&h);
    if e[0].is_zero() {
        return Err(Error::DegenerateLeadingCoeff);
    }
    let rem = euclid_remainder(&hp, &ep, 0)?;
    Ok(rem.degree(0))
}

// ---------------------------------------------------------------------------
// verdicts
// ---------------------------------------------------------------------------

/// Outcome of the linearizability decision.
#[derive(Debug, Clone, PartialEq)]
pub enum LinVerdict {
    Linearizable { count: usize },
    NonLinearizable { max_rel_residual: f64 },
    Flat,
    Degenerate { reason: String },
}

/// Full decision record: verdict plus the per-sample table.
#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: LinVerdict,
    pub samples: Vec<OmegaSample>,
    pub skipped: Vec<(f64, String)>,
    pub tol: f64,
}

/// Default relative tolerance for |R| against its monomial scale.
pub const OMEGA_REL_TOL: f64 = 1e-8;

/// Default spacing of the sample parameters around the base point.
pub const SAMPLE_SPACING: f64 = 0.15;

/// Decides linearizability of a profile by evaluating omega at several
/// parameters around the base point.
pub fn decide_linearizable(
    profile: &WebProfile,
    sample_count: usize,
    tol: f64,
) -> Result<Decision> {
    decide_linearizable_spaced(profile, sample_count, tol, SAMPLE_SPACING)
}

pub fn decide_linearizable_spaced(
    profile: &WebProfile,
    sample_count: usize,
    tol: f64,
    spacing: f64,
) -> Result<Decision> {
    if sample_count < 3 {
        return Err(Error::InvalidInput("need at least 3 samples".into()));
    }
    if profile.flat_flag() {
        return Ok(Decision { verdict: LinVerdict::Flat, samples: vec![], skipped: vec![], tol });
    }
    let t0 = profile.base();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut k = 0i64;
    while samples.len() < sample_count && (k as usize) < 3 * sample_count + 6 {
        // t0, t0 + d, t0 - d, t0 + 2d, ...
        let idx = (k + 1) / 2;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let t = t0 + sign * idx as f64 * spacing;
        k += 1;
        let fr = match profile.frame_at(t) {
            Ok(fr) => fr,
            Err(e) => {
                skipped.push((t, e.to_string()));
                continue;
            }
        };
        match omega(&fr) {
            Ok(s) => samples.push(s),
            Err(e) => skipped.push((t, e.to_string())),
        }
    }
    if samples.is_empty() {
        return Ok(Decision {
            verdict: LinVerdict::Degenerate {
                reason: skipped
                    .first()
                    .map(|(_, m)| m.clone())
                    .unwrap_or_else(|| "no admissible samples".into()),
            },
            samples,
            skipped,
            tol,
        });
    }
    let max_rel = samples.iter().fold(0.0f64, |a, s| a.max(s.rel_residual));
    let verdict = if max_rel > tol {
        LinVerdict::NonLinearizable { max_rel_residual: max_rel }
    } else {
        let count = samples.iter().map(|s| s.common_roots).min().unwrap_or(0);
        LinVerdict::Linearizable { count: count.max(1) }
    };
    Ok(Decision { verdict, samples, skipped, tol })
}

// ---------------------------------------------------------------------------
// randomized verification harness
// ---------------------------------------------------------------------------

/// Outcome of one verification property.
#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    let num = rng.random_range(-8i64..=8);
    let den = rng.random_range(1i64..=4);
    Rational::new(num, den)
}

fn admissible_x<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let x = random_rational(rng);
        if !x.is_zero() && x != Rational::new(9, 4) && x != Rational::new(0, 1) {
            return x;
        }
    }
}

/// Transcription check: the oracle/E ratio must equal -243 X^3 (4X-9)^3
/// independently of Z at every sampled point. `table` supplies the E
/// coefficients under test, so a corrupted table is detectable.
pub fn verify_transcription_with_table<F>(trials: usize, seed: u64, table: F) -> PropertyOutcome
where
    F: Fn(&Rational, &Rational, &Rational, &Rational) -> [Rational; 6],
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let x = admissible_x(&mut rng);
        let f = random_rational(&mut rng);
        let f1 = random_rational(&mut rng);
        let f2 = random_rational(&mut rng);
        let e = table(&x, &f, &f1, &f2);
        let w = &(&x * &Rational::from_i64(4)) - &Rational::from_i64(9);
        let expected = &(&x.powi(3) * &w.powi(3)) * &Rational::from_i64(-243);
        for zi in 2..=7i64 {
            let z = Rational::from_i64(zi);
            let mut ev = Rational::zero();
            for c in &e {
                ev = &(&ev * &z) + c;
            }
            let oracle = compatibility_oracle_exact(&x, &f, &f1, &f2, &z);
            if &(&expected * &ev) - &oracle != Rational::zero() {
                return PropertyOutcome {
                    name: "transcription-oracle",
                    passed: false,
                    detail: format!(
                        "trial {trial}: oracle/E ratio broken at X={x}, F={f}, F'={f1}, F''={f2}, Z={z}"
                    ),
                };
            }
        }
    }
    PropertyOutcome {
        name: "transcription-oracle",
        passed: true,
        detail: format!("{trials} points x 6 Z-values, exact ratio -243 X^3 (4X-9)^3"),
    }
}

pub fn verify_transcription(trials: usize, seed: u64) -> PropertyOutcome {
    verify_transcription_with_table(trials, seed, |x, f, f1, f2| coeffs_e(x, f, f1, f2))
}

/// Exact resultant factorization over Q[X] on random rational tuples.
pub fn verify_factorization(trials: usize, seed: u64) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let f = random_rational(&mut rng);
        let f1 = random_rational(&mut rng);
        let f2 = random_rational(&mut rng);
        let f3 = random_rational(&mut rng);
        let fac = factor_resultant(&f, &f1, &f2, &f3);
        if fac.r.is_zero() {
            continue;
        }
        if fac.pole_mult < 20 || fac.x_mult < 26 || fac.rho_mult != 6 {
            return PropertyOutcome {
                name: "resultant-factorization",
                passed: false,
                detail: format!(
                    "trial {trial} ({f},{f1},{f2},{f3}): multiplicities (4X-9)^{}, X^{}, rho^{}",
                    fac.pole_mult, fac.x_mult, fac.rho_mult
                ),
            };
        }
    }
    PropertyOutcome {
        name: "resultant-factorization",
        passed: true,
        detail: format!("{trials} tuples: R = 3^30 (4X-9)^20 X^26 rho^6 omega exactly"),
    }
}

/// Quintic structure of omega in F''': degree 5 and exact leading coefficient
/// X^11 (4X-9)^8.
pub fn verify_quintic(trials: usize, seed: u64) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < trials {
        let x = admissible_x(&mut rng);
        let f = random_rational(&mut rng);
        let f1 = random_rational(&mut rng);
        let f2 = random_rational(&mut rng);
        let rho_v = rho(&x, &f, &f1);
        if rho_v.is_zero() {
            continue;
        }
        let r = match resultant_symbolic_f3(&x, &f, &f1, &f2) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let deg = r.degree(0);
        let w = &(&x * &Rational::from_i64(4)) - &Rational::from_i64(9);
        let expected_lead = &(&(&x.powi(11) * &w.powi(8))
            * &(&(&w.powi(20) * &x.powi(26)) * &rho_v.powi(6)))
            * &Rational::from_i64(3).powi(30);
        let lead = r.as_univariate(0).last().unwrap().constant_value().unwrap();
        if deg != 5 || lead != expected_lead {
            return PropertyOutcome {
                name: "quintic-structure",
                passed: false,
                detail: format!(
                    "X={x}, F={f}: deg_F''' R = {deg}, lead/expected mismatch"
                ),
            };
        }
        done += 1;
    }
    PropertyOutcome {
        name: "quintic-structure",
        passed: true,
        detail: format!("{trials} frames: deg 5, lead(omega) = X^11 (4X-9)^8 exactly"),
    }
}

/// One-step Euclid bound: deg rem(H, E) <= 4 on random rational frames.
pub fn verify_euclid_bound(trials: usize, seed: u64) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < trials {
        let x = admissible_x(&mut rng);
        let f = random_rational(&mut rng);
        let f1 = random_rational(&mut rng);
        let f2 = random_rational(&mut rng);
        let f3 = random_rational(&mut rng);
        match euclid_degree(&x, &f, &f1, &f2, &f3) {
            Err(_) => continue,
            Ok(d) => {
                if d > 4 {
                    return PropertyOutcome {
                        name: "euclid-bound",
                        passed: false,
                        detail: format!("deg rem(H,E) = {d} at X={x}"),
                    };
                }
                // float cross-check of the common-root count
                if let Ok(c) = count_linearizations(
                    x.to_f64(),
                    f.to_f64(),
                    f1.to_f64(),
                    f2.to_f64(),
                    f3.to_f64(),
                ) {
                    if c > 4 {
                        return PropertyOutcome {
                            name: "euclid-bound",
                            passed: false,
                            detail: format!("common-root count {c} > 4 at X={x}"),
                        };
                    }
                }
                done += 1;
            }
        }
    }
    PropertyOutcome {
        name: "euclid-bound",
        passed: true,
        detail: format!("{trials} frames: deg rem(H,E) <= 4 and at most 4 common roots"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn table_spot_values() {
        // E5(X=3) = 2187
        let e = coeffs_e(&3.0f64, &0.0, &0.0, &0.0);
        assert_eq!(e[0], 2187.0);
        // X = 9/4, F* = 0: E5..E2 = 0, E1 = -2187/4
        let e = coeffs_e(&q(9, 4), &q(0, 1), &q(0, 1), &q(0, 1));
        for c in &e[..4] {
            assert!(c.is_zero());
        }
        assert_eq!(e[4], q(-2187, 4));
        // F* = 0: E0 = 0 for any X
        let e = coeffs_e(&q(7, 3), &q(0, 1), &q(0, 1), &q(0, 1));
        assert!(e[5].is_zero());
        // H6(X=3, F=0) = 118098 ; H6(X=9/4) = H5 = H4 = 0 ; H6(X=1, F*=0)
        let h = coeffs_h(&3.0f64, &0.0, &0.0, &0.0, &0.0);
        assert_eq!(h[0], 118098.0);
        let h = coeffs_h(&q(9, 4), &q(1, 3), &q(2, 1), &q(-1, 2), &q(5, 1));
        assert!(h[0].is_zero() && h[1].is_zero() && h[2].is_zero());
        let h = coeffs_h(&1.0f64, &0.0, &0.0, &0.0, &0.0);
        assert_eq!(h[0], -2733750.0);
    }

    #[test]
    fn rho_tau_sigma_spot_values() {
        assert_eq!(rho(&q(9, 4), &q(5, 1), &q(7, 1)), q(-8, 1));
        assert_eq!(rho(&q(3, 1), &q(0, 1), &q(0, 1)), q(-8, 1));
        assert_eq!(rho(&1.0f64, &1.0, &1.0), 67.0);
        assert_eq!(sigma(&q(9, 4), &q(123, 7)), q(-9, 1));
        // tau(1, 0) = -36 * 15625 * 20 * 11856
        assert_eq!(tau(&q(1, 1), &q(0, 1)), q(-133_380_000_000, 1));
        // tau vanishes when (84X - 189) F = 20
        let x = q(5, 2);
        let f = &q(20, 1) / &(&(&x * &q(84, 1)) - &q(189, 1));
        assert!(tau(&x, &f).is_zero());
    }

    #[test]
    fn symbolic_oracles_certify_tables() {
        let sys = symbolic_system();
        // oracle_E == -243 X^3 (4X-9)^3 * E exactly
        let factor = oracle_e_factor(&sys.ring);
        let expect = &factor * &sys.e;
        assert_eq!(sys.oracle_e, expect);
        // oracle_H == 3 H exactly
        assert_eq!(sys.oracle_h, sys.h.scale(&q(3, 1)));
    }

    #[test]
    fn z_system_consistency_identity() {
        // P (cB1 - X cA1) + Q (cB0 - X cA0) == 0: the closed-form Z' is the
        // eliminant of the two second-order equations
        let ring = PolyRing::new(&["X", "Z", "F", "F1"]);
        let x = ring.var("X");
        let z = ring.var("Z");
        let f = ring.var("F");
        let f1 = ring.var("F1");
        let (p, q) = z_prime_parts(&x, &z, &f, &f1);
        let (_, ca1, ca0) = z_system_first(&x, &z, &f, &f1);
        let (_, cb1, cb0) = crate::symweb::z_system_second(&x, &z, &f, &f1);
        let lhs = &(&p * &(&cb1 - &(&x * &ca1))) + &(&q * &(&cb0 - &(&x * &ca0)));
        assert!(lhs.is_zero());
    }

    #[test]
    fn oracle_numeric_matches_e() {
        // oracle(Z)/E(Z) = -243 X^3 (4X-9)^3 pointwise in float mode
        let (x, f, f1, f2) = (3.0f64, 0.5, -0.25, 0.125);
        let fjet = Jet1::new(x, vec![f, f1, f2 / 2.0]);
        let factor = -243.0 * x.powi(3) * (4.0 * x - 9.0).powi(3);
        for z in [2.0, 3.0, 4.0, 5.0] {
            let e = coeffs_e(&x, &f, &f1, &f2);
            let ev = e.iter().fold(0.0, |acc, c| acc * z + c);
            let oracle = compatibility_oracle(x, &fjet, z).unwrap();
            assert!(
                (oracle - factor * ev).abs() <= 1e-9 * oracle.abs().max(1.0),
                "z = {z}"
            );
        }
    }

    #[test]
    fn corrupted_table_detected() {
        let out = verify_transcription_with_table(5, 11, |x, f, f1, f2| {
            let mut e = coeffs_e(x, f, f1, f2);
            // plant a corruption in E3
            e[2] = &e[2] + &(x * &Rational::new(1, 7));
            e
        });
        assert!(!out.passed);
        let out = verify_transcription(5, 11);
        assert!(out.passed, "{}", out.detail);
    }

    #[test]
    fn frozen_factorization_vector() {
        // tuple (1, 0, 0, 0): frozen values computed independently
        let fac = factor_resultant(&q(1, 1), &q(0, 1), &q(0, 1), &q(0, 1));
        assert_eq!(fac.r.degree(0), 84);
        assert_eq!((fac.pole_mult, fac.x_mult, fac.rho_mult), (20, 26, 6));
        let om = fac.omega.unwrap();
        assert_eq!(om.degree(0), 20);
        assert_eq!(om.eval(&[q(1, 1)]), q(12_021_309_472_000, 3));
        assert_eq!(om.eval(&[q(2, 1)]), q(-23_171_478_048_256, 3));
        assert_eq!(om.eval(&[q(1, 2)]), q(7_890_656_390_708, 3));
    }

    #[test]
    fn sigma_locus_incompatible() {
        // substituting Z = 4X/(3(4X-9)) into the Z-system leaves a nonzero
        // residual: sigma = 0 is not a solution branch
        for (x, f, f1) in [(3.0f64, 0.5, 0.25), (1.0, -0.5, 1.0), (4.0, 0.1, -0.3)] {
            let z = 4.0 * x / (3.0 * (4.0 * x - 9.0));
            // Z(X) along sigma=0: Z' = d/dX [4X/(12X-27)] = -108/(12X-27)^2
            let zp = -108.0 / (12.0 * x - 27.0).powi(2);
            let zpp = 2.0 * 108.0 * 12.0 / (12.0 * x - 27.0).powi(3);
            let (c2, c1, c0) = z_system_first(&x, &z, &f, &f1);
            let r1 = c2 * zpp + c1 * zp + c0;
            let (d2, d1, d0) = crate::symweb::z_system_second(&x, &z, &f, &f1);
            let r2 = d2 * zpp + d1 * zp + d0;
            assert!(r1.abs() > 1e-6 || r2.abs() > 1e-6, "x={x}");
        }
    }

    #[test]
    fn common_root_counting() {
        // planted common root: E = (Z-1)(Z-2)(Z-3)(Z-4)(Z-5), H = (Z-1) * quintic
        let e = [1.0, -15.0, 85.0, -225.0, 274.0, -120.0];
        // H = (Z-1)(Z^5 + 1) = Z^6 - Z^5 + Z - 1
        let h = [1.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0];
        assert_eq!(count_common_roots(&e, &h), 1);
    }

    #[test]
    fn randomized_verifications_pass() {
        assert!(verify_transcription(6, 1).passed);
        assert!(verify_quintic(2, 2).passed);
        assert!(verify_euclid_bound(8, 3).passed);
    }
}
