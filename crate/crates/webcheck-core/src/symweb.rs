//! Cartan-normalized symmetric 3-webs: the profile S(t), the invariant frame
//! (X, F, F', F'', F'''), the symmetric-group action on normalizations, the
//! K/N compatibility ODEs with their first integrals, and the Z-system.

use std::rc::Rc;

use crate::catalog::LinearWeb3;
use crate::error::{Error, Result};
use crate::polycore::{implicit_jet_solve, newton_f64, Jet1, RingElem, Scalar};

/// Jet-evaluable source of the profile function S(t).
pub trait ProfileFn {
    fn s_jet(&self, t: f64, order: usize) -> Result<Jet1<f64>>;
}

impl<F> ProfileFn for F
where
    F: Fn(f64, usize) -> Result<Jet1<f64>>,
{
    fn s_jet(&self, t: f64, order: usize) -> Result<Jet1<f64>> {
        self(t, order)
    }
}

/// A symmetric 3-web in Cartan normalization, described by S(t).
#[derive(Clone)]
pub struct WebProfile {
    eval: Rc<dyn ProfileFn>,
    t0: f64,
    flat: bool,
    s0: f64,
}

/// Tolerance below which d^2/dt^2 log S is considered identically zero.
pub const FLATNESS_TOL: f64 = 1e-10;

/// Builds a profile from any jet-evaluable S(t), checking the normalization
/// S(t0) not in {0, 1} and probing flatness at the base and 4 nearby points.
pub fn make_profile(eval: Rc<dyn ProfileFn>, t0: f64) -> Result<WebProfile> {
    let j = eval.s_jet(t0, 5)?;
    if j.order() < 5 {
        return Err(Error::InvalidInput("profile must provide an order-5 jet".into()));
    }
    let s0 = *j.value();
    if s0.abs() < 1e-9 || (s0 - 1.0).abs() < 1e-9 {
        return Err(Error::DegenerateNormalization);
    }
    let delta = 1.0 / 16.0;
    let mut flat = true;
    for k in [0.0, 1.0, -1.0, 2.0, -2.0] {
        match eval.s_jet(t0 + k * delta, 2) {
            Ok(sj) => {
                // d^2/dt^2 log S = (S'' S - S'^2) / S^2, no logarithm needed
                let s = *sj.value();
                let s1 = sj.derivative_value(1);
                let s2 = sj.derivative_value(2);
                if s.abs() < 1e-12 {
                    continue;
                }
                if ((s2 * s - s1 * s1) / (s * s)).abs() > FLATNESS_TOL {
                    flat = false;
                    break;
                }
            }
            Err(_) => continue, // off-domain probe; base point already checked
        }
    }
    Ok(WebProfile { eval, t0, flat, s0 })
}

impl WebProfile {
    pub fn base(&self) -> f64 {
        self.t0
    }

    pub fn flat_flag(&self) -> bool {
        self.flat
    }

    pub fn s_at_base(&self) -> f64 {
        self.s0
    }

    pub fn s_jet(&self, t: f64, order: usize) -> Result<Jet1<f64>> {
        self.eval.s_jet(t, order)
    }

    pub fn frame_at(&self, t: f64) -> Result<InvariantFrame> {
        let j = self.s_jet(t, 5)?;
        let fr = invariant_frame_jet(&j)?;
        Ok(InvariantFrame {
            t,
            s: *j.value(),
            x: fr.x,
            u: fr.u,
            f: fr.f,
            f1: fr.f1,
            f2: fr.f2,
            f3: fr.f3,
        })
    }

    /// Profile with S replaced by S(t) (1 + eps (t - center)^3), a generic
    /// non-flat disturbance used by the falsification tests.
    pub fn perturbed(&self, eps: f64, center: f64) -> Result<WebProfile> {
        let inner = self.eval.clone();
        let f = move |t: f64, order: usize| -> Result<Jet1<f64>> {
            let s = inner.s_jet(t, order)?;
            let dt = Jet1::variable(t, order).add_scalar(&-center);
            Ok(s.mul(&dt.powi(3).scale(&eps).add_scalar(&1.0)))
        };
        make_profile(Rc::new(f), self.t0)
    }
}

/// Point values of the invariant frame along a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantFrame {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub u: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

/// Frame values over a generic coefficient field.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameValues<T: Scalar> {
    pub x: T,
    pub u: T,
    pub f: T,
    pub f1: T,
    pub f2: T,
    pub f3: T,
}

/// X as a function of the profile value: the symmetrized cross-ratio
/// (S^2 - S + 1)^3 / (3 (S - 1)^2 S^2).
pub fn x_of_s<T: Scalar>(s: &T) -> T {
    let one = T::one();
    let num = s.clone() * s.clone() - s.clone() + one.clone();
    let den = (s.clone() - one) * (s.clone() - T::one()) * s.clone() * s.clone() * T::from_i64(3);
    num.clone() * num.clone() * num / den
}

/// Invariant frame from an order-5 jet of S, by repeated application of
/// d/dX = (dX/dt)^{-1} d/dt. Exact over rational jets.
pub fn invariant_frame_jet<T: Scalar>(s: &Jet1<T>) -> Result<FrameValues<T>> {
    if s.order() < 5 {
        return Err(Error::InvalidInput("frame needs an order-5 jet of S".into()));
    }
    let s0 = s.value().clone();
    if s0.abs_f64() < 1e-9 || (s0.clone() - T::one()).abs_f64() < 1e-9 {
        return Err(Error::DegenerateNormalization);
    }
    let one = || T::one();
    let num = s.mul(s).sub(s).add_scalar(&one());
    let den = s
        .add_scalar(&-one())
        .mul(&s.add_scalar(&-one()))
        .mul(&s.mul(s))
        .scale(&T::from_i64(3));
    let x = num.powi(3).div(&den)?; // order 5
    let u = s.derivative().div(&s.scale(&T::from_i64(3)))?; // order 4
    if u.value().abs_f64() < 1e-12 {
        return Err(Error::FlatWeb);
    }
    let xp = x.derivative(); // order 4
    if xp.value().abs_f64() < 1e-12 {
        return Err(Error::StationaryX);
    }
    let f = u.derivative().div(&u.mul(&xp))?; // order 3
    let f1 = f.derivative().div(&xp)?; // order 2
    let f2 = f1.derivative().div(&xp)?; // order 1
    let f3 = f2.derivative().div(&xp)?; // order 0
    Ok(FrameValues {
        x: x.value().clone(),
        u: u.value().clone(),
        f: f.value().clone(),
        f1: f1.value().clone(),
        f2: f2.value().clone(),
        f3: f3.value().clone(),
    })
}

/// Residual of the normalized cubic relation `3S(K - SN) = (1 - S) S'`.
pub fn henaut_symmetric_residual(s: f64, s_prime: f64, k: f64, n: f64) -> f64 {
    3.0 * s * (k - s * n) - (1.0 - s) * s_prime
}

// ---------------------------------------------------------------------------
// symmetric-group action on normalizations
// ---------------------------------------------------------------------------

/// First generator (swap of the first two foliations): t -> -t, S -> 1/S.
pub fn s3_gen_swap12<T: Scalar>(s: &Jet1<T>) -> Result<Jet1<T>> {
    let mut c: Vec<T> = s.coeffs().to_vec();
    for (k, v) in c.iter_mut().enumerate() {
        if k % 2 == 1 {
            *v = -v.clone();
        }
    }
    let reflected = Jet1::new(s.base().clone(), c);
    reflected.recip()
}

/// Second generator (swap of the second and third foliations):
/// S -> S/(S-1) with the reparametrization d(t~) = dt / (1 - S).
pub fn s3_gen_swap23<T: Scalar>(s: &Jet1<T>) -> Result<Jet1<T>> {
    let one = T::one();
    let a = s.div(&s.add_scalar(&-one.clone()))?; // S/(S-1), order n
    // new parameter T(t) = integral of 1/(1 - S), anchored at 0
    let tt = s.neg().add_scalar(&one).recip()?.antiderivative(T::zero()); // order n+1
    if tt.coeff(1).abs_f64() < 1e-13 {
        return Err(Error::DegenerateNormalization);
    }
    // invert T and compose: S~(u) = A(t(u))
    let order = s.order();
    let tinv = implicit_jet_solve(
        |u: &Jet1<T>, v: &Jet1<T>| Ok(tt.truncate(v.order()).compose(v).sub(u)),
        T::zero(),
        T::zero(),
        order,
    )?;
    Ok(a.compose(&tinv))
}

/// The six jets of the orbit of S under the symmetric group, as transported
/// to the base point: identity, the two generators and their compositions.
pub fn s3_orbit_jets<T: Scalar>(s: &Jet1<T>) -> Result<[Jet1<T>; 6]> {
    let s0 = s.value();
    if s0.abs_f64() < 1e-9 || (s0.clone() - T::one()).abs_f64() < 1e-9 {
        return Err(Error::DegenerateNormalization);
    }
    let g1 = s3_gen_swap12(s)?;
    let g2 = s3_gen_swap23(s)?;
    let g12 = s3_gen_swap12(&g2)?;
    let g21 = s3_gen_swap23(&g1)?;
    let g121 = s3_gen_swap12(&g21)?;
    for j in [&g1, &g2, &g12, &g21, &g121] {
        let v = j.value();
        if v.abs_f64() < 1e-9 || (v.clone() - T::one()).abs_f64() < 1e-9 {
            return Err(Error::DegenerateNormalization);
        }
    }
    Ok([s.clone(), g1, g2, g12, g21, g121])
}

/// K and N transported by the two generators at a base point.
pub fn s3_orbit_kn(s: &Jet1<f64>, k: f64, n: f64) -> Result<[(f64, f64); 6]> {
    let swap12 = |(k, n): (f64, f64)| (n, k);
    let swap23 = |sj: &Jet1<f64>, (k, n): (f64, f64)| {
        let s = *sj.value();
        let sp = sj.derivative_value(1);
        (k - 2.0 * n * s + 2.0 / 3.0 * sp, -n * (s - 1.0) + sp / 3.0)
    };
    let g1 = s3_gen_swap12(s)?;
    let kn1 = swap12((k, n));
    let kn2 = swap23(s, (k, n));
    let kn12 = swap12(kn2);
    let kn21 = swap23(&g1, kn1);
    let kn121 = swap12(kn21);
    Ok([(k, n), kn1, kn2, kn12, kn21, kn121])
}

/// Orbit at the profile level: each branch is evaluable anywhere by
/// reflecting (first generator) or integrating the reparametrizing ODE
/// dt/du = 1 - S(t) (second generator).
pub fn s3_orbit(profile: &WebProfile) -> Result<[WebProfile; 6]> {
    let p0 = profile.clone();
    let refl = |p: &WebProfile| -> Result<WebProfile> {
        let inner = p.eval.clone();
        let t0 = p.t0;
        make_profile(
            Rc::new(move |u: f64, order: usize| -> Result<Jet1<f64>> {
                let s = inner.s_jet(t0 - (u - 0.0), order)?; // t = t0 - u
                let mut c: Vec<f64> = s.coeffs().to_vec();
                for (k, v) in c.iter_mut().enumerate() {
                    if k % 2 == 1 {
                        *v = -*v;
                    }
                }
                Jet1::new(u, c).recip()
            }),
            0.0,
        )
    };
    let repar = |p: &WebProfile| -> Result<WebProfile> {
        let inner = p.eval.clone();
        let t0 = p.t0;
        make_profile(
            Rc::new(move |u: f64, order: usize| -> Result<Jet1<f64>> {
                // integrate dt/du = 1 - S(t) from (u, t) = (0, t0)
                let n = (u.abs() / 0.02).ceil().max(1.0) as usize;
                let h = u / n as f64;
                let mut t = t0;
                let g = |t: f64| -> Result<f64> { Ok(1.0 - inner.s_jet(t, 0)?.value()) };
                for _ in 0..n {
                    let k1 = g(t)?;
                    let k2 = g(t + 0.5 * h * k1)?;
                    let k3 = g(t + 0.5 * h * k2)?;
                    let k4 = g(t + h * k3)?;
                    t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
                // Taylor recurrence for the jet of t(u): t' = 1 - S(t)
                let mut tj = Jet1::constant(t, 0, u);
                for k in 0..order {
                    let s = inner.s_jet(t, k)?;
                    let g = s.compose(&tj.truncate(k)).neg().add_scalar(&1.0);
                    tj = g.antiderivative(t);
                }
                let s = inner.s_jet(t, order)?;
                let a = s.div(&s.add_scalar(&-1.0))?;
                Ok(a.compose(&tj.truncate(order)))
            }),
            0.0,
        )
    };
    let b1 = refl(&p0)?;
    let b2 = repar(&p0)?;
    let b12 = refl(&b2)?;
    let b21 = repar(&b1)?;
    let b121 = refl(&b21)?;
    Ok([p0, b1, b2, b12, b21, b121])
}

// ---------------------------------------------------------------------------
// the K/N system and its first integrals
// ---------------------------------------------------------------------------

/// State of the K/N compatibility system along t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnState {
    pub t: f64,
    pub k: f64,
    pub n: f64,
    pub kp: f64,
    pub np: f64,
}

impl KnState {
    /// The two conserved quantities of the system.
    pub fn integrals(&self) -> (f64, f64) {
        let KnState { k, n, kp, np, .. } = *self;
        let i1 = np - kp + k * k + n * n - n * k;
        let i2 = 3.0 * (np * k - kp * n) - 2.0 * (k.powi(3) + n.powi(3))
            + 3.0 * (k * k * n + n * n * k);
        (i1, i2)
    }
}

/// Second derivatives solved from the linear pair
/// -2K'' + N'' = -6KK' + 3KN',  K'' - 2N'' = -3NK' + 6NN'.
fn kn_accel(k: f64, n: f64, kp: f64, np: f64) -> (f64, f64) {
    let kpp = 4.0 * k * kp - 2.0 * k * np + n * kp - 2.0 * n * np;
    let npp = 2.0 * k * kp - k * np + 2.0 * n * kp - 4.0 * n * np;
    (kpp, npp)
}

/// Integrates the K/N system with classical fixed-step RK4, recording the
/// first integrals at every step.
pub fn kn_flow(initial: KnState, t_final: f64, steps: usize) -> Result<Vec<KnState>> {
    if steps == 0 {
        return Err(Error::InvalidInput("step count must be positive".into()));
    }
    let h = (t_final - initial.t) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = initial;
    out.push(s);
    let f = |st: [f64; 4]| -> [f64; 4] {
        let (kpp, npp) = kn_accel(st[0], st[1], st[2], st[3]);
        [st[2], st[3], kpp, npp]
    };
    for _ in 0..steps {
        let y = [s.k, s.n, s.kp, s.np];
        let k1 = f(y);
        let add = |a: [f64; 4], b: [f64; 4], c: f64| {
            [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]]
        };
        let k2 = f(add(y, k1, h / 2.0));
        let k3 = f(add(y, k2, h / 2.0));
        let k4 = f(add(y, k3, h));
        let mut yn = y;
        for i in 0..4 {
            yn[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s = KnState { t: s.t + h, k: yn[0], n: yn[1], kp: yn[2], np: yn[3] };
        out.push(s);
    }
    Ok(out)
}

/// The symmetrized invariants (U, V) from pointwise (S, K, N).
pub fn uv_from_kn(s: f64, k: f64, n: f64) -> Result<(f64, f64)> {
    let den = (s - 1.0) * (s - 2.0) * (2.0 * s - 1.0) * (s + 1.0);
    if den.abs() < 1e-12 || (s - 1.0).abs() < 1e-12 {
        return Err(Error::SingularS);
    }
    let u = (s * n - k) / (s - 1.0);
    let q = s * s - s + 1.0;
    let v = q * q * (n - k) / (3.0 * den);
    Ok((u, v))
}

/// The first integrals written in the invariants (X, U, V) and their
/// X-derivatives.
pub fn xuv_integrals(x: f64, u: f64, v: f64, du_dx: f64, dv_dx: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Err(Error::SingularX);
    }
    let w = 4.0 * x - 9.0;
    let i1 = 9.0 * u * w * dv_dx + 9.0 * w / x * v * v - 6.0 * u * (x - 9.0) / x * v + u * u;
    let i2 = 27.0 * u * u * w * dv_dx + 27.0 * w * w / (x * x) * v.powi(3)
        - 27.0 * u * w / x * v * v
        - 9.0 * u / x * (2.0 * x * u - 18.0 * u + (12.0 * x * x - 27.0 * x) * du_dx) * v
        + 2.0 * u.powi(3);
    Ok((i1, i2))
}

// ---------------------------------------------------------------------------
// the Z-system
// ---------------------------------------------------------------------------

/// Numerator and denominator of Z' in the Z-system:
/// Z' = P(X, Z, F, F') / (3X(4X-9) [3(4X-9)Z - 4X]).
pub fn z_prime_parts<R: RingElem>(x: &R, z: &R, f: &R, f1: &R) -> (R, R) {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9); // 4X - 9
    let p = -(w.clone() * c(9) * (x.clone() * w.clone() * f.clone() + c(6)) * z.clone() * z.clone())
        + x.clone() * c(3) * (x.clone() * w.clone() * f.clone() * c(5) + c(18)) * z.clone()
        + x.clone()
            * x.clone()
            * (x.clone() * w.clone() * f.clone() * f.clone() * c(6)
                + (x.clone() * c(14) - c(18)) * f.clone()
                + x.clone() * w.clone() * f1.clone() * c(3));
    let q = x.clone() * w.clone() * c(3) * (w * z.clone() * c(3) - x.clone() * c(4));
    (p, q)
}

/// Coefficients (c2, c1, c0) of the first equation of the Z-system,
/// c2 Z'' + c1(Z) Z' + c0(Z) = 0.
pub fn z_system_first<R: RingElem>(x: &R, z: &R, f: &R, f1: &R) -> (R, R, R) {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9);
    let c2 = x.clone() * x.clone() * w.clone() * c(9);
    let c1 = x.clone() * w.clone() * z.clone() * c(18)
        + x.clone() * c(3) * (x.clone() * w.clone() * f.clone() * c(9) + x.clone() * c(10) + c(18));
    let c0 = (x.clone() * w.clone() * f.clone() * c(18) + c(81)) * z.clone() * z.clone()
        + (x.clone() * x.clone() * w.clone() * f.clone() * f.clone() * c(18)
            + x.clone() * (x.clone() * c(2) + c(9)) * f.clone() * c(12)
            - c(54)
            + x.clone() * x.clone() * w.clone() * f1.clone() * c(9))
            * z.clone()
        + x.clone() * x.clone() * f.clone() * c(2);
    (c2, c1, c0)
}

/// Coefficients of the second equation of the Z-system.
pub fn z_system_second<R: RingElem>(x: &R, z: &R, f: &R, _f1: &R) -> (R, R, R) {
    let c = |n: i64| x.const_like(n);
    let w = x.clone() * c(4) - c(9);
    let c2 = x.clone() * x.clone() * x.clone() * w.clone() * c(9);
    let c1 = x.clone() * w.clone() * w.clone() * z.clone() * z.clone() * c(27)
        - x.clone() * x.clone() * w.clone() * z.clone() * c(18)
        + x.clone() * x.clone() * c(3) * (x.clone() * w.clone() * f.clone() * c(9) + x.clone() * c(10) + c(18));
    let c0 = w.clone() * c(27) * (x.clone() * w.clone() * f.clone() + c(6)) * z.ring_powi(3)
        - x.clone() * c(27) * (x.clone() * w.clone() * f.clone() + c(3)) * z.clone() * z.clone()
        - x.clone() * c(18) * (x.clone() * (x.clone() - c(9)) * f.clone() + c(3)) * z.clone()
        + x.ring_powi(3) * f.clone() * c(2);
    (c2, c1, c0)
}

/// Z' and Z'' at a point of the Z-system, with the residual pair of both
/// defining equations re-evaluated at the returned values.
pub fn eqz_system(x: f64, z: f64, f: f64, f1: f64) -> Result<(f64, f64, (f64, f64))> {
    if x == 0.0 || (4.0 * x - 9.0).abs() < 1e-12 {
        return Err(Error::SingularX);
    }
    let sigma = 3.0 * (4.0 * x - 9.0) * z - 4.0 * x;
    if sigma.abs() < 1e-10 {
        return Err(Error::SigmaLocus);
    }
    let (p, q) = z_prime_parts(&x, &z, &f, &f1);
    let zp = p / q;
    let (c2, c1, c0) = z_system_first(&x, &z, &f, &f1);
    let zpp = -(c1 * zp + c0) / c2;
    let (d2, d1, d0) = z_system_second(&x, &z, &f, &f1);
    let res1 = c2 * zpp + c1 * zp + c0;
    let res2 = d2 * zpp + d1 * zp + d0;
    Ok((zp, zpp, (res1, res2)))
}

// ---------------------------------------------------------------------------
// Cartan normalization of catalog webs
// ---------------------------------------------------------------------------

/// Chart produced by normalizing a linear web with symmetry at a base point:
/// evaluates S(t) by an implicit jet solve of the web equation written in the
/// additively normalized leaf parameters.
struct CartanChart {
    web: LinearWeb3,
    t0s: [f64; 3],
}

impl CartanChart {
    /// Scalar continuation for the third normalized parameter at offset u.
    fn third_at(&self, u: f64) -> Result<f64> {
        let mut a3 = 0.0;
        let steps = (u.abs() / 0.05).ceil().max(1.0) as usize;
        for i in 1..=steps {
            let ui = u * i as f64 / steps as f64;
            a3 = newton_f64(
                |v| self.web_residual(&Jet1::constant(ui, v.order(), ui), v),
                a3,
                1e-14,
                60,
            )?;
        }
        Ok(a3)
    }

    fn web_residual(&self, u: &Jet1<f64>, v: &Jet1<f64>) -> Result<Jet1<f64>> {
        let order = u.order().min(v.order());
        let zero = Jet1::constant(0.0, order, 0.0);
        let t1 = self.web.families[0].flow().gamma_jet(self.t0s[0], &zero)?;
        let t2 = self.web.families[1].flow().gamma_jet(self.t0s[1], &u.truncate(order))?;
        let t3 = self.web.families[2].flow().gamma_jet(self.t0s[2], &v.truncate(order))?;
        self.web.web_det_jets(&[t1, t2, t3])
    }
}

impl ProfileFn for CartanChart {
    fn s_jet(&self, t: f64, order: usize) -> Result<Jet1<f64>> {
        let a3 = self.third_at(t)?;
        let g = implicit_jet_solve(
            |u: &Jet1<f64>, v: &Jet1<f64>| self.web_residual(u, v),
            t,
            a3,
            order + 1,
        )?;
        let gp = g.derivative();
        // slope of the third foliation in normalized coordinates
        gp.neg().div(&gp.neg().add_scalar(&1.0))
    }
}

/// Brings a symmetric linear web to Cartan normal form at a base point.
///
/// Foliation 1 supplies the first integral y~, foliation 2 supplies x~, both
/// reparametrized so the symmetry acts by unit translation; the third family
/// then has slope S(x~ - y~). The order-5 jet of S is obtained by implicit
/// jet propagation through the web equation and, when `validate` is set,
/// cross-checked against Richardson-extrapolated finite differences.
pub fn cartan_normalize(
    web: &LinearWeb3,
    base: (f64, f64),
    seeds: [f64; 3],
    validate: bool,
) -> Result<WebProfile> {
    let sym = web
        .symmetry
        .ok_or_else(|| Error::InvalidInput("web carries no symmetry".into()))?;
    let mut t0s = [0.0; 3];
    let mut dirs = Vec::with_capacity(3);
    for i in 0..3 {
        let t = web.families[i].solve_incidence(base.0, base.1, seeds[i])?;
        t0s[i] = t;
        dirs.push(web.families[i].direction(t)?);
    }
    for i in 0..3 {
        for j in i + 1..3 {
            if (dirs[i].0 * dirs[j].1 - dirs[i].1 * dirs[j].0).abs() < 1e-9 {
                return Err(Error::DegenerateWeb);
            }
        }
    }
    // the symmetry direction must be transverse to all three foliations
    let y = sym.geometric_field(base.0, base.1);
    let ny = (y.0 * y.0 + y.1 * y.1).sqrt();
    if ny < 1e-12 {
        return Err(Error::StationaryOrbit);
    }
    for d in &dirs {
        if (y.0 * d.1 - y.1 * d.0).abs() < 1e-9 * ny {
            return Err(Error::SymmetryTangent);
        }
    }
    // the flow must move every leaf parameter at the base
    for i in 0..3 {
        if web.families[i].flow().speed(t0s[i]).abs() < 1e-12 {
            return Err(Error::StationaryOrbit);
        }
    }
    let chart = CartanChart { web: web.clone(), t0s };
    if validate {
        validate_against_finite_differences(&chart)?;
    }
    make_profile(Rc::new(chart), 0.0)
}

/// Richardson-extrapolated central differences of S against the jet
/// derivatives, required to agree to relative 1e-6.
fn validate_against_finite_differences(chart: &CartanChart) -> Result<()> {
    let jet = chart.s_jet(0.0, 5)?;
    let sval = |t: f64| -> Result<f64> { Ok(*chart.s_jet(t, 0)?.value()) };
    let h0 = 0.1;
    for m in 1..=5 {
        let d = richardson_derivative(&sval, 0.0, m, h0)?;
        let jd = jet.derivative_value(m);
        let scale = 1.0f64.max(jd.abs());
        if (d - jd).abs() > 1e-6 * scale {
            return Err(Error::NoConvergence(format!(
                "jet/finite-difference mismatch at order {m}: {jd} vs {d}"
            )));
        }
    }
    Ok(())
}

/// Central-difference stencils of h^2 accuracy for derivatives 1..=5.
fn central_stencil(m: usize) -> &'static [(i32, f64)] {
    match m {
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        5 => &[(-3, -0.5), (-2, 2.0), (-1, -2.5), (1, 2.5), (2, -2.0), (3, 0.5)],
        _ => unreachable!(),
    }
}

/// Two-level Richardson extrapolation of the order-m central difference.
pub fn richardson_derivative<F>(f: &F, t: f64, m: usize, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fd = |h: f64| -> Result<f64> {
        let mut acc = 0.0;
        for &(k, w) in central_stencil(m) {
            acc += w * f(t + k as f64 * h)?;
        }
        Ok(acc / h.powi(m as i32))
    };
    let d1 = fd(h)?;
    let d2 = fd(h / 2.0)?;
    let d3 = fd(h / 4.0)?;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::Rational;

    fn expr_profile<F>(f: F) -> Rc<dyn ProfileFn>
    where
        F: Fn(f64, usize) -> Result<Jet1<f64>> + 'static,
    {
        Rc::new(f)
    }

    #[test]
    fn flat_flag_detection() {
        // S = e^t: log S = t, flat
        let p = make_profile(
            expr_profile(|t, o| Jet1::variable(t, o).exp()),
            0.0,
        )
        .unwrap();
        assert!(p.flat_flag());
        // S = e^{t^2} at t0 = 1: d2/dt2 log S = 2
        let p = make_profile(
            expr_profile(|t, o| {
                let tj = Jet1::variable(t, o);
                tj.mul(&tj).exp()
            }),
            1.0,
        )
        .unwrap();
        assert!(!p.flat_flag());
        // constant S = 2: flat
        let p = make_profile(expr_profile(|t, o| Ok(Jet1::constant(2.0, o, t))), 0.0).unwrap();
        assert!(p.flat_flag());
    }

    #[test]
    fn degenerate_normalization_rejected() {
        let r = make_profile(expr_profile(|t, o| Ok(Jet1::constant(1.0, o, t))), 0.0);
        assert!(matches!(r, Err(Error::DegenerateNormalization)));
    }

    #[test]
    fn x_values() {
        assert_eq!(
            x_of_s(&Rational::from_i64(3)),
            Rational::new(343, 108)
        );
        assert_eq!(x_of_s(&Rational::from_i64(2)), Rational::new(9, 4));
    }

    #[test]
    fn frame_construction_errors() {
        // S = 2 constant: S' = 0 -> no U, flagged before X issues
        let j = Jet1::constant(Rational::from_i64(2), 5, Rational::from_i64(0));
        assert!(matches!(invariant_frame_jet(&j), Err(Error::FlatWeb)));
        // S = e^t: U = 1/3 constant -> F = 0/..: U' = 0 means flat too; the
        // frame only exists for genuinely non-flat jets
        let t = Jet1::variable(0.5f64, 5);
        let j = t.exp().unwrap();
        // S = e^t has X'(t) != 0 but U' = 0: F = 0; the frame reports
        // StationaryX only when X' = 0, flatness is the caller's check
        let fr = invariant_frame_jet(&j).unwrap();
        assert!(fr.f.abs() < 1e-12);
        // S with S(t0) = 2 (the stationary-X value): rejected
        let s2 = Jet1::new(0.0f64, vec![2.0, 1.0, 0.3, 0.1, 0.05, 0.01]);
        assert!(matches!(invariant_frame_jet(&s2), Err(Error::StationaryX)));
    }

    #[test]
    fn henaut_symmetric_examples() {
        assert_eq!(henaut_symmetric_residual(5.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(henaut_symmetric_residual(2.0, 3.0, 1.0, 0.0), 9.0);
        // defining relation K = SN + (1-S) S'/(3S)
        let (s, sp, n) = (1.7, 0.9, 0.4);
        let k = s * n + (1.0 - s) * sp / (3.0 * s);
        assert!(henaut_symmetric_residual(s, sp, k, n).abs() < 1e-15);
    }

    #[test]
    fn s3_orbit_of_constants() {
        // constant S = 2: orbit values {2, 1/2, 2, 1/2, -1, -1}
        let j = Jet1::constant(Rational::from_i64(2), 5, Rational::from_i64(0));
        let orbit = s3_orbit_jets(&j).unwrap();
        let vals: Vec<Rational> = orbit.iter().map(|o| o.value().clone()).collect();
        let expect: Vec<Rational> = [(2, 1), (1, 2), (2, 1), (1, 2), (-1, 1), (-1, 1)]
            .iter()
            .map(|&(n, d)| Rational::new(n, d))
            .collect();
        assert_eq!(vals, expect);
        // S = 3: {3, 1/3, 3/2, 2/3, -1/2, -2}
        let j = Jet1::constant(Rational::from_i64(3), 5, Rational::from_i64(0));
        let orbit = s3_orbit_jets(&j).unwrap();
        let vals: Vec<Rational> = orbit.iter().map(|o| o.value().clone()).collect();
        let expect: Vec<Rational> = [(3, 1), (1, 3), (3, 2), (2, 3), (-1, 2), (-2, 1)]
            .iter()
            .map(|&(n, d)| Rational::new(n, d))
            .collect();
        assert_eq!(vals, expect);
        // X agrees on every branch
        for o in &orbit {
            assert_eq!(x_of_s(o.value()), Rational::new(343, 108));
        }
    }

    #[test]
    fn kn_flow_conservation_examples() {
        // stationary state K = N = 1
        let s0 = KnState { t: 0.0, k: 1.0, n: 1.0, kp: 0.0, np: 0.0 };
        assert_eq!(s0.integrals(), (1.0, 2.0));
        let traj = kn_flow(s0, 1.0, 64).unwrap();
        let last = traj.last().unwrap();
        assert!((last.k - 1.0).abs() < 1e-12 && (last.n - 1.0).abs() < 1e-12);
        // zero state
        let z = KnState { t: 0.0, k: 0.0, n: 0.0, kp: 0.0, np: 0.0 };
        assert_eq!(z.integrals(), (0.0, 0.0));
        // K=1, N=0, K'=0, N'=1: I1(0) = 2, conserved to 1e-9 over [0,1]
        let s0 = KnState { t: 0.0, k: 1.0, n: 0.0, kp: 0.0, np: 1.0 };
        assert_eq!(s0.integrals().0, 2.0);
        let traj = kn_flow(s0, 1.0, 400).unwrap();
        for st in &traj {
            let (i1, i2) = st.integrals();
            assert!((i1 - 2.0).abs() < 1e-9 * 2.0, "{i1}");
            assert!((i2 - s0.integrals().1).abs() < 1e-9 * (1.0 + i2.abs()));
        }
        assert!(matches!(kn_flow(s0, 1.0, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn uv_examples() {
        // K = N: V = 0, U = N
        let (u, v) = uv_from_kn(1.7, 0.6, 0.6).unwrap();
        assert!((u - 0.6).abs() < 1e-14 && v.abs() < 1e-14);
        // S = 3, K = 0, N = 1: U = 3/2, V = 49/120
        let (u, v) = uv_from_kn(3.0, 0.0, 1.0).unwrap();
        assert!((u - 1.5).abs() < 1e-14);
        assert!((v - 49.0 / 120.0).abs() < 1e-14);
        assert!(matches!(uv_from_kn(2.0, 1.0, 1.0), Err(Error::SingularS)));
    }

    #[test]
    fn xuv_examples() {
        let (i1, i2) = xuv_integrals(1.0, 0.0, 1.0, 0.3, 0.7).unwrap();
        assert_eq!(i1, -45.0);
        assert_eq!(i2, 675.0);
        let (i1, i2) = xuv_integrals(2.0, 0.0, 0.0, 0.1, 0.2).unwrap();
        assert_eq!((i1, i2), (0.0, 0.0));
        assert!(matches!(xuv_integrals(0.0, 1.0, 1.0, 0.0, 0.0), Err(Error::SingularX)));
    }

    #[test]
    fn eqz_examples() {
        // X = 3, F = F' = 0, Z = 1 -> Z' = 0, residuals 0
        let (zp, _zpp, (r1, r2)) = eqz_system(3.0, 1.0, 0.0, 0.0).unwrap();
        assert!(zp.abs() < 1e-12, "{zp}");
        assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9);
        assert!(matches!(eqz_system(2.25, 1.0, 0.0, 0.0), Err(Error::SingularX)));
        // sigma locus: Z = 4X/(3(4X-9))
        let x = 3.0f64;
        let z = 4.0 * x / (3.0 * (4.0 * x - 9.0));
        assert!(matches!(eqz_system(x, z, 0.5, 0.5), Err(Error::SigmaLocus)));
    }
}
