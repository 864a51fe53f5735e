use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Truncated univariate Taylor jet.
///
/// Stores the coefficients of `f(t0 + e) = c[0] + c[1] e + ... + c[n] e^n`,
/// i.e. derivatives divided by factorials, so that composition and products
/// stay multiplication-only. The base point is carried along for clarity but
/// does not enter the arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1<T: Scalar> {
    base: T,
    c: Vec<T>,
}

impl<T: Scalar> Jet1<T> {
    pub fn new(base: T, coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least the value slot");
        Jet1 { base, c: coeffs }
    }

    pub fn constant(value: T, order: usize, base: T) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = value;
        Jet1 { base, c }
    }

    /// The identity jet `t` expanded at `t0`.
    pub fn variable(t0: T, order: usize) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = t0.clone();
        if order >= 1 {
            c[1] = T::one();
        }
        Jet1 { base: t0, c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn base(&self) -> &T {
        &self.base
    }

    pub fn value(&self) -> &T {
        &self.c[0]
    }

    pub fn coeff(&self, k: usize) -> T {
        self.c.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    /// k-th derivative value (coefficient times k!).
    pub fn derivative_value(&self, k: usize) -> T {
        let mut fact = T::one();
        for i in 1..=k {
            fact = fact * T::from_i64(i as i64);
        }
        self.coeff(k) * fact
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        Jet1 {
            base: self.base.clone(),
            c: self.c[..=n].to_vec(),
        }
    }

    fn zip_len(&self, o: &Self) -> usize {
        self.c.len().min(o.c.len())
    }

    pub fn add(&self, o: &Self) -> Self {
        let m = self.zip_len(o);
        let c = (0..m).map(|k| self.c[k].clone() + o.c[k].clone()).collect();
        Jet1 { base: self.base.clone(), c }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let m = self.zip_len(o);
        let c = (0..m).map(|k| self.c[k].clone() - o.c[k].clone()).collect();
        Jet1 { base: self.base.clone(), c }
    }

    pub fn neg(&self) -> Self {
        Jet1 {
            base: self.base.clone(),
            c: self.c.iter().map(|x| -x.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        Jet1 {
            base: self.base.clone(),
            c: self.c.iter().map(|x| x.clone() * s.clone()).collect(),
        }
    }

    pub fn add_scalar(&self, s: &T) -> Self {
        let mut c = self.c.clone();
        c[0] = c[0].clone() + s.clone();
        Jet1 { base: self.base.clone(), c }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let m = self.zip_len(o);
        let mut c = vec![T::zero(); m];
        for k in 0..m {
            let mut acc = T::zero();
            for j in 0..=k {
                acc = acc + self.c[j].clone() * o.c[k - j].clone();
            }
            c[k] = acc;
        }
        Jet1 { base: self.base.clone(), c }
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Jet1::constant(T::one(), self.order(), self.base.clone());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn recip(&self) -> Result<Self> {
        if self.c[0].is_zero() {
            return Err(Error::DomainError("reciprocal of jet with zero value".into()));
        }
        let m = self.order();
        let mut r = vec![T::zero(); m + 1];
        r[0] = T::one() / self.c[0].clone();
        for k in 1..=m {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + self.c[j].clone() * r[k - j].clone();
            }
            r[k] = -(r[0].clone() * acc);
        }
        Ok(Jet1 { base: self.base.clone(), c: r })
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.truncate(self.order()).recip()?))
    }

    /// `exp` of the jet; needs `exp` of the value in the coefficient field.
    pub fn exp(&self) -> Result<Self> {
        let v0 = self.c[0].exp_value().ok_or_else(|| {
            Error::DomainError(format!("exp({}) leaves the coefficient field", self.c[0]))
        })?;
        let m = self.order();
        let mut r = vec![T::zero(); m + 1];
        r[0] = v0;
        for k in 1..=m {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + T::from_i64(j as i64) * self.c[j].clone() * r[k - j].clone();
            }
            r[k] = acc / T::from_i64(k as i64);
        }
        Ok(Jet1 { base: self.base.clone(), c: r })
    }

    pub fn ln(&self) -> Result<Self> {
        let v0 = self.c[0].ln_value().ok_or_else(|| {
            Error::DomainError(format!("log({}) leaves the coefficient field", self.c[0]))
        })?;
        let m = self.order();
        let mut r = vec![T::zero(); m + 1];
        r[0] = v0;
        for k in 1..=m {
            let mut acc = self.c[k].clone() * T::from_i64(k as i64);
            for j in 1..k {
                acc = acc - T::from_i64(j as i64) * r[j].clone() * self.c[k - j].clone();
            }
            r[k] = acc / (T::from_i64(k as i64) * self.c[0].clone());
        }
        Ok(Jet1 { base: self.base.clone(), c: r })
    }

    /// `self^a` for a constant exponent, via `u v' = a u' v`.
    pub fn pow(&self, a: &T) -> Result<Self> {
        if self.c[0].is_zero() {
            return Err(Error::DomainError("pow of jet with zero value".into()));
        }
        let v0 = self.c[0].pow_value(a).ok_or_else(|| {
            Error::DomainError(format!("{}^{} leaves the coefficient field", self.c[0], a))
        })?;
        let m = self.order();
        let mut r = vec![T::zero(); m + 1];
        r[0] = v0;
        for k in 1..=m {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = a.clone() * T::from_i64(j as i64) - T::from_i64((k - j) as i64);
                acc = acc + w * self.c[j].clone() * r[k - j].clone();
            }
            r[k] = acc / (T::from_i64(k as i64) * self.c[0].clone());
        }
        Ok(Jet1 { base: self.base.clone(), c: r })
    }

    /// Derivative jet (one order lower).
    pub fn derivative(&self) -> Self {
        let m = self.order();
        if m == 0 {
            return Jet1::constant(T::zero(), 0, self.base.clone());
        }
        let c = (0..m)
            .map(|k| self.c[k + 1].clone() * T::from_i64((k + 1) as i64))
            .collect();
        Jet1 { base: self.base.clone(), c }
    }

    /// Antiderivative jet with given value at the base (one order higher).
    pub fn antiderivative(&self, value_at_base: T) -> Self {
        let m = self.order();
        let mut c = vec![T::zero(); m + 2];
        c[0] = value_at_base;
        for k in 0..=m {
            c[k + 1] = self.c[k].clone() / T::from_i64((k + 1) as i64);
        }
        Jet1 { base: self.base.clone(), c }
    }

    /// Composition `self(inner(.))`; requires `inner.value() == self.base`
    /// analytically (not checked: float bases rarely compare equal).
    pub fn compose(&self, inner: &Self) -> Self {
        let m = self.order().min(inner.order());
        let mut dev = inner.truncate(m);
        dev.c[0] = T::zero();
        let mut acc = Jet1::constant(self.coeff(m), m, inner.base.clone());
        for k in (0..m).rev() {
            acc = acc.mul(&dev).add_scalar(&self.c[k]);
        }
        acc
    }
}

/// Solves `phi(u, v(u)) = 0` for the jet of `v` at `u0`, given `v(u0) = v0`.
///
/// `phi` must evaluate on jets and respect truncation. Coefficients are found
/// order by order: with `v` known below order `k`, the `u^k` coefficient of
/// `phi` is linear in `v_k` with the constant slope `d(phi)/dv` at the base.
pub fn implicit_jet_solve<T, F>(phi: F, u0: T, v0: T, order: usize) -> Result<Jet1<T>>
where
    T: Scalar,
    F: Fn(&Jet1<T>, &Jet1<T>) -> Result<Jet1<T>>,
{
    let du = phi(
        &Jet1::constant(u0.clone(), 1, u0.clone()),
        &Jet1::variable(v0.clone(), 1),
    )?;
    let slope = du.coeff(1);
    if slope.abs_f64() < 1e-13 {
        return Err(Error::NoConvergence("implicit solve: d(phi)/dv ~ 0".into()));
    }
    let mut v = vec![T::zero(); order + 1];
    v[0] = v0.clone();
    for k in 1..=order {
        let u = Jet1::variable(u0.clone(), k);
        let vk = Jet1::new(v0.clone(), v[..=k].to_vec());
        let r = phi(&u, &vk)?;
        v[k] = -(r.coeff(k) / slope.clone());
    }
    Ok(Jet1::new(u0, v))
}

/// Scalar Newton iteration on an f64 jet-evaluable function.
///
/// Returns the root only when the residual actually converged; wandering
/// iterations (domain exits, flat spots) report `NoConvergence`.
pub fn newton_f64<F>(f: F, x0: f64, tol: f64, itmax: usize) -> Result<f64>
where
    F: Fn(&Jet1<f64>) -> Result<Jet1<f64>>,
{
    let mut x = x0;
    let mut scale: f64 = 1.0;
    for _ in 0..itmax {
        let j = f(&Jet1::variable(x, 1))?;
        let (fx, dfx) = (*j.value(), j.coeff(1));
        scale = scale.max(fx.abs());
        if !fx.is_finite() || !dfx.is_finite() || dfx == 0.0 {
            return Err(Error::NoConvergence("Newton: bad derivative".into()));
        }
        let mut step = fx / dfx;
        if step.abs() > 10.0 {
            step = 10.0 * step.signum();
        }
        x -= step;
        if !x.is_finite() {
            return Err(Error::NoConvergence("Newton: diverged".into()));
        }
        if step.abs() < tol * (1.0 + x.abs()) {
            let check = f(&Jet1::constant(x, 0, x))?;
            if check.value().abs() <= 1e-8 * (1.0 + scale) {
                return Ok(x);
            }
        }
    }
    Err(Error::NoConvergence("Newton: iteration limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::rational::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn exp_series_at_zero() {
        // exp(t) at t=0, order 2 -> (1, 1, 1/2), exact in rational mode
        let t = Jet1::variable(Rational::from_i64(0), 2);
        let e = t.exp().unwrap();
        assert_eq!(e.coeffs(), &[q(1, 1), q(1, 1), q(1, 2)]);
    }

    #[test]
    fn log_series_of_one_plus_t() {
        let t = Jet1::variable(Rational::from_i64(0), 3);
        let u = t.add_scalar(&Rational::from_i64(1));
        let l = u.ln().unwrap();
        assert_eq!(l.coeffs(), &[q(0, 1), q(1, 1), q(-1, 2), q(1, 3)]);
    }

    #[test]
    fn binomial_half_power() {
        let t = Jet1::variable(Rational::from_i64(0), 2);
        let u = t.add_scalar(&Rational::from_i64(1));
        let p = u.pow(&q(1, 2)).unwrap();
        assert_eq!(p.coeffs(), &[q(1, 1), q(1, 2), q(-1, 8)]);
    }

    #[test]
    fn pow_rejects_irrational_result() {
        let t = Jet1::variable(Rational::from_i64(0), 2);
        let u = t.add_scalar(&Rational::from_i64(2));
        assert!(u.pow(&q(1, 2)).is_err());
        assert!(u.pow(&q(3, 1)).is_ok());
    }

    #[test]
    fn log_of_nonpositive_value_is_domain_error() {
        let j = Jet1::constant(-1.0f64, 2, 0.0);
        assert!(matches!(j.ln(), Err(Error::DomainError(_))));
    }

    #[test]
    fn division_requires_nonzero_value() {
        let t = Jet1::variable(0.0f64, 3);
        assert!(t.recip().is_err());
    }

    #[test]
    fn polynomial_jet_matches_symbolic_derivatives() {
        // f(t) = 2t^3 - t + 5 at t0 = 1/3: exact derivative extraction
        let t0 = q(1, 3);
        let t = Jet1::variable(t0.clone(), 4);
        let f = t.powi(3).scale(&Rational::from_i64(2)).sub(&t).add_scalar(&Rational::from_i64(5));
        // f = 2/27*2 - 1/3 + 5 ... value: 2*(1/27) - 1/3 + 5 = 2/27 + 14/3
        assert_eq!(f.value().clone(), q(2, 27) + q(14, 3));
        // f' = 6t^2 - 1 = 6/9 - 1 = -1/3
        assert_eq!(f.derivative_value(1), q(-1, 3));
        // f'' = 12t = 4, f''' = 12
        assert_eq!(f.derivative_value(2), q(4, 1));
        assert_eq!(f.derivative_value(3), q(12, 1));
        assert_eq!(f.derivative_value(4), q(0, 1));
    }

    #[test]
    fn compose_and_implicit_solve() {
        // v(u) with v^2 - u = 0, v(1) = 1: v = sqrt(u); jet at u0=1
        let sol = implicit_jet_solve(
            |u: &Jet1<f64>, v: &Jet1<f64>| Ok(v.mul(v).sub(u)),
            1.0,
            1.0,
            4,
        )
        .unwrap();
        // sqrt(1+e) = 1 + e/2 - e^2/8 + e^3/16 - 5 e^4/128
        let expect = [1.0, 0.5, -0.125, 0.0625, -0.0390625];
        for (a, b) in sol.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn newton_finds_root_and_rejects_wandering() {
        let r = newton_f64(|x| Ok(x.mul(x).add_scalar(&-2.0)), 1.0, 1e-14, 60).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(newton_f64(|x| Ok(x.mul(x).add_scalar(&2.0)), 1.0, 1e-14, 60).is_err());
    }
}
