use num_traits::{One, Zero};

use super::jet::Jet1;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Truncated bivariate Taylor jet.
///
/// Triangular coefficient storage indexed by `(i, j)` with `i + j <= order`,
/// in the Taylor convention (mixed partials divided by `i! j!`). Symmetry of
/// mixed partials is structural: there is one slot per `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<T: Scalar> {
    base: (T, T),
    order: usize,
    c: Vec<T>, // (i, j) at offset tri(i + j) + j
}

fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

impl<T: Scalar> Jet2<T> {
    fn slots(order: usize) -> usize {
        tri(order + 1)
    }

    pub fn constant(value: T, order: usize, base: (T, T)) -> Self {
        let mut c = vec![T::zero(); Self::slots(order)];
        c[0] = value;
        Jet2 { base, order, c }
    }

    /// The coordinate jet `x` (first slot of the base).
    pub fn var_x(base: (T, T), order: usize) -> Self {
        let mut j = Self::constant(base.0.clone(), order, base);
        if order >= 1 {
            j.set(1, 0, T::one());
        }
        j
    }

    /// The coordinate jet `y` (second slot of the base).
    pub fn var_y(base: (T, T), order: usize) -> Self {
        let mut j = Self::constant(base.1.clone(), order, base);
        if order >= 1 {
            j.set(0, 1, T::one());
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> &(T, T) {
        &self.base
    }

    pub fn value(&self) -> &T {
        &self.c[0]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i + j > self.order {
            return T::zero();
        }
        self.c[tri(i + j) + j].clone()
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i + j <= self.order);
        self.c[tri(i + j) + j] = v;
    }

    /// Partial derivative value `d^(i+j) f / dx^i dy^j` (times factorials).
    pub fn partial_value(&self, i: usize, j: usize) -> T {
        let mut f = T::one();
        for k in 1..=i {
            f = f * T::from_i64(k as i64);
        }
        for k in 1..=j {
            f = f * T::from_i64(k as i64);
        }
        self.get(i, j) * f
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let mut out = Self::constant(T::zero(), order, self.base.clone());
        for i in 0..=order {
            for j in 0..=order - i {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    fn zip_order(&self, o: &Self) -> usize {
        self.order.min(o.order)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.zip_order(o);
        let mut out = Self::constant(T::zero(), n, self.base.clone());
        for i in 0..=n {
            for j in 0..=n - i {
                out.set(i, j, self.get(i, j) + o.get(i, j));
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.zip_order(o);
        let mut out = Self::constant(T::zero(), n, self.base.clone());
        for i in 0..=n {
            for j in 0..=n - i {
                out.set(i, j, self.get(i, j) - o.get(i, j));
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.c {
            *v = -v.clone();
        }
        out
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut out = self.clone();
        for v in &mut out.c {
            *v = v.clone() * s.clone();
        }
        out
    }

    pub fn add_scalar(&self, s: &T) -> Self {
        let mut out = self.clone();
        out.c[0] = out.c[0].clone() + s.clone();
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.zip_order(o);
        let mut out = Self::constant(T::zero(), n, self.base.clone());
        for i1 in 0..=n {
            for j1 in 0..=n - i1 {
                let a = self.get(i1, j1);
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..=n - i1 - j1 {
                    for j2 in 0..=n - i1 - j1 - i2 {
                        let b = o.get(i2, j2);
                        if b.is_zero() {
                            continue;
                        }
                        let cur = out.get(i1 + i2, j1 + j2);
                        out.set(i1 + i2, j1 + j2, cur + a.clone() * b);
                    }
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Result<Self> {
        if self.c[0].is_zero() {
            return Err(Error::DomainError("reciprocal of jet with zero value".into()));
        }
        let n = self.order;
        let inv0 = T::one() / self.c[0].clone();
        let mut r = Self::constant(inv0.clone(), n, self.base.clone());
        // solve (self * r)(i,j) = delta order by order in total degree
        for d in 1..=n {
            for j in 0..=d {
                let i = d - j;
                // sum over (a,b) < (i,j): self(i-a, j-b) * r(a,b), plus self(0,0)*r(i,j)
                let mut acc = T::zero();
                for a in 0..=i {
                    for b in 0..=j {
                        if a == i && b == j {
                            continue;
                        }
                        let s = self.get(i - a, j - b);
                        if s.is_zero() {
                            continue;
                        }
                        acc = acc + s * r.get(a, b);
                    }
                }
                r.set(i, j, -(inv0.clone() * acc));
            }
        }
        Ok(r)
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.truncate(self.order).recip()?))
    }

    /// Partial derivative in x as a jet of one order lower.
    pub fn partial_x(&self) -> Self {
        let n = self.order.saturating_sub(1);
        let mut out = Self::constant(T::zero(), n, self.base.clone());
        for i in 0..=n {
            for j in 0..=n - i {
                out.set(i, j, self.get(i + 1, j) * T::from_i64((i + 1) as i64));
            }
        }
        out
    }

    /// Partial derivative in y as a jet of one order lower.
    pub fn partial_y(&self) -> Self {
        let n = self.order.saturating_sub(1);
        let mut out = Self::constant(T::zero(), n, self.base.clone());
        for i in 0..=n {
            for j in 0..=n - i {
                out.set(i, j, self.get(i, j + 1) * T::from_i64((j + 1) as i64));
            }
        }
        out
    }
}

impl<T: Scalar> Jet1<T> {
    /// Evaluates this univariate jet on a bivariate argument (Horner), for
    /// curve functions applied to implicit parameter fields. The argument's
    /// value must equal this jet's base point analytically.
    pub fn compose2(&self, inner: &Jet2<T>) -> Jet2<T> {
        let n = self.order().min(inner.order());
        let mut dev = inner.truncate(n);
        let v = dev.value().clone();
        dev = dev.add_scalar(&-v);
        let mut acc = Jet2::constant(self.coeff(n), n, inner.base().clone());
        for k in (0..n).rev() {
            acc = acc.mul(&dev).add_scalar(&self.coeff(k));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_partials() {
        // f = x^2 y at (1, 2): check a few partials
        let b = (1.0f64, 2.0);
        let x = Jet2::var_x(b, 3);
        let y = Jet2::var_y(b, 3);
        let f = x.mul(&x).mul(&y);
        assert_eq!(*f.value(), 2.0);
        assert_eq!(f.partial_value(1, 0), 4.0); // 2xy
        assert_eq!(f.partial_value(0, 1), 1.0); // x^2
        assert_eq!(f.partial_value(2, 0), 4.0); // 2y
        assert_eq!(f.partial_value(1, 1), 2.0); // 2x
        assert_eq!(f.partial_value(2, 1), 2.0);
    }

    #[test]
    fn recip_and_div() {
        let b = (0.5f64, -0.25);
        let x = Jet2::var_x(b, 4);
        let y = Jet2::var_y(b, 4);
        let u = x.mul(&x).add(&y).add_scalar(&1.0); // x^2 + y + 1
        let r = u.recip().unwrap();
        let prod = u.mul(&r);
        assert!((prod.value() - 1.0).abs() < 1e-14);
        for i in 0..=3 {
            for j in 0..=3 - i {
                if i + j > 0 {
                    assert!(prod.get(i, j).abs() < 1e-13, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn compose_univariate_on_bivariate() {
        // g(t) = t^2 at t0 = 3; inner = x + y at (1, 2) -> (x+y)^2
        let t = Jet1::variable(3.0f64, 3);
        let g = t.mul(&t);
        let b = (1.0, 2.0);
        let inner = Jet2::var_x(b, 3).add(&Jet2::var_y(b, 3));
        let out = g.compose2(&inner);
        assert_eq!(*out.value(), 9.0);
        assert_eq!(out.partial_value(1, 0), 6.0);
        assert_eq!(out.partial_value(1, 1), 2.0);
        assert_eq!(out.partial_value(2, 0), 2.0);
    }
}
