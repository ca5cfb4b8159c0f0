//! Truncated bivariate Taylor polynomials of total degree 3 in `(t, θ)`.
//!
//! A [`Jet`] stores Taylor coefficients `c_{pq}` of `dt^p dθ^q`, ordered by
//! total degree: `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), (3,0), …`.
//! Differentiation lowers the valid degree by one; callers read only the
//! coefficients that are still valid.

use std::ops::{Add, Mul, Neg, Sub};

use crate::Real;

pub const LEN: usize = 10;

#[inline]
pub const fn idx(p: usize, q: usize) -> usize {
    let d = p + q;
    d * (d + 1) / 2 + q
}

const PQ: [(usize, usize); LEN] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub c: [T; LEN],
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        let mut c = [T::zero(); LEN];
        c[0] = v;
        Self { c }
    }

    /// Univariate Taylor series in `t`: `c[m] = f^(m)(t₀)/m!`.
    pub fn in_t(c4: [T; 4]) -> Self {
        let mut c = [T::zero(); LEN];
        for (m, v) in c4.into_iter().enumerate() {
            c[idx(m, 0)] = v;
        }
        Self { c }
    }

    /// Univariate Taylor series in `θ`.
    pub fn in_theta(c4: [T; 4]) -> Self {
        let mut c = [T::zero(); LEN];
        for (m, v) in c4.into_iter().enumerate() {
            c[idx(0, m)] = v;
        }
        Self { c }
    }

    /// The coordinate `θ₀ + dθ`.
    pub fn theta_var(theta0: T) -> Self {
        Self::in_theta([theta0, T::one(), T::zero(), T::zero()])
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Partial derivative `∂^(p+q) / ∂t^p ∂θ^q` at the expansion point.
    pub fn deriv(&self, p: usize, q: usize) -> T {
        let f = |n: usize| (1..=n).fold(T::one(), |acc, m| acc * T::of(m));
        self.c[idx(p, q)] * f(p) * f(q)
    }

    pub fn dt(&self) -> Self {
        let mut c = [T::zero(); LEN];
        for (j, &(p, q)) in PQ.iter().enumerate() {
            if p + q < 3 {
                c[j] = T::of(p + 1) * self.c[idx(p + 1, q)];
            }
        }
        Self { c }
    }

    pub fn dtheta(&self) -> Self {
        let mut c = [T::zero(); LEN];
        for (j, &(p, q)) in PQ.iter().enumerate() {
            if p + q < 3 {
                c[j] = T::of(q + 1) * self.c[idx(p, q + 1)];
            }
        }
        Self { c }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v = *v * s);
        Self { c }
    }

    /// `f(self)` from the derivatives `[f, f', f'', f''']` at the value.
    pub fn compose(&self, d: [T; 4]) -> Self {
        let mut delta = *self;
        delta.c[0] = T::zero();
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let mut out = Self::constant(d[0]);
        for j in 1..LEN {
            out.c[j] = d[1] * delta.c[j] + d[2] / T::lit(2.0) * d2.c[j] + d[3] / T::lit(6.0) * d3.c[j];
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.c[0].sin(), self.c[0].cos());
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.c[0].sin(), self.c[0].cos());
        self.compose([c, -s, -c, s])
    }

    pub fn recip(&self) -> Self {
        let u = self.c[0];
        let r = T::one() / u;
        self.compose([r, -r * r, T::lit(2.0) * r * r * r, T::lit(-6.0) * r * r * r * r])
    }

    pub fn sqrt(&self) -> Self {
        let u = self.c[0];
        let s = u.sqrt();
        let h = T::lit(0.5);
        self.compose([
            s,
            h / s,
            -h * h / (s * u),
            T::lit(0.375) / (s * u * u),
        ])
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a = *a + b;
        }
        Self { c }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a = *a - b;
        }
        Self { c }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [T::zero(); LEN];
        for (i, &(p1, q1)) in PQ.iter().enumerate() {
            if self.c[i] == T::zero() {
                continue;
            }
            for (j, &(p2, q2)) in PQ.iter().enumerate() {
                if p1 + q1 + p2 + q2 <= 3 {
                    let k = idx(p1 + p2, q1 + q2);
                    c[k] = c[k] + self.c[i] * o.c[j];
                }
            }
        }
        Self { c }
    }
}

/// A 3-vector of jets.
pub type Vec3J<T> = [Jet<T>; 3];

pub fn dot<T: Real>(a: &Vec3J<T>, b: &Vec3J<T>) -> Jet<T> {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Real>(a: &Vec3J<T>, b: &Vec3J<T>) -> Vec3J<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn normalize<T: Real>(a: &Vec3J<T>) -> Vec3J<T> {
    let inv = dot(a, a).sqrt().recip();
    [a[0] * inv, a[1] * inv, a[2] * inv]
}

pub fn map3<T: Real>(a: &Vec3J<T>, f: impl Fn(&Jet<T>) -> Jet<T>) -> Vec3J<T> {
    [f(&a[0]), f(&a[1]), f(&a[2])]
}

/// Values of the partial `∂^(p+q)` of each component.
pub fn deriv3<T: Real>(a: &Vec3J<T>, p: usize, q: usize) -> [T; 3] {
    [a[0].deriv(p, q), a[1].deriv(p, q), a[2].deriv(p, q)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_closed_form() {
        // f = e^t · sin θ at (0.3, 0.7)
        let (t0, th0) = (0.3f64, 0.7f64);
        let e = t0.exp();
        let ft = Jet::in_t([e, e, e / 2.0, e / 6.0]);
        let g = Jet::theta_var(th0).sin();
        let h = ft * g;
        for (p, q) in PQ {
            let exact = e * match q % 4 {
                0 => th0.sin(),
                1 => th0.cos(),
                2 => -th0.sin(),
                _ => -th0.cos(),
            };
            assert!((h.deriv(p, q) - exact).abs() < 1e-12, "({p},{q})");
        }
    }

    #[test]
    fn sqrt_and_recip_invert() {
        let u = Jet::<f64>::in_t([2.0, 0.3, -0.1, 0.05]) + Jet::in_theta([0.0, 0.2, 0.4, -0.3]);
        let s = u.sqrt();
        let back = s * s;
        let one = u * u.recip();
        for j in 0..LEN {
            assert!((back.c[j] - u.c[j]).abs() < 1e-14);
            let e = if j == 0 { 1.0 } else { 0.0 };
            assert!((one.c[j] - e).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_commute() {
        let u = (Jet::<f64>::in_t([0.5, 1.0, 0.25, -0.5]) * Jet::theta_var(1.1).cos()).sqrt();
        let a = u.dt().dtheta();
        let b = u.dtheta().dt();
        assert!((a.value() - b.value()).abs() < 1e-14);
        assert!((a.value() - u.deriv(1, 1)).abs() < 1e-14);
        assert!((u.dt().dt().value() - u.deriv(2, 0)).abs() < 1e-14);
    }
}
