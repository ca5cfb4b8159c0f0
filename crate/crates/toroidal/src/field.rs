//! Doubly periodic grid functions on `[−τ, τ) × [−π, π)` and their θ-Fourier
//! modes.
//!
//! Storage is row-major in `t`: `values[i * n_theta + k]` is the sample at
//! `t_i = −τ + i·dt`, `θ_k = −π + k·dθ`. The even-in-t mirror of row `i` is
//! row `(n_t − i) mod n_t`; the reflection `θ ↦ π − θ` maps column `k` to
//! `(n_theta/2 − k) mod n_theta`.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymField<T> {
    n_t: usize,
    n_theta: usize,
    values: Vec<T>,
    pub even_t: bool,
    pub theta_mirror: bool,
}

impl<T: Real> SymField<T> {
    pub fn zeros(n_t: usize, n_theta: usize) -> Self {
        Self {
            n_t,
            n_theta,
            values: vec![T::zero(); n_t * n_theta],
            even_t: true,
            theta_mirror: true,
        }
    }

    pub fn from_fn(n_t: usize, n_theta: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_t * n_theta);
        for i in 0..n_t {
            for k in 0..n_theta {
                values.push(f(i, k));
            }
        }
        Self {
            n_t,
            n_theta,
            values,
            even_t: true,
            theta_mirror: true,
        }
    }

    /// Field constant in θ built from a `t`-profile.
    pub fn from_profile(p: &[T], n_theta: usize) -> Self {
        Self::from_fn(p.len(), n_theta, |i, _| p[i])
    }

    pub fn from_values(n_t: usize, n_theta: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_t * n_theta {
            return Err(Error::Grid(format!(
                "{} values for a {n_t}x{n_theta} grid",
                values.len()
            )));
        }
        Ok(Self {
            n_t,
            n_theta,
            values,
            even_t: true,
            theta_mirror: true,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> T {
        self.values[i * self.n_theta + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: T) {
        self.values[i * self.n_theta + k] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.n_t != other.n_t || self.n_theta != other.n_theta {
            return Err(Error::Grid(format!(
                "{}x{} vs {}x{}",
                self.n_t, self.n_theta, other.n_t, other.n_theta
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn mirror_t(&self, i: usize) -> usize {
        (self.n_t - i) % self.n_t
    }

    #[inline]
    pub fn mirror_theta(&self, k: usize) -> usize {
        (self.n_theta / 2 + self.n_theta - k) % self.n_theta
    }

    /// Largest deviation from the flagged symmetries.
    pub fn symmetry_defect(&self) -> T {
        let mut d = T::zero();
        for i in 0..self.n_t {
            for k in 0..self.n_theta {
                let v = self.get(i, k);
                if self.even_t {
                    d = d.max((v - self.get(self.mirror_t(i), k)).abs());
                }
                if self.theta_mirror {
                    d = d.max((v - self.get(i, self.mirror_theta(k))).abs());
                }
            }
        }
        d
    }

    /// Averages over the flagged symmetry group.
    pub fn symmetrize(&mut self) {
        let src = self.clone();
        let q = T::lit(0.25);
        let h = T::lit(0.5);
        for i in 0..self.n_t {
            let im = self.mirror_t(i);
            for k in 0..self.n_theta {
                let km = self.mirror_theta(k);
                let v = match (self.even_t, self.theta_mirror) {
                    (true, true) => {
                        q * (src.get(i, k) + src.get(im, k) + src.get(i, km) + src.get(im, km))
                    }
                    (true, false) => h * (src.get(i, k) + src.get(im, k)),
                    (false, true) => h * (src.get(i, k) + src.get(i, km)),
                    (false, false) => src.get(i, k),
                };
                self.set(i, k, v);
            }
        }
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Discrete `L²(Q)` inner product, `Σ f g · dt · dθ`.
    pub fn dot(&self, other: &Self, dt: T) -> T {
        let dth = T::lit(2.0) * T::PI() / T::of(self.n_theta);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            * dt
            * dth
    }

    pub fn l2_norm(&self, dt: T) -> T {
        self.dot(self, dt).sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let mut out = self.clone();
        for (o, &b) in out.values.iter_mut().zip(&other.values) {
            *o = f(*o, b);
        }
        out.even_t &= other.even_t;
        out.theta_mirror &= other.theta_mirror;
        out
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        for (o, &b) in self.values.iter_mut().zip(&other.values) {
            *o = *o + s * b;
        }
    }

    pub fn scale(&mut self, s: T) {
        self.values.iter_mut().for_each(|v| *v = *v * s);
    }

    /// Multiplies row `i` by `w[i]`.
    pub fn scale_rows(&self, w: &[T]) -> Self {
        Self::from_fn(self.n_t, self.n_theta, |i, k| w[i] * self.get(i, k))
    }
}

/// Real discrete Fourier basis on an equispaced θ-grid of even size.
///
/// Coefficient layout per row: `cos jθ` for `j = 0..=n/2` followed by
/// `sin jθ` for `j = 1..n/2`, `n` numbers in total.
#[derive(Debug, Clone)]
pub struct ThetaBasis {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ThetaBasis {
    pub fn new(n: usize) -> Self {
        let dth = 2.0 * std::f64::consts::PI / n as f64;
        let half = n / 2;
        let mut cos = vec![0.0; (half + 1) * n];
        let mut sin = vec![0.0; (half + 1) * n];
        for j in 0..=half {
            for k in 0..n {
                let th = -std::f64::consts::PI + k as f64 * dth;
                cos[j * n + k] = (j as f64 * th).cos();
                sin[j * n + k] = (j as f64 * th).sin();
            }
        }
        Self { n, cos, sin }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self, k: usize) -> f64 {
        -std::f64::consts::PI + k as f64 * 2.0 * std::f64::consts::PI / self.n as f64
    }

    #[inline]
    pub fn cos(&self, j: usize, k: usize) -> f64 {
        self.cos[j * self.n + k]
    }

    #[inline]
    pub fn sin(&self, j: usize, k: usize) -> f64 {
        self.sin[j * self.n + k]
    }

    /// `(cos coefficients [0..=n/2], sin coefficients [1..n/2])` of one row.
    pub fn analyze(&self, row: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half.max(1)];
        for j in 0..=half {
            let nu = if j == 0 || j == half { 1.0 } else { 2.0 };
            a[j] = nu / n as f64 * (0..n).map(|k| row[k] * self.cos(j, k)).sum::<f64>();
        }
        for (j, bj) in b.iter_mut().enumerate().take(half).skip(1) {
            *bj = 2.0 / n as f64 * (0..n).map(|k| row[k] * self.sin(j, k)).sum::<f64>();
        }
        (a, b)
    }

    pub fn synthesize(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let half = self.n / 2;
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, aj) in a.iter().enumerate() {
                s += aj * self.cos(j, k);
            }
            for (j, bj) in b.iter().enumerate().take(half).skip(1) {
                s += bj * self.sin(j, k);
            }
            *o = s;
        }
    }

    /// The θ-reflection-symmetric mode of index `j`: `cos jθ` for even `j`,
    /// `sin jθ` for odd `j`.
    pub fn sym_mode(&self, j: usize, k: usize) -> f64 {
        if j % 2 == 0 {
            self.cos(j, k)
        } else {
            self.sin(j, k)
        }
    }
}
