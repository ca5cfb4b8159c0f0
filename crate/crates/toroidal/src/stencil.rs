//! Periodic central finite differences.

use serde::{Deserialize, Serialize};

use crate::Real;

/// Order of the central-difference stencil in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stencil {
    #[default]
    Second,
    Fourth,
}

#[inline]
fn at<T: Copy>(f: &[T], i: usize, off: isize) -> T {
    let n = f.len() as isize;
    f[((i as isize + off).rem_euclid(n)) as usize]
}

/// First derivative of a periodic sequence with spacing `h`.
pub fn d1<T: Real>(f: &[T], h: T, s: Stencil) -> Vec<T> {
    let two = T::lit(2.0);
    (0..f.len())
        .map(|i| match s {
            Stencil::Second => (at(f, i, 1) - at(f, i, -1)) / (two * h),
            Stencil::Fourth => {
                (T::lit(8.0) * (at(f, i, 1) - at(f, i, -1)) - (at(f, i, 2) - at(f, i, -2)))
                    / (T::lit(12.0) * h)
            }
        })
        .collect()
}

/// Second derivative of a periodic sequence with spacing `h`.
pub fn d2<T: Real>(f: &[T], h: T, s: Stencil) -> Vec<T> {
    let two = T::lit(2.0);
    (0..f.len())
        .map(|i| match s {
            Stencil::Second => (at(f, i, 1) - two * f[i] + at(f, i, -1)) / (h * h),
            Stencil::Fourth => {
                (T::lit(16.0) * (at(f, i, 1) + at(f, i, -1))
                    - (at(f, i, 2) + at(f, i, -2))
                    - T::lit(30.0) * f[i])
                    / (T::lit(12.0) * h * h)
            }
        })
        .collect()
}

/// Applies `op` along every column (`t`-direction) of a row-major grid.
pub fn along_t<T: Real>(
    values: &[T],
    n_t: usize,
    n_theta: usize,
    op: impl Fn(&[T]) -> Vec<T>,
) -> Vec<T> {
    let mut out = vec![T::zero(); values.len()];
    let mut col = vec![T::zero(); n_t];
    for k in 0..n_theta {
        for i in 0..n_t {
            col[i] = values[i * n_theta + k];
        }
        for (i, v) in op(&col).into_iter().enumerate() {
            out[i * n_theta + k] = v;
        }
    }
    out
}

/// Applies `op` along every row (`θ`-direction) of a row-major grid.
pub fn along_theta<T: Real>(
    values: &[T],
    n_theta: usize,
    op: impl Fn(&[T]) -> Vec<T>,
) -> Vec<T> {
    values.chunks(n_theta).flat_map(op).collect()
}

/// Fourier differentiation matrices on `n` (even) equispaced periodic
/// points. The Nyquist mode is annihilated by the first derivative and
/// scaled by `−(n/2)²` by the second.
#[derive(Debug, Clone)]
pub struct SpectralDiff<T> {
    n: usize,
    m1: Vec<T>,
    m2: Vec<T>,
}

impl<T: Real> SpectralDiff<T> {
    pub fn new(n: usize) -> Self {
        let h = T::lit(2.0) * T::PI() / T::of(n);
        let half = T::lit(0.5);
        let mut m1 = vec![T::zero(); n * n];
        let mut m2 = vec![T::zero(); n * n];
        for k in 0..n {
            for l in 0..n {
                let d = (k as isize - l as isize).rem_euclid(n as isize) as usize;
                if d == 0 {
                    m2[k * n + l] = -T::PI() * T::PI() / (T::lit(3.0) * h * h) - T::one() / T::lit(6.0);
                    continue;
                }
                let sign = if d % 2 == 0 { T::one() } else { -T::one() };
                let x = T::of(d) * h * half;
                m1[k * n + l] = half * sign / x.tan();
                m2[k * n + l] = -half * sign / (x.sin() * x.sin());
            }
        }
        Self { n, m1, m2 }
    }

    fn apply(&self, m: &[T], f: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|k| m[k * self.n..(k + 1) * self.n].iter().zip(f).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn d1(&self, f: &[T]) -> Vec<T> {
        self.apply(&self.m1, f)
    }

    pub fn d2(&self, f: &[T]) -> Vec<T> {
        self.apply(&self.m2, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn err(n: usize, s: Stencil, second: bool) -> f64 {
        let h = 2.0 * PI / n as f64;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let d = if second { d2(&f, h, s) } else { d1(&f, h, s) };
        (0..n)
            .map(|i| {
                let x = i as f64 * h;
                let exact = if second { -x.sin() } else { x.cos() };
                (d[i] - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn observed_orders() {
        for (s, p) in [(Stencil::Second, 2.0), (Stencil::Fourth, 4.0)] {
            for second in [false, true] {
                let o = (err(32, s, second) / err(64, s, second)).log2();
                assert!((o - p).abs() < 0.1, "{s:?} {second}: {o}");
            }
        }
    }

    #[test]
    fn spectral_is_exact_on_trigonometric_polynomials() {
        let n = 16;
        let sd = SpectralDiff::<f64>::new(n);
        let th: Vec<f64> = (0..n).map(|k| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect();
        let f: Vec<f64> = th.iter().map(|t| (3.0 * t).sin() + (8.0 * t).cos()).collect();
        let g1 = sd.d1(&f);
        let g2 = sd.d2(&f);
        for (k, t) in th.iter().enumerate() {
            assert!((g1[k] - 3.0 * (3.0 * t).cos()).abs() < 1e-12);
            assert!((g2[k] + 9.0 * (3.0 * t).sin() + 64.0 * (8.0 * t).cos()).abs() < 1e-11);
        }
    }
}
