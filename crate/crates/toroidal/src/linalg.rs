//! Banded LU with partial pivoting and a small dense solver.

use crate::{Error, Result};

/// LU factorization of a banded matrix with `kl` sub- and `ku`
/// super-diagonals. Row interchanges widen the upper band to `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    /// Factors the matrix whose entry `(i, j)` is `entry(i, j)` for
    /// `|i − j|` within the band.
    pub fn factor(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                lu.set(i, j, entry(i, j));
            }
        }
        let scale = lu.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ub = kl + ku;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            for i in k + 1..=last {
                if lu.get(i, k).abs() > lu.get(p, k).abs() {
                    p = i;
                }
            }
            lu.piv[k] = p;
            let colmax = (k + ub).min(n - 1);
            if p != k {
                for j in k..=colmax {
                    let (a, b) = (lu.get(k, j), lu.get(p, j));
                    lu.set(k, j, b);
                    lu.set(p, j, a);
                }
            }
            let d = lu.get(k, k);
            if d.abs() <= 1e-300 || d.abs() <= scale * 1e-15 * f64::EPSILON {
                return Err(Error::Singular("banded LU"));
            }
            for i in k + 1..=last {
                let l = lu.get(i, k) / d;
                lu.set(i, k, l);
                if l != 0.0 {
                    for j in k + 1..=colmax {
                        let v = lu.get(i, j) - l * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + (j + self.kl - i)] = v;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ub = self.width - 1 - self.kl;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            for (i, xi) in x.iter_mut().enumerate().take((k + self.kl).min(n - 1) + 1).skip(k + 1) {
                *xi -= self.get(i, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for (j, xj) in x.iter().enumerate().take((k + ub).min(n - 1) + 1).skip(k + 1) {
                s -= self.get(k, j) * xj;
            }
            x[k] = s / self.get(k, k);
        }
        x
    }
}

/// Solves the dense system `a x = b` by Gaussian elimination with partial
/// pivoting; `a` is row-major `n × n`.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Grid(format!("{} entries for a {n}x{n} system", a.len())));
    }
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap_or(k);
        if a[p * n + k].abs() < 1e-300 {
            return Err(Error::Singular("dense solve"));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let l = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= l * a[k * n + j];
            }
            b[i] -= l * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k * n + k];
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn band_entry(i: usize, j: usize, seed: u64) -> f64 {
        let h = (i as u64 * 7919 + j as u64 * 104729 + seed) % 1000;
        h as f64 / 500.0 - 1.0
    }

    proptest! {
        #[test]
        fn banded_matches_dense(n in 3usize..40, kl in 0usize..3, ku in 0usize..3, seed in 0u64..1000) {
            let entry = |i: usize, j: usize| {
                if (i as isize - j as isize).unsigned_abs() > if i > j { kl } else { ku } {
                    0.0
                } else {
                    band_entry(i, j, seed) + if i == j { 0.1 } else { 0.0 }
                }
            };
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
            let mut dense = vec![0.0; n * n];
            for i in 0..n { for j in 0..n { dense[i * n + j] = entry(i, j); } }
            if let (Ok(lu), Ok(xd)) = (BandLu::factor(n, kl, ku, entry), dense_solve(dense.clone(), b.clone())) {
                let xb = lu.solve(&b);
                let res: f64 = (0..n).map(|i| {
                    ((0..n).map(|j| dense[i * n + j] * xb[j]).sum::<f64>() - b[i]).abs()
                }).fold(0.0, f64::max);
                let cond_guard = xd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                prop_assert!(res <= 1e-9 * (1.0 + cond_guard));
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let entry = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 };
        let lu = BandLu::factor(2, 1, 1, entry).unwrap();
        let x = lu.solve(&[2.0, 3.0]);
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(BandLu::factor(2, 1, 1, |_, _| 0.0).is_err());
    }
}
