//! One period of the conformal unduloid profile `(x_a, z_a)` together with
//! the even Jacobi kernel seeds and the weighted sup-norms measured along
//! the neck.

use serde::{Deserialize, Serialize};

use crate::elliptic::{height_h, period_tau, NeckSize};
use crate::field::SymField;
use crate::ode::{find_event, integrate_to_nodes, Tolerances};
use crate::{Error, Real, Result};

/// Tabulated profile on the periodic grid `t_i = −τ + i·dt`, `i < n_t`.
///
/// Index `n_t/2` is `t = 0`, index `0` is `t = ±τ` (identified).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable<T> {
    pub a: NeckSize<T>,
    pub gamma_a: T,
    pub tau: T,
    pub h: T,
    pub dt: T,
    pub t_grid: Vec<T>,
    pub x: Vec<T>,
    pub xp: Vec<T>,
    pub z: Vec<T>,
    pub zp: Vec<T>,
    pub w0: Vec<T>,
    pub w1: Vec<T>,
    pub y0p: Vec<T>,
    /// Integrator tolerance the table was produced with.
    pub rtol: T,
}

/// Grid size used when the caller does not choose one.
pub fn default_n_t<T: Real>(a: &NeckSize<T>) -> usize {
    if a.a() >= T::lit(0.01) {
        1024
    } else {
        let tau = period_tau(a).to_f64_lossy();
        256 * tau.ceil() as usize
    }
}

fn rhs<T: Real>(gamma: T) -> impl Fn(T, &[T; 5]) -> [T; 5] {
    let two = T::lit(2.0);
    move |_t, y: &[T; 5]| {
        let x = y[0];
        let x2 = x * x;
        let p = x2 + gamma * gamma / x2;
        [
            y[1],
            (T::one() - two * gamma) * x - two * x2 * x,
            gamma + x2,
            y[4],
            -two * p * y[3],
        ]
    }
}

fn initial<T: Real>(a: &NeckSize<T>) -> [T; 5] {
    [T::one() - a.a(), T::zero(), T::zero(), T::one(), T::zero()]
}

/// Integrates the profile and kernel-seed ODEs over `[0, τ_a]` on the half
/// grid and extends by parity.
pub fn solve_profile<T: Real>(a: NeckSize<T>, n_t: usize) -> Result<ProfileTable<T>> {
    solve_profile_with(a, n_t, &Tolerances::default())
}

pub fn solve_profile_with<T: Real>(
    a: NeckSize<T>,
    n_t: usize,
    tol: &Tolerances<T>,
) -> Result<ProfileTable<T>> {
    if n_t < 64 || n_t % 2 != 0 {
        return Err(Error::Grid(format!("N_t = {n_t} must be even and at least 64")));
    }
    let gamma = a.gamma();
    let tau = period_tau(&a);
    let h = height_h(&a);
    let dt = T::lit(2.0) * tau / T::of(n_t);
    let m = n_t / 2;
    let half_tau = T::lit(0.5) * tau;

    let mut nodes: Vec<T> = (1..m).map(|i| T::of(i) * dt).collect();
    nodes.push(tau);
    let mid_pos = nodes.partition_point(|&t| t < half_tau);
    let mid_is_node = nodes.get(mid_pos).is_some_and(|&t| t == half_tau);
    if !mid_is_node {
        nodes.insert(mid_pos, half_tau);
    }
    let y0 = initial(&a);
    let sol = integrate_to_nodes(&rhs(gamma), T::zero(), y0, &nodes, tol)?;
    let x_mid = sol[mid_pos][0];
    let mut half: Vec<[T; 5]> = Vec::with_capacity(m + 1);
    half.push(y0);
    for (j, s) in sol.into_iter().enumerate() {
        if mid_is_node || j != mid_pos {
            half.push(s);
        }
    }

    let mut tbl = ProfileTable {
        a,
        gamma_a: gamma,
        tau,
        h,
        dt,
        t_grid: Vec::with_capacity(n_t),
        x: Vec::with_capacity(n_t),
        xp: Vec::with_capacity(n_t),
        z: Vec::with_capacity(n_t),
        zp: Vec::with_capacity(n_t),
        w0: Vec::with_capacity(n_t),
        w1: Vec::with_capacity(n_t),
        y0p: Vec::with_capacity(n_t),
        rtol: tol.rtol,
    };
    for i in 0..n_t {
        let (s, sign) = if i >= m {
            (&half[i - m], T::one())
        } else {
            (&half[m - i], -T::one())
        };
        let x = s[0];
        let zp = gamma + x * x;
        tbl.t_grid.push(if i == m { T::zero() } else { -tau + T::of(i) * dt });
        tbl.x.push(x);
        tbl.xp.push(sign * s[1]);
        tbl.z.push(sign * s[2]);
        tbl.zp.push(zp);
        tbl.w0.push(s[3]);
        tbl.w1.push(zp / x);
        tbl.y0p.push(sign * s[4]);
    }
    tbl.validate(x_mid)?;
    Ok(tbl)
}

impl<T: Real> ProfileTable<T> {
    pub fn n_t(&self) -> usize {
        self.x.len()
    }

    /// Index of `t = 0`.
    pub fn center(&self) -> usize {
        self.n_t() / 2
    }

    /// `x''` from the profile equation.
    pub fn xpp(&self, i: usize) -> T {
        let x = self.x[i];
        (T::one() - T::lit(2.0) * self.gamma_a) * x - T::lit(2.0) * x * x * x
    }

    /// `p_a = x² + γ²/x²`.
    pub fn p(&self) -> Vec<T> {
        let g2 = self.gamma_a * self.gamma_a;
        self.x.iter().map(|&x| x * x + g2 / (x * x)).collect()
    }

    pub fn conformality_residual(&self) -> T {
        (0..self.n_t())
            .map(|i| (self.x[i] * self.x[i] - self.xp[i] * self.xp[i] - self.zp[i] * self.zp[i]).abs())
            .fold(T::zero(), T::max)
    }

    fn validate(&self, x_mid: T) -> Result<()> {
        let tol_c = T::lit(1e-9);
        let tol_x = T::lit(1e-8);
        let a = self.a.a();
        let r = self.conformality_residual();
        if r > tol_c {
            return Err(Error::Invariant {
                name: "conformality",
                detail: format!("residual {r}"),
            });
        }
        for (i, &x) in self.x.iter().enumerate() {
            if x < a - tol_x || x > T::one() - a + tol_x {
                return Err(Error::Invariant {
                    name: "range",
                    detail: format!("x[{i}] = {x}"),
                });
            }
        }
        let xe = self.x[0];
        if (xe - a).abs() > tol_x {
            return Err(Error::Invariant {
                name: "neck",
                detail: format!("x(τ) = {xe}, a = {a}"),
            });
        }
        let dm = (x_mid * x_mid - self.gamma_a).abs();
        if dm > tol_x {
            return Err(Error::Invariant {
                name: "half-period",
                detail: format!("|x(τ/2)² − γ| = {dm}"),
            });
        }
        Ok(())
    }

    /// Largest defect of the parity relations on mirrored samples. The seam
    /// row `t = ±τ` is skipped for `z`, which advances by `2h` per period.
    pub fn parity_defect(&self) -> T {
        let n = self.n_t();
        let mut d = T::zero();
        for i in 0..n {
            let j = (n - i) % n;
            if i != 0 {
                d = d.max((self.z[i] + self.z[j]).abs());
            }
            d = d
                .max((self.x[i] - self.x[j]).abs())
                .max((self.w0[i] - self.w0[j]).abs())
                .max((self.w1[i] - self.w1[j]).abs());
        }
        d
    }
}

/// `w⁺_{a,0}`: even solution of `y'' = −2p_a y` with `y(0) = 1`.
pub fn kernel_w0<T: Real>(tbl: &ProfileTable<T>) -> Vec<T> {
    tbl.w0.clone()
}

/// `w⁺_{a,1} = z'/x`.
pub fn kernel_w1<T: Real>(tbl: &ProfileTable<T>) -> Vec<T> {
    tbl.w1.clone()
}

/// First zero of `x'` after `t = 0`, found by the event detector, with the
/// value of `z` there. Independent of the closed-form period.
pub fn measure_period<T: Real>(a: NeckSize<T>) -> Result<(T, T)> {
    let tol = Tolerances::default();
    let t_max = T::lit(4.0) * period_tau(&a) + T::lit(10.0);
    let (t, y) = find_event(&rhs(a.gamma()), T::zero(), initial(&a), t_max, |_, y| y[1], &tol)?;
    Ok((t, y[2]))
}

/// Weighted-norm parameters `μ ∈ (1, 2)`, `δ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec<T> {
    pub mu: T,
    pub delta: T,
}

impl<T: Real> WeightedNormSpec<T> {
    pub fn new(mu: T, delta: T) -> Result<Self> {
        if !(mu > T::one() && mu < T::lit(2.0)) {
            return Err(Error::Domain(format!("μ = {mu} outside (1, 2)")));
        }
        if !(delta > T::zero()) {
            return Err(Error::Domain(format!("δ = {delta} must be positive")));
        }
        Ok(Self { mu, delta })
    }
}

impl<T: Real> Default for WeightedNormSpec<T> {
    fn default() -> Self {
        Self {
            mu: T::lit(1.5),
            delta: T::one(),
        }
    }
}

/// Row-wise maximum of `|f|` and its central differences up to order `k`.
fn row_local_max<T: Real>(f: &SymField<T>, dt: T, k: usize) -> Vec<T> {
    let (nt, nth) = (f.n_t(), f.n_theta());
    let dth = T::lit(2.0) * T::PI() / T::of(nth);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let g = |i: isize, j: isize| {
        f.get(
            i.rem_euclid(nt as isize) as usize,
            j.rem_euclid(nth as isize) as usize,
        )
    };
    (0..nt as isize)
        .map(|i| {
            let mut m = T::zero();
            for j in 0..nth as isize {
                let c = g(i, j);
                m = m.max(c.abs());
                if k >= 1 {
                    m = m
                        .max(((g(i + 1, j) - g(i - 1, j)) / (two * dt)).abs())
                        .max(((g(i, j + 1) - g(i, j - 1)) / (two * dth)).abs());
                }
                if k >= 2 {
                    m = m
                        .max(((g(i + 1, j) - two * c + g(i - 1, j)) / (dt * dt)).abs())
                        .max(((g(i, j + 1) - two * c + g(i, j - 1)) / (dth * dth)).abs())
                        .max(
                            ((g(i + 1, j + 1) - g(i + 1, j - 1) - g(i - 1, j + 1) + g(i - 1, j - 1))
                                / (four * dt * dth))
                                .abs(),
                        );
                }
            }
            m
        })
        .collect()
}

/// Discrete `‖f‖_{a,k,μ}`: `sup_s x(s)^(−μ) · max` over the window
/// `|t − s| ≤ δ` of `|f|` and its grid derivatives up to order `k`.
pub fn weighted_norm<T: Real>(
    f: &SymField<T>,
    tbl: &ProfileTable<T>,
    spec: &WeightedNormSpec<T>,
    k: usize,
) -> Result<T> {
    if k > 2 {
        return Err(Error::Domain(format!("derivative order {k} > 2")));
    }
    if spec.delta > tbl.tau {
        return Err(Error::Domain(format!(
            "window δ = {} exceeds the half-period {}",
            spec.delta, tbl.tau
        )));
    }
    let nt = tbl.n_t();
    if f.n_t() != nt {
        return Err(Error::Grid(format!("field has {} rows, table {nt}", f.n_t())));
    }
    let rows = row_local_max(f, tbl.dt, k);
    let w = (spec.delta / tbl.dt * (T::one() + T::lit(1e-12)))
        .floor()
        .to_f64_lossy() as isize;
    let mut best = T::zero();
    for i in 0..nt {
        let mut m = T::zero();
        for o in -w..=w {
            m = m.max(rows[(i as isize + o).rem_euclid(nt as isize) as usize]);
        }
        best = best.max(tbl.x[i].powf(-spec.mu) * m);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tbl(a: f64, n: usize) -> ProfileTable<f64> {
        solve_profile(NeckSize::new(a).unwrap(), n).unwrap()
    }

    #[test]
    fn cylinder_is_constant() {
        let t = tbl(0.5, 128);
        for i in 0..128 {
            assert!((t.x[i] - 0.5).abs() < 1e-14);
            assert!((t.w1[i] - 1.0).abs() < 1e-13);
            assert!((t.z[i] - 0.5 * t.t_grid[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn neck_and_parity() {
        let t = tbl(0.1, 512);
        assert!((t.x[0] - 0.1).abs() < 1e-8);
        assert!((t.x[t.center()] - 0.9).abs() < 1e-15);
        assert!(t.parity_defect() < 1e-10);
        assert!(t.conformality_residual() < 1e-9);
        assert_eq!(t.w0[t.center()], 1.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let a = NeckSize::new(0.2).unwrap();
        assert!(solve_profile(a, 32).is_err());
        assert!(solve_profile(a, 65).is_err());
        // τ/2 is not a node when N_t/2 is odd, yet the check still runs
        assert!(solve_profile(a, 66).is_ok());
    }

    #[test]
    fn event_period_matches_closed_form() {
        let a = NeckSize::new(0.25f64).unwrap();
        let (t, z) = measure_period(a).unwrap();
        assert!((t / period_tau(&a) - 1.0).abs() < 1e-8);
        assert!((z / height_h(&a) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn weighted_norm_basics() {
        let t = tbl(0.1, 256);
        let spec = WeightedNormSpec::default();
        let zero = SymField::zeros(256, 16);
        assert_eq!(weighted_norm(&zero, &t, &spec, 2).unwrap(), 0.0);
        let bad = WeightedNormSpec { mu: 1.5, delta: 10.0 };
        assert!(weighted_norm(&zero, &t, &bad, 0).is_err());
        assert!(WeightedNormSpec::new(2.0, 1.0).is_err());
    }
}
