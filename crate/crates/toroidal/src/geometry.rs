//! Surface jets of the straight unduloid, the bent toroidal unduloid and
//! normal graphs over them, with fundamental forms and curvatures.
//!
//! The straight unduloid is `X = (x cosθ, x sinθ, z)`. Bending by `ε` gives
//! `X = (x cosθ, (1/ε + x sinθ) cos εz, (1/ε + x sinθ) sin εz)`, which is
//! invariant under `t ↦ t + 2τ` composed with the rotation by `2εh` about
//! the `x₁`-axis. All position and normal derivatives are exact (Taylor-jet
//! arithmetic on the profile's ODE derivatives); only a perturbation field
//! is differenced.

use std::sync::Arc;

use rayon::prelude::*;

use crate::field::SymField;
use crate::jet::{cross, deriv3, normalize, Jet, Vec3J};
use crate::profile::ProfileTable;
use serde::{Deserialize, Serialize};

use crate::stencil::{along_t, along_theta, d1, d2, SpectralDiff, Stencil};
use crate::{Error, Real, Result};

pub type V3<T> = [T; 3];

#[inline]
pub fn dot3<T: Real>(a: &V3<T>, b: &V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3<T: Real>(a: &V3<T>) -> T {
    dot3(a, a).sqrt()
}

#[inline]
fn lin<T: Real>(terms: &[(T, &V3<T>)]) -> V3<T> {
    let mut out = [T::zero(); 3];
    for (s, v) in terms {
        for d in 0..3 {
            out[d] = out[d] + *s * v[d];
        }
    }
    out
}

/// Rotation by `sigma` about the `x₁`-axis.
pub fn rotation<T: Real>(sigma: T) -> [[T; 3]; 3] {
    let (s, c) = (sigma.sin(), sigma.cos());
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, c, -s], [z, s, c]]
}

pub fn mat_vec<T: Real>(m: &[[T; 3]; 3], v: &V3<T>) -> V3<T> {
    [dot3(&m[0], v), dot3(&m[1], v), dot3(&m[2], v)]
}

/// Sampling of `Q = [−τ, τ) × [−π, π)` together with the bending parameter.
#[derive(Debug, Clone)]
pub struct TorusGrid<T> {
    pub tbl: Arc<ProfileTable<T>>,
    pub n_theta: usize,
    pub eps: T,
    pub n: Option<usize>,
}

impl<T: Real> TorusGrid<T> {
    fn check(tbl: &ProfileTable<T>, n_theta: usize, eps: T) -> Result<()> {
        if n_theta < 16 || !n_theta.is_power_of_two() {
            return Err(Error::Grid(format!(
                "N_theta = {n_theta} must be a power of two, at least 16"
            )));
        }
        if !(eps >= T::zero()) {
            return Err(Error::Domain(format!("ε = {eps} must be non-negative")));
        }
        let xmax = tbl.x.iter().fold(T::zero(), |m, &v| m.max(v));
        if eps * xmax >= T::one() {
            return Err(Error::Domain(format!("tube reaches the axis: ε·max x = {}", eps * xmax)));
        }
        Ok(())
    }

    /// The straight unduloid.
    pub fn straight(tbl: Arc<ProfileTable<T>>, n_theta: usize) -> Result<Self> {
        Self::check(&tbl, n_theta, T::zero())?;
        Ok(Self {
            tbl,
            n_theta,
            eps: T::zero(),
            n: None,
        })
    }

    pub fn with_eps(tbl: Arc<ProfileTable<T>>, n_theta: usize, eps: T) -> Result<Self> {
        Self::check(&tbl, n_theta, eps)?;
        Ok(Self {
            tbl,
            n_theta,
            eps,
            n: None,
        })
    }

    /// Closed torus of `n ≥ 4` periods, `ε = π/(n h_a)`.
    pub fn with_n(tbl: Arc<ProfileTable<T>>, n_theta: usize, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Domain(format!("n = {n} must be at least 4")));
        }
        let eps = T::PI() / (T::of(n) * tbl.h);
        Self::check(&tbl, n_theta, eps)?;
        Ok(Self {
            tbl,
            n_theta,
            eps,
            n: Some(n),
        })
    }

    pub fn n_t(&self) -> usize {
        self.tbl.n_t()
    }

    pub fn dt(&self) -> T {
        self.tbl.dt
    }

    pub fn dtheta(&self) -> T {
        T::lit(2.0) * T::PI() / T::of(self.n_theta)
    }

    pub fn theta(&self, k: usize) -> T {
        -T::PI() + T::of(k) * self.dtheta()
    }

    /// Taylor coefficients of `x` and `z` at row `i`.
    pub fn taylor_row(&self, i: usize) -> ([T; 4], [T; 4]) {
        profile_taylor(&self.tbl, i)
    }
}

/// Taylor coefficients `[f, f', f''/2, f'''/6]` of `x` and `z` at row `i`,
/// from the profile ODE.
pub fn profile_taylor<T: Real>(tbl: &ProfileTable<T>, i: usize) -> ([T; 4], [T; 4]) {
    let (x, xp, g) = (tbl.x[i], tbl.xp[i], tbl.gamma_a);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let xpp = tbl.xpp(i);
    let xppp = (T::one() - two * g) * xp - six * x * x * xp;
    let zpp = two * x * xp;
    let zppp = two * xp * xp + two * x * xpp;
    (
        [x, xp, xpp / two, xppp / six],
        [tbl.z[i], tbl.zp[i], zpp / two, zppp / six],
    )
}

/// Position, derivatives, normal and fundamental forms at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointJet<T> {
    pub x: V3<T>,
    pub xt: V3<T>,
    pub xth: V3<T>,
    pub xtt: V3<T>,
    pub xtth: V3<T>,
    pub xthth: V3<T>,
    pub n: V3<T>,
    pub nt: V3<T>,
    pub nth: V3<T>,
    /// `(N_tt, N_tθ, N_θθ)` when available analytically.
    pub n2: Option<[V3<T>; 3]>,
    pub e: T,
    pub f: T,
    pub g: T,
    pub l: T,
    pub m: T,
    pub nn: T,
    pub area: T,
}

impl<T: Real> PointJet<T> {
    fn with_forms(
        x: V3<T>,
        xt: V3<T>,
        xth: V3<T>,
        xtt: V3<T>,
        xtth: V3<T>,
        xthth: V3<T>,
        n: V3<T>,
    ) -> Self {
        let c = cross3(&xt, &xth);
        Self {
            x,
            xt,
            xth,
            xtt,
            xtth,
            xthth,
            n,
            nt: [T::zero(); 3],
            nth: [T::zero(); 3],
            n2: None,
            e: dot3(&xt, &xt),
            f: dot3(&xt, &xth),
            g: dot3(&xth, &xth),
            l: dot3(&n, &xtt),
            m: dot3(&n, &xtth),
            nn: dot3(&n, &xthth),
            area: norm3(&c),
        }
    }

    pub fn det(&self) -> T {
        self.e * self.g - self.f * self.f
    }

    pub fn mean_curvature(&self) -> T {
        (self.e * self.nn - T::lit(2.0) * self.f * self.m + self.g * self.l) / (T::lit(2.0) * self.det())
    }

    pub fn gauss_curvature(&self) -> T {
        (self.l * self.nn - self.m * self.m) / self.det()
    }

    /// First derivatives of the normal from the Weingarten equations.
    pub fn weingarten(&self) -> (V3<T>, V3<T>) {
        let d = self.det();
        let (e, f, g) = (self.e, self.f, self.g);
        let (l, m, nn) = (self.l, self.m, self.nn);
        let nt = lin(&[((m * f - l * g) / d, &self.xt), ((l * f - m * e) / d, &self.xth)]);
        let nth = lin(&[((nn * f - m * g) / d, &self.xt), ((m * f - nn * e) / d, &self.xth)]);
        (nt, nth)
    }
}

/// Analytic jet at one point from the Taylor coefficients of `x`, `z`.
pub fn point_jet<T: Real>(x4: [T; 4], z4: [T; 4], theta: T, eps: T) -> PointJet<T> {
    let xj = Jet::in_t(x4);
    let zj = Jet::in_t(z4);
    let th = Jet::theta_var(theta);
    let (s, c) = (th.sin(), th.cos());
    let pos: Vec3J<T> = if eps == T::zero() {
        [xj * c, xj * s, zj]
    } else {
        let r = Jet::constant(T::one() / eps) + xj * s;
        let ang = zj.scale(eps);
        [xj * c, r * ang.cos(), r * ang.sin()]
    };
    let xt = [pos[0].dt(), pos[1].dt(), pos[2].dt()];
    let xth = [pos[0].dtheta(), pos[1].dtheta(), pos[2].dtheta()];
    let nj = normalize(&cross(&xt, &xth));
    let mut p = PointJet::with_forms(
        deriv3(&pos, 0, 0),
        deriv3(&pos, 1, 0),
        deriv3(&pos, 0, 1),
        deriv3(&pos, 2, 0),
        deriv3(&pos, 1, 1),
        deriv3(&pos, 0, 2),
        deriv3(&nj, 0, 0),
    );
    p.nt = deriv3(&nj, 1, 0);
    p.nth = deriv3(&nj, 0, 1);
    p.n2 = Some([deriv3(&nj, 2, 0), deriv3(&nj, 1, 1), deriv3(&nj, 0, 2)]);
    p
}

/// Jets on the whole grid, row-major in `t`.
#[derive(Debug, Clone)]
pub struct SurfaceJet<T> {
    pub n_t: usize,
    pub n_theta: usize,
    pub dt: T,
    pub eps: T,
    pub pts: Vec<PointJet<T>>,
}

impl<T: Real> SurfaceJet<T> {
    #[inline]
    pub fn at(&self, i: usize, k: usize) -> &PointJet<T> {
        &self.pts[i * self.n_theta + k]
    }

    fn field(&self, f: impl Fn(&PointJet<T>) -> T) -> SymField<T> {
        let values = self.pts.iter().map(f).collect();
        SymField::from_values(self.n_t, self.n_theta, values).expect("grid sizes agree")
    }

    /// Smallest `ℰ𝒢 − ℱ²` and where it occurs.
    pub fn min_det(&self) -> (T, usize, usize) {
        let mut best = (T::infinity(), 0, 0);
        for i in 0..self.n_t {
            for k in 0..self.n_theta {
                let d = self.at(i, k).det();
                if d < best.0 {
                    best = (d, i, k);
                }
            }
        }
        best
    }

    fn check_immersion(&self) -> Result<()> {
        let (d, i, k) = self.min_det();
        if !(d > T::lit(1e-14)) {
            return Err(Error::Immersion {
                i,
                k,
                detail: format!("EG − F² = {d}"),
            });
        }
        Ok(())
    }
}

fn build<T: Real>(grid: &TorusGrid<T>, eps: T) -> Result<SurfaceJet<T>> {
    let nth = grid.n_theta;
    let rows: Vec<Vec<PointJet<T>>> = (0..grid.n_t())
        .into_par_iter()
        .map(|i| {
            let (x4, z4) = grid.taylor_row(i);
            (0..nth).map(|k| point_jet(x4, z4, grid.theta(k), eps)).collect()
        })
        .collect();
    let jet = SurfaceJet {
        n_t: grid.n_t(),
        n_theta: nth,
        dt: grid.dt(),
        eps,
        pts: rows.into_iter().flatten().collect(),
    };
    jet.check_immersion()?;
    Ok(jet)
}

/// Straight unduloid, ignoring `grid.eps`.
pub fn jet_unduloid<T: Real>(grid: &TorusGrid<T>) -> Result<SurfaceJet<T>> {
    build(grid, T::zero())
}

/// Bent unduloid at `grid.eps` (the straight one when `eps = 0`).
pub fn jet_torus<T: Real>(grid: &TorusGrid<T>) -> Result<SurfaceJet<T>> {
    let xmax = grid.tbl.x.iter().fold(T::zero(), |m, &v| m.max(v));
    if grid.eps * xmax >= T::one() {
        return Err(Error::Immersion {
            i: 0,
            k: 0,
            detail: "1 + ε x sinθ ≤ 0".into(),
        });
    }
    build(grid, grid.eps)
}

/// How a perturbation field is differenced: a central stencil in `t`, and
/// either the 4th-order stencil or Fourier differentiation in `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivScheme {
    pub t: Stencil,
    pub spectral_theta: bool,
}

impl DerivScheme {
    pub const FOURTH: Self = Self {
        t: Stencil::Fourth,
        spectral_theta: false,
    };

    /// The discretization of the limit Jacobi operator with stencil `t`.
    pub fn matching(t: Stencil) -> Self {
        Self {
            t,
            spectral_theta: true,
        }
    }
}

/// Derivatives `(φ_t, φ_θ, φ_tt, φ_tθ, φ_θθ)` by periodic 4th-order
/// central differences.
pub fn field_derivs<T: Real>(phi: &SymField<T>, dt: T) -> [Vec<T>; 5] {
    field_derivs_with(phi, dt, DerivScheme::FOURTH)
}

pub fn field_derivs_with<T: Real>(phi: &SymField<T>, dt: T, scheme: DerivScheme) -> [Vec<T>; 5] {
    let (nt, nth) = (phi.n_t(), phi.n_theta());
    let v = phi.values();
    let s = scheme.t;
    let ft = along_t(v, nt, nth, |c| d1(c, dt, s));
    let ftt = along_t(v, nt, nth, |c| d2(c, dt, s));
    if scheme.spectral_theta {
        let sd = SpectralDiff::new(nth);
        let fth = along_theta(v, nth, |r| sd.d1(r));
        let ftth = along_theta(&ft, nth, |r| sd.d1(r));
        let fthth = along_theta(v, nth, |r| sd.d2(r));
        [ft, fth, ftt, ftth, fthth]
    } else {
        let dth = T::lit(2.0) * T::PI() / T::of(nth);
        let f4 = Stencil::Fourth;
        let fth = along_theta(v, nth, |r| d1(r, dth, f4));
        let ftth = along_theta(&ft, nth, |r| d1(r, dth, f4));
        let fthth = along_theta(v, nth, |r| d2(r, dth, f4));
        [ft, fth, ftt, ftth, fthth]
    }
}

/// Normal graph `Y = X + φN` with 4th-order differences of `φ`.
pub fn jet_perturbed<T: Real>(base: &SurfaceJet<T>, phi: &SymField<T>) -> Result<SurfaceJet<T>> {
    jet_perturbed_with(base, phi, DerivScheme::FOURTH)
}

/// Normal graph `Y = X + φN` over a base jet carrying analytic normal
/// derivatives.
pub fn jet_perturbed_with<T: Real>(
    base: &SurfaceJet<T>,
    phi: &SymField<T>,
    scheme: DerivScheme,
) -> Result<SurfaceJet<T>> {
    if phi.n_t() != base.n_t || phi.n_theta() != base.n_theta {
        return Err(Error::Grid(format!(
            "field {}x{} on a {}x{} jet",
            phi.n_t(),
            phi.n_theta(),
            base.n_t,
            base.n_theta
        )));
    }
    let [ft, fth, ftt, ftth, fthth] = field_derivs_with(phi, base.dt, scheme);
    let two = T::lit(2.0);
    let mut pts = Vec::with_capacity(base.pts.len());
    for (idx, b) in base.pts.iter().enumerate() {
        let [ntt, ntth, nthth] = b.n2.ok_or_else(|| {
            Error::Domain("base jet lacks second normal derivatives".into())
        })?;
        let f = phi.values()[idx];
        let (a, c) = (ft[idx], fth[idx]);
        let y = lin(&[(T::one(), &b.x), (f, &b.n)]);
        let yt = lin(&[(T::one(), &b.xt), (a, &b.n), (f, &b.nt)]);
        let yth = lin(&[(T::one(), &b.xth), (c, &b.n), (f, &b.nth)]);
        let ytt = lin(&[(T::one(), &b.xtt), (ftt[idx], &b.n), (two * a, &b.nt), (f, &ntt)]);
        let ytth = lin(&[
            (T::one(), &b.xtth),
            (ftth[idx], &b.n),
            (a, &b.nth),
            (c, &b.nt),
            (f, &ntth),
        ]);
        let ythth = lin(&[(T::one(), &b.xthth), (fthth[idx], &b.n), (two * c, &b.nth), (f, &nthth)]);
        let cr = cross3(&yt, &yth);
        let area = norm3(&cr);
        if !(area > T::zero()) {
            return Err(Error::Immersion {
                i: idx / base.n_theta,
                k: idx % base.n_theta,
                detail: "Y_t ∧ Y_θ vanishes".into(),
            });
        }
        let n = [cr[0] / area, cr[1] / area, cr[2] / area];
        let mut p = PointJet::with_forms(y, yt, yth, ytt, ytth, ythth, n);
        let (nt, nth) = p.weingarten();
        p.nt = nt;
        p.nth = nth;
        pts.push(p);
    }
    let jet = SurfaceJet {
        n_t: base.n_t,
        n_theta: base.n_theta,
        dt: base.dt,
        eps: base.eps,
        pts,
    };
    jet.check_immersion()?;
    Ok(jet)
}

pub fn mean_curvature<T: Real>(jet: &SurfaceJet<T>) -> Result<SymField<T>> {
    jet.check_immersion()?;
    Ok(jet.field(|p| p.mean_curvature()))
}

pub fn gauss_curvature<T: Real>(jet: &SurfaceJet<T>) -> Result<SymField<T>> {
    jet.check_immersion()?;
    Ok(jet.field(|p| p.gauss_curvature()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::NeckSize;
    use crate::profile::solve_profile;

    fn grid(a: f64, eps: f64) -> TorusGrid<f64> {
        let t = Arc::new(solve_profile(NeckSize::new(a).unwrap(), 128).unwrap());
        TorusGrid::with_eps(t, 16, eps).unwrap()
    }

    #[test]
    fn rotation_basics() {
        let r = rotation(std::f64::consts::PI);
        assert!((r[1][1] + 1.0).abs() < 1e-15 && (r[2][2] + 1.0).abs() < 1e-15);
        assert!(r[1][2].abs() < 1e-15 && r[2][1].abs() < 1e-15);
        let r0 = rotation(0.0);
        assert_eq!(r0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn grid_validation() {
        let t = Arc::new(solve_profile(NeckSize::new(0.2).unwrap(), 64).unwrap());
        assert!(TorusGrid::straight(t.clone(), 12).is_err());
        assert!(TorusGrid::straight(t.clone(), 8).is_err());
        assert!(TorusGrid::with_n(t.clone(), 16, 3).is_err());
        assert!(TorusGrid::with_eps(t.clone(), 16, 2.0).is_err());
        let g = TorusGrid::with_n(t, 16, 8).unwrap();
        assert!((g.eps * 8.0 * g.tbl.h - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn weingarten_matches_analytic_normal_derivatives() {
        let j = jet_torus(&grid(0.2, 0.1)).unwrap();
        for p in j.pts.iter().step_by(37) {
            let (nt, nth) = p.weingarten();
            for d in 0..3 {
                assert!((nt[d] - p.nt[d]).abs() < 1e-10);
                assert!((nth[d] - p.nth[d]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let j = jet_torus(&grid(0.2, 0.1)).unwrap();
        let y = jet_perturbed(&j, &SymField::zeros(j.n_t, j.n_theta)).unwrap();
        for (p, q) in j.pts.iter().zip(&y.pts) {
            assert!((p.mean_curvature() - q.mean_curvature()).abs() < 1e-14);
            for d in 0..3 {
                assert!((p.x[d] - q.x[d]).abs() < 1e-14 && (p.n[d] - q.n[d]).abs() < 1e-14);
            }
        }
    }
}
