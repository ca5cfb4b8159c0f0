//! Area, volume and `H`-energy of the bent unduloid, the `a`-derivative of
//! the unit energy, and the neck-size root `λ⁰(a_n) = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::NeckSize;
use crate::geometry::{cross3, dot3, jet_torus, mean_curvature, SurfaceJet, TorusGrid};
use crate::profile::solve_profile;
use crate::quad::{integrate, QuadOptions};
use crate::reduction::{FixedPointOptions, PrescribedCurvature, Reduction, ReductionResult};
use crate::{Error, ProfileTable, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub area: f64,
    /// `(1/3)∫X·X_t∧X_θ`, negative for the inward orientation.
    pub volume: f64,
    pub h_energy: f64,
    pub a_derivative_energy: Option<f64>,
}

fn cell_factor(jet: &SurfaceJet<f64>) -> f64 {
    jet.dt * 2.0 * PI / jet.n_theta as f64
}

/// `𝒜` and `𝒱` over one cell by the periodic trapezoidal rule.
pub fn area_volume(jet: &SurfaceJet<f64>) -> (f64, f64) {
    let w = cell_factor(jet);
    let (a, v) = jet.pts.iter().fold((0.0, 0.0), |(a, v), p| {
        let c = cross3(&p.xt, &p.xth);
        (a + p.area, v + dot3(&p.x, &c))
    });
    (a * w, v * w / 3.0)
}

/// `π∫x²z' dt` over one period: the volume enclosed by one period of the
/// straight unduloid.
pub fn revolution_volume(tbl: &ProfileTable) -> f64 {
    PI * tbl.dt * tbl.x.iter().zip(&tbl.zp).map(|(x, zp)| x * x * zp).sum::<f64>()
}

/// `m_H(ρ) = ∫₀¹ H(sρ) s² ds` with `H` frozen inside its floor.
pub fn m_h(h: &PrescribedCurvature, rho: f64) -> Result<f64> {
    let s0 = (h.floor / rho).min(1.0);
    let inner = h.radial_extended(h.floor) * s0.powi(3) / 3.0;
    if s0 >= 1.0 {
        return Ok(inner);
    }
    let outer = integrate(|s| h.radial_extended(s * rho) * s * s, s0, 1.0, QuadOptions::default())?;
    Ok(inner + outer)
}

/// `ℰ_H = 𝒜 + 2∫m_H(X) X·X_t∧X_θ` over one cell.
pub fn h_energy(jet: &SurfaceJet<f64>, h: &PrescribedCurvature) -> Result<f64> {
    let w = cell_factor(jet);
    let parts = jet
        .pts
        .par_iter()
        .map(|p| {
            let c = cross3(&p.xt, &p.xth);
            let m = m_h(h, dot3(&p.x, &p.x).sqrt())?;
            Ok(p.area + 2.0 * m * dot3(&p.x, &c))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(w * parts.iter().sum::<f64>())
}

/// Energies of the closed `n`-torus (one cell times `n`).
pub fn energy_report(jet: &SurfaceJet<f64>, n: usize, h: &PrescribedCurvature) -> Result<EnergyReport> {
    let (a, v) = area_volume(jet);
    let nf = n as f64;
    Ok(EnergyReport {
        area: nf * a,
        volume: nf * v,
        h_energy: nf * h_energy(jet, h)?,
        a_derivative_energy: None,
    })
}

fn torus(a: f64, n: usize, n_t: usize, n_theta: usize) -> Result<TorusGrid<f64>> {
    let tbl = Arc::new(solve_profile(NeckSize::new(a)?, n_t)?);
    TorusGrid::with_n(tbl, n_theta, n)
}

/// `∫[𝔐(X_{n,a}) − 1] x² w₀ (1 + εx sinθ) dt dθ` over one cell.
pub fn energy_a_derivative(n: usize, a: f64, n_t: usize, n_theta: usize) -> Result<f64> {
    let g = torus(a, n, n_t, n_theta)?;
    let m = mean_curvature(&jet_torus(&g)?)?;
    let tbl = &g.tbl;
    let dth = 2.0 * PI / n_theta as f64;
    let mut s = 0.0;
    for i in 0..n_t {
        let x = tbl.x[i];
        for k in 0..n_theta {
            let th = g.theta(k);
            s += (m.get(i, k) - 1.0) * x * x * tbl.w0[i] * (1.0 + g.eps * x * th.sin());
        }
    }
    Ok(s * tbl.dt * dth)
}

/// `∫(𝔐 − 1) N·∂_aX dA` over one cell, with `∂_aX` differenced at fixed
/// grid indices (fixed `t/τ_a`, `θ`) with step `rel·a`.
pub fn energy_a_derivative_variation(n: usize, a: f64, n_t: usize, n_theta: usize, rel: f64) -> Result<f64> {
    let d = rel * a;
    let j0 = jet_torus(&torus(a, n, n_t, n_theta)?)?;
    let jp = jet_torus(&torus(a + d, n, n_t, n_theta)?)?;
    let jm = jet_torus(&torus(a - d, n, n_t, n_theta)?)?;
    let m = mean_curvature(&j0)?;
    let s: f64 = j0
        .pts
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let (xp, xm) = (&jp.pts[idx].x, &jm.pts[idx].x);
            let xa = [(xp[0] - xm[0]) / (2.0 * d), (xp[1] - xm[1]) / (2.0 * d), (xp[2] - xm[2]) / (2.0 * d)];
            (m.values()[idx] - 1.0) * dot3(&p.n, &xa) * p.area
        })
        .sum();
    Ok(s * cell_factor(&j0))
}

/// `ℰ₁(X_{n,a}) = 𝒜 + 2𝒱` of the closed torus.
pub fn unit_energy(n: usize, a: f64, n_t: usize, n_theta: usize) -> Result<f64> {
    let g = torus(a, n, n_t, n_theta)?;
    let (ar, v) = area_volume(&jet_torus(&g)?);
    Ok(n as f64 * (ar + 2.0 * v))
}

/// `−(1/2n) ∂ℰ₁/∂a` by central differences with step `rel·a`.
pub fn energy_a_derivative_fd(n: usize, a: f64, n_t: usize, n_theta: usize, rel: f64) -> Result<f64> {
    let d = rel * a;
    let ep = unit_energy(n, a + d, n_t, n_theta)?;
    let em = unit_energy(n, a - d, n_t, n_theta)?;
    Ok(-(ep - em) / (2.0 * d) / (2.0 * n as f64))
}

/// `∫x² w₀ dt dθ` over one period.
pub fn kernel_mass(tbl: &ProfileTable) -> f64 {
    2.0 * PI * tbl.dt * tbl.x.iter().zip(&tbl.w0).map(|(x, w)| x * x * w).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub n_t: usize,
    pub n_theta: usize,
    pub fixed_point: FixedPointOptions,
    /// Number of sweep samples of `b`.
    pub sweep: usize,
    /// The sweep covers `[b_c/span, b_c·span]`.
    pub span: f64,
    pub max_bisect: usize,
    /// Bisection stops when the bracket in `b` is below `tol·|b_c|`.
    pub tol: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            n_t: 512,
            n_theta: 32,
            fixed_point: FixedPointOptions::default(),
            sweep: 9,
            span: 8.0,
            max_bisect: 30,
            tol: 1e-6,
        }
    }
}

/// One sample of the `λ⁰` sweep; `lambda0` is `None` when the reduction
/// failed at that neck size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub b: f64,
    pub a: f64,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchResult {
    pub n: usize,
    pub a_n: f64,
    pub b_n: f64,
    pub lambda0_res: f64,
    pub lambda1_res: f64,
    pub bracket: (f64, f64),
    /// `max |λ⁰|` over the converged sweep samples.
    pub lambda0_scale: f64,
    pub sweep: Vec<SweepPoint>,
    pub reduction: ReductionResult,
}

/// `a = b/(n^γ log n)`.
pub fn a_of_b(b: f64, n: usize, gamma: f64) -> f64 {
    let nf = n as f64;
    b / (nf.powf(gamma) * nf.ln())
}

/// Center of the leading-order bracket: `−γ b = A π^γ`.
pub fn b_center(h: &PrescribedCurvature) -> f64 {
    -h.amp * PI.powf(h.gamma) / h.gamma
}

/// Runs the full reduction on the `n`-torus with neck size `a`.
pub fn reduce_at(n: usize, a: f64, h: &PrescribedCurvature, o: &MatchOptions) -> Result<ReductionResult> {
    let g = torus(a, n, o.n_t, o.n_theta)?;
    Reduction::new(g, h, o.fixed_point)?.run()
}

fn sample(n: usize, b: f64, h: &PrescribedCurvature, o: &MatchOptions) -> SweepPoint {
    let a = a_of_b(b, n, h.gamma);
    let r = if a > 0.0 && a <= 0.5 {
        reduce_at(n, a, h, o)
    } else {
        Err(Error::Domain(format!("a = {a} outside (0, 1/2]")))
    };
    match r {
        Ok(r) => SweepPoint {
            b,
            a,
            lambda0: Some(r.lambda0),
            lambda1: Some(r.lambda1),
            error: None,
        },
        Err(e) => SweepPoint {
            b,
            a,
            lambda0: None,
            lambda1: None,
            error: Some(e.to_string()),
        },
    }
}

/// Samples `λ⁰` at `o.sweep` geometrically spaced `b`, in parallel.
pub fn lambda0_sweep(n: usize, h: &PrescribedCurvature, o: &MatchOptions) -> Vec<SweepPoint> {
    let bc = b_center(h).abs();
    let m = o.sweep.max(2);
    (0..m)
        .into_par_iter()
        .map(|j| {
            let s = -1.0 + 2.0 * j as f64 / (m - 1) as f64;
            sample(n, bc * o.span.powf(s), h, o)
        })
        .collect()
}

/// Finds `a_n` with `λ⁰ = 0` by bisection in `b` from the first sign
/// change of the sweep.
pub fn match_neck(n: usize, h: &PrescribedCurvature, o: &MatchOptions) -> Result<MatchResult> {
    let sweep = lambda0_sweep(n, h, o);
    let scale = sweep.iter().filter_map(|p| p.lambda0).fold(0.0f64, |m, v| m.max(v.abs()));
    let conv: Vec<(f64, f64)> = sweep.iter().filter_map(|p| p.lambda0.map(|l| (p.b, l))).collect();
    let pair = conv.windows(2).find(|w| w[0].1.signum() != w[1].1.signum());
    let Some(w) = pair else {
        return Err(Error::NoSignChange {
            sweep: sweep.iter().map(|p| (p.a, p.lambda0.unwrap_or(f64::NAN))).collect(),
        });
    };
    let (mut lo, mut flo) = w[0];
    let mut hi = w[1].0;
    let tol = o.tol * b_center(h).abs();
    for _ in 0..o.max_bisect {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let l = reduce_at(n, a_of_b(mid, n, h.gamma), h, o)?.lambda0;
        if l == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if l.signum() == flo.signum() {
            lo = mid;
            flo = l;
        } else {
            hi = mid;
        }
    }
    let b_n = 0.5 * (lo + hi);
    let a_n = a_of_b(b_n, n, h.gamma);
    let red = reduce_at(n, a_n, h, o)?;
    Ok(MatchResult {
        n,
        a_n,
        b_n,
        lambda0_res: red.lambda0,
        lambda1_res: red.lambda1,
        bracket: (a_of_b(lo, n, h.gamma), a_of_b(hi, n, h.gamma)),
        lambda0_scale: scale,
        sweep,
        reduction: red,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_h_of_unit_and_constant_curvature() {
        let one = PrescribedCurvature::unit();
        assert!((m_h(&one, 25.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!((m_h(&one, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
        // ∫_{1/ρ}^1 (1 − 1/(sρ)) s² ds + 0 · ρ⁻³/3 in closed form
        let rho = 4.0;
        let s0: f64 = 1.0 / rho;
        let exact = (1.0 - s0.powi(3)) / 3.0 - (1.0 - s0 * s0) / (2.0 * rho);
        assert!((m_h(&h, rho).unwrap() - exact).abs() < 1e-13);
    }

    #[test]
    fn bracket_center_and_substitution() {
        let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
        assert!((b_center(&h) - PI).abs() < 1e-15);
        let a = a_of_b(PI, 32, 1.0);
        assert!((a * 32.0 * 32f64.ln() - PI).abs() < 1e-13);
    }
}
