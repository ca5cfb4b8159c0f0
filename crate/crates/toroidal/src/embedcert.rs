//! Embeddedness certificate for `Y = X + φN` over the bent unduloid: the
//! graph stays inside the tube `|φ| < r₀x`, the leaves `X + rxN` for
//! `|r| ≤ r₀` have star-shaped cross-sections and stay immersed, and the
//! base normal is transverse to `Y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{cross3, dot3, jet_perturbed, SurfaceJet, TorusGrid};
use crate::{Error, Result, SymField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub r0_used: f64,
    /// `min 1 − |r₂/r₁|` over `t` and `r = ±r₀`.
    pub star_shape_margin: f64,
    /// Smallest of `N·Y_t∧Y_θ / (|X_t||X_θ|)` over the graph and the two
    /// extreme leaves.
    pub normal_proj_min: f64,
    /// `min (r₀ − |φ|/x)`.
    pub containment_margin: f64,
    pub passed: bool,
}

/// `min_t 1 − |r₂/r₁|` with `r₁ = 1 − r x z'`, `r₂ = −ε r x² z'`.
pub fn leaf_star_shape(grid: &TorusGrid<f64>, r: f64) -> Result<f64> {
    let tbl = &grid.tbl;
    let mut m = f64::INFINITY;
    for i in 0..tbl.n_t() {
        let (x, zp) = (tbl.x[i], tbl.zp[i]);
        let r1 = 1.0 - r * x * zp;
        if r1 <= 0.0 {
            return Err(Error::Domain(format!("r₁ = {r1} ≤ 0 at row {i} for r = {r}")));
        }
        let r2 = -grid.eps * r * x * x * zp;
        m = m.min(1.0 - (r2 / r1).abs());
    }
    Ok(m)
}

/// `min N·Y_t∧Y_θ / (|X_t||X_θ|)` with `N` the base normal.
fn normal_projection(base: &SurfaceJet<f64>, y: &SurfaceJet<f64>) -> f64 {
    base.pts
        .par_iter()
        .zip(&y.pts)
        .map(|(b, q)| dot3(&b.n, &cross3(&q.xt, &q.xth)) / (b.e.sqrt() * b.g.sqrt()))
        .reduce(|| f64::INFINITY, f64::min)
}

/// Normal projection of the leaf `X + r x N`.
pub fn leaf_immersion(grid: &TorusGrid<f64>, base: &SurfaceJet<f64>, r: f64) -> Result<f64> {
    let phi = SymField::from_fn(grid.n_t(), grid.n_theta, |i, _| r * grid.tbl.x[i]);
    let y = jet_perturbed(base, &phi)?;
    Ok(normal_projection(base, &y))
}

/// `min (r₀ − |φ|/x)`.
pub fn containment(grid: &TorusGrid<f64>, phi: &SymField, r0: f64) -> f64 {
    (0..phi.n_t())
        .map(|i| {
            let x = grid.tbl.x[i];
            phi.row(i).iter().fold(f64::INFINITY, |m, v| m.min(r0 - v.abs() / x))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Certificate for the graph of `phi` over `base`. Failure of any check is
/// reported through the margins rather than as an error.
pub fn certify(grid: &TorusGrid<f64>, base: &SurfaceJet<f64>, phi: &SymField, r0: f64) -> EmbeddingCertificate {
    let star = [r0, -r0]
        .iter()
        .map(|&r| leaf_star_shape(grid, r).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let leaves = [r0, -r0]
        .iter()
        .map(|&r| leaf_immersion(grid, base, r).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let graph = jet_perturbed(base, phi)
        .map(|y| normal_projection(base, &y))
        .unwrap_or(f64::NEG_INFINITY);
    let normal_proj_min = leaves.min(graph);
    let containment_margin = containment(grid, phi, r0);
    EmbeddingCertificate {
        r0_used: r0,
        star_shape_margin: star,
        normal_proj_min,
        containment_margin,
        passed: star > 0.0 && normal_proj_min > 0.0 && containment_margin > 0.0,
    }
}

/// `|N·N_t∧N_θ| = |ℒ𝒩 − ℳ²| / |X_t∧X_θ|` at every grid point.
pub fn normal_triple_product(base: &SurfaceJet<f64>) -> f64 {
    base.pts
        .iter()
        .map(|p| ((p.l * p.nn - p.m * p.m) / p.area).abs())
        .fold(0.0, f64::max)
}
