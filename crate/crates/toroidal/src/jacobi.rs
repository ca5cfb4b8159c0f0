//! The limit Jacobi operator `𝔏_a = ∂_tt + ∂_θθ + 2p_a`, the full operator
//! of the bent surface, kernel projections and the mode-by-mode projected
//! inverse.
//!
//! `𝔏_a` acts spectrally in `θ` and by periodic central differences in `t`.
//! The inverse works on fields even in `t` and symmetric under
//! `θ ↦ π − θ`: each symmetric θ-mode (`cos jθ`, `j` even; `sin jθ`, `j`
//! odd) gives a banded problem on the half period `t ∈ [0, τ]` with
//! reflecting ends. Modes 0 and 1 carry the constraint directions and are
//! solved as bordered systems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::ThetaBasis;
use crate::geometry::{cross3, dot3, field_derivs, SurfaceJet, TorusGrid};
use crate::linalg::BandLu;
use crate::stencil::{along_t, d2, Stencil};
use crate::{Error, ProfileTable, Result, SymField};

/// `𝔏_a` on a fixed grid.
#[derive(Debug, Clone)]
pub struct LimitOperator {
    pub n_t: usize,
    pub n_theta: usize,
    pub dt: f64,
    pub p: Vec<f64>,
    pub stencil: Stencil,
    basis: ThetaBasis,
}

impl LimitOperator {
    pub fn new(tbl: &ProfileTable, n_theta: usize, stencil: Stencil) -> Self {
        Self {
            n_t: tbl.n_t(),
            n_theta,
            dt: tbl.dt,
            p: tbl.p(),
            stencil,
            basis: ThetaBasis::new(n_theta),
        }
    }

    pub fn basis(&self) -> &ThetaBasis {
        &self.basis
    }

    /// `∂_θθ` applied spectrally to every row.
    pub fn theta_laplacian(&self, f: &SymField) -> SymField {
        let half = self.n_theta / 2;
        let mut out = SymField::zeros(self.n_t, self.n_theta);
        let mut row = vec![0.0; self.n_theta];
        for i in 0..self.n_t {
            let (mut a, mut b) = self.basis.analyze(f.row(i));
            for (j, aj) in a.iter_mut().enumerate() {
                *aj *= -((j * j) as f64);
            }
            for (j, bj) in b.iter_mut().enumerate().take(half) {
                *bj *= -((j * j) as f64);
            }
            self.basis.synthesize(&a, &b, &mut row);
            for (k, v) in row.iter().enumerate() {
                out.set(i, k, *v);
            }
        }
        out
    }

    pub fn apply(&self, f: &SymField) -> SymField {
        let ftt = along_t(f.values(), self.n_t, self.n_theta, |c| d2(c, self.dt, self.stencil));
        let mut out = self.theta_laplacian(f);
        for i in 0..self.n_t {
            for k in 0..self.n_theta {
                let idx = i * self.n_theta + k;
                let v = out.get(i, k) + ftt[idx] + 2.0 * self.p[i] * f.get(i, k);
                out.set(i, k, v);
            }
        }
        out.even_t = f.even_t;
        out.theta_mirror = f.theta_mirror;
        out
    }
}

/// Constraint directions `w_{a,0}(t)` and `w_{a,1}(t) sinθ` with their Gram
/// matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelPair {
    pub w0_field: SymField,
    pub w1_field: SymField,
    pub gram: [[f64; 2]; 2],
    pub dt: f64,
}

impl KernelPair {
    pub fn new(w0: &[f64], w1: &[f64], n_theta: usize, dt: f64) -> Self {
        let basis = ThetaBasis::new(n_theta);
        let w0_field = SymField::from_profile(w0, n_theta);
        let w1_field = SymField::from_fn(w1.len(), n_theta, |i, k| w1[i] * basis.sin(1, k));
        let g01 = w0_field.dot(&w1_field, dt);
        let gram = [
            [w0_field.dot(&w0_field, dt), g01],
            [g01, w1_field.dot(&w1_field, dt)],
        ];
        Self {
            w0_field,
            w1_field,
            gram,
            dt,
        }
    }

    /// Seeds straight from the profile table.
    pub fn from_table(tbl: &ProfileTable, n_theta: usize) -> Self {
        Self::new(&tbl.w0, &tbl.w1, n_theta, tbl.dt)
    }

    pub fn fields(&self) -> [&SymField; 2] {
        [&self.w0_field, &self.w1_field]
    }
}

/// Gram-solved kernel coefficients and the orthogonal remainder.
pub fn project_kernel(f: &SymField, ker: &KernelPair) -> (f64, f64, SymField) {
    let r0 = f.dot(&ker.w0_field, ker.dt);
    let r1 = f.dot(&ker.w1_field, ker.dt);
    let g = ker.gram;
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let c0 = (g[1][1] * r0 - g[0][1] * r1) / det;
    let c1 = (g[0][0] * r1 - g[1][0] * r0) / det;
    let mut rem = f.clone();
    rem.axpy(-c0, &ker.w0_field);
    rem.axpy(-c1, &ker.w1_field);
    (c0, c1, rem)
}

/// Reflection of an index on `0..=m` about both ends.
#[inline]
fn reflect(q: isize, m: isize) -> usize {
    let r = if q < 0 {
        -q
    } else if q > m {
        2 * m - q
    } else {
        q
    };
    r as usize
}

fn stencil_weights(s: Stencil, h: f64) -> Vec<(isize, f64)> {
    match s {
        Stencil::Second => vec![(-1, 1.0), (0, -2.0), (1, 1.0)]
            .into_iter()
            .map(|(o, c)| (o, c / (h * h)))
            .collect(),
        Stencil::Fourth => vec![(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)]
            .into_iter()
            .map(|(o, c)| (o, c / (12.0 * h * h)))
            .collect(),
    }
}

/// One symmetric θ-mode on the half period.
#[derive(Debug, Clone)]
struct ModeSystem {
    lu: BandLu,
    /// Dense band rows `(col, coeff)` for residual evaluation.
    rows: Vec<Vec<(usize, f64)>>,
    /// Constraint direction, its preimage and `⟨L⁻¹w, w⟩`.
    border: Option<(Vec<f64>, Vec<f64>, f64)>,
}

impl ModeSystem {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, c)| c * u[j]).sum())
            .collect()
    }
}

/// Weighted half-grid inner product matching the full periodic sum.
fn hdot(u: &[f64], v: &[f64]) -> f64 {
    let m = u.len() - 1;
    let mut s = 0.5 * (u[0] * v[0] + u[m] * v[m]);
    for j in 1..m {
        s += u[j] * v[j];
    }
    2.0 * s
}

/// Per-mode factorizations of `𝔏_a` on the symmetric subspace.
#[derive(Debug, Clone)]
pub struct ProjectedSolver {
    pub op: LimitOperator,
    pub kernel: KernelPair,
    modes: Vec<ModeSystem>,
    /// Solvability tolerance on the mode-1 constraint, relative.
    pub solvability_tol: f64,
}

/// Diagnostics of one bordered solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    /// Multipliers on the mode-0 and mode-1 constraint directions.
    pub mu: [f64; 2],
    /// Relative mode-1 component of the input.
    pub mode1_component: f64,
}

impl ProjectedSolver {
    pub fn new(tbl: &ProfileTable, n_theta: usize, stencil: Stencil) -> Result<Self> {
        let op = LimitOperator::new(tbl, n_theta, stencil);
        let nt = tbl.n_t();
        let m = nt / 2;
        let c = tbl.center();
        let p_half: Vec<f64> = (0..=m).map(|j| op.p[(c + j) % nt]).collect();
        let w = stencil_weights(stencil, tbl.dt);
        let band = w.iter().map(|(o, _)| o.unsigned_abs()).max().unwrap_or(1);
        let half = n_theta / 2;
        let mut modes: Vec<ModeSystem> = (0..=half)
            .into_par_iter()
            .map(|j| {
                let shift = -((j * j) as f64);
                let rows: Vec<Vec<(usize, f64)>> = (0..=m)
                    .map(|r| {
                        let mut row: Vec<(usize, f64)> = Vec::with_capacity(w.len());
                        for &(o, cf) in &w {
                            let col = reflect(r as isize + o, m as isize);
                            match row.iter_mut().find(|(cc, _)| *cc == col) {
                                Some(e) => e.1 += cf,
                                None => row.push((col, cf)),
                            }
                        }
                        let diag = 2.0 * p_half[r] + shift;
                        match row.iter_mut().find(|(cc, _)| *cc == r) {
                            Some(e) => e.1 += diag,
                            None => row.push((r, diag)),
                        }
                        row
                    })
                    .collect();
                let lu = BandLu::factor(m + 1, band, band, |i, k| {
                    rows[i].iter().find(|(cc, _)| *cc == k).map_or(0.0, |e| e.1)
                })?;
                Ok(ModeSystem {
                    lu,
                    rows,
                    border: None,
                })
            })
            .collect::<Result<_>>()?;

        let w0_half: Vec<f64> = (0..=m).map(|j| tbl.w0[(c + j) % nt]).collect();
        let v1 = null_vector(&modes[1], (0..=m).map(|j| tbl.w1[(c + j) % nt]).collect());
        for (jm, dir) in [(0usize, w0_half), (1usize, v1.clone())] {
            let z = modes[jm].lu.solve(&dir);
            let zw = hdot(&z, &dir);
            modes[jm].border = Some((dir, z, zw));
        }
        let mut w1_full = vec![0.0; nt];
        for (i, v) in w1_full.iter_mut().enumerate() {
            let j = if i >= c { i - c } else { c - i };
            *v = v1[j];
        }
        let kernel = KernelPair::new(&tbl.w0, &w1_full, n_theta, tbl.dt);
        Ok(Self {
            op,
            kernel,
            modes,
            solvability_tol: 1e-8,
        })
    }

    pub fn n_t(&self) -> usize {
        self.op.n_t
    }

    pub fn n_theta(&self) -> usize {
        self.op.n_theta
    }

    /// Symmetric mode coefficients `g_j(m)` of an even-in-t field.
    fn analyze(&self, f: &SymField) -> Vec<Vec<f64>> {
        let (nt, nth) = (self.op.n_t, self.op.n_theta);
        let m = nt / 2;
        let c = m;
        let basis = &self.op.basis;
        let half = nth / 2;
        let mut g = vec![vec![0.0; m + 1]; half + 1];
        for r in 0..=m {
            let ip = (c + r) % nt;
            let im = (c + nt - r) % nt;
            let (ap, bp) = basis.analyze(f.row(ip));
            let (am, bm) = basis.analyze(f.row(im));
            for (j, gj) in g.iter_mut().enumerate() {
                gj[r] = if j % 2 == 0 {
                    0.5 * (ap[j] + am[j])
                } else {
                    0.5 * (bp[j] + bm[j])
                };
            }
        }
        g
    }

    fn synthesize(&self, u: &[Vec<f64>]) -> SymField {
        let (nt, nth) = (self.op.n_t, self.op.n_theta);
        let c = nt / 2;
        let basis = &self.op.basis;
        SymField::from_fn(nt, nth, |i, k| {
            let r = if i >= c { i - c } else { c - i };
            u.iter()
                .enumerate()
                .map(|(j, uj)| uj[r] * basis.sym_mode(j, k))
                .sum()
        })
    }

    fn solve_mode(&self, j: usize, g: &[f64]) -> (Vec<f64>, f64) {
        let sys = &self.modes[j];
        match &sys.border {
            None => {
                let mut u = sys.lu.solve(g);
                let r = sys.apply(&u);
                let res: Vec<f64> = g.iter().zip(&r).map(|(a, b)| a - b).collect();
                let du = sys.lu.solve(&res);
                u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
                (u, 0.0)
            }
            Some((w, z, zw)) => {
                let elim = |rhs: &[f64], s: f64| {
                    let y = sys.lu.solve(rhs);
                    let mu = (hdot(&y, w) - s) / zw;
                    let u: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - mu * b).collect();
                    (u, mu)
                };
                let (mut u, mut mu) = elim(g, 0.0);
                for _ in 0..3 {
                    let lu_u = sys.apply(&u);
                    let r: Vec<f64> = (0..g.len()).map(|i| g[i] - lu_u[i] - mu * w[i]).collect();
                    let s = -hdot(&u, w);
                    let (du, dmu) = elim(&r, s);
                    u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
                    mu += dmu;
                }
                (u, mu)
            }
        }
    }

    /// Solves `𝔏_a u + μ₀ w₀ + μ₁ w₁ = f` with `u ⟂ w₀, w₁`.
    pub fn solve_bordered(&self, f: &SymField) -> Result<(SymField, SolveInfo)> {
        if f.n_t() != self.op.n_t || f.n_theta() != self.op.n_theta {
            return Err(Error::Grid(format!(
                "field {}x{} vs solver {}x{}",
                f.n_t(),
                f.n_theta(),
                self.op.n_t,
                self.op.n_theta
            )));
        }
        let g = self.analyze(f);
        let (w1, _, _) = self.modes[1].border.as_ref().expect("mode 1 is bordered");
        let gn = hdot(&g[1], &g[1]).sqrt();
        let wn = hdot(w1, w1).sqrt();
        let comp = if gn > 0.0 { hdot(&g[1], w1).abs() / (gn * wn) } else { 0.0 };
        let fnorm = (0..g.len()).map(|j| hdot(&g[j], &g[j])).sum::<f64>().sqrt();
        if fnorm > 0.0 && hdot(&g[1], w1).abs() / (wn * fnorm) > self.solvability_tol {
            return Err(Error::Solvability { coeff: comp });
        }
        let sols: Vec<(Vec<f64>, f64)> = g
            .par_iter()
            .enumerate()
            .map(|(j, gj)| self.solve_mode(j, gj))
            .collect();
        let mu = [sols[0].1, sols[1].1];
        let u: Vec<Vec<f64>> = sols.into_iter().map(|s| s.0).collect();
        let mut out = self.synthesize(&u);
        let (_, _, rem) = project_kernel(&out, &self.kernel);
        out = rem;
        Ok((
            out,
            SolveInfo {
                mu,
                mode1_component: comp,
            },
        ))
    }

    /// The kernel-orthogonal solution of `𝔏_a φ = f` for kernel-orthogonal
    /// `f`.
    pub fn solve_projected(&self, f: &SymField) -> Result<SymField> {
        self.solve_bordered(f).map(|r| r.0)
    }

    /// Smallest singular value of each mode operator restricted to the
    /// complement of its constraint direction, estimated by inverse
    /// iteration on the bordered solve.
    pub fn mode_min_gain(&self, j: usize, iters: usize) -> f64 {
        let m = self.op.n_t / 2;
        let mut v: Vec<f64> = (0..=m).map(|r| ((r * 7 + 3) as f64 * 0.37).sin()).collect();
        let mut gain = 0.0;
        for _ in 0..iters {
            if let Some((w, _, _)) = &self.modes[j].border {
                let c = hdot(&v, w) / hdot(w, w);
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= c * b);
            }
            let n = hdot(&v, &v).sqrt();
            v.iter_mut().for_each(|a| *a /= n);
            let (u, _) = self.solve_mode(j, &v);
            let un = hdot(&u, &u).sqrt();
            gain = 1.0 / un;
            v = u;
        }
        gain
    }
}

/// Eigenvector of the mode operator closest to zero, by inverse iteration
/// from `seed`, scaled to agree with the seed at `t = 0`.
fn null_vector(sys: &ModeSystem, seed: Vec<f64>) -> Vec<f64> {
    let s0 = seed[0];
    let mut v = seed;
    for _ in 0..6 {
        let u = sys.lu.solve(&v);
        let n = hdot(&u, &u).sqrt();
        v = u.into_iter().map(|a| a / n).collect();
    }
    let s = s0 / v[0];
    v.into_iter().map(|a| a * s).collect()
}

/// Coefficients of the full Jacobi operator
/// `b ∂_tt + ∂_θθ + c + d ∂_t + e ∂_θ` of the bent surface.
#[derive(Debug, Clone)]
pub struct JacobiCoeffs {
    pub b: SymField,
    pub c: SymField,
    pub d: SymField,
    pub e: SymField,
    pub p: Vec<f64>,
    pub dt: f64,
}

/// Evaluates `b, c, d, e` pointwise from the analytic jet.
pub fn assemble_full(grid: &TorusGrid<f64>, jet: &SurfaceJet<f64>) -> Result<JacobiCoeffs> {
    let (nt, nth) = (grid.n_t(), grid.n_theta);
    if jet.n_t != nt || jet.n_theta != nth {
        return Err(Error::Grid("jet and grid disagree".into()));
    }
    let mut b = SymField::zeros(nt, nth);
    let mut c = SymField::zeros(nt, nth);
    let mut d = SymField::zeros(nt, nth);
    let mut e = SymField::zeros(nt, nth);
    for i in 0..nt {
        let x2 = grid.tbl.x[i] * grid.tbl.x[i];
        for k in 0..nth {
            let pj = jet.at(i, k);
            let (ee, gg) = (pj.e, pj.g);
            let xpp: Vec<f64> = (0..3).map(|m| pj.xthth[m] / gg + pj.xtt[m] / ee).collect();
            let xpp = [xpp[0], xpp[1], xpp[2]];
            let c1 = cross3(&pj.xt, &pj.nth);
            let c2 = cross3(&pj.nt, &pj.xth);
            let xn = dot3(&xpp, &pj.n);
            let a: [f64; 3] =
                std::array::from_fn(|m| (c1[m] + c2[m]) / pj.area + pj.n[m] * xn);
            let bv: [f64; 3] = std::array::from_fn(|m| -pj.xt[m] / ee);
            let cv: [f64; 3] = std::array::from_fn(|m| -pj.xth[m] / gg);
            let q = 0.5
                * (dot3(&xpp, &a) - dot3(&pj.nth, &pj.nth) / gg - dot3(&pj.nt, &pj.nt) / ee
                    + 2.0 * pj.l * pj.l / (ee * ee)
                    + 2.0 * pj.nn * pj.nn / (gg * gg)
                    + 4.0 * pj.m * pj.m / (ee * gg));
            b.set(i, k, x2 / ee);
            d.set(i, k, x2 * dot3(&xpp, &bv));
            e.set(i, k, x2 * dot3(&xpp, &cv));
            c.set(i, k, 2.0 * x2 * q);
        }
    }
    Ok(JacobiCoeffs {
        b,
        c,
        d,
        e,
        p: grid.tbl.p(),
        dt: grid.dt(),
    })
}

impl JacobiCoeffs {
    /// Applies the operator with 4th-order differences in both variables,
    /// matching the differencing of normal graphs.
    pub fn apply(&self, phi: &SymField) -> SymField {
        let [ft, fth, ftt, _, fthth] = field_derivs(phi, self.dt);
        let v = phi.values();
        let vals: Vec<f64> = (0..v.len())
            .map(|idx| {
                let (b, c, d, e) = (
                    self.b.values()[idx],
                    self.c.values()[idx],
                    self.d.values()[idx],
                    self.e.values()[idx],
                );
                b * ftt[idx] + fthth[idx] + c * v[idx] + d * ft[idx] + e * fth[idx]
            })
            .collect();
        SymField::from_values(phi.n_t(), phi.n_theta(), vals).expect("same grid")
    }

    /// `(‖b − 1‖, ‖c − 2p‖, ‖d‖, ‖e‖)` in sup norm.
    pub fn deviations(&self) -> [f64; 4] {
        let nth = self.b.n_theta();
        let mut out = [0.0f64; 4];
        for (idx, &bv) in self.b.values().iter().enumerate() {
            let i = idx / nth;
            out[0] = out[0].max((bv - 1.0).abs());
            out[1] = out[1].max((self.c.values()[idx] - 2.0 * self.p[i]).abs());
            out[2] = out[2].max(self.d.values()[idx].abs());
            out[3] = out[3].max(self.e.values()[idx].abs());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::NeckSize;
    use crate::profile::solve_profile;

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(6, 5), 4);
        assert_eq!(reflect(7, 5), 3);
        assert_eq!(reflect(3, 5), 3);
    }

    #[test]
    fn half_grid_product_matches_full_sum() {
        let t = solve_profile(NeckSize::new(0.2).unwrap(), 64).unwrap();
        let c = t.center();
        let half: Vec<f64> = (0..=32).map(|j| t.w1[(c + j) % 64]).collect();
        let full: f64 = t.w1.iter().map(|v| v * v).sum();
        assert!((hdot(&half, &half) - full).abs() < 1e-12 * full);
    }
}
