//! Fixed point for the kernel-orthogonal part of the prescribed-curvature
//! equation `𝔐(X + φN) = H(X + φN)` on the bent unduloid, and the two
//! multipliers left over on the kernel directions.
//!
//! The map is `φ ↦ 𝔏_a⁻¹ P[𝔏_a φ − 2x²(𝔐(Y) − H(Y))]` with `P` the
//! orthogonal projection off `w₀, w₁`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{dot3, jet_perturbed_with, jet_torus, mean_curvature, DerivScheme, SurfaceJet, TorusGrid};
use crate::jacobi::{project_kernel, KernelPair, ProjectedSolver};
use crate::linalg::dense_solve;
use crate::profile::weighted_norm;
use crate::stencil::Stencil;
use crate::{Error, Result, SymField, WeightedNormSpec};

/// Radial correction `r(|X|)` added to `1 + A|X|^(−γ)`, with its derivative.
#[derive(Clone)]
pub struct Remainder {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Remainder {
    pub fn constant(c: f64) -> Self {
        Self {
            value: Arc::new(move |_| c),
            derivative: Arc::new(|_| 0.0),
        }
    }
}

impl fmt::Debug for Remainder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Remainder(..)")
    }
}

/// `H(X) = 1 + A|X|^(−γ) + r(|X|)` for `|X|` at or above `floor`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrescribedCurvature {
    #[serde(rename = "A")]
    pub amp: f64,
    pub gamma: f64,
    pub beta: Option<f64>,
    pub floor: f64,
    #[serde(skip)]
    pub remainder: Option<Remainder>,
}

impl PrescribedCurvature {
    pub fn new(amp: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::Domain(format!("γ = {gamma} outside (0, 2)")));
        }
        if !amp.is_finite() {
            return Err(Error::Domain(format!("A = {amp}")));
        }
        Ok(Self {
            amp,
            gamma,
            beta: None,
            floor: 1.0,
            remainder: None,
        })
    }

    /// `H ≡ 1`, defined everywhere.
    pub fn unit() -> Self {
        Self::new(0.0, 1.0).expect("valid").with_floor(0.0)
    }

    /// `H ≡ c`, defined everywhere.
    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Domain(format!("H = {c}")));
        }
        Ok(Self::unit().with_remainder(1.0, Remainder::constant(c - 1.0)))
    }

    pub fn with_remainder(mut self, beta: f64, r: Remainder) -> Self {
        self.beta = Some(beta);
        self.remainder = Some(r);
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    fn check(&self, rho: f64) -> Result<()> {
        if !(rho >= self.floor) {
            return Err(Error::BelowFloor {
                radius: rho,
                floor: self.floor,
            });
        }
        Ok(())
    }

    /// `H` as a function of the radius.
    pub fn radial(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        let r = self.remainder.as_ref().map_or(0.0, |r| (r.value)(rho));
        let p = if self.amp == 0.0 { 0.0 } else { self.amp * rho.powf(-self.gamma) };
        Ok(1.0 + p + r)
    }

    /// `dH/dρ`.
    pub fn radial_derivative(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        let r = self.remainder.as_ref().map_or(0.0, |r| (r.derivative)(rho));
        let p = if self.amp == 0.0 { 0.0 } else { -self.amp * self.gamma * rho.powf(-self.gamma - 1.0) };
        Ok(p + r)
    }

    pub fn eval(&self, x: &[f64; 3]) -> Result<f64> {
        self.radial(dot3(x, x).sqrt())
    }

    pub fn grad(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        let rho = dot3(x, x).sqrt();
        let d = self.radial_derivative(rho)? / rho;
        Ok([d * x[0], d * x[1], d * x[2]])
    }

    /// `H` frozen at its floor value inside the floor radius.
    pub fn radial_extended(&self, rho: f64) -> f64 {
        self.radial(rho.max(self.floor)).expect("radius at or above floor")
    }
}

/// Target curvature sampled on a surface jet.
pub trait Target: Sync {
    fn sample(&self, jet: &SurfaceJet<f64>) -> Result<SymField>;
}

impl Target for PrescribedCurvature {
    fn sample(&self, jet: &SurfaceJet<f64>) -> Result<SymField> {
        let v = jet.pts.iter().map(|p| self.eval(&p.x)).collect::<Result<Vec<_>>>()?;
        SymField::from_values(jet.n_t, jet.n_theta, v)
    }
}

/// A fixed field, independent of the surface.
impl Target for SymField {
    fn sample(&self, jet: &SurfaceJet<f64>) -> Result<SymField> {
        if self.n_t() != jet.n_t || self.n_theta() != jet.n_theta {
            return Err(Error::Grid("target field does not match the jet".into()));
        }
        Ok(self.clone())
    }
}

/// `𝔐(Y) − H(Y)` on `Y = X + φN`.
pub fn residual(base: &SurfaceJet<f64>, phi: &SymField, h: &dyn Target, scheme: DerivScheme) -> Result<SymField> {
    let y = jet_perturbed_with(base, phi, scheme)?;
    let m = mean_curvature(&y)?;
    let hv = h.sample(&y)?;
    Ok(m.zip_map(&hv, |a, b| a - b))
}

/// `λⁱ = ⟨R, wᵢ⟩/⟨wᵢ, wᵢ⟩` for `R = 2x²(𝔐(Y) − H(Y))`.
pub fn multipliers(kernel: &KernelPair, r: &SymField) -> (f64, f64) {
    let l0 = r.dot(&kernel.w0_field, kernel.dt) / kernel.gram[0][0];
    let l1 = r.dot(&kernel.w1_field, kernel.dt) / kernel.gram[1][1];
    (l0, l1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Anderson depth; `0` is plain Picard.
    pub anderson: usize,
    /// Consecutive step-norm increases treated as divergence.
    pub divergence_window: usize,
    pub norm: WeightedNormSpec,
    pub stencil: Stencil,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            anderson: 0,
            divergence_window: 5,
            norm: WeightedNormSpec::default(),
            stencil: Stencil::Second,
        }
    }
}

/// One line of the iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub step: f64,
    pub residual_orth: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub phi_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionResult {
    pub phi: SymField,
    pub lambda0: f64,
    pub lambda1: f64,
    pub iterations: usize,
    /// Sup of the kernel-orthogonal part of `2x²(𝔐(Y) − H(Y))`.
    pub residual_orth: f64,
    /// Sup of `2x²(𝔐(Y) − H(Y))`.
    pub residual_full: f64,
    /// `‖φ‖_{a,2,μ}`.
    pub phi_norm_weighted: f64,
    pub eps: f64,
    pub trace: Vec<IterRecord>,
}

/// Everything the fixed point needs on one grid.
pub struct Reduction<'h> {
    pub grid: TorusGrid<f64>,
    pub base: SurfaceJet<f64>,
    pub solver: ProjectedSolver,
    pub target: &'h dyn Target,
    pub opts: FixedPointOptions,
    x2: Vec<f64>,
}

impl<'h> Reduction<'h> {
    pub fn new(grid: TorusGrid<f64>, target: &'h dyn Target, opts: FixedPointOptions) -> Result<Self> {
        let base = jet_torus(&grid)?;
        let solver = ProjectedSolver::new(&grid.tbl, grid.n_theta, opts.stencil)?;
        let x2 = grid.tbl.x.iter().map(|x| 2.0 * x * x).collect();
        Ok(Self {
            grid,
            base,
            solver,
            target,
            opts,
            x2,
        })
    }

    pub fn kernel(&self) -> &KernelPair {
        &self.solver.kernel
    }

    /// `2x²(𝔐(Y) − H(Y))`.
    pub fn scaled_residual(&self, phi: &SymField) -> Result<SymField> {
        Ok(residual(&self.base, phi, self.target, DerivScheme::matching(self.opts.stencil))?.scale_rows(&self.x2))
    }

    /// `𝔉(φ) = 𝔏_a φ − 2x²(𝔐(Y) − H(Y))`.
    pub fn forcing(&self, phi: &SymField) -> Result<SymField> {
        let mut f = self.solver.op.apply(phi);
        f.axpy(-1.0, &self.scaled_residual(phi)?);
        Ok(f)
    }

    /// One application of the fixed-point map, with the residual at `φ`.
    fn map(&self, phi: &SymField) -> Result<(SymField, SymField)> {
        let r = self.scaled_residual(phi)?;
        let mut f = self.solver.op.apply(phi);
        f.axpy(-1.0, &r);
        let (_, _, f) = project_kernel(&f, &self.solver.kernel);
        Ok((self.solver.solve_projected(&f)?, r))
    }

    fn norm(&self, f: &SymField) -> Result<f64> {
        weighted_norm(f, &self.grid.tbl, &self.opts.norm, 2)
    }

    fn record(&self, iteration: usize, step: f64, phi: &SymField, r: &SymField) -> Result<IterRecord> {
        let (l0, l1) = multipliers(self.kernel(), r);
        let (_, _, orth) = project_kernel(r, self.kernel());
        Ok(IterRecord {
            iteration,
            step,
            residual_orth: orth.sup_norm(),
            lambda0: l0,
            lambda1: l1,
            phi_norm: self.norm(phi)?,
        })
    }

    /// Runs the iteration from `φ₀ = 0`.
    pub fn run(&self) -> Result<ReductionResult> {
        self.run_from(SymField::zeros(self.grid.n_t(), self.grid.n_theta), |_| {})
    }

    /// Runs the iteration from `phi0`, reporting each trace record.
    pub fn run_from(&self, phi0: SymField, mut on_step: impl FnMut(&IterRecord)) -> Result<ReductionResult> {
        let o = &self.opts;
        let mut phi = phi0;
        let mut trace = Vec::new();
        let mut hist_x: Vec<Vec<f64>> = Vec::new();
        let mut hist_g: Vec<Vec<f64>> = Vec::new();
        let mut growth = 0usize;
        let mut last_step = f64::INFINITY;
        for it in 1..=o.max_iter {
            let (t, r) = self.map(&phi)?;
            let mut d = t.clone();
            d.axpy(-1.0, &phi);
            let step = self.norm(&d)?;
            let rec = self.record(it, step, &phi, &r)?;
            on_step(&rec);
            trace.push(rec);
            if step <= o.tol {
                return self.finish(t, it, trace);
            }
            if step > last_step {
                growth += 1;
                if growth >= o.divergence_window {
                    return Err(Error::Divergence { iterations: it, step });
                }
            } else {
                growth = 0;
            }
            last_step = step;
            phi = if o.anderson == 0 {
                t
            } else {
                hist_x.push(t.values().to_vec());
                hist_g.push(d.values().to_vec());
                if hist_x.len() > o.anderson + 1 {
                    hist_x.remove(0);
                    hist_g.remove(0);
                }
                anderson_mix(&t, &hist_x, &hist_g)?
            };
        }
        Err(Error::IterationCap {
            what: "reduction fixed point",
            cap: o.max_iter,
        })
    }

    fn finish(&self, phi: SymField, iterations: usize, trace: Vec<IterRecord>) -> Result<ReductionResult> {
        let r = self.scaled_residual(&phi)?;
        let (l0, l1) = multipliers(self.kernel(), &r);
        let (_, _, orth) = project_kernel(&r, self.kernel());
        Ok(ReductionResult {
            phi_norm_weighted: self.norm(&phi)?,
            phi,
            lambda0: l0,
            lambda1: l1,
            iterations,
            residual_orth: orth.sup_norm(),
            residual_full: r.sup_norm(),
            eps: self.grid.eps,
            trace,
        })
    }

    /// `‖R − λ⁰w₀ − λ¹w₁‖_∞` for a computed result.
    pub fn self_consistency(&self, res: &ReductionResult) -> Result<f64> {
        let mut r = self.scaled_residual(&res.phi)?;
        r.axpy(-res.lambda0, &self.kernel().w0_field);
        r.axpy(-res.lambda1, &self.kernel().w1_field);
        Ok(r.sup_norm())
    }

    /// `2x²(∇H · N)` on the base surface, for a radial target.
    pub fn normal_gradient(&self, h: &PrescribedCurvature) -> Result<SymField> {
        let v = self
            .base
            .pts
            .iter()
            .map(|p| h.grad(&p.x).map(|g| dot3(&g, &p.n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymField::from_values(self.base.n_t, self.base.n_theta, v)?.scale_rows(&self.x2))
    }
}

/// Type-II Anderson update from the latest map value `t` and the histories
/// of map values and steps.
fn anderson_mix(t: &SymField, xs: &[Vec<f64>], gs: &[Vec<f64>]) -> Result<SymField> {
    let m = xs.len() - 1;
    if m == 0 {
        return Ok(t.clone());
    }
    let n = t.values().len();
    let dg: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| gs[j + 1][i] - gs[j][i]).collect()).collect();
    let dx: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| xs[j + 1][i] - xs[j][i]).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g = &gs[m];
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    let mut diag = 0.0f64;
    for p in 0..m {
        for q in 0..m {
            a[p * m + q] = dot(&dg[p], &dg[q]);
        }
        diag = diag.max(a[p * m + p]);
        b[p] = dot(&dg[p], g);
    }
    if diag == 0.0 {
        return Ok(t.clone());
    }
    for p in 0..m {
        a[p * m + p] += 1e-12 * diag;
    }
    let c = dense_solve(a, b)?;
    let mut out = t.clone();
    let v = out.values_mut();
    for j in 0..m {
        for i in 0..n {
            v[i] -= c[j] * dx[j][i];
        }
    }
    Ok(out)
}

/// Convenience wrapper: build the reduction on `grid` and iterate.
pub fn fixed_point(grid: TorusGrid<f64>, h: &dyn Target, opts: FixedPointOptions) -> Result<ReductionResult> {
    Reduction::new(grid, h, opts)?.run()
}

/// `max |φ| / (ε^γ̃ x^μ)`, the smallest `R` for the pointwise envelope.
pub fn envelope_constant(phi: &SymField, x: &[f64], eps: f64, gamma_t: f64, mu: f64) -> f64 {
    let s = eps.powf(gamma_t);
    (0..phi.n_t())
        .map(|i| {
            let w = s * x[i].powf(mu);
            phi.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs() / w))
        })
        .fold(0.0, f64::max)
}
