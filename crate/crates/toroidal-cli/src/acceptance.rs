//! The twelve acceptance criteria, each measured at its stated tolerance and
//! reported as one PASS/FAIL line with the measured values.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toroidal::elliptic::{ellip_e, ellip_k, height_h, period_tau};
use toroidal::embedcert::certify;
use toroidal::field::ThetaBasis;
use toroidal::geometry::{jet_torus, jet_unduloid, mean_curvature, TorusGrid};
use toroidal::jacobi::{project_kernel, KernelPair, LimitOperator, ProjectedSolver};
use toroidal::matching::{
    area_volume, energy_a_derivative, energy_a_derivative_fd, h_energy, kernel_mass, lambda0_sweep, match_neck,
    revolution_volume, MatchOptions, MatchResult,
};
use toroidal::profile::{default_n_t, measure_period, solve_profile, weighted_norm};
use toroidal::reduction::{envelope_constant, FixedPointOptions, PrescribedCurvature, Reduction};
use toroidal::stencil::Stencil;
use toroidal::{Modulus, NeckSize, ProfileTable, SymField, WeightedNormSpec};

use crate::mesh::{self_intersections, torus_mesh};

const A_SET: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
const N_SET: [usize; 4] = [16, 24, 32, 48];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds
        )
    }
}

/// Named sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    ok: bool,
    lines: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            ok: true,
            lines: Vec::new(),
        }
    }

    fn le(&mut self, name: &str, value: f64, tol: f64) {
        let pass = value <= tol;
        self.ok &= pass;
        self.lines.push(format!("{} {name}: {value:.3e} (tol {tol:.0e})", mark(pass)));
    }

    fn holds(&mut self, name: &str, pass: bool, detail: String) {
        self.ok &= pass;
        self.lines.push(format!("{} {name}: {detail}", mark(pass)));
    }

    fn note(&mut self, s: String) {
        self.lines.push(format!("  {s}"));
    }
}

fn mark(p: bool) -> &'static str {
    if p {
        "ok  "
    } else {
        "FAIL"
    }
}

fn table(a: f64, n_t: usize) -> anyhow::Result<ProfileTable> {
    Ok(solve_profile(NeckSize::new(a)?, n_t)?)
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn smooth_field(tbl: &ProfileTable, n_theta: usize, rng: &mut ChaCha8Rng) -> SymField {
    let basis = ThetaBasis::new(n_theta);
    let coef: Vec<(usize, usize, f64)> = (0..8)
        .map(|_| (rng.gen_range(0..6), rng.gen_range(0..4), rng.gen_range(-1.0..1.0)))
        .collect();
    SymField::from_fn(tbl.n_t(), n_theta, |i, k| {
        let t = tbl.t_grid[i];
        coef.iter()
            .map(|&(j, m, c)| c * (m as f64 * PI * t / tbl.tau).cos() * basis.sym_mode(j, k))
            .sum()
    })
}

/// Shared state across criteria: the matching runs feed the certificate
/// criterion.
pub struct Suite {
    pub seed: u64,
    matches: OnceLock<Vec<(usize, Result<MatchResult, String>)>>,
}

impl Suite {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            matches: OnceLock::new(),
        }
    }

    fn match_opts() -> MatchOptions {
        MatchOptions {
            fixed_point: FixedPointOptions {
                anderson: 3,
                ..FixedPointOptions::default()
            },
            ..MatchOptions::default()
        }
    }

    fn matches(&self) -> &[(usize, Result<MatchResult, String>)] {
        self.matches.get_or_init(|| {
            let h = PrescribedCurvature::new(-1.0, 1.0).expect("valid");
            N_SET
                .iter()
                .map(|&n| (n, match_neck(n, &h, &Self::match_opts()).map_err(|e| e.to_string())))
                .collect()
        })
    }

    pub fn run(&self, id: u8) -> Outcome {
        let start = Instant::now();
        let (title, r) = match id {
            1 => ("elliptic closed forms", self.c1()),
            2 => ("period and height", self.c2()),
            3 => ("profile invariants", self.c3()),
            4 => ("CMC check", self.c4()),
            5 => ("almost-CMC scaling", self.c5()),
            6 => ("Jacobi kernel", self.c6()),
            7 => ("projected solver", self.c7()),
            8 => ("reduction scaling", self.c8()),
            9 => ("matching", self.c9()),
            10 => ("sign of A", self.c10()),
            11 => ("embeddedness", self.c11()),
            12 => ("energy identities", self.c12()),
            _ => ("unknown criterion", Err(anyhow::anyhow!("no criterion {id}"))),
        };
        let (passed, details) = match r {
            Ok(c) => (c.ok, c.lines),
            Err(e) => (false, vec![format!("error: {e:#}")]),
        };
        Outcome {
            id,
            title,
            passed,
            details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    pub fn run_all(&self, mut on_done: impl FnMut(&Outcome)) -> Vec<Outcome> {
        (1..=12)
            .map(|id| {
                let o = self.run(id);
                on_done(&o);
                o
            })
            .collect()
    }

    fn c1(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let m = |k: f64| Modulus::new(k);
        let e0 = (ellip_k(&m(0.0)?)? - FRAC_PI_2)
            .abs()
            .max((ellip_e(&m(0.0)?)? - FRAC_PI_2).abs())
            .max((ellip_e(&m(1.0)?)? - 1.0).abs());
        c.le("K(0), E(0), E(1)", e0, 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let k: f64 = rng.gen_range(1e-6..1.0 - 1e-6);
            let kp = (1.0 - k * k).sqrt();
            let (kk, ek) = (ellip_k(&m(k)?)?, ellip_e(&m(k)?)?);
            let (kkp, ekp) = (ellip_k(&m(kp)?)?, ellip_e(&m(kp)?)?);
            worst = worst.max((ek * kkp + ekp * kk - kk * kkp - FRAC_PI_2).abs());
        }
        c.le("Legendre relation, 20 moduli", worst, 1e-10);
        Ok(c)
    }

    fn c2(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let (mut lit, mut cor, mut hz, mut lan) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for &a in &A_SET {
            let n = NeckSize::new(a)?;
            if a == 0.5 {
                // x' ≡ 0 on the cylinder; compare the tabulated endpoint instead
                let tbl = table(a, 256)?;
                hz = hz.max((-tbl.z[0] - height_h(&n)).abs() / height_h(&n));
                let two_k = 2.0 * ellip_k(&n.modulus())?;
                lit = lit.max((tbl.tau - two_k).abs() / two_k);
                continue;
            }
            let (t, z) = measure_period(n)?;
            let two_k = 2.0 * ellip_k(&n.modulus())?;
            lit = lit.max((t - two_k).abs() / two_k);
            cor = cor.max((t - period_tau(&n)).abs() / t);
            lan = lan.max((t - 2.0 * ellip_k(&Modulus::new(1.0 - 2.0 * a)?)?).abs() / t);
            hz = hz.max((z - height_h(&n)).abs() / z);
        }
        c.le("ODE period vs 2K(k_a), rel", lit, 1e-8);
        c.le("z(τ_a) vs h_a, rel", hz, 1e-8);
        c.le("h_{1/2} − π/2", (height_h(&NeckSize::new(0.5)?) - FRAC_PI_2).abs(), 1e-12);
        c.note(format!("ODE period vs K(k_a)/(1−a), rel: {cor:.3e}"));
        c.note(format!("ODE period vs 2K(1−2a), rel: {lan:.3e}"));
        Ok(c)
    }

    fn c3(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let (mut conf, mut ends, mut mid, mut wid, mut wmin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for &a in &A_SET {
            let tbl = table(a, 1024)?;
            let g = tbl.gamma_a;
            let ctr = tbl.center();
            conf = conf.max(tbl.conformality_residual());
            ends = ends.max((tbl.x[ctr] - (1.0 - a)).abs()).max((tbl.x[0] - a).abs());
            mid = mid.max((tbl.x[ctr + tbl.n_t() / 4].powi(2) - g).abs());
            for i in 0..tbl.n_t() {
                let (x, xp, w) = (tbl.x[i], tbl.xp[i], tbl.w1[i]);
                let wp = xp * (1.0 - g / (x * x));
                wid = wid.max((wp * wp - (1.0 - w * w) * (w * w - 4.0 * g)).abs());
            }
            let m = tbl.w1.iter().cloned().fold(f64::INFINITY, f64::min);
            wmin = wmin.max((m - 2.0 * g.sqrt()).abs());
        }
        c.le("conformality residual", conf, 1e-9);
        c.le("x(0) = 1−a, x(τ_a) = a", ends, 1e-8);
        c.le("x(τ_a/2)² = γ_a", mid, 1e-8);
        c.le("(w')² identity", wid, 1e-8);
        c.le("min w = 2√γ_a", wmin, 1e-6);
        Ok(c)
    }

    fn c4(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let mut worst = 0.0f64;
        for &a in &A_SET {
            let g = TorusGrid::straight(Arc::new(table(a, 512)?), 16)?;
            let m = mean_curvature(&jet_unduloid(&g)?)?;
            worst = worst.max(m.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
        }
        c.le("max |𝔐(X_a) − 1|", worst, 1e-8);
        Ok(c)
    }

    fn c5(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let tbl = Arc::new(table(0.1, 512)?);
        let eps = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
        let mut lx = vec![];
        let mut ly = vec![];
        for &e in &eps {
            let g = TorusGrid::with_eps(tbl.clone(), 16, e)?;
            let m = mean_curvature(&jet_torus(&g)?)?;
            let s = m.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            lx.push(e.ln());
            ly.push(s.ln());
            c.note(format!("ε = {e:.0e}: ‖𝔐 − 1‖∞ = {s:.4e}"));
        }
        c.le("|slope − 1|", (ls_slope(&lx, &ly) - 1.0).abs(), 0.1);
        Ok(c)
    }

    fn c6(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let grids = [256, 512, 1024, 2048];
        for j in 0..2 {
            let mut res = vec![];
            for &n in &grids {
                let tbl = table(0.1, n)?;
                let op = LimitOperator::new(&tbl, 16, Stencil::Second);
                let ker = KernelPair::from_table(&tbl, 16);
                res.push(op.apply(ker.fields()[j]).sup_norm());
            }
            let orders: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            let in_band = orders.iter().all(|o| (1.7..=2.3).contains(o));
            c.holds(
                &format!("w_{j} order in [1.7, 2.3]"),
                in_band,
                format!("orders {:?}", orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>()),
            );
            c.le(&format!("w_{j} residual at N_t = 2048"), res[3], 1e-5);
        }
        Ok(c)
    }

    fn c7(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(7));
        let tbl = table(0.1, 512)?;
        let solver = ProjectedSolver::new(&tbl, 32, Stencil::Second)?;
        let (_, _, psi) = project_kernel(&smooth_field(&tbl, 32, &mut rng), &solver.kernel);
        let (phi, _) = solver.solve_bordered(&solver.op.apply(&psi))?;
        let mut err = phi;
        err.axpy(-1.0, &psi);
        c.le("manufactured solution, rel", err.sup_norm() / psi.sup_norm(), 1e-6);

        let (_, _, f) = project_kernel(&smooth_field(&tbl, 32, &mut rng), &solver.kernel);
        let phi = solver.solve_projected(&f)?;
        let mut r = solver.op.apply(&phi);
        r.axpy(-1.0, &f);
        c.le("solve-then-apply residual, rel", r.sup_norm() / f.sup_norm(), 1e-8);

        let spec = WeightedNormSpec::default();
        let mut ratios = vec![];
        for &a in &[0.1, 0.03, 0.01, 0.003] {
            let tbl = table(a, 512)?;
            let solver = ProjectedSolver::new(&tbl, 16, Stencil::Second)?;
            let mut worst = 0.0f64;
            for _ in 0..3 {
                let f0 = smooth_field(&tbl, 16, &mut rng);
                let (_, _, f) = project_kernel(&f0.scale_rows(&tbl.x.iter().map(|x| x.powf(1.5)).collect::<Vec<_>>()), &solver.kernel);
                let phi = solver.solve_projected(&f)?;
                worst = worst.max(weighted_norm(&phi, &tbl, &spec, 2)? / weighted_norm(&f, &tbl, &spec, 0)?);
            }
            ratios.push(worst);
        }
        let trend = ratios.windows(2).all(|w| w[1] <= w[0] * 1.05);
        c.holds(
            "uniform-bound ratio non-increasing over a = 0.1, 0.03, 0.01, 0.003",
            trend,
            format!("{:?}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()),
        );
        Ok(c)
    }

    fn c8(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let tbl = Arc::new(table(0.1, 512)?);
        let mu = WeightedNormSpec::default().mu;
        let opts = FixedPointOptions {
            anderson: 3,
            max_iter: 400,
            ..FixedPointOptions::default()
        };
        for &gamma in &[0.5f64, 1.0, 1.5] {
            let gt = gamma.min(1.0);
            let h = PrescribedCurvature::new(-1.0, gamma)?;
            let (mut lx, mut ly, mut rs) = (vec![], vec![], vec![]);
            let mut orth = 0.0f64;
            for k in 0..5 {
                let eps = 0.01 * 0.5f64.powi(k);
                let g = TorusGrid::with_eps(tbl.clone(), 32, eps)?;
                match Reduction::new(g, &h, opts)?.run() {
                    Ok(r) => {
                        lx.push(eps.ln());
                        ly.push(r.phi_norm_weighted.ln());
                        orth = orth.max(r.residual_orth);
                        rs.push(envelope_constant(&r.phi, &tbl.x, eps, gt, mu));
                    }
                    Err(e) => c.holds(&format!("γ = {gamma}, ε = {eps:.2e} converges"), false, e.to_string()),
                }
            }
            if lx.len() >= 2 {
                let s = ls_slope(&lx, &ly);
                c.holds(
                    &format!("γ = {gamma}: slope {s:.3} vs {gt}"),
                    (s - gt).abs() <= 0.15,
                    format!("{} points", lx.len()),
                );
                let (rmin, rmax) = rs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
                c.holds(
                    &format!("γ = {gamma}: envelope R = {rmax:.4e}"),
                    rmax / rmin <= 4.0,
                    format!("max/min over ε = {:.3}", rmax / rmin),
                );
            }
            c.le(&format!("γ = {gamma}: kernel-orthogonal residual"), orth, 1e-8);
        }
        Ok(c)
    }

    fn c9(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let mut bs = vec![];
        for (n, r) in self.matches() {
            match r {
                Ok(m) => {
                    bs.push(m.b_n);
                    c.le(&format!("n = {n}: |λ¹|/scale at a_n = {:.5}", m.a_n), m.lambda1_res.abs() / m.lambda0_scale, 1e-2);
                }
                Err(e) => {
                    let h = PrescribedCurvature::new(-1.0, 1.0)?;
                    let pts = lambda0_sweep(*n, &h, &Self::match_opts());
                    let conv: Vec<String> = pts
                        .iter()
                        .filter_map(|p| p.lambda0.map(|l| format!("a = {:.4}: λ⁰ = {l:.3e}", p.a)))
                        .collect();
                    let first = pts.iter().find_map(|p| p.error.clone()).unwrap_or_else(|| e.clone());
                    c.holds(
                        &format!("n = {n}: root of λ⁰ in the bracket"),
                        false,
                        format!("{} of {} sweep points converged {conv:?}; {}", conv.len(), pts.len(), short(&first)),
                    );
                }
            }
        }
        if bs.len() == N_SET.len() {
            let (lo, hi) = bs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            c.le("b_n max/min", hi / lo, 2.0);
        }
        Ok(c)
    }

    fn c10(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let h = PrescribedCurvature::new(1.0, 1.0)?;
        for &n in &N_SET {
            let pts = lambda0_sweep(n, &h, &Self::match_opts());
            let conv: Vec<f64> = pts.iter().filter_map(|p| p.lambda0).collect();
            let change = conv.windows(2).any(|w| w[0].signum() != w[1].signum());
            let conclusive = conv.len() >= 2;
            c.holds(
                &format!("n = {n}: no sign change"),
                conclusive && !change,
                format!(
                    "{} of {} sweep points converged{}",
                    conv.len(),
                    pts.len(),
                    if conclusive { "" } else { " (inconclusive)" }
                ),
            );
        }
        Ok(c)
    }

    fn c11(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let r0 = 0.3;
        for (n, r) in self.matches() {
            match r {
                Ok(m) => {
                    let g = TorusGrid::with_n(Arc::new(table(m.a_n, 512)?), 32, *n)?;
                    let base = jet_torus(&g)?;
                    let cert = certify(&g, &base, &m.reduction.phi, r0);
                    let margins = cert.star_shape_margin > 0.0 && cert.normal_proj_min > 0.0 && cert.containment_margin > 0.0;
                    c.holds(
                        &format!("n = {n}: certificate"),
                        cert.passed && margins,
                        format!(
                            "star {:.3}, normal {:.3}, containment {:.3}",
                            cert.star_shape_margin, cert.normal_proj_min, cert.containment_margin
                        ),
                    );
                }
                Err(_) => c.holds(&format!("n = {n}: certificate"), false, "no matched solution".into()),
            }
        }

        let g = TorusGrid::with_n(Arc::new(table(0.1, 512)?), 32, 32)?;
        let base = jet_torus(&g)?;
        let breach = SymField::from_fn(512, 32, |i, _| 1.5 * r0 * g.tbl.x[i]);
        let cert = certify(&g, &base, &breach, r0);
        c.holds("manufactured breach fails", !cert.passed, format!("containment {:.3}", cert.containment_margin));

        for &(a, n) in &[(0.1, 16), (0.3, 8)] {
            let g = TorusGrid::with_n(Arc::new(table(a, 64)?), 16, n)?;
            let base = jet_torus(&g)?;
            let zero = SymField::zeros(64, 16);
            let cert = certify(&g, &base, &zero, r0);
            let hits = self_intersections(&torus_mesh(&g, &base, Some(&zero))?, 1);
            c.holds(
                &format!("mesh oracle agrees (a = {a}, n = {n}, 64×16)"),
                cert.passed == hits.is_empty(),
                format!("certificate {}, {} intersecting pairs", cert.passed, hits.len()),
            );
        }
        Ok(c)
    }

    fn c12(&self) -> anyhow::Result<Checks> {
        let mut c = Checks::new();
        let (mut area4, mut v3, mut cor) = (0.0f64, 0.0f64, 0.0f64);
        for &a in &A_SET {
            let n = NeckSize::new(a)?;
            let tbl = Arc::new(table(a, 512)?);
            let (area, _) = area_volume(&jet_unduloid(&TorusGrid::straight(tbl.clone(), 16)?)?);
            let vol = revolution_volume(&tbl);
            let (h, tau) = (height_h(&n), period_tau(&n));
            let lit_area = 4.0 * PI * (1.0 - a) * h;
            let lit_vol = 2.0 * PI / 3.0 * (1.0 - a) * ((2.0 - a + a * a) * h - a * a * tau / 2.0);
            area4 = area4.max((area / lit_area - 1.0).abs());
            v3 = v3.max((vol / lit_vol - 1.0).abs());
            let e = ellip_e(&n.modulus())?;
            let k = ellip_k(&n.modulus())?;
            let hmo_a = 4.0 * PI * (1.0 - a) * e;
            let hmo_v = 2.0 * PI / 3.0 * (1.0 - a) * ((2.0 - a + a * a) * e - a * a * k);
            cor = cor.max((area / hmo_a - 1.0).abs()).max((vol / hmo_v - 1.0).abs());
        }
        c.le("area vs 4π(1−a)h_a, rel", area4, 1e-8);
        c.le("volume vs (2π/3)(1−a)((2−a+a²)h_a − a²τ_a/2), rel", v3, 1e-8);
        c.note(format!("area vs 4π(1−a)E, volume vs (2π/3)(1−a)((2−a+a²)E − a²K), rel: {cor:.3e}"));

        let jet = jet_torus(&TorusGrid::with_n(Arc::new(table(0.1, 512)?), 32, 16)?)?;
        let (area, vol) = area_volume(&jet);
        let e1 = h_energy(&jet, &PrescribedCurvature::unit())?;
        c.le("ℰ₁ − (𝒜 + 2𝒱), rel", (e1 - area - 2.0 * vol).abs() / area, 1e-10);

        let quad = energy_a_derivative(32, 0.05, 512, 32)?;
        let fd = energy_a_derivative_fd(32, 0.05, 512, 32, 1e-4)?;
        c.le(
            &format!("a-derivative quadrature {quad:.6} vs FD {fd:.6}, rel"),
            (quad - fd).abs() / fd.abs(),
            1e-4,
        );

        let mut psi = vec![];
        for &a in &[1e-3, 0.01, 0.05, 0.1, 0.2] {
            let n = NeckSize::new(a)?;
            let tbl = solve_profile(n, default_n_t(&n))?;
            psi.push((kernel_mass(&tbl) - 2.0 * PI) / a);
        }
        let worst = psi.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        c.holds(
            "kernel mass = 2π + aΨ with Ψ bounded",
            worst <= 15.0,
            format!("Ψ = {:?}", psi.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()),
        );
        Ok(c)
    }
}

fn short(s: &str) -> String {
    if s.len() > 240 {
        let cut = (0..=240).rev().find(|&i| s.is_char_boundary(i)).unwrap_or(0);
        format!("{}…", &s[..cut])
    } else {
        s.to_string()
    }
}
