use std::sync::Arc;

use toroidal::elliptic::NeckSize;
use toroidal::field::ThetaBasis;
use toroidal::geometry::{field_derivs_with, jet_torus, jet_unduloid, mean_curvature, DerivScheme, TorusGrid};
use toroidal::jacobi::{assemble_full, project_kernel};
use toroidal::profile::solve_profile;
use toroidal::reduction::{
    envelope_constant, residual, FixedPointOptions, PrescribedCurvature, Reduction, ReductionResult,
};
use toroidal::stencil::Stencil;
use toroidal::{ProfileTable, SymField};

fn table(a: f64, n_t: usize) -> Arc<ProfileTable> {
    Arc::new(solve_profile(NeckSize::new(a).unwrap(), n_t).unwrap())
}

fn run(tbl: &Arc<ProfileTable>, n_theta: usize, eps: f64, h: &PrescribedCurvature, anderson: usize) -> ReductionResult {
    let g = TorusGrid::with_eps(tbl.clone(), n_theta, eps).unwrap();
    let opts = FixedPointOptions {
        anderson,
        ..FixedPointOptions::default()
    };
    Reduction::new(g, h, opts).unwrap().run().unwrap()
}

#[test]
fn prescribed_curvature_examples() {
    let one = PrescribedCurvature::unit();
    assert_eq!(one.eval(&[3.0, 4.0, 12.0]).unwrap(), 1.0);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    assert!((h.eval(&[0.0, 6.0, 8.0]).unwrap() - 0.9).abs() < 1e-15);
    assert!(h.eval(&[0.1, 0.0, 0.0]).is_err());
    assert!(PrescribedCurvature::new(-1.0, 2.0).is_err());
    let x = [12.0, -9.0, 8.0];
    let g = h.grad(&x).unwrap();
    for m in 0..3 {
        let mut p = x;
        let mut q = x;
        p[m] += 1e-5;
        q[m] -= 1e-5;
        let fd = (h.eval(&p).unwrap() - h.eval(&q).unwrap()) / 2e-5;
        assert!((fd - g[m]).abs() <= 1e-6 * g[m].abs().max(1e-12));
    }
}

#[test]
fn straight_unduloid_has_no_residual() {
    let g = TorusGrid::straight(table(0.1, 256), 16).unwrap();
    let base = jet_unduloid(&g).unwrap();
    let phi = SymField::zeros(256, 16);
    let r = residual(&base, &phi, &PrescribedCurvature::unit(), DerivScheme::matching(Stencil::Second)).unwrap();
    assert!(r.sup_norm() <= 1e-8, "{}", r.sup_norm());
}

#[test]
fn torus_residual_is_linear_in_eps() {
    let tbl = table(0.1, 256);
    let phi = SymField::zeros(256, 16);
    let sup: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let g = TorusGrid::with_eps(tbl.clone(), 16, eps).unwrap();
            let base = jet_torus(&g).unwrap();
            residual(&base, &phi, &PrescribedCurvature::unit(), DerivScheme::FOURTH)
                .unwrap()
                .sup_norm()
        })
        .collect();
    for w in sup.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 1.0).abs() < 0.1, "{sup:?}");
    }
}

#[test]
fn manufactured_target_is_a_fixed_point() {
    let tbl = table(0.1, 256);
    let g = TorusGrid::with_eps(tbl, 16, 0.05).unwrap();
    let target = mean_curvature(&jet_torus(&g).unwrap()).unwrap();
    let red = Reduction::new(g, &target, FixedPointOptions::default()).unwrap();
    let res = red.run().unwrap();
    assert_eq!(res.iterations, 1);
    assert!(res.phi.sup_norm() <= 1e-10);
    assert!(res.lambda0.abs() <= 1e-10 && res.lambda1.abs() <= 1e-10);
}

#[test]
fn converged_reduction_is_self_consistent() {
    let tbl = table(0.1, 256);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let g = TorusGrid::with_eps(tbl.clone(), 16, 0.02).unwrap();
    let red = Reduction::new(g, &h, FixedPointOptions::default()).unwrap();
    let res = red.run().unwrap();
    let scale = 1f64.max(res.lambda0.abs()).max(res.lambda1.abs());
    assert!(red.self_consistency(&res).unwrap() <= 1e-7 * scale);
    assert!(res.residual_orth <= 1e-8, "{}", res.residual_orth);
    let (c0, c1, _) = project_kernel(&res.phi, red.kernel());
    assert!(c0.abs() <= 1e-10 && c1.abs() <= 1e-10, "{c0} {c1}");
    assert!(res.phi.symmetry_defect() <= 1e-12);
    let r = envelope_constant(&res.phi, &tbl.x, res.eps, 1.0, 1.5);
    assert!(r.is_finite() && r > 0.0);

    // step ratios settle below one
    let steps: Vec<f64> = res.trace.iter().map(|t| t.step).collect();
    let ratios: Vec<f64> = steps.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len() / 2..];
    assert!(tail.iter().all(|&q| q < 1.0), "{ratios:?}");
}

#[test]
fn iterates_stay_symmetric() {
    let tbl = table(0.1, 256);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let g = TorusGrid::with_eps(tbl, 16, 0.02).unwrap();
    let opts = FixedPointOptions {
        max_iter: 4,
        ..FixedPointOptions::default()
    };
    let red = Reduction::new(g, &h, opts).unwrap();
    let mut phi = SymField::zeros(256, 16);
    for _ in 0..4 {
        let mut f = red.forcing(&phi).unwrap();
        let (_, _, p) = project_kernel(&f, red.kernel());
        f = p;
        phi = red.solver.solve_projected(&f).unwrap();
        assert!(phi.symmetry_defect() <= 1e-12);
    }
}

#[test]
fn anderson_reproduces_picard() {
    let tbl = table(0.1, 256);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let p = run(&tbl, 16, 0.02, &h, 0);
    let a = run(&tbl, 16, 0.02, &h, 3);
    let mut d = p.phi.clone();
    d.axpy(-1.0, &a.phi);
    assert!(d.sup_norm() <= 1e-9, "{}", d.sup_norm());
    assert!((p.lambda0 - a.lambda0).abs() <= 1e-9);
    assert!(a.iterations <= p.iterations);
}

#[test]
fn contraction_improves_as_eps_shrinks() {
    let tbl = table(0.1, 256);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let rate = |eps: f64| {
        let r = run(&tbl, 16, eps, &h, 0);
        let s: Vec<f64> = r.trace.iter().map(|t| t.step).collect();
        let n = s.len();
        (s[n - 2] / s[2]).powf(1.0 / (n - 4) as f64)
    };
    let (r1, r2) = (rate(0.02), rate(0.005));
    assert!(r2 < r1, "{r1} {r2}");
}

#[test]
fn scaling_in_eps_for_gamma_one() {
    let tbl = table(0.1, 256);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let eps = [0.01, 0.005, 0.0025];
    let norms: Vec<f64> = eps.iter().map(|&e| run(&tbl, 16, e, &h, 0).phi_norm_weighted).collect();
    let slope = (norms[0] / norms[2]).ln() / (eps[0] / eps[2]).ln();
    assert!((slope - 1.0).abs() <= 0.15, "{norms:?} {slope}");
}

#[test]
fn linearization_at_zero() {
    let tbl = table(0.1, 256);
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let g = TorusGrid::with_eps(tbl.clone(), 16, 0.05).unwrap();
    let red = Reduction::new(g.clone(), &h, FixedPointOptions::default()).unwrap();
    let basis = ThetaBasis::new(16);
    let phi = SymField::from_fn(256, 16, |i, k| {
        let t = tbl.t_grid[i] / tbl.tau;
        0.1 * (std::f64::consts::PI * t).cos() * basis.sym_mode(2, k) + 0.05 * basis.sym_mode(1, k)
    });
    let s = 1e-6;
    let f0 = red.forcing(&SymField::zeros(256, 16)).unwrap();
    let f1 = red.forcing(&phi.map(|v| s * v)).unwrap();

    // −(𝔏_ε − 𝔏_a)φ + 2x²(∇H·N)φ with 𝔏_ε differenced like the map
    let c = assemble_full(&g, &red.base).unwrap();
    let [ft, fth, ftt, _, fthth] = field_derivs_with(&phi, tbl.dt, DerivScheme::matching(Stencil::Second));
    let v = phi.values();
    let l_eps: Vec<f64> = (0..v.len())
        .map(|j| {
            c.b.values()[j] * ftt[j] + fthth[j] + c.c.values()[j] * v[j] + c.d.values()[j] * ft[j] + c.e.values()[j] * fth[j]
        })
        .collect();
    let mut lin = red.solver.op.apply(&phi);
    lin.axpy(-1.0, &SymField::from_values(256, 16, l_eps).unwrap());
    lin.axpy(1.0, &red.normal_gradient(&h).unwrap().zip_map(&phi, |a, b| a * b));

    let mut worst = 0.0f64;
    for j in 0..v.len() {
        let fd = (f1.values()[j] - f0.values()[j]) / s;
        worst = worst.max((fd - lin.values()[j]).abs());
    }
    assert!(worst <= 1e-4, "{worst}");
}
