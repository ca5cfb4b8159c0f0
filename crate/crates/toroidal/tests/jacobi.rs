use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toroidal::elliptic::NeckSize;
use toroidal::field::ThetaBasis;
use toroidal::geometry::{jet_perturbed, jet_torus, mean_curvature, TorusGrid};
use toroidal::jacobi::{assemble_full, project_kernel, KernelPair, LimitOperator, ProjectedSolver};
use toroidal::profile::{solve_profile, weighted_norm};
use toroidal::stencil::Stencil;
use toroidal::{ProfileTable, SymField, WeightedNormSpec};

fn table(a: f64, n_t: usize) -> ProfileTable {
    solve_profile(NeckSize::new(a).unwrap(), n_t).unwrap()
}

/// Smooth symmetric field built from a few symmetric θ-modes with
/// profiles in `cos(kπt/τ)`.
fn smooth_field(tbl: &ProfileTable, n_theta: usize, seed: u64) -> SymField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = ThetaBasis::new(n_theta);
    let coef: Vec<(usize, usize, f64)> = (0..8)
        .map(|_| (rng.gen_range(0..6), rng.gen_range(0..4), rng.gen_range(-1.0..1.0)))
        .collect();
    SymField::from_fn(tbl.n_t(), n_theta, |i, k| {
        let t = tbl.t_grid[i];
        coef.iter()
            .map(|&(j, m, c)| c * (m as f64 * std::f64::consts::PI * t / tbl.tau).cos() * basis.sym_mode(j, k))
            .sum()
    })
}

#[test]
fn kernel_residual_of_w1_is_second_order() {
    let mut res = vec![];
    for n in [256, 512, 1024, 2048] {
        let tbl = table(0.1, n);
        let op = LimitOperator::new(&tbl, 16, Stencil::Second);
        let ker = KernelPair::from_table(&tbl, 16);
        res.push(op.apply(&ker.w1_field).sup_norm());
    }
    for w in res.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "{res:?}");
    }
    assert!(res[3] < 1e-5, "{res:?}");
}

#[test]
fn w0_residual_is_concentrated_at_the_seam() {
    let tbl = table(0.1, 512);
    let op = LimitOperator::new(&tbl, 16, Stencil::Second);
    let ker = KernelPair::from_table(&tbl, 16);
    let r = op.apply(&ker.w0_field);
    let interior = (20..492).map(|i| r.get(i, 0).abs()).fold(0.0, f64::max);
    let seam = r.get(0, 0).abs();
    // the even seed has a derivative jump 2y'(τ) across t = ±τ
    let jump = 2.0 * tbl.y0p[tbl.center() + 255].abs();
    assert!(interior < 1e-3, "{interior}");
    assert!((seam * tbl.dt / jump - 1.0).abs() < 0.05, "{seam} {jump}");
}

#[test]
fn cylinder_sin_theta_is_annihilated() {
    let tbl = table(0.5, 128);
    let op = LimitOperator::new(&tbl, 16, Stencil::Fourth);
    let basis = ThetaBasis::new(16);
    let f = SymField::from_fn(128, 16, |_, k| basis.sin(1, k));
    assert!(op.apply(&f).sup_norm() < 1e-12);
}

#[test]
fn operator_is_self_adjoint_and_mode_diagonal() {
    let tbl = table(0.2, 256);
    for s in [Stencil::Second, Stencil::Fourth] {
        let op = LimitOperator::new(&tbl, 16, s);
        let u = smooth_field(&tbl, 16, 1);
        let v = smooth_field(&tbl, 16, 2);
        let lhs = op.apply(&u).dot(&v, tbl.dt);
        let rhs = u.dot(&op.apply(&v), tbl.dt);
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }
    let op = LimitOperator::new(&tbl, 16, Stencil::Second);
    let basis = ThetaBasis::new(16);
    let f = SymField::from_fn(256, 16, |i, k| tbl.x[i] * basis.cos(4, k));
    let g = op.apply(&f);
    for i in 0..256 {
        let (a, b) = basis.analyze(g.row(i));
        for (j, v) in a.iter().enumerate() {
            if j != 4 {
                assert!(v.abs() < 1e-13);
            }
        }
        assert!(b.iter().all(|v| v.abs() < 1e-13));
    }
}

#[test]
fn projection_is_idempotent() {
    let tbl = table(0.1, 256);
    let ker = KernelPair::from_table(&tbl, 16);
    let (c0, c1, r) = project_kernel(&ker.w0_field, &ker);
    assert!((c0 - 1.0).abs() < 1e-12 && c1.abs() < 1e-12 && r.sup_norm() < 1e-12);
    let (c0, c1, _) = project_kernel(&ker.w1_field, &ker);
    assert!(c0.abs() < 1e-12 && (c1 - 1.0).abs() < 1e-12);
    let f = smooth_field(&tbl, 16, 7);
    let (_, _, r) = project_kernel(&f, &ker);
    let (d0, d1, _) = project_kernel(&r, &ker);
    assert!(d0.abs() < 1e-12 && d1.abs() < 1e-12);
    assert!(ker.gram[0][1].abs() < 1e-10 * (ker.gram[0][0] * ker.gram[1][1]).sqrt());
}

#[test]
fn manufactured_solution() {
    let tbl = table(0.1, 512);
    let solver = ProjectedSolver::new(&tbl, 32, Stencil::Second).unwrap();
    let (_, _, psi) = project_kernel(&smooth_field(&tbl, 32, 3), &solver.kernel);
    let f = solver.op.apply(&psi);
    let (phi, info) = solver.solve_bordered(&f).unwrap();
    let mut err = phi.clone();
    err.axpy(-1.0, &psi);
    assert!(err.sup_norm() / psi.sup_norm() < 1e-6, "{}", err.sup_norm());
    assert!(info.mu[0].abs() < 1e-8 && info.mu[1].abs() < 1e-8, "{info:?}");
}

#[test]
fn constant_coefficient_mode_three() {
    let tbl = table(0.5, 256);
    let solver = ProjectedSolver::new(&tbl, 16, Stencil::Fourth).unwrap();
    let basis = ThetaBasis::new(16);
    // (∂tt + 1 − 9)φ = f with f = cos(2t) sin3θ; the discrete symbol of the
    // stencil gives the exact grid solution
    let h = tbl.dt;
    let sym = (-(2.0 * 2.0 * h).cos() + 16.0 * (2.0 * h).cos() - 15.0) * 2.0 / (12.0 * h * h) - 8.0;
    let f = SymField::from_fn(256, 16, |i, k| (2.0 * tbl.t_grid[i]).cos() * basis.sin(3, k));
    let phi = solver.solve_projected(&f).unwrap();
    let exact = f.map(|v| v / sym);
    let mut d = phi.clone();
    d.axpy(-1.0, &exact);
    assert!(d.sup_norm() / exact.sup_norm() < 1e-8);
    let cont = f.map(|v| v / -12.0);
    let mut d2 = phi;
    d2.axpy(-1.0, &cont);
    assert!(d2.sup_norm() / cont.sup_norm() < 1e-4);
}

#[test]
fn solvability_violation_is_reported() {
    let tbl = table(0.1, 256);
    let solver = ProjectedSolver::new(&tbl, 16, Stencil::Second).unwrap();
    let f = solver.kernel.w1_field.clone();
    assert!(solver.solve_projected(&f).is_err());
}

#[test]
fn solve_then_apply_off_the_w0_direction() {
    let tbl = table(0.1, 512);
    let solver = ProjectedSolver::new(&tbl, 32, Stencil::Second).unwrap();
    let basis = ThetaBasis::new(32);
    // modes j ≥ 1 carry no w0 content, so the bordered multiplier vanishes
    let f0 = smooth_field(&tbl, 32, 11);
    let f = SymField::from_fn(512, 32, |i, k| {
        let (a, _) = basis.analyze(f0.row(i));
        f0.get(i, k) - a[0]
    });
    let (_, _, f) = project_kernel(&f, &solver.kernel);
    let phi = solver.solve_projected(&f).unwrap();
    let mut r = solver.op.apply(&phi);
    r.axpy(-1.0, &f);
    assert!(r.sup_norm() <= 1e-8 * f.sup_norm(), "{}", r.sup_norm() / f.sup_norm());
}

#[test]
fn no_spurious_kernel() {
    let tbl = table(0.1, 512);
    let solver = ProjectedSolver::new(&tbl, 16, Stencil::Second).unwrap();
    for j in 0..=8 {
        let g = solver.mode_min_gain(j, 30);
        assert!(g > 1e-2, "mode {j}: {g}");
    }
}

#[test]
fn full_coefficients_tend_to_limit() {
    let tbl = Arc::new(table(0.1, 256));
    let g = TorusGrid::with_eps(tbl.clone(), 16, 1e-7).unwrap();
    let c = assemble_full(&g, &jet_torus(&g).unwrap()).unwrap();
    let dev = c.deviations();
    assert!(dev.iter().all(|&d| d <= 1e-6), "{dev:?}");
    let g = TorusGrid::with_eps(tbl, 16, 0.05).unwrap();
    let c = assemble_full(&g, &jet_torus(&g).unwrap()).unwrap();
    assert!(c.deviations()[0] / 0.05 <= 3.0);
}

#[test]
fn full_operator_is_the_linearized_curvature() {
    let tbl = Arc::new(table(0.1, 256));
    let g = TorusGrid::with_eps(tbl.clone(), 16, 0.08).unwrap();
    let base = jet_torus(&g).unwrap();
    let coeffs = assemble_full(&g, &base).unwrap();
    let phi = smooth_field(&tbl, 16, 5).map(|v| 0.1 * v);
    let h = 1e-6;
    let m0 = mean_curvature(&base).unwrap();
    let m1 = mean_curvature(&jet_perturbed(&base, &phi.map(|v| h * v)).unwrap()).unwrap();
    let lin = coeffs.apply(&phi);
    let mut worst = 0.0f64;
    for i in 0..256 {
        let x2 = tbl.x[i] * tbl.x[i];
        for k in 0..16 {
            let fd = 2.0 * x2 * (m1.get(i, k) - m0.get(i, k)) / h;
            worst = worst.max((fd - lin.get(i, k)).abs());
        }
    }
    assert!(worst <= 1e-4f64.max(10.0 * h), "{worst}");
}

#[test]
fn higher_modes_have_a_uniform_inverse_bound() {
    let spec = WeightedNormSpec::default();
    let mut ratios = vec![];
    for &a in &[0.1, 0.03, 0.01] {
        let tbl = table(a, 512);
        let solver = ProjectedSolver::new(&tbl, 16, Stencil::Second).unwrap();
        let basis = ThetaBasis::new(16);
        let mut worst = 0.0f64;
        for seed in 0..3 {
            let f0 = smooth_field(&tbl, 16, 100 + seed);
            let f = SymField::from_fn(512, 16, |i, k| {
                let (c, s) = basis.analyze(f0.row(i));
                let low = c[0] + c[1] * basis.cos(1, k) + s[1] * basis.sin(1, k);
                (f0.get(i, k) - low) * tbl.x[i].powf(1.5)
            });
            let phi = solver.solve_projected(&f).unwrap();
            let r = weighted_norm(&phi, &tbl, &spec, 2).unwrap() / weighted_norm(&f, &tbl, &spec, 0).unwrap();
            worst = worst.max(r);
        }
        ratios.push(worst);
    }
    assert!(ratios.iter().all(|&r| r < 5.0), "{ratios:?}");
    assert!(ratios[2] <= 1.5 * ratios[0], "{ratios:?}");
}

#[test]
fn mode_one_gap_closes_linearly() {
    let gaps: Vec<f64> = [0.1, 0.03, 0.01]
        .iter()
        .map(|&a| {
            let tbl = table(a, 1024);
            let solver = ProjectedSolver::new(&tbl, 16, Stencil::Second).unwrap();
            solver.mode_min_gain(1, 40) / a
        })
        .collect();
    for g in &gaps {
        assert!((2.5..5.0).contains(g), "{gaps:?}");
    }
}
