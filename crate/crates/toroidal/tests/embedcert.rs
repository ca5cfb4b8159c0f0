use std::sync::Arc;

use toroidal::elliptic::NeckSize;
use toroidal::embedcert::{certify, leaf_immersion, leaf_star_shape, normal_triple_product};
use toroidal::geometry::{jet_perturbed, jet_torus, mean_curvature, SurfaceJet, TorusGrid};
use toroidal::profile::{default_n_t, solve_profile};
use toroidal::reduction::{FixedPointOptions, PrescribedCurvature, Reduction};
use toroidal::{ProfileTable, SymField};

fn table(a: f64, n_t: usize) -> Arc<ProfileTable> {
    Arc::new(solve_profile(NeckSize::new(a).unwrap(), n_t).unwrap())
}

fn setup(a: f64, n: usize) -> (TorusGrid<f64>, SurfaceJet<f64>) {
    let g = TorusGrid::with_n(table(a, 256), 32, n).unwrap();
    let base = jet_torus(&g).unwrap();
    (g, base)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let d1 = cross(r, s, p);
    let d2 = cross(r, s, q);
    let d3 = cross(p, q, r);
    let d4 = cross(p, q, s);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Brute-force simplicity check of a closed polygon.
fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// The θ-curve of the leaf `X + r x N` at row `i`, rotated into the
/// meridian half-plane `(x₁, √(x₂² + x₃²))`.
fn leaf_section(g: &TorusGrid<f64>, base: &SurfaceJet<f64>, r: f64, i: usize) -> Vec<[f64; 2]> {
    (0..g.n_theta)
        .map(|k| {
            let p = base.at(i, k);
            let s = r * g.tbl.x[i];
            let y = [p.x[0] + s * p.n[0], p.x[1] + s * p.n[1], p.x[2] + s * p.n[2]];
            [y[0], (y[1] * y[1] + y[2] * y[2]).sqrt()]
        })
        .collect()
}

#[test]
fn zero_leaf_is_exact() {
    let (g, base) = setup(0.1, 32);
    assert_eq!(leaf_star_shape(&g, 0.0).unwrap(), 1.0);
    assert!((leaf_immersion(&g, &base, 0.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn star_margin_agrees_with_the_polygon_oracle() {
    let (g, base) = setup(0.1, 32);
    let m = leaf_star_shape(&g, 0.2).unwrap();
    assert!(m > 0.0);
    for i in (0..g.n_t()).step_by(8) {
        assert!(is_simple(&leaf_section(&g, &base, 0.2, i)), "row {i}");
    }
    assert!(!is_simple(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]));
}

#[test]
fn star_margin_decreases_with_r() {
    let (g, _) = setup(0.1, 32);
    for sign in [1.0, -1.0] {
        let mut prev = f64::INFINITY;
        for j in 0..=10 {
            let m = leaf_star_shape(&g, sign * 0.05 * j as f64).unwrap();
            assert!(m <= prev);
            prev = m;
        }
    }
    assert!(leaf_star_shape(&g, 2.0).is_err());
}

#[test]
fn leaf_immersion_small_r_expansion() {
    let (g, base) = setup(0.1, 32);
    let m = mean_curvature(&base).unwrap();
    let first_order = |r: f64| {
        (0..g.n_t())
            .flat_map(|i| (0..g.n_theta).map(move |k| (i, k)))
            .map(|(i, k)| 1.0 - 2.0 * r * g.tbl.x[i] * m.get(i, k))
            .fold(f64::INFINITY, f64::min)
    };
    let d: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&r| (leaf_immersion(&g, &base, r).unwrap() - first_order(r)).abs())
        .collect();
    for w in d.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..2.3).contains(&order), "{d:?}");
    }
}

#[test]
fn normal_triple_product_is_bounded() {
    let mut c = 0.0f64;
    for &a in &[1e-3, 0.01, 0.1, 0.5] {
        for &eps in &[0.01, 0.1] {
            let tbl = table(a, default_n_t(&NeckSize::new(a).unwrap()));
            let g = TorusGrid::with_eps(tbl, 16, eps).unwrap();
            c = c.max(normal_triple_product(&jet_torus(&g).unwrap()));
        }
    }
    assert!(c.is_finite() && c <= 4.0, "{c}");
}

#[test]
fn unperturbed_torus_passes() {
    let (g, base) = setup(0.1, 32);
    let cert = certify(&g, &base, &SymField::zeros(256, 32), 0.3);
    assert!(cert.passed, "{cert:?}");
    assert!((cert.containment_margin - 0.3).abs() < 1e-15);
    assert_eq!(cert.r0_used, 0.3);
}

#[test]
fn constructed_breach_fails() {
    let (g, base) = setup(0.1, 32);
    let r0 = 0.3;
    let phi = SymField::from_fn(256, 32, |i, _| 1.5 * r0 * g.tbl.x[i]);
    let cert = certify(&g, &base, &phi, r0);
    assert!(!cert.passed);
    assert!(cert.containment_margin < 0.0);
}

#[test]
fn certificate_is_monotone_in_r0() {
    let g = TorusGrid::with_eps(table(0.1, 256), 16, 0.02).unwrap();
    let h = PrescribedCurvature::new(-1.0, 1.0).unwrap();
    let red = Reduction::new(g.clone(), &h, FixedPointOptions::default()).unwrap();
    let res = red.run().unwrap();
    let threshold = (0..256)
        .map(|i| res.phi.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs())) / g.tbl.x[i])
        .fold(0.0f64, f64::max);
    assert!(certify(&g, &red.base, &res.phi, 0.3).passed);
    for j in 1..10 {
        let r0 = threshold + (0.3 - threshold) * j as f64 / 10.0;
        assert!(certify(&g, &red.base, &res.phi, r0).passed, "r0 = {r0}");
    }
    assert!(jet_perturbed(&red.base, &res.phi).is_ok());
}

#[test]
fn largest_passing_r0_shrinks_with_eps() {
    let tbl = table(0.1, 256);
    let largest = |eps: f64| {
        let g = TorusGrid::with_eps(tbl.clone(), 16, eps).unwrap();
        let base = jet_torus(&g).unwrap();
        let zero = SymField::zeros(256, 16);
        (1..=100)
            .map(|j| 0.02 * j as f64)
            .take_while(|&r0| certify(&g, &base, &zero, r0).passed)
            .last()
            .unwrap_or(0.0)
    };
    let r: Vec<f64> = [0.05, 0.2, 0.4].iter().map(|&e| largest(e)).collect();
    assert!(r[0] >= r[1] && r[1] >= r[2] && r[0] > r[2], "{r:?}");
}
