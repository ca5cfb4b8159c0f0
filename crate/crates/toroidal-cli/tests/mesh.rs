use std::sync::Arc;

use toroidal::elliptic::NeckSize;
use toroidal::geometry::jet_torus;
use toroidal::profile::solve_profile;
use toroidal::{SymField, TorusGrid};
use toroidal_cli::mesh::{self_intersections, torus_mesh, Format, MeshOut};

fn closed(a: f64, n: usize, n_t: usize, n_theta: usize) -> (TorusGrid, MeshOut) {
    let tbl = Arc::new(solve_profile(NeckSize::new(a).unwrap(), n_t).unwrap());
    let g = TorusGrid::with_n(tbl, n_theta, n).unwrap();
    let base = jet_torus(&g).unwrap();
    let m = torus_mesh(&g, &base, None).unwrap();
    (g, m)
}

/// Signed enclosed volume by the divergence theorem.
fn signed_volume(m: &MeshOut) -> f64 {
    m.triangles()
        .iter()
        .map(|t| {
            let [p, q, r] = [m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]];
            (p[0] * (q[1] * r[2] - q[2] * r[1]) - p[1] * (q[0] * r[2] - q[2] * r[0]) + p[2] * (q[0] * r[1] - q[1] * r[0]))
                / 6.0
        })
        .sum()
}

#[test]
fn counts_and_topology() {
    let (_, m) = closed(0.1, 16, 128, 16);
    assert_eq!(m.vertices.len(), 16 * 128 * 16);
    assert_eq!(m.faces.len(), 16 * 128 * 16);
    assert_eq!(m.euler_characteristic(), 0);
    assert!(m.is_closed_oriented());
}

#[test]
fn faces_point_outward() {
    let (_, m) = closed(0.5, 8, 64, 16);
    let v = signed_volume(&m);
    // cylinder of radius 1/2 bent along a circle of length 8π
    let exact = std::f64::consts::PI * 0.25 * 8.0 * std::f64::consts::PI;
    assert!(v > 0.0 && (v / exact - 1.0).abs() < 0.05, "{v} vs {exact}");
    let (_, m) = closed(0.1, 16, 128, 16);
    assert!(signed_volume(&m) > 0.0);
}

#[test]
fn cylinder_distance_from_axis() {
    let (g, m) = closed(0.5, 8, 64, 16);
    let r = 1.0 / g.eps;
    for v in &m.vertices {
        let d = (v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!(d >= r - 0.5 - 1e-9 && d <= r + 0.5 + 1e-9, "{d}");
    }
}

#[test]
fn obj_round_trip() {
    let (_, m) = closed(0.2, 8, 64, 16);
    let back = MeshOut::parse_obj(&m.to_obj()).unwrap();
    assert_eq!(back.faces, m.faces);
    let err = m
        .vertices
        .iter()
        .zip(&back.vertices)
        .flat_map(|(p, q)| (0..3).map(move |d| (p[d] - q[d]).abs()))
        .fold(0.0f64, f64::max);
    assert!(err <= 1e-12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.obj");
    m.write(&path, Format::from_path(&path).unwrap()).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), m.to_obj());
}

#[test]
fn ply_header() {
    let (_, m) = closed(0.2, 8, 64, 16);
    let s = m.to_ply();
    let lines: Vec<&str> = s.lines().take(10).collect();
    assert_eq!(lines[0], "ply");
    assert_eq!(lines[1], "format ascii 1.0");
    assert_eq!(lines[2], format!("element vertex {}", m.vertices.len()));
    assert!(lines.contains(&"end_header"));
    assert_eq!(s.lines().count(), 9 + m.vertices.len() + m.faces.len());
    assert!(Format::from_path(std::path::Path::new("x.stl")).is_err());
}

#[test]
fn intersection_oracle() {
    let (_, m) = closed(0.1, 16, 64, 16);
    assert!(self_intersections(&m, 1).is_empty());
    let (g, _) = closed(0.1, 16, 64, 16);
    let base = jet_torus(&g).unwrap();
    // pushing every point far along its inward normal folds the tube through itself
    let phi = SymField::from_fn(64, 16, |i, _| 3.0 * g.tbl.x[i]);
    let folded = torus_mesh(&g, &base, Some(&phi)).unwrap();
    assert!(!self_intersections(&folded, 1).is_empty());
}

#[test]
fn needs_closed_grid() {
    let tbl = Arc::new(solve_profile(NeckSize::new(0.1).unwrap(), 64).unwrap());
    let g = TorusGrid::with_eps(tbl, 16, 0.05).unwrap();
    assert!(torus_mesh(&g, &jet_torus(&g).unwrap(), None).is_err());
}
