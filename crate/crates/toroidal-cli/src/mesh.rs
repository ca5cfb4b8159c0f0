//! Quad meshes of the closed torus, OBJ/PLY writers, and a brute-force
//! triangle intersection oracle for coarse meshes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use toroidal::geometry::{mat_vec, rotation, SurfaceJet, TorusGrid};
use toroidal::SymField;

pub type V3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct MeshOut {
    pub vertices: Vec<V3>,
    /// Faces wound counter-clockwise seen from the outward side.
    pub faces: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Obj,
    Ply,
}

impl Format {
    pub fn from_path(p: &Path) -> Result<Self> {
        match p.extension().and_then(|e| e.to_str()) {
            Some("obj") => Ok(Self::Obj),
            Some("ply") => Ok(Self::Ply),
            other => bail!("unknown mesh extension {other:?}"),
        }
    }
}

/// Cell points `X + φN`, row-major.
fn cell_points(base: &SurfaceJet<f64>, phi: Option<&SymField>) -> Vec<V3> {
    base.pts
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let s = phi.map_or(0.0, |f| f.values()[idx]);
            [p.x[0] + s * p.n[0], p.x[1] + s * p.n[1], p.x[2] + s * p.n[2]]
        })
        .collect()
}

/// Closed torus from the fundamental cell and its rotations by `2πk/n`.
pub fn torus_mesh(grid: &TorusGrid<f64>, base: &SurfaceJet<f64>, phi: Option<&SymField>) -> Result<MeshOut> {
    let Some(n) = grid.n else {
        bail!("mesh export needs a closed torus (grid built from n)");
    };
    let (nt, nth) = (base.n_t, base.n_theta);
    let cell = cell_points(base, phi);
    let mut vertices = Vec::with_capacity(n * cell.len());
    for k in 0..n {
        let r = rotation(2.0 * std::f64::consts::PI * k as f64 / n as f64);
        vertices.extend(cell.iter().map(|p| mat_vec(&r, p)));
    }
    let rows = n * nt;
    let id = |i: usize, k: usize| (i % rows) * nth + k % nth;
    let mut faces = Vec::with_capacity(rows * nth);
    for i in 0..rows {
        for k in 0..nth {
            // the base normal points inward, so (t, θ) order is reversed
            faces.push(vec![id(i, k), id(i, k + 1), id(i + 1, k + 1), id(i + 1, k)]);
        }
    }
    Ok(MeshOut { vertices, faces })
}

impl MeshOut {
    pub fn edges(&self) -> usize {
        let mut set = std::collections::HashSet::new();
        for f in &self.faces {
            for j in 0..f.len() {
                let (a, b) = (f[j], f[(j + 1) % f.len()]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges() as i64 + self.faces.len() as i64
    }

    /// Every directed edge is used once and its reverse once.
    pub fn is_closed_oriented(&self) -> bool {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for j in 0..f.len() {
                *count.entry((f[j], f[(j + 1) % f.len()])).or_default() += 1;
            }
        }
        count.iter().all(|(&(a, b), &c)| c == 1 && count.get(&(b, a)) == Some(&1))
    }

    /// Newell normal of face `f`.
    pub fn face_normal(&self, f: usize) -> V3 {
        let face = &self.faces[f];
        let mut n = [0.0; 3];
        for j in 0..face.len() {
            let p = self.vertices[face[j]];
            let q = self.vertices[face[(j + 1) % face.len()]];
            n[0] += (p[1] - q[1]) * (p[2] + q[2]);
            n[1] += (p[2] - q[2]) * (p[0] + q[0]);
            n[2] += (p[0] - q[0]) * (p[1] + q[1]);
        }
        n
    }

    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.faces
            .iter()
            .flat_map(|f| (1..f.len() - 1).map(move |j| [f[0], f[j], f[j + 1]]))
            .collect()
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            s.push('f');
            for i in f {
                let _ = write!(s, " {}", i + 1);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_ply(&self) -> String {
        let mut s = String::new();
        s.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(s, "element vertex {}", self.vertices.len());
        s.push_str("property double x\nproperty double y\nproperty double z\n");
        let _ = writeln!(s, "element face {}", self.faces.len());
        s.push_str("property list uchar int vertex_indices\nend_header\n");
        for v in &self.vertices {
            let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = write!(s, "{}", f.len());
            for i in f {
                let _ = write!(s, " {i}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let body = match format {
            Format::Obj => self.to_obj(),
            Format::Ply => self.to_ply(),
        };
        let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(body.as_bytes())?;
        Ok(())
    }

    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it.map(str::parse).collect::<std::result::Result<_, _>>()?;
                    if c.len() != 3 {
                        bail!("line {}: vertex needs 3 coordinates", ln + 1);
                    }
                    vertices.push([c[0], c[1], c[2]]);
                }
                Some("f") => {
                    let f: Vec<usize> = it
                        .map(|w| w.split('/').next().unwrap_or(w).parse::<usize>().map(|i| i - 1))
                        .collect::<std::result::Result<_, _>>()?;
                    faces.push(f);
                }
                _ => {}
            }
        }
        Ok(Self { vertices, faces })
    }
}

fn sub(a: &V3, b: &V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Segment `pq` against triangle `abc` (Möller–Trumbore, closed segment).
pub fn segment_hits_triangle(p: &V3, q: &V3, a: &V3, b: &V3, c: &V3) -> bool {
    let d = sub(q, p);
    let e1 = sub(b, a);
    let e2 = sub(c, a);
    let h = cross(&d, &e2);
    let det = dot(&e1, &h);
    if det.abs() < 1e-300 {
        return false;
    }
    let inv = 1.0 / det;
    let s = sub(p, a);
    let u = inv * dot(&s, &h);
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qv = cross(&s, &e1);
    let v = inv * dot(&d, &qv);
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let t = inv * dot(&e2, &qv);
    (0.0..=1.0).contains(&t)
}

/// Non-coplanar triangle pair test: some edge of one crosses the other.
pub fn triangles_intersect(t: &[V3; 3], u: &[V3; 3]) -> bool {
    (0..3).any(|j| segment_hits_triangle(&t[j], &t[(j + 1) % 3], &u[0], &u[1], &u[2]))
        || (0..3).any(|j| segment_hits_triangle(&u[j], &u[(j + 1) % 3], &t[0], &t[1], &t[2]))
}

/// Pairs of vertex-disjoint triangles that intersect, by sweep-and-prune
/// along `x₁` followed by the exact pair test.
pub fn self_intersections(mesh: &MeshOut, limit: usize) -> Vec<(usize, usize)> {
    let tris = mesh.triangles();
    let pts: Vec<[V3; 3]> = tris
        .iter()
        .map(|t| [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]])
        .collect();
    let boxes: Vec<(V3, V3)> = pts
        .iter()
        .map(|p| {
            let mut lo = p[0];
            let mut hi = p[0];
            for v in &p[1..] {
                for d in 0..3 {
                    lo[d] = lo[d].min(v[d]);
                    hi[d] = hi[d].max(v[d]);
                }
            }
            (lo, hi)
        })
        .collect();
    let axis = (0..3)
        .max_by(|&i, &j| {
            let span = |d: usize| {
                let lo = boxes.iter().map(|b| b.0[d]).fold(f64::INFINITY, f64::min);
                let hi = boxes.iter().map(|b| b.1[d]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            };
            span(i).total_cmp(&span(j))
        })
        .unwrap_or(0);
    let mut order: Vec<usize> = (0..tris.len()).collect();
    order.sort_by(|&i, &j| boxes[i].0[axis].total_cmp(&boxes[j].0[axis]));
    let mut hits = Vec::new();
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if boxes[j].0[axis] > boxes[i].1[axis] {
                break;
            }
            let overlap = (0..3).all(|d| boxes[i].0[d] <= boxes[j].1[d] && boxes[j].0[d] <= boxes[i].1[d]);
            if !overlap || tris[i].iter().any(|v| tris[j].contains(v)) {
                continue;
            }
            if triangles_intersect(&pts[i], &pts[j]) {
                hits.push((i.min(j), i.max(j)));
                if hits.len() >= limit {
                    return hits;
                }
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_separate_triangles() {
        let t = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let u = [[0.2, 0.2, -1.0], [0.2, 0.2, 1.0], [0.3, 0.9, 0.5]];
        assert!(triangles_intersect(&t, &u));
        let w = [[0.2, 0.2, 0.5], [0.6, 0.2, 1.0], [0.3, 0.4, 0.7]];
        assert!(!triangles_intersect(&t, &w));
    }

    #[test]
    fn obj_parse_reads_slash_indices() {
        let m = MeshOut::parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n").unwrap();
        assert_eq!(m.faces, vec![vec![0, 1, 2]]);
    }
}
