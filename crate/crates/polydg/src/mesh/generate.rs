use super::SimplicialMesh;
use crate::geometry::Point2;
use crate::Result;

/// Structured `n x n` grid of the square `[x0, x0+l] x [y0, y0+l]`, each cell
/// split along its lower-left/upper-right diagonal (2 n^2 triangles).
pub fn structured_mesh(x0: f64, y0: f64, l: f64, n: usize) -> Result<SimplicialMesh> {
    assert!(n >= 1);
    let h = l / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(x0 + i as f64 * h, y0 + j as f64 * h));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    SimplicialMesh::new(vertices, triangles)
}

/// Square of edge length `edge` centered at the origin with roughly
/// `target_triangles` triangles (rounded to the nearest 2 n^2).
pub fn square_mesh(edge: f64, target_triangles: usize) -> Result<SimplicialMesh> {
    let n = ((target_triangles as f64 / 2.0).sqrt().round() as usize).max(1);
    structured_mesh(-0.5 * edge, -0.5 * edge, edge, n)
}

/// Unit disc centered at the origin, meshed with `rings` concentric rings of
/// vertices (ring j holds 6 j vertices at radius j / rings; 6 rings^2
/// triangles in total). `target_triangles` picks the nearest ring count.
pub fn disc_mesh(target_triangles: usize) -> Result<SimplicialMesh> {
    let rings = ((target_triangles as f64 / 6.0).sqrt().round() as usize).max(1);
    disc_mesh_rings(rings)
}

pub fn disc_mesh_rings(rings: usize) -> Result<SimplicialMesh> {
    assert!(rings >= 1);
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    let mut ring_start = vec![0usize; rings + 1];
    for j in 1..=rings {
        ring_start[j] = vertices.len();
        let m = 6 * j;
        let r = j as f64 / rings as f64;
        for i in 0..m {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            vertices.push(Point2::new(r * theta.cos(), r * theta.sin()));
        }
    }

    let mut triangles = Vec::with_capacity(6 * rings * rings);
    // Center fan.
    for i in 0..6 {
        triangles.push([0, ring_start[1] + i, ring_start[1] + (i + 1) % 6]);
    }
    // Annular bands: walk both rings by increasing angle, always advancing
    // the endpoint with the smaller next angle.
    for j in 2..=rings {
        let (no, ni) = (6 * j, 6 * (j - 1));
        let outer = |i: usize| ring_start[j] + i % no;
        let inner = |k: usize| ring_start[j - 1] + k % ni;
        let angle = |idx: usize, m: usize| 2.0 * std::f64::consts::PI * idx as f64 / m as f64;
        let (mut i, mut k) = (0usize, 0usize);
        while i < no || k < ni {
            let advance_outer = if i >= no {
                false
            } else if k >= ni {
                true
            } else {
                angle(i + 1, no) <= angle(k + 1, ni) + 1e-12
            };
            if advance_outer {
                triangles.push([outer(i), outer(i + 1), inner(k)]);
                i += 1;
            } else {
                triangles.push([outer(i), inner(k + 1), inner(k)]);
                k += 1;
            }
        }
    }
    SimplicialMesh::new(vertices, triangles)
}
