use super::SimplicialMesh;
use crate::geometry::Point2;
use crate::recovery::ContinuousField;
use crate::{Error, Result};

/// Sign of the level-set function on a fitted triangle (barycenter value;
/// exact zeros count as positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Pos,
    Neg,
}

/// Result of fitting a mesh to the zero-level set of a continuous field:
/// the refined mesh, the parent triangle of every fitted triangle, and the
/// level-set sign of each fitted triangle.
///
/// Vertices of the input mesh keep their indices; inserted vertices follow.
#[derive(Debug, Clone)]
pub struct FittedMesh {
    pub mesh: SimplicialMesh,
    pub parent: Vec<usize>,
    pub sign: Vec<Sign>,
    n_base_vertices: usize,
}

impl FittedMesh {
    pub fn n_base_vertices(&self) -> usize {
        self.n_base_vertices
    }

    /// True if the vertex was inserted on a cut edge (lies on the fitted
    /// zero-level set).
    pub fn is_zero_set_vertex(&self, v: usize) -> bool {
        v >= self.n_base_vertices
    }

    pub fn triangles_with_sign(&self, sign: Sign) -> impl Iterator<Item = usize> + '_ {
        self.sign
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == sign)
            .map(|(t, _)| t)
    }

    pub fn count_sign(&self, sign: Sign) -> usize {
        self.sign.iter().filter(|&&s| s == sign).count()
    }

    /// Vertices on the fitted zero-level set: endpoints of interior edges
    /// separating triangles of opposite sign.
    pub fn zero_set_vertices(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for e in self.mesh.edges() {
            if e.is_boundary() {
                continue;
            }
            if self.sign[e.tris[0]] != self.sign[e.tris[1]] {
                out.push(e.vertices[0]);
                out.push(e.vertices[1]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Total length of interior edges separating triangles of opposite sign.
    pub fn zero_set_length(&self) -> f64 {
        self.mesh
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                !e.is_boundary() && self.sign[e.tris[0]] != self.sign[e.tris[1]]
            })
            .map(|(i, _)| self.mesh.edge_length(i))
            .sum()
    }

    /// Number of edge-connected components among triangles of `sign`.
    pub fn count_components(&self, sign: Sign) -> usize {
        let n = self.mesh.n_triangles();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] || self.sign[start] != sign {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(t) = stack.pop() {
                for &e in &self.mesh.tri_edges(t) {
                    if let Some(o) = self.mesh.edge(e).other_tri(t) {
                        if !seen[o] && self.sign[o] == sign {
                            seen[o] = true;
                            stack.push(o);
                        }
                    }
                }
            }
        }
        components
    }
}

/// Sign with values within eps of zero perturbed to positive, making the
/// sign function total (a three-way sign logic is never needed). `eps` is
/// 1e-12 times the value scale of the field, so re-evaluated zero-level-set
/// vertices keep a stable sign.
fn sign_of(v: f64, eps: f64) -> i32 {
    if v < -eps {
        -1
    } else {
        1
    }
}

fn zero_band(values: &[f64]) -> f64 {
    1e-12 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Triangles whose vertex signs are not all equal:
/// |s(x1) + s(x2) + s(x3)| < 3.
pub fn mark_cut_triangles(mesh: &SimplicialMesh, phi_nodal: &[f64]) -> Vec<usize> {
    assert_eq!(phi_nodal.len(), mesh.n_vertices());
    let eps = zero_band(phi_nodal);
    (0..mesh.n_triangles())
        .filter(|&t| {
            let tri = mesh.triangle(t);
            let s: i32 = tri.iter().map(|&v| sign_of(phi_nodal[v], eps)).sum();
            s.abs() < 3
        })
        .collect()
}

/// Relative distance from an edge endpoint below which a computed root is
/// snapped onto the endpoint (degenerate split; avoids sliver triangles).
const SNAP_TOL: f64 = 1e-8;

enum EdgeRoot {
    None,
    /// New vertex index inserted at the root of the linear interpolant.
    New(usize),
    /// Root snapped to an existing vertex.
    AtVertex(usize),
}

/// Refines `mesh` so that the zero-level set of `phi` is resolved by element
/// edges.
///
/// New vertices are placed at the roots of the per-edge linear interpolant
/// of the vertex values (also for degree-2 fields). Cut triangles split into
/// at most three subtriangles along the chord between the new vertices;
/// snapped roots degenerate to bisections or leave the triangle whole.
pub fn refine_to_fit(mesh: &SimplicialMesh, phi: &ContinuousField) -> Result<FittedMesh> {
    let phi_v: Vec<f64> = (0..mesh.n_vertices())
        .map(|v| phi.values()[v])
        .collect();
    let eps = zero_band(phi.values());

    // A degree-2 restriction must not change sign twice along any edge.
    if phi.degree() == 2 {
        for (e, edge) in mesh.edges().iter().enumerate() {
            let s0 = sign_of(phi_v[edge.vertices[0]], eps);
            let s1 = sign_of(phi_v[edge.vertices[1]], eps);
            let sm = sign_of(phi.values()[mesh.n_vertices() + e], eps);
            if s0 == s1 && sm != s0 {
                return Err(Error::DoubleSignChange { edge: e });
            }
        }
    }

    let mut vertices: Vec<Point2> = mesh.vertices().to_vec();
    let mut roots: Vec<EdgeRoot> = Vec::with_capacity(mesh.n_edges());
    for edge in mesh.edges() {
        let [a, b] = edge.vertices;
        let (fa, fb) = (phi_v[a], phi_v[b]);
        if sign_of(fa, eps) == sign_of(fb, eps) {
            roots.push(EdgeRoot::None);
            continue;
        }
        let t = fa / (fa - fb);
        if t < SNAP_TOL {
            roots.push(EdgeRoot::AtVertex(a));
        } else if t > 1.0 - SNAP_TOL {
            roots.push(EdgeRoot::AtVertex(b));
        } else {
            let p = vertices[a] + (vertices[b] - vertices[a]).scale(t);
            vertices.push(p);
            roots.push(EdgeRoot::New(vertices.len() - 1));
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(mesh.n_triangles());
    let mut parent: Vec<usize> = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let edges = mesh.tri_edges(t);
        let mut new_vertices: Vec<(usize, usize)> = Vec::new(); // (local edge, vertex)
        let mut snapped: Vec<usize> = Vec::new();
        for (k, &e) in edges.iter().enumerate() {
            match roots[e] {
                EdgeRoot::None => {}
                EdgeRoot::New(v) => new_vertices.push((k, v)),
                EdgeRoot::AtVertex(v) => snapped.push(v),
            }
        }
        let emitted: Vec<[usize; 3]> = match new_vertices.len() {
            0 => vec![tri],
            1 => {
                let (k, r) = new_vertices[0];
                // Edge k runs from vertex k to k+1; the opposite vertex is k+2.
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if snapped.first().is_some_and(|&w| w == a || w == b) {
                    // Chord degenerates onto an edge; leave the triangle.
                    vec![tri]
                } else {
                    vec![[a, r, c], [r, b, c]]
                }
            }
            2 => {
                let (k1, r1) = new_vertices[0];
                let (k2, r2) = new_vertices[1];
                split_in_three(&vertices, tri, (k1, r1), (k2, r2))
            }
            _ => {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has three cut edges; the level-set data is inconsistent"
                )))
            }
        };
        for sub in emitted {
            triangles.push(sub);
            parent.push(t);
        }
    }

    let fitted = SimplicialMesh::new(vertices, triangles)?;
    let sign: Vec<Sign> = (0..fitted.n_triangles())
        .map(|ft| {
            let bc = fitted.barycenter(ft);
            if sign_of(phi.eval(mesh, parent[ft], bc), eps) < 0 {
                Sign::Neg
            } else {
                Sign::Pos
            }
        })
        .collect();

    Ok(FittedMesh { mesh: fitted, parent, sign, n_base_vertices: mesh.n_vertices() })
}

/// Splits a triangle with roots on two of its edges into three subtriangles.
/// The quadrilateral part is split along its shorter diagonal.
fn split_in_three(
    vertices: &[Point2],
    tri: [usize; 3],
    (k1, r1): (usize, usize),
    (k2, r2): (usize, usize),
) -> Vec<[usize; 3]> {
    // The two cut edges share the apex vertex; identify it.
    // Edge k = (k, k+1): edges (k1, k2) share vertex v iff ...
    let e1 = [k1, (k1 + 1) % 3];
    let e2 = [k2, (k2 + 1) % 3];
    let shared = *e1.iter().find(|v| e2.contains(v)).expect("cut edges share the apex");
    // Order roots so that ra lies on the edge (apex, other_a).
    let other = |e: [usize; 2]| if e[0] == shared { e[1] } else { e[0] };
    let (oa, ob) = (other(e1), other(e2));
    let (apex, va, vb) = (tri[shared], tri[oa], tri[ob]);
    let (ra, rb) = (r1, r2);

    // Apex triangle plus the quad (va, vb, rb, ra) split along the shorter
    // diagonal (ties resolved toward (va, rb)); orientation is fixed by the
    // mesh constructor.
    let mut out = vec![[apex, ra, rb]];
    let d1 = vertices[va].dist(vertices[rb]);
    let d2 = vertices[vb].dist(vertices[ra]);
    if d1 <= d2 {
        out.push([va, vb, rb]);
        out.push([va, rb, ra]);
    } else {
        out.push([va, vb, ra]);
        out.push([vb, rb, ra]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured_mesh, SimplicialMesh};

    fn single_triangle() -> SimplicialMesh {
        SimplicialMesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn marking_follows_sign_sum() {
        let mesh = single_triangle();
        assert_eq!(mark_cut_triangles(&mesh, &[1.0, 2.0, -0.5]), vec![0]);
        assert!(mark_cut_triangles(&mesh, &[1.0, 2.0, 0.5]).is_empty());
        // phi(x) = x - 0.5 changes sign along two edges.
        assert_eq!(mark_cut_triangles(&mesh, &[-0.5, 0.5, -0.5]), vec![0]);
    }

    #[test]
    fn zero_values_count_as_positive() {
        let mesh = single_triangle();
        assert!(mark_cut_triangles(&mesh, &[0.0, 1.0, 2.0]).is_empty());
        assert_eq!(mark_cut_triangles(&mesh, &[0.0, -1.0, 2.0]), vec![0]);
    }

    #[test]
    fn split_of_reference_triangle_by_vertical_line() {
        let mesh = single_triangle();
        let phi = ContinuousField::from_fn(&mesh, 1, |p| p.x - 0.5);
        let fitted = refine_to_fit(&mesh, &phi).unwrap();
        assert_eq!(fitted.mesh.n_triangles(), 3);
        assert_eq!(fitted.mesh.n_vertices(), 5);
        let new: Vec<Point2> =
            (3..5).map(|v| fitted.mesh.vertex(v)).collect();
        assert!(new.iter().any(|p| (p.x - 0.5).abs() < 1e-14 && p.y.abs() < 1e-14));
        assert!(new.iter().any(|p| (p.x - 0.5).abs() < 1e-14 && (p.y - 0.5).abs() < 1e-14));
        assert!((fitted.mesh.total_area() - 0.5).abs() < 1e-14);
        assert_eq!(fitted.parent, vec![0, 0, 0]);
        // Barycenter signs split 1 negative (x < 0.5 side keeps the apex
        // triangle x > 0.5? count by area instead): area of each sign equals
        // the exact half-plane split.
        let neg_area: f64 = fitted
            .triangles_with_sign(Sign::Neg)
            .map(|t| fitted.mesh.area(t))
            .sum();
        assert!((neg_area - 0.375).abs() < 1e-14);
    }

    #[test]
    fn no_sign_change_returns_identical_mesh() {
        let mesh = structured_mesh(0.0, 0.0, 1.0, 3).unwrap();
        let phi = ContinuousField::from_fn(&mesh, 1, |p| p.x + 2.0);
        let fitted = refine_to_fit(&mesh, &phi).unwrap();
        assert_eq!(fitted.mesh.n_triangles(), mesh.n_triangles());
        assert_eq!(fitted.mesh.n_vertices(), mesh.n_vertices());
    }

    #[test]
    fn circle_roots_match_bisection_oracle() {
        // phi = x^2 + y^2 - 0.2704 sampled as p = 1 nodal data; inserted
        // vertices must agree with a bisection solve of the same per-edge
        // linear interpolant.
        let mesh = structured_mesh(-1.0, -1.0, 2.0, 16).unwrap();
        let phi = ContinuousField::from_fn(&mesh, 1, |p| p.norm_sq() - 0.2704);
        let fitted = refine_to_fit(&mesh, &phi).unwrap();
        assert!(fitted.mesh.n_vertices() > mesh.n_vertices());

        // Oracle: bisection on the linear interpolant along each cut edge.
        let mut oracle_roots: Vec<Point2> = Vec::new();
        for edge in mesh.edges() {
            let [a, b] = edge.vertices;
            let (fa, fb) = (phi.values()[a], phi.values()[b]);
            if (fa < 0.0) == (fb < 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let v = fa + mid * (fb - fa);
                if (v < 0.0) == (fa < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            oracle_roots.push(mesh.vertex(a) + (mesh.vertex(b) - mesh.vertex(a)).scale(t));
        }
        for v in mesh.n_vertices()..fitted.mesh.n_vertices() {
            let p = fitted.mesh.vertex(v);
            let nearest = oracle_roots
                .iter()
                .map(|q| q.dist(p))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-6, "inserted vertex {p:?} misses oracle by {nearest}");
        }
        // Radii approach 0.52 at the linear-interpolation error scale h^2.
        let h = 2.0 / 16.0;
        for v in mesh.n_vertices()..fitted.mesh.n_vertices() {
            assert!((fitted.mesh.vertex(v).norm() - 0.52).abs() < h * h);
        }
    }

    #[test]
    fn refit_of_fitted_mesh_is_fixed_point() {
        let mesh = structured_mesh(-1.0, -1.0, 2.0, 8).unwrap();
        let phi = ContinuousField::from_fn(&mesh, 1, |p| p.norm() - 0.51);
        let fitted = refine_to_fit(&mesh, &phi).unwrap();
        // Interpolate the same (piecewise-linear on the fitted mesh) field
        // and refit: no new vertices or triangles may appear.
        let phi2_values: Vec<f64> = (0..fitted.mesh.n_vertices())
            .map(|v| {
                let p = fitted.mesh.vertex(v);
                // Evaluate through the parent of any incident triangle.
                let t = fitted.mesh.vertex_triangles(v)[0];
                phi.eval(&mesh, fitted.parent[t], p)
            })
            .collect();
        let phi2 = ContinuousField::new(1, phi2_values);
        let refit = refine_to_fit(&fitted.mesh, &phi2).unwrap();
        assert_eq!(refit.mesh.n_vertices(), fitted.mesh.n_vertices());
        assert_eq!(refit.mesh.n_triangles(), fitted.mesh.n_triangles());
    }

    #[test]
    fn double_sign_change_is_rejected_for_p2() {
        let mesh = single_triangle();
        // Quadratic bump negative at the (0,1)-edge midpoint only.
        let mut vals = vec![1.0; mesh.n_lagrange_nodes(2)];
        let m01 = mesh.n_vertices() + mesh.tri_edges(0)[0];
        vals[m01] = -1.0;
        let phi = ContinuousField::new(2, vals);
        assert!(matches!(
            refine_to_fit(&mesh, &phi),
            Err(Error::DoubleSignChange { .. })
        ));
    }
}
