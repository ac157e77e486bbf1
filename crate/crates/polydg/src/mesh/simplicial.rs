use crate::geometry::{barycentric, signed_area, BoundingBox, Point2};
use crate::{Error, Result};
use std::collections::HashMap;

/// An edge of a [`SimplicialMesh`] together with its adjacent triangles.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Endpoint vertex indices, stored with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Adjacent triangles; `tris[1] == usize::MAX` on boundary edges.
    pub tris: [usize; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris[1] == usize::MAX
    }

    pub fn other_tri(&self, tri: usize) -> Option<usize> {
        if self.tris[0] == tri {
            (!self.is_boundary()).then_some(self.tris[1])
        } else {
            Some(self.tris[0])
        }
    }
}

/// Conforming triangulation of the hold-all domain.
///
/// Triangles are stored counter-clockwise. Topology (edges, vertex patches,
/// boundary flags) is derived once at construction; the mesh is immutable
/// afterwards.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Per triangle, the edge ids of (v0,v1), (v1,v2), (v2,v0).
    tri_edges: Vec<[usize; 3]>,
    vertex_tris: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
}

impl SimplicialMesh {
    /// Builds a mesh from raw vertex and connectivity lists.
    ///
    /// Clockwise triangles are re-oriented; zero-area triangles are rejected.
    /// Every interior edge must be shared by exactly two triangles.
    pub fn new(vertices: Vec<Point2>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let scale: f64 = {
            let bb = BoundingBox::of_points(vertices.iter().copied());
            let e = bb.extents();
            e.x.max(e.y).max(1e-300)
        };
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} out of {}",
                        vertices.len()
                    )));
                }
            }
            let mut a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if a < 0.0 {
                tri.swap(1, 2);
                a = -a;
            }
            if a <= 1e-14 * scale * scale {
                return Err(Error::DegenerateTriangle { tri: t, area: a });
            }
            areas.push(a);
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[0usize; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: [key.0, key.1], tris: [t, usize::MAX] });
                    edges.len() - 1
                });
                if edges[id].tris[0] != t {
                    if edges[id].tris[1] != usize::MAX {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({},{}) shared by more than two triangles",
                            key.0, key.1
                        )));
                    }
                    edges[id].tris[1] = t;
                }
                tri_edges[t][k] = id;
            }
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        for e in &edges {
            if e.is_boundary() {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }

        let mut vertex_tris = vec![Vec::new(); vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v].push(t);
            }
        }

        let diameters = triangles
            .iter()
            .map(|tri| {
                let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
                p[0].dist(p[1]).max(p[1].dist(p[2])).max(p[2].dist(p[0]))
            })
            .collect();

        Ok(Self {
            vertices,
            triangles,
            edges,
            tri_edges,
            vertex_tris,
            boundary_vertex,
            areas,
            diameters,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tri_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn tri_points(&self, t: usize) -> [Point2; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Element diameter `h` (longest edge).
    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn barycenter(&self, t: usize) -> Point2 {
        let p = self.tri_points(t);
        (p[0] + p[1] + p[2]).scale(1.0 / 3.0)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let ed = &self.edges[e];
        self.vertices[ed.vertices[0]].dist(self.vertices[ed.vertices[1]])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point2 {
        let ed = &self.edges[e];
        (self.vertices[ed.vertices[0]] + self.vertices[ed.vertices[1]]).scale(0.5)
    }

    /// Outward unit normal of edge `e` with respect to triangle `t`.
    pub fn edge_normal_from(&self, e: usize, t: usize) -> Point2 {
        let ed = &self.edges[e];
        let a = self.vertices[ed.vertices[0]];
        let b = self.vertices[ed.vertices[1]];
        let n = (b - a).perp().normalized();
        // Orient away from the triangle barycenter.
        if n.dot(self.barycenter(t) - a) > 0.0 {
            -n
        } else {
            n
        }
    }

    /// Lagrange nodes of degree `p` (vertices, then edge midpoints for p = 2).
    pub fn n_lagrange_nodes(&self, degree: usize) -> usize {
        match degree {
            1 => self.n_vertices(),
            2 => self.n_vertices() + self.n_edges(),
            _ => panic!("only degrees 1 and 2 carry Lagrange nodes"),
        }
    }

    pub fn lagrange_node_point(&self, degree: usize, node: usize) -> Point2 {
        assert!(degree == 1 || degree == 2);
        if node < self.n_vertices() {
            self.vertices[node]
        } else {
            self.edge_midpoint(node - self.n_vertices())
        }
    }

    pub fn lagrange_node_is_boundary(&self, degree: usize, node: usize) -> bool {
        assert!(degree == 1 || degree == 2);
        if node < self.n_vertices() {
            self.boundary_vertex[node]
        } else {
            self.edges[node - self.n_vertices()].is_boundary()
        }
    }

    /// Global Lagrange node ids of triangle `t`, ordered as
    /// `[v0, v1, v2]` for p = 1 and `[v0, v1, v2, m01, m12, m20]` for p = 2.
    pub fn lagrange_nodes_of(&self, degree: usize, t: usize) -> Vec<usize> {
        let tri = self.triangles[t];
        match degree {
            1 => tri.to_vec(),
            2 => {
                let e = self.tri_edges[t];
                let nv = self.n_vertices();
                vec![tri[0], tri[1], tri[2], nv + e[0], nv + e[1], nv + e[2]]
            }
            _ => panic!("only degrees 1 and 2 carry Lagrange nodes"),
        }
    }

    pub fn barycentric_in(&self, t: usize, p: Point2) -> [f64; 3] {
        let v = self.tri_points(t);
        barycentric(v[0], v[1], v[2], p)
    }

    /// Finds a triangle containing `p` by linear scan (test/diagnostic use).
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for t in 0..self.n_triangles() {
            let l = self.barycentric_in(t, p);
            let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Some(t);
            }
            if best.map_or(true, |(_, w)| worst > w) {
                best = Some((t, worst));
            }
        }
        best.and_then(|(t, w)| (w > -1e-9).then_some(t))
    }

    /// Copy of the mesh with vertices moved to `new_vertices` (same topology).
    ///
    /// Fails with [`Error::TangledMesh`] if any triangle inverts.
    pub fn with_vertices(&self, new_vertices: Vec<Point2>) -> Result<Self> {
        assert_eq!(new_vertices.len(), self.vertices.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = signed_area(new_vertices[tri[0]], new_vertices[tri[1]], new_vertices[tri[2]]);
            if a <= 0.0 {
                return Err(Error::TangledMesh { tri: t, area: a });
            }
        }
        let mut out = self.clone();
        out.areas = self
            .triangles
            .iter()
            .map(|tri| signed_area(new_vertices[tri[0]], new_vertices[tri[1]], new_vertices[tri[2]]))
            .collect();
        out.diameters = self
            .triangles
            .iter()
            .map(|tri| {
                let p = [new_vertices[tri[0]], new_vertices[tri[1]], new_vertices[tri[2]]];
                p[0].dist(p[1]).max(p[1].dist(p[2])).max(p[2].dist(p[0]))
            })
            .collect();
        out.vertices = new_vertices;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangle_square() -> SimplicialMesh {
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let triangles = vec![[0, 1, 2], [0, 2, 3]];
        SimplicialMesh::new(vertices, triangles).unwrap()
    }

    #[test]
    fn topology_of_two_triangles() {
        let m = two_triangle_square();
        assert_eq!(m.n_edges(), 5);
        let interior: Vec<_> = m.edges().iter().filter(|e| !e.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].vertices, [0, 2]);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert!(m.is_boundary_vertex(0) && m.is_boundary_vertex(2));
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let vertices = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let m = SimplicialMesh::new(vertices, vec![[0, 2, 1]]).unwrap();
        assert!(crate::geometry::signed_area(
            m.vertex(m.triangle(0)[0]),
            m.vertex(m.triangle(0)[1]),
            m.vertex(m.triangle(0)[2])
        ) > 0.0);
    }

    #[test]
    fn zero_area_triangle_rejected() {
        let vertices = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        assert!(SimplicialMesh::new(vertices, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn edge_normal_points_outward() {
        let m = two_triangle_square();
        // Boundary edge (0,1) of triangle 0 has outward normal (0,-1).
        let e = m.tri_edges(0)[0];
        let n = m.edge_normal_from(e, 0);
        assert!((n.x - 0.0).abs() < 1e-14 && (n.y + 1.0).abs() < 1e-14);
    }
}
