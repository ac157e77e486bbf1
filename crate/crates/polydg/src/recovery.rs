//! Globally continuous Lagrange fields on the simplicial mesh and the
//! nodal-averaging recovery operator that produces them from discontinuous
//! (element-wise polynomial) data.

use crate::geometry::Point2;
use crate::mesh::SimplicialMesh;

/// Continuous piecewise-polynomial field of degree 1 or 2 on a simplicial
/// mesh, stored by Lagrange node values (vertices, then edge midpoints for
/// degree 2). Continuity holds by construction: one value per node.
#[derive(Debug, Clone)]
pub struct ContinuousField {
    degree: usize,
    values: Vec<f64>,
}

impl ContinuousField {
    pub fn new(degree: usize, values: Vec<f64>) -> Self {
        assert!(degree == 1 || degree == 2);
        Self { degree, values }
    }

    pub fn zeros(mesh: &SimplicialMesh, degree: usize) -> Self {
        Self::new(degree, vec![0.0; mesh.n_lagrange_nodes(degree)])
    }

    /// Interpolates `f` at the Lagrange nodes.
    pub fn from_fn<F: FnMut(Point2) -> f64>(
        mesh: &SimplicialMesh,
        degree: usize,
        mut f: F,
    ) -> Self {
        let n = mesh.n_lagrange_nodes(degree);
        let values = (0..n).map(|i| f(mesh.lagrange_node_point(degree, i))).collect();
        Self::new(degree, values)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn vertex_values<'a>(&'a self, mesh: &SimplicialMesh) -> &'a [f64] {
        &self.values[..mesh.n_vertices()]
    }

    /// Value at a point known to lie in triangle `tri`.
    pub fn eval(&self, mesh: &SimplicialMesh, tri: usize, p: Point2) -> f64 {
        let lambda = mesh.barycentric_in(tri, p);
        let nodes = mesh.lagrange_nodes_of(self.degree, tri);
        match self.degree {
            1 => (0..3).map(|i| lambda[i] * self.values[nodes[i]]).sum(),
            _ => {
                let mut v = 0.0;
                for i in 0..3 {
                    v += lambda[i] * (2.0 * lambda[i] - 1.0) * self.values[nodes[i]];
                }
                for k in 0..3 {
                    let (i, j) = (k, (k + 1) % 3);
                    v += 4.0 * lambda[i] * lambda[j] * self.values[nodes[3 + k]];
                }
                v
            }
        }
    }

    /// Gradient at a point known to lie in triangle `tri`.
    pub fn grad(&self, mesh: &SimplicialMesh, tri: usize, p: Point2) -> Point2 {
        let lambda = mesh.barycentric_in(tri, p);
        let grads = barycentric_gradients(mesh, tri);
        let nodes = mesh.lagrange_nodes_of(self.degree, tri);
        match self.degree {
            1 => {
                let mut g = Point2::default();
                for i in 0..3 {
                    g = g + grads[i].scale(self.values[nodes[i]]);
                }
                g
            }
            _ => {
                let mut g = Point2::default();
                for i in 0..3 {
                    g = g + grads[i].scale((4.0 * lambda[i] - 1.0) * self.values[nodes[i]]);
                }
                for k in 0..3 {
                    let (i, j) = (k, (k + 1) % 3);
                    let gij = grads[i].scale(lambda[j]) + grads[j].scale(lambda[i]);
                    g = g + gij.scale(4.0 * self.values[nodes[3 + k]]);
                }
                g
            }
        }
    }

    /// Maximum |value| over nodes lying on the domain boundary.
    pub fn max_abs_on_boundary(&self, mesh: &SimplicialMesh) -> f64 {
        (0..self.values.len())
            .filter(|&n| mesh.lagrange_node_is_boundary(self.degree, n))
            .map(|n| self.values[n].abs())
            .fold(0.0, f64::max)
    }
}

/// Gradients of the barycentric coordinates of triangle `tri` (constant).
pub fn barycentric_gradients(mesh: &SimplicialMesh, tri: usize) -> [Point2; 3] {
    let [a, b, c] = mesh.tri_points(tri);
    let inv_two_area = 0.5 / mesh.area(tri);
    [
        (c - b).perp().scale(inv_two_area),
        (a - c).perp().scale(inv_two_area),
        (b - a).perp().scale(inv_two_area),
    ]
}

/// Continuous vector field stored as two scalar components.
#[derive(Debug, Clone)]
pub struct ContinuousVectorField {
    pub x: ContinuousField,
    pub y: ContinuousField,
}

impl ContinuousVectorField {
    pub fn eval(&self, mesh: &SimplicialMesh, tri: usize, p: Point2) -> Point2 {
        Point2::new(self.x.eval(mesh, tri, p), self.y.eval(mesh, tri, p))
    }

    pub fn degree(&self) -> usize {
        self.x.degree()
    }

    /// Component values at a Lagrange node.
    pub fn node_value(&self, node: usize) -> Point2 {
        Point2::new(self.x.values()[node], self.y.values()[node])
    }

    pub fn max_abs_on_boundary(&self, mesh: &SimplicialMesh) -> f64 {
        self.x.max_abs_on_boundary(mesh).max(self.y.max_abs_on_boundary(mesh))
    }
}

/// Triangles forming the patch of Lagrange node `node` (vertex patch, or the
/// 1-2 triangles adjacent to a midpoint's edge).
fn node_patch(mesh: &SimplicialMesh, degree: usize, node: usize) -> Vec<usize> {
    if node < mesh.n_vertices() {
        mesh.vertex_triangles(node).to_vec()
    } else {
        assert_eq!(degree, 2);
        let e = mesh.edge(node - mesh.n_vertices());
        if e.is_boundary() {
            vec![e.tris[0]]
        } else {
            e.tris.to_vec()
        }
    }
}

fn average_at_nodes<F: FnMut(usize, Point2) -> f64>(
    mesh: &SimplicialMesh,
    degree: usize,
    mut one_sided: F,
) -> ContinuousField {
    let n = mesh.n_lagrange_nodes(degree);
    let mut values = vec![0.0; n];
    for node in 0..n {
        if mesh.lagrange_node_is_boundary(degree, node) {
            continue; // zero on the hold-all boundary
        }
        let p = mesh.lagrange_node_point(degree, node);
        let patch = node_patch(mesh, degree, node);
        let sum: f64 = patch.iter().map(|&t| one_sided(t, p)).sum();
        values[node] = sum / patch.len() as f64;
    }
    ContinuousField::new(degree, values)
}

/// Nodal-averaging recovery of a discontinuous field on the simplicial mesh:
/// at every Lagrange node, the arithmetic mean of the one-sided limits over
/// the node patch; zero at boundary nodes.
pub fn recover_nodal_average(
    space: &crate::dg::TriSpace,
    field: &crate::dg::DgField,
) -> ContinuousField {
    average_at_nodes(space.mesh(), space.degree(), |t, p| space.eval_field(field, t, p))
}

/// Recovery of a polytopic field onto the fine mesh: the parent element's
/// polynomial is interpolated at the fine Lagrange nodes (one-sided per fine
/// triangle) and nodal-averaged; zero at boundary nodes.
pub fn recover_from_polytopic(
    space: &crate::dg::PolySpace,
    field: &crate::dg::DgField,
    degree: usize,
) -> ContinuousField {
    let poly = space.poly();
    average_at_nodes(poly.mesh(), degree, |t, p| {
        let e = poly.element_of_triangle(t);
        space.eval_field(field, e, p)
    })
}

/// Exact re-expansion of a polytopic field in a simplicial dG space.
///
/// Tensor-product modes of degree p have total degree up to 2p, so the
/// target space must have degree >= 2p for the injection to be exact.
pub fn inject_polytopic_to_simplicial(
    space: &crate::dg::PolySpace,
    field: &crate::dg::DgField,
    target: &crate::dg::TriSpace,
) -> crate::dg::DgField {
    let poly = space.poly();
    let order = 2 * space.degree() + target.degree();
    target.l2_project(order, |t, p| {
        let e = poly.element_of_triangle(t);
        space.eval_field(field, e, p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{DgField, PolySpace, TriSpace};
    use crate::mesh::{structured_mesh, PolytopicMesh};

    #[test]
    fn p1_field_reproduces_linear_functions() {
        let mesh = structured_mesh(0.0, 0.0, 1.0, 4).unwrap();
        let f = ContinuousField::from_fn(&mesh, 1, |p| 2.0 * p.x - 3.0 * p.y + 1.0);
        let p = Point2::new(0.3, 0.55);
        let t = mesh.locate(p).unwrap();
        assert!((f.eval(&mesh, t, p) - (2.0 * p.x - 3.0 * p.y + 1.0)).abs() < 1e-13);
        let g = f.grad(&mesh, t, p);
        assert!((g.x - 2.0).abs() < 1e-12 && (g.y + 3.0).abs() < 1e-12);
    }

    #[test]
    fn p2_field_reproduces_quadratics() {
        let mesh = structured_mesh(-1.0, -1.0, 2.0, 3).unwrap();
        let f = ContinuousField::from_fn(&mesh, 2, |p| p.x * p.x + 0.5 * p.x * p.y - p.y * p.y);
        let p = Point2::new(0.21, -0.37);
        let t = mesh.locate(p).unwrap();
        let exact = p.x * p.x + 0.5 * p.x * p.y - p.y * p.y;
        assert!((f.eval(&mesh, t, p) - exact).abs() < 1e-12);
        let g = f.grad(&mesh, t, p);
        assert!((g.x - (2.0 * p.x + 0.5 * p.y)).abs() < 1e-11);
        assert!((g.y - (0.5 * p.x - 2.0 * p.y)).abs() < 1e-11);
    }

    #[test]
    fn two_sided_average_at_shared_node() {
        // Two triangles; a field that is 1 on one and 3 on the other
        // averages to 2 at the shared interior... all nodes of a two-triangle
        // mesh are boundary nodes, so use a strip and probe an interior edge.
        let mesh = structured_mesh(0.0, 0.0, 1.0, 2).unwrap();
        let space = TriSpace::new(&mesh, 1);
        // Piecewise-constant-per-element values via projection of a jumpy
        // function: elementwise constant c_t = t as f64.
        let field = space.l2_project(2, |t, _| t as f64);
        let rec = recover_nodal_average(&space, &field);
        // Center vertex (0.5, 0.5) is interior; its patch averages the
        // incident element indices.
        let v = (0..mesh.n_vertices())
            .find(|&v| (mesh.vertex(v) - Point2::new(0.5, 0.5)).norm() < 1e-14)
            .unwrap();
        let patch = mesh.vertex_triangles(v);
        let expect: f64 =
            patch.iter().map(|&t| t as f64).sum::<f64>() / patch.len() as f64;
        assert!((rec.values()[v] - expect).abs() < 1e-12);
    }

    #[test]
    fn continuous_input_is_unchanged_at_interior_nodes_and_zeroed_on_boundary() {
        let mesh = structured_mesh(0.0, 0.0, 1.0, 3).unwrap();
        let space = TriSpace::new(&mesh, 2);
        let f = |p: Point2| 1.0 + p.x + p.y * p.y;
        let field = space.l2_project(4, |_, p| f(p));
        let rec = recover_nodal_average(&space, &field);
        for node in 0..mesh.n_lagrange_nodes(2) {
            let p = mesh.lagrange_node_point(2, node);
            if mesh.lagrange_node_is_boundary(2, node) {
                assert_eq!(rec.values()[node], 0.0);
            } else {
                assert!((rec.values()[node] - f(p)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn recovery_is_linear_and_idempotent() {
        let mesh = structured_mesh(0.0, 0.0, 1.0, 3).unwrap();
        let space = TriSpace::new(&mesh, 2);
        let u = space.l2_project(4, |t, p| (t % 3) as f64 + p.x);
        let v = space.l2_project(4, |t, p| 0.5 * (t % 5) as f64 - p.y * p.x);
        let (alpha, beta) = (1.7, -0.3);
        let mut combo = DgField::zeros(space.n_dofs());
        for i in 0..combo.len() {
            combo.coeffs[i] = alpha * u.coeffs[i] + beta * v.coeffs[i];
        }
        let ru = recover_nodal_average(&space, &u);
        let rv = recover_nodal_average(&space, &v);
        let rc = recover_nodal_average(&space, &combo);
        for n in 0..rc.values().len() {
            let lin = alpha * ru.values()[n] + beta * rv.values()[n];
            assert!((rc.values()[n] - lin).abs() < 1e-14);
        }
        // Idempotence: recovering the interpolant of a recovered field
        // changes nothing (boundary stays zero).
        let as_dg = space.l2_project(6, |t, p| rc.eval(&mesh, t, p));
        let rc2 = recover_nodal_average(&space, &as_dg);
        for n in 0..rc.values().len() {
            assert!((rc2.values()[n] - rc.values()[n]).abs() < 1e-11);
        }
    }

    #[test]
    fn injection_is_exact_for_polytopic_polynomials() {
        let mesh = structured_mesh(-1.0, -1.0, 2.0, 4).unwrap();
        let quads: Vec<Vec<usize>> = (0..mesh.n_triangles() / 2)
            .map(|q| vec![2 * q, 2 * q + 1])
            .collect();
        let poly = PolytopicMesh::build(&mesh, quads).unwrap();
        let pspace = PolySpace::new(&poly, 2);
        // Random Q2 coefficients, fixed pattern.
        let mut field = DgField::zeros(pspace.n_dofs());
        for (i, c) in field.coeffs.iter_mut().enumerate() {
            *c = ((i * 2654435761 % 1000) as f64) / 500.0 - 1.0;
        }
        let tspace = TriSpace::new(&mesh, 4); // 2p = 4
        let injected = inject_polytopic_to_simplicial(&pspace, &field, &tspace);
        // Sample 7 interior points per triangle.
        let samples = [
            (0.2, 0.2), (0.6, 0.2), (0.2, 0.6), (1.0 / 3.0, 1.0 / 3.0),
            (0.45, 0.1), (0.1, 0.45), (0.4, 0.4),
        ];
        for t in 0..mesh.n_triangles() {
            let [a, b, c] = mesh.tri_points(t);
            let e = poly.element_of_triangle(t);
            for &(l1, l2) in &samples {
                let p = a + (b - a).scale(l1) + (c - a).scale(l2);
                let want = pspace.eval_field(&field, e, p);
                let got = tspace.eval_field(&injected, t, p);
                let tol = 1e-12 * (1.0 + want.abs());
                assert!((want - got).abs() < tol, "triangle {t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn constant_and_affine_fields_inject_exactly() {
        let mesh = structured_mesh(0.0, 0.0, 1.0, 2).unwrap();
        let quads: Vec<Vec<usize>> = (0..mesh.n_triangles() / 2)
            .map(|q| vec![2 * q, 2 * q + 1])
            .collect();
        let poly = PolytopicMesh::build(&mesh, quads).unwrap();
        let pspace = PolySpace::new(&poly, 1);
        let field = pspace.l2_project(4, |_, p| 2.0 - 3.0 * p.x + p.y).unwrap();
        let tspace = TriSpace::new(&mesh, 2);
        let injected = inject_polytopic_to_simplicial(&pspace, &field, &tspace);
        for t in 0..mesh.n_triangles() {
            let q = mesh.barycenter(t);
            assert!(
                (tspace.eval_field(&injected, t, q) - (2.0 - 3.0 * q.x + q.y)).abs() < 1e-12
            );
        }
    }

    #[test]
    fn recovered_fields_have_no_interelement_jumps() {
        let mesh = structured_mesh(-1.0, -1.0, 2.0, 5).unwrap();
        let quads: Vec<Vec<usize>> = (0..mesh.n_triangles() / 2)
            .map(|q| vec![2 * q, 2 * q + 1])
            .collect();
        let poly = PolytopicMesh::build(&mesh, quads).unwrap();
        let pspace = PolySpace::new(&poly, 2);
        let mut field = DgField::zeros(pspace.n_dofs());
        for (i, c) in field.coeffs.iter_mut().enumerate() {
            *c = ((i * 40503 % 997) as f64) / 300.0 - 1.5;
        }
        let rec = recover_from_polytopic(&pspace, &field, 2);
        // Probe two points per interior edge from both sides.
        for (e, edge) in mesh.edges().iter().enumerate() {
            if edge.is_boundary() {
                continue;
            }
            let [a, b] = edge.vertices;
            for s in [0.3, 0.8] {
                let p = mesh.vertex(a) + (mesh.vertex(b) - mesh.vertex(a)).scale(s);
                let va = rec.eval(&mesh, edge.tris[0], p);
                let vb = rec.eval(&mesh, edge.tris[1], p);
                assert!(
                    (va - vb).abs() < 1e-12,
                    "jump across edge {e}: {va} vs {vb}"
                );
            }
        }
        // Zero at boundary nodes.
        assert_eq!(rec.max_abs_on_boundary(&mesh), 0.0);
    }
}
