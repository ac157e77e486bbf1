use crate::geometry::Point2;
use crate::mesh::{PolyFace, PolytopicMesh, SimplicialMesh};
use crate::quadrature::{segment_rule, QuadratureRule};

/// Average and jump of a scalar trace pair on a face with normal `n_plus`.
///
/// The jump of a scalar is a vector. On boundary faces (no minus trace) the
/// average is the trace itself and the jump is trace times the outward
/// normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJumpAvg {
    pub avg: f64,
    pub jump: Point2,
}

pub fn scalar_jump_avg(plus: f64, minus: Option<f64>, n_plus: Point2) -> ScalarJumpAvg {
    match minus {
        Some(m) => ScalarJumpAvg { avg: 0.5 * (plus + m), jump: n_plus.scale(plus - m) },
        None => ScalarJumpAvg { avg: plus, jump: n_plus.scale(plus) },
    }
}

/// Average and jump of a vector trace pair; the jump of a vector is a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorJumpAvg {
    pub avg: Point2,
    pub jump: f64,
}

pub fn vector_jump_avg(plus: Point2, minus: Option<Point2>, n_plus: Point2) -> VectorJumpAvg {
    match minus {
        Some(m) => VectorJumpAvg {
            avg: (plus + m).scale(0.5),
            jump: n_plus.dot(plus - m),
        },
        None => VectorJumpAvg { avg: plus, jump: n_plus.dot(plus) },
    }
}

/// Discontinuity-penalization parameter on a face, in the star-shaped
/// simplification sigma = C_sigma max_T p_T^2 |e| / h_T^2 over the incident
/// elements (single element on boundary faces).
pub fn penalty_sigma(poly: &PolytopicMesh, face: &PolyFace, c_sigma: f64, degree: usize) -> f64 {
    let p2e = (degree * degree) as f64 * face.length;
    let of = |elem: usize| p2e / poly.diameter(elem).powi(2);
    let v = if face.is_boundary() {
        of(face.elems[0])
    } else {
        of(face.elems[0]).max(of(face.elems[1]))
    };
    c_sigma * v
}

/// Composite Gauss rule over the fine edges of a face, exact in arclength
/// for polynomials of degree <= `order` + 1 on each straight piece.
pub fn face_quadrature(mesh: &SimplicialMesh, face: &PolyFace, order: usize) -> QuadratureRule {
    let mut rule = QuadratureRule::default();
    for &e in &face.fine_edges {
        let [a, b] = mesh.edge(e).vertices;
        rule.extend(&segment_rule(mesh.vertex(a), mesh.vertex(b), order));
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{FaceKind, PolytopicMesh};
    use crate::mesh::structured_mesh;

    #[test]
    fn scalar_jump_examples() {
        let r = scalar_jump_avg(2.0, Some(1.0), Point2::new(1.0, 0.0));
        assert_eq!(r.avg, 1.5);
        assert_eq!(r.jump, Point2::new(1.0, 0.0));

        let c = scalar_jump_avg(0.75, Some(0.75), Point2::new(0.0, 1.0));
        assert_eq!(c.avg, 0.75);
        assert_eq!(c.jump, Point2::new(0.0, 0.0));

        let b = scalar_jump_avg(3.0, None, Point2::new(0.0, 1.0));
        assert_eq!(b.avg, 3.0);
        assert_eq!(b.jump, Point2::new(0.0, 3.0));
    }

    #[test]
    fn vector_jump_examples() {
        let r = vector_jump_avg(
            Point2::new(1.0, 2.0),
            Some(Point2::new(1.0, 0.0)),
            Point2::new(0.0, 1.0),
        );
        assert_eq!(r.avg, Point2::new(1.0, 1.0));
        assert_eq!(r.jump, 2.0);
    }

    #[test]
    fn penalty_formula_and_symmetry() {
        // Build a two-element mesh and check the penalty against the formula
        // with the stored diameters.
        let mesh = structured_mesh(0.0, 0.0, 1.0, 2).unwrap();
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for t in 0..mesh.n_triangles() {
            if mesh.barycenter(t).x < 0.5 {
                left.push(t);
            } else {
                right.push(t);
            }
        }
        let poly = PolytopicMesh::build(&mesh, vec![left, right]).unwrap();
        let f = poly
            .faces()
            .iter()
            .find(|f| f.kind == FaceKind::Interior)
            .unwrap();
        let expect = 10.0
            * 4.0
            * f.length
            * (1.0 / poly.diameter(0).powi(2)).max(1.0 / poly.diameter(1).powi(2));
        assert!((penalty_sigma(&poly, f, 10.0, 2) - expect).abs() < 1e-12);
        // Symmetric in the incident pair: swapping elems changes nothing.
        let mut swapped = f.clone();
        swapped.elems = [f.elems[1], f.elems[0]];
        assert_eq!(
            penalty_sigma(&poly, f, 10.0, 2),
            penalty_sigma(&poly, &swapped, 10.0, 2)
        );
        // Degree 0 degenerates to zero.
        assert_eq!(penalty_sigma(&poly, f, 10.0, 0), 0.0);
    }

    #[test]
    fn penalty_boundary_face_value() {
        // Single element with a boundary face: sigma = C p^2 |e| / h^2 with
        // hand-set geometry 10 * 4 * 0.1 / 0.25 = 16.
        let mesh = structured_mesh(0.0, 0.0, 1.0, 1).unwrap();
        let poly = PolytopicMesh::build(&mesh, vec![vec![0, 1]]).unwrap();
        let f = poly.faces().iter().find(|f| f.is_boundary()).unwrap();
        // Rescale the formula inputs by hand.
        let sigma = 10.0 * (2.0 * 2.0) as f64 * 0.1 / (0.5f64).powi(2);
        assert!((sigma - 16.0).abs() < 1e-12);
        // The implementation value uses the stored diameter; check formula shape.
        let got = penalty_sigma(&poly, f, 10.0, 2);
        let expect = 10.0 * 4.0 * f.length / poly.diameter(0).powi(2);
        assert_eq!(got, expect);
    }
}
