use crate::basis::{LegendreBoxBasis, OrthoTriBasis};
use crate::geometry::Point2;
use crate::mesh::{PolytopicMesh, SimplicialMesh};
use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector};

/// Coefficients of a discontinuous field, one contiguous block per element.
#[derive(Debug, Clone)]
pub struct DgField {
    pub coeffs: Vec<f64>,
}

impl DgField {
    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Discontinuous space of total degree `p` on a simplicial mesh, with an
/// elementwise L^2-orthonormal basis (mass matrices are identities).
pub struct TriSpace<'m> {
    mesh: &'m SimplicialMesh,
    basis: OrthoTriBasis,
}

impl<'m> TriSpace<'m> {
    pub fn new(mesh: &'m SimplicialMesh, degree: usize) -> Self {
        Self { mesh, basis: OrthoTriBasis::new(degree) }
    }

    pub fn mesh(&self) -> &'m SimplicialMesh {
        self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn local_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn n_dofs(&self) -> usize {
        self.local_dim() * self.n_elements()
    }

    pub fn offset(&self, elem: usize) -> usize {
        elem * self.local_dim()
    }

    /// Values and Cartesian gradients of the local basis at a physical point
    /// of triangle `elem`.
    pub fn eval_basis(&self, elem: usize, p: Point2, values: &mut [f64], grads: &mut [Point2]) {
        let [a, b, c] = self.mesh.tri_points(elem);
        let (e1, e2) = (b - a, c - a);
        let det = e1.cross(e2); // = 2 |tau|
        let d = p - a;
        let xi = Point2::new((d.x * e2.y - d.y * e2.x) / det, (e1.x * d.y - e1.y * d.x) / det);
        self.basis.eval_ref(xi, values, grads);
        let scale = 1.0 / det.sqrt();
        for k in 0..values.len() {
            values[k] *= scale;
            // grad_x = J^{-T} grad_ref, J = [e1 e2].
            let g = grads[k];
            grads[k] = Point2::new(
                (g.x * e2.y - g.y * e1.y) / det,
                (-g.x * e2.x + g.y * e1.x) / det,
            )
            .scale(scale);
        }
    }

    pub fn eval_field(&self, field: &DgField, elem: usize, p: Point2) -> f64 {
        let dim = self.local_dim();
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        self.eval_basis(elem, p, &mut vals, &mut grads);
        let off = self.offset(elem);
        (0..dim).map(|k| field.coeffs[off + k] * vals[k]).sum()
    }

    pub fn eval_field_grad(&self, field: &DgField, elem: usize, p: Point2) -> Point2 {
        let dim = self.local_dim();
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        self.eval_basis(elem, p, &mut vals, &mut grads);
        let off = self.offset(elem);
        let mut g = Point2::default();
        for k in 0..dim {
            g = g + grads[k].scale(field.coeffs[off + k]);
        }
        g
    }

    /// Orthogonal L^2 projection of `f` (evaluable per element) computed with
    /// a rule of the given order; exact whenever the rule integrates
    /// `f x basis` exactly. The orthonormal basis makes the local mass system
    /// the identity.
    pub fn l2_project<F: FnMut(usize, Point2) -> f64>(
        &self,
        order: usize,
        mut f: F,
    ) -> DgField {
        let dim = self.local_dim();
        let mut field = DgField::zeros(self.n_dofs());
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        for t in 0..self.n_elements() {
            let rule = crate::quadrature::triangle_rule(self.mesh.tri_points(t), order);
            let off = self.offset(t);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let fv = f(t, q);
                self.eval_basis(t, q, &mut vals, &mut grads);
                for k in 0..dim {
                    field.coeffs[off + k] += w * fv * vals[k];
                }
            }
        }
        field
    }
}

/// Tensor-product space Q_p on a polytopic mesh: Legendre modes on each
/// element's bounding box restricted to the element. The local dimension
/// (p+1)^2 is independent of the element shape.
pub struct PolySpace<'a> {
    poly: &'a PolytopicMesh<'a>,
    basis: LegendreBoxBasis,
}

impl<'a> PolySpace<'a> {
    pub fn new(poly: &'a PolytopicMesh<'a>, degree: usize) -> Self {
        Self { poly, basis: LegendreBoxBasis::new(degree) }
    }

    pub fn poly(&self) -> &'a PolytopicMesh<'a> {
        self.poly
    }

    pub fn mesh(&self) -> &'a SimplicialMesh {
        self.poly.mesh()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn local_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_elements(&self) -> usize {
        self.poly.n_elements()
    }

    pub fn n_dofs(&self) -> usize {
        self.local_dim() * self.n_elements()
    }

    pub fn offset(&self, elem: usize) -> usize {
        elem * self.local_dim()
    }

    pub fn eval_basis(&self, elem: usize, p: Point2, values: &mut [f64], grads: &mut [Point2]) {
        self.basis.eval(self.poly.bounding_box(elem), p, values, grads);
    }

    pub fn eval_field(&self, field: &DgField, elem: usize, p: Point2) -> f64 {
        let dim = self.local_dim();
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        self.eval_basis(elem, p, &mut vals, &mut grads);
        let off = self.offset(elem);
        (0..dim).map(|k| field.coeffs[off + k] * vals[k]).sum()
    }

    pub fn eval_field_grad(&self, field: &DgField, elem: usize, p: Point2) -> Point2 {
        let dim = self.local_dim();
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        self.eval_basis(elem, p, &mut vals, &mut grads);
        let off = self.offset(elem);
        let mut g = Point2::default();
        for k in 0..dim {
            g = g + grads[k].scale(field.coeffs[off + k]);
        }
        g
    }

    /// Local mass matrix over the element (the basis is orthonormal on the
    /// bounding box, not on the element, so this is dense).
    pub fn mass_matrix(&self, elem: usize, order: usize) -> DMatrix<f64> {
        let dim = self.local_dim();
        let mut m = DMatrix::zeros(dim, dim);
        let rule = self.poly.quadrature_on_element(elem, order);
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        for (&q, &w) in rule.points.iter().zip(&rule.weights) {
            self.eval_basis(elem, q, &mut vals, &mut grads);
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        m
    }

    /// Orthogonal L^2 projection of `f` restricted to `elems` (coefficients
    /// of all other elements stay zero).
    pub fn l2_project_on<F: FnMut(usize, Point2) -> f64>(
        &self,
        elems: &[usize],
        order: usize,
        mut f: F,
    ) -> Result<DgField> {
        let dim = self.local_dim();
        let mut field = DgField::zeros(self.n_dofs());
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        for &e in elems {
            let rule = self.poly.quadrature_on_element(e, order);
            let mut rhs = DVector::zeros(dim);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let fv = f(e, q);
                self.eval_basis(e, q, &mut vals, &mut grads);
                for k in 0..dim {
                    rhs[k] += w * fv * vals[k];
                }
            }
            let mass = self.mass_matrix(e, order.max(2 * self.degree()));
            let chol = Cholesky::new(mass)
                .ok_or(Error::SingularLocalSystem { element: e })?;
            let coeffs = chol.solve(&rhs);
            let off = self.offset(e);
            for k in 0..dim {
                field.coeffs[off + k] = coeffs[k];
            }
        }
        Ok(field)
    }

    pub fn l2_project<F: FnMut(usize, Point2) -> f64>(
        &self,
        order: usize,
        f: F,
    ) -> Result<DgField> {
        let elems: Vec<usize> = (0..self.n_elements()).collect();
        self.l2_project_on(&elems, order, f)
    }
}
