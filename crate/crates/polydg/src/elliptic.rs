//! Interior-penalty dG assembly on polytopic meshes and the elliptic solves
//! built on it: the shape-gradient equation on the full hold-all mesh and
//! the Laplace state equation on the interior submesh.

use crate::dg::{face_quadrature, penalty_sigma, DgField, PolySpace};
use crate::geometry::Point2;
use crate::linalg::{solve_spd, CsrMatrix, TripletMatrix};
use crate::mesh::FaceKind;
use crate::quadrature::triangle_rule;
use crate::{Error, Result};

const CG_REL_TOL: f64 = 1e-10;
const CG_MAX_ITERS: usize = 200_000;

/// Assembled symmetric interior-penalty operator
/// `B(u, w) = (grad u, grad w) [+ (u, w)] + face terms`.
pub struct IpdgOperator {
    matrix: CsrMatrix,
    /// Penalty value per face of the mesh (zero on faces not in the form).
    sigma: Vec<f64>,
    dirichlet: Vec<usize>,
    quad_order: usize,
}

impl IpdgOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn sigma(&self, face: usize) -> f64 {
        self.sigma[face]
    }

    pub fn dirichlet_faces(&self) -> &[usize] {
        &self.dirichlet
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// Energy `x^T A x` of a coefficient vector.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.matrix.matvec(x, &mut ax);
        crate::linalg::dot(x, &ax)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<DgField> {
        Ok(DgField { coeffs: solve_spd(&self.matrix, rhs, CG_REL_TOL, CG_MAX_ITERS)? })
    }
}

/// Assembles the pure interior-penalty bilinear form over the mesh skeleton.
///
/// `dirichlet_faces` lists the boundary faces where homogeneous Dirichlet
/// data is enforced weakly through the boundary jump terms; faces absent
/// from the list contribute nothing (natural boundary).
pub fn assemble_ipdg(
    space: &PolySpace,
    c_sigma: f64,
    include_mass: bool,
    dirichlet_faces: &[usize],
    quad_order: usize,
) -> Result<IpdgOperator> {
    if space.degree() == 0 {
        return Err(Error::InvalidArgument(
            "interior-penalty assembly requires degree p >= 1".into(),
        ));
    }
    let poly = space.poly();
    let mesh = poly.mesh();
    let dim = space.local_dim();
    let n = space.n_dofs();
    let mut trip = TripletMatrix::new(n);

    // Volume terms.
    let mut vals = vec![0.0; dim];
    let mut grads = vec![Point2::default(); dim];
    let mut local = vec![0.0; dim * dim];
    for e in 0..space.n_elements() {
        local.iter_mut().for_each(|v| *v = 0.0);
        for &t in poly.element(e) {
            let rule = triangle_rule(mesh.tri_points(t), quad_order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval_basis(e, q, &mut vals, &mut grads);
                for i in 0..dim {
                    for j in 0..dim {
                        let mut a = grads[i].dot(grads[j]);
                        if include_mass {
                            a += vals[i] * vals[j];
                        }
                        local[i * dim + j] += w * a;
                    }
                }
            }
        }
        let off = space.offset(e);
        for i in 0..dim {
            for j in 0..dim {
                trip.push(off + i, off + j, local[i * dim + j]);
            }
        }
    }

    // Face terms.
    let mut in_dirichlet = vec![false; poly.faces().len()];
    for &f in dirichlet_faces {
        in_dirichlet[f] = true;
    }
    let mut sigma = vec![0.0; poly.faces().len()];
    let mut vals_m = vec![0.0; dim];
    let mut grads_m = vec![Point2::default(); dim];
    let mut block = vec![0.0; 4 * dim * dim];
    for (fid, face) in poly.faces().iter().enumerate() {
        let interior = face.kind == FaceKind::Interior;
        if !interior && !in_dirichlet[fid] {
            continue;
        }
        let sg = penalty_sigma(poly, face, c_sigma, space.degree());
        sigma[fid] = sg;
        let (ep, em) = (face.elems[0], face.elems[1]);
        let two = if interior { 2 * dim } else { dim };
        block.iter_mut().for_each(|v| *v = 0.0);
        for &fe in &face.fine_edges {
            let tp = poly.plus_side_triangle(face, fe);
            let nrm = mesh.edge_normal_from(fe, tp);
            let [a, b] = mesh.edge(fe).vertices;
            let rule = crate::quadrature::segment_rule(mesh.vertex(a), mesh.vertex(b), quad_order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval_basis(ep, q, &mut vals, &mut grads);
                if interior {
                    space.eval_basis(em, q, &mut vals_m, &mut grads_m);
                }
                // Index a < dim: plus side; a >= dim: minus side.
                let value = |k: usize| if k < dim { vals[k] } else { vals_m[k - dim] };
                let sgn = |k: usize| if k < dim { 1.0 } else { -1.0 };
                let ngrad = |k: usize| {
                    if k < dim {
                        nrm.dot(grads[k])
                    } else {
                        nrm.dot(grads_m[k - dim])
                    }
                };
                let avg_w = if interior { 0.5 } else { 1.0 };
                for i in 0..two {
                    let (vi, si, gi) = (value(i), sgn(i), ngrad(i));
                    for j in 0..two {
                        let (vj, sj, gj) = (value(j), sgn(j), ngrad(j));
                        let term = sg * (si * vi) * (sj * vj)
                            - (si * vi) * (avg_w * gj)
                            - (avg_w * gi) * (sj * vj);
                        block[i * two + j] += w * term;
                    }
                }
            }
        }
        let goff = |k: usize| {
            if k < dim {
                space.offset(ep) + k
            } else {
                space.offset(em) + (k - dim)
            }
        };
        for i in 0..two {
            for j in 0..two {
                trip.push(goff(i), goff(j), block[i * two + j]);
            }
        }
    }

    let matrix = trip.to_csr();
    let asym = matrix.max_asymmetry();
    let scale = matrix.max_abs().max(1.0);
    if asym > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "assembled operator is asymmetric: {asym:.3e} (relative {:.3e})",
            asym / scale
        )));
    }
    Ok(IpdgOperator { matrix, sigma, dirichlet: dirichlet_faces.to_vec(), quad_order })
}

/// All boundary faces of the mesh (domain boundary and, for submeshes, the
/// zero-level-set boundary).
pub fn all_boundary_faces(space: &PolySpace) -> Vec<usize> {
    space
        .poly()
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_boundary())
        .map(|(i, _)| i)
        .collect()
}

/// Right-hand side vector of a volume source: `rhs_a = (f, psi_a)`.
pub fn volume_rhs<F: FnMut(usize, Point2) -> f64>(
    space: &PolySpace,
    quad_order: usize,
    mut f: F,
) -> Vec<f64> {
    let poly = space.poly();
    let mesh = poly.mesh();
    let dim = space.local_dim();
    let mut rhs = vec![0.0; space.n_dofs()];
    let mut vals = vec![0.0; dim];
    let mut grads = vec![Point2::default(); dim];
    for e in 0..space.n_elements() {
        let off = space.offset(e);
        for &t in poly.element(e) {
            let rule = triangle_rule(mesh.tri_points(t), quad_order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let fv = f(e, q);
                space.eval_basis(e, q, &mut vals, &mut grads);
                for k in 0..dim {
                    rhs[off + k] += w * fv * vals[k];
                }
            }
        }
    }
    rhs
}

/// Solves the shape-gradient equation for both components; the two systems
/// share the assembled operator.
///
/// Returns the component fields and the energy `sum_i rhs_i . g_i`, which by
/// the Galerkin identity equals `sum_i B(g_i, g_i)`.
pub fn solve_shape_gradient(
    op: &IpdgOperator,
    rhs: &[Vec<f64>; 2],
) -> Result<([DgField; 2], f64)> {
    let g0 = op.solve(&rhs[0])?;
    let g1 = op.solve(&rhs[1])?;
    let energy = crate::linalg::dot(&rhs[0], &g0.coeffs) + crate::linalg::dot(&rhs[1], &g1.coeffs);
    Ok(([g0, g1], energy))
}

/// Solves `-Laplace u = 0` on the submesh with Dirichlet data imposed weakly
/// (Nitsche-type right-hand side consistent with the boundary jump terms):
/// `rhs_a = int_e g_D (sigma psi_a - grad psi_a . n)`.
///
/// `data` supplies the boundary value by face kind and position.
pub fn solve_state_laplace<F: FnMut(FaceKind, Point2) -> f64>(
    space: &PolySpace,
    c_sigma: f64,
    quad_order: usize,
    mut data: F,
) -> Result<DgField> {
    let poly = space.poly();
    let mesh = poly.mesh();
    let dim = space.local_dim();
    let dirichlet = all_boundary_faces(space);
    let op = assemble_ipdg(space, c_sigma, false, &dirichlet, quad_order)?;

    let mut rhs = vec![0.0; space.n_dofs()];
    let mut vals = vec![0.0; dim];
    let mut grads = vec![Point2::default(); dim];
    for &fid in &dirichlet {
        let face = poly.face(fid);
        let sg = op.sigma(fid);
        let e = face.elems[0];
        let off = space.offset(e);
        for &fe in &face.fine_edges {
            let tp = poly.plus_side_triangle(face, fe);
            let nrm = mesh.edge_normal_from(fe, tp);
            let [a, b] = mesh.edge(fe).vertices;
            let rule = crate::quadrature::segment_rule(mesh.vertex(a), mesh.vertex(b), quad_order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let gd = data(face.kind, q);
                if gd == 0.0 {
                    continue;
                }
                space.eval_basis(e, q, &mut vals, &mut grads);
                for k in 0..dim {
                    rhs[off + k] += w * gd * (sg * vals[k] - nrm.dot(grads[k]));
                }
            }
        }
    }
    op.solve(&rhs)
}

/// Length-weighted mean of |grad u . n| over the faces of the given kind,
/// taken from the interior trace.
pub fn mean_abs_normal_flux(space: &PolySpace, u: &DgField, kind: FaceKind) -> f64 {
    let poly = space.poly();
    let mesh = poly.mesh();
    let mut total = 0.0;
    let mut length = 0.0;
    for face in poly.faces() {
        if face.kind != kind {
            continue;
        }
        let e = face.elems[0];
        for &fe in &face.fine_edges {
            let tp = poly.plus_side_triangle(face, fe);
            let nrm = mesh.edge_normal_from(fe, tp);
            let rule = face_quadrature(mesh, &single_edge(face, fe), 4);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                total += w * space.eval_field_grad(u, e, q).dot(nrm).abs();
                length += w;
            }
        }
    }
    total / length
}

fn single_edge(face: &crate::mesh::PolyFace, fe: usize) -> crate::mesh::PolyFace {
    crate::mesh::PolyFace {
        elems: face.elems,
        kind: face.kind,
        fine_edges: vec![fe],
        normal: face.normal,
        length: face.length,
    }
}

/// L^2 norm of `u_h - reference` over the covered fine triangles.
pub fn l2_error<F: FnMut(usize, Point2) -> f64>(
    space: &PolySpace,
    u: &DgField,
    quad_order: usize,
    mut reference: F,
) -> f64 {
    let poly = space.poly();
    let mesh = poly.mesh();
    let mut acc = 0.0;
    for e in 0..space.n_elements() {
        for &t in poly.element(e) {
            let rule = triangle_rule(mesh.tri_points(t), quad_order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let d = space.eval_field(u, e, q) - reference(t, q);
                acc += w * d * d;
            }
        }
    }
    acc.sqrt()
}
