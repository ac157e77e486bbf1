//! Shape functionals and their consistent dG shape derivatives.
//!
//! Lifting-operator contributions are rewritten as skeleton jump/average
//! integrals, so right-hand sides assemble face-by-face without ever
//! constructing the lifting explicitly. Faces on the fitted zero-level set
//! are treated one-sided (trace and normal of the interior element).

use crate::dg::{DgField, PolySpace};
use crate::geometry::Point2;
use crate::mesh::{FaceKind, FittedMesh, Sign, Submesh};
use crate::quadrature::{segment_rule, triangle_rule};
use crate::recovery::ContinuousVectorField;
use crate::{Error, Result};

/// Unconstrained problem `J(Omega) = int_Omega f` with a closed-form
/// gradient of the integrand.
pub struct UnconstrainedProblem {
    f: Box<dyn Fn(Point2) -> f64 + Send + Sync>,
    grad_f: Box<dyn Fn(Point2) -> Point2 + Send + Sync>,
}

impl UnconstrainedProblem {
    pub fn new(
        f: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        grad_f: impl Fn(Point2) -> Point2 + Send + Sync + 'static,
    ) -> Self {
        Self { f: Box::new(f), grad_f: Box::new(grad_f) }
    }

    /// The two-foci integrand
    /// f(x, y) = (((x-0.7)^2 + y^2) ((x+0.7)^2 + y^2))^(1/4) - 0.6,
    /// whose negative set is a pair of ovals around the foci.
    pub fn two_foci() -> Self {
        let f = |p: Point2| (cassini_product(p, 0.7)).powf(0.25) - 0.6;
        let grad = |p: Point2| {
            let a = (p.x - 0.7).powi(2) + p.y * p.y;
            let b = (p.x + 0.7).powi(2) + p.y * p.y;
            let da = Point2::new(2.0 * (p.x - 0.7), 2.0 * p.y);
            let db = Point2::new(2.0 * (p.x + 0.7), 2.0 * p.y);
            (da.scale(b) + db.scale(a)).scale(0.25 * (a * b).powf(-0.75))
        };
        Self::new(f, grad)
    }

    pub fn f(&self, p: Point2) -> f64 {
        (self.f)(p)
    }

    pub fn grad_f(&self, p: Point2) -> Point2 {
        (self.grad_f)(p)
    }
}

fn cassini_product(p: Point2, focus: f64) -> f64 {
    (((p.x - focus).powi(2) + p.y * p.y) * ((p.x + focus).powi(2) + p.y * p.y)).max(0.0)
}

/// Bernoulli free-boundary problem data: `-Laplace u = 0` on the region of
/// negative level set, `u = -1` on the hold-all boundary, `u = 0` on the
/// free boundary, and flux target eta.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliProblem {
    pub eta: f64,
    pub fixed_data: f64,
    pub free_data: f64,
}

impl BernoulliProblem {
    /// Data for which the optimal shape is the annulus 0.55 < r < 1:
    /// eta = 1 / (-0.55 ln 0.55).
    pub fn annulus_target() -> Self {
        Self {
            eta: 1.0 / (-0.55 * 0.55f64.ln()),
            fixed_data: -1.0,
            free_data: 0.0,
        }
    }

    pub fn boundary_data(&self, kind: FaceKind) -> f64 {
        match kind {
            FaceKind::DomainBoundary => self.fixed_data,
            FaceKind::FreeBoundary => self.free_data,
            FaceKind::Interior => 0.0,
        }
    }
}

/// `int_Omega f` by composite quadrature over the negative-sign triangles.
pub fn objective_unconstrained<F: FnMut(Point2) -> f64>(
    fitted: &FittedMesh,
    order: usize,
    mut f: F,
) -> f64 {
    let mut acc = 0.0;
    for t in fitted.triangles_with_sign(Sign::Neg) {
        let rule = triangle_rule(fitted.mesh.tri_points(t), order);
        acc += rule.integrate(&mut f);
    }
    acc
}

/// `int_Omega |grad u|^2 + eta^2` on the state submesh.
pub fn objective_bernoulli(
    sub_space: &PolySpace,
    u: &DgField,
    eta: f64,
    order: usize,
) -> f64 {
    let poly = sub_space.poly();
    let mesh = poly.mesh();
    let mut acc = 0.0;
    for e in 0..poly.n_elements() {
        for &t in poly.element(e) {
            let rule = triangle_rule(mesh.tri_points(t), order);
            acc += rule.integrate(|q| {
                sub_space.eval_field_grad(u, e, q).norm_sq() + eta * eta
            });
        }
    }
    acc
}

/// Elements of the full hold-all mesh lying inside the shape.
pub fn interior_elements(space: &PolySpace, fitted: &FittedMesh) -> Result<Vec<usize>> {
    let poly = space.poly();
    let mut inside = Vec::new();
    for e in 0..poly.n_elements() {
        let tris = poly.element(e);
        let neg = tris.iter().filter(|&&t| fitted.sign[t] == Sign::Neg).count();
        if neg == tris.len() {
            inside.push(e);
        } else if neg > 0 {
            return Err(Error::InvalidMesh(format!("element {e} mixes level-set signs")));
        }
    }
    if inside.is_empty() {
        return Err(Error::EmptyRegion("shape contains no elements".into()));
    }
    Ok(inside)
}

/// Assembles the shape-derivative right-hand sides of the unconstrained
/// functional for test functions `w E_i`, i = 1, 2:
///
/// `dJ_i(w) = int_Omega (grad f . E_i) w + int_Omega f (grad_h w . E_i)
///            - int_{skeleton in closure(Omega)} [w] . <Pi_Omega f E_i>`.
pub fn dj_rhs_unconstrained(
    space: &PolySpace,
    fitted: &FittedMesh,
    problem: &UnconstrainedProblem,
    order: usize,
) -> Result<[Vec<f64>; 2]> {
    let poly = space.poly();
    let mesh = poly.mesh();
    let dim = space.local_dim();
    let inside = interior_elements(space, fitted)?;
    let mut is_inside = vec![false; poly.n_elements()];
    for &e in &inside {
        is_inside[e] = true;
    }
    let pf = space.l2_project_on(&inside, order, |_, q| problem.f(q))?;

    let mut rhs = [vec![0.0; space.n_dofs()], vec![0.0; space.n_dofs()]];
    let mut vals = vec![0.0; dim];
    let mut grads = vec![Point2::default(); dim];

    // Volume terms.
    for &e in &inside {
        let off = space.offset(e);
        for &t in poly.element(e) {
            let rule = triangle_rule(mesh.tri_points(t), order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let fv = problem.f(q);
                let gf = problem.grad_f(q);
                space.eval_basis(e, q, &mut vals, &mut grads);
                for k in 0..dim {
                    rhs[0][off + k] += w * (gf.x * vals[k] + fv * grads[k].x);
                    rhs[1][off + k] += w * (gf.y * vals[k] + fv * grads[k].y);
                }
            }
        }
    }

    // Skeleton terms over interior faces within the closure of Omega.
    let mut vals_m = vec![0.0; dim];
    let mut grads_m = vec![Point2::default(); dim];
    for face in poly.faces() {
        if face.kind != FaceKind::Interior {
            continue;
        }
        let (ep, em) = (face.elems[0], face.elems[1]);
        let (pin, min) = (is_inside[ep], is_inside[em]);
        if !pin && !min {
            continue;
        }
        let two_sided = pin && min;
        for &fe in &face.fine_edges {
            let tp = poly.plus_side_triangle(face, fe);
            let mut nrm = mesh.edge_normal_from(fe, tp);
            // One-sided faces use the interior element's trace and its
            // outward normal.
            let inner = if two_sided || pin { ep } else { em };
            let outer = if inner == ep { em } else { ep };
            if !two_sided && inner == em {
                nrm = -nrm;
            }
            let [a, b] = mesh.edge(fe).vertices;
            let rule = segment_rule(mesh.vertex(a), mesh.vertex(b), order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval_basis(inner, q, &mut vals, &mut grads);
                let favg = if two_sided {
                    space.eval_basis(outer, q, &mut vals_m, &mut grads_m);
                    0.5 * (space.eval_field(&pf, inner, q) + space.eval_field(&pf, outer, q))
                } else {
                    space.eval_field(&pf, inner, q)
                };
                // [w] . <Pi f E_i> = s_a v_a (n . E_i) favg.
                let o_in = space.offset(inner);
                for k in 0..dim {
                    rhs[0][o_in + k] -= w * vals[k] * nrm.x * favg;
                    rhs[1][o_in + k] -= w * vals[k] * nrm.y * favg;
                }
                if two_sided {
                    let o_out = space.offset(outer);
                    for k in 0..dim {
                        // Minus side of the jump.
                        rhs[0][o_out + k] += w * vals_m[k] * nrm.x * favg;
                        rhs[1][o_out + k] += w * vals_m[k] * nrm.y * favg;
                    }
                }
            }
        }
    }
    Ok(rhs)
}

/// Assembles the shape-derivative right-hand sides of the Bernoulli
/// functional:
///
/// `dJ_i(w) = sum_T int_{T cap Omega} (eta^2 + |grad u|^2) E_i . grad w
///            - 2 (grad u . E_i)(grad u . grad w)
///            - int_{Gamma_int cap closure(Omega)} [w] . <(eta^2 + |grad u|^2) E_i
///              - 2 (grad u . E_i) grad u>`.
#[allow(clippy::too_many_arguments)]
pub fn dj_rhs_bernoulli(
    space: &PolySpace,
    fitted: &FittedMesh,
    submesh: &Submesh,
    sub_space: &PolySpace,
    u: &DgField,
    eta: f64,
    order: usize,
) -> Result<[Vec<f64>; 2]> {
    let poly = space.poly();
    let mesh = poly.mesh();
    let dim = space.local_dim();
    let inside = interior_elements(space, fitted)?;
    let mut is_inside = vec![false; poly.n_elements()];
    for &e in &inside {
        is_inside[e] = true;
    }
    let grad_u_at = |t: usize, q: Point2| -> Point2 {
        let se = submesh.poly.element_of_triangle(t);
        sub_space.eval_field_grad(u, se, q)
    };
    let eta2 = eta * eta;
    // The flux integrand (eta^2 + |grad u|^2) E_i - 2 (grad u . E_i) grad u.
    let g_vec = |gu: Point2, i: usize| -> Point2 {
        let e_i = if i == 0 { Point2::new(1.0, 0.0) } else { Point2::new(0.0, 1.0) };
        e_i.scale(eta2 + gu.norm_sq()) - gu.scale(2.0 * gu.dot(e_i))
    };

    let mut rhs = [vec![0.0; space.n_dofs()], vec![0.0; space.n_dofs()]];
    let mut vals = vec![0.0; dim];
    let mut grads = vec![Point2::default(); dim];

    for &e in &inside {
        let off = space.offset(e);
        for &t in poly.element(e) {
            let rule = triangle_rule(mesh.tri_points(t), order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                let gu = grad_u_at(t, q);
                space.eval_basis(e, q, &mut vals, &mut grads);
                for i in 0..2 {
                    let gv = g_vec(gu, i);
                    for k in 0..dim {
                        rhs[i][off + k] += w * gv.dot(grads[k]);
                    }
                }
            }
        }
    }

    let mut vals_m = vec![0.0; dim];
    let mut grads_m = vec![Point2::default(); dim];
    for face in poly.faces() {
        if face.kind != FaceKind::Interior {
            continue;
        }
        let (ep, em) = (face.elems[0], face.elems[1]);
        let (pin, min) = (is_inside[ep], is_inside[em]);
        if !pin && !min {
            continue;
        }
        let two_sided = pin && min;
        for &fe in &face.fine_edges {
            let tp = poly.plus_side_triangle(face, fe);
            let mut nrm = mesh.edge_normal_from(fe, tp);
            let inner = if two_sided || pin { ep } else { em };
            let outer = if inner == ep { em } else { ep };
            if !two_sided && inner == em {
                nrm = -nrm;
            }
            // u traces come from the submesh elements on each side.
            let edge = mesh.edge(fe);
            let (t_in, t_out) = {
                let t0 = edge.tris[0];
                if poly.element_of_triangle(t0) == inner {
                    (t0, edge.tris[1])
                } else {
                    (edge.tris[1], t0)
                }
            };
            let [a, b] = edge.vertices;
            let rule = segment_rule(mesh.vertex(a), mesh.vertex(b), order);
            for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval_basis(inner, q, &mut vals, &mut grads);
                let gu_in = grad_u_at(t_in, q);
                let o_in = space.offset(inner);
                for i in 0..2 {
                    let gavg = if two_sided {
                        (g_vec(gu_in, i) + g_vec(grad_u_at(t_out, q), i)).scale(0.5)
                    } else {
                        g_vec(gu_in, i)
                    };
                    let gn = gavg.dot(nrm);
                    for k in 0..dim {
                        rhs[i][o_in + k] -= w * vals[k] * gn;
                    }
                    if two_sided {
                        if i == 0 {
                            space.eval_basis(outer, q, &mut vals_m, &mut grads_m);
                        }
                        let o_out = space.offset(outer);
                        for k in 0..dim {
                            rhs[i][o_out + k] += w * vals_m[k] * gn;
                        }
                    }
                }
            }
        }
    }
    Ok(rhs)
}

/// Shape derivative of a direction already projected into the dG space:
/// `dJ(Omega; V) = sum_i rhs_i . V_i`.
pub fn apply_dj_fields(rhs: &[Vec<f64>; 2], v: &[DgField; 2]) -> f64 {
    crate::linalg::dot(&rhs[0], &v[0].coeffs) + crate::linalg::dot(&rhs[1], &v[1].coeffs)
}

/// Moves every mesh vertex by `t V(x)` and returns the moved mesh.
pub fn move_mesh(
    fitted: &FittedMesh,
    v: &ContinuousVectorField,
    t: f64,
) -> Result<crate::mesh::SimplicialMesh> {
    let mesh = &fitted.mesh;
    let moved: Vec<Point2> = (0..mesh.n_vertices())
        .map(|i| mesh.vertex(i) + v.node_value(i).scale(t))
        .collect();
    mesh.with_vertices(moved)
}

/// One-sided finite-difference shape derivative of the unconstrained
/// functional: (J(Omega_t) - J(Omega)) / t with vertices moved by t V.
pub fn fd_unconstrained(
    fitted: &FittedMesh,
    problem: &UnconstrainedProblem,
    v: &ContinuousVectorField,
    t: f64,
    order: usize,
) -> Result<f64> {
    let moved = move_mesh(fitted, v, t)?;
    let mut j0 = 0.0;
    let mut jt = 0.0;
    for tri in fitted.triangles_with_sign(Sign::Neg) {
        j0 += triangle_rule(fitted.mesh.tri_points(tri), order).integrate(|q| problem.f(q));
        jt += triangle_rule(moved.tri_points(tri), order).integrate(|q| problem.f(q));
    }
    Ok((jt - j0) / t)
}

/// One-sided finite-difference shape derivative of the Bernoulli functional,
/// re-solving the state on the moved mesh (same agglomeration and face
/// structure, recomputed geometry).
pub fn fd_bernoulli(
    fitted: &FittedMesh,
    submesh: &Submesh,
    problem: &BernoulliProblem,
    degree: usize,
    c_sigma: f64,
    v: &ContinuousVectorField,
    t: f64,
    order: usize,
) -> Result<f64> {
    let j0 = {
        let space = PolySpace::new(&submesh.poly, degree);
        let u = crate::elliptic::solve_state_laplace(&space, c_sigma, order, |k, _| {
            problem.boundary_data(k)
        })?;
        objective_bernoulli(&space, &u, problem.eta, order)
    };
    let moved = move_mesh(fitted, v, t)?;
    let sub_moved = submesh.poly.rebuilt_on(&moved);
    let space_t = PolySpace::new(&sub_moved, degree);
    let u_t = crate::elliptic::solve_state_laplace(&space_t, c_sigma, order, |k, _| {
        problem.boundary_data(k)
    })?;
    let jt = objective_bernoulli(&space_t, &u_t, problem.eta, order);
    Ok((jt - j0) / t)
}

/// Reference curve for the zero-level-set distance.
pub enum ReferenceCurve {
    Circle { center: Point2, radius: f64 },
    /// Implicit curve {f = 0}; rays from the seed points initialize the
    /// closest-point search (one seed inside each closed loop).
    Implicit { f: Box<dyn Fn(Point2) -> f64 + Send + Sync>, seeds: Vec<Point2> },
}

impl ReferenceCurve {
    pub fn circle(center: Point2, radius: f64) -> Self {
        ReferenceCurve::Circle { center, radius }
    }

    pub fn implicit(
        f: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        seeds: Vec<Point2>,
    ) -> Self {
        ReferenceCurve::Implicit { f: Box::new(f), seeds }
    }

    /// Point cloud on the curve: roots of f along dense ray fans from each
    /// seed (initialization for the closest-point iteration).
    fn sample_cloud(&self, n_angles: usize, rho_max: f64) -> Vec<Point2> {
        match self {
            ReferenceCurve::Circle { center, radius } => (0..n_angles)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / n_angles as f64;
                    *center + Point2::new(radius * th.cos(), radius * th.sin())
                })
                .collect(),
            ReferenceCurve::Implicit { f, seeds } => {
                let mut cloud = Vec::new();
                let n_rho = 160;
                for seed in seeds {
                    for k in 0..n_angles {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / n_angles as f64;
                        let dir = Point2::new(th.cos(), th.sin());
                        let mut prev_r = 1e-9;
                        let mut prev_v = f(*seed + dir.scale(prev_r));
                        for j in 1..=n_rho {
                            let r = rho_max * j as f64 / n_rho as f64;
                            let val = f(*seed + dir.scale(r));
                            if (val < 0.0) != (prev_v < 0.0) {
                                let (mut lo, mut hi) = (prev_r, r);
                                let lo_neg = prev_v < 0.0;
                                for _ in 0..60 {
                                    let mid = 0.5 * (lo + hi);
                                    if (f(*seed + dir.scale(mid)) < 0.0) == lo_neg {
                                        lo = mid;
                                    } else {
                                        hi = mid;
                                    }
                                }
                                cloud.push(*seed + dir.scale(0.5 * (lo + hi)));
                            }
                            prev_r = r;
                            prev_v = val;
                        }
                    }
                }
                cloud
            }
        }
    }

    /// Distance from `x` to the curve.
    pub fn distance(&self, x: Point2, cloud: &[Point2]) -> f64 {
        match self {
            ReferenceCurve::Circle { center, radius } => ((x - *center).norm() - radius).abs(),
            ReferenceCurve::Implicit { f, .. } => {
                let mut best = cloud[0];
                let mut best_d = f64::INFINITY;
                for &y in cloud {
                    let d = x.dist(y);
                    if d < best_d {
                        best_d = d;
                        best = y;
                    }
                }
                // Closest-point iteration: Newton step onto the curve plus a
                // tangential slide toward x.
                let h = 1e-7;
                let mut y = best;
                for _ in 0..80 {
                    let g = Point2::new(
                        (f(Point2::new(y.x + h, y.y)) - f(Point2::new(y.x - h, y.y))) / (2.0 * h),
                        (f(Point2::new(y.x, y.y + h)) - f(Point2::new(y.x, y.y - h))) / (2.0 * h),
                    );
                    let g2 = g.norm_sq().max(1e-300);
                    let y_next = y - g.scale(f(y) / g2);
                    let d = x - y_next;
                    let tangential = d - g.scale(d.dot(g) / g2);
                    let y_new = y_next + tangential.scale(0.5);
                    if y_new.dist(y) < 1e-13 {
                        y = y_new;
                        break;
                    }
                    y = y_new;
                }
                // Guard against divergence of the local iteration.
                x.dist(y).min(best_d)
            }
        }
    }
}

/// Hausdorff-type distance from the fitted zero-level set to a reference
/// curve: max over fitted zero-set vertices of the distance to the curve.
pub fn zero_level_set_distance(fitted: &FittedMesh, reference: &ReferenceCurve) -> Result<f64> {
    let verts = fitted.zero_set_vertices();
    if verts.is_empty() {
        return Err(Error::EmptyRegion("the level-set function has no zero set".into()));
    }
    let cloud = reference.sample_cloud(1024, 4.0);
    if let ReferenceCurve::Implicit { .. } = reference {
        if cloud.is_empty() {
            return Err(Error::EmptyRegion("reference curve has no zero set".into()));
        }
    }
    Ok(verts
        .iter()
        .map(|&v| reference.distance(fitted.mesh.vertex(v), &cloud))
        .fold(0.0, f64::max))
}
