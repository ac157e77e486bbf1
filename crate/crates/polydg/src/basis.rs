//! Local polynomial bases.
//!
//! Triangles carry an L^2-orthonormal basis of P_p built by Gram-Schmidt on
//! monomials over the reference triangle, so that mass matrices on physical
//! triangles are (scaled) identities. Polytopic elements carry tensor-product
//! Legendre polynomials, L^2-normalized on the element's bounding box and
//! restricted to the element.

use crate::geometry::{BoundingBox, Point2};
use crate::quadrature::legendre_all;
use nalgebra::DMatrix;

/// Dimension of P_p on a triangle.
pub fn tri_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Dimension of the tensor-product space Q_p on a box.
pub fn box_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Monomial exponents (i, j) of P_p ordered by total degree, x-major within
/// each block: 1, x, y, x^2, xy, y^2, ...
fn monomial_exponents(degree: usize) -> Vec<(usize, usize)> {
    let mut exps = Vec::with_capacity(tri_dim(degree));
    for d in 0..=degree {
        for j in 0..=d {
            exps.push((d - j, j));
        }
    }
    exps
}

/// Orthonormal basis of P_p on the reference triangle {(0,0),(1,0),(0,1)}.
///
/// The first function is the constant mode. Coefficients come from the
/// inverse Cholesky factor of the exact monomial Gram matrix.
#[derive(Debug, Clone)]
pub struct OrthoTriBasis {
    degree: usize,
    exps: Vec<(usize, usize)>,
    /// Row k holds the monomial coefficients of basis function k.
    coeffs: DMatrix<f64>,
}

impl OrthoTriBasis {
    pub fn new(degree: usize) -> Self {
        let exps = monomial_exponents(degree);
        let dim = exps.len();
        let fact = |k: usize| -> f64 { (1..=k).map(|v| v as f64).product::<f64>().max(1.0) };
        let mut gram = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                let (i, j) = (exps[a].0 + exps[b].0, exps[a].1 + exps[b].1);
                gram[(a, b)] = fact(i) * fact(j) / fact(i + j + 2);
            }
        }
        let chol = nalgebra::Cholesky::new(gram).expect("monomial Gram matrix is SPD");
        let coeffs = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(dim, dim))
            .expect("triangular solve");
        let mut basis = Self { degree, exps, coeffs };
        // Refinement pass: the quadrature-measured Gram of the computed basis
        // is near-identity and well conditioned, so one more Cholesky factor
        // recovers the orthonormality lost to the monomial conditioning.
        let rule = crate::quadrature::triangle_rule(
            [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            2 * degree.max(1),
        );
        let mut measured: DMatrix<f64> = DMatrix::zeros(dim, dim);
        let mut vals = vec![0.0; dim];
        let mut grads = vec![Point2::default(); dim];
        for (&q, &w) in rule.points.iter().zip(&rule.weights) {
            basis.eval_ref(q, &mut vals, &mut grads);
            for a in 0..dim {
                for b in 0..dim {
                    measured[(a, b)] += w * vals[a] * vals[b];
                }
            }
        }
        if let Some(chol2) = nalgebra::Cholesky::new(measured) {
            if let Some(fix) =
                chol2.l().solve_lower_triangular(&DMatrix::identity(dim, dim))
            {
                basis.coeffs = fix * basis.coeffs;
            }
        }
        basis
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    /// Values and reference gradients of all basis functions at a reference
    /// point. `values` and `grads` must hold `dim()` entries.
    pub fn eval_ref(&self, p: Point2, values: &mut [f64], grads: &mut [Point2]) {
        let dim = self.dim();
        let mut mono = vec![0.0; dim];
        let mut dmono = vec![Point2::default(); dim];
        for (a, &(i, j)) in self.exps.iter().enumerate() {
            let xi = p.x.powi(i as i32);
            let yj = p.y.powi(j as i32);
            mono[a] = xi * yj;
            let dx = if i == 0 { 0.0 } else { i as f64 * p.x.powi(i as i32 - 1) * yj };
            let dy = if j == 0 { 0.0 } else { j as f64 * xi * p.y.powi(j as i32 - 1) };
            dmono[a] = Point2::new(dx, dy);
        }
        for k in 0..dim {
            let mut v = 0.0;
            let mut g = Point2::default();
            for a in 0..=k {
                let c = self.coeffs[(k, a)];
                v += c * mono[a];
                g = g + dmono[a].scale(c);
            }
            values[k] = v;
            grads[k] = g;
        }
    }
}

/// Tensor-product Legendre basis on a bounding box, L^2-normalized on the box.
///
/// Mode (i, j) at index `i * (p + 1) + j`; the first mode is constant.
#[derive(Debug, Clone)]
pub struct LegendreBoxBasis {
    degree: usize,
}

impl LegendreBoxBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        box_dim(self.degree)
    }

    /// Values and Cartesian gradients of all modes at a physical point.
    pub fn eval(&self, bb: &BoundingBox, p: Point2, values: &mut [f64], grads: &mut [Point2]) {
        let n = self.degree;
        let ext = bb.extents();
        let (hx, hy) = (ext.x, ext.y);
        let xh = 2.0 * (p.x - bb.min.x) / hx - 1.0;
        let yh = 2.0 * (p.y - bb.min.y) / hy - 1.0;

        let mut px = vec![0.0; n + 1];
        let mut dpx = vec![0.0; n + 1];
        let mut py = vec![0.0; n + 1];
        let mut dpy = vec![0.0; n + 1];
        legendre_all(n, xh, &mut px, &mut dpx);
        legendre_all(n, yh, &mut py, &mut dpy);

        for i in 0..=n {
            let nx = ((2 * i + 1) as f64 / hx).sqrt();
            for j in 0..=n {
                let ny = ((2 * j + 1) as f64 / hy).sqrt();
                let k = i * (n + 1) + j;
                values[k] = nx * ny * px[i] * py[j];
                grads[k] = Point2::new(
                    nx * ny * dpx[i] * (2.0 / hx) * py[j],
                    nx * ny * px[i] * dpy[j] * (2.0 / hy),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_rule;

    #[test]
    fn tri_basis_is_orthonormal() {
        for degree in 0..=4 {
            let basis = OrthoTriBasis::new(degree);
            let dim = basis.dim();
            let rule = triangle_rule(
                [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
                2 * degree.max(1),
            );
            let mut gram = vec![0.0; dim * dim];
            let mut vals = vec![0.0; dim];
            let mut grads = vec![Point2::default(); dim];
            for (q, &w) in rule.points.iter().zip(&rule.weights) {
                basis.eval_ref(*q, &mut vals, &mut grads);
                for a in 0..dim {
                    for b in 0..dim {
                        gram[a * dim + b] += w * vals[a] * vals[b];
                    }
                }
            }
            for a in 0..dim {
                for b in 0..dim {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    let tol = if degree <= 2 { 1e-12 } else { 1e-10 };
                    assert!(
                        (gram[a * dim + b] - expect).abs() < tol,
                        "degree {degree} entry ({a},{b}) = {}",
                        gram[a * dim + b]
                    );
                }
            }
        }
    }

    #[test]
    fn tri_basis_first_mode_is_constant() {
        let basis = OrthoTriBasis::new(2);
        let mut vals = vec![0.0; basis.dim()];
        let mut grads = vec![Point2::default(); basis.dim()];
        basis.eval_ref(Point2::new(0.3, 0.2), &mut vals, &mut grads);
        let v0 = vals[0];
        basis.eval_ref(Point2::new(0.1, 0.7), &mut vals, &mut grads);
        assert_eq!(vals[0], v0);
        assert_eq!(grads[0], Point2::new(0.0, 0.0));
        // Constant normalized on the reference triangle of area 1/2.
        assert!((v0 - (2.0f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn box_modes_with_odd_factor_vanish_at_center() {
        let basis = LegendreBoxBasis::new(2);
        let bb = BoundingBox { min: Point2::new(-0.5, 1.0), max: Point2::new(1.5, 3.0) };
        let mut vals = vec![0.0; basis.dim()];
        let mut grads = vec![Point2::default(); basis.dim()];
        basis.eval(&bb, bb.center(), &mut vals, &mut grads);
        for i in 0..=2usize {
            for j in 0..=2usize {
                if i % 2 == 1 || j % 2 == 1 {
                    assert!(vals[i * 3 + j].abs() < 1e-14, "mode ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn box_linear_mode_has_constant_gradient() {
        let basis = LegendreBoxBasis::new(1);
        let bb = BoundingBox { min: Point2::new(0.0, 0.0), max: Point2::new(1.0, 1.0) };
        let mut vals = vec![0.0; 4];
        let mut grads = vec![Point2::default(); 4];
        // Mode (1, 0) is linear in x.
        basis.eval(&bb, Point2::new(0.3, 0.8), &mut vals, &mut grads);
        let g1 = grads[2];
        basis.eval(&bb, Point2::new(0.9, 0.1), &mut vals, &mut grads);
        assert!((grads[2].x - g1.x).abs() < 1e-14 && grads[2].y.abs() < 1e-14);
    }

    #[test]
    fn box_constant_mode_is_normalized() {
        let basis = LegendreBoxBasis::new(2);
        let bb = BoundingBox { min: Point2::new(0.0, 0.0), max: Point2::new(2.0, 0.5) };
        let mut vals = vec![0.0; 9];
        let mut grads = vec![Point2::default(); 9];
        basis.eval(&bb, Point2::new(1.7, 0.2), &mut vals, &mut grads);
        // 1/sqrt(|B|), |B| = 1.0
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert_eq!(grads[0], Point2::new(0.0, 0.0));
    }
}
