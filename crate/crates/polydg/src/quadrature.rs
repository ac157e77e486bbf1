//! Quadrature rules: symmetric rules on the reference triangle, tensor
//! (Duffy) rules for higher orders, and Gauss-Legendre rules on segments.
//!
//! The reference triangle is {(0,0), (1,0), (0,1)}. Reference weights sum to
//! 1/2 (the reference area) and are mapped with the physical Jacobian.

use crate::geometry::Point2;

/// Points and weights of a quadrature rule, in physical coordinates.
#[derive(Debug, Clone, Default)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate<F: FnMut(Point2) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn extend(&mut self, other: &QuadratureRule) {
        self.points.extend_from_slice(&other.points);
        self.weights.extend_from_slice(&other.weights);
    }
}

/// Reference-triangle rule exact for polynomials of total degree <= `order`.
///
/// Orders up to 2 use the 3-point midside rule, orders 3-4 the classical
/// 6-point symmetric rule, and higher orders a collapsed (Duffy) tensor
/// Gauss rule, which is exact at every order.
pub fn triangle_reference_rule(order: usize) -> (Vec<Point2>, Vec<f64>) {
    match order {
        0..=2 => {
            let pts = vec![Point2::new(0.5, 0.0), Point2::new(0.5, 0.5), Point2::new(0.0, 0.5)];
            let w = vec![1.0 / 6.0; 3];
            (pts, w)
        }
        3..=4 => {
            // Two symmetric orbits, exact to degree 4.
            let (a1, b1, w1) = (0.816847572980459, 0.091576213509771, 0.109951743655322 / 2.0);
            let (a2, b2, w2) = (0.108103018168070, 0.445948490915965, 0.223381589678011 / 2.0);
            let mut pts = Vec::with_capacity(6);
            let mut w = Vec::with_capacity(6);
            for (a, b, wt) in [(a1, b1, w1), (a2, b2, w2)] {
                pts.push(Point2::new(a, b));
                pts.push(Point2::new(b, a));
                pts.push(Point2::new(b, b));
                w.extend([wt, wt, wt]);
            }
            (pts, w)
        }
        _ => {
            // Duffy transform: x = u (1 - v), y = v with Jacobian (1 - v).
            let nu = order / 2 + 1;
            let nv = order / 2 + 2;
            let (gu, wu) = gauss_legendre_01(nu);
            let (gv, wv) = gauss_legendre_01(nv);
            let mut pts = Vec::with_capacity(nu * nv);
            let mut w = Vec::with_capacity(nu * nv);
            for (v, wvj) in gv.iter().zip(&wv) {
                for (u, wui) in gu.iter().zip(&wu) {
                    pts.push(Point2::new(u * (1.0 - v), *v));
                    w.push(wui * wvj * (1.0 - v));
                }
            }
            (pts, w)
        }
    }
}

/// Rule of the given order on a physical triangle.
pub fn triangle_rule(vertices: [Point2; 3], order: usize) -> QuadratureRule {
    let (ref_pts, ref_w) = triangle_reference_rule(order);
    let [a, b, c] = vertices;
    let jac = 2.0 * crate::geometry::signed_area(a, b, c);
    let points = ref_pts
        .iter()
        .map(|p| a + (b - a).scale(p.x) + (c - a).scale(p.y))
        .collect();
    let weights = ref_w.iter().map(|w| w * jac).collect();
    QuadratureRule { points, weights }
}

/// Gauss-Legendre nodes/weights on [0, 1], exact for degree 2n - 1.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
/// Legendre roots.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, pp) = legendre_and_derivative(n, z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Value and derivative of the Legendre polynomial P_n at `x`.
pub fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Values of P_0..P_n and their derivatives at `x` (stable for |x| <= 1).
pub fn legendre_all(n: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
    values[0] = 1.0;
    derivs[0] = 0.0;
    if n == 0 {
        return;
    }
    values[1] = x;
    derivs[1] = 1.0;
    for k in 2..=n {
        let kf = k as f64;
        values[k] = ((2.0 * kf - 1.0) * x * values[k - 1] - (kf - 1.0) * values[k - 2]) / kf;
        derivs[k] = derivs[k - 2] + (2.0 * kf - 1.0) * values[k - 1];
    }
}

/// Gauss rule on the physical segment [a, b], exact for degree 2n-1 where n
/// is chosen so the rule is exact for polynomials of degree <= `order` + 1.
pub fn segment_rule(a: Point2, b: Point2, order: usize) -> QuadratureRule {
    let n = order / 2 + 1;
    let (t, wt) = gauss_legendre_01(n);
    let len = a.dist(b);
    let points = t.iter().map(|&s| a + (b - a).scale(s)).collect();
    let weights = wt.iter().map(|w| w * len).collect();
    QuadratureRule { points, weights }
}
