//! Quadrature rules on S¹ and S² that integrate polynomials of a given
//! degree exactly.

use std::f64::consts::PI;

use crate::sphere::{SpherePoint, Vec3};

/// Gauss–Legendre nodes and weights on [-1, 1], `n` points.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Weighted point set on a sphere.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub points: Vec<SpherePoint>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`; exact for
    /// polynomials of degree ≤ `degree` restricted to S².
    pub fn s2(degree: usize) -> Self {
        let n_theta = degree / 2 + 1;
        let n_phi = degree + 1;
        let (z, wz) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).sqrt();
            for k in 0..n_phi {
                let phi = k as f64 * dphi;
                let v: Vec3 = [s * phi.cos(), s * phi.sin(), *zi];
                points.push(SpherePoint::from_vec3(v));
                weights.push(wi * dphi);
            }
        }
        Self { points, weights }
    }

    /// Trapezoid rule on S¹, exact for trigonometric polynomials of degree
    /// ≤ `degree`.
    pub fn s1(degree: usize) -> Self {
        let n = degree + 1;
        let d = 2.0 * PI / n as f64;
        Self {
            points: (0..n)
                .map(|k| SpherePoint::from_angle(k as f64 * d))
                .collect(),
            weights: vec![d; n],
        }
    }

    pub fn for_sphere(sphere_dim: usize, degree: usize) -> Self {
        if sphere_dim == 1 {
            Self::s1(degree)
        } else {
            Self::s2(degree)
        }
    }

    pub fn integrate<F: FnMut(&SpherePoint) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        let (x, w) = gauss_legendre(6);
        for k in 0..12 {
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            assert!((approx - exact).abs() < 1e-14, "k={k}: {approx} vs {exact}");
        }
    }

    #[test]
    fn sphere_rule_is_exact_for_coordinate_monomials() {
        let q = SphereQuadrature::s2(8);
        assert!((q.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-13);
        let z2 = q.integrate(|p| p.xyz()[2].powi(2));
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-13);
        let x4 = q.integrate(|p| p.xyz()[0].powi(4));
        assert!((x4 - 4.0 * PI / 5.0).abs() < 1e-13);
        let x2y2z2 = q.integrate(|p| {
            let [x, y, z] = p.xyz();
            x * x * y * y * z * z
        });
        assert!((x2y2z2 - 4.0 * PI / 105.0).abs() < 1e-13);
    }
}
