//! Orthonormal real eigenbases of the Laplacian on S¹ and S².
//!
//! On S¹ the degree-`m` eigenspace is spanned by `cos(mθ)/√π` and
//! `sin(mθ)/√π`. On S² it is spanned by the `2m + 1` real spherical
//! harmonics of degree `m`, ordered by the azimuthal index `k = -m..=m`:
//!
//! * `k < 0`: `√2 Q_m^{|k|}(cos θ) sin(|k| φ)`
//! * `k = 0`: `Q_m^0(cos θ)`
//! * `k > 0`: `√2 Q_m^k(cos θ) cos(k φ)`
//!
//! where `Q_m^k` is the associated Legendre function scaled so that the
//! basis is orthonormal for the *unnormalized* surface measure (total mass
//! `4π`), and no Condon–Shortley phase is applied. Any other orthonormal
//! basis differs by an element of O(N); every quantity computed in this
//! crate (zero sets of subspaces, sums of squares, Gram matrices) is
//! invariant under that change.
//!
//! The Legendre functions come from the three-term recurrence in the degree
//! with fully normalized coefficients, so no factorials appear and the
//! evaluation is stable up to [`MAX_DEGREE`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::SphereQuadrature;
use crate::sphere::{self, SpherePoint, Vec3};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 50;

/// Step of the finite-difference Laplacian used by
/// [`HarmonicBasis::laplacian_residual`].
pub const LAPLACIAN_STEP: f64 = 1e-4;

/// Coefficients `c` of an eigenfunction `u = Σ c_i f_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<f64>);

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Orthonormal basis of the degree-`m` eigenspace on S^n, n ∈ {1, 2}.
///
/// Immutable once built; safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis {
    sphere_dim: usize,
    degree: usize,
    dimension: usize,
    eigenvalue: f64,
    manifold_volume: f64,
    // Per azimuthal index k: (a_{l,k}, b_{l,k}) for l = k+1..=m.
    recurrence: Vec<Vec<(f64, f64)>>,
    // Q_k^k / sin^k θ for k = 0..=m.
    diagonal: Vec<f64>,
}

/// Builds the eigenbasis of degree `degree` on S^`sphere_dim`.
pub fn build_basis(sphere_dim: usize, degree: usize) -> Result<HarmonicBasis> {
    HarmonicBasis::new(sphere_dim, degree)
}

impl HarmonicBasis {
    pub fn new(sphere_dim: usize, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&sphere_dim) {
            return Err(Error::InvalidArgument(format!(
                "sphere dimension must be 1 or 2, got {sphere_dim}"
            )));
        }
        if degree < 1 {
            return Err(Error::InvalidArgument(
                "degree must be at least 1 (eigenvalue 0 is excluded)".into(),
            ));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let m = degree;
        let n = sphere_dim;
        let eigenvalue = (m * (m + n - 1)) as f64;
        let (dimension, manifold_volume) = if n == 1 {
            (2, 2.0 * PI)
        } else {
            (2 * m + 1, 4.0 * PI)
        };

        let mut recurrence = Vec::new();
        let mut diagonal = Vec::new();
        if n == 2 {
            let mut c = (1.0 / (4.0 * PI)).sqrt();
            for k in 0..=m {
                if k > 0 {
                    c *= ((2 * k + 1) as f64 / (2 * k) as f64).sqrt();
                }
                diagonal.push(c);
                let kk = (k * k) as f64;
                let row = (k + 1..=m)
                    .map(|l| {
                        let ll = (l * l) as f64;
                        let a = ((4.0 * ll - 1.0) / (ll - kk)).sqrt();
                        let lm1 = ((l - 1) * (l - 1)) as f64;
                        let b = if l == k + 1 {
                            0.0
                        } else {
                            ((lm1 - kk) / (4.0 * lm1 - 1.0)).sqrt()
                        };
                        (a, b)
                    })
                    .collect();
                recurrence.push(row);
            }
        }

        Ok(Self {
            sphere_dim,
            degree,
            dimension,
            eigenvalue,
            manifold_volume,
            recurrence,
            diagonal,
        })
    }

    pub fn sphere_dim(&self) -> usize {
        self.sphere_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Dimension N of the eigenspace.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    pub fn manifold_volume(&self) -> f64 {
        self.manifold_volume
    }

    /// `N / vol M`, the constant value of `Σ f_i²`.
    pub fn radius_squared(&self) -> f64 {
        self.dimension as f64 / self.manifold_volume
    }

    /// `λN / vol M`, the constant value of `Σ |∇f_i|²`.
    pub fn gradient_sum(&self) -> f64 {
        self.eigenvalue * self.dimension as f64 / self.manifold_volume
    }

    fn check_point(&self, point: &SpherePoint) -> Result<()> {
        if point.sphere_dim() != self.sphere_dim {
            return Err(Error::DimensionMismatch {
                expected: self.sphere_dim + 1,
                got: point.sphere_dim() + 1,
            });
        }
        Ok(())
    }

    fn check_coeffs(&self, coeffs: &CoefficientVector) -> Result<()> {
        if coeffs.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, basis dimension is {}",
                coeffs.len(),
                self.dimension
            )));
        }
        Ok(())
    }

    /// Values `(f_1(x), …, f_N(x))`.
    pub fn eval(&self, point: &SpherePoint) -> Result<Vec<f64>> {
        self.check_point(point)?;
        let mut out = vec![0.0; self.dimension];
        self.eval_into(&point.xyz(), &mut out);
        Ok(out)
    }

    /// Intrinsic gradients `∇f_i(x)` as ambient vectors with `n + 1`
    /// components, each tangent to the sphere at `x`.
    pub fn eval_gradient(&self, point: &SpherePoint) -> Result<Vec<Vec<f64>>> {
        self.check_point(point)?;
        let mut vals = vec![0.0; self.dimension];
        let mut grads = vec![[0.0; 3]; self.dimension];
        self.eval_with_gradient_into(&point.xyz(), &mut vals, &mut grads);
        Ok(grads
            .into_iter()
            .map(|g| g[..self.sphere_dim + 1].to_vec())
            .collect())
    }

    /// Unchecked evaluation at a unit vector (third component ignored on S¹).
    pub fn eval_into(&self, x: &Vec3, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dimension);
        if self.sphere_dim == 1 {
            let (c, s) = circle_harmonic(self.degree, x[0], x[1]);
            let k = 1.0 / PI.sqrt();
            out[0] = k * c;
            out[1] = k * s;
            return;
        }
        let m = self.degree;
        let mut q = [0.0; MAX_DEGREE + 2];
        let mut r = [0.0; MAX_DEGREE + 2];
        let (z, s, cphi, sphi) = spherical_parts(x);
        self.legendre_row(z, s, &mut q, &mut r);
        out[m] = q[0];
        let (mut ck, mut sk) = (1.0, 0.0);
        for k in 1..=m {
            (ck, sk) = (ck * cphi - sk * sphi, sk * cphi + ck * sphi);
            let amp = std::f64::consts::SQRT_2 * q[k];
            out[m + k] = amp * ck;
            out[m - k] = amp * sk;
        }
    }

    /// Unchecked evaluation of values and intrinsic gradients.
    pub fn eval_with_gradient_into(&self, x: &Vec3, vals: &mut [f64], grads: &mut [Vec3]) {
        debug_assert_eq!(vals.len(), self.dimension);
        debug_assert_eq!(grads.len(), self.dimension);
        if self.sphere_dim == 1 {
            let (c, s) = circle_harmonic(self.degree, x[0], x[1]);
            let k = 1.0 / PI.sqrt();
            let m = self.degree as f64;
            let t = [-x[1], x[0], 0.0];
            vals[0] = k * c;
            vals[1] = k * s;
            grads[0] = sphere::scale(&t, -k * m * s);
            grads[1] = sphere::scale(&t, k * m * c);
            return;
        }
        let m = self.degree;
        let mf = m as f64;
        let mut q = [0.0; MAX_DEGREE + 2];
        let mut r = [0.0; MAX_DEGREE + 2];
        let (z, s, cphi, sphi) = spherical_parts(x);
        self.legendre_row(z, s, &mut q, &mut r);
        let e_theta = [z * cphi, z * sphi, -s];
        let e_phi = [-sphi, cphi, 0.0];

        // dQ^k/dθ from the ladder relations.
        let dq = |k: usize| -> f64 {
            let kf = k as f64;
            if k == 0 {
                -(mf * (mf + 1.0)).sqrt() * q[1]
            } else {
                0.5 * (((mf + kf) * (mf - kf + 1.0)).sqrt() * q[k - 1]
                    - ((mf + kf + 1.0) * (mf - kf)).sqrt() * q[k + 1])
            }
        };

        vals[m] = q[0];
        grads[m] = sphere::scale(&e_theta, dq(0));
        let (mut ck, mut sk) = (1.0, 0.0);
        let sqrt2 = std::f64::consts::SQRT_2;
        for k in 1..=m {
            (ck, sk) = (ck * cphi - sk * sphi, sk * cphi + ck * sphi);
            let kf = k as f64;
            let d = sqrt2 * dq(k);
            let rk = sqrt2 * kf * r[k];
            vals[m + k] = sqrt2 * q[k] * ck;
            vals[m - k] = sqrt2 * q[k] * sk;
            grads[m + k] = sphere::add(
                &sphere::scale(&e_theta, d * ck),
                &sphere::scale(&e_phi, -rk * sk),
            );
            grads[m - k] = sphere::add(
                &sphere::scale(&e_theta, d * sk),
                &sphere::scale(&e_phi, rk * ck),
            );
        }
    }

    /// Fills `q[k] = Q_m^k(z)` and `r[k] = Q_m^k(z) / sin θ` (k ≥ 1); `q[m+1] = 0`.
    fn legendre_row(&self, z: f64, s: f64, q: &mut [f64], r: &mut [f64]) {
        let m = self.degree;
        for k in 0..=m {
            // Seed: Q_k^k = diag_k s^k; for k ≥ 1 run the recurrence on Q/s.
            let seed = if k == 0 {
                self.diagonal[0]
            } else {
                self.diagonal[k] * s.powi(k as i32 - 1)
            };
            let mut prev = 0.0;
            let mut cur = seed;
            for &(a, b) in &self.recurrence[k] {
                let next = a * (z * cur - b * prev);
                prev = cur;
                cur = next;
            }
            if k == 0 {
                q[0] = cur;
            } else {
                r[k] = cur;
                q[k] = cur * s;
            }
        }
        q[m + 1] = 0.0;
    }

    /// `u(x) = Σ c_i f_i(x)` at an unchecked unit vector.
    pub fn value(&self, coeffs: &[f64], x: &Vec3) -> f64 {
        let mut buf = [0.0; 2 * MAX_DEGREE + 1];
        let vals = &mut buf[..self.dimension];
        self.eval_into(x, vals);
        vals.iter().zip(coeffs).map(|(f, c)| f * c).sum()
    }

    /// `u(x)` and its intrinsic gradient at an unchecked unit vector.
    pub fn value_and_gradient(&self, coeffs: &[f64], x: &Vec3) -> (f64, Vec3) {
        let mut vbuf = [0.0; 2 * MAX_DEGREE + 1];
        let mut gbuf = [[0.0; 3]; 2 * MAX_DEGREE + 1];
        let vals = &mut vbuf[..self.dimension];
        let grads = &mut gbuf[..self.dimension];
        self.eval_with_gradient_into(x, vals, grads);
        let mut u = 0.0;
        let mut g = [0.0; 3];
        for ((f, df), c) in vals.iter().zip(grads.iter()).zip(coeffs) {
            u += c * f;
            g = sphere::add(&g, &sphere::scale(df, *c));
        }
        (u, g)
    }

    /// Evaluates `u = Σ c_i f_i` at a validated point.
    pub fn eval_combination(&self, coeffs: &CoefficientVector, point: &SpherePoint) -> Result<f64> {
        self.check_point(point)?;
        self.check_coeffs(coeffs)?;
        Ok(self.value(coeffs.as_slice(), &point.xyz()))
    }

    /// `|Δu(x) + λu(x)|` with Δ from a second-order central stencil in
    /// geodesic normal coordinates at `x`, step [`LAPLACIAN_STEP`].
    pub fn laplacian_residual(
        &self,
        coeffs: &CoefficientVector,
        point: &SpherePoint,
    ) -> Result<f64> {
        self.check_point(point)?;
        self.check_coeffs(coeffs)?;
        let c = coeffs.as_slice();
        let h = LAPLACIAN_STEP;
        let x = point.xyz();
        let u0 = self.value(c, &x);
        let second_sum = if self.sphere_dim == 1 {
            let theta = point.angle();
            let up = self.value(c, &SpherePoint::from_angle(theta + h).xyz());
            let um = self.value(c, &SpherePoint::from_angle(theta - h).xyz());
            up + um - 2.0 * u0
        } else {
            let (e1, e2) = sphere::tangent_frame(&x);
            [e1, e2]
                .iter()
                .map(|e| {
                    let up = self.value(c, &sphere::exp_map(&x, &sphere::scale(e, h)));
                    let um = self.value(c, &sphere::exp_map(&x, &sphere::scale(e, -h)));
                    up + um - 2.0 * u0
                })
                .sum()
        };
        Ok((second_sum / (h * h) + self.eigenvalue * u0).abs())
    }

    /// `max |∫ f_i f_j dx - δ_ij|` under a quadrature rule exact for degree `2m`.
    pub fn orthonormality_residual(&self) -> f64 {
        let q = SphereQuadrature::for_sphere(self.sphere_dim, 2 * self.degree);
        let n = self.dimension;
        let mut gram = vec![0.0; n * n];
        let mut vals = vec![0.0; n];
        for (p, w) in q.points.iter().zip(&q.weights) {
            self.eval_into(&p.xyz(), &mut vals);
            for a in 0..n {
                for b in a..n {
                    gram[a * n + b] += w * vals[a] * vals[b];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[a * n + b] - target).abs());
            }
        }
        worst
    }

    /// Coefficients of the zonal harmonic `√((2m+1)/4π) P_m(⟨x, axis⟩)`,
    /// invariant under rotations about `axis` and of unit L² norm.
    pub fn zonal(&self, axis: &SpherePoint) -> Result<CoefficientVector> {
        if self.sphere_dim != 2 {
            return Err(Error::InvalidArgument(
                "zonal harmonics are only constructed on S²".into(),
            ));
        }
        self.check_point(axis)?;
        // Addition theorem: Σ f_i(a) f_i(x) = (2m+1)/(4π) P_m(⟨a, x⟩).
        let mut c = self.eval(axis)?;
        let k = (4.0 * PI / (2 * self.degree + 1) as f64).sqrt();
        c.iter_mut().for_each(|v| *v *= k);
        Ok(CoefficientVector(c))
    }
}

/// Free-function form of [`HarmonicBasis::eval`].
pub fn eval_basis(basis: &HarmonicBasis, point: &SpherePoint) -> Result<Vec<f64>> {
    basis.eval(point)
}

/// Free-function form of [`HarmonicBasis::eval_gradient`].
pub fn eval_gradient(basis: &HarmonicBasis, point: &SpherePoint) -> Result<Vec<Vec<f64>>> {
    basis.eval_gradient(point)
}

/// Free-function form of [`HarmonicBasis::laplacian_residual`].
pub fn laplacian_residual(
    basis: &HarmonicBasis,
    coeffs: &CoefficientVector,
    point: &SpherePoint,
) -> Result<f64> {
    basis.laplacian_residual(coeffs, point)
}

/// Free-function form of [`HarmonicBasis::zonal`].
pub fn zonal(basis: &HarmonicBasis, axis: &SpherePoint) -> Result<CoefficientVector> {
    basis.zonal(axis)
}

// (cos mθ, sin mθ) from (cos θ, sin θ) by repeated rotation.
fn circle_harmonic(m: usize, c: f64, s: f64) -> (f64, f64) {
    let (mut cm, mut sm) = (1.0, 0.0);
    for _ in 0..m {
        (cm, sm) = (cm * c - sm * s, sm * c + cm * s);
    }
    (cm, sm)
}

// (cos θ, sin θ, cos φ, sin φ) for a unit vector; φ = 0 on the axis.
fn spherical_parts(x: &Vec3) -> (f64, f64, f64, f64) {
    let rho = x[0].hypot(x[1]);
    let r = (rho * rho + x[2] * x[2]).sqrt();
    let (z, s) = (x[2] / r, rho / r);
    if rho > 0.0 {
        (z, s, x[0] / rho, x[1] / rho)
    } else {
        (z, s, 1.0, 0.0)
    }
}
