//! The equivariant map `f = (f_1, …, f_N): M → ℝ^N` built from an
//! orthonormal eigenbasis: its image lies on a round sphere, it is a
//! homothety onto its image, and it covers the image `d` times.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonics::HarmonicBasis;
use crate::sphere::{self, Icosphere, SpherePoint, Vec3};

/// Default icosphere depth of [`image_volume`]; reproduces the degree-1
/// image area 3 to 1e-12 and degree ≤ 10 to well under 0.5%.
pub const DEFAULT_QUADRATURE_DEPTH: usize = 5;

/// Threshold on `|f(x) - f(y)| / R` for two points to share a fiber.
pub const FIBER_TOLERANCE: f64 = 1e-8;

// Minimum geodesic separation for a collision to count as non-trivial.
const FIBER_SEPARATION: f64 = 1e-3;

const PROBE_SEED: u64 = 0x0E3B_ED00;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub sphere_dim: usize,
    pub degree: usize,
    /// `R = √(N / vol M)`.
    pub radius: f64,
    /// `C = λN / (n vol M)`, the factor in `f*(Σ dt_i²) = C g`.
    pub dilation: f64,
    pub covering_degree: usize,
    /// `∫_M √det(Gram) dx` by quadrature.
    pub numeric_integral: f64,
    /// `numeric_integral / covering_degree`.
    pub numeric_image_volume: f64,
    /// `(1/d) C^{n/2} vol M`.
    pub predicted_image_volume: f64,
    /// Largest `|Gram - C I|_max / C` over the quadrature nodes.
    pub max_gram_residual: f64,
    /// Largest `|Σ f_i² - R²| / R²` over the quadrature nodes.
    pub max_radius_residual: f64,
    pub antipodal_identified: bool,
    pub quadrature_depth: usize,
}

/// Largest `|Σ f_i(x)² - N / vol M|` over `num_points` uniform points.
pub fn radius_check<R: Rng + ?Sized>(
    basis: &HarmonicBasis,
    num_points: usize,
    rng: &mut R,
) -> Result<f64> {
    if num_points < 1 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    let target = basis.radius_squared();
    let mut worst: f64 = 0.0;
    for _ in 0..num_points {
        let p = SpherePoint::random(basis.sphere_dim(), rng);
        let s: f64 = basis.eval(&p)?.iter().map(|v| v * v).sum();
        worst = worst.max((s - target).abs());
    }
    Ok(worst)
}

/// Pullback metric of `f` at one point, in an orthonormal tangent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationCheck {
    /// `Gram[a][b] = Σ_i ∂_a f_i ∂_b f_i`.
    pub gram: Vec<Vec<f64>>,
    /// `C = λN / (n vol M)`.
    pub dilation: f64,
    /// `max |Gram - C I|`.
    pub residual: f64,
}

impl DilationCheck {
    /// `Σ_i |∇f_i|²`, which must equal `nC = λN / vol M`.
    pub fn trace(&self) -> f64 {
        (0..self.gram.len()).map(|a| self.gram[a][a]).sum()
    }
}

pub fn dilation_constant(basis: &HarmonicBasis) -> f64 {
    basis.gradient_sum() / basis.sphere_dim() as f64
}

fn tangent_basis(dim: usize, x: &Vec3) -> Vec<Vec3> {
    if dim == 1 {
        vec![[-x[1], x[0], 0.0]]
    } else {
        let (e1, e2) = sphere::tangent_frame(x);
        vec![e1, e2]
    }
}

fn gram_at(basis: &HarmonicBasis, x: &Vec3) -> (Vec<Vec<f64>>, f64) {
    let n = basis.dimension();
    let mut vals = vec![0.0; n];
    let mut grads = vec![[0.0; 3]; n];
    basis.eval_with_gradient_into(x, &mut vals, &mut grads);
    let frame = tangent_basis(basis.sphere_dim(), x);
    let gram = frame
        .iter()
        .map(|ea| {
            frame
                .iter()
                .map(|eb| {
                    grads
                        .iter()
                        .map(|g| sphere::dot(g, ea) * sphere::dot(g, eb))
                        .sum()
                })
                .collect()
        })
        .collect();
    let sum_sq = vals.iter().map(|v| v * v).sum();
    (gram, sum_sq)
}

fn determinant(g: &[Vec<f64>]) -> f64 {
    match g.len() {
        1 => g[0][0],
        _ => g[0][0] * g[1][1] - g[0][1] * g[1][0],
    }
}

/// Gram matrix of the differential of `f` at `point` against `C · I`.
pub fn dilation_check(basis: &HarmonicBasis, point: &SpherePoint) -> Result<DilationCheck> {
    if point.sphere_dim() != basis.sphere_dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.sphere_dim() + 1,
            got: point.sphere_dim() + 1,
        });
    }
    let dilation = dilation_constant(basis);
    let (gram, _) = gram_at(basis, &point.xyz());
    let residual = gram
        .iter()
        .enumerate()
        .flat_map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(move |(b, v)| (v - if a == b { dilation } else { 0.0 }).abs())
        })
        .fold(0.0, f64::max);
    Ok(DilationCheck {
        gram,
        dilation,
        residual,
    })
}

fn image_distance(basis: &HarmonicBasis, x: &Vec3, y: &Vec3) -> f64 {
    let n = basis.dimension();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    basis.eval_into(x, &mut fx);
    basis.eval_into(y, &mut fy);
    fx.iter()
        .zip(&fy)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Number of points of `M` that `f` sends to each point of `f(M)`.
///
/// On S² the only candidate fiber is `{x, -x}`: probes test `f(-x) = f(x)`
/// and random pairs are scanned for any other collision, which would be an
/// [`Error::UnexpectedFiber`]. On S¹ the fiber of each probe is enumerated
/// directly as the maxima of `θ ↦ ⟨f(θ), f(θ₀)⟩` that reach `R²`.
pub fn covering_degree<R: Rng + ?Sized>(
    basis: &HarmonicBasis,
    probes: usize,
    rng: &mut R,
) -> Result<usize> {
    if probes < 1 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    let tol = FIBER_TOLERANCE * basis.radius_squared().sqrt();
    if basis.sphere_dim() == 1 {
        let mut degree = None;
        for _ in 0..probes {
            let theta0 = rng.random_range(0.0..2.0 * PI);
            let d = circle_fiber(basis, theta0, tol).len();
            if degree.is_some_and(|prev| prev != d) {
                return Err(Error::UnexpectedFiber { distance: 0.0 });
            }
            degree = Some(d);
        }
        return Ok(degree.unwrap_or(1));
    }

    let mut antipodal = true;
    for _ in 0..probes {
        let x = SpherePoint::random(2, rng).xyz();
        if image_distance(basis, &x, &sphere::scale(&x, -1.0)) >= tol {
            antipodal = false;
        }
    }
    for _ in 0..probes {
        let x = SpherePoint::random(2, rng).xyz();
        let y = SpherePoint::random(2, rng).xyz();
        let sep = sphere::geodesic(&x, &y);
        let sep_anti = PI - sep;
        let trivial = sep < FIBER_SEPARATION || (antipodal && sep_anti < FIBER_SEPARATION);
        if !trivial && image_distance(basis, &x, &y) < tol {
            return Err(Error::UnexpectedFiber { distance: sep });
        }
    }
    Ok(if antipodal { 2 } else { 1 })
}

// Angles θ with f(θ) = f(θ₀): critical points of ⟨f(θ), f(θ₀)⟩ located by a
// sign scan of its derivative and bisection.
fn circle_fiber(basis: &HarmonicBasis, theta0: f64, tol: f64) -> Vec<f64> {
    let n = basis.dimension();
    let mut f0 = vec![0.0; n];
    basis.eval_into(&SpherePoint::from_angle(theta0).xyz(), &mut f0);
    let slope = |t: f64| {
        let x = SpherePoint::from_angle(t).xyz();
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 3]; n];
        basis.eval_with_gradient_into(&x, &mut vals, &mut grads);
        let tangent = [-x[1], x[0], 0.0];
        grads
            .iter()
            .zip(&f0)
            .map(|(g, c)| sphere::dot(g, &tangent) * c)
            .sum::<f64>()
    };
    let samples = 64 * basis.degree();
    let h = 2.0 * PI / samples as f64;
    let mut fiber = Vec::new();
    // Shift the grid so θ₀ sits mid-cell rather than on a node.
    let start = theta0 + 0.5 * h;
    for k in 0..samples {
        let (mut a, mut b) = (start + k as f64 * h, start + (k + 1) as f64 * h);
        // Maxima: slope goes from positive to negative.
        if !(slope(a) > 0.0 && slope(b) <= 0.0) {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            let sm = slope(mid);
            if sm > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        let t = 0.5 * (a + b);
        let d = image_distance(
            basis,
            &SpherePoint::from_angle(t).xyz(),
            &SpherePoint::from_angle(theta0).xyz(),
        );
        if d < tol {
            fiber.push(t.rem_euclid(2.0 * PI));
        }
    }
    fiber
}

/// Image volume of `f(M)` by quadrature of `√det(Gram)` on an icosphere of
/// the given depth (S²) or a uniform grid of `64 · 2^depth` nodes (S¹),
/// divided by the covering degree, next to the closed form.
pub fn image_volume(basis: &HarmonicBasis, quadrature_depth: usize) -> Result<EmbeddingReport> {
    if quadrature_depth > 9 {
        return Err(Error::InvalidArgument(
            "quadrature depth must be at most 9".into(),
        ));
    }
    let n = basis.sphere_dim();
    let dilation = dilation_constant(basis);
    let r2 = basis.radius_squared();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let d = covering_degree(basis, 64, &mut rng)?;

    let mut integral = 0.0;
    let mut gram_residual: f64 = 0.0;
    let mut radius_residual: f64 = 0.0;
    let mut visit = |x: &Vec3, weight: f64| {
        let (gram, sum_sq) = gram_at(basis, x);
        integral += weight * determinant(&gram).max(0.0).sqrt();
        for (a, row) in gram.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let target = if a == b { dilation } else { 0.0 };
                gram_residual = gram_residual.max((v - target).abs() / dilation);
            }
        }
        radius_residual = radius_residual.max((sum_sq - r2).abs() / r2);
    };
    if n == 1 {
        let k = 64usize << quadrature_depth;
        let w = 2.0 * PI / k as f64;
        for i in 0..k {
            visit(&SpherePoint::from_angle(i as f64 * w).xyz(), w);
        }
    } else {
        let mesh = Icosphere::cached(quadrature_depth);
        for f in 0..mesh.faces.len() {
            let [a, b, c] = mesh.face_vertices(f);
            let area = sphere::spherical_triangle_area(&a, &b, &c);
            visit(&mesh.face_centroid(f), area);
        }
    }

    let predicted = dilation.powf(n as f64 / 2.0) * basis.manifold_volume() / d as f64;
    Ok(EmbeddingReport {
        sphere_dim: n,
        degree: basis.degree(),
        radius: r2.sqrt(),
        dilation,
        covering_degree: d,
        numeric_integral: integral,
        numeric_image_volume: integral / d as f64,
        predicted_image_volume: predicted,
        max_gram_residual: gram_residual,
        max_radius_residual: radius_residual,
        antipodal_identified: n == 2 && d == 2,
        quadrature_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::build_basis;

    #[test]
    fn radii() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = build_basis(2, 1).unwrap();
        assert!((b.radius_squared() - 3.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(radius_check(&b, 100, &mut rng).unwrap() < 1e-8 * b.radius_squared());
        let b = build_basis(2, 4).unwrap();
        assert!((b.radius_squared() - 9.0 / (4.0 * PI)).abs() < 1e-15);
        for m in [1, 7, 30] {
            let b = build_basis(1, m).unwrap();
            assert!((b.radius_squared() - 1.0 / PI).abs() < 1e-15);
            assert!(radius_check(&b, 100, &mut rng).unwrap() < 1e-8 / PI);
        }
        assert!(radius_check(&b, 0, &mut rng).is_err());
    }

    #[test]
    fn dilation_degree_one() {
        let b = build_basis(2, 1).unwrap();
        let c = dilation_check(&b, &SpherePoint::from_spherical(0.4, 2.0)).unwrap();
        assert!((c.dilation - 3.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(c.residual < 1e-14);
        assert!((c.trace() - b.gradient_sum()).abs() < 1e-14);
        assert!(dilation_check(&b, &SpherePoint::from_angle(0.1)).is_err());
    }

    #[test]
    fn dilation_on_circle_matches_direct_derivative() {
        // f = (cos 3θ, sin 3θ)/√π has |f'|² = 9/π.
        let b = build_basis(1, 3).unwrap();
        let c = dilation_check(&b, &SpherePoint::from_angle(1.1)).unwrap();
        assert!((c.gram[0][0] - 9.0 / PI).abs() < 1e-13);
        assert!((c.dilation - 9.0 / PI).abs() < 1e-13);
    }

    #[test]
    fn covering_degree_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 1..=10 {
            let b = build_basis(2, m).unwrap();
            let d = covering_degree(&b, 50, &mut rng).unwrap();
            assert_eq!(d, if m % 2 == 0 { 2 } else { 1 }, "m {m}");
        }
    }

    #[test]
    fn circle_covering_degree_is_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [1, 2, 3, 7] {
            let b = build_basis(1, m).unwrap();
            assert_eq!(covering_degree(&b, 5, &mut rng).unwrap(), m);
        }
    }

    #[test]
    fn image_volume_low_degrees() {
        let r1 = image_volume(&build_basis(2, 1).unwrap(), DEFAULT_QUADRATURE_DEPTH).unwrap();
        assert!((r1.numeric_image_volume - 3.0).abs() < 1e-4);
        assert!((r1.predicted_image_volume - 3.0).abs() < 1e-12);
        let r2 = image_volume(&build_basis(2, 2).unwrap(), DEFAULT_QUADRATURE_DEPTH).unwrap();
        assert_eq!(r2.covering_degree, 2);
        assert!(r2.antipodal_identified);
        // λ = 6, N = 5: ∫ C dx = 15 counts the image twice; vol f(M) = 7.5.
        assert!((r2.numeric_integral - 15.0).abs() < 0.005 * 15.0);
        assert!((r2.numeric_image_volume - 7.5).abs() < 0.005 * 7.5);
        assert!((r2.predicted_image_volume - 7.5).abs() < 1e-12);
    }

    #[test]
    fn circle_image_length_matches_polyline() {
        for m in [1, 2, 5] {
            let b = build_basis(1, m).unwrap();
            let r = image_volume(&b, 3).unwrap();
            // Polyline through f(θ_k) on a fine grid.
            let k = 200_000;
            let pts: Vec<Vec<f64>> = (0..=k)
                .map(|i| {
                    b.eval(&SpherePoint::from_angle(2.0 * PI * i as f64 / k as f64))
                        .unwrap()
                })
                .collect();
            let length: f64 = pts
                .windows(2)
                .map(|w| ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt())
                .sum();
            assert!((length - r.numeric_integral).abs() < 1e-6);
            assert!((r.numeric_integral - 2.0 * m as f64 * PI.sqrt()).abs() < 1e-10);
            assert_eq!(r.covering_degree, m);
            assert!((r.numeric_image_volume - 2.0 * PI.sqrt()).abs() < 1e-10);
            assert!((r.predicted_image_volume - r.numeric_image_volume).abs() < 1e-10);
        }
    }
}
