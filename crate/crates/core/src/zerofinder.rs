//! Common zeros of `n` eigenfunctions on S^n for n = 1, 2.
//!
//! On S² the search runs on a subdivided icosahedron: a face survives when
//! every function could vanish inside it, judged by sign changes at the
//! corners and by clearance tests whose constants come from the pointwise
//! identities `Σ |∇f_i|² = λN / vol M` and `Σ |∇²f_i|² = λ(λ-1)N / vol M`
//! (the second on S² only). Newton's method on the 2×2
//! tangent system then refines one start per surviving face. The count is
//! confirmed by a second pass one level finer; disagreement triggers a single
//! escalation. Agreement between levels is a heuristic certificate, not a
//! proof.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::harmonics::{CoefficientVector, HarmonicBasis};
use crate::sphere::{self, Icosphere, SpherePoint, Vec3};

/// Residual bound for reported zeros, relative to `‖c_i‖ √(λN / vol M)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Smallest accepted ratio of singular values of the sample rows.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// More than this many times the Bézout bound of distinct converged points
/// is read as a curve of common zeros.
pub const DEGENERACY_FACTOR: u64 = 4;

// Largest (vertices × N) table kept in the cache.
const TABLE_CACHE_LIMIT: usize = 4_000_000;

/// Zero-finder settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Icosphere subdivision depth; `None` picks [`default_depth`].
    pub depth: Option<usize>,
    /// Newton stops when the tangent step is shorter than this.
    pub newton_tol: f64,
    pub max_iterations: usize,
    /// Geodesic radius under which converged points are merged.
    pub dedup_radius: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            depth: None,
            newton_tol: 1e-12,
            max_iterations: 30,
            dedup_radius: 1e-6,
        }
    }
}

/// `max(4, ⌈log₂ m⌉ + 3)`: faces several times smaller than the nodal
/// feature size `π / m`.
pub fn default_depth(max_degree: usize) -> usize {
    let log2 = (max_degree.max(1) as f64).log2().ceil() as usize;
    (log2 + 3).max(4)
}

/// `n` eigenfunctions spanning a subspace `U`; row `i` holds the
/// coefficients of `u_i` in the basis of degree `source_degrees[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSample {
    rows: Vec<Vec<f64>>,
    source_degrees: Vec<usize>,
}

impl SubspaceSample {
    /// Validates that the rows are nonzero and of full rank.
    pub fn new(rows: Vec<Vec<f64>>, source_degrees: Vec<usize>) -> Result<Self> {
        if rows.is_empty() || rows.len() != source_degrees.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} degrees",
                rows.len(),
                source_degrees.len()
            )));
        }
        let ratio = singular_value_ratio(&rows, &source_degrees);
        if !(ratio > RANK_TOLERANCE) {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(Self {
            rows,
            source_degrees,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn source_degrees(&self) -> &[usize] {
        &self.source_degrees
    }

    pub fn row(&self, i: usize) -> CoefficientVector {
        CoefficientVector(self.rows[i].clone())
    }
}

/// `σ_min / σ_max` of the rows seen as functions; rows of different degree
/// are orthogonal.
pub fn singular_value_ratio(rows: &[Vec<f64>], degrees: &[usize]) -> f64 {
    let n = rows.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if degrees[i] == degrees[j] && rows[i].len() == rows[j].len() {
                gram[i * n + j] = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            }
        }
    }
    let eig = symmetric_eigenvalues(&gram, n);
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return 0.0;
    }
    (min.max(0.0) / max).sqrt()
}

fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    match n {
        1 => vec![a[0]],
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            let mean = 0.5 * (p + r);
            let d = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            vec![mean + d, mean - d]
        }
        _ => {
            // Cyclic Jacobi; only reached by callers with n > 2.
            let mut m = a.to_vec();
            for _ in 0..100 {
                let mut off = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            off += m[i * n + j] * m[i * n + j];
                        }
                    }
                }
                if off < 1e-30 {
                    break;
                }
                for p in 0..n {
                    for q in p + 1..n {
                        let apq = m[p * n + q];
                        if apq.abs() < 1e-300 {
                            continue;
                        }
                        let theta = 0.5 * (m[q * n + q] - m[p * n + p]) / apq;
                        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                        let t = if theta == 0.0 { 1.0 } else { t };
                        let c = 1.0 / (t * t + 1.0).sqrt();
                        let s = t * c;
                        for k in 0..n {
                            let (akp, akq) = (m[k * n + p], m[k * n + q]);
                            m[k * n + p] = c * akp - s * akq;
                            m[k * n + q] = s * akp + c * akq;
                        }
                        for k in 0..n {
                            let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                            m[p * n + k] = c * apk - s * aqk;
                            m[q * n + k] = s * apk + c * aqk;
                        }
                    }
                }
            }
            (0..n).map(|i| m[i * n + i]).collect()
        }
    }
}

/// Outcome class of a zero search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ZeroStatus {
    /// Counts at depth D and D+1 agree.
    Complete,
    /// Counts disagreed and one finer level was searched.
    DepthEscalated,
    /// The common zero set looks like a curve; `zeros` is empty.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroFindingResult {
    pub zeros: Vec<SpherePoint>,
    pub status: ZeroStatus,
    /// Largest `|u_i| / (‖c_i‖ √(λ_i N_i / vol M))` over reported zeros.
    pub max_residual: f64,
    /// `2 m_1 ⋯ m_n`.
    pub bezout_bound: u64,
    /// Finest mesh depth searched (0 on S¹).
    pub depth: usize,
}

impl ZeroFindingResult {
    pub fn count(&self) -> usize {
        self.zeros.len()
    }
}

/// Bézout bound `2 m_1 ⋯ m_n`.
pub fn bezout_bound(degrees: &[usize]) -> u64 {
    2 * degrees.iter().map(|&m| m as u64).product::<u64>()
}

/// True iff the number of zeros does not exceed the Bézout bound.
pub fn verify_bezout(result: &ZeroFindingResult) -> Result<bool> {
    if result.status == ZeroStatus::Degenerate {
        return Err(Error::Degenerate(
            "Bézout check needs a finite zero set".into(),
        ));
    }
    Ok(result.zeros.len() as u64 <= result.bezout_bound)
}

/// Zeros of `a cos mθ + b sin mθ` on S¹, in closed form: exactly `2m` of them.
pub fn find_common_zeros_s1(
    basis: &HarmonicBasis,
    sample: &SubspaceSample,
) -> Result<ZeroFindingResult> {
    if basis.sphere_dim() != 1 {
        return Err(Error::InvalidArgument("basis is not on S¹".into()));
    }
    if sample.rows().len() != 1 || sample.rows()[0].len() != 2 {
        return Err(Error::InvalidArgument(
            "S¹ sample must be a single row of length 2".into(),
        ));
    }
    let m = basis.degree();
    let (a, b) = (sample.rows()[0][0], sample.rows()[0][1]);
    let r = a.hypot(b);
    if !(r > 0.0) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    // a cos mθ + b sin mθ = r cos(mθ - φ), φ = atan2(b, a).
    let phi = b.atan2(a);
    let mf = m as f64;
    let mut angles: Vec<f64> = (0..2 * m)
        .map(|k| ((phi + PI / 2.0 + k as f64 * PI) / mf).rem_euclid(2.0 * PI))
        .collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let unit = [a / r, b / r];
    let mut max_residual: f64 = 0.0;
    let zeros = angles
        .iter()
        .map(|&t| {
            let p = SpherePoint::from_angle(t);
            max_residual = max_residual.max(basis.value(&unit, &p.xyz()).abs());
            p
        })
        .collect();
    Ok(ZeroFindingResult {
        zeros,
        status: ZeroStatus::Complete,
        max_residual,
        bezout_bound: bezout_bound(&[m]),
        depth: 0,
    })
}

/// Common zeros of two eigenfunctions on S², row `i` in `bases[i]`.
pub fn find_common_zeros_s2(
    bases: [&HarmonicBasis; 2],
    sample: &SubspaceSample,
    config: &SolverConfig,
) -> Result<ZeroFindingResult> {
    if bases.iter().any(|b| b.sphere_dim() != 2) {
        return Err(Error::InvalidArgument("bases must be on S²".into()));
    }
    if sample.rows().len() != 2 {
        return Err(Error::InvalidArgument(
            "S² sample must have two rows".into(),
        ));
    }
    for (i, b) in bases.iter().enumerate() {
        if sample.rows()[i].len() != b.dimension() {
            return Err(Error::InvalidArgument(format!(
                "row {i} has length {}, basis dimension is {}",
                sample.rows()[i].len(),
                b.dimension()
            )));
        }
    }
    let rows: Vec<Vec<f64>> = sample
        .rows()
        .iter()
        .map(|r| {
            let n = r.iter().map(|c| c * c).sum::<f64>().sqrt();
            r.iter().map(|c| c / n).collect()
        })
        .collect();
    let degrees = [bases[0].degree(), bases[1].degree()];
    let bound = bezout_bound(&degrees);
    let depth = config
        .depth
        .unwrap_or_else(|| default_depth(degrees[0].max(degrees[1])));
    let system = System {
        bases,
        rows: [&rows[0], &rows[1]],
    };

    let coarse = system.search(depth, config, bound);
    let fine = system.search(depth + 1, config, bound);
    let result = |zeros: Vec<Vec3>, status, depth| {
        let max_residual = zeros.iter().map(|z| system.residual(z)).fold(0.0, f64::max);
        ZeroFindingResult {
            zeros: zeros.into_iter().map(SpherePoint::from_vec3).collect(),
            status,
            max_residual,
            bezout_bound: bound,
            depth,
        }
    };
    let degenerate = |depth| ZeroFindingResult {
        zeros: Vec::new(),
        status: ZeroStatus::Degenerate,
        max_residual: 0.0,
        bezout_bound: bound,
        depth,
    };

    match (coarse, fine) {
        (None, None) => Ok(degenerate(depth + 1)),
        (Some(c), Some(f)) if c.len() == f.len() => Ok(result(f, ZeroStatus::Complete, depth + 1)),
        (c, f) => match system.search(depth + 2, config, bound) {
            None => Ok(degenerate(depth + 2)),
            Some(finest) => {
                // Every reported point passed the residual test, so keep all
                // of them.
                let mut all = finest;
                all.extend(f.unwrap_or_default());
                all.extend(c.unwrap_or_default());
                let merged = dedup(all, config.dedup_radius);
                Ok(result(merged, ZeroStatus::DepthEscalated, depth + 2))
            }
        },
    }
}

struct System<'a> {
    bases: [&'a HarmonicBasis; 2],
    rows: [&'a [f64]; 2],
}

impl System<'_> {
    fn residual(&self, x: &Vec3) -> f64 {
        (0..2)
            .map(|i| {
                self.bases[i].value(self.rows[i], x).abs() / self.bases[i].gradient_sum().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Converged, deduplicated zeros at one depth; `None` on a curve of zeros.
    fn search(&self, depth: usize, config: &SolverConfig, bound: u64) -> Option<Vec<Vec3>> {
        let mesh = Icosphere::cached(depth);
        let values: Vec<Vec<f64>> = (0..2)
            .map(|i| vertex_values(self.bases[i], self.rows[i], &mesh))
            .collect();
        let diam = mesh.max_edge * (1.0 + 1e-9);
        let bounds: Vec<ClearanceBounds> = (0..2)
            .map(|i| ClearanceBounds::new(self.bases[i], diam))
            .collect();

        let mut found = Vec::new();
        for (f, face) in mesh.faces.iter().enumerate() {
            let keep = (0..2).all(|i| bounds[i].may_vanish(face.map(|k| values[i][k as usize])));
            if !keep {
                continue;
            }
            let start = mesh.face_centroid(f);
            if let Some(z) = self.newton(start, config) {
                if sphere::geodesic(&start, &z) <= 3.0 * mesh.max_edge {
                    found.push(z);
                }
            }
        }
        let zeros = dedup(found, config.dedup_radius);
        if zeros.len() as u64 > DEGENERACY_FACTOR * bound {
            None
        } else {
            Some(zeros)
        }
    }

    fn newton(&self, start: Vec3, config: &SolverConfig) -> Option<Vec3> {
        let mut x = start;
        for _ in 0..config.max_iterations {
            let (u1, g1) = self.bases[0].value_and_gradient(self.rows[0], &x);
            let (u2, g2) = self.bases[1].value_and_gradient(self.rows[1], &x);
            let (e1, e2) = sphere::tangent_frame(&x);
            let j = [
                [sphere::dot(&g1, &e1), sphere::dot(&g1, &e2)],
                [sphere::dot(&g2, &e1), sphere::dot(&g2, &e2)],
            ];
            let (d1, d2) = solve_2x2(&j, [-u1, -u2])?;
            let step = sphere::add(&sphere::scale(&e1, d1), &sphere::scale(&e2, d2));
            let len = sphere::norm(&step);
            if !len.is_finite() {
                return None;
            }
            x = sphere::exp_map(&x, &step);
            if len < config.newton_tol {
                return (self.residual(&x) <= RESIDUAL_TOLERANCE).then_some(x);
            }
        }
        None
    }
}

/// Certified exclusion of mesh faces for a unit-norm coefficient vector.
///
/// First order: `|∇u| ≤ L = √(λN / vol M)`, so a face of diameter `d`
/// whose corner values all exceed `L d` in magnitude cannot contain a zero.
/// Second order: the Hessians satisfy `Σ |∇²f_i|² = λ(λ-1)N / vol M` on S²,
/// which bounds the error of linear interpolation over the flat face pulled
/// back to the sphere by radial projection; a face whose corner values share
/// a sign and all exceed that error cannot contain a zero either.
#[derive(Debug, Clone, Copy)]
struct ClearanceBounds {
    first_order: f64,
    second_order: f64,
}

impl ClearanceBounds {
    fn new(basis: &HarmonicBasis, diam: f64) -> Self {
        let lambda = basis.eigenvalue();
        let lipschitz = basis.gradient_sum().sqrt();
        let hessian = (lambda * (lambda - 1.0).max(0.0) * basis.dimension() as f64
            / basis.manifold_volume())
        .sqrt();
        // Flat-face points have norm ≥ cos(diam); radial projection then has
        // |Dπ| ≤ 1/r and |D²π| ≤ 3/r².
        let r = diam.cos();
        let chord = 2.0 * (diam / 2.0).sin();
        let curvature = (hessian + 3.0 * lipschitz) / (r * r);
        Self {
            first_order: lipschitz * diam,
            // Factor 2 of slack over the interpolation bound M d² / 2.
            second_order: curvature * chord * chord,
        }
    }

    fn may_vanish(&self, corners: [f64; 3]) -> bool {
        let sign_change = corners.iter().any(|&a| a <= 0.0) && corners.iter().any(|&a| a >= 0.0);
        if sign_change {
            return true;
        }
        let min = corners
            .iter()
            .map(|a| a.abs())
            .fold(f64::INFINITY, f64::min);
        let max = corners.iter().map(|a| a.abs()).fold(0.0, f64::max);
        max <= self.first_order && min <= self.second_order
    }
}

// Newton step; minimum-norm least squares when the Jacobian is rank one.
fn solve_2x2(j: &[[f64; 2]; 2], rhs: [f64; 2]) -> Option<(f64, f64)> {
    let fro2 = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[1][0] * j[1][0] + j[1][1] * j[1][1];
    if !(fro2 > 0.0) {
        return None;
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.abs() > 1e-10 * fro2 {
        let d1 = (rhs[0] * j[1][1] - rhs[1] * j[0][1]) / det;
        let d2 = (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / det;
        return Some((d1, d2));
    }
    // J ≈ σ w vᵀ: δ = v (wᵀ rhs) / σ with w, v from the dominant direction.
    let jjt = [
        j[0][0] * j[0][0] + j[0][1] * j[0][1],
        j[0][0] * j[1][0] + j[0][1] * j[1][1],
        j[1][0] * j[1][0] + j[1][1] * j[1][1],
    ];
    let w = if jjt[0] >= jjt[2] {
        let n = (jjt[0] * jjt[0] + jjt[1] * jjt[1]).sqrt();
        [jjt[0] / n, jjt[1] / n]
    } else {
        let n = (jjt[1] * jjt[1] + jjt[2] * jjt[2]).sqrt();
        [jjt[1] / n, jjt[2] / n]
    };
    let jt_w = [
        j[0][0] * w[0] + j[1][0] * w[1],
        j[0][1] * w[0] + j[1][1] * w[1],
    ];
    let sigma2 = jt_w[0] * jt_w[0] + jt_w[1] * jt_w[1];
    if !(sigma2 > 0.0) {
        return None;
    }
    let proj = (w[0] * rhs[0] + w[1] * rhs[1]) / sigma2;
    Some((jt_w[0] * proj, jt_w[1] * proj))
}

fn vertex_values(basis: &HarmonicBasis, coeffs: &[f64], mesh: &Icosphere) -> Vec<f64> {
    let n = basis.dimension();
    let dot_row = |row: &[f64]| row.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>();
    match basis_table(basis, mesh) {
        Some(table) => table.chunks_exact(n).map(dot_row).collect(),
        None => mesh
            .vertices
            .iter()
            .map(|v| basis.value(coeffs, v))
            .collect(),
    }
}

type TableCache = Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>;

// Basis values at every vertex, vertex-major, cached per (degree, depth).
fn basis_table(basis: &HarmonicBasis, mesh: &Icosphere) -> Option<Arc<Vec<f64>>> {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    let n = basis.dimension();
    if mesh.vertices.len() * n > TABLE_CACHE_LIMIT {
        return None;
    }
    let key = (basis.degree(), mesh.depth);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return Some(Arc::clone(t));
    }
    let mut table = vec![0.0; mesh.vertices.len() * n];
    for (v, out) in mesh.vertices.iter().zip(table.chunks_exact_mut(n)) {
        basis.eval_into(v, out);
    }
    let table = Arc::new(table);
    Some(cache.lock().unwrap().entry(key).or_insert(table).clone())
}

/// Sorts points canonically, then keeps the first representative of every
/// cluster of geodesic radius `radius`.
fn dedup(mut points: Vec<Vec3>, radius: f64) -> Vec<Vec3> {
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Vec3> = Vec::new();
    for p in points {
        if kept.iter().all(|q| sphere::geodesic(&p, q) > radius) {
            kept.push(p);
        }
    }
    kept
}

/// Roots of an eigenfunction restricted to a great circle.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleRestriction {
    /// Root angles `t ∈ [0, 2π)` of `t ↦ u(cos t e₁ + sin t e₂)`.
    pub roots: Vec<f64>,
}

impl CircleRestriction {
    pub fn count(&self) -> usize {
        self.roots.len()
    }
}

/// Restricts `u` to the great circle spanned by the orthonormal pair
/// `(e1, e2)` and locates its roots by a sign scan on `32m` samples followed
/// by bisection.
pub fn restrict_to_great_circle(
    basis: &HarmonicBasis,
    coeffs: &CoefficientVector,
    frame: (&Vec3, &Vec3),
) -> Result<CircleRestriction> {
    if basis.sphere_dim() != 2 {
        return Err(Error::InvalidArgument(
            "great-circle restriction needs an S² basis".into(),
        ));
    }
    if coeffs.len() != basis.dimension() {
        return Err(Error::InvalidArgument(
            "coefficient length does not match basis".into(),
        ));
    }
    let (e1, e2) = frame;
    let ortho = sphere::dot(e1, e2).abs();
    if ortho > 1e-10
        || (sphere::norm(e1) - 1.0).abs() > 1e-10
        || (sphere::norm(e2) - 1.0).abs() > 1e-10
    {
        return Err(Error::InvalidArgument(
            "circle frame is not orthonormal".into(),
        ));
    }
    let c = coeffs.as_slice();
    let g = |t: f64| {
        let (s, co) = t.sin_cos();
        basis.value(
            c,
            &sphere::add(&sphere::scale(e1, co), &sphere::scale(e2, s)),
        )
    };
    let samples = 32 * basis.degree();
    let h = 2.0 * PI / samples as f64;
    let values: Vec<f64> = (0..samples).map(|k| g(k as f64 * h)).collect();
    let magnitude = coeffs.norm() * basis.radius_squared().sqrt();
    if values.iter().all(|v| v.abs() <= 1e-12 * magnitude) {
        return Err(Error::Degenerate(
            "function vanishes on the whole circle".into(),
        ));
    }
    let mut roots = Vec::new();
    for k in 0..samples {
        let (mut a, mut b) = (k as f64 * h, (k + 1) as f64 * h);
        let (mut fa, fb) = (values[k], values[(k + 1) % samples]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            let fm = g(mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fa * fm < 0.0 {
                b = mid;
            } else {
                a = mid;
                fa = fm;
            }
            if b - a < 1e-14 {
                break;
            }
        }
        roots.push(0.5 * (a + b));
    }
    Ok(CircleRestriction { roots })
}
