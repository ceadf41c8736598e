//! Points on S¹ ⊂ ℝ² and S² ⊂ ℝ³, tangent frames, rotations and the
//! geodesic icosphere mesh shared by the zero finder and the quadrature.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Tolerance on `|x| - 1` accepted for a point on the unit sphere.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn normalize(a: &Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Geodesic distance between two unit vectors, accurate for nearby and
/// nearly antipodal pairs alike.
pub fn geodesic(a: &Vec3, b: &Vec3) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Orthonormal basis `(e1, e2)` of the tangent plane at the unit vector `x`,
/// oriented so that `(e1, e2, x)` is right handed.
pub fn tangent_frame(x: &Vec3) -> (Vec3, Vec3) {
    let ax = x.iter().map(|c| c.abs()).collect::<Vec<_>>();
    let helper = if ax[0] <= ax[1] && ax[0] <= ax[2] {
        [1.0, 0.0, 0.0]
    } else if ax[1] <= ax[2] {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = normalize(&cross(&helper, x));
    let e2 = cross(x, &e1);
    (e1, e2)
}

/// Exponential map of S² at `x`: follows the geodesic leaving `x` in the
/// tangent direction `v` for arc length `|v|`.
pub fn exp_map(x: &Vec3, v: &Vec3) -> Vec3 {
    let r = norm(v);
    if r == 0.0 {
        return *x;
    }
    let (s, c) = r.sin_cos();
    let p = add(&scale(x, c), &scale(v, s / r));
    normalize(&p)
}

/// A point of S¹ (`dim = 1`) or S² (`dim = 2`), stored as a unit vector of
/// `dim + 1` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    dim: usize,
    xyz: Vec3,
}

impl SpherePoint {
    /// Validates a unit vector with 2 (circle) or 3 (sphere) coordinates.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = match coords.len() {
            2 => 1,
            3 => 2,
            got => return Err(Error::DimensionMismatch { expected: 3, got }),
        };
        let mut xyz = [0.0; 3];
        xyz[..coords.len()].copy_from_slice(coords);
        let n = norm(&xyz);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotOnSphere { norm: n });
        }
        Ok(Self { dim, xyz })
    }

    /// Projects a nonzero vector onto S² without validation.
    pub fn from_vec3(v: Vec3) -> Self {
        Self {
            dim: 2,
            xyz: normalize(&v),
        }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            dim: 1,
            xyz: [c, s, 0.0],
        }
    }

    /// Point of S² at colatitude `theta` and longitude `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            dim: 2,
            xyz: [st * cp, st * sp, ct],
        }
    }

    pub fn north_pole() -> Self {
        Self {
            dim: 2,
            xyz: [0.0, 0.0, 1.0],
        }
    }

    pub fn sphere_dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.xyz[..self.dim + 1]
    }

    /// Coordinates padded to three components (the third is zero on S¹).
    pub fn xyz(&self) -> Vec3 {
        self.xyz
    }

    /// Angle of a point of S¹.
    pub fn angle(&self) -> f64 {
        self.xyz[1].atan2(self.xyz[0])
    }

    pub fn antipode(&self) -> Self {
        Self {
            dim: self.dim,
            xyz: scale(&self.xyz, -1.0),
        }
    }

    /// Uniformly distributed point of S^dim (normalized Gaussian vector).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let mut v = [0.0; 3];
            for c in v.iter_mut().take(dim + 1) {
                *c = rng.sample(StandardNormal);
            }
            let n = norm(&v);
            if n > 1e-8 {
                return Self {
                    dim,
                    xyz: scale(&v, 1.0 / n),
                };
            }
        }
    }
}

/// A 3×3 rotation matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        let k = normalize(axis);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let [x, y, z] = k;
        Rotation([
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ])
    }

    /// Haar-random rotation: Gram–Schmidt on Gaussian columns, with the
    /// orientation fixed to det = +1.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a = SpherePoint::random(2, rng).xyz();
        let mut b: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        b = sub(&b, &scale(&a, dot(&a, &b)));
        let b = normalize(&b);
        let c = cross(&a, &b);
        Rotation([[a[0], b[0], c[0]], [a[1], b[1], c[1]], [a[2], b[2], c[2]]])
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply_point(&self, p: &SpherePoint) -> SpherePoint {
        SpherePoint::from_vec3(self.apply(&p.xyz()))
    }
}

/// Subdivided icosahedron with vertices on the unit sphere.
#[derive(Debug)]
pub struct Icosphere {
    pub depth: usize,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Largest geodesic edge length over all faces.
    pub max_edge: f64,
}

impl Icosphere {
    pub fn new(depth: usize) -> Self {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ]
        .iter()
        .map(normalize)
        .collect();
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];

        for _ in 0..depth {
            let mut midpoints: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 2);
            let mut next = Vec::with_capacity(faces.len() * 4);
            let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
                let key = if a < b { (a, b) } else { (b, a) };
                *midpoints.entry(key).or_insert_with(|| {
                    let m = normalize(&add(&verts[a as usize], &verts[b as usize]));
                    verts.push(m);
                    (verts.len() - 1) as u32
                })
            };
            for &[a, b, c] in &faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            faces = next;
        }

        let max_edge = faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| vertices[i as usize]);
                geodesic(&a, &b).max(geodesic(&b, &c)).max(geodesic(&c, &a))
            })
            .fold(0.0, f64::max);

        Self {
            depth,
            vertices,
            faces,
            max_edge,
        }
    }

    /// Shared, lazily built mesh for `depth`.
    pub fn cached(depth: usize) -> Arc<Icosphere> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Icosphere>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(mesh) = cache.lock().unwrap().get(&depth) {
            return Arc::clone(mesh);
        }
        let mesh = Arc::new(Icosphere::new(depth));
        cache.lock().unwrap().entry(depth).or_insert(mesh).clone()
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    /// Centroid of a face projected to the sphere.
    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.face_vertices(face);
        normalize(&add(&add(&a, &b), &c))
    }
}

/// Area of the geodesic triangle with unit-vector corners `a`, `b`, `c`.
pub fn spherical_triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let numer = dot(a, &cross(b, c)).abs();
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * numer.atan2(denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts() {
        for depth in 0..4 {
            let mesh = Icosphere::new(depth);
            assert_eq!(mesh.faces.len(), 20 * 4usize.pow(depth as u32));
            assert_eq!(mesh.vertices.len(), 10 * 4usize.pow(depth as u32) + 2);
        }
    }

    #[test]
    fn icosphere_areas_tile_the_sphere() {
        let mesh = Icosphere::new(3);
        let total: f64 = (0..mesh.faces.len())
            .map(|f| {
                let [a, b, c] = mesh.face_vertices(f);
                spherical_triangle_area(&a, &b, &c)
            })
            .sum();
        assert!((total - 4.0 * PI).abs() < 1e-11, "{total}");
    }

    #[test]
    fn octant_area() {
        let a = spherical_triangle_area(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]);
        assert!((a - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_off_sphere_points() {
        assert!(matches!(
            SpherePoint::new(&[1.0, 1.0, 0.0]),
            Err(Error::NotOnSphere { .. })
        ));
        assert!(matches!(
            SpherePoint::new(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(SpherePoint::new(&[0.6, 0.8]).is_ok());
    }

    #[test]
    fn frames_and_rotations_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = SpherePoint::random(2, &mut rng).xyz();
            let (e1, e2) = tangent_frame(&x);
            assert!(dot(&e1, &x).abs() < 1e-14);
            assert!(dot(&e2, &x).abs() < 1e-14);
            assert!(dot(&e1, &e2).abs() < 1e-14);
            assert!((norm(&e1) - 1.0).abs() < 1e-14);
            let r = Rotation::random(&mut rng);
            let y = r.apply(&x);
            assert!((norm(&y) - 1.0).abs() < 1e-14);
            let back = r.transpose().apply(&y);
            assert!(norm(&sub(&back, &x)) < 1e-14);
            assert!((dot(&r.0[0], &cross(&r.0[1], &r.0[2])) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_map_moves_by_arc_length() {
        let x = [0.0, 0.0, 1.0];
        let y = exp_map(&x, &[0.3, 0.0, 0.0]);
        assert!((geodesic(&x, &y) - 0.3).abs() < 1e-15);
    }
}
