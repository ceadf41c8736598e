//! Monte Carlo averages of zero counts over random subspaces, the
//! mixed-degree experiment, the Crofton nodal-length estimator and the
//! tilted zonal pair.
//!
//! Every trial draws from its own ChaCha stream, selected by the trial index,
//! so reports do not depend on how rayon schedules the work.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonics::{CoefficientVector, HarmonicBasis};
use crate::quadrature::gauss_legendre;
use crate::sphere::{self, SpherePoint, Vec3};
use crate::zerofinder::{
    find_common_zeros_s1, find_common_zeros_s2, restrict_to_great_circle, verify_bezout,
    SolverConfig, SubspaceSample, ZeroFindingResult, ZeroStatus, RANK_TOLERANCE,
};

// Consecutive degenerate draws tolerated within one trial.
const MAX_RESAMPLES: usize = 64;

/// `Γ(x)` for positive integers and half-integers.
/// Volume `σ_k` of the unit sphere S^k ⊂ ℝ^{k+1}, from `σ_1 = 2π`,
/// `σ_2 = 4π` and `σ_{k+2} = 2π σ_k / (k + 1)`.
pub fn sphere_surface_area(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument(
            "sphere dimension must be at least 1".into(),
        ));
    }
    let mut j = if k % 2 == 1 { 1 } else { 2 };
    let mut sigma = 2.0 * PI * j as f64;
    while j < k {
        sigma *= 2.0 * PI / (j + 1) as f64;
        j += 2;
    }
    Ok(sigma)
}

/// Average number of common zeros of `n` eigenfunctions with eigenvalue
/// `λ` on an isotropy irreducible `M^n`: `(2/σ_n)(λ/n)^{n/2} vol M`.
pub fn expected_zero_count(n: usize, eigenvalue: f64, volume: f64) -> Result<f64> {
    let sigma = sphere_surface_area(n)?;
    Ok(2.0 * (volume / sigma) * (eigenvalue / n as f64).powf(n as f64 / 2.0))
}

/// Closed form on the round S^n at degree m: `2 (m(m+n-1)/n)^{n/2}`.
pub fn expected_zero_count_sphere(n: usize, m: usize) -> Result<f64> {
    let lambda = (m * (m + n - 1)) as f64;
    expected_zero_count(n, lambda, sphere_surface_area(n)?)
}

/// Conjectured mixed-eigenvalue average
/// `2 √(λ_1 ⋯ λ_n) / (σ_n n^{n/2}) · vol M`. Experimental.
pub fn conjectured_mixed_count(n: usize, eigenvalues: &[f64], volume: f64) -> Result<f64> {
    if eigenvalues.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} eigenvalues for dimension {n}",
            eigenvalues.len()
        )));
    }
    let sigma = sphere_surface_area(n)?;
    let prod: f64 = eigenvalues.iter().product();
    Ok(2.0 * (volume / sigma) * prod.sqrt() / (n as f64).powf(n as f64 / 2.0))
}

/// Random generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws `n` independent standard Gaussian rows, one per basis. For equal
/// bases the spanned subspace is Haar distributed on the Grassmannian.
/// Rank-deficient draws are redrawn.
pub fn sample_subspace<R: Rng + ?Sized>(bases: &[&HarmonicBasis], rng: &mut R) -> SubspaceSample {
    let degrees: Vec<usize> = bases.iter().map(|b| b.degree()).collect();
    loop {
        let rows = bases
            .iter()
            .map(|b| gaussian_vector(b.dimension(), rng))
            .collect();
        if let Ok(sample) = SubspaceSample::new(rows, degrees.clone()) {
            return sample;
        }
    }
}

/// Random great circle: Gram–Schmidt on two Gaussian vectors.
pub fn random_great_circle<R: Rng + ?Sized>(rng: &mut R) -> (Vec3, Vec3) {
    loop {
        let a: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let b: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let na = sphere::norm(&a);
        if na < 1e-8 {
            continue;
        }
        let e1 = sphere::scale(&a, 1.0 / na);
        let b = sphere::sub(&b, &sphere::scale(&e1, sphere::dot(&e1, &b)));
        let nb = sphere::norm(&b);
        if nb < 1e-8 {
            continue;
        }
        return (e1, sphere::scale(&b, 1.0 / nb));
    }
}

/// Result of a Monte Carlo zero-count run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageReport {
    pub sphere_dim: usize,
    pub degrees: Vec<usize>,
    pub trials: usize,
    /// Histogram: zero count ↦ number of trials.
    pub counts: BTreeMap<usize, usize>,
    pub mean: f64,
    pub stderr: f64,
    pub theory: f64,
    pub relative_deviation: f64,
    pub degenerate_resamples: usize,
    pub depth_escalations: usize,
    pub bezout_violations: usize,
    pub max_residual: f64,
    pub seed: u64,
    /// Set for the mixed-degree conjecture, whose `theory` is not a theorem.
    pub experimental: bool,
}

impl AverageReport {
    /// `|mean - theory| ≤ k · stderr`.
    pub fn within_stderr(&self, k: f64) -> bool {
        (self.mean - self.theory).abs() <= k * self.stderr
    }
}

/// Sample mean and standard error (unbiased variance) of `values`.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

struct TrialOutcome {
    count: usize,
    resamples: usize,
    escalated: bool,
    bezout_ok: bool,
    residual: f64,
}

fn solve(
    bases: &[&HarmonicBasis],
    sample: &SubspaceSample,
    config: &SolverConfig,
) -> Result<ZeroFindingResult> {
    if bases[0].sphere_dim() == 1 {
        find_common_zeros_s1(bases[0], sample)
    } else {
        find_common_zeros_s2([bases[0], bases[1]], sample, config)
    }
}

fn run_trial(
    bases: &[&HarmonicBasis],
    config: &SolverConfig,
    seed: u64,
    index: u64,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, index);
    for resamples in 0..MAX_RESAMPLES {
        let sample = sample_subspace(bases, &mut rng);
        let result = match solve(bases, &sample, config) {
            Ok(r) => r,
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        if result.status == ZeroStatus::Degenerate {
            continue;
        }
        return Ok(TrialOutcome {
            count: result.count(),
            resamples,
            escalated: result.status == ZeroStatus::DepthEscalated,
            bezout_ok: verify_bezout(&result)?,
            residual: result.max_residual,
        });
    }
    Err(Error::Degenerate(format!(
        "trial {index}: {MAX_RESAMPLES} consecutive degenerate samples"
    )))
}

fn validate_bases(bases: &[&HarmonicBasis]) -> Result<usize> {
    let n = bases
        .first()
        .ok_or_else(|| Error::InvalidArgument("no bases given".into()))?
        .sphere_dim();
    if bases.len() != n || bases.iter().any(|b| b.sphere_dim() != n) {
        return Err(Error::InvalidArgument(format!(
            "need exactly {n} bases on S^{n}, got {}",
            bases.len()
        )));
    }
    Ok(n)
}

fn run_average(
    bases: &[&HarmonicBasis],
    trials: usize,
    config: &SolverConfig,
    seed: u64,
    theory: f64,
    experimental: bool,
) -> Result<AverageReport> {
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(bases, config, seed, i))
        .collect::<Result<_>>()?;

    let mut counts = BTreeMap::new();
    for o in &outcomes {
        *counts.entry(o.count).or_insert(0) += 1;
    }
    let values: Vec<f64> = outcomes.iter().map(|o| o.count as f64).collect();
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(AverageReport {
        sphere_dim: bases[0].sphere_dim(),
        degrees: bases.iter().map(|b| b.degree()).collect(),
        trials,
        counts,
        mean,
        stderr,
        theory,
        relative_deviation: (mean - theory).abs() / theory,
        degenerate_resamples: outcomes.iter().map(|o| o.resamples).sum(),
        depth_escalations: outcomes.iter().filter(|o| o.escalated).count(),
        bezout_violations: outcomes.iter().filter(|o| !o.bezout_ok).count(),
        max_residual: outcomes.iter().map(|o| o.residual).fold(0.0, f64::max),
        seed,
        experimental,
    })
}

/// Monte Carlo estimate of the mean number of common zeros of a random
/// `n`-dimensional subspace of one eigenspace, against the closed form.
pub fn average_zero_count(
    bases: &[&HarmonicBasis],
    trials: usize,
    config: &SolverConfig,
    seed: u64,
) -> Result<AverageReport> {
    let n = validate_bases(bases)?;
    if bases.iter().any(|b| b.degree() != bases[0].degree()) {
        return Err(Error::InvalidArgument(
            "all rows must share one eigenvalue; use conjecture_mixed_average for mixed degrees"
                .into(),
        ));
    }
    let theory = expected_zero_count(n, bases[0].eigenvalue(), bases[0].manifold_volume())?;
    run_average(bases, trials, config, seed, theory, false)
}

/// Same pipeline with one eigenvalue per row (S² only); the theory value is
/// the conjectured `√(λ_1 λ_2)` and the report is flagged experimental.
pub fn conjecture_mixed_average(
    bases: &[&HarmonicBasis],
    trials: usize,
    config: &SolverConfig,
    seed: u64,
) -> Result<AverageReport> {
    let n = validate_bases(bases)?;
    if n != 2 {
        return Err(Error::InvalidArgument(
            "the mixed-degree experiment runs on S² only".into(),
        ));
    }
    let lambdas: Vec<f64> = bases.iter().map(|b| b.eigenvalue()).collect();
    let theory = conjectured_mixed_count(n, &lambdas, bases[0].manifold_volume())?;
    run_average(bases, trials, config, seed, theory, true)
}

/// Crofton estimate of the length of a nodal set on the unit S².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthReport {
    pub trials: usize,
    /// Mean number of intersections with a random great circle.
    pub mean_count: f64,
    /// `π × mean_count`.
    pub length: f64,
    /// Standard error of `length`.
    pub stderr: f64,
    pub reference_length: Option<f64>,
    pub degenerate_resamples: usize,
    pub seed: u64,
}

fn length_report(counts: Vec<(usize, usize)>, seed: u64) -> LengthReport {
    let values: Vec<f64> = counts.iter().map(|c| c.0 as f64).collect();
    let (mean, stderr) = mean_and_stderr(&values);
    LengthReport {
        trials: values.len(),
        mean_count: mean,
        length: PI * mean,
        stderr: PI * stderr,
        reference_length: None,
        degenerate_resamples: counts.iter().map(|c| c.1).sum(),
        seed,
    }
}

// Intersections of u with one random great circle; redraws circles that lie
// inside the nodal set.
fn crossings<R: Rng + ?Sized>(
    basis: &HarmonicBasis,
    coeffs: &CoefficientVector,
    rng: &mut R,
) -> Result<(usize, usize)> {
    for resamples in 0..MAX_RESAMPLES {
        let (e1, e2) = random_great_circle(rng);
        match restrict_to_great_circle(basis, coeffs, (&e1, &e2)) {
            Ok(r) => return Ok((r.count(), resamples)),
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(
        "every sampled circle lies in the nodal set".into(),
    ))
}

/// Nodal length of `u` on the unit S² from the Crofton formula
/// `E #(Γ ∩ random great circle) = length(Γ) / π`.
pub fn crofton_length(
    basis: &HarmonicBasis,
    coeffs: &CoefficientVector,
    trials: usize,
    seed: u64,
) -> Result<LengthReport> {
    if basis.sphere_dim() != 2 {
        return Err(Error::InvalidArgument(
            "Crofton length runs on S² only".into(),
        ));
    }
    if coeffs.len() != basis.dimension() {
        return Err(Error::InvalidArgument(
            "coefficient length does not match basis".into(),
        ));
    }
    if !(coeffs.norm() > 0.0) {
        return Err(Error::InvalidArgument(
            "the zero function has no nodal set".into(),
        ));
    }
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|i| crossings(basis, coeffs, &mut trial_rng(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(length_report(counts, seed))
}

/// Crofton estimate of the mean nodal length of a random (Gaussian) degree-m
/// eigenfunction: one fresh function and one random circle per trial.
pub fn crofton_random_length(
    basis: &HarmonicBasis,
    trials: usize,
    seed: u64,
) -> Result<LengthReport> {
    if basis.sphere_dim() != 2 {
        return Err(Error::InvalidArgument(
            "Crofton length runs on S² only".into(),
        ));
    }
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let coeffs = CoefficientVector(gaussian_vector(basis.dimension(), &mut rng));
            crossings(basis, &coeffs, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(length_report(counts, seed))
}

/// Colatitudes `θ_k` (ascending) of the nodal circles of the zonal
/// harmonic of degree `m`: `P_m(cos θ_k) = 0`.
pub fn zonal_nodal_colatitudes(m: usize) -> Vec<f64> {
    let (nodes, _) = gauss_legendre(m);
    let mut theta: Vec<f64> = nodes.iter().map(|t| t.acos()).collect();
    theta.sort_by(f64::total_cmp);
    theta
}

/// Total length `Σ 2π sin θ_k` of the nodal circles of the zonal harmonic.
pub fn zonal_nodal_length(m: usize) -> f64 {
    zonal_nodal_colatitudes(m)
        .iter()
        .map(|t| 2.0 * PI * t.sin())
        .sum()
}

/// Largest tilt for which the zonal pair is guaranteed `2m` zeros: a quarter
/// of the smallest gap between consecutive nodal colatitudes. For `m = 1`,
/// with a single nodal circle, the gap to the pole (`π/2`) is used.
pub fn zonal_alpha_max(m: usize) -> f64 {
    let theta = zonal_nodal_colatitudes(m);
    let gap = if theta.len() < 2 {
        PI / 2.0
    } else {
        theta
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    };
    gap / 4.0
}

/// Zeros of the zonal harmonic `v_m` about the north pole together with the
/// zonal harmonic about an axis tilted by `alpha`.
pub fn zonal_pair_demo(m: usize, alpha: f64, config: &SolverConfig) -> Result<ZeroFindingResult> {
    let basis = HarmonicBasis::new(2, m)?;
    if !(alpha >= 0.0) || alpha >= zonal_alpha_max(m) {
        return Err(Error::InvalidArgument(format!(
            "tilt must lie in [0, {:.6}) for degree {m}, got {alpha}",
            zonal_alpha_max(m)
        )));
    }
    let bound = crate::zerofinder::bezout_bound(&[m, m]);
    let pole = SpherePoint::north_pole();
    let tilted = SpherePoint::from_spherical(alpha, 0.0);
    let v = basis.zonal(&pole)?;
    let w = basis.zonal(&tilted)?;
    let rows = vec![v.0, w.0];
    let degenerate = ZeroFindingResult {
        zeros: Vec::new(),
        status: ZeroStatus::Degenerate,
        max_residual: 0.0,
        bezout_bound: bound,
        depth: 0,
    };
    if crate::zerofinder::singular_value_ratio(&rows, &[m, m]) <= RANK_TOLERANCE {
        // The two axes coincide: identical nodal circles.
        return Ok(degenerate);
    }
    let sample = SubspaceSample::new(rows, vec![m, m])?;
    find_common_zeros_s2([&basis, &basis], &sample, config)
}
