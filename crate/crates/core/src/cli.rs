//! Command-line driver and report records.
//!
//! Every subcommand writes exactly one report, as a JSON object or as a CSV
//! header plus one row, to stdout or to `--out`. Reports contain no
//! timestamps or paths, so one configuration always produces the same bytes.
//!
//! CSV columns, in order: `command, version, sphere, degrees, trials, seed,
//! depth, newton_tol, max_iter, dedup_radius, quad_depth, alpha, source,
//! points, formula_id, theory, mean, stderr, estimate_trials,
//! degenerate_resamples, depth_escalations, max_residual, status,
//! experimental, zero_count, checks_failed`. `degrees` is `;`-separated;
//! absent optional values are empty.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 violated
//! invariant (named on stderr), 4 degenerate zero set outside Monte Carlo.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embedding::{self, DEFAULT_QUADRATURE_DEPTH};
use crate::error::Error;
use crate::harmonics::{HarmonicBasis, MAX_DEGREE};
use crate::integralgeom::{self, AverageReport, LengthReport};
use crate::sphere::SpherePoint;
use crate::zerofinder::{self, SolverConfig, ZeroFindingResult, ZeroStatus};

pub const DEFAULT_SEED: u64 = 1729;
pub const MAX_TRIALS: usize = 1_000_000;
pub const MAX_DEPTH: usize = 9;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative tolerance of the Unsöld check.
pub const UNSOLD_TOLERANCE: f64 = 1e-8;
/// Relative tolerance of the gradient-sum and dilation checks.
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;
/// Relative tolerance of the finite-difference Laplacian check.
pub const LAPLACIAN_TOLERANCE: f64 = 1e-4;
/// Relative tolerance of quadrature image volume against the closed form.
pub const VOLUME_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Parser)]
#[command(
    name = "eigenzeros",
    version,
    about = "Common zeros of Laplace eigenfunctions on spheres"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unsöld, gradient-sum, orthonormality and Laplacian checks.
    Invariants {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Common zeros of one random subspace.
    Count {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo mean of the number of common zeros.
    Average {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 400)]
        trials: usize,
    },
    /// Mixed-degree experiment on S².
    Conjecture {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
        #[arg(long, default_value_t = 400)]
        trials: usize,
    },
    /// Zeros of two zonal harmonics with tilted axes.
    Zonal {
        #[command(flatten)]
        common: CommonArgs,
        /// Tilt between the axes; defaults to half the admissible maximum.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Radius, dilation, covering degree and image volume of the embedding.
    Embedding {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Crofton estimate of a nodal length on S².
    CroftonLength {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Source::Zonal)]
        source: Source,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 2)]
    pub sphere: usize,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Icosphere depth of the zero search; defaults to a degree-based rule.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 30)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub dedup_radius: f64,
    #[arg(long, default_value_t = DEFAULT_QUADRATURE_DEPTH)]
    pub quad_depth: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Function whose nodal length is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Zonal harmonic of the given degree about the north pole.
    Zonal,
    /// A fresh Gaussian eigenfunction per trial.
    Random,
    /// The degree-1 function `z`, whose nodal set is the equator.
    Equator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Invariants,
    Count,
    Average,
    Conjecture,
    Zonal,
    Embedding,
    CroftonLength,
}

/// Validated run configuration; echoed verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub sphere: usize,
    pub degrees: Vec<usize>,
    pub trials: Option<usize>,
    pub seed: u64,
    pub depth: Option<usize>,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
    pub quad_depth: usize,
    pub alpha: Option<f64>,
    pub source: Option<Source>,
    pub points: Option<usize>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[allow(non_camel_case_types)]
pub enum FormulaId {
    THM_1_1,
    THM_2_1,
    THM_2_3,
    THM_2_4,
    THM_4_1,
    SEC3_CROFTON,
    SEC5_CONJECTURE,
    SEC5_ZONAL,
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theory {
    pub value: f64,
    pub formula_id: FormulaId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub degenerate_resamples: usize,
    pub depth_escalations: usize,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<ZeroStatus>,
}

/// One named comparison. Only enforced checks affect the exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub formula_id: FormulaId,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub enforced: bool,
}

impl Check {
    fn at_most(name: &str, formula_id: FormulaId, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            formula_id,
            value,
            tolerance,
            pass: value <= tolerance,
            enforced: true,
        }
    }

    fn advisory(mut self) -> Self {
        self.enforced = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: CommandKind,
    pub version: String,
    pub config: RunConfig,
    pub theory: Theory,
    pub estimate: Estimate,
    pub diagnostics: Diagnostics,
    pub experimental: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<BTreeMap<String, usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl Report {
    fn new(
        config: &RunConfig,
        theory: Theory,
        estimate: Estimate,
        diagnostics: Diagnostics,
    ) -> Self {
        Self {
            command: config.command,
            version: VERSION.into(),
            config: config.clone(),
            theory,
            estimate,
            diagnostics,
            experimental: false,
            zeros: None,
            histogram: None,
            checks: Vec::new(),
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.enforced && !c.pass)
    }

    /// Exit code implied by the report contents.
    pub fn exit_code(&self) -> i32 {
        if self.failed_checks().next().is_some() {
            3
        } else if self.diagnostics.status == Some(ZeroStatus::Degenerate) {
            4
        } else {
            0
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::NotOnSphere { .. }
            | Error::DimensionMismatch { .. } => 2,
            Error::UnexpectedFiber { .. } => 3,
            Error::RankDeficient { .. } | Error::Degenerate(_) => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl RunConfig {
    pub fn from_command(command: Command) -> Result<Self, CliError> {
        let (kind, common, degrees, trials, alpha, source, points) = match command {
            Command::Invariants { common, points } => (
                CommandKind::Invariants,
                common.clone(),
                vec![common.degree],
                None,
                None,
                None,
                Some(points),
            ),
            Command::Count { common } => (
                CommandKind::Count,
                common.clone(),
                vec![common.degree],
                None,
                None,
                None,
                None,
            ),
            Command::Average { common, trials } => (
                CommandKind::Average,
                common.clone(),
                vec![common.degree],
                Some(trials),
                None,
                None,
                None,
            ),
            Command::Conjecture {
                common,
                degrees,
                trials,
            } => (
                CommandKind::Conjecture,
                common,
                degrees,
                Some(trials),
                None,
                None,
                None,
            ),
            Command::Zonal { common, alpha } => (
                CommandKind::Zonal,
                common.clone(),
                vec![common.degree],
                None,
                alpha,
                None,
                None,
            ),
            Command::Embedding { common, points } => (
                CommandKind::Embedding,
                common.clone(),
                vec![common.degree],
                None,
                None,
                None,
                Some(points),
            ),
            Command::CroftonLength {
                common,
                source,
                trials,
            } => (
                CommandKind::CroftonLength,
                common.clone(),
                vec![common.degree],
                Some(trials),
                None,
                Some(source),
                None,
            ),
        };
        let config = Self {
            command: kind,
            sphere: common.sphere,
            degrees,
            trials,
            seed: common.seed,
            depth: common.depth,
            newton_tol: common.newton_tol,
            max_iter: common.max_iter,
            dedup_radius: common.dedup_radius,
            quad_depth: common.quad_depth,
            alpha,
            source,
            points,
            format: common.format,
            out: common.out,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(1..=2).contains(&self.sphere) {
            return Err(CliError::config(format!(
                "--sphere must be 1 or 2, got {}",
                self.sphere
            )));
        }
        let rows = if self.command == CommandKind::Conjecture {
            2
        } else {
            1
        };
        if self.degrees.len() != rows {
            return Err(CliError::config(format!(
                "expected {rows} degree(s), got {}",
                self.degrees.len()
            )));
        }
        for &m in &self.degrees {
            if !(1..=MAX_DEGREE).contains(&m) {
                return Err(CliError::config(format!(
                    "degree must lie in 1..={MAX_DEGREE}, got {m}"
                )));
            }
        }
        if let Some(t) = self.trials {
            if !(1..=MAX_TRIALS).contains(&t) {
                return Err(CliError::config(format!(
                    "--trials must lie in 1..={MAX_TRIALS}, got {t}"
                )));
            }
        }
        if let Some(p) = self.points {
            if !(1..=MAX_TRIALS).contains(&p) {
                return Err(CliError::config(format!(
                    "--points must lie in 1..={MAX_TRIALS}, got {p}"
                )));
            }
        }
        if self.depth.is_some_and(|d| d > MAX_DEPTH) {
            return Err(CliError::config(format!(
                "--depth must be at most {MAX_DEPTH}"
            )));
        }
        if self.quad_depth > MAX_DEPTH {
            return Err(CliError::config(format!(
                "--quad-depth must be at most {MAX_DEPTH}"
            )));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1e-3) {
            return Err(CliError::config("--newton-tol must lie in (0, 1e-3)"));
        }
        if self.max_iter < 1 {
            return Err(CliError::config("--max-iter must be at least 1"));
        }
        if !(self.dedup_radius > 0.0 && self.dedup_radius < 1e-2) {
            return Err(CliError::config("--dedup-radius must lie in (0, 1e-2)"));
        }
        let s2_only = matches!(
            self.command,
            CommandKind::Conjecture | CommandKind::Zonal | CommandKind::CroftonLength
        );
        if s2_only && self.sphere != 2 {
            return Err(CliError::config("this subcommand runs on S² only"));
        }
        if self.source == Some(Source::Equator) && self.degrees != [1] {
            return Err(CliError::config("--source equator requires --degree 1"));
        }
        if let Some(a) = self.alpha {
            if !a.is_finite() {
                return Err(CliError::config("--alpha must be finite"));
            }
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            depth: self.depth,
            newton_tol: self.newton_tol,
            max_iterations: self.max_iter,
            dedup_radius: self.dedup_radius,
        }
    }
}

/// Runs the configured experiment and builds its report.
pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    match config.command {
        CommandKind::Invariants => invariants(config),
        CommandKind::Count => count(config),
        CommandKind::Average => average(config),
        CommandKind::Conjecture => conjecture(config),
        CommandKind::Zonal => zonal(config),
        CommandKind::Embedding => embedding_report(config),
        CommandKind::CroftonLength => crofton(config),
    }
}

fn basis(config: &RunConfig, degree: usize) -> Result<HarmonicBasis, CliError> {
    Ok(HarmonicBasis::new(config.sphere, degree)?)
}

fn invariants(config: &RunConfig) -> Result<Report, CliError> {
    let b = basis(config, config.degrees[0])?;
    let points = config.points.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r2 = b.radius_squared();
    let g2 = b.gradient_sum();
    let mut sums = Vec::with_capacity(points);
    let (mut unsold, mut gradient, mut laplacian): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..points {
        let x = SpherePoint::random(config.sphere, &mut rng);
        let vals = b.eval(&x)?;
        let s: f64 = vals.iter().map(|v| v * v).sum();
        let g: f64 = b
            .eval_gradient(&x)?
            .iter()
            .map(|d| d.iter().map(|c| c * c).sum::<f64>())
            .sum();
        sums.push(s);
        unsold = unsold.max((s - r2).abs() / r2);
        gradient = gradient.max((g - g2).abs() / g2);
        // Each basis function, scaled by its eigenvalue times its sup bound.
        for i in 0..b.dimension() {
            let mut e = vec![0.0; b.dimension()];
            e[i] = 1.0;
            let res = b.laplacian_residual(&crate::CoefficientVector(e), &x)?;
            laplacian = laplacian.max(res.abs() / (b.eigenvalue() * r2.sqrt()));
        }
    }
    let (mean, stderr) = integralgeom::mean_and_stderr(&sums);
    let mut report = Report::new(
        config,
        Theory {
            value: r2,
            formula_id: FormulaId::THM_2_3,
        },
        Estimate {
            mean,
            stderr,
            trials: points,
        },
        Diagnostics {
            max_residual: unsold,
            ..Diagnostics::default()
        },
    );
    report.checks = vec![
        Check::at_most(
            "unsold_relative_residual",
            FormulaId::THM_2_3,
            unsold,
            UNSOLD_TOLERANCE,
        ),
        Check::at_most(
            "gradient_sum_relative_residual",
            FormulaId::THM_2_1,
            gradient,
            GRADIENT_TOLERANCE,
        ),
        Check::at_most(
            "orthonormality_residual",
            FormulaId::THM_2_3,
            b.orthonormality_residual(),
            ORTHONORMALITY_TOLERANCE,
        ),
        Check::at_most(
            "laplacian_relative_residual",
            FormulaId::THM_2_1,
            laplacian,
            LAPLACIAN_TOLERANCE,
        ),
    ];
    Ok(report)
}

fn zeros_of(result: &ZeroFindingResult) -> Vec<Vec<f64>> {
    result.zeros.iter().map(|z| z.coords().to_vec()).collect()
}

fn zero_report(config: &RunConfig, result: &ZeroFindingResult, theory: Theory) -> Report {
    let mut report = Report::new(
        config,
        theory,
        Estimate {
            mean: result.count() as f64,
            stderr: 0.0,
            trials: 1,
        },
        Diagnostics {
            degenerate_resamples: 0,
            depth_escalations: usize::from(result.status == ZeroStatus::DepthEscalated),
            max_residual: result.max_residual,
            status: Some(result.status),
        },
    );
    report.zeros = Some(zeros_of(result));
    if result.status != ZeroStatus::Degenerate {
        report.checks.push(Check::at_most(
            "bezout_bound",
            FormulaId::THM_4_1,
            result.count() as f64,
            result.bezout_bound as f64,
        ));
    }
    report
}

fn count(config: &RunConfig) -> Result<Report, CliError> {
    let m = config.degrees[0];
    let b = basis(config, m)?;
    let bases = vec![&b; config.sphere];
    let mut rng = integralgeom::trial_rng(config.seed, 0);
    let sample = integralgeom::sample_subspace(&bases, &mut rng);
    let result = if config.sphere == 1 {
        zerofinder::find_common_zeros_s1(&b, &sample)?
    } else {
        zerofinder::find_common_zeros_s2([&b, &b], &sample, &config.solver())?
    };
    let theory =
        integralgeom::expected_zero_count(config.sphere, b.eigenvalue(), b.manifold_volume())?;
    Ok(zero_report(
        config,
        &result,
        Theory {
            value: theory,
            formula_id: FormulaId::THM_1_1,
        },
    ))
}

fn average_report(config: &RunConfig, avg: &AverageReport, formula_id: FormulaId) -> Report {
    let mut report = Report::new(
        config,
        Theory {
            value: avg.theory,
            formula_id,
        },
        Estimate {
            mean: avg.mean,
            stderr: avg.stderr,
            trials: avg.trials,
        },
        Diagnostics {
            degenerate_resamples: avg.degenerate_resamples,
            depth_escalations: avg.depth_escalations,
            max_residual: avg.max_residual,
            status: None,
        },
    );
    report.experimental = avg.experimental;
    report.histogram = Some(
        avg.counts
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
    );
    report.checks.push(Check::at_most(
        "bezout_violations",
        FormulaId::THM_4_1,
        avg.bezout_violations as f64,
        0.0,
    ));
    report.checks.push(Check::at_most(
        "max_relative_residual",
        FormulaId::THM_1_1,
        avg.max_residual,
        zerofinder::RESIDUAL_TOLERANCE,
    ));
    report
}

fn average(config: &RunConfig) -> Result<Report, CliError> {
    let b = basis(config, config.degrees[0])?;
    let bases = vec![&b; config.sphere];
    let avg = integralgeom::average_zero_count(
        &bases,
        config.trials.unwrap_or(400),
        &config.solver(),
        config.seed,
    )?;
    Ok(average_report(config, &avg, FormulaId::THM_1_1))
}

fn conjecture(config: &RunConfig) -> Result<Report, CliError> {
    let b1 = basis(config, config.degrees[0])?;
    let b2 = basis(config, config.degrees[1])?;
    let avg = integralgeom::conjecture_mixed_average(
        &[&b1, &b2],
        config.trials.unwrap_or(400),
        &config.solver(),
        config.seed,
    )?;
    let mut report = average_report(config, &avg, FormulaId::SEC5_CONJECTURE);
    let deviation = (avg.mean - avg.theory).abs() / avg.stderr.max(f64::MIN_POSITIVE);
    report.checks.push(
        Check::at_most(
            "conjecture_deviation_in_stderr",
            FormulaId::SEC5_CONJECTURE,
            deviation,
            4.0,
        )
        .advisory(),
    );
    Ok(report)
}

fn zonal(config: &RunConfig) -> Result<Report, CliError> {
    let m = config.degrees[0];
    let alpha = config
        .alpha
        .unwrap_or_else(|| integralgeom::zonal_alpha_max(m) / 2.0);
    let result = integralgeom::zonal_pair_demo(m, alpha, &config.solver())?;
    let mut report = zero_report(
        config,
        &result,
        Theory {
            value: 2.0 * m as f64,
            formula_id: FormulaId::SEC5_ZONAL,
        },
    );
    if result.status != ZeroStatus::Degenerate {
        report.checks.push(Check::at_most(
            "zonal_count_deficit",
            FormulaId::SEC5_ZONAL,
            (2 * m) as f64 - result.count() as f64,
            0.0,
        ));
    }
    Ok(report)
}

fn embedding_report(config: &RunConfig) -> Result<Report, CliError> {
    let b = basis(config, config.degrees[0])?;
    let e = embedding::image_volume(&b, config.quad_depth)?;
    let points = config.points.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dilation: f64 = 0.0;
    for _ in 0..points {
        let x = SpherePoint::random(config.sphere, &mut rng);
        let c = embedding::dilation_check(&b, &x)?;
        dilation = dilation.max(c.residual / c.dilation);
    }
    let radius = embedding::radius_check(&b, points, &mut rng)? / b.radius_squared();
    let volume_error =
        (e.numeric_image_volume - e.predicted_image_volume).abs() / e.predicted_image_volume;
    let expected_degree = if config.sphere == 1 {
        config.degrees[0]
    } else if config.degrees[0].is_multiple_of(2) {
        2
    } else {
        1
    };
    let mut report = Report::new(
        config,
        Theory {
            value: e.predicted_image_volume,
            formula_id: FormulaId::THM_2_4,
        },
        Estimate {
            mean: e.numeric_image_volume,
            stderr: 0.0,
            trials: 1,
        },
        Diagnostics {
            max_residual: dilation.max(e.max_gram_residual),
            ..Diagnostics::default()
        },
    );
    report.checks = vec![
        Check::at_most(
            "radius_relative_residual",
            FormulaId::THM_2_3,
            radius,
            UNSOLD_TOLERANCE,
        ),
        Check::at_most(
            "dilation_gram_relative_residual",
            FormulaId::THM_2_4,
            dilation.max(e.max_gram_residual),
            GRADIENT_TOLERANCE,
        ),
        Check::at_most(
            "image_volume_relative_error",
            FormulaId::THM_2_4,
            volume_error,
            VOLUME_TOLERANCE,
        ),
        Check::at_most(
            "covering_degree_mismatch",
            FormulaId::THM_2_4,
            (e.covering_degree as f64 - expected_degree as f64).abs(),
            0.0,
        ),
    ];
    Ok(report)
}

fn length_report(config: &RunConfig, l: &LengthReport, reference: f64) -> Report {
    let mut report = Report::new(
        config,
        Theory {
            value: reference,
            formula_id: FormulaId::SEC3_CROFTON,
        },
        Estimate {
            mean: l.length,
            stderr: l.stderr,
            trials: l.trials,
        },
        Diagnostics {
            degenerate_resamples: l.degenerate_resamples,
            ..Diagnostics::default()
        },
    );
    let deviation = (l.length - reference).abs() / l.stderr.max(f64::MIN_POSITIVE);
    report.checks.push(
        Check::at_most(
            "length_deviation_in_stderr",
            FormulaId::SEC3_CROFTON,
            deviation,
            4.0,
        )
        .advisory(),
    );
    report
}

fn crofton(config: &RunConfig) -> Result<Report, CliError> {
    let m = config.degrees[0];
    let b = basis(config, m)?;
    let trials = config.trials.unwrap_or(2000);
    let pole = SpherePoint::north_pole();
    let (l, reference) = match config.source.unwrap_or(Source::Zonal) {
        Source::Zonal | Source::Equator => {
            let u = b.zonal(&pole)?;
            (
                integralgeom::crofton_length(&b, &u, trials, config.seed)?,
                integralgeom::zonal_nodal_length(m),
            )
        }
        Source::Random => (
            integralgeom::crofton_random_length(&b, trials, config.seed)?,
            PI * (2.0 * b.eigenvalue()).sqrt(),
        ),
    };
    Ok(length_report(config, &l, reference))
}

const CSV_HEADER: [&str; 26] = [
    "command",
    "version",
    "sphere",
    "degrees",
    "trials",
    "seed",
    "depth",
    "newton_tol",
    "max_iter",
    "dedup_radius",
    "quad_depth",
    "alpha",
    "source",
    "points",
    "formula_id",
    "theory",
    "mean",
    "stderr",
    "estimate_trials",
    "degenerate_resamples",
    "depth_escalations",
    "max_residual",
    "status",
    "experimental",
    "zero_count",
    "checks_failed",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn json_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Serializes a report in the requested format.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report is serializable");
            s.push('\n');
            s
        }
        Format::Csv => {
            let c = &report.config;
            let degrees: Vec<String> = c.degrees.iter().map(|d| d.to_string()).collect();
            let failed: Vec<&str> = report.failed_checks().map(|c| c.name.as_str()).collect();
            let row = [
                json_name(&report.command),
                report.version.clone(),
                c.sphere.to_string(),
                degrees.join(";"),
                opt(c.trials),
                c.seed.to_string(),
                opt(c.depth),
                c.newton_tol.to_string(),
                c.max_iter.to_string(),
                c.dedup_radius.to_string(),
                c.quad_depth.to_string(),
                opt(c.alpha),
                c.source.map(|s| json_name(&s)).unwrap_or_default(),
                opt(c.points),
                report.theory.formula_id.to_string(),
                report.theory.value.to_string(),
                report.estimate.mean.to_string(),
                report.estimate.stderr.to_string(),
                report.estimate.trials.to_string(),
                report.diagnostics.degenerate_resamples.to_string(),
                report.diagnostics.depth_escalations.to_string(),
                report.diagnostics.max_residual.to_string(),
                report
                    .diagnostics
                    .status
                    .map(|s| json_name(&s))
                    .unwrap_or_default(),
                report.experimental.to_string(),
                opt(report.zeros.as_ref().map(Vec::len)),
                failed.join(";"),
            ];
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            w.write_record(&row).expect("in-memory write");
            String::from_utf8(w.into_inner().expect("in-memory flush"))
                .expect("csv output is utf-8")
        }
    }
}

/// Executes `config`, writes its report and returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    let report = match execute(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let text = render(&report, config.format);
    let written = match &config.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return 1;
    }
    for c in report.failed_checks() {
        eprintln!(
            "invariant violated: {} [{}] value {:e} exceeds tolerance {:e}",
            c.name, c.formula_id, c.value, c.tolerance
        );
    }
    if report.diagnostics.status == Some(ZeroStatus::Degenerate) {
        eprintln!("degenerate zero set: the subspace has a common zero curve");
    }
    report.exit_code()
}

/// Parses `args` (including the program name) and runs.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_command(cli.command) {
        Ok(config) => run(&config),
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
