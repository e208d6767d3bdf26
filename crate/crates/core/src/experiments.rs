//! Monte Carlo strong-error studies against a fine coupled reference.
//!
//! For every sample, one fine noise realization on `N_ref` modes and
//! `M_ref = N_ref` steps drives the reference path and, through exact
//! aggregation and truncation, every coarse path of the study. All paths of
//! a sample advance in lockstep over the fine steps, so each fine variate is
//! generated once and memory stays `O(N_ref)`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::ModelParams;
use crate::noise::{CoarseAggregator, FineIncrements, NoiseGrid, NoiseStream, KEY_INDEX_LIMIT};
use crate::spectral::{squared_distance, SineTransform};
use crate::stepper::{simulate_path_observed, NoiseSource, Stepper, Taming, BLOWUP_THRESHOLD};
use crate::{Error, Result};

/// Which discretization parameter follows the resolution ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    /// `N = M = r`
    Joint,
    /// `N = r`, `M = M_ref`
    Spatial,
    /// `N = N_ref`, `M = r`
    Temporal,
}

impl StudyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyMode::Joint => "joint",
            StudyMode::Spatial => "spatial",
            StudyMode::Temporal => "temporal",
        }
    }
}

impl core::str::FromStr for StudyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(StudyMode::Joint),
            "spatial" => Ok(StudyMode::Spatial),
            "temporal" => Ok(StudyMode::Temporal),
            _ => Err(Error::InvalidConfig(format!(
                "unknown study mode {s:?} (expected joint, spatial or temporal)"
            ))),
        }
    }
}

/// A strong-error study: resolution ladder, reference and sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: StudyMode,
    /// Ascending; each divides `ref_resolution`.
    pub resolutions: Vec<usize>,
    /// `N_ref = M_ref` of the reference path.
    pub ref_resolution: usize,
    pub samples: u64,
    pub master_seed: u64,
    pub params: ModelParams,
}

impl RunConfig {
    /// Full validation, including `ref_resolution > max(resolutions)`.
    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    /// Like [`validate`](Self::validate) but lets a resolution equal the
    /// reference (the coupled path then reproduces the reference exactly).
    fn check(&self, allow_ref: bool) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.resolutions.is_empty() {
            return bad("resolution list is empty".to_string());
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("resolutions must be strictly ascending: {:?}", self.resolutions));
        }
        if self.ref_resolution == 0 || self.ref_resolution as u64 > KEY_INDEX_LIMIT {
            return bad(format!("reference resolution {} out of range", self.ref_resolution));
        }
        for &r in &self.resolutions {
            if r == 0 {
                return bad("resolutions must be positive".to_string());
            }
            if self.ref_resolution % r != 0 {
                return bad(format!(
                    "resolution {r} does not divide the reference resolution {}",
                    self.ref_resolution
                ));
            }
        }
        let max = *self.resolutions.last().unwrap_or(&0);
        if max > self.ref_resolution || (!allow_ref && max == self.ref_resolution) {
            return bad(format!(
                "reference resolution {} must exceed every resolution (max {max})",
                self.ref_resolution
            ));
        }
        if self.samples == 0 || self.samples > KEY_INDEX_LIMIT {
            return bad(format!("sample count {} out of range", self.samples));
        }
        Ok(())
    }

    /// `(N, M)` of the coupled path at ladder resolution `r`.
    pub fn path_shape(&self, r: usize) -> (usize, usize) {
        match self.mode {
            StudyMode::Joint => (r, r),
            StudyMode::Spatial => (r, self.ref_resolution),
            StudyMode::Temporal => (self.ref_resolution, r),
        }
    }
}

struct CoupledPath {
    resolution: usize,
    stepper: Stepper,
    aggregator: CoarseAggregator,
    coeffs: Vec<f64>,
    step: usize,
}

/// Squared L2 errors `|Y_r(T) - X_ref(T)|^2` of one sample, one per
/// resolution of the ladder.
pub fn sample_squared_errors(config: &RunConfig, sample_index: u64) -> Result<Vec<f64>> {
    config.check(true)?;
    let params = &config.params;
    let horizon = params.horizon();
    let n_ref = config.ref_resolution;
    let grid = NoiseGrid::new(n_ref, n_ref, horizon)?;
    let fine = FineIncrements::new(NoiseStream::new(config.master_seed, sample_index, grid)?);

    let blowup = |resolution| {
        move |e: Error| match e {
            Error::Blowup { step, .. } => Error::StudyBlowup {
                sample: sample_index,
                resolution,
                step,
            },
            other => other,
        }
    };

    let mut reference = Stepper::new(params, n_ref, grid.tau_fine(), Taming::Tamed)?;
    let mut ref_coeffs = params.initial_data().project(n_ref)?.into_coeffs();
    let mut paths = config
        .resolutions
        .iter()
        .map(|&r| {
            let (n, m) = config.path_shape(r);
            Ok(CoupledPath {
                resolution: r,
                stepper: Stepper::new(params, n, horizon / m as f64, Taming::Tamed)?,
                aggregator: CoarseAggregator::new(n, n_ref / m, grid.tau_fine())?,
                coeffs: params.initial_data().project(n)?.into_coeffs(),
                step: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut increments = vec![0.0; n_ref];
    for k in 0..n_ref {
        fine.fill(k, &mut increments)?;
        reference
            .advance(&mut ref_coeffs, &increments, k)
            .map_err(blowup(n_ref))?;
        for path in &mut paths {
            let n = path.coeffs.len();
            if let Some(coarse) = path.aggregator.push(&increments[..n]) {
                path.stepper
                    .advance(&mut path.coeffs, coarse, path.step)
                    .map_err(blowup(path.resolution))?;
                path.step += 1;
            }
        }
    }
    Ok(paths
        .iter()
        .map(|p| squared_distance(&p.coeffs, &ref_coeffs))
        .collect())
}

/// Error estimate at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub resolution: usize,
    /// `sqrt(mean |Y_r(T) - X_ref(T)|^2)`
    pub rms_error: f64,
    /// Delta-method standard error of `rms_error`.
    pub mc_std_error: f64,
}

/// Least-squares fit of `log2(error)` against `log2(1 / resolution)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit, in log2 units.
    pub residual: f64,
}

/// Result of a strong-error study.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub samples: u64,
    /// `None` when fewer than two rows carry a positive error.
    pub fit: Option<SlopeFit>,
}

impl ErrorReport {
    /// Reduces per-sample squared errors (in sample order) into a report.
    pub fn from_squared_errors(resolutions: &[usize], per_sample: &[Vec<f64>]) -> Result<Self> {
        let s = per_sample.len();
        if s == 0 {
            return Err(Error::invalid_argument("no samples to reduce"));
        }
        if per_sample.iter().any(|v| v.len() != resolutions.len()) {
            return Err(Error::invalid_argument("sample rows do not match the resolution ladder"));
        }
        let rows: Vec<ErrorRow> = resolutions
            .iter()
            .enumerate()
            .map(|(j, &resolution)| {
                let mean = per_sample.iter().map(|v| v[j]).sum::<f64>() / s as f64;
                let var = if s > 1 {
                    per_sample.iter().map(|v| (v[j] - mean) * (v[j] - mean)).sum::<f64>() / (s - 1) as f64
                } else {
                    0.0
                };
                let rms_error = libm::sqrt(mean);
                let se_mean = libm::sqrt(var / s as f64);
                let mc_std_error = if rms_error > 0.0 { se_mean / (2.0 * rms_error) } else { 0.0 };
                ErrorRow {
                    resolution,
                    rms_error,
                    mc_std_error,
                }
            })
            .collect();
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.rms_error > 0.0)
            .map(|r| (r.resolution as f64, r.rms_error))
            .collect();
        let fit = if points.len() >= 2 { fit_slope(&points).ok() } else { None };
        Ok(Self {
            rows,
            samples: s as u64,
            fit,
        })
    }

    pub fn fitted_slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Ordinary least squares of `log2(error)` on `log2(1 / resolution)`; the
/// slope is the observed convergence order.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::invalid_argument("slope fit needs at least two points"));
    }
    if let Some(p) = points.iter().find(|(r, e)| !(*r > 0.0) || !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid_argument(format!(
            "slope fit needs positive resolutions and errors, got {p:?}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(r, _)| -libm::log2(*r)).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| libm::log2(*e)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid_argument("slope fit needs two distinct resolutions"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: libm::sqrt(ss / n),
    })
}

/// Single-threaded study; samples are reduced in ascending index order.
pub fn strong_error_study(config: &RunConfig) -> Result<ErrorReport> {
    config.check(true)?;
    let per_sample = (0..config.samples)
        .map(|s| sample_squared_errors(config, s))
        .collect::<Result<Vec<_>>>()?;
    ErrorReport::from_squared_errors(&config.resolutions, &per_sample)
}

/// Paths whose norms [`moment_diagnostics`] tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub n_modes: usize,
    pub n_steps: usize,
    pub samples: u64,
    pub master_seed: u64,
    pub params: ModelParams,
    /// `false` runs deterministic paths.
    pub noise: bool,
    pub taming: Taming,
}

/// Max, mean and 99th percentile of a recorded quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub max: f64,
    pub mean: f64,
    pub p99: f64,
}

impl Moments {
    fn of(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.sort_by(f64::total_cmp);
        let rank = libm::ceil(0.99 * values.len() as f64) as usize;
        Self {
            max: values[values.len() - 1],
            mean,
            p99: values[rank.max(1) - 1],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.max.is_finite() && self.mean.is_finite() && self.p99.is_finite()
    }
}

/// Norms of `Y_m` over all samples and steps (initial state included).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub paths: u64,
    pub blowups: u64,
    /// Grid estimate of the sup norm.
    pub sup_norm: Moments,
    pub l2_norm: Moments,
    /// Largest L2 norm of the drift applied in any step.
    pub max_drift_norm: f64,
    pub tau: f64,
    pub all_finite: bool,
}

impl MomentSummary {
    /// No blowups, every statistic finite and the sup-norm percentile below
    /// the blowup threshold.
    pub fn healthy(&self) -> bool {
        self.blowups == 0 && self.all_finite && self.sup_norm.p99 < BLOWUP_THRESHOLD
    }
}

/// Runs `samples` independent paths and summarizes their norms. Blown-up
/// paths are counted rather than reported as errors; values recorded before
/// the blowup are kept.
pub fn moment_diagnostics(config: &DiagnosticsConfig) -> Result<MomentSummary> {
    let n = config.n_modes;
    let horizon = config.params.horizon();
    if n == 0 || config.n_steps == 0 {
        return Err(Error::InvalidConfig("diagnostics need >= 1 mode and >= 1 step".to_string()));
    }
    let sup_grid = 8 * n - 1;
    let mut transform = SineTransform::new(sup_grid)?;
    let mut values = vec![0.0; sup_grid];
    let mut sup = Vec::new();
    let mut l2 = Vec::new();
    let mut max_drift_norm = 0.0f64;
    let mut blowups = 0;

    for s in 0..config.samples {
        let noise = if config.noise {
            NoiseSource::fresh(config.master_seed, s, n, config.n_steps, horizon)?
        } else {
            NoiseSource::Zero
        };
        let run = simulate_path_observed(&config.params, n, config.n_steps, &noise, config.taming, |_, c, d| {
            l2.push(crate::spectral::euclidean_norm(c));
            // c has n <= sup_grid coefficients, so this cannot fail
            let _ = transform.synthesize_into(c, &mut values);
            sup.push(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            max_drift_norm = max_drift_norm.max(d);
        });
        match run {
            Ok(_) => {}
            Err(Error::Blowup { .. }) => blowups += 1,
            Err(e) => return Err(e),
        }
    }
    let sup_norm = Moments::of(sup);
    let l2_norm = Moments::of(l2);
    Ok(MomentSummary {
        paths: config.samples,
        blowups,
        all_finite: sup_norm.is_finite() && l2_norm.is_finite() && max_drift_norm.is_finite(),
        sup_norm,
        l2_norm,
        max_drift_norm,
        tau: horizon / config.n_steps as f64,
    })
}
