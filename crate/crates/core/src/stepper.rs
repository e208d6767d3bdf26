//! The nonlinearity-tamed accelerated exponential Euler scheme
//!
//! ```text
//! Y_{m+1} = E_N(tau) Y_m
//!         + A_N^{-1} (I - E_N(tau)) F_N(Y_m) / (1 + tau |F_N(Y_m)|)
//!         + int_{t_m}^{t_{m+1}} E_N(t_{m+1} - s) P_N dW(s),     Y_0 = P_N X_0.
//! ```
//!
//! Everything but the drift is diagonal in the sine basis, so mode `i`
//! advances as `c_i' = exp(-lambda_i tau) c_i + phi_i(tau) d_i + Lambda_i`,
//! with `d` the tamed drift and `Lambda_i` the exact convolution increment.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{DriftEvaluator, ModelParams};
use crate::noise::{CoarseAggregator, FineIncrements, NoiseGrid, NoiseStream};
use crate::spectral::{check_step, lambda, phi, SpectralField};
use crate::{Error, Result};

/// Coefficient magnitude beyond which a path is declared blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Whether the drift is divided by `1 + tau |F_N|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Taming {
    #[default]
    Tamed,
    /// Plain accelerated exponential Euler (denominator forced to 1). Only
    /// meant for divergence experiments.
    Untamed,
}

/// `Y_m` together with its step index and step size.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub field: SpectralField,
    pub step_index: usize,
    pub tau: f64,
}

/// Reusable single-step kernel for a fixed mode count and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    tau: f64,
    decay: Vec<f64>,
    phi: Vec<f64>,
    drift: DriftEvaluator,
    taming: Taming,
}

impl Stepper {
    pub fn new(params: &ModelParams, n_modes: usize, tau: f64, taming: Taming) -> Result<Self> {
        check_step(tau)?;
        let drift = DriftEvaluator::new(params, n_modes)?;
        let decay = (1..=n_modes).map(|i| libm::exp(-lambda(i) * tau)).collect();
        let phi = (1..=n_modes).map(|i| phi(lambda(i), tau)).collect();
        Ok(Self {
            tau,
            decay,
            phi,
            drift,
            taming,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.decay.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Advances `coeffs` in place by one step, `step_index` being the index
    /// of the state on entry (only used for diagnostics). Returns the L2 norm
    /// of the drift actually applied, which is at most `1 / tau` when tamed.
    pub fn advance(&mut self, coeffs: &mut [f64], noise: &[f64], step_index: usize) -> Result<f64> {
        let n = self.n_modes();
        if coeffs.len() != n || noise.len() != n {
            return Err(Error::invalid_argument(format!(
                "step on {n} modes got {} coefficients and {} noise increments",
                coeffs.len(),
                noise.len()
            )));
        }
        let at_step = |e: Error| match e {
            Error::Blowup { reason, .. } => Error::Blowup {
                step: step_index,
                reason,
            },
            other => other,
        };
        let (drift, norm) = match self.taming {
            Taming::Tamed => self.drift.tamed(coeffs, self.tau).map_err(at_step)?,
            Taming::Untamed => {
                let d = self.drift.galerkin(coeffs).map_err(at_step)?;
                let norm = crate::spectral::euclidean_norm(d);
                (d, norm)
            }
        };

        if cfg!(debug_assertions) && self.taming == Taming::Tamed {
            let weighted: f64 = drift
                .iter()
                .zip(&self.phi)
                .map(|(d, p)| (d * p) * (d * p))
                .sum();
            debug_assert!(libm::sqrt(weighted) <= self.phi[0] / self.tau * (1.0 + 1e-12));
        }

        let mut worst = 0.0f64;
        for (((c, &e), &p), (&d, &w)) in coeffs
            .iter_mut()
            .zip(&self.decay)
            .zip(&self.phi)
            .zip(drift.iter().zip(noise))
        {
            *c = e * *c + p * d + w;
            worst = worst.max(c.abs());
        }
        if !(worst <= BLOWUP_THRESHOLD) {
            return Err(Error::Blowup {
                step: step_index + 1,
                reason: format!("coefficient magnitude {worst:e} exceeds {BLOWUP_THRESHOLD:e}"),
            });
        }
        Ok(norm)
    }
}

/// One tamed step from `state` with the given convolution increments.
pub fn step(state: &SchemeState, params: &ModelParams, noise_increments: &[f64]) -> Result<SchemeState> {
    let mut stepper = Stepper::new(params, state.field.n_modes(), state.tau, Taming::Tamed)?;
    let mut coeffs = state.field.coeffs().to_vec();
    stepper.advance(&mut coeffs, noise_increments, state.step_index)?;
    Ok(SchemeState {
        field: SpectralField::from_raw(coeffs),
        step_index: state.step_index + 1,
        tau: state.tau,
    })
}

/// Where a path takes its convolution increments from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSource {
    /// Deterministic run.
    Zero,
    /// Increments aggregated from the fine noise of one Monte Carlo sample.
    /// The path's step count must divide the grid's and its mode count may
    /// not exceed the grid's; extra fine modes are dropped (`P_N`).
    Coupled(NoiseStream),
}

impl NoiseSource {
    /// Noise generated directly at the path's own resolution.
    pub fn fresh(master_seed: u64, sample_index: u64, n_modes: usize, n_steps: usize, horizon: f64) -> Result<Self> {
        let grid = NoiseGrid::new(n_modes, n_steps, horizon)?;
        Ok(Self::Coupled(NoiseStream::new(master_seed, sample_index, grid)?))
    }
}

/// Per-step convolution increments for a path of `n_modes` x `n_steps`.
#[derive(Debug)]
pub(crate) struct PathNoise {
    source: Option<(FineIncrements, CoarseAggregator, Vec<f64>)>,
    out: Vec<f64>,
    ratio: usize,
}

impl PathNoise {
    pub(crate) fn new(source: &NoiseSource, n_modes: usize, n_steps: usize, horizon: f64) -> Result<Self> {
        let out = vec![0.0; n_modes];
        let stream = match source {
            NoiseSource::Zero => {
                return Ok(Self {
                    source: None,
                    out,
                    ratio: 1,
                })
            }
            NoiseSource::Coupled(stream) => stream,
        };
        let grid = stream.grid;
        if n_modes > grid.n_modes() || grid.m_fine() % n_steps != 0 {
            return Err(Error::InvalidConfig(format!(
                "a {n_modes}-mode, {n_steps}-step path cannot be coupled to a {}-mode, {}-step noise grid",
                grid.n_modes(),
                grid.m_fine()
            )));
        }
        if libm::fabs(grid.horizon() - horizon) > 1e-12 * horizon {
            return Err(Error::InvalidConfig(format!(
                "noise horizon {} differs from model horizon {horizon}",
                grid.horizon()
            )));
        }
        let ratio = grid.m_fine() / n_steps;
        let aggregator = CoarseAggregator::new(n_modes, ratio, grid.tau_fine())?;
        Ok(Self {
            source: Some((FineIncrements::new(*stream), aggregator, vec![0.0; n_modes])),
            out,
            ratio,
        })
    }

    /// Increments for coarse step `m`.
    pub(crate) fn increments(&mut self, m: usize) -> Result<&[f64]> {
        let Some((fine, aggregator, buf)) = &mut self.source else {
            return Ok(&self.out);
        };
        for k in m * self.ratio..(m + 1) * self.ratio {
            fine.fill(k, buf)?;
            if let Some(coarse) = aggregator.push(buf) {
                self.out.copy_from_slice(coarse);
            }
        }
        Ok(&self.out)
    }
}

/// Runs `n_steps` tamed (or untamed) steps from `P_N X_0` over the model
/// horizon and returns the terminal field. `observer` sees the state after
/// every step (and the initial state with step 0 and drift norm 0).
pub fn simulate_path_observed(
    params: &ModelParams,
    n_modes: usize,
    n_steps: usize,
    noise: &NoiseSource,
    taming: Taming,
    mut observer: impl FnMut(usize, &[f64], f64),
) -> Result<SpectralField> {
    if n_steps == 0 {
        return Err(Error::invalid_argument("a path needs at least one step"));
    }
    let horizon = params.horizon();
    let mut stepper = Stepper::new(params, n_modes, horizon / n_steps as f64, taming)?;
    let mut path_noise = PathNoise::new(noise, n_modes, n_steps, horizon)?;
    let mut coeffs = params.initial_data().project(n_modes)?.into_coeffs();
    observer(0, &coeffs, 0.0);
    for m in 0..n_steps {
        let increments = path_noise.increments(m)?;
        let norm = stepper.advance(&mut coeffs, increments, m)?;
        observer(m + 1, &coeffs, norm);
    }
    Ok(SpectralField::from_raw(coeffs))
}

/// Terminal field of a tamed path at resolution `(n_modes, n_steps)`.
pub fn simulate_path(params: &ModelParams, n_modes: usize, n_steps: usize, noise: &NoiseSource) -> Result<SpectralField> {
    simulate_path_observed(params, n_modes, n_steps, noise, Taming::Tamed, |_, _, _| {})
}

/// Like [`simulate_path`], additionally returning `(t_m, Y_m)` for every
/// requested step index `m` (in the order requested).
pub fn simulate_with_snapshots(
    params: &ModelParams,
    n_modes: usize,
    n_steps: usize,
    noise: &NoiseSource,
    snapshot_steps: &[usize],
) -> Result<Vec<(f64, SpectralField)>> {
    if let Some(&bad) = snapshot_steps.iter().find(|&&m| m > n_steps) {
        return Err(Error::invalid_argument(format!(
            "snapshot step {bad} beyond the {n_steps} steps of the path"
        )));
    }
    let tau = params.horizon() / n_steps as f64;
    let mut found: Vec<Option<(f64, SpectralField)>> = vec![None; snapshot_steps.len()];
    simulate_path_observed(params, n_modes, n_steps, noise, Taming::Tamed, |m, c, _| {
        for (slot, _) in found.iter_mut().zip(snapshot_steps).filter(|(_, &s)| s == m) {
            *slot = Some((m as f64 * tau, SpectralField::from_raw(c.to_vec())));
        }
    })?;
    Ok(found.into_iter().flatten().collect())
}
