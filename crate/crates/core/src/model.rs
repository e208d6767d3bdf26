//! The polynomial drift `f(v) = a3 v^3 + a2 v^2 + a1 v + a0` and its
//! Galerkin projection `F_N = P_N F`.
//!
//! `F_N` is evaluated pseudospectrally: synthesize the field on an interior
//! grid of `4N - 1` points, apply `f` pointwise, analyze back onto `N` modes.
//! The cube of an `N`-mode sine polynomial only reaches mode `3N`, below the
//! grid size, so for `a2 = 0` the projection is exact up to roundoff. Even
//! powers produce cosine content whose sine projection is only approximated
//! by the quadrature, with an `O(K^-2)` residual.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::spectral::{check_step, euclidean_norm, SineTransform, SpectralField};
use crate::{Error, Result};

/// Interior grid used to evaluate `F_N` on `n_modes` modes.
///
/// `4N - 1` points keep `K + 1 = 4N` a power of two whenever `N` is, which
/// puts the transforms on the FFT path, and stays above the `3N` needed for
/// an exact cubic.
pub fn dealias_grid_size(n_modes: usize) -> usize {
    4 * n_modes - 1
}

/// Drift coefficients, time horizon and initial data of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    a3: f64,
    a2: f64,
    a1: f64,
    a0: f64,
    horizon: f64,
    initial_data: SpectralField,
}

impl ModelParams {
    pub fn new(
        [a3, a2, a1, a0]: [f64; 4],
        horizon: f64,
        initial_data: SpectralField,
    ) -> Result<Self> {
        if !(a3 < 0.0) || !a3.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cubic coefficient a3 must be negative, got {a3}"
            )));
        }
        if [a2, a1, a0].iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("drift coefficients must be finite".to_string()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            a3,
            a2,
            a1,
            a0,
            horizon,
            initial_data,
        })
    }

    /// `u_t = u_xx + u - u^3 + W'` on `t in (0, 1]` with `u(0, x) = sin(pi x)`.
    pub fn allen_cahn() -> Self {
        Self {
            a3: -1.0,
            a2: 0.0,
            a1: 1.0,
            a0: 0.0,
            horizon: 1.0,
            initial_data: SpectralField::from_raw(vec![1.0 / SQRT_2]),
        }
    }

    pub fn with_coefficients(self, coefficients: [f64; 4]) -> Result<Self> {
        Self::new(coefficients, self.horizon, self.initial_data)
    }

    pub fn with_horizon(self, horizon: f64) -> Result<Self> {
        Self::new(self.coefficients(), horizon, self.initial_data)
    }

    pub fn with_initial_data(self, initial_data: SpectralField) -> Self {
        Self {
            initial_data,
            ..self
        }
    }

    /// `[a3, a2, a1, a0]`
    pub fn coefficients(&self) -> [f64; 4] {
        [self.a3, self.a2, self.a1, self.a0]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_data(&self) -> &SpectralField {
        &self.initial_data
    }

    /// `f(v)`
    #[inline]
    pub fn eval_poly(&self, v: f64) -> f64 {
        ((self.a3 * v + self.a2) * v + self.a1) * v + self.a0
    }
}

/// Free-function form of [`ModelParams::eval_poly`].
pub fn eval_poly(params: &ModelParams, v: f64) -> f64 {
    params.eval_poly(v)
}

fn blowup(reason: impl Into<alloc::string::String>) -> Error {
    Error::Blowup {
        step: 0,
        reason: reason.into(),
    }
}

/// Workspace for repeated evaluation of `F_N` on a fixed mode count.
#[derive(Debug, Clone)]
pub struct DriftEvaluator {
    coefficients: [f64; 4],
    transform: SineTransform,
    grid: Vec<f64>,
    drift: Vec<f64>,
}

impl DriftEvaluator {
    pub fn new(params: &ModelParams, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid_argument("mode count must be >= 1"));
        }
        let k = dealias_grid_size(n_modes);
        Ok(Self {
            coefficients: params.coefficients(),
            transform: SineTransform::new(k)?,
            grid: vec![0.0; k],
            drift: vec![0.0; n_modes],
        })
    }

    pub fn n_modes(&self) -> usize {
        self.drift.len()
    }

    fn load(&mut self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.drift.len() {
            return Err(Error::invalid_argument(format!(
                "expected {} coefficients, got {}",
                self.drift.len(),
                coeffs.len()
            )));
        }
        self.transform.synthesize_into(coeffs, &mut self.grid)?;
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(blowup("field values are not finite"));
        }
        Ok(())
    }

    fn project_grid(&mut self, f: impl Fn(f64) -> f64) -> Result<()> {
        self.grid.iter_mut().for_each(|v| *v = f(*v));
        self.transform.analyze_into(&self.grid, &mut self.drift)
    }

    /// `F_N(u)`. Non-finite output is reported as a blowup.
    pub fn galerkin(&mut self, coeffs: &[f64]) -> Result<&[f64]> {
        self.load(coeffs)?;
        let [a3, a2, a1, a0] = self.coefficients;
        self.project_grid(|v| ((a3 * v + a2) * v + a1) * v + a0)?;
        if self.drift.iter().any(|c| !c.is_finite()) {
            return Err(blowup("projected drift is not finite"));
        }
        Ok(&self.drift)
    }

    /// `F_N(u) / (1 + tau |F_N(u)|)` together with its L2 norm.
    ///
    /// When `F_N(u)` itself overflows, the polynomial is evaluated on the
    /// field scaled by its grid maximum `s`, giving `G = F_N / s^3`, and the
    /// result is formed as `G / (s^-3 + tau |G|)`. The output therefore stays
    /// finite with norm at most `1 / tau` for any finite field.
    pub fn tamed(&mut self, coeffs: &[f64], tau: f64) -> Result<(&[f64], f64)> {
        check_step(tau)?;
        self.load(coeffs)?;
        let [a3, a2, a1, a0] = self.coefficients;
        let scale = self.grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.project_grid(|v| ((a3 * v + a2) * v + a1) * v + a0)?;
        let norm = euclidean_norm(&self.drift);

        let (denominator, norm) = if norm.is_finite() {
            (1.0 + tau * norm, norm)
        } else {
            self.load(coeffs)?;
            let inv = 1.0 / scale;
            let (b2, b1, b0) = (a2 * inv, a1 * inv * inv, a0 * inv * inv * inv);
            self.project_grid(|v| {
                let u = v * inv;
                ((a3 * u + b2) * u + b1) * u + b0
            })?;
            let norm = euclidean_norm(&self.drift);
            if !norm.is_finite() {
                return Err(blowup("rescaled drift is not finite"));
            }
            (inv * inv * inv + tau * norm, norm)
        };
        if denominator == 0.0 {
            // only reachable when the rescaled drift vanishes identically
            self.drift.iter_mut().for_each(|c| *c = 0.0);
            return Ok((&self.drift, 0.0));
        }
        self.drift.iter_mut().for_each(|c| *c /= denominator);
        Ok((&self.drift, norm / denominator))
    }
}

/// `F_N(field) = P_N f(field)` on the field's own mode count.
pub fn nonlinearity_galerkin(params: &ModelParams, field: &SpectralField) -> Result<SpectralField> {
    let mut eval = DriftEvaluator::new(params, field.n_modes())?;
    let drift = eval.galerkin(field.coeffs())?.to_vec();
    Ok(SpectralField::from_raw(drift))
}

/// `F_N(field) / (1 + tau |F_N(field)|)`.
pub fn tamed_drift(params: &ModelParams, field: &SpectralField, tau: f64) -> Result<SpectralField> {
    let mut eval = DriftEvaluator::new(params, field.n_modes())?;
    let (drift, _) = eval.tamed(field.coeffs(), tau)?;
    Ok(SpectralField::from_raw(drift.to_vec()))
}
