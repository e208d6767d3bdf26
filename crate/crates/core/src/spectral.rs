//! Sine eigenbasis of the Dirichlet Laplacian on (0, 1).
//!
//! A function is represented by its coefficients against the orthonormal
//! basis `e_i(x) = sqrt(2) sin(i pi x)`, `i = 1, 2, ...`, with eigenvalues
//! `lambda_i = pi^2 i^2`. Pointwise values live on the uniform interior grid
//! `x_k = k / (K + 1)`, `k = 1..=K`; the quadrature weight `1 / (K + 1)` makes
//! [`analyze`] exact for every sine polynomial of degree at most `K`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::fft::Dst1;
use crate::{Error, Result};

/// Oversampling factor of [`sup_norm_estimate`] relative to the mode count.
pub const SUP_NORM_OVERSAMPLING: usize = 4;

/// `pi^2 i^2` without index validation.
#[inline]
pub(crate) fn lambda(i: usize) -> f64 {
    let i = i as f64;
    PI * PI * i * i
}

/// Eigenvalue `lambda_i = pi^2 i^2` of `-d^2/dx^2` with Dirichlet conditions.
pub fn eigenvalue(i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidIndex(0));
    }
    Ok(lambda(i))
}

/// Diagonal entry `exp(-lambda_i t)` of the heat semigroup.
pub fn semigroup_factor(i: usize, t: f64) -> Result<f64> {
    let l = eigenvalue(i)?;
    if !(t >= 0.0) {
        return Err(Error::invalid_argument(format!("time must be >= 0, got {t}")));
    }
    Ok(libm::exp(-l * t))
}

/// `(1 - exp(-lambda_i tau)) / lambda_i`, the weight the exponential scheme
/// puts on the drift over one step.
///
/// Computed through `expm1` so that it tends to `tau` with full precision as
/// `lambda_i tau -> 0`. Always in `(0, tau]`, with equality only once
/// `lambda_i tau` drops below machine precision.
pub fn phi_factor(i: usize, tau: f64) -> Result<f64> {
    let l = eigenvalue(i)?;
    check_step(tau)?;
    Ok(phi(l, tau))
}

#[inline]
pub(crate) fn phi(l: f64, tau: f64) -> f64 {
    -libm::expm1(-l * tau) / l
}

pub(crate) fn check_step(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_argument(format!(
            "step size must be positive and finite, got {tau}"
        )))
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(k) => Err(Error::invalid_argument(format!(
            "{what} entry {k} is not finite ({})",
            values[k]
        ))),
    }
}

/// Euclidean norm that does not overflow for huge finite entries.
pub(crate) fn euclidean_norm(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().map(|c| c * c).sum();
    if sum.is_finite() {
        return libm::sqrt(sum);
    }
    let scale = values.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if !scale.is_finite() {
        return scale;
    }
    let sum: f64 = values.iter().map(|c| (c / scale) * (c / scale)).sum();
    scale * libm::sqrt(sum)
}

/// Coefficients `c_1..c_N` of a function in the sine eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    /// Fails if `coeffs` is empty or holds a non-finite value.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid_argument("a field needs at least one mode"));
        }
        check_finite(&coeffs, "coefficient")?;
        Ok(Self { coeffs })
    }

    /// # Panics
    ///
    /// If `n_modes` is zero.
    pub fn zeros(n_modes: usize) -> Self {
        assert!(n_modes > 0, "a field needs at least one mode");
        Self {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// `amplitude * e_mode` on `n_modes` modes.
    pub fn single_mode(n_modes: usize, mode: usize, amplitude: f64) -> Result<Self> {
        if mode == 0 || mode > n_modes {
            return Err(Error::InvalidIndex(mode as i64));
        }
        let mut coeffs = vec![0.0; n_modes];
        coeffs[mode - 1] = amplitude;
        Self::new(coeffs)
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `e_i`, zero beyond the stored modes.
    pub fn coeff(&self, i: usize) -> f64 {
        match i {
            0 => 0.0,
            _ => self.coeffs.get(i - 1).copied().unwrap_or(0.0),
        }
    }

    /// `P_n`: truncate to the first `n_target` modes, or zero-pad up to them.
    pub fn project(&self, n_target: usize) -> Result<Self> {
        if n_target == 0 {
            return Err(Error::invalid_argument("projection target must be >= 1 mode"));
        }
        let mut coeffs = vec![0.0; n_target];
        let keep = n_target.min(self.coeffs.len());
        coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        Ok(Self { coeffs })
    }

    /// L2(0,1) norm, by Parseval the Euclidean norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        euclidean_norm(&self.coeffs)
    }

    /// `sqrt(sum lambda_i^gamma c_i^2)`, the norm of `A^{gamma/2} u`.
    pub fn sobolev_norm(&self, gamma: f64) -> f64 {
        if gamma == 0.0 {
            return self.l2_norm();
        }
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| libm::pow(lambda(k + 1), gamma) * c * c)
            .sum();
        libm::sqrt(sum)
    }

    /// L2 distance after zero-padding the shorter field.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        libm::sqrt(squared_distance(&self.coeffs, &other.coeffs))
    }
}

/// `sum (a_i - b_i)^2` with the shorter slice zero-padded.
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let shared: f64 = short
        .iter()
        .zip(long)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let tail: f64 = long[short.len()..].iter().map(|y| y * y).sum();
    shared + tail
}

/// Function values at the interior points `x_k = k / (K + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_argument("a grid needs at least one point"));
        }
        check_finite(&values, "grid value")?;
        Ok(Self { values })
    }

    /// Samples `f` at the `grid_size` interior points.
    pub fn from_fn(grid_size: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / (grid_size + 1) as f64;
        Self::new((1..=grid_size).map(|k| f(k as f64 * h)).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of `values()[k]`.
    pub fn point(&self, k: usize) -> f64 {
        (k + 1) as f64 / (self.values.len() + 1) as f64
    }
}

/// Reusable synthesis/analysis pair on a fixed interior grid.
///
/// Building one tabulates the sines (and FFT twiddles when `K + 1` is a power
/// of two), so hot loops should keep one around instead of calling the free
/// [`synthesize`]/[`analyze`] functions.
#[derive(Debug, Clone)]
pub struct SineTransform {
    dst: Dst1,
}

impl SineTransform {
    pub fn new(grid_size: usize) -> Result<Self> {
        if grid_size == 0 {
            return Err(Error::invalid_argument("grid size must be >= 1"));
        }
        Ok(Self {
            dst: Dst1::new(grid_size),
        })
    }

    pub fn grid_size(&self) -> usize {
        self.dst.size()
    }

    /// Writes `sum_i c_i sqrt(2) sin(i pi x_k)` into `values` (length `K`).
    pub fn synthesize_into(&mut self, coeffs: &[f64], values: &mut [f64]) -> Result<()> {
        let k = self.grid_size();
        if coeffs.len() > k {
            return Err(Error::Resolution {
                modes: coeffs.len(),
                grid: k,
                required: coeffs.len(),
            });
        }
        assert_eq!(values.len(), k, "output must cover the whole grid");
        self.dst.apply(coeffs, values);
        values.iter_mut().for_each(|v| *v *= SQRT_2);
        Ok(())
    }

    /// Writes the quadrature coefficients `(1 / (K + 1)) sum_k v_k sqrt(2) sin(i pi x_k)`
    /// for `i = 1..=coeffs.len()`.
    pub fn analyze_into(&mut self, values: &[f64], coeffs: &mut [f64]) -> Result<()> {
        let k = self.grid_size();
        if coeffs.len() > k {
            return Err(Error::Resolution {
                modes: coeffs.len(),
                grid: k,
                required: coeffs.len(),
            });
        }
        assert_eq!(values.len(), k, "input must cover the whole grid");
        self.dst.apply(values, coeffs);
        let w = SQRT_2 / (k + 1) as f64;
        coeffs.iter_mut().for_each(|c| *c *= w);
        Ok(())
    }
}

/// Evaluates `field` on the interior grid of size `grid_size`.
pub fn synthesize(field: &SpectralField, grid_size: usize) -> Result<GridField> {
    let mut transform = SineTransform::new(grid_size)?;
    let mut values = vec![0.0; grid_size];
    transform.synthesize_into(field.coeffs(), &mut values)?;
    Ok(GridField { values })
}

/// Discrete projection of grid values onto the first `n_modes` eigenfunctions.
pub fn analyze(grid: &GridField, n_modes: usize) -> Result<SpectralField> {
    if n_modes == 0 {
        return Err(Error::invalid_argument("mode count must be >= 1"));
    }
    let mut transform = SineTransform::new(grid.grid_size())?;
    let mut coeffs = vec![0.0; n_modes];
    transform.analyze_into(grid.values(), &mut coeffs)?;
    Ok(SpectralField { coeffs })
}

/// Free-function form of [`SpectralField::project`].
pub fn project(field: &SpectralField, n_target: usize) -> Result<SpectralField> {
    field.project(n_target)
}

pub fn l2_norm(field: &SpectralField) -> f64 {
    field.l2_norm()
}

pub fn sobolev_norm(field: &SpectralField, gamma: f64) -> f64 {
    field.sobolev_norm(gamma)
}

/// Max of `|u(x_k)|` over the interior grid of size `grid_size`.
///
/// A lower bound on the sup norm. Refining the grid by doubling `K + 1`
/// nests the points, so the estimate can only grow along such a sequence.
/// `grid_size` must be at least [`SUP_NORM_OVERSAMPLING`] times the mode count.
pub fn sup_norm_estimate(field: &SpectralField, grid_size: usize) -> Result<f64> {
    let required = SUP_NORM_OVERSAMPLING * field.n_modes();
    if grid_size < required {
        return Err(Error::Resolution {
            modes: field.n_modes(),
            grid: grid_size,
            required,
        });
    }
    let grid = synthesize(field, grid_size)?;
    Ok(grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}
