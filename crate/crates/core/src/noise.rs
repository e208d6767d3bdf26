//! Exact increments of the stochastic convolution, mode by mode.
//!
//! Over a step of length `tau` the convolution `int E(t_{m+1} - s) dW(s)`
//! projected on `e_i` is a centred Gaussian `Lambda_i` with variance
//! `(1 - exp(-2 lambda_i tau)) / (2 lambda_i)`, independent across modes and
//! steps. Every fine increment is a pure function of a [`NoiseKey`], so
//! paths at different resolutions can share one underlying Brownian motion
//! without storing it: a coarse step covering fine steps `k_0..k_0 + R`
//! receives
//!
//! ```text
//! sum_{k} exp(-lambda_i (t_b - t_{k+1})) Lambda_i[t_k, t_{k+1}],
//! ```
//!
//! which is exactly the coarse convolution increment of the same path.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::philox::philox4x32;
use crate::spectral::{check_step, eigenvalue, lambda};
use crate::{Error, Result};

/// Upper bound (exclusive) on sample, step and mode-pair indices.
pub const KEY_INDEX_LIMIT: u64 = 1 << 32;

/// Coordinates of one fine noise variate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseKey {
    pub master_seed: u64,
    pub sample_index: u64,
    /// 1-based eigenmode.
    pub mode_index: usize,
    pub fine_step_index: u64,
}

impl NoiseKey {
    fn check(&self) -> Result<()> {
        if self.mode_index == 0 {
            return Err(Error::InvalidKey("mode index starts at 1".into()));
        }
        if self.sample_index >= KEY_INDEX_LIMIT
            || self.fine_step_index >= KEY_INDEX_LIMIT
            || (self.mode_index as u64 - 1) / 2 >= KEY_INDEX_LIMIT
        {
            return Err(Error::InvalidKey(format!("index out of range in {self:?}")));
        }
        Ok(())
    }
}

/// Two independent standard normals for modes `2p + 1` and `2p + 2`.
///
/// Philox4x32-10 keyed by the master seed maps the counter
/// `(pair, step, sample, 0)` to 128 bits, which Box-Muller turns into a
/// pair of normals.
#[inline]
fn normal_pair(master_seed: u64, sample: u32, step: u32, pair: u32) -> (f64, f64) {
    let bits = philox4x32(
        [pair, step, sample, 0],
        [master_seed as u32, (master_seed >> 32) as u32],
    );
    let a = (u64::from(bits[0]) << 32) | u64::from(bits[1]);
    let b = (u64::from(bits[2]) << 32) | u64::from(bits[3]);
    const EPS: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) + 1) as f64 * EPS;
    let u2 = (b >> 11) as f64 * EPS;
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let (s, c) = libm::sincos(2.0 * PI * u2);
    (r * c, r * s)
}

/// The standard normal variate addressed by `key`.
pub fn standard_normal(key: &NoiseKey) -> Result<f64> {
    key.check()?;
    let m = key.mode_index - 1;
    let (z0, z1) = normal_pair(
        key.master_seed,
        key.sample_index as u32,
        key.fine_step_index as u32,
        (m / 2) as u32,
    );
    Ok(if m % 2 == 0 { z0 } else { z1 })
}

#[inline]
fn variance(l: f64, tau: f64) -> f64 {
    -libm::expm1(-2.0 * l * tau) / (2.0 * l)
}

/// `E|Lambda_i|^2 = (1 - exp(-2 lambda_i tau)) / (2 lambda_i)`, bounded by
/// `min(tau, 1 / (2 lambda_i))`.
pub fn increment_variance(i: usize, tau: f64) -> Result<f64> {
    let l = eigenvalue(i)?;
    check_step(tau)?;
    Ok(variance(l, tau))
}

/// The finest time grid on which noise is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGrid {
    n_modes: usize,
    m_fine: usize,
    tau_fine: f64,
}

impl NoiseGrid {
    pub fn new(n_modes: usize, m_fine: usize, horizon: f64) -> Result<Self> {
        if n_modes == 0 || m_fine == 0 {
            return Err(Error::invalid_argument("noise grid needs >= 1 mode and >= 1 step"));
        }
        if m_fine as u64 > KEY_INDEX_LIMIT || n_modes as u64 > KEY_INDEX_LIMIT {
            return Err(Error::invalid_argument("noise grid too large for the key space"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid_argument(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            n_modes,
            m_fine,
            tau_fine: horizon / m_fine as f64,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn m_fine(&self) -> usize {
        self.m_fine
    }

    pub fn tau_fine(&self) -> f64 {
        self.tau_fine
    }

    pub fn horizon(&self) -> f64 {
        self.tau_fine * self.m_fine as f64
    }
}

/// `sqrt(increment_variance(mode, tau_fine)) * standard_normal(key)`.
pub fn sample_fine_increment(key: &NoiseKey, grid: &NoiseGrid) -> Result<f64> {
    if key.mode_index > grid.n_modes || key.fine_step_index >= grid.m_fine as u64 {
        return Err(Error::InvalidKey(format!(
            "{key:?} outside a grid of {} modes and {} steps",
            grid.n_modes, grid.m_fine
        )));
    }
    let z = standard_normal(key)?;
    Ok(libm::sqrt(variance(lambda(key.mode_index), grid.tau_fine)) * z)
}

/// One Monte Carlo sample's view of the fine noise: the key context shared
/// by every increment of the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStream {
    pub master_seed: u64,
    pub sample_index: u64,
    pub grid: NoiseGrid,
}

impl NoiseStream {
    pub fn new(master_seed: u64, sample_index: u64, grid: NoiseGrid) -> Result<Self> {
        if sample_index >= KEY_INDEX_LIMIT {
            return Err(Error::InvalidKey(format!("sample index {sample_index} out of range")));
        }
        Ok(Self {
            master_seed,
            sample_index,
            grid,
        })
    }

    pub fn key(&self, mode_index: usize, fine_step_index: u64) -> NoiseKey {
        NoiseKey {
            master_seed: self.master_seed,
            sample_index: self.sample_index,
            mode_index,
            fine_step_index,
        }
    }
}

/// Batch generator of fine increments, bit-identical to
/// [`sample_fine_increment`] but drawing each Box-Muller pair once.
#[derive(Debug, Clone)]
pub struct FineIncrements {
    stream: NoiseStream,
    std_dev: Vec<f64>,
}

impl FineIncrements {
    pub fn new(stream: NoiseStream) -> Self {
        let tau = stream.grid.tau_fine;
        let std_dev = (1..=stream.grid.n_modes)
            .map(|i| libm::sqrt(variance(lambda(i), tau)))
            .collect();
        Self { stream, std_dev }
    }

    pub fn stream(&self) -> &NoiseStream {
        &self.stream
    }

    /// Increments of modes `1..=out.len()` over fine step `step`.
    pub fn fill(&self, step: usize, out: &mut [f64]) -> Result<()> {
        if out.len() > self.std_dev.len() || step >= self.stream.grid.m_fine {
            return Err(Error::InvalidKey(format!(
                "step {step} / {} modes outside the noise grid",
                out.len()
            )));
        }
        let seed = self.stream.master_seed;
        let sample = self.stream.sample_index as u32;
        for (p, chunk) in out.chunks_mut(2).enumerate() {
            let (z0, z1) = normal_pair(seed, sample, step as u32, p as u32);
            chunk[0] = self.std_dev[2 * p] * z0;
            if let Some(slot) = chunk.get_mut(1) {
                *slot = self.std_dev[2 * p + 1] * z1;
            }
        }
        Ok(())
    }
}

/// `sum_k decay^(n-1-k) x_k` by Horner's rule, the exponentially weighted
/// sum of consecutive fine increments with `decay = exp(-lambda tau_fine)`.
///
/// The first term enters as `0 * decay + x_0`, so a single increment passes
/// through unchanged.
pub fn aggregate_increments(decay: f64, increments: impl IntoIterator<Item = f64>) -> f64 {
    increments.into_iter().fold(0.0, |acc, x| acc * decay + x)
}

/// Coarse convolution increment of mode `mode` over `[t_a, t_b]` assembled
/// from the fine increments of `stream`.
///
/// Both ends must sit on the fine grid (to within `1e-9` fine steps).
pub fn aggregate_to_coarse(mode: usize, t_a: f64, t_b: f64, stream: &NoiseStream) -> Result<f64> {
    let grid = &stream.grid;
    let align = |t: f64| -> Result<u64> {
        let k = libm::round(t / grid.tau_fine);
        if !(k >= 0.0) || libm::fabs(t / grid.tau_fine - k) > 1e-9 || k > grid.m_fine as f64 {
            return Err(Error::Alignment(format!(
                "t = {t} is not a point of the fine grid with step {}",
                grid.tau_fine
            )));
        }
        Ok(k as u64)
    };
    let (ka, kb) = (align(t_a)?, align(t_b)?);
    if kb <= ka {
        return Err(Error::Alignment(format!("empty interval [{t_a}, {t_b}]")));
    }
    aggregate_fine_steps(mode, ka, (kb - ka) as usize, stream)
}

/// Index form of [`aggregate_to_coarse`]: fine steps `first..first + count`.
pub fn aggregate_fine_steps(mode: usize, first: u64, count: usize, stream: &NoiseStream) -> Result<f64> {
    let decay = libm::exp(-eigenvalue(mode)? * stream.grid.tau_fine);
    let mut acc = 0.0;
    for k in first..first + count as u64 {
        acc = acc * decay + sample_fine_increment(&stream.key(mode, k), &stream.grid)?;
    }
    Ok(acc)
}

/// Streaming fine-to-coarse aggregation for the first `n_modes` modes.
#[derive(Debug, Clone)]
pub struct CoarseAggregator {
    decay: Vec<f64>,
    acc: Vec<f64>,
    ratio: usize,
    filled: usize,
}

impl CoarseAggregator {
    /// Groups `ratio` fine steps of length `tau_fine` into one coarse step.
    pub fn new(n_modes: usize, ratio: usize, tau_fine: f64) -> Result<Self> {
        check_step(tau_fine)?;
        if ratio == 0 || n_modes == 0 {
            return Err(Error::invalid_argument("aggregator needs >= 1 mode and ratio >= 1"));
        }
        Ok(Self {
            decay: (1..=n_modes).map(|i| libm::exp(-lambda(i) * tau_fine)).collect(),
            acc: alloc::vec![0.0; n_modes],
            ratio,
            filled: 0,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.acc.len()
    }

    /// Folds in one fine step (at least `n_modes` increments, extra modes
    /// ignored). Returns the coarse increments when a coarse step completes.
    pub fn push(&mut self, fine: &[f64]) -> Option<&[f64]> {
        if self.filled == self.ratio {
            self.acc.iter_mut().for_each(|a| *a = 0.0);
            self.filled = 0;
        }
        for ((a, d), x) in self.acc.iter_mut().zip(&self.decay).zip(fine) {
            *a = *a * d + x;
        }
        self.filled += 1;
        (self.filled == self.ratio).then_some(&self.acc[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_interval_identity() {
        for i in [1usize, 2, 5, 17, 100, 1000] {
            for tau in [1e-9, 1e-6, 1e-3, 1.0 / 2048.0, 1.0 / 64.0, 0.25, 1.0] {
                let half = increment_variance(i, tau / 2.0).unwrap();
                let split = libm::exp(-lambda(i) * tau) * half + half;
                let whole = increment_variance(i, tau).unwrap();
                assert!(libm::fabs(split / whole - 1.0) <= 1e-15, "i={i} tau={tau}");
            }
        }
    }

    #[test]
    fn variance_values() {
        // (1 - e^{-2 pi^2}) / (2 pi^2) = 0.0506605916856372128020527658618
        let v = increment_variance(1, 1.0).unwrap();
        assert!((v / 0.050_660_591_685_637_21 - 1.0).abs() < 1e-14);
        let v = increment_variance(1, 1e-14).unwrap();
        assert!((v / 1e-14 - 1.0).abs() < 1e-12);
        for i in [1, 3, 50] {
            for tau in [1e-6, 1e-2, 1.0] {
                let v = increment_variance(i, tau).unwrap();
                assert!(v <= tau && v <= 1.0 / (2.0 * lambda(i)));
            }
        }
        assert!(increment_variance(1, 0.0).is_err());
        assert!(increment_variance(0, 1.0).is_err());
    }

    #[test]
    fn key_validation() {
        let grid = NoiseGrid::new(4, 8, 1.0).unwrap();
        let key = |mode, step| NoiseKey {
            master_seed: 1,
            sample_index: 0,
            mode_index: mode,
            fine_step_index: step,
        };
        assert!(sample_fine_increment(&key(4, 7), &grid).is_ok());
        assert!(sample_fine_increment(&key(5, 0), &grid).is_err());
        assert!(sample_fine_increment(&key(1, 8), &grid).is_err());
        assert!(sample_fine_increment(&key(0, 0), &grid).is_err());
        let far = NoiseKey {
            sample_index: KEY_INDEX_LIMIT,
            ..key(1, 0)
        };
        assert!(standard_normal(&far).is_err());
    }

    #[test]
    fn deterministic_and_distinct() {
        let grid = NoiseGrid::new(8, 16, 1.0).unwrap();
        let stream = NoiseStream::new(42, 3, grid).unwrap();
        let a = sample_fine_increment(&stream.key(5, 9), &grid).unwrap();
        let b = sample_fine_increment(&stream.key(5, 9), &grid).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = sample_fine_increment(&stream.key(6, 9), &grid).unwrap();
        assert_ne!(a, c);
        let other = NoiseStream::new(43, 3, grid).unwrap();
        assert_ne!(a, sample_fine_increment(&other.key(5, 9), &grid).unwrap());
    }

    #[test]
    fn batch_matches_keyed() {
        let grid = NoiseGrid::new(7, 5, 2.0).unwrap();
        let stream = NoiseStream::new(9, 11, grid).unwrap();
        let batch = FineIncrements::new(stream);
        let mut out = [0.0; 7];
        for step in 0..5 {
            batch.fill(step, &mut out).unwrap();
            for (m, v) in out.iter().enumerate() {
                let keyed = sample_fine_increment(&stream.key(m + 1, step as u64), &grid).unwrap();
                assert_eq!(v.to_bits(), keyed.to_bits());
            }
        }
        assert!(batch.fill(5, &mut out).is_err());
    }

    #[test]
    fn aggregation_formula() {
        assert_eq!(aggregate_increments(0.3, [1.25]), 1.25);
        let d = libm::exp(-lambda(2) * 0.5 / 2.0);
        assert_eq!(aggregate_increments(d, [1.0, 1.0]), d + 1.0);
    }

    #[test]
    fn coarse_equal_fine_is_identity() {
        let grid = NoiseGrid::new(4, 8, 1.0).unwrap();
        let stream = NoiseStream::new(5, 0, grid).unwrap();
        let fine = sample_fine_increment(&stream.key(3, 2), &grid).unwrap();
        let coarse = aggregate_to_coarse(3, 0.25, 0.375, &stream).unwrap();
        assert_eq!(fine.to_bits(), coarse.to_bits());
    }

    #[test]
    fn misaligned_interval() {
        let grid = NoiseGrid::new(4, 8, 1.0).unwrap();
        let stream = NoiseStream::new(5, 0, grid).unwrap();
        assert!(matches!(aggregate_to_coarse(1, 0.1, 0.5, &stream), Err(Error::Alignment(_))));
        assert!(matches!(aggregate_to_coarse(1, 0.5, 0.5, &stream), Err(Error::Alignment(_))));
        assert!(matches!(aggregate_to_coarse(1, 0.5, 1.25, &stream), Err(Error::Alignment(_))));
    }

    #[test]
    fn streaming_matches_keyed_aggregation() {
        let grid = NoiseGrid::new(6, 16, 1.0).unwrap();
        let stream = NoiseStream::new(77, 2, grid).unwrap();
        let batch = FineIncrements::new(stream);
        let mut agg = CoarseAggregator::new(4, 4, grid.tau_fine()).unwrap();
        let mut fine = [0.0; 6];
        let mut coarse_step = 0;
        for step in 0..16 {
            batch.fill(step, &mut fine).unwrap();
            if let Some(coarse) = agg.push(&fine) {
                for (m, v) in coarse.iter().enumerate() {
                    let keyed = aggregate_fine_steps(m + 1, 4 * coarse_step, 4, &stream).unwrap();
                    assert_eq!(v.to_bits(), keyed.to_bits());
                }
                coarse_step += 1;
            }
        }
        assert_eq!(coarse_step, 4);
    }
}
