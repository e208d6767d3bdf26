//! Radix-2 complex FFT and the type-I discrete sine transform built on it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Smallest `K + 1` routed through the FFT; below this the direct sum wins.
const FAST_MIN_LEN: usize = 16;

/// In-place forward transform `X_k = sum_j x_j exp(-2 pi i jk / n)`, `n` a power of two.
#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        assert!(len.is_power_of_two());
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Self {
            len,
            twiddles,
            bitrev,
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.len {
            let stride = self.len / (2 * half);
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let t = *b * self.twiddles[k * stride];
                    *b = *a - t;
                    *a += t;
                }
            }
            half *= 2;
        }
    }
}

/// Type-I sine transform on `size` interior points:
///
/// ```text
/// out[j - 1] = sum_{k=1}^{size} x_k sin(pi j k / (size + 1)),   j = 1..=size
/// ```
///
/// Inputs shorter than `size` are implicitly zero padded and only the first
/// `out.len()` outputs are produced. When `size + 1` is a power of two the
/// transform runs through a half-length complex FFT; other sizes fall back to
/// a direct O(len(input) * len(out)) sum over a tabulated sine.
#[derive(Debug, Clone)]
pub(crate) struct Dst1 {
    size: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Direct { table: Vec<f64> },
    Fast(FastDst),
}

#[derive(Debug, Clone)]
struct FastDst {
    /// sin(j pi / n), j = 0..n
    sines: Vec<f64>,
    /// exp(-2 pi i k / n), k = 0..n/2
    rotation: Vec<Complex64>,
    fft: Radix2,
    w: Vec<f64>,
    z: Vec<Complex64>,
    result: Vec<f64>,
}

impl Dst1 {
    pub(crate) fn new(size: usize) -> Self {
        assert!(size > 0, "sine transform needs at least one point");
        let n = size + 1;
        let kind = if n.is_power_of_two() && n >= FAST_MIN_LEN {
            let h = n / 2;
            Kind::Fast(FastDst {
                sines: (0..n).map(|j| libm::sin(PI * j as f64 / n as f64)).collect(),
                rotation: (0..h)
                    .map(|k| {
                        let angle = -2.0 * PI * k as f64 / n as f64;
                        Complex64::new(libm::cos(angle), libm::sin(angle))
                    })
                    .collect(),
                fft: Radix2::new(h),
                w: vec![0.0; n],
                z: vec![Complex64::new(0.0, 0.0); h],
                result: vec![0.0; n],
            })
        } else {
            Kind::Direct {
                table: (0..2 * n)
                    .map(|m| libm::sin(PI * m as f64 / n as f64))
                    .collect(),
            }
        };
        Self { size, kind }
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    #[cfg(test)]
    pub(crate) fn is_fast(&self) -> bool {
        matches!(self.kind, Kind::Fast(_))
    }

    pub(crate) fn apply(&mut self, input: &[f64], out: &mut [f64]) {
        assert!(input.len() <= self.size && out.len() <= self.size);
        match &mut self.kind {
            Kind::Direct { table } => direct(table, input, out),
            Kind::Fast(fast) => fast.apply(input, out),
        }
    }
}

fn direct(table: &[f64], input: &[f64], out: &mut [f64]) {
    let period = table.len();
    for (j, slot) in out.iter_mut().enumerate() {
        let j = j + 1;
        let mut idx = 0;
        let mut acc = 0.0;
        for &x in input {
            idx += j;
            if idx >= period {
                idx -= period;
            }
            acc += x * table[idx];
        }
        *slot = acc;
    }
}

impl FastDst {
    // Pre-twist into a symmetric/antisymmetric split so that one real DFT of
    // length n yields the even outputs directly and the odd ones by a running
    // sum; the real DFT itself is a complex FFT of length n/2.
    fn apply(&mut self, input: &[f64], out: &mut [f64]) {
        let n = self.w.len();
        let h = n / 2;
        let x = |j: usize| input.get(j.wrapping_sub(1)).copied().unwrap_or(0.0);

        self.w[0] = 0.0;
        for j in 1..n {
            let (a, b) = (x(j), x(n - j));
            self.w[j] = self.sines[j] * (a + b) + 0.5 * (a - b);
        }
        for (m, z) in self.z.iter_mut().enumerate() {
            *z = Complex64::new(self.w[2 * m], self.w[2 * m + 1]);
        }
        self.fft.forward(&mut self.z);

        let f = &mut self.result;
        let mut odd = 0.0;
        for k in 0..h {
            let zk = self.z[k];
            let zc = self.z[(h - k) % h].conj();
            let even_part = (zk + zc) * 0.5;
            let odd_part = (zk - zc) * Complex64::new(0.0, -0.5);
            let wk = even_part + self.rotation[k] * odd_part;
            if k == 0 {
                odd = 0.5 * wk.re;
            } else {
                f[2 * k] = -wk.im;
                odd += wk.re;
            }
            f[2 * k + 1] = odd;
        }
        out.copy_from_slice(&f[1..=out.len()]);
    }
}
