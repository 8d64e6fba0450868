//! One-sided amplitude spectra of real, uniformly sampled series.
//!
//! Power-of-two lengths go through an iterative radix-2 FFT; other lengths
//! fall back to a direct transform of the non-negative bins.

use std::f64::consts::TAU;

use num_complex::Complex64;

/// Amplitude spectrum: `dc` is the series mean, and bin `k >= 1` holds the
/// amplitude of a pure cosine at `k * bin_hz` (a series `A cos(2 pi f t)`
/// shows `A` at its bin).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub bin_hz: f64,
    pub dc: f64,
    amps: Vec<f64>,
    samples: usize,
}

impl Spectrum {
    /// Amplitudes for bins `1 ..= samples/2`.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn frequency_of_bin(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    /// Amplitude at a frequency that must sit on the bin grid (within one
    /// part in 1e6 of the spacing). `0.0` maps to the dc term.
    pub fn amplitude_at(&self, hz: f64) -> Option<f64> {
        let k = (hz / self.bin_hz).round();
        if (hz - k * self.bin_hz).abs() > 1e-6 * self.bin_hz {
            return None;
        }
        let k = k as i64;
        match k {
            0 => Some(self.dc),
            _ if k < 0 => None,
            _ => self.amps.get(k as usize - 1).copied(),
        }
    }

    /// `(frequency, amplitude)` of every bin above `floor`.
    pub fn lines(&self, floor: f64) -> Vec<(f64, f64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > floor)
            .map(|(i, &a)| (self.frequency_of_bin(i + 1), a))
            .collect()
    }

    /// Mean square of the original series reconstructed from the spectrum;
    /// equals `mean(x^2)` up to rounding (Parseval).
    pub fn mean_square(&self) -> f64 {
        let mut total = self.dc * self.dc;
        let nyquist = self.samples.is_multiple_of(2);
        for (i, &a) in self.amps.iter().enumerate() {
            if nyquist && i + 1 == self.amps.len() {
                // The Nyquist bin has no mirror image.
                total += a * a;
            } else {
                total += a * a / 2.0;
            }
        }
        total
    }
}

fn bit_reverse_permute(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
}

/// In-place radix-2 FFT (forward, `e^{-i...}` convention). Length must be a
/// power of two.
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    bit_reverse_permute(buf);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        // Fresh twiddles per stage keep rounding from accumulating.
        let stage: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / len as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * stage[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Fourier coefficients `c_k` for `k = 0 ..= n/2`.
pub(crate) fn half_transform(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n.is_power_of_two() {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_in_place(&mut buf);
        buf.truncate(n / 2 + 1);
        buf
    } else {
        (0..=n / 2)
            .map(|k| {
                let w = -TAU * k as f64 / n as f64;
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| Complex64::from_polar(v, w * j as f64))
                    .sum()
            })
            .collect()
    }
}

/// Amplitude spectrum of `samples` spanning `duration` seconds.
pub fn spectrum(samples: &[f64], duration: f64) -> Spectrum {
    let n = samples.len();
    assert!(n >= 2, "need at least two samples");
    assert!(duration > 0.0, "need a positive duration");
    let coeffs = half_transform(samples);
    let scale = 1.0 / n as f64;
    let dc = coeffs[0].re * scale;
    let nyquist = n.is_multiple_of(2);
    let amps = coeffs[1..]
        .iter()
        .enumerate()
        .map(|(i, c)| {
            // For even n the final entry is the unmirrored Nyquist bin.
            if nyquist && i + 2 == coeffs.len() {
                c.norm() * scale
            } else {
                2.0 * c.norm() * scale
            }
        })
        .collect();
    Spectrum { bin_hz: 1.0 / duration, dc, amps, samples: n }
}
