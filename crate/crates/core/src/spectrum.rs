//! Hann-windowed, zero-padded power spectrum of a 2-vector series and the
//! harmonic band integrals over `[(n−¼)ω₀, (n+¼)ω₀]`.
//!
//! The transform is the dt-weighted DFT `ã(ω_k) = dt Σ_j a_j e^{−iω_k t_j}`, a
//! Riemann approximation of the continuous Fourier transform, so intensities
//! are comparable between runs with different time steps.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub const PAD_FACTOR: usize = 8;
pub const HALF_BAND: f64 = 0.25;
pub const MIN_SAMPLES: usize = 16;

/// Orders whose band integrals are tabulated by default (even ones included
/// so the even/odd contrast can be evaluated).
pub const DEFAULT_ORDERS: std::ops::RangeInclusive<u32> = 1..=15;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Symmetric Hann window, `sin²(πk/(N−1))`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let s = (PI * k as f64 / denom).sin();
            s * s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub omega0: f64,
    /// Bin spacing in absolute frequency.
    pub d_omega: f64,
    /// Frequency axis in harmonic orders, bins 0..=M/2.
    pub harmonic_order: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Padded transform length M.
    pub padded_len: usize,
    pub harmonics: BTreeMap<u32, f64>,
}

impl Spectrum {
    pub fn omega(&self, bin: usize) -> f64 {
        bin as f64 * self.d_omega
    }

    pub fn nyquist_order(&self) -> f64 {
        *self.harmonic_order.last().unwrap_or(&0.0)
    }

    /// Resolution in units of ω₀.
    pub fn resolution(&self) -> f64 {
        self.d_omega / self.omega0
    }

    /// Exact integral over `[lo, hi]` (absolute ω) of the piecewise-linear
    /// interpolant through the bins.
    pub fn band_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo || self.intensity.is_empty() {
            return 0.0;
        }
        let value_at = |w: f64| {
            let pos = w / self.d_omega;
            let i = (pos.floor() as usize).min(self.intensity.len() - 2);
            let frac = pos - i as f64;
            self.intensity[i] * (1.0 - frac) + self.intensity[i + 1] * frac
        };
        let first = (lo / self.d_omega).floor() as usize + 1;
        let last = (hi / self.d_omega).ceil() as usize - 1;
        let mut total = 0.0;
        let mut prev_w = lo;
        let mut prev_v = value_at(lo);
        for bin in first..=last.min(self.intensity.len() - 1) {
            let w = self.omega(bin);
            if w <= lo || w >= hi {
                continue;
            }
            let v = self.intensity[bin];
            total += 0.5 * (prev_v + v) * (w - prev_w);
            prev_w = w;
            prev_v = v;
        }
        let v = value_at(hi);
        total + 0.5 * (prev_v + v) * (hi - prev_w)
    }

    /// Band integral around harmonic order `n`.
    pub fn harmonic_intensity(&self, n: u32) -> Result<f64> {
        let upper = f64::from(n) + HALF_BAND;
        if upper > self.nyquist_order() {
            return Err(Error::BandBeyondNyquist {
                order: n,
                upper,
                nyquist: self.nyquist_order(),
            });
        }
        let lower = (f64::from(n) - HALF_BAND).max(0.0);
        Ok(self.band_integral(lower * self.omega0, upper * self.omega0))
    }

    pub fn harmonic(&self, n: u32) -> Result<f64> {
        self.harmonics
            .get(&n)
            .copied()
            .ok_or(Error::MissingHarmonic(n))
    }

    /// ∫ I dω over the full two-sided frequency circle (rectangle rule on the
    /// DFT bins). Parseval: equals 2π Σ_k |w_k a_k|² dt.
    pub fn two_sided_integral(&self) -> f64 {
        let m = self.padded_len;
        let mut sum = 0.0;
        for (bin, v) in self.intensity.iter().enumerate() {
            let weight = if bin == 0 || 2 * bin == m { 1.0 } else { 2.0 };
            sum += weight * v;
        }
        sum * self.d_omega
    }

    /// Largest ratio of an even-order band to the weaker of its odd neighbours,
    /// over even orders whose neighbours are both tabulated. Zero when the
    /// spectrum is identically zero.
    pub fn even_odd_contrast(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&n, &value) in &self.harmonics {
            if n % 2 != 0 || n == 0 {
                continue;
            }
            let (Some(&below), Some(&above)) =
                (self.harmonics.get(&(n - 1)), self.harmonics.get(&(n + 1)))
            else {
                continue;
            };
            let reference = below.min(above);
            if value == 0.0 {
                continue;
            }
            worst = worst.max(if reference > 0.0 {
                value / reference
            } else {
                f64::INFINITY
            });
        }
        worst
    }
}

/// Power spectrum with the default padding and harmonic table.
pub fn power_spectrum(accel: &[[f64; 2]], dt: f64, omega0: f64) -> Result<Spectrum> {
    power_spectrum_with(accel, dt, omega0, PAD_FACTOR, DEFAULT_ORDERS)
}

/// `I(ω) = |ã_x(ω)|² + |ã_y(ω)|²` of the Hann-windowed series, zero padded to
/// `pad_factor` times its length.
pub fn power_spectrum_with(
    accel: &[[f64; 2]],
    dt: f64,
    omega0: f64,
    pad_factor: usize,
    orders: impl IntoIterator<Item = u32>,
) -> Result<Spectrum> {
    let len = accel.len();
    if len < MIN_SAMPLES {
        return Err(Error::SeriesTooShort {
            needed: MIN_SAMPLES,
            got: len,
        });
    }
    let m = len * pad_factor.max(1);
    let m = m + (m % 2);
    let window = hann_window(len);

    // pack x + i·y into one complex transform and separate the two real spectra
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for ((b, a), w) in buf.iter_mut().zip(accel).zip(&window) {
        *b = Complex64::new(a[0] * w, a[1] * w);
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m).process(&mut buf));

    let scale = dt * dt;
    let half = m / 2;
    let intensity: Vec<f64> = (0..=half)
        .map(|k| {
            let z = buf[k];
            let zm = buf[(m - k) % m];
            0.5 * (z.norm_sqr() + zm.norm_sqr()) * scale
        })
        .collect();
    let d_omega = 2.0 * PI / (m as f64 * dt);
    let harmonic_order = (0..=half).map(|k| k as f64 * d_omega / omega0).collect();

    let mut spectrum = Spectrum {
        omega0,
        d_omega,
        harmonic_order,
        intensity,
        padded_len: m,
        harmonics: BTreeMap::new(),
    };
    for n in orders {
        let value = spectrum.harmonic_intensity(n)?;
        spectrum.harmonics.insert(n, value);
    }
    Ok(spectrum)
}

/// Σ_k |w_k a_k|² dt, the time-domain side of the Parseval identity.
pub fn windowed_energy(accel: &[[f64; 2]], dt: f64) -> f64 {
    let w = hann_window(accel.len());
    accel
        .iter()
        .zip(&w)
        .map(|(a, wk)| (a[0] * a[0] + a[1] * a[1]) * wk * wk)
        .sum::<f64>()
        * dt
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(order: f64, omega0: f64, dt: f64, len: usize) -> Vec<[f64; 2]> {
        (0..len)
            .map(|k| [(order * omega0 * k as f64 * dt).cos(), 0.0])
            .collect()
    }

    #[test]
    fn hann_values() {
        let w = hann_window(5);
        let want = [0.0, 0.5, 1.0, 0.5, 0.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = hann_window(101);
        assert_eq!(w[0], 0.0);
        assert!(w[100].abs() < 1e-30);
        assert!((w[50] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_peak_location() {
        let omega0 = 0.3143;
        let sig = cosine(3.0, omega0, 0.1, 3000);
        let s = power_spectrum(&sig, 0.1, omega0).unwrap();
        let (peak, _) = s
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((s.harmonic_order[peak] - 3.0).abs() < 0.02);
        assert!(s.resolution() <= 0.05);
    }

    #[test]
    fn band_captures_windowed_cosine() {
        let omega0 = 0.3143;
        let dt = 0.1;
        let sig = cosine(5.0, omega0, dt, 3000);
        let s = power_spectrum(&sig, dt, omega0).unwrap();
        let band = s.harmonic(5).unwrap();
        // total one-sided weight, the positive-frequency half of Parseval
        let total = 0.5 * s.two_sided_integral();
        assert!(band / total > 0.95, "{}", band / total);
    }

    #[test]
    fn zero_signal() {
        let s = power_spectrum(&[[0.0; 2]; 64], 0.1, 0.3).unwrap();
        assert!(s.intensity.iter().all(|v| *v == 0.0));
        assert!(s.harmonics.values().all(|v| *v == 0.0));
        assert_eq!(s.even_odd_contrast(), 0.0);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            power_spectrum(&[[1.0; 2]; 8], 0.1, 0.3),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn band_beyond_nyquist() {
        // dt = 1 with omega0 = 0.5 puts Nyquist at order 2π
        let sig = cosine(1.0, 0.5, 1.0, 64);
        let err = power_spectrum_with(&sig, 1.0, 0.5, 8, [7u32]).unwrap_err();
        assert!(matches!(err, Error::BandBeyondNyquist { order: 7, .. }));
    }

    #[test]
    fn parseval() {
        let omega0 = 0.3;
        let dt = 0.1;
        let sig: Vec<[f64; 2]> = (0..2000)
            .map(|k| {
                let t = k as f64 * dt;
                [(omega0 * t).sin() + 0.1 * (3.0 * omega0 * t).cos(), (0.7 * t).sin()]
            })
            .collect();
        let s = power_spectrum(&sig, dt, omega0).unwrap();
        let lhs = windowed_energy(&sig, dt);
        let rhs = s.two_sided_integral() / (2.0 * PI);
        assert!(((lhs - rhs) / lhs).abs() < 1e-8);
    }

    #[test]
    fn band_additivity() {
        let omega0 = 0.3;
        let sig = cosine(3.0, omega0, 0.1, 1500);
        let s = power_spectrum(&sig, 0.1, omega0).unwrap();
        let (a, m, b) = (2.75 * omega0, 3.0 * omega0, 3.25 * omega0);
        let whole = s.band_integral(a, b);
        let parts = s.band_integral(a, m) + s.band_integral(m, b);
        assert!(((whole - parts) / whole).abs() < 1e-14);
    }

    #[test]
    fn odd_only_signal_has_small_contrast() {
        let omega0 = 0.3143;
        let dt = 0.1;
        let n = 3000;
        let len = n as f64 * dt;
        // smooth envelope keeps the odd lines leakage-limited
        let sig: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                let env = (PI * t / len).sin().powi(2);
                let x: f64 = (1..=15)
                    .step_by(2)
                    .map(|h| (h as f64 * omega0 * t).cos() / h as f64)
                    .sum();
                [env * x, 0.0]
            })
            .collect();
        let s = power_spectrum(&sig, dt, omega0).unwrap();
        assert!(s.even_odd_contrast() < 1e-6, "{}", s.even_odd_contrast());
    }

    proptest::proptest! {
        #[test]
        fn rotation_invariance(theta in 0.0f64..(2.0 * PI)) {
            let omega0 = 0.3;
            let dt = 0.1;
            let sig: Vec<[f64; 2]> = (0..400)
                .map(|k| {
                    let t = k as f64 * dt;
                    [(omega0 * t).cos(), 0.3 * (3.0 * omega0 * t).sin()]
                })
                .collect();
            let (c, s) = (theta.cos(), theta.sin());
            let rot: Vec<[f64; 2]> = sig.iter().map(|a| [c * a[0] - s * a[1], s * a[0] + c * a[1]]).collect();
            let a = power_spectrum(&sig, dt, omega0).unwrap();
            let b = power_spectrum(&rot, dt, omega0).unwrap();
            let peak = a.intensity.iter().cloned().fold(0.0, f64::max);
            for (x, y) in a.intensity.iter().zip(&b.intensity) {
                proptest::prop_assert!((x - y).abs() <= 1e-10 * peak);
            }
        }
    }
}
