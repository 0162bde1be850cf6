//! Reference filters: centred moving average, windowed-sinc FIR low-pass,
//! and Welch power spectral density.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::series::UniformSeries;

/// Centred moving average of `span` samples.
///
/// An even span covers `span / 2` samples before and `span / 2 - 1` after
/// each point. Near the ends the window shrinks symmetrically so it stays
/// centred.
pub fn moving_average(signal: &UniformSeries, span: usize) -> Result<UniformSeries> {
    if span == 0 {
        return invalid_arg("moving-average span must be at least 1");
    }
    let x = signal.values();
    let n = x.len();
    if span > n {
        return invalid_arg(format!("span {span} exceeds signal length {n}"));
    }
    let before = span / 2;
    let after = span - 1 - before;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    let out = (0..n)
        .map(|i| {
            let (lo, hi) = if i >= before && n - 1 - i >= after {
                (i - before, i + after)
            } else {
                let k = i.min(n - 1 - i);
                (i - k, i + k)
            };
            // direct sum near the edges keeps short windows exact
            if hi - lo < 64 {
                x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            } else {
                (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64
            }
        })
        .collect();
    signal.with_values(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirSpec {
    /// Cut-off frequency in Hz.
    pub cutoff: f64,
    /// Odd tap count.
    pub taps: usize,
}

impl FirSpec {
    pub fn new(cutoff: f64) -> Self {
        Self { cutoff, taps: 4001 }
    }

    fn validate(&self, sample_rate: f64) -> Result<()> {
        if self.taps.is_multiple_of(2) || self.taps < 3 {
            return invalid_arg(format!(
                "FIR tap count must be odd and >= 3, got {}",
                self.taps
            ));
        }
        if !(self.cutoff > 0.0 && self.cutoff < sample_rate / 2.0) {
            return invalid_arg(format!(
                "cut-off {} Hz must lie strictly between 0 and Nyquist ({} Hz)",
                self.cutoff,
                sample_rate / 2.0
            ));
        }
        Ok(())
    }
}

/// Hann-windowed sinc coefficients normalised to unit gain at DC.
pub fn fir_coefficients(spec: &FirSpec, sample_rate: f64) -> Result<Vec<f64>> {
    spec.validate(sample_rate)?;
    let fc = spec.cutoff / sample_rate;
    let centre = (spec.taps - 1) as f64 / 2.0;
    let span = (spec.taps - 1) as f64;
    let mut h: Vec<f64> = (0..spec.taps)
        .map(|k| {
            let x = k as f64 - centre;
            let ideal = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            ideal * 0.5 * (1.0 - (2.0 * PI * k as f64 / span).cos())
        })
        .collect();
    let gain: f64 = h.iter().sum();
    h.iter_mut().for_each(|c| *c /= gain);
    Ok(h)
}

/// Magnitude response of `h` at `freq` Hz.
pub fn fir_response(h: &[f64], freq: f64, sample_rate: f64) -> f64 {
    let w = 2.0 * PI * freq / sample_rate;
    let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, c)| {
        (re + c * (w * k as f64).cos(), im - c * (w * k as f64).sin())
    });
    re.hypot(im)
}

/// Zero-phase low-pass: linear-phase FIR with the group delay removed.
/// The signal is reflected about its end samples by half the filter
/// length before convolving.
pub fn fir_lowpass(signal: &UniformSeries, spec: &FirSpec) -> Result<UniformSeries> {
    let h = fir_coefficients(spec, signal.sample_rate())?;
    let x = signal.values();
    let n = x.len();
    let half = (spec.taps - 1) / 2;
    if n <= half {
        return invalid_arg(format!(
            "signal of {n} samples is too short for a {}-tap filter",
            spec.taps
        ));
    }
    let mut ext = Vec::with_capacity(n + 2 * half);
    ext.extend((1..=half).rev().map(|j| x[j]));
    ext.extend_from_slice(x);
    ext.extend((1..=half).map(|j| x[n - 1 - j]));
    let out = fft_convolve_valid(&ext, &h, n);
    signal.with_values(out)
}

/// First `count` samples of the "valid" part of `x * h`.
fn fft_convolve_valid(x: &[f64], h: &[f64], count: usize) -> Vec<f64> {
    let len = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut a: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    a.resize(len, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
    b.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let offset = h.len() - 1;
    a[offset..offset + count]
        .iter()
        .map(|c| c.re / len as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Hann,
    Rectangular,
}

impl Taper {
    fn weights(self, len: usize) -> Vec<f64> {
        match self {
            Taper::Hann => (0..len)
                .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / len as f64).cos()))
                .collect(),
            Taper::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdSpec {
    pub segment_length: usize,
    pub overlap_fraction: f64,
    pub window: Taper,
}

impl Default for PsdSpec {
    fn default() -> Self {
        Self {
            segment_length: 16384,
            overlap_fraction: 0.5,
            window: Taper::Hann,
        }
    }
}

/// One-sided density estimate in units²/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    pub segments: usize,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Density at the bin nearest `freq`.
    pub fn at(&self, freq: f64) -> f64 {
        let k = (freq / self.bin_width()).round() as usize;
        self.density[k.min(self.density.len() - 1)]
    }
}

/// Welch's averaged periodogram. Each segment has its mean removed before
/// tapering.
pub fn welch_psd(signal: &UniformSeries, spec: &PsdSpec) -> Result<Spectrum> {
    let l = spec.segment_length;
    let x = signal.values();
    if l < 2 {
        return invalid_arg("PSD segment length must be at least 2");
    }
    if !(0.0..1.0).contains(&spec.overlap_fraction) {
        return invalid_arg(format!(
            "overlap fraction must lie in [0, 1), got {}",
            spec.overlap_fraction
        ));
    }
    if x.len() < l {
        return invalid_arg(format!(
            "signal of {} samples is shorter than one segment ({l})",
            x.len()
        ));
    }
    let step = (l - (spec.overlap_fraction * l as f64).round() as usize).max(1);
    let fs = signal.sample_rate();
    let w = spec.window.weights(l);
    let scale = 1.0 / (fs * w.iter().map(|v| v * v).sum::<f64>());
    let fft = FftPlanner::<f64>::new().plan_fft_forward(l);
    let bins = l / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); l];
    let mut start = 0;
    while start + l <= x.len() {
        let seg = &x[start..start + l];
        let mean = seg.iter().sum::<f64>() / l as f64;
        for ((b, v), wk) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex::new((v - mean) * wk, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (l.is_multiple_of(2) && k == l / 2) {
                1.0
            } else {
                2.0
            };
            one_sided * p * scale / segments as f64
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * fs / l as f64).collect();
    Ok(Spectrum {
        frequencies,
        density,
        segments,
    })
}
