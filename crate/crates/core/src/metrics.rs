//! Error measures against a known clean signal.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::series::{TimeWindow, UniformSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    pub method_label: String,
    pub rmse: f64,
    /// `+inf` when the estimate is exact.
    pub snr_db: f64,
    pub max_abs_error: f64,
    pub peak_retention: f64,
}

fn check_pair<'a>(a: &'a UniformSeries, b: &'a UniformSeries) -> Result<(&'a [f64], &'a [f64])> {
    if !a.same_grid(b) {
        return invalid_arg(format!(
            "series are on different grids ({} samples at t0 = {}, {} samples at t0 = {})",
            a.len(),
            a.t0(),
            b.len(),
            b.t0()
        ));
    }
    if a.is_empty() {
        return invalid_arg("cannot score empty series");
    }
    Ok((a.values(), b.values()))
}

pub fn rmse(a: &UniformSeries, b: &UniformSeries) -> Result<f64> {
    let (a, b) = check_pair(a, b)?;
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

/// `10 log10(sum clean^2 / sum (clean - estimate)^2)`; `+inf` for an exact
/// estimate.
pub fn snr_db(clean: &UniformSeries, estimate: &UniformSeries) -> Result<f64> {
    let (c, e) = check_pair(clean, estimate)?;
    let signal: f64 = c.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return invalid_arg("clean signal is identically zero");
    }
    let noise: f64 = c.iter().zip(e).map(|(x, y)| (x - y).powi(2)).sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

pub fn max_abs_error(a: &UniformSeries, b: &UniformSeries) -> Result<f64> {
    let (a, b) = check_pair(a, b)?;
    Ok(a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(max estimate - b) / (max clean - b)` over `window`, where `b` is the
/// median of the clean signal in the window. Removing `b` isolates a pulse
/// from the slower signal it sits on.
pub fn peak_retention(
    clean: &UniformSeries,
    estimate: &UniformSeries,
    window: &TimeWindow,
) -> Result<f64> {
    check_pair(clean, estimate)?;
    let r = clean.window_indices(window)?;
    let c = &clean.values()[r.clone()];
    let e = &estimate.values()[r];
    let base = median(c);
    let peak = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let reference = peak(c) - base;
    if !(reference > 0.0) {
        return invalid_arg("clean signal has no peak above its median in the window");
    }
    Ok(((peak(e) - base) / reference).max(0.0))
}

/// All measures for one estimate. `peak_window` brackets the pulse.
pub fn evaluate(
    method_label: &str,
    clean: &UniformSeries,
    estimate: &UniformSeries,
    peak_window: &TimeWindow,
) -> Result<DenoiseReport> {
    Ok(DenoiseReport {
        method_label: method_label.to_owned(),
        rmse: rmse(clean, estimate)?,
        snr_db: snr_db(clean, estimate)?,
        max_abs_error: max_abs_error(clean, estimate)?,
        peak_retention: peak_retention(clean, estimate, peak_window)?,
    })
}
