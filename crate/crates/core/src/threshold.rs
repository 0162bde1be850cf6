//! Hard, soft and interval thresholding of individual modes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emd::Decomposition;
use crate::error::{invalid_arg, Error, Result};
use crate::series::{sign_segments, window_std, TimeWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Hard,
    Soft,
    #[default]
    Interval,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Hard => "hard",
            Modality::Soft => "soft",
            Modality::Interval => "interval",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Modality::Hard),
            "soft" => Ok(Modality::Soft),
            "interval" => Ok(Modality::Interval),
            other => invalid_arg(format!("unknown thresholding modality {other:?}")),
        }
    }
}

/// Thresholding rule plus one threshold per mode (index 0 is IMF 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub modality: Modality,
    pub per_mode_thresholds: Vec<f64>,
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return invalid_arg(format!("threshold must be non-negative, got {t}"));
    }
    Ok(())
}

/// Keeps samples with `|y| > t`, zeroes the rest.
pub fn hard_threshold(values: &[f64], t: f64) -> Result<Vec<f64>> {
    check_threshold(t)?;
    Ok(values
        .iter()
        .map(|&y| if y.abs() > t { y } else { 0.0 })
        .collect())
}

/// Shrinks samples towards zero by `t`; samples with `|y| <= t` become zero.
pub fn soft_threshold(values: &[f64], t: f64) -> Result<Vec<f64>> {
    check_threshold(t)?;
    Ok(values
        .iter()
        .map(|&y| {
            if y > t {
                y - t
            } else if y < -t {
                y + t
            } else {
                0.0
            }
        })
        .collect())
}

/// Keeps whole half-oscillations whose peak magnitude exceeds `t`.
///
/// Segments are the zero-crossing partition of [`sign_segments`]; the
/// segments touching either end are treated like any other.
pub fn interval_threshold(values: &[f64], t: f64) -> Result<Vec<f64>> {
    check_threshold(t)?;
    let mut out = values.to_vec();
    for seg in sign_segments(values) {
        let peak = values[seg.clone()]
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if peak <= t {
            out[seg].fill(0.0);
        }
    }
    Ok(out)
}

pub fn apply(modality: Modality, values: &[f64], t: f64) -> Result<Vec<f64>> {
    match modality {
        Modality::Hard => hard_threshold(values, t),
        Modality::Soft => soft_threshold(values, t),
        Modality::Interval => interval_threshold(values, t),
    }
}

/// `T_i = n_sigma * std(IMF_i over window)`, and zero for the 1-based mode
/// indices in `exempt`.
pub fn mode_thresholds(
    dec: &Decomposition,
    n_sigma: f64,
    window: &TimeWindow,
    exempt: &BTreeSet<usize>,
    modality: Modality,
) -> Result<ThresholdSpec> {
    if !(n_sigma >= 0.0) {
        return invalid_arg(format!(
            "threshold multiplier must be non-negative, got {n_sigma}"
        ));
    }
    let per_mode_thresholds = dec
        .imfs
        .iter()
        .enumerate()
        .map(|(i, imf)| {
            if exempt.contains(&(i + 1)) {
                Ok(0.0)
            } else {
                Ok(n_sigma * window_std(imf, window)?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdSpec {
        modality,
        per_mode_thresholds,
    })
}
