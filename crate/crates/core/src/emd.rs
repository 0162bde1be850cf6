//! Empirical mode decomposition with a Cauchy-type sifting stop.
//!
//! Each IMF is obtained by repeatedly subtracting the mean of the upper and
//! lower envelopes. The first sifting pass of every mode anchors the envelopes
//! on the end samples; later passes mirror three extrema at each edge. Sifting
//! stops once the normalized squared change `SD` drops to `sd_threshold`.

use crate::envelope::{count_extrema, mean_envelope};
use crate::error::{invalid_arg, Error, Result};
use crate::series::UniformSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdConfig {
    /// Sifting stops when `SD <= sd_threshold`.
    pub sd_threshold: f64,
    /// Safety cap on sifting passes per mode; hitting it is not an error.
    pub max_sift_iterations: usize,
    pub max_modes: usize,
    /// The residue is "small" once `max|r| < residue_rel_floor * max|signal|`.
    pub residue_rel_floor: f64,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            sd_threshold: 0.2,
            max_sift_iterations: 1000,
            max_modes: 32,
            residue_rel_floor: 1e-8,
        }
    }
}

impl EmdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd_threshold > 0.0) {
            return invalid_arg(format!(
                "sd_threshold must be positive, got {}",
                self.sd_threshold
            ));
        }
        if self.max_sift_iterations == 0 || self.max_modes == 0 {
            return invalid_arg("sifting and mode caps must be at least 1");
        }
        if !(self.residue_rel_floor >= 0.0) {
            return invalid_arg("residue_rel_floor must be non-negative");
        }
        Ok(())
    }
}

/// IMFs (highest frequency first) plus the residue of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub imfs: Vec<UniformSeries>,
    pub residue: UniformSeries,
    /// Sifting passes spent on each IMF.
    pub sift_counts: Vec<usize>,
    pub source_length: usize,
}

impl Decomposition {
    pub fn mode_count(&self) -> usize {
        self.imfs.len()
    }

    /// Point-wise sum of all IMFs and the residue.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut sum = self.residue.values().to_vec();
        for imf in &self.imfs {
            for (s, v) in sum.iter_mut().zip(imf.values()) {
                *s += v;
            }
        }
        sum
    }

    /// Builds a decomposition from raw mode vectors on the grid of `grid`.
    pub(crate) fn from_raw(grid: &UniformSeries, raw: RawDecomposition) -> Result<Self> {
        let imfs = raw
            .imfs
            .into_iter()
            .map(|v| grid.with_values(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            imfs,
            residue: grid.with_values(raw.residue)?,
            sift_counts: raw.sift_counts,
            source_length: grid.len(),
        })
    }
}

/// Decomposition on bare sample vectors, used inside the ensemble loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDecomposition {
    pub imfs: Vec<Vec<f64>>,
    pub residue: Vec<f64>,
    pub sift_counts: Vec<usize>,
}

/// `sum (h_prev - h_curr)^2 / sum h_prev^2`.
pub fn sd_metric(h_prev: &[f64], h_curr: &[f64]) -> Result<f64> {
    if h_prev.len() != h_curr.len() {
        return invalid_arg(format!(
            "SD needs equal lengths, got {} and {}",
            h_prev.len(),
            h_curr.len()
        ));
    }
    let (num, den) = h_prev
        .iter()
        .zip(h_curr)
        .fold((0.0, 0.0), |(n, d), (p, c)| {
            (n + (p - c) * (p - c), d + p * p)
        });
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::InvalidState(
            "SD denominator vanished while the iterate changed".into(),
        ));
    }
    Ok(num / den)
}

/// True when the first differences never reverse sign (ties are ignored).
pub fn is_monotone(values: &[f64]) -> bool {
    let mut dir = 0.0_f64;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        if dir != 0.0 && d.signum() != dir {
            return false;
        }
        dir = d.signum();
    }
    true
}

/// Result of sifting one mode out of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Sifted {
    pub imf: Vec<f64>,
    pub iterations: usize,
    /// SD of the last pass, if one was computed.
    pub final_sd: Option<f64>,
}

/// Sifts one IMF out of `values`.
///
/// Returns `Ok(None)` when the input has no interior maximum or minimum,
/// i.e. it can only be a residue.
pub fn sift_values(values: &[f64], cfg: &EmdConfig) -> Result<Option<Sifted>> {
    let mut h = values.to_vec();
    let mut final_sd = None;
    let mut iterations = 0;
    while iterations < cfg.max_sift_iterations {
        let Some(mean) = mean_envelope(&h, iterations == 0)? else {
            if iterations == 0 {
                return Ok(None);
            }
            break;
        };
        let next: Vec<f64> = h.iter().zip(&mean).map(|(x, m)| x - m).collect();
        let sd = sd_metric(&h, &next)?;
        h = next;
        iterations += 1;
        final_sd = Some(sd);
        if sd <= cfg.sd_threshold {
            break;
        }
    }
    Ok(Some(Sifted {
        imf: h,
        iterations,
        final_sd,
    }))
}

/// Series-level wrapper around [`sift_values`]: the IMF and its iteration count.
pub fn sift_to_imf(
    signal: &UniformSeries,
    cfg: &EmdConfig,
) -> Result<Option<(UniformSeries, usize)>> {
    cfg.validate()?;
    match sift_values(signal.values(), cfg)? {
        Some(s) => Ok(Some((signal.with_values(s.imf)?, s.iterations))),
        None => Ok(None),
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// EMD on a bare sample vector.
pub fn emd_values(values: &[f64], cfg: &EmdConfig) -> Result<RawDecomposition> {
    cfg.validate()?;
    if values.len() < 8 {
        return invalid_arg(format!(
            "EMD needs at least 8 samples, got {}",
            values.len()
        ));
    }
    let floor = cfg.residue_rel_floor * max_abs(values);
    let mut residue = values.to_vec();
    let mut imfs = Vec::new();
    let mut sift_counts = Vec::new();
    while imfs.len() < cfg.max_modes {
        if max_abs(&residue) < floor || is_monotone(&residue) {
            break;
        }
        let (maxima, minima) = count_extrema(&residue);
        if maxima < 3 || minima < 3 {
            break;
        }
        let Some(sifted) = sift_values(&residue, cfg)? else {
            break;
        };
        for (r, m) in residue.iter_mut().zip(&sifted.imf) {
            *r -= m;
        }
        imfs.push(sifted.imf);
        sift_counts.push(sifted.iterations);
    }
    Ok(RawDecomposition {
        imfs,
        residue,
        sift_counts,
    })
}

/// Decomposes `signal` into IMFs and a residue whose sum is the signal.
pub fn emd(signal: &UniformSeries, cfg: &EmdConfig) -> Result<Decomposition> {
    let raw = emd_values(signal.values(), cfg)?;
    Decomposition::from_raw(signal, raw)
}
