//! Partial reconstruction from a decomposition, with optional thresholding
//! of an intermediate band of modes, and the named denoising presets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::eemd::{eemd, EemdConfig, EnsembleResult};
use crate::emd::Decomposition;
use crate::error::{invalid_arg, Error, Result};
use crate::series::{TimeWindow, UniformSeries};
use crate::threshold::{apply, mode_thresholds, Modality};

/// Which modes are dropped, thresholded and kept.
///
/// With 1-based mode indices and `N` modes: modes `1..l` are discarded,
/// `l..m` are thresholded, `m..=N` are kept in full, and the residue is
/// always kept. `m = N + 1` keeps only the residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionPlan {
    pub l: usize,
    pub m: usize,
    pub n_sigma: f64,
    /// Window used to estimate the per-mode noise std.
    pub sigma_window: TimeWindow,
    pub modality: Modality,
    /// Mode count the plan was designed for, if it is tied to one.
    pub expected_modes: Option<usize>,
}

impl ReconstructionPlan {
    /// Checks the plan against a decomposition with `modes` IMFs.
    pub fn check(&self, modes: usize) -> Result<()> {
        self.check_shape()?;
        if let Some(planned) = self.expected_modes {
            if planned != modes {
                return Err(Error::PlanMismatch {
                    planned,
                    selected: modes,
                });
            }
        }
        if self.m > modes + 1 {
            return Err(Error::PlanMismatch {
                planned: self.m - 1,
                selected: modes,
            });
        }
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        if self.l == 0 || self.l > self.m {
            return invalid_arg(format!(
                "plan needs 1 <= l <= m, got l = {}, m = {}",
                self.l, self.m
            ));
        }
        if !(self.n_sigma >= 0.0) {
            return invalid_arg(format!(
                "threshold multiplier must be non-negative, got {}",
                self.n_sigma
            ));
        }
        if let Some(n) = self.expected_modes {
            if self.m > n + 1 {
                return invalid_arg(format!("plan has m = {} but only {n} modes", self.m));
            }
        }
        Ok(())
    }
}

/// Named parameter sets for the three reference cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Synthetic benchmark: L = 5, M = 8, N = 10, T_i = 4.75 sigma_i.
    Synthetic475,
    /// Dry (in-air) run: L = 8, M = 10, N = 11, T_i = 2 sigma_i.
    Dry2Sigma,
    /// Water entry: L = 7, M = 9, N = 10, T_i = 3 sigma_i.
    Wet3Sigma,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Synthetic475, Preset::Dry2Sigma, Preset::Wet3Sigma];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Synthetic475 => "synthetic-475",
            Preset::Dry2Sigma => "dry-2sigma",
            Preset::Wet3Sigma => "wet-3sigma",
        }
    }

    pub fn plan(self) -> ReconstructionPlan {
        let quiet = TimeWindow {
            start: 0.05,
            end: 0.95,
        };
        let coasting = TimeWindow {
            start: 1.70,
            end: 1.75,
        };
        let (l, m, n, n_sigma, sigma_window) = match self {
            Preset::Synthetic475 => (5, 8, 10, 4.75, quiet),
            Preset::Dry2Sigma => (8, 10, 11, 2.0, coasting),
            Preset::Wet3Sigma => (7, 9, 10, 3.0, quiet),
        };
        ReconstructionPlan {
            l,
            m,
            n_sigma,
            sigma_window,
            modality: Modality::Interval,
            expected_modes: Some(n),
        }
    }

    /// Window for the std that scales the ensemble's added noise.
    pub fn ensemble_sigma_window(self) -> TimeWindow {
        match self {
            Preset::Dry2Sigma => TimeWindow {
                start: 1.70,
                end: 1.75,
            },
            Preset::Synthetic475 | Preset::Wet3Sigma => TimeWindow {
                start: 0.05,
                end: 0.95,
            },
        }
    }

    /// Ensemble settings used with this preset: `N_a = 0.1`, `N_e = 1000`.
    pub fn ensemble_config(self, master_seed: u64) -> EemdConfig {
        EemdConfig {
            master_seed,
            ..EemdConfig::new(self.ensemble_sigma_window())
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {s:?}")))
    }
}

/// Residue plus IMFs `N, N-1, ..., m` (1-based), summed in that order.
fn kept_sum(dec: &Decomposition, m: usize) -> Vec<f64> {
    let mut sum = dec.residue.values().to_vec();
    for imf in dec.imfs[m - 1..].iter().rev() {
        for (s, v) in sum.iter_mut().zip(imf.values()) {
            *s += v;
        }
    }
    sum
}

/// `sum_{i=m}^{N} IMF_i + residue`.
pub fn partial_reconstruct(dec: &Decomposition, m: usize) -> Result<UniformSeries> {
    let n = dec.mode_count();
    if m == 0 || m > n + 1 {
        return invalid_arg(format!("m must lie in 1..={}, got {m}", n + 1));
    }
    dec.residue.with_values(kept_sum(dec, m))
}

/// Thresholded modes `l..m`, full modes `m..=N`, and the residue.
///
/// Thresholds are `n_sigma` times each mode's std over the plan window; the
/// fully kept modes are exempt.
pub fn denoise(dec: &Decomposition, plan: &ReconstructionPlan) -> Result<UniformSeries> {
    plan.check(dec.mode_count())?;
    let n = dec.mode_count();
    let exempt: BTreeSet<usize> = (plan.m..=n).collect();
    let spec = mode_thresholds(
        dec,
        plan.n_sigma,
        &plan.sigma_window,
        &exempt,
        plan.modality,
    )?;
    let mut sum = kept_sum(dec, plan.m);
    for i in (plan.l..plan.m).rev() {
        let thresholded = apply(
            spec.modality,
            dec.imfs[i - 1].values(),
            spec.per_mode_thresholds[i - 1],
        )?;
        for (s, v) in sum.iter_mut().zip(&thresholded) {
            *s += v;
        }
    }
    dec.residue.with_values(sum)
}

/// EEMD followed by [`denoise`]; the plan is validated against the mode
/// count the ensemble selects.
pub fn denoise_pipeline(
    signal: &UniformSeries,
    ecfg: &EemdConfig,
    plan: &ReconstructionPlan,
) -> Result<(UniformSeries, EnsembleResult)> {
    plan.check_shape()?;
    let result = eemd(signal, ecfg)?;
    plan.check(result.selected_count)?;
    let denoised = denoise(&result.modes, plan)?;
    Ok((denoised, result))
}
