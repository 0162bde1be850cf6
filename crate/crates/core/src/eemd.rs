//! Ensemble EMD: decompose many white-noise perturbed copies of a signal and
//! average the modes of the members that share the most frequent mode count.
//!
//! Member `i` draws its noise from a ChaCha8 stream keyed by
//! `(master_seed, i)`, so results do not depend on how members are scheduled
//! across threads. Members are reduced in index order.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::emd::{emd_values, Decomposition, EmdConfig, RawDecomposition};
use crate::error::{invalid_arg, Error, Result};
use crate::series::{window_std, TimeWindow, UniformSeries};

/// Members decomposed concurrently before their results are folded in.
const WAVE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EemdConfig {
    /// Added noise std as a multiple of the window std of the signal.
    pub n_a: f64,
    /// Number of perturbed members drawn.
    pub n_e: usize,
    /// Window over which the signal std is measured.
    pub sigma_window: TimeWindow,
    pub master_seed: u64,
    pub emd: EmdConfig,
}

impl EemdConfig {
    pub fn new(sigma_window: TimeWindow) -> Self {
        Self {
            n_a: 0.1,
            n_e: 1000,
            sigma_window,
            master_seed: 0,
            emd: EmdConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_a > 0.0) || !self.n_a.is_finite() {
            return invalid_arg(format!(
                "noise amplitude factor must be positive, got {}",
                self.n_a
            ));
        }
        if self.n_e == 0 {
            return invalid_arg("ensemble size must be at least 1");
        }
        self.emd.validate()
    }
}

/// Averaged modes plus the bookkeeping of the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Ensemble-averaged IMFs and residue. `sift_counts` holds the rounded
    /// mean sifting passes per mode.
    pub modes: Decomposition,
    /// Mode count -> number of members returning it.
    pub mode_count_histogram: BTreeMap<usize, usize>,
    pub selected_count: usize,
    pub retained: usize,
    /// Members with a different mode count, plus failed members.
    pub discarded: usize,
    /// Members whose decomposition failed outright (included in `discarded`).
    pub failed: usize,
    /// Whether several mode counts shared the top of the histogram.
    pub tie_broken: bool,
    /// Standard deviation of the added white noise.
    pub noise_std: f64,
    pub mean_sift_counts: Vec<f64>,
}

/// Random stream of ensemble member `member`.
pub fn member_rng(master_seed: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(member);
    rng
}

fn noisy_copy(values: &[f64], amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + amplitude * z
        })
        .collect()
}

/// `signal + w`, `w` i.i.d. Gaussian with std `amplitude`, drawn from `rng`.
pub fn perturb_with(
    signal: &UniformSeries,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Result<UniformSeries> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return invalid_arg(format!(
            "noise amplitude must be non-negative, got {amplitude}"
        ));
    }
    signal.with_values(noisy_copy(signal.values(), amplitude, rng))
}

/// Adds seeded white Gaussian noise of std `amplitude`.
pub fn perturb(signal: &UniformSeries, amplitude: f64, seed: u64) -> Result<UniformSeries> {
    perturb_with(signal, amplitude, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn run_member(
    values: &[f64],
    amplitude: f64,
    cfg: &EemdConfig,
    member: usize,
) -> Result<RawDecomposition> {
    let mut rng = member_rng(cfg.master_seed, member as u64);
    let y = noisy_copy(values, amplitude, &mut rng);
    emd_values(&y, &cfg.emd)
}

/// Runs members `range` concurrently, returning results in member order.
fn run_wave(
    values: &[f64],
    amplitude: f64,
    cfg: &EemdConfig,
    range: std::ops::Range<usize>,
) -> Vec<Result<RawDecomposition>> {
    range
        .into_par_iter()
        .map(|i| run_member(values, amplitude, cfg, i))
        .collect()
}

/// Running sums for all members sharing one mode count.
#[derive(Debug, Clone)]
struct Accumulator {
    /// IMF sums followed by the residue sum.
    sums: Vec<Vec<f64>>,
    sift_sums: Vec<f64>,
    members: usize,
}

impl Accumulator {
    fn new(modes: usize, len: usize) -> Self {
        Self {
            sums: vec![vec![0.0; len]; modes + 1],
            sift_sums: vec![0.0; modes],
            members: 0,
        }
    }

    fn add(&mut self, d: &RawDecomposition) {
        for (sum, mode) in self
            .sums
            .iter_mut()
            .zip(d.imfs.iter().chain(std::iter::once(&d.residue)))
        {
            for (s, v) in sum.iter_mut().zip(mode) {
                *s += v;
            }
        }
        for (s, c) in self.sift_sums.iter_mut().zip(&d.sift_counts) {
            *s += *c as f64;
        }
        self.members += 1;
    }

    fn mean(&self) -> Vec<Vec<f64>> {
        let n = self.members as f64;
        self.sums
            .iter()
            .map(|s| s.iter().map(|v| v / n).collect())
            .collect()
    }
}

/// Most frequent mode count; ties go to the smaller count.
fn select_count(histogram: &BTreeMap<usize, usize>) -> Option<(usize, bool)> {
    let top = *histogram.values().max()?;
    let mut winners = histogram.iter().filter(|(_, &v)| v == top).map(|(&k, _)| k);
    let first = winners.next()?;
    Some((first, winners.next().is_some()))
}

fn noise_amplitude(signal: &UniformSeries, cfg: &EemdConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.n_a * window_std(signal, &cfg.sigma_window)?)
}

/// Ensemble EMD of `signal`.
pub fn eemd(signal: &UniformSeries, cfg: &EemdConfig) -> Result<EnsembleResult> {
    let amplitude = noise_amplitude(signal, cfg)?;
    let values = signal.values();
    let len = values.len();

    let mut histogram = BTreeMap::new();
    let mut accumulators: BTreeMap<usize, Accumulator> = BTreeMap::new();
    let mut failed = 0;
    let mut start = 0;
    while start < cfg.n_e {
        let end = (start + WAVE).min(cfg.n_e);
        for outcome in run_wave(values, amplitude, cfg, start..end) {
            match outcome {
                Ok(d) => {
                    let count = d.imfs.len();
                    *histogram.entry(count).or_insert(0) += 1;
                    accumulators
                        .entry(count)
                        .or_insert_with(|| Accumulator::new(count, len))
                        .add(&d);
                }
                Err(_) => failed += 1,
            }
        }
        start = end;
    }

    if 2 * failed > cfg.n_e {
        return Err(Error::InvalidState(format!(
            "{failed} of {} ensemble members failed to decompose",
            cfg.n_e
        )));
    }
    let (selected, tie_broken) = select_count(&histogram)
        .ok_or_else(|| Error::InvalidState("no ensemble member decomposed".into()))?;
    if selected == 0 {
        return Err(Error::InvalidState(
            "the most frequent decomposition has no IMFs; the signal is a residue".into(),
        ));
    }
    let acc = &accumulators[&selected];
    let mut means = acc.mean();
    let residue = means.pop().expect("residue sum present");
    let mean_sift_counts: Vec<f64> = acc
        .sift_sums
        .iter()
        .map(|s| s / acc.members as f64)
        .collect();
    let raw = RawDecomposition {
        imfs: means,
        residue,
        sift_counts: mean_sift_counts
            .iter()
            .map(|c| c.round() as usize)
            .collect(),
    };
    Ok(EnsembleResult {
        modes: Decomposition::from_raw(signal, raw)?,
        mode_count_histogram: histogram,
        selected_count: selected,
        retained: acc.members,
        discarded: cfg.n_e - acc.members,
        failed,
        tie_broken,
        noise_std: amplitude,
        mean_sift_counts,
    })
}

fn norm_parts(next: &[f64], prev: &[f64]) -> (f64, f64) {
    next.iter().zip(prev).fold((0.0, 0.0), |(n, d), (a, b)| {
        (n + (a - b) * (a - b), d + a * a)
    })
}

/// `sum (imf_next - imf_prev)^2 / sum imf_next^2`, where `imf_next` is the
/// mode averaged over one more member than `imf_prev`.
pub fn convergence_norm(imf_prev: &UniformSeries, imf_next: &UniformSeries) -> Result<f64> {
    if !imf_prev.same_grid(imf_next) {
        return invalid_arg("convergence norm needs modes on the same grid");
    }
    let (num, den) = norm_parts(imf_next.values(), imf_prev.values());
    if den == 0.0 {
        return Err(Error::InvalidState(
            "convergence norm: the larger-ensemble mode is zero".into(),
        ));
    }
    Ok(num / den)
}

/// Per-mode convergence norms for a grid of ensemble sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// Ensemble sizes, counted in retained members.
    pub ne_values: Vec<usize>,
    pub selected_count: usize,
    /// `norms[row][mode]` for `ne_values[row]`; modes exclude the residue.
    pub norms: Vec<Vec<f64>>,
    /// Members drawn in total (retained or not).
    pub drawn: usize,
    pub mode_count_histogram: BTreeMap<usize, usize>,
}

impl ConvergenceTable {
    /// Norms of one mode (0-based) across the grid.
    pub fn mode_column(&self, mode: usize) -> Vec<f64> {
        self.norms.iter().map(|row| row[mode]).collect()
    }
}

/// Incremental convergence study.
///
/// Members are drawn in index order until the most frequent mode count has
/// `max(ne_values) + 1` members; `N_e` counts members of that mode count
/// only. For each grid value the norm compares the average over the first
/// `N_e` retained members with the average over the first `N_e + 1`.
/// `cfg.n_e` is ignored.
pub fn convergence_study(
    signal: &UniformSeries,
    cfg: &EemdConfig,
    ne_values: &[usize],
) -> Result<ConvergenceTable> {
    if ne_values.is_empty() {
        return invalid_arg("convergence study needs at least one ensemble size");
    }
    if ne_values[0] == 0 || ne_values.windows(2).any(|w| w[1] <= w[0]) {
        return invalid_arg("ensemble sizes must be positive and strictly ascending");
    }
    let amplitude = noise_amplitude(signal, cfg)?;
    let values = signal.values();
    let len = values.len();
    let target = *ne_values.last().expect("non-empty grid") + 1;
    let grid: BTreeSet<usize> = ne_values.iter().copied().collect();
    let max_draws = 50 * target;

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut accumulators: BTreeMap<usize, Accumulator> = BTreeMap::new();
    let mut rows: BTreeMap<usize, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut failed = 0;
    let mut drawn = 0;
    while histogram.values().copied().max().unwrap_or(0) < target {
        if drawn >= max_draws {
            return Err(Error::InvalidState(format!(
                "no mode count reached {target} members within {max_draws} draws"
            )));
        }
        let end = drawn + WAVE;
        for outcome in run_wave(values, amplitude, cfg, drawn..end) {
            let Ok(d) = outcome else {
                failed += 1;
                continue;
            };
            let count = d.imfs.len();
            *histogram.entry(count).or_insert(0) += 1;
            let acc = accumulators
                .entry(count)
                .or_insert_with(|| Accumulator::new(count, len));
            let n = acc.members;
            if grid.contains(&n) {
                let scale = 1.0 / (n as f64 + 1.0);
                let mut row = Vec::with_capacity(count);
                for (sum, mode) in acc.sums.iter().zip(&d.imfs) {
                    let (mut num, mut den) = (0.0, 0.0);
                    for (s, x) in sum.iter().zip(mode) {
                        let prev = s / n as f64;
                        let next = (s + x) * scale;
                        num += (next - prev) * (next - prev);
                        den += next * next;
                    }
                    if den == 0.0 {
                        return Err(Error::InvalidState(
                            "convergence norm: an averaged mode is identically zero".into(),
                        ));
                    }
                    row.push(num / den);
                }
                rows.entry(count).or_default().insert(n, row);
            }
            acc.add(&d);
        }
        drawn = end;
    }
    if 2 * failed > drawn {
        return Err(Error::InvalidState(format!(
            "{failed} of {drawn} ensemble members failed"
        )));
    }
    let (selected, _) = select_count(&histogram).expect("histogram is non-empty");
    if selected == 0 {
        return Err(Error::InvalidState(
            "the most frequent decomposition has no IMFs".into(),
        ));
    }
    let mut by_ne = rows.remove(&selected).unwrap_or_default();
    let norms = ne_values
        .iter()
        .map(|ne| {
            by_ne
                .remove(ne)
                .expect("every grid row is filled once the target is reached")
        })
        .collect();
    Ok(ConvergenceTable {
        ne_values: ne_values.to_vec(),
        selected_count: selected,
        norms,
        drawn,
        mode_count_histogram: histogram,
    })
}
