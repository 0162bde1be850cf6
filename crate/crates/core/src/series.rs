//! Uniformly sampled time series and the windowed statistics built on it.

use std::ops::Range;

use crate::error::{invalid_arg, Result};

/// Tolerance, in samples, used when mapping window times onto sample indices.
const INDEX_EPS: f64 = 1e-9;

/// A uniformly sampled real-valued series.
///
/// Sample `k` sits at `t0 + k * dt`. Construction guarantees `dt > 0`,
/// at least two samples, and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return invalid_arg(format!(
                "sampling interval must be positive and finite, got {dt}"
            ));
        }
        if !t0.is_finite() {
            return invalid_arg("start time must be finite");
        }
        if values.len() < 2 {
            return invalid_arg(format!(
                "series needs at least 2 samples, got {}",
                values.len()
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return invalid_arg(format!("sample {k} is not finite"));
        }
        Ok(Self { t0, dt, values })
    }

    /// Builds a series from a sampling rate in Hz.
    pub fn from_rate(t0: f64, sample_rate: f64, values: Vec<f64>) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return invalid_arg(format!("sample rate must be positive, got {sample_rate}"));
        }
        Self::new(t0, 1.0 / sample_rate, values)
    }

    /// Same grid as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return invalid_arg(format!(
                "length mismatch: grid has {} samples, values have {}",
                self.values.len(),
                values.len()
            ));
        }
        Self::new(self.t0, self.dt, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.time(k))
    }

    /// True when both series share start time, interval and length.
    pub fn same_grid(&self, other: &UniformSeries) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.values.len() == other.values.len()
    }

    /// Index range of the samples whose times fall inside `w` (inclusive ends).
    pub fn window_indices(&self, w: &TimeWindow) -> Result<Range<usize>> {
        let span_eps = INDEX_EPS * self.dt;
        if w.start < self.t0 - span_eps || w.end > self.t_end() + span_eps {
            return invalid_arg(format!(
                "window [{}, {}] s lies outside the series span [{}, {}] s",
                w.start,
                w.end,
                self.t0,
                self.t_end()
            ));
        }
        let lo = ((w.start - self.t0) / self.dt - INDEX_EPS).ceil().max(0.0) as usize;
        let hi = ((w.end - self.t0) / self.dt + INDEX_EPS).floor() as usize;
        let hi = hi.min(self.values.len() - 1);
        if hi < lo {
            return Ok(lo..lo);
        }
        Ok(lo..hi + 1)
    }
}

/// A closed time interval `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || start >= end {
            return invalid_arg(format!(
                "time window needs start < end, got [{start}, {end}]"
            ));
        }
        Ok(Self { start, end })
    }
}

impl std::str::FromStr for TimeWindow {
    type Err = crate::Error;

    /// Parses `start:end`, e.g. `0.05:0.95`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(':').ok_or_else(|| {
            crate::Error::InvalidArgument(format!("expected start:end, got {s:?}"))
        })?;
        let parse = |x: &str| {
            x.trim().parse::<f64>().map_err(|_| {
                crate::Error::InvalidArgument(format!("bad time {x:?} in window {s:?}"))
            })
        };
        TimeWindow::new(parse(a)?, parse(b)?)
    }
}

/// Plain decimation: keeps samples `0, factor, 2*factor, ...`.
///
/// No anti-alias filtering is applied.
pub fn downsample(series: &UniformSeries, factor: usize) -> Result<UniformSeries> {
    if factor == 0 {
        return invalid_arg("down-sampling factor must be at least 1");
    }
    if factor >= series.len() {
        return invalid_arg(format!(
            "down-sampling factor {factor} is not smaller than the series length {}",
            series.len()
        ));
    }
    let values: Vec<f64> = series.values.iter().step_by(factor).copied().collect();
    UniformSeries::new(series.t0, series.dt * factor as f64, values)
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_std(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return invalid_arg(format!(
            "standard deviation needs at least 2 samples, got {n}"
        ));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

/// Sample standard deviation of the samples lying in `w`.
pub fn window_std(series: &UniformSeries, w: &TimeWindow) -> Result<f64> {
    let range = series.window_indices(w)?;
    if range.len() < 2 {
        return invalid_arg(format!(
            "window [{}, {}] s holds {} sample(s), need at least 2",
            w.start,
            w.end,
            range.len()
        ));
    }
    sample_std(&series.values[range])
}

/// Splits the index range into maximal runs between sign changes.
///
/// A new segment starts at the first nonzero sample whose sign differs from
/// the last nonzero sample seen. Exact zeros therefore stay with the segment
/// on their left; leading zeros belong to the first segment.
pub fn sign_segments(values: &[f64]) -> Vec<Range<usize>> {
    let mut segments = Vec::new();
    if values.is_empty() {
        return segments;
    }
    let mut start = 0;
    let mut last_sign = 0.0_f64;
    for (k, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let sign = v.signum();
        if last_sign != 0.0 && sign != last_sign {
            segments.push(start..k);
            start = k;
        }
        last_sign = sign;
    }
    segments.push(start..values.len());
    segments
}

/// Zero-crossing partition of a series; see [`sign_segments`].
pub fn zero_crossing_segments(series: &UniformSeries) -> Vec<Range<usize>> {
    sign_segments(series.values())
}

/// Number of sign changes, counted with the same zero convention as
/// [`sign_segments`].
pub fn zero_crossings(values: &[f64]) -> usize {
    sign_segments(values).len().saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn series(values: Vec<f64>) -> UniformSeries {
        UniformSeries::new(0.0, 1.0, values).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(UniformSeries::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(UniformSeries::new(0.0, -1.0, vec![1.0, 2.0]).is_err());
        assert!(UniformSeries::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(UniformSeries::new(0.0, 1.0, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn downsample_identity_and_selection() {
        let s = series(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(downsample(&s, 1).unwrap(), s);
        let d = downsample(&s, 2).unwrap();
        assert_eq!(d.values(), &[0.0, 2.0, 4.0]);
        assert_eq!(d.dt(), 2.0);
        assert!(downsample(&s, 0).is_err());
        assert!(downsample(&s, 6).is_err());
    }

    #[test]
    fn downsample_200k_to_20k() {
        let s = UniformSeries::from_rate(0.0, 200_000.0, vec![0.0; 2000]).unwrap();
        let d = downsample(&s, 10).unwrap();
        assert!((d.sample_rate() - 20_000.0).abs() < 1e-6);
        assert_eq!(d.len(), 200);
    }

    #[test]
    fn window_std_cases() {
        let s = series(vec![2.0; 10]);
        let w = TimeWindow::new(1.0, 5.0).unwrap();
        assert_eq!(window_std(&s, &w).unwrap(), 0.0);

        let s = series(vec![0.0, 1.0, 3.0, 0.0]);
        let w = TimeWindow::new(1.0, 2.0).unwrap();
        assert!((window_std(&s, &w).unwrap() - 2f64.sqrt()).abs() < 1e-15);

        let w = TimeWindow::new(1.2, 1.8).unwrap();
        assert!(window_std(&s, &w).is_err());
        let w = TimeWindow::new(1.0, 1.5).unwrap();
        assert!(window_std(&s, &w).is_err());
        let w = TimeWindow::new(-1.0, 2.0).unwrap();
        assert!(window_std(&s, &w).is_err());
    }

    #[test]
    fn window_indices_at_20khz() {
        let s = UniformSeries::from_rate(0.0, 20_000.0, vec![0.0; 40_000]).unwrap();
        let r = s
            .window_indices(&TimeWindow::new(1.70, 1.75).unwrap())
            .unwrap();
        assert_eq!(r, 34_000..35_001);
        let r = s
            .window_indices(&TimeWindow::new(0.05, 0.95).unwrap())
            .unwrap();
        assert_eq!(r, 1_000..19_001);
    }

    #[test]
    fn time_window_parsing() {
        let w: TimeWindow = "0.05:0.95".parse().unwrap();
        assert_eq!(
            w,
            TimeWindow {
                start: 0.05,
                end: 0.95
            }
        );
        assert!("0.95:0.05".parse::<TimeWindow>().is_err());
        assert!("0.05".parse::<TimeWindow>().is_err());
    }

    /// Reference partition: a crossing sits before sample k when k is nonzero
    /// and its sign differs from the closest nonzero sample before it.
    fn brute_segments(v: &[f64]) -> Vec<Range<usize>> {
        let mut cuts = vec![0];
        for k in 1..v.len() {
            if v[k] == 0.0 {
                continue;
            }
            if let Some(prev) = v[..k].iter().rev().find(|x| **x != 0.0) {
                if prev * v[k] < 0.0 {
                    cuts.push(k);
                }
            }
        }
        cuts.push(v.len());
        cuts.windows(2).map(|c| c[0]..c[1]).collect()
    }

    #[test]
    fn segments_examples() {
        assert_eq!(sign_segments(&[1.0, 2.0, 3.0]), vec![0..3]);
        assert_eq!(sign_segments(&[1.0, -1.0, 1.0]), vec![0..1, 1..2, 2..3]);
        // zeros join the segment on their left
        assert_eq!(sign_segments(&[1.0, 0.0, -1.0]), vec![0..2, 2..3]);
        assert_eq!(sign_segments(&[0.0, 0.0, -1.0, 0.0, 2.0]), vec![0..4, 4..5]);
        assert_eq!(sign_segments(&[0.0, 0.0]), vec![0..2]);
    }

    #[test]
    fn one_period_has_three_segments() {
        // phase-shifted so that neither end sample is an exact zero
        let n = 10_000;
        let v: Vec<f64> = (0..n)
            .map(|k| (2.0 * PI * k as f64 / (n - 1) as f64 + 0.3).sin())
            .collect();
        let segs = sign_segments(&v);
        assert_eq!(segs, brute_segments(&v));
        assert_eq!(segs.len(), 3);
    }

    proptest! {
        #[test]
        fn segments_partition_and_match_reference(
            v in prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 1..200)
        ) {
            let segs = sign_segments(&v);
            prop_assert_eq!(&segs, &brute_segments(&v));
            prop_assert_eq!(segs[0].start, 0);
            prop_assert_eq!(segs.last().unwrap().end, v.len());
            for w in segs.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
                prop_assert!(!w[0].is_empty());
            }
        }

        #[test]
        fn downsample_composes(
            v in prop::collection::vec(-1e3..1e3f64, 40..200),
            a in 1usize..4,
            b in 1usize..4,
        ) {
            let s = series(v);
            let direct = downsample(&s, a * b).unwrap();
            let chained = downsample(&downsample(&s, a).unwrap(), b).unwrap();
            prop_assert_eq!(direct.values(), chained.values());
        }

        #[test]
        fn window_std_shift_invariant(
            v in prop::collection::vec(-10.0..10.0f64, 10..100),
            c in -1e3..1e3f64,
        ) {
            let s = series(v.clone());
            let shifted = series(v.iter().map(|x| x + c).collect());
            let w = TimeWindow::new(0.0, (v.len() - 1) as f64).unwrap();
            let a = window_std(&s, &w).unwrap();
            let b = window_std(&shifted, &w).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0) * (1.0 + c.abs()));
        }
    }
}
