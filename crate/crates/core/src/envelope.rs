//! Extrema detection, edge mirroring and envelope interpolation used by sifting.

use crate::error::{invalid_arg, Result};

/// A single envelope knot: sample index (possibly outside `0..n` once mirrored)
/// and the value it carries.
pub type Knot = (isize, f64);

/// Number of extrema reflected at each edge during sifting.
pub const MIRROR_COUNT: usize = 3;

/// Local maxima and minima of a sample sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtremaSet {
    pub maxima: Vec<Knot>,
    pub minima: Vec<Knot>,
    /// Set when the first and last samples were added to both lists.
    pub endpoints_forced: bool,
}

impl ExtremaSet {
    /// Adds the first and last samples to both knot lists.
    pub fn force_endpoints(mut self, values: &[f64]) -> Self {
        let last = values.len() - 1;
        let first_knot = (0, values[0]);
        let last_knot = (last as isize, values[last]);
        for list in [&mut self.maxima, &mut self.minima] {
            list.insert(0, first_knot);
            list.push(last_knot);
        }
        self.endpoints_forced = true;
        self
    }
}

/// Interior extrema by neighbour comparison.
///
/// A plateau (run of equal samples) above both flanks is a single maximum at
/// its midpoint, taking the lower middle index for even runs; likewise for
/// minima. Runs touching either end are never extrema.
pub fn find_extrema(values: &[f64]) -> Result<ExtremaSet> {
    let n = values.len();
    if n < 3 {
        return invalid_arg(format!(
            "extrema detection needs at least 3 samples, got {n}"
        ));
    }
    let mut set = ExtremaSet::default();
    let mut a = 1;
    while a < n - 1 {
        let v = values[a];
        let mut b = a;
        while b + 1 < n && values[b + 1] == v {
            b += 1;
        }
        if b < n - 1 {
            let left = values[a - 1];
            let right = values[b + 1];
            let mid = ((a + b) / 2) as isize;
            if v > left && v > right {
                set.maxima.push((mid, v));
            } else if v < left && v < right {
                set.minima.push((mid, v));
            }
        }
        a = b + 1;
    }
    Ok(set)
}

/// Count of interior maxima and minima, without allocating knot lists.
pub fn count_extrema(values: &[f64]) -> (usize, usize) {
    let n = values.len();
    let (mut maxima, mut minima) = (0, 0);
    if n < 3 {
        return (0, 0);
    }
    let mut a = 1;
    while a < n - 1 {
        let v = values[a];
        let mut b = a;
        while b + 1 < n && values[b + 1] == v {
            b += 1;
        }
        if b < n - 1 {
            if v > values[a - 1] && v > values[b + 1] {
                maxima += 1;
            } else if v < values[a - 1] && v < values[b + 1] {
                minima += 1;
            }
        }
        a = b + 1;
    }
    (maxima, minima)
}

fn mirror_list(knots: &[Knot], count: usize, last: isize) -> Vec<Knot> {
    let k = count.min(knots.len());
    let mut out = Vec::with_capacity(knots.len() + 2 * k);
    out.extend(knots[..k].iter().rev().map(|&(i, v)| (-i, v)));
    out.extend_from_slice(knots);
    out.extend(
        knots[knots.len() - k..]
            .iter()
            .rev()
            .map(|&(i, v)| (2 * last - i, v)),
    );
    out
}

/// Reflects the first and last `count` maxima and minima about the end
/// samples (index 0 and `len - 1`), keeping their values.
///
/// Knots already sitting on an end sample reflect onto themselves and are
/// not duplicated.
pub fn mirror_edges(extrema: &ExtremaSet, count: usize, len: usize) -> Result<ExtremaSet> {
    if extrema.maxima.is_empty() || extrema.minima.is_empty() {
        return invalid_arg("edge mirroring needs at least one maximum and one minimum");
    }
    if len < 2 {
        return invalid_arg("edge mirroring needs a series of at least 2 samples");
    }
    let last = len as isize - 1;
    let dedup = |mut v: Vec<Knot>| {
        v.dedup_by_key(|k| k.0);
        v
    };
    Ok(ExtremaSet {
        maxima: dedup(mirror_list(&extrema.maxima, count, last)),
        minima: dedup(mirror_list(&extrema.minima, count, last)),
        endpoints_forced: extrema.endpoints_forced,
    })
}

/// Interpolates the knots at indices `0..n`.
///
/// Four or more knots use a natural cubic spline, three knots the unique
/// parabola, two knots a straight line.
pub fn envelope_curve(knots: &[Knot], n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    envelope_into(knots, &mut out)?;
    Ok(out)
}

/// [`envelope_curve`] writing into a caller-provided buffer.
pub fn envelope_into(knots: &[Knot], out: &mut [f64]) -> Result<()> {
    if knots.len() < 2 {
        return invalid_arg(format!(
            "envelope needs at least 2 knots, got {}",
            knots.len()
        ));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return invalid_arg("envelope knots must have strictly increasing indices");
    }
    match knots.len() {
        2 => {
            let (x0, y0) = (knots[0].0 as f64, knots[0].1);
            let (x1, y1) = (knots[1].0 as f64, knots[1].1);
            let slope = (y1 - y0) / (x1 - x0);
            for (k, o) in out.iter_mut().enumerate() {
                *o = y0 + slope * (k as f64 - x0);
            }
        }
        3 => {
            // Newton form of the interpolating parabola
            let (x0, y0) = (knots[0].0 as f64, knots[0].1);
            let (x1, y1) = (knots[1].0 as f64, knots[1].1);
            let (x2, y2) = (knots[2].0 as f64, knots[2].1);
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            let d012 = (d12 - d01) / (x2 - x0);
            for (k, o) in out.iter_mut().enumerate() {
                let x = k as f64;
                *o = y0 + (x - x0) * (d01 + (x - x1) * d012);
            }
        }
        _ => NaturalSpline::new(knots).eval_grid(out),
    }
    Ok(())
}

/// Natural cubic spline through integer-indexed knots.
struct NaturalSpline<'a> {
    knots: &'a [Knot],
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl<'a> NaturalSpline<'a> {
    fn new(knots: &'a [Knot]) -> Self {
        let n = knots.len();
        let h: Vec<f64> = knots.windows(2).map(|w| (w[1].0 - w[0].0) as f64).collect();
        let mut m = vec![0.0; n];
        // Thomas algorithm on the interior equations; m[0] = m[n-1] = 0.
        let inner = n - 2;
        let mut c_prime = vec![0.0; inner];
        let mut d_prime = vec![0.0; inner];
        for j in 0..inner {
            let i = j + 1;
            let a = h[i - 1];
            let b = 2.0 * (h[i - 1] + h[i]);
            let c = h[i];
            let d = 6.0
                * ((knots[i + 1].1 - knots[i].1) / h[i] - (knots[i].1 - knots[i - 1].1) / h[i - 1]);
            if j == 0 {
                c_prime[j] = c / b;
                d_prime[j] = d / b;
            } else {
                let denom = b - a * c_prime[j - 1];
                c_prime[j] = c / denom;
                d_prime[j] = (d - a * d_prime[j - 1]) / denom;
            }
        }
        for j in (0..inner).rev() {
            let next = if j + 1 < inner { m[j + 2] } else { 0.0 };
            m[j + 1] = d_prime[j] - c_prime[j] * next;
        }
        Self { knots, m }
    }

    fn eval_grid(&self, out: &mut [f64]) {
        let knots = self.knots;
        let last_seg = knots.len() - 2;
        let mut seg = 0;
        for (k, o) in out.iter_mut().enumerate() {
            let x = k as isize;
            while seg < last_seg && x > knots[seg + 1].0 {
                seg += 1;
            }
            *o = self.eval_segment(seg, k as f64);
        }
    }

    fn eval_segment(&self, i: usize, x: f64) -> f64 {
        let (x0, y0) = (self.knots[i].0 as f64, self.knots[i].1);
        let (x1, y1) = (self.knots[i + 1].0 as f64, self.knots[i + 1].1);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * y0
            + b * y1
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Outcome of envelope construction for one sifting step.
pub(crate) fn envelope_knots(values: &[f64], first_iteration: bool) -> Result<Option<ExtremaSet>> {
    let ext = find_extrema(values)?;
    if ext.maxima.is_empty() || ext.minima.is_empty() {
        return Ok(None);
    }
    if first_iteration {
        Ok(Some(ext.force_endpoints(values)))
    } else {
        Ok(Some(mirror_edges(&ext, MIRROR_COUNT, values.len())?))
    }
}

/// Point-wise mean of the upper and lower envelopes.
///
/// On the first sifting iteration the end samples are forced into both knot
/// lists; afterwards three extrema are mirrored at each edge. Returns
/// `Ok(None)` when the signal lacks an interior maximum or minimum, which the
/// caller treats as "this is a residue".
pub fn mean_envelope(values: &[f64], first_iteration: bool) -> Result<Option<Vec<f64>>> {
    let Some(knots) = envelope_knots(values, first_iteration)? else {
        return Ok(None);
    };
    let n = values.len();
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    envelope_into(&knots.maxima, &mut upper)?;
    envelope_into(&knots.minima, &mut lower)?;
    for (u, l) in upper.iter_mut().zip(&lower) {
        *u = 0.5 * (*u + l);
    }
    Ok(Some(upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn monotone_has_no_extrema() {
        let v: Vec<f64> = (0..50).map(|k| k as f64 * 0.3).collect();
        let e = find_extrema(&v).unwrap();
        assert!(e.maxima.is_empty() && e.minima.is_empty());
        assert!(find_extrema(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn sine_period_extrema() {
        let n = 1001;
        let v: Vec<f64> = (0..n)
            .map(|k| (2.0 * PI * k as f64 / 1000.0).sin())
            .collect();
        let e = find_extrema(&v).unwrap();
        assert_eq!(e.maxima.len(), 1);
        assert_eq!(e.minima.len(), 1);
        assert_eq!(e.maxima[0].0, 250);
        assert_eq!(e.minima[0].0, 750);
    }

    #[test]
    fn plateau_midpoint() {
        let e = find_extrema(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.maxima, vec![(1, 1.0)]);
        assert!(e.minima.is_empty());
        let e = find_extrema(&[3.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.minima, vec![(2, 1.0)]);
        // a shelf is not an extremum
        let e = find_extrema(&[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(e.maxima.is_empty() && e.minima.is_empty());
    }

    #[test]
    fn mirror_arithmetic() {
        let ext = ExtremaSet {
            maxima: vec![(10, 1.0), (30, 2.0), (50, 3.0)],
            minima: vec![(20, -1.0)],
            endpoints_forced: false,
        };
        let m = mirror_edges(&ext, 3, 100).unwrap();
        let idx: Vec<isize> = m.maxima.iter().map(|k| k.0).collect();
        assert_eq!(idx, vec![-50, -30, -10, 10, 30, 50, 148, 168, 188]);
        assert_eq!(m.maxima[0].1, 3.0);

        let ext = ExtremaSet {
            maxima: vec![(70, 1.0), (90, 2.0)],
            minima: vec![(80, -1.0)],
            endpoints_forced: false,
        };
        let m = mirror_edges(&ext, 3, 100).unwrap();
        let right: Vec<isize> = m.maxima.iter().map(|k| k.0).filter(|&i| i > 99).collect();
        assert_eq!(right, vec![108, 128]);
        assert_eq!(m.maxima.len(), 6);

        assert!(mirror_edges(&ExtremaSet::default(), 3, 100).is_err());
    }

    #[test]
    fn reflecting_twice_is_identity() {
        let knots: Vec<Knot> = vec![(4, 1.0), (17, 0.5), (40, 2.0), (61, 1.5)];
        let last = 70;
        let m = mirror_list(&knots, 3, last);
        let back_left: Vec<isize> = m[..3].iter().rev().map(|k| -k.0).collect();
        assert_eq!(back_left, vec![4, 17, 40]);
        let back_right: Vec<isize> = m[7..].iter().rev().map(|k| 2 * last - k.0).collect();
        assert_eq!(back_right, vec![17, 40, 61]);
    }

    #[test]
    fn parabola_and_line_cases() {
        let line = envelope_curve(&[(0, 1.0), (5, 2.0), (10, 3.0)], 11).unwrap();
        for (k, v) in line.iter().enumerate() {
            assert!((v - (1.0 + 0.2 * k as f64)).abs() < 1e-12);
        }
        let q = |x: f64| x * x;
        let par = envelope_curve(&[(-3, q(-3.0)), (4, q(4.0)), (9, q(9.0))], 12).unwrap();
        for (k, v) in par.iter().enumerate() {
            assert!((v - q(k as f64)).abs() < 1e-10, "{k}: {v}");
        }
        let two = envelope_curve(&[(2, 0.0), (4, 1.0)], 6).unwrap();
        assert!((two[0] + 1.0).abs() < 1e-15 && (two[5] - 1.5).abs() < 1e-15);
        assert!(envelope_curve(&[(1, 0.0)], 4).is_err());
        assert!(envelope_curve(&[(1, 0.0), (1, 1.0)], 4).is_err());
    }

    #[test]
    fn spline_interpolates_knots() {
        let knots: Vec<Knot> = vec![(0, 1.0), (3, -2.0), (7, 0.5), (12, 4.0), (20, -1.0)];
        let curve = envelope_curve(&knots, 21).unwrap();
        for &(i, v) in &knots {
            assert!((curve[i as usize] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_is_natural_and_reproduces_lines() {
        let knots: Vec<Knot> = (0..8)
            .map(|i| (i * 5 - 10, 3.0 - 0.25 * (i * 5 - 10) as f64))
            .collect();
        let curve = envelope_curve(&knots, 26).unwrap();
        for (k, v) in curve.iter().enumerate() {
            assert!((v - (3.0 - 0.25 * k as f64)).abs() < 1e-12);
        }
    }

    fn sine(n: usize, period: f64, offset: f64) -> Vec<f64> {
        (0..n)
            .map(|k| (2.0 * PI * k as f64 / period).sin() + offset)
            .collect()
    }

    #[test]
    fn sine_mean_envelope_near_zero() {
        let v = sine(4000, 97.3, 0.0);
        let m = mean_envelope(&v, false).unwrap().unwrap();
        let central = &m[400..3600];
        let worst = central.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(worst < 0.01, "max |mean| = {worst}");
    }

    #[test]
    fn sine_plus_constant_mean_envelope() {
        let c = 2.5;
        let v = sine(4000, 97.3, c);
        let m = mean_envelope(&v, false).unwrap().unwrap();
        for x in &m[400..3600] {
            assert!((x - c).abs() < 0.01 * c);
        }
    }

    #[test]
    fn first_iteration_anchors_endpoints() {
        let v: Vec<f64> = (0..2000)
            .map(|k| (2.0 * PI * k as f64 / 150.0).sin() + 10.0 * k as f64 / 2000.0)
            .collect();
        let m = mean_envelope(&v, true).unwrap().unwrap();
        assert_eq!(m[0], v[0]);
        assert!((m[1999] - v[1999]).abs() < 1e-12);
    }

    #[test]
    fn no_extrema_is_residue() {
        let v: Vec<f64> = (0..100).map(|k| (k as f64).sqrt()).collect();
        assert!(mean_envelope(&v, false).unwrap().is_none());
        assert!(mean_envelope(&v, true).unwrap().is_none());
    }

    proptest! {
        #[test]
        fn envelopes_bound_signal_at_knots(
            v in prop::collection::vec(-10.0..10.0f64, 20..300),
            first in any::<bool>(),
        ) {
            if let Some(knots) = envelope_knots(&v, first).unwrap() {
                let upper = envelope_curve(&knots.maxima, v.len()).unwrap();
                let lower = envelope_curve(&knots.minima, v.len()).unwrap();
                for &(i, _) in knots.maxima.iter().filter(|k| k.0 >= 0 && (k.0 as usize) < v.len()) {
                    prop_assert!((upper[i as usize] - v[i as usize]).abs() <= 1e-9 * (1.0 + v[i as usize].abs()));
                }
                for &(i, _) in knots.minima.iter().filter(|k| k.0 >= 0 && (k.0 as usize) < v.len()) {
                    prop_assert!((lower[i as usize] - v[i as usize]).abs() <= 1e-9 * (1.0 + v[i as usize].abs()));
                }
            }
        }

        #[test]
        fn mean_envelope_commutes_with_offset(
            v in prop::collection::vec(-10.0..10.0f64, 20..300),
            c in -100.0..100.0f64,
            first in any::<bool>(),
        ) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = mean_envelope(&v, first).unwrap();
            let b = mean_envelope(&shifted, first).unwrap();
            prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x + c - y).abs() < 1e-10 * (1.0 + c.abs()).max(x.abs()));
                }
            }
        }
    }
}
