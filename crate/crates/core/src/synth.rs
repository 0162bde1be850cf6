//! Synthetic benchmark: imposed descent trajectory, a three-part clean force
//! (ramp, Gaussian pulse, inertial load) and structured background noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_arg, Result};
use crate::series::{TimeWindow, UniformSeries};

/// Vertical law of motion: accelerate, coast, decelerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryParams {
    /// Plateau speed, m/s.
    pub v_const: f64,
    /// Displacement during acceleration, m.
    pub s_accel: f64,
    /// Displacement at constant speed, m.
    pub s_const: f64,
    /// Displacement during deceleration, m.
    pub s_decel: f64,
    /// Clearance above the water at rest, m.
    pub start_height: f64,
    /// Time at which the motion starts, s.
    pub t_motion_start: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            v_const: 0.45,
            s_accel: 0.15,
            s_const: 0.05,
            s_decel: 0.15,
            start_height: 0.20,
            t_motion_start: 1.0,
        }
    }
}

/// Instantaneous kinematic state: displacement, velocity, acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub z: f64,
    pub v: f64,
    pub a: f64,
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.v_const, self.s_accel, self.s_const, self.s_decel];
        if fields.iter().any(|x| !(*x > 0.0)) {
            return invalid_arg("trajectory speed and displacements must be positive");
        }
        if !(self.start_height >= 0.0) || !self.t_motion_start.is_finite() {
            return invalid_arg("trajectory start height and start time must be valid");
        }
        Ok(())
    }

    pub fn accel_duration(&self) -> f64 {
        2.0 * self.s_accel / self.v_const
    }

    pub fn const_duration(&self) -> f64 {
        self.s_const / self.v_const
    }

    pub fn decel_duration(&self) -> f64 {
        2.0 * self.s_decel / self.v_const
    }

    pub fn total_displacement(&self) -> f64 {
        self.s_accel + self.s_const + self.s_decel
    }

    /// Time at which the displacement reaches `start_height`.
    pub fn contact_time(&self) -> f64 {
        let z = self.start_height;
        let t_acc = self.accel_duration();
        if z <= self.s_accel {
            return bisect(
                |t| self.state(t).z - z,
                self.t_motion_start,
                self.t_motion_start + t_acc,
            );
        }
        if z <= self.s_accel + self.s_const {
            return self.t_motion_start + t_acc + (z - self.s_accel) / self.v_const;
        }
        let t2 = self.t_motion_start + t_acc + self.const_duration();
        bisect(|t| self.state(t).z - z, t2, t2 + self.decel_duration())
    }

    pub fn motion_end(&self) -> f64 {
        self.t_motion_start + self.accel_duration() + self.const_duration() + self.decel_duration()
    }

    /// Closed-form state at time `t`.
    ///
    /// Both speed changes use a raised-cosine acceleration
    /// `a(tau) = (A/2) (1 - cos(2 pi tau / T))` with `A = 2 v / T`, which
    /// starts and ends at zero and integrates to the plateau speed exactly.
    pub fn state(&self, t: f64) -> Kinematics {
        let v0 = self.v_const;
        let t1 = self.accel_duration();
        let t2 = self.const_duration();
        let t3 = self.decel_duration();
        let tau = t - self.t_motion_start;
        if tau <= 0.0 {
            return Kinematics {
                z: 0.0,
                v: 0.0,
                a: 0.0,
            };
        }
        if tau < t1 {
            let k = raised_cosine(v0, t1, tau);
            return k;
        }
        let tau = tau - t1;
        if tau < t2 {
            return Kinematics {
                z: self.s_accel + v0 * tau,
                v: v0,
                a: 0.0,
            };
        }
        let tau = tau - t2;
        let base = self.s_accel + self.s_const;
        if tau < t3 {
            let k = raised_cosine(v0, t3, tau);
            return Kinematics {
                z: base + v0 * tau - k.z,
                v: v0 - k.v,
                a: -k.a,
            };
        }
        Kinematics {
            z: self.total_displacement(),
            v: 0.0,
            a: 0.0,
        }
    }
}

/// Raised-cosine speed-up from rest to `dv` over `period`, evaluated at `tau`.
fn raised_cosine(dv: f64, period: f64, tau: f64) -> Kinematics {
    let peak = 2.0 * dv / period;
    let w = 2.0 * PI / period;
    let (s, c) = (w * tau).sin_cos();
    Kinematics {
        a: 0.5 * peak * (1.0 - c),
        v: 0.5 * peak * (tau - s / w),
        z: 0.5 * peak * (0.5 * tau * tau + (c - 1.0) / (w * w)),
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    if !(sample_rate > 0.0) || !(duration > 0.0) {
        return invalid_arg("sample rate and duration must be positive");
    }
    let n = (duration * sample_rate).round() as usize;
    if n < 2 {
        return invalid_arg("grid needs at least two samples");
    }
    Ok(n)
}

/// Displacement, velocity and acceleration sampled on `[0, duration)`.
pub fn trajectory(
    p: &TrajectoryParams,
    sample_rate: f64,
    duration: f64,
) -> Result<(UniformSeries, UniformSeries, UniformSeries)> {
    p.validate()?;
    let n = sample_count(sample_rate, duration)?;
    let dt = 1.0 / sample_rate;
    if (n - 1) as f64 * dt < p.motion_end() {
        return invalid_arg(format!(
            "duration {duration} s ends before the motion does ({} s)",
            p.motion_end()
        ));
    }
    let states: Vec<Kinematics> = (0..n).map(|k| p.state(k as f64 * dt)).collect();
    let z = UniformSeries::new(0.0, dt, states.iter().map(|s| s.z).collect())?;
    let v = UniformSeries::new(0.0, dt, states.iter().map(|s| s.v).collect())?;
    let a = UniformSeries::new(0.0, dt, states.iter().map(|s| s.a).collect())?;
    Ok((z, v, a))
}

/// Parameters of the clean synthetic force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub duration: f64,
    pub sample_rate: f64,
    pub ramp_start: f64,
    pub ramp_end: f64,
    pub ramp_level: f64,
    pub pulse_center: f64,
    pub pulse_amplitude: f64,
    /// Standard deviation of the Gaussian pulse, s.
    pub pulse_width: f64,
    pub mass: f64,
    pub trajectory: TrajectoryParams,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let trajectory = TrajectoryParams::default();
        Self {
            duration: 2.8,
            sample_rate: 20_000.0,
            ramp_start: trajectory.contact_time(),
            ramp_end: trajectory.motion_end(),
            ramp_level: 40.0,
            pulse_center: 2.0,
            pulse_amplitude: 25.0,
            pulse_width: 0.004,
            mass: 10.0,
            trajectory,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        sample_count(self.sample_rate, self.duration)?;
        if !(self.ramp_start < self.ramp_end && self.ramp_end <= self.duration) {
            return invalid_arg("ramp needs ramp_start < ramp_end <= duration");
        }
        if !(self.pulse_center >= 0.0 && self.pulse_center <= self.duration) {
            return invalid_arg("pulse center lies outside the record");
        }
        if !(self.pulse_width > 0.0) {
            return invalid_arg("pulse width must be positive");
        }
        if !self.mass.is_finite()
            || !self.ramp_level.is_finite()
            || !self.pulse_amplitude.is_finite()
        {
            return invalid_arg("mass and amplitudes must be finite");
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn ramp(&self, t: f64) -> f64 {
        if t <= self.ramp_start {
            0.0
        } else if t >= self.ramp_end {
            self.ramp_level
        } else {
            self.ramp_level * (t - self.ramp_start) / (self.ramp_end - self.ramp_start)
        }
    }

    pub fn pulse(&self, t: f64) -> f64 {
        let x = (t - self.pulse_center) / self.pulse_width;
        self.pulse_amplitude * (-0.5 * x * x).exp()
    }

    pub fn inertial(&self, t: f64) -> f64 {
        self.mass * self.trajectory.state(t).a
    }

    /// Window of `half_width` seconds either side of the pulse centre.
    pub fn pulse_window(&self, half_width: f64) -> Result<TimeWindow> {
        TimeWindow::new(
            self.pulse_center - half_width,
            self.pulse_center + half_width,
        )
    }
}

/// The three clean components, each on the benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalComponents {
    pub ramp: UniformSeries,
    pub pulse: UniformSeries,
    pub inertial: UniformSeries,
}

/// Clean force and its components.
pub fn synth_signal(spec: &SyntheticSpec) -> Result<(UniformSeries, SignalComponents)> {
    spec.validate()?;
    let n = spec.samples();
    let dt = 1.0 / spec.sample_rate;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let ramp: Vec<f64> = times.iter().map(|&t| spec.ramp(t)).collect();
    let pulse: Vec<f64> = times.iter().map(|&t| spec.pulse(t)).collect();
    let inertial: Vec<f64> = times.iter().map(|&t| spec.inertial(t)).collect();
    let clean: Vec<f64> = (0..n).map(|k| ramp[k] + pulse[k] + inertial[k]).collect();
    Ok((
        UniformSeries::new(0.0, dt, clean)?,
        SignalComponents {
            ramp: UniformSeries::new(0.0, dt, ramp)?,
            pulse: UniformSeries::new(0.0, dt, pulse)?,
            inertial: UniformSeries::new(0.0, dt, inertial)?,
        },
    ))
}

/// Length of the cosine taper at the edges of the high-variance window, s.
pub const HETERO_TAPER: f64 = 0.05;

/// Background noise: a white Gaussian floor, random-phase tones, and a
/// time window where the floor is amplified.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub base_std: f64,
    /// `(frequency in Hz, amplitude)` pairs.
    pub tones: Vec<(f64, f64)>,
    pub hetero_window: TimeWindow,
    /// Multiplier of the white floor inside `hetero_window`.
    pub hetero_gain: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            base_std: 2.0,
            tones: vec![
                (16.0, 0.3),
                (27.0, 0.3),
                (600.0, 1.5),
                (1800.0, 1.0),
                (6500.0, 0.8),
            ],
            hetero_window: TimeWindow {
                start: 1.2,
                end: 2.1,
            },
            hetero_gain: 3.0,
        }
    }
}

impl NoiseModel {
    /// No floor, no tones.
    pub fn silent() -> Self {
        Self {
            base_std: 0.0,
            tones: Vec::new(),
            ..Self::default()
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.base_std >= 0.0) {
            return invalid_arg("noise floor std must be non-negative");
        }
        if !(self.hetero_gain >= 1.0) {
            return invalid_arg("heteroscedastic gain must be at least 1");
        }
        for &(f, a) in &self.tones {
            if !(f > 0.0 && f < 0.5 * sample_rate) || !a.is_finite() {
                return invalid_arg(format!("tone at {f} Hz is not below Nyquist"));
            }
        }
        Ok(())
    }

    /// Gain applied to the white floor at time `t`.
    pub fn floor_gain(&self, t: f64) -> f64 {
        let w = self.hetero_window;
        let ramp = |x: f64| 0.5 * (1.0 - (PI * x.clamp(0.0, 1.0)).cos());
        let weight = if t < w.start || t > w.end {
            0.0
        } else {
            let rise = ramp((t - w.start) / HETERO_TAPER);
            let fall = ramp((w.end - t) / HETERO_TAPER);
            rise.min(fall)
        };
        1.0 + (self.hetero_gain - 1.0) * weight
    }
}

/// Draws one background-noise record; fully determined by `seed`.
pub fn synth_noise(
    model: &NoiseModel,
    seed: u64,
    sample_rate: f64,
    duration: f64,
) -> Result<UniformSeries> {
    model.validate(sample_rate)?;
    let n = sample_count(sample_rate, duration)?;
    let dt = 1.0 / sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = model
        .tones
        .iter()
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let z: f64 = rng.sample(StandardNormal);
            let floor = model.base_std * model.floor_gain(t) * z;
            let tones: f64 = model
                .tones
                .iter()
                .zip(&phases)
                .map(|(&(f, a), ph)| a * (2.0 * PI * f * t + ph).sin())
                .sum();
            floor + tones
        })
        .collect();
    UniformSeries::new(0.0, dt, values)
}

/// Clean and noisy benchmark records on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub clean: UniformSeries,
    pub noisy: UniformSeries,
    pub noise: UniformSeries,
    pub components: SignalComponents,
}

pub fn make_benchmark(spec: &SyntheticSpec, model: &NoiseModel, seed: u64) -> Result<Benchmark> {
    let (clean, components) = synth_signal(spec)?;
    let noise = synth_noise(model, seed, spec.sample_rate, spec.duration)?;
    let noisy: Vec<f64> = clean
        .values()
        .iter()
        .zip(noise.values())
        .map(|(c, w)| c + w)
        .collect();
    Ok(Benchmark {
        noisy: clean.with_values(noisy)?,
        clean,
        noise,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::window_std;

    #[test]
    fn phase_boundaries() {
        let p = TrajectoryParams::default();
        let t1 = p.t_motion_start + p.accel_duration();
        let s = p.state(t1);
        assert!((s.v - 0.45).abs() < 1e-12);
        assert!((s.z - 0.15).abs() < 1e-12);
        assert!(s.a.abs() < 1e-12);
        let end = p.state(p.motion_end() + 0.01);
        assert!((end.z - 0.35).abs() < 1e-12);
        assert_eq!(end.v, 0.0);
        let just_before_end = p.state(p.motion_end() - 1e-9);
        assert!((just_before_end.z - 0.35).abs() < 1e-9);
        assert!(just_before_end.v.abs() < 1e-9);
    }

    #[test]
    fn contact_time_closed_form() {
        let p = TrajectoryParams::default();
        let expected = 1.0 + 2.0 * 0.15 / 0.45 + 0.05 / 0.45;
        assert!((p.contact_time() - expected).abs() < 1e-12);
        assert!((p.contact_time() - 1.7778).abs() < 1e-4);
    }

    #[test]
    fn velocity_matches_trapezoid_of_acceleration() {
        let (_, v, a) = trajectory(&TrajectoryParams::default(), 20_000.0, 2.8).unwrap();
        let dt = a.dt();
        let mut integral = 0.0;
        let mut worst = 0.0f64;
        for k in 1..a.len() {
            integral += 0.5 * dt * (a.values()[k - 1] + a.values()[k]);
            worst = worst.max((integral - v.values()[k]).abs());
        }
        assert!(worst < 1e-6, "max error {worst}");
    }

    #[test]
    fn short_duration_rejected() {
        assert!(trajectory(&TrajectoryParams::default(), 20_000.0, 2.0).is_err());
    }

    #[test]
    fn zero_components_give_zero_signal() {
        let spec = SyntheticSpec {
            mass: 0.0,
            ramp_level: 0.0,
            pulse_amplitude: 0.0,
            ..Default::default()
        };
        let (clean, _) = synth_signal(&spec).unwrap();
        assert!(clean.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn clean_components_sum_and_quiet_start() {
        let spec = SyntheticSpec {
            pulse_amplitude: 0.0,
            ..Default::default()
        };
        let (clean, parts) = synth_signal(&spec).unwrap();
        for k in 0..clean.len() {
            let sum = parts.ramp.values()[k] + parts.pulse.values()[k] + parts.inertial.values()[k];
            assert_eq!(clean.values()[k], sum);
        }
        let before = (spec.trajectory.t_motion_start * spec.sample_rate) as usize;
        assert!(clean.values()[..before].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn clean_matches_direct_formula() {
        let spec = SyntheticSpec::default();
        let (clean, _) = synth_signal(&spec).unwrap();
        let p = spec.trajectory;
        let a_peak = 2.0 * p.v_const / p.accel_duration();
        for k in (0..clean.len()).step_by(997) {
            let t = k as f64 / spec.sample_rate;
            let ramp = if t <= spec.ramp_start {
                0.0
            } else if t >= spec.ramp_end {
                spec.ramp_level
            } else {
                spec.ramp_level * (t - spec.ramp_start) / (spec.ramp_end - spec.ramp_start)
            };
            let pulse = spec.pulse_amplitude
                * (-(t - spec.pulse_center).powi(2) / (2.0 * spec.pulse_width.powi(2))).exp();
            let tau = t - p.t_motion_start;
            let t_acc = p.accel_duration();
            let t_dec_start = t_acc + p.const_duration();
            let a = if tau > 0.0 && tau < t_acc {
                0.5 * a_peak * (1.0 - (2.0 * PI * tau / t_acc).cos())
            } else if tau >= t_dec_start && tau < t_dec_start + p.decel_duration() {
                -0.5 * a_peak * (1.0 - (2.0 * PI * (tau - t_dec_start) / p.decel_duration()).cos())
            } else {
                0.0
            };
            let expected = ramp + pulse + spec.mass * a;
            assert!((clean.values()[k] - expected).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn silent_noise_is_zero_and_noise_is_seeded() {
        let z = synth_noise(&NoiseModel::silent(), 3, 20_000.0, 0.5).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let m = NoiseModel::default();
        let a = synth_noise(&m, 11, 20_000.0, 0.5).unwrap();
        let b = synth_noise(&m, 11, 20_000.0, 0.5).unwrap();
        let c = synth_noise(&m, 12, 20_000.0, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn heteroscedastic_ratio() {
        let m = NoiseModel {
            tones: Vec::new(),
            ..NoiseModel::default()
        };
        let noise = synth_noise(&m, 5, 20_000.0, 2.8).unwrap();
        let inside = window_std(&noise, &TimeWindow::new(1.3, 2.0).unwrap()).unwrap();
        let outside = window_std(&noise, &TimeWindow::new(0.05, 1.1).unwrap()).unwrap();
        let ratio = inside / outside;
        assert!((ratio / m.hetero_gain - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn benchmark_noise_accounting() {
        let spec = SyntheticSpec::default();
        let b = make_benchmark(&spec, &NoiseModel::silent(), 1).unwrap();
        assert_eq!(b.noisy, b.clean);
        let b = make_benchmark(&spec, &NoiseModel::default(), 1).unwrap();
        let n = b.clean.len() as f64;
        let rmse = (b
            .noisy
            .values()
            .iter()
            .zip(b.clean.values())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let rms = (b.noise.values().iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        assert!((rmse - rms).abs() < 1e-9 * rms);
    }
}
