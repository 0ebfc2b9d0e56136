//! Probe, drive and control schedule, and the phase the probe superposition
//! picks up under them.
//!
//! The drive Hamiltonian is `H0 = -Omega0 sz + Omega_d sin(omega t + theta) sz`
//! (hbar = 1). A sz eigenbasis superposition accumulates a relative phase at
//! twice the coefficient of `sz`. Control pi pulses about x are treated in the
//! toggling frame: every completed pulse flips the sign of subsequent phase
//! accumulation, and accumulation is frozen while a pulse is being applied.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quad::{self, Tolerance};
use crate::units::TWO_PI;

/// The field being estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Static Stark shift, rad/s.
    pub omega0: f64,
    /// Modulation depth, rad/s. The experiment regime has `omega_d << omega0`;
    /// this is not enforced.
    pub omega_d: f64,
    /// Modulation angular frequency, rad/s.
    pub omega: f64,
    /// Modulation phase at t = 0, rad.
    pub theta: f64,
}

impl DriveParams {
    pub fn new(omega0: f64, omega_d: f64, omega: f64, theta: f64) -> Result<Self> {
        let drive = Self {
            omega0,
            omega_d,
            omega,
            theta,
        };
        drive.validate()?;
        Ok(drive)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(invalid(format!("modulation frequency must be > 0, got {}", self.omega)));
        }
        if !(self.omega_d.is_finite() && self.omega_d >= 0.0) {
            return Err(invalid(format!("modulation depth must be >= 0, got {}", self.omega_d)));
        }
        if !self.omega0.is_finite() || !self.theta.is_finite() {
            return Err(invalid("static shift and phase must be finite"));
        }
        Ok(())
    }

    /// Modulation period 2 pi / omega, s.
    pub fn period(&self) -> f64 {
        TWO_PI / self.omega
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }

    pub fn with_omega_d(self, omega_d: f64) -> Self {
        Self { omega_d, ..self }
    }

    /// Coefficient of the relative-phase rate, `2 (-Omega0 + Omega_d sin(omega t + theta))`.
    pub fn phase_rate(&self, t: f64) -> f64 {
        2.0 * (-self.omega0 + self.omega_d * (self.omega * t + self.theta).sin())
    }
}

/// Off-resonant laser intensity model behind the Stark shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityModel {
    /// Mean intensity I0.
    pub i0: f64,
    /// Modulation amplitude I_d, same units as `i0`.
    pub i_d: f64,
    /// Laser detuning from resonance, rad/s.
    pub detuning: f64,
    /// Atomic constant Q such that `Q I / detuning` is in rad/s.
    pub q_const: f64,
}

/// Stark parameters for a laser intensity `I(t) = I0 + I_d sin(omega t)`.
pub fn stark_params_from_intensity(model: &IntensityModel, omega: f64) -> Result<DriveParams> {
    if model.detuning == 0.0 || !model.detuning.is_finite() {
        return Err(invalid("laser detuning must be non-zero"));
    }
    if model.i_d > model.i0 {
        return Err(invalid(format!(
            "modulation amplitude {} exceeds mean intensity {}",
            model.i_d, model.i0
        )));
    }
    let scale = model.q_const / model.detuning;
    DriveParams::new(scale * model.i0, scale * model.i_d, omega, 0.0)
}

/// Reference waveform a schedule was generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlReference {
    /// Control angular frequency, rad/s.
    pub omega_c: f64,
    /// Control phase, rad. Shifts every pulse later by `phi_c / omega_c`.
    pub phi_c: f64,
}

/// A train of sigma-x pi pulses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSchedule {
    pulse_times: Vec<f64>,
    pulse_duration: f64,
    reference: Option<ControlReference>,
}

impl ControlSchedule {
    /// Free evolution: no pulses.
    pub fn none() -> Self {
        Self::default()
    }

    /// A schedule with explicit pulse start times.
    pub fn from_pulses(pulse_times: Vec<f64>, pulse_duration: f64) -> Result<Self> {
        if !(pulse_duration.is_finite() && pulse_duration >= 0.0) {
            return Err(invalid(format!("pulse duration must be >= 0, got {pulse_duration}")));
        }
        if pulse_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(invalid("pulse times must be finite and non-negative"));
        }
        for pair in pulse_times.windows(2) {
            let gap = pair[1] - pair[0];
            if gap <= 0.0 {
                return Err(invalid("pulse times must be strictly increasing"));
            }
            if gap <= pulse_duration {
                return Err(Error::OverlappingPulses {
                    duration: pulse_duration,
                    spacing: gap,
                });
            }
        }
        Ok(Self {
            pulse_times,
            pulse_duration,
            reference: None,
        })
    }

    pub fn pulse_times(&self) -> &[f64] {
        &self.pulse_times
    }

    pub fn pulse_duration(&self) -> f64 {
        self.pulse_duration
    }

    pub fn reference(&self) -> Option<ControlReference> {
        self.reference
    }

    pub fn is_empty(&self) -> bool {
        self.pulse_times.is_empty()
    }

    /// Maximal intervals of `[0, total_time]` with constant non-zero toggling
    /// sign, as `(start, end, sign)`. Frozen pulse windows are omitted.
    pub fn signed_segments(&self, total_time: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.pulse_times.len() + 1);
        let mut sign = 1.0;
        let mut start = 0.0;
        for &t in &self.pulse_times {
            if t >= total_time {
                break;
            }
            if t > start {
                out.push((start, t, sign));
            }
            sign = -sign;
            start = (t + self.pulse_duration).min(total_time);
        }
        if total_time > start {
            out.push((start, total_time, sign));
        }
        out
    }
}

/// Level-crossing control: a pi pulse at every zero crossing of the control
/// reference `sin(omega_c t - phi_c)`, i.e. at `t = (k pi + phi_c) / omega_c`
/// for every integer k with `t > 0` and `t + pulse_duration <= total_time`.
///
/// Pulses are half a control period apart, so a schedule with
/// `omega_c = omega` flips the sign of accumulation at every zero of the
/// matching sensitivity waveform and rectifies it. The pulse set is periodic
/// in `phi_c` with period pi.
pub fn make_optimal_schedule(
    omega_c: f64,
    phi_c: f64,
    total_time: f64,
    pulse_duration: f64,
) -> Result<ControlSchedule> {
    if !(omega_c.is_finite() && omega_c > 0.0) {
        return Err(invalid(format!("control frequency must be > 0, got {omega_c}")));
    }
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(invalid(format!("total time must be > 0, got {total_time}")));
    }
    if !phi_c.is_finite() {
        return Err(invalid("control phase must be finite"));
    }
    if !(pulse_duration.is_finite() && pulse_duration >= 0.0) {
        return Err(invalid(format!("pulse duration must be >= 0, got {pulse_duration}")));
    }
    let spacing = PI / omega_c;
    if pulse_duration >= spacing {
        return Err(Error::OverlappingPulses {
            duration: pulse_duration,
            spacing,
        });
    }
    // relative slack so that edges landing on T up to rounding count as fitting
    let limit = total_time * (1.0 + 1e-12);
    let mut k = (-phi_c / PI).floor() as i64;
    let mut pulse_times = Vec::new();
    loop {
        let t = (k as f64 * PI + phi_c) / omega_c;
        k += 1;
        if t <= 0.0 {
            continue;
        }
        if t + pulse_duration > limit {
            break;
        }
        pulse_times.push(t);
    }
    Ok(ControlSchedule {
        pulse_times,
        pulse_duration,
        reference: Some(ControlReference { omega_c, phi_c }),
    })
}

/// Toggling-frame sign at time `t`: +1 before the first pulse, flipped by each
/// completed pulse, 0 inside a pulse window `[t_n, t_n + duration)`.
pub fn toggling_sign(t: f64, schedule: &ControlSchedule) -> i8 {
    let times = schedule.pulse_times();
    let started = times.partition_point(|&p| p <= t);
    if started == 0 {
        return 1;
    }
    if t < times[started - 1] + schedule.pulse_duration() {
        return 0;
    }
    if started % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Relative phase `2 int_0^T s(t) (-Omega0 + Omega_d sin(omega t + theta)) dt`,
/// evaluated segment by segment from the antiderivative.
pub fn accumulated_phase(drive: &DriveParams, schedule: &ControlSchedule, total_time: f64) -> f64 {
    let DriveParams {
        omega0,
        omega_d,
        omega,
        theta,
    } = *drive;
    schedule
        .signed_segments(total_time)
        .into_iter()
        .map(|(a, b, sign)| {
            let modulation = ((omega * a + theta).cos() - (omega * b + theta).cos()) / omega;
            sign * (-omega0 * (b - a) + omega_d * modulation)
        })
        .sum::<f64>()
        * 2.0
}

/// The same phase as [`accumulated_phase`], computed by adaptive quadrature
/// between consecutive pulse edges with the sign taken from
/// [`toggling_sign`]. Fails unless the summed quadrature error is within
/// 1e-10 of the result, up to a rounding floor of 1e-13 of the summed
/// segment magnitudes.
pub fn accumulated_phase_oracle(
    drive: &DriveParams,
    schedule: &ControlSchedule,
    total_time: f64,
) -> Result<f64> {
    let mut edges = vec![0.0, total_time];
    for &t in schedule.pulse_times() {
        edges.push(t);
        edges.push(t + schedule.pulse_duration());
    }
    edges.retain(|&t| (0.0..=total_time).contains(&t));
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let rate_bound = 2.0 * (drive.omega0.abs() + drive.omega_d);
    let mut total = 0.0;
    let mut error = 0.0;
    let mut magnitude = 0.0;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let sign = f64::from(toggling_sign(0.5 * (a + b), schedule));
        if sign == 0.0 {
            continue;
        }
        // the absolute floor sits at rounding level and only matters for
        // segments that integrate to ~0
        let tol = Tolerance {
            abs: 1e-14 * rate_bound * (b - a),
            rel: 1e-14,
            max_intervals: 200,
        };
        let piece = quad::integrate(|t| drive.phase_rate(t), a, b, tol)?;
        total += sign * piece.value;
        error += piece.error;
        magnitude += piece.value.abs();
    }
    // segments can cancel, so the floor is tied to their summed magnitude
    if error > 1e-10 * total.abs() + 1e-13 * magnitude {
        return Err(Error::QuadratureNotConverged {
            estimate: total,
            error,
        });
    }
    Ok(total)
}

/// Populations and relative phase of the probe superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub p0: f64,
    pub p1: f64,
    pub phi: f64,
}

impl QubitState {
    pub fn new(p0: f64, p1: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
            return Err(invalid(format!("populations must lie in [0, 1], got ({p0}, {p1})")));
        }
        if (p0 + p1 - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("populations must sum to 1, got {}", p0 + p1)));
        }
        Ok(Self { p0, p1, phi })
    }

    /// State prepared with population error `eps`: `P0 = 1/2 + eps`.
    pub fn with_prep_error(eps: f64, phi: f64) -> Result<Self> {
        Self::new(0.5 + eps, 0.5 - eps, phi)
    }

    pub fn balanced(phi: f64) -> Self {
        Self {
            p0: 0.5,
            p1: 0.5,
            phi,
        }
    }
}

/// Observation times `T` in `[t_min, t_max]` at which the drive phase at
/// readout, `omega T + theta`, equals `readout_phase` modulo `stride`.
///
/// `stride = 2 pi` samples once per drive period; `stride = pi` samples at
/// both extrema when `readout_phase = pi / 2` (quarter-period offsets).
pub fn aligned_times(
    drive: &DriveParams,
    t_min: f64,
    t_max: f64,
    readout_phase: f64,
    stride: f64,
) -> Vec<f64> {
    if !(t_max >= t_min && stride > 0.0) {
        return Vec::new();
    }
    let phase_at = |k: i64| readout_phase + k as f64 * stride - drive.theta;
    let mut k = ((drive.omega * t_min + drive.theta - readout_phase) / stride).floor() as i64 - 1;
    let mut out = Vec::new();
    loop {
        let t = phase_at(k) / drive.omega;
        k += 1;
        if t < t_min * (1.0 - 1e-12) || t <= 0.0 {
            continue;
        }
        if t > t_max * (1.0 + 1e-12) {
            break;
        }
        out.push(t);
    }
    out
}

/// At most `count` entries of the increasing, positive `times`, picked
/// nearest to evenly spaced points in log time. Duplicates are dropped, so
/// fewer may come back.
pub fn log_subsample(times: &[f64], count: usize) -> Vec<f64> {
    if times.len() <= count {
        return times.to_vec();
    }
    if count < 2 {
        return times[..count].to_vec();
    }
    let (lo, hi) = (times[0].ln(), times[times.len() - 1].ln());
    let mut picked: Vec<f64> = (0..count)
        .map(|k| {
            let target = lo + (hi - lo) * k as f64 / (count - 1) as f64;
            *times
                .iter()
                .min_by(|a, b| (a.ln() - target).abs().total_cmp(&(b.ln() - target).abs()))
                .expect("times is non-empty")
        })
        .collect();
    picked.dedup();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{hz_to_angular, MICROSECOND as US};
    use approx::assert_relative_eq;

    fn drive_1k_50k(omega0: f64) -> DriveParams {
        DriveParams::new(omega0, hz_to_angular(1e3), hz_to_angular(50e3), 0.0).unwrap()
    }

    fn in_us(s: &ControlSchedule) -> Vec<f64> {
        s.pulse_times().iter().map(|t| (t / US * 1e6).round() / 1e6).collect()
    }

    #[test]
    fn schedule_one_period() {
        let s = make_optimal_schedule(hz_to_angular(50e3), 0.0, 20.0 * US, 0.0).unwrap();
        assert_eq!(in_us(&s), vec![10.0, 20.0]);
    }

    #[test]
    fn schedule_four_periods() {
        let s = make_optimal_schedule(hz_to_angular(50e3), 0.0, 80.0 * US, 0.0).unwrap();
        assert_eq!(in_us(&s), vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]);
    }

    #[test]
    fn schedule_phase_shifts_pulses() {
        let w = hz_to_angular(50e3);
        let s = make_optimal_schedule(w, PI / 2.0, 80.0 * US, 0.0).unwrap();
        assert_eq!(in_us(&s), vec![5.0, 15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0]);
        // phase is only defined modulo pi
        let a = make_optimal_schedule(w, PI / 2.0 + PI, 80.0 * US, 0.0).unwrap();
        let b = make_optimal_schedule(w, PI / 2.0 - PI, 80.0 * US, 0.0).unwrap();
        assert_eq!(in_us(&a), in_us(&s));
        assert_eq!(in_us(&b), in_us(&s));
    }

    #[test]
    fn schedule_drops_pulses_that_do_not_finish() {
        let w = hz_to_angular(50e3);
        let s = make_optimal_schedule(w, 0.0, 21.0 * US, 2.0 * US).unwrap();
        assert_eq!(in_us(&s), vec![10.0]);
        let s = make_optimal_schedule(w, 0.0, 22.0 * US, 2.0 * US).unwrap();
        assert_eq!(in_us(&s), vec![10.0, 20.0]);
        let s = make_optimal_schedule(w, 0.0, 5.0 * US, 0.0).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn schedule_rejects_overlap_and_bad_input() {
        let w = hz_to_angular(50e3);
        assert!(matches!(
            make_optimal_schedule(w, 0.0, 80.0 * US, 12.0 * US),
            Err(Error::OverlappingPulses { .. })
        ));
        assert!(make_optimal_schedule(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(make_optimal_schedule(w, 0.0, 0.0, 0.0).is_err());
        assert!(ControlSchedule::from_pulses(vec![2.0, 1.0], 0.0).is_err());
        assert!(matches!(
            ControlSchedule::from_pulses(vec![1.0, 1.5], 0.5),
            Err(Error::OverlappingPulses { .. })
        ));
    }

    #[test]
    fn sign_examples() {
        let s = ControlSchedule::from_pulses(vec![10.0 * US, 30.0 * US], 0.0).unwrap();
        assert_eq!(toggling_sign(5.0 * US, &s), 1);
        assert_eq!(toggling_sign(15.0 * US, &s), -1);
        assert_eq!(toggling_sign(35.0 * US, &s), 1);
        let s = ControlSchedule::from_pulses(vec![10.0 * US], 2.0 * US).unwrap();
        assert_eq!(toggling_sign(11.0 * US, &s), 0);
        assert_eq!(toggling_sign(10.0 * US, &s), 0);
        assert_eq!(toggling_sign(12.0 * US, &s), -1);
        assert_eq!(toggling_sign(0.0, &ControlSchedule::none()), 1);
    }

    #[test]
    fn full_period_cancels_without_control() {
        let d = DriveParams::new(0.0, hz_to_angular(1e3), hz_to_angular(50e3), 0.0).unwrap();
        assert!(accumulated_phase(&d, &ControlSchedule::none(), 20.0 * US).abs() < 1e-15);
    }

    #[test]
    fn static_shift_only() {
        let d = DriveParams::new(3.0, 0.0, 1.0, 0.2).unwrap();
        assert_relative_eq!(
            accumulated_phase(&d, &ControlSchedule::none(), 7.5),
            -2.0 * 3.0 * 7.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn one_period_controlled_phase() {
        // 8 Omega_d / omega = 8 / 50
        let d = drive_1k_50k(0.0);
        let s = make_optimal_schedule(d.omega, 0.0, 20.0 * US, 0.0).unwrap();
        assert_relative_eq!(accumulated_phase(&d, &s, 20.0 * US), 0.16, max_relative = 1e-12);
        assert_relative_eq!(
            accumulated_phase_oracle(&d, &s, 20.0 * US).unwrap(),
            0.16,
            max_relative = 1e-10
        );
    }

    #[test]
    fn oracle_static_shift() {
        let d = DriveParams::new(hz_to_angular(1e3), 0.0, hz_to_angular(50e3), 0.0).unwrap();
        let got = accumulated_phase_oracle(&d, &ControlSchedule::none(), 1e-3).unwrap();
        assert_relative_eq!(got, -2.0 * d.omega0 * 1e-3, max_relative = 1e-14);
    }

    #[test]
    fn rectified_phase_grows_by_8_omega_d_over_omega_per_period() {
        let d = drive_1k_50k(0.0);
        for k in 1..=6 {
            let t = k as f64 * d.period();
            let s = make_optimal_schedule(d.omega, 0.0, t, 0.0).unwrap();
            let expected = 8.0 * d.omega_d / d.omega * k as f64;
            assert_relative_eq!(accumulated_phase(&d, &s, t), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn frozen_window_removes_accumulation() {
        // a pulse covering [T/2, T) leaves only the first half
        let d = drive_1k_50k(0.0);
        let t = d.period();
        let s = ControlSchedule::from_pulses(vec![0.5 * t], 0.5 * t).unwrap();
        let half = accumulated_phase(&d, &ControlSchedule::none(), 0.5 * t);
        assert_relative_eq!(accumulated_phase(&d, &s, t), half, max_relative = 1e-12);
    }

    #[test]
    fn intensity_conversion() {
        let m = IntensityModel {
            i0: 1.0,
            i_d: 0.0,
            detuning: 1.0,
            q_const: 1.0,
        };
        let d = stark_params_from_intensity(&m, 5.0).unwrap();
        assert_eq!((d.omega0, d.omega_d, d.omega, d.theta), (1.0, 0.0, 5.0, 0.0));

        let m = IntensityModel {
            i0: 3.0,
            i_d: 1.0,
            detuning: 4.0,
            q_const: 2.0,
        };
        let d = stark_params_from_intensity(&m, 5.0).unwrap();
        assert_relative_eq!(d.omega0, 1.5);
        assert_relative_eq!(d.omega_d, 0.5);

        let m = IntensityModel {
            i0: 10.0,
            i_d: 1.0,
            detuning: -7.0,
            q_const: 3.0,
        };
        let d = stark_params_from_intensity(&m, 5.0);
        // negative detuning gives negative shifts, which the depth invariant rejects
        assert!(d.is_err());
        let m = IntensityModel { detuning: 7.0, ..m };
        let d = stark_params_from_intensity(&m, 5.0).unwrap();
        assert_relative_eq!(d.omega_d / d.omega0, 0.1, max_relative = 1e-15);

        let m = IntensityModel { detuning: 0.0, ..m };
        assert!(stark_params_from_intensity(&m, 5.0).is_err());
    }

    #[test]
    fn qubit_state_validation() {
        assert!(QubitState::new(0.6, 0.4, 0.0).is_ok());
        assert!(QubitState::new(0.6, 0.5, 0.0).is_err());
        assert!(QubitState::new(1.2, -0.2, 0.0).is_err());
        let s = QubitState::with_prep_error(0.1, 0.3).unwrap();
        assert_relative_eq!(s.p0, 0.6);
    }

    #[test]
    fn aligned_times_hit_requested_phase() {
        let d = drive_1k_50k(0.0);
        let ts = aligned_times(&d, 10.0 * US, 80.0 * US, PI / 2.0, PI);
        let us: Vec<f64> = ts.iter().map(|t| (t / US * 1e6).round() / 1e6).collect();
        assert_eq!(us, vec![15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0]);
        let ts = aligned_times(&d, 20.0 * US, 100.0 * US, 0.0, TWO_PI);
        assert_eq!(ts.len(), 5);
        let d = DriveParams { theta: 0.7, ..d };
        for t in aligned_times(&d, 1e-5, 1e-3, PI / 2.0, TWO_PI) {
            let cycles = (d.omega * t + d.theta - PI / 2.0) / TWO_PI;
            assert!((cycles - cycles.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn log_subsample_spreads_in_log_time() {
        let times: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        let picked = log_subsample(&times, 4);
        assert_eq!(picked, vec![1.0, 10.0, 100.0, 1000.0]);
        assert_eq!(log_subsample(&times[..3], 5), vec![1.0, 2.0, 3.0]);
        assert_eq!(log_subsample(&times, 1), vec![1.0]);
        assert!(log_subsample(&times, 0).is_empty());
    }
}
