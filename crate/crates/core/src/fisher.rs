//! Quantum Fisher information of the probe phase: the Bures form for a
//! prepared state, the control bound built from the sensitivity eigenvalues,
//! and a finite-difference route through the accumulated phase.

use std::f64::consts::PI;

use crate::dynamics::{
    accumulated_phase, make_optimal_schedule, ControlSchedule, DriveParams, QubitState,
};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::quad::{self, Tolerance};

/// Parameter being estimated: the modulation frequency `omega` or the
/// modulation depth `Omega_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimationTarget {
    Frequency,
    Amplitude,
}

impl EstimationTarget {
    pub fn name(self) -> &'static str {
        match self {
            Self::Frequency => "frequency",
            Self::Amplitude => "amplitude",
        }
    }

    /// Current value of the target parameter in `drive`.
    pub fn value(self, drive: &DriveParams) -> f64 {
        match self {
            Self::Frequency => drive.omega,
            Self::Amplitude => drive.omega_d,
        }
    }

    /// `drive` with the target parameter replaced by `value`.
    pub fn with_value(self, drive: &DriveParams, value: f64) -> DriveParams {
        match self {
            Self::Frequency => drive.with_omega(value),
            Self::Amplitude => drive.with_omega_d(value),
        }
    }
}

impl std::str::FromStr for EstimationTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frequency" | "freq" => Ok(Self::Frequency),
            "amplitude" | "amp" => Ok(Self::Amplitude),
            other => Err(invalid(format!("unknown estimation target '{other}'"))),
        }
    }
}

/// QFI as a function of observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiCurve {
    pub times: Vec<f64>,
    pub qfi_values: Vec<f64>,
    pub controlled: bool,
}

/// Bures-form QFI of a pure superposition, `4 P0 P1 (dphi/dalpha)^2`.
pub fn qfi_bures(state: &QubitState, dphi_dalpha: f64) -> f64 {
    4.0 * state.p0 * state.p1 * dphi_dalpha * dphi_dalpha
}

/// Instantaneous extreme eigenvalues `(mu_max, mu_min)` of `dH/dalpha`.
///
/// Frequency: `(+Omega_d t cos(omega t + theta), -Omega_d t cos(omega t + theta))`.
/// Amplitude: `(-sin(omega t + theta), +sin(omega t + theta))`.
pub fn sensitivity_eigenvalues(target: EstimationTarget, drive: &DriveParams, t: f64) -> (f64, f64) {
    let arg = drive.omega * t + drive.theta;
    match target {
        EstimationTarget::Frequency => {
            let mu = drive.omega_d * t * arg.cos();
            (mu, -mu)
        }
        EstimationTarget::Amplitude => {
            let mu = arg.sin();
            (-mu, mu)
        }
    }
}

fn eigenvalue_gap(target: EstimationTarget, drive: &DriveParams, t: f64) -> f64 {
    let (hi, lo) = sensitivity_eigenvalues(target, drive, t);
    hi - lo
}

/// Integrated eigenvalue gap `int_0^T s(t) (mu_max - mu_min) dt`, with `s` the
/// toggling sign of `schedule` (or +1 throughout when there is none).
///
/// Each constant-sign segment is integrated by adaptive Gauss-Kronrod
/// quadrature to 1e-12 relative accuracy.
pub fn integrated_gap(
    target: EstimationTarget,
    drive: &DriveParams,
    schedule: Option<&ControlSchedule>,
    total_time: f64,
) -> Result<f64> {
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(invalid(format!("total time must be > 0, got {total_time}")));
    }
    let segments = match schedule {
        Some(s) => s.signed_segments(total_time),
        None => vec![(0.0, total_time, 1.0)],
    };
    let gap_bound = match target {
        EstimationTarget::Frequency => 2.0 * drive.omega_d * total_time,
        EstimationTarget::Amplitude => 2.0,
    };
    let mut total = 0.0;
    for (a, b, sign) in segments {
        let tol = Tolerance {
            abs: 1e-14 * gap_bound * (b - a),
            rel: 1e-12,
            max_intervals: 500,
        };
        total += sign * quad::integrate(|t| eigenvalue_gap(target, drive, t), a, b, tol)?.value;
    }
    Ok(total)
}

/// Control bound on the QFI, `[int_0^T s(t) (mu_max - mu_min) dt]^2`.
pub fn qfi_control_bound(
    target: EstimationTarget,
    drive: &DriveParams,
    schedule: Option<&ControlSchedule>,
    total_time: f64,
) -> Result<f64> {
    integrated_gap(target, drive, schedule, total_time).map(|g| g * g)
}

/// Control phase in `[0, pi)` that puts the pulses of
/// [`make_optimal_schedule`] (with `omega_c = omega`) on the zeros of the
/// eigenvalue gap for `target`.
pub fn matched_control_phase(target: EstimationTarget, drive: &DriveParams) -> f64 {
    let phase = match target {
        // gap ~ cos(omega t + theta): zeros at omega t = pi/2 - theta + k pi
        EstimationTarget::Frequency => PI / 2.0 - drive.theta,
        // gap ~ sin(omega t + theta): zeros at omega t = -theta + k pi
        EstimationTarget::Amplitude => -drive.theta,
    };
    phase.rem_euclid(PI)
}

/// Control phase in `[0, pi)` that centres pulses of length `pulse_duration`
/// on the zeros of the eigenvalue gap. Equal to [`matched_control_phase`] for
/// instantaneous pulses.
pub fn centred_control_phase(target: EstimationTarget, drive: &DriveParams, pulse_duration: f64) -> f64 {
    (matched_control_phase(target, drive) - 0.5 * drive.omega * pulse_duration).rem_euclid(PI)
}

/// Level-crossing schedule matched to `drive` for estimating `target`, with
/// each pulse centred on a zero of the eigenvalue gap.
pub fn optimal_schedule_for(
    target: EstimationTarget,
    drive: &DriveParams,
    total_time: f64,
    pulse_duration: f64,
) -> Result<ControlSchedule> {
    make_optimal_schedule(
        drive.omega,
        centred_control_phase(target, drive, pulse_duration),
        total_time,
        pulse_duration,
    )
}

/// Evaluates [`qfi_control_bound`] on a time grid. With `controlled` the
/// optimal schedule (instantaneous pulses) is regenerated for every time.
pub fn qfi_curve(
    target: EstimationTarget,
    drive: &DriveParams,
    controlled: bool,
    times: &[f64],
) -> Result<QfiCurve> {
    drive.validate()?;
    if times.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times must be strictly increasing"));
    }
    let qfi_values = par::map_slice(times, |&t| {
        if controlled {
            let schedule = optimal_schedule_for(target, drive, t, 0.0)?;
            qfi_control_bound(target, drive, Some(&schedule), t)
        } else {
            qfi_control_bound(target, drive, None, t)
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(QfiCurve {
        times: times.to_vec(),
        qfi_values,
        controlled,
    })
}

/// Central difference `(phi(alpha + step) - phi(alpha - step)) / (2 step)` of
/// the accumulated phase with the schedule held fixed.
///
/// The static shift contributes `-2 Omega0 T` independently of either target
/// parameter, so it is dropped before differencing to avoid cancelling a
/// large common term.
pub fn phase_sensitivity_fd(
    target: EstimationTarget,
    drive: &DriveParams,
    schedule: &ControlSchedule,
    total_time: f64,
    step: f64,
) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(format!("finite-difference step must be > 0, got {step}")));
    }
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(invalid(format!("total time must be > 0, got {total_time}")));
    }
    let modulation = DriveParams {
        omega0: 0.0,
        ..*drive
    };
    let alpha = target.value(drive);
    let (up, down) = (alpha + step, alpha - step);
    if up == alpha || down == alpha {
        return Err(Error::StepUnderflow { step, phase: alpha });
    }
    if target == EstimationTarget::Frequency && down <= 0.0 {
        return Err(invalid(format!(
            "step {step} would push the modulation frequency {alpha} to a non-positive value"
        )));
    }
    let phi_up = accumulated_phase(&target.with_value(&modulation, up), schedule, total_time);
    let phi_down = accumulated_phase(&target.with_value(&modulation, down), schedule, total_time);
    let diff = phi_up - phi_down;
    let scale = phi_up.abs().max(phi_down.abs());
    if diff.abs() < 100.0 * f64::EPSILON * scale {
        return Err(Error::StepUnderflow { step, phase: scale });
    }
    Ok(diff / (up - down))
}
