//! Reference values computed independently (adaptive quadrature in scipy and
//! closed-form antiderivatives) and frozen here.

use approx::assert_relative_eq;
use ionprobe::alp::{coupling_bound, min_detectable_amplitude, AlpParams};
use ionprobe::dynamics::{accumulated_phase, accumulated_phase_oracle, make_optimal_schedule, ControlSchedule};
use ionprobe::experiment::{estimate_phase, invert_fringe, ramsey_shot, substream, NoiseModel};
use ionprobe::fisher::{
    centred_control_phase, matched_control_phase, optimal_schedule_for, phase_sensitivity_fd,
    qfi_control_bound, EstimationTarget::*,
};
use ionprobe::units::{hz_to_angular, MICROSECOND as US};
use ionprobe::DriveParams;
use std::f64::consts::PI;

fn drive(omega0_hz: f64, theta: f64) -> DriveParams {
    DriveParams::new(hz_to_angular(omega0_hz), hz_to_angular(1e3), hz_to_angular(50e3), theta).unwrap()
}

#[test]
fn one_period_rectified_phase() {
    let d = drive(0.0, 0.0);
    let s = optimal_schedule_for(Amplitude, &d, 20.0 * US, 0.0).unwrap();
    assert_relative_eq!(accumulated_phase(&d, &s, 20.0 * US), 0.16, max_relative = 1e-12);
    assert_relative_eq!(accumulated_phase_oracle(&d, &s, 20.0 * US).unwrap(), 0.16, max_relative = 1e-10);
}

#[test]
fn finite_pulse_phase_with_static_shift() {
    let d = drive(3e3, 0.3);
    let s = make_optimal_schedule(d.omega, 0.7, 73.0 * US, 2.0 * US).unwrap();
    assert_eq!(s.pulse_times().len(), 7);
    assert_relative_eq!(s.pulse_times()[0], 2.228_169_203_286_534_6 * US, max_relative = 1e-12);
    let want = 1.368_183_075_145_573e-1;
    assert_relative_eq!(accumulated_phase(&d, &s, 73.0 * US), want, max_relative = 1e-9);
    assert_relative_eq!(accumulated_phase_oracle(&d, &s, 73.0 * US).unwrap(), want, max_relative = 1e-9);
}

#[test]
fn centred_frequency_bound() {
    let d = drive(3e3, 0.3);
    let tau = 0.3 * PI / d.omega;
    assert_relative_eq!(centred_control_phase(Frequency, &d, tau), 0.799_557_428_756_428, max_relative = 1e-12);
    let s = optimal_schedule_for(Frequency, &d, 80.0 * US, tau).unwrap();
    assert_eq!(s.pulse_times().len(), 8);
    let qfi = qfi_control_bound(Frequency, &d, Some(&s), 80.0 * US).unwrap();
    assert_relative_eq!(qfi, 5.387_453_498_223_893e-10, max_relative = 1e-9);
}

#[test]
fn matched_amplitude_bound() {
    let d = drive(3e3, 0.3);
    let s = make_optimal_schedule(d.omega, matched_control_phase(Amplitude, &d), 80.0 * US, 0.0).unwrap();
    let qfi = qfi_control_bound(Amplitude, &d, Some(&s), 80.0 * US).unwrap();
    assert_relative_eq!(qfi, 1.037_528_920_497_539e-8, max_relative = 1e-9);
}

#[test]
fn uncontrolled_frequency_bound_off_period() {
    let d = drive(3e3, 0.3);
    let t = 37.25 * d.period();
    let qfi = qfi_control_bound(Frequency, &d, None, t).unwrap();
    assert_relative_eq!(qfi, 8.014_427_012_135_814e-10, max_relative = 1e-9);
}

#[test]
fn frequency_slope_with_fixed_schedule() {
    let d = drive(3e3, 0.3);
    let s = make_optimal_schedule(d.omega, matched_control_phase(Frequency, &d), 80.0 * US, 0.0).unwrap();
    let fd = phase_sensitivity_fd(Frequency, &d, &s, 80.0 * US, 1.0).unwrap();
    assert_relative_eq!(fd, 2.593_450_967_984_342e-5, max_relative = 1e-6);
}

#[test]
fn amplitude_slope_is_8k_over_omega() {
    let d = drive(0.0, 0.0);
    for k in [1.0, 3.0, 8.0] {
        let t = k * d.period();
        let s = optimal_schedule_for(Amplitude, &d, t, 0.0).unwrap();
        let fd = phase_sensitivity_fd(Amplitude, &d, &s, t, 1.0).unwrap();
        assert_relative_eq!(fd, 8.0 * k / d.omega, max_relative = 1e-9);
    }
}

#[test]
fn controlled_frequency_bound_approaches_t4_law() {
    let d = drive(0.0, 0.0);
    let t = 400.0 * d.period();
    let s = optimal_schedule_for(Frequency, &d, t, 0.0).unwrap();
    let qfi = qfi_control_bound(Frequency, &d, Some(&s), t).unwrap();
    let asymptote = (2.0 * d.omega_d * t * t / PI).powi(2);
    assert_relative_eq!(qfi, asymptote, max_relative = 1e-5);
}

#[test]
fn detuned_control_stays_at_uncontrolled_level() {
    // far from the drive the rectified integral only oscillates, so the
    // bound keeps the uncontrolled T^2 envelope (2 Omega_d T / omega)^2
    let d = drive(0.0, 0.0);
    for t_us in [100.0, 200.0, 400.0, 800.0] {
        let t = t_us * US;
        let envelope = (2.0 * d.omega_d * t / d.omega).powi(2);
        let detuned = make_optimal_schedule(hz_to_angular(30e3), matched_control_phase(Frequency, &d), t, 0.0).unwrap();
        let off = qfi_control_bound(Frequency, &d, Some(&detuned), t).unwrap();
        let free = qfi_control_bound(Frequency, &d, None, t).unwrap();
        assert!(off < 25.0 * envelope, "T {t_us} us: off {off:e} envelope {envelope:e}");
        assert!(free <= 1.0001 * envelope);
    }
}

#[test]
fn alp_anchors() {
    let delta = min_detectable_amplitude(80.0 * US, 100.0).unwrap();
    assert_relative_eq!(delta, 1250.0, max_relative = 1e-12);
    let g = coupling_bound(delta, &AlpParams::default()).unwrap();
    assert_relative_eq!(g, 416.666_666_666_666_7, max_relative = 1e-12);
}

#[test]
fn binomial_mean_at_half() {
    let d = drive(0.0, 0.0);
    let (s, noise) = (ControlSchedule::none(), NoiseModel::ideal());
    let mut rng = substream(5, 1, 0, 0);
    let hits: u32 = (0..100_000)
        .map(|_| u32::from(ramsey_shot(&d, &s, &noise, 2.0 * d.period(), PI / 2.0, &mut rng)))
        .sum();
    assert!((hits as f64 / 1e5 - 0.5).abs() < 0.005);
}

#[test]
fn mid_fringe_shot_noise() {
    let est = invert_fringe(0.5, 1.0, 0.0, 100).unwrap();
    assert_relative_eq!(est.std, 0.1, max_relative = 1e-12);

    let d = drive(0.0, 0.0);
    let noise = NoiseModel {
        shots: 100,
        ..NoiseModel::ideal()
    };
    let t = 40.0 * US;
    let s = ControlSchedule::none();
    let mut rng = substream(9, 2, 0, 0);
    let phis: Vec<f64> = (0..4000)
        .map(|_| estimate_phase(&d, &s, &noise, t, 0.0, &mut rng).unwrap().phi)
        .collect();
    let mean = phis.iter().sum::<f64>() / phis.len() as f64;
    let std = (phis.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (phis.len() - 1) as f64).sqrt();
    assert!((std - 0.1).abs() < 0.01, "std {std}");
}
