//! Acceptance gate. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ionprobe::alp::{self, AlpParams};
use ionprobe::analysis::{chi2_map, fit_loglog, ols_line};
use ionprobe::dynamics::{
    accumulated_phase, accumulated_phase_oracle, aligned_times, log_subsample, ControlSchedule, DriveParams,
};
use ionprobe::experiment::{
    estimate_phase, nearest_index, qfi_scan_2d, sensitivity_scaling_dataset, substream,
    NoiseModel, Protocol, SensitivityPoint,
};
use ionprobe::fisher::{
    centred_control_phase, integrated_gap, optimal_schedule_for, phase_sensitivity_fd, qfi_bures,
    qfi_curve, EstimationTarget,
};
use ionprobe::units::{hz_to_angular, MICROSECOND as US, TWO_PI};
use ionprobe::QubitState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use EstimationTarget::{Amplitude, Frequency};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fold(parts: Vec<Outcome>) -> Outcome {
    Outcome {
        pass: parts.iter().all(|p| p.pass),
        detail: parts
            .iter()
            .map(|p| format!("{}{}", if p.pass { "" } else { "!" }, p.detail))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn default_drive() -> DriveParams {
    DriveParams::new(hz_to_angular(100e3), hz_to_angular(10e3), hz_to_angular(50e3), 0.0).unwrap()
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    ols_line(&lx, &ly).unwrap().0
}

/// Roughly `count` entries of `times` spaced evenly in log T.
fn criterion_1() -> Outcome {
    let d = default_drive();
    let p = d.period();
    let periods: Vec<f64> = (10..=100).map(|k| k as f64 * p).collect();
    // dashed curve: uncontrolled, read out a quarter period past each period
    let offset: Vec<f64> = aligned_times(&d, 10.0 * p, 100.0 * p + 0.5 * p, PI / 2.0, TWO_PI);
    let slope = |target, controlled, times: &[f64]| {
        let c = qfi_curve(target, &d, controlled, times).unwrap();
        loglog_slope(&c.times, &c.qfi_values)
    };
    let cf = slope(Frequency, true, &periods);
    let uf = slope(Frequency, false, &offset);
    let ca = slope(Amplitude, true, &periods);
    fold(vec![
        check(within(cf, 4.0, 0.05), format!("controlled frequency slope {cf:.4}")),
        check(within(uf, 2.0, 0.05), format!("uncontrolled frequency slope {uf:.4}")),
        check(within(ca, 2.0, 0.05), format!("controlled amplitude slope {ca:.4}")),
    ])
}

fn fitted_exponent(
    target: EstimationTarget,
    controlled: bool,
    noise: &NoiseModel,
    protocol: &Protocol,
    times: &[f64],
) -> Result<(f64, f64, Vec<SensitivityPoint>), String> {
    let d = default_drive();
    let set = sensitivity_scaling_dataset(target, &d, noise, controlled, times, protocol)
        .map_err(|e| e.to_string())?;
    if !set.failures.is_empty() {
        return Err(format!("{} failed points", set.failures.len()));
    }
    let fit = fit_loglog(&set.points).map_err(|e| e.to_string())?;
    Ok((fit.slope, fit.slope_error(), set.points))
}

fn ideal_times() -> Vec<f64> {
    let d = default_drive();
    let p = d.period();
    log_subsample(&aligned_times(&d, 10.0 * p, 100.0 * p, PI / 2.0, PI), 12)
}

fn criterion_2() -> Outcome {
    let noise = NoiseModel::ideal().with_seed(11);
    let protocol = Protocol::ideal();
    let times = ideal_times();
    let mut parts = Vec::new();
    for (target, controlled, expect, name) in [
        (Frequency, true, -2.0, "controlled frequency"),
        (Frequency, false, -1.0, "uncontrolled frequency"),
        (Amplitude, true, -1.0, "controlled amplitude"),
        (Amplitude, false, 0.0, "uncontrolled amplitude"),
    ] {
        let tol = if expect == 0.0 { 0.05 } else { 0.02 };
        parts.push(match fitted_exponent(target, controlled, &noise, &protocol, &times) {
            Ok((m, e, _)) => check(within(m, expect, tol), format!("{name} {m:.4} +- {e:.4}")),
            Err(e) => check(false, format!("{name}: {e}")),
        });
    }
    fold(parts)
}

fn criterion_3() -> Outcome {
    let d = default_drive();
    let noise = NoiseModel::imperfect().with_seed(11);
    let protocol = Protocol::default();
    let times = aligned_times(&d, 10.0 * US, 80.0 * US, PI / 2.0, PI);
    let mut parts = Vec::new();
    for (controlled, range, name) in [
        (true, (-1.9, -1.6), "controlled"),
        (false, (-1.0, -0.8), "uncontrolled"),
    ] {
        parts.push(match fitted_exponent(Frequency, controlled, &noise, &protocol, &times) {
            Ok((m, e, _)) => check(
                m >= range.0 && m <= range.1,
                format!("{name} {m:.4} +- {e:.4} (want [{}, {}])", range.0, range.1),
            ),
            Err(e) => check(false, format!("{name}: {e}")),
        });
    }
    fold(parts)
}

fn criterion_4() -> Outcome {
    let delta = alp::min_detectable_amplitude(80.0 * US, 100.0).unwrap();
    let g = alp::coupling_bound(delta, &AlpParams::default()).unwrap();
    let grid = alp::reach_grid(
        &alp::log_axis(1e-5, 1.0, 26).unwrap(),
        &alp::log_axis(1.0, 1e14, 29).unwrap(),
        &AlpParams::default(),
    )
    .unwrap();
    let corner = grid.corner();
    fold(vec![
        check(within(delta, 1250.0, 1e-9), format!("amplitude {delta:.6} s^-1")),
        check(within(g, 400.0, 40.0), format!("bound {g:.2} GeV^-1")),
        check((1e-10..=1e-6).contains(&corner), format!("gas-cell corner {corner:.3e} GeV^-1")),
    ])
}

fn scan_axes() -> (Vec<f64>, Vec<f64>) {
    let freqs = (0..41).map(|k| 30e3 + 1e3 * k as f64).collect();
    let phases = (0..41).map(|k| PI * k as f64 / 40.0).collect();
    (freqs, phases)
}

fn criterion_5() -> Outcome {
    let d = DriveParams::new(hz_to_angular(100e3), hz_to_angular(10e3), hz_to_angular(50e3), 0.0).unwrap();
    let (freqs, phases) = scan_axes();
    let fi = nearest_index(&freqs, 50e3);
    let protocol = Protocol::default();
    let tau = protocol.pulse_duration(d.omega);
    let pj = nearest_index(&phases, centred_control_phase(Frequency, &d, tau));
    let mut misses = Vec::new();
    let mut freq_hits = 0;
    for seed in 1..=10 {
        let noise = NoiseModel::imperfect().with_seed(seed);
        let grid = qfi_scan_2d(&d, &noise, 75.0 * US, &freqs, &phases, &protocol).unwrap();
        let (i, j) = grid.peak().unwrap();
        if i.abs_diff(fi) <= 1 {
            freq_hits += 1;
        }
        if i.abs_diff(fi) > 1 || j.abs_diff(pj) > 1 {
            misses.push(format!("seed {seed}: ({:.0} Hz, {:.3} rad)", freqs[i], phases[j]));
        }
    }
    check(
        misses.is_empty(),
        format!(
            "argmax within one cell of ({:.0} Hz, {:.3} rad) for {}/10 seeds (frequency alone {freq_hits}/10){}",
            freqs[fi],
            phases[pj],
            10 - misses.len(),
            if misses.is_empty() { String::new() } else { format!(", misses: {}", misses.join(", ")) }
        ),
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> (DriveParams, ControlSchedule, f64) {
    let omega = hz_to_angular(rng.random_range(1e3..1e5));
    let d = DriveParams::new(
        hz_to_angular(rng.random_range(-2e5..2e5)),
        hz_to_angular(rng.random_range(0.0..2e4)),
        omega,
        rng.random_range(0.0..TWO_PI),
    )
    .unwrap();
    let total = rng.random_range(1.0..40.0) * d.period();
    let schedule = match rng.random_range(0..3) {
        0 => ControlSchedule::none(),
        1 => {
            let omega_c = omega * rng.random_range(0.5..2.0);
            let tau = rng.random_range(0.0..0.9) * PI / omega_c;
            ionprobe::dynamics::make_optimal_schedule(omega_c, rng.random_range(0.0..PI), total, tau).unwrap()
        }
        _ => {
            let count = rng.random_range(1..30);
            let mut t: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..total)).collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            let gap = t.windows(2).map(|w| w[1] - w[0]).fold(total, f64::min);
            ControlSchedule::from_pulses(t, 0.5 * gap * rng.random::<f64>()).unwrap()
        }
    };
    (d, schedule, total)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for _ in 0..1000 {
        let (d, s, t) = random_instance(&mut rng);
        let closed = accumulated_phase(&d, &s, t);
        match accumulated_phase_oracle(&d, &s, t) {
            Ok(oracle) => worst = worst.max((closed - oracle).abs() / oracle.abs().max(1e-300)),
            Err(_) => failures += 1,
        }
    }

    // finite difference against the rectified bound, balanced preparation
    let d = DriveParams::new(hz_to_angular(100e3), hz_to_angular(1e3), hz_to_angular(50e3), 0.0).unwrap();
    let mut fd_worst = 0.0_f64;
    for target in [Frequency, Amplitude] {
        for k in [1.0, 2.25, 5.0, 12.75, 40.0] {
            let t = k * d.period();
            let s = optimal_schedule_for(target, &d, t, 0.0).unwrap();
            let step = 1e-6 * target.value(&d);
            let slope = phase_sensitivity_fd(target, &d, &s, t, step).unwrap();
            let f = qfi_bures(&QubitState::balanced(0.0), slope);
            let bound = integrated_gap(target, &d, Some(&s), t).unwrap().powi(2);
            fd_worst = fd_worst.max((f - bound).abs() / bound);
        }
    }
    fold(vec![
        check(
            failures == 0 && worst <= 1e-9,
            format!("closed form vs quadrature: worst rel {worst:.2e} over 1000 ({failures} non-converged)"),
        ),
        check(fd_worst <= 1e-6, format!("finite difference vs bound: worst rel {fd_worst:.2e}")),
    ])
}

fn criterion_7() -> Outcome {
    // shot-noise scaling: spread of phase estimates times sqrt(n)
    let d = default_drive();
    let t = 25.0 * US;
    let schedule = ControlSchedule::none();
    let phi = accumulated_phase(&d, &schedule, t);
    let mut scaled = Vec::new();
    for n in [100u64, 400, 1600] {
        let noise = NoiseModel {
            shots: n,
            ..NoiseModel::ideal()
        };
        let trials = 20_000;
        let mut rng = substream(7, 0, n, 0);
        let est: Vec<f64> = (0..trials)
            .map(|_| estimate_phase(&d, &schedule, &noise, t, phi, &mut rng).unwrap().phi)
            .collect();
        let mean = est.iter().sum::<f64>() / trials as f64;
        let sd = (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
        scaled.push(sd * (n as f64).sqrt());
    }
    let spread = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min) - 1.0;

    // confidence interval coverage of the log-log slope
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let times: Vec<f64> = (0..8).map(|k| 10.0 * US * 1.3f64.powi(k)).collect();
    let rel = 0.05;
    let noise = Normal::new(0.0, rel / std::f64::consts::LN_10).unwrap();
    let trials = 1000;
    let mut covered = 0;
    for _ in 0..trials {
        let pts: Vec<SensitivityPoint> = times
            .iter()
            .map(|&t| {
                let truth = 3.0 * t.powf(-1.75);
                let value = truth * 10f64.powf(noise.sample(&mut rng));
                SensitivityPoint {
                    observation_time: t,
                    inverse_sensitivity: value,
                    std_error: rel * value,
                    controlled: true,
                    slope: 1.0 / value,
                    replicates_used: 22,
                }
            })
            .collect();
        let fit = fit_loglog(&pts).unwrap();
        if (fit.slope + 1.75).abs() <= 1.959_964 * fit.slope_error() {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;

    // chi-square map on the ideal controlled dataset
    let (_, _, points) = fitted_exponent(Frequency, true, &NoiseModel::ideal().with_seed(11), &Protocol::ideal(), &ideal_times())
        .expect("ideal controlled dataset");
    let fit = fit_loglog(&points).unwrap();
    let (ms, bs) = (fit.slope_error(), fit.intercept_error());
    let res = 101;
    let map = chi2_map(
        &points,
        (fit.slope - 6.0 * ms, fit.slope + 6.0 * ms),
        (fit.intercept - 6.0 * bs, fit.intercept + 6.0 * bs),
        res,
    )
    .unwrap();
    let (i, j) = map.min_cell();
    let step_m = map.slope_axis[1] - map.slope_axis[0];
    let step_b = map.intercept_axis[1] - map.intercept_axis[0];
    let same_cell = (map.slope_axis[i] - fit.slope).abs() <= step_m && (map.intercept_axis[j] - fit.intercept).abs() <= step_b;
    let inside = map.slope_within(0.95, -2.0).unwrap_or(false);

    fold(vec![
        check(spread <= 0.05, format!("phi_std sqrt(n) spread {:.2}% ({:.4}, {:.4}, {:.4})", 100.0 * spread, scaled[0], scaled[1], scaled[2])),
        check(within(coverage, 0.95, 0.02), format!("95% CI coverage {:.1}%", 100.0 * coverage)),
        check(same_cell, format!("chi2 minimum cell ({:.5}, {:.5}) vs fit ({:.5}, {:.5})", map.slope_axis[i], map.intercept_axis[j], fit.slope, fit.intercept)),
        check(inside, format!("slope -2 inside 95% contour (fit {:.4} +- {:.4}, chi2_red {:.2})", fit.slope, ms, fit.chi2_reduced)),
    ])
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 QFI scaling", criterion_1, Duration::from_secs(10)),
        ("2 ideal sensitivity scaling", criterion_2, Duration::from_secs(60)),
        ("3 imperfect sensitivity scaling", criterion_3, Duration::from_secs(120)),
        ("4 ALP anchors", criterion_4, Duration::from_secs(1)),
        ("5 2-D scan peak", criterion_5, Duration::from_secs(120)),
        ("6 oracle equivalence", criterion_6, Duration::from_secs(30)),
        ("7 statistical properties", criterion_7, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if elapsed > budget {
            outcome.pass = false;
            outcome.detail.push_str(&format!("; !over time budget {budget:?}"));
        }
        println!(
            "[{}] criterion {name}: {} ({:.2} s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/7 criteria passed", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
