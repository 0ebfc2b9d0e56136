//! Monte-Carlo Ramsey experiment: prepare, evolve under drive and control,
//! rotate to mid-fringe, and count excitations.
//!
//! Sensitivities are extracted the way the lab does it: scan the target
//! parameter symmetrically around its nominal value, estimate the phase at
//! each scan point, and regress phase on parameter. The regression is repeated
//! over independent replicate sets to get an error bar.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, domain, work item, replicate)`, so results are bit-identical no
//! matter how the work is scheduled.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::dynamics::{accumulated_phase, make_optimal_schedule, ControlSchedule, DriveParams, QubitState};
use crate::error::{invalid, Error, Result};
use crate::fisher::{optimal_schedule_for, phase_sensitivity_fd, qfi_bures, EstimationTarget};
use crate::par;
use crate::units::TWO_PI;

/// Shape of the coherence decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    /// `exp(-(T / T2)^2)`, the quasi-static noise case.
    Gaussian,
    /// `exp(-T / T2)`.
    Exponential,
}

impl std::str::FromStr for Envelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "exponential" => Ok(Self::Exponential),
            other => Err(invalid(format!("unknown envelope '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Dephasing time, s. `f64::INFINITY` disables dephasing.
    pub t2: f64,
    pub envelope: Envelope,
    /// Preparation error: the probe starts with `P0 = 1/2 + prep_error`.
    pub prep_error: f64,
    /// Shots per phase estimate.
    pub shots: u64,
    pub rng_seed: u64,
}

impl NoiseModel {
    /// No dephasing, perfect preparation, 10^4 shots.
    pub fn ideal() -> Self {
        Self {
            t2: f64::INFINITY,
            envelope: Envelope::Gaussian,
            prep_error: 0.0,
            shots: 10_000,
            rng_seed: 1,
        }
    }

    /// Gaussian dephasing with T2 = 80 us, 10% preparation error, 100 shots.
    pub fn imperfect() -> Self {
        Self {
            t2: 80e-6,
            envelope: Envelope::Gaussian,
            prep_error: 0.1,
            shots: 100,
            rng_seed: 1,
        }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t2 > 0.0) {
            return Err(invalid(format!("T2 must be > 0, got {}", self.t2)));
        }
        if !(self.prep_error.abs() < 0.5) {
            return Err(invalid(format!(
                "preparation error must satisfy |eps| < 1/2, got {}",
                self.prep_error
            )));
        }
        if self.shots == 0 {
            return Err(invalid("shots must be >= 1"));
        }
        Ok(())
    }

    /// Coherence remaining after `total_time`.
    pub fn contrast(&self, total_time: f64) -> f64 {
        if self.t2.is_infinite() {
            return 1.0;
        }
        let r = total_time / self.t2;
        match self.envelope {
            Envelope::Gaussian => (-r * r).exp(),
            Envelope::Exponential => (-r).exp(),
        }
    }

    /// Fringe visibility `C(T) (1 - 4 eps^2)`.
    pub fn visibility(&self, total_time: f64) -> f64 {
        self.contrast(total_time) * (1.0 - 4.0 * self.prep_error * self.prep_error)
    }

    /// Prepared state with relative phase `phi`.
    pub fn prepared_state(&self, phi: f64) -> QubitState {
        QubitState {
            p0: 0.5 + self.prep_error,
            p1: 0.5 - self.prep_error,
            phi,
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::imperfect()
    }
}

/// Excitation probability `1/2 [1 - V cos(phi(T) + analysis_phase)]`.
pub fn excitation_probability(
    drive: &DriveParams,
    schedule: &ControlSchedule,
    noise: &NoiseModel,
    total_time: f64,
    analysis_phase: f64,
) -> f64 {
    let phi = accumulated_phase(drive, schedule, total_time);
    fringe(noise.visibility(total_time), phi + analysis_phase)
}

fn fringe(visibility: f64, phase: f64) -> f64 {
    (0.5 * (1.0 - visibility * phase.cos())).clamp(0.0, 1.0)
}

/// A single projective measurement: 1 if the probe is found excited.
pub fn ramsey_shot<R: Rng + ?Sized>(
    drive: &DriveParams,
    schedule: &ControlSchedule,
    noise: &NoiseModel,
    total_time: f64,
    analysis_phase: f64,
    rng: &mut R,
) -> u8 {
    let p = excitation_probability(drive, schedule, noise, total_time, analysis_phase);
    u8::from(rng.random_bool(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub phi: f64,
    pub std: f64,
    /// Fraction of excited shots.
    pub excited_fraction: f64,
}

/// Inverts an excited fraction measured with analysis phase `pi/2 - guess`,
/// where the fringe reads `1/2 [1 + V sin(phi - guess)]`.
pub fn invert_fringe(excited_fraction: f64, visibility: f64, guess: f64, shots: u64) -> Result<PhaseEstimate> {
    let signal = (2.0 * excited_fraction - 1.0) / visibility;
    if !(signal.abs() <= 1.0) {
        return Err(Error::FringeInversion { signal });
    }
    let offset = signal.asin();
    if offset.abs() > FRAC_PI_2 {
        return Err(Error::ValidityWindow { offset });
    }
    let n = shots as f64;
    // keep the binomial variance finite at the fringe extremes
    let q = excited_fraction.clamp(0.5 / n, 1.0 - 0.5 / n);
    let std = (q * (1.0 - q) / n).sqrt() * 2.0 / (visibility * offset.cos());
    Ok(PhaseEstimate {
        phi: guess + offset,
        std,
        excited_fraction,
    })
}

/// Runs `noise.shots` shots with the analysis rotation set to mid-fringe for
/// the prior `guess` and inverts the excited fraction to a phase.
///
/// The shot count is drawn as one binomial variate, which has the same
/// distribution as summing individual [`ramsey_shot`] outcomes. Fails with
/// [`Error::ValidityWindow`] when the true phase is more than pi/2 from the
/// guess (the estimate would land on the wrong fringe branch) and with
/// [`Error::FringeInversion`] when shot noise pushes the signal past the
/// fringe extremes.
pub fn estimate_phase<R: Rng + ?Sized>(
    drive: &DriveParams,
    schedule: &ControlSchedule,
    noise: &NoiseModel,
    total_time: f64,
    guess: f64,
    rng: &mut R,
) -> Result<PhaseEstimate> {
    let phi = accumulated_phase(drive, schedule, total_time);
    let offset = phi - guess;
    if offset.abs() > FRAC_PI_2 {
        return Err(Error::ValidityWindow { offset });
    }
    let visibility = noise.visibility(total_time);
    let p = fringe(visibility, phi + FRAC_PI_2 - guess);
    let binomial = Binomial::new(noise.shots, p).map_err(|e| invalid(e.to_string()))?;
    let excited = binomial.sample(rng);
    invert_fringe(excited as f64 / noise.shots as f64, visibility, guess, noise.shots)
}

/// Limits on the scan halfwidth `h` chosen by [`auto_halfwidth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanWidth {
    /// Largest expected phase excursion `|slope| h`, rad.
    pub max_phase_excursion: f64,
    /// Frequency scans: `h T` stays below this, rad.
    pub max_detuning_phase: f64,
    /// Amplitude scans: `h` stays below this fraction of `Omega_d`.
    pub max_relative_amplitude: f64,
}

impl Default for ScanWidth {
    fn default() -> Self {
        Self {
            max_phase_excursion: 0.5,
            max_detuning_phase: 0.3,
            max_relative_amplitude: 0.5,
        }
    }
}

/// How a sensitivity is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    /// Scan points per line fit, at least 3.
    pub scan_points: usize,
    /// Independent replicate scans per sensitivity.
    pub replicates: usize,
    /// Control pulse duration as a fraction of the pulse spacing pi / omega_c.
    pub pulse_fraction: f64,
    pub width: ScanWidth,
    /// Longest observation time accepted by [`sensitivity_scaling_dataset`], s.
    pub max_time: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            scan_points: 5,
            replicates: 22,
            pulse_fraction: 0.3,
            width: ScanWidth::default(),
            max_time: 80e-6,
        }
    }
}

impl Protocol {
    /// Instantaneous pulses and no cap on the observation time.
    pub fn ideal() -> Self {
        Self {
            pulse_fraction: 0.0,
            max_time: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scan_points < 3 {
            return Err(invalid(format!("scan_points must be >= 3, got {}", self.scan_points)));
        }
        if self.replicates < 2 {
            return Err(invalid(format!("replicates must be >= 2, got {}", self.replicates)));
        }
        if !(0.0..1.0).contains(&self.pulse_fraction) {
            return Err(invalid(format!(
                "pulse fraction must lie in [0, 1), got {}",
                self.pulse_fraction
            )));
        }
        let w = &self.width;
        if !(w.max_phase_excursion > 0.0 && w.max_phase_excursion < FRAC_PI_2) {
            return Err(invalid("max_phase_excursion must lie in (0, pi/2)"));
        }
        if !(w.max_detuning_phase > 0.0 && w.max_relative_amplitude > 0.0) {
            return Err(invalid("scan width limits must be positive"));
        }
        if !(self.max_time > 0.0) {
            return Err(invalid("max_time must be > 0"));
        }
        Ok(())
    }

    /// Pulse duration for a control frequency `omega_c`.
    pub fn pulse_duration(&self, omega_c: f64) -> f64 {
        self.pulse_fraction * PI / omega_c
    }
}

/// Outcome of one sensitivity measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint {
    pub observation_time: f64,
    /// `|d alpha / d phi|`: Hz per rad for frequency, rad/s per rad for amplitude.
    pub inverse_sensitivity: f64,
    pub std_error: f64,
    pub controlled: bool,
    /// Mean fitted `d phi / d alpha` in internal units (rad per rad/s).
    pub slope: f64,
    pub replicates_used: usize,
}

/// Mean regression slope over replicate scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub std_error: f64,
    pub replicates_used: usize,
}

const DOMAIN_SENSITIVITY: u64 = 0x5345_4e53;
const DOMAIN_SCAN: u64 = 0x5343_414e;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for replicate `replicate` of work item `item`.
pub fn substream(seed: u64, domain: u64, item: u64, replicate: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed ^ domain.rotate_left(32)) ^ item);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(replicate);
    rng
}

/// Control schedule used for a measurement at `total_time`.
pub fn experiment_schedule(
    target: EstimationTarget,
    drive: &DriveParams,
    controlled: bool,
    total_time: f64,
    protocol: &Protocol,
) -> Result<ControlSchedule> {
    if controlled {
        optimal_schedule_for(target, drive, total_time, protocol.pulse_duration(drive.omega))
    } else {
        Ok(ControlSchedule::none())
    }
}

/// Noise-free `d phi / d alpha` used as the prior when sizing the scan.
pub fn prior_slope(
    target: EstimationTarget,
    drive: &DriveParams,
    schedule: &ControlSchedule,
    total_time: f64,
) -> Result<f64> {
    let step = 1e-5 * target.value(drive).abs().max(1.0);
    phase_sensitivity_fd(target, drive, schedule, total_time, step)
}

/// Scan halfwidth that keeps the phase excursion and the detuning or depth
/// change within the limits of `width`.
pub fn auto_halfwidth(
    target: EstimationTarget,
    drive: &DriveParams,
    total_time: f64,
    prior_slope: f64,
    width: &ScanWidth,
) -> f64 {
    let by_phase = width.max_phase_excursion / prior_slope.abs();
    let by_parameter = match target {
        EstimationTarget::Frequency => width.max_detuning_phase / total_time,
        EstimationTarget::Amplitude => width.max_relative_amplitude * drive.omega_d,
    };
    by_phase.min(by_parameter)
}

fn scan_offsets(halfwidth: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|j| halfwidth * (2.0 * j as f64 / (points - 1) as f64 - 1.0))
        .collect()
}

/// Replicated scan of `target` over `[alpha0 - h, alpha0 + h]` with a fixed
/// schedule, returning the mean phase-versus-parameter slope.
///
/// Each replicate estimates the phase at every scan point relative to a
/// calibrated reference (the model phase at the scan centre, which also
/// removes the static shift) and fits a straight line. Replicates with a
/// failed phase estimate are dropped; the measurement fails when fewer than
/// half of them (or fewer than two) survive, and when the mean slope is within
/// two standard errors of zero.
#[allow(clippy::too_many_arguments)]
pub fn measure_slope(
    target: EstimationTarget,
    drive: &DriveParams,
    noise: &NoiseModel,
    schedule: &ControlSchedule,
    total_time: f64,
    halfwidth: f64,
    protocol: &Protocol,
    stream: (u64, u64),
) -> Result<SlopeEstimate> {
    if !(halfwidth.is_finite() && halfwidth > 0.0) {
        return Err(invalid(format!("scan halfwidth must be > 0, got {halfwidth}")));
    }
    let alpha0 = target.value(drive);
    if target == EstimationTarget::Frequency && alpha0 - halfwidth <= 0.0 {
        return Err(invalid("frequency scan would reach non-positive frequencies"));
    }
    let offsets = scan_offsets(halfwidth, protocol.scan_points);
    let drives: Vec<DriveParams> = offsets
        .iter()
        .map(|x| target.with_value(drive, alpha0 + x))
        .collect();
    let reference = accumulated_phase(drive, schedule, total_time);
    let (domain, item) = stream;

    let outcomes = par::map_range(protocol.replicates, |r| -> Result<f64> {
        let mut rng = substream(noise.rng_seed, domain, item, r as u64);
        let mut phases = Vec::with_capacity(drives.len());
        for d in &drives {
            let est = estimate_phase(d, schedule, noise, total_time, reference, &mut rng)?;
            phases.push(est.phi - reference);
        }
        crate::analysis::ols_line(&offsets, &phases).map(|(m, _)| m)
    });

    let mut slopes = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(m) => slopes.push(m),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if slopes.len() < 2 || 2 * slopes.len() < protocol.replicates {
        return Err(first_error.unwrap_or_else(|| invalid("too few replicates")));
    }
    let k = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / k;
    let var = slopes.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k - 1.0);
    let std_error = (var / k).sqrt();
    if mean.abs() <= 2.0 * std_error {
        return Err(Error::ZeroSlope {
            slope: mean,
            std_error,
        });
    }
    Ok(SlopeEstimate {
        slope: mean,
        std_error,
        replicates_used: slopes.len(),
    })
}

fn to_point(
    target: EstimationTarget,
    total_time: f64,
    controlled: bool,
    est: SlopeEstimate,
) -> SensitivityPoint {
    // report frequency sensitivities per Hz rather than per rad/s
    let unit = match target {
        EstimationTarget::Frequency => 1.0 / TWO_PI,
        EstimationTarget::Amplitude => 1.0,
    };
    SensitivityPoint {
        observation_time: total_time,
        inverse_sensitivity: unit / est.slope.abs(),
        std_error: unit * est.std_error / (est.slope * est.slope),
        controlled,
        slope: est.slope,
        replicates_used: est.replicates_used,
    }
}

/// Measures the inverse sensitivity `|d alpha / d phi|` at one observation
/// time. `scan_halfwidth = None` picks the halfwidth with [`auto_halfwidth`].
/// `item` keys the random stream.
#[allow(clippy::too_many_arguments)]
pub fn measure_sensitivity(
    target: EstimationTarget,
    drive: &DriveParams,
    noise: &NoiseModel,
    controlled: bool,
    total_time: f64,
    scan_halfwidth: Option<f64>,
    protocol: &Protocol,
    item: u64,
) -> Result<SensitivityPoint> {
    drive.validate()?;
    noise.validate()?;
    protocol.validate()?;
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(invalid(format!("observation time must be > 0, got {total_time}")));
    }
    let schedule = experiment_schedule(target, drive, controlled, total_time, protocol)?;
    let halfwidth = match scan_halfwidth {
        Some(h) => h,
        None => {
            let slope = prior_slope(target, drive, &schedule, total_time)?;
            auto_halfwidth(target, drive, total_time, slope, &protocol.width)
        }
    };
    let est = measure_slope(
        target,
        drive,
        noise,
        &schedule,
        total_time,
        halfwidth,
        protocol,
        (DOMAIN_SENSITIVITY, item),
    )?;
    Ok(to_point(target, total_time, controlled, est))
}

/// A failed point of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub observation_time: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityDataset {
    pub target: EstimationTarget,
    pub controlled: bool,
    pub points: Vec<SensitivityPoint>,
    pub failures: Vec<PointFailure>,
}

/// One [`measure_sensitivity`] per observation time, keyed by position so the
/// dataset is reproducible from the seed. Failed points are collected rather
/// than aborting the run.
pub fn sensitivity_scaling_dataset(
    target: EstimationTarget,
    drive: &DriveParams,
    noise: &NoiseModel,
    controlled: bool,
    times: &[f64],
    protocol: &Protocol,
) -> Result<SensitivityDataset> {
    drive.validate()?;
    noise.validate()?;
    protocol.validate()?;
    if times.is_empty() {
        return Err(invalid("no observation times"));
    }
    if let Some(t) = times.iter().find(|&&t| !(t > 0.0 && t <= protocol.max_time)) {
        return Err(invalid(format!(
            "observation time {t:e} s is outside (0, {:e}] s",
            protocol.max_time
        )));
    }
    let results = par::map_range(times.len(), |i| {
        measure_sensitivity(target, drive, noise, controlled, times[i], None, protocol, i as u64)
    });
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (&t, result) in times.iter().zip(results) {
        match result {
            Ok(p) => points.push(p),
            Err(error) => {
                log::warn!("sensitivity point at T = {t:e} s failed: {error}");
                failures.push(PointFailure {
                    observation_time: t,
                    error,
                });
            }
        }
    }
    Ok(SensitivityDataset {
        target,
        controlled,
        points,
        failures,
    })
}

/// Frequency-estimation QFI over a grid of control frequencies and phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    /// Control frequencies, Hz.
    pub control_freqs: Vec<f64>,
    /// Control phases, rad.
    pub control_phases: Vec<f64>,
    /// `qfi_estimates[i][j]` at `(control_freqs[i], control_phases[j])`;
    /// `None` marks a failed cell.
    pub qfi_estimates: Vec<Vec<Option<f64>>>,
    /// Scan halfwidth shared by every cell, rad/s.
    pub halfwidth: f64,
}

impl ScanGrid {
    pub fn failed_cells(&self) -> usize {
        self.qfi_estimates.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Cell with the largest QFI among successful cells.
    pub fn peak(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (i, row) in self.qfi_estimates.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some(((i, j), v));
                    }
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    pub fn value(&self, cell: (usize, usize)) -> Option<f64> {
        self.qfi_estimates.get(cell.0)?.get(cell.1).copied().flatten()
    }

    /// Copy with every estimate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            qfi_estimates: self
                .qfi_estimates
                .iter()
                .map(|row| row.iter().map(|v| v.map(|v| v * factor)).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Index of the axis entry closest to `value`.
pub fn nearest_index(axis: &[f64], value: f64) -> usize {
    (0..axis.len())
        .min_by(|&a, &b| (axis[a] - value).abs().total_cmp(&(axis[b] - value).abs()))
        .unwrap_or(0)
}

/// Scans the control frequency (Hz) and phase (rad) of a level-crossing
/// schedule while estimating the drive frequency, converting each measured
/// slope to a QFI with the Bures form for the prepared populations.
///
/// All cells share one scan halfwidth, sized from the largest noise-free slope
/// on the grid so that no cell leaves the phase validity window.
pub fn qfi_scan_2d(
    drive: &DriveParams,
    noise: &NoiseModel,
    total_time: f64,
    control_freqs: &[f64],
    control_phases: &[f64],
    protocol: &Protocol,
) -> Result<ScanGrid> {
    drive.validate()?;
    noise.validate()?;
    protocol.validate()?;
    if control_freqs.is_empty() || control_phases.is_empty() {
        return Err(invalid("scan grid is empty"));
    }
    if control_freqs.iter().any(|&f| !(f > 0.0)) {
        return Err(invalid("control frequencies must be > 0"));
    }
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(invalid(format!("observation time must be > 0, got {total_time}")));
    }
    let target = EstimationTarget::Frequency;
    let np = control_phases.len();
    let cells = control_freqs.len() * np;
    let schedules = par::map_range(cells, |k| {
        let omega_c = TWO_PI * control_freqs[k / np];
        make_optimal_schedule(omega_c, control_phases[k % np], total_time, protocol.pulse_duration(omega_c))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let max_slope = par::map_slice(&schedules, |s| prior_slope(target, drive, s, total_time))
        .into_iter()
        .filter_map(|r| r.ok())
        .fold(0.0_f64, |m, s| m.max(s.abs()));
    if max_slope == 0.0 {
        return Err(invalid("no grid cell has a measurable phase slope"));
    }
    let halfwidth = auto_halfwidth(target, drive, total_time, max_slope, &protocol.width);

    let balanced = noise.prepared_state(0.0);
    let values = par::map_range(cells, |k| {
        measure_slope(
            target,
            drive,
            noise,
            &schedules[k],
            total_time,
            halfwidth,
            protocol,
            (DOMAIN_SCAN, k as u64),
        )
        .map(|est| qfi_bures(&balanced, est.slope))
        .ok()
    });
    let qfi_estimates = values.chunks(np).map(|row| row.to_vec()).collect();
    Ok(ScanGrid {
        control_freqs: control_freqs.to_vec(),
        control_phases: control_phases.to_vec(),
        qfi_estimates,
        halfwidth,
    })
}
