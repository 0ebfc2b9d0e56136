//! Run configuration: TOML file, noise presets and command-line overrides.
//!
//! Frequencies are given in Hz. Times are either plain numbers in seconds or
//! strings with an SI suffix (`"80us"`, `"80 µs"`, `"1.5ms"`, `"2s"`).

use anyhow::{bail, Context, Result};
use ionprobe::alp::AlpParams;
use ionprobe::experiment::{Envelope, NoiseModel, Protocol, ScanWidth};
use ionprobe::units::hz_to_angular;
use ionprobe::{DriveParams, EstimationTarget};
use serde::{Deserialize, Deserializer, Serialize};
use std::path::Path;

/// A duration in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Seconds(pub f64);

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Number(v) => Ok(Seconds(v)),
            Raw::Text(s) => parse_time(&s).map(Seconds).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses `"80us"`, `"80 µs"`, `"1e-3 s"`, `"inf"` and bare numbers as seconds.
pub fn parse_time(text: &str) -> Result<f64> {
    let s = text.trim();
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    // the unit is the trailing run of letters, so exponents like 2e-3 survive
    let number = s.trim_end_matches(char::is_alphabetic);
    let unit = &s[number.len()..];
    let value: f64 = number
        .trim()
        .parse()
        .with_context(|| format!("invalid time '{text}'"))?;
    // dividing by an exact power of ten rounds correctly: "80us" is 80e-6
    let per_second = match unit.trim() {
        "" | "s" => 1.0,
        "ms" => 1e3,
        "us" | "µs" | "μs" => 1e6,
        "ns" => 1e9,
        other => bail!("unknown time unit '{other}' in '{text}'"),
    };
    Ok(value / per_second)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Ideal,
    Imperfect,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    pub target: Option<String>,
    pub controlled: Option<bool>,
    pub drive: DriveConfig,
    pub noise: NoiseConfig,
    pub protocol: ProtocolConfig,
    pub qfi_curve: QfiCurveConfig,
    pub sensitivity: SensitivityConfig,
    pub scan2d: ScanConfig,
    pub fit: FitConfig,
    pub alp: AlpConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub stark_shift_hz: Option<f64>,
    pub modulation_depth_hz: Option<f64>,
    pub modulation_frequency_hz: Option<f64>,
    pub phase_rad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub t2: Option<Seconds>,
    pub envelope: Option<String>,
    pub prep_error: Option<f64>,
    pub shots: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub scan_points: Option<usize>,
    pub replicates: Option<usize>,
    pub pulse_fraction: Option<f64>,
    pub max_phase_excursion: Option<f64>,
    pub max_detuning_phase: Option<f64>,
    pub max_relative_amplitude: Option<f64>,
    pub max_time: Option<Seconds>,
    pub max_failure_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QfiCurveConfig {
    pub start_periods: Option<f64>,
    pub stop_periods: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub t_min: Option<Seconds>,
    pub t_max: Option<Seconds>,
    pub max_points: Option<usize>,
    pub sampling: Option<Sampling>,
    pub times: Option<Vec<Seconds>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Readout at the extrema of the drive, twice per period.
    QuarterPeriod,
    /// Readout once per period, at whole periods.
    Period,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub total_time: Option<Seconds>,
    pub freq_start_hz: Option<f64>,
    pub freq_stop_hz: Option<f64>,
    pub freq_step_hz: Option<f64>,
    pub phase_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub slope_range: Option<[f64; 2]>,
    pub intercept_range: Option<[f64; 2]>,
    pub resolution: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlpConfig {
    pub mass_hz: Option<f64>,
    pub rho_dm: Option<f64>,
    pub v_anchor: Option<f64>,
    pub g_ref: Option<f64>,
    pub anchor_time: Option<Seconds>,
    pub anchor_probes: Option<f64>,
    pub t_min: Option<Seconds>,
    pub t_max: Option<Seconds>,
    pub time_points: Option<usize>,
    pub probes_min: Option<f64>,
    pub probes_max: Option<f64>,
    pub probe_points: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Values set on the command line; they take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    pub controlled: Option<bool>,
    pub target: Option<EstimationTarget>,
    pub slope_range: Option<[f64; 2]>,
    pub intercept_range: Option<[f64; 2]>,
    pub resolution: Option<usize>,
}

/// Fully resolved settings, recorded verbatim in every output header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub preset: Preset,
    pub target: String,
    /// `None` runs both the controlled and the uncontrolled variant.
    pub controlled: Option<bool>,
    pub drive: DriveSettings,
    pub noise: NoiseSettings,
    pub protocol: ProtocolSettings,
    pub qfi_curve: QfiCurveSettings,
    pub sensitivity: SensitivitySettings,
    pub scan2d: ScanSettings,
    pub fit: FitSettings,
    pub alp: AlpSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveSettings {
    pub stark_shift_hz: f64,
    pub modulation_depth_hz: f64,
    pub modulation_frequency_hz: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSettings {
    pub t2: Seconds,
    pub envelope: String,
    pub prep_error: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolSettings {
    pub scan_points: usize,
    pub replicates: usize,
    pub pulse_fraction: f64,
    pub max_phase_excursion: f64,
    pub max_detuning_phase: f64,
    pub max_relative_amplitude: f64,
    pub max_time: Seconds,
    pub max_failure_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QfiCurveSettings {
    pub start_periods: f64,
    pub stop_periods: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivitySettings {
    pub t_min: Seconds,
    pub t_max: Seconds,
    pub max_points: usize,
    pub sampling: Sampling,
    pub times: Option<Vec<Seconds>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSettings {
    pub total_time: Seconds,
    pub freq_start_hz: f64,
    pub freq_stop_hz: f64,
    pub freq_step_hz: f64,
    pub phase_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSettings {
    pub slope_range: Option<[f64; 2]>,
    pub intercept_range: Option<[f64; 2]>,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlpSettings {
    pub mass_hz: f64,
    pub rho_dm: f64,
    pub v_anchor: f64,
    pub g_ref: f64,
    pub anchor_time: Seconds,
    pub anchor_probes: f64,
    pub t_min: Seconds,
    pub t_max: Seconds,
    pub time_points: usize,
    pub probes_min: f64,
    pub probes_max: f64,
    pub probe_points: usize,
}

fn envelope_name(envelope: Envelope) -> &'static str {
    match envelope {
        Envelope::Gaussian => "gaussian",
        Envelope::Exponential => "exponential",
    }
}

impl Settings {
    /// Applies the noise preset, then the file, then the command line.
    pub fn resolve(file: RunConfig, flags: &Overrides) -> Result<Self> {
        let preset = flags.preset.or(file.preset).unwrap_or(Preset::Imperfect);
        let (noise, protocol) = match preset {
            Preset::Ideal => (NoiseModel::ideal(), Protocol::ideal()),
            Preset::Imperfect => (NoiseModel::imperfect(), Protocol::default()),
        };
        let target = match (flags.target, file.target) {
            (Some(t), _) => t,
            (None, Some(name)) => name.parse().map_err(|e| anyhow::anyhow!("{e}"))?,
            (None, None) => EstimationTarget::Frequency,
        };
        let d = file.drive;
        let n = file.noise;
        let p = file.protocol;
        let q = file.qfi_curve;
        let s = file.sensitivity;
        let g = file.scan2d;
        let f = file.fit;
        let a = file.alp;
        let alp = AlpParams::default();
        let modulation_frequency_hz = d.modulation_frequency_hz.unwrap_or(50e3);
        // the noise-free model has no coherence limit, so it defaults to the
        // long-time window of 10 to 100 drive periods
        let (t_min, t_max) = match preset {
            Preset::Ideal => (10.0 / modulation_frequency_hz, 100.0 / modulation_frequency_hz),
            Preset::Imperfect => (10e-6, 80e-6),
        };
        let settings = Settings {
            seed: flags.seed.or(file.seed).unwrap_or(noise.rng_seed),
            preset,
            target: target.name().to_string(),
            controlled: flags.controlled.or(file.controlled),
            drive: DriveSettings {
                stark_shift_hz: d.stark_shift_hz.unwrap_or(100e3),
                modulation_depth_hz: d.modulation_depth_hz.unwrap_or(10e3),
                modulation_frequency_hz,
                phase_rad: d.phase_rad.unwrap_or(0.0),
            },
            noise: NoiseSettings {
                t2: n.t2.unwrap_or(Seconds(noise.t2)),
                envelope: n.envelope.unwrap_or_else(|| envelope_name(noise.envelope).to_string()),
                prep_error: n.prep_error.unwrap_or(noise.prep_error),
                shots: n.shots.unwrap_or(noise.shots),
            },
            protocol: ProtocolSettings {
                scan_points: p.scan_points.unwrap_or(protocol.scan_points),
                replicates: p.replicates.unwrap_or(protocol.replicates),
                pulse_fraction: p.pulse_fraction.unwrap_or(protocol.pulse_fraction),
                max_phase_excursion: p.max_phase_excursion.unwrap_or(protocol.width.max_phase_excursion),
                max_detuning_phase: p.max_detuning_phase.unwrap_or(protocol.width.max_detuning_phase),
                max_relative_amplitude: p.max_relative_amplitude.unwrap_or(protocol.width.max_relative_amplitude),
                max_time: p.max_time.unwrap_or(Seconds(protocol.max_time)),
                max_failure_fraction: p.max_failure_fraction.unwrap_or(0.5),
            },
            qfi_curve: QfiCurveSettings {
                start_periods: q.start_periods.unwrap_or(10.0),
                stop_periods: q.stop_periods.unwrap_or(100.0),
                points: q.points.unwrap_or(400),
            },
            sensitivity: SensitivitySettings {
                t_min: s.t_min.unwrap_or(Seconds(t_min)),
                t_max: s.t_max.unwrap_or(Seconds(t_max)),
                max_points: s.max_points.unwrap_or(12),
                sampling: s.sampling.unwrap_or(Sampling::QuarterPeriod),
                times: s.times,
            },
            scan2d: ScanSettings {
                total_time: g.total_time.unwrap_or(Seconds(75e-6)),
                freq_start_hz: g.freq_start_hz.unwrap_or(30e3),
                freq_stop_hz: g.freq_stop_hz.unwrap_or(70e3),
                freq_step_hz: g.freq_step_hz.unwrap_or(1e3),
                phase_points: g.phase_points.unwrap_or(41),
            },
            fit: FitSettings {
                slope_range: flags.slope_range.or(f.slope_range),
                intercept_range: flags.intercept_range.or(f.intercept_range),
                resolution: flags.resolution.or(f.resolution).unwrap_or(101),
            },
            alp: AlpSettings {
                mass_hz: a.mass_hz.unwrap_or(ionprobe::units::angular_to_hz(alp.m_a)),
                rho_dm: a.rho_dm.unwrap_or(alp.rho_dm),
                v_anchor: a.v_anchor.unwrap_or(alp.v_anchor),
                g_ref: a.g_ref.unwrap_or(alp.g_ref),
                anchor_time: a.anchor_time.unwrap_or(Seconds(80e-6)),
                anchor_probes: a.anchor_probes.unwrap_or(100.0),
                t_min: a.t_min.unwrap_or(Seconds(1e-6)),
                t_max: a.t_max.unwrap_or(Seconds(1.0)),
                time_points: a.time_points.unwrap_or(31),
                probes_min: a.probes_min.unwrap_or(1.0),
                probes_max: a.probes_max.unwrap_or(1e14),
                probe_points: a.probe_points.unwrap_or(29),
            },
        };
        settings.validate()?;
        Ok(settings)
    }

    /// Checks every derived model object so that bad input fails before any
    /// work starts.
    pub fn validate(&self) -> Result<()> {
        self.drive_params()?;
        self.noise_model()?.validate()?;
        self.protocol()?.validate()?;
        self.alp_params().validate()?;
        let frac = self.protocol.max_failure_fraction;
        if !(0.0..=1.0).contains(&frac) {
            bail!("max_failure_fraction must lie in [0, 1], got {frac}");
        }
        let q = &self.qfi_curve;
        if !(q.start_periods > 0.0 && q.stop_periods > q.start_periods && q.points >= 2) {
            bail!("qfi_curve needs 0 < start_periods < stop_periods and at least 2 points");
        }
        let s = &self.sensitivity;
        match &s.times {
            Some(times) if times.is_empty() => bail!("sensitivity.times is empty"),
            Some(times) if times.windows(2).any(|w| w[1].0 <= w[0].0) => {
                bail!("sensitivity.times must be strictly increasing")
            }
            Some(_) => {}
            None => {
                if !(s.t_min.0 > 0.0 && s.t_max.0 >= s.t_min.0 && s.max_points >= 1) {
                    bail!("sensitivity needs 0 < t_min <= t_max and max_points >= 1");
                }
            }
        }
        let g = &self.scan2d;
        if !(g.total_time.0 > 0.0
            && g.freq_start_hz > 0.0
            && g.freq_stop_hz >= g.freq_start_hz
            && g.freq_step_hz > 0.0
            && g.phase_points >= 1)
        {
            bail!("scan2d needs a positive time, 0 < freq_start_hz <= freq_stop_hz, freq_step_hz > 0 and phase_points >= 1");
        }
        if self.fit.resolution < 3 {
            bail!("fit resolution must be at least 3");
        }
        for range in [self.fit.slope_range, self.fit.intercept_range].into_iter().flatten() {
            if !(range[0] < range[1]) {
                bail!("fit ranges must satisfy lo < hi, got {range:?}");
            }
        }
        let a = &self.alp;
        if !(a.anchor_time.0 > 0.0 && a.anchor_probes >= 1.0 && a.time_points >= 2 && a.probe_points >= 2) {
            bail!("alp needs a positive anchor, anchor_probes >= 1 and at least 2 points per axis");
        }
        if !(a.probes_min >= 1.0) {
            bail!("alp.probes_min must be >= 1");
        }
        Ok(())
    }

    pub fn target(&self) -> EstimationTarget {
        self.target.parse().expect("validated at resolve time")
    }

    pub fn drive_params(&self) -> Result<DriveParams> {
        let d = &self.drive;
        Ok(DriveParams::new(
            hz_to_angular(d.stark_shift_hz),
            hz_to_angular(d.modulation_depth_hz),
            hz_to_angular(d.modulation_frequency_hz),
            d.phase_rad,
        )?)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        let n = &self.noise;
        Ok(NoiseModel {
            t2: n.t2.0,
            envelope: n.envelope.parse()?,
            prep_error: n.prep_error,
            shots: n.shots,
            rng_seed: self.seed,
        })
    }

    pub fn protocol(&self) -> Result<Protocol> {
        let p = &self.protocol;
        Ok(Protocol {
            scan_points: p.scan_points,
            replicates: p.replicates,
            pulse_fraction: p.pulse_fraction,
            width: ScanWidth {
                max_phase_excursion: p.max_phase_excursion,
                max_detuning_phase: p.max_detuning_phase,
                max_relative_amplitude: p.max_relative_amplitude,
            },
            max_time: p.max_time.0,
        })
    }

    pub fn alp_params(&self) -> AlpParams {
        let a = &self.alp;
        AlpParams {
            m_a: hz_to_angular(a.mass_hz),
            rho_dm: a.rho_dm,
            v_anchor: a.v_anchor,
            g_ref: a.g_ref,
        }
    }

    /// Variants selected by `--controlled` / `--uncontrolled`.
    pub fn variants(&self) -> Vec<bool> {
        match self.controlled {
            Some(c) => vec![c],
            None => vec![true, false],
        }
    }

    /// Largest number of failures allowed out of `total` work items.
    pub fn failure_limit(&self, total: usize) -> usize {
        (self.protocol.max_failure_fraction * total as f64).floor() as usize
    }

    /// TOML rendering used in output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize")
    }
}
