use crate::config::{Sampling, Settings};
use crate::output::{num, opt, read_sensitivity, sensitivity_row, Entries, Output, SENSITIVITY_COLUMNS};
use anyhow::{bail, Context, Result};
use ionprobe::alp::{coupling_bound, log_axis, min_detectable_amplitude, reach_grid};
use ionprobe::analysis::{chi2_map, fit_loglog, ols_line, LogLogFit};
use ionprobe::dynamics::{aligned_times, log_subsample};
use ionprobe::experiment::{qfi_scan_2d, sensitivity_scaling_dataset, SensitivityDataset};
use ionprobe::fisher::{centred_control_phase, qfi_curve};
use ionprobe::units::{angular_to_hz, TWO_PI};
use ionprobe::EstimationTarget;
use std::f64::consts::PI;
use std::path::Path;

/// Gas-cell band of the coupling reach, GeV^-1.
const GAS_CELL_BAND: (f64, f64) = (1e-10, 1e-6);

fn variant_name(controlled: bool) -> &'static str {
    if controlled {
        "controlled"
    } else {
        "uncontrolled"
    }
}

/// Log-log least-squares slope, or `None` when a value is not positive.
fn loglog_slope(times: &[f64], values: &[f64]) -> Option<f64> {
    if values.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let x: Vec<f64> = times.iter().map(|t| t.log10()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.log10()).collect();
    ols_line(&x, &y).ok().map(|(m, _)| m)
}

pub fn qfi_curve_cmd(settings: &Settings, out: &mut Output) -> Result<()> {
    let d = settings.drive_params()?;
    let target = settings.target();
    let q = &settings.qfi_curve;
    let p = d.period();
    let dense = log_axis(q.start_periods * p, q.stop_periods * p, q.points)?;
    // the uncontrolled curve read out a quarter period past each period
    let sampled = aligned_times(&d, q.start_periods * p, (q.stop_periods + 0.5) * p, PI / 2.0, TWO_PI);

    let mut rows = Vec::new();
    let mut summary = Entries::default();
    summary.add("target", target.name()).add("drive_period_s", num(p));
    let mut series: Vec<(&str, bool, &[f64])> = Vec::new();
    for controlled in settings.variants() {
        series.push((variant_name(controlled), controlled, &dense));
        if !controlled {
            series.push(("period_sampled", false, &sampled));
        }
    }
    for (name, controlled, times) in series {
        if times.is_empty() {
            log::warn!("series {name} has no sample times");
            continue;
        }
        let curve = qfi_curve(target, &d, controlled, times)?;
        for (&t, &v) in curve.times.iter().zip(&curve.qfi_values) {
            rows.push(vec![name.to_string(), num(t), num(t / p), num(v)]);
        }
        summary.add(format!("{name}.points"), times.len());
        summary.add(format!("{name}.slope"), opt(loglog_slope(&curve.times, &curve.qfi_values)));
    }
    out.table("qfi_curve.csv", &["series", "time_s", "periods", "qfi"], rows)?;
    out.summary("qfi_summary.txt", &summary.0)
}

fn sensitivity_times(settings: &Settings) -> Result<Vec<f64>> {
    let s = &settings.sensitivity;
    if let Some(times) = &s.times {
        return Ok(times.iter().map(|t| t.0).collect());
    }
    let d = settings.drive_params()?;
    let (readout, stride) = match s.sampling {
        Sampling::QuarterPeriod => (PI / 2.0, PI),
        Sampling::Period => (d.theta, TWO_PI),
    };
    let times = log_subsample(&aligned_times(&d, s.t_min.0, s.t_max.0, readout, stride), s.max_points);
    if times.is_empty() {
        bail!(
            "no observation times between {:e} s and {:e} s with {:?} sampling",
            s.t_min.0,
            s.t_max.0,
            s.sampling
        );
    }
    Ok(times)
}

fn fit_entries(summary: &mut Entries, prefix: &str, fit: &LogLogFit) {
    summary
        .add(format!("{prefix}.slope"), num(fit.slope))
        .add(format!("{prefix}.slope_error"), num(fit.slope_error()))
        .add(format!("{prefix}.intercept"), num(fit.intercept))
        .add(format!("{prefix}.intercept_error"), num(fit.intercept_error()))
        .add(format!("{prefix}.chi2_reduced"), num(fit.chi2_reduced))
        .add(format!("{prefix}.dof"), fit.dof)
        .add(format!("{prefix}.flagged"), format!("{:?}", fit.flagged));
}

/// Runs the sensitivity scaling measurement. Returns the failure report when
/// too many points fail or a fit is impossible; all files are written first.
pub fn sensitivity_cmd(settings: &Settings, out: &mut Output) -> Result<()> {
    let d = settings.drive_params()?;
    let noise = settings.noise_model()?;
    let protocol = settings.protocol()?;
    let target = settings.target();
    let times = sensitivity_times(settings)?;
    let mut summary = Entries::default();
    summary.add("target", target.name());
    let mut problems = Vec::new();
    for controlled in settings.variants() {
        let name = variant_name(controlled);
        let set = sensitivity_scaling_dataset(target, &d, &noise, controlled, &times, &protocol)?;
        write_dataset(out, &format!("sensitivity_{name}.csv"), &set)?;
        summary.add(format!("{name}.points"), set.points.len());
        summary.add(format!("{name}.failures"), set.failures.len());
        for f in &set.failures {
            summary.add(format!("{name}.failure"), format!("T = {} s: {}", num(f.observation_time), f.error));
        }
        let limit = settings.failure_limit(times.len());
        if set.failures.len() > limit {
            problems.push(format!("{name}: {} of {} points failed (limit {limit})", set.failures.len(), times.len()));
        }
        match fit_loglog(&set.points) {
            Ok(fit) => fit_entries(&mut summary, name, &fit),
            Err(e) => {
                summary.add(format!("{name}.fit_error"), &e);
                problems.push(format!("{name}: {e}"));
            }
        }
    }
    out.summary("sensitivity_fit.txt", &summary.0)?;
    if !problems.is_empty() {
        bail!("sensitivity run incomplete: {}", problems.join("; "));
    }
    Ok(())
}

fn write_dataset(out: &mut Output, name: &str, set: &SensitivityDataset) -> Result<()> {
    out.table(name, &SENSITIVITY_COLUMNS, set.points.iter().map(sensitivity_row))
}

pub fn scan2d_cmd(settings: &Settings, out: &mut Output) -> Result<()> {
    let d = settings.drive_params()?;
    let noise = settings.noise_model()?;
    let protocol = settings.protocol()?;
    let g = &settings.scan2d;
    let steps = ((g.freq_stop_hz - g.freq_start_hz) / g.freq_step_hz + 1e-9).floor() as usize;
    let freqs: Vec<f64> = (0..=steps).map(|k| g.freq_start_hz + g.freq_step_hz * k as f64).collect();
    let phases: Vec<f64> = if g.phase_points == 1 {
        vec![0.0]
    } else {
        (0..g.phase_points)
            .map(|k| PI * k as f64 / (g.phase_points - 1) as f64)
            .collect()
    };
    let grid = qfi_scan_2d(&d, &noise, g.total_time.0, &freqs, &phases, &protocol)?;

    let mut rows = Vec::new();
    for (i, &f) in freqs.iter().enumerate() {
        for (j, &phi) in phases.iter().enumerate() {
            rows.push(vec![i.to_string(), j.to_string(), num(f), num(phi), opt(grid.value((i, j)))]);
        }
    }
    out.table(
        "scan2d.csv",
        &["freq_index", "phase_index", "control_freq_hz", "control_phase_rad", "qfi"],
        rows,
    )?;

    let cells = freqs.len() * phases.len();
    let failed = grid.failed_cells();
    let tau = protocol.pulse_duration(d.omega);
    let mut summary = Entries::default();
    summary
        .add("drive_frequency_hz", num(angular_to_hz(d.omega)))
        .add("matched_phase_rad", num(centred_control_phase(EstimationTarget::Frequency, &d, tau)))
        .add("cells", cells)
        .add("failed_cells", failed)
        .add("scan_halfwidth_hz", num(angular_to_hz(grid.halfwidth)));
    let peak = grid.peak();
    if let Some((i, j)) = peak {
        summary
            .add("peak_freq_index", i)
            .add("peak_phase_index", j)
            .add("peak_freq_hz", num(freqs[i]))
            .add("peak_phase_rad", num(phases[j]))
            .add("peak_qfi", opt(grid.value((i, j))));
    }
    out.summary("scan2d_peak.txt", &summary.0)?;
    if peak.is_none() {
        bail!("every scan cell failed");
    }
    let limit = settings.failure_limit(cells);
    if failed > limit {
        bail!("{failed} of {cells} scan cells failed (limit {limit})");
    }
    Ok(())
}

pub fn fit_cmd(settings: &Settings, dataset: &Path, out: &mut Output) -> Result<()> {
    let points = read_sensitivity(dataset)?;
    out.note("dataset", dataset.display());
    let fit = fit_loglog(&points).with_context(|| format!("fitting {}", dataset.display()))?;
    let f = &settings.fit;
    let around = |centre: f64, err: f64| [centre - 6.0 * err, centre + 6.0 * err];
    let slope_range = f.slope_range.unwrap_or(around(fit.slope, fit.slope_error()));
    let intercept_range = f.intercept_range.unwrap_or(around(fit.intercept, fit.intercept_error()));
    let map = chi2_map(
        &points,
        (slope_range[0], slope_range[1]),
        (intercept_range[0], intercept_range[1]),
        f.resolution,
    )?;

    let mut rows = Vec::new();
    for (i, &m) in map.slope_axis.iter().enumerate() {
        for (j, &b) in map.intercept_axis.iter().enumerate() {
            rows.push(vec![num(m), num(b), num(map.chi2_values[i][j])]);
        }
    }
    out.table("chi2_map.csv", &["slope", "intercept", "chi2_reduced"], rows)?;

    let mut rows = Vec::new();
    for contour in &map.contours {
        for (k, line) in contour.polylines.iter().enumerate() {
            for &(m, b) in line {
                rows.push(vec![num(contour.confidence), k.to_string(), num(m), num(b)]);
            }
        }
    }
    out.table("chi2_contours.csv", &["confidence", "polyline", "slope", "intercept"], rows)?;

    let (ci, cj) = map.min_cell();
    let mut summary = Entries::default();
    summary.add("points", points.len());
    fit_entries(&mut summary, "fit", &fit);
    summary
        .add("map.resolution", f.resolution)
        .add("map.slope_range", format!("[{}, {}]", num(slope_range[0]), num(slope_range[1])))
        .add(
            "map.intercept_range",
            format!("[{}, {}]", num(intercept_range[0]), num(intercept_range[1])),
        )
        .add("map.min_slope", num(map.slope_axis[ci]))
        .add("map.min_intercept", num(map.intercept_axis[cj]))
        .add("map.min_chi2_reduced", num(map.chi2_values[ci][cj]))
        .add("map.minimum_on_boundary", map.on_boundary);
    for contour in &map.contours {
        let level = format!("contour_{:.0}", contour.confidence * 100.0);
        summary
            .add(format!("{level}.threshold"), num(contour.threshold))
            .add(format!("{level}.area"), num(contour.area()))
            .add(format!("{level}.polylines"), contour.polylines.len());
    }
    for reference in [-2.0, -1.0] {
        let inside = map.slope_within(0.95, reference);
        summary.add(
            format!("slope_{reference}_within_95"),
            inside.map_or("unknown".to_string(), |b| b.to_string()),
        );
    }
    out.summary("fit_report.txt", &summary.0)
}

pub fn alp_cmd(settings: &Settings, out: &mut Output) -> Result<()> {
    let alp = settings.alp_params();
    let a = &settings.alp;
    let times = log_axis(a.t_min.0, a.t_max.0, a.time_points)?;
    let counts = log_axis(a.probes_min, a.probes_max, a.probe_points)?;
    let grid = reach_grid(&times, &counts, &alp)?;
    let mut rows = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        for (j, &n) in counts.iter().enumerate() {
            rows.push(vec![num(t), num(n), num(grid.g_limits[i][j])]);
        }
    }
    out.table("alp_reach.csv", &["time_s", "probes", "g_limit_gev_inv"], rows)?;

    let delta = min_detectable_amplitude(a.anchor_time.0, a.anchor_probes)?;
    let g = coupling_bound(delta, &alp)?;
    let corner = grid.corner();
    let mut summary = Entries::default();
    summary
        .add("alp_mass_hz", num(angular_to_hz(alp.m_a)))
        .add("alp_mass_rad_s", num(alp.m_a))
        .add("anchor.time_s", num(a.anchor_time.0))
        .add("anchor.probes", num(a.anchor_probes))
        .add("anchor.min_amplitude_s_inv", num(delta))
        .add("anchor.g_limit_gev_inv", num(g))
        .add("corner.time_s", num(*times.last().unwrap()))
        .add("corner.probes", num(*counts.last().unwrap()))
        .add("corner.g_limit_gev_inv", num(corner))
        .add(
            "corner.in_gas_cell_band",
            (GAS_CELL_BAND.0..=GAS_CELL_BAND.1).contains(&corner),
        );
    out.summary("alp_summary.txt", &summary.0)
}
