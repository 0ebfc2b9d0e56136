//! Reach of a modulation-amplitude measurement for axion-like dark matter
//! coupled to the electron spin.
//!
//! The energy shift induced by the ALP field is taken as the calibrated
//! scaling law `dE = v (g / g_ref) sqrt(rho / 0.3 GeV cm^-3)` with
//! `v = 3e-9 s^-1` and `g_ref = 1e-9 GeV^-1`. Inverting it turns a minimum
//! detectable modulation amplitude into a bound on the coupling.

use crate::error::{invalid, Result};
use crate::par;
use crate::units::hz_to_angular;

/// Reference dark matter density of the scaling law, GeV/cm^3.
pub const RHO_REF: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlpParams {
    /// ALP mass as an angular frequency, rad/s. Sets which modulation
    /// frequency the probe must be tuned to; the bound itself does not
    /// depend on it.
    pub m_a: f64,
    /// Local dark matter density, GeV/cm^3.
    pub rho_dm: f64,
    /// Energy shift at the reference coupling and density, s^-1.
    pub v_anchor: f64,
    /// Reference coupling, GeV^-1.
    pub g_ref: f64,
}

impl Default for AlpParams {
    fn default() -> Self {
        Self {
            m_a: hz_to_angular(50e3),
            rho_dm: RHO_REF,
            v_anchor: 3e-9,
            g_ref: 1e-9,
        }
    }
}

impl AlpParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m_a", self.m_a),
            ("rho_dm", self.rho_dm),
            ("v_anchor", self.v_anchor),
            ("g_ref", self.g_ref),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Smallest resolvable modulation amplitude, `1 / (T sqrt(n))`, in s^-1.
pub fn min_detectable_amplitude(total_time: f64, shots: f64) -> Result<f64> {
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(invalid(format!("observation time must be > 0, got {total_time}")));
    }
    if !(shots.is_finite() && shots >= 1.0) {
        return Err(invalid(format!("number of measurements must be >= 1, got {shots}")));
    }
    Ok(1.0 / (total_time * shots.sqrt()))
}

/// Coupling, GeV^-1, whose energy shift equals `delta_omega` (s^-1).
pub fn coupling_bound(delta_omega: f64, alp: &AlpParams) -> Result<f64> {
    alp.validate()?;
    if !(delta_omega.is_finite() && delta_omega > 0.0) {
        return Err(invalid(format!("energy shift must be > 0, got {delta_omega}")));
    }
    Ok(alp.g_ref * (delta_omega / alp.v_anchor) * (RHO_REF / alp.rho_dm).sqrt())
}

/// Coupling bounds over observation times and measurement counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachGrid {
    pub times: Vec<f64>,
    pub probe_counts: Vec<f64>,
    /// `g_limits[i][j]` at `(times[i], probe_counts[j])`, GeV^-1.
    pub g_limits: Vec<Vec<f64>>,
}

impl ReachGrid {
    /// Bound at the longest time and largest count.
    pub fn corner(&self) -> f64 {
        *self.g_limits.last().and_then(|r| r.last()).expect("grid is non-empty")
    }
}

pub fn reach_grid(times: &[f64], probe_counts: &[f64], alp: &AlpParams) -> Result<ReachGrid> {
    if times.is_empty() || probe_counts.is_empty() {
        return Err(invalid("reach grid axes must be non-empty"));
    }
    let g_limits = par::map_slice(times, |&t| {
        probe_counts
            .iter()
            .map(|&n| coupling_bound(min_detectable_amplitude(t, n)?, alp))
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ReachGrid {
        times: times.to_vec(),
        probe_counts: probe_counts.to_vec(),
        g_limits,
    })
}

/// `count` points spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_axis(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(invalid(format!(
            "log axis needs 0 < lo < hi and at least 2 points, got ({lo}, {hi}, {count})"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect())
}
