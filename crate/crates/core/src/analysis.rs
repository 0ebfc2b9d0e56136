//! Power-law fits of sensitivity against observation time, and the reduced
//! chi-square landscape around the best fit with joint confidence contours.

use std::collections::HashMap;
use std::f64::consts::LN_10;

use crate::error::{Error, Result};
use crate::experiment::SensitivityPoint;
use crate::par;

/// Relative error above which a point is flagged as poorly determined.
pub const FLAG_RELATIVE_ERROR: f64 = 0.5;

/// Delta chi-square for a two-parameter joint region at 90% confidence.
pub const DELTA_CHI2_90: f64 = 4.605_170_185_988_091;
/// Delta chi-square for a two-parameter joint region at 95% confidence.
pub const DELTA_CHI2_95: f64 = 5.991_464_547_107_979;

/// Weighted straight-line fit `y = intercept + slope x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Parameter covariance, order (slope, intercept), from the stated errors.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
}

impl LineFit {
    pub fn chi2_reduced(&self) -> f64 {
        self.chi2 / self.dof as f64
    }

    pub fn slope_error(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn intercept_error(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

/// Log-log fit `log10 S = S0 + m log10 T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    /// log10 of the inverse sensitivity extrapolated to T = 1 s.
    pub intercept: f64,
    pub covariance: [[f64; 2]; 2],
    pub chi2_reduced: f64,
    pub dof: usize,
    /// Indices of points whose relative error exceeds [`FLAG_RELATIVE_ERROR`].
    pub flagged: Vec<usize>,
}

impl LogLogFit {
    pub fn slope_error(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn intercept_error(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

struct Sums {
    s: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

fn weighted_sums(x: &[f64], y: &[f64], w: &[f64]) -> Sums {
    let mut s = Sums {
        s: 0.0,
        sx: 0.0,
        sy: 0.0,
        sxx: 0.0,
        sxy: 0.0,
        syy: 0.0,
    };
    for ((&x, &y), &w) in x.iter().zip(y).zip(w) {
        s.s += w;
        s.sx += w * x;
        s.sy += w * y;
        s.sxx += w * x * x;
        s.sxy += w * x * y;
        s.syy += w * y * y;
    }
    s
}

/// Weighted least squares with per-point standard deviations `sigma`.
pub fn fit_line(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::DegenerateFit("input lengths differ".into()));
    }
    if x.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).chain(sigma).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite input".into()));
    }
    if sigma.iter().any(|&s| s <= 0.0) {
        return Err(Error::DegenerateFit("errors must be positive".into()));
    }
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    // centre both coordinates so the normal equations stay well conditioned;
    // the second pass removes what rounding left of the means
    let wsum: f64 = w.iter().sum();
    let mean = |v: &[f64]| v.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let (xbar, ybar) = (mean(x), mean(y));
    let xc: Vec<f64> = x.iter().map(|v| v - xbar).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let sums = weighted_sums(&xc, &yc, &w);
    let (dx, dy) = (sums.sx / sums.s, sums.sy / sums.s);
    let sxx = sums.sxx - dx * sums.sx;
    if sxx <= 1e-300 || x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let slope = (sums.sxy - dx * sums.sy) / sxx;
    let xbar = xbar + dx;
    let intercept = ybar + dy - slope * xbar;
    let sums = Sums { sxx, ..sums };
    let var_slope = 1.0 / sums.sxx;
    let var_intercept = 1.0 / sums.s + xbar * xbar / sums.sxx;
    let cov = -xbar / sums.sxx;
    let chi2 = x
        .iter()
        .zip(y)
        .zip(&w)
        .map(|((&x, &y), &w)| {
            let r = y - intercept - slope * x;
            w * r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        covariance: [[var_slope, cov], [cov, var_intercept]],
        chi2,
        dof: x.len() - 2,
    })
}

/// Unweighted least-squares slope and intercept.
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateFit("need at least 2 paired points".into()));
    }
    let n = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / n;
    let ybar = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in x.iter().zip(y) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, ybar - slope * xbar))
}

/// Log-space data of a sensitivity dataset: `(log10 T, log10 S, sigma)`.
fn log_space(points: &[SensitivityPoint]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut x = Vec::with_capacity(points.len());
    let mut y = Vec::with_capacity(points.len());
    let mut s = Vec::with_capacity(points.len());
    for p in points {
        if !(p.observation_time > 0.0 && p.inverse_sensitivity > 0.0) {
            return Err(Error::DegenerateFit(
                "observation times and sensitivities must be positive".into(),
            ));
        }
        if !(p.std_error > 0.0) {
            return Err(Error::DegenerateFit(format!(
                "zero weight: point at T = {:e} s has std_error {}",
                p.observation_time, p.std_error
            )));
        }
        x.push(p.observation_time.log10());
        y.push(p.inverse_sensitivity.log10());
        s.push(p.std_error / (LN_10 * p.inverse_sensitivity));
    }
    Ok((x, y, s))
}

/// Weighted fit of `log10(inverse_sensitivity)` against `log10(T)`, with the
/// errors carried into log space to first order.
pub fn fit_loglog(points: &[SensitivityPoint]) -> Result<LogLogFit> {
    let (x, y, s) = log_space(points)?;
    let fit = fit_line(&x, &y, &s)?;
    let flagged = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.std_error / p.inverse_sensitivity > FLAG_RELATIVE_ERROR)
        .map(|(i, _)| i)
        .collect();
    Ok(LogLogFit {
        slope: fit.slope,
        intercept: fit.intercept,
        covariance: fit.covariance,
        chi2_reduced: fit.chi2_reduced(),
        dof: fit.dof,
        flagged,
    })
}

/// One confidence level of a [`Chi2Map`].
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Confidence level, e.g. 0.95.
    pub confidence: f64,
    pub delta_chi2: f64,
    /// Threshold on the reduced chi-square, `min + delta_chi2 / dof`.
    pub threshold: f64,
    /// Polylines in (slope, intercept); closed ones repeat their first vertex.
    pub polylines: Vec<Vec<(f64, f64)>>,
}

impl Contour {
    /// Enclosed area, summed over closed polylines (shoelace formula).
    pub fn area(&self) -> f64 {
        self.polylines
            .iter()
            .filter(|p| p.len() > 3 && p.first() == p.last())
            .map(|p| {
                p.windows(2)
                    .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
                    .sum::<f64>()
                    .abs()
                    * 0.5
            })
            .sum()
    }
}

/// Reduced chi-square over a (slope, intercept) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Map {
    pub slope_axis: Vec<f64>,
    pub intercept_axis: Vec<f64>,
    /// `chi2_values[i][j]` at `(slope_axis[i], intercept_axis[j])`.
    pub chi2_values: Vec<Vec<f64>>,
    pub contours: Vec<Contour>,
    pub fit: LogLogFit,
    pub on_boundary: bool,
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Chi2Map {
    /// Grid cell `(i, j)` with the smallest reduced chi-square.
    pub fn min_cell(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.chi2_values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < self.chi2_values[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Reduced chi-square at an arbitrary point.
    pub fn chi2_reduced_at(&self, slope: f64, intercept: f64) -> f64 {
        chi2_at(&self.x, &self.y, &self.w, slope, intercept) / self.fit.dof as f64
    }

    pub fn contour(&self, confidence: f64) -> Option<&Contour> {
        self.contours
            .iter()
            .find(|c| (c.confidence - confidence).abs() < 1e-9)
    }

    /// Whether some intercept places `slope` inside the joint region at
    /// `confidence`, i.e. the profile of the reduced chi-square over the
    /// intercept is below the contour threshold.
    pub fn slope_within(&self, confidence: f64, slope: f64) -> Option<bool> {
        let contour = self.contour(confidence)?;
        let sums = weighted_sums(&self.x, &self.y, &self.w);
        let intercept = (sums.sy - slope * sums.sx) / sums.s;
        Some(self.chi2_reduced_at(slope, intercept) <= contour.threshold)
    }
}

fn chi2_at(x: &[f64], y: &[f64], w: &[f64], slope: f64, intercept: f64) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&x, &y), &w)| {
            let r = y - intercept - slope * x;
            w * r * r
        })
        .sum()
}

/// Evaluates the reduced chi-square of the log-log model on a
/// `resolution x resolution` grid and traces its 90% and 95% joint
/// confidence contours.
pub fn chi2_map(
    points: &[SensitivityPoint],
    slope_range: (f64, f64),
    intercept_range: (f64, f64),
    resolution: usize,
) -> Result<Chi2Map> {
    if resolution < 3 {
        return Err(Error::DegenerateFit(format!(
            "map resolution must be at least 3, got {resolution}"
        )));
    }
    for (lo, hi) in [slope_range, intercept_range] {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::DegenerateFit(format!("invalid range [{lo}, {hi}]")));
        }
    }
    let fit = fit_loglog(points)?;
    let (x, y, s) = log_space(points)?;
    let w: Vec<f64> = s.iter().map(|s| 1.0 / (s * s)).collect();
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..resolution)
            .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
            .collect()
    };
    let slope_axis = axis(slope_range);
    let intercept_axis = axis(intercept_range);
    let dof = fit.dof as f64;
    let chi2_values = par::map_slice(&slope_axis, |&m| {
        intercept_axis
            .iter()
            .map(|&b| chi2_at(&x, &y, &w, m, b) / dof)
            .collect::<Vec<f64>>()
    });

    let mut map = Chi2Map {
        slope_axis,
        intercept_axis,
        chi2_values,
        contours: Vec::new(),
        fit,
        on_boundary: false,
        x,
        y,
        w,
    };
    let (i, j) = map.min_cell();
    map.on_boundary = i == 0 || j == 0 || i == resolution - 1 || j == resolution - 1;
    if map.on_boundary {
        log::warn!("chi-square minimum lies on the map boundary; widen the ranges");
    }
    let minimum = map.fit.chi2_reduced;
    for (confidence, delta) in [(0.90, DELTA_CHI2_90), (0.95, DELTA_CHI2_95)] {
        let threshold = minimum + delta / dof;
        let polylines = trace_contour(&map.slope_axis, &map.intercept_axis, &map.chi2_values, threshold);
        map.contours.push(Contour {
            confidence,
            delta_chi2: delta,
            threshold,
            polylines,
        });
    }
    Ok(map)
}

/// Area of the ellipse `(p - p0)^T C^-1 (p - p0) = delta_chi2`.
pub fn covariance_ellipse_area(covariance: &[[f64; 2]; 2], delta_chi2: f64) -> f64 {
    let det = covariance[0][0] * covariance[1][1] - covariance[0][1] * covariance[1][0];
    std::f64::consts::PI * delta_chi2 * det.max(0.0).sqrt()
}

// Cell edges, keyed so that neighbouring cells agree on the shared edge:
// (i, j, 0) is the edge from (i, j) to (i + 1, j), (i, j, 1) from (i, j) to (i, j + 1).
type EdgeKey = (usize, usize, u8);

/// Marching squares on `values[i][j]` over `(xs[i], ys[j])`, chaining the
/// per-cell segments into polylines.
fn trace_contour(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Vec<(f64, f64)>> {
    let nx = xs.len();
    let ny = ys.len();
    let crossing = |key: EdgeKey| -> (f64, f64) {
        let (i, j, dir) = key;
        let (i2, j2) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        let (v1, v2) = (values[i][j], values[i2][j2]);
        let t = if v2 == v1 { 0.5 } else { (level - v1) / (v2 - v1) };
        (xs[i] + t * (xs[i2] - xs[i]), ys[j] + t * (ys[j2] - ys[j]))
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let inside = [
                values[i][j] < level,
                values[i + 1][j] < level,
                values[i + 1][j + 1] < level,
                values[i][j + 1] < level,
            ];
            let edges: [EdgeKey; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
            let cut: Vec<EdgeKey> = (0..4)
                .filter(|&e| inside[e] != inside[(e + 1) % 4])
                .map(|e| edges[e])
                .collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    // saddle: resolve with the cell-centre value
                    let centre = 0.25
                        * (values[i][j] + values[i + 1][j] + values[i + 1][j + 1] + values[i][j + 1]);
                    if (centre < level) == inside[0] {
                        segments.push((cut[0], cut[1]));
                        segments.push((cut[2], cut[3]));
                    } else {
                        segments.push((cut[0], cut[3]));
                        segments.push((cut[1], cut[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = std::collections::VecDeque::from([a, b]);
        // extend forwards from the tail, then backwards from the head
        for forward in [true, false] {
            loop {
                let end = if forward { *chain.back().unwrap() } else { *chain.front().unwrap() };
                let next = adjacency[&end].iter().copied().find(|&k| !used[k]);
                let Some(k) = next else { break };
                used[k] = true;
                let (p, q) = segments[k];
                let other = if p == end { q } else { p };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
            }
        }
        lines.push(chain.into_iter().map(crossing).collect());
    }
    lines
}
