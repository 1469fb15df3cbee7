//! Peak location and half-maximum analysis of C_k with adaptive re-gridding.

use super::coulomb::{check_grid, compute_c, linspace, CoulombProfile, Method};
use crate::error::{Error, Result};
use crate::model::LinearFamily;
use serde::{Deserialize, Serialize};

/// Zoom policy for [`detect_peak`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefinePolicy {
    pub base_points: usize,
    pub zoom: f64,
    pub max_rounds: usize,
    pub points_per_round: usize,
    pub min_above_half: usize,
    pub min_window: f64,
    pub min_rounds: usize,
    /// Window half-width as a multiple of the outer half-max distance.
    pub margin: f64,
}

impl Default for RefinePolicy {
    fn default() -> Self {
        Self {
            base_points: 2001,
            zoom: 10.0,
            max_rounds: 12,
            points_per_round: 401,
            min_above_half: 32,
            min_window: 1e-12,
            min_rounds: 1,
            margin: 1.3,
        }
    }
}

impl RefinePolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("refine policy: {m}")));
        if self.base_points < 3 || self.points_per_round < 3 {
            return bad("grids need at least 3 points");
        }
        if !(self.zoom > 1.0) {
            return bad("zoom must exceed 1");
        }
        if !(self.min_window > 0.0) || !(self.margin >= 1.0) {
            return bad("min_window must be positive and margin at least 1");
        }
        if self.min_rounds > self.max_rounds {
            return bad("min_rounds exceeds max_rounds");
        }
        Ok(())
    }
}

/// C on a window, optionally with the U values it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub grid: Vec<f64>,
    pub c: Vec<f64>,
    pub u: Option<Vec<f64>>,
}

pub trait PeakSampler: Sync {
    fn sample(&self, grid: &[f64]) -> Result<WindowSample>;
}

/// Samples C_k of a family with the chosen method.
pub struct LevelSampler<'a> {
    pub family: &'a LinearFamily,
    pub level: usize,
    pub method: Method,
}

impl PeakSampler for LevelSampler<'_> {
    fn sample(&self, grid: &[f64]) -> Result<WindowSample> {
        match self.method {
            Method::Analytic => {
                let p = compute_c(self.family, self.level, grid, Method::Analytic)?;
                Ok(WindowSample {
                    grid: p.grid,
                    c: p.c,
                    u: Some(p.u),
                })
            }
            Method::FiniteDifference => {
                // pad by two points so the stencil is centered everywhere
                let n = grid.len();
                let h0 = grid[1] - grid[0];
                let h1 = grid[n - 1] - grid[n - 2];
                let mut padded = vec![grid[0] - 2.0 * h0, grid[0] - h0];
                padded.extend_from_slice(grid);
                padded.extend([grid[n - 1] + h1, grid[n - 1] + 2.0 * h1]);
                let p = compute_c(self.family, self.level, &padded, Method::FiniteDifference)?;
                Ok(WindowSample {
                    grid: grid.to_vec(),
                    c: p.c[2..n + 2].to_vec(),
                    u: Some(p.u[2..n + 2].to_vec()),
                })
            }
        }
    }
}

/// Pointwise sampler for closed-form test functions.
pub struct FnSampler<F: Fn(f64) -> f64 + Sync>(pub F);

impl<F: Fn(f64) -> f64 + Sync> PeakSampler for FnSampler<F> {
    fn sample(&self, grid: &[f64]) -> Result<WindowSample> {
        Ok(WindowSample {
            grid: grid.to_vec(),
            c: grid.iter().map(|&x| (self.0)(x)).collect(),
            u: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub level: usize,
    pub x: f64,
    #[serde(rename = "N")]
    pub boson_number: Option<u32>,
    pub centroid: f64,
    pub height: f64,
    pub fwhm: f64,
    pub q_hw: f64,
    pub q_int: f64,
    pub method: Method,
    pub refine_rounds: usize,
    /// Enough samples above half maximum in the last window.
    pub resolved: bool,
    pub samples_above_half: usize,
    pub finest_step: f64,
    pub left_half: f64,
    pub right_half: f64,
    /// Highest other local maximum of the base profile relative to the peak.
    pub secondary_ratio: f64,
    #[serde(skip)]
    pub windows: Vec<WindowSample>,
}

/// Record written per peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakRecord {
    pub level: usize,
    pub x: f64,
    #[serde(rename = "N")]
    pub boson_number: Option<u32>,
    pub centroid: f64,
    pub height: f64,
    pub fwhm: f64,
    pub q_hw: f64,
    pub q_int: f64,
    pub method: Method,
    pub refine_rounds: usize,
}

impl From<&PeakSummary> for PeakRecord {
    fn from(p: &PeakSummary) -> Self {
        Self {
            level: p.level,
            x: p.x,
            boson_number: p.boson_number,
            centroid: p.centroid,
            height: p.height,
            fwhm: p.fwhm,
            q_hw: p.q_hw,
            q_int: p.q_int,
            method: p.method,
            refine_rounds: p.refine_rounds,
        }
    }
}

struct HalfMax {
    peak: usize,
    height: f64,
    left: f64,
    right: f64,
    /// Indices of the last samples at or above half maximum.
    inner: (usize, usize),
}

/// Leftmost argmax and interpolated half-maximum crossings on sorted samples.
fn half_max(xs: &[f64], ys: &[f64]) -> Result<HalfMax> {
    let mut j = usize::MAX;
    for (i, &y) in ys.iter().enumerate() {
        if y.is_finite() && (j == usize::MAX || y > ys[j]) {
            j = i;
        }
    }
    if j == usize::MAX || !(ys[j] > 0.0) {
        return Err(Error::NoPeak(" (no positive sample)".into()));
    }
    let h = ys[j];
    if j == 0 || j == ys.len() - 1 {
        return Err(Error::PeakTruncated { lambda: xs[j] });
    }
    let half = 0.5 * h;
    let mut l = j;
    while l > 0 && ys[l - 1] >= half {
        l -= 1;
    }
    let mut r = j;
    while r + 1 < ys.len() && ys[r + 1] >= half {
        r += 1;
    }
    if l == 0 || r == ys.len() - 1 {
        return Err(Error::PeakTruncated { lambda: xs[j] });
    }
    let cross = |a: usize, b: usize| xs[a] + (half - ys[a]) * (xs[b] - xs[a]) / (ys[b] - ys[a]);
    Ok(HalfMax {
        peak: j,
        height: h,
        left: cross(l - 1, l),
        right: cross(r, r + 1),
        inner: (l, r),
    })
}

fn merge(union: &mut Vec<(f64, f64)>, w: &WindowSample) {
    union.extend(w.grid.iter().copied().zip(w.c.iter().copied()));
    union.sort_by(|a, b| a.0.total_cmp(&b.0));
    union.dedup_by(|a, b| a.0 == b.0);
}

fn secondary_ratio(profile: &CoulombProfile, left: f64, right: f64, height: f64) -> f64 {
    let c = &profile.c;
    let mut best = 0.0_f64;
    for i in 1..c.len().saturating_sub(1) {
        let x = profile.grid[i];
        if (x < left || x > right) && c[i] > c[i - 1] && c[i] >= c[i + 1] {
            best = best.max(c[i]);
        }
    }
    best / height
}

/// Locate the dominant peak of `profile.c`, refining with `sampler` until at
/// least `min_above_half` samples of the last window exceed half maximum.
pub fn detect_peak(
    profile: &CoulombProfile,
    sampler: &dyn PeakSampler,
    policy: &RefinePolicy,
) -> Result<PeakSummary> {
    policy.validate()?;
    check_grid(&profile.grid)?;
    if profile.c.len() != profile.grid.len() {
        return Err(Error::InvalidArgument("profile has no C values".into()));
    }
    let lo = profile.grid[0];
    let hi = profile.grid[profile.grid.len() - 1];
    let base = WindowSample {
        grid: profile.grid.clone(),
        c: profile.c.clone(),
        u: Some(profile.u.clone()).filter(|u| u.len() == profile.grid.len()),
    };
    let mut union = Vec::new();
    merge(&mut union, &base);
    let mut windows = vec![base];
    let mut half_width = 0.5 * (hi - lo);
    let mut rounds = 0;
    let resolved;
    loop {
        let xs: Vec<f64> = union.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = union.iter().map(|p| p.1).collect();
        let hm = half_max(&xs, &ys)?;
        let last = windows.last().unwrap();
        let above = last.c.iter().filter(|&&c| c >= 0.5 * hm.height).count();
        if above >= policy.min_above_half && rounds >= policy.min_rounds {
            resolved = true;
            break;
        }
        if rounds >= policy.max_rounds || 2.0 * half_width <= policy.min_window {
            resolved = above >= policy.min_above_half;
            break;
        }
        let center = xs[hm.peak];
        let outer = (center - xs[hm.inner.0 - 1]).max(xs[hm.inner.1 + 1] - center);
        let next = (half_width / policy.zoom).max(policy.margin * outer);
        half_width = next.min(half_width).max(0.5 * policy.min_window);
        let grid = linspace(
            (center - half_width).max(lo),
            (center + half_width).min(hi),
            policy.points_per_round,
        );
        let w = sampler.sample(&grid)?;
        merge(&mut union, &w);
        windows.push(w);
        rounds += 1;
    }
    let xs: Vec<f64> = union.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = union.iter().map(|p| p.1).collect();
    let hm = half_max(&xs, &ys)?;
    let last = windows.last().unwrap();
    let samples_above_half = last.c.iter().filter(|&&c| c >= 0.5 * hm.height).count();
    let finest_step = last.grid[1] - last.grid[0];
    // trapezoid over [left, right] using the half-max endpoints
    let half = 0.5 * hm.height;
    let mut pts = vec![(hm.left, half)];
    pts.extend((hm.inner.0..=hm.inner.1).map(|i| (xs[i], ys[i])));
    pts.push((hm.right, half));
    let q_int = pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1))
        .sum();
    let fwhm = hm.right - hm.left;
    Ok(PeakSummary {
        level: profile.level,
        x: profile.x,
        boson_number: None,
        centroid: xs[hm.peak],
        height: hm.height,
        fwhm,
        q_hw: hm.height * fwhm,
        q_int,
        method: profile.method,
        refine_rounds: rounds,
        resolved,
        samples_above_half,
        finest_step,
        left_half: hm.left,
        right_half: hm.right,
        secondary_ratio: secondary_ratio(profile, hm.left, hm.right, hm.height),
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QVerdict {
    FirstOrderCompatible,
    ContinuousCompatible,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    pub boson_numbers: Vec<u32>,
    pub q: Vec<f64>,
    pub slope: f64,
    pub window: (u32, u32),
    pub tolerance: f64,
    pub verdict: QVerdict,
}

/// Slope threshold separating a flat Q̂ trend from a decaying one.
pub const Q_SLOPE_TOLERANCE: f64 = 0.05;

/// Least-squares line through (x, y): (slope, intercept, max |residual|).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res = x
        .iter()
        .zip(y)
        .fold(0.0_f64, |m, (a, b)| m.max((b - intercept - slope * a).abs()));
    (slope, intercept, res)
}

/// Trend of Q̂(N) over the largest decade N ≥ N_max/10.
pub fn estimate_q(points: &[(u32, f64)]) -> Result<QReport> {
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    if pts.len() < 3 {
        return Err(Error::InsufficientSpan(format!("need at least 3 values of N, got {}", pts.len())));
    }
    let n_min = pts[0].0 as f64;
    let n_max = pts[pts.len() - 1].0 as f64;
    if n_max < 10.0 * n_min {
        return Err(Error::InsufficientSpan(format!(
            "N spans {n_min}..{n_max}, less than one decade"
        )));
    }
    let window: Vec<(u32, f64)> = pts
        .iter()
        .copied()
        .filter(|p| p.0 as f64 * 10.0 >= n_max)
        .collect();
    let window = if window.len() >= 2 { window } else { pts.clone() };
    let (slope, verdict) = if window.iter().any(|p| !(p.1 > 0.0)) {
        (f64::NAN, QVerdict::Inconclusive)
    } else {
        let lx: Vec<f64> = window.iter().map(|p| (p.0 as f64).ln()).collect();
        let ly: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
        let (s, _, _) = linear_fit(&lx, &ly);
        let v = if s.abs() <= Q_SLOPE_TOLERANCE {
            QVerdict::FirstOrderCompatible
        } else if s < -Q_SLOPE_TOLERANCE {
            QVerdict::ContinuousCompatible
        } else {
            QVerdict::Inconclusive
        };
        (s, v)
    };
    Ok(QReport {
        boson_numbers: pts.iter().map(|p| p.0).collect(),
        q: pts.iter().map(|p| p.1).collect(),
        slope,
        window: (window[0].0, window[window.len() - 1].0),
        tolerance: Q_SLOPE_TOLERANCE,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile_from(grid: Vec<f64>, f: &dyn Fn(f64) -> f64) -> CoulombProfile {
        CoulombProfile {
            level: 0,
            x: 0.0,
            c: grid.iter().map(|&x| f(x)).collect(),
            u: Vec::new(),
            f: Vec::new(),
            grid,
            method: Method::Analytic,
        }
    }

    #[test]
    fn lorentzian() {
        let g = |x: f64| 1.0 / ((x - 0.5).powi(2) + 1e-4);
        let p = profile_from(linspace(0.0, 1.0, 2001), &g);
        let s = detect_peak(&p, &FnSampler(g), &RefinePolicy::default()).unwrap();
        assert!(s.resolved);
        assert!((s.centroid - 0.5).abs() <= s.finest_step);
        assert!((s.height - 1e4).abs() < 1e-6);
        assert!((s.fwhm - 0.02).abs() < 1e-6);
        // area inside the half-max window: 2 atan(1) / γ − …
        assert!((s.q_hw / s.q_int - 1.0).abs() < 0.5);
    }

    #[test]
    fn toy_peak() {
        let c = |x: f64| (1.0 - x * x) / (1.0 + x * x).powi(2);
        let p = profile_from(linspace(-2.0, 2.0, 2001), &c);
        let s = detect_peak(&p, &FnSampler(c), &RefinePolicy::default()).unwrap();
        assert!(s.centroid.abs() <= s.finest_step);
        assert!((s.height - 1.0).abs() < 1e-12);
        // half maximum: 2(1−t) = (1+t)², t = λ² = √5 − 2
        let w = 2.0 * (5f64.sqrt() - 2.0).sqrt();
        // linear interpolation of the crossings: error of order step²
        assert!((s.fwhm - w).abs() < s.finest_step.powi(2));
    }

    #[test]
    fn truncated_and_missing() {
        let rising = |x: f64| x;
        let p = profile_from(linspace(0.0, 1.0, 11), &rising);
        assert!(matches!(
            detect_peak(&p, &FnSampler(rising), &RefinePolicy::default()).unwrap_err(),
            Error::PeakTruncated { .. }
        ));
        let neg = |_: f64| -1.0;
        let p = profile_from(linspace(0.0, 1.0, 11), &neg);
        assert!(matches!(
            detect_peak(&p, &FnSampler(neg), &RefinePolicy::default()).unwrap_err(),
            Error::NoPeak(_)
        ));
    }

    #[test]
    fn secondary_peak_is_reported() {
        let g = |x: f64| (-(x - 0.3f64).powi(2) / 1e-3).exp() + 0.25 * (-(x - 0.8f64).powi(2) / 1e-3).exp();
        let p = profile_from(linspace(0.0, 1.0, 2001), &g);
        let s = detect_peak(&p, &FnSampler(g), &RefinePolicy::default()).unwrap();
        assert!((s.centroid - 0.3).abs() < 1e-3);
        assert!((s.secondary_ratio - 0.25).abs() < 1e-3);
    }

    #[test]
    fn q_verdicts() {
        let flat = [(100, 2.0), (400, 2.0), (1600, 2.0)];
        assert_eq!(estimate_q(&flat).unwrap().verdict, QVerdict::FirstOrderCompatible);
        let falling = [(100, 4.0), (400, 2.0), (1600, 1.0)];
        assert_eq!(estimate_q(&falling).unwrap().verdict, QVerdict::ContinuousCompatible);
        let rising = [(100, 1.0), (400, 2.0), (1600, 4.0)];
        assert_eq!(estimate_q(&rising).unwrap().verdict, QVerdict::Inconclusive);
        assert!(estimate_q(&[(100, 1.0), (200, 1.0), (400, 1.0)]).is_err());
        assert!(estimate_q(&[(100, 1.0), (1000, 1.0)]).is_err());
    }
}
