//! Finite-size studies on the IBM family: C_k peaks across the spectrum at
//! fixed N, peak height/width scaling in N, and the approach of EPs to the
//! real axis.

mod approach;
mod benchmark;

pub use approach::{ep_approach, run_ep_approach, ApproachPoint, ApproachReport, TrendVerdict};
pub use benchmark::first_order_benchmark;

use crate::error::{Error, Result};
use crate::model::{build_ibm, IbmModelSpec, LinearFamily};
use crate::spectral::{
    compute_c, compute_levels, detect_peak, linear_fit, linspace, solve_slice, CoulombProfile,
    Derivatives, LevelSampler, Method, PeakSampler, PeakSummary, RefinePolicy,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Level index for excitation ratio x: round-half-up of x·n, capped at n−1.
pub fn level_for_ratio(x: f64, n: usize) -> Result<usize> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("excitation ratio must lie in [0, 1), got {x}")));
    }
    Ok(((x * n as f64 + 0.5).floor() as usize).min(n - 1))
}

/// How peaks are located: a cheap eigenvalue-only scan followed by an
/// analytic window around the half-maximum interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanPolicy {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub coarse_points: usize,
    pub window_points: usize,
    /// Padding on each side of the half-maximum interval, in FWHM units.
    pub window_margin: f64,
    pub refine: RefinePolicy,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        Self {
            lambda_min: 0.0,
            lambda_max: 1.0,
            coarse_points: 801,
            window_points: 501,
            window_margin: 0.75,
            refine: RefinePolicy {
                points_per_round: 161,
                ..RefinePolicy::default()
            },
        }
    }
}

impl ScanPolicy {
    pub fn validate(&self) -> Result<()> {
        self.refine.validate()?;
        if !(self.lambda_max > self.lambda_min) || !self.lambda_min.is_finite() || !self.lambda_max.is_finite() {
            return Err(Error::InvalidArgument("scan range must satisfy lambda_min < lambda_max".into()));
        }
        if self.coarse_points < 3 || self.window_points < 3 {
            return Err(Error::InvalidArgument("scan grids need at least 3 points".into()));
        }
        if !(self.window_margin > 0.0) {
            return Err(Error::InvalidArgument("window_margin must be positive".into()));
        }
        Ok(())
    }
}

/// Analytic and finite-difference C on the same final window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    /// max |C_analytic − C_fd| away from the two edge points on each side.
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub step: f64,
    pub centroid_diff: f64,
    pub height_rel_diff: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPeak {
    pub x: f64,
    pub level: usize,
    #[serde(rename = "N")]
    pub boson_number: Option<u32>,
    pub peak: PeakSummary,
    pub cross_check: CrossCheck,
    /// E_k at the centroid and the spectral span there.
    pub energy_at_centroid: f64,
    pub span_at_centroid: f64,
    /// Largest secondary maximum of the full-range scan, relative to the height.
    pub secondary_ratio: f64,
    #[serde(skip)]
    pub coarse: Option<CoulombProfile>,
    #[serde(skip)]
    pub window: Option<CoulombProfile>,
}

const EDGE_SKIP: usize = 2;

fn cross_check(family: &LinearFamily, k: usize, window: &CoulombProfile) -> Result<CrossCheck> {
    let fd = LevelSampler {
        family,
        level: k,
        method: Method::FiniteDifference,
    }
    .sample(&window.grid)?;
    let n = window.grid.len();
    let argmax = |c: &[f64]| {
        (0..c.len()).fold(0, |b, i| if c[i] > c[b] { i } else { b })
    };
    let (ia, ifd) = (argmax(&window.c), argmax(&fd.c));
    let h = window.c[ia];
    let tolerance = 1e-6_f64.max(1e-3 * h.abs());
    let max_abs_diff = (EDGE_SKIP..n.saturating_sub(EDGE_SKIP))
        .map(|j| (window.c[j] - fd.c[j]).abs())
        .fold(0.0, f64::max);
    let step = window.grid[1] - window.grid[0];
    let centroid_diff = (window.grid[ia] - window.grid[ifd]).abs();
    let height_rel_diff = (fd.c[ifd] - h).abs() / h.abs();
    Ok(CrossCheck {
        max_abs_diff,
        tolerance,
        step,
        centroid_diff,
        height_rel_diff,
        agrees: max_abs_diff < tolerance && centroid_diff <= step * (1.0 + 1e-9) && height_rel_diff < 1e-3,
    })
}

/// Peaks of C_k for each (x, k) on `family`.
pub fn locate_peaks(
    family: &LinearFamily,
    targets: &[(f64, usize)],
    boson_number: Option<u32>,
    policy: &ScanPolicy,
) -> Result<Vec<LevelPeak>> {
    policy.validate()?;
    let ks: Vec<usize> = targets.iter().map(|t| t.1).collect();
    let coarse_grid = linspace(policy.lambda_min, policy.lambda_max, policy.coarse_points);
    let coarse = compute_levels(family, &ks, &coarse_grid, Method::FiniteDifference, true)?;
    let window_policy = RefinePolicy {
        min_rounds: 0,
        ..policy.refine
    };
    targets
        .iter()
        .zip(coarse)
        .map(|(&(x, k), mut coarse)| {
            coarse.x = x;
            let fd_sampler = LevelSampler {
                family,
                level: k,
                method: Method::FiniteDifference,
            };
            let located = detect_peak(&coarse, &fd_sampler, &policy.refine)?;
            let pad = policy.window_margin * located.fwhm;
            let grid = linspace(
                (located.left_half - pad).max(policy.lambda_min),
                (located.right_half + pad).min(policy.lambda_max),
                policy.window_points,
            );
            let mut window = compute_c(family, k, &grid, Method::Analytic)?;
            window.x = x;
            let sampler = LevelSampler {
                family,
                level: k,
                method: Method::Analytic,
            };
            let mut peak = detect_peak(&window, &sampler, &window_policy)?;
            peak.boson_number = boson_number;
            // the analytic window that resolved the peak
            let last = peak.windows.last().unwrap();
            let final_window = CoulombProfile {
                level: k,
                x,
                grid: last.grid.clone(),
                u: last.u.clone().unwrap_or_default(),
                f: Vec::new(),
                c: last.c.clone(),
                method: Method::Analytic,
            };
            let cc = cross_check(family, k, &final_window)?;
            let s = solve_slice(family, peak.centroid, Derivatives::None, false)?;
            Ok(LevelPeak {
                x,
                level: k,
                boson_number,
                cross_check: cc,
                energy_at_centroid: s.energies[k],
                span_at_centroid: s.span(),
                secondary_ratio: located.secondary_ratio,
                peak,
                coarse: Some(coarse),
                window: Some(final_window),
            })
        })
        .collect()
}

/// Largest secondary maximum admitted for a "single dominant" peak.
pub const DOMINANCE_RATIO: f64 = 0.5;
/// |E_k(λ̂)| relative to the span for the E = 0 crossing.
pub const ZERO_CROSSING_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Report {
    #[serde(rename = "N")]
    pub boson_number: u32,
    pub peaks: Vec<LevelPeak>,
    pub single_dominant: bool,
    pub centroids_decreasing: bool,
    /// Peaks with x > 0 whose level sits at E ≈ 0.
    pub zero_crossing: bool,
}

fn targets_for(x_list: &[f64], n: usize) -> Result<Vec<(f64, usize)>> {
    if x_list.is_empty() {
        return Err(Error::InvalidArgument("x_targets is empty".into()));
    }
    x_list.iter().map(|&x| Ok((x, level_for_ratio(x, n)?))).collect()
}

/// C_k peaks for several excitation ratios at one boson number.
pub fn run_fig2(boson_number: u32, x_list: &[f64], policy: &ScanPolicy) -> Result<Fig2Report> {
    let family = build_ibm(IbmModelSpec::new(boson_number))?;
    let targets = targets_for(x_list, family.n())?;
    let peaks = locate_peaks(&family, &targets, Some(boson_number), policy)?;
    let mut by_x: Vec<&LevelPeak> = peaks.iter().collect();
    by_x.sort_by(|a, b| a.x.total_cmp(&b.x));
    let centroids_decreasing = by_x.windows(2).all(|w| w[1].peak.centroid < w[0].peak.centroid);
    let single_dominant = peaks.iter().all(|p| p.secondary_ratio < DOMINANCE_RATIO);
    let zero_crossing = peaks
        .iter()
        .filter(|p| p.x > 0.0)
        .all(|p| p.energy_at_centroid.abs() < ZERO_CROSSING_FRACTION * p.span_at_centroid);
    Ok(Fig2Report {
        boson_number,
        peaks,
        single_dominant,
        centroids_decreasing,
        zero_crossing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "h")]
    Height,
    #[serde(rename = "1/w")]
    InverseWidth,
    #[serde(rename = "h*w")]
    Product,
}

impl Observable {
    pub const ALL: [Observable; 3] = [Observable::Height, Observable::InverseWidth, Observable::Product];

    pub fn value(&self, p: &PeakSummary) -> f64 {
        match self {
            Observable::Height => p.height,
            Observable::InverseWidth => 1.0 / p.fwhm,
            Observable::Product => p.height * p.fwhm,
        }
    }
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Observable::Height => "h",
            Observable::InverseWidth => "1/w",
            Observable::Product => "h*w",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub x: f64,
    pub observable: Observable,
    pub slope: f64,
    pub intercept: f64,
    pub window: (u32, u32),
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPoint {
    #[serde(rename = "N")]
    pub boson_number: u32,
    pub x: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendChecks {
    pub x: f64,
    pub h_increasing: bool,
    pub w_decreasing: bool,
    pub hw_decreasing: bool,
    pub slope_h_positive: bool,
    pub width_faster_than_height: bool,
    pub slope_hw_negative: bool,
    /// Centroids increase with N and stay below 0.8 plus the finest step (x = 0 only).
    pub centroid_approach: Option<bool>,
    /// h·w and the half-max integral agree within a factor of 2.
    pub area_proxies_agree: bool,
    pub cross_checks_agree: bool,
    /// Largest relative slope change between the last two fit windows.
    pub slope_stability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    #[serde(rename = "N_list")]
    pub n_list: Vec<u32>,
    pub x_targets: Vec<f64>,
    pub points: Vec<LevelPeak>,
    pub dropped: Vec<DroppedPoint>,
    pub fits: Vec<FitRow>,
    pub checks: Vec<TrendChecks>,
}

pub fn check_n_list(n_list: &[u32]) -> Result<()> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "N_list needs at least 3 entries, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::InvalidArgument("N_list must be positive and strictly increasing".into()));
    }
    Ok(())
}

fn strictly(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// Fit log(obs) against log N over N ≥ N_max/10 of `pts` (sorted by N).
fn fit(pts: &[&LevelPeak], obs: Observable, x: f64) -> FitRow {
    let n_max = pts.last().unwrap().boson_number.unwrap() as f64;
    let win: Vec<&&LevelPeak> = pts
        .iter()
        .filter(|p| p.boson_number.unwrap() as f64 * 10.0 >= n_max)
        .collect();
    let win = if win.len() >= 2 { win } else { pts.iter().collect() };
    let lx: Vec<f64> = win.iter().map(|p| (p.boson_number.unwrap() as f64).ln()).collect();
    let ly: Vec<f64> = win.iter().map(|p| obs.value(&p.peak).ln()).collect();
    let (slope, intercept, max_residual) = linear_fit(&lx, &ly);
    FitRow {
        x,
        observable: obs,
        slope,
        intercept,
        window: (win[0].boson_number.unwrap(), win[win.len() - 1].boson_number.unwrap()),
        max_residual,
    }
}

fn trend_checks(x: f64, pts: &[&LevelPeak], fits: &[FitRow]) -> TrendChecks {
    let series = |o: Observable| pts.iter().map(|p| o.value(&p.peak)).collect::<Vec<_>>();
    let h = series(Observable::Height);
    let w: Vec<f64> = pts.iter().map(|p| p.peak.fwhm).collect();
    let hw = series(Observable::Product);
    let slope = |o: Observable| fits.iter().find(|f| f.observable == o).unwrap().slope;
    let centroid_approach = (x == 0.0).then(|| {
        let c: Vec<f64> = pts.iter().map(|p| p.peak.centroid).collect();
        strictly(&c, true) && pts.iter().all(|p| p.peak.centroid <= 0.8 + p.peak.finest_step)
    });
    let area_proxies_agree = pts.iter().all(|p| {
        let r = p.peak.q_hw / p.peak.q_int;
        (0.5..=2.0).contains(&r)
    });
    // slopes over the window ending one N earlier
    let slope_stability = if pts.len() >= 4 {
        let prev = &pts[..pts.len() - 1];
        Observable::ALL
            .iter()
            .map(|&o| {
                let a = fit(pts, o, x).slope;
                let b = fit(prev, o, x).slope;
                (a - b).abs() / a.abs()
            })
            .fold(Some(0.0), |m: Option<f64>, r| m.map(|m| m.max(r)))
    } else {
        None
    };
    TrendChecks {
        x,
        h_increasing: strictly(&h, true),
        w_decreasing: strictly(&w, false),
        hw_decreasing: strictly(&hw, false),
        slope_h_positive: slope(Observable::Height) > 0.0,
        width_faster_than_height: slope(Observable::InverseWidth) > slope(Observable::Height),
        slope_hw_negative: slope(Observable::Product) < 0.0,
        centroid_approach,
        area_proxies_agree,
        cross_checks_agree: pts.iter().all(|p| p.cross_check.agrees),
        slope_stability,
    }
}

/// Peak height, width and product against N for each excitation ratio.
pub fn run_fig3(n_list: &[u32], x_list: &[f64], policy: &ScanPolicy) -> Result<ScalingStudy> {
    check_n_list(n_list)?;
    policy.validate()?;
    if x_list.is_empty() {
        return Err(Error::InvalidArgument("x_targets is empty".into()));
    }
    let per_n: Vec<Result<Vec<LevelPeak>>> = n_list
        .par_iter()
        .map(|&nb| {
            let family = build_ibm(IbmModelSpec::new(nb))?;
            let targets = targets_for(x_list, family.n())?;
            locate_peaks(&family, &targets, Some(nb), policy)
        })
        .collect();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (&nb, r) in n_list.iter().zip(per_n) {
        for p in r? {
            if p.peak.resolved {
                points.push(p);
            } else {
                dropped.push(DroppedPoint {
                    boson_number: nb,
                    x: p.x,
                    reason: format!(
                        "refinement exhausted with {} samples above half maximum",
                        p.peak.samples_above_half
                    ),
                });
            }
        }
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.boson_number.cmp(&b.boson_number)));
    let mut fits = Vec::new();
    let mut checks = Vec::new();
    for &x in x_list {
        let pts: Vec<&LevelPeak> = points.iter().filter(|p| p.x == x).collect();
        if pts.len() < 3 {
            return Err(Error::InsufficientSpan(format!(
                "only {} resolved peaks survive for x = {x}",
                pts.len()
            )));
        }
        let rows: Vec<FitRow> = Observable::ALL.iter().map(|&o| fit(&pts, o, x)).collect();
        checks.push(trend_checks(x, &pts, &rows));
        fits.extend(rows);
    }
    Ok(ScalingStudy {
        n_list: n_list.to_vec(),
        x_targets: x_list.to_vec(),
        points,
        dropped,
        fits,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_rounding() {
        assert_eq!(level_for_ratio(0.0, 6).unwrap(), 0);
        assert_eq!(level_for_ratio(0.25, 6).unwrap(), 2); // 1.5 rounds up
        assert_eq!(level_for_ratio(0.99, 6).unwrap(), 5);
        assert!(level_for_ratio(1.0, 6).is_err());
        assert!(level_for_ratio(-0.1, 6).is_err());
    }

    #[test]
    fn n_list_validation() {
        assert!(check_n_list(&[10, 20]).is_err());
        assert!(check_n_list(&[10, 20, 20]).is_err());
        assert!(check_n_list(&[10, 20, 40]).is_ok());
    }

    #[test]
    fn small_fig2_peaks_cross_check() {
        let r = run_fig2(60, &[0.0, 0.2], &ScanPolicy::default()).unwrap();
        assert_eq!(r.peaks.len(), 2);
        for p in &r.peaks {
            assert!(p.peak.resolved);
            assert!(p.cross_check.agrees, "{:?}", p.cross_check);
        }
        assert!(r.centroids_decreasing);
        assert!((r.peaks[0].peak.centroid - 0.8).abs() < 0.15);
    }

    #[test]
    fn fig3_requires_three_n() {
        assert!(run_fig3(&[10, 20], &[0.0], &ScanPolicy::default()).is_err());
        assert!(run_fig3(&[10, 20, 40], &[], &ScanPolicy::default()).is_err());
    }
}
