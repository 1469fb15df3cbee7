//! U_k, F_k, C_k along a real λ grid.

use super::slice::{solve_slice, Derivatives, SpectrumSlice, ZERO_GAP_RELATIVE};
use crate::error::{Error, Result};
use crate::model::LinearFamily;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    FiniteDifference,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::FiniteDifference => "finite_difference",
        })
    }
}

/// Sampled U/F/C of one level. `f` and `c` are empty until computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoulombProfile {
    pub level: usize,
    /// k/n.
    pub x: f64,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub f: Vec<f64>,
    pub c: Vec<f64>,
    pub method: Method,
}

/// U, F, C of one level at one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombPoint {
    pub u: f64,
    pub f: f64,
    pub c: f64,
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::InvalidGrid(format!("need at least 3 points, got {}", grid.len())));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly ascending".into()));
    }
    Ok(())
}

fn check_level(family: &LinearFamily, k: usize) -> Result<()> {
    if k >= family.n() {
        return Err(Error::InvalidArgument(format!(
            "level {k} out of range for dimension {}",
            family.n()
        )));
    }
    Ok(())
}

/// Uniform grid of `points` values on [a, b].
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    let h = (b - a) / (points - 1) as f64;
    (0..points)
        .map(|i| if i + 1 == points { b } else { a + h * i as f64 })
        .collect()
}

fn gap_checked(s: &SpectrumSlice, k: usize, l: usize) -> Result<f64> {
    let d = s.energies[l] - s.energies[k];
    if !(d.abs() >= ZERO_GAP_RELATIVE * s.span()) || s.span() == 0.0 {
        return Err(Error::ZeroGap {
            lambda: s.lambda,
            level: k,
            other: l,
        });
    }
    Ok(d)
}

/// U_k = −(1/Ω) Σ_{l≠k} ln|E_l − E_k|.
pub fn u_at(s: &SpectrumSlice, k: usize) -> Result<f64> {
    let omega = (s.energies.len() - 1) as f64;
    let mut acc = 0.0;
    for l in (0..s.energies.len()).filter(|&l| l != k) {
        acc += gap_checked(s, k, l)?.abs().ln();
    }
    Ok(-acc / omega)
}

/// Analytic U, F and (when d2 is present) C at one slice.
pub fn point_at(s: &SpectrumSlice, k: usize) -> Result<CoulombPoint> {
    let d1 = s
        .d1
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("first derivatives required".into()))?;
    let omega = (s.energies.len() - 1) as f64;
    let (mut u, mut f, mut c) = (0.0, 0.0, 0.0);
    for l in (0..s.energies.len()).filter(|&l| l != k) {
        let de = gap_checked(s, k, l)?;
        let r = (d1[l] - d1[k]) / de;
        u += de.abs().ln();
        f += r;
        if let Some(d2) = &s.d2 {
            c += (d2[l] - d2[k]) / de - r * r;
        }
    }
    Ok(CoulombPoint {
        u: -u / omega,
        f: f / omega,
        c: if s.d2.is_some() { c / omega } else { f64::NAN },
    })
}

/// Three-point derivative on a possibly nonuniform grid; one-sided at the ends.
pub fn nonuniform_derivative(grid: &[f64], y: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    let three = |x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, at: f64| {
        // derivative of the interpolating parabola through the three points
        y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    for i in 0..n {
        let j = i.clamp(1, n - 2);
        out[i] = three(
            grid[j - 1],
            grid[j],
            grid[j + 1],
            y[j - 1],
            y[j],
            y[j + 1],
            grid[i],
        );
    }
    out
}

fn slices(family: &LinearFamily, grid: &[f64], want: Derivatives) -> Result<Vec<SpectrumSlice>> {
    grid.par_iter()
        .map(|&l| solve_slice(family, l, want, false))
        .collect()
}

fn excitation_ratio(family: &LinearFamily, k: usize) -> f64 {
    k as f64 / family.n() as f64
}

/// U only.
pub fn compute_u(family: &LinearFamily, k: usize, grid: &[f64]) -> Result<CoulombProfile> {
    Ok(compute_levels(family, &[k], grid, Method::FiniteDifference, false)?.remove(0))
}

/// U and F.
pub fn compute_f(
    family: &LinearFamily,
    k: usize,
    grid: &[f64],
    method: Method,
) -> Result<CoulombProfile> {
    let mut p = compute_levels(family, &[k], grid, method, true)?.remove(0);
    p.c.clear();
    Ok(p)
}

/// U, F and C.
pub fn compute_c(
    family: &LinearFamily,
    k: usize,
    grid: &[f64],
    method: Method,
) -> Result<CoulombProfile> {
    Ok(compute_levels(family, &[k], grid, method, true)?.remove(0))
}

/// Profiles for several levels sharing one set of slices. With `with_fc`
/// false only U is filled.
pub fn compute_levels(
    family: &LinearFamily,
    levels: &[usize],
    grid: &[f64],
    method: Method,
    with_fc: bool,
) -> Result<Vec<CoulombProfile>> {
    check_grid(grid)?;
    if levels.is_empty() {
        return Err(Error::InvalidArgument("level list is empty".into()));
    }
    for &k in levels {
        check_level(family, k)?;
    }
    let want = match (with_fc, method) {
        (true, Method::Analytic) => Derivatives::Second,
        _ => Derivatives::None,
    };
    let sl = slices(family, grid, want)?;
    levels
        .iter()
        .map(|&k| {
            let mut p = CoulombProfile {
                level: k,
                x: excitation_ratio(family, k),
                grid: grid.to_vec(),
                u: Vec::with_capacity(grid.len()),
                f: Vec::new(),
                c: Vec::new(),
                method,
            };
            if want == Derivatives::Second {
                for s in &sl {
                    let pt = point_at(s, k)?;
                    p.u.push(pt.u);
                    p.f.push(pt.f);
                    p.c.push(pt.c);
                }
            } else {
                for s in &sl {
                    p.u.push(u_at(s, k)?);
                }
                if with_fc {
                    let neg_u: Vec<f64> = p.u.iter().map(|x| -x).collect();
                    p.f = nonuniform_derivative(grid, &neg_u);
                    p.c = nonuniform_derivative(grid, &p.f);
                }
            }
            Ok(p)
        })
        .collect()
}
