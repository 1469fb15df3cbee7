//! Gap scan plus Newton refinement on s(Λ) = (E_i − E_j)².

use super::{
    check_ceiling, complex_spectrum, min_pair_gap, EpCensus, EpStatus,
    ExceptionalPoint, Region,
};
use crate::error::{Error, Result};
use crate::model::LinearFamily;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusOptions {
    /// Scan points per unit length along each axis.
    pub grid_density: f64,
    /// Extra scans, each doubling the density, while the census is incomplete.
    pub max_refinements: usize,
    pub newton_max_iter: usize,
    /// Refined iff |s| < residual_tol · span².
    pub residual_tol: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            grid_density: 40.0,
            max_refinements: 2,
            newton_max_iter: 60,
            residual_tol: 1e-10,
        }
    }
}

impl CensusOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_density > 0.0) || !(self.residual_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidArgument(
                "census options: grid_density, residual_tol and newton_max_iter must be positive"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// g(Λ) = min pair gap sampled on a grid; `g[j * re.len() + i]` belongs to (re[i], im[j]).
#[derive(Debug, Clone, PartialEq)]
pub struct GapGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub g: Vec<f64>,
}

fn axes(region: &Region, density: f64) -> (Vec<f64>, Vec<f64>) {
    let nx = ((region.re_max - region.re_min) * density).ceil().max(2.0) as usize + 1;
    let ny = (region.im_max * density).ceil().max(2.0) as usize;
    let re = crate::spectral::linspace(region.re_min, region.re_max, nx);
    let im = (1..=ny).map(|j| region.im_max * j as f64 / ny as f64).collect();
    (re, im)
}

pub fn gap_grid(family: &LinearFamily, region: &Region, density: f64) -> Result<GapGrid> {
    check_ceiling(family)?;
    region.validate()?;
    let (re, im) = axes(region, density);
    let pts: Vec<Complex64> = im
        .iter()
        .flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y)))
        .collect();
    let g = pts
        .par_iter()
        .map(|&z| complex_spectrum(family, z).map(|e| min_pair_gap(&e).0))
        .collect::<Result<Vec<f64>>>()?;
    Ok(GapGrid { re, im, g })
}

/// Strict local minima of g over the 8-neighbourhood (boundary points included).
fn local_minima(grid: &GapGrid) -> Vec<Complex64> {
    let (nx, ny) = (grid.re.len(), grid.im.len());
    let at = |i: usize, j: usize| grid.g[j * nx + i];
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j);
            let mut is_min = v.is_finite();
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                        continue;
                    }
                    if at(a as usize, b as usize) <= v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push(Complex64::new(grid.re[i], grid.im[j]));
            }
        }
    }
    out
}

struct Tracked {
    s: Complex64,
    center: Complex64,
}

/// s for the pair best matching `center` (gap plus center displacement).
fn track(family: &LinearFamily, l: Complex64, center: Option<Complex64>) -> Result<Tracked> {
    let e = complex_spectrum(family, l)?;
    let (i, j) = match center {
        None => {
            let (_, i, j) = min_pair_gap(&e);
            (i, j)
        }
        Some(c) => {
            let mut best = (f64::INFINITY, 0, 1);
            for i in 0..e.len() {
                for j in i + 1..e.len() {
                    let score = (e[i] - e[j]).norm() + ((e[i] + e[j]) * 0.5 - c).norm();
                    if score < best.0 {
                        best = (score, i, j);
                    }
                }
            }
            (best.1, best.2)
        }
    };
    let d = e[i] - e[j];
    Ok(Tracked {
        s: d * d,
        center: (e[i] + e[j]) * 0.5,
    })
}

struct NewtonOutcome {
    location: Complex64,
    s_abs: f64,
    /// |s / s'| at the final point.
    uncertainty: f64,
    iters: usize,
}

fn newton(family: &LinearFamily, seed: Complex64, max_iter: usize) -> Result<NewtonOutcome> {
    let mut l = seed;
    let mut cur = track(family, l, None)?;
    let mut iters = 0;
    let mut slope = 0.0;
    while iters < max_iter {
        iters += 1;
        let h = 1e-6 * l.norm().max(1.0);
        let sp = track(family, l + h, Some(cur.center))?.s;
        let sm = track(family, l - h, Some(cur.center))?.s;
        let ds = (sp - sm) / (2.0 * h);
        if !(ds.norm() > 0.0) || !ds.norm().is_finite() {
            break;
        }
        slope = ds.norm();
        let mut step = cur.s / ds;
        let cap = 0.25 * l.norm().max(1.0);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        // damped: halve until |s| decreases
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..30 {
            let trial = l - step * t;
            let next = track(family, trial, Some(cur.center))?;
            if next.s.norm() < cur.s.norm() {
                accepted = Some((trial, next));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, next)) = accepted else { break };
        let moved = (trial - l).norm();
        l = trial;
        cur = next;
        if moved <= 4.0 * f64::EPSILON * l.norm().max(1.0) || cur.s.norm() == 0.0 {
            break;
        }
    }
    Ok(NewtonOutcome {
        location: l,
        s_abs: cur.s.norm(),
        uncertainty: if slope > 0.0 { cur.s.norm() / slope } else { f64::INFINITY },
        iters,
    })
}

/// Spectral span of the real spectrum at Re Λ, the scale for residuals.
pub(crate) fn reference_span(family: &LinearFamily, re: f64) -> Result<f64> {
    let s = crate::spectral::solve_slice(family, re, crate::spectral::Derivatives::None, false)?;
    Ok(s.span())
}

fn count_refined(eps: &[ExceptionalPoint]) -> usize {
    eps.iter().filter(|e| e.status == EpStatus::Refined).count()
}

/// Locate EPs in `region` by gap scan and Newton refinement; conjugates are
/// folded into the upper half-plane.
pub fn scan_and_refine(
    family: &LinearFamily,
    region: &Region,
    options: &CensusOptions,
) -> Result<EpCensus> {
    check_ceiling(family)?;
    region.validate()?;
    options.validate()?;
    let n = family.n();
    let expected = n * (n - 1) / 2;
    let merge_radius = region.merge_radius();
    let mut eps: Vec<ExceptionalPoint> = Vec::new();
    // location uncertainty per entry of `eps`
    let mut unc: Vec<f64> = Vec::new();
    let mut density = options.grid_density;
    let mut rounds = 0;
    loop {
        let grid = gap_grid(family, region, density)?;
        let spacing = 1.0 / density;
        let seeds: Vec<Complex64> = local_minima(&grid)
            .into_iter()
            .filter(|s| {
                !eps.iter()
                    .any(|e| e.status == EpStatus::Refined && (e.location - s).norm() < 0.5 * spacing)
            })
            .collect();
        let outcomes = seeds
            .par_iter()
            .map(|&s| newton(family, s, options.newton_max_iter))
            .collect::<Result<Vec<_>>>()?;
        for (seed, out) in seeds.iter().zip(outcomes) {
            let mut loc = out.location;
            if loc.im < 0.0 {
                loc = loc.conj();
            }
            let span = reference_span(family, loc.re)?;
            let refined = out.s_abs < options.residual_tol * span * span;
            let candidate = if refined {
                if loc.im <= merge_radius || !region.contains(loc, merge_radius) {
                    continue;
                }
                ExceptionalPoint {
                    location: loc,
                    pair: None,
                    gap_residual: out.s_abs / span,
                    newton_iters: out.iters,
                    status: EpStatus::Refined,
                }
            } else {
                let interior = seed.re > region.re_min
                    && seed.re < region.re_max
                    && seed.im < region.im_max
                    && seed.im > grid.im[0];
                if !interior {
                    continue;
                }
                let t = track(family, *seed, None)?;
                ExceptionalPoint {
                    location: *seed,
                    pair: None,
                    gap_residual: t.s.norm() / reference_span(family, seed.re)?,
                    newton_iters: out.iters,
                    status: EpStatus::GridOnly,
                }
            };
            merge_into(&mut eps, &mut unc, candidate, out.uncertainty, merge_radius, spacing);
        }
        if count_refined(&eps) >= expected || rounds >= options.max_refinements {
            break;
        }
        rounds += 1;
        density *= 2.0;
    }
    // grid-only seeds that a refined EP has since explained are dropped
    let refined: Vec<Complex64> = eps
        .iter()
        .filter(|e| e.status == EpStatus::Refined)
        .map(|e| e.location)
        .collect();
    let final_spacing = 1.0 / density;
    eps.retain(|e| {
        e.status == EpStatus::Refined
            || !refined.iter().any(|r| (r - e.location).norm() < 2.0 * final_spacing)
    });
    eps.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });
    let found = count_refined(&eps);
    Ok(EpCensus {
        label: family.label().to_string(),
        n,
        region: *region,
        complete: found == expected,
        expected,
        missing: expected.saturating_sub(found),
        eps,
        grid_density: density,
        refinements: rounds,
    })
}

/// Refined points closer than the merge radius plus both location
/// uncertainties are one EP; the smaller residual wins.
fn merge_into(
    eps: &mut Vec<ExceptionalPoint>,
    unc: &mut Vec<f64>,
    c: ExceptionalPoint,
    c_unc: f64,
    radius: f64,
    spacing: f64,
) {
    match c.status {
        EpStatus::Refined => {
            let hit = eps.iter().zip(unc.iter()).position(|(e, u)| {
                e.status == EpStatus::Refined
                    && (e.location - c.location).norm() < radius + u + c_unc
            });
            match hit {
                Some(i) => {
                    if c.gap_residual < eps[i].gap_residual {
                        eps[i] = c;
                        unc[i] = c_unc;
                    }
                }
                None => {
                    eps.push(c);
                    unc.push(c_unc);
                }
            }
        }
        _ => {
            if !eps.iter().any(|e| (e.location - c.location).norm() < 0.5 * spacing) {
                eps.push(c);
                unc.push(f64::INFINITY);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_generic;

    #[test]
    fn toy_census() {
        let f = build_generic("1 0\n0 -1", "0 1\n1 0").unwrap();
        let region = Region {
            re_min: -2.0,
            re_max: 2.0,
            im_max: 2.0,
        };
        let c = scan_and_refine(&f, &region, &CensusOptions::default()).unwrap();
        assert!(c.complete);
        assert_eq!(c.eps.len(), 1);
        let ep = &c.eps[0];
        assert!((ep.location - Complex64::new(0.0, 1.0)).norm() < 1e-10);
        assert!(ep.gap_residual < 1e-10 * 2.0);
    }

    #[test]
    fn offdiagonal_pair_closed_form() {
        // EP at i (e1 − e2) / (2v)
        let f = build_generic("3 0\n0 1", "0 0.5\n0.5 0").unwrap();
        let region = Region {
            re_min: -1.0,
            re_max: 1.0,
            im_max: 3.0,
        };
        let c = scan_and_refine(&f, &region, &CensusOptions::default()).unwrap();
        assert_eq!(c.eps.len(), 1);
        assert!((c.eps[0].location - Complex64::new(0.0, 2.0)).norm() < 1e-9);
    }

    #[test]
    fn region_excluding_the_ep_is_incomplete() {
        let f = build_generic("1 0\n0 -1", "0 1\n1 0").unwrap();
        let region = Region {
            re_min: 0.5,
            re_max: 2.0,
            im_max: 0.5,
        };
        let c = scan_and_refine(&f, &region, &CensusOptions::default()).unwrap();
        assert!(!c.complete);
        assert_eq!(c.missing, 1);
        assert!(c.eps.iter().all(|e| e.status != EpStatus::Refined));
    }

    #[test]
    fn conjugate_symmetry_of_gap_field() {
        let f = build_generic(
            "0.3 1.1 -0.4 0.2\n1.1 -0.7 0.5 0.9\n-0.4 0.5 1.3 -0.6\n0.2 0.9 -0.6 0.1",
            "1.0 0.2 0.3 -0.5\n0.2 -1.2 0.8 0.4\n0.3 0.8 0.6 0.7\n-0.5 0.4 0.7 -0.3",
        )
        .unwrap();
        for z in [Complex64::new(0.2, 0.7), Complex64::new(-1.3, 0.05), Complex64::new(2.0, 1.9)] {
            let a = min_pair_gap(&complex_spectrum(&f, z).unwrap()).0;
            let b = min_pair_gap(&complex_spectrum(&f, z.conj()).unwrap()).0;
            assert!((a - b).abs() < 1e-12 * (1.0 + a));
        }
    }
}
