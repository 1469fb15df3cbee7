use crate::ep::{assign_all, scan_and_refine, CensusOptions, EpStatus, Region};
use crate::error::Result;
use crate::model::{build_ibm, IbmModelSpec, LinearFamily};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Real-part window for the sheet-0 EPs that approach the critical point.
pub const APPROACH_RE_WINDOW: (f64, f64) = (0.6, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendVerdict {
    Pass,
    Fail,
    /// Commuting family: EPs sit on the real axis at every N.
    Degenerate,
    /// Fewer than two sizes produced a sheet-0 EP in the window.
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachPoint {
    #[serde(rename = "N")]
    pub boson_number: u32,
    pub n: usize,
    pub min_mu: Option<f64>,
    pub location: Option<Complex64>,
    pub complete: bool,
    pub refined: usize,
    pub expected: usize,
    pub suspect: usize,
    /// Wall-clock seconds; kept out of the JSON so outputs stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachReport {
    pub re_window: (f64, f64),
    pub points: Vec<ApproachPoint>,
    pub verdict: TrendVerdict,
}

fn approach_point(
    boson_number: u32,
    family: &LinearFamily,
    region: &Region,
    options: &CensusOptions,
) -> Result<ApproachPoint> {
    let t = Instant::now();
    if family.is_commuting() {
        return Ok(ApproachPoint {
            boson_number,
            n: family.n(),
            min_mu: Some(0.0),
            location: None,
            complete: false,
            refined: 0,
            expected: family.n() * (family.n() - 1) / 2,
            suspect: 0,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    let mut census = scan_and_refine(family, region, options)?;
    assign_all(family, &mut census, Some(APPROACH_RE_WINDOW))?;
    let (a, b) = APPROACH_RE_WINDOW;
    let best = census
        .eps
        .iter()
        .filter(|e| e.status == EpStatus::Refined)
        .filter(|e| e.pair.is_some_and(|p| p.0 == 0))
        .filter(|e| e.location.re >= a && e.location.re <= b)
        .min_by(|x, y| x.location.im.total_cmp(&y.location.im));
    Ok(ApproachPoint {
        boson_number,
        n: family.n(),
        min_mu: best.map(|e| e.location.im),
        location: best.map(|e| e.location),
        complete: census.complete,
        refined: census.refined().count(),
        expected: census.expected,
        suspect: census.eps.iter().filter(|e| e.status == EpStatus::Suspect).count(),
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// min Im Λ over sheet-0 EPs near the real axis for each family, with the
/// verdict that it strictly decreases along the list.
pub fn ep_approach(
    families: &[(u32, LinearFamily)],
    region: &Region,
    options: &CensusOptions,
) -> Result<ApproachReport> {
    let points = families
        .iter()
        .map(|(nb, f)| approach_point(*nb, f, region, options))
        .collect::<Result<Vec<_>>>()?;
    let verdict = if families.iter().any(|(_, f)| f.is_commuting()) {
        TrendVerdict::Degenerate
    } else {
        let mu: Vec<f64> = points.iter().filter_map(|p| p.min_mu).collect();
        if mu.len() < 2 {
            TrendVerdict::Insufficient
        } else if mu.windows(2).all(|w| w[1] < w[0]) {
            TrendVerdict::Pass
        } else {
            TrendVerdict::Fail
        }
    };
    Ok(ApproachReport {
        re_window: APPROACH_RE_WINDOW,
        points,
        verdict,
    })
}

pub fn run_ep_approach(
    n_list: &[u32],
    region: &Region,
    options: &CensusOptions,
) -> Result<ApproachReport> {
    let families = n_list
        .iter()
        .map(|&nb| Ok((nb, build_ibm(IbmModelSpec::new(nb))?)))
        .collect::<Result<Vec<_>>>()?;
    ep_approach(&families, region, options)
}
