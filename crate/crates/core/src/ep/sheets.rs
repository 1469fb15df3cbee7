//! Riemann-sheet labels of an EP by continuation from the real axis.

use super::{complex_spectrum, min_pair_gap, EpCensus, EpStatus, ExceptionalPoint};
use crate::error::{Error, Result};
use crate::model::LinearFamily;
use crate::spectral::{solve_slice, Derivatives};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Required ratio of second-nearest to nearest match distance.
const MARGIN: f64 = 3.0;
/// Smallest continuation step in Λ units.
const STEP_FLOOR: f64 = 1e-6;
/// Continuation stops this fraction of μ below the EP.
const STOP_BEFORE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetAssignment {
    pub pair: (usize, usize),
    /// Matching stayed ambiguous outside the coalescing pair at the step floor.
    pub suspect: bool,
    pub steps: usize,
}

/// Match new eigenvalues to predicted positions. Returns the assignment and
/// the labels whose match failed the margin test.
fn match_step(predicted: &[Complex64], new: &[Complex64]) -> (Vec<usize>, Vec<usize>) {
    let n = new.len();
    let mut failing = Vec::new();
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    // candidate list sorted by distance so a greedy fill is deterministic
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (a, q) in predicted.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = new.iter().enumerate().map(|(j, e)| ((e - q).norm(), j)).collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0));
        if d.len() > 1 && d[1].0 < MARGIN * d[0].0 {
            failing.push(a);
        }
        cand.extend(d.iter().map(|&(dist, j)| (dist, a, j)));
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    for (_, a, j) in cand {
        if assign[a] == usize::MAX && !taken[j] {
            assign[a] = j;
            taken[j] = true;
        }
    }
    // nearest-neighbour conflicts also count as failures
    for (a, q) in predicted.iter().enumerate() {
        let nearest = (0..n)
            .min_by(|&x, &y| (new[x] - q).norm().total_cmp(&(new[y] - q).norm()))
            .unwrap();
        if nearest != assign[a] && !failing.contains(&a) {
            failing.push(a);
        }
    }
    (assign, failing)
}

fn closest_pair(e: &[Complex64]) -> (usize, usize) {
    let (_, i, j) = min_pair_gap(e);
    (i.min(j), i.max(j))
}

/// Continue the spectrum along Re Λ + i t Im Λ, t: 0 → 1 − 10⁻³, and report
/// the two real-axis labels that approach each other.
pub fn assign_sheets(family: &LinearFamily, ep: &ExceptionalPoint) -> Result<SheetAssignment> {
    let lam = ep.location.re;
    let mu = ep.location.im;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument("EP must lie in the upper half-plane".into()));
    }
    let anchor = solve_slice(family, lam, Derivatives::None, false)?;
    if anchor.degenerate {
        let e = &anchor.energies;
        let i = (0..e.len() - 1)
            .min_by(|&a, &b| (e[a + 1] - e[a]).total_cmp(&(e[b + 1] - e[b])))
            .unwrap();
        return Err(Error::ZeroGap {
            lambda: lam,
            level: i,
            other: i + 1,
        });
    }
    let mut cur: Vec<Complex64> = anchor.energies.iter().map(|&e| Complex64::from(e)).collect();
    let mut prev: Option<(Vec<Complex64>, f64)> = None;
    let stop = 1.0 - STOP_BEFORE;
    let floor = (STEP_FLOOR / mu).min(1e-2);
    let mut t: f64 = 0.0;
    let mut h: f64 = 1.0 / 32.0;
    let mut suspect = false;
    let mut steps = 0;
    while t < stop {
        h = h.min(stop - t);
        let new = complex_spectrum(family, Complex64::new(lam, mu * (t + h)))?;
        let predicted: Vec<Complex64> = match &prev {
            Some((p, hp)) => cur.iter().zip(p).map(|(c, q)| c + (c - q) * (h / hp)).collect(),
            None => cur.clone(),
        };
        let (assign, failing) = match_step(&predicted, &new);
        let accept = if failing.is_empty() {
            true
        } else if h * 0.5 >= floor {
            h *= 0.5;
            false
        } else {
            // at the floor: tolerate ambiguity inside the pair that is coalescing
            let (a, b) = closest_pair(&assign.iter().map(|&j| new[j]).collect::<Vec<_>>());
            if !failing.iter().all(|&x| x == a || x == b) {
                suspect = true;
            }
            true
        };
        if accept {
            let next: Vec<Complex64> = assign.iter().map(|&j| new[j]).collect();
            prev = Some((std::mem::replace(&mut cur, next), h));
            t += h;
            steps += 1;
            h = (h * 1.5).min(1.0 / 16.0);
        }
    }
    Ok(SheetAssignment {
        pair: closest_pair(&cur),
        suspect,
        steps,
    })
}

/// Assign every refined EP of the census; EPs outside `re_window` (when given)
/// are left unassigned.
pub fn assign_all(
    family: &LinearFamily,
    census: &mut EpCensus,
    re_window: Option<(f64, f64)>,
) -> Result<()> {
    let idx: Vec<usize> = census
        .eps
        .iter()
        .enumerate()
        .filter(|(_, e)| e.status != EpStatus::GridOnly)
        .filter(|(_, e)| re_window.is_none_or(|(a, b)| e.location.re >= a && e.location.re <= b))
        .map(|(i, _)| i)
        .collect();
    let results = idx
        .par_iter()
        .map(|&i| assign_sheets(family, &census.eps[i]))
        .collect::<Result<Vec<_>>>()?;
    for (i, r) in idx.into_iter().zip(results) {
        let e = &mut census.eps[i];
        e.pair = Some(r.pair);
        if r.suspect {
            e.status = EpStatus::Suspect;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::{scan_and_refine, CensusOptions, Region};
    use crate::model::build_generic;

    #[test]
    fn toy_pair() {
        let f = build_generic("1 0\n0 -1", "0 1\n1 0").unwrap();
        let ep = ExceptionalPoint {
            location: Complex64::new(0.0, 1.0),
            pair: None,
            gap_residual: 0.0,
            newton_iters: 0,
            status: EpStatus::Refined,
        };
        let a = assign_sheets(&f, &ep).unwrap();
        assert_eq!(a.pair, (0, 1));
        assert!(!a.suspect);
    }

    #[test]
    fn block_family_near_ep_matches_avoided_crossing() {
        // levels 1 and 2 form a narrow avoided crossing at λ = 0.5 (EP at 0.5 + 0.01i);
        // level 0 couples weakly and far away
        let f = build_generic(
            "-5 0 0\n0 -0.5 0.01\n0 0.01 0.5",
            "0 0.3 0\n0.3 1 0\n0 0 -1",
        )
        .unwrap();
        let region = Region {
            re_min: -3.0,
            re_max: 3.0,
            im_max: 3.0,
        };
        let mut c = scan_and_refine(&f, &region, &CensusOptions::default()).unwrap();
        assign_all(&f, &mut c, None).unwrap();
        let near = c
            .eps
            .iter()
            .min_by(|a, b| a.location.im.total_cmp(&b.location.im))
            .unwrap();
        assert!((near.location.re - 0.5).abs() < 5e-3 && (near.location.im - 0.01).abs() < 1e-3);
        assert_eq!(near.pair, Some((1, 2)));
    }
}
