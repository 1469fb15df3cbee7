//! Constancy of Δ(λ) = U_k(λ) + (1/Ω) Σ ln R_kl(λ), with R_kl the distance
//! from λ to the sheet-k EPs.

use super::{EpCensus, EpStatus};
use crate::error::{Error, Result};
use crate::model::LinearFamily;
use crate::spectral::compute_u;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const FACTORIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorizationVerdict {
    Pass,
    Fail,
    /// Sheet-k EP count differs from n − 1; no judgement is made.
    NonGenericSheetMultiplicity,
    IncompleteCensus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub level: usize,
    pub sheet_eps: Vec<Complex64>,
    pub expected: usize,
    pub verdict: FactorizationVerdict,
    /// Estimate of −ln c_k / (2Ω).
    pub mean_delta: Option<f64>,
    pub max_deviation: Option<f64>,
    pub c_k: Option<f64>,
}

/// (mean Δ, max |Δ − mean Δ|) for an explicit charge list.
pub fn factorization_deviation(
    family: &LinearFamily,
    k: usize,
    charges: &[Complex64],
    grid: &[f64],
) -> Result<(f64, f64)> {
    let omega = family.omega() as f64;
    let u = compute_u(family, k, grid)?.u;
    let delta: Vec<f64> = grid
        .iter()
        .zip(&u)
        .map(|(&l, &u)| {
            u + charges
                .iter()
                .map(|c| (Complex64::from(l) - c).norm().ln())
                .sum::<f64>()
                / omega
        })
        .collect();
    let mean = delta.iter().sum::<f64>() / delta.len() as f64;
    let dev = delta.iter().fold(0.0_f64, |m, d| m.max((d - mean).abs()));
    Ok((mean, dev))
}

/// Check the factorization for level k using the assigned census.
pub fn verify_factorization(
    family: &LinearFamily,
    census: &EpCensus,
    k: usize,
    grid: &[f64],
) -> Result<FactorizationReport> {
    if k >= family.n() {
        return Err(Error::InvalidArgument(format!("level {k} out of range")));
    }
    let expected = family.n() - 1;
    let sheet_eps: Vec<Complex64> = census
        .eps
        .iter()
        .filter(|e| e.status != EpStatus::GridOnly)
        .filter(|e| e.pair.is_some_and(|(a, b)| a == k || b == k))
        .map(|e| e.location)
        .collect();
    let mut report = FactorizationReport {
        level: k,
        expected,
        verdict: FactorizationVerdict::IncompleteCensus,
        sheet_eps,
        mean_delta: None,
        max_deviation: None,
        c_k: None,
    };
    if !census.complete {
        return Ok(report);
    }
    if report.sheet_eps.len() != expected {
        report.verdict = FactorizationVerdict::NonGenericSheetMultiplicity;
        return Ok(report);
    }
    let (mean, dev) = factorization_deviation(family, k, &report.sheet_eps, grid)?;
    report.mean_delta = Some(mean);
    report.max_deviation = Some(dev);
    report.c_k = Some((-2.0 * family.omega() as f64 * mean).exp());
    report.verdict = if dev < FACTORIZATION_TOLERANCE {
        FactorizationVerdict::Pass
    } else {
        FactorizationVerdict::Fail
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::{assign_all, scan_and_refine, CensusOptions, Region};
    use crate::model::build_generic;
    use crate::spectral::linspace;

    #[test]
    fn toy_factorization() {
        let f = build_generic("1 0\n0 -1", "0 1\n1 0").unwrap();
        let region = Region {
            re_min: -2.0,
            re_max: 2.0,
            im_max: 2.0,
        };
        let mut c = scan_and_refine(&f, &region, &CensusOptions::default()).unwrap();
        assign_all(&f, &mut c, None).unwrap();
        let r = verify_factorization(&f, &c, 0, &linspace(-1.0, 1.0, 101)).unwrap();
        assert_eq!(r.verdict, FactorizationVerdict::Pass);
        assert!((r.c_k.unwrap() - 4.0).abs() < 1e-8);
        // misplaced charge
        let (_, dev) =
            factorization_deviation(&f, 0, &[Complex64::new(0.3, 0.5)], &linspace(-1.0, 1.0, 101))
                .unwrap();
        assert!(dev > 1e-3);
    }
}
