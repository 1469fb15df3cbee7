//! Exceptional points of H(Λ) = H₀ + ΛV in the complex Λ plane.

mod census;
mod factorization;
mod sheets;

pub use census::{gap_grid, scan_and_refine, CensusOptions, GapGrid};
pub use factorization::{
    factorization_deviation, verify_factorization, FactorizationReport, FactorizationVerdict,
    FACTORIZATION_TOLERANCE,
};
pub use sheets::{assign_all, assign_sheets, SheetAssignment};

use crate::error::{Error, Result};
use crate::linalg::complex_eigenvalues;
use crate::model::LinearFamily;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest dimension accepted by the complex-plane routines.
pub const CENSUS_MAX_DIM: usize = 64;

/// Rectangle [re_min, re_max] × (0, im_max] in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl Region {
    pub const IBM_DEFAULT: Region = Region {
        re_min: -0.2,
        re_max: 1.2,
        im_max: 1.5,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = [self.re_min, self.re_max, self.im_max].iter().all(|x| x.is_finite())
            && self.re_max > self.re_min
            && self.im_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "region must satisfy re_min < re_max and im_max > 0, got {self:?}"
            )))
        }
    }

    /// Diagonal length, the |region| of the merge radius.
    pub fn size(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max)
    }

    pub fn merge_radius(&self) -> f64 {
        1e-8 * self.size().max(1.0)
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im > 0.0
            && z.im <= self.im_max + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpStatus {
    Refined,
    GridOnly,
    Suspect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    /// Upper half-plane representative; the conjugate is implied.
    pub location: Complex64,
    /// Real-axis level labels (k < l), filled by sheet assignment.
    pub pair: Option<(usize, usize)>,
    /// |E_i − E_j|² / span at the location.
    pub gap_residual: f64,
    pub newton_iters: usize,
    pub status: EpStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpCensus {
    pub label: String,
    pub n: usize,
    pub region: Region,
    pub eps: Vec<ExceptionalPoint>,
    /// Refined count equals n(n−1)/2.
    pub complete: bool,
    pub expected: usize,
    pub missing: usize,
    pub grid_density: f64,
    pub refinements: usize,
}

impl EpCensus {
    pub fn refined(&self) -> impl Iterator<Item = &ExceptionalPoint> {
        self.eps.iter().filter(|e| e.status != EpStatus::GridOnly)
    }
}

/// Row of the census JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpRecord {
    pub re: f64,
    pub im: f64,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub residual: f64,
    pub status: EpStatus,
}

impl From<&ExceptionalPoint> for EpRecord {
    fn from(e: &ExceptionalPoint) -> Self {
        Self {
            re: e.location.re,
            im: e.location.im,
            k: e.pair.map(|p| p.0),
            l: e.pair.map(|p| p.1),
            residual: e.gap_residual,
            status: e.status,
        }
    }
}

pub(crate) fn check_ceiling(family: &LinearFamily) -> Result<()> {
    if family.n() > CENSUS_MAX_DIM {
        return Err(Error::CensusCeiling {
            n: family.n(),
            max: CENSUS_MAX_DIM,
        });
    }
    Ok(())
}

/// All eigenvalues of H₀ + ΛV, unordered.
pub fn complex_spectrum(family: &LinearFamily, lambda: Complex64) -> Result<Vec<Complex64>> {
    check_ceiling(family)?;
    complex_eigenvalues(&family.complex_at(lambda)).map_err(|e| Error::Eigensolver {
        lambda: lambda.to_string(),
        n: family.n(),
        detail: e.to_string(),
    })
}

/// Smallest pairwise distance and the pair attaining it.
pub(crate) fn min_pair_gap(e: &[Complex64]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let d = (e[i] - e[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_generic;

    #[test]
    fn toy_coalescence_at_i() {
        let f = build_generic("1 0\n0 -1", "0 1\n1 0").unwrap();
        let e = complex_spectrum(&f, Complex64::new(0.0, 1.0)).unwrap();
        assert!(e.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn commuting_diagonal_pair() {
        let f = build_generic("0 0\n0 1", "1 0\n0 0").unwrap();
        let l = Complex64::new(0.5, 0.5);
        let mut e = complex_spectrum(&f, l).unwrap();
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((e[0] - l).norm() < 1e-15);
        assert!((e[1] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn real_argument_matches_real_solver() {
        let f = build_generic("1 2 0\n2 -1 1\n0 1 3", "0 1 1\n1 2 0\n1 0 -1").unwrap();
        let mut e = complex_spectrum(&f, Complex64::new(0.3, 0.0)).unwrap();
        e.sort_by(|a, b| a.re.total_cmp(&b.re));
        let r = crate::spectral::solve_slice(&f, 0.3, crate::spectral::Derivatives::None, false)
            .unwrap();
        for (a, b) in e.iter().zip(&r.energies) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn ceiling() {
        let f = crate::model::build_ibm(crate::model::IbmModelSpec::new(130)).unwrap();
        assert!(matches!(
            complex_spectrum(&f, Complex64::new(0.5, 0.1)).unwrap_err(),
            Error::CensusCeiling { n: 66, max: 64 }
        ));
    }
}
