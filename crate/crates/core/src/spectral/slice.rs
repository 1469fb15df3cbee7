//! Real-λ spectra with Hellmann–Feynman and second-order derivatives.

use crate::error::{Error, Result};
use crate::linalg::{
    dense_eigenvalues, dense_eigh, solve_shifted_tridiagonal, tridiagonal_eigenvalues,
    tridiagonal_eigh, LapackFailure, SymMatrix,
};
use crate::model::LinearFamily;
use ndarray::Array2;

/// Gaps below this fraction of the spectral span count as exact degeneracies.
pub const ZERO_GAP_RELATIVE: f64 = 1e-14;
/// Minimum relative denominator accepted in the second-derivative sum.
pub const D2_GAP_RELATIVE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Derivatives {
    None,
    First,
    Second,
}

#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub lambda: f64,
    pub energies: Vec<f64>,
    pub d1: Option<Vec<f64>>,
    pub d2: Option<Vec<f64>>,
    pub eigvecs: Option<Array2<f64>>,
    /// Some gap lies below [`ZERO_GAP_RELATIVE`] of the span.
    pub degenerate: bool,
}

impl SpectrumSlice {
    pub fn span(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }
}

fn solver_error(lambda: f64, n: usize, e: LapackFailure) -> Error {
    Error::Eigensolver {
        lambda: lambda.to_string(),
        n,
        detail: e.to_string(),
    }
}

/// Smallest adjacent gap and the index of its lower level.
fn min_adjacent_gap(e: &[f64]) -> (f64, usize) {
    e.windows(2)
        .enumerate()
        .map(|(i, w)| (w[1] - w[0], i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

pub fn solve_slice(
    family: &LinearFamily,
    lambda: f64,
    want: Derivatives,
    keep_vectors: bool,
) -> Result<SpectrumSlice> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    let n = family.n();
    let h = family.at(lambda);
    let need_vectors = keep_vectors || want > Derivatives::None;
    let (energies, vecs) = match (&h, need_vectors) {
        (SymMatrix::Tridiagonal { diag, off }, false) => (
            tridiagonal_eigenvalues(diag, off).map_err(|e| solver_error(lambda, n, e))?,
            None,
        ),
        (SymMatrix::Tridiagonal { diag, off }, true) => {
            let (w, v) = tridiagonal_eigh(diag, off).map_err(|e| solver_error(lambda, n, e))?;
            (w, Some(v))
        }
        (SymMatrix::Dense(a), false) => (
            dense_eigenvalues(a).map_err(|e| solver_error(lambda, n, e))?,
            None,
        ),
        (SymMatrix::Dense(a), true) => {
            let (w, v) = dense_eigh(a).map_err(|e| solver_error(lambda, n, e))?;
            (w, Some(v))
        }
    };
    let span = energies[n - 1] - energies[0];
    let (gap, _) = min_adjacent_gap(&energies);
    let degenerate = !(gap >= ZERO_GAP_RELATIVE * span) || span == 0.0;

    let mut d1 = None;
    let mut d2 = None;
    if let Some(psi) = &vecs {
        if want >= Derivatives::First {
            let vpsi: Vec<Vec<f64>> = (0..n)
                .map(|k| family.v().matvec(&psi.column(k).to_vec()))
                .collect();
            let first: Vec<f64> = (0..n)
                .map(|k| psi.column(k).iter().zip(&vpsi[k]).map(|(a, b)| a * b).sum())
                .collect();
            if want == Derivatives::Second {
                let (gap, lo) = min_adjacent_gap(&energies);
                let threshold = D2_GAP_RELATIVE * span;
                if !(gap >= threshold) || span == 0.0 {
                    return Err(Error::NearDegenerate {
                        lambda,
                        k: lo,
                        l: lo + 1,
                        gap,
                        threshold,
                    });
                }
                d2 = Some(second_derivatives(&h, family.v(), psi, &energies, &first, &vpsi));
            }
            d1 = Some(first);
        }
    }
    Ok(SpectrumSlice {
        lambda,
        energies,
        d1,
        d2,
        eigvecs: if keep_vectors { vecs } else { None },
        degenerate,
    })
}

/// d2_k = 2 Σ_{m≠k} |V_mk|² / (E_k − E_m).
fn second_derivatives(
    h: &SymMatrix,
    v: &SymMatrix,
    psi: &Array2<f64>,
    energies: &[f64],
    d1: &[f64],
    vpsi: &[Vec<f64>],
) -> Vec<f64> {
    let n = energies.len();
    match h {
        SymMatrix::Tridiagonal { diag, off } => (0..n)
            .map(|k| {
                // reduced resolvent: solve (H − E_k) z = (V − d1_k) ψ_k on the
                // complement of ψ_k; then d2_k = −2 wᵀz
                let col = psi.column(k);
                let w: Vec<f64> = vpsi[k]
                    .iter()
                    .zip(col.iter())
                    .map(|(a, p)| a - d1[k] * p)
                    .collect();
                let mut z = solve_shifted_tridiagonal(diag, off, energies[k], &w);
                let overlap: f64 = z.iter().zip(col.iter()).map(|(a, p)| a * p).sum();
                z.iter_mut().zip(col.iter()).for_each(|(a, p)| *a -= overlap * p);
                -2.0 * w.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect(),
        SymMatrix::Dense(_) => {
            let vt = psi.t().dot(&v.to_dense()).dot(psi);
            (0..n)
                .map(|k| {
                    2.0 * (0..n)
                        .filter(|&m| m != k)
                        .map(|m| vt[[m, k]] * vt[[m, k]] / (energies[k] - energies[m]))
                        .sum::<f64>()
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_generic, build_ibm, IbmModelSpec};

    fn toy() -> LinearFamily {
        build_generic("1 0\n0 -1", "0 1\n1 0").unwrap()
    }

    #[test]
    fn toy_at_zero() {
        let s = solve_slice(&toy(), 0.0, Derivatives::First, false).unwrap();
        assert!((s.energies[0] + 1.0).abs() < 1e-15 && (s.energies[1] - 1.0).abs() < 1e-15);
        assert!(s.d1.unwrap().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn toy_at_one() {
        let s = solve_slice(&toy(), 1.0, Derivatives::Second, true).unwrap();
        let r2 = 2f64.sqrt();
        assert!((s.energies[0] + r2).abs() < 1e-14);
        let d1 = s.d1.unwrap();
        assert!((d1[0] + 1.0 / r2).abs() < 1e-14 && (d1[1] - 1.0 / r2).abs() < 1e-14);
        // E'' = ±1/(1+λ²)^{3/2}
        let d2 = s.d2.unwrap();
        assert!((d2[1] - 1.0 / 8f64.sqrt()).abs() < 1e-14);
        assert!(s.eigvecs.is_some());
    }

    #[test]
    fn dense_and_tridiagonal_second_derivatives_agree() {
        let f = build_ibm(IbmModelSpec::new(20)).unwrap();
        let g = LinearFamily::new(
            SymMatrix::Dense(f.h0().to_dense()),
            SymMatrix::Dense(f.v().to_dense()),
            "dense copy",
        )
        .unwrap();
        let a = solve_slice(&f, 0.7, Derivatives::Second, false).unwrap();
        let b = solve_slice(&g, 0.7, Derivatives::Second, false).unwrap();
        for k in 0..f.n() {
            assert!((a.d2.as_ref().unwrap()[k] - b.d2.as_ref().unwrap()[k]).abs() < 1e-9);
            assert!((a.d1.as_ref().unwrap()[k] - b.d1.as_ref().unwrap()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_d2_is_refused() {
        let f = build_generic("1 0\n0 2", "1 0\n0 0").unwrap();
        let err = solve_slice(&f, 1.0, Derivatives::Second, false).unwrap_err();
        assert!(matches!(err, Error::NearDegenerate { k: 0, l: 1, .. }));
        assert!(solve_slice(&f, 1.0, Derivatives::None, false).unwrap().degenerate);
    }

    #[test]
    fn nonfinite_lambda() {
        assert!(solve_slice(&toy(), f64::NAN, Derivatives::None, false).is_err());
    }
}
