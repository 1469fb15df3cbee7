//! Interacting boson model, J = v = 0 subspace.
//!
//! H(λ) = λ n_d/N − (1−λ)/N² Q·Q in the basis |n_d = 2m⟩, m = 0..⌊N/2⌋.

use super::LinearFamily;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IbmModelSpec {
    pub boson_number: u32,
}

impl IbmModelSpec {
    pub fn new(boson_number: u32) -> Self {
        Self { boson_number }
    }

    /// n = ⌊N/2⌋ + 1.
    pub fn dimension(&self) -> usize {
        self.boson_number as usize / 2 + 1
    }
}

/// Tridiagonal family with H₀ = −B and V = A + B.
pub fn build_ibm(spec: IbmModelSpec) -> Result<LinearFamily> {
    let big_n = spec.boson_number as f64;
    let n = spec.dimension();
    if spec.boson_number < 1 || n < 2 {
        return Err(Error::DimensionTooSmall { n: if spec.boson_number < 1 { 0 } else { n } });
    }
    let n2 = big_n * big_n;
    let mut a_diag = Vec::with_capacity(n);
    let mut b_diag = Vec::with_capacity(n);
    let mut b_off = Vec::with_capacity(n - 1);
    for m in 0..n {
        let nd = 2.0 * m as f64;
        let ns = big_n - nd;
        a_diag.push(nd / big_n);
        b_diag.push((nd * (ns + 1.0) + (nd + 5.0) * ns) / n2);
        if m + 1 < n {
            b_off.push(((nd + 2.0) * (nd + 5.0)).sqrt() * (ns * (ns - 1.0)).sqrt() / n2);
        }
    }
    let h0 = SymMatrix::Tridiagonal {
        diag: b_diag.iter().map(|b| -b).collect(),
        off: b_off.iter().map(|b| -b).collect(),
    };
    let v = SymMatrix::Tridiagonal {
        diag: a_diag.iter().zip(&b_diag).map(|(a, b)| a + b).collect(),
        off: b_off,
    };
    LinearFamily::new(h0, v, format!("ibm N={}", spec.boson_number))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_eigenvalues;

    fn spectrum(n: u32, lambda: f64) -> Vec<f64> {
        let f = build_ibm(IbmModelSpec::new(n)).unwrap();
        dense_eigenvalues(&f.at(lambda).to_dense()).unwrap()
    }

    #[test]
    fn dimension_floor() {
        assert!(build_ibm(IbmModelSpec::new(1)).is_err());
        assert!(build_ibm(IbmModelSpec::new(0)).is_err());
        assert_eq!(build_ibm(IbmModelSpec::new(2)).unwrap().n(), 2);
        assert_eq!(build_ibm(IbmModelSpec::new(7)).unwrap().n(), 4);
    }

    #[test]
    fn casimir_limit_n2() {
        let e = spectrum(2, 0.0);
        assert!((e[0] + 3.0).abs() < 1e-14);
        assert!(e[1].abs() < 1e-14);
    }

    #[test]
    fn vibrational_limit_n10() {
        let e = spectrum(10, 1.0);
        for (m, x) in e.iter().enumerate() {
            // H₀ + V cancels B only up to rounding of the stored sum
            assert!((x - 2.0 * m as f64 / 10.0).abs() < 4.0 * f64::EPSILON, "m={m}");
        }
    }

    #[test]
    fn family_is_tridiagonal_and_noncommuting() {
        let f = build_ibm(IbmModelSpec::new(8)).unwrap();
        assert!(f.h0().is_tridiagonal());
        assert!(!f.is_commuting());
    }
}
