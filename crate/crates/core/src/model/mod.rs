//! Linear Hamiltonian families H(λ) = H₀ + λV and their builders.

mod fock;
mod ibm;
mod text;

pub use fock::{fock_dimension, fock_oracle_spectrum, FOCK_ORACLE_MAX_N};
pub use ibm::{build_ibm, IbmModelSpec};
pub use text::parse_matrix;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative symmetry deviation accepted (and averaged away) by [`build_generic`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Storage {
    Dense,
    Tridiagonal,
}

/// Matrix pair (H₀, V) with the scale constant Ω = n − 1.
#[derive(Debug, Clone)]
pub struct LinearFamily {
    h0: SymMatrix,
    v: SymMatrix,
    label: String,
    commuting: bool,
}

impl LinearFamily {
    /// Both matrices must share dimension n ≥ 2 and storage kind.
    pub fn new(h0: SymMatrix, v: SymMatrix, label: impl Into<String>) -> Result<Self> {
        let n = h0.dim();
        if n != v.dim() {
            return Err(Error::DimensionMismatch { h0: n, v: v.dim() });
        }
        if n < 2 {
            return Err(Error::DimensionTooSmall { n });
        }
        let (h0, v) = match (h0.is_tridiagonal(), v.is_tridiagonal()) {
            (true, false) => (SymMatrix::Dense(h0.to_dense()), v),
            (false, true) => (h0, SymMatrix::Dense(v.to_dense())),
            _ => (h0, v),
        };
        let scale = h0.max_abs().max(v.max_abs()).max(f64::MIN_POSITIVE);
        let commuting = h0.commutator_norm(&v) <= 1e-14 * scale * scale * n as f64;
        Ok(Self {
            h0,
            v,
            label: label.into(),
            commuting,
        })
    }

    pub fn n(&self) -> usize {
        self.h0.dim()
    }

    /// Ω = n − 1.
    pub fn omega(&self) -> usize {
        self.n() - 1
    }

    pub fn storage(&self) -> Storage {
        if self.h0.is_tridiagonal() {
            Storage::Tridiagonal
        } else {
            Storage::Dense
        }
    }

    pub fn h0(&self) -> &SymMatrix {
        &self.h0
    }

    pub fn v(&self) -> &SymMatrix {
        &self.v
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Warning flag: [H₀, V] = 0, so levels never repel.
    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    /// H(λ) for real λ.
    pub fn at(&self, lambda: f64) -> SymMatrix {
        self.h0.add_scaled(lambda, &self.v)
    }

    /// H(Λ) for complex Λ as a dense complex symmetric matrix.
    pub fn complex_at(&self, lambda: Complex64) -> Array2<Complex64> {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::from(self.h0.get(i, j)) + lambda * self.v.get(i, j)
        })
    }
}

/// Build a family from two matrix texts (see [`parse_matrix`] for the formats).
pub fn build_generic(h0_source: &str, v_source: &str) -> Result<LinearFamily> {
    let h0 = symmetrized(parse_matrix(h0_source)?, "h0")?;
    let v = symmetrized(parse_matrix(v_source)?, "v")?;
    if h0.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch {
            h0: h0.nrows(),
            v: v.nrows(),
        });
    }
    let (h0, v) = if is_tridiagonal(&h0) && is_tridiagonal(&v) {
        (to_tridiagonal(&h0), to_tridiagonal(&v))
    } else {
        (SymMatrix::Dense(h0), SymMatrix::Dense(v))
    };
    LinearFamily::new(h0, v, "generic")
}

fn symmetrized(a: Array2<f64>, which: &'static str) -> Result<Array2<f64>> {
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let n = a.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            dev = dev.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if dev == 0.0 {
        return Ok(a);
    }
    let rel = dev / scale;
    if rel > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric {
            which,
            deviation: rel,
            tolerance: SYMMETRY_TOLERANCE,
        });
    }
    let at = a.t().to_owned();
    Ok((a + at) * 0.5)
}

fn is_tridiagonal(a: &Array2<f64>) -> bool {
    a.indexed_iter()
        .all(|((i, j), x)| i.abs_diff(j) <= 1 || *x == 0.0)
}

fn to_tridiagonal(a: &Array2<f64>) -> SymMatrix {
    let n = a.nrows();
    SymMatrix::Tridiagonal {
        diag: (0..n).map(|i| a[[i, i]]).collect(),
        off: (0..n - 1).map(|i| a[[i, i + 1]]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_family() {
        let f = build_generic("1 0\n0 -1\n", "0 1\n1 0\n").unwrap();
        assert_eq!(f.n(), 2);
        assert_eq!(f.omega(), 1);
        assert!(!f.is_commuting());
        // a 2x2 pair is trivially tridiagonal
        assert_eq!(f.storage(), Storage::Tridiagonal);
    }

    #[test]
    fn commuting_pair_is_flagged() {
        let f = build_generic("1 2\n2 3", "1 2\n2 3").unwrap();
        assert!(f.is_commuting());
    }

    #[test]
    fn dense_storage_for_full_matrices() {
        let f = build_generic("1 2 3\n2 0 1\n3 1 4", "0 1 1\n1 0 1\n1 1 0").unwrap();
        assert_eq!(f.storage(), Storage::Dense);
        assert_eq!(f.omega(), 2);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = build_generic("1 2\n2.1 3", "0 1\n1 0").unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { which: "h0", .. }));
    }

    #[test]
    fn tiny_asymmetry_is_averaged() {
        let f = build_generic("1 2\n2.000000000000001 3", "0 1\n1 0").unwrap();
        assert_eq!(f.h0().get(0, 1), f.h0().get(1, 0));
    }

    #[test]
    fn mismatched_dimensions() {
        let err = build_generic("1 0\n0 1", "1 0 0\n0 1 0\n0 0 1").unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { h0: 2, v: 3 }));
    }

    #[test]
    fn one_by_one_rejected() {
        assert!(matches!(
            build_generic("1", "2").unwrap_err(),
            Error::DimensionTooSmall { n: 1 }
        ));
    }
}
