//! Symmetric matrix storage and thin wrappers over LAPACK eigensolvers.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{EigVals, Eigh, EigValsh, UPLO};
use num_complex::Complex64;

/// Real symmetric matrix, stored densely or as a tridiagonal band.
#[derive(Debug, Clone, PartialEq)]
pub enum SymMatrix {
    Dense(Array2<f64>),
    Tridiagonal { diag: Vec<f64>, off: Vec<f64> },
}

/// Failure reported by a LAPACK routine.
#[derive(Debug, Clone, PartialEq)]
pub struct LapackFailure {
    pub routine: &'static str,
    pub info: i32,
}

impl std::fmt::Display for LapackFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} returned info={}", self.routine, self.info)
    }
}

impl SymMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SymMatrix::Dense(a) => a.nrows(),
            SymMatrix::Tridiagonal { diag, .. } => diag.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            SymMatrix::Dense(a) => a[[i, j]],
            SymMatrix::Tridiagonal { diag, off } => {
                if i == j {
                    diag[i]
                } else if i + 1 == j {
                    off[i]
                } else if j + 1 == i {
                    off[j]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            SymMatrix::Dense(a) => a.clone(),
            SymMatrix::Tridiagonal { .. } => {
                let n = self.dim();
                Array2::from_shape_fn((n, n), |(i, j)| self.get(i, j))
            }
        }
    }

    pub fn is_tridiagonal(&self) -> bool {
        matches!(self, SymMatrix::Tridiagonal { .. })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        match self {
            SymMatrix::Dense(a) => a.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            SymMatrix::Tridiagonal { diag, off } => diag
                .iter()
                .chain(off.iter())
                .fold(0.0_f64, |m, x| m.max(x.abs())),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SymMatrix::Dense(a) => a.dot(&ndarray::ArrayView1::from(x)).to_vec(),
            SymMatrix::Tridiagonal { diag, off } => {
                let n = diag.len();
                (0..n)
                    .map(|i| {
                        let mut s = diag[i] * x[i];
                        if i > 0 {
                            s += off[i - 1] * x[i - 1];
                        }
                        if i + 1 < n {
                            s += off[i] * x[i + 1];
                        }
                        s
                    })
                    .collect()
            }
        }
    }

    /// `self + t * other`, keeping tridiagonal storage when both operands have it.
    pub fn add_scaled(&self, t: f64, other: &SymMatrix) -> SymMatrix {
        match (self, other) {
            (
                SymMatrix::Tridiagonal { diag: d0, off: o0 },
                SymMatrix::Tridiagonal { diag: d1, off: o1 },
            ) => SymMatrix::Tridiagonal {
                diag: d0.iter().zip(d1).map(|(a, b)| a + t * b).collect(),
                off: o0.iter().zip(o1).map(|(a, b)| a + t * b).collect(),
            },
            _ => SymMatrix::Dense(self.to_dense() + &(other.to_dense() * t)),
        }
    }

    /// Frobenius norm of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &SymMatrix) -> f64 {
        if self.is_tridiagonal() && other.is_tridiagonal() {
            let n = self.dim();
            let mut acc = 0.0;
            for i in 0..n {
                for j in i.saturating_sub(2)..(i + 3).min(n) {
                    let mut s = 0.0;
                    for m in i.saturating_sub(1)..(i + 2).min(n) {
                        s += self.get(i, m) * other.get(m, j) - other.get(i, m) * self.get(m, j);
                    }
                    acc += s * s;
                }
            }
            acc.sqrt()
        } else {
            let a = self.to_dense();
            let b = other.to_dense();
            let c = a.dot(&b) - b.dot(&a);
            c.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending (LAPACK `dsterf`).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, LapackFailure> {
    let n = diag.len() as i32;
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(diag.len().max(1), 0.0);
    let mut info = 0;
    unsafe {
        lapack_sys::dsterf_(&n, d.as_mut_ptr(), e.as_mut_ptr(), &mut info);
    }
    if info != 0 {
        return Err(LapackFailure {
            routine: "dsterf",
            info,
        });
    }
    Ok(d)
}

/// Eigenpairs of a symmetric tridiagonal matrix (LAPACK `dstevr`, MRRR).
/// Eigenvectors are the columns of the returned matrix.
pub fn tridiagonal_eigh(
    diag: &[f64],
    off: &[f64],
) -> Result<(Vec<f64>, Array2<f64>), LapackFailure> {
    let nu = diag.len();
    let n = nu as i32;
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.resize(nu, 0.0);
    let mut m = 0;
    let mut w = vec![0.0; nu];
    let mut z = vec![0.0; nu * nu];
    let mut isuppz = vec![0i32; 2 * nu];
    let lwork = (20 * n).max(1);
    let liwork = (10 * n).max(1);
    let mut work = vec![0.0; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    let mut info = 0;
    unsafe {
        lapack_sys::dstevr_(
            b"V".as_ptr() as *const _,
            b"A".as_ptr() as *const _,
            &n,
            d.as_mut_ptr(),
            e.as_mut_ptr(),
            &0.0,
            &0.0,
            &0,
            &0,
            &0.0,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &n,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 || m != n {
        return Err(LapackFailure {
            routine: "dstevr",
            info,
        });
    }
    // keep LAPACK's column-major layout so each eigenvector is contiguous
    let vecs = Array2::from_shape_vec((nu, nu).f(), z).expect("dstevr output has n² entries");
    Ok((w, vecs))
}

/// Dense symmetric eigenpairs, ascending.
pub fn dense_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), LapackFailure> {
    let (w, v) = a.eigh(UPLO::Lower).map_err(|_| LapackFailure {
        routine: "dsyevd",
        info: -1,
    })?;
    Ok((w.to_vec(), v))
}

/// Dense symmetric eigenvalues, ascending.
pub fn dense_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>, LapackFailure> {
    let w: Array1<f64> = a.eigvalsh(UPLO::Lower).map_err(|_| LapackFailure {
        routine: "dsyev",
        info: -1,
    })?;
    Ok(w.to_vec())
}

/// Eigenvalues of a general complex matrix. The 2x2 case uses the closed form.
pub fn complex_eigenvalues(a: &Array2<Complex64>) -> Result<Vec<Complex64>, LapackFailure> {
    if a.nrows() == 2 {
        let half_tr = (a[[0, 0]] + a[[1, 1]]) * 0.5;
        let half_diff = (a[[0, 0]] - a[[1, 1]]) * 0.5;
        let root = (half_diff * half_diff + a[[0, 1]] * a[[1, 0]]).sqrt();
        return Ok(vec![half_tr - root, half_tr + root]);
    }
    let w = a.eigvals().map_err(|_| LapackFailure {
        routine: "zgeev",
        info: -1,
    })?;
    Ok(w.to_vec())
}

/// Solve `(T - shift) z = rhs` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting. Exactly singular pivots are replaced by
/// a tiny multiple of the matrix scale, which is the inverse-iteration trick:
/// the caller projects out the null direction afterwards.
pub fn solve_shifted_tridiagonal(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let scale = diag
        .iter()
        .chain(off.iter())
        .fold(shift.abs(), |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON * 1e-3;
    // rows stored as (main, super1, super2) after pivoting
    let mut a: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut b: Vec<f64> = off.to_vec();
    b.push(0.0);
    let mut c = vec![0.0; n];
    let mut lower: Vec<f64> = off.to_vec();
    let mut y = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        let sub = lower[i];
        if sub.abs() > a[i].abs() {
            // swap rows i and i+1
            let (ai, bi, ci) = (a[i], b[i], c[i]);
            a[i] = sub;
            b[i] = a[i + 1];
            c[i] = b[i + 1];
            a[i + 1] = bi;
            b[i + 1] = ci;
            lower[i] = ai;
            y.swap(i, i + 1);
        }
        if a[i] == 0.0 {
            a[i] = tiny;
        }
        let f = lower[i] / a[i];
        a[i + 1] -= f * b[i];
        b[i + 1] -= f * c[i];
        y[i + 1] -= f * y[i];
    }
    if n > 0 && a[n - 1] == 0.0 {
        a[n - 1] = tiny;
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= b[i] * z[i + 1];
        }
        if i + 2 < n {
            s -= c[i] * z[i + 2];
        }
        z[i] = s / a[i];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_solve_matches_dense() {
        let diag = [2.0, -1.0, 0.5, 3.0, 0.0];
        let off = [1.0, 0.3, -2.0, 0.7];
        let rhs = [1.0, 2.0, -1.0, 0.5, 0.25];
        let shift = 0.4;
        let z = solve_shifted_tridiagonal(&diag, &off, shift, &rhs);
        let t = SymMatrix::Tridiagonal {
            diag: diag.to_vec(),
            off: off.to_vec(),
        };
        let tz = t.matvec(&z);
        for i in 0..5 {
            assert!((tz[i] - shift * z[i] - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_paths_agree_with_dense() {
        let diag = vec![1.0, 2.0, -0.5, 0.25];
        let off = vec![0.5, -1.0, 0.75];
        let t = SymMatrix::Tridiagonal {
            diag: diag.clone(),
            off: off.clone(),
        };
        let dense = dense_eigenvalues(&t.to_dense()).unwrap();
        let vals = tridiagonal_eigenvalues(&diag, &off).unwrap();
        let (w, v) = tridiagonal_eigh(&diag, &off).unwrap();
        for k in 0..4 {
            assert!((dense[k] - vals[k]).abs() < 1e-13);
            assert!((dense[k] - w[k]).abs() < 1e-13);
            let col: Vec<f64> = v.column(k).to_vec();
            let tv = t.matvec(&col);
            for i in 0..4 {
                assert!((tv[i] - w[k] * col[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complex_closed_form_2x2() {
        let i = Complex64::new(0.0, 1.0);
        let a = ndarray::arr2(&[[Complex64::new(1.0, 0.0), i], [i, Complex64::new(-1.0, 0.0)]]);
        let w = complex_eigenvalues(&a).unwrap();
        assert!(w.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn commutator_of_tridiagonals() {
        let a = SymMatrix::Tridiagonal {
            diag: vec![1.0, 2.0, 3.0],
            off: vec![0.5, 0.25],
        };
        let b = SymMatrix::Tridiagonal {
            diag: vec![0.0, 1.0, 0.0],
            off: vec![1.0, -1.0],
        };
        let dense = SymMatrix::Dense(a.to_dense()).commutator_norm(&SymMatrix::Dense(b.to_dense()));
        assert!((a.commutator_norm(&b) - dense).abs() < 1e-14);
        assert!(a.commutator_norm(&a) < 1e-15);
    }
}
