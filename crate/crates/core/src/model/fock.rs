//! Full Fock-space construction of the boson Hamiltonian over the six modes
//! s, d₋₂..d₂, without any subspace restriction. Used only as an oracle.

use crate::error::{Error, Result};
use crate::linalg::dense_eigenvalues;
use ndarray::Array2;
use std::collections::HashMap;

pub const FOCK_ORACLE_MAX_N: u32 = 6;

const MODES: usize = 6;
const S: usize = 0;

type Occupation = [u8; MODES];

/// Mode index of d_m, m ∈ −2..=2.
fn d(m: i32) -> usize {
    (m + 3) as usize
}

fn sign(m: i32) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// C(N+5, 5).
pub fn fock_dimension(n: u32) -> usize {
    let n = n as usize;
    (1..=5).fold(1usize, |acc, k| acc * (n + k) / k)
}

fn basis(n: u32) -> Vec<Occupation> {
    fn rec(mode: usize, left: u8, cur: &mut Occupation, out: &mut Vec<Occupation>) {
        if mode == MODES - 1 {
            cur[mode] = left;
            out.push(*cur);
            return;
        }
        for k in (0..=left).rev() {
            cur[mode] = k;
            rec(mode + 1, left - k, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, n as u8, &mut [0; MODES], &mut out);
    out
}

type Ket = Vec<(f64, Occupation)>;

fn create(mode: usize, ket: &Ket) -> Ket {
    ket.iter()
        .map(|&(c, mut occ)| {
            let k = occ[mode] as f64;
            occ[mode] += 1;
            (c * (k + 1.0).sqrt(), occ)
        })
        .collect()
}

fn annihilate(mode: usize, ket: &Ket) -> Ket {
    ket.iter()
        .filter(|(_, occ)| occ[mode] > 0)
        .map(|&(c, mut occ)| {
            let k = occ[mode] as f64;
            occ[mode] -= 1;
            (c * k.sqrt(), occ)
        })
        .collect()
}

/// Q_m = d†_m s + (−)^m s† d_{−m}.
fn quadrupole(m: i32, ket: &Ket) -> Ket {
    let mut out = create(d(m), &annihilate(S, ket));
    let sg = sign(m);
    out.extend(
        create(S, &annihilate(d(-m), ket))
            .into_iter()
            .map(|(c, o)| (sg * c, o)),
    );
    out
}

/// Σ_m (−)^m Q_m Q_{−m}, applied as written (no normal ordering).
fn q_dot_q(ket: &Ket) -> Ket {
    let mut out = Ket::new();
    for m in -2..=2 {
        let sg = sign(m);
        out.extend(
            quadrupole(m, &quadrupole(-m, ket))
                .into_iter()
                .map(|(c, o)| (sg * c, o)),
        );
    }
    out
}

/// All eigenvalues of λ n_d/N − (1−λ)/N² Q·Q in the full N-boson space, ascending.
pub fn fock_oracle_spectrum(n: u32, lambda: f64) -> Result<Vec<f64>> {
    if n > FOCK_ORACLE_MAX_N {
        return Err(Error::OracleCeiling {
            n,
            max: FOCK_ORACLE_MAX_N,
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("boson number must be at least 1".into()));
    }
    let states = basis(n);
    let index: HashMap<Occupation, usize> =
        states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let dim = states.len();
    let big_n = n as f64;
    let mut h = Array2::<f64>::zeros((dim, dim));
    for (col, occ) in states.iter().enumerate() {
        let nd: u32 = occ[1..].iter().map(|&k| k as u32).sum();
        h[[col, col]] += lambda * nd as f64 / big_n;
        for (c, out) in q_dot_q(&vec![(1.0, *occ)]) {
            h[[index[&out], col]] -= (1.0 - lambda) * c / (big_n * big_n);
        }
    }
    let asym = h
        .indexed_iter()
        .fold(0.0_f64, |m, ((i, j), x)| m.max((x - h[[j, i]]).abs()));
    if asym > 1e-13 {
        return Err(Error::Eigensolver {
            lambda: lambda.to_string(),
            n: dim,
            detail: format!("oracle matrix not symmetric (deviation {asym:.2e})"),
        });
    }
    dense_eigenvalues(&h).map_err(|e| Error::Eigensolver {
        lambda: lambda.to_string(),
        n: dim,
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(fock_dimension(1), 6);
        assert_eq!(fock_dimension(2), 21);
        assert_eq!(fock_dimension(6), 462);
        for n in 1..=6 {
            assert_eq!(basis(n).len(), fock_dimension(n));
        }
    }

    #[test]
    fn ceiling() {
        assert!(matches!(
            fock_oracle_spectrum(7, 0.5).unwrap_err(),
            Error::OracleCeiling { n: 7, max: 6 }
        ));
    }

    #[test]
    fn n2_limits() {
        // n_d/N: one state with n_d=0, fifteen with n_d=2 (pairs of 5 modes), five with n_d=1
        let e = fock_oracle_spectrum(2, 1.0).unwrap();
        assert_eq!(e.iter().filter(|x| x.abs() < 1e-14).count(), 1);
        assert_eq!(e.iter().filter(|x| (*x - 1.0).abs() < 1e-14).count(), 15);
        let e = fock_oracle_spectrum(2, 0.0).unwrap();
        assert!((e[0] + 3.0).abs() < 1e-13);
        assert!(e.iter().any(|x| x.abs() < 1e-13));
    }
}
