use crate::error::Result;
use crate::linalg::SymMatrix;
use crate::model::LinearFamily;

/// Two levels ∓(λ − ½) coupled by g = 1/N, plus N spectator levels in (1, 2]
/// that do not move with λ. The pair's avoided crossing at λ = ½ sharpens as
/// 1/N while Ω grows as N, so the half-maximum area of C_0 stays finite.
pub fn first_order_benchmark(boson_number: u32) -> Result<LinearFamily> {
    let nb = boson_number.max(1) as usize;
    let g = 1.0 / nb as f64;
    let mut d0 = vec![-0.5, 0.5];
    let mut dv = vec![1.0, -1.0];
    for l in 1..=nb {
        d0.push(1.0 + l as f64 / nb as f64);
        dv.push(0.0);
    }
    let mut off = vec![0.0; d0.len() - 1];
    off[0] = g;
    let h0 = SymMatrix::Tridiagonal {
        diag: d0,
        off,
    };
    let v = SymMatrix::Tridiagonal {
        off: vec![0.0; dv.len() - 1],
        diag: dv,
    };
    LinearFamily::new(h0, v, format!("first-order benchmark N={nb}"))
}
