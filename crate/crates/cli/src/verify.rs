//! Invariant suite behind `cqpt verify`.

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::Failure;
use coulomb_qpt::ep::{assign_all, scan_and_refine, CensusOptions, Region};
use coulomb_qpt::line_charge::{f_jump, LineChargeModel};
use coulomb_qpt::linalg::SymMatrix;
use coulomb_qpt::model::{build_generic, build_ibm, fock_oracle_spectrum, IbmModelSpec, LinearFamily};
use coulomb_qpt::spectral::{compute_c, linspace, solve_slice, Derivatives, Method};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value and the bound it is held to.
    pub worst: f64,
    pub bound: f64,
}

fn check(name: &str, worst: f64, bound: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: worst < bound,
        worst,
        bound,
    }
}

pub fn random_family(rng: &mut ChaCha8Rng, n: usize) -> LinearFamily {
    let mut sym = || {
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        SymMatrix::Dense(a)
    };
    let h0 = sym();
    let v = sym();
    LinearFamily::new(h0, v, format!("random n={n}")).expect("random family is valid")
}

/// Largest distance from an IBM eigenvalue to an unused oracle eigenvalue.
fn submultiset_deviation(sub: &[f64], full: &[f64]) -> f64 {
    let mut used = vec![false; full.len()];
    let mut worst = 0.0_f64;
    for &e in sub {
        let best = (0..full.len())
            .filter(|&i| !used[i])
            .min_by(|&a, &b| (full[a] - e).abs().total_cmp(&(full[b] - e).abs()));
        match best {
            Some(i) => {
                used[i] = true;
                worst = worst.max((full[i] - e).abs());
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

fn fock_checks() -> Result<Vec<Check>, Failure> {
    let mut worst = 0.0_f64;
    let mut ground = 0.0_f64;
    let mut u5 = 0.0_f64;
    for nb in 2..=6u32 {
        let f = build_ibm(IbmModelSpec::new(nb))?;
        for l in linspace(0.0, 1.0, 21) {
            let s = solve_slice(&f, l, Derivatives::None, false)?;
            let full = fock_oracle_spectrum(nb, l)?;
            worst = worst.max(submultiset_deviation(&s.energies, &full));
        }
        let s0 = solve_slice(&f, 0.0, Derivatives::None, false)?;
        let nf = nb as f64;
        ground = ground.max((s0.energies[0] + nf * (nf + 4.0) / (nf * nf)).abs());
        let s1 = solve_slice(&f, 1.0, Derivatives::None, false)?;
        for (m, e) in s1.energies.iter().enumerate() {
            u5 = u5.max((e - 2.0 * m as f64 / nf).abs());
        }
    }
    Ok(vec![
        check("ibm_in_fock_oracle", worst, 1e-10),
        check("ibm_ground_state_o6", ground, 1e-12),
        check("ibm_u5_limit", u5, 4.0 * f64::EPSILON),
    ])
}

fn toy_check() -> Result<Check, Failure> {
    let f = build_generic("1 0\n0 -1", "0 1\n1 0")?;
    let grid = linspace(-2.0, 2.0, 201);
    let p = compute_c(&f, 0, &grid, Method::Analytic)?;
    let mut worst = 0.0_f64;
    for (j, &l) in grid.iter().enumerate() {
        let q = 1.0 + l * l;
        worst = worst
            .max((p.u[j] + (2.0 * q.sqrt()).ln()).abs())
            .max((p.f[j] - l / q).abs())
            .max((p.c[j] - (1.0 - l * l) / (q * q)).abs());
    }
    Ok(check("toy_closed_forms", worst, 1e-9))
}

fn derivative_checks(rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<Check>, Failure> {
    let mut sum_rule = 0.0_f64;
    let mut hf = 0.0_f64;
    let mut second = 0.0_f64;
    for _ in 0..count {
        let n = rng.gen_range(2..=20);
        let f = random_family(rng, n);
        let l: f64 = rng.gen_range(-1.0..1.0);
        let s = solve_slice(&f, l, Derivatives::Second, false)?;
        let (e, d1, d2) = (&s.energies, s.d1.as_ref().unwrap(), s.d2.as_ref().unwrap());
        // Σ_k E_k'' = 2 Σ_k Σ_{l≠k} |V_kl|²/(E_k − E_l): antisymmetric pairs cancel
        let total: f64 = d2.iter().sum();
        let scale = d2.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        sum_rule = sum_rule.max(total.abs() / scale);
        let eps = 1e-5 * s.span();
        let sp = solve_slice(&f, l + eps, Derivatives::None, false)?;
        let sm = solve_slice(&f, l - eps, Derivatives::None, false)?;
        let min_gap = e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        for k in 0..n {
            let fd1 = (sp.energies[k] - sm.energies[k]) / (2.0 * eps);
            hf = hf.max((d1[k] - fd1).abs());
            // skip crossings narrower than 10³·ε, where the stencil is unreliable
            if min_gap > 1e3 * eps {
                let fd2 = (sp.energies[k] - 2.0 * e[k] + sm.energies[k]) / (eps * eps);
                second = second.max((d2[k] - fd2).abs() / d2[k].abs().max(1.0));
            }
        }
    }
    Ok(vec![
        check("curvature_sum_rule", sum_rule, 1e-8),
        check("hellmann_feynman_vs_fd", hf, 1e-6),
        check("second_derivative_vs_fd", second, 1e-4),
    ])
}

fn census_check(rng: &mut ChaCha8Rng, count: usize) -> Result<Check, Failure> {
    let region = Region {
        re_min: -10.0,
        re_max: 10.0,
        im_max: 10.0,
    };
    let opts = CensusOptions {
        grid_density: 10.0,
        ..CensusOptions::default()
    };
    let mut missing = 0usize;
    for _ in 0..count {
        let n = rng.gen_range(3..=5);
        let f = random_family(rng, n);
        let mut c = scan_and_refine(&f, &region, &opts)?;
        assign_all(&f, &mut c, None)?;
        let mut lost = c.missing;
        if lost > 0 {
            // random pairs may place EPs outside the window; a wide coarse scan accounts for them
            let wide = Region {
                re_min: -200.0,
                re_max: 200.0,
                im_max: 200.0,
            };
            let far = scan_and_refine(
                &f,
                &wide,
                &CensusOptions {
                    grid_density: 2.0,
                    ..opts
                },
            )?;
            let extra = far
                .refined()
                .filter(|e| !region.contains(e.location, 0.0))
                .filter(|e| c.refined().all(|m| (m.location - e.location).norm() > 1e-6))
                .count();
            lost = lost.saturating_sub(extra);
        }
        missing += lost;
        // every refined EP joins two distinct sheets
        missing += c
            .refined()
            .filter(|e| !matches!(e.pair, Some((a, b)) if a != b && b < n))
            .count();
    }
    Ok(check("ep_census_count", missing as f64, 0.5))
}

fn line_checks() -> Result<Vec<Check>, Failure> {
    let mut norm = 0.0_f64;
    for p in [0.0, 0.5, 1.0, 2.0, 5.0] {
        norm = norm.max((LineChargeModel::new(p, 1.3)?.normalization()? - 1.0).abs());
    }
    let m = LineChargeModel::new(0.0, 2.0)?;
    let jump = (f_jump(&m, 1e-9)? - std::f64::consts::PI / 2.0).abs();
    Ok(vec![
        check("line_charge_normalization", norm, 1e-10),
        check("line_charge_flat_jump", jump, 1e-6),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run(cfg: &RunConfig, out: &mut OutDir) -> Result<(), Failure> {
    let seed = cfg.seed.unwrap_or(0);
    let vc = cfg.verify.clone().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = fock_checks()?;
    checks.push(toy_check()?);
    checks.extend(derivative_checks(&mut rng, vc.random_families.unwrap_or(20))?);
    checks.push(census_check(&mut rng, vc.census_families.unwrap_or(3))?);
    checks.extend(line_checks()?);
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        eprintln!("{} {} (worst {:.3e}, bound {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.worst, c.bound);
    }
    out.json("verify.json", &VerifyReport { seed, checks, passed })?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Numerical("invariant suite has failures".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submultiset() {
        assert_eq!(submultiset_deviation(&[1.0, 2.0], &[0.0, 1.0, 2.0]), 0.0);
        assert!(submultiset_deviation(&[1.0, 1.0], &[1.0, 2.0]) > 0.5);
        assert_eq!(submultiset_deviation(&[1.0, 1.0, 1.0], &[1.0, 1.0]), f64::INFINITY);
    }
}
