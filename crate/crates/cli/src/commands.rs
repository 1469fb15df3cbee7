use crate::config::{
    ApproachConfig, Fig2Config, Fig3Config, GridConfig, ModelConfig, RunConfig, ScalingConfig,
};
use crate::output::{header, num, ratio_tag, OutDir};
use crate::{Failure, Study};
use coulomb_qpt::ep::{
    assign_all, gap_grid, scan_and_refine, verify_factorization, EpRecord, EpStatus, Region,
};
use coulomb_qpt::line_charge::{
    classify_divergence, f_jump, point_charge_c, Classification, LineChargeModel,
};
use coulomb_qpt::model::{build_generic, build_ibm, IbmModelSpec, LinearFamily};
use coulomb_qpt::scaling::{
    level_for_ratio, locate_peaks, run_ep_approach, run_fig2, run_fig3, LevelPeak, ScanPolicy,
};
use coulomb_qpt::spectral::{
    compute_c, compute_levels, detect_peak, estimate_q, solve_slice, CoulombProfile, Derivatives,
    LevelSampler, Method, PeakRecord, QReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub fn load_model(cfg: &RunConfig) -> Result<LinearFamily, Failure> {
    match &cfg.model {
        Some(ModelConfig::Ibm { boson_number }) => Ok(build_ibm(IbmModelSpec::new(*boson_number))?),
        Some(ModelConfig::Generic { h0, v }) => {
            let read = |p: &std::path::Path| {
                std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
            };
            Ok(build_generic(&read(h0)?, &read(v)?)?)
        }
        None => Err(Failure::Config("no model given (use --model or the config \"model\" key)".into())),
    }
}

fn grid_or(cfg: &RunConfig, default: GridConfig) -> Vec<f64> {
    cfg.grid.unwrap_or(default).values()
}

const DEFAULT_GRID: GridConfig = GridConfig {
    start: 0.0,
    end: 1.0,
    points: 401,
};

pub fn spectrum(cfg: &RunConfig, out: &mut OutDir) -> Result<(), Failure> {
    let family = load_model(cfg)?;
    let grid = grid_or(
        cfg,
        GridConfig {
            points: 101,
            ..DEFAULT_GRID
        },
    );
    coulomb_qpt::spectral::check_grid(&grid)?;
    let rows = grid
        .par_iter()
        .map(|&l| solve_slice(&family, l, Derivatives::None, false))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cols = vec!["lambda".to_string()];
    cols.extend((0..family.n()).map(|k| format!("E_{k}")));
    out.csv(
        "spectrum.csv",
        &cols,
        rows.iter().map(|s| {
            std::iter::once(num(s.lambda))
                .chain(s.energies.iter().map(|&e| num(e)))
                .collect()
        }),
    )?;
    Ok(())
}

fn profile_rows(p: &CoulombProfile) -> Vec<Vec<String>> {
    (0..p.grid.len())
        .map(|j| {
            vec![
                num(p.grid[j]),
                num(p.u[j]),
                p.f.get(j).map_or_else(String::new, |&v| num(v)),
                p.c.get(j).map_or_else(String::new, |&v| num(v)),
            ]
        })
        .collect()
}

fn write_profile(out: &mut OutDir, name: &str, p: &CoulombProfile) -> Result<(), Failure> {
    out.csv(name, &header(&["lambda", "U", "F", "C"]), profile_rows(p))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOutcome {
    pub level: usize,
    pub x: f64,
    pub peak: Option<PeakRecord>,
    pub resolved: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyReport {
    pub label: String,
    pub method: Method,
    pub levels: Vec<LevelOutcome>,
    pub q_report: Option<QReport>,
}

pub fn classify(cfg: &RunConfig, out: &mut OutDir) -> Result<(), Failure> {
    let family = load_model(cfg)?;
    let grid = grid_or(cfg, DEFAULT_GRID);
    let levels: Vec<(usize, f64)> = match (&cfg.levels, &cfg.x_targets) {
        (Some(l), _) => l.iter().map(|&k| (k, k as f64 / family.n() as f64)).collect(),
        (None, Some(xs)) => xs
            .iter()
            .map(|&x| Ok((level_for_ratio(x, family.n())?, x)))
            .collect::<Result<_, coulomb_qpt::Error>>()?,
        (None, None) => Vec::new(),
    };
    if levels.is_empty() {
        return Err(Failure::Config("level list is empty (use --levels or --x)".into()));
    }
    let method = cfg.method.unwrap_or(Method::Analytic);
    let policy = cfg.refine.unwrap_or_default();
    let ks: Vec<usize> = levels.iter().map(|l| l.0).collect();
    let profiles = compute_levels(&family, &ks, &grid, method, true)?;
    let mut outcomes = Vec::new();
    for (mut p, &(k, x)) in profiles.into_iter().zip(&levels) {
        p.x = x;
        write_profile(out, &format!("profile_k{k}.csv"), &p)?;
        let sampler = LevelSampler {
            family: &family,
            level: k,
            method,
        };
        match detect_peak(&p, &sampler, &policy) {
            Ok(s) => outcomes.push(LevelOutcome {
                level: k,
                x,
                resolved: s.resolved,
                peak: Some(PeakRecord::from(&s)),
                error: None,
            }),
            Err(e @ (coulomb_qpt::Error::NoPeak(_) | coulomb_qpt::Error::PeakTruncated { .. })) => {
                outcomes.push(LevelOutcome {
                    level: k,
                    x,
                    resolved: false,
                    peak: None,
                    error: Some(e.to_string()),
                })
            }
            Err(e) => return Err(e.into()),
        }
    }
    let q_report = match &cfg.q_study {
        Some(q) => {
            let scan = ScanPolicy {
                refine: policy,
                ..ScanPolicy::default()
            };
            let pts = q
                .n_list
                .par_iter()
                .map(|&nb| {
                    let f = build_ibm(IbmModelSpec::new(nb))?;
                    let k = level_for_ratio(q.x, f.n())?;
                    let p = locate_peaks(&f, &[(q.x, k)], Some(nb), &scan)?;
                    Ok((nb, p[0].peak.q_int))
                })
                .collect::<Result<Vec<_>, coulomb_qpt::Error>>()?;
            Some(estimate_q(&pts)?)
        }
        None => None,
    };
    let unresolved = outcomes.iter().filter(|o| !o.resolved).count();
    out.json(
        "classify.json",
        &ClassifyReport {
            label: family.label().to_string(),
            method,
            levels: outcomes,
            q_report,
        },
    )?;
    if unresolved > 0 {
        return Err(Failure::Incomplete(format!("{unresolved} level(s) without a resolved peak")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusFile {
    pub label: String,
    pub n: usize,
    pub region: Region,
    pub complete: bool,
    pub expected: usize,
    pub missing: usize,
    pub grid_density: f64,
    pub refinements: usize,
    pub eps: Vec<EpRecord>,
}

pub fn eps(cfg: &RunConfig, out: &mut OutDir) -> Result<(), Failure> {
    let family = load_model(cfg)?;
    let region = cfg.region.unwrap_or(Region::IBM_DEFAULT);
    let options = cfg.census.unwrap_or_default();
    let mut census = scan_and_refine(&family, &region, &options)?;
    assign_all(&family, &mut census, None)?;
    let g = gap_grid(&family, &region, options.grid_density)?;
    out.csv(
        "gap_grid.csv",
        &header(&["re", "im", "g"]),
        g.im.iter().enumerate().flat_map(|(j, &im)| {
            let g = &g;
            g.re.iter()
                .enumerate()
                .map(move |(i, &re)| vec![num(re), num(im), num(g.g[j * g.re.len() + i])])
        }),
    )?;
    out.json(
        "census.json",
        &CensusFile {
            label: census.label.clone(),
            n: census.n,
            region,
            complete: census.complete,
            expected: census.expected,
            missing: census.missing,
            grid_density: census.grid_density,
            refinements: census.refinements,
            eps: census.eps.iter().map(EpRecord::from).collect(),
        },
    )?;
    let levels = cfg.factorization_levels.clone().unwrap_or_else(|| vec![0]);
    let fgrid = grid_or(
        cfg,
        GridConfig {
            start: region.re_min,
            end: region.re_max,
            points: 101,
        },
    );
    let reports = levels
        .iter()
        .map(|&k| verify_factorization(&family, &census, k, &fgrid))
        .collect::<Result<Vec<_>, _>>()?;
    out.json("factorization.json", &reports)?;
    let suspect = census.eps.iter().filter(|e| e.status == EpStatus::Suspect).count();
    if !census.complete {
        return Err(Failure::Incomplete(format!(
            "census found {} of {} exceptional points",
            census.expected - census.missing,
            census.expected
        )));
    }
    if suspect > 0 {
        return Err(Failure::Incomplete(format!("{suspect} exceptional point(s) with ambiguous sheets")));
    }
    Ok(())
}

pub fn apply_scaling_flags(
    cfg: &mut RunConfig,
    study: &[Study],
    n_list: &[u32],
    x: &[f64],
    boson_number: Option<u32>,
) {
    let mut s = cfg.scaling.clone().unwrap_or_default();
    let xs = (!x.is_empty()).then(|| x.to_vec());
    let ns = (!n_list.is_empty()).then(|| n_list.to_vec());
    if !study.is_empty() {
        let keep = |st: Study| study.contains(&st);
        if keep(Study::Fig2) {
            let mut f = s.fig2.take().unwrap_or(Fig2Config {
                boson_number: None,
                x_targets: None,
            });
            f.boson_number = boson_number.or(f.boson_number);
            f.x_targets = xs.clone().or(f.x_targets);
            s.fig2 = Some(f);
        } else {
            s.fig2 = None;
        }
        if keep(Study::Fig3) {
            let mut f = s.fig3.take().unwrap_or(Fig3Config {
                n_list: None,
                x_targets: None,
            });
            f.n_list = ns.clone().or(f.n_list);
            f.x_targets = xs.clone().or(f.x_targets);
            s.fig3 = Some(f);
        } else {
            s.fig3 = None;
        }
        if keep(Study::EpApproach) {
            let mut f = s.ep_approach.take().unwrap_or(ApproachConfig { n_list: None });
            f.n_list = ns.or(f.n_list);
            s.ep_approach = Some(f);
        } else {
            s.ep_approach = None;
        }
    } else {
        if let Some(f) = s.fig2.as_mut() {
            f.boson_number = boson_number.or(f.boson_number);
            f.x_targets = xs.clone().or(f.x_targets.take());
        }
        if let Some(f) = s.fig3.as_mut() {
            f.n_list = ns.clone().or(f.n_list.take());
            f.x_targets = xs.or(f.x_targets.take());
        }
        if let Some(f) = s.ep_approach.as_mut() {
            f.n_list = ns.or(f.n_list.take());
        }
    }
    cfg.scaling = Some(s);
}

fn peak_files(out: &mut OutDir, p: &LevelPeak) -> Result<(), Failure> {
    let tag = format!("N{}_x{}", p.boson_number.unwrap_or(0), ratio_tag(p.x));
    if let Some(c) = &p.coarse {
        write_profile(out, &format!("profile_{tag}.csv"), c)?;
    }
    if let Some(w) = &p.window {
        write_profile(out, &format!("peak_{tag}.csv"), w)?;
    }
    Ok(())
}

fn require_x(cfg: &RunConfig, own: &Option<Vec<f64>>, study: &str) -> Result<Vec<f64>, Failure> {
    own.clone()
        .or_else(|| cfg.x_targets.clone())
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Failure::Config(format!("{study}: missing x_targets")))
}

pub fn scaling(cfg: &RunConfig, out: &mut OutDir) -> Result<(), Failure> {
    let s: ScalingConfig = cfg.scaling.clone().unwrap_or_default();
    if s.fig2.is_none() && s.fig3.is_none() && s.ep_approach.is_none() {
        return Err(Failure::Config(
            "no study selected (use --study or the scaling section of the config)".into(),
        ));
    }
    let scan = s.scan.unwrap_or_default();
    let mut incomplete = Vec::new();
    if let Some(f2) = &s.fig2 {
        let x = require_x(cfg, &f2.x_targets, "fig2")?;
        let nb = f2
            .boson_number
            .ok_or_else(|| Failure::Config("fig2: missing N".into()))?;
        let r = run_fig2(nb, &x, &scan)?;
        for p in &r.peaks {
            peak_files(out, p)?;
        }
        out.json("fig2.json", &r)?;
        if r.peaks.iter().any(|p| !p.peak.resolved) {
            incomplete.push("fig2 has unresolved peaks".to_string());
        }
    }
    if let Some(f3) = &s.fig3 {
        let x = require_x(cfg, &f3.x_targets, "fig3")?;
        let ns = f3
            .n_list
            .clone()
            .ok_or_else(|| Failure::Config("fig3: missing N_list".into()))?;
        let st = run_fig3(&ns, &x, &scan)?;
        for p in &st.points {
            peak_files(out, p)?;
        }
        for &xv in &st.x_targets {
            out.csv(
                &format!("fits_x{}.csv", ratio_tag(xv)),
                &header(&["observable", "slope", "intercept", "window", "max_residual"]),
                st.fits.iter().filter(|f| f.x == xv).map(|f| {
                    vec![
                        f.observable.to_string(),
                        num(f.slope),
                        num(f.intercept),
                        format!("{}-{}", f.window.0, f.window.1),
                        num(f.max_residual),
                    ]
                }),
            )?;
        }
        out.json("fig3.json", &st)?;
        if !st.dropped.is_empty() {
            incomplete.push(format!("fig3 dropped {} unresolved point(s)", st.dropped.len()));
        }
    }
    if let Some(a) = &s.ep_approach {
        let ns = a
            .n_list
            .clone()
            .ok_or_else(|| Failure::Config("ep_approach: missing N_list".into()))?;
        let region = cfg.region.unwrap_or(Region::IBM_DEFAULT);
        let r = run_ep_approach(&ns, &region, &cfg.census.unwrap_or_default())?;
        for p in &r.points {
            eprintln!("ep census N={} took {:.1} s", p.boson_number, p.seconds);
        }
        out.json("ep_approach.json", &r)?;
        if r.points.iter().any(|p| !p.complete) {
            incomplete.push("ep_approach has incomplete censuses".to_string());
        }
    }
    if incomplete.is_empty() {
        Ok(())
    } else {
        Err(Failure::Incomplete(incomplete.join("; ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineModelFile {
    pub classifications: Vec<Classification>,
    /// F(δ) − F(−δ) at δ = 10⁻⁹ μ_max for each p.
    pub jumps: Vec<(f64, f64)>,
    pub single_charge_max_deviation: f64,
}

pub fn linemodel(cfg: &RunConfig, out: &mut OutDir) -> Result<(), Failure> {
    let lc = cfg.linemodel.clone().unwrap_or_default();
    let p_list = lc.p_list.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 5.0]);
    if p_list.is_empty() {
        return Err(Failure::Config("p list is empty".into()));
    }
    let mu_max = lc.mu_max.unwrap_or(1.0);
    let models = p_list
        .iter()
        .map(|&p| LineChargeModel::new(p, mu_max))
        .collect::<Result<Vec<_>, _>>()?;
    let classifications = models
        .par_iter()
        .map(classify_divergence)
        .collect::<Result<Vec<_>, _>>()?;
    let jumps = models
        .iter()
        .map(|m| Ok((m.p, f_jump(m, 1e-9 * mu_max)?)))
        .collect::<Result<Vec<_>, coulomb_qpt::Error>>()?;
    let mut rows = Vec::new();
    for c in &classifications {
        for v in &c.verdicts {
            for pr in &v.probes {
                rows.push(vec![num(c.p), v.quantity.to_string(), num(pr.scale), num(pr.value)]);
            }
        }
    }
    out.csv("linemodel.csv", &header(&["p", "quantity", "probe_scale", "value"]), rows)?;

    // one charge at λ₀ + iμ: the spectral C of a 2×2 family against the kernel
    let mu = lc.single_charge_mu.unwrap_or(0.5);
    if !(mu > 0.0) {
        return Err(Failure::Config(format!("single_charge_mu must be positive, got {mu}")));
    }
    let lambda0 = 0.5;
    let family = build_generic(
        &format!("{} {mu}\n{mu} {}", -lambda0, lambda0),
        "1 0\n0 -1",
    )?;
    let grid = coulomb_qpt::spectral::linspace(lambda0 - 4.0 * mu, lambda0 + 4.0 * mu, 201);
    let prof = compute_c(&family, 0, &grid, Method::Analytic)?;
    let mut max_dev = 0.0_f64;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&prof.c)
        .map(|(&l, &c)| {
            let k = point_charge_c(mu, l - lambda0);
            max_dev = max_dev.max((c - k).abs());
            vec![num(l - lambda0), num(k), num(c), num((c - k).abs())]
        })
        .collect();
    out.csv(
        "single_charge.csv",
        &header(&["delta", "c_kernel", "c_spectral", "abs_diff"]),
        rows,
    )?;
    out.json(
        "linemodel.json",
        &LineModelFile {
            classifications,
            jumps,
            single_charge_max_deviation: max_dev,
        },
    )?;
    Ok(())
}
