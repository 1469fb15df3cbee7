mod commands;
mod config;
mod output;
mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use config::{GridConfig, ModelConfig, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Coulomb-analogy diagnostics for linear Hamiltonian families.
#[derive(Debug, Parser)]
#[command(name = "cqpt", version)]
struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelKind>,
    /// IBM boson number N.
    #[arg(long, global = true)]
    boson_number: Option<u32>,
    /// Matrix file for H0 (generic model).
    #[arg(long, global = true)]
    h0: Option<PathBuf>,
    /// Matrix file for V (generic model).
    #[arg(long, global = true)]
    v: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Generic,
    Ibm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Fig2,
    Fig3,
    EpApproach,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Level dynamics E_k(λ) on a grid.
    Spectrum {
        /// start:end:points
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<GridConfig>,
    },
    /// U, F, C profiles, peak summaries and the Q trend.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<GridConfig>,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
        /// Excitation ratios x = k/n, used when no levels are given.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Exceptional-point census, sheet labels and the factorization check.
    Eps {
        /// re_min:re_max:im_max
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        /// Scan points per unit length.
        #[arg(long)]
        density: Option<f64>,
        /// Levels whose factorization is checked.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<GridConfig>,
    },
    /// Finite-size studies on the IBM family.
    Scaling {
        #[arg(long, value_enum, value_delimiter = ',')]
        study: Vec<Study>,
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Divergence classification of the power-law line charge.
    Linemodel {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Vec<f64>,
        #[arg(long)]
        mu_max: Option<f64>,
    },
    /// Run the invariant suite.
    Verify,
}

/// Outcome classes mapped to exit codes 2, 3 and 4.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Incomplete(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Incomplete(_) => 4,
        }
    }
}

impl From<coulomb_qpt::Error> for Failure {
    fn from(e: coulomb_qpt::Error) -> Self {
        use coulomb_qpt::Error as E;
        match e {
            E::Parse { .. }
            | E::NotSquare { .. }
            | E::DimensionMismatch { .. }
            | E::NotSymmetric { .. }
            | E::DimensionTooSmall { .. }
            | E::OracleCeiling { .. }
            | E::CensusCeiling { .. }
            | E::InvalidGrid(_)
            | E::InvalidArgument(_)
            | E::InsufficientSpan(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

fn merged_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let kind = cli.model.or(match &cfg.model {
        Some(ModelConfig::Ibm { .. }) => Some(ModelKind::Ibm),
        Some(ModelConfig::Generic { .. }) => Some(ModelKind::Generic),
        None => None,
    });
    match kind {
        Some(ModelKind::Ibm) => {
            let prev = match &cfg.model {
                Some(ModelConfig::Ibm { boson_number }) => Some(*boson_number),
                _ => None,
            };
            if let Some(n) = cli.boson_number.or(prev) {
                cfg.model = Some(ModelConfig::Ibm { boson_number: n });
            } else {
                return Err(Failure::Config("ibm model needs --boson-number".into()));
            }
        }
        Some(ModelKind::Generic) => {
            let (ph0, pv) = match &cfg.model {
                Some(ModelConfig::Generic { h0, v }) => (Some(h0.clone()), Some(v.clone())),
                _ => (None, None),
            };
            match (cli.h0.clone().or(ph0), cli.v.clone().or(pv)) {
                (Some(h0), Some(v)) => cfg.model = Some(ModelConfig::Generic { h0, v }),
                _ => return Err(Failure::Config("generic model needs --h0 and --v".into())),
            }
        }
        None => {}
    }
    match &cli.command {
        Command::Spectrum { grid } => {
            if grid.is_some() {
                cfg.grid = *grid;
            }
        }
        Command::Classify {
            grid,
            levels,
            x,
            method,
        } => {
            if grid.is_some() {
                cfg.grid = *grid;
            }
            if !levels.is_empty() {
                cfg.levels = Some(levels.clone());
            }
            if !x.is_empty() {
                cfg.x_targets = Some(x.clone());
            }
            if let Some(m) = method {
                cfg.method = Some(match m {
                    MethodArg::Analytic => coulomb_qpt::spectral::Method::Analytic,
                    MethodArg::FiniteDifference => coulomb_qpt::spectral::Method::FiniteDifference,
                });
            }
        }
        Command::Eps {
            region,
            density,
            levels,
            grid,
        } => {
            if let Some(r) = region {
                cfg.region = Some(parse_region(r)?);
            }
            if let Some(d) = density {
                let mut c = cfg.census.unwrap_or_default();
                c.grid_density = *d;
                cfg.census = Some(c);
            }
            if !levels.is_empty() {
                cfg.factorization_levels = Some(levels.clone());
            }
            if grid.is_some() {
                cfg.grid = *grid;
            }
        }
        Command::Scaling { study, n_list, x } => {
            commands::apply_scaling_flags(&mut cfg, study, n_list, x, cli.boson_number);
        }
        Command::Linemodel { p, mu_max } => {
            let mut l = cfg.linemodel.clone().unwrap_or_default();
            if !p.is_empty() {
                l.p_list = Some(p.clone());
            }
            if mu_max.is_some() {
                l.mu_max = *mu_max;
            }
            cfg.linemodel = Some(l);
        }
        Command::Verify => {}
    }
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn parse_region(s: &str) -> Result<coulomb_qpt::ep::Region, Failure> {
    let v: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(format!("region {s:?}: {e}")))?;
    if v.len() != 3 {
        return Err(Failure::Config(format!("region must be re_min:re_max:im_max, got {s:?}")));
    }
    Ok(coulomb_qpt::ep::Region {
        re_min: v[0],
        re_max: v[1],
        im_max: v[2],
    })
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    let cfg = merged_config(cli)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let out_root = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut out = output::OutDir::create(&out_root)?;
    let outcome = match &cli.command {
        Command::Spectrum { .. } => commands::spectrum(&cfg, &mut out),
        Command::Classify { .. } => commands::classify(&cfg, &mut out),
        Command::Eps { .. } => commands::eps(&cfg, &mut out),
        Command::Scaling { .. } => commands::scaling(&cfg, &mut out),
        Command::Linemodel { .. } => commands::linemodel(&cfg, &mut out),
        Command::Verify => verify::run(&cfg, &mut out),
    };
    outcome.map(|_| out.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Config(m) => ("configuration error", m),
                Failure::Numerical(m) => ("numerical failure", m),
                Failure::Incomplete(m) => ("incomplete result", m),
            };
            eprintln!("cqpt: {kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}
