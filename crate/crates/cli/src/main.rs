use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hvz_core::run::{execute, Command, ExecOptions, RunConfig};
use hvz_core::Error;

/// Essential-spectrum thresholds of pseudorelativistic few-body systems.
///
/// Every flag can also be set through an environment variable `HVZ_<FLAG>`
/// (e.g. `HVZ_GRID_N=64`); flags win over the environment, which wins over
/// the configuration file.
#[derive(Parser, Debug)]
#[command(name = "hvz", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Character table of a product of symmetric groups.
    Chartab {
        /// Species sizes, e.g. `3` or `2 1`; defaults to the system's group.
        sizes: Vec<usize>,
    },
    /// Threshold mu(alpha), its minimising decompositions and lambda curves.
    Threshold,
    /// Weyl trial sequence and discrete spectrum below the threshold.
    Hvz,
    /// Finiteness diagnostics for the minimiser set.
    Lemma1,
    /// Discrete eigenvalues below the threshold.
    Spectrum,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (TOML), JSON configuration or run manifest.
    #[arg(long, global = true, env = "HVZ_CONFIG")]
    config: Option<PathBuf>,
    /// System file (TOML).
    #[arg(long, global = true, env = "HVZ_SYSTEM")]
    system: Option<PathBuf>,
    /// Symmetry type, e.g. "[2,1]", or "[2]x[1]" for two species.
    #[arg(long, global = true, env = "HVZ_ALPHA")]
    alpha: Option<String>,
    #[arg(long, global = true, env = "HVZ_OUT")]
    out: Option<PathBuf>,
    /// Directory of the persistent cluster energy cache.
    #[arg(long, global = true, env = "HVZ_CACHE")]
    cache: Option<PathBuf>,
    #[arg(long, global = true, env = "HVZ_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "HVZ_THREADS")]
    threads: Option<usize>,
    /// Half width of the relative-momentum scan box.
    #[arg(long, global = true, env = "HVZ_QMAX")]
    qmax: Option<f64>,
    /// Grid points per axis.
    #[arg(long = "grid-n", global = true, env = "HVZ_GRID_N")]
    grid_n: Option<usize>,
    /// Box length.
    #[arg(long = "box-l", global = true, env = "HVZ_BOX_L")]
    box_l: Option<f64>,
    /// Eigensolver residual tolerance.
    #[arg(long, global = true, env = "HVZ_TOL")]
    tol: Option<f64>,
    /// Compute the threshold in-process instead of reading a prior `threshold` run.
    #[arg(long, global = true, env = "HVZ_INLINE")]
    inline: bool,
}

fn build_config(cli: &Cli) -> hvz_core::Result<RunConfig> {
    let c = &cli.common;
    let (mut cfg, base) = match &c.config {
        Some(path) => (RunConfig::load(path)?, path.parent().map(PathBuf::from)),
        None => (RunConfig::default(), None),
    };
    if let Some(s) = &c.system {
        cfg.system = Some(s.clone());
        cfg.system_def = None;
    }
    if let Some(a) = &c.alpha {
        cfg.alpha = Some(a.clone());
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(d) = &c.cache {
        cfg.cache = Some(d.clone());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.threads {
        cfg.threads = Some(t);
    }
    if let Some(q) = c.qmax {
        cfg.threshold.qmax = Some(q);
    }
    if let Some(n) = c.grid_n {
        cfg.threshold.grid.points = n;
    }
    if let Some(l) = c.box_l {
        cfg.threshold.grid.box_len = l;
    }
    if let Some(t) = c.tol {
        cfg.threshold.grid.solver.tol = t;
    }
    if let Cmd::Chartab { sizes } = &cli.command {
        if !sizes.is_empty() {
            cfg.group = Some(sizes.clone());
        }
    }
    // a system given on the command line is relative to the working directory
    let base = if c.system.is_some() { None } else { base };
    cfg.resolve(base.as_deref())
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cmd = match cli.command {
        Cmd::Chartab { .. } => Command::Chartab,
        Cmd::Threshold => Command::Threshold,
        Cmd::Hvz => Command::Hvz,
        Cmd::Lemma1 => Command::Lemma1,
        Cmd::Spectrum => Command::Spectrum,
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    log::info!("running {} into {}", cmd.name(), cfg.out.display());
    match execute(cmd, &cfg, ExecOptions { inline: cli.common.inline }) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
