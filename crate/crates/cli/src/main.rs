use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::info;

use securecell_core::config::ExperimentConfig;
use securecell_core::experiment::{run_experiment, write_experiment};
use securecell_core::Error;

/// Secure cell formation simulator for multi-AP indoor VLC networks.
///
/// Every flag overrides the matching `[run]` or `[pso]` key of the config file.
#[derive(Debug, Parser)]
#[command(name = "securecell", version)]
struct Args {
    /// TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// dpp, mr, pf, mr-an or pf-an.
    #[arg(long, value_name = "TAG")]
    algo: Option<String>,
    #[arg(long, value_name = "N")]
    slots: Option<usize>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// AXIS=v1,v2,... with AXIS one of theta, fov, user_count, beta, be, alpha.
    #[arg(long, value_name = "SPEC")]
    sweep: Option<String>,
    #[arg(long, value_name = "N")]
    reps: Option<u64>,
    #[arg(long, value_name = "N")]
    swarm_size: Option<usize>,
    #[arg(long, value_name = "N")]
    pso_iters: Option<usize>,
    #[arg(long, value_name = "N")]
    stall_threshold: Option<usize>,
}

impl Args {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(a) = &self.algo {
            cfg.run.algorithm = a.clone();
        }
        if let Some(n) = self.slots {
            cfg.run.slots = n;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.run.out = o.clone();
        }
        if let Some(s) = &self.sweep {
            cfg.run.sweep = Some(s.clone());
        }
        if let Some(r) = self.reps {
            cfg.run.reps = r;
        }
        if let Some(n) = self.swarm_size {
            cfg.pso.swarm_size = n;
        }
        if let Some(n) = self.pso_iters {
            cfg.pso.max_iters = n;
        }
        if let Some(n) = self.stall_threshold {
            cfg.pso.stall_threshold = n;
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::ConfigParse { .. } => 2,
        _ => 1,
    }
}

fn load(args: &Args) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| match e {
        Error::Io(io) => Error::config("--config", format!("cannot read {}: {io}", args.config.display())),
        other => other,
    })?;
    args.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<(), Error> {
    let runs = run_experiment(cfg)?;
    write_experiment(&cfg.run.out, &runs)?;
    for r in &runs {
        let s = &r.output.summary;
        println!(
            "{} algo={} users={} mean_esr_bps={:.6e} max_normalized_backlog={:.6e}",
            r.label(),
            s.algorithm,
            s.num_users,
            s.mean_esr_bps(),
            s.max_normalized_backlog()
        );
    }
    info!("wrote {} run(s) to {}", runs.len(), cfg.run.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = load(&args).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
