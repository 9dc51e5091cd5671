//! Batch runner for the uatlab experiments.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad configuration, 3 numerical nonconvergence.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use config::*;
use output::Output;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Check(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<uatlab::Error> for CliError {
    fn from(e: uatlab::Error) -> Self {
        match e {
            uatlab::Error::NonConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "uatlab", version, about = "Approximation and expressivity experiments for shallow and deep networks")]
struct Cli {
    /// JSON config for the subcommand; a report written by this tool also works
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of seeded experiments
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "uatlab-out")]
    out: PathBuf,
    /// Overrides the exponent p of the experiment
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Omit the timestamp so identical runs give identical files
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the lemma-level checks and write a pass/fail table
    VerifyLemmas {
        /// Restrict to these groups
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<verify::Group>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Fit a depth-3, shallow 1-D or lifted approximator
    Approximate,
    /// Probe, growth-profile and cone experiments
    Inexpressivity {
        #[command(subcommand)]
        which: Experiment,
    },
    /// L^p norm of a serialized net over a domain
    Norm {
        /// Net JSON (shallow or deep)
        #[arg(long)]
        net: Option<PathBuf>,
        /// Domain JSON, e.g. '{"box":[["-inf","inf"]]}'
        #[arg(long)]
        domain: Option<String>,
    },
    /// Write the G and F bump nets as JSON
    Bump {
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Fit a shallow net on a square, then measure it on larger squares
    Probe,
    /// Norms of a planar shallow net over [-R,R]x[0,R]
    Growth {
        /// Shallow net JSON instead of the configured single unit
        #[arg(long)]
        net: Option<PathBuf>,
    },
    /// Integral of the tent over a cone
    Cone {
        #[arg(long)]
        c: Option<f64>,
        /// Use {|x| < c t} instead of {|x| < c |t|}
        #[arg(long)]
        one_sided: bool,
    },
}

fn command() -> clap::Command {
    let mut cmd = Cli::command();
    for (name, json) in defaults_help() {
        let text = format!("Config defaults (JSON):\n{json}");
        cmd = match name {
            "probe" | "growth" | "cone" => cmd.mut_subcommand("inexpressivity", |c| c.mut_subcommand(name, |s| s.after_long_help(text))),
            _ => cmd.mut_subcommand(name, |s| s.after_long_help(text)),
        };
    }
    cmd
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = Output::new(&cli.out, !cli.no_timestamp);
    let cfg_path = cli.config.as_deref();
    match cli.cmd {
        Cmd::VerifyLemmas { only, inject_fault } => {
            let mut cfg: VerifyConfig = load(cfg_path, "verify-lemmas")?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let checks = verify::run(&cfg, &only, inject_fault);
            for c in &checks {
                println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            }
            out.csv("lemmas.csv", &verify::to_csv(&checks))?;
            out.report("lemmas.json", "verify-lemmas", &cfg, &checks)?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(CliError::Check(format!("failing checks: {}", failed.join(", "))));
            }
            println!("{} checks passed", checks.len());
        }
        Cmd::Approximate => {
            let mut cfg: ApproximateConfig = load(cfg_path, "approximate")?;
            if let Some(p) = cli.p {
                match &mut cfg {
                    ApproximateConfig::Depth3(c) => c.p = p,
                    ApproximateConfig::Shallow1d(c) => c.p = p,
                    ApproximateConfig::Lifted(c) => c.p = p,
                }
            }
            commands::approximate(&cfg, &out)?;
        }
        Cmd::Inexpressivity { which: Experiment::Probe } => {
            let mut cfg: ProbeCmdConfig = load(cfg_path, "probe")?;
            if let Some(s) = cli.seed {
                cfg.probe.seed = s;
            }
            if let Some(p) = cli.p {
                cfg.probe.p = p;
            }
            commands::probe(&cfg, &out)?;
        }
        Cmd::Inexpressivity { which: Experiment::Growth { net } } => {
            let mut cfg: GrowthCmdConfig = load(cfg_path, "growth")?;
            if net.is_some() {
                cfg.net = net;
            }
            if let Some(p) = cli.p {
                cfg.p = p;
            }
            commands::growth(&cfg, &out)?;
        }
        Cmd::Inexpressivity { which: Experiment::Cone { c, one_sided } } => {
            let mut cfg: ConeCmdConfig = load(cfg_path, "cone")?;
            if let Some(c) = c {
                cfg.c = c;
            }
            if one_sided {
                cfg.two_sided = false;
            }
            commands::cone(&cfg, &out)?;
        }
        Cmd::Norm { net, domain } => {
            let mut cfg: NormCmdConfig = load(cfg_path, "norm")?;
            if net.is_some() {
                cfg.net = net;
            }
            if let Some(d) = domain {
                cfg.domain = Some(serde_json::from_str(&d).map_err(|e| CliError::Config(format!("--domain: {e}")))?);
            }
            if cli.p.is_some() {
                cfg.p = cli.p;
            }
            commands::norm(&cfg, &out)?;
        }
        Cmd::Bump { dim } => commands::bump(dim, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Config(m) => format!("config error: {m}"),
                CliError::Check(m) => format!("check failure: {m}"),
                CliError::Numerical(m) => format!("numerical failure: {m}"),
            };
            eprintln!("uatlab: {msg}");
            ExitCode::from(e.code())
        }
    }
}
