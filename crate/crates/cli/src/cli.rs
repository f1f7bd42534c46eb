use std::collections::BTreeMap;
use std::path::PathBuf;

use anvil_core::config::{parse_config, Mode, RunConfig};
use clap::{Args, Parser, Subcommand};
use log::info;

use crate::cfd::{run_cfd, CfdInput};
use crate::datagen::run_data_generation;
use crate::error::mode_name;
use crate::manifest::{config_hash, RunLog};
use crate::optimize::run_optimize;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "anvil", version, about = "Drag-driven shape design: data generation, CFD and Bayesian optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the design space and record drag for every sample.
    #[command(name = "data-gen")]
    DataGen(CommonArgs),
    /// Evaluate one design given as STL or parameter values.
    Cfd(CfdArgs),
    /// Minimize drag over the design space.
    Optimize(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CfdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Body surface in mm; otherwise the seed design is instantiated.
    #[arg(long, conflicts_with = "set")]
    pub stl: Option<PathBuf>,
    /// Parameter override, `name=value` in mm. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::DataGen(c) | Command::Optimize(c) => c,
            Command::Cfd(a) => &a.common,
        }
    }

    fn mode(&self) -> Mode {
        match self {
            Command::DataGen(_) => Mode::DataGeneration,
            Command::Cfd(_) => Mode::Cfd,
            Command::Optimize(_) => Mode::Optimize,
        }
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &std::path::Path, log: &RunLog) -> Result<(), CliError> {
    if cfg.mode != cmd.mode() {
        return Err(CliError::ModeMismatch { cli: mode_name(cmd.mode()), config: mode_name(cfg.mode) });
    }
    match cmd {
        Command::DataGen(_) => {
            let n = run_data_generation(cfg, out, log)?;
            info!("evaluated {n} samples");
        }
        Command::Cfd(a) => {
            let input = match &a.stl {
                Some(p) => CfdInput::Stl(p.clone()),
                None => CfdInput::Parameters(a.set.iter().cloned().collect::<BTreeMap<_, _>>()),
            };
            run_cfd(cfg, &input, out, log)?;
        }
        Command::Optimize(_) => {
            let h = run_optimize(cfg, out, log)?;
            info!("{} evaluations, {} failed", h.records.len(), h.failures());
        }
    }
    Ok(())
}

/// Runs one command. The manifest is written last whenever an output
/// directory is known, including on failure.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let common = cli.command.common();
    let bytes = std::fs::read(&common.config).map_err(|e| CliError::io(&common.config, e));
    let hash = bytes.as_ref().map(|b| config_hash(b)).unwrap_or_default();
    let log = RunLog::new(cli.command.mode().as_str(), hash);
    let cfg = bytes.and_then(|b| {
        let text = String::from_utf8(b).map_err(|e| CliError::io(&common.config, e))?;
        Ok(parse_config(&text)?)
    });
    let out = match (&common.out, &cfg) {
        (Some(o), _) => Some(o.clone()),
        (None, Ok(c)) => Some(PathBuf::from(&c.output_dir)),
        (None, Err(_)) => None,
    };
    let result = cfg.and_then(|mut c| {
        let out = out.clone().expect("known once the config parsed");
        c.output_dir = out.to_string_lossy().into_owned();
        dispatch(&cli.command, &c, &out, &log)
    });
    if let Err(e) = &result {
        log::error!("{e}");
    }
    match out {
        Some(dir) => {
            log.finish(&dir, &result)?;
            result.map(|_| dir)
        }
        None => result.map(|_| PathBuf::new()),
    }
}
