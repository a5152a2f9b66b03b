//! Command-line surface. Flags override the config file, which overrides defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{AtomSpec, ConfigError, ExperimentConfig, RadiusSpec, RunKind};

#[derive(Debug, Parser)]
#[command(name = "mflab", version, about = "Numerical laboratory for singular mean field equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at one value of rho.
    Solve(RunArgs),
    /// Continue the solution branch from rho = 0 to rho_max.
    Branch(RunArgs),
    /// Linearized eigenvalues, nodal domains and the positivity certificate.
    Spectrum(RunArgs),
    /// Isoperimetric certificates over a sweep of level sets.
    BolSweep(RunArgs),
    /// Closed-form radial model and the constrained quotient.
    Radial(RunArgs),
    /// Multistart Newton from random initial data.
    Uniqueness(RunArgs),
    /// Dry-run checks; prints alpha and both thresholds.
    Validate(RunArgs),
}

impl Command {
    /// The run kind, or `None` for `validate`.
    pub fn kind(&self) -> Option<RunKind> {
        match self {
            Command::Solve(_) => Some(RunKind::Solve),
            Command::Branch(_) => Some(RunKind::Branch),
            Command::Spectrum(_) => Some(RunKind::Spectrum),
            Command::BolSweep(_) => Some(RunKind::BolSweep),
            Command::Radial(_) => Some(RunKind::Radial),
            Command::Uniqueness(_) => Some(RunKind::Uniqueness),
            Command::Validate(_) => None,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Solve(a)
            | Command::Branch(a)
            | Command::Spectrum(a)
            | Command::BolSweep(a)
            | Command::Radial(a)
            | Command::Uniqueness(a)
            | Command::Validate(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML experiment file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Atom `x,y,alpha`; repeatable; replaces the atoms of the config file.
    #[arg(long = "atom", value_name = "X,Y,ALPHA", value_parser = parse_atom, allow_hyphen_values = true)]
    pub atoms: Vec<AtomSpec>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub n_levels: Option<usize>,
    #[arg(long)]
    pub n_starts: Option<usize>,
    #[arg(long)]
    pub n_eigs: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub cert_tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Radius of the radial problem: a number or `inf`.
    #[arg(long = "R0", alias = "r0", value_parser = parse_radius)]
    pub r0: Option<RadiusSpec>,
    #[arg(long)]
    pub n_grid: Option<usize>,
    /// Compute the constrained quotient of the radial model.
    #[arg(long)]
    pub kstar: bool,
}

fn parse_atom(s: &str) -> Result<AtomSpec, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, alpha] => Ok(AtomSpec { x, y, alpha }),
        _ => Err(format!("expected x,y,alpha, got {s:?}")),
    }
}

fn parse_radius(s: &str) -> Result<RadiusSpec, String> {
    RadiusSpec::parse(s).map_err(|e| e.0)
}

impl RunArgs {
    /// Loads the config file (if any) and applies the flags on top. `kind`
    /// replaces the file's run kind when given.
    pub fn resolve(&self, kind: Option<RunKind>) -> Result<ExperimentConfig, ConfigError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(kind.unwrap_or(RunKind::Solve)),
        };
        if let Some(k) = kind {
            c.run.kind = k;
        }
        if let Some(v) = &self.out {
            c.output.dir = v.clone();
        }
        if !self.atoms.is_empty() {
            c.atoms = self.atoms.clone();
        }
        let r = &mut c.run;
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set!(h_max => c.mesh.h_max, seed => r.seed, n_steps => r.n_steps, n_levels => r.n_levels,
             n_starts => r.n_starts, n_eigs => r.n_eigs, tol => r.tol, margin => r.margin,
             cert_tol => r.cert_tol, n_grid => r.n_grid);
        if self.rho.is_some() {
            r.rho = self.rho;
        }
        if self.rho_max.is_some() {
            r.rho_max = self.rho_max;
        }
        if self.alpha.is_some() {
            r.alpha = self.alpha;
        }
        if self.r0.is_some() {
            r.r0 = self.r0;
        }
        if self.kstar {
            r.kstar = true;
        }
        Ok(c)
    }
}
