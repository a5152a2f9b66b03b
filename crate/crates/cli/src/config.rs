//! Experiment configuration: a TOML file plus command-line overrides.
//!
//! Precedence, highest first: command-line flags, the config file, built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use mflab_core::geometry::{GradingCenter, PlanarDomain, Point};
use mflab_core::weights::{Atom, AtomicMeasure};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Invalid configuration; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Solve,
    Branch,
    Spectrum,
    BolSweep,
    Radial,
    Uniqueness,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Solve => "solve",
            RunKind::Branch => "branch",
            RunKind::Spectrum => "spectrum",
            RunKind::BolSweep => "bol-sweep",
            RunKind::Radial => "radial",
            RunKind::Uniqueness => "uniqueness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disk,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Counterclockwise polygon vertices; ignored for the disk.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<[f64; 2]>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self { kind: DomainKind::Disk, vertices: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterSpec {
    pub x: f64,
    pub y: f64,
    pub exponent: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub h_max: f64,
    /// Grade toward every atom with the default exponent and floor.
    #[serde(default = "yes")]
    pub atom_grading: bool,
    /// Additional grading centers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub center: Vec<CenterSpec>,
}

fn yes() -> bool {
    true
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { h_max: 0.05, atom_grading: true, center: Vec::new() }
    }
}

/// `R0` of the radial problems: a positive number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusSpec {
    Finite(f64),
    Infinite,
}

impl RadiusSpec {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(RadiusSpec::Infinite);
        }
        let v: f64 = t.parse().map_err(|_| invalid(format!("R0 must be a number or \"inf\", got {s:?}")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(format!("R0 must be positive, got {v}")));
        }
        Ok(RadiusSpec::Finite(v))
    }
}

impl fmt::Display for RadiusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusSpec::Finite(v) => write!(f, "{v}"),
            RadiusSpec::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for RadiusSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RadiusSpec::Finite(v) => s.serialize_f64(*v),
            RadiusSpec::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for RadiusSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => RadiusSpec::parse(&v.to_string()),
            Raw::Text(s) => RadiusSpec::parse(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
    #[serde(default = "default_n_starts")]
    pub n_starts: usize,
    /// TOML integers are signed, so seeds above `i64::MAX` are written as strings.
    #[serde(default, with = "seed_repr")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Number of Dirichlet eigenpairs for `spectrum`.
    #[serde(default = "default_n_eigs")]
    pub n_eigs: usize,
    /// Positivity margin for eigenvalue signs.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Relative tolerance of the isoperimetric certificates.
    #[serde(default = "default_cert_tol")]
    pub cert_tol: f64,
    /// Model exponent for `radial`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<RadiusSpec>,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    /// For `radial`: compute the constrained quotient instead of the profile.
    #[serde(default)]
    pub kstar: bool,
}

mod seed_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(v),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn default_n_steps() -> usize {
    16
}
fn default_n_levels() -> usize {
    64
}
fn default_n_starts() -> usize {
    8
}
fn default_tol() -> f64 {
    1e-10
}
fn default_n_eigs() -> usize {
    2
}
fn default_margin() -> f64 {
    1e-6
}
fn default_cert_tol() -> f64 {
    mflab_core::bol::DEFAULT_TOL
}
fn default_n_grid() -> usize {
    2000
}

impl RunSpec {
    pub fn new(kind: RunKind) -> Self {
        Self {
            kind,
            rho: None,
            rho_max: None,
            n_steps: default_n_steps(),
            n_levels: default_n_levels(),
            n_starts: default_n_starts(),
            seed: 0,
            tol: default_tol(),
            n_eigs: default_n_eigs(),
            margin: default_margin(),
            cert_tol: default_cert_tol(),
            alpha: None,
            r0: None,
            n_grid: default_n_grid(),
            kstar: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("mflab-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default, rename = "atom", skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub mesh: MeshSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn new(kind: RunKind) -> Self {
        Self {
            domain: DomainSpec::default(),
            atoms: Vec::new(),
            mesh: MeshSpec::default(),
            run: RunSpec::new(kind),
            output: OutputSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// TOML of everything that affects results; the output directory is left out
    /// so that the same experiment hashes identically wherever it is written.
    pub fn canonical_toml(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSpec::default();
        c.to_toml()
    }

    /// SHA-256 of [`Self::canonical_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_domain(&self) -> Result<PlanarDomain, ConfigError> {
        match self.domain.kind {
            DomainKind::Disk => Ok(PlanarDomain::unit_disk()),
            DomainKind::Polygon => {
                let v = self.domain.vertices.iter().map(|p| Point::new(p[0], p[1])).collect();
                PlanarDomain::polygon(v).map_err(|e| invalid(e.to_string()))
            }
        }
    }

    pub fn build_measure(&self, domain: &PlanarDomain) -> Result<AtomicMeasure, ConfigError> {
        let atoms = self.atoms.iter().map(|a| Atom::new(a.x, a.y, a.alpha)).collect();
        AtomicMeasure::new(atoms, domain).map_err(|e| invalid(e.to_string()))
    }

    pub fn grading_centers(&self, domain: &PlanarDomain, measure: &AtomicMeasure) -> Vec<GradingCenter> {
        let mut centers = if self.mesh.atom_grading { measure.grading_centers(domain.diameter()) } else { Vec::new() };
        centers.extend(
            self.mesh.center.iter().map(|c| GradingCenter::new(Point::new(c.x, c.y), c.exponent, c.floor)),
        );
        centers
    }

    /// Checks every precondition that can be checked without computing.
    pub fn validate(&self) -> Result<Diagnostics, ConfigError> {
        let diag = self.diagnostics()?;
        self.validate_run()?;
        Ok(diag)
    }

    /// Domain, atom and mesh checks plus the thresholds; ignores the run section.
    pub fn diagnostics(&self) -> Result<Diagnostics, ConfigError> {
        let domain = self.build_domain()?;
        let measure = self.build_measure(&domain)?;
        let h = self.mesh.h_max;
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("mesh.h_max must be positive, got {h}")));
        }
        if h > 0.5 * domain.diameter() {
            return Err(invalid(format!("mesh.h_max = {h} is too large for a domain of diameter {}", domain.diameter())));
        }
        let n_estimate = 2.3 * domain.area() / (h * h);
        if n_estimate > 5e6 {
            return Err(invalid(format!("mesh.h_max = {h} gives about {n_estimate:.0} nodes, above the 5e6 limit")));
        }
        for c in &self.mesh.center {
            if !(0.0..=1.0).contains(&c.exponent) || !(c.floor > 0.0) {
                return Err(invalid(format!("grading center {c:?} needs exponent in [0,1] and a positive floor")));
            }
        }
        let alpha = measure.alpha_total();
        let upper = 8.0 * std::f64::consts::PI * (1.0 - alpha);
        let mut notes = Vec::new();
        if let Some(rho) = self.run.rho {
            if rho > upper && self.run.kind != RunKind::Radial {
                notes.push(format!("rho = {rho} exceeds 8π(1−α) = {upper}; results are outside the uniqueness range"));
            }
        }
        let flagged = measure.flagged();
        if !flagged.is_empty() {
            notes.push(format!("atoms {flagged:?} have alpha <= -1/2; graded with the reduced floor"));
        }
        Ok(Diagnostics {
            alpha,
            threshold_half: 4.0 * std::f64::consts::PI * (1.0 - alpha),
            threshold: upper,
            mu_plus: measure.mu_plus(),
            n_atoms: self.atoms.len(),
            n_nodes_estimate: n_estimate.round() as u64,
            notes,
        })
    }

    fn validate_run(&self) -> Result<(), ConfigError> {
        let run = &self.run;
        if !(run.tol > 0.0) {
            return Err(invalid(format!("run.tol must be positive, got {}", run.tol)));
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if x > 0.0 && x.is_finite() => Ok(x),
            Some(x) => Err(invalid(format!("run.{name} must be positive, got {x}"))),
            None => Err(invalid(format!("run.{name} is required for `{}`", run.kind.name()))),
        };
        match run.kind {
            RunKind::Solve | RunKind::Spectrum | RunKind::BolSweep | RunKind::Uniqueness => {
                positive("rho", run.rho)?;
            }
            RunKind::Branch => {
                positive("rho_max", run.rho_max)?;
                if run.n_steps < 2 {
                    return Err(invalid("run.n_steps must be at least 2"));
                }
            }
            RunKind::Radial => {
                let a = run.alpha.unwrap_or(0.0);
                if !(0.0..1.0).contains(&a) {
                    return Err(invalid(format!("run.alpha must lie in [0, 1), got {a}")));
                }
                if run.n_grid < 10 {
                    return Err(invalid("run.n_grid must be at least 10"));
                }
            }
        }
        if run.kind == RunKind::Spectrum && run.n_eigs < 2 {
            return Err(invalid("run.n_eigs must be at least 2"));
        }
        if run.kind == RunKind::BolSweep && run.n_levels < 1 {
            return Err(invalid("run.n_levels must be positive"));
        }
        if run.kind == RunKind::Uniqueness && run.n_starts < 2 {
            return Err(invalid("run.n_starts must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub alpha: f64,
    /// `4π(1−α)`.
    pub threshold_half: f64,
    /// `8π(1−α)`.
    pub threshold: f64,
    pub mu_plus: f64,
    pub n_atoms: usize,
    pub n_nodes_estimate: u64,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"
[domain]
kind = "polygon"
vertices = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]

[[atom]]
x = 0.3
y = 0.4
alpha = -0.3

[[atom]]
x = 0.7
y = 0.6
alpha = -0.4

[mesh]
h_max = 0.05

[run]
kind = "branch"
rho_max = 7.0
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::parse(SQUARE).unwrap();
        assert_eq!(c.atoms.len(), 2);
        assert_eq!(c.run.kind, RunKind::Branch);
        assert_eq!(c.run.n_steps, 16);
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn threshold_arithmetic() {
        let c = ExperimentConfig::parse(SQUARE).unwrap();
        let d = c.validate().unwrap();
        assert!((d.alpha - 0.7).abs() < 1e-15);
        assert!((d.threshold - 8.0 * std::f64::consts::PI * 0.3).abs() < 1e-12);
    }

    #[test]
    fn rejects_excess_negative_mass() {
        let mut c = ExperimentConfig::parse(SQUARE).unwrap();
        c.atoms[0].alpha = -0.6;
        c.atoms[1].alpha = -0.6;
        assert!(c.validate().is_err());
    }

    #[test]
    fn positive_atoms_do_not_count() {
        let mut c = ExperimentConfig::parse(SQUARE).unwrap();
        c.atoms[1].alpha = 0.5;
        let d = c.validate().unwrap();
        assert!((d.alpha - 0.3).abs() < 1e-15);
        assert!((d.threshold - 8.0 * std::f64::consts::PI * 0.7).abs() < 1e-12);
    }

    #[test]
    fn radius_parsing() {
        assert_eq!(RadiusSpec::parse("inf").unwrap(), RadiusSpec::Infinite);
        assert_eq!(RadiusSpec::parse("2.5").unwrap(), RadiusSpec::Finite(2.5));
        assert!(RadiusSpec::parse("-1").is_err());
        let mut c = ExperimentConfig::new(RunKind::Radial);
        c.run.r0 = Some(RadiusSpec::Infinite);
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("[run]\nkind = \"solve\"\nrhoo = 1.0\n").is_err());
    }
}
