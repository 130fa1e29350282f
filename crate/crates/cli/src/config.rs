//! Flat `key = value` experiment configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use riccati_expint::integrators::{ExpMode, Scheme};
use riccati_expint::phifun::DEFAULT_NODES;
use riccati_expint::problems::ProblemSpec;
use riccati_expint::krylov::DEFAULT_STEPS;

use crate::CliError;

pub const KEYS: [&str; 11] = [
    "problem", "schemes", "h", "t_end", "nodes", "tol", "krylov_m", "exp_mode", "seed", "repeat",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub schemes: Vec<Scheme>,
    pub hs: Vec<f64>,
    pub t_end: f64,
    /// Gauss–Legendre nodes of the low-rank φ-sums.
    pub nodes: usize,
    /// `None` means `n·ε`.
    pub tol: Option<f64>,
    pub krylov_m: usize,
    pub exp_mode: ExpMode,
    pub seed: u64,
    /// Timed runs per cell; the median wall time is reported.
    pub repeat: usize,
    /// Output directory; `None` writes to stdout.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "scalar-tanh".into(),
            schemes: vec![Scheme::GExpEuler],
            hs: vec![0.01],
            t_end: 1.0,
            nodes: DEFAULT_NODES,
            tol: None,
            krylov_m: DEFAULT_STEPS,
            exp_mode: ExpMode::Dense,
            seed: 2024,
            repeat: 1,
            out: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse {key} = {value:?}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key.trim() {
            "problem" => {
                ProblemSpec::parse(value)?;
                self.problem = value.to_string();
            }
            "schemes" | "scheme" => {
                self.schemes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Scheme>().map_err(CliError::from))
                    .collect::<Result<_, _>>()?;
            }
            "h" => self.hs = list("h", value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "nodes" => self.nodes = parse(key, value)?,
            "tol" => {
                self.tol = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "krylov_m" => self.krylov_m = parse(key, value)?,
            "exp_mode" => self.exp_mode = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "repeat" => self.repeat = parse(key, value)?,
            "out" => self.out = (value != "-").then(|| PathBuf::from(value)),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown config key {other:?}; valid keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a config file on top of `self`. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, origin: &Path) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected key = value, got {raw:?}",
                    origin.display(),
                    i + 1
                )));
            };
            self.set(k, v).map_err(|e| match e {
                CliError::Usage(m) => {
                    CliError::Usage(format!("{}:{}: {m}", origin.display(), i + 1))
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.merge_text(&text, path)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.schemes.is_empty() {
            return usage(format!(
                "scheme list is empty; valid schemes: {}",
                scheme_names()
            ));
        }
        if self.hs.is_empty() {
            return usage("step size list is empty".into());
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return usage(format!("t_end must be ≥ 0, got {}", self.t_end));
        }
        for &h in &self.hs {
            let ratio = self.t_end / h;
            if !(h > 0.0) || !h.is_finite() {
                return usage(format!("step sizes must be positive, got {h}"));
            }
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.round().max(1.0) {
                return usage(format!("h = {h} does not divide t_end = {}", self.t_end));
            }
        }
        if self.nodes == 0 || self.krylov_m == 0 || self.repeat == 0 {
            return usage("nodes, krylov_m and repeat must be ≥ 1".into());
        }
        if self.tol.is_some_and(|t| !(t >= 0.0)) {
            return usage("tol must be ≥ 0".into());
        }
        ProblemSpec::parse(&self.problem)?;
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        Ok(ProblemSpec::parse(&self.problem)?)
    }
}

pub fn scheme_names() -> String {
    Scheme::ALL.map(Scheme::name).join(", ")
}

/// Renders every key; the output parses back to the same config.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        writeln!(f, "problem = {}", self.problem)?;
        writeln!(f, "schemes = {}", join(self.schemes.iter().map(|s| s.name().to_string()).collect()))?;
        writeln!(f, "h = {}", join(self.hs.iter().map(|h| format!("{h:?}")).collect()))?;
        writeln!(f, "t_end = {:?}", self.t_end)?;
        writeln!(f, "nodes = {}", self.nodes)?;
        match self.tol {
            Some(t) => writeln!(f, "tol = {t:?}")?,
            None => writeln!(f, "tol = auto")?,
        }
        writeln!(f, "krylov_m = {}", self.krylov_m)?;
        writeln!(f, "exp_mode = {}", self.exp_mode)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "repeat = {}", self.repeat)?;
        match &self.out {
            Some(p) => writeln!(f, "out = {}", p.display()),
            None => writeln!(f, "out = -"),
        }
    }
}
