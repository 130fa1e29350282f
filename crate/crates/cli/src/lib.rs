//! Experiment harness: error tables, F-norm trajectories and convergence
//! studies against the Radon reference solution.

pub mod config;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use riccati_expint::dense::rel_diff;
use riccati_expint::integrators::{
    integrate, IntegrationFailure, IntegratorConfig, RiccatiProblem, Scheme, Trajectory,
};
use riccati_expint::oracle::{radon_solve, radon_trajectory, RadonOptions};
use riccati_expint::phifun::QuadratureRule;
use riccati_expint::Error;

pub use config::ExperimentConfig;

/// Bumped whenever a column is added, removed or reinterpreted.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<Box<IntegrationFailure>> for CliError {
    fn from(f: Box<IntegrationFailure>) -> Self {
        match f.error {
            Error::Config(_) => CliError::Usage(f.error.to_string()),
            _ => CliError::Numerical(f.to_string()),
        }
    }
}

/// A CSV document with a leading `# riccati <kind> v<N>` schema line.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(kind: &'static str, header: &[&'static str]) -> Self {
        Self {
            kind,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        format!("# riccati {} v{SCHEMA_VERSION}\n{body}", self.kind)
    }

    /// Writes `<dir>/<kind>.csv`, creating `dir` if needed.
    pub fn write_to(&self, dir: &Path) -> Result<std::path::PathBuf, CliError> {
        let io = |e: std::io::Error| CliError::Numerical(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let path = dir.join(format!("{}.csv", self.kind));
        std::fs::write(&path, self.to_csv()).map_err(io)?;
        Ok(path)
    }
}

fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

fn integrator_config(cfg: &ExperimentConfig, scheme: Scheme, h: f64) -> Result<IntegratorConfig, CliError> {
    let mut c = IntegratorConfig::new(scheme, h, cfg.t_end);
    c.rule = QuadratureRule::gauss_legendre(cfg.nodes)?;
    c.tol = cfg.tol;
    c.krylov_m = cfg.krylov_m;
    c.exp_mode = cfg.exp_mode;
    Ok(c)
}

fn timed_run(
    p: &RiccatiProblem,
    c: &IntegratorConfig,
    repeat: usize,
) -> Result<(Trajectory, f64), CliError> {
    let mut times = Vec::with_capacity(repeat);
    let mut first = None;
    for _ in 0..repeat {
        let start = Instant::now();
        let traj = integrate(p, c)?;
        times.push(start.elapsed().as_secs_f64());
        first.get_or_insert(traj);
    }
    times.sort_by(f64::total_cmp);
    Ok((first.expect("repeat ≥ 1"), times[times.len() / 2]))
}

fn setup(cfg: &ExperimentConfig) -> Result<RiccatiProblem, CliError> {
    cfg.validate()?;
    Ok(cfg.problem_spec()?.build(cfg.seed)?)
}

/// One row per (scheme, h): relative F-norm error at `t_end`.
pub fn run_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let p = setup(cfg)?;
    let reference = radon_solve(&p, cfg.t_end)?;
    let cells: Vec<(usize, Scheme, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.hs.iter().map(move |&h| (s, h)))
        .enumerate()
        .map(|(i, (s, h))| (i, s, h))
        .collect();

    let mut rows = cells
        .par_iter()
        .map(|&(i, scheme, h)| {
            let c = integrator_config(cfg, scheme, h)?;
            let steps = c.steps()?;
            let (traj, secs) = timed_run(&p, &c, cfg.repeat)?;
            let state = traj.final_state();
            let row = vec![
                cfg.problem.clone(),
                scheme.name().to_string(),
                format!("{h:?}"),
                format!("{:?}", cfg.t_end),
                steps.to_string(),
                sci(rel_diff(&state.to_dense(), &reference)),
                state.rank().map(|r| r.to_string()).unwrap_or_default(),
                format!("{secs:.6}"),
            ];
            Ok((i, row))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.sort_by_key(|(i, _)| *i);

    let mut t = Table::new(
        "table",
        &["problem", "scheme", "h", "t_end", "steps", "rel_error", "rank", "wall_seconds"],
    );
    t.rows = rows.into_iter().map(|(_, r)| r).collect();
    Ok(t)
}

/// Norm of the computed and the reference solution at every grid point.
pub fn run_trajectory(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    if cfg.schemes.len() != 1 || cfg.hs.len() != 1 {
        return Err(CliError::Usage(
            "trajectory needs exactly one scheme and one step size".into(),
        ));
    }
    let p = setup(cfg)?;
    let c = integrator_config(cfg, cfg.schemes[0], cfg.hs[0])?;
    let traj = integrate(&p, &c)?;
    let refs = radon_trajectory(&p, &traj.times, &RadonOptions::default())?;

    let mut t = Table::new("trajectory", &["t", "norm", "ref_norm", "rel_error", "rank"]);
    for ((time, state), xref) in traj.times.iter().zip(&traj.states).zip(&refs) {
        let x = state.to_dense();
        t.rows.push(vec![
            format!("{time:?}"),
            sci(x.norm()),
            sci(xref.norm()),
            sci(rel_diff(&x, xref)),
            state.rank().map(|r| r.to_string()).unwrap_or_default(),
        ]);
    }
    Ok(t)
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_slope(hs: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Errors at `t_end` for a geometric sequence of step sizes, with local and
/// fitted convergence slopes.
pub fn run_order_study(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    if cfg.hs.len() < 3 {
        return Err(CliError::Usage(format!(
            "order study needs at least 3 step sizes, got {}",
            cfg.hs.len()
        )));
    }
    let ratio = cfg.hs[0] / cfg.hs[1];
    let geometric = ratio > 1.0
        && cfg
            .hs
            .windows(2)
            .all(|w| ((w[0] / w[1]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(CliError::Usage(
            "order study needs decreasing step sizes in geometric progression".into(),
        ));
    }

    let table = run_table(cfg)?;
    let err_col = table.column("rel_error").expect("table schema");
    let mut t = Table::new("order", &["scheme", "h", "rel_error", "local_slope", "fitted_slope"]);
    for (chunk, scheme) in table.rows.chunks(cfg.hs.len()).zip(&cfg.schemes) {
        let errors: Vec<f64> = chunk
            .iter()
            .map(|r| r[err_col].parse().expect("formatted by run_table"))
            .collect();
        let fit = fitted_slope(&cfg.hs, &errors);
        for i in 0..errors.len() {
            let local = if i == 0 {
                String::new()
            } else {
                format!(
                    "{:.6}",
                    (errors[i - 1] / errors[i]).ln() / (cfg.hs[i - 1] / cfg.hs[i]).ln()
                )
            };
            t.rows.push(vec![
                scheme.name().to_string(),
                format!("{:?}", cfg.hs[i]),
                sci(errors[i]),
                local,
                format!("{fit:.6}"),
            ]);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powi(3)).collect();
        assert!((fitted_slope(&hs, &es) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_schema_line() {
        let mut t = Table::new("table", &["a", "b"]);
        t.rows.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "# riccati table v1\na,b\n1,\"x,y\"\n");
    }

    #[test]
    fn error_mapping() {
        assert_eq!(CliError::from(Error::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), 1);
    }
}
