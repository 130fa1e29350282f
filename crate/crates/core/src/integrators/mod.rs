//! Exponential Rosenbrock integrators for `X' = AX + XD + Q − XGX` and the
//! fixed-step driver.

mod problem;
mod steps;

use std::fmt;
use std::str::FromStr;
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

pub use problem::{LowRankData, RiccatiProblem};
pub use steps::{
    step_erow3_dense, step_erow3_lowrank, step_expeuler_backward, step_expeuler_general,
    step_expeuler_lowrank, step_msde_polynomial, LowRankStep,
};

use crate::dense::{asymmetry, min_sym_eigenvalue, RealMatrix};
use crate::error::{Error, Result};
use crate::krylov::DEFAULT_STEPS;
use crate::lowrank::LdlFactor;
use crate::phifun::{PhiRoute, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// ExpEuler through the augmented matrix.
    GExpEuler,
    /// ExpEuler through one Sylvester solve per step.
    BrExpEuler,
    /// ExpEuler on `LDLᵀ` factors.
    LrExpEuler,
    Erow3Dense,
    Erow3LowRank,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::GExpEuler,
        Scheme::BrExpEuler,
        Scheme::LrExpEuler,
        Scheme::Erow3Dense,
        Scheme::Erow3LowRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::GExpEuler => "GExpEuler",
            Scheme::BrExpEuler => "BrExpEuler",
            Scheme::LrExpEuler => "LrExpEuler",
            Scheme::Erow3Dense => "Erow3",
            Scheme::Erow3LowRank => "LrErow3",
        }
    }

    pub fn is_lowrank(self) -> bool {
        matches!(self, Scheme::LrExpEuler | Scheme::Erow3LowRank)
    }

    /// Classical order of the underlying method.
    pub fn order(self) -> u32 {
        match self {
            Scheme::Erow3Dense | Scheme::Erow3LowRank => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let found = match key.as_str() {
            "gexpeuler" | "expeuler" => Some(Scheme::GExpEuler),
            "brexpeuler" => Some(Scheme::BrExpEuler),
            "lrexpeuler" => Some(Scheme::LrExpEuler),
            "erow3" | "erow3dense" => Some(Scheme::Erow3Dense),
            "lrerow3" | "erow3lowrank" => Some(Scheme::Erow3LowRank),
            _ => None,
        };
        found.ok_or_else(|| {
            let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
            Error::Config(format!("unknown scheme {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// How the low-rank schemes compute `e^{τAₙ}·L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpMode {
    Dense,
    Krylov,
}

impl FromStr for ExpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" => Ok(ExpMode::Dense),
            "krylov" => Ok(ExpMode::Krylov),
            _ => Err(Error::Config(format!("unknown exponential mode {s:?}; expected dense or krylov"))),
        }
    }
}

impl fmt::Display for ExpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpMode::Dense => "dense",
            ExpMode::Krylov => "krylov",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub h: f64,
    pub t_end: f64,
    /// Quadrature of the low-rank φ-sums.
    pub rule: QuadratureRule,
    /// Compression tolerance; `None` means `n·ε`.
    pub tol: Option<f64>,
    pub krylov_m: usize,
    pub exp_mode: ExpMode,
    /// Evaluation of the dense Erow3 φ₃ term.
    pub phi_route: PhiRoute,
    /// Keep every `thin`-th state (the last one is always kept).
    pub thin: usize,
    /// Record symmetry and smallest-eigenvalue diagnostics of dense states.
    pub monitor: bool,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, h: f64, t_end: f64) -> Self {
        Self {
            scheme,
            h,
            t_end,
            rule: QuadratureRule::default(),
            tol: None,
            krylov_m: DEFAULT_STEPS,
            exp_mode: ExpMode::Dense,
            phi_route: PhiRoute::Augmented,
            thin: 1,
            monitor: true,
        }
    }

    pub fn compression_tol(&self, n: usize) -> f64 {
        self.tol.unwrap_or(n as f64 * f64::EPSILON)
    }

    /// Number of steps of the fixed grid.
    pub fn steps(&self) -> Result<usize> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Config(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("final time must be ≥ 0, got {}", self.t_end)));
        }
        let ratio = self.t_end / self.h;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::Config(format!(
                "t_end = {} is not a whole number of steps h = {}",
                self.t_end, self.h
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thinning must be ≥ 1".into()));
        }
        if self.krylov_m == 0 {
            return Err(Error::Config("Krylov steps must be ≥ 1".into()));
        }
        if let Some(tol) = self.tol {
            if !(tol >= 0.0) {
                return Err(Error::Config(format!("compression tolerance must be ≥ 0, got {tol}")));
            }
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Dense(RealMatrix),
    LowRank(LdlFactor),
}

impl State {
    pub fn to_dense(&self) -> RealMatrix {
        match self {
            State::Dense(x) => x.clone(),
            State::LowRank(f) => f.to_dense(),
        }
    }

    pub fn norm_fro(&self) -> f64 {
        match self {
            State::Dense(x) => x.norm(),
            State::LowRank(f) => f.norm_fro(),
        }
    }

    /// Factor width for low-rank states.
    pub fn rank(&self) -> Option<usize> {
        match self {
            State::Dense(_) => None,
            State::LowRank(f) => Some(f.width()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub rank: Option<usize>,
    pub wall_seconds: f64,
    /// Columns removed by compression during the step.
    pub dropped: usize,
    /// `‖X − Xᵀ‖_F / ‖X‖_F` (dense symmetric runs with monitoring on).
    pub asymmetry: Option<f64>,
    /// Smallest eigenvalue of the symmetric part of `X`.
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// One entry per step taken.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }
}

/// A step failed; the trajectory up to that point is kept.
#[derive(Debug)]
pub struct IntegrationFailure {
    /// 1-based index of the step that failed.
    pub step: usize,
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} failed: {}", self.step, self.error)
    }
}

impl std::error::Error for IntegrationFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Fixed-step integration of `p` on `[0, t_end]`.
pub fn integrate(
    p: &RiccatiProblem,
    cfg: &IntegratorConfig,
) -> std::result::Result<Trajectory, Box<IntegrationFailure>> {
    let fail = |step, error, partial| Box::new(IntegrationFailure { step, error, partial });
    let empty = Trajectory {
        times: vec![0.0],
        states: vec![],
        diagnostics: vec![],
    };
    let steps = match cfg.steps() {
        Ok(s) => s,
        Err(e) => return Err(fail(0, e, empty)),
    };

    let mut state = if cfg.scheme.is_lowrank() {
        match p.lowrank() {
            Some(data) => match LdlFactor::new(data.l0.clone(), data.d0.clone()) {
                Ok(f) => State::LowRank(f),
                Err(e) => return Err(fail(0, e, empty)),
            },
            None => {
                let e = Error::Config(format!(
                    "{} needs a symmetric problem with generators C, B",
                    cfg.scheme
                ));
                return Err(fail(0, e, empty));
            }
        }
    } else {
        State::Dense(p.x0().clone())
    };

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state.clone()],
        diagnostics: Vec::with_capacity(steps),
    };
    let monitor = cfg.monitor && p.is_symmetric();
    for i in 1..=steps {
        let started = Instant::now();
        let result = advance(p, &state, cfg);
        let (next, dropped) = match result {
            Ok(v) => v,
            Err(e) => return Err(fail(i, e, traj)),
        };
        let wall_seconds = started.elapsed().as_secs_f64();
        let (asym, min_eig) = match (&next, monitor) {
            (State::Dense(x), true) => (Some(asymmetry(x)), Some(min_sym_eigenvalue(x))),
            (State::LowRank(f), true) => (Some(0.0), Some(lowrank_min_eigenvalue(f))),
            _ => (None, None),
        };
        traj.diagnostics.push(StepDiagnostics {
            rank: next.rank(),
            wall_seconds,
            dropped,
            asymmetry: asym,
            min_eigenvalue: min_eig,
        });
        state = next;
        if i % cfg.thin == 0 || i == steps {
            let t = if i == steps { cfg.t_end } else { i as f64 * cfg.h };
            traj.times.push(t);
            traj.states.push(state.clone());
        }
    }
    Ok(traj)
}

fn advance(p: &RiccatiProblem, state: &State, cfg: &IntegratorConfig) -> Result<(State, usize)> {
    let h = cfg.h;
    match (cfg.scheme, state) {
        (Scheme::GExpEuler, State::Dense(x)) => Ok((State::Dense(step_expeuler_general(p, x, h)?), 0)),
        (Scheme::BrExpEuler, State::Dense(x)) => Ok((State::Dense(step_expeuler_backward(p, x, h)?), 0)),
        (Scheme::Erow3Dense, State::Dense(x)) => {
            Ok((State::Dense(step_erow3_dense(p, x, h, &cfg.phi_route)?), 0))
        }
        (Scheme::LrExpEuler, State::LowRank(f)) => {
            let s = step_expeuler_lowrank(p, f, h, cfg)?;
            Ok((State::LowRank(s.x), s.dropped))
        }
        (Scheme::Erow3LowRank, State::LowRank(f)) => {
            let s = step_erow3_lowrank(p, f, h, cfg)?;
            Ok((State::LowRank(s.x), s.dropped))
        }
        (scheme, _) => Err(Error::Config(format!("state kind does not match scheme {scheme}"))),
    }
}

/// Smallest eigenvalue of `L·D·Lᵀ` (zero when `L` does not span the space).
fn lowrank_min_eigenvalue(f: &LdlFactor) -> f64 {
    if f.width() == 0 {
        return 0.0;
    }
    // Eigenvalues of L·D·Lᵀ are those of R·D·Rᵀ for L = Q·R, plus zeros.
    let r = f.l().clone().qr().r();
    let core = &r * f.d() * r.transpose();
    let lam = min_sym_eigenvalue(&core);
    if f.width() < f.dim() {
        lam.min(0.0)
    } else {
        lam
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemSpec;

    fn tanh_error(scheme: Scheme, h: f64) -> f64 {
        let p = ProblemSpec::ScalarTanh.build(0).unwrap();
        let traj = integrate(&p, &IntegratorConfig::new(scheme, h, 1.0)).unwrap();
        (traj.final_state().to_dense()[(0, 0)] - 1f64.tanh()).abs()
    }

    #[test]
    fn config_validation() {
        let mut c = IntegratorConfig::new(Scheme::GExpEuler, 0.01, 1.0);
        assert_eq!(c.steps().unwrap(), 100);
        c.h = 0.3;
        assert!(matches!(c.steps(), Err(Error::Config(_))));
        c.h = -0.1;
        assert!(c.steps().is_err());
        c.h = 0.1;
        c.t_end = 0.0;
        assert_eq!(c.steps().unwrap(), 0);
        assert_eq!(c.compression_tol(64), 64.0 * f64::EPSILON);
        assert_eq!("lrexpeuler".parse::<Scheme>().unwrap(), Scheme::LrExpEuler);
        assert!(matches!("rk4".parse::<Scheme>(), Err(Error::Config(_))));
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
    }

    #[test]
    fn zero_final_time_keeps_initial_value() {
        let p = ProblemSpec::ScalarTanh.build(0).unwrap();
        let traj = integrate(&p, &IntegratorConfig::new(Scheme::GExpEuler, 0.1, 0.0)).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.states.len(), 1);
        assert!(traj.diagnostics.is_empty());
    }

    #[test]
    fn tanh_accuracy_and_grid() {
        let p = ProblemSpec::ScalarTanh.build(0).unwrap();
        let traj = integrate(&p, &IntegratorConfig::new(Scheme::GExpEuler, 0.01, 1.0)).unwrap();
        assert_eq!(traj.times.len(), 101);
        assert_eq!(traj.final_time(), 1.0);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        let x = traj.final_state().to_dense()[(0, 0)];
        assert!((x - 0.76159416).abs() < 5e-4);
    }

    #[test]
    fn observed_orders() {
        let hs = [0.1, 0.05, 0.025];
        for (scheme, lo, hi) in [(Scheme::GExpEuler, 1.8, 2.2), (Scheme::Erow3Dense, 2.7, 3.3)] {
            let errs: Vec<f64> = hs.iter().map(|&h| tanh_error(scheme, h)).collect();
            for w in errs.windows(2) {
                let slope = (w[0] / w[1]).log2();
                assert!((lo..=hi).contains(&slope), "{scheme}: slope {slope} from {errs:?}");
            }
        }
    }

    #[test]
    fn thinning_keeps_last_state() {
        let p = ProblemSpec::ScalarTanh.build(0).unwrap();
        let mut c = IntegratorConfig::new(Scheme::Erow3Dense, 0.1, 1.0);
        c.thin = 3;
        let traj = integrate(&p, &c).unwrap();
        assert_eq!(traj.times.len(), 1 + 3 + 1);
        assert_eq!(traj.final_time(), 1.0);
        assert_eq!(traj.diagnostics.len(), 10);
    }

    #[test]
    fn failures_carry_step_and_partial_trajectory() {
        // BrExpEuler on the tanh problem: Sₙ = −2xₙ is singular at x₀ = 0.
        let p = ProblemSpec::ScalarTanh.build(0).unwrap();
        let err = integrate(&p, &IntegratorConfig::new(Scheme::BrExpEuler, 0.1, 1.0)).unwrap_err();
        assert_eq!(err.step, 1);
        assert!(matches!(err.error, Error::Solvability { .. }));
        assert_eq!(err.partial.states.len(), 1);

        let err = integrate(&p, &IntegratorConfig::new(Scheme::LrExpEuler, 0.1, 1.0)).unwrap_err();
        assert!(matches!(err.error, Error::Config(_)));
    }

    #[test]
    fn lowrank_run_reports_ranks() {
        let p = ProblemSpec::FdmSym { k: 4 }.build(3).unwrap();
        let mut c = IntegratorConfig::new(Scheme::LrExpEuler, 0.05, 0.2);
        c.exp_mode = ExpMode::Krylov;
        let traj = integrate(&p, &c).unwrap();
        assert_eq!(traj.diagnostics.len(), 4);
        assert!(traj.diagnostics.iter().all(|d| d.rank.unwrap() <= 16));
        let x = traj.final_state().to_dense();
        let lam = traj.diagnostics.last().unwrap().min_eigenvalue.unwrap();
        assert!((lam - min_sym_eigenvalue(&x)).abs() < 1e-12 * x.norm());
        let dense = integrate(&p, &IntegratorConfig::new(Scheme::GExpEuler, 0.05, 0.2)).unwrap();
        let diff = crate::dense::rel_diff(&traj.final_state().to_dense(), &dense.final_state().to_dense());
        assert!(diff < 1e-6, "{diff}");
    }
}
