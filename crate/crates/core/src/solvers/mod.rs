//! Solvers for `A X = Y B`.
//!
//! * [`si_ah_solve`]: screw-axis SVD rotation, mean-based translation and a
//!   Levenberg-Marquardt refinement of `X`; `Y` follows from the set means.
//! * [`l_hed_solve`]: synchronized descent on `(X, Y)` in the Lie algebra
//!   with a Mahalanobis objective and random escapes from local optima.
//! * [`ual_hed_solve`]: the same descent with per-pair corrections from the
//!   relative-uncertainty model.
//! * [`dq_solve`], [`kron_solve`]: classical closed-form baselines.

mod closed_form;
mod dq;
mod kron;
mod lhed;
mod siah;

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use closed_form::{closed_form_error, closed_form_jacobians, ClosedForm};
pub use dq::dq_solve;
pub use kron::kron_solve;
pub use lhed::{heuristic_metric, l_hed_solve, objective, transport_corrections, ual_hed_solve};
pub use siah::si_ah_solve;

use crate::dataset::{Pairing, PosePairSet};
use crate::error::{Error, Result};
use crate::se3::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SiAh,
    LHed,
    UalHed,
    Dq,
    Kron,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::SiAh, Method::LHed, Method::UalHed, Method::Dq, Method::Kron];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SiAh => "si-ah",
            Method::LHed => "l-hed",
            Method::UalHed => "ual-hed",
            Method::Dq => "dq",
            Method::Kron => "kron",
        }
    }

    pub fn is_iterative(&self) -> bool {
        matches!(self, Method::LHed | Method::UalHed)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "kp" => Ok(Method::Kron),
            _ => Method::ALL
                .iter()
                .find(|m| m.name() == s)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Step length as a fraction of the Gauss-Newton-scaled gradient.
    pub alpha: f64,
    /// Momentum factor.
    pub beta: f64,
    /// Stop when the norm of the twist update falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations after an escape during which the gradient is perturbed.
    pub escape_stall_window: usize,
    /// Gradient perturbation half-width relative to the gradient norm.
    pub escape_scale: f64,
    /// Largest rotation angle (rad) of an escape kick.
    pub escape_kick: f64,
    /// Consecutive rejected escapes after which the solver stops.
    pub max_failed_escapes: usize,
    pub closed_form: ClosedForm,
    pub seed: u64,
    /// Iterations between refreshes of the residual covariance.
    pub cov_refresh: usize,
    /// Ridge added to the residual variances.
    pub cov_epsilon: f64,
    /// Keep every k-th iteration in the returned trace.
    pub trace_every: usize,
    pub lm_lambda0: f64,
    pub lm_mu: f64,
    pub lm_lambda_min: f64,
    pub lm_lambda_max: f64,
    pub lm_max_iter: usize,
    pub lm_tol: f64,
    pub filter_eps_theta: f64,
    pub filter_eps_h: f64,
    pub pairing: Pairing,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 1e-2,
            beta: 0.9,
            tol: 1e-10,
            max_iter: 200_000,
            escape_stall_window: 200,
            escape_scale: 1e-3,
            escape_kick: std::f64::consts::PI,
            max_failed_escapes: 3,
            closed_form: ClosedForm::Auto,
            seed: 0,
            cov_refresh: 50,
            cov_epsilon: 1e-12,
            trace_every: 100,
            lm_lambda0: 1e-3,
            lm_mu: 10.0,
            lm_lambda_min: 1e-12,
            lm_lambda_max: 1e6,
            lm_max_iter: 200,
            lm_tol: 1e-18,
            filter_eps_theta: 0.05,
            filter_eps_h: 0.005,
            pairing: Pairing::Consecutive,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1)");
        }
        if !(self.escape_scale >= 0.0 && self.escape_kick >= 0.0) {
            return bad("escape_scale and escape_kick must be non-negative");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.lm_mu > 1.0) {
            return bad("lm_mu must exceed 1");
        }
        if !(self.lm_lambda_min > 0.0 && self.lm_lambda_min <= self.lm_lambda_max) {
            return bad("lm bounds must satisfy 0 < min <= max");
        }
        if self.cov_refresh == 0 || self.trace_every == 0 || self.escape_stall_window == 0 {
            return bad("cov_refresh, trace_every and escape_stall_window must be positive");
        }
        if !(self.filter_eps_theta > 0.0 && self.filter_eps_h > 0.0) {
            return bad("filter thresholds must be positive");
        }
        Ok(())
    }

    /// Reads a config from JSON or TOML, chosen by file extension. Missing
    /// keys take their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let cfg: SolverConfig = crate::dataset::read_structured(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub heuristic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibEstimate {
    pub method: Method,
    pub x: Pose,
    pub y: Pose,
    pub iterations: usize,
    /// Iteration at which the returned estimate was reached; the rest were
    /// spent on rejected escapes.
    #[serde(default)]
    pub solution_iteration: usize,
    /// Final objective. For the descent solvers this is the Mahalanobis
    /// objective recomputed at `(x, y)`; for SI-AH the L-M cost; zero for
    /// the closed-form baselines.
    pub objective: f64,
    pub trace: Vec<TracePoint>,
    pub escapes: Vec<usize>,
    /// Objective and heuristic of the retained estimate after each escape.
    #[serde(default)]
    pub checkpoints: Vec<TracePoint>,
    pub converged: bool,
    /// Error arrangement used by the descent solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
}

impl CalibEstimate {
    pub(crate) fn closed(method: Method, x: Pose, y: Pose) -> Self {
        CalibEstimate {
            method,
            x,
            y,
            iterations: 0,
            solution_iteration: 0,
            objective: 0.0,
            trace: Vec::new(),
            escapes: Vec::new(),
            checkpoints: Vec::new(),
            converged: true,
            closed_form: None,
        }
    }
}

/// Runs `method`. The descent solvers start from `init` when given and
/// from the SI-AH estimate otherwise.
pub fn solve(
    method: Method,
    pairs: &PosePairSet,
    cfg: &SolverConfig,
    init: Option<(Pose, Pose)>,
) -> Result<CalibEstimate> {
    let start = |cfg: &SolverConfig| -> Result<(Pose, Pose)> {
        match init {
            Some(i) => Ok(i),
            None => si_ah_solve(pairs, cfg).map(|e| (e.x, e.y)),
        }
    };
    match method {
        Method::SiAh => si_ah_solve(pairs, cfg),
        Method::Dq => dq_solve(pairs),
        Method::Kron => kron_solve(pairs),
        Method::LHed => {
            let (x, y) = start(cfg)?;
            l_hed_solve(pairs, &x, &y, cfg, None)
        }
        Method::UalHed => {
            let (x, y) = start(cfg)?;
            ual_hed_solve(pairs, &x, &y, cfg)
        }
    }
}
