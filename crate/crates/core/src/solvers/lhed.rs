//! Synchronized descent on `(ζ_X, ζ_Y)` with `X = exp(ζ_X)`, `Y = exp(ζ_Y)`.
//!
//! Each pair contributes the residual `log(e_n) − δe_n` where `e_n` is the
//! chosen closed-form product. Residuals are weighted by the inverse of their
//! per-component variance about the mean, frozen for `cov_refresh`
//! iterations. The momentum step is taken on the gradient scaled by the
//! Gauss-Newton matrix of the frozen objective, which makes `alpha` a
//! dimensionless fraction of a Gauss-Newton step.

use nalgebra::{Matrix6, SMatrix, SVector, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::closed_form::{closed_form_error, closed_form_jacobians, ClosedForm};
use super::{CalibEstimate, Method, SolverConfig, TracePoint};
use crate::dataset::PosePairSet;
use crate::error::{Error, Result};
use crate::se3::{left_jacobian_unchecked, Pose, Twist};
use crate::uncertainty::srm_metric;

/// Relative heuristic decrease an escape must achieve to be kept. Repeated
/// descents into the same optimum stop at slightly different points; this
/// keeps those from counting as improvements.
const ESCAPE_MIN_GAIN: f64 = 1e-3;

type Vec12 = SVector<f64, 12>;
type Mat12 = SMatrix<f64, 12, 12>;
type Jac = SMatrix<f64, 6, 12>;

struct Linearization {
    residuals: Vec<Vector6<f64>>,
    jacobians: Vec<Jac>,
    /// Mean raw `‖log e_n‖` over the used pairs.
    heuristic: f64,
    skipped: usize,
}

fn split(z: &Vec12) -> (Twist, Twist) {
    (
        Twist::from_vector(&z.fixed_rows::<6>(0).into_owned()),
        Twist::from_vector(&z.fixed_rows::<6>(6).into_owned()),
    )
}

fn linearize(
    pairs: &PosePairSet,
    z: &Vec12,
    form: ClosedForm,
    corrections: Option<&[Vector6<f64>]>,
    with_jacobians: bool,
) -> Linearization {
    let (zx, zy) = split(z);
    let (x, y) = (Pose::exp(&zx), Pose::exp(&zy));
    let (jlx, jly) = (left_jacobian_unchecked(&zx), left_jacobian_unchecked(&zy));
    let mut out = Linearization {
        residuals: Vec::with_capacity(pairs.len()),
        jacobians: Vec::new(),
        heuristic: 0.0,
        skipped: 0,
    };
    for (n, p) in pairs.pairs.iter().enumerate() {
        let (e, gx, gy) = closed_form_jacobians(&p.a, &p.b, &x, &y, form);
        let Ok(xi) = e.log() else {
            out.skipped += 1;
            continue;
        };
        let xv = xi.to_vector();
        out.heuristic += xv.norm();
        let r = match corrections {
            Some(c) => xv - c[n],
            None => xv,
        };
        out.residuals.push(r);
        if with_jacobians {
            let jinv = left_jacobian_unchecked(&xi)
                .try_inverse()
                .unwrap_or_else(Matrix6::identity);
            let mut j = Jac::zeros();
            j.fixed_columns_mut::<6>(0).copy_from(&(jinv * gx * jlx));
            j.fixed_columns_mut::<6>(6).copy_from(&(jinv * gy * jly));
            out.jacobians.push(j);
        }
    }
    let used = out.residuals.len();
    if used > 0 {
        out.heuristic /= used as f64;
    }
    out
}

/// Inverse per-component residual variances (about the residual mean,
/// normalized by `N − 1`), ridged by `eps`.
fn weights(residuals: &[Vector6<f64>], eps: f64) -> Vector6<f64> {
    let n = residuals.len();
    if n < 2 {
        return Vector6::repeat(1.0 / eps);
    }
    let mean = residuals.iter().sum::<Vector6<f64>>() / n as f64;
    let var = residuals
        .iter()
        .map(|r| (r - mean).component_mul(&(r - mean)))
        .sum::<Vector6<f64>>()
        / (n - 1) as f64;
    var.map(|v| 1.0 / (v + eps))
}

fn weighted_sum(residuals: &[Vector6<f64>], w: &Vector6<f64>) -> f64 {
    residuals.iter().map(|r| r.component_mul(r).dot(w)).sum()
}

fn check_skipped(lin: &Linearization, total: usize) -> Result<()> {
    if 2 * lin.skipped > total {
        return Err(Error::TooManySkipped { skipped: lin.skipped, total });
    }
    Ok(())
}

/// Mean `‖log e_n‖` over the pairs whose error product has a defined log.
pub fn heuristic_metric(pairs: &PosePairSet, x: &Pose, y: &Pose, form: ClosedForm) -> f64 {
    let logs: Vec<f64> = pairs
        .pairs
        .iter()
        .filter_map(|p| closed_form_error(&p.a, &p.b, x, y, form).log().ok())
        .map(|z| z.to_vector().norm())
        .collect();
    logs.iter().sum::<f64>() / logs.len().max(1) as f64
}

/// Mahalanobis objective at `(x, y)` with the residual variances evaluated
/// at the same point.
pub fn objective(
    pairs: &PosePairSet,
    x: &Pose,
    y: &Pose,
    form: ClosedForm,
    corrections: Option<&[Vector6<f64>]>,
    eps: f64,
) -> Result<f64> {
    let z = stack(x, y)?;
    let form = form.resolve(x, y);
    let lin = linearize(pairs, &z, form, corrections, false);
    check_skipped(&lin, pairs.len())?;
    Ok(weighted_sum(&lin.residuals, &weights(&lin.residuals, eps)))
}

fn stack(x: &Pose, y: &Pose) -> Result<Vec12> {
    let mut z = Vec12::zeros();
    z.fixed_rows_mut::<6>(0).copy_from(&x.log()?.to_vector());
    z.fixed_rows_mut::<6>(6).copy_from(&y.log()?.to_vector());
    Ok(z)
}

/// Brings each rotation vector back inside the ball of radius π so the
/// left Jacobians stay well conditioned.
fn wrap(z: &mut Vec12) {
    for off in [0, 6] {
        let t = Twist::from_vector(&z.fixed_rows::<6>(off).into_owned());
        if t.angle() > std::f64::consts::PI {
            if let Ok(w) = Pose::exp(&t).log() {
                z.fixed_rows_mut::<6>(off).copy_from(&w.to_vector());
            }
        }
    }
}

fn gauss_newton(lin: &Linearization, w: &Vector6<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Const<12>>> {
    let wm = Matrix6::from_diagonal(w);
    let mut h = Mat12::zeros();
    for j in &lin.jacobians {
        h += j.transpose() * wm * j;
    }
    h *= 2.0;
    let ridge = 1e-9 * h.trace() / 12.0 + f64::MIN_POSITIVE;
    for k in 0..12 {
        h[(k, k)] += ridge;
    }
    h.cholesky()
}

struct Problem<'a> {
    pairs: &'a PosePairSet,
    form: ClosedForm,
    corrections: Option<&'a [Vector6<f64>]>,
    cfg: &'a SolverConfig,
}

struct Run {
    trace: Vec<TracePoint>,
    iterations: usize,
}

/// A local optimum reached by one descent.
#[derive(Clone, Copy)]
struct Optimum {
    z: Vec12,
    heuristic: f64,
    converged: bool,
}

impl Problem<'_> {
    fn linearize(&self, z: &Vec12, with_jacobians: bool) -> Result<Linearization> {
        let lin = linearize(self.pairs, z, self.form, self.corrections, with_jacobians);
        check_skipped(&lin, self.pairs.len())?;
        Ok(lin)
    }

    /// Momentum descent from `z` until the step norm drops below `tol`, the
    /// descent stalls, the descent has used `budget` iterations, or the
    /// global budget runs out.
    ///
    /// A stall is a window of `escape_stall_window` iterations over which the
    /// heuristic gained less than [`ESCAPE_MIN_GAIN`] and the step norm did
    /// not halve. Regular convergence shrinks the step geometrically, so this
    /// only catches slow drift away from any optimum. For the first `noise_window`
    /// iterations the gradient carries a uniform perturbation of relative
    /// size `escape_scale`.
    fn descend(
        &self,
        mut z: Vec12,
        noise_window: usize,
        budget: usize,
        rng: &mut ChaCha8Rng,
        run: &mut Run,
    ) -> Result<Optimum> {
        let cfg = self.cfg;
        let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
        let mut v = Vec12::zeros();
        let mut w = Vector6::repeat(1.0);
        let mut chol = None;
        let mut local = 0;
        let mut window_start: Option<(f64, f64)> = None;
        while run.iterations < cfg.max_iter && local < budget {
            let lin = self.linearize(&z, true)?;
            let refresh = local % cfg.cov_refresh == 0;
            let traced = run.iterations.is_multiple_of(cfg.trace_every);
            if refresh || traced {
                let fresh = weights(&lin.residuals, cfg.cov_epsilon);
                if traced {
                    run.trace.push(TracePoint {
                        iteration: run.iterations,
                        objective: weighted_sum(&lin.residuals, &fresh),
                        heuristic: lin.heuristic,
                    });
                }
                if refresh {
                    w = fresh;
                    chol = gauss_newton(&lin, &w);
                }
            }
            let mut g = Vec12::zeros();
            for (r, j) in lin.residuals.iter().zip(&lin.jacobians) {
                g += j.transpose() * r.component_mul(&w);
            }
            g *= 2.0;
            if local < noise_window {
                let s = cfg.escape_scale * g.norm();
                g += Vec12::from_fn(|_, _| s * unit.sample(rng));
            }
            let p = match &chol {
                Some(c) => c.solve(&g),
                None => g,
            };
            v = cfg.beta * v + (1.0 - cfg.beta) * p;
            let delta = -cfg.alpha * v;
            z += delta;
            wrap(&mut z);
            run.iterations += 1;
            local += 1;
            if local % cfg.escape_stall_window == 0 {
                let now = (lin.heuristic, delta.norm());
                if let Some((tau0, d0)) = window_start {
                    if now.0 > tau0 * (1.0 - ESCAPE_MIN_GAIN) && now.1 > 0.5 * d0 {
                        return Ok(Optimum { z, heuristic: self.linearize(&z, false)?.heuristic, converged: false });
                    }
                }
                window_start = Some(now);
            }
            if delta.norm() < cfg.tol {
                let heuristic = self.linearize(&z, false)?.heuristic;
                return Ok(Optimum { z, heuristic, converged: true });
            }
        }
        let heuristic = self.linearize(&z, false)?.heuristic;
        Ok(Optimum { z, heuristic, converged: false })
    }

    /// Rotates both estimates by independent random rotations of angle up
    /// to `escape_kick`, keeping their translations.
    fn kick(&self, z: &Vec12, rng: &mut ChaCha8Rng) -> Vec12 {
        let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
        let mut out = *z;
        for off in [0, 6] {
            let axis = loop {
                let a = nalgebra::Vector3::from_fn(|_, _| unit.sample(rng));
                let n = a.norm();
                if n > 1e-3 && n <= 1.0 {
                    break a / n;
                }
            };
            let angle = self.cfg.escape_kick * 0.5 * (1.0 + unit.sample(rng));
            let cur = Pose::exp(&Twist::from_vector(&z.fixed_rows::<6>(off).into_owned()));
            let rot = Pose::from_rotation(crate::se3::Rotation::exp(&(axis * angle)));
            let kicked = Pose::new(rot.r * cur.r, cur.t);
            if let Ok(t) = kicked.log() {
                out.fixed_rows_mut::<6>(off).copy_from(&t.to_vector());
            }
        }
        out
    }
}

/// Descent from `(init_x, init_y)`. `corrections`, when given, holds one
/// 6-vector per pair subtracted from the log residual.
///
/// Once the descent settles in a local optimum the iterate is kicked by a
/// random rotation and the descent restarts. The new optimum replaces the
/// checkpoint only if it lowers the heuristic metric; otherwise the
/// checkpoint is kept. After `max_failed_escapes` consecutive rejections
/// the checkpoint is returned.
pub fn l_hed_solve(
    pairs: &PosePairSet,
    init_x: &Pose,
    init_y: &Pose,
    cfg: &SolverConfig,
    corrections: Option<&[Vector6<f64>]>,
) -> Result<CalibEstimate> {
    cfg.validate()?;
    pairs.require(3)?;
    if let Some(c) = corrections {
        if c.len() != pairs.len() {
            return Err(Error::InvalidArgument("correction count differs from pair count".into()));
        }
    }
    let form = cfg.closed_form.resolve(init_x, init_y);
    let method = if corrections.is_some() { Method::UalHed } else { Method::LHed };
    let problem = Problem { pairs, form, corrections, cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut run = Run { trace: Vec::new(), iterations: 0 };

    // A descent that crawls without meeting `tol` is cut short so the
    // escapes still get their share of the budget.
    let budget = (cfg.max_iter / (cfg.max_failed_escapes + 1)).max(cfg.escape_stall_window);
    let mut best = problem.descend(stack(init_x, init_y)?, 0, budget, &mut rng, &mut run)?;
    let mut solution_iteration = run.iterations;
    let mut escapes = Vec::new();
    let mut checkpoints = Vec::new();
    let mut failures = 0;
    while failures < cfg.max_failed_escapes && run.iterations < cfg.max_iter {
        escapes.push(run.iterations);
        let start = problem.kick(&best.z, &mut rng);
        let cand = problem.descend(start, cfg.escape_stall_window, budget, &mut rng, &mut run)?;
        let gain = if best.converged { ESCAPE_MIN_GAIN } else { 0.0 };
        if cand.heuristic < best.heuristic * (1.0 - gain) {
            best = cand;
            failures = 0;
            solution_iteration = run.iterations;
        } else {
            failures += 1;
        }
        checkpoints.push(TracePoint {
            iteration: run.iterations,
            objective: problem.objective_at(&best.z)?,
            heuristic: best.heuristic,
        });
    }

    let (zx, zy) = split(&best.z);
    let (x, y) = (Pose::exp(&zx), Pose::exp(&zy));
    let objective = problem.objective_at(&best.z)?;
    let mut trace = run.trace;
    if trace.last().is_none_or(|t| t.iteration != run.iterations) {
        let heuristic = problem.linearize(&best.z, false)?.heuristic;
        trace.push(TracePoint { iteration: run.iterations, objective, heuristic });
    }
    Ok(CalibEstimate {
        method,
        x,
        y,
        iterations: run.iterations,
        solution_iteration,
        objective,
        trace,
        escapes,
        checkpoints,
        converged: best.converged,
        closed_form: Some(form),
    })
}

impl Problem<'_> {
    fn objective_at(&self, z: &Vec12) -> Result<f64> {
        let lin = self.linearize(z, false)?;
        Ok(weighted_sum(&lin.residuals, &weights(&lin.residuals, self.cfg.cov_epsilon)))
    }
}

/// Moves corrections expressed as left perturbations of `Aᵢ` into the left
/// frame of the error product, evaluated at a fixed estimate.
pub fn transport_corrections(
    pairs: &PosePairSet,
    delta_e: &[Vector6<f64>],
    x: &Pose,
    y: &Pose,
    form: ClosedForm,
) -> Vec<Vector6<f64>> {
    let yi = y.inverse();
    pairs
        .pairs
        .iter()
        .zip(delta_e)
        .map(|(p, d)| match form.resolve(x, y) {
            ClosedForm::Cf1 => yi.adjoint() * d,
            ClosedForm::Cf2 => *d,
            ClosedForm::Cf3 => (*x * p.b.inverse() * yi).adjoint() * d,
            _ => (p.b.inverse() * yi).adjoint() * d,
        })
        .collect()
}

/// Computes the relative-uncertainty corrections and runs the descent
/// with them.
pub fn ual_hed_solve(
    pairs: &PosePairSet,
    init_x: &Pose,
    init_y: &Pose,
    cfg: &SolverConfig,
) -> Result<CalibEstimate> {
    let report = srm_metric(pairs)?;
    let form = cfg.closed_form.resolve(init_x, init_y);
    let corrections = transport_corrections(pairs, &report.delta_e, init_x, init_y, form);
    l_hed_solve(pairs, init_x, init_y, cfg, Some(&corrections))
}
