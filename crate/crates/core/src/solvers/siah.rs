use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use super::{CalibEstimate, Method, SolverConfig};
use crate::dataset::{
    correspondence_filter, make_relative_pairs, se3_mean, PosePairSet, RelativePair, MEAN_MAX_ITER,
    MEAN_TOL,
};
use crate::error::{Error, Result};
use crate::se3::{screw_decompose, skew, Pose, Rotation};

struct Motion {
    /// `θ k` of the robot and camera relative motions.
    alpha_a: Vector3<f64>,
    alpha_b: Vector3<f64>,
    ra: Matrix3<f64>,
    ta: Vector3<f64>,
    tb: Vector3<f64>,
}

fn motions(rel: &[RelativePair]) -> Vec<Motion> {
    rel.iter()
        .filter_map(|rp| {
            let (sa, sb) = (screw_decompose(&rp.a), screw_decompose(&rp.b));
            if sa.degenerate || sb.degenerate {
                return None;
            }
            Some(Motion {
                alpha_a: sa.k * sa.theta,
                alpha_b: sb.k * sb.theta,
                ra: *rp.a.r.matrix(),
                ta: rp.a.t,
                tb: rp.b.t,
            })
        })
        .collect()
}

/// Orthogonal Procrustes fit of `α_A = R α_B` over all motions.
fn rotation_fit(m: &[Motion]) -> Result<Rotation> {
    let corr: Matrix3<f64> = m.iter().map(|s| s.alpha_a * s.alpha_b.transpose()).sum();
    let svd = corr.svd(true, true);
    let sv = svd.singular_values;
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    if !(sv[order[1]] > 1e-9 * sv[order[0]]) {
        return Err(Error::RankDeficientMotion("relative rotation axes are parallel".into()));
    }
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let d = (u * vt).determinant().signum();
    let mut fix = Matrix3::identity();
    fix[(order[2], order[2])] = d;
    Ok(Rotation::from_matrix_unchecked(u * fix * vt))
}

/// Least-squares `t_X` from `(R_a − I) t_X = R_X t_b − t_a` stacked over
/// the motions.
fn translation_stacked(m: &[Motion], rx: &Matrix3<f64>) -> Vector3<f64> {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for s in m {
        let a = s.ra - Matrix3::identity();
        ata += a.transpose() * a;
        atb += a.transpose() * (rx * s.tb - s.ta);
    }
    ata.try_inverse().map(|i| i * atb).unwrap_or_else(Vector3::zeros)
}

/// `t_X` from the mean relative motions: `(I − R_Ma) t_X = t_Ma − R_X t_Mb`.
/// The system is singular along the mean rotation axis; the minimum-norm
/// solution is taken and the refinement fixes the remaining component.
fn translation_from_means(rel: &[RelativePair], rx: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let a: Vec<Pose> = rel.iter().map(|r| r.a).collect();
    let b: Vec<Pose> = rel.iter().map(|r| r.b).collect();
    let ma = se3_mean(&a, MEAN_TOL, MEAN_MAX_ITER).ok()?;
    let mb = se3_mean(&b, MEAN_TOL, MEAN_MAX_ITER).ok()?;
    let lhs = Matrix3::identity() - ma.mean.r.matrix();
    let rhs = ma.mean.t - rx * mb.mean.t;
    let t = lhs.svd(true, true).solve(&rhs, 1e-9 * lhs.norm()).ok()?;
    t.iter().all(|v| v.is_finite()).then_some(t)
}

fn cost(m: &[Motion], r: &Matrix3<f64>, t: &Vector3<f64>) -> f64 {
    m.iter()
        .map(|s| {
            let er = r * s.alpha_b - s.alpha_a;
            let et = s.ra * t + s.ta - r * s.tb - t;
            er.norm_squared() + et.norm_squared()
        })
        .sum()
}

/// Normal equations of the stacked residuals for `R ← R exp(δω)`,
/// `t ← t + δt`.
fn normal_equations(m: &[Motion], r: &Matrix3<f64>, t: &Vector3<f64>) -> (Matrix6<f64>, Vector6<f64>) {
    let mut jtj = Matrix6::zeros();
    let mut jtr = Vector6::zeros();
    for s in m {
        let er = r * s.alpha_b - s.alpha_a;
        let et = s.ra * t + s.ta - r * s.tb - t;
        let jr_w = -r * skew(&s.alpha_b);
        let jt_w = r * skew(&s.tb);
        let jt_t = s.ra - Matrix3::identity();
        let mut j = nalgebra::SMatrix::<f64, 6, 6>::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&jr_w);
        j.fixed_view_mut::<3, 3>(3, 0).copy_from(&jt_w);
        j.fixed_view_mut::<3, 3>(3, 3).copy_from(&jt_t);
        let mut res = Vector6::zeros();
        res.fixed_rows_mut::<3>(0).copy_from(&er);
        res.fixed_rows_mut::<3>(3).copy_from(&et);
        jtj += j.transpose() * j;
        jtr += j.transpose() * res;
    }
    (jtj, jtr)
}

/// Screw-axis initial solver with Levenberg-Marquardt refinement of `X`.
pub fn si_ah_solve(pairs: &PosePairSet, cfg: &SolverConfig) -> Result<CalibEstimate> {
    cfg.validate()?;
    pairs.require(3)?;
    let rel = make_relative_pairs(pairs, cfg.pairing)?;
    let (kept, _) = correspondence_filter(&rel, cfg.filter_eps_theta, cfg.filter_eps_h)?;
    let m = motions(&kept.rel_pairs);
    if m.len() < 2 {
        return Err(Error::RankDeficientMotion("fewer than two rotating relative motions".into()));
    }
    let mut r = rotation_fit(&m)?;
    let mut t = translation_from_means(&kept.rel_pairs, r.matrix())
        .unwrap_or_else(|| translation_stacked(&m, r.matrix()));

    let mut f = cost(&m, r.matrix(), &t);
    let mut lambda = cfg.lm_lambda0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.lm_max_iter {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&m, r.matrix(), &t);
        let mut accepted = false;
        while !accepted {
            let h = jtj + Matrix6::identity() * lambda;
            let Some(delta) = h.cholesky().map(|c| -c.solve(&jtr)) else {
                lambda = (lambda * cfg.lm_mu).min(cfg.lm_lambda_max);
                continue;
            };
            let rn = r * Rotation::exp(&delta.fixed_rows::<3>(0).into_owned());
            let tn = t + delta.fixed_rows::<3>(3);
            let fnew = cost(&m, rn.matrix(), &tn);
            if fnew < f {
                let df = f - fnew;
                r = rn;
                t = tn;
                f = fnew;
                lambda = (lambda / cfg.lm_mu).max(cfg.lm_lambda_min);
                accepted = true;
                if df < cfg.lm_tol || delta.norm() < 1e-15 {
                    converged = true;
                }
            } else if lambda >= cfg.lm_lambda_max {
                // No descent direction left at the largest damping.
                converged = true;
                break;
            } else {
                lambda = (lambda * cfg.lm_mu).min(cfg.lm_lambda_max);
            }
        }
        if converged {
            break;
        }
    }

    let x = Pose::new(r, t);
    let ma = se3_mean(&pairs.a_poses(), MEAN_TOL, MEAN_MAX_ITER)?;
    let mb = se3_mean(&pairs.b_poses(), MEAN_TOL, MEAN_MAX_ITER)?;
    let y = ma.mean * x * mb.mean.inverse();
    Ok(CalibEstimate {
        method: Method::SiAh,
        x,
        y,
        iterations,
        solution_iteration: iterations,
        objective: f,
        trace: Vec::new(),
        escapes: Vec::new(),
        checkpoints: Vec::new(),
        converged,
        closed_form: None,
    })
}
