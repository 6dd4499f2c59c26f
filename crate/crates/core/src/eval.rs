//! Ground-truth error metrics, residual forms and the ranking and
//! closed-form studies built on them.

use std::str::FromStr;

use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::dataset::PosePairSet;
use crate::error::{Error, Result};
use crate::se3::{Pose, PI_MARGIN};
use crate::solvers::{l_hed_solve, CalibEstimate, ClosedForm, SolverConfig};
use crate::synth::euler_from_rotation;

/// Rotation error in rad, translation error in m, and their sum scaled by
/// 100. The sum mixes units on purpose; the parts are always reported too.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    pub err_r: f64,
    pub err_t: f64,
    pub err_total: f64,
}

impl ErrorTriple {
    pub fn new(err_r: f64, err_t: f64) -> Self {
        ErrorTriple { err_r, err_t, err_total: (err_r + err_t) * 100.0 }
    }

    /// Error of one pose against its truth.
    pub fn between(est: &Pose, truth: &Pose) -> Self {
        let (angle, _) = (est.r.inverse() * truth.r).axis_angle();
        ErrorTriple::new(angle, (est.t - truth.t).norm())
    }

    /// Componentwise mean; `None` for an empty batch.
    pub fn mean(batch: &[ErrorTriple]) -> Option<Self> {
        if batch.is_empty() {
            return None;
        }
        let n = batch.len() as f64;
        let r = batch.iter().map(|e| e.err_r).sum::<f64>() / n;
        let t = batch.iter().map(|e| e.err_t).sum::<f64>() / n;
        Some(ErrorTriple { err_r: r, err_t: t, err_total: batch.iter().map(|e| e.err_total).sum::<f64>() / n })
    }
}

/// Errors of `(X, Y)` estimates against the truth.
pub fn estimation_errors(est: (&Pose, &Pose), truth: (&Pose, &Pose)) -> (ErrorTriple, ErrorTriple) {
    (ErrorTriple::between(est.0, truth.0), ErrorTriple::between(est.1, truth.1))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorVariance {
    pub var_r: f64,
    pub var_t: f64,
    pub var_total: f64,
}

/// Unbiased sample variances of each component.
pub fn error_variance(errors: &[ErrorTriple]) -> Result<ErrorVariance> {
    if errors.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: errors.len() });
    }
    let var = |f: fn(&ErrorTriple) -> f64| {
        let n = errors.len() as f64;
        let m = errors.iter().map(f).sum::<f64>() / n;
        errors.iter().map(|e| (f(e) - m).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Ok(ErrorVariance {
        var_r: var(|e| e.err_r),
        var_t: var(|e| e.err_t),
        var_total: var(|e| e.err_total),
    })
}

/// Representation in which `AᵢX` and `YBᵢ` are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualForm {
    Htm,
    PosEuler,
    DualQuat,
    LieAlgebra,
    AxisAngle,
}

impl ResidualForm {
    pub const ALL: [ResidualForm; 5] = [
        ResidualForm::Htm,
        ResidualForm::PosEuler,
        ResidualForm::DualQuat,
        ResidualForm::LieAlgebra,
        ResidualForm::AxisAngle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ResidualForm::Htm => "htm",
            ResidualForm::PosEuler => "pos-euler",
            ResidualForm::DualQuat => "dual-quat",
            ResidualForm::LieAlgebra => "lie-algebra",
            ResidualForm::AxisAngle => "axis-angle",
        }
    }
}

impl std::fmt::Display for ResidualForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResidualForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let alias = match s.as_str() {
            "lie" => "lie-algebra",
            "dq" => "dual-quat",
            "euler" => "pos-euler",
            other => other,
        };
        ResidualForm::ALL
            .into_iter()
            .find(|f| f.name() == alias)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown residual form {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub form: ResidualForm,
    pub value: f64,
    /// Pairs left out because the representation is singular there.
    pub skipped: Vec<usize>,
}

/// Pitch beyond which the Euler angles lose a degree of freedom.
const GIMBAL_MARGIN: f64 = 1e-6;

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

fn near_half_turn(p: &Pose) -> bool {
    p.r.axis_angle().0 > std::f64::consts::PI - PI_MARGIN
}

fn rotation_vector(p: &Pose) -> Vector3<f64> {
    let (theta, k) = p.r.axis_angle();
    k * theta
}

fn dual_quaternion(p: &Pose) -> DVector<f64> {
    let q = *UnitQuaternion::from_matrix(p.r.matrix()).quaternion();
    let d = nalgebra::Quaternion::from_parts(0.0, p.t) * q * 0.5;
    DVector::from_column_slice(&[q.w, q.i, q.j, q.k, d.w, d.i, d.j, d.k])
}

/// Discrepancy between `AX` and `YB` in one form, or `None` when the form
/// is singular for this pair.
fn pair_residual(ax: &Pose, yb: &Pose, form: ResidualForm) -> Option<f64> {
    match form {
        ResidualForm::Htm => Some((ax.homogeneous() - yb.homogeneous()).norm()),
        ResidualForm::PosEuler => {
            let (ea, eb) = (euler_from_rotation(&ax.r), euler_from_rotation(&yb.r));
            let limit = std::f64::consts::FRAC_PI_2 - GIMBAL_MARGIN;
            if ea.y.abs() > limit || eb.y.abs() > limit {
                return None;
            }
            let de = (ea - eb).map(wrap_angle);
            Some(((ax.t - yb.t).norm_squared() + de.norm_squared()).sqrt())
        }
        ResidualForm::DualQuat => {
            let (qa, mut qb) = (dual_quaternion(ax), dual_quaternion(yb));
            if qa.rows(0, 4).dot(&qb.rows(0, 4)) < 0.0 {
                qb = -qb;
            }
            Some((qa - qb).norm())
        }
        ResidualForm::LieAlgebra => {
            let d = yb.inverse() * *ax;
            if near_half_turn(&d) {
                return None;
            }
            Some(d.log().ok()?.to_vector().norm())
        }
        ResidualForm::AxisAngle => {
            if near_half_turn(ax) || near_half_turn(yb) {
                return None;
            }
            let dr = rotation_vector(ax) - rotation_vector(yb);
            Some((dr.norm_squared() + (ax.t - yb.t).norm_squared()).sqrt())
        }
    }
}

/// Mean discrepancy between `AᵢX` and `YBᵢ` over the pairs. Components of
/// the non-matrix forms are concatenated without weighting.
pub fn residual(pairs: &PosePairSet, x: &Pose, y: &Pose, form: ResidualForm) -> Result<Residual> {
    pairs.require(1)?;
    let mut skipped = Vec::new();
    let mut sum = 0.0;
    for (i, p) in pairs.pairs.iter().enumerate() {
        match pair_residual(&(p.a * *x), &(*y * p.b), form) {
            Some(v) => sum += v,
            None => skipped.push(i),
        }
    }
    let used = pairs.len() - skipped.len();
    if used == 0 {
        return Err(Error::TooManySkipped { skipped: skipped.len(), total: pairs.len() });
    }
    Ok(Residual { form, value: sum / used as f64, skipped })
}

/// Fraction of index pairs ordered the same way by `scores` and by
/// `truth`. A tie on either side counts one half.
pub fn kendall_agreement(scores: &[f64], truth: &[f64]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidArgument("score and truth lengths differ".into()));
    }
    let n = scores.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut agree = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = (scores[i] - scores[j]).signum() * (truth[i] - truth[j]).signum();
            agree += if scores[i] == scores[j] || truth[i] == truth[j] {
                0.5
            } else if s > 0.0 {
                1.0
            } else {
                0.0
            };
        }
    }
    Ok(agree / (n * (n - 1) / 2) as f64)
}

/// Combined true error used to rank estimates: `Err_T(X) + Err_T(Y)`.
pub fn combined_error(est: (&Pose, &Pose), truth: (&Pose, &Pose)) -> f64 {
    let (ex, ey) = estimation_errors(est, truth);
    ex.err_total + ey.err_total
}

/// How well ranking the estimates by their residual in `form` reproduces
/// their ranking by true error.
pub fn ranking_fidelity(
    estimates: &[(Pose, Pose)],
    truth: (&Pose, &Pose),
    pairs: &PosePairSet,
    form: ResidualForm,
) -> Result<f64> {
    let scores = estimates
        .iter()
        .map(|(x, y)| residual(pairs, x, y, form).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let errs: Vec<f64> = estimates.iter().map(|(x, y)| combined_error((x, y), truth)).collect();
    kendall_agreement(&scores, &errs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRun {
    pub form: ClosedForm,
    pub estimate: CalibEstimate,
}

/// One L-HED run per closed form from the same init and seed.
pub fn closed_form_study(
    pairs: &PosePairSet,
    init: (&Pose, &Pose),
    cfg: &SolverConfig,
) -> Result<Vec<ClosedFormRun>> {
    ClosedForm::CONCRETE
        .into_iter()
        .map(|form| {
            let cfg = SolverConfig { closed_form: form, ..cfg.clone() };
            Ok(ClosedFormRun { form, estimate: l_hed_solve(pairs, init.0, init.1, &cfg, None)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PosePair;
    use crate::se3::Rotation;

    fn pose(phi: [f64; 3], t: [f64; 3]) -> Pose {
        Pose::new(Rotation::exp(&Vector3::from(phi)), Vector3::from(t))
    }

    #[test]
    fn identical_poses_have_zero_error() {
        let p = pose([0.3, -0.2, 1.0], [1.0, 2.0, 3.0]);
        assert_eq!(ErrorTriple::between(&p, &p), ErrorTriple::new(0.0, 0.0));
    }

    #[test]
    fn rotation_error_is_geodesic() {
        let t = pose([0.3, -0.2, 1.0], [1.0, 2.0, 3.0]);
        let e = Pose::new(t.r * Rotation::rot_z(0.01), t.t);
        let err = ErrorTriple::between(&e, &t);
        assert!((err.err_r - 0.01).abs() < 1e-12);
        assert_eq!(err.err_t, 0.0);
        assert!((err.err_total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn variance_by_hand() {
        let v = error_variance(&[ErrorTriple::new(0.0, 0.0), ErrorTriple::new(2.0, 2.0)]).unwrap();
        assert_eq!((v.var_r, v.var_t), (2.0, 2.0));
        assert!((v.var_total - 80000.0).abs() < 1e-6);
        let same = error_variance(&[ErrorTriple::new(1.0, 1.0); 4]).unwrap();
        assert_eq!(same, ErrorVariance::default());
        assert!(matches!(
            error_variance(&[ErrorTriple::default()]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn htm_residual_on_identity_motion() {
        let x = pose([0.1, 0.2, 0.3], [0.1, 0.0, 0.2]);
        let pairs = PosePairSet::new(vec![PosePair::new(Pose::identity(), Pose::identity()); 3]);
        let r = residual(&pairs, &x, &x, ResidualForm::Htm).unwrap();
        assert_eq!(r.value, 0.0);
        let y = Pose::new(x.r * Rotation::rot_z(0.1), x.t);
        assert!(residual(&pairs, &x, &y, ResidualForm::Htm).unwrap().value > 0.0);
    }

    #[test]
    fn lie_residual_skips_half_turns() {
        let pairs = PosePairSet::new(vec![
            PosePair::new(Pose::from_rotation(Rotation::rot_x(std::f64::consts::PI)), Pose::identity()),
            PosePair::new(Pose::identity(), Pose::identity()),
        ]);
        let r = residual(&pairs, &Pose::identity(), &Pose::identity(), ResidualForm::LieAlgebra).unwrap();
        assert_eq!(r.skipped, vec![0]);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn kendall_extremes_and_ties() {
        assert_eq!(kendall_agreement(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(kendall_agreement(&[3.0, 2.0, 1.0], &[10.0, 20.0, 30.0]).unwrap(), 0.0);
        assert_eq!(kendall_agreement(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn form_names_round_trip() {
        for f in ResidualForm::ALL {
            assert_eq!(f.name().parse::<ResidualForm>().unwrap(), f);
        }
        assert!("quux".parse::<ResidualForm>().is_err());
    }
}
