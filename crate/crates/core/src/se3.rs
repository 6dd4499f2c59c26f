//! Rigid-body transforms on SE(3) and their Lie algebra se(3).
//!
//! Twists are stored rotation-first, `[phi; rho]`, so that the adjoint
//! matrices have the block layout
//!
//! ```text
//! Ad(T) = | R       0 |      ad(zeta) = | [phi]x   0      |
//!         | [t]x R  R |                 | [rho]x   [phi]x |
//! ```
//!
//! Many robotics libraries use the opposite `[rho; phi]` order. Convert
//! explicitly with [`Twist::from_vector`] / [`Twist::to_vector`] when
//! exchanging data with them.
//!
//! The logarithm is defined on rotations with angle below `pi - PI_MARGIN`;
//! closer to a half turn the axis becomes ill-conditioned and the log map
//! reports [`Error::DegenerateRotation`] instead of picking a branch.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::Mul;

use crate::error::{Error, Result};

/// Below this rotation angle (rad) closed-form coefficients switch to Taylor series.
pub const ANGLE_EPS: f64 = 1e-4;

/// Rotations with angle above `pi - PI_MARGIN` are rejected by the log map.
pub const PI_MARGIN: f64 = 1e-6;

/// Orthonormality drift above which composed rotations are re-projected.
const RENORM_TOL: f64 = 1e-10;

/// 6×6 adjoint matrix (group or algebra).
pub type Adjoint6 = Matrix6<f64>;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn vee3(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// A 3×3 rotation matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps `m` after checking orthonormality and determinant to `tol`.
    pub fn from_matrix(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite rotation entry".into()));
        }
        let r = Rotation(m);
        let err = r.orthonormality_error();
        if err > tol || (m.determinant() - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "matrix is not a rotation (orthonormality error {err:.3e}, det {:.9})",
                m.determinant()
            )));
        }
        Ok(r)
    }

    /// Wraps `m` without validation. Callers guarantee `m` is in SO(3).
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    /// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
    pub fn project(m: &Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u");
        let v_t = svd.v_t.expect("svd v_t");
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < 0.0 {
            d[(2, 2)] = -1.0;
        }
        Rotation(u * d * v_t)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    pub fn rot_x(a: f64) -> Self {
        Self::exp(&Vector3::new(a, 0.0, 0.0))
    }

    pub fn rot_y(a: f64) -> Self {
        Self::exp(&Vector3::new(0.0, a, 0.0))
    }

    pub fn rot_z(a: f64) -> Self {
        Self::exp(&Vector3::new(0.0, 0.0, a))
    }

    /// Rodrigues' formula.
    pub fn exp(phi: &Vector3<f64>) -> Self {
        let theta = phi.norm();
        let k = skew(phi);
        let (a, b) = if theta < ANGLE_EPS {
            let t2 = theta * theta;
            (
                1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0,
                0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0,
            )
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
        };
        Rotation(Matrix3::identity() + a * k + b * k * k)
    }

    /// Rotation angle in `[0, pi]` and a unit axis. Stable over the whole
    /// range, including half turns. The axis is `(0, 0, 1)` for the identity.
    pub fn axis_angle(&self) -> (f64, Vector3<f64>) {
        let m = &self.0;
        let w = 0.5 * vee3(&(m - m.transpose()));
        let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let s = w.norm();
        let theta = s.atan2(c);
        if theta < 1e-12 {
            return (theta, Vector3::z());
        }
        if theta < 2.5 {
            return (theta, w / s);
        }
        // Near a half turn the antisymmetric part vanishes; read the axis
        // off the symmetric part (1 - cos) k kᵀ instead.
        let sym = 0.5 * (m + m.transpose()) - c * Matrix3::identity();
        let col = (0..3)
            .max_by(|&i, &j| sym[(i, i)].total_cmp(&sym[(j, j)]))
            .unwrap_or(0);
        let mut k: Vector3<f64> = sym.column(col).into_owned();
        k /= k.norm();
        if k.dot(&w) < 0.0 {
            k = -k;
        }
        (theta, k)
    }

    /// Rotation vector `phi` with `exp(phi) = R`.
    pub fn log(&self) -> Result<Vector3<f64>> {
        if !self.0.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite rotation entry".into()));
        }
        let m = &self.0;
        let w = 0.5 * vee3(&(m - m.transpose()));
        let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let s = w.norm();
        let theta = s.atan2(c);
        if theta > std::f64::consts::PI - PI_MARGIN {
            return Err(Error::DegenerateRotation { angle: theta });
        }
        if theta < ANGLE_EPS {
            let t2 = theta * theta;
            return Ok(w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
        }
        if theta < 2.5 {
            return Ok(w * (theta / s));
        }
        let (theta, k) = self.axis_angle();
        Ok(k * theta)
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;
    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// Element of se(3), rotation-first.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Twist {
    pub phi: Vector3<f64>,
    pub rho: Vector3<f64>,
}

impl Twist {
    pub fn new(phi: Vector3<f64>, rho: Vector3<f64>) -> Self {
        Twist { phi, rho }
    }

    pub fn zero() -> Self {
        Twist::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Twist {
            phi: v.fixed_rows::<3>(0).into_owned(),
            rho: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.phi);
        v.fixed_rows_mut::<3>(3).copy_from(&self.rho);
        v
    }

    pub fn angle(&self) -> f64 {
        self.phi.norm()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&[
            self.phi.x, self.phi.y, self.phi.z, self.rho.x, self.rho.y, self.rho.z,
        ])
    }

    /// 4×4 matrix form `[[phi]x, rho; 0, 0]`.
    pub fn hat(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.phi));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.rho);
        m
    }

    /// Inverse of [`Twist::hat`]; ignores the bottom row.
    pub fn vee(m: &Matrix4<f64>) -> Self {
        let phi = vee3(&m.fixed_view::<3, 3>(0, 0).into_owned());
        let rho = m.fixed_view::<3, 1>(0, 3).into_owned();
        Twist { phi, rho }
    }
}

impl std::ops::Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.phi, -self.rho)
    }
}

/// `V(phi) = I + (1 - cos θ)/θ² [phi]x + (θ - sin θ)/θ³ [phi]x²`.
pub fn v3(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    let (a, b) = if theta < ANGLE_EPS {
        v3_taylor_coeffs(theta)
    } else {
        v3_closed_coeffs(theta)
    };
    Matrix3::identity() + a * k + b * k * k
}

pub(crate) fn v3_closed_coeffs(theta: f64) -> (f64, f64) {
    let t2 = theta * theta;
    let half = 0.5 * theta;
    (
        2.0 * half.sin() * half.sin() / t2,
        (theta - theta.sin()) / (t2 * theta),
    )
}

pub(crate) fn v3_taylor_coeffs(theta: f64) -> (f64, f64) {
    let t2 = theta * theta;
    (
        0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0,
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0,
    )
}

/// Closed-form inverse of [`v3`].
pub fn v3_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = skew(phi);
    let c = if theta < ANGLE_EPS {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = 0.5 * theta;
        (1.0 - half / half.tan()) / (theta * theta)
    };
    Matrix3::identity() - 0.5 * k + c * k * k
}

/// Rigid transform `x ↦ R x + t`, translation in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub r: Rotation,
    pub t: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn new(r: Rotation, t: Vector3<f64>) -> Self {
        Pose { r, t }
    }

    pub fn identity() -> Self {
        Pose {
            r: Rotation::identity(),
            t: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Pose::new(Rotation::identity(), t)
    }

    pub fn from_rotation(r: Rotation) -> Self {
        Pose::new(r, Vector3::zeros())
    }

    /// Parses a homogeneous matrix, checking the rotation block to `tol`
    /// and the bottom row exactly.
    pub fn from_homogeneous(m: &Matrix4<f64>, tol: f64) -> Result<Self> {
        let bottom = m.fixed_view::<1, 4>(3, 0);
        if bottom[(0, 0)] != 0.0 || bottom[(0, 1)] != 0.0 || bottom[(0, 2)] != 0.0 || bottom[(0, 3)] != 1.0
        {
            return Err(Error::InvalidArgument(
                "homogeneous bottom row must be [0 0 0 1]".into(),
            ));
        }
        let r = Rotation::from_matrix(m.fixed_view::<3, 3>(0, 0).into_owned(), tol)?;
        Ok(Pose::new(r, m.fixed_view::<3, 1>(0, 3).into_owned()))
    }

    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.r.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.t);
        m
    }

    pub fn inverse(&self) -> Self {
        let rt = self.r.inverse();
        Pose::new(rt, -(rt * self.t))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.r * *p + self.t
    }

    /// Same pose with the rotation block re-projected onto SO(3).
    pub fn renormalized(&self) -> Self {
        Pose::new(Rotation::project(self.r.matrix()), self.t)
    }

    pub fn is_finite(&self) -> bool {
        self.r.matrix().iter().all(|x| x.is_finite()) && self.t.iter().all(|x| x.is_finite())
    }

    /// Exponential map without input validation.
    pub fn exp(zeta: &Twist) -> Self {
        Pose::new(Rotation::exp(&zeta.phi), v3(&zeta.phi) * zeta.rho)
    }

    pub fn log(&self) -> Result<Twist> {
        log_pose(self)
    }

    pub fn adjoint(&self) -> Adjoint6 {
        adjoint_group(self)
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        let r = self.r.0 * rhs.r.0;
        let t = self.r.0 * rhs.t + self.t;
        let mut rot = Rotation(r);
        if rot.orthonormality_error() > RENORM_TOL {
            rot = Rotation::project(&r);
        }
        Pose::new(rot, t)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    #[serde(rename = "R")]
    r: [[f64; 3]; 3],
    t: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.r.matrix();
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[(i, j)];
            }
        }
        PoseRepr {
            r,
            t: [self.t.x, self.t.y, self.t.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        Ok(Pose::new(
            Rotation::from_matrix_unchecked(Matrix3::from_fn(|i, j| repr.r[i][j])),
            Vector3::from(repr.t),
        ))
    }
}

/// `exp(zeta)` with `R = exp([phi]x)` and `t = V(phi) rho`.
pub fn exp_twist(zeta: &Twist) -> Result<Pose> {
    if !zeta.is_finite() {
        return Err(Error::InvalidArgument("non-finite twist".into()));
    }
    Ok(Pose::exp(zeta))
}

/// Inverse of [`exp_twist`]; `rho = V(phi)^{-1} t`.
pub fn log_pose(p: &Pose) -> Result<Twist> {
    if !p.is_finite() {
        return Err(Error::InvalidArgument("non-finite pose".into()));
    }
    let phi = p.r.log()?;
    Ok(Twist::new(phi, v3_inv(&phi) * p.t))
}

pub fn adjoint_group(p: &Pose) -> Adjoint6 {
    let r = p.r.matrix();
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(skew(&p.t) * r));
    m
}

pub fn adjoint_algebra(zeta: &Twist) -> Adjoint6 {
    let p = skew(&zeta.phi);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&p);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&p);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&zeta.rho));
    m
}

/// Coefficients `(c1, c2, c3, c4)` of the right Jacobian polynomial
/// `I - c1 ad + c2 ad² - c3 ad³ + c4 ad⁴`.
fn jacobian_coeffs(theta: f64) -> (f64, f64, f64, f64) {
    if theta < ANGLE_EPS {
        let t2 = theta * theta;
        return (
            0.5 - t2 * t2 / 720.0,
            1.0 / 6.0 - t2 * t2 / 5040.0,
            1.0 / 24.0 - t2 / 360.0,
            1.0 / 120.0 - t2 / 2520.0,
        );
    }
    let (s, c) = theta.sin_cos();
    let t2 = theta * theta;
    let t3 = t2 * theta;
    (
        (4.0 - theta * s - 4.0 * c) / (2.0 * t2),
        (4.0 * theta - 5.0 * s + theta * c) / (2.0 * t3),
        (2.0 - theta * s - 2.0 * c) / (2.0 * t2 * t2),
        (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t3 * t2),
    )
}

/// Right Jacobian without the half-turn check. Used by iterative solvers
/// whose twist state can legitimately pass through large angles.
pub(crate) fn right_jacobian_unchecked(zeta: &Twist) -> Adjoint6 {
    let ad = adjoint_algebra(zeta);
    let ad2 = ad * ad;
    let ad3 = ad2 * ad;
    let ad4 = ad2 * ad2;
    let (c1, c2, c3, c4) = jacobian_coeffs(zeta.angle());
    Matrix6::identity() - c1 * ad + c2 * ad2 - c3 * ad3 + c4 * ad4
}

pub(crate) fn left_jacobian_unchecked(zeta: &Twist) -> Adjoint6 {
    right_jacobian_unchecked(&-*zeta)
}

fn check_jacobian_domain(zeta: &Twist) -> Result<()> {
    if !zeta.is_finite() {
        return Err(Error::InvalidArgument("non-finite twist".into()));
    }
    let angle = zeta.angle();
    if angle >= std::f64::consts::PI - PI_MARGIN {
        return Err(Error::DegenerateRotation { angle });
    }
    Ok(())
}

/// `J_r(zeta)` such that `log(exp(zeta)^{-1} exp(zeta + d)) ≈ J_r(zeta) d`.
pub fn right_jacobian(zeta: &Twist) -> Result<Adjoint6> {
    check_jacobian_domain(zeta)?;
    Ok(right_jacobian_unchecked(zeta))
}

/// `J_l(zeta) = J_r(-zeta)`.
pub fn left_jacobian(zeta: &Twist) -> Result<Adjoint6> {
    check_jacobian_domain(zeta)?;
    Ok(left_jacobian_unchecked(zeta))
}

/// Screw parameters of a rigid motion: rotation `theta` about the line
/// through `c` with direction `k`, advancing `h` meters per radian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScrewParams {
    pub theta: f64,
    pub h: f64,
    pub k: Vector3<f64>,
    pub c: Vector3<f64>,
    /// Rotation angle below [`ANGLE_EPS`]: the axis is not defined by the
    /// rotation. For a pure translation `h` holds the translation length
    /// and `k` its direction; for the identity `k = (0, 0, 1)`.
    pub degenerate: bool,
}

impl ScrewParams {
    /// Rebuilds the homogeneous transform from the screw parameters.
    pub fn to_pose(&self) -> Pose {
        if self.degenerate {
            return Pose::from_translation(self.k * self.h);
        }
        let r = Rotation::exp(&(self.k * self.theta));
        let t = (Matrix3::identity() - r.matrix()) * self.c + self.k * (self.h * self.theta);
        Pose::new(r, t)
    }
}

pub fn screw_decompose(p: &Pose) -> ScrewParams {
    let (theta, k) = p.r.axis_angle();
    if theta < ANGLE_EPS {
        let n = p.t.norm();
        let k = if n > 0.0 { p.t / n } else { Vector3::z() };
        return ScrewParams {
            theta: 0.0,
            h: n,
            k,
            c: Vector3::zeros(),
            degenerate: true,
        };
    }
    let along = k.dot(&p.t);
    let h = along / theta;
    let w = p.t - k * along;
    let half = 0.5 * theta;
    let c = 0.5 * (w + (half.cos() / half.sin()) * k.cross(&w));
    ScrewParams {
        theta,
        h,
        k,
        c,
        degenerate: false,
    }
}

/// Truncated matrix exponential `sum_{k < terms} m^k / k!`.
pub fn exp_series(m: &Matrix4<f64>, terms: usize) -> Matrix4<f64> {
    let mut sum = Matrix4::zeros();
    let mut term = Matrix4::identity();
    for k in 0..terms {
        if k > 0 {
            term = term * m / k as f64;
        }
        sum += term;
    }
    sum
}

/// Truncated matrix logarithm `sum_{k=1}^{terms} (-1)^{k+1} (G - I)^k / k`.
/// Requires `‖G − I‖_F < 1`.
pub fn log_series(g: &Matrix4<f64>, terms: usize) -> Result<Matrix4<f64>> {
    let d = g - Matrix4::identity();
    let n = d.norm();
    if n >= 1.0 {
        return Err(Error::OutOfDomain(format!(
            "log series needs ‖G − I‖ < 1, got {n:.3}"
        )));
    }
    let mut sum = Matrix4::zeros();
    let mut power = Matrix4::identity();
    for k in 1..=terms {
        power *= d;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += power * (sign / k as f64);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn tw(v: [f64; 6]) -> Twist {
        Twist::from_vector(&Vector6::from_column_slice(&v))
    }

    #[test]
    fn exp_identity_and_pure_translation() {
        let p = exp_twist(&Twist::zero()).unwrap();
        assert_eq!(p.homogeneous(), Matrix4::identity());
        let p = exp_twist(&tw([0.0, 0.0, 0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(*p.r.matrix(), Matrix3::identity());
        assert_eq!(p.t, Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn exp_matches_series() {
        let z = tw([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let closed = exp_twist(&z).unwrap().homogeneous();
        let series = exp_series(&z.hat(), 30);
        assert!((closed - series).norm() < 1e-12);
    }

    #[test]
    fn exp_rejects_nan() {
        let z = tw([f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(exp_twist(&z), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn log_identity_and_axis_aligned() {
        let z = log_pose(&Pose::identity()).unwrap();
        assert_eq!(z.to_vector(), Vector6::zeros());
        let z = log_pose(&Pose::from_rotation(Rotation::rot_x(FRAC_PI_2))).unwrap();
        assert!((z.phi - Vector3::new(FRAC_PI_2, 0.0, 0.0)).norm() < 1e-15);
        assert!(z.rho.norm() < 1e-15);
    }

    #[test]
    fn log_rejects_half_turn() {
        let p = Pose::from_rotation(Rotation::rot_y(PI));
        assert!(matches!(log_pose(&p), Err(Error::DegenerateRotation { .. })));
        let p = Pose::from_rotation(Rotation::rot_y(PI - 1e-3));
        let z = log_pose(&p).unwrap();
        assert!((z.phi.y - (PI - 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn log_large_angle_branch_roundtrip() {
        let phi = Vector3::new(1.0, -2.0, 0.5).normalize() * 3.0;
        let p = Pose::exp(&Twist::new(phi, Vector3::new(0.3, 0.1, -0.7)));
        let z = log_pose(&p).unwrap();
        assert!((z.phi - phi).norm() < 1e-10);
        assert!((Pose::exp(&z).homogeneous() - p.homogeneous()).norm() < 1e-12);
    }

    #[test]
    fn adjoint_blocks() {
        assert_eq!(adjoint_group(&Pose::identity()), Matrix6::identity());
        let t = Vector3::new(1.0, 0.0, 0.0);
        let ad = adjoint_group(&Pose::from_translation(t));
        assert_eq!(ad.fixed_view::<3, 3>(3, 0).into_owned(), skew(&t));
    }

    #[test]
    fn adjoint_algebra_blocks() {
        assert_eq!(adjoint_algebra(&Twist::zero()), Matrix6::zeros());
        let ad = adjoint_algebra(&tw([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]));
        let ez = skew(&Vector3::z());
        assert_eq!(ad.fixed_view::<3, 3>(0, 0).into_owned(), ez);
        assert_eq!(ad.fixed_view::<3, 3>(3, 3).into_owned(), ez);
        assert_eq!(ad.fixed_view::<3, 3>(3, 0).into_owned(), Matrix3::zeros());
        assert_eq!(ad.fixed_view::<3, 3>(0, 3).into_owned(), Matrix3::zeros());
    }

    #[test]
    fn adjoint_matches_conjugation() {
        let t = Pose::exp(&tw([0.3, -0.2, 0.9, 1.0, -2.0, 0.5]));
        let xi = tw([0.1, 0.4, -0.3, 0.7, 0.2, -0.1]);
        let conj = t.homogeneous() * xi.hat() * t.inverse().homogeneous();
        let lhs = Twist::vee(&conj).to_vector();
        let rhs = adjoint_group(&t) * xi.to_vector();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn bch_second_order() {
        let x0 = tw([0.3, -0.1, 0.2, 0.5, 0.1, -0.4]).to_vector();
        let y0 = tw([0.2, 0.5, -0.3, 0.1, -0.6, 0.2]).to_vector();
        for s in [1e-1, 5e-2, 2.5e-2] {
            let (x, y) = (x0 * s, y0 * s);
            let prod = Pose::exp(&Twist::from_vector(&x)) * Pose::exp(&Twist::from_vector(&y));
            let exact = log_pose(&prod).unwrap().to_vector();
            let approx = x + y + 0.5 * adjoint_algebra(&Twist::from_vector(&x)) * y;
            assert!((exact - approx).norm() < 0.2 * s * s * s, "s = {s}");
        }
    }

    #[test]
    fn bch_right_perturbation() {
        let zx = tw([0.3, -0.1, 0.2, 0.5, 0.1, -0.4]);
        let d = tw([0.2, 0.5, -0.3, 0.1, -0.6, 0.2]).to_vector() * 1e-4;
        let prod = Pose::exp(&zx) * Pose::exp(&Twist::from_vector(&d));
        let exact = log_pose(&prod).unwrap().to_vector();
        let first = zx.to_vector() + right_jacobian(&zx).unwrap().try_inverse().unwrap() * d;
        assert!((exact - first).norm() < 1e-7);
    }

    #[test]
    fn jacobian_at_zero_is_identity() {
        assert_eq!(right_jacobian(&Twist::zero()).unwrap(), Matrix6::identity());
        let z = tw([0.4, -0.3, 0.2, 1.0, 0.5, -0.2]);
        assert_eq!(left_jacobian(&z).unwrap(), right_jacobian(&-z).unwrap());
    }

    #[test]
    fn jacobian_rejects_half_turn() {
        let z = tw([PI, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(right_jacobian(&z).is_err());
    }

    #[test]
    fn right_jacobian_first_order() {
        let z = tw([0.5, -0.7, 0.3, 0.2, 1.1, -0.4]);
        let d = Vector6::new(0.3, -0.5, 0.2, 0.7, 0.1, -0.4).normalize() * 1e-4;
        let lhs = log_pose(&(Pose::exp(&-z) * Pose::exp(&Twist::from_vector(&(z.to_vector() + d)))))
            .unwrap()
            .to_vector();
        let rhs = right_jacobian(&z).unwrap() * d;
        assert!((lhs - rhs).norm() < 1e-6);
    }

    #[test]
    fn screw_of_rotation_about_z() {
        let s = screw_decompose(&Pose::from_rotation(Rotation::rot_z(FRAC_PI_3)));
        assert!((s.theta - FRAC_PI_3).abs() < 1e-15);
        assert!(s.h.abs() < 1e-15);
        assert!((s.k - Vector3::z()).norm() < 1e-15);
        assert!(s.c.norm() < 1e-15);
        assert!(!s.degenerate);
    }

    #[test]
    fn screw_of_identity_is_flagged() {
        let s = screw_decompose(&Pose::identity());
        assert!(s.degenerate);
        assert_eq!(s.theta, 0.0);
        assert_eq!(s.h, 0.0);
        assert_eq!(s.k, Vector3::z());
        assert_eq!(s.c, Vector3::zeros());
    }

    #[test]
    fn screw_pure_translation() {
        let p = Pose::from_translation(Vector3::new(0.0, 3.0, 4.0));
        let s = screw_decompose(&p);
        assert!(s.degenerate);
        assert_eq!(s.h, 5.0);
        assert!((s.to_pose().t - p.t).norm() < 1e-15);
    }

    #[test]
    fn screw_reconstruction_and_invariants() {
        let p = Pose::exp(&tw([0.4, 1.2, -0.7, 0.3, -0.8, 1.5]));
        let s = screw_decompose(&p);
        assert!((s.k.norm() - 1.0).abs() < 1e-12);
        assert!(s.c.dot(&s.k).abs() < 1e-12);
        assert!((s.to_pose().homogeneous() - p.homogeneous()).norm() < 1e-12);
    }

    #[test]
    fn series_oracles() {
        assert_eq!(exp_series(&Matrix4::zeros(), 7), Matrix4::identity());
        let z = tw([0.05, -0.1, 0.08, 0.1, 0.03, -0.12]);
        let g = exp_series(&z.hat(), 30);
        let l = log_series(&g, 40).unwrap();
        assert!((l - z.hat()).norm() < 1e-8);
        let far = Matrix4::identity() * 3.0;
        assert!(matches!(log_series(&far, 10), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn v3_inverse_is_inverse() {
        for phi in [
            Vector3::new(1e-6, 2e-6, -1e-6),
            Vector3::new(0.3, -0.2, 0.1),
            Vector3::new(1.0, 2.0, -0.5),
        ] {
            let e = v3(&phi) * v3_inv(&phi) - Matrix3::identity();
            assert!(e.norm() < 1e-13, "{phi:?}");
        }
    }

    #[test]
    fn composition_renormalizes_drift() {
        let mut r = *Rotation::rot_z(0.3).matrix();
        r[(0, 0)] += 1e-8;
        let drifted = Pose::new(Rotation::from_matrix_unchecked(r), Vector3::zeros());
        let p = drifted * Pose::identity();
        assert!(p.r.orthonormality_error() < 1e-12);
    }

    #[test]
    fn pose_serde_layout() {
        let p = Pose::new(Rotation::rot_x(0.25), Vector3::new(1.0, 2.0, 3.0));
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with("{\"R\":[["));
        let q: Pose = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
