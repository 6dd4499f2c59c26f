//! Synthetic ground truth and uncertainty injection.
//!
//! Robot poses are sampled as position (mm) plus intrinsic Z-Y-X Euler
//! angles (yaw, pitch, roll in degrees). The robot set `A` is kept exact; the
//! camera set is built from a perturbed robot pose, `B = Y⁻¹ Ã X`, and then
//! perturbed again in its own position/Euler representation.
//!
//! Aleatoric noise (AU) is zero-mean Gaussian. Epistemic noise (EU) is a
//! deterministic bias proportional to the offset from a reference pose,
//! `e = gain · (p − p_origin)`, applied alike to positions and angles.

use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{PosePair, PosePairSet};
use crate::error::{Error, Result};
use crate::se3::{Pose, Rotation};

/// Pitch magnitude (deg) beyond which the Z-Y-X parameterization is refused.
pub const GIMBAL_LIMIT_DEG: f64 = 89.9;

/// Upper ends of the injection ranges used in the simulation study:
/// position σ (mm), angle σ (deg) and EU gain, for robot and camera.
pub const ROBOT_AU_POS_MAX: f64 = 1.0;
pub const ROBOT_AU_ROT_MAX: f64 = 0.4;
pub const CAM_AU_POS_MAX: f64 = 0.5;
pub const CAM_AU_ROT_MAX: f64 = 0.2;
pub const EU_GAIN_MAX: f64 = 0.004;

/// Rotation from intrinsic Z-Y-X angles in radians: `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn rotation_from_euler(yaw: f64, pitch: f64, roll: f64) -> Rotation {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    Rotation::from_matrix_unchecked(Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    ))
}

/// Inverse of [`rotation_from_euler`], returning `(yaw, pitch, roll)` in radians.
pub fn euler_from_rotation(r: &Rotation) -> Vector3<f64> {
    let m = r.matrix();
    let pitch = (-m[(2, 0)]).clamp(-1.0, 1.0).asin();
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    Vector3::new(yaw, pitch, roll)
}

/// Position in mm and Euler angles in degrees to a pose in meters.
pub fn pose_from_pos_euler(pos_mm: &Vector3<f64>, euler_deg: &Vector3<f64>) -> Pose {
    let e = euler_deg.map(f64::to_radians);
    Pose::new(rotation_from_euler(e.x, e.y, e.z), pos_mm / 1000.0)
}

pub fn pos_euler_from_pose(p: &Pose) -> (Vector3<f64>, Vector3<f64>) {
    (p.t * 1000.0, euler_from_rotation(&p.r).map(f64::to_degrees))
}

/// Default hand-eye transform `X`: the tabulated matrix from the reference
/// simulation study, projected onto SO(3) since the published entries are
/// rounded to three decimals.
pub fn default_x() -> Pose {
    Pose::new(
        Rotation::project(&Matrix3::new(
            -0.795, -0.599, 0.087, 0.604, -0.795, 0.052, 0.038, 0.094, 0.995,
        )),
        Vector3::new(0.09, -0.2, 0.07),
    )
}

/// Default robot-world transform `Y`, projected like [`default_x`].
pub fn default_y() -> Pose {
    Pose::new(
        Rotation::project(&Matrix3::new(
            -0.965, -0.258, -0.035, 0.259, -0.965, -0.035, -0.024, -0.043, 0.999,
        )),
        Vector3::new(3.6, -3.9, 0.3),
    )
}

/// Sampling region for robot poses: an axis-aligned box in mm and a box of
/// Euler angles in degrees, each given by center and half extent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub center_mm: [f64; 3],
    pub half_extent_mm: [f64; 3],
    pub euler_center_deg: [f64; 3],
    pub euler_half_range_deg: [f64; 3],
}

impl Workspace {
    fn cube(edge_mm: f64) -> Self {
        let h = 0.5 * edge_mm;
        Workspace {
            center_mm: [1200.0, 0.0, 800.0],
            half_extent_mm: [h, h, h],
            euler_center_deg: [0.0; 3],
            euler_half_range_deg: [30.0; 3],
        }
    }

    /// 1.5 m cube.
    pub fn large() -> Self {
        Self::cube(1500.0)
    }

    /// 0.4 m cube.
    pub fn small() -> Self {
        Self::cube(400.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .center_mm
            .iter()
            .chain(&self.half_extent_mm)
            .chain(&self.euler_center_deg)
            .chain(&self.euler_half_range_deg);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWorkspace("non-finite bound".into()));
        }
        if self.half_extent_mm.iter().chain(&self.euler_half_range_deg).any(|&v| v < 0.0) {
            return Err(Error::InvalidWorkspace("negative extent".into()));
        }
        let pitch_hi = self.euler_center_deg[1].abs() + self.euler_half_range_deg[1];
        if pitch_hi > GIMBAL_LIMIT_DEG {
            return Err(Error::InvalidWorkspace(format!(
                "pitch range reaches {pitch_hi}°, beyond the ±{GIMBAL_LIMIT_DEG}° gimbal limit"
            )));
        }
        Ok(())
    }

    /// Reference pose whose EU offset is zero.
    pub fn origin(&self) -> RobotPose {
        RobotPose {
            position_mm: self.center_mm.into(),
            euler_deg: self.euler_center_deg.into(),
        }
    }

    pub fn contains(&self, p: &RobotPose) -> bool {
        (0..3).all(|k| {
            (p.position_mm[k] - self.center_mm[k]).abs() <= self.half_extent_mm[k] + 1e-9
                && (p.euler_deg[k] - self.euler_center_deg[k]).abs()
                    <= self.euler_half_range_deg[k] + 1e-9
        })
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace::large()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub position_mm: Vector3<f64>,
    pub euler_deg: Vector3<f64>,
}

impl RobotPose {
    pub fn pose(&self) -> Pose {
        pose_from_pos_euler(&self.position_mm, &self.euler_deg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_opt: Pose,
    pub y_opt: Pose,
    pub robot_poses: Vec<RobotPose>,
    pub workspace: Workspace,
}

impl GroundTruth {
    /// Same robot poses with the translations of `X` and `Y` exchanged.
    pub fn with_swapped_translations(&self) -> Self {
        let mut g = self.clone();
        std::mem::swap(&mut g.x_opt.t, &mut g.y_opt.t);
        g
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, center: f64, half: f64) -> f64 {
    if half == 0.0 {
        center
    } else {
        rng.random_range(center - half..=center + half)
    }
}

/// Samples `n` robot poses uniformly in the workspace. `X` and `Y` default
/// to [`default_x`] and [`default_y`].
pub fn generate_truth(n: usize, workspace: &Workspace, seed: u64) -> Result<GroundTruth> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one pose".into()));
    }
    workspace.validate()?;
    let robot_poses = (0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut p = Vector3::zeros();
            let mut e = Vector3::zeros();
            for k in 0..3 {
                p[k] = uniform(&mut rng, workspace.center_mm[k], workspace.half_extent_mm[k]);
            }
            for k in 0..3 {
                e[k] = uniform(&mut rng, workspace.euler_center_deg[k], workspace.euler_half_range_deg[k]);
            }
            RobotPose { position_mm: p, euler_deg: e }
        })
        .collect();
    Ok(GroundTruth {
        x_opt: default_x(),
        y_opt: default_y(),
        robot_poses,
        workspace: *workspace,
    })
}

/// Noise magnitudes. Positions in mm, angles in degrees, gains dimensionless.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub robot_au_pos: [f64; 3],
    pub robot_au_rot: [f64; 3],
    pub cam_au_pos: [f64; 3],
    pub cam_au_rot: [f64; 3],
    pub robot_eu_gain: f64,
    pub cam_eu_gain: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::zero(0)
    }
}

impl NoiseConfig {
    pub fn zero(seed: u64) -> Self {
        NoiseConfig {
            robot_au_pos: [0.0; 3],
            robot_au_rot: [0.0; 3],
            cam_au_pos: [0.0; 3],
            cam_au_rot: [0.0; 3],
            robot_eu_gain: 0.0,
            cam_eu_gain: 0.0,
            seed,
        }
    }

    pub fn with_robot_au(mut self, pos_mm: f64, rot_deg: f64) -> Self {
        self.robot_au_pos = [pos_mm; 3];
        self.robot_au_rot = [rot_deg; 3];
        self
    }

    pub fn with_cam_au(mut self, pos_mm: f64, rot_deg: f64) -> Self {
        self.cam_au_pos = [pos_mm; 3];
        self.cam_au_rot = [rot_deg; 3];
        self
    }

    pub fn with_robot_eu(mut self, gain: f64) -> Self {
        self.robot_eu_gain = gain;
        self
    }

    pub fn with_cam_eu(mut self, gain: f64) -> Self {
        self.cam_eu_gain = gain;
        self
    }

    /// Every magnitude multiplied by `f`.
    pub fn scaled(mut self, f: f64) -> Self {
        for v in self
            .robot_au_pos
            .iter_mut()
            .chain(&mut self.robot_au_rot)
            .chain(&mut self.cam_au_pos)
            .chain(&mut self.cam_au_rot)
        {
            *v *= f;
        }
        self.robot_eu_gain *= f;
        self.cam_eu_gain *= f;
        self
    }

    /// Noise at the top of every injection range.
    pub fn maxima(seed: u64) -> Self {
        NoiseConfig::zero(seed)
            .with_robot_au(ROBOT_AU_POS_MAX, ROBOT_AU_ROT_MAX)
            .with_cam_au(CAM_AU_POS_MAX, CAM_AU_ROT_MAX)
            .with_robot_eu(EU_GAIN_MAX)
            .with_cam_eu(EU_GAIN_MAX)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .robot_au_pos
            .iter()
            .chain(&self.robot_au_rot)
            .chain(&self.cam_au_pos)
            .chain(&self.cam_au_rot)
            .chain([&self.robot_eu_gain, &self.cam_eu_gain]);
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "noise magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Names of fields that exceed the studied ranges. Such values are
    /// accepted but fall outside what the defaults were tuned for.
    pub fn above_range(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let max = |a: &[f64; 3]| a.iter().cloned().fold(0.0, f64::max);
        if max(&self.robot_au_pos) > ROBOT_AU_POS_MAX {
            out.push("robot_au_pos");
        }
        if max(&self.robot_au_rot) > ROBOT_AU_ROT_MAX {
            out.push("robot_au_rot");
        }
        if max(&self.cam_au_pos) > CAM_AU_POS_MAX {
            out.push("cam_au_pos");
        }
        if max(&self.cam_au_rot) > CAM_AU_ROT_MAX {
            out.push("cam_au_rot");
        }
        if self.robot_eu_gain > EU_GAIN_MAX {
            out.push("robot_eu_gain");
        }
        if self.cam_eu_gain > EU_GAIN_MAX {
            out.push("cam_eu_gain");
        }
        out
    }
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: &[f64; 3]) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    for k in 0..3 {
        let z: f64 = rng.sample(StandardNormal);
        v[k] = sigma[k] * z;
    }
    v
}

/// Position/Euler perturbation: `p + gain (p − p₀) + N(0, σ_p²)`, same for angles.
fn perturb(
    p: &RobotPose,
    origin: &RobotPose,
    gain: f64,
    sigma_pos: &[f64; 3],
    sigma_rot: &[f64; 3],
    rng: &mut ChaCha8Rng,
) -> RobotPose {
    let e_pos = gaussian3(rng, sigma_pos);
    let e_rot = gaussian3(rng, sigma_rot);
    RobotPose {
        position_mm: p.position_mm + gain * (p.position_mm - origin.position_mm) + e_pos,
        euler_deg: p.euler_deg + gain * (p.euler_deg - origin.euler_deg) + e_rot,
    }
}

fn camera_rep(p: &Pose, index: usize) -> Result<RobotPose> {
    let (position_mm, euler_deg) = pos_euler_from_pose(p);
    if euler_deg.y.abs() > GIMBAL_LIMIT_DEG {
        return Err(Error::Validation {
            record: index,
            message: format!("camera pose pitch {:.3}° is at the gimbal limit", euler_deg.y),
        });
    }
    Ok(RobotPose { position_mm, euler_deg })
}

/// Builds the pose-pair set for `gt` under `cfg`. Each pose draws from its
/// own random stream, so results do not depend on evaluation order.
pub fn inject_uncertainty(gt: &GroundTruth, cfg: &NoiseConfig) -> Result<PosePairSet> {
    cfg.validate()?;
    let (x, y_inv) = (gt.x_opt, gt.y_opt.inverse());
    let origin = gt.workspace.origin();
    let cam_origin = camera_rep(&(y_inv * origin.pose() * x), usize::MAX)?;
    let pairs = gt
        .robot_poses
        .iter()
        .enumerate()
        .map(|(i, rp)| {
            let mut rng = stream_rng(cfg.seed ^ 0x005e_ed0f_a11e, i as u64);
            let noisy = perturb(rp, &origin, cfg.robot_eu_gain, &cfg.robot_au_pos, &cfg.robot_au_rot, &mut rng);
            let b_clean = y_inv * noisy.pose() * x;
            let cam = camera_rep(&b_clean, i)?;
            let cam_noisy = perturb(&cam, &cam_origin, cfg.cam_eu_gain, &cfg.cam_au_pos, &cfg.cam_au_rot, &mut rng);
            let b = if cam_noisy == cam { b_clean } else { cam_noisy.pose() };
            Ok(PosePair::new(rp.pose(), b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosePairSet::new(pairs))
}

/// Named noise settings: the six robot/camera combinations of the desk
/// benchmark plus the two uniform AU levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "R-AU")]
    RAu,
    #[serde(rename = "C-AU")]
    CAu,
    #[serde(rename = "R-AU/C-AU")]
    RAuCAu,
    #[serde(rename = "R-EU")]
    REu,
    #[serde(rename = "R-EU/C-AU")]
    REuCAu,
    #[serde(rename = "R-AU-EU/C-AU")]
    RAuEuCAu,
    #[serde(rename = "High")]
    High,
    #[serde(rename = "Low")]
    Low,
}

impl Scenario {
    /// The six robot/camera combinations.
    pub const COMBINATIONS: [Scenario; 6] = [
        Scenario::RAu,
        Scenario::CAu,
        Scenario::RAuCAu,
        Scenario::REu,
        Scenario::REuCAu,
        Scenario::RAuEuCAu,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::RAu => "R-AU",
            Scenario::CAu => "C-AU",
            Scenario::RAuCAu => "R-AU/C-AU",
            Scenario::REu => "R-EU",
            Scenario::REuCAu => "R-EU/C-AU",
            Scenario::RAuEuCAu => "R-AU-EU/C-AU",
            Scenario::High => "High",
            Scenario::Low => "Low",
        }
    }

    pub fn noise(&self, seed: u64) -> NoiseConfig {
        let z = NoiseConfig::zero(seed);
        match self {
            Scenario::RAu => z.with_robot_au(1.0, 0.4),
            Scenario::CAu => z.with_cam_au(0.5, 0.2),
            Scenario::RAuCAu | Scenario::High => z.with_robot_au(1.0, 0.4).with_cam_au(0.5, 0.2),
            Scenario::REu => z.with_robot_eu(0.004),
            Scenario::REuCAu => z.with_robot_eu(0.004).with_cam_au(0.5, 0.2),
            Scenario::RAuEuCAu => z.with_robot_au(1.0, 0.4).with_robot_eu(0.004).with_cam_au(0.5, 0.2),
            Scenario::Low => z.with_robot_au(0.2, 0.1).with_cam_au(0.1, 0.05),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = Scenario::COMBINATIONS.iter().chain(&[Scenario::High, Scenario::Low]);
        all.clone()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {s:?}")))
    }
}

/// Truth plus noisy pairs for a named scenario in the default workspace.
pub fn scenario(name: Scenario, n: usize, seed: u64) -> Result<(GroundTruth, PosePairSet)> {
    let gt = generate_truth(n, &Workspace::default(), seed)?;
    let pairs = inject_uncertainty(&gt, &name.noise(seed))?;
    Ok((gt, pairs))
}
