//! Mean, covariance, whitening, relative pairs, filtering and file round
//! trips, checked against independent recomputations.

use axyb_core::dataset::*;
use axyb_core::se3::*;
use axyb_core::synth::{generate_truth, inject_uncertainty, NoiseConfig, Scenario, Workspace};
use nalgebra::{Matrix4, Matrix6, Rotation3, UnitQuaternion, Vector3, Vector6};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|v| Vector3::from(v).normalize())
}

fn center() -> impl Strategy<Value = Pose> {
    (unit(), 0.0f64..3.0, prop::array::uniform3(-3.0f64..3.0))
        .prop_map(|(k, a, t)| Pose::exp(&Twist::new(k * a, Vector3::from(t))))
}

/// `n` poses scattered around `center` by right-multiplied twists with
/// entries up to `spread`.
fn cloud(spread: f64, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Pose>> {
    (center(), prop::collection::vec(prop::array::uniform6(-1.0f64..1.0), n)).prop_map(move |(c, zs)| {
        zs.iter().map(|z| c * Pose::exp(&Twist::from_vector(&(Vector6::from(*z) * spread)))).collect()
    })
}

/// Karcher mean on SO(3) by gradient descent, using nalgebra's rotation
/// maps only.
fn so3_oracle(rots: &[Rotation3<f64>]) -> Rotation3<f64> {
    let mut m = rots[0];
    for _ in 0..500 {
        let g: Vector3<f64> = rots.iter().map(|r| (m.inverse() * r).scaled_axis()).sum::<Vector3<f64>>() / rots.len() as f64;
        m *= Rotation3::from_scaled_axis(g);
        if g.norm() < 1e-15 {
            break;
        }
    }
    m
}

fn hat(v: &Vector6<f64>) -> Matrix4<f64> {
    Twist::from_vector(v).hat()
}

/// Minimizer of `Σ‖log(M⁻¹Aᵢ)‖²` by gradient descent with central
/// difference gradients, using the matrix series for exp and log.
fn se3_oracle(poses: &[Pose]) -> Matrix4<f64> {
    let hs: Vec<Matrix4<f64>> = poses.iter().map(|p| p.homogeneous()).collect();
    let f = |m: &Matrix4<f64>| -> f64 {
        let mi = m.try_inverse().unwrap();
        hs.iter()
            .map(|a| Twist::vee(&log_series(&(mi * a), 12).unwrap()).to_vector().norm_squared())
            .sum()
    };
    let mut m = hs[0];
    let n = hs.len() as f64;
    for _ in 0..30 {
        let eps = 1e-6;
        let mut g = Vector6::zeros();
        for k in 0..6 {
            let e = Vector6::from_fn(|i, _| if i == k { eps } else { 0.0 });
            g[k] = (f(&(m * exp_series(&hat(&e), 8))) - f(&(m * exp_series(&hat(&-e), 8)))) / (2.0 * eps);
        }
        // The Hessian is close to 2n·I on a concentrated cloud.
        let step = -g / (2.0 * n);
        m *= exp_series(&hat(&step), 12);
        if step.norm() < 1e-13 {
            break;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mean_fixed_point(poses in cloud(0.5, 10..50)) {
        let m = se3_mean(&poses, MEAN_TOL, MEAN_MAX_ITER).unwrap();
        prop_assert!(m.converged);
        let mi = m.mean.inverse();
        let sum: Vector6<f64> = poses.iter().map(|p| log_pose(&(mi * *p)).unwrap().to_vector()).sum();
        prop_assert!(sum.norm() < 1e-10, "residual {}", sum.norm());
        prop_assert!(m.mean.r.orthonormality_error() < 1e-9);
    }

    #[test]
    fn mean_rotation_matches_so3_oracle(poses in cloud(0.5, 10..50)) {
        let m = se3_mean(&poses, MEAN_TOL, MEAN_MAX_ITER).unwrap().mean;
        let rots: Vec<Rotation3<f64>> = poses.iter().map(|p| Rotation3::from_matrix_unchecked(*p.r.matrix())).collect();
        let o = so3_oracle(&rots);
        prop_assert!((m.r.matrix() - o.matrix()).norm() < 1e-6);
    }

    #[test]
    fn mean_matches_least_squares_oracle_on_tight_clouds(poses in cloud(1e-3, 5..10)) {
        let m = se3_mean(&poses, MEAN_TOL, MEAN_MAX_ITER).unwrap().mean;
        let o = se3_oracle(&poses);
        prop_assert!((m.homogeneous() - o).norm() < 1e-6);
    }

    #[test]
    fn mean_is_left_equivariant(poses in cloud(0.5, 5..20), g in center()) {
        let m = se3_mean(&poses, MEAN_TOL, MEAN_MAX_ITER).unwrap().mean;
        let moved: Vec<Pose> = poses.iter().map(|p| g * *p).collect();
        let mg = se3_mean(&moved, MEAN_TOL, MEAN_MAX_ITER).unwrap().mean;
        prop_assert!(((g * m).homogeneous() - mg.homogeneous()).norm() < 1e-8);
    }

    #[test]
    fn covariance_is_symmetric_psd(poses in cloud(0.5, 2..20)) {
        let s = set_statistics(&poses).unwrap();
        prop_assert!((s.cov - s.cov.transpose()).norm() < 1e-12);
        let eig = s.cov.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&l| l >= -1e-12));
    }
}

#[test]
fn mean_of_identical_poses_needs_no_step() {
    let p = Pose::exp(&Twist::new(Vector3::new(0.3, 0.2, -0.1), Vector3::new(1.0, 2.0, 3.0)));
    let m = se3_mean(&[p; 5], MEAN_TOL, MEAN_MAX_ITER).unwrap();
    assert!(m.iterations <= 1);
    assert!((m.mean.homogeneous() - p.homogeneous()).norm() < 1e-12);
}

fn gaussian_cloud(n: usize, sigma: &Vector6<f64>, seed: u64) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Pose::exp(&Twist::new(Vector3::new(0.4, -0.2, 0.9), Vector3::new(0.5, -1.0, 2.0)));
    (0..n)
        .map(|_| {
            let z = Vector6::from_fn(|i, _| sigma[i] * { let s: f64 = StandardNormal.sample(&mut rng); s });
            c * Pose::exp(&Twist::from_vector(&z))
        })
        .collect()
}

#[test]
fn covariance_recovers_isotropic_noise() {
    let poses = gaussian_cloud(10_000, &Vector6::repeat(0.01), 3);
    let s = set_statistics(&poses).unwrap();
    for i in 0..6 {
        assert!((s.cov[(i, i)] / 1e-4 - 1.0).abs() < 0.1, "entry {i}: {}", s.cov[(i, i)]);
    }
}

#[test]
fn whitened_samples_have_unit_covariance() {
    let sigma = Vector6::new(0.02, 0.01, 0.03, 0.005, 0.02, 0.01);
    let poses = gaussian_cloud(5_000, &sigma, 4);
    let s = set_statistics(&poses).unwrap();
    let w = whiten(&poses, &s).unwrap();
    let c: Matrix6<f64> = w.psi.iter().map(|p| p * p.transpose()).sum::<Matrix6<f64>>() / w.psi.len() as f64;
    assert!((c - Matrix6::identity()).abs().max() < 0.15);
}

#[test]
fn whitened_norms_agree_without_uncertainty() {
    let gt = generate_truth(60, &Workspace::default(), 11).unwrap();
    let pairs = inject_uncertainty(&gt, &NoiseConfig::zero(11)).unwrap();
    let (a, b) = (pairs.a_poses(), pairs.b_poses());
    let wa = whiten(&a, &set_statistics(&a).unwrap()).unwrap();
    let wb = whiten(&b, &set_statistics(&b).unwrap()).unwrap();
    for (x, y) in wa.psi.iter().zip(&wb.psi) {
        assert!((x.norm() - y.norm()).abs() < 1e-6);
    }
}

#[test]
fn covariance_transports_through_x() {
    // With A = Y B X⁻¹ exactly, log(M_A⁻¹ Aᵢ) = Ad(X) log(M_B⁻¹ Bᵢ).
    let gt = generate_truth(200, &Workspace::default(), 12).unwrap();
    let pairs = inject_uncertainty(&gt, &NoiseConfig::zero(12)).unwrap();
    let sa = set_statistics(&pairs.a_poses()).unwrap();
    let sb = set_statistics(&pairs.b_poses()).unwrap();
    let ad = gt.x_opt.adjoint();
    let moved = ad * sb.cov * ad.transpose();
    assert!((moved - sa.cov).norm() < 1e-8 * sa.cov.norm());
}

#[test]
fn relative_pairs_satisfy_ax_xb() {
    let gt = generate_truth(30, &Workspace::default(), 5).unwrap();
    let pairs = inject_uncertainty(&gt, &NoiseConfig::zero(5)).unwrap();
    for pairing in [Pairing::Consecutive, Pairing::All] {
        let rel = make_relative_pairs(&pairs, pairing).unwrap();
        for r in &rel.rel_pairs {
            let d = (r.a * gt.x_opt).homogeneous() - (gt.x_opt * r.b).homogeneous();
            assert!(d.norm() < 1e-10);
        }
    }
}

#[test]
fn filter_rates_and_idempotence() {
    let gt = generate_truth(100, &Workspace::default(), 6).unwrap();
    let clean = inject_uncertainty(&gt, &NoiseConfig::zero(6)).unwrap();
    let rel = make_relative_pairs(&clean, Pairing::Consecutive).unwrap();
    let (_, rep) = correspondence_filter(&rel, 1e-6, 1e-6).unwrap();
    assert!(rep.rejected.is_empty());

    let noisy = inject_uncertainty(&gt, &Scenario::High.noise(6)).unwrap();
    let rel = make_relative_pairs(&noisy, Pairing::Consecutive).unwrap();
    let (once, rep) = correspondence_filter(&rel, 0.05, 0.005).unwrap();
    // Regression value. With High noise the robot-side rotation error times
    // the lever arm already exceeds 5 mm of axial translation, so most
    // pairs fail the default thresholds.
    assert_eq!(rep.rejected.len(), 65, "rejected {}", rep.rejected.len());
    assert_eq!(once.len() + rep.rejected.len(), rel.len());
    assert!(rep.rejected.iter().all(|r| r.d_theta >= 0.05 || r.d_h >= 0.005));
    let (twice, rep2) = correspondence_filter(&once, 0.05, 0.005).unwrap();
    assert_eq!(once, twice);
    assert!(rep2.rejected.is_empty());
}

#[test]
fn file_roundtrips_are_bitwise() {
    let gt = generate_truth(100, &Workspace::default(), 8).unwrap();
    let pairs = inject_uncertainty(&gt, &Scenario::RAuCAu.noise(8)).unwrap();
    let dir = std::env::temp_dir().join(format!("axyb-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for name in ["set.json", "set.csv"] {
        let path = dir.join(name);
        let fmt = FileFormat::from_path(&path);
        save_pairs(&pairs, &path, fmt).unwrap();
        let back = load_pairs(&path, fmt, LoadOptions::default()).unwrap();
        assert_eq!(back.digest(), pairs.digest(), "{name}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn quaternion_oracle_agrees_with_so3_mean_of_two() {
    // Two rotations about one axis: the mean is the half-way rotation.
    let a = Pose::from_rotation(Rotation::rot_z(0.2));
    let b = Pose::from_rotation(Rotation::rot_z(0.8));
    let m = se3_mean(&[a, b], MEAN_TOL, MEAN_MAX_ITER).unwrap().mean;
    let q = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.5);
    assert!((m.r.matrix() - q.to_rotation_matrix().matrix()).norm() < 1e-12);
}
