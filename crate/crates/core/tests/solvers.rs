//! End-to-end solver behavior on synthetic data with known truth.

use axyb_core::dataset::PosePairSet;
use axyb_core::eval::estimation_errors;
use axyb_core::se3::{Pose, Rotation, Twist};
use axyb_core::solvers::*;
use axyb_core::synth::{generate_truth, inject_uncertainty, scenario, NoiseConfig, Scenario, Workspace};
use axyb_core::Error;
use nalgebra::{Vector3, Vector6};

fn exact(n: usize, seed: u64) -> (Pose, Pose, PosePairSet) {
    let gt = generate_truth(n, &Workspace::default(), seed).unwrap();
    let pairs = inject_uncertainty(&gt, &NoiseConfig::zero(seed)).unwrap();
    (gt.x_opt, gt.y_opt, pairs)
}

fn quick() -> SolverConfig {
    SolverConfig { max_iter: 20_000, ..SolverConfig::default() }
}

#[test]
fn closed_form_methods_recover_exact_data() {
    let (x, y, pairs) = exact(30, 1);
    for m in [Method::SiAh, Method::Dq, Method::Kron] {
        let est = solve(m, &pairs, &SolverConfig::default(), None).unwrap();
        let (ex, ey) = estimation_errors((&est.x, &est.y), (&x, &y));
        assert!(ex.err_r < 1e-8 && ex.err_t < 1e-8, "{m} X {ex:?}");
        assert!(ey.err_r < 1e-8 && ey.err_t < 1e-8, "{m} Y {ey:?}");
    }
}

#[test]
fn descent_methods_recover_exact_data_from_a_perturbed_start() {
    let (x, y, pairs) = exact(30, 2);
    let kick = Twist::from_vector(&Vector6::new(0.05, -0.03, 0.04, 0.01, -0.02, 0.015));
    let init = (Pose::exp(&kick) * x, Pose::exp(&-kick) * y);
    for m in [Method::LHed, Method::UalHed] {
        let est = solve(m, &pairs, &quick(), Some(init)).unwrap();
        let (ex, ey) = estimation_errors((&est.x, &est.y), (&x, &y));
        assert!(ex.err_total < 1e-3 && ey.err_total < 1e-3, "{m} {ex:?} {ey:?}");
    }
}

#[test]
fn parallel_axes_are_rank_deficient() {
    // Every motion rotates about the same axis.
    let x = Pose::exp(&Twist::from_vector(&Vector6::new(0.3, -0.2, 0.5, 0.1, 0.0, 0.2)));
    let y = Pose::exp(&Twist::from_vector(&Vector6::new(-0.4, 0.1, 0.2, 0.9, -0.3, 0.4)));
    let a: Vec<Pose> = (0..8)
        .map(|i| {
            let f = i as f64;
            Pose::new(Rotation::exp(&Vector3::new(0.0, 0.0, 0.2 * f)), Vector3::new(0.1 * f, 0.0, 0.0))
        })
        .collect();
    let b: Vec<Pose> = a.iter().map(|ai| y.inverse() * *ai * x).collect();
    let pairs = PosePairSet::from_poses(&a, &b);
    for m in [Method::SiAh, Method::Dq] {
        let err = solve(m, &pairs, &SolverConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::RankDeficientMotion(_)), "{m}: {err}");
    }
}

#[test]
fn too_few_pairs_are_rejected() {
    let (_, _, pairs) = exact(1, 3);
    for m in Method::ALL {
        let err = solve(m, &pairs, &SolverConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }), "{m}: {err}");
    }
}

#[test]
fn descent_is_bitwise_deterministic() {
    let (_, pairs) = scenario(Scenario::RAuCAu, 40, 4).unwrap();
    let cfg = quick();
    let a = solve(Method::LHed, &pairs, &cfg, None).unwrap();
    let b = solve(Method::LHed, &pairs, &cfg, None).unwrap();
    assert_eq!(a, b);
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn descent_bookkeeping_is_consistent() {
    let (_, pairs) = scenario(Scenario::RAuCAu, 40, 5).unwrap();
    let est = solve(Method::LHed, &pairs, &quick(), None).unwrap();
    assert!(est.solution_iteration <= est.iterations);
    assert!(est.trace.windows(2).all(|w| w[0].iteration < w[1].iteration));
    assert_eq!(est.trace.last().unwrap().iteration, est.iterations);
    // The retained estimate only ever improves across escapes.
    assert!(est.checkpoints.windows(2).all(|w| w[1].heuristic <= w[0].heuristic));
    assert_eq!(est.checkpoints.len(), est.escapes.len());
    for p in [&est.x, &est.y] {
        assert!(p.r.orthonormality_error() < 1e-9);
        assert!((p.r.matrix().determinant() - 1.0).abs() < 1e-9);
    }
    let form = est.closed_form.unwrap();
    let f = objective(&pairs, &est.x, &est.y, form, None, SolverConfig::default().cov_epsilon).unwrap();
    assert!((f - est.objective).abs() <= 1e-9 * f.abs().max(1.0));
}

#[test]
fn descent_does_not_worsen_its_start() {
    let (_, pairs) = scenario(Scenario::RAuCAu, 40, 6).unwrap();
    let cfg = quick();
    let init = si_ah_solve(&pairs, &cfg).unwrap();
    let est = l_hed_solve(&pairs, &init.x, &init.y, &cfg, None).unwrap();
    let form = est.closed_form.unwrap();
    let h0 = heuristic_metric(&pairs, &init.x, &init.y, form);
    let h1 = heuristic_metric(&pairs, &est.x, &est.y, form);
    assert!(h1 <= h0 * (1.0 + 1e-9), "{h1} > {h0}");
}

#[test]
fn zero_corrections_reduce_to_plain_descent() {
    let (_, pairs) = scenario(Scenario::RAuCAu, 30, 7).unwrap();
    let cfg = quick();
    let init = si_ah_solve(&pairs, &cfg).unwrap();
    let zeros = vec![Vector6::zeros(); pairs.len()];
    let plain = l_hed_solve(&pairs, &init.x, &init.y, &cfg, None).unwrap();
    let zeroed = l_hed_solve(&pairs, &init.x, &init.y, &cfg, Some(&zeros)).unwrap();
    assert_eq!(plain.x, zeroed.x);
    assert_eq!(plain.y, zeroed.y);
    assert_eq!(plain.iterations, zeroed.iterations);
    assert_eq!(zeroed.method, Method::UalHed);
}

#[test]
fn correction_count_must_match() {
    let (_, pairs) = scenario(Scenario::Low, 10, 8).unwrap();
    let c = vec![Vector6::zeros(); 3];
    let err = l_hed_solve(&pairs, &Pose::identity(), &Pose::identity(), &quick(), Some(&c)).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn config_validation_and_file_loading() {
    assert!(SolverConfig { beta: 1.0, ..SolverConfig::default() }.validate().is_err());
    assert!(SolverConfig { alpha: 0.0, ..SolverConfig::default() }.validate().is_err());
    let dir = std::env::temp_dir().join(format!("axyb-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let toml_path = dir.join("c.toml");
    std::fs::write(&toml_path, "alpha = 0.05\nclosed_form = \"cf3\"\n").unwrap();
    let cfg = SolverConfig::from_file(&toml_path).unwrap();
    assert_eq!(cfg.alpha, 0.05);
    assert_eq!(cfg.closed_form, ClosedForm::Cf3);
    assert_eq!(cfg.beta, SolverConfig::default().beta);
    let json_path = dir.join("c.json");
    std::fs::write(&json_path, r#"{"alpha": 0.05, "bogus": 1}"#).unwrap();
    assert!(SolverConfig::from_file(&json_path).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert_eq!("KP".parse::<Method>().unwrap(), Method::Kron);
    assert!("nope".parse::<Method>().is_err());
}
