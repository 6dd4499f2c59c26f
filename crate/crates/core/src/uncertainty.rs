//! Relative uncertainty between the robot and camera pose sets.
//!
//! Both sets are centred on their SE(3) means and whitened by their own
//! covariances. Without noise the camera set is a rigid conjugate of the
//! robot set, so per-pair whitened norms coincide and the two covariances
//! have equal determinant. The ratios `χᵢ` measure how far each pair departs
//! from that, and feed a per-pair correction twist used by the
//! uncertainty-aware solver.

use std::str::FromStr;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::dataset::{set_statistics, whiten, PosePairSet};
use crate::error::{Error, Result};
use crate::se3::{left_jacobian, log_pose};

/// Scale of a covariance used by the χ ratios: `det(Σ)^{1/6}`.
///
/// Unlike the Frobenius norm this is unchanged by the congruence
/// `Σ ↦ Ad Σ Adᵀ` that relates the two sets, so it vanishes from the ratio
/// when the data are consistent.
pub fn cov_scale(s: &Matrix6<f64>) -> f64 {
    s.determinant().max(0.0).powf(1.0 / 6.0)
}

/// Second moment of whitened samples about the all-ones vector.
pub fn psi_covariance(psi: &[Vector6<f64>]) -> Matrix6<f64> {
    let ones = Vector6::repeat(1.0);
    let mut c = Matrix6::zeros();
    for p in psi {
        let d = p - ones;
        c += d * d.transpose();
    }
    c / psi.len().max(1) as f64
}

/// Share `λ ∈ [0, 1]` of the covariance term in the χ ratios: the mean over
/// the six components of `log(1 + Σ_A/Σ_B) / log(1 + Σ_ψA/Σ_ψB)` on the
/// diagonals, clamped.
pub fn influence_factor(
    sigma_a: &Matrix6<f64>,
    sigma_b: &Matrix6<f64>,
    sigma_psi_a: &Matrix6<f64>,
    sigma_psi_b: &Matrix6<f64>,
) -> Result<f64> {
    let mut sum = 0.0;
    for k in 0..6 {
        let (a, b) = (sigma_a[(k, k)], sigma_b[(k, k)]);
        let (pa, pb) = (sigma_psi_a[(k, k)], sigma_psi_b[(k, k)]);
        if !(b > 0.0 && pa > 0.0 && pb > 0.0) || a < 0.0 {
            return Err(Error::DegenerateVariance { component: k });
        }
        sum += (a / b).ln_1p() / (pa / pb).ln_1p();
    }
    Ok((sum / 6.0).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiRatios {
    pub chi: Vec<Vector6<f64>>,
    /// Pairs with a zero whitened robot norm; their χ is set to zero.
    pub degenerate: Vec<usize>,
}

/// Per-pair ratios
/// `χᵢ = (1−λ)(‖ψ_Bᵢ‖/‖ψ_Aᵢ‖ − 1) ψ_Aᵢ/‖ψ_Aᵢ‖ + λ (s_B/s_A − 1) diag(Σ_A)/s_A`
/// where `s = cov_scale(Σ)`.
pub fn chi_ratios(
    psi_a: &[Vector6<f64>],
    psi_b: &[Vector6<f64>],
    sigma_a: &Matrix6<f64>,
    sigma_b: &Matrix6<f64>,
    lambda: f64,
) -> Result<ChiRatios> {
    if psi_a.len() != psi_b.len() {
        return Err(Error::InvalidArgument("whitened sequences differ in length".into()));
    }
    let (sa, sb) = (cov_scale(sigma_a), cov_scale(sigma_b));
    if !(sa > 0.0) {
        return Err(Error::NearSingularCovariance { trace: sigma_a.trace() });
    }
    let cov_term = lambda * (sb / sa - 1.0) * sigma_a.diagonal() / sa;
    let mut degenerate = Vec::new();
    let chi = psi_a
        .iter()
        .zip(psi_b)
        .enumerate()
        .map(|(i, (a, b))| {
            let na = a.norm();
            if na == 0.0 {
                degenerate.push(i);
                return Vector6::zeros();
            }
            (1.0 - lambda) * (b.norm() / na - 1.0) * a / na + cov_term
        })
        .collect();
    Ok(ChiRatios { chi, degenerate })
}

/// `δζᵢ = ω ⊙ m ⊙ χᵢ` with `ω = sqrt(diag Σ_A)`.
pub fn correction_twists(
    chi: &[Vector6<f64>],
    sigma_a: &Matrix6<f64>,
    mean_psi_b: &Vector6<f64>,
) -> Vec<Vector6<f64>> {
    let omega = sigma_a.diagonal().map(|v| v.max(0.0).sqrt());
    let scale = omega.component_mul(mean_psi_b);
    chi.iter().map(|c| scale.component_mul(c)).collect()
}

/// `δeᵢ = J_l(log Aᵢ) δζᵢ`.
pub fn error_corrections(
    pairs: &PosePairSet,
    delta_zeta: &[Vector6<f64>],
) -> Result<Vec<Vector6<f64>>> {
    if pairs.len() != delta_zeta.len() {
        return Err(Error::InvalidArgument("correction count differs from pair count".into()));
    }
    pairs
        .pairs
        .iter()
        .zip(delta_zeta)
        .enumerate()
        .map(|(index, (p, dz))| {
            let wrap = |e: Error| match e {
                Error::DegenerateRotation { angle } => Error::DegeneratePair { index, angle },
                other => other,
            };
            let z = log_pose(&p.a).map_err(wrap)?;
            Ok(left_jacobian(&z).map_err(wrap)? * dz)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub chi: Vec<Vector6<f64>>,
    /// Correction twists, `[φ; ρ]`.
    pub delta_zeta: Vec<Vector6<f64>>,
    pub delta_e: Vec<Vector6<f64>>,
    pub lambda_factor: f64,
    pub per_pair_metric: Vec<f64>,
    pub scalar_metric: f64,
    pub degenerate_pairs: Vec<usize>,
    /// A covariance eigenvalue was raised to the whitening floor.
    pub regularized: bool,
}

/// Full metric pipeline: means, covariances, whitening, λ, χ, δζ and δe.
///
/// The whitened robot and camera samples have zero mean by construction of
/// the SE(3) mean, so the scale vector in the correction twists is the
/// nominal whitened mean `1₆` rather than the sample mean.
pub fn srm_metric(pairs: &PosePairSet) -> Result<UncertaintyReport> {
    pairs.require(6)?;
    let (a, b) = (pairs.a_poses(), pairs.b_poses());
    let (stats_a, stats_b) = (set_statistics(&a)?, set_statistics(&b)?);
    let (wa, wb) = (whiten(&a, &stats_a)?, whiten(&b, &stats_b)?);
    let lambda = influence_factor(
        &stats_a.cov,
        &stats_b.cov,
        &psi_covariance(&wa.psi),
        &psi_covariance(&wb.psi),
    )?;
    let ChiRatios { chi, degenerate } =
        chi_ratios(&wa.psi, &wb.psi, &stats_a.cov, &stats_b.cov, lambda)?;
    let delta_zeta = correction_twists(&chi, &stats_a.cov, &Vector6::repeat(1.0));
    let delta_e = error_corrections(pairs, &delta_zeta)?;
    let per_pair_metric: Vec<f64> = chi.iter().map(|c| c.norm()).collect();
    let scalar_metric = per_pair_metric.iter().sum::<f64>() / per_pair_metric.len() as f64;
    Ok(UncertaintyReport {
        chi,
        delta_zeta,
        delta_e,
        lambda_factor: lambda,
        per_pair_metric,
        scalar_metric,
        degenerate_pairs: degenerate,
        regularized: wa.regularized || wb.regularized,
    })
}

/// Inclusive 1-based rank window over pairs sorted by descending metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStrategy {
    pub rank_lo: usize,
    pub rank_hi: usize,
}

impl SelectionStrategy {
    pub const fn new(rank_lo: usize, rank_hi: usize) -> Self {
        SelectionStrategy { rank_lo, rank_hi }
    }

    /// The eight windows of the data-selection study.
    pub const STUDY: [SelectionStrategy; 8] = [
        SelectionStrategy::new(1, 10),
        SelectionStrategy::new(1, 20),
        SelectionStrategy::new(1, 50),
        SelectionStrategy::new(1, 100),
        SelectionStrategy::new(10, 20),
        SelectionStrategy::new(10, 50),
        SelectionStrategy::new(10, 100),
        SelectionStrategy::new(50, 100),
    ];

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.rank_lo < 1 || self.rank_lo > self.rank_hi || self.rank_hi > n {
            return Err(Error::InvalidRange { lo: self.rank_lo, hi: self.rank_hi, n });
        }
        Ok(())
    }
}

impl std::fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.rank_lo, self.rank_hi)
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("strategy must look like lo:hi, got {s:?}"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        Ok(SelectionStrategy::new(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        ))
    }
}

/// Indices sorted by descending metric, ties kept in input order.
pub fn rank_order(metric: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..metric.len()).collect();
    idx.sort_by(|&i, &j| metric[j].total_cmp(&metric[i]));
    idx
}

/// Pairs whose rank falls in the strategy window, kept in their original
/// order so that consecutive relative motions stay meaningful.
pub fn select_pairs(
    pairs: &PosePairSet,
    per_pair_metric: &[f64],
    strategy: SelectionStrategy,
) -> Result<PosePairSet> {
    if per_pair_metric.len() != pairs.len() {
        return Err(Error::InvalidArgument("metric length differs from pair count".into()));
    }
    strategy.validate(pairs.len())?;
    let mut keep = rank_order(per_pair_metric)[strategy.rank_lo - 1..strategy.rank_hi].to_vec();
    keep.sort_unstable();
    Ok(pairs.subset(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PosePair;
    use crate::se3::Pose;

    #[test]
    fn influence_symmetric_case() {
        let s = Matrix6::from_diagonal(&Vector6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0));
        let p = Matrix6::identity() * 2.0;
        assert_eq!(influence_factor(&s, &s, &p, &p).unwrap(), 1.0);
        let tiny = s * 1e-12;
        assert!(influence_factor(&tiny, &s, &p, &p).unwrap() < 1e-11);
        let zero = Matrix6::zeros();
        assert!(matches!(
            influence_factor(&s, &zero, &p, &p),
            Err(Error::DegenerateVariance { component: 0 })
        ));
    }

    #[test]
    fn chi_zero_when_consistent() {
        let s = Matrix6::identity();
        let psi = vec![Vector6::new(1.0, 0.0, 2.0, 0.0, 0.0, 1.0)];
        let c = chi_ratios(&psi, &psi, &s, &s, 0.3).unwrap();
        assert_eq!(c.chi[0], Vector6::zeros());
    }

    #[test]
    fn chi_unit_when_ratio_two() {
        let s = Matrix6::identity();
        let a = Vector6::new(3.0, 0.0, 4.0, 0.0, 0.0, 0.0);
        let c = chi_ratios(&[a], &[2.0 * a], &s, &(s * 7.0), 0.0).unwrap();
        assert!((c.chi[0] - a / 5.0).norm() < 1e-15);
    }

    #[test]
    fn chi_flags_zero_norm() {
        let s = Matrix6::identity();
        let c = chi_ratios(&[Vector6::zeros()], &[Vector6::repeat(1.0)], &s, &s, 0.5).unwrap();
        assert_eq!(c.degenerate, vec![0]);
    }

    #[test]
    fn correction_scaling() {
        let chi = vec![Vector6::new(1.0, -1.0, 0.5, 2.0, 0.0, 1.0)];
        let s = Matrix6::from_diagonal(&Vector6::new(1.0, 4.0, 9.0, 1.0, 1.0, 1.0));
        let m = Vector6::repeat(1.0);
        assert_eq!(correction_twists(&[Vector6::zeros()], &s, &m)[0], Vector6::zeros());
        let one = correction_twists(&chi, &s, &m)[0];
        let two = correction_twists(&chi, &(s * 2.0), &m)[0];
        assert!((two - one * 2f64.sqrt()).norm() < 1e-14);
    }

    #[test]
    fn identity_robot_pose_passes_correction_through() {
        let set = PosePairSet::new(vec![PosePair::new(Pose::identity(), Pose::identity())]);
        let dz = vec![Vector6::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)];
        assert_eq!(error_corrections(&set, &dz).unwrap()[0], dz[0]);
    }

    #[test]
    fn selection_windows() {
        let pairs = PosePairSet::new(vec![PosePair::new(Pose::identity(), Pose::identity()); 12]);
        let metric: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let all = select_pairs(&pairs, &metric, SelectionStrategy::new(1, 12)).unwrap();
        assert_eq!(all.len(), 12);
        assert_eq!(rank_order(&metric)[..3], [11, 10, 9]);
        assert!(matches!(
            select_pairs(&pairs, &metric, SelectionStrategy::new(5, 13)),
            Err(Error::InvalidRange { .. })
        ));
        assert_eq!("10:50".parse::<SelectionStrategy>().unwrap(), SelectionStrategy::new(10, 50));
    }

    #[test]
    fn ties_keep_input_order() {
        assert_eq!(rank_order(&[1.0, 2.0, 1.0, 2.0]), vec![1, 3, 0, 2]);
    }
}
