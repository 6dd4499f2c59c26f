//! Dual-quaternion hand-eye solution (Daniilidis) on relative motions,
//! with `Y` taken as the SE(3) mean of `Aᵢ X Bᵢ⁻¹`.

use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3, Vector4};

use super::{CalibEstimate, Method};
use crate::dataset::{make_relative_pairs, se3_mean, Pairing, PosePairSet, MEAN_MAX_ITER, MEAN_TOL};
use crate::error::{Error, Result};
use crate::se3::{skew, Pose, Rotation};

/// Real and dual parts `(q, q')` with `q' = ½ (0, t) q`.
fn dual_quaternion(p: &Pose) -> (Quaternion<f64>, Quaternion<f64>) {
    let q = *UnitQuaternion::from_matrix(p.r.matrix()).quaternion();
    let d = Quaternion::from_parts(0.0, p.t) * q * 0.5;
    (q, d)
}

/// The 6x8 block for one motion pair, acting on `[q_w, q_v, q'_w, q'_v]`.
fn motion_block(a: &Pose, b: &Pose) -> Option<DMatrix<f64>> {
    let (qa, da) = dual_quaternion(a);
    let (mut qb, mut db) = dual_quaternion(b);
    if qa.w * qb.w < 0.0 {
        qb = -qb;
        db = -db;
    }
    if qa.w.abs() > 1.0 - 1e-12 {
        // No rotation: the pair carries no axis information.
        return None;
    }
    let (av, bv) = (qa.imag(), qb.imag());
    let (adv, bdv) = (da.imag(), db.imag());
    let mut s = DMatrix::zeros(6, 8);
    let put = |s: &mut DMatrix<f64>, r: usize, c: usize, v: Vector3<f64>, m: nalgebra::Matrix3<f64>| {
        s.view_mut((r, c), (3, 1)).copy_from(&v);
        s.view_mut((r, c + 1), (3, 3)).copy_from(&m);
    };
    put(&mut s, 0, 0, av - bv, skew(&(av + bv)));
    put(&mut s, 3, 0, adv - bdv, skew(&(adv + bdv)));
    put(&mut s, 3, 4, av - bv, skew(&(av + bv)));
    Some(s)
}

pub fn dq_solve(pairs: &PosePairSet) -> Result<CalibEstimate> {
    pairs.require(2)?;
    let rel = make_relative_pairs(pairs, Pairing::Consecutive)?;
    let blocks: Vec<DMatrix<f64>> = rel.rel_pairs.iter().filter_map(|r| motion_block(&r.a, &r.b)).collect();
    if blocks.len() < 2 {
        return Err(Error::RankDeficientMotion("fewer than two rotating relative motions".into()));
    }
    let mut t = DMatrix::zeros(6 * blocks.len(), 8);
    for (k, b) in blocks.iter().enumerate() {
        t.view_mut((6 * k, 0), (6, 8)).copy_from(b);
    }
    let svd = t.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..8).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv = |k: usize| svd.singular_values[order[k]];
    if !(sv(5) > 1e-9 * sv(0)) {
        return Err(Error::RankDeficientMotion("relative rotation axes are parallel".into()));
    }
    let v7 = vt.row(order[6]).transpose();
    let v8 = vt.row(order[7]).transpose();
    let (u1, w1) = (Vector4::from_iterator(v7.rows(0, 4).iter().copied()), Vector4::from_iterator(v7.rows(4, 4).iter().copied()));
    let (u2, w2) = (Vector4::from_iterator(v8.rows(0, 4).iter().copied()), Vector4::from_iterator(v8.rows(4, 4).iter().copied()));

    // λ1 v7 + λ2 v8 must have a unit real part orthogonal to its dual part.
    let a = u1.dot(&w1);
    let b = u1.dot(&w2) + u2.dot(&w1);
    let c = u2.dot(&w2);
    let norm_sq = |s: f64| s * s * u1.dot(&u1) + 2.0 * s * u1.dot(&u2) + u2.dot(&u2);
    let (l1, l2) = if a.abs() < 1e-14 * (b.abs() + c.abs()).max(f64::MIN_POSITIVE) {
        if b.abs() < f64::MIN_POSITIVE {
            (1.0 / u1.norm(), 0.0)
        } else {
            let s = -c / b;
            let l2 = 1.0 / norm_sq(s).sqrt();
            (s * l2, l2)
        }
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let (s1, s2) = ((-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a));
        let s = if norm_sq(s1) >= norm_sq(s2) { s1 } else { s2 };
        let l2 = 1.0 / norm_sq(s).sqrt();
        (s * l2, l2)
    };
    let q = u1 * l1 + u2 * l2;
    let d = w1 * l1 + w2 * l2;
    let qr = Quaternion::new(q[0], q[1], q[2], q[3]);
    let qd = Quaternion::new(d[0], d[1], d[2], d[3]);
    let rot = UnitQuaternion::from_quaternion(qr);
    let tq = qd * qr.conjugate() * 2.0;
    let x = Pose::new(Rotation::project(rot.to_rotation_matrix().matrix()), tq.imag());

    let ys: Vec<Pose> = pairs.pairs.iter().map(|p| p.a * x * p.b.inverse()).collect();
    let y = se3_mean(&ys, MEAN_TOL, MEAN_MAX_ITER)?.mean;
    Ok(CalibEstimate::closed(Method::Dq, x, y))
}
