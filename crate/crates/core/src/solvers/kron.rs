//! Kronecker-product solution on absolute pairs: the rotations from the
//! null vector of `[I ⊗ R_A, −R_Bᵀ ⊗ I] [vec R_X; vec R_Y] = 0`, then both
//! translations from one linear least-squares system.

use nalgebra::{DMatrix, DVector, Matrix3};

use super::{CalibEstimate, Method};
use crate::dataset::PosePairSet;
use crate::error::{Error, Result};
use crate::se3::{Pose, Rotation};

pub fn kron_solve(pairs: &PosePairSet) -> Result<CalibEstimate> {
    pairs.require(2)?;
    let n = pairs.len();
    let i3 = Matrix3::<f64>::identity();
    let mut m = DMatrix::zeros(9 * n, 18);
    for (k, p) in pairs.pairs.iter().enumerate() {
        let ra = p.a.r.matrix();
        let rbt = p.b.r.matrix().transpose();
        m.view_mut((9 * k, 0), (9, 9)).copy_from(&i3.kronecker(ra));
        m.view_mut((9 * k, 9), (9, 9)).copy_from(&(-rbt.kronecker(&i3)));
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..18).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = |k: usize| svd.singular_values[order[k]];
    if !(s(16) > 1e-9 * s(0)) {
        return Err(Error::RankDeficientMotion("rotation null space is not one-dimensional".into()));
    }
    let v = vt.row(order[17]).transpose();
    // Column-major vec.
    let xm = Matrix3::from_iterator(v.rows(0, 9).iter().copied());
    let ym = Matrix3::from_iterator(v.rows(9, 9).iter().copied());
    let det = xm.determinant();
    if det.abs() < f64::MIN_POSITIVE {
        return Err(Error::RankDeficientMotion("null vector has zero determinant".into()));
    }
    let scale = det.signum() / det.abs().cbrt();
    let rx = Rotation::project(&(xm * scale));
    let ry = Rotation::project(&(ym * scale));

    // R_A t_X − t_Y = R_Y t_B − t_A
    let mut a = DMatrix::zeros(3 * n, 6);
    let mut b = DVector::zeros(3 * n);
    for (k, p) in pairs.pairs.iter().enumerate() {
        a.view_mut((3 * k, 0), (3, 3)).copy_from(p.a.r.matrix());
        a.view_mut((3 * k, 3), (3, 3)).copy_from(&(-i3));
        b.rows_mut(3 * k, 3).copy_from(&(ry * p.b.t - p.a.t));
    }
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let x = Pose::new(rx, sol.fixed_rows::<3>(0).into_owned());
    let y = Pose::new(ry, sol.fixed_rows::<3>(3).into_owned());
    Ok(CalibEstimate::closed(Method::Kron, x, y))
}
