use std::str::FromStr;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::Pose;

/// Arrangement of `A X = Y B` used as the per-pair error product.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedForm {
    /// `Y⁻¹ A X B⁻¹`
    Cf1,
    /// `A X B⁻¹ Y⁻¹`
    Cf2,
    /// `X B⁻¹ Y⁻¹ A`
    Cf3,
    /// `B⁻¹ Y⁻¹ A X`
    Cf4,
    /// CF3 when the initial `Y` translation is longer than the `X` one,
    /// CF2 otherwise.
    #[default]
    Auto,
}

impl ClosedForm {
    pub const CONCRETE: [ClosedForm; 4] = [ClosedForm::Cf1, ClosedForm::Cf2, ClosedForm::Cf3, ClosedForm::Cf4];

    pub fn name(&self) -> &'static str {
        match self {
            ClosedForm::Cf1 => "cf1",
            ClosedForm::Cf2 => "cf2",
            ClosedForm::Cf3 => "cf3",
            ClosedForm::Cf4 => "cf4",
            ClosedForm::Auto => "auto",
        }
    }

    /// Picks a concrete form for the given initial estimate.
    pub fn resolve(self, x: &Pose, y: &Pose) -> ClosedForm {
        match self {
            ClosedForm::Auto if y.t.norm() > x.t.norm() => ClosedForm::Cf3,
            ClosedForm::Auto => ClosedForm::Cf2,
            f => f,
        }
    }
}

impl std::fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClosedForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        [ClosedForm::Cf1, ClosedForm::Cf2, ClosedForm::Cf3, ClosedForm::Cf4, ClosedForm::Auto]
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown closed form {s:?}")))
    }
}

/// The selected error product. Identity at an exact solution. `Auto` is
/// resolved from `(x, y)` first.
pub fn closed_form_error(a: &Pose, b: &Pose, x: &Pose, y: &Pose, form: ClosedForm) -> Pose {
    let (bi, yi) = (b.inverse(), y.inverse());
    match form.resolve(x, y) {
        ClosedForm::Cf1 => yi * *a * *x * bi,
        ClosedForm::Cf2 => *a * *x * bi * yi,
        ClosedForm::Cf3 => *x * bi * yi * *a,
        _ => bi * yi * *a * *x,
    }
}

/// Error product `e` together with the adjoints mapping left perturbations
/// of `X` and `Y` to left perturbations of `e`:
/// `X ← exp(u) X` gives `e ← exp(Gx u) e`, and `Y ← exp(w) Y` gives
/// `e ← exp(Gy w) e`.
pub fn closed_form_jacobians(
    a: &Pose,
    b: &Pose,
    x: &Pose,
    y: &Pose,
    form: ClosedForm,
) -> (Pose, Matrix6<f64>, Matrix6<f64>) {
    let (bi, yi) = (b.inverse(), y.inverse());
    match form.resolve(x, y) {
        ClosedForm::Cf1 => {
            let p = yi * *a;
            let e = p * *x * bi;
            (e, p.adjoint(), -yi.adjoint())
        }
        ClosedForm::Cf2 => {
            let e = *a * *x * bi * yi;
            (e, a.adjoint(), -e.adjoint())
        }
        ClosedForm::Cf3 => {
            let p = *x * bi * yi;
            let e = p * *a;
            (e, Matrix6::identity(), -p.adjoint())
        }
        _ => {
            let p = bi * yi;
            let e = p * *a * *x;
            (e, (p * *a).adjoint(), -p.adjoint())
        }
    }
}
