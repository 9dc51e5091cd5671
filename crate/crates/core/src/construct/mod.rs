//! Explicit constructions: ReLU bumps, translate/dilate families, fitted approximators.

mod bump;
mod depth3;
mod lifted;
mod shallow_fit;

use serde::{Deserialize, Serialize};

pub use bump::{bump_1d, bump_nd, bump_value, family_member, tent};
pub use depth3::{build_depth3_approximator, GridSpec, Lattice};
pub use lifted::{build_lifted_approximator, LiftedReport};
pub use shallow_fit::{build_shallow_1d, KnotGrid, ShallowDictionary, UnitShape, SCALE_EXPONENTS};

/// How dictionary coefficients are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Coefficients read off target samples; no linear solve.
    Sample,
    /// Quadrature-weighted `L²` projection onto the dictionary.
    LeastSquares,
}

/// Location and width of one dictionary member. For lattice bumps `z` is the member offset
/// and `sigma` the dilation; for 1-D difference units `z` is the unit center and `sigma = 1/a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: FitMode,
    pub coefficients: Vec<f64>,
    pub atoms: Vec<Atom>,
    pub dictionary_size: usize,
    pub p: f64,
    /// `‖net − target‖_{L^p}` over the whole space, measured by quadrature.
    pub residual_lp: f64,
    pub residual_error_estimate: f64,
    pub target_norm: f64,
    /// `residual_lp / target_norm`, or `residual_lp` for a zero target.
    pub relative_residual: f64,
    /// Squared Cholesky pivot ratio; 1 in sample mode.
    pub condition_estimate: f64,
    /// The ridge fallback was used in the solve.
    pub regularized: bool,
}

impl FitReport {
    /// CSV rows `index,z,sigma,t`, with the components of `z` joined by `;`.
    pub fn coefficients_csv(&self) -> String {
        let mut s = String::from("index,z,sigma,t\n");
        for (i, (a, t)) in self.atoms.iter().zip(&self.coefficients).enumerate() {
            let z: Vec<String> = a.z.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&format!("{i},{},{:.16e},{t:.16e}\n", z.join(";"), a.sigma));
        }
        s
    }
}

pub(crate) fn relative(residual: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        residual / norm
    } else {
        residual
    }
}
