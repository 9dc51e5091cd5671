use serde::{Deserialize, Serialize};

use super::depth3::{pow_abs, root};
use super::shallow_fit::{build_shallow_1d, KnotGrid, ShallowDictionary};
use super::{FitMode, FitReport};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::network::ShallowNet;
use crate::quadrature::{self, Domain, QuadratureConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedReport {
    /// Report of the underlying 1-D fit.
    pub fit: FitReport,
    pub y: Vec<f64>,
    pub p: f64,
    pub residual_1d: f64,
    /// `‖γ̂(⟨y,·⟩) − γ(⟨y,·⟩)‖_{L^p(ℝ×[0,1]ⁿ)}`.
    pub residual_lifted: f64,
    pub residual_lifted_error_estimate: f64,
    /// `residual_lifted / residual_1d`; absent when the 1-D residual is zero.
    pub ratio: Option<f64>,
    /// `|y₀|^{−1/p}`.
    pub expected_ratio: f64,
}

/// Quadrature settings for `ℝ × [0,1]ⁿ` that resolve the lifted units.
pub(crate) fn lifted_config(dict_window: f64, max_scale: f64, y: &[f64], cfg: &QuadratureConfig) -> QuadratureConfig {
    let y0 = y[0].abs();
    let spread: f64 = y[1..].iter().map(|v| v.abs()).sum();
    let r0 = (dict_window + spread) / y0;
    let mut cells = vec![cfg.cells_on_axis(0).max((r0 * max_scale * y0).ceil() as usize)];
    cells.extend(y[1..].iter().map(|v| ((max_scale * v.abs() / 2.0).ceil() as usize).max(1)));
    let mut c = cfg.clone();
    c.r0 = r0;
    c.axis_cells = Some(cells);
    c.knots.clear();
    c
}

/// Fits `γ` on ℝ with [`build_shallow_1d`] and lifts the result along `y`.
///
/// Both residuals are measured by quadrature; the lifted one over `ℝ × [0,1]ⁿ` with
/// `n = y.len() − 1`. Their ratio should equal `|y₀|^{−1/p}`.
#[allow(clippy::too_many_arguments)]
pub fn build_lifted_approximator<F>(
    gamma_target: F,
    y: &[f64],
    activation: &Activation,
    k: usize,
    knots: KnotGrid,
    mode: FitMode,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<(ShallowNet, LiftedReport)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if y.is_empty() || y.len() > quadrature::MAX_DIM {
        return Err(Error::invalid(format!("lift direction length must be 1..={}", quadrature::MAX_DIM)));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("lift direction must be finite"));
    }
    if y[0] == 0.0 {
        return Err(Error::invalid("lift direction needs y₀ != 0"));
    }
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::invalid(format!("lifted approximation needs p >= 2, got {p}")));
    }
    let (net1d, fit) = build_shallow_1d(&gamma_target, activation, k, knots, mode, p, cfg)?;
    let lifted = net1d.lift_ridge(y)?;
    let dict = ShallowDictionary::new(activation.clone(), k, knots)?;
    let lcfg = lifted_config(dict.window(), dict.max_scale(), y, cfg);
    let dot = |x: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let r = quadrature::integrate(
        |x: &[f64]| pow_abs(lifted.eval_fast(x) - gamma_target(&[dot(x)]), p),
        &Domain::strip(y.len() - 1),
        &lcfg,
    )?;
    let (residual_lifted, err) = root(r.value, r.abs_error_estimate, p);
    let residual_1d = fit.residual_lp;
    let report = LiftedReport {
        y: y.to_vec(),
        p,
        residual_1d,
        residual_lifted,
        residual_lifted_error_estimate: err,
        ratio: (residual_1d > 0.0).then(|| residual_lifted / residual_1d),
        expected_ratio: y[0].abs().powf(-1.0 / p),
        fit,
    };
    Ok((lifted, report))
}
