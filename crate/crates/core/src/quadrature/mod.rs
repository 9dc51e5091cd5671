//! Tail-aware composite Gauss–Legendre quadrature over boxes and planar cones.
//!
//! Bounded boxes are integrated in one pass over a cell grid. An unbounded axis is truncated
//! at radius `R₀`, then the truncation grows through `R₀·2ᵏ`; each new shell is integrated
//! separately and the schedule stops once the shell's mass of `|f|` falls below tolerance.

mod domain;
mod engine;
mod gauss;

use serde::{Deserialize, Serialize};

pub use domain::{Domain, MAX_DIM};
pub use engine::{box_nodes, integrate, lp_distance, lp_norm, NodeSet};
pub use gauss::GaussLegendre;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cells per axis on the core box.
    pub base_cells_per_axis: usize,
    /// Per-axis override of `base_cells_per_axis`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_cells: Option<Vec<usize>>,
    /// First truncation radius.
    pub r0: f64,
    /// Number of radius doublings after the core.
    pub max_doublings: u32,
    /// Gauss–Legendre points per axis per cell.
    pub order: usize,
    /// Per-axis knot hints; cells are split at every knot inside them.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub knots: Vec<Vec<f64>>,
    /// Evaluate cells on the rayon pool. Results do not depend on this flag.
    pub parallel: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            base_cells_per_axis: 64,
            axis_cells: None,
            r0: 4.0,
            max_doublings: 12,
            order: 8,
            knots: Vec::new(),
            parallel: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(Error::invalid("quadrature tolerances must be positive and finite"));
        }
        if self.order < 2 {
            return Err(Error::invalid(format!("rule order must be >= 2, got {}", self.order)));
        }
        if self.base_cells_per_axis == 0 {
            return Err(Error::invalid("base_cells_per_axis must be >= 1"));
        }
        if let Some(c) = &self.axis_cells {
            if c.contains(&0) {
                return Err(Error::invalid("axis_cells entries must be >= 1"));
            }
        }
        if !pos(self.r0) {
            return Err(Error::invalid(format!("r0 must be positive, got {}", self.r0)));
        }
        if self.max_doublings == 0 || self.max_doublings > 60 {
            return Err(Error::invalid("max_doublings must be in 1..=60"));
        }
        if self.knots.iter().flatten().any(|k| !k.is_finite()) {
            return Err(Error::invalid("knot hints must be finite"));
        }
        Ok(())
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.base_cells_per_axis = cells;
        self
    }

    pub fn with_axis_cells(mut self, cells: Vec<usize>) -> Self {
        self.axis_cells = Some(cells);
        self
    }

    pub fn with_knots(mut self, knots: Vec<Vec<f64>>) -> Self {
        self.knots = knots;
        self
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub(crate) fn cells_on_axis(&self, axis: usize) -> usize {
        self.axis_cells
            .as_ref()
            .and_then(|c| c.get(axis).copied())
            .unwrap_or(self.base_cells_per_axis)
    }

    pub(crate) fn knots_on_axis(&self, axis: usize) -> &[f64] {
        self.knots.get(axis).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// Final truncation radius; 0 for bounded domains.
    pub truncation_radius: f64,
    pub cells_evaluated: u64,
    pub converged: bool,
}
