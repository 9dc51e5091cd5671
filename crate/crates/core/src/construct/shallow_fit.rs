use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::depth3::{pow_abs, root};
use super::{relative, Atom, FitMode, FitReport};
use crate::activation::{integrand_form, Activation, IntegrandForm};
use crate::error::{Error, Result};
use crate::lstsq;
use crate::network::{Neuron, ShallowNet};
use crate::quadrature::{self, box_nodes, Domain, QuadratureConfig};

/// Dictionary scales are `a = 2ʲ` for these `j`.
pub const SCALE_EXPONENTS: RangeInclusive<i32> = -2..=5;

/// Fit window margin, in units of the widest unit's length scale `1/a_min`.
const MARGIN_WIDTHS: f64 = 16.0;

/// Unit centers are spread evenly over `[lo, hi]` at every scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotGrid {
    pub lo: f64,
    pub hi: f64,
}

impl KnotGrid {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("knot grid needs finite lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    fn points(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![0.5 * (self.lo + self.hi)],
            _ => (0..count)
                .map(|i| self.lo + (self.hi - self.lo) * (i as f64 / (count - 1) as f64))
                .collect(),
        }
    }
}

/// Integrable unit built from `φ`: `Δ¹₁[φ]` for bounded `φ`, `Δ¹₁[Δ¹₁[φ]]` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitShape {
    FirstDifference,
    SecondDifference,
}

impl UnitShape {
    fn stencil(self) -> &'static [f64] {
        match self {
            UnitShape::FirstDifference => &[-1.0, 1.0],
            UnitShape::SecondDifference => &[1.0, -2.0, 1.0],
        }
    }

    /// Distance from the unit's first tap to its center, in units of `1/a`.
    fn half_width(self) -> f64 {
        (self.stencil().len() - 1) as f64 / 2.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    a: f64,
    center: f64,
    /// Bias of the first tap; tap `m` uses `biases[m]`.
    biases: [f64; 3],
}

/// `K` units `x ↦ Σₘ sₘ φ(a·x + b + m)` centered on a knot grid, across the scale ladder.
#[derive(Debug, Clone)]
pub struct ShallowDictionary {
    activation: Activation,
    shape: UnitShape,
    units: Vec<Unit>,
    /// `∫ unit(z) dz` at `a = 1`.
    unit_integral: f64,
    /// Scale index and knot spacing per unit, for sample mode.
    spacing: Vec<f64>,
    scales_used: usize,
}

impl ShallowDictionary {
    pub fn new(activation: Activation, k: usize, knots: KnotGrid) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("dictionary size K must be >= 1"));
        }
        activation.validate()?;
        let asym = activation.asymptotes()?;
        let (shape, unit_integral) = match integrand_form(&activation)? {
            IntegrandForm::Direct => (UnitShape::FirstDifference, asym.alpha_plus - asym.alpha_minus),
            IntegrandForm::Reduced | IntegrandForm::Raw => {
                (UnitShape::SecondDifference, asym.beta_plus - asym.beta_minus)
            }
        };
        let scales: Vec<f64> = SCALE_EXPONENTS.map(|j| 2f64.powi(j)).collect();
        let ns = scales.len();
        let mut units = Vec::with_capacity(k);
        let mut spacing = Vec::with_capacity(k);
        let mut scales_used = 0;
        for (s, &a) in scales.iter().enumerate() {
            let count = k / ns + usize::from(s < k % ns);
            if count > 0 {
                scales_used += 1;
            }
            let pts = knots.points(count);
            let h = if count > 1 {
                (knots.hi - knots.lo) / (count - 1) as f64
            } else {
                (knots.hi - knots.lo).max(1.0 / a)
            };
            for c in pts {
                let b0 = -a * c - shape.half_width();
                units.push(Unit {
                    a,
                    center: c,
                    biases: [b0, b0 + 1.0, b0 + 2.0],
                });
                spacing.push(h);
            }
        }
        Ok(Self {
            activation,
            shape,
            units,
            unit_integral,
            spacing,
            scales_used,
        })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn shape(&self) -> UnitShape {
        self.shape
    }

    pub fn neurons_per_unit(&self) -> usize {
        self.shape.stencil().len()
    }

    /// Unit `i` at `x`, rounded exactly as the expanded neurons round it.
    pub fn unit_value(&self, i: usize, x: f64) -> f64 {
        let u = &self.units[i];
        let mut s = 0.0;
        for (m, &w) in self.shape.stencil().iter().enumerate() {
            s += w * self.activation.eval(u.a.mul_add(x, u.biases[m]));
        }
        s
    }

    pub fn atoms(&self) -> Vec<Atom> {
        self.units
            .iter()
            .map(|u| Atom {
                z: vec![u.center],
                sigma: 1.0 / u.a,
            })
            .collect()
    }

    /// Symmetric window `[−W, W]` outside which every unit is negligible.
    pub fn window(&self) -> f64 {
        let a_min = self.units.iter().map(|u| u.a).fold(f64::INFINITY, f64::min);
        let reach = self.units.iter().map(|u| u.center.abs()).fold(0.0, f64::max);
        reach + MARGIN_WIDTHS / a_min
    }

    pub fn max_scale(&self) -> f64 {
        self.units.iter().map(|u| u.a).fold(0.0, f64::max)
    }

    /// Quasi-interpolant weights `target(cᵢ)·h·a / (∫unit · #scales)`.
    fn sample_coefficients(&self, target: &dyn Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
        if self.unit_integral == 0.0 {
            return Err(Error::Unsupported(format!(
                "difference unit of `{}` has zero integral; sample mode is undefined",
                self.activation.name()
            )));
        }
        Ok(self
            .units
            .iter()
            .zip(&self.spacing)
            .map(|(u, h)| target(&[u.center]) * h * u.a / (self.unit_integral * self.scales_used as f64))
            .collect())
    }

    /// Expands each unit with a nonzero coefficient into its `φ`-neurons.
    pub fn to_net(&self, coeffs: &[f64]) -> Result<ShallowNet> {
        let mut neurons = Vec::new();
        for (u, &c) in self.units.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            for (m, &w) in self.shape.stencil().iter().enumerate() {
                neurons.push(Neuron::new(w * c, vec![u.a], u.biases[m]));
            }
        }
        ShallowNet::new(1, self.activation.clone(), 0.0, neurons)
    }

    /// Quadrature settings whose core grid resolves the finest unit over the window.
    pub fn fit_config(&self, cfg: &QuadratureConfig) -> QuadratureConfig {
        let w = self.window();
        let cells = cfg.cells_on_axis(0).max((w * self.max_scale()).ceil() as usize);
        let mut c = cfg.clone();
        c.r0 = w;
        c.axis_cells = Some(vec![cells]);
        c.knots.truncate(1);
        c
    }
}

/// Fits a 1-D shallow net over `φ` to `target` in `L^p(ℝ)`.
///
/// Least-squares mode projects onto the dictionary in `L²` on the nodes of `[−W, W]`, which
/// are the core nodes of the residual quadrature. The residual is measured over ℝ at `p`.
pub fn build_shallow_1d<F>(
    target: F,
    activation: &Activation,
    k: usize,
    knots: KnotGrid,
    mode: FitMode,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<(ShallowNet, FitReport)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must be finite and >= 1, got {p}")));
    }
    let dict = ShallowDictionary::new(activation.clone(), k, knots)?;
    let qcfg = dict.fit_config(cfg);
    let (coefficients, condition_estimate, regularized) = match mode {
        FitMode::Sample => (dict.sample_coefficients(&target)?, 1.0, false),
        FitMode::LeastSquares => {
            let w = dict.window();
            let nodes = box_nodes(&[(-w, w)], &qcfg)?;
            let (g, r) = lstsq::dense_normal_equations(&nodes.weights, dict.len(), qcfg.parallel, |i, out| {
                let x = nodes.points[i];
                for (j, o) in out.iter_mut().enumerate() {
                    *o = dict.unit_value(j, x);
                }
                target(&[x])
            });
            let s = lstsq::solve_gram(g, r)?;
            (s.coefficients, s.condition_estimate, s.regularized)
        }
    };
    let net = dict.to_net(&coefficients)?;
    let line = Domain::real_line(1);
    let err = quadrature::integrate(|x: &[f64]| pow_abs(net.eval_fast(x) - target(x), p), &line, &qcfg)?;
    let tn = quadrature::integrate(|x: &[f64]| pow_abs(target(x), p), &line, &qcfg)?;
    let (residual_lp, residual_error_estimate) = root(err.value, err.abs_error_estimate, p);
    let (target_norm, _) = root(tn.value, 0.0, p);
    let report = FitReport {
        mode,
        atoms: dict.atoms(),
        dictionary_size: dict.len(),
        coefficients,
        p,
        residual_lp,
        residual_error_estimate,
        target_norm,
        relative_residual: relative(residual_lp, target_norm),
        condition_estimate,
        regularized,
    };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_layout() {
        let d = ShallowDictionary::new(Activation::Logistic, 20, KnotGrid::new(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d.shape(), UnitShape::FirstDifference);
        let atoms = d.atoms();
        // 20 = 8·2 + 4: the four coarsest scales get three knots
        assert_eq!(atoms[0].sigma, 4.0);
        assert_eq!(atoms[0].z, vec![-1.0]);
        assert_eq!(atoms[1].z, vec![0.0]);
        assert_eq!(atoms.last().unwrap().sigma, 1.0 / 32.0);
        let r = ShallowDictionary::new(Activation::Relu, 3, KnotGrid::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.shape(), UnitShape::SecondDifference);
        assert_eq!(r.neurons_per_unit(), 3);
        assert!(ShallowDictionary::new(Activation::Relu, 0, KnotGrid::new(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn units_are_centered_bumps() {
        for act in [Activation::Logistic, Activation::Relu] {
            let d = ShallowDictionary::new(act.clone(), 8, KnotGrid::new(2.0, 2.0).unwrap()).unwrap();
            for i in 0..d.len() {
                let a = 1.0 / d.atoms()[i].sigma;
                let peak = d.unit_value(i, 2.0);
                assert!(peak > 0.0, "{act:?}");
                let left = d.unit_value(i, 2.0 - 0.3 / a);
                let right = d.unit_value(i, 2.0 + 0.3 / a);
                assert!(left < peak && (left - right).abs() < 1e-12, "{act:?} scale {a}");
            }
        }
    }

    #[test]
    fn expansion_matches_units() {
        let d = ShallowDictionary::new(Activation::Softplus, 16, KnotGrid::new(-2.0, 2.0).unwrap()).unwrap();
        let c: Vec<f64> = (0..16).map(|i| if i % 3 == 0 { 0.0 } else { i as f64 - 7.5 }).collect();
        let net = d.to_net(&c).unwrap();
        assert_eq!(net.neurons().len(), 3 * c.iter().filter(|v| **v != 0.0).count());
        for x in [-3.0, -0.1, 0.4, 2.5] {
            let direct: f64 = (0..16).map(|i| c[i] * d.unit_value(i, x)).sum();
            assert!((net.eval(&[x]).unwrap() - direct).abs() < 1e-12);
        }
    }
}
