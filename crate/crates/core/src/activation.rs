//! Scalar activations, their asymptotic-affine descriptors, and finite-difference units.
//!
//! The unbounded built-ins (ReLU, ELU, Softplus, LeakyReLU) are not integrable, but their
//! first difference `Δ¹₁[φ](x) = φ(x+1) − φ(x)` is a bounded, eventually monotone unit with
//! distinct limits at ±∞. A second difference of such a unit is integrable with integral equal
//! to the step times the jump between the limits. [`difference_integral`] measures that value.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::{self, Domain, QuadratureConfig, QuadratureResult};

/// Slopes and intercepts at ±∞: `φ(t) − β t → α` as `t → ±∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticAffine {
    pub beta_plus: f64,
    pub alpha_plus: f64,
    pub beta_minus: f64,
    pub alpha_minus: f64,
}

impl AsymptoticAffine {
    pub const fn new(beta_plus: f64, alpha_plus: f64, beta_minus: f64, alpha_minus: f64) -> Self {
        Self {
            beta_plus,
            alpha_plus,
            beta_minus,
            alpha_minus,
        }
    }

    /// Both slopes vanish, so the activation is bounded at infinity.
    pub fn is_bounded(&self) -> bool {
        self.beta_plus == 0.0 && self.beta_minus == 0.0
    }
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A caller-supplied activation.
#[derive(Clone)]
pub struct CustomActivation {
    pub name: String,
    eval: Arc<ScalarFn>,
    asymptotes: Option<AsymptoticAffine>,
}

impl CustomActivation {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        asymptotes: Option<AsymptoticAffine>,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            asymptotes,
        }
    }
}

impl fmt::Debug for CustomActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomActivation")
            .field("name", &self.name)
            .field("asymptotes", &self.asymptotes)
            .finish_non_exhaustive()
    }
}

/// A scalar activation function `φ`.
#[derive(Debug, Clone)]
pub enum Activation {
    Logistic,
    Relu,
    Elu { alpha: f64 },
    Softplus,
    LeakyRelu { alpha: f64 },
    Custom(CustomActivation),
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        use Activation::*;
        match (self, other) {
            (Logistic, Logistic) | (Relu, Relu) | (Softplus, Softplus) => true,
            (Elu { alpha: a }, Elu { alpha: b }) => a.to_bits() == b.to_bits(),
            (LeakyRelu { alpha: a }, LeakyRelu { alpha: b }) => a.to_bits() == b.to_bits(),
            (Custom(a), Custom(b)) => Arc::ptr_eq(&a.eval, &b.eval),
            _ => false,
        }
    }
}

impl Activation {
    /// ELU with the conventional `α = 1`.
    pub const ELU: Activation = Activation::Elu { alpha: 1.0 };

    pub fn elu(alpha: f64) -> Result<Self> {
        let a = Activation::Elu { alpha };
        a.validate()?;
        Ok(a)
    }

    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        let a = Activation::LeakyRelu { alpha };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::Elu { alpha } if !(alpha.is_finite() && alpha > 0.0) => Err(
                Error::invalid(format!("ELU alpha must be finite and > 0, got {alpha}")),
            ),
            Activation::LeakyRelu { alpha } if !alpha.is_finite() || alpha == 1.0 => Err(
                Error::invalid(format!("LeakyReLU alpha must be finite and != 1, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    /// Lowercase config name.
    pub fn name(&self) -> &str {
        match self {
            Activation::Logistic => "logistic",
            Activation::Relu => "relu",
            Activation::Elu { .. } => "elu",
            Activation::Softplus => "softplus",
            Activation::LeakyRelu { .. } => "leakyrelu",
            Activation::Custom(c) => &c.name,
        }
    }

    /// The five built-ins, with `alpha` used for ELU and LeakyReLU.
    pub fn builtins(alpha: f64) -> Vec<Activation> {
        vec![
            Activation::Logistic,
            Activation::Relu,
            Activation::Elu { alpha: 1.0 },
            Activation::Softplus,
            Activation::LeakyRelu { alpha },
        ]
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Activation::Logistic => logistic(x),
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Elu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x.exp_m1()
                }
            }
            Activation::Softplus => softplus(x),
            Activation::LeakyRelu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::Custom(ref c) => (c.eval)(x),
        }
    }

    /// [`Activation::eval`] with the finite-input contract enforced.
    pub fn checked_eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("activation input must be finite, got {x}")));
        }
        Ok(self.eval(x))
    }

    /// Analytic limit table. Custom activations return their supplied descriptors.
    pub fn asymptotes(&self) -> Result<AsymptoticAffine> {
        Ok(match *self {
            Activation::Logistic => AsymptoticAffine::new(0.0, 1.0, 0.0, 0.0),
            Activation::Relu | Activation::Softplus => AsymptoticAffine::new(1.0, 0.0, 0.0, 0.0),
            Activation::Elu { alpha } => AsymptoticAffine::new(1.0, 0.0, 0.0, -alpha),
            Activation::LeakyRelu { alpha } => AsymptoticAffine::new(1.0, 0.0, alpha, 0.0),
            Activation::Custom(ref c) => {
                return c.asymptotes.ok_or_else(|| {
                    Error::Unsupported(format!(
                        "custom activation `{}` has no asymptotic descriptors",
                        c.name
                    ))
                })
            }
        })
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

/// `log(1 + e^x)` without overflow: `max(x, 0) + log1p(e^{−|x|})`.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ActivationRepr {
    Name(String),
    Full {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::from_name(s, None)
    }
}

impl Activation {
    /// Resolve a config name, e.g. `("elu", Some(0.5))`.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        let a = match (name, alpha) {
            ("logistic", None) => Activation::Logistic,
            ("relu", None) => Activation::Relu,
            ("softplus", None) => Activation::Softplus,
            ("elu", a) => Activation::Elu {
                alpha: a.unwrap_or(1.0),
            },
            ("leakyrelu", Some(alpha)) => Activation::LeakyRelu { alpha },
            ("leakyrelu", None) => {
                return Err(Error::invalid("leakyrelu requires an `alpha` field"));
            }
            ("logistic" | "relu" | "softplus", Some(_)) => {
                return Err(Error::invalid(format!("activation `{name}` takes no alpha")));
            }
            _ => return Err(Error::invalid(format!("unknown activation `{name}`"))),
        };
        a.validate()?;
        Ok(a)
    }
}

impl Serialize for Activation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            Activation::Elu { alpha } | Activation::LeakyRelu { alpha } => ActivationRepr::Full {
                name: self.name().to_owned(),
                alpha: Some(alpha),
            },
            Activation::Custom(ref c) => {
                return Err(serde::ser::Error::custom(format!(
                    "custom activation `{}` cannot be serialized",
                    c.name
                )))
            }
            _ => ActivationRepr::Name(self.name().to_owned()),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Activation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (name, alpha) = match ActivationRepr::deserialize(d)? {
            ActivationRepr::Name(n) => (n, None),
            ActivationRepr::Full { name, alpha } => (name, alpha),
        };
        Activation::from_name(&name, alpha).map_err(serde::de::Error::custom)
    }
}

/// The order-`n` forward difference `Δⁿ_ρ[φ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceUnit {
    pub base: Activation,
    pub order: u32,
    pub step: f64,
}

impl DifferenceUnit {
    pub fn new(base: Activation, order: u32, step: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("difference order must be >= 1"));
        }
        if !step.is_finite() {
            return Err(Error::invalid(format!("difference step must be finite, got {step}")));
        }
        base.validate()?;
        Ok(Self { base, order, step })
    }

    /// `Δ¹_ρ[φ](x) = φ(x+ρ) − φ(x)`, with `Δⁿ = Δ¹ ∘ Δⁿ⁻¹`.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_order(self.order, x)
    }

    fn eval_order(&self, n: u32, x: f64) -> f64 {
        if n == 0 {
            return self.base.eval(x);
        }
        self.eval_order(n - 1, x + self.step) - self.eval_order(n - 1, x)
    }

    /// Closed form `Σ_k (−1)^{n−k} C(n,k) φ(x + kρ)`.
    pub fn eval_binomial(&self, x: f64) -> f64 {
        let n = self.order;
        let mut binom = 1.0;
        let mut acc = 0.0;
        for k in 0..=n {
            let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * binom * self.base.eval(x + k as f64 * self.step);
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
        acc
    }

    /// Limits of `Δ¹₁[φ]` at `(+∞, −∞)`, read off the asymptotic descriptors.
    pub fn unit_step_limits(base: &Activation) -> Result<(f64, f64)> {
        let a = base.asymptotes()?;
        if a.is_bounded() {
            Ok((0.0, 0.0))
        } else {
            Ok((a.beta_plus, a.beta_minus))
        }
    }
}

/// Difference unit evaluation with the finite-input contract enforced.
pub fn difference_eval(unit: &DifferenceUnit, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("difference input must be finite, got {x}")));
    }
    Ok(unit.eval(x))
}

/// Which bounded unit [`difference_integral`] integrates for a given base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandForm {
    /// `Δ¹_ρ[φ]` for bounded `φ`.
    Direct,
    /// `Δ¹_ρ[Δ¹₁[φ]]` for eventually-affine `φ` whose slope vanishes at −∞.
    Reduced,
    /// `Δ¹_ρ[φ]` for an activation with nonzero slope at −∞; not integrable.
    Raw,
}

pub fn integrand_form(base: &Activation) -> Result<IntegrandForm> {
    let a = base.asymptotes()?;
    Ok(if a.is_bounded() {
        IntegrandForm::Direct
    } else if a.beta_minus == 0.0 {
        IntegrandForm::Reduced
    } else {
        IntegrandForm::Raw
    })
}

/// The value `∫ Δ¹_ρ[ψ]` takes for the bounded unit `ψ` chosen by [`integrand_form`]:
/// the step times the jump between the limits of `ψ`.
pub fn expected_difference_integral(unit: &DifferenceUnit) -> Result<f64> {
    let a = unit.base.asymptotes()?;
    match integrand_form(&unit.base)? {
        IntegrandForm::Direct => Ok(unit.step * (a.alpha_plus - a.alpha_minus)),
        IntegrandForm::Reduced => Ok(unit.step * (a.beta_plus - a.beta_minus)),
        IntegrandForm::Raw => Err(Error::Unsupported(format!(
            "Δ¹[{}] has distinct nonzero limits; its first difference is not integrable",
            unit.base.name()
        ))),
    }
}

/// Tail-aware integral of an order-1 difference unit over ℝ.
///
/// Bounded bases are integrated directly. ReLU, ELU and Softplus are first reduced to the
/// sigmoidal unit `Δ¹₁[φ]`. LeakyReLU is integrated raw and fails with
/// [`Error::NonConvergence`] because its difference tends to `αρ` at −∞.
pub fn difference_integral(unit: &DifferenceUnit, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    if unit.order != 1 {
        return Err(Error::invalid(format!(
            "difference_integral needs an order-1 unit, got order {}",
            unit.order
        )));
    }
    let form = integrand_form(&unit.base)?;
    let phi = &unit.base;
    let rho = unit.step;
    let domain = Domain::real_line(1);
    match form {
        IntegrandForm::Direct | IntegrandForm::Raw => quadrature::integrate(
            |x: &[f64]| phi.eval(x[0] + rho) - phi.eval(x[0]),
            &domain,
            cfg,
        ),
        IntegrandForm::Reduced => {
            let sig = |t: f64| phi.eval(t + 1.0) - phi.eval(t);
            quadrature::integrate(|x: &[f64]| sig(x[0] + rho) - sig(x[0]), &domain, cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(Activation::Relu.eval(-1.5), 0.0);
        assert_eq!(Activation::Softplus.eval(0.0), std::f64::consts::LN_2);
        let elu = Activation::ELU.eval(-20.0);
        assert!((elu - ((-20.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!((elu + 1.0 - 2.061_153_622_438_558e-9).abs() < 1e-15);
        assert_eq!(Activation::Logistic.eval(0.0), 0.5);
    }

    #[test]
    fn softplus_is_overflow_safe() {
        assert_eq!(Activation::Softplus.eval(800.0), 800.0);
        assert!(Activation::Softplus.eval(-800.0) >= 0.0);
        let x: f64 = 40.0;
        let expected = x + (-x).exp().ln_1p();
        assert_eq!(Activation::Softplus.eval(x), expected);
        assert!((Activation::Softplus.eval(-40.0) - (-40.0f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(matches!(
            Activation::Relu.checked_eval(f64::NAN),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Activation::Logistic.checked_eval(f64::INFINITY).is_err());
    }

    #[test]
    fn parameter_invariants() {
        assert!(Activation::elu(0.0).is_err());
        assert!(Activation::elu(-1.0).is_err());
        assert!(Activation::leaky_relu(1.0).is_err());
        assert!(Activation::leaky_relu(0.1).is_ok());
        assert!(Activation::leaky_relu(-0.5).is_ok());
    }

    #[test]
    fn asymptote_table() {
        let relu = Activation::Relu.asymptotes().unwrap();
        assert_eq!(relu, AsymptoticAffine::new(1.0, 0.0, 0.0, 0.0));
        let leaky = Activation::leaky_relu(0.1).unwrap().asymptotes().unwrap();
        assert_eq!(leaky, AsymptoticAffine::new(1.0, 0.0, 0.1, 0.0));
        let logistic = Activation::Logistic.asymptotes().unwrap();
        assert_eq!(logistic, AsymptoticAffine::new(0.0, 1.0, 0.0, 0.0));
        let elu = Activation::elu(2.0).unwrap().asymptotes().unwrap();
        assert_eq!(elu, AsymptoticAffine::new(1.0, 0.0, 0.0, -2.0));
        let c = Activation::Custom(CustomActivation::new("tanh", f64::tanh, None));
        assert!(matches!(c.asymptotes(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn asymptotes_match_far_field_values() {
        for act in Activation::builtins(0.1) {
            let a = act.asymptotes().unwrap();
            let t = 60.0;
            assert!((act.eval(t) - a.beta_plus * t - a.alpha_plus).abs() < 1e-12, "{act:?}");
            assert!((act.eval(-t) + a.beta_minus * t - a.alpha_minus).abs() < 1e-12, "{act:?}");
        }
    }

    #[test]
    fn difference_examples() {
        let u = DifferenceUnit::new(Activation::Relu, 1, 1.0).unwrap();
        assert_eq!(u.eval(50.0), 1.0);
        assert_eq!(u.eval(-50.0), 0.0);
        let z = DifferenceUnit::new(Activation::Softplus, 1, 0.0).unwrap();
        assert_eq!(z.eval(0.3), 0.0);
        assert!(DifferenceUnit::new(Activation::Relu, 0, 1.0).is_err());
        assert!(difference_eval(&u, f64::NAN).is_err());
    }

    #[test]
    fn recursion_matches_binomial_expansion() {
        for act in Activation::builtins(0.2) {
            for order in 1..=4 {
                let u = DifferenceUnit::new(act.clone(), order, 0.7).unwrap();
                for i in 0..41 {
                    let x = -6.0 + 0.3 * i as f64;
                    assert!((u.eval(x) - u.eval_binomial(x)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn config_names_round_trip() {
        for act in Activation::builtins(0.25) {
            let json = serde_json::to_string(&act).unwrap();
            let back: Activation = serde_json::from_str(&json).unwrap();
            assert_eq!(back, act);
        }
        let a: Activation = serde_json::from_str(r#""elu""#).unwrap();
        assert_eq!(a, Activation::ELU);
        let a: Activation = serde_json::from_str(r#"{"name":"leakyrelu","alpha":0.1}"#).unwrap();
        assert_eq!(a, Activation::LeakyRelu { alpha: 0.1 });
        assert!(serde_json::from_str::<Activation>(r#""tanh""#).is_err());
        assert!(serde_json::from_str::<Activation>(r#"{"name":"elu","alpha":-1}"#).is_err());
    }

    #[test]
    fn integrand_forms() {
        assert_eq!(integrand_form(&Activation::Logistic).unwrap(), IntegrandForm::Direct);
        assert_eq!(integrand_form(&Activation::Relu).unwrap(), IntegrandForm::Reduced);
        assert_eq!(integrand_form(&Activation::ELU).unwrap(), IntegrandForm::Reduced);
        assert_eq!(
            integrand_form(&Activation::LeakyRelu { alpha: 0.1 }).unwrap(),
            IntegrandForm::Raw
        );
    }

    #[test]
    fn difference_integrals() {
        let cfg = QuadratureConfig::default();
        for rho in [0.5, 1.0, 2.0, 2.5] {
            let u = DifferenceUnit::new(Activation::Logistic, 1, rho).unwrap();
            let r = difference_integral(&u, &cfg).unwrap();
            assert!((r.value - rho).abs() < 1e-6, "rho={rho}: {}", r.value);
            assert_eq!(expected_difference_integral(&u).unwrap(), rho);
        }
        let zero = DifferenceUnit::new(Activation::Logistic, 1, 0.0).unwrap();
        assert_eq!(difference_integral(&zero, &cfg).unwrap().value, 0.0);
        for act in [Activation::Relu, Activation::ELU, Activation::Softplus] {
            let u = DifferenceUnit::new(act, 1, 1.5).unwrap();
            let r = difference_integral(&u, &cfg).unwrap();
            assert!((r.value - 1.5).abs() < 1e-6, "{:?}: {}", u.base, r.value);
        }
        let leaky = DifferenceUnit::new(Activation::LeakyRelu { alpha: 0.1 }, 1, 1.0).unwrap();
        assert!(matches!(
            difference_integral(&leaky, &cfg),
            Err(Error::NonConvergence { .. })
        ));
        let two = DifferenceUnit::new(Activation::Logistic, 2, 1.0).unwrap();
        assert!(matches!(difference_integral(&two, &cfg), Err(Error::InvalidArgument(_))));
    }
}
