use serde::{Deserialize, Serialize};

use super::{AffineMap, DeepReluNet};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::exact::{ExactSum, Neumaier};

/// One term `t·φ(⟨y,x⟩+ϱ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Neuron {
    pub t: f64,
    pub y: Vec<f64>,
    pub rho: f64,
}

impl Neuron {
    pub fn new(t: f64, y: Vec<f64>, rho: f64) -> Self {
        Self { t, y, rho }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawShallow")]
pub struct ShallowNet {
    dim: usize,
    activation: Activation,
    t0: f64,
    neurons: Vec<Neuron>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShallow {
    dim: usize,
    activation: Activation,
    #[serde(default)]
    t0: f64,
    neurons: Vec<Neuron>,
}

impl TryFrom<RawShallow> for ShallowNet {
    type Error = Error;

    fn try_from(r: RawShallow) -> Result<Self> {
        ShallowNet::new(r.dim, r.activation, r.t0, r.neurons)
    }
}

impl ShallowNet {
    pub fn new(dim: usize, activation: Activation, t0: f64, neurons: Vec<Neuron>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("shallow net dimension must be >= 1"));
        }
        activation.validate()?;
        if !t0.is_finite() {
            return Err(Error::invalid("constant term must be finite"));
        }
        for (i, n) in neurons.iter().enumerate() {
            if n.y.len() != dim {
                return Err(Error::invalid(format!(
                    "neuron {i}: weight length {} != dim {dim}",
                    n.y.len()
                )));
            }
            if !n.t.is_finite() || !n.rho.is_finite() || n.y.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("neuron {i}: non-finite parameter")));
            }
        }
        Ok(Self {
            dim,
            activation,
            t0,
            neurons,
        })
    }

    /// The constant net `t0`.
    pub fn constant(dim: usize, activation: Activation, t0: f64) -> Result<Self> {
        Self::new(dim, activation, t0, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has length {}, net has dim {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// [`ShallowNet::eval`] without the length check; `x.len()` must equal `dim`.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut inner = ExactSum::new();
        let mut outer = ExactSum::new();
        outer.add(self.t0);
        for n in &self.neurons {
            inner.clear();
            inner.add(n.rho);
            for (w, xi) in n.y.iter().zip(x) {
                inner.add_product(*w, *xi);
            }
            outer.add_product(n.t, self.activation.eval(inner.value()));
        }
        outer.value()
    }

    /// Plain fused dot products and a compensated outer sum. Agrees with
    /// [`ShallowNet::eval`] to a few ulps of the largest term, several times faster;
    /// meant for quadrature loops. `x.len()` must equal `dim`.
    pub fn eval_fast(&self, x: &[f64]) -> f64 {
        let mut outer = Neumaier::default();
        outer.add(self.t0);
        for n in &self.neurons {
            let mut z = n.rho;
            for (w, xi) in n.y.iter().zip(x) {
                z = w.mul_add(*xi, z);
            }
            outer.add(n.t * self.activation.eval(z));
        }
        outer.value()
    }

    /// `x ↦ self(⟨y,x⟩)`: each neuron `(t, a, ϱ)` becomes `(t, a·y, ϱ)`.
    pub fn lift_ridge(&self, y: &[f64]) -> Result<ShallowNet> {
        if self.dim != 1 {
            return Err(Error::invalid(format!("lift_ridge needs a 1-D net, got dim {}", self.dim)));
        }
        if y.is_empty() || y.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("lift direction must be nonzero"));
        }
        let neurons = self
            .neurons
            .iter()
            .map(|n| Neuron::new(n.t, y.iter().map(|v| n.y[0] * v).collect(), n.rho))
            .collect();
        ShallowNet::new(y.len(), self.activation.clone(), self.t0, neurons)
    }

    /// One hidden ReLU layer holding every neuron. An empty net gets one zero neuron.
    pub fn to_deep(&self) -> Result<DeepReluNet> {
        if self.activation != Activation::Relu {
            return Err(Error::Unsupported(format!(
                "only ReLU nets embed into deep ReLU nets, got `{}`",
                self.activation.name()
            )));
        }
        let (w1, b1, w2): (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) = if self.neurons.is_empty() {
            (vec![vec![0.0; self.dim]], vec![0.0], vec![0.0])
        } else {
            (
                self.neurons.iter().map(|n| n.y.clone()).collect(),
                self.neurons.iter().map(|n| n.rho).collect(),
                self.neurons.iter().map(|n| n.t).collect(),
            )
        };
        DeepReluNet::new(
            self.dim,
            vec![
                AffineMap::dense(w1, b1)?,
                AffineMap::dense(vec![w2], vec![self.t0])?,
            ],
        )
    }
}
