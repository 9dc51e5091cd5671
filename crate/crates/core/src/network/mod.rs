//! Shallow networks `t₀ + Σ tᵢ φ(⟨yᵢ,x⟩+ϱᵢ)` and deep ReLU networks.
//!
//! Both evaluate every affine form `Σ wⱼ xⱼ + b` with a correctly rounded dot product, so
//! the result depends only on the exact real value of the form. This makes `shallow_to_deep`
//! bit-exact and keeps the ReLU bumps exactly zero off their support.

mod deep;
mod shallow;

pub use deep::{AffineMap, DeepReluNet};
pub use shallow::{Neuron, ShallowNet};

use crate::error::Result;

/// `t₀ + Σ tᵢ φ(⟨yᵢ,x⟩+ϱᵢ)`.
pub fn shallow_eval(net: &ShallowNet, x: &[f64]) -> Result<f64> {
    net.eval(x)
}

/// Forward pass of a deep ReLU net with scalar output.
pub fn deep_eval(net: &DeepReluNet, x: &[f64]) -> Result<f64> {
    net.eval(x)
}

/// The ridge net `x ↦ net1d(⟨y,x⟩)`.
pub fn lift_ridge(net1d: &ShallowNet, y: &[f64]) -> Result<ShallowNet> {
    net1d.lift_ridge(y)
}

/// A deep net evaluating to `a + b`.
pub fn net_sum(a: &DeepReluNet, b: &DeepReluNet) -> Result<DeepReluNet> {
    DeepReluNet::sum_all(&[a.clone(), b.clone()])
}

/// `x ↦ net(Λx)`.
pub fn affine_precompose(net: &DeepReluNet, lambda: &AffineMap) -> Result<DeepReluNet> {
    net.precompose(lambda)
}

/// Embeds a ReLU shallow net as a depth-2 deep net.
pub fn shallow_to_deep(net: &ShallowNet) -> Result<DeepReluNet> {
    net.to_deep()
}
