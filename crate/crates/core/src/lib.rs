//! Numerical laboratory for approximation by shallow and deep networks on unbounded domains.
//!
//! * [`activation`]: scalar activations, asymptotic descriptors, finite-difference units.
//! * [`quadrature`]: box and cone domains, tail-aware composite Gauss–Legendre integration.
//! * [`network`]: shallow nets `t₀ + Σ tᵢ φ(⟨yᵢ,x⟩+ϱᵢ)` and deep ReLU nets with exact algebra.
//! * [`construct`]: ReLU bumps, translate/dilate families and fitted approximators.
//! * [`lab`]: ridge-norm growth, the cone integral and fit-then-probe experiments.

pub mod activation;
pub mod construct;
pub mod error;
pub mod exact;
pub mod lab;
pub mod lstsq;
pub mod network;
mod par;
pub mod quadrature;

pub use activation::{Activation, AsymptoticAffine, CustomActivation, DifferenceUnit};
pub use error::{Error, Result};
pub use network::{AffineMap, DeepReluNet, Neuron, ShallowNet};
pub use quadrature::{Domain, QuadratureConfig, QuadratureResult};
