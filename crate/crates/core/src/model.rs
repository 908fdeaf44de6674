//! The common face of the two W^u models: the time-changed horocycle flow on
//! the Bolza quotient and the cat-map suspension oracle.

use std::fmt::Debug;

use crate::error::Result;

/// A codimension-one Anosov flow `f_t` together with a W^u flow `φ_s` that is
/// a time change of a uniformly expanding parametrisation `φ̃_σ`:
/// `φ_s(x) = φ̃_{τ(x,s)}(x)` and `f_t ∘ φ̃_σ = φ̃_{λ^t σ} ∘ f_t`.
pub trait WuModel: Sync {
    type Point: Clone + Debug + Send + Sync;

    /// `f_t(x)`.
    fn anosov(&self, x: &Self::Point, t: f64) -> Result<Self::Point>;

    /// `ln λ` of the uniformly expanding parametrisation.
    fn ln_lambda(&self) -> f64;

    /// `τ(x, s)`: the `φ̃`-time reached after `φ`-time `s`.
    fn tau(&self, x: &Self::Point, s: f64) -> Result<f64>;

    /// The `φ`-time `s` with `τ(x, s) = sigma`.
    fn tau_inverse(&self, x: &Self::Point, sigma: f64) -> Result<f64>;

    /// `φ̃_σ(x)`, exact up to rounding.
    fn uniform_flow(&self, x: &Self::Point, sigma: f64) -> Result<Self::Point>;

    /// `φ_s(x) = φ̃_{τ(x,s)}(x)`.
    fn flow(&self, x: &Self::Point, s: f64) -> Result<Self::Point> {
        let sigma = self.tau(x, s)?;
        self.uniform_flow(x, sigma)
    }

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// Whether `φ` is minimal, which mixing and Mourre experiments require.
    fn is_minimal(&self) -> bool;
}
