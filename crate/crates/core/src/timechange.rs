//! Time changes of the horocycle flow on the Bolza quotient.
//!
//! A positive function `ρ` on `M` defines `φ_s(x) = φ̃_{τ(x,s)}(x)` with
//! `∂_s τ(x, s) = 1/ρ(φ_s(x))`, so `φ` has vector field `X_φ = ρ⁻¹ X_φ̃`.
//! Orbits of `φ` are computed on the exact horocycle leaf; only the scalar
//! clock `τ` is integrated numerically.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WuModel;
use crate::ode::{integrate, FlowConfig, Rhs};
use crate::sl2::GroupElement;
use crate::surface::{invariant_bump, FuchsianGroup, Observable, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: GroupElement,
    pub width: f64,
}

/// The density `ρ` of a time change together with its bounds.
#[derive(Clone, Debug)]
pub struct TimeChange {
    rho: Observable,
    min_rho: f64,
    max_rho: f64,
}

impl TimeChange {
    pub fn identity() -> Self {
        Self { rho: Observable::constant(1.0), min_rho: 1.0, max_rho: 1.0 }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("constant time change must be positive, got {c}")));
        }
        Ok(Self { rho: Observable::constant(c), min_rho: c, max_rho: c })
    }

    /// `ρ = 1 + ε Σ_j F_j` for invariant bumps `F_j ∈ [0, 1]`.
    pub fn bump_sum(group: &Arc<FuchsianGroup>, bumps: &[BumpSpec], epsilon: f64) -> Result<Self> {
        let n = bumps.len() as f64;
        let min_rho = 1.0 + epsilon.min(0.0) * n;
        let max_rho = 1.0 + epsilon.max(0.0) * n;
        if !(min_rho > 0.0) {
            return Err(Error::InvalidArgument(format!("amplitude {epsilon} makes ρ non-positive")));
        }
        let mut rho = Observable::constant(1.0);
        for spec in bumps {
            let center = group.reduce(&spec.center)?;
            rho = rho.with_term(epsilon, invariant_bump(group, &center, spec.width)?);
        }
        Ok(Self { rho, min_rho, max_rho })
    }

    /// A user-supplied density with declared bounds. Only sampled checks of
    /// the bounds are possible; see [`Self::check_bounds`].
    pub fn from_observable(rho: Observable, min_rho: f64, max_rho: f64) -> Result<Self> {
        if !(min_rho > 0.0 && max_rho >= min_rho) {
            return Err(Error::InvalidArgument(format!("invalid bounds [{min_rho}, {max_rho}]")));
        }
        Ok(Self { rho, min_rho, max_rho })
    }

    pub fn observable(&self) -> &Observable {
        &self.rho
    }

    pub fn min_rho(&self) -> f64 {
        self.min_rho
    }

    pub fn max_rho(&self) -> f64 {
        self.max_rho
    }

    /// `Some(c)` when `ρ ≡ c`.
    pub fn constant_value(&self) -> Option<f64> {
        self.rho.is_constant().then(|| self.rho.constant_part())
    }

    pub fn rho(&self, x: &PhasePoint) -> f64 {
        self.rho.value(x)
    }

    /// `X_f ρ`.
    pub fn xf_rho(&self, x: &PhasePoint) -> f64 {
        self.rho.xf(x)
    }

    /// `X_φ̃ ρ`.
    pub fn xh_rho(&self, x: &PhasePoint) -> f64 {
        self.rho.xh(x)
    }

    /// `ρ⁻¹ X_f ρ = X_f(ln ρ)`.
    pub fn log_derivative_f(&self, x: &PhasePoint) -> f64 {
        let (v, df, _) = self.rho.jet(x);
        df / v
    }

    /// Largest violation of `min_rho ≤ ρ ≤ max_rho` over the given points.
    pub fn check_bounds(&self, points: &[PhasePoint]) -> f64 {
        points
            .iter()
            .map(|x| {
                let v = self.rho(x);
                (self.min_rho - v).max(v - self.max_rho).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Importance weights turning Liouville samples into `μ`-samples.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureWeights {
    /// `w_i = ρ(x_i) / mean(ρ)`, mean one.
    pub weights: Vec<f64>,
    /// Estimate of `∫ ρ dμ̃`.
    pub rho_mean_liouville: f64,
    /// Estimate of `∫ ρ⁻¹ dμ`.
    pub inv_rho_mean: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl MeasureWeights {
    /// Ratio estimate of `∫ F dμ` with its delta-method standard error.
    pub fn integrate(&self, values: &[f64]) -> Estimate {
        assert_eq!(values.len(), self.weights.len());
        let n = values.len() as f64;
        let mean = self.weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / n;
        let var = self.weights.iter().zip(values).map(|(w, v)| (w * (v - mean)).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate { mean, std_error: (var / n).sqrt() }
    }
}

/// The time-changed horocycle flow on `Γ\PSL(2,ℝ)` with the geodesic flow as
/// its Anosov flow.
#[derive(Clone, Debug)]
pub struct HorocycleFlow {
    group: Arc<FuchsianGroup>,
    time_change: TimeChange,
    config: FlowConfig,
}

impl HorocycleFlow {
    pub fn new(group: Arc<FuchsianGroup>, time_change: TimeChange, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { group, time_change, config })
    }

    pub fn group(&self) -> &Arc<FuchsianGroup> {
        &self.group
    }

    pub fn time_change(&self) -> &TimeChange {
        &self.time_change
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    /// `τ(x, s)`, integrating `dσ/ds = 1/ρ(φ̃_σ x)` from `σ(0) = 0`.
    pub fn tau(&self, x: &PhasePoint, s: f64) -> Result<f64> {
        if let Some(c) = self.time_change.constant_value() {
            return Ok(s / c);
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let mut rhs = LeafRhs::new(self, x, LeafRole::Clock)?;
        integrate(&mut rhs, 0.0, s, &self.config)
    }

    /// `τ(x, ·)⁻¹(σ) = ∫_0^σ ρ(φ̃_v x) dv`, integrated with the same scheme.
    pub fn tau_inverse(&self, x: &PhasePoint, sigma: f64) -> Result<f64> {
        if let Some(c) = self.time_change.constant_value() {
            return Ok(sigma * c);
        }
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let mut rhs = LeafRhs::new(self, x, LeafRole::Inverse)?;
        integrate(&mut rhs, 0.0, sigma, &self.config)
    }

    pub fn flow_phi(&self, x: &PhasePoint, s: f64) -> Result<PhasePoint> {
        if s == 0.0 {
            return self.group.reduce_point(x);
        }
        let sigma = self.tau(x, s)?;
        self.group.horocycle(x, sigma)
    }

    /// `X_φ F = ρ⁻¹ X_φ̃ F`.
    pub fn x_phi(&self, f: &Observable, x: &PhasePoint) -> f64 {
        f.xh(x) / self.time_change.rho(x)
    }

    /// Weights `w_i ∝ ρ(x_i)` for Liouville samples `x_i`.
    pub fn measure_weights(&self, samples: &[PhasePoint]) -> MeasureWeights {
        let rho: Vec<f64> = samples.iter().map(|x| self.time_change.rho(x)).collect();
        let n = rho.len().max(1) as f64;
        let mean = rho.iter().sum::<f64>() / n;
        let weights: Vec<f64> = rho.iter().map(|r| r / mean).collect();
        let inv_rho_mean = weights.iter().zip(&rho).map(|(w, r)| w / r).sum::<f64>() / n;
        MeasureWeights { weights, rho_mean_liouville: mean, inv_rho_mean }
    }

    /// Empirical `‖U^f_t F‖_μ / ‖F‖_μ` with `U^f_t F = F ∘ f_t`, maximised over
    /// the observables.
    ///
    /// Liouville measure is `f_t`-invariant, so
    /// `‖F ∘ f_t‖²_μ ∝ ∫ |F|² ρ∘f_{−t} dμ̃`; numerator and denominator are
    /// evaluated on the same Liouville samples.
    pub fn composition_norm(&self, observables: &[Observable], t: f64, samples: &[PhasePoint]) -> Result<f64> {
        let rho: Vec<f64> = samples.iter().map(|x| self.time_change.rho(x)).collect();
        let pulled = samples
            .iter()
            .map(|x| Ok(self.time_change.rho(&self.group.geodesic(x, -t)?)))
            .collect::<Result<Vec<f64>>>()?;
        let mut worst = 0.0f64;
        for f in observables {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, x) in samples.iter().enumerate() {
                let v = f.value(x).powi(2);
                num += v * pulled[i];
                den += v * rho[i];
            }
            if den > 0.0 {
                worst = worst.max((num / den).sqrt());
            }
        }
        Ok(worst)
    }
}

enum LeafRole {
    /// `y = σ`, `x = s`: `dσ/ds = 1/ρ(φ̃_σ x₀)`.
    Clock,
    /// `x = σ`, `y = s`: `ds/dσ = ρ(φ̃_σ x₀)`.
    Inverse,
}

/// Evaluates `ρ` along the horocycle through `x₀`, keeping a reduced anchor
/// near the current integration point so every evaluation is a short step.
struct LeafRhs<'a> {
    flow: &'a HorocycleFlow,
    role: LeafRole,
    anchor: PhasePoint,
    anchor_sigma: f64,
    last: Option<(f64, PhasePoint)>,
}

impl<'a> LeafRhs<'a> {
    fn new(flow: &'a HorocycleFlow, x: &PhasePoint, role: LeafRole) -> Result<Self> {
        let anchor = flow.group.reduce_point(x)?;
        Ok(Self { flow, role, anchor, anchor_sigma: 0.0, last: None })
    }

    fn point_at(&mut self, sigma: f64) -> Result<PhasePoint> {
        if let Some((s, p)) = self.last {
            if s == sigma {
                return Ok(p);
            }
        }
        let p = self.flow.group.horocycle(&self.anchor, sigma - self.anchor_sigma)?;
        self.last = Some((sigma, p));
        Ok(p)
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        match self.role {
            LeafRole::Clock => y,
            LeafRole::Inverse => x,
        }
    }
}

impl Rhs for LeafRhs<'_> {
    fn eval(&mut self, x: f64, y: f64) -> Result<f64> {
        let sigma = self.sigma(x, y);
        let p = self.point_at(sigma)?;
        let rho = self.flow.time_change.rho(&p);
        Ok(match self.role {
            LeafRole::Clock => 1.0 / rho,
            LeafRole::Inverse => rho,
        })
    }

    fn accept(&mut self, x: f64, y: f64) -> Result<()> {
        let sigma = self.sigma(x, y);
        self.anchor = self.point_at(sigma)?;
        self.anchor_sigma = sigma;
        Ok(())
    }
}

impl WuModel for HorocycleFlow {
    type Point = PhasePoint;

    fn anosov(&self, x: &PhasePoint, t: f64) -> Result<PhasePoint> {
        self.group.geodesic(x, t)
    }

    fn ln_lambda(&self) -> f64 {
        1.0
    }

    fn tau(&self, x: &PhasePoint, s: f64) -> Result<f64> {
        HorocycleFlow::tau(self, x, s)
    }

    fn tau_inverse(&self, x: &PhasePoint, sigma: f64) -> Result<f64> {
        HorocycleFlow::tau_inverse(self, x, sigma)
    }

    fn uniform_flow(&self, x: &PhasePoint, sigma: f64) -> Result<PhasePoint> {
        self.group.horocycle(x, sigma)
    }

    fn flow(&self, x: &PhasePoint, s: f64) -> Result<PhasePoint> {
        self.flow_phi(x, s)
    }

    fn distance(&self, x: &PhasePoint, y: &PhasePoint) -> f64 {
        self.group.quotient_distance(x, y).unwrap_or(f64::INFINITY)
    }

    fn is_minimal(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(epsilon: f64) -> HorocycleFlow {
        let group = Arc::new(FuchsianGroup::bolza());
        let tc = TimeChange::bump_sum(&group, &[BumpSpec { center: GroupElement::IDENTITY, width: 0.7 }], epsilon).unwrap();
        HorocycleFlow::new(group, tc, FlowConfig::default()).unwrap()
    }

    fn start() -> PhasePoint {
        // Base point near i so the horocycle crosses the bump immediately.
        let g = GroupElement::rotation(0.3).compose(&GroupElement::geodesic(0.2).unwrap());
        PhasePoint::unreduced(g)
    }

    #[test]
    fn trivial_clock_values() {
        let flow = setup(0.3);
        let x = start();
        assert_eq!(flow.tau(&x, 0.0).unwrap(), 0.0);
        assert_eq!(flow.tau_inverse(&x, 0.0).unwrap(), 0.0);
        let id = setup(0.0);
        assert_eq!(id.tau(&x, 2.5).unwrap(), 2.5);
        let group = Arc::new(FuchsianGroup::bolza());
        let c = HorocycleFlow::new(group, TimeChange::constant(2.0).unwrap(), FlowConfig::default()).unwrap();
        assert_eq!(c.tau_inverse(&x, 1.5).unwrap(), 3.0);
        assert!(TimeChange::constant(0.0).is_err());
    }

    #[test]
    fn clock_inverse_roundtrip_and_monotone() {
        let flow = setup(0.3);
        let x = start();
        let mut last = f64::NEG_INFINITY;
        for s in [-3.0, -1.0, 0.5, 1.0, 2.0, 4.0] {
            let sigma = flow.tau(&x, s).unwrap();
            assert!(sigma > last);
            last = sigma;
            let back = flow.tau_inverse(&x, sigma).unwrap();
            assert!((back - s).abs() < 1e-8, "s={s}: {back}");
        }
        // The bump slows the clock: ρ ≥ 1 gives τ(x, s) ≤ s.
        assert!(flow.tau(&x, 2.0).unwrap() < 2.0);
    }

    /// Fixed-step RK4 for `dσ/ds = 1/ρ(φ̃_σ x)`, stepping the leaf from `x`.
    fn rk4_clock(flow: &HorocycleFlow, x: &PhasePoint, s: f64, h: f64) -> f64 {
        let g = flow.group();
        let rate = |sigma: f64| 1.0 / flow.time_change().rho(&g.horocycle(x, sigma).unwrap());
        let n = (s / h).round() as usize;
        let h = s / n as f64;
        let mut y = 0.0;
        for _ in 0..n {
            let k1 = rate(y);
            let k2 = rate(y + 0.5 * h * k1);
            let k3 = rate(y + 0.5 * h * k2);
            let k4 = rate(y + h * k3);
            y += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
        y
    }

    #[test]
    fn flow_matches_fixed_step_oracle() {
        let flow = setup(0.3);
        let g = flow.group();
        let x = g.reduce_point(&start()).unwrap();
        let sigma = rk4_clock(&flow, &x, 1.0, 0.01);
        let expect = g.horocycle(&x, sigma).unwrap();
        let got = flow.flow_phi(&x, 1.0).unwrap();
        assert!((flow.tau(&x, 1.0).unwrap() - sigma).abs() < 1e-8);
        assert!(crate::sl2::distance(&got.rep, &expect.rep) < 1e-8);
        let id = setup(0.0);
        let plain = g.horocycle(&x, 2.0).unwrap();
        assert!(crate::sl2::distance(&id.flow_phi(&x, 2.0).unwrap().rep, &plain.rep) < 1e-14);
    }

    #[test]
    fn clock_cocycle_and_flow_property() {
        let flow = setup(0.3);
        let x = start();
        for (s, t) in [(1.5, 2.0), (-3.0, 4.5), (0.7, -2.2)] {
            let moved = flow.flow_phi(&x, s).unwrap();
            let lhs = flow.tau(&x, s + t).unwrap();
            let rhs = flow.tau(&x, s).unwrap() + flow.tau(&moved, t).unwrap();
            assert!((lhs - rhs).abs() < 1e-8);
            let twice = flow.flow_phi(&moved, t).unwrap();
            let once = flow.flow_phi(&x, s + t).unwrap();
            assert!(flow.group().quotient_distance(&twice, &once).unwrap() < 1e-7);
        }
    }

    #[test]
    fn composition_norm_respects_bound() {
        let flow = setup(0.3);
        let g = flow.group();
        let samples = g.sample_liouville(4000, 21);
        let f = Observable::bump(invariant_bump(g, &g.reduce(&GroupElement::geodesic(0.4).unwrap()).unwrap(), 0.6).unwrap());
        let bound = (flow.time_change().max_rho() / flow.time_change().min_rho()).sqrt();
        for t in [-3.0, 0.5, 2.0] {
            let n = flow.composition_norm(&[f.clone(), Observable::constant(1.0)], t, &samples).unwrap();
            assert!(n <= bound + 1e-12 && n >= 1.0);
        }
        assert!((flow.composition_norm(&[f], 0.0, &samples).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn measure_weights_normalize() {
        let flow = setup(0.3);
        let samples = flow.group().sample_liouville(2000, 5);
        let w = flow.measure_weights(&samples);
        let total = w.weights.iter().sum::<f64>() / samples.len() as f64;
        assert!((total - 1.0).abs() < 1e-12);
        assert!((w.inv_rho_mean * w.rho_mean_liouville - 1.0).abs() < 1e-12);
        let id = setup(0.0).measure_weights(&samples);
        assert!(id.weights.iter().all(|v| *v == 1.0));
        assert_eq!(flow.time_change().check_bounds(&samples), 0.0);
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let flow = setup(0.3);
        let x = flow.group().reduce(&start().rep).unwrap();
        let h = 1e-5;
        let g = flow.group();
        let fd = (flow.time_change().rho(&g.geodesic(&x, h).unwrap()) - flow.time_change().rho(&g.geodesic(&x, -h).unwrap()))
            / (2.0 * h);
        assert!((fd - flow.time_change().xf_rho(&x)).abs() < 1e-5);
    }
}
