//! Birkhoff averages along `φ`, the averaged field `c_t` and the scalar
//! Mourre certificate built from it.

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{u_field, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::model::WuModel;
use crate::surface::{Observable, PhasePoint};
use crate::timechange::HorocycleFlow;

/// Largest number of orbit nodes a single average may request.
pub const NODE_BUDGET: f64 = 1e8;

/// Points `φ_{k h}(x)` for `k = 0..=n`.
pub fn orbit(flow: &HorocycleFlow, x: &PhasePoint, h: f64, n: usize) -> Result<Vec<PhasePoint>> {
    if n as f64 > NODE_BUDGET {
        return Err(Error::BudgetExceeded { requested: n as f64, budget: NODE_BUDGET });
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut y = flow.group().reduce_point(x)?;
    out.push(y);
    for _ in 0..n {
        y = flow.flow_phi(&y, h)?;
        out.push(y);
    }
    Ok(out)
}

/// Number of equal steps of size at most `step` covering `[0, horizon]`.
fn node_count(horizon: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !(horizon >= step) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("need horizon ≥ step > 0, got T={horizon}, step={step}")));
    }
    let n = (horizon / step * (1.0 - 1e-12)).ceil();
    if n > NODE_BUDGET {
        return Err(Error::BudgetExceeded { requested: n, budget: NODE_BUDGET });
    }
    Ok(n as usize)
}

fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().sum();
    (inner + 0.5 * (values[0] + values[n])) / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BirkhoffResult {
    pub value: f64,
    pub horizon: f64,
    pub step: f64,
    pub start: PhasePoint,
}

/// Trapezoidal time average `T⁻¹ ∫_0^T F(φ_s x) ds`.
pub fn birkhoff(flow: &HorocycleFlow, f: &Observable, x: &PhasePoint, horizon: f64, step: f64) -> Result<BirkhoffResult> {
    let n = node_count(horizon, step)?;
    let h = horizon / n as f64;
    let values: Vec<f64> = orbit(flow, x, h, n)?.iter().map(|y| f.value(y)).collect();
    Ok(BirkhoffResult { value: trapezoid_mean(&values), horizon, step: h, start: *x })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BirkhoffEnsemble {
    pub runs: Vec<BirkhoffResult>,
    pub mean: f64,
    pub variance_across_starts: f64,
    pub std_error: f64,
}

/// Independent averages from several starts, run in parallel.
pub fn birkhoff_starts(
    flow: &HorocycleFlow,
    f: &Observable,
    starts: &[PhasePoint],
    horizon: f64,
    step: f64,
) -> Result<BirkhoffEnsemble> {
    let runs = starts.par_iter().map(|x| birkhoff(flow, f, x, horizon, step)).collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let (mean, variance) = mean_variance(&values);
    Ok(BirkhoffEnsemble { runs, mean, variance_across_starts: variance, std_error: (variance / values.len() as f64).sqrt() })
}

/// Sample mean and unbiased variance (zero for a single value).
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtConfig {
    /// Quadrature step in `φ`-time.
    pub step: f64,
    pub delta_t: f64,
    pub delta_s: f64,
}

impl Default for CtConfig {
    fn default() -> Self {
        Self { step: 1e-2, delta_t: DEFAULT_DELTA, delta_s: DEFAULT_DELTA }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtValue {
    pub c_t: f64,
    /// `X_φ c_t`, from the windows shifted by one node either way.
    pub x_phi_c_t: f64,
}

/// `c_t(x) = t⁻¹ ∫_0^t u_{0,0}(φ_s x) ds` by the trapezoidal rule.
pub fn c_t_field(flow: &HorocycleFlow, t: f64, x: &PhasePoint, cfg: &CtConfig) -> Result<CtValue> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("c_t needs t > 0, got {t}")));
    }
    let n = node_count(t, cfg.step)?;
    let h = t / n as f64;
    let before = flow.flow_phi(x, -h)?;
    let nodes = orbit(flow, &before, h, n + 2)?;
    let u = nodes
        .iter()
        .map(|y| u_field(flow, 0.0, 0.0, y, cfg.delta_t, cfg.delta_s))
        .collect::<Result<Vec<_>>>()?;
    // u[k] sits at φ-time (k − 1) h.
    let c_t = trapezoid_mean(&u[1..=n + 1]);
    let x_phi_c_t = ((u[n] + 2.0 * u[n + 1] + u[n + 2]) - (u[0] + 2.0 * u[1] + u[2])) / (4.0 * t);
    Ok(CtValue { c_t, x_phi_c_t })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MourreCertificate {
    pub interval: [f64; 2],
    pub t: f64,
    #[serde(rename = "a_I")]
    pub a_i: f64,
    pub sup_dev: f64,
    #[serde(rename = "sup_Xphi_ct")]
    pub sup_xphi_ct: f64,
    pub deficit: f64,
    pub a_effective: f64,
    pub pass: bool,
}

/// Sufficient scalar certificate for the Mourre estimate on `I = [e₁, e₂]`:
/// `a_I = 2 (ln λ)² e₁` minus `2 ln λ e₂ sup|c_t − ln λ| + ln λ sup|X_φ c_t|`.
pub fn mourre_certificate(
    flow: &HorocycleFlow,
    interval: [f64; 2],
    t: f64,
    sample: &[PhasePoint],
    cfg: &CtConfig,
) -> Result<MourreCertificate> {
    let [e1, e2] = interval;
    if !(e1 > 0.0 && e2 > e1 && e2.is_finite()) {
        return Err(Error::InvalidArgument(format!("interval must satisfy 0 < e1 < e2, got [{e1}, {e2}]")));
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("certificate needs at least one sample point".into()));
    }
    let ln_l = flow.ln_lambda();
    let values = sample.par_iter().map(|x| c_t_field(flow, t, x, cfg)).collect::<Result<Vec<_>>>()?;
    let sup_dev = values.iter().map(|v| (v.c_t - ln_l).abs()).fold(0.0, f64::max);
    let sup_xphi_ct = values.iter().map(|v| v.x_phi_c_t.abs()).fold(0.0, f64::max);
    let a_i = 2.0 * ln_l * ln_l * e1;
    let deficit = 2.0 * ln_l * e2 * sup_dev + ln_l * sup_xphi_ct;
    let a_effective = a_i - deficit;
    Ok(MourreCertificate { interval, t, a_i, sup_dev, sup_xphi_ct, deficit, a_effective, pass: a_effective > 0.0 })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ode::FlowConfig;
    use crate::sl2::GroupElement;
    use crate::surface::{invariant_bump, FuchsianGroup};
    use crate::timechange::{BumpSpec, TimeChange};

    fn flow(epsilon: f64) -> HorocycleFlow {
        let group = Arc::new(FuchsianGroup::bolza());
        let tc = TimeChange::bump_sum(&group, &[BumpSpec { center: GroupElement::IDENTITY, width: 0.7 }], epsilon).unwrap();
        HorocycleFlow::new(group, tc, FlowConfig::default()).unwrap()
    }

    #[test]
    fn constant_average_is_exact() {
        let m = flow(0.3);
        let x = m.group().sample_liouville(1, 2)[0];
        let r = birkhoff(&m, &Observable::constant(2.5), &x, 3.0, 0.1).unwrap();
        assert!((r.value - 2.5).abs() < 1e-14);
        assert!(matches!(birkhoff(&m, &Observable::constant(1.0), &x, 1e9, 1.0), Err(Error::BudgetExceeded { .. })));
        assert!(birkhoff(&m, &Observable::constant(1.0), &x, 0.01, 0.1).is_err());
    }

    #[test]
    fn trapezoid_of_linear_data() {
        assert!((trapezoid_mean(&[0.0, 1.0, 2.0, 3.0]) - 1.5).abs() < 1e-15);
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0]);
        assert_eq!((m, v), (2.0, 1.0));
    }

    #[test]
    fn uniform_ct_is_one() {
        let m = flow(0.0);
        for x in m.group().sample_liouville(3, 4) {
            let c = c_t_field(&m, 2.0, &x, &CtConfig::default()).unwrap();
            assert!((c.c_t - 1.0).abs() < 1e-8);
            assert!(c.x_phi_c_t.abs() < 1e-8);
        }
    }

    #[test]
    fn ct_shift_matches_orbit_derivative() {
        // X_φ c_t = (u_{0,0}(φ_t x) − u_{0,0}(x)) / t.
        let m = flow(0.3);
        let x = PhasePoint::unreduced(GroupElement::rotation(0.4).compose(&GroupElement::geodesic(0.3).unwrap()));
        let t = 1.5;
        let c = c_t_field(&m, t, &x, &CtConfig::default()).unwrap();
        let u = |y: &PhasePoint| 1.0 + m.time_change().log_derivative_f(y);
        let end = m.flow_phi(&x, t).unwrap();
        let exact = (u(&end) - u(&m.group().reduce_point(&x).unwrap())) / t;
        assert!((c.x_phi_c_t - exact).abs() < 1e-4, "{} {}", c.x_phi_c_t, exact);
    }

    #[test]
    fn certificate_formula() {
        let m = flow(0.0);
        let pts = m.group().sample_liouville(4, 9);
        let cert = mourre_certificate(&m, [1.0, 2.0], 1.0, &pts, &CtConfig::default()).unwrap();
        assert!((cert.a_effective - 2.0).abs() < 1e-6 && cert.pass);
        let near_zero = mourre_certificate(&m, [1e-9, 2.0], 1.0, &pts, &CtConfig::default()).unwrap();
        assert!(near_zero.a_i < 1e-8);
        assert!(mourre_certificate(&m, [0.0, 2.0], 1.0, &pts, &CtConfig::default()).is_err());
    }

    #[test]
    fn bump_average_is_reproducible() {
        let m = flow(0.3);
        let g = m.group();
        let f = Observable::bump(invariant_bump(g, &g.reduce(&GroupElement::geodesic(0.5).unwrap()).unwrap(), 0.6).unwrap());
        let starts = g.sample_liouville(3, 1);
        let a = birkhoff_starts(&m, &f, &starts, 50.0, 0.1).unwrap();
        let b = birkhoff_starts(&m, &f, &starts, 50.0, 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 3);
    }
}
