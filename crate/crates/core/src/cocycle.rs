//! The expansion cocycle `s*(t, s, x)` defined by `f_t ∘ φ_s = φ_{s*} ∘ f_t`.
//!
//! Since `f_t ∘ φ̃_σ = φ̃_{λ^t σ} ∘ f_t` holds exactly in both models,
//! `s*(t, s, x) = τ(f_t x, ·)⁻¹(λ^t τ(x, s))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::WuModel;

pub const DEFAULT_DELTA: f64 = 1e-4;
const MIN_DELTA: f64 = 1e-6;
const MAX_DELTA: f64 = 1e-2;

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta < MIN_DELTA || delta.is_nan() {
        return Err(Error::StepTooSmall { step: delta });
    }
    if delta > MAX_DELTA {
        return Err(Error::InvalidArgument(format!("finite-difference step {delta} exceeds {MAX_DELTA}")));
    }
    Ok(())
}

pub fn s_star<M: WuModel>(model: &M, t: f64, s: f64, x: &M::Point) -> Result<f64> {
    finite("t", t)?;
    finite("s", s)?;
    if t == 0.0 {
        return Ok(s);
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let sigma = model.tau(x, s)?;
    s_star_from_sigma(model, t, sigma, x)
}

fn s_star_from_sigma<M: WuModel>(model: &M, t: f64, sigma: f64, x: &M::Point) -> Result<f64> {
    let y = model.anosov(x, t)?;
    model.tau_inverse(&y, (t * model.ln_lambda()).exp() * sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derivative {
    pub central: f64,
    /// `(4 D(δ/2) − D(δ)) / 3`.
    pub richardson: f64,
}

/// `(∂₁s*)(t, s, x)` by central differences in `t`.
pub fn d1_s_star<M: WuModel>(model: &M, t: f64, s: f64, x: &M::Point, delta_t: f64) -> Result<Derivative> {
    finite("t", t)?;
    finite("s", s)?;
    check_delta(delta_t)?;
    if s == 0.0 {
        return Ok(Derivative { central: 0.0, richardson: 0.0 });
    }
    let sigma = model.tau(x, s)?;
    let diff = |h: f64| -> Result<(f64, f64, f64)> {
        let a = s_star_from_sigma(model, t + h, sigma, x)?;
        let b = s_star_from_sigma(model, t - h, sigma, x)?;
        Ok(((a - b) / (2.0 * h), a, b))
    };
    let (full, a, b) = diff(delta_t)?;
    let (half, _, _) = diff(0.5 * delta_t)?;
    // Rounding in the two s* values, magnified by 1/(2δ), must stay well
    // below the derivative itself.
    let noise = (a.abs() + b.abs()) * 64.0 * f64::EPSILON / (2.0 * delta_t);
    if noise > 1e-3 * full.abs().max(1.0) {
        return Err(Error::StepTooSmall { step: delta_t });
    }
    Ok(Derivative { central: full, richardson: (4.0 * half - full) / 3.0 })
}

/// `u_{t,s}(x) = (∂₁∂₂s*)(t, s, x)` by a mixed central difference.
///
/// The `s`-difference `s*(t, s+δs) − s*(t, s−δs)` is integrated directly over
/// the short interval `[s−δs, s+δs]` so that it does not inherit the error of
/// the long integrals to `s`.
pub fn u_field<M: WuModel>(model: &M, t: f64, s: f64, x: &M::Point, delta_t: f64, delta_s: f64) -> Result<f64> {
    finite("t", t)?;
    finite("s", s)?;
    check_delta(delta_t)?;
    check_delta(delta_s)?;
    let base = if s - delta_s == 0.0 { x.clone() } else { model.flow(x, s - delta_s)? };
    let width = model.tau(&base, 2.0 * delta_s)?;
    let spread = |tt: f64| -> Result<f64> {
        let y = model.anosov(&base, tt)?;
        model.tau_inverse(&y, (tt * model.ln_lambda()).exp() * width)
    };
    let plus = spread(t + delta_t)?;
    let minus = spread(t - delta_t)?;
    Ok((plus - minus) / (4.0 * delta_t * delta_s))
}

/// `u_{0,0}(x)` with the default steps.
pub fn u00<M: WuModel>(model: &M, x: &M::Point) -> Result<f64> {
    u_field(model, 0.0, 0.0, x, DEFAULT_DELTA, DEFAULT_DELTA)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    /// `(s, (s⁻¹ s*(t, s, x))^{1/t})` for `s = 10², …, s_max` in decades.
    pub ladder: Vec<(f64, f64)>,
}

/// Marcus' limit `λ = lim (s⁻¹ s*(t, s, x))^{1/t}` along a decade ladder.
pub fn estimate_lambda<M: WuModel>(model: &M, x: &M::Point, t: f64, s_max: f64) -> Result<LambdaEstimate> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite and non-zero, got {t}")));
    }
    if !(s_max >= 100.0) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("s_max must be at least 100, got {s_max}")));
    }
    let mut grid = vec![s_max];
    while grid.last().is_some_and(|s| s / 10.0 >= 100.0 * (1.0 - 1e-12)) {
        let next = grid.last().unwrap() / 10.0;
        grid.push(next);
    }
    grid.reverse();
    let mut ladder = Vec::with_capacity(grid.len());
    for s in grid {
        let ratio = s_star(model, t, s, x)? / s;
        ladder.push((s, ratio.powf(1.0 / t)));
    }
    Ok(LambdaEstimate { lambda: ladder.last().unwrap().1, ladder })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleSample<P> {
    pub t: f64,
    pub s: f64,
    pub x: P,
    pub s_star: f64,
    pub d1_s_star: f64,
    pub d1_richardson: f64,
    pub u: f64,
    pub delta_t: f64,
    pub delta_s: f64,
}

impl<P> CocycleSample<P> {
    pub const CSV_COLUMNS: &'static str = "t,s,s_star,d1,d1_richardson,u,delta_t,delta_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t, self.s, self.s_star, self.d1_s_star, self.d1_richardson, self.u, self.delta_t, self.delta_s
        )
    }
}

pub fn sample<M: WuModel>(model: &M, t: f64, s: f64, x: &M::Point, delta_t: f64, delta_s: f64) -> Result<CocycleSample<M::Point>> {
    let d = d1_s_star(model, t, s, x, delta_t)?;
    Ok(CocycleSample {
        t,
        s,
        x: x.clone(),
        s_star: s_star(model, t, s, x)?,
        d1_s_star: d.central,
        d1_richardson: d.richardson,
        u: u_field(model, t, s, x, delta_t, delta_s)?,
        delta_t,
        delta_s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CocycleResiduals {
    /// `|s*(t, r+s, x) − s*(t, r, x) − s*(t, s, φ_r x)|`.
    pub additivity: f64,
    /// `d(f_t φ_s x, φ_{s*(t,s,x)} f_t x)`.
    pub commutation: f64,
}

pub fn residuals<M: WuModel>(model: &M, t: f64, r: f64, s: f64, x: &M::Point) -> Result<CocycleResiduals> {
    let whole = s_star(model, t, r + s, x)?;
    let first = s_star(model, t, r, x)?;
    let moved = model.flow(x, r)?;
    let second = s_star(model, t, s, &moved)?;
    let lhs = model.anosov(&model.flow(x, s)?, t)?;
    let st = s_star(model, t, s, x)?;
    let rhs = model.flow(&model.anosov(x, t)?, st)?;
    Ok(CocycleResiduals { additivity: (whole - first - second).abs(), commutation: model.distance(&lhs, &rhs) })
}
