//! Adaptive Dormand–Prince 5(4) for scalar equations `y' = f(x, y)`.
//!
//! The right-hand side is supplied through [`Rhs`], which is told about every
//! accepted step so it can move whatever geometric state it keeps (for the
//! time-change integrals: a reduced point on the current horocycle).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Largest step; also the initial step.
    pub step: f64,
    /// Absolute local error tolerance per step.
    pub tolerance: f64,
    pub max_substeps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { step: 0.1, tolerance: 1e-10, max_substeps: 20_000_000 }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("integrator step must be > 0, got {}", self.step)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidArgument("max_substeps must be positive".into()));
        }
        Ok(())
    }
}

pub trait Rhs {
    fn eval(&mut self, x: f64, y: f64) -> Result<f64>;
    /// Called after each accepted step with the new `(x, y)`.
    fn accept(&mut self, _x: f64, _y: f64) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(f64, f64) -> f64> Rhs for F {
    fn eval(&mut self, x: f64, y: f64) -> Result<f64> {
        Ok(self(x, y))
    }
}

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Fifth- minus fourth-order weights; the last entry multiplies the FSAL stage.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `(0, y0)` to `x = span` (either sign) and returns `y(span)`.
pub fn integrate<R: Rhs>(rhs: &mut R, y0: f64, span: f64, cfg: &FlowConfig) -> Result<f64> {
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let total = span.abs();
    let fail = || Error::ToleranceNotMet { tolerance: cfg.tolerance, substeps: cfg.max_substeps };
    let (mut x, mut y) = (0.0f64, y0);
    let mut h = cfg.step.min(total);
    let mut k1 = rhs.eval(0.0, y0)?;
    let mut steps = 0usize;
    loop {
        let remaining = total - x;
        if remaining <= total * 1e-15 {
            return Ok(y);
        }
        let last = h >= remaining;
        let hh = if last { remaining } else { h };
        let sh = dir * hh;
        let xs = dir * x;
        let k2 = rhs.eval(xs + C[0] * sh, y + sh * A2[0] * k1)?;
        let k3 = rhs.eval(xs + C[1] * sh, y + sh * (A3[0] * k1 + A3[1] * k2))?;
        let k4 = rhs.eval(xs + C[2] * sh, y + sh * (A4[0] * k1 + A4[1] * k2 + A4[2] * k3))?;
        let k5 = rhs.eval(xs + C[3] * sh, y + sh * (A5[0] * k1 + A5[1] * k2 + A5[2] * k3 + A5[3] * k4))?;
        let k6 = rhs.eval(
            xs + C[4] * sh,
            y + sh * (A6[0] * k1 + A6[1] * k2 + A6[2] * k3 + A6[3] * k4 + A6[4] * k5),
        )?;
        let y_new = y + sh * (B[0] * k1 + B[2] * k3 + B[3] * k4 + B[4] * k5 + B[5] * k6);
        let x_new = if last { total } else { x + hh };
        let k7 = rhs.eval(dir * x_new, y_new)?;
        let err = (sh * (E[0] * k1 + E[2] * k3 + E[3] * k4 + E[4] * k5 + E[5] * k6 + E[6] * k7)).abs();
        steps += 1;
        if steps > cfg.max_substeps {
            return Err(fail());
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (cfg.tolerance / err).powf(0.2)).clamp(0.2, 5.0) };
        if err <= cfg.tolerance {
            x = x_new;
            y = y_new;
            k1 = k7;
            rhs.accept(dir * x, y)?;
            if !last {
                h = (hh * factor).min(cfg.step);
            }
        } else {
            h = hh * factor;
            if h < total * 1e-15 || h < 1e-300 {
                return Err(fail());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let cfg = FlowConfig { step: 0.5, tolerance: 1e-12, max_substeps: 100_000 };
        let y = integrate(&mut |_x: f64, y: f64| y, 1.0, 2.0, &cfg).unwrap();
        assert!((y - 2f64.exp()).abs() < 1e-10);
        let y = integrate(&mut |_x: f64, y: f64| y, 1.0, -2.0, &cfg).unwrap();
        assert!((y - (-2f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn quadrature_of_explicit_rate() {
        let cfg = FlowConfig::default();
        let y = integrate(&mut |x: f64, _y: f64| x.cos(), 0.0, 3.0, &cfg).unwrap();
        assert!((y - 3f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = FlowConfig { step: 1e-3, tolerance: 1e-10, max_substeps: 10 };
        let r = integrate(&mut |_x: f64, _y: f64| 1.0, 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
        assert_eq!(integrate(&mut |_x: f64, _y: f64| 1.0, 4.0, 0.0, &cfg), Ok(4.0));
    }
}
