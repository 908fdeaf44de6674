//! Constant-roof suspension of the cat map `A = [[2,1],[1,1]]`.
//!
//! The unstable lines of `A` give an exactly solvable W^u flow with
//! `s*(t, s, p) = λ_A^t s`. Every torus slice is invariant under it, so the
//! flow is not minimal; the model only serves as an oracle for the cocycle
//! machinery.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::WuModel;

/// `(3 + √5) / 2`.
pub fn lambda_a() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// Unit unstable eigenvector of `A`.
pub fn unstable_direction() -> [f64; 2] {
    let v = [1.0, (5f64.sqrt() - 1.0) / 2.0];
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn wrap(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspensionPoint {
    pub x1: f64,
    pub x2: f64,
    pub theta: f64,
}

impl SuspensionPoint {
    pub fn new(x1: f64, x2: f64, theta: f64) -> Self {
        Self { x1: wrap(x1), x2: wrap(x2), theta: wrap(theta) }
    }
}

fn apply_a(x: [f64; 2], n: i64) -> [f64; 2] {
    let mut x = x;
    if n >= 0 {
        for _ in 0..n {
            x = [wrap(2.0 * x[0] + x[1]), wrap(x[0] + x[1])];
        }
    } else {
        for _ in 0..(-n) {
            x = [wrap(x[0] - x[1]), wrap(2.0 * x[1] - x[0])];
        }
    }
    x
}

pub fn susp_f(p: &SuspensionPoint, t: f64) -> SuspensionPoint {
    if t == 0.0 {
        return *p;
    }
    let h = p.theta + t;
    let n = h.floor();
    let x = apply_a([p.x1, p.x2], n as i64);
    SuspensionPoint { x1: x[0], x2: x[1], theta: wrap(h - n) }
}

pub fn susp_wu(p: &SuspensionPoint, s: f64) -> SuspensionPoint {
    if s == 0.0 {
        return *p;
    }
    let u = unstable_direction();
    let k = s * lambda_a().powf(-p.theta);
    SuspensionPoint { x1: wrap(p.x1 + k * u[0]), x2: wrap(p.x2 + k * u[1]), theta: p.theta }
}

fn torus_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 1.0;
    d.min(1.0 - d)
}

/// Distance in the flat metric of a fundamental slab, allowing one roof
/// crossing on either side.
pub fn suspension_distance(p: &SuspensionPoint, q: &SuspensionPoint) -> f64 {
    let direct = |x: [f64; 2], th: f64| {
        let a = torus_gap(x[0], q.x1);
        let b = torus_gap(x[1], q.x2);
        (a * a + b * b + (th - q.theta).powi(2)).sqrt()
    };
    let x = [p.x1, p.x2];
    direct(x, p.theta)
        .min(direct(apply_a(x, 1), p.theta - 1.0))
        .min(direct(apply_a(x, -1), p.theta + 1.0))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CatSuspension;

impl WuModel for CatSuspension {
    type Point = SuspensionPoint;

    fn anosov(&self, x: &SuspensionPoint, t: f64) -> Result<SuspensionPoint> {
        Ok(susp_f(x, t))
    }

    fn ln_lambda(&self) -> f64 {
        lambda_a().ln()
    }

    fn tau(&self, _x: &SuspensionPoint, s: f64) -> Result<f64> {
        Ok(s)
    }

    fn tau_inverse(&self, _x: &SuspensionPoint, sigma: f64) -> Result<f64> {
        Ok(sigma)
    }

    fn uniform_flow(&self, x: &SuspensionPoint, sigma: f64) -> Result<SuspensionPoint> {
        Ok(susp_wu(x, sigma))
    }

    fn distance(&self, x: &SuspensionPoint, y: &SuspensionPoint) -> f64 {
        suspension_distance(x, y)
    }

    fn is_minimal(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{estimate_lambda, s_star, u_field, u00};

    fn p() -> SuspensionPoint {
        SuspensionPoint::new(0.123, 0.871, 0.4)
    }

    #[test]
    fn eigen_data() {
        // A u = λ u for the stored direction.
        let u = unstable_direction();
        let l = lambda_a();
        assert!((2.0 * u[0] + u[1] - l * u[0]).abs() < 1e-14);
        assert!((u[0] + u[1] - l * u[1]).abs() < 1e-14);
        assert!((l.ln() - 0.9624236501192069).abs() < 1e-15);
    }

    #[test]
    fn anosov_flow_laws() {
        assert_eq!(susp_f(&p(), 0.0), p());
        let q = SuspensionPoint::new(0.3, 0.6, 0.0);
        let r = susp_f(&q, 1.0);
        assert!((r.x1 - 0.2).abs() < 1e-12 && (r.x2 - 0.9).abs() < 1e-12 && r.theta == 0.0);
        let a = susp_f(&susp_f(&p(), 0.6), 0.7);
        assert!(suspension_distance(&a, &susp_f(&p(), 1.3)) < 1e-12);
        let back = susp_f(&susp_f(&p(), 2.5), -2.5);
        assert!(suspension_distance(&back, &p()) < 1e-12);
    }

    #[test]
    fn expansion_commutes_exactly() {
        assert_eq!(susp_wu(&p(), 0.0), p());
        let lhs = susp_f(&susp_wu(&p(), 1.0), 1.0);
        let rhs = susp_wu(&susp_f(&p(), 1.0), lambda_a());
        assert!(suspension_distance(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn cocycle_oracle() {
        let m = CatSuspension;
        let l = lambda_a();
        for (t, s) in [(1.0, 1.0), (-0.5, 3.0), (0.3, -2.0)] {
            assert!((s_star(&m, t, s, &p()).unwrap() - l.powf(t) * s).abs() < 1e-10);
            let u = u_field(&m, t, s, &p(), 1e-4, 1e-4).unwrap();
            assert!((u - l.powf(t) * l.ln()).abs() < 1e-6);
        }
        assert!((u00(&m, &p()).unwrap() - l.ln()).abs() < 1e-6);
        assert!((estimate_lambda(&m, &p(), 1.0, 1e4).unwrap().lambda - l).abs() < 1e-10);
        assert!(!m.is_minimal());
    }

    #[test]
    fn distance_sees_roof_crossing() {
        let below = SuspensionPoint::new(0.3, 0.6, 0.999_999);
        let above = susp_f(&below, 2e-6);
        assert!(suspension_distance(&below, &above) < 1e-5);
    }
}
