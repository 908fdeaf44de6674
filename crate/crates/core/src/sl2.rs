//! Arithmetic in PSL(2,ℝ) and the two algebraic flows acting on it by right
//! translation: the geodesic flow `g ↦ g·a_t` and the unstable horocycle flow
//! `g ↦ g·n_s`.
//!
//! With `a_t = diag(e^{t/2}, e^{-t/2})` and the lower-triangular unipotent
//! `n_s = [[1, 0], [s, 1]]` one has `a_{-t} n_s a_t = n_{e^t s}`, so
//! `geodesic_step(horocycle_step(g, s), t) == horocycle_step(geodesic_step(g, t), e^t s)`:
//! the geodesic flow expands horocycle orbits at the uniform rate `λ = e`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest geodesic time accepted by [`geodesic_step`]; `e^{t/2}` overflows
/// near `t ≈ 1418`.
pub const MAX_GEODESIC_TIME: f64 = 1400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Sl2Error {
    #[error("geodesic time {0} exceeds the overflow guard |t| <= {MAX_GEODESIC_TIME}")]
    Overflow(f64),
    #[error("matrix has non-positive or non-finite determinant {0}")]
    Degenerate(f64),
}

/// A point of PSL(2,ℝ): a unimodular real 2×2 matrix `[[a, b], [c, d]]`
/// modulo `g ~ -g`.
///
/// Values produced by this module are always renormalized: the determinant is
/// rescaled to one and the first nonzero entry (row-major) is non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Builds a group element from raw entries, rescaling to unit determinant.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, Sl2Error> {
        let det = a * d - b * c;
        if !(det.is_finite() && det > 0.0) {
            return Err(Sl2Error::Degenerate(det));
        }
        Ok(Self { a, b, c, d }.renormalize())
    }

    /// `a_t = diag(e^{t/2}, e^{-t/2})`.
    pub fn geodesic(t: f64) -> Result<Self, Sl2Error> {
        if !t.is_finite() || t.abs() > MAX_GEODESIC_TIME {
            return Err(Sl2Error::Overflow(t));
        }
        let h = (0.5 * t).exp();
        Ok(Self { a: h, b: 0.0, c: 0.0, d: 1.0 / h })
    }

    /// `n_s = [[1, 0], [s, 1]]`, the unstable horocycle subgroup.
    pub fn horocycle(s: f64) -> Self {
        Self { a: 1.0, b: 0.0, c: s, d: 1.0 }.renormalize()
    }

    /// Rotation about `i` through angle `theta` (Möbius action on the upper
    /// half-plane), i.e. the matrix of `SO(2)` with half-angle `theta/2`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { a: c, b: s, c: -s, d: c }.renormalize()
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Rescales to unit determinant and applies the projective sign convention.
    pub fn renormalize(self) -> Self {
        let det = self.det();
        let k = if det > 0.0 && (det - 1.0).abs() > 1e-15 { det.sqrt().recip() } else { 1.0 };
        let (mut a, mut b, mut c, mut d) = (self.a * k, self.b * k, self.c * k, self.d * k);
        let lead = [a, b, c, d].into_iter().find(|v| *v != 0.0).unwrap_or(0.0);
        if lead < 0.0 {
            a = -a;
            b = -b;
            c = -c;
            d = -d;
        }
        Self { a, b, c, d }
    }

    /// Matrix product `self · other`, renormalized.
    pub fn compose(&self, other: &GroupElement) -> Self {
        self.mul_raw(other).renormalize()
    }

    pub(crate) fn mul_raw(&self, o: &GroupElement) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }.renormalize()
    }

    /// Entries as a row-major array.
    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Frobenius norm of `self - other` with `other` taken with either sign.
    pub fn projective_gap(&self, other: &GroupElement) -> f64 {
        let plus = sq(self.a - other.a) + sq(self.b - other.b) + sq(self.c - other.c) + sq(self.d - other.d);
        let minus = sq(self.a + other.a) + sq(self.b + other.b) + sq(self.c + other.c) + sq(self.d + other.d);
        plus.min(minus).sqrt()
    }

    /// Image of `i` under the Möbius action, as `(x, y)` with `y > 0`.
    pub fn base_point(&self) -> (f64, f64) {
        let n = self.c * self.c + self.d * self.d;
        ((self.a * self.c + self.b * self.d) / n, self.det() / n)
    }

    /// Hyperbolic distance from `i` to [`Self::base_point`]:
    /// `cosh d = ‖g‖_F² / 2`.
    pub fn base_radius(&self) -> f64 {
        (0.5 * self.frobenius_sq()).max(1.0).acosh()
    }

    /// Base point mapped to the Poincaré disk by `w = (z - i)/(z + i)`.
    pub fn disk_point(&self) -> (f64, f64) {
        let (x, y) = self.base_point();
        let den = x * x + (y + 1.0) * (y + 1.0);
        ((x * x + y * y - 1.0) / den, -2.0 * x / den)
    }

    /// Iwasawa coordinates `g = n⁺_x · a_{ln y} · k_θ` with `n⁺_x` upper
    /// unipotent: returns `(x, y, θ)` where `x + iy` is the base point and
    /// `θ ∈ [0, 2π)` is the fiber angle.
    pub fn iwasawa(&self) -> (f64, f64, f64) {
        let (x, y) = self.base_point();
        // k_θ has bottom row (-sin θ/2, cos θ/2) · y^{-1/2} after scaling.
        let r = (self.c * self.c + self.d * self.d).sqrt();
        let half = (-self.c / r).atan2(self.d / r);
        let theta = (2.0 * half).rem_euclid(std::f64::consts::TAU);
        (x, y, theta)
    }
}

fn sq(v: f64) -> f64 {
    v * v
}

pub fn compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    g.compose(h)
}

/// The geodesic flow `f_t(g) = g · a_t`.
pub fn geodesic_step(g: &GroupElement, t: f64) -> Result<GroupElement, Sl2Error> {
    Ok(g.compose(&GroupElement::geodesic(t)?))
}

/// The uniformly expanding horocycle flow `φ̃_s(g) = g · n_s`.
pub fn horocycle_step(g: &GroupElement, s: f64) -> GroupElement {
    // g · n_s in closed form: columns (a + b s, b) and (c + d s, d).
    GroupElement { a: g.a + g.b * s, b: g.b, c: g.c + g.d * s, d: g.d }.renormalize()
}

/// Left-invariant metric surrogate `min_± ‖g⁻¹h ∓ I‖_F`.
pub fn distance(g: &GroupElement, h: &GroupElement) -> f64 {
    g.inverse().mul_raw(h).projective_gap(&GroupElement::IDENTITY)
}
