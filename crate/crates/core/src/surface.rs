//! The compact quotient `M = Γ\PSL(2,ℝ)` of the Bolza surface.
//!
//! Points of `M` are represented by group elements whose base point `g·i`
//! lies in the Dirichlet domain of `Γ` centred at `i`; for the Bolza group
//! this is the regular octagon with interior angles `π/4`. Since
//! `cosh d(g·i, i) = ‖g‖_F²/2`, the Dirichlet condition is a Frobenius-norm
//! comparison and reduction is a greedy descent of `‖g‖_F`.

use std::f64::consts::{SQRT_2, TAU};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sl2::{distance, horocycle_step, GroupElement};

/// Longest single right translation applied before re-reducing.
const CHUNK: f64 = 1.0;
/// Relative slack in the Dirichlet comparison, so boundary points are stable.
const DIRICHLET_SLACK: f64 = 1e-13;

pub const DEFAULT_REDUCTION_DEPTH: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub rep: GroupElement,
    pub reduced: bool,
}

impl PhasePoint {
    pub fn unreduced(rep: GroupElement) -> Self {
        Self { rep, reduced: false }
    }
}

#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    generators: Vec<GroupElement>,
    reduction_depth: usize,
    circumradius: f64,
    neighbors: OnceLock<Vec<GroupElement>>,
}

impl FuchsianGroup {
    /// Side pairings of the regular octagon: hyperbolic translations of length
    /// `ℓ = 2 arccosh(1 + √2)` along the eight directions `kπ/4` through `i`.
    pub fn bolza() -> Self {
        let half = (1.0 + SQRT_2).acosh();
        let a = GroupElement::geodesic(2.0 * half).expect("finite");
        let generators = (0..8)
            .map(|k| {
                let r = GroupElement::rotation(k as f64 * TAU / 8.0);
                r.compose(&a).compose(&r.inverse())
            })
            .collect();
        let circumradius = (3.0 + 2.0 * SQRT_2).acosh();
        Self { generators, reduction_depth: DEFAULT_REDUCTION_DEPTH, circumradius, neighbors: OnceLock::new() }
    }

    /// Builds a group from Dirichlet side pairings about `i`. Missing inverses
    /// are added.
    pub fn from_generators(gens: Vec<GroupElement>, reduction_depth: usize) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::InvalidArgument("empty generator list".into()));
        }
        let mut all: Vec<GroupElement> = Vec::with_capacity(2 * gens.len());
        for g in gens.iter().flat_map(|g| [*g, g.inverse()]) {
            if g.projective_gap(&GroupElement::IDENTITY) < 1e-9 {
                return Err(Error::InvalidArgument("identity is not a valid side pairing".into()));
            }
            if !all.iter().any(|h| h.projective_gap(&g) < 1e-9) {
                all.push(g);
            }
        }
        let mut group =
            Self { generators: all, reduction_depth, circumradius: f64::INFINITY, neighbors: OnceLock::new() };
        group.circumradius = group.measure_circumradius()?;
        Ok(group)
    }

    /// Parses one matrix per line as four whitespace- or comma-separated
    /// decimals `a b c d`. Blank lines and `#` comments are skipped.
    pub fn parse_generators(text: &str) -> Result<Vec<GroupElement>> {
        let mut out = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::GeneratorParse { line: idx + 1, message };
            let fields: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|f| !f.is_empty())
                .map(|f| f.parse::<f64>().map_err(|e| err(format!("`{f}`: {e}"))))
                .collect::<Result<_>>()?;
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let det = fields[0] * fields[3] - fields[1] * fields[2];
            if (det - 1.0).abs() > 1e-6 {
                return Err(err(format!("determinant {det} is not 1")));
            }
            out.push(GroupElement::new(fields[0], fields[1], fields[2], fields[3]).map_err(|e| err(e.to_string()))?);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::GeneratorParse { line: 0, message: format!("{}: {e}", path.display()) })?;
        Self::from_generators(Self::parse_generators(&text)?, DEFAULT_REDUCTION_DEPTH)
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn reduction_depth(&self) -> usize {
        self.reduction_depth
    }

    pub fn with_reduction_depth(mut self, depth: usize) -> Self {
        self.reduction_depth = depth;
        self
    }

    /// Hyperbolic radius of the smallest disk about `i` containing the domain.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Whether the base point of `g` lies in the closed Dirichlet domain.
    pub fn contains(&self, g: &GroupElement) -> bool {
        let n = g.frobenius_sq();
        self.generators.iter().all(|gen| gen.mul_raw(g).frobenius_sq() >= n * (1.0 - DIRICHLET_SLACK))
    }

    /// Greedy reduction: apply the side pairing that most decreases the
    /// distance of the base point to `i` until none does.
    pub fn reduce(&self, g: &GroupElement) -> Result<PhasePoint> {
        let mut g = *g;
        let mut norm = g.frobenius_sq();
        for _ in 0..=self.reduction_depth {
            let mut best = None;
            let mut best_norm = norm * (1.0 - DIRICHLET_SLACK);
            for gen in &self.generators {
                let h = gen.mul_raw(&g);
                let n = h.frobenius_sq();
                if n < best_norm {
                    best_norm = n;
                    best = Some(h);
                }
            }
            match best {
                Some(h) => {
                    g = h.renormalize();
                    norm = g.frobenius_sq();
                }
                None => return Ok(PhasePoint { rep: g.renormalize(), reduced: true }),
            }
        }
        Err(Error::NonTermination(self.reduction_depth))
    }

    pub fn reduce_point(&self, x: &PhasePoint) -> Result<PhasePoint> {
        if x.reduced {
            Ok(*x)
        } else {
            self.reduce(&x.rep)
        }
    }

    /// The horocycle flow `φ̃_s` on `M`, applied in chunks of length at most
    /// one with a reduction after each chunk.
    pub fn horocycle(&self, x: &PhasePoint, s: f64) -> Result<PhasePoint> {
        let n = (s.abs() / CHUNK).ceil().max(1.0) as usize;
        let h = s / n as f64;
        let mut g = x.rep;
        for _ in 0..n {
            g = self.reduce(&horocycle_step(&g, h))?.rep;
        }
        Ok(PhasePoint { rep: g, reduced: true })
    }

    /// The geodesic flow `f_t` on `M`, chunked like [`Self::horocycle`].
    pub fn geodesic(&self, x: &PhasePoint, t: f64) -> Result<PhasePoint> {
        let n = (t.abs() / CHUNK).ceil().max(1.0) as usize;
        let a = GroupElement::geodesic(t / n as f64)?;
        let mut g = x.rep;
        for _ in 0..n {
            g = self.reduce(&g.compose(&a))?.rep;
        }
        Ok(PhasePoint { rep: g, reduced: true })
    }

    /// All `γ ∈ Γ` with `d(i, γ·i) ≤ radius`, found by breadth-first search
    /// over words in the generators.
    pub fn elements_within(&self, radius: f64) -> Vec<GroupElement> {
        let explore = radius + self.circumradius.min(20.0) + 1e-6;
        let mut found = vec![GroupElement::IDENTITY];
        let mut frontier = vec![GroupElement::IDENTITY];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for g in &frontier {
                for gen in &self.generators {
                    let h = gen.compose(g);
                    if h.base_radius() > explore {
                        continue;
                    }
                    if found.iter().any(|f| f.projective_gap(&h) < 1e-8) {
                        continue;
                    }
                    found.push(h);
                    next.push(h);
                }
            }
            frontier = next;
        }
        found.retain(|g| g.base_radius() <= radius);
        found
    }

    /// Elements whose tiles touch the fundamental domain (including itself).
    pub fn neighbors(&self) -> &[GroupElement] {
        self.neighbors.get_or_init(|| self.elements_within(2.0 * self.circumradius + 1e-6))
    }

    /// Distance surrogate on `M`: the smallest [`distance`] between `x` and
    /// the translates of `y` by neighbouring tiles. Both points are reduced.
    pub fn quotient_distance(&self, x: &PhasePoint, y: &PhasePoint) -> Result<f64> {
        let (x, y) = (self.reduce_point(x)?, self.reduce_point(y)?);
        Ok(self
            .neighbors()
            .iter()
            .map(|gamma| distance(&x.rep, &gamma.compose(&y.rep)))
            .fold(f64::INFINITY, f64::min))
    }

    /// Half the shortest displacement `d(p, γp)`, `γ ≠ 1`, at the base point
    /// `p` of `g`, searched among displacements up to `cap`.
    pub fn injectivity_radius(&self, g: &GroupElement, cap: f64) -> f64 {
        let p = g.base_radius();
        let mut best = cap;
        for gamma in self.elements_within(2.0 * p + cap).into_iter().skip(1) {
            let moved = g.inverse().compose(&gamma).compose(g);
            best = best.min(moved.base_radius());
        }
        0.5 * best
    }

    /// i.i.d. samples from the normalised Haar (Liouville) measure on `M`:
    /// `g = k_α a_r k_ψ` with density `sinh r` on `[0, circumradius]`, rejected
    /// unless the base point lies in the domain.
    pub fn sample_liouville(&self, n: usize, seed: u64) -> Vec<PhasePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = self.circumradius.cosh() - 1.0;
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let r = (1.0 + rng.gen::<f64>() * span).acosh();
            let alpha = rng.gen::<f64>() * TAU;
            let psi = rng.gen::<f64>() * TAU;
            let g = GroupElement::rotation(alpha)
                .compose(&GroupElement::geodesic(r).expect("bounded radius"))
                .compose(&GroupElement::rotation(psi));
            if self.contains(&g) {
                out.push(PhasePoint { rep: g, reduced: true });
            }
        }
        out
    }

    fn measure_circumradius(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..720 {
            let rot = GroupElement::rotation(k as f64 * TAU / 720.0);
            let inside = |r: f64| self.contains(&rot.compose(&GroupElement::geodesic(r).expect("bounded")));
            let (mut lo, mut hi) = (0.0, 1.0);
            while inside(hi) {
                lo = hi;
                hi *= 2.0;
                if hi > 64.0 {
                    return Err(Error::InvalidArgument("generators do not bound a compact domain".into()));
                }
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            worst = worst.max(hi);
        }
        Ok(worst * (1.0 + 1e-9))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
}

/// A compactly supported bump `b(g) = β(‖c⁻¹g ∓ I‖_F² / w²)` with
/// `β(q) = (1 - q)⁴` on `q < 1`, summed over the finitely many translates
/// that can reach the fundamental domain.
#[derive(Clone, Debug)]
pub struct InvariantBump {
    group: Arc<FuchsianGroup>,
    center: GroupElement,
    width: f64,
    support_radius: f64,
    /// `c⁻¹γ` for every `γ` whose translate can meet a reduced point.
    translates: Vec<GroupElement>,
}

/// Hyperbolic radius of the base-point projection of `{h : ‖h - I‖_F < w}`.
pub fn bump_support_radius(width: f64) -> f64 {
    (1.0 + SQRT_2 * width + 0.5 * width * width).acosh()
}

pub fn invariant_bump(group: &Arc<FuchsianGroup>, center: &PhasePoint, width: f64) -> Result<InvariantBump> {
    if !(width > 0.0 && width < SQRT_2) {
        return Err(Error::InvalidArgument(format!("bump width {width} outside (0, √2)")));
    }
    let center = group.reduce_point(center)?.rep;
    let support_radius = bump_support_radius(width);
    let limit = group.injectivity_radius(&center, 2.0 * support_radius + 1.0);
    if support_radius >= limit {
        return Err(Error::WidthTooLarge { support: support_radius, limit });
    }
    let reach = group.circumradius() + support_radius + center.base_radius();
    let c_inv = center.inverse();
    let translates = group.elements_within(reach).iter().map(|gamma| c_inv.compose(gamma)).collect();
    Ok(InvariantBump { group: Arc::clone(group), center, width, support_radius, translates })
}

impl InvariantBump {
    pub fn center(&self) -> &GroupElement {
        &self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn translate_count(&self) -> usize {
        self.translates.len()
    }

    /// `(F, X_f F, X_φ̃ F)` at a reduced representative.
    fn jet_reduced(&self, g: &GroupElement) -> (f64, f64, f64) {
        let w2 = self.width * self.width;
        let cap = (SQRT_2 + self.width).powi(2);
        let (mut v, mut df, mut dh) = (0.0, 0.0, 0.0);
        for t in &self.translates {
            let h = t.mul_raw(g);
            let fro = h.frobenius_sq();
            if fro >= cap {
                continue;
            }
            let tr = h.trace();
            let sigma = if tr >= 0.0 { 1.0 } else { -1.0 };
            let q = (fro - 2.0 * tr.abs() + 2.0) / w2;
            if q >= 1.0 {
                continue;
            }
            let one_minus = 1.0 - q;
            let cube = one_minus * one_minus * one_minus;
            v += cube * one_minus;
            let slope = -4.0 * cube / w2;
            // d/dt ‖h a_t - σI‖² and d/ds ‖h n_s - σI‖² at zero.
            let along_f = (h.a - sigma) * h.a - h.b * h.b + h.c * h.c - (h.d - sigma) * h.d;
            let along_h = 2.0 * ((h.a - sigma) * h.b + h.c * h.d);
            df += slope * along_f;
            dh += slope * along_h;
        }
        (v, df, dh)
    }

    pub fn jet(&self, x: &PhasePoint) -> Result<(f64, f64, f64)> {
        let x = self.group.reduce_point(x)?;
        Ok(self.jet_reduced(&x.rep))
    }
}

/// A smooth Γ-invariant test function `constant + Σ coef_j F_j` built from
/// invariant bumps, with closed-form derivatives along `X_f` and `X_φ̃`.
#[derive(Clone, Debug, Default)]
pub struct Observable {
    constant: f64,
    terms: Vec<(f64, Arc<InvariantBump>)>,
}

impl Observable {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn bump(b: InvariantBump) -> Self {
        Self { constant: 0.0, terms: vec![(1.0, Arc::new(b))] }
    }

    pub fn with_term(mut self, coef: f64, b: InvariantBump) -> Self {
        self.terms.push((coef, Arc::new(b)));
        self
    }

    pub fn offset(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.constant *= k;
        for t in &mut self.terms {
            t.0 *= k;
        }
        self
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &InvariantBump)> {
        self.terms.iter().map(|(c, b)| (*c, b.as_ref()))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }

    pub fn smoothness(&self) -> Smoothness {
        Smoothness::C1
    }

    /// Value together with the derivatives along `X_f` and `X_φ̃`.
    pub fn jet(&self, x: &PhasePoint) -> (f64, f64, f64) {
        let (mut v, mut df, mut dh) = (self.constant, 0.0, 0.0);
        for (coef, bump) in &self.terms {
            let (bv, bf, bh) = bump.jet(x).expect("points handed to observables are reducible");
            v += coef * bv;
            df += coef * bf;
            dh += coef * bh;
        }
        (v, df, dh)
    }

    pub fn value(&self, x: &PhasePoint) -> f64 {
        if self.terms.is_empty() {
            return self.constant;
        }
        self.jet(x).0
    }

    /// Derivative along the geodesic vector field `X_f`.
    pub fn xf(&self, x: &PhasePoint) -> f64 {
        self.jet(x).1
    }

    /// Derivative along the horocycle vector field `X_φ̃`.
    pub fn xh(&self, x: &PhasePoint) -> f64 {
        self.jet(x).2
    }
}
