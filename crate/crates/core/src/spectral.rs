//! Correlations of the time-changed flow, their spectral density and atoms,
//! and pointwise residuals of the conjugation identities.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cocycle::{d1_s_star, u_field, DEFAULT_DELTA};
use crate::ergodic::{mean_variance, orbit, NODE_BUDGET};
use crate::error::{Error, Result};
use crate::surface::{Observable, PhasePoint};
use crate::timechange::HorocycleFlow;

/// Samples of `C(s)` at `s = j Δs` for `j = −J..=J`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    pub step: f64,
    pub lags: usize,
    values: Vec<Complex64>,
    /// Orbit length behind the estimate; zero for synthetic series.
    pub horizon: f64,
    pub start: Option<PhasePoint>,
}

impl CorrelationSeries {
    /// `values[k]` is the lag `k − J`.
    pub fn new(step: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() % 2 == 0 || !(step > 0.0) {
            return Err(Error::InvalidArgument("correlation series needs an odd, symmetric lag grid and step > 0".into()));
        }
        let lags = values.len() / 2;
        Ok(Self { step, lags, values, horizon: 0.0, start: None })
    }

    /// Synthetic series sampled from a closed form.
    pub fn from_fn(step: f64, s_max: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let lags = (s_max / step).round() as usize;
        let values = (0..=2 * lags).map(|k| f((k as f64 - lags as f64) * step)).collect();
        Self::new(step, values)
    }

    pub fn from_real_fn(step: f64, s_max: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(step, s_max, |s| Complex64::new(f(s), 0.0))
    }

    pub fn lag(&self, j: isize) -> Complex64 {
        self.values[(j + self.lags as isize) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn s_max(&self) -> f64 {
        self.lags as f64 * self.step
    }

    pub fn at_zero(&self) -> Complex64 {
        self.lag(0)
    }

    /// `max_j |C(−j) − conj C(j)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (1..=self.lags as isize).map(|j| (self.lag(-j) - self.lag(j).conj()).norm()).fold(0.0, f64::max)
    }

    /// `(s, Re C, Im C)` rows for `s ≥ 0`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..=self.lags as isize).map(|j| {
            let c = self.lag(j);
            (j as f64 * self.step, c.re, c.im)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MeanAdjust {
    None,
    /// Subtract each series' own orbit mean before correlating.
    Orbit,
}

fn fft_len(n: usize) -> usize {
    n.next_power_of_two()
}

/// `C(j) = N⁻¹ Σ_k conj(a_k) b_{k+j}` over the available overlap.
fn cross_correlate(a: &[f64], b: &[f64], lags: usize) -> Vec<Complex64> {
    let n = a.len();
    let p = fft_len(2 * n);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(p);
    let inv = planner.plan_fft_inverse(p);
    let pad = |v: &[f64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); p];
        for (o, x) in out.iter_mut().zip(v) {
            o.re = *x;
        }
        out
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    inv.process(&mut prod);
    let scale = 1.0 / (p as f64 * n as f64);
    (0..=2 * lags)
        .map(|k| {
            let j = k as isize - lags as isize;
            let idx = if j >= 0 { j as usize } else { p - (-j) as usize };
            prod[idx] * scale
        })
        .collect()
}

/// Single-orbit estimate of `C(s) = ⟨ψ, U_s φ⟩_μ` on `s ∈ [−s_max, s_max]`.
///
/// Uses the biased estimator `N⁻¹ Σ_{k<N−j}`, which keeps autocorrelations
/// positive definite.
#[allow(clippy::too_many_arguments)]
pub fn correlation(
    flow: &HorocycleFlow,
    psi: &Observable,
    phi: &Observable,
    s_max: f64,
    step: f64,
    x0: &PhasePoint,
    horizon: f64,
    adjust: MeanAdjust,
) -> Result<CorrelationSeries> {
    if !(step > 0.0 && s_max >= step) {
        return Err(Error::InvalidArgument(format!("need s_max ≥ Δs > 0, got s_max={s_max}, Δs={step}")));
    }
    if !(horizon >= 10.0 * s_max) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be at least 10·s_max = {}", 10.0 * s_max)));
    }
    let n = (horizon / step).round();
    if n > NODE_BUDGET {
        return Err(Error::BudgetExceeded { requested: n, budget: NODE_BUDGET });
    }
    let n = n as usize;
    let lags = (s_max / step).round() as usize;
    let nodes = orbit(flow, x0, step, n - 1)?;
    let mut a: Vec<f64> = nodes.iter().map(|y| psi.value(y)).collect();
    let mut b: Vec<f64> = nodes.iter().map(|y| phi.value(y)).collect();
    if adjust == MeanAdjust::Orbit {
        for v in [&mut a, &mut b] {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    }
    let values = cross_correlate(&a, &b, lags);
    Ok(CorrelationSeries { step, lags, values, horizon: n as f64 * step, start: Some(*x0) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationEnsemble {
    pub runs: Vec<CorrelationSeries>,
    pub mean: CorrelationSeries,
    /// Standard error of the mean, per lag in the same layout.
    pub std_error: Vec<f64>,
}

impl CorrelationEnsemble {
    pub fn std_error_at(&self, j: isize) -> f64 {
        self.std_error[(j + self.mean.lags as isize) as usize]
    }
}

/// Correlations from several independent starts, combined.
#[allow(clippy::too_many_arguments)]
pub fn correlation_starts(
    flow: &HorocycleFlow,
    psi: &Observable,
    phi: &Observable,
    s_max: f64,
    step: f64,
    starts: &[PhasePoint],
    horizon: f64,
    adjust: MeanAdjust,
) -> Result<CorrelationEnsemble> {
    if starts.len() < 2 {
        return Err(Error::InvalidArgument("a multi-start estimate needs at least two starts".into()));
    }
    let runs = starts
        .par_iter()
        .map(|x| correlation(flow, psi, phi, s_max, step, x, horizon, adjust))
        .collect::<Result<Vec<_>>>()?;
    let len = runs[0].values.len();
    let k = runs.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut se = Vec::with_capacity(len);
    for i in 0..len {
        let re: Vec<f64> = runs.iter().map(|r| r.values[i].re).collect();
        let im: Vec<f64> = runs.iter().map(|r| r.values[i].im).collect();
        let (mr, vr) = mean_variance(&re);
        let (mi, vi) = mean_variance(&im);
        mean.push(Complex64::new(mr, mi));
        se.push(((vr + vi) / k).sqrt());
    }
    let mut combined = CorrelationSeries::new(step, mean)?;
    combined.horizon = runs.iter().map(|r| r.horizon).sum();
    Ok(CorrelationEnsemble { runs, mean: combined, std_error: se })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayBlock {
    pub start: f64,
    pub end: f64,
    pub max_abs: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub blocks: Vec<DecayBlock>,
    /// Block maxima never rise by more than twice the standard error.
    pub pass: bool,
}

/// Maxima of `|C|` over dyadic blocks `[S, 2S]` between `s_lo` and `s_hi`.
pub fn dyadic_decay(ens: &CorrelationEnsemble, s_lo: f64, s_hi: f64) -> Result<DecayReport> {
    let c = &ens.mean;
    if !(s_lo > 0.0 && s_hi >= 2.0 * s_lo && s_hi <= c.s_max() * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "blocks [{s_lo}, {s_hi}] must satisfy 0 < 2·s_lo ≤ s_hi ≤ s_max = {}",
            c.s_max()
        )));
    }
    let mut blocks = Vec::new();
    let mut lo = s_lo;
    while lo * 2.0 <= s_hi * (1.0 + 1e-12) {
        let hi = lo * 2.0;
        let j0 = (lo / c.step).round() as isize;
        let j1 = (hi / c.step).round() as isize;
        let max_abs = (j0..=j1).map(|j| c.lag(j).norm()).fold(0.0, f64::max);
        let std_error = (j0..=j1).map(|j| ens.std_error_at(j)).fold(0.0, f64::max);
        blocks.push(DecayBlock { start: lo, end: hi, max_abs, std_error });
        lo = hi;
    }
    let pass = blocks
        .windows(2)
        .all(|w| w[1].max_abs <= w[0].max_abs + 2.0 * w[0].std_error.max(w[1].std_error));
    Ok(DecayReport { blocks, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LagWindow {
    Bartlett,
    Parzen,
}

impl LagWindow {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bartlett" => Ok(Self::Bartlett),
            "parzen" => Ok(Self::Parzen),
            _ => Err(Error::WindowUnknown(name.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bartlett => "bartlett",
            Self::Parzen => "parzen",
        }
    }

    /// Weight at `u = lag / truncation`; both windows have non-negative
    /// Fourier transforms.
    pub fn weight(&self, u: f64) -> f64 {
        let u = u.abs();
        if u >= 1.0 {
            return 0.0;
        }
        match self {
            Self::Bartlett => 1.0 - u,
            Self::Parzen if u <= 0.5 => 1.0 - 6.0 * u * u + 6.0 * u * u * u,
            Self::Parzen => 2.0 * (1.0 - u).powi(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    pub window: LagWindow,
    /// Truncation lag of the window, in time units.
    pub bandwidth: f64,
    pub total_mass: f64,
}

impl SpectralEstimate {
    pub fn min_density(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear interpolation on the frequency grid.
    pub fn at(&self, omega: f64) -> f64 {
        let f = &self.frequencies;
        let k = f.partition_point(|w| *w <= omega).clamp(1, f.len() - 1);
        let (w0, w1) = (f[k - 1], f[k]);
        let a = (omega - w0) / (w1 - w0);
        self.density[k - 1] * (1.0 - a) + self.density[k] * a
    }
}

/// Windowed transform `Δs Σ_j w(j) C(j) e^{−iω jΔs}` on the full FFT grid,
/// returned in ascending frequency.
fn windowed_transform(c: &CorrelationSeries, weights: &[f64], oversample: usize) -> (Vec<f64>, Vec<f64>) {
    let l = weights.len() - 1;
    let m = fft_len((2 * l + 1) * oversample);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, w) in weights.iter().enumerate() {
        buf[j] += c.lag(j as isize) * *w;
        if j > 0 {
            buf[m - j] += c.lag(-(j as isize)) * *w;
        }
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dw = 2.0 * PI / (m as f64 * c.step);
    let half = m as isize / 2;
    let mut freqs = Vec::with_capacity(m);
    let mut vals = Vec::with_capacity(m);
    for k in -half..half {
        let idx = if k >= 0 { k as usize } else { (m as isize + k) as usize };
        freqs.push(k as f64 * dw);
        vals.push(buf[idx].re * c.step);
    }
    (freqs, vals)
}

/// Blackman–Tukey estimate with truncation lag `bandwidth`.
pub fn spectral_density(c: &CorrelationSeries, window: &str, bandwidth: f64) -> Result<SpectralEstimate> {
    let window = LagWindow::parse(window)?;
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let l = ((bandwidth / c.step).round() as usize).clamp(1, c.lags);
    let weights: Vec<f64> = (0..=l).map(|j| window.weight(j as f64 / l as f64)).collect();
    let (frequencies, raw) = windowed_transform(c, &weights, 1);
    let density: Vec<f64> = raw.iter().map(|v| v / (2.0 * PI)).collect();
    let dw = frequencies[1] - frequencies[0];
    let total_mass = density.iter().sum::<f64>() * dw;
    Ok(SpectralEstimate { frequencies, density, window, bandwidth: l as f64 * c.step, total_mass })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub frequency: f64,
    pub mass: f64,
    /// Excess over the surrogate mean in surrogate standard deviations.
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomReport {
    pub atoms: Vec<Atom>,
    pub threshold: f64,
    pub surrogate_mean: f64,
    pub surrogate_sd: f64,
    pub cesaro_length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AtomScanConfig {
    pub surrogates: usize,
    pub sigmas: f64,
    /// Masses below this fraction of `|C(0)|` are never reported.
    pub floor_fraction: f64,
    pub seed: u64,
}

impl Default for AtomScanConfig {
    fn default() -> Self {
        Self { surrogates: 20, sigmas: 4.0, floor_fraction: 0.01, seed: 0 }
    }
}

/// Cesàro mean of `C(s) e^{−iωs}` over `[−S, S]` with Parzen weights, which
/// converges to the spectral mass at `ω`.
struct CesaroMean<'a> {
    c: &'a CorrelationSeries,
    weights: Vec<f64>,
    norm: f64,
}

impl<'a> CesaroMean<'a> {
    fn new(c: &'a CorrelationSeries) -> Self {
        let l = c.lags;
        let weights: Vec<f64> = (0..=l).map(|j| LagWindow::Parzen.weight(j as f64 / l as f64)).collect();
        let norm = c.step * (weights[0] + 2.0 * weights[1..].iter().sum::<f64>());
        Self { c, weights, norm }
    }

    fn at(&self, omega: f64) -> f64 {
        let mut acc = self.weights[0] * self.c.lag(0).re;
        for (j, w) in self.weights.iter().enumerate().skip(1) {
            let e = Complex64::from_polar(1.0, -omega * j as f64 * self.c.step);
            let pair = self.c.lag(j as isize) * e + self.c.lag(-(j as isize)) * e.conj();
            acc += w * pair.re;
        }
        acc * self.c.step / self.norm
    }

    fn grid(&self, series: &CorrelationSeries) -> (Vec<f64>, Vec<f64>) {
        let (f, v) = windowed_transform(series, &self.weights, 8);
        (f, v.into_iter().map(|x| x / self.norm).collect())
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Point masses of the spectral measure behind `C`.
pub fn atom_scan(c: &CorrelationSeries, cfg: &AtomScanConfig) -> Result<AtomReport> {
    if c.lags < 2 {
        return Err(Error::InvalidArgument("atom scan needs at least two lags".into()));
    }
    let cm = CesaroMean::new(c);
    let (freqs, stat) = cm.grid(c);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut maxima = Vec::with_capacity(cfg.surrogates);
    for _ in 0..cfg.surrogates {
        let mut v = c.values.clone();
        for j in 1..=c.lags {
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            v[c.lags + j] *= phase;
            v[c.lags - j] *= phase.conj();
        }
        let surrogate = CorrelationSeries::new(c.step, v)?;
        let (_, s) = cm.grid(&surrogate);
        maxima.push(s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let (surrogate_mean, var) = if maxima.is_empty() { (0.0, 0.0) } else { mean_variance(&maxima) };
    let surrogate_sd = var.sqrt();
    let threshold = (surrogate_mean + cfg.sigmas * surrogate_sd).max(cfg.floor_fraction * c.at_zero().norm());

    let mut atoms = Vec::new();
    for k in 1..stat.len() - 1 {
        if stat[k] > threshold && stat[k] >= stat[k - 1] && stat[k] > stat[k + 1] {
            let omega = golden_max(|w| cm.at(w), freqs[k - 1], freqs[k + 1]);
            let mass = cm.at(omega);
            let confidence = if surrogate_sd > 0.0 { (mass - surrogate_mean) / surrogate_sd } else { f64::INFINITY };
            atoms.push(Atom { frequency: omega, mass, confidence });
        }
    }
    Ok(AtomReport { atoms, threshold, surrogate_mean, surrogate_sd, cesaro_length: c.s_max() })
}

/// Richardson-extrapolated central difference of `g` at zero.
fn derivative(g: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((g(h)? - g(-h)?) / (2.0 * h)) };
    let (full, half) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * half - full) / 3.0)
}

/// `|X_f φ(φ_s x) − (∂₁s*)(0,s,x) X_φ φ(φ_s x) − X_f(φ∘φ_s)(x)|`.
pub fn conj_identity_residual(flow: &HorocycleFlow, f: &Observable, s: f64, x: &PhasePoint) -> Result<f64> {
    let group = flow.group();
    let x = group.reduce_point(x)?;
    let y = flow.flow_phi(&x, s)?;
    let d1 = d1_s_star(flow, 0.0, s, &x, DEFAULT_DELTA)?.richardson;
    let moved = derivative(|h| Ok(f.value(&flow.flow_phi(&group.geodesic(&x, h)?, s)?)), DEFAULT_DELTA)?;
    Ok((f.xf(&y) - d1 * flow.x_phi(f, &y) - moved).abs())
}

/// Composite Simpson rule for `∫_0^s u_{0,0}(φ_r x) dr` with at most `step`
/// between nodes.
pub fn u_integral(flow: &HorocycleFlow, s: f64, x: &PhasePoint, step: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut n = (s.abs() / step).ceil() as usize;
    n += n % 2;
    let h = s / n as f64;
    let nodes = orbit(flow, x, h, n)?;
    let mut acc = 0.0;
    for (k, y) in nodes.iter().enumerate() {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * u_field(flow, 0.0, 0.0, y, DEFAULT_DELTA, DEFAULT_DELTA)?;
    }
    Ok(acc * h / 3.0)
}

/// `|X_f(φ∘φ_{−s})(φ_s x) − X_f φ(x) − (∫_0^s u_{0,0}∘φ_r dr) X_φ φ(x)|`.
pub fn lemma32a_residual(flow: &HorocycleFlow, f: &Observable, s: f64, x: &PhasePoint) -> Result<f64> {
    let group = flow.group();
    let x = group.reduce_point(x)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let y = flow.flow_phi(&x, s)?;
    let lhs = derivative(|h| Ok(f.value(&flow.flow_phi(&group.geodesic(&y, h)?, -s)?)), DEFAULT_DELTA)?;
    let integral = u_integral(flow, s, &x, 1e-2)?;
    Ok((lhs - f.xf(&x) - integral * flow.x_phi(f, &x)).abs())
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

    fn observable(m: &HorocycleFlow) -> Observable {
        let g = m.group();
        let c = g.reduce(&GroupElement::rotation(1.0).compose(&GroupElement::geodesic(0.4).unwrap())).unwrap();
        Observable::bump(invariant_bump(g, &c, 0.6).unwrap())
    }

    #[test]
    fn fft_correlation_matches_direct_sum() {
        let a = [1.0, -2.0, 0.5, 3.0, 0.25];
        let b = [0.5, 1.0, -1.0, 2.0, -0.5];
        let c = cross_correlate(&a, &b, 2);
        for (k, v) in c.iter().enumerate() {
            let j = k as isize - 2;
            let mut direct = 0.0;
            for i in 0..5isize {
                if (0..5).contains(&(i + j)) {
                    direct += a[i as usize] * b[(i + j) as usize];
                }
            }
            assert!((v.re - direct / 5.0).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn window_names() {
        assert_eq!(LagWindow::parse("Bartlett").unwrap(), LagWindow::Bartlett);
        assert!(matches!(LagWindow::parse("hann"), Err(Error::WindowUnknown(_))));
        assert_eq!(LagWindow::Parzen.weight(0.5), 0.25);
        assert_eq!(LagWindow::Bartlett.weight(1.2), 0.0);
    }

    #[test]
    fn density_mass_equals_variance() {
        let c = CorrelationSeries::from_real_fn(0.05, 40.0, |s| (-s.abs()).exp() * (2.0 * s).cos()).unwrap();
        for w in ["bartlett", "parzen"] {
            let est = spectral_density(&c, w, 30.0).unwrap();
            assert!((est.total_mass - 1.0).abs() < 1e-12);
            assert!(est.min_density() > -1e-12);
        }
    }

    #[test]
    fn cosine_atoms() {
        let c = CorrelationSeries::from_real_fn(0.05, 200.0, |s| (0.7 * s).cos()).unwrap();
        let r = atom_scan(&c, &AtomScanConfig::default()).unwrap();
        assert_eq!(r.atoms.len(), 2);
        for a in &r.atoms {
            assert!((a.frequency.abs() - 0.7).abs() < 1e-3);
            assert!((a.mass - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn orbit_correlation_basics() {
        let m = flow(0.3);
        let f = observable(&m);
        let x = m.group().sample_liouville(1, 3)[0];
        let c = correlation(&m, &f, &f, 5.0, 0.1, &x, 200.0, MeanAdjust::None).unwrap();
        assert!(c.hermitian_defect() < 1e-12);
        let direct: f64 = orbit(&m, &x, 0.1, 1999).unwrap().iter().map(|y| f.value(y).powi(2)).sum::<f64>() / 2000.0;
        assert!((c.at_zero().re - direct).abs() < 1e-12);
        let one = Observable::constant(1.0);
        let k = correlation(&m, &one, &one, 5.0, 0.1, &x, 200.0, MeanAdjust::None).unwrap();
        assert!((k.lag(0).re - 1.0).abs() < 1e-12);
        assert!(correlation(&m, &f, &f, 50.0, 0.1, &x, 200.0, MeanAdjust::None).is_err());
    }

    #[test]
    fn identities_with_uniform_clock() {
        let m = flow(0.0);
        let f = observable(&m);
        for x in m.group().sample_liouville(3, 8) {
            assert!(conj_identity_residual(&m, &f, 1.0, &x).unwrap() < 1e-6);
            assert_eq!(lemma32a_residual(&m, &f, 0.0, &x).unwrap(), 0.0);
            assert!(lemma32a_residual(&m, &f, 1.0, &x).unwrap() < 1e-6);
            assert!((u_integral(&m, 2.0, &x, 1e-2).unwrap() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn identities_with_bump_clock() {
        let m = flow(0.3);
        let f = observable(&m);
        for x in m.group().sample_liouville(3, 8) {
            assert!(conj_identity_residual(&m, &f, 0.0, &x).unwrap() < 1e-10);
            for s in [1.0, 2.0] {
                assert!(conj_identity_residual(&m, &f, s, &x).unwrap() < 1e-4);
                assert!(lemma32a_residual(&m, &f, s, &x).unwrap() < 1e-4);
            }
        }
    }
}
