//! The experiment subcommands.

use std::f64::consts::PI;

use horolab::cocycle::{estimate_lambda, residuals, sample, u00, CocycleSample};
use horolab::ergodic::{mourre_certificate, CtConfig, MourreCertificate};
use horolab::model::WuModel;
use horolab::spectral::{
    atom_scan, conj_identity_residual, correlation_starts, dyadic_decay, lemma32a_residual, spectral_density, Atom,
    AtomScanConfig, CorrelationSeries, DecayReport, MeanAdjust,
};
use horolab::sl2::GroupElement;
use horolab::surface::{Observable, PhasePoint};
use horolab::suspension::{lambda_a, CatSuspension, SuspensionPoint};
use horolab::timechange::HorocycleFlow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, ModelKind, SpectrumSource};
use crate::output::Output;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug)]
pub enum CmdError {
    Config(ConfigError),
    /// The configuration is valid but the experiment's preconditions are not met.
    Refused(String),
    Numeric(horolab::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(e) => write!(f, "configuration error: {e}"),
            CmdError::Refused(m) => write!(f, "refused: {m}"),
            CmdError::Numeric(e) => write!(f, "numerical error: {e}"),
            CmdError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) | CmdError::Refused(_) => 2,
            CmdError::Numeric(_) | CmdError::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e)
    }
}

impl From<horolab::Error> for CmdError {
    fn from(e: horolab::Error) -> Self {
        CmdError::Numeric(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

pub type CmdResult = Result<Status, CmdError>;

fn refuse<T>(msg: impl Into<String>) -> Result<T, CmdError> {
    Err(CmdError::Refused(msg.into()))
}

/// Seeds for the independent random streams of one run.
mod stream {
    pub const IDENTITY_POINTS: u64 = 1;
    pub const IDENTITY_TIMES: u64 = 2;
    pub const LAMBDA_POINTS: u64 = 3;
    pub const MEAN_PSI: u64 = 4;
    pub const MEAN_PHI: u64 = 5;
    pub const MIXING_STARTS: u64 = 6;
    pub const SPECTRUM_STARTS: u64 = 7;
    pub const MOURRE_POINTS: u64 = 8;
    pub const ATOMS: u64 = 9;
    pub const IDENTITY_OPS: u64 = 10;
}

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: Output,
}

impl Context {
    fn seed(&self, stream: u64) -> u64 {
        self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(stream)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(stream))
    }

    fn bolza_flow(&self) -> Result<HorocycleFlow, CmdError> {
        let group = self.cfg.group()?;
        let tc = self.cfg.time_change(&group)?;
        Ok(HorocycleFlow::new(group, tc, self.cfg.flow_config())?)
    }

    fn suspension_points(&self, n: usize, stream: u64) -> Vec<SuspensionPoint> {
        let mut rng = self.rng(stream);
        (0..n).map(|_| SuspensionPoint::new(rng.gen(), rng.gen(), rng.gen())).collect()
    }

    fn require_bolza(&self, what: &str) -> Result<(), CmdError> {
        if self.cfg.model == ModelKind::Suspension {
            return refuse(format!(
                "{what} needs a minimal W^u flow; the cat-map suspension is not minimal \
                 (its unstable leaves close up on invariant subtori), so the experiment does not apply"
            ));
        }
        Ok(())
    }

    /// `∫ F dμ` from a weighted Liouville sample.
    fn mu_mean(&self, flow: &HorocycleFlow, f: &Observable, stream: u64) -> f64 {
        let samples = flow.group().sample_liouville(self.cfg.observables.mean_samples, self.seed(stream));
        let w = flow.measure_weights(&samples);
        w.integrate(&samples.iter().map(|x| f.value(x)).collect::<Vec<_>>()).mean
    }

    /// The configured ψ and φ together with their `μ`-means.
    fn observables(&self, flow: &HorocycleFlow) -> Result<ObservablePair, CmdError> {
        let o = &self.cfg.observables;
        if o.constant {
            let f = Observable::constant(1.0);
            return Ok(ObservablePair { psi: f.clone(), phi: f, psi_mean: 1.0, phi_mean: 1.0 });
        }
        let group = flow.group();
        let mut psi = self.cfg.bump(group, "observables.psi", &o.psi)?;
        let mut phi = self.cfg.bump(group, "observables.phi", &o.phi)?;
        let mut psi_mean = self.mu_mean(flow, &psi, stream::MEAN_PSI);
        let mut phi_mean = self.mu_mean(flow, &phi, stream::MEAN_PHI);
        if o.mean_zero {
            psi = psi.offset(-psi_mean);
            phi = phi.offset(-phi_mean);
            psi_mean = 0.0;
            phi_mean = 0.0;
        }
        Ok(ObservablePair {
            psi: psi.offset(o.offset),
            phi: phi.offset(o.offset),
            psi_mean: psi_mean + o.offset,
            phi_mean: phi_mean + o.offset,
        })
    }
}

struct ObservablePair {
    psi: Observable,
    phi: Observable,
    psi_mean: f64,
    phi_mean: f64,
}

fn print_status(name: &str, status: Status, detail: &str) {
    let tag = match status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skipped => "SKIP",
    };
    println!("[{tag}] {name}: {detail}");
}

#[derive(Serialize)]
struct IdentityCheck {
    name: &'static str,
    samples: usize,
    max_residual: f64,
    tolerance: f64,
    pass: bool,
}

impl IdentityCheck {
    fn new(name: &'static str, residuals: &[f64], tolerance: f64) -> Self {
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        Self { name, samples: residuals.len(), max_residual, tolerance, pass: max_residual <= tolerance }
    }
}

#[derive(Serialize)]
struct IdentityReport {
    command: &'static str,
    model: ModelKind,
    status: Status,
    checks: Vec<IdentityCheck>,
}

/// Cocycle residuals, the `u_{0,0}` identity and one sample row per point.
fn cocycle_checks<M: WuModel>(
    ctx: &Context,
    model: &M,
    points: &[M::Point],
    u_expected: impl Fn(&M::Point) -> f64 + Sync,
) -> Result<(Vec<IdentityCheck>, Vec<CocycleSample<M::Point>>), CmdError> {
    let id = &ctx.cfg.identities;
    let mut rng = ctx.rng(stream::IDENTITY_TIMES);
    let times: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|_| {
            (
                rng.gen_range(-id.t_range..=id.t_range),
                rng.gen_range(-id.s_range..=id.s_range),
                rng.gen_range(-id.s_range..=id.s_range),
            )
        })
        .collect();
    let rows = points
        .par_iter()
        .zip(&times)
        .map(|(x, &(t, r, s))| {
            let res = residuals(model, t, r, s, x)?;
            let u = (u00(model, x)? - u_expected(x)).abs();
            let row = sample(model, t, s, x, id.delta, id.delta)?;
            Ok((res, u, row))
        })
        .collect::<horolab::Result<Vec<_>>>()?;
    let add: Vec<f64> = rows.iter().map(|r| r.0.additivity).collect();
    let com: Vec<f64> = rows.iter().map(|r| r.0.commutation).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let checks = vec![
        IdentityCheck::new("cocycle additivity", &add, id.cocycle_tolerance),
        IdentityCheck::new("flow commutation", &com, id.cocycle_tolerance),
        IdentityCheck::new("u_{0,0} identity", &u, id.u_tolerance),
    ];
    Ok((checks, rows.into_iter().map(|r| r.2).collect()))
}

pub fn verify_identities(ctx: &Context) -> CmdResult {
    let id = &ctx.cfg.identities;
    if id.samples == 0 {
        return refuse("identities.samples must be positive");
    }
    if !(id.delta <= 1e-2) {
        return refuse("identities.delta must not exceed 1e-2");
    }
    let (checks, rows) = match ctx.cfg.model {
        ModelKind::Bolza => {
            let flow = ctx.bolza_flow()?;
            let points = flow.group().sample_liouville(id.samples, ctx.seed(stream::IDENTITY_POINTS));
            let ln_l = flow.ln_lambda();
            let (mut checks, rows) =
                cocycle_checks(ctx, &flow, &points, |x| ln_l + flow.time_change().log_derivative_f(x))?;
            let f = ctx.cfg.bump(flow.group(), "observables.psi", &ctx.cfg.observables.psi)?;
            // Base points inside the support of ψ, so that X_f ψ does not vanish.
            let center = ctx.cfg.observables.psi.center()?;
            let mut rng = ctx.rng(stream::IDENTITY_OPS);
            let few = (0..id.samples.min(20))
                .map(|_| {
                    let g = center
                        .compose(&GroupElement::rotation(rng.gen_range(-PI..PI)))
                        .compose(&GroupElement::geodesic(rng.gen_range(0.0..0.3))?)
                        .compose(&GroupElement::rotation(rng.gen_range(-PI..PI)));
                    flow.group().reduce(&g)
                })
                .collect::<horolab::Result<Vec<_>>>()?;
            let pairs: Vec<(&PhasePoint, f64)> =
                few.iter().flat_map(|x| id.s_values.iter().map(move |s| (x, *s))).collect();
            let ops = pairs
                .par_iter()
                .map(|(x, s)| Ok((conj_identity_residual(&flow, &f, *s, x)?, lemma32a_residual(&flow, &f, *s, x)?)))
                .collect::<horolab::Result<Vec<_>>>()?;
            let conj: Vec<f64> = ops.iter().map(|o| o.0).collect();
            let integrated: Vec<f64> = ops.iter().map(|o| o.1).collect();
            checks.push(IdentityCheck::new("conjugation of X_f", &conj, id.operator_tolerance));
            checks.push(IdentityCheck::new("integrated u_{0,0}", &integrated, id.operator_tolerance));
            (checks, rows.into_iter().map(|r| r.csv_row()).collect::<Vec<_>>())
        }
        ModelKind::Suspension => {
            let points = ctx.suspension_points(id.samples, stream::IDENTITY_POINTS);
            let ln_l = lambda_a().ln();
            let (checks, rows) = cocycle_checks(ctx, &CatSuspension, &points, |_| ln_l)?;
            (checks, rows.into_iter().map(|r| r.csv_row()).collect::<Vec<_>>())
        }
    };
    ctx.out.csv(
        "cocycle_samples.csv",
        "cocycle samples s*(t,s,x), ∂₁s*, u_{t,s} at random (t, s, x)",
        CocycleSample::<()>::CSV_COLUMNS,
        rows,
    )?;
    let status = Status::from_pass(checks.iter().all(|c| c.pass));
    for c in &checks {
        print_status(c.name, Status::from_pass(c.pass), &format!("max residual {:.3e} (tolerance {:.0e})", c.max_residual, c.tolerance));
    }
    ctx.out.json("identities.json", &IdentityReport { command: "verify-identities", model: ctx.cfg.model, status, checks })?;
    Ok(status)
}

#[derive(Serialize)]
struct LambdaRow {
    t: f64,
    max_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct LambdaReport {
    command: &'static str,
    model: ModelKind,
    status: Status,
    lambda: f64,
    tolerance: f64,
    s_max: f64,
    rows: Vec<LambdaRow>,
}

fn lambda_ladder<M: WuModel>(
    model: &M,
    points: &[M::Point],
    ts: &[f64],
    s_max: f64,
) -> Result<Vec<(usize, f64, Vec<(f64, f64)>, f64)>, CmdError> {
    let jobs: Vec<(usize, f64)> = ts.iter().flat_map(|t| (0..points.len()).map(move |i| (i, *t))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, t)| {
            let est = estimate_lambda(model, &points[i], t, s_max)?;
            Ok((i, t, est.ladder, est.lambda))
        })
        .collect::<horolab::Result<Vec<_>>>()?)
}

pub fn estimate_lambda_cmd(ctx: &Context) -> CmdResult {
    let l = &ctx.cfg.lambda;
    if !(l.s_max >= 100.0) || !l.s_max.is_finite() {
        return refuse(format!("lambda.s_max = {} is below 10², too short for the limit to be meaningful", l.s_max));
    }
    if l.points == 0 || l.t.is_empty() {
        return refuse("lambda.points and lambda.t must be non-empty");
    }
    if let Some(t) = l.t.iter().find(|t| **t == 0.0 || !t.is_finite()) {
        return refuse(format!("lambda.t contains {t}; t must be finite and non-zero"));
    }
    let (lambda, results) = match ctx.cfg.model {
        ModelKind::Bolza => {
            let flow = ctx.bolza_flow()?;
            let points = flow.group().sample_liouville(l.points, ctx.seed(stream::LAMBDA_POINTS));
            (flow.ln_lambda().exp(), lambda_ladder(&flow, &points, &l.t, l.s_max)?)
        }
        ModelKind::Suspension => {
            let points = ctx.suspension_points(l.points, stream::LAMBDA_POINTS);
            (lambda_a(), lambda_ladder(&CatSuspension, &points, &l.t, l.s_max)?)
        }
    };
    let mut csv = Vec::new();
    for (i, t, ladder, _) in &results {
        for (s, hat) in ladder {
            csv.push(format!("{i},{t},{s},{hat}"));
        }
    }
    ctx.out.csv("lambda.csv", "Marcus ratio (s*(t,s,x)/s)^(1/t) along decade ladders", "point,t,s,lambda_hat", csv)?;
    let rows: Vec<LambdaRow> = l
        .t
        .iter()
        .map(|t| {
            let max_error = results.iter().filter(|r| r.1 == *t).map(|r| (r.3 - lambda).abs()).fold(0.0, f64::max);
            LambdaRow { t: *t, max_error, pass: max_error <= l.tolerance }
        })
        .collect();
    let status = Status::from_pass(rows.iter().all(|r| r.pass));
    for r in &rows {
        print_status(
            &format!("lambda at t={}", r.t),
            Status::from_pass(r.pass),
            &format!("max |λ̂ − {lambda:.6}| = {:.3e} (tolerance {})", r.max_error, l.tolerance),
        );
    }
    ctx.out.json(
        "lambda.json",
        &LambdaReport { command: "estimate-lambda", model: ctx.cfg.model, status, lambda, tolerance: l.tolerance, s_max: l.s_max, rows },
    )?;
    Ok(status)
}

fn check_orbit_lengths(ctx: &Context) -> Result<(), CmdError> {
    let m = &ctx.cfg.mixing;
    if m.horizon < 10.0 * m.s_max {
        return refuse(format!(
            "mixing.horizon = {} is shorter than 10·mixing.s_max = {}; the correlation estimate would be dominated by edge bias",
            m.horizon,
            10.0 * m.s_max
        ));
    }
    if m.starts < 2 {
        return refuse("mixing.starts must be at least 2 for a standard error");
    }
    if m.step > m.s_max {
        return refuse("mixing.step must not exceed mixing.s_max");
    }
    Ok(())
}

#[derive(Serialize)]
struct MixingReport {
    command: &'static str,
    status: Status,
    message: Option<String>,
    horizon: f64,
    starts: usize,
    psi_mean: f64,
    phi_mean: f64,
    decay: Option<DecayReport>,
}

pub fn mixing(ctx: &Context) -> CmdResult {
    ctx.require_bolza("mixing")?;
    check_orbit_lengths(ctx)?;
    let m = &ctx.cfg.mixing;
    if !(m.block_start > 0.0 && 2.0 * m.block_start <= m.s_max) {
        return refuse(format!("mixing.block_start must satisfy 0 < 2·block_start ≤ s_max, got {}", m.block_start));
    }
    let flow = ctx.bolza_flow()?;
    let obs = ctx.observables(&flow)?;
    let starts = flow.group().sample_liouville(m.starts, ctx.seed(stream::MIXING_STARTS));
    let ens = correlation_starts(&flow, &obs.psi, &obs.phi, m.s_max, m.step, &starts, m.horizon, MeanAdjust::None)?;
    let lags = ens.mean.lags as isize;
    let rows = ens.mean.rows().zip(-lags..=lags).map(|((s, re, im), j)| format!("{s},{re},{im},{}", ens.std_error_at(j)));
    ctx.out.csv("correlation.csv", "multi-start correlation C(s) = <psi, phi∘φ_s>", "s,re,im,std_error", rows)?;

    let (status, message, decay) = if ctx.cfg.observables.constant {
        let msg = "trend test skipped: constant observables lie in the kernel direction, where C(s) does not decay".to_string();
        print_status("mixing trend", Status::Skipped, &msg);
        (Status::Skipped, Some(msg), None)
    } else {
        let rep = dyadic_decay(&ens, m.block_start, m.s_max)?;
        let maxima: Vec<String> = rep.blocks.iter().map(|b| format!("{:.2e}±{:.1e}", b.max_abs, b.std_error)).collect();
        let status = Status::from_pass(rep.pass);
        print_status("mixing trend", status, &format!("dyadic block maxima {}", maxima.join(" ")));
        (status, None, Some(rep))
    };
    ctx.out.json(
        "mixing.json",
        &MixingReport {
            command: "mixing",
            status,
            message,
            horizon: m.horizon,
            starts: m.starts,
            psi_mean: obs.psi_mean,
            phi_mean: obs.phi_mean,
            decay,
        },
    )?;
    Ok(status)
}

#[derive(Serialize)]
struct ExpectedAtom {
    frequency: f64,
    mass: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    command: &'static str,
    status: Status,
    source: SpectrumSource,
    window: String,
    bandwidth: f64,
    total_mass: f64,
    min_density: f64,
    atoms: Vec<Atom>,
    threshold: f64,
    expected_atoms: Vec<ExpectedAtom>,
    lorentzian_relative_error: Option<f64>,
}

fn atoms_match(found: &[Atom], expected: &[ExpectedAtom]) -> bool {
    found.len() == expected.len()
        && expected.iter().all(|e| {
            found.iter().any(|a| (a.frequency - e.frequency).abs() < 0.05 && (a.mass - e.mass).abs() <= 0.05 * e.mass)
        })
}

pub fn spectrum(ctx: &Context) -> CmdResult {
    let sp = &ctx.cfg.spectrum;
    let (series, expected) = match sp.source {
        SpectrumSource::Orbit => {
            ctx.require_bolza("the orbit spectrum")?;
            check_orbit_lengths(ctx)?;
            let m = &ctx.cfg.mixing;
            let flow = ctx.bolza_flow()?;
            let obs = ctx.observables(&flow)?;
            let starts = flow.group().sample_liouville(m.starts, ctx.seed(stream::SPECTRUM_STARTS));
            let ens = correlation_starts(&flow, &obs.psi, &obs.psi, m.s_max, m.step, &starts, m.horizon, MeanAdjust::None)?;
            let mean_sq = obs.psi_mean * obs.psi_mean;
            // A mean below the detection floor leaves no visible atom.
            let expected = if mean_sq > sp.floor_fraction * ens.mean.at_zero().norm() {
                vec![ExpectedAtom { frequency: 0.0, mass: mean_sq }]
            } else {
                Vec::new()
            };
            (ens.mean, expected)
        }
        SpectrumSource::SyntheticCosine => {
            let atoms = sp.synthetic_atoms.clone();
            if atoms.iter().any(|a| a[0] < 0.0 || a[1] <= 0.0) {
                return refuse("spectrum.synthetic_atoms needs frequency ≥ 0 and mass > 0");
            }
            let series = CorrelationSeries::from_real_fn(sp.synthetic_step, sp.synthetic_s_max, |s| {
                atoms.iter().map(|a| a[1] * (a[0] * s).cos()).sum()
            })?;
            let mut expected = Vec::new();
            for [w, m] in atoms {
                if w == 0.0 {
                    expected.push(ExpectedAtom { frequency: 0.0, mass: m });
                } else {
                    expected.push(ExpectedAtom { frequency: -w, mass: m / 2.0 });
                    expected.push(ExpectedAtom { frequency: w, mass: m / 2.0 });
                }
            }
            (series, expected)
        }
        SpectrumSource::SyntheticExponential => {
            (CorrelationSeries::from_real_fn(sp.synthetic_step, sp.synthetic_s_max, |s| (-s.abs()).exp())?, Vec::new())
        }
    };
    let est = spectral_density(&series, &sp.window, sp.bandwidth)?;
    ctx.out.csv(
        "density.csv",
        &format!("Blackman-Tukey spectral density, {} window, truncation lag {}", est.window.name(), est.bandwidth),
        "omega,density",
        est.frequencies.iter().zip(&est.density).map(|(w, d)| format!("{w},{d}")),
    )?;
    let cfg = AtomScanConfig {
        surrogates: sp.surrogates,
        sigmas: sp.sigmas,
        floor_fraction: sp.floor_fraction,
        seed: ctx.seed(stream::ATOMS),
    };
    let atoms = atom_scan(&series, &cfg)?;
    let mut lorentzian = None;
    let mut pass = atoms_match(&atoms.atoms, &expected);
    if sp.source == SpectrumSource::SyntheticExponential {
        let sup = est
            .frequencies
            .iter()
            .zip(&est.density)
            .filter(|(w, _)| w.abs() <= 5.0)
            .map(|(w, d)| (d - 1.0 / (PI * (1.0 + w * w))).abs())
            .fold(0.0, f64::max);
        let rel = sup * PI;
        lorentzian = Some(rel);
        pass &= rel <= 0.03;
        print_status("Lorentzian recovery", Status::from_pass(rel <= 0.03), &format!("relative sup error {:.2}%", 100.0 * rel));
    }
    let status = Status::from_pass(pass);
    let found: Vec<String> = atoms.atoms.iter().map(|a| format!("{:+.4}:{:.4}", a.frequency, a.mass)).collect();
    print_status(
        "atom scan",
        status,
        &format!("atoms [{}], expected {}, threshold {:.3e}", found.join(" "), expected.len(), atoms.threshold),
    );
    ctx.out.json(
        "spectrum.json",
        &SpectrumReport {
            command: "spectrum",
            status,
            source: sp.source,
            window: est.window.name().to_string(),
            bandwidth: est.bandwidth,
            total_mass: est.total_mass,
            min_density: est.min_density(),
            atoms: atoms.atoms,
            threshold: atoms.threshold,
            expected_atoms: expected,
            lorentzian_relative_error: lorentzian,
        },
    )?;
    Ok(status)
}

#[derive(Serialize)]
struct MourreReport {
    command: &'static str,
    status: Status,
    increasing: bool,
    certificates: Vec<MourreCertificate>,
}

pub fn mourre(ctx: &Context) -> CmdResult {
    ctx.require_bolza("the Mourre certificate")?;
    let mc = &ctx.cfg.mourre;
    let [e1, e2] = mc.interval;
    if !(e1 > 0.0) {
        return refuse(format!("mourre.interval = [{e1}, {e2}] must have inf I > 0; the estimate degenerates at 0"));
    }
    if !(e2 > e1 && e2.is_finite()) {
        return refuse(format!("mourre.interval = [{e1}, {e2}] must satisfy e1 < e2 < ∞"));
    }
    if mc.t_ladder.is_empty() || mc.t_ladder.iter().any(|t| !(*t > 0.0)) {
        return refuse("mourre.t_ladder must be a non-empty list of positive times");
    }
    if mc.points == 0 {
        return refuse("mourre.points must be positive");
    }
    let flow = ctx.bolza_flow()?;
    let pts = flow.group().sample_liouville(mc.points, ctx.seed(stream::MOURRE_POINTS));
    let cfg = CtConfig { step: mc.quadrature_step, ..Default::default() };
    let certificates = mc
        .t_ladder
        .iter()
        .map(|t| mourre_certificate(&flow, mc.interval, *t, &pts, &cfg))
        .collect::<horolab::Result<Vec<_>>>()?;
    ctx.out.csv(
        "mourre.csv",
        "Mourre certificate along the t ladder",
        "t,a_I,sup_dev,sup_Xphi_ct,deficit,a_effective",
        certificates
            .iter()
            .map(|c| format!("{},{},{},{},{},{}", c.t, c.a_i, c.sup_dev, c.sup_xphi_ct, c.deficit, c.a_effective)),
    )?;
    let increasing = certificates.windows(2).all(|w| w[1].a_effective >= w[0].a_effective);
    let top = certificates.last().unwrap();
    let status = Status::from_pass(top.pass);
    let ladder: Vec<String> = certificates.iter().map(|c| format!("t={}: {:.6}", c.t, c.a_effective)).collect();
    print_status("Mourre certificate", status, &format!("a_effective {}", ladder.join(", ")));
    ctx.out.json("mourre.json", &MourreReport { command: "mourre", status, increasing, certificates })?;
    Ok(status)
}
