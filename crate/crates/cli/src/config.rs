//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use horolab::ode::FlowConfig;
use horolab::sl2::GroupElement;
use horolab::surface::{invariant_bump, FuchsianGroup, Observable, DEFAULT_REDUCTION_DEPTH};
use horolab::timechange::{BumpSpec, TimeChange};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid value for `{key}`: {msg}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bolza,
    Suspension,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeChangeKind {
    Identity,
    Constant,
    BumpSum,
}

/// A bump centred at `k_angle a_radius` (base point at hyperbolic distance
/// `radius` from `i`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BumpConfig {
    pub angle: f64,
    pub radius: f64,
    pub width: f64,
}

impl Default for BumpConfig {
    fn default() -> Self {
        Self { angle: 0.0, radius: 0.0, width: 0.7 }
    }
}

impl BumpConfig {
    pub fn center(&self) -> Result<GroupElement, ConfigError> {
        let a = GroupElement::geodesic(self.radius).map_err(|e| bad("radius", e))?;
        Ok(GroupElement::rotation(self.angle).compose(&a))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeChangeConfig {
    pub kind: TimeChangeKind,
    /// Value of `ρ` for `kind = "constant"`.
    pub value: f64,
    /// Amplitude `ε` for `kind = "bump-sum"`.
    pub epsilon: f64,
    pub bumps: Vec<BumpConfig>,
}

impl Default for TimeChangeConfig {
    fn default() -> Self {
        Self { kind: TimeChangeKind::Identity, value: 1.0, epsilon: 0.3, bumps: vec![BumpConfig::default()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub step: f64,
    pub tolerance: f64,
    pub max_substeps: usize,
    pub reduction_depth: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let f = FlowConfig::default();
        Self { step: f.step, tolerance: f.tolerance, max_substeps: f.max_substeps, reduction_depth: DEFAULT_REDUCTION_DEPTH }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesConfig {
    /// `constant = true` replaces ψ and φ by the constant function 1.
    pub constant: bool,
    pub psi: BumpConfig,
    pub phi: BumpConfig,
    /// Subtract a Monte-Carlo estimate of `∫ F dμ` from both observables.
    pub mean_zero: bool,
    /// Constant added after the mean adjustment.
    pub offset: f64,
    pub mean_samples: usize,
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        Self {
            constant: false,
            psi: BumpConfig { angle: 1.0, radius: 0.8, width: 0.6 },
            phi: BumpConfig { angle: -0.5, radius: 1.1, width: 0.6 },
            mean_zero: true,
            offset: 0.0,
            mean_samples: 400_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    pub samples: usize,
    pub t_range: f64,
    pub s_range: f64,
    pub s_values: Vec<f64>,
    pub delta: f64,
    pub cocycle_tolerance: f64,
    pub u_tolerance: f64,
    pub operator_tolerance: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            t_range: 2.0,
            s_range: 50.0,
            s_values: vec![0.5, 1.0, 2.0, 5.0],
            delta: 1e-4,
            cocycle_tolerance: 1e-7,
            u_tolerance: 1e-4,
            operator_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    pub t: Vec<f64>,
    pub s_max: f64,
    pub points: usize,
    pub tolerance: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        Self { t: vec![-1.0, -0.5, 0.5, 1.0], s_max: 1e4, points: 10, tolerance: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingConfig {
    pub horizon: f64,
    pub starts: usize,
    pub step: f64,
    pub s_max: f64,
    pub block_start: f64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self { horizon: 1e5, starts: 10, step: 0.1, s_max: 640.0, block_start: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    /// Autocorrelation of ψ along `φ` orbits.
    Orbit,
    /// `C(s) = Σ_k mass_k cos(ω_k s)` with the configured atoms.
    SyntheticCosine,
    /// `C(s) = exp(−|s|)`.
    SyntheticExponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub source: SpectrumSource,
    pub window: String,
    pub bandwidth: f64,
    pub surrogates: usize,
    pub sigmas: f64,
    pub floor_fraction: f64,
    /// `(frequency, mass)` pairs for the synthetic cosine source.
    pub synthetic_atoms: Vec<[f64; 2]>,
    pub synthetic_step: f64,
    pub synthetic_s_max: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            source: SpectrumSource::Orbit,
            window: "bartlett".into(),
            bandwidth: 100.0,
            surrogates: 20,
            sigmas: 4.0,
            floor_fraction: 0.01,
            synthetic_atoms: vec![[0.0, 0.5], [1.0, 0.5]],
            synthetic_step: 0.05,
            synthetic_s_max: 400.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MourreConfig {
    pub interval: [f64; 2],
    pub t_ladder: Vec<f64>,
    pub points: usize,
    pub quadrature_step: f64,
}

impl Default for MourreConfig {
    fn default() -> Self {
        Self { interval: [1.0, 2.0], t_ladder: vec![5.0, 20.0, 80.0], points: 100, quadrature_step: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Optional generator file replacing the built-in Bolza group.
    pub generators: Option<PathBuf>,
    pub time_change: TimeChangeConfig,
    pub integrator: IntegratorConfig,
    pub observables: ObservablesConfig,
    pub identities: IdentitiesConfig,
    pub lambda: LambdaConfig,
    pub mixing: MixingConfig,
    pub spectrum: SpectrumConfig,
    pub mourre: MourreConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Bolza,
            seed: 0,
            out: None,
            generators: None,
            time_change: TimeChangeConfig::default(),
            integrator: IntegratorConfig::default(),
            observables: ObservablesConfig::default(),
            identities: IdentitiesConfig::default(),
            lambda: LambdaConfig::default(),
            mixing: MixingConfig::default(),
            spectrum: SpectrumConfig::default(),
            mourre: MourreConfig::default(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let i = &self.integrator;
        positive("integrator.step", i.step)?;
        positive("integrator.tolerance", i.tolerance)?;
        if i.max_substeps == 0 {
            return Err(bad("integrator.max_substeps", "must be positive"));
        }
        if i.reduction_depth == 0 {
            return Err(bad("integrator.reduction_depth", "must be positive"));
        }
        let tc = &self.time_change;
        match tc.kind {
            TimeChangeKind::Constant => positive("time_change.value", tc.value)?,
            TimeChangeKind::BumpSum => {
                if !(0.0..=0.5).contains(&tc.epsilon) {
                    return Err(bad("time_change.epsilon", format!("must lie in [0, 0.5], got {}", tc.epsilon)));
                }
                if tc.bumps.is_empty() {
                    return Err(bad("time_change.bumps", "bump-sum needs at least one bump"));
                }
            }
            TimeChangeKind::Identity => {}
        }
        let id = &self.identities;
        positive("identities.delta", id.delta)?;
        positive("identities.cocycle_tolerance", id.cocycle_tolerance)?;
        positive("identities.u_tolerance", id.u_tolerance)?;
        positive("identities.operator_tolerance", id.operator_tolerance)?;
        positive("lambda.tolerance", self.lambda.tolerance)?;
        positive("mixing.step", self.mixing.step)?;
        positive("mixing.horizon", self.mixing.horizon)?;
        positive("mixing.s_max", self.mixing.s_max)?;
        positive("spectrum.bandwidth", self.spectrum.bandwidth)?;
        positive("spectrum.synthetic_step", self.spectrum.synthetic_step)?;
        positive("mourre.quadrature_step", self.mourre.quadrature_step)?;
        if self.observables.mean_samples == 0 {
            return Err(bad("observables.mean_samples", "must be positive"));
        }
        horolab::spectral::LagWindow::parse(&self.spectrum.window).map_err(|e| bad("spectrum.window", e))?;
        Ok(())
    }

    /// The effective configuration as TOML, without the output location.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        toml::to_string(&c).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let canonical = self.canonical();
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn flow_config(&self) -> FlowConfig {
        let i = &self.integrator;
        FlowConfig { step: i.step, tolerance: i.tolerance, max_substeps: i.max_substeps }
    }

    pub fn group(&self) -> Result<Arc<FuchsianGroup>, ConfigError> {
        let depth = self.integrator.reduction_depth;
        let group = match &self.generators {
            None => FuchsianGroup::bolza().with_reduction_depth(depth),
            Some(path) => FuchsianGroup::load(path).map_err(|e| bad("generators", e))?.with_reduction_depth(depth),
        };
        Ok(Arc::new(group))
    }

    pub fn time_change(&self, group: &Arc<FuchsianGroup>) -> Result<TimeChange, ConfigError> {
        let tc = &self.time_change;
        match tc.kind {
            TimeChangeKind::Identity => Ok(TimeChange::identity()),
            TimeChangeKind::Constant => TimeChange::constant(tc.value).map_err(|e| bad("time_change.value", e)),
            TimeChangeKind::BumpSum => {
                let specs = tc
                    .bumps
                    .iter()
                    .map(|b| Ok(BumpSpec { center: b.center()?, width: b.width }))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                TimeChange::bump_sum(group, &specs, tc.epsilon).map_err(|e| bad("time_change.bumps", e))
            }
        }
    }

    pub fn bump(&self, group: &Arc<FuchsianGroup>, key: &str, b: &BumpConfig) -> Result<Observable, ConfigError> {
        let center = group.reduce(&b.center()?).map_err(|e| bad(key, e))?;
        Ok(Observable::bump(invariant_bump(group, &center, b.width).map_err(|e| bad(key, e))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::parse("", "test").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
model = "suspension"
seed = 9

[time_change]
kind = "bump-sum"
epsilon = 0.1
bumps = [{ angle = 0.5, width = 0.5 }]

[mourre]
t_ladder = [1.0, 2.0]
"#;
        let cfg = ExperimentConfig::parse(text, "test").unwrap();
        assert_eq!(cfg.model, ModelKind::Suspension);
        assert_eq!(cfg.time_change.bumps[0].width, 0.5);
        assert_eq!(cfg.mourre.t_ladder, vec![1.0, 2.0]);
        assert_eq!(cfg.mourre.points, 100);
        assert_ne!(cfg.hash(), ExperimentConfig::default().hash());
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let err = ExperimentConfig::parse("seed = 1\n\n[mixing]\nhorizn = 5\n", "cfg.toml").unwrap_err();
        assert!(err.0.contains("horizn") && err.0.contains("line 4"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let err = ExperimentConfig::parse("[integrator]\ntolerance = -1.0\n", "t").unwrap_err();
        assert!(err.0.contains("integrator.tolerance"));
        let err = ExperimentConfig::parse("[spectrum]\nwindow = \"hann\"\n", "t").unwrap_err();
        assert!(err.0.contains("spectrum.window"));
        let err = ExperimentConfig::parse("[time_change]\nkind = \"bump-sum\"\nepsilon = 0.9\n", "t").unwrap_err();
        assert!(err.0.contains("time_change.epsilon"));
    }
}
