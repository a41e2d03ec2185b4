//! Declarative scenario configuration (JSON).
//!
//! Every struct rejects unknown keys. Exponents and the potential power may
//! be given as rational strings (`"3/2"`, `"inf"`) or as numbers.

use std::path::Path;
use std::sync::Arc;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::duhamel::{IdentityOptions, PicardOptions};
use crate::error::{Error, Result};
use crate::exponent::{parse_rational, ClusterSpec, Exponent};
use crate::field::{FieldSpec, MovingCenter, PotentialProfile, PotentialTerm, ScalarTerm, TimeCoef, VectorTerm};
use crate::geometry::ParticleSystem;
use crate::grid::TensorGrid;
use crate::hamiltonian::Model;
use crate::norms::{random_field, RandomFieldOptions};
use crate::propagator::{BackendConfig, DispersiveOptions};
use crate::state::StateVector;
use crate::timegrid::QuadratureRule;

/// A number or an exact rational string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalValue {
    Number(f64),
    Text(String),
}

impl RationalValue {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            RationalValue::Number(v) => Ok(*v),
            RationalValue::Text(s) => {
                let r = parse_rational(s)?;
                Ok(*r.numer() as f64 / *r.denom() as f64)
            }
        }
    }

    pub fn to_rational(&self) -> Result<Rational64> {
        match self {
            RationalValue::Text(s) => parse_rational(s),
            RationalValue::Number(v) => {
                Rational64::approximate_float(*v).ok_or_else(|| Error::Config(format!("{v} is not representable as a rational")))
            }
        }
    }

    pub fn to_exponent(&self) -> Result<Exponent> {
        match self {
            RationalValue::Text(s) if s.trim().eq_ignore_ascii_case("inf") => Ok(Exponent::Infinite),
            other => Ok(Exponent::Finite(other.to_rational()?)),
        }
    }
}

impl From<f64> for RationalValue {
    fn from(v: f64) -> Self {
        RationalValue::Number(v)
    }
}

impl From<&str> for RationalValue {
    fn from(s: &str) -> Self {
        RationalValue::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub particles: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charges: Option<Vec<f64>>,
}

impl SystemConfig {
    pub fn build(&self) -> Result<ParticleSystem> {
        let n = self.particles;
        ParticleSystem::new(
            self.masses.clone().unwrap_or_else(|| vec![1.0; n]),
            self.charges.clone().unwrap_or_else(|| vec![1.0; n]),
            self.dim,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width `L` of the periodic box `[-L, L)`.
    pub extent: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefConfig {
    Const(f64),
    Linear(f64),
    Sinusoid { c0: f64, c1: f64, freq: f64 },
}

impl CoefConfig {
    fn build(self) -> TimeCoef {
        match self {
            CoefConfig::Const(c) => TimeCoef::Const(c),
            CoefConfig::Linear(c) => TimeCoef::Linear(c),
            CoefConfig::Sinusoid { c0, c1, freq } => TimeCoef::Sinusoid { c0, c1, freq },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarConfig {
    /// `coef(t) <x>^s`
    RadialPower { s: f64, coef: CoefConfig },
    /// `coef(t) E . x`
    Linear { field: Vec<f64>, coef: CoefConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorConfig {
    GradRadial { s: f64, coef: CoefConfig },
    Linear { matrix: Vec<f64>, coef: CoefConfig },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldsConfig {
    pub scalar: Vec<ScalarConfig>,
    pub vector: Vec<VectorConfig>,
}

impl FieldsConfig {
    pub fn build(&self, dim: usize) -> Result<FieldSpec> {
        let mut f = FieldSpec::zero(dim);
        for s in &self.scalar {
            f.push_scalar(match s {
                ScalarConfig::RadialPower { s, coef } => ScalarTerm::RadialPower { coef: coef.build(), s: *s },
                ScalarConfig::Linear { field, coef } => {
                    if field.len() != dim {
                        return Err(Error::Config(format!(
                            "electric field has {} components, dim is {dim}",
                            field.len()
                        )));
                    }
                    ScalarTerm::Linear {
                        field: field.clone(),
                        coef: coef.build(),
                    }
                }
            });
        }
        for v in &self.vector {
            f.push_vector(match v {
                VectorConfig::GradRadial { s, coef } => VectorTerm::GradRadial { coef: coef.build(), s: *s },
                VectorConfig::Linear { matrix, coef } => {
                    if matrix.len() != dim * dim {
                        return Err(Error::Config(format!("vector potential matrix needs {} entries", dim * dim)));
                    }
                    VectorTerm::Linear {
                        matrix: matrix.clone(),
                        coef: coef.build(),
                    }
                }
            });
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterConfig {
    pub strength: f64,
    pub origin: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `Z (|x_{D,r}|^2 + eps^2)^{-gamma/2}` centred at the origin.
    Power {
        cluster: Vec<usize>,
        gamma: RationalValue,
        epsilon: f64,
        strength: f64,
    },
    Centers {
        cluster: Vec<usize>,
        gamma: RationalValue,
        epsilon: f64,
        centers: Vec<CenterConfig>,
    },
    Gaussian {
        cluster: Vec<usize>,
        strength: f64,
        width: f64,
    },
}

impl PotentialConfig {
    pub fn cluster(&self) -> &[usize] {
        match self {
            PotentialConfig::Power { cluster, .. }
            | PotentialConfig::Centers { cluster, .. }
            | PotentialConfig::Gaussian { cluster, .. } => cluster,
        }
    }

    /// Exact power for classification; Gaussians count as `gamma = 0`.
    pub fn gamma(&self) -> Result<Rational64> {
        match self {
            PotentialConfig::Power { gamma, .. } | PotentialConfig::Centers { gamma, .. } => gamma.to_rational(),
            PotentialConfig::Gaussian { .. } => Ok(Rational64::from_integer(0)),
        }
    }

    pub fn build(&self, dim: usize) -> Result<PotentialTerm> {
        let cluster = ClusterSpec::new(self.cluster(), dim)?;
        let width = cluster.relative_dimension();
        let profile = match self {
            PotentialConfig::Power {
                gamma, epsilon, strength, ..
            } => PotentialProfile::Centers {
                gamma: gamma.to_f64()?,
                epsilon: *epsilon,
                centers: vec![MovingCenter::fixed(*strength, vec![0.0; width])],
            },
            PotentialConfig::Centers {
                gamma, epsilon, centers, ..
            } => {
                let mut out = Vec::with_capacity(centers.len());
                for c in centers {
                    let velocity = c.velocity.clone().unwrap_or_else(|| vec![0.0; c.origin.len()]);
                    if c.origin.len() != width || velocity.len() != width {
                        return Err(Error::Config(format!("centre coordinates must have {width} components")));
                    }
                    out.push(MovingCenter {
                        strength: c.strength,
                        origin: c.origin.clone(),
                        velocity,
                    });
                }
                PotentialProfile::Centers {
                    gamma: gamma.to_f64()?,
                    epsilon: *epsilon,
                    centers: out,
                }
            }
            PotentialConfig::Gaussian { strength, width, .. } => PotentialProfile::Gaussian {
                strength: *strength,
                width: *width,
            },
        };
        Ok(PotentialTerm { cluster, profile })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Product Gaussian `exp(-|x - c|^2 / (2 w^2) + i k.x)`, normalized.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        momentum: Option<Vec<f64>>,
    },
    /// Band-limited random field drawn from the scenario seed.
    Random {
        #[serde(default)]
        field: RandomFieldOptions,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Gaussian {
            center: None,
            width: 1.0,
            momentum: None,
        }
    }
}

/// How the propagator of a scenario is realised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Picard when interaction potentials are present, otherwise the evolver.
    #[default]
    Auto,
    Evolver,
    Tensor,
    Picard,
}

fn default_unit_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitaritySettings {
    pub tolerance: f64,
    /// Random fields evolved besides the initial state.
    pub random_states: usize,
    pub nodes: usize,
}

impl Default for UnitaritySettings {
    fn default() -> Self {
        UnitaritySettings {
            tolerance: default_unit_tolerance(),
            random_states: 2,
            nodes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CkSettings {
    pub tolerance: f64,
    /// `(t, r, s)` in absolute time; defaults are spread over the interval.
    pub triples: Option<Vec<[f64; 3]>>,
}

impl Default for CkSettings {
    fn default() -> Self {
        CkSettings {
            tolerance: default_unit_tolerance(),
            triples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeSettings {
    pub c: f64,
    pub tolerance: f64,
    /// Backend for the transformed (time-dependent) evolution.
    pub backend: BackendConfig,
    pub sigma: f64,
    pub sigma_c: f64,
    pub sigma_time: f64,
    /// Points per axis of the refinement levels, coarse to fine.
    pub sigma_points: Vec<usize>,
}

impl Default for GaugeSettings {
    fn default() -> Self {
        GaugeSettings {
            c: 1.0,
            tolerance: default_unit_tolerance(),
            backend: BackendConfig {
                dt: 5e-4,
                ..Default::default()
            },
            sigma: 2.0,
            sigma_c: 1.0,
            sigma_time: 0.5,
            sigma_points: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sigma2Settings {
    pub growth_limit: f64,
    pub min_order: f64,
    /// Step sizes of the residual study, each half the previous.
    pub steps: Vec<f64>,
    pub nodes: usize,
}

impl Default for Sigma2Settings {
    fn default() -> Self {
        Sigma2Settings {
            growth_limit: 10.0,
            min_order: 1.8,
            steps: vec![0.02, 0.01, 0.005],
            nodes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersiveSettings {
    pub window: DispersiveOptions,
    pub tolerance: f64,
    /// Clusters to fit; defaults to `{1}` and, for `N >= 2`, all particles.
    pub clusters: Option<Vec<Vec<usize>>>,
}

impl Default for DispersiveSettings {
    fn default() -> Self {
        DispersiveSettings {
            window: DispersiveOptions::default(),
            tolerance: 0.1,
            clusters: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrichartzSettings {
    /// `(lambda, sigma)` pairs for the refinement study.
    pub pairs: Vec<[RationalValue; 2]>,
    pub cluster: Vec<usize>,
    pub samples: usize,
    pub intervals: usize,
    pub rule: QuadratureRule,
    pub unitarity_tolerance: f64,
    pub stability: f64,
    /// Bound on interacting over free sup ratio.
    pub interacting_factor: f64,
    pub field: RandomFieldOptions,
}

impl Default for StrichartzSettings {
    fn default() -> Self {
        StrichartzSettings {
            pairs: vec![["6".into(), "6".into()]],
            cluster: vec![1],
            samples: 8,
            intervals: 32,
            rule: QuadratureRule::Simpson,
            unitarity_tolerance: 1e-10,
            stability: 0.1,
            interacting_factor: 3.0,
            field: RandomFieldOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassificationSettings {
    pub dims: Vec<usize>,
    pub gamma_max: RationalValue,
    pub denominator: i64,
    /// Accepted location of the `n = 3` threshold.
    pub bracket: [f64; 2],
}

impl Default for ClassificationSettings {
    fn default() -> Self {
        ClassificationSettings {
            dims: vec![3, 4, 6],
            gamma_max: "3".into(),
            denominator: 100,
            bracket: [1.49, 1.51],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSettings {
    pub tolerance: f64,
    pub extent: f64,
    pub points_1d: usize,
    pub points_2d: usize,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        BoundsSettings {
            tolerance: 1e-3,
            extent: 8.0,
            points_1d: 128,
            points_2d: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreeSettings {
    pub variance_tolerance: f64,
    pub kernel_tolerance: f64,
    pub nodes: usize,
    pub kernel_times: Vec<f64>,
}

impl Default for FreeSettings {
    fn default() -> Self {
        FreeSettings {
            variance_tolerance: 1e-6,
            kernel_tolerance: 1e-6,
            nodes: 16,
            kernel_times: vec![1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecurrenceSettings {
    pub dense_tolerance: f64,
    pub split_tolerance: f64,
    pub split_dt: f64,
}

impl Default for RecurrenceSettings {
    fn default() -> Self {
        RecurrenceSettings {
            dense_tolerance: 1e-6,
            split_tolerance: 1e-4,
            split_dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSettings {
    pub oracle_tolerance: f64,
    /// Oracle steps per Picard node interval.
    pub oracle_refinement: usize,
    pub max_rho: f64,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings {
            oracle_tolerance: 1e-4,
            oracle_refinement: 4,
            max_rho: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySettings {
    pub options: IdentityOptions,
    pub tolerance: f64,
    pub refinement: Vec<usize>,
    /// Smallest order accepted on the steepest refinement step.
    pub min_order: f64,
}

impl Default for IdentitySettings {
    fn default() -> Self {
        IdentitySettings {
            options: IdentityOptions::default(),
            tolerance: 1e-5,
            refinement: vec![8, 16, 32, 64, 128],
            min_order: 3.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteSettings {
    pub unitarity: UnitaritySettings,
    pub ck: CkSettings,
    pub gauge: GaugeSettings,
    pub sigma2: Sigma2Settings,
    pub dispersive: DispersiveSettings,
    pub strichartz: StrichartzSettings,
    pub classification: ClassificationSettings,
    pub bounds: BoundsSettings,
    pub free: FreeSettings,
    pub recurrence: RecurrenceSettings,
    pub picard: PicardSettings,
    pub identity: IdentitySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub fields: FieldsConfig,
    #[serde(default)]
    pub potentials: Vec<PotentialConfig>,
    /// Damping `kappa` injected as `-i kappa`; nonzero only in negative controls.
    #[serde(default)]
    pub non_hermitian: f64,
    pub interval: [f64; 2],
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub picard: PicardOptions,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub settings: SuiteSettings,
    /// Trajectory nodes written by `simulate`.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_snapshots() -> usize {
    8
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ScenarioConfig::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that does not need the grid to be built.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system.build()?;
        positive("grid.extent", self.grid.extent)?;
        if self.grid.points < 2 {
            return Err(Error::Config("grid.points must be at least 2".into()));
        }
        if !self.interval.iter().all(|t| t.is_finite()) {
            return Err(Error::Config("interval must be finite".into()));
        }
        self.fields.build(sys.dim())?;
        for p in &self.potentials {
            p.build(sys.dim())?.cluster.validate_for(sys.n_particles())?;
        }
        if !(self.non_hermitian >= 0.0) {
            return Err(Error::Config("non_hermitian must be >= 0".into()));
        }
        self.backend.validate()?;
        self.picard.validate()?;
        for s in &self.suites {
            if !crate::verify::SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!("unknown suite '{s}'")));
            }
        }
        let st = &self.settings;
        for (name, v) in [
            ("unitarity.tolerance", st.unitarity.tolerance),
            ("ck.tolerance", st.ck.tolerance),
            ("gauge.tolerance", st.gauge.tolerance),
            ("sigma2.growth_limit", st.sigma2.growth_limit),
            ("dispersive.tolerance", st.dispersive.tolerance),
            ("strichartz.unitarity_tolerance", st.strichartz.unitarity_tolerance),
            ("strichartz.stability", st.strichartz.stability),
            ("strichartz.interacting_factor", st.strichartz.interacting_factor),
            ("bounds.tolerance", st.bounds.tolerance),
            ("free.variance_tolerance", st.free.variance_tolerance),
            ("free.kernel_tolerance", st.free.kernel_tolerance),
            ("recurrence.dense_tolerance", st.recurrence.dense_tolerance),
            ("recurrence.split_tolerance", st.recurrence.split_tolerance),
            ("recurrence.split_dt", st.recurrence.split_dt),
            ("picard.oracle_tolerance", st.picard.oracle_tolerance),
            ("picard.max_rho", st.picard.max_rho),
            ("identity.tolerance", st.identity.tolerance),
        ] {
            positive(name, v)?;
        }
        if st.sigma2.steps.len() < 2 || st.sigma2.steps.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("sigma2.steps needs at least two positive steps".into()));
        }
        if st.gauge.sigma_points.len() < 2 {
            return Err(Error::Config("gauge.sigma_points needs at least two levels".into()));
        }
        st.gauge.backend.validate()?;
        Ok(())
    }

    pub fn system(&self) -> Result<ParticleSystem> {
        self.system.build()
    }

    pub fn grid(&self) -> Result<Arc<TensorGrid>> {
        Ok(Arc::new(TensorGrid::uniform(
            self.system.particles,
            self.system.dim,
            self.grid.extent,
            self.grid.points,
        )?))
    }

    pub fn fields(&self) -> Result<FieldSpec> {
        self.fields.build(self.system.dim)
    }

    pub fn potentials(&self) -> Result<Vec<PotentialTerm>> {
        self.potentials.iter().map(|p| p.build(self.system.dim)).collect()
    }

    pub fn model(&self) -> Result<Model> {
        self.model_on(self.grid()?)
    }

    pub fn model_on(&self, grid: Arc<TensorGrid>) -> Result<Model> {
        let mut m = Model::new(self.system()?, self.fields()?, self.potentials()?, grid)?;
        m.non_hermitian = self.non_hermitian;
        Ok(m)
    }

    pub fn initial_state(&self, grid: &Arc<TensorGrid>) -> Result<StateVector> {
        let n = grid.n_axes();
        match &self.initial {
            InitialConfig::Gaussian { center, width, momentum } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; n]);
                let momentum = momentum.clone().unwrap_or_else(|| vec![0.0; n]);
                Ok(StateVector::gaussian(grid.clone(), &center, *width, &momentum)?.normalized())
            }
            InitialConfig::Random { field } => Ok(random_field(grid, self.seed, 0, field)),
        }
    }

    pub fn solver_kind(&self) -> SolverKind {
        match self.solver {
            SolverKind::Auto if self.potentials.is_empty() => SolverKind::Evolver,
            SolverKind::Auto => SolverKind::Picard,
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BODY: &str = r#"{
        "name": "two_body",
        "seed": 3,
        "system": {"particles": 2, "dim": 1},
        "grid": {"extent": 6, "points": 16},
        "fields": {"scalar": [{"profile": "radial_power", "s": 2, "coef": {"const": 0.5}}]},
        "potentials": [{"profile": "power", "cluster": [1, 2], "gamma": "1", "epsilon": 0.25, "strength": 1}],
        "interval": [0, 1],
        "suites": ["unitarity", "ck"]
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ScenarioConfig::from_json(TWO_BODY).unwrap();
        assert_eq!(cfg.solver_kind(), SolverKind::Picard);
        let m = cfg.model().unwrap();
        assert_eq!(m.grid.len(), 256);
        assert_eq!(m.potentials.len(), 1);
        assert_eq!(m.fields.phi(0.0, &[1.0]), 1.0);
        let f = cfg.initial_state(&m.grid).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        let again = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = TWO_BODY.replace("\"seed\": 3", "\"sead\": 3");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = TWO_BODY.replace("\"epsilon\": 0.25", "\"epsilon\": 0.25, \"eps\": 1");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = TWO_BODY.replace("\"ck\"", "\"nope\"");
        assert!(ScenarioConfig::from_json(&bad).unwrap_err().to_string().contains("nope"));
        let bad = TWO_BODY.replace(
            "\"interval\": [0, 1],",
            "\"interval\": [0, 1], \"settings\": {\"ck\": {\"tolerance\": 0}},",
        );
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = TWO_BODY.replace("[1, 2]", "[1, 3]");
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }

    #[test]
    fn rational_values() {
        assert_eq!(RationalValue::from("3/2").to_rational().unwrap(), Rational64::new(3, 2));
        assert_eq!(RationalValue::from(1.5).to_rational().unwrap(), Rational64::new(3, 2));
        assert_eq!(RationalValue::from("inf").to_exponent().unwrap(), Exponent::Infinite);
        assert_eq!(RationalValue::from("8/5").to_f64().unwrap(), 1.6);
        assert!(RationalValue::from("x").to_rational().is_err());
    }
}
