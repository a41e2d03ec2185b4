//! Scenario-level verification suites.
//!
//! A suite turns one family of claims about the propagator into named checks
//! with a measured value and an explicit threshold.

mod analysis;
mod dynamics;

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{ScenarioConfig, SolverKind};
use crate::duhamel::FullPropagator;
use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::io::fmt_f64;
use crate::norms::XNormTerm;
use crate::propagator::{Evolver, Propagate, TensorPropagator};

pub use analysis::{bounds_suite, classification_suite, dispersive_suite, exponents_suite, strichartz_suite};
pub use dynamics::{ck_suite, free_suite, gauge_suite, identity_suite, picard_suite, recurrence_suite, sigma2_suite, unitarity_suite};

pub const SUITES: &[&str] = &[
    "exponents",
    "classification",
    "free",
    "recurrence",
    "bounds",
    "dispersive",
    "strichartz",
    "picard",
    "unitarity",
    "ck",
    "gauge",
    "sigma2",
    "identity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }

    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => value <= threshold,
            Relation::Below => value < threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Above => value > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// NaN never passes.
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation,
            threshold,
            pass: relation.holds(value, threshold),
            note: None,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Relation::AtMost, threshold)
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Relation::Below, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Relation::AtLeast, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Relation::Above, threshold)
    }

    /// Boolean condition recorded as `1 >= 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub particles: usize,
    pub dim: usize,
    pub points: usize,
    pub extent: f64,
    pub interval: [f64; 2],
    pub backend: String,
    pub dt: f64,
    pub solver: String,
    pub node_spacing: f64,
    pub seed: u64,
    pub tolerance_scale: f64,
}

/// A named output file produced by a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub name: String,
    #[serde(skip)]
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub scenario: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub fingerprint: Fingerprint,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<Artifact>,
}

impl SuiteReport {
    pub fn new(suite: &str, scenario: &Scenario) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            scenario: scenario.config.name.clone(),
            pass: true,
            checks: Vec::new(),
            notes: Vec::new(),
            error: None,
            fingerprint: scenario.fingerprint(),
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn artifact(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            contents,
        });
    }

    fn failed(mut self, err: &Error) -> Self {
        self.pass = false;
        self.error = Some(err.to_string());
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let fp = &self.fingerprint;
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "suite {}  scenario {}  {verdict}", self.suite, self.scenario);
        let _ = writeln!(
            out,
            "  N={} d={} M={} L={}  interval [{}, {}]  backend {} dt={}  solver {}  seed {}  tolerance x{}",
            fp.particles,
            fp.dim,
            fp.points,
            fp.extent,
            fp.interval[0],
            fp.interval[1],
            fp.backend,
            fp.dt,
            fp.solver,
            fp.seed,
            fp.tolerance_scale
        );
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(
            out,
            "  {:<width$}  {:>24}  {:<2}  {:>24}  result",
            "check", "value", "", "threshold"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  {:<width$}  {:>24}  {:<2}  {:>24}  {}",
                c.name,
                fmt_f64(c.value),
                c.relation.symbol(),
                fmt_f64(c.threshold),
                if c.pass { "pass" } else { "FAIL" }
            );
            if let Some(n) = &c.note {
                let _ = writeln!(out, "  {:<width$}    {n}", "");
            }
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "  error: {e}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}

/// A validated configuration plus the global tolerance scale.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub tolerance_scale: f64,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, tolerance_scale: f64) -> Result<Self> {
        if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
            return Err(Error::Config(format!("tolerance scale must be positive, got {tolerance_scale}")));
        }
        config.validate()?;
        Ok(Scenario { config, tolerance_scale })
    }

    /// Scales an absolute tolerance.
    pub fn tol(&self, t: f64) -> f64 {
        t * self.tolerance_scale
    }

    pub fn model(&self) -> Result<Model> {
        self.config.model()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.config.interval[0], self.config.interval[1])
    }

    /// `X(I)` terms, one per potential cluster, with `p_D = max(2, n_D)`.
    pub fn xnorm_terms(&self, model: &Model) -> Result<Vec<XNormTerm>> {
        model
            .potentials
            .iter()
            .map(|p| {
                let n = p.cluster.relative_dimension().max(2) as i64;
                XNormTerm::from_potential_exponent(&p.cluster, crate::exponent::Exponent::int(n))
            })
            .collect()
    }

    pub fn picard(&self, model: &Model) -> Result<FullPropagator> {
        let terms = self.xnorm_terms(model)?;
        FullPropagator::with_tensor_free_part(model.clone(), self.config.backend, &terms, self.config.picard)
    }

    pub fn propagator(&self, model: &Model) -> Result<Box<dyn Propagate>> {
        Ok(match self.config.solver_kind() {
            SolverKind::Picard => Box::new(self.picard(model)?),
            SolverKind::Tensor => Box::new(TensorPropagator::new(model, self.config.backend)?),
            SolverKind::Evolver | SolverKind::Auto => Box::new(Evolver::new(model.clone(), self.config.backend)?),
        })
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let c = &self.config;
        Fingerprint {
            particles: c.system.particles,
            dim: c.system.dim,
            points: c.grid.points,
            extent: c.grid.extent,
            interval: c.interval,
            backend: c.backend.kind.name().to_string(),
            dt: c.backend.dt,
            solver: format!("{:?}", c.solver_kind()).to_lowercase(),
            node_spacing: c.picard.node_spacing,
            seed: c.seed,
            tolerance_scale: self.tolerance_scale,
        }
    }
}

fn dispatch(name: &str, scn: &Scenario) -> Result<SuiteReport> {
    match name {
        "exponents" => exponents_suite(scn),
        "classification" => classification_suite(scn),
        "free" => free_suite(scn),
        "recurrence" => recurrence_suite(scn),
        "bounds" => bounds_suite(scn),
        "dispersive" => dispersive_suite(scn),
        "strichartz" => strichartz_suite(scn),
        "picard" => picard_suite(scn),
        "unitarity" => unitarity_suite(scn),
        "ck" => ck_suite(scn),
        "gauge" => gauge_suite(scn),
        "sigma2" => sigma2_suite(scn),
        "identity" => identity_suite(scn),
        other => Err(Error::Config(format!("unknown suite '{other}'"))),
    }
}

/// Runs one suite. Configuration problems are returned as errors; numerical
/// failures become a failed report.
pub fn run_suite(name: &str, scn: &Scenario) -> Result<SuiteReport> {
    if !SUITES.contains(&name) {
        return Err(Error::Config(format!("unknown suite '{name}' (known: {})", SUITES.join(", "))));
    }
    match dispatch(name, scn) {
        Ok(r) => Ok(r),
        Err(e @ (Error::Config(_) | Error::Io(_))) => Err(e),
        Err(e) => Ok(SuiteReport::new(name, scn).failed(&e)),
    }
}

/// Runs `selection` (or the scenario's own list when empty) in order.
pub fn run_scenario(scn: &Scenario, selection: &[String]) -> Result<Vec<SuiteReport>> {
    let names: &[String] = if selection.is_empty() { &scn.config.suites } else { selection };
    for n in names {
        if !SUITES.contains(&n.as_str()) {
            return Err(Error::Config(format!("unknown suite '{n}' (known: {})", SUITES.join(", "))));
        }
    }
    names.iter().map(|n| run_suite(n, scn)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Scenario {
        let cfg = ScenarioConfig::from_json(
            r#"{"name": "tiny", "system": {"particles": 1, "dim": 1}, "grid": {"extent": 8, "points": 64},
                "interval": [0, 1], "suites": ["unitarity"],
                "settings": {"unitarity": {"tolerance": 1e-8}}}"#,
        )
        .unwrap();
        Scenario::new(cfg, 1.0).unwrap()
    }

    #[test]
    fn checks_and_nan() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::below("a", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
        assert!(!Check::holds("b", false).pass);
    }

    #[test]
    fn report_pass_is_conjunction() {
        let scn = tiny();
        let mut r = SuiteReport::new("x", &scn);
        r.push(Check::at_most("ok", 0.0, 1.0));
        assert!(r.pass);
        r.push(Check::at_most("bad", 2.0, 1.0));
        assert!(!r.pass);
        let text = r.render_text();
        assert!(text.contains("FAIL") && text.contains("bad"));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"<=\""));
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        let scn = tiny();
        assert!(matches!(run_scenario(&scn, &["nope".into()]), Err(Error::Config(_))));
        assert!(matches!(run_suite("nope", &scn), Err(Error::Config(_))));
    }

    #[test]
    fn free_unitarity_passes_at_1e8() {
        let r = run_scenario(&tiny(), &[]).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].pass, "{}", r[0].render_text());
    }

    #[test]
    fn tolerance_scale_must_be_positive() {
        assert!(Scenario::new(tiny().config, 0.0).is_err());
    }
}
