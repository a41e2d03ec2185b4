//! Acceptance run over the scenario catalog: one line per criterion.
//!
//! Each criterion runs the relevant suites at tolerance scale 1 and also
//! checks that the thresholds in effect are no looser than the stated ones,
//! so a scenario file cannot quietly relax a criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use strichartz_lab::config::ScenarioConfig;
use strichartz_lab::verify::{run_scenario, Relation, Scenario, SuiteReport};

fn catalog() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// A stated tolerance: the check named by `prefix` must use a threshold at
/// least this strict.
struct Bound {
    suite: &'static str,
    prefix: &'static str,
    stated: f64,
}

const fn bound(suite: &'static str, prefix: &'static str, stated: f64) -> Bound {
    Bound { suite, prefix, stated }
}

fn run(scenario: &str, suites: &[&str]) -> Result<Vec<SuiteReport>, String> {
    let cfg = ScenarioConfig::load(&catalog().join(format!("{scenario}.json"))).map_err(|e| e.to_string())?;
    let scn = Scenario::new(cfg, 1.0).map_err(|e| e.to_string())?;
    let names: Vec<String> = suites.iter().map(|s| s.to_string()).collect();
    run_scenario(&scn, &names).map_err(|e| e.to_string())
}

fn strict_enough(rel: Relation, threshold: f64, stated: f64) -> bool {
    match rel {
        Relation::AtMost | Relation::Below => threshold <= stated,
        Relation::AtLeast | Relation::Above => threshold >= stated,
    }
}

/// Runs the suites and returns a one-line summary on failure.
fn evaluate(runs: &[(&str, &[&str])], bounds: &[Bound]) -> Result<String, String> {
    let mut reports = Vec::new();
    for (scenario, suites) in runs {
        reports.extend(run(scenario, suites)?);
    }
    let mut checks = 0;
    for r in &reports {
        if let Some(e) = &r.error {
            return Err(format!("{}/{}: {e}", r.scenario, r.suite));
        }
        for c in &r.checks {
            checks += 1;
            if !c.pass {
                return Err(format!(
                    "{}/{} `{}` = {:e} vs {:e}",
                    r.scenario, r.suite, c.name, c.value, c.threshold
                ));
            }
        }
        if !r.pass {
            return Err(format!("{}/{} failed", r.scenario, r.suite));
        }
    }
    for b in bounds {
        let mut seen = false;
        for r in reports.iter().filter(|r| r.suite == b.suite) {
            for c in r.checks.iter().filter(|c| c.name.starts_with(b.prefix)) {
                seen = true;
                if !strict_enough(c.relation, c.threshold, b.stated) {
                    return Err(format!("`{}` uses threshold {:e}, looser than {:e}", c.name, c.threshold, b.stated));
                }
            }
        }
        if !seen {
            return Err(format!("no check `{}` in suite {}", b.prefix, b.suite));
        }
    }
    Ok(format!("{} suites, {checks} checks", reports.len()))
}

fn negative_controls() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_strichartz-lab");
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut codes = Vec::new();
    for name in ["control_non_hermitian", "control_over_singular"] {
        let status = Command::new(bin)
            .arg("verify")
            .arg("--config")
            .arg(catalog().join(format!("{name}.json")))
            .arg("--out")
            .arg(out.path())
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if status.code() != Some(1) {
            return Err(format!("{name} exited with {status}, expected 1"));
        }
        codes.push(format!("{name} -> 1"));
    }
    Ok(codes.join(", "))
}

fn main() {
    type Criterion = (&'static str, Box<dyn Fn() -> Result<String, String>>);
    let criteria: Vec<Criterion> = vec![
        (
            "exponent calculus exactness",
            Box::new(|| {
                evaluate(
                    &[("analysis", &["exponents"])],
                    &[bound("exponents", "inadmissible generated pairs", 0.0)],
                )
            }),
        ),
        (
            "gamma threshold in [1.49, 1.51]",
            Box::new(|| {
                evaluate(
                    &[("analysis", &["classification"])],
                    &[
                        bound("classification", "n=3 last feasible gamma", 1.49),
                        bound("classification", "n=3 first infeasible gamma", 1.51),
                    ],
                )
            }),
        ),
        (
            "free-particle oracle",
            Box::new(|| {
                evaluate(
                    &[("free_particle", &["free"])],
                    &[
                        bound("free", "variance relative error", 1e-6),
                        bound("free", "kernel vs spectral", 1e-6),
                    ],
                )
            }),
        ),
        (
            "harmonic recurrence",
            Box::new(|| {
                evaluate(
                    &[("harmonic", &["recurrence"])],
                    &[bound("recurrence", "dense", 1e-6), bound("recurrence", "split-step", 1e-4)],
                )
            }),
        ),
        (
            "operator lower bounds",
            Box::new(|| {
                evaluate(
                    &[("analysis", &["bounds"])],
                    &[
                        bound("bounds", "H_os ground energy", 1e-3),
                        bound("bounds", "H_os^-1 kernel minimum", 0.0),
                    ],
                )
            }),
        ),
        (
            "dispersive decay slopes",
            Box::new(|| {
                evaluate(
                    &[("dispersive_one", &["dispersive"]), ("dispersive_pair", &["dispersive"])],
                    &[bound("dispersive", "slope", 0.1)],
                )
            }),
        ),
        (
            "Strichartz boundedness",
            Box::new(|| {
                evaluate(
                    &[("free_particle", &["strichartz"]), ("two_body", &["strichartz"])],
                    &[
                        bound("strichartz", "(2, inf) ratio", 1e-10),
                        bound("strichartz", "(6, 6) sup change", 0.1),
                        bound("strichartz", "interacting / free", 3.0),
                    ],
                )
            }),
        ),
        (
            "Picard vs oracle (two-body)",
            Box::new(|| {
                evaluate(
                    &[("two_body", &["picard", "unitarity", "ck"])],
                    &[
                        bound("picard", "endpoint vs oracle", 1e-4),
                        bound("picard", "observed rho", 0.9),
                        bound("unitarity", "norm drift", 1e-6),
                        bound("ck", "ck (", 1e-6),
                    ],
                )
            }),
        ),
        (
            "gauge covariance",
            Box::new(|| {
                evaluate(
                    &[("harmonic", &["gauge"])],
                    &[
                        bound("gauge", "C=1 covariance", 1e-6),
                        bound("gauge", "sigma identity decreases", 1.0),
                    ],
                )
            }),
        ),
        (
            "Sigma(2) invariance",
            Box::new(|| {
                evaluate(
                    &[
                        ("free_particle", &["sigma2"]),
                        ("harmonic", &["sigma2"]),
                        ("driven_oscillator", &["sigma2"]),
                    ],
                    &[
                        bound("sigma2", "Sigma(2) growth", 10.0),
                        bound("sigma2", "strong residual order", 1.8),
                    ],
                )
            }),
        ),
        (
            "identity checks",
            Box::new(|| {
                evaluate(
                    &[("driven_oscillator", &["identity"])],
                    &[
                        bound("identity", "id1 residual K=64", 1e-5),
                        bound("identity", "id2 residual K=64", 1e-5),
                        bound("identity", "id1 quadrature order", 3.5),
                        bound("identity", "id2 quadrature order", 3.5),
                    ],
                )
            }),
        ),
        ("negative controls exit 1", Box::new(negative_controls)),
    ];

    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name:<32} {detail} ({secs:.1}s)", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name:<32} {why} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
