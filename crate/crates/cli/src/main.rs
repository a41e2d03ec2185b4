//! `strichartz-lab` command-line front end.
//!
//! Exit status: 0 when everything passes, 1 on a failed check or a solver
//! failure, 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use strichartz_lab::config::{ScenarioConfig, SolverKind};
use strichartz_lab::exponent::{
    a_of_p, classify_power_potential, derivative_exponents, is_admissible, parse_rational, strichartz_pair, Assumption, ClassifyOptions,
    Exponent,
};
use strichartz_lab::io::{atomic_write, atomic_write_str, fmt_f64, plot_data, CsvTable};
use strichartz_lab::propagator::trajectory;
use strichartz_lab::state::sigma_k_norm;
use strichartz_lab::verify::{run_scenario, Scenario, SuiteReport};
use strichartz_lab::{par, Error};

#[derive(Parser, Debug)]
#[command(name = "strichartz-lab", version, about = "Numerical lab for N-particle Schrödinger propagators")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Scenario file, or a directory of scenario files for `verify`.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suite to run; repeatable. Defaults to the scenario's list.
    #[arg(long = "suite", global = true, value_name = "NAME")]
    suites: Vec<String>,
    /// Multiplies every absolute tolerance.
    #[arg(long, global = true, value_name = "X", default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact exponent calculus: a(p), (l, theta), (b, q, p~) and admissibility.
    Exponents {
        #[arg(long)]
        n: usize,
        /// Potential exponent, e.g. `3`, `3/2` or `inf`.
        #[arg(long)]
        p: Option<Exponent>,
        #[arg(long)]
        l: Option<Exponent>,
        #[arg(long)]
        sigma: Option<Exponent>,
    },
    /// Feasibility of |x|^-gamma under the potential hypotheses.
    Classify {
        #[arg(long)]
        n: usize,
        /// Rational or decimal power.
        #[arg(long)]
        gamma: String,
        #[arg(long, default_value = "v2")]
        assumption: Assumption,
        #[arg(long, default_value_t = 100)]
        denominator: i64,
    },
    /// Evolves the scenario's initial state and writes trajectory artifacts.
    Simulate,
    /// Runs verification suites and writes reports.
    Verify,
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

type CmdResult = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    par::configure_threads_from_env();
    let outcome = match &cli.command {
        Command::Exponents { n, p, l, sigma } => cmd_exponents(*n, *p, *l, *sigma),
        Command::Classify {
            n,
            gamma,
            assumption,
            denominator,
        } => cmd_classify(*n, gamma, *assumption, *denominator),
        Command::Simulate => cmd_simulate(&cli.global),
        Command::Verify => cmd_verify(&cli.global),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn cmd_exponents(n: usize, p: Option<Exponent>, l: Option<Exponent>, sigma: Option<Exponent>) -> CmdResult {
    if n == 0 {
        return Err(Failure::Usage("--n must be positive".into()));
    }
    if p.is_none() && (l.is_none() || sigma.is_none()) {
        return Err(Failure::Usage("give --p, or both --l and --sigma".into()));
    }
    if let Some(p) = p {
        println!("n = {n}, p = {p}");
        match a_of_p(n, p) {
            Ok(a) => println!("  a(p)           = {a}"),
            Err(e) => println!("  a(p)           : {e}"),
        }
        match strichartz_pair(n, p) {
            Ok((l, t)) => println!("  (l, theta)     = ({l}, {t})  admissible: {}", is_admissible(n, l, t)),
            Err(e) => println!("  (l, theta)     : {e}"),
        }
        match derivative_exponents(n, p) {
            Ok(d) => println!("  (b, q, p~)     = ({}, {}, {})", d.b, d.q, d.p_tilde),
            Err(e) => println!("  (b, q, p~)     : {e}"),
        }
    }
    if let (Some(l), Some(s)) = (l, sigma) {
        println!("n = {n}, (lambda, sigma) = ({l}, {s})  admissible: {}", is_admissible(n, l, s));
    }
    Ok(true)
}

fn cmd_classify(n: usize, gamma: &str, assumption: Assumption, denominator: i64) -> CmdResult {
    let g = parse_rational(gamma).map_err(|e| Failure::Usage(e.to_string()))?;
    let opts = ClassifyOptions {
        denominator,
        ..Default::default()
    };
    let r = classify_power_potential(n, g, assumption, opts).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("n = {n}, gamma = {}, assumption {assumption:?}", r.gamma);
    println!("  feasible       : {}", r.feasible);
    if let Some(w) = r.witness {
        println!("  witness p      : {w}");
    }
    if let Some((a, b)) = r.feasible_interval {
        println!("  feasible grid  : [{a}, {b}] step {} ({} points)", r.grid_step, r.feasible_count);
    }
    if assumption == Assumption::V1 {
        println!("  critical branch C(I, L^(n/2)) : {}", r.critical_branch);
    }
    for t in &r.tags {
        let cluster = t.cluster.as_ref().map(|c| format!(" on {c:?}")).unwrap_or_default();
        let what = if t.time_derivative { "dV/dt" } else { "V" };
        println!("  {what:<5} in {:?}(a = {}, p = {}){cluster}", t.kind, t.a, t.p);
    }
    Ok(true)
}

fn load(global: &Global, path: &Path) -> std::result::Result<Scenario, Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(Scenario::new(cfg, global.tolerance_scale)?)
}

fn require_config(global: &Global) -> std::result::Result<&Path, Failure> {
    global
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config PATH is required".into()))
}

fn out_dir(global: &Global, scn: &Scenario) -> PathBuf {
    global
        .out
        .clone()
        .or_else(|| scn.config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
        .join(&scn.config.name)
}

/// Seconds since the epoch; `SOURCE_DATE_EPOCH` pins it.
fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_json(path: &Path, value: &serde_json::Value) -> std::result::Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("json value");
    text.push('\n');
    Ok(atomic_write_str(path, &text)?)
}

fn cmd_simulate(global: &Global) -> CmdResult {
    let scn = load(global, require_config(global)?)?;
    let cfg = &scn.config;
    let model = scn.model()?;
    let prop = scn.propagator(&model)?;
    let f = cfg.initial_state(&model.grid)?;
    let (s, t) = scn.interval();
    let count = if s == t { 0 } else { cfg.snapshots.max(1) };
    let times: Vec<f64> = (0..=count)
        .map(|k| if count == 0 { s } else { s + (t - s) * k as f64 / count as f64 })
        .collect();
    let states = trajectory(&*prop, &f, &times)?;
    let dir = out_dir(global, &scn);

    let mut norms = CsvTable::new(&["t", "l2", "sigma2", "variance_axis0"]);
    let mut l2 = Vec::new();
    let mut var = Vec::new();
    for (k, (r, u)) in times.iter().zip(&states).enumerate() {
        atomic_write(&dir.join(format!("state_{k:04}.bin")), &u.to_bytes())?;
        let n = u.norm();
        let v = u.position_variance(0);
        norms.push_values(&[*r, n, sigma_k_norm(u, 2)?, v]);
        l2.push(n);
        var.push(v);
    }
    atomic_write_str(&dir.join("norms.csv"), &norms.render())?;
    atomic_write_str(&dir.join("norm.dat"), &plot_data(&["t l2-norm".into()], &times, &l2))?;
    atomic_write_str(
        &dir.join("variance.dat"),
        &plot_data(&["t position variance, axis 0".into()], &times, &var),
    )?;

    let mut summary = json!({
        "command": "simulate",
        "scenario": cfg.name,
        "generated_at": timestamp(),
        "fingerprint": scn.fingerprint(),
        "propagator": prop.label(),
        "snapshots": times.len(),
        "times": times,
        "final_norm": l2.last().copied().unwrap_or(f64::NAN),
    });
    if cfg.solver_kind() == SolverKind::Picard && s != t {
        let table = scn.picard(&model)?.solve(&f, t, s)?;
        atomic_write_str(&dir.join("convergence.csv"), &table.convergence_csv().render())?;
        summary["picard"] = json!({
            "pieces": table.pieces.len(),
            "iterations": table.iterations(),
            "max_rho": table.max_rho(),
        });
    }
    write_json(&dir.join("summary.json"), &summary)?;
    println!("{}: {} snapshots written to {}", cfg.name, times.len(), dir.display());
    println!("  final l2 norm {}", fmt_f64(l2.last().copied().unwrap_or(f64::NAN)));
    Ok(true)
}

fn scenario_paths(path: &Path) -> std::result::Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Failure::Usage(format!("no scenario files in {}", path.display())));
    }
    Ok(out)
}

fn write_reports(dir: &Path, scn: &Scenario, reports: &[SuiteReport]) -> std::result::Result<(), Failure> {
    let mut text = String::new();
    for r in reports {
        text.push_str(&r.render_text());
        text.push('\n');
        for a in &r.artifacts {
            atomic_write_str(&dir.join(&r.suite).join(&a.name), &a.contents)?;
        }
    }
    atomic_write_str(&dir.join("report.txt"), &text)?;
    let value = json!({
        "command": "verify",
        "scenario": scn.config.name,
        "generated_at": timestamp(),
        "pass": reports.iter().all(|r| r.pass),
        "suites": reports,
    });
    write_json(&dir.join("report.json"), &value)
}

fn cmd_verify(global: &Global) -> CmdResult {
    let paths = scenario_paths(require_config(global)?)?;
    // load everything first so configuration errors stop the run early
    let scenarios = paths.iter().map(|p| load(global, p)).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut all_pass = true;
    for scn in &scenarios {
        let reports = run_scenario(scn, &global.suites)?;
        for r in &reports {
            print!("{}", r.render_text());
        }
        write_reports(&out_dir(global, scn), scn, &reports)?;
        all_pass &= reports.iter().all(|r| r.pass);
    }
    println!("{}", if all_pass { "all suites passed" } else { "some suites FAILED" });
    Ok(all_pass)
}
