use std::sync::Arc;

use num_rational::Rational64;

use super::{Check, Scenario, SuiteReport};
use crate::error::{Error, Result};
use crate::exponent::{
    a_of_p, classify_power_potential, derivative_exponents, feasibility_threshold, is_admissible, strichartz_pair, Assumption,
    ClassifyOptions, ClusterSpec, Exponent,
};
use crate::field::FieldSpec;
use crate::geometry::ParticleSystem;
use crate::grid::TensorGrid;
use crate::hamiltonian::{h0_lower_bound_check, harmonic_oscillator, hos_inverse_properties, min_eigenvalue, Model};
use crate::io::{fmt_f64, plot_data, CsvTable};
use crate::norms::{strichartz_ratio, StrichartzKind, StrichartzOptions};
use crate::propagator::{dispersive_decay_fit, BackendConfig, BackendKind, Evolver, Propagate, TensorPropagator};

fn r(n: i64, d: i64) -> Exponent {
    Exponent::ratio(n, d)
}

/// Worked exponent identities and admissibility of generated pairs.
pub fn exponents_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("exponents", scn);
    rep.push(Check::holds("a(3, 3) = 2", a_of_p(3, Exponent::int(3))? == Exponent::int(2)));
    rep.push(Check::holds(
        "pair(3, 3) = (3, 4)",
        strichartz_pair(3, Exponent::int(3))? == (Exponent::int(3), Exponent::int(4)),
    ));
    rep.push(Check::holds("a(3, inf) = 1", a_of_p(3, Exponent::Infinite)? == Exponent::int(1)));
    rep.push(Check::holds(
        "(3, 6, 2) admissible",
        is_admissible(3, Exponent::int(6), Exponent::int(2)),
    ));
    let de = derivative_exponents(3, r(3, 2))?;
    rep.push(Check::holds(
        "(b, q)(3, 3/2) = (2, 6/5)",
        de.b == Exponent::int(2) && de.q == r(6, 5),
    ));
    let mut tried = 0usize;
    let mut bad = 0usize;
    for n in 1..=8usize {
        let lo = (2 * n as i64).max(2);
        for num in lo..=16 * n as i64 {
            let p = r(num, 4);
            if p < Exponent::int(1) || p < r(n as i64, 2) {
                continue;
            }
            let (l, theta) = strichartz_pair(n, p)?;
            tried += 1;
            bad += usize::from(!is_admissible(n, l, theta));
        }
        let (l, theta) = strichartz_pair(n, Exponent::Infinite)?;
        tried += 1;
        bad += usize::from(!is_admissible(n, l, theta));
    }
    rep.push(Check::at_most("inadmissible generated pairs", bad as f64, 0.0).with_note(format!("{tried} pairs checked")));
    Ok(rep)
}

/// Feasibility sweep for `|x|^{-gamma}` and the scenario's own potentials.
pub fn classification_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("classification", scn);
    let st = &scn.config.settings.classification;
    let opts = ClassifyOptions {
        denominator: st.denominator,
        ..Default::default()
    };
    let gamma_max = st.gamma_max.to_rational()?;
    let (lo, hi) = feasibility_threshold(3, Assumption::V2, gamma_max, opts)?
        .map(|(a, b)| (*a.numer() as f64 / *a.denom() as f64, *b.numer() as f64 / *b.denom() as f64))
        .unwrap_or((f64::NAN, f64::NAN));
    rep.push(Check::at_least("n=3 last feasible gamma", lo, st.bracket[0]));
    rep.push(Check::at_most("n=3 first infeasible gamma", hi, st.bracket[1]));
    let mut table = CsvTable::new(&["n", "gamma", "feasible"]);
    for &n in &st.dims {
        let mut prev = true;
        let mut monotone = true;
        let mut k = 0i64;
        let step = Rational64::new(1, 10);
        let mut gamma = Rational64::from_integer(0);
        while gamma <= gamma_max {
            let feasible = classify_power_potential(n, gamma, Assumption::V2, opts)?.feasible;
            if k == 0 {
                rep.push(Check::holds(format!("n={n} gamma=0 feasible"), feasible));
            }
            monotone &= prev || !feasible;
            prev = feasible;
            table.push(vec![n.to_string(), gamma.to_string(), feasible.to_string()]);
            gamma += step;
            k += 1;
        }
        rep.push(Check::holds(format!("n={n} feasibility monotone in gamma"), monotone));
    }
    for p in &scn.config.potentials {
        let cluster = ClusterSpec::new(p.cluster(), scn.config.system.dim)?;
        let n = cluster.relative_dimension();
        let gamma = p.gamma()?;
        let assumption = if n >= 3 { Assumption::V2 } else { Assumption::V1 };
        let report = classify_power_potential(n, gamma, assumption, opts)?;
        let name = format!(
            "potential on {:?} (n={n}, gamma={gamma}) feasible under {assumption:?}",
            p.cluster()
        );
        let witness = report.witness.map(|w| w.to_string()).unwrap_or_else(|| "none".into());
        rep.push(Check::holds(name, report.feasible).with_note(format!("witness p = {witness}")));
    }
    rep.artifact("classification.csv", table.render());
    Ok(rep)
}

/// Oscillator ground energies, the `H_0` lower bound and the inverse kernel.
pub fn bounds_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("bounds", scn);
    let st = &scn.config.settings.bounds;
    let tol = scn.tol(st.tolerance);
    let g1 = Arc::new(TensorGrid::uniform(1, 1, st.extent, st.points_1d)?);
    let g2 = Arc::new(TensorGrid::uniform(2, 1, st.extent, st.points_2d)?);
    for (n, g) in [(1usize, &g1), (2, &g2)] {
        let lam = min_eigenvalue(&harmonic_oscillator(g)?, 4096)?;
        rep.push(Check::at_most(
            format!("H_os ground energy n={n} vs n/2"),
            (lam - n as f64 / 2.0).abs(),
            tol,
        ));
    }
    let lb = h0_lower_bound_check(&ParticleSystem::unit(2, 1)?, &FieldSpec::harmonic(1, 0.5), &g2, 0.0)?;
    rep.push(Check::holds("phi >= <x>^2 / 2 on the grid", lb.hypothesis_met));
    rep.push(
        Check::at_least("H_0 lambda_min, N=2 d=1", lb.lambda_min, lb.bound - lb.tol_disc).with_note(format!(
            "bound {} minus discretization tolerance {}",
            lb.bound,
            fmt_f64(lb.tol_disc)
        )),
    );
    let inv = hos_inverse_properties(&g1)?;
    rep.push(Check::above("H_os^-1 kernel minimum", inv.kernel_min, 0.0).with_note(format!("window |x|, |y| <= {}", inv.window)));
    rep.note(format!(
        "kernel minimum over the full periodic grid: {}",
        fmt_f64(inv.kernel_min_full_grid)
    ));
    Ok(rep)
}

fn spectral_free(model: &Model, span: f64) -> Result<Evolver> {
    Evolver::new(
        model.free_part(),
        BackendConfig::with_kind(BackendKind::SplitStep, span.abs().max(1.0)),
    )
}

/// Log-log decay slope of the cluster dispersive ratio.
pub fn dispersive_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("dispersive", scn);
    let st = &scn.config.settings.dispersive;
    let model = scn.model()?;
    if !model.potentials.is_empty() || !model.fields.scalar.is_empty() || model.fields.has_vector_potential() {
        return Err(Error::Config("dispersive suite needs a free scenario".into()));
    }
    let n = scn.config.system.particles;
    let clusters = st.clusters.clone().unwrap_or_else(|| {
        let mut c = vec![vec![1]];
        if n >= 2 {
            c.push((1..=n).collect());
        }
        c
    });
    let f = scn.config.initial_state(&model.grid)?;
    let s = scn.interval().0;
    let ev = spectral_free(&model, st.window.end)?;
    for members in clusters {
        let cluster = ClusterSpec::new(&members, scn.config.system.dim)?;
        let fit = dispersive_decay_fit(&ev, &cluster, &f, s, &st.window)?;
        rep.push(
            Check::at_most(
                format!("slope {} vs -n_D/2", fit.cluster),
                fit.relative_error,
                scn.tol(st.tolerance),
            )
            .with_note(format!(
                "slope {} expected {} boundary mass {}",
                fmt_f64(fit.slope),
                fit.expected,
                fmt_f64(fit.max_boundary_mass)
            )),
        );
        let name = format!(
            "dispersive_{}.dat",
            members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("-")
        );
        rep.artifact(
            name,
            plot_data(&[format!("t ratio, cluster {}", fit.cluster)], &fit.times, &fit.ratios),
        );
    }
    Ok(rep)
}

/// Unitarity of the `(2, inf)` ratio, refinement stability, and the
/// interacting-to-free comparison when potentials are present.
pub fn strichartz_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("strichartz", scn);
    let st = &scn.config.settings.strichartz;
    let model = scn.model()?;
    let (s, t) = scn.interval();
    let dim = scn.config.system.dim;
    let base = |cluster: &ClusterSpec, lambda: Exponent, sigma: Exponent, samples: usize| StrichartzOptions {
        kind: StrichartzKind::Homogeneous,
        lambda,
        sigma,
        cluster: cluster.clone(),
        start: s,
        end: t,
        intervals: st.intervals,
        rule: st.rule,
        samples,
        seed: scn.config.seed,
        field: st.field,
    };
    let free: Box<dyn Propagate> = if model.potentials.is_empty() {
        scn.propagator(&model)?
    } else {
        Box::new(TensorPropagator::new(&model.free_part(), scn.config.backend)?)
    };
    let mut table = CsvTable::new(&["label", "lambda", "sigma", "points", "samples", "sup"]);
    let main = ClusterSpec::new(&st.cluster, dim)?;
    let unit = strichartz_ratio(&*free, &model.grid, &base(&main, Exponent::int(2), Exponent::Infinite, st.samples))?;
    rep.push(Check::at_most("(2, inf) ratio - 1", (unit.sup - 1.0).abs(), st.unitarity_tolerance));
    if model.potentials.is_empty() {
        for [l, sg] in &st.pairs {
            let (lambda, sigma) = (l.to_exponent()?, sg.to_exponent()?);
            let coarse = strichartz_ratio(&*free, &model.grid, &base(&main, lambda, sigma, st.samples))?;
            let fine_grid = Arc::new(model.grid.refined());
            let fine_model = scn.config.model_on(fine_grid.clone())?;
            let fine_prop = scn.propagator(&fine_model)?;
            let fine = strichartz_ratio(&*fine_prop, &fine_grid, &base(&main, lambda, sigma, 2 * st.samples))?;
            let change = (fine.sup - coarse.sup).abs() / coarse.sup;
            rep.push(
                Check::at_most(format!("({lambda}, {sigma}) sup change under doubling"), change, st.stability).with_note(format!(
                    "sup {} -> {}",
                    fmt_f64(coarse.sup),
                    fmt_f64(fine.sup)
                )),
            );
            for (label, rr, g) in [("coarse", &coarse, &model.grid), ("fine", &fine, &fine_grid)] {
                table.push(vec![
                    label.into(),
                    lambda.to_string(),
                    sigma.to_string(),
                    g.len().to_string(),
                    rr.ratios.len().to_string(),
                    fmt_f64(rr.sup),
                ]);
            }
        }
    } else {
        let full = scn.picard(&model)?;
        for term in scn.xnorm_terms(&model)? {
            let opts = base(&term.cluster, term.l, term.theta, st.samples);
            let f0 = strichartz_ratio(&*free, &model.grid, &opts)?;
            let fi = strichartz_ratio(&full, &model.grid, &opts)?;
            rep.push(
                Check::at_most(
                    format!("interacting / free sup, ({}, {}) on {}", term.l, term.theta, f0.cluster),
                    fi.sup / f0.sup,
                    st.interacting_factor,
                )
                .with_note(format!("free {} interacting {}", fmt_f64(f0.sup), fmt_f64(fi.sup))),
            );
            for (label, rr) in [("free", &f0), ("interacting", &fi)] {
                table.push(vec![
                    label.into(),
                    term.l.to_string(),
                    term.theta.to_string(),
                    model.grid.len().to_string(),
                    rr.ratios.len().to_string(),
                    fmt_f64(rr.sup),
                ]);
            }
        }
    }
    rep.note("empirical sups over random band-limited fields; they estimate, not reproduce, the constants of the estimates");
    rep.artifact("strichartz.csv", table.render());
    Ok(rep)
}
