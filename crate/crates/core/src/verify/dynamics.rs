use std::sync::Arc;

use super::{Check, Scenario, SuiteReport};
use crate::duhamel::{identity_check, IdentityKind, IdentityOptions};
use crate::error::{Error, Result};
use crate::field::{gauge_transform_fields, sigma_example, GaugeTransform};
use crate::geometry::ParticleSystem;
use crate::grid::TensorGrid;
use crate::hamiltonian::Model;
use crate::io::{fmt_f64, plot_data, CsvTable};
use crate::norms::{random_field, RandomFieldOptions};
use crate::propagator::{trajectory, BackendConfig, BackendKind, Evolver, ExactKernel};
use crate::state::{sigma_k_norm, StateVector};
use crate::Complex64;

fn phases(grid: &TensorGrid, system: &ParticleSystem, gauge: &GaugeTransform, t: f64, sign: f64) -> Vec<f64> {
    (0..grid.len()).map(|i| sign * gauge.phase(system, t, &grid.point(i))).collect()
}

fn with_phase(u: &StateVector, theta: &[f64]) -> StateVector {
    let mut v = u.clone();
    v.multiply_phase(theta);
    v
}

fn nodes(s: f64, t: f64, count: usize) -> Vec<f64> {
    let k = count.max(1);
    (0..=k).map(|i| s + (t - s) * i as f64 / k as f64).collect()
}

fn observed_orders(values: &[f64], ratio: f64) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect()
}

/// Norm preservation along the scenario propagator.
pub fn unitarity_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("unitarity", scn);
    let st = &scn.config.settings.unitarity;
    let model = scn.model()?;
    let prop = scn.propagator(&model)?;
    let (s, t) = scn.interval();
    let mut states = vec![("initial".to_string(), scn.config.initial_state(&model.grid)?)];
    for i in 0..st.random_states {
        let f = random_field(&model.grid, scn.config.seed, 1 + i as u64, &RandomFieldOptions::default());
        states.push((format!("random{i}"), f));
    }
    let tol = scn.tol(st.tolerance);
    for (name, f) in &states {
        let label = format!("norm drift [{name}]");
        match trajectory(&*prop, f, &nodes(s, t, st.nodes)) {
            Ok(traj) => {
                let n0 = f.norm();
                let drift = traj.iter().map(|u| (u.norm() - n0).abs() / n0).fold(0.0, f64::max);
                rep.push(Check::at_most(label, drift, tol));
            }
            Err(Error::Instability { backend, drift }) => {
                rep.push(Check::at_most(label, drift, tol).with_note(format!("{backend} backend stopped: norm drift detected")));
            }
            Err(e) => return Err(e),
        }
    }
    rep.note(format!("propagator: {}", prop.label()));
    Ok(rep)
}

/// `U(t, r) U(r, s) f = U(t, s) f` on several triples.
pub fn ck_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("ck", scn);
    let st = &scn.config.settings.ck;
    let model = scn.model()?;
    let prop = scn.propagator(&model)?;
    let f = scn.config.initial_state(&model.grid)?;
    let (a, b) = scn.interval();
    let len = b - a;
    let triples = st.triples.clone().unwrap_or_else(|| {
        vec![
            [a + len, a + 0.5 * len, a],
            [a + 0.8 * len, a + 0.3 * len, a + 0.1 * len],
            [a, a + 0.6 * len, a + len],
        ]
    });
    let tol = scn.tol(st.tolerance);
    for [t, r, s] in triples {
        let two = prop.propagate(&prop.propagate(&f, r, s)?, t, r)?;
        let one = prop.propagate(&f, t, s)?;
        let res = two.distance(&one)? / f.norm();
        rep.push(Check::at_most(format!("ck ({t}, {r}, {s})"), res, tol));
    }
    let same = prop.propagate(&f, b, b)?;
    rep.push(Check::at_most(format!("ck ({b}, {b}, {b})"), same.distance(&f)?, 0.0));
    Ok(rep)
}

/// Picard endpoint against an exponential oracle, plus contraction data.
pub fn picard_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("picard", scn);
    let st = &scn.config.settings.picard;
    let model = scn.model()?;
    if model.potentials.is_empty() {
        return Err(Error::Config("picard suite needs interaction potentials".into()));
    }
    let full = scn.picard(&model)?;
    let f = scn.config.initial_state(&model.grid)?;
    let (s, t) = scn.interval();
    let table = full.solve(&f, t, s)?;
    let dt = scn.config.picard.node_spacing / st.oracle_refinement.max(1) as f64;
    let kind = if model.grid.len() <= scn.config.backend.dense_cap.min(1024) {
        BackendKind::Dense
    } else {
        BackendKind::Krylov
    };
    let oracle = Evolver::new(
        model.clone(),
        BackendConfig {
            kind,
            dt,
            magnus_order: 2,
            ..scn.config.backend
        },
    )?;
    let exact = oracle.evolve(&f, t, s)?;
    rep.push(Check::at_most(
        "endpoint vs oracle",
        table.endpoint().distance(&exact)? / f.norm(),
        scn.tol(st.oracle_tolerance),
    ));
    rep.push(Check::below("observed rho", table.max_rho(), st.max_rho));
    let converged = table.pieces.iter().all(|p| p.state.converged);
    rep.push(Check::holds("all pieces converged", converged));
    rep.note(format!(
        "{} pieces, {} iterations, oracle {} magnus-2 dt={}",
        table.pieces.len(),
        table.iterations(),
        kind.name(),
        dt
    ));
    rep.artifact("convergence.csv", table.convergence_csv().render());
    Ok(rep)
}

/// Free Gaussian variance and exact free kernel against spectral evolution.
pub fn free_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("free", scn);
    let st = &scn.config.settings.free;
    let model = scn.model()?;
    if !model.potentials.is_empty() || model.fields.has_vector_potential() || !model.fields.scalar.is_empty() || model.grid.n_axes() != 1 {
        return Err(Error::Config("free suite needs a single free particle in one dimension".into()));
    }
    let (s, t) = scn.interval();
    let spectral = Evolver::new(
        model.clone(),
        BackendConfig::with_kind(BackendKind::SplitStep, (t - s).abs().max(1.0)),
    )?;
    let g = StateVector::gaussian(model.grid.clone(), &[0.0], 1.0, &[0.0])?;
    let times = nodes(s, t, st.nodes);
    let traj = trajectory(&spectral, &g, &times)?;
    let m = model.system.mass(0);
    let variance: Vec<f64> = traj.iter().map(|u| u.position_variance(0)).collect();
    let expected: Vec<f64> = times.iter().map(|r| 0.5 * (1.0 + ((r - s) / m).powi(2))).collect();
    let err = variance.iter().zip(&expected).map(|(v, e)| (v - e).abs() / e).fold(0.0, f64::max);
    rep.push(Check::at_most("variance relative error", err, scn.tol(st.variance_tolerance)));
    rep.artifact(
        "variance.dat",
        plot_data(&["t variance".into(), "oracle (1 + t^2) / 2".into()], &times, &variance),
    );
    let f = scn.config.initial_state(&model.grid)?;
    let kernel = ExactKernel::Free { mass: m };
    for &tau in &st.kernel_times {
        let k = kernel.apply(&f, s + tau, s)?;
        let u = spectral.evolve(&f, s + tau, s)?;
        rep.push(Check::at_most(
            format!("kernel vs spectral t={tau}"),
            k.distance(&u)? / f.norm(),
            scn.tol(st.kernel_tolerance),
        ));
    }
    Ok(rep)
}

/// `u(s + 2 pi) = -u(s)` for the unit oscillator.
pub fn recurrence_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("recurrence", scn);
    let st = &scn.config.settings.recurrence;
    let model = scn.model()?;
    let f = scn.config.initial_state(&model.grid)?;
    let s = scn.interval().0;
    let t = s + 2.0 * std::f64::consts::PI;
    let minus = f.scaled(Complex64::new(-1.0, 0.0));
    let dense = Evolver::new(model.clone(), BackendConfig::with_kind(BackendKind::Dense, scn.config.backend.dt))?;
    let err = dense.evolve(&f, t, s)?.distance(&minus)? / f.norm();
    rep.push(Check::at_most("dense u(2pi) + u(0)", err, scn.tol(st.dense_tolerance)));
    let split = Evolver::new(model, BackendConfig::with_kind(BackendKind::SplitStep, st.split_dt))?;
    let err = split.evolve(&f, t, s)?.distance(&minus)? / f.norm();
    rep.push(Check::at_most(
        format!("split-step dt={} u(2pi) + u(0)", st.split_dt),
        err,
        scn.tol(st.split_tolerance),
    ));
    Ok(rep)
}

/// Gauge covariance `U = T(t) U~ T(s)^{-1}` and the sigma-example identity.
pub fn gauge_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("gauge", scn);
    let st = &scn.config.settings.gauge;
    let model = scn.model()?;
    let grid = model.grid.clone();
    let (s, t) = scn.interval();
    let f = scn.config.initial_state(&grid)?;
    let gauge = GaugeTransform::Harmonic { c: st.c };
    let original = scn.propagator(&model)?;
    let mut transformed = model.clone();
    transformed.fields = gauge_transform_fields(&model.fields, st.c);
    let tilde = Evolver::new(transformed, st.backend)?;
    let g0 = with_phase(&f, &phases(&grid, &model.system, &gauge, s, -1.0));
    let times = nodes(s, t, 2);
    let u = trajectory(&*original, &f, &times)?;
    let v = trajectory(&tilde, &g0, &times)?;
    let mut worst: f64 = 0.0;
    for (k, r) in times.iter().enumerate().skip(1) {
        let back = with_phase(&v[k], &phases(&grid, &model.system, &gauge, *r, 1.0));
        worst = worst.max(back.distance(&u[k])? / f.norm());
    }
    rep.push(Check::at_most(format!("C={} covariance", st.c), worst, scn.tol(st.tolerance)));

    // sigma example at the matrix level, applied to a fixed Gaussian
    let ex = sigma_example(1, st.sigma, st.sigma_c)?;
    let sys = ParticleSystem::unit(1, 1)?;
    let mut table = CsvTable::new(&["points", "residual", "literal_residual"]);
    let mut residuals = Vec::new();
    for &m in &st.sigma_points {
        let g = Arc::new(TensorGrid::uniform(1, 1, scn.config.grid.extent, m)?);
        let hc = Model::new(sys.clone(), ex.h_c.clone(), Vec::new(), g.clone())?.hamiltonian(st.sigma_time)?;
        let h0 = Model::new(sys.clone(), ex.h_c0.clone(), Vec::new(), g.clone())?.hamiltonian(st.sigma_time)?;
        let psi = StateVector::gaussian(g.clone(), &[0.0], 1.0, &[0.0])?.normalized();
        let plus = phases(&g, &sys, &ex.gauge, st.sigma_time, 1.0);
        let minus: Vec<f64> = plus.iter().map(|p| -p).collect();
        let target = h0.apply(&psi)?;
        let scale = target.norm();
        // T H_C T^* and the reversed conjugation T^* H_C T
        let conj = with_phase(&hc.apply(&with_phase(&psi, &minus))?, &plus);
        let literal = with_phase(&hc.apply(&with_phase(&psi, &plus))?, &minus);
        let r = conj.distance(&target)? / scale;
        let lr = literal.distance(&target)? / scale;
        table.push(vec![m.to_string(), fmt_f64(r), fmt_f64(lr)]);
        residuals.push(r);
        rep.push(
            Check::holds(format!("sigma={} identity residual M={m}", st.sigma), r.is_finite())
                .with_note(format!("residual {}", fmt_f64(r))),
        );
    }
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    rep.push(Check::holds("sigma identity decreases under refinement", monotone));
    rep.note("sigma identity uses T H_C T^* = H_{C,0} with T = exp(i t <x>^sigma); the reversed conjugation is listed as literal_residual");
    if st.sigma > 2.0 {
        rep.note("sigma > 2: non-uniqueness of the dynamics is out of scope on a fixed grid");
    }
    rep.artifact("sigma_refinement.csv", table.render());
    Ok(rep)
}

/// Bounded `Sigma(2)` norm and the strong-equation residual order.
pub fn sigma2_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("sigma2", scn);
    let st = &scn.config.settings.sigma2;
    let model = scn.model()?;
    let f = scn.config.initial_state(&model.grid)?;
    let (s, t) = scn.interval();
    let base = Evolver::new(model.clone(), scn.config.backend)?;
    let times = nodes(s, t, st.nodes);
    let traj = trajectory(&base, &f, &times)?;
    let sig: Vec<f64> = traj.iter().map(|u| sigma_k_norm(u, 2)).collect::<Result<_>>()?;
    let growth = sig.iter().fold(0.0, |m: f64, v| m.max(*v)) / sig[0];
    rep.push(Check::at_most("Sigma(2) growth", growth, st.growth_limit));
    rep.artifact("sigma2.dat", plot_data(&["t Sigma(2)-norm".into()], &times, &sig));

    let probes: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|a| s + a * (t - s)).collect();
    let anchors = trajectory(&base, &f, &[&[s][..], &probes].concat())?;
    let mut residuals = Vec::new();
    for &dt in &st.steps {
        let ev = Evolver::new(model.clone(), BackendConfig { dt, ..scn.config.backend })?;
        let mut worst: f64 = 0.0;
        for (k, &r) in probes.iter().enumerate() {
            let u = &anchors[k + 1];
            let fwd = ev.step(u, r, dt)?;
            let bwd = ev.step(u, r, -dt)?;
            let mut lhs = fwd;
            lhs.axpy(Complex64::new(-1.0, 0.0), &bwd)?;
            lhs.scale(Complex64::new(0.0, 1.0 / (2.0 * dt)));
            let hu = model.hamiltonian(r)?.apply(u)?;
            worst = worst.max(lhs.distance(&hu)? / hu.norm());
        }
        residuals.push(worst);
    }
    let ratio = st.steps[0] / st.steps[1];
    let orders = observed_orders(&residuals, ratio);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    rep.push(Check::at_least("strong residual order", min_order, st.min_order));
    let mut table = CsvTable::new(&["dt", "residual"]);
    for (dt, r) in st.steps.iter().zip(&residuals) {
        table.push_values(&[*dt, *r]);
    }
    rep.artifact("strong_residual.csv", table.render());
    rep.note("strong residual is the L2 surrogate of the equation in Sigma(-2): centred difference against H(t)u");
    Ok(rep)
}

/// `U_0`-identities at the configured `K` and their refinement behaviour.
pub fn identity_suite(scn: &Scenario) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("identity", scn);
    let st = &scn.config.settings.identity;
    let model = scn.model()?;
    if !model.potentials.is_empty() {
        return Err(Error::Config("identity suite works on the external-field part only".into()));
    }
    let f = scn.config.initial_state(&model.grid)?;
    let (s, t) = scn.interval();
    let mut table = CsvTable::new(&["identity", "intervals", "residual"]);
    for kind in [IdentityKind::Id1, IdentityKind::Id2] {
        let name = format!("{kind:?}").to_lowercase();
        let r = identity_check(kind, &model, &f, t, s, &st.options)?;
        rep.push(Check::below(
            format!("{name} residual K={}", st.options.intervals),
            r.residual,
            scn.tol(st.tolerance),
        ));
        let mut res = Vec::new();
        for &k in &st.refinement {
            let opts = IdentityOptions {
                intervals: k,
                ..st.options
            };
            let r = identity_check(kind, &model, &f, t, s, &opts)?;
            table.push(vec![name.clone(), k.to_string(), fmt_f64(r.residual)]);
            res.push(r.residual);
        }
        let orders = observed_orders(&res, 2.0);
        let steepest = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        rep.push(Check::at_least(format!("{name} quadrature order"), steepest, st.min_order));
        let floor = res.iter().copied().fold(f64::INFINITY, f64::min);
        let last = *res.last().unwrap_or(&f64::NAN);
        rep.push(Check::at_most(format!("{name} plateau (finest / best)"), last / floor, 2.0));
    }
    rep.artifact("identity_refinement.csv", table.render());
    Ok(rep)
}
