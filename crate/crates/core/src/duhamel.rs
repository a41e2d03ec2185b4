//! Duhamel–Picard construction of the interacting propagator.
//!
//! `u = U_0(., s) f + G_s V u` with `(G_s v)(t) = -i int_s^t U_0(t, r) v(r) dr`
//! is solved by successive substitution on a node grid, bisecting the
//! interval until the iteration contracts, and patching the pieces.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Model, OperatorMatrix};
use crate::io::{fmt_f64, CsvTable};
use crate::linalg;
use crate::norms::{XNorm, XNormTerm};
use crate::propagator::{trajectory, BackendConfig, Propagate, TensorPropagator};
use crate::state::StateVector;
use crate::timegrid::{QuadratureRule, TimeGrid, Trajectory};

type C = Complex64;

fn minus_i(c: f64) -> C {
    C::new(0.0, -c)
}

/// `(G_s y)(t_k)` at every node; cumulative, one or two `U_0` applications per node.
pub fn apply_gs(y: &[StateVector], time: &TimeGrid, u0: &dyn Propagate) -> Result<Vec<StateVector>> {
    let kk = time.intervals();
    if y.len() != kk + 1 {
        return Err(Error::InvalidTimeGrid(format!("{} samples for {} nodes", y.len(), kk + 1)));
    }
    let t = time.nodes();
    let h = time.step();
    let one = C::new(1.0, 0.0);
    let mut out: Vec<StateVector> = Vec::with_capacity(kk + 1);
    out.push(y[0].scaled(C::new(0.0, 0.0)));
    for k in 1..=kk {
        let next = match time.rule() {
            QuadratureRule::Trapezoid => {
                let mut a = out[k - 1].clone();
                a.axpy(minus_i(h / 2.0), &y[k - 1])?;
                let mut b = u0.propagate(&a, t[k], t[k - 1])?;
                b.axpy(minus_i(h / 2.0), &y[k])?;
                b
            }
            QuadratureRule::Simpson if k % 2 == 0 => {
                let mut a = out[k - 2].clone();
                a.axpy(minus_i(h / 3.0), &y[k - 2])?;
                let mut b = u0.propagate(&a, t[k], t[k - 2])?;
                b.axpy(one, &u0.propagate(&y[k - 1].scaled(minus_i(4.0 * h / 3.0)), t[k], t[k - 1])?)?;
                b.axpy(minus_i(h / 3.0), &y[k])?;
                b
            }
            QuadratureRule::Simpson if k < kk => {
                // quadratic through nodes k-1, k, k+1 integrated over [t_{k-1}, t_k]
                let mut a = out[k - 1].clone();
                a.axpy(minus_i(5.0 * h / 12.0), &y[k - 1])?;
                let mut b = u0.propagate(&a, t[k], t[k - 1])?;
                b.axpy(minus_i(8.0 * h / 12.0), &y[k])?;
                b.axpy(one, &u0.propagate(&y[k + 1].scaled(minus_i(-h / 12.0)), t[k], t[k + 1])?)?;
                b
            }
            QuadratureRule::Simpson => {
                // odd last node: quadratic through k-2, k-1, k
                let mut a = out[k - 1].clone();
                a.axpy(minus_i(8.0 * h / 12.0), &y[k - 1])?;
                let mut b = u0.propagate(&a, t[k], t[k - 1])?;
                b.axpy(one, &u0.propagate(&y[k - 2].scaled(minus_i(-h / 12.0)), t[k], t[k - 2])?)?;
                b.axpy(minus_i(5.0 * h / 12.0), &y[k])?;
                b
            }
        };
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardOptions {
    /// Largest node spacing; each piece gets an even node count.
    pub node_spacing: f64,
    pub rule: QuadratureRule,
    /// Stop when the `X(I)` residual drops below `tol * ||f||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Bisect when any ratio up to the probe iteration reaches this.
    pub contraction_ratio: f64,
    pub probe_iteration: usize,
    pub min_length: f64,
    /// Longest piece attempted before bisection.
    pub max_piece: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            node_spacing: 1.0 / 64.0,
            rule: QuadratureRule::Simpson,
            tol: 1e-12,
            max_iter: 60,
            contraction_ratio: 0.9,
            probe_iteration: 3,
            min_length: 1e-3,
            max_piece: 1.0,
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.node_spacing > 0.0 && self.tol > 0.0 && self.min_length > 0.0 && self.max_piece > 0.0) {
            return Err(Error::Config("Picard spacing, tolerance and lengths must be positive".into()));
        }
        if !(self.contraction_ratio > 0.0 && self.contraction_ratio < 1.0) || self.probe_iteration < 2 {
            return Err(Error::Config(
                "contraction ratio in (0, 1) and probe iteration >= 2 required".into(),
            ));
        }
        Ok(())
    }

    fn time_grid(&self, s: f64, t: f64) -> Result<TimeGrid> {
        let mut k = ((t - s).abs() / self.node_spacing - 1e-9).ceil().max(2.0) as usize;
        if self.rule == QuadratureRule::Simpson && k % 2 == 1 {
            k += 1;
        }
        TimeGrid::new(s, t, k, self.rule)
    }
}

/// Convergence record of one piece.
#[derive(Debug, Clone, Serialize)]
pub struct PicardState {
    pub start: f64,
    pub end: f64,
    pub nodes: usize,
    /// `||u_n - u_{n-1}||_X` for `n = 1, 2, ...`
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio from the second on, the observed contraction factor.
    pub rho: f64,
    pub converged: bool,
}

impl PicardState {
    fn new(time: &TimeGrid) -> Self {
        PicardState {
            start: time.start(),
            end: time.end(),
            nodes: time.len(),
            residuals: Vec::new(),
            ratios: Vec::new(),
            rho: 0.0,
            converged: false,
        }
    }

    fn push(&mut self, r: f64) {
        if let Some(&prev) = self.residuals.last() {
            let ratio = if prev > 0.0 { r / prev } else { 0.0 };
            self.ratios.push(ratio);
            if self.ratios.len() >= 2 {
                self.rho = self.rho.max(ratio);
            }
        }
        self.residuals.push(r);
    }
}

#[derive(Debug, Clone)]
pub struct PicardPiece {
    pub trajectory: Trajectory,
    pub state: PicardState,
}

/// Sub-interval solutions making up `U(t, s) f`.
#[derive(Debug, Clone)]
pub struct PropagatorTable {
    pub start: f64,
    pub end: f64,
    pub pieces: Vec<PicardPiece>,
    pub initial: StateVector,
}

impl PropagatorTable {
    pub fn endpoint(&self) -> &StateVector {
        self.pieces.last().map(|p| p.trajectory.last()).unwrap_or(&self.initial)
    }

    pub fn max_rho(&self) -> f64 {
        self.pieces.iter().map(|p| p.state.rho).fold(0.0, f64::max)
    }

    pub fn iterations(&self) -> usize {
        self.pieces.iter().map(|p| p.state.residuals.len()).sum()
    }

    /// `piece,start,end,iteration,residual,ratio`
    pub fn convergence_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["piece", "start", "end", "iteration", "residual", "ratio"]);
        for (i, p) in self.pieces.iter().enumerate() {
            for (n, r) in p.state.residuals.iter().enumerate() {
                let ratio = if n == 0 { String::new() } else { fmt_f64(p.state.ratios[n - 1]) };
                t.push(vec![
                    i.to_string(),
                    fmt_f64(p.state.start),
                    fmt_f64(p.state.end),
                    (n + 1).to_string(),
                    fmt_f64(*r),
                    ratio,
                ]);
            }
        }
        t
    }
}

/// Interacting propagator from a free propagator and the model's potentials.
pub struct FullPropagator {
    model: Model,
    u0: Box<dyn Propagate>,
    xnorm: XNorm,
    options: PicardOptions,
    potentials: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for FullPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullPropagator").field("options", &self.options).finish()
    }
}

impl FullPropagator {
    /// `terms` are the `X(I)` summands used to measure residuals.
    pub fn new(model: Model, u0: Box<dyn Propagate>, terms: &[XNormTerm], options: PicardOptions) -> Result<Self> {
        options.validate()?;
        let xnorm = XNorm::new(&model.grid, terms)?;
        Ok(FullPropagator {
            model,
            u0,
            xnorm,
            options,
            potentials: Mutex::new(HashMap::new()),
        })
    }

    /// Free part from dense single-particle factors.
    pub fn with_tensor_free_part(model: Model, backend: BackendConfig, terms: &[XNormTerm], options: PicardOptions) -> Result<Self> {
        let u0 = TensorPropagator::new(&model.free_part(), backend)?;
        FullPropagator::new(model, Box::new(u0), terms, options)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn options(&self) -> &PicardOptions {
        &self.options
    }

    pub fn free(&self) -> &dyn Propagate {
        &*self.u0
    }

    fn potential_at(&self, t: f64) -> Result<Arc<Vec<f64>>> {
        let key = if self.model.potentials.iter().all(|p| p.is_static()) {
            0
        } else {
            t.to_bits()
        };
        if let Some(v) = self.potentials.lock().expect("potential cache").get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.model.potential_values(t)?);
        let mut cache = self.potentials.lock().expect("potential cache");
        if cache.len() > 4096 {
            cache.clear();
        }
        cache.insert(key, v.clone());
        Ok(v)
    }

    /// One Picard run on `[s, t]` without splitting. `Ok(None)` means the
    /// probe ratio asked for bisection.
    fn attempt(&self, f: &StateVector, s: f64, t: f64, may_split: bool) -> Result<Option<PicardPiece>> {
        let time = self.options.time_grid(s, t)?;
        let nodes = time.nodes();
        let weights = time.weights();
        let u0 = trajectory(&*self.u0, f, &nodes)?;
        let pots = nodes.iter().map(|&r| self.potential_at(r)).collect::<Result<Vec<_>>>()?;
        let mut state = PicardState::new(&time);
        let scale = f.norm().max(f64::MIN_POSITIVE);
        let mut u = u0.clone();
        for n in 1..=self.options.max_iter {
            let y: Vec<StateVector> = u
                .iter()
                .zip(&pots)
                .map(|(v, p)| {
                    let mut w = v.clone();
                    w.multiply_real(p);
                    w
                })
                .collect();
            let g = apply_gs(&y, &time, &*self.u0)?;
            let mut next = u0.clone();
            for (a, b) in next.iter_mut().zip(&g) {
                a.axpy(C::new(1.0, 0.0), b)?;
            }
            let diff: Vec<StateVector> = next
                .iter()
                .zip(&u)
                .map(|(a, b)| {
                    let mut d = a.clone();
                    d.axpy(C::new(-1.0, 0.0), b)?;
                    Ok(d)
                })
                .collect::<Result<_>>()?;
            state.push(self.xnorm.evaluate(&diff, &weights).total / scale);
            u = next;
            let r = *state.residuals.last().expect("pushed");
            if r < self.options.tol {
                state.converged = true;
                break;
            }
            if n <= self.options.probe_iteration {
                let worst = state.ratios.iter().copied().fold(0.0, f64::max);
                if worst >= self.options.contraction_ratio {
                    if may_split {
                        return Ok(None);
                    }
                    return Err(Error::NoContraction {
                        length: (t - s).abs(),
                        ratio: worst,
                    });
                }
            }
        }
        if !state.converged {
            if may_split {
                return Ok(None);
            }
            return Err(Error::NoContraction {
                length: (t - s).abs(),
                ratio: state.ratios.last().copied().unwrap_or(f64::NAN),
            });
        }
        Ok(Some(PicardPiece {
            trajectory: Trajectory::new(time, u)?,
            state,
        }))
    }

    fn solve_piece(&self, f: &StateVector, s: f64, t: f64, out: &mut Vec<PicardPiece>) -> Result<()> {
        let half = (t - s) / 2.0;
        let may_split = half.abs() >= self.options.min_length;
        match self.attempt(f, s, t, may_split)? {
            Some(piece) => {
                out.push(piece);
                Ok(())
            }
            None => {
                let m = s + half;
                self.solve_piece(f, s, m, out)?;
                let mid = out.last().expect("first half solved").trajectory.last().clone();
                self.solve_piece(&mid, m, t, out)
            }
        }
    }

    /// Solves `[s, t]` (either order), patching contraction-sized pieces.
    pub fn solve(&self, f: &StateVector, t: f64, s: f64) -> Result<PropagatorTable> {
        if f.grid() != &*self.model.grid {
            return Err(Error::GridMismatch);
        }
        let mut pieces = Vec::new();
        if t != s {
            let chunks = ((t - s).abs() / self.options.max_piece - 1e-9).ceil().max(1.0) as usize;
            let len = (t - s) / chunks as f64;
            let mut cur = f.clone();
            for c in 0..chunks {
                let a = s + c as f64 * len;
                let b = if c + 1 == chunks { t } else { s + (c + 1) as f64 * len };
                self.solve_piece(&cur, a, b, &mut pieces)?;
                cur = pieces.last().expect("piece solved").trajectory.last().clone();
            }
        }
        Ok(PropagatorTable {
            start: s,
            end: t,
            pieces,
            initial: f.clone(),
        })
    }
}

impl Propagate for FullPropagator {
    fn propagate(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        Ok(self.solve(u, t, s)?.endpoint().clone())
    }

    fn label(&self) -> String {
        format!("picard over {}", self.u0.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityKind {
    Id1,
    Id2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityOptions {
    pub intervals: usize,
    pub rule: QuadratureRule,
    pub backend: BackendConfig,
    /// Step of the 4th-order difference used for `dH_0/dt`.
    pub derivative_step: f64,
    pub solve_tol: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            intervals: 64,
            rule: QuadratureRule::Simpson,
            backend: BackendConfig {
                dt: 1e-3,
                ..Default::default()
            },
            derivative_step: 1e-3,
            solve_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub kind: IdentityKind,
    pub start: f64,
    pub end: f64,
    pub intervals: usize,
    pub lhs_norm: f64,
    /// `||lhs - rhs|| / ||lhs||`
    pub residual: f64,
}

struct FreeOps<'a> {
    model: &'a Model,
    opts: &'a IdentityOptions,
    h_cache: Mutex<HashMap<u64, Arc<OperatorMatrix>>>,
}

impl FreeOps<'_> {
    fn h(&self, t: f64) -> Result<Arc<OperatorMatrix>> {
        if let Some(h) = self.h_cache.lock().expect("cache").get(&t.to_bits()) {
            return Ok(h.clone());
        }
        let h = Arc::new(self.model.hamiltonian(t)?);
        self.h_cache.lock().expect("cache").insert(t.to_bits(), h.clone());
        Ok(h)
    }

    fn apply_h(&self, t: f64, u: &StateVector) -> Result<StateVector> {
        self.h(t)?.apply(u)
    }

    fn apply_hdot(&self, t: f64, u: &StateVector) -> Result<StateVector> {
        if self.model.fields.is_static() {
            return Ok(u.scaled(C::new(0.0, 0.0)));
        }
        let d = self.opts.derivative_step;
        let mut out = u.scaled(C::new(0.0, 0.0));
        for (c, off) in [(-1.0, 2.0), (8.0, 1.0), (-8.0, -1.0), (1.0, -2.0)] {
            out.axpy(C::new(c / (12.0 * d), 0.0), &self.apply_h(t + off * d, u)?)?;
        }
        Ok(out)
    }

    fn solve_h(&self, t: f64, u: &StateVector) -> Result<StateVector> {
        let h = self.h(t)?;
        let x = linalg::conjugate_gradient(|v| h.matvec(v), u.data(), self.opts.solve_tol, 20 * u.len())?;
        u.with_data(x)
    }
}

/// Evaluates both sides of the `U_0`-identities with the `r`-integral on a
/// `TimeGrid` and returns the relative residual.
pub fn identity_check(
    kind: IdentityKind,
    model: &Model,
    f: &StateVector,
    t: f64,
    s: f64,
    opts: &IdentityOptions,
) -> Result<IdentityReport> {
    let prop = TensorPropagator::new(model, opts.backend)?;
    let ops = FreeOps {
        model,
        opts,
        h_cache: Mutex::new(HashMap::new()),
    };
    let (lhs, rhs) = if t == s {
        let l = match kind {
            IdentityKind::Id1 => ops.apply_h(s, f)?,
            IdentityKind::Id2 => ops.solve_h(s, f)?,
        };
        (l.clone(), l)
    } else {
        let time = TimeGrid::new(s, t, opts.intervals, opts.rule)?;
        let r = time.nodes();
        let sign = (t - s).signum();
        let w: Vec<f64> = time.weights().iter().map(|x| x * sign).collect();
        let traj = trajectory(&prop, f, &r)?;
        let ut = traj.last().expect("nonempty trajectory").clone();
        // sum_j w_j U_0(t, r_j) g_j by nested accumulation
        let integrate = |g: &dyn Fn(usize, &StateVector) -> Result<StateVector>| -> Result<StateVector> {
            let mut acc = g(0, &traj[0])?.scaled(C::new(w[0], 0.0));
            for j in 1..r.len() {
                acc = prop.apply(&acc, r[j], r[j - 1])?;
                acc.axpy(C::new(w[j], 0.0), &g(j, &traj[j])?)?;
            }
            Ok(acc)
        };
        let propagate_to_t = |v: &StateVector| -> Result<StateVector> {
            let mut cur = v.clone();
            for j in 1..r.len() {
                cur = prop.apply(&cur, r[j], r[j - 1])?;
            }
            Ok(cur)
        };
        match kind {
            IdentityKind::Id1 => {
                let lhs = ops.apply_h(t, &ut)?;
                let mut rhs = propagate_to_t(&ops.apply_h(s, f)?)?;
                rhs.axpy(C::new(1.0, 0.0), &integrate(&|j, u| ops.apply_hdot(r[j], u))?)?;
                (lhs, rhs)
            }
            IdentityKind::Id2 => {
                let lhs = propagate_to_t(&ops.solve_h(s, f)?)?;
                let mut rhs = ops.solve_h(t, &ut)?;
                // -(d/dr H^{-1}) = H^{-1} Hdot H^{-1}
                let term = integrate(&|j, u| {
                    let inner = ops.solve_h(r[j], u)?;
                    ops.solve_h(r[j], &ops.apply_hdot(r[j], &inner)?)
                })?;
                rhs.axpy(C::new(1.0, 0.0), &term)?;
                (lhs, rhs)
            }
        }
    };
    let lhs_norm = lhs.norm();
    Ok(IdentityReport {
        kind,
        start: s,
        end: t,
        intervals: opts.intervals,
        lhs_norm,
        residual: lhs.distance(&rhs)? / lhs_norm.max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{ClusterSpec, Exponent};
    use crate::field::{FieldSpec, PotentialTerm, ScalarTerm, TimeCoef};
    use crate::geometry::ParticleSystem;
    use crate::grid::TensorGrid;
    use crate::propagator::{BackendKind, Evolver};

    struct Identity;

    impl Propagate for Identity {
        fn propagate(&self, u: &StateVector, _t: f64, _s: f64) -> Result<StateVector> {
            Ok(u.clone())
        }

        fn label(&self) -> String {
            "identity".into()
        }
    }

    fn line(points: usize) -> Arc<TensorGrid> {
        Arc::new(TensorGrid::uniform(1, 1, 6.0, points).unwrap())
    }

    #[test]
    fn gs_of_constant_under_identity() {
        let g = line(16);
        let f = StateVector::gaussian(g, &[0.0], 1.0, &[0.0]).unwrap();
        for (rule, k) in [
            (QuadratureRule::Simpson, 6),
            (QuadratureRule::Simpson, 5),
            (QuadratureRule::Trapezoid, 3),
        ] {
            let time = TimeGrid::new(0.5, 2.0, k, rule).unwrap();
            let out = apply_gs(&vec![f.clone(); k + 1], &time, &Identity).unwrap();
            for (tk, v) in time.nodes().iter().zip(&out) {
                assert!(v.distance(&f.scaled(minus_i(tk - 0.5))).unwrap() < 1e-14);
            }
        }
        let time = TimeGrid::new(0.0, 1.0, 4, QuadratureRule::Simpson).unwrap();
        let zero = f.scaled(C::new(0.0, 0.0));
        assert!(apply_gs(&vec![zero.clone(); 5], &time, &Identity)
            .unwrap()
            .iter()
            .all(|v| *v == zero));
        assert!(matches!(
            TimeGrid::new(0.0, 1.0, 1, QuadratureRule::Simpson),
            Err(Error::QuadratureUnderflow(1))
        ));
    }

    #[test]
    fn gs_quadrature_orders() {
        // y(r) = cos(3 r) f: exact integral -i sin(3t)/3 f
        let g = line(16);
        let f = StateVector::gaussian(g, &[0.0], 1.0, &[0.0]).unwrap();
        for (rule, expected) in [(QuadratureRule::Trapezoid, 2.0), (QuadratureRule::Simpson, 4.0)] {
            let err = |k: usize| {
                let time = TimeGrid::new(0.0, 1.0, k, rule).unwrap();
                let y: Vec<StateVector> = time.nodes().iter().map(|r| f.scaled(C::new((3.0 * r).cos(), 0.0))).collect();
                let out = apply_gs(&y, &time, &Identity).unwrap();
                out.last().unwrap().distance(&f.scaled(minus_i((3.0f64).sin() / 3.0))).unwrap()
            };
            let order = (err(16) / err(32)).log2();
            assert!((order - expected).abs() < 0.3, "{rule:?}: {order}");
        }
    }

    fn two_body(points: usize, extent: f64) -> Model {
        let grid = Arc::new(TensorGrid::uniform(2, 1, extent, points).unwrap());
        let pot = PotentialTerm::power(ClusterSpec::new(&[1, 2], 1).unwrap(), 1.0, 0.25, 1.0);
        Model::new(ParticleSystem::unit(2, 1).unwrap(), FieldSpec::harmonic(1, 0.5), vec![pot], grid).unwrap()
    }

    fn terms() -> Vec<XNormTerm> {
        vec![XNormTerm::from_potential_exponent(&ClusterSpec::new(&[1, 2], 1).unwrap(), Exponent::ratio(3, 2)).unwrap()]
    }

    #[test]
    fn zero_potential_converges_at_once() {
        let mut m = two_body(16, 6.0);
        m.potentials.clear();
        let full = FullPropagator::with_tensor_free_part(m.clone(), BackendConfig::default(), &terms(), PicardOptions::default()).unwrap();
        let f = StateVector::gaussian(m.grid.clone(), &[-1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap();
        let table = full.solve(&f, 0.5, 0.0).unwrap();
        assert_eq!(table.iterations(), 1);
        assert_eq!(table.pieces[0].state.residuals, vec![0.0]);
        assert_eq!(full.solve(&f, 0.2, 0.2).unwrap().endpoint(), &f);
    }

    #[test]
    fn picard_matches_exponential_oracle() {
        let m = two_body(32, 6.0);
        let f = StateVector::gaussian(m.grid.clone(), &[-1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap();
        let oracle = Evolver::new(m.clone(), BackendConfig::with_kind(BackendKind::Krylov, 0.01)).unwrap();
        let exact = oracle.evolve(&f, 0.5, 0.0).unwrap();
        let full = |spacing: f64| {
            let opts = PicardOptions {
                node_spacing: spacing,
                ..Default::default()
            };
            FullPropagator::with_tensor_free_part(m.clone(), BackendConfig::default(), &terms(), opts).unwrap()
        };
        let fine = full(1.0 / 64.0);
        let table = fine.solve(&f, 0.5, 0.0).unwrap();
        let e64 = table.endpoint().distance(&exact).unwrap();
        assert!(e64 < 1e-5, "{e64}");
        assert!(table.max_rho() < 0.9);
        let e32 = full(1.0 / 32.0).propagate(&f, 0.5, 0.0).unwrap().distance(&exact).unwrap();
        assert!((e32 / e64).log2() > 3.5, "{e32} {e64}");
        // backward evolution returns to f
        let back = fine.propagate(table.endpoint(), 0.0, 0.5).unwrap();
        assert!(back.distance(&f).unwrap() < 2e-5);
    }

    #[test]
    fn halving_the_interval_lowers_rho() {
        let m = two_body(16, 6.0);
        let f = StateVector::gaussian(m.grid.clone(), &[-0.5, 0.5], 1.0, &[0.0, 0.0]).unwrap();
        let rho = |len: f64| {
            let opts = PicardOptions {
                max_piece: len,
                node_spacing: len / 8.0,
                ..Default::default()
            };
            let full = FullPropagator::with_tensor_free_part(m.clone(), BackendConfig::default(), &terms(), opts).unwrap();
            full.solve(&f, len, 0.0).unwrap().pieces[0].state.rho
        };
        let (a, b) = (rho(0.4), rho(0.2));
        assert!(b < a, "{b} !< {a}");
    }

    #[test]
    fn strong_coupling_bisects() {
        let mut m = two_body(16, 6.0);
        m.potentials[0] = PotentialTerm::power(ClusterSpec::new(&[1, 2], 1).unwrap(), 1.0, 0.25, 40.0);
        let opts = PicardOptions {
            node_spacing: 1.0 / 16.0,
            ..Default::default()
        };
        let full = FullPropagator::with_tensor_free_part(m.clone(), BackendConfig::default(), &terms(), opts).unwrap();
        let f = StateVector::gaussian(m.grid.clone(), &[-0.5, 0.5], 1.0, &[0.0, 0.0]).unwrap();
        let table = full.solve(&f, 0.5, 0.0).unwrap();
        assert!(table.pieces.len() > 1);
        let impossible = PicardOptions { min_length: 1.0, ..opts };
        let full = FullPropagator::with_tensor_free_part(m, BackendConfig::default(), &terms(), impossible).unwrap();
        assert!(matches!(full.solve(&f, 0.5, 0.0), Err(Error::NoContraction { .. })));
    }

    fn driven_oscillator() -> Model {
        let fields = FieldSpec::zero(1).with_scalar(ScalarTerm::RadialPower {
            coef: TimeCoef::Sinusoid {
                c0: 0.5,
                c1: 0.125,
                freq: 1.0,
            },
            s: 2.0,
        });
        Model::new(
            ParticleSystem::unit(1, 1).unwrap(),
            fields,
            Vec::new(),
            Arc::new(TensorGrid::uniform(1, 1, 8.0, 64).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn identities_at_coincident_times() {
        let m = driven_oscillator();
        let f = StateVector::gaussian(m.grid.clone(), &[0.3], 1.0, &[0.2]).unwrap();
        for kind in [IdentityKind::Id1, IdentityKind::Id2] {
            let r = identity_check(kind, &m, &f, 0.4, 0.4, &IdentityOptions::default()).unwrap();
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn static_identity_is_commutation() {
        let m = Model::new(
            ParticleSystem::unit(1, 1).unwrap(),
            FieldSpec::harmonic(1, 0.5),
            Vec::new(),
            Arc::new(TensorGrid::uniform(1, 1, 8.0, 64).unwrap()),
        )
        .unwrap();
        let f = StateVector::gaussian(m.grid.clone(), &[0.3], 1.0, &[0.2]).unwrap();
        let r = identity_check(IdentityKind::Id1, &m, &f, 1.0, 0.0, &IdentityOptions::default()).unwrap();
        assert!(r.residual < 1e-8, "{}", r.residual);
    }

    #[test]
    fn time_dependent_identities() {
        let m = driven_oscillator();
        let f = StateVector::gaussian(m.grid.clone(), &[0.3], 1.0, &[0.2]).unwrap();
        for kind in [IdentityKind::Id1, IdentityKind::Id2] {
            let r = identity_check(kind, &m, &f, 1.0, 0.0, &IdentityOptions::default()).unwrap();
            assert!(r.residual < 1e-5, "{kind:?}: {}", r.residual);
        }
    }
}
