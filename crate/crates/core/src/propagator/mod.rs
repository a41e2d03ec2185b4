//! Numerical propagators `U(t, s)`: exponential and split-step backends,
//! tensor products of single-particle factors, closed-form kernels.

mod dispersive;
mod kernel;
mod tensor;

pub use dispersive::{dispersive_decay_fit, DispersiveOptions, DispersiveReport};
pub use kernel::ExactKernel;
pub use tensor::{apply_axis_group, TensorPropagator};

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Spectral;
use crate::hamiltonian::{Model, OperatorMatrix, DEFAULT_DENSE_CAP};
use crate::linalg::{self, HermitianEigen, KrylovOptions};
use crate::state::StateVector;

type C = Complex64;

/// Relative norm drift tolerated in a single step.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// Anything that maps `u` at time `s` to a state at time `t`.
pub trait Propagate: Send + Sync {
    fn propagate(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector>;

    fn label(&self) -> String;
}

/// States `U(t_k, t_0) f` at every node, stepping node to node.
pub fn trajectory(prop: &dyn Propagate, f: &StateVector, nodes: &[f64]) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = Vec::with_capacity(nodes.len());
    for (k, &t) in nodes.iter().enumerate() {
        let next = match out.last() {
            None => f.clone(),
            Some(prev) => prop.propagate(prev, t, nodes[k - 1])?,
        };
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Dense,
    Krylov,
    SplitStep,
}

impl BackendKind {
    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::Dense => "dense",
            BackendKind::Krylov => "krylov",
            BackendKind::SplitStep => "split-step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub dt: f64,
    pub magnus_order: u8,
    pub krylov_dim: usize,
    pub krylov_tol: f64,
    pub dense_cap: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Dense,
            dt: 1e-2,
            magnus_order: 2,
            krylov_dim: 30,
            krylov_tol: 1e-12,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl BackendConfig {
    pub fn with_kind(kind: BackendKind, dt: f64) -> Self {
        BackendConfig {
            kind,
            dt,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("time step {} must be positive", self.dt)));
        }
        if !matches!(self.magnus_order, 1 | 2) {
            return Err(Error::Config(format!("Magnus order {} (expected 1 or 2)", self.magnus_order)));
        }
        if self.krylov_dim < 2 || !(self.krylov_tol > 0.0) {
            return Err(Error::Config("Krylov dimension >= 2 and positive tolerance required".into()));
        }
        Ok(())
    }

    fn krylov_options(&self) -> KrylovOptions {
        KrylovOptions {
            max_dim: self.krylov_dim,
            tol: self.krylov_tol,
            ..Default::default()
        }
    }
}

enum StaticCache {
    Eigen(HermitianEigen),
    General(DMatrix<C>),
    Sparse(OperatorMatrix),
}

/// Single-model evolution with one backend.
pub struct Evolver {
    model: Model,
    config: BackendConfig,
    spectral: Option<Spectral>,
    cache: OnceLock<std::result::Result<StaticCache, Error>>,
}

impl std::fmt::Debug for Evolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evolver").field("config", &self.config).finish()
    }
}

fn check_drift(backend: BackendKind, before: f64, after: f64) -> Result<()> {
    if before > 0.0 {
        let drift = (after - before).abs() / before;
        if !(drift <= DRIFT_LIMIT) {
            return Err(Error::Instability {
                backend: backend.name().into(),
                drift,
            });
        }
    }
    Ok(())
}

impl Evolver {
    pub fn new(model: Model, config: BackendConfig) -> Result<Self> {
        config.validate()?;
        let dim = model.grid.len();
        let spectral = match config.kind {
            BackendKind::SplitStep => {
                if model.has_vector_potential() {
                    return Err(Error::UnsupportedField {
                        backend: "split-step".into(),
                        reason: "vector potential present; use an exponential backend".into(),
                    });
                }
                Some(Spectral::new(&model.grid))
            }
            BackendKind::Dense if dim > config.dense_cap => {
                return Err(Error::DimensionCap {
                    dim,
                    cap: config.dense_cap,
                })
            }
            _ => None,
        };
        Ok(Evolver {
            model,
            config,
            spectral,
            cache: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn generator_time(&self, t: f64, dt: f64) -> f64 {
        if self.config.magnus_order == 2 {
            t + dt / 2.0
        } else {
            t
        }
    }

    fn static_cache(&self) -> Result<&StaticCache> {
        let cached = self.cache.get_or_init(|| {
            let h = self.model.hamiltonian(0.0)?;
            Ok(match self.config.kind {
                BackendKind::Dense => {
                    let dense = h.to_dense(self.config.dense_cap)?;
                    if h.is_hermitian() {
                        StaticCache::Eigen(HermitianEigen::new(&dense))
                    } else {
                        StaticCache::General(dense)
                    }
                }
                _ => StaticCache::Sparse(h),
            })
        });
        cached.as_ref().map_err(|e| e.clone())
    }

    fn exact_static(&self, v: &[C], tau: f64) -> Result<Vec<C>> {
        match self.static_cache()? {
            StaticCache::Eigen(e) => Ok(e.apply(tau, v)),
            StaticCache::General(h) => Ok(dense_exp_apply(h, tau, v)),
            StaticCache::Sparse(h) => linalg::krylov_expmv(|x| h.matvec(x), v, tau, self.config.krylov_options()),
        }
    }

    fn raw_step(&self, v: &[C], t: f64, dt: f64) -> Result<Vec<C>> {
        let tg = self.generator_time(t, dt);
        match self.config.kind {
            BackendKind::Dense => {
                let h = self.model.hamiltonian(tg)?;
                let dense = h.to_dense(self.config.dense_cap)?;
                if h.is_hermitian() {
                    Ok(HermitianEigen::new(&dense).apply(dt, v))
                } else {
                    Ok(dense_exp_apply(&dense, dt, v))
                }
            }
            BackendKind::Krylov => {
                let h = self.model.hamiltonian(tg)?;
                linalg::krylov_expmv(|x| h.matvec(x), v, dt, self.config.krylov_options())
            }
            BackendKind::SplitStep => self.split_step(v, tg, dt),
        }
    }

    /// Strang splitting `e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}`.
    fn split_step(&self, v: &[C], tg: f64, dt: f64) -> Result<Vec<C>> {
        let spectral = self.spectral.as_ref().expect("split-step has a spectral plan");
        let diag = self.model.diagonal_values(tg)?;
        let kappa = self.model.non_hermitian;
        let half: Vec<C> = diag.iter().map(|&p| (C::new(-kappa, -p) * (dt / 2.0)).exp()).collect();
        let mut out: Vec<C> = v.iter().zip(&half).map(|(a, b)| a * b).collect();
        let grid = &*self.model.grid;
        let d = grid.dim();
        for a in 0..grid.n_axes() {
            let axis = grid.axis(a);
            let m = self.model.system.mass(a / d);
            let mult: Vec<C> = axis
                .wavenumbers()
                .iter()
                .map(|k| C::from_polar(1.0, -dt * k * k / (2.0 * m)))
                .collect();
            spectral.multiply(&mut out, a, &mult);
        }
        out.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
        Ok(out)
    }

    /// One step `t -> t + dt` (signed `dt`).
    pub fn step(&self, u: &StateVector, t: f64, dt: f64) -> Result<StateVector> {
        if dt == 0.0 {
            return Ok(u.clone());
        }
        let out = if self.model.is_static() && self.config.kind != BackendKind::SplitStep {
            self.exact_static(u.data(), dt)?
        } else {
            self.raw_step(u.data(), t, dt)?
        };
        check_drift(self.config.kind, u.norm(), linalg::norm(&out) * u.grid().cell_volume().sqrt())?;
        u.with_data(out)
    }

    /// `U(t, s) u` by steps of at most `dt`; static exponential backends
    /// apply the exact exponential in one go.
    pub fn evolve(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        if t == s {
            return Ok(u.clone());
        }
        if self.model.is_static() && self.config.kind != BackendKind::SplitStep {
            return self.step(u, s, t - s);
        }
        let n = steps_for(t - s, self.config.dt);
        let h = (t - s) / n as f64;
        let mut cur = u.clone();
        for k in 0..n {
            cur = self.step(&cur, s + k as f64 * h, h)?;
        }
        Ok(cur)
    }

    /// Dense matrix of `U(t, s)`; requires the dense backend.
    pub fn propagator_matrix(&self, t: f64, s: f64) -> Result<DMatrix<C>> {
        let dim = self.model.grid.len();
        if self.config.kind != BackendKind::Dense {
            return Err(Error::Config("propagator matrices need the dense backend".into()));
        }
        if t == s {
            return Ok(DMatrix::identity(dim, dim));
        }
        if self.model.is_static() {
            return Ok(match self.static_cache()? {
                StaticCache::Eigen(e) => e.propagator(t - s),
                StaticCache::General(h) => (h * C::new(0.0, -(t - s))).exp(),
                StaticCache::Sparse(_) => unreachable!("dense backend caches dense data"),
            });
        }
        let n = steps_for(t - s, self.config.dt);
        let h = (t - s) / n as f64;
        let mut total = DMatrix::identity(dim, dim);
        for k in 0..n {
            let tg = self.generator_time(s + k as f64 * h, h);
            let hm = self.model.hamiltonian(tg)?;
            let dense = hm.to_dense(self.config.dense_cap)?;
            let step = if hm.is_hermitian() {
                HermitianEigen::new(&dense).propagator(h)
            } else {
                (dense * C::new(0.0, -h)).exp()
            };
            total = step * total;
        }
        Ok(total)
    }
}

impl Propagate for Evolver {
    fn propagate(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        self.evolve(u, t, s)
    }

    fn label(&self) -> String {
        format!(
            "{} (dt = {}, magnus {})",
            self.config.kind.name(),
            self.config.dt,
            self.config.magnus_order
        )
    }
}

/// Number of equal substeps of size at most `dt` covering `span`.
pub fn steps_for(span: f64, dt: f64) -> usize {
    ((span.abs() / dt) - 1e-9).ceil().max(1.0) as usize
}

fn dense_exp_apply(h: &DMatrix<C>, tau: f64, v: &[C]) -> Vec<C> {
    let u = (h * C::new(0.0, -tau)).exp();
    (u * DVector::from_column_slice(v)).as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::field::FieldSpec;
    use crate::geometry::ParticleSystem;
    use crate::grid::TensorGrid;

    fn model(fields: FieldSpec, extent: f64, points: usize) -> Model {
        let grid = Arc::new(TensorGrid::uniform(1, 1, extent, points).unwrap());
        Model::new(ParticleSystem::unit(1, 1).unwrap(), fields, Vec::new(), grid).unwrap()
    }

    fn gaussian(m: &Model, center: f64) -> StateVector {
        StateVector::gaussian(m.grid.clone(), &[center], 1.0, &[0.0]).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let m = model(FieldSpec::zero(1), 10.0, 64);
        let u = gaussian(&m, 0.5);
        for kind in [BackendKind::Dense, BackendKind::Krylov, BackendKind::SplitStep] {
            let ev = Evolver::new(m.clone(), BackendConfig::with_kind(kind, 0.1)).unwrap();
            assert_eq!(ev.step(&u, 0.3, 0.0).unwrap(), u);
        }
    }

    #[test]
    fn free_gaussian_variance() {
        let m = model(FieldSpec::zero(1), 16.0, 256);
        let ev = Evolver::new(m.clone(), BackendConfig::default()).unwrap();
        let u = gaussian(&m, 0.0);
        for t in [0.5, 1.0, 2.0] {
            let v = ev.evolve(&u, t, 0.0).unwrap();
            let exact = (1.0 + t * t) / 2.0;
            assert!((v.position_variance(0) - exact).abs() / exact < 1e-6);
        }
    }

    #[test]
    fn oscillator_period_flips_sign() {
        // 1/2 <x>^2 - 1/2 = 1/2 x^2
        let fields = FieldSpec::harmonic(1, 0.5).with_scalar(crate::field::ScalarTerm::RadialPower {
            coef: crate::field::TimeCoef::Const(-0.5),
            s: 0.0,
        });
        let m = model(fields, 12.0, 128);
        let u = gaussian(&m, 1.0);
        let dense = Evolver::new(m.clone(), BackendConfig::default()).unwrap();
        let v = dense.evolve(&u, 2.0 * PI, 0.0).unwrap();
        assert!(v.distance(&u.scaled(C::new(-1.0, 0.0))).unwrap() < 1e-6);
        let split = Evolver::new(m, BackendConfig::with_kind(BackendKind::SplitStep, 1e-3)).unwrap();
        let w = split.evolve(&u, 2.0 * PI, 0.0).unwrap();
        assert!(w.distance(&u.scaled(C::new(-1.0, 0.0))).unwrap() < 1e-4);
    }

    #[test]
    fn split_step_rejects_vector_potential() {
        let fields = FieldSpec::zero(1).with_vector(crate::field::VectorTerm::GradRadial {
            coef: crate::field::TimeCoef::Linear(1.0),
            s: 2.0,
        });
        let err = Evolver::new(model(fields, 8.0, 32), BackendConfig::with_kind(BackendKind::SplitStep, 0.1)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedField { .. }));
    }

    #[test]
    fn broken_hermiticity_trips_drift_guard() {
        let mut m = model(FieldSpec::harmonic(1, 0.5), 8.0, 32);
        m.non_hermitian = 0.05;
        let u = gaussian(&m, 0.0);
        for kind in [BackendKind::Dense, BackendKind::Krylov, BackendKind::SplitStep] {
            let ev = Evolver::new(m.clone(), BackendConfig::with_kind(kind, 0.1)).unwrap();
            let err = ev.evolve(&u, 1.0, 0.0).unwrap_err();
            assert!(
                matches!(err, Error::Instability { ref backend, .. } if backend == kind.name()),
                "{err}"
            );
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let mut cfg = BackendConfig::default();
        cfg.dense_cap = 16;
        let err = Evolver::new(model(FieldSpec::zero(1), 8.0, 32), cfg).unwrap_err();
        assert_eq!(err, Error::DimensionCap { dim: 32, cap: 16 });
    }

    #[test]
    fn steps_cover_span() {
        assert_eq!(steps_for(1.0, 0.1), 10);
        assert_eq!(steps_for(-1.0, 0.3), 4);
        assert_eq!(steps_for(1e-3, 0.1), 1);
    }
}
