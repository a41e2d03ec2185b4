//! External electromagnetic potentials and interaction potentials.
//!
//! Scalar and vector potentials are finite sums of named profiles with exact
//! derivatives. Radial powers `<x>^s = (1 + |x|^2)^{s/2}` are differentiated
//! through `d^alpha f(rho) = sum_k f^{(k)}(rho) P_k(x)` with polynomial `P_k`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::ClusterSpec;
use crate::geometry::{JacobiFrame, ParticleSystem};

/// Time modulation of a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeCoef {
    Const(f64),
    /// `c t`
    Linear(f64),
    /// `c0 + c1 sin(freq t)`
    Sinusoid {
        c0: f64,
        c1: f64,
        freq: f64,
    },
}

impl TimeCoef {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeCoef::Const(c) => c,
            TimeCoef::Linear(c) => c * t,
            TimeCoef::Sinusoid { c0, c1, freq } => c0 + c1 * (freq * t).sin(),
        }
    }

    pub fn dt(&self, t: f64) -> f64 {
        match *self {
            TimeCoef::Const(_) => 0.0,
            TimeCoef::Linear(c) => c,
            TimeCoef::Sinusoid { c1, freq, .. } => c1 * freq * (freq * t).cos(),
        }
    }

    pub fn is_static(&self) -> bool {
        match *self {
            TimeCoef::Const(_) => true,
            TimeCoef::Linear(c) => c == 0.0,
            TimeCoef::Sinusoid { c1, freq, .. } => c1 == 0.0 || freq == 0.0,
        }
    }

    fn is_zero(&self) -> bool {
        match *self {
            TimeCoef::Const(c) | TimeCoef::Linear(c) => c == 0.0,
            TimeCoef::Sinusoid { c0, c1, .. } => c0 == 0.0 && c1 == 0.0,
        }
    }

    /// Sum of two coefficients of the same shape, if representable.
    fn merged(&self, other: &TimeCoef) -> Option<TimeCoef> {
        match (*self, *other) {
            (TimeCoef::Const(a), TimeCoef::Const(b)) => Some(TimeCoef::Const(a + b)),
            (TimeCoef::Linear(a), TimeCoef::Linear(b)) => Some(TimeCoef::Linear(a + b)),
            (TimeCoef::Sinusoid { c0, c1, freq }, TimeCoef::Sinusoid { c0: d0, c1: d1, freq: g }) if freq == g => {
                Some(TimeCoef::Sinusoid {
                    c0: c0 + d0,
                    c1: c1 + d1,
                    freq,
                })
            }
            _ => None,
        }
    }
}

type Monomial = Vec<u8>;
type Poly = BTreeMap<Monomial, f64>;

fn falling(s_half: f64, k: usize) -> f64 {
    (0..k).map(|i| s_half - i as f64).product()
}

/// `d^alpha <x>^s` where `alpha[i]` counts derivatives along axis `i`.
pub fn radial_power_derivative(s: f64, alpha: &[usize], x: &[f64]) -> f64 {
    let d = x.len();
    let rho = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
    let order: usize = alpha.iter().sum();
    if order == 0 {
        return radial_power(s, x);
    }
    // terms[k] multiplies f^{(k)}(rho)
    let mut terms: Vec<Poly> = vec![Poly::from([(vec![0u8; d], 1.0)])];
    for (axis, &count) in alpha.iter().enumerate() {
        for _ in 0..count {
            let mut next: Vec<Poly> = vec![Poly::new(); terms.len() + 1];
            for (k, poly) in terms.iter().enumerate() {
                for (mono, c) in poly {
                    let mut up = mono.clone();
                    up[axis] += 1;
                    *next[k + 1].entry(up).or_insert(0.0) += 2.0 * c;
                    if mono[axis] > 0 {
                        let mut down = mono.clone();
                        let e = down[axis];
                        down[axis] -= 1;
                        *next[k].entry(down).or_insert(0.0) += c * e as f64;
                    }
                }
            }
            terms = next;
        }
    }
    let s_half = s / 2.0;
    let mut total = 0.0;
    for (k, poly) in terms.iter().enumerate() {
        if poly.is_empty() {
            continue;
        }
        let fk = falling(s_half, k);
        if fk == 0.0 {
            continue;
        }
        let p: f64 = poly
            .iter()
            .map(|(mono, c)| c * mono.iter().zip(x).map(|(&e, xi)| xi.powi(e as i32)).product::<f64>())
            .sum();
        total += fk * rho.powf(s_half - k as f64) * p;
    }
    total
}

/// `<x>^s`, exact for even integer `s`.
pub fn radial_power(s: f64, x: &[f64]) -> f64 {
    let rho = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
    if s == 0.0 {
        1.0
    } else if s == 2.0 {
        rho
    } else if s == 4.0 {
        rho * rho
    } else {
        rho.powf(s / 2.0)
    }
}

/// Closure profile `f(t, x)`; derivatives by fourth-order central differences.
pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
/// Closure vector field `A(t, x)` returning `d` components.
pub type VectorFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

const FD_STEP: f64 = 1e-2;

fn central_diff<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], alpha: &[usize]) -> f64 {
    let Some(axis) = alpha.iter().position(|&a| a > 0) else {
        return f(x);
    };
    let mut rest = alpha.to_vec();
    rest[axis] -= 1;
    let h = FD_STEP;
    let eval = |delta: f64| {
        let mut y = x.to_vec();
        y[axis] += delta;
        central_diff(f, &y, &rest)
    };
    (-eval(2.0 * h) + 8.0 * eval(h) - 8.0 * eval(-h) + eval(-2.0 * h)) / (12.0 * h)
}

#[derive(Clone)]
pub enum ScalarTerm {
    /// `coef(t) <x>^s`; `s = 0` is a constant, `s = 2` harmonic, `s = 4` quartic.
    RadialPower {
        coef: TimeCoef,
        s: f64,
    },
    /// `coef(t) E . x`
    Linear {
        field: Vec<f64>,
        coef: TimeCoef,
    },
    Custom {
        name: String,
        f: ScalarFn,
    },
}

impl fmt::Debug for ScalarTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarTerm::RadialPower { coef, s } => write!(f, "RadialPower({coef:?}, s = {s})"),
            ScalarTerm::Linear { field, coef } => write!(f, "Linear({field:?}, {coef:?})"),
            ScalarTerm::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ScalarTerm {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            ScalarTerm::RadialPower { coef, s } => coef.eval(t) * radial_power(*s, x),
            ScalarTerm::Linear { field, coef } => coef.eval(t) * field.iter().zip(x).map(|(e, xi)| e * xi).sum::<f64>(),
            ScalarTerm::Custom { f, .. } => f(t, x),
        }
    }

    fn derivative(&self, t: f64, x: &[f64], alpha: &[usize], time_order: usize) -> f64 {
        let order: usize = alpha.iter().sum();
        match self {
            ScalarTerm::RadialPower { coef, s } => {
                let c = if time_order == 0 { coef.eval(t) } else { coef.dt(t) };
                if c == 0.0 {
                    0.0
                } else {
                    c * radial_power_derivative(*s, alpha, x)
                }
            }
            ScalarTerm::Linear { field, coef } => {
                let c = if time_order == 0 { coef.eval(t) } else { coef.dt(t) };
                match order {
                    0 => c * field.iter().zip(x).map(|(e, xi)| e * xi).sum::<f64>(),
                    1 => c * field[alpha.iter().position(|&a| a == 1).unwrap()],
                    _ => 0.0,
                }
            }
            ScalarTerm::Custom { f, .. } => {
                if time_order == 0 {
                    central_diff(&|y: &[f64]| f(t, y), x, alpha)
                } else {
                    let h = FD_STEP;
                    let g = |tt: f64| central_diff(&|y: &[f64]| f(tt, y), x, alpha);
                    (-g(t + 2.0 * h) + 8.0 * g(t + h) - 8.0 * g(t - h) + g(t - 2.0 * h)) / (12.0 * h)
                }
            }
        }
    }

    fn is_static(&self) -> bool {
        match self {
            ScalarTerm::RadialPower { coef, .. } | ScalarTerm::Linear { coef, .. } => coef.is_static(),
            ScalarTerm::Custom { .. } => false,
        }
    }
}

#[derive(Clone)]
pub enum VectorTerm {
    /// `coef(t) grad <x>^s = coef(t) s x <x>^{s-2}`
    GradRadial {
        coef: TimeCoef,
        s: f64,
    },
    /// `coef(t) M x` with `M` row-major `d x d`; a constant magnetic field `B`
    /// in `d = 2` is `M = [[0, -B/2], [B/2, 0]]`.
    Linear {
        matrix: Vec<f64>,
        coef: TimeCoef,
    },
    Custom {
        name: String,
        f: VectorFn,
    },
}

impl fmt::Debug for VectorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorTerm::GradRadial { coef, s } => write!(f, "GradRadial({coef:?}, s = {s})"),
            VectorTerm::Linear { matrix, coef } => write!(f, "Linear({matrix:?}, {coef:?})"),
            VectorTerm::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl VectorTerm {
    /// `d^alpha A_k`, or `d^alpha d_t A_k` for `time_order = 1`.
    fn derivative(&self, t: f64, x: &[f64], k: usize, alpha: &[usize], time_order: usize) -> f64 {
        let d = x.len();
        match self {
            VectorTerm::GradRadial { coef, s } => {
                let c = if time_order == 0 { coef.eval(t) } else { coef.dt(t) };
                if c == 0.0 {
                    return 0.0;
                }
                let mut beta = alpha.to_vec();
                beta[k] += 1;
                c * radial_power_derivative(*s, &beta, x)
            }
            VectorTerm::Linear { matrix, coef } => {
                let c = if time_order == 0 { coef.eval(t) } else { coef.dt(t) };
                let order: usize = alpha.iter().sum();
                match order {
                    0 => c * (0..d).map(|j| matrix[k * d + j] * x[j]).sum::<f64>(),
                    1 => c * matrix[k * d + alpha.iter().position(|&a| a == 1).unwrap()],
                    _ => 0.0,
                }
            }
            VectorTerm::Custom { f, .. } => {
                if time_order == 0 {
                    central_diff(&|y: &[f64]| f(t, y)[k], x, alpha)
                } else {
                    let h = FD_STEP;
                    let g = |tt: f64| central_diff(&|y: &[f64]| f(tt, y)[k], x, alpha);
                    (-g(t + 2.0 * h) + 8.0 * g(t + h) - 8.0 * g(t - h) + g(t - 2.0 * h)) / (12.0 * h)
                }
            }
        }
    }

    fn add_value(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        match self {
            VectorTerm::GradRadial { coef, s } => {
                let c = coef.eval(t);
                if c == 0.0 || *s == 0.0 {
                    return;
                }
                let w = c * s * radial_power(s - 2.0, x);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += w * xi;
                }
            }
            VectorTerm::Linear { matrix, coef } => {
                let c = coef.eval(t);
                for (k, o) in out.iter_mut().enumerate() {
                    *o += c * (0..d).map(|j| matrix[k * d + j] * x[j]).sum::<f64>();
                }
            }
            VectorTerm::Custom { f, .. } => {
                for (o, v) in out.iter_mut().zip(f(t, x)) {
                    *o += v;
                }
            }
        }
    }

    fn is_symbolic(&self) -> bool {
        !matches!(self, VectorTerm::Custom { .. })
    }

    fn is_static(&self) -> bool {
        match self {
            VectorTerm::GradRadial { coef, .. } | VectorTerm::Linear { coef, .. } => coef.is_static(),
            VectorTerm::Custom { .. } => false,
        }
    }
}

/// Scalar potential `phi` and vector potential `A` acting on every particle.
#[derive(Clone, Debug, Default)]
pub struct FieldSpec {
    pub dim: usize,
    pub scalar: Vec<ScalarTerm>,
    pub vector: Vec<VectorTerm>,
}

impl FieldSpec {
    pub fn zero(dim: usize) -> Self {
        FieldSpec {
            dim,
            scalar: Vec::new(),
            vector: Vec::new(),
        }
    }

    /// `C <x>^2`.
    pub fn harmonic(dim: usize, c: f64) -> Self {
        FieldSpec::zero(dim).with_scalar(ScalarTerm::RadialPower {
            coef: TimeCoef::Const(c),
            s: 2.0,
        })
    }

    pub fn with_scalar(mut self, term: ScalarTerm) -> Self {
        self.push_scalar(term);
        self
    }

    pub fn with_vector(mut self, term: VectorTerm) -> Self {
        self.push_vector(term);
        self
    }

    /// Adds a term, merging it into a like term when possible so that
    /// opposite contributions cancel exactly.
    pub fn push_scalar(&mut self, term: ScalarTerm) {
        for existing in self.scalar.iter_mut() {
            let merged = match (&*existing, &term) {
                (ScalarTerm::RadialPower { coef: a, s: s1 }, ScalarTerm::RadialPower { coef: b, s: s2 }) if s1 == s2 => {
                    a.merged(b).map(|coef| ScalarTerm::RadialPower { coef, s: *s1 })
                }
                (ScalarTerm::Linear { field: f1, coef: a }, ScalarTerm::Linear { field: f2, coef: b }) if f1 == f2 => {
                    a.merged(b).map(|coef| ScalarTerm::Linear { field: f1.clone(), coef })
                }
                _ => None,
            };
            if let Some(m) = merged {
                *existing = m;
                self.scalar.retain(|t| !scalar_is_zero(t));
                return;
            }
        }
        if !scalar_is_zero(&term) {
            self.scalar.push(term);
        }
    }

    pub fn push_vector(&mut self, term: VectorTerm) {
        for existing in self.vector.iter_mut() {
            let merged = match (&*existing, &term) {
                (VectorTerm::GradRadial { coef: a, s: s1 }, VectorTerm::GradRadial { coef: b, s: s2 }) if s1 == s2 => {
                    a.merged(b).map(|coef| VectorTerm::GradRadial { coef, s: *s1 })
                }
                (VectorTerm::Linear { matrix: m1, coef: a }, VectorTerm::Linear { matrix: m2, coef: b }) if m1 == m2 => {
                    a.merged(b).map(|coef| VectorTerm::Linear { matrix: m1.clone(), coef })
                }
                _ => None,
            };
            if let Some(m) = merged {
                *existing = m;
                self.vector.retain(|t| !vector_is_zero(t));
                return;
            }
        }
        if !vector_is_zero(&term) {
            self.vector.push(term);
        }
    }

    pub fn phi(&self, t: f64, x: &[f64]) -> f64 {
        self.scalar.iter().map(|s| s.value(t, x)).sum()
    }

    pub fn vector_potential(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for v in &self.vector {
            v.add_value(t, x, &mut out);
        }
        out
    }

    pub fn has_vector_potential(&self) -> bool {
        !self.vector.is_empty()
    }

    /// True if neither potential depends on time.
    pub fn is_static(&self) -> bool {
        self.scalar.iter().all(ScalarTerm::is_static) && self.vector.iter().all(VectorTerm::is_static)
    }

    /// `d^alpha phi` (`time_order = 1` gives `d^alpha d_t phi`).
    pub fn phi_derivative(&self, t: f64, x: &[f64], alpha: &[usize], time_order: usize) -> f64 {
        self.scalar.iter().map(|s| s.derivative(t, x, alpha, time_order)).sum()
    }

    /// `d^alpha A_k`.
    pub fn a_derivative(&self, t: f64, x: &[f64], k: usize, alpha: &[usize], time_order: usize) -> f64 {
        self.vector.iter().map(|v| v.derivative(t, x, k, alpha, time_order)).sum()
    }
}

fn scalar_is_zero(t: &ScalarTerm) -> bool {
    match t {
        ScalarTerm::RadialPower { coef, .. } => coef.is_zero(),
        ScalarTerm::Linear { field, coef } => coef.is_zero() || field.iter().all(|e| *e == 0.0),
        ScalarTerm::Custom { .. } => false,
    }
}

fn vector_is_zero(t: &VectorTerm) -> bool {
    match t {
        VectorTerm::GradRadial { coef, s } => coef.is_zero() || *s == 0.0,
        VectorTerm::Linear { matrix, coef } => coef.is_zero() || matrix.iter().all(|e| *e == 0.0),
        VectorTerm::Custom { .. } => false,
    }
}

/// Skew matrix `B_{jk} = d_j A_k - d_k A_j` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagneticField {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl MagneticField {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.dim + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |B_jk + B_kj|`.
    pub fn skew_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for j in 0..d {
            for k in 0..d {
                worst = worst.max((self.get(j, k) + self.get(k, j)).abs());
            }
        }
        worst
    }
}

/// `B` with spatial derivatives `alpha` applied to every entry.
pub fn magnetic_field_derivative(fields: &FieldSpec, t: f64, x: &[f64], alpha: &[usize]) -> MagneticField {
    let d = x.len();
    let mut data = vec![0.0; d * d];
    for term in &fields.vector {
        for j in 0..d {
            for k in 0..d {
                if j == k && term.is_symbolic() {
                    continue;
                }
                let mut aj = alpha.to_vec();
                aj[j] += 1;
                let mut ak = alpha.to_vec();
                ak[k] += 1;
                data[j * d + k] += term.derivative(t, x, k, &aj, 0) - term.derivative(t, x, j, &ak, 0);
            }
        }
    }
    MagneticField { dim: d, data }
}

pub fn magnetic_field(fields: &FieldSpec, t: f64, x: &[f64]) -> MagneticField {
    magnetic_field_derivative(fields, t, x, &vec![0; x.len()])
}

/// `phi + C <x>^2`, `A - 2 t C x`.
pub fn gauge_transform_fields(fields: &FieldSpec, c: f64) -> FieldSpec {
    let mut out = fields.clone();
    out.push_scalar(ScalarTerm::RadialPower {
        coef: TimeCoef::Const(c),
        s: 2.0,
    });
    // grad <x>^2 = 2x, so -2tCx = (-C t) grad <x>^2.
    out.push_vector(VectorTerm::GradRadial {
        coef: TimeCoef::Linear(-c),
        s: 2.0,
    });
    out
}

/// A pure phase `exp(i e_j theta(t, x_j))` applied to every particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GaugeTransform {
    /// `theta = C t <x>^2`
    Harmonic { c: f64 },
    /// `theta = t <x>^sigma`
    Sigma { sigma: f64 },
}

impl GaugeTransform {
    pub fn theta(&self, t: f64, x: &[f64]) -> f64 {
        match *self {
            GaugeTransform::Harmonic { c } => c * t * radial_power(2.0, x),
            GaugeTransform::Sigma { sigma } => t * radial_power(sigma, x),
        }
    }

    /// Total phase at a configuration point.
    pub fn phase(&self, system: &ParticleSystem, t: f64, x: &[f64]) -> f64 {
        (0..system.n_particles())
            .map(|j| system.charge(j) * self.theta(t, system.particle(x, j)))
            .sum()
    }
}

/// The sigma example: fields of `H_C(t)`, of `H_{C,0}`, and the gauge phase.
#[derive(Debug, Clone)]
pub struct SigmaExample {
    pub sigma: f64,
    pub c: f64,
    pub h_c: FieldSpec,
    pub h_c0: FieldSpec,
    pub gauge: GaugeTransform,
}

/// `H_C(t) = 1/2 (-i grad + t grad <x>^sigma)^2 + C <x>^sigma`, which in the
/// convention `(p - eA)^2` with `e = 1` means `A = -t grad <x>^sigma`.
pub fn sigma_example(dim: usize, sigma: f64, c: f64) -> Result<SigmaExample> {
    if !(sigma >= 0.0) {
        return Err(Error::OutOfRange(format!("sigma = {sigma} must be >= 0")));
    }
    let phi = ScalarTerm::RadialPower {
        coef: TimeCoef::Const(c),
        s: sigma,
    };
    let h_c0 = FieldSpec::zero(dim).with_scalar(phi.clone());
    let h_c = h_c0.clone().with_vector(VectorTerm::GradRadial {
        coef: TimeCoef::Linear(-1.0),
        s: sigma,
    });
    Ok(SigmaExample {
        sigma,
        c,
        h_c,
        h_c0,
        gauge: GaugeTransform::Sigma { sigma },
    })
}

/// A point charge `Z` moving along `y(t) = y0 + v t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MovingCenter {
    pub strength: f64,
    pub origin: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl MovingCenter {
    pub fn fixed(strength: f64, origin: Vec<f64>) -> Self {
        let velocity = vec![0.0; origin.len()];
        MovingCenter {
            strength,
            origin,
            velocity,
        }
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        self.origin.iter().zip(&self.velocity).map(|(y, v)| y + v * t).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PotentialProfile {
    /// `sum_l Z_l (|x - y_l(t)|^2 + eps^2)^{-gamma/2}` in the relative coordinate.
    Centers {
        gamma: f64,
        epsilon: f64,
        centers: Vec<MovingCenter>,
    },
    /// `Z exp(-|x|^2 / (2 w^2))`
    Gaussian { strength: f64, width: f64 },
}

/// One cluster potential `V_D(t, x_{D,r})`.
#[derive(Debug, Clone)]
pub struct PotentialTerm {
    pub cluster: ClusterSpec,
    pub profile: PotentialProfile,
}

impl PotentialTerm {
    /// `Z (|x_{D,r}|^2 + eps^2)^{-gamma/2}`.
    pub fn power(cluster: ClusterSpec, gamma: f64, epsilon: f64, strength: f64) -> Self {
        let width = cluster.relative_dimension();
        PotentialTerm {
            cluster,
            profile: PotentialProfile::Centers {
                gamma,
                epsilon,
                centers: vec![MovingCenter::fixed(strength, vec![0.0; width])],
            },
        }
    }

    pub fn gamma(&self) -> f64 {
        match &self.profile {
            PotentialProfile::Centers { gamma, .. } => *gamma,
            PotentialProfile::Gaussian { .. } => 0.0,
        }
    }

    pub fn is_static(&self) -> bool {
        match &self.profile {
            PotentialProfile::Centers { centers, .. } => centers.iter().all(|c| c.velocity.iter().all(|v| *v == 0.0)),
            PotentialProfile::Gaussian { .. } => true,
        }
    }

    /// Upper bound `eps^{-gamma} sum |Z_l|` (or `|Z|` for Gaussians).
    pub fn sup_bound(&self) -> f64 {
        match &self.profile {
            PotentialProfile::Centers { gamma, epsilon, centers } => {
                epsilon.powf(-gamma) * centers.iter().map(|c| c.strength.abs()).sum::<f64>()
            }
            PotentialProfile::Gaussian { strength, .. } => strength.abs(),
        }
    }

    /// Value at a point of the relative coordinate.
    pub fn eval_relative(&self, t: f64, r: &[f64]) -> Result<f64> {
        match &self.profile {
            PotentialProfile::Centers { gamma, epsilon, centers } => {
                let mut total = 0.0;
                for c in centers {
                    if c.origin.len() != r.len() {
                        return Err(Error::DimensionMismatch {
                            expected: r.len(),
                            got: c.origin.len(),
                        });
                    }
                    if *gamma == 0.0 {
                        total += c.strength;
                        continue;
                    }
                    let dist2: f64 = c.position(t).iter().zip(r).map(|(y, x)| (x - y) * (x - y)).sum();
                    if *epsilon == 0.0 && dist2 == 0.0 {
                        return Err(Error::SingularEvaluation { distance: 0.0 });
                    }
                    let q = dist2 + epsilon * epsilon;
                    let v = if *gamma == 1.0 {
                        1.0 / q.sqrt()
                    } else if *gamma == 2.0 {
                        1.0 / q
                    } else {
                        q.powf(-gamma / 2.0)
                    };
                    total += c.strength * v;
                }
                Ok(total)
            }
            PotentialProfile::Gaussian { strength, width } => {
                let r2: f64 = r.iter().map(|v| v * v).sum();
                Ok(strength * (-r2 / (2.0 * width * width)).exp())
            }
        }
    }
}

/// Evaluates `V_D(t, x_{D,r})` at a full configuration point.
pub fn eval_v(term: &PotentialTerm, system: &ParticleSystem, t: f64, x: &[f64]) -> Result<f64> {
    let frame = JacobiFrame::new(system, &term.cluster)?;
    let r = frame.relative(system, x)?;
    term.eval_relative(t, &r)
}

/// Options for [`assumption_scan`].
#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Half-widths of the nested sample boxes, increasing.
    pub boxes: Vec<f64>,
    pub samples_per_axis: usize,
    pub times: Vec<f64>,
    /// Highest derivative order examined (at most 3).
    pub max_order: usize,
    /// Decay weight exponent for derivatives of `B`.
    pub eps_alpha: f64,
    /// A check is flagged when its sup grows by more than this factor
    /// from the smallest to the largest box while increasing monotonically.
    pub growth_factor: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            boxes: vec![2.0, 4.0, 8.0, 16.0],
            samples_per_axis: 17,
            times: vec![0.0, 0.5, 1.0],
            max_order: 3,
            eps_alpha: 0.5,
            growth_factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanCheck {
    pub name: String,
    pub description: String,
    /// Sampled supremum per box.
    pub sups: Vec<f64>,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub boxes: Vec<f64>,
    pub times: Vec<f64>,
    pub eps_alpha: f64,
    pub checks: Vec<ScanCheck>,
}

impl ScanReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.violation)
    }

    pub fn check(&self, name: &str) -> Option<&ScanCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn multi_indices(d: usize, order: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![order]];
    }
    let mut out = Vec::new();
    for first in (0..=order).rev() {
        for mut rest in multi_indices(d - 1, order - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn box_points(d: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    let n = n.max(2);
    let axis: Vec<f64> = (0..n).map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64).collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..d {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    pts
}

/// Samples the smoothness and growth hypotheses on the external fields over
/// nested boxes and flags quantities whose sampled sup keeps growing.
pub fn assumption_scan(fields: &FieldSpec, opts: &ScanOptions) -> ScanReport {
    let d = fields.dim.max(1);
    let max_order = opts.max_order.min(3);
    type Probe<'a> = Box<dyn Fn(f64, &[f64]) -> f64 + 'a>;
    let mut probes: Vec<(&str, String, Probe)> = Vec::new();

    let phi_orders: Vec<Vec<usize>> = (2..=max_order.max(2)).flat_map(|o| multi_indices(d, o)).collect();
    probes.push((
        "phi-derivatives",
        format!("sup |d^a phi|, 2 <= |a| <= {}", max_order.max(2)),
        Box::new(move |t, x| {
            phi_orders
                .iter()
                .map(|a| fields.phi_derivative(t, x, a, 0).abs())
                .fold(0.0, f64::max)
        }),
    ));

    let b_orders: Vec<Vec<usize>> = (1..=max_order.max(1)).flat_map(|o| multi_indices(d, o)).collect();
    let eps = opts.eps_alpha;
    probes.push((
        "b-decay",
        format!("sup <x>^(1+{eps}) |d^a B|, 1 <= |a| <= {}", max_order.max(1)),
        Box::new(move |t, x| {
            let w = radial_power(1.0 + eps, x);
            b_orders
                .iter()
                .map(|a| w * magnetic_field_derivative(fields, t, x, a).max_abs())
                .fold(0.0, f64::max)
        }),
    ));

    let a_orders: Vec<Vec<usize>> = (1..=max_order.max(1)).flat_map(|o| multi_indices(d, o)).collect();
    probes.push((
        "a-derivatives",
        format!("sup |d^a A| + |d^a d_t A|, 1 <= |a| <= {}", max_order.max(1)),
        Box::new(move |t, x| {
            let mut worst = 0.0f64;
            for a in &a_orders {
                for k in 0..d {
                    let v = fields.a_derivative(t, x, k, a, 0).abs() + fields.a_derivative(t, x, k, a, 1).abs();
                    worst = worst.max(v);
                }
            }
            worst
        }),
    ));

    let zero = vec![0usize; d];
    probes.push((
        "phi-time-growth",
        "sup |d_t phi| / <x>^2".to_string(),
        Box::new(move |t, x| fields.phi_derivative(t, x, &zero, 1).abs() / radial_power(2.0, x)),
    ));

    let point_sets: Vec<Vec<Vec<f64>>> = opts.boxes.iter().map(|&r| box_points(d, r, opts.samples_per_axis)).collect();

    let checks = probes
        .into_iter()
        .map(|(name, description, probe)| {
            let sups: Vec<f64> = point_sets
                .iter()
                .map(|pts| {
                    let mut sup = 0.0f64;
                    for &t in &opts.times {
                        for p in pts {
                            sup = sup.max(probe(t, p));
                        }
                    }
                    sup
                })
                .collect();
            let increasing = sups.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-9));
            let first = sups.first().copied().unwrap_or(0.0);
            let last = sups.last().copied().unwrap_or(0.0);
            let violation = sups.len() >= 2 && increasing && last > opts.growth_factor * first.max(1e-300);
            ScanCheck {
                name: name.to_string(),
                description,
                sups,
                violation,
            }
        })
        .collect();

    ScanReport {
        boxes: opts.boxes.clone(),
        times: opts.times.clone(),
        eps_alpha: opts.eps_alpha,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radial_derivatives_match_closed_forms() {
        let x = [0.7];
        // <x>^2 = 1 + x^2
        assert_relative_eq!(radial_power_derivative(2.0, &[1], &x), 1.4, epsilon = 1e-14);
        assert_relative_eq!(radial_power_derivative(2.0, &[2], &x), 2.0, epsilon = 1e-14);
        assert_eq!(radial_power_derivative(2.0, &[3], &x), 0.0);
        // <x>^4 = (1 + x^2)^2, second derivative 4 + 12 x^2
        assert_relative_eq!(radial_power_derivative(4.0, &[2], &x), 4.0 + 12.0 * 0.49, epsilon = 1e-13);
        // <x>^1 derivative x / <x>
        let r = (1.0f64 + 0.49).sqrt();
        assert_relative_eq!(radial_power_derivative(1.0, &[1], &x), 0.7 / r, epsilon = 1e-14);
        // mixed partial of <x>^3 in 2-d: 3 x y <x>^{-1}
        let p = [0.3, -1.1];
        let rho: f64 = 1.0 + 0.09 + 1.21;
        assert_relative_eq!(
            radial_power_derivative(3.0, &[1, 1], &p),
            3.0 * 0.3 * -1.1 / rho.sqrt(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn constant_magnetic_field_from_linear_potential() {
        let b = 1.7;
        let fields = FieldSpec::zero(2).with_vector(VectorTerm::Linear {
            matrix: vec![0.0, -b / 2.0, b / 2.0, 0.0],
            coef: TimeCoef::Const(1.0),
        });
        let m = magnetic_field(&fields, 0.3, &[0.4, -2.0]);
        assert_eq!(m.get(0, 1), b);
        assert_eq!(m.get(1, 0), -b);
        assert_eq!(m.skew_defect(), 0.0);
    }

    #[test]
    fn gradient_potentials_have_no_magnetic_field() {
        let ex = sigma_example(3, 2.5, 1.0).unwrap();
        let m = magnetic_field(&ex.h_c, 1.3, &[0.2, -0.4, 1.5]);
        assert!(m.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn custom_vector_potential_curl_by_differences() {
        let fields = FieldSpec::zero(2).with_vector(VectorTerm::Custom {
            name: "swirl".into(),
            f: Arc::new(|_, x: &[f64]| vec![-x[1] * x[1] * x[1], x[0]]),
        });
        let m = magnetic_field(&fields, 0.0, &[0.5, 0.5]);
        assert!((m.get(0, 1) - (1.0 + 3.0 * 0.25)).abs() < 1e-9);
        assert!(m.skew_defect() < 1e-6);
    }

    #[test]
    fn gauge_transform_examples() {
        let g = gauge_transform_fields(&FieldSpec::zero(1), 1.0);
        assert_eq!(g.phi(0.0, &[2.0]), 5.0);
        assert_eq!(g.vector_potential(0.5, &[2.0]), vec![-2.0]);

        let id = gauge_transform_fields(&FieldSpec::harmonic(1, 0.5), 0.0);
        assert_eq!(id.scalar.len(), 1);
        assert!(id.vector.is_empty());

        let base = FieldSpec::harmonic(2, 0.5).with_vector(VectorTerm::GradRadial {
            coef: TimeCoef::Linear(0.25),
            s: 2.0,
        });
        let back = gauge_transform_fields(&gauge_transform_fields(&base, 0.8), -0.8);
        for (t, x) in [(0.0, [0.0, 0.0]), (0.7, [1.5, -2.5]), (3.0, [-4.0, 0.1])] {
            assert_eq!(back.phi(t, &x), base.phi(t, &x));
            assert_eq!(back.vector_potential(t, &x), base.vector_potential(t, &x));
        }
    }

    #[test]
    fn sigma_example_limits() {
        let ex = sigma_example(1, 2.0, 1.0).unwrap();
        assert_eq!(ex.h_c0.phi(0.0, &[1.0]), 2.0);
        assert_eq!(ex.h_c.vector_potential(0.0, &[1.0]), vec![0.0]);
        assert_eq!(ex.h_c.vector_potential(1.0, &[1.0]), vec![-2.0]);
        let flat = sigma_example(1, 0.0, 3.0).unwrap();
        assert!(flat.h_c.vector.is_empty());
        assert_eq!(flat.h_c.phi(0.0, &[5.0]), 3.0);
    }

    #[test]
    fn potential_examples() {
        let c = ClusterSpec::new(&[1], 3).unwrap();
        let flat = PotentialTerm::power(c.clone(), 0.0, 0.0, 2.5);
        assert_eq!(flat.eval_relative(0.0, &[0.0, 0.0, 0.0]).unwrap(), 2.5);

        let coulomb = PotentialTerm::power(c.clone(), 1.0, 0.0, 1.0);
        assert_eq!(coulomb.eval_relative(0.0, &[2.0, 0.0, 0.0]).unwrap(), 0.5);

        let moving = PotentialTerm {
            cluster: c,
            profile: PotentialProfile::Centers {
                gamma: 1.0,
                epsilon: 0.0,
                centers: vec![MovingCenter {
                    strength: 1.0,
                    origin: vec![0.0; 3],
                    velocity: vec![1.0, 0.0, 0.0],
                }],
            },
        };
        assert!(matches!(
            moving.eval_relative(1.0, &[1.0, 0.0, 0.0]),
            Err(Error::SingularEvaluation { .. })
        ));
    }

    #[test]
    fn two_body_potential_uses_separation() {
        let sys = ParticleSystem::unit(2, 1).unwrap();
        let term = PotentialTerm::power(ClusterSpec::new(&[1, 2], 1).unwrap(), 1.0, 0.25, 1.0);
        let v = eval_v(&term, &sys, 0.0, &[-1.0, 1.0]).unwrap();
        assert_relative_eq!(v, 1.0 / (4.0f64 + 0.0625).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn scan_flags_quartic_only() {
        let opts = ScanOptions::default();
        assert!(assumption_scan(&FieldSpec::harmonic(1, 1.0), &opts).passed());
        let quartic = FieldSpec::zero(1).with_scalar(ScalarTerm::RadialPower {
            coef: TimeCoef::Const(1.0),
            s: 4.0,
        });
        let report = assumption_scan(&quartic, &opts);
        assert!(report.check("phi-derivatives").unwrap().violation);
        let linear_a = FieldSpec::zero(2).with_vector(VectorTerm::Linear {
            matrix: vec![0.0, -0.5, 0.5, 0.0],
            coef: TimeCoef::Const(1.0),
        });
        let r = assumption_scan(&linear_a, &opts);
        assert!(r.passed());
        assert_eq!(r.check("b-decay").unwrap().sups, vec![0.0; 4]);
    }
}
