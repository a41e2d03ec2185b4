//! Mixed norms `L^{p,q}_D`, space-time norms, the `X(I)` / `Y(I)` norms,
//! witness bounds for their duals and empirical Strichartz ratios.
//!
//! For a cluster `D` with `|D| >= 2` the outer variable is the vector of
//! grid index differences `i_j - i_{j_1}` (`j` in `D`, per component): this
//! is the Jacobi relative coordinate of the unit-Jacobian frame, so the
//! quadrature weights factor as `h^{n_D}` outside and the rest inside.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{is_admissible, strichartz_pair, ClusterSpec, Exponent};
use crate::grid::TensorGrid;
use crate::hamiltonian::Model;
use crate::par;
use crate::propagator::{trajectory, Propagate};
use crate::state::StateVector;
use crate::timegrid::{QuadratureRule, TimeGrid, Trajectory};

type C = Complex64;

/// Assignment of grid points to points of the relative lattice of `D`.
#[derive(Debug, Clone)]
pub struct ClusterLattice {
    cluster: ClusterSpec,
    bucket: Vec<u32>,
    n_buckets: usize,
    w_outer: f64,
    w_inner: f64,
}

impl ClusterLattice {
    pub fn new(grid: &TensorGrid, cluster: &ClusterSpec) -> Result<Self> {
        cluster.validate_for(grid.n_particles())?;
        if cluster.spatial_dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: cluster.spatial_dim(),
            });
        }
        let d = grid.dim();
        let members = cluster.indices();
        // (axis, base, radix-offset) digits of the bucket index
        let mut digits: Vec<(usize, Option<usize>, usize)> = Vec::new();
        let mut w_outer = 1.0;
        if members.len() == 1 {
            for c in 0..d {
                let a = members[0] * d + c;
                digits.push((a, None, grid.axis(a).points));
                w_outer *= grid.axis(a).spacing();
            }
        } else {
            for &j in &members[1..] {
                for c in 0..d {
                    let (a0, a) = (members[0] * d + c, j * d + c);
                    let (ax0, ax) = (grid.axis(a0), grid.axis(a));
                    if ax0 != ax {
                        return Err(Error::FrameMismatch(format!(
                            "axes {a0} and {a} differ ({} x {} vs {} x {})",
                            ax0.extent, ax0.points, ax.extent, ax.points
                        )));
                    }
                    digits.push((a, Some(a0), 2 * ax.points - 1));
                    w_outer *= ax.spacing();
                }
            }
        }
        let n_buckets: usize = digits.iter().map(|d| d.2).product();
        let bucket: Vec<u32> = par::map_range(grid.len(), |f| {
            let idx = grid.multi_index(f);
            let mut b = 0usize;
            for &(a, base, radix) in &digits {
                let v = match base {
                    None => idx[a],
                    Some(a0) => idx[a] + grid.axis(a).points - 1 - idx[a0],
                };
                b = b * radix + v;
            }
            b as u32
        });
        Ok(ClusterLattice {
            cluster: cluster.clone(),
            bucket,
            n_buckets,
            w_outer,
            w_inner: grid.cell_volume() / w_outer,
        })
    }

    pub fn cluster(&self) -> &ClusterSpec {
        &self.cluster
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.w_outer, self.w_inner)
    }

    /// Inner `L^q` norms per relative lattice point (zero where empty).
    pub fn inner_norms(&self, data: &[C], q: Exponent) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_buckets];
        match q {
            Exponent::Infinite => {
                for (v, &b) in data.iter().zip(&self.bucket) {
                    let a = &mut acc[b as usize];
                    *a = f64::max(*a, v.norm());
                }
            }
            _ => {
                let qf = q.to_f64();
                for (v, &b) in data.iter().zip(&self.bucket) {
                    acc[b as usize] += pow(v.norm(), qf);
                }
                for a in acc.iter_mut() {
                    *a = root(*a * self.w_inner, qf);
                }
            }
        }
        acc
    }

    /// `( sum_r w_outer ||u(r, .)||_{L^q}^p )^{1/p}`, grid maxima for infinite exponents.
    pub fn mixed_norm(&self, data: &[C], p: Exponent, q: Exponent) -> f64 {
        let inner = self.inner_norms(data, q);
        match p {
            Exponent::Infinite => inner.into_iter().fold(0.0, f64::max),
            _ => {
                let pf = p.to_f64();
                root(inner.iter().map(|g| pow(*g, pf)).sum::<f64>() * self.w_outer, pf)
            }
        }
    }
}

fn pow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

fn root(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub cluster: ClusterSpec,
    pub p: Exponent,
    pub q: Exponent,
}

pub fn mixed_norm(u: &StateVector, spec: &MixedNormSpec) -> Result<f64> {
    Ok(ClusterLattice::new(u.grid(), &spec.cluster)?.mixed_norm(u.data(), spec.p, spec.q))
}

/// `L^theta(I, L^{l,2}_D)`, with the time quadrature taken from the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeNormSpec {
    pub cluster: ClusterSpec,
    pub l: Exponent,
    pub theta: Exponent,
}

/// Weighted `theta`-norm of node values.
pub fn time_norm(values: &[f64], weights: &[f64], theta: Exponent) -> f64 {
    match theta {
        Exponent::Infinite => values.iter().cloned().fold(0.0, f64::max),
        _ => {
            let t = theta.to_f64();
            root(values.iter().zip(weights).map(|(v, w)| w * pow(*v, t)).sum(), t)
        }
    }
}

pub fn spacetime_norm_with(lattice: &ClusterLattice, states: &[StateVector], weights: &[f64], l: Exponent, theta: Exponent) -> f64 {
    let values: Vec<f64> = states.iter().map(|u| lattice.mixed_norm(u.data(), l, Exponent::int(2))).collect();
    time_norm(&values, weights, theta)
}

pub fn spacetime_norm(traj: &Trajectory, spec: &SpaceTimeNormSpec) -> Result<f64> {
    let lattice = ClusterLattice::new(traj.states[0].grid(), &spec.cluster)?;
    Ok(spacetime_norm_with(
        &lattice,
        &traj.states,
        &traj.time.weights(),
        spec.l,
        spec.theta,
    ))
}

/// One summand of the `X(I)` norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XNormTerm {
    pub cluster: ClusterSpec,
    pub l: Exponent,
    pub theta: Exponent,
}

impl XNormTerm {
    /// `(l_D, theta_D)` from the potential exponent `p_D`.
    pub fn from_potential_exponent(cluster: &ClusterSpec, p: Exponent) -> Result<Self> {
        let (l, theta) = strichartz_pair(cluster.relative_dimension(), p)?;
        Ok(XNormTerm {
            cluster: cluster.clone(),
            l,
            theta,
        })
    }

    pub fn spec(&self) -> SpaceTimeNormSpec {
        SpaceTimeNormSpec {
            cluster: self.cluster.clone(),
            l: self.l,
            theta: self.theta,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XNormReport {
    pub sup_l2: f64,
    pub parts: Vec<f64>,
    pub total: f64,
}

/// Lattices built once per term for repeated `X(I)` evaluations.
#[derive(Debug, Clone)]
pub struct XNorm {
    terms: Vec<(XNormTerm, ClusterLattice)>,
}

impl XNorm {
    pub fn new(grid: &TensorGrid, terms: &[XNormTerm]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|t| Ok((t.clone(), ClusterLattice::new(grid, &t.cluster)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(XNorm { terms })
    }

    pub fn terms(&self) -> impl Iterator<Item = &XNormTerm> {
        self.terms.iter().map(|t| &t.0)
    }

    pub fn evaluate(&self, states: &[StateVector], weights: &[f64]) -> XNormReport {
        let sup_l2 = states.iter().map(|u| u.norm()).fold(0.0, f64::max);
        let parts: Vec<f64> = self
            .terms
            .iter()
            .map(|(t, lat)| spacetime_norm_with(lat, states, weights, t.l, t.theta))
            .collect();
        XNormReport {
            sup_l2,
            total: sup_l2 + parts.iter().sum::<f64>(),
            parts,
        }
    }
}

/// `sup_k ||u(t_k)|| + sum_D ||u||_{L^{theta_D}(I, L^{l_D,2}_D)}`.
pub fn x_norm(traj: &Trajectory, terms: &[XNormTerm]) -> Result<XNormReport> {
    Ok(XNorm::new(traj.states[0].grid(), terms)?.evaluate(&traj.states, &traj.time.weights()))
}

/// Component tags of a decomposition `u = sum_D u_D + u_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "lowercase")]
pub enum WitnessPart {
    /// `u_D` measured in `L^{theta'}(I, L^{l',2}_D)` for the term's `(l, theta)`.
    Cluster(XNormTerm),
    /// Measured in `L^1(I, H)`.
    L1,
}

#[derive(Debug, Clone)]
pub struct DecompositionWitness {
    pub parts: Vec<(WitnessPart, Vec<StateVector>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessBound {
    pub parts: Vec<f64>,
    pub total: f64,
    pub defect: f64,
}

/// Upper bound for `||target||_{X*(I)}` from a witness decomposition.
pub fn xstar_upper_bound(target: &[StateVector], time: &TimeGrid, witness: &DecompositionWitness) -> Result<WitnessBound> {
    if witness.parts.iter().any(|p| p.1.len() != target.len()) {
        return Err(Error::InvalidTimeGrid("witness sampled on a different time grid".into()));
    }
    let mut defect: f64 = 0.0;
    for (k, u) in target.iter().enumerate() {
        let scale = u.max_abs().max(1.0);
        for (i, v) in u.data().iter().enumerate() {
            let s: C = witness.parts.iter().map(|p| p.1[k].data()[i]).sum();
            defect = defect.max((s - v).norm() / scale);
        }
    }
    if defect > 1e-10 {
        return Err(Error::WitnessMismatch(defect));
    }
    let weights = time.weights();
    let mut parts = Vec::with_capacity(witness.parts.len());
    for (tag, comp) in &witness.parts {
        parts.push(match tag {
            WitnessPart::L1 => comp.iter().zip(&weights).map(|(u, w)| w * u.norm()).sum(),
            WitnessPart::Cluster(t) => {
                let lat = ClusterLattice::new(comp[0].grid(), &t.cluster)?;
                spacetime_norm_with(&lat, comp, &weights, t.l.dual()?, t.theta.dual()?)
            }
        });
    }
    Ok(WitnessBound {
        total: parts.iter().sum(),
        parts,
        defect,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderBound {
    pub threshold: f64,
    /// Per cluster: `||V_D^(1)||_{L^a(I, L^{p,inf}_D)} ||u||_{L^theta(I, L^{l,2}_D)}`.
    pub cluster_products: Vec<f64>,
    /// `||V^(2)||_{L^1(I, L^inf)} sup_t ||u(t)||`.
    pub bounded_product: f64,
    pub total: f64,
}

/// Splits each `V_D = V_D^(1) + V_D^(2)` at `|V_D| = threshold` and returns
/// the natural witness for `V u` together with its Hölder bound.
/// `exponents[k]` is `p_D` of `model.potentials[k]`.
pub fn natural_witness(
    model: &Model,
    traj: &Trajectory,
    exponents: &[Exponent],
    threshold: f64,
) -> Result<(Vec<StateVector>, DecompositionWitness, HolderBound)> {
    if exponents.len() != model.potentials.len() {
        return Err(Error::Config(format!(
            "{} exponents for {} potentials",
            exponents.len(),
            model.potentials.len()
        )));
    }
    let nodes = traj.time.nodes();
    let weights = traj.time.weights();
    let states = &traj.states;
    let zero = states[0].scaled(C::new(0.0, 0.0));
    let mut target = vec![zero.clone(); nodes.len()];
    let mut bounded = vec![zero; nodes.len()];
    let mut v2_sup = vec![0.0_f64; nodes.len()];
    let mut parts = Vec::new();
    let mut cluster_products = Vec::new();
    for (k, term) in model.potentials.iter().enumerate() {
        let x = XNormTerm::from_potential_exponent(&term.cluster, exponents[k])?;
        let a = crate::exponent::a_of_p(term.cluster.relative_dimension(), exponents[k])?;
        let lat = ClusterLattice::new(&model.grid, &term.cluster)?;
        let mut comp = Vec::with_capacity(nodes.len());
        let mut v1_norms = Vec::with_capacity(nodes.len());
        for (j, &t) in nodes.iter().enumerate() {
            let v = model.potential_term_values(k, t)?;
            let (v1, v2): (Vec<f64>, Vec<f64>) = v.iter().map(|&x| if x.abs() > threshold { (x, 0.0) } else { (0.0, x) }).unzip();
            let v1c: Vec<C> = v1.iter().map(|&x| C::new(x, 0.0)).collect();
            v1_norms.push(lat.mixed_norm(&v1c, exponents[k], Exponent::Infinite));
            v2_sup[j] += v2.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let u = states[j].data();
            let c1: Vec<C> = u.iter().zip(&v1).map(|(a, b)| a * b).collect();
            let c2: Vec<C> = u.iter().zip(&v2).map(|(a, b)| a * b).collect();
            for ((tv, bv), (x1, x2)) in target[j].data_mut().iter_mut().zip(bounded[j].data_mut()).zip(c1.iter().zip(&c2)) {
                *tv += x1 + x2;
                *bv += x2;
            }
            comp.push(states[j].with_data(c1)?);
        }
        let u_norm = spacetime_norm_with(&lat, states, &weights, x.l, x.theta);
        cluster_products.push(time_norm(&v1_norms, &weights, a) * u_norm);
        parts.push((WitnessPart::Cluster(x), comp));
    }
    parts.push((WitnessPart::L1, bounded));
    let bounded_product = v2_sup.iter().zip(&weights).map(|(s, w)| s * w).sum::<f64>() * traj.sup_norm();
    let total = cluster_products.iter().sum::<f64>() + bounded_product;
    Ok((
        target,
        DecompositionWitness { parts },
        HolderBound {
            threshold,
            cluster_products,
            bounded_product,
            total,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct YNormReport {
    pub sup_sigma2: f64,
    pub derivative_x: f64,
    pub total: f64,
    /// How the time derivative was discretized.
    pub derivative_rule: &'static str,
}

pub const DERIVATIVE_RULE: &str = "centered differences (one-sided 3-point at endpoints)";

/// `sup_k ||u(t_k)||_{Sigma(2)} + ||du/dt||_{X(I)}`.
pub fn y_norm(traj: &Trajectory, terms: &[XNormTerm]) -> Result<YNormReport> {
    let mut sup_sigma2: f64 = 0.0;
    for u in &traj.states {
        sup_sigma2 = sup_sigma2.max(crate::state::sigma_k_norm(u, 2)?);
    }
    let du = Trajectory::new(traj.time.clone(), traj.derivative()?)?;
    let derivative_x = x_norm(&du, terms)?.total;
    Ok(YNormReport {
        sup_sigma2,
        derivative_x,
        total: sup_sigma2 + derivative_x,
        derivative_rule: DERIVATIVE_RULE,
    })
}

/// `sup_k ||u(t_k)|| + ` witness bound for `||du/dt||_{X*(I)}`.
pub fn ystar_upper_bound(traj: &Trajectory, derivative_witness: &DecompositionWitness) -> Result<YNormReport> {
    let du = traj.derivative()?;
    let bound = xstar_upper_bound(&du, &traj.time, derivative_witness)?;
    let sup = traj.sup_norm();
    Ok(YNormReport {
        sup_sigma2: sup,
        derivative_x: bound.total,
        total: sup + bound.total,
        derivative_rule: DERIVATIVE_RULE,
    })
}

/// Band-limited Gaussian random fields `e^{-|x|^2/(2w^2)} sum_k c_k e^{i k x}`
/// on a fixed wavenumber lattice, so the same field is sampled on any grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomFieldOptions {
    /// Modes `-K..=K` per axis.
    pub modes: usize,
    pub k_max: f64,
    pub envelope: f64,
}

impl Default for RandomFieldOptions {
    fn default() -> Self {
        RandomFieldOptions {
            modes: 3,
            k_max: 2.0,
            envelope: 1.0,
        }
    }
}

/// Normalized sample `index` of the field family seeded by `seed`.
pub fn random_field(grid: &Arc<TensorGrid>, seed: u64, index: u64, opts: &RandomFieldOptions) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n_axes = grid.n_axes();
    let per_axis = 2 * opts.modes + 1;
    let n_modes = per_axis.pow(n_axes as u32);
    let coeffs: Vec<C> = (0..n_modes)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C::new(re, im)
        })
        .collect();
    let step = if opts.modes == 0 { 0.0 } else { opts.k_max / opts.modes as f64 };
    let waves: Vec<f64> = (0..per_axis).map(|i| (i as f64 - opts.modes as f64) * step).collect();
    let w2 = opts.envelope * opts.envelope;
    let u = StateVector::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        // per-axis phases, combined over the mode lattice
        let phases: Vec<Vec<C>> = x
            .iter()
            .map(|&xa| waves.iter().map(|k| C::from_polar(1.0, k * xa)).collect())
            .collect();
        let mut sum = C::new(0.0, 0.0);
        for (m, c) in coeffs.iter().enumerate() {
            let mut rem = m;
            let mut term = *c;
            for a in (0..n_axes).rev() {
                term *= phases[a][rem % per_axis];
                rem /= per_axis;
            }
            sum += term;
        }
        sum * (-r2 / (2.0 * w2)).exp()
    });
    u.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrichartzKind {
    /// `||U(., s) f||_{L^sigma(I, L^{lambda,2}_D)} / ||f||`.
    Homogeneous,
    /// `||int_I U(s, r) F(r) dr|| / ||F||_{L^{sigma'}(I, L^{lambda',2}_D)}`.
    Inhomogeneous,
    /// `||int_s^t U(t, r) F(r) dr||_{L^sigma(I, L^{lambda,2}_D)} / ||F||_{L^1(I, H)}`.
    RetardedL1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzOptions {
    pub kind: StrichartzKind,
    pub lambda: Exponent,
    pub sigma: Exponent,
    pub cluster: ClusterSpec,
    pub start: f64,
    pub end: f64,
    pub intervals: usize,
    pub rule: QuadratureRule,
    pub samples: usize,
    pub seed: u64,
    pub field: RandomFieldOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrichartzReport {
    pub kind: StrichartzKind,
    pub lambda: Exponent,
    pub sigma: Exponent,
    pub cluster: String,
    pub points: usize,
    pub ratios: Vec<f64>,
    pub sup: f64,
}

/// Empirical sup of a Strichartz ratio over random samples.
pub fn strichartz_ratio(prop: &dyn Propagate, grid: &Arc<TensorGrid>, opts: &StrichartzOptions) -> Result<StrichartzReport> {
    let n = opts.cluster.relative_dimension();
    if !is_admissible(n, opts.lambda, opts.sigma) {
        return Err(Error::InadmissiblePair {
            n,
            lambda: opts.lambda.to_string(),
            sigma: opts.sigma.to_string(),
        });
    }
    let time = TimeGrid::new(opts.start, opts.end, opts.intervals, opts.rule)?;
    let nodes = time.nodes();
    let weights = time.weights();
    let lattice = ClusterLattice::new(grid, &opts.cluster)?;
    let sample = |i: usize| -> Result<f64> {
        let f = random_field(grid, opts.seed, 2 * i as u64, &opts.field);
        match opts.kind {
            StrichartzKind::Homogeneous => {
                let traj = trajectory(prop, &f, &nodes)?;
                Ok(spacetime_norm_with(&lattice, &traj, &weights, opts.lambda, opts.sigma) / f.norm())
            }
            StrichartzKind::Inhomogeneous | StrichartzKind::RetardedL1 => {
                let g = random_field(grid, opts.seed, 2 * i as u64 + 1, &opts.field);
                let omega = 2.0 * std::f64::consts::PI / (opts.end - opts.start);
                let forcing: Vec<StateVector> = nodes
                    .iter()
                    .map(|&t| {
                        let (s, c) = (omega * (t - opts.start)).sin_cos();
                        let mut v = f.scaled(C::new(c, 0.0));
                        v.axpy(C::new(s, 0.0), &g)?;
                        Ok(v)
                    })
                    .collect::<Result<_>>()?;
                if opts.kind == StrichartzKind::Inhomogeneous {
                    let k = nodes.len() - 1;
                    let mut acc = forcing[k].scaled(C::new(weights[k], 0.0));
                    for j in (0..k).rev() {
                        acc = prop.propagate(&acc, nodes[j], nodes[j + 1])?;
                        acc.axpy(C::new(weights[j], 0.0), &forcing[j])?;
                    }
                    let denom = spacetime_norm_with(&lattice, &forcing, &weights, opts.lambda.dual()?, opts.sigma.dual()?);
                    Ok(acc.norm() / denom)
                } else {
                    let h = time.step().abs();
                    let mut out = vec![forcing[0].scaled(C::new(0.0, 0.0))];
                    for j in 1..nodes.len() {
                        let mut prev = out[j - 1].clone();
                        prev.axpy(C::new(h / 2.0, 0.0), &forcing[j - 1])?;
                        let mut next = prop.propagate(&prev, nodes[j], nodes[j - 1])?;
                        next.axpy(C::new(h / 2.0, 0.0), &forcing[j])?;
                        out.push(next);
                    }
                    let denom: f64 = forcing.iter().zip(&weights).map(|(u, w)| w * u.norm()).sum();
                    Ok(spacetime_norm_with(&lattice, &out, &weights, opts.lambda, opts.sigma) / denom)
                }
            }
        }
    };
    let ratios = par::map_range(opts.samples, sample).into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(StrichartzReport {
        kind: opts.kind,
        lambda: opts.lambda,
        sigma: opts.sigma,
        cluster: opts.cluster.to_string(),
        points: grid.len(),
        sup: ratios.iter().cloned().fold(0.0, f64::max),
        ratios,
    })
}
