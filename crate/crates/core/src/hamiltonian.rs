//! Discretized Hamiltonians on periodic grids.
//!
//! The kinetic term is spectral; the magnetic coupling uses the symmetrized
//! entries `(A(r) + A(r')) P(r, r')`, so the assembled matrix is Hermitian
//! by construction. Operators are stored in CSR form with
//! `sum_a (M_a - 1) + 1` entries per row.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, PotentialTerm, ScalarTerm, TimeCoef};
use crate::geometry::{JacobiFrame, ParticleSystem};
use crate::grid::{Axis, TensorGrid};
use crate::linalg::{self, HermitianEigen};
use crate::par;
use crate::state::StateVector;

type C = Complex64;

/// Default cap on the flattened dimension for dense operations.
pub const DEFAULT_DENSE_CAP: usize = 1 << 13;

/// Sparse operator over the flattened grid.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C>,
    hermitian: bool,
}

impl OperatorMatrix {
    fn from_rows(rows: Vec<(Vec<usize>, Vec<C>)>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (c, v) in rows {
            cols.extend(c);
            values.extend(v);
            row_ptr.push(cols.len());
        }
        let mut m = OperatorMatrix {
            dim,
            row_ptr,
            cols,
            values,
            hermitian: false,
        };
        m.hermitian = m.hermitian_defect() < 1e-10;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Set when `max |H - H^*| < 1e-10`.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => C::new(0.0, 0.0),
        }
    }

    /// `max_{ij} |H_ij - conj(H_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let rows: Vec<f64> = par::map_range(self.dim, |i| {
            let mut worst = 0.0f64;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                worst = worst.max((self.values[p] - self.get(j, i).conj()).norm());
            }
            worst
        });
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<C> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Adds `shift[i]` to each diagonal entry.
    pub fn add_diagonal(&mut self, shift: &[C]) {
        for (i, s) in shift.iter().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let p = self.cols[lo..hi].binary_search(&i).expect("diagonal entry present");
            self.values[lo + p] += s;
        }
        self.hermitian = self.hermitian_defect() < 1e-10;
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C], y: &mut [C]) {
        const CHUNK: usize = 256;
        par::for_each_chunk_mut(y, CHUNK, |c, out| {
            for (k, yi) in out.iter_mut().enumerate() {
                let i = c * CHUNK + k;
                let mut s = C::new(0.0, 0.0);
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.values[p] * x[self.cols[p]];
                }
                *yi = s;
            }
        });
    }

    pub fn apply(&self, u: &StateVector) -> Result<StateVector> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        u.with_data(self.matvec(u.data()))
    }

    pub fn to_dense(&self, cap: usize) -> Result<DMatrix<C>> {
        if self.dim > cap {
            return Err(Error::DimensionCap { dim: self.dim, cap });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] = self.values[p];
            }
        }
        Ok(m)
    }

    /// Largest spectral radius bound (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|p| self.values[p].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Spectral kinetic (`-d^2`) and momentum (`-i d`) matrices of one axis,
/// stored by index difference modulo `M`.
#[derive(Debug, Clone)]
pub struct AxisOperators {
    pub kinetic: Vec<f64>,
    pub momentum: Vec<C>,
}

impl AxisOperators {
    pub fn new(axis: &Axis) -> Self {
        let m = axis.points;
        let half = m / 2;
        let mut kinetic = vec![0.0; m];
        let mut momentum = vec![C::new(0.0, 0.0); m];
        for delta in 0..=half {
            let mut kin = 0.0;
            let mut mom = 0.0;
            for j in 0..m {
                let k = axis.wavenumber(j);
                let signed = if j < half { j as f64 } else { j as f64 - m as f64 };
                let angle = 2.0 * PI * signed * delta as f64 / m as f64;
                kin += k * k * angle.cos();
                if j != half {
                    mom += k * angle.sin();
                }
            }
            kinetic[delta] = kin / m as f64;
            if delta != 0 && delta != half {
                momentum[delta] = C::new(0.0, mom / m as f64);
            }
        }
        for delta in 1..half {
            kinetic[m - delta] = kinetic[delta];
            momentum[m - delta] = -momentum[delta];
        }
        AxisOperators { kinetic, momentum }
    }

    /// Entries for row index `i`, column `i'`.
    pub fn kinetic_at(&self, i: usize, ip: usize) -> f64 {
        let m = self.kinetic.len();
        self.kinetic[(i + m - ip) % m]
    }

    pub fn momentum_at(&self, i: usize, ip: usize) -> C {
        let m = self.momentum.len();
        self.momentum[(i + m - ip) % m]
    }
}

/// Everything needed to assemble `H(t)` on a grid.
#[derive(Debug, Clone)]
pub struct Model {
    pub system: ParticleSystem,
    pub fields: FieldSpec,
    pub potentials: Vec<PotentialTerm>,
    pub grid: Arc<TensorGrid>,
    /// Test-mode fault: adds `-i kappa` to the diagonal.
    pub non_hermitian: f64,
}

impl Model {
    pub fn new(system: ParticleSystem, fields: FieldSpec, potentials: Vec<PotentialTerm>, grid: Arc<TensorGrid>) -> Result<Self> {
        if grid.n_particles() != system.n_particles() || grid.dim() != system.dim() {
            return Err(Error::InvalidGrid(format!(
                "grid for {} particles in {} dimensions, system has {} in {}",
                grid.n_particles(),
                grid.dim(),
                system.n_particles(),
                system.dim()
            )));
        }
        if fields.dim != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                got: fields.dim,
            });
        }
        for p in &potentials {
            p.cluster.validate_for(system.n_particles())?;
        }
        Ok(Model {
            system,
            fields,
            potentials,
            grid,
            non_hermitian: 0.0,
        })
    }

    pub fn is_static(&self) -> bool {
        self.fields.is_static() && self.potentials.iter().all(|p| p.is_static())
    }

    pub fn has_vector_potential(&self) -> bool {
        self.fields.has_vector_potential()
    }

    /// Same particles and fields without interaction potentials.
    pub fn free_part(&self) -> Model {
        Model {
            potentials: Vec::new(),
            ..self.clone()
        }
    }

    /// Single-particle model for particle `j` on its own axes.
    pub fn particle_model(&self, j: usize) -> Result<Model> {
        let system = ParticleSystem::new(vec![self.system.mass(j)], vec![self.system.charge(j)], self.system.dim())?;
        let grid = Arc::new(self.grid.particle_grid(&[j])?);
        Ok(Model {
            system,
            fields: self.fields.clone(),
            potentials: Vec::new(),
            grid,
            non_hermitian: self.non_hermitian,
        })
    }

    /// `V_D(t)` of potential `k` at every grid point.
    pub fn potential_term_values(&self, k: usize, t: f64) -> Result<Vec<f64>> {
        let term = &self.potentials[k];
        let frame = JacobiFrame::new(&self.system, &term.cluster)?;
        par::map_range(self.grid.len(), |f| {
            let x = self.grid.point(f);
            let r = frame.relative(&self.system, &x)?;
            term.eval_relative(t, &r)
        })
        .into_iter()
        .collect()
    }

    /// `sum_D V_D(t)` at every grid point.
    pub fn potential_values(&self, t: f64) -> Result<Vec<f64>> {
        let mut total = vec![0.0; self.grid.len()];
        for k in 0..self.potentials.len() {
            for (acc, v) in total.iter_mut().zip(self.potential_term_values(k, t)?) {
                *acc += v;
            }
        }
        Ok(total)
    }

    /// Multiplicative part of `H(t)`: external potentials plus interactions.
    pub fn diagonal_values(&self, t: f64) -> Result<Vec<f64>> {
        let (mut diag, _) = self.external_values(t);
        for (d, v) in diag.iter_mut().zip(self.potential_values(t)?) {
            *d += v;
        }
        Ok(diag)
    }

    /// `sum_j [e_j^2/(2 m_j) |A(t, x_j)|^2 + e_j phi(t, x_j)]`, and
    /// `A(t, x_j)` per particle.
    fn external_values(&self, t: f64) -> (Vec<f64>, Vec<Vec<Vec<f64>>>) {
        let sys = &self.system;
        let d = sys.dim();
        let mut diag = vec![0.0; self.grid.len()];
        let mut a_vals = Vec::with_capacity(sys.n_particles());
        for j in 0..sys.n_particles() {
            let pg = self.grid.particle_grid(&[j]).expect("valid particle grid");
            let (m, e) = (sys.mass(j), sys.charge(j));
            let local: Vec<(f64, Vec<f64>)> = par::map_range(pg.len(), |f| {
                let x = pg.point(f);
                let a = self.fields.vector_potential(t, &x);
                let a2: f64 = a.iter().map(|v| v * v).sum();
                (e * e / (2.0 * m) * a2 + e * self.fields.phi(t, &x), a)
            });
            let (_, size, post) = self.grid.blocks(j * d, d);
            for (f, v) in diag.iter_mut().enumerate() {
                *v += local[(f / post) % size].0;
            }
            a_vals.push(local.into_iter().map(|p| p.1).collect());
        }
        (diag, a_vals)
    }

    /// Assembles `H(t)`.
    pub fn hamiltonian(&self, t: f64) -> Result<OperatorMatrix> {
        let grid = &*self.grid;
        let sys = &self.system;
        let d = sys.dim();
        let n_axes = grid.n_axes();
        let ops: Vec<AxisOperators> = grid.axes().iter().map(AxisOperators::new).collect();
        let (ext, a_vals) = self.external_values(t);
        let v = self.potential_values(t)?;
        let strides: Vec<usize> = (0..n_axes).map(|a| grid.stride(a)).collect();
        let local_index: Vec<(usize, usize)> = (0..sys.n_particles())
            .map(|j| grid.blocks(j * d, d))
            .map(|(_, s, p)| (s, p))
            .collect();
        let has_a = self.fields.has_vector_potential();
        let kappa = self.non_hermitian;

        let rows = par::map_range(grid.len(), |r| {
            let idx = grid.multi_index(r);
            let mut entries: Vec<(usize, C)> = Vec::with_capacity(1 + grid.axes().iter().map(|a| a.points - 1).sum::<usize>());
            let mut diag = ext[r] + v[r];
            for a in 0..n_axes {
                let j = a / d;
                let c = a % d;
                let inv2m = 1.0 / (2.0 * sys.mass(j));
                let e = sys.charge(j);
                let m = grid.axis(a).points;
                let i = idx[a];
                diag += inv2m * ops[a].kinetic_at(i, i);
                let (size, post) = local_index[j];
                let a_here = if has_a { a_vals[j][(r / post) % size][c] } else { 0.0 };
                for ip in 0..m {
                    if ip == i {
                        continue;
                    }
                    let col = r + ip * strides[a] - i * strides[a];
                    let mut val = C::new(inv2m * ops[a].kinetic_at(i, ip), 0.0);
                    if has_a {
                        let a_there = a_vals[j][(col / post) % size][c];
                        val -= ops[a].momentum_at(i, ip) * (inv2m * e * (a_here + a_there));
                    }
                    entries.push((col, val));
                }
            }
            entries.push((r, C::new(diag, -kappa)));
            entries.sort_unstable_by_key(|e| e.0);
            entries.into_iter().unzip()
        });
        Ok(OperatorMatrix::from_rows(rows))
    }
}

/// Discrete `H_os = 1/2 (-Delta + |x|^2)` on every axis of `grid`.
pub fn harmonic_oscillator(grid: &Arc<TensorGrid>) -> Result<OperatorMatrix> {
    let n = grid.n_axes();
    let system = ParticleSystem::unit(n, 1)?;
    let axes_grid = Arc::new(TensorGrid::new(n, 1, grid.axes().to_vec())?);
    // 1/2 <x>^2 - 1/2 = 1/2 x^2 per particle
    let fields = FieldSpec::zero(1)
        .with_scalar(ScalarTerm::RadialPower {
            coef: TimeCoef::Const(0.5),
            s: 2.0,
        })
        .with_scalar(ScalarTerm::RadialPower {
            coef: TimeCoef::Const(-0.5),
            s: 0.0,
        });
    Model::new(system, fields, Vec::new(), axes_grid)?.hamiltonian(0.0)
}

/// Smallest eigenvalue: dense below `dense_limit`, Lanczos above.
pub fn min_eigenvalue(h: &OperatorMatrix, dense_limit: usize) -> Result<f64> {
    if h.dim() <= dense_limit {
        return Ok(HermitianEigen::new(&h.to_dense(dense_limit)?).min_eigenvalue());
    }
    // A smooth, positive start vector overlaps every ground state of interest.
    let start: Vec<C> = (0..h.dim()).map(|i| C::new(1.0 + 1e-3 * ((i * 7919) % 101) as f64, 0.0)).collect();
    linalg::lanczos_min_eigenvalue(|x| h.matvec(x), &start, 600, 1e-13).map(|r| r.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub lambda_min: f64,
    pub bound: f64,
    pub tol_disc: f64,
    pub hypothesis_met: bool,
    /// `min_x (phi(t, x) - <x>^2 / 2)` over the sampled nodes.
    pub hypothesis_margin: f64,
    pub pass: bool,
}

/// Checks `H_0(t) >= (N d + 1)/2` for unit masses and charges, with the
/// discretization tolerance taken from a half-resolution grid.
pub fn h0_lower_bound_check(system: &ParticleSystem, fields: &FieldSpec, grid: &Arc<TensorGrid>, t: f64) -> Result<LowerBoundReport> {
    let unit = ParticleSystem::unit(system.n_particles(), system.dim())?;
    let mut margin = f64::INFINITY;
    for j in 0..grid.n_particles() {
        let pg = grid.particle_grid(&[j])?;
        for f in 0..pg.len() {
            let x = pg.point(f);
            let half = 0.5 * (1.0 + x.iter().map(|v| v * v).sum::<f64>());
            margin = margin.min(fields.phi(t, &x) - half);
        }
    }
    let hypothesis_met = margin >= -1e-12;
    let lam = |g: Arc<TensorGrid>| -> Result<f64> {
        let h = Model::new(unit.clone(), fields.clone(), Vec::new(), g)?.hamiltonian(t)?;
        min_eigenvalue(&h, 512)
    };
    let lambda_min = lam(grid.clone())?;
    let coarse_axes: Vec<Axis> = grid
        .axes()
        .iter()
        .map(|a| Axis::new(a.extent, (a.points / 2).max(8)))
        .collect::<Result<_>>()?;
    let coarse = Arc::new(TensorGrid::new(grid.n_particles(), grid.dim(), coarse_axes)?);
    let tol_disc = (lambda_min - lam(coarse)?).abs();
    let bound = (system.config_dim() as f64 + 1.0) / 2.0;
    Ok(LowerBoundReport {
        lambda_min,
        bound,
        tol_disc,
        hypothesis_met,
        hypothesis_margin: margin,
        pass: hypothesis_met && lambda_min >= bound - tol_disc,
    })
}

/// Operator norms and kernel properties of `H_os^{-1}` on a 1-d grid.
#[derive(Debug, Clone, Serialize)]
pub struct InverseReport {
    pub points: usize,
    pub extent: f64,
    /// `(alpha, beta, gamma, delta, ||x^a d^b H^-1 x^c d^d||)`.
    pub norms: Vec<(usize, usize, usize, usize, f64)>,
    pub inverse_norm: f64,
    pub kernel_min: f64,
    pub kernel_min_full_grid: f64,
    /// Interior window `|x|, |y| <= window` used for the kernel checks.
    pub window: f64,
    pub decay_rate: f64,
}

impl InverseReport {
    pub fn norm_of(&self, a: usize, b: usize, c: usize, d: usize) -> Option<f64> {
        self.norms.iter().find(|n| (n.0, n.1, n.2, n.3) == (a, b, c, d)).map(|n| n.4)
    }
}

pub fn hos_inverse_properties(grid: &Arc<TensorGrid>) -> Result<InverseReport> {
    if grid.n_axes() != 1 {
        return Err(Error::InvalidGrid("H_os inverse properties need a 1-d grid".into()));
    }
    let axis = *grid.axis(0);
    let m = axis.points;
    let h = harmonic_oscillator(grid)?.to_dense(DEFAULT_DENSE_CAP)?;
    let g = h
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::LinearSolve("H_os is singular on this grid".into()))?;
    let nodes = axis.nodes();
    let x = DMatrix::<C>::from_diagonal(&nalgebra::DVector::from_iterator(m, nodes.iter().map(|v| C::new(*v, 0.0))));
    // d = i P
    let ops = AxisOperators::new(&axis);
    let dmat = DMatrix::<C>::from_fn(m, m, |i, j| ops.momentum_at(i, j) * C::new(0.0, 1.0));
    let pow = |base: &DMatrix<C>, k: usize| -> DMatrix<C> {
        let mut out = DMatrix::<C>::identity(m, m);
        for _ in 0..k {
            out = &out * base;
        }
        out
    };
    let mut norms = Vec::new();
    for a in 0..=2 {
        for b in 0..=2 - a {
            for c in 0..=2 - a - b {
                for dd in 0..=2 - a - b - c {
                    let op = pow(&x, a) * pow(&dmat, b) * &g * pow(&x, c) * pow(&dmat, dd);
                    let s = op.singular_values().iter().cloned().fold(0.0, f64::max);
                    norms.push((a, b, c, dd, s));
                }
            }
        }
    }
    let inverse_norm = norms[0].4;
    let hgrid = axis.spacing();
    let window = axis.extent / 3.0;
    let inside: Vec<usize> = (0..m).filter(|&i| nodes[i].abs() <= window).collect();
    let mut kernel_min = f64::INFINITY;
    let mut kernel_min_full = f64::INFINITY;
    let mut fit_x = Vec::new();
    let mut fit_y = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let kv = g[(i, j)].re / hgrid;
            kernel_min_full = kernel_min_full.min(kv);
            if inside.contains(&i) && inside.contains(&j) {
                kernel_min = kernel_min.min(kv);
                let s = (nodes[i] - nodes[j]).abs() * (1.0 + nodes[i].abs() + nodes[j].abs());
                if s > 1.0 && kv > 0.0 {
                    fit_x.push(s);
                    fit_y.push(kv.ln());
                }
            }
        }
    }
    let decay_rate = -least_squares_slope(&fit_x, &fit_y);
    Ok(InverseReport {
        points: m,
        extent: axis.extent,
        norms,
        inverse_norm,
        kernel_min,
        kernel_min_full_grid: kernel_min_full,
        window,
        decay_rate,
    })
}

/// Slope of the least-squares line through `(x, y)`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ClusterSpec;
    use crate::field::VectorTerm;

    fn grid1(l: f64, m: usize) -> Arc<TensorGrid> {
        Arc::new(TensorGrid::uniform(1, 1, l, m).unwrap())
    }

    #[test]
    fn axis_operators_are_hermitian_and_exact_on_plane_waves() {
        let axis = Axis::new(PI, 16).unwrap();
        let ops = AxisOperators::new(&axis);
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(ops.kinetic_at(i, j), ops.kinetic_at(j, i));
                assert_eq!(ops.momentum_at(i, j), ops.momentum_at(j, i).conj());
            }
        }
        // -d^2 e^{3ix} = 9 e^{3ix}
        let nodes = axis.nodes();
        for i in 0..16 {
            let s: C = (0..16).map(|j| C::new(0.0, 3.0 * nodes[j]).exp() * ops.kinetic_at(i, j)).sum();
            assert!((s - C::new(0.0, 3.0 * nodes[i]).exp() * 9.0).norm() < 1e-11);
        }
    }

    #[test]
    fn free_spectrum_is_grid_momenta() {
        let g = grid1(16.0 * PI, 64);
        let model = Model::new(ParticleSystem::unit(1, 1).unwrap(), FieldSpec::zero(1), vec![], g.clone()).unwrap();
        let h = model.hamiltonian(0.0).unwrap();
        let eig = HermitianEigen::new(&h.to_dense(1024).unwrap());
        let mut got: Vec<f64> = eig.values.iter().cloned().collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = g.axis(0).wavenumbers().iter().map(|k| k * k / 2.0).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn hermitian_with_magnetic_and_interaction_terms() {
        let g = Arc::new(TensorGrid::uniform(2, 1, 4.0, 8).unwrap());
        let fields = FieldSpec::harmonic(1, 0.5).with_vector(VectorTerm::GradRadial {
            coef: TimeCoef::Linear(-0.7),
            s: 2.0,
        });
        let sys = ParticleSystem::new(vec![1.0, 2.0], vec![1.0, -0.5], 1).unwrap();
        let pot = PotentialTerm::power(ClusterSpec::new(&[1, 2], 1).unwrap(), 1.0, 0.25, 1.0);
        let h = Model::new(sys, fields, vec![pot], g).unwrap().hamiltonian(0.8).unwrap();
        assert!(h.is_hermitian());
        assert_eq!(h.hermitian_defect(), 0.0);
        assert_eq!(h.nnz(), 64 * 15);
    }

    #[test]
    fn oscillator_ground_state() {
        let h = harmonic_oscillator(&grid1(10.0, 64)).unwrap();
        assert!((min_eigenvalue(&h, 1024).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn dense_cap_is_enforced() {
        let h = harmonic_oscillator(&grid1(10.0, 64)).unwrap();
        assert_eq!(h.to_dense(32).unwrap_err(), Error::DimensionCap { dim: 64, cap: 32 });
    }

    #[test]
    fn lower_bound_single_particle() {
        let fields = FieldSpec::harmonic(1, 0.5);
        let sys = ParticleSystem::unit(1, 1).unwrap();
        let r = h0_lower_bound_check(&sys, &fields, &grid1(10.0, 64), 0.0).unwrap();
        assert!(r.hypothesis_met);
        assert!((r.lambda_min - 1.0).abs() < 1e-9);
        assert!(r.pass);

        let weak = FieldSpec::harmonic(1, 0.25);
        let r = h0_lower_bound_check(&sys, &weak, &grid1(10.0, 64), 0.0).unwrap();
        assert!(!r.hypothesis_met);
    }
}
