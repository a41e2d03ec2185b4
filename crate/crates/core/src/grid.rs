//! Periodic tensor grids and spectral operations along axes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// One axis of the periodic box `[-L, L)` with `M` nodes `x_i = -L + i h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub extent: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent {extent} must be positive")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("{points} points per axis (need a power of two >= 8)")));
        }
        Ok(Axis { extent, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Angular wavenumber of DFT index `j`; the upper half is negative.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = self.points as i64;
        let jj = j as i64;
        let signed = if jj < m / 2 { jj } else { jj - m };
        2.0 * PI * signed as f64 / (2.0 * self.extent)
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.wavenumber(j)).collect()
    }

    pub fn nyquist(&self) -> usize {
        self.points / 2
    }
}

/// Tensor grid over `R^{Nd}`; axis `j d + c` carries component `c` of
/// particle `j`. Flattening is row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    n_particles: usize,
    dim: usize,
    axes: Vec<Axis>,
}

impl TensorGrid {
    pub fn new(n_particles: usize, dim: usize, axes: Vec<Axis>) -> Result<Self> {
        if n_particles == 0 || dim == 0 {
            return Err(Error::InvalidGrid("need at least one particle and one dimension".into()));
        }
        if axes.len() != n_particles * dim {
            return Err(Error::InvalidGrid(format!(
                "{} axes for {} particles in {} dimensions",
                axes.len(),
                n_particles,
                dim
            )));
        }
        for a in &axes {
            Axis::new(a.extent, a.points)?;
        }
        Ok(TensorGrid { n_particles, dim, axes })
    }

    /// Every axis `[-extent, extent)` with `points` nodes.
    pub fn uniform(n_particles: usize, dim: usize, extent: f64, points: usize) -> Result<Self> {
        let axis = Axis::new(extent, points)?;
        TensorGrid::new(n_particles, dim, vec![axis; n_particles * dim])
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    /// Element stride of axis `a` in the flattened layout.
    pub fn stride(&self, a: usize) -> usize {
        self.axes[a + 1..].iter().map(|x| x.points).product()
    }

    /// `(pre, size, post)` block decomposition for axes `first..first+count`.
    pub fn blocks(&self, first: usize, count: usize) -> (usize, usize, usize) {
        let pre: usize = self.axes[..first].iter().map(|a| a.points).product();
        let size: usize = self.axes[first..first + count].iter().map(|a| a.points).product();
        let post: usize = self.axes[first + count..].iter().map(|a| a.points).product();
        (pre, size, post)
    }

    /// Per-axis indices of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for a in (0..self.axes.len()).rev() {
            let m = self.axes[a].points;
            idx[a] = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (i, a)| acc * a.points + i)
    }

    /// Coordinates of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&i, a)| a.node(i)).collect()
    }

    /// All grid points, in flat order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.point(f)).collect()
    }

    /// Grid for particles `particles` only (sub-tensor).
    pub fn particle_grid(&self, particles: &[usize]) -> Result<TensorGrid> {
        let mut axes = Vec::new();
        for &j in particles {
            axes.extend_from_slice(&self.axes[j * self.dim..(j + 1) * self.dim]);
        }
        TensorGrid::new(particles.len(), self.dim, axes)
    }

    /// Doubles the node count on every axis, keeping extents.
    pub fn refined(&self) -> TensorGrid {
        TensorGrid {
            n_particles: self.n_particles,
            dim: self.dim,
            axes: self
                .axes
                .iter()
                .map(|a| Axis {
                    extent: a.extent,
                    points: a.points * 2,
                })
                .collect(),
        }
    }
}

/// Cached FFT plans per axis.
#[derive(Clone)]
pub struct Spectral {
    grid: TensorGrid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &TensorGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.axes().iter().map(|a| planner.plan_fft_forward(a.points)).collect();
        let inverse = grid.axes().iter().map(|a| planner.plan_fft_inverse(a.points)).collect();
        Spectral {
            grid: grid.clone(),
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    /// Multiplies the DFT along `axis` by `multiplier[j]` (length `M_axis`).
    pub fn multiply(&self, data: &mut [Complex64], axis: usize, multiplier: &[Complex64]) {
        let (_, m, post) = self.grid.blocks(axis, 1);
        let fwd = &self.forward[axis];
        let inv = &self.inverse[axis];
        let scale = 1.0 / m as f64;
        par::for_each_chunk_mut(data, m * post, |_, block| {
            let mut lanes = vec![Complex64::new(0.0, 0.0); m * post];
            for i in 0..m {
                for j in 0..post {
                    lanes[j * m + i] = block[i * post + j];
                }
            }
            let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
            fwd.process_with_scratch(&mut lanes, &mut scratch);
            for lane in lanes.chunks_mut(m) {
                for (v, w) in lane.iter_mut().zip(multiplier) {
                    *v *= w * scale;
                }
            }
            inv.process_with_scratch(&mut lanes, &mut scratch);
            for i in 0..m {
                for j in 0..post {
                    block[i * post + j] = lanes[j * m + i];
                }
            }
        });
    }

    /// `-i d/dx_axis` with the Nyquist mode removed.
    pub fn momentum(&self, data: &mut [Complex64], axis: usize) {
        let a = self.grid.axis(axis);
        let mult: Vec<Complex64> = (0..a.points)
            .map(|j| {
                if j == a.nyquist() {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(a.wavenumber(j), 0.0)
                }
            })
            .collect();
        self.multiply(data, axis, &mult);
    }

    /// `d/dx_axis`.
    pub fn derivative(&self, data: &mut [Complex64], axis: usize) {
        self.momentum(data, axis);
        data.iter_mut().for_each(|v| *v *= Complex64::new(0.0, 1.0));
    }

    /// `-d^2/dx_axis^2`, using the full `k^2` including Nyquist.
    pub fn minus_laplacian_axis(&self, data: &mut [Complex64], axis: usize) {
        let a = self.grid.axis(axis);
        let mult: Vec<Complex64> = (0..a.points).map(|j| Complex64::new(a.wavenumber(j).powi(2), 0.0)).collect();
        self.multiply(data, axis, &mult);
    }
}
