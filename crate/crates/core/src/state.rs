//! Wavefunctions sampled on a tensor grid.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, Spectral, TensorGrid};
use crate::io;
use crate::par;

const MAGIC: &[u8; 4] = b"SLST";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: Arc<TensorGrid>,
    data: Vec<Complex64>,
}

impl StateVector {
    pub fn new(grid: Arc<TensorGrid>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: data.len(),
            });
        }
        Ok(StateVector { grid, data })
    }

    pub fn zeros(grid: Arc<TensorGrid>) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); grid.len()];
        StateVector { grid, data }
    }

    pub fn from_fn<F>(grid: Arc<TensorGrid>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let g = grid.clone();
        let data = par::map_range(grid.len(), |i| f(&g.point(i)));
        StateVector { grid, data }
    }

    /// Product of normalized Gaussians `pi^{-1/4} w^{-1/2} exp(-(x-c)^2/(2w^2) + i k x)`
    /// along every axis.
    pub fn gaussian(grid: Arc<TensorGrid>, center: &[f64], width: f64, momentum: &[f64]) -> Result<Self> {
        let n = grid.n_axes();
        if center.len() != n || momentum.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len().min(momentum.len()),
            });
        }
        let amp = (PI.sqrt() * width).powf(-0.5 * n as f64);
        let c = center.to_vec();
        let k = momentum.to_vec();
        Ok(StateVector::from_fn(grid, move |x| {
            let mut re = 0.0;
            let mut ph = 0.0;
            for a in 0..x.len() {
                let d = x[a] - c[a];
                re -= d * d / (2.0 * width * width);
                ph += k[a] * x[a];
            }
            Complex64::from_polar(amp * re.exp(), ph)
        }))
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn with_data(&self, data: Vec<Complex64>) -> Result<Self> {
        StateVector::new(self.grid.clone(), data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn check_same_grid(&self, other: &StateVector) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Quadrature `L^2` norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    pub fn scale(&mut self, c: Complex64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn scaled(&self, c: Complex64) -> StateVector {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self += c x`
    pub fn axpy(&mut self, c: Complex64, x: &StateVector) -> Result<()> {
        self.check_same_grid(x)?;
        self.data.iter_mut().zip(&x.data).for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    /// Pointwise multiplication by real values in flat order.
    pub fn multiply_real(&mut self, values: &[f64]) {
        self.data.iter_mut().zip(values).for_each(|(a, v)| *a *= v);
    }

    /// Pointwise multiplication by `exp(i theta)`.
    pub fn multiply_phase(&mut self, theta: &[f64]) {
        self.data
            .iter_mut()
            .zip(theta)
            .for_each(|(a, t)| *a *= Complex64::from_polar(1.0, *t));
    }

    /// Largest modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Probability in the band of width `margin` along the box boundary.
    pub fn boundary_mass(&self, margin: f64) -> f64 {
        let grid = &*self.grid;
        let near: Vec<Vec<bool>> = grid
            .axes()
            .iter()
            .map(|a| {
                (0..a.points)
                    .map(|i| a.node(i) < -a.extent + margin || a.node(i) > a.extent - margin)
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        for (f, v) in self.data.iter().enumerate() {
            let idx = grid.multi_index(f);
            if idx.iter().enumerate().any(|(a, &i)| near[a][i]) {
                total += v.norm_sqr();
            }
        }
        total * grid.cell_volume()
    }

    /// `<x_a^2> - <x_a>^2` for a normalized state.
    pub fn position_variance(&self, axis: usize) -> f64 {
        let a = self.grid.axis(axis);
        let stride = self.grid.stride(axis);
        let w = self.norm_sq();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (f, v) in self.data.iter().enumerate() {
            let x = a.node((f / stride) % a.points);
            let p = v.norm_sqr();
            m1 += x * p;
            m2 += x * x * p;
        }
        let dv = self.grid.cell_volume();
        let (m1, m2) = (m1 * dv / w, m2 * dv / w);
        m2 - m1 * m1
    }

    /// Flat binary snapshot: header then interleaved `re, im` doubles in
    /// flat (row-major) order, little endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &*self.grid;
        let mut out = Vec::with_capacity(32 + 16 * g.n_axes() + 16 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(g.n_particles() as u32).to_le_bytes());
        out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(g.n_axes() as u32).to_le_bytes());
        for a in g.axes() {
            out.extend_from_slice(&(a.points as u64).to_le_bytes());
            out.extend_from_slice(&a.extent.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Io(format!("malformed state file: {msg}"));
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
        if u32_at(take(4)?) != VERSION {
            return Err(bad("unsupported version"));
        }
        let n_particles = u32_at(take(4)?) as usize;
        let dim = u32_at(take(4)?) as usize;
        let n_axes = u32_at(take(4)?) as usize;
        let mut axes = Vec::with_capacity(n_axes);
        for _ in 0..n_axes {
            let points = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            let extent = f64::from_le_bytes(take(8)?.try_into().unwrap());
            axes.push(Axis::new(extent, points)?);
        }
        let grid = Arc::new(TensorGrid::new(n_particles, dim, axes)?);
        let mut data = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = f64::from_le_bytes(take(8)?.try_into().unwrap());
            let im = f64::from_le_bytes(take(8)?.try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        StateVector::new(grid, data)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        io::atomic_write(path, &self.to_bytes())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        StateVector::from_bytes(&std::fs::read(path)?)
    }

    /// CSV of a 1-d or 2-d state: coordinates, real and imaginary parts, density.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.grid.n_axes();
        let mut table = match n {
            1 => io::CsvTable::new(&["x", "re", "im", "density"]),
            2 => io::CsvTable::new(&["x1", "x2", "re", "im", "density"]),
            _ => return Err(Error::InvalidGrid(format!("CSV export supports 1 or 2 axes, not {n}"))),
        };
        for (f, v) in self.data.iter().enumerate() {
            let mut row = self.grid.point(f);
            row.extend([v.re, v.im, v.norm_sqr()]);
            table.push_values(&row);
        }
        Ok(table.render())
    }
}

fn multi_indices_upto(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; n]];
    let mut frontier = vec![vec![0; n]];
    for _ in 0..k {
        let mut next = Vec::new();
        for m in &frontier {
            let last = m.iter().rposition(|&v| v > 0).unwrap_or(0);
            for a in last..n {
                let mut c = m.clone();
                c[a] += 1;
                next.push(c);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Individual terms `||x^alpha d^beta u||^2` of the `Sigma(k)` norm, keyed
/// by `(alpha, beta)`.
pub fn sigma_k_terms(u: &StateVector, k: usize) -> Result<Vec<(Vec<usize>, Vec<usize>, f64)>> {
    if k > 2 {
        return Err(Error::OutOfRange(format!("Sigma(k) supports k <= 2, got {k}")));
    }
    let grid = u.grid();
    let n = grid.n_axes();
    let spectral = Spectral::new(grid);
    let nodes: Vec<Vec<f64>> = grid.axes().iter().map(|a| a.nodes()).collect();
    let strides: Vec<usize> = (0..n).map(|a| grid.stride(a)).collect();
    let dv = grid.cell_volume();
    let mut out = Vec::new();
    for beta in multi_indices_upto(n, k) {
        let mut v = u.data().to_vec();
        for (a, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                spectral.derivative(&mut v, a);
            }
        }
        let rest = k - beta.iter().sum::<usize>();
        for alpha in multi_indices_upto(n, rest) {
            let mut s = 0.0;
            for (f, val) in v.iter().enumerate() {
                let mut w = 1.0;
                for a in 0..n {
                    if alpha[a] > 0 {
                        let x = nodes[a][(f / strides[a]) % nodes[a].len()];
                        w *= x.powi(alpha[a] as i32);
                    }
                }
                s += w * w * val.norm_sqr();
            }
            out.push((alpha, beta.clone(), s * dv));
        }
    }
    Ok(out)
}

/// `(sum_{|alpha + beta| <= k} ||x^alpha d^beta u||^2)^{1/2}` with spectral derivatives.
pub fn sigma_k_norm(u: &StateVector, k: usize) -> Result<f64> {
    Ok(sigma_k_terms(u, k)?.iter().map(|t| t.2).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss_1d(m: usize) -> StateVector {
        let g = Arc::new(TensorGrid::uniform(1, 1, 12.0, m).unwrap());
        StateVector::gaussian(g, &[0.0], 1.0, &[0.0]).unwrap()
    }

    #[test]
    fn gaussian_is_normalized() {
        assert_relative_eq!(gauss_1d(128).norm(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn sigma_terms_of_gaussian() {
        let u = gauss_1d(128);
        let terms = sigma_k_terms(&u, 2).unwrap();
        let get = |a: usize, b: usize| terms.iter().find(|t| t.0 == vec![a] && t.1 == vec![b]).unwrap().2;
        assert_relative_eq!(get(0, 0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(get(1, 0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(get(0, 1), 0.5, epsilon = 1e-12);
        assert_relative_eq!(get(2, 0), 0.75, epsilon = 1e-12);
        assert_relative_eq!(get(0, 2), 0.75, epsilon = 1e-12);
        // x u' = -x^2 u
        assert_relative_eq!(get(1, 1), 0.75, epsilon = 1e-12);
        assert_relative_eq!(sigma_k_norm(&u, 2).unwrap(), 4.25f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(sigma_k_norm(&u, 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices_upto(1, 2).len(), 3);
        assert_eq!(multi_indices_upto(2, 2).len(), 6);
        assert_eq!(multi_indices_upto(3, 1).len(), 4);
    }

    #[test]
    fn binary_round_trip() {
        let g = Arc::new(TensorGrid::uniform(2, 1, 3.0, 8).unwrap());
        let u = StateVector::gaussian(g, &[0.1, -0.2], 0.9, &[1.0, 0.0]).unwrap();
        let bytes = u.to_bytes();
        assert_eq!(StateVector::from_bytes(&bytes).unwrap(), u);
        assert!(StateVector::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = gauss_1d(64);
        let b = gauss_1d(128);
        assert_eq!(a.distance(&b), Err(Error::GridMismatch));
    }

    #[test]
    fn shifted_gaussian_sigma2_lower_bound() {
        let g = Arc::new(TensorGrid::uniform(1, 1, 16.0, 256).unwrap());
        for c in [2.0, 4.0, 6.0] {
            let u = StateVector::gaussian(g.clone(), &[c], 1.0, &[0.0]).unwrap();
            assert!(sigma_k_norm(&u, 2).unwrap() >= c * c * u.norm());
        }
    }
}
