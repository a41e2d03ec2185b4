//! Mass-weighted configuration space `R^{Nd}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ClusterSpec;

/// Masses, charges and spatial dimension of an N-particle system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    masses: Vec<f64>,
    charges: Vec<f64>,
    dim: usize,
}

impl ParticleSystem {
    pub fn new(masses: Vec<f64>, charges: Vec<f64>, dim: usize) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidSystem("at least one particle is required".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidSystem("spatial dimension must be >= 1".into()));
        }
        if masses.len() != charges.len() {
            return Err(Error::InvalidSystem(format!(
                "{} masses but {} charges",
                masses.len(),
                charges.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidSystem(format!("mass {m} is not positive")));
        }
        if charges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidSystem("non-finite charge".into()));
        }
        Ok(ParticleSystem { masses, charges, dim })
    }

    /// `n` particles of unit mass and charge.
    pub fn unit(n: usize, dim: usize) -> Result<Self> {
        ParticleSystem::new(vec![1.0; n], vec![1.0; n], dim)
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N d`, the dimension of configuration space.
    pub fn config_dim(&self) -> usize {
        self.masses.len() * self.dim
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn mass(&self, j: usize) -> f64 {
        self.masses[j]
    }

    pub fn charge(&self, j: usize) -> f64 {
        self.charges[j]
    }

    /// Coordinates of particle `j` (zero-based) inside a configuration point.
    pub fn particle<'a>(&self, x: &'a [f64], j: usize) -> &'a [f64] {
        &x[j * self.dim..(j + 1) * self.dim]
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.config_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_cluster(&self, cluster: &ClusterSpec) -> Result<()> {
        cluster.validate_for(self.n_particles())?;
        if cluster.spatial_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: cluster.spatial_dim(),
            });
        }
        Ok(())
    }
}

/// `sum_j m_j (x_j, y_j)`.
pub fn mass_inner_product(system: &ParticleSystem, x: &[f64], y: &[f64]) -> Result<f64> {
    system.check_point(x)?;
    system.check_point(y)?;
    let d = system.dim();
    Ok(system
        .masses()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let dot: f64 = x[j * d..(j + 1) * d].iter().zip(&y[j * d..(j + 1) * d]).map(|(a, b)| a * b).sum();
            m * dot
        })
        .sum())
}

/// Mass-weighted centre of the particles in `cluster`.
pub fn center_of_mass(system: &ParticleSystem, cluster: &ClusterSpec, x: &[f64]) -> Result<Vec<f64>> {
    system.check_point(x)?;
    system.check_cluster(cluster)?;
    let d = system.dim();
    let mut com = vec![0.0; d];
    let mut total = 0.0;
    for j in cluster.indices() {
        let m = system.mass(j);
        total += m;
        for (c, xi) in com.iter_mut().zip(system.particle(x, j)) {
            *c += m * xi;
        }
    }
    com.iter_mut().for_each(|c| *c /= total);
    Ok(com)
}

/// Sequential Jacobi coordinates for one cluster.
///
/// Row 0 of the matrix produces the centre of mass, row `i >= 1` the vector
/// from the centre of mass of the first `i` members to member `i + 1`. The
/// same matrix acts on every spatial component. Singletons have no centre
/// part and their relative coordinate is the particle position itself.
#[derive(Debug, Clone)]
pub struct JacobiFrame {
    cluster: ClusterSpec,
    dim: usize,
    forward: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl JacobiFrame {
    pub fn new(system: &ParticleSystem, cluster: &ClusterSpec) -> Result<Self> {
        system.check_cluster(cluster)?;
        let idx = cluster.indices();
        let k = idx.len();
        let masses: Vec<f64> = idx.iter().map(|&j| system.mass(j)).collect();
        let forward = if k == 1 {
            DMatrix::identity(1, 1)
        } else {
            let total: f64 = masses.iter().sum();
            let mut jm = DMatrix::zeros(k, k);
            for (c, m) in masses.iter().enumerate() {
                jm[(0, c)] = m / total;
            }
            let mut partial = 0.0;
            for i in 1..k {
                partial += masses[i - 1];
                for c in 0..i {
                    jm[(i, c)] = -masses[c] / partial;
                }
                jm[(i, i)] = 1.0;
            }
            jm
        };
        let inverse = forward
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidSystem("singular Jacobi matrix".into()))?;
        Ok(JacobiFrame {
            cluster: cluster.clone(),
            dim: system.dim(),
            forward,
            inverse,
        })
    }

    pub fn cluster(&self) -> &ClusterSpec {
        &self.cluster
    }

    /// Change of variables acting on member index (per spatial component).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.forward
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Determinant of the full `(|D| d)`-dimensional change of variables.
    pub fn determinant(&self) -> f64 {
        self.forward.determinant().powi(self.dim as i32)
    }

    fn has_center(&self) -> bool {
        self.cluster.size() >= 2
    }

    /// Splits the stacked member coordinates `x_D` (member-major, length
    /// `|D| d`) into `(x_{D,c}, x_{D,r})`.
    pub fn split(&self, x_d: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.cluster.size();
        let d = self.dim;
        if x_d.len() != k * d {
            return Err(Error::DimensionMismatch {
                expected: k * d,
                got: x_d.len(),
            });
        }
        let mut out = vec![0.0; k * d];
        for i in 0..k {
            for c in 0..k {
                let w = self.forward[(i, c)];
                if w != 0.0 {
                    for a in 0..d {
                        out[i * d + a] += w * x_d[c * d + a];
                    }
                }
            }
        }
        if self.has_center() {
            let rel = out.split_off(d);
            Ok((out, rel))
        } else {
            Ok((Vec::new(), out))
        }
    }

    /// Inverse of [`JacobiFrame::split`].
    pub fn merge(&self, center: &[f64], relative: &[f64]) -> Result<Vec<f64>> {
        let k = self.cluster.size();
        let d = self.dim;
        let stacked: Vec<f64> = center.iter().chain(relative).copied().collect();
        if stacked.len() != k * d || (self.has_center() && center.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: k * d,
                got: stacked.len(),
            });
        }
        let mut out = vec![0.0; k * d];
        for c in 0..k {
            for i in 0..k {
                let w = self.inverse[(c, i)];
                for a in 0..d {
                    out[c * d + a] += w * stacked[i * d + a];
                }
            }
        }
        Ok(out)
    }

    /// Gathers the members of the cluster out of a full configuration point.
    pub fn gather(&self, system: &ParticleSystem, x: &[f64]) -> Result<Vec<f64>> {
        system.check_point(x)?;
        Ok(self
            .cluster
            .indices()
            .iter()
            .flat_map(|&j| system.particle(x, j).iter().copied())
            .collect())
    }

    /// Relative coordinate `x_{D,r}` of a full configuration point.
    pub fn relative(&self, system: &ParticleSystem, x: &[f64]) -> Result<Vec<f64>> {
        let xd = self.gather(system, x)?;
        Ok(self.split(&xd)?.1)
    }
}

/// Splits a configuration point.
pub fn jacobi_split(frame: &JacobiFrame, x_d: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    frame.split(x_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn com_examples() {
        let sys = ParticleSystem::unit(2, 1).unwrap();
        let d = ClusterSpec::new(&[1, 2], 1).unwrap();
        assert_eq!(center_of_mass(&sys, &d, &[0.0, 2.0]).unwrap(), vec![1.0]);

        let sys = ParticleSystem::new(vec![1.0, 3.0], vec![1.0, 1.0], 1).unwrap();
        assert_eq!(center_of_mass(&sys, &d, &[0.0, 4.0]).unwrap(), vec![3.0]);

        let single = ClusterSpec::new(&[2], 1).unwrap();
        assert_eq!(center_of_mass(&sys, &single, &[0.0, 4.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(ParticleSystem::new(vec![1.0, 0.0], vec![1.0, 1.0], 1).is_err());
        assert!(ParticleSystem::new(vec![], vec![], 1).is_err());
        let sys = ParticleSystem::unit(2, 1).unwrap();
        assert!(matches!(
            mass_inner_product(&sys, &[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_body_relative_is_difference() {
        let sys = ParticleSystem::unit(2, 3).unwrap();
        let frame = JacobiFrame::new(&sys, &ClusterSpec::new(&[1, 2], 3).unwrap()).unwrap();
        let (c, r) = frame.split(&[1.0, 2.0, 3.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(c, vec![2.5, 4.0, 5.5]);
        assert_eq!(r, vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn three_body_unit_determinant() {
        let sys = ParticleSystem::unit(3, 1).unwrap();
        let frame = JacobiFrame::new(&sys, &ClusterSpec::new(&[1, 2, 3], 1).unwrap()).unwrap();
        // Rows (1/3,1/3,1/3), (-1,1,0), (-1/2,-1/2,1); cofactor expansion
        // along the last column gives 1/3 + (1/3 + 1/3) = 1.
        assert_relative_eq!(frame.determinant(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn center_and_relative_blocks_are_mass_orthogonal() {
        let sys = ParticleSystem::new(vec![2.0, 0.5, 3.0], vec![1.0; 3], 1).unwrap();
        let frame = JacobiFrame::new(&sys, &ClusterSpec::new(&[1, 2, 3], 1).unwrap()).unwrap();
        let inv = frame.inverse_matrix();
        for i in 1..3 {
            let c: Vec<f64> = (0..3).map(|r| inv[(r, 0)]).collect();
            let v: Vec<f64> = (0..3).map(|r| inv[(r, i)]).collect();
            assert!(mass_inner_product(&sys, &c, &v).unwrap().abs() < 1e-14);
        }
    }
}
