use serde::{Deserialize, Serialize};

use super::Propagate;
use crate::error::{Error, Result};
use crate::exponent::{ClusterSpec, Exponent};
use crate::hamiltonian::least_squares_slope;
use crate::norms::ClusterLattice;
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersiveOptions {
    /// Window `[start, end]` in units of `t - s`.
    pub start: f64,
    pub end: f64,
    pub points: usize,
    /// Width of the boundary band that is monitored.
    pub margin: f64,
    /// Largest boundary mass tolerated.
    pub guard: f64,
}

impl Default for DispersiveOptions {
    fn default() -> Self {
        DispersiveOptions {
            start: 1.0,
            end: 4.0,
            points: 8,
            margin: 2.0,
            guard: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersiveReport {
    pub cluster: String,
    pub relative_dimension: usize,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub max_boundary_mass: f64,
}

/// Fits the log-log slope of `||U(t,s)u||_{L^{inf,2}_D} / ||u||_{L^{1,2}_D}`
/// over a geometric time window.
pub fn dispersive_decay_fit(
    prop: &dyn Propagate,
    cluster: &ClusterSpec,
    u: &StateVector,
    s: f64,
    opts: &DispersiveOptions,
) -> Result<DispersiveReport> {
    if !(opts.start > 0.0 && opts.end > opts.start && opts.points >= 2) {
        return Err(Error::InvalidTimeGrid(format!(
            "dispersive window [{}, {}] with {} points",
            opts.start, opts.end, opts.points
        )));
    }
    let lattice = ClusterLattice::new(u.grid(), cluster)?;
    let denom = lattice.mixed_norm(u.data(), Exponent::int(1), Exponent::int(2));
    let ratio = (opts.end / opts.start).powf(1.0 / (opts.points - 1) as f64);
    let times: Vec<f64> = (0..opts.points).map(|k| opts.start * ratio.powi(k as i32)).collect();
    let mut ratios = Vec::with_capacity(times.len());
    let mut worst: f64 = 0.0;
    let mut cur = u.clone();
    let mut prev = 0.0;
    for &tau in &times {
        cur = prop.propagate(&cur, s + tau, s + prev)?;
        prev = tau;
        let mass = cur.boundary_mass(opts.margin) / u.norm_sq();
        worst = worst.max(mass);
        if mass > opts.guard {
            return Err(Error::WindowTooLong {
                time: s + tau,
                mass,
                limit: opts.guard,
            });
        }
        ratios.push(lattice.mixed_norm(cur.data(), Exponent::Infinite, Exponent::int(2)) / denom);
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let slope = least_squares_slope(&lx, &ly);
    let n_d = cluster.relative_dimension();
    let expected = -(n_d as f64) / 2.0;
    Ok(DispersiveReport {
        cluster: cluster.to_string(),
        relative_dimension: n_d,
        times,
        ratios,
        slope,
        expected,
        relative_error: ((slope - expected) / expected).abs(),
        max_boundary_mass: worst,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::FieldSpec;
    use crate::geometry::ParticleSystem;
    use crate::grid::TensorGrid;
    use crate::hamiltonian::Model;
    use crate::propagator::{BackendConfig, BackendKind, Evolver};

    fn free(n: usize, extent: f64, points: usize) -> Evolver {
        let grid = Arc::new(TensorGrid::uniform(n, 1, extent, points).unwrap());
        let m = Model::new(ParticleSystem::unit(n, 1).unwrap(), FieldSpec::zero(1), Vec::new(), grid).unwrap();
        Evolver::new(m, BackendConfig::with_kind(BackendKind::SplitStep, 10.0)).unwrap()
    }

    #[test]
    fn one_particle_slope() {
        let ev = free(1, 48.0, 1024);
        let u = StateVector::gaussian(ev.model().grid.clone(), &[0.0], 0.5, &[0.0]).unwrap();
        let c = ClusterSpec::new(&[1], 1).unwrap();
        let r = dispersive_decay_fit(&ev, &c, &u, 0.0, &DispersiveOptions::default()).unwrap();
        assert!(r.relative_error < 0.1, "{r:?}");
    }

    #[test]
    fn pair_cluster_slope() {
        let ev = free(2, 48.0, 512);
        let u = StateVector::gaussian(ev.model().grid.clone(), &[0.0, 0.0], 0.5, &[0.0, 0.0]).unwrap();
        let c = ClusterSpec::new(&[1, 2], 1).unwrap();
        let r = dispersive_decay_fit(&ev, &c, &u, 0.0, &DispersiveOptions::default()).unwrap();
        assert!(r.relative_error < 0.1, "{r:?}");
    }

    #[test]
    fn shrinking_window_start_increases_ratio() {
        let ev = free(1, 48.0, 1024);
        let u = StateVector::gaussian(ev.model().grid.clone(), &[0.0], 0.5, &[0.0]).unwrap();
        let c = ClusterSpec::new(&[1], 1).unwrap();
        let opts = DispersiveOptions {
            start: 0.125,
            end: 1.0,
            points: 4,
            ..Default::default()
        };
        let r = dispersive_decay_fit(&ev, &c, &u, 0.0, &opts).unwrap();
        assert!(r.ratios.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn long_window_trips_guard() {
        let ev = free(1, 8.0, 128);
        let u = StateVector::gaussian(ev.model().grid.clone(), &[0.0], 0.5, &[0.0]).unwrap();
        let c = ClusterSpec::new(&[1], 1).unwrap();
        let err = dispersive_decay_fit(&ev, &c, &u, 0.0, &DispersiveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::WindowTooLong { .. }));
    }
}
