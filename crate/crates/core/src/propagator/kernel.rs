use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Propagate;
use crate::error::{Error, Result};
use crate::par;
use crate::state::StateVector;

type C = Complex64;

/// Closed-form 1-d kernels `b(t,s) (2 pi i tau / m)^{-1/2} e^{i S(t,s,x,y)}`.
///
/// `Electric` is the kernel of `p^2/(2m) + E x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExactKernel {
    Free { mass: f64 },
    Mehler { mass: f64, omega: f64 },
    Electric { mass: f64, field: f64 },
}

impl ExactKernel {
    pub fn name(&self) -> &'static str {
        match self {
            ExactKernel::Free { .. } => "free",
            ExactKernel::Mehler { .. } => "mehler",
            ExactKernel::Electric { .. } => "electric",
        }
    }

    fn mass(&self) -> f64 {
        match *self {
            ExactKernel::Free { mass } | ExactKernel::Mehler { mass, .. } | ExactKernel::Electric { mass, .. } => mass,
        }
    }

    /// Spans at or beyond this bound hit a caustic.
    pub fn caustic_bound(&self) -> f64 {
        match *self {
            ExactKernel::Mehler { omega, .. } => PI / omega,
            _ => f64::INFINITY,
        }
    }

    /// Phase `S` for the span `tau = t - s`.
    pub fn phase(&self, tau: f64, x: f64, y: f64) -> f64 {
        let m = self.mass();
        match *self {
            ExactKernel::Free { .. } => m * (x - y).powi(2) / (2.0 * tau),
            ExactKernel::Mehler { omega, .. } => {
                let (s, c) = (omega * tau).sin_cos();
                m * omega * ((x * x + y * y) * c - 2.0 * x * y) / (2.0 * s)
            }
            ExactKernel::Electric { field, .. } => {
                m * (x - y).powi(2) / (2.0 * tau) - field * tau * (x + y) / 2.0 - field * field * tau.powi(3) / (24.0 * m)
            }
        }
    }

    /// Free-particle phase `m (x - y)^2 / (2 tau)`.
    pub fn free_phase(&self, tau: f64, x: f64, y: f64) -> f64 {
        self.mass() * (x - y).powi(2) / (2.0 * tau)
    }

    /// Amplitude `b` relative to the free prefactor; identically 1 except
    /// for the oscillator.
    pub fn amplitude(&self, tau: f64) -> f64 {
        match *self {
            ExactKernel::Mehler { omega, .. } => (omega * tau / (omega * tau).sin()).abs().sqrt(),
            _ => 1.0,
        }
    }

    /// Full prefactor `b (m / (2 pi i tau))^{1/2}`.
    pub fn prefactor(&self, tau: f64) -> C {
        let mag = (self.mass() / (2.0 * PI * tau.abs())).sqrt() * self.amplitude(tau);
        C::from_polar(mag, -tau.signum() * PI / 4.0)
    }

    fn check_span(&self, tau: f64) -> Result<()> {
        if tau.abs() >= self.caustic_bound() {
            return Err(Error::Caustic {
                kernel: self.name().into(),
                span: tau.abs(),
                bound: self.caustic_bound(),
            });
        }
        Ok(())
    }

    /// Quadrature application `h sum_y K(x, y) u(y)` on a 1-d grid.
    pub fn apply(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        let grid = u.grid();
        if grid.n_axes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: grid.n_axes(),
            });
        }
        let tau = t - s;
        if tau == 0.0 {
            return Ok(u.clone());
        }
        self.check_span(tau)?;
        let axis = grid.axis(0);
        let xs = axis.nodes();
        let pre = self.prefactor(tau) * axis.spacing();
        let data = u.data();
        let out = par::map_range(xs.len(), |i| {
            let x = xs[i];
            let acc: C = xs
                .iter()
                .zip(data)
                .map(|(&y, v)| C::from_polar(1.0, self.phase(tau, x, y)) * v)
                .sum();
            acc * pre
        });
        u.with_data(out)
    }

    /// Largest second difference of `S - S_free` over `points`, divided by `h^2`.
    pub fn phase_remainder_curvature(&self, tau: f64, points: &[f64]) -> Result<f64> {
        self.check_span(tau)?;
        let r = |x: f64, y: f64| self.phase(tau, x, y) - self.free_phase(tau, x, y);
        let h = points[1] - points[0];
        let mut worst: f64 = 0.0;
        for i in 1..points.len() - 1 {
            for j in 1..points.len() - 1 {
                let (x, y) = (points[i], points[j]);
                let dxx = (r(x + h, y) - 2.0 * r(x, y) + r(x - h, y)) / (h * h);
                let dyy = (r(x, y + h) - 2.0 * r(x, y) + r(x, y - h)) / (h * h);
                let dxy = (r(x + h, y + h) - r(x + h, y - h) - r(x - h, y + h) + r(x - h, y - h)) / (4.0 * h * h);
                worst = worst.max(dxx.abs()).max(dyy.abs()).max(dxy.abs());
            }
        }
        Ok(worst)
    }
}

impl Propagate for ExactKernel {
    fn propagate(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        self.apply(u, t, s)
    }

    fn label(&self) -> String {
        format!("{} kernel", self.name())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{FieldSpec, ScalarTerm, TimeCoef};
    use crate::geometry::ParticleSystem;
    use crate::grid::TensorGrid;
    use crate::hamiltonian::Model;
    use crate::propagator::{BackendConfig, Evolver};

    fn setup(fields: FieldSpec, extent: f64, points: usize) -> (Evolver, StateVector) {
        let grid = Arc::new(TensorGrid::uniform(1, 1, extent, points).unwrap());
        let m = Model::new(ParticleSystem::unit(1, 1).unwrap(), fields, Vec::new(), grid.clone()).unwrap();
        let u = StateVector::gaussian(grid, &[0.5], 1.0, &[0.7]).unwrap();
        (Evolver::new(m, BackendConfig::default()).unwrap(), u)
    }

    #[test]
    fn free_kernel_matches_spectral() {
        let (ev, u) = setup(FieldSpec::zero(1), 16.0, 256);
        let k = ExactKernel::Free { mass: 1.0 };
        for t in [1.0, 2.0] {
            let a = k.apply(&u, t, 0.0).unwrap();
            let b = ev.evolve(&u, t, 0.0).unwrap();
            assert!(a.distance(&b).unwrap() < 1e-6, "t = {t}: {}", a.distance(&b).unwrap());
        }
        assert_eq!(k.amplitude(0.3), 1.0);
    }

    #[test]
    fn electric_kernel_matches_spectral() {
        let field = 0.5;
        let fields = FieldSpec::zero(1).with_scalar(ScalarTerm::Linear {
            field: vec![field],
            coef: TimeCoef::Const(1.0),
        });
        let (ev, u) = setup(fields, 16.0, 256);
        let k = ExactKernel::Electric { mass: 1.0, field };
        let a = k.apply(&u, 1.0, 0.0).unwrap();
        let b = ev.evolve(&u, 1.0, 0.0).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-6, "{}", a.distance(&b).unwrap());
    }

    #[test]
    fn mehler_quarter_periods_recur() {
        let grid = Arc::new(TensorGrid::uniform(1, 1, 12.0, 256).unwrap());
        let u = StateVector::gaussian(grid, &[1.0], 0.8, &[0.4]).unwrap();
        let k = ExactKernel::Mehler { mass: 1.0, omega: 1.0 };
        let mut v = u.clone();
        for q in 0..4 {
            let t0 = q as f64 * PI / 2.0;
            v = k.apply(&v, t0 + PI / 2.0, t0).unwrap();
        }
        assert!(v.distance(&u.scaled(C::new(-1.0, 0.0))).unwrap() < 1e-6);
    }

    #[test]
    fn caustic_is_rejected() {
        let grid = Arc::new(TensorGrid::uniform(1, 1, 4.0, 16).unwrap());
        let u = StateVector::gaussian(grid, &[0.0], 1.0, &[0.0]).unwrap();
        let k = ExactKernel::Mehler { mass: 1.0, omega: 2.0 };
        assert!(matches!(k.apply(&u, PI / 2.0, 0.0), Err(Error::Caustic { .. })));
        assert!(ExactKernel::Free { mass: 1.0 }.apply(&u, 1e3, 0.0).is_ok());
    }

    #[test]
    fn mehler_remainder_has_bounded_curvature() {
        let k = ExactKernel::Mehler { mass: 1.0, omega: 1.0 };
        let pts: Vec<f64> = (0..41).map(|i| -10.0 + 0.5 * i as f64).collect();
        let mut prev = 0.0;
        for tau in [0.1, 0.4, 0.8, PI / 2.0] {
            let c = k.phase_remainder_curvature(tau, &pts).unwrap();
            // closed form: max(|cot - 1/tau|, |1/sin - 1/tau|)
            let exact = (1.0 / tau.tan() - 1.0 / tau).abs().max((1.0 / tau.sin() - 1.0 / tau).abs());
            assert!((c - exact).abs() < 1e-6 * (1.0 + exact), "tau {tau}: {c} vs {exact}");
            assert!(c >= prev);
            prev = c;
        }
    }
}
