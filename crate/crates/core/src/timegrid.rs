//! Uniform time grids and quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

/// `K + 1` equally spaced nodes from `start` to `end`; `end < start` is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    intervals: usize,
    rule: QuadratureRule,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, intervals: usize, rule: QuadratureRule) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::InvalidTimeGrid("non-finite endpoint".into()));
        }
        if intervals < 2 {
            return Err(Error::QuadratureUnderflow(intervals));
        }
        Ok(TimeGrid {
            start,
            end,
            intervals,
            rule,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Signed node spacing.
    pub fn step(&self) -> f64 {
        (self.end - self.start) / self.intervals as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.end
        } else {
            self.start + k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|k| self.node(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).abs()
    }

    /// Nonnegative weights integrating over the interval (`|dt|`).
    pub fn weights(&self) -> Vec<f64> {
        let k = self.intervals;
        let h = self.step().abs();
        let mut w = vec![0.0; k + 1];
        match self.rule {
            QuadratureRule::Trapezoid => {
                for i in 0..k {
                    w[i] += h / 2.0;
                    w[i + 1] += h / 2.0;
                }
            }
            QuadratureRule::Simpson => {
                let simpson_end = if k % 2 == 0 { k } else { k - 3 };
                for i in (0..simpson_end).step_by(2) {
                    w[i] += h / 3.0;
                    w[i + 1] += 4.0 * h / 3.0;
                    w[i + 2] += h / 3.0;
                }
                if k % 2 == 1 {
                    // Simpson 3/8 on the last three intervals
                    let s = simpson_end;
                    w[s] += 3.0 * h / 8.0;
                    w[s + 1] += 9.0 * h / 8.0;
                    w[s + 2] += 9.0 * h / 8.0;
                    w[s + 3] += 3.0 * h / 8.0;
                }
            }
        }
        w
    }

    /// Every `factor`-th node of this grid.
    pub fn coarsened(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 || self.intervals % factor != 0 {
            return Err(Error::InvalidTimeGrid(format!(
                "{} intervals cannot be coarsened by {factor}",
                self.intervals
            )));
        }
        TimeGrid::new(self.start, self.end, self.intervals / factor, self.rule)
    }
}

/// States sampled at the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time: TimeGrid,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn new(time: TimeGrid, states: Vec<StateVector>) -> Result<Self> {
        if states.len() != time.len() {
            return Err(Error::InvalidTimeGrid(format!("{} states for {} nodes", states.len(), time.len())));
        }
        Ok(Trajectory { time, states })
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectories have at least 3 nodes")
    }

    /// Largest `||u(t_k)||` over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(|u| u.norm()).fold(0.0, f64::max)
    }

    /// Second-order finite-difference time derivative at every node:
    /// centered inside, one-sided three-point at the ends.
    pub fn derivative(&self) -> Result<Vec<StateVector>> {
        let h = self.time.step();
        let n = self.states.len();
        let s = &self.states;
        let combo = |terms: &[(f64, usize)]| -> Result<StateVector> {
            let mut out = s[0].scaled(0.0.into());
            for &(c, k) in terms {
                out.axpy((c / h).into(), &s[k])?;
            }
            Ok(out)
        };
        (0..n)
            .map(|k| {
                if k == 0 {
                    combo(&[(-1.5, 0), (2.0, 1), (-0.5, 2)])
                } else if k == n - 1 {
                    combo(&[(1.5, n - 1), (-2.0, n - 2), (0.5, n - 3)])
                } else {
                    combo(&[(0.5, k + 1), (-0.5, k - 1)])
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(g: &TimeGrid, f: impl Fn(f64) -> f64) -> f64 {
        g.nodes().iter().zip(g.weights()).map(|(t, w)| w * f(*t)).sum()
    }

    #[test]
    fn underflow() {
        assert_eq!(
            TimeGrid::new(0.0, 1.0, 1, QuadratureRule::Simpson),
            Err(Error::QuadratureUnderflow(1))
        );
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for k in [2, 3, 5, 8] {
            let g = TimeGrid::new(0.0, 2.0, k, QuadratureRule::Simpson).unwrap();
            assert!((integrate(&g, |t| t * t * t - t) - 2.0).abs() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn backward_grids_have_positive_weights() {
        let g = TimeGrid::new(1.0, 0.0, 4, QuadratureRule::Trapezoid).unwrap();
        assert!(g.step() < 0.0);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g.node(4), 0.0);
    }
}
