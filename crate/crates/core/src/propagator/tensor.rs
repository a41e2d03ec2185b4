use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_drift, BackendConfig, BackendKind, Evolver, Propagate};
use crate::error::{Error, Result};
use crate::grid::TensorGrid;
use crate::hamiltonian::Model;
use crate::par;
use crate::state::StateVector;

type C = Complex64;

const CACHE_LIMIT: usize = 4096;

/// Applies `mat` (size `M^count` square) along axes `first..first+count`.
pub fn apply_axis_group(data: &[C], grid: &TensorGrid, first: usize, count: usize, mat: &DMatrix<C>) -> Vec<C> {
    let (_, size, post) = grid.blocks(first, count);
    assert_eq!(mat.nrows(), size, "matrix does not match the axis group");
    let rows: Vec<C> = (0..size * size).map(|k| mat[(k / size, k % size)]).collect();
    let mut out = vec![C::new(0.0, 0.0); data.len()];
    let rows_per_chunk = (1024 / post).max(1);
    par::for_each_chunk_mut(&mut out, rows_per_chunk * post, |chunk, block| {
        for (r, row) in block.chunks_mut(post).enumerate() {
            let global = chunk * rows_per_chunk + r;
            let (p, i) = (global / size, global % size);
            let input = &data[p * size * post..(p + 1) * size * post];
            let coeffs = &rows[i * size..(i + 1) * size];
            for (ip, c) in coeffs.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let lane = &input[ip * post..(ip + 1) * post];
                for (o, x) in row.iter_mut().zip(lane) {
                    *o += c * x;
                }
            }
        }
    });
    out
}

/// `U_{0,1}(t, s) ⊗ ... ⊗ U_{0,N}(t, s)` from dense single-particle factors.
pub struct TensorPropagator {
    grid: Arc<TensorGrid>,
    factors: Vec<Evolver>,
    static_fields: bool,
    cache: Mutex<HashMap<(u64, u64), Arc<Vec<DMatrix<C>>>>>,
}

impl std::fmt::Debug for TensorPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorPropagator")
            .field("particles", &self.factors.len())
            .field("static", &self.static_fields)
            .finish()
    }
}

impl TensorPropagator {
    /// Requires a model without interaction potentials. The backend kind is
    /// forced to dense; `dt` and the Magnus order are honoured.
    pub fn new(model: &Model, config: BackendConfig) -> Result<Self> {
        if !model.potentials.is_empty() {
            return Err(Error::UnsupportedField {
                backend: "tensor".into(),
                reason: "interaction potentials present".into(),
            });
        }
        let cfg = BackendConfig {
            kind: BackendKind::Dense,
            ..config
        };
        let factors = (0..model.system.n_particles())
            .map(|j| Evolver::new(model.particle_model(j)?, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorPropagator {
            grid: model.grid.clone(),
            factors,
            static_fields: model.is_static(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    /// Single-particle matrices `U_{0,j}(t, s)`, cached.
    pub fn factors(&self, t: f64, s: f64) -> Result<Arc<Vec<DMatrix<C>>>> {
        let key = if self.static_fields {
            ((t - s).to_bits(), 0)
        } else {
            (t.to_bits(), s.to_bits())
        };
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let mats = Arc::new(
            self.factors
                .iter()
                .map(|ev| {
                    if self.static_fields {
                        ev.propagator_matrix(t - s, 0.0)
                    } else {
                        ev.propagator_matrix(t, s)
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        );
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, mats.clone());
        Ok(mats)
    }

    pub fn apply(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        if u.grid() != &*self.grid {
            return Err(Error::GridMismatch);
        }
        if t == s {
            return Ok(u.clone());
        }
        let mats = self.factors(t, s)?;
        let d = self.grid.dim();
        let mut data = u.data().to_vec();
        for (j, m) in mats.iter().enumerate() {
            data = apply_axis_group(&data, &self.grid, j * d, d, m);
        }
        let out = u.with_data(data)?;
        check_drift(BackendKind::Dense, u.norm(), out.norm())?;
        Ok(out)
    }
}

impl Propagate for TensorPropagator {
    fn propagate(&self, u: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        self.apply(u, t, s)
    }

    fn label(&self) -> String {
        format!("tensor x{}", self.factors.len())
    }
}
