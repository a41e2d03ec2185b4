//! Krylov methods: Arnoldi exponential, Lanczos ground state, conjugate gradients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

pub fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C], a: C, x: &[C]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Options for [`krylov_expmv`].
#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub max_dim: usize,
    /// Error allowed per unit of `|tau|`, relative to `||v||`.
    pub tol: f64,
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            max_dim: 30,
            tol: 1e-12,
            max_substeps: 100_000,
        }
    }
}

struct ArnoldiBasis {
    v: Vec<Vec<C>>,
    h: DMatrix<C>,
    m: usize,
    h_next: f64,
}

fn arnoldi<F: Fn(&[C]) -> Vec<C>>(apply: &F, v0: &[C], beta: f64, max_dim: usize) -> ArnoldiBasis {
    let n = v0.len();
    let mmax = max_dim.min(n).max(1);
    let mut basis: Vec<Vec<C>> = Vec::with_capacity(mmax + 1);
    basis.push(v0.iter().map(|x| x / beta).collect());
    let mut h = DMatrix::<C>::zeros(mmax + 1, mmax);
    let mut m = mmax;
    let mut h_next = 0.0;
    for j in 0..mmax {
        let mut w = apply(&basis[j]);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = dot(vi, &w);
                h[(i, j)] += c;
                axpy(&mut w, -c, vi);
            }
        }
        let hn = norm(&w);
        h[(j + 1, j)] = C::new(hn, 0.0);
        h_next = hn;
        if hn <= 1e-13 * beta.max(1e-300) || j + 1 == mmax {
            m = j + 1;
            if hn > 1e-13 * beta.max(1e-300) {
                basis.push(w.iter().map(|x| x / hn).collect());
            }
            break;
        }
        basis.push(w.iter().map(|x| x / hn).collect());
    }
    ArnoldiBasis { v: basis, h, m, h_next }
}

/// `exp(-i tau A) v` for an operator given by its action, with adaptive
/// substeps controlled by the a-posteriori Arnoldi error estimate.
pub fn krylov_expmv<F>(apply: F, v: &[C], tau: f64, opts: KrylovOptions) -> Result<Vec<C>>
where
    F: Fn(&[C]) -> Vec<C>,
{
    if tau == 0.0 {
        return Ok(v.to_vec());
    }
    let mut out = v.to_vec();
    let total = tau.abs();
    let sign = tau.signum();
    let mut done = 0.0;
    let mut sub = total;
    let mut steps = 0usize;
    while done < total * (1.0 - 1e-15) {
        let beta = norm(&out);
        if beta == 0.0 {
            return Ok(out);
        }
        sub = sub.min(total - done);
        let basis = arnoldi(&apply, &out, beta, opts.max_dim);
        let m = basis.m;
        let hm = basis.h.view((0, 0), (m, m)).into_owned();
        loop {
            steps += 1;
            if steps > opts.max_substeps {
                return Err(Error::KrylovFailure(format!(
                    "no convergence after {} substeps (tau = {tau})",
                    opts.max_substeps
                )));
            }
            let e = (hm.clone() * C::new(0.0, -sign * sub)).exp();
            let exact = basis.v.len() == m || basis.h_next <= 1e-13 * beta;
            let err = if exact {
                0.0
            } else {
                beta * basis.h_next * sub * e[(m - 1, 0)].norm()
            };
            let allowed = opts.tol * beta * sub.max(1e-3 * total);
            if err <= allowed || sub < 1e-14 * total {
                let coeff: Vec<C> = (0..m).map(|i| e[(i, 0)] * beta).collect();
                let mut next = vec![ZERO; out.len()];
                for (c, vi) in coeff.iter().zip(&basis.v) {
                    axpy(&mut next, *c, vi);
                }
                out = next;
                done += sub;
                if err < 0.1 * allowed {
                    sub *= 1.5;
                }
                break;
            }
            sub *= 0.5;
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of a Hermitian operator by Lanczos with full
/// reorthogonalization. Returns `(lambda_min, iterations)`.
pub fn lanczos_min_eigenvalue<F>(apply: F, start: &[C], max_iter: usize, tol: f64) -> Result<(f64, usize)>
where
    F: Fn(&[C]) -> Vec<C>,
{
    let beta0 = norm(start);
    if beta0 == 0.0 {
        return Err(Error::KrylovFailure("zero start vector".into()));
    }
    let mut basis: Vec<Vec<C>> = vec![start.iter().map(|x| x / beta0).collect()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    let n = start.len();
    for it in 0..max_iter.min(n) {
        let mut w = apply(&basis[it]);
        let a = dot(&basis[it], &w).re;
        alphas.push(a);
        for _ in 0..2 {
            for vi in &basis {
                let c = dot(vi, &w);
                axpy(&mut w, -c, vi);
            }
        }
        let b = norm(&w);
        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let lam = t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if (lam - last).abs() < tol * lam.abs().max(1.0) || b < 1e-12 {
            return Ok((lam, it + 1));
        }
        last = lam;
        betas.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Err(Error::KrylovFailure(format!("Lanczos did not converge in {max_iter} iterations")))
}

/// Solves `A x = b` for Hermitian positive definite `A`.
pub fn conjugate_gradient<F>(apply: F, b: &[C], tol: f64, max_iter: usize) -> Result<Vec<C>>
where
    F: Fn(&[C]) -> Vec<C>,
{
    let bn = norm(b);
    let mut x = vec![ZERO; b.len()];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap).re;
        axpy(&mut x, C::new(alpha, 0.0), &p);
        axpy(&mut r, C::new(-alpha, 0.0), &ap);
        let rr_new = dot(&r, &r).re;
        if rr_new.sqrt() <= tol * bn {
            return Ok(x);
        }
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + *pi * beta);
        rr = rr_new;
    }
    Err(Error::LinearSolve(format!("CG did not reach {tol:e} in {max_iter} iterations")))
}

/// Dense `exp(-i tau H)` for Hermitian `H` via its eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C>,
}

impl HermitianEigen {
    pub fn new(h: &DMatrix<C>) -> Self {
        let eig = h.clone().symmetric_eigen();
        HermitianEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `exp(-i tau H)` as a dense matrix.
    pub fn propagator(&self, tau: f64) -> DMatrix<C> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let ph = C::from_polar(1.0, -tau * self.values[j]);
            scaled.column_mut(j).iter_mut().for_each(|v| *v *= ph);
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i tau H) v`.
    pub fn apply(&self, tau: f64, v: &[C]) -> Vec<C> {
        let x = DVector::from_column_slice(v);
        let mut c = self.vectors.adjoint() * x;
        for (j, cj) in c.iter_mut().enumerate() {
            *cj *= C::from_polar(1.0, -tau * self.values[j]);
        }
        (&self.vectors * c).as_slice().to_vec()
    }
}
