//! Compressed-row complex operators and Lanczos-based routines on them.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<Complex64>,
}

const PARALLEL_ROWS: usize = 8192;

impl SparseOp {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().expect("previous entry") += v;
                continue;
            }
            col.push(c);
            val.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col[lo..hi].binary_search(&c) {
            Ok(k) => self.val[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let row = |r: usize| {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            s
        };
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = row(r));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[k];
                worst = worst.max((self.val[k] - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        self.val.iter().all(|v| v.im == 0.0)
    }

    pub fn to_dense(&self) -> CMatrix<f64> {
        let mut m = CMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col[k])] = self.val[k];
            }
        }
        m
    }
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Orthonormal Lanczos basis with its real tridiagonal projection.
struct Krylov {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Krylov {
    fn start(v0: &[Complex64]) -> (Self, f64) {
        let b0 = norm(v0);
        let q: Vec<Complex64> = v0.iter().map(|z| z / b0).collect();
        (
            Self {
                basis: vec![q],
                alpha: Vec::new(),
                beta: Vec::new(),
            },
            b0,
        )
    }

    /// Adds one vector; returns `false` on an invariant subspace.
    fn extend(&mut self, h: &SparseOp, scratch: &mut [Complex64]) -> bool {
        let j = self.basis.len() - 1;
        h.apply(&self.basis[j], scratch);
        let a = dot(&self.basis[j], scratch).re;
        self.alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, scratch);
                axpy(-c, q, scratch);
            }
        }
        let b = norm(scratch);
        let scale = self.alpha.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        self.beta.push(b);
        if b <= 1e-14 * scale {
            return false;
        }
        self.basis.push(scratch.iter().map(|z| z / b).collect());
        true
    }

    fn tridiagonal(&self, m: usize) -> CMatrix<f64> {
        let mut t = CMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = Complex64::new(self.alpha[i], 0.0);
            if i + 1 < m {
                t[(i, i + 1)] = Complex64::new(self.beta[i], 0.0);
                t[(i + 1, i)] = Complex64::new(self.beta[i], 0.0);
            }
        }
        t
    }
}

/// `exp(-i H dt) v` by a Krylov projection whose dimension grows until the
/// a-posteriori error estimate drops below `tol` (relative to `|v|`).
pub fn expm_step(h: &SparseOp, v: &[Complex64], dt: f64, tol: f64, max_dim: usize) -> Result<Vec<Complex64>> {
    let (mut kr, b0) = Krylov::start(v);
    if b0 == 0.0 {
        return Ok(v.to_vec());
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); h.dim()];
    loop {
        let alive = kr.extend(h, &mut scratch);
        let m = kr.alpha.len();
        let t = kr.tridiagonal(m);
        let (w, u) = hermitian_eigen(&t);
        // c = exp(-i T dt) e_1
        let c: Vec<Complex64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| u[(i, k)] * Complex64::from_polar(1.0, -w[k] * dt) * u[(0, k)].conj())
                    .sum()
            })
            .collect();
        let err = kr.beta[m - 1] * c[m - 1].norm();
        if !alive || err <= tol || m >= max_dim.min(h.dim()) {
            if alive && err > tol {
                return Err(Error::Convergence(format!(
                    "Krylov propagator did not converge in {m} vectors (error {err:e})"
                )));
            }
            let mut out = vec![Complex64::new(0.0, 0.0); h.dim()];
            for (ci, q) in c.iter().zip(&kr.basis) {
                axpy(ci * b0, q, &mut out);
            }
            return Ok(out);
        }
    }
}

/// Lowest eigenvalue by Lanczos with full reorthogonalization.
pub fn lowest_eigenvalue(h: &SparseOp, v0: &[Complex64], rel_tol: f64, max_dim: usize) -> Result<f64> {
    let (mut kr, b0) = Krylov::start(v0);
    if b0 == 0.0 {
        return Err(Error::InvalidParams("zero start vector".into()));
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); h.dim()];
    let mut prev = f64::INFINITY;
    loop {
        let alive = kr.extend(h, &mut scratch);
        let m = kr.alpha.len();
        if m % 5 != 0 && alive && m < max_dim {
            continue;
        }
        let (w, u) = hermitian_eigen(&kr.tridiagonal(m));
        let e = w[0];
        let resid = kr.beta[m - 1] * u[(m - 1, 0)].norm();
        if !alive || (resid <= rel_tol * e.abs() && (e - prev).abs() <= rel_tol * e.abs()) {
            return Ok(e);
        }
        if m >= max_dim.min(h.dim()) {
            return Err(Error::Convergence(format!(
                "Lanczos did not converge in {m} vectors (residual {resid:e})"
            )));
        }
        prev = e;
    }
}
