//! Small dense complex linear algebra, generic over [`Real`].
//!
//! The matrices handled here are at most a few dozen rows (the 6×6 quadratic
//! form, Krylov projections), so everything is straightforward `O(n³)` code
//! that works unchanged for `f64` and double-double scalars.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn diagonal(values: &[C<T>]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C<T>]) {
        for (r, x) in v.iter().enumerate() {
            self[(r, c)] = *x;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] = out[(r, c)] + a * rhs[(k, c)];
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] - rhs[(r, c)])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Largest off-diagonal entry modulus.
    pub fn max_abs_offdiag(&self) -> T {
        let mut m = T::zero();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if r != c {
                    let x = self[(r, c)].norm();
                    if x > m {
                        m = x;
                    }
                }
            }
        }
        m
    }

    /// `max |A - A†|`.
    pub fn hermiticity_residual(&self) -> T {
        self.sub(&self.adjoint()).max_abs()
    }

    /// LU factorization with partial pivoting. `None` if a pivot is exactly zero.
    pub fn lu(&self) -> Option<Lu<T>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| {
                    a[(i, k)]
                        .norm()
                        .partial_cmp(&a[(j, k)].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(k);
            if a[(p, k)].is_zero() {
                return None;
            }
            if p != k {
                perm.swap(p, k);
                for c in 0..n {
                    let t = a[(k, c)];
                    a[(k, c)] = a[(p, c)];
                    a[(p, c)] = t;
                }
            }
            let pivot = a[(k, k)];
            for r in (k + 1)..n {
                let f = a[(r, k)] / pivot;
                a[(r, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for c in (k + 1)..n {
                    let v = a[(k, c)];
                    a[(r, c)] = a[(r, c)] - f * v;
                }
            }
        }
        Some(Lu { lu: a, perm })
    }

    pub fn inverse(&self) -> Option<Self> {
        let lu = self.lu()?;
        Some(lu.solve_matrix(&Self::identity(self.rows)))
    }

    /// Lower-triangular `L` with `A = L L†`, or `None` if `A` is not
    /// numerically positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = C::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    /// Eigenvalues of a general square matrix (Hessenberg reduction followed
    /// by Wilkinson-shifted complex QR iterations).
    pub fn eigenvalues(&self) -> Option<Vec<C<T>>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return Some(Vec::new());
        }
        let mut h = self.clone();
        h.reduce_to_hessenberg();
        let eps = T::eps();
        let mut out = vec![C::zero(); n];
        let mut hi = n - 1;
        let mut iter = 0usize;
        loop {
            if hi == 0 {
                out[0] = h[(0, 0)];
                break;
            }
            // Locate the bottom of the unreduced block ending at `hi`.
            let mut lo = hi;
            while lo > 0 {
                let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
                if h[(lo, lo - 1)].norm() <= eps * s {
                    h[(lo, lo - 1)] = C::zero();
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                out[hi] = h[(hi, hi)];
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            if iter > 200 {
                return None;
            }
            let shift = if iter % 11 == 0 {
                // exceptional shift
                h[(hi, hi)] + C::new(h[(hi, hi - 1)].norm(), T::zero())
            } else {
                wilkinson_shift(
                    h[(hi - 1, hi - 1)],
                    h[(hi - 1, hi)],
                    h[(hi, hi - 1)],
                    h[(hi, hi)],
                )
            };
            h.qr_step(lo, hi, shift);
        }
        Some(out)
    }

    fn reduce_to_hessenberg(&mut self) {
        let n = self.rows;
        for k in 0..n.saturating_sub(2) {
            let x: Vec<C<T>> = ((k + 1)..n).map(|r| self[(r, k)]).collect();
            let alpha = x.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
            if alpha.is_zero() {
                continue;
            }
            let phase = if x[0].norm().is_zero() {
                C::one()
            } else {
                x[0] / x[0].norm()
            };
            let mut v = x.clone();
            v[0] = v[0] + phase * alpha;
            let vn = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
            if vn.is_zero() {
                continue;
            }
            for z in v.iter_mut() {
                *z = *z / vn;
            }
            // H <- (I - 2vv†) H (I - 2vv†)
            for c in 0..n {
                let mut s = C::zero();
                for (i, vi) in v.iter().enumerate() {
                    s = s + vi.conj() * self[(k + 1 + i, c)];
                }
                let two_s = s * T::lit(2.0);
                for (i, vi) in v.iter().enumerate() {
                    let r = k + 1 + i;
                    self[(r, c)] = self[(r, c)] - *vi * two_s;
                }
            }
            for r in 0..n {
                let mut s = C::zero();
                for (i, vi) in v.iter().enumerate() {
                    s = s + self[(r, k + 1 + i)] * *vi;
                }
                let two_s = s * T::lit(2.0);
                for (i, vi) in v.iter().enumerate() {
                    let c = k + 1 + i;
                    self[(r, c)] = self[(r, c)] - two_s * vi.conj();
                }
            }
            for r in (k + 2)..n {
                self[(r, k)] = C::zero();
            }
        }
    }

    /// One explicit shifted QR sweep on the Hessenberg block `lo..=hi`.
    fn qr_step(&mut self, lo: usize, hi: usize, shift: C<T>) {
        for i in lo..=hi {
            self[(i, i)] = self[(i, i)] - shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let a = self[(k, k)];
            let b = self[(k + 1, k)];
            let r = a.norm().hypot(b.norm());
            let (c, s) = if r.is_zero() {
                (C::one(), C::zero())
            } else {
                (a / r, b / r)
            };
            // G = [[c*, s*], [-s, c]] applied to rows k, k+1
            for col in k..=hi {
                let x = self[(k, col)];
                let y = self[(k + 1, col)];
                self[(k, col)] = c.conj() * x + s.conj() * y;
                self[(k + 1, col)] = -s * x + c * y;
            }
            rots.push((c, s));
        }
        for (idx, (c, s)) in rots.into_iter().enumerate() {
            let k = lo + idx;
            // multiply columns k, k+1 by G†
            let top = (k + 2).min(hi);
            for row in lo..=top {
                let x = self[(row, k)];
                let y = self[(row, k + 1)];
                self[(row, k)] = x * c + y * s;
                self[(row, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for i in lo..=hi {
            self[(i, i)] = self[(i, i)] + shift;
        }
    }
}

fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = T::lit(0.5);
    let tr = (a + d) * half;
    let det = a * d - b * c;
    let disc = (tr * tr - det).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.rows;
        let mut x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for k in 0..r {
                let f = self.lu[(r, k)];
                x[r] = x[r] - f * x[k];
            }
        }
        for r in (0..n).rev() {
            for k in (r + 1)..n {
                let f = self.lu[(r, k)];
                x[r] = x[r] - f * x[k];
            }
            x[r] = x[r] / self.lu[(r, r)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let mut out = CMatrix::zeros(b.rows, b.cols);
        for c in 0..b.cols {
            let x = self.solve(&b.column(c));
            out.set_column(c, &x);
        }
        out
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the unitary matrix whose
/// columns are the matching eigenvectors.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut a = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.max_abs();
    let tol = T::eps() * T::eps() * scale * scale;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= tol || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                let bn = b.norm();
                if bn.is_zero() {
                    continue;
                }
                // Rotate column/row q so a[p][q] becomes real positive.
                let ph = b / bn;
                for k in 0..n {
                    a[(k, q)] = a[(k, q)] * ph.conj();
                }
                for k in 0..n {
                    a[(q, k)] = a[(q, k)] * ph;
                }
                for k in 0..n {
                    v[(k, q)] = v[(k, q)] * ph.conj();
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (T::lit(2.0) * bn);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta.is_zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let x = a[(k, p)];
                    let y = a[(k, q)];
                    a[(k, p)] = x * c - y * s;
                    a[(k, q)] = x * s + y * c;
                }
                for k in 0..n {
                    let x = a[(p, k)];
                    let y = a[(q, k)];
                    a[(p, k)] = x * c - y * s;
                    a[(q, k)] = x * s + y * c;
                }
                a[(p, q)] = C::zero();
                a[(q, p)] = C::zero();
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * c - y * s;
                    v[(k, q)] = x * s + y * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Solves `U x = b` for upper-triangular `U`.
pub fn solve_upper<T: Real>(u: &CMatrix<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = u.rows();
    let mut x = b.to_vec();
    for r in (0..n).rev() {
        for k in (r + 1)..n {
            let f = u[(r, k)];
            x[r] = x[r] - f * x[k];
        }
        x[r] = x[r] / u[(r, r)];
    }
    x
}
