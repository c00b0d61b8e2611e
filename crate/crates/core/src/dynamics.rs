//! Exact evolution of the full three-cavity Hamiltonian in a truncated Fock
//! basis.
//!
//! Hopping carries `e^{-iθ}` on `a†_n a_{n+1}` (and `e^{iθ}` on its
//! conjugate), the same orientation as the fluctuation matrix in
//! [`crate::bogoliubov`]. With it a photon injected into cavity 1 reaches
//! cavity 2 first for `θ = +π/2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Params, N_SITES};
use crate::sparse::{self, SparseOp};

pub const DEFAULT_N_MAX: usize = 6;
pub const DEFAULT_SAMPLE_DT: f64 = 0.1;
/// Nonzero budget for the assembled Hamiltonian.
pub const DEFAULT_NNZ_CAP: usize = 1_000_000;
pub const NORM_TOL: f64 = 1e-8;
pub const TRUNCATION_TOL: f64 = 1e-6;
const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_MAX_DIM: usize = 80;

/// Three spin-1/2 and three truncated oscillators, ordered
/// cavity 1 ⊗ cavity 2 ⊗ cavity 3 ⊗ spin 1 ⊗ spin 2 ⊗ spin 3 with the last
/// factor fastest. Spin index 0 is `↓`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    pub n_max: usize,
    pub dim: usize,
}

/// Occupations and spin states of one basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisState {
    pub n: [usize; 3],
    pub up: [bool; 3],
}

impl FockBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParams("n_max must be at least 1".into()));
        }
        let levels = n_max + 1;
        Ok(Self {
            n_max,
            dim: levels * levels * levels * 8,
        })
    }

    pub fn index(&self, s: &BasisState) -> usize {
        let l = self.n_max + 1;
        let photons = (s.n[0] * l + s.n[1]) * l + s.n[2];
        let spins = (s.up[0] as usize) << 2 | (s.up[1] as usize) << 1 | s.up[2] as usize;
        photons * 8 + spins
    }

    pub fn state(&self, i: usize) -> BasisState {
        let l = self.n_max + 1;
        let spins = i % 8;
        let photons = i / 8;
        BasisState {
            n: [photons / (l * l), (photons / l) % l, photons % l],
            up: [spins & 4 != 0, spins & 2 != 0, spins & 1 != 0],
        }
    }

    /// Upper bound on the nonzeros of the Hamiltonian in this basis.
    pub fn nnz_estimate(&self) -> usize {
        // diagonal + 2 Rabi terms per site + 2 hopping terms per bond
        self.dim * (1 + 2 * N_SITES + 2 * N_SITES)
    }
}

pub fn build_full_hamiltonian(p: &Params<f64>, basis: &FockBasis) -> Result<SparseOp> {
    build_full_hamiltonian_capped(p, basis, DEFAULT_NNZ_CAP)
}

pub fn build_full_hamiltonian_capped(p: &Params<f64>, basis: &FockBasis, nnz_cap: usize) -> Result<SparseOp> {
    p.validate()?;
    if basis.nnz_estimate() > nnz_cap {
        return Err(Error::Resource(format!(
            "n_max={} needs up to {} nonzeros, cap is {nnz_cap}",
            basis.n_max,
            basis.nnz_estimate()
        )));
    }
    let g = p.bare_coupling();
    let (s, c) = p.theta.sin_cos();
    // coefficient of a†_n a_{n+1}
    let fwd = Complex64::new(p.j * c, -p.j * s);
    let mut t = Vec::with_capacity(basis.nnz_estimate());
    for col in 0..basis.dim {
        let st = basis.state(col);
        let mut diag = 0.0;
        for k in 0..N_SITES {
            diag += p.omega * st.n[k] as f64;
            diag += if st.up[k] { 0.5 * p.delta } else { -0.5 * p.delta };
        }
        t.push((col, col, Complex64::new(diag, 0.0)));
        if g != 0.0 {
            for k in 0..N_SITES {
                let mut flipped = st;
                flipped.up[k] = !st.up[k];
                if st.n[k] > 0 {
                    let mut to = flipped;
                    to.n[k] -= 1;
                    t.push((basis.index(&to), col, Complex64::new(g * (st.n[k] as f64).sqrt(), 0.0)));
                }
                if st.n[k] < basis.n_max {
                    let mut to = flipped;
                    to.n[k] += 1;
                    t.push((basis.index(&to), col, Complex64::new(g * (st.n[k] as f64 + 1.0).sqrt(), 0.0)));
                }
            }
        }
        if p.j != 0.0 {
            for n in 0..N_SITES {
                let m = (n + 1) % N_SITES;
                // a†_n a_m and a†_m a_n
                for (to_site, from_site, coef) in [(n, m, fwd), (m, n, fwd.conj())] {
                    if st.n[from_site] > 0 && st.n[to_site] < basis.n_max {
                        let mut to = st;
                        to.n[from_site] -= 1;
                        to.n[to_site] += 1;
                        let amp = ((st.n[from_site] * (st.n[to_site] + 1)) as f64).sqrt();
                        t.push((basis.index(&to), col, coef * amp));
                    }
                }
            }
        }
    }
    Ok(SparseOp::from_triplets(basis.dim, t))
}

/// One photon in cavity 1, none elsewhere, all spins down.
pub fn initial_state(basis: &FockBasis) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); basis.dim];
    let i = basis.index(&BasisState {
        n: [1, 0, 0],
        up: [false; 3],
    });
    psi[i] = Complex64::new(1.0, 0.0);
    psi
}

pub fn photon_numbers(basis: &FockBasis, psi: &[Complex64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, z) in psi.iter().enumerate() {
        let w = z.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let st = basis.state(i);
        for k in 0..N_SITES {
            out[k] += w * st.n[k] as f64;
        }
    }
    out
}

pub fn spin_z(basis: &FockBasis, psi: &[Complex64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, z) in psi.iter().enumerate() {
        let st = basis.state(i);
        for k in 0..N_SITES {
            out[k] += z.norm_sqr() * if st.up[k] { 1.0 } else { -1.0 };
        }
    }
    out
}

/// Weight on basis vectors where some cavity sits at the cutoff.
pub fn top_level_population(basis: &FockBasis, psi: &[Complex64]) -> f64 {
    psi.iter()
        .enumerate()
        .filter(|(i, _)| basis.state(*i).n.contains(&basis.n_max))
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub n_photon: Vec<[f64; 3]>,
    pub norm: Vec<f64>,
    pub params: Params<f64>,
    pub n_max: usize,
    /// Largest cutoff-level population seen along the run.
    pub max_top_population: f64,
}

impl Trajectory {
    pub fn truncation_warning(&self) -> bool {
        self.max_top_population > TRUNCATION_TOL
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().fold(0.0f64, |m, n| m.max((n - 1.0).abs()))
    }
}

/// Propagates `psi` by `exp(-iHt)` in steps no longer than `dt`; negative
/// `t` runs backwards.
pub fn propagate(h: &SparseOp, psi: &[Complex64], t: f64, dt: f64) -> Result<Vec<Complex64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams("dt must be positive".into()));
    }
    let steps = (t.abs() / dt).ceil().max(1.0) as usize;
    let h_step = t / steps as f64;
    let mut v = psi.to_vec();
    for _ in 0..steps {
        v = sparse::expm_step(h, &v, h_step, KRYLOV_TOL, KRYLOV_MAX_DIM)?;
    }
    Ok(v)
}

/// Evolves the single-photon initial state, sampling every `dt` up to and
/// including `t_final`.
pub fn evolve(p: &Params<f64>, basis: &FockBasis, t_final: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams("dt must be positive".into()));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParams("t_final must be non-negative".into()));
    }
    let h = build_full_hamiltonian(p, basis)?;
    let steps = (t_final / dt + 1e-9).floor() as usize;
    let mut psi = initial_state(basis);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        n_photon: Vec::with_capacity(steps + 1),
        norm: Vec::with_capacity(steps + 1),
        params: *p,
        n_max: basis.n_max,
        max_top_population: 0.0,
    };
    for k in 0..=steps {
        if k > 0 {
            psi = sparse::expm_step(&h, &psi, dt, KRYLOV_TOL, KRYLOV_MAX_DIM)?;
        }
        let nrm = sparse::norm(&psi);
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(Error::Convergence(format!(
                "norm drifted to {nrm:.17} at t={}",
                k as f64 * dt
            )));
        }
        traj.times.push(k as f64 * dt);
        traj.n_photon.push(photon_numbers(basis, &psi));
        traj.norm.push(nrm);
        traj.max_top_population = traj.max_top_population.max(top_level_population(basis, &psi));
    }
    Ok(traj)
}

/// Three transfer cycles of the bare hopping, `3 · 2π/(3J)`.
pub fn default_t_final(j: f64) -> f64 {
    2.0 * std::f64::consts::PI / j
}

/// Index of the first local maximum that reaches half the series maximum.
fn first_major_peak(series: &[f64]) -> Option<usize> {
    let top = series.iter().skip(1).cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return None;
    }
    (1..series.len().saturating_sub(1))
        .find(|&i| series[i] >= 0.5 * top && series[i] > series[i - 1] && series[i] >= series[i + 1])
}

/// `+1` if cavity 2 peaks before cavity 3, `-1` for the reverse, `0` when the
/// first major peaks fall on the same sample.
pub fn chirality_metric(traj: &Trajectory) -> i32 {
    let n2: Vec<f64> = traj.n_photon.iter().map(|n| n[1]).collect();
    let n3: Vec<f64> = traj.n_photon.iter().map(|n| n[2]).collect();
    match (first_major_peak(&n2), first_major_peak(&n3)) {
        (Some(a), Some(b)) if a < b => 1,
        (Some(a), Some(b)) if a > b => -1,
        (Some(_), None) => 1,
        (None, Some(_)) => -1,
        _ => 0,
    }
}

/// Lowest eigenvalue of the truncated Hamiltonian.
pub fn exact_ground_energy(p: &Params<f64>, basis: &FockBasis) -> Result<f64> {
    let h = build_full_hamiltonian(p, basis)?;
    // vacuum with all spins down plus a small deterministic spread so no
    // symmetry sector is missed
    let mut v0: Vec<Complex64> = (0..basis.dim)
        .map(|i| {
            let x = ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5;
            Complex64::new(1e-3 * x, 0.0)
        })
        .collect();
    v0[0] += Complex64::new(1.0, 0.0);
    sparse::lowest_eigenvalue(&h, &v0, 1e-12, 400.min(basis.dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn kron(a: &CMatrix<f64>, b: &CMatrix<f64>) -> CMatrix<f64> {
        CMatrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |r, s| {
            a[(r / b.rows(), s / b.cols())] * b[(r % b.rows(), s % b.cols())]
        })
    }

    /// `op` on factor `k` of six, identities elsewhere.
    fn embed(op: &CMatrix<f64>, k: usize, dims: &[usize; 6]) -> CMatrix<f64> {
        let mut out = CMatrix::identity(1);
        for (i, &d) in dims.iter().enumerate() {
            let f = if i == k { op.clone() } else { CMatrix::identity(d) };
            out = kron(&out, &f);
        }
        out
    }

    fn add(a: &CMatrix<f64>, b: &CMatrix<f64>, s: Complex64) -> CMatrix<f64> {
        CMatrix::from_fn(a.rows(), a.cols(), |r, q| a[(r, q)] + s * b[(r, q)])
    }

    fn dense_oracle(p: &Params<f64>, n_max: usize) -> CMatrix<f64> {
        let l = n_max + 1;
        let dims = [l, l, l, 2, 2, 2];
        let a = CMatrix::from_fn(l, l, |r, q| if q == r + 1 { c((q as f64).sqrt()) } else { c(0.0) });
        let ad = a.adjoint();
        let sx = CMatrix::from_fn(2, 2, |r, q| if r != q { c(1.0) } else { c(0.0) });
        let sz = CMatrix::from_fn(2, 2, |r, q| match (r, q) {
            (0, 0) => c(-1.0),
            (1, 1) => c(1.0),
            _ => c(0.0),
        });
        let g = p.bare_coupling();
        let phase = Complex64::from_polar(p.j, -p.theta);
        let mut h = CMatrix::zeros(l * l * l * 8, l * l * l * 8);
        for n in 0..3 {
            let an = embed(&a, n, &dims);
            let adn = embed(&ad, n, &dims);
            h = add(&h, &adn.mul(&an), c(p.omega));
            let x = add(&an, &adn, c(1.0));
            h = add(&h, &x.mul(&embed(&sx, 3 + n, &dims)), c(g));
            h = add(&h, &embed(&sz, 3 + n, &dims), c(0.5 * p.delta));
            let m = (n + 1) % 3;
            let hop = adn.mul(&embed(&a, m, &dims));
            h = add(&h, &hop, phase);
            h = add(&h, &hop.adjoint(), phase.conj());
        }
        h
    }

    fn fig1(theta: f64) -> Params<f64> {
        Params::new(1.0, 50.0, 0.1, 0.05, theta).unwrap()
    }

    #[test]
    fn basis_roundtrip() {
        let b = FockBasis::new(3).unwrap();
        assert_eq!(b.dim, 512);
        for i in 0..b.dim {
            assert_eq!(b.index(&b.state(i)), i);
        }
        assert!(FockBasis::new(0).is_err());
    }

    #[test]
    fn matches_dense_kronecker_construction() {
        let p = Params::new(1.0, 3.0, 0.37, 0.21, 0.83).unwrap();
        let b = FockBasis::new(1).unwrap();
        let h = build_full_hamiltonian(&p, &b).unwrap();
        assert_eq!(h.dim(), 64);
        let oracle = dense_oracle(&p, 1);
        assert!(h.to_dense().sub(&oracle).max_abs() < 1e-14);
        assert!(h.hermiticity_residual() <= 1e-13);
        let b2 = FockBasis::new(2).unwrap();
        let h2 = build_full_hamiltonian(&p, &b2).unwrap();
        assert!(h2.to_dense().sub(&dense_oracle(&p, 2)).max_abs() < 1e-14);
    }

    #[test]
    fn decoupled_spectrum_and_real_at_zero_flux() {
        let p = Params::new(1.0, 10.0, 0.0, 0.0, 0.4).unwrap();
        let b = FockBasis::new(2).unwrap();
        let h = build_full_hamiltonian(&p, &b).unwrap();
        assert_eq!(h.nnz(), b.dim);
        for i in 0..b.dim {
            let s = b.state(i);
            let e: f64 = s.n.iter().sum::<usize>() as f64
                + s.up.iter().map(|&u| if u { 5.0 } else { -5.0 }).sum::<f64>();
            assert_eq!(h.get(i, i).re, e);
        }
        assert!(build_full_hamiltonian(&fig1(0.0), &b).unwrap().is_real());
        assert!(!build_full_hamiltonian(&fig1(0.4), &b).unwrap().is_real());
    }

    #[test]
    fn resource_cap() {
        let b = FockBasis::new(40).unwrap();
        assert!(matches!(build_full_hamiltonian(&fig1(0.0), &b), Err(Error::Resource(_))));
    }

    #[test]
    fn initial_state_contents() {
        let b = FockBasis::new(2).unwrap();
        let psi = initial_state(&b);
        assert_eq!(sparse::norm(&psi), 1.0);
        assert_eq!(photon_numbers(&b, &psi), [1.0, 0.0, 0.0]);
        assert_eq!(spin_z(&b, &psi), [-1.0; 3]);
    }

    #[test]
    fn excitations_conserved_without_rabi_coupling() {
        let p = Params::new(1.0, 50.0, 0.0, 0.05, 0.7).unwrap();
        let b = FockBasis::new(2).unwrap();
        let tr = evolve(&p, &b, 20.0, 0.5).unwrap();
        for n in &tr.n_photon {
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_flux_is_symmetric_and_reversible() {
        let b = FockBasis::new(3).unwrap();
        let p = fig1(0.0);
        let tr = evolve(&p, &b, 30.0, 0.1).unwrap();
        for n in &tr.n_photon {
            assert!((n[1] - n[2]).abs() <= 1e-8);
            assert!(n.iter().all(|&x| x >= 0.0));
        }
        assert!(tr.max_norm_drift() <= 1e-8);
        assert_eq!(chirality_metric(&tr), 0);

        let h = build_full_hamiltonian(&p, &b).unwrap();
        let psi0 = initial_state(&b);
        let fwd = propagate(&h, &psi0, 30.0, 0.1).unwrap();
        let back = propagate(&h, &fwd, -30.0, 0.1).unwrap();
        let err = back.iter().zip(&psi0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-7, "{err}");
    }

    #[test]
    fn flux_sets_circulation_direction() {
        let b = FockBasis::new(2).unwrap();
        let t = default_t_final(0.05) / 3.0;
        let plus = evolve(&fig1(std::f64::consts::FRAC_PI_2), &b, t, 0.1).unwrap();
        let minus = evolve(&fig1(-std::f64::consts::FRAC_PI_2), &b, t, 0.1).unwrap();
        assert_eq!(chirality_metric(&plus), 1);
        assert_eq!(chirality_metric(&minus), -1);
        for (a, m) in plus.n_photon.iter().zip(&minus.n_photon) {
            assert!((a[0] - m[0]).abs() <= 1e-8);
            assert!((a[1] - m[2]).abs() <= 1e-8);
            assert!((a[2] - m[1]).abs() <= 1e-8);
        }
    }

    #[test]
    fn ground_energy_limits() {
        let b = FockBasis::new(2).unwrap();
        let p = Params::new(1.0, 50.0, 0.0, 0.0, 0.0).unwrap();
        assert!((exact_ground_energy(&p, &b).unwrap() + 75.0).abs() < 1e-10);
        let mut prev = f64::INFINITY;
        for g1 in [0.0, 0.1, 0.2, 0.3, 0.4] {
            let e = exact_ground_energy(&fig1(0.3).with_g1(g1), &b).unwrap();
            assert!(e < prev || g1 == 0.0);
            prev = e;
        }
    }

    #[test]
    fn ground_energy_matches_dense_diagonalization() {
        let p = Params::new(1.0, 4.0, 0.3, 0.2, 0.5).unwrap();
        let b = FockBasis::new(2).unwrap();
        let (w, _) = crate::linalg::hermitian_eigen(&dense_oracle(&p, 2));
        let e = exact_ground_energy(&p, &b).unwrap();
        assert!((e - w[0]).abs() <= 1e-10 * w[0].abs(), "{e} {}", w[0]);
    }
}
