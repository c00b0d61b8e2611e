//! Quadratic fluctuations around a mean-field state and their bosonic
//! (paraunitary) diagonalization.
//!
//! The fluctuation Hamiltonian is written as `H = α† M α` in the basis
//! `α = (a₁, a₂, a₃, a₁†, a₂†, a₃†)`. A paraunitary `T` (`T†ΛT = Λ`,
//! `Λ = diag(1, 1, 1, -1, -1, -1)`) brings `ΛM` to `Λ diag(e, e)`, and the
//! excitation energies are `ε_k = 2 e_k`.


use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, solve_upper, CMatrix};
use crate::meanfield::MeanFieldSolution;
use crate::model::Params;
use crate::scalar::{cis, Real, C};

pub const DIM: usize = 6;
pub const PAIR_TOL: f64 = 1e-8;
pub const IMAG_TOL: f64 = 1e-8;
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T> {
    pub m: CMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParaunitarySolution<T> {
    pub t: CMatrix<T>,
    /// Excitation energies, ascending.
    pub eps: [T; 3],
    pub para_residual: T,
    pub diag_residual: T,
    /// Two excitation energies closer than [`DEGENERACY_TOL`].
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrObservables<T> {
    pub photon_number: [T; 3],
    pub var_x: [T; 3],
    pub var_p: [T; 3],
    pub ground_energy: T,
    pub eps: [T; 3],
}

fn lambda_sign<T: Real>(i: usize) -> T {
    if i < 3 {
        T::one()
    } else {
        -T::one()
    }
}

fn lambda_matrix<T: Real>() -> CMatrix<T> {
    CMatrix::diagonal(&(0..DIM).map(|i| C::new(lambda_sign::<T>(i), T::zero())).collect::<Vec<_>>())
}

pub fn build_m_matrix<T: Real>(p: &Params<T>, mf: &MeanFieldSolution<T>) -> QuadraticForm<T> {
    let half = T::lit(0.5);
    let mut m = CMatrix::zeros(DIM, DIM);
    let hop = cis(-p.theta) * (p.j * half);
    for n in 0..3 {
        let c = mf.lambda_n[n] * mf.lambda_n[n] / mf.delta_n[n];
        let diag = C::new(p.omega * half - c, T::zero());
        m[(n, n)] = diag;
        m[(n + 3, n + 3)] = diag;
        m[(n, n + 3)] = C::new(-c, T::zero());
        m[(n + 3, n)] = C::new(-c, T::zero());
        let up = (n + 1) % 3;
        m[(n, up)] = hop;
        m[(up, n)] = hop.conj();
        m[(n + 3, up + 3)] = hop.conj();
        m[(up + 3, n + 3)] = hop;
    }
    QuadraticForm { m }
}

fn lambda_times<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    CMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)] * lambda_sign::<T>(r))
}

/// Explains why `M` has no positive-definite Cholesky factor.
fn classify_indefinite<T: Real>(qf: &QuadraticForm<T>) -> Error {
    let lm = lambda_times(&qf.m);
    let scale = lm.max_abs().max(T::one());
    let Some(ev) = lm.eigenvalues() else {
        return Error::Convergence("eigenvalues of Lambda M did not converge".into());
    };
    let worst_imag = ev.iter().map(|z| z.im.abs()).fold(T::zero(), |a, b| a.max(b));
    let smallest = ev.iter().map(|z| z.norm()).fold(T::infinity(), |a, b| a.min(b));
    let critical_tol = T::lit(10.0) * T::eps().sqrt() * scale;
    if smallest <= critical_tol {
        Error::CriticalPoint(format!(
            "zero mode: smallest |eigenvalue| of Lambda M is {smallest}"
        ))
    } else if worst_imag > T::lit(IMAG_TOL) {
        Error::Instability(format!(
            "Lambda M has complex eigenvalues (|Im| up to {worst_imag}); expansion point is dynamically unstable"
        ))
    } else {
        Error::Instability("fluctuation matrix is not positive definite; expansion point is not a minimum".into())
    }
}

pub fn diagonalize_paraunitary<T: Real>(qf: &QuadraticForm<T>) -> Result<ParaunitarySolution<T>> {
    let m = &qf.m;
    if m.rows() != DIM || m.cols() != DIM {
        return Err(Error::Domain(format!("expected a {DIM}x{DIM} matrix")));
    }
    let scale = m.max_abs().max(T::lit(1e-300));
    if m.hermiticity_residual() > T::lit(64.0) * T::eps() * scale {
        return Err(Error::Domain("quadratic form is not Hermitian".into()));
    }
    // M = L L†, and L† Λ L is Hermitian with the same spectrum as ΛM.
    let l = m.cholesky().ok_or_else(|| classify_indefinite(qf))?;
    let lam = lambda_matrix::<T>();
    let w = l.adjoint().mul(&lam).mul(&l);
    let w = CMatrix::from_fn(DIM, DIM, |r, c| (w[(r, c)] + w[(c, r)].conj()) * T::lit(0.5));
    let (vals, vecs) = hermitian_eigen(&w);
    // ascending: three negative then three positive
    let pos: Vec<T> = vals[3..].to_vec();
    let neg: Vec<T> = vals[..3].to_vec();
    if !(neg[2] < T::zero()) {
        return Err(Error::Instability("spectrum of Lambda M lacks the +/- structure".into()));
    }
    let mut used = [false; 3];
    for e in &pos {
        let (k, d) = neg
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, n)| (k, (*e + *n).abs()))
            .fold((usize::MAX, T::infinity()), |b, x| if x.1 < b.1 { x } else { b });
        if k == usize::MAX || d > T::lit(PAIR_TOL) {
            return Err(Error::Instability(format!("eigenvalue {e} has no negated partner")));
        }
        used[k] = true;
    }
    let zero_tol = T::lit(256.0) * T::eps() * scale;
    if pos[0] <= zero_tol {
        return Err(Error::CriticalPoint(format!(
            "zero mode: lowest eigenvalue of Lambda M is {}",
            pos[0]
        )));
    }
    let lh = l.adjoint();
    let mut t = CMatrix::zeros(DIM, DIM);
    for (k, &e) in pos.iter().enumerate() {
        let u: Vec<C<T>> = vecs.column(3 + k).iter().map(|z| *z * e.sqrt()).collect();
        let mut v = solve_upper(&lh, &u);
        fix_phase(&mut v);
        let partner: Vec<C<T>> = (0..DIM).map(|i| v[(i + 3) % DIM].conj()).collect();
        t.set_column(k, &v);
        t.set_column(k + 3, &partner);
    }
    let para = t.adjoint().mul(&lam).mul(&t).sub(&lam).max_abs();
    let lm = lambda_times(m);
    let diag_residual = match t.inverse() {
        Some(ti) => ti.mul(&lm).mul(&t).max_abs_offdiag(),
        None => T::infinity(),
    };
    let two = T::lit(2.0);
    let eps = [two * pos[0], two * pos[1], two * pos[2]];
    let dtol = T::lit(DEGENERACY_TOL);
    let degenerate = (eps[1] - eps[0]).abs() < dtol || (eps[2] - eps[1]).abs() < dtol;
    Ok(ParaunitarySolution {
        t,
        eps,
        para_residual: para,
        diag_residual,
        degenerate,
    })
}

/// Rotates `v` so its largest-modulus entry (first one on ties) is real positive.
fn fix_phase<T: Real>(v: &mut [C<T>]) {
    let big = v.iter().map(|z| z.norm()).fold(T::zero(), |a, b| a.max(b));
    if big.is_zero() {
        return;
    }
    let cut = big * (T::one() - T::lit(1e-12));
    let pivot = v.iter().position(|z| z.norm() >= cut).unwrap_or(0);
    let ph = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z = *z * ph;
    }
    v[pivot] = C::new(v[pivot].re, T::zero());
}

pub fn local_photon_sr<T: Real>(ps: &ParaunitarySolution<T>, mf: &MeanFieldSolution<T>) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for (n, o) in out.iter_mut().enumerate() {
        let mut s = mf.disp.norm_sqr(n);
        for i in 0..3 {
            s += ps.t[(n, i + 3)].norm_sqr();
        }
        *o = s;
    }
    out
}

/// Fluctuation part of the local photon number, without `|α_n|²`.
pub fn photon_fluctuation<T: Real>(ps: &ParaunitarySolution<T>) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for (n, o) in out.iter_mut().enumerate() {
        for i in 0..3 {
            *o += ps.t[(n, i + 3)].norm_sqr();
        }
    }
    out
}

pub fn variance_x_sr<T: Real>(ps: &ParaunitarySolution<T>) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for (n, o) in out.iter_mut().enumerate() {
        for i in 0..3 {
            *o += (ps.t[(n, i)] + ps.t[(n, i + 3)].conj()).norm_sqr();
        }
    }
    out
}

pub fn variance_p_sr<T: Real>(ps: &ParaunitarySolution<T>) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for (n, o) in out.iter_mut().enumerate() {
        for i in 0..3 {
            *o += (ps.t[(n, i + 3)].conj() - ps.t[(n, i)]).norm_sqr();
        }
    }
    out
}

/// `Σ_k (ε_k − ω)/2`.
pub fn fluctuation_correction<T: Real>(p: &Params<T>, ps: &ParaunitarySolution<T>) -> T {
    let mut s = T::zero();
    for e in ps.eps {
        s += (e - p.omega) * T::lit(0.5);
    }
    s
}

pub fn ground_energy_fluct<T: Real>(p: &Params<T>, ps: &ParaunitarySolution<T>, mf: &MeanFieldSolution<T>) -> T {
    mf.energy + fluctuation_correction(p, ps)
}

/// Builds, diagonalizes and evaluates every fluctuation observable at once.
pub fn fluctuations<T: Real>(
    p: &Params<T>,
    mf: &MeanFieldSolution<T>,
) -> Result<(ParaunitarySolution<T>, SrObservables<T>)> {
    let ps = diagonalize_paraunitary(&build_m_matrix(p, mf))?;
    let obs = SrObservables {
        photon_number: local_photon_sr(&ps, mf),
        var_x: variance_x_sr(&ps),
        var_p: variance_p_sr(&ps),
        ground_energy: ground_energy_fluct(p, &ps, mf),
        eps: ps.eps,
    };
    Ok((ps, obs))
}

impl<T: Real> QuadraticForm<T> {
    /// Free modes `M = (ω/2) I`.
    pub fn free(omega: T) -> Self {
        let d = C::new(omega * T::lit(0.5), T::zero());
        Self {
            m: CMatrix::diagonal(&[d; DIM]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::meanfield::{solve_displacements, Displacement, MeanFieldSolution};
    use crate::model::{critical_flux, softest_coupling, PhaseLabel};
    use crate::np_analytics;
    use nalgebra::{Complex as NC, DMatrix};
    use proptest::prelude::*;

    fn params(g1: f64, theta: f64) -> Params<f64> {
        Params::new(1.0, 100.0, g1, 0.05, theta).unwrap()
    }

    fn vacuum(p: &Params<f64>) -> MeanFieldSolution<f64> {
        let g = p.bare_coupling();
        MeanFieldSolution {
            disp: Displacement::zero(),
            delta_n: [p.delta; 3],
            lambda_n: [g; 3],
            energy: -1.5 * p.delta,
            energy_gain: 0.0,
            label: PhaseLabel::Normal,
            residual_norm: 0.0,
            rng_seed: 0,
            roots_found: 1,
        }
    }

    fn gc(theta: f64) -> f64 {
        softest_coupling(&params(0.0, theta)).unwrap().0
    }

    /// Independent spectrum: eigenvalues of ΛM via nalgebra's general
    /// complex Schur decomposition.
    fn schur_spectrum(m: &CMatrix<f64>) -> Vec<f64> {
        let lm = DMatrix::from_fn(6, 6, |r, c| {
            let z = m[(r, c)] * if r < 3 { 1.0 } else { -1.0 };
            NC::new(z.re, z.im)
        });
        let ev = lm.schur().eigenvalues().expect("complex Schur eigenvalues");
        let mut pos: Vec<f64> = ev.iter().filter(|z| z.re > 0.0).map(|z| 2.0 * z.re).collect();
        pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pos
    }

    #[test]
    fn free_modes() {
        let ps = diagonalize_paraunitary(&QuadraticForm::free(1.0f64)).unwrap();
        assert!(ps.t.sub(&CMatrix::identity(6)).max_abs() < 1e-15);
        for e in ps.eps {
            assert!((e - 1.0).abs() < 1e-15);
        }
        assert!(ps.degenerate);
        assert_eq!(variance_x_sr(&ps), [1.0; 3]);
        assert_eq!(variance_p_sr(&ps), [1.0; 3]);
    }

    #[test]
    fn matrix_layout() {
        let p = params(0.3, 0.7);
        let q = build_m_matrix(&p, &vacuum(&p));
        assert!(q.m.hermiticity_residual() <= 1e-14);
        let c = 0.09;
        assert!((q.m[(0, 0)].re - (0.5 - c)).abs() < 1e-14);
        assert!((q.m[(0, 3)].re + c).abs() < 1e-14);
        let e = cis(-0.7f64) * 0.025;
        assert!((q.m[(0, 1)] - e).norm() < 1e-15);
        assert!((q.m[(1, 0)] - e.conj()).norm() < 1e-15);
        let p0 = Params::new(1.0, 100.0, 0.3, 0.0, 0.7).unwrap();
        let q0 = build_m_matrix(&p0, &vacuum(&p0));
        for (r, c) in [(0, 1), (1, 2), (0, 2), (3, 4), (0, 4)] {
            assert_eq!(q0.m[(r, c)], C::zero());
        }
    }

    #[test]
    fn single_cavity_energy() {
        let p = Params::new(1.0, 100.0, 0.3, 0.0, 0.0).unwrap();
        let ps = diagonalize_paraunitary(&build_m_matrix(&p, &vacuum(&p))).unwrap();
        for e in ps.eps {
            assert!((e - 0.8).abs() < 1e-13, "{e}");
        }
    }

    #[test]
    fn matches_normal_phase_closed_forms() {
        let thc = critical_flux(&params(0.0, 0.0)).unwrap();
        for theta in [0.0, 0.1, thc, 1.7, -0.6] {
            for frac in [0.1, 0.5, 0.9, 0.99] {
                let p = params(frac * gc(theta), theta);
                let mf = vacuum(&p);
                let (ps, obs) = fluctuations(&p, &mf).unwrap();
                let mut ref_eps: Vec<f64> = np_analytics::modes(&p).unwrap().iter().map(|m| m.epsilon).collect();
                ref_eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let np = np_analytics::np_observables(&p).unwrap();
                for k in 0..3 {
                    assert!((ps.eps[k] - ref_eps[k]).abs() <= 1e-10 * ref_eps[k]);
                    assert!((obs.photon_number[k] - np.photon_number).abs() <= 1e-10 * np.photon_number);
                    assert!((obs.var_x[k] - np.var_x).abs() <= 1e-10 * np.var_x);
                    assert!((obs.var_p[k] - np.var_p).abs() <= 1e-10 * np.var_p);
                }
                let shift = 3.0 * (p.omega + p.j) * p.omega * p.omega * p.g1 * p.g1 / p.delta;
                assert!((obs.ground_energy + shift - np.ground_energy).abs() < 1e-10 * np.ground_energy.abs());
                assert!(ps.para_residual <= 1e-10 && ps.diag_residual <= 1e-9);
            }
        }
    }

    #[test]
    fn superradiant_spectrum_matches_schur() {
        for theta in [0.0, 0.1, 1.7] {
            let p = params(1.05 * gc(theta), theta);
            let mf = solve_displacements(&p).unwrap();
            let q = build_m_matrix(&p, &mf);
            let ps = diagonalize_paraunitary(&q).unwrap();
            let reference = schur_spectrum(&q.m);
            for k in 0..3 {
                assert!((ps.eps[k] - reference[k]).abs() < 1e-9, "{} {}", ps.eps[k], reference[k]);
            }
            assert!(ps.para_residual <= 1e-10);
            assert!(ps.diag_residual <= 1e-9);
            for (x, pv) in variance_x_sr(&ps).iter().zip(variance_p_sr(&ps)) {
                assert!(x * pv >= 1.0 - 1e-12);
            }
            let n = local_photon_sr(&ps, &mf);
            for k in 0..3 {
                assert!(n[k] >= mf.disp.norm_sqr(k));
            }
        }
    }

    #[test]
    fn partner_columns_and_phase() {
        let p = params(0.6, 0.3);
        let mf = solve_displacements(&p).unwrap();
        let ps = diagonalize_paraunitary(&build_m_matrix(&p, &mf)).unwrap();
        for k in 0..3 {
            for i in 0..6 {
                assert_eq!(ps.t[(i, k + 3)], ps.t[((i + 3) % 6, k)].conj());
            }
            let col = ps.t.column(k);
            let big = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let piv = col.iter().position(|z| z.norm() >= big * (1.0 - 1e-12)).unwrap();
            assert!(col[piv].im == 0.0 && col[piv].re > 0.0);
        }
    }

    #[test]
    fn normal_vacuum_beyond_threshold_is_rejected() {
        let p = params(1.1 * gc(0.0), 0.0);
        let err = diagonalize_paraunitary(&build_m_matrix(&p, &vacuum(&p))).unwrap_err();
        assert!(matches!(err, Error::Instability(_)), "{err:?}");
        let p = params(gc(1.7), 1.7);
        let err = diagonalize_paraunitary(&build_m_matrix(&p, &vacuum(&p))).unwrap_err();
        assert!(matches!(err, Error::CriticalPoint(_)), "{err:?}");
    }

    #[test]
    fn fluctuation_correction_is_negative_near_criticality() {
        for theta in [0.0, 1.7] {
            for frac in [0.9, 0.99, 1.01, 1.1] {
                let p = params(frac * gc(theta), theta);
                let mf = solve_displacements(&p).unwrap();
                let (ps, _) = fluctuations(&p, &mf).unwrap();
                assert!(fluctuation_correction(&p, &ps) <= 0.0);
            }
        }
    }

    #[test]
    fn gauge_periodicity() {
        let a = params(0.4, 0.3);
        let b = Params { theta: 0.3 + 2.0 * std::f64::consts::PI, ..a };
        let qa = build_m_matrix(&a, &vacuum(&a));
        let qb = build_m_matrix(&b, &vacuum(&b));
        assert!(qa.m.sub(&qb.m).max_abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn paraunitary_in_every_phase(theta in -3.1f64..3.1, frac in 1.01f64..1.5) {
            let p = params(frac * gc(theta), theta);
            let mf = solve_displacements(&p).unwrap();
            let (ps, obs) = fluctuations(&p, &mf).unwrap();
            prop_assert!(ps.para_residual <= 1e-10, "{}", ps.para_residual);
            prop_assert!(ps.diag_residual <= 1e-9, "{}", ps.diag_residual);
            for n in 0..3 {
                prop_assert!(obs.var_x[n] * obs.var_p[n] >= 1.0 - 1e-12);
                prop_assert!(obs.var_x[n] > 0.0 && obs.var_p[n] > 0.0);
            }
            prop_assert!(ps.eps.iter().all(|e| *e > 0.0));
        }
    }
}
