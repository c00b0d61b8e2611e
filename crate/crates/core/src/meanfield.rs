//! Classical displacement fields of the superradiant phases.
//!
//! After the atoms are adiabatically eliminated every cavity carries a
//! coherent amplitude `α_n = A_n + i B_n`, and the mean-field energy
//!
//! ```text
//! E = Σ ω|α_n|² + J Σ α_n*(e^{iθ} α_{n+1} + e^{-iθ} α_{n-1}) - Σ Δ_n / 2,
//! Δ_n = sqrt(Δ² + 16 g² A_n²)
//! ```
//!
//! is minimized over the six real coordinates. The residuals returned by
//! [`residuals`] are half its gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{classify_phase, critical_coupling, softest_coupling, Momentum, Params, PhaseLabel};
use crate::scalar::{unit_phase, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement<T> {
    pub a: [T; 3],
    pub b: [T; 3],
}

impl<T: Real> Displacement<T> {
    pub fn zero() -> Self {
        Self {
            a: [T::zero(); 3],
            b: [T::zero(); 3],
        }
    }

    pub fn from_vec(x: &[T; 6]) -> Self {
        Self {
            a: [x[0], x[1], x[2]],
            b: [x[3], x[4], x[5]],
        }
    }

    pub fn to_vec(&self) -> [T; 6] {
        [self.a[0], self.a[1], self.a[2], self.b[0], self.b[1], self.b[2]]
    }

    pub fn norm_sqr(&self, n: usize) -> T {
        self.a[n] * self.a[n] + self.b[n] * self.b[n]
    }

    pub fn max_abs(&self) -> T {
        self.to_vec()
            .iter()
            .fold(T::zero(), |m, x| if x.abs() > m { x.abs() } else { m })
    }

    /// Cyclic relabeling `n -> n + k`.
    pub fn rotate(&self, k: usize) -> Self {
        let idx = |n: usize| (n + 3 - (k % 3)) % 3;
        Self {
            a: [self.a[idx(0)], self.a[idx(1)], self.a[idx(2)]],
            b: [self.b[idx(0)], self.b[idx(1)], self.b[idx(2)]],
        }
    }

    pub fn negate(&self) -> Self {
        Self {
            a: self.a.map(|x| -x),
            b: self.b.map(|x| -x),
        }
    }

    pub fn cast<U: Real>(&self) -> Displacement<U> {
        let f = |x: T| U::lit(x.to_f64_lossy());
        Displacement {
            a: self.a.map(f),
            b: self.b.map(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSolution<T> {
    pub disp: Displacement<T>,
    pub delta_n: [T; 3],
    pub lambda_n: [T; 3],
    pub energy: T,
    /// `energy + 3Δ/2`, evaluated without cancellation.
    pub energy_gain: T,
    pub label: PhaseLabel,
    pub residual_norm: T,
    /// Seed of the generator that drew the random starting points.
    pub rng_seed: u64,
    /// Number of distinct stationary points found by the multi-start search.
    pub roots_found: usize,
}

#[derive(Debug, Clone)]
pub struct SolverOptions<T> {
    pub seed: u64,
    pub n_random: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Additional starting points tried before the built-in ones.
    pub extra_seeds: Vec<Displacement<T>>,
}

impl<T> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            n_random: 20,
            max_iter: 400,
            tol: 1e-10,
            extra_seeds: Vec::new(),
        }
    }
}

/// A converged stationary point of the mean-field energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Root<T> {
    pub disp: Displacement<T>,
    pub gain: T,
    pub residual_norm: T,
    /// Hessian positive definite (a local minimum).
    pub stable: bool,
}

fn renormalized_gap<T: Real>(p: &Params<T>, a: T) -> T {
    let g = p.bare_coupling();
    (p.delta * p.delta + T::lit(16.0) * g * g * a * a).sqrt()
}

pub fn delta_n<T: Real>(p: &Params<T>, d: &Displacement<T>) -> [T; 3] {
    d.a.map(|a| renormalized_gap(p, a))
}

pub fn lambda_n<T: Real>(p: &Params<T>, d: &Displacement<T>) -> [T; 3] {
    let g = p.bare_coupling();
    delta_n(p, d).map(|dn| g * p.delta / dn)
}

pub fn residuals<T: Real>(p: &Params<T>, d: &Displacement<T>) -> [T; 6] {
    let (c, s) = unit_phase(p.theta);
    let g = p.bare_coupling();
    let four = T::lit(4.0);
    let dn = delta_n(p, d);
    let (a, b) = (&d.a, &d.b);
    let mut r = [T::zero(); 6];
    for n in 0..3 {
        let up = (n + 1) % 3;
        let dn1 = (n + 2) % 3;
        r[n] = p.omega * a[n] - g * (four * g * a[n] / dn[n])
            + p.j * ((a[up] + a[dn1]) * c + (b[dn1] - b[up]) * s);
        r[n + 3] = p.omega * b[n] + p.j * (c * (b[up] + b[dn1]) + s * (a[up] - a[dn1]));
    }
    r
}

/// Jacobian of [`residuals`] (half the Hessian of the energy), row-major.
pub fn jacobian<T: Real>(p: &Params<T>, d: &Displacement<T>) -> [[T; 6]; 6] {
    let (c, s) = unit_phase(p.theta);
    let g = p.bare_coupling();
    let dn = delta_n(p, d);
    let jc = p.j * c;
    let js = p.j * s;
    let mut m = [[T::zero(); 6]; 6];
    for n in 0..3 {
        let up = (n + 1) % 3;
        let lo = (n + 2) % 3;
        m[n][n] = p.omega - T::lit(4.0) * g * g * p.delta * p.delta / (dn[n] * dn[n] * dn[n]);
        m[n][up] += jc;
        m[n][lo] += jc;
        m[n][3 + lo] += js;
        m[n][3 + up] -= js;
        m[3 + n][3 + n] = p.omega;
        m[3 + n][3 + up] += jc;
        m[3 + n][3 + lo] += jc;
        m[3 + n][up] += js;
        m[3 + n][lo] -= js;
    }
    m
}

/// `E + 3Δ/2`, i.e. the energy measured from the bare-atom vacuum.
pub fn energy_gain<T: Real>(p: &Params<T>, d: &Displacement<T>) -> T {
    let (c, s) = unit_phase(p.theta);
    let g = p.bare_coupling();
    let dn = delta_n(p, d);
    let (a, b) = (&d.a, &d.b);
    let two = T::lit(2.0);
    let mut e = T::zero();
    for n in 0..3 {
        let up = (n + 1) % 3;
        e += p.omega * d.norm_sqr(n);
        e += two * p.j * (c * (a[n] * a[up] + b[n] * b[up]) - s * (a[n] * b[up] - b[n] * a[up]));
        // Δ_n - Δ = 16 g² A² / (Δ_n + Δ)
        e -= T::lit(8.0) * g * g * a[n] * a[n] / (dn[n] + p.delta);
    }
    e
}

pub fn ground_energy_mf<T: Real>(p: &Params<T>, d: &Displacement<T>) -> T {
    -T::lit(1.5) * p.delta + energy_gain(p, d)
}

/// Uniform real displacement of the ferromagnetic branch (positive sign).
pub fn fsp_closed_form<T: Real>(p: &Params<T>) -> Result<Displacement<T>> {
    p.validate()?;
    let g = p.bare_coupling();
    let (c, _) = unit_phase(p.theta);
    let w_eff = p.omega + T::lit(2.0) * p.j * c;
    let g2 = g * g;
    let ratio = T::lit(16.0) * g2 * g2 / (w_eff * w_eff);
    let mut rad = ratio - p.delta * p.delta;
    if rad < T::zero() && -rad <= T::lit(64.0) * T::eps() * p.delta * p.delta {
        rad = T::zero();
    }
    if !(w_eff > T::zero()) || rad < T::zero() || g.is_zero() {
        return Err(Error::Domain(format!(
            "uniform displacement does not exist at g1 = {} (below its threshold)",
            p.g1
        )));
    }
    let a = rad.sqrt() / (T::lit(4.0) * g);
    Ok(Displacement {
        a: [a; 3],
        b: [T::zero(); 3],
    })
}

fn max_abs6<T: Real>(r: &[T; 6]) -> T {
    r.iter().fold(T::zero(), |m, x| if x.abs() > m { x.abs() } else { m })
}

/// Solves `A x = b` for a dense 6×6 real system; `None` if singular.
fn solve6<T: Real>(mut a: [[T; 6]; 6], mut b: [T; 6]) -> Option<[T; 6]> {
    for k in 0..6 {
        let p = (k..6).max_by(|&i, &j| {
            a[i][k]
                .abs()
                .partial_cmp(&a[j][k].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[p][k].is_zero() {
            return None;
        }
        a.swap(p, k);
        b.swap(p, k);
        for r in (k + 1)..6 {
            let f = a[r][k] / a[k][k];
            for c in k..6 {
                let v = a[k][c];
                a[r][c] -= f * v;
            }
            let v = b[k];
            b[r] -= f * v;
        }
    }
    let mut x = [T::zero(); 6];
    for r in (0..6).rev() {
        let mut s = b[r];
        for c in (r + 1)..6 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Positive definiteness of a symmetric 6×6 matrix via Cholesky.
fn is_positive_definite<T: Real>(m: &[[T; 6]; 6]) -> bool {
    let mut l = [[T::zero(); 6]; 6];
    for j in 0..6 {
        let mut d = m[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > T::zero()) {
            return false;
        }
        l[j][j] = d.sqrt();
        for i in (j + 1)..6 {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    true
}

/// Energy-decreasing Levenberg–Marquardt descent followed by Newton polish.
fn descend<T: Real>(p: &Params<T>, start: &Displacement<T>, opts: &SolverOptions<T>) -> Option<Root<T>> {
    let tol = T::lit(opts.tol);
    let mut x = start.to_vec();
    let mut d = Displacement::from_vec(&x);
    let mut r = residuals(p, &d);
    let mut rn = max_abs6(&r);
    let mut e = energy_gain(p, &d);
    let scale = p.omega + T::lit(2.0) * p.j + T::lit(4.0) * p.omega * p.g1 * p.g1;
    let mut mu = T::lit(1e-3) * scale;
    let tiny = T::lit(1e-30);
    let mut iter = 0;
    while rn > tol && iter < opts.max_iter {
        iter += 1;
        let mut h = jacobian(p, &d);
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += mu;
        }
        let step = match solve6(h, r.map(|v| -v)) {
            Some(s) => s,
            None => {
                mu *= T::lit(10.0);
                continue;
            }
        };
        let mut xn = x;
        for i in 0..6 {
            xn[i] += step[i];
        }
        let dn = Displacement::from_vec(&xn);
        let en = energy_gain(p, &dn);
        let rnew = residuals(p, &dn);
        let rnn = max_abs6(&rnew);
        // Energy differences drown in roundoff near convergence, so a step that
        // shrinks the residual without measurably raising the energy is accepted too.
        let flat = (en - e).abs() <= T::lit(64.0) * T::eps() * (e.abs() + tiny);
        if en < e || (flat && rnn < rn) {
            x = xn;
            d = dn;
            r = rnew;
            rn = rnn;
            e = en;
            mu = (mu / T::lit(3.0)).max(T::lit(1e-14) * scale);
        } else {
            mu *= T::lit(4.0);
            if mu > T::lit(1e12) * scale {
                break;
            }
        }
    }
    // Newton polish: keep going while the residual keeps halving.
    for _ in 0..12 {
        let step = match solve6(jacobian(p, &d), r.map(|v| -v)) {
            Some(s) => s,
            None => break,
        };
        let mut xn = x;
        for i in 0..6 {
            xn[i] += step[i];
        }
        let dn = Displacement::from_vec(&xn);
        let rnew = residuals(p, &dn);
        let rnn = max_abs6(&rnew);
        if rnn < rn * T::lit(0.5) {
            x = xn;
            d = dn;
            r = rnew;
            rn = rnn;
        } else {
            break;
        }
    }
    if !(rn <= tol) {
        return None;
    }
    Some(Root {
        gain: energy_gain(p, &d),
        residual_norm: rn,
        stable: is_positive_definite(&jacobian(p, &d)),
        disp: d,
    })
}

/// Amplitude estimate `(Δ / 4g) sqrt((g1/g1c)^4 - 1)` from the single-mode picture.
fn amplitude_estimate<T: Real>(p: &Params<T>) -> T {
    let g = p.bare_coupling();
    let gc = softest_coupling(p).map(|(g, _)| g).unwrap_or(T::lit(0.5));
    if g.is_zero() {
        return T::zero();
    }
    let r = p.g1 / gc;
    let x = r * r * r * r - T::one();
    let x = if x > T::zero() { x } else { T::lit(1e-6) };
    p.delta / (T::lit(4.0) * g) * x.sqrt()
}

fn seeds<T: Real>(p: &Params<T>, opts: &SolverOptions<T>) -> Vec<Displacement<T>> {
    let mut out: Vec<Displacement<T>> = opts.extra_seeds.clone();
    let amp = amplitude_estimate(p);
    if let Ok(f) = fsp_closed_form(p) {
        out.push(f);
        out.push(f.negate());
    }
    let half = T::lit(0.5);
    let root3 = T::lit(3.0).sqrt() * half;
    for scale in [T::one(), T::lit(1.5)] {
        let a = amp * scale;
        // frustrated antiferromagnetic pattern and its images
        let afm = Displacement {
            a: [a, -a * half, -a * half],
            b: [T::zero(); 3],
        };
        for k in 0..3 {
            out.push(afm.rotate(k));
            out.push(afm.rotate(k).negate());
        }
        // two chiralities of a vortex pattern
        for sign in [T::one(), -T::one()] {
            let v = Displacement {
                a: [a, -a * half, -a * half],
                b: [T::zero(), sign * a * root3, -sign * a * root3],
            };
            for k in 0..3 {
                out.push(v.rotate(k));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let box_bare = T::lit(2.0) * p.bare_coupling() / p.omega;
    let box_amp = T::lit(2.0) * amp;
    for i in 0..(2 * opts.n_random) {
        let w = if i < opts.n_random { box_bare } else { box_amp };
        let mut x = [T::zero(); 6];
        for xi in x.iter_mut() {
            *xi = T::lit(rng.gen_range(-1.0..1.0)) * w;
        }
        out.push(Displacement::from_vec(&x));
    }
    out
}

/// Every distinct converged stationary point reached from the start set,
/// plus the trivial root `α = 0`.
pub fn find_roots<T: Real>(p: &Params<T>, opts: &SolverOptions<T>) -> Vec<Root<T>> {
    let mut roots = vec![Root {
        disp: Displacement::zero(),
        gain: T::zero(),
        residual_norm: T::zero(),
        stable: is_positive_definite(&jacobian(p, &Displacement::zero())),
    }];
    let amp = amplitude_estimate(p).max(T::lit(1e-300));
    for s in seeds(p, opts) {
        if let Some(root) = descend(p, &s, opts) {
            let dup = roots.iter().any(|r| {
                let (u, v) = (r.disp.to_vec(), root.disp.to_vec());
                let dist = (0..6).fold(T::zero(), |m, i| m.max((u[i] - v[i]).abs()));
                dist <= T::lit(1e-6) * amp
            });
            if !dup {
                roots.push(root);
            }
        }
    }
    roots
}

fn lex_greater<T: Real>(a: &Displacement<T>, b: &Displacement<T>) -> bool {
    for n in 0..3 {
        if a.a[n] != b.a[n] {
            return a.a[n] > b.a[n];
        }
    }
    false
}

/// Picks the ground state among roots: local minima first, then lowest
/// energy, then the lexicographically largest `(A1, A2, A3)` among energies
/// tied to within a relative `1e-8` of their magnitude.
pub fn select_ground<T: Real>(roots: &[Root<T>]) -> Option<&Root<T>> {
    let pool: Vec<&Root<T>> = if roots.iter().any(|r| r.stable) {
        roots.iter().filter(|r| r.stable).collect()
    } else {
        roots.iter().collect()
    };
    let emin = pool.iter().map(|r| r.gain).fold(T::infinity(), |m, x| m.min(x));
    let tie = T::lit(1e-8) * emin.abs() + T::lit(64.0) * T::eps() * emin.abs();
    let mut best: Option<&Root<T>> = None;
    for r in pool {
        if r.gain - emin > tie {
            continue;
        }
        best = match best {
            None => Some(r),
            Some(b) if lex_greater(&r.disp, &b.disp) => Some(r),
            keep => keep,
        };
    }
    best
}

pub fn solve_displacements<T: Real>(p: &Params<T>) -> Result<MeanFieldSolution<T>> {
    solve_with(p, &SolverOptions::default())
}

pub fn solve_with<T: Real>(p: &Params<T>, opts: &SolverOptions<T>) -> Result<MeanFieldSolution<T>> {
    p.validate()?;
    let (gc, _) = softest_coupling(p)?;
    if p.g1 < gc {
        return Ok(package(p, Displacement::zero(), T::zero(), PhaseLabel::Normal, opts.seed, 1));
    }
    let roots = find_roots(p, opts);
    let best = select_ground(&roots)
        .ok_or_else(|| Error::Convergence("no stationary point reached the residual tolerance".into()))?;
    if best.disp.max_abs().is_zero() && roots.len() == 1 {
        return Err(Error::Convergence(format!(
            "no displaced root found at g1 = {} (g1c = {gc})",
            p.g1
        )));
    }
    let label = classify_phase(p)?;
    Ok(package(p, best.disp, best.residual_norm, label, opts.seed, roots.len()))
}

fn package<T: Real>(
    p: &Params<T>,
    disp: Displacement<T>,
    residual_norm: T,
    label: PhaseLabel,
    rng_seed: u64,
    roots_found: usize,
) -> MeanFieldSolution<T> {
    let gain = energy_gain(p, &disp);
    MeanFieldSolution {
        delta_n: delta_n(p, &disp),
        lambda_n: lambda_n(p, &disp),
        energy: -T::lit(1.5) * p.delta + gain,
        energy_gain: gain,
        label,
        residual_norm,
        rng_seed,
        roots_found,
        disp,
    }
}

/// Threshold of the uniform branch, equal to `critical_coupling(θ, q = 0)`.
pub fn fsp_threshold<T: Real>(p: &Params<T>) -> Result<T> {
    critical_coupling(p, Momentum::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::critical_flux;
    use proptest::prelude::*;

    fn params(g1: f64, theta: f64) -> Params<f64> {
        Params::new(1.0, 100.0, g1, 0.05, theta).unwrap()
    }

    fn gc(theta: f64) -> f64 {
        softest_coupling(&params(0.0, theta)).unwrap().0
    }

    #[test]
    fn zero_displacement_is_stationary() {
        let p = params(0.6, 0.4);
        assert!(max_abs6(&residuals(&p, &Displacement::zero())) == 0.0);
        assert_eq!(ground_energy_mf(&p, &Displacement::zero()), -150.0);
    }

    #[test]
    fn fsp_closed_form_is_a_root() {
        let p = Params::new(1.0, 100.0, 0.55, 0.05, std::f64::consts::PI).unwrap();
        let d = fsp_closed_form(&p).unwrap();
        assert!(max_abs6(&residuals(&p, &d)) < 1e-12);
        let p = params(1.2 * gc(1.7), 1.7);
        let d = fsp_closed_form(&p).unwrap();
        assert!(max_abs6(&residuals(&p, &d)) < 1e-12);
        assert!(ground_energy_mf(&p, &d) < -150.0);
    }

    #[test]
    fn fsp_threshold_matches_critical_coupling() {
        for theta in [0.0, 1.0, 2.0, 3.0] {
            let g0 = fsp_threshold(&params(0.0, theta)).unwrap();
            let d = fsp_closed_form(&params(g0, theta)).unwrap();
            assert!(d.a[0].abs() < 1e-5, "{:?}", d);
            assert!(fsp_closed_form(&params(g0 * 0.99, theta)).is_err());
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = params(0.7, 0.9);
        let d = Displacement {
            a: [1.3, -0.4, 0.7],
            b: [0.2, 0.9, -1.1],
        };
        let jac = jacobian(&p, &d);
        let x = d.to_vec();
        let h = 1e-6;
        for k in 0..6 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let rp = residuals(&p, &Displacement::from_vec(&xp));
            let rm = residuals(&p, &Displacement::from_vec(&xm));
            for i in 0..6 {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                assert!((fd - jac[i][k]).abs() < 1e-7, "({i},{k}) {fd} {}", jac[i][k]);
            }
        }
    }

    #[test]
    fn antiferromagnetic_ground_state() {
        let p = params(0.6, 0.0);
        let s = solve_displacements(&p).unwrap();
        assert_eq!(s.label, PhaseLabel::Antiferromagnetic);
        assert!(s.residual_norm <= 1e-10);
        assert!(s.disp.b.iter().all(|b| b.abs() < 1e-9));
        let a = s.disp.a;
        // site 1 is the odd one out and its neighbours point the other way
        assert!(a[0] > 0.0 && a[1] < 0.0 && a[2] < 0.0);
        assert!((a[1] - a[2]).abs() < 1e-8);
        assert!((a[0].abs() - a[1].abs()).abs() > 1e-3);
        assert!(s.energy < -150.0);
    }

    #[test]
    fn chiral_ground_state() {
        let p = params(0.6, 0.1);
        let s = solve_displacements(&p).unwrap();
        assert_eq!(s.label, PhaseLabel::Chiral);
        assert!(s.disp.b.iter().any(|b| b.abs() > 1e-3));
        let m: Vec<f64> = (0..3).map(|n| s.disp.norm_sqr(n)).collect();
        assert!((m[0] - m[1]).abs() > 1e-6);
        // θ -> -θ conjugates the pattern up to relabeling, with the same energy
        let q = solve_displacements(&params(0.6, -0.1)).unwrap();
        assert!((q.energy - s.energy).abs() < 1e-10);
    }

    #[test]
    fn ferromagnetic_ground_state_matches_closed_form() {
        let p = params(0.6, 1.7);
        let s = solve_displacements(&p).unwrap();
        assert_eq!(s.label, PhaseLabel::Ferromagnetic);
        let f = fsp_closed_form(&p).unwrap();
        for n in 0..3 {
            assert!((s.disp.a[n] - f.a[n]).abs() < 1e-8);
            assert!(s.disp.b[n].abs() < 1e-8);
        }
    }

    #[test]
    fn normal_phase_returns_vacuum() {
        let s = solve_displacements(&params(0.3, 0.5)).unwrap();
        assert_eq!(s.label, PhaseLabel::Normal);
        assert_eq!(s.disp, Displacement::zero());
        assert_eq!(s.energy, -150.0);
        assert_eq!(s.delta_n, [100.0; 3]);
    }

    #[test]
    fn afsp_images_are_degenerate_roots() {
        let p = params(1.1 * gc(0.0), 0.0);
        let s = solve_displacements(&p).unwrap();
        for k in 1..3 {
            let r = s.disp.rotate(k);
            assert!(max_abs6(&residuals(&p, &r)) < 1e-10);
            assert!((energy_gain(&p, &r) - s.energy_gain).abs() < 1e-10 * p.delta);
        }
        let roots = find_roots(&p, &SolverOptions::default());
        let degenerate = roots
            .iter()
            .filter(|r| r.stable && (r.gain - s.energy_gain).abs() < 1e-10 * p.delta)
            .count();
        assert!(degenerate >= 3, "{degenerate}");
    }

    #[test]
    fn onset_is_continuous() {
        for theta in [0.0, 0.3, critical_flux(&params(0.0, 0.0)).unwrap(), 2.0] {
            let g = gc(theta);
            let s = solve_displacements(&params(g * (1.0 + 1e-4), theta)).unwrap();
            let amp = s.disp.max_abs();
            assert!(amp > 0.0 && amp < 0.2, "theta={theta} amp={amp}");
        }
    }

    #[test]
    fn extended_precision_near_critical() {
        use crate::dd::Dd;
        let p64 = params(gc(0.1) * (1.0 + 1e-8), 0.1);
        let p: Params<Dd> = p64.cast();
        // recover the exact critical ratio in extended precision
        let g = softest_coupling(&p).unwrap().0 * Dd::new(1.0 + 1e-8);
        let p = p.with_g1(g);
        let s = solve_displacements(&p).unwrap();
        assert!(s.residual_norm.approx() < 1e-25, "{:?}", s.residual_norm);
        assert!(s.disp.max_abs().approx() > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn residuals_are_half_energy_gradient(
            x in prop::array::uniform6(-3.0f64..3.0),
            theta in -3.1f64..3.1,
            g1 in 0.1f64..1.0,
        ) {
            let p = params(g1, theta);
            let r = residuals(&p, &Displacement::from_vec(&x));
            let h = 1e-6;
            for k in 0..6 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (ground_energy_mf(&p, &Displacement::from_vec(&xp))
                    - ground_energy_mf(&p, &Displacement::from_vec(&xm))) / (4.0 * h);
                prop_assert!((fd - r[k]).abs() < 1e-6, "k={} fd={} r={}", k, fd, r[k]);
            }
        }

        #[test]
        fn energy_symmetric_under_global_sign(x in prop::array::uniform6(-3.0f64..3.0), theta in -3.1f64..3.1) {
            let p = params(0.7, theta);
            let d = Displacement::from_vec(&x);
            let e1 = ground_energy_mf(&p, &d);
            let e2 = ground_energy_mf(&p, &d.negate());
            prop_assert!((e1 - e2).abs() < 1e-12);
            let stable = (energy_gain(&p, &d) - (ground_energy_mf(&p, &d) + 150.0)).abs();
            prop_assert!(stable < 1e-11);
        }
    }
}
