//! Closed-form normal-phase quantities from the momentum-space squeezing
//! solution around the photon vacuum.

use crate::error::{Error, Result};
use crate::model::{softest_coupling, Momentum, Params, N_SITES};
use crate::scalar::{unit_phase, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumMode<T> {
    pub q: Momentum,
    pub omega_q: T,
    pub omega_plus: T,
    pub omega_minus: T,
    pub epsilon: T,
    pub lambda_q: T,
    /// `e^{4 λ_q}`, computed without going through a logarithm.
    pub squeeze: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpObservables<T> {
    pub photon_number: T,
    pub var_x: T,
    pub var_p: T,
    pub ground_energy: T,
}

fn dispersion<T: Real>(p: &Params<T>, q: Momentum) -> T {
    let (ct, st) = unit_phase(p.theta);
    let (cq, sq) = q.cos_sin::<T>();
    let two = T::lit(2.0);
    p.omega - two * p.omega * p.g1 * p.g1 + two * p.j * (ct * cq + st * sq)
}

pub fn mode<T: Real>(p: &Params<T>, q: Momentum) -> Result<MomentumMode<T>> {
    p.validate()?;
    let w = p.omega;
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let wq = dispersion(p, q);
    let wmq = dispersion(p, q.negate());
    let (_, st) = unit_phase(p.theta);
    let (_, sq) = q.cos_sin::<T>();
    let omega_plus = wq + wmq;
    let omega_minus = four * p.j * st * sq;
    let g2 = four * w * p.g1 * p.g1;
    let lo = omega_plus - g2;
    let hi = omega_plus + g2;
    if !(lo > T::zero()) {
        return Err(Error::Domain(format!(
            "normal-phase mode q = {q} is not defined at g1 = {} (Omega_+^2 <= 16 omega^2 g1^4)",
            p.g1
        )));
    }
    let s = (lo * hi).sqrt();
    let epsilon = if omega_minus < T::zero() {
        (four * wq * wmq - g2 * g2) / (T::lit(2.0) * (s - omega_minus))
    } else {
        half * (s + omega_minus)
    };
    let lambda_q = -T::lit(0.125) * (-T::lit(2.0) * g2 / hi).ln_1p();
    Ok(MomentumMode {
        q,
        omega_q: wq,
        omega_plus,
        omega_minus,
        epsilon,
        lambda_q,
        squeeze: hi / s,
    })
}

pub fn modes<T: Real>(p: &Params<T>) -> Result<[MomentumMode<T>; 3]> {
    Ok([
        mode(p, Momentum::Zero)?,
        mode(p, Momentum::Plus)?,
        mode(p, Momentum::Minus)?,
    ])
}

fn require_normal<T: Real>(p: &Params<T>) -> Result<[MomentumMode<T>; 3]> {
    let (gc, q) = softest_coupling(p)?;
    if !(p.g1 < gc) {
        return Err(Error::Domain(format!(
            "g1 = {} is not inside the normal phase (g1c = {gc} at q = {q})",
            p.g1
        )));
    }
    modes(p)
}

fn site_average<T: Real>(ms: &[MomentumMode<T>; 3], f: impl Fn(&MomentumMode<T>) -> T) -> T {
    let mut acc = T::zero();
    for m in ms {
        acc += f(m);
    }
    acc / T::lit(N_SITES as f64)
}

/// `Ω₊/(2ε − Ω₋) = cosh 4λ`.
fn cosh4<T: Real>(m: &MomentumMode<T>) -> T {
    let s_inv = T::one() / m.squeeze;
    T::lit(0.5) * (m.squeeze + s_inv)
}

pub fn local_photon_np<T: Real>(p: &Params<T>) -> Result<T> {
    let ms = require_normal(p)?;
    Ok(site_average(&ms, |m| photon_per_mode(p, m)))
}

/// `½(Ω₊/(2ε − Ω₋) − 1)`, rewritten as `8ω²g₁⁴ / (s(Ω₊ + s))` with
/// `s = 2ε − Ω₋` so it stays accurate at weak coupling.
fn photon_per_mode<T: Real>(p: &Params<T>, m: &MomentumMode<T>) -> T {
    let g2 = T::lit(4.0) * p.omega * p.g1 * p.g1;
    let s = m.omega_plus / cosh4(m);
    T::lit(0.5) * g2 * g2 / (s * (m.omega_plus + s))
}

pub fn variance_x_np<T: Real>(p: &Params<T>) -> Result<T> {
    let ms = require_normal(p)?;
    Ok(site_average(&ms, |m| m.squeeze))
}

pub fn variance_p_np<T: Real>(p: &Params<T>) -> Result<T> {
    let ms = require_normal(p)?;
    Ok(site_average(&ms, |m| T::one() / m.squeeze))
}

/// Constant `E₀` of the effective normal-phase Hamiltonian.
pub fn vacuum_energy_np<T: Real>(p: &Params<T>) -> T {
    let w = p.omega;
    let g1s = p.g1 * p.g1;
    T::lit(3.0) * (-p.delta * T::lit(0.5) - w * g1s + (w + p.j) * w * w * g1s / p.delta)
}

pub fn ground_energy_np<T: Real>(p: &Params<T>) -> Result<T> {
    let ms = require_normal(p)?;
    let mut e = vacuum_energy_np(p);
    for m in &ms {
        e += T::lit(0.5) * (m.epsilon - m.omega_q);
    }
    Ok(e)
}

pub fn np_observables<T: Real>(p: &Params<T>) -> Result<NpObservables<T>> {
    let ms = require_normal(p)?;
    let photon_number = site_average(&ms, |m| photon_per_mode(p, m));
    Ok(NpObservables {
        photon_number,
        var_x: site_average(&ms, |m| m.squeeze),
        var_p: site_average(&ms, |m| T::one() / m.squeeze),
        ground_energy: ground_energy_np(p)?,
    })
}
