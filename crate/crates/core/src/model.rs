//! Parameters, momenta and phase classification of the three-site ring.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const N_SITES: usize = 3;

/// Model parameters. Frequencies are in units where the cavity frequency
/// usually equals one, and `g1` is the coupling measured in units of
/// `sqrt(omega * delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<T> {
    pub omega: T,
    pub delta: T,
    pub g1: T,
    pub j: T,
    pub theta: T,
}

impl<T: Real> Params<T> {
    pub fn new(omega: T, delta: T, g1: T, j: T, theta: T) -> Result<Self> {
        let p = Self {
            omega,
            delta,
            g1,
            j,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.delta, self.g1, self.j, self.theta]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if !(self.omega > T::zero()) {
            return Err(Error::InvalidParams(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::InvalidParams(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.g1 < T::zero() {
            return Err(Error::InvalidParams(format!("g1 must be >= 0, got {}", self.g1)));
        }
        if self.j < T::zero() {
            return Err(Error::InvalidParams(format!("j must be >= 0, got {}", self.j)));
        }
        if self.theta.abs() > T::PI() {
            return Err(Error::InvalidParams(format!(
                "theta must lie in [-pi, pi], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn with_g1(self, g1: T) -> Self {
        Self { g1, ..self }
    }

    pub fn with_theta(self, theta: T) -> Self {
        Self { theta, ..self }
    }

    /// Bare light-matter coupling `g = g1 sqrt(omega delta)`.
    pub fn bare_coupling(&self) -> T {
        self.g1 * (self.omega * self.delta).sqrt()
    }

    /// Converts to another scalar type (through `f64` when widening).
    pub fn cast<U: Real>(&self) -> Params<U> {
        let f = |x: T| U::lit(x.to_f64_lossy());
        Params {
            omega: f(self.omega),
            delta: f(self.delta),
            g1: f(self.g1),
            j: f(self.j),
            theta: f(self.theta),
        }
    }
}

impl Default for Params<f64> {
    fn default() -> Self {
        Self {
            omega: 1.0,
            delta: 100.0,
            g1: 0.0,
            j: 0.05,
            theta: 0.0,
        }
    }
}

/// The three lattice momenta `q ∈ {0, ±2π/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Momentum {
    Zero,
    Plus,
    Minus,
}

impl Momentum {
    pub const ALL: [Momentum; 3] = [Momentum::Zero, Momentum::Plus, Momentum::Minus];

    pub fn angle<T: Real>(self) -> T {
        let a = T::lit(2.0) * T::PI() / T::lit(3.0);
        match self {
            Momentum::Zero => T::zero(),
            Momentum::Plus => a,
            Momentum::Minus => -a,
        }
    }

    /// Exact `(cos q, sin q)`.
    pub fn cos_sin<T: Real>(self) -> (T, T) {
        let half = T::lit(0.5);
        let s = T::lit(3.0).sqrt() * half;
        match self {
            Momentum::Zero => (T::one(), T::zero()),
            Momentum::Plus => (-half, s),
            Momentum::Minus => (-half, -s),
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Momentum::Zero => Momentum::Zero,
            Momentum::Plus => Momentum::Minus,
            Momentum::Minus => Momentum::Plus,
        }
    }

    pub fn from_index(k: i32) -> Self {
        match k.rem_euclid(3) {
            0 => Momentum::Zero,
            1 => Momentum::Plus,
            _ => Momentum::Minus,
        }
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Momentum::Zero => "0",
            Momentum::Plus => "+2pi/3",
            Momentum::Minus => "-2pi/3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    Normal,
    Antiferromagnetic,
    Chiral,
    Ferromagnetic,
    TriplePoint,
}

impl PhaseLabel {
    pub fn short(self) -> &'static str {
        match self {
            PhaseLabel::Normal => "NP",
            PhaseLabel::Antiferromagnetic => "AFSP",
            PhaseLabel::Chiral => "CSP",
            PhaseLabel::Ferromagnetic => "FSP",
            PhaseLabel::TriplePoint => "TRIPLE_POINT",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// Critical `g1` at which the normal-phase mode of momentum `q` softens.
pub fn critical_coupling<T: Real>(p: &Params<T>, q: Momentum) -> Result<T> {
    p.validate()?;
    let one = T::one();
    let jr = p.j / p.omega;
    let (ct, st) = crate::scalar::unit_phase(p.theta);
    let (cq, sq) = q.cos_sin::<T>();
    let four = T::lit(4.0);
    // cos(θ+q) cos(θ-q) = cos²θ cos²q - sin²θ sin²q
    let prod = ct * ct * cq * cq - st * st * sq * sq;
    let num = one + four * jr * ct * cq + four * jr * jr * prod;
    let den = one + T::lit(2.0) * jr * ct * cq;
    if !(den > T::zero()) || num < T::zero() {
        return Err(Error::Domain(format!(
            "no normal-phase instability at q = {q}: hopping too strong (J/omega = {jr})"
        )));
    }
    Ok(T::lit(0.5) * (num / den).sqrt())
}

/// Lowest critical coupling over momenta, and the momentum branch that softens.
///
/// The `±2π/3` branches share one critical value; the mode that actually goes
/// soft is the one whose chiral splitting is non-positive, `-2π/3` for
/// `θ >= 0`. A tie between `q = 0` and the chiral branch reports `q = 0`.
pub fn softest_coupling<T: Real>(p: &Params<T>) -> Result<(T, Momentum)> {
    let g0 = critical_coupling(p, Momentum::Zero)?;
    let gc = critical_coupling(p, Momentum::Minus)?;
    if g0 <= gc {
        Ok((g0, Momentum::Zero))
    } else if p.theta >= T::zero() {
        Ok((gc, Momentum::Minus))
    } else {
        Ok((gc, Momentum::Plus))
    }
}

/// Flux at which the `q = 0` and chiral branches soften simultaneously.
pub fn critical_flux<T: Real>(p: &Params<T>) -> Result<T> {
    p.validate()?;
    let w = p.omega;
    let two = T::lit(2.0);
    let arg = -two * p.j / ((T::lit(8.0) * p.j * p.j + w * w).sqrt() + w);
    Ok(arg.acos())
}

pub const TRIPLE_POINT_TOL: f64 = 1e-9;

/// Ground-state phase of the ring for the given parameters.
pub fn classify_phase<T: Real>(p: &Params<T>) -> Result<PhaseLabel> {
    let (gc, _) = softest_coupling(p)?;
    if p.g1 < gc {
        return Ok(PhaseLabel::Normal);
    }
    let tol = T::lit(TRIPLE_POINT_TOL);
    let th = p.theta.abs();
    let thc = critical_flux(p)?;
    if (th - thc).abs() < tol {
        Ok(PhaseLabel::TriplePoint)
    } else if th < tol {
        Ok(PhaseLabel::Antiferromagnetic)
    } else if th < thc {
        Ok(PhaseLabel::Chiral)
    } else {
        Ok(PhaseLabel::Ferromagnetic)
    }
}
