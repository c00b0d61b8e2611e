//! Double-double scalar used for sweeps very close to a critical point.
//!
//! This is a thin wrapper over [`TwoFloat`] that replaces its
//! double-by-double division, which in twofloat 0.8 only reaches about
//! `f64` accuracy, with a three-term long division. Everything else is
//! forwarded.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd(pub TwoFloat);

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd(TwoFloat::from_f64(x))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    /// Nearest `f64`.
    pub fn approx(self) -> f64 {
        self.hi() + self.lo()
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl From<Dd> for f64 {
    fn from(x: Dd) -> f64 {
        x.hi() + x.lo()
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi(), self.lo())
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::LowerExp for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&self.0, f)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

fn div_dd(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let bh = b.hi();
    if bh == 0.0 || !bh.is_finite() || !a.hi().is_finite() {
        return TwoFloat::from_f64(a.hi() / bh);
    }
    let q1 = a.hi() / bh;
    let r = a - b * q1;
    let q2 = r.hi() / bh;
    let r = r - b * q2;
    let q3 = r.hi() / bh;
    TwoFloat::new_add(q1, q2) + q3
}

macro_rules! binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident, $op:tt) => {
        impl $tr for Dd {
            type Output = Dd;
            #[inline]
            fn $f(self, rhs: Dd) -> Dd {
                Dd(self.0 $op rhs.0)
            }
        }
        impl $atr for Dd {
            #[inline]
            fn $af(&mut self, rhs: Dd) {
                *self = *self $op rhs;
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, +);
binop!(Sub, sub, SubAssign, sub_assign, -);
binop!(Mul, mul, MulAssign, mul_assign, *);
binop!(Rem, rem, RemAssign, rem_assign, %);

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, rhs: Dd) -> Dd {
        Dd(div_dd(self.0, rhs.0))
    }
}

impl DivAssign for Dd {
    #[inline]
    fn div_assign(&mut self, rhs: Dd) {
        *self = *self / rhs;
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd(TwoFloat::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd(TwoFloat::one())
    }
}

impl Num for Dd {
    type FromStrRadixErr = <TwoFloat as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        TwoFloat::from_str_radix(s, radix).map(Dd)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi() + self.lo())
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        TwoFloat::from_i64(n).map(Dd)
    }
    fn from_u64(n: u64) -> Option<Self> {
        TwoFloat::from_u64(n).map(Dd)
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Dd::new(n))
    }
}

impl NumCast for Dd {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Dd::new)
    }
}

macro_rules! consts {
    ($($name:ident),*) => {
        $(fn $name() -> Self { Dd(<TwoFloat as FloatConst>::$name()) })*
    };
}

impl FloatConst for Dd {
    consts!(
        E, FRAC_1_PI, FRAC_1_SQRT_2, FRAC_2_PI, FRAC_2_SQRT_PI, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4,
        FRAC_PI_6, FRAC_PI_8, LN_10, LN_2, LOG10_E, LOG2_E, PI, SQRT_2
    );
}

macro_rules! unary {
    ($($name:ident),*) => {
        $(#[inline] fn $name(self) -> Self { Dd(Float::$name(self.0)) })*
    };
}

macro_rules! predicate {
    ($($name:ident),*) => {
        $(#[inline] fn $name(self) -> bool { Float::$name(self.0) })*
    };
}

macro_rules! nullary {
    ($($name:ident),*) => {
        $(fn $name() -> Self { Dd(<TwoFloat as Float>::$name()) })*
    };
}

impl Float for Dd {
    nullary!(nan, infinity, neg_infinity, neg_zero, min_value, min_positive_value, max_value);
    predicate!(is_nan, is_infinite, is_finite, is_normal, is_sign_positive, is_sign_negative);
    unary!(
        floor, ceil, round, trunc, fract, abs, signum, sqrt, exp, exp2, ln, log2, log10, cbrt,
        sin, cos, tan, asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );

    fn classify(self) -> FpCategory {
        self.0.classify()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dd::one() / self
    }
    fn powi(self, n: i32) -> Self {
        if n < 0 {
            Dd::one() / self.powi(-n)
        } else {
            let mut acc = Dd::one();
            let mut base = self;
            let mut k = n as u32;
            while k > 0 {
                if k & 1 == 1 {
                    acc *= base;
                }
                base *= base;
                k >>= 1;
            }
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        (self.ln() * n).exp()
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn max(self, other: Self) -> Self {
        Dd(Float::max(self.0, other.0))
    }
    fn min(self, other: Self) -> Self {
        Dd(Float::min(self.0, other.0))
    }
    #[allow(deprecated)]
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Dd::zero()
        }
    }
    fn hypot(self, other: Self) -> Self {
        let (a, b) = (self.abs(), other.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / big;
        big * (Dd::one() + r * r).sqrt()
    }
    fn atan2(self, other: Self) -> Self {
        Dd(Float::atan2(self.0, other.0))
    }
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = Float::sin_cos(self.0);
        (Dd(s), Dd(c))
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0)
    }
    fn epsilon() -> Self {
        Dd::new(2f64.powi(-104))
    }
}
