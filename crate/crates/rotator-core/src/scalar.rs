//! Generic scalar abstraction and forward-mode dual numbers.
//!
//! All core math is written against [`Scalar`], so the same formulas run on
//! `f32`/`f64` for plain evaluation and on [`Dual`] (or `Dual<Dual<f64>>`)
//! when gradients or Hessians are needed. Nesting duals two levels deep
//! yields exact second derivatives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

/// Scalar type the core math is generic over.
///
/// `lift_c2` threads an externally defined `C^2` curve (value and first two
/// derivatives at an `f64` point) through the scalar, so tabulated or
/// callable curves stay differentiable under one level of dual nesting.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Shorthand conversion from `f64`.
    fn scalar(x: f64) -> Self {
        Self::from_f64(x).expect("f64 -> Scalar conversion")
    }

    /// Innermost real part, used to locate curve evaluations.
    fn real_part(self) -> f64;

    /// Apply a curve given as `x -> (f, f', f'')`, with the chain rule
    /// propagated through up to two levels of dual nesting.
    fn lift_c2(self, curve: &dyn Fn(f64) -> (f64, f64, f64)) -> Self;
}

impl Scalar for f64 {
    fn real_part(self) -> f64 {
        self
    }

    fn lift_c2(self, curve: &dyn Fn(f64) -> (f64, f64, f64)) -> Self {
        curve(self).0
    }
}

impl Scalar for f32 {
    fn real_part(self) -> f64 {
        self as f64
    }

    fn lift_c2(self, curve: &dyn Fn(f64) -> (f64, f64, f64)) -> Self {
        curve(self as f64).0 as f32
    }
}

/// Forward-mode dual number `re + eps * d` with nilpotent `d`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Dual<T> {
    /// Value part.
    pub re: T,
    /// Derivative part.
    pub eps: T,
}

/// Dual over `f64`, the workhorse for single gradients.
pub type Dual64 = Dual<f64>;
/// Nested dual over `f64`, used for exact Hessian entries.
pub type Dual2_64 = Dual<Dual<f64>>;

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// Constant (zero derivative).
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    /// Independent variable (unit derivative seed).
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }

    fn chain(self, value: T, slope: T) -> Self {
        Dual { re: value, eps: self.eps * slope }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn real_part(self) -> f64 {
        self.re.real_part()
    }

    fn lift_c2(self, curve: &dyn Fn(f64) -> (f64, f64, f64)) -> Self {
        // d/de f(u) = f'(u) * du/de, where f'(u) itself is lifted through the
        // inner levels using (f', f''). Third derivatives are never needed at
        // the nesting depths used here.
        let re = self.re.lift_c2(curve);
        let shifted = move |x: f64| {
            let (_, d1, d2) = curve(x);
            (d1, d2, 0.0)
        };
        let eps = self.eps * self.re.lift_c2(&shifted);
        Dual { re, eps }
    }
}

impl<T: fmt::Debug> fmt::Debug for Dual<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}d", self.re, self.eps)
    }
}

impl<T: fmt::Display> fmt::Display for Dual<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}d", self.re, self.eps)
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual { re: self.re + rhs.re, eps: self.eps + rhs.eps }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual { re: self.re - rhs.re, eps: self.eps - rhs.eps }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual { re: self.re * rhs.re, eps: self.re * rhs.eps + self.eps * rhs.re }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let re = self.re / rhs.re;
        Dual { re, eps: (self.eps - re * rhs.eps) / rhs.re }
    }
}

impl<T: Scalar> Rem for Dual<T> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        // a - b*trunc(a/b); the trunc factor is locally constant.
        let q = (self.re / rhs.re).trunc();
        Dual { re: self.re % rhs.re, eps: self.eps - rhs.eps * q }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<T: Scalar> Zero for Dual<T> {
    fn zero() -> Self {
        Dual { re: T::zero(), eps: T::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
}

impl<T: Scalar> One for Dual<T> {
    fn one() -> Self {
        Dual { re: T::one(), eps: T::zero() }
    }
}

impl<T: Scalar> PartialOrd for Dual<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<T: Scalar> Num for Dual<T> {
    type FromStrRadixErr = T::FromStrRadixErr;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(str, radix).map(Dual::constant)
    }
}

impl<T: Scalar> ToPrimitive for Dual<T> {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.re.to_f64()
    }
}

impl<T: Scalar> NumCast for Dual<T> {
    fn from<U: ToPrimitive>(n: U) -> Option<Self> {
        T::from(n).map(Dual::constant)
    }
}

impl<T: Scalar> FromPrimitive for Dual<T> {
    fn from_i64(n: i64) -> Option<Self> {
        T::from_i64(n).map(Dual::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        T::from_u64(n).map(Dual::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        T::from_f64(n).map(Dual::constant)
    }
}

impl<T: Scalar> FloatConst for Dual<T> {
    fn E() -> Self {
        Dual::constant(T::E())
    }
    fn FRAC_1_PI() -> Self {
        Dual::constant(T::FRAC_1_PI())
    }
    fn FRAC_1_SQRT_2() -> Self {
        Dual::constant(T::FRAC_1_SQRT_2())
    }
    fn FRAC_2_PI() -> Self {
        Dual::constant(T::FRAC_2_PI())
    }
    fn FRAC_2_SQRT_PI() -> Self {
        Dual::constant(T::FRAC_2_SQRT_PI())
    }
    fn FRAC_PI_2() -> Self {
        Dual::constant(T::FRAC_PI_2())
    }
    fn FRAC_PI_3() -> Self {
        Dual::constant(T::FRAC_PI_3())
    }
    fn FRAC_PI_4() -> Self {
        Dual::constant(T::FRAC_PI_4())
    }
    fn FRAC_PI_6() -> Self {
        Dual::constant(T::FRAC_PI_6())
    }
    fn FRAC_PI_8() -> Self {
        Dual::constant(T::FRAC_PI_8())
    }
    fn LN_10() -> Self {
        Dual::constant(T::LN_10())
    }
    fn LN_2() -> Self {
        Dual::constant(T::LN_2())
    }
    fn LOG10_E() -> Self {
        Dual::constant(T::LOG10_E())
    }
    fn LOG2_E() -> Self {
        Dual::constant(T::LOG2_E())
    }
    fn PI() -> Self {
        Dual::constant(T::PI())
    }
    fn SQRT_2() -> Self {
        Dual::constant(T::SQRT_2())
    }
}

impl<T: Scalar> Float for Dual<T> {
    fn nan() -> Self {
        Dual::constant(T::nan())
    }
    fn infinity() -> Self {
        Dual::constant(T::infinity())
    }
    fn neg_infinity() -> Self {
        Dual::constant(T::neg_infinity())
    }
    fn neg_zero() -> Self {
        Dual::constant(T::neg_zero())
    }
    fn min_value() -> Self {
        Dual::constant(T::min_value())
    }
    fn min_positive_value() -> Self {
        Dual::constant(T::min_positive_value())
    }
    fn max_value() -> Self {
        Dual::constant(T::max_value())
    }
    fn epsilon() -> Self {
        Dual::constant(T::epsilon())
    }

    fn is_nan(self) -> bool {
        self.re.is_nan() || self.eps.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.re.is_infinite() || self.eps.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> std::num::FpCategory {
        self.re.classify()
    }

    fn floor(self) -> Self {
        Dual::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Dual::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Dual::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Dual::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Dual { re: self.re.fract(), eps: self.eps }
    }

    fn abs(self) -> Self {
        if self.re < T::zero() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Dual::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let inv = self.re.recip();
        self.chain(inv, -inv * inv)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let slope = T::from_i32(n).expect("i32 exponent") * self.re.powi(n - 1);
        self.chain(self.re.powi(n), slope)
    }
    fn powf(self, n: Self) -> Self {
        // x^y with both sides possibly active: d = y x^(y-1) dx + x^y ln(x) dy.
        let val = self.re.powf(n.re);
        let dx = n.re * self.re.powf(n.re - T::one());
        let dy = if n.eps.is_zero() { T::zero() } else { val * self.re.ln() };
        Dual { re: val, eps: self.eps * dx + n.eps * dy }
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s + s).recip())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn exp2(self) -> Self {
        let e = self.re.exp2();
        self.chain(e, e * T::LN_2())
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.chain(self.re.log2(), (self.re * T::LN_2()).recip())
    }
    fn log10(self) -> Self {
        self.chain(self.re.log10(), (self.re * T::LN_10()).recip())
    }
    fn max(self, other: Self) -> Self {
        if self.re >= other.re {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self.re <= other.re {
            self
        } else {
            other
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        (self - other).max(Self::zero())
    }
    fn cbrt(self) -> Self {
        let c = self.re.cbrt();
        self.chain(c, (T::scalar(3.0) * c * c).recip())
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, T::one() + t * t)
    }
    fn asin(self) -> Self {
        self.chain(self.re.asin(), (T::one() - self.re * self.re).sqrt().recip())
    }
    fn acos(self) -> Self {
        self.chain(self.re.acos(), -(T::one() - self.re * self.re).sqrt().recip())
    }
    fn atan(self) -> Self {
        self.chain(self.re.atan(), (T::one() + self.re * self.re).recip())
    }
    fn atan2(self, other: Self) -> Self {
        let denom = self.re * self.re + other.re * other.re;
        Dual {
            re: self.re.atan2(other.re),
            eps: (self.eps * other.re - other.eps * self.re) / denom,
        }
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        self.chain(self.re.exp_m1(), self.re.exp())
    }
    fn ln_1p(self) -> Self {
        self.chain(self.re.ln_1p(), (T::one() + self.re).recip())
    }
    fn sinh(self) -> Self {
        self.chain(self.re.sinh(), self.re.cosh())
    }
    fn cosh(self) -> Self {
        self.chain(self.re.cosh(), self.re.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, T::one() - t * t)
    }
    fn asinh(self) -> Self {
        self.chain(self.re.asinh(), (self.re * self.re + T::one()).sqrt().recip())
    }
    fn acosh(self) -> Self {
        self.chain(self.re.acosh(), (self.re * self.re - T::one()).sqrt().recip())
    }
    fn atanh(self) -> Self {
        self.chain(self.re.atanh(), (T::one() - self.re * self.re).recip())
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}
