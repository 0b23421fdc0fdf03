//! Scalar abstraction shared by the double and extended precision code paths.
//!
//! Most sweeps run in `f64`. Deep game rounds (ball radii near `1e-21`) and
//! strongly skewed flowed lattices need more digits, so the same algorithms are
//! written against [`Real`] and instantiated with [`Hp`], a 237-bit binary
//! float carrying about 71 significant decimal digits.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex;

pub use f256::f256 as Hp;

/// Decimal digits carried by [`Hp`].
pub const HP_DIGITS: u32 = 71;

pub trait Real:
    Copy
    + Send
    + Sync
    + PartialOrd
    + Debug
    + Display
    + num_traits::Num
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// Significant decimal digits of the representation.
    const DIGITS: u32;

    fn from_f64(x: f64) -> Self;
    fn from_hp(x: Hp) -> Self;
    fn from_i128(x: i128) -> Self;
    fn to_f64(self) -> f64;
    fn to_hp(self) -> Hp;

    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, e: Self) -> Self;
    fn floor(self) -> Self;
    fn round(self) -> Self;
    fn is_finite(self) -> bool;

    /// Nearest integer, or `None` when it does not fit an `i128`.
    fn round_i128(self) -> Option<i128>;

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn from_i64(x: i64) -> Self {
        Self::from_i128(x as i128)
    }

    /// Selects this precision's copy of a precomputed complex table.
    fn pick_complex(table: &ComplexTable) -> &[Complex<Self>];
    /// Selects this precision's copy of a precomputed real table.
    fn pick_real(table: &RealTable) -> &[Self];
}

/// A complex table stored once per supported precision.
#[derive(Clone, Debug)]
pub struct ComplexTable {
    pub double: Vec<Complex<f64>>,
    pub extended: Vec<Complex<Hp>>,
}

impl ComplexTable {
    pub fn from_hp(values: Vec<Complex<Hp>>) -> Self {
        let double = values.iter().map(|z| Complex::new(z.re.to_f64(), z.im.to_f64())).collect();
        Self { double, extended: values }
    }
}

/// A real table stored once per supported precision.
#[derive(Clone, Debug)]
pub struct RealTable {
    pub double: Vec<f64>,
    pub extended: Vec<Hp>,
}

impl RealTable {
    pub fn from_hp(values: Vec<Hp>) -> Self {
        let double = values.iter().map(|x| x.to_f64()).collect();
        Self { double, extended: values }
    }
}

impl Real for f64 {
    const DIGITS: u32 = 15;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_hp(x: Hp) -> Self {
        hp_to_f64(&x)
    }
    fn from_i128(x: i128) -> Self {
        x as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn to_hp(self) -> Hp {
        <Hp as From<f64>>::from(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
    fn round(self) -> Self {
        f64::round(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn round_i128(self) -> Option<i128> {
        let r = f64::round(self);
        if r.is_finite() && r.abs() < 1.0e38 {
            Some(r as i128)
        } else {
            None
        }
    }
    fn pick_complex(table: &ComplexTable) -> &[Complex<Self>] {
        &table.double
    }
    fn pick_real(table: &RealTable) -> &[Self] {
        &table.double
    }
}

impl Real for Hp {
    const DIGITS: u32 = HP_DIGITS;

    fn from_f64(x: f64) -> Self {
        <Hp as From<f64>>::from(x)
    }
    fn from_hp(x: Hp) -> Self {
        x
    }
    fn from_i128(x: i128) -> Self {
        <Hp as From<i128>>::from(x)
    }
    fn to_f64(self) -> f64 {
        hp_to_f64(&self)
    }
    fn to_hp(self) -> Hp {
        self
    }
    fn sqrt(self) -> Self {
        Hp::sqrt(self)
    }
    fn abs(self) -> Self {
        Hp::abs(&self)
    }
    fn exp(self) -> Self {
        Hp::exp(&self)
    }
    fn ln(self) -> Self {
        Hp::ln(&self)
    }
    fn powf(self, e: Self) -> Self {
        Hp::powf(&self, &e)
    }
    fn floor(self) -> Self {
        Hp::floor(&self)
    }
    fn round(self) -> Self {
        Hp::round(&self)
    }
    fn is_finite(self) -> bool {
        Hp::is_finite(self)
    }
    fn round_i128(self) -> Option<i128> {
        let r = Hp::round(&self);
        if !Hp::is_finite(r) {
            return None;
        }
        i128::try_from(&r).ok()
    }
    fn pick_complex(table: &ComplexTable) -> &[Complex<Self>] {
        &table.extended
    }
    fn pick_real(table: &RealTable) -> &[Self] {
        &table.extended
    }
}

/// Correctly scaled conversion; `f256` has no native `f64` conversion.
pub fn hp_to_f64(x: &Hp) -> f64 {
    if x.eq_zero() {
        return 0.0;
    }
    if !x.is_finite() {
        return if x.is_nan() {
            f64::NAN
        } else if x.is_sign_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    let (sign, exp, (hi, lo)) = x.as_sign_exp_signif();
    let mag = scale_pow2(hi as f64, exp + 128) + scale_pow2(lo as f64, exp);
    if sign == 1 {
        -mag
    } else {
        mag
    }
}

fn scale_pow2(m: f64, e: i32) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let mut v = m;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e)
}

/// Bit-exact text encoding of an [`Hp`] value (64 hex digits).
pub fn hp_to_hex(x: &Hp) -> String {
    let (hi, lo) = x.to_bits();
    format!("{hi:032x}{lo:032x}")
}

pub fn hp_from_hex(s: &str) -> Option<Hp> {
    if s.len() != 64 {
        return None;
    }
    let hi = u128::from_str_radix(&s[..32], 16).ok()?;
    let lo = u128::from_str_radix(&s[32..], 16).ok()?;
    Some(Hp::from_bits((hi, lo)))
}

/// Modulus of a complex number over any [`Real`].
pub fn cabs<R: Real>(z: Complex<R>) -> R {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub fn cnorm_sqr<R: Real>(z: Complex<R>) -> R {
    z.re * z.re + z.im * z.im
}

pub fn cconj<R: Real>(z: Complex<R>) -> Complex<R> {
    Complex::new(z.re, -z.im)
}

pub fn to_complex<R: Real>(z: Complex<f64>) -> Complex<R> {
    Complex::new(R::from_f64(z.re), R::from_f64(z.im))
}

pub fn complex_to_f64<R: Real>(z: Complex<R>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn convert_complex<A: Real, B: Real>(z: Complex<A>) -> Complex<B> {
    Complex::new(B::from_hp(z.re.to_hp()), B::from_hp(z.im.to_hp()))
}

/// Euclidean norm of a complex vector viewed in `R^{2n}`.
pub fn vnorm<R: Real>(v: &[Complex<R>]) -> R {
    v.iter().fold(R::zero(), |acc, z| acc + cnorm_sqr(*z)).sqrt()
}

pub fn vdist_sqr<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (x, y)| acc + cnorm_sqr(*x - *y))
}

/// Serde adapters writing [`Hp`] values as bit-exact hex strings.
pub mod hp_serde {
    use super::{hp_from_hex, hp_to_hex, Hp};
    use num_complex::Complex;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Hp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hp_to_hex(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Hp, D::Error> {
        let s = String::deserialize(d)?;
        hp_from_hex(&s).ok_or_else(|| D::Error::custom(format!("bad extended-precision value {s:?}")))
    }

    pub mod complex {
        use super::*;
        use serde::Serialize;

        pub fn serialize<S: Serializer>(z: &Complex<Hp>, s: S) -> Result<S::Ok, S::Error> {
            [hp_to_hex(&z.re), hp_to_hex(&z.im)].serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex<Hp>, D::Error> {
            let [re, im] = <[String; 2]>::deserialize(d)?;
            let re = hp_from_hex(&re).ok_or_else(|| D::Error::custom("bad real part"))?;
            let im = hp_from_hex(&im).ok_or_else(|| D::Error::custom("bad imaginary part"))?;
            Ok(Complex::new(re, im))
        }
    }

    pub mod complex_vec {
        use super::*;
        use serde::Serialize;

        pub fn serialize<S: Serializer>(v: &[Complex<Hp>], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|z| [hp_to_hex(&z.re), hp_to_hex(&z.im)]).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex<Hp>>, D::Error> {
            let raw = Vec::<[String; 2]>::deserialize(d)?;
            raw.iter()
                .map(|[re, im]| match (hp_from_hex(re), hp_from_hex(im)) {
                    (Some(re), Some(im)) => Ok(Complex::new(re, im)),
                    _ => Err(D::Error::custom("bad complex entry")),
                })
                .collect()
        }
    }
}
