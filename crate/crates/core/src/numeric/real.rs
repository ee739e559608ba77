//! Scalar types for the numeric layer: `f64` and a multiprecision float.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::series::Coeff;

pub trait Real:
    Clone
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(q: &Coeff) -> Self;
    fn to_f64(&self) -> f64;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn pi() -> Self;
    /// Relative spacing of representable numbers near 1.
    fn epsilon() -> Self;
    /// Significant decimal digits carried.
    fn digits() -> usize;
    fn is_finite(&self) -> bool;
    /// Decimal scientific notation with `digits` significant digits.
    fn to_sci(&self, digits: usize) -> String;

    fn zero() -> Self {
        Self::from_i64(0)
    }
    fn one() -> Self {
        Self::from_i64(1)
    }
    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }
    fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
    /// self^e for self > 0.
    fn powf(&self, e: &Self) -> Self {
        (e.clone() * self.ln()).exp()
    }
    fn max(self, o: Self) -> Self {
        if o > self {
            o
        } else {
            self
        }
    }
    fn min(self, o: Self) -> Self {
        if o < self {
            o
        } else {
            self
        }
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(q: &Coeff) -> Self {
        crate::series::ratio_to_f64(q)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn digits() -> usize {
        15
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn to_sci(&self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1), self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, n: i64) -> Self {
        f64::powi(*self, n as i32)
    }
    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }
}

const RM: RoundingMode = RoundingMode::ToEven;
const GUARD_BITS: usize = 32;
pub const DEFAULT_DIGITS: usize = 50;

struct MpCtx {
    bits: usize,
    digits: usize,
    cc: Consts,
}

thread_local! {
    static CTX: RefCell<MpCtx> = RefCell::new(MpCtx {
        bits: bits_for(DEFAULT_DIGITS),
        digits: DEFAULT_DIGITS,
        cc: Consts::new().expect("constant cache"),
    });
}

fn bits_for(digits: usize) -> usize {
    let b = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + GUARD_BITS;
    b.div_ceil(64) * 64
}

fn prec() -> usize {
    CTX.with(|c| c.borrow().bits)
}

fn with_cc<R>(f: impl FnOnce(usize, &mut Consts) -> R) -> R {
    CTX.with(|c| {
        let mut c = c.borrow_mut();
        let p = c.bits;
        f(p, &mut c.cc)
    })
}

/// Run `f` with `Mp` arithmetic at `digits` significant decimal digits on
/// this thread, restoring the previous setting afterwards.
pub fn with_digits<R>(digits: usize, f: impl FnOnce() -> R) -> R {
    let old = CTX.with(|c| {
        let mut c = c.borrow_mut();
        let old = (c.bits, c.digits);
        c.bits = bits_for(digits);
        c.digits = digits;
        old
    });
    struct Restore((usize, usize));
    impl Drop for Restore {
        fn drop(&mut self) {
            let (b, d) = self.0;
            CTX.with(|c| {
                let mut c = c.borrow_mut();
                c.bits = b;
                c.digits = d;
            });
        }
    }
    let _r = Restore(old);
    f()
}

/// Multiprecision float; precision comes from [`with_digits`].
#[derive(Clone)]
pub struct Mp(BigFloat);

impl Mp {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }

    pub fn parse(s: &str) -> Option<Mp> {
        let v = with_cc(|p, cc| BigFloat::parse(s.trim(), Radix::Dec, p, RM, cc));
        (!v.is_nan()).then_some(Mp(v))
    }

    fn from_bigint(i: &BigInt) -> Mp {
        match i.to_i64() {
            Some(v) => Mp::from_i64(v),
            None => Mp::parse(&i.to_string()).expect("integer literal"),
        }
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(CTX.with(|c| c.borrow().digits)))
    }
}

impl fmt::Display for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl PartialEq for Mp {
    fn eq(&self, o: &Self) -> bool {
        self.0 == o.0
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&o.0)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $m(self, o: Mp) -> Mp {
                Mp(self.0.$m(&o.0, prec(), RM))
            }
        }
    };
}
mp_binop!(Add, add);
mp_binop!(Sub, sub);
mp_binop!(Mul, mul);
mp_binop!(Div, div);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(self.0.neg())
    }
}

impl Real for Mp {
    fn from_f64(v: f64) -> Self {
        Mp(BigFloat::from_f64(v, prec()))
    }
    fn from_i64(v: i64) -> Self {
        Mp(BigFloat::from_i64(v, prec()))
    }
    fn from_ratio(q: &Coeff) -> Self {
        Mp::from_bigint(q.numer()) / Mp::from_bigint(q.denom())
    }
    fn to_f64(&self) -> f64 {
        let Some((m, _, sign, e, _)) = self.0.as_raw_parts() else {
            return if self.0.is_nan() {
                f64::NAN
            } else if self.0.is_positive() {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        };
        if m.iter().all(|w| *w == 0) {
            return 0.0;
        }
        // value = 0.m * 2^e, words little-endian
        let w = |i: usize| m.len().checked_sub(i + 1).map_or(0.0, |k| m[k] as f64);
        let frac = (w(0) + w(1) / 2f64.powi(64)) / 2f64.powi(64);
        let mut v = frac;
        let mut e = e as i64;
        while e > 1000 {
            v *= 2f64.powi(1000);
            e -= 1000;
        }
        while e < -1000 {
            v *= 2f64.powi(-1000);
            e += 1000;
        }
        v *= 2f64.powi(e as i32);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }
    fn ln(&self) -> Self {
        Mp(with_cc(|p, cc| self.0.ln(p, RM, cc)))
    }
    fn exp(&self) -> Self {
        Mp(with_cc(|p, cc| self.0.exp(p, RM, cc)))
    }
    fn sqrt(&self) -> Self {
        Mp(self.0.sqrt(prec(), RM))
    }
    fn pi() -> Self {
        Mp(with_cc(|p, cc| cc.pi(p, RM)))
    }
    fn epsilon() -> Self {
        Mp::from_i64(2).powi(-(prec() as i64 - GUARD_BITS as i64))
    }
    fn digits() -> usize {
        CTX.with(|c| c.borrow().digits)
    }
    fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }
    fn to_sci(&self, digits: usize) -> String {
        if !self.is_finite() {
            return format!("{}", self.to_f64());
        }
        if self.0.is_zero() {
            return format!("{:.*e}", digits.saturating_sub(1), 0.0);
        }
        sci_from_decimal(&with_cc(|_, cc| self.0.format(Radix::Dec, RM, cc)).unwrap_or_default(), digits)
    }
    fn abs(&self) -> Self {
        Mp(self.0.abs())
    }
}

/// Reformat astro-float decimal output (`[-]d.ddddde[-]x`) to `digits`
/// significant digits, rounding half up on the decimal string.
fn sci_from_decimal(s: &str, digits: usize) -> String {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (mant, exp) = body.split_once(['e', 'E']).unwrap_or((body, "0"));
    let mut exp: i64 = exp.parse().unwrap_or(0);
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    let mut ds: Vec<u8> = ip.bytes().chain(fp.bytes()).map(|b| b - b'0').collect();
    exp += ip.len() as i64 - 1;
    while ds.first() == Some(&0) && ds.len() > 1 {
        ds.remove(0);
        exp -= 1;
    }
    let digits = digits.max(1);
    ds.resize(ds.len().max(digits + 1), 0);
    let round_up = ds[digits] >= 5;
    ds.truncate(digits);
    if round_up {
        let mut i = digits;
        loop {
            if i == 0 {
                ds.insert(0, 1);
                ds.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if ds[i] == 9 {
                ds[i] = 0;
            } else {
                ds[i] += 1;
                break;
            }
        }
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push((b'0' + ds[0]) as char);
    if digits > 1 {
        out.push('.');
        out.extend(ds[1..].iter().map(|d| (b'0' + d) as char));
    }
    out.push_str(&format!("e{exp}"));
    out
}

/// Exact rational to `T`.
pub fn coeff<T: Real>(q: &Coeff) -> T {
    T::from_ratio(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip_through_mp() {
        for v in [1.0, -0.3, 1e-30, 12345.678, 2f64.powi(-70)] {
            assert_eq!(Mp::from_f64(v).to_f64(), v);
        }
    }

    #[test]
    fn fifty_digits_of_pi() {
        let s = with_digits(50, || Mp::pi().to_sci(50));
        assert_eq!(s, "3.1415926535897932384626433832795028841971693993751e0");
    }

    #[test]
    fn rational_conversion() {
        let q = Coeff::new(1.into(), 3.into());
        let x: Mp = coeff(&q);
        assert_eq!(x.to_sci(20), "3.3333333333333333333e-1");
        assert_eq!(coeff::<f64>(&-q), -1.0 / 3.0);
    }

    #[test]
    fn elementary_functions() {
        with_digits(40, || {
            let ten = Mp::from_i64(10);
            let inv = Mp::one() / ten.ln();
            assert_eq!(inv.to_sci(12), "4.34294481903e-1");
            let e = Mp::one().exp();
            assert_eq!(e.ln().to_sci(30), "1.00000000000000000000000000000e0");
            assert_eq!(Mp::from_i64(2).sqrt().to_sci(10), "1.414213562e0");
        });
    }

    #[test]
    fn sci_rounding() {
        assert_eq!(sci_from_decimal("9.9996e-3", 4), "1.000e-2");
        assert_eq!(sci_from_decimal("-1.23449e5", 4), "-1.234e5");
    }
}
