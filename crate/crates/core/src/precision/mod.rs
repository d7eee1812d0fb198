//! Extended-precision values with rigorous error bounds.
//!
//! A [`BoundedValue`] is a binary floating-point number together with an upper
//! bound on its distance from the mathematical quantity it stands for. Each
//! operation rounds its result to the context precision `p`, which costs at most
//! `2^(1-p)` relative, and propagates the incoming bounds affinely. Error bounds
//! are themselves floating-point numbers rounded away from zero, so the
//! enclosure survives the bookkeeping.

mod bounded;
mod render;
mod zeta;

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::BigInt;

use crate::error::{Error, Result};

pub use bounded::BoundedValue;
pub use zeta::zeta_real;

/// Extra bits used for constants and internal evaluations.
pub const GUARD_BITS: usize = 16;

/// Precision of the error-bound arithmetic.
pub(crate) const BOUND_BITS: usize = 64;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("allocating the constants cache"));
}

pub(crate) fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Working precision and series budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    precision_bits: usize,
    max_terms: u64,
}

impl PrecisionContext {
    pub const DEFAULT_BITS: usize = 128;
    pub const DEFAULT_MAX_TERMS: u64 = 50_000_000;

    pub fn new(precision_bits: usize, max_terms: u64) -> Result<Self> {
        if precision_bits < 53 {
            return Err(Error::Precision(precision_bits));
        }
        if max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(Self {
            precision_bits,
            max_terms,
        })
    }

    pub fn with_bits(precision_bits: usize) -> Result<Self> {
        Self::new(precision_bits, Self::DEFAULT_MAX_TERMS)
    }

    pub fn bits(&self) -> usize {
        self.precision_bits
    }

    pub fn max_terms(&self) -> u64 {
        self.max_terms
    }

    /// Same budget, `extra` more bits.
    pub fn widened(&self, extra: usize) -> Self {
        Self {
            precision_bits: self.precision_bits + extra,
            max_terms: self.max_terms,
        }
    }

    /// Relative rounding error charged per operation, `2^(1-p)`.
    pub(crate) fn unit(&self) -> BigFloat {
        pow2(1 - self.precision_bits as i64)
    }

    pub(crate) fn check_terms(&self, needed: u64) -> Result<()> {
        if needed > self.max_terms {
            return Err(Error::TermBudget {
                needed,
                max_terms: self.max_terms,
            });
        }
        Ok(())
    }

    /// π with a bound, evaluated with guard bits.
    pub fn pi(&self) -> BoundedValue {
        let p = self.precision_bits + GUARD_BITS;
        let v = with_consts(|cc| cc.pi(p, RM));
        BoundedValue::rounded(v, p)
    }

    /// √2 with a bound, evaluated with guard bits.
    pub fn sqrt2(&self) -> BoundedValue {
        let p = self.precision_bits + GUARD_BITS;
        let v = BigFloat::from_u64(2, BOUND_BITS).sqrt(p, RM);
        BoundedValue::rounded(v, p)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            precision_bits: Self::DEFAULT_BITS,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

/// An exactly known binary number, used for series arguments.
#[derive(Debug, Clone)]
pub struct Real(BigFloat);

impl Real {
    /// The binary number nearest to a decimal string, at `bits` of precision.
    pub fn parse(s: &str, bits: usize) -> Result<Self> {
        let t = s.trim();
        let ok = !t.is_empty()
            && t.chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
        if !ok {
            return Err(Error::Domain(format!("not a decimal number: {s:?}")));
        }
        let v = with_consts(|cc| BigFloat::parse(t, Radix::Dec, bits, RM, cc));
        if v.is_nan() || v.is_inf() {
            return Err(Error::Domain(format!("not a finite decimal number: {s:?}")));
        }
        Ok(Self(v))
    }

    pub fn as_big(&self) -> &BigFloat {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.0)
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Real {
        Real(self.0.abs())
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        assert!(v.is_finite(), "series arguments must be finite");
        Real(BigFloat::from_f64(v, BOUND_BITS))
    }
}

impl From<BigFloat> for Real {
    fn from(v: BigFloat) -> Self {
        Real(v)
    }
}

impl std::fmt::Display for Real {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `2^e` exactly.
pub(crate) fn pow2(e: i64) -> BigFloat {
    let mut one = BigFloat::from_u64(1, BOUND_BITS);
    let cur = one.exponent().expect("one is finite") as i64;
    one.set_exponent((cur + e) as astro_float::Exponent);
    one
}

/// Nearest-ish `f64` (within a couple of ulps); saturates to ±inf and 0.
pub fn to_f64(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((words, _, sign, e, _)) => {
            let top = *words.last().unwrap_or(&0);
            if top == 0 {
                return 0.0;
            }
            let mag = top as f64 * pow2_f64(e as i64 - 64);
            if sign == Sign::Neg {
                -mag
            } else {
                mag
            }
        }
        None if x.is_inf_pos() => f64::INFINITY,
        None if x.is_inf_neg() => f64::NEG_INFINITY,
        None => f64::NAN,
    }
}

/// An `f64` no smaller than `|x|`.
pub fn to_f64_up(x: &BigFloat) -> f64 {
    let f = to_f64(x).abs();
    if f.is_infinite() {
        return f;
    }
    if x.is_zero() {
        return 0.0;
    }
    f.next_up().next_up()
}

fn pow2_f64(e: i64) -> f64 {
    // powi with |e| > 1023 would overflow the intermediate; split it.
    let mut r = 1.0f64;
    let mut e = e;
    while e > 1000 {
        r *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        r *= 2f64.powi(-1000);
        e += 1000;
    }
    r * 2f64.powi(e as i32)
}

pub(crate) fn big_from_int(n: &BigInt) -> BigFloat {
    let (sign, limbs) = n.to_u64_digits();
    if limbs.is_empty() {
        return BigFloat::from_u64(0, BOUND_BITS);
    }
    let s = if sign == num_bigint::Sign::Minus {
        Sign::Neg
    } else {
        Sign::Pos
    };
    BigFloat::from_words(&limbs, s, (64 * limbs.len()) as astro_float::Exponent)
}

/// Bound arithmetic on nonnegative numbers. The library only rounds to
/// nearest, so every result is pushed outward by a relative `2^-60`, which
/// dominates the `2^-64` rounding of both the operation and the push.
pub(crate) mod ub {
    use super::{pow2, BigFloat, BOUND_BITS, RM};

    fn outward(x: BigFloat, up: bool) -> BigFloat {
        if x.is_zero() {
            return x;
        }
        // Scaling a negative number by (1 - 2^-60) moves it up, and vice versa.
        let grow = x.is_positive() == up;
        let one = BigFloat::from_u64(1, BOUND_BITS);
        let g = if grow {
            one.add(&pow2(-60), BOUND_BITS, RM)
        } else {
            one.sub(&pow2(-60), BOUND_BITS, RM)
        };
        x.mul(&g, BOUND_BITS, RM)
    }

    pub fn zero() -> BigFloat {
        BigFloat::from_u64(0, BOUND_BITS)
    }

    /// `|x|` rounded up.
    pub fn abs(x: &BigFloat) -> BigFloat {
        outward(x.abs().add(&zero(), BOUND_BITS, RM), true)
    }

    /// `|x|` rounded down.
    pub fn abs_down(x: &BigFloat) -> BigFloat {
        outward(x.abs().add(&zero(), BOUND_BITS, RM), false)
    }

    pub fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
        outward(a.add(b, BOUND_BITS, RM), true)
    }

    pub fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
        outward(a.mul(b, BOUND_BITS, RM), true)
    }

    /// `a / b` rounded up; `b` must be a positive lower bound.
    pub fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
        outward(a.div(b, BOUND_BITS, RM), true)
    }

    /// `a - b` rounded down, for lower bounds.
    pub fn sub_down(a: &BigFloat, b: &BigFloat) -> BigFloat {
        outward(a.sub(b, BOUND_BITS, RM), false)
    }

    pub fn le(a: &BigFloat, b: &BigFloat) -> bool {
        a.cmp(b).is_some_and(|c| c <= 0)
    }

    pub fn lt(a: &BigFloat, b: &BigFloat) -> bool {
        a.cmp(b).is_some_and(|c| c < 0)
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a BigFloat>) -> BigFloat {
        items.into_iter().fold(zero(), |acc, x| add(&acc, x))
    }
}
