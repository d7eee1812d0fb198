use astro_float::BigFloat;

use super::{to_f64, to_f64_up, ub, with_consts, PrecisionContext, Real, BOUND_BITS, RM};
use crate::error::{Error, Result};

/// A value together with a bound on its total (truncation and rounding) error:
/// the quantity it represents lies in `[value - error_bound, value + error_bound]`.
#[derive(Debug, Clone)]
pub struct BoundedValue {
    value: BigFloat,
    error: BigFloat,
}

impl BoundedValue {
    pub fn new(value: BigFloat, error_bound: BigFloat) -> Self {
        assert!(
            !error_bound.is_nan() && !error_bound.is_inf() && !error_bound.is_negative(),
            "error bound must be finite and nonnegative"
        );
        Self {
            value,
            error: ub::abs(&error_bound),
        }
    }

    pub fn exact(value: BigFloat) -> Self {
        Self {
            value,
            error: ub::zero(),
        }
    }

    pub fn from_real(x: &Real) -> Self {
        Self::exact(x.as_big().clone())
    }

    pub fn from_i64(n: i64) -> Self {
        Self::exact(BigFloat::from_i64(n, BOUND_BITS))
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    /// A value produced by one correctly rounded operation at `bits`.
    pub(crate) fn rounded(value: BigFloat, bits: usize) -> Self {
        let error = ub::mul(&ub::abs(&value), &super::pow2(1 - bits as i64));
        Self { value, error }
    }

    pub fn value(&self) -> &BigFloat {
        &self.value
    }

    pub fn error_bound(&self) -> &BigFloat {
        &self.error
    }

    pub fn value_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    /// The error bound as an `f64`, rounded up.
    pub fn error_bound_f64(&self) -> f64 {
        to_f64_up(&self.error)
    }

    /// Upper bound on the magnitude of the represented quantity.
    pub fn abs_upper(&self) -> BigFloat {
        ub::add(&ub::abs(&self.value), &self.error)
    }

    /// `|value|`, rounded up.
    pub fn abs_value_upper(&self) -> BigFloat {
        ub::abs(&self.value)
    }

    /// Lower bound on the magnitude; zero when the enclosure contains zero.
    pub fn abs_lower(&self) -> BigFloat {
        let low = ub::sub_down(&ub::abs_down(&self.value), &self.error);
        if low.is_negative() {
            ub::zero()
        } else {
            low
        }
    }

    /// `|value| <= error_bound`.
    pub fn contains_zero(&self) -> bool {
        ub::le(&self.value.abs(), &self.error)
    }

    /// Whether `target` lies inside the enclosure.
    pub fn contains(&self, target: &BigFloat) -> bool {
        let diff = self.value.sub_full_prec(target);
        ub::le(&diff.abs(), &self.error)
    }

    /// Whether some point of `target ± slack` lies inside the enclosure.
    pub fn contains_f64(&self, target: f64, slack: f64) -> bool {
        let t = BigFloat::from_f64(target, BOUND_BITS);
        let diff = self.value.sub_full_prec(&t);
        let allowed = ub::add(&self.error, &BigFloat::from_f64(slack.abs(), BOUND_BITS));
        ub::le(&diff.abs(), &allowed)
    }

    /// `value + error_bound < 0`.
    pub fn is_certified_negative(&self) -> bool {
        self.value.is_negative() && ub::lt(&self.error, &self.value.abs())
    }

    /// `value - error_bound > 0`.
    pub fn is_certified_positive(&self) -> bool {
        self.value.is_positive() && !self.value.is_zero() && ub::lt(&self.error, &self.value.abs())
    }

    /// Enlarges the bound by `extra`, e.g. a truncation tail.
    pub fn widen(&self, extra: &BigFloat) -> Self {
        Self {
            value: self.value.clone(),
            error: ub::add(&self.error, &ub::abs(extra)),
        }
    }

    fn finish(value: BigFloat, propagated: BigFloat, ctx: &PrecisionContext) -> Self {
        let rounding = ub::mul(&ub::abs(&value), &ctx.unit());
        Self {
            value,
            error: ub::add(&propagated, &rounding),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            value: self.value.neg(),
            error: self.error.clone(),
        }
    }

    pub fn add(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let v = self.value.add(&other.value, ctx.bits(), RM);
        Self::finish(v, ub::add(&self.error, &other.error), ctx)
    }

    pub fn sub(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        self.add(&other.neg(), ctx)
    }

    pub fn mul(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let v = self.value.mul(&other.value, ctx.bits(), RM);
        let e = ub::sum(&[
            ub::mul(&ub::abs(&self.value), &other.error),
            ub::mul(&ub::abs(&other.value), &self.error),
            ub::mul(&self.error, &other.error),
        ]);
        Self::finish(v, e, ctx)
    }

    /// Multiplication by an exactly known number.
    pub fn mul_exact(&self, k: &BigFloat, ctx: &PrecisionContext) -> Self {
        let v = self.value.mul(k, ctx.bits(), RM);
        Self::finish(v, ub::mul(&ub::abs(k), &self.error), ctx)
    }

    pub fn recip(&self, ctx: &PrecisionContext) -> Result<Self> {
        let low = self.abs_lower();
        if low.is_zero() {
            return Err(Error::Domain(
                "division by a quantity that may be zero".into(),
            ));
        }
        let v = BigFloat::from_u64(1, BOUND_BITS).div(&self.value, ctx.bits(), RM);
        // |1/b - 1/v| <= e / (|v| (|v| - e))
        let denom = ub::mul(&ub::abs_down(&self.value), &low);
        let e = ub::div(&self.error, &denom);
        Ok(Self::finish(v, e, ctx))
    }

    pub fn div(&self, other: &Self, ctx: &PrecisionContext) -> Result<Self> {
        Ok(self.mul(&other.recip(ctx)?, ctx))
    }

    pub fn exp(&self, ctx: &PrecisionContext) -> Self {
        let v = with_consts(|cc| self.value.exp(ctx.bits(), RM, cc));
        // |e^a - e^v| <= e^v (e^err - 1) and e^t - 1 <= t + t^2 for t <= 1.
        let one = BigFloat::from_u64(1, BOUND_BITS);
        let growth = if ub::le(&self.error, &one) {
            ub::add(&self.error, &ub::mul(&self.error, &self.error))
        } else {
            let big = with_consts(|cc| self.error.exp(BOUND_BITS, RM, cc));
            ub::add(&ub::abs(&big), &one)
        };
        let mag = ub::mul(&ub::abs(&v), &ub::add(&one, &ctx.unit()));
        Self::finish(v.clone(), ub::mul(&mag, &growth), ctx)
    }

    pub fn sqrt(&self, ctx: &PrecisionContext) -> Result<Self> {
        if self.value.is_negative() && !self.value.is_zero() {
            return Err(Error::Domain("square root of a negative quantity".into()));
        }
        let v = self.value.sqrt(ctx.bits(), RM);
        if self.error.is_zero() {
            return Ok(Self::finish(v, ub::zero(), ctx));
        }
        // |sqrt(a) - sqrt(v)| = |a - v| / (sqrt(a) + sqrt(v)) <= err / sqrt(v)
        let root_low = ub::abs_down(&self.value).sqrt(BOUND_BITS, RM);
        let root_low = ub::abs_down(&root_low);
        if root_low.is_zero() {
            return Err(Error::Domain(
                "square root of a quantity that may be zero".into(),
            ));
        }
        let e = ub::div(&self.error, &root_low);
        Ok(Self::finish(v, e, ctx))
    }

    pub fn ln(&self, ctx: &PrecisionContext) -> Result<Self> {
        let low = self.abs_lower();
        if !self.value.is_positive() || low.is_zero() {
            return Err(Error::Domain(
                "logarithm of a quantity that may be nonpositive".into(),
            ));
        }
        let v = with_consts(|cc| self.value.ln(ctx.bits(), RM, cc));
        Ok(Self::finish(v, ub::div(&self.error, &low), ctx))
    }

    /// `self^n` by repeated squaring.
    pub fn powi(&self, n: u64, ctx: &PrecisionContext) -> Self {
        let mut result = Self::from_i64(1);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base, ctx);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base, ctx);
            }
        }
        result
    }

    /// Renders `value ± bound` with `⌈0.301·p⌉` significant digits.
    pub fn render(&self, ctx: &PrecisionContext) -> String {
        super::render::render(self, ctx)
    }

    /// Certifies `|value| + error <= limit`.
    pub fn certified_abs_le(&self, limit: f64) -> bool {
        limit.is_finite() && ub::le(&self.abs_upper(), &BigFloat::from_f64(limit, BOUND_BITS))
    }

    /// The value alone, as in [`render`](Self::render).
    pub fn render_value(&self, ctx: &PrecisionContext) -> String {
        super::render::render_value(&self.value, super::render::significant_digits(ctx))
    }

    /// The bound alone, two digits rounded up.
    pub fn render_bound(&self) -> String {
        super::render::render_bound(&self.error)
    }
}
