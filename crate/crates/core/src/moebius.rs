//! Möbius-weighted Lambert series.
//!
//! * `Σ μ(n) xⁿ/(1 − xⁿ) = x`
//! * `Σ μ(n) xⁿ/(1 + xⁿ) = x − 2x²`, hence `Σ μ(n)/(2ⁿ + 1) = 0`.

use std::fmt;
use std::str::FromStr;

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::multiplicative::prefix_signs;
use crate::precision::{pow2, ub, BoundedValue, PrecisionContext, Real, RM};

/// Series arguments must satisfy `|x| < 1 − CLOSE_TO_ONE`.
pub const CLOSE_TO_ONE: f64 = 1e-6;

/// Extra terms beyond the precision for [`corollary_half`].
pub const COROLLARY_EXTRA_TERMS: u64 = 32;

/// A reduced fraction with positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalValue(BigRational);

impl RationalValue {
    pub fn new(numerator: impl Into<BigInt>, denominator: impl Into<BigInt>) -> Result<Self> {
        let d = denominator.into();
        if d.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Self(BigRational::new(numerator.into(), d)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl From<BigRational> for RationalValue {
    fn from(q: BigRational) -> Self {
        Self(q)
    }
}

impl FromStr for RationalValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("not a rational number: {s:?}"));
        let (n, d) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        Self::new(n, d)
    }
}

impl fmt::Display for RationalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Checks `1/(z+1) = 1/(z−1) − 2/(z²−1)` exactly.
pub fn partial_fraction_identity_exact(z: &RationalValue) -> Result<bool> {
    let z = z.as_ratio();
    let one = BigRational::one();
    if z.abs() == one {
        return Err(Error::Domain(format!("z = {z} is a pole")));
    }
    let lhs = (z + &one).recip();
    let rhs = (z - &one).recip() - BigRational::from_integer(2.into()) / (z * z - &one);
    Ok(lhs == rhs)
}

fn check_argument(x: &Real) -> Result<f64> {
    let xf = x.to_f64();
    if !xf.is_finite() || xf.abs() >= 1.0 - CLOSE_TO_ONE {
        return Err(Error::Domain(format!(
            "Lambert series needs |x| < 1 - 1e-6, got {x}"
        )));
    }
    Ok(xf)
}

/// `⌈(p+8) ln 2 / ln(1/|x|)⌉`, checked against the budget.
pub fn lambert_terms(x: f64, ctx: &PrecisionContext) -> Result<u64> {
    let n = ((ctx.bits() as f64 + 8.0) * std::f64::consts::LN_2 / -x.abs().ln())
        .ceil()
        .max(1.0);
    if n > ctx.max_terms() as f64 {
        return Err(Error::TermBudget {
            needed: n as u64,
            max_terms: ctx.max_terms(),
        });
    }
    Ok(n as u64)
}

fn lambert(x: &Real, plus: bool, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let xf = check_argument(x)?;
    if x.is_zero() {
        return Ok(BoundedValue::zero());
    }
    let n_terms = lambert_terms(xf, ctx)?;
    let signs = prefix_signs(n_terms)?;
    let xb = BoundedValue::from_real(x);
    let one = BoundedValue::from_i64(1);

    let mut sum = BoundedValue::zero();
    let mut xn = BoundedValue::from_i64(1);
    for &m in &signs.mu_values()[..n_terms as usize] {
        xn = xn.mul(&xb, ctx);
        if m == 0 {
            continue;
        }
        let denom = if plus {
            xn.add(&one, ctx)
        } else {
            one.sub(&xn, ctx)
        };
        let term = xn.div(&denom, ctx)?;
        sum = if m > 0 {
            sum.add(&term, ctx)
        } else {
            sum.sub(&term, ctx)
        };
    }

    // Σ_{n>N} |x|^n/(1 − |x|^n) <= |x|^{N+1} / ((1 − |x|)(1 − |x|^{N+1}))
    let ax = BoundedValue::exact(ub::abs(x.as_big()));
    let lead = ax.powi(n_terms + 1, ctx).abs_upper();
    let gap = one.sub(&ax, ctx).abs_lower();
    let gap_lead = one.sub(&BoundedValue::exact(lead.clone()), ctx).abs_lower();
    let tail = ub::div(&lead, &ub::mul(&gap, &gap_lead));
    Ok(sum.widen(&tail))
}

/// `Σ μ(n) xⁿ/(1 − xⁿ)`, which equals `x`.
pub fn mobius_lambert_classic(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    lambert(x, false, ctx)
}

/// `Σ μ(n) xⁿ/(xⁿ + 1)`, which equals `x − 2x²`.
pub fn mobius_plus_series(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    lambert(x, true, ctx)
}

/// `x − 2x²`.
pub fn lemma2_closed_form(x: &Real, ctx: &PrecisionContext) -> BoundedValue {
    let xb = BoundedValue::from_real(x);
    let sq = xb.mul(&xb, ctx).mul_exact(&pow2(1), ctx);
    xb.sub(&sq, ctx)
}

/// `mobius_plus_series(x) − (x − 2x²)`.
pub fn lemma2_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    Ok(mobius_plus_series(x, ctx)?.sub(&lemma2_closed_form(x, ctx), ctx))
}

/// `mobius_lambert_classic(x) − x`.
pub fn classic_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    Ok(mobius_lambert_classic(x, ctx)?.sub(&BoundedValue::from_real(x), ctx))
}

/// `plus(x) − (classic(x) − 2·classic(x²))`: the partial-fraction identity
/// applied termwise with `z = 1/xⁿ`.
pub fn identity_consistency_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    check_argument(x)?;
    let sq = Real::from(x.as_big().mul_full_prec(x.as_big()));
    let rhs = mobius_lambert_classic(x, ctx)?.sub(
        &mobius_lambert_classic(&sq, ctx)?.mul_exact(&pow2(1), ctx),
        ctx,
    );
    Ok(mobius_plus_series(x, ctx)?.sub(&rhs, ctx))
}

/// [`mobius_plus_series`] at each point of `xs`, all of which must lie in
/// `(0, 1 − 1e-6)`.
pub fn limit_probe(xs: &[Real], ctx: &PrecisionContext) -> Result<Vec<BoundedValue>> {
    for x in xs {
        let xf = x.to_f64();
        if !(x.is_positive() && xf < 1.0 - CLOSE_TO_ONE) {
            return Err(Error::Domain(format!(
                "limit probe needs 0 < x < 1 - 1e-6, got {x}"
            )));
        }
    }
    xs.iter().map(|x| mobius_plus_series(x, ctx)).collect()
}

/// `Σ_{n≤N} μ(n)/(2ⁿ+1)` exactly.
pub fn corollary_partial_sum_exact(n: u64) -> Result<BigRational> {
    let signs = prefix_signs(n.max(1))?;
    let mut sum = BigRational::zero();
    for (k, &m) in (0..n).zip(signs.mu_values()) {
        if m != 0 {
            let den = (BigInt::one() << (k + 1) as usize) + 1;
            sum += BigRational::new(BigInt::from(m), den);
        }
    }
    Ok(sum)
}

/// `Σ_{n≤N} μ(n)/(2ⁿ+1)` with the tail `Σ_{n>N} 2^{−n} = 2^{−N}` folded
/// into the error bound.
pub fn corollary_half_with_terms(n: u64, ctx: &PrecisionContext) -> Result<BoundedValue> {
    if n == 0 {
        return Err(Error::Domain(
            "corollary sum needs at least one term".into(),
        ));
    }
    ctx.check_terms(n)?;
    let signs = prefix_signs(n)?;
    let mut sum = BoundedValue::zero();
    for (k, &m) in (1..=n).zip(signs.mu_values()) {
        if m == 0 {
            continue;
        }
        let den = BigFloat::from_u64(1, 64).add(&pow2(k as i64), (k + 1) as usize + 64, RM);
        let den = BoundedValue::exact(den);
        let term = den.recip(ctx)?;
        sum = if m > 0 {
            sum.add(&term, ctx)
        } else {
            sum.sub(&term, ctx)
        };
    }
    Ok(sum.widen(&pow2(-(n as i64))))
}

/// `Σ μ(n)/(2ⁿ+1)` truncated after `p + 32` terms.
pub fn corollary_half(ctx: &PrecisionContext) -> Result<BoundedValue> {
    corollary_half_with_terms(ctx.bits() as u64 + COROLLARY_EXTRA_TERMS, ctx)
}
