//! φ(x) = Σ_{k≥1} e^{-k²πx} and θ(x) = 1 + 2φ(x) with rigorous tails.

use astro_float::BigFloat;

use crate::error::{Error, Result};
use crate::precision::{pow2, to_f64_up, ub, BoundedValue, PrecisionContext, Real};

/// Below this argument φ is evaluated through θ(x) = x^(-1/2) θ(1/x).
pub const FUNCTIONAL_EQUATION_CUTOFF: f64 = 1e-4;

/// A strictly positive, finite theta argument.
#[derive(Debug, Clone)]
pub struct ThetaArgument(Real);

impl ThetaArgument {
    pub fn new(x: Real) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::Domain(format!(
                "theta argument must be positive, got {x}"
            )));
        }
        Ok(Self(x))
    }

    pub fn real(&self) -> &Real {
        &self.0
    }
}

impl TryFrom<f64> for ThetaArgument {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!(
                "theta argument must be finite, got {x}"
            )));
        }
        Self::new(Real::from(x))
    }
}

/// Σ_{k≥1} e^{-k²a} for an enclosed `a > 0` (a = πx).
fn phi_scaled(a: &BoundedValue, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let a_low = a.abs_lower();
    if !a.value().is_positive() || a_low.is_zero() {
        return Err(Error::Domain("theta argument must be positive".into()));
    }
    // Least K with K²a > (p+8) ln 2.
    let a_f = crate::precision::to_f64(&a_low);
    let need = (ctx.bits() as f64 + 8.0) * std::f64::consts::LN_2;
    let k_f = (need / a_f).sqrt().floor() + 1.0;
    if !k_f.is_finite() || k_f > ctx.max_terms() as f64 {
        return Err(Error::TermBudget {
            needed: if k_f.is_finite() {
                k_f as u64
            } else {
                u64::MAX
            },
            max_terms: ctx.max_terms(),
        });
    }
    let k_max = k_f as u64;

    let mut sum = BoundedValue::zero();
    for k in (1..=k_max).rev() {
        let sq = BigFloat::from_u64(k * k, 64);
        sum = sum.add(&a.mul_exact(&sq, ctx).neg().exp(ctx), ctx);
    }

    // Σ_{k>K} e^{-k²a} <= e^{-(K+1)²a} / (1 - e^{-(2K+3)a})
    let a_lo = BoundedValue::exact(a_low);
    let lead = a_lo
        .mul_exact(&BigFloat::from_u64((k_max + 1) * (k_max + 1), 64), ctx)
        .neg()
        .exp(ctx);
    let ratio = a_lo
        .mul_exact(&BigFloat::from_u64(2 * k_max + 3, 64), ctx)
        .neg()
        .exp(ctx);
    let denom = BoundedValue::from_i64(1).sub(&ratio, ctx);
    let tail = ub::div(&lead.abs_upper(), &denom.abs_lower());
    Ok(sum.widen(&tail))
}

fn pi_times(x: &Real, ctx: &PrecisionContext) -> BoundedValue {
    ctx.pi().mul_exact(x.as_big(), ctx)
}

fn phi_direct(x: &ThetaArgument, ctx: &PrecisionContext) -> Result<BoundedValue> {
    phi_scaled(&pi_times(x.real(), ctx), ctx)
}

fn theta_direct(x: &ThetaArgument, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let p = phi_direct(x, ctx)?;
    Ok(BoundedValue::from_i64(1).add(&p.mul_exact(&BigFloat::from_u64(2, 64), ctx), ctx))
}

/// φ(x) = Σ_{k≥1} e^{-k²πx}.
pub fn phi(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let x = ThetaArgument::new(x.clone())?;
    if x.real().to_f64() >= FUNCTIONAL_EQUATION_CUTOFF {
        return phi_direct(&x, ctx);
    }
    // φ(x) = (x^(-1/2) (1 + 2φ(1/x)) - 1) / 2
    let xb = BoundedValue::from_real(x.real());
    let a = ctx.pi().div(&xb, ctx)?;
    let two = BigFloat::from_u64(2, 64);
    let theta_inv = BoundedValue::from_i64(1).add(&phi_scaled(&a, ctx)?.mul_exact(&two, ctx), ctx);
    let scaled = theta_inv.div(&xb.sqrt(ctx)?, ctx)?;
    Ok(scaled
        .sub(&BoundedValue::from_i64(1), ctx)
        .mul_exact(&pow2(-1), ctx))
}

/// θ(x) = Σ_{k∈ℤ} e^{-k²πx} = 1 + 2φ(x).
pub fn theta(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let p = phi(x, ctx)?;
    Ok(BoundedValue::from_i64(1).add(&p.mul_exact(&BigFloat::from_u64(2, 64), ctx), ctx))
}

/// θ(x) − x^(-1/2) θ(1/x), both sides summed directly; zero in exact arithmetic.
pub fn theta_functional_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let xa = ThetaArgument::new(x.clone())?;
    let lhs = theta_direct(&xa, ctx)?;
    let xb = BoundedValue::from_real(x);
    // θ(1/x) from a = π/x, so the argument is never rounded to a binary 1/x.
    let a = ctx.pi().div(&xb, ctx)?;
    let two = BigFloat::from_u64(2, 64);
    let theta_inv = BoundedValue::from_i64(1).add(&phi_scaled(&a, ctx)?.mul_exact(&two, ctx), ctx);
    let rhs = theta_inv.div(&xb.sqrt(ctx)?, ctx)?;
    Ok(lhs.sub(&rhs, ctx))
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!(
            "remainder bound needs 0 < x <= 1, got {x}"
        )));
    }
    Ok(())
}

/// Upper bound `3 e^{-π/(2x)} / √x` on the exponentially small remainder
/// `(1/√x)(φ(1/x) − √2 φ(1/(2x)))`, valid on `0 < x <= 1`.
pub fn remainder_bound(x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    let ctx = PrecisionContext::with_bits(64)?;
    Ok(to_f64_up(&remainder_bound_upper(&Real::from(x), &ctx)?))
}

/// [`remainder_bound`] as an extended-precision upper bound.
pub fn remainder_bound_upper(x: &Real, ctx: &PrecisionContext) -> Result<BigFloat> {
    check_unit_interval(x.to_f64())?;
    let xb = BoundedValue::from_real(x);
    let expo = ctx
        .pi()
        .div(&xb.mul_exact(&BigFloat::from_u64(2, 64), ctx), ctx)?
        .neg()
        .exp(ctx);
    let b = expo
        .mul_exact(&BigFloat::from_u64(3, 64), ctx)
        .div(&xb.sqrt(ctx)?, ctx)?;
    Ok(b.abs_upper())
}
