//! λ-weighted Lambert-type sums and the identities they satisfy:
//!
//! * `Σ λ(n)/(e^{nπx} − 1) = φ(x)`
//! * `Σ λ(n)/(e^{nπx} + 1) = φ(x) − 2φ(2x) = 1/2 − c/√x + (exponentially small)`
//!   with `c = (√2 − 1)/2`.
//!
//! Both sums are evaluated with `q = e^{-πx}`, so each term is `q^n/(1 ∓ q^n)`.

use astro_float::BigFloat;

use crate::error::{Error, Result};
use crate::multiplicative::prefix_signs;
use crate::precision::{pow2, ub, zeta_real, BoundedValue, PrecisionContext, Real};
use crate::theta::{phi, remainder_bound_upper};

/// Maximum width of the interval returned by [`find_sign_crossing`].
pub const CROSSING_WIDTH: f64 = 1.0 / (1u64 << 40) as f64;

/// Precision doublings tried before a sign is declared uncertain.
pub const MAX_ESCALATIONS: usize = 3;

/// The constants of the small-x expansion `1/2 − c/√x`.
#[derive(Debug, Clone)]
pub struct Theorem1Constants {
    c: BoundedValue,
    half: BoundedValue,
}

impl Theorem1Constants {
    pub fn new(ctx: &PrecisionContext) -> Self {
        let c = ctx
            .sqrt2()
            .sub(&BoundedValue::from_i64(1), ctx)
            .mul_exact(&pow2(-1), ctx);
        Self {
            c,
            half: BoundedValue::exact(pow2(-1)),
        }
    }

    /// `(√2 − 1)/2`.
    pub fn c(&self) -> &BoundedValue {
        &self.c
    }

    /// Exactly `1/2`.
    pub fn half(&self) -> &BoundedValue {
        &self.half
    }

    /// `1/2 − c/√x`.
    pub fn main_term(&self, x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
        let root = BoundedValue::from_real(x).sqrt(ctx)?;
        Ok(self.half.sub(&self.c.div(&root, ctx)?, ctx))
    }
}

fn positive(x: &Real) -> Result<()> {
    if !x.is_positive() {
        return Err(Error::Domain(format!(
            "series argument must be positive, got {x}"
        )));
    }
    Ok(())
}

/// `⌈((p+8) ln 2 + ln(1/(1 − e^{−πx}))) / (πx)⌉`, checked against the budget.
pub fn series_terms(x: f64, ctx: &PrecisionContext) -> Result<u64> {
    let pix = std::f64::consts::PI * x;
    let need = (ctx.bits() as f64 + 8.0) * std::f64::consts::LN_2 - (-(-pix).exp_m1()).ln();
    let n = (need / pix).ceil().max(1.0);
    if !n.is_finite() || n > ctx.max_terms() as f64 {
        return Err(Error::TermBudget {
            needed: if n.is_finite() { n as u64 } else { u64::MAX },
            max_terms: ctx.max_terms(),
        });
    }
    Ok(n as u64)
}

fn lambda_sum(
    x: &Real,
    plus: bool,
    terms: Option<u64>,
    ctx: &PrecisionContext,
) -> Result<BoundedValue> {
    positive(x)?;
    let n_terms = match terms {
        Some(n) => {
            ctx.check_terms(n)?;
            n
        }
        None => series_terms(x.to_f64(), ctx)?,
    };
    let q = ctx.pi().mul_exact(x.as_big(), ctx).neg().exp(ctx);
    let signs = prefix_signs(n_terms)?;
    let lambda = signs.lambda_values();
    let one = BoundedValue::from_i64(1);

    let mut sum = BoundedValue::zero();
    let mut qn = BoundedValue::from_i64(1);
    for &l in &lambda[..n_terms as usize] {
        qn = qn.mul(&q, ctx);
        let denom = if plus {
            one.add(&qn, ctx)
        } else {
            one.sub(&qn, ctx)
        };
        let term = qn.div(&denom, ctx)?;
        sum = if l > 0 {
            sum.add(&term, ctx)
        } else {
            sum.sub(&term, ctx)
        };
    }

    // |tail| <= Σ_{n>N} q^n/(1 − q^n) <= q^{N+1} / ((1 − q)(1 − q^{N+1}))
    let q_up = BoundedValue::exact(q.abs_upper());
    let lead = q_up.powi(n_terms + 1, ctx);
    let lead_up = lead.abs_upper();
    let one_minus_q = one.sub(&q_up, ctx).abs_lower();
    let one_minus_lead = one
        .sub(&BoundedValue::exact(lead_up.clone()), ctx)
        .abs_lower();
    if one_minus_q.is_zero() || one_minus_lead.is_zero() {
        return Err(Error::Domain("series argument too close to zero".into()));
    }
    let tail = ub::div(&lead_up, &ub::mul(&one_minus_q, &one_minus_lead));
    Ok(sum.widen(&tail))
}

/// `Σ_{n≥1} λ(n)/(e^{nπx} − 1)`.
pub fn s_minus(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    lambda_sum(x, false, None, ctx)
}

/// `Σ_{n≥1} λ(n)/(e^{nπx} + 1)`.
pub fn s_plus(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    lambda_sum(x, true, None, ctx)
}

/// [`s_plus`] truncated after exactly `terms` terms (tail still bounded).
pub fn s_plus_with_terms(x: &Real, terms: u64, ctx: &PrecisionContext) -> Result<BoundedValue> {
    lambda_sum(x, true, Some(terms), ctx)
}

/// `s_minus(x) − φ(x)`; zero in exact arithmetic.
pub fn step1_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    Ok(s_minus(x, ctx)?.sub(&phi(x, ctx)?, ctx))
}

/// `s_plus(x) − (φ(x) − 2φ(2x))`; zero in exact arithmetic.
pub fn step2_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    positive(x)?;
    let two_x = Real::from(x.as_big().mul(
        &pow2(1),
        x.as_big().mantissa_max_bit_len().unwrap_or(64),
        crate::precision::RM,
    ));
    let rhs = phi(x, ctx)?.sub(
        &phi(&two_x, ctx)?.mul_exact(&BigFloat::from_u64(2, 64), ctx),
        ctx,
    );
    Ok(s_plus(x, ctx)?.sub(&rhs, ctx))
}

/// `s_plus(x) − (1/2 − c/√x)` for `0 < x <= 1`.
pub fn theorem1_residual(x: &Real, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let xf = x.to_f64();
    if !(xf > 0.0 && xf <= 1.0) {
        return Err(Error::Domain(format!(
            "theorem1_residual needs 0 < x <= 1, got {x}"
        )));
    }
    let main = Theorem1Constants::new(ctx).main_term(x, ctx)?;
    Ok(s_plus(x, ctx)?.sub(&main, ctx))
}

/// Outcome of checking the small-x expansion at one point.
#[derive(Debug, Clone)]
pub struct Theorem1Check {
    pub residual: BoundedValue,
    /// Upper bound `3 e^{−π/(2x)}/√x` on the true remainder.
    pub remainder_bound: BigFloat,
    /// `|residual| + error <= remainder_bound + slack`.
    pub holds: bool,
}

/// Certifies `|s_plus(x) − (1/2 − c/√x)| <= 3e^{−π/(2x)}/√x + slack`.
pub fn check_theorem1(x: &Real, slack: f64, ctx: &PrecisionContext) -> Result<Theorem1Check> {
    let residual = theorem1_residual(x, ctx)?;
    let bound = remainder_bound_upper(x, ctx)?;
    let allowed = ub::add(&bound, &BigFloat::from_f64(slack.abs(), 64));
    let holds = ub::le(&residual.abs_upper(), &allowed);
    Ok(Theorem1Check {
        residual,
        remainder_bound: bound,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CertifiedSign {
    Negative,
    Positive,
}

fn certified_sign(x: f64, ctx: &PrecisionContext) -> Result<CertifiedSign> {
    let mut c = *ctx;
    for _ in 0..=MAX_ESCALATIONS {
        let v = s_plus(&Real::from(x), &c)?;
        if v.is_certified_negative() {
            return Ok(CertifiedSign::Negative);
        }
        if v.is_certified_positive() {
            return Ok(CertifiedSign::Positive);
        }
        c = c.widened(c.bits());
    }
    Err(Error::UncertainSign {
        x,
        bits: c.bits() / 2,
    })
}

/// A bracket `[lo, hi]` on which `s_plus` changes sign, with certified signs
/// `s_plus(lo) < 0 < s_plus(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingInterval {
    pub lo: f64,
    pub hi: f64,
}

impl CrossingInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Bisects `s_plus` on `[lo, hi]` down to width [`CROSSING_WIDTH`].
pub fn find_sign_crossing(lo: f64, hi: f64, ctx: &PrecisionContext) -> Result<CrossingInterval> {
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(Error::Domain(format!(
            "crossing search needs 0 < lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    let no_change = |reason: &str| Error::NoSignChange {
        lo,
        hi,
        reason: reason.to_string(),
    };
    let sign_lo = certified_sign(lo, ctx).map_err(|_| no_change("sign at lo is not certified"))?;
    let sign_hi = certified_sign(hi, ctx).map_err(|_| no_change("sign at hi is not certified"))?;
    match (sign_lo, sign_hi) {
        (CertifiedSign::Negative, CertifiedSign::Positive) => {}
        (CertifiedSign::Positive, CertifiedSign::Positive) => {
            return Err(no_change("both endpoints positive"))
        }
        (CertifiedSign::Negative, CertifiedSign::Negative) => {
            return Err(no_change("both endpoints negative"))
        }
        (CertifiedSign::Positive, CertifiedSign::Negative) => {
            return Err(no_change("s_plus decreases across the bracket"))
        }
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > CROSSING_WIDTH {
        let mid = a + (b - a) / 2.0;
        if mid <= a || mid >= b {
            break;
        }
        match certified_sign(mid, ctx)? {
            CertifiedSign::Negative => a = mid,
            CertifiedSign::Positive => b = mid,
        }
    }
    Ok(CrossingInterval { lo: a, hi: b })
}

/// The zero `3 − 2√2` of the main term `1/2 − c/√x`.
pub fn main_term_root(ctx: &PrecisionContext) -> BoundedValue {
    let two_sqrt2 = ctx.sqrt2().mul_exact(&BigFloat::from_u64(2, 64), ctx);
    BoundedValue::from_i64(3).sub(&two_sqrt2, ctx)
}

/// `Σ_{n≤N} λ(n)/n^s − ζ(2s)/ζ(s)`. Its magnitude is at most the partial-sum
/// tail, see [`dirichlet_tail_bound`].
pub fn dirichlet_quotient_check(s: f64, n: u64, ctx: &PrecisionContext) -> Result<BoundedValue> {
    if !s.is_finite() || s <= 1.0 {
        return Err(Error::Domain(format!(
            "Dirichlet series needs s > 1, got {s}"
        )));
    }
    if n < 1 {
        return Err(Error::Domain("partial sum needs N >= 1".into()));
    }
    ctx.check_terms(n)?;
    let signs = prefix_signs(n)?;
    let integral_s = s.fract() == 0.0 && s <= 64.0;
    let neg_s = BoundedValue::exact(BigFloat::from_f64(-s, 64));
    let mut partial = BoundedValue::zero();
    for (k, &l) in (1..=n).zip(signs.lambda_values()) {
        let kb = BoundedValue::from_i64(k as i64);
        let term = if integral_s {
            kb.powi(s as u64, ctx).recip(ctx)?
        } else {
            kb.ln(ctx)?.mul(&neg_s, ctx).exp(ctx)
        };
        partial = if l > 0 {
            partial.add(&term, ctx)
        } else {
            partial.sub(&term, ctx)
        };
    }
    Ok(partial.sub(&dirichlet_quotient(s, ctx)?, ctx))
}

/// `ζ(2s)/ζ(s)`.
pub fn dirichlet_quotient(s: f64, ctx: &PrecisionContext) -> Result<BoundedValue> {
    zeta_real(2.0 * s, ctx)?.div(&zeta_real(s, ctx)?, ctx)
}

/// `2 N^{1−s}/(s−1)`, twice the integral bound on `Σ_{n>N} n^{−s}`.
pub fn dirichlet_tail_bound(s: f64, n: u64) -> f64 {
    2.0 * (n as f64).powf(1.0 - s) / (s - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplicative::lambda_point;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    // Plain f64 summation with point-evaluated λ.
    fn s_oracle(x: f64, plus: bool) -> f64 {
        let mut acc = 0.0;
        for n in (1..=4000u64).rev() {
            let e = (n as f64 * std::f64::consts::PI * x).exp();
            let d = if plus { e + 1.0 } else { e - 1.0 };
            acc += lambda_point(n).unwrap().value() as f64 / d;
        }
        acc
    }

    #[test]
    fn s_minus_matches_phi_values() {
        let c = ctx();
        let v1 = s_minus(&Real::from(1.0), &c).unwrap();
        assert!((v1.value_f64() - 0.0432174056).abs() < 1e-10);
        let v2 = s_minus(&Real::from(2.0), &c).unwrap();
        assert!((v2.value_f64() - 0.0018674427).abs() < 1e-10);
        assert!((v1.value_f64() - s_oracle(1.0, false)).abs() < 1e-16);
    }

    #[test]
    fn s_minus_single_term() {
        let v = s_minus(&Real::from(50.0), &ctx()).unwrap();
        let first = 1.0 / ((50.0 * std::f64::consts::PI).exp() - 1.0);
        assert!((v.value_f64() / first - 1.0).abs() < 1e-12);
    }

    #[test]
    fn s_plus_values() {
        let c = ctx();
        let v = s_plus(&Real::from(0.5), &c).unwrap();
        assert!((v.value_f64() - 0.123313).abs() < 1e-6);
        assert!((v.value_f64() - (0.2097477 - 0.0864348)).abs() < 1e-6);
        assert!((v.value_f64() - s_oracle(0.5, true)).abs() < 1e-14);
        let v = s_plus(&Real::from(0.1), &c).unwrap();
        let main = 0.5 - (2f64.sqrt() - 1.0) / 2.0 / 0.1f64.sqrt();
        assert!((v.value_f64() - main).abs() < 1.4e-6);
        assert!((v.value_f64() + 0.154931).abs() < 5e-6);
        let v = s_plus(&Real::from(0.2), &c).unwrap();
        assert!((v.value_f64() - 0.037).abs() < 0.003);
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = ctx();
        assert!(s_plus(&Real::from(0.0), &c).is_err());
        assert!(s_minus(&Real::from(-1.0), &c).is_err());
        assert!(theorem1_residual(&Real::from(1.5), &c).is_err());
        let tight = PrecisionContext::new(128, 100).unwrap();
        assert!(matches!(
            s_plus(&Real::from(0.01), &tight),
            Err(Error::TermBudget { .. })
        ));
    }

    #[test]
    fn step_identities_hold_on_grid() {
        let c = ctx();
        for x in [0.1, 0.25, 0.5, 1.0, 2.0] {
            let r1 = step1_residual(&Real::from(x), &c).unwrap();
            assert!(r1.contains_zero(), "step1 x={x}: {}", r1.render(&c));
            assert!(r1.error_bound_f64() < 1e-30);
            let r2 = step2_residual(&Real::from(x), &c).unwrap();
            assert!(r2.contains_zero(), "step2 x={x}: {}", r2.render(&c));
            assert!(r2.error_bound_f64() < 1e-30);
        }
    }

    #[test]
    fn step_identities_for_large_argument() {
        let c = ctx();
        let r = step1_residual(&Real::from(50.0), &c).unwrap();
        assert!(r.abs_upper() < BigFloat::from_f64(2e-60, 64));
        let r = step2_residual(&Real::from(10.0), &c).unwrap();
        assert!(r.contains_zero());
    }

    #[test]
    fn theorem1_on_grid() {
        let c = ctx();
        for x in [0.05, 0.1, 0.2, 0.5] {
            let chk = check_theorem1(&Real::from(x), 1e-30, &c).unwrap();
            assert!(chk.holds, "x={x}: {}", chk.residual.render(&c));
        }
        let r = theorem1_residual(&Real::from(0.5), &c).unwrap();
        assert!((r.value_f64() + 0.0838).abs() < 1e-3);
        let r = theorem1_residual(&Real::from(0.05), &c).unwrap();
        assert!(r.abs_upper() < BigFloat::from_f64(3e-13, 64));
    }

    #[test]
    fn certified_signs_of_s_plus() {
        let c = ctx();
        for x in [0.05, 0.1, 0.15] {
            assert!(
                s_plus(&Real::from(x), &c).unwrap().is_certified_negative(),
                "x={x}"
            );
        }
        for x in [0.2, 0.5] {
            assert!(
                s_plus(&Real::from(x), &c).unwrap().is_certified_positive(),
                "x={x}"
            );
        }
    }

    #[test]
    fn doubling_terms_stays_within_bound() {
        let c = ctx();
        for x in [0.05, 0.3, 1.0] {
            let base = s_plus(&Real::from(x), &c).unwrap();
            let n = series_terms(x, &c).unwrap();
            let doubled = s_plus_with_terms(&Real::from(x), 2 * n, &c).unwrap();
            let diff = base.value().sub_full_prec(doubled.value()).abs();
            assert!(ub::le(&diff, base.error_bound()), "x={x}");
        }
    }

    #[test]
    fn crossing_brackets() {
        let c = ctx();
        let iv = find_sign_crossing(0.1, 0.3, &c).unwrap();
        assert!(iv.width() <= CROSSING_WIDTH);
        // Root of s_plus from an independent high-precision solve.
        assert!(iv.contains(0.171_823_860_972_094_2));
        let narrow = find_sign_crossing(0.15, 0.2, &c).unwrap();
        assert!((narrow.lo - iv.lo).abs() < 2.0 * CROSSING_WIDTH);
        assert!(matches!(
            find_sign_crossing(0.3, 0.5, &c),
            Err(Error::NoSignChange { .. })
        ));
        assert!(find_sign_crossing(0.5, 0.3, &c).is_err());
    }

    #[test]
    fn main_term_root_value() {
        let r = main_term_root(&ctx());
        assert!((r.value_f64() - 0.1715728752538099).abs() < 1e-15);
        let main = Theorem1Constants::new(&ctx())
            .main_term(&Real::from(r.value_f64()), &ctx())
            .unwrap();
        assert!(main.value_f64().abs() < 1e-15);
    }

    #[test]
    fn constants() {
        let k = Theorem1Constants::new(&ctx());
        assert!(k.c().is_certified_positive());
        let twice = k.c().mul_exact(&BigFloat::from_u64(2, 64), &ctx());
        let diff = twice.sub(
            &ctx().sqrt2().sub(&BoundedValue::from_i64(1), &ctx()),
            &ctx(),
        );
        assert!(diff.contains_zero());
        assert!(k.half().contains_f64(0.5, 0.0));
    }

    #[test]
    fn dirichlet_quotient_values() {
        let c = ctx();
        let q = dirichlet_quotient(2.0, &c).unwrap();
        let pi2_15 = std::f64::consts::PI.powi(2) / 15.0;
        assert!((q.value_f64() - pi2_15).abs() < 1e-15);
        assert!((q.value_f64() - 0.6579736).abs() < 1e-7);
        let r = dirichlet_quotient_check(3.0, 10_000, &c).unwrap();
        assert!(r.abs_upper() < BigFloat::from_f64(dirichlet_tail_bound(3.0, 10_000), 64));
        assert!(dirichlet_tail_bound(3.0, 10_000) <= 1e-8);
        let r = dirichlet_quotient_check(10.0, 10, &c).unwrap();
        assert!(r.value_f64().abs() < dirichlet_tail_bound(10.0, 10));
        assert!(dirichlet_quotient_check(1.0, 10, &c).is_err());
        assert!(dirichlet_quotient_check(2.0, 0, &c).is_err());
    }

    #[test]
    fn dirichlet_non_integer_exponent() {
        let c = ctx();
        let r = dirichlet_quotient_check(2.5, 2000, &c).unwrap();
        assert!(r.value_f64().abs() < dirichlet_tail_bound(2.5, 2000));
    }
}
