//! ζ(s) for real s > 1 by Euler–Maclaurin summation.
//!
//! ζ(s) = Σ_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
//!        + Σ_{k=1}^{m} B_2k/(2k)! · s(s+1)…(s+2k-2) · N^(-s-2k+1) + R_m,
//!
//! and for real s the remainder satisfies |R_m| <= |T_{m+1}|, the first
//! omitted correction term.

use std::sync::{Mutex, OnceLock};

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{big_from_int, pow2, ub, BoundedValue, PrecisionContext, GUARD_BITS};
use crate::error::{Error, Result};

const MAX_CORRECTIONS: usize = 400;

/// B_0, B_1, …, B_n as exact rationals (B_1 = -1/2).
fn bernoulli(n: usize) -> Vec<BigRational> {
    static CACHE: OnceLock<Mutex<Vec<BigRational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![BigRational::one()]));
    let mut b = cache.lock().unwrap_or_else(|e| e.into_inner());
    while b.len() <= n {
        let m = b.len();
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b[..=n].to_vec()
}

/// B_2k / (2k)! for k = 1..=count.
fn correction_coefficients(count: usize) -> Vec<BigRational> {
    let b = bernoulli(2 * count);
    let mut fact = BigInt::one();
    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        fact *= BigInt::from((2 * k - 1) * (2 * k));
        out.push(&b[2 * k] / BigRational::from_integer(fact.clone()));
    }
    out
}

fn rational(q: &BigRational, ctx: &PrecisionContext) -> Result<BoundedValue> {
    let num = BoundedValue::exact(big_from_int(q.numer()));
    let den = BoundedValue::exact(big_from_int(q.denom()));
    num.div(&den, ctx)
}

/// ζ(s) with `error_bound <= 2^(8-p)·|value|`.
pub fn zeta_real(s: f64, ctx: &PrecisionContext) -> Result<BoundedValue> {
    if !s.is_finite() || s <= 1.0 + 1e-6 {
        return Err(Error::Domain(format!(
            "zeta_real needs s > 1 + 1e-6, got {s}"
        )));
    }
    let target = pow2(8 - ctx.bits() as i64);
    let mut n = (ctx.bits() as u64).max(20);
    loop {
        let z = euler_maclaurin(s, n, ctx)?;
        let allowed = ub::mul(&target, &ub::abs_down(z.value()));
        if ub::le(z.error_bound(), &allowed) {
            return Ok(z);
        }
        // Corrections stopped shrinking before reaching the target.
        n = n.checked_mul(4).ok_or(Error::TermBudget {
            needed: u64::MAX,
            max_terms: ctx.max_terms(),
        })?;
        ctx.check_terms(n)?;
    }
}

fn euler_maclaurin(s: f64, n: u64, ctx: &PrecisionContext) -> Result<BoundedValue> {
    ctx.check_terms(n)?;
    let w = ctx.widened(GUARD_BITS);
    let sb = BoundedValue::exact(BigFloat::from_f64(s, 64));
    let neg_s = sb.neg();
    let power = |k: u64| -> Result<BoundedValue> {
        let ln = BoundedValue::from_i64(k as i64).ln(&w)?;
        Ok(ln.mul(&neg_s, &w).exp(&w))
    };

    let mut sum = BoundedValue::zero();
    for k in (1..n).rev() {
        sum = sum.add(&power(k)?, &w);
    }

    let nb = BoundedValue::from_i64(n as i64);
    let n_pow = power(n)?;
    let s_minus_one = sb.sub(&BoundedValue::from_i64(1), &w);
    let integral = n_pow.mul(&nb, &w).div(&s_minus_one, &w)?;
    let half = n_pow.mul_exact(&pow2(-1), &w);
    sum = sum.add(&integral, &w).add(&half, &w);

    // T_k = c_k · s(s+1)…(s+2k-2) · N^(-s-2k+1)
    let stop = pow2(-(w.bits() as i64));
    let n_sq = nb.mul(&nb, &w);
    let mut rising = sb.clone();
    let mut n_part = n_pow.div(&nb, &w)?;
    let mut coeffs = correction_coefficients(8);
    let mut k = 1usize;
    let remainder = loop {
        if k > coeffs.len() {
            coeffs = correction_coefficients((2 * coeffs.len()).min(MAX_CORRECTIONS));
        }
        let term = rational(&coeffs[k - 1], &w)?
            .mul(&rising, &w)
            .mul(&n_part, &w);
        let small = ub::le(&term.abs_upper(), &stop);
        if small || k == MAX_CORRECTIONS {
            break term.abs_upper();
        }
        sum = sum.add(&term, &w);
        let a = sb.add(&BoundedValue::from_i64(2 * k as i64 - 1), &w);
        let b = sb.add(&BoundedValue::from_i64(2 * k as i64), &w);
        rising = rising.mul(&a, &w).mul(&b, &w);
        n_part = n_part.div(&n_sq, &w)?;
        k += 1;
    };
    Ok(sum.widen(&remainder))
}
