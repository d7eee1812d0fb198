//! Point evaluation and segmented sieving of Ω(n), λ(n) and μ(n).
//!
//! Point functions factor by trial division. Bulk access goes through
//! [`SegmentSieve`], which sieves a window `[lo, hi]` with the primes up to
//! `√hi`: every prime power `p^k` dividing `n` multiplies a running product by
//! `p` and flips a parity bit, and `p²` hits mark the entry as non-squarefree.
//! Whatever is left of `n` after dividing out that product is either 1 or a
//! single prime above `√hi`, which contributes one more factor.

use std::io::Write;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

/// Default segment length, also the default upper bound accepted by
/// [`SegmentSieve::sieve`].
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 22;

/// Inner blocking of a segment; keeps the per-entry state in L2.
const BLOCK_LEN: usize = 1 << 16;

/// Base primes are kept in memory only up to this bound. Segments whose `√hi`
/// lies beyond it are evaluated point by point.
const MAX_BASE_PRIME: u64 = 1 << 27;

/// A value of λ or μ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignValue(i8);

impl SignValue {
    pub const MINUS_ONE: SignValue = SignValue(-1);
    pub const ZERO: SignValue = SignValue(0);
    pub const PLUS_ONE: SignValue = SignValue(1);

    pub fn value(self) -> i8 {
        self.0
    }

    fn from_parity(odd: bool) -> Self {
        if odd {
            Self::MINUS_ONE
        } else {
            Self::PLUS_ONE
        }
    }
}

impl From<SignValue> for i64 {
    fn from(v: SignValue) -> i64 {
        v.0 as i64
    }
}

struct Factorization {
    omega: u32,
    squarefree: bool,
}

fn factor(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::ZeroArgument(n));
    }
    let mut m = n;
    let mut omega = 0u32;
    let mut squarefree = true;
    let mut strip = |m: &mut u64, d: u64| {
        let mut e = 0;
        while (*m).is_multiple_of(d) {
            *m /= d;
            e += 1;
        }
        omega += e;
        if e > 1 {
            squarefree = false;
        }
    };
    strip(&mut m, 2);
    let mut d = 3u64;
    while d <= m / d {
        if m.is_multiple_of(d) {
            strip(&mut m, d);
        }
        d += 2;
    }
    if m > 1 {
        omega += 1;
    }
    Ok(Factorization { omega, squarefree })
}

/// Number of prime factors of `n` counted with multiplicity.
pub fn omega(n: u64) -> Result<u32> {
    factor(n).map(|f| f.omega)
}

/// Liouville's function λ(n) = (−1)^Ω(n).
pub fn lambda_point(n: u64) -> Result<SignValue> {
    factor(n).map(|f| SignValue::from_parity(f.omega % 2 == 1))
}

/// Möbius function: λ(n) on squarefree `n`, 0 otherwise.
pub fn mu_point(n: u64) -> Result<SignValue> {
    factor(n).map(|f| {
        if f.squarefree {
            SignValue::from_parity(f.omega % 2 == 1)
        } else {
            SignValue::ZERO
        }
    })
}

/// λ and μ over the closed range `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSegment {
    lo: u64,
    hi: u64,
    lambda: Vec<i8>,
    mu: Vec<i8>,
}

impl SignSegment {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// λ values; index `i` holds λ(lo + i).
    pub fn lambda_values(&self) -> &[i8] {
        &self.lambda
    }

    /// μ values; index `i` holds μ(lo + i).
    pub fn mu_values(&self) -> &[i8] {
        &self.mu
    }

    pub fn contains(&self, n: u64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }

    /// λ(n) for `n` inside the segment.
    pub fn lambda(&self, n: u64) -> Option<SignValue> {
        self.contains(n)
            .then(|| SignValue(self.lambda[(n - self.lo) as usize]))
    }

    /// μ(n) for `n` inside the segment.
    pub fn mu(&self, n: u64) -> Option<SignValue> {
        self.contains(n)
            .then(|| SignValue(self.mu[(n - self.lo) as usize]))
    }

    /// Writes `n,lambda,mu` rows in ascending order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,lambda,mu")?;
        for (i, (l, m)) in self.lambda.iter().zip(&self.mu).enumerate() {
            writeln!(out, "{},{},{}", self.lo + i as u64, l, m)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Integer square root, rounded down.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

fn primes_up_to(limit: u64) -> Vec<u32> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u32);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// Shared table of base primes, grown on demand.
fn base_primes(limit: u64) -> Arc<Vec<u32>> {
    static CACHE: OnceLock<RwLock<(u64, Arc<Vec<u32>>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new((0, Arc::new(Vec::new()))));
    {
        let guard = cache.read().unwrap_or_else(|e| e.into_inner());
        if guard.0 >= limit {
            return guard.1.clone();
        }
    }
    let mut guard = cache.write().unwrap_or_else(|e| e.into_inner());
    if guard.0 < limit {
        let target = limit.max(guard.0.saturating_mul(2)).min(MAX_BASE_PRIME);
        *guard = (target, Arc::new(primes_up_to(target)));
    }
    guard.1.clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Segment length used by scans and the largest range `sieve` accepts.
    pub segment_len: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_len: DEFAULT_SEGMENT_LEN,
        }
    }
}

/// Segmented λ/μ sieve. Cheap to clone and safe to share between workers.
#[derive(Debug, Clone)]
pub struct SegmentSieve {
    config: SieveConfig,
    primes: Arc<Vec<u32>>,
    prime_limit: u64,
}

impl SegmentSieve {
    /// Prepares a sieve able to handle any segment with `hi <= max_hi`.
    pub fn new(config: SieveConfig, max_hi: u64) -> Self {
        let prime_limit = isqrt(max_hi).min(MAX_BASE_PRIME);
        Self {
            config,
            primes: base_primes(prime_limit),
            prime_limit,
        }
    }

    pub fn config(&self) -> SieveConfig {
        self.config
    }

    /// Sieves `[lo, hi]`, enforcing the configured maximum length.
    pub fn sieve(&self, lo: u64, hi: u64) -> Result<SignSegment> {
        check_range(lo, hi)?;
        let len = hi - lo + 1;
        if len > self.config.segment_len as u64 {
            return Err(Error::SegmentTooLong {
                len,
                max: self.config.segment_len as u64,
            });
        }
        self.sieve_unbounded(lo, hi)
    }

    pub(crate) fn sieve_unbounded(&self, lo: u64, hi: u64) -> Result<SignSegment> {
        check_range(lo, hi)?;
        let root = isqrt(hi);
        if root > self.prime_limit {
            if root <= MAX_BASE_PRIME {
                return SegmentSieve::new(self.config, hi).sieve_unbounded(lo, hi);
            }
            return point_segment(lo, hi);
        }
        let len = (hi - lo + 1) as usize;
        let mut lambda = vec![0i8; len];
        let mut mu = vec![0i8; len];
        let mut prod = vec![0u64; BLOCK_LEN.min(len)];
        let mut flags = vec![0u8; BLOCK_LEN.min(len)];
        let primes = &self.primes[..self.primes.partition_point(|&p| p as u64 <= root)];

        let mut start = 0usize;
        while start < len {
            let end = (start + BLOCK_LEN).min(len);
            let b_lo = lo + start as u64;
            let b_hi = lo + end as u64 - 1;
            sieve_block(
                b_lo,
                b_hi,
                primes,
                &mut prod[..end - start],
                &mut flags[..end - start],
            );
            for i in 0..end - start {
                let n = b_lo + i as u64;
                let odd = (flags[i] & 1 == 1) ^ (prod[i] != n);
                let l = if odd { -1 } else { 1 };
                lambda[start + i] = l;
                mu[start + i] = if flags[i] & 2 == 0 { l } else { 0 };
            }
            start = end;
        }
        Ok(SignSegment { lo, hi, lambda, mu })
    }
}

/// Flag bit 0: parity of Ω over the small primes. Bit 1: some p² divides n.
fn sieve_block(b_lo: u64, b_hi: u64, primes: &[u32], prod: &mut [u64], flags: &mut [u8]) {
    prod.fill(1);
    flags.fill(0);
    let len = prod.len();
    for &p in primes {
        let p = p as u64;
        if p > b_hi {
            break;
        }
        let mut pk = p;
        let mut mark = 0u8;
        loop {
            let first = b_lo.div_ceil(pk) * pk;
            if first <= b_hi {
                let mut j = (first - b_lo) as usize;
                let step = pk as usize;
                while j < len {
                    prod[j] *= p;
                    flags[j] = (flags[j] ^ 1) | mark;
                    j += step;
                }
            }
            match pk.checked_mul(p) {
                Some(next) if next <= b_hi => pk = next,
                _ => break,
            }
            mark = 2;
        }
    }
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo == 0 || hi < lo {
        return Err(Error::InvalidRange { lo, hi });
    }
    Ok(())
}

fn point_segment(lo: u64, hi: u64) -> Result<SignSegment> {
    let mut lambda = Vec::with_capacity((hi - lo + 1) as usize);
    let mut mu = Vec::with_capacity(lambda.capacity());
    for n in lo..=hi {
        let f = factor(n)?;
        let l = if f.omega % 2 == 1 { -1 } else { 1 };
        lambda.push(l);
        mu.push(if f.squarefree { l } else { 0 });
    }
    Ok(SignSegment { lo, hi, lambda, mu })
}

/// Sieves `[lo, hi]` with the default configuration.
pub fn sieve_segment(lo: u64, hi: u64) -> Result<SignSegment> {
    check_range(lo, hi)?;
    SegmentSieve::new(SieveConfig::default(), hi).sieve(lo, hi)
}

/// λ and μ on `[1, n]` or a longer prefix, shared process-wide. The table only
/// grows; callers get a read-only handle.
pub fn prefix_signs(n: u64) -> Result<Arc<SignSegment>> {
    static CACHE: OnceLock<RwLock<Option<Arc<SignSegment>>>> = OnceLock::new();
    let n = n.max(1);
    let cache = CACHE.get_or_init(|| RwLock::new(None));
    if let Some(seg) = cache.read().unwrap_or_else(|e| e.into_inner()).as_ref() {
        if seg.hi >= n {
            return Ok(seg.clone());
        }
    }
    let mut guard = cache.write().unwrap_or_else(|e| e.into_inner());
    if let Some(seg) = guard.as_ref() {
        if seg.hi >= n {
            return Ok(seg.clone());
        }
    }
    let target = guard
        .as_ref()
        .map_or(n.max(1 << 12), |s| n.max(s.hi.saturating_mul(2)));
    let seg =
        Arc::new(SegmentSieve::new(SieveConfig::default(), target).sieve_unbounded(1, target)?);
    *guard = Some(seg.clone());
    Ok(seg)
}
