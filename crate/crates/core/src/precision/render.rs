use astro_float::{BigFloat, Radix};

use super::{with_consts, BoundedValue, PrecisionContext, RM};

/// Sign, decimal digits and the exponent of the first digit.
struct Decimal {
    negative: bool,
    digits: Vec<u8>,
    exp10: i64,
}

fn decompose(x: &BigFloat) -> Option<Decimal> {
    if x.is_zero() {
        return None;
    }
    let s = with_consts(|cc| x.format(Radix::Dec, RM, cc)).ok()?;
    let (negative, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (mantissa, exp) = s.split_once('e').unwrap_or((s, "0"));
    let exp: i64 = exp.parse().ok()?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let mut digits: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes())
        .map(|b| b - b'0')
        .collect();
    let mut exp10 = exp + int_part.len() as i64 - 1;
    let lead = digits.iter().take_while(|&&d| d == 0).count();
    if lead == digits.len() {
        return None;
    }
    digits.drain(..lead);
    exp10 -= lead as i64;
    Some(Decimal {
        negative,
        digits,
        exp10,
    })
}

/// Keeps `n` significant digits; `up` rounds any discarded nonzero digit away
/// from zero, otherwise rounds half up.
fn round_digits(d: &mut Decimal, n: usize, up: bool) {
    if d.digits.len() <= n {
        d.digits.resize(n, 0);
        return;
    }
    let tail = d.digits.split_off(n);
    let bump = if up {
        tail.iter().any(|&t| t != 0)
    } else {
        tail[0] >= 5
    };
    if bump {
        let mut i = n;
        loop {
            if i == 0 {
                d.digits.insert(0, 1);
                d.digits.truncate(n);
                d.exp10 += 1;
                break;
            }
            i -= 1;
            if d.digits[i] == 9 {
                d.digits[i] = 0;
            } else {
                d.digits[i] += 1;
                break;
            }
        }
    }
}

fn write_fixed_or_sci(d: &Decimal) -> String {
    let digits: String = d.digits.iter().map(|&b| (b + b'0') as char).collect();
    let sign = if d.negative { "-" } else { "" };
    let e = d.exp10;
    if (-5..=15).contains(&e) {
        if e < 0 {
            format!("{sign}0.{}{digits}", "0".repeat((-e - 1) as usize))
        } else if (e as usize) + 1 >= digits.len() {
            format!(
                "{sign}{digits}{}",
                "0".repeat(e as usize + 1 - digits.len())
            )
        } else {
            let (a, b) = digits.split_at(e as usize + 1);
            format!("{sign}{a}.{b}")
        }
    } else {
        let (a, b) = digits.split_at(1);
        if b.is_empty() {
            format!("{sign}{a}e{e}")
        } else {
            format!("{sign}{a}.{b}e{e}")
        }
    }
}

pub(crate) fn render_value(x: &BigFloat, sig: usize) -> String {
    match decompose(x) {
        None => "0".to_string(),
        Some(mut d) => {
            round_digits(&mut d, sig, false);
            write_fixed_or_sci(&d)
        }
    }
}

/// Two significant digits, rounded up, always in exponent form.
pub(crate) fn render_bound(x: &BigFloat) -> String {
    match decompose(x) {
        None => "0".to_string(),
        Some(mut d) => {
            round_digits(&mut d, 2, true);
            let e = d.exp10;
            format!("{}.{}e{}", d.digits[0], d.digits[1], e)
        }
    }
}

pub(crate) fn significant_digits(ctx: &PrecisionContext) -> usize {
    (ctx.bits() as f64 * 0.301).ceil() as usize
}

pub(super) fn render(v: &BoundedValue, ctx: &PrecisionContext) -> String {
    format!(
        "{} ± {}",
        render_value(v.value(), significant_digits(ctx)),
        render_bound(v.error_bound())
    )
}
