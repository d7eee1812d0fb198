//! Verification suites run by `liouville verify`.

use clap::ValueEnum;
use serde::Serialize;

use liouville_core::means::{
    check_theorem1, dirichlet_quotient_check, dirichlet_tail_bound, s_plus, step1_residual,
    step2_residual,
};
use liouville_core::moebius::{
    classic_residual, corollary_half, corollary_partial_sum_exact, identity_consistency_residual,
    lemma2_residual, limit_probe,
};
use liouville_core::precision::{BoundedValue, PrecisionContext, Real};
use liouville_core::theta::theta_functional_residual;
use liouville_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Step1,
    Step2,
    Theorem1,
    ThetaFe,
    Lemma2,
    Corollary,
    Dirichlet,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Step1 => "step1",
            Suite::Step2 => "step2",
            Suite::Theorem1 => "theorem1",
            Suite::ThetaFe => "theta-fe",
            Suite::Lemma2 => "lemma2",
            Suite::Corollary => "corollary",
            Suite::Dirichlet => "dirichlet",
            Suite::All => "all",
        }
    }
}

/// One asserted bound.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: String,
    pub error_bound: String,
    pub limit: String,
    pub pass: bool,
}

/// Combined-bound tolerance: `1e-30` at 128 bits, scaled by `2^(128-p)`.
pub fn tolerance(bits: usize) -> f64 {
    1e-30 * 2f64.powi(128 - bits as i32)
}

/// Corollary threshold: `2^-180` at 256 bits, scaled by `2^(256-p)`.
pub fn corollary_threshold(bits: usize) -> f64 {
    2f64.powi(76 - bits as i32)
}

struct Runner<'a> {
    ctx: &'a PrecisionContext,
    tau: f64,
    suite: &'static str,
    checks: Vec<Check>,
}

impl Runner<'_> {
    fn push(&mut self, name: String, v: &BoundedValue, limit: String, pass: bool) {
        self.checks.push(Check {
            suite: self.suite,
            name,
            value: v.render_value(self.ctx),
            error_bound: v.render_bound(),
            limit,
            pass,
        });
    }

    /// Residual that is zero in exact arithmetic, with a cap on its bound.
    fn zero_residual(&mut self, name: String, r: &BoundedValue, tau: f64) {
        let pass = r.contains_zero() && r.error_bound_f64() <= tau;
        self.push(name, r, format!("contains 0, bound <= {tau:e}"), pass);
    }
}

fn x(s: &str, ctx: &PrecisionContext) -> Result<Real> {
    Real::parse(s, ctx.bits())
}

const STEP_GRID: [&str; 5] = ["0.1", "0.25", "0.5", "1", "2"];
const THEOREM1_GRID: [&str; 4] = ["0.05", "0.1", "0.2", "0.5"];
const THETA_GRID: [&str; 3] = ["0.3", "1", "3"];
const LEMMA2_GRID: [&str; 5] = ["-0.5", "0.1", "0.3", "0.5", "0.9"];

pub fn run(suite: Suite, tau: f64, ctx: &PrecisionContext) -> Result<Vec<Check>> {
    let suites = if suite == Suite::All {
        vec![
            Suite::Step1,
            Suite::Step2,
            Suite::Theorem1,
            Suite::ThetaFe,
            Suite::Lemma2,
            Suite::Corollary,
            Suite::Dirichlet,
        ]
    } else {
        vec![suite]
    };
    let mut out = Vec::new();
    for s in suites {
        let mut r = Runner {
            ctx,
            tau,
            suite: s.name(),
            checks: Vec::new(),
        };
        run_one(s, &mut r)?;
        out.append(&mut r.checks);
    }
    Ok(out)
}

fn run_one(suite: Suite, r: &mut Runner<'_>) -> Result<()> {
    let ctx = r.ctx;
    let tau = r.tau;
    match suite {
        Suite::Step1 => {
            for s in STEP_GRID {
                let v = step1_residual(&x(s, ctx)?, ctx)?;
                r.zero_residual(format!("s_minus - phi at x={s}"), &v, tau);
            }
        }
        Suite::Step2 => {
            for s in STEP_GRID {
                let v = step2_residual(&x(s, ctx)?, ctx)?;
                r.zero_residual(format!("s_plus - (phi(x) - 2 phi(2x)) at x={s}"), &v, tau);
            }
        }
        Suite::Theorem1 => {
            for s in THEOREM1_GRID {
                let chk = check_theorem1(&x(s, ctx)?, tau, ctx)?;
                let bound = liouville_core::precision::to_f64_up(&chk.remainder_bound);
                r.push(
                    format!("s_plus - (1/2 - c/sqrt(x)) at x={s}"),
                    &chk.residual,
                    format!("|r| <= {bound:e} + {tau:e}"),
                    chk.holds,
                );
            }
            let neg = s_plus(&x("0.1", ctx)?, ctx)?;
            let pass = neg.is_certified_negative();
            r.push("s_plus at x=0.1".into(), &neg, "< 0".into(), pass);
            let pos = s_plus(&x("0.2", ctx)?, ctx)?;
            let pass = pos.is_certified_positive();
            r.push("s_plus at x=0.2".into(), &pos, "> 0".into(), pass);
        }
        Suite::ThetaFe => {
            for s in THETA_GRID {
                let v = theta_functional_residual(&x(s, ctx)?, ctx)?;
                r.zero_residual(format!("theta(x) - theta(1/x)/sqrt(x) at x={s}"), &v, tau);
            }
        }
        Suite::Lemma2 => {
            for s in LEMMA2_GRID {
                let xv = x(s, ctx)?;
                let v = lemma2_residual(&xv, ctx)?;
                r.zero_residual(format!("plus series - (x - 2x^2) at x={s}"), &v, tau);
                let v = classic_residual(&xv, ctx)?;
                r.zero_residual(format!("classic series - x at x={s}"), &v, tau);
            }
            for s in ["0.3", "0.5"] {
                let v = identity_consistency_residual(&x(s, ctx)?, ctx)?;
                r.zero_residual(format!("partial-fraction consistency at x={s}"), &v, tau);
            }
            let xs = [x("0.9", ctx)?, x("0.99", ctx)?];
            let targets = ["-0.72", "-0.9702"];
            for ((v, want), s) in limit_probe(&xs, ctx)?
                .iter()
                .zip(targets)
                .zip(["0.9", "0.99"])
            {
                let diff = v.sub(&BoundedValue::from_real(&x(want, ctx)?), ctx);
                // The binary argument differs from the decimal one by < 2^-p.
                let pass = diff.certified_abs_le(tau);
                r.push(
                    format!("limit probe at x={s}"),
                    v,
                    format!("within {tau:e} of {want}"),
                    pass,
                );
            }
        }
        Suite::Corollary => {
            let v = corollary_half(ctx)?;
            let limit = corollary_threshold(ctx.bits());
            let pass = v.contains_zero() && v.certified_abs_le(limit);
            r.push(
                format!("sum mu(n)/(2^n+1), {} terms", ctx.bits() + 32),
                &v,
                format!("contains 0, |value| + bound <= {limit:e}"),
                pass,
            );
            for (n, want) in [(1u64, "1/3"), (2, "2/15")] {
                let got = corollary_partial_sum_exact(n)?;
                let pass = got.to_string() == want;
                r.checks.push(Check {
                    suite: r.suite,
                    name: format!("exact partial sum after {n} terms"),
                    value: got.to_string(),
                    error_bound: "0".into(),
                    limit: format!("= {want}"),
                    pass,
                });
            }
        }
        Suite::Dirichlet => {
            for (s, n) in [(2.0, 100_000u64), (3.0, 10_000), (10.0, 10)] {
                let v = dirichlet_quotient_check(s, n, ctx)?;
                let limit = dirichlet_tail_bound(s, n);
                let pass = v.certified_abs_le(limit);
                r.push(
                    format!("partial sum - zeta(2s)/zeta(s) at s={s}, N={n}"),
                    &v,
                    format!("|r| <= {limit:e}"),
                    pass,
                );
            }
        }
        Suite::All => unreachable!("expanded by run"),
    }
    Ok(())
}
