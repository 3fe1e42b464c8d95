//! Real-argument exponential integrals and small gamma/combinatorial helpers.
//!
//! Only positive arguments and integer orders appear in the outage closed
//! forms, so that is all this module supports. Scaled variants
//! (`e^x E_n(x)`, `e^-x Ei(x)`) exist because the closed forms only ever
//! consume those products, and the unscaled factors overflow `f64` long
//! before the products lose meaning.

// !(x > 0) guards reject NaN along with the out-of-range values;
// a partial_cmp refactor would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest argument for which `e^-x` is representable as a normal `f64`.
const EXP_UNDERFLOW: f64 = 708.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("binomial({n}, {k}) outside the supported range (k <= n <= 64)")]
    Overflow { n: u32, k: u32 },
}

/// Generalized exponential integral `E_n(x) = int_1^inf e^{-x t} t^{-n} dt`
/// for `n >= 1`, `x > 0`.
///
/// Returns exact 0 once `e^-x` underflows; the closed forms multiply these
/// tails by bounded factors.
pub fn expint_en(n: u32, x: f64) -> Result<f64, SpecFunError> {
    check_en_args(n, x)?;
    if x > EXP_UNDERFLOW {
        return Ok(0.0);
    }
    if x <= 1.0 {
        Ok(en_small(n, x))
    } else {
        Ok((-x).exp() * en_cf(n, x))
    }
}

/// Scaled variant `e^x E_n(x)`, finite for the whole positive axis.
pub fn expint_en_scaled(n: u32, x: f64) -> Result<f64, SpecFunError> {
    check_en_args(n, x)?;
    if x <= 1.0 {
        Ok(x.exp() * en_small(n, x))
    } else {
        Ok(en_cf(n, x))
    }
}

fn check_en_args(n: u32, x: f64) -> Result<(), SpecFunError> {
    if n < 1 {
        return Err(SpecFunError::Domain("expint_en requires n >= 1"));
    }
    if !(x > 0.0) {
        return Err(SpecFunError::Domain("expint_en requires x > 0"));
    }
    Ok(())
}

/// `E_n` for `x <= 1`: power series for `E_1`, then the upward recurrence
/// `E_{k+1}(x) = (e^-x - x E_k(x)) / k`, which is stable on this range
/// (error amplification x/k <= 1 per step).
fn en_small(n: u32, x: f64) -> f64 {
    let mut e = e1_series(x);
    if n == 1 {
        return e;
    }
    let emx = (-x).exp();
    for k in 1..n {
        e = (emx - x * e) / k as f64;
    }
    e
}

/// Ascending series for `E_1(x)`, `0 < x <= 1`.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // tracks (-x)^k / k! via recurrence, divided by k when added
    for k in 1..=40 {
        term *= -x / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib.abs() <= sum.abs() * 1e-17 + 1e-300 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified Lentz continued fraction for `e^x E_n(x)`, accurate for `x >= 1`
/// at any order. Evaluating at the target order directly avoids the upward
/// recurrence, which loses ~(x+k)/k of relative accuracy per step for x >> 1.
fn en_cf(n: u32, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let nf = n as f64;
    let mut b = x + nf;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=400u32 {
        let a = -(i as f64) * (nf - 1.0 + i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponential integral `Ei(x) = -PV int_{-x}^inf e^{-t}/t dt` for `x > 0`.
///
/// Ascending series with compensated summation up to `x = 40`, asymptotic
/// series beyond. Overflows to `+inf` past x ~ 716 where `e^x/x` does.
pub fn expint_ei(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain("expint_ei requires x > 0"));
    }
    if x <= 40.0 {
        Ok(ei_series(x))
    } else {
        Ok((x.exp() / x) * ei_asymptotic_sum(x))
    }
}

/// Scaled variant `e^-x Ei(x)`, finite for the whole positive axis.
pub fn expint_ei_scaled(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain("expint_ei requires x > 0"));
    }
    if x <= 40.0 {
        Ok((-x).exp() * ei_series(x))
    } else {
        Ok(ei_asymptotic_sum(x) / x)
    }
}

/// `gamma + ln x + sum x^k/(k k!)` with Kahan compensation. The leading
/// `gamma + ln x` cancels against the series near the root at x ~ 0.3725,
/// so the compensated sum keeps the absolute error at ~1 ulp of the largest
/// intermediate.
fn ei_series(x: f64) -> f64 {
    let mut sum = EULER_GAMMA + x.ln();
    let mut comp = 0.0;
    let mut term = 1.0;
    for k in 1..=120 {
        term *= x / k as f64;
        let contrib = term / k as f64;
        let y = contrib - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if contrib <= sum.abs() * 1e-17 + 1e-300 {
            break;
        }
    }
    sum
}

/// `sum_k k!/x^k`, truncated at the smallest term; for `x >= 40` the
/// truncation error is below 1e-16 relative.
fn ei_asymptotic_sum(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..=60 {
        let next = term * k as f64 / x;
        if next >= term {
            break; // divergent tail reached
        }
        term = next;
        sum += term;
        if term < 1e-17 {
            break;
        }
    }
    sum
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain("ln_gamma requires x > 0"));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // shift into the stable range: ln G(x) = ln G(x+1) - ln x
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Exact binomial coefficient for `k <= n <= 64` (fits in u64).
pub fn binomial(n: u32, k: u32) -> Result<u64, SpecFunError> {
    if n > 64 || k > n {
        return Err(SpecFunError::Overflow { n, k });
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = c * (n as u128 - k as u128 + i) / i;
    }
    Ok(c as u64)
}

/// `n!` as f64, exact for n <= 20 and correctly rounded well past the range
/// the outage sums use (L <= 10).
pub(crate) fn factorial(n: u32) -> f64 {
    let mut f = 1.0;
    for i in 2..=n as u64 {
        f *= i as f64;
    }
    f
}
