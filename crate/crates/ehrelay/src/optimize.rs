//! Throughput-optimal EH-parameter solvers: closed forms for the
//! single-antenna relay and a derivative-free maximizer for everything else.
//!
//! The closed forms are stationary points of reduced throughput models
//! (exposed as [`surrogate_throughput`]) obtained from the high-margin
//! outage approximation plus the small-argument expansion
//! `e^x E_1(x) ~ 1/(1+x)`. They are trustworthy in the regime
//! `lambda_sp/psi >> 1` and are clamped (with a flag) outside it.

// !(x > 0) guards reject NaN along with the out-of-range values;
// a partial_cmp refactor would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::model::LinkRates;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("closed-form optimum exists only for a single-antenna relay (got L = {0})")]
    AntennasNotOne(u32),
}

/// Which scheme/mode pair a closed-form optimum refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhoVariant {
    Ps,
    Ts,
    NoDirectPs,
    NoDirectTs,
    IncrementalPs,
    IncrementalTs,
}

impl RhoVariant {
    pub fn is_power_splitting(self) -> bool {
        matches!(
            self,
            RhoVariant::Ps | RhoVariant::NoDirectPs | RhoVariant::IncrementalPs
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimMethod {
    ClosedForm,
    GoldenSection,
    GridRefine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoOptimum {
    pub rho_star: f64,
    /// Objective value at `rho_star`: the surrogate model for closed forms,
    /// the supplied objective for numeric searches.
    pub tau_at_star: f64,
    pub method: OptimMethod,
    /// Set when the raw formula landed outside (0.01, 0.99) and was clamped.
    pub clamped: bool,
    /// Set when the coarse grid saw a numerically flat objective.
    pub flat: bool,
}

/// Clamp window for closed-form results outside (0,1).
const CLAMP_LO: f64 = 0.01;
const CLAMP_HI: f64 = 0.99;

/// Reduced throughput model behind the closed-form optima (bits/channel use).
///
/// PS variants: `0.5 Rs (1 - A/(1+B rho) - C rho/(1-rho))`; TS variants:
/// `0.5 Rs (1-rho)(1 - A/(1+B rho/(1-rho)))`; incremental variants add the
/// direct-success reward. The no-direct variants set A = 1.
pub fn surrogate_throughput(
    variant: RhoVariant,
    rates: &LinkRates,
    eta: f64,
    psi: f64,
    rs: f64,
    rho: f64,
) -> f64 {
    let a = match variant {
        RhoVariant::NoDirectPs | RhoVariant::NoDirectTs => 1.0,
        _ => 1.0 / (1.0 + rates.sp / (rates.sd * psi)),
    };
    let q2 = 1.0 / (1.0 + rates.sd * psi / rates.sp);
    if variant.is_power_splitting() {
        let b = rates.sp / (psi * rates.rd * rates.sr);
        let c = psi * rates.sr * eta / (rates.sp * rates.rd);
        let base = 1.0 - a / (1.0 + b * rho) - c * rho / (1.0 - rho);
        let extra = if variant == RhoVariant::IncrementalPs {
            rs * q2
        } else {
            0.0
        };
        0.5 * rs * base + extra
    } else {
        let b = 2.0 * eta * rates.sp / (psi * rates.rd * rates.sr);
        let u = rho / (1.0 - rho);
        let base = (1.0 - rho) * (1.0 - a / (1.0 + b * u));
        let extra = if variant == RhoVariant::IncrementalTs {
            0.5 * (1.0 - rho) * rs * q2
        } else {
            0.0
        };
        0.5 * rs * base + extra
    }
}

/// Closed-form throughput-optimal rho for a single-antenna relay.
///
/// The PS expressions carry sqrt(eta) in both numerator and denominator;
/// this is the exact stationary point of the PS surrogate (the widely
/// quoted variant without the root is not). TS expressions are stationary
/// points of theirs as printed. Results outside (0.01, 0.99), including
/// out-of-regime square roots of negative arguments, are clamped and
/// flagged.
pub fn rho_star_closed_form(
    variant: RhoVariant,
    rates: &LinkRates,
    eta: f64,
    psi: f64,
    rs: f64,
    antennas: u32,
) -> Result<RhoOptimum, OptimizeError> {
    if antennas != 1 {
        return Err(OptimizeError::AntennasNotOne(antennas));
    }
    let raw = match variant {
        RhoVariant::Ps | RhoVariant::IncrementalPs => ps_stationary(rates, eta, psi, false),
        RhoVariant::NoDirectPs => ps_stationary(rates, eta, psi, true),
        RhoVariant::Ts => ts_stationary(rates, eta, psi),
        RhoVariant::NoDirectTs => {
            let b = 2.0 * eta * rates.sp / (rates.rd * rates.sr * psi);
            // (sqrt(B)-1)/(B-1) in the pole-free form
            1.0 / (b.sqrt() + 1.0)
        }
        RhoVariant::IncrementalTs => in_ts_stationary(rates, eta, psi),
    };
    let rho_star = if raw.is_finite() {
        raw.clamp(CLAMP_LO, CLAMP_HI)
    } else {
        // out-of-regime formula (negative sqrt argument / pole): the
        // harvest-starved limit wants all the resource
        CLAMP_HI
    };
    Ok(RhoOptimum {
        rho_star,
        tau_at_star: surrogate_throughput(variant, rates, eta, psi, rs, rho_star),
        method: OptimMethod::ClosedForm,
        clamped: !raw.is_finite() || raw != rho_star,
        flat: false,
    })
}

fn ps_stationary(rates: &LinkRates, eta: f64, psi: f64, no_direct: bool) -> f64 {
    let s = if no_direct {
        1.0
    } else {
        (1.0 + rates.sp / (rates.sd * psi)).sqrt()
    };
    let se = s * eta.sqrt();
    (1.0 - se * psi * rates.sr / rates.sp) / (1.0 + se / rates.rd)
}

fn ts_stationary(rates: &LinkRates, eta: f64, psi: f64) -> f64 {
    let a = 1.0 / (1.0 + rates.sp / (psi * rates.sd));
    let b = 2.0 * eta * rates.sp / (psi * rates.rd * rates.sr);
    let v = b * (a / (a + b - 1.0)).sqrt();
    (v - 1.0) / (b - 1.0)
}

fn in_ts_stationary(rates: &LinkRates, eta: f64, psi: f64) -> f64 {
    let b = 2.0 * eta * rates.sp / (rates.rd * rates.sr * psi);
    let inner = 2.0 * rates.sd * rates.sp / psi
        / (eta * rates.sd / (rates.rd * rates.sr) + b - 1.0);
    (-1.0 + eta / (rates.rd * rates.sr) * inner.sqrt()) / (b - 1.0)
}

/// Derivative-free maximizer over rho in [0.01, 0.99]: a 33-point coarse
/// grid picks the bracketing cell (robust against small approximation
/// ripples), golden-section refines to an interval of 1e-4.
pub fn rho_star_numeric(objective: impl Fn(f64) -> f64) -> RhoOptimum {
    const GRID: usize = 33;
    let xs: Vec<f64> = (0..GRID)
        .map(|k| CLAMP_LO + (CLAMP_HI - CLAMP_LO) * k as f64 / (GRID - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| objective(x)).collect();
    let (mut best, mut best_y) = (0usize, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &y) in ys.iter().enumerate() {
        if y > best_y {
            best = i;
            best_y = y;
        }
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    if !(max_y - min_y > 1e-9) {
        return RhoOptimum {
            rho_star: xs[best],
            tau_at_star: best_y,
            method: OptimMethod::GridRefine,
            clamped: false,
            flat: true,
        };
    }
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(GRID - 1)];
    let rho_star = golden_max(&objective, lo, hi, 1e-4);
    RhoOptimum {
        rho_star,
        tau_at_star: objective(rho_star),
        method: OptimMethod::GoldenSection,
        clamped: false,
        flat: false,
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
