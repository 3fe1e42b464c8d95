//! Closed-form outage and throughput evaluators.
//!
//! Four outage tiers are provided, from most to least exact:
//! `Full` (double alternating sum over antenna/constraint indices with the
//! conditional-mean interference weight `t`), `NoRpConstraint` (the
//! lambda_rp -> inf limit, accurate whenever the relay's interference
//! constraint rarely binds), `HighMargin` (valid for lambda_sp/psi >> 1 and
//! L >= 2), and `NoDirectLink` (destination hears the relayed branch only).
//!
//! All alternating sums run through a compensated accumulator that tracks
//! the largest intermediate term and rejects results whose cancellation
//! exceeds 1e8 times the final magnitude.

use crate::model::{DerivedParams, LinkRates, Mode};
use crate::specfun::{binomial, expint_ei_scaled, expint_en_scaled, factorial};
use thiserror::Error;

/// Supported antenna count for the Full / NoRpConstraint / NoDirectLink
/// alternating sums; beyond this the binomial cancellation is untrustworthy.
pub const MAX_SUM_ANTENNAS: u32 = 10;

/// Cancellation guard: reject when the largest intermediate term exceeds
/// this multiple of the final sum.
const CANCELLATION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("alternating sum unstable: largest term {max_term:.3e} exceeds {CANCELLATION_LIMIT:.0e} x |result| ({result:.3e})")]
    Stability { max_term: f64, result: f64 },
    #[error("antenna count {0} exceeds the supported range L <= {MAX_SUM_ANTENNAS} for this tier")]
    Antennas(u32),
    #[error("incremental throughput forms disagree: |{a:.12e} - {b:.12e}| > 1e-8")]
    Consistency { a: f64, b: f64 },
}

/// Which approximation produced an outage figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tier {
    Full,
    NoRpConstraint,
    HighMargin,
    NoDirectLink,
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tier::Full => "full",
            Tier::NoRpConstraint => "no_rp",
            Tier::HighMargin => "high_margin",
            Tier::NoDirectLink => "no_direct",
        })
    }
}

/// Outage decomposition p = p1 + p2 (clamped to [0,1]; `p2` is kept raw and
/// may carry a tiny negative approximation residue).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageBreakdown {
    pub p1: f64,
    pub p2: f64,
    pub p: f64,
    pub tier: Tier,
}

impl OutageBreakdown {
    fn new(p1: f64, p2: f64, tier: Tier) -> Self {
        OutageBreakdown {
            p1,
            p2,
            p: (p1 + p2).clamp(0.0, 1.0),
            tier,
        }
    }
}

/// Incremental-relaying event probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementalComponents {
    pub q1: f64,
    pub q2: f64,
    pub p3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    /// Bits per channel use, clamped to [0, Rs].
    pub tau: f64,
    pub mode: Mode,
    /// Present for the incremental decomposition.
    pub components: Option<IncrementalComponents>,
}

/// Kahan accumulator that remembers its largest term for the cancellation guard.
struct GuardedSum {
    sum: f64,
    comp: f64,
    max_term: f64,
}

impl GuardedSum {
    fn new() -> Self {
        GuardedSum {
            sum: 0.0,
            comp: 0.0,
            max_term: 0.0,
        }
    }

    fn add(&mut self, term: f64) {
        self.max_term = self.max_term.max(term.abs());
        let y = term - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn finish(self) -> Result<f64, AnalyticError> {
        // Only cancellations that can poison a probability trip the guard:
        // terms below ~1e6 leave at most ~1e-10 of absolute rounding debris,
        // which the [0,1] clamp and the documented tolerances absorb. This
        // keeps exact-cancellation limits (p2 -> 0 at vanishing threshold or
        // harvest) representable while still rejecting the large-L binomial
        // blowup.
        if self.max_term > 1e6 && self.max_term > CANCELLATION_LIMIT * self.sum.abs() {
            return Err(AnalyticError::Stability {
                max_term: self.max_term,
                result: self.sum,
            });
        }
        Ok(self.sum)
    }
}

fn binom_f(n: u32, k: u32) -> f64 {
    binomial(n, k).expect("antenna count validated against binomial range") as f64
}

/// Relay-decoding outage Pr[Gamma_r < gamma_th] = (lambda_sp xi/(lambda_sr psi) + 1)^-L.
pub fn p1_exact(dp: &DerivedParams, rates: &LinkRates, antennas: u32) -> f64 {
    (rates.sp * dp.xi / (rates.sr * dp.psi) + 1.0).powi(-(antennas as i32))
}

/// Mean received direct-link power at D conditioned on the first-phase
/// events, E[P_s |h_sd|^2 | C1]; feeds the interference weight `t`.
pub fn mean_interference_term(dp: &DerivedParams, rates: &LinkRates) -> f64 {
    let i_over_n0 = dp.gamma_th / dp.psi;
    let x = dp.psi * rates.sd / rates.sp;
    i_over_n0 * (rates.sp / rates.sd) * (x.ln_1p() + x / (1.0 + x))
}

/// Interference weight t in [0,1): the normalized conditional-mean shortfall
/// gamma_th N0 - E[P_s|h_sd|^2 | C1], scaled by lambda_rd/(I lambda_rp).
pub fn compute_t(dp: &DerivedParams, rates: &LinkRates) -> f64 {
    let x = dp.psi * rates.sd / rates.sp;
    let inner = dp.psi - (rates.sp / rates.sd) * (x.ln_1p() + x / (1.0 + x));
    let t = 1.0 - 1.0 / (1.0 + (rates.rd / rates.rp) * inner);
    t.clamp(0.0, 1.0 - f64::EPSILON)
}

/// No-direct-link variant of `t` (the conditional mean vanishes).
pub fn compute_t_nd(dp: &DerivedParams, rates: &LinkRates) -> f64 {
    let t = 1.0 - 1.0 / (1.0 + rates.rd * dp.psi / rates.rp);
    t.clamp(0.0, 1.0 - f64::EPSILON)
}

/// Compact variables shared by the p2 sums.
struct P2Vars {
    a: f64,  // lambda_rp / beta
    b: f64,  // psi lambda_rd / beta
    c: f64,  // psi lambda_sd
    d: f64,  // lambda_rd / (beta lambda_sd)
    g: f64,  // xi / psi
    s1: f64, // g (c + lambda_sp) + lambda_sr
    s2: f64, // g lambda_sp + lambda_sr
}

impl P2Vars {
    fn new(dp: &DerivedParams, rates: &LinkRates) -> Self {
        let a = rates.rp / dp.beta;
        let b = dp.psi * rates.rd / dp.beta;
        let c = dp.psi * rates.sd;
        let d = rates.rd / (dp.beta * rates.sd);
        let g = dp.xi / dp.psi;
        P2Vars {
            a,
            b,
            c,
            d,
            g,
            s1: g * (c + rates.sp) + rates.sr,
            s2: g * rates.sp + rates.sr,
        }
    }
}

fn en_s(l: u32, x: f64) -> f64 {
    expint_en_scaled(l, x).expect("positive argument by construction")
}

fn ei_s(x: f64) -> f64 {
    expint_ei_scaled(x).expect("positive argument by construction")
}

/// Inner-sum piece carrying the Gamma(L-1-k) factors and the Ei difference
/// (vanishes for i = 0).
fn term_interference_free(v: &P2Vars, rates: &LinkRates, l: u32, i: u32, j: u32, denom: f64) -> f64 {
    if i == 0 {
        return 0.0;
    }
    let (ifl, jfl) = (i as f64, j as f64);
    let di = v.d * ifl;
    let mut inner = 0.0;
    for k in 0..l.saturating_sub(1) {
        inner += di.powi(k as i32)
            * factorial(l - 2 - k)
            * ((-v.a * v.g * jfl).exp() * v.s1.powi(k as i32 - l as i32 + 1)
                - (-v.g * (v.a * jfl + v.b * ifl)).exp() * v.s2.powi(k as i32 - l as i32 + 1));
    }
    // Ei difference in scaled form: the s1 argument exceeds the s2 argument
    // by exactly g*b*i, which cancels the leading exponential.
    let ei_part = di.powi(l as i32 - 1)
        * (-v.g * v.a * jfl).exp()
        * ((-v.g * v.b * ifl).exp() * ei_s(di * v.s2) - ei_s(di * v.s1));
    rates.sr.powi(l as i32) * rates.sp * di * di / (factorial(l - 1) * denom) * (inner + ei_part)
}

/// Piece from the relay-power constraint branch (vanishes for j = 0;
/// the antenna index enters only through the shared denominator).
fn term_constrained(v: &P2Vars, rates: &LinkRates, l: u32, j: u32, denom: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    let jfl = j as f64;
    let a2 = v.a * jfl / (v.c + rates.sp);
    // scaled E_L at the shifted argument carries the bridge
    // e^{a2 lambda_sr - a2 s1} = e^{-g a j}
    let bracket = en_s(l, a2 * rates.sr)
        - (rates.sr / v.s1).powi(l as i32 - 1) * (-v.g * v.a * jfl).exp() * en_s(l, a2 * v.s1);
    rates.sp * rates.sr * (v.a * jfl).powi(2) / (denom * (v.c + rates.sp).powi(2)) * bracket
}

/// Piece from the unconstrained relay branch (vanishes for i = j = 0).
fn term_unconstrained(v: &P2Vars, rates: &LinkRates, l: u32, i: u32, j: u32, denom: f64) -> f64 {
    if i == 0 && j == 0 {
        return 0.0;
    }
    let ab = v.a * j as f64 + v.b * i as f64;
    let a1 = ab / rates.sp;
    // bridge e^{a1 lambda_sr - a1 s2} = e^{-g (a j + b i)}
    let bracket = en_s(l, a1 * rates.sr)
        - (rates.sr / v.s2).powi(l as i32 - 1) * (-v.g * ab).exp() * en_s(l, a1 * v.s2);
    -(rates.sr * ab * ab / (rates.sp * denom)) * bracket
}

/// MRC destination-outage term p2 = Pr[Gamma_d < gamma_th, Gamma_r >= gamma_th],
/// conditional-mean approximation with the full relay interference constraint.
pub fn p2_full(dp: &DerivedParams, rates: &LinkRates, antennas: u32) -> Result<f64, AnalyticError> {
    let l = antennas;
    if l > MAX_SUM_ANTENNAS {
        return Err(AnalyticError::Antennas(l));
    }
    let v = P2Vars::new(dp, rates);
    let t = compute_t(dp, rates);
    let mut sum = GuardedSum::new();
    for i in 0..=l {
        for j in 0..=i {
            let (ifl, jfl) = (i as f64, j as f64);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let weight = sign * t.powi(j as i32) * binom_f(l, i) * binom_f(i, j);
            let denom = v.a * jfl + (v.b + v.d * rates.sp) * ifl;
            let mut bracket = v.c / (v.c + rates.sp);
            bracket += rates.sp / (v.c + rates.sp)
                * (-v.a * v.g * jfl).exp()
                * (rates.sr / v.s1).powi(l as i32);
            bracket -= (rates.sr / v.s2).powi(l as i32) * (-v.g * (v.a * jfl + v.b * ifl)).exp();
            if i > 0 || j > 0 {
                bracket += term_unconstrained(&v, rates, l, i, j, denom);
                bracket += term_constrained(&v, rates, l, j, denom);
                bracket += term_interference_free(&v, rates, l, i, j, denom);
            }
            sum.add(weight * bracket);
        }
    }
    sum.finish()
}

/// p2 with the relay interference constraint dropped (lambda_rp -> inf):
/// the single-sum form, accurate when lambda_rp >> lambda_rd.
pub fn p2_no_rp(dp: &DerivedParams, rates: &LinkRates, antennas: u32) -> Result<f64, AnalyticError> {
    let l = antennas;
    if l > MAX_SUM_ANTENNAS {
        return Err(AnalyticError::Antennas(l));
    }
    let v = P2Vars::new(dp, rates);
    let mut sum = GuardedSum::new();
    // i = 0 contribution: only the unconstrained-branch exponential survives.
    sum.add(-(rates.sr / v.s2).powi(l as i32));
    for i in 1..=l {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let denom = (v.b + v.d * rates.sp) * i as f64;
        let mut bracket = -(rates.sr / v.s2).powi(l as i32) * (-v.g * v.b * i as f64).exp();
        bracket += term_unconstrained(&v, rates, l, i, 0, denom);
        bracket += term_interference_free(&v, rates, l, i, 0, denom);
        sum.add(sign * binom_f(l, i) * bracket);
    }
    sum.finish()
}

/// High-margin overall outage (lambda_sp/psi >> 1, intended for L >= 2):
/// p ~ T11 T12 + T2.
pub fn p_high_margin(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
) -> Result<OutageBreakdown, AnalyticError> {
    let l = antennas;
    if l > 64 {
        return Err(AnalyticError::Antennas(l));
    }
    let t11 = 1.0 / (1.0 + rates.sp / (rates.sd * dp.psi));
    let t12 = 1.0 - alternating_e_sum(dp, rates, l)?;
    let p1 = p1_exact(dp, rates, l);
    let t2 = (1.0 - (1.0 - (-rates.rd * dp.xi / dp.beta).exp()).powi(l as i32)) * p1;
    // Report the relay term through p1 and the rest through p2 so the
    // decomposition still sums to the tier's p.
    let p = t11 * t12 + t2;
    Ok(OutageBreakdown {
        p1,
        p2: p - p1,
        p: p.clamp(0.0, 1.0),
        tier: Tier::HighMargin,
    })
}

/// sum_{i=1}^{L} (-1)^{i+1} C(L,i) L e^{x_i} E_{L+1}(x_i) with
/// x_i = psi i lambda_rd lambda_sr / (beta lambda_sp); approaches 1 from
/// below as L grows.
pub fn alternating_e_sum(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
) -> Result<f64, AnalyticError> {
    let x1 = dp.psi * rates.rd * rates.sr / (dp.beta * rates.sp);
    let mut sum = GuardedSum::new();
    for i in 1..=antennas {
        let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(
            sign * binom_f(antennas, i)
                * antennas as f64
                * en_s(antennas + 1, x1 * i as f64),
        );
    }
    sum.finish()
}

/// Outage with the direct branch removed at the combiner (lambda_sd -> inf
/// limit of the Full tier, with the exact no-direct interference weight).
pub fn p_no_direct(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
) -> Result<OutageBreakdown, AnalyticError> {
    let l = antennas;
    if l > MAX_SUM_ANTENNAS {
        return Err(AnalyticError::Antennas(l));
    }
    let a = rates.rp / dp.beta;
    let b = dp.psi * rates.rd / dp.beta;
    let g = dp.xi / dp.psi;
    let s2 = g * rates.sp + rates.sr;
    let t = compute_t_nd(dp, rates);
    let mut sum = GuardedSum::new();
    for i in 0..=l {
        for j in 0..=i {
            let ab = a * j as f64 + b * i as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let weight = sign * t.powi(j as i32) * binom_f(l, i) * binom_f(i, j);
            let mut bracket = 1.0 - (rates.sr / s2).powi(l as i32) * (-g * ab).exp();
            if i > 0 || j > 0 {
                let a1 = ab / rates.sp;
                bracket -= rates.sr * ab / rates.sp
                    * (en_s(l, a1 * rates.sr)
                        - (rates.sr / s2).powi(l as i32 - 1)
                            * (-g * ab).exp()
                            * en_s(l, a1 * s2));
            }
            sum.add(weight * bracket);
        }
    }
    let p1 = p1_exact(dp, rates, l);
    Ok(OutageBreakdown::new(p1, sum.finish()?, Tier::NoDirectLink))
}

/// Outage at the requested tier.
pub fn outage(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
    tier: Tier,
) -> Result<OutageBreakdown, AnalyticError> {
    match tier {
        Tier::Full => {
            let p1 = p1_exact(dp, rates, antennas);
            Ok(OutageBreakdown::new(p1, p2_full(dp, rates, antennas)?, Tier::Full))
        }
        Tier::NoRpConstraint => {
            let p1 = p1_exact(dp, rates, antennas);
            Ok(OutageBreakdown::new(
                p1,
                p2_no_rp(dp, rates, antennas)?,
                Tier::NoRpConstraint,
            ))
        }
        Tier::HighMargin => p_high_margin(dp, rates, antennas),
        Tier::NoDirectLink => p_no_direct(dp, rates, antennas),
    }
}

/// Warn when a tier is evaluated outside the regime its derivation assumes.
pub fn regime_warning(dp: &DerivedParams, rates: &LinkRates, tier: Tier) -> Option<String> {
    match tier {
        Tier::HighMargin if rates.sp / dp.psi < 10.0 => Some(format!(
            "high-margin tier outside its regime: lambda_sp/psi = {:.2} < 10",
            rates.sp / dp.psi
        )),
        Tier::NoRpConstraint if rates.rp / rates.rd < 10.0 => Some(format!(
            "no-rp tier outside its regime: lambda_rp/lambda_rd = {:.2} < 10",
            rates.rp / rates.rd
        )),
        _ => None,
    }
}

/// Half-duplex DF throughput tau = 0.5 Rs zeta (1 - p) at the given tier.
pub fn throughput(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
    rs: f64,
    tier: Tier,
) -> Result<ThroughputReport, AnalyticError> {
    let ob = outage(dp, rates, antennas, tier)?;
    let mode = if tier == Tier::NoDirectLink {
        Mode::NoDirect
    } else {
        Mode::Cooperative
    };
    Ok(ThroughputReport {
        tau: (0.5 * rs * dp.zeta * (1.0 - ob.p)).clamp(0.0, rs),
        mode,
        components: None,
    })
}

/// Pr[first-phase direct link succeeds] (CDF of a ratio of exponentials).
pub fn q2_direct(dp: &DerivedParams, rates: &LinkRates) -> f64 {
    1.0 / (1.0 + rates.sd * dp.psi / rates.sp)
}

/// Pr[direct link and relay both decode in the first phase].
pub fn p3_joint(dp: &DerivedParams, rates: &LinkRates, antennas: u32) -> f64 {
    let inner = (rates.sd * dp.xi / rates.sr + rates.sp * dp.xi / (rates.sr * dp.psi) + 1.0)
        .powi(-(antennas as i32));
    q2_direct(dp, rates) * (1.0 - inner)
}

/// Throughput of the relay-less direct link, tau_dir = Rs q2.
pub fn tau_direct(dp: &DerivedParams, rates: &LinkRates, rs: f64) -> f64 {
    rs * q2_direct(dp, rates)
}

/// Incremental-relaying throughput. Computed via the event decomposition
/// zeta (0.5 Rs q1 + Rs q2) and cross-checked against the equivalent
/// correction form tau + 0.5 zeta Rs q2 (1 + D^-L).
pub fn tau_incremental(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
    rs: f64,
    tier: Tier,
) -> Result<ThroughputReport, AnalyticError> {
    let ob = outage(dp, rates, antennas, tier)?;
    let q2 = q2_direct(dp, rates);
    let p3 = p3_joint(dp, rates, antennas);
    let q1_raw = 1.0 - ob.p - p3;
    let form_a = dp.zeta * (0.5 * rs * q1_raw + rs * q2);
    let d_term = 1.0 + rates.sd * dp.xi / rates.sr + rates.sp * dp.xi / (rates.sr * dp.psi);
    let tau_coop = 0.5 * rs * dp.zeta * (1.0 - ob.p);
    let form_b = tau_coop + 0.5 * dp.zeta * rs * q2 * (1.0 + d_term.powi(-(antennas as i32)));
    if (form_a - form_b).abs() > 1e-8 * rs.max(1.0) {
        return Err(AnalyticError::Consistency {
            a: form_a,
            b: form_b,
        });
    }
    let q1 = q1_raw.max(0.0);
    Ok(ThroughputReport {
        tau: (dp.zeta * (0.5 * rs * q1 + rs * q2)).clamp(0.0, rs),
        mode: Mode::Incremental,
        components: Some(IncrementalComponents { q1, q2, p3 }),
    })
}

/// Throughput gain from combining the direct branch, tau - tau_nd in the
/// high-margin regime; non-negative and vanishing as L grows.
pub fn tau_gap_direct(
    dp: &DerivedParams,
    rates: &LinkRates,
    antennas: u32,
    rs: f64,
) -> Result<f64, AnalyticError> {
    let t12 = 1.0 - alternating_e_sum(dp, rates, antennas)?;
    let r = rates.sp / (rates.sd * dp.psi);
    Ok((0.5 * rs * dp.zeta * t12 * r / (1.0 + r)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{db_to_linear, ProtocolConfig, Scheme, SystemGeometry};
    use approx::assert_relative_eq;

    fn reference_rates() -> LinkRates {
        SystemGeometry::new(1.2, 1.8, 3.0, 3.0, 3.0, 4.0)
            .unwrap()
            .link_rates()
    }

    fn ps_config(rho: f64, rs: f64, i_db: f64, antennas: u32) -> ProtocolConfig {
        ProtocolConfig {
            scheme: Scheme::PowerSplitting,
            rho,
            eta: 0.7,
            antennas,
            target_rate: rs,
            i_over_n0: db_to_linear(i_db),
        }
    }

    #[test]
    fn p1_direct_substitution() {
        // L=1 with lambda_sp xi/(lambda_sr psi) = 1 gives exactly 0.5
        let dp = DerivedParams {
            xi: 1.0,
            beta: 0.5,
            zeta: 1.0,
            gamma_th: 3.0,
            psi: 1.0,
        };
        let rates = LinkRates {
            sr: 2.0,
            rd: 1.0,
            sp: 2.0,
            rp: 1.0,
            sd: 1.0,
        };
        assert_relative_eq!(p1_exact(&dp, &rates, 1), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn p1_saturates_when_no_information_power() {
        let rates = reference_rates();
        let cfg = ps_config(1.0 - 1e-12, 1.0, 6.0, 2);
        let dp = cfg.derived();
        assert!(p1_exact(&dp, &rates, 2) > 1.0 - 1e-9);
    }

    #[test]
    fn t_limits() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 2).derived();
        // lambda_rp -> inf drives t -> 0
        let far_primary = LinkRates {
            rp: 1e12,
            ..rates
        };
        assert!(compute_t(&dp, &far_primary) < 1e-10);
        assert!(compute_t_nd(&dp, &far_primary) < 1e-10);
        // gamma_th -> 0 drives t -> 0
        let dp0 = ps_config(0.4, 1e-9, 6.0, 2).derived();
        assert!(compute_t(&dp0, &rates) < 1e-8);
        assert!((0.0..1.0).contains(&compute_t(&dp, &rates)));
    }

    #[test]
    fn t_matches_independent_transcription() {
        // Second implementation straight from the printed expression shape
        // (psi-normalized), kept deliberately naive.
        let rates = reference_rates();
        for rs in [0.5, 1.0, 3.0] {
            let dp = ps_config(0.4, rs, 6.0, 2).derived();
            let thr = dp.psi;
            let naive = 1.0
                - 1.0
                    / (1.0
                        + rates.rd / rates.rp
                            * (thr
                                - rates.sp / rates.sd
                                    * ((thr * rates.sd / rates.sp + 1.0).ln()
                                        + thr * rates.sd / (thr * rates.sd + rates.sp))));
            assert_relative_eq!(
                compute_t(&dp, &rates),
                naive.clamp(0.0, 1.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mean_interference_term_positive_and_below_threshold_power() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 2).derived();
        let m = mean_interference_term(&dp, &rates);
        assert!(m > 0.0);
    }

    #[test]
    fn p2_vanishes_at_zero_threshold() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1e-9, 6.0, 2).derived();
        assert!(p2_full(&dp, &rates, 2).unwrap().abs() < 1e-6);
    }

    #[test]
    fn p2_no_rp_is_the_far_primary_limit() {
        let rates = reference_rates();
        for l in [1u32, 2, 3] {
            for rho in [0.2, 0.4, 0.7] {
                let dp = ps_config(rho, 1.0, 6.0, l).derived();
                let far = LinkRates {
                    rp: 1e8,
                    ..rates
                };
                let lim = p2_full(&dp, &far, l).unwrap();
                let direct = p2_no_rp(&dp, &rates, l).unwrap();
                assert!(
                    (lim - direct).abs() < 1e-4,
                    "L={l} rho={rho}: {lim} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn p2_no_rp_vanishes_as_rho_tends_to_one() {
        let rates = reference_rates();
        let dp = ps_config(1.0 - 1e-9, 1.0, 6.0, 2).derived();
        assert!(p2_no_rp(&dp, &rates, 2).unwrap().abs() < 1e-6);
    }

    #[test]
    fn no_direct_is_the_weak_direct_limit() {
        let rates = reference_rates();
        for l in [1u32, 3] {
            let dp = ps_config(0.4, 1.0, 6.0, l).derived();
            let weak = LinkRates {
                sd: 1e8,
                ..rates
            };
            let lim = p2_full(&dp, &weak, l).unwrap();
            let direct = p_no_direct(&dp, &rates, l).unwrap().p2;
            assert!(
                (lim - direct).abs() < 1e-6,
                "L={l}: {lim} vs {direct}"
            );
        }
    }

    #[test]
    fn removing_the_direct_branch_worsens_outage() {
        let rates = reference_rates();
        for l in [1u32, 2, 3] {
            let dp = ps_config(0.4, 1.0, 6.0, l).derived();
            let full = outage(&dp, &rates, l, Tier::Full).unwrap().p;
            let nd = p_no_direct(&dp, &rates, l).unwrap().p;
            assert!(nd >= full, "L={l}: nd {nd} < full {full}");
        }
    }

    #[test]
    fn high_margin_alternating_sum_saturates() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 12.0, 8).derived();
        let s = alternating_e_sum(&dp, &rates, 8).unwrap();
        assert!(s > 0.97 && s <= 1.0 + 1e-12, "sum={s}");
        // so T12 -> 0 for large L
        let hm = p_high_margin(&dp, &rates, 8).unwrap();
        assert!(hm.p < 0.05);
    }

    #[test]
    fn high_margin_vanishes_with_infinite_harvest() {
        let rates = reference_rates();
        let mut dp = ps_config(0.4, 1.0, 12.0, 2).derived();
        dp.beta = 1e9;
        let hm = p_high_margin(&dp, &rates, 2).unwrap();
        assert!(hm.p < 1e-3, "p={}", hm.p);
    }

    #[test]
    fn outage_monotone_in_interference_budget_and_antennas() {
        let rates = reference_rates();
        let mut prev_by_l: Option<Vec<f64>> = None;
        for l in 1..=3u32 {
            let mut curve = Vec::new();
            for i_db in (0..=20).step_by(2) {
                let dp = ps_config(0.4, 1.0, i_db as f64, l).derived();
                curve.push(outage(&dp, &rates, l, Tier::Full).unwrap().p);
            }
            for w in curve.windows(2) {
                assert!(w[1] < w[0], "outage must fall with I/N0");
            }
            if let Some(prev) = &prev_by_l {
                for (hi, lo) in prev.iter().zip(&curve) {
                    assert!(lo < hi, "outage must fall with L");
                }
            }
            prev_by_l = Some(curve);
        }
    }

    #[test]
    fn throughput_edges() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 2).derived();
        let rep = throughput(&dp, &rates, 2, 1.0, Tier::Full).unwrap();
        assert!(rep.tau > 0.0 && rep.tau <= 0.5);
        // p = 1 => tau = 0: force it with a huge threshold
        let dp_hard = ps_config(0.4, 30.0, 6.0, 2).derived();
        let rep0 = throughput(&dp_hard, &rates, 2, 30.0, Tier::Full).unwrap();
        assert!(rep0.tau < 1e-6);
    }

    #[test]
    fn ps_ts_zeta_ratio() {
        let rho = 0.35;
        let ps = ps_config(rho, 1.0, 6.0, 2);
        let ts = ProtocolConfig {
            scheme: Scheme::TimeSwitching,
            ..ps
        };
        // identical outage assumed: compare the zeta scaling directly
        let p = 0.3;
        let tau_ps = 0.5 * 1.0 * ps.derived().zeta * (1.0 - p);
        let tau_ts = 0.5 * 1.0 * ts.derived().zeta * (1.0 - p);
        assert_relative_eq!(tau_ps / tau_ts, 1.0 / (1.0 - rho), max_relative = 1e-12);
    }

    #[test]
    fn q2_and_p3_limits() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 2).derived();
        // L -> large: p3 -> q2
        let q2 = q2_direct(&dp, &rates);
        let p3_large = p3_joint(&dp, &rates, 40);
        assert_relative_eq!(p3_large, q2, max_relative = 1e-6);
        // psi -> 0: q2 -> 1
        let dp0 = ps_config(0.4, 1e-9, 6.0, 2).derived();
        assert!(q2_direct(&dp0, &rates) > 1.0 - 1e-9);
        assert_relative_eq!(tau_direct(&dp0, &rates, 1.0), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn incremental_dominates_cooperative() {
        let rates = reference_rates();
        for l in [1u32, 2, 4, 8] {
            let tier = if l <= MAX_SUM_ANTENNAS { Tier::Full } else { Tier::HighMargin };
            let dp = ps_config(0.4, 1.0, 6.0, l).derived();
            let coop = throughput(&dp, &rates, l, 1.0, tier).unwrap().tau;
            let inc = tau_incremental(&dp, &rates, l, 1.0, tier).unwrap().tau;
            assert!(inc >= coop, "L={l}");
        }
    }

    #[test]
    fn incremental_gap_saturates_to_half_direct() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 8).derived();
        let coop = throughput(&dp, &rates, 8, 1.0, Tier::Full).unwrap().tau;
        let inc = tau_incremental(&dp, &rates, 8, 1.0, Tier::Full).unwrap().tau;
        let limit = 0.5 * dp.zeta * tau_direct(&dp, &rates, 1.0);
        assert!(
            ((inc - coop) - limit).abs() <= 0.02 * limit,
            "gap {} vs limit {limit}",
            inc - coop
        );
    }

    #[test]
    fn direct_gap_shrinks_with_antennas_and_strong_direct() {
        let rates = reference_rates();
        let mut prev = f64::INFINITY;
        for l in [1u32, 2, 4, 8] {
            let dp = ps_config(0.4, 1.0, 6.0, l).derived();
            let gap = tau_gap_direct(&dp, &rates, l, 1.0).unwrap();
            assert!(gap >= 0.0 && gap < prev, "L={l}: {gap} !< {prev}");
            prev = gap;
        }
        let weak_direct = LinkRates {
            sd: 1e9,
            ..rates
        };
        let dp = ps_config(0.4, 1.0, 6.0, 2).derived();
        assert!(tau_gap_direct(&dp, &weak_direct, 2, 1.0).unwrap() < 1e-6);
    }

    #[test]
    fn gap_matches_tier_difference_loosely() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 2).derived();
        let gap = tau_gap_direct(&dp, &rates, 2, 1.0).unwrap();
        let full = throughput(&dp, &rates, 2, 1.0, Tier::Full).unwrap().tau;
        let nd = throughput(&dp, &rates, 2, 1.0, Tier::NoDirectLink).unwrap().tau;
        let diff = full - nd;
        assert!(
            (gap - diff).abs() <= 0.10 * diff.abs().max(1e-6),
            "gap {gap} vs tier diff {diff}"
        );
    }

    #[test]
    fn antenna_guard() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 1.0, 6.0, 11).derived();
        assert!(matches!(
            p2_full(&dp, &rates, 11),
            Err(AnalyticError::Antennas(11))
        ));
    }

    #[test]
    fn regime_warnings_fire_only_outside_regime() {
        let rates = reference_rates();
        let dp = ps_config(0.4, 3.0, 6.0, 1).derived(); // lambda_sp/psi ~ 5
        assert!(regime_warning(&dp, &rates, Tier::HighMargin).is_some());
        let dp_ok = ps_config(0.4, 1.0, 12.0, 1).derived();
        assert!(regime_warning(&dp_ok, &rates, Tier::HighMargin).is_none());
        let near_primary = LinkRates { rp: 2.0, ..rates };
        assert!(regime_warning(&dp_ok, &near_primary, Tier::NoRpConstraint).is_some());
    }
}
