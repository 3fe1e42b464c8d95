//! Independent Monte Carlo oracle: draws quasi-static channel realizations,
//! applies the interference-limited power control, energy harvesting,
//! antenna selection, combining, and the per-mode decision logic, and
//! estimates every probability and throughput empirically.
//!
//! Determinism contract: trials are partitioned into fixed-size chunks and
//! every chunk runs its own counter-based ChaCha substream
//! (`set_stream(chunk index)`), so estimates are bit-identical across runs
//! and thread counts for a given (config, seed).

use crate::model::{Combining, DerivedParams, LinkRates, Mode, ProtocolConfig, SystemGeometry};
use arrayvec::ArrayVec;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Antenna cap for the fixed-capacity draw buffers.
pub const MAX_ANTENNAS: usize = 16;

/// Trials per RNG substream; one rayon work item per chunk.
const CHUNK: u64 = 8192;

/// One quasi-static channel realization (squared magnitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// |g_sp|^2, source-to-primary.
    pub g_sp: f64,
    /// ||h_sr||^2, MRC-combined source-to-relay (gamma distributed, shape L).
    pub h_sr_sum: f64,
    /// |h_sd|^2, direct link.
    pub h_sd: f64,
    /// |h_rd^j|^2 per relay antenna.
    pub h_rd: ArrayVec<f64, MAX_ANTENNAS>,
    /// |g_rp^j|^2 per relay antenna.
    pub g_rp: ArrayVec<f64, MAX_ANTENNAS>,
}

/// Outcome of a single trial under a given mode/combining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub relay_decoded: bool,
    /// Post-combining destination SNR (the direct-only mode reports the
    /// first-phase direct SNR).
    pub dest_snr: f64,
    pub outage: bool,
    /// Bits per channel use credited to this block.
    pub bits: f64,
}

/// Point estimate with its trial count and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub trials: u64,
    pub std_error: f64,
}

impl MonteCarloEstimate {
    fn probability(events: u64, trials: u64) -> Self {
        let p = events as f64 / trials as f64;
        MonteCarloEstimate {
            value: p,
            trials,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

/// Named estimates from one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSet {
    pub p1: MonteCarloEstimate,
    pub p2: MonteCarloEstimate,
    pub p: MonteCarloEstimate,
    pub tau: MonteCarloEstimate,
    pub q1: MonteCarloEstimate,
    pub q2: MonteCarloEstimate,
    pub p3: MonteCarloEstimate,
}

#[inline]
fn exp_draw<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Draw one channel realization. Draw order is fixed (g_sp, h_sr x L, h_sd,
/// h_rd x L, g_rp x L) so a seed pins the entire sequence.
pub fn draw<R: Rng>(rates: &LinkRates, antennas: u32, rng: &mut R) -> ChannelDraw {
    let l = antennas as usize;
    assert!((1..=MAX_ANTENNAS).contains(&l), "antenna count out of range");
    let g_sp = exp_draw(rng, rates.sp);
    let mut h_sr_sum = 0.0;
    for _ in 0..l {
        h_sr_sum += exp_draw(rng, rates.sr);
    }
    let h_sd = exp_draw(rng, rates.sd);
    let mut h_rd = ArrayVec::new();
    for _ in 0..l {
        h_rd.push(exp_draw(rng, rates.rd));
    }
    let mut g_rp = ArrayVec::new();
    for _ in 0..l {
        g_rp.push(exp_draw(rng, rates.rp));
    }
    ChannelDraw {
        g_sp,
        h_sr_sum,
        h_sd,
        h_rd,
        g_rp,
    }
}

/// Raw per-trial SNRs before the mode decision.
struct TrialSnrs {
    gamma_r: f64,
    gamma_d1: f64,
    /// Second-hop SNR of the TAS-selected antenna.
    gamma_d2: f64,
}

fn trial_snrs(cd: &ChannelDraw, i_over_n0: f64, dp: &DerivedParams) -> TrialSnrs {
    let p_s = i_over_n0 / cd.g_sp;
    let harvested = dp.beta * p_s * cd.h_sr_sum;
    // TAS: maximize min(harvested, I/|g_rp|^2) |h_rd|^2; ties keep the
    // lowest index (strict comparison).
    let mut gamma_d2 = 0.0;
    for (h, g) in cd.h_rd.iter().zip(&cd.g_rp) {
        let snr = harvested.min(i_over_n0 / g) * h;
        if snr > gamma_d2 {
            gamma_d2 = snr;
        }
    }
    TrialSnrs {
        gamma_r: dp.xi * p_s * cd.h_sr_sum,
        gamma_d1: p_s * cd.h_sd,
        gamma_d2,
    }
}

fn combined(s: &TrialSnrs, mode: Mode, combining: Combining) -> f64 {
    match (mode, combining) {
        (Mode::NoDirect, _) => s.gamma_d2,
        (_, Combining::Mrc) => s.gamma_d2 + s.gamma_d1,
        (_, Combining::Sc) => s.gamma_d2.max(s.gamma_d1),
    }
}

/// Apply power control, harvesting, selection, combining and the mode's
/// decision rule to one channel realization.
pub fn evaluate_trial(
    cd: &ChannelDraw,
    cfg: &ProtocolConfig,
    dp: &DerivedParams,
    mode: Mode,
    combining: Combining,
) -> TrialOutcome {
    let s = trial_snrs(cd, cfg.i_over_n0, dp);
    let gth = dp.gamma_th;
    let relay_decoded = s.gamma_r >= gth;
    let gamma_d = combined(&s, mode, combining);
    let rs = cfg.target_rate;
    match mode {
        Mode::Cooperative | Mode::NoDirect => {
            let ok = relay_decoded && gamma_d >= gth;
            TrialOutcome {
                relay_decoded,
                dest_snr: gamma_d,
                outage: !ok,
                bits: if ok { 0.5 * dp.zeta * rs } else { 0.0 },
            }
        }
        Mode::Incremental => {
            if s.gamma_d1 >= gth {
                TrialOutcome {
                    relay_decoded,
                    dest_snr: s.gamma_d1,
                    outage: false,
                    bits: dp.zeta * rs,
                }
            } else {
                let ok = relay_decoded && gamma_d >= gth;
                TrialOutcome {
                    relay_decoded,
                    dest_snr: gamma_d,
                    outage: !ok,
                    bits: if ok { 0.5 * dp.zeta * rs } else { 0.0 },
                }
            }
        }
        Mode::DirectOnly => {
            let ok = s.gamma_d1 >= gth;
            TrialOutcome {
                relay_decoded,
                dest_snr: s.gamma_d1,
                outage: !ok,
                bits: if ok { rs } else { 0.0 },
            }
        }
    }
}

/// Integer event bookkeeping for one chunk; bits are recovered from counts
/// so reductions stay exact and order-independent.
#[derive(Default, Clone, Copy)]
struct Counts {
    trials: u64,
    relay_fail: u64,       // Gamma_r < gth                        -> p1
    dest_fail: u64,        // Gamma_r >= gth, Gamma_d < gth        -> p2
    both_first_phase: u64, // Gamma_r >= gth, Gamma_d1 >= gth      -> p3
    direct_ok: u64,        // Gamma_d1 >= gth                      -> q2
    relayed_only_ok: u64,  // Gamma_r >= gth, Gamma_d >= gth, Gamma_d1 < gth -> q1
    bits_half: u64,
    bits_full: u64,
    bits_direct: u64,
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        self.trials += other.trials;
        self.relay_fail += other.relay_fail;
        self.dest_fail += other.dest_fail;
        self.both_first_phase += other.both_first_phase;
        self.direct_ok += other.direct_ok;
        self.relayed_only_ok += other.relayed_only_ok;
        self.bits_half += other.bits_half;
        self.bits_full += other.bits_full;
        self.bits_direct += other.bits_direct;
        self
    }
}

#[allow(clippy::too_many_arguments)]
fn run_chunk(
    cfg: &ProtocolConfig,
    dp: &DerivedParams,
    rates: &LinkRates,
    mode: Mode,
    combining: Combining,
    n: u64,
    seed: u64,
    stream: u64,
) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let gth = dp.gamma_th;
    let mut c = Counts {
        trials: n,
        ..Counts::default()
    };
    for _ in 0..n {
        let cd = draw(rates, cfg.antennas, &mut rng);
        let s = trial_snrs(&cd, cfg.i_over_n0, dp);
        let relay_ok = s.gamma_r >= gth;
        let direct_ok = s.gamma_d1 >= gth;
        let gamma_d = combined(&s, mode, combining);
        let dest_ok = gamma_d >= gth;
        if !relay_ok {
            c.relay_fail += 1;
        } else if !dest_ok {
            c.dest_fail += 1;
        }
        if relay_ok && direct_ok {
            c.both_first_phase += 1;
        }
        if direct_ok {
            c.direct_ok += 1;
        }
        if relay_ok && dest_ok && !direct_ok {
            c.relayed_only_ok += 1;
        }
        match mode {
            Mode::Cooperative | Mode::NoDirect => {
                if relay_ok && dest_ok {
                    c.bits_half += 1;
                }
            }
            Mode::Incremental => {
                if direct_ok {
                    c.bits_full += 1;
                } else if relay_ok && dest_ok {
                    c.bits_half += 1;
                }
            }
            Mode::DirectOnly => {
                if direct_ok {
                    c.bits_direct += 1;
                }
            }
        }
    }
    c
}

/// Estimate every named probability and the mode's throughput.
///
/// Deterministic in (config, geometry, mode, combining, trials, seed)
/// regardless of thread count.
pub fn estimate(
    cfg: &ProtocolConfig,
    geometry: &SystemGeometry,
    mode: Mode,
    combining: Combining,
    trials: u64,
    seed: u64,
) -> EstimateSet {
    assert!(trials >= 1_000, "estimate needs at least 1e3 trials");
    let dp = cfg.derived();
    let rates = geometry.link_rates();
    let chunks = trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let n = CHUNK.min(trials - i * CHUNK);
            run_chunk(cfg, &dp, &rates, mode, combining, n, seed, i)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Counts::default(), Counts::merge);

    let n = counts.trials;
    let nf = n as f64;
    let p1 = MonteCarloEstimate::probability(counts.relay_fail, n);
    let p2 = MonteCarloEstimate::probability(counts.dest_fail, n);
    let p = MonteCarloEstimate::probability(counts.relay_fail + counts.dest_fail, n);
    let q1 = MonteCarloEstimate::probability(counts.relayed_only_ok, n);
    let q2 = MonteCarloEstimate::probability(counts.direct_ok, n);
    let p3 = MonteCarloEstimate::probability(counts.both_first_phase, n);

    let rs = cfg.target_rate;
    let (v_half, v_full, v_dir) = (0.5 * dp.zeta * rs, dp.zeta * rs, rs);
    let mean = (v_half * counts.bits_half as f64
        + v_full * counts.bits_full as f64
        + v_dir * counts.bits_direct as f64)
        / nf;
    let mean_sq = (v_half * v_half * counts.bits_half as f64
        + v_full * v_full * counts.bits_full as f64
        + v_dir * v_dir * counts.bits_direct as f64)
        / nf;
    let tau = MonteCarloEstimate {
        value: mean,
        trials: n,
        std_error: ((mean_sq - mean * mean).max(0.0) / nf).sqrt(),
    };
    EstimateSet {
        p1,
        p2,
        p,
        tau,
        q1,
        q2,
        p3,
    }
}
