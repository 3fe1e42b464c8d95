//! System geometry, protocol configuration, and the unified PS/TS derived
//! parameters. Everything downstream (closed forms, simulator, CLI) reads
//! its symbols from here.

// !(x > 0) guards reject NaN along with the out-of-range values;
// a partial_cmp refactor would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        field,
        message: message.into(),
    }
}

/// Energy-harvesting scheme at the relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// A fraction rho of the received signal power is harvested.
    PowerSplitting,
    /// A fraction rho of the block duration is reserved for harvesting.
    TimeSwitching,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::PowerSplitting => "ps",
            Scheme::TimeSwitching => "ts",
        })
    }
}

/// Transmission mode evaluated by the analytic formulas and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Two-hop DF relaying, direct and relayed signals combined at D.
    Cooperative,
    /// Two-hop DF relaying with the direct branch removed at the combiner.
    NoDirect,
    /// Incremental relaying: the relay transmits only when the direct
    /// first-phase link fails.
    Incremental,
    /// Direct S-D transmission, no relay.
    DirectOnly,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Cooperative => "cooperative",
            Mode::NoDirect => "no_direct",
            Mode::Incremental => "incremental",
            Mode::DirectOnly => "direct_only",
        })
    }
}

/// Destination combining rule (Monte Carlo only; the closed forms assume MRC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Combining {
    Mrc,
    Sc,
}

impl std::fmt::Display for Combining {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Combining::Mrc => "mrc",
            Combining::Sc => "sc",
        })
    }
}

/// Normalized node distances and the path-loss exponent.
///
/// The rate parameter of each exponential channel gain is `lambda_x = d_x^epsilon`
/// (proportionality constant fixed to 1), so mean gains decay with distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemGeometry {
    pub d_sr: f64,
    pub d_rd: f64,
    pub d_sp: f64,
    pub d_rp: f64,
    pub d_sd: f64,
    pub epsilon: f64,
}

impl SystemGeometry {
    pub fn new(
        d_sr: f64,
        d_rd: f64,
        d_sp: f64,
        d_rp: f64,
        d_sd: f64,
        epsilon: f64,
    ) -> Result<Self, ModelError> {
        Self {
            d_sr,
            d_rd,
            d_sp,
            d_rp,
            d_sd,
            epsilon,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        for (field, v) in [
            ("d_sr", self.d_sr),
            ("d_rd", self.d_rd),
            ("d_sp", self.d_sp),
            ("d_rp", self.d_rp),
            ("d_sd", self.d_sd),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, format!("distance must be positive, got {v}")));
            }
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid(
                "epsilon",
                format!("path-loss exponent must be positive, got {}", self.epsilon),
            ));
        }
        Ok(self)
    }

    /// Exponential rate parameters for the five links.
    pub fn link_rates(&self) -> LinkRates {
        let e = self.epsilon;
        LinkRates {
            sr: self.d_sr.powf(e),
            rd: self.d_rd.powf(e),
            sp: self.d_sp.powf(e),
            rp: self.d_rp.powf(e),
            sd: self.d_sd.powf(e),
        }
    }
}

/// Exponential rate parameters `lambda_x` of the squared channel gains
/// (mean gain = 1/lambda_x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub sr: f64,
    pub rd: f64,
    pub sp: f64,
    pub rp: f64,
    pub sd: f64,
}

/// One operating point of the secondary network.
///
/// Noise is normalized to N0 = 1; `i_over_n0` carries the interference
/// temperature limit on a linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub scheme: Scheme,
    /// EH parameter rho, open interval (0,1); both endpoints degenerate the
    /// protocol (no harvested power / no information power or time).
    pub rho: f64,
    /// EH conversion efficiency eta, (0,1].
    pub eta: f64,
    /// Antenna count L at the relay.
    pub antennas: u32,
    /// Target rate Rs in bits per channel use.
    pub target_rate: f64,
    /// Interference-temperature-to-noise ratio I/N0, linear.
    pub i_over_n0: f64,
}

impl ProtocolConfig {
    pub fn validated(self) -> Result<Self, ModelError> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid("rho", "rho must lie in (0,1)"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", "eta must lie in (0,1]"));
        }
        if self.antennas < 1 {
            return Err(invalid("l", "antenna count must be >= 1"));
        }
        if !(self.target_rate > 0.0) || !self.target_rate.is_finite() {
            return Err(invalid("rs", "target rate must be positive"));
        }
        if !(self.i_over_n0 > 0.0) || !self.i_over_n0.is_finite() {
            return Err(invalid("i_over_n0", "I/N0 must be positive"));
        }
        Ok(self)
    }

    /// Unified derived parameters (xi, beta, zeta) plus the SNR threshold
    /// and its normalized form.
    pub fn derived(&self) -> DerivedParams {
        let (xi, beta, zeta) = match self.scheme {
            Scheme::PowerSplitting => (1.0 - self.rho, self.eta * self.rho, 1.0),
            Scheme::TimeSwitching => (
                1.0,
                2.0 * self.eta * self.rho / (1.0 - self.rho),
                1.0 - self.rho,
            ),
        };
        let gamma_th = (2f64).powf(2.0 * self.target_rate) - 1.0;
        DerivedParams {
            xi,
            beta,
            zeta,
            gamma_th,
            psi: gamma_th / self.i_over_n0,
        }
    }
}

/// Scheme-independent parameterization of both EH protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Fraction of received power left for information decoding (PS: 1-rho, TS: 1).
    pub xi: f64,
    /// Harvested-power gain: relay power = beta * P_s * ||h_sr||^2.
    pub beta: f64,
    /// Fraction of the block carrying information (PS: 1, TS: 1-rho).
    pub zeta: f64,
    /// SNR threshold 2^(2 Rs) - 1.
    pub gamma_th: f64,
    /// Normalized threshold gamma_th / (I/N0).
    pub psi: f64,
}

/// dB -> linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
