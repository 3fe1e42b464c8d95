//! Sweep orchestration and data export: parse a key=value run
//! configuration, evaluate analytic and/or Monte Carlo estimators over a
//! parameter grid, and emit figure-ready CSV.
//!
//! Config grammar: one `key = value` per line, `#` comments, keys
//! case-insensitive, unknown keys rejected. `i_over_n0_db` (dB) and
//! `i_over_n0` (linear) are both accepted; rendered configs use the linear
//! key so that parse(render(spec)) round-trips bit-exactly.

use crate::analytic::{self, Tier};
use crate::model::{
    db_to_linear, Combining, Mode, ModelError, ProtocolConfig, Scheme, SystemGeometry,
};
use crate::montecarlo;
use crate::optimize::{self, RhoVariant};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {message}")]
    Validation { message: String },
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        ConfigError::Validation {
            message: e.to_string(),
        }
    }
}

fn validation(message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        message: message.into(),
    }
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    IOverN0Db,
    Rho,
    Rs,
    Antennas,
    DSr,
}

impl Axis {
    pub fn key(self) -> &'static str {
        match self {
            Axis::IOverN0Db => "i_over_n0_db",
            Axis::Rho => "rho",
            Axis::Rs => "rs",
            Axis::Antennas => "l",
            Axis::DSr => "d_sr",
        }
    }

    fn parse(s: &str) -> Option<Axis> {
        Some(match s {
            "i_over_n0_db" => Axis::IOverN0Db,
            "rho" => Axis::Rho,
            "rs" => Axis::Rs,
            "l" => Axis::Antennas,
            "d_sr" => Axis::DSr,
            _ => return None,
        })
    }
}

/// Evaluation engine for a sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Analytic(Tier),
    MonteCarlo { trials: u64, seed: u64 },
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Engine::Analytic(tier) => write!(f, "analytic({tier})"),
            Engine::MonteCarlo { trials, seed } => write!(f, "montecarlo({trials},{seed})"),
        }
    }
}

/// A fully validated sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub config: ProtocolConfig,
    pub geometry: SystemGeometry,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub modes: Vec<Mode>,
    pub engines: Vec<Engine>,
    pub combining: Combining,
    /// When sweeping d_sr, keep the relay on the S-D line (d_rd = d_sd - d_sr).
    pub couple_d_rd: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "scheme",
    "rho",
    "eta",
    "l",
    "rs",
    "i_over_n0_db",
    "i_over_n0",
    "epsilon",
    "d_sr",
    "d_rd",
    "d_sp",
    "d_rp",
    "d_sd",
    "axis",
    "values",
    "modes",
    "engines",
    "tier",
    "trials",
    "seed",
    "combining",
    "couple_d_rd",
];

/// Parse a line-oriented `key = value` document into a validated spec.
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            message: format!("expected key=value, got {line:?}"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("unknown key {key:?}"),
            });
        }
        if kv.insert(key.clone(), (line_no, value)).is_some() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key {key:?}"),
            });
        }
    }

    let get = |key: &str| kv.get(key).map(|(_, v)| v.as_str());
    let require = |key: &'static str| {
        get(key).ok_or_else(|| validation(format!("missing required key {key:?}")))
    };
    let parse_f64 = |key: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| validation(format!("{key}: not a number: {v:?}")))
    };

    let scheme = match require("scheme")?.to_ascii_lowercase().as_str() {
        "ps" => Scheme::PowerSplitting,
        "ts" => Scheme::TimeSwitching,
        other => return Err(validation(format!("scheme must be ps or ts, got {other:?}"))),
    };
    let i_over_n0 = match (get("i_over_n0"), get("i_over_n0_db")) {
        (Some(lin), None) => parse_f64("i_over_n0", lin)?,
        (None, Some(db)) => db_to_linear(parse_f64("i_over_n0_db", db)?),
        (Some(_), Some(_)) => {
            return Err(validation("give either i_over_n0 or i_over_n0_db, not both"))
        }
        (None, None) => return Err(validation("missing required key \"i_over_n0_db\"")),
    };
    let config = ProtocolConfig {
        scheme,
        rho: parse_f64("rho", require("rho")?)?,
        eta: parse_f64("eta", require("eta")?)?,
        antennas: require("l")?
            .parse::<u32>()
            .map_err(|_| validation("l: antenna count must be a positive integer"))?,
        target_rate: parse_f64("rs", require("rs")?)?,
        i_over_n0,
    }
    .validated()?;
    let geometry = SystemGeometry {
        d_sr: parse_f64("d_sr", require("d_sr")?)?,
        d_rd: parse_f64("d_rd", require("d_rd")?)?,
        d_sp: parse_f64("d_sp", require("d_sp")?)?,
        d_rp: parse_f64("d_rp", require("d_rp")?)?,
        d_sd: parse_f64("d_sd", require("d_sd")?)?,
        epsilon: parse_f64("epsilon", require("epsilon")?)?,
    }
    .validated()?;

    let axis = Axis::parse(&require("axis")?.to_ascii_lowercase())
        .ok_or_else(|| validation("axis must be one of i_over_n0_db, rho, rs, l, d_sr"))?;
    let values = parse_values(require("values")?)?;
    if values.is_empty() {
        return Err(validation("values: axis needs at least one value"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(validation("values: axis values must be strictly increasing"));
    }
    if axis == Axis::Antennas {
        for &v in &values {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(validation(format!(
                    "values: antenna axis needs positive integers, got {v}"
                )));
            }
        }
    }

    let modes = match get("modes") {
        None => vec![Mode::Cooperative],
        Some(s) => {
            let mut out = Vec::new();
            for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                out.push(match item.to_ascii_lowercase().as_str() {
                    "cooperative" => Mode::Cooperative,
                    "no_direct" => Mode::NoDirect,
                    "incremental" => Mode::Incremental,
                    "direct_only" => Mode::DirectOnly,
                    other => return Err(validation(format!("modes: unknown mode {other:?}"))),
                });
            }
            out
        }
    };
    if modes.is_empty() {
        return Err(validation("modes: at least one mode is required"));
    }

    let tier = match get("tier").map(str::to_ascii_lowercase).as_deref() {
        None | Some("full") => Tier::Full,
        Some("no_rp") => Tier::NoRpConstraint,
        Some("high_margin") => Tier::HighMargin,
        Some(other) => {
            return Err(validation(format!(
                "tier must be full, no_rp or high_margin, got {other:?}"
            )))
        }
    };
    let trials = match get("trials") {
        None => 1_000_000,
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| validation("trials: must be a positive integer"))?,
    };
    let seed = match get("seed") {
        None => 1,
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| validation("seed: must be a non-negative integer"))?,
    };
    let engines = match get("engines") {
        None => vec![Engine::Analytic(tier)],
        Some(s) => {
            let mut out = Vec::new();
            for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                out.push(match item.to_ascii_lowercase().as_str() {
                    "analytic" => Engine::Analytic(tier),
                    "montecarlo" => Engine::MonteCarlo { trials, seed },
                    other => return Err(validation(format!("engines: unknown engine {other:?}"))),
                });
            }
            out
        }
    };
    if engines.is_empty() {
        return Err(validation("engines: at least one engine is required"));
    }

    let combining = match get("combining").map(str::to_ascii_lowercase).as_deref() {
        None | Some("mrc") => Combining::Mrc,
        Some("sc") => Combining::Sc,
        Some(other) => {
            return Err(validation(format!("combining must be mrc or sc, got {other:?}")))
        }
    };
    let couple_d_rd = match get("couple_d_rd").map(str::to_ascii_lowercase).as_deref() {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => {
            return Err(validation(format!(
                "couple_d_rd must be true or false, got {other:?}"
            )))
        }
    };
    if couple_d_rd {
        if axis != Axis::DSr {
            return Err(validation("couple_d_rd applies only to axis = d_sr"));
        }
        if values.last().copied().unwrap_or(0.0) >= geometry.d_sd {
            return Err(validation("couple_d_rd: every d_sr value must stay below d_sd"));
        }
    }

    Ok(SweepSpec {
        config,
        geometry,
        axis,
        values,
        modes,
        engines,
        combining,
        couple_d_rd,
    })
}

/// `start:step:stop` (inclusive) or a comma-separated list.
fn parse_values(s: &str) -> Result<Vec<f64>, ConfigError> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(validation("values: range form is start:step:stop"));
        }
        let start: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| validation("values: bad range start"))?;
        let step: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| validation("values: bad range step"))?;
        let stop: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|_| validation("values: bad range stop"))?;
        if step.is_nan() || step <= 0.0 {
            return Err(validation("values: range step must be positive"));
        }
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let v = start + step * k as f64;
            if v > stop + 1e-9 * step {
                break;
            }
            out.push(v);
            k += 1;
        }
        Ok(out)
    } else {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| validation(format!("values: not a number: {t:?}")))
            })
            .collect()
    }
}

/// Render a spec back into the config grammar (round-trips through
/// [`parse_config`] exactly).
pub fn render_config(spec: &SweepSpec) -> String {
    let tier = spec
        .engines
        .iter()
        .find_map(|e| match e {
            Engine::Analytic(t) => Some(*t),
            _ => None,
        })
        .unwrap_or(Tier::Full);
    let (trials, seed) = spec
        .engines
        .iter()
        .find_map(|e| match e {
            Engine::MonteCarlo { trials, seed } => Some((*trials, *seed)),
            _ => None,
        })
        .unwrap_or((1_000_000, 1));
    let engines = spec
        .engines
        .iter()
        .map(|e| match e {
            Engine::Analytic(_) => "analytic",
            Engine::MonteCarlo { .. } => "montecarlo",
        })
        .collect::<Vec<_>>()
        .join(",");
    let modes = spec
        .modes
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let values = spec
        .values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "scheme = {}\nrho = {}\neta = {}\nl = {}\nrs = {}\ni_over_n0 = {}\n\
         epsilon = {}\nd_sr = {}\nd_rd = {}\nd_sp = {}\nd_rp = {}\nd_sd = {}\n\
         axis = {}\nvalues = {}\nmodes = {}\nengines = {}\ntier = {}\n\
         trials = {}\nseed = {}\ncombining = {}\ncouple_d_rd = {}\n",
        spec.config.scheme,
        spec.config.rho,
        spec.config.eta,
        spec.config.antennas,
        spec.config.target_rate,
        spec.config.i_over_n0,
        spec.geometry.epsilon,
        spec.geometry.d_sr,
        spec.geometry.d_rd,
        spec.geometry.d_sp,
        spec.geometry.d_rp,
        spec.geometry.d_sd,
        spec.axis.key(),
        values,
        modes,
        engines,
        tier,
        trials,
        seed,
        spec.combining,
        spec.couple_d_rd,
    )
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub mode: Mode,
    pub engine: String,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub std_error: Option<f64>,
    pub rho_star: Option<f64>,
    pub status: String,
}

impl ResultRow {
    fn failed(axis_value: f64, mode: Mode, engine: String, status: String) -> Self {
        ResultRow {
            axis_value,
            mode,
            engine,
            p1: None,
            p2: None,
            p: None,
            tau: None,
            std_error: None,
            rho_star: None,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn apply_axis(spec: &SweepSpec, value: f64) -> Result<(ProtocolConfig, SystemGeometry), String> {
    let mut config = spec.config;
    let mut geometry = spec.geometry;
    match spec.axis {
        Axis::IOverN0Db => config.i_over_n0 = db_to_linear(value),
        Axis::Rho => config.rho = value,
        Axis::Rs => config.target_rate = value,
        Axis::Antennas => config.antennas = value as u32,
        Axis::DSr => {
            geometry.d_sr = value;
            if spec.couple_d_rd {
                geometry.d_rd = geometry.d_sd - value;
            }
        }
    }
    let config = config.validated().map_err(|e| e.to_string())?;
    let geometry = geometry.validated().map_err(|e| e.to_string())?;
    Ok((config, geometry))
}

fn analytic_row(
    value: f64,
    config: &ProtocolConfig,
    geometry: &SystemGeometry,
    mode: Mode,
    tier: Tier,
    engine: String,
) -> ResultRow {
    let dp = config.derived();
    let rates = geometry.link_rates();
    let l = config.antennas;
    let rs = config.target_rate;
    let effective_tier = if mode == Mode::NoDirect {
        Tier::NoDirectLink
    } else {
        tier
    };
    let result = (|| -> Result<ResultRow, analytic::AnalyticError> {
        let (p1, p2, p, tau) = match mode {
            Mode::DirectOnly => {
                let q2 = analytic::q2_direct(&dp, &rates);
                (None, None, Some(1.0 - q2), analytic::tau_direct(&dp, &rates, rs))
            }
            Mode::Incremental => {
                let ob = analytic::outage(&dp, &rates, l, effective_tier)?;
                let rep = analytic::tau_incremental(&dp, &rates, l, rs, effective_tier)?;
                (Some(ob.p1), Some(ob.p2), Some(ob.p), rep.tau)
            }
            Mode::Cooperative | Mode::NoDirect => {
                let ob = analytic::outage(&dp, &rates, l, effective_tier)?;
                let rep = analytic::throughput(&dp, &rates, l, rs, effective_tier)?;
                (Some(ob.p1), Some(ob.p2), Some(ob.p), rep.tau)
            }
        };
        Ok(ResultRow {
            axis_value: value,
            mode,
            engine: engine.clone(),
            p1,
            p2,
            p,
            tau: Some(tau),
            std_error: None,
            rho_star: None,
            status: "ok".into(),
        })
    })();
    result.unwrap_or_else(|e| ResultRow::failed(value, mode, engine, e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn montecarlo_row(
    value: f64,
    config: &ProtocolConfig,
    geometry: &SystemGeometry,
    mode: Mode,
    combining: Combining,
    trials: u64,
    seed: u64,
    engine: String,
) -> ResultRow {
    let est = montecarlo::estimate(config, geometry, mode, combining, trials, seed);
    ResultRow {
        axis_value: value,
        mode,
        engine,
        p1: Some(est.p1.value),
        p2: Some(est.p2.value),
        p: Some(est.p.value),
        tau: Some(est.tau.value),
        std_error: Some(est.tau.std_error),
        rho_star: None,
        status: "ok".into(),
    }
}

/// Evaluate one row per (axis value x mode x engine), in deterministic
/// order; per-row failures land in the status column instead of aborting.
pub fn run_sweep(spec: &SweepSpec) -> Vec<ResultRow> {
    let mut jobs = Vec::new();
    for &value in &spec.values {
        for &mode in &spec.modes {
            for engine in &spec.engines {
                jobs.push((value, mode, *engine));
            }
        }
    }
    jobs.par_iter()
        .map(|&(value, mode, engine)| {
            let engine_label = engine.to_string();
            match apply_axis(spec, value) {
                Err(msg) => ResultRow::failed(value, mode, engine_label, msg),
                Ok((config, geometry)) => match engine {
                    Engine::Analytic(tier) => {
                        analytic_row(value, &config, &geometry, mode, tier, engine_label)
                    }
                    Engine::MonteCarlo { trials, seed } => montecarlo_row(
                        value,
                        &config,
                        &geometry,
                        mode,
                        spec.combining,
                        trials,
                        seed,
                        engine_label,
                    ),
                },
            }
        })
        .collect()
}

/// 12 significant digits, scientific; empty for absent values.
fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.11e}"),
        None => String::new(),
    }
}

/// RFC 4180 quoting for status/engine fields.
fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub const SWEEP_HEADER: &str = "axis,mode,engine,p1,p2,p,tau,std_error,status";

/// Render the sweep CSV: a commented metadata block carrying the full
/// config and tool version, the fixed header, then one line per row.
pub fn render_csv(spec: &SweepSpec, rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# ehrelay v{}\n", env!("CARGO_PKG_VERSION")));
    for line in render_config(spec).lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_cell(Some(r.axis_value)),
            r.mode,
            quote(&r.engine),
            fmt_cell(r.p1),
            fmt_cell(r.p2),
            fmt_cell(r.p),
            fmt_cell(r.tau),
            fmt_cell(r.std_error),
            quote(&r.status),
        ));
    }
    out
}

/// One optimizer result line.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeRow {
    pub mode: Mode,
    pub method: String,
    pub rho_star: Option<f64>,
    pub tau: Option<f64>,
    pub status: String,
}

impl OptimizeRow {
    /// Expected non-results (closed form needs L = 1, direct-only has no
    /// rho dependence) are not failures.
    pub fn is_failure(&self) -> bool {
        self.rho_star.is_none()
            && !self.status.starts_with("unavailable")
            && !self.status.starts_with("direct-only")
    }
}

pub const OPTIMIZE_HEADER: &str = "mode,method,rho_star,tau,status";

fn closed_form_variant(scheme: Scheme, mode: Mode) -> Option<RhoVariant> {
    Some(match (scheme, mode) {
        (Scheme::PowerSplitting, Mode::Cooperative) => RhoVariant::Ps,
        (Scheme::TimeSwitching, Mode::Cooperative) => RhoVariant::Ts,
        (Scheme::PowerSplitting, Mode::NoDirect) => RhoVariant::NoDirectPs,
        (Scheme::TimeSwitching, Mode::NoDirect) => RhoVariant::NoDirectTs,
        (Scheme::PowerSplitting, Mode::Incremental) => RhoVariant::IncrementalPs,
        (Scheme::TimeSwitching, Mode::Incremental) => RhoVariant::IncrementalTs,
        (_, Mode::DirectOnly) => return None,
    })
}

/// Analytic throughput as a function of rho, for the numeric optimizer.
fn analytic_tau_of_rho(
    base: &ProtocolConfig,
    geometry: &SystemGeometry,
    mode: Mode,
    tier: Tier,
    rho: f64,
) -> f64 {
    let cfg = ProtocolConfig { rho, ..*base };
    let dp = cfg.derived();
    let rates = geometry.link_rates();
    let effective_tier = if mode == Mode::NoDirect {
        Tier::NoDirectLink
    } else {
        tier
    };
    let res = match mode {
        Mode::Incremental => {
            analytic::tau_incremental(&dp, &rates, cfg.antennas, cfg.target_rate, effective_tier)
        }
        _ => analytic::throughput(&dp, &rates, cfg.antennas, cfg.target_rate, effective_tier),
    };
    res.map(|r| r.tau).unwrap_or(f64::NEG_INFINITY)
}

/// Optimal-rho report for each requested mode: the closed form when L = 1,
/// a golden-section argmax of the analytic tau, and (when a Monte Carlo
/// engine is requested) a golden-section argmax of the simulated tau under
/// common random numbers.
pub fn run_optimize(spec: &SweepSpec) -> Vec<OptimizeRow> {
    let tier = spec
        .engines
        .iter()
        .find_map(|e| match e {
            Engine::Analytic(t) => Some(*t),
            _ => None,
        })
        .unwrap_or(Tier::Full);
    let mc = spec.engines.iter().find_map(|e| match e {
        Engine::MonteCarlo { trials, seed } => Some((*trials, *seed)),
        _ => None,
    });
    let dp = spec.config.derived();
    let rates = spec.geometry.link_rates();
    let mut rows = Vec::new();
    for &mode in &spec.modes {
        if mode == Mode::DirectOnly {
            rows.push(OptimizeRow {
                mode,
                method: "closed_form".into(),
                rho_star: None,
                tau: None,
                status: "direct-only throughput does not depend on rho".into(),
            });
            continue;
        }
        let variant = closed_form_variant(spec.config.scheme, mode).expect("mode checked");
        if spec.config.antennas == 1 {
            match optimize::rho_star_closed_form(
                variant,
                &rates,
                spec.config.eta,
                dp.psi,
                spec.config.target_rate,
                1,
            ) {
                Ok(opt) => {
                    let tau =
                        analytic_tau_of_rho(&spec.config, &spec.geometry, mode, tier, opt.rho_star);
                    let mut status = "ok".to_string();
                    if opt.clamped {
                        status = "clamped to (0.01,0.99); formula outside its regime".into();
                    }
                    rows.push(OptimizeRow {
                        mode,
                        method: "closed_form".into(),
                        rho_star: Some(opt.rho_star),
                        tau: Some(tau),
                        status,
                    });
                }
                Err(e) => rows.push(OptimizeRow {
                    mode,
                    method: "closed_form".into(),
                    rho_star: None,
                    tau: None,
                    status: e.to_string(),
                }),
            }
        } else {
            rows.push(OptimizeRow {
                mode,
                method: "closed_form".into(),
                rho_star: None,
                tau: None,
                status: "unavailable: closed form requires l = 1".into(),
            });
        }
        let opt =
            optimize::rho_star_numeric(|rho| {
                analytic_tau_of_rho(&spec.config, &spec.geometry, mode, tier, rho)
            });
        rows.push(OptimizeRow {
            mode,
            method: "golden_analytic".into(),
            rho_star: Some(opt.rho_star),
            tau: Some(opt.tau_at_star),
            status: if opt.flat { "flat objective".into() } else { "ok".into() },
        });
        if let Some((trials, seed)) = mc {
            let combining = spec.combining;
            let opt = optimize::rho_star_numeric(|rho| {
                let cfg = ProtocolConfig {
                    rho,
                    ..spec.config
                };
                montecarlo::estimate(&cfg, &spec.geometry, mode, combining, trials, seed)
                    .tau
                    .value
            });
            rows.push(OptimizeRow {
                mode,
                method: "golden_montecarlo".into(),
                rho_star: Some(opt.rho_star),
                tau: Some(opt.tau_at_star),
                status: if opt.flat { "flat objective".into() } else { "ok".into() },
            });
        }
    }
    rows
}

pub fn render_optimize_csv(spec: &SweepSpec, rows: &[OptimizeRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# ehrelay v{}\n", env!("CARGO_PKG_VERSION")));
    for line in render_config(spec).lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(OPTIMIZE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.mode,
            quote(&r.method),
            fmt_cell(r.rho_star),
            fmt_cell(r.tau),
            quote(&r.status),
        ));
    }
    out
}

/// One validation check outcome.
#[derive(Debug, Clone)]
pub struct ValidationLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Analytic-vs-Monte-Carlo agreement suite over the reference geometry
/// (distances 1.2/1.8/3/3, epsilon 4, eta 0.7): the cross-engine checks a
/// release should never ship without.
pub fn run_validate(trials: u64, seed: u64) -> Vec<ValidationLine> {
    let mut lines = Vec::new();
    let geometry = SystemGeometry::new(1.2, 1.8, 3.0, 3.0, 3.0, 4.0).expect("reference geometry");
    let rates = geometry.link_rates();
    let base = ProtocolConfig {
        scheme: Scheme::PowerSplitting,
        rho: 0.4,
        eta: 0.7,
        antennas: 1,
        target_rate: 1.0,
        i_over_n0: db_to_linear(6.0),
    };

    // 1. full-tier outage vs MC across L and I/N0. The standard error is
    // Agresti-Coull adjusted (z = 3) so near-zero event counts at the
    // high-I/N0 corner keep a calibrated band instead of collapsing to 0.
    let mut worst: (f64, String) = (0.0, String::new());
    for l in [1u32, 2, 3] {
        for i_db in [0.0, 6.0, 12.0, 18.0] {
            let cfg = ProtocolConfig {
                antennas: l,
                i_over_n0: db_to_linear(i_db),
                ..base
            }
            .validated()
            .unwrap();
            let dp = cfg.derived();
            let an = analytic::outage(&dp, &rates, l, Tier::Full).unwrap().p;
            let mc = montecarlo::estimate(&cfg, &geometry, Mode::Cooperative, Combining::Mrc, trials, seed);
            let n = trials as f64;
            let adj = (mc.p.value * n + 4.5) / (n + 9.0);
            let se = (adj * (1.0 - adj) / (n + 9.0)).sqrt();
            let allow = (0.03 * mc.p.value).max(3.0 * se);
            let ratio = (an - mc.p.value).abs() / allow.max(1e-300);
            if ratio > worst.0 {
                worst = (ratio, format!("L={l} I/N0={i_db}dB: analytic {an:.5} vs mc {:.5}", mc.p.value));
            }
        }
    }
    lines.push(ValidationLine {
        name: "full tier vs monte carlo (max(3%, 3 SE))".into(),
        pass: worst.0 <= 1.0,
        detail: format!("worst margin ratio {:.2} ({})", worst.0, worst.1),
    });

    // 2. tier limit consistency
    let dp = base.derived();
    let far = crate::model::LinkRates { rp: 1e8, ..rates };
    let lim = analytic::p2_full(&dp, &far, 1).unwrap();
    let norp = analytic::p2_no_rp(&dp, &rates, 1).unwrap();
    lines.push(ValidationLine {
        name: "no-rp tier equals the far-primary limit".into(),
        pass: (lim - norp).abs() < 1e-4,
        detail: format!("|{lim:.8} - {norp:.8}| = {:.2e}", (lim - norp).abs()),
    });
    let weak = crate::model::LinkRates { sd: 1e8, ..rates };
    let lim_nd = analytic::p2_full(&dp, &weak, 1).unwrap();
    let nd = analytic::p_no_direct(&dp, &rates, 1).unwrap().p2;
    lines.push(ValidationLine {
        name: "no-direct tier equals the weak-direct limit".into(),
        pass: (lim_nd - nd).abs() < 1e-4,
        detail: format!("|{lim_nd:.8} - {nd:.8}| = {:.2e}", (lim_nd - nd).abs()),
    });

    // 3. event algebra on one run
    let est = montecarlo::estimate(&base, &geometry, Mode::Cooperative, Combining::Mrc, trials, seed);
    let algebra_ok = (est.p1.value + est.p2.value - est.p.value).abs() < 1e-15
        && (est.q1.value - (1.0 - est.p.value - est.p3.value)).abs() < 1e-12;
    lines.push(ValidationLine {
        name: "per-trial event algebra (p = p1+p2, q1 = 1-p-p3)".into(),
        pass: algebra_ok,
        detail: format!(
            "p1+p2-p = {:.1e}, q1-(1-p-p3) = {:.1e}",
            est.p1.value + est.p2.value - est.p.value,
            est.q1.value - (1.0 - est.p.value - est.p3.value)
        ),
    });

    // 4. analytic p3/q2 vs MC within 3 SE
    let q2_an = analytic::q2_direct(&dp, &rates);
    let p3_an = analytic::p3_joint(&dp, &rates, base.antennas);
    let q2_ok = (est.q2.value - q2_an).abs() <= 3.0 * est.q2.std_error.max(1e-9);
    let p3_ok = (est.p3.value - p3_an).abs() <= 3.0 * est.p3.std_error.max(1e-9);
    lines.push(ValidationLine {
        name: "first-phase event probabilities vs closed forms (3 SE)".into(),
        pass: q2_ok && p3_ok,
        detail: format!(
            "q2 {:.5} vs {:.5}; p3 {:.5} vs {:.5}",
            est.q2.value, q2_an, est.p3.value, p3_an
        ),
    });

    // 5. ordering under matched seeds
    let mrc = est;
    let sc = montecarlo::estimate(&base, &geometry, Mode::Cooperative, Combining::Sc, trials, seed);
    let ndm = montecarlo::estimate(&base, &geometry, Mode::NoDirect, Combining::Mrc, trials, seed);
    let inc = montecarlo::estimate(&base, &geometry, Mode::Incremental, Combining::Mrc, trials, seed);
    let order_ok =
        sc.tau.value <= mrc.tau.value && ndm.tau.value <= mrc.tau.value && inc.tau.value >= mrc.tau.value;
    lines.push(ValidationLine {
        name: "throughput ordering (sc <= mrc, nd <= coop <= incremental)".into(),
        pass: order_ok,
        detail: format!(
            "sc {:.4} mrc {:.4} nd {:.4} inc {:.4}",
            sc.tau.value, mrc.tau.value, ndm.tau.value, inc.tau.value
        ),
    });

    // 6. special-function recurrence spot grid
    let mut rec_worst = 0.0f64;
    for n in 1..=12u32 {
        for i in 0..20 {
            let x = 1e-6 * (100.0f64 / 1e-6).powf(i as f64 / 19.0);
            let lhs = n as f64 * crate::specfun::expint_en_scaled(n + 1, x).unwrap()
                + x * crate::specfun::expint_en_scaled(n, x).unwrap();
            rec_worst = rec_worst.max((lhs - 1.0).abs());
        }
    }
    lines.push(ValidationLine {
        name: "exponential-integral recurrence identity".into(),
        pass: rec_worst < 1e-10,
        detail: format!("worst |n e^x E_n+1 + x e^x E_n - 1| = {rec_worst:.2e}"),
    });

    lines
}
