//! Performance-analysis toolkit for two-hop underlay cognitive radio
//! networks with a SWIPT energy-harvesting relay.
//!
//! The secondary source S talks to destination D through an L-antenna
//! decode-and-forward relay R that powers its second hop entirely from
//! energy harvested out of the first-phase signal (power-splitting or
//! time-switching), while S and R cap their transmit powers to keep the
//! interference at a primary receiver P below a temperature limit I.
//!
//! - [`model`]: geometry, protocol configuration, unified derived parameters
//! - [`specfun`]: exponential integrals and friends
//! - [`analytic`]: closed-form outage and throughput at four approximation tiers
//! - [`optimize`]: closed-form and numeric throughput-optimal EH parameter
//! - [`montecarlo`]: deterministic parallel simulator used as the oracle
//! - [`cli`]: sweep/optimize/validate orchestration and CSV export

pub mod analytic;
pub mod cli;
pub mod model;
pub mod montecarlo;
pub mod optimize;
pub mod specfun;
