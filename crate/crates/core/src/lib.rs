//! Discovery, ranking and evaluation of time series chains.
//!
//! A time series chain is a sequence of subsequences that evolve gradually
//! over time, each one the nearest earlier neighbor of the next. This crate
//! computes the nearest-neighbor index ([`profiles`]), extracts chains under
//! three definitions ([`chains`]), ranks them ([`ranking`]), and provides a
//! seeded synthetic benchmark ([`benchgen`]) with an F1 harness
//! ([`evaluation`]). [`oracle`] holds slow definition-literal reference
//! implementations used for verification.
//!
//! Window indices are 0-based everywhere.

pub mod benchgen;
pub mod chains;
pub mod error;
pub mod evaluation;
pub mod numfmt;
pub mod oracle;
pub mod profiles;
pub mod ranking;
pub mod series;

pub use chains::{Chain, ChainSet, ChainTag, CriticalSet, DiscoveryParams, Method};
pub use error::{Error, Result};
pub use profiles::{compute_profiles, ProfileSet};
pub use ranking::{ChainScore, RankedChain};
pub use series::{DistanceContext, DistanceMode, TimeSeries, WindowSpec};

/// Version tag written into every JSON document.
pub const SCHEMA_VERSION: &str = "1";
