//! Two-tier HetNet simulator with inter-BS RB transfer (RENEV) on top of
//! NVS and PRR slicing, plus the matching analytic model.

pub mod analysis;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod radio;
pub mod renev;
pub mod rng;
pub mod scenario;
pub mod signaling;
pub mod slicing;
pub mod validate;

pub use error::{Error, Result};
