//! Core of the gsicast toolkit.
//!
//! The crate covers the whole offline path from a game-state telemetry POST
//! body to a trained forecaster:
//!
//! * [`gsi`] parses POST bodies, gates them on the match phase and flattens
//!   them onto a frozen column manifest.
//! * [`session`] owns one capture lifetime and its CSV / JSON-lines / text sinks.
//! * [`features`] turns a captured table into numeric columns and ranks them
//!   against the target.
//! * [`windowing`] builds the lagged, multi-step-ahead supervised dataset.
//! * [`models`] holds the linear, feed-forward and recurrent forecasters.
//! * [`pipeline`] chains the above into one training run.

pub mod error;
pub mod features;
pub mod gsi;
pub mod models;
pub mod pipeline;
pub mod session;
pub mod table;
pub mod windowing;

pub use error::{Error, Result};
