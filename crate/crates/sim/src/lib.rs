//! Synthetic match generator standing in for the game client.
//!
//! [`SimState`] evolves one hero's economy tick by tick; [`emit_snapshot`]
//! renders it in the game-state POST schema; [`run_client`] replays a whole
//! match against an endpoint while honouring the client's buffer, throttle,
//! heartbeat and timeout rules on a virtual clock.

mod client;
mod config;
mod error;
mod state;

pub use client::{run_client, run_with_transport, HttpTransport, PostKind, PostOutcome, PostRecord, RunSummary, Transport};
pub use config::{EventRates, SimConfig};
pub use error::SimError;
pub use state::{emit_snapshot, BuildingState, Ledger, SimState};
