//! Game State Integration payloads: parsing, phase gating, flattening onto
//! the frozen column manifest, and the client configuration file.

mod config;
mod flatten;
mod schema;
mod snapshot;

pub use config::{emit_config_file, parse_config_file, EndpointConfig};
pub use flatten::{flatten, BuildingRegistry, Cell, FeatureRow};
pub use schema::{building_ids, item_slots, ColumnManifest, TARGET_COLUMN};
pub use snapshot::{
    gate, parse_snapshot, Ability, Building, GamePhase, GsiSnapshot, Hero, Item, MapInfo, Player,
    Provider,
};
