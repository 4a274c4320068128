use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// Match phase as far as capture gating is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GamePhase {
    PreGame,
    InProgress,
    PostGame,
    Other,
}

impl GamePhase {
    /// Wire value used by the game client.
    pub fn as_wire(self) -> &'static str {
        match self {
            GamePhase::PreGame => "DOTA_GAMERULES_STATE_PRE_GAME",
            GamePhase::InProgress => "DOTA_GAMERULES_STATE_GAME_IN_PROGRESS",
            GamePhase::PostGame => "DOTA_GAMERULES_STATE_POST_GAME",
            GamePhase::Other => "DOTA_GAMERULES_STATE_INIT",
        }
    }

    pub fn from_wire(raw: &str) -> Self {
        match raw {
            "DOTA_GAMERULES_STATE_PRE_GAME" | "pre-game" => GamePhase::PreGame,
            "DOTA_GAMERULES_STATE_GAME_IN_PROGRESS" | "in-progress" => GamePhase::InProgress,
            "DOTA_GAMERULES_STATE_POST_GAME" | "post-game" => GamePhase::PostGame,
            _ => GamePhase::Other,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Provider {
    pub name: Option<String>,
    pub appid: Option<i64>,
    pub version: Option<i64>,
    pub timestamp: Option<i64>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapInfo {
    pub name: Option<String>,
    pub matchid: Option<String>,
    pub game_time: Option<i64>,
    pub clock_time: Option<i64>,
    pub daytime: Option<bool>,
    pub nightstalker_night: Option<bool>,
    pub game_state: Option<String>,
    pub paused: Option<bool>,
    pub win_team: Option<String>,
    pub customgamename: Option<String>,
    pub ward_purchase_cooldown: Option<i64>,
    pub radiant_score: Option<i64>,
    pub dire_score: Option<i64>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Player {
    pub steamid: Option<String>,
    pub name: Option<String>,
    pub activity: Option<String>,
    pub kills: Option<i64>,
    pub deaths: Option<i64>,
    pub assists: Option<i64>,
    pub last_hits: Option<i64>,
    pub denies: Option<i64>,
    pub kill_streak: Option<i64>,
    pub commands_issued: Option<i64>,
    pub team_name: Option<String>,
    pub gold: Option<i64>,
    pub gold_reliable: Option<i64>,
    pub gold_unreliable: Option<i64>,
    pub gold_from_hero_kills: Option<i64>,
    pub gold_from_creep_kills: Option<i64>,
    pub gold_from_income: Option<i64>,
    pub gold_from_shared: Option<i64>,
    pub net_worth: Option<i64>,
    pub gpm: Option<i64>,
    pub xpm: Option<i64>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hero {
    pub id: Option<i64>,
    pub name: Option<String>,
    pub level: Option<i64>,
    pub xp: Option<i64>,
    pub alive: Option<bool>,
    pub respawn_seconds: Option<i64>,
    pub buyback_cost: Option<i64>,
    pub buyback_cooldown: Option<i64>,
    pub health: Option<i64>,
    pub max_health: Option<i64>,
    pub health_percent: Option<i64>,
    pub mana: Option<i64>,
    pub max_mana: Option<i64>,
    pub mana_percent: Option<i64>,
    pub xpos: Option<i64>,
    pub ypos: Option<i64>,
    /// Status flags (`silenced`, `stunned`, talents, ...).
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ability {
    pub name: Option<String>,
    pub level: Option<i64>,
    pub can_cast: Option<bool>,
    pub passive: Option<bool>,
    pub ability_active: Option<bool>,
    pub cooldown: Option<i64>,
    pub ultimate: Option<bool>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Item {
    pub name: Option<String>,
    pub purchaser: Option<i64>,
    pub can_cast: Option<bool>,
    pub cooldown: Option<i64>,
    pub passive: Option<bool>,
    pub charges: Option<i64>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Building {
    pub health: Option<i64>,
    pub max_health: Option<i64>,
    #[serde(flatten)]
    pub other: BTreeMap<String, Value>,
}

/// One parsed game-state POST body.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GsiSnapshot {
    pub provider: Provider,
    pub map: MapInfo,
    pub player: Player,
    pub hero: Hero,
    /// Keyed by slot (`ability0`, `ability1`, ...).
    pub abilities: BTreeMap<String, Ability>,
    /// Keyed by slot (`slot0`, `stash0`, `teleport0`, ...).
    pub items: BTreeMap<String, Item>,
    /// Team -> building name -> health record.
    pub buildings: BTreeMap<String, BTreeMap<String, Building>>,
    /// Top-level sections outside the seven above (`draft`, `wearables`,
    /// `previously`, `added`, `auth`, ...).
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
    #[serde(skip)]
    pub received_at: Option<Instant>,
}

// Arrival time is bookkeeping, not content.
impl PartialEq for GsiSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.provider == other.provider
            && self.map == other.map
            && self.player == other.player
            && self.hero == other.hero
            && self.abilities == other.abilities
            && self.items == other.items
            && self.buildings == other.buildings
            && self.extras == other.extras
    }
}

impl GsiSnapshot {
    pub fn phase(&self) -> GamePhase {
        self.map
            .game_state
            .as_deref()
            .map(GamePhase::from_wire)
            .unwrap_or(GamePhase::Other)
    }

    pub fn auth_token(&self) -> Option<&str> {
        self.extras.get("auth")?.get("token")?.as_str()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

const SECTIONS: [&str; 7] = [
    "provider",
    "map",
    "player",
    "hero",
    "abilities",
    "items",
    "buildings",
];

/// Parses one POST body. Missing sections become empty records; unknown
/// top-level keys are kept in [`GsiSnapshot::extras`].
pub fn parse_snapshot(body: &str) -> Result<GsiSnapshot> {
    let value: Value = serde_json::from_str(body).map_err(|e| Error::Parse {
        offset: byte_offset(body, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let Value::Object(mut root) = value else {
        return Err(Error::Structure("root is not a JSON object".into()));
    };

    // Nulls for known sections are treated as absent.
    for key in SECTIONS {
        if root.get(key).is_some_and(Value::is_null) {
            root.remove(key);
        }
    }
    let mut snapshot: GsiSnapshot = serde_json::from_value(Value::Object(root))
        .map_err(|e| Error::Structure(e.to_string()))?;
    snapshot.received_at = Some(Instant::now());
    Ok(snapshot)
}

/// Capture gate: only pre-game and in-progress states are persisted.
pub fn gate(snapshot: &GsiSnapshot) -> bool {
    matches!(snapshot.phase(), GamePhase::PreGame | GamePhase::InProgress)
}

fn byte_offset(body: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = body
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(body.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{
        "provider": {"name": "Dota 2", "appid": 570, "version": 47, "timestamp": 1600000000},
        "map": {"name": "start", "matchid": "7", "clock_time": 12, "game_state": "DOTA_GAMERULES_STATE_GAME_IN_PROGRESS", "paused": false, "win_team": "none"},
        "player": {"name": "p", "gold": 625, "last_hits": 3, "denies": 1},
        "hero": {"id": 2, "level": 3, "health": 600, "alive": true},
        "abilities": {"ability0": {"name": "axe_berserkers_call", "level": 1, "cooldown": 0, "can_cast": true}},
        "items": {"slot0": {"name": "item_tango", "charges": 3, "purchaser": 0}},
        "buildings": {"radiant": {"dota_goodguys_tower1_top": {"health": 1800, "max_health": 1800}}},
        "draft": {"activeteam": 2}
    }"#;

    #[test]
    fn parses_all_seven_sections() {
        let snap = parse_snapshot(FULL).unwrap();
        assert_eq!(snap.provider.appid, Some(570));
        assert_eq!(snap.map.clock_time, Some(12));
        assert_eq!(snap.player.gold, Some(625));
        assert_eq!(snap.hero.level, Some(3));
        assert_eq!(snap.abilities["ability0"].level, Some(1));
        assert_eq!(snap.items["slot0"].charges, Some(3));
        assert_eq!(
            snap.buildings["radiant"]["dota_goodguys_tower1_top"].health,
            Some(1800)
        );
        assert_eq!(snap.phase(), GamePhase::InProgress);
        assert!(snap.extras.contains_key("draft"));
        assert_eq!(snap.hero.alive, Some(true));
    }

    #[test]
    fn empty_object_gives_empty_snapshot() {
        let snap = parse_snapshot("{}").unwrap();
        assert_eq!(snap.phase(), GamePhase::Other);
        assert_eq!(snap.player, Player::default());
        assert!(snap.abilities.is_empty() && snap.items.is_empty() && snap.buildings.is_empty());
        assert!(!gate(&snap));
    }

    #[test]
    fn malformed_json_reports_offset() {
        let err = parse_snapshot("{\"map\": {\"clock_time\": 1,, }}").unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 25),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_snapshot("{\n\"a\": 1\n\"b\": 2}").unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(&"{\n\"a\": 1\n\"b\": 2}"[offset..offset + 1], "\""),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_object_root_is_structure_error() {
        assert!(matches!(parse_snapshot("[1,2]"), Err(Error::Structure(_))));
        assert!(matches!(parse_snapshot("42"), Err(Error::Structure(_))));
    }

    #[test]
    fn gate_follows_phase() {
        let mut snap = GsiSnapshot::default();
        for (phase, open) in [
            (GamePhase::PreGame, true),
            (GamePhase::InProgress, true),
            (GamePhase::PostGame, false),
            (GamePhase::Other, false),
        ] {
            snap.map.game_state = Some(phase.as_wire().to_string());
            assert_eq!(gate(&snap), open, "{phase:?}");
        }
        snap.map.game_state = Some("DOTA_GAMERULES_STATE_HERO_SELECTION".into());
        assert!(!gate(&snap));
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let snap = parse_snapshot(FULL).unwrap();
        let again = parse_snapshot(&snap.to_json()).unwrap();
        assert_eq!(snap, again);
    }
}
