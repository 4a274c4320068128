use std::collections::HashMap;
use std::sync::OnceLock;

/// Column used as the forecasting target by default.
pub const TARGET_COLUMN: &str = "PLAYER.GOLD";

const PROVIDER: &[&str] = &["NAME", "APPID", "VERSION", "TIMESTAMP"];

const MAP: &[&str] = &[
    "NAME",
    "MATCHID",
    "GAME_TIME",
    "CLOCK_TIME",
    "DAYTIME",
    "NIGHTSTALKER_NIGHT",
    "GAME_STATE",
    "PAUSED",
    "WIN_TEAM",
    "CUSTOMGAMENAME",
    "WARD_PURCHASE_COOLDOWN",
    "RADIANT_SCORE",
    "DIRE_SCORE",
];

const PLAYER: &[&str] = &[
    "STEAMID",
    "NAME",
    "ACTIVITY",
    "KILLS",
    "DEATHS",
    "ASSISTS",
    "LAST_HITS",
    "DENIES",
    "KILL_STREAK",
    "COMMANDS_ISSUED",
    "TEAM_NAME",
    "GOLD",
    "GOLD_RELIABLE",
    "GOLD_UNRELIABLE",
    "GOLD_FROM_HERO_KILLS",
    "GOLD_FROM_CREEP_KILLS",
    "GOLD_FROM_INCOME",
    "GOLD_FROM_SHARED",
    "NET_WORTH",
    "GPM",
    "XPM",
];

const HERO: &[&str] = &[
    "ID",
    "NAME",
    "LEVEL",
    "XP",
    "ALIVE",
    "RESPAWN_SECONDS",
    "BUYBACK_COST",
    "BUYBACK_COOLDOWN",
    "HEALTH",
    "MAX_HEALTH",
    "HEALTH_PERCENT",
    "MANA",
    "MAX_MANA",
    "MANA_PERCENT",
    "SILENCED",
    "STUNNED",
    "DISARMED",
    "MAGICIMMUNE",
    "HEXED",
    "MUTED",
    "BREAK",
    "AGHANIMS_SCEPTER",
    "AGHANIMS_SHARD",
    "SMOKED",
    "HAS_DEBUFF",
    "TALENT_1",
    "TALENT_2",
    "TALENT_3",
    "TALENT_4",
    "TALENT_5",
    "TALENT_6",
    "TALENT_7",
    "TALENT_8",
    "XPOS",
    "YPOS",
];

const ABILITY_SLOTS: usize = 6;
const ABILITY: &[&str] = &[
    "NAME",
    "LEVEL",
    "CAN_CAST",
    "PASSIVE",
    "ABILITY_ACTIVE",
    "COOLDOWN",
    "ULTIMATE",
];

const ITEM: &[&str] = &["NAME", "PURCHASER", "CAN_CAST", "COOLDOWN", "PASSIVE", "CHARGES"];

const BUILDING: &[&str] = &["HEALTH", "MAX_HEALTH"];

/// Slot keys as they appear in the `items` section.
pub fn item_slots() -> Vec<String> {
    let mut slots: Vec<String> = (0..9).map(|i| format!("slot{i}")).collect();
    slots.extend((0..6).map(|i| format!("stash{i}")));
    slots.push("teleport0".into());
    slots.push("neutral0".into());
    slots
}

/// `(team, building name)` pairs covered by the manifest.
pub fn building_ids() -> Vec<(String, String)> {
    let mut ids = Vec::new();
    for (team, side, rax) in [("radiant", "goodguys", "good"), ("dire", "badguys", "bad")] {
        for tier in 1..=3 {
            for lane in ["top", "mid", "bot"] {
                ids.push((team.to_string(), format!("dota_{side}_tower{tier}_{lane}")));
            }
        }
        for lane in ["top", "bot"] {
            ids.push((team.to_string(), format!("dota_{side}_tower4_{lane}")));
        }
        for kind in ["melee", "range"] {
            for lane in ["top", "mid", "bot"] {
                ids.push((team.to_string(), format!("{rax}_rax_{kind}_{lane}")));
            }
        }
        ids.push((team.to_string(), format!("dota_{side}_fort")));
    }
    ids
}

/// Flattened column name for a building field.
pub(crate) fn building_column(team: &str, building: &str, field: &str) -> String {
    format!(
        "BUILDINGS.{}.{}.{}",
        team.to_uppercase(),
        building.to_uppercase(),
        field.to_uppercase()
    )
}

/// The frozen, ordered column list shared by every capture session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnManifest {
    columns: Vec<String>,
    index: HashMap<String, usize>,
}

impl ColumnManifest {
    pub fn new(columns: Vec<String>) -> Self {
        let index = columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Self { columns, index }
    }

    /// The global manifest every session is frozen to.
    pub fn canonical() -> &'static ColumnManifest {
        static CANONICAL: OnceLock<ColumnManifest> = OnceLock::new();
        CANONICAL.get_or_init(|| {
            let mut cols = Vec::new();
            let mut section = |name: &str, fields: &[&str]| {
                cols.extend(fields.iter().map(|f| format!("{name}.{f}")));
            };
            section("PROVIDER", PROVIDER);
            section("MAP", MAP);
            section("PLAYER", PLAYER);
            section("HERO", HERO);
            for slot in 0..ABILITY_SLOTS {
                section(&format!("ABILITIES.ABILITY{slot}"), ABILITY);
            }
            for slot in item_slots() {
                section(&format!("ITEMS.{}", slot.to_uppercase()), ITEM);
            }
            for (team, building) in building_ids() {
                for field in BUILDING {
                    cols.push(building_column(&team, &building, field));
                }
            }
            ColumnManifest::new(cols)
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn position(&self, column: &str) -> Option<usize> {
        self.index.get(column).copied()
    }

    pub fn is_building(column: &str) -> bool {
        column.starts_with("BUILDINGS.")
    }
}
