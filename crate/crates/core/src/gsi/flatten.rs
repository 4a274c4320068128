use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::Value;

use super::schema::{building_column, ColumnManifest};
use super::snapshot::GsiSnapshot;

/// One cell of a captured row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn from_json(value: &Value) -> Cell {
        match value {
            Value::Null => Cell::Empty,
            Value::Bool(b) => Cell::Bool(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) => Cell::Int(i),
                None => n.as_f64().map(Cell::Float).unwrap_or(Cell::Empty),
            },
            Value::String(s) => Cell::Text(s.clone()),
            // Containers are flattened before reaching here.
            other => Cell::Text(other.to_string()),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Cell::Empty)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Float(x) => s.serialize_f64(*x),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

/// One flattened row, aligned to a [`ColumnManifest`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub cells: Vec<Cell>,
}

impl FeatureRow {
    pub fn get<'a>(&'a self, manifest: &ColumnManifest, column: &str) -> Option<&'a Cell> {
        manifest.position(column).map(|i| &self.cells[i])
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.cells.iter().map(Cell::to_string).collect()
    }
}

/// Last known values of every building seen during a session. Keys are never
/// removed once observed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildingRegistry {
    entries: BTreeMap<(String, String), BTreeMap<String, Cell>>,
}

impl BuildingRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, team: &str, building: &str) -> Option<&BTreeMap<String, Cell>> {
        self.entries.get(&(team.to_string(), building.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn update(&mut self, snapshot: &GsiSnapshot) {
        for (team, buildings) in &snapshot.buildings {
            for (name, record) in buildings {
                let value = serde_json::to_value(record).expect("building serializes");
                let mut fields = Vec::new();
                flatten_value("", &value, &mut fields);
                let entry = self.entries.entry((team.clone(), name.clone())).or_default();
                for (field, cell) in fields {
                    // An explicit null does not erase a known value.
                    if !cell.is_empty() {
                        entry.insert(field, cell);
                    }
                }
            }
        }
    }

    fn columns(&self) -> impl Iterator<Item = (String, &Cell)> {
        self.entries.iter().flat_map(|((team, name), fields)| {
            fields
                .iter()
                .map(move |(field, cell)| (building_column(team, name, field), cell))
        })
    }
}

fn flatten_value(prefix: &str, value: &Value, out: &mut Vec<(String, Cell)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_uppercase()
        } else {
            format!("{prefix}.{}", k.to_uppercase())
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_value(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_value(&key(&i.to_string()), v, out);
            }
        }
        leaf => out.push((prefix.to_string(), Cell::from_json(leaf))),
    }
}

fn section<T: Serialize>(prefix: &str, record: &T, out: &mut Vec<(String, Cell)>) {
    let value = serde_json::to_value(record).expect("section serializes");
    flatten_value(prefix, &value, out);
}

/// Flattens `snapshot` onto `manifest`, first folding its building values into
/// `registry`. Building columns are always read back from the registry so a
/// request without a `buildings` section still carries the last known values.
pub fn flatten(
    snapshot: &GsiSnapshot,
    registry: &mut BuildingRegistry,
    manifest: &ColumnManifest,
) -> FeatureRow {
    registry.update(snapshot);

    let mut pairs = Vec::new();
    section("PROVIDER", &snapshot.provider, &mut pairs);
    section("MAP", &snapshot.map, &mut pairs);
    section("PLAYER", &snapshot.player, &mut pairs);
    section("HERO", &snapshot.hero, &mut pairs);
    for (slot, ability) in &snapshot.abilities {
        section(&format!("ABILITIES.{}", slot.to_uppercase()), ability, &mut pairs);
    }
    for (slot, item) in &snapshot.items {
        section(&format!("ITEMS.{}", slot.to_uppercase()), item, &mut pairs);
    }

    let mut by_column: HashMap<String, Cell> = pairs.into_iter().collect();
    for (column, cell) in registry.columns() {
        by_column.insert(column, cell.clone());
    }

    let cells = manifest
        .columns()
        .iter()
        .map(|c| by_column.remove(c).unwrap_or(Cell::Empty))
        .collect();
    FeatureRow { cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsi::{parse_snapshot, TARGET_COLUMN};

    const TOWER: &str = "BUILDINGS.RADIANT.DOTA_GOODGUYS_TOWER1_TOP.HEALTH";

    #[test]
    fn copies_player_gold() {
        let m = ColumnManifest::canonical();
        let snap = parse_snapshot(r#"{"player": {"gold": 625}}"#).unwrap();
        let row = flatten(&snap, &mut BuildingRegistry::new(), m);
        assert_eq!(row.get(m, TARGET_COLUMN), Some(&Cell::Int(625)));
        assert_eq!(row.cells.len(), m.len());
        assert_eq!(row.get(m, "HERO.LEVEL"), Some(&Cell::Empty));
    }

    #[test]
    fn buildings_persist_across_requests() {
        let m = ColumnManifest::canonical();
        let mut registry = BuildingRegistry::new();
        let first = parse_snapshot(
            r#"{"buildings": {"radiant": {"dota_goodguys_tower1_top": {"health": 1800, "max_health": 1800}}}}"#,
        )
        .unwrap();
        flatten(&first, &mut registry, m);

        let later = parse_snapshot(r#"{"player": {"gold": 1}}"#).unwrap();
        let row = flatten(&later, &mut registry, m);
        assert_eq!(row.get(m, TOWER), Some(&Cell::Int(1800)));

        let damaged = parse_snapshot(
            r#"{"buildings": {"radiant": {"dota_goodguys_tower1_top": {"health": 900}}}}"#,
        )
        .unwrap();
        let row = flatten(&damaged, &mut registry, m);
        assert_eq!(row.get(m, TOWER), Some(&Cell::Int(900)));
        assert_eq!(
            row.get(m, "BUILDINGS.RADIANT.DOTA_GOODGUYS_TOWER1_TOP.MAX_HEALTH"),
            Some(&Cell::Int(1800))
        );
        assert_eq!(registry.len(), 1);
    }

    #[test]
    fn unknown_fields_do_not_change_the_schema() {
        let m = ColumnManifest::canonical();
        let snap = parse_snapshot(
            r#"{"player": {"gold": 5, "brand_new_stat": 9}, "hero": {"silenced": true}, "wearables": {"w0": 1}}"#,
        )
        .unwrap();
        let row = flatten(&snap, &mut BuildingRegistry::new(), m);
        assert_eq!(row.cells.len(), m.len());
        assert_eq!(row.get(m, "HERO.SILENCED"), Some(&Cell::Bool(true)));
    }

    #[test]
    fn cell_rendering() {
        assert_eq!(Cell::Int(-3).to_string(), "-3");
        assert_eq!(Cell::Float(0.5).to_string(), "0.5");
        assert_eq!(Cell::Bool(false).to_string(), "false");
        assert_eq!(Cell::Empty.to_string(), "");
    }
}
