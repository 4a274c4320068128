use std::collections::BTreeMap;

use gsicast_core::gsi::{
    building_ids, item_slots, Ability, Building, GamePhase, GsiSnapshot, Hero, Item, MapInfo, Player, Provider,
};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{EventRates, SimConfig};

/// Unix time at which every simulated match starts.
pub const BASE_EPOCH: i64 = 1_700_000_000;
pub const STARTING_GOLD: i64 = 600;

const STARTING_ITEMS: [(&str, i64); 3] = [("item_tango", 90), ("item_branches", 50), ("item_branches", 50)];

const CATALOGUE: [&str; 12] = [
    "item_boots",
    "item_magic_wand",
    "item_power_treads",
    "item_blink",
    "item_black_king_bar",
    "item_desolator",
    "item_manta",
    "item_butterfly",
    "item_satanic",
    "item_greater_crit",
    "item_skadi",
    "item_heart",
];

/// Cost of the `k`-th item bought after the horn. Costs climb so the gold
/// curve is a sawtooth whose teeth grow through the match.
pub fn item_cost(k: usize) -> i64 {
    500 + 300 * k as i64
}

/// Gold sources and sinks, kept separately for the accounting identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub starting: i64,
    pub passive: i64,
    pub bounties: i64,
    pub purchases: i64,
}

impl Ledger {
    pub fn balance(&self) -> i64 {
        self.starting + self.passive + self.bounties - self.purchases
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildingState {
    pub team: String,
    pub name: String,
    pub health: i64,
    pub max_health: i64,
}

fn building_max_health(name: &str) -> i64 {
    if name.contains("tower1") {
        1800
    } else if name.contains("tower4") {
        2600
    } else if name.contains("tower") {
        2500
    } else if name.contains("melee") {
        2200
    } else if name.contains("range") {
        1300
    } else {
        4500
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub tick: u64,
    pub phase: GamePhase,
    pub match_id: String,
    tick_ms: i64,
    in_progress_at: u64,
    post_game_at: u64,
    /// Game milliseconds since the first tick; frozen after the match ends.
    pub elapsed_ms: i64,
    pub gold_reliable: i64,
    pub gold_unreliable: i64,
    pub ledger: Ledger,
    pub gold_from_hero_kills: i64,
    pub gold_from_creep_kills: i64,
    pub gold_from_income: i64,
    pub gold_from_shared: i64,
    pub xp: i64,
    pub level: i64,
    pub kills: i64,
    pub deaths: i64,
    pub assists: i64,
    pub last_hits: i64,
    pub denies: i64,
    pub kill_streak: i64,
    pub alive: bool,
    pub respawn_ticks: i64,
    pub health: i64,
    pub mana: i64,
    pub xpos: i64,
    pub ypos: i64,
    pub ability_levels: [i64; 4],
    pub ability_cooldowns: [i64; 4],
    /// Held items by slot index into the slot list.
    pub items: BTreeMap<usize, String>,
    pub starting_bought: usize,
    pub purchases_made: usize,
    pub buildings: Vec<BuildingState>,
    pub radiant_score: i64,
    pub dire_score: i64,
}

fn poisson<R: Rng>(rate: f64, rng: &mut R) -> i64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map(|d| d.sample(rng) as i64).unwrap_or(0)
}

impl SimState {
    pub fn new(cfg: &SimConfig) -> Self {
        let tick_ms = (cfg.tick_seconds() * 1000.0).round() as i64;
        let post_game_at = cfg.ticks - cfg.postgame_ticks;
        let mut state = Self {
            tick: 0,
            phase: GamePhase::PreGame,
            match_id: format!("{}", 7_000_000_000u64 + cfg.seed),
            tick_ms,
            in_progress_at: cfg.pregame_ticks,
            post_game_at,
            elapsed_ms: 0,
            gold_reliable: 0,
            gold_unreliable: STARTING_GOLD,
            ledger: Ledger {
                starting: STARTING_GOLD,
                ..Ledger::default()
            },
            gold_from_hero_kills: 0,
            gold_from_creep_kills: 0,
            gold_from_income: 0,
            gold_from_shared: 0,
            xp: 0,
            level: 1,
            kills: 0,
            deaths: 0,
            assists: 0,
            last_hits: 0,
            denies: 0,
            kill_streak: 0,
            alive: true,
            respawn_ticks: 0,
            health: 0,
            mana: 0,
            xpos: -6700,
            ypos: -6200,
            ability_levels: [1, 0, 0, 0],
            ability_cooldowns: [0; 4],
            items: BTreeMap::new(),
            starting_bought: 0,
            purchases_made: 0,
            buildings: building_ids()
                .into_iter()
                .map(|(team, name)| {
                    let max = building_max_health(&name);
                    BuildingState {
                        team,
                        name,
                        health: max,
                        max_health: max,
                    }
                })
                .collect(),
            radiant_score: 0,
            dire_score: 0,
        };
        state.phase = state.phase_at(0);
        state.health = state.max_health();
        state.mana = state.max_mana();
        state
    }

    fn phase_at(&self, tick: u64) -> GamePhase {
        if tick >= self.post_game_at {
            GamePhase::PostGame
        } else if tick >= self.in_progress_at {
            GamePhase::InProgress
        } else {
            GamePhase::PreGame
        }
    }

    pub fn gold(&self) -> i64 {
        self.gold_reliable + self.gold_unreliable
    }

    /// Gold plus everything spent, i.e. inventory valued at cost.
    pub fn net_worth(&self) -> i64 {
        self.gold() + self.ledger.purchases
    }

    pub fn max_health(&self) -> i64 {
        500 + 80 * self.level
    }

    pub fn max_mana(&self) -> i64 {
        250 + 45 * self.level
    }

    /// Game seconds since the horn; negative before it.
    pub fn clock_time(&self) -> i64 {
        (self.elapsed_ms - self.in_progress_at as i64 * self.tick_ms).div_euclid(1000)
    }

    fn earned(&self) -> i64 {
        self.ledger.passive + self.ledger.bounties
    }

    fn per_minute(&self, total: i64) -> i64 {
        let secs = self.clock_time().max(1);
        total * 60 / secs
    }

    /// Total xp needed to reach `level`.
    fn xp_for(level: i64) -> i64 {
        100 * (level - 1) * level
    }

    fn spend(&mut self, cost: i64) {
        let from_unreliable = cost.min(self.gold_unreliable);
        self.gold_unreliable -= from_unreliable;
        self.gold_reliable -= cost - from_unreliable;
        self.ledger.purchases += cost;
    }

    fn add_bounty(&mut self, amount: i64, reliable: bool) {
        if reliable {
            self.gold_reliable += amount;
        } else {
            self.gold_unreliable += amount;
        }
        self.ledger.bounties += amount;
    }

    fn place_item(&mut self, name: &str) {
        let slots = 15;
        let slot = (0..slots)
            .find(|s| !self.items.contains_key(s))
            .unwrap_or(self.purchases_made % slots);
        self.items.insert(slot, name.to_string());
    }

    /// Advances one tick. Pre-game ticks buy the starting items; in-progress
    /// ticks apply passive income and sample events; post-game ticks only
    /// count.
    pub fn step<R: Rng>(&mut self, rates: &EventRates, rng: &mut R) {
        self.tick += 1;
        self.phase = self.phase_at(self.tick);
        if self.phase == GamePhase::PostGame {
            return;
        }
        self.elapsed_ms += self.tick_ms;
        if self.phase == GamePhase::PreGame {
            if let Some(&(name, cost)) = STARTING_ITEMS.get(self.starting_bought) {
                if self.gold() >= cost {
                    self.spend(cost);
                    self.place_item(name);
                    self.starting_bought += 1;
                }
            }
            return;
        }

        self.gold_unreliable += rates.passive_gold;
        self.ledger.passive += rates.passive_gold;
        self.gold_from_income += rates.passive_gold;
        self.xp += rates.passive_xp;

        if !self.alive {
            self.respawn_ticks -= 1;
            if self.respawn_ticks <= 0 {
                self.alive = true;
                self.health = self.max_health();
                self.mana = self.max_mana();
                self.xpos = -6700;
                self.ypos = -6200;
            }
        }

        let game_tick = self.tick - self.in_progress_at;
        if self.alive && game_tick % rates.wave_period < rates.wave_window {
            if rng.random_bool(rates.last_hit_prob) {
                let bounty = 36 + rng.random_range(0..=8);
                self.add_bounty(bounty, false);
                self.gold_from_creep_kills += bounty;
                self.last_hits += 1;
                self.xp += 45;
            }
            if rng.random_bool(rates.deny_prob) {
                self.denies += 1;
                self.xp += 15;
            }
        }

        for _ in 0..poisson(rates.kill_rate, rng) {
            let bounty = 125 + 8 * self.level;
            self.add_bounty(bounty, true);
            self.gold_from_hero_kills += bounty;
            self.kills += 1;
            self.kill_streak += 1;
            self.radiant_score += 1;
            self.xp += 100 + 15 * self.level;
        }
        for _ in 0..poisson(rates.assist_rate, rng) {
            let bounty = 60 + 4 * self.level;
            self.add_bounty(bounty, true);
            self.gold_from_shared += bounty;
            self.assists += 1;
            self.xp += 60;
        }
        if poisson(rates.death_rate, rng) > 0 && self.alive {
            self.deaths += 1;
            self.alive = false;
            self.kill_streak = 0;
            self.dire_score += 1;
            self.health = 0;
            self.respawn_ticks = ((4 + 2 * self.level) * 1000 + self.tick_ms - 1) / self.tick_ms.max(1);
        }

        let before = self.level;
        while self.level < 30 && self.xp >= Self::xp_for(self.level + 1) {
            self.level += 1;
        }
        for lvl in before + 1..=self.level {
            let slot = if lvl % 6 == 0 { 3 } else { (lvl as usize) % 3 };
            self.ability_levels[slot] = (self.ability_levels[slot] + 1).min(if slot == 3 { 3 } else { 4 });
        }

        if self.alive {
            let max_h = self.max_health();
            self.health = (self.health + rng.random_range(-30..=40)).clamp(1, max_h);
            let max_m = self.max_mana();
            self.mana = (self.mana + rng.random_range(-20..=25)).clamp(0, max_m);
            self.xpos = (self.xpos + rng.random_range(-120..=120)).clamp(-8000, 8000);
            self.ypos = (self.ypos + rng.random_range(-120..=120)).clamp(-8000, 8000);
        }
        for (cd, &lvl) in self.ability_cooldowns.iter_mut().zip(&self.ability_levels) {
            *cd = (*cd - 1).max(0);
            if lvl > 0 && *cd == 0 && rng.random_bool(0.05) {
                *cd = 12;
            }
        }

        let cost = item_cost(self.purchases_made);
        if self.gold() >= cost && rng.random_bool(rates.purchase_prob) {
            self.spend(cost);
            let name = CATALOGUE[self.purchases_made % CATALOGUE.len()];
            self.place_item(name);
            self.purchases_made += 1;
        }

        if rng.random_bool(rates.tower_hit_rate) {
            let standing: Vec<usize> = (0..self.buildings.len())
                .filter(|&i| self.buildings[i].health > 0)
                .collect();
            if !standing.is_empty() {
                let i = standing[rng.random_range(0..standing.len())];
                let dmg = rng.random_range(50..=250);
                self.buildings[i].health = (self.buildings[i].health - dmg).max(0);
            }
        }
    }

    pub fn to_snapshot(&self) -> GsiSnapshot {
        let clock = self.clock_time();
        let provider = Provider {
            name: Some("Dota 2".into()),
            appid: Some(570),
            version: Some(47),
            timestamp: Some(BASE_EPOCH + self.elapsed_ms / 1000),
            ..Provider::default()
        };
        let map = MapInfo {
            name: Some("start".into()),
            matchid: Some(self.match_id.clone()),
            game_time: Some(self.elapsed_ms / 1000),
            clock_time: Some(clock),
            daytime: Some(clock.div_euclid(300) % 2 == 0),
            nightstalker_night: Some(false),
            game_state: Some(self.phase.as_wire().into()),
            paused: Some(false),
            win_team: Some(if self.phase == GamePhase::PostGame { "radiant" } else { "none" }.into()),
            customgamename: Some(String::new()),
            ward_purchase_cooldown: Some(0),
            radiant_score: Some(self.radiant_score),
            dire_score: Some(self.dire_score),
            ..MapInfo::default()
        };
        let player = Player {
            steamid: Some("76561198000000000".into()),
            name: Some("simulated".into()),
            activity: Some("playing".into()),
            kills: Some(self.kills),
            deaths: Some(self.deaths),
            assists: Some(self.assists),
            last_hits: Some(self.last_hits),
            denies: Some(self.denies),
            kill_streak: Some(self.kill_streak),
            commands_issued: Some(self.elapsed_ms / 200),
            team_name: Some("radiant".into()),
            gold: Some(self.gold()),
            gold_reliable: Some(self.gold_reliable),
            gold_unreliable: Some(self.gold_unreliable),
            gold_from_hero_kills: Some(self.gold_from_hero_kills),
            gold_from_creep_kills: Some(self.gold_from_creep_kills),
            gold_from_income: Some(self.gold_from_income),
            gold_from_shared: Some(self.gold_from_shared),
            net_worth: Some(self.net_worth()),
            gpm: Some(self.per_minute(self.earned())),
            xpm: Some(self.per_minute(self.xp)),
            ..Player::default()
        };
        let max_h = self.max_health();
        let max_m = self.max_mana();
        let mut flags = BTreeMap::new();
        for flag in ["silenced", "stunned", "disarmed", "magicimmune", "hexed", "muted", "break", "smoked"] {
            flags.insert(flag.to_string(), Value::Bool(false));
        }
        let hero = Hero {
            id: Some(8),
            name: Some("npc_dota_hero_juggernaut".into()),
            level: Some(self.level),
            xp: Some(self.xp),
            alive: Some(self.alive),
            respawn_seconds: Some(self.respawn_ticks.max(0) * self.tick_ms / 1000),
            buyback_cost: Some(200 + self.net_worth() / 13),
            buyback_cooldown: Some(0),
            health: Some(self.health),
            max_health: Some(max_h),
            health_percent: Some(self.health * 100 / max_h),
            mana: Some(self.mana),
            max_mana: Some(max_m),
            mana_percent: Some(self.mana * 100 / max_m),
            xpos: Some(self.xpos),
            ypos: Some(self.ypos),
            other: flags,
        };
        let abilities = ["juggernaut_blade_fury", "juggernaut_healing_ward", "juggernaut_blade_dance", "juggernaut_omni_slash"]
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let level = self.ability_levels[i];
                let cooldown = self.ability_cooldowns[i];
                (
                    format!("ability{i}"),
                    Ability {
                        name: Some((*name).into()),
                        level: Some(level),
                        can_cast: Some(self.alive && level > 0 && cooldown == 0),
                        passive: Some(i == 2),
                        ability_active: Some(true),
                        cooldown: Some(cooldown),
                        ultimate: Some(i == 3),
                        ..Ability::default()
                    },
                )
            })
            .collect();
        let items = item_slots()
            .into_iter()
            .take(15)
            .enumerate()
            .map(|(i, slot)| {
                let item = match self.items.get(&i) {
                    Some(name) => Item {
                        name: Some(name.clone()),
                        purchaser: Some(0),
                        can_cast: Some(false),
                        cooldown: Some(0),
                        passive: Some(true),
                        charges: (name == "item_tango").then_some(3),
                        ..Item::default()
                    },
                    None => Item {
                        name: Some("empty".into()),
                        ..Item::default()
                    },
                };
                (slot, item)
            })
            .collect();
        let mut buildings: BTreeMap<String, BTreeMap<String, Building>> = BTreeMap::new();
        for b in &self.buildings {
            buildings.entry(b.team.clone()).or_default().insert(
                b.name.clone(),
                Building {
                    health: Some(b.health),
                    max_health: Some(b.max_health),
                    ..Building::default()
                },
            );
        }
        GsiSnapshot {
            provider,
            map,
            player,
            hero,
            abilities,
            items,
            buildings,
            extras: BTreeMap::new(),
            received_at: None,
        }
    }
}

/// Renders the state as a game-state POST body.
pub fn emit_snapshot(state: &SimState) -> String {
    state.to_snapshot().to_json()
}
