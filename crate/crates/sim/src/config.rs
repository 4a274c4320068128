use gsicast_core::gsi::EndpointConfig;
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Per-tick event parameters. Probabilities are per tick; rates are Poisson
/// means per tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventRates {
    pub passive_gold: i64,
    pub passive_xp: i64,
    /// Ticks between creep waves.
    pub wave_period: u64,
    /// Ticks after a wave arrives during which last hits are possible.
    pub wave_window: u64,
    pub last_hit_prob: f64,
    pub deny_prob: f64,
    pub kill_rate: f64,
    pub assist_rate: f64,
    pub death_rate: f64,
    /// Chance of buying the next item on a tick where it is affordable.
    pub purchase_prob: f64,
    pub tower_hit_rate: f64,
}

impl Default for EventRates {
    fn default() -> Self {
        Self {
            passive_gold: 1,
            passive_xp: 1,
            wave_period: 60,
            wave_window: 12,
            last_hit_prob: 0.45,
            deny_prob: 0.1,
            kill_rate: 0.004,
            assist_rate: 0.004,
            death_rate: 0.003,
            purchase_prob: 0.5,
            tower_hit_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    /// Total ticks, pre-game and post-game included.
    pub ticks: u64,
    pub pregame_ticks: u64,
    pub postgame_ticks: u64,
    /// Game seconds per tick; `None` means the endpoint's heartbeat.
    pub tick_s: Option<f64>,
    pub rates: EventRates,
    pub endpoint: EndpointConfig,
    /// Virtual seconds per real second.
    pub speedup: f64,
    /// Lower bound on the real-time response deadline, so heavily compressed
    /// runs are not derailed by scheduler noise.
    pub min_real_timeout_s: f64,
    pub max_retries: u32,
    /// First reconnect delay in virtual seconds; doubles per attempt.
    pub retry_base_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ticks: 3000,
            pregame_ticks: 20,
            postgame_ticks: 10,
            tick_s: None,
            rates: EventRates::default(),
            endpoint: EndpointConfig::default(),
            speedup: 1.0,
            min_real_timeout_s: 0.25,
            max_retries: 8,
            retry_base_s: 0.1,
        }
    }
}

impl SimConfig {
    pub fn tick_seconds(&self) -> f64 {
        self.tick_s.unwrap_or(self.endpoint.heartbeat_s)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.endpoint.validate()?;
        if self.pregame_ticks + self.postgame_ticks > self.ticks {
            return Err(SimError::Config(format!(
                "phase schedule ({} + {}) exceeds {} ticks",
                self.pregame_ticks, self.postgame_ticks, self.ticks
            )));
        }
        let tick = self.tick_seconds();
        if !(tick.is_finite() && tick > 0.0) {
            return Err(SimError::Config(format!("tick interval must be positive, got {tick}")));
        }
        if !(self.speedup.is_finite() && self.speedup > 0.0) {
            return Err(SimError::Config(format!("speedup must be positive, got {}", self.speedup)));
        }
        if self.rates.wave_period == 0 {
            return Err(SimError::Config("wave period must be at least one tick".into()));
        }
        Ok(())
    }

    /// Retry policy in words, echoed into the run summary.
    pub fn retry_policy(&self) -> String {
        format!(
            "exponential backoff from {}s (virtual), doubling, at most {} attempts",
            self.retry_base_s, self.max_retries
        )
    }
}
