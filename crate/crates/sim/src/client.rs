//! The client timing contract, run on a virtual clock.
//!
//! Virtual time advances only through ticks, waits and timeouts; the
//! round trip of a request counts as zero. Real sleeps are the virtual waits
//! divided by the speedup factor, so the request sequence is a pure function
//! of the seed and configuration.

use std::thread;
use std::time::Duration;

use gsicast_core::gsi::{gate, parse_snapshot, GamePhase};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{SimConfig, SimError, SimState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum PostOutcome {
    Acknowledged { status: u16 },
    Rejected { status: u16 },
    Timeout,
    ConnectionError { message: String },
}

pub trait Transport {
    /// Sends one body and waits at most `deadline` (real time) for the status.
    fn post(&mut self, body: &str, deadline: Duration) -> PostOutcome;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpTransport {
    pub fn new(uri: &str) -> Result<Self, SimError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url: uri.to_string(),
        })
    }
}

impl Transport for HttpTransport {
    fn post(&mut self, body: &str, deadline: Duration) -> PostOutcome {
        let sent = self
            .client
            .post(&self.url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_owned())
            .timeout(deadline)
            .send()
            .and_then(|resp| {
                let status = resp.status().as_u16();
                resp.bytes().map(|_| status)
            });
        match sent {
            Ok(status) if (200..300).contains(&status) => PostOutcome::Acknowledged { status },
            Ok(status) => PostOutcome::Rejected { status },
            Err(e) if e.is_timeout() => PostOutcome::Timeout,
            Err(e) => PostOutcome::ConnectionError { message: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostKind {
    /// State changed since the last acknowledged body.
    Change,
    /// Nothing changed; keep-alive.
    Heartbeat,
    /// Whole state after a timeout or failed delivery.
    Resend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub seq: u64,
    pub tick: u64,
    pub phase: GamePhase,
    pub kind: PostKind,
    /// True when the body carries no `previously` delta block.
    pub full_state: bool,
    /// Virtual send time in seconds.
    pub sent_at: f64,
    /// Virtual time at which the client considered the request finished.
    pub finished_at: f64,
    pub outcome: PostOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub ticks: u64,
    pub posts: u64,
    pub acknowledged: u64,
    /// Acknowledged bodies whose phase passes the capture gate.
    pub gate_passing: u64,
    pub rejected: u64,
    pub timeouts: u64,
    pub connection_errors: u64,
    pub full_resends: u64,
    pub final_gold: i64,
    pub virtual_seconds: f64,
    pub retry_policy: String,
    #[serde(skip)]
    pub log: Vec<PostRecord>,
}

/// Drives a whole match against `cfg.endpoint.uri` over HTTP.
pub fn run_client(cfg: &SimConfig) -> Result<RunSummary, SimError> {
    let mut transport = HttpTransport::new(&cfg.endpoint.uri)?;
    run_with_transport(cfg, &mut transport)
}

/// Values in `old` that differ from `new`, restricted to keys present in
/// both.
fn changed(old: &Value, new: &Value) -> Option<Value> {
    match (old, new) {
        (Value::Object(a), Value::Object(b)) => {
            let out: Map<String, Value> = b
                .iter()
                .filter_map(|(k, nv)| a.get(k).and_then(|ov| changed(ov, nv)).map(|d| (k.clone(), d)))
                .collect();
            (!out.is_empty()).then_some(Value::Object(out))
        }
        _ => (old != new).then(|| old.clone()),
    }
}

struct Clock {
    now: f64,
    speedup: f64,
}

impl Clock {
    fn advance_to(&mut self, t: f64) {
        if t > self.now {
            let real = (t - self.now) / self.speedup;
            if real > 0.0 {
                thread::sleep(Duration::from_secs_f64(real));
            }
            self.now = t;
        }
    }
}

pub fn run_with_transport<T: Transport>(cfg: &SimConfig, transport: &mut T) -> Result<RunSummary, SimError> {
    cfg.validate()?;
    let ep = &cfg.endpoint;
    let tick_s = cfg.tick_seconds();
    let deadline = Duration::from_secs_f64((ep.timeout_s / cfg.speedup).max(cfg.min_real_timeout_s));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = SimState::new(cfg);
    let snapshot_value = |s: &SimState| serde_json::to_value(s.to_snapshot()).expect("snapshot serializes");

    let mut clock = Clock {
        now: 0.0,
        speedup: cfg.speedup,
    };
    let mut current = snapshot_value(&state);
    let mut delivered: Option<Value> = None;
    let mut last_response: Option<f64> = None;
    let mut dirty_since: Option<f64> = Some(0.0);
    let mut not_before = 0.0f64;
    let mut full_resend = false;
    let mut failures = 0u32;
    let mut next_tick_at = tick_s;

    let mut summary = RunSummary {
        seed: cfg.seed,
        ticks: cfg.ticks,
        posts: 0,
        acknowledged: 0,
        gate_passing: 0,
        rejected: 0,
        timeouts: 0,
        connection_errors: 0,
        full_resends: 0,
        final_gold: 0,
        virtual_seconds: 0.0,
        retry_policy: cfg.retry_policy(),
        log: Vec::new(),
    };

    loop {
        let send_at = match (dirty_since, last_response) {
            (Some(ds), Some(lr)) => (ds + ep.buffer_s).max(lr + ep.throttle_s),
            (Some(ds), None) => ds + ep.buffer_s,
            (None, Some(lr)) => lr + ep.heartbeat_s,
            (None, None) => 0.0,
        }
        .max(not_before);
        let ticks_left = state.tick + 1 < cfg.ticks;

        // A tick due no later than the send is applied first.
        if ticks_left && next_tick_at <= send_at {
            clock.advance_to(next_tick_at);
            state.step(&cfg.rates, &mut rng);
            next_tick_at += tick_s;
            let v = snapshot_value(&state);
            if v != current {
                current = v;
                dirty_since.get_or_insert(clock.now);
            }
            continue;
        }
        if !ticks_left && dirty_since.is_none() {
            break;
        }

        clock.advance_to(send_at);
        let kind = if full_resend {
            PostKind::Resend
        } else if dirty_since.is_some() {
            PostKind::Change
        } else {
            PostKind::Heartbeat
        };
        let mut body = current.clone();
        let delta = match (&delivered, full_resend) {
            (Some(prev), false) => changed(prev, &current),
            _ => None,
        };
        let full_state = delta.is_none();
        if let Value::Object(map) = &mut body {
            if let Some(d) = delta {
                map.insert("previously".into(), d);
            }
            if let Some(token) = &ep.auth_token {
                map.insert("auth".into(), serde_json::json!({ "token": token }));
            }
        }
        let text = serde_json::to_string(&body).expect("body serializes");
        let sent_at = clock.now;
        let outcome = transport.post(&text, deadline);
        summary.posts += 1;
        if kind == PostKind::Resend {
            summary.full_resends += 1;
        }

        match &outcome {
            PostOutcome::Acknowledged { .. } => {
                summary.acknowledged += 1;
                if parse_snapshot(&text).map(|s| gate(&s)).unwrap_or(false) {
                    summary.gate_passing += 1;
                }
                delivered = Some(current.clone());
                dirty_since = None;
                full_resend = false;
                failures = 0;
                last_response = Some(clock.now);
            }
            PostOutcome::Rejected { .. } => {
                summary.rejected += 1;
                full_resend = true;
                dirty_since.get_or_insert(clock.now);
                last_response = Some(clock.now);
            }
            PostOutcome::Timeout => {
                summary.timeouts += 1;
                clock.now += ep.timeout_s;
                full_resend = true;
                dirty_since.get_or_insert(clock.now);
                last_response = Some(clock.now);
            }
            PostOutcome::ConnectionError { message } => {
                summary.connection_errors += 1;
                failures += 1;
                if failures >= cfg.max_retries {
                    return Err(SimError::Unreachable {
                        attempts: failures,
                        last: message.clone(),
                    });
                }
                full_resend = true;
                dirty_since.get_or_insert(clock.now);
                not_before = clock.now + cfg.retry_base_s * 2f64.powi(failures as i32 - 1);
            }
        }
        summary.log.push(PostRecord {
            seq: summary.posts,
            tick: state.tick,
            phase: state.phase,
            kind,
            full_state,
            sent_at,
            finished_at: clock.now,
            outcome,
        });
    }
    summary.final_gold = state.gold();
    summary.virtual_seconds = clock.now;
    Ok(summary)
}
