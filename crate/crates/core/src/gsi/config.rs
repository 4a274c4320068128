use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Endpoint settings handed to the game client.
///
/// [`Default`] holds the values we configure; [`EndpointConfig::client_fallbacks`]
/// holds what the client assumes when a key is missing from its config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub uri: String,
    pub timeout_s: f64,
    pub buffer_s: f64,
    pub throttle_s: f64,
    pub heartbeat_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            uri: "http://127.0.0.1:8080".into(),
            timeout_s: 5.0,
            buffer_s: 0.1,
            throttle_s: 0.1,
            heartbeat_s: 0.5,
            auth_token: None,
        }
    }
}

impl EndpointConfig {
    pub const FALLBACK_TIMEOUT_S: f64 = 1.1;
    pub const FALLBACK_BUFFER_S: f64 = 0.1;
    pub const FALLBACK_THROTTLE_S: f64 = 1.0;
    pub const FALLBACK_HEARTBEAT_S: f64 = 30.0;

    /// Settings the client uses when its config file omits the timing keys.
    pub fn client_fallbacks(uri: impl Into<String>) -> Self {
        Self {
            uri: uri.into(),
            timeout_s: Self::FALLBACK_TIMEOUT_S,
            buffer_s: Self::FALLBACK_BUFFER_S,
            throttle_s: Self::FALLBACK_THROTTLE_S,
            heartbeat_s: Self::FALLBACK_HEARTBEAT_S,
            auth_token: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("timeout", self.timeout_s),
            ("buffer", self.buffer_s),
            ("throttle", self.throttle_s),
            ("heartbeat", self.heartbeat_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        self.socket_addr().map(|_| ())
    }

    /// `host:port` of the uri; the port must be explicit.
    pub fn socket_addr(&self) -> Result<String> {
        let rest = self
            .uri
            .strip_prefix("http://")
            .ok_or_else(|| Error::Config(format!("uri `{}` is not http://", self.uri)))?;
        let authority = rest.split('/').next().unwrap_or_default();
        let (host, port) = authority
            .rsplit_once(':')
            .ok_or_else(|| Error::Config(format!("uri `{}` has no explicit port", self.uri)))?;
        if host.is_empty() || port.parse::<u16>().is_err() {
            return Err(Error::Config(format!("uri `{}` has a bad host or port", self.uri)));
        }
        Ok(authority.to_string())
    }

    /// Path component the client posts to, `/` when none is given.
    pub fn path(&self) -> String {
        let rest = self.uri.strip_prefix("http://").unwrap_or(&self.uri);
        match rest.find('/') {
            Some(i) => rest[i..].to_string(),
            None => "/".into(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

const DATA_SECTIONS: [&str; 9] = [
    "buildings",
    "provider",
    "map",
    "player",
    "hero",
    "abilities",
    "items",
    "draft",
    "wearables",
];

fn seconds(v: f64) -> String {
    // Always keep a fractional part: 5 -> "5.0".
    format!("{v:?}")
}

/// Renders the client configuration file. Output is a pure function of the
/// config.
pub fn emit_config_file(config: &EndpointConfig) -> String {
    let mut out = String::new();
    out.push_str("\"gsicast\"\n{\n");
    let mut kv = |k: &str, v: &str, indent: &str| {
        let _ = writeln!(out, "{indent}\"{k}\" \"{v}\"");
    };
    kv("uri", &config.uri, "\t");
    kv("timeout", &seconds(config.timeout_s), "\t");
    kv("buffer", &seconds(config.buffer_s), "\t");
    kv("throttle", &seconds(config.throttle_s), "\t");
    kv("heartbeat", &seconds(config.heartbeat_s), "\t");
    out.push_str("\t\"data\"\n\t{\n");
    for section in DATA_SECTIONS {
        let _ = writeln!(out, "\t\t\"{section}\" \"1\"");
    }
    out.push_str("\t}\n");
    if let Some(token) = &config.auth_token {
        let _ = write!(out, "\t\"auth\"\n\t{{\n\t\t\"token\" \"{token}\"\n\t}}\n");
    }
    out.push_str("}\n");
    out
}

/// Reads a config file in the format [`emit_config_file`] writes. Missing
/// timing keys take the client fallbacks.
pub fn parse_config_file(text: &str) -> Result<EndpointConfig> {
    let tokens = tokenize(text)?;
    let mut config = EndpointConfig::client_fallbacks("");
    let mut depth = 0usize;
    let mut in_auth = false;
    let mut i = 0;
    while i < tokens.len() {
        match &tokens[i] {
            Token::Open => depth += 1,
            Token::Close => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::Config("unbalanced `}`".into()))?;
                in_auth = false;
            }
            Token::Str(key) => {
                let value = match tokens.get(i + 1) {
                    Some(Token::Str(v)) => Some(v.clone()),
                    _ => None,
                };
                match value {
                    None => in_auth = depth == 1 && key == "auth",
                    Some(v) => {
                        i += 1;
                        let num = || {
                            v.parse::<f64>()
                                .map_err(|_| Error::Config(format!("`{key}` is not a number: {v}")))
                        };
                        match (depth, key.as_str()) {
                            (1, "uri") => config.uri = v.clone(),
                            (1, "timeout") => config.timeout_s = num()?,
                            (1, "buffer") => config.buffer_s = num()?,
                            (1, "throttle") => config.throttle_s = num()?,
                            (1, "heartbeat") => config.heartbeat_s = num()?,
                            (2, "token") if in_auth => config.auth_token = Some(v.clone()),
                            _ => {}
                        }
                    }
                }
            }
        }
        i += 1;
    }
    if depth != 0 {
        return Err(Error::Config("unbalanced `{`".into()));
    }
    if config.uri.is_empty() {
        return Err(Error::Config("missing `uri`".into()));
    }
    config.validate()?;
    Ok(config)
}

#[derive(Debug)]
enum Token {
    Str(String),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' => tokens.push(Token::Open),
            '}' => tokens.push(Token::Close),
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(Error::Config("unterminated string".into())),
                    }
                }
                tokens.push(Token::Str(s));
            }
            '/' if chars.peek() == Some(&'/') => {
                for ch in chars.by_ref() {
                    if ch == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            other => return Err(Error::Config(format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_render_quoted_pairs() {
        let text = emit_config_file(&EndpointConfig::default());
        assert!(text.contains(r#""uri" "http://127.0.0.1:8080""#), "{text}");
        assert!(text.contains(r#""timeout" "5.0""#));
        assert!(text.contains(r#""buffer" "0.1""#));
        assert!(text.contains(r#""throttle" "0.1""#));
        assert!(text.contains(r#""heartbeat" "0.5""#));
        assert!(!text.contains("auth"));
    }

    #[test]
    fn emission_is_deterministic_and_parses_back() {
        let cfg = EndpointConfig {
            auth_token: Some("s3cret".into()),
            ..EndpointConfig::default()
        };
        let a = emit_config_file(&cfg);
        assert_eq!(a, emit_config_file(&cfg));
        assert_eq!(parse_config_file(&a).unwrap(), cfg);
    }

    #[test]
    fn missing_keys_take_client_fallbacks() {
        let cfg = parse_config_file("\"x\"\n{\n\t\"uri\" \"http://localhost:3000/gsi\"\n}\n").unwrap();
        assert_eq!(cfg.timeout_s, 1.1);
        assert_eq!(cfg.buffer_s, 0.1);
        assert_eq!(cfg.throttle_s, 1.0);
        assert_eq!(cfg.path(), "/gsi");
        assert_eq!(cfg.socket_addr().unwrap(), "localhost:3000");
    }

    #[test]
    fn validation() {
        let mut cfg = EndpointConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.throttle_s = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = EndpointConfig {
            uri: "http://127.0.0.1/".into(),
            ..EndpointConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EndpointConfig {
            uri: "https://127.0.0.1:443".into(),
            ..EndpointConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
