//! Language-model providers: recorded fixtures and a chat-completion
//! endpoint, plus the FIFO rate limiter guarding remote calls.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::PromptBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProviderKind {
    /// Rule-based translation; never calls a model.
    #[default]
    Deterministic,
    /// Replays responses recorded in a JSONL fixture file.
    Mock { fixture: PathBuf },
    /// OpenAI-style chat-completion endpoint.
    Remote {
        endpoint: String,
        model: String,
        /// Environment variable holding the API key.
        key_env: String,
        #[serde(default)]
        min_interval_ms: u64,
    },
}

impl ProviderKind {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, ProviderKind::Deterministic)
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("network error: {0}")]
    Network(String),
    #[error("no fixture for prompt {key} ({template})")]
    MissingFixture { key: String, template: String },
    #[error("fixture file {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("environment variable {0} holding the API key is not set")]
    MissingKey(String),
    #[error("malformed provider response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Usage {
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    /// Usage reported by the provider, when it reports any.
    pub usage: Option<Usage>,
}

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub key: String,
    #[serde(default)]
    pub template: String,
    pub response: String,
    #[serde(default)]
    pub usage: Option<Usage>,
}

impl FixtureRecord {
    pub fn for_bundle(bundle: &PromptBundle, response: impl Into<String>, usage: Option<Usage>) -> Self {
        Self {
            key: bundle.fixture_key(),
            template: bundle.template.to_string(),
            response: response.into(),
            usage,
        }
    }
}

pub fn load_fixtures(path: &Path) -> Result<HashMap<String, FixtureRecord>, ProviderError> {
    let bad = |message: String| ProviderError::Fixture {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: FixtureRecord = serde_json::from_str(line).map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
        out.insert(rec.key.clone(), rec);
    }
    Ok(out)
}

/// Serves callers strictly in arrival order, at most one call per interval.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    state: Mutex<LimiterState>,
    turn: Condvar,
}

#[derive(Debug, Default)]
struct LimiterState {
    next_ticket: u64,
    serving: u64,
    last: Option<Instant>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        Self {
            interval,
            state: Mutex::new(LimiterState::default()),
            turn: Condvar::new(),
        }
    }

    /// Blocks until this caller's turn; returns its ticket number.
    pub fn acquire(&self) -> u64 {
        let mut st = self.state.lock().expect("limiter lock");
        let ticket = st.next_ticket;
        st.next_ticket += 1;
        while st.serving != ticket {
            st = self.turn.wait(st).expect("limiter lock");
        }
        if let Some(last) = st.last {
            let ready = last + self.interval;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
        st.last = Some(Instant::now());
        st.serving += 1;
        self.turn.notify_all();
        ticket
    }
}

#[derive(Debug)]
pub struct Provider {
    kind: ProviderKind,
    fixtures: HashMap<String, FixtureRecord>,
    limiter: RateLimiter,
}

impl Provider {
    pub fn new(kind: &ProviderKind) -> Result<Self, ProviderError> {
        let (fixtures, interval) = match kind {
            ProviderKind::Mock { fixture } => (load_fixtures(fixture)?, 0),
            ProviderKind::Remote { min_interval_ms, .. } => (HashMap::new(), *min_interval_ms),
            ProviderKind::Deterministic => (HashMap::new(), 0),
        };
        Ok(Self {
            kind: kind.clone(),
            fixtures,
            limiter: RateLimiter::new(Duration::from_millis(interval)),
        })
    }

    pub fn kind(&self) -> &ProviderKind {
        &self.kind
    }
}

/// Sends `bundle` to the configured model.
///
/// # Panics
/// When the provider is deterministic: that mode never consults a model.
pub fn provider_call(bundle: &PromptBundle, provider: &Provider, temperature: f64) -> Result<Completion, ProviderError> {
    match &provider.kind {
        ProviderKind::Deterministic => panic!("deterministic provider asked to answer a {} prompt", bundle.template),
        ProviderKind::Mock { .. } => {
            let key = bundle.fixture_key();
            let rec = provider.fixtures.get(&key).ok_or_else(|| ProviderError::MissingFixture {
                key,
                template: bundle.template.to_string(),
            })?;
            Ok(Completion {
                text: rec.response.clone(),
                usage: rec.usage,
            })
        }
        ProviderKind::Remote {
            endpoint, model, key_env, ..
        } => {
            let key = std::env::var(key_env).map_err(|_| ProviderError::MissingKey(key_env.clone()))?;
            provider.limiter.acquire();
            remote_call(endpoint, model, &key, bundle, temperature)
        }
    }
}

fn remote_call(endpoint: &str, model: &str, key: &str, bundle: &PromptBundle, temperature: f64) -> Result<Completion, ProviderError> {
    let messages: Vec<Value> = bundle
        .messages
        .iter()
        .map(|m| json!({"role": m.role.name(), "content": m.text}))
        .collect();
    let body = json!({"model": model, "messages": messages, "temperature": temperature});
    let url = format!("{}/chat/completions", endpoint.trim_end_matches('/'));
    let mut resp = ureq::post(&url)
        .header("Authorization", &format!("Bearer {key}"))
        .send_json(&body)
        .map_err(|e| ProviderError::Network(e.to_string()))?;
    let v: Value = resp
        .body_mut()
        .read_json()
        .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
    parse_chat_response(&v)
}

/// Extracts the first choice and the usage block of a chat-completion reply.
pub fn parse_chat_response(v: &Value) -> Result<Completion, ProviderError> {
    let text = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| ProviderError::BadResponse("no choices[0].message.content".into()))?;
    let usage = match (v["usage"]["prompt_tokens"].as_u64(), v["usage"]["completion_tokens"].as_u64()) {
        (Some(p), Some(c)) => Some(Usage {
            prompt_tokens: p as usize,
            completion_tokens: c as usize,
        }),
        _ => None,
    };
    Ok(Completion {
        text: text.to_string(),
        usage,
    })
}

/// Body of the first fenced code block in `text`, or all of `text`.
pub fn extract_code(text: &str) -> String {
    let Some(start) = text.find("```") else {
        return text.trim().to_string() + "\n";
    };
    let after = &text[start + 3..];
    let body = after.split_once('\n').map(|(_, b)| b).unwrap_or("");
    let end = body.find("```").unwrap_or(body.len());
    let code = body[..end].trim_end();
    format!("{code}\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::prompt::{assemble_with_code, TemplateId};
    use std::io::Write;
    use std::sync::Arc;

    #[test]
    fn mock_replays_by_key() {
        let bundle = assemble_with_code(TemplateId::SelfReflection, "def f(x: sfix):\n    return x").unwrap();
        let other = assemble_with_code(TemplateId::SelfReflection, "def g(): pass").unwrap();
        let rec = FixtureRecord::for_bundle(&bundle, "```MP-SPDZ\nok\n```", Some(Usage { prompt_tokens: 7, completion_tokens: 2 }));
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "{}", serde_json::to_string(&rec).unwrap()).unwrap();
        let p = Provider::new(&ProviderKind::Mock {
            fixture: file.path().to_path_buf(),
        })
        .unwrap();
        let c = provider_call(&bundle, &p, 0.7).unwrap();
        assert_eq!(extract_code(&c.text), "ok\n");
        assert_eq!(c.usage.unwrap().prompt_tokens, 7);
        assert!(matches!(provider_call(&other, &p, 0.7), Err(ProviderError::MissingFixture { .. })));
    }

    #[test]
    #[should_panic(expected = "deterministic provider")]
    fn deterministic_never_calls() {
        let bundle = assemble_with_code(TemplateId::SelfReflection, "x").unwrap();
        let p = Provider::new(&ProviderKind::Deterministic).unwrap();
        let _ = provider_call(&bundle, &p, 0.0);
    }

    #[test]
    fn remote_without_key_fails_before_network() {
        let bundle = assemble_with_code(TemplateId::SelfReflection, "x").unwrap();
        let p = Provider::new(&ProviderKind::Remote {
            endpoint: "http://127.0.0.1:9".into(),
            model: "m".into(),
            key_env: "PYSPDZ_TEST_KEY_THAT_IS_NOT_SET".into(),
            min_interval_ms: 0,
        })
        .unwrap();
        assert!(matches!(provider_call(&bundle, &p, 0.0), Err(ProviderError::MissingKey(_))));
    }

    #[test]
    fn missing_fixture_file_is_reported() {
        let err = Provider::new(&ProviderKind::Mock {
            fixture: "/nonexistent/fixture.jsonl".into(),
        })
        .unwrap_err();
        assert!(matches!(err, ProviderError::Fixture { .. }));
    }

    #[test]
    fn chat_response_parsing() {
        let v = json!({"choices": [{"message": {"content": "hi"}}], "usage": {"prompt_tokens": 3, "completion_tokens": 1}});
        let c = parse_chat_response(&v).unwrap();
        assert_eq!(c.text, "hi");
        assert_eq!(c.usage, Some(Usage { prompt_tokens: 3, completion_tokens: 1 }));
        assert!(parse_chat_response(&json!({})).is_err());
    }

    #[test]
    fn code_extraction() {
        assert_eq!(extract_code("Here:\n```python\nx = 1\ny = 2\n```\nDone."), "x = 1\ny = 2\n");
        assert_eq!(extract_code("x = 1"), "x = 1\n");
    }

    #[test]
    fn limiter_serves_in_arrival_order() {
        let lim = Arc::new(RateLimiter::new(Duration::from_millis(2)));
        let order = Arc::new(Mutex::new(Vec::new()));
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let (lim, order) = (lim.clone(), order.clone());
                std::thread::spawn(move || {
                    let t = lim.acquire();
                    order.lock().unwrap().push(t);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let got = order.lock().unwrap().clone();
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn limiter_spaces_calls() {
        let lim = RateLimiter::new(Duration::from_millis(20));
        let t0 = Instant::now();
        for _ in 0..3 {
            lim.acquire();
        }
        assert!(t0.elapsed() >= Duration::from_millis(40));
    }
}
