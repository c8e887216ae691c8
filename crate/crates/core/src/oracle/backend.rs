//! Chat backends: scripted (tests), replay (offline fixtures), recording
//! (wraps any backend and persists every exchange) and live HTTP.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{OracleError, OracleRequest, Purpose, Role};

/// Name of the response cache inside a cache directory.
pub const CACHE_FILE: &str = "responses.jsonl";

static LIVE_REQUESTS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests attempted by live backends in this process.
pub fn live_request_count() -> u64 {
    LIVE_REQUESTS.load(Ordering::SeqCst)
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &OracleRequest) -> Result<String, OracleError>;

    /// Whether calls leave the process (and so deserve throttling).
    fn is_remote(&self) -> bool {
        false
    }
}

type Responder = dyn Fn(&OracleRequest) -> Result<String, OracleError> + Send + Sync;

/// Deterministic in-process responder that logs every request it serves.
pub struct ScriptedBackend {
    responder: Box<Responder>,
    log: Mutex<Vec<OracleRequest>>,
}

impl ScriptedBackend {
    pub fn new(f: impl Fn(&OracleRequest) -> String + Send + Sync + 'static) -> Self {
        Self::fallible(move |r| Ok(f(r)))
    }

    pub fn fallible(f: impl Fn(&OracleRequest) -> Result<String, OracleError> + Send + Sync + 'static) -> Self {
        Self { responder: Box::new(f), log: Mutex::new(Vec::new()) }
    }

    pub fn requests(&self) -> Vec<OracleRequest> {
        self.log.lock().unwrap().clone()
    }

    pub fn count(&self, purpose: Purpose) -> usize {
        self.log.lock().unwrap().iter().filter(|r| r.purpose == purpose).count()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &OracleRequest) -> Result<String, OracleError> {
        self.log.lock().unwrap().push(req.clone());
        (self.responder)(req)
    }
}

/// One persisted exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub hash: String,
    pub purpose: Purpose,
    pub prompt_digest: String,
    pub temperature: f64,
    pub response: String,
    pub timestamp: u64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> OracleError {
    OracleError::Io(format!("{}: {e}", path.display()))
}

/// Reads a cache file; later records for the same hash win. A missing file
/// is an empty cache.
fn read_cache(path: &Path) -> Result<HashMap<String, String>, OracleError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: CacheRecord =
            serde_json::from_str(line).map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))?;
        map.insert(rec.hash, rec.response);
    }
    Ok(map)
}

/// Serves recorded responses only; never touches the network.
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn open(cache_dir: &Path) -> Result<Self, OracleError> {
        Ok(Self { responses: read_cache(&cache_dir.join(CACHE_FILE))? })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, req: &OracleRequest) -> Result<String, OracleError> {
        let hash = req.cache_key();
        self.responses.get(&hash).cloned().ok_or(OracleError::MissingFixture { hash })
    }
}

/// Wraps a backend, answering from the cache when possible and appending
/// every new exchange to it.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    state: Mutex<(HashMap<String, String>, File)>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, cache_dir: &Path) -> Result<Self, OracleError> {
        fs::create_dir_all(cache_dir).map_err(|e| io_err(cache_dir, e))?;
        let path = cache_dir.join(CACHE_FILE);
        let known = read_cache(&path)?;
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| io_err(&path, e))?;
        Ok(Self { inner, path, state: Mutex::new((known, file)) })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, req: &OracleRequest) -> Result<String, OracleError> {
        let hash = req.cache_key();
        if let Some(r) = self.state.lock().unwrap().0.get(&hash) {
            return Ok(r.clone());
        }
        let response = self.inner.complete(req)?;
        let rec = CacheRecord {
            hash: hash.clone(),
            purpose: req.purpose,
            prompt_digest: req.prompt_digest(),
            temperature: req.temperature,
            response: response.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let mut line = serde_json::to_string(&rec).map_err(|e| io_err(&self.path, e))?;
        line.push('\n');
        let mut state = self.state.lock().unwrap();
        state.1.write_all(line.as_bytes()).map_err(|e| io_err(&self.path, e))?;
        state.1.flush().map_err(|e| io_err(&self.path, e))?;
        Ok(state.0.entry(hash).or_insert(response).clone())
    }

    fn is_remote(&self) -> bool {
        self.inner.is_remote()
    }
}

/// Chat-completion endpoint configured from the environment:
/// `BPFORGE_API_BASE`, `BPFORGE_API_KEY`, `BPFORGE_MODEL`.
pub struct HttpBackend {
    base: String,
    key: String,
    model: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub const DEFAULT_BASE: &'static str = "https://api.openai.com/v1";
    pub const DEFAULT_MODEL: &'static str = "gpt-4o";

    pub fn new(base: &str, key: &str, model: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { base: base.trim_end_matches('/').to_string(), key: key.to_string(), model: model.to_string(), agent }
    }

    pub fn from_env() -> Result<Self, OracleError> {
        let key = std::env::var("BPFORGE_API_KEY")
            .map_err(|_| OracleError::Unavailable("BPFORGE_API_KEY is not set".into()))?;
        let base = std::env::var("BPFORGE_API_BASE").unwrap_or_else(|_| Self::DEFAULT_BASE.into());
        let model = std::env::var("BPFORGE_MODEL").unwrap_or_else(|_| Self::DEFAULT_MODEL.into());
        Ok(Self::new(&base, &key, &model, Duration::from_secs(300)))
    }

    /// Request body in the common chat-completions shape.
    pub fn body(&self, req: &OracleRequest) -> serde_json::Value {
        let messages: Vec<_> = req
            .turns
            .iter()
            .map(|t| {
                let role = match t.role {
                    Role::User => "user",
                    Role::System => "system",
                    Role::Assistant => "assistant",
                };
                if t.images.is_empty() {
                    return serde_json::json!({ "role": role, "content": t.text });
                }
                let mut parts = vec![serde_json::json!({ "type": "text", "text": t.text })];
                for a in &t.images {
                    let url = format!(
                        "data:image/png;base64,{}",
                        base64::engine::general_purpose::STANDARD.encode(&a.png)
                    );
                    parts.push(serde_json::json!({ "type": "image_url", "image_url": { "url": url } }));
                }
                serde_json::json!({ "role": role, "content": parts })
            })
            .collect();
        serde_json::json!({
            "model": self.model,
            "temperature": req.temperature,
            "seed": req.seed_hint,
            "messages": messages,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &OracleRequest) -> Result<String, OracleError> {
        LIVE_REQUESTS.fetch_add(1, Ordering::SeqCst);
        let url = format!("{}/chat/completions", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(self.body(req))
            .map_err(|e| OracleError::Network(e.to_string()))?;
        let v: serde_json::Value =
            resp.body_mut().read_json().map_err(|e| OracleError::Network(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| OracleError::Network(format!("unexpected response shape: {v}")))
    }

    fn is_remote(&self) -> bool {
        true
    }
}
