//! Chat-oracle abstraction: request types, backends, a rate-limited gateway
//! and the high-level operations the verifier needs (hypotheses, detector
//! stubs, program synthesis, repair, direct labelling).

pub mod backend;
pub mod extract;
pub mod gateway;
pub mod prompts;

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::{compile, format_diagnostics, Label, StubDecl};
use crate::raster::io::encode_png;
use crate::raster::BinaryImage;
use crate::retrieval::ExampleEntry;

pub use backend::{
    live_request_count, CacheRecord, ChatBackend, HttpBackend, RecordingBackend, ReplayBackend,
    ScriptedBackend, CACHE_FILE,
};
pub use gateway::{Gateway, GatewayConfig};
pub use prompts::FailureReport;

/// Rules requested per hypothesis call.
pub const RULES_PER_CALL: usize = 6;
/// Curriculum rules shown per hypothesis call.
pub const CURRICULUM_SHOWN: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("oracle unavailable: {0}")]
    Unavailable(String),
    #[error("no recorded response for request {hash}")]
    MissingFixture { hash: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("repair response contained no code block")]
    RepairFailed,
    #[error("response names neither label")]
    AmbiguousLabel,
    #[error("no hypotheses could be extracted")]
    NoHypotheses,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
    Assistant,
}

/// A PNG-encoded panel with its content hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub sha256: String,
    pub png: Arc<[u8]>,
}

impl Attachment {
    pub fn from_png(png: Vec<u8>) -> Self {
        Self { sha256: hex::encode(Sha256::digest(&png)), png: png.into() }
    }

    pub fn from_image(img: &BinaryImage) -> Self {
        Self::from_png(encode_png(img))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatTurn {
    pub role: Role,
    pub text: String,
    pub images: Vec<Attachment>,
}

impl ChatTurn {
    pub fn user(text: impl Into<String>, images: Vec<Attachment>) -> Self {
        Self { role: Role::User, text: text.into(), images }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self { role: Role::Assistant, text: text.into(), images: Vec::new() }
    }

    pub fn check(&self) -> Result<(), String> {
        if !self.images.is_empty() && self.role != Role::User {
            return Err("images are only allowed on user turns".into());
        }
        if self.text.trim().is_empty() && self.images.is_empty() {
            return Err("turn has neither text nor images".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    Hypotheses,
    Stubs,
    Synthesis,
    Repair,
    Transduction,
    Solution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRequest {
    pub turns: Vec<ChatTurn>,
    pub temperature: f64,
    pub purpose: Purpose,
    pub seed_hint: u64,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl OracleRequest {
    pub fn check(&self) -> Result<(), OracleError> {
        if self.turns.is_empty() {
            return Err(OracleError::InvalidRequest("request has no turns".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(OracleError::InvalidRequest(format!("temperature {} out of range", self.temperature)));
        }
        for t in &self.turns {
            t.check().map_err(OracleError::InvalidRequest)?;
        }
        Ok(())
    }

    /// Content hash of what the request means: roles, whitespace-normalised
    /// texts, image hashes, purpose and temperature. The seed hint is not
    /// part of it.
    pub fn cache_key(&self) -> String {
        let turns: Vec<_> = self
            .turns
            .iter()
            .map(|t| {
                serde_json::json!({
                    "role": t.role,
                    "text": squash(&t.text),
                    "images": t.images.iter().map(|a| a.sha256.as_str()).collect::<Vec<_>>(),
                })
            })
            .collect();
        let canonical = serde_json::json!({
            "purpose": self.purpose,
            "temperature": format!("{:.3}", self.temperature),
            "turns": turns,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Hash of the exact prompt bytes, for spotting template drift in logs.
    pub fn prompt_digest(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.turns {
            h.update(format!("{:?}\n{}\n", t.role, t.text).as_bytes());
            for a in &t.images {
                h.update(a.sha256.as_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Human-readable rendering (images shown by hash) used by snapshot tests.
    pub fn transcript(&self) -> String {
        let mut out = format!("purpose: {:?}\ntemperature: {:.3}\n", self.purpose, self.temperature);
        for t in &self.turns {
            let role = match t.role {
                Role::User => "user",
                Role::System => "system",
                Role::Assistant => "assistant",
            };
            out.push_str(&format!("----- {role} -----\n{}\n", t.text));
            for a in &t.images {
                out.push_str(&format!("[image sha256:{}]\n", a.sha256));
            }
        }
        out
    }
}

/// Sampling temperature per request family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Temperatures {
    pub hypotheses: f64,
    pub code: f64,
    pub transduction: f64,
}

impl Default for Temperatures {
    fn default() -> Self {
        Self { hypotheses: 1.0, code: 0.5, transduction: 0.0 }
    }
}

/// Labelled in-context images for one request: positives then negatives.
#[derive(Debug, Clone, Copy)]
pub struct Shots<'a> {
    pub positives: &'a [Attachment],
    pub negatives: &'a [Attachment],
}

/// High-level oracle operations over a gateway.
#[derive(Clone)]
pub struct Oracle {
    gateway: Arc<Gateway>,
    pub temperatures: Temperatures,
    pub strict_labels: bool,
}

impl Oracle {
    pub fn new(gateway: Gateway, temperatures: Temperatures) -> Self {
        Self { gateway: Arc::new(gateway), temperatures, strict_labels: false }
    }

    /// Unthrottled oracle over a backend; convenient for offline backends.
    pub fn offline(backend: Arc<dyn ChatBackend>) -> Self {
        Self::new(Gateway::new(backend, GatewayConfig::unlimited()), Temperatures::default())
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    fn ask(&self, turns: Vec<ChatTurn>, purpose: Purpose, temperature: f64, seed: u64) -> Result<String, OracleError> {
        self.gateway.complete(&OracleRequest { turns, temperature, purpose, seed_hint: seed })
    }

    /// Two calls, one showing the most recent curriculum rules and one
    /// showing a seeded random sample of them; at most `2 * n_rules`
    /// distinct rules (case-insensitive), in order of appearance.
    pub fn generate_hypotheses(
        &self,
        shots: Shots<'_>,
        curriculum: &[(u32, String)],
        n_rules: usize,
        seed: u64,
    ) -> Result<Vec<String>, OracleError> {
        let recent: Vec<String> = curriculum
            .iter()
            .rev()
            .take(CURRICULUM_SHOWN)
            .rev()
            .map(|(_, r)| r.clone())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random: Vec<&(u32, String)> = curriculum.choose_multiple(&mut rng, CURRICULUM_SHOWN).collect();
        random.sort_by_key(|(id, _)| *id);
        let random: Vec<String> = random.into_iter().map(|(_, r)| r.clone()).collect();

        let mut seen = HashSet::new();
        let mut rules = Vec::new();
        for (i, examples) in [recent, random].iter().enumerate() {
            let turns = prompts::hypothesis_prompt(shots.positives, shots.negatives, examples, n_rules);
            let reply = self.ask(turns, Purpose::Hypotheses, self.temperatures.hypotheses, crate::seed::split(seed, i as u64 + 1))?;
            for r in extract::extract_rules(&reply) {
                if rules.len() < 2 * n_rules && seen.insert(r.to_lowercase()) {
                    rules.push(r);
                }
            }
        }
        if rules.is_empty() {
            return Err(OracleError::NoHypotheses);
        }
        Ok(rules)
    }

    pub fn suggest_method_stubs(&self, rule: &str, seed: u64) -> Result<Vec<StubDecl>, OracleError> {
        let reply = self.ask(prompts::stubs_prompt(rule), Purpose::Stubs, self.temperatures.code, seed)?;
        Ok(extract::extract_objects(&reply, prompts::stub_doc))
    }

    /// Requests `n` programs; returns at most `n` sources that compile.
    #[allow(clippy::too_many_arguments)]
    pub fn synthesize_programs(
        &self,
        rule_pos: &str,
        rule_neg: &str,
        shots: Shots<'_>,
        stubs: &[StubDecl],
        example: Option<&ExampleEntry>,
        n: usize,
        seed: u64,
    ) -> Result<Vec<String>, OracleError> {
        if n == 0 {
            return Err(OracleError::InvalidRequest("n must be at least 1".into()));
        }
        let turns = prompts::synthesis_prompt(rule_pos, rule_neg, shots.positives, shots.negatives, stubs, example, n);
        let reply = self.ask(turns, Purpose::Synthesis, self.temperatures.code, seed)?;
        let mut sources = Vec::new();
        for block in extract::extract_code_blocks(&reply) {
            match compile(&block) {
                Ok(_) => sources.push(block),
                Err(d) => log::warn!("dropping synthesized program: {}", format_diagnostics(&d).replace('\n', "; ")),
            }
            if sources.len() == n {
                break;
            }
        }
        Ok(sources)
    }

    /// First fenced block of the repair reply.
    pub fn request_repair(
        &self,
        source: &str,
        failure: &FailureReport,
        rule_pos: &str,
        seed: u64,
    ) -> Result<String, OracleError> {
        let reply = self.ask(prompts::repair_prompt(source, failure, rule_pos), Purpose::Repair, self.temperatures.code, seed)?;
        extract::extract_code_blocks(&reply).into_iter().next().ok_or(OracleError::RepairFailed)
    }

    pub fn transduce_label(
        &self,
        shots: Shots<'_>,
        test: &Attachment,
        rule_pos: &str,
        rule_neg: &str,
        seed: u64,
    ) -> Result<Label, OracleError> {
        let turns = prompts::transduction_prompt(rule_pos, rule_neg, shots.positives, shots.negatives, test);
        let reply = self.ask(turns, Purpose::Transduction, self.temperatures.transduction, seed)?;
        extract::extract_label(&reply, self.strict_labels).ok_or(OracleError::AmbiguousLabel)
    }

    /// Direct rule inference from all images (the comparison baseline).
    pub fn baseline_solution(&self, shots: Shots<'_>, seed: u64) -> Result<String, OracleError> {
        let turns = prompts::baseline_solution_prompt(shots.positives, shots.negatives);
        let reply = self.ask(turns, Purpose::Solution, self.temperatures.hypotheses, seed)?;
        if let Some(r) = extract::extract_rules(&reply).into_iter().last() {
            return Ok(r);
        }
        reply
            .lines()
            .map(str::trim)
            .rfind(|l| !l.is_empty())
            .map(str::to_string)
            .ok_or(OracleError::NoHypotheses)
    }
}
