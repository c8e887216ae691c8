//! Run configuration: defaults, flat key/value file format and digest.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::optimize::OptBudget;
use crate::oracle::{Temperatures, RULES_PER_CALL};
use crate::verify::{VerifyConfig, ACCEPT_THRESHOLD};

/// Programs sampled per rule in the verification task.
pub const PROGRAMS_PER_RULE: usize = 10;
/// Programs sampled per rule when scoring hypotheses in the solution task.
pub const PROGRAMS_PER_RULE_SOLVE: usize = 5;
/// Bayesian-optimisation evaluations per program.
pub const BO_EVALS: usize = 15;
/// Space-filling evaluations before the surrogate takes over.
pub const BO_INIT: usize = 5;
/// Sampling temperature for rule hypotheses.
pub const TEMPERATURE_RULES: f64 = 1.0;
/// Sampling temperature for code (synthesis, repair, detector stubs).
pub const TEMPERATURE_CODE: f64 = 0.5;
/// Sampling temperature for direct labelling.
pub const TEMPERATURE_LABEL: f64 = 0.0;
/// Default first and last problem of the solution task.
pub const SOLVE_RANGE: ProblemRange = ProblemRange { first: 2, last: 100 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Verify,
    Solve,
    Invert,
    /// Direct rule inference by the oracle alone (comparison baseline).
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Replay,
    Scripted,
}

macro_rules! keyword_enum {
    ($t:ty, $($v:ident => $s:literal),+) => {
        impl $t {
            pub fn name(self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($s => Ok(Self::$v),)+
                    other => Err(format!("unknown value `{other}` (expected one of: {})", [$($s),+].join(", "))),
                }
            }
        }
    };
}

keyword_enum!(Task, Verify => "verify", Solve => "solve", Invert => "invert", Eval => "eval");
keyword_enum!(BackendKind, Live => "live", Replay => "replay", Scripted => "scripted");

/// Inclusive span of problem ids, written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemRange {
    pub first: u32,
    pub last: u32,
}

impl ProblemRange {
    pub fn contains(&self, id: u32) -> bool {
        (self.first..=self.last).contains(&id)
    }
}

impl fmt::Display for ProblemRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl FromStr for ProblemRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("invalid problem range `{s}` (expected `a..b` or a single id)");
        let (a, b) = s.trim().split_once("..").unwrap_or((s.trim(), s.trim()));
        let first: u32 = a.trim().parse().map_err(|_| bad())?;
        let last: u32 = b.trim().parse().map_err(|_| bad())?;
        if first > last {
            return Err(bad());
        }
        Ok(Self { first, last })
    }
}

impl Serialize for ProblemRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProblemRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything that determines a run. The config file is a flat TOML table
/// with these keys; unspecified keys keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub n_programs: usize,
    pub n_programs_solve: usize,
    pub n_rules: usize,
    pub bo_evals: usize,
    pub bo_init: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub cache: Option<PathBuf>,
    pub problems: Option<ProblemRange>,
    pub binarize_threshold: u8,
    pub accept_threshold: f64,
    pub repair_below: f64,
    pub cot_fallback: bool,
    pub temperature_rules: f64,
    pub temperature_code: f64,
    pub temperature_label: f64,
    pub parallel: bool,
    pub max_in_flight: usize,
    pub requests_per_second: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Verify,
            n_programs: PROGRAMS_PER_RULE,
            n_programs_solve: PROGRAMS_PER_RULE_SOLVE,
            n_rules: RULES_PER_CALL,
            bo_evals: BO_EVALS,
            bo_init: BO_INIT,
            seed: 0,
            backend: BackendKind::Replay,
            cache: None,
            problems: None,
            binarize_threshold: 127,
            accept_threshold: ACCEPT_THRESHOLD,
            repair_below: 1.0,
            cot_fallback: true,
            temperature_rules: TEMPERATURE_RULES,
            temperature_code: TEMPERATURE_CODE,
            temperature_label: TEMPERATURE_LABEL,
            parallel: true,
            max_in_flight: 4,
            requests_per_second: 1.0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), String> {
        if self.n_programs == 0 || self.n_programs_solve == 0 || self.n_rules == 0 {
            return Err("program and rule counts must be positive".into());
        }
        OptBudget::new(self.bo_evals, self.bo_init).map_err(|e| e.to_string())?;
        for (name, t) in [
            ("temperature_rules", self.temperature_rules),
            ("temperature_code", self.temperature_code),
            ("temperature_label", self.temperature_label),
        ] {
            if !(0.0..=2.0).contains(&t) {
                return Err(format!("{name} must lie in [0, 2]"));
            }
        }
        if !(0.0..=1.0).contains(&self.accept_threshold) || !(0.0..=1.0).contains(&self.repair_below) {
            return Err("thresholds must lie in [0, 1]".into());
        }
        if self.max_in_flight == 0 || self.requests_per_second <= 0.0 {
            return Err("max_in_flight and requests_per_second must be positive".into());
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Temperatures {
        Temperatures {
            hypotheses: self.temperature_rules,
            code: self.temperature_code,
            transduction: self.temperature_label,
        }
    }

    /// Pipeline settings for the configured task.
    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            n_programs: if self.task == Task::Solve { self.n_programs_solve } else { self.n_programs },
            budget: OptBudget { total_evals: self.bo_evals, init_design: self.bo_init },
            accept_threshold: self.accept_threshold,
            repair_below: self.repair_below,
            cot_fallback: self.cot_fallback,
            n_rules: self.n_rules,
            parallel: self.parallel,
        }
    }

    /// Problems the run covers when no range is given.
    pub fn effective_range(&self) -> Option<ProblemRange> {
        self.problems.or((self.task == Task::Solve).then_some(SOLVE_RANGE))
    }

    /// Hash of the fields that can change results. Backend, cache location,
    /// parallelism and rate limits are excluded.
    pub fn digest(&self) -> String {
        let semantic = serde_json::json!({
            "task": self.task,
            "n_programs": self.n_programs,
            "n_programs_solve": self.n_programs_solve,
            "n_rules": self.n_rules,
            "bo_evals": self.bo_evals,
            "bo_init": self.bo_init,
            "seed": self.seed,
            "problems": self.effective_range().map(|r| r.to_string()),
            "binarize_threshold": self.binarize_threshold,
            "accept_threshold": self.accept_threshold,
            "repair_below": self.repair_below,
            "cot_fallback": self.cot_fallback,
            "temperature_rules": self.temperature_rules,
            "temperature_code": self.temperature_code,
            "temperature_label": self.temperature_label,
        });
        hex::encode(Sha256::digest(semantic.to_string().as_bytes()))[..16].to_string()
    }
}
