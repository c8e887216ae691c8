//! The closed classification language in which every candidate program is
//! written.
//!
//! A program declares its tunable parameters and then a single entry point:
//!
//! ```text
//! param length_threshold : float in (100, 2000)
//!
//! classify_image(image) {
//!   if total_ink_length(image) > length_threshold / 1000 { POSITIVE } else { NEGATIVE }
//! }
//! ```
//!
//! There is no recursion and iteration only ranges over finite primitive
//! outputs, so evaluation always terminates.

mod ast;
mod check;
mod eval;
mod grammar;
mod lexer;
mod parser;
mod types;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{BinOp, Block, Builtin, Expr, Label, Quantifier, UnOp};
pub use check::validate;
pub use eval::{evaluate, evaluate_panel, EvalError, Panel, Shape, Value};
pub use grammar::render_grammar_help;
pub use types::Type;

use crate::raster::BinaryImage;

/// Parameter values keyed by parameter name.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Int,
    Float,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Int => "int",
            ParamKind::Float => "float",
        })
    }
}

/// One tunable parameter with an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub low: f64,
    pub high: f64,
}

impl ParamSpec {
    pub fn check(&self) -> Result<(), String> {
        if !(self.low.is_finite() && self.high.is_finite()) {
            return Err(format!("range of `{}` must be finite", self.name));
        }
        if self.low >= self.high {
            return Err(format!(
                "range of `{}` is empty: low {} is not below high {}",
                self.name, self.low, self.high
            ));
        }
        if self.kind == ParamKind::Int && (self.low.fract() != 0.0 || self.high.fract() != 0.0) {
            return Err(format!("int parameter `{}` needs integer bounds", self.name));
        }
        Ok(())
    }

    /// Whether `v` is an admissible value: inside the range and integral for int kinds.
    pub fn admits(&self, v: f64) -> bool {
        v >= self.low && v <= self.high && (self.kind == ParamKind::Float || v.fract() == 0.0)
    }
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "param {} : {} in ({}, {})",
            self.name,
            self.kind,
            ast::fmt_num(self.low),
            ast::fmt_num(self.high)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    Syntax { expected: Vec<String> },
    UndeclaredIdentifier(String),
    Range { name: String },
    DuplicateDeclaration(String),
    Type,
}

/// A parse or validation problem, positioned when the source location is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub line: Option<usize>,
    pub col: Option<usize>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.col) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

/// Joins diagnostics one per line, for logs and repair prompts.
pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

/// A detector suggestion produced before synthesis: `find_<object_name>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubDecl {
    pub object_name: String,
    pub doc: String,
}

impl StubDecl {
    /// Accepts nonempty lowercase snake_case names only.
    pub fn new(object_name: &str, doc: &str) -> Option<Self> {
        let ok = !object_name.is_empty()
            && object_name.starts_with(|c: char| c.is_ascii_lowercase())
            && object_name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            && !object_name.ends_with('_')
            && !object_name.contains("__");
        ok.then(|| Self { object_name: object_name.to_string(), doc: doc.to_string() })
    }

    pub fn function_name(&self) -> String {
        format!("find_{}", self.object_name)
    }
}

/// A parsed program: declared parameters plus the entry body.
///
/// Equality compares structure only, so a program and its canonical print
/// are equal even though their source texts differ.
#[derive(Debug, Clone)]
pub struct ClassifierProgram {
    source: String,
    params: Vec<ParamSpec>,
    body: Block,
}

impl PartialEq for ClassifierProgram {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.body == other.body
    }
}

impl ClassifierProgram {
    /// Builds a program from parts; the source becomes the canonical print.
    pub fn from_parts(params: Vec<ParamSpec>, body: Block) -> Self {
        let mut p = Self { source: String::new(), params, body };
        p.source = p.to_source();
        p
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn body(&self) -> &Block {
        &self.body
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Canonical, fully parenthesised source text.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for p in &self.params {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        if !self.params.is_empty() {
            out.push('\n');
        }
        out.push_str(parser::ENTRY);
        out.push('(');
        out.push_str(parser::IMAGE);
        out.push_str(") ");
        ast::write_block(&mut out, &self.body, 0);
        out.push('\n');
        out
    }

    /// Convenience wrapper over [`evaluate`].
    pub fn classify(&self, img: &BinaryImage, bindings: &Bindings) -> Result<Label, EvalError> {
        evaluate(self, img, bindings)
    }
}

/// Parses source text. Name and range errors are collected across the whole
/// program; a syntax error stops parsing at its position.
pub fn parse_program(source: &str) -> Result<ClassifierProgram, Vec<Diagnostic>> {
    let parsed = parser::parse(source)?;
    Ok(ClassifierProgram { source: source.to_string(), params: parsed.params, body: parsed.body })
}

/// Parses and validates in one step, returning every diagnostic on failure.
pub fn compile(source: &str) -> Result<ClassifierProgram, Vec<Diagnostic>> {
    let p = parse_program(source)?;
    let diags = validate(&p);
    if diags.is_empty() {
        Ok(p)
    } else {
        Err(diags)
    }
}
