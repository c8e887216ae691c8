//! Shared fixtures: synthetic problem families drawn on 64×64 panels, each
//! paired with a corpus program that separates it, and a scripted oracle
//! that answers from those programs.
#![allow(dead_code)]

pub mod geometry;
pub mod threshold;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bpforge_core::dsl::Label;
use bpforge_core::oracle::extract::{render_code_block, render_label, render_rules};
use bpforge_core::oracle::{Oracle, OracleRequest, Purpose, ScriptedBackend};
use bpforge_core::raster::draw::Canvas;
use bpforge_core::raster::io::write_png;
use bpforge_core::raster::BinaryImage;
use bpforge_core::retrieval::{build_index, RagIndex};
use bpforge_core::verify::{BongardProblem, Category};
use regex::Regex;

pub const SIZE: usize = 64;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_source(id: u32) -> String {
    fs::read_to_string(corpus_dir().join(id.to_string()).join("program.bpdsl")).unwrap()
}

pub fn corpus_index() -> RagIndex {
    build_index(&corpus_dir()).unwrap()
}

/// A separable concept: panel generator plus the corpus program for it.
#[derive(Clone, Copy)]
pub struct Family {
    pub name: &'static str,
    pub corpus_id: u32,
    pub rule_pos: &'static str,
    pub rule_neg: &'static str,
    pub category: Category,
    pub draw: fn(usize, bool) -> BinaryImage,
}

impl Family {
    pub fn program(&self) -> String {
        corpus_source(self.corpus_id)
    }

    pub fn problem(&self, id: u32) -> BongardProblem {
        BongardProblem::new(
            id,
            (0..6).map(|i| (self.draw)(i, true)).collect(),
            (0..6).map(|i| (self.draw)(i, false)).collect(),
            Some(self.rule_pos.into()),
            Some(self.rule_neg.into()),
            Some(self.category),
        )
        .unwrap()
    }
}

fn canvas() -> Canvas {
    Canvas::new(SIZE, SIZE)
}

fn line_length(i: usize, pos: bool) -> BinaryImage {
    let i = i as i64;
    let mut c = canvas();
    if pos {
        // Two long strokes: thin, so the figures stay small in area.
        c.line(3, 6 + 5 * i, 58 + i % 3, 6 + 5 * i, 1);
        c.line(4 + i, 40 + 3 * i, 60, 40 + 3 * i, 1);
    } else {
        // A short stroke beside a compact blob that outweighs it in area.
        c.line(6, 6 + 8 * i, 14 + 3 * i, 6 + 8 * i, 1);
        c.fill_disk(44, 20 + 5 * i, 6 + i % 2);
    }
    c.into_image()
}

fn count(i: usize, pos: bool) -> BinaryImage {
    let s = i as i64 * 2;
    let mut c = canvas();
    if pos {
        for (x, y) in [(12 + s, 12), (48, 16 + s), (30 - s, 48)] {
            c.fill_disk(x, y, 5);
        }
    } else if i % 2 == 0 {
        // Fewer but bigger figures, so ink length does not track the count.
        c.fill_disk(20 + s / 2, 20, 12);
        c.fill_disk(44, 44 - s / 2, 12);
    } else {
        c.fill_disk(32 + s / 2, 32, 18);
    }
    c.into_image()
}

fn outline(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64;
    let mut c = canvas();
    match (pos, i % 2) {
        (true, 0) => c.ring(32, 32, 14 + k, 10 + k),
        (true, _) => c.outline_rect(14, 14, 30 + k, 30 + k, 3),
        (false, 0) => c.fill_disk(32, 32, 14 + k),
        (false, _) => c.fill_rect(14, 14, 30 + k, 30 + k),
    }
    c.into_image()
}

fn elongation(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64;
    let mut c = canvas();
    match (pos, i % 2) {
        (true, 0) => c.fill_rect(6, 26, 46 + k, 8),
        (true, _) => c.fill_rect(26, 6, 7, 46 + k),
        (false, 0) => c.fill_rect(14, 14, 34 + k, 34 + k),
        (false, _) => c.fill_disk(32, 32, 12 + k),
    }
    c.into_image()
}

fn large(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64;
    let mut c = canvas();
    if pos {
        c.fill_disk(30 + k, 32, 20 + k % 3);
    } else {
        c.fill_rect(24 + k, 26, 10 + k % 3, 10 + k % 3);
    }
    c.into_image()
}

fn right_side(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64;
    let mut c = canvas();
    let x = if pos { 48 + k % 3 } else { 14 + k % 3 };
    c.fill_disk(x, 10 + 8 * k, 6);
    c.into_image()
}

fn nesting(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64;
    let mut c = canvas();
    let big = i % 2 == 0;
    if pos {
        let (cx, r) = if big { (24 + k, 22) } else { (40 - k, 15) };
        c.ring(cx, 32, r, r - 5);
        c.fill_disk(cx - 2, 32, 4 + k % 2);
        if i % 3 != 0 {
            // A loose figure outside, so the outer-figure count varies.
            let x = if cx < 32 { 57 } else { 7 };
            c.fill_disk(x, 10 + 4 * k, 5);
        }
    } else {
        let (cx, r, dx) = if big { (40, 22, 7) } else { (20, 13, 50) };
        c.ring(cx - k % 2, 28 + k, r, r - 4);
        c.fill_disk(dx, 32, 5);
        if i % 3 == 1 {
            c.fill_disk(dx, 54, 5);
        }
    }
    c.into_image()
}

fn collinear(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64 * 2;
    let mut c = canvas();
    let dots: [(i64, i64); 3] = match (pos, i % 3) {
        (true, 0) => [(10, 20 + k), (32, 20 + k), (54, 20 + k)],
        (true, 1) => [(20 + k, 10), (20 + k, 32), (20 + k, 54)],
        (true, _) => [(10, 10 + k / 2), (30, 30 + k / 2), (50, 50 + k / 2)],
        (false, _) => [(10, 12 + k), (54, 14), (30, 52 - k)],
    };
    for (x, y) in dots {
        c.fill_disk(x, y, 3);
    }
    c.into_image()
}

fn convexity(i: usize, pos: bool) -> BinaryImage {
    let k = (i % 3) as i64;
    let mut c = canvas();
    match (pos, i % 2) {
        (true, 0) => c.fill_rect(14, 16, 32 + k, 26 + k),
        (true, _) => c.fill_disk(32, 32, 16 + k),
        (false, 0) => {
            c.fill_rect(12, 10, 12 + k, 42);
            c.fill_rect(12, 40, 40, 12 + k);
        }
        (false, _) => {
            c.fill_rect(26, 8, 12 + k, 48);
            c.fill_rect(8, 26, 48, 12 + k);
        }
    }
    c.into_image()
}

fn triangles(i: usize, pos: bool) -> BinaryImage {
    let k = i as i64;
    let shift = if i % 2 == 0 { -6 } else { 6 };
    let mut c = canvas();
    match (pos, i % 3) {
        (true, 0) => c.fill_triangle((32 + k, 6), (6, 56 - k), (58, 54)),
        (true, _) => c.fill_triangle((32 + shift, 14 + k), (16 + shift, 46), (48 + shift, 46)),
        (false, 0) => c.fill_rect(10, 10, 44 - k, 44 - k),
        (false, _) => c.fill_rect(22 + shift, 20 + k, 20, 20 + k % 2),
    }
    c.into_image()
}

pub const FAMILIES: [Family; 10] = [
    Family { name: "line_length", corpus_id: 14, rule_pos: "large total line length", rule_neg: "small total line length", category: Category::Size, draw: line_length },
    Family { name: "count", corpus_id: 23, rule_pos: "three figures", rule_neg: "one or two figures", category: Category::Number, draw: count },
    Family { name: "outline", corpus_id: 3, rule_pos: "outline figures", rule_neg: "solid figures", category: Category::Concept, draw: outline },
    Family { name: "elongation", corpus_id: 11, rule_pos: "elongated figure", rule_neg: "compact figure", category: Category::Concept, draw: elongation },
    Family { name: "large", corpus_id: 2, rule_pos: "large figures", rule_neg: "small figures", category: Category::Size, draw: large },
    Family { name: "right_side", corpus_id: 8, rule_pos: "figures on the right side", rule_neg: "figures on the left side", category: Category::Spatial, draw: right_side },
    Family { name: "nesting", corpus_id: 21, rule_pos: "figure inside another figure", rule_neg: "figures side by side", category: Category::Spatial, draw: nesting },
    Family { name: "collinear", corpus_id: 40, rule_pos: "three points collinear", rule_neg: "three points not collinear", category: Category::Spatial, draw: collinear },
    Family { name: "convexity", corpus_id: 4, rule_pos: "convex figures", rule_neg: "concave figures", category: Category::Concept, draw: convexity },
    Family { name: "triangles", corpus_id: 6, rule_pos: "triangles", rule_neg: "quadrilaterals", category: Category::Concept, draw: triangles },
];

/// Index of the family whose panels also separate under a competing rule
/// ("large total line length" explains big versus small disks equally well).
pub const AMBIGUOUS: usize = 4;

pub fn family(name: &str) -> &'static Family {
    FAMILIES.iter().find(|f| f.name == name).unwrap()
}

/// Problems 1..=10, one per family.
pub fn problems() -> Vec<BongardProblem> {
    FAMILIES.iter().enumerate().map(|(i, f)| f.problem(i as u32 + 1)).collect()
}

/// Writes problems as a directory-layout dataset.
pub fn write_dataset(root: &Path, problems: &[BongardProblem]) {
    for p in problems {
        let dir = root.join(p.id.to_string());
        fs::create_dir_all(&dir).unwrap();
        for (i, panel) in p.positives().iter().chain(p.negatives()).enumerate() {
            write_png(panel.image(), &dir.join(format!("{i}.png"))).unwrap();
        }
        if let Some(r) = &p.rule_pos {
            fs::write(dir.join("rule_pos.txt"), r).unwrap();
        }
        if let Some(r) = &p.rule_neg {
            fs::write(dir.join("rule_neg.txt"), r).unwrap();
        }
        if let Some(c) = p.category {
            fs::write(dir.join("category.txt"), c.name()).unwrap();
        }
    }
}

fn capture(re: &str, text: &str) -> Option<String> {
    Regex::new(re).unwrap().captures(text).map(|c| c[1].to_string())
}

/// Positive concept named in a synthesis, repair or labelling request.
pub fn concept_of(req: &OracleRequest) -> Option<String> {
    let all: String = req.turns.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join("\n");
    match req.purpose {
        Purpose::Synthesis => capture(r"which represent the concept (.+?)\. ", &all),
        Purpose::Repair => capture(r"positive examples of the concept (.+?) and \d+ images", &all),
        Purpose::Transduction => capture(r"corresponds to the rule (.+?), which separates", &all),
        Purpose::Stubs => capture(r"example of the positive concept (.+?) and 'NEGATIVE'", &all),
        _ => None,
    }
}

/// Hash of the first image attached to a request.
pub fn first_image(req: &OracleRequest) -> Option<String> {
    req.turns.iter().flat_map(|t| &t.images).next().map(|a| a.sha256.clone())
}

/// Hash of the last image attached to a request (the panel to label).
pub fn last_image(req: &OracleRequest) -> Option<String> {
    req.turns.iter().flat_map(|t| &t.images).last().map(|a| a.sha256.clone())
}

pub const CONSTANT_POSITIVE: &str = "classify_image(image) { POSITIVE }";

/// Scripted replies for the fixtures.
#[derive(Clone, Default)]
pub struct Script {
    /// Concept text → program sources returned for synthesis and repair.
    pub programs: HashMap<String, Vec<String>>,
    /// Synthesis requests whose first image has one of these hashes also
    /// receive a constant-POSITIVE program.
    pub inject_weak: HashSet<String>,
    /// Reply every synthesis request with prose/garbage instead of code.
    pub unparseable: bool,
    /// Panel hash → label for direct labelling; unknown panels get NEGATIVE.
    pub labels: HashMap<String, Label>,
    /// First-positive-panel hash → hypothesis list.
    pub hypotheses: HashMap<String, Vec<String>>,
    /// Fixed repair reply; by default the concept's first program.
    pub repair_reply: Option<String>,
}

/// The program with its two label branches exchanged.
pub fn flipped(source: &str) -> String {
    source.replace("{ POSITIVE } else { NEGATIVE }", "{ NEGATIVE } else { POSITIVE }")
}

/// Panel hash → true label for every panel of `problem`.
pub fn truth_labels(problem: &BongardProblem) -> HashMap<String, Label> {
    let (pos, neg) = problem.attachments();
    pos.iter()
        .map(|a| (a.sha256.clone(), Label::Positive))
        .chain(neg.iter().map(|a| (a.sha256.clone(), Label::Negative)))
        .collect()
}

impl Script {
    pub fn with_families() -> Self {
        let mut s = Self::default();
        for f in FAMILIES {
            s.programs.insert(f.rule_pos.into(), vec![f.program()]);
        }
        s
    }

    /// Family programs plus their flipped versions under the negative rules.
    pub fn with_symmetric_families() -> Self {
        let mut s = Self::with_families();
        for f in FAMILIES {
            s.programs.insert(f.rule_neg.into(), vec![flipped(&f.program())]);
        }
        s
    }

    pub fn reply(&self, req: &OracleRequest) -> String {
        let concept = concept_of(req);
        let programs = concept.as_ref().and_then(|c| self.programs.get(c));
        match req.purpose {
            Purpose::Stubs => "Answer:\n<objects>figure</objects>".into(),
            Purpose::Synthesis if self.unparseable => {
                "Here is my program:\n```\ndef classify_image(image):\n    return 'POSITIVE'\n```\nand another\n```\nclassify_image(image) { if }\n```".into()
            }
            Purpose::Synthesis => {
                let mut blocks: Vec<String> = programs.cloned().unwrap_or_default();
                if first_image(req).is_some_and(|h| self.inject_weak.contains(&h)) {
                    blocks.push(CONSTANT_POSITIVE.into());
                }
                if blocks.is_empty() {
                    return "I am not sure how to write this program.".into();
                }
                blocks.iter().map(|b| render_code_block(b)).collect::<Vec<_>>().join("\n\nAnother:\n")
            }
            Purpose::Repair => match self.repair_reply.as_ref().or(programs.and_then(|p| p.first())) {
                Some(p) => format!("Fixed:\n{}", render_code_block(p)),
                None => "I cannot fix this.".into(),
            },
            Purpose::Transduction => {
                let label = last_image(req).and_then(|h| self.labels.get(&h).copied()).unwrap_or(Label::Negative);
                format!("Thinking it over.\n{}", render_label(label))
            }
            Purpose::Hypotheses => {
                let rules = first_image(req).and_then(|h| self.hypotheses.get(&h).cloned()).unwrap_or_default();
                format!("Analysis...\n{}", render_rules(&rules))
            }
            Purpose::Solution => "<rule>unknown</rule>".into(),
        }
    }

    pub fn backend(self) -> Arc<ScriptedBackend> {
        Arc::new(ScriptedBackend::new(move |r| self.reply(r)))
    }
}

pub fn oracle(backend: Arc<ScriptedBackend>) -> Oracle {
    Oracle::offline(backend)
}
