//! Parsers for oracle replies, with matching renderers used by scripted
//! backends and round-trip tests.

use std::sync::LazyLock;

use regex::Regex;

use crate::dsl::{Label, StubDecl};

/// Maximum number of suggested detectors kept from one reply.
pub const MAX_STUBS: usize = 3;

static RULE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<rule>(.*?)</rule>").unwrap());
static OBJECTS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)<objects>(.*?)</objects>").unwrap());
static FENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[^\n`]*\n(.*?)```").unwrap());
static FENCED_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"```[A-Za-z]*\s*(POSITIVE|NEGATIVE)\s*```").unwrap());
static LOOSE_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(positive|negative)\b").unwrap());

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Every nonempty `<rule>…</rule>` body, whitespace-collapsed, in order.
pub fn extract_rules(text: &str) -> Vec<String> {
    RULE.captures_iter(text)
        .map(|c| squash(&c[1]))
        .filter(|r| !r.is_empty())
        .collect()
}

pub fn render_rules(rules: &[String]) -> String {
    rules.iter().map(|r| format!("<rule>{r}</rule>")).collect::<Vec<_>>().join("\n")
}

/// Turns a free-form object name into a snake_case identifier.
pub fn snake_case(name: &str) -> String {
    let mut out = String::new();
    for c in name.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if (c.is_whitespace() || c == '-' || c == '_') && !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

/// Objects from the first `<objects>` list, capped at [`MAX_STUBS`];
/// no tags gives an empty list.
pub fn extract_objects(text: &str, doc: impl Fn(&str) -> String) -> Vec<StubDecl> {
    let Some(c) = OBJECTS.captures(text) else {
        return Vec::new();
    };
    c[1].split(',')
        .map(snake_case)
        .filter_map(|name| {
            let d = doc(&name);
            StubDecl::new(&name, &d)
        })
        .take(MAX_STUBS)
        .collect()
}

pub fn render_objects(stubs: &[StubDecl]) -> String {
    let names: Vec<&str> = stubs.iter().map(|s| s.object_name.as_str()).collect();
    format!("<objects>{}</objects>", names.join(", "))
}

/// Bodies of all fenced code blocks (an info string after the opening
/// fence is ignored), trailing whitespace removed.
pub fn extract_code_blocks(text: &str) -> Vec<String> {
    FENCE.captures_iter(text)
        .map(|c| c[1].trim_end().to_string())
        .filter(|s| !s.trim().is_empty())
        .collect()
}

pub fn render_code_block(source: &str) -> String {
    format!("```\n{}\n```", source.trim_end())
}

/// Strict mode accepts only a fenced `POSITIVE`/`NEGATIVE` (last one wins);
/// lenient mode takes the last case-insensitive occurrence of either word.
pub fn extract_label(text: &str, strict: bool) -> Option<Label> {
    let word = if strict {
        FENCED_LABEL.captures_iter(text).last().map(|c| c[1].to_string())
    } else {
        LOOSE_LABEL.captures_iter(text).last().map(|c| c[1].to_uppercase())
    }?;
    Some(if word == "POSITIVE" { Label::Positive } else { Label::Negative })
}

pub fn render_label(label: Label) -> String {
    format!("```{label}```")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        let t = "1. <rule>contains red circle</rule>\n<rule>  two\n lines </rule><rule> </rule>";
        assert_eq!(extract_rules(t), vec!["contains red circle", "two lines"]);
        assert!(extract_rules("no tags").is_empty());
    }

    #[test]
    fn objects() {
        let doc = |n: &str| format!("doc {n}");
        let s = extract_objects("Answer:\n<objects>square</objects>", doc);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].function_name(), "find_square");
        let s = extract_objects("<objects>Big Circle, line-segment, a, b, c</objects>", doc);
        let names: Vec<_> = s.iter().map(|s| s.object_name.as_str()).collect();
        assert_eq!(names, vec!["big_circle", "line_segment", "a"]);
        assert!(extract_objects("square, circle", doc).is_empty());
    }

    #[test]
    fn code_blocks() {
        let t = "Here:\n```bpdsl\nclassify_image(image) { POSITIVE }\n```\nand\n```\nx\n```";
        assert_eq!(extract_code_blocks(t), vec!["classify_image(image) { POSITIVE }", "x"]);
        assert!(extract_code_blocks("prose only").is_empty());
    }

    #[test]
    fn label_tolerance_table() {
        let cases = [
            ("```POSITIVE```", true, Some(Label::Positive)),
            ("```POSITIVE```", false, Some(Label::Positive)),
            ("Thinking... it is negative.", false, Some(Label::Negative)),
            ("Thinking... it is negative.", true, None),
            ("Positive? no: ```\nNEGATIVE\n```", true, Some(Label::Negative)),
            ("first positive then NEGATIVE", false, Some(Label::Negative)),
            ("I cannot tell", false, None),
            ("positively", false, None),
        ];
        for (text, strict, want) in cases {
            assert_eq!(extract_label(text, strict), want, "{text:?} strict={strict}");
        }
    }
}
