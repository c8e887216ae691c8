//! Human-readable grammar and primitive catalogue, embedded in synthesis
//! prompts so the model writes programs this crate can parse.

use std::fmt::Write as _;

use crate::raster::Metric;

use super::ast::Builtin;
use super::types::Type;

const SYNTAX: &str = "\
A program is plain text with two parts.

1. Zero or more parameter declarations, one per line:
     param <name> : int in (<low>, <high>)
     param <name> : float in (<low>, <high>)
   Bounds are inclusive and low must be below high; int bounds are whole numbers.
   Declare every threshold you want tuned instead of writing it as a literal;
   the values are fitted automatically on the training panels.

2. Exactly one entry point returning a Label:
     classify_image(image) { <block> }

A block is `{ let <name> = <expr>; ... <expr> }`: zero or more let-bindings
followed by the result expression. Expressions:
  - numbers (3, 0.25, 1e-3), true / false, POSITIVE / NEGATIVE
  - names: `image`, declared parameters, let-bound names, quantifier variables
  - arithmetic + - * / and unary minus; comparison < <= > >= == != (not chained)
  - boolean `and`, `or`, `not`
  - `if <cond> { <block> } else { <block> }` (also `else if ...`); both branches
    yield the same type
  - quantifiers over a list:
      exists x in <list> { <bool block> }      any element satisfies the body
      forall x in <list> { <bool block> }      every element satisfies the body
      count x in <list> { <bool block> }       how many elements satisfy it
      sum x in <list> { <number block> }       total of the body values
      maximum x in <list> { <number block> }   largest body value (0 when empty)
      minimum x in <list> { <number block> }   smallest body value (0 when empty)
    Binding two or three names (`exists a, b in ...`) ranges over unordered
    pairs or triples of distinct elements.
  - comments start with # or // and run to the end of the line
There are no loops, no recursion, no helper functions and no strings other than
metric names. Keywords and primitive names cannot be used as variable names.
";

/// Full grammar plus primitive catalogue; identical bytes on every call.
pub fn render_grammar_help() -> String {
    let mut out = String::from(SYNTAX);
    out.push_str("\nPrimitives (types: image, shape, point, number, bool, list<T>):\n");
    for b in Builtin::ALL {
        let args: Vec<String> = b
            .params()
            .iter()
            .map(|t| match t {
                Type::Str => "\"metric\"".to_string(),
                other => other.to_string(),
            })
            .collect();
        let _ = writeln!(out, "  {}({}) -> {}", b.name(), args.join(", "), b.returns());
        let _ = writeln!(out, "      {}", b.doc());
    }
    let metrics: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
    let _ = writeln!(out, "\nMetric names: {}.", metrics.join(", "));
    out.push_str(
        "Areas count pixels; lengths are in pixels; circularity is 4*pi*area/perimeter^2 \
         (near 1 for round figures, small for thin ones); elongation is the major/minor axis \
         ratio (1 for a square or circle); convexity is area over convex-hull area.\n",
    );
    out
}
