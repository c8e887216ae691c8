use std::fmt::{self, Write as _};

use super::types::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

/// Finite iteration forms over a list. With two or three bound names the
/// body ranges over unordered pairs or triples of distinct positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
    Count,
    Sum,
    Maximum,
    Minimum,
}

impl Quantifier {
    pub const ALL: [Quantifier; 6] = [
        Quantifier::Exists,
        Quantifier::Forall,
        Quantifier::Count,
        Quantifier::Sum,
        Quantifier::Maximum,
        Quantifier::Minimum,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
            Quantifier::Count => "count",
            Quantifier::Sum => "sum",
            Quantifier::Maximum => "maximum",
            Quantifier::Minimum => "minimum",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.keyword() == s)
    }
}

macro_rules! builtins {
    ($( $variant:ident => $name:literal ( $($arg:expr),* ) -> $ret:expr, $doc:literal; )*) => {
        /// Primitive operations callable from programs.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Builtin { $($variant),* }

        impl Builtin {
            pub const ALL: &'static [Builtin] = &[$(Builtin::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Builtin::$variant => $name),* }
            }

            pub fn params(self) -> Vec<Type> {
                match self { $(Builtin::$variant => vec![$($arg),*]),* }
            }

            pub fn returns(self) -> Type {
                match self { $(Builtin::$variant => $ret),* }
            }

            pub fn doc(self) -> &'static str {
                match self { $(Builtin::$variant => $doc),* }
            }
        }
    };
}

builtins! {
    Shapes => "shapes"(Type::Image) -> Type::list(Type::Shape),
        "outer figures: 8-connected ink regions not nested inside another figure, ordered top-to-bottom then left-to-right";
    Components => "components"(Type::Image) -> Type::list(Type::Shape),
        "every 8-connected ink region, including ones nested inside another figure";
    Points => "points"(Type::Image) -> Type::list(Type::Point),
        "centre of mass of each outer figure, truncated to whole pixels, in figure order";
    TotalInkLength => "total_ink_length"(Type::Image) -> Type::Num,
        "half the open boundary length of every outer figure, summed and divided by the panel diagonal (one full-width stroke in a square panel is about 0.707)";
    InkFraction => "ink_fraction"(Type::Image) -> Type::Num,
        "fraction of panel pixels that are ink, 0..1";
    ImageWidth => "image_width"(Type::Image) -> Type::Num, "panel width in pixels";
    ImageHeight => "image_height"(Type::Image) -> Type::Num, "panel height in pixels";
    Len => "len"(Type::AnyList) -> Type::Num, "number of elements in a list";
    Measure => "measure"(Type::Shape, Type::Str) -> Type::Num,
        "scalar property of a figure; the second argument is a quoted metric name from the list below";
    Holes => "holes"(Type::Shape) -> Type::Num, "number of enclosed background regions inside a figure";
    Corners => "corners"(Type::Shape, Type::Num) -> Type::Num,
        "vertex count of the figure outline simplified with the given tolerance in pixels (a triangle gives 3)";
    BboxWidth => "bbox_width"(Type::Shape) -> Type::Num, "width of the figure's bounding box";
    BboxHeight => "bbox_height"(Type::Shape) -> Type::Num, "height of the figure's bounding box";
    Centroid => "centroid"(Type::Shape) -> Type::Point, "centre of mass of the filled figure";
    PointX => "point_x"(Type::Point) -> Type::Num, "horizontal coordinate (grows rightwards)";
    PointY => "point_y"(Type::Point) -> Type::Num, "vertical coordinate (grows downwards)";
    Distance => "distance"(Type::Point, Type::Point) -> Type::Num, "Euclidean separation of two locations, in pixels";
    Collinear => "collinear"(Type::list(Type::Point), Type::Num) -> Type::Bool,
        "true when some triple of the listed locations has one lying within the given tolerance (pixels) of the line through the other two; false for fewer than three";
    Abs => "abs"(Type::Num) -> Type::Num, "absolute value";
    Sqrt => "sqrt"(Type::Num) -> Type::Num, "square root (error on negative input)";
    Min => "min"(Type::Num, Type::Num) -> Type::Num, "smaller of two numbers";
    Max => "max"(Type::Num, Type::Num) -> Type::Num, "larger of two numbers";
}

impl Builtin {
    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|b| b.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn flip(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Label::Positive => "POSITIVE",
            Label::Negative => "NEGATIVE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Bool(bool),
    Str(String),
    Label(Label),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
    If(Box<Expr>, Box<Block>, Box<Block>),
    Quant {
        kind: Quantifier,
        vars: Vec<String>,
        domain: Box<Expr>,
        body: Box<Block>,
    },
}

/// `{ let a = ...; let b = ...; result }`
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub lets: Vec<(String, Expr)>,
    pub result: Expr,
}

impl Block {
    pub fn expr(result: Expr) -> Self {
        Self { lets: vec![], result }
    }
}

pub(crate) fn fmt_num(n: f64) -> String {
    // `{:?}` always yields a literal the lexer reads back exactly.
    format!("{n:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, 0);
        f.write_str(&s)
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

pub(crate) fn write_block(out: &mut String, b: &Block, depth: usize) {
    out.push_str("{\n");
    for (name, e) in &b.lets {
        indent(out, depth + 1);
        let _ = write!(out, "let {name} = ");
        write_expr(out, e, depth + 1);
        out.push_str(";\n");
    }
    indent(out, depth + 1);
    write_expr(out, &b.result, depth + 1);
    out.push('\n');
    indent(out, depth);
    out.push('}');
}

/// Canonical printing: every unary/binary node is parenthesised so the
/// parser rebuilds the same tree regardless of precedence.
pub(crate) fn write_expr(out: &mut String, e: &Expr, depth: usize) {
    match e {
        Expr::Num(n) => out.push_str(&fmt_num(*n)),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Str(s) => {
            out.push('"');
            for ch in s.chars() {
                if ch == '"' || ch == '\\' {
                    out.push('\\');
                }
                out.push(ch);
            }
            out.push('"');
        }
        Expr::Label(l) => out.push_str(l.keyword()),
        Expr::Var(v) => out.push_str(v),
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Neg => "(-",
                UnOp::Not => "(not ",
            });
            write_expr(out, inner, depth);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            out.push('(');
            write_expr(out, a, depth);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, depth);
            out.push(')');
        }
        Expr::Call(b, args) => {
            out.push_str(b.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, depth);
            }
            out.push(')');
        }
        Expr::If(c, t, e) => {
            out.push_str("if ");
            write_expr(out, c, depth);
            out.push(' ');
            write_block(out, t, depth);
            out.push_str(" else ");
            match (&e.lets[..], &e.result) {
                ([], Expr::If(..)) => write_expr(out, &e.result, depth),
                _ => write_block(out, e, depth),
            }
        }
        Expr::Quant { kind, vars, domain, body } => {
            let _ = write!(out, "{} {} in ", kind.keyword(), vars.join(", "));
            write_expr(out, domain, depth);
            out.push(' ');
            write_block(out, body, depth);
        }
    }
}
