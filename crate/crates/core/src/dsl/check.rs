//! Static checking: every builtin call is arity- and type-correct, the entry
//! returns a Label on every path, and metric names are known.

use crate::raster::Metric;

use super::ast::{BinOp, Block, Builtin, Expr, Quantifier, UnOp};
use super::parser::IMAGE;
use super::types::Type;
use super::{ClassifierProgram, Diagnostic, DiagnosticKind};

pub fn validate(p: &ClassifierProgram) -> Vec<Diagnostic> {
    let mut cx = Checker { env: Vec::new(), diags: Vec::new() };
    for spec in p.params() {
        cx.env.push((spec.name.clone(), Some(Type::Num)));
    }
    cx.env.push((IMAGE.to_string(), Some(Type::Image)));
    if let Some(t) = cx.block(p.body()) {
        if t != Type::Label {
            cx.report(format!("entry must return Label, but its body yields {t}"));
        }
    }
    cx.diags
}

struct Checker {
    /// `None` marks a name whose definition failed to check; uses of it stay quiet.
    env: Vec<(String, Option<Type>)>,
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn report(&mut self, message: String) {
        self.diags.push(Diagnostic { kind: DiagnosticKind::Type, message, line: None, col: None });
    }

    fn lookup(&self, name: &str) -> Option<Option<Type>> {
        self.env.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }

    fn block(&mut self, b: &Block) -> Option<Type> {
        let mark = self.env.len();
        let mut ok = true;
        for (name, e) in &b.lets {
            let t = self.expr(e);
            ok &= t.is_some();
            self.env.push((name.clone(), t));
        }
        let result = self.expr(&b.result);
        self.env.truncate(mark);
        if ok {
            result
        } else {
            None
        }
    }

    fn want(&mut self, e: &Expr, expected: &Type, what: &str) -> bool {
        match self.expr(e) {
            Some(t) if expected.accepts(&t) => true,
            Some(t) => {
                self.report(format!("{what} must be {expected}, found {t} in `{e}`"));
                false
            }
            None => false,
        }
    }

    fn expr(&mut self, e: &Expr) -> Option<Type> {
        match e {
            Expr::Num(_) => Some(Type::Num),
            Expr::Bool(_) => Some(Type::Bool),
            Expr::Label(_) => Some(Type::Label),
            Expr::Str(s) => {
                self.report(format!(
                    "string \"{s}\" is only allowed as the metric argument of measure"
                ));
                None
            }
            Expr::Var(name) => match self.lookup(name) {
                Some(t) => t,
                None => {
                    self.report(format!("undeclared identifier `{name}`"));
                    None
                }
            },
            Expr::Unary(UnOp::Neg, inner) => self.want(inner, &Type::Num, "operand of `-`").then_some(Type::Num),
            Expr::Unary(UnOp::Not, inner) => {
                self.want(inner, &Type::Bool, "operand of `not`").then_some(Type::Bool)
            }
            Expr::Binary(op, a, b) => self.binary(*op, a, b, e),
            Expr::Call(builtin, args) => self.call(*builtin, args, e),
            Expr::If(c, t, f) => {
                let cond_ok = self.want(c, &Type::Bool, "if condition");
                let tt = self.block(t);
                let ft = self.block(f);
                match (tt, ft) {
                    (Some(a), Some(b)) if a == b => cond_ok.then_some(a),
                    (Some(a), Some(b)) => {
                        self.report(format!(
                            "if branches disagree: {a} versus {b} in `{e}`"
                        ));
                        None
                    }
                    _ => None,
                }
            }
            Expr::Quant { kind, vars, domain, body } => {
                let elem = match self.expr(domain) {
                    Some(Type::List(t)) => *t,
                    Some(t) => {
                        self.report(format!("`{}` ranges over a list, found {t}", kind.keyword()));
                        return None;
                    }
                    None => return None,
                };
                let mark = self.env.len();
                for v in vars {
                    self.env.push((v.clone(), Some(elem.clone())));
                }
                let bt = self.block(body);
                self.env.truncate(mark);
                let bt = bt?;
                let (need, out) = match kind {
                    Quantifier::Exists | Quantifier::Forall => (Type::Bool, Type::Bool),
                    Quantifier::Count => (Type::Bool, Type::Num),
                    Quantifier::Sum | Quantifier::Maximum | Quantifier::Minimum => {
                        (Type::Num, Type::Num)
                    }
                };
                if bt != need {
                    self.report(format!(
                        "body of `{}` must be {need}, found {bt}",
                        kind.keyword()
                    ));
                    return None;
                }
                Some(out)
            }
        }
    }

    fn binary(&mut self, op: BinOp, a: &Expr, b: &Expr, whole: &Expr) -> Option<Type> {
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let l = self.want(a, &Type::Num, "arithmetic operand");
                let r = self.want(b, &Type::Num, "arithmetic operand");
                (l && r).then_some(Type::Num)
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let l = self.want(a, &Type::Num, "comparison operand");
                let r = self.want(b, &Type::Num, "comparison operand");
                (l && r).then_some(Type::Bool)
            }
            BinOp::And | BinOp::Or => {
                let l = self.want(a, &Type::Bool, "boolean operand");
                let r = self.want(b, &Type::Bool, "boolean operand");
                (l && r).then_some(Type::Bool)
            }
            BinOp::Eq | BinOp::Ne => {
                let (l, r) = (self.expr(a)?, self.expr(b)?);
                let comparable = matches!(l, Type::Num | Type::Bool | Type::Label);
                if l != r || !comparable {
                    self.report(format!("cannot compare {l} with {r} in `{whole}`"));
                    return None;
                }
                Some(Type::Bool)
            }
        }
    }

    fn call(&mut self, b: Builtin, args: &[Expr], whole: &Expr) -> Option<Type> {
        let params = b.params();
        if params.len() != args.len() {
            self.report(format!(
                "{} takes {} argument(s), got {} in `{whole}`",
                b.name(),
                params.len(),
                args.len()
            ));
            return None;
        }
        let mut ok = true;
        for (i, (want, arg)) in params.iter().zip(args).enumerate() {
            if *want == Type::Str {
                match arg {
                    Expr::Str(name) => {
                        if let Err(msg) = name.parse::<Metric>() {
                            self.report(format!("{}: {msg}", b.name()));
                            ok = false;
                        }
                    }
                    other => {
                        self.report(format!(
                            "{} expects a quoted metric name as argument {}, found `{other}`",
                            b.name(),
                            i + 1
                        ));
                        ok = false;
                    }
                }
                continue;
            }
            let what = format!("argument {} of {}", i + 1, b.name());
            ok &= self.want(arg, want, &what);
        }
        ok.then(|| b.returns())
    }
}
