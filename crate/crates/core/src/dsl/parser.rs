use super::ast::{BinOp, Block, Builtin, Expr, Label, Quantifier, UnOp};
use super::lexer::{lex, Spanned, Tok};
use super::{Diagnostic, DiagnosticKind, ParamKind, ParamSpec};

pub(crate) const ENTRY: &str = "classify_image";
pub(crate) const IMAGE: &str = "image";

const KEYWORDS: &[&str] = &[
    "param", "int", "float", "in", "let", "if", "else", "and", "or", "not", "true", "false",
    "POSITIVE", "NEGATIVE", ENTRY,
];

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || Quantifier::from_keyword(word).is_some() || Builtin::from_name(word).is_some()
}

#[derive(Debug)]
pub(crate) struct Parsed {
    pub params: Vec<ParamSpec>,
    pub body: Block,
}

pub(crate) fn parse(src: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0, scope: Vec::new(), diags: Vec::new() };
    match p.program() {
        Ok(parsed) if p.diags.is_empty() => Ok(parsed),
        Ok(_) => Err(p.diags),
        Err(d) => {
            // A syntax error ends parsing; earlier name errors are still useful.
            let mut all = p.diags;
            all.push(d);
            Err(all)
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scope: Vec<String>,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, expected: &[&str]) -> Diagnostic {
        let (line, col) = self.here();
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        Diagnostic {
            message: format!(
                "expected {}, found {}",
                expected.join(" or "),
                self.peek().describe()
            ),
            kind: DiagnosticKind::Syntax { expected },
            line: Some(line),
            col: Some(col),
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(&[&format!("`{w}`")]))
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(&[&format!("`{}`", t.symbol())]))
        }
    }

    fn binder(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !is_reserved(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.syntax(&["identifier"])),
        }
    }

    fn program(&mut self) -> PResult<Parsed> {
        let mut params: Vec<ParamSpec> = Vec::new();
        while self.is_word("param") {
            let (line, col) = self.here();
            self.bump();
            let name = self.binder()?;
            self.expect(Tok::Colon)?;
            let kind = if self.is_word("int") {
                ParamKind::Int
            } else if self.is_word("float") {
                ParamKind::Float
            } else {
                return Err(self.syntax(&["`int`", "`float`"]));
            };
            self.bump();
            self.expect_word("in")?;
            self.expect(Tok::LParen)?;
            let low = self.signed_number()?;
            self.expect(Tok::Comma)?;
            let high = self.signed_number()?;
            self.expect(Tok::RParen)?;
            if name == IMAGE || params.iter().any(|p| p.name == name) {
                self.diags.push(Diagnostic {
                    kind: DiagnosticKind::DuplicateDeclaration(name.clone()),
                    message: format!("`{name}` is declared more than once"),
                    line: Some(line),
                    col: Some(col),
                });
            }
            let spec = ParamSpec { name, kind, low, high };
            if let Err(msg) = spec.check() {
                self.diags.push(Diagnostic {
                    kind: DiagnosticKind::Range { name: spec.name.clone() },
                    message: msg,
                    line: Some(line),
                    col: Some(col),
                });
            }
            params.push(spec);
        }
        if !self.is_word(ENTRY) {
            return Err(self.syntax(&["`param`", "`classify_image`"]));
        }
        self.bump();
        self.expect(Tok::LParen)?;
        self.expect_word(IMAGE)?;
        self.expect(Tok::RParen)?;
        self.scope = params.iter().map(|p| p.name.clone()).collect();
        self.scope.push(IMAGE.to_string());
        let body = self.block()?;
        if *self.peek() != Tok::Eof {
            return Err(self.syntax(&["end of input"]));
        }
        Ok(Parsed { params, body })
    }

    fn signed_number(&mut self) -> PResult<f64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.syntax(&["number"])),
        }
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect(Tok::LBrace)?;
        let mark = self.scope.len();
        let mut lets = Vec::new();
        while self.is_word("let") {
            self.bump();
            let name = self.binder()?;
            self.expect(Tok::Assign)?;
            let value = self.expr()?;
            self.expect(Tok::Semi)?;
            self.scope.push(name.clone());
            lets.push((name, value));
        }
        let result = self.expr()?;
        self.scope.truncate(mark);
        self.expect(Tok::RBrace)?;
        Ok(Block { lets, result })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.is_word("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.is_word("and") {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.is_word("not") {
            self.bump();
            let inner = self.not_expr()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::Bool(word == "true"))
                }
                "POSITIVE" => {
                    self.bump();
                    Ok(Expr::Label(Label::Positive))
                }
                "NEGATIVE" => {
                    self.bump();
                    Ok(Expr::Label(Label::Negative))
                }
                "if" => self.if_expr(),
                w if Quantifier::from_keyword(w).is_some() => self.quantifier(),
                w if KEYWORDS.contains(&w) => Err(self.syntax(&["expression"])),
                _ => {
                    self.bump();
                    if *self.peek() == Tok::LParen {
                        self.call(word, line, col)
                    } else {
                        if !self.scope.iter().any(|s| *s == word) {
                            self.undeclared(&word, line, col);
                        }
                        Ok(Expr::Var(word))
                    }
                }
            },
            _ => Err(self.syntax(&["expression"])),
        }
    }

    fn undeclared(&mut self, name: &str, line: usize, col: usize) {
        self.diags.push(Diagnostic {
            kind: DiagnosticKind::UndeclaredIdentifier(name.to_string()),
            message: format!("undeclared identifier `{name}`"),
            line: Some(line),
            col: Some(col),
        });
    }

    fn call(&mut self, name: String, line: usize, col: usize) -> PResult<Expr> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        match Builtin::from_name(&name) {
            Some(b) => Ok(Expr::Call(b, args)),
            None => {
                self.undeclared(&name, line, col);
                Ok(Expr::Var(name))
            }
        }
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        self.expect_word("if")?;
        let cond = self.expr()?;
        let then = self.block()?;
        self.expect_word("else")?;
        let otherwise = if self.is_word("if") {
            Block::expr(self.if_expr()?)
        } else {
            self.block()?
        };
        Ok(Expr::If(Box::new(cond), Box::new(then), Box::new(otherwise)))
    }

    fn quantifier(&mut self) -> PResult<Expr> {
        let kind = match self.bump() {
            Tok::Ident(w) => Quantifier::from_keyword(&w).expect("caller checked keyword"),
            _ => unreachable!("caller checked keyword"),
        };
        let mut vars = vec![self.binder()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            vars.push(self.binder()?);
        }
        if vars.len() > 3 {
            return Err(self.syntax(&["`in` (at most three bound names)"]));
        }
        self.expect_word("in")?;
        let domain = self.expr()?;
        let mark = self.scope.len();
        self.scope.extend(vars.iter().cloned());
        let body = self.block();
        self.scope.truncate(mark);
        Ok(Expr::Quant { kind, vars, domain: Box::new(domain), body: Box::new(body?) })
    }
}
