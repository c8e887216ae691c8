//! Tree-walking interpreter.
//!
//! A [`Panel`] wraps one image and lazily caches every primitive output, so
//! evaluating many programs (or one program under many bindings) on the same
//! panel computes components and contours once.

use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::raster::{
    approx_collinear, external_components, find_components, hole_count, simplify_closed,
    total_ink_length, trace_contour, BinaryImage, Component, Connectivity, Contour,
    ContourGeometry, Metric, RasterError,
};

use super::ast::{BinOp, Block, Builtin, Expr, Label, Quantifier, UnOp};
use super::parser::IMAGE;
use super::{Bindings, ClassifierProgram, ParamKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("binding error: {0}")]
    Binding(String),
    #[error("{message} (in `{node}`)")]
    Runtime { node: String, message: String },
}

/// One connected figure with lazily computed boundary and measures.
#[derive(Debug)]
pub struct Shape {
    component: Component,
    contour: OnceLock<Contour>,
    geometry: OnceLock<Result<ContourGeometry, RasterError>>,
    holes: OnceLock<usize>,
}

impl Shape {
    pub fn new(component: Component) -> Self {
        Self {
            component,
            contour: OnceLock::new(),
            geometry: OnceLock::new(),
            holes: OnceLock::new(),
        }
    }

    pub fn component(&self) -> &Component {
        &self.component
    }

    pub fn contour(&self) -> &Contour {
        self.contour.get_or_init(|| trace_contour(&self.component))
    }

    pub fn measure(&self, metric: Metric) -> Result<f64, RasterError> {
        self.geometry
            .get_or_init(|| ContourGeometry::new(self.contour()))
            .as_ref()
            .map_err(Clone::clone)?
            .get(metric)
    }

    pub fn holes(&self) -> usize {
        *self.holes.get_or_init(|| hole_count(&self.component))
    }

    pub fn corners(&self, tolerance: f64) -> usize {
        simplify_closed(self.contour().points(), tolerance).len()
    }

    /// Centre of mass of the pixels on or inside the outer boundary.
    pub fn centroid(&self) -> (f64, f64) {
        match (self.measure(Metric::CentroidX), self.measure(Metric::CentroidY)) {
            (Ok(x), Ok(y)) => (x, y),
            // Open (stroke-like) boundaries fall back to the ink pixels.
            _ => {
                let px = self.component.pixels();
                let n = px.len() as f64;
                let sx: f64 = px.iter().map(|p| p.x as f64).sum();
                let sy: f64 = px.iter().map(|p| p.y as f64).sum();
                (sx / n, sy / n)
            }
        }
    }
}

/// An image plus cached primitive outputs.
#[derive(Debug)]
pub struct Panel {
    image: BinaryImage,
    shapes: OnceLock<Arc<Vec<Value>>>,
    components: OnceLock<Arc<Vec<Value>>>,
    points: OnceLock<Arc<Vec<Value>>>,
    ink_length: OnceLock<f64>,
}

impl Panel {
    pub fn new(image: BinaryImage) -> Self {
        Self {
            image,
            shapes: OnceLock::new(),
            components: OnceLock::new(),
            points: OnceLock::new(),
            ink_length: OnceLock::new(),
        }
    }

    pub fn image(&self) -> &BinaryImage {
        &self.image
    }

    fn shapes(&self) -> Arc<Vec<Value>> {
        self.shapes
            .get_or_init(|| {
                Arc::new(
                    external_components(&self.image)
                        .into_iter()
                        .map(|c| Value::Shape(Arc::new(Shape::new(c))))
                        .collect(),
                )
            })
            .clone()
    }

    fn components(&self) -> Arc<Vec<Value>> {
        self.components
            .get_or_init(|| {
                Arc::new(
                    find_components(&self.image, Connectivity::Eight)
                        .into_iter()
                        .map(|c| Value::Shape(Arc::new(Shape::new(c))))
                        .collect(),
                )
            })
            .clone()
    }

    fn points(&self) -> Arc<Vec<Value>> {
        self.points
            .get_or_init(|| {
                let shapes = self.shapes();
                Arc::new(
                    shapes
                        .iter()
                        .map(|s| match s {
                            Value::Shape(s) => {
                                let (x, y) = s.centroid();
                                Value::Point(x.trunc(), y.trunc())
                            }
                            _ => unreachable!("shape list holds shapes"),
                        })
                        .collect(),
                )
            })
            .clone()
    }

    fn ink_length(&self) -> f64 {
        *self.ink_length.get_or_init(|| total_ink_length(&self.image))
    }
}

/// Runtime values.
#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Label(Label),
    Image,
    Shape(Arc<Shape>),
    Point(f64, f64),
    List(Arc<Vec<Value>>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "bool",
            Value::Label(_) => "Label",
            Value::Image => "image",
            Value::Shape(_) => "shape",
            Value::Point(..) => "point",
            Value::List(_) => "list",
        }
    }
}

/// Evaluates the program on one image.
pub fn evaluate(
    p: &ClassifierProgram,
    img: &BinaryImage,
    bindings: &Bindings,
) -> Result<Label, EvalError> {
    evaluate_panel(p, &Panel::new(img.clone()), bindings)
}

/// Evaluates the program on a cached panel.
pub fn evaluate_panel(
    p: &ClassifierProgram,
    panel: &Panel,
    bindings: &Bindings,
) -> Result<Label, EvalError> {
    let mut env: Vec<(String, Value)> = Vec::with_capacity(p.params().len() + 8);
    for spec in p.params() {
        let v = *bindings
            .get(&spec.name)
            .ok_or_else(|| EvalError::Binding(format!("parameter `{}` is not bound", spec.name)))?;
        if !spec.admits(v) {
            let what = match spec.kind {
                ParamKind::Int => "an integer",
                ParamKind::Float => "a number",
            };
            return Err(EvalError::Binding(format!(
                "`{}` = {v} is not {what} in [{}, {}]",
                spec.name, spec.low, spec.high
            )));
        }
        env.push((spec.name.clone(), Value::Num(v)));
    }
    if let Some(extra) = bindings.keys().find(|k| p.param(k).is_none()) {
        return Err(EvalError::Binding(format!("`{extra}` is not a declared parameter")));
    }
    env.push((IMAGE.to_string(), Value::Image));
    let mut ev = Evaluator { panel, env };
    match ev.block(p.body())? {
        Value::Label(l) => Ok(l),
        other => Err(EvalError::Runtime {
            node: p.body().result.to_string(),
            message: format!("entry produced a {} instead of a Label", other.kind()),
        }),
    }
}

struct Evaluator<'a> {
    panel: &'a Panel,
    env: Vec<(String, Value)>,
}

fn runtime(node: &Expr, message: impl Into<String>) -> EvalError {
    EvalError::Runtime { node: node.to_string(), message: message.into() }
}

impl Evaluator<'_> {
    fn block(&mut self, b: &Block) -> Result<Value, EvalError> {
        let mark = self.env.len();
        let result = (|| {
            for (name, e) in &b.lets {
                let v = self.expr(e)?;
                self.env.push((name.clone(), v));
            }
            self.expr(&b.result)
        })();
        self.env.truncate(mark);
        result
    }

    fn num(&mut self, e: &Expr) -> Result<f64, EvalError> {
        match self.expr(e)? {
            Value::Num(n) => Ok(n),
            v => Err(runtime(e, format!("expected a number, found a {}", v.kind()))),
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<bool, EvalError> {
        match self.expr(e)? {
            Value::Bool(b) => Ok(b),
            v => Err(runtime(e, format!("expected a bool, found a {}", v.kind()))),
        }
    }

    fn shape(&mut self, e: &Expr) -> Result<Arc<Shape>, EvalError> {
        match self.expr(e)? {
            Value::Shape(s) => Ok(s),
            v => Err(runtime(e, format!("expected a shape, found a {}", v.kind()))),
        }
    }

    fn point(&mut self, e: &Expr) -> Result<(f64, f64), EvalError> {
        match self.expr(e)? {
            Value::Point(x, y) => Ok((x, y)),
            v => Err(runtime(e, format!("expected a point, found a {}", v.kind()))),
        }
    }

    fn list(&mut self, e: &Expr) -> Result<Arc<Vec<Value>>, EvalError> {
        match self.expr(e)? {
            Value::List(l) => Ok(l),
            v => Err(runtime(e, format!("expected a list, found a {}", v.kind()))),
        }
    }

    fn image(&mut self, e: &Expr) -> Result<(), EvalError> {
        match self.expr(e)? {
            Value::Image => Ok(()),
            v => Err(runtime(e, format!("expected the image, found a {}", v.kind()))),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<Value, EvalError> {
        Ok(match e {
            Expr::Num(n) => Value::Num(*n),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Label(l) => Value::Label(*l),
            Expr::Str(_) => return Err(runtime(e, "string outside a metric argument")),
            Expr::Var(name) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| runtime(e, format!("unbound name `{name}`")))?,
            Expr::Unary(UnOp::Neg, inner) => Value::Num(-self.num(inner)?),
            Expr::Unary(UnOp::Not, inner) => Value::Bool(!self.boolean(inner)?),
            Expr::Binary(op, a, b) => self.binary(*op, a, b, e)?,
            Expr::Call(b, args) => self.call(*b, args, e)?,
            Expr::If(c, t, f) => {
                if self.boolean(c)? {
                    self.block(t)?
                } else {
                    self.block(f)?
                }
            }
            Expr::Quant { kind, vars, domain, body } => {
                let items = self.list(domain)?;
                self.quantify(*kind, vars, &items, body, e)?
            }
        })
    }

    fn binary(&mut self, op: BinOp, a: &Expr, b: &Expr, whole: &Expr) -> Result<Value, EvalError> {
        Ok(match op {
            BinOp::And => Value::Bool(self.boolean(a)? && self.boolean(b)?),
            BinOp::Or => Value::Bool(self.boolean(a)? || self.boolean(b)?),
            BinOp::Eq | BinOp::Ne => {
                let (l, r) = (self.expr(a)?, self.expr(b)?);
                let same = match (&l, &r) {
                    (Value::Num(x), Value::Num(y)) => x == y,
                    (Value::Bool(x), Value::Bool(y)) => x == y,
                    (Value::Label(x), Value::Label(y)) => x == y,
                    _ => {
                        return Err(runtime(
                            whole,
                            format!("cannot compare {} with {}", l.kind(), r.kind()),
                        ))
                    }
                };
                Value::Bool(same == (op == BinOp::Eq))
            }
            _ => {
                let (x, y) = (self.num(a)?, self.num(b)?);
                match op {
                    BinOp::Add => Value::Num(x + y),
                    BinOp::Sub => Value::Num(x - y),
                    BinOp::Mul => Value::Num(x * y),
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(runtime(whole, "division by zero"));
                        }
                        Value::Num(x / y)
                    }
                    BinOp::Lt => Value::Bool(x < y),
                    BinOp::Le => Value::Bool(x <= y),
                    BinOp::Gt => Value::Bool(x > y),
                    BinOp::Ge => Value::Bool(x >= y),
                    _ => unreachable!("handled above"),
                }
            }
        })
    }

    fn call(&mut self, b: Builtin, args: &[Expr], whole: &Expr) -> Result<Value, EvalError> {
        if args.len() != b.params().len() {
            return Err(runtime(whole, format!("{} takes {} argument(s)", b.name(), b.params().len())));
        }
        let geometry = |r: Result<f64, RasterError>| r.map_err(|err| runtime(whole, err.to_string()));
        let panel = self.panel;
        Ok(match b {
            Builtin::Shapes => {
                self.image(&args[0])?;
                Value::List(panel.shapes())
            }
            Builtin::Components => {
                self.image(&args[0])?;
                Value::List(panel.components())
            }
            Builtin::Points => {
                self.image(&args[0])?;
                Value::List(panel.points())
            }
            Builtin::TotalInkLength => {
                self.image(&args[0])?;
                Value::Num(panel.ink_length())
            }
            Builtin::InkFraction => {
                self.image(&args[0])?;
                let img = panel.image();
                Value::Num(img.foreground_count() as f64 / (img.width() * img.height()) as f64)
            }
            Builtin::ImageWidth => {
                self.image(&args[0])?;
                Value::Num(panel.image().width() as f64)
            }
            Builtin::ImageHeight => {
                self.image(&args[0])?;
                Value::Num(panel.image().height() as f64)
            }
            Builtin::Len => Value::Num(self.list(&args[0])?.len() as f64),
            Builtin::Measure => {
                let s = self.shape(&args[0])?;
                let metric: Metric = match &args[1] {
                    Expr::Str(name) => name.parse().map_err(|m: String| runtime(whole, m))?,
                    other => return Err(runtime(other, "metric must be a quoted name")),
                };
                Value::Num(geometry(s.measure(metric))?)
            }
            Builtin::Holes => Value::Num(self.shape(&args[0])?.holes() as f64),
            Builtin::Corners => {
                let s = self.shape(&args[0])?;
                let tol = self.num(&args[1])?;
                if !(tol >= 0.0) {
                    return Err(runtime(whole, "corner tolerance must be non-negative"));
                }
                Value::Num(s.corners(tol) as f64)
            }
            Builtin::BboxWidth => Value::Num(self.shape(&args[0])?.component().bbox().w as f64),
            Builtin::BboxHeight => Value::Num(self.shape(&args[0])?.component().bbox().h as f64),
            Builtin::Centroid => {
                let (x, y) = self.shape(&args[0])?.centroid();
                Value::Point(x, y)
            }
            Builtin::PointX => Value::Num(self.point(&args[0])?.0),
            Builtin::PointY => Value::Num(self.point(&args[0])?.1),
            Builtin::Distance => {
                let (a, b) = (self.point(&args[0])?, self.point(&args[1])?);
                Value::Num((a.0 - b.0).hypot(a.1 - b.1))
            }
            Builtin::Collinear => {
                let list = self.list(&args[0])?;
                let tol = self.num(&args[1])?;
                let mut pts = Vec::with_capacity(list.len());
                for v in list.iter() {
                    match v {
                        Value::Point(x, y) => pts.push((*x, *y)),
                        other => {
                            return Err(runtime(whole, format!("expected points, found a {}", other.kind())))
                        }
                    }
                }
                Value::Bool(approx_collinear(&pts, tol))
            }
            Builtin::Abs => Value::Num(self.num(&args[0])?.abs()),
            Builtin::Sqrt => {
                let x = self.num(&args[0])?;
                if x < 0.0 {
                    return Err(runtime(whole, format!("square root of negative number {x}")));
                }
                Value::Num(x.sqrt())
            }
            Builtin::Min => Value::Num(self.num(&args[0])?.min(self.num(&args[1])?)),
            Builtin::Max => Value::Num(self.num(&args[0])?.max(self.num(&args[1])?)),
        })
    }

    /// Runs `body` over single elements, unordered pairs or unordered triples
    /// of distinct positions, short-circuiting `exists`/`forall`.
    fn quantify(
        &mut self,
        kind: Quantifier,
        vars: &[String],
        items: &[Value],
        body: &Block,
        whole: &Expr,
    ) -> Result<Value, EvalError> {
        let n = items.len();
        let k = vars.len();
        let mut idx: Vec<usize> = (0..k).collect();
        let (mut any, mut all, mut count, mut sum) = (false, true, 0usize, 0.0);
        let mut best: Option<f64> = None;
        if k <= n {
            loop {
                let mark = self.env.len();
                for (v, &i) in vars.iter().zip(&idx) {
                    self.env.push((v.clone(), items[i].clone()));
                }
                let r = self.block(body);
                self.env.truncate(mark);
                let r = r?;
                match (kind, r) {
                    (Quantifier::Exists, Value::Bool(b)) => {
                        if b {
                            any = true;
                            break;
                        }
                    }
                    (Quantifier::Forall, Value::Bool(b)) => {
                        if !b {
                            all = false;
                            break;
                        }
                    }
                    (Quantifier::Count, Value::Bool(b)) => count += b as usize,
                    (Quantifier::Sum, Value::Num(x)) => sum += x,
                    (Quantifier::Maximum, Value::Num(x)) => best = Some(best.map_or(x, |b| b.max(x))),
                    (Quantifier::Minimum, Value::Num(x)) => best = Some(best.map_or(x, |b| b.min(x))),
                    (_, v) => {
                        return Err(runtime(
                            whole,
                            format!("`{}` body produced a {}", kind.keyword(), v.kind()),
                        ))
                    }
                }
                if !next_combination(&mut idx, n) {
                    break;
                }
            }
        }
        Ok(match kind {
            Quantifier::Exists => Value::Bool(any),
            Quantifier::Forall => Value::Bool(all),
            Quantifier::Count => Value::Num(count as f64),
            Quantifier::Sum => Value::Num(sum),
            Quantifier::Maximum | Quantifier::Minimum => Value::Num(best.unwrap_or(0.0)),
        })
    }
}

/// Steps `idx` to the next strictly increasing tuple over `0..n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}
