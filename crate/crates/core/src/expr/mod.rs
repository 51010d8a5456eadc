//! Exact symbolic representation of the smooth functions that populate
//! nets, cutoffs, and PDE right-hand sides.
//!
//! Expression trees are immutable and cheaply clonable (`Arc` nodes).
//! The node set is deliberately small: coordinates, constants, the four
//! ring operations, integer powers, sin/cos/exp, the standard bump
//! kernel exp(-1/(1-|x-c|²/ρ²)) extended by zero, and a univariate
//! smooth step used to glue local solutions. Bump and step nodes are
//! atomic under differentiation: the derivative multi-index is stored on
//! the node and evaluation expands it through a closed jet recurrence,
//! so derivatives of any order stay exact and support boxes never grow.
//!
//! Normalization is shallow by design: constant folding, 0/1 absorption,
//! flattening and a canonical ordering of commutative operands. Equality
//! of functions is decided numerically at sample points by the callers;
//! no canonical forms are attempted.

mod calculus;
mod parse;

pub use calculus::differentiate;
pub use parse::{parse_expr, parse_pde_rhs, ParseError};

use crate::geom::{BoxN, DomainBox, MultiIndex};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var(usize),
    Const(f64),
    Add(Vec<SmoothExpr>),
    Mul(Vec<SmoothExpr>),
    Div(SmoothExpr, SmoothExpr),
    Pow(SmoothExpr, i32),
    Sin(SmoothExpr),
    Cos(SmoothExpr),
    Exp(SmoothExpr),
    Bump(BumpNode),
    Step(StepNode),
}

/// D^orders of the kernel exp(-1/(1-|x-c|²/ρ²)), extended by 0 outside
/// the open ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpNode {
    pub center: Vec<f64>,
    pub radius: f64,
    pub orders: MultiIndex,
}

/// d^order/dv^order of the rising smooth step along one axis: 0 for
/// v ≤ lo, 1 for v ≥ hi, strictly increasing in between.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNode {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub order: u32,
}

#[derive(Clone)]
pub struct SmoothExpr(Arc<Node>);

impl fmt::Debug for SmoothExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl PartialEq for SmoothExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("evaluation at support boundary near {at:?}")]
    SupportBoundary { at: Vec<f64> },
    #[error("division by zero at {at:?}")]
    DivisionByZero { at: Vec<f64> },
    #[error("point has dimension {got}, expression needs at least {need}")]
    Dimension { need: usize, got: usize },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExprError {
    #[error("bump radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("closed ball around {center:?} with radius {radius} leaves the domain")]
    BallOutsideDomain { center: Vec<f64>, radius: f64 },
    #[error("bump center has dimension {got}, domain has {need}")]
    CenterDimension { need: usize, got: usize },
    #[error("step needs lo < hi, got [{lo}, {hi}]")]
    BadStep { lo: f64, hi: f64 },
}

/// Conservative support information: a certified-zero region complement.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// The function is identically zero.
    Empty,
    /// supp(e) is contained in the union of these closed boxes.
    Within(Vec<BoxN>),
    /// Nothing known; the support may be the whole domain.
    Unknown,
}

impl Support {
    /// True iff `x` is certified to lie outside the support, so the
    /// function and all its derivatives vanish there.
    pub fn excludes(&self, x: &[f64]) -> bool {
        match self {
            Support::Empty => true,
            Support::Within(boxes) => boxes.iter().all(|b| b.linf_dist(x) > 0.0),
            Support::Unknown => false,
        }
    }

    /// Sup-norm distance from `x` to the support region (infinite for an
    /// identically-zero function, zero when nothing is certified).
    pub fn gap_to(&self, x: &[f64]) -> f64 {
        match self {
            Support::Empty => f64::INFINITY,
            Support::Within(boxes) => boxes
                .iter()
                .map(|b| b.linf_dist(x))
                .fold(f64::INFINITY, f64::min),
            Support::Unknown => 0.0,
        }
    }

    /// Smallest single box covering the support, `None` when unknown or
    /// empty.
    pub fn hull(&self) -> Option<BoxN> {
        match self {
            Support::Within(boxes) => {
                let mut it = boxes.iter();
                let first = it.next()?.clone();
                Some(it.fold(first, |acc, b| acc.hull(b)))
            }
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------
// constructors

pub fn var(i: usize) -> SmoothExpr {
    SmoothExpr::node(Node::Var(i))
}

/// The t coordinate (axis 0).
pub fn t() -> SmoothExpr {
    var(0)
}

/// The k-th y coordinate, k ≥ 1 (axis k).
pub fn y(k: usize) -> SmoothExpr {
    assert!(k >= 1, "y index starts at 1");
    var(k)
}

pub fn constant(c: f64) -> SmoothExpr {
    SmoothExpr::node(Node::Const(c))
}

pub fn add(a: &SmoothExpr, b: &SmoothExpr) -> SmoothExpr {
    SmoothExpr::node(Node::Add(vec![a.clone(), b.clone()])).normalize()
}

pub fn sum(terms: &[SmoothExpr]) -> SmoothExpr {
    SmoothExpr::node(Node::Add(terms.to_vec())).normalize()
}

pub fn sub(a: &SmoothExpr, b: &SmoothExpr) -> SmoothExpr {
    add(a, &neg(b))
}

pub fn neg(a: &SmoothExpr) -> SmoothExpr {
    mul(&constant(-1.0), a)
}

pub fn mul(a: &SmoothExpr, b: &SmoothExpr) -> SmoothExpr {
    SmoothExpr::node(Node::Mul(vec![a.clone(), b.clone()])).normalize()
}

pub fn product(factors: &[SmoothExpr]) -> SmoothExpr {
    SmoothExpr::node(Node::Mul(factors.to_vec())).normalize()
}

pub fn div(a: &SmoothExpr, b: &SmoothExpr) -> SmoothExpr {
    SmoothExpr::node(Node::Div(a.clone(), b.clone())).normalize()
}

pub fn pow(a: &SmoothExpr, k: i32) -> SmoothExpr {
    SmoothExpr::node(Node::Pow(a.clone(), k)).normalize()
}

pub fn sin(a: &SmoothExpr) -> SmoothExpr {
    SmoothExpr::node(Node::Sin(a.clone())).normalize()
}

pub fn cos(a: &SmoothExpr) -> SmoothExpr {
    SmoothExpr::node(Node::Cos(a.clone())).normalize()
}

pub fn exp(a: &SmoothExpr) -> SmoothExpr {
    SmoothExpr::node(Node::Exp(a.clone())).normalize()
}

/// The standard mollifier kernel exp(-1/(1-|x-c|²/ρ²)) extended by 0;
/// the closed ball around `center` must fit inside `domain`.
pub fn bump_in(domain: &DomainBox, center: &[f64], radius: f64) -> Result<SmoothExpr, ExprError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(ExprError::BadRadius(radius));
    }
    if center.len() != domain.dim() {
        return Err(ExprError::CenterDimension { need: domain.dim(), got: center.len() });
    }
    for i in 0..center.len() {
        let (lo, hi) = domain.axis(i);
        if center[i] - radius <= lo || center[i] + radius >= hi {
            return Err(ExprError::BallOutsideDomain { center: center.to_vec(), radius });
        }
    }
    Ok(bump_unchecked(center, radius))
}

/// Bump without the domain-containment check (parser and internal use).
pub fn bump_unchecked(center: &[f64], radius: f64) -> SmoothExpr {
    SmoothExpr::node(Node::Bump(BumpNode {
        center: center.to_vec(),
        radius,
        orders: MultiIndex::zero(center.len()),
    }))
}

/// Rising smooth step in the variable on `axis`: 0 below `lo`, 1 above `hi`.
pub fn step(axis: usize, lo: f64, hi: f64) -> Result<SmoothExpr, ExprError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(ExprError::BadStep { lo, hi });
    }
    Ok(SmoothExpr::node(Node::Step(StepNode { axis, lo, hi, order: 0 })))
}

impl SmoothExpr {
    pub(crate) fn node(n: Node) -> Self {
        SmoothExpr(Arc::new(n))
    }

    pub fn as_node(&self) -> &Node {
        &self.0
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.as_node(), Node::Const(c) if *c == 0.0)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.as_node() {
            Node::Var(i) => Some(*i),
            Node::Const(_) => None,
            Node::Add(cs) | Node::Mul(cs) => cs.iter().filter_map(|c| c.max_var()).max(),
            Node::Div(a, b) => a.max_var().into_iter().chain(b.max_var()).max(),
            Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => a.max_var(),
            Node::Bump(b) => Some(b.center.len().saturating_sub(1)),
            Node::Step(s) => Some(s.axis),
        }
    }

    pub fn uses_var(&self, i: usize) -> bool {
        match self.as_node() {
            Node::Var(j) => *j == i,
            Node::Const(_) => false,
            Node::Add(cs) | Node::Mul(cs) => cs.iter().any(|c| c.uses_var(i)),
            Node::Div(a, b) => a.uses_var(i) || b.uses_var(i),
            Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => a.uses_var(i),
            Node::Bump(b) => i < b.center.len(),
            Node::Step(s) => s.axis == i,
        }
    }

    pub fn differentiate(&self, p: &MultiIndex) -> SmoothExpr {
        calculus::differentiate(self, p)
    }

    // -----------------------------------------------------------------
    // evaluation

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self.as_node() {
            Node::Var(i) => x
                .get(*i)
                .copied()
                .ok_or(EvalError::Dimension { need: *i + 1, got: x.len() }),
            Node::Const(c) => Ok(*c),
            Node::Add(cs) => {
                let mut acc = 0.0;
                for c in cs {
                    acc += c.evaluate(x)?;
                }
                Ok(acc)
            }
            Node::Mul(cs) => {
                let mut acc = 1.0;
                for c in cs {
                    acc *= c.evaluate(x)?;
                }
                Ok(acc)
            }
            Node::Div(a, b) => {
                let den = b.evaluate(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { at: x.to_vec() });
                }
                Ok(a.evaluate(x)? / den)
            }
            Node::Pow(a, k) => {
                let base = a.evaluate(x)?;
                if *k < 0 && base == 0.0 {
                    return Err(EvalError::DivisionByZero { at: x.to_vec() });
                }
                Ok(base.powi(*k))
            }
            Node::Sin(a) => Ok(a.evaluate(x)?.sin()),
            Node::Cos(a) => Ok(a.evaluate(x)?.cos()),
            Node::Exp(a) => Ok(a.evaluate(x)?.exp()),
            Node::Bump(b) => calculus::eval_bump(b, x),
            Node::Step(s) => {
                let v = *x
                    .get(s.axis)
                    .ok_or(EvalError::Dimension { need: s.axis + 1, got: x.len() })?;
                Ok(calculus::eval_step(s, v))
            }
        }
    }

    // -----------------------------------------------------------------
    // support tracking

    /// Conservative support for an expression over an `ambient_dim`-dimensional
    /// domain. Sums propagate unions, products intersections; sin preserves
    /// supports (sin 0 = 0) while cos and exp forget them.
    pub fn support(&self, ambient_dim: usize) -> Support {
        match self.as_node() {
            Node::Const(c) => {
                if *c == 0.0 {
                    Support::Empty
                } else {
                    Support::Unknown
                }
            }
            Node::Var(_) => Support::Unknown,
            Node::Add(cs) => {
                let mut boxes: Vec<BoxN> = Vec::new();
                for c in cs {
                    match c.support(ambient_dim) {
                        Support::Empty => {}
                        Support::Within(mut bs) => boxes.append(&mut bs),
                        Support::Unknown => return Support::Unknown,
                    }
                }
                if boxes.is_empty() {
                    Support::Empty
                } else {
                    Support::Within(boxes)
                }
            }
            Node::Mul(cs) => {
                let mut acc = Support::Unknown;
                for c in cs {
                    acc = intersect_support(acc, c.support(ambient_dim));
                    if matches!(acc, Support::Empty) {
                        return Support::Empty;
                    }
                }
                acc
            }
            Node::Div(a, _) => a.support(ambient_dim),
            Node::Pow(a, k) => {
                if *k > 0 {
                    a.support(ambient_dim)
                } else {
                    Support::Unknown
                }
            }
            Node::Sin(a) => a.support(ambient_dim),
            Node::Cos(_) | Node::Exp(_) => Support::Unknown,
            Node::Bump(b) => {
                let mut lo: Vec<f64> = b.center.iter().map(|c| c - b.radius).collect();
                let mut hi: Vec<f64> = b.center.iter().map(|c| c + b.radius).collect();
                lo.resize(ambient_dim, f64::NEG_INFINITY);
                hi.resize(ambient_dim, f64::INFINITY);
                Support::Within(vec![BoxN::new(lo, hi)])
            }
            Node::Step(s) => {
                let mut lo = vec![f64::NEG_INFINITY; ambient_dim];
                let mut hi = vec![f64::INFINITY; ambient_dim];
                lo[s.axis] = s.lo;
                if s.order > 0 {
                    hi[s.axis] = s.hi;
                }
                Support::Within(vec![BoxN::new(lo, hi)])
            }
        }
    }

    /// Single covering box for the support, or `None` when unknown.
    pub fn support_box(&self, ambient_dim: usize) -> Option<BoxN> {
        self.support(ambient_dim).hull()
    }

    // -----------------------------------------------------------------
    // normalization

    /// Shallow normal form: constant folding, 0/1 absorption, flattening
    /// of nested sums/products, and canonical operand order.
    pub fn normalize(&self) -> SmoothExpr {
        match self.as_node() {
            Node::Var(_) | Node::Const(_) | Node::Bump(_) | Node::Step(_) => self.clone(),
            Node::Add(cs) => {
                let mut flat: Vec<SmoothExpr> = Vec::new();
                let mut konst = 0.0;
                for c in cs {
                    let c = c.normalize();
                    match c.as_node() {
                        Node::Add(inner) => {
                            for ic in inner {
                                match ic.as_node() {
                                    Node::Const(v) => konst += v,
                                    _ => flat.push(ic.clone()),
                                }
                            }
                        }
                        Node::Const(v) => konst += v,
                        _ => flat.push(c),
                    }
                }
                flat.sort_by(cmp_structural);
                if konst != 0.0 || flat.is_empty() {
                    flat.insert(0, constant(konst));
                }
                if flat.len() == 1 {
                    flat.pop().unwrap()
                } else {
                    SmoothExpr::node(Node::Add(flat))
                }
            }
            Node::Mul(cs) => {
                let mut flat: Vec<SmoothExpr> = Vec::new();
                let mut konst = 1.0;
                for c in cs {
                    let c = c.normalize();
                    match c.as_node() {
                        Node::Mul(inner) => {
                            for ic in inner {
                                match ic.as_node() {
                                    Node::Const(v) => konst *= v,
                                    _ => flat.push(ic.clone()),
                                }
                            }
                        }
                        Node::Const(v) => konst *= v,
                        _ => flat.push(c),
                    }
                }
                if konst == 0.0 {
                    return constant(0.0);
                }
                flat.sort_by(cmp_structural);
                if konst != 1.0 || flat.is_empty() {
                    flat.insert(0, constant(konst));
                }
                if flat.len() == 1 {
                    flat.pop().unwrap()
                } else {
                    SmoothExpr::node(Node::Mul(flat))
                }
            }
            Node::Div(a, b) => {
                let a = a.normalize();
                let b = b.normalize();
                match (a.as_node(), b.as_node()) {
                    (Node::Const(x), Node::Const(y)) if *y != 0.0 => constant(x / y),
                    (Node::Const(x), _) if *x == 0.0 => constant(0.0),
                    (_, Node::Const(y)) if *y == 1.0 => a,
                    _ => SmoothExpr::node(Node::Div(a, b)),
                }
            }
            Node::Pow(a, k) => {
                let a = a.normalize();
                match (a.as_node(), *k) {
                    (_, 0) => constant(1.0),
                    (_, 1) => a,
                    (Node::Const(c), k) if !(c == &0.0 && k < 0) => constant(c.powi(k)),
                    _ => SmoothExpr::node(Node::Pow(a, *k)),
                }
            }
            Node::Sin(a) => {
                let a = a.normalize();
                match a.as_node() {
                    Node::Const(c) => constant(c.sin()),
                    _ => SmoothExpr::node(Node::Sin(a)),
                }
            }
            Node::Cos(a) => {
                let a = a.normalize();
                match a.as_node() {
                    Node::Const(c) => constant(c.cos()),
                    _ => SmoothExpr::node(Node::Cos(a)),
                }
            }
            Node::Exp(a) => {
                let a = a.normalize();
                match a.as_node() {
                    Node::Const(c) => constant(c.exp()),
                    _ => SmoothExpr::node(Node::Exp(a)),
                }
            }
        }
    }
}

fn intersect_support(a: Support, b: Support) -> Support {
    match (a, b) {
        (Support::Empty, _) | (_, Support::Empty) => Support::Empty,
        (Support::Unknown, s) | (s, Support::Unknown) => s,
        (Support::Within(xs), Support::Within(ys)) => {
            if xs.len().saturating_mul(ys.len()) > 1024 {
                // cap pairwise blowup; keeping one side stays conservative
                return Support::Within(xs);
            }
            let mut out = Vec::new();
            for x in &xs {
                for y in &ys {
                    if let Some(i) = x.intersect(y) {
                        out.push(i);
                    }
                }
            }
            if out.is_empty() {
                Support::Empty
            } else {
                Support::Within(out)
            }
        }
    }
}

// ---------------------------------------------------------------------
// structural total order (used to canonicalize commutative operands)

fn node_rank(n: &Node) -> u8 {
    match n {
        Node::Const(_) => 0,
        Node::Var(_) => 1,
        Node::Pow(..) => 2,
        Node::Mul(_) => 3,
        Node::Div(..) => 4,
        Node::Add(_) => 5,
        Node::Sin(_) => 6,
        Node::Cos(_) => 7,
        Node::Exp(_) => 8,
        Node::Bump(_) => 9,
        Node::Step(_) => 10,
    }
}

pub(crate) fn cmp_structural(a: &SmoothExpr, b: &SmoothExpr) -> Ordering {
    let (na, nb) = (a.as_node(), b.as_node());
    node_rank(na).cmp(&node_rank(nb)).then_with(|| match (na, nb) {
        (Node::Const(x), Node::Const(y)) => x.total_cmp(y),
        (Node::Var(i), Node::Var(j)) => i.cmp(j),
        (Node::Add(xs), Node::Add(ys)) | (Node::Mul(xs), Node::Mul(ys)) => cmp_lists(xs, ys),
        (Node::Div(x1, y1), Node::Div(x2, y2)) => {
            cmp_structural(x1, x2).then_with(|| cmp_structural(y1, y2))
        }
        (Node::Pow(x, i), Node::Pow(y, j)) => cmp_structural(x, y).then_with(|| i.cmp(j)),
        (Node::Sin(x), Node::Sin(y))
        | (Node::Cos(x), Node::Cos(y))
        | (Node::Exp(x), Node::Exp(y)) => cmp_structural(x, y),
        (Node::Bump(x), Node::Bump(y)) => cmp_f64s(&x.center, &y.center)
            .then_with(|| x.radius.total_cmp(&y.radius))
            .then_with(|| x.orders.0.cmp(&y.orders.0)),
        (Node::Step(x), Node::Step(y)) => x
            .axis
            .cmp(&y.axis)
            .then_with(|| x.lo.total_cmp(&y.lo))
            .then_with(|| x.hi.total_cmp(&y.hi))
            .then_with(|| x.order.cmp(&y.order)),
        _ => unreachable!("rank ties imply same variant"),
    })
}

fn cmp_lists(xs: &[SmoothExpr], ys: &[SmoothExpr]) -> Ordering {
    for (x, y) in xs.iter().zip(ys) {
        let c = cmp_structural(x, y);
        if c != Ordering::Equal {
            return c;
        }
    }
    xs.len().cmp(&ys.len())
}

fn cmp_f64s(xs: &[f64], ys: &[f64]) -> Ordering {
    for (x, y) in xs.iter().zip(ys) {
        let c = x.total_cmp(y);
        if c != Ordering::Equal {
            return c;
        }
    }
    xs.len().cmp(&ys.len())
}

// ---------------------------------------------------------------------
// printing

fn var_name(i: usize) -> String {
    if i == 0 {
        "t".to_string()
    } else {
        format!("y{i}")
    }
}

fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(_) => 1,
        Node::Mul(_) | Node::Div(..) => 2,
        Node::Pow(..) => 3,
        _ => 4,
    }
}

fn fmt_prec(e: &SmoothExpr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e.as_node()) < min {
        write!(f, "(")?;
        fmt_node(e, f)?;
        write!(f, ")")
    } else {
        fmt_node(e, f)
    }
}

fn fmt_tuple(vals: &[f64], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "(")?;
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v:?}")?;
    }
    write!(f, ")")
}

fn fmt_node(e: &SmoothExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.as_node() {
        Node::Var(i) => write!(f, "{}", var_name(*i)),
        Node::Const(c) => {
            if *c < 0.0 {
                write!(f, "-{:?}", -c)
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Add(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                fmt_prec(c, 2, f)?;
            }
            Ok(())
        }
        Node::Mul(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " * ")?;
                }
                fmt_prec(c, 3, f)?;
            }
            Ok(())
        }
        Node::Div(a, b) => {
            fmt_prec(a, 2, f)?;
            write!(f, " / ")?;
            fmt_prec(b, 3, f)
        }
        Node::Pow(a, k) => {
            fmt_prec(a, 4, f)?;
            write!(f, "^{k}")
        }
        Node::Sin(a) => write!(f, "sin({a})"),
        Node::Cos(a) => write!(f, "cos({a})"),
        Node::Exp(a) => write!(f, "exp({a})"),
        Node::Bump(b) => {
            if b.orders.is_zero() {
                write!(f, "bump(")?;
            } else {
                write!(f, "dbump(")?;
                write!(f, "(")?;
                for (i, k) in b.orders.0.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}")?;
                }
                write!(f, "), ")?;
            }
            fmt_tuple(&b.center, f)?;
            write!(f, ", {:?})", b.radius)
        }
        Node::Step(s) => {
            if s.order == 0 {
                write!(f, "step({}, {:?}, {:?})", var_name(s.axis), s.lo, s.hi)
            } else {
                write!(f, "dstep({}, {:?}, {:?}, {})", var_name(s.axis), s.lo, s.hi, s.order)
            }
        }
    }
}

impl fmt::Display for SmoothExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(self, f)
    }
}

impl std::ops::Add for &SmoothExpr {
    type Output = SmoothExpr;
    fn add(self, rhs: &SmoothExpr) -> SmoothExpr {
        add(self, rhs)
    }
}

impl std::ops::Sub for &SmoothExpr {
    type Output = SmoothExpr;
    fn sub(self, rhs: &SmoothExpr) -> SmoothExpr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for &SmoothExpr {
    type Output = SmoothExpr;
    fn mul(self, rhs: &SmoothExpr) -> SmoothExpr {
        mul(self, rhs)
    }
}

impl std::ops::Div for &SmoothExpr {
    type Output = SmoothExpr;
    fn div(self, rhs: &SmoothExpr) -> SmoothExpr {
        div(self, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_product_of_coordinates() {
        let e = mul(&t(), &y(1));
        assert_eq!(e.evaluate(&[2.0, 3.0]), Ok(6.0));
    }

    #[test]
    fn evaluate_sin_at_pi() {
        let e = sin(&t());
        assert!(e.evaluate(&[std::f64::consts::PI]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bump_at_center_and_outside() {
        let e = bump_unchecked(&[0.0], 1.0);
        let at_center = e.evaluate(&[0.0]).unwrap();
        assert!((at_center - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(e.evaluate(&[1.0]), Ok(0.0));
        assert_eq!(e.evaluate(&[2.0]), Ok(0.0));
        assert_eq!(e.evaluate(&[-1.5]), Ok(0.0));
    }

    #[test]
    fn bump_precondition_rejected() {
        let dom = DomainBox::new(&[(0.0, 1.0)]).unwrap();
        assert!(bump_in(&dom, &[0.5], 0.25).is_ok());
        assert!(matches!(
            bump_in(&dom, &[0.5], 0.6),
            Err(ExprError::BallOutsideDomain { .. })
        ));
        assert_eq!(bump_in(&dom, &[0.5], -1.0), Err(ExprError::BadRadius(-1.0)));
    }

    #[test]
    fn support_box_of_bump() {
        let e = bump_unchecked(&[0.5], 0.25);
        let b = e.support_box(1).unwrap();
        assert_eq!(b.lo, vec![0.25]);
        assert_eq!(b.hi, vec![0.75]);
    }

    #[test]
    fn support_union_and_product() {
        let a = bump_unchecked(&[0.0], 1.0);
        let b = bump_unchecked(&[3.0], 1.0);
        let s = add(&a, &b).support(1);
        match &s {
            Support::Within(boxes) => assert_eq!(boxes.len(), 2),
            _ => panic!("expected box list"),
        }
        assert!(s.excludes(&[1.5]));
        assert!(!s.excludes(&[0.5]));
        let hull = s.hull().unwrap();
        assert_eq!((hull.lo[0], hull.hi[0]), (-1.0, 4.0));

        assert_eq!(sin(&t()).support(1), Support::Unknown);

        let p = mul(&a, &sin(&t()));
        let hull = p.support_box(1).unwrap();
        assert_eq!((hull.lo[0], hull.hi[0]), (-1.0, 1.0));
    }

    #[test]
    fn zero_outside_declared_support() {
        let e = mul(&bump_unchecked(&[0.0, 0.0], 0.5), &exp(&y(1)));
        let s = e.support(2);
        for x in [[0.9, 0.0], [0.0, -0.7], [2.0, 2.0]] {
            assert!(s.excludes(&x));
            assert_eq!(e.evaluate(&x), Ok(0.0));
        }
    }

    #[test]
    fn normalize_absorbs_zero_and_one() {
        let e = add(&mul(&constant(0.0), &sin(&t())), &mul(&constant(1.0), &t()));
        assert_eq!(e, t());
        assert_eq!(pow(&t(), 0), constant(1.0));
        assert_eq!(pow(&t(), 1), t());
        assert_eq!(div(&constant(1.0), &constant(3.0)), constant(1.0 / 3.0));
    }

    #[test]
    fn normalize_sorts_commutative_operands() {
        let a = mul(&sin(&t()), &y(1));
        let b = mul(&y(1), &sin(&t()));
        assert_eq!(a, b);
    }
}
