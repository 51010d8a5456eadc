//! Recursive-descent parser for the expression grammar.
//!
//! Grammar (UTF-8, whitespace insignificant): identifiers `t`, `y1..y9`;
//! decimal literals (`0.5`, `1e-3`) and ratios `p/q`; operators
//! `+ - * / ^` with integer exponents; functions `sin`, `cos`, `exp`,
//! `bump(center-tuple, radius)`. `step`/`dstep`/`dbump` are accepted as
//! well so that every printable tree parses back.

use super::{constant, BumpNode, Node, SmoothExpr, StepNode};
use crate::geom::MultiIndex;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
                    end += 1;
                }
                // exponent part
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        while e < self.src.len() && self.src[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap();
                let v: f64 = text
                    .parse()
                    .map_err(|_| ParseError { pos: start, msg: format!("bad number literal `{text}`") })?;
                self.pos = end;
                return Ok(Some((start, Tok::Num(v))));
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[start..end]).unwrap().to_string();
                self.pos = end;
                return Ok(Some((start, Tok::Ident(text))));
            }
            other => return err(start, format!("unexpected character `{}`", other as char)),
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }
}

pub(crate) struct Parser {
    toks: Vec<(usize, Tok)>,
    cur: usize,
    end_pos: usize,
    /// `Some(n)` enables jet atoms `J[p,(q)]` over an n-dimensional
    /// coordinate space; jets become variables n, n+1, ...
    jet_dim: Option<usize>,
    jet_table: Vec<(u32, MultiIndex)>,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        let mut lx = Lexer::new(src);
        let mut toks = Vec::new();
        while let Some(t) = lx.next()? {
            toks.push(t);
        }
        Ok(Parser { toks, cur: 0, end_pos: src.len(), jet_dim: None, jet_table: Vec::new() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cur).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.cur).map(|(p, _)| *p).unwrap_or(self.end_pos)
    }

    fn bump_tok(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.cur).cloned();
        self.cur += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, ParseError> {
        let pos = self.pos();
        match self.bump_tok() {
            Some((p, t)) if t == want => Ok(p),
            Some((p, t)) => err(p, format!("expected {what}, found {t:?}")),
            None => err(pos, format!("expected {what}, found end of input")),
        }
    }

    pub(crate) fn parse_full(&mut self) -> Result<SmoothExpr, ParseError> {
        let e = self.expr()?;
        if let Some((p, t)) = self.toks.get(self.cur) {
            return err(*p, format!("trailing input starting with {t:?}"));
        }
        Ok(e)
    }

    pub(crate) fn expr(&mut self) -> Result<SmoothExpr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump_tok();
                    let rhs = self.term()?;
                    acc = SmoothExpr::node(Node::Add(vec![acc, rhs]));
                }
                Some(Tok::Minus) => {
                    self.bump_tok();
                    let rhs = self.term()?;
                    acc = SmoothExpr::node(Node::Add(vec![
                        acc,
                        SmoothExpr::node(Node::Mul(vec![constant(-1.0), rhs])),
                    ]));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<SmoothExpr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump_tok();
                    let rhs = self.unary()?;
                    acc = SmoothExpr::node(Node::Mul(vec![acc, rhs]));
                }
                Some(Tok::Slash) => {
                    self.bump_tok();
                    let rhs = self.unary()?;
                    acc = SmoothExpr::node(Node::Div(acc, rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<SmoothExpr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump_tok();
            let inner = self.unary()?;
            // fold into the literal so `-1` stays a constant
            if let Node::Const(c) = inner.as_node() {
                return Ok(constant(-c));
            }
            return Ok(SmoothExpr::node(Node::Mul(vec![constant(-1.0), inner])));
        }
        self.power()
    }

    fn power(&mut self) -> Result<SmoothExpr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump_tok();
            let mut sign = 1i32;
            if matches!(self.peek(), Some(Tok::Minus)) {
                self.bump_tok();
                sign = -1;
            }
            let pos = self.pos();
            match self.bump_tok() {
                Some((p, Tok::Num(v))) => {
                    if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                        return err(p, format!("exponent must be an integer, got {v}"));
                    }
                    return Ok(SmoothExpr::node(Node::Pow(base, sign * v as i32)));
                }
                Some((p, t)) => return err(p, format!("expected integer exponent, found {t:?}")),
                None => return err(pos, "expected integer exponent, found end of input"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<SmoothExpr, ParseError> {
        let pos = self.pos();
        match self.bump_tok() {
            Some((_, Tok::Num(v))) => Ok(constant(v)),
            Some((_, Tok::LParen)) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((p, Tok::Ident(name))) => self.ident(p, &name),
            Some((p, t)) => err(p, format!("expected an expression, found {t:?}")),
            None => err(pos, "expected an expression, found end of input"),
        }
    }

    fn ident(&mut self, pos: usize, name: &str) -> Result<SmoothExpr, ParseError> {
        match name {
            "t" => Ok(super::t()),
            "sin" | "cos" | "exp" => {
                self.expect(Tok::LParen, "`(`")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(match name {
                    "sin" => SmoothExpr::node(Node::Sin(arg)),
                    "cos" => SmoothExpr::node(Node::Cos(arg)),
                    _ => SmoothExpr::node(Node::Exp(arg)),
                })
            }
            "bump" => {
                self.expect(Tok::LParen, "`(`")?;
                let center = self.center_tuple()?;
                self.expect(Tok::Comma, "`,`")?;
                let radius = self.number("bump radius")?;
                self.expect(Tok::RParen, "`)`")?;
                if !(radius > 0.0) {
                    return err(pos, format!("bump radius must be positive, got {radius}"));
                }
                Ok(SmoothExpr::node(Node::Bump(BumpNode {
                    orders: MultiIndex::zero(center.len()),
                    center,
                    radius,
                })))
            }
            "dbump" => {
                self.expect(Tok::LParen, "`(`")?;
                let orders = self.center_tuple()?;
                self.expect(Tok::Comma, "`,`")?;
                let center = self.center_tuple()?;
                self.expect(Tok::Comma, "`,`")?;
                let radius = self.number("bump radius")?;
                self.expect(Tok::RParen, "`)`")?;
                if orders.len() != center.len() {
                    return err(pos, "derivative orders and center differ in length");
                }
                let orders = MultiIndex(orders.iter().map(|v| *v as u32).collect());
                Ok(SmoothExpr::node(Node::Bump(BumpNode { center, radius, orders })))
            }
            "step" | "dstep" => {
                self.expect(Tok::LParen, "`(`")?;
                let axis = self.axis_name()?;
                self.expect(Tok::Comma, "`,`")?;
                let lo = self.number("step lower edge")?;
                self.expect(Tok::Comma, "`,`")?;
                let hi = self.number("step upper edge")?;
                let order = if name == "dstep" {
                    self.expect(Tok::Comma, "`,`")?;
                    self.number("step derivative order")? as u32
                } else {
                    0
                };
                self.expect(Tok::RParen, "`)`")?;
                if !(lo < hi) {
                    return err(pos, format!("step needs lo < hi, got [{lo}, {hi}]"));
                }
                Ok(SmoothExpr::node(Node::Step(StepNode { axis, lo, hi, order })))
            }
            "J" if self.jet_dim.is_some() => self.jet(pos),
            _ => {
                if let Some(rest) = name.strip_prefix('y') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if (1..=9).contains(&k) {
                            return Ok(super::y(k));
                        }
                    }
                }
                err(pos, format!("unknown identifier `{name}`"))
            }
        }
    }

    /// `J[p,(q1,...,q_{n-1})]`: the jet D_t^p D_y^q of the unknown.
    fn jet(&mut self, pos: usize) -> Result<SmoothExpr, ParseError> {
        let dim = self.jet_dim.expect("jet mode");
        self.expect(Tok::LBracket, "`[`")?;
        let p = self.number("jet time order")?;
        if p < 0.0 || p.fract() != 0.0 {
            return err(pos, format!("jet time order must be a nonnegative integer, got {p}"));
        }
        self.expect(Tok::Comma, "`,`")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut q = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                let v = self.number("jet y-order")?;
                if v < 0.0 || v.fract() != 0.0 {
                    return err(pos, format!("jet y-order must be a nonnegative integer, got {v}"));
                }
                q.push(v as u32);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump_tok();
                    }
                    _ => break,
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::RBracket, "`]`")?;
        if q.len() != dim - 1 {
            return err(
                pos,
                format!("jet needs {} y-orders for dimension {dim}, got {}", dim - 1, q.len()),
            );
        }
        let entry = (p as u32, MultiIndex(q));
        let slot = match self.jet_table.iter().position(|e| *e == entry) {
            Some(i) => i,
            None => {
                self.jet_table.push(entry);
                self.jet_table.len() - 1
            }
        };
        Ok(super::var(dim + slot))
    }

    fn axis_name(&mut self) -> Result<usize, ParseError> {
        let pos = self.pos();
        match self.bump_tok() {
            Some((_, Tok::Ident(n))) if n == "t" => Ok(0),
            Some((p, Tok::Ident(n))) => {
                if let Some(rest) = n.strip_prefix('y') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if (1..=9).contains(&k) {
                            return Ok(k);
                        }
                    }
                }
                err(p, format!("expected a coordinate name, found `{n}`"))
            }
            Some((p, t)) => err(p, format!("expected a coordinate name, found {t:?}")),
            None => err(pos, "expected a coordinate name"),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let pos = self.pos();
        let mut sign = 1.0;
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump_tok();
            sign = -1.0;
        }
        match self.bump_tok() {
            Some((_, Tok::Num(v))) => Ok(sign * v),
            Some((p, t)) => err(p, format!("expected {what}, found {t:?}")),
            None => err(pos, format!("expected {what}, found end of input")),
        }
    }

    /// A bare number or a parenthesized tuple of numbers.
    fn center_tuple(&mut self) -> Result<Vec<f64>, ParseError> {
        if matches!(self.peek(), Some(Tok::LParen)) {
            self.bump_tok();
            let mut vals = vec![self.number("tuple entry")?];
            loop {
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump_tok();
                        vals.push(self.number("tuple entry")?);
                    }
                    _ => break,
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            Ok(vals)
        } else {
            Ok(vec![self.number("tuple entry")?])
        }
    }
}

/// Parse an expression; the result is in shallow normal form, so
/// printing and re-parsing reproduces the tree exactly.
pub fn parse_expr(text: &str) -> Result<SmoothExpr, ParseError> {
    let mut p = Parser::new(text)?;
    Ok(p.parse_full()?.normalize())
}

/// Parse a PDE right-hand side over an n-dimensional coordinate space:
/// jet atoms `J[p,(q)]` are allowed and become the variables n, n+1, ...
/// in order of first appearance. Returns the expression together with
/// the jet table.
pub fn parse_pde_rhs(
    text: &str,
    dim: usize,
) -> Result<(SmoothExpr, Vec<(u32, MultiIndex)>), ParseError> {
    let mut p = Parser::new(text)?;
    p.jet_dim = Some(dim);
    let e = p.parse_full()?.normalize();
    Ok((e, p.jet_table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{add, sin, t, y};

    #[test]
    fn parses_basic_grammar() {
        let e = parse_expr("sin(y1 + t)").unwrap();
        assert_eq!(e, sin(&add(&y(1), &t())));
        assert!(parse_expr("1/3 * t").is_ok());
        assert!(parse_expr("bump((0.5, 0.5), 0.1)").is_ok());
        assert!(parse_expr("bump(0, 1)").is_ok());
        assert!(parse_expr("t^2 - 2*y1^3").is_ok());
    }

    #[test]
    fn rejects_pde_symbols() {
        let e = parse_expr("U");
        let err = e.unwrap_err();
        assert!(err.msg.contains("unknown identifier"), "{err}");
        assert_eq!(err.pos, 0);
    }

    #[test]
    fn reports_positions() {
        let err = parse_expr("sin(t) + @").unwrap_err();
        assert_eq!(err.pos, 9);
        let err = parse_expr("sin(t").unwrap_err();
        assert!(err.msg.contains("`)`"));
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "sin(y1 + t)",
            "bump((0.5, 0.5), 0.1)",
            "t * y1 - 1/3",
            "exp(t^2) * cos(y1)",
            "2.5e-3 + t^-2",
            "step(t, 0.1, 0.2)",
            "(1 + t)^3 / (2 + sin(y1))",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = format!("{e}");
            let back = parse_expr(&printed).unwrap();
            assert_eq!(e, back, "round trip failed: {src} -> {printed}");
        }
    }
}
