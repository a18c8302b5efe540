//! Recursive-descent parser for the expression syntax.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! Identifiers resolve to space variables, to jet coordinates written as
//! `<unknown>_<axis letters>` (`u_xy` is the mixed second derivative, a bare `u` is
//! the unknown itself), to the functions `sin cos exp log sqrt`, or to the bump
//! primitive `bump[_<axes>](c1, .., cn; r_in; r_out)`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::{Expr, Func, Naming, Rational, VarKind, Variable};
use crate::constructor::bump::BumpFunction;
use crate::multi_index::MultiIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseDiagnostic {
    /// Character offset into the input.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)
    }
}

/// Declared names for one parse: `n` space axes, `k` unknowns, and optionally a cap
/// on jet order.
#[derive(Debug, Clone)]
pub struct ParseContext {
    pub naming: Arc<Naming>,
    pub max_jet_order: Option<u32>,
}

impl ParseContext {
    pub fn new(naming: Arc<Naming>) -> Self {
        ParseContext { naming, max_jet_order: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Semi,
    End,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseDiagnostic> {
    Err(ParseDiagnostic { position, message: message.into() })
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseDiagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            c if c.is_ascii_digit() || c == '.' => {
                let (value, end) = number(&chars, i)?;
                out.push((Tok::Num(value), start));
                i = end;
                continue;
            }
            c if c.is_alphabetic() => {
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), start));
                continue;
            }
            other => return err(i, format!("unexpected character `{other}`")),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

/// Decimal literal, read exactly: `1.25` is `5/4`, `2e-3` is `1/500`.
fn number(chars: &[char], start: usize) -> Result<(Rational, usize), ParseDiagnostic> {
    let mut i = start;
    let mut digits = String::new();
    let mut frac_len = 0u32;
    let mut seen_dot = false;
    while i < chars.len() && (chars[i].is_ascii_digit() || (chars[i] == '.' && !seen_dot)) {
        if chars[i] == '.' {
            seen_dot = true;
        } else {
            digits.push(chars[i]);
            if seen_dot {
                frac_len += 1;
            }
        }
        i += 1;
    }
    if digits.is_empty() {
        return err(start, "malformed number");
    }
    let mut exp: i64 = 0;
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        let mut sign = 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            if chars[j] == '-' {
                sign = -1;
            }
            j += 1;
        }
        let ds = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j > ds {
            let s: String = chars[ds..j].iter().collect();
            exp = sign * s.parse::<i64>().map_err(|_| ParseDiagnostic {
                position: ds,
                message: "exponent too large".into(),
            })?;
            i = j;
        }
    }
    let mantissa: BigInt = digits.parse().expect("digits only");
    let scale = exp - frac_len as i64;
    if scale.unsigned_abs() > 4096 {
        return err(start, "decimal exponent out of range");
    }
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
    };
    Ok((value, i))
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a ParseContext,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseDiagnostic> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            err(self.offset(), format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(Expr::negated(self.term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = Expr::product(vec![acc, self.unary()?]);
                }
                Tok::Slash => {
                    let at = self.offset();
                    self.bump();
                    let d = self.unary()?;
                    if d.is_zero() {
                        return err(at, "division by the constant zero");
                    }
                    acc = Expr::quotient(acc, d);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseDiagnostic> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::negated(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseDiagnostic> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let at = self.offset();
            let exp = self.unary()?;
            let Some(k) = exp.as_const() else {
                return err(at, "exponent must be a rational constant");
            };
            return Ok(Expr::pow(base, k.clone()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseDiagnostic> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(r) => Ok(Expr::constant(r)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name, at),
            Tok::End => err(at, "unexpected end of input"),
            Tok::RParen => err(at, "unbalanced `)`"),
            other => err(at, format!("unexpected token {other:?}")),
        }
    }

    fn identifier(&mut self, name: &str, at: usize) -> Result<Expr, ParseDiagnostic> {
        let naming = &self.ctx.naming;
        if let Some(f) = Func::from_name(name) {
            self.expect(Tok::LParen, "`(` after function name")?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::unary(f, arg));
        }
        if name == "abs" {
            return err(at, "`abs` is not smooth and is not admitted");
        }
        if name == "bump" || name.starts_with("bump_") {
            let deriv = match name.strip_prefix("bump_") {
                Some(sub) => self.subscript(sub, at + 5)?,
                None => MultiIndex::zero(naming.dim()),
            };
            return self.bump_call(deriv, at);
        }
        if let Some(axis) = naming.space.iter().position(|s| s == name) {
            return Ok(Expr::var(Variable::space(axis, naming)));
        }
        if let Some(u) = naming.unknowns.iter().position(|s| s == name) {
            return Ok(Expr::var(Variable::jet(u, MultiIndex::zero(naming.dim()), naming)));
        }
        if let Some((head, sub)) = name.split_once('_') {
            if let Some(u) = naming.unknowns.iter().position(|s| s == head) {
                let index = self.subscript(sub, at + head.chars().count() + 1)?;
                if let Some(max) = self.ctx.max_jet_order {
                    if index.order() > max {
                        return err(at, format!("jet `{name}` exceeds the declared order {max}"));
                    }
                }
                return Ok(Expr::var(Variable::new(VarKind::jet(u, index), naming.clone())));
            }
        }
        err(at, format!("unknown identifier `{name}`"))
    }

    /// Greedy longest-match of axis names, e.g. `xxy` -> (2,1).
    fn subscript(&self, sub: &str, at: usize) -> Result<MultiIndex, ParseDiagnostic> {
        let naming = &self.ctx.naming;
        let mut entries = vec![0u32; naming.dim()];
        let mut rest = sub;
        let mut offset = at;
        if rest.is_empty() {
            return err(at, "empty derivative subscript");
        }
        while !rest.is_empty() {
            let hit = naming
                .space
                .iter()
                .enumerate()
                .filter(|(_, s)| rest.starts_with(s.as_str()))
                .max_by_key(|(_, s)| s.len());
            match hit {
                Some((axis, s)) => {
                    entries[axis] += 1;
                    rest = &rest[s.len()..];
                    offset += s.chars().count();
                }
                None => return err(offset, format!("malformed subscript `{sub}`")),
            }
        }
        Ok(MultiIndex::new(entries))
    }

    fn constant_arg(&mut self, what: &str) -> Result<Rational, ParseDiagnostic> {
        let at = self.offset();
        let e = self.expr()?;
        match e.as_const() {
            Some(c) => Ok(c.clone()),
            None => err(at, format!("{what} must be a rational constant")),
        }
    }

    fn bump_call(&mut self, deriv: MultiIndex, at: usize) -> Result<Expr, ParseDiagnostic> {
        let n = self.ctx.naming.dim();
        self.expect(Tok::LParen, "`(` after bump")?;
        let mut center = Vec::with_capacity(n);
        for i in 0..n {
            center.push(self.constant_arg("bump center")?);
            if i + 1 < n {
                self.expect(Tok::Comma, "`,` between center coordinates")?;
            }
        }
        self.expect(Tok::Semi, "`;` after bump center")?;
        let r_in = self.constant_arg("inner radius")?;
        self.expect(Tok::Semi, "`;` after inner radius")?;
        let r_out = self.constant_arg("outer radius")?;
        self.expect(Tok::RParen, "`)`")?;
        if !r_in.is_positive() || r_out <= r_in || r_in.is_zero() {
            return err(at, "bump radii must satisfy 0 < r_in < r_out");
        }
        let bump = BumpFunction::new(center, r_in, r_out);
        Ok(Expr::bump(Arc::new(bump), deriv, self.ctx.naming.clone()))
    }
}

/// Parses `text` into a canonical expression.
pub fn parse_expression(text: &str, ctx: &ParseContext) -> Result<Expr, ParseDiagnostic> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, ctx };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        Tok::RParen => err(p.offset(), "unbalanced `)`"),
        _ => err(p.offset(), "unexpected trailing input"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    fn ctx2() -> ParseContext {
        ParseContext::new(Naming::new(["x", "y"], ["u"]))
    }

    fn jet(ctx: &ParseContext, p: [u32; 2]) -> Expr {
        Expr::var(Variable::new(VarKind::jet(0, MultiIndex::new(p)), ctx.naming.clone()))
    }

    #[test]
    fn jets_and_powers() {
        let ctx = ctx2();
        let e = parse_expression("u_x^2 + u_yy", &ctx).unwrap();
        let want = Expr::sum(vec![Expr::powi(jet(&ctx, [1, 0]), 2), jet(&ctx, [0, 2])]);
        assert_eq!(e, want);
        match e.node() {
            Node::Sum(ts) => assert_eq!(ts.len(), 2),
            _ => panic!("expected a sum"),
        }
        assert_eq!(parse_expression("u_yx", &ctx).unwrap(), jet(&ctx, [1, 1]));
        assert_eq!(parse_expression("u", &ctx).unwrap(), jet(&ctx, [0, 0]));
    }

    #[test]
    fn truncated_input_position() {
        let d = parse_expression("x + ", &ctx2()).unwrap_err();
        assert_eq!(d.position, 4);
    }

    #[test]
    fn rational_literal_in_power() {
        let ctx = ParseContext::new(Naming::new(["x"], ["u"]));
        let e = parse_expression("(x - 1/2)^3", &ctx).unwrap();
        match e.node() {
            Node::Pow(base, k) => {
                assert_eq!(*k, Rational::from_integer(3.into()));
                match base.node() {
                    Node::Sum(ts) => assert!(ts
                        .iter()
                        .any(|t| t.as_const() == Some(&Rational::new((-1).into(), 2.into())))),
                    _ => panic!("expected sum base"),
                }
            }
            _ => panic!("expected a power"),
        }
    }

    #[test]
    fn decimals_are_exact() {
        let ctx = ctx2();
        assert_eq!(parse_expression("1.25", &ctx).unwrap(), Expr::ratio(5, 4));
        assert_eq!(parse_expression("2e-3", &ctx).unwrap(), Expr::ratio(1, 500));
    }

    #[test]
    fn diagnostics() {
        let ctx = ctx2();
        let d = parse_expression("x + q", &ctx).unwrap_err();
        assert_eq!(d.position, 4);
        assert!(d.message.contains("unknown identifier"));
        let d = parse_expression("u_xz", &ctx).unwrap_err();
        assert!(d.message.contains("malformed subscript"));
        assert_eq!(d.position, 3);
        let d = parse_expression("(x + y", &ctx).unwrap_err();
        assert_eq!(d.position, 6);
        let d = parse_expression("x + y)", &ctx).unwrap_err();
        assert!(d.message.contains("unbalanced"));
        assert!(parse_expression("abs(x)", &ctx).is_err());
        assert!(parse_expression("x^y", &ctx).is_err());
        assert!(parse_expression("1/0", &ctx).is_err());
    }

    #[test]
    fn bump_syntax() {
        let ctx = ctx2();
        let e = parse_expression("bump_x(1/2, 1/4; 1/8; 1/4)", &ctx).unwrap();
        match e.node() {
            Node::Bump(b) => {
                assert_eq!(b.deriv, MultiIndex::new([1, 0]));
                assert_eq!(b.bump.r_in, Rational::new(1.into(), 8.into()));
            }
            _ => panic!("expected a bump"),
        }
        assert!(parse_expression("bump(0, 0; 1; 1/2)", &ctx).is_err());
    }
}
