//! Printing in the same syntax the parser reads.

use std::fmt::{self, Write};

use num_traits::Signed;

use super::{Expr, Node, Rational};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const ATOM: u8 = 4;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

pub fn rational_text(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Whether the term prints with a leading minus sign inside a sum.
fn negative_term(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Const(c) if c.is_negative() => Some(Expr::constant(-c)),
        Node::Product(fs) => match fs[0].as_const() {
            Some(c) if c.is_negative() => {
                let mut rest = fs.clone();
                rest[0] = Expr::constant(-c);
                Some(Expr::product(rest))
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_expr<W: Write>(w: &mut W, e: &Expr, parent: u8) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            let needs = parent >= PRODUCT && (c.is_negative() || !c.is_integer());
            paren(w, needs, |w| w.write_str(&rational_text(c)))
        }
        Node::Var(v) => write!(w, "{}", v.name()),
        Node::Sum(ts) => paren(w, parent > SUM, |w| {
            // Constant term last.
            let ordered = ts.iter().filter(|t| t.as_const().is_none()).chain(ts.iter().filter(|t| t.as_const().is_some()));
            for (i, t) in ordered.enumerate() {
                match (i, negative_term(t)) {
                    (0, _) => write_expr(w, t, SUM)?,
                    (_, Some(pos)) => {
                        w.write_str(" - ")?;
                        match pos.as_const() {
                            Some(c) => w.write_str(&rational_text(c))?,
                            None => write_expr(w, &pos, PRODUCT)?,
                        }
                    }
                    (_, None) => {
                        w.write_str(" + ")?;
                        write_expr(w, t, SUM)?;
                    }
                }
            }
            Ok(())
        }),
        Node::Product(fs) => paren(w, parent > PRODUCT, |w| {
            let mut rest = &fs[..];
            if let Some(c) = fs[0].as_const() {
                if *c == -Rational::from_integer(1.into()) {
                    w.write_str("-")?;
                    rest = &fs[1..];
                }
            }
            for (i, f) in rest.iter().enumerate() {
                if i > 0 {
                    w.write_str("*")?;
                }
                let level = if matches!(f.node(), Node::Quotient(..)) { POWER } else { PRODUCT };
                // The leading coefficient may print bare; `3/4*x` reads back as `(3/4)*x`.
                match f.node() {
                    Node::Const(c) if i == 0 && !c.is_negative() => w.write_str(&rational_text(c))?,
                    _ => write_expr(w, f, level)?,
                }
            }
            Ok(())
        }),
        Node::Pow(b, k) => paren(w, parent > POWER, |w| {
            write_expr(w, b, ATOM)?;
            if k.is_integer() && !k.is_negative() {
                write!(w, "^{}", rational_text(k))
            } else {
                write!(w, "^({})", rational_text(k))
            }
        }),
        Node::Quotient(a, b) => paren(w, parent > PRODUCT, |w| {
            write_expr(w, a, PRODUCT)?;
            w.write_str("/")?;
            write_expr(w, b, POWER)
        }),
        Node::Unary(f, a) => {
            write!(w, "{}(", f.name())?;
            write_expr(w, a, 0)?;
            w.write_str(")")
        }
        Node::Bump(b) => {
            w.write_str("bump")?;
            if !b.deriv.is_zero() {
                write!(w, "_{}", b.naming().subscript(&b.deriv))?;
            }
            w.write_str("(")?;
            for (i, c) in b.bump.center.iter().enumerate() {
                if i > 0 {
                    w.write_str(", ")?;
                }
                w.write_str(&rational_text(c))?;
            }
            write!(
                w,
                "; {}; {})",
                rational_text(&b.bump.r_in),
                rational_text(&b.bump.r_out)
            )
        }
    }
}

fn paren<W: Write>(
    w: &mut W,
    needed: bool,
    body: impl FnOnce(&mut W) -> fmt::Result,
) -> fmt::Result {
    if needed {
        w.write_str("(")?;
        body(w)?;
        w.write_str(")")
    } else {
        body(w)
    }
}
