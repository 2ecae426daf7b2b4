//! Infix rendering in the parser's grammar.
//!
//! Parentheses are emitted exactly where re-parsing would otherwise build a
//! different tree, so `parse(render(e)) == e` for every constructed `e`.

use std::fmt::{self, Write};

use super::{Expr, Node, Number};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, &mut s);
        f.write_str(&s)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Factor,
    Numerator,
    Denominator,
    PowerOperand,
    NegOperand,
    Subtrahend,
}

fn write_expr(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Num(n) => write!(out, "{n}").unwrap(),
        Node::Var(v) => out.push_str(v.name()),
        Node::Basis(b) => out.push_str(&b.name()),
        Node::Call(func, arg) => {
            out.push_str(func.name());
            out.push('(');
            write_expr(arg, out);
            out.push(')');
        }
        Node::Sum(terms) => {
            for (i, t) in terms.iter().enumerate() {
                if i == 0 {
                    write_expr(t, out);
                } else if t.has_negative_sign() {
                    out.push_str(" - ");
                    write_in(&t.neg(), Slot::Subtrahend, out);
                } else {
                    out.push_str(" + ");
                    write_expr(t, out);
                }
            }
        }
        Node::Product(factors) => {
            for (i, fac) in factors.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                match fac.as_number() {
                    Some(n) if i == 0 => write!(out, "{n}").unwrap(),
                    _ => write_in(fac, Slot::Factor, out),
                }
            }
        }
        Node::Quotient(a, b) => {
            write_in(a, Slot::Numerator, out);
            out.push('/');
            write_in(b, Slot::Denominator, out);
        }
        Node::Power(b, x) => {
            write_in(b, Slot::PowerOperand, out);
            out.push('^');
            write_in(x, Slot::PowerOperand, out);
        }
        Node::Neg(a) => {
            out.push('-');
            write_in(a, Slot::NegOperand, out);
        }
    }
}

fn write_in(e: &Expr, slot: Slot, out: &mut String) {
    if needs_parens(e, slot) {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn simple_number(n: &Number) -> bool {
    !n.is_negative() && (n.is_integer() || matches!(n, Number::Float(_)))
}

fn needs_parens(e: &Expr, slot: Slot) -> bool {
    match e.node() {
        Node::Var(_) | Node::Call(..) | Node::Basis(_) => false,
        Node::Num(n) => match slot {
            Slot::Numerator | Slot::Subtrahend => n.is_negative(),
            _ => !simple_number(n),
        },
        Node::Sum(_) | Node::Neg(_) => true,
        Node::Power(..) => slot == Slot::PowerOperand,
        Node::Product(_) => !matches!(slot, Slot::Numerator | Slot::NegOperand | Slot::Subtrahend),
        Node::Quotient(..) => !matches!(slot, Slot::Numerator | Slot::Subtrahend),
    }
}
