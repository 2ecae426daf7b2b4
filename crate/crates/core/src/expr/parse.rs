//! Pratt parser for the infix expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?          (right associative)
//! atom    := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `x u ux w C C1 C2`, the constant `pi`, the
//! functions listed in [`Func`](super::Func), and any basis functions
//! registered in the [`Scope`] (`psi1`, `dpsi1`, ...).

use std::sync::Arc;

use super::{BasisFn, Expr, ExprError, Func, Number, Var};
use crate::catalog::LinearBasis;

/// Names available to the parser beyond the built-in alphabet.
#[derive(Clone, Default)]
pub struct Scope {
    bases: Vec<Arc<LinearBasis>>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    pub fn with_basis(mut self, basis: Arc<LinearBasis>) -> Scope {
        self.bases.push(basis);
        self
    }

    pub fn bases(&self) -> &[Arc<LinearBasis>] {
        &self.bases
    }

    fn lookup_basis(&self, name: &str) -> Option<BasisFn> {
        let (derivative, rest) = match name.strip_prefix('d') {
            Some(rest) => (true, rest),
            None => (false, name),
        };
        let index = match rest.chars().last()? {
            '1' => 0,
            '2' => 1,
            _ => return None,
        };
        let stem = &rest[..rest.len() - 1];
        let basis = self.bases.iter().find(|b| b.name() == stem)?;
        Some(BasisFn {
            basis: basis.clone(),
            index,
            derivative,
        })
    }
}

pub fn parse(text: &str) -> Result<Expr, ExprError> {
    parse_with(text, &Scope::default())
}

pub fn parse_with(text: &str, scope: &Scope) -> Result<Expr, ExprError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scope,
    };
    let e = p.expr(0)?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.syntax("unexpected trailing input")),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Number),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let (tok, end) = lex_number(text, start)?;
                out.push((tok, start));
                i = end;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn lex_number(text: &str, start: usize) -> Result<(Tok, usize), ExprError> {
    let bytes = text.as_bytes();
    let mut i = start;
    let mut is_float = false;
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > s
    };
    let mut any = digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        is_float = true;
        i += 1;
        any |= digits(&mut i);
    }
    if !any {
        return Err(ExprError::Syntax {
            offset: start,
            message: "malformed number".into(),
        });
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if digits(&mut j) {
            is_float = true;
            i = j;
        }
    }
    let lit = &text[start..i];
    let num = if is_float {
        Number::Float(lit.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: "malformed number".into(),
        })?)
    } else {
        match lit.parse::<i64>() {
            Ok(n) => Number::int(n),
            Err(_) => Number::Float(lit.parse().unwrap_or(f64::INFINITY)),
        }
    };
    Ok((Tok::Num(num), i))
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    scope: &'a Scope,
}

const BP_SUM: u8 = 10;
const BP_PRODUCT: u8 = 20;
const BP_UNARY: u8 = 25;
const BP_POWER: u8 = 30;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: &str) -> ExprError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        };
        ExprError::Syntax {
            offset: self.offset(),
            message: format!("{message}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(&format!("expected {what}")))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        while let Tok::Op(c) = self.peek() {
            let op = *c;
            let (lbp, rbp) = match op {
                '+' | '-' => (BP_SUM, BP_SUM + 1),
                '*' | '/' => (BP_PRODUCT, BP_PRODUCT + 1),
                '^' => (BP_POWER + 1, BP_POWER),
                _ => unreachable!(),
            };
            if lbp < min_bp {
                break;
            }
            let (_, at) = self.bump();
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => lhs
                    .checked_div(&rhs)
                    .ok_or(ExprError::DivisionByZero { offset: at })?,
                '^' => {
                    let negative_exponent = rhs.as_number().is_some_and(Number::is_negative);
                    if lhs.is_zero() && negative_exponent {
                        return Err(ExprError::DivisionByZero { offset: at });
                    }
                    lhs.pow(&rhs)
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(n) => Ok(Expr::number(n)),
            Tok::Op('-') => Ok(self.expr(BP_UNARY)?.neg()),
            Tok::Op('+') => self.expr(BP_UNARY),
            Tok::LParen => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name, at),
            other => {
                if other != Tok::End {
                    self.pos -= 1;
                }
                Err(self.syntax("expected an operand"))
            }
        }
    }

    fn identifier(&mut self, name: &str, at: usize) -> Result<Expr, ExprError> {
        if let Some(f) = Func::from_name(name) {
            if *self.peek() != Tok::LParen {
                return Err(self.syntax(&format!("expected `(` after `{name}`")));
            }
            self.bump();
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                args.push(self.expr(0)?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr(0)?);
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            if args.len() != 1 {
                return Err(ExprError::Arity {
                    name: name.to_string(),
                    offset: at,
                    expected: 1,
                    found: args.len(),
                });
            }
            return Ok(Expr::call(f, args.pop().unwrap()));
        }
        let atom = if let Some(v) = Var::from_name(name) {
            Expr::var(v)
        } else if name == "pi" {
            Expr::float(std::f64::consts::PI)
        } else if let Some(b) = self.scope.lookup_basis(name) {
            Expr::basis(b)
        } else {
            return Err(ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset: at,
            });
        };
        if *self.peek() == Tok::LParen {
            return Err(self.syntax(&format!("`{name}` is not a function")));
        }
        Ok(atom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn precedence() {
        assert_eq!(parse("1 + 2*3").unwrap(), Expr::int(7));
        assert_eq!(parse("2^3^2").unwrap(), Expr::int(512));
        assert_eq!(parse("-2^2").unwrap(), Expr::int(-4));
        assert_eq!(parse("(-2)^2").unwrap(), Expr::int(4));
        assert_eq!(parse("2*u^-1").unwrap(), parse("2*u^(-1)").unwrap());
        assert_eq!(parse("8/4/2").unwrap(), Expr::one());
    }

    #[test]
    fn ux_is_a_single_token() {
        assert_eq!(parse("ux").unwrap(), Expr::ux());
        assert!(matches!(
            parse("u x"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
    }

    #[test]
    fn lambda_of_the_running_family() {
        let e = parse("ux/u - u + 1/u").unwrap();
        assert!(matches!(e.node(), Node::Sum(ts) if ts.len() == 3));
    }

    #[test]
    fn nested_call() {
        let e = parse("arctan(u/(1+ux))").unwrap();
        match e.node() {
            Node::Call(Func::Arctan, arg) => assert!(matches!(arg.node(), Node::Quotient(..))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("u + foo"),
            Err(ExprError::UnknownIdentifier {
                name: "foo".into(),
                offset: 4
            })
        );
        assert!(matches!(
            parse("sin(u, x)"),
            Err(ExprError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert_eq!(
            parse("u/(1-1)"),
            Err(ExprError::DivisionByZero { offset: 1 })
        );
        assert!(matches!(
            parse("u +"),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            parse("(u"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("u $ 2"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(parse("u(x)"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn floats_and_constants() {
        assert_eq!(parse("1.5").unwrap(), Expr::float(1.5));
        assert_eq!(parse("2e-3").unwrap(), Expr::float(2e-3));
        assert_eq!(parse("3/6").unwrap(), Expr::rational(1, 2));
        assert!(matches!(
            parse("pi").unwrap().as_number(),
            Some(Number::Float(_))
        ));
    }
}
