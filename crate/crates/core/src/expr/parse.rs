//! Recursive-descent parser for scalar expressions.
//!
//! Precedence, tightest first: `^` (right-associative), unary `-`, `* /`, `+ -`.
//! The exponent of `^` may itself carry a unary minus, so `x^-2` parses.

use super::ast::{BinOp, Constant, Expr, Func};
use super::ExprError;

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut parser = Parser { src: text, pos: 0 };
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.error("empty expression"));
    }
    let expr = parser.sum()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.error(format!("unexpected `{}`", parser.peek().unwrap_or(' '))));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::neg(self.unary()?));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.bump();
                let inner = self.sum()?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let name = self.ident();
                self.skip_ws();
                if self.peek() == Some('(') {
                    let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownFunction {
                        name: name.to_string(),
                        offset: start,
                    })?;
                    self.bump();
                    let arg = self.sum()?;
                    if !self.eat(')') {
                        return Err(self.error("expected `)` after function argument"));
                    }
                    return Ok(Expr::call(func, arg));
                }
                if Func::from_name(name).is_some() {
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: format!("function `{name}` needs an argument"),
                    });
                }
                Ok(match Constant::from_name(name) {
                    Some(c) => Expr::Const(c),
                    None => Expr::Sym(name.to_string()),
                })
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        // Exponent suffix only when digits follow, so `2e` stays `2` then symbol `e`.
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let literal = &self.src[start..end];
        let value: f64 = literal.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{literal}`"),
        })?;
        if !value.is_finite() {
            return Err(ExprError::Syntax {
                offset: start,
                message: format!("number `{literal}` is out of range"),
            });
        }
        self.pos = end;
        Ok(Expr::Num(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_particle_in_box_energy() {
        let e = parse_expr("n^2*pi^2*hbar^2/(2*m*L^2)").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Div, ..)));
        // binary `^` keeps each exponent literal as its own leaf
        assert_eq!(e.node_count(), 19);
        let syms: Vec<_> = e.free_symbols().into_iter().collect();
        assert_eq!(syms, ["L", "m", "n"]);
    }

    #[test]
    fn test_zero_literal() {
        assert_eq!(parse_expr("0").unwrap(), Expr::Num(0.0));
    }

    #[test]
    fn test_round_trip_phase() {
        let e = parse_expr("exp(-I*omega*t)").unwrap();
        assert_eq!(e.to_string(), "exp(-I*omega*t)");
        assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn test_precedence() {
        let e = parse_expr("-x^2").unwrap();
        assert_eq!(e, Expr::neg(Expr::binary(BinOp::Pow, Expr::sym("x"), Expr::num(2.0))));
        let e = parse_expr("a - b - c").unwrap();
        assert_eq!(e.to_string(), "a-b-c");
        let e = parse_expr("a - (b - c)").unwrap();
        assert_eq!(e.to_string(), "a-(b-c)");
        let e = parse_expr("2^3^2").unwrap();
        assert_eq!(e.to_string(), "2^3^2");
        let e = parse_expr("(2^3)^2").unwrap();
        assert_eq!(e.to_string(), "(2^3)^2");
        let e = parse_expr("x^-1").unwrap();
        assert_eq!(e.to_string(), "x^-1");
    }

    #[test]
    fn test_whitespace_insensitive() {
        assert_eq!(parse_expr(" x +  2 * y ").unwrap(), parse_expr("x+2*y").unwrap());
    }

    #[test]
    fn test_scientific_literals() {
        assert_eq!(parse_expr("1.5e-3").unwrap(), Expr::Num(1.5e-3));
        let e = parse_expr("2*e").unwrap();
        assert_eq!(e, Expr::binary(BinOp::Mul, Expr::num(2.0), Expr::sym("e")));
    }

    #[test]
    fn test_syntax_error_offset() {
        match parse_expr("x + * y") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_expr("(x+1"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("   "), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expr("x y"), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn test_unknown_function() {
        match parse_expr("1 + tanh(x)") {
            Err(ExprError::UnknownFunction { name, offset }) => {
                assert_eq!(name, "tanh");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn test_unicode_constants() {
        assert_eq!(parse_expr("π").unwrap(), Expr::Const(Constant::Pi));
        assert_eq!(parse_expr("ħ").unwrap(), Expr::Const(Constant::Hbar));
    }
}
