//! Recursive descent parser producing [`Expr`] trees.

use super::{BinOp, CmpOp, Comparison, Expr, ExprError, Func, Token, TokenKind};

/// Parses a full token sequence into an expression tree.
pub fn parse(tokens: &[Token]) -> Result<Expr, ExprError> {
    if tokens.is_empty() {
        return Err(ExprError::Empty);
    }
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(t.position, format!("unexpected {} `{}`", t.kind, t.lexeme)));
    }
    Ok(e)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn end_offset(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.position + t.lexeme.chars().count())
            .unwrap_or(0)
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> ExprError {
        ExprError::Parse {
            offset,
            message: message.into(),
        }
    }

    fn error_here(&self, expected: &str) -> ExprError {
        match self.peek() {
            Some(t) => self.error_at(
                t.position,
                format!("expected {expected}, found {} `{}`", t.kind, t.lexeme),
            ),
            None => self.error_at(
                self.end_offset(),
                format!("expected {expected}, found end of input"),
            ),
        }
    }

    fn eat(&mut self, kind: TokenKind, lexeme: &str) -> bool {
        match self.peek() {
            Some(t) if t.is(kind, lexeme) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn expect(&mut self, kind: TokenKind, lexeme: &str) -> Result<(), ExprError> {
        if self.eat(kind, lexeme) {
            Ok(())
        } else {
            Err(self.error_here(&format!("`{lexeme}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(TokenKind::Operator, "+") {
                BinOp::Add
            } else if self.eat(TokenKind::Operator, "-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(TokenKind::Operator, "*") {
                BinOp::Mul
            } else if self.eat(TokenKind::Operator, "/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(TokenKind::Operator, "-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat(TokenKind::Operator, "^") {
            // right-associative; the exponent may itself be negated
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek() else {
            return Err(self.error_here("an operand"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                let v: f64 = tok
                    .lexeme
                    .parse()
                    .map_err(|_| self.error_at(tok.position, "malformed number"))?;
                Ok(Expr::Const(v))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.eat(TokenKind::Paren, "(") {
                    self.call(tok)
                } else if tok.lexeme == "if" || Func::lookup(&tok.lexeme).is_some() {
                    Err(self.error_at(tok.position, format!("`{}` must be called", tok.lexeme)))
                } else {
                    Ok(Expr::Var(tok.lexeme.clone()))
                }
            }
            TokenKind::Paren if tok.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::Paren, ")")?;
                Ok(inner)
            }
            _ => Err(self.error_here("an operand")),
        }
    }

    fn call(&mut self, name: &Token) -> Result<Expr, ExprError> {
        if name.lexeme == "if" {
            let cond = self.comparison()?;
            self.expect(TokenKind::Comma, ",")?;
            let then = self.expr()?;
            self.expect(TokenKind::Comma, ",")?;
            let otherwise = self.expr()?;
            if self.peek().is_some_and(|t| t.kind == TokenKind::Comma) {
                return Err(self.error_at(name.position, "`if` takes 3 arguments"));
            }
            self.expect(TokenKind::Paren, ")")?;
            return Ok(Expr::Cond {
                cond,
                then: Box::new(then),
                otherwise: Box::new(otherwise),
            });
        }

        let func = Func::lookup(&name.lexeme).ok_or_else(|| {
            self.error_at(name.position, format!("unknown function `{}`", name.lexeme))
        })?;
        let mut args = Vec::new();
        if !self.eat(TokenKind::Paren, ")") {
            loop {
                args.push(self.expr()?);
                if self.eat(TokenKind::Comma, ",") {
                    continue;
                }
                self.expect(TokenKind::Paren, ")")?;
                break;
            }
        }
        if args.len() != func.arity() {
            return Err(self.error_at(
                name.position,
                format!(
                    "`{}` takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
            ));
        }
        Ok(Expr::Call { func, args })
    }

    fn comparison(&mut self) -> Result<Comparison, ExprError> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => CmpOp::from_symbol(&t.lexeme),
            _ => None,
        }
        .ok_or_else(|| self.error_here("a comparison operator"))?;
        self.pos += 1;
        let rhs = self.expr()?;
        Ok(Comparison {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::tokenize;

    fn p(src: &str) -> Result<Expr, ExprError> {
        parse(&tokenize(src)?)
    }

    fn num(v: f64) -> Expr {
        Expr::Const(v)
    }

    #[test]
    fn multiplication_binds_tighter() {
        let e = p("1+2*3").unwrap();
        assert_eq!(e.eval(&[] as &[(&str, f64)]).unwrap(), 7.0);
        assert_eq!(
            e,
            Expr::binary(
                BinOp::Add,
                num(1.0),
                Expr::binary(BinOp::Mul, num(2.0), num(3.0))
            )
        );
    }

    #[test]
    fn associativity() {
        let none: &[(&str, f64)] = &[];
        assert_eq!(p("8-4-2").unwrap().eval(none).unwrap(), 2.0);
        assert_eq!(p("8/4/2").unwrap().eval(none).unwrap(), 1.0);
        assert_eq!(p("2^3^2").unwrap().eval(none).unwrap(), 512.0);
        assert_eq!(p("-2^2").unwrap().eval(none).unwrap(), -4.0);
        assert_eq!(p("(-2)^2").unwrap().eval(none).unwrap(), 4.0);
        assert_eq!(p("2^-1").unwrap().eval(none).unwrap(), 0.5);
        assert_eq!(p("-3*-2").unwrap().eval(none).unwrap(), 6.0);
    }

    #[test]
    fn piecewise_map_ast() {
        let want = Expr::Cond {
            cond: Comparison {
                op: CmpOp::Ge,
                lhs: Box::new(Expr::var("x")),
                rhs: Box::new(num(1.0)),
            },
            then: Box::new(Expr::binary(BinOp::Div, Expr::var("x"), num(3.0))),
            otherwise: Box::new(num(0.0)),
        };
        assert_eq!(p("if(x>=1, x/3, 0)").unwrap(), want);
    }

    #[test]
    fn malformed_inputs() {
        let offset = |s: &str| p(s).unwrap_err().offset();
        assert_eq!(offset("x+*y"), Some(2));
        assert_eq!(offset("(x+y"), Some(4));
        assert_eq!(offset("x+y)"), Some(3));
        assert_eq!(offset("x-"), Some(2));
        assert_eq!(offset("abs(x, y)"), Some(0));
        assert_eq!(offset("min(x)"), Some(0));
        assert_eq!(offset("if(x, 1, 0)"), Some(4));
        assert_eq!(offset("if(x > 1, 1)"), Some(11));
        assert_eq!(offset("if(x > 1, 1, 0, 2)"), Some(0));
        assert_eq!(offset("foo(x)"), Some(0));
        assert_eq!(offset("abs + 1"), Some(0));
        assert_eq!(offset("x y"), Some(2));
        assert_eq!(offset("x > 1"), Some(2));
    }
}
