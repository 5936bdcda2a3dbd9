//! A small arithmetic expression language for user-supplied metric components.
//!
//! Grammar (usual precedence, `^` right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `x1..xn` (1-based coordinate indices), `pi`, or any alias
//! registered by the caller (the warped-product model binds `r` to `x1`).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character {0:?} at offset {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token {0} at offset {1}")]
    UnexpectedToken(String, usize),
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("variable x{index} exceeds dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }
}

/// Compiled expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `src` for a chart of dimension `dim`.
    pub fn parse(src: &str, dim: usize) -> Result<Self, ExprError> {
        Self::parse_with_aliases(src, dim, &[])
    }

    /// Parses with extra identifier aliases `(name, zero-based coordinate index)`.
    pub fn parse_with_aliases(
        src: &str,
        dim: usize,
        aliases: &[(&str, usize)],
    ) -> Result<Self, ExprError> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            dim,
            aliases,
        };
        let expr = parser.expr()?;
        match parser.peek() {
            None => Ok(expr),
            Some((tok, off)) => Err(ExprError::UnexpectedToken(tok.to_string(), off)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => base.powi(c as i32),
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let bytes: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = bytes[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| ExprError::UnexpectedToken(text.clone(), start))?;
            out.push((Token::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(bytes[start..i].iter().collect()), start));
        } else if "+-*/^".contains(c) {
            out.push((Token::Op(c), i));
            i += 1;
        } else if c == '(' {
            out.push((Token::LParen, i));
            i += 1;
        } else if c == ')' {
            out.push((Token::RParen, i));
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar(c, i));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    dim: usize,
    aliases: &'a [(&'a str, usize)],
}

impl Parser<'_> {
    fn peek(&self) -> Option<(&Token, usize)> {
        self.tokens.get(self.pos).map(|(t, o)| (t, *o))
    }

    fn next(&mut self) -> Result<(Token, usize), ExprError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.next()? {
            (Token::RParen, _) => Ok(()),
            (tok, off) => Err(ExprError::UnexpectedToken(tok.to_string(), off)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some((Token::Op(op @ ('+' | '-')), _)) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some((Token::Op(op @ ('*' | '/')), _)) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if let Some((Token::Op('-'), _)) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if let Some((Token::Op('^'), _)) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.next()? {
            (Token::Num(v), _) => Ok(Expr::Const(v)),
            (Token::LParen, _) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            (Token::Ident(name), off) => {
                if let Some((Token::LParen, _)) = self.peek() {
                    let func = Func::from_name(&name).ok_or(ExprError::UnknownFunction(name))?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.identifier(name, off)
            }
            (tok, off) => Err(ExprError::UnexpectedToken(tok.to_string(), off)),
        }
    }

    fn identifier(&self, name: String, _off: usize) -> Result<Expr, ExprError> {
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        if let Some(&(_, idx)) = self.aliases.iter().find(|(a, _)| *a == name) {
            return Ok(Expr::Var(idx));
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(index) = rest.parse::<usize>() {
                if index == 0 || index > self.dim {
                    return Err(ExprError::VariableOutOfRange {
                        index,
                        dim: self.dim,
                    });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        Err(ExprError::UnknownIdentifier(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        Expr::parse(src, x.len()).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[0.0]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[0.0]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[0.0]), -4.0);
        assert_eq!(ev("(1 + 2) * 3", &[0.0]), 9.0);
        assert_eq!(ev("8 / 4 / 2", &[0.0]), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[0.0]), -4.0);
    }

    #[test]
    fn variables_and_functions() {
        let x = [0.3, -0.7];
        let v = ev("4 / (1 - x1^2 - x2^2)^2", &x);
        assert!((v - 4.0 / (1.0 - 0.09 - 0.49_f64).powi(2)).abs() < 1e-12);
        assert!((ev("sinh(x1)^2 + cosh(x2)", &x) - (0.3_f64.sinh().powi(2) + 0.7_f64.cosh())).abs() < 1e-14);
        assert!((ev("exp(log(2.5))", &x) - 2.5).abs() < 1e-14);
        assert!((ev("sin(pi/2) + cos(0)", &x) - 2.0).abs() < 1e-14);
        assert!((ev("1e-3 * 2", &x) - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn aliases() {
        let e = Expr::parse_with_aliases("sinh(r)", 2, &[("r", 0)]).unwrap();
        assert!((e.eval(&[1.0, 5.0]) - 1f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(Expr::parse("x3", 2), Err(ExprError::VariableOutOfRange { .. })));
        assert!(matches!(Expr::parse("y", 2), Err(ExprError::UnknownIdentifier(_))));
        assert!(matches!(Expr::parse("tan(x1)", 2), Err(ExprError::UnknownFunction(_))));
        assert!(matches!(Expr::parse("1 +", 2), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("1 $ 2", 2), Err(ExprError::UnexpectedChar('$', 2))));
        assert!(matches!(Expr::parse("(1 + 2", 2), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("1 2", 2), Err(ExprError::UnexpectedToken(..))));
    }
}
