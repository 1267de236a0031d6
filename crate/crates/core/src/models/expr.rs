//! Parser for polynomial and rational-function expressions.
//!
//! Grammar: numbers, parameter names, `+ - * /`, `^` with a natural exponent,
//! parentheses. Unary minus is allowed anywhere a factor may start.

use super::polynomial::{Polynomial, Var};
use super::ratfunc::RationalFunction;
use super::rational::parse_rational;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    /// 1-based character column inside the expression text.
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Name(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push((start + 1, Tok::Num(chars[start..i].iter().collect())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start + 1, Tok::Name(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i + 1, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError { column: i + 1, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_column: usize,
    lookup: &'a mut dyn FnMut(&str) -> Option<Var>,
}

impl Parser<'_> {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end_column)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { column: self.column(), message: message.into() })
    }

    fn peek_sym(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Sym(c))) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<RationalFunction, ExprError> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_sym() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RationalFunction, ExprError> {
        let mut acc = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek_sym() {
            self.pos += 1;
            let column = self.column();
            let rhs = self.factor()?;
            if op == '*' {
                acc = acc.mul(&rhs);
            } else {
                if rhs.is_zero() {
                    return Err(ExprError { column, message: "division by zero".into() });
                }
                acc = acc.div(&rhs);
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<RationalFunction, ExprError> {
        match self.peek_sym() {
            Some('-') => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            Some('+') => {
                self.pos += 1;
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RationalFunction, ExprError> {
        let base = self.atom()?;
        if self.peek_sym() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let exponent = match self.toks.get(self.pos) {
            Some((_, Tok::Num(text))) => text.parse::<u32>().ok(),
            _ => None,
        };
        let Some(exponent) = exponent else {
            return self.err("expected a natural exponent after '^'");
        };
        self.pos += 1;
        let mut acc = RationalFunction::one();
        for _ in 0..exponent {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<RationalFunction, ExprError> {
        let Some((column, tok)) = self.toks.get(self.pos).cloned() else {
            return self.err("unexpected end of expression");
        };
        match tok {
            Tok::Num(text) => {
                self.pos += 1;
                match parse_rational(&text) {
                    Some(v) => Ok(RationalFunction::constant(v)),
                    None => Err(ExprError { column, message: format!("invalid number '{text}'") }),
                }
            }
            Tok::Name(name) => {
                self.pos += 1;
                match (self.lookup)(&name) {
                    Some(v) => Ok(RationalFunction::var(v)),
                    None => Err(ExprError { column, message: format!("unknown parameter '{name}'") }),
                }
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek_sym() != Some(')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Sym(c) => self.err(format!("unexpected '{c}'")),
        }
    }
}

/// Parses a rational-function expression, resolving names with `lookup`.
pub fn parse_rational_function(
    text: &str,
    lookup: &mut dyn FnMut(&str) -> Option<Var>,
) -> Result<RationalFunction, ExprError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, pos: 0, end_column: text.chars().count() + 1, lookup };
    let value = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return parser.err("trailing input");
    }
    Ok(value)
}

/// Parses a polynomial; division is only accepted by non-zero constants.
pub fn parse_polynomial(
    text: &str,
    lookup: &mut dyn FnMut(&str) -> Option<Var>,
) -> Result<Polynomial, ExprError> {
    let rf = parse_rational_function(text, lookup)?;
    match rf.to_polynomial() {
        Some(p) => Ok(p),
        None => {
            let mut c = rf.clone();
            c.cancel();
            c.to_polynomial().ok_or(ExprError {
                column: 1,
                message: "expression is not a polynomial".into(),
            })
        }
    }
}

/// Looks a name up in a parameter table.
pub fn table_lookup(names: &[String]) -> impl FnMut(&str) -> Option<Var> + '_ {
    move |name| names.iter().position(|n| n == name).map(|i| Var(i as u32))
}
