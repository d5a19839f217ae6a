//! Expression front end for Weyl elements.
//!
//! Grammar (no juxtaposition; `*` keeps the written order):
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := primary ['^' exponent]
//! primary := INT ['/' INT] | 'x' | 'y' | '(' expr ')'
//! ```
//!
//! Negative exponents are accepted only on monomials c·x^k.

use crate::error::Error;
use crate::rat::Rat;
use crate::weyl::WeylElement;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    X,
    Y,
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, Error> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Lexed {
                tok: Tok::Int(s),
                line: l0,
                col: c0,
            });
            continue;
        } else {
            match c {
                'x' => Tok::X,
                'y' => Tok::Y,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                '/' => Tok::Slash,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(Error::Parse {
                        message: format!("unexpected character {c:?}"),
                        line: l0,
                        column: c0,
                    })
                }
            }
        };
        out.push(Lexed {
            tok,
            line: l0,
            col: c0,
        });
        i += 1;
        col += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, Error> {
        let (line, column) = self.here();
        Err(Error::Parse {
            message: msg.into(),
            line,
            column,
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<WeylElement, Error> {
        let mut acc = if self.eat(&Tok::Minus) {
            -&self.term()?
        } else {
            self.eat(&Tok::Plus);
            self.term()?
        };
        loop {
            if self.eat(&Tok::Plus) {
                acc = &acc + &self.term()?;
            } else if self.eat(&Tok::Minus) {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<WeylElement, Error> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::Star) {
            acc = acc.times(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<WeylElement, Error> {
        if self.eat(&Tok::Minus) {
            return Ok(-&self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<WeylElement, Error> {
        let base = self.primary()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let paren = self.eat(&Tok::LParen);
        let neg = self.eat(&Tok::Minus);
        let e = match self.peek().cloned() {
            Some(Tok::Int(s)) => {
                self.pos += 1;
                s.parse::<u32>().or_else(|_| self.err("exponent too large"))?
            }
            _ => return self.err("expected integer exponent"),
        };
        if paren && !self.eat(&Tok::RParen) {
            return self.err("expected ')'");
        }
        if !neg {
            return Ok(base.pow(e));
        }
        let mono = base.terms().next().map(|(k, c)| (*k, c.clone()));
        match mono {
            Some(((i, 0), c)) if base.len() == 1 => {
                Ok(WeylElement::monomial(c.recip().pow(e as i64), -i * e as i64, 0))
            }
            _ => self.err("negative exponent on a non-invertible factor"),
        }
    }

    fn primary(&mut self) -> Result<WeylElement, Error> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                let mut r: Rat = n.parse()?;
                if self.eat(&Tok::Slash) {
                    match self.peek().cloned() {
                        Some(Tok::Int(d)) => {
                            self.pos += 1;
                            let d: Rat = d.parse()?;
                            if d.is_zero() {
                                return self.err("zero denominator");
                            }
                            r = r / d;
                        }
                        _ => return self.err("expected denominator"),
                    }
                }
                Ok(WeylElement::constant(r))
            }
            Some(Tok::X) => {
                self.pos += 1;
                Ok(WeylElement::x())
            }
            Some(Tok::Y) => {
                self.pos += 1;
                Ok(WeylElement::y())
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(_) => self.err("expected a number, x, y or '('"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse and normalize an expression.
pub fn parse(src: &str) -> Result<WeylElement, Error> {
    let toks = lex(src)?;
    let end_line = src.lines().count().max(1);
    let end_col = src.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (end_line, end_col),
    };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("expected an operator");
    }
    Ok(e)
}

/// Print in a form that [`parse`] maps back to the same element.
pub fn print(e: &WeylElement) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (n, (&(i, j), c)) in e.terms().rev().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if n == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut factors: Vec<String> = Vec::new();
        if !a.is_one() || (i == 0 && j == 0) {
            factors.push(a.to_string());
        }
        match i {
            0 => {}
            1 => factors.push("x".into()),
            k if k < 0 => factors.push(format!("x^(-{})", -k)),
            k => factors.push(format!("x^{k}")),
        }
        match j {
            0 => {}
            1 => factors.push("y".into()),
            k => factors.push(format!("y^{k}")),
        }
        out.push_str(&factors.join("*"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        let e = parse("(x*y^2 - 1)^2").unwrap();
        assert_eq!(print(&e), "x^2*y^4 + 2*x*y^3 - 2*x*y^2 + 1");
        assert_eq!(parse("y*x").unwrap(), parse("x*y + 1").unwrap());
        assert_eq!(parse("1/2*x - -3").unwrap(), parse("3 + x*1/2").unwrap());
        assert_eq!(parse("x^-2*x^2").unwrap(), WeylElement::one());
        assert_eq!(parse("0").unwrap(), WeylElement::zero());
    }

    #[test]
    fn errors_have_positions() {
        match parse("x y") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 3)),
            other => panic!("{other:?}"),
        }
        match parse("x +\n  (y * ") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("y^-1").is_err());
        assert!(parse("x & y").is_err());
        assert!(parse("").is_err());
        assert!(parse("1/0").is_err());
    }

    fn arb_elem() -> impl Strategy<Value = WeylElement> {
        proptest::collection::vec((-2i64..5, 0u32..5, -9i64..10, 1i64..4), 0..6).prop_map(|ts| {
            WeylElement::from_terms(ts.into_iter().map(|(i, j, c, d)| ((i, j), Rat::new(c, d))))
        })
    }

    proptest! {
        #[test]
        fn print_round_trip(e in arb_elem()) {
            prop_assert_eq!(parse(&print(&e)).unwrap(), e);
        }
    }
}
