//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?            // right-associative
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Numbers are decimal literals with an optional exponent (`1.25e-3`); no
//! hex, no underscores. `x` is the variable; any other bare identifier is a
//! named parameter; identifiers in call position must name a known function.

use std::sync::Arc;

use thiserror::Error;

use super::{BinOp, Expr, UnaryFn};
use crate::scalar::{real, Scalar};

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}; known functions: {known}")]
    UnknownIdentifier {
        name: String,
        offset: usize,
        known: String,
    },
    #[error("empty expression")]
    Empty,
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
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some((off, tok)) = lx.next_token()? {
            out.push((off, tok));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[start];
        let simple = |t| Ok(Some((start, t)));
        match c {
            b'+' => {
                self.pos += 1;
                simple(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                simple(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                simple(Tok::Star)
            }
            b'/' => {
                self.pos += 1;
                simple(Tok::Slash)
            }
            b'^' => {
                self.pos += 1;
                simple(Tok::Caret)
            }
            b'(' => {
                self.pos += 1;
                simple(Tok::LParen)
            }
            b')' => {
                self.pos += 1;
                simple(Tok::RParen)
            }
            b'0'..=b'9' | b'.' => {
                let tok = self.lex_number(start)?;
                Ok(Some((start, tok)))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii identifier")
                    .to_string();
                Ok(Some((start, Tok::Ident(name))))
            }
            other => Err(ParseError::Syntax {
                offset: start,
                expected: "a number, identifier, operator, or parenthesis",
                found: format!("`{}`", other as char),
            }),
        }
    }

    fn lex_number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let mut saw_digit = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
            saw_digit = true;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
                saw_digit = true;
            }
        }
        if !saw_digit {
            return Err(ParseError::Syntax {
                offset: start,
                expected: "a digit",
                found: "`.`".into(),
            });
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let mut exp_digits = false;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
                exp_digits = true;
            }
            if !exp_digits {
                // `1e` was the start of e.g. `1*exp(x)` typo'd; treat the
                // `e` as not part of the number.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: "a decimal literal",
            found: format!("`{text}`"),
        })?;
        Ok(Tok::Num(value))
    }
}

struct Parser<'a, T> {
    toks: &'a [(usize, Tok)],
    idx: usize,
    end: usize,
    _marker: std::marker::PhantomData<T>,
}

/// Parse `text` into an expression tree.
pub fn parse<T: Scalar>(text: &str) -> Result<Expr<T>, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = Lexer::tokenize(text)?;
    let mut p = Parser::<T> {
        toks: &toks,
        idx: 0,
        end: text.len(),
        _marker: std::marker::PhantomData,
    };
    let e = p.expr()?;
    if let Some((off, tok)) = p.peek() {
        return Err(ParseError::Syntax {
            offset: *off,
            expected: "an operator or end of input",
            found: tok.describe(),
        });
    }
    Ok(e)
}

impl<T: Scalar> Parser<'_, T> {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<&(usize, Tok)> {
        let t = self.toks.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some((off, tok)) => ParseError::Syntax {
                offset: *off,
                expected,
                found: tok.describe(),
            },
            None => ParseError::Syntax {
                offset: self.end,
                expected,
                found: "end of input".into(),
            },
        }
    }

    fn expr(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.term()?;
        while let Some((_, tok)) = self.peek() {
            let op = match tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((_, tok)) = self.peek() {
            let op = match tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr<T>, ParseError> {
        if matches!(self.peek(), Some((_, Tok::Minus))) {
            self.bump();
            let inner = self.unary()?;
            // A negated bare literal folds into the constant, so the printed
            // form (`-2`) reparses to the identical tree.
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Unary(UnaryFn::Neg, Arc::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr<T>, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some((_, Tok::Caret))) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Arc::new(base), Arc::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr<T>, ParseError> {
        let (off, tok) = match self.bump() {
            Some(t) => (t.0, t.1.clone()),
            None => return Err(self.unexpected("a number, identifier, `-`, or `(`")),
        };
        match tok {
            Tok::Num(v) => Ok(Expr::Const(real(v))),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    Some((o, t)) => Err(ParseError::Syntax {
                        offset: *o,
                        expected: "`)`",
                        found: t.describe(),
                    }),
                    None => Err(ParseError::Syntax {
                        offset: self.end,
                        expected: "`)`",
                        found: "end of input".into(),
                    }),
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Some((_, Tok::LParen))) {
                    let func =
                        UnaryFn::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                            name: name.clone(),
                            offset: off,
                            known: UnaryFn::NAMES.join(", "),
                        })?;
                    self.bump(); // consume '('
                    let arg = self.expr()?;
                    match self.bump() {
                        Some((_, Tok::RParen)) => Ok(Expr::Unary(func, Arc::new(arg))),
                        Some((o, t)) => Err(ParseError::Syntax {
                            offset: *o,
                            expected: "`)`",
                            found: t.describe(),
                        }),
                        None => Err(ParseError::Syntax {
                            offset: self.end,
                            expected: "`)`",
                            found: "end of input".into(),
                        }),
                    }
                } else if UnaryFn::from_name(&name).is_some() {
                    Err(ParseError::Syntax {
                        offset: off,
                        expected: "`(` after a function name",
                        found: format!("bare `{name}`"),
                    })
                } else if name == "x" {
                    Ok(Expr::Var)
                } else {
                    Ok(Expr::Param(name))
                }
            }
            other => Err(ParseError::Syntax {
                offset: off,
                expected: "a number, identifier, `-`, or `(`",
                found: other.describe(),
            }),
        }
    }
}
