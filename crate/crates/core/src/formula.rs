//! Multi-response model formulas such as `y1 + y2 + z1 ~ 0 + X1 + X2`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! formula := lhs "~" rhs [ "|" "1" ]
//! lhs     := name ( "+" name )*
//! rhs     := "0" | "1" | [ "0" "+" ] name ( "+" name )*
//! name    := [A-Za-z_][A-Za-z0-9._]*
//! ```
//!
//! A bare `0` or `1` on the right-hand side declares a model without covariates.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaSpec {
    pub response_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub intercept_suppressed: bool,
    /// The input carried the `| 1` compatibility suffix.
    #[serde(default)]
    pub bar_one: bool,
}

/// Parse failure, positioned at a byte offset into the input.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("formula error at byte {offset}: {message}")]
pub struct FormulaError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token<'a> {
    Name(&'a str),
    Zero,
    One,
    Plus,
    Tilde,
    Bar,
    End,
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Name(n) => write!(f, "name `{n}`"),
            Token::Zero => f.write_str("`0`"),
            Token::One => f.write_str("`1`"),
            Token::Plus => f.write_str("`+`"),
            Token::Tilde => f.write_str("`~`"),
            Token::Bar => f.write_str("`|`"),
            Token::End => f.write_str("end of input"),
        }
    }
}

fn err(offset: usize, message: impl Into<String>) -> FormulaError {
    FormulaError {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((i, Token::Plus));
                i += 1;
            }
            b'~' => {
                out.push((i, Token::Tilde));
                i += 1;
            }
            b'|' => {
                out.push((i, Token::Bar));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                match &text[start..i] {
                    "0" => out.push((start, Token::Zero)),
                    "1" => out.push((start, Token::One)),
                    other => {
                        return Err(err(
                            start,
                            format!(
                            "invalid identifier `{other}`: names must start with a letter or `_`"
                        ),
                        ))
                    }
                }
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Token::Name(&text[start..i])));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push((text.len(), Token::End));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &(usize, Token<'a>) {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> (usize, Token<'a>) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect_name(&mut self, what: &str) -> Result<(usize, &'a str), FormulaError> {
        match self.bump() {
            (off, Token::Name(n)) => Ok((off, n)),
            (off, tok) => Err(err(off, format!("expected {what}, found {tok}"))),
        }
    }

    /// `name ("+" name)*`, stopping before any token that is not `+`.
    fn name_list(
        &mut self,
        what: &str,
        first: Option<(usize, &'a str)>,
    ) -> Result<Vec<(usize, &'a str)>, FormulaError> {
        let mut names = vec![match first {
            Some(n) => n,
            None => self.expect_name(what)?,
        }];
        while self.peek().1 == Token::Plus {
            self.bump();
            names.push(self.expect_name(what)?);
        }
        Ok(names)
    }
}

pub fn parse_formula(text: &str) -> Result<FormulaSpec, FormulaError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };

    if p.peek().1 == Token::Tilde {
        return Err(err(
            p.peek().0,
            "empty left-hand side: expected a response name",
        ));
    }
    let lhs = p.name_list("response name", None)?;
    match p.bump() {
        (_, Token::Tilde) => {}
        (off, Token::End) => return Err(err(off, "missing `~` between responses and covariates")),
        (off, tok) => return Err(err(off, format!("expected `+` or `~`, found {tok}"))),
    }

    let mut intercept_suppressed = false;
    let mut rhs = Vec::new();
    match p.peek().clone() {
        (off, Token::End) => return Err(err(off, "empty right-hand side: expected covariates")),
        (_, Token::Zero) | (_, Token::One) => {
            let (_, tok) = p.bump();
            intercept_suppressed = tok == Token::Zero;
            if p.peek().1 == Token::Plus {
                if tok == Token::One {
                    return Err(err(
                        p.peek().0,
                        "`1 +` is not supported; write covariate names directly",
                    ));
                }
                p.bump();
                rhs = p.name_list("covariate name", None)?;
            }
        }
        (off, Token::Name(n)) => {
            p.bump();
            rhs = p.name_list("covariate name", Some((off, n)))?;
        }
        (off, tok) => {
            return Err(err(
                off,
                format!("expected covariate name or `0`, found {tok}"),
            ))
        }
    }

    let mut bar_one = false;
    if p.peek().1 == Token::Bar {
        p.bump();
        match p.bump() {
            (_, Token::One) => bar_one = true,
            (off, tok) => {
                return Err(err(
                    off,
                    format!("only `| 1` is accepted as an additional formula part, found {tok}"),
                ))
            }
        }
    }
    match p.bump() {
        (_, Token::End) => {}
        (off, tok) => {
            return Err(err(
                off,
                format!("expected `+` or end of formula, found {tok}"),
            ))
        }
    }

    let mut seen: Vec<&str> = Vec::new();
    for &(off, name) in lhs.iter().chain(rhs.iter()) {
        if seen.contains(&name) {
            return Err(err(off, format!("duplicate name `{name}`")));
        }
        seen.push(name);
    }

    Ok(FormulaSpec {
        response_names: lhs.iter().map(|(_, n)| n.to_string()).collect(),
        covariate_names: rhs.iter().map(|(_, n)| n.to_string()).collect(),
        intercept_suppressed,
        bar_one,
    })
}

impl fmt::Display for FormulaSpec {
    /// Canonical rendering; `parse_formula(&spec.to_string())` returns `spec`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response_names.join(" + "))?;
        match (self.intercept_suppressed, self.covariate_names.is_empty()) {
            (true, true) => f.write_str("0")?,
            (false, true) => f.write_str("1")?,
            (true, false) => write!(f, "0 + {}", self.covariate_names.join(" + "))?,
            (false, false) => f.write_str(&self.covariate_names.join(" + "))?,
        }
        if self.bar_one {
            f.write_str(" | 1")?;
        }
        Ok(())
    }
}
