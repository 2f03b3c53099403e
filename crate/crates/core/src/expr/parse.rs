//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-"? power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus, so `-u^2` is `-(u^2)`, and is right
//! associative through the `factor` recursion. The typographic minus `−` and
//! the middle dot `·` are accepted as `-` and `*`.

use super::{BinOp, ConstructionError, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    /// Character offset into the input.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected}, found `{found}`")]
    Expected { expected: &'static str, found: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("function `{0}` needs a parenthesised argument")]
    MissingArgument(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(c) => c.to_string(),
            Tok::Name(n) => n.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' | '\u{00b7}' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let value: f64 = s
                    .parse()
                    .map_err(|_| ParseError { position: start, kind: ParseErrorKind::BadNumber(s.clone()) })?;
                if !value.is_finite() {
                    return Err(ParseError { position: start, kind: ParseErrorKind::BadNumber(s) });
                }
                out.push((start, Tok::Num(value)));
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push((start, Tok::Name(chars[i..j].iter().collect())));
                i = j;
                continue;
            }
            other => return Err(ParseError { position: start, kind: ParseErrorKind::UnexpectedChar(other) }),
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { position: self.pos(), kind })
    }

    fn construct(&self, r: Result<Expr, ConstructionError>, position: usize) -> Result<Expr, ParseError> {
        r.map_err(|e| ParseError { position, kind: e.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs).expect("sums are always constructible");
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let at = self.pos();
            self.bump();
            let rhs = self.factor()?;
            lhs = self.construct(Expr::binary(op, lhs, rhs), at)?;
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg_raw(self.power()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            let at = self.pos();
            self.bump();
            let exponent = self.factor()?;
            return self.construct(Expr::pow_raw(base, exponent), at);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.pos();
        match self.bump() {
            Tok::Num(c) => Ok(Expr::num(c)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Name(name) => {
                if *self.peek() == Tok::LParen {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError { position: at, kind: ParseErrorKind::UnknownFunction(name) });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::func_raw(f, arg));
                }
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Expr::var(v));
                }
                if self.params.contains(&name.as_str()) {
                    return Ok(Expr::param(&name));
                }
                let kind = if Func::from_name(&name).is_some() {
                    ParseErrorKind::MissingArgument(name)
                } else {
                    ParseErrorKind::UnknownName(name)
                };
                Err(ParseError { position: at, kind })
            }
            Tok::End => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedEnd }),
            other => Err(ParseError {
                position: at,
                kind: ParseErrorKind::Expected { expected: "a number, name or `(`", found: other.describe() },
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::End => self.err(ParseErrorKind::UnexpectedEnd),
            other => {
                let found = other.describe();
                self.err(ParseErrorKind::Expected { expected: "`)`", found })
            }
        }
    }
}

/// Parse `text` with no parameters declared.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with_params(text, &[])
}

/// Parse `text`; identifiers in `params` become symbolic parameters.
pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokenize(text)?, at: 0, params };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        other => {
            let found = other.describe();
            p.err(ParseErrorKind::Expected { expected: "an operator or end of input", found })
        }
    }
}
