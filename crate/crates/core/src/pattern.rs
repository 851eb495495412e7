//! Pattern language: symbols composed with sequence, disjunction and iteration.
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor (';' factor)*
//! factor := base '*'*
//! base   := IDENT | '(' expr ')'
//! ```
//!
//! Iteration binds tightest, then sequence, then disjunction. Both binary
//! operators are left-associative. Whitespace is ignored.

use std::fmt;

use crate::error::{Error, Result};
use crate::event::{Alphabet, EventType};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternExpr {
    Symbol(EventType),
    Seq(Box<PatternExpr>, Box<PatternExpr>),
    Or(Box<PatternExpr>, Box<PatternExpr>),
    Iter(Box<PatternExpr>),
}

impl PatternExpr {
    pub fn symbol(name: &str) -> Result<Self> {
        EventType::new(name).map(PatternExpr::Symbol)
    }

    pub fn seq(left: PatternExpr, right: PatternExpr) -> Self {
        PatternExpr::Seq(Box::new(left), Box::new(right))
    }

    pub fn or(left: PatternExpr, right: PatternExpr) -> Self {
        PatternExpr::Or(Box::new(left), Box::new(right))
    }

    pub fn iter(body: PatternExpr) -> Self {
        PatternExpr::Iter(Box::new(body))
    }

    /// True iff the empty sequence is in the language.
    pub fn matches_epsilon(&self) -> bool {
        match self {
            PatternExpr::Symbol(_) => false,
            PatternExpr::Seq(l, r) => l.matches_epsilon() && r.matches_epsilon(),
            PatternExpr::Or(l, r) => l.matches_epsilon() || r.matches_epsilon(),
            PatternExpr::Iter(_) => true,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PatternExpr::Symbol(_) => 1,
            PatternExpr::Seq(l, r) | PatternExpr::Or(l, r) => 1 + l.depth().max(r.depth()),
            PatternExpr::Iter(b) => 1 + b.depth(),
        }
    }

    /// Visits every symbol occurrence, left to right.
    pub fn for_each_symbol<'a>(&'a self, f: &mut impl FnMut(&'a EventType)) {
        match self {
            PatternExpr::Symbol(s) => f(s),
            PatternExpr::Seq(l, r) | PatternExpr::Or(l, r) => {
                l.for_each_symbol(f);
                r.for_each_symbol(f);
            }
            PatternExpr::Iter(b) => b.for_each_symbol(f),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            PatternExpr::Or(..) => 0,
            PatternExpr::Seq(..) => 1,
            PatternExpr::Iter(_) => 2,
            PatternExpr::Symbol(_) => 3,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            PatternExpr::Symbol(s) => f.write_str(s.as_str())?,
            PatternExpr::Or(l, r) => {
                l.write_at(f, 0)?;
                f.write_str("|")?;
                r.write_at(f, 1)?;
            }
            PatternExpr::Seq(l, r) => {
                l.write_at(f, 1)?;
                f.write_str(";")?;
                r.write_at(f, 2)?;
            }
            PatternExpr::Iter(b) => {
                b.write_at(f, 2)?;
                f.write_str("*")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Canonical text with the minimal parenthesization that reparses to the same tree.
impl fmt::Display for PatternExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

pub fn print_pattern(expr: &PatternExpr) -> String {
    expr.to_string()
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Semi,
    Bar,
    Star,
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Semi => f.write_str("`;`"),
            Token::Bar => f.write_str("`|`"),
            Token::Star => f.write_str("`*`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
        }
    }
}

/// Tokens paired with their 1-based character position.
fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ';' => Token::Semi,
            '|' => Token::Bar,
            '*' => Token::Star,
            '(' => Token::LParen,
            ')' => Token::RParen,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push((pos, Token::Ident(chars[start..i].iter().collect())));
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    position: pos,
                    message: format!("unexpected character {other:?}"),
                })
            }
        };
        tokens.push((pos, tok));
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    end: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end, |(p, _)| *p)
    }

    fn unexpected(&self, expected: &str) -> Error {
        let message = match self.peek() {
            Some(t) => format!("expected {expected}, found {t}"),
            None => format!("expected {expected}, found end of input"),
        };
        Error::Syntax {
            position: self.position(),
            message,
        }
    }

    fn expr(&mut self) -> Result<PatternExpr> {
        let mut left = self.term()?;
        while self.peek() == Some(&Token::Bar) {
            self.cursor += 1;
            let right = self.term()?;
            left = PatternExpr::or(left, right);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<PatternExpr> {
        let mut left = self.factor()?;
        while self.peek() == Some(&Token::Semi) {
            self.cursor += 1;
            let right = self.factor()?;
            left = PatternExpr::seq(left, right);
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<PatternExpr> {
        let mut base = self.base()?;
        while self.peek() == Some(&Token::Star) {
            self.cursor += 1;
            base = PatternExpr::iter(base);
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<PatternExpr> {
        let position = self.position();
        match self.peek().cloned() {
            Some(Token::Ident(name)) => {
                self.cursor += 1;
                if self.alphabet.id(&name).is_none() {
                    return Err(Error::UnknownSymbol { name, position });
                }
                PatternExpr::symbol(&name)
            }
            Some(Token::LParen) => {
                self.cursor += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.unexpected("`)`"));
                }
                self.cursor += 1;
                Ok(inner)
            }
            _ => Err(self.unexpected("event type or `(`")),
        }
    }
}

/// Parses `text` against `alphabet`. Errors carry the 1-based character position.
pub fn parse_pattern(text: &str, alphabet: &Alphabet) -> Result<PatternExpr> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(Error::Syntax {
            position: 1,
            message: "empty pattern".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end: text.chars().count() + 1,
        alphabet,
    };
    let expr = parser.expr()?;
    if parser.cursor != parser.tokens.len() {
        return Err(parser.unexpected("operator or end of input"));
    }
    Ok(expr)
}
