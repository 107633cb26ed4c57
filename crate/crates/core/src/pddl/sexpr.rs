//! Minimal s-expression reader with source positions.

use std::fmt;

use super::PddlError;

/// 1-based line/column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Returns the list items, or a syntax error naming `what`.
    pub fn expect_list(&self, what: &str) -> Result<&[SExpr], PddlError> {
        self.as_list().ok_or_else(|| PddlError::Syntax {
            pos: self.pos(),
            msg: format!("expected {what}, found atom"),
        })
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, PddlError> {
        self.as_atom().ok_or_else(|| PddlError::Syntax {
            pos: self.pos(),
            msg: format!("expected {what}, found list"),
        })
    }

    /// The head keyword of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.as_list()
            .and_then(|items| items.first())
            .and_then(|h| h.as_atom())
            .map(|s| s.to_ascii_lowercase())
    }
}

/// Parses exactly one top-level s-expression from `text`.
pub fn parse(text: &str) -> Result<SExpr, PddlError> {
    let mut reader = Reader::new(text);
    reader.skip_ws();
    let expr = match reader.peek() {
        None => {
            return Err(PddlError::Syntax {
                pos: reader.pos(),
                msg: "empty input".into(),
            })
        }
        Some(_) => reader.read()?,
    };
    reader.skip_ws();
    if reader.peek().is_some() {
        return Err(PddlError::Syntax {
            pos: reader.pos(),
            msg: "trailing input after top-level expression".into(),
        });
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExpr, PddlError> {
        self.skip_ws();
        let start = self.pos();
        match self.peek() {
            None => Err(PddlError::Syntax {
                pos: start,
                msg: "unexpected end of input".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(PddlError::Syntax {
                                pos: start,
                                msg: "unclosed '('".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(PddlError::Syntax {
                pos: start,
                msg: "unexpected ')'".into(),
            }),
            Some(_) => {
                let mut tok = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                Ok(SExpr::Atom(tok, start))
            }
        }
    }
}
