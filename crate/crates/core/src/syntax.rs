//! Tokenizer shared by the formula, λ-term, f-term and grammar-file parsers.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Semi,
    Eq,
    /// Linear implication, `-o` or `⊸`.
    Lolli,
    /// Rule arrow `->`.
    RuleArrow,
    /// The ↓ metavariable, written `$`.
    Hole,
    Lambda,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Lolli => f.write_str("`-o`"),
            Tok::RuleArrow => f.write_str("`->`"),
            Tok::Hole => f.write_str("`$`"),
            Tok::Lambda => f.write_str("`\\`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

/// A token with the byte offset of its first character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {message}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            offset,
            message: message.into(),
        }
    }

    /// Shifts the offset; used when a fragment was lexed out of a larger line.
    pub fn shifted(mut self, by: usize) -> Self {
        self.offset += by;
        self
    }
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(offset, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            '$' | '↓' => Some(Tok::Hole),
            '\\' | 'λ' => Some(Tok::Lambda),
            '.' => Some(Tok::Dot),
            '⊸' => Some(Tok::Lolli),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push(Token { tok, offset });
            continue;
        }
        if c == '-' {
            let rest = &text[offset + 1..];
            let tok = if rest.starts_with('>') {
                Tok::RuleArrow
            } else if rest.starts_with('o') && !rest[1..].chars().next().is_some_and(ident_continue)
            {
                Tok::Lolli
            } else {
                return Err(SyntaxError::new(offset, "stray `-`"));
            };
            chars.next();
            chars.next();
            out.push(Token { tok, offset });
            continue;
        }
        if ident_start(c) {
            let mut end = offset;
            while let Some(&(i, c)) = chars.peek() {
                let hyphen_inside = c == '-'
                    && text[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_alphanumeric())
                    && !(text[i + 1..].starts_with('o')
                        && !text[i + 2..].chars().next().is_some_and(ident_continue));
                if ident_continue(c) || hyphen_inside {
                    end = i + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(text[offset..end].to_string()),
                offset,
            });
            continue;
        }
        return Err(SyntaxError::new(
            offset,
            format!("unexpected character `{c}`"),
        ));
    }
    Ok(out)
}

/// Cursor over a token slice. `end` is the byte offset reported for
/// "unexpected end of input".
pub struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    end: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], end: usize) -> Self {
        Cursor { toks, pos: 0, end }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, n: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    pub fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    pub fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn remaining(&self) -> &'a [Token] {
        &self.toks[self.pos..]
    }

    pub fn skip_rest(&mut self) {
        self.pos = self.toks.len();
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), SyntaxError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    pub fn expect_ident(&mut self) -> Result<&'a str, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError::new(self.offset(), format!("expected {wanted}, found {t}")),
            None => SyntaxError::new(self.end, format!("expected {wanted}, found end of input")),
        }
    }

    pub fn expect_end(&self) -> Result<(), SyntaxError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// Index of the next token at paren/bracket depth zero (relative to the
    /// cursor) satisfying `pred`, stopping at an unmatched closer.
    pub fn find_top_level(&self, pred: impl Fn(&Tok) -> bool) -> Option<usize> {
        let mut depth = 0i32;
        for (i, t) in self.toks[self.pos..].iter().enumerate() {
            match t.tok {
                Tok::LParen | Tok::LBrack => depth += 1,
                Tok::RParen | Tok::RBrack => {
                    if depth == 0 {
                        return None;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            if depth == 0 && pred(&t.tok) {
                return Some(i);
            }
        }
        None
    }

    /// Number of tokens up to (not including) the next top-level token in
    /// `stops`, or up to an unmatched closer / end of input.
    pub fn extent(&self, stops: &[Tok]) -> usize {
        let mut depth = 0i32;
        for (i, t) in self.toks[self.pos..].iter().enumerate() {
            match t.tok {
                Tok::LParen | Tok::LBrack => depth += 1,
                Tok::RParen | Tok::RBrack => {
                    if depth == 0 {
                        return i;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            if depth == 0 && stops.contains(&t.tok) {
                return i;
            }
        }
        self.toks.len() - self.pos
    }

    /// A sub-cursor over the next `n` tokens; advances this cursor past them.
    pub fn split(&mut self, n: usize) -> Cursor<'a> {
        let end = self.toks.get(self.pos + n).map_or(self.end, |t| t.offset);
        let sub = Cursor {
            toks: &self.toks[self.pos..self.pos + n],
            pos: 0,
            end,
        };
        self.pos += n;
        sub
    }
}
