//! Tokenizer shared by the textual languages (assignments, constraints, ADL).

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    /// `$name`
    Var(String),
    Punct(&'static str),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "`{s}`"),
            TokenKind::Str(s) => write!(f, "\"{s}\""),
            TokenKind::Var(s) => write!(f, "`${s}`"),
            TokenKind::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
}

impl Token {
    pub fn is_ident(&self, word: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(s) if s == word)
    }

    pub fn is_keyword(&self, word: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(word))
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokenKind::Punct(q) if *q == p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const PUNCT: &[&str] = &[
    "&&", "||", "->", "!", "(", ")", ",", ".", ":", "=", "&", "|", ";", "{", "}",
];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Splits `text` into tokens. `#` starts a comment running to the end of the
/// line. `first_line` is the line number of the first line of `text`.
pub fn tokenize(text: &str, first_line: usize) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    for (offset, line_text) in text.lines().enumerate() {
        let line = first_line + offset;
        let chars: Vec<char> = line_text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c == '"' {
                let mut value = String::new();
                let mut j = i + 1;
                let mut closed = false;
                while j < chars.len() {
                    match chars[j] {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' if j + 1 < chars.len() => {
                            value.push(chars[j + 1]);
                            j += 2;
                        }
                        ch => {
                            value.push(ch);
                            j += 1;
                        }
                    }
                }
                if !closed {
                    return Err(LexError {
                        line,
                        column,
                        message: "unterminated string".into(),
                    });
                }
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    line,
                    column,
                });
                i = j + 1;
                continue;
            }
            if c == '$' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                if j == start {
                    return Err(LexError {
                        line,
                        column,
                        message: "expected a variable name after `$`".into(),
                    });
                }
                tokens.push(Token {
                    kind: TokenKind::Var(chars[start..j].iter().collect()),
                    line,
                    column,
                });
                i = j;
                continue;
            }
            if is_ident_char(c) && c != '-' {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    // `->` ends an identifier
                    if chars[j] == '-' && chars.get(j + 1) == Some(&'>') {
                        break;
                    }
                    j += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(chars[i..j].iter().collect()),
                    line,
                    column,
                });
                i = j;
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) {
                tokens.push(Token {
                    kind: TokenKind::Punct(p),
                    line,
                    column,
                });
                i += p.chars().count();
                continue;
            }
            return Err(LexError {
                line,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(tokens)
}

/// Cursor over a token slice with position-aware error helpers.
#[derive(Debug)]
pub struct Cursor<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Position reported when input ends.
    end: (usize, usize),
}

impl<'t> Cursor<'t> {
    pub fn new(tokens: &'t [Token], end: (usize, usize)) -> Self {
        Self {
            tokens,
            pos: 0,
            end,
        }
    }

    pub fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    pub fn peek_at(&self, ahead: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + ahead)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Line and column of the next token, or of the end of input.
    pub fn position(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |t| (t.line, t.column))
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, word: &str) -> bool {
        if self.peek().is_some_and(|t| t.is_keyword(word)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn describe_next(&self) -> String {
        self.peek()
            .map_or_else(|| "end of input".to_string(), |t| t.kind.to_string())
    }
}
