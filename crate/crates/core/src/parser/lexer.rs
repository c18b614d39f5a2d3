use super::{ParseError, Span};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Number,
    Identifier,
    Keyword,
    Punct,
    IntervalBracket,
    Str,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    /// Source text; for strings, the unescaped contents.
    pub lexeme: String,
    pub span: Span,
}

const KEYWORDS: &[&str] = &[
    "acceptance",
    "bidding",
    "template",
    "phase",
    "accept",
    "if",
    "bid",
    "skip",
    "max",
    "Q",
    "U",
    "offer",
    "next_own",
    "t",
    "u_dyn",
    "u_fixed",
    "boulware",
    "pareto",
    "opponent_greedy",
    "random_above_threshold",
];

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let span = cur.span();
        let start = cur.offset;
        if c.is_ascii_digit() {
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
            if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
            }
            if matches!(cur.peek(), Some('e' | 'E')) {
                let save = (cur.offset, cur.line, cur.column);
                cur.bump();
                if matches!(cur.peek(), Some('+' | '-')) {
                    cur.bump();
                }
                if cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                        cur.bump();
                    }
                } else {
                    (cur.offset, cur.line, cur.column) = save;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                lexeme: src[start..cur.offset].to_string(),
                span,
            });
        } else if c.is_alphabetic() || c == '_' {
            while cur.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &src[start..cur.offset];
            let kind = if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token {
                kind,
                lexeme: word.to_string(),
                span,
            });
        } else if c == '"' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(ParseError::Syntax {
                            span,
                            expected: "closing quote".into(),
                            found: "end of line".into(),
                        })
                    }
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('n') => text.push('\n'),
                        Some(c @ ('"' | '\\')) => text.push(c),
                        other => {
                            return Err(ParseError::Syntax {
                                span,
                                expected: "escape sequence".into(),
                                found: other.map_or("end of input".into(), |c| format!("`\\{c}`")),
                            })
                        }
                    },
                    Some(c) => text.push(c),
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str,
                lexeme: text,
                span,
            });
        } else {
            cur.bump();
            let (kind, lexeme) = match c {
                '[' | ']' => (TokenKind::IntervalBracket, c.to_string()),
                '(' | ')' | '{' | '}' | ',' | '*' | '+' | '-' => (TokenKind::Punct, c.to_string()),
                '≥' => (TokenKind::Punct, ">=".to_string()),
                '>' if cur.peek() == Some('=') => {
                    cur.bump();
                    (TokenKind::Punct, ">=".to_string())
                }
                '>' => (TokenKind::Punct, ">".to_string()),
                other => {
                    return Err(ParseError::Syntax {
                        span,
                        expected: "a token".into(),
                        found: format!("`{other}`"),
                    })
                }
            };
            tokens.push(Token { kind, lexeme, span });
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        lexeme: String::new(),
        span: cur.span(),
    });
    Ok(tokens)
}
