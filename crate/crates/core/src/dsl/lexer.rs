use super::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Quoted(String),
    Arrow,
    Colon,
    Semi,
    Pipe,
    Comma,
    Equals,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Quoted(s) => format!("quoted name '{s}'"),
            Tok::Arrow => "`->`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Equals => "`=`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
    offset: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (i, c) = self.chars.next()?;
        self.offset = i + c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span { line: self.line, column: self.column, offset: self.offset, len: 0 }
    }
}

/// Splits the input into tokens. `#` starts a comment that runs to the end
/// of the line. Quoted names use single quotes with `\'` and `\\` escapes.
pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor { chars: text.char_indices().peekable(), line: 1, column: 1, offset: 0 };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else if c.is_whitespace() {
                cur.bump();
            } else {
                break;
            }
        }
        let mut span = cur.here();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = match c {
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            '|' => Tok::Pipe,
            ',' => Tok::Comma,
            '=' => Tok::Equals,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Arrow
            }
            '\'' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => {
                            return Err(Diagnostic::at(span, "unterminated quoted name"));
                        }
                        Some('\'') => break,
                        Some('\\') => match cur.bump() {
                            Some(e @ ('\'' | '\\')) => s.push(e),
                            _ => return Err(Diagnostic::at(cur.here(), "unknown escape in quoted name")),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                if s.is_empty() {
                    return Err(Diagnostic::at(span, "empty quoted name"));
                }
                Tok::Quoted(s)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = c.to_string();
                while let Some(n) = cur.peek().filter(|n| n.is_alphanumeric() || *n == '_') {
                    s.push(n);
                    cur.bump();
                }
                Tok::Ident(s)
            }
            other => return Err(Diagnostic::at(span, format!("unexpected character `{other}`"))),
        };
        span.len = cur.offset - span.offset;
        out.push(Token { tok, span });
    }
}
