use crate::diag::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(i64),
    Keyword(Keyword),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    Dot,
    Plus,
    Caret,
    Arrow,
    Dash,
    Less,
    Greater,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Scene,
    Entities,
    Root,
    Rules,
    Where,
    As,
    In,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        Some(match word {
            "scene" => Keyword::Scene,
            "entities" => Keyword::Entities,
            "root" => Keyword::Root,
            "rules" => Keyword::Rules,
            "where" => Keyword::Where,
            "as" => Keyword::As,
            "in" => Keyword::In,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Scene => "scene",
            Keyword::Entities => "entities",
            Keyword::Root => "root",
            Keyword::Rules => "rules",
            Keyword::Where => "where",
            Keyword::As => "as",
            Keyword::In => "in",
        }
    }
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Keyword(k) => format!("keyword '{}'", k.as_str()),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::Dot => "'.'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Dash => "'-'".into(),
            Tok::Less => "'<'".into(),
            Tok::Greater => "'>'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Split source text into tokens. `#` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let start = Span::new(line, col, 1);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            let len = i - begin;
            col += len;
            if word.starts_with('_') {
                return Err(Diagnostic::error(format!(
                    "identifier '{word}' must start with a letter"
                ))
                .at(Span::new(start.line, start.column, len)));
            }
            let tok = match Keyword::from_word(&word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word),
            };
            tokens.push(Token {
                tok,
                span: Span::new(start.line, start.column, len),
            });
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[begin..i].iter().collect();
            let len = i - begin;
            col += len;
            let span = Span::new(start.line, start.column, len);
            let n = text.parse::<i64>().map_err(|_| {
                Diagnostic::error(format!("number {text} is out of range")).at(span)
            })?;
            tokens.push(Token {
                tok: Tok::Number(n),
                span,
            });
            continue;
        }
        let (tok, len) = match c {
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ';' => (Tok::Semi, 1),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '+' => (Tok::Plus, 1),
            '^' => (Tok::Caret, 1),
            '<' => (Tok::Less, 1),
            '>' => (Tok::Greater, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (Tok::Arrow, 2),
            '-' => (Tok::Dash, 1),
            other => {
                return Err(Diagnostic::error(format!("unexpected character '{other}'")).at(start))
            }
        };
        tokens.push(Token {
            tok,
            span: Span::new(start.line, start.column, len),
        });
        i += len;
        col += len;
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col, 0),
    });
    Ok(tokens)
}
