use std::fmt;

use super::LangError;
use crate::Rational;

/// 1-based line/column position in a source text.
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
pub(crate) enum Tok {
    Ident(String),
    Num(Rational),
    Str(String),
    /// `//@key value` structured comment.
    Annotation(String, String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Prime,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Amp,
    Bar,
    Bang,
    Arrow,
    DotDot,
    Question,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Num(n) => return write!(f, "number `{n}`"),
            Tok::Str(s) => return write!(f, "string \"{s}\""),
            Tok::Annotation(k, _) => return write!(f, "annotation `//@{k}`"),
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Prime => "'",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Bang => "!",
            Tok::Arrow => "->",
            Tok::DotDot => "..",
            Tok::Question => "?",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            col: 1,
            out: Vec::new(),
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn push(&mut self, tok: Tok, pos: Pos) {
        self.out.push(Token { tok, pos });
    }

    fn run(mut self) -> Result<Vec<Token>, LangError> {
        while let Some(c) = self.peek() {
            let pos = self.pos();
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek2() == Some('/') => self.comment(pos),
                c if c.is_ascii_digit() => self.number(pos)?,
                c if c.is_alphabetic() || c == '_' => {
                    let start = self.offset();
                    while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    let end = self.offset();
                    let word = self.src[start..end].to_string();
                    self.push(Tok::Ident(word), pos);
                }
                '"' => {
                    self.bump();
                    let start = self.offset();
                    loop {
                        match self.peek() {
                            Some('"') => break,
                            Some('\n') | None => {
                                return Err(LangError::lex(pos, "unterminated string literal"))
                            }
                            Some(_) => {
                                self.bump();
                            }
                        }
                    }
                    let end = self.offset();
                    let s = self.src[start..end].to_string();
                    self.bump();
                    self.push(Tok::Str(s), pos);
                }
                _ => self.punct(c, pos)?,
            }
        }
        let pos = self.pos();
        self.push(Tok::Eof, pos);
        Ok(self.out)
    }

    fn comment(&mut self, pos: Pos) {
        self.bump();
        self.bump();
        let start = self.offset();
        while matches!(self.peek(), Some(c) if c != '\n') {
            self.bump();
        }
        let end = self.offset();
        let body = &self.src[start..end];
        if let Some(rest) = body.strip_prefix('@') {
            let mut parts = rest.trim().splitn(2, char::is_whitespace);
            let key = parts.next().unwrap_or_default().to_string();
            let value = parts.next().unwrap_or_default().trim().to_string();
            if !key.is_empty() {
                self.push(Tok::Annotation(key, value), pos);
            }
        }
    }

    fn number(&mut self, pos: Pos) -> Result<(), LangError> {
        let start = self.offset();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        // `1..2` is a range, not a decimal
        if self.peek() == Some('.') && matches!(self.peek2(), Some(c) if c.is_ascii_digit()) {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let next = self.peek2();
            if matches!(next, Some(c) if c.is_ascii_digit() || c == '-' || c == '+') {
                self.bump();
                if matches!(self.peek(), Some('-' | '+')) {
                    self.bump();
                }
                if !matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    return Err(LangError::lex(pos, "malformed exponent in number literal"));
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let end = self.offset();
        let text = &self.src[start..end];
        let value = parse_decimal(text)
            .ok_or_else(|| LangError::lex(pos, format!("number `{text}` is not representable")))?;
        self.push(Tok::Num(value), pos);
        Ok(())
    }

    fn punct(&mut self, c: char, pos: Pos) -> Result<(), LangError> {
        self.bump();
        let next = self.peek();
        let (tok, two) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, true),
            ('.', Some('.')) => (Tok::DotDot, true),
            ('!', Some('=')) => (Tok::Ne, true),
            ('<', Some('=')) => (Tok::Le, true),
            ('>', Some('=')) => (Tok::Ge, true),
            ('[', _) => (Tok::LBracket, false),
            (']', _) => (Tok::RBracket, false),
            ('(', _) => (Tok::LParen, false),
            (')', _) => (Tok::RParen, false),
            ('{', _) => (Tok::LBrace, false),
            ('}', _) => (Tok::RBrace, false),
            (';', _) => (Tok::Semi, false),
            (':', _) => (Tok::Colon, false),
            (',', _) => (Tok::Comma, false),
            ('\'', _) => (Tok::Prime, false),
            ('=', _) => (Tok::Eq, false),
            ('<', _) => (Tok::Lt, false),
            ('>', _) => (Tok::Gt, false),
            ('+', _) => (Tok::Plus, false),
            ('-', _) => (Tok::Minus, false),
            ('*', _) => (Tok::Star, false),
            ('&', _) => (Tok::Amp, false),
            ('|', _) => (Tok::Bar, false),
            ('!', _) => (Tok::Bang, false),
            ('?', _) => (Tok::Question, false),
            _ => return Err(LangError::lex(pos, format!("unexpected character `{c}`"))),
        };
        if two {
            self.bump();
        }
        self.push(tok, pos);
        Ok(())
    }
}

/// Exact value of a decimal literal such as `12`, `0.125` or `2.5e-3`.
pub(crate) fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let mut numer: i64 = digits.parse().ok()?;
    let mut scale = exp - i32::try_from(frac_part.len()).ok()?;
    let mut denom: i64 = 1;
    while scale > 0 {
        numer = numer.checked_mul(10)?;
        scale -= 1;
    }
    while scale < 0 {
        denom = denom.checked_mul(10)?;
        scale += 1;
    }
    Some(Rational::new(numer, denom))
}
