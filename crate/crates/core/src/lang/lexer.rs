use std::fmt;

use crate::bitstring::BitString;
use crate::lang::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    Int(i128),
    Text(String),
    Bits(BitString),
    Regex(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Plus,
    Minus,
    Star,
    Percent,
    Bang,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Keyword(k) => write!(f, "`{k}`"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Text(s) => write!(f, "text {s:?}"),
            Tok::Bits(b) => write!(f, "bits {b}"),
            Tok::Regex(r) => write!(f, "pattern /{r}/"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Percent => f.write_str("`%`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "message", "module", "interactions", "record", "type", "codec", "enum", "of", "with", "as",
    "is", "end", "actor", "init", "state", "where", "anytime", "on", "do", "send", "next",
    "continue", "quit", "or",
];

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    tokenize_with(src, false)
}

/// Tokens of the value tree notation, e.g. `Ask { h { flag=1 } }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueTok {
    Int(i128),
    Text(String),
    Bits(BitString),
    Word(String),
    Eq,
    Open,
    Close,
    LBracket,
    RBracket,
}

pub fn tokenize_values(src: &str) -> Result<Vec<ValueTok>, String> {
    let toks = tokenize_with(src, true).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let mut negate = false;
    for t in toks {
        let v = match t.tok {
            Tok::Minus => {
                negate = true;
                continue;
            }
            Tok::Int(i) if negate => ValueTok::Int(-i),
            Tok::Int(i) => ValueTok::Int(i),
            Tok::Text(s) => ValueTok::Text(s),
            Tok::Bits(b) => ValueTok::Bits(b),
            Tok::Ident(w) => ValueTok::Word(w),
            Tok::Keyword(k) => ValueTok::Word(k.to_string()),
            Tok::Eq => ValueTok::Eq,
            Tok::LBrace => ValueTok::Open,
            Tok::RBrace => ValueTok::Close,
            Tok::LBracket => ValueTok::LBracket,
            Tok::RBracket => ValueTok::RBracket,
            Tok::Eof => break,
            other => return Err(format!("line {}, column {}: unexpected {other}", t.line, t.col)),
        };
        if negate && !matches!(v, ValueTok::Int(_)) {
            return Err(format!("line {}, column {}: `-` must precede an integer", t.line, t.col));
        }
        negate = false;
        out.push(v);
    }
    Ok(out)
}

fn tokenize_with(src: &str, value_mode: bool) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance!();
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let err = |msg: String| SyntaxError {
            line: tl,
            col: tc,
            message: msg,
        };
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '%' => Some(Tok::Percent),
            '!' => Some(Tok::Bang),
            '{' if value_mode => Some(Tok::LBrace),
            '}' if value_mode => Some(Tok::RBrace),
            '[' if value_mode => Some(Tok::LBracket),
            ']' if value_mode => Some(Tok::RBracket),
            _ => None,
        };
        if let Some(tok) = simple {
            advance!();
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        let bit_prefix = matches!(c, 'b' | 'X' | 'x') && chars.get(i + 1) == Some(&'\'');
        let tok = if bit_prefix {
            advance!();
            advance!();
            let start = i;
            while i < chars.len() && chars[i] != '\'' {
                advance!();
            }
            if i >= chars.len() {
                return Err(err("unterminated bit literal".into()));
            }
            let digits: String = chars[start..i].iter().collect();
            advance!();
            let parsed = if c == 'b' {
                BitString::parse_bits(&digits)
            } else {
                BitString::parse_hex(&digits)
            };
            Tok::Bits(parsed.map_err(|e| err(e.to_string()))?)
        } else if c == '\'' {
            advance!();
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(err("unterminated text literal".into()));
                }
                let ch = chars[i];
                advance!();
                match ch {
                    '\'' => break,
                    '\\' => {
                        if i >= chars.len() {
                            return Err(err("unterminated text literal".into()));
                        }
                        let e = chars[i];
                        advance!();
                        match e {
                            'n' => s.push('\n'),
                            'r' => s.push('\r'),
                            't' => s.push('\t'),
                            '0' => s.push('\0'),
                            '\\' => s.push('\\'),
                            '\'' => s.push('\''),
                            'x' => {
                                let hex: String = chars.get(i..i + 2).map(|h| h.iter().collect()).unwrap_or_default();
                                let code = u32::from_str_radix(&hex, 16)
                                    .map_err(|_| err("expected two hex digits after \\x".into()))?;
                                advance!();
                                advance!();
                                s.push(char::from_u32(code).unwrap());
                            }
                            other => return Err(err(format!("unknown escape \\{other} in text literal"))),
                        }
                    }
                    ch => s.push(ch),
                }
            }
            Tok::Text(s)
        } else if c == '/' {
            advance!();
            let start = i;
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(err("unterminated pattern literal".into()));
                }
                if chars[i] == '\\' && i + 1 < chars.len() {
                    advance!();
                    advance!();
                    continue;
                }
                if chars[i] == '/' {
                    break;
                }
                advance!();
            }
            let body: String = chars[start..i].iter().collect();
            advance!();
            Tok::Regex(body)
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance!();
            }
            let digits: String = chars[start..i].iter().collect();
            Tok::Int(digits.parse().map_err(|_| err(format!("integer literal {digits} out of range")))?)
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance!();
            }
            let word: String = chars[start..i].iter().collect();
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word),
            }
        } else {
            return Err(err(format!("unexpected character {c:?}")));
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
