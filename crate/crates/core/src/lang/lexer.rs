//! Tokenizer for the Java subset. Comments are dropped here, string and char
//! literals survive as single tokens so they never leak into def/use sets.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Char(char),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokKind::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(&self.kind, TokKind::Ident(q) if q == s)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TokKind::Ident(s) => format!("`{s}`"),
            TokKind::Int(v) => format!("integer `{v}`"),
            TokKind::Float(v) => format!("number `{v}`"),
            TokKind::Char(c) => format!("char literal {c:?}"),
            TokKind::Str(_) => "string literal".to_string(),
            TokKind::Punct(p) => format!("`{p}`"),
            TokKind::Eof => "end of input".to_string(),
        }
    }
}

// Longest match first.
const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "+", "-", "*", "/", "%",
    "=", "<", ">", "!", "~", "?", ":", ";", ",", ".", "(", ")", "{", "}", "[", "]", "&", "|",
    "^", "@",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(l0, c0, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }

        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                s.push(bump!());
            }
            toks.push(Token { kind: TokKind::Ident(s), line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let kind = lex_number(&chars, &mut i, &mut col).map_err(|m| ParseError::new(tl, tc, m))?;
            toks.push(Token { kind, line: tl, col: tc });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(ParseError::new(tl, tc, "unterminated string literal"));
                }
                let ch = bump!();
                match ch {
                    '"' => break,
                    '\\' => {
                        if i >= chars.len() {
                            return Err(ParseError::new(tl, tc, "unterminated string literal"));
                        }
                        let e = bump!();
                        s.push(unescape(e).ok_or_else(|| ParseError::new(line, col, format!("unknown escape `\\{e}`")))?);
                    }
                    other => s.push(other),
                }
            }
            toks.push(Token { kind: TokKind::Str(s), line: tl, col: tc });
            continue;
        }
        if c == '\'' {
            bump!();
            if i >= chars.len() {
                return Err(ParseError::new(tl, tc, "unterminated char literal"));
            }
            let ch = match bump!() {
                '\\' => {
                    if i >= chars.len() {
                        return Err(ParseError::new(tl, tc, "unterminated char literal"));
                    }
                    let e = bump!();
                    unescape(e).ok_or_else(|| ParseError::new(tl, tc, format!("unknown escape `\\{e}`")))?
                }
                '\n' | '\'' => return Err(ParseError::new(tl, tc, "malformed char literal")),
                other => other,
            };
            if i >= chars.len() || chars[i] != '\'' {
                return Err(ParseError::new(tl, tc, "unterminated char literal"));
            }
            bump!();
            toks.push(Token { kind: TokKind::Char(ch), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 4)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for _ in 0..p.chars().count() {
                    bump!();
                }
                toks.push(Token { kind: TokKind::Punct(p), line: tl, col: tc });
            }
            None => return Err(ParseError::new(tl, tc, format!("unexpected character {c:?}"))),
        }
    }
    toks.push(Token { kind: TokKind::Eof, line, col });
    Ok(toks)
}

fn unescape(e: char) -> Option<char> {
    Some(match e {
        'n' => '\n',
        't' => '\t',
        'r' => '\r',
        '0' => '\0',
        'b' => '\u{8}',
        'f' => '\u{c}',
        '\\' => '\\',
        '\'' => '\'',
        '"' => '"',
        _ => return None,
    })
}

fn lex_number(chars: &[char], i: &mut usize, col: &mut usize) -> Result<TokKind, String> {
    let start = *i;
    let mut text = String::new();
    let mut is_float = false;
    if chars[*i] == '0' && matches!(chars.get(*i + 1), Some('x') | Some('X')) {
        *i += 2;
        while *i < chars.len() && (chars[*i].is_ascii_hexdigit() || chars[*i] == '_') {
            if chars[*i] != '_' {
                text.push(chars[*i]);
            }
            *i += 1;
        }
        if matches!(chars.get(*i), Some('L') | Some('l')) {
            *i += 1;
        }
        *col += *i - start;
        return i64::from_str_radix(&text, 16)
            .map(TokKind::Int)
            .map_err(|_| "malformed hex literal".to_string());
    }
    while *i < chars.len() {
        let c = chars[*i];
        if c.is_ascii_digit() {
            text.push(c);
        } else if c == '_' {
        } else if c == '.' && !is_float && chars.get(*i + 1).is_some_and(|d| d.is_ascii_digit()) {
            is_float = true;
            text.push(c);
        } else if (c == 'e' || c == 'E')
            && (chars.get(*i + 1).is_some_and(|d| d.is_ascii_digit())
                || (matches!(chars.get(*i + 1), Some('+') | Some('-'))
                    && chars.get(*i + 2).is_some_and(|d| d.is_ascii_digit())))
        {
            is_float = true;
            text.push(c);
            *i += 1;
            text.push(chars[*i]);
        } else {
            break;
        }
        *i += 1;
    }
    let mut suffix_float = false;
    match chars.get(*i) {
        Some('L') | Some('l') => *i += 1,
        Some('d') | Some('D') | Some('f') | Some('F') => {
            suffix_float = true;
            *i += 1;
        }
        _ => {}
    }
    if chars.get(*i).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
        return Err("malformed numeric literal".to_string());
    }
    *col += *i - start;
    if is_float || suffix_float {
        text.parse::<f64>().map(TokKind::Float).map_err(|_| "malformed float literal".to_string())
    } else {
        text.parse::<i64>().map(TokKind::Int).map_err(|_| "integer literal out of range".to_string())
    }
}
