use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Digits kept verbatim so binary words keep their leading zeros.
    Int(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: [&str; 13] = ["->", "(", ")", "[", "]", "{", "}", ",", ";", "=", "/", "-", "+"];

/// Splits text into tokens; `#` starts a comment running to the line end.
pub fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut pos = Pos { line: 1, col: 1, offset: 0 };
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    let advance = |pos: &mut Pos, c: char| {
        pos.offset += c.len_utf8();
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            advance(&mut pos, c);
            i += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != '\n' {
                advance(&mut pos, bytes[i]);
                i += 1;
            }
            continue;
        }
        let start = pos;
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                s.push(bytes[i]);
                advance(&mut pos, bytes[i]);
                i += 1;
            }
            out.push(Token { tok: Tok::Int(s), pos: start });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_') {
                s.push(bytes[i]);
                advance(&mut pos, bytes[i]);
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(s), pos: start });
            continue;
        }
        let rest: String = bytes[i..bytes.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                for ch in s.chars() {
                    advance(&mut pos, ch);
                }
                i += s.chars().count();
                out.push(Token { tok: Tok::Sym(s), pos: start });
            }
            None => {
                return Err(Error::Parse { line: start.line, col: start.col, msg: format!("unexpected character `{c}`") })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos });
    Ok(out)
}
