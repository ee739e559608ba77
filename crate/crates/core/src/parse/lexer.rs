use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{ParseError, ParseErrorKind};
use crate::series::Coeff;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Num(Coeff),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push(Token { tok: t, pos: start });
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut int = BigInt::zero();
            let mut den = BigInt::one();
            let mut seen_dot = false;
            let mut digits = 0;
            while i < bytes.len() {
                let d = bytes[i] as char;
                if d.is_ascii_digit() {
                    int = int * 10 + (d as u8 - b'0');
                    if seen_dot {
                        den *= 10;
                    }
                    digits += 1;
                } else if d == '.' && !seen_dot {
                    seen_dot = true;
                } else {
                    break;
                }
                i += 1;
            }
            if digits == 0 {
                return Err(ParseError::new(start, ParseErrorKind::Syntax("malformed number".into())));
            }
            out.push(Token { tok: Tok::Num(Coeff::new(int, den)), pos: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(text[start..i].to_string()), pos: start });
            continue;
        }
        return Err(ParseError::new(start, ParseErrorKind::Syntax(format!("unexpected character '{c}'"))));
    }
    out.push(Token { tok: Tok::End, pos: text.len() });
    Ok(out)
}
