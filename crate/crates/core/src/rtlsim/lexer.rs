use super::HdlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// A numeric literal. `care` clears bits written as `?`/`z`/`x`; such
/// literals are only accepted as casez/casex labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub value: u64,
    pub care: u64,
    pub width: Option<u32>,
    pub signed: bool,
    pub based: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    SysIdent(String),
    Number(Literal),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::SysIdent(s) => format!("`{s}`"),
            Tok::Number(_) => "number".into(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest first so that greedy matching works.
const SYMBOLS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "~&", "~|",
    "~^", "^~", "+:", "-:", "**", "(", ")", "[", "]", "{", "}", ";", ",", ":", "?", "=", "+",
    "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "@", "#", ".",
];

pub fn lex(src: &str) -> Result<Vec<Token>, HdlError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        if c.is_ascii_whitespace() {
            bump!(1);
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(end) => bump!(end + 4),
                None => {
                    return Err(HdlError::Lex {
                        line,
                        col,
                        msg: "unterminated block comment".into(),
                    })
                }
            }
            continue;
        }
        if c == b'`' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let directive = &src[start..j];
            match directive {
                "timescale" | "default_nettype" | "resetall" | "celldefine" | "endcelldefine" => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        bump!(1);
                    }
                    continue;
                }
                _ => {
                    return Err(HdlError::Unsupported {
                        construct: format!("`{directive}"),
                        line,
                    })
                }
            }
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let start = i;
            bump!(1);
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                bump!(1);
            }
            let word = &src[start..i];
            let tok = if c == b'$' {
                Tok::SysIdent(word.to_string())
            } else {
                Tok::Ident(word.to_string())
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c == b'\\' {
            // Escaped identifier: runs to the next whitespace.
            let start = i + 1;
            bump!(1);
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                bump!(1);
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'\'' {
            let start = i;
            // Optional size.
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                bump!(1);
            }
            let size_text = &src[start..i];
            // Allow whitespace between size and base, e.g. `8 'hFF`.
            let mut j = i;
            while j < bytes.len() && bytes[j] == b' ' {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'\'' && j + 1 < bytes.len() {
                bump!(j - i + 1);
                let mut signed = false;
                if i < bytes.len() && (bytes[i] == b's' || bytes[i] == b'S') {
                    signed = true;
                    bump!(1);
                }
                if i >= bytes.len() {
                    return Err(HdlError::Lex { line, col, msg: "truncated literal".into() });
                }
                let base = bytes[i].to_ascii_lowercase();
                let radix = match base {
                    b'b' => 2,
                    b'o' => 8,
                    b'd' => 10,
                    b'h' => 16,
                    _ => {
                        return Err(HdlError::Lex {
                            line,
                            col,
                            msg: format!("bad number base `{}`", base as char),
                        })
                    }
                };
                bump!(1);
                while i < bytes.len() && bytes[i] == b' ' {
                    bump!(1);
                }
                let dstart = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'?')
                {
                    bump!(1);
                }
                let digits = &src[dstart..i];
                let width = if size_text.is_empty() {
                    None
                } else {
                    let w: u32 = size_text.replace('_', "").parse().map_err(|_| HdlError::Lex {
                        line: pos.line,
                        col: pos.col,
                        msg: format!("bad literal size `{size_text}`"),
                    })?;
                    if w == 0 || w > 64 {
                        return Err(HdlError::Lex {
                            line: pos.line,
                            col: pos.col,
                            msg: format!("literal width {w} outside 1..=64"),
                        });
                    }
                    Some(w)
                };
                let (value, care) = parse_digits(digits, radix).map_err(|msg| HdlError::Lex {
                    line: pos.line,
                    col: pos.col,
                    msg,
                })?;
                let w = width.unwrap_or(32);
                let m = crate::value::mask(w);
                // Unknown bits in the top digit extend through the full width.
                let care = if care != u64::MAX && width.is_some() {
                    let top_unknown = digits
                        .trim_start_matches('_')
                        .chars()
                        .next()
                        .is_some_and(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?'));
                    if top_unknown {
                        let bits_per_digit = match radix {
                            2 => 1,
                            8 => 3,
                            _ => 4,
                        };
                        let ndigits = digits.chars().filter(|c| *c != '_').count() as u32;
                        let covered = (ndigits * bits_per_digit).min(64);
                        care & crate::value::mask(covered)
                    } else {
                        care
                    }
                } else {
                    care
                };
                out.push(Token {
                    tok: Tok::Number(Literal {
                        value: value & m,
                        care: care & m,
                        width,
                        signed,
                        based: true,
                    }),
                    pos,
                });
                continue;
            }
            if size_text.is_empty() {
                return Err(HdlError::Lex { line, col, msg: "stray `'`".into() });
            }
            let value: u64 = size_text.replace('_', "").parse().map_err(|_| HdlError::Lex {
                line: pos.line,
                col: pos.col,
                msg: format!("number `{size_text}` out of range"),
            })?;
            out.push(Token {
                tok: Tok::Number(Literal {
                    value,
                    care: u64::MAX,
                    width: None,
                    signed: true,
                    based: false,
                }),
                pos,
            });
            continue;
        }
        let rest = &src[i..];
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                bump!(sym.len());
                out.push(Token { tok: Tok::Sym(sym), pos });
            }
            None => {
                return Err(HdlError::Lex {
                    line,
                    col,
                    msg: format!("unexpected character `{}`", rest.chars().next().unwrap()),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

fn parse_digits(digits: &str, radix: u32) -> Result<(u64, u64), String> {
    if digits.is_empty() {
        return Err("literal has no digits".into());
    }
    let bits_per_digit = match radix {
        2 => 1,
        8 => 3,
        16 => 4,
        _ => 0,
    };
    let mut value: u64 = 0;
    let mut care: u64 = u64::MAX;
    if radix == 10 {
        let clean: String = digits.chars().filter(|c| *c != '_').collect();
        if clean.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err("unknown digits in decimal literal".into());
        }
        value = clean
            .parse::<u64>()
            .map_err(|_| format!("bad decimal literal `{digits}`"))?;
        return Ok((value, care));
    }
    let mut nbits = 0u32;
    for ch in digits.chars() {
        if ch == '_' {
            continue;
        }
        let (d, unknown) = match ch {
            'x' | 'X' | 'z' | 'Z' | '?' => (0, true),
            c => (
                c.to_digit(radix)
                    .ok_or_else(|| format!("digit `{c}` invalid in base {radix}"))?,
                false,
            ),
        };
        nbits += bits_per_digit;
        if nbits > 64 + bits_per_digit {
            return Err("literal wider than 64 bits".into());
        }
        value = (value << bits_per_digit) | d as u64;
        care <<= bits_per_digit;
        if !unknown {
            care |= (1u64 << bits_per_digit) - 1;
        }
    }
    Ok((value, care))
}
