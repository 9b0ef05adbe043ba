//! Tokenizer for the supported Verilog subset.
//!
//! Constructs outside the subset still lex (keywords like `initial`, `#`
//! delays, `$` system tasks) so the parser can reject them by name.

use crate::error::{Result, RtlError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Module,
    Endmodule,
    Input,
    Output,
    Inout,
    Wire,
    Reg,
    Assign,
    Always,
    Posedge,
    Negedge,
    Begin,
    End,
    If,
    Else,
    Case,
    Casez,
    Casex,
    Endcase,
    Default,
    Initial,
    Task,
    Function,
    Parameter,
    Localparam,
    Generate,
    Integer,
    For,
    While,
}

impl Keyword {
    fn from_str(s: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match s {
            "module" => Module,
            "endmodule" => Endmodule,
            "input" => Input,
            "output" => Output,
            "inout" => Inout,
            "wire" => Wire,
            "reg" => Reg,
            "assign" => Assign,
            "always" => Always,
            "posedge" => Posedge,
            "negedge" => Negedge,
            "begin" => Begin,
            "end" => End,
            "if" => If,
            "else" => Else,
            "case" => Case,
            "casez" => Casez,
            "casex" => Casex,
            "endcase" => Endcase,
            "default" => Default,
            "initial" => Initial,
            "task" => Task,
            "function" => Function,
            "parameter" => Parameter,
            "localparam" => Localparam,
            "generate" => Generate,
            "integer" => Integer,
            "for" => For,
            "while" => While,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Module => "module",
            Endmodule => "endmodule",
            Input => "input",
            Output => "output",
            Inout => "inout",
            Wire => "wire",
            Reg => "reg",
            Assign => "assign",
            Always => "always",
            Posedge => "posedge",
            Negedge => "negedge",
            Begin => "begin",
            End => "end",
            If => "if",
            Else => "else",
            Case => "case",
            Casez => "casez",
            Casex => "casex",
            Endcase => "endcase",
            Default => "default",
            Initial => "initial",
            Task => "task",
            Function => "function",
            Parameter => "parameter",
            Localparam => "localparam",
            Generate => "generate",
            Integer => "integer",
            For => "for",
            While => "while",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tok {
    Ident(String),
    Keyword(Keyword),
    /// `width` is `None` for plain unsized decimals.
    Number { width: Option<u32>, value: u64 },
    /// `$display` and friends; always rejected by the parser.
    System(String),
    Sym(&'static str),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) | Tok::System(s) => f.write_str(s),
            Tok::Keyword(k) => f.write_str(k.as_str()),
            Tok::Number {
                width: Some(w),
                value,
            } => write!(f, "{w}'d{value}"),
            Tok::Number { width: None, value } => write!(f, "{value}"),
            Tok::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest match first.
const SYMBOLS: &[&str] = &[
    "===", "!==", "<<<", ">>>", "<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "~&", "~|", "~^",
    "^~", "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "<", ">", "~", "&", "|", "^", "+",
    "-", "?", "@", "#", "!", "*", "/", "%", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut line_start = 0usize;

    while i < bytes.len() {
        let c = bytes[i];
        let span = Span {
            line,
            col: (i - line_start + 1) as u32,
        };
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let Some(end) = src[i + 2..].find("*/") else {
                return Err(RtlError::syntax(span, "unterminated block comment"));
            };
            for &b in &bytes[i..i + 2 + end + 2] {
                if b == b'\n' {
                    line += 1;
                }
            }
            i += 2 + end + 2;
            if let Some(nl) = src[..i].rfind('\n') {
                line_start = nl + 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                i += 1;
            }
            let word = &src[start..i];
            let tok = match Keyword::from_str(word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, span });
            continue;
        }
        if c == b'$' {
            let start = i;
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::System(src[start..i].to_string()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'\'' {
            let (tok, len) = lex_number(&src[i..], span)?;
            i += len;
            out.push(Token { tok, span });
            continue;
        }
        if c == b'"' {
            return Err(RtlError::syntax(span, "string literals are not supported"));
        }
        let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) else {
            return Err(RtlError::syntax(
                span,
                format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
            ));
        };
        i += sym.len();
        out.push(Token {
            tok: Tok::Sym(sym),
            span,
        });
    }
    Ok(out)
}

fn lex_number(s: &str, span: Span) -> Result<(Tok, usize)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
        i += 1;
    }
    let size_digits: String = s[..i].chars().filter(|&c| c != '_').collect();
    // skip whitespace between size and base, as Verilog permits
    let mut j = i;
    while j < bytes.len() && bytes[j] == b' ' {
        j += 1;
    }
    if j >= bytes.len() || bytes[j] != b'\'' {
        let value = size_digits
            .parse::<u64>()
            .map_err(|_| RtlError::syntax(span, format!("decimal literal `{size_digits}` overflows 64 bits")))?;
        return Ok((Tok::Number { width: None, value }, i));
    }
    let width = if size_digits.is_empty() {
        None
    } else {
        let w: u32 = size_digits
            .parse()
            .map_err(|_| RtlError::syntax(span, "bad literal size"))?;
        if w == 0 || w > 64 {
            return Err(RtlError::syntax(span, format!("literal width {w} outside 1..=64")));
        }
        Some(w)
    };
    j += 1;
    if j < bytes.len() && (bytes[j] == b's' || bytes[j] == b'S') {
        return Err(RtlError::syntax(span, "signed literals are not supported"));
    }
    let radix = match bytes.get(j).map(|b| b.to_ascii_lowercase()) {
        Some(b'b') => 2,
        Some(b'o') => 8,
        Some(b'd') => 10,
        Some(b'h') => 16,
        _ => return Err(RtlError::syntax(span, "malformed based literal")),
    };
    j += 1;
    while j < bytes.len() && bytes[j] == b' ' {
        j += 1;
    }
    let start = j;
    while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'?') {
        j += 1;
    }
    let digits: String = s[start..j].chars().filter(|&c| c != '_').collect();
    if digits.is_empty() {
        return Err(RtlError::syntax(span, "based literal has no digits"));
    }
    if digits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
        return Err(RtlError::syntax(span, "X/Z literal values are not supported"));
    }
    let value = u64::from_str_radix(&digits, radix)
        .map_err(|_| RtlError::syntax(span, format!("bad digits `{digits}` for radix {radix}")))?;
    let value = match width {
        Some(w) if w < 64 => value & ((1u64 << w) - 1),
        _ => value,
    };
    Ok((Tok::Number { width, value }, j))
}
