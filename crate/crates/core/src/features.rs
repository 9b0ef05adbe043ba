//! Encoder inputs: Stage-1 features plus operating point, and the
//! token-statistics surrogate used when Stage-1 is ablated away.

use sha2::{Digest, Sha256};
use slackcast_rtl::lexer::{tokenize, Keyword, Tok};
use slackcast_stage1::PHI_DIM;

use crate::Result;

pub const INPUT_DIM: usize = PHI_DIM + 2;

/// `log1p(phi) ++ [clock_period / 1000, corner_scale]`.
pub fn encoder_input(phi: &[f64], clock_period: f64, corner_scale: f64) -> Vec<f64> {
    let mut x: Vec<f64> = phi.iter().map(|&v| v.signum() * v.abs().ln_1p()).collect();
    x.push(clock_period / 1000.0);
    x.push(corner_scale);
    x
}

const SYMBOLS: [&str; 18] = [
    "~", "&", "|", "^", "+", "-", "==", "<", "?", ":", "{", "}", "[", "]", "(", ")", "<=", "=",
];
const KEYWORDS: [Keyword; 10] = [
    Keyword::Always,
    Keyword::If,
    Keyword::Else,
    Keyword::Case,
    Keyword::Assign,
    Keyword::Reg,
    Keyword::Wire,
    Keyword::Input,
    Keyword::Output,
    Keyword::Begin,
];

/// Raw lexical statistics in a PHI_DIM-slot vector: token count,
/// identifier uses, distinct identifiers, literals, summed literal widths,
/// one slot per operator/bracket symbol and one per structural keyword.
pub fn token_stats(source: &str) -> Result<Vec<f64>> {
    let toks = tokenize(source)?;
    let mut v = vec![0.0; PHI_DIM];
    let mut names = std::collections::HashSet::new();
    v[0] = toks.len() as f64;
    for t in &toks {
        match &t.tok {
            Tok::Ident(n) => {
                v[1] += 1.0;
                names.insert(n.clone());
            }
            Tok::Number { width, value } => {
                v[3] += 1.0;
                v[4] += width.unwrap_or_else(|| slackcast_rtl::ast::min_width(*value)) as f64;
            }
            Tok::Sym(s) => {
                if let Some(i) = SYMBOLS.iter().position(|x| x == s) {
                    v[5 + i] += 1.0;
                }
            }
            Tok::Keyword(k) => {
                if let Some(i) = KEYWORDS.iter().position(|x| x == k) {
                    v[5 + SYMBOLS.len() + i] += 1.0;
                }
            }
            _ => {}
        }
    }
    v[2] = names.len() as f64;
    Ok(v)
}

/// SHA-256 hex digest of the canonical token stream.
pub fn token_hash(source: &str) -> Result<String> {
    let toks = slackcast_rtl::canonical_tokens(source)?;
    Ok(hash_tokens(&toks))
}

pub fn hash_tokens(toks: &[String]) -> String {
    let mut h = Sha256::new();
    for t in toks {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// SHA-256 hex digest over a sequence of f64 values (little-endian bits).
pub fn checksum_f64(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}
