//! Canonical token streams for near-duplicate detection.

use std::collections::HashMap;

use crate::error::Result;
use crate::lexer::{tokenize, Tok};
use crate::parser::parse;

/// Tokens with whitespace and comments stripped, identifiers renamed
/// `id0, id1, ...` by first occurrence, and literals printed in decimal.
///
/// The source must parse; syntax errors are returned unchanged.
pub fn canonical_tokens(source: &str) -> Result<Vec<String>> {
    parse(source)?;
    let mut names: HashMap<String, usize> = HashMap::new();
    Ok(tokenize(source)?
        .into_iter()
        .map(|t| match t.tok {
            Tok::Ident(name) => {
                let next = names.len();
                format!("id{}", names.entry(name).or_insert(next))
            }
            Tok::Number { width: Some(w), value } => format!("{w}'d{value}"),
            other => other.to_string(),
        })
        .collect())
}
