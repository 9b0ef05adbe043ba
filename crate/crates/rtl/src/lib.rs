//! Frontend for a small synthesizable Verilog subset: a single module with
//! at most one posedge clock, continuous assigns, nonblocking clocked
//! assigns with `if`/`case`, and the operators `~ & | ^ + - == < ?:` on
//! vectors up to 64 bits.

pub mod ast;
pub mod elaborate;
pub mod error;
pub mod eval;
pub mod lexer;
pub mod netlist;
pub mod parser;
pub mod random;
pub mod tokens;
pub mod verify;

pub use ast::Ast;
pub use elaborate::elaborate;
pub use error::{Result, RtlError, Span};
pub use netlist::{Gate, GateType, NetId, Netlist, Signal};
pub use parser::parse;
pub use tokens::canonical_tokens;

/// Parses and elaborates in one step.
pub fn synthesize(source: &str) -> Result<Netlist> {
    elaborate(&parse(source)?)
}
