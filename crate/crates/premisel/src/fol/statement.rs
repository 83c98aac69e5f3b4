//! A named, chronologically-indexed corpus statement with its parsed
//! formula and the derived character/token views the models consume.

use super::ast::{Formula, Role};
use super::parser::{check_arities, parse_entry};
use super::token::{lex, Token};
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub name: String,
    pub role: Role,
    /// 0-based chronological position within the corpus.
    pub index: usize,
    /// Canonical `fof(name, role, body).` rendering.
    pub source_text: String,
    pub formula: Formula,
    /// Bytes of the canonical formula body; the character models' input.
    pub char_seq: Vec<u8>,
    /// Tokens of the canonical formula body; the word models' input.
    pub token_seq: Vec<Token>,
}

impl Statement {
    /// Lexes and parses one `fof(name, role, formula).` entry, checks arity
    /// consistency, and derives the canonical views.
    pub fn parse(text: &str, index: usize) -> Result<Statement, SyntaxError> {
        let tokens = lex(text)?;
        let entry = parse_entry(&tokens)?;
        check_arities(&entry.formula)?;
        Ok(Statement::from_parts(entry.name, entry.role, entry.formula, index))
    }

    pub(crate) fn from_parts(
        name: String,
        role: Role,
        formula: Formula,
        index: usize,
    ) -> Statement {
        let body = formula.to_string();
        let token_seq = lex(&body).expect("canonical body lexes");
        let source_text = format!("fof({}, {}, {}).", name, role.as_str(), body);
        Statement {
            name,
            role,
            index,
            source_text,
            char_seq: body.into_bytes(),
            token_seq,
        }
    }
}
