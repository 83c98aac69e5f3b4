//! Lexer for the first-order-formula corpus encoding.
//!
//! The token alphabet is exactly what MPTP-style output uses: identifiers
//! (lowercase- or digit-initial), variables (uppercase-initial), the
//! connectives `& | => <=> ~ = !=`, the quantifiers `!` and `?`, and the
//! punctuation `( ) [ ] , : .`. `%` and `::` start comments that run to end
//! of line. Anything else is a lex error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Variable,
    LParen,
    RParen,
    Comma,
    Ampersand,
    Pipe,
    Implies,
    Iff,
    Not,
    Forall,
    Exists,
    Colon,
    LBracket,
    RBracket,
    Equals,
    NotEquals,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
}

impl Token {
    fn fixed(kind: TokenKind, text: &str) -> Token {
        Token {
            kind,
            text: text.to_string(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexError {
    #[error("empty input")]
    EmptyInput,
    #[error("unexpected byte 0x{byte:02x} at position {pos}")]
    UnexpectedByte { pos: usize, byte: u8 },
}

/// Tokenizes one formula or annotated entry. Tokens cover all non-whitespace,
/// non-comment input; empty (or comment-only) input is an error.
pub fn lex(text: &str) -> Result<Vec<Token>, LexError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b':' if bytes.get(i + 1) == Some(&b':') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                tokens.push(Token::fixed(TokenKind::LParen, "("));
                i += 1;
            }
            b')' => {
                tokens.push(Token::fixed(TokenKind::RParen, ")"));
                i += 1;
            }
            b'[' => {
                tokens.push(Token::fixed(TokenKind::LBracket, "["));
                i += 1;
            }
            b']' => {
                tokens.push(Token::fixed(TokenKind::RBracket, "]"));
                i += 1;
            }
            b',' => {
                tokens.push(Token::fixed(TokenKind::Comma, ","));
                i += 1;
            }
            b':' => {
                tokens.push(Token::fixed(TokenKind::Colon, ":"));
                i += 1;
            }
            b'.' => {
                tokens.push(Token::fixed(TokenKind::Dot, "."));
                i += 1;
            }
            b'&' => {
                tokens.push(Token::fixed(TokenKind::Ampersand, "&"));
                i += 1;
            }
            b'|' => {
                tokens.push(Token::fixed(TokenKind::Pipe, "|"));
                i += 1;
            }
            b'~' => {
                tokens.push(Token::fixed(TokenKind::Not, "~"));
                i += 1;
            }
            b'?' => {
                tokens.push(Token::fixed(TokenKind::Exists, "?"));
                i += 1;
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token::fixed(TokenKind::NotEquals, "!="));
                    i += 2;
                } else {
                    tokens.push(Token::fixed(TokenKind::Forall, "!"));
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push(Token::fixed(TokenKind::Implies, "=>"));
                    i += 2;
                } else {
                    tokens.push(Token::fixed(TokenKind::Equals, "="));
                    i += 1;
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') && bytes.get(i + 2) == Some(&b'>') {
                    tokens.push(Token::fixed(TokenKind::Iff, "<=>"));
                    i += 3;
                } else {
                    return Err(LexError::UnexpectedByte { pos: i, byte: b });
                }
            }
            b'A'..=b'Z' => {
                let start = i;
                i += 1;
                while i < bytes.len() && is_word_byte(bytes[i]) {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Variable,
                    text: text[start..i].to_string(),
                });
            }
            // Numbers lex as identifiers: they are uninterpreted constants
            // in the corpus.
            b'a'..=b'z' | b'0'..=b'9' => {
                let start = i;
                i += 1;
                while i < bytes.len() && is_word_byte(bytes[i]) {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Identifier,
                    text: text[start..i].to_string(),
                });
            }
            _ => return Err(LexError::UnexpectedByte { pos: i, byte: b }),
        }
    }
    if tokens.is_empty() {
        return Err(LexError::EmptyInput);
    }
    Ok(tokens)
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        lex(text).unwrap().iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_equation_example() {
        let toks = lex("f(f(X))=g(X)").unwrap();
        let expect = [
            (Identifier, "f"),
            (LParen, "("),
            (Identifier, "f"),
            (LParen, "("),
            (Variable, "X"),
            (RParen, ")"),
            (RParen, ")"),
            (Equals, "="),
            (Identifier, "g"),
            (LParen, "("),
            (Variable, "X"),
            (RParen, ")"),
        ];
        assert_eq!(toks.len(), expect.len());
        for (t, (k, s)) in toks.iter().zip(expect.iter()) {
            assert_eq!(t.kind, *k);
            assert_eq!(t.text, *s);
        }
    }

    #[test]
    fn lexes_corpus_symbol() {
        let toks = lex("v1_jordan1(A)").unwrap();
        assert_eq!(toks[0].kind, Identifier);
        assert_eq!(toks[0].text, "v1_jordan1");
        assert_eq!(kinds("v1_jordan1(A)"), vec![Identifier, LParen, Variable, RParen]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(lex(""), Err(LexError::EmptyInput));
        assert_eq!(lex("  \n\t"), Err(LexError::EmptyInput));
        assert_eq!(lex("% only a comment"), Err(LexError::EmptyInput));
    }

    #[test]
    fn rejects_bytes_outside_the_alphabet() {
        assert_eq!(lex("p @ q"), Err(LexError::UnexpectedByte { pos: 2, byte: b'@' }));
        assert!(matches!(lex("p <= q"), Err(LexError::UnexpectedByte { pos: 2, .. })));
    }

    #[test]
    fn numbers_lex_as_identifiers() {
        let toks = lex("k15_euclid(2)").unwrap();
        assert_eq!(toks[2].kind, Identifier);
        assert_eq!(toks[2].text, "2");
    }

    #[test]
    fn compound_operators() {
        assert_eq!(kinds("p => q"), vec![Identifier, Implies, Identifier]);
        assert_eq!(kinds("p <=> q"), vec![Identifier, Iff, Identifier]);
        assert_eq!(kinds("a != b"), vec![Identifier, NotEquals, Identifier]);
        assert_eq!(kinds("! [X] : p"), vec![Forall, LBracket, Variable, RBracket, Colon, Identifier]);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds(":: header line\np & q"), vec![Identifier, Ampersand, Identifier]);
        assert_eq!(kinds("p % trailing\n& q"), vec![Identifier, Ampersand, Identifier]);
    }

    #[test]
    fn rejoining_token_texts_relexes_identically() {
        let original = lex("fof(t1, axiom, ! [A,B] : (p(A) => ~ q(B, f(A)) | A != B)).").unwrap();
        let joined: Vec<String> = original.iter().map(|t| t.text.clone()).collect();
        let relexed = lex(&joined.join(" ")).unwrap();
        assert_eq!(original, relexed);
    }
}
