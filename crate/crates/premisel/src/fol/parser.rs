//! Recursive-descent parser for `fof(name, role, formula).` entries.
//!
//! Grammar notes, following TPTP conventions: `&` and `|` chains associate
//! (folded left), `=>` and `<=>` are non-associative, a quantifier body is a
//! unit formula, so `! [X] : p & q` requires parentheses around `p & q`.
//! Mixing `&` and `|` without parentheses is rejected.

use super::ast::{Connective, Formula, Quantifier, Role, Term};
use super::token::{Token, TokenKind};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// `pos` is the index into the token sequence.
    #[error("parse error at token {pos}: expected {expected}, found `{found}`")]
    Unexpected {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("unexpected end of input: expected {expected}")]
    UnexpectedEnd { expected: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("symbol `{symbol}` used with arity {first} and arity {conflict}")]
pub struct ArityError {
    pub symbol: String,
    pub first: usize,
    pub conflict: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEntry {
    pub name: String,
    pub role: Role,
    pub formula: Formula,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::Unexpected {
                pos: self.pos,
                expected: expected.to_string(),
                found: t.text.clone(),
            },
            None => ParseError::UnexpectedEnd {
                expected: expected.to_string(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<&Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.advance().unwrap()),
            _ => Err(self.err(what)),
        }
    }

    fn expect_identifier(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let text = t.text.clone();
                self.advance();
                Ok(text)
            }
            _ => Err(self.err(what)),
        }
    }

    fn entry(&mut self) -> Result<ParsedEntry, ParseError> {
        let head = self.expect_identifier("`fof`")?;
        if head != "fof" {
            self.pos -= 1;
            return Err(self.err("`fof`"));
        }
        self.expect(TokenKind::LParen, "`(`")?;
        let name = self.expect_identifier("entry name")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let role_text = self.expect_identifier("role")?;
        let role = Role::parse(&role_text).ok_or_else(|| ParseError::Unexpected {
            pos: self.pos - 1,
            expected: "role (axiom, definition or conjecture)".to_string(),
            found: role_text.clone(),
        })?;
        self.expect(TokenKind::Comma, "`,`")?;
        let formula = self.formula()?;
        self.expect(TokenKind::RParen, "`)`")?;
        self.expect(TokenKind::Dot, "`.`")?;
        Ok(ParsedEntry {
            name,
            role,
            formula,
        })
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.unit()?;
        let conn = match self.peek().map(|t| t.kind) {
            Some(TokenKind::Ampersand) => Connective::And,
            Some(TokenKind::Pipe) => Connective::Or,
            Some(TokenKind::Implies) => Connective::Implies,
            Some(TokenKind::Iff) => Connective::Iff,
            _ => return Ok(first),
        };
        self.advance();
        let second = self.unit()?;
        let mut acc = Formula::Binary(conn, Box::new(first), Box::new(second));
        match conn {
            Connective::And | Connective::Or => {
                // Associative chain of the same connective only.
                loop {
                    match self.peek().map(|t| t.kind) {
                        Some(k) if k == connective_kind(conn) => {
                            self.advance();
                            let next = self.unit()?;
                            acc = Formula::Binary(conn, Box::new(acc), Box::new(next));
                        }
                        Some(
                            TokenKind::Ampersand
                            | TokenKind::Pipe
                            | TokenKind::Implies
                            | TokenKind::Iff,
                        ) => return Err(self.err("parentheses (mixed binary connectives)")),
                        _ => return Ok(acc),
                    }
                }
            }
            Connective::Implies | Connective::Iff => {
                match self.peek().map(|t| t.kind) {
                    Some(
                        TokenKind::Ampersand
                        | TokenKind::Pipe
                        | TokenKind::Implies
                        | TokenKind::Iff,
                    ) => Err(self.err("parentheses (`=>`/`<=>` are non-associative)")),
                    _ => Ok(acc),
                }
            }
        }
    }

    fn unit(&mut self) -> Result<Formula, ParseError> {
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Not) => {
                self.advance();
                let body = self.unit()?;
                Ok(Formula::Negation(Box::new(body)))
            }
            Some(TokenKind::Forall | TokenKind::Exists) => self.quantified(),
            Some(TokenKind::LParen) => {
                self.advance();
                let inner = self.formula()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            Some(TokenKind::Identifier | TokenKind::Variable) => self.atomic(),
            _ => Err(self.err("a formula")),
        }
    }

    fn quantified(&mut self) -> Result<Formula, ParseError> {
        let q = match self.advance() {
            Some(t) if t.kind == TokenKind::Forall => Quantifier::Forall,
            Some(t) if t.kind == TokenKind::Exists => Quantifier::Exists,
            _ => unreachable!("caller checked"),
        };
        self.expect(TokenKind::LBracket, "`[`")?;
        let mut vars = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.kind == TokenKind::Variable => {
                    vars.push(t.text.clone());
                    self.advance();
                }
                _ => return Err(self.err("a variable")),
            }
            match self.peek().map(|t| t.kind) {
                Some(TokenKind::Comma) => {
                    self.advance();
                }
                Some(TokenKind::RBracket) => {
                    self.advance();
                    break;
                }
                _ => return Err(self.err("`,` or `]`")),
            }
        }
        self.expect(TokenKind::Colon, "`:`")?;
        let body = self.unit()?;
        Ok(Formula::Quantified(q, vars, Box::new(body)))
    }

    /// Predicate atom, equality or inequality. `t != u` parses as
    /// `Negation(Equality(t, u))`.
    fn atomic(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Equals) => {
                self.advance();
                let rhs = self.term()?;
                Ok(Formula::Equality(lhs, rhs))
            }
            Some(TokenKind::NotEquals) => {
                self.advance();
                let rhs = self.term()?;
                Ok(Formula::Negation(Box::new(Formula::Equality(lhs, rhs))))
            }
            _ => match lhs {
                Term::Function(pred, args) => Ok(Formula::Atom(pred, args)),
                Term::Var(_) => Err(self.err("`=` or `!=` after a variable")),
            },
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Variable => {
                let name = t.text.clone();
                self.advance();
                Ok(Term::Var(name))
            }
            Some(t) if t.kind == TokenKind::Identifier => {
                let sym = t.text.clone();
                self.advance();
                if self.peek().map(|t| t.kind) == Some(TokenKind::LParen) {
                    self.advance();
                    let mut args = Vec::new();
                    loop {
                        args.push(self.term()?);
                        match self.peek().map(|t| t.kind) {
                            Some(TokenKind::Comma) => {
                                self.advance();
                            }
                            Some(TokenKind::RParen) => {
                                self.advance();
                                break;
                            }
                            _ => return Err(self.err("`,` or `)`")),
                        }
                    }
                    Ok(Term::Function(sym, args))
                } else {
                    Ok(Term::Function(sym, Vec::new()))
                }
            }
            _ => Err(self.err("a term")),
        }
    }
}

fn connective_kind(c: Connective) -> TokenKind {
    match c {
        Connective::And => TokenKind::Ampersand,
        Connective::Or => TokenKind::Pipe,
        Connective::Implies => TokenKind::Implies,
        Connective::Iff => TokenKind::Iff,
    }
}

/// Parses exactly one annotated entry; trailing tokens are an error.
pub fn parse_entry(tokens: &[Token]) -> Result<ParsedEntry, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let entry = p.entry()?;
    if p.peek().is_some() {
        return Err(p.err("end of input"));
    }
    Ok(entry)
}

/// Parses a sequence of annotated entries to end of input.
pub fn parse_entries(tokens: &[Token]) -> Result<Vec<ParsedEntry>, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.entry()?);
    }
    Ok(out)
}

/// Parses a bare formula body (no `fof(...)` wrapper).
pub fn parse_formula(tokens: &[Token]) -> Result<Formula, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let f = p.formula()?;
    if p.peek().is_some() {
        return Err(p.err("end of input"));
    }
    Ok(f)
}

/// Arity of each symbol must be consistent within one formula. Predicate and
/// function positions share the symbol namespace.
pub fn check_arities(formula: &Formula) -> Result<(), ArityError> {
    fn record(
        seen: &mut HashMap<String, usize>,
        symbol: &str,
        arity: usize,
    ) -> Result<(), ArityError> {
        match seen.get(symbol) {
            Some(&first) if first != arity => Err(ArityError {
                symbol: symbol.to_string(),
                first,
                conflict: arity,
            }),
            Some(_) => Ok(()),
            None => {
                seen.insert(symbol.to_string(), arity);
                Ok(())
            }
        }
    }
    fn term(t: &Term, seen: &mut HashMap<String, usize>) -> Result<(), ArityError> {
        if let Term::Function(sym, args) = t {
            record(seen, sym, args.len())?;
            for a in args {
                term(a, seen)?;
            }
        }
        Ok(())
    }
    fn walk(f: &Formula, seen: &mut HashMap<String, usize>) -> Result<(), ArityError> {
        match f {
            Formula::Quantified(_, _, body) => walk(body, seen),
            Formula::Binary(_, l, r) => {
                walk(l, seen)?;
                walk(r, seen)
            }
            Formula::Negation(b) => walk(b, seen),
            Formula::Atom(pred, args) => {
                record(seen, pred, args.len())?;
                for a in args {
                    term(a, seen)?;
                }
                Ok(())
            }
            Formula::Equality(l, r) => {
                term(l, seen)?;
                term(r, seen)
            }
        }
    }
    walk(formula, &mut HashMap::new())
}
