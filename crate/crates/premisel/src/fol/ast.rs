//! Formula AST and the canonical pretty-printer.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
    Implies,
    Iff,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Constants are zero-ary functions.
    Function(String, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Quantified(Quantifier, Vec<String>, Box<Formula>),
    Binary(Connective, Box<Formula>, Box<Formula>),
    Negation(Box<Formula>),
    Atom(String, Vec<Term>),
    Equality(Term, Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Axiom,
    Definition,
    Conjecture,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Definition => "definition",
            Role::Conjecture => "conjecture",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "axiom" => Some(Role::Axiom),
            "definition" => Some(Role::Definition),
            "conjecture" => Some(Role::Conjecture),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(name) => write!(f, "{name}"),
            Term::Function(sym, args) => {
                write!(f, "{sym}")?;
                write_args(f, args)
            }
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    write!(f, "(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, ")")
}

/// Canonical form: binary connectives fully parenthesized, quantifiers as
/// `! [A,B] : body`, negated equalities as `lhs != rhs`. Parsing the printed
/// text yields a structurally identical AST.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Quantified(q, vars, body) => {
                let sym = match q {
                    Quantifier::Forall => "!",
                    Quantifier::Exists => "?",
                };
                write!(f, "{sym} [{}] : {body}", vars.join(","))
            }
            Formula::Binary(c, lhs, rhs) => {
                let sym = match c {
                    Connective::And => "&",
                    Connective::Or => "|",
                    Connective::Implies => "=>",
                    Connective::Iff => "<=>",
                };
                write!(f, "({lhs} {sym} {rhs})")
            }
            Formula::Negation(body) => match body.as_ref() {
                Formula::Equality(l, r) => write!(f, "{l} != {r}"),
                _ => write!(f, "~{body}"),
            },
            Formula::Atom(pred, args) => {
                write!(f, "{pred}")?;
                write_args(f, args)
            }
            Formula::Equality(l, r) => write!(f, "{l} = {r}"),
        }
    }
}

impl Formula {
    /// True when every variable occurrence is bound by an enclosing
    /// quantifier. MPTP output is closed; the parser does not enforce this.
    pub fn is_closed(&self) -> bool {
        fn walk_term(t: &Term, bound: &HashSet<&str>) -> bool {
            match t {
                Term::Var(v) => bound.contains(v.as_str()),
                Term::Function(_, args) => args.iter().all(|a| walk_term(a, bound)),
            }
        }
        fn walk<'a>(f: &'a Formula, bound: &mut HashSet<&'a str>) -> bool {
            match f {
                Formula::Quantified(_, vars, body) => {
                    let fresh: Vec<&str> = vars
                        .iter()
                        .map(|v| v.as_str())
                        .filter(|v| bound.insert(v))
                        .collect();
                    let ok = walk(body, bound);
                    for v in fresh {
                        bound.remove(v);
                    }
                    ok
                }
                Formula::Binary(_, l, r) => walk(l, bound) && walk(r, bound),
                Formula::Negation(b) => walk(b, bound),
                Formula::Atom(_, args) => args.iter().all(|a| walk_term(a, bound)),
                Formula::Equality(l, r) => walk_term(l, bound) && walk_term(r, bound),
            }
        }
        walk(self, &mut HashSet::new())
    }

    /// Every predicate and function symbol occurring in the formula.
    pub fn symbols(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.visit_symbols(&mut |s| {
            out.insert(s.to_string());
        });
        out
    }

    pub(crate) fn visit_symbols(&self, visit: &mut impl FnMut(&str)) {
        fn term(t: &Term, visit: &mut impl FnMut(&str)) {
            if let Term::Function(sym, args) = t {
                visit(sym);
                for a in args {
                    term(a, visit);
                }
            }
        }
        match self {
            Formula::Quantified(_, _, body) => body.visit_symbols(visit),
            Formula::Binary(_, l, r) => {
                l.visit_symbols(visit);
                r.visit_symbols(visit);
            }
            Formula::Negation(b) => b.visit_symbols(visit),
            Formula::Atom(pred, args) => {
                visit(pred);
                for a in args {
                    term(a, visit);
                }
            }
            Formula::Equality(l, r) => {
                term(l, visit);
                term(r, visit);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    fn func(s: &str, args: Vec<Term>) -> Term {
        Term::Function(s.to_string(), args)
    }

    #[test]
    fn display_forms() {
        let f = Formula::Quantified(
            Quantifier::Forall,
            vec!["A".into(), "B".into()],
            Box::new(Formula::Binary(
                Connective::Implies,
                Box::new(Formula::Atom("p".into(), vec![var("A")])),
                Box::new(Formula::Negation(Box::new(Formula::Equality(
                    var("A"),
                    func("f", vec![var("B")]),
                )))),
            )),
        );
        assert_eq!(f.to_string(), "! [A,B] : (p(A) => A != f(B))");
    }

    #[test]
    fn closedness() {
        let open = Formula::Atom("p".into(), vec![var("X")]);
        assert!(!open.is_closed());
        let closed = Formula::Quantified(
            Quantifier::Exists,
            vec!["X".into()],
            Box::new(Formula::Atom("p".into(), vec![var("X")])),
        );
        assert!(closed.is_closed());
    }

    #[test]
    fn symbol_collection() {
        let f = Formula::Equality(func("f", vec![func("c", vec![])]), var("X"));
        let syms = f.symbols();
        assert!(syms.contains("f") && syms.contains("c") && !syms.contains("X"));
    }
}
