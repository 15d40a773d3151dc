//! F-formulae, the atom/attribute vocabulary, and the natural-type mapping
//! from f-formulae to model-theoretic types.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{lex, Cursor, SyntaxError, Tok};

/// Interned-ish identifier; cheap to clone and share across threads.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    /// Carries a denotation (`e`, `t`).
    Contentful,
    /// Interpreted in the one-element domain (`NOM`, `ACC`, `SG`, ...).
    Impotent,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: Symbol,
    pub kind: AtomKind,
}

/// A grammatical-function attribute such as `SUBJ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attr(pub Symbol);

impl Attr {
    pub fn new(name: &str) -> Self {
        Attr(Symbol::new(name))
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The resource type of a single resource.
///
/// Equality is structural and is the only criterion used when an implication
/// is applied to an argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FFormula {
    Atom(Atom),
    Modal(Attr, Box<FFormula>),
    Implic(Box<FFormula>, Box<FFormula>),
}

impl FFormula {
    pub fn modal(attr: Attr, body: FFormula) -> Self {
        FFormula::Modal(attr, Box::new(body))
    }

    pub fn implic(antecedent: FFormula, consequent: FFormula) -> Self {
        FFormula::Implic(Box::new(antecedent), Box::new(consequent))
    }

    /// Wraps `body` in the attribute path, outermost first.
    pub fn under_path(path: &[Attr], body: FFormula) -> Self {
        path.iter()
            .rev()
            .fold(body, |acc, a| FFormula::modal(a.clone(), acc))
    }

    /// Splits off the maximal chain of leading modal operators.
    pub fn modal_prefix(&self) -> (Vec<&Attr>, &FFormula) {
        let mut prefix = Vec::new();
        let mut cur = self;
        while let FFormula::Modal(a, body) = cur {
            prefix.push(a);
            cur = body;
        }
        (prefix, cur)
    }

    /// If `path` is a prefix of this formula's modal chain, the remainder.
    pub fn strip_path(&self, path: &[Attr]) -> Option<&FFormula> {
        let mut cur = self;
        for attr in path {
            match cur {
                FFormula::Modal(a, body) if a == attr => cur = body,
                _ => return None,
            }
        }
        Some(cur)
    }

    /// Largest number of modal operators on any root-to-leaf path.
    pub fn modal_depth(&self) -> usize {
        match self {
            FFormula::Atom(_) => 0,
            FFormula::Modal(_, body) => 1 + body.modal_depth(),
            FFormula::Implic(a, b) => a.modal_depth().max(b.modal_depth()),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            FFormula::Atom(a) => out.push(a),
            FFormula::Modal(_, b) => b.collect_atoms(out),
            FFormula::Implic(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }
}

impl fmt::Display for FFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FFormula::Atom(a) => a.name.fmt(f),
            FFormula::Modal(attr, body) => match **body {
                FFormula::Implic(..) => write!(f, "{attr} ({body})"),
                _ => write!(f, "{attr} {body}"),
            },
            FFormula::Implic(a, b) => match **a {
                FFormula::Implic(..) => write!(f, "({a}) -o {b}"),
                _ => write!(f, "{a} -o {b}"),
            },
        }
    }
}

/// Model-theoretic types; `Unit` is the one-element type of impotent atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemanticType {
    Base(Symbol),
    Unit,
    Arrow(Box<SemanticType>, Box<SemanticType>),
}

impl SemanticType {
    pub fn base(name: &str) -> Self {
        SemanticType::Base(Symbol::new(name))
    }

    pub fn arrow(from: SemanticType, to: SemanticType) -> Self {
        SemanticType::Arrow(Box::new(from), Box::new(to))
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, SemanticType::Unit)
    }
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemanticType::Base(s) => s.fmt(f),
            SemanticType::Unit => f.write_str("∅"),
            SemanticType::Arrow(a, b) => match **a {
                SemanticType::Arrow(..) => write!(f, "({a}) -> {b}"),
                _ => write!(f, "{a} -> {b}"),
            },
        }
    }
}

/// The natural type of a formula: attributes erase, impotent atoms map to
/// `Unit`, and an implication from a `Unit` antecedent collapses to its
/// consequent.
pub fn natural_type(phi: &FFormula) -> SemanticType {
    match phi {
        FFormula::Atom(Atom {
            name,
            kind: AtomKind::Contentful,
        }) => SemanticType::Base(name.clone()),
        FFormula::Atom(Atom {
            kind: AtomKind::Impotent,
            ..
        }) => SemanticType::Unit,
        FFormula::Modal(_, body) => natural_type(body),
        FFormula::Implic(a, b) => {
            let from = natural_type(a);
            let to = natural_type(b);
            if from.is_unit() {
                to
            } else {
                SemanticType::arrow(from, to)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("`{0}` is declared twice")]
    Duplicate(String),
    #[error("`{0}` is not a valid atom or attribute name")]
    BadName(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
}

/// Declared atoms and attributes. Names share one namespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    atoms: BTreeMap<Symbol, AtomKind>,
    attrs: BTreeMap<Symbol, ()>,
    /// Declaration order, used when formatting a grammar back out.
    order: Vec<Symbol>,
}

pub(crate) fn valid_decl_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '-'))
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_fresh(&self, name: &str) -> Result<Symbol, VocabError> {
        if !valid_decl_name(name) {
            return Err(VocabError::BadName(name.to_string()));
        }
        if name == "opt" {
            return Err(VocabError::Reserved(name.to_string()));
        }
        let sym = Symbol::new(name);
        if self.atoms.contains_key(&sym) || self.attrs.contains_key(&sym) {
            return Err(VocabError::Duplicate(name.to_string()));
        }
        Ok(sym)
    }

    pub fn declare_atom(&mut self, name: &str, kind: AtomKind) -> Result<(), VocabError> {
        let sym = self.check_fresh(name)?;
        self.order.push(sym.clone());
        self.atoms.insert(sym, kind);
        Ok(())
    }

    pub fn declare_attr(&mut self, name: &str) -> Result<(), VocabError> {
        let sym = self.check_fresh(name)?;
        self.order.push(sym.clone());
        self.attrs.insert(sym, ());
        Ok(())
    }

    pub fn atom(&self, name: &str) -> Option<Atom> {
        self.atoms.get_key_value(name).map(|(name, &kind)| Atom {
            name: name.clone(),
            kind,
        })
    }

    pub fn attr(&self, name: &str) -> Option<Attr> {
        self.attrs.get_key_value(name).map(|(n, _)| Attr(n.clone()))
    }

    pub fn is_attr(&self, name: &str) -> bool {
        self.attrs.contains_key(name)
    }

    pub fn atoms_of(&self, kind: AtomKind) -> Vec<&Symbol> {
        self.order
            .iter()
            .filter(|s| self.atoms.get(*s) == Some(&kind))
            .collect()
    }

    pub fn attrs(&self) -> Vec<&Symbol> {
        self.order
            .iter()
            .filter(|s| self.attrs.contains_key(*s))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("undeclared identifier `{name}` at byte {offset}")]
    Undeclared { name: String, offset: usize },
}

impl FormulaError {
    pub fn offset(&self) -> usize {
        match self {
            FormulaError::Syntax(e) => e.offset,
            FormulaError::Undeclared { offset, .. } => *offset,
        }
    }

    pub(crate) fn shifted(self, by: usize) -> Self {
        match self {
            FormulaError::Syntax(e) => FormulaError::Syntax(e.shifted(by)),
            FormulaError::Undeclared { name, offset } => FormulaError::Undeclared {
                name,
                offset: offset + by,
            },
        }
    }
}

/// Parses `-o`-formulae: attributes prefix by juxtaposition and bind tighter
/// than `-o`, which associates to the right.
pub fn parse_formula(text: &str, vocab: &Vocab) -> Result<FFormula, FormulaError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let phi = formula(&mut cur, vocab)?;
    cur.expect_end()?;
    Ok(phi)
}

pub(crate) fn formula(cur: &mut Cursor<'_>, vocab: &Vocab) -> Result<FFormula, FormulaError> {
    let lhs = prefixed(cur, vocab)?;
    if cur.eat(&Tok::Lolli) {
        let rhs = formula(cur, vocab)?;
        Ok(FFormula::implic(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn prefixed(cur: &mut Cursor<'_>, vocab: &Vocab) -> Result<FFormula, FormulaError> {
    let offset = cur.offset();
    match cur.peek() {
        Some(Tok::LParen) => {
            cur.bump();
            let inner = formula(cur, vocab)?;
            cur.expect(&Tok::RParen)?;
            Ok(inner)
        }
        Some(Tok::Ident(name)) => {
            cur.bump();
            if let Some(attr) = vocab.attr(name) {
                let body = prefixed(cur, vocab)?;
                Ok(FFormula::modal(attr, body))
            } else if let Some(atom) = vocab.atom(name) {
                Ok(FFormula::Atom(atom))
            } else {
                Err(FormulaError::Undeclared {
                    name: name.clone(),
                    offset,
                })
            }
        }
        _ => Err(cur.unexpected("formula").into()),
    }
}

pub fn format_formula(phi: &FFormula) -> String {
    phi.to_string()
}


#[cfg(test)]
mod tests {
    use super::test_vocab::{f, vocab};
    use super::*;

    fn atom(name: &str) -> FFormula {
        FFormula::Atom(vocab().atom(name).unwrap())
    }

    #[test]
    fn natural_type_examples() {
        assert_eq!(natural_type(&f("NOM -o e")), SemanticType::base("e"));
        assert_eq!(natural_type(&f("e")), SemanticType::base("e"));
        let e = SemanticType::base("e");
        assert_eq!(
            natural_type(&f("OBJ e -o SUBJ e -o t")),
            SemanticType::arrow(e.clone(), SemanticType::arrow(e, SemanticType::base("t")))
        );
        assert_eq!(natural_type(&f("SUBJ NOM")), SemanticType::Unit);
        assert_eq!(natural_type(&f("e -o NOM")).to_string(), "e -> ∅");
    }

    #[test]
    fn parse_examples() {
        let subj = Attr::new("SUBJ");
        assert_eq!(
            f("SUBJ e -o t"),
            FFormula::implic(FFormula::modal(subj.clone(), atom("e")), atom("t"))
        );
        assert_eq!(f("e"), atom("e"));
        let grouped = f("XCOMP (SUBJ e -o t)");
        assert_eq!(
            grouped,
            FFormula::modal(
                Attr::new("XCOMP"),
                FFormula::implic(FFormula::modal(subj, atom("e")), atom("t"))
            )
        );
        assert_ne!(grouped, f("XCOMP SUBJ e -o t"));
        assert_eq!(f("e -o e -o t"), f("e -o (e -o t)"));
        assert_ne!(f("e -o e -o t"), f("(e -o e) -o t"));
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_formula(&f("NOM -o e")), "NOM -o e");
        assert_eq!(format_formula(&f("t")), "t");
        assert_eq!(
            format_formula(&f("XCOMP (SUBJ e -o t)")),
            "XCOMP (SUBJ e -o t)"
        );
        assert_eq!(format_formula(&f("(e -o t) -o t")), "(e -o t) -o t");
        assert_eq!(format_formula(&f("((SUBJ (e)))")), "SUBJ e");
    }

    #[test]
    fn parse_errors() {
        let v = vocab();
        match parse_formula("SUBJ x -o t", &v) {
            Err(FormulaError::Undeclared { name, offset }) => {
                assert_eq!(name, "x");
                assert_eq!(offset, 5);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_formula("e -o", &v).unwrap_err().offset(), 4);
        assert_eq!(parse_formula("(e", &v).unwrap_err().offset(), 2);
        assert_eq!(parse_formula("e t", &v).unwrap_err().offset(), 2);
        assert!(parse_formula("SUBJ", &v).is_err());
    }

    #[test]
    fn vocab_rejects_duplicates_and_bad_names() {
        let mut v = vocab();
        assert_eq!(
            v.declare_attr("e"),
            Err(VocabError::Duplicate("e".to_string()))
        );
        assert!(v.declare_atom("1x", AtomKind::Impotent).is_err());
        assert!(v.declare_atom("opt", AtomKind::Impotent).is_err());
        assert!(v.declare_atom("Case_2'", AtomKind::Impotent).is_ok());
    }

    #[test]
    fn prefix_helpers() {
        let phi = f("XCOMP OBJ (ACC -o e)");
        let (prefix, body) = phi.modal_prefix();
        assert_eq!(prefix.len(), 2);
        assert_eq!(*body, f("ACC -o e"));
        assert_eq!(
            phi.strip_path(&[Attr::new("XCOMP")]),
            Some(&f("OBJ (ACC -o e)"))
        );
        assert_eq!(phi.strip_path(&[Attr::new("OBJ")]), None);
        assert_eq!(phi.modal_depth(), 2);
        assert_eq!(
            FFormula::under_path(&[Attr::new("XCOMP"), Attr::new("SUBJ")], f("e")),
            f("XCOMP SUBJ e")
        );
    }
}
