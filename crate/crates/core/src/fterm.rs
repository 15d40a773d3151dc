//! F-terms and their normalization into flat resource states.
//!
//! Embeddings are folded into leading modal operators on leaf formulae,
//! nested multisets are flattened, and every optional element is expanded
//! into an absent and a present branch.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::formula::{self, Attr, FFormula, FormulaError, Vocab};
use crate::lambda::{self, Canon, LambdaTerm};
use crate::syntax::{lex, Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FTerm {
    Leaf {
        formula: FFormula,
        label: Option<LambdaTerm>,
    },
    Multiset(Vec<FTerm>),
    Embed(Attr, Box<FTerm>),
    PathEq {
        lhs: Vec<Attr>,
        rhs: Vec<Attr>,
    },
    Opt(Box<FTerm>),
    /// The ↓ metavariable of a rule template.
    Hole,
}

impl FTerm {
    pub fn leaf(formula: FFormula) -> Self {
        FTerm::Leaf {
            formula,
            label: None,
        }
    }

    pub fn labelled(label: LambdaTerm, formula: FFormula) -> Self {
        FTerm::Leaf {
            formula,
            label: Some(label),
        }
    }

    pub fn embed(attr: Attr, body: FTerm) -> Self {
        FTerm::Embed(attr, Box::new(body))
    }

    pub fn opt(body: FTerm) -> Self {
        FTerm::Opt(Box::new(body))
    }

    /// Replaces every hole with `filler`.
    pub fn fill_hole(&self, filler: &FTerm) -> FTerm {
        match self {
            FTerm::Hole => filler.clone(),
            FTerm::Leaf { .. } | FTerm::PathEq { .. } => self.clone(),
            FTerm::Multiset(items) => {
                FTerm::Multiset(items.iter().map(|i| i.fill_hole(filler)).collect())
            }
            FTerm::Embed(a, b) => FTerm::embed(a.clone(), b.fill_hole(filler)),
            FTerm::Opt(b) => FTerm::opt(b.fill_hole(filler)),
        }
    }

    pub fn count_holes(&self) -> usize {
        match self {
            FTerm::Hole => 1,
            FTerm::Leaf { .. } | FTerm::PathEq { .. } => 0,
            FTerm::Multiset(items) => items.iter().map(FTerm::count_holes).sum(),
            FTerm::Embed(_, b) | FTerm::Opt(b) => b.count_holes(),
        }
    }

    /// Leaves in document order, with the attribute path that embeds them.
    pub fn leaves(&self) -> Vec<(Vec<Attr>, &FFormula, Option<&LambdaTerm>)> {
        fn go<'a>(
            t: &'a FTerm,
            path: &mut Vec<Attr>,
            out: &mut Vec<(Vec<Attr>, &'a FFormula, Option<&'a LambdaTerm>)>,
        ) {
            match t {
                FTerm::Leaf { formula, label } => out.push((path.clone(), formula, label.as_ref())),
                FTerm::Multiset(items) => items.iter().for_each(|i| go(i, path, out)),
                FTerm::Embed(a, b) => {
                    path.push(a.clone());
                    go(b, path, out);
                    path.pop();
                }
                FTerm::Opt(b) => go(b, path, out),
                FTerm::PathEq { .. } | FTerm::Hole => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    fn fmt_list(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FTerm::Multiset(items) => {
                let mut first = true;
                for item in items {
                    if !first {
                        f.write_str(", ")?;
                    }
                    first = false;
                    item.fmt_list(f)?;
                }
                Ok(())
            }
            other => write!(f, "{other}"),
        }
    }
}

fn fmt_path(path: &[Attr], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, a) in path.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for FTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FTerm::Leaf {
                formula,
                label: Some(l),
            } => write!(f, "{l} : {formula}"),
            FTerm::Leaf {
                formula,
                label: None,
            } => write!(f, "{formula}"),
            FTerm::Multiset(_) => self.fmt_list(f),
            FTerm::Embed(a, body) if **body == FTerm::Hole => write!(f, "{a} $"),
            FTerm::Embed(a, body) => {
                write!(f, "{a}(")?;
                body.fmt_list(f)?;
                f.write_str(")")
            }
            FTerm::PathEq { lhs, rhs } => {
                fmt_path(lhs, f)?;
                f.write_str(" = ")?;
                fmt_path(rhs, f)
            }
            FTerm::Opt(body) => {
                f.write_str("opt(")?;
                body.fmt_list(f)?;
                f.write_str(")")
            }
            FTerm::Hole => f.write_str("$"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FTermError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("`{name}` at byte {offset} is not a declared attribute")]
    NotAnAttribute { name: String, offset: usize },
    #[error("path equation `{equation}` is embedded under `{path}`; equations must appear at clause level")]
    EmbeddedPathEq { equation: String, path: String },
    #[error("template hole `$` left unfilled")]
    UnfilledHole,
}

impl FTermError {
    pub(crate) fn shifted(self, by: usize) -> Self {
        match self {
            FTermError::Syntax(e) => FTermError::Syntax(e.shifted(by)),
            FTermError::Formula(e) => FTermError::Formula(e.shifted(by)),
            FTermError::NotAnAttribute { name, offset } => FTermError::NotAnAttribute {
                name,
                offset: offset + by,
            },
            other => other,
        }
    }
}

/// Parses a comma-separated f-term: `ATTR( ... )` or `ATTR item` embeds,
/// `opt( ... )` marks optional material, `F G = H` is a path equation,
/// `label : formula` a labelled leaf, a bare formula an unlabelled leaf and
/// `$` the template hole.
pub fn parse_fterm(text: &str, vocab: &Vocab) -> Result<FTerm, FTermError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let t = fterm_list(&mut cur, vocab)?;
    cur.expect_end()?;
    Ok(t)
}

pub(crate) fn fterm_list(cur: &mut Cursor<'_>, vocab: &Vocab) -> Result<FTerm, FTermError> {
    let mut items = Vec::new();
    loop {
        let n = cur.extent(&[Tok::Comma, Tok::Semi]);
        if n == 0 {
            return Err(cur.unexpected("f-term item").into());
        }
        let mut sub = cur.split(n);
        items.push(fterm_item(&mut sub, vocab)?);
        if !cur.eat(&Tok::Comma) && !cur.eat(&Tok::Semi) {
            break;
        }
    }
    Ok(if items.len() == 1 {
        items.pop().unwrap()
    } else {
        FTerm::Multiset(items)
    })
}

/// If the cursor holds exactly `( ... )`, a sub-cursor over the inside.
fn paren_group<'a>(cur: &Cursor<'a>) -> Option<Cursor<'a>> {
    let toks = cur.remaining();
    if toks.first().map(|t| &t.tok) != Some(&Tok::LParen) {
        return None;
    }
    let mut depth = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::LParen | Tok::LBrack => depth += 1,
            Tok::RParen | Tok::RBrack => {
                depth -= 1;
                if depth == 0 {
                    return (i + 1 == toks.len()).then(|| Cursor::new(&toks[1..i], t.offset));
                }
            }
            _ => {}
        }
    }
    None
}

fn attr_path(cur: &mut Cursor<'_>, vocab: &Vocab) -> Result<Vec<Attr>, FTermError> {
    let mut path = Vec::new();
    while !cur.at_end() {
        let offset = cur.offset();
        let name = cur.expect_ident()?;
        match vocab.attr(name) {
            Some(a) => path.push(a),
            None => {
                return Err(FTermError::NotAnAttribute {
                    name: name.to_string(),
                    offset,
                })
            }
        }
    }
    Ok(path)
}

fn contains_structure(cur: &Cursor<'_>) -> bool {
    cur.remaining().iter().any(|t| match &t.tok {
        Tok::Hole | Tok::Comma | Tok::Colon => true,
        Tok::Ident(s) => s == "opt",
        _ => false,
    })
}

fn fterm_item(cur: &mut Cursor<'_>, vocab: &Vocab) -> Result<FTerm, FTermError> {
    if let Some(eq) = cur.find_top_level(|t| *t == Tok::Eq) {
        let mut lhs = cur.split(eq);
        cur.bump();
        let lhs = attr_path(&mut lhs, vocab)?;
        let rhs = attr_path(cur, vocab)?;
        return Ok(FTerm::PathEq { lhs, rhs });
    }
    match (cur.peek(), cur.peek_at(1)) {
        (Some(Tok::Hole), None) => {
            cur.bump();
            return Ok(FTerm::Hole);
        }
        (Some(Tok::Ident(kw)), Some(Tok::LParen)) if kw == "opt" => {
            cur.bump();
            let Some(mut inner) = paren_group(cur) else {
                return Err(cur.unexpected("`opt( ... )`").into());
            };
            let body = fterm_list(&mut inner, vocab)?;
            inner.expect_end()?;
            cur.skip_rest();
            return Ok(FTerm::opt(body));
        }
        _ => {}
    }
    let top_colon = cur.find_top_level(|t| *t == Tok::Colon);
    let leading_attr = match cur.peek() {
        Some(Tok::Ident(name)) if cur.peek_at(1).is_some() => vocab.attr(name),
        _ => None,
    };
    if let Some(attr) = leading_attr {
        if top_colon.is_some() || contains_structure(cur) {
            cur.bump();
            if let Some(mut inner) = paren_group(cur) {
                let body = fterm_list(&mut inner, vocab)?;
                inner.expect_end()?;
                cur.skip_rest();
                return Ok(FTerm::embed(attr, body));
            }
            let body = fterm_item(cur, vocab)?;
            return Ok(FTerm::embed(attr, body));
        }
    }
    if let Some(colon) = top_colon {
        let mut lam = cur.split(colon);
        cur.bump();
        let label = lambda::term(&mut lam, &mut Vec::new())?;
        lam.expect_end()?;
        let phi = formula::formula(cur, vocab)?;
        cur.expect_end()?;
        return Ok(FTerm::labelled(label, phi));
    }
    if contains_structure(cur) {
        if let Some(mut inner) = paren_group(cur) {
            let body = fterm_list(&mut inner, vocab)?;
            inner.expect_end()?;
            cur.skip_rest();
            return Ok(body);
        }
    }
    let phi = formula::formula(cur, vocab)?;
    cur.expect_end()?;
    Ok(FTerm::leaf(phi))
}

// ---------------------------------------------------------------------------
// Normal states

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    pub id: usize,
    pub formula: FFormula,
    pub label: Option<LambdaTerm>,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(l) => write!(f, "{l} : {}", self.formula),
            None => write!(f, "{}", self.formula),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Uses {
    Bounded(u32),
    Unbounded,
}

impl Uses {
    pub fn available(self) -> bool {
        self != Uses::Bounded(0)
    }

    pub fn consume(self) -> Uses {
        match self {
            Uses::Bounded(n) => Uses::Bounded(n.saturating_sub(1)),
            Uses::Unbounded => Uses::Unbounded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub id: usize,
    pub lhs: Vec<Attr>,
    pub rhs: Vec<Attr>,
    pub uses: Uses,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_path(&self.lhs, f)?;
        f.write_str(" = ")?;
        fmt_path(&self.rhs, f)
    }
}

/// A fully flattened resource configuration. Resource and equation ids
/// share one numbering.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalState {
    pub resources: Vec<Resource>,
    pub equations: Vec<Equation>,
    /// Lower bound for fresh ids, so consumed ids are never reissued.
    pub(crate) fresh: usize,
}

pub type StateKey = (
    Vec<(FFormula, Option<Canon>)>,
    Vec<(Vec<Attr>, Vec<Attr>, Uses)>,
);

impl NormalState {
    /// Builds a state from formula/label pairs and equations, numbering them
    /// in order.
    pub fn new(
        resources: impl IntoIterator<Item = (FFormula, Option<LambdaTerm>)>,
        equations: impl IntoIterator<Item = (Vec<Attr>, Vec<Attr>)>,
    ) -> Self {
        let mut state = NormalState::default();
        for (formula, label) in resources {
            let id = state.take_id();
            state.resources.push(Resource { id, formula, label });
        }
        for (lhs, rhs) in equations {
            let id = state.take_id();
            state.equations.push(Equation {
                id,
                lhs,
                rhs,
                uses: Uses::Bounded(1),
            });
        }
        state
    }

    pub fn next_id(&self) -> usize {
        self.resources
            .iter()
            .map(|r| r.id)
            .chain(self.equations.iter().map(|e| e.id))
            .max()
            .map_or(0, |m| m + 1)
            .max(self.fresh)
    }

    /// Reserves and returns a fresh id.
    pub fn take_id(&mut self) -> usize {
        let id = self.next_id();
        self.fresh = id + 1;
        id
    }

    pub fn resource(&self, id: usize) -> Option<&Resource> {
        self.resources.iter().find(|r| r.id == id)
    }

    pub fn equation(&self, id: usize) -> Option<&Equation> {
        self.equations.iter().find(|e| e.id == id)
    }

    pub fn with_unbounded_equations(mut self) -> Self {
        for eq in &mut self.equations {
            eq.uses = Uses::Unbounded;
        }
        self
    }

    /// Order- and id-insensitive identity of the state.
    pub fn key(&self) -> StateKey {
        let mut res: Vec<_> = self
            .resources
            .iter()
            .map(|r| {
                (
                    r.formula.clone(),
                    r.label.as_ref().map(LambdaTerm::canonical),
                )
            })
            .collect();
        res.sort();
        let mut eqs: Vec<_> = self
            .equations
            .iter()
            .map(|e| (e.lhs.clone(), e.rhs.clone(), e.uses))
            .collect();
        eqs.sort();
        (res, eqs)
    }

    /// The state as a flat f-term.
    pub fn to_fterm(&self) -> FTerm {
        let mut items: Vec<FTerm> = self
            .resources
            .iter()
            .map(|r| FTerm::Leaf {
                formula: r.formula.clone(),
                label: r.label.clone(),
            })
            .collect();
        items.extend(self.equations.iter().map(|e| FTerm::PathEq {
            lhs: e.lhs.clone(),
            rhs: e.rhs.clone(),
        }));
        FTerm::Multiset(items)
    }
}

impl fmt::Display for NormalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{ ")?;
        let mut first = true;
        for r in &self.resources {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            write!(f, "{r}")?;
        }
        for e in &self.equations {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            write!(f, "{e}")?;
        }
        f.write_str(" }")
    }
}

enum Item {
    Res(FFormula, Option<LambdaTerm>),
    Eq(Vec<Attr>, Vec<Attr>),
}

fn branches(t: &FTerm, path: &mut Vec<Attr>) -> Result<Vec<Vec<Item>>, FTermError> {
    Ok(match t {
        FTerm::Leaf { formula, label } => vec![vec![Item::Res(
            FFormula::under_path(path, formula.clone()),
            label.clone(),
        )]],
        FTerm::Multiset(children) => {
            let mut acc: Vec<Vec<Item>> = vec![Vec::new()];
            for child in children {
                let child_branches = branches(child, path)?;
                let mut next = Vec::with_capacity(acc.len() * child_branches.len());
                for prefix in &acc {
                    for b in &child_branches {
                        next.push(prefix.iter().chain(b).map(Item::clone_item).collect());
                    }
                }
                acc = next;
            }
            acc
        }
        FTerm::Embed(attr, body) => {
            path.push(attr.clone());
            let out = branches(body, path);
            path.pop();
            out?
        }
        FTerm::PathEq { lhs, rhs } => {
            if !path.is_empty() {
                return Err(FTermError::EmbeddedPathEq {
                    equation: t.to_string(),
                    path: path
                        .iter()
                        .map(Attr::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                });
            }
            vec![vec![Item::Eq(lhs.clone(), rhs.clone())]]
        }
        FTerm::Opt(body) => {
            let mut out = vec![Vec::new()];
            out.extend(branches(body, path)?);
            out
        }
        FTerm::Hole => return Err(FTermError::UnfilledHole),
    })
}

impl Item {
    fn clone_item(&self) -> Item {
        match self {
            Item::Res(f, l) => Item::Res(f.clone(), l.clone()),
            Item::Eq(a, b) => Item::Eq(a.clone(), b.clone()),
        }
    }
}

/// Flattens `t` into one normal state per resolution of its optional
/// elements, absent before present, earlier optionals varying slowest.
pub fn normalize(t: &FTerm) -> Result<Vec<NormalState>, FTermError> {
    Ok(branches(t, &mut Vec::new())?
        .into_iter()
        .map(|items| {
            let mut res = Vec::new();
            let mut eqs = Vec::new();
            for item in items {
                match item {
                    Item::Res(f, l) => res.push((f, l)),
                    Item::Eq(a, b) => eqs.push((a, b)),
                }
            }
            NormalState::new(res, eqs)
        })
        .collect())
}

/// Whether two f-terms denote the same set of normal states, i.e. are
/// related by distributing and factoring attributes over multisets.
pub fn distribute_factor_equal(t1: &FTerm, t2: &FTerm) -> bool {
    let keys = |t: &FTerm| -> Option<BTreeSet<StateKey>> {
        normalize(t)
            .ok()
            .map(|states| states.iter().map(NormalState::key).collect())
    };
    match (keys(t1), keys(t2)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    }
}
