//! λ-terms used as Curry-Howard labels on resources.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{natural_type, FFormula, SemanticType, Symbol};
use crate::syntax::{lex, Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LambdaTerm {
    Var(Symbol),
    Const(Symbol),
    Abs(Symbol, Box<LambdaTerm>),
    App(Box<LambdaTerm>, Box<LambdaTerm>),
}

/// Nameless form: bound variables become de Bruijn indices. Two terms are
/// α-equivalent iff their canonical forms are equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Canon {
    Bound(u32),
    Free(Symbol),
    Const(Symbol),
    Abs(Box<Canon>),
    App(Box<Canon>, Box<Canon>),
}

impl LambdaTerm {
    pub fn var(name: &str) -> Self {
        LambdaTerm::Var(Symbol::new(name))
    }

    pub fn constant(name: &str) -> Self {
        LambdaTerm::Const(Symbol::new(name))
    }

    pub fn abs(var: &str, body: LambdaTerm) -> Self {
        LambdaTerm::Abs(Symbol::new(var), Box::new(body))
    }

    pub fn app(fun: LambdaTerm, arg: LambdaTerm) -> Self {
        LambdaTerm::App(Box::new(fun), Box::new(arg))
    }

    /// `head a1 ... an`, curried.
    pub fn apply_all(head: LambdaTerm, args: impl IntoIterator<Item = LambdaTerm>) -> Self {
        args.into_iter().fold(head, LambdaTerm::app)
    }

    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
        match self {
            LambdaTerm::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            LambdaTerm::Const(_) => {}
            LambdaTerm::Abs(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            LambdaTerm::App(f, a) => {
                f.collect_free(bound, out);
                a.collect_free(bound, out);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit_consts(&mut |c| {
            out.insert(c.clone());
        });
        out
    }

    fn visit_consts(&self, f: &mut impl FnMut(&Symbol)) {
        match self {
            LambdaTerm::Var(_) => {}
            LambdaTerm::Const(c) => f(c),
            LambdaTerm::Abs(_, b) => b.visit_consts(f),
            LambdaTerm::App(a, b) => {
                a.visit_consts(f);
                b.visit_consts(f);
            }
        }
    }

    /// Renames constants through `rename`; variables are untouched.
    pub fn map_constants(&self, rename: &impl Fn(&Symbol) -> Symbol) -> LambdaTerm {
        match self {
            LambdaTerm::Var(_) => self.clone(),
            LambdaTerm::Const(c) => LambdaTerm::Const(rename(c)),
            LambdaTerm::Abs(x, b) => LambdaTerm::Abs(x.clone(), Box::new(b.map_constants(rename))),
            LambdaTerm::App(a, b) => {
                LambdaTerm::app(a.map_constants(rename), b.map_constants(rename))
            }
        }
    }

    pub fn canonical(&self) -> Canon {
        fn go(t: &LambdaTerm, scope: &mut Vec<Symbol>) -> Canon {
            match t {
                LambdaTerm::Var(x) => match scope.iter().rev().position(|s| s == x) {
                    Some(i) => Canon::Bound(i as u32),
                    None => Canon::Free(x.clone()),
                },
                LambdaTerm::Const(c) => Canon::Const(c.clone()),
                LambdaTerm::Abs(x, body) => {
                    scope.push(x.clone());
                    let b = go(body, scope);
                    scope.pop();
                    Canon::Abs(Box::new(b))
                }
                LambdaTerm::App(f, a) => Canon::App(Box::new(go(f, scope)), Box::new(go(a, scope))),
            }
        }
        go(self, &mut Vec::new())
    }

    /// Spine decomposition `head a1 ... an`.
    pub fn spine(&self) -> (&LambdaTerm, Vec<&LambdaTerm>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let LambdaTerm::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    pub fn is_beta_normal(&self) -> bool {
        match self {
            LambdaTerm::Var(_) | LambdaTerm::Const(_) => true,
            LambdaTerm::Abs(_, b) => b.is_beta_normal(),
            LambdaTerm::App(f, a) => {
                !matches!(**f, LambdaTerm::Abs(..)) && f.is_beta_normal() && a.is_beta_normal()
            }
        }
    }

    /// Curried display without the `c(x,y)` sugar.
    pub fn raw(&self) -> RawLambda<'_> {
        RawLambda(self)
    }
}

pub fn alpha_equal(m1: &LambdaTerm, m2: &LambdaTerm) -> bool {
    m1.canonical() == m2.canonical()
}

fn fresh_name(base: &Symbol, avoid: &BTreeSet<Symbol>) -> Symbol {
    let mut name = format!("{base}'");
    while avoid.contains(name.as_str()) {
        name.push('\'');
    }
    Symbol::new(&name)
}

/// Capture-avoiding `body[x := value]`.
pub fn substitute(body: &LambdaTerm, x: &Symbol, value: &LambdaTerm) -> LambdaTerm {
    let fv = value.free_vars();
    subst(body, x, value, &fv)
}

fn subst(body: &LambdaTerm, x: &Symbol, value: &LambdaTerm, fv: &BTreeSet<Symbol>) -> LambdaTerm {
    match body {
        LambdaTerm::Var(y) if y == x => value.clone(),
        LambdaTerm::Var(_) | LambdaTerm::Const(_) => body.clone(),
        LambdaTerm::App(f, a) => LambdaTerm::app(subst(f, x, value, fv), subst(a, x, value, fv)),
        LambdaTerm::Abs(y, _) if y == x => body.clone(),
        LambdaTerm::Abs(y, inner) => {
            if fv.contains(y) && inner.free_vars().contains(x) {
                let mut avoid = fv.clone();
                avoid.extend(inner.free_vars());
                avoid.insert(x.clone());
                let y2 = fresh_name(y, &avoid);
                let renamed = subst(
                    inner,
                    y,
                    &LambdaTerm::Var(y2.clone()),
                    &BTreeSet::from([y2.clone()]),
                );
                LambdaTerm::Abs(y2, Box::new(subst(&renamed, x, value, fv)))
            } else {
                LambdaTerm::Abs(y.clone(), Box::new(subst(inner, x, value, fv)))
            }
        }
    }
}

/// β-normal form by normal-order reduction. Terminates on simply typed
/// terms; untyped input may diverge.
pub fn beta_normalize(m: &LambdaTerm) -> LambdaTerm {
    match m {
        LambdaTerm::Var(_) | LambdaTerm::Const(_) => m.clone(),
        LambdaTerm::Abs(x, body) => LambdaTerm::Abs(x.clone(), Box::new(beta_normalize(body))),
        LambdaTerm::App(f, a) => match beta_normalize(f) {
            LambdaTerm::Abs(x, body) => beta_normalize(&substitute(&body, &x, a)),
            f2 => LambdaTerm::app(f2, beta_normalize(a)),
        },
    }
}

impl fmt::Display for LambdaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaTerm::Var(x) | LambdaTerm::Const(x) => x.fmt(f),
            LambdaTerm::Abs(x, body) => write!(f, "\\{x}. {body}"),
            LambdaTerm::App(..) => {
                let (head, args) = self.spine();
                if let LambdaTerm::Const(c) = head {
                    write!(f, "{c}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        a.fmt(f)?;
                    }
                    f.write_str(")")
                } else {
                    match head {
                        LambdaTerm::Abs(..) => write!(f, "({head})")?,
                        _ => write!(f, "{head}")?,
                    }
                    for a in args {
                        let atomic = match a {
                            LambdaTerm::Abs(..) => false,
                            LambdaTerm::App(..) => matches!(a.spine().0, LambdaTerm::Const(_)),
                            _ => true,
                        };
                        if atomic {
                            write!(f, " {a}")?;
                        } else {
                            write!(f, " ({a})")?;
                        }
                    }
                    Ok(())
                }
            }
        }
    }
}

pub struct RawLambda<'a>(&'a LambdaTerm);

impl fmt::Display for RawLambda<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            LambdaTerm::Var(x) | LambdaTerm::Const(x) => x.fmt(f),
            LambdaTerm::Abs(x, body) => write!(f, "\\{x}. {}", body.raw()),
            LambdaTerm::App(fun, arg) => {
                match **fun {
                    LambdaTerm::Abs(..) => write!(f, "({})", fun.raw())?,
                    _ => write!(f, "{}", fun.raw())?,
                }
                match **arg {
                    LambdaTerm::Abs(..) | LambdaTerm::App(..) => write!(f, " ({})", arg.raw()),
                    _ => write!(f, " {}", arg.raw()),
                }
            }
        }
    }
}

/// Parses `\x. M`, left-associative application, and `c(M1,...,Mk)` sugar.
/// Identifiers bound by an enclosing λ are variables; all others are
/// constants.
pub fn parse_lambda(text: &str) -> Result<LambdaTerm, SyntaxError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let t = term(&mut cur, &mut Vec::new())?;
    cur.expect_end()?;
    Ok(t)
}

pub(crate) fn term(
    cur: &mut Cursor<'_>,
    bound: &mut Vec<Symbol>,
) -> Result<LambdaTerm, SyntaxError> {
    if cur.eat(&Tok::Lambda) {
        let mut vars = Vec::new();
        while let Some(Tok::Ident(x)) = cur.peek() {
            cur.bump();
            vars.push(Symbol::new(x));
        }
        if vars.is_empty() {
            return Err(cur.unexpected("bound variable"));
        }
        cur.expect(&Tok::Dot)?;
        let n = vars.len();
        bound.extend(vars.iter().cloned());
        let body = term(cur, bound);
        bound.truncate(bound.len() - n);
        let body = body?;
        return Ok(vars
            .into_iter()
            .rev()
            .fold(body, |acc, x| LambdaTerm::Abs(x, Box::new(acc))));
    }
    let mut t = atom(cur, bound)?;
    loop {
        match cur.peek() {
            Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                let a = atom(cur, bound)?;
                t = LambdaTerm::app(t, a);
            }
            Some(Tok::Lambda) => {
                let a = term(cur, bound)?;
                return Ok(LambdaTerm::app(t, a));
            }
            _ => return Ok(t),
        }
    }
}

fn atom(cur: &mut Cursor<'_>, bound: &mut Vec<Symbol>) -> Result<LambdaTerm, SyntaxError> {
    match cur.peek() {
        Some(Tok::LParen) => {
            cur.bump();
            let t = term(cur, bound)?;
            cur.expect(&Tok::RParen)?;
            Ok(t)
        }
        Some(Tok::Ident(name)) => {
            let end = cur.offset() + name.len();
            cur.bump();
            let sym = Symbol::new(name);
            let head = if bound.contains(&sym) {
                LambdaTerm::Var(sym)
            } else {
                LambdaTerm::Const(sym)
            };
            // `f(a,b)` only when the parenthesis touches the name
            if cur.peek() == Some(&Tok::LParen) && cur.offset() == end {
                cur.bump();
                let mut args = vec![term(cur, bound)?];
                while cur.eat(&Tok::Comma) {
                    args.push(term(cur, bound)?);
                }
                cur.expect(&Tok::RParen)?;
                Ok(LambdaTerm::apply_all(head, args))
            } else {
                Ok(head)
            }
        }
        _ => Err(cur.unexpected("λ-term")),
    }
}

// ---------------------------------------------------------------------------
// Simple types

/// Constant name to type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    consts: BTreeMap<Symbol, SemanticType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("free variable `{0}`")]
    UnboundVariable(String),
    #[error("constant `{0}` has no type")]
    UnknownConstant(String),
    #[error("ill-typed application `{application}`: function has type {fun_type}, argument has type {arg_type}")]
    Application {
        application: String,
        fun_type: String,
        arg_type: String,
    },
    #[error("`{term}` has type {found} but {expected} is required")]
    Mismatch {
        term: String,
        expected: SemanticType,
        found: String,
    },
    #[error("type of `{0}` is not determined")]
    Ambiguous(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Base(Symbol),
    Unit,
    Arrow(Box<Ty>, Box<Ty>),
    Var(usize),
}

impl Ty {
    fn from_semantic(t: &SemanticType) -> Ty {
        match t {
            SemanticType::Base(s) => Ty::Base(s.clone()),
            SemanticType::Unit => Ty::Unit,
            SemanticType::Arrow(a, b) => Ty::Arrow(
                Box::new(Ty::from_semantic(a)),
                Box::new(Ty::from_semantic(b)),
            ),
        }
    }
}

#[derive(Default, Clone)]
struct Unifier {
    bindings: Vec<Option<Ty>>,
}

impl Unifier {
    fn fresh(&mut self) -> Ty {
        self.bindings.push(None);
        Ty::Var(self.bindings.len() - 1)
    }

    fn shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Var(v) = t {
            match &self.bindings[v] {
                Some(b) => t = b.clone(),
                None => break,
            }
        }
        t
    }

    fn resolve(&self, t: &Ty) -> Ty {
        match self.shallow(t) {
            Ty::Arrow(a, b) => Ty::Arrow(Box::new(self.resolve(&a)), Box::new(self.resolve(&b))),
            other => other,
        }
    }

    fn to_semantic(&self, t: &Ty) -> Option<SemanticType> {
        match self.resolve(t) {
            Ty::Base(s) => Some(SemanticType::Base(s)),
            Ty::Unit => Some(SemanticType::Unit),
            Ty::Arrow(a, b) => Some(SemanticType::arrow(
                self.to_semantic(&a)?,
                self.to_semantic(&b)?,
            )),
            Ty::Var(_) => None,
        }
    }

    fn occurs(&self, v: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Var(w) => v == w,
            Ty::Arrow(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            _ => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (a, b) {
            (Ty::Var(v), Ty::Var(w)) if v == w => true,
            (Ty::Var(v), t) | (t, Ty::Var(v)) => {
                if self.occurs(v, &t) {
                    return false;
                }
                self.bindings[v] = Some(t);
                true
            }
            (Ty::Base(x), Ty::Base(y)) => x == y,
            (Ty::Unit, Ty::Unit) => true,
            (Ty::Arrow(a1, b1), Ty::Arrow(a2, b2)) => self.unify(&a1, &a2) && self.unify(&b1, &b2),
            _ => false,
        }
    }

    fn show(&self, t: &Ty) -> String {
        fn go(u: &Unifier, t: &Ty, out: &mut String) {
            match u.shallow(t) {
                Ty::Base(s) => out.push_str(s.as_str()),
                Ty::Unit => out.push('∅'),
                Ty::Var(v) => out.push_str(&format!("?{v}")),
                Ty::Arrow(a, b) => {
                    let paren = matches!(u.shallow(&a), Ty::Arrow(..));
                    if paren {
                        out.push('(');
                    }
                    go(u, &a, out);
                    if paren {
                        out.push(')');
                    }
                    out.push_str(" -> ");
                    go(u, &b, out);
                }
            }
        }
        let mut s = String::new();
        go(self, t, &mut s);
        s
    }
}

struct Inference<'a> {
    env: &'a TypeEnv,
    unifier: Unifier,
    /// Types assumed for constants missing from `env` (only when learning).
    learned: Option<BTreeMap<Symbol, Ty>>,
}

impl Inference<'_> {
    fn infer(&mut self, m: &LambdaTerm, ctx: &mut Vec<(Symbol, Ty)>) -> Result<Ty, TypeError> {
        match m {
            LambdaTerm::Var(x) => ctx
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| TypeError::UnboundVariable(x.to_string())),
            LambdaTerm::Const(c) => {
                if let Some(t) = self.env.consts.get(c) {
                    return Ok(Ty::from_semantic(t));
                }
                match &mut self.learned {
                    Some(learned) => {
                        if let Some(t) = learned.get(c) {
                            return Ok(t.clone());
                        }
                        let t = self.unifier.fresh();
                        learned.insert(c.clone(), t.clone());
                        Ok(t)
                    }
                    None => Err(TypeError::UnknownConstant(c.to_string())),
                }
            }
            LambdaTerm::Abs(x, body) => {
                let arg = self.unifier.fresh();
                ctx.push((x.clone(), arg.clone()));
                let body_ty = self.infer(body, ctx);
                ctx.pop();
                Ok(Ty::Arrow(Box::new(arg), Box::new(body_ty?)))
            }
            LambdaTerm::App(f, a) => {
                let tf = self.infer(f, ctx)?;
                let ta = self.infer(a, ctx)?;
                let result = self.unifier.fresh();
                let want = Ty::Arrow(Box::new(ta.clone()), Box::new(result.clone()));
                if self.unifier.unify(&tf, &want) {
                    Ok(result)
                } else {
                    Err(TypeError::Application {
                        application: m.to_string(),
                        fun_type: self.unifier.show(&tf),
                        arg_type: self.unifier.show(&ta),
                    })
                }
            }
        }
    }
}

impl TypeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, ty: SemanticType) {
        self.consts.insert(Symbol::new(name), ty);
    }

    pub fn get(&self, name: &str) -> Option<&SemanticType> {
        self.consts.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &SemanticType)> {
        self.consts.iter()
    }

    pub fn len(&self) -> usize {
        self.consts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.consts.is_empty()
    }

    /// Checks `m : expected`, assigning types to constants not yet in the
    /// environment. Nothing is recorded when the check fails.
    pub fn learn(&mut self, m: &LambdaTerm, expected: &SemanticType) -> Result<(), TypeError> {
        let mut inf = Inference {
            env: self,
            unifier: Unifier::default(),
            learned: Some(BTreeMap::new()),
        };
        let found = inf.infer(m, &mut Vec::new())?;
        let want = Ty::from_semantic(expected);
        if !inf.unifier.unify(&found, &want) {
            return Err(TypeError::Mismatch {
                term: m.to_string(),
                expected: expected.clone(),
                found: inf.unifier.show(&found),
            });
        }
        let mut fresh = BTreeMap::new();
        for (c, t) in inf.learned.take().unwrap_or_default() {
            let ty = inf
                .unifier
                .to_semantic(&t)
                .ok_or_else(|| TypeError::Ambiguous(c.to_string()))?;
            fresh.insert(c, ty);
        }
        self.consts.extend(fresh);
        Ok(())
    }
}

/// Infers the simple type of `m`. Constants are typed by `env`.
pub fn type_of(m: &LambdaTerm, env: &TypeEnv) -> Result<SemanticType, TypeError> {
    let mut inf = Inference {
        env,
        unifier: Unifier::default(),
        learned: None,
    };
    let t = inf.infer(m, &mut Vec::new())?;
    inf.unifier
        .to_semantic(&t)
        .ok_or_else(|| TypeError::Ambiguous(m.to_string()))
}

/// Checks `m` against `expected`; unlike [`type_of`] this accepts terms whose
/// principal type is more general, such as `\x. x`.
pub fn check_type(m: &LambdaTerm, env: &TypeEnv, expected: &SemanticType) -> Result<(), TypeError> {
    let mut inf = Inference {
        env,
        unifier: Unifier::default(),
        learned: None,
    };
    let t = inf.infer(m, &mut Vec::new())?;
    if inf.unifier.unify(&t, &Ty::from_semantic(expected)) {
        Ok(())
    } else {
        Err(TypeError::Mismatch {
            term: m.to_string(),
            expected: expected.clone(),
            found: inf.unifier.show(&t),
        })
    }
}

// ---------------------------------------------------------------------------
// Labels

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("`{formula}` is semantically impotent and must not carry a label")]
    LabelOnImpotent { formula: String },
    #[error("`{formula}` is semantically contentful and needs a label")]
    MissingLabel { formula: String },
    #[error("`{0}` is not an implication")]
    NotImplication(String),
}

/// The labelling rule: a label is present iff the formula's natural type is
/// not `Unit`.
pub fn check_label_presence(
    formula: &FFormula,
    label: Option<&LambdaTerm>,
) -> Result<(), LabelError> {
    match (natural_type(formula).is_unit(), label.is_some()) {
        (true, true) => Err(LabelError::LabelOnImpotent {
            formula: formula.to_string(),
        }),
        (false, false) => Err(LabelError::MissingLabel {
            formula: formula.to_string(),
        }),
        _ => Ok(()),
    }
}

/// Label of the result of applying a resource of type `fun_type` to an
/// argument. An impotent argument is consumed without touching the label,
/// and an impotent consequent drops it.
/// Only label presence is inspected, never label contents.
pub fn label_apply(
    fun_label: Option<&LambdaTerm>,
    fun_type: &FFormula,
    arg_label: Option<&LambdaTerm>,
) -> Result<Option<LambdaTerm>, LabelError> {
    let FFormula::Implic(antecedent, consequent) = fun_type else {
        return Err(LabelError::NotImplication(fun_type.to_string()));
    };
    check_label_presence(fun_type, fun_label)?;
    check_label_presence(antecedent, arg_label)?;
    if natural_type(consequent).is_unit() {
        return Ok(None);
    }
    let result = match (fun_label, arg_label) {
        (_, None) => fun_label.cloned(),
        (Some(f), Some(a)) => Some(beta_normalize(&LambdaTerm::app(f.clone(), a.clone()))),
        (None, Some(_)) => unreachable!("contentful antecedent implies contentful implication"),
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::test_vocab::f;

    fn p(s: &str) -> LambdaTerm {
        parse_lambda(s).unwrap()
    }

    fn env() -> TypeEnv {
        let e = SemanticType::base("e");
        let t = SemanticType::base("t");
        let mut env = TypeEnv::new();
        for c in ["Sandy", "Kim", "boy", "girl"] {
            env.insert(c, e.clone());
        }
        env.insert("snores", SemanticType::arrow(e.clone(), t.clone()));
        env.insert("happy", SemanticType::arrow(e.clone(), t.clone()));
        env.insert("seems", SemanticType::arrow(t.clone(), t.clone()));
        env.insert(
            "likes",
            SemanticType::arrow(e.clone(), SemanticType::arrow(e.clone(), t.clone())),
        );
        env
    }

    #[test]
    fn parse_and_print() {
        let t = p("\\y. \\x. likes(x,y)");
        assert_eq!(
            t,
            LambdaTerm::abs(
                "y",
                LambdaTerm::abs(
                    "x",
                    LambdaTerm::apply_all(
                        LambdaTerm::constant("likes"),
                        [LambdaTerm::var("x"), LambdaTerm::var("y")]
                    )
                )
            )
        );
        assert_eq!(t.to_string(), "\\y. \\x. likes(x,y)");
        assert_eq!(t.raw().to_string(), "\\y. \\x. likes x y");
        assert_eq!(p("\\y x. likes(x,y)"), t);
        assert_eq!(p("λx.snores(x)").to_string(), "\\x. snores(x)");
        assert_eq!(p("Sandy'"), LambdaTerm::constant("Sandy'"));
        assert_eq!(p("(\\x. x) Kim").to_string(), "(\\x. x) Kim");
        assert_eq!(
            p("\\P. P (f(x)) (\\y. y)").to_string(),
            "\\P. P f(x) (\\y. y)"
        );
        assert_eq!(p("seems(happy(Sandy))"), p("seems (happy Sandy)"));
        let abc = LambdaTerm::apply_all(
            LambdaTerm::constant("f"),
            ["a", "b", "c"].map(LambdaTerm::constant),
        );
        assert_eq!(p("f a (b) c"), abc);
        assert_eq!(p("f a b(c)").to_string(), "f(a,b(c))");
        assert!(parse_lambda("\\. x").is_err());
        assert!(parse_lambda("f(x").is_err());
    }

    #[test]
    fn beta_examples() {
        assert_eq!(
            beta_normalize(&p("(\\x. snores(x)) Sandy")),
            p("snores(Sandy)")
        );
        assert_eq!(beta_normalize(&p("(\\x. x) Kim")), p("Kim"));
        let reading = beta_normalize(&p("(\\y. \\x. likes(x,y)) Kim Sandy"));
        assert_eq!(reading, p("likes(Sandy,Kim)"));
        assert_eq!(reading.to_string(), "likes(Sandy,Kim)");
    }

    #[test]
    fn substitution_avoids_capture() {
        // (\x. \y. x) y  ~>  \y'. y   (free y must stay free)
        let t = LambdaTerm::app(p("\\x. \\y. x"), LambdaTerm::var("y"));
        let n = beta_normalize(&t);
        assert!(alpha_equal(&n, &LambdaTerm::abs("z", LambdaTerm::var("y"))));
        assert!(n.free_vars().contains("y"));
        // (\x. \y. y x) y  ~> \y'. y' y
        let t = LambdaTerm::app(p("\\x. \\y. y x"), LambdaTerm::var("y"));
        let expect = LambdaTerm::abs(
            "z",
            LambdaTerm::app(LambdaTerm::var("z"), LambdaTerm::var("y")),
        );
        assert!(alpha_equal(&beta_normalize(&t), &expect));
    }

    #[test]
    fn alpha_examples() {
        assert!(alpha_equal(&p("\\x. snores(x)"), &p("\\y. snores(y)")));
        assert!(!alpha_equal(
            &p("\\x. \\y. likes(x,y)"),
            &p("\\y. \\x. likes(x,y)")
        ));
        assert!(alpha_equal(&p("snores(Sandy)"), &p("snores(Sandy)")));
        assert!(!alpha_equal(&p("snores(Sandy)"), &p("snores(Kim)")));
    }

    #[test]
    fn typing_examples() {
        let env = env();
        assert_eq!(
            type_of(&p("snores(Sandy)"), &env),
            Ok(SemanticType::base("t"))
        );
        assert_eq!(type_of(&p("Sandy"), &env), Ok(SemanticType::base("e")));
        match type_of(&p("Sandy Sandy"), &env) {
            Err(TypeError::Application { application, .. }) => {
                assert_eq!(application, "Sandy(Sandy)")
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            type_of(&p("\\x. x"), &env),
            Err(TypeError::Ambiguous(_))
        ));
        assert!(check_type(&p("\\x. x"), &env, &natural_type(&f("e -o e"))).is_ok());
        assert!(matches!(
            type_of(&p("nobody"), &env),
            Err(TypeError::UnknownConstant(_))
        ));
        assert_eq!(
            type_of(&p("\\y. \\x. likes(x,y)"), &env)
                .unwrap()
                .to_string(),
            "e -> e -> t"
        );
    }

    #[test]
    fn learning_constants() {
        let mut env = TypeEnv::new();
        env.learn(&p("Sandy"), &natural_type(&f("NOM -o e")))
            .unwrap();
        env.learn(
            &p("\\y. \\x. kissed(x,y)"),
            &natural_type(&f("OBJ e -o SUBJ e -o t")),
        )
        .unwrap();
        assert_eq!(env.get("kissed").unwrap().to_string(), "e -> e -> t");
        let err = env
            .learn(&p("\\x. snores(x)"), &natural_type(&f("e")))
            .unwrap_err();
        assert!(matches!(err, TypeError::Mismatch { .. }), "{err}");
        assert!(env.get("snores").is_none());
        assert!(matches!(
            env.learn(&p("f(g)"), &natural_type(&f("t"))),
            Err(TypeError::Ambiguous(_))
        ));
        // kissed is already e -> e -> t
        assert!(env
            .learn(&p("kissed(Sandy)"), &natural_type(&f("t")))
            .is_err());
    }

    #[test]
    fn label_apply_examples() {
        let r = label_apply(Some(&p("Sandy")), &f("NOM -o e"), None).unwrap();
        assert_eq!(r, Some(p("Sandy")));
        let r = label_apply(
            Some(&p("\\x. snores(x)")),
            &f("SUBJ e -o t"),
            Some(&p("Sandy")),
        )
        .unwrap();
        assert_eq!(r, Some(p("snores(Sandy)")));
        let r = label_apply(
            Some(&p("\\P. seems(P)")),
            &f("XCOMP t -o t"),
            Some(&p("happy(Sandy)")),
        )
        .unwrap();
        assert_eq!(r.unwrap().to_string(), "seems(happy(Sandy))");
        assert_eq!(label_apply(None, &f("NOM -o ACC"), None).unwrap(), None);
        assert!(matches!(
            label_apply(Some(&p("Sandy")), &f("NOM -o e"), Some(&p("x"))),
            Err(LabelError::LabelOnImpotent { .. })
        ));
        assert!(matches!(
            label_apply(Some(&p("Sandy")), &f("e"), None),
            Err(LabelError::NotImplication(_))
        ));
    }
}
