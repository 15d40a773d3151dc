//! Test-only oracles and generators shared by the integration tests.
//!
//! The prover oracle tries every rule at every position with no memo table
//! and no canonicalization; it shares only the formula and λ-term types
//! with the library. The c-structure oracle is a top-down enumerator with a
//! depth bound.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rlfg::cparser::CTree;
use rlfg::formula::{Atom, AtomKind, Attr, FFormula, SemanticType, Vocab};
use rlfg::fterm::{FTerm, NormalState, Uses};
use rlfg::grammar::Grammar;
use rlfg::lambda::{beta_normalize, Canon, LambdaTerm};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../grammars")
        .join(name)
}

pub fn data(name: &str) -> String {
    let p = data_path(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub const FRAGMENTS: [(&str, &str); 3] = [
    ("english.grammar", "english.corpus"),
    ("icelandic.grammar", "icelandic.corpus"),
    ("agreement.grammar", "agreement.corpus"),
];

// ---------------------------------------------------------------------------
// Brute-force prover

#[derive(Clone)]
struct Res {
    formula: FFormula,
    label: Option<LambdaTerm>,
}

#[derive(Clone)]
struct Eqn {
    lhs: Vec<Attr>,
    rhs: Vec<Attr>,
    left: Option<u32>,
}

fn strip<'a>(mut phi: &'a FFormula, path: &[Attr]) -> Option<&'a FFormula> {
    for a in path {
        match phi {
            FFormula::Modal(b, body) if b == a => phi = body,
            _ => return None,
        }
    }
    Some(phi)
}

fn wrap(path: &[Attr], mut phi: FFormula) -> FFormula {
    for a in path.iter().rev() {
        phi = FFormula::Modal(a.clone(), Box::new(phi));
    }
    phi
}

/// Distributes the attribute sitting directly on an implication.
fn oracle_lift(phi: &FFormula) -> Option<FFormula> {
    match phi {
        FFormula::Modal(a, body) => match &**body {
            FFormula::Implic(x, y) => Some(FFormula::Implic(
                Box::new(FFormula::Modal(a.clone(), x.clone())),
                Box::new(FFormula::Modal(a.clone(), y.clone())),
            )),
            inner => oracle_lift(inner).map(|l| FFormula::Modal(a.clone(), Box::new(l))),
        },
        _ => None,
    }
}

fn without(v: &[Res], skip: &[usize]) -> Vec<Res> {
    v.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, r)| r.clone())
        .collect()
}

fn explore(
    res: Vec<Res>,
    eqs: Vec<Eqn>,
    goal: &FFormula,
    out: &mut BTreeMap<Canon, LambdaTerm>,
    visits: &mut u64,
) {
    *visits += 1;
    assert!(*visits < 50_000_000, "oracle blew up");
    if res.len() == 1 && res[0].formula == *goal {
        if let Some(l) = &res[0].label {
            out.entry(l.canonical()).or_insert_with(|| l.clone());
        }
    }
    for i in 0..res.len() {
        if let FFormula::Implic(a, b) = &res[i].formula {
            for j in 0..res.len() {
                if i == j || res[j].formula != **a {
                    continue;
                }
                let label = match (&res[i].label, &res[j].label) {
                    _ if rlfg::natural_type(b).is_unit() => None,
                    (f, None) => f.clone(),
                    (Some(f), Some(x)) => Some(beta_normalize(&LambdaTerm::App(
                        Box::new(f.clone()),
                        Box::new(x.clone()),
                    ))),
                    (None, Some(_)) => panic!("impotent function with contentful argument"),
                };
                let mut next = without(&res, &[i, j]);
                next.push(Res {
                    formula: (**b).clone(),
                    label,
                });
                explore(next, eqs.clone(), goal, out, visits);
            }
        }
        if let Some(lifted) = oracle_lift(&res[i].formula) {
            let mut next = without(&res, &[i]);
            next.push(Res {
                formula: lifted,
                label: res[i].label.clone(),
            });
            explore(next, eqs.clone(), goal, out, visits);
        }
        for (k, e) in eqs.iter().enumerate() {
            if e.left == Some(0) {
                continue;
            }
            if let Some(rest) = strip(&res[i].formula, &e.lhs) {
                let mut next = without(&res, &[i]);
                next.push(Res {
                    formula: wrap(&e.rhs, rest.clone()),
                    label: res[i].label.clone(),
                });
                let mut eqs2 = eqs.clone();
                eqs2[k].left = e.left.map(|n| n - 1);
                explore(next, eqs2, goal, out, visits);
            }
        }
    }
}

/// Readings of `state` found by exhaustive unmemoized search; bounded
/// equation uses only.
pub fn brute_readings(state: &NormalState, goal: &FFormula) -> Vec<LambdaTerm> {
    let res = state
        .resources
        .iter()
        .map(|r| Res {
            formula: r.formula.clone(),
            label: r.label.clone(),
        })
        .collect();
    let eqs = state
        .equations
        .iter()
        .map(|e| Eqn {
            lhs: e.lhs.clone(),
            rhs: e.rhs.clone(),
            left: match e.uses {
                Uses::Bounded(n) => Some(n),
                Uses::Unbounded => panic!("oracle handles bounded equations only"),
            },
        })
        .collect();
    let mut out = BTreeMap::new();
    let mut visits = 0;
    explore(res, eqs, goal, &mut out, &mut visits);
    out.into_values().collect()
}

pub fn canon_set(terms: &[LambdaTerm]) -> BTreeSet<Canon> {
    terms.iter().map(LambdaTerm::canonical).collect()
}

// ---------------------------------------------------------------------------
// Brute-force c-structure enumeration

fn unary_repeats(t: &CTree) -> bool {
    fn chain(t: &CTree, seen: &mut Vec<String>) -> bool {
        if seen.iter().any(|c| c == t.category()) {
            return true;
        }
        seen.push(t.category().to_string());
        match t {
            CTree::Node { children, .. } if children.len() == 1 => chain(&children[0], seen),
            _ => false,
        }
    }
    fn any(t: &CTree) -> bool {
        if chain(t, &mut Vec::new()) {
            return true;
        }
        match t {
            CTree::Node { children, .. } => children.iter().any(any),
            CTree::Word { .. } => false,
        }
    }
    any(t)
}

fn splits(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in splits(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn top_down(g: &Grammar, cat: &str, toks: &[String], depth: usize) -> Vec<CTree> {
    let mut out = Vec::new();
    if depth == 0 || toks.is_empty() {
        return out;
    }
    if toks.len() == 1 {
        for (k, e) in g.entries(&toks[0]).iter().enumerate() {
            if e.category == cat {
                out.push(CTree::Word {
                    category: cat.to_string(),
                    word: toks[0].clone(),
                    entry: k,
                });
            }
        }
    }
    for (r, rule) in g.rules.iter().enumerate() {
        if rule.mother != cat {
            continue;
        }
        let optional: Vec<usize> = (0..rule.rhs.len())
            .filter(|&i| rule.rhs[i].optional)
            .collect();
        for mask in 0..(1u32 << optional.len()) {
            let present: Vec<usize> = (0..rule.rhs.len())
                .filter(|i| match optional.iter().position(|o| o == i) {
                    Some(b) => mask >> b & 1 == 1,
                    None => true,
                })
                .collect();
            if present.is_empty() {
                continue;
            }
            for lens in splits(toks.len(), present.len()) {
                let mut combos: Vec<Vec<CTree>> = vec![Vec::new()];
                let mut at = 0;
                for (&k, &len) in present.iter().zip(&lens) {
                    let subs = top_down(g, &rule.rhs[k].category, &toks[at..at + len], depth - 1);
                    at += len;
                    combos = combos
                        .into_iter()
                        .flat_map(|c| {
                            subs.iter().map(move |s| {
                                let mut c = c.clone();
                                c.push(s.clone());
                                c
                            })
                        })
                        .collect();
                }
                for children in combos {
                    out.push(CTree::Node {
                        category: cat.to_string(),
                        rule: r,
                        present: present.clone(),
                        children,
                    });
                }
            }
        }
    }
    out
}

/// All start-symbol trees over `toks` found top-down, excluding trees whose
/// unary chains repeat a category.
pub fn brute_trees(g: &Grammar, toks: &[String]) -> Vec<CTree> {
    let depth = 2 * toks.len() + g.categories().len() + 2;
    let mut out: Vec<CTree> = top_down(g, &g.start, toks, depth)
        .into_iter()
        .filter(|t| !unary_repeats(t))
        .collect();
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// Random generation

pub fn test_vocab() -> Vocab {
    let mut v = Vocab::new();
    for a in ["e", "t"] {
        v.declare_atom(a, AtomKind::Contentful).unwrap();
    }
    for a in ["NOM", "ACC"] {
        v.declare_atom(a, AtomKind::Impotent).unwrap();
    }
    for a in ["SUBJ", "OBJ", "XCOMP"] {
        v.declare_attr(a).unwrap();
    }
    v
}

pub const VOCAB_DECLS: &str =
    "atoms contentful: e t\natoms impotent: NOM ACC\nattrs: SUBJ OBJ XCOMP\n";

pub fn atom(v: &Vocab, name: &str) -> FFormula {
    FFormula::Atom(v.atom(name).unwrap())
}

pub fn attr(name: &str) -> Attr {
    Attr::new(name)
}

pub fn random_formula(rng: &mut ChaCha8Rng, v: &Vocab, depth: u32) -> FFormula {
    let atoms = ["e", "t", "NOM", "ACC"];
    if depth == 0 || rng.gen_bool(0.35) {
        return atom(v, atoms.choose(rng).unwrap());
    }
    if rng.gen_bool(0.5) {
        let a = ["SUBJ", "OBJ", "XCOMP"].choose(rng).unwrap();
        FFormula::modal(attr(a), random_formula(rng, v, depth - 1))
    } else {
        FFormula::implic(
            random_formula(rng, v, depth - 1),
            random_formula(rng, v, depth - 1),
        )
    }
}

fn arity(ty: &SemanticType) -> (Vec<SemanticType>, SemanticType) {
    let mut args = Vec::new();
    let mut cur = ty.clone();
    while let SemanticType::Arrow(a, b) = cur {
        args.push(*a);
        cur = *b;
    }
    (args, cur)
}

/// A closed label of type `ty`: a constant, or `\x1..xn. c(perm of xs)`
/// when every argument is a base type.
pub fn random_label(rng: &mut ChaCha8Rng, ty: &SemanticType, fresh: &mut usize) -> LambdaTerm {
    *fresh += 1;
    let name = format!("k{fresh}");
    let (args, _) = arity(ty);
    let simple = args.iter().all(|a| matches!(a, SemanticType::Base(_)));
    if args.is_empty() || !simple || rng.gen_bool(0.3) {
        return LambdaTerm::constant(&name);
    }
    let vars: Vec<String> = (0..args.len()).map(|i| format!("x{i}")).collect();
    let mut order = vars.clone();
    order.shuffle(rng);
    let body = LambdaTerm::apply_all(
        LambdaTerm::constant(&name),
        order.iter().map(|x| LambdaTerm::var(x)),
    );
    vars.iter()
        .rev()
        .fold(body, |acc, x| LambdaTerm::abs(x, acc))
}

pub fn labelled_leaf(rng: &mut ChaCha8Rng, phi: FFormula, fresh: &mut usize) -> FTerm {
    let ty = rlfg::natural_type(&phi);
    if ty.is_unit() {
        FTerm::leaf(phi)
    } else {
        FTerm::labelled(random_label(rng, &ty, fresh), phi)
    }
}

/// Grows a multiset that can reduce to `goal` by splitting off functors,
/// then adds a little noise.
fn goal_directed(
    rng: &mut ChaCha8Rng,
    v: &Vocab,
    goal: FFormula,
    budget: &mut usize,
    out: &mut Vec<FFormula>,
) {
    if *budget <= 1 || rng.gen_bool(0.3) {
        *budget = budget.saturating_sub(1);
        out.push(goal);
        return;
    }
    *budget -= 1;
    let arg = if rng.gen_bool(0.5) {
        atom(v, ["e", "NOM", "ACC"].choose(rng).unwrap())
    } else {
        FFormula::modal(
            attr(["SUBJ", "OBJ"].choose(rng).unwrap()),
            atom(v, ["e", "NOM", "ACC"].choose(rng).unwrap()),
        )
    };
    let fun = FFormula::implic(arg.clone(), goal);
    let fun = if rng.gen_bool(0.3) {
        // an attribute that has to be lifted off again
        match &fun {
            FFormula::Implic(a, b) => match (&**a, &**b) {
                (FFormula::Modal(x, a1), FFormula::Modal(y, b1)) if x == y => {
                    FFormula::modal(x.clone(), FFormula::implic((**a1).clone(), (**b1).clone()))
                }
                _ => fun,
            },
            _ => fun,
        }
    } else {
        fun
    };
    out.push(fun);
    goal_directed(rng, v, arg, budget, out);
}

pub struct SmallState {
    pub fterm: FTerm,
    pub resources: usize,
    pub equations: usize,
    pub optionals: usize,
}

/// A random flat f-term with at most `max_res` resources, two path
/// equations and two optional items.
pub fn random_small_fterm(rng: &mut ChaCha8Rng, v: &Vocab, max_res: usize) -> SmallState {
    let mut formulas = Vec::new();
    let mut budget = rng.gen_range(2..=max_res);
    let goal = atom(v, "t");
    goal_directed(rng, v, goal, &mut budget, &mut formulas);
    while formulas.len() < max_res && rng.gen_bool(0.25) {
        formulas.push(random_formula(rng, v, 2));
    }
    formulas.truncate(max_res);
    let mut fresh = 0;
    let mut items: Vec<FTerm> = formulas
        .into_iter()
        .map(|phi| labelled_leaf(rng, phi, &mut fresh))
        .collect();
    items.shuffle(rng);
    let optionals = rng.gen_range(0..=2.min(items.len()));
    for item in items.iter_mut().take(optionals) {
        *item = FTerm::opt(item.clone());
    }
    let equations = rng.gen_range(0..=2);
    let paths: [&[&str]; 4] = [&["SUBJ"], &["OBJ"], &["XCOMP", "SUBJ"], &["XCOMP"]];
    for _ in 0..equations {
        let lhs = paths.choose(rng).unwrap().iter().map(|a| attr(a)).collect();
        let rhs = paths.choose(rng).unwrap().iter().map(|a| attr(a)).collect();
        items.push(FTerm::PathEq { lhs, rhs });
    }
    let resources = items
        .iter()
        .filter(|i| !matches!(i, FTerm::PathEq { .. }))
        .count();
    SmallState {
        fterm: FTerm::Multiset(items),
        resources,
        equations,
        optionals,
    }
}

/// A random nested f-term for normalization properties: embeds, optionals
/// and labelled leaves, no path equations under embeddings.
pub fn random_fterm(rng: &mut ChaCha8Rng, v: &Vocab, depth: u32, fresh: &mut usize) -> FTerm {
    if depth == 0 || rng.gen_bool(0.3) {
        let phi = random_formula(rng, v, 2);
        return labelled_leaf(rng, phi, fresh);
    }
    match rng.gen_range(0..3) {
        0 => FTerm::embed(
            attr(["SUBJ", "OBJ", "XCOMP"].choose(rng).unwrap()),
            random_fterm(rng, v, depth - 1, fresh),
        ),
        1 => FTerm::opt(random_fterm(rng, v, depth - 1, fresh)),
        _ => {
            let n = rng.gen_range(1..=3);
            FTerm::Multiset(
                (0..n)
                    .map(|_| random_fterm(rng, v, depth - 1, fresh))
                    .collect(),
            )
        }
    }
}

/// A random simply-typed term over base types `e` and `t` with typed
/// constants, returned with its constants' types.
pub fn random_typed_term(
    rng: &mut ChaCha8Rng,
    want: &SemanticType,
    ctx: &mut Vec<(String, SemanticType)>,
    consts: &mut BTreeMap<String, SemanticType>,
    depth: u32,
) -> LambdaTerm {
    if let SemanticType::Arrow(a, b) = want {
        if depth > 0 && rng.gen_bool(0.6) {
            let x = format!("v{}", ctx.len());
            ctx.push((x.clone(), (**a).clone()));
            let body = random_typed_term(rng, b, ctx, consts, depth - 1);
            ctx.pop();
            return LambdaTerm::abs(&x, body);
        }
    }
    let vars: Vec<&String> = ctx
        .iter()
        .filter(|(_, t)| t == want)
        .map(|(x, _)| x)
        .collect();
    if !vars.is_empty() && rng.gen_bool(0.4) {
        return LambdaTerm::var(vars.choose(rng).unwrap());
    }
    if depth > 0 && rng.gen_bool(0.6) {
        let arg_ty = if rng.gen_bool(0.5) {
            SemanticType::base("e")
        } else if rng.gen_bool(0.5) {
            SemanticType::base("t")
        } else {
            SemanticType::arrow(SemanticType::base("e"), SemanticType::base("t"))
        };
        let fun_ty = SemanticType::arrow(arg_ty.clone(), want.clone());
        let fun = random_typed_term(rng, &fun_ty, ctx, consts, depth - 1);
        let arg = random_typed_term(rng, &arg_ty, ctx, consts, depth - 1);
        return LambdaTerm::app(fun, arg);
    }
    let name = format!("c{}", consts.len());
    consts.insert(name.clone(), want.clone());
    LambdaTerm::constant(&name)
}

/// Renders a random lexical grammar over [`VOCAB_DECLS`]: one word per
/// resource of a small state, all under one flat rule.
pub fn random_grammar_text(rng: &mut ChaCha8Rng) -> (String, String) {
    let v = test_vocab();
    let st = random_small_fterm(rng, &v, 6);
    let FTerm::Multiset(items) = st.fterm else {
        unreachable!()
    };
    let mut text = format!("{VOCAB_DECLS}start: S\ngoal: t\n");
    let mut words = Vec::new();
    let mut rhs = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let word = format!("w{i}");
        let cat = format!("C{i}");
        let (body, template) = match item {
            FTerm::Opt(inner) => (inner.to_string(), "opt($)".to_string()),
            other => (other.to_string(), "$".to_string()),
        };
        text.push_str(&format!("lex {word} {cat} : {body}\n"));
        rhs.push(format!("{cat}:{template}"));
        words.push(word);
    }
    text.push_str(&format!("rule S -> {}\n", rhs.join(" ")));
    (text, words.join(" "))
}

pub fn is_contentful(a: &Atom) -> bool {
    a.kind == AtomKind::Contentful
}

/// A random lexicalized CFG over categories `S A B C` and words `x y z`,
/// with bracketed optional items. Every leaf is the impotent `NOM`.
pub fn random_cfg_text(rng: &mut ChaCha8Rng) -> String {
    let cats = ["S", "A", "B", "C"];
    let mut text = format!("{VOCAB_DECLS}start: S\n");
    for w in ["x", "y", "z"] {
        let mut mine: Vec<&str> = cats[1..].to_vec();
        mine.shuffle(rng);
        for c in &mine[..rng.gen_range(1..=2)] {
            text.push_str(&format!("lex {w} {c} : NOM\n"));
        }
    }
    for _ in 0..rng.gen_range(3..=6) {
        let mother = cats.choose(rng).unwrap();
        let items: Vec<String> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let c = cats.choose(rng).unwrap();
                if rng.gen_bool(0.25) {
                    format!("[{c}:$]")
                } else {
                    format!("{c}:$")
                }
            })
            .collect();
        text.push_str(&format!("rule {mother} -> {}\n", items.join(" ")));
    }
    text
}

pub fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    (0..rng.gen_range(1..=max_len))
        .map(|_| ["x", "y", "z"].choose(rng).unwrap().to_string())
        .collect()
}

/// Number of start-symbol trees over `toks`, by memoized counting over
/// (category, span, categories above in the unary chain).
pub fn count_trees(g: &Grammar, toks: &[String]) -> u128 {
    type Key = (String, usize, usize, BTreeSet<String>);
    fn count(
        g: &Grammar,
        toks: &[String],
        cat: &str,
        i: usize,
        len: usize,
        above: &BTreeSet<String>,
        memo: &mut BTreeMap<Key, u128>,
    ) -> u128 {
        if above.contains(cat) {
            return 0;
        }
        let key = (cat.to_string(), i, len, above.clone());
        if let Some(&n) = memo.get(&key) {
            return n;
        }
        let mut total = 0u128;
        if len == 1 {
            total += g
                .entries(&toks[i])
                .iter()
                .filter(|e| e.category == cat)
                .count() as u128;
        }
        let mut chain = above.clone();
        chain.insert(cat.to_string());
        for rule in g.rules.iter().filter(|r| r.mother == cat) {
            for v in rule.variants() {
                if v.len() == 1 {
                    total += count(g, toks, &rule.rhs[v[0]].category, i, len, &chain, memo);
                    continue;
                }
                for lens in splits(len, v.len()) {
                    let mut prod = 1u128;
                    let mut at = i;
                    for (&k, &l) in v.iter().zip(&lens) {
                        prod = prod.saturating_mul(count(
                            g,
                            toks,
                            &rule.rhs[k].category,
                            at,
                            l,
                            &BTreeSet::new(),
                            memo,
                        ));
                        at += l;
                        if prod == 0 {
                            break;
                        }
                    }
                    total = total.saturating_add(prod);
                }
            }
        }
        memo.insert(key, total);
        total
    }
    if toks.is_empty() {
        return 0;
    }
    count(
        g,
        toks,
        &g.start,
        0,
        toks.len(),
        &BTreeSet::new(),
        &mut BTreeMap::new(),
    )
}
