//! Grammar files: declarations, lexicon and annotated phrase-structure rules.
//!
//! ```text
//! atoms contentful: e t
//! atoms impotent: NOM ACC
//! attrs: SUBJ OBJ XCOMP
//! start: S
//! goal: t
//! set path_eq_reuse = off
//! lex Sandy NP : Sandy : NOM -o e
//! lex snores VP : \x. snores(x) : SUBJ e -o t
//! rule S -> NP:SUBJ(NOM, $) VP:$
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{self, natural_type, AtomKind, FFormula, Vocab};
use crate::fterm::{self, FTerm};
use crate::lambda::{check_label_presence, check_type, TypeEnv};
use crate::prover::SearchConfig;
use crate::syntax::{lex, Cursor, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub word: String,
    pub category: String,
    pub fterm: FTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhsItem {
    pub category: String,
    pub template: FTerm,
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PSRule {
    pub mother: String,
    pub rhs: Vec<RhsItem>,
}

impl PSRule {
    /// Every choice of present optional items, as index lists. Variants
    /// with no daughters are dropped.
    pub fn variants(&self) -> Vec<Vec<usize>> {
        let optional: Vec<usize> = (0..self.rhs.len())
            .filter(|&i| self.rhs[i].optional)
            .collect();
        let mut out = Vec::new();
        for mask in 0u32..(1 << optional.len()) {
            let kept: Vec<usize> = (0..self.rhs.len())
                .filter(|i| match optional.iter().position(|o| o == i) {
                    Some(bit) => mask & (1 << bit) != 0,
                    None => true,
                })
                .collect();
            if !kept.is_empty() {
                out.push(kept);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub path_eq_reuse: bool,
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let c = SearchConfig::default();
        Settings {
            path_eq_reuse: false,
            max_nodes: c.max_nodes,
            max_depth: c.max_depth,
        }
    }
}

impl Settings {
    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    pub vocab: Vocab,
    pub start: String,
    pub goal: FFormula,
    /// Entries per word, in file order.
    pub lexicon: BTreeMap<String, Vec<LexEntry>>,
    pub rules: Vec<PSRule>,
    pub settings: Settings,
}

impl Grammar {
    pub fn entries(&self, word: &str) -> &[LexEntry] {
        self.lexicon.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn entry_count(&self) -> usize {
        self.lexicon.values().map(Vec::len).sum()
    }

    /// Categories that occur as a rule mother, in a rule body, or on a word.
    pub fn categories(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        out.insert(self.start.as_str());
        for r in &self.rules {
            out.insert(r.mother.as_str());
            out.extend(r.rhs.iter().map(|i| i.category.as_str()));
        }
        for e in self.lexicon.values().flatten() {
            out.insert(e.category.as_str());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct GrammarError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err_at(line: usize, text: &str, byte: usize, message: impl Into<String>) -> GrammarError {
    let byte = byte.min(text.len());
    GrammarError {
        line,
        column: text[..byte].chars().count() + 1,
        message: message.into(),
    }
}

/// Byte offset carried by an f-term error, if any.
fn fterm_offset(e: &fterm::FTermError) -> Option<usize> {
    match e {
        fterm::FTermError::Syntax(s) => Some(s.offset),
        fterm::FTermError::Formula(f) => Some(f.offset()),
        fterm::FTermError::NotAnAttribute { offset, .. } => Some(*offset),
        _ => None,
    }
}

fn fterm_err(line: usize, text: &str, base: usize, e: fterm::FTermError) -> GrammarError {
    let e = e.shifted(base);
    let at = fterm_offset(&e).unwrap_or(base);
    err_at(line, text, at, e.to_string())
}

fn names(rest: &str) -> impl Iterator<Item = &str> {
    rest.split_whitespace()
}

/// Whitespace-separated words with their byte offsets.
fn names_at(rest: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut at = 0;
    for word in rest.split_whitespace() {
        let off = at + rest[at..].find(word).unwrap_or(0);
        out.push((off, word));
        at = off + word.len();
    }
    out
}

/// Strips a `#` comment.
fn content(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses a grammar file.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut vocab = Vocab::new();
    let mut start: Option<String> = None;
    let mut goal_line: Option<(usize, &str, usize)> = None;
    let mut settings = Settings::default();
    let mut deferred = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = content(raw);
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = line.len() - trimmed.len();
        let (kw, _) = trimmed
            .split_once(char::is_whitespace)
            .unwrap_or((trimmed, ""));
        let after = |prefix: &str| -> Option<(usize, &str)> {
            trimmed
                .strip_prefix(prefix)
                .map(|rest| (indent + prefix.len(), rest))
        };
        if let Some((at, rest)) = after("atoms contentful:").or_else(|| after("atoms impotent:")) {
            let kind = if trimmed.starts_with("atoms contentful:") {
                AtomKind::Contentful
            } else {
                AtomKind::Impotent
            };
            for (off, name) in names_at(rest) {
                let off = at + off;
                vocab
                    .declare_atom(name, kind)
                    .map_err(|e| err_at(n, raw, off, e.to_string()))?;
            }
        } else if let Some((at, rest)) = after("attrs:") {
            for (off, name) in names_at(rest) {
                let off = at + off;
                vocab
                    .declare_attr(name)
                    .map_err(|e| err_at(n, raw, off, e.to_string()))?;
            }
        } else if let Some((at, rest)) = after("start:") {
            let mut it = names(rest);
            match (it.next(), it.next()) {
                (Some(cat), None) if valid_category(cat) => start = Some(cat.to_string()),
                _ => return Err(err_at(n, raw, at, "expected one category after `start:`")),
            }
        } else if let Some((at, _)) = after("goal:") {
            goal_line = Some((n, raw, at));
        } else if kw == "set" {
            let rest = &trimmed[3..];
            let at = indent + 3;
            let Some((key, value)) = rest.split_once('=') else {
                return Err(err_at(n, raw, at, "expected `set <name> = <value>`"));
            };
            let value_at = at + key.len() + 1;
            let value = value.trim();
            match key.trim() {
                "path_eq_reuse" => {
                    settings.path_eq_reuse = match value {
                        "on" | "unbounded" => true,
                        "off" => false,
                        _ => return Err(err_at(n, raw, value_at, "expected `on` or `off`")),
                    }
                }
                "max_nodes" => {
                    settings.max_nodes = value
                        .parse()
                        .map_err(|_| err_at(n, raw, value_at, "expected a number"))?
                }
                "max_depth" => {
                    settings.max_depth = value
                        .parse()
                        .map_err(|_| err_at(n, raw, value_at, "expected a number"))?
                }
                other => return Err(err_at(n, raw, at, format!("unknown setting `{other}`"))),
            }
        } else if kw == "lex" || kw == "rule" {
            deferred.push((n, raw, indent));
        } else {
            return Err(err_at(
                n,
                raw,
                indent,
                format!("unknown line keyword `{kw}`"),
            ));
        }
    }

    let Some(start) = start else {
        return Err(GrammarError {
            line: 1,
            column: 1,
            message: "no start symbol".to_string(),
        });
    };
    let goal = match goal_line {
        Some((n, raw, at)) => {
            let text = &content(raw)[at..];
            formula::parse_formula(text, &vocab).map_err(|e| {
                let e = e.shifted(at);
                err_at(n, raw, e.offset(), e.to_string())
            })?
        }
        None => formula::parse_formula("t", &vocab).map_err(|_| GrammarError {
            line: 1,
            column: 1,
            message: "no `goal:` line and atom `t` is not declared".to_string(),
        })?,
    };

    let mut lexicon: BTreeMap<String, Vec<LexEntry>> = BTreeMap::new();
    let mut rules = Vec::new();
    for (n, raw, indent) in deferred {
        let line = content(raw);
        if line[indent..].starts_with("lex") {
            let entry = parse_lex(n, raw, line, indent + 3, &vocab)?;
            lexicon.entry(entry.word.clone()).or_default().push(entry);
        } else {
            rules.push(parse_rule(n, raw, line, indent + 4, &vocab)?);
        }
    }

    Ok(Grammar {
        vocab,
        start,
        goal,
        lexicon,
        rules,
        settings,
    })
}

fn valid_category(name: &str) -> bool {
    formula::valid_decl_name(name)
}

fn skip_ws(line: &str, mut at: usize) -> usize {
    while let Some(c) = line[at..].chars().next() {
        if !c.is_whitespace() {
            break;
        }
        at += c.len_utf8();
    }
    at
}

fn next_word(line: &str, at: usize) -> (usize, &str) {
    let start = skip_ws(line, at);
    let end = line[start..]
        .find(char::is_whitespace)
        .map_or(line.len(), |e| start + e);
    (start, &line[start..end])
}

fn parse_lex(
    n: usize,
    raw: &str,
    line: &str,
    at: usize,
    vocab: &Vocab,
) -> Result<LexEntry, GrammarError> {
    let (w_at, word) = next_word(line, at);
    if word.is_empty() {
        return Err(err_at(n, raw, w_at, "expected a word"));
    }
    let (c_at, category) = next_word(line, w_at + word.len());
    if !valid_category(category) {
        return Err(err_at(n, raw, c_at, "expected a category"));
    }
    let colon = skip_ws(line, c_at + category.len());
    if !line[colon..].starts_with(':') {
        return Err(err_at(n, raw, colon, "expected `:` after the category"));
    }
    let body_at = colon + 1;
    let body = &line[body_at..];
    let fterm = fterm::parse_fterm(body, vocab).map_err(|e| fterm_err(n, raw, body_at, e))?;
    if fterm.count_holes() > 0 {
        let hole = body.find(['$', '↓']).map_or(body_at, |h| body_at + h);
        return Err(err_at(
            n,
            raw,
            hole,
            "`$` may only appear in rule templates",
        ));
    }
    for (_, phi, label) in fterm.leaves() {
        check_label_presence(phi, label).map_err(|e| err_at(n, raw, body_at, e.to_string()))?;
    }
    Ok(LexEntry {
        word: word.to_string(),
        category: category.to_string(),
        fterm,
    })
}

fn parse_rule(
    n: usize,
    raw: &str,
    line: &str,
    at: usize,
    vocab: &Vocab,
) -> Result<PSRule, GrammarError> {
    let text = &line[at..];
    let toks = lex(text).map_err(|e| err_at(n, raw, at + e.offset, e.to_string()))?;
    let mut cur = Cursor::new(&toks, text.len());
    let syntax = |e: crate::syntax::SyntaxError| err_at(n, raw, at + e.offset, e.to_string());
    let mother = cur.expect_ident().map_err(syntax)?.to_string();
    cur.expect(&Tok::RuleArrow).map_err(syntax)?;
    let mut rhs = Vec::new();
    while !cur.at_end() {
        let optional = cur.eat(&Tok::LBrack);
        let item_at = cur.offset();
        let category = cur.expect_ident().map_err(syntax)?.to_string();
        cur.expect(&Tok::Colon).map_err(syntax)?;
        let len = template_len(&cur, optional);
        if len == 0 {
            return Err(syntax(cur.unexpected("template")));
        }
        let tpl_at = cur.offset();
        let mut sub = cur.split(len);
        let template = fterm::fterm_list(&mut sub, vocab)
            .and_then(|t| sub.expect_end().map(|_| t).map_err(Into::into))
            .map_err(|e| fterm_err(n, raw, at, e))?;
        if template.count_holes() == 0 {
            return Err(err_at(n, raw, at + tpl_at, "template has no `$`"));
        }
        if optional {
            cur.expect(&Tok::RBrack).map_err(syntax)?;
        }
        if fterm::normalize(&template.fill_hole(&FTerm::Multiset(Vec::new()))).is_err() {
            return Err(err_at(
                n,
                raw,
                at + item_at,
                "path equations may not be embedded in a template",
            ));
        }
        rhs.push(RhsItem {
            category,
            template,
            optional,
        });
    }
    if rhs.is_empty() {
        return Err(err_at(n, raw, line.len(), "rule has no daughters"));
    }
    Ok(PSRule { mother, rhs })
}

/// Tokens belonging to the current template: up to the next top-level
/// `Cat :` or `[`, or the closing `]` of an optional item.
fn template_len(cur: &Cursor<'_>, optional: bool) -> usize {
    let toks = cur.remaining();
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::LParen => depth += 1,
            Tok::RParen => depth -= 1,
            Tok::LBrack if depth == 0 => return i,
            Tok::RBrack if depth == 0 && optional => return i,
            Tok::Ident(_)
                if depth == 0 && i > 0 && toks.get(i + 1).map(|t| &t.tok) == Some(&Tok::Colon) =>
            {
                return i
            }
            _ => {}
        }
    }
    toks.len()
}

// ---------------------------------------------------------------------------
// Formatting

fn fmt_items(t: &FTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        FTerm::Multiset(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ; ")?;
                }
                write!(f, "{item}")?;
            }
            Ok(())
        }
        other => write!(f, "{other}"),
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<&crate::formula::Symbol>| {
            v.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(
            f,
            "atoms contentful: {}",
            join(self.vocab.atoms_of(AtomKind::Contentful))
        )?;
        writeln!(
            f,
            "atoms impotent: {}",
            join(self.vocab.atoms_of(AtomKind::Impotent))
        )?;
        writeln!(f, "attrs: {}", join(self.vocab.attrs()))?;
        writeln!(f, "start: {}", self.start)?;
        writeln!(f, "goal: {}", self.goal)?;
        writeln!(
            f,
            "set path_eq_reuse = {}",
            if self.settings.path_eq_reuse {
                "on"
            } else {
                "off"
            }
        )?;
        writeln!(f, "set max_nodes = {}", self.settings.max_nodes)?;
        writeln!(f, "set max_depth = {}", self.settings.max_depth)?;
        for e in self.lexicon.values().flatten() {
            write!(f, "lex {} {} : ", e.word, e.category)?;
            fmt_items(&e.fterm, f)?;
            writeln!(f)?;
        }
        for r in &self.rules {
            write!(f, "rule {} ->", r.mother)?;
            for item in &r.rhs {
                if item.optional {
                    write!(f, " [{}:{}]", item.category, item.template)?;
                } else {
                    write!(f, " {}:{}", item.category, item.template)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Constant types learned from every labelled lexical leaf, in file order.
/// Each failure is reported with the word it came from.
pub fn learn_constants(g: &Grammar) -> (TypeEnv, Vec<Finding>) {
    let mut env = TypeEnv::new();
    let mut findings = Vec::new();
    for e in g.lexicon.values().flatten() {
        for (path, phi, label) in e.fterm.leaves() {
            let Some(label) = label else { continue };
            let full = FFormula::under_path(&path, phi.clone());
            let want = natural_type(&full);
            if let Err(err) = env.learn(label, &want) {
                findings.push(Finding {
                    severity: Severity::Error,
                    message: format!(
                        "entry `{}`: label `{label}` for `{full}` ({want}): {err}",
                        e.word
                    ),
                });
            }
        }
    }
    (env, findings)
}

pub fn validate(g: &Grammar) -> Vec<Finding> {
    let mut out = Vec::new();
    let (env, learned) = learn_constants(g);
    out.extend(learned);
    for e in g.lexicon.values().flatten() {
        for (path, phi, label) in e.fterm.leaves() {
            if let Err(err) = check_label_presence(phi, label) {
                out.push(Finding {
                    severity: Severity::Error,
                    message: format!("entry `{}`: {err}", e.word),
                });
            }
            if let Some(label) = label {
                let full = FFormula::under_path(&path, phi.clone());
                if let Err(err) = check_type(label, &env, &natural_type(&full)) {
                    let msg = format!("entry `{}`: ♮ type error: {err}", e.word);
                    if !out.iter().any(|f: &Finding| {
                        f.message.starts_with(&format!("entry `{}`: label", e.word))
                    }) {
                        out.push(Finding {
                            severity: Severity::Error,
                            message: msg,
                        });
                    }
                }
            }
        }
    }

    let mothers: BTreeSet<&str> = g.rules.iter().map(|r| r.mother.as_str()).collect();
    let lexical: BTreeSet<&str> = g
        .lexicon
        .values()
        .flatten()
        .map(|e| e.category.as_str())
        .collect();
    let used: BTreeSet<&str> = g
        .rules
        .iter()
        .flat_map(|r| r.rhs.iter().map(|i| i.category.as_str()))
        .collect();

    if !mothers.contains(g.start.as_str()) && !lexical.contains(g.start.as_str()) {
        out.push(Finding {
            severity: Severity::Error,
            message: format!("start symbol `{}` has no rules or words", g.start),
        });
    }
    for r in &g.rules {
        for item in &r.rhs {
            let c = item.category.as_str();
            if !mothers.contains(c) && !lexical.contains(c) {
                out.push(Finding {
                    severity: Severity::Error,
                    message: format!("rule for `{}` uses undefined category `{c}`", r.mother),
                });
            }
        }
    }
    for e in g.lexicon.values().flatten() {
        if !used.contains(e.category.as_str()) && e.category != g.start {
            out.push(Finding {
                severity: Severity::Warning,
                message: format!(
                    "word `{}` has category `{}`, which no rule uses",
                    e.word, e.category
                ),
            });
        }
    }

    let mut reach = BTreeSet::from([g.start.as_str()]);
    let mut frontier = vec![g.start.as_str()];
    while let Some(c) = frontier.pop() {
        for r in g.rules.iter().filter(|r| r.mother == c) {
            for item in &r.rhs {
                if reach.insert(item.category.as_str()) {
                    frontier.push(item.category.as_str());
                }
            }
        }
    }
    for c in mothers.iter().chain(lexical.iter()) {
        if !reach.contains(c) {
            out.push(Finding {
                severity: Severity::Warning,
                message: format!("category `{c}` is unreachable from `{}`", g.start),
            });
        }
    }

    for cycle in unary_cycles(g) {
        out.push(Finding {
            severity: Severity::Error,
            message: format!("unary rule cycle: {}", cycle.join(" -> ")),
        });
    }

    let mut seen = BTreeSet::new();
    out.retain(|f| seen.insert(f.message.clone()));
    out
}

/// Categories that can rewrite to themselves through single-daughter rule
/// variants; each cycle reported once from its smallest member.
fn unary_cycles(g: &Grammar) -> Vec<Vec<String>> {
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &g.rules {
        for v in r.variants() {
            if let [only] = v.as_slice() {
                edges
                    .entry(r.mother.as_str())
                    .or_default()
                    .insert(r.rhs[*only].category.as_str());
            }
        }
    }
    let mut out = Vec::new();
    let mut reported = BTreeSet::new();
    for &startc in edges.keys() {
        let mut stack = vec![(startc, vec![startc])];
        let mut visited = BTreeSet::new();
        while let Some((c, path)) = stack.pop() {
            for &d in edges.get(c).into_iter().flatten() {
                if d == startc {
                    let members: BTreeSet<&str> = path.iter().copied().collect();
                    if reported.insert(members) {
                        let mut cyc: Vec<String> = path.iter().map(|s| s.to_string()).collect();
                        cyc.push(startc.to_string());
                        out.push(cyc);
                    }
                } else if visited.insert(d) {
                    let mut p = path.clone();
                    p.push(d);
                    stack.push((d, p));
                }
            }
        }
    }
    out
}
