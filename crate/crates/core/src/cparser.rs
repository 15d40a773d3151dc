//! Tokenization, exhaustive chart parsing and f-term assembly.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::fterm::FTerm;
use crate::grammar::Grammar;

/// Splits on whitespace and drops trailing `.`, `?` and `!`.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|w| w.trim_end_matches(['.', '?', '!']))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// A c-structure with the provenance needed to rebuild its f-term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CTree {
    /// A word under its lexical category; `entry` indexes the word's
    /// entries in file order.
    Word {
        category: String,
        word: String,
        entry: usize,
    },
    /// `rule` indexes the grammar's rules; `present` lists the right-hand
    /// items realised by `children`.
    Node {
        category: String,
        rule: usize,
        present: Vec<usize>,
        children: Vec<CTree>,
    },
}

impl CTree {
    pub fn category(&self) -> &str {
        match self {
            CTree::Word { category, .. } | CTree::Node { category, .. } => category,
        }
    }

    pub fn words(&self) -> Vec<&str> {
        match self {
            CTree::Word { word, .. } => vec![word],
            CTree::Node { children, .. } => children.iter().flat_map(CTree::words).collect(),
        }
    }

    fn len(&self) -> usize {
        match self {
            CTree::Word { .. } => 1,
            CTree::Node { children, .. } => children.iter().map(CTree::len).sum(),
        }
    }
}

impl fmt::Display for CTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CTree::Word { category, word, .. } => write!(f, "[{category} {word}]"),
            CTree::Node {
                category, children, ..
            } => {
                write!(f, "[{category}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown word: {0}")]
    UnknownWord(String),
}

/// Categories derivable over each span: `reach[i][len - 1]`.
type Reach = Vec<Vec<BTreeSet<String>>>;

/// All trees rooted at the start symbol whose yield is `tokens`.
pub fn parse_sentence(g: &Grammar, tokens: &[String]) -> Result<Vec<CTree>, ParseError> {
    for t in tokens {
        if g.entries(t).is_empty() {
            return Err(ParseError::UnknownWord(t.clone()));
        }
    }
    let n = tokens.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let variants: Vec<(usize, Vec<usize>)> = g
        .rules
        .iter()
        .enumerate()
        .flat_map(|(r, rule)| rule.variants().into_iter().map(move |v| (r, v)))
        .collect();
    let reach = recognize(g, tokens, &variants);
    let mut chart = Chart {
        g,
        tokens,
        variants: &variants,
        reach: &reach,
        memo: HashMap::new(),
    };
    let mut out = chart.build(&g.start, 0, n, &BTreeSet::new());
    out.sort();
    out.dedup();
    Ok(out)
}

fn recognize(g: &Grammar, tokens: &[String], variants: &[(usize, Vec<usize>)]) -> Reach {
    let n = tokens.len();
    let mut reach: Reach = vec![vec![BTreeSet::new(); n]; n];
    for len in 1..=n {
        for i in 0..=n - len {
            let mut cell = BTreeSet::new();
            if len == 1 {
                cell.extend(g.entries(&tokens[i]).iter().map(|e| e.category.clone()));
            }
            for (r, v) in variants
                .iter()
                .filter(|(_, v)| v.len() > 1 && v.len() <= len)
            {
                let rule = &g.rules[*r];
                let cats: Vec<&str> = v.iter().map(|&k| rule.rhs[k].category.as_str()).collect();
                if !splits(&reach, i, len, &cats).is_empty() {
                    cell.insert(rule.mother.clone());
                }
            }
            loop {
                let before = cell.len();
                for (r, v) in variants.iter().filter(|(_, v)| v.len() == 1) {
                    let rule = &g.rules[*r];
                    if cell.contains(&rule.rhs[v[0]].category) {
                        cell.insert(rule.mother.clone());
                    }
                }
                if cell.len() == before {
                    break;
                }
            }
            reach[i][len - 1] = cell;
        }
    }
    reach
}

/// Every way to cut `len` tokens from `i` into one recognized span per
/// category, as lists of span lengths.
fn splits(reach: &Reach, i: usize, len: usize, cats: &[&str]) -> Vec<Vec<usize>> {
    let Some((first, rest)) = cats.split_first() else {
        return if len == 0 {
            vec![Vec::new()]
        } else {
            Vec::new()
        };
    };
    let mut out = Vec::new();
    for l in 1..=len.saturating_sub(rest.len()) {
        if !reach[i][l - 1].contains(*first) {
            continue;
        }
        for mut tail in splits(reach, i + l, len - l, rest) {
            tail.insert(0, l);
            out.push(tail);
        }
    }
    out
}

type MemoKey = (String, usize, usize, BTreeSet<String>);

struct Chart<'a> {
    g: &'a Grammar,
    tokens: &'a [String],
    variants: &'a [(usize, Vec<usize>)],
    reach: &'a Reach,
    memo: HashMap<MemoKey, Vec<CTree>>,
}

impl Chart<'_> {
    /// Trees for `cat` over `tokens[i .. i + len]` whose unary chain avoids
    /// `above`, the categories of the unary chain leading down to here. A
    /// unary chain never revisits a category, so cyclic rules cannot loop.
    fn build(&mut self, cat: &str, i: usize, len: usize, above: &BTreeSet<String>) -> Vec<CTree> {
        if above.contains(cat) || !self.reach[i][len - 1].contains(cat) {
            return Vec::new();
        }
        let key = (cat.to_string(), i, len, above.clone());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let g = self.g;
        let mut out = Vec::new();
        if len == 1 {
            for (k, e) in g.entries(&self.tokens[i]).iter().enumerate() {
                if e.category == cat {
                    out.push(CTree::Word {
                        category: cat.to_string(),
                        word: self.tokens[i].clone(),
                        entry: k,
                    });
                }
            }
        }
        let mut chain = above.clone();
        chain.insert(cat.to_string());
        for (r, v) in self.variants {
            let rule = &g.rules[*r];
            if rule.mother != cat || v.len() > len {
                continue;
            }
            if v.len() == 1 {
                for child in self.build(&rule.rhs[v[0]].category, i, len, &chain) {
                    out.push(CTree::Node {
                        category: cat.to_string(),
                        rule: *r,
                        present: v.clone(),
                        children: vec![child],
                    });
                }
                continue;
            }
            let cats: Vec<&str> = v.iter().map(|&k| rule.rhs[k].category.as_str()).collect();
            for lens in splits(self.reach, i, len, &cats) {
                let mut seqs: Vec<Vec<CTree>> = vec![Vec::with_capacity(cats.len())];
                let mut at = i;
                for (c, l) in cats.iter().zip(&lens) {
                    let trees = self.build(c, at, *l, &BTreeSet::new());
                    at += l;
                    seqs = seqs
                        .into_iter()
                        .flat_map(|s| {
                            trees.iter().map(move |t| {
                                let mut s = s.clone();
                                s.push(t.clone());
                                s
                            })
                        })
                        .collect();
                    if seqs.is_empty() {
                        break;
                    }
                }
                for children in seqs {
                    out.push(CTree::Node {
                        category: cat.to_string(),
                        rule: *r,
                        present: v.clone(),
                        children,
                    });
                }
            }
        }
        self.memo.insert(key, out.clone());
        out
    }
}

/// The f-term of a tree: a word contributes its entry, a node the multiset
/// of its realised templates with `$` replaced by the daughter's f-term.
pub fn assemble_fterm(tree: &CTree, g: &Grammar) -> FTerm {
    match tree {
        CTree::Word { word, entry, .. } => g.entries(word)[*entry].fterm.clone(),
        CTree::Node {
            rule,
            present,
            children,
            ..
        } => {
            let rule = &g.rules[*rule];
            let mut parts: Vec<FTerm> = present
                .iter()
                .zip(children)
                .map(|(&k, c)| rule.rhs[k].template.fill_hole(&assemble_fterm(c, g)))
                .collect();
            if parts.len() == 1 {
                parts.pop().unwrap()
            } else {
                FTerm::Multiset(parts)
            }
        }
    }
}

/// Checks that a tree spans exactly `tokens`.
pub fn spans(tree: &CTree, tokens: &[String]) -> bool {
    tree.len() == tokens.len() && tree.words().iter().zip(tokens).all(|(a, b)| a == b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    const ENGLISH: &str = "\
atoms contentful: e t
atoms impotent: NOM
attrs: SUBJ
start: S
lex Sandy NP : Sandy : NOM -o e
lex snores VP : \\x. snores(x) : SUBJ e -o t
rule S -> NP:SUBJ(NOM, $) VP:$
";

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenizer() {
        assert_eq!(toks("Sandy snores."), vec!["Sandy", "snores"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("drengurinn kyssti stúlkuna").len(), 3);
        assert_eq!(toks("Sandy snores ?"), vec!["Sandy", "snores"]);
    }

    #[test]
    fn english_trees() {
        let g = parse_grammar(ENGLISH).unwrap();
        let trees = parse_sentence(&g, &toks("Sandy snores")).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].to_string(), "[S [NP Sandy] [VP snores]]");
        assert!(spans(&trees[0], &toks("Sandy snores")));
        assert_eq!(
            assemble_fterm(&trees[0], &g).to_string(),
            "SUBJ(NOM, Sandy : NOM -o e), \\x. snores(x) : SUBJ e -o t"
        );
        assert!(parse_sentence(&g, &toks("snores Sandy"))
            .unwrap()
            .is_empty());
        assert_eq!(
            parse_sentence(&g, &toks("Kim snores")).unwrap_err(),
            ParseError::UnknownWord("Kim".into())
        );
    }

    #[test]
    fn unary_and_optional() {
        let g = parse_grammar(&format!(
            "{ENGLISH}rule VP -> V:$ [NP:SUBJ $]\nrule X -> VP:$\nrule VP -> X:$\nlex sleeps V : \\x. snores(x) : SUBJ e -o t\n"
        ))
        .unwrap();
        let trees = parse_sentence(&g, &toks("Sandy sleeps")).unwrap();
        // the cyclic VP -> X -> VP chain is not unfolded
        assert_eq!(trees.len(), 1, "{trees:?}");
        let direct = trees
            .iter()
            .find(|t| t.to_string() == "[S [NP Sandy] [VP [V sleeps]]]")
            .unwrap();
        assert_eq!(
            assemble_fterm(direct, &g).to_string(),
            "SUBJ(NOM, Sandy : NOM -o e), \\x. snores(x) : SUBJ e -o t"
        );
    }
}
