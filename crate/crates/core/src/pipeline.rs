//! Sentence analysis: tokenize, parse, assemble, normalize, prove.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::cparser::{assemble_fterm, parse_sentence, tokenize, CTree, ParseError};
use crate::fterm::{normalize, FTerm, FTermError, NormalState};
use crate::grammar::Grammar;
use crate::lambda::{Canon, LambdaTerm};
use crate::par::{par_map, Parallelism};
use crate::prover::{derive, diagnose, Derivation, Diagnosis, SearchConfig, SearchError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Grammatical,
    NoDerivation,
    NoCstructure,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Grammatical => "grammatical",
            Verdict::NoDerivation => "no-derivation",
            Verdict::NoCstructure => "no-cstructure",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub search: SearchConfig,
    pub path_eq_reuse: bool,
    pub parallelism: Parallelism,
}

impl Options {
    /// The grammar's own settings.
    pub fn for_grammar(g: &Grammar) -> Self {
        Options {
            search: g.settings.search(),
            path_eq_reuse: g.settings.path_eq_reuse,
            parallelism: Parallelism::default(),
        }
    }
}

/// One way of resolving the optional material of an f-term.
#[derive(Debug, Clone)]
pub struct Branch {
    pub state: NormalState,
    pub derivations: Vec<Derivation>,
}

#[derive(Debug, Clone)]
pub struct CAnalysis {
    pub tree: CTree,
    pub fterm: FTerm,
    pub branches: Vec<Branch>,
    pub readings: Vec<LambdaTerm>,
}

impl CAnalysis {
    pub fn derivations(&self) -> impl Iterator<Item = &Derivation> {
        self.branches.iter().flat_map(|b| b.derivations.iter())
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub sentence: String,
    pub tokens: Vec<String>,
    pub verdict: Verdict,
    pub cstructures: Vec<CAnalysis>,
    /// Union over c-structures, deduplicated up to α-equivalence.
    pub readings: Vec<LambdaTerm>,
    pub diagnostics: Vec<String>,
}

impl Analysis {
    pub fn derivations(&self) -> impl Iterator<Item = &Derivation> {
        self.cstructures.iter().flat_map(CAnalysis::derivations)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    FTerm(#[from] FTermError),
}

fn union_readings<'a>(terms: impl IntoIterator<Item = &'a LambdaTerm>) -> Vec<LambdaTerm> {
    let mut seen: BTreeMap<Canon, LambdaTerm> = BTreeMap::new();
    for t in terms {
        seen.entry(t.canonical()).or_insert_with(|| t.clone());
    }
    seen.into_values().collect()
}

pub fn analyze(g: &Grammar, sentence: &str, opts: &Options) -> Result<Analysis, AnalysisError> {
    let tokens = tokenize(sentence);
    let mut out = Analysis {
        sentence: sentence.to_string(),
        tokens: tokens.clone(),
        verdict: Verdict::NoCstructure,
        cstructures: Vec::new(),
        readings: Vec::new(),
        diagnostics: Vec::new(),
    };
    let trees = match parse_sentence(g, &tokens) {
        Ok(t) => t,
        Err(e @ ParseError::UnknownWord(_)) => {
            out.diagnostics.push(e.to_string());
            return Ok(out);
        }
    };
    if trees.is_empty() {
        out.diagnostics
            .push("no c-structure spans the sentence".to_string());
        return Ok(out);
    }

    let mut jobs: Vec<(usize, NormalState)> = Vec::new();
    let mut fterms = Vec::with_capacity(trees.len());
    for (i, tree) in trees.iter().enumerate() {
        let fterm = assemble_fterm(tree, g);
        for state in normalize(&fterm)? {
            let state = if opts.path_eq_reuse {
                state.with_unbounded_equations()
            } else {
                state
            };
            jobs.push((i, state));
        }
        fterms.push(fterm);
    }

    let results = par_map(opts.parallelism, &jobs, |(_, s)| {
        derive(s, &g.goal, &opts.search)
    });
    let mut cstructures: Vec<CAnalysis> = trees
        .into_iter()
        .zip(fterms)
        .map(|(tree, fterm)| CAnalysis {
            tree,
            fterm,
            branches: Vec::new(),
            readings: Vec::new(),
        })
        .collect();
    for ((i, state), result) in jobs.iter().zip(results) {
        cstructures[*i].branches.push(Branch {
            state: state.clone(),
            derivations: result?,
        });
    }
    for c in &mut cstructures {
        let labels: Vec<LambdaTerm> = c
            .derivations()
            .filter_map(|d| d.conclusion.label.clone())
            .collect();
        c.readings = union_readings(&labels);
    }
    out.readings = union_readings(cstructures.iter().flat_map(|c| c.readings.iter()));
    out.verdict = if cstructures.iter().any(|c| c.derivations().next().is_some()) {
        Verdict::Grammatical
    } else {
        Verdict::NoDerivation
    };
    if out.verdict == Verdict::NoDerivation {
        let parts = par_map(opts.parallelism, &jobs, |(_, s)| {
            diagnose(s, &g.goal, &opts.search)
        });
        out.diagnostics = Diagnosis::merge(&g.goal, parts).lines();
    }
    out.cstructures = cstructures;
    Ok(out)
}
