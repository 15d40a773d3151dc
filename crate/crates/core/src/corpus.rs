//! Corpus files and per-case checking.
//!
//! ```text
//! ok    <name> | <sentence> | <reading>, <reading>
//! bad   <name> | <sentence>
//! noparse <name> | <sentence>
//! ```

use thiserror::Error;

use crate::lambda::{alpha_equal, beta_normalize, parse_lambda, LambdaTerm};
use crate::pipeline::{Analysis, Verdict};
use crate::syntax::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Grammatical(Vec<LambdaTerm>),
    Ungrammatical,
    ParseFail,
}

impl Expectation {
    pub fn verdict(&self) -> Verdict {
        match self {
            Expectation::Grammatical(_) => Verdict::Grammatical,
            Expectation::Ungrammatical => Verdict::NoDerivation,
            Expectation::ParseFail => Verdict::NoCstructure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusCase {
    pub name: String,
    pub sentence: String,
    pub expectation: Expectation,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: bad expected reading `{text}`: {source}")]
    Reading {
        line: usize,
        text: String,
        source: SyntaxError,
    },
}

/// Splits at commas outside parentheses.
pub fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out.retain(|s| !s.is_empty());
    out
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusCase>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fail = |message: &str| CorpusError::Format {
            line,
            message: message.to_string(),
        };
        let fields: Vec<&str> = body.split('|').map(str::trim).collect();
        let mut head = fields[0].split_whitespace();
        let (Some(kind), Some(name), None) = (head.next(), head.next(), head.next()) else {
            return Err(fail("expected `<ok|bad|noparse> <name> | <sentence>`"));
        };
        let Some(sentence) = fields.get(1).filter(|s| !s.is_empty()) else {
            return Err(fail("missing sentence"));
        };
        let expectation = match (kind, fields.len()) {
            ("ok", 3) => {
                let mut readings = Vec::new();
                for text in split_top_level(fields[2]) {
                    let term = parse_lambda(text).map_err(|source| CorpusError::Reading {
                        line,
                        text: text.to_string(),
                        source,
                    })?;
                    readings.push(beta_normalize(&term));
                }
                if readings.is_empty() {
                    return Err(fail("an `ok` case needs at least one reading"));
                }
                Expectation::Grammatical(readings)
            }
            ("ok", _) => return Err(fail("an `ok` case needs `| sentence | readings`")),
            ("bad", 2) => Expectation::Ungrammatical,
            ("noparse", 2) => Expectation::ParseFail,
            ("bad" | "noparse", _) => return Err(fail("unexpected readings field")),
            _ => return Err(fail("case kind must be `ok`, `bad` or `noparse`")),
        };
        out.push(CorpusCase {
            name: name.to_string(),
            sentence: sentence.to_string(),
            expectation,
            line,
        });
    }
    Ok(out)
}

/// Equal as sets up to α-equivalence.
pub fn same_readings(found: &[LambdaTerm], expected: &[LambdaTerm]) -> bool {
    found
        .iter()
        .all(|f| expected.iter().any(|e| alpha_equal(f, e)))
        && expected
            .iter()
            .all(|e| found.iter().any(|f| alpha_equal(f, e)))
}

pub fn meets(case: &CorpusCase, analysis: &Analysis) -> bool {
    match &case.expectation {
        Expectation::Grammatical(want) => {
            analysis.verdict == Verdict::Grammatical && same_readings(&analysis.readings, want)
        }
        other => analysis.verdict == other.verdict(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cases() {
        let cases = parse_corpus(
            "# comment\nok a | Sandy snores | snores(Sandy)\n\nok b | x | likes(Sandy,Kim), likes(Kim,Sandy)\nbad c | y\nnoparse d | z\n",
        )
        .unwrap();
        assert_eq!(cases.len(), 4);
        assert_eq!(cases[0].line, 2);
        match &cases[1].expectation {
            Expectation::Grammatical(r) => assert_eq!(r.len(), 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(cases[2].expectation, Expectation::Ungrammatical);
        assert_eq!(cases[3].expectation, Expectation::ParseFail);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_corpus("ok a | s\n").is_err());
        assert!(parse_corpus("maybe a | s\n").is_err());
        assert!(parse_corpus("bad a | s | r\n").is_err());
        assert!(matches!(
            parse_corpus("ok a | s | f(\n"),
            Err(CorpusError::Reading { .. })
        ));
    }

    #[test]
    fn readings_compare_up_to_alpha() {
        let a = vec![parse_lambda("\\x. f(x)").unwrap()];
        let b = vec![parse_lambda("\\y. f(y)").unwrap()];
        assert!(same_readings(&a, &b));
        assert!(!same_readings(&a, &[]));
        assert_eq!(split_top_level("f(a,b), g(c)"), vec!["f(a,b)", "g(c)"]);
    }
}
