//! Serializable per-sentence results.

use serde::Serialize;

use crate::lambda::LambdaTerm;
use crate::pipeline::Analysis;
use crate::prover::Derivation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderOptions {
    /// Print λ-terms in curried form instead of `f(a,b)`.
    pub raw_lambda: bool,
}

impl RenderOptions {
    pub fn lambda(&self, t: &LambdaTerm) -> String {
        if self.raw_lambda {
            t.raw().to_string()
        } else {
            t.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOutput {
    pub formula: String,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub rule: &'static str,
    pub inputs: Vec<usize>,
    pub output: StepOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivationReport {
    pub steps: Vec<StepReport>,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceReport {
    pub sentence: String,
    pub verdict: &'static str,
    pub cstructures: usize,
    pub readings: Vec<String>,
    pub derivations: Vec<DerivationReport>,
    pub diagnostics: Vec<String>,
    pub elapsed_ms: f64,
}

pub fn derivation_report(d: &Derivation, opts: &RenderOptions) -> DerivationReport {
    let labelled = |formula: String, label: Option<&LambdaTerm>| match label {
        Some(l) => format!("{} : {formula}", opts.lambda(l)),
        None => formula,
    };
    DerivationReport {
        steps: d
            .steps
            .iter()
            .map(|s| StepReport {
                rule: s.rule_name(),
                inputs: s.inputs(),
                output: StepOutput {
                    formula: s.result().formula.to_string(),
                    label: s.result().label.as_ref().map(|l| opts.lambda(l)),
                },
            })
            .collect(),
        conclusion: labelled(
            d.conclusion.formula.to_string(),
            d.conclusion.label.as_ref(),
        ),
    }
}

pub fn sentence_report(a: &Analysis, elapsed_ms: f64, opts: &RenderOptions) -> SentenceReport {
    SentenceReport {
        sentence: a.sentence.clone(),
        verdict: a.verdict.as_str(),
        cstructures: a.cstructures.len(),
        readings: a.readings.iter().map(|r| opts.lambda(r)).collect(),
        derivations: a
            .derivations()
            .map(|d| derivation_report(d, opts))
            .collect(),
        diagnostics: a.diagnostics.clone(),
        elapsed_ms,
    }
}
