//! Resource-based LFG: f-terms of linear-logic resources, proof search over
//! them, and semantic readings read off the proofs as λ-terms.

pub mod corpus;
pub mod cparser;
pub mod formula;
pub mod fterm;
pub mod grammar;
pub mod lambda;
pub mod par;
pub mod pipeline;
pub mod prover;
pub mod report;
pub mod syntax;

pub use formula::{natural_type, parse_formula, FFormula, SemanticType, Vocab};
pub use fterm::{normalize, parse_fterm, FTerm, NormalState};
pub use grammar::{parse_grammar, validate, Grammar};
pub use lambda::{beta_normalize, parse_lambda, LambdaTerm};
pub use par::Parallelism;
pub use pipeline::{analyze, Analysis, Options, Verdict};
pub use prover::{derive, diagnose, readings, Derivation, SearchConfig};
