use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rlfg::corpus::{meets, parse_corpus, CorpusCase, Expectation};
use rlfg::grammar::{parse_grammar, validate, Grammar, Severity};
use rlfg::par::{par_map, Parallelism};
use rlfg::pipeline::{analyze, Analysis, AnalysisError, Options};
use rlfg::report::{sentence_report, RenderOptions, SentenceReport};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rlfg",
    version,
    about = "Parse sentences with a resource-based LFG grammar"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one sentence.
    Parse {
        grammar: PathBuf,
        sentence: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every case of a corpus file.
    Corpus {
        grammar: PathBuf,
        corpus: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone)]
struct Flags {
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Print natural-deduction proof trees.
    #[arg(long)]
    show_proof: bool,
    /// Print each c-structure with its f-term and resource states.
    #[arg(long)]
    show_fterm: bool,
    /// Print λ-terms in curried form.
    #[arg(long)]
    raw_lambda: bool,
    /// Override the grammar's search node limit.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Override the grammar's modal depth limit.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Allow each path equation to be used any number of times.
    #[arg(long)]
    path_eq_reuse: bool,
    /// Report wall-clock time per sentence (otherwise `elapsed_ms` is 0).
    #[arg(long)]
    timing: bool,
    /// Process everything on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Flags {
    fn options(&self, g: &Grammar) -> Options {
        let mut o = Options::for_grammar(g);
        if let Some(n) = self.max_nodes {
            o.search.max_nodes = n;
        }
        if let Some(d) = self.max_depth {
            o.search.max_depth = d;
        }
        o.path_eq_reuse |= self.path_eq_reuse;
        if self.sequential {
            o.parallelism = Parallelism::Sequential;
        }
        o
    }

    fn render(&self) -> RenderOptions {
        RenderOptions {
            raw_lambda: self.raw_lambda,
        }
    }
}

fn load_grammar(path: &Path) -> Result<Grammar, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })?;
    let g = parse_grammar(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })?;
    let findings = validate(&g);
    for f in &findings {
        eprintln!("{}: {f}", path.display());
    }
    if findings.iter().any(|f| f.severity == Severity::Error) {
        return Err(ExitCode::from(EXIT_USAGE));
    }
    Ok(g)
}

/// Result of one sentence: the analysis, or the error that stopped it.
struct Outcome {
    analysis: Result<Analysis, AnalysisError>,
    elapsed_ms: f64,
}

fn run_sentence(g: &Grammar, sentence: &str, opts: &Options, timing: bool) -> Outcome {
    let t0 = Instant::now();
    let analysis = analyze(g, sentence, opts);
    let elapsed_ms = if timing {
        t0.elapsed().as_secs_f64() * 1000.0
    } else {
        0.0
    };
    Outcome {
        analysis,
        elapsed_ms,
    }
}

fn error_report(sentence: &str, e: &AnalysisError, elapsed_ms: f64) -> SentenceReport {
    let mut diagnostics = vec![e.to_string()];
    if let AnalysisError::Search(rlfg::prover::SearchError::Budget { diagnostics: d, .. }) = e {
        diagnostics.extend(d.iter().cloned());
    }
    SentenceReport {
        sentence: sentence.to_string(),
        verdict: "no-derivation",
        cstructures: 0,
        readings: Vec::new(),
        derivations: Vec::new(),
        diagnostics,
        elapsed_ms,
    }
}

fn text_report(a: &Analysis, flags: &Flags) -> String {
    let r = flags.render();
    let mut out = String::new();
    let _ = writeln!(out, "sentence: {}", a.sentence);
    let _ = writeln!(out, "verdict: {}", a.verdict);
    let _ = writeln!(out, "c-structures: {}", a.cstructures.len());
    if !a.readings.is_empty() {
        let _ = writeln!(out, "readings:");
        for t in &a.readings {
            let _ = writeln!(out, "  {}", r.lambda(t));
        }
    }
    if flags.show_fterm || flags.show_proof {
        for (i, c) in a.cstructures.iter().enumerate() {
            let _ = writeln!(out, "c-structure {}: {}", i + 1, c.tree);
            if flags.show_fterm {
                let _ = writeln!(out, "  f-term: {}", c.fterm);
                for (k, b) in c.branches.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "  branch {}: {}  derivations: {}",
                        k + 1,
                        b.state,
                        b.derivations.len()
                    );
                }
            }
            if flags.show_proof {
                for (k, d) in c.derivations().enumerate() {
                    let _ = writeln!(out, "  proof {}:", k + 1);
                    for line in d.proof_text().lines() {
                        let _ = writeln!(out, "    {line}");
                    }
                }
            }
        }
    }
    if !a.diagnostics.is_empty() {
        let _ = writeln!(out, "diagnostics:");
        for d in &a.diagnostics {
            let _ = writeln!(out, "  {d}");
        }
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn cmd_parse(grammar: &Path, sentence: &str, flags: &Flags) -> ExitCode {
    let g = match load_grammar(grammar) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let opts = flags.options(&g);
    let outcome = run_sentence(&g, sentence, &opts, flags.timing);
    match &outcome.analysis {
        Ok(a) => {
            if flags.json {
                println!(
                    "{}",
                    to_json(&sentence_report(a, outcome.elapsed_ms, &flags.render()))
                );
            } else {
                print!("{}", text_report(a, flags));
            }
            if a.verdict == rlfg::Verdict::Grammatical {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_MISMATCH)
            }
        }
        Err(e) => {
            if flags.json {
                println!(
                    "{}",
                    to_json(&error_report(sentence, e, outcome.elapsed_ms))
                );
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(match e {
                AnalysisError::Search(rlfg::prover::SearchError::Budget { .. }) => EXIT_BUDGET,
                _ => EXIT_USAGE,
            })
        }
    }
}

#[derive(Serialize)]
struct CaseJson {
    name: String,
    expected: &'static str,
    pass: bool,
    #[serde(flatten)]
    report: SentenceReport,
}

#[derive(Serialize)]
struct CorpusJson {
    cases: Vec<CaseJson>,
    passed: usize,
    failed: usize,
}

fn expected_text(case: &CorpusCase, flags: &Flags) -> String {
    match &case.expectation {
        Expectation::Grammatical(r) => {
            let r: Vec<String> = r.iter().map(|t| flags.render().lambda(t)).collect();
            format!("grammatical [{}]", r.join(", "))
        }
        other => other.verdict().to_string(),
    }
}

fn cmd_corpus(grammar: &Path, corpus: &Path, flags: &Flags) -> ExitCode {
    let g = match load_grammar(grammar) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let cases = match std::fs::read_to_string(corpus)
        .map_err(|e| e.to_string())
        .and_then(|t| parse_corpus(&t).map_err(|e| e.to_string()))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", corpus.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let opts = flags.options(&g);
    let outcomes = par_map(opts.parallelism, &cases, |c| {
        run_sentence(&g, &c.sentence, &opts, flags.timing)
    });

    let mut budget = false;
    let mut json_cases = Vec::new();
    let mut text = String::new();
    let mut passed = 0;
    for (case, outcome) in cases.iter().zip(&outcomes) {
        let (pass, report) = match &outcome.analysis {
            Ok(a) => (
                meets(case, a),
                sentence_report(a, outcome.elapsed_ms, &flags.render()),
            ),
            Err(e) => {
                budget |= matches!(
                    e,
                    AnalysisError::Search(rlfg::prover::SearchError::Budget { .. })
                );
                (false, error_report(&case.sentence, e, outcome.elapsed_ms))
            }
        };
        passed += usize::from(pass);
        if !flags.json {
            let tag = if pass { "PASS" } else { "FAIL" };
            let got = if report.readings.is_empty() {
                report.verdict.to_string()
            } else {
                format!("{} [{}]", report.verdict, report.readings.join(", "))
            };
            if pass {
                let _ = writeln!(text, "{tag} {}: {got}", case.name);
            } else {
                let _ = writeln!(
                    text,
                    "{tag} {}: expected {}, got {got}",
                    case.name,
                    expected_text(case, flags)
                );
            }
            match &outcome.analysis {
                Ok(a) if flags.show_fterm || flags.show_proof => {
                    for line in text_report(a, flags).lines() {
                        let _ = writeln!(text, "    {line}");
                    }
                }
                _ => {
                    for d in &report.diagnostics {
                        let _ = writeln!(text, "    {d}");
                    }
                }
            }
        }
        json_cases.push(CaseJson {
            name: case.name.clone(),
            expected: case.expectation.verdict().as_str(),
            pass,
            report,
        });
    }
    let failed = cases.len() - passed;
    if flags.json {
        println!(
            "{}",
            to_json(&CorpusJson {
                cases: json_cases,
                passed,
                failed,
            })
        );
    } else {
        print!("{text}");
        println!("{} cases: {passed} passed, {failed} failed", cases.len());
    }
    if budget {
        ExitCode::from(EXIT_BUDGET)
    } else if failed > 0 {
        ExitCode::from(EXIT_MISMATCH)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Parse {
            grammar,
            sentence,
            flags,
        } => cmd_parse(grammar, sentence, flags),
        Command::Corpus {
            grammar,
            corpus,
            flags,
        } => cmd_corpus(grammar, corpus, flags),
    }
}
