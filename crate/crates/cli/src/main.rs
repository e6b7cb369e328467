use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sema::harness::JsonScores;
use sema::{
    emit_comparison, emit_report, evaluate_corpus, pair_corpora, read_corpus_str, sema_score,
    smatch_score, AmrGraph, CorpusItem, ExactMatch, ExactReport, Metric, ReportFormat, Scalar,
    SmatchConfig,
};

/// Score AMR graphs against a reference with SEMA and smatch.
#[derive(Debug, Parser)]
#[command(name = "sema", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a single test AMR against a single reference AMR.
    Score(Options),
    /// Evaluate a test corpus against a gold corpus.
    Eval(Options),
    /// Evaluate with both metrics and show per-entry differences.
    Compare(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricChoice {
    Sema,
    Smatch,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, clap::Args)]
struct Options {
    /// Test (system output) file, or `-` for stdin.
    test: String,
    /// Gold (reference) file, or `-` for stdin.
    gold: String,
    /// Metric to compute [default: both for compare, sema otherwise].
    #[arg(long, value_enum)]
    metric: Option<MetricChoice>,
    /// Hill-climbing restarts for smatch.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    /// Seed for smatch's random restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest variable count searched exhaustively by smatch.
    #[arg(long, default_value_t = 8)]
    exact_threshold: usize,
    /// Leave out smatch's TOP triple.
    #[arg(long)]
    no_top: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also report entries below and above the mean gold relation count.
    #[arg(long)]
    split_by_relation_avg: bool,
}

enum Failure {
    Usage(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl Options {
    fn metrics(&self, compare: bool) -> Vec<Metric> {
        let choice = self.metric.unwrap_or(if compare {
            MetricChoice::Both
        } else {
            MetricChoice::Sema
        });
        match choice {
            MetricChoice::Sema => vec![Metric::Sema],
            MetricChoice::Smatch => vec![Metric::Smatch],
            MetricChoice::Both => vec![Metric::Sema, Metric::Smatch],
        }
    }

    fn smatch_config(&self) -> Result<SmatchConfig, Failure> {
        let config = SmatchConfig {
            add_top: !self.no_top,
            restarts: self.restarts,
            seed: self.seed,
            exact_threshold: self.exact_threshold,
        };
        config
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }

    fn format(&self) -> ReportFormat {
        match self.format {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        }
    }
}

fn read_input(path: &str) -> anyhow::Result<String> {
    if path == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .context("reading stdin")?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn read_items(path: &str) -> anyhow::Result<Vec<CorpusItem>> {
    let items = read_corpus_str(&read_input(path)?);
    for amr in items.iter().flatten() {
        for w in &amr.warnings {
            eprintln!(
                "warning: {path}: entry {}: {w}",
                amr.id().unwrap_or("<no id>")
            );
        }
    }
    Ok(items)
}

fn single_graph(path: &str) -> anyhow::Result<AmrGraph> {
    let mut items = read_items(path)?;
    if items.len() != 1 {
        bail!("{path}: expected exactly one AMR, found {}", items.len());
    }
    let item = items.pop().unwrap();
    item.map(|amr| amr.graph)
        .map_err(|e| anyhow!("{path}: {}", e.error))
}

fn score(options: &Options) -> Result<String, Failure> {
    let config = options.smatch_config()?;
    let test = single_graph(&options.test)?;
    let gold = single_graph(&options.gold)?;
    let metrics = options.metrics(false);
    let mut results: Vec<(Metric, ExactMatch)> = Vec::new();
    for metric in metrics {
        let result = match metric {
            Metric::Sema => sema_score(&test, &gold).map_err(anyhow::Error::from),
            Metric::Smatch => smatch_score(&test, &gold, &config).map_err(anyhow::Error::from),
        };
        results.push((metric, result.with_context(|| format!("{metric}"))?));
    }
    Ok(match options.format {
        Format::Text => results
            .iter()
            .map(|(m, r)| {
                format!(
                    "{} {} (M={} C={} T={})\n",
                    m.key(),
                    r.summary(),
                    r.matched_count,
                    r.test_count,
                    r.reference_count
                )
            })
            .collect(),
        Format::Json => {
            let scores: BTreeMap<&str, JsonScores> = results
                .iter()
                .map(|(m, r)| {
                    let s = |v: &sema::Exact| v.to_decimal();
                    let json = JsonScores {
                        matched: r.matched_count,
                        test: r.test_count,
                        reference: r.reference_count,
                        precision: s(&r.scores.precision),
                        recall: s(&r.scores.recall),
                        f_score: s(&r.scores.f_score),
                    };
                    (m.key(), json)
                })
                .collect();
            let mut out = serde_json::to_string_pretty(&scores).context("writing JSON")?;
            out.push('\n');
            out
        }
    })
}

fn evaluate(options: &Options, compare: bool) -> Result<String, Failure> {
    let config = options.smatch_config()?;
    let test = read_items(&options.test)?;
    let gold = read_items(&options.gold)?;
    let pairing = pair_corpora(&test, &gold).map_err(anyhow::Error::from)?;
    for id in &pairing.unmatched_test {
        eprintln!("warning: test entry {id} has no gold counterpart");
    }
    let mut report: ExactReport =
        evaluate_corpus(&pairing.pairs, &options.metrics(compare), &config)
            .map_err(anyhow::Error::from)?;
    for entry in &report.entries {
        if let Some(error) = &entry.error {
            eprintln!("error: entry {}: {error}", entry.id);
        }
    }
    if options.split_by_relation_avg {
        report = report.with_splits().map_err(anyhow::Error::from)?;
    }
    Ok(match (compare, options.format()) {
        (true, ReportFormat::Text) => {
            let mut out = emit_comparison(&report);
            if report.splits.is_some() {
                out.push('\n');
                out.push_str(&emit_report(&report, ReportFormat::Text));
            }
            out
        }
        (_, format) => emit_report(&report, format),
    })
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let options = match &cli.command {
        Command::Score(o) | Command::Eval(o) | Command::Compare(o) => o,
    };
    if options.test == "-" && options.gold == "-" {
        return Err(Failure::Usage("only one of the inputs can be stdin".into()));
    }
    match &cli.command {
        Command::Score(o) => score(o),
        Command::Eval(o) => evaluate(o, false),
        Command::Compare(o) => evaluate(o, true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(output) => {
            let mut stdout = io::stdout().lock();
            if stdout
                .write_all(output.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
