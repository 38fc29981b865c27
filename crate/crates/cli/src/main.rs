//! `cxnforge`: one binary for the whole pipeline.
//!
//! Exit status: 0 on success, 1 when error diagnostics were reported, 2 on
//! usage or I/O errors. Data goes to stdout (or `-o`), diagnostics to
//! stderr.

mod commands;
mod config;
mod load;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::filter::LevelFilter;

use config::Config;
use output::{Format, Report};

#[derive(Debug, Parser)]
#[command(name = "cxnforge", version, about = "Construction-grammar tooling over UD treebanks")]
pub struct Cli {
    /// Output format for stdout and stderr.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Config file (default: ./cxnforge.toml if present).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check conll-c, yaml, CoNLL-U files or entry directories.
    Validate(ValidateArgs),
    /// Re-serialize a file in canonical form.
    Normalize(NormalizeArgs),
    /// Find constructs of the given cxns in a corpus.
    Match(MatchArgs),
    /// Write grew-style queries for cxns.
    EmitQueries(EmitArgs),
    /// Construction graph maintenance.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Add parent-cxn marks implied by the graph.
    Propagate(PropagateArgs),
    /// Write accepted matches into a corpus as cxn marks.
    Annotate(AnnotateArgs),
    /// Split a corpus into train/dev/test by group key.
    Split(SplitArgs),
    /// Candidate review queue.
    #[command(subcommand)]
    Review(ReviewCommand),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Re-check the cxn marks of CoNLL-U inputs against this graph.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    pub file: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// conll-c file, yaml entry or directory of entries.
    pub cxns: PathBuf,
    pub corpus: PathBuf,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Use the brute-force reference matcher (small inputs only).
    #[arg(long)]
    pub oracle: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    pub cxns: PathBuf,
    /// Print the queries instead of writing one file per cxn.
    #[arg(long)]
    pub stdout: bool,
    /// Directory for the query files.
    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Report consistency problems.
    Check { graph: PathBuf },
    /// Add or replace cxns and update the vertical links.
    Insert {
        /// Directory of yaml entries.
        graph: PathBuf,
        cxns: PathBuf,
        /// Report the delta without saving.
        #[arg(long)]
        dry_run: bool,
    },
    /// Test whether one cxn subsumes another.
    Subsumes { graph: PathBuf, parent: u32, child: u32 },
    /// Print the graph as DOT (text) or JSON.
    Export { graph: PathBuf },
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    pub graph: PathBuf,
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    pub corpus: PathBuf,
    /// Match report (JSON lines or a JSON array).
    pub matches: PathBuf,
    /// skip-existing, merge or replace.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub corpus: PathBuf,
    /// Comma-separated train,dev,test ratios.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metadata key to group by.
    #[arg(long)]
    pub key: Option<String>,
    /// Only sentences marked for this cxn.
    #[arg(long)]
    pub cxn: Option<u32>,
    /// Directory for the split files.
    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Add matches to the queue as pending candidates.
    Enqueue {
        queue: PathBuf,
        matches: PathBuf,
        corpus: PathBuf,
        /// Keep a deterministic sample of this many new candidates.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Record a verdict for a candidate.
    Decide {
        queue: PathBuf,
        candidate: String,
        /// accept(ed) or reject(ed).
        verdict: String,
        #[arg(long)]
        reviewer: Option<String>,
        #[arg(long)]
        note: Option<String>,
        /// Fail unless the candidate currently has this status.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Per-cxn counts and accepted/rejected overlaps.
    Stats { queue: PathBuf },
    /// Print the accepted candidates as a match report.
    Export {
        queue: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve the review API (and the UI bundle).
    Serve {
        queue: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        bind: Option<String>,
        /// Directory holding the built UI.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { LevelFilter::INFO } else { LevelFilter::WARN };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(cli.format.unwrap_or_default(), &e),
    };
    let format = cli.format.or(config.format).unwrap_or_default();
    let mut report = Report::default();
    match commands::run(cli.command, &config, format, &mut report) {
        Ok(()) => {
            report.print(format);
            if report.errors() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            report.print(format);
            fail(format, &e)
        }
    }
}

fn fail(format: Format, e: &anyhow::Error) -> ExitCode {
    match format {
        Format::Text => eprintln!("error: {:#}", e),
        Format::Json => eprintln!("{}", serde_json::json!({ "error": format!("{:#}", e) })),
    }
    ExitCode::from(2)
}
