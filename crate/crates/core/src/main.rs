use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use araweat::audit::{self, AuditConfig, AuditReport, ReportFormat};
use araweat::embedding::{self, Format, LoadOptions};
use araweat::sts;

#[derive(Parser)]
#[command(name = "araweat", version, about = "Measure social bias in word embedding spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpaceArgs {
    /// Embedding file (word2vec/fastText text format unless --binary)
    #[arg(long)]
    space: PathBuf,
    /// Read the word2vec binary format
    #[arg(long)]
    binary: bool,
    /// Load at most this many rows
    #[arg(long)]
    limit: Option<usize>,
}

impl SpaceArgs {
    fn load(&self) -> Result<embedding::EmbeddingSpace, embedding::EmbeddingError> {
        let format = if self.binary { Format::Binary } else { Format::Text };
        let opts = LoadOptions {
            limit: self.limit,
            ..LoadOptions::default()
        };
        embedding::load(&self.space, format, &opts)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured test against every configured space
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// json, csv or markdown
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
    /// Sentence similarity quality of one space
    Sts {
        #[command(flatten)]
        space: SpaceArgs,
        /// TSV file: gold<TAB>sentence_a<TAB>sentence_b
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Correlate per-cell averages of sub-corpus reports with a whole-corpus report
    Compare {
        #[arg(long)]
        conc: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        sub: Vec<PathBuf>,
    },
    /// Dimensions, vocabulary size and norm statistics of a space
    Inspect {
        #[command(flatten)]
        space: SpaceArgs,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Audit { config, out, format } => {
            let config = match AuditConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let report = match audit::run_audit(&config) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            if let Err(e) = audit::emit_report(&report, format, &out) {
                return fail(e);
            }
            if report.all_spaces_failed() {
                eprintln!("error: every space failed to load");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Command::Sts { space, pairs } => {
            let loaded = match space.load() {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let result = sts::load_pairs(&pairs).and_then(|p| sts::sts_pearson(&p, &loaded, &loaded.policy()));
            match result {
                Ok(r) => {
                    print_json(&r);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Compare { conc, sub } => {
            let conc = match AuditReport::load(&conc) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let subs: Result<Vec<AuditReport>, _> = sub.iter().map(|p| AuditReport::load(p)).collect();
            let subs = match subs {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match audit::avg_vs_conc(&subs, &conc) {
                Ok(out) => {
                    print_json(&out);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Inspect { space } => match space.load() {
            Ok(s) => {
                print_json(&serde_json::json!({
                    "name": s.name(),
                    "dim": s.dim(),
                    "vocab_size": s.len(),
                    "norms": s.norm_stats(),
                    "meta": s.meta(),
                }));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
