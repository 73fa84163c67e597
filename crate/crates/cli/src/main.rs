//! `typify`: command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use typify_core::diag::Diagnostics;
use typify_core::eval::{load_predictions, load_truth, score, strip_project, DEFAULT_KS};
use typify_core::exec::Exec;
use typify_core::pipeline::{kind_counts, run_pipeline, ConfigOverrides, RunConfig};
use typify_core::project::Project;
use typify_core::retrieval::{build_index, RetrievalIndex, DEFAULT_WINDOW};

#[derive(Parser)]
#[command(name = "typify", version, about = "Usage-driven type inference for Python projects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer types for every slot in a project.
    Infer {
        root: PathBuf,
        /// Predictions file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        no_retrieval: bool,
        /// Fixpoint pass cap per import cycle.
        #[arg(long)]
        passes: Option<usize>,
        #[arg(long)]
        union_cap: Option<usize>,
        #[arg(long)]
        depth_cap: Option<usize>,
        /// Also list slots without any prediction.
        #[arg(long)]
        emit_empty: bool,
        /// Parse on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Print the module dependency graph and analysis schedule as JSON.
    Graph {
        root: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build or inspect a retrieval index.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Write an annotation-free copy of a project plus truth.json.
    Strip {
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Let unqualified class names in the truth match qualified
        /// predictions by short name (the default).
        #[arg(long, overrides_with = "strict_user_types")]
        lenient_user_types: bool,
        /// Require fully qualified class names to agree.
        #[arg(long)]
        strict_user_types: bool,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    Build {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
    },
    Stats {
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LogLevel {
    Quiet,
    Warn,
    Debug,
}

impl LogLevel {
    fn from_env() -> Result<LogLevel> {
        match std::env::var("TYPIFY_LOG").as_deref() {
            Err(_) | Ok("") | Ok("warn") => Ok(LogLevel::Warn),
            Ok("quiet") => Ok(LogLevel::Quiet),
            Ok("debug") => Ok(LogLevel::Debug),
            Ok(other) => bail!("TYPIFY_LOG must be quiet, warn or debug, not `{other}`"),
        }
    }
}

struct Log(LogLevel);

impl Log {
    fn diagnostics(&self, d: &Diagnostics) {
        if self.0 >= LogLevel::Warn {
            for item in d.iter() {
                eprintln!("{item}");
            }
        }
    }

    fn debug(&self, msg: impl AsRef<str>) {
        if self.0 >= LogLevel::Debug {
            eprintln!("typify: {}", msg.as_ref());
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli, log: &Log) -> Result<()> {
    match cli.command {
        Command::Infer {
            root,
            out,
            index,
            top_k,
            no_retrieval,
            passes,
            union_cap,
            depth_cap,
            emit_empty,
            sequential,
        } => {
            let flags = ConfigOverrides {
                index_dir: index,
                top_k,
                pass_cap: passes,
                union_cap,
                depth_cap,
                retrieval: no_retrieval.then_some(false),
                emit_empty: emit_empty.then_some(true),
                output: out,
                ..Default::default()
            };
            let cfg = RunConfig::resolve(&root, &flags)?;
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            let result = run_pipeline(&cfg, exec)?;
            log.diagnostics(&result.diagnostics);
            for (stage, ms) in &result.metadata.stage_ms {
                log.debug(format!("stage {stage}: {ms:.1} ms"));
            }
            log.debug(format!(
                "{} modules, {} slots, {} predicted {:?}",
                result.metadata.module_count,
                result.metadata.slot_count,
                result.metadata.predicted_slots,
                kind_counts(&result.predictions)
            ));
            match &cfg.output {
                Some(p) => result.write(p)?,
                None => print!("{}", result.predictions_json()),
            }
        }
        Command::Graph { root, out } => {
            let project = Project::load(&root, Exec::Parallel)?;
            log.diagnostics(&project.diagnostics);
            let mut text = serde_json::to_string_pretty(&project.graph.dump())?;
            text.push('\n');
            write_or_print(out.as_deref(), &text)?;
        }
        Command::Index { command: IndexCommand::Build { corpus, out, window } } => {
            if window < 1 {
                bail!("--window must be at least 1");
            }
            let (index, diags) = build_index(&corpus, window, Exec::Parallel)?;
            log.diagnostics(&diags);
            index.save(&out)?;
            log.debug(format!("indexed {} docs into {}", index.len(), out.display()));
        }
        Command::Index { command: IndexCommand::Stats { dir } } => {
            let mut diags = Diagnostics::new();
            let index = RetrievalIndex::load(&dir, &mut diags)?;
            log.diagnostics(&diags);
            println!("docs: {}", index.len());
            println!("vocabulary: {}", index.vocabulary_size());
            println!("window: {}", index.window);
            let mut hist: Vec<(String, usize)> = index.type_histogram().into_iter().collect();
            hist.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            println!("types:");
            for (ty, n) in hist {
                println!("{n:>8}  {ty}");
            }
        }
        Command::Strip { root, out } => {
            let mut diags = Diagnostics::new();
            let (_, report) = strip_project(&root, &out, &mut diags)?;
            log.diagnostics(&diags);
            println!(
                "{} files, {} truth entries ({} Any/None excluded, {} repeats, {} runtime-position annotations)",
                report.files, report.entries, report.excluded, report.duplicates, report.runtime_sites
            );
        }
        Command::Eval { pred, truth, out, ks, lenient_user_types: _, strict_user_types } => {
            let ks = ks.unwrap_or_else(|| DEFAULT_KS.to_vec());
            if ks.is_empty() || ks.contains(&0) {
                bail!("--ks needs positive values");
            }
            let report = score(&load_predictions(&pred)?, &load_truth(&truth)?, &ks, !strict_user_types);
            if let Some(p) = &out {
                write_or_print(Some(p), &report.to_json())?;
            }
            print!("{}", report.to_table());
            let all = report.task("all");
            if report.lenient_user_types {
                println!("short-name matches: {}", all.lenient_hits);
            }
            if all.skipped > 0 {
                println!("skipped (unparseable truth): {}", all.skipped);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = match LogLevel::from_env() {
        Ok(l) => Log(l),
        Err(e) => {
            eprintln!("typify: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(cli, &log) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("typify: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
