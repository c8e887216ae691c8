use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bpforge_core::harness::{
    build_oracle, emit_report, load_dataset, load_script, render_table, run, BackendKind, HarnessError,
    ProblemRange, RunConfig, Task,
};
use bpforge_core::retrieval::build_index;
use clap::Parser;

const DEFAULT_CORPUS: &str = "corpus";

/// Verify and solve Bongard problems with synthesized classifier programs.
#[derive(Debug, Parser)]
#[command(name = "bpforge", version)]
struct Cli {
    /// verify | solve | invert | eval
    task: Task,
    /// Dataset root (manifest.json or one directory per problem).
    #[arg(long)]
    dataset: PathBuf,
    /// live | replay | scripted
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Response cache directory (read by replay, written by live).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inclusive problem id span, e.g. `2..100`.
    #[arg(long)]
    problems: Option<ProblemRange>,
    /// Flat TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Example-program corpus (defaults to ./corpus when present).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Scripted replies (JSON list of {purpose?, contains?, response}).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Directory for report.txt, records.jsonl and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    cfg.task = cli.task;
    if let Some(b) = cli.backend {
        cfg.backend = b;
    }
    if let Some(c) = &cli.cache {
        cfg.cache = Some(c.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.problems {
        cfg.problems = Some(r);
    }
    cfg.check().map_err(HarnessError::Config)?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = config(cli)?;
    let manifest = load_dataset(&cli.dataset)?;
    let corpus = cli.corpus.clone().or_else(|| {
        let default = Path::new(DEFAULT_CORPUS);
        default.join("manifest").is_file().then(|| default.to_path_buf())
    });
    let index = match &corpus {
        Some(dir) => Some(build_index(dir)?),
        None => {
            log::warn!("no example corpus; synthesis prompts will carry no example program");
            None
        }
    };
    let script = cli.script.as_deref().map(load_script).transpose()?;
    let oracle = build_oracle(&cfg, script)?;
    let report = run(&cfg, &manifest, &oracle, index.as_ref())?;
    print!("{}", render_table(&report));
    if let Some(out) = &cli.out {
        for path in emit_report(&report, out)? {
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bpforge: {e}");
            match e {
                HarnessError::Manifest(_) => ExitCode::from(2),
                e if e.is_oracle_failure() => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
