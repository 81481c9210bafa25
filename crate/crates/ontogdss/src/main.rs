use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use ontogdss::{router, ApiConfig, AppState};
use ontogdss_core::batch::{run_batch, BatchError};
use ontogdss_core::demo::demo_document;
use ontogdss_core::matrix_csv::parse_matrix_csv;
use ontogdss_core::workshop::DEFAULT_EXTENSION_BOUND;
use ontogdss_core::{EngineContext, FileStore};

#[derive(Parser)]
#[command(name = "ontogdss", version, about = "Group decision support engine")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the HTTP API (ONTOGDSS_BIND / ONTOGDSS_STORE override the flags).
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Maximum argument count for preferred/stable enumeration.
        #[arg(long, default_value_t = DEFAULT_EXTENSION_BOUND)]
        extension_bound: usize,
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
    },
    /// Run the command script embedded in a session file.
    Run {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the demonstration scenario as a session file.
    Demo {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Convert a CSV decision matrix to JSON.
    Matrix { input: PathBuf },
}

fn emit(text: &str, output: Option<&PathBuf>) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

async fn serve(config: ApiConfig) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(config.log_filter())))
        .init();
    let store = FileStore::open(&config.store)?;
    let context = EngineContext {
        extension_bound: config.extension_bound,
        ..EngineContext::default()
    };
    let state = AppState::from_store(context, store).map_err(|e| anyhow::anyhow!("{e}"))?;
    tracing::info!(sessions = state.session_ids().await.len(), store = %config.store.display(), "store loaded");
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Cmd::Serve {
            bind,
            store,
            extension_bound,
            verbose,
        } => ApiConfig::resolve(bind, store, extension_bound, verbose, |k| std::env::var(k).ok()).and_then(|config| {
            tokio::runtime::Runtime::new()?.block_on(serve(config))
        }),
        Cmd::Run { input, output } => match run_batch(&input, &output) {
            Ok(out) => {
                eprintln!("ok: {} results written to {}", out.results.len(), output.display());
                Ok(())
            }
            Err(e @ BatchError::Failed(_)) => {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            Err(e) => Err(e.into()),
        },
        Cmd::Demo { output } => {
            let mut text = serde_json::to_string_pretty(&demo_document()).expect("demo serializes");
            text.push('\n');
            emit(&text, output.as_ref())
        }
        Cmd::Matrix { input } => fs::read_to_string(&input)
            .with_context(|| format!("cannot read {}", input.display()))
            .and_then(|text| Ok(parse_matrix_csv(&text)?))
            .and_then(|m| {
                let mut text = serde_json::to_string_pretty(&m)?;
                text.push('\n');
                emit(&text, None)
            }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
