use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use modhub_core::service::{replay_file, BoxedLog};
use modhub_core::sim::{compare_policies, run_simulation_traced, SimConfig};
use modhub_core::{
    state_hash, EventLog, MetricsSnapshot, ModelConfig, PolicyConfig, Service, ServiceConfig,
    StateHash,
};

#[derive(Parser)]
#[command(
    name = "modhub",
    version,
    about = "Hub-and-spoke content moderation service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rebuild state from an event log and print its hash.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Fail unless the replayed state hash equals this value.
        #[arg(long)]
        expect_hash: Option<String>,
        /// Service or simulation config whose `model` and `policy` produced the log.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay a log and write its metrics snapshot.
    Eval {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a seeded simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON array of policies to run on the same scenario.
        #[arg(long, conflicts_with = "trace")]
        compare: Option<PathBuf>,
        /// Write the run's event log here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

/// The parts of a config file that determine how a log folds.
#[derive(Default, Deserialize)]
struct FoldSettings {
    #[serde(default)]
    model: ModelConfig,
    #[serde(default)]
    policy: PolicyConfig,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn fold_settings(config: Option<&Path>) -> Result<FoldSettings> {
    let settings: FoldSettings = match config {
        Some(path) => read_json(path)?,
        None => FoldSettings::default(),
    };
    settings.model.validate()?;
    settings.policy.validate()?;
    Ok(settings)
}

fn replay(log: &Path, config: Option<&Path>) -> Result<modhub_core::PlatformState> {
    let s = fold_settings(config)?;
    replay_file(log, s.model, s.policy).with_context(|| format!("replaying {}", log.display()))
}

#[derive(Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    metrics: MetricsSnapshot,
    state_hash: String,
}

async fn serve(config: &Path) -> Result<()> {
    let cfg = ServiceConfig::load(config)?;
    std::fs::create_dir_all(&cfg.data_dir)
        .with_context(|| format!("creating {}", cfg.data_dir.display()))?;
    let service = Service::open(&cfg).context("opening event log")?;
    eprintln!(
        "replayed {} events, state {}",
        service.state().last_seq(),
        service.hash()
    );
    let app = modhub_cli::router(modhub_cli::shared(service), cfg.console_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", cfg.port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Serve { config } => tokio::runtime::Runtime::new()?.block_on(serve(&config)),
        Command::Replay {
            log,
            expect_hash,
            config,
        } => {
            let state = replay(&log, config.as_deref())?;
            let hash = state_hash(&state);
            println!("{hash}");
            if let Some(expected) = expect_hash {
                let expected: StateHash = expected.parse().context("--expect-hash")?;
                if expected != hash {
                    bail!("state hash mismatch: expected {expected}, replayed {hash}");
                }
            }
            Ok(())
        }
        Command::Eval { log, out, config } => {
            let state = replay(&log, config.as_deref())?;
            let output = EvalOutput {
                metrics: MetricsSnapshot::of(&state),
                state_hash: state_hash(&state).to_string(),
            };
            write_json(&out, &output)
        }
        Command::Simulate {
            config,
            seed,
            out,
            compare,
            trace,
        } => {
            let cfg = SimConfig {
                seed,
                ..read_json(&config)?
            };
            match compare {
                Some(path) => {
                    let policies: Vec<PolicyConfig> = read_json(&path)?;
                    write_json(&out, &compare_policies(&cfg, &policies)?)
                }
                None => {
                    let log: Option<BoxedLog> = match trace {
                        Some(path) => {
                            let file = File::create(&path)
                                .with_context(|| format!("creating {}", path.display()))?;
                            Some(EventLog::new(Box::new(BufWriter::new(file))))
                        }
                        None => None,
                    };
                    write_json(&out, &run_simulation_traced(&cfg, log)?)
                }
            }
        }
    }
}
