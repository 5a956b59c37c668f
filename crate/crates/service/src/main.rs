use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use shapegpt_agent::{run_session, Agents, EventLog, FaultMode, RemoteClient, RemoteConfig, SessionConfig};
use shapegpt_bench::{compute_metrics, gen_suite, load_task, load_task_suite, run_suite, FaultSpec, LiveRunner, Runner, ScriptedRunner, TraceReplayRunner};
use shapegpt_service::{extract_upload, AppState, ClientFactory, RemoteFactory, ScriptedFactory, ServiceConfig, DEFAULT_PORT, INPUT_DIR};
use shapegpt_tools::{export_schemas, load_registry, write_schema_dir, DocFormat, Registry, Workspace};

#[derive(Parser)]
#[command(name = "shapegpt", version, about = "Shapefile tasks from natural-language instructions")]
struct Cli {
    /// Load tool schemas from this directory instead of the built-in set.
    #[arg(long, global = true)]
    schemas: Option<PathBuf>,
    /// Answer every task directly, without the planner.
    #[arg(long, global = true)]
    no_planner: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one instruction against a zipped shapefile.
    Run {
        zip: PathBuf,
        prompt: String,
        /// Working directory for inputs and outputs.
        #[arg(long)]
        workdir: Option<PathBuf>,
    },
    /// Evaluate a task suite.
    Bench {
        suite: PathBuf,
        /// Scripted clients built from each task's plan (the default).
        #[arg(long, conflicts_with_all = ["live", "replay"])]
        scripted: bool,
        /// Chat-completions endpoint from SHAPEGPT_LLM_* variables.
        #[arg(long, conflicts_with = "replay")]
        live: bool,
        /// Invoke the ground-truth traces directly.
        #[arg(long)]
        replay: bool,
        /// Probability that a scripted worker corrupts a first attempt.
        #[arg(long)]
        fault_p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the metrics report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Inspect or export the tool registry.
    Tools {
        #[command(subcommand)]
        action: ToolsCmd,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "SHAPEGPT_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Drive sessions with the scripted plan of this suite task.
        #[arg(long)]
        scripted_task: Option<PathBuf>,
        /// Keep session sandboxes here.
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Write the synthetic task suite.
    GenSuite { dir: PathBuf },
}

#[derive(Subcommand)]
enum ToolsCmd {
    List,
    Export {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write tools.yaml and tools.json into this directory.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Yaml,
    Json,
    Wire,
}

fn registry(cli: &Cli) -> Result<Registry> {
    Ok(match &cli.schemas {
        Some(d) => load_registry(d).with_context(|| format!("loading schemas from {}", d.display()))?,
        None => Registry::builtin(),
    })
}

fn session_cfg(cli: &Cli) -> SessionConfig {
    SessionConfig { planner_enabled: !cli.no_planner, ..SessionConfig::default() }
}

fn remote() -> Result<RemoteConfig> {
    RemoteConfig::from_env().context("SHAPEGPT_LLM_URL is not set")
}

fn cmd_run(cli: &Cli, zip: &Path, prompt: &str, workdir: Option<PathBuf>) -> Result<()> {
    let reg = registry(cli)?;
    let cfg = session_cfg(cli);
    let remote = remote()?;
    let dir = workdir.unwrap_or_else(|| PathBuf::from(format!("shapegpt-{}", &uuid::Uuid::new_v4().simple().to_string()[..8])));
    std::fs::create_dir_all(&dir)?;
    let bytes = std::fs::read(zip).with_context(|| format!("reading {}", zip.display()))?;
    let inputs = extract_upload(&bytes, &dir.join(INPUT_DIR), &dir)?;
    let mut ws = Workspace::new(&dir)?;
    let log = EventLog::new();
    let follower = {
        let log = log.clone();
        std::thread::spawn(move || {
            let mut after = 0;
            loop {
                let (events, closed) = log.wait_since(after, Duration::from_millis(200));
                for e in events {
                    after = e.seq;
                    println!("{}", e.to_json());
                }
                if closed {
                    return;
                }
            }
        })
    };
    let mut planner = RemoteClient::new(remote.clone());
    let mut worker = RemoteClient::new(remote);
    let out = run_session(prompt, &inputs, &mut ws, &reg, &cfg, Agents { planner: &mut planner, worker: &mut worker }, &log);
    let _ = follower.join();
    for a in &out.artifacts {
        eprintln!("artifact: {}", a.display());
    }
    if !out.success {
        bail!("session failed: {}", out.final_summary);
    }
    Ok(())
}

fn cmd_bench(cli: &Cli, suite: &Path, live: bool, replay: bool, fault_p: Option<f64>, seed: u64, json: Option<PathBuf>) -> Result<()> {
    let reg = registry(cli)?;
    let cfg = session_cfg(cli);
    let s = load_task_suite(suite, &reg)?;
    let runner: Box<dyn Runner> = if replay {
        Box::new(TraceReplayRunner { cfg })
    } else if live {
        Box::new(LiveRunner { cfg, remote: remote()? })
    } else {
        Box::new(ScriptedRunner {
            cfg,
            fault: fault_p.map(|p| FaultSpec { seed, p, mode: FaultMode::GiveUp }),
            max_attempts: if fault_p.is_some() { 10 } else { 3 },
        })
    };
    let outcomes = run_suite(&s, &reg, runner.as_ref());
    for o in &outcomes {
        let mark = if o.success { "ok  " } else { "FAIL" };
        println!("{mark} {} {}", o.task_id, o.failure.as_deref().unwrap_or(""));
    }
    let traces: Vec<_> = s.tasks.iter().map(|t| t.trace.clone()).collect();
    let m = compute_metrics(&outcomes, &traces);
    print!("{}", m.to_table());
    if let Some(p) = json {
        std::fs::write(&p, serde_json::to_string_pretty(&m)? + "\n")?;
    }
    Ok(())
}

fn cmd_tools(cli: &Cli, action: &ToolsCmd) -> Result<()> {
    let reg = registry(cli)?;
    match action {
        ToolsCmd::List => {
            for t in reg.tools() {
                println!("{:<28} {:<16} {}", t.name, t.category, t.description);
            }
        }
        ToolsCmd::Export { dir: Some(d), .. } => write_schema_dir(&reg, d)?,
        ToolsCmd::Export { format, dir: None } => {
            let f = match format {
                Format::Yaml => DocFormat::Yaml,
                Format::Json => DocFormat::Json,
                Format::Wire => DocFormat::Wire,
            };
            print!("{}", export_schemas(&reg, f));
        }
    }
    Ok(())
}

fn cmd_serve(cli: &Cli, host: &str, port: u16, scripted_task: Option<PathBuf>, root: Option<PathBuf>) -> Result<()> {
    let reg = registry(cli)?;
    let factory: Arc<dyn ClientFactory> = match scripted_task {
        Some(dir) => Arc::new(ScriptedFactory { steps: load_task(&dir, &reg)?.plan_steps(), max_attempts: 3 }),
        None => Arc::new(RemoteFactory(remote()?)),
    };
    let mut cfg = ServiceConfig::from_env();
    cfg.session = session_cfg(cli);
    cfg.root = root;
    let state = Arc::new(AppState::new(cfg, reg, factory)?);
    let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host/port")?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let (local, server) = shapegpt_service::bind(addr, state).await?;
        tracing::info!("listening on http://{local}");
        eprintln!("listening on http://{local}");
        server.await
    })?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Run { zip, prompt, workdir } => cmd_run(&cli, zip, prompt, workdir.clone()),
        Cmd::Bench { suite, scripted: _, live, replay, fault_p, seed, json } => {
            cmd_bench(&cli, suite, *live, *replay, *fault_p, *seed, json.clone())
        }
        Cmd::Tools { action } => cmd_tools(&cli, action),
        Cmd::Serve { port, host, scripted_task, root } => cmd_serve(&cli, host, *port, scripted_task.clone(), root.clone()),
        Cmd::GenSuite { dir } => {
            let s = gen_suite(dir, &registry(&cli)?)?;
            println!("wrote {} tasks to {}", s.tasks.len(), dir.display());
            Ok(())
        }
    }
}
