//! Command-line driver. Standard output carries only data; diagnostics go
//! to standard error.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error, unreadable input, bind failure |
//! | 2 | malformed generation |
//! | 3 | provider failure |
//! | 4 | redundant content rejected |
//! | 5 | outline has format violations |

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use nodemind_core::outline::{fragment_to_tree, parse_outline, validate_initial_map};
use nodemind_core::store::{self, DocumentMeta, SystemClock};
use nodemind_core::{EnrichError, EnrichmentKind, Engine, MapError, NodeId};

use crate::api::{AppState, SharedEngine};
use crate::config::{build_provider, Config, ProviderKind};

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const GENERATION: i32 = 2;
    pub const PROVIDER: i32 = 3;
    pub const REDUNDANT: i32 = 4;
    pub const VIOLATIONS: i32 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "nodemind", version, about = "Build and explore mind maps with a chat model")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct ProviderArgs {
    #[arg(long, value_enum, env = "NODEMIND_PROVIDER")]
    pub provider: Option<ProviderKind>,
    /// Response script for the scripted provider (`---` between responses).
    #[arg(long, env = "NODEMIND_SCRIPT")]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Prompt template file.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a map for a query and print it as an outline.
    Generate {
        query: String,
        /// Write the map document here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Run an AI action on one node of a saved map.
    Enrich {
        mapfile: PathBuf,
        node: NodeId,
        #[arg(long)]
        kind: EnrichmentKind,
        #[arg(long)]
        question: Option<String>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Check an outline file against the format rules.
    Validate { file: PathBuf },
    /// Print a saved map as an outline.
    Export {
        mapfile: PathBuf,
        /// Include the descendants of collapsed nodes.
        #[arg(long)]
        all: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        addr: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
    },
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

pub fn enrich_exit_code(e: &EnrichError) -> i32 {
    match e {
        EnrichError::EmptyQuery | EnrichError::EmptyQuestion | EnrichError::Map(_) => exit::USAGE,
        EnrichError::Provider(_) => exit::PROVIDER,
        EnrichError::GenerationMalformed { .. } | EnrichError::NoExamples { .. } => exit::GENERATION,
        EnrichError::RedundantContent { .. } => exit::REDUNDANT,
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, i32> {
    match path {
        Some(p) => Config::load(p).map_err(|e| fail(exit::USAGE, e)),
        None => Ok(Config::default()),
    }
}

fn apply(cfg: &mut Config, args: &ProviderArgs) {
    if let Some(k) = args.provider {
        cfg.provider.kind = k;
    }
    if let Some(s) = &args.script {
        cfg.provider.script = Some(s.clone());
        if args.provider.is_none() {
            cfg.provider.kind = ProviderKind::Scripted;
        }
    }
    if let Some(u) = &args.base_url {
        cfg.provider.base_url = u.clone();
    }
    if let Some(m) = &args.model {
        cfg.params.model = m.clone();
    }
    if let Some(v) = &args.api_key_env {
        cfg.provider.api_key_env = v.clone();
    }
    if let Some(t) = &args.templates {
        cfg.templates = Some(t.clone());
    }
}

fn engine(cfg: &Config) -> Result<SharedEngine, i32> {
    let prompts = cfg.prompts().map_err(|e| fail(exit::USAGE, e))?;
    let provider = build_provider(&cfg.provider).map_err(|e| fail(exit::USAGE, e))?;
    Ok(Engine::new(provider, prompts).with_params(cfg.params.clone()).with_options(cfg.enrich.clone()))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let mut cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match cli.command {
        Command::Generate { query, out, provider } => {
            apply(&mut cfg, &provider);
            generate(&cfg, &query, out.as_deref())
        }
        Command::Enrich { mapfile, node, kind, question, provider } => {
            apply(&mut cfg, &provider);
            enrich(&cfg, &mapfile, node, kind, question.as_deref())
        }
        Command::Validate { file } => validate(&cfg, &file),
        Command::Export { mapfile, all } => match store::load(&mapfile) {
            Ok((map, _)) => {
                println!("{}", store::export_outline(&map, all));
                exit::OK
            }
            Err(e) => fail(exit::USAGE, e),
        },
        Command::Serve { addr, data_dir, provider } => {
            apply(&mut cfg, &provider);
            if let Some(a) = addr {
                cfg.addr = a;
            }
            if let Some(d) = data_dir {
                cfg.data_dir = Some(d);
            }
            serve(&cfg)
        }
    }
}

fn generate(cfg: &Config, query: &str, out: Option<&Path>) -> i32 {
    if query.trim().is_empty() {
        return fail(exit::USAGE, "query is empty");
    }
    let engine = match engine(cfg) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let generated = match engine.generate_map(query) {
        Ok(g) => g,
        Err(e) => return fail(enrich_exit_code(&e), e),
    };
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = out {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .unwrap_or("map-1")
            .to_owned();
        if let Err(e) = store::save(&generated.map, &DocumentMeta::new(id, &SystemClock), path) {
            return fail(exit::USAGE, e);
        }
    }
    println!("{}", store::export_outline(&generated.map, true));
    exit::OK
}

fn enrich(cfg: &Config, mapfile: &Path, node: NodeId, kind: EnrichmentKind, question: Option<&str>) -> i32 {
    if kind == EnrichmentKind::Explore && question.is_none_or(|q| q.trim().is_empty()) {
        return fail(exit::USAGE, "--kind explore needs --question");
    }
    let (mut map, mut meta) = match store::load(mapfile) {
        Ok(x) => x,
        Err(e) => return fail(exit::USAGE, e),
    };
    if !map.contains(node) {
        return fail(exit::USAGE, MapError::UnknownNode(node));
    }
    let engine = match engine(cfg) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let result = match engine.enrich(&mut map, node, kind, question) {
        Ok(r) => r,
        Err(e) => return fail(enrich_exit_code(&e), e),
    };
    for w in &result.warnings {
        eprintln!("warning: {}", serde_json::to_string(w).expect("warning serializes"));
    }
    meta.touch(&SystemClock);
    if let Err(e) = store::save(&map, &meta, mapfile) {
        return fail(exit::USAGE, e);
    }
    for &top in &result.attached {
        for id in map.preorder_from(top) {
            let n = map.node(id).expect("attached node");
            println!("{}\t{}\t{}", n.id, n.depth, n.text);
        }
    }
    exit::OK
}

fn validate(cfg: &Config, file: &Path) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return fail(exit::USAGE, format!("{}: {e}", file.display())),
    };
    let frag = match parse_outline(&text) {
        Ok(f) => f,
        Err(e) => return fail(exit::USAGE, format!("{}: {e}", file.display())),
    };
    let tree = match fragment_to_tree(&frag) {
        Ok(t) => t,
        Err(e) => return fail(exit::VIOLATIONS, format!("{}: {e}", file.display())),
    };
    let mut found = frag.warnings;
    found.extend(validate_initial_map(&tree, &cfg.enrich.limits));
    for v in &found {
        println!("{v}");
    }
    if found.is_empty() {
        exit::OK
    } else {
        exit::VIOLATIONS
    }
}

fn serve(cfg: &Config) -> i32 {
    let engine = match engine(cfg) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let state = match AppState::open(engine, cfg.data_dir.clone(), Arc::new(SystemClock)) {
        Ok(s) => Arc::new(s),
        Err(e) => return fail(exit::USAGE, e),
    };
    let listener = match std::net::TcpListener::bind(&cfg.addr) {
        Ok(l) => l,
        Err(e) => return fail(exit::USAGE, format!("cannot bind {}: {e}", cfg.addr)),
    };
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => return fail(exit::USAGE, e),
    };
    let result = runtime.block_on(async move {
        listener.set_nonblocking(true)?;
        let listener = tokio::net::TcpListener::from_std(listener)?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        crate::api::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    });
    match result {
        Ok(()) => exit::OK,
        Err(e) => fail(exit::USAGE, e),
    }
}
