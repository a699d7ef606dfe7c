use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tomigo::fixtures::load_fixtures;
use tomigo::http_provider::{sniff_media_type, HttpProvider};
use tomigo::store::Project;
use tomigo::Service;
use tomigo_core::graph::{self, ConceptGraph, GraphPatch, Node, PatchOp, Provenance};
use tomigo_core::provider::{media_type_for_extension, ImageData, FixtureSet, MockProvider, Provider};
use tomigo_core::schema::NodeRole;

const MOCK_CURSOR: &str = ".mock-cursor.json";
const TRANSCRIPT: &str = "transcript.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderKind {
    Mock,
    Http,
}

#[derive(Debug, Parser)]
#[command(name = "tomigo", version, about = "Design-concept graph engine: build, refine and realign design concepts")]
struct Cli {
    /// Model backend.
    #[arg(long, value_enum, default_value = "mock", global = true)]
    provider: ProviderKind,
    /// Fixture directory for the mock provider.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Project directory.
    #[arg(long, global = true, default_value = ".")]
    project: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a project from a written brief and optional reference images.
    Init {
        /// What is being designed, e.g. "book cover".
        #[arg(long = "type", default_value = "design")]
        design_type: String,
        #[arg(long, conflicts_with = "brief_file")]
        brief: Option<String>,
        #[arg(long)]
        brief_file: Option<PathBuf>,
        images: Vec<PathBuf>,
    },
    /// Add a reference image.
    AddImage { path: PathBuf },
    /// Build the concept graph from the brief and the reference images.
    Synthesize,
    /// Print the project state.
    Show {
        #[arg(long)]
        json: bool,
    },
    /// Edit the graph directly.
    #[command(subcommand)]
    Node(NodeCommand),
    /// Send a chat message; the graph is updated to reflect it.
    Chat { text: String },
    /// Ask for a clarifying question.
    Ask,
    /// Generate a new design from the graph.
    Generate {
        /// Send only the brief, bypassing the graph (comparison baseline).
        #[arg(long)]
        direct: bool,
    },
    /// Realign a design with the current graph.
    UpdateDesign {
        /// Design id; defaults to the latest design.
        design: Option<String>,
    },
    /// Realize or emphasize one node in a design.
    ApplyNode {
        node: String,
        #[arg(long)]
        design: Option<String>,
    },
    /// Validate the current graph, or a graph file.
    Validate { file: Option<PathBuf> },
    /// Write the current graph as canonical JSON.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the REST API for every project under a root directory.
    Serve {
        #[arg(long, default_value = "projects")]
        root: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

impl Command {
    fn calls_provider(&self) -> bool {
        matches!(
            self,
            Command::Synthesize
                | Command::Chat { .. }
                | Command::Ask
                | Command::Generate { .. }
                | Command::UpdateDesign { .. }
                | Command::ApplyNode { .. }
                | Command::Serve { .. }
        )
    }
}

#[derive(Debug, Subcommand)]
enum NodeCommand {
    Edit { id: String, description: String },
    Add {
        #[arg(value_name = "TYPE")]
        type_key: String,
        description: String,
    },
    Rm { id: String },
    Lock {
        id: String,
        #[arg(long)]
        unlock: bool,
    },
}

enum Backend {
    Mock(Arc<MockProvider>),
    Http(Arc<HttpProvider>),
    /// Commands that never reach a provider run without fixtures; the
    /// stored mock cursor must be left untouched.
    Offline(Arc<MockProvider>),
}

impl Backend {
    fn provider(&self) -> Arc<dyn Provider> {
        match self {
            Backend::Mock(p) | Backend::Offline(p) => p.clone(),
            Backend::Http(p) => p.clone(),
        }
    }

    /// Persists the mock cursor so the next invocation continues the
    /// scripted session, and appends this run's transcript.
    fn finish(&self, project_dir: &Path) -> Result<()> {
        if !project_dir.is_dir() || matches!(self, Backend::Offline(_)) {
            return Ok(());
        }
        if let Backend::Mock(m) = self {
            let cursor = serde_json::to_string(&m.cursor())?;
            fs::write(project_dir.join(MOCK_CURSOR), cursor).context("writing mock cursor")?;
        }
        let provider = self.provider();
        let log = provider.transcript().to_jsonl();
        if !log.is_empty() {
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(project_dir.join(TRANSCRIPT))
                .context("opening transcript")?;
            f.write_all(log.as_bytes())?;
        }
        Ok(())
    }
}

fn backend(cli: &Cli, cursor_dir: Option<&Path>) -> Result<Backend> {
    match cli.provider {
        ProviderKind::Mock if cli.fixtures.is_none() && !cli.command.calls_provider() => {
            Ok(Backend::Offline(Arc::new(MockProvider::new(FixtureSet::new()))))
        }
        ProviderKind::Mock => {
            let dir = cli.fixtures.as_ref().context("--provider=mock needs --fixtures=<dir>")?;
            let fixtures = load_fixtures(dir).with_context(|| format!("loading fixtures from {}", dir.display()))?;
            let mut mock = MockProvider::new(fixtures);
            if let Some(path) = cursor_dir.map(|d| d.join(MOCK_CURSOR)).filter(|p| p.is_file()) {
                let cursor: BTreeMap<String, usize> = serde_json::from_slice(&fs::read(&path)?)
                    .with_context(|| format!("reading {}", path.display()))?;
                mock = mock.with_cursor(cursor);
            }
            Ok(Backend::Mock(Arc::new(mock)))
        }
        ProviderKind::Http => Ok(Backend::Http(Arc::new(HttpProvider::from_env()?))),
    }
}

fn read_image(path: &Path) -> Result<ImageData> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let media_type = path
        .extension()
        .and_then(|e| e.to_str())
        .and_then(media_type_for_extension)
        .unwrap_or_else(|| sniff_media_type(&bytes));
    Ok(ImageData::new(media_type, bytes))
}

/// Splits a project directory into the service root and project id.
fn locate(project: &Path) -> Result<(PathBuf, String)> {
    let abs = if project.is_absolute() { project.to_path_buf() } else { std::env::current_dir()?.join(project) };
    let abs = abs.components().collect::<PathBuf>();
    let id = abs
        .file_name()
        .and_then(|n| n.to_str())
        .context("project path must name a directory")?
        .to_string();
    let root = abs.parent().context("project path has no parent")?.to_path_buf();
    Ok((root, id))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Command::Serve { root, addr } = &cli.command {
        fs::create_dir_all(root)?;
        let backend = backend(&cli, None)?;
        let service = Arc::new(Service::new(root.clone(), backend.provider()));
        let rt = tokio::runtime::Runtime::new()?;
        return rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind(addr).await?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            axum::serve(listener, tomigo::api::router(service)).await?;
            Ok(())
        });
    }
    if let Command::Validate { file: Some(file) } = &cli.command {
        let bytes = fs::read(file).with_context(|| format!("reading {}", file.display()))?;
        let g = graph::deserialize(&bytes).with_context(|| format!("decoding {}", file.display()))?;
        return report_validation(&g);
    }

    let (root, id) = locate(&cli.project)?;
    let project_dir = root.join(&id);
    let backend = backend(&cli, Some(&project_dir))?;
    let service = Service::new(root, backend.provider());
    let result = run(&cli, &service, &id);
    backend.finish(&project_dir)?;
    result
}

fn run(cli: &Cli, service: &Service, id: &str) -> Result<()> {
    match &cli.command {
        Command::Init { design_type, brief, brief_file, images } => {
            let text = match (brief, brief_file) {
                (Some(t), _) => t.clone(),
                (None, Some(p)) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                (None, None) => bail!("init needs --brief or --brief-file"),
            };
            fs::create_dir_all(service.root())?;
            let images = images.iter().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
            service.create_project(Some(id), design_type, &text, &images)?;
            println!("created project {id} with {} image(s)", images.len());
        }
        Command::AddImage { path } => {
            let index = service.add_image(id, read_image(path)?)?;
            println!("added image {index}");
        }
        Command::Synthesize => {
            let r = service.synthesize(id)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!("graph v{}: {} nodes, {} edges", r.graph.version, r.graph.nodes.len(), r.graph.edges.len());
            if r.constraint_report.is_empty() {
                println!("all synthesis constraints satisfied");
            } else {
                for v in &r.constraint_report.violations {
                    println!("unresolved: {}", v.detail);
                }
            }
        }
        Command::Show { json } => {
            let project = service.snapshot(id)?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&project.snapshot_value())?);
            } else {
                print_project(service, &project);
            }
        }
        Command::Node(cmd) => {
            let op = match cmd {
                NodeCommand::Edit { id, description } => {
                    PatchOp::edit(id.as_str(), description.as_str(), Provenance::user_edit(description.as_str()))
                }
                NodeCommand::Add { type_key, description } => {
                    if !service.schema().contains(type_key) {
                        bail!("unknown node type `{type_key}`");
                    }
                    PatchOp::add_node(
                        Node::new("", type_key.as_str(), description.as_str())
                            .with_provenance(Provenance::user_edit(description.as_str())),
                    )
                }
                NodeCommand::Rm { id } => PatchOp::remove(id.as_str()),
                NodeCommand::Lock { id, unlock } => PatchOp::set_lock(id.as_str(), !unlock),
            };
            let r = service.patch_graph(id, GraphPatch::new(vec![op]))?;
            if let Some(c) = r.conflicts.rejected.first() {
                bail!("rejected: {:?}", c.reason);
            }
            println!("graph v{}", r.graph.version);
        }
        Command::Chat { text } => {
            let r = service.handle_user_message(id, text)?;
            println!("{}", r.summary);
        }
        Command::Ask => {
            let q = service.next_question(id)?;
            println!("{}", q.text);
            println!("(about: {})", q.target_type_keys.join(", "));
        }
        Command::Generate { direct } => {
            let r = service.generate(id, *direct)?;
            print_design(service, id, &r.design_id)?;
        }
        Command::UpdateDesign { design } => {
            let design = resolve_design(service, id, design.as_deref())?;
            let r = service.update_design(id, &design)?;
            for g in &r.gaps {
                println!("gap {}: {}", g.node_id, g.gap);
            }
            print_design(service, id, &r.design_id)?;
        }
        Command::ApplyNode { node, design } => {
            let design = resolve_design(service, id, design.as_deref())?;
            let r = service.apply_node(id, &design, node)?;
            print_design(service, id, &r.design_id)?;
        }
        Command::Validate { .. } => {
            let project = service.snapshot(id)?;
            report_validation_with(service, project.graph())?;
        }
        Command::Export { out } => {
            let project = service.snapshot(id)?;
            let bytes = graph::serialize_canonical(project.graph());
            match out {
                Some(path) => fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(&bytes)?,
            }
        }
        Command::Serve { .. } => unreachable!("handled before project lookup"),
    }
    Ok(())
}

fn resolve_design(service: &Service, id: &str, design: Option<&str>) -> Result<String> {
    if let Some(d) = design {
        return Ok(d.to_string());
    }
    let project = service.snapshot(id)?;
    project.designs.last().map(|d| d.id.clone()).context("project has no designs yet; run `generate` first")
}

fn print_design(service: &Service, id: &str, design_id: &str) -> Result<()> {
    let project = service.snapshot(id)?;
    let d = project.design(design_id).context("design vanished")?;
    println!("design {} (graph v{}, {} node(s) used)", d.id, d.graph_version, d.used_node_ids.len());
    println!(
        "image: {}",
        service
            .root()
            .join(id)
            .join("designs")
            .join(format!("{}.{}", d.blob.sha256, tomigo_core::provider::extension_for(&d.blob.media_type)))
            .display()
    );
    Ok(())
}

fn report_validation(g: &ConceptGraph) -> Result<()> {
    report(&g.validate(&tomigo_core::schema::builtin_schema()), g)
}

fn report_validation_with(service: &Service, g: &ConceptGraph) -> Result<()> {
    report(&g.validate(service.schema()), g)
}

fn report(r: &tomigo_core::graph::ValidationReport, g: &ConceptGraph) -> Result<()> {
    for i in &r.errors {
        println!("error: {:?} {}", i.kind, i.subject);
    }
    for i in &r.warnings {
        println!("warning: {:?} {}", i.kind, i.subject);
    }
    println!(
        "{} nodes, {} edges: {} error(s), {} warning(s)",
        g.nodes.len(),
        g.edges.len(),
        r.errors.len(),
        r.warnings.len()
    );
    if !r.is_valid() {
        bail!("graph is invalid");
    }
    Ok(())
}

fn print_project(service: &Service, p: &Project) {
    let g = p.graph();
    println!("project {} — {}", p.id, p.brief.design_type);
    println!("brief: {}", p.brief.text);
    println!("images: {}   messages: {}   designs: {}", p.images.len(), p.history.len(), p.designs.len());
    println!("graph v{} ({} nodes, {} edges)", g.version, g.nodes.len(), g.edges.len());
    let schema = service.schema();
    for role in NodeRole::ALL.iter() {
        let mut nodes: Vec<&Node> = g.nodes.iter().filter(|n| schema.role_of(&n.type_key) == Some(*role)).collect();
        if nodes.is_empty() {
            continue;
        }
        nodes.sort_by_key(|n| (schema.position(&n.type_key), n.id.clone()));
        println!("\n[{role}]");
        for n in nodes {
            let flags = format!("{}{}", if n.dirty { "*" } else { " " }, if n.locked { "L" } else { " " });
            println!("{flags} {:<4} {}: {}", n.id, n.type_key, n.description);
        }
    }
    if !g.edges.is_empty() {
        println!("\n[edges]");
        for e in &g.edges {
            println!("  {} -> {}: {}", e.source, e.target, e.reason);
        }
    }
}
