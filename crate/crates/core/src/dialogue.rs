//! Chat-driven graph updates and clarifying questions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::to_canonical_string;
use crate::error::DialogueError;
use crate::exchange::render_graph;
use crate::graph::{ConceptGraph, Edge, GraphPatch, IdAllocator, Node, NodeId, PatchOp, Provenance, ProvenanceKind};
use crate::prompts;
use crate::provider::{complete_structured, stage, PromptPart, Provider, ProviderRequest, RequestKind};
use crate::schema::SchemaDef;
use crate::shape::{Field, Shape};
use crate::synthesis::DesignBrief;

pub const DEFAULT_HISTORY_LIMIT: usize = 20;
pub const DEFAULT_QUESTION_BUDGET: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Author {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub author: Author,
    pub text: String,
    pub timestamp: u64,
}

impl Message {
    pub fn user(text: impl Into<String>, timestamp: u64) -> Self {
        Message { author: Author::User, text: text.into(), timestamp }
    }

    pub fn system(text: impl Into<String>, timestamp: u64) -> Self {
        Message { author: Author::System, text: text.into(), timestamp }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub target_type_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    /// Unapplied; the caller applies it so locks are enforced there.
    pub patch: GraphPatch,
    pub warnings: Vec<String>,
}

fn ops_shape(name: &str) -> Shape {
    let op = Shape::object(
        "op",
        vec![
            Field::required("op", Shape::String),
            Field::optional("node", Shape::String),
            Field::optional("id", Shape::String),
            Field::optional("type", Shape::String),
            Field::optional("description", Shape::String),
            Field::optional("refinement", Shape::Bool),
            Field::optional("source", Shape::String),
            Field::optional("target", Shape::String),
            Field::optional("reason", Shape::String),
        ],
    );
    Shape::object(name, vec![Field::required("ops", Shape::list(op))])
}

fn render_history(history: &[Message]) -> String {
    if history.is_empty() {
        return String::from("(none)");
    }
    history
        .iter()
        .map(|m| {
            let who = match m.author {
                Author::User => "User",
                Author::System => "System",
            };
            format!("{who}: {}", m.text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Turns provider op proposals into patch ops against `base`.
struct OpBuilder<'a> {
    schema: &'a SchemaDef,
    base: &'a ConceptGraph,
    ids: IdAllocator,
    temp: BTreeMap<String, NodeId>,
    provenance: Provenance,
    ops: Vec<PatchOp>,
    warnings: Vec<String>,
}

impl OpBuilder<'_> {
    fn resolve(&self, raw: &str) -> Option<NodeId> {
        if let Some(id) = self.temp.get(raw) {
            return Some(id.clone());
        }
        let id = NodeId::new(raw);
        self.base.contains(&id).then_some(id)
    }

    fn push_ops(&mut self, value: &Value, stage_name: &str) {
        let Some(list) = value.get("ops").and_then(Value::as_array) else { return };
        for (i, raw) in list.iter().enumerate() {
            let s = |k: &str| raw.get(k).and_then(Value::as_str).map(str::trim).unwrap_or("");
            let here = format!("{stage_name} op #{i}");
            match s("op") {
                "edit" => {
                    let Some(id) = self.resolve(s("node")) else {
                        self.warnings.push(format!("{here}: unknown node `{}`", s("node")));
                        continue;
                    };
                    if s("description").is_empty() {
                        self.warnings.push(format!("{here}: empty description"));
                        continue;
                    }
                    self.ops.push(PatchOp::edit(id, s("description"), self.provenance.clone()));
                }
                "add" => {
                    let type_key = s("type");
                    if !self.schema.contains(type_key) {
                        self.warnings.push(format!("{here}: unknown type `{type_key}`"));
                        continue;
                    }
                    if s("description").is_empty() {
                        self.warnings.push(format!("{here}: empty description"));
                        continue;
                    }
                    let refinement = raw.get("refinement").and_then(Value::as_bool).unwrap_or(false);
                    let existing = self.base.nodes_of_type(type_key).map(|n| n.id.clone()).next();
                    let id = match (refinement, existing) {
                        (true, Some(existing)) => {
                            self.warnings.push(format!("{here}: refinement of `{existing}` applied as an edit"));
                            self.ops.push(PatchOp::edit(existing.clone(), s("description"), self.provenance.clone()));
                            existing
                        }
                        _ => {
                            let id = self.ids.next_id();
                            let node = Node::new(id.clone(), type_key, s("description"))
                                .with_provenance(self.provenance.clone());
                            self.ops.push(PatchOp::add_node(node));
                            id
                        }
                    };
                    if !s("id").is_empty() {
                        self.temp.insert(s("id").to_string(), id);
                    }
                }
                "edge" => {
                    let (Some(src), Some(dst)) = (self.resolve(s("source")), self.resolve(s("target"))) else {
                        self.warnings.push(format!("{here}: edge endpoint unknown"));
                        continue;
                    };
                    self.ops.push(PatchOp::add_edge(Edge::new(src, dst, s("reason"))));
                }
                other => self.warnings.push(format!("{here}: unsupported op `{other}`")),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterpretOptions {
    pub history_limit: usize,
}

impl Default for InterpretOptions {
    fn default() -> Self {
        InterpretOptions { history_limit: DEFAULT_HISTORY_LIMIT }
    }
}

/// Interprets the latest user message as a patch: an intent stage proposes
/// edits/additions (edit preferred over add), then a consistency stage
/// proposes follow-up edits on the previewed result. Nothing is applied.
pub fn interpret_message(
    provider: &dyn Provider,
    schema: &SchemaDef,
    brief: &DesignBrief,
    history: &[Message],
    graph: &ConceptGraph,
    options: InterpretOptions,
) -> Result<Interpretation, DialogueError> {
    let latest = match history.last() {
        Some(m) if m.author == Author::User => m,
        _ => return Err(DialogueError::NoUserMessage),
    };
    let window_start = history.len().saturating_sub(options.history_limit.max(1));
    let earlier = &history[window_start..history.len() - 1];

    let request = ProviderRequest::structured(
        RequestKind::TextStructured,
        stage::INTERPRET,
        vec![PromptPart::Text(prompts::interpret(
            schema,
            &brief.text,
            &render_history(earlier),
            &to_canonical_string(&render_graph(graph)),
            &latest.text,
        ))],
        ops_shape("interpretation"),
    )
    .map_err(DialogueError::Provider)?;
    let response = complete_structured(provider, &request)?;

    let mut builder = OpBuilder {
        schema,
        base: graph,
        ids: graph.id_allocator(),
        temp: BTreeMap::new(),
        provenance: Provenance::inference(latest.text.clone()),
        ops: Vec::new(),
        warnings: response.warnings.clone(),
    };
    builder.push_ops(response.value().expect("structured"), stage::INTERPRET);

    let preview = graph.apply_patch(&GraphPatch::new(builder.ops.clone())).graph;
    let request = ProviderRequest::structured(
        RequestKind::TextStructured,
        stage::CONSISTENCY,
        vec![PromptPart::Text(prompts::consistency(
            &to_canonical_string(&render_graph(&preview)),
            &latest.text,
        ))],
        ops_shape("consistency"),
    )
    .map_err(DialogueError::Provider)?;
    let response = complete_structured(provider, &request)?;

    let mut follow_up = OpBuilder {
        schema,
        base: &preview,
        ids: builder.ids.clone(),
        temp: builder.temp.clone(),
        provenance: builder.provenance.clone(),
        ops: Vec::new(),
        warnings: response.warnings.clone(),
    };
    follow_up.push_ops(response.value().expect("structured"), stage::CONSISTENCY);

    let mut ops = builder.ops;
    ops.extend(follow_up.ops);
    let mut warnings = builder.warnings;
    warnings.extend(follow_up.warnings);
    Ok(Interpretation { patch: GraphPatch::new(ops), warnings })
}

/// Type keys the user has observably weighed in on: nodes quoting the brief,
/// edited or locked by the user, or changed in response to a user message.
pub fn addressed_topics(history: &[Message], graph: &ConceptGraph) -> BTreeSet<String> {
    let user_texts: BTreeSet<&str> = history
        .iter()
        .filter(|m| m.author == Author::User)
        .map(|m| m.text.as_str())
        .collect();
    graph
        .nodes
        .iter()
        .filter(|n| {
            n.locked
                || n.provenance.iter().any(|p| match p.kind {
                    ProvenanceKind::BriefQuote | ProvenanceKind::UserEdit => true,
                    ProvenanceKind::SystemInference => user_texts.contains(p.detail.as_str()),
                    ProvenanceKind::ImageRef => false,
                })
        })
        .map(|n| n.type_key.clone())
        .collect()
}

/// Picks one holistic (Purpose/Concepts) and one granular (Content/
/// Stylistic) unaddressed key, skipping recently asked ones, in schema
/// order. `recently_asked` is oldest first.
pub fn select_question_targets(
    schema: &SchemaDef,
    addressed: &BTreeSet<String>,
    recently_asked: &[String],
) -> Vec<String> {
    let recent: BTreeSet<&str> = recently_asked.iter().map(String::as_str).collect();
    let unaddressed: Vec<&crate::schema::NodeTypeDef> =
        schema.types().iter().filter(|t| !addressed.contains(&t.key)).collect();
    let fresh = |holistic: bool| {
        unaddressed
            .iter()
            .find(|t| t.role.is_holistic() == holistic && !recent.contains(t.key.as_str()))
            .map(|t| t.key.clone())
    };
    let picked: Vec<String> = [fresh(true), fresh(false)].into_iter().flatten().collect();
    if !picked.is_empty() {
        return picked;
    }
    let pool: Vec<&str> = if unaddressed.is_empty() {
        schema.keys().collect()
    } else {
        unaddressed.iter().map(|t| t.key.as_str()).collect()
    };
    least_recently_asked(&pool, recently_asked).into_iter().collect()
}

fn least_recently_asked(pool: &[&str], recently_asked: &[String]) -> Option<String> {
    // never-asked keys rank before any asked key; otherwise earliest last-ask wins
    pool.iter()
        .min_by_key(|k| recently_asked.iter().rposition(|r| r == *k).map_or(0, |p| p + 1))
        .map(|k| (*k).to_string())
}

pub fn generate_clarifying_question(
    provider: &dyn Provider,
    schema: &SchemaDef,
    brief: &DesignBrief,
    graph: &ConceptGraph,
    targets: &[String],
    budget: usize,
) -> Result<Question, DialogueError> {
    if targets.is_empty() {
        return Err(DialogueError::NoTargets);
    }
    if let Some(bad) = targets.iter().find(|t| !schema.contains(t)) {
        return Err(DialogueError::MalformedOutput(format!("unknown target type `{bad}`")));
    }
    let shape = Shape::object(
        "question",
        vec![
            Field::required("text", Shape::String),
            Field::required("target_types", Shape::list(Shape::String)),
        ],
    );
    let mut parts = vec![PromptPart::Text(prompts::question(
        schema,
        &brief.text,
        &to_canonical_string(&render_graph(graph)),
        targets,
        budget,
    ))];
    let mut last_problem = String::new();
    for _ in 0..2 {
        let request = ProviderRequest::structured(RequestKind::TextStructured, stage::QUESTION, parts.clone(), shape.clone())
            .map_err(DialogueError::Provider)?;
        let response = complete_structured(provider, &request)?;
        let value = response.value().expect("structured");
        let text = value["text"].as_str().unwrap_or_default().trim().to_string();
        let echoed: Vec<String> = value["target_types"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).map(String::from).collect())
            .unwrap_or_default();
        let problem = if text.is_empty() {
            Some(String::from("question text is empty"))
        } else if text.chars().count() > budget {
            Some(format!("question exceeds {budget} characters"))
        } else if echoed.is_empty() || echoed.len() > 2 || echoed.iter().any(|t| !targets.contains(t)) {
            Some(format!("target_types {echoed:?} must be a non-empty subset of {targets:?}"))
        } else {
            None
        };
        match problem {
            None => return Ok(Question { text, target_type_keys: echoed }),
            Some(p) => {
                parts.push(PromptPart::Text(format!("Your previous question was rejected: {p}. Ask again.")));
                last_problem = p;
            }
        }
    }
    Err(DialogueError::MalformedOutput(last_problem))
}
