//! Design generation from the graph and realignment of existing designs.
//!
//! Every successful generation clears the dirty flag of exactly the nodes it
//! consumed and returns the marked graph alongside the artifact. Failures
//! return before any graph is produced, so callers have nothing to roll back.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical::to_canonical_string;
use crate::error::RealignError;
use crate::graph::{ConceptGraph, Node, NodeId};
use crate::prompts;
use crate::provider::{
    complete_image, complete_structured, stage, ImageData, PromptPart, Provider, ProviderRequest, RequestKind,
};
use crate::schema::{NodeRole, SchemaDef};
use crate::shape::{Field, Shape};
use crate::synthesis::DesignBrief;

/// Node types that describe intent rather than anything pictorial.
pub const NON_VISUAL_TYPES: [&str; 1] = ["Function"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lineage {
    GenerateNew,
    Update { parent: String },
    ApplyNode { parent: String, node: NodeId },
}

impl Lineage {
    pub fn parent(&self) -> Option<&str> {
        match self {
            Lineage::GenerateNew => None,
            Lineage::Update { parent } | Lineage::ApplyNode { parent, .. } => Some(parent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignArtifact {
    pub id: String,
    pub image: ImageData,
    /// Graph version stored together with this artifact.
    pub graph_version: u64,
    pub used_node_ids: BTreeSet<NodeId>,
    pub lineage: Lineage,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGap {
    pub node_id: NodeId,
    pub gap: String,
    pub instruction: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapAnalysis {
    pub gaps: Vec<NodeGap>,
    pub warnings: Vec<String>,
}

/// Artifact plus the graph with the consumed nodes marked clean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub artifact: DesignArtifact,
    pub graph: ConceptGraph,
    /// Full prompt text sent to the image backend.
    pub prompt: String,
}

/// Identity of an artifact about to be created; assigned by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactSlot {
    pub id: String,
    pub created_at: u64,
}

impl ArtifactSlot {
    pub fn new(id: impl Into<String>, created_at: u64) -> Self {
        ArtifactSlot { id: id.into(), created_at }
    }
}

fn section_order(role: NodeRole) -> u8 {
    // holistic first: Purpose, Concepts, Content, Stylistic
    3 - role.rank()
}

/// Nodes that can be depicted: everything except purpose statements such as
/// `Function`, ordered Purpose → Concepts → Content → Stylistic, then by id.
pub fn select_visual_nodes(graph: &ConceptGraph, schema: &SchemaDef) -> Vec<Node> {
    let mut nodes: Vec<(u8, &Node)> = graph
        .nodes
        .iter()
        .filter(|n| !NON_VISUAL_TYPES.contains(&n.type_key.as_str()))
        .filter_map(|n| schema.role_of(&n.type_key).map(|r| (section_order(r), n)))
        .collect();
    nodes.sort_by(|a, b| (a.0, &a.1.id).cmp(&(b.0, &b.1.id)));
    nodes.into_iter().map(|(_, n)| n.clone()).collect()
}

/// Deterministic text prompt: one section per role listing
/// `<type>: <description>`, then edges between selected nodes as constraints.
pub fn build_generation_prompt(graph: &ConceptGraph, schema: &SchemaDef) -> Result<String, RealignError> {
    let nodes = select_visual_nodes(graph, schema);
    if nodes.is_empty() {
        return Err(RealignError::EmptyConcept);
    }
    let mut out = String::from("Design concept\n");
    for role in NodeRole::ALL {
        let in_role: Vec<&Node> = nodes
            .iter()
            .filter(|n| schema.role_of(&n.type_key) == Some(role))
            .collect();
        if in_role.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n[{role}]");
        for n in in_role {
            let _ = writeln!(out, "{}: {}", n.type_key, n.description);
        }
    }
    let selected: BTreeSet<&NodeId> = nodes.iter().map(|n| &n.id).collect();
    let mut edges: Vec<_> = graph
        .edges
        .iter()
        .filter(|e| selected.contains(&e.source) && selected.contains(&e.target))
        .collect();
    edges.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    if !edges.is_empty() {
        out.push_str("\n[Constraints]\n");
        for e in edges {
            let source = nodes.iter().find(|n| n.id == e.source).expect("selected");
            let _ = writeln!(out, "{} — because — {}", source.description, e.reason);
        }
    }
    Ok(out)
}

fn marked(graph: &ConceptGraph, ids: &BTreeSet<NodeId>) -> Result<ConceptGraph, RealignError> {
    graph.mark_generated(ids).map_err(|crate::error::GraphError::MissingNode(id)| RealignError::MissingNode(id))
}

/// Generates a new design from the graph's visual nodes plus the reference images.
pub fn generate_design(
    provider: &dyn Provider,
    schema: &SchemaDef,
    brief: &DesignBrief,
    graph: &ConceptGraph,
    reference_images: &[ImageData],
    slot: ArtifactSlot,
) -> Result<Generated, RealignError> {
    let concept = build_generation_prompt(graph, schema)?;
    let prompt = format!("Create a {}.\n\n{concept}", brief.design_type);
    let mut parts = vec![PromptPart::Text(prompt.clone())];
    parts.extend(reference_images.iter().cloned().map(PromptPart::Image));
    let request = ProviderRequest::image(RequestKind::ImageGeneration, stage::GENERATE, parts)
        .map_err(RealignError::Provider)?;
    let image = complete_image(provider, &request)?;

    let used: BTreeSet<NodeId> = select_visual_nodes(graph, schema).into_iter().map(|n| n.id).collect();
    let graph = marked(graph, &used)?;
    Ok(Generated {
        artifact: DesignArtifact {
            id: slot.id,
            image,
            graph_version: graph.version,
            used_node_ids: used,
            lineage: Lineage::GenerateNew,
            created_at: slot.created_at,
        },
        graph,
        prompt,
    })
}

/// Brief-only generation that ignores the graph, for side-by-side comparisons.
pub fn generate_direct(
    provider: &dyn Provider,
    brief: &DesignBrief,
    graph_version: u64,
    reference_images: &[ImageData],
    slot: ArtifactSlot,
) -> Result<DesignArtifact, RealignError> {
    let mut parts = vec![PromptPart::Text(prompts::direct(&brief.design_type, &brief.text))];
    parts.extend(reference_images.iter().cloned().map(PromptPart::Image));
    let request = ProviderRequest::image(RequestKind::ImageGeneration, stage::DIRECT, parts)
        .map_err(RealignError::Provider)?;
    let image = complete_image(provider, &request)?;
    Ok(DesignArtifact {
        id: slot.id,
        image,
        graph_version,
        used_node_ids: BTreeSet::new(),
        lineage: Lineage::GenerateNew,
        created_at: slot.created_at,
    })
}

/// Asks a vision model which visual nodes the design fails to satisfy.
/// All visual nodes go out in one batch.
pub fn gap_analysis(
    provider: &dyn Provider,
    design: &DesignArtifact,
    graph: &ConceptGraph,
    schema: &SchemaDef,
) -> Result<GapAnalysis, RealignError> {
    let nodes = select_visual_nodes(graph, schema);
    if nodes.is_empty() {
        return Err(RealignError::EmptyConcept);
    }
    let listing: Vec<Value> = nodes
        .iter()
        .map(|n| json!({ "id": n.id, "type": n.type_key, "description": n.description }))
        .collect();
    let shape = Shape::object(
        "gap_report",
        vec![Field::required(
            "verdicts",
            Shape::list(Shape::object(
                "verdict",
                vec![
                    Field::required("node", Shape::String),
                    Field::required("satisfied", Shape::Bool),
                    Field::optional("gap", Shape::String),
                    Field::optional("instruction", Shape::String),
                ],
            )),
        )],
    );
    let request = ProviderRequest::structured(
        RequestKind::VisionStructured,
        stage::GAP,
        vec![
            PromptPart::Text(prompts::gap(&to_canonical_string(&Value::Array(listing)))),
            PromptPart::Image(design.image.clone()),
        ],
        shape,
    )
    .map_err(RealignError::Provider)?;
    let response = complete_structured(provider, &request)?;
    let mut warnings = response.warnings.clone();
    let mut gaps: Vec<NodeGap> = Vec::new();
    let verdicts = response.value().and_then(|v| v["verdicts"].as_array()).cloned().unwrap_or_default();
    for v in verdicts {
        if v["satisfied"].as_bool() == Some(true) {
            continue;
        }
        let raw_id = v["node"].as_str().unwrap_or_default();
        let id = NodeId::new(raw_id);
        let Some(node) = graph.node(&id) else {
            warnings.push(format!("dropped gap for unknown node `{raw_id}`"));
            continue;
        };
        if gaps.iter().any(|g| g.node_id == id) {
            warnings.push(format!("dropped duplicate gap for `{raw_id}`"));
            continue;
        }
        let gap = v["gap"].as_str().unwrap_or_default().trim().to_string();
        let mut instruction = v["instruction"].as_str().unwrap_or_default().trim().to_string();
        if instruction.is_empty() {
            instruction = format!("Make the design reflect this {}: {}", node.type_key, node.description);
        }
        gaps.push(NodeGap { node_id: id, gap, instruction });
    }
    Ok(GapAnalysis { gaps, warnings })
}

fn carried_ids(parent: &DesignArtifact, extra: impl IntoIterator<Item = NodeId>, graph: &ConceptGraph) -> BTreeSet<NodeId> {
    parent
        .used_node_ids
        .iter()
        .cloned()
        .chain(extra)
        .filter(|id| graph.contains(id))
        .collect()
}

/// Edits `design` with one image-edit request composed from every gap.
pub fn update_design(
    provider: &dyn Provider,
    design: &DesignArtifact,
    graph: &ConceptGraph,
    gaps: &[NodeGap],
    slot: ArtifactSlot,
) -> Result<Generated, RealignError> {
    if gaps.is_empty() {
        return Err(RealignError::NoGaps);
    }
    if let Some(g) = gaps.iter().find(|g| !graph.contains(&g.node_id)) {
        return Err(RealignError::MissingNode(g.node_id.clone()));
    }
    let instructions: Vec<String> = gaps.iter().map(|g| g.instruction.clone()).collect();
    let prompt = prompts::update(&instructions);
    let request = ProviderRequest::image(
        RequestKind::ImageEdit,
        stage::UPDATE,
        vec![PromptPart::Text(prompt.clone()), PromptPart::Image(design.image.clone())],
    )
    .map_err(RealignError::Provider)?;
    let image = complete_image(provider, &request)?;

    let gap_ids: BTreeSet<NodeId> = gaps.iter().map(|g| g.node_id.clone()).collect();
    let graph = marked(graph, &gap_ids)?;
    Ok(Generated {
        artifact: DesignArtifact {
            id: slot.id,
            image,
            graph_version: graph.version,
            used_node_ids: carried_ids(design, gap_ids, &graph),
            lineage: Lineage::Update { parent: design.id.clone() },
            created_at: slot.created_at,
        },
        graph,
        prompt,
    })
}

/// Realizes or emphasizes a single node in an existing design: a vision call
/// works out the edit, an image-edit call applies it.
pub fn apply_node_to_design(
    provider: &dyn Provider,
    design: &DesignArtifact,
    graph: &ConceptGraph,
    node_id: &NodeId,
    slot: ArtifactSlot,
) -> Result<Generated, RealignError> {
    let node = graph.node(node_id).ok_or_else(|| RealignError::MissingNode(node_id.clone()))?;
    let shape = Shape::object("edit_plan", vec![Field::required("instruction", Shape::String)]);
    let request = ProviderRequest::structured(
        RequestKind::VisionStructured,
        stage::APPLY,
        vec![
            PromptPart::Text(prompts::apply_analysis(&node.type_key, &node.description)),
            PromptPart::Image(design.image.clone()),
        ],
        shape,
    )
    .map_err(RealignError::Provider)?;
    let plan = complete_structured(provider, &request)?;
    let mut instruction = plan
        .value()
        .and_then(|v| v["instruction"].as_str())
        .unwrap_or_default()
        .trim()
        .to_string();
    if instruction.is_empty() {
        instruction = format!("Emphasize this {}: {}", node.type_key, node.description);
    }
    let prompt = prompts::apply_edit(&instruction);
    let request = ProviderRequest::image(
        RequestKind::ImageEdit,
        stage::APPLY,
        vec![PromptPart::Text(prompt.clone()), PromptPart::Image(design.image.clone())],
    )
    .map_err(RealignError::Provider)?;
    let image = complete_image(provider, &request)?;

    let applied: BTreeSet<NodeId> = [node_id.clone()].into_iter().collect();
    let graph = marked(graph, &applied)?;
    Ok(Generated {
        artifact: DesignArtifact {
            id: slot.id,
            image,
            graph_version: graph.version,
            used_node_ids: carried_ids(design, applied, &graph),
            lineage: Lineage::ApplyNode { parent: design.id.clone(), node: node_id.clone() },
            created_at: slot.created_at,
        },
        graph,
        prompt,
    })
}

/// Walks parents from `id` back to its root; `None` if a parent is missing.
pub fn lineage_chain<'a>(artifacts: &'a [DesignArtifact], id: &str) -> Option<Vec<&'a DesignArtifact>> {
    let mut chain = Vec::new();
    let mut current = artifacts.iter().find(|a| a.id == id)?;
    loop {
        chain.push(current);
        match current.lineage.parent() {
            None => return Some(chain),
            Some(p) => {
                if chain.len() > artifacts.len() {
                    return None;
                }
                current = artifacts.iter().find(|a| a.id == p)?;
            }
        }
    }
}
