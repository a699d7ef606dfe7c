//! The design-concept graph: typed nodes holding concrete design decisions
//! and reasoned edges explaining how one decision supports another.
//!
//! Graphs are values. Every mutation goes through [`GraphPatch`] and returns
//! a new graph together with a [`ConflictReport`] of rejected ops; nothing is
//! ever half-applied.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical::to_canonical_string;
use crate::error::{DecodeError, GraphError, Invariant};
use crate::schema::{EdgeTypicality, SchemaDef};

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    /// Engine-issued identifier `n<k>`.
    pub fn issued(k: u64) -> Self {
        NodeId(format!("n{k}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn issued_number(&self) -> Option<u64> {
        let digits = self.0.strip_prefix('n')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProvenanceKind {
    BriefQuote,
    ImageRef,
    UserEdit,
    SystemInference,
}

/// Evidence for a node. `detail` is a verbatim brief substring for
/// `BriefQuote` and a decimal image index for `ImageRef`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: ProvenanceKind,
    pub detail: String,
}

impl Provenance {
    pub fn brief_quote(quote: impl Into<String>) -> Self {
        Provenance { kind: ProvenanceKind::BriefQuote, detail: quote.into() }
    }

    pub fn image(index: usize) -> Self {
        Provenance { kind: ProvenanceKind::ImageRef, detail: index.to_string() }
    }

    pub fn user_edit(detail: impl Into<String>) -> Self {
        Provenance { kind: ProvenanceKind::UserEdit, detail: detail.into() }
    }

    pub fn inference(detail: impl Into<String>) -> Self {
        Provenance { kind: ProvenanceKind::SystemInference, detail: detail.into() }
    }

    pub fn image_index(&self) -> Option<usize> {
        match self.kind {
            ProvenanceKind::ImageRef => self.detail.parse().ok(),
            _ => None,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    /// May be left empty in a patch; see [`GraphPatch::assign_missing_ids`].
    #[serde(default)]
    pub id: NodeId,
    pub type_key: String,
    pub description: String,
    #[serde(default)]
    pub locked: bool,
    #[serde(default = "default_true")]
    pub dirty: bool,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
}

impl Node {
    /// A fresh node: unlocked, dirty, no provenance.
    pub fn new(id: impl Into<NodeId>, type_key: impl Into<String>, description: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            type_key: type_key.into(),
            description: description.into(),
            locked: false,
            dirty: true,
            provenance: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance.push(p);
        self
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub reason: String,
}

impl Edge {
    pub fn new(source: impl Into<NodeId>, target: impl Into<NodeId>, reason: impl Into<String>) -> Self {
        Edge { source: source.into(), target: target.into(), reason: reason.into() }
    }

    pub fn touches(&self, id: &NodeId) -> bool {
        &self.source == id || &self.target == id
    }
}

/// Nodes are kept sorted by id and edges by `(source, target)` on every
/// engine path, so iteration order is canonical.
#[derive(Debug, Clone)]
pub struct ConceptGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub version: u64,
    // next engine-issued id number; never decreases within a lineage
    id_floor: u64,
}

impl Default for ConceptGraph {
    fn default() -> Self {
        ConceptGraph { nodes: Vec::new(), edges: Vec::new(), version: 0, id_floor: 1 }
    }
}

impl PartialEq for ConceptGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.version != other.version
            || self.nodes.len() != other.nodes.len()
            || self.edges.len() != other.edges.len()
        {
            return false;
        }
        let mut a: Vec<&Node> = self.nodes.iter().collect();
        let mut b: Vec<&Node> = other.nodes.iter().collect();
        a.sort_by(|x, y| x.id.cmp(&y.id));
        b.sort_by(|x, y| x.id.cmp(&y.id));
        let mut ea: Vec<&Edge> = self.edges.iter().collect();
        let mut eb: Vec<&Edge> = other.edges.iter().collect();
        ea.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
        eb.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
        a == b && ea == eb
    }
}

impl Eq for ConceptGraph {}

impl ConceptGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from parts without checking invariants; use
    /// [`validate_graph`] to inspect the result.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>, version: u64) -> Self {
        let mut g = ConceptGraph { nodes, edges, version, id_floor: 1 };
        g.canonicalize();
        g.raise_floor_from_nodes();
        g
    }

    fn canonicalize(&mut self) {
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        self.edges
            .sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    }

    fn raise_floor_from_nodes(&mut self) {
        let max = self.nodes.iter().filter_map(|n| n.id.issued_number()).max();
        if let Some(k) = max {
            self.id_floor = self.id_floor.max(k + 1);
        }
    }

    /// Next id number the engine will issue for this lineage.
    pub fn id_floor(&self) -> u64 {
        self.id_floor
    }

    /// Raises the id floor, e.g. to account for ids used by earlier
    /// versions that were later removed.
    pub fn with_id_floor(mut self, floor: u64) -> Self {
        self.id_floor = self.id_floor.max(floor);
        self
    }

    pub fn id_allocator(&self) -> IdAllocator {
        IdAllocator { next: self.id_floor }
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes
            .binary_search_by(|n| n.id.cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
            .or_else(|| self.nodes.iter().find(|n| &n.id == id))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn node_ids(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn edge(&self, source: &NodeId, target: &NodeId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.source == source && &e.target == target)
    }

    pub fn incident_edges<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.touches(id))
    }

    pub fn nodes_of_type<'a>(&'a self, type_key: &'a str) -> impl Iterator<Item = &'a Node> + 'a {
        self.nodes.iter().filter(move |n| n.type_key == type_key)
    }

    pub fn dirty_ids(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().filter(|n| n.dirty).map(|n| n.id.clone()).collect()
    }

    pub fn apply_patch(&self, patch: &GraphPatch) -> PatchOutcome {
        apply_patch(self, patch)
    }

    pub fn validate(&self, schema: &SchemaDef) -> ValidationReport {
        validate_graph(self, schema)
    }

    pub fn mark_generated(&self, used: &BTreeSet<NodeId>) -> Result<ConceptGraph, GraphError> {
        mark_generated(self, used)
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        serialize_canonical(self)
    }

    fn insert_node(&mut self, node: Node) {
        if let Some(k) = node.id.issued_number() {
            self.id_floor = self.id_floor.max(k + 1);
        }
        let at = self.nodes.partition_point(|n| n.id < node.id);
        self.nodes.insert(at, node);
    }

    fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| &n.id == id)
    }
}

/// Hands out `n<k>` ids above a graph's floor.
#[derive(Debug, Clone)]
pub struct IdAllocator {
    next: u64,
}

impl IdAllocator {
    pub fn starting_at(next: u64) -> Self {
        IdAllocator { next: next.max(1) }
    }

    pub fn next_id(&mut self) -> NodeId {
        let id = NodeId::issued(self.next);
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PatchOp {
    AddNode {
        node: Node,
    },
    EditDescription {
        id: NodeId,
        description: String,
        /// Defaults to a `UserEdit` citing the new text.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<Provenance>,
    },
    RemoveNode {
        id: NodeId,
    },
    AddEdge {
        #[serde(flatten)]
        edge: Edge,
    },
    RemoveEdge {
        source: NodeId,
        target: NodeId,
    },
    SetLock {
        id: NodeId,
        locked: bool,
    },
}

impl PatchOp {
    pub fn add_node(node: Node) -> Self {
        PatchOp::AddNode { node }
    }

    pub fn edit(id: impl Into<NodeId>, description: impl Into<String>, provenance: Provenance) -> Self {
        PatchOp::EditDescription {
            id: id.into(),
            description: description.into(),
            provenance: Some(provenance),
        }
    }

    pub fn remove(id: impl Into<NodeId>) -> Self {
        PatchOp::RemoveNode { id: id.into() }
    }

    pub fn add_edge(edge: Edge) -> Self {
        PatchOp::AddEdge { edge }
    }

    pub fn remove_edge(source: impl Into<NodeId>, target: impl Into<NodeId>) -> Self {
        PatchOp::RemoveEdge { source: source.into(), target: target.into() }
    }

    pub fn set_lock(id: impl Into<NodeId>, locked: bool) -> Self {
        PatchOp::SetLock { id: id.into(), locked }
    }

    /// Node whose content this op touches, if any.
    pub fn node_target(&self) -> Option<&NodeId> {
        match self {
            PatchOp::AddNode { node } => Some(&node.id),
            PatchOp::EditDescription { id, .. }
            | PatchOp::RemoveNode { id }
            | PatchOp::SetLock { id, .. } => Some(id),
            PatchOp::AddEdge { .. } | PatchOp::RemoveEdge { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphPatch {
    pub ops: Vec<PatchOp>,
}

impl GraphPatch {
    pub fn new(ops: Vec<PatchOp>) -> Self {
        GraphPatch { ops }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: PatchOp) {
        self.ops.push(op);
    }

    /// Gives every `AddNode` with an empty id an engine-issued id above the
    /// graph's floor.
    pub fn assign_missing_ids(mut self, graph: &ConceptGraph) -> Self {
        let mut ids = graph.id_allocator();
        for op in &mut self.ops {
            if let PatchOp::AddNode { node } = op {
                if node.id.as_str().is_empty() {
                    node.id = ids.next_id();
                }
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConflictReason {
    LockedNode,
    MissingNode,
    MissingEdge,
    DuplicateId,
    DanglingEdge,
    SelfLoop,
    EmptyText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub index: usize,
    pub op: PatchOp,
    pub reason: ConflictReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConflictReport {
    pub rejected: Vec<Conflict>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }

    pub fn reasons(&self) -> Vec<ConflictReason> {
        self.rejected.iter().map(|c| c.reason).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchOutcome {
    pub graph: ConceptGraph,
    pub conflicts: ConflictReport,
    /// Indices of ops that were applied.
    pub applied: Vec<usize>,
}

impl PatchOutcome {
    /// Nodes whose content or lock state changed, for UI highlighting.
    pub fn changed_node_ids(&self, patch: &GraphPatch) -> BTreeSet<NodeId> {
        self.applied
            .iter()
            .filter_map(|&i| patch.ops[i].node_target().cloned())
            .collect()
    }
}

pub fn apply_patch(graph: &ConceptGraph, patch: &GraphPatch) -> PatchOutcome {
    let mut g = graph.clone();
    let mut conflicts = ConflictReport::default();
    let mut applied = Vec::new();
    for (index, op) in patch.ops.iter().enumerate() {
        match apply_op(&mut g, op) {
            Ok(()) => applied.push(index),
            Err(reason) => conflicts.rejected.push(Conflict { index, op: op.clone(), reason }),
        }
    }
    if !applied.is_empty() {
        g.version += 1;
    }
    PatchOutcome { graph: g, conflicts, applied }
}

fn apply_op(g: &mut ConceptGraph, op: &PatchOp) -> Result<(), ConflictReason> {
    match op {
        PatchOp::AddNode { node } => {
            if node.id.as_str().is_empty()
                || node.description.trim().is_empty()
                || node.type_key.is_empty()
            {
                return Err(ConflictReason::EmptyText);
            }
            if g.contains(&node.id) {
                return Err(ConflictReason::DuplicateId);
            }
            let mut node = node.clone();
            node.dirty = true;
            g.insert_node(node);
        }
        PatchOp::EditDescription { id, description, provenance } => {
            let i = g.node_index(id).ok_or(ConflictReason::MissingNode)?;
            if g.nodes[i].locked {
                return Err(ConflictReason::LockedNode);
            }
            if description.trim().is_empty() {
                return Err(ConflictReason::EmptyText);
            }
            let node = &mut g.nodes[i];
            node.description = description.clone();
            node.dirty = true;
            node.provenance.push(
                provenance
                    .clone()
                    .unwrap_or_else(|| Provenance::user_edit(description.clone())),
            );
        }
        PatchOp::RemoveNode { id } => {
            let i = g.node_index(id).ok_or(ConflictReason::MissingNode)?;
            if g.nodes[i].locked {
                return Err(ConflictReason::LockedNode);
            }
            g.nodes.remove(i);
            g.edges.retain(|e| !e.touches(id));
        }
        PatchOp::AddEdge { edge } => {
            if edge.source == edge.target {
                return Err(ConflictReason::SelfLoop);
            }
            if !g.contains(&edge.source) || !g.contains(&edge.target) {
                return Err(ConflictReason::DanglingEdge);
            }
            if edge.reason.trim().is_empty() {
                return Err(ConflictReason::EmptyText);
            }
            if let Some(existing) = g
                .edges
                .iter_mut()
                .find(|e| e.source == edge.source && e.target == edge.target)
            {
                existing.reason = edge.reason.clone();
            } else {
                let key = (&edge.source, &edge.target);
                let at = g.edges.partition_point(|e| (&e.source, &e.target) < key);
                g.edges.insert(at, edge.clone());
            }
        }
        PatchOp::RemoveEdge { source, target } => {
            if !g.contains(source) || !g.contains(target) {
                return Err(ConflictReason::MissingNode);
            }
            let i = g
                .edges
                .iter()
                .position(|e| &e.source == source && &e.target == target)
                .ok_or(ConflictReason::MissingEdge)?;
            g.edges.remove(i);
        }
        PatchOp::SetLock { id, locked } => {
            let i = g.node_index(id).ok_or(ConflictReason::MissingNode)?;
            g.nodes[i].locked = *locked;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueKind {
    DuplicateId,
    DuplicateEdge,
    DanglingEdge,
    SelfLoop,
    EmptyDescription,
    EmptyReason,
    UnknownType,
    AtypicalDirection,
    AtypicalIntraRole,
    IsolatedNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub subject: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn error_kinds(&self) -> Vec<IssueKind> {
        self.errors.iter().map(|i| i.kind).collect()
    }

    pub fn warning_kinds(&self) -> Vec<IssueKind> {
        self.warnings.iter().map(|i| i.kind).collect()
    }
}

pub fn validate_graph(graph: &ConceptGraph, schema: &SchemaDef) -> ValidationReport {
    let mut report = ValidationReport::default();
    let err = |report: &mut ValidationReport, kind, subject: String| {
        report.errors.push(Issue { kind, subject })
    };

    let mut seen = BTreeSet::new();
    for n in &graph.nodes {
        if !seen.insert(&n.id) {
            err(&mut report, IssueKind::DuplicateId, n.id.to_string());
        }
        if n.description.trim().is_empty() {
            err(&mut report, IssueKind::EmptyDescription, n.id.to_string());
        }
        if !schema.contains(&n.type_key) {
            err(&mut report, IssueKind::UnknownType, format!("{}: {}", n.id, n.type_key));
        }
    }

    let mut pairs = BTreeSet::new();
    for e in &graph.edges {
        let subject = format!("{} -> {}", e.source, e.target);
        if e.source == e.target {
            err(&mut report, IssueKind::SelfLoop, subject.clone());
        }
        let src = graph.node(&e.source);
        let dst = graph.node(&e.target);
        if src.is_none() || dst.is_none() {
            err(&mut report, IssueKind::DanglingEdge, subject.clone());
        }
        if !pairs.insert((&e.source, &e.target)) {
            err(&mut report, IssueKind::DuplicateEdge, subject.clone());
        }
        if e.reason.trim().is_empty() {
            err(&mut report, IssueKind::EmptyReason, subject.clone());
        }
        if let (Some(s), Some(t)) = (src, dst) {
            match schema.classify_edge_typicality(&s.type_key, &t.type_key) {
                EdgeTypicality::AtypicalDirection => report
                    .warnings
                    .push(Issue { kind: IssueKind::AtypicalDirection, subject }),
                EdgeTypicality::AtypicalIntraRole => report
                    .warnings
                    .push(Issue { kind: IssueKind::AtypicalIntraRole, subject }),
                // unknown types are already reported as errors
                EdgeTypicality::Typical | EdgeTypicality::UnknownType => {}
            }
        }
    }

    for n in &graph.nodes {
        if !graph.edges.iter().any(|e| e.touches(&n.id)) {
            report
                .warnings
                .push(Issue { kind: IssueKind::IsolatedNode, subject: n.id.to_string() });
        }
    }
    report
}

/// Clears the dirty flag of every listed node. An empty set is a no-op and
/// leaves the version untouched.
pub fn mark_generated(graph: &ConceptGraph, used: &BTreeSet<NodeId>) -> Result<ConceptGraph, GraphError> {
    if let Some(missing) = used.iter().find(|id| !graph.contains(id)) {
        return Err(GraphError::MissingNode(missing.clone()));
    }
    if used.is_empty() {
        return Ok(graph.clone());
    }
    let mut g = graph.clone();
    for n in &mut g.nodes {
        if used.contains(&n.id) {
            n.dirty = false;
        }
    }
    g.version += 1;
    Ok(g)
}

fn node_value(n: &Node) -> Value {
    let provenance: Vec<Value> = n
        .provenance
        .iter()
        .map(|p| json!({ "kind": p.kind, "detail": p.detail }))
        .collect();
    json!({
        "id": n.id,
        "type_key": n.type_key,
        "description": n.description,
        "locked": n.locked,
        "dirty": n.dirty,
        "provenance": provenance,
    })
}

/// Canonical JSON value of a graph (sorted nodes and edges).
pub fn graph_value(graph: &ConceptGraph) -> Value {
    let mut nodes: Vec<&Node> = graph.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges: Vec<&Edge> = graph.edges.iter().collect();
    edges.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    json!({
        "nodes": nodes.into_iter().map(node_value).collect::<Vec<_>>(),
        "edges": edges
            .into_iter()
            .map(|e| json!({ "source": e.source, "target": e.target, "reason": e.reason }))
            .collect::<Vec<_>>(),
        "version": graph.version,
    })
}

/// UTF-8 JSON with sorted object keys, nodes sorted by id, edges by
/// `(source, target)`, and a trailing newline.
pub fn serialize_canonical(graph: &ConceptGraph) -> Vec<u8> {
    let mut text = to_canonical_string(&graph_value(graph));
    text.push('\n');
    text.into_bytes()
}

#[derive(Deserialize)]
struct GraphDocument {
    #[serde(default)]
    nodes: Vec<Node>,
    #[serde(default)]
    edges: Vec<Edge>,
    #[serde(default)]
    version: u64,
    #[serde(default)]
    schema_version: Option<String>,
}

pub fn deserialize(bytes: &[u8]) -> Result<ConceptGraph, DecodeError> {
    let doc: GraphDocument =
        serde_json::from_slice(bytes).map_err(|e| DecodeError::Parse(e.to_string()))?;
    if let Some(v) = &doc.schema_version {
        if v != "1" {
            return Err(DecodeError::Parse(format!("unsupported schema_version {v}")));
        }
    }
    check_integrity(&doc.nodes, &doc.edges)?;
    Ok(ConceptGraph::from_parts(doc.nodes, doc.edges, doc.version))
}

fn integrity(invariant: Invariant, detail: impl Into<String>) -> DecodeError {
    DecodeError::Integrity { invariant, detail: detail.into() }
}

fn check_integrity(nodes: &[Node], edges: &[Edge]) -> Result<(), DecodeError> {
    let mut ids = BTreeSet::new();
    for n in nodes {
        if n.id.as_str().is_empty() {
            return Err(integrity(Invariant::EmptyId, "node with empty id"));
        }
        if !ids.insert(&n.id) {
            return Err(integrity(Invariant::DuplicateId, n.id.as_str()));
        }
        if n.description.trim().is_empty() {
            return Err(integrity(Invariant::EmptyDescription, n.id.as_str()));
        }
    }
    let mut pairs = BTreeSet::new();
    for e in edges {
        let subject = format!("{} -> {}", e.source, e.target);
        if e.source == e.target {
            return Err(integrity(Invariant::SelfLoop, subject));
        }
        if !ids.contains(&e.source) || !ids.contains(&e.target) {
            return Err(integrity(Invariant::DanglingEdge, subject));
        }
        if !pairs.insert((&e.source, &e.target)) {
            return Err(integrity(Invariant::DuplicateEdge, subject));
        }
        if e.reason.trim().is_empty() {
            return Err(integrity(Invariant::EmptyReason, subject));
        }
    }
    Ok(())
}
