//! Graph wire format exchanged with model providers.
//!
//! Providers see graphs as `{"nodes":[{id,type,description,…}], "edges":[…]}`
//! and answer in the same form. Their ids are untrusted: ingestion remaps
//! every node to an engine-issued id and drops anything that does not fit
//! the schema, recording a warning for each drop.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::graph::{ConceptGraph, Edge, IdAllocator, Node, NodeId, Provenance};
use crate::schema::SchemaDef;
use crate::shape::{Field, Shape};

pub fn node_shape() -> Shape {
    Shape::object(
        "node",
        vec![
            Field::required("id", Shape::String),
            Field::required("type", Shape::String),
            Field::required("description", Shape::String),
            Field::optional("images", Shape::list(Shape::Integer)),
            Field::optional("quotes", Shape::list(Shape::String)),
        ],
    )
}

pub fn edge_shape() -> Shape {
    Shape::object(
        "edge",
        vec![
            Field::required("source", Shape::String),
            Field::required("target", Shape::String),
            Field::required("reason", Shape::String),
        ],
    )
}

/// Graph reply; synthesis additionally requires a coverage map from brief
/// spans to node ids.
pub fn graph_shape(with_coverage: bool) -> Shape {
    let mut fields = vec![
        Field::required("nodes", Shape::list(node_shape())),
        Field::required("edges", Shape::list(edge_shape())),
    ];
    if with_coverage {
        fields.push(Field::required("coverage", Shape::map(Shape::String)));
    }
    Shape::object(if with_coverage { "synthesized_graph" } else { "image_graph" }, fields)
}

/// Prompt-facing JSON of a graph with engine ids.
pub fn render_graph(graph: &ConceptGraph) -> Value {
    let nodes: Vec<Value> = graph
        .nodes
        .iter()
        .map(|n| {
            let mut v = json!({ "id": n.id, "type": n.type_key, "description": n.description });
            if n.locked {
                v["locked"] = Value::Bool(true);
            }
            let images: Vec<usize> = n.provenance.iter().filter_map(Provenance::image_index).collect();
            if !images.is_empty() {
                v["images"] = json!(images);
            }
            v
        })
        .collect();
    let edges: Vec<Value> = graph
        .edges
        .iter()
        .map(|e| json!({ "source": e.source, "target": e.target, "reason": e.reason }))
        .collect();
    json!({ "nodes": nodes, "edges": edges })
}

#[derive(Debug, Deserialize)]
struct WireNode {
    id: String,
    #[serde(rename = "type")]
    type_key: String,
    description: String,
    #[serde(default)]
    images: Option<Vec<i64>>,
    #[serde(default)]
    quotes: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct WireEdge {
    source: String,
    target: String,
    reason: String,
}

#[derive(Debug, Deserialize)]
struct WireGraph {
    nodes: Vec<WireNode>,
    edges: Vec<WireEdge>,
    #[serde(default)]
    coverage: Option<BTreeMap<String, String>>,
}

pub struct IngestContext<'a> {
    pub schema: &'a SchemaDef,
    /// Brief text quotes are checked against; `None` drops all quotes.
    pub brief: Option<&'a str>,
    pub image_count: usize,
    /// Attached to every node, e.g. the analysed image.
    pub fixed_provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub graph: ConceptGraph,
    pub id_map: BTreeMap<String, NodeId>,
    /// Brief span → engine node id. Spans citing unknown provider ids map
    /// to an id that can never exist in the graph.
    pub coverage: BTreeMap<String, NodeId>,
    pub warnings: Vec<String>,
}

/// Prefix for ids that failed to resolve; `?` is never issued by the engine.
pub const UNRESOLVED_PREFIX: &str = "?";

/// Locates `quote` in `brief`, exactly or ASCII-case-insensitively, and
/// returns the verbatim brief slice.
pub fn find_in_brief<'b>(brief: &'b str, quote: &str) -> Option<&'b str> {
    if quote.trim().is_empty() {
        return None;
    }
    if let Some(at) = brief.find(quote) {
        return Some(&brief[at..at + quote.len()]);
    }
    let lower_brief = brief.to_ascii_lowercase();
    let lower_quote = quote.to_ascii_lowercase();
    lower_brief.find(&lower_quote).map(|at| &brief[at..at + quote.len()])
}

pub fn ingest_graph(value: &Value, ctx: &IngestContext<'_>, ids: &mut IdAllocator) -> Result<Ingested, String> {
    let wire: WireGraph = serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
    let mut warnings = Vec::new();
    let mut id_map: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut nodes = Vec::new();

    for wn in wire.nodes {
        if !ctx.schema.contains(&wn.type_key) {
            warnings.push(format!("dropped node `{}`: unknown type `{}`", wn.id, wn.type_key));
            continue;
        }
        if wn.description.trim().is_empty() {
            warnings.push(format!("dropped node `{}`: empty description", wn.id));
            continue;
        }
        if id_map.contains_key(&wn.id) {
            warnings.push(format!("dropped node `{}`: duplicate id", wn.id));
            continue;
        }
        let id = ids.next_id();
        let mut node = Node::new(id.clone(), wn.type_key, wn.description.trim());
        if let Some(p) = &ctx.fixed_provenance {
            node.provenance.push(p.clone());
        }
        for idx in wn.images.unwrap_or_default() {
            match usize::try_from(idx) {
                Ok(i) if i < ctx.image_count => {
                    let p = Provenance::image(i);
                    if !node.provenance.contains(&p) {
                        node.provenance.push(p);
                    }
                }
                _ => warnings.push(format!("node `{}`: ignored image index {idx}", wn.id)),
            }
        }
        for quote in wn.quotes.unwrap_or_default() {
            match ctx.brief.and_then(|b| find_in_brief(b, &quote)) {
                Some(verbatim) => {
                    let p = Provenance::brief_quote(verbatim);
                    if !node.provenance.contains(&p) {
                        node.provenance.push(p);
                    }
                }
                None => warnings.push(format!("node `{}`: quote not found in brief: {quote:?}", wn.id)),
            }
        }
        id_map.insert(wn.id, id);
        nodes.push(node);
    }

    let mut edges: Vec<Edge> = Vec::new();
    for we in wire.edges {
        let (Some(s), Some(t)) = (id_map.get(&we.source), id_map.get(&we.target)) else {
            warnings.push(format!("dropped edge {} -> {}: unknown endpoint", we.source, we.target));
            continue;
        };
        if s == t {
            warnings.push(format!("dropped self-loop on `{}`", we.source));
            continue;
        }
        if we.reason.trim().is_empty() {
            warnings.push(format!("dropped edge {} -> {}: empty reason", we.source, we.target));
            continue;
        }
        match edges.iter_mut().find(|e| &e.source == s && &e.target == t) {
            Some(existing) => existing.reason = we.reason,
            None => edges.push(Edge::new(s.clone(), t.clone(), we.reason)),
        }
    }

    let coverage = wire
        .coverage
        .unwrap_or_default()
        .into_iter()
        .map(|(span, pid)| {
            let id = id_map
                .get(&pid)
                .cloned()
                .unwrap_or_else(|| NodeId::new(format!("{UNRESOLVED_PREFIX}{pid}")));
            (span, id)
        })
        .collect();

    let graph = ConceptGraph::from_parts(nodes, edges, 0).with_id_floor(ids.peek());
    Ok(Ingested { graph, id_map, coverage, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ProvenanceKind;
    use crate::schema::builtin_schema;

    #[test]
    fn remaps_ids_and_drops_bad_parts() {
        let schema = builtin_schema();
        let value = json!({
            "nodes": [
                {"id": "a", "type": "ArtStyle", "description": "comic", "quotes": ["COMIC book"]},
                {"id": "b", "type": "Vibe", "description": "spooky"},
                {"id": "c", "type": "Motifs", "description": "hat", "images": [1, 7]},
            ],
            "edges": [
                {"source": "c", "target": "a", "reason": "drawn in style"},
                {"source": "b", "target": "a", "reason": "gone"},
                {"source": "c", "target": "a", "reason": "replaced"},
            ],
            "coverage": {"comic book": "a", "hat": "zz"}
        });
        let ctx = IngestContext {
            schema: &schema,
            brief: Some("A comic book cover"),
            image_count: 2,
            fixed_provenance: None,
        };
        let mut ids = IdAllocator::starting_at(5);
        let out = ingest_graph(&value, &ctx, &mut ids).unwrap();
        assert_eq!(out.graph.nodes.len(), 2);
        assert_eq!(out.id_map["a"], NodeId::from("n5"));
        assert_eq!(out.id_map["c"], NodeId::from("n6"));
        let a = out.graph.node(&"n5".into()).unwrap();
        assert_eq!(a.provenance, vec![Provenance::brief_quote("comic book")]);
        let c = out.graph.node(&"n6".into()).unwrap();
        assert_eq!(c.provenance[0].kind, ProvenanceKind::ImageRef);
        assert_eq!(out.graph.edges.len(), 1);
        assert_eq!(out.graph.edges[0].reason, "replaced");
        assert_eq!(out.coverage["hat"], NodeId::from("?zz"));
        assert_eq!(out.warnings.len(), 3);
        assert_eq!(out.graph.id_floor(), 7);
    }
}
