//! Building the initial concept graph from a brief and reference images.
//!
//! Each image is first analysed into its own graph. A synthesis request then
//! merges those graphs with the brief; the result is checked against the
//! structural constraints below and re-prompted with the violation list for
//! a bounded number of repair rounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_string;
use crate::error::{CallError, SynthesisError};
use crate::exchange::{graph_shape, ingest_graph, render_graph, IngestContext};
use crate::graph::{ConceptGraph, IdAllocator, NodeId, Provenance};
use crate::prompts;
use crate::provider::{
    complete_structured, complete_structured_with_retries, stage, ImageData, PromptPart, Provider,
    ProviderRequest, RawResponse, RequestKind,
};
use crate::schema::SchemaDef;

pub const DEFAULT_MAX_REPAIR_ROUNDS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignBrief {
    pub design_type: String,
    pub text: String,
}

impl DesignBrief {
    pub fn new(design_type: impl Into<String>, text: impl Into<String>) -> Result<Self, SynthesisError> {
        let brief = DesignBrief { design_type: design_type.into(), text: text.into() };
        if brief.text.trim().is_empty() {
            return Err(SynthesisError::InvalidInput("brief text is empty".into()));
        }
        Ok(brief)
    }
}

/// Reference images; the position in the set is the image index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImageSet {
    images: Vec<ImageData>,
}

impl ImageSet {
    pub fn new(images: Vec<ImageData>) -> Self {
        ImageSet { images }
    }

    pub fn push(&mut self, image: ImageData) -> usize {
        self.images.push(image);
        self.images.len() - 1
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ImageData> {
        self.images.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ImageData)> {
        self.images.iter().enumerate()
    }

    pub fn as_slice(&self) -> &[ImageData] {
        &self.images
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    ImageUnrepresented(usize),
    CoverageSpanNotInBrief(String),
    CoverageNodeMissing(NodeId),
    NoProvenance(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn kinds(&self) -> Vec<ViolationKind> {
        self.violations.iter().map(|v| v.kind.clone()).collect()
    }
}

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Structural synthesis constraints. Semantic coverage of the brief is only
/// as good as the provider's coverage map; this check validates the map,
/// it does not discover mentions itself.
pub fn check_synthesis_constraints(
    graph: &ConceptGraph,
    brief: &DesignBrief,
    image_count: usize,
    coverage: &BTreeMap<String, NodeId>,
) -> ConstraintReport {
    let mut violations = Vec::new();

    let represented: BTreeSet<usize> = graph
        .nodes
        .iter()
        .flat_map(|n| n.provenance.iter().filter_map(Provenance::image_index))
        .collect();
    for i in (0..image_count).filter(|i| !represented.contains(i)) {
        violations.push(Violation {
            kind: ViolationKind::ImageUnrepresented(i),
            detail: format!("no node cites image {i}"),
        });
    }

    let brief_norm = normalize(&brief.text);
    for (span, id) in coverage {
        let span_norm = normalize(span);
        if span_norm.is_empty() || !brief_norm.contains(&span_norm) {
            violations.push(Violation {
                kind: ViolationKind::CoverageSpanNotInBrief(span.clone()),
                detail: format!("coverage span {span:?} does not occur in the brief"),
            });
        }
        if !graph.contains(id) {
            violations.push(Violation {
                kind: ViolationKind::CoverageNodeMissing(id.clone()),
                detail: format!("coverage span {span:?} points at missing node {id}"),
            });
        }
    }

    let mut ids: Vec<&NodeId> = graph.nodes.iter().filter(|n| n.provenance.is_empty()).map(|n| &n.id).collect();
    ids.sort();
    for id in ids {
        violations.push(Violation {
            kind: ViolationKind::NoProvenance(id.clone()),
            detail: format!("node {id} cites no evidence"),
        });
    }
    ConstraintReport { violations }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageAnalysis {
    pub graph: ConceptGraph,
    pub warnings: Vec<String>,
}

/// Analyses one reference image into a graph whose nodes all cite that image.
pub fn analyze_image(
    provider: &dyn Provider,
    schema: &SchemaDef,
    index: usize,
    image: &ImageData,
) -> Result<ImageAnalysis, SynthesisError> {
    let request = ProviderRequest::structured(
        RequestKind::VisionStructured,
        stage::IMAGE_ANALYSIS,
        vec![
            PromptPart::Text(prompts::image_analysis(schema, index)),
            PromptPart::Image(image.clone()),
        ],
        graph_shape(false),
    )
    .map_err(SynthesisError::Provider)?;
    let response = complete_structured(provider, &request)?;
    let value = response.value().expect("structured response");
    let ctx = IngestContext {
        schema,
        brief: None,
        image_count: index + 1,
        fixed_provenance: Some(Provenance::image(index)),
    };
    let mut ids = IdAllocator::starting_at(1);
    let mut ingested = ingest_graph(value, &ctx, &mut ids).map_err(SynthesisError::MalformedOutput)?;
    if ingested.graph.nodes.is_empty() {
        return Err(SynthesisError::EmptyGraph);
    }
    let mut warnings = response.warnings;
    warnings.append(&mut ingested.warnings);
    Ok(ImageAnalysis { graph: ingested.graph, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthesisOptions {
    pub max_repair_rounds: usize,
    /// First engine id number to issue, so ids stay unique across a lineage.
    pub id_floor: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { max_repair_rounds: DEFAULT_MAX_REPAIR_ROUNDS, id_floor: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutcome {
    pub graph: ConceptGraph,
    pub report: ConstraintReport,
    pub coverage: BTreeMap<String, NodeId>,
    /// Provider calls made, one per round.
    pub calls: usize,
    /// Zero-based round the returned graph came from.
    pub round: usize,
    pub warnings: Vec<String>,
}

struct Candidate {
    graph: ConceptGraph,
    report: ConstraintReport,
    coverage: BTreeMap<String, NodeId>,
    round: usize,
    warnings: Vec<String>,
}

/// Merges per-image graphs and the brief into one concept graph. Each round
/// is exactly one provider call; at most `1 + max_repair_rounds` calls are
/// made. Returns the round with the fewest violations (latest on ties).
pub fn synthesize_concept(
    provider: &dyn Provider,
    schema: &SchemaDef,
    brief: &DesignBrief,
    images: &ImageSet,
    per_image: &[ConceptGraph],
    options: SynthesisOptions,
) -> Result<SynthesisOutcome, SynthesisError> {
    if per_image.len() != images.len() {
        return Err(SynthesisError::InvalidInput(format!(
            "{} per-image graphs for {} images",
            per_image.len(),
            images.len()
        )));
    }
    let mut base_parts = vec![PromptPart::Text(prompts::synthesis(
        schema,
        &brief.design_type,
        &brief.text,
        images.len(),
    ))];
    for (i, g) in per_image.iter().enumerate() {
        base_parts.push(PromptPart::Text(prompts::per_image_graph(
            i,
            &to_canonical_string(&render_graph(g)),
        )));
    }
    for (_, img) in images.iter() {
        base_parts.push(PromptPart::Image(img.clone()));
    }

    let ctx = IngestContext {
        schema,
        brief: Some(&brief.text),
        image_count: images.len(),
        fixed_provenance: None,
    };

    let mut best: Option<Candidate> = None;
    let mut calls = 0;
    let mut previous = String::new();
    let mut feedback: Vec<String> = Vec::new();
    let mut last_error = String::new();

    for round in 0..=options.max_repair_rounds {
        let (tag, parts) = if round == 0 {
            (stage::SYNTHESIS, base_parts.clone())
        } else {
            let mut parts = base_parts.clone();
            parts.push(PromptPart::Text(prompts::repair(&previous, &feedback)));
            (stage::REPAIR, parts)
        };
        let request = ProviderRequest::structured(RequestKind::VisionStructured, tag, parts, graph_shape(true))
            .map_err(SynthesisError::Provider)?;
        calls += 1;
        let response = match complete_structured_with_retries(provider, &request, 0) {
            Ok(r) => r,
            Err(CallError::Provider(e)) => return Err(SynthesisError::Provider(e)),
            Err(CallError::MalformedOutput(msg)) => {
                previous = raw_text_of_last_call(provider);
                last_error = msg.clone();
                feedback = vec![format!("output was not usable: {msg}")];
                continue;
            }
        };
        previous = match &response.raw {
            RawResponse::Text(t) => t.clone(),
            RawResponse::Image(_) => String::new(),
        };
        let value = response.value().expect("structured response");
        let mut ids = IdAllocator::starting_at(options.id_floor);
        let ingested = match ingest_graph(value, &ctx, &mut ids) {
            Ok(g) if !g.graph.nodes.is_empty() => g,
            Ok(_) => {
                last_error = "graph has no usable nodes".to_string();
                feedback = vec![last_error.clone()];
                continue;
            }
            Err(msg) => {
                last_error = msg.clone();
                feedback = vec![format!("output was not usable: {msg}")];
                continue;
            }
        };
        let report = check_synthesis_constraints(&ingested.graph, brief, images.len(), &ingested.coverage);
        feedback = report.violations.iter().map(|v| v.detail.clone()).collect();
        let mut warnings = response.warnings;
        warnings.extend(ingested.warnings);
        let candidate = Candidate {
            graph: ingested.graph,
            report,
            coverage: ingested.coverage,
            round,
            warnings,
        };
        let done = candidate.report.is_empty();
        if best
            .as_ref()
            .is_none_or(|b| candidate.report.violations.len() <= b.report.violations.len())
        {
            best = Some(candidate);
        }
        if done {
            break;
        }
    }

    let Some(best) = best else {
        return Err(SynthesisError::SynthesisFailed { rounds: calls, last_error });
    };
    let mut graph = best.graph;
    for n in &mut graph.nodes {
        if n.provenance.is_empty() {
            n.provenance.push(Provenance::inference("synthesized without cited evidence"));
        }
    }
    Ok(SynthesisOutcome {
        graph,
        report: best.report,
        coverage: best.coverage,
        calls,
        round: best.round,
        warnings: best.warnings,
    })
}

fn raw_text_of_last_call(provider: &dyn Provider) -> String {
    provider
        .transcript()
        .entries()
        .last()
        .and_then(|e| e.outcome.as_ref().ok().and_then(|v| v.get("text")).and_then(|t| t.as_str()).map(String::from))
        .unwrap_or_default()
}
