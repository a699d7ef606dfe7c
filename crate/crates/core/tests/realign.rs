mod common;

use std::collections::BTreeSet;

use common::*;
use serde_json::json;
use tomigo_core::error::{ProviderError, RealignError};
use tomigo_core::examples::magician_concept_graph;
use tomigo_core::graph::{ConceptGraph, GraphPatch, NodeId, PatchOp, Provenance};
use tomigo_core::provider::{stage, FixtureSet, MockProvider, Provider};
use tomigo_core::realign::{
    apply_node_to_design, gap_analysis, generate_design, generate_direct, lineage_chain, update_design, ArtifactSlot,
    Lineage,
};
use tomigo_core::schema::builtin_schema;

fn ids(list: &[&str]) -> BTreeSet<NodeId> {
    list.iter().map(|s| NodeId::new(*s)).collect()
}

fn generated_session() -> (MockProvider, tomigo_core::realign::Generated) {
    let mut f = FixtureSet::new();
    f.push_image(stage::GENERATE, png(100));
    let mock = MockProvider::new(f);
    let g = generate_design(&mock, &builtin_schema(), &brief(), &magician_concept_graph(), &[png(0)], ArtifactSlot::new("d1", 1))
        .unwrap();
    (mock, g)
}

#[test]
fn generate_uses_all_visual_nodes() {
    let (mock, g) = generated_session();
    let visual = ids(&["n2", "n3", "n4", "n5", "n6", "n7", "n8", "n9", "n10"]);
    assert_eq!(g.artifact.used_node_ids, visual);
    assert!(g.graph.dirty_ids().is_subset(&ids(&["n1"])));
    assert_eq!(g.artifact.graph_version, g.graph.version);
    assert_eq!(g.artifact.lineage, Lineage::GenerateNew);
    assert_eq!(g.artifact.image, png(100));
    assert!(g.prompt.starts_with("Create a book cover."));
    assert!(g.prompt.contains("bold, dynamic sans-serif with outline, comic-style lettering"));
    assert!(!g.prompt.contains("magic tricks that invites"), "Function is not depicted");
    assert_eq!(mock.transcript().stages(), vec!["generate"]);
}

#[test]
fn generation_prompt_is_deterministic() {
    let (_, first) = generated_session();
    let (_, second) = generated_session();
    assert_eq!(first.prompt, second.prompt);
}

#[test]
fn rejected_generation_leaves_graph_untouched() {
    let mut f = FixtureSet::new();
    f.push_error(stage::GENERATE, ProviderError::Rejected("policy".into()));
    let mock = MockProvider::new(f);
    let graph = magician_concept_graph();
    let err = generate_design(&mock, &builtin_schema(), &brief(), &graph, &[], ArtifactSlot::new("d1", 1)).unwrap_err();
    assert!(matches!(err, RealignError::ContentRejected(_)));
    assert_eq!(graph.dirty_ids().len(), 10);
}

#[test]
fn empty_concept_makes_no_call() {
    let mock = MockProvider::new(FixtureSet::new());
    let err = generate_design(&mock, &builtin_schema(), &brief(), &ConceptGraph::new(), &[], ArtifactSlot::new("d", 0));
    assert_eq!(err.unwrap_err(), RealignError::EmptyConcept);
    assert!(mock.transcript().is_empty());
}

#[test]
fn direct_generation_ignores_graph() {
    let mut f = FixtureSet::new();
    f.push_image(stage::DIRECT, png(50));
    let mock = MockProvider::new(f);
    let a = generate_direct(&mock, &brief(), 3, &[], ArtifactSlot::new("b1", 1)).unwrap();
    assert!(a.used_node_ids.is_empty());
    let prompt = mock.transcript().entries()[0].request.to_string();
    assert!(prompt.contains(MAGICIAN_BRIEF));
    assert!(!prompt.contains("Design concept"));
}

fn typography_gap() -> serde_json::Value {
    json!({"verdicts": [
        {"node": "n2", "satisfied": true},
        {"node": "n9", "satisfied": false, "gap": "the title uses a thin serif",
         "instruction": "Change the title to a bold sans-serif with an outline"},
        {"node": "n42", "satisfied": false, "gap": "?", "instruction": "?"}
    ]})
}

#[test]
fn gap_analysis_reports_unsatisfied_nodes() {
    let (_, g) = generated_session();
    let mut f = FixtureSet::new();
    f.push_json(stage::GAP, &typography_gap());
    let mock = MockProvider::new(f);
    let report = gap_analysis(&mock, &g.artifact, &g.graph, &builtin_schema()).unwrap();
    assert_eq!(report.gaps.len(), 1);
    assert_eq!(report.gaps[0].node_id, NodeId::new("n9"));
    assert!(report.gaps[0].instruction.contains("sans-serif"));
    assert_eq!(report.warnings.len(), 1);
    assert_eq!(mock.transcript().len(), 1);
}

#[test]
fn all_satisfied_means_no_gaps() {
    let (_, g) = generated_session();
    let mut f = FixtureSet::new();
    f.push_json(stage::GAP, &json!({"verdicts": [{"node": "n9", "satisfied": true}]}));
    let mock = MockProvider::new(f);
    let report = gap_analysis(&mock, &g.artifact, &g.graph, &builtin_schema()).unwrap();
    assert!(report.gaps.is_empty());
    let err = update_design(&mock, &g.artifact, &g.graph, &report.gaps, ArtifactSlot::new("d2", 2)).unwrap_err();
    assert_eq!(err, RealignError::NoGaps);
    assert_eq!(mock.transcript().len(), 1);
}

#[test]
fn update_produces_child_with_lineage() {
    let (_, g) = generated_session();
    // the user edits typography after generating, making it dirty again
    let edited = g
        .graph
        .apply_patch(&GraphPatch::new(vec![PatchOp::edit("n9", "bold outlined sans-serif title", Provenance::user_edit("ui"))]))
        .graph;
    assert_eq!(edited.dirty_ids(), ids(&["n1", "n9"]));

    let mut f = FixtureSet::new();
    f.push_json(stage::GAP, &typography_gap()).push_image(stage::UPDATE, png(101));
    let mock = MockProvider::new(f);
    let report = gap_analysis(&mock, &g.artifact, &edited, &builtin_schema()).unwrap();
    let child = update_design(&mock, &g.artifact, &edited, &report.gaps, ArtifactSlot::new("d2", 2)).unwrap();
    assert_eq!(child.artifact.lineage, Lineage::Update { parent: "d1".into() });
    assert_eq!(child.graph.dirty_ids(), ids(&["n1"]));
    assert_eq!(child.artifact.used_node_ids, g.artifact.used_node_ids);
    assert!(child.prompt.contains("bold sans-serif"));
    let update_req = &mock.transcript().entries()[1].request;
    assert!(update_req.to_string().contains(&png(100).sha256_hex()));
}

#[test]
fn two_updates_form_a_chain() {
    let (_, g) = generated_session();
    let mut f = FixtureSet::new();
    f.push_json(stage::GAP, &typography_gap())
        .push_image(stage::UPDATE, png(101))
        .push_json(stage::GAP, &typography_gap())
        .push_image(stage::UPDATE, png(102));
    let mock = MockProvider::new(f);
    let schema = builtin_schema();
    let r1 = gap_analysis(&mock, &g.artifact, &g.graph, &schema).unwrap();
    let c1 = update_design(&mock, &g.artifact, &g.graph, &r1.gaps, ArtifactSlot::new("d2", 2)).unwrap();
    let r2 = gap_analysis(&mock, &c1.artifact, &c1.graph, &schema).unwrap();
    let c2 = update_design(&mock, &c1.artifact, &c1.graph, &r2.gaps, ArtifactSlot::new("d3", 3)).unwrap();
    let all = vec![g.artifact, c1.artifact, c2.artifact];
    let chain: Vec<&str> = lineage_chain(&all, "d3").unwrap().iter().map(|a| a.id.as_str()).collect();
    assert_eq!(chain, vec!["d3", "d2", "d1"]);
}

#[test]
fn update_with_removed_node_is_rejected() {
    let (_, g) = generated_session();
    let mut f = FixtureSet::new();
    f.push_json(stage::GAP, &typography_gap());
    let mock = MockProvider::new(f);
    let report = gap_analysis(&mock, &g.artifact, &g.graph, &builtin_schema()).unwrap();
    let without = g.graph.apply_patch(&GraphPatch::new(vec![PatchOp::remove("n9")])).graph;
    let err = update_design(&mock, &g.artifact, &without, &report.gaps, ArtifactSlot::new("d2", 2)).unwrap_err();
    assert_eq!(err, RealignError::MissingNode(NodeId::new("n9")));
}

#[test]
fn apply_node_emphasizes_one_decision() {
    let (_, g) = generated_session();
    let mut f = FixtureSet::new();
    f.push_json(stage::APPLY, &json!({"instruction": "Scatter more stars and sparkles around the props"}))
        .push_image(stage::APPLY, png(110));
    let mock = MockProvider::new(f);
    let child = apply_node_to_design(&mock, &g.artifact, &g.graph, &NodeId::new("n6"), ArtifactSlot::new("d2", 2)).unwrap();
    assert_eq!(child.artifact.lineage, Lineage::ApplyNode { parent: "d1".into(), node: NodeId::new("n6") });
    assert_eq!(child.artifact.image, png(110));
    assert!(child.prompt.contains("sparkles"));
    assert_eq!(mock.transcript().stages(), vec!["apply", "apply"]);
}

#[test]
fn apply_twice_chains() {
    let (_, g) = generated_session();
    let mut f = FixtureSet::new();
    f.push_json(stage::APPLY, &json!({"instruction": "Add sparkles"}))
        .push_image(stage::APPLY, png(110))
        .push_json(stage::APPLY, &json!({"instruction": "Add even more sparkles"}))
        .push_image(stage::APPLY, png(111));
    let mock = MockProvider::new(f);
    let n6 = NodeId::new("n6");
    let a = apply_node_to_design(&mock, &g.artifact, &g.graph, &n6, ArtifactSlot::new("d2", 2)).unwrap();
    let b = apply_node_to_design(&mock, &a.artifact, &a.graph, &n6, ArtifactSlot::new("d3", 3)).unwrap();
    assert_eq!(b.artifact.lineage.parent(), Some("d2"));
    assert_ne!(a.artifact.image, b.artifact.image);
}

#[test]
fn apply_unknown_node_makes_no_call() {
    let (_, g) = generated_session();
    let mock = MockProvider::new(FixtureSet::new());
    let err = apply_node_to_design(&mock, &g.artifact, &g.graph, &NodeId::new("n77"), ArtifactSlot::new("d2", 2));
    assert_eq!(err.unwrap_err(), RealignError::MissingNode(NodeId::new("n77")));
    assert!(mock.transcript().is_empty());
}
