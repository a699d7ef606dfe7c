//! Engine-authored prompt templates.
//!
//! Every template is deterministic in its inputs so mock transcripts can be
//! compared byte for byte.

use alloc::format;
use alloc::string::String;
use core::fmt::Write as _;

use crate::canonical::to_canonical_string;
use crate::examples::example_graphs;
use crate::exchange::render_graph;
use crate::schema::{NodeRole, SchemaDef};

pub fn schema_definitions(schema: &SchemaDef) -> String {
    let mut out = String::from("Node types by role (edges point from granular decisions toward holistic goals: Stylistic -> Content -> Concepts -> Purpose):\n");
    for role in NodeRole::ALL {
        let _ = writeln!(out, "{role}:");
        for t in schema.types().iter().filter(|t| t.role == role) {
            let _ = writeln!(out, "- {}: {}", t.key, t.description);
        }
    }
    out.push_str("Same-role edges that are typical:");
    for (a, b) in schema.intra_role_typical_pairs() {
        let _ = write!(out, " {a}->{b};");
    }
    out.push('\n');
    out
}

const GRAPH_FORMAT: &str = "Answer with JSON only: {\"nodes\":[{\"id\":string,\"type\":<node type key>,\
\"description\":string,\"images\":[image index,...],\"quotes\":[verbatim brief span,...]}],\
\"edges\":[{\"source\":id,\"target\":id,\"reason\":string}]}. Every edge reason explains how the \
source decision supports the target decision.";

pub fn image_analysis(schema: &SchemaDef, image_index: usize) -> String {
    let mut out = format!(
        "Analyse reference image {image_index} as a design concept graph. Create one node for \
         every node type that is present in the image, with a concrete description of the \
         design decision, and edges describing how the decisions work together.\n\n"
    );
    out.push_str(&schema_definitions(schema));
    out.push_str("\nExample graphs:\n");
    for (kind, g) in example_graphs() {
        let _ = writeln!(out, "[{kind}] {}", to_canonical_string(&render_graph(&g)));
    }
    out.push('\n');
    out.push_str(GRAPH_FORMAT);
    out
}

pub fn synthesis(schema: &SchemaDef, design_type: &str, brief: &str, image_count: usize) -> String {
    let mut out = format!(
        "Combine the user's written brief and the analyses of their {image_count} reference \
         image(s) into one coherent design concept graph for a {design_type}.\n\
         Assume intentionality behind all provided input. Rules:\n\
         1. Everything explicitly mentioned in the brief is represented by a node; list each \
         mentioned span in \"coverage\" mapping the verbatim span to the node id.\n\
         2. Every image impacts the graph with at least one feature; cite image indices in \
         \"images\".\n\
         3. Features are implied by repetition across multiple images or by saliency in one image.\n\
         4. Every node cites evidence: brief quotes in \"quotes\" or image indices in \"images\".\n\
         5. All nodes align with one coherent goal; add required decisions the inputs imply.\n\n\
         Brief:\n{brief}\n\n"
    );
    out.push_str(&schema_definitions(schema));
    out.push('\n');
    out.push_str(GRAPH_FORMAT);
    out.push_str(" Also include \"coverage\":{\"<verbatim brief span>\":\"<node id>\"}.");
    out
}

pub fn per_image_graph(index: usize, graph_json: &str) -> String {
    format!("Analysis of reference image {index}:\n{graph_json}")
}

pub fn repair(previous: &str, violations: &[String]) -> String {
    let mut out = String::from("Your previous graph violates these constraints:\n");
    for v in violations {
        let _ = writeln!(out, "- {v}");
    }
    let _ = write!(out, "\nPrevious graph:\n{previous}\n\nReturn the complete corrected graph.");
    out
}

pub fn interpret(schema: &SchemaDef, brief: &str, history: &str, graph_json: &str, message: &str) -> String {
    let mut out = format!(
        "You maintain a design concept graph that models the user's design intent. Interpret the \
         intent behind the user's new message given the brief and earlier messages, and decide \
         which nodes to edit or add to reflect it.\n\
         Prefer editing an existing node of the same type over adding a second node of that type; \
         mark an added node with \"refinement\":true when it refines an existing decision.\n\
         Nodes marked locked are confirmed by the user.\n\n\
         Brief:\n{brief}\n\nEarlier messages:\n{history}\n\nCurrent graph:\n{graph_json}\n\n\
         New message:\n{message}\n\n"
    );
    out.push_str(&schema_definitions(schema));
    out.push_str(OPS_FORMAT);
    out
}

const OPS_FORMAT: &str = "\nAnswer with JSON only: {\"ops\":[{\"op\":\"edit\",\"node\":id,\
\"description\":string} | {\"op\":\"add\",\"id\":new id,\"type\":key,\"description\":string,\
\"refinement\":bool} | {\"op\":\"edge\",\"source\":id,\"target\":id,\"reason\":string}]}";

pub fn consistency(graph_json: &str, message: &str) -> String {
    format!(
        "The design concept graph below was just updated in response to the user message \
         \"{message}\". Check the graph for inconsistencies introduced by the update and edit or \
         add related nodes to fix them. Never remove nodes. Return an empty op list if all nodes \
         are still aligned.\n\nGraph:\n{graph_json}\n{OPS_FORMAT}"
    )
}

pub fn question(schema: &SchemaDef, brief: &str, graph_json: &str, targets: &[String], budget: usize) -> String {
    let mut out = format!(
        "Ask the user one clarifying question about their design.\n\
         Target topics: {}.\n\
         Guidelines: bridge between the roles of design decisions (purpose, concepts, content, \
         style) and ask about how the topics relate; help the user reflect on turning \
         communicative goals and high-level concepts into visuals; be concise (at most {budget} \
         characters), accessible to novices and open rather than leading.\n\n\
         Brief:\n{brief}\n\nCurrent graph:\n{graph_json}\n\n",
        targets.join(", ")
    );
    out.push_str(&schema_definitions(schema));
    out.push_str("\nAnswer with JSON only: {\"text\":string,\"target_types\":[type key,...]}");
    out
}

pub fn gap(nodes_json: &str) -> String {
    format!(
        "Compare the attached design with each design decision below. For every node decide \
         whether the design satisfies it; if not, describe the gap and give one imperative \
         instruction that would close it.\n\nNodes:\n{nodes_json}\n\n\
         Answer with JSON only: {{\"verdicts\":[{{\"node\":id,\"satisfied\":bool,\"gap\":string,\
         \"instruction\":string}}]}}"
    )
}

pub fn update(instructions: &[String]) -> String {
    let mut out = String::from(
        "Edit the attached design so it aligns with the design concept. Keep everything else \
         unchanged. Required changes:\n",
    );
    for i in instructions {
        let _ = writeln!(out, "- {i}");
    }
    out
}

pub fn apply_analysis(type_key: &str, description: &str) -> String {
    format!(
        "Analyse how the following design decision can be realized or emphasized in the attached \
         design.\n{type_key}: {description}\n\n\
         Answer with JSON only: {{\"instruction\":string}} containing one imperative edit \
         instruction."
    )
}

pub fn apply_edit(instruction: &str) -> String {
    format!("Edit the attached design. Keep everything else unchanged.\n- {instruction}\n")
}

pub fn direct(design_type: &str, brief: &str) -> String {
    format!("Design a {design_type}.\n{brief}\n")
}
