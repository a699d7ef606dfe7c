use proptest::prelude::*;
use tomigo_core::graph::{
    deserialize, serialize_canonical, ConceptGraph, ConflictReason, Edge, GraphPatch, Node, NodeId, PatchOp, Provenance,
};
use tomigo_core::schema::{builtin_schema, EdgeTypicality, BUILTIN_KEYS};

const POOL: u64 = 8;

fn id_strategy() -> impl Strategy<Value = NodeId> {
    (1..=POOL).prop_map(NodeId::issued)
}

fn text_strategy() -> impl Strategy<Value = String> {
    prop_oneof![4 => "[a-z]{1,8}( [a-z]{1,8}){0,3}", 1 => Just(String::from("   "))]
}

fn op_strategy() -> impl Strategy<Value = PatchOp> {
    prop_oneof![
        (id_strategy(), 0..BUILTIN_KEYS.len(), text_strategy())
            .prop_map(|(id, t, d)| PatchOp::add_node(Node::new(id, BUILTIN_KEYS[t], d))),
        (id_strategy(), text_strategy()).prop_map(|(id, d)| PatchOp::edit(id, d, Provenance::user_edit("prop"))),
        id_strategy().prop_map(PatchOp::remove),
        (id_strategy(), id_strategy(), text_strategy()).prop_map(|(s, t, r)| PatchOp::add_edge(Edge::new(s, t, r))),
        (id_strategy(), id_strategy()).prop_map(|(s, t)| PatchOp::remove_edge(s, t)),
        (id_strategy(), any::<bool>()).prop_map(|(id, l)| PatchOp::set_lock(id, l)),
    ]
}

fn patches() -> impl Strategy<Value = Vec<Vec<PatchOp>>> {
    prop::collection::vec(prop::collection::vec(op_strategy(), 1..6), 1..12)
}

proptest! {
    #[test]
    fn patch_sequences_preserve_invariants(seq in patches()) {
        let schema = builtin_schema();
        let mut g = ConceptGraph::new();
        for ops in seq {
            let patch = GraphPatch::new(ops);
            let out = g.apply_patch(&patch);
            let next = &out.graph;

            prop_assert!(next.validate(&schema).is_valid(), "{:?}", next.validate(&schema));
            prop_assert_eq!(next.version, g.version + u64::from(!out.applied.is_empty()));
            prop_assert_eq!(out.applied.len() + out.conflicts.rejected.len(), patch.ops.len());

            for node in &g.nodes {
                match next.node(&node.id) {
                    Some(after) => {
                        // dirty never clears through patches
                        prop_assert!(!node.dirty || after.dirty);
                    }
                    None => {
                        let unlocked = out.applied.iter().any(|&i| {
                            matches!(&patch.ops[i], PatchOp::SetLock { id, locked: false } if *id == node.id)
                        });
                        prop_assert!(!node.locked || unlocked, "locked node {} was removed", node.id);
                    }
                }
            }

            let bytes = serialize_canonical(next);
            let back = deserialize(&bytes).unwrap();
            prop_assert_eq!(&back, next);
            prop_assert_eq!(serialize_canonical(&back), bytes);
            g = out.graph;
        }
    }

    #[test]
    fn locked_nodes_reject_edit_and_remove(desc in "[a-z]{1,10}", remove in any::<bool>()) {
        let base = ConceptGraph::new()
            .apply_patch(&GraphPatch::new(vec![
                PatchOp::add_node(Node::new("n1", "Colors", "red")),
                PatchOp::set_lock("n1", true),
            ]))
            .graph;
        let op = if remove { PatchOp::remove("n1") } else { PatchOp::edit("n1", desc, Provenance::user_edit("x")) };
        let out = base.apply_patch(&GraphPatch::new(vec![op]));
        prop_assert_eq!(out.conflicts.reasons(), vec![ConflictReason::LockedNode]);
        prop_assert_eq!(&out.graph, &base);
        prop_assert_eq!(out.graph.version, base.version);
    }

    #[test]
    fn cross_role_typicality_is_antisymmetric(a in 0..BUILTIN_KEYS.len(), b in 0..BUILTIN_KEYS.len()) {
        let schema = builtin_schema();
        let (ka, kb) = (BUILTIN_KEYS[a], BUILTIN_KEYS[b]);
        let ra = schema.role_of(ka).unwrap().rank();
        let rb = schema.role_of(kb).unwrap().rank();
        let fwd = schema.classify_edge_typicality(ka, kb);
        let back = schema.classify_edge_typicality(kb, ka);
        if ra != rb {
            prop_assert!((fwd == EdgeTypicality::Typical) != (back == EdgeTypicality::Typical));
        } else if a != b {
            // a same-role pair is never typical in both directions
            prop_assert!(!(fwd == EdgeTypicality::Typical && back == EdgeTypicality::Typical));
        }
    }
}

#[test]
fn mark_generated_only_clears_listed_nodes() {
    let g = tomigo_core::examples::magician_concept_graph();
    let used = [NodeId::new("n6"), NodeId::new("n9")].into_iter().collect();
    let marked = g.mark_generated(&used).unwrap();
    assert_eq!(marked.dirty_ids().len(), 8);
    assert_eq!(marked.version, g.version + 1);
    assert_eq!(g.mark_generated(&Default::default()).unwrap(), g);
}
