//! Example concept graphs bundled into image-analysis prompts.
//!
//! The magician book cover mirrors a worked example from the design
//! literature; the other three are engine-authored fixtures.

use alloc::vec::Vec;

use crate::graph::{deserialize, ConceptGraph};

pub const MAGICIAN_BOOK_COVER: &str = include_str!("../fixtures/example_graphs/magician_book_cover.cgraph.json");
pub const BIRTHDAY_INVITATION: &str = include_str!("../fixtures/example_graphs/birthday_invitation.cgraph.json");
pub const CAFE_POSTER: &str = include_str!("../fixtures/example_graphs/cafe_poster.cgraph.json");
pub const SCIFI_NOVEL_COVER: &str = include_str!("../fixtures/example_graphs/scifi_novel_cover.cgraph.json");

/// The magician brief the bundled example graph was built from.
pub const MAGICIAN_BRIEF: &str = "Cartoon-style book cover of a magician, highlighting a book full of \
magic tricks, focusing on the magician in the center, in a colorful comic book style.";

pub fn magician_concept_graph() -> ConceptGraph {
    deserialize(MAGICIAN_BOOK_COVER.as_bytes()).expect("bundled fixture is valid")
}

/// `(design type, graph)` for all four bundled examples.
pub fn example_graphs() -> Vec<(&'static str, ConceptGraph)> {
    [
        ("book cover", MAGICIAN_BOOK_COVER),
        ("birthday invitation", BIRTHDAY_INVITATION),
        ("poster", CAFE_POSTER),
        ("book cover", SCIFI_NOVEL_COVER),
    ]
    .into_iter()
    .map(|(kind, text)| (kind, deserialize(text.as_bytes()).expect("bundled fixture is valid")))
    .collect()
}
