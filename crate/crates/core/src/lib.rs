//! Engine for interpretable design-concept graphs.
//!
//! The graph models a user's design intent as typed decisions (mood, art
//! style, motifs, colors, …) connected by reasoned edges. This crate holds
//! the pure engine: schema, graph values and patches, synthesis from briefs
//! and reference images, chat-driven updates, clarifying questions, and
//! design generation/realignment. Model backends sit behind
//! [`provider::Provider`]; IO lives in the companion `tomigo` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod canonical;
pub mod dialogue;
pub mod error;
pub mod examples;
pub mod exchange;
pub mod graph;
pub mod prompts;
pub mod provider;
pub mod realign;
pub mod schema;
pub mod shape;
pub mod synthesis;
