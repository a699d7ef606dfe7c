//! Typed vocabulary of design-concept node types.
//!
//! Node types are grouped into four roles ordered from granular to holistic:
//! `Stylistic < Content < Concepts < Purpose`. Edges are expected to flow
//! upward along that order; the classification here is advisory only and is
//! surfaced as validation warnings, never as errors.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::SchemaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeRole {
    Purpose,
    Concepts,
    Content,
    Stylistic,
}

impl NodeRole {
    pub const ALL: [NodeRole; 4] = [
        NodeRole::Purpose,
        NodeRole::Concepts,
        NodeRole::Content,
        NodeRole::Stylistic,
    ];

    /// Granular-to-holistic rank: Stylistic=0 … Purpose=3.
    pub fn rank(self) -> u8 {
        match self {
            NodeRole::Stylistic => 0,
            NodeRole::Content => 1,
            NodeRole::Concepts => 2,
            NodeRole::Purpose => 3,
        }
    }

    /// Purpose and Concepts frame the design as a whole.
    pub fn is_holistic(self) -> bool {
        matches!(self, NodeRole::Purpose | NodeRole::Concepts)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Purpose => "Purpose",
            NodeRole::Concepts => "Concepts",
            NodeRole::Content => "Content",
            NodeRole::Stylistic => "Stylistic",
        }
    }

    pub fn parse(name: &str) -> Result<NodeRole, SchemaError> {
        NodeRole::ALL
            .into_iter()
            .find(|r| r.as_str() == name)
            .ok_or_else(|| SchemaError::InvalidRole(name.to_owned()))
    }
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn role_rank(role: NodeRole) -> u8 {
    role.rank()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTypeDef {
    pub key: String,
    pub role: NodeRole,
    pub description: String,
    #[serde(rename = "examples", default)]
    pub example_phrases: Vec<String>,
    #[serde(default)]
    pub builtin: bool,
}

impl NodeTypeDef {
    pub fn custom(key: impl Into<String>, role: NodeRole, description: impl Into<String>) -> Self {
        NodeTypeDef {
            key: key.into(),
            role,
            description: description.into(),
            example_phrases: Vec::new(),
            builtin: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeTypicality {
    Typical,
    AtypicalDirection,
    AtypicalIntraRole,
    UnknownType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaDef {
    types: Vec<NodeTypeDef>,
    intra_role_typical_pairs: Vec<(String, String)>,
}

pub const BUILTIN_KEYS: [&str; 10] = [
    "SubjectiveImpression",
    "Function",
    "ArtStyle",
    "Narratives",
    "Motifs",
    "Composition",
    "VerbalElements",
    "Colors",
    "Typography",
    "Textures",
];

fn builtin(key: &str, role: NodeRole, description: &str, examples: &[&str]) -> NodeTypeDef {
    NodeTypeDef {
        key: key.to_owned(),
        role,
        description: description.to_owned(),
        example_phrases: examples.iter().map(|s| (*s).to_owned()).collect(),
        builtin: true,
    }
}

/// The ten built-in node types in table order, plus the two same-role
/// pairs whose direction is known to be typical.
pub fn builtin_schema() -> SchemaDef {
    use NodeRole::*;
    let types = alloc::vec![
        builtin(
            "SubjectiveImpression",
            Purpose,
            "Relates to how the design is interpreted subjectively. These could be moods which \
             describe an emotional response, ambiance related to a social or cultural setting \
             evoked, or character expressed by the design.",
            &["playful and whimsical mood", "cozy ambiance", "energetic character"],
        ),
        builtin(
            "Function",
            Purpose,
            "Refers to the purpose or intended outcome of the design, focusing on how it \
             communicates, appeals to specific audiences, and serves practical or thematic goals.",
            &["book cover that sells a collection of magic tricks", "appeals to children"],
        ),
        builtin(
            "ArtStyle",
            Concepts,
            "A consistent artistic style or aesthetic approach that shapes how the visual \
             elements are interpreted and combined.",
            &["comic book illustration", "flat vector style"],
        ),
        builtin(
            "Narratives",
            Concepts,
            "Broader concepts, themes, or genres that group a design's underlying ideas, \
             narratives, and emotional tones. They provide a conceptual framework that guides \
             the visual and contextual elements.",
            &["magic performance on stage", "retro sci-fi adventure"],
        ),
        builtin(
            "Motifs",
            Content,
            "Visual elements within a design that serve as objects, symbols, or shapes to \
             convey meaning, enhance the narrative, or provide decorative details. Subcategories \
             include the main subject and its expression, decorative objects, and structures \
             such as borders.",
            &["magician in the center", "top hat, wand, rabbit", "ornamental border"],
        ),
        builtin(
            "Composition",
            Content,
            "Positioning and sizing of the visual elements, including foreground, \
             middle-ground, and background.",
            &["centered main figure", "props arranged in a circle"],
        ),
        builtin(
            "VerbalElements",
            Content,
            "Refers to the verbal contents and contains considerations of what information is \
             displayed in titles or other texts, as well as diction and verbal tone.",
            &["title 'The Magic Show'", "playful tagline"],
        ),
        builtin(
            "Colors",
            Stylistic,
            "The palette of colors used in the design, with subcategories describing specific \
             inspirational features within the palette (colorfulness, contrasts, lightness, \
             chroma) or specific application areas (primary colors, background colors, object \
             colors).",
            &["bright saturated primaries", "teal gradient background"],
        ),
        builtin(
            "Typography",
            Stylistic,
            "The visual and aesthetic characteristics of text in terms of font families and \
             styling, custom lettering, or hand-drawn styles.",
            &["bold sans-serif with outline", "hand-lettered title"],
        ),
        builtin(
            "Textures",
            Stylistic,
            "Surface qualities of motifs and backgrounds.",
            &["flat vector fills", "sparkly effects"],
        ),
    ];
    SchemaDef {
        types,
        intra_role_typical_pairs: alloc::vec![
            ("Colors".to_owned(), "Typography".to_owned()),
            ("Composition".to_owned(), "Motifs".to_owned()),
        ],
    }
}

impl SchemaDef {
    pub fn types(&self) -> &[NodeTypeDef] {
        &self.types
    }

    pub fn intra_role_typical_pairs(&self) -> &[(String, String)] {
        &self.intra_role_typical_pairs
    }

    pub fn get(&self, key: &str) -> Option<&NodeTypeDef> {
        self.types.iter().find(|t| t.key == key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn role_of(&self, key: &str) -> Option<NodeRole> {
        self.get(key).map(|t| t.role)
    }

    /// Position of `key` in declaration order; used for deterministic tie-breaks.
    pub fn position(&self, key: &str) -> Option<usize> {
        self.types.iter().position(|t| t.key == key)
    }

    pub fn keys(&self) -> impl DoubleEndedIterator<Item = &str> {
        self.types.iter().map(|t| t.key.as_str())
    }

    pub fn classify_edge_typicality(&self, source_type: &str, target_type: &str) -> EdgeTypicality {
        let (Some(src), Some(dst)) = (self.role_of(source_type), self.role_of(target_type)) else {
            return EdgeTypicality::UnknownType;
        };
        match src.rank().cmp(&dst.rank()) {
            core::cmp::Ordering::Less => EdgeTypicality::Typical,
            core::cmp::Ordering::Greater => EdgeTypicality::AtypicalDirection,
            core::cmp::Ordering::Equal => {
                let listed = self
                    .intra_role_typical_pairs
                    .iter()
                    .any(|(a, b)| a == source_type && b == target_type);
                if listed {
                    EdgeTypicality::Typical
                } else {
                    EdgeTypicality::AtypicalIntraRole
                }
            }
        }
    }

    /// Returns a new schema with `def` appended as a custom type. The
    /// receiver is left untouched.
    pub fn register_custom_type(&self, mut def: NodeTypeDef) -> Result<SchemaDef, SchemaError> {
        if def.key.trim().is_empty() {
            return Err(SchemaError::EmptyKey);
        }
        if self.contains(&def.key) {
            return Err(SchemaError::DuplicateTypeKey(def.key));
        }
        def.builtin = false;
        let mut next = self.clone();
        next.types.push(def);
        Ok(next)
    }

    /// JSON document with lexicographically sorted object keys. Types keep
    /// their declaration order, which drives question-target tie-breaks.
    pub fn to_json(&self) -> String {
        let types: Vec<Value> = self
            .types
            .iter()
            .map(|t| {
                json!({
                    "key": t.key,
                    "role": t.role.as_str(),
                    "description": t.description,
                    "examples": t.example_phrases,
                    "builtin": t.builtin,
                })
            })
            .collect();
        let pairs: Vec<Value> = self
            .intra_role_typical_pairs
            .iter()
            .map(|(a, b)| json!([a, b]))
            .collect();
        let mut out = json!({ "types": types, "intra_role_typical_pairs": pairs }).to_string();
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<SchemaDef, SchemaError> {
        #[derive(Deserialize)]
        struct RawType {
            key: String,
            role: String,
            description: String,
            #[serde(default)]
            examples: Vec<String>,
            #[serde(default)]
            builtin: bool,
        }
        #[derive(Deserialize)]
        struct RawSchema {
            types: Vec<RawType>,
            #[serde(default)]
            intra_role_typical_pairs: Vec<(String, String)>,
        }
        let raw: RawSchema =
            serde_json::from_str(text).map_err(|e| SchemaError::Parse(e.to_string()))?;
        let base = builtin_schema();
        let mut schema = SchemaDef {
            types: base.types.clone(),
            intra_role_typical_pairs: raw.intra_role_typical_pairs,
        };
        for t in raw.types {
            let role = NodeRole::parse(&t.role)?;
            if let Some(existing) = base.get(&t.key) {
                // Builtins are canonical; a document may restate them but not redefine them.
                if !t.builtin || existing.role != role {
                    return Err(SchemaError::DuplicateTypeKey(t.key));
                }
                continue;
            }
            schema = schema.register_custom_type(NodeTypeDef {
                key: t.key,
                role,
                description: t.description,
                example_phrases: t.examples,
                builtin: false,
            })?;
        }
        Ok(schema)
    }
}

impl Default for SchemaDef {
    fn default() -> Self {
        builtin_schema()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_ten_types_in_four_roles() {
        let s = builtin_schema();
        assert_eq!(s.types().len(), 10);
        for role in NodeRole::ALL {
            assert!(s.types().iter().any(|t| t.role == role));
        }
        assert!(s.types().iter().all(|t| t.builtin));
        let keys: Vec<&str> = s.keys().collect();
        assert_eq!(keys, BUILTIN_KEYS);
    }

    #[test]
    fn table_descriptions_transcribed() {
        let s = builtin_schema();
        assert!(s
            .get("SubjectiveImpression")
            .unwrap()
            .description
            .contains("interpreted subjectively"));
        assert_eq!(s.role_of("Colors"), Some(NodeRole::Stylistic));
        assert_eq!(s.role_of("VerbalElements"), Some(NodeRole::Content));
        assert_eq!(s.get("Textures").unwrap().description, "Surface qualities of motifs and backgrounds.");
    }

    #[test]
    fn ranks() {
        assert_eq!(role_rank(NodeRole::Stylistic), 0);
        assert_eq!(role_rank(NodeRole::Purpose), 3);
        assert!(role_rank(NodeRole::Content) < role_rank(NodeRole::Concepts));
    }

    #[test]
    fn classify_examples() {
        let s = builtin_schema();
        assert_eq!(s.classify_edge_typicality("Colors", "ArtStyle"), EdgeTypicality::Typical);
        assert_eq!(s.classify_edge_typicality("Colors", "Typography"), EdgeTypicality::Typical);
        assert_eq!(s.classify_edge_typicality("Typography", "Colors"), EdgeTypicality::AtypicalIntraRole);
        assert_eq!(s.classify_edge_typicality("Composition", "Motifs"), EdgeTypicality::Typical);
        assert_eq!(s.classify_edge_typicality("Function", "Textures"), EdgeTypicality::AtypicalDirection);
        assert_eq!(s.classify_edge_typicality("Vibe", "Colors"), EdgeTypicality::UnknownType);
    }

    #[test]
    fn register_custom() {
        let s = builtin_schema();
        let def = NodeTypeDef::custom("Animation", NodeRole::Content, "Motion of elements");
        let s2 = s.register_custom_type(def).unwrap();
        assert_eq!(s2.types().len(), 11);
        assert_eq!(s.types().len(), 10);
        assert!(!s2.get("Animation").unwrap().builtin);
        assert_eq!(s2.classify_edge_typicality("Animation", "Narratives"), EdgeTypicality::Typical);

        let dup = NodeTypeDef::custom("Colors", NodeRole::Stylistic, "shadow");
        assert_eq!(s.register_custom_type(dup), Err(SchemaError::DuplicateTypeKey("Colors".into())));
        assert_eq!(NodeRole::parse("Mood"), Err(SchemaError::InvalidRole("Mood".into())));
    }

    #[test]
    fn json_round_trip_keeps_custom_types() {
        let s = builtin_schema()
            .register_custom_type(NodeTypeDef::custom("Animation", NodeRole::Content, "Motion"))
            .unwrap();
        let text = s.to_json();
        assert!(text.starts_with("{\"intra_role_typical_pairs\":[[\"Colors\",\"Typography\"]"));
        let back = SchemaDef::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn json_import_rejects_shadowing_and_bad_roles() {
        let shadow = r#"{"types":[{"key":"Colors","role":"Content","description":"x"}]}"#;
        assert!(matches!(SchemaDef::from_json(shadow), Err(SchemaError::DuplicateTypeKey(_))));
        let bad = r#"{"types":[{"key":"Animation","role":"Mood","description":"x"}]}"#;
        assert!(matches!(SchemaDef::from_json(bad), Err(SchemaError::InvalidRole(_))));
    }
}
