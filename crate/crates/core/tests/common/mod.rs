#![allow(dead_code)]

use serde_json::{json, Value};
use tomigo_core::provider::{stage, FixtureSet, ImageData};
use tomigo_core::synthesis::{DesignBrief, ImageSet};

pub const MAGICIAN_BRIEF: &str = tomigo_core::examples::MAGICIAN_BRIEF;

pub fn brief() -> DesignBrief {
    DesignBrief::new("book cover", MAGICIAN_BRIEF).unwrap()
}

pub fn png(tag: u8) -> ImageData {
    // content only needs to be distinct per image for these tests
    ImageData::new("image/png", vec![0x89, b'P', b'N', b'G', tag])
}

pub fn images(n: u8) -> ImageSet {
    ImageSet::new((0..n).map(png).collect())
}

pub fn image_graph(index: usize) -> Value {
    let (style, motif) = match index {
        0 => ("Cartoon illustration with thick outlines", "Magician in a top hat waving a wand"),
        1 => ("Comic panel style", "Playing cards fanned out on a stage"),
        2 => ("Flat vector cartoon", "White rabbit popping out of a hat"),
        3 => ("Comic book illustration", "Wand and top hat surrounded by sparkles"),
        _ => ("Retro comic poster", "Bold title lettering above a stage curtain"),
    };
    json!({
        "nodes": [
            {"id": "a", "type": "ArtStyle", "description": style},
            {"id": "b", "type": "Motifs", "description": motif},
            {"id": "c", "type": "Colors", "description": "Bright saturated primaries"}
        ],
        "edges": [
            {"source": "b", "target": "a", "reason": "subject drawn in the style"},
            {"source": "c", "target": "a", "reason": "primaries typical of comics"}
        ]
    })
}

/// Unified magician graph in provider wire format. Node order matches the
/// bundled example so engine ids come out as n1..n10.
pub fn synthesized_graph(omit_image: Option<usize>) -> Value {
    let imgs = |list: &[usize]| -> Vec<usize> { list.iter().copied().filter(|i| Some(*i) != omit_image).collect() };
    json!({
        "nodes": [
            {"id": "fn", "type": "Function", "description": "Cover for a cartoon-style book of magic tricks that invites readers to learn and perform the tricks", "quotes": ["highlighting a book full of magic tricks"]},
            {"id": "mood", "type": "SubjectiveImpression", "description": "Playful, whimsical, energetic and magical mood", "images": imgs(&[0, 2])},
            {"id": "style", "type": "ArtStyle", "description": "Comic book illustration with bold outlines, dynamic poses and vector style", "quotes": ["Cartoon-style", "in a colorful comic book style"]},
            {"id": "story", "type": "Narratives", "description": "Magic performance on stage", "images": imgs(&[1, 4])},
            {"id": "main", "type": "Motifs", "description": "Main motif: magician figure centered with magic elements", "quotes": ["focusing on the magician in the center"]},
            {"id": "props", "type": "Motifs", "description": "Secondary motifs: magic props such as top hat, wand, rabbit and playing cards, with stars and sparkles", "images": imgs(&[0, 1, 3])},
            {"id": "comp", "type": "Composition", "description": "Centered magician with props in a dynamic arrangement, costume contrasting with the background", "quotes": ["focusing on the magician in the center"]},
            {"id": "colors", "type": "Colors", "description": "Bright saturated colors: red, blue, yellow, green, purple, pink, black and white", "quotes": ["colorful"]},
            {"id": "type", "type": "Typography", "description": "bold, dynamic sans-serif with outline, comic-style lettering", "images": imgs(&[4])},
            {"id": "tex", "type": "Textures", "description": "Flat vector textures with sparkly effects", "images": imgs(&[2, 3])}
        ],
        "edges": [
            {"source": "style", "target": "fn", "reason": "A cartoon style signals a fun, approachable trick book"},
            {"source": "style", "target": "mood", "reason": "Comic illustration makes the cover feel playful"},
            {"source": "story", "target": "fn", "reason": "A stage show frames the book as a guide to performing"},
            {"source": "main", "target": "story", "reason": "The magician embodies the performance narrative"},
            {"source": "props", "target": "story", "reason": "Props are recognizable symbols of a magic show"},
            {"source": "comp", "target": "main", "reason": "Centered composition supports clear identification of the magician"},
            {"source": "comp", "target": "props", "reason": "The dynamic arrangement scatters props around the magician"},
            {"source": "colors", "target": "mood", "reason": "Vibrant colors reinforce a playful mood"},
            {"source": "colors", "target": "type", "reason": "High-contrast colors keep the outlined title readable"},
            {"source": "type", "target": "style", "reason": "Outlined comic lettering matches the comic book aesthetic"},
            {"source": "tex", "target": "props", "reason": "Sparkly effects emphasize the magic props"}
        ],
        "coverage": {
            "Cartoon-style": "style",
            "book cover": "fn",
            "magician": "main",
            "book full of magic tricks": "fn",
            "magician in the center": "comp",
            "colorful": "colors",
            "comic book style": "style"
        }
    })
}

pub fn analysis_fixtures(f: &mut FixtureSet, count: usize) {
    for i in 0..count {
        f.push_json(stage::IMAGE_ANALYSIS, &image_graph(i));
    }
}
