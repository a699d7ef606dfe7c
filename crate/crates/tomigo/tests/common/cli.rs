//! Drives the `tomigo` binary against the magician fixture.

use std::path::Path;
use std::process::{Command, Output};

use tomigo_core::graph::deserialize;
use tomigo_core::schema::builtin_schema;

use super::*;

pub fn tomigo(project: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomigo"))
        .arg("--project")
        .arg(project)
        .arg("--fixtures")
        .arg(responses_dir())
        .args(args)
        .env_remove("TOMIGO_API_KEY")
        .output()
        .unwrap()
}

pub fn ok(project: &Path, args: &[&str]) -> String {
    let out = tomigo(project, args);
    assert!(
        out.status.success(),
        "tomigo {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// init → synthesize → chat → ask → generate → update → apply → lock →
/// validate → export on the magician fixture, in a fresh project under `root`.
pub fn magician_session(root: &Path) {
    let project = root.join("magician");
    let brief = fixture_dir().join("inputs/brief.txt");
    let mut init = vec!["init", "--type", "book cover", "--brief-file", brief.to_str().unwrap()];
    let images: Vec<String> = magician_image_paths().iter().map(|p| p.display().to_string()).collect();
    init.extend(images.iter().map(String::as_str));
    ok(&project, &init);

    ok(&project, &["synthesize"]);
    let shown = ok(&project, &["show"]);
    assert!(shown.find("SubjectiveImpression").unwrap() < shown.find("Colors").unwrap());

    let chat = ok(&project, &["chat", "Can you add more sparkles?"]);
    assert!(chat.contains("n6"), "{chat}");
    ok(&project, &["ask"]);
    ok(&project, &["generate"]);
    ok(&project, &["update-design"]);
    ok(&project, &["apply-node", "n6"]);
    ok(&project, &["node", "lock", "n8"]);
    ok(&project, &["validate"]);

    let out = root.join("export.json");
    ok(&project, &["export", "--out", out.to_str().unwrap()]);
    let graph = deserialize(&std::fs::read(&out).unwrap()).unwrap();
    assert!(graph.validate(&builtin_schema()).is_valid());
    assert!(graph.node(&"n8".into()).unwrap().locked);
    ok(&project, &["validate", out.to_str().unwrap()]);

    let transcript = std::fs::read_to_string(project.join("transcript.jsonl")).unwrap();
    assert!(transcript.lines().count() >= 12);
}

