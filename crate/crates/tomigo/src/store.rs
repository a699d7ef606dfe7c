//! Directory-per-project persistence.
//!
//! ```text
//! <project>/
//!   manifest.json            commit point: versions, images, designs, questions
//!   brief.json
//!   history.jsonl            one message per line; only the first
//!                            `history_len` lines (per manifest) are live
//!   graph.v<N>.cgraph.json   canonical graph bytes, one file per version
//!   images/<sha256>.<ext>    reference images, content-addressed
//!   designs/<sha256>.<ext>   generated artifacts, content-addressed
//! ```
//!
//! Every file is written to a temp sibling and renamed into place, and the
//! manifest is always written last, so a crash at any point leaves the
//! previous version loadable.

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tomigo_core::canonical::to_canonical_string;
use tomigo_core::dialogue::{Message, Question};
use tomigo_core::graph::{self, ConceptGraph, NodeId};
use tomigo_core::provider::{extension_for, sha256_hex, ImageData};
use tomigo_core::realign::Lineage;
use tomigo_core::synthesis::DesignBrief;

use crate::error::StorageError;

const MANIFEST: &str = "manifest.json";
const BRIEF: &str = "brief.json";
const HISTORY: &str = "history.jsonl";
const FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobRef {
    pub sha256: String,
    pub media_type: String,
}

impl BlobRef {
    pub fn of(image: &ImageData) -> Self {
        BlobRef { sha256: image.sha256_hex(), media_type: image.media_type.clone() }
    }

    fn file_name(&self) -> String {
        format!("{}.{}", self.sha256, extension_for(&self.media_type))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub id: String,
    #[serde(flatten)]
    pub blob: BlobRef,
    pub graph_version: u64,
    pub used_node_ids: Vec<NodeId>,
    pub lineage: Lineage,
    pub created_at: u64,
}

/// In-memory project state. Values are immutable once published; mutations
/// build a new `Project` and swap it in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    pub id: String,
    pub brief: DesignBrief,
    pub images: Vec<BlobRef>,
    pub history: Vec<Message>,
    pub graph_versions: Vec<ConceptGraph>,
    pub designs: Vec<DesignRecord>,
    pub questions: Vec<Question>,
    pub created_at: u64,
}

impl Project {
    pub fn new(id: impl Into<String>, brief: DesignBrief, created_at: u64) -> Self {
        Project {
            id: id.into(),
            brief,
            images: Vec::new(),
            history: Vec::new(),
            graph_versions: vec![ConceptGraph::new()],
            designs: Vec::new(),
            questions: Vec::new(),
            created_at,
        }
    }

    pub fn graph(&self) -> &ConceptGraph {
        self.graph_versions.last().expect("a project always has version 0")
    }

    /// Appends `graph` as the newest version. Callers only push graphs
    /// whose version is above the current one.
    pub fn push_graph(&mut self, graph: ConceptGraph) {
        debug_assert!(graph.version > self.graph().version);
        self.graph_versions.push(graph);
    }

    pub fn design(&self, id: &str) -> Option<&DesignRecord> {
        self.designs.iter().find(|d| d.id == id)
    }

    pub fn version_numbers(&self) -> Vec<u64> {
        self.graph_versions.iter().map(|g| g.version).collect()
    }

    /// The read-only view served by `GET /projects/{id}`.
    pub fn snapshot_value(&self) -> Value {
        json!({
            "id": self.id,
            "brief": self.brief,
            "images": self.images.iter().enumerate().map(|(i, b)| json!({
                "index": i, "sha256": b.sha256, "media_type": b.media_type,
            })).collect::<Vec<_>>(),
            "history": self.history,
            "graph": graph::graph_value(self.graph()),
            "graph_versions": self.version_numbers(),
            "designs": self.designs,
            "questions": self.questions,
            "created_at": self.created_at,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    id: String,
    created_at: u64,
    graph_versions: Vec<u64>,
    /// Next engine node id number; survives node removal so ids are never reused.
    id_floor: u64,
    history_len: usize,
    images: Vec<BlobRef>,
    designs: Vec<DesignRecord>,
    questions: Vec<Question>,
}

/// Test hook that aborts the next atomic write whose file name starts with
/// the armed prefix, after the temp file is written and before the rename.
#[derive(Debug, Clone, Default)]
pub struct CrashHook(Arc<Mutex<Option<String>>>);

impl CrashHook {
    pub fn arm(&self, file_prefix: &str) {
        *self.0.lock().expect("crash hook poisoned") = Some(file_prefix.to_string());
    }

    fn fire(&self, name: &str) -> bool {
        let mut armed = self.0.lock().expect("crash hook poisoned");
        match armed.as_deref() {
            Some(prefix) if name.starts_with(prefix) => {
                *armed = None;
                true
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProjectDir {
    path: PathBuf,
    crash: CrashHook,
}

fn graph_file(version: u64) -> String {
    format!("graph.v{version}.cgraph.json")
}

impl ProjectDir {
    pub fn new(path: impl Into<PathBuf>, crash: CrashHook) -> Self {
        ProjectDir { path: path.into(), crash }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.join(MANIFEST).is_file()
    }

    fn atomic_write(&self, rel: &str, bytes: &[u8]) -> Result<(), StorageError> {
        let target = self.path.join(rel);
        let dir = target.parent().expect("files live inside the project dir").to_path_buf();
        let name = target.file_name().expect("file name").to_string_lossy().into_owned();
        let tmp = dir.join(format!(".{name}.tmp"));
        {
            let mut f = File::create(&tmp).map_err(StorageError::io(&tmp))?;
            f.write_all(bytes).map_err(StorageError::io(&tmp))?;
            f.sync_all().map_err(StorageError::io(&tmp))?;
        }
        if self.crash.fire(&name) {
            return Err(StorageError::SimulatedCrash(target));
        }
        fs::rename(&tmp, &target).map_err(StorageError::io(&target))?;
        // directory fsync makes the rename durable; not all platforms allow it
        if let Ok(d) = File::open(&dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    fn write_blob(&self, folder: &str, blob: &BlobRef, image: &ImageData) -> Result<(), StorageError> {
        let rel = format!("{folder}/{}", blob.file_name());
        if self.path.join(&rel).is_file() {
            return Ok(());
        }
        self.atomic_write(&rel, &image.bytes)
    }

    fn read_blob(&self, folder: &str, blob: &BlobRef) -> Result<ImageData, StorageError> {
        let path = self.path.join(folder).join(blob.file_name());
        let bytes = fs::read(&path).map_err(StorageError::io(&path))?;
        if sha256_hex(&bytes) != blob.sha256 {
            return Err(StorageError::Corrupt { path, reason: "content hash mismatch".into() });
        }
        Ok(ImageData::new(blob.media_type.clone(), bytes))
    }

    pub fn store_image(&self, image: &ImageData) -> Result<BlobRef, StorageError> {
        let blob = BlobRef::of(image);
        self.write_blob("images", &blob, image)?;
        Ok(blob)
    }

    pub fn store_design(&self, image: &ImageData) -> Result<BlobRef, StorageError> {
        let blob = BlobRef::of(image);
        self.write_blob("designs", &blob, image)?;
        Ok(blob)
    }

    pub fn load_image(&self, blob: &BlobRef) -> Result<ImageData, StorageError> {
        self.read_blob("images", blob)
    }

    pub fn load_design(&self, blob: &BlobRef) -> Result<ImageData, StorageError> {
        self.read_blob("designs", blob)
    }

    /// Creates the directory layout and persists version 0.
    pub fn create(&self, project: &Project) -> Result<(), StorageError> {
        if self.exists() {
            return Err(StorageError::AlreadyExists(self.path.clone()));
        }
        for sub in ["", "images", "designs"] {
            let p = self.path.join(sub);
            fs::create_dir_all(&p).map_err(StorageError::io(&p))?;
        }
        let brief = serde_json::to_value(&project.brief).expect("brief serializes");
        self.atomic_write(BRIEF, format!("{}\n", to_canonical_string(&brief)).as_bytes())?;
        self.save(project)
    }

    /// Persists graph versions, the history, then the manifest. Blobs must
    /// already be stored. The newest version is always rewritten: a file left
    /// by an interrupted save was never committed and may hold other content.
    pub fn save(&self, project: &Project) -> Result<(), StorageError> {
        let newest = project.graph().version;
        for g in &project.graph_versions {
            let rel = graph_file(g.version);
            if g.version == newest || !self.path.join(&rel).is_file() {
                self.atomic_write(&rel, &graph::serialize_canonical(g))?;
            }
        }
        let mut history = String::new();
        for m in &project.history {
            history.push_str(&serde_json::to_string(m).expect("message serializes"));
            history.push('\n');
        }
        self.atomic_write(HISTORY, history.as_bytes())?;

        let manifest = Manifest {
            format: FORMAT,
            id: project.id.clone(),
            created_at: project.created_at,
            graph_versions: project.version_numbers(),
            id_floor: project.graph().id_floor(),
            history_len: project.history.len(),
            images: project.images.clone(),
            designs: project.designs.clone(),
            questions: project.questions.clone(),
        };
        let value = serde_json::to_value(&manifest).expect("manifest serializes");
        self.atomic_write(MANIFEST, format!("{}\n", to_canonical_string(&value)).as_bytes())
    }

    pub fn load(&self) -> Result<Project, StorageError> {
        let manifest_path = self.path.join(MANIFEST);
        let manifest: Manifest = read_json(&manifest_path)?;
        if manifest.format != FORMAT {
            return Err(StorageError::Corrupt {
                path: manifest_path,
                reason: format!("unsupported format {}", manifest.format),
            });
        }
        let brief: DesignBrief = read_json(&self.path.join(BRIEF))?;

        let history_path = self.path.join(HISTORY);
        let text = fs::read_to_string(&history_path).map_err(StorageError::io(&history_path))?;
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < manifest.history_len {
            return Err(StorageError::Corrupt { path: history_path, reason: "history shorter than manifest".into() });
        }
        let history = lines[..manifest.history_len]
            .iter()
            .map(|l| serde_json::from_str(l))
            .collect::<Result<Vec<Message>, _>>()
            .map_err(|e| StorageError::Corrupt { path: history_path.clone(), reason: e.to_string() })?;

        let mut graph_versions = Vec::with_capacity(manifest.graph_versions.len());
        for &v in &manifest.graph_versions {
            let path = self.path.join(graph_file(v));
            let bytes = fs::read(&path).map_err(StorageError::io(&path))?;
            let g = graph::deserialize(&bytes).map_err(|source| StorageError::Graph { path: path.clone(), source })?;
            if g.version != v {
                return Err(StorageError::Corrupt { path, reason: format!("file holds version {}", g.version) });
            }
            graph_versions.push(g);
        }
        let Some(last) = graph_versions.pop() else {
            return Err(StorageError::Corrupt { path: manifest_path, reason: "no graph versions".into() });
        };
        graph_versions.push(last.with_id_floor(manifest.id_floor));

        Ok(Project {
            id: manifest.id,
            brief,
            images: manifest.images,
            history,
            graph_versions,
            designs: manifest.designs,
            questions: manifest.questions,
            created_at: manifest.created_at,
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StorageError> {
    let bytes = fs::read(path).map_err(StorageError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| StorageError::Corrupt { path: path.to_path_buf(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tomigo_core::examples::magician_concept_graph;

    fn project() -> Project {
        Project::new("p1", DesignBrief::new("book cover", "A magician").unwrap(), 7)
    }

    #[test]
    fn round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let pd = ProjectDir::new(dir.path().join("p1"), CrashHook::default());
        let mut p = project();
        pd.create(&p).unwrap();
        let img = ImageData::new("image/png", vec![1, 2, 3]);
        p.images.push(pd.store_image(&img).unwrap());
        p.images.push(pd.store_image(&img).unwrap());
        p.history.push(Message::user("hello", 9));
        let mut g = magician_concept_graph();
        g.version = 1;
        p.push_graph(g);
        pd.save(&p).unwrap();

        let loaded = pd.load().unwrap();
        assert_eq!(loaded, p);
        assert_eq!(loaded.graph().id_floor(), 11);
        assert_eq!(pd.load_image(&loaded.images[1]).unwrap(), img);
        assert_eq!(fs::read_dir(dir.path().join("p1/images")).unwrap().count(), 1);
    }

    #[test]
    fn crash_before_rename_keeps_previous_version() {
        let dir = tempfile::tempdir().unwrap();
        let hook = CrashHook::default();
        let pd = ProjectDir::new(dir.path().join("p1"), hook.clone());
        let mut p = project();
        pd.create(&p).unwrap();
        let mut g = magician_concept_graph();
        g.version = 1;
        p.push_graph(g);

        hook.arm("manifest");
        assert!(matches!(pd.save(&p), Err(StorageError::SimulatedCrash(_))));
        let loaded = pd.load().unwrap();
        assert_eq!(loaded.version_numbers(), vec![0]);
        assert!(dir.path().join("p1/.manifest.json.tmp").exists());

        pd.save(&p).unwrap();
        assert_eq!(pd.load().unwrap().version_numbers(), vec![0, 1]);
    }

    #[test]
    fn tampered_blob_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let pd = ProjectDir::new(dir.path().join("p1"), CrashHook::default());
        pd.create(&project()).unwrap();
        let blob = pd.store_image(&ImageData::new("image/png", vec![1])).unwrap();
        fs::write(dir.path().join("p1/images").join(blob.file_name()), [2]).unwrap();
        assert!(matches!(pd.load_image(&blob), Err(StorageError::Corrupt { .. })));
    }
}
