//! Project operations shared by the REST API and the CLI.
//!
//! Each mutation takes a project-scoped exclusive claim (a second concurrent
//! mutation fails fast with `ConcurrentMutation` rather than queueing),
//! builds a new [`Project`] value, persists it, and only then publishes it.
//! Reads clone the published `Arc` and never wait on a writer.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tomigo_core::dialogue::{
    addressed_topics, generate_clarifying_question, interpret_message, select_question_targets, InterpretOptions,
    Message, Question, DEFAULT_QUESTION_BUDGET,
};
use tomigo_core::graph::{ConceptGraph, ConflictReport, GraphPatch, NodeId};
use tomigo_core::provider::{ImageData, Provider};
use tomigo_core::realign::{
    apply_node_to_design, gap_analysis, generate_design, generate_direct, update_design, ArtifactSlot, DesignArtifact,
    Generated, NodeGap,
};
use tomigo_core::schema::{builtin_schema, SchemaDef};
use tomigo_core::synthesis::{
    analyze_image, synthesize_concept, ConstraintReport, DesignBrief, ImageSet, SynthesisOptions,
};

use crate::error::{ServiceError, StorageError};
use crate::store::{BlobRef, CrashHook, DesignRecord, Project, ProjectDir};

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub graph: ConceptGraph,
    pub constraint_report: ConstraintReport,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PatchResult {
    pub graph: ConceptGraph,
    pub conflicts: ConflictReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MessageResult {
    pub patch: GraphPatch,
    pub conflicts: ConflictReport,
    pub summary: String,
    pub changed_node_ids: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignResult {
    pub design_id: String,
    /// Gaps the update closed; empty for other operations.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<NodeGap>,
}

struct Slot {
    dir: ProjectDir,
    busy: AtomicBool,
    current: RwLock<Arc<Project>>,
}

impl Slot {
    fn load(&self) -> Arc<Project> {
        self.current.read().expect("project lock poisoned").clone()
    }

    fn claim(&self) -> Result<Claim<'_>, ServiceError> {
        if self.busy.swap(true, Ordering::AcqRel) {
            return Err(ServiceError::ConcurrentMutation(self.load().id.clone()));
        }
        Ok(Claim { slot: self })
    }
}

/// Exclusive mutation right on one project; released on drop.
struct Claim<'a> {
    slot: &'a Slot,
}

impl Claim<'_> {
    fn project(&self) -> Arc<Project> {
        self.slot.load()
    }

    /// Persists `next` and publishes it. On failure the published value is
    /// left as it was, matching what is on disk.
    fn commit(&self, next: Project) -> Result<Arc<Project>, ServiceError> {
        self.slot.dir.save(&next)?;
        let next = Arc::new(next);
        *self.slot.current.write().expect("project lock poisoned") = next.clone();
        Ok(next)
    }
}

impl Drop for Claim<'_> {
    fn drop(&mut self) {
        self.slot.busy.store(false, Ordering::Release);
    }
}

pub struct Service {
    root: PathBuf,
    provider: Arc<dyn Provider>,
    schema: SchemaDef,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
    crash: CrashHook,
    counter: AtomicU64,
    synthesis: SynthesisOptions,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
}

impl Service {
    pub fn new(root: impl Into<PathBuf>, provider: Arc<dyn Provider>) -> Self {
        Service {
            root: root.into(),
            provider,
            schema: builtin_schema(),
            slots: Mutex::new(HashMap::new()),
            crash: CrashHook::default(),
            counter: AtomicU64::new(0),
            synthesis: SynthesisOptions::default(),
        }
    }

    pub fn with_schema(mut self, schema: SchemaDef) -> Self {
        self.schema = schema;
        self
    }

    pub fn with_synthesis_options(mut self, options: SynthesisOptions) -> Self {
        self.synthesis = options;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn provider(&self) -> &Arc<dyn Provider> {
        &self.provider
    }

    pub fn schema(&self) -> &SchemaDef {
        &self.schema
    }

    /// Hook for crash-safety tests; see [`CrashHook`].
    pub fn crash_hook(&self) -> &CrashHook {
        &self.crash
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        if !valid_id(id) {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let mut slots = self.slots.lock().expect("slot table poisoned");
        if let Some(s) = slots.get(id) {
            return Ok(s.clone());
        }
        let dir = ProjectDir::new(self.root.join(id), self.crash.clone());
        if !dir.exists() {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let project = dir.load()?;
        let slot = Arc::new(Slot { dir, busy: AtomicBool::new(false), current: RwLock::new(Arc::new(project)) });
        slots.insert(id.to_string(), slot.clone());
        Ok(slot)
    }

    fn fresh_id(&self, brief: &DesignBrief) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
        let digest = Sha256::digest(format!("{}|{}|{nanos}|{n}", brief.design_type, brief.text));
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("p{hex}")
    }

    /// Creates and persists a project with an empty graph (version 0). With
    /// `id = None` a fresh id is generated.
    pub fn create_project(
        &self,
        id: Option<&str>,
        design_type: &str,
        brief_text: &str,
        images: &[ImageData],
    ) -> Result<String, ServiceError> {
        let brief = DesignBrief::new(design_type, brief_text).map_err(|e| ServiceError::InvalidBrief(e.to_string()))?;
        let id = match id {
            Some(id) if valid_id(id) => id.to_string(),
            Some(id) => return Err(ServiceError::BadRequest(format!("invalid project id `{id}`"))),
            None => self.fresh_id(&brief),
        };
        let mut slots = self.slots.lock().expect("slot table poisoned");
        let dir = ProjectDir::new(self.root.join(&id), self.crash.clone());
        if slots.contains_key(&id) || dir.exists() {
            return Err(StorageError::AlreadyExists(dir.path().to_path_buf()).into());
        }
        let mut project = Project::new(id.clone(), brief, now_secs());
        dir.create(&project)?;
        if !images.is_empty() {
            for img in images {
                project.images.push(dir.store_image(img)?);
            }
            dir.save(&project)?;
        }
        let slot = Slot { dir, busy: AtomicBool::new(false), current: RwLock::new(Arc::new(project)) };
        slots.insert(id.clone(), Arc::new(slot));
        Ok(id)
    }

    pub fn snapshot(&self, id: &str) -> Result<Arc<Project>, ServiceError> {
        Ok(self.slot(id)?.load())
    }

    pub fn add_image(&self, id: &str, image: ImageData) -> Result<usize, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let mut next = (*claim.project()).clone();
        next.images.push(slot.dir.store_image(&image)?);
        let index = next.images.len() - 1;
        claim.commit(next)?;
        Ok(index)
    }

    fn load_images(&self, slot: &Slot, project: &Project) -> Result<Vec<ImageData>, ServiceError> {
        Ok(project.images.iter().map(|b| slot.dir.load_image(b)).collect::<Result<_, _>>()?)
    }

    /// Analyses every reference image, then synthesizes the unified graph,
    /// which becomes the next version.
    pub fn synthesize(&self, id: &str) -> Result<SynthesisResult, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let project = claim.project();
        let images = ImageSet::new(self.load_images(&slot, &project)?);
        let provider = self.provider.as_ref();
        let mut warnings = Vec::new();
        let mut per_image = Vec::with_capacity(images.len());
        for (i, img) in images.iter() {
            let analysis = analyze_image(provider, &self.schema, i, img)?;
            warnings.extend(analysis.warnings.into_iter().map(|w| format!("image {i}: {w}")));
            per_image.push(analysis.graph);
        }
        let current = project.graph();
        let options = SynthesisOptions { id_floor: current.id_floor(), ..self.synthesis };
        let outcome = synthesize_concept(provider, &self.schema, &project.brief, &images, &per_image, options)?;
        warnings.extend(outcome.warnings);

        let mut graph = outcome.graph;
        graph.version = current.version + 1;
        let mut next = (*project).clone();
        next.push_graph(graph.clone());
        claim.commit(next)?;
        Ok(SynthesisResult { graph, constraint_report: outcome.report, warnings })
    }

    /// Applies a UI patch. Add-node ops may leave the id empty to get an
    /// engine-issued one. A fully rejected patch creates no version.
    pub fn patch_graph(&self, id: &str, patch: GraphPatch) -> Result<PatchResult, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let project = claim.project();
        let patch = patch.assign_missing_ids(project.graph());
        let outcome = project.graph().apply_patch(&patch);
        if !outcome.applied.is_empty() {
            let mut next = (*project).clone();
            next.push_graph(outcome.graph.clone());
            claim.commit(next)?;
        }
        Ok(PatchResult { graph: outcome.graph, conflicts: outcome.conflicts })
    }

    /// Records the message, interprets it and applies the resulting patch.
    /// The message stays in the history even if the provider fails.
    pub fn handle_user_message(&self, id: &str, text: &str) -> Result<MessageResult, ServiceError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ServiceError::BadRequest("message text is empty".into()));
        }
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let mut next = (*claim.project()).clone();
        next.history.push(Message::user(text, now_secs()));
        let project = claim.commit(next)?;

        let interpretation = interpret_message(
            self.provider.as_ref(),
            &self.schema,
            &project.brief,
            &project.history,
            project.graph(),
            InterpretOptions::default(),
        )?;
        let outcome = project.graph().apply_patch(&interpretation.patch);
        let changed = outcome.changed_node_ids(&interpretation.patch);
        if !outcome.applied.is_empty() {
            let mut next = (*project).clone();
            next.push_graph(outcome.graph);
            claim.commit(next)?;
        }
        Ok(MessageResult {
            summary: summarize(&changed, &outcome.conflicts),
            patch: interpretation.patch,
            conflicts: outcome.conflicts,
            changed_node_ids: changed,
        })
    }

    /// Generates a clarifying question from the current state. The question
    /// is logged and appended to the history as a system message.
    pub fn next_question(&self, id: &str) -> Result<Question, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let project = claim.project();
        let addressed = addressed_topics(&project.history, project.graph());
        let recent: Vec<String> =
            project.questions.iter().flat_map(|q| q.target_type_keys.iter().cloned()).collect();
        let targets = select_question_targets(&self.schema, &addressed, &recent);
        let question = generate_clarifying_question(
            self.provider.as_ref(),
            &self.schema,
            &project.brief,
            project.graph(),
            &targets,
            DEFAULT_QUESTION_BUDGET,
        )?;
        let mut next = (*project).clone();
        next.questions.push(question.clone());
        next.history.push(Message::system(question.text.clone(), now_secs()));
        claim.commit(next)?;
        Ok(question)
    }

    fn slot_for(project: &Project) -> ArtifactSlot {
        ArtifactSlot::new(format!("d{}", project.designs.len() + 1), now_secs())
    }

    fn artifact_of(&self, slot: &Slot, record: &DesignRecord) -> Result<DesignArtifact, ServiceError> {
        Ok(DesignArtifact {
            id: record.id.clone(),
            image: slot.dir.load_design(&record.blob)?,
            graph_version: record.graph_version,
            used_node_ids: record.used_node_ids.iter().cloned().collect(),
            lineage: record.lineage.clone(),
            created_at: record.created_at,
        })
    }

    fn commit_artifact(
        &self,
        slot: &Slot,
        claim: &Claim<'_>,
        project: &Project,
        artifact: DesignArtifact,
        graph: Option<ConceptGraph>,
    ) -> Result<String, ServiceError> {
        let blob: BlobRef = slot.dir.store_design(&artifact.image)?;
        let mut next = project.clone();
        if let Some(g) = graph {
            if g.version != next.graph().version {
                next.push_graph(g);
            }
        }
        next.designs.push(DesignRecord {
            id: artifact.id.clone(),
            blob,
            graph_version: artifact.graph_version,
            used_node_ids: artifact.used_node_ids.into_iter().collect(),
            lineage: artifact.lineage,
            created_at: artifact.created_at,
        });
        claim.commit(next)?;
        Ok(artifact.id)
    }

    /// Generates a new design from the graph. With `direct`, the graph is
    /// bypassed and only the brief is sent, for comparison demos.
    pub fn generate(&self, id: &str, direct: bool) -> Result<DesignResult, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let project = claim.project();
        let images = self.load_images(&slot, &project)?;
        let artifact_slot = Self::slot_for(&project);
        let (artifact, graph) = if direct {
            let a = generate_direct(
                self.provider.as_ref(),
                &project.brief,
                project.graph().version,
                &images,
                artifact_slot,
            )?;
            (a, None)
        } else {
            let Generated { artifact, graph, .. } = generate_design(
                self.provider.as_ref(),
                &self.schema,
                &project.brief,
                project.graph(),
                &images,
                artifact_slot,
            )?;
            (artifact, Some(graph))
        };
        let design_id = self.commit_artifact(&slot, &claim, &project, artifact, graph)?;
        Ok(DesignResult { design_id, gaps: Vec::new() })
    }

    /// Gap analysis followed by one update edit of design `design_id`.
    pub fn update_design(&self, id: &str, design_id: &str) -> Result<DesignResult, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let project = claim.project();
        let record = project.design(design_id).ok_or_else(|| ServiceError::DesignNotFound(design_id.into()))?;
        let parent = self.artifact_of(&slot, record)?;
        let provider = self.provider.as_ref();
        let analysis = gap_analysis(provider, &parent, project.graph(), &self.schema)?;
        let Generated { artifact, graph, .. } =
            update_design(provider, &parent, project.graph(), &analysis.gaps, Self::slot_for(&project))?;
        let design_id = self.commit_artifact(&slot, &claim, &project, artifact, Some(graph))?;
        Ok(DesignResult { design_id, gaps: analysis.gaps })
    }

    pub fn apply_node(&self, id: &str, design_id: &str, node_id: &str) -> Result<DesignResult, ServiceError> {
        let slot = self.slot(id)?;
        let claim = slot.claim()?;
        let project = claim.project();
        let record = project.design(design_id).ok_or_else(|| ServiceError::DesignNotFound(design_id.into()))?;
        let parent = self.artifact_of(&slot, record)?;
        let Generated { artifact, graph, .. } = apply_node_to_design(
            self.provider.as_ref(),
            &parent,
            project.graph(),
            &NodeId::new(node_id),
            Self::slot_for(&project),
        )?;
        let design_id = self.commit_artifact(&slot, &claim, &project, artifact, Some(graph))?;
        Ok(DesignResult { design_id, gaps: Vec::new() })
    }

    pub fn design_image(&self, id: &str, design_id: &str) -> Result<ImageData, ServiceError> {
        let slot = self.slot(id)?;
        let project = slot.load();
        let record = project.design(design_id).ok_or_else(|| ServiceError::DesignNotFound(design_id.into()))?;
        Ok(slot.dir.load_design(&record.blob)?)
    }
}

fn summarize(changed: &BTreeSet<NodeId>, conflicts: &ConflictReport) -> String {
    let mut out = if changed.is_empty() {
        String::from("No nodes changed.")
    } else {
        let ids: Vec<&str> = changed.iter().map(NodeId::as_str).collect();
        let noun = if ids.len() == 1 { "node" } else { "nodes" };
        format!("Updated {} {noun}: {}.", ids.len(), ids.join(", "))
    };
    if !conflicts.is_empty() {
        let rejected: Vec<String> = conflicts
            .rejected
            .iter()
            .map(|c| match c.op.node_target() {
                Some(id) => format!("{id} ({:?})", c.reason),
                None => format!("{:?}", c.reason),
            })
            .collect();
        out.push_str(&format!(" Rejected: {}.", rejected.join(", ")));
    }
    out
}
