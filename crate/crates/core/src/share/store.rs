//! File-backed submission store.
//!
//! Layout under the root directory:
//!
//! ```text
//! bundles/<id>.zip     packed project bundles
//! records/<id>.json    submission records
//! jams/<id>.json       jam definitions with accepted submissions
//! index.json           lowercased tag -> submission ids
//! ```
//!
//! Every file is written to a temporary name and renamed into place. An
//! upload commits the bundle, then the record, then the index, so a record
//! exists only once its bundle does. Opening a store runs a recovery scan
//! that deletes temporaries and bundles without records and rebuilds the
//! index from the records.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::jam::{Jam, JamSpec, SubmissionOutcome};
use super::record::{SubmissionMetadata, SubmissionRecord};
use crate::project::{load_project_bytes, manifest_digest, Diagnostic, ProjectError};

const BUNDLES: &str = "bundles";
const RECORDS: &str = "records";
const JAMS: &str = "jams";
const INDEX: &str = "index.json";
const TMP_PREFIX: &str = ".tmp-";

#[derive(Debug, Error)]
pub enum ShareError {
    #[error("invalid bundle: {message}")]
    InvalidBundle {
        message: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("invalid metadata: {0}")]
    InvalidMetadata(String),
    #[error("invalid jam: {0}")]
    InvalidJam(String),
    #[error("jam '{0}' already exists")]
    DuplicateJam(String),
    #[error("no submission '{0}'")]
    UnknownSubmission(String),
    #[error("no jam '{0}'")]
    UnknownJam(String),
    #[error("page_size must be at least 1")]
    InvalidPage,
    #[error("corrupt store file {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl ShareError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ShareError::InvalidBundle { .. } => "invalid_bundle",
            ShareError::InvalidMetadata(_) => "invalid_metadata",
            ShareError::InvalidJam(_) => "invalid_jam",
            ShareError::DuplicateJam(_) => "duplicate_jam",
            ShareError::UnknownSubmission(_) => "unknown_submission",
            ShareError::UnknownJam(_) => "unknown_jam",
            ShareError::InvalidPage => "invalid_page",
            ShareError::Corrupt { .. } => "corrupt_store",
            ShareError::Io { .. } => "io_failure",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ShareError + '_ {
    move |source| ShareError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadReceipt {
    pub id: String,
    pub digest: String,
    /// Earliest stored submission with the same digest, if any. The upload
    /// is stored regardless.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionSummary {
    pub id: String,
    pub title: String,
    pub author: String,
    pub tool: String,
    pub tags: Vec<String>,
    pub uploaded_at: DateTime<Utc>,
    pub digest: String,
}

impl From<&SubmissionRecord> for SubmissionSummary {
    fn from(r: &SubmissionRecord) -> Self {
        SubmissionSummary {
            id: r.id.clone(),
            title: r.meta.title.clone(),
            author: r.meta.author.clone(),
            tool: r.meta.tool.clone(),
            tags: r.meta.tags.clone(),
            uploaded_at: r.uploaded_at,
            digest: r.digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPage {
    pub tag: String,
    pub total: usize,
    /// Zero-based.
    pub page: usize,
    pub page_size: usize,
    pub items: Vec<SubmissionSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RecoveryReport {
    pub removed_temp_files: usize,
    pub removed_orphan_bundles: Vec<String>,
    pub removed_records_without_bundle: Vec<String>,
    pub index_rebuilt: bool,
}

impl RecoveryReport {
    pub fn is_clean(&self) -> bool {
        *self == RecoveryReport::default()
    }
}

/// Where a simulated crash stops an upload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitStage {
    Bundle,
    Record,
}

#[derive(Debug)]
pub struct ShareStore {
    root: PathBuf,
    records: BTreeMap<String, SubmissionRecord>,
    index: BTreeMap<String, BTreeSet<String>>,
    jams: BTreeMap<String, Jam>,
    next_submission: u64,
    next_jam: u64,
    recovery: RecoveryReport,
}

fn submission_id(n: u64) -> String {
    format!("sub-{n:06}")
}

fn jam_id(n: u64) -> String {
    format!("jam-{n:06}")
}

fn numeric_suffix(id: &str) -> Option<u64> {
    id.rsplit_once('-')?.1.parse().ok()
}

fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ShareError> {
    let dir = path.parent().expect("store paths have a parent");
    let name = path.file_name().expect("store paths have a name").to_string_lossy();
    let tmp = dir.join(format!("{TMP_PREFIX}{name}"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("store values serialize");
    bytes.push(b'\n');
    bytes
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ShareError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| ShareError::Corrupt {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Files in `dir` as (stem, path), skipping and deleting temporaries.
fn scan(dir: &Path, ext: &str, removed_tmp: &mut usize) -> Result<Vec<(String, PathBuf)>, ShareError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().to_string();
        if name.starts_with(TMP_PREFIX) {
            fs::remove_file(&path).map_err(io_err(&path))?;
            *removed_tmp += 1;
            continue;
        }
        if let Some(stem) = name.strip_suffix(ext) {
            out.push((stem.to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

fn normalize_tag(tag: &str) -> String {
    tag.to_lowercase()
}

impl ShareStore {
    /// Opens (creating if needed) a store and runs the recovery scan.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ShareError> {
        let root = root.into();
        for dir in [BUNDLES, RECORDS, JAMS] {
            let path = root.join(dir);
            fs::create_dir_all(&path).map_err(io_err(&path))?;
        }
        let mut report = RecoveryReport::default();
        for entry in fs::read_dir(&root).map_err(io_err(&root))? {
            let entry = entry.map_err(io_err(&root))?;
            if entry.file_name().to_string_lossy().starts_with(TMP_PREFIX) {
                let path = entry.path();
                fs::remove_file(&path).map_err(io_err(&path))?;
                report.removed_temp_files += 1;
            }
        }

        let bundles = scan(&root.join(BUNDLES), ".zip", &mut report.removed_temp_files)?;
        let record_files = scan(&root.join(RECORDS), ".json", &mut report.removed_temp_files)?;
        let jam_files = scan(&root.join(JAMS), ".json", &mut report.removed_temp_files)?;

        let mut max_submission = 0;
        let bundle_ids: BTreeSet<String> = bundles.iter().map(|(id, _)| id.clone()).collect();
        let mut records = BTreeMap::new();
        for (id, path) in record_files {
            max_submission = max_submission.max(numeric_suffix(&id).unwrap_or(0));
            if !bundle_ids.contains(&id) {
                fs::remove_file(&path).map_err(io_err(&path))?;
                report.removed_records_without_bundle.push(id);
                continue;
            }
            let record: SubmissionRecord = read_json(&path)?;
            records.insert(id, record);
        }
        for (id, path) in &bundles {
            max_submission = max_submission.max(numeric_suffix(id).unwrap_or(0));
            if !records.contains_key(id) {
                fs::remove_file(path).map_err(io_err(path))?;
                report.removed_orphan_bundles.push(id.clone());
            }
        }

        let mut jams = BTreeMap::new();
        let mut max_jam = 0;
        for (id, path) in jam_files {
            max_jam = max_jam.max(numeric_suffix(&id).unwrap_or(0));
            let mut jam: Jam = read_json(&path)?;
            let before = jam.submissions.len();
            jam.submissions.retain(|s| records.contains_key(s));
            if jam.submissions.len() != before {
                write_atomic(&path, &json_bytes(&jam))?;
            }
            jams.insert(id, jam);
        }

        let mut store = ShareStore {
            root,
            records,
            index: BTreeMap::new(),
            jams,
            next_submission: max_submission + 1,
            next_jam: max_jam + 1,
            recovery: RecoveryReport::default(),
        };
        store.rebuild_index();
        let index_path = store.root.join(INDEX);
        let on_disk: Option<BTreeMap<String, BTreeSet<String>>> =
            read_json(&index_path).ok();
        if on_disk.as_ref() != Some(&store.index) {
            let fresh = store.index.is_empty() && !index_path.exists();
            store.write_index()?;
            report.index_rebuilt = !fresh;
        }
        store.recovery = report;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// What the last recovery scan cleaned up.
    pub fn recovery(&self) -> &RecoveryReport {
        &self.recovery
    }

    fn rebuild_index(&mut self) {
        self.index.clear();
        for record in self.records.values() {
            for tag in &record.meta.tags {
                self.index
                    .entry(normalize_tag(tag))
                    .or_default()
                    .insert(record.id.clone());
            }
        }
    }

    fn write_index(&self) -> Result<(), ShareError> {
        write_atomic(&self.root.join(INDEX), &json_bytes(&self.index))
    }

    fn bundle_path(&self, id: &str) -> PathBuf {
        self.root.join(BUNDLES).join(format!("{id}.zip"))
    }

    fn record_path(&self, id: &str) -> PathBuf {
        self.root.join(RECORDS).join(format!("{id}.json"))
    }

    fn jam_path(&self, id: &str) -> PathBuf {
        self.root.join(JAMS).join(format!("{id}.json"))
    }

    fn check_metadata(meta: &SubmissionMetadata) -> Result<(), ShareError> {
        if meta.tool.trim().is_empty() {
            return Err(ShareError::InvalidMetadata("tool is empty".into()));
        }
        if meta.team_size == 0 {
            return Err(ShareError::InvalidMetadata("team_size must be at least 1".into()));
        }
        if let Some(tag) = meta.tags.iter().find(|t| t.len() < 2 || !t.starts_with('#')) {
            return Err(ShareError::InvalidMetadata(format!("tag '{tag}' must start with '#'")));
        }
        Ok(())
    }

    /// Stores a packed bundle with its metadata at time `now`. The stored
    /// tags are the metadata tags plus the project's own, without case
    /// duplicates.
    pub fn upload(
        &mut self,
        bundle: &[u8],
        meta: SubmissionMetadata,
        now: DateTime<Utc>,
    ) -> Result<UploadReceipt, ShareError> {
        self.upload_until(bundle, meta, now, None)
    }

    /// [`ShareStore::upload`] that stops after `crash_after`, leaving the
    /// store as an interrupted process would.
    pub fn upload_until(
        &mut self,
        bundle: &[u8],
        mut meta: SubmissionMetadata,
        now: DateTime<Utc>,
        crash_after: Option<CommitStage>,
    ) -> Result<UploadReceipt, ShareError> {
        Self::check_metadata(&meta)?;
        let project = load_project_bytes(bundle).map_err(|e| {
            let diagnostics = match &e {
                ProjectError::Invalid(d) | ProjectError::ValidationFailed(d) => d.clone(),
                _ => Vec::new(),
            };
            ShareError::InvalidBundle {
                message: e.to_string(),
                diagnostics,
            }
        })?;
        let digest = manifest_digest(&project);
        for tag in &project.tags {
            if !meta.tags.iter().any(|t| t.eq_ignore_ascii_case(tag)) {
                meta.tags.push(tag.clone());
            }
        }
        let mut seen = BTreeSet::new();
        meta.tags.retain(|t| seen.insert(normalize_tag(t)));

        let duplicate_of = self
            .records
            .values()
            .find(|r| r.digest == digest)
            .map(|r| r.id.clone());
        let id = submission_id(self.next_submission);
        self.next_submission += 1;
        let record = SubmissionRecord {
            id: id.clone(),
            digest: digest.clone(),
            uploaded_at: now,
            meta,
        };

        write_atomic(&self.bundle_path(&id), bundle)?;
        if crash_after == Some(CommitStage::Bundle) {
            return Ok(UploadReceipt { id, digest, duplicate_of });
        }
        write_atomic(&self.record_path(&id), &json_bytes(&record))?;
        if crash_after == Some(CommitStage::Record) {
            return Ok(UploadReceipt { id, digest, duplicate_of });
        }
        for tag in &record.meta.tags {
            self.index
                .entry(normalize_tag(tag))
                .or_default()
                .insert(id.clone());
        }
        self.records.insert(id.clone(), record);
        self.write_index()?;
        Ok(UploadReceipt {
            id,
            digest,
            duplicate_of,
        })
    }

    pub fn get(&self, id: &str) -> Option<&SubmissionRecord> {
        self.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &SubmissionRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The stored bundle bytes, exactly as uploaded.
    pub fn download(&self, id: &str) -> Result<Vec<u8>, ShareError> {
        if !self.records.contains_key(id) {
            return Err(ShareError::UnknownSubmission(id.to_string()));
        }
        let path = self.bundle_path(id);
        fs::read(&path).map_err(io_err(&path))
    }

    /// Recomputes the digest from the stored bundle and compares.
    pub fn verify(&self, id: &str) -> Result<bool, ShareError> {
        let record = self
            .get(id)
            .ok_or_else(|| ShareError::UnknownSubmission(id.to_string()))?;
        let bytes = self.download(id)?;
        Ok(load_project_bytes(&bytes)
            .map(|p| manifest_digest(&p) == record.digest)
            .unwrap_or(false))
    }

    /// Ids carrying `tag` (case-insensitive), newest first, ties by id
    /// descending.
    pub fn search_all(&self, tag: &str) -> Vec<&SubmissionRecord> {
        let mut hits: Vec<&SubmissionRecord> = self
            .index
            .get(&normalize_tag(tag))
            .into_iter()
            .flatten()
            .filter_map(|id| self.records.get(id))
            .collect();
        hits.sort_by(|a, b| b.uploaded_at.cmp(&a.uploaded_at).then_with(|| b.id.cmp(&a.id)));
        hits
    }

    pub fn search(&self, tag: &str, page: usize, page_size: usize) -> Result<SearchPage, ShareError> {
        if page_size == 0 {
            return Err(ShareError::InvalidPage);
        }
        let hits = self.search_all(tag);
        let items = hits
            .iter()
            .skip(page.saturating_mul(page_size))
            .take(page_size)
            .map(|r| SubmissionSummary::from(*r))
            .collect();
        Ok(SearchPage {
            tag: tag.to_string(),
            total: hits.len(),
            page,
            page_size,
            items,
        })
    }

    pub fn create_jam(&mut self, spec: JamSpec) -> Result<Jam, ShareError> {
        spec.check().map_err(ShareError::InvalidJam)?;
        let id = match &spec.id {
            Some(id) if !is_safe_id(id) => {
                return Err(ShareError::InvalidJam(format!(
                    "id '{id}' may only use letters, digits, '-' and '_'"
                )))
            }
            Some(id) if self.jams.contains_key(id) => return Err(ShareError::DuplicateJam(id.clone())),
            Some(id) => id.clone(),
            None => loop {
                let id = jam_id(self.next_jam);
                self.next_jam += 1;
                if !self.jams.contains_key(&id) {
                    break id;
                }
            },
        };
        let jam = spec.into_jam(id.clone());
        write_atomic(&self.jam_path(&id), &json_bytes(&jam))?;
        self.jams.insert(id, jam.clone());
        Ok(jam)
    }

    pub fn jam(&self, id: &str) -> Option<&Jam> {
        self.jams.get(id)
    }

    pub fn jams(&self) -> impl Iterator<Item = &Jam> {
        self.jams.values()
    }

    /// Judges a stored submission against a jam; accepted entries are
    /// recorded on the jam once.
    pub fn submit_to_jam(
        &mut self,
        jam_id: &str,
        submission_id: &str,
    ) -> Result<SubmissionOutcome, ShareError> {
        let jam = self
            .jams
            .get(jam_id)
            .ok_or_else(|| ShareError::UnknownJam(jam_id.to_string()))?;
        let record = self
            .records
            .get(submission_id)
            .ok_or_else(|| ShareError::UnknownSubmission(submission_id.to_string()))?;
        let outcome = jam.judge(record);
        if outcome.is_accepted() && !jam.submissions.iter().any(|s| s == submission_id) {
            let mut updated = jam.clone();
            updated.submissions.push(submission_id.to_string());
            write_atomic(&self.jam_path(jam_id), &json_bytes(&updated))?;
            self.jams.insert(jam_id.to_string(), updated);
        }
        Ok(outcome)
    }

    /// Records of the submissions a jam has accepted.
    pub fn jam_records(&self, jam_id: &str) -> Result<Vec<SubmissionRecord>, ShareError> {
        let jam = self
            .jams
            .get(jam_id)
            .ok_or_else(|| ShareError::UnknownJam(jam_id.to_string()))?;
        Ok(jam
            .submissions
            .iter()
            .filter_map(|id| self.records.get(id).cloned())
            .collect())
    }
}
