//! Decision-resource layer: model/method/scheme/case bases and session
//! persistence.
//!
//! On disk a store is a directory:
//!
//! ```text
//! <root>/index.json
//! <root>/sessions/<id>.json
//! <root>/resources/<kind>/<id>.json
//! <root>/.lock
//! ```
//!
//! A writer holds an exclusive OS lock on `.lock` for as long as the
//! [`FileStore`] lives.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{factor_class, ConceptAnnotation, ConceptKind, FactorClass};
use crate::session::Session;

pub const SCHEMA_VERSION: u32 = 1;

const BASIC_WEIGHT: f64 = 2.0;
const ADDITIONAL_WEIGHT: f64 = 1.0;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{what} {id:?} not found")]
    NotFound { what: &'static str, id: String },
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u64, expected: u32 },
    #[error("duplicate {kind:?} id {id:?}")]
    DuplicateId { kind: ResourceKind, id: String },
    #[error("invalid id {0:?}: use letters, digits, '-', '_' or '.'")]
    InvalidId(String),
    #[error("store at {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("i/o failure on {path}: {source}")]
    IoFailure { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResourceKind {
    Model,
    Method,
    Scheme,
    Case,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 4] = [
        ResourceKind::Model,
        ResourceKind::Method,
        ResourceKind::Scheme,
        ResourceKind::Case,
    ];

    fn dir_name(self) -> &'static str {
        match self {
            ResourceKind::Model => "model",
            ResourceKind::Method => "method",
            ResourceKind::Scheme => "scheme",
            ResourceKind::Case => "case",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub id: String,
    pub kind: ResourceKind,
    #[serde(default)]
    pub annotation: ConceptAnnotation,
    #[serde(default)]
    pub payload: serde_json::Value,
}

impl ResourceEntry {
    pub fn new(id: impl Into<String>, kind: ResourceKind, annotation: ConceptAnnotation) -> Self {
        ResourceEntry {
            id: id.into(),
            kind,
            annotation,
            payload: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredEntry<'a> {
    pub similarity: f64,
    pub entry: &'a ResourceEntry,
}

fn assertion_weight(kind: ConceptKind) -> f64 {
    match factor_class(kind) {
        FactorClass::Basic => BASIC_WEIGHT,
        FactorClass::Additional => ADDITIONAL_WEIGHT,
    }
}

/// Weighted Jaccard over `(kind, label)` keys; basic-factor keys weigh 2,
/// additional ones 1. Two empty annotations are identical (1.0).
pub fn annotation_similarity(a: &ConceptAnnotation, b: &ConceptAnnotation) -> f64 {
    let mut shared = 0.0;
    let mut union = 0.0;
    let mut left = a.iter().peekable();
    let mut right = b.iter().peekable();
    // both sides are sorted by key, so a merge walk visits the union once
    loop {
        match (left.peek(), right.peek()) {
            (Some(x), Some(y)) => match x.key().cmp(&y.key()) {
                std::cmp::Ordering::Less => {
                    union += assertion_weight(x.kind);
                    left.next();
                }
                std::cmp::Ordering::Greater => {
                    union += assertion_weight(y.kind);
                    right.next();
                }
                std::cmp::Ordering::Equal => {
                    let w = assertion_weight(x.kind);
                    shared += w;
                    union += w;
                    left.next();
                    right.next();
                }
            },
            (Some(x), None) => {
                union += assertion_weight(x.kind);
                left.next();
            }
            (None, Some(y)) => {
                union += assertion_weight(y.kind);
                right.next();
            }
            (None, None) => break,
        }
    }
    if union == 0.0 {
        1.0
    } else {
        shared / union
    }
}

/// In-memory resource bases, keyed per kind.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourceCatalog {
    entries: BTreeMap<(ResourceKind, String), ResourceEntry>,
}

impl ResourceCatalog {
    pub fn from_entries(
        entries: impl IntoIterator<Item = ResourceEntry>,
    ) -> Result<Self, StoreError> {
        let mut catalog = ResourceCatalog::default();
        for e in entries {
            catalog.store_entry(e)?;
        }
        Ok(catalog)
    }

    pub fn store_entry(&mut self, entry: ResourceEntry) -> Result<(), StoreError> {
        let key = (entry.kind, entry.id.clone());
        if self.entries.contains_key(&key) {
            return Err(StoreError::DuplicateId {
                kind: entry.kind,
                id: entry.id,
            });
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn get(&self, kind: ResourceKind, id: &str) -> Option<&ResourceEntry> {
        self.entries.get(&(kind, id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ResourceEntry> {
        self.entries.values()
    }

    /// Entries of `kind` with similarity ≥ `threshold`, best first, ties by
    /// id, truncated to `limit`.
    pub fn retrieve_similar(
        &self,
        annotation: &ConceptAnnotation,
        kind: ResourceKind,
        threshold: f64,
        limit: usize,
    ) -> Vec<ScoredEntry<'_>> {
        let mut hits: Vec<ScoredEntry<'_>> = self
            .entries
            .range((kind, String::new())..)
            .take_while(|((k, _), _)| *k == kind)
            .map(|(_, entry)| ScoredEntry {
                similarity: annotation_similarity(annotation, &entry.annotation),
                entry,
            })
            .filter(|s| s.similarity >= threshold)
            .collect();
        hits.sort_by(|a, b| {
            b.similarity
                .total_cmp(&a.similarity)
                .then_with(|| a.entry.id.cmp(&b.entry.id))
        });
        hits.truncate(limit);
        hits
    }
}

/// Versioned wrapper written for every session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub schema_version: u32,
    pub session: Session,
}

impl SessionDocument {
    pub fn new(session: Session) -> Self {
        SessionDocument {
            schema_version: SCHEMA_VERSION,
            session,
        }
    }
}

/// Rejects documents whose `schema_version` differs from [`SCHEMA_VERSION`]
/// before attempting a full decode.
pub fn check_schema_version(value: &serde_json::Value) -> Result<(), StoreError> {
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0);
    if found != u64::from(SCHEMA_VERSION) {
        return Err(StoreError::SchemaMismatch {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

/// Deterministic JSON text for a session: identical values give identical bytes.
pub fn encode_session(session: &Session) -> String {
    let doc = SessionDocument::new(session.clone());
    let mut text = serde_json::to_string_pretty(&doc).expect("session serializes");
    text.push('\n');
    text
}

pub fn decode_session(text: &str) -> Result<Session, StoreError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    check_schema_version(&value)?;
    let doc: SessionDocument = serde_json::from_value(value)?;
    Ok(doc.session)
}

pub fn validate_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_owned()))
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StoreIndex {
    schema_version: u32,
    sessions: Vec<String>,
    resources: BTreeMap<ResourceKind, Vec<String>>,
}

/// Directory-backed store. Holds the writer lock until dropped.
#[derive(Debug)]
pub struct FileStore {
    root: PathBuf,
    _lock: File,
}

impl FileStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        for dir in [root.join("sessions"), root.join("resources")] {
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        for kind in ResourceKind::ALL {
            let dir = root.join("resources").join(kind.dir_name());
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        let lock_path = root.join(".lock");
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| io_err(&lock_path, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(root)),
            Err(fs::TryLockError::Error(e)) => return Err(io_err(&lock_path, e)),
        }
        let store = FileStore { root, _lock: lock };
        if !store.index_path().exists() {
            store.write_index()?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    fn entry_path(&self, kind: ResourceKind, id: &str) -> PathBuf {
        self.root
            .join("resources")
            .join(kind.dir_name())
            .join(format!("{id}.json"))
    }

    pub fn save_session(&self, session: &Session) -> Result<(), StoreError> {
        validate_id(&session.id)?;
        write_atomic(&self.session_path(&session.id), encode_session(session).as_bytes())?;
        self.write_index()
    }

    pub fn load_session(&self, id: &str) -> Result<Session, StoreError> {
        validate_id(id)?;
        let path = self.session_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound {
                    what: "session",
                    id: id.to_owned(),
                })
            }
            Err(e) => return Err(io_err(&path, e)),
        };
        decode_session(&text)
    }

    pub fn session_ids(&self) -> Result<Vec<String>, StoreError> {
        list_ids(&self.root.join("sessions"))
    }

    pub fn store_entry(&self, entry: &ResourceEntry) -> Result<(), StoreError> {
        validate_id(&entry.id)?;
        let path = self.entry_path(entry.kind, &entry.id);
        if path.exists() {
            return Err(StoreError::DuplicateId {
                kind: entry.kind,
                id: entry.id.clone(),
            });
        }
        let mut text = serde_json::to_string_pretty(entry)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        self.write_index()
    }

    pub fn get_entry(&self, kind: ResourceKind, id: &str) -> Result<ResourceEntry, StoreError> {
        validate_id(id)?;
        let path = self.entry_path(kind, id);
        match fs::read_to_string(&path) {
            Ok(t) => Ok(serde_json::from_str(&t)?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound {
                what: "resource",
                id: id.to_owned(),
            }),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    /// Loads every stored resource entry.
    pub fn catalog(&self) -> Result<ResourceCatalog, StoreError> {
        let mut catalog = ResourceCatalog::default();
        for kind in ResourceKind::ALL {
            for id in list_ids(&self.root.join("resources").join(kind.dir_name()))? {
                catalog.store_entry(self.get_entry(kind, &id)?)?;
            }
        }
        Ok(catalog)
    }

    fn write_index(&self) -> Result<(), StoreError> {
        let mut index = StoreIndex {
            schema_version: SCHEMA_VERSION,
            sessions: self.session_ids()?,
            resources: BTreeMap::new(),
        };
        for kind in ResourceKind::ALL {
            let ids = list_ids(&self.root.join("resources").join(kind.dir_name()))?;
            index.resources.insert(kind, ids);
        }
        let mut text = serde_json::to_string_pretty(&index)?;
        text.push('\n');
        write_atomic(&self.index_path(), text.as_bytes())
    }
}

fn io_err(path: &Path, source: io::Error) -> StoreError {
    StoreError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

fn list_ids(dir: &Path) -> Result<Vec<String>, StoreError> {
    let mut ids = Vec::new();
    for item in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let item = item.map_err(|e| io_err(dir, e))?;
        let name = item.file_name();
        let name = name.to_string_lossy();
        if let Some(id) = name.strip_suffix(".json") {
            ids.push(id.to_owned());
        }
    }
    ids.sort();
    Ok(ids)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    let mut f = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}
