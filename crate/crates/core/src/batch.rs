//! Batch execution of a session file with an embedded command script.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::{apply_command, ApiError, Command, Workspace};
use crate::mcdm::GroupRanking;
use crate::selection::EvaluatorPanel;
use crate::session::{Assignment, EngineContext, Session};
use crate::store::{check_schema_version, ResourceCatalog, ResourceEntry, StoreError, SCHEMA_VERSION};
use crate::workshop::{ConsensusRecord, DEFAULT_EXTENSION_BOUND};

fn default_bound() -> usize {
    DEFAULT_EXTENSION_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSettings {
    #[serde(default = "default_bound")]
    pub extension_bound: usize,
}

impl Default for BatchSettings {
    fn default() -> Self {
        BatchSettings {
            extension_bound: DEFAULT_EXTENSION_BOUND,
        }
    }
}

/// Input of `ontogdss run`: a session document plus the commands to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDocument {
    pub schema_version: u32,
    pub session: Session,
    /// Model/method/scheme/case entries used for problem classification.
    #[serde(default)]
    pub resources: Vec<ResourceEntry>,
    #[serde(default)]
    pub settings: BatchSettings,
    /// Commands without a `session` field target `session.id`.
    #[serde(default)]
    pub script: Vec<Command>,
}

impl BatchDocument {
    pub fn new(session: Session) -> Self {
        BatchDocument {
            schema_version: SCHEMA_VERSION,
            session,
            resources: Vec::new(),
            settings: BatchSettings::default(),
            script: Vec::new(),
        }
    }

    pub fn context(&self) -> Result<EngineContext, BatchError> {
        Ok(EngineContext {
            catalog: ResourceCatalog::from_entries(self.resources.iter().cloned()).map_err(BatchError::Resources)?,
            extension_bound: self.settings.extension_bound.max(1),
            ..EngineContext::default()
        })
    }

    /// Script commands with the default session filled in.
    pub fn commands(&self) -> impl Iterator<Item = Command> + '_ {
        self.script.iter().map(|c| {
            let mut c = c.clone();
            if c.session.is_none() {
                c.session = Some(self.session.id.clone());
            }
            c
        })
    }
}

/// What `ontogdss run` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutput {
    pub schema_version: u32,
    pub session: Session,
    pub panel: Option<EvaluatorPanel>,
    pub assignment: Option<Assignment>,
    pub consensus: BTreeMap<String, ConsensusRecord>,
    pub rankings: BTreeMap<String, GroupRanking>,
    pub results: BTreeMap<String, String>,
}

impl BatchOutput {
    pub fn of(session: &Session) -> Self {
        let decided = || session.nodes.iter().filter_map(|(id, w)| w.decision.as_ref().map(|d| (id.clone(), d)));
        BatchOutput {
            schema_version: SCHEMA_VERSION,
            panel: session.panel.clone(),
            assignment: session.assignment.clone(),
            consensus: decided().map(|(id, d)| (id, d.consensus.clone())).collect(),
            rankings: decided().map(|(id, d)| (id, d.group.clone())).collect(),
            results: session.results.clone(),
            session: session.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("output serializes");
        text.push('\n');
        text
    }
}

/// A command that failed; `index` counts from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFailure {
    pub index: usize,
    pub verb: &'static str,
    pub error: ApiError,
}

impl fmt::Display for BatchFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "failed at command {} ({}): {}", self.index, self.verb, self.error)
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse session file: {0}")]
    ParseFailure(String),
    #[error(transparent)]
    Schema(StoreError),
    #[error("invalid resources: {0}")]
    Resources(StoreError),
    #[error("{0}")]
    Failed(BatchFailure),
}

pub fn parse_document(text: &str) -> Result<BatchDocument, BatchError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| BatchError::ParseFailure(e.to_string()))?;
    check_schema_version(&value).map_err(BatchError::Schema)?;
    serde_json::from_value(value).map_err(|e| BatchError::ParseFailure(e.to_string()))
}

/// Applies the script in order, stopping at the first failing command.
pub fn run_script(doc: &BatchDocument) -> Result<BatchOutput, BatchError> {
    let mut ws = Workspace::with_session(doc.context()?, doc.session.clone());
    for (i, command) in doc.commands().enumerate() {
        apply_command(&mut ws, &command).map_err(|error| {
            BatchError::Failed(BatchFailure {
                index: i + 1,
                verb: command.action.verb(),
                error,
            })
        })?;
    }
    let session = ws.session(&doc.session.id).expect("document session is never removed");
    Ok(BatchOutput::of(session))
}

/// Reads `input`, runs its script and writes the result to `output`. Nothing
/// is written when a command fails.
pub fn run_batch(input: &Path, output: &Path) -> Result<BatchOutput, BatchError> {
    let text = fs::read_to_string(input).map_err(|source| BatchError::Io {
        path: input.to_path_buf(),
        source,
    })?;
    let doc = parse_document(&text)?;
    let out = run_script(&doc)?;
    fs::write(output, out.to_json()).map_err(|source| BatchError::Io {
        path: output.to_path_buf(),
        source,
    })?;
    Ok(out)
}
