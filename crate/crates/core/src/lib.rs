//! Ontology-based group decision support engine.

pub mod batch;
pub mod command;
pub mod demo;
pub mod matrix_csv;
pub mod mcdm;
pub mod ontology;
pub mod selection;
pub mod session;
pub mod store;
pub mod tasks;
pub mod workshop;

pub use command::{apply_command, ApiError, Action, Command, Response, Workspace};
pub use ontology::{ConceptAnnotation, ConceptAssertion, ConceptKind, DecisionProblem, ProblemStructureClass};
pub use session::{EngineContext, Session, SessionError, Stage};
pub use store::{FileStore, ResourceCatalog, ResourceEntry, ResourceKind, StoreError, SCHEMA_VERSION};
