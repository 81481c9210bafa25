//! Command boundary shared by the HTTP service and the batch runner.
//!
//! Every mutation arrives as a [`Command`] and is executed by
//! [`apply_command`]; transports only encode and decode. Errors leave the
//! workspace untouched and carry a stable machine-readable code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::mcdm::DecisionMatrix;
use crate::ontology::{classify_problem, ConceptAnnotation, ConceptAssertion, DecisionProblem, OntologyError};
use crate::selection::{double_select, GroupPool, SelectionError, SelectionStage};
use crate::session::{EngineContext, Session, SessionError, Stage, Submission};
use crate::store::{validate_id, StoreError};
use crate::tasks::{OutlineNode, TaskError};
use crate::workshop::{
    grounded_labelling, to_dung, ArgumentElement, RelationType, Semantics, WorkshopError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub annotation: ConceptAnnotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "kebab-case")]
pub enum Action {
    CreateSession {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        problem: ProblemDraft,
    },
    Annotate {
        assertion: ConceptAssertion,
    },
    Decompose {
        outline: Vec<OutlineNode>,
        #[serde(default)]
        matrices: BTreeMap<String, DecisionMatrix>,
    },
    SelectPanel {
        pool: GroupPool,
        alternatives: Vec<String>,
        stage1: SelectionStage,
        stage2: SelectionStage,
        k: usize,
    },
    AddElement {
        node: String,
        element: ArgumentElement,
    },
    Relate {
        node: String,
        source: String,
        target: String,
        relation: RelationType,
    },
    Advance {
        target: Stage,
    },
    SubmitRanking {
        node: String,
        #[serde(flatten)]
        submission: Submission,
    },
    RunDecision {
        node: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        semantics: Option<Semantics>,
    },
    RecordResult {
        node: String,
        scheme: String,
    },
}

impl Action {
    pub fn verb(&self) -> &'static str {
        match self {
            Action::CreateSession { .. } => "create-session",
            Action::Annotate { .. } => "annotate",
            Action::Decompose { .. } => "decompose",
            Action::SelectPanel { .. } => "select-panel",
            Action::AddElement { .. } => "add-element",
            Action::Relate { .. } => "relate",
            Action::Advance { .. } => "advance",
            Action::SubmitRanking { .. } => "submit-ranking",
            Action::RunDecision { .. } => "run-decision",
            Action::RecordResult { .. } => "record-result",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    /// Target session; ignored by `create-session`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(flatten)]
    pub action: Action,
}

impl Command {
    pub fn new(session: impl Into<String>, action: Action) -> Self {
        Command {
            session: Some(session.into()),
            action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub status: u16,
    pub session: String,
    pub body: Value,
}

/// Structured error with a stable `code` (the engine error's variant name).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl ApiError {
    pub fn new(code: &str, status: u16, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_owned(),
            message: message.into(),
            status,
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn unknown_session(id: &str) -> Self {
        ApiError::new("UnknownSession", 404, format!("unknown session {id:?}")).with_details(json!({ "session": id }))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new("ParseFailure", 400, message)
    }
}

impl From<OntologyError> for ApiError {
    fn from(e: OntologyError) -> Self {
        let code = match e {
            OntologyError::EmptyLabel => "EmptyLabel",
            OntologyError::DuplicateAssertion { .. } => "DuplicateAssertion",
        };
        ApiError::new(code, 422, e.to_string())
    }
}

impl From<TaskError> for ApiError {
    fn from(e: TaskError) -> Self {
        let (code, details) = match &e {
            TaskError::EmptyOutline => ("EmptyOutline", Value::Null),
            TaskError::DuplicateId(id) => ("DuplicateId", json!({ "id": id })),
            TaskError::InvalidTree(v) => ("InvalidTree", json!({ "violations": v })),
            TaskError::MissingScore(id) => ("MissingScore", json!({ "node": id })),
        };
        ApiError::new(code, 422, e.to_string()).with_details(details)
    }
}

impl From<SelectionError> for ApiError {
    fn from(e: SelectionError) -> Self {
        let (code, details) = match &e {
            SelectionError::EmptyPool => ("EmptyPool", Value::Null),
            SelectionError::InsufficientCandidates {
                group,
                alternative,
                needed,
                available,
            } => (
                "InsufficientCandidates",
                json!({ "group": group, "alternative": alternative, "needed": needed, "available": available }),
            ),
            SelectionError::InvalidStage(_) => ("InvalidStage", Value::Null),
            SelectionError::InvalidPool(_) => ("InvalidPool", Value::Null),
            SelectionError::ZeroK => ("ZeroK", Value::Null),
        };
        ApiError::new(code, 422, e.to_string()).with_details(details)
    }
}

impl From<WorkshopError> for ApiError {
    fn from(e: WorkshopError) -> Self {
        let (code, details) = match &e {
            WorkshopError::DuplicateId(id) => ("DuplicateId", json!({ "id": id })),
            WorkshopError::UnknownElement(id) => ("UnknownElement", json!({ "element": id })),
            WorkshopError::SelfRelation(id) => ("SelfRelation", json!({ "element": id })),
            WorkshopError::TooLarge { arguments, bound } => {
                ("TooLarge", json!({ "arguments": arguments, "bound": bound }))
            }
        };
        ApiError::new(code, 422, e.to_string()).with_details(details)
    }
}

impl From<crate::mcdm::McdmError> for ApiError {
    fn from(e: crate::mcdm::McdmError) -> Self {
        use crate::mcdm::McdmError::*;
        let code = match &e {
            TooFewSchemes(_) => "TooFewSchemes",
            NonRectangular { .. } => "NonRectangular",
            NonFinite { .. } => "NonFinite",
            InvalidCriterion { .. } => "InvalidCriterion",
            DuplicateScheme(_) => "DuplicateScheme",
            NoCriteria => "NoCriteria",
            InvalidThreshold(_) => "InvalidThreshold",
            NoBallots => "NoBallots",
            MismatchedSchemeSets { .. } => "MismatchedSchemeSets",
            InvalidBallot { .. } => "InvalidBallot",
        };
        ApiError::new(code, 422, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        let (code, status, details) = match e {
            SessionError::IllegalTransition { from, to } => ("IllegalTransition", 409, json!({ "from": from, "to": to })),
            SessionError::WrongStage { expected, actual } => {
                ("WrongStage", 409, json!({ "expected": expected, "actual": actual }))
            }
            SessionError::NoPanel => ("NoPanel", 409, Value::Null),
            SessionError::NoTree => ("NoTree", 409, Value::Null),
            SessionError::UnknownNode(n) => ("UnknownNode", 404, json!({ "node": n })),
            SessionError::MissingMatrix(n) => ("MissingMatrix", 409, json!({ "node": n })),
            SessionError::MissingBallots(n) => ("MissingBallots", 409, json!({ "node": n })),
            SessionError::UnknownScheme { node, scheme } => {
                ("UnknownScheme", 422, json!({ "node": node, "scheme": scheme }))
            }
            SessionError::UnknownEvaluator(e) => ("UnknownEvaluator", 422, json!({ "evaluator": e })),
            SessionError::AllSchemesVetoed(n) => ("AllSchemesVetoed", 409, json!({ "node": n })),
            SessionError::InvalidSubmission { evaluator, .. } => {
                ("InvalidSubmission", 422, json!({ "evaluator": evaluator }))
            }
            SessionError::CorruptLog(_) => ("CorruptLog", 500, Value::Null),
            SessionError::Ontology(e) => return e.into(),
            SessionError::Task(e) => return e.into(),
            SessionError::Selection(e) => return e.into(),
            SessionError::Workshop(e) => return e.into(),
            SessionError::Mcdm(e) => return e.into(),
        };
        ApiError::new(code, status, message).with_details(details)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (code, status) = match &e {
            StoreError::NotFound { .. } => ("NotFound", 404),
            StoreError::SchemaMismatch { .. } => ("SchemaMismatch", 422),
            StoreError::DuplicateId { .. } => ("DuplicateId", 409),
            StoreError::InvalidId(_) => ("InvalidId", 422),
            StoreError::Locked(_) => ("Locked", 503),
            StoreError::Malformed(_) => ("ParseFailure", 400),
            StoreError::IoFailure { .. } => ("IoFailure", 500),
        };
        ApiError::new(code, status, e.to_string())
    }
}

/// All live sessions plus the shared engine context.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workspace {
    pub sessions: BTreeMap<String, Session>,
    pub context: EngineContext,
    next_id: u64,
}

impl Workspace {
    pub fn new(context: EngineContext) -> Self {
        Workspace {
            sessions: BTreeMap::new(),
            context,
            next_id: 1,
        }
    }

    pub fn with_session(context: EngineContext, session: Session) -> Self {
        let mut ws = Workspace::new(context);
        ws.sessions.insert(session.id.clone(), session);
        ws
    }

    pub fn session(&self, id: &str) -> Result<&Session, ApiError> {
        self.sessions.get(id).ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Next free generated id (`session-<n>`).
    fn fresh_id(&mut self) -> String {
        loop {
            let id = format!("session-{}", self.next_id);
            self.next_id += 1;
            if !self.sessions.contains_key(&id) {
                return id;
            }
        }
    }
}

pub fn create_session(
    id: String,
    draft: &ProblemDraft,
    ctx: &EngineContext,
) -> Result<Session, ApiError> {
    validate_id(&id)?;
    for a in draft.annotation.iter() {
        if a.label.is_empty() {
            return Err(OntologyError::EmptyLabel.into());
        }
    }
    let problem = DecisionProblem {
        id: draft.id.clone().unwrap_or_else(|| format!("{id}-problem")),
        title: draft.title.clone(),
        description: draft.description.clone(),
        annotation: draft.annotation.clone(),
        structure: classify_problem(&draft.annotation, &ctx.catalog),
    };
    Ok(Session::new(id, problem))
}

/// Executes one command against the workspace.
pub fn apply_command(ws: &mut Workspace, command: &Command) -> Result<Response, ApiError> {
    if let Action::CreateSession { id, problem } = &command.action {
        let id = match id {
            Some(id) => {
                if ws.sessions.contains_key(id) {
                    return Err(ApiError::new("DuplicateId", 409, format!("session {id:?} already exists"))
                        .with_details(json!({ "id": id })));
                }
                id.clone()
            }
            None => ws.fresh_id(),
        };
        let session = create_session(id.clone(), problem, &ws.context)?;
        let body = serde_json::to_value(&session).expect("session serializes");
        ws.sessions.insert(id.clone(), session);
        return Ok(Response {
            status: 201,
            session: id,
            body,
        });
    }
    let id = command
        .session
        .as_deref()
        .ok_or_else(|| ApiError::bad_request(format!("{} needs a session id", command.action.verb())))?;
    let context = &ws.context;
    let session = ws.sessions.get_mut(id).ok_or_else(|| ApiError::unknown_session(id))?;
    let body = apply_action(session, context, &command.action)?;
    Ok(Response {
        status: 200,
        session: id.to_owned(),
        body,
    })
}

/// Executes a session-scoped action. On error the session is left unchanged.
pub fn apply_action(session: &mut Session, ctx: &EngineContext, action: &Action) -> Result<Value, ApiError> {
    let mut draft = session.clone();
    let body = run_action(&mut draft, ctx, action)?;
    *session = draft;
    Ok(body)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("engine values serialize")
}

fn run_action(session: &mut Session, ctx: &EngineContext, action: &Action) -> Result<Value, ApiError> {
    Ok(match action {
        Action::CreateSession { .. } => {
            return Err(ApiError::bad_request("create-session cannot target an existing session"))
        }
        Action::Annotate { assertion } => {
            session.annotate(assertion.clone(), &ctx.catalog)?;
            to_value(&session.problem)
        }
        Action::Decompose { outline, matrices } => {
            let tree = session.decompose(outline, matrices.clone())?;
            to_value(tree)
        }
        Action::SelectPanel {
            pool,
            alternatives,
            stage1,
            stage2,
            k,
        } => {
            let panel = double_select(pool, alternatives, stage1, stage2, *k)?;
            session.set_panel(panel)?;
            json!({ "panel": session.panel, "assignment": session.assignment })
        }
        Action::AddElement { node, element } => to_value(session.add_element(node, element.clone())?),
        Action::Relate {
            node,
            source,
            target,
            relation,
        } => {
            session.relate(node, source, target, *relation)?;
            framework_view(session, node, ctx)?
        }
        Action::Advance { target } => {
            session.advance_stage(*target)?;
            json!({ "stage": session.stage })
        }
        Action::SubmitRanking { node, submission } => {
            session.submit(node, submission.clone())?;
            to_value(submission)
        }
        Action::RunDecision { node, semantics } => {
            let decision = session.run_group_decision(node, semantics.unwrap_or(Semantics::Grounded), ctx)?;
            to_value(decision)
        }
        Action::RecordResult { node, scheme } => {
            session.record_result(node, scheme)?;
            json!({ "results": session.results })
        }
    })
}

/// Attack graph of one node's board, typed relations, and the grounded
/// labelling, for graph views.
pub fn framework_view(session: &Session, node: &str, ctx: &EngineContext) -> Result<Value, ApiError> {
    let work = session
        .node_work(node)
        .ok_or_else(|| ApiError::from(SessionError::UnknownNode(node.to_owned())))?;
    let af = to_dung(&work.board, &ctx.policy);
    Ok(json!({
        "node": node,
        "elements": work.board.elements().collect::<Vec<_>>(),
        "relations": work.board.relations(),
        "arguments": af.arguments,
        "attacks": af.attacks,
        "adjacency": af.adjacency(),
        "labelling": grounded_labelling(&af),
        "consensus": work.decision.as_ref().map(|d| &d.consensus),
    }))
}

/// Per-node consensus records, group rankings and chosen schemes.
pub fn consensus_view(session: &Session) -> Value {
    let nodes: BTreeMap<&String, Value> = session
        .nodes
        .iter()
        .filter_map(|(id, work)| {
            work.decision.as_ref().map(|d| {
                (
                    id,
                    json!({
                        "consensus": d.consensus,
                        "vetoed": d.vetoed,
                        "ballots": d.ballots,
                        "group": d.group,
                        "chosen": d.chosen,
                    }),
                )
            })
        })
        .collect();
    json!({
        "session": session.id,
        "stage": session.stage,
        "nodes": nodes,
        "results": session.results,
    })
}
