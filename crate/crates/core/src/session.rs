//! Decision sessions.
//!
//! A session walks one problem through seven stages, from problem
//! production to general application. All state changes go through
//! [`Session::commit`], which applies a [`Change`] and appends it to the event
//! log; [`Session::replay`] rebuilds a session from its log alone.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcdm::{
    borda_aggregate, flows_to_ballot, promethee2, DecisionMatrix, FlowResult, GroupRanking, McdmError,
    RankingBallot,
};
use crate::ontology::{classify_problem, ConceptAssertion, DecisionProblem, OntologyError, ProblemStructureClass};
use crate::selection::{EvaluatorPanel, SelectionError};
use crate::store::ResourceCatalog;
use crate::tasks::{self, OutlineNode, TaskError, TaskStatus, TaskTree};
use crate::workshop::{
    commit_consensus, ArgumentBoard, ArgumentElement, AttackPolicy, ConsensusRecord, ElementKind, Label,
    RelationType, Semantics, WorkshopError, DEFAULT_EXTENSION_BOUND,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    ProblemProduction,
    PropertiesAnalysis,
    SchemeEstablishment,
    SchemeEvaluation,
    SchemeSelection,
    SchemeVerification,
    GeneralApplication,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::ProblemProduction,
        Stage::PropertiesAnalysis,
        Stage::SchemeEstablishment,
        Stage::SchemeEvaluation,
        Stage::SchemeSelection,
        Stage::SchemeVerification,
        Stage::GeneralApplication,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Stage> {
        Stage::ALL.get(self.index() + 1).copied()
    }

    /// One step forward, or back from verification to establishment.
    pub fn can_advance_to(self, to: Stage) -> bool {
        self.next() == Some(to) || (self == Stage::SchemeVerification && to == Stage::SchemeEstablishment)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("cannot move from {from} to {to}")]
    IllegalTransition { from: Stage, to: Stage },
    #[error("operation requires stage {expected}, session is in {actual}")]
    WrongStage { expected: Stage, actual: Stage },
    #[error("session has no evaluator panel")]
    NoPanel,
    #[error("session has no task tree")]
    NoTree,
    #[error("unknown task node {0:?}")]
    UnknownNode(String),
    #[error("task node {0:?} has no decision matrix")]
    MissingMatrix(String),
    #[error("task node {0:?} has no submitted rankings")]
    MissingBallots(String),
    #[error("scheme {scheme:?} is not in the matrix of node {node:?}")]
    UnknownScheme { node: String, scheme: String },
    #[error("{0:?} is not on the evaluator panel")]
    UnknownEvaluator(String),
    #[error("every scheme of node {0:?} was vetoed by the workshop")]
    AllSchemesVetoed(String),
    #[error("invalid submission from {evaluator:?}: {reason}")]
    InvalidSubmission { evaluator: String, reason: String },
    #[error("event log cannot be replayed: {0}")]
    CorruptLog(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Workshop(#[from] WorkshopError),
    #[error(transparent)]
    Mcdm(#[from] McdmError),
}

/// Settings the orchestrator needs beyond the session itself.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineContext {
    pub catalog: ResourceCatalog,
    pub extension_bound: usize,
    pub policy: AttackPolicy,
}

impl Default for EngineContext {
    fn default() -> Self {
        EngineContext {
            catalog: ResourceCatalog::default(),
            extension_bound: DEFAULT_EXTENSION_BOUND,
            policy: AttackPolicy::default(),
        }
    }
}

/// Task node id to the evaluators responsible for it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub tasks: BTreeMap<String, Vec<String>>,
}

impl Assignment {
    pub fn load(&self) -> BTreeMap<&str, usize> {
        let mut load = BTreeMap::new();
        for evaluators in self.tasks.values() {
            for e in evaluators {
                *load.entry(e.as_str()).or_insert(0) += 1;
            }
        }
        load
    }
}

/// An evaluator's input for one node: either a direct ranking or their own
/// scores on the node's criteria (ranked with PROMETHEE II).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evaluation {
    Ranking { ranking: Vec<String> },
    Scores { scores: Vec<Vec<f64>> },
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub evaluator: String,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDecision {
    pub consensus: ConsensusRecord,
    /// Schemes removed because an opinion speaking for them was rejected.
    pub vetoed: Vec<String>,
    /// PROMETHEE II output for each score-based submission.
    pub flows: BTreeMap<String, FlowResult>,
    pub ballots: Vec<RankingBallot>,
    pub group: GroupRanking,
    pub chosen: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeWork {
    pub board: ArgumentBoard,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<DecisionMatrix>,
    /// Keyed by evaluator; a new submission replaces the previous one.
    #[serde(default)]
    pub submissions: BTreeMap<String, Submission>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<NodeDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Change {
    Created {
        id: String,
        problem: DecisionProblem,
    },
    Annotated {
        assertion: ConceptAssertion,
        structure: ProblemStructureClass,
    },
    Decomposed {
        tree: TaskTree,
        matrices: BTreeMap<String, DecisionMatrix>,
    },
    PanelSelected {
        panel: EvaluatorPanel,
    },
    ElementAdded {
        node: String,
        element: ArgumentElement,
    },
    Related {
        node: String,
        source: String,
        target: String,
        relation: RelationType,
    },
    StageAdvanced {
        from: Stage,
        to: Stage,
    },
    Submitted {
        node: String,
        submission: Submission,
    },
    Decided {
        node: String,
        decision: NodeDecision,
    },
    ResultRecorded {
        node: String,
        scheme: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub change: Change,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub problem: DecisionProblem,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TaskTree>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<EvaluatorPanel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Assignment>,
    #[serde(default)]
    pub nodes: BTreeMap<String, NodeWork>,
    #[serde(default)]
    pub results: BTreeMap<String, String>,
    #[serde(default)]
    pub events: Vec<SessionEvent>,
}

impl Session {
    pub fn new(id: impl Into<String>, problem: DecisionProblem) -> Self {
        let id = id.into();
        let mut session = Session::blank(&id, &problem);
        session
            .commit(Change::Created { id, problem })
            .expect("creation applies to a blank session");
        session
    }

    fn blank(id: &str, problem: &DecisionProblem) -> Self {
        Session {
            id: id.to_owned(),
            problem: problem.clone(),
            stage: Stage::ProblemProduction,
            tree: None,
            panel: None,
            assignment: None,
            nodes: BTreeMap::new(),
            results: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    /// Rebuilds a session from its event log.
    pub fn replay(events: &[SessionEvent]) -> Result<Session, SessionError> {
        let first = events
            .first()
            .ok_or_else(|| SessionError::CorruptLog("log is empty".into()))?;
        let Change::Created { id, problem } = &first.change else {
            return Err(SessionError::CorruptLog("log does not start with creation".into()));
        };
        let mut session = Session::blank(id, problem);
        for (i, event) in events.iter().enumerate() {
            if event.seq != i as u64 {
                return Err(SessionError::CorruptLog(format!("event {i} has sequence number {}", event.seq)));
            }
            session.commit(event.change.clone())?;
        }
        Ok(session)
    }

    fn commit(&mut self, change: Change) -> Result<(), SessionError> {
        self.apply(&change)?;
        self.events.push(SessionEvent {
            seq: self.events.len() as u64,
            change,
        });
        Ok(())
    }

    fn apply(&mut self, change: &Change) -> Result<(), SessionError> {
        match change {
            Change::Created { id, problem } => {
                if !self.events.is_empty() {
                    return Err(SessionError::CorruptLog("second creation event".into()));
                }
                self.id = id.clone();
                self.problem = problem.clone();
            }
            Change::Annotated { assertion, structure } => {
                self.problem.annotation.insert(assertion.clone())?;
                self.problem.structure = *structure;
            }
            Change::Decomposed { tree, matrices } => {
                self.nodes = tree
                    .nodes
                    .keys()
                    .map(|id| {
                        let work = NodeWork {
                            matrix: matrices.get(id).cloned(),
                            ..NodeWork::default()
                        };
                        (id.clone(), work)
                    })
                    .collect();
                self.tree = Some(tree.clone());
                self.results.clear();
                self.assignment = appoint_tasks(self).ok();
            }
            Change::PanelSelected { panel } => {
                self.panel = Some(panel.clone());
                self.assignment = appoint_tasks(self).ok();
            }
            Change::ElementAdded { node, element } => {
                self.node_mut(node)?.board.add_element(element.clone())?;
            }
            Change::Related {
                node,
                source,
                target,
                relation,
            } => {
                self.node_mut(node)?.board.relate(source, target, *relation)?;
            }
            Change::StageAdvanced { from, to } => {
                if self.stage != *from || !from.can_advance_to(*to) {
                    return Err(SessionError::IllegalTransition {
                        from: self.stage,
                        to: *to,
                    });
                }
                self.stage = *to;
            }
            Change::Submitted { node, submission } => {
                self.node_mut(node)?
                    .submissions
                    .insert(submission.evaluator.clone(), submission.clone());
            }
            Change::Decided { node, decision } => {
                self.node_mut(node)?.decision = Some(decision.clone());
            }
            Change::ResultRecorded { node, scheme } => {
                let tree = self.tree.as_mut().ok_or(SessionError::NoTree)?;
                let task = tree
                    .nodes
                    .get_mut(node)
                    .ok_or_else(|| SessionError::UnknownNode(node.clone()))?;
                task.status = TaskStatus::Solved(scheme.clone());
                self.results.insert(node.clone(), scheme.clone());
            }
        }
        Ok(())
    }

    fn node(&self, node: &str) -> Result<&NodeWork, SessionError> {
        self.nodes
            .get(node)
            .ok_or_else(|| SessionError::UnknownNode(node.to_owned()))
    }

    fn node_mut(&mut self, node: &str) -> Result<&mut NodeWork, SessionError> {
        self.nodes
            .get_mut(node)
            .ok_or_else(|| SessionError::UnknownNode(node.to_owned()))
    }

    pub fn node_work(&self, node: &str) -> Option<&NodeWork> {
        self.nodes.get(node)
    }

    pub fn annotate(&mut self, assertion: ConceptAssertion, catalog: &ResourceCatalog) -> Result<(), SessionError> {
        let mut annotation = self.problem.annotation.clone();
        annotation.insert(assertion.clone())?;
        let structure = classify_problem(&annotation, catalog);
        self.commit(Change::Annotated { assertion, structure })
    }

    /// Builds the task tree and attaches per-node decision matrices.
    pub fn decompose(
        &mut self,
        outline: &[OutlineNode],
        matrices: BTreeMap<String, DecisionMatrix>,
    ) -> Result<&TaskTree, SessionError> {
        let tree = tasks::decompose(&self.problem, outline)?;
        for (node, matrix) in &matrices {
            if !tree.nodes.contains_key(node) {
                return Err(SessionError::UnknownNode(node.clone()));
            }
            matrix.validate()?;
        }
        self.commit(Change::Decomposed { tree, matrices })?;
        Ok(self.tree.as_ref().expect("tree just set"))
    }

    pub fn set_panel(&mut self, panel: EvaluatorPanel) -> Result<(), SessionError> {
        self.commit(Change::PanelSelected { panel })
    }

    pub fn add_element(&mut self, node: &str, element: ArgumentElement) -> Result<&ArgumentElement, SessionError> {
        let work = self.node(node)?;
        if work.board.element(&element.id).is_some() {
            return Err(WorkshopError::DuplicateId(element.id).into());
        }
        let id = element.id.clone();
        self.commit(Change::ElementAdded {
            node: node.to_owned(),
            element,
        })?;
        Ok(self.nodes[node].board.element(&id).expect("element just added"))
    }

    pub fn relate(&mut self, node: &str, source: &str, target: &str, relation: RelationType) -> Result<(), SessionError> {
        // dry run on a copy so a rejected relation leaves no event behind
        let mut probe = self.node(node)?.board.clone();
        probe.relate(source, target, relation)?;
        self.commit(Change::Related {
            node: node.to_owned(),
            source: source.to_owned(),
            target: target.to_owned(),
            relation,
        })
    }

    pub fn advance_stage(&mut self, target: Stage) -> Result<(), SessionError> {
        if !self.stage.can_advance_to(target) {
            return Err(SessionError::IllegalTransition {
                from: self.stage,
                to: target,
            });
        }
        self.commit(Change::StageAdvanced {
            from: self.stage,
            to: target,
        })
    }

    pub fn submit(&mut self, node: &str, submission: Submission) -> Result<(), SessionError> {
        let panel = self.panel.as_ref().ok_or(SessionError::NoPanel)?;
        if !panel.contains(&submission.evaluator) {
            return Err(SessionError::UnknownEvaluator(submission.evaluator));
        }
        let matrix = self
            .node(node)?
            .matrix
            .as_ref()
            .ok_or_else(|| SessionError::MissingMatrix(node.to_owned()))?;
        validate_submission(matrix, &submission)?;
        self.commit(Change::Submitted {
            node: node.to_owned(),
            submission,
        })
    }

    /// Consensus, veto, individual rankings, Borda aggregation, and the
    /// winning scheme recorded for `node`.
    pub fn run_group_decision(
        &mut self,
        node: &str,
        semantics: Semantics,
        ctx: &EngineContext,
    ) -> Result<&NodeDecision, SessionError> {
        if self.stage != Stage::SchemeSelection {
            return Err(SessionError::WrongStage {
                expected: Stage::SchemeSelection,
                actual: self.stage,
            });
        }
        let decision = decide_node(node, self.node(node)?, semantics, ctx)?;
        let chosen = decision.chosen.clone();
        self.commit(Change::Decided {
            node: node.to_owned(),
            decision,
        })?;
        self.record_result(node, &chosen)?;
        Ok(self.nodes[node].decision.as_ref().expect("decision just stored"))
    }

    pub fn record_result(&mut self, node: &str, scheme: &str) -> Result<(), SessionError> {
        let tree = self.tree.as_ref().ok_or(SessionError::NoTree)?;
        if !tree.nodes.contains_key(node) {
            return Err(SessionError::UnknownNode(node.to_owned()));
        }
        let work = self.node(node)?;
        let matrix = work
            .matrix
            .as_ref()
            .ok_or_else(|| SessionError::MissingMatrix(node.to_owned()))?;
        if matrix.scheme_index(scheme).is_none() {
            return Err(SessionError::UnknownScheme {
                node: node.to_owned(),
                scheme: scheme.to_owned(),
            });
        }
        if work.submissions.is_empty() && work.decision.is_none() {
            return Err(SessionError::MissingBallots(node.to_owned()));
        }
        self.commit(Change::ResultRecorded {
            node: node.to_owned(),
            scheme: scheme.to_owned(),
        })
    }

    /// Leaf ids of the task tree that have no recorded result yet.
    pub fn open_leaves(&self) -> Vec<String> {
        let Some(tree) = &self.tree else {
            return Vec::new();
        };
        tasks::leaves(tree)
            .unwrap_or_default()
            .into_iter()
            .filter(|leaf| !self.results.contains_key(leaf))
            .collect()
    }
}

fn validate_submission(matrix: &DecisionMatrix, submission: &Submission) -> Result<(), SessionError> {
    let invalid = |reason: String| SessionError::InvalidSubmission {
        evaluator: submission.evaluator.clone(),
        reason,
    };
    if !(submission.weight.is_finite() && submission.weight >= 0.0) {
        return Err(invalid("weight must be finite and non-negative".into()));
    }
    match &submission.evaluation {
        Evaluation::Ranking { ranking } => {
            let mut got: Vec<&String> = ranking.iter().collect();
            let mut want: Vec<&String> = matrix.schemes.iter().collect();
            got.sort();
            want.sort();
            if got != want {
                return Err(invalid("ranking must list every scheme of the node exactly once".into()));
            }
        }
        Evaluation::Scores { scores } => {
            let candidate = DecisionMatrix {
                schemes: matrix.schemes.clone(),
                criteria: matrix.criteria.clone(),
                scores: scores.clone(),
            };
            candidate.validate().map_err(|e| invalid(e.to_string()))?;
        }
    }
    Ok(())
}

fn decide_node(
    node: &str,
    work: &NodeWork,
    semantics: Semantics,
    ctx: &EngineContext,
) -> Result<NodeDecision, SessionError> {
    let matrix = work
        .matrix
        .as_ref()
        .ok_or_else(|| SessionError::MissingMatrix(node.to_owned()))?;
    if work.submissions.is_empty() {
        return Err(SessionError::MissingBallots(node.to_owned()));
    }

    let consensus = commit_consensus(&work.board, semantics, &ctx.policy, ctx.extension_bound)?;
    let mut vetoed: Vec<String> = work
        .board
        .elements()
        .filter(|e| e.kind == ElementKind::Opinion && consensus.label_of(&e.id) == Some(Label::Out))
        .filter_map(|e| e.scheme.clone())
        .filter(|s| matrix.scheme_index(s).is_some())
        .collect();
    vetoed.sort();
    vetoed.dedup();
    let is_vetoed = |s: &str| vetoed.iter().any(|v| v == s);
    let remaining: Vec<String> = matrix.schemes.iter().filter(|s| !is_vetoed(s)).cloned().collect();
    if remaining.is_empty() {
        return Err(SessionError::AllSchemesVetoed(node.to_owned()));
    }

    let mut flows = BTreeMap::new();
    let mut ballots = Vec::with_capacity(work.submissions.len());
    for submission in work.submissions.values() {
        let ballot = match &submission.evaluation {
            Evaluation::Ranking { ranking } => RankingBallot {
                evaluator: submission.evaluator.clone(),
                ranking: ranking.iter().filter(|s| !is_vetoed(s)).cloned().collect(),
                weight: submission.weight,
            },
            Evaluation::Scores { scores } => {
                let own = DecisionMatrix {
                    schemes: matrix.schemes.clone(),
                    criteria: matrix.criteria.clone(),
                    scores: scores.clone(),
                }
                .retain_schemes(|s| !is_vetoed(s));
                if own.schemes.len() == 1 {
                    RankingBallot {
                        evaluator: submission.evaluator.clone(),
                        ranking: own.schemes,
                        weight: submission.weight,
                    }
                } else {
                    let flow = promethee2(&own)?;
                    let ballot = flows_to_ballot(&flow, submission.evaluator.clone(), submission.weight);
                    flows.insert(submission.evaluator.clone(), flow);
                    ballot
                }
            }
        };
        ballots.push(ballot);
    }
    let group = borda_aggregate(&ballots)?;
    let chosen = group.top().expect("remaining schemes are non-empty").to_owned();
    Ok(NodeDecision {
        consensus,
        vetoed,
        flows,
        ballots,
        group,
        chosen,
    })
}

/// Spreads evaluators over leaf tasks round-robin in panel order, so that
/// loads differ by at most one. With more evaluators than leaves every
/// evaluator gets exactly one leaf.
pub fn appoint_tasks(session: &Session) -> Result<Assignment, SessionError> {
    let panel = session.panel.as_ref().ok_or(SessionError::NoPanel)?;
    let tree = session.tree.as_ref().ok_or(SessionError::NoTree)?;
    let leaves = tasks::leaves(tree)?;
    let evaluators = panel.evaluators();
    let mut assignment = Assignment::default();
    if evaluators.is_empty() {
        return Ok(assignment);
    }
    for leaf in &leaves {
        assignment.tasks.insert(leaf.clone(), Vec::new());
    }
    for t in 0..leaves.len().max(evaluators.len()) {
        let leaf = &leaves[t % leaves.len()];
        assignment
            .tasks
            .get_mut(leaf)
            .expect("leaf registered")
            .push(evaluators[t % evaluators.len()].clone());
    }
    Ok(assignment)
}
