//! Random command scripts that drive a session through most of its
//! lifecycle. Commands the engine rejects are dropped while generating, so
//! every emitted script applies cleanly from the document's initial session.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ontogdss_core::batch::BatchDocument;
use ontogdss_core::command::{apply_command, Action, Command, Workspace};
use ontogdss_core::mcdm::{CriterionSpec, DecisionMatrix, Direction, PreferenceFunction};
use ontogdss_core::ontology::{ConceptAssertion, ConceptKind, DecisionProblem};
use ontogdss_core::selection::{DecisionMaker, Group, GroupPool, SelectionCriterion, SelectionStage, Target};
use ontogdss_core::session::{Evaluation, Session, Stage, Submission};
use ontogdss_core::store::{ResourceEntry, ResourceKind};
use ontogdss_core::tasks::OutlineNode;
use ontogdss_core::workshop::{ArgumentElement, ElementKind, RelationType, Semantics};

const LABELS: [&str; 5] = ["cost", "time", "quality", "risk", "staff"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_assertion(rng: &mut impl Rng) -> ConceptAssertion {
    let kind = *ConceptKind::ALL.choose(rng).unwrap();
    let label = *LABELS.choose(rng).unwrap();
    let a = ConceptAssertion::new(kind, label);
    match rng.gen_range(0..3) {
        0 => a,
        1 => a.with_value(rng.gen_range(0.0..100.0)).quantitative(),
        _ => a.with_value("qualitative"),
    }
}

fn random_outline(rng: &mut impl Rng) -> (Vec<OutlineNode>, Vec<String>) {
    let mut leaves = Vec::new();
    let branches = rng.gen_range(1..=3);
    let children = (0..branches)
        .map(|b| {
            let subs = rng.gen_range(0..=2);
            if subs == 0 {
                leaves.push(format!("n{b}"));
                OutlineNode::leaf(format!("n{b}"), format!("task {b}"))
            } else {
                OutlineNode::leaf(format!("n{b}"), format!("task {b}")).with_children(
                    (0..subs)
                        .map(|s| {
                            leaves.push(format!("n{b}-{s}"));
                            OutlineNode::leaf(format!("n{b}-{s}"), format!("subtask {b}.{s}"))
                        })
                        .collect(),
                )
            }
        })
        .collect();
    (vec![OutlineNode::leaf("root", "root task").with_children(children)], leaves)
}

pub fn random_matrix(rng: &mut impl Rng, schemes: usize, criteria: usize) -> DecisionMatrix {
    DecisionMatrix {
        schemes: (0..schemes).map(|i| format!("S{i}")).collect(),
        criteria: (0..criteria)
            .map(|j| {
                let dir = if rng.gen_bool(0.5) { Direction::Maximize } else { Direction::Minimize };
                let c = CriterionSpec::new(format!("c{j}"), dir, rng.gen_range(0.1..1.0)).with_scale(10.0);
                if rng.gen_bool(0.3) {
                    c.with_preference(PreferenceFunction::Linear { q: 0.5, p: 3.0 })
                } else {
                    c
                }
            })
            .collect(),
        scores: (0..schemes)
            .map(|_| (0..criteria).map(|_| rng.gen_range(0..10) as f64).collect())
            .collect(),
    }
}

fn random_pool(rng: &mut impl Rng) -> GroupPool {
    GroupPool {
        groups: (0..rng.gen_range(1..=3))
            .map(|g| Group {
                id: format!("G{g}"),
                label: format!("group {g}"),
                members: (0..rng.gen_range(2..=4))
                    .map(|m| {
                        DecisionMaker::new(format!("E{g}{m}"))
                            .with("field", *["it", "finance"].choose(rng).unwrap())
                            .with("age", rng.gen_range(20..60) as f64)
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn open_stage() -> SelectionStage {
    SelectionStage {
        criteria: vec![SelectionCriterion::new("field", Target::Equals("it".into()), 1.0)],
        threshold: 0.0,
    }
}

fn random_action(rng: &mut impl Rng, session: &Session, leaves: &mut Vec<String>) -> Action {
    let node = leaves.choose(rng).cloned().unwrap_or_else(|| "n0".into());
    let schemes: Vec<String> = session
        .nodes
        .get(&node)
        .and_then(|w| w.matrix.as_ref())
        .map(|m| m.schemes.clone())
        .unwrap_or_default();
    let evaluators = session.panel.as_ref().map(|p| p.evaluators()).unwrap_or_default();
    match rng.gen_range(0..100) {
        0..=9 => Action::Annotate {
            assertion: random_assertion(rng),
        },
        10..=16 => {
            let target = if session.stage == Stage::SchemeVerification && rng.gen_bool(0.3) {
                Stage::SchemeEstablishment
            } else {
                session.stage.next().unwrap_or(Stage::ProblemProduction)
            };
            Action::Advance { target }
        }
        17..=19 => {
            let (outline, new_leaves) = random_outline(rng);
            let schemes = rng.gen_range(2..=4);
            let matrices: BTreeMap<String, DecisionMatrix> = new_leaves
                .iter()
                .map(|l| {
                    let criteria = rng.gen_range(1..=3);
                    (l.clone(), random_matrix(rng, schemes, criteria))
                })
                .collect();
            *leaves = new_leaves;
            Action::Decompose { outline, matrices }
        }
        20..=25 => Action::SelectPanel {
            pool: random_pool(rng),
            alternatives: vec!["A1".into(), "A2".into()],
            stage1: open_stage(),
            stage2: open_stage(),
            k: 1,
        },
        26..=45 => {
            let kind = *[ElementKind::Opinion, ElementKind::Proposition, ElementKind::Problem]
                .choose(rng)
                .unwrap();
            let author = evaluators.choose(rng).cloned().unwrap_or_else(|| "anon".into());
            let mut e = ArgumentElement::new(format!("e{}", rng.gen_range(0..1000)), author, kind, "claim");
            if kind == ElementKind::Opinion {
                if let Some(s) = schemes.choose(rng) {
                    e = e.for_scheme(s.clone());
                }
            }
            Action::AddElement { node, element: e }
        }
        46..=65 => {
            let busy: Vec<&String> = session
                .nodes
                .iter()
                .filter(|(_, w)| w.board.len() >= 2)
                .map(|(id, _)| id)
                .collect();
            let node = busy.choose(rng).map_or(node, |n| (*n).clone());
            let element_ids: Vec<String> = session
                .nodes
                .get(&node)
                .map(|w| w.board.elements().map(|e| e.id.clone()).collect())
                .unwrap_or_default();
            let pick = |rng: &mut _| element_ids.choose(rng).cloned().unwrap_or_default();
            Action::Relate {
                source: pick(rng),
                target: pick(rng),
                relation: *RelationType::ALL.choose(rng).unwrap(),
                node,
            }
        }
        66..=82 => {
            let evaluator = evaluators.choose(rng).cloned().unwrap_or_default();
            let evaluation = if rng.gen_bool(0.5) {
                let mut ranking = schemes.clone();
                ranking.shuffle(rng);
                Evaluation::Ranking { ranking }
            } else {
                let criteria = session
                    .nodes
                    .get(&node)
                    .and_then(|w| w.matrix.as_ref())
                    .map_or(1, |m| m.criteria.len());
                Evaluation::Scores {
                    scores: (0..schemes.len())
                        .map(|_| (0..criteria).map(|_| rng.gen_range(0..10) as f64).collect())
                        .collect(),
                }
            };
            Action::SubmitRanking {
                node,
                submission: Submission {
                    evaluator,
                    weight: rng.gen_range(1..=3) as f64,
                    evaluation,
                },
            }
        }
        83..=95 => Action::RunDecision {
            node,
            semantics: [None, Some(Semantics::Grounded), Some(Semantics::Preferred), Some(Semantics::Stable)]
                .choose(rng)
                .copied()
                .flatten(),
        },
        _ => Action::RecordResult {
            node,
            scheme: schemes.choose(rng).cloned().unwrap_or_default(),
        },
    }
}

pub fn base_document(seed: u64) -> BatchDocument {
    let mut problem = DecisionProblem::new(format!("p{seed}"), "random problem");
    problem
        .annotation
        .insert(ConceptAssertion::new(ConceptKind::DecisionTarget, "cost"))
        .unwrap();
    let mut doc = BatchDocument::new(Session::new(format!("s{seed}"), problem));
    doc.resources = vec![ResourceEntry::new(
        "m",
        ResourceKind::Model,
        [
            ConceptAssertion::new(ConceptKind::DecisionTarget, "cost"),
            ConceptAssertion::new(ConceptKind::DecisionLimitation, "time"),
            ConceptAssertion::new(ConceptKind::DecisionPrinciple, "quality"),
        ]
        .into_iter()
        .collect(),
    )];
    doc
}

/// A document whose script has up to `attempts` accepted commands.
pub fn random_document(seed: u64, attempts: usize) -> BatchDocument {
    let mut rng = rng(seed);
    let mut doc = base_document(seed);
    let mut ws = Workspace::with_session(doc.context().unwrap(), doc.session.clone());
    let id = doc.session.id.clone();
    let mut leaves = Vec::new();
    for _ in 0..attempts {
        let previous_leaves = leaves.clone();
        let action = random_action(&mut rng, ws.session(&id).unwrap(), &mut leaves);
        let command = Command { session: None, action };
        let mut addressed = command.clone();
        addressed.session = Some(id.clone());
        if apply_command(&mut ws, &addressed).is_ok() {
            doc.script.push(command);
        } else {
            leaves = previous_leaves;
        }
    }
    doc
}
