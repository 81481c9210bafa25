//! Built-in demonstration scenario: a performance review of four staff
//! members Y1..Y4, judged by evaluators drawn from five groups (superiors,
//! peers, subordinates, outsiders, and the four staff members themselves),
//! one evaluator per group and person.

use std::collections::BTreeMap;

use crate::batch::BatchDocument;
use crate::command::{Action, Command};
use crate::mcdm::{CriterionSpec, DecisionMatrix, Direction, PreferenceFunction};
use crate::ontology::{ConceptAssertion, ConceptKind, DecisionProblem};
use crate::selection::{
    double_select, DecisionMaker, Group, GroupPool, SelectionCriterion, SelectionStage, Target,
};
use crate::session::{Evaluation, Session, Stage, Submission};
use crate::store::{ResourceEntry, ResourceKind};
use crate::tasks::OutlineNode;
use crate::workshop::{ArgumentElement, ElementKind, RelationType};

pub const DEMO_SESSION_ID: &str = "performance-review";

pub const ALTERNATIVES: [&str; 4] = ["Y1", "Y2", "Y3", "Y4"];

fn person(id: &str, field: &str, education: &str, age: f64, nationality: &str) -> DecisionMaker {
    DecisionMaker::new(id)
        .with("field", field)
        .with("education", education)
        .with("age", age)
        .with("nationality", nationality)
}

pub fn pool() -> GroupPool {
    let group = |id: &str, label: &str, members: Vec<DecisionMaker>| Group {
        id: id.into(),
        label: label.into(),
        members,
    };
    GroupPool {
        groups: vec![
            group(
                "G1",
                "higher authorities",
                vec![
                    person("H1", "management", "postgraduate", 52.0, "local"),
                    person("H2", "economic", "undergraduate", 58.0, "local"),
                    person("H3", "law", "postgraduate", 49.0, "overseas"),
                ],
            ),
            group(
                "G2",
                "peer authorities",
                vec![
                    person("P1", "computing", "undergraduate", 35.0, "local"),
                    person("P2", "computing", "postgraduate", 41.0, "overseas"),
                    person("P3", "marketing", "postgraduate", 38.0, "local"),
                ],
            ),
            group(
                "G3",
                "lower authorities",
                vec![
                    person("L1", "computing", "undergraduate", 27.0, "local"),
                    person("L2", "management", "postgraduate", 31.0, "local"),
                    person("L3", "design", "undergraduate", 25.0, "overseas"),
                ],
            ),
            group(
                "G4",
                "independent people outside the company",
                vec![
                    person("I1", "economic", "postgraduate", 45.0, "overseas"),
                    person("I2", "computing", "postgraduate", 39.0, "local"),
                    person("I3", "journalism", "undergraduate", 33.0, "local"),
                ],
            ),
            group(
                "G5",
                "alternatives themselves",
                vec![
                    person("Y1", "computing", "postgraduate", 34.0, "local"),
                    person("Y2", "computing", "undergraduate", 29.0, "overseas"),
                    person("Y3", "management", "postgraduate", 40.0, "local"),
                    person("Y4", "economic", "undergraduate", 31.0, "local"),
                ],
            ),
        ],
    }
}

/// First stage: professional field relevant to the task.
pub fn task_stage() -> SelectionStage {
    SelectionStage {
        criteria: vec![SelectionCriterion::new(
            "field",
            Target::OneOf(vec!["computing".into(), "economic".into(), "management".into()]),
            1.0,
        )],
        threshold: 1.0,
    }
}

/// Second stage: personal characteristics.
pub fn character_stage() -> SelectionStage {
    SelectionStage {
        criteria: vec![
            SelectionCriterion::new("education", Target::Equals("postgraduate".into()), 2.0),
            SelectionCriterion::new("nationality", Target::Equals("local".into()), 1.0),
        ],
        threshold: 0.0,
    }
}

fn problem() -> DecisionProblem {
    let mut p = DecisionProblem::new("annual-review", "Annual performance review of four staff members");
    p.description = "Evaluate the work performance of Y1..Y4 and pick the strongest performer \
                     in each review area, using evaluators from five independent groups."
        .into();
    p
}

fn annotations() -> Vec<ConceptAssertion> {
    vec![
        ConceptAssertion::new(ConceptKind::ProblemType, "personnel evaluation"),
        ConceptAssertion::new(ConceptKind::DecisionLimitation, "review closes within the quarter"),
        ConceptAssertion::new(ConceptKind::DecisionPrinciple, "multi-source independent assessment"),
        ConceptAssertion::new(ConceptKind::DecisionTarget, "identify the strongest performer"),
        ConceptAssertion::new(ConceptKind::ProblemCharacteristic, "multi-stakeholder"),
        ConceptAssertion::new(ConceptKind::EvaluationCriterion, "delivered output")
            .with_value("story points per quarter")
            .quantitative(),
        ConceptAssertion::new(ConceptKind::EvaluationCriterion, "peer rating")
            .with_value(5.0)
            .quantitative(),
    ]
}

fn resources() -> Vec<ResourceEntry> {
    let review: Vec<ConceptAssertion> = annotations().into_iter().take(5).collect();
    let mut model = ResourceEntry::new("360-review", ResourceKind::Model, review.into_iter().collect());
    model.payload = serde_json::json!({ "method": "multi-rater weighted ranking" });
    vec![
        model,
        ResourceEntry::new(
            "vendor-tender",
            ResourceKind::Method,
            [
                ConceptAssertion::new(ConceptKind::ProblemType, "procurement"),
                ConceptAssertion::new(ConceptKind::DecisionTarget, "lowest total cost"),
            ]
            .into_iter()
            .collect(),
        ),
    ]
}

fn outline() -> Vec<OutlineNode> {
    vec![OutlineNode::leaf("review", "Performance review").with_children(vec![
        OutlineNode::leaf("technical", "Technical contribution"),
        OutlineNode::leaf("people", "Working with people").with_children(vec![
            OutlineNode::leaf("collaboration", "Collaboration"),
            OutlineNode::leaf("leadership", "Leadership"),
        ]),
    ])]
}

fn criterion(name: &str, direction: Direction, weight: f64, scale: f64) -> CriterionSpec {
    CriterionSpec::new(name, direction, weight).with_scale(scale)
}

fn matrices() -> BTreeMap<String, DecisionMatrix> {
    let schemes: Vec<String> = ALTERNATIVES.iter().map(|s| s.to_string()).collect();
    let mk = |criteria: Vec<CriterionSpec>, scores: [[f64; 3]; 4]| DecisionMatrix {
        schemes: schemes.clone(),
        criteria,
        scores: scores.iter().map(|r| r.to_vec()).collect(),
    };
    BTreeMap::from([
        (
            "technical".to_string(),
            mk(
                vec![
                    criterion("delivered output", Direction::Maximize, 0.5, 40.0)
                        .with_preference(PreferenceFunction::Linear { q: 2.0, p: 10.0 }),
                    criterion("defect rate", Direction::Minimize, 0.3, 5.0),
                    criterion("code review load", Direction::Maximize, 0.2, 20.0),
                ],
                [[34.0, 2.1, 12.0], [41.0, 3.4, 9.0], [29.0, 1.2, 15.0], [38.0, 2.8, 11.0]],
            ),
        ),
        (
            "collaboration".to_string(),
            mk(
                vec![
                    criterion("peer rating", Direction::Maximize, 0.5, 5.0),
                    criterion("cross-team projects", Direction::Maximize, 0.3, 6.0),
                    criterion("escalations", Direction::Minimize, 0.2, 4.0),
                ],
                [[4.2, 3.0, 1.0], [3.6, 2.0, 2.0], [4.5, 4.0, 0.0], [3.9, 5.0, 3.0]],
            ),
        ),
        (
            "leadership".to_string(),
            mk(
                vec![
                    criterion("mentees", Direction::Maximize, 0.4, 5.0),
                    criterion("initiatives led", Direction::Maximize, 0.4, 5.0),
                    criterion("team attrition", Direction::Minimize, 0.2, 0.5),
                ],
                [[4.0, 3.0, 0.05], [0.0, 2.0, 0.20], [3.0, 2.0, 0.10], [1.0, 1.0, 0.15]],
            ),
        ),
    ])
}

/// Small evaluator-specific shift so that individual score sheets differ.
fn perturb(scores: &[Vec<f64>], evaluator_rank: usize, leaf_rank: usize) -> Vec<Vec<f64>> {
    scores
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, v)| {
                    let wobble = ((evaluator_rank * 7 + leaf_rank * 3 + i * 5 + j) % 5) as f64 - 2.0;
                    v + wobble * 0.05 * v.abs().max(1.0)
                })
                .collect()
        })
        .collect()
}

fn cmd(action: Action) -> Command {
    Command { session: None, action }
}

fn element(id: &str, author: &str, kind: ElementKind, text: &str) -> ArgumentElement {
    ArgumentElement::new(id, author, kind, text)
}

fn workshop(evaluators: &[String]) -> Vec<Command> {
    let by = |i: usize| evaluators[i % evaluators.len()].clone();
    let add = |node: &str, e: ArgumentElement| cmd(Action::AddElement { node: node.into(), element: e });
    let rel = |node: &str, s: &str, t: &str, r: RelationType| {
        cmd(Action::Relate {
            node: node.into(),
            source: s.into(),
            target: t.into(),
            relation: r,
        })
    };
    vec![
        // technical: Y2's raw output is contested by its defect record
        add("technical", element("t-o1", &by(0), ElementKind::Opinion, "Y2 delivered the most").for_scheme("Y2")),
        add("technical", element("t-p1", &by(1), ElementKind::Problem, "Y2's releases needed the most hotfixes")),
        add("technical", element("t-o2", &by(2), ElementKind::Opinion, "Y3's work is the most reliable").for_scheme("Y3")),
        add("technical", element("t-s1", &by(3), ElementKind::Proposition, "weight defects as heavily as volume")),
        rel("technical", "t-p1", "t-o1", RelationType::Disagree),
        rel("technical", "t-s1", "t-o2", RelationType::Support),
        rel("technical", "t-s1", "t-p1", RelationType::Supplement),
        // collaboration: a query that stays open leaves both sides undecided
        add("collaboration", element("c-o1", &by(1), ElementKind::Opinion, "Y4 drives the most cross-team work").for_scheme("Y4")),
        add("collaboration", element("c-q1", &by(2), ElementKind::Problem, "are Y4's escalations a symptom?")),
        add("collaboration", element("c-o2", &by(3), ElementKind::Opinion, "Y3 is the calmest collaborator").for_scheme("Y3")),
        rel("collaboration", "c-q1", "c-o1", RelationType::Query),
        rel("collaboration", "c-o1", "c-q1", RelationType::Disagree),
        rel("collaboration", "c-o2", "c-o1", RelationType::Neutral),
        // leadership: uncontested
        add("leadership", element("l-o1", &by(4), ElementKind::Opinion, "Y1 mentors the most people").for_scheme("Y1")),
        add("leadership", element("l-p1", &by(0), ElementKind::Proposition, "count initiatives over the whole year")),
        rel("leadership", "l-p1", "l-o1", RelationType::Supplement),
    ]
}

/// The complete scenario as a batch document.
pub fn demo_document() -> BatchDocument {
    let mut problem = problem();
    for a in annotations().into_iter().take(2) {
        problem.annotation.insert(a).expect("non-empty labels");
    }
    let mut doc = BatchDocument::new(Session::new(DEMO_SESSION_ID, problem));
    doc.resources = resources();

    let alternatives: Vec<String> = ALTERNATIVES.iter().map(|s| s.to_string()).collect();
    let panel = double_select(&pool(), &alternatives, &task_stage(), &character_stage(), 1)
        .expect("demo pool satisfies both stages");

    // precompute the appointment the engine will make
    let mut probe = doc.session.clone();
    probe.decompose(&outline(), matrices()).expect("demo outline is valid");
    probe.set_panel(panel.clone()).expect("panel applies");
    let assignment = probe.assignment.clone().expect("tree and panel present");
    let evaluators = panel.evaluators();

    let mut script = Vec::new();
    for a in annotations().into_iter().skip(2) {
        script.push(cmd(Action::Annotate { assertion: a }));
    }
    script.push(cmd(Action::Advance { target: Stage::PropertiesAnalysis }));
    script.push(cmd(Action::Decompose { outline: outline(), matrices: matrices() }));
    script.push(cmd(Action::SelectPanel {
        pool: pool(),
        alternatives,
        stage1: task_stage(),
        stage2: character_stage(),
        k: 1,
    }));
    script.push(cmd(Action::Advance { target: Stage::SchemeEstablishment }));
    script.extend(workshop(&evaluators));
    script.push(cmd(Action::Advance { target: Stage::SchemeEvaluation }));

    let matrices = matrices();
    for (leaf_rank, (leaf, assigned)) in assignment.tasks.iter().enumerate() {
        for evaluator in assigned {
            let rank = evaluators.iter().position(|e| e == evaluator).expect("assigned from panel");
            script.push(cmd(Action::SubmitRanking {
                node: leaf.clone(),
                submission: Submission {
                    evaluator: evaluator.clone(),
                    weight: 1.0,
                    evaluation: Evaluation::Scores {
                        scores: perturb(&matrices[leaf].scores, rank, leaf_rank),
                    },
                },
            }));
        }
    }
    // a superior also hands in a direct ranking for the technical area
    script.push(cmd(Action::SubmitRanking {
        node: "technical".into(),
        submission: Submission {
            evaluator: "H1".into(),
            weight: 2.0,
            evaluation: Evaluation::Ranking {
                ranking: vec!["Y3".into(), "Y1".into(), "Y4".into(), "Y2".into()],
            },
        },
    }));

    script.push(cmd(Action::Advance { target: Stage::SchemeSelection }));
    for leaf in assignment.tasks.keys() {
        script.push(cmd(Action::RunDecision { node: leaf.clone(), semantics: None }));
    }
    script.push(cmd(Action::Advance { target: Stage::SchemeVerification }));
    script.push(cmd(Action::Advance { target: Stage::GeneralApplication }));
    doc.script = script;
    doc
}
