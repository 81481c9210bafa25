//! Two-stage evaluator selection.
//!
//! Candidate decision makers live in groups (for instance superiors, peers,
//! subordinates, outsiders, and the evaluated people themselves). The first
//! stage keeps members whose task-related attributes clear a threshold; the
//! second stage ranks the survivors by personal characteristics and takes the
//! top `k` per group, separately for every alternative under evaluation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("group pool is empty")]
    EmptyPool,
    #[error("group {group:?} has {available} candidate(s) for alternative {alternative:?}, {needed} needed")]
    InsufficientCandidates {
        group: String,
        alternative: Option<String>,
        needed: usize,
        available: usize,
    },
    #[error("invalid selection stage: {0}")]
    InvalidStage(String),
    #[error("invalid group pool: {0}")]
    InvalidPool(String),
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionMaker {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, Scalar>,
}

impl DecisionMaker {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        DecisionMaker {
            name: id.clone(),
            id,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attribute: &str, value: impl Into<Scalar>) -> Self {
        self.attributes.insert(attribute.to_owned(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub members: Vec<DecisionMaker>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPool {
    pub groups: Vec<Group>,
}

impl GroupPool {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.groups.is_empty() {
            return Err(SelectionError::EmptyPool);
        }
        let mut group_ids = BTreeSet::new();
        let mut member_ids = BTreeSet::new();
        for g in &self.groups {
            if !group_ids.insert(g.id.as_str()) {
                return Err(SelectionError::InvalidPool(format!("duplicate group id {:?}", g.id)));
            }
            for m in &g.members {
                if !member_ids.insert(m.id.as_str()) {
                    return Err(SelectionError::InvalidPool(format!(
                        "member {:?} appears more than once",
                        m.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn group_of(&self, member: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|g| g.members.iter().any(|m| m.id == member))
            .map(|g| g.id.as_str())
    }
}

/// What an attribute must equal (a single value) or belong to (a list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    OneOf(Vec<Scalar>),
    Equals(Scalar),
}

impl Target {
    fn matches(&self, value: &Scalar) -> bool {
        match self {
            Target::Equals(t) => t == value,
            Target::OneOf(set) => set.contains(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriterion {
    pub attribute: String,
    pub target: Target,
    pub weight: f64,
}

impl SelectionCriterion {
    pub fn new(attribute: &str, target: Target, weight: f64) -> Self {
        SelectionCriterion {
            attribute: attribute.to_owned(),
            target,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStage {
    pub criteria: Vec<SelectionCriterion>,
    pub threshold: f64,
}

impl SelectionStage {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(SelectionError::InvalidStage(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.criteria.iter().any(|c| !c.weight.is_finite() || c.weight < 0.0) {
            return Err(SelectionError::InvalidStage(
                "criterion weights must be finite and non-negative".into(),
            ));
        }
        if self.criteria.iter().map(|c| c.weight).sum::<f64>() <= 0.0 {
            return Err(SelectionError::InvalidStage("criterion weights must sum to more than 0".into()));
        }
        Ok(())
    }
}

/// Weighted fraction of criteria the decision maker matches. A missing
/// attribute never matches.
pub fn stage_score(dm: &DecisionMaker, stage: &SelectionStage) -> f64 {
    let total: f64 = stage.criteria.iter().map(|c| c.weight).sum();
    let matched: f64 = stage
        .criteria
        .iter()
        .filter(|c| dm.attributes.get(&c.attribute).is_some_and(|v| c.target.matches(v)))
        .map(|c| c.weight)
        .sum();
    if total > 0.0 {
        matched / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub member: DecisionMaker,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCandidates {
    pub group: String,
    pub candidates: Vec<ScoredCandidate>,
}

fn rank(candidates: &mut [ScoredCandidate]) {
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.member.id.cmp(&b.member.id)));
}

/// Per group, members scoring at least the stage threshold, best first.
pub fn first_selection(pool: &GroupPool, stage: &SelectionStage) -> Result<Vec<GroupCandidates>, SelectionError> {
    pool.validate()?;
    stage.validate()?;
    Ok(pool
        .groups
        .iter()
        .map(|g| {
            let mut candidates: Vec<ScoredCandidate> = g
                .members
                .iter()
                .map(|m| ScoredCandidate {
                    member: m.clone(),
                    score: stage_score(m, stage),
                })
                .filter(|c| c.score >= stage.threshold)
                .collect();
            rank(&mut candidates);
            GroupCandidates {
                group: g.id.clone(),
                candidates,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSelection {
    pub group: String,
    pub evaluators: Vec<String>,
}

/// Top `k` per group under the second-stage score.
pub fn second_selection(
    candidates: &[GroupCandidates],
    stage: &SelectionStage,
    k: usize,
) -> Result<Vec<GroupSelection>, SelectionError> {
    second_selection_for(candidates, stage, k, None)
}

fn second_selection_for(
    candidates: &[GroupCandidates],
    stage: &SelectionStage,
    k: usize,
    alternative: Option<&str>,
) -> Result<Vec<GroupSelection>, SelectionError> {
    if k == 0 {
        return Err(SelectionError::ZeroK);
    }
    stage.validate()?;
    candidates
        .iter()
        .map(|g| {
            let mut pool: Vec<ScoredCandidate> = g
                .candidates
                .iter()
                .filter(|c| Some(c.member.id.as_str()) != alternative)
                .map(|c| ScoredCandidate {
                    member: c.member.clone(),
                    score: stage_score(&c.member, stage),
                })
                .collect();
            if pool.len() < k {
                return Err(SelectionError::InsufficientCandidates {
                    group: g.group.clone(),
                    alternative: alternative.map(str::to_owned),
                    needed: k,
                    available: pool.len(),
                });
            }
            rank(&mut pool);
            Ok(GroupSelection {
                group: g.group.clone(),
                evaluators: pool.into_iter().take(k).map(|c| c.member.id).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternativePanel {
    pub alternative: String,
    pub groups: Vec<GroupSelection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorPanel {
    pub k: usize,
    pub alternatives: Vec<AlternativePanel>,
}

impl EvaluatorPanel {
    /// Distinct evaluator ids in order of first appearance.
    pub fn evaluators(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.alternatives
            .iter()
            .flat_map(|a| a.groups.iter())
            .flat_map(|g| g.evaluators.iter())
            .filter(|id| seen.insert(id.as_str()))
            .cloned()
            .collect()
    }

    pub fn contains(&self, evaluator: &str) -> bool {
        self.alternatives
            .iter()
            .flat_map(|a| a.groups.iter())
            .any(|g| g.evaluators.iter().any(|e| e == evaluator))
    }

    pub fn selection_count(&self) -> usize {
        self.alternatives
            .iter()
            .flat_map(|a| a.groups.iter())
            .map(|g| g.evaluators.len())
            .sum()
    }
}

/// Runs both stages for every alternative. A member whose id equals the
/// alternative being evaluated is never chosen for it.
pub fn double_select(
    pool: &GroupPool,
    alternatives: &[String],
    stage1: &SelectionStage,
    stage2: &SelectionStage,
    k: usize,
) -> Result<EvaluatorPanel, SelectionError> {
    if k == 0 {
        return Err(SelectionError::ZeroK);
    }
    let candidates = first_selection(pool, stage1)?;
    let alternatives = alternatives
        .iter()
        .map(|alt| {
            Ok(AlternativePanel {
                alternative: alt.clone(),
                groups: second_selection_for(&candidates, stage2, k, Some(alt))?,
            })
        })
        .collect::<Result<Vec<_>, SelectionError>>()?;
    Ok(EvaluatorPanel { k, alternatives })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_stage(threshold: f64) -> SelectionStage {
        SelectionStage {
            criteria: vec![
                SelectionCriterion::new("field", Target::OneOf(vec!["computing".into(), "management".into()]), 2.0),
                SelectionCriterion::new("education", Target::Equals("postgraduate".into()), 1.0),
            ],
            threshold,
        }
    }

    fn age_stage() -> SelectionStage {
        SelectionStage {
            criteria: vec![SelectionCriterion::new("senior", Target::Equals("yes".into()), 1.0)],
            threshold: 0.0,
        }
    }

    fn pool() -> GroupPool {
        GroupPool {
            groups: vec![
                Group {
                    id: "G1".into(),
                    label: String::new(),
                    members: vec![
                        DecisionMaker::new("a").with("field", "computing").with("education", "postgraduate"),
                        DecisionMaker::new("b").with("field", "economics").with("education", "postgraduate"),
                        DecisionMaker::new("c").with("field", "management"),
                    ],
                },
                Group {
                    id: "G2".into(),
                    label: String::new(),
                    members: vec![DecisionMaker::new("d").with("field", "law")],
                },
            ],
        }
    }

    #[test]
    fn scores() {
        let stage = field_stage(0.0);
        let all = DecisionMaker::new("x").with("field", "computing").with("education", "postgraduate");
        assert_eq!(stage_score(&all, &stage), 1.0);
        assert_eq!(stage_score(&DecisionMaker::new("y"), &stage), 0.0);
        let first_only = DecisionMaker::new("z").with("field", "management");
        // hand: 2 / (2 + 1)
        assert_eq!(stage_score(&first_only, &stage), 2.0 / 3.0);
    }

    #[test]
    fn numeric_targets_match_by_value() {
        let stage = SelectionStage {
            criteria: vec![SelectionCriterion::new("age", Target::OneOf(vec![40.0.into(), 41.0.into()]), 1.0)],
            threshold: 0.0,
        };
        assert_eq!(stage_score(&DecisionMaker::new("x").with("age", 41.0), &stage), 1.0);
        assert_eq!(stage_score(&DecisionMaker::new("x").with("age", "41"), &stage), 0.0);
    }

    #[test]
    fn first_selection_thresholds() {
        let everyone = first_selection(&pool(), &field_stage(0.0)).unwrap();
        assert_eq!(everyone[0].candidates.len(), 3);
        assert_eq!(everyone[1].candidates.len(), 1);

        let none = first_selection(
            &GroupPool {
                groups: vec![Group {
                    id: "G".into(),
                    label: String::new(),
                    members: vec![DecisionMaker::new("q").with("field", "computing")],
                }],
            },
            &field_stage(1.0),
        )
        .unwrap();
        assert!(none[0].candidates.is_empty());

        // scores: a = 1, b = 1/3, c = 2/3, d = 0
        let half = first_selection(&pool(), &field_stage(0.5)).unwrap();
        let ids: Vec<_> = half[0].candidates.iter().map(|c| c.member.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert!(half[1].candidates.is_empty());

        assert_eq!(first_selection(&GroupPool { groups: vec![] }, &field_stage(0.0)), Err(SelectionError::EmptyPool));
    }

    #[test]
    fn stage_validation() {
        let mut s = field_stage(0.5);
        s.threshold = 1.5;
        assert!(matches!(s.validate(), Err(SelectionError::InvalidStage(_))));
        let zero = SelectionStage {
            criteria: vec![SelectionCriterion::new("x", Target::Equals("y".into()), 0.0)],
            threshold: 0.0,
        };
        assert!(matches!(zero.validate(), Err(SelectionError::InvalidStage(_))));
    }

    #[test]
    fn second_selection_top_k() {
        let candidates = vec![GroupCandidates {
            group: "G".into(),
            candidates: ["e", "d", "c", "b", "a"]
                .iter()
                .map(|id| ScoredCandidate {
                    member: DecisionMaker::new(*id).with("senior", if "bd".contains(id) { "yes" } else { "no" }),
                    score: 1.0,
                })
                .collect(),
        }];
        let picked = second_selection(&candidates, &age_stage(), 2).unwrap();
        assert_eq!(picked[0].evaluators, ["b", "d"]);

        let all = second_selection(&candidates, &age_stage(), 5).unwrap();
        assert_eq!(all[0].evaluators, ["b", "d", "a", "c", "e"]);

        assert!(matches!(
            second_selection(&candidates, &age_stage(), 6),
            Err(SelectionError::InsufficientCandidates { needed: 6, available: 5, .. })
        ));
        assert_eq!(second_selection(&candidates, &age_stage(), 0), Err(SelectionError::ZeroK));
    }

    #[test]
    fn self_exclusion() {
        let pool = GroupPool {
            groups: vec![Group {
                id: "G5".into(),
                label: String::new(),
                members: vec![DecisionMaker::new("Y2")],
            }],
        };
        let err = double_select(&pool, &["Y2".into()], &age_stage(), &age_stage(), 1).unwrap_err();
        assert_eq!(
            err,
            SelectionError::InsufficientCandidates {
                group: "G5".into(),
                alternative: Some("Y2".into()),
                needed: 1,
                available: 0
            }
        );
        let ok = double_select(&pool, &["Y1".into()], &age_stage(), &age_stage(), 1).unwrap();
        assert_eq!(ok.alternatives[0].groups[0].evaluators, ["Y2"]);
    }

    #[test]
    fn one_passing_member_per_group() {
        let pool = GroupPool {
            groups: (1..=3)
                .map(|g| Group {
                    id: format!("G{g}"),
                    label: String::new(),
                    members: vec![
                        DecisionMaker::new(format!("ok{g}")).with("field", "computing").with("senior", "yes"),
                        DecisionMaker::new(format!("no{g}")).with("field", "law"),
                    ],
                })
                .collect(),
        };
        let panel =
            double_select(&pool, &["Y1".into(), "Y2".into()], &field_stage(0.5), &age_stage(), 1).unwrap();
        for alt in &panel.alternatives {
            let picked: Vec<_> = alt.groups.iter().map(|g| g.evaluators[0].as_str()).collect();
            assert_eq!(picked, ["ok1", "ok2", "ok3"]);
        }
        assert_eq!(panel.selection_count(), 6);
        assert_eq!(panel.evaluators(), ["ok1", "ok2", "ok3"]);
    }

    #[test]
    fn pool_validation() {
        let mut p = pool();
        p.groups[1].members.push(DecisionMaker::new("a"));
        assert!(matches!(p.validate(), Err(SelectionError::InvalidPool(_))));
    }
}
