//! Workshop boards and their argumentation semantics.
//!
//! Participants post elements (opinions, propositions, problems) and connect
//! them with one of five typed relations. A board reduces to an abstract
//! argumentation framework through an [`AttackPolicy`]; acceptance is then
//! decided by grounded, preferred or stable semantics, and the resulting
//! partition is committed as a [`ConsensusRecord`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default argument-count bound for the exhaustive semantics.
pub const DEFAULT_EXTENSION_BOUND: usize = 20;

/// Hard ceiling: subsets are enumerated as `u64` bitmasks.
const MAX_EXTENSION_BOUND: usize = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkshopError {
    #[error("element id {0:?} already on the board")]
    DuplicateId(String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("element {0:?} cannot relate to itself")]
    SelfRelation(String),
    #[error("{arguments} arguments exceed the exhaustive-search bound of {bound}")]
    TooLarge { arguments: usize, bound: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Opinion,
    Proposition,
    Problem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentElement {
    pub id: String,
    pub author: String,
    pub kind: ElementKind,
    #[serde(default)]
    pub text: String,
    /// Scheme this element speaks for, if any. A rejected opinion vetoes it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// Assigned by the board on insertion.
    #[serde(default)]
    pub seq: u64,
}

impl ArgumentElement {
    pub fn new(id: impl Into<String>, author: impl Into<String>, kind: ElementKind, text: impl Into<String>) -> Self {
        ArgumentElement {
            id: id.into(),
            author: author.into(),
            kind,
            text: text.into(),
            scheme: None,
            seq: 0,
        }
    }

    pub fn for_scheme(mut self, scheme: impl Into<String>) -> Self {
        self.scheme = Some(scheme.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationType {
    Disagree,
    Support,
    Neutral,
    Supplement,
    Query,
}

impl RelationType {
    pub const ALL: [RelationType; 5] = [
        RelationType::Disagree,
        RelationType::Support,
        RelationType::Neutral,
        RelationType::Supplement,
        RelationType::Query,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgRelation {
    pub source: String,
    pub target: String,
    pub relation: RelationType,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentBoard {
    elements: BTreeMap<String, ArgumentElement>,
    /// Sorted by `(source, target)`; at most one entry per ordered pair.
    relations: Vec<ArgRelation>,
    next_seq: u64,
}

impl ArgumentBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn elements(&self) -> impl Iterator<Item = &ArgumentElement> {
        self.elements.values()
    }

    pub fn element(&self, id: &str) -> Option<&ArgumentElement> {
        self.elements.get(id)
    }

    pub fn relations(&self) -> &[ArgRelation] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Logical clock: the sequence number the next element will receive.
    pub fn clock(&self) -> u64 {
        self.next_seq
    }

    pub fn add_element(&mut self, mut element: ArgumentElement) -> Result<&ArgumentElement, WorkshopError> {
        if self.elements.contains_key(&element.id) {
            return Err(WorkshopError::DuplicateId(element.id));
        }
        element.seq = self.next_seq;
        self.next_seq += 1;
        let id = element.id.clone();
        Ok(self.elements.entry(id).or_insert(element))
    }

    /// Records `source -> target`, replacing the type of an existing relation
    /// on the same ordered pair.
    pub fn relate(&mut self, source: &str, target: &str, relation: RelationType) -> Result<(), WorkshopError> {
        for id in [source, target] {
            if !self.elements.contains_key(id) {
                return Err(WorkshopError::UnknownElement(id.to_owned()));
            }
        }
        if source == target {
            return Err(WorkshopError::SelfRelation(source.to_owned()));
        }
        match self.find(source, target) {
            Ok(i) => self.relations[i].relation = relation,
            Err(i) => self.relations.insert(
                i,
                ArgRelation {
                    source: source.to_owned(),
                    target: target.to_owned(),
                    relation,
                },
            ),
        }
        Ok(())
    }

    /// Drops the relation on `source -> target`, e.g. once a query is answered.
    pub fn unrelate(&mut self, source: &str, target: &str) -> Option<ArgRelation> {
        self.find(source, target).ok().map(|i| self.relations.remove(i))
    }

    fn find(&self, source: &str, target: &str) -> Result<usize, usize> {
        self.relations
            .binary_search_by(|r| (r.source.as_str(), r.target.as_str()).cmp(&(source, target)))
    }
}

/// Which relation types count as attacks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackPolicy {
    pub attacking: BTreeSet<RelationType>,
}

impl Default for AttackPolicy {
    fn default() -> Self {
        AttackPolicy {
            attacking: [RelationType::Disagree, RelationType::Query].into_iter().collect(),
        }
    }
}

impl AttackPolicy {
    pub fn attacks(&self, relation: RelationType) -> bool {
        self.attacking.contains(&relation)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentationFramework {
    pub arguments: BTreeSet<String>,
    pub attacks: BTreeSet<(String, String)>,
}

impl ArgumentationFramework {
    pub fn new<A, S>(arguments: A, attacks: &[(S, S)]) -> Self
    where
        A: IntoIterator,
        A::Item: Into<String>,
        S: AsRef<str>,
    {
        let mut af = ArgumentationFramework {
            arguments: arguments.into_iter().map(Into::into).collect(),
            attacks: BTreeSet::new(),
        };
        for (a, b) in attacks {
            af.arguments.insert(a.as_ref().to_owned());
            af.arguments.insert(b.as_ref().to_owned());
            af.attacks.insert((a.as_ref().to_owned(), b.as_ref().to_owned()));
        }
        af
    }

    /// Attack targets per argument, for graph views.
    pub fn adjacency(&self) -> BTreeMap<String, Vec<String>> {
        let mut adj: BTreeMap<String, Vec<String>> =
            self.arguments.iter().map(|a| (a.clone(), Vec::new())).collect();
        for (a, b) in &self.attacks {
            adj.entry(a.clone()).or_default().push(b.clone());
        }
        adj
    }
}

pub fn to_dung(board: &ArgumentBoard, policy: &AttackPolicy) -> ArgumentationFramework {
    ArgumentationFramework {
        arguments: board.elements.keys().cloned().collect(),
        attacks: board
            .relations
            .iter()
            .filter(|r| policy.attacks(r.relation))
            .map(|r| (r.source.clone(), r.target.clone()))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    In,
    Out,
    Undec,
}

pub type Labelling = BTreeMap<String, Label>;

/// Index form of a framework: argument names in sorted order and, per
/// argument, the indices of its attackers.
struct Indexed<'a> {
    names: Vec<&'a str>,
    attackers: Vec<Vec<usize>>,
}

impl<'a> Indexed<'a> {
    fn new(af: &'a ArgumentationFramework) -> Self {
        let names: Vec<&str> = af.arguments.iter().map(String::as_str).collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut attackers = vec![Vec::new(); names.len()];
        for (a, b) in &af.attacks {
            if let (Some(&ia), Some(&ib)) = (index.get(a.as_str()), index.get(b.as_str())) {
                attackers[ib].push(ia);
            }
        }
        Indexed { names, attackers }
    }

    fn masks(&self) -> Vec<u64> {
        self.attackers
            .iter()
            .map(|atk| atk.iter().fold(0u64, |m, &i| m | (1 << i)))
            .collect()
    }

    fn to_set(&self, mask: u64) -> BTreeSet<String> {
        (0..self.names.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.names[i].to_owned())
            .collect()
    }
}

/// Least fixed point: an argument goes In once all its attackers are Out,
/// Out once some attacker is In; whatever is left is Undec.
pub fn grounded_labelling(af: &ArgumentationFramework) -> Labelling {
    let idx = Indexed::new(af);
    let n = idx.names.len();
    let mut label: Vec<Option<Label>> = vec![None; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if label[i].is_some() {
                continue;
            }
            let atk = &idx.attackers[i];
            if atk.iter().all(|&j| label[j] == Some(Label::Out)) {
                label[i] = Some(Label::In);
                changed = true;
            } else if atk.iter().any(|&j| label[j] == Some(Label::In)) {
                label[i] = Some(Label::Out);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    idx.names
        .iter()
        .zip(label)
        .map(|(name, l)| (name.to_string(), l.unwrap_or(Label::Undec)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Semantics {
    Grounded,
    Preferred,
    Stable,
}

/// Extensions under `semantics`, sorted. Preferred and stable enumerate all
/// subsets and refuse frameworks with more than `bound` arguments.
pub fn extensions(
    af: &ArgumentationFramework,
    semantics: Semantics,
    bound: usize,
) -> Result<Vec<BTreeSet<String>>, WorkshopError> {
    if semantics == Semantics::Grounded {
        let set = grounded_labelling(af)
            .into_iter()
            .filter(|(_, l)| *l == Label::In)
            .map(|(a, _)| a)
            .collect();
        return Ok(vec![set]);
    }
    let n = af.arguments.len();
    let bound = bound.min(MAX_EXTENSION_BOUND);
    if n > bound {
        return Err(WorkshopError::TooLarge { arguments: n, bound });
    }
    let idx = Indexed::new(af);
    let attackers = idx.masks();
    let all: u64 = if n == 0 { 0 } else { u64::MAX >> (64 - n) };

    let attacked_by = |set: u64| -> u64 {
        (0..n).filter(|&i| attackers[i] & set != 0).fold(0, |m, i| m | (1 << i))
    };
    let conflict_free = |set: u64| (0..n).all(|i| set & (1 << i) == 0 || attackers[i] & set == 0);

    let mut found: Vec<u64> = Vec::new();
    match semantics {
        Semantics::Stable => {
            for set in 0..=all {
                if conflict_free(set) && attacked_by(set) == all & !set {
                    found.push(set);
                }
            }
        }
        Semantics::Preferred => {
            let mut admissible = Vec::new();
            for set in 0..=all {
                if !conflict_free(set) {
                    continue;
                }
                let defeated = attacked_by(set);
                let defended = (0..n).all(|i| set & (1 << i) == 0 || attackers[i] & !defeated == 0);
                if defended {
                    admissible.push(set);
                }
            }
            admissible.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
            for set in admissible {
                if !found.iter().any(|&big| set & big == set) {
                    found.push(set);
                }
            }
        }
        Semantics::Grounded => unreachable!(),
    }
    let mut out: Vec<BTreeSet<String>> = found.into_iter().map(|m| idx.to_set(m)).collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusRecord {
    pub accepted: Vec<String>,
    pub rejected: Vec<String>,
    pub undecided: Vec<String>,
    pub semantics: Semantics,
    pub committed_at: u64,
}

impl ConsensusRecord {
    pub fn label_of(&self, id: &str) -> Option<Label> {
        if self.accepted.iter().any(|a| a == id) {
            Some(Label::In)
        } else if self.rejected.iter().any(|a| a == id) {
            Some(Label::Out)
        } else if self.undecided.iter().any(|a| a == id) {
            Some(Label::Undec)
        } else {
            None
        }
    }
}

/// Commits the board's acceptance partition.
///
/// Grounded uses the grounded labelling directly. For preferred and stable,
/// an element is accepted when it belongs to every extension, rejected when
/// it belongs to none, and undecided otherwise. A framework without any
/// stable extension leaves everything undecided.
pub fn commit_consensus(
    board: &ArgumentBoard,
    semantics: Semantics,
    policy: &AttackPolicy,
    bound: usize,
) -> Result<ConsensusRecord, WorkshopError> {
    let af = to_dung(board, policy);
    let labelling: Labelling = match semantics {
        Semantics::Grounded => grounded_labelling(&af),
        _ => {
            let exts = extensions(&af, semantics, bound)?;
            af.arguments
                .iter()
                .map(|a| {
                    let hits = exts.iter().filter(|e| e.contains(a)).count();
                    let label = if exts.is_empty() {
                        Label::Undec
                    } else if hits == 0 {
                        Label::Out
                    } else if hits == exts.len() {
                        Label::In
                    } else {
                        Label::Undec
                    };
                    (a.clone(), label)
                })
                .collect()
        }
    };
    let pick = |want: Label| -> Vec<String> {
        labelling
            .iter()
            .filter(|(_, l)| **l == want)
            .map(|(a, _)| a.clone())
            .collect()
    };
    Ok(ConsensusRecord {
        accepted: pick(Label::In),
        rejected: pick(Label::Out),
        undecided: pick(Label::Undec),
        semantics,
        committed_at: board.clock(),
    })
}

/// Accepted elements of kind [`ElementKind::Opinion`].
pub fn accepted_opinions<'a>(board: &'a ArgumentBoard, record: &ConsensusRecord) -> Vec<&'a ArgumentElement> {
    record
        .accepted
        .iter()
        .filter_map(|id| board.element(id))
        .filter(|e| e.kind == ElementKind::Opinion)
        .collect()
}
