//! Seven-concept problem annotations.
//!
//! A decision problem is described by flat assertions over a fixed set of
//! concept kinds. Three kinds (limitation, principle, target) are the basic
//! factors of a problem; the other four are additional factors. Problems are
//! classified as structured, semi-structured or non-structured from how
//! complete their annotation is and whether the resource base already holds a
//! comparable model or method.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{ResourceCatalog, ResourceKind};

/// Minimum similarity a stored model/method needs for a problem to count as
/// structured.
pub const STRUCTURED_SIMILARITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OntologyError {
    #[error("concept label must not be empty")]
    EmptyLabel,
    #[error("duplicate assertion ({kind}, {label:?})")]
    DuplicateAssertion { kind: ConceptKind, label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConceptKind {
    ProblemType,
    DecisionLimitation,
    DecisionPrinciple,
    DecisionTarget,
    ProblemCharacteristic,
    EvaluationCriterion,
    Scheme,
}

impl ConceptKind {
    pub const ALL: [ConceptKind; 7] = [
        ConceptKind::ProblemType,
        ConceptKind::DecisionLimitation,
        ConceptKind::DecisionPrinciple,
        ConceptKind::DecisionTarget,
        ConceptKind::ProblemCharacteristic,
        ConceptKind::EvaluationCriterion,
        ConceptKind::Scheme,
    ];

    pub const BASIC: [ConceptKind; 3] = [
        ConceptKind::DecisionLimitation,
        ConceptKind::DecisionPrinciple,
        ConceptKind::DecisionTarget,
    ];

    pub fn factor_class(self) -> FactorClass {
        factor_class(self)
    }
}

impl fmt::Display for ConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FactorClass {
    Basic,
    Additional,
}

pub fn factor_class(kind: ConceptKind) -> FactorClass {
    match kind {
        ConceptKind::DecisionLimitation
        | ConceptKind::DecisionPrinciple
        | ConceptKind::DecisionTarget => FactorClass::Basic,
        ConceptKind::ProblemType
        | ConceptKind::ProblemCharacteristic
        | ConceptKind::EvaluationCriterion
        | ConceptKind::Scheme => FactorClass::Additional,
    }
}

/// A number or a piece of text. Used for assertion payloads and for
/// decision-maker attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_owned())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptAssertion {
    pub kind: ConceptKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Scalar>,
    #[serde(default)]
    pub quantitative: bool,
}

impl ConceptAssertion {
    pub fn new(kind: ConceptKind, label: impl Into<String>) -> Self {
        ConceptAssertion {
            kind,
            label: label.into(),
            value: None,
            quantitative: false,
        }
    }

    pub fn with_value(mut self, value: impl Into<Scalar>) -> Self {
        self.value = Some(value.into());
        self
    }

    pub fn quantitative(mut self) -> Self {
        self.quantitative = true;
        self
    }

    pub fn key(&self) -> (ConceptKind, &str) {
        (self.kind, self.label.as_str())
    }
}

/// Set of assertions keyed by `(kind, label)`, kept sorted by that key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAnnotation", into = "RawAnnotation")]
pub struct ConceptAnnotation {
    assertions: Vec<ConceptAssertion>,
}

#[derive(Serialize, Deserialize)]
struct RawAnnotation {
    #[serde(default)]
    assertions: Vec<ConceptAssertion>,
}

impl TryFrom<RawAnnotation> for ConceptAnnotation {
    type Error = OntologyError;

    fn try_from(raw: RawAnnotation) -> Result<Self, Self::Error> {
        let mut out = ConceptAnnotation::default();
        for a in raw.assertions {
            if a.label.is_empty() {
                return Err(OntologyError::EmptyLabel);
            }
            if out.get(a.kind, &a.label).is_some() {
                return Err(OntologyError::DuplicateAssertion {
                    kind: a.kind,
                    label: a.label,
                });
            }
            out.upsert(a);
        }
        Ok(out)
    }
}

impl From<ConceptAnnotation> for RawAnnotation {
    fn from(a: ConceptAnnotation) -> Self {
        RawAnnotation {
            assertions: a.assertions,
        }
    }
}

impl ConceptAnnotation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConceptAssertion> {
        self.assertions.iter()
    }

    pub fn get(&self, kind: ConceptKind, label: &str) -> Option<&ConceptAssertion> {
        self.position(kind, label).ok().map(|i| &self.assertions[i])
    }

    pub fn has_kind(&self, kind: ConceptKind) -> bool {
        self.assertions.iter().any(|a| a.kind == kind)
    }

    /// Inserts or replaces by `(kind, label)`. Returns `EmptyLabel` for a blank label.
    pub fn insert(&mut self, assertion: ConceptAssertion) -> Result<(), OntologyError> {
        if assertion.label.is_empty() {
            return Err(OntologyError::EmptyLabel);
        }
        self.upsert(assertion);
        Ok(())
    }

    fn upsert(&mut self, assertion: ConceptAssertion) {
        match self.position(assertion.kind, &assertion.label) {
            Ok(i) => self.assertions[i] = assertion,
            Err(i) => self.assertions.insert(i, assertion),
        }
    }

    fn position(&self, kind: ConceptKind, label: &str) -> Result<usize, usize> {
        self.assertions
            .binary_search_by(|a| (a.kind, a.label.as_str()).cmp(&(kind, label)))
    }
}

impl FromIterator<ConceptAssertion> for ConceptAnnotation {
    fn from_iter<I: IntoIterator<Item = ConceptAssertion>>(iter: I) -> Self {
        let mut out = ConceptAnnotation::default();
        for a in iter {
            if !a.label.is_empty() {
                out.upsert(a);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProblemStructureClass {
    Structured,
    SemiStructured,
    NonStructured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionProblem {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub annotation: ConceptAnnotation,
    pub structure: ProblemStructureClass,
}

impl DecisionProblem {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        DecisionProblem {
            id: id.into(),
            title: title.into(),
            description: String::new(),
            annotation: ConceptAnnotation::default(),
            structure: ProblemStructureClass::NonStructured,
        }
    }

    /// Re-runs classification against `catalog` and stores the result.
    pub fn reclassify(&mut self, catalog: &ResourceCatalog) -> ProblemStructureClass {
        self.structure = classify_problem(&self.annotation, catalog);
        self.structure
    }
}

pub fn annotate(
    problem: &DecisionProblem,
    assertion: ConceptAssertion,
) -> Result<DecisionProblem, OntologyError> {
    let mut out = problem.clone();
    out.annotation.insert(assertion)?;
    Ok(out)
}

/// Structured: all basic kinds asserted, every evaluation criterion
/// quantitative, and a comparable model or method on file.
/// Semi-structured: basic kinds asserted but not structured.
/// Non-structured: anything else.
pub fn classify_problem(
    annotation: &ConceptAnnotation,
    catalog: &ResourceCatalog,
) -> ProblemStructureClass {
    let basics_complete = ConceptKind::BASIC.iter().all(|&k| annotation.has_kind(k));
    if !basics_complete {
        return ProblemStructureClass::NonStructured;
    }
    let criteria_quantitative = annotation
        .iter()
        .filter(|a| a.kind == ConceptKind::EvaluationCriterion)
        .all(|a| a.quantitative);
    let has_reference = [ResourceKind::Model, ResourceKind::Method].iter().any(|&kind| {
        !catalog
            .retrieve_similar(annotation, kind, STRUCTURED_SIMILARITY_THRESHOLD, 1)
            .is_empty()
    });
    if criteria_quantitative && has_reference {
        ProblemStructureClass::Structured
    } else {
        ProblemStructureClass::SemiStructured
    }
}

/// Assertions matching every supplied filter, sorted by `(kind, label)`.
pub fn query_concepts(
    annotation: &ConceptAnnotation,
    kind: Option<ConceptKind>,
    factor: Option<FactorClass>,
) -> Vec<ConceptAssertion> {
    annotation
        .iter()
        .filter(|a| kind.map_or(true, |k| a.kind == k))
        .filter(|a| factor.map_or(true, |f| factor_class(a.kind) == f))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ResourceEntry;

    fn basic_annotation() -> ConceptAnnotation {
        [
            ConceptAssertion::new(ConceptKind::DecisionLimitation, "budget cap"),
            ConceptAssertion::new(ConceptKind::DecisionPrinciple, "fairness"),
            ConceptAssertion::new(ConceptKind::DecisionTarget, "maximize ROI"),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn factor_classes() {
        assert_eq!(factor_class(ConceptKind::DecisionLimitation), FactorClass::Basic);
        assert_eq!(factor_class(ConceptKind::EvaluationCriterion), FactorClass::Additional);
        assert_eq!(factor_class(ConceptKind::DecisionTarget), FactorClass::Basic);
        let basic = ConceptKind::ALL
            .iter()
            .filter(|k| k.factor_class() == FactorClass::Basic)
            .count();
        assert_eq!((basic, ConceptKind::ALL.len() - basic), (3, 4));
    }

    #[test]
    fn classify_empty_is_non_structured() {
        let catalog = ResourceCatalog::default();
        assert_eq!(
            classify_problem(&ConceptAnnotation::new(), &catalog),
            ProblemStructureClass::NonStructured
        );
    }

    #[test]
    fn classify_without_reference_is_semi() {
        let catalog = ResourceCatalog::default();
        assert_eq!(
            classify_problem(&basic_annotation(), &catalog),
            ProblemStructureClass::SemiStructured
        );
    }

    #[test]
    fn classify_with_matching_model_is_structured() {
        let mut ann = basic_annotation();
        ann.insert(ConceptAssertion::new(ConceptKind::EvaluationCriterion, "cost").quantitative())
            .unwrap();
        let mut catalog = ResourceCatalog::default();
        catalog
            .store_entry(ResourceEntry::new("m1", ResourceKind::Model, ann.clone()))
            .unwrap();
        assert_eq!(classify_problem(&ann, &catalog), ProblemStructureClass::Structured);

        // a qualitative criterion demotes to semi-structured
        ann.insert(ConceptAssertion::new(ConceptKind::EvaluationCriterion, "morale"))
            .unwrap();
        assert_eq!(classify_problem(&ann, &catalog), ProblemStructureClass::SemiStructured);
    }

    #[test]
    fn method_entries_also_count() {
        let ann = basic_annotation();
        let mut catalog = ResourceCatalog::default();
        catalog
            .store_entry(ResourceEntry::new("x", ResourceKind::Scheme, ann.clone()))
            .unwrap();
        assert_eq!(classify_problem(&ann, &catalog), ProblemStructureClass::SemiStructured);
        catalog
            .store_entry(ResourceEntry::new("x", ResourceKind::Method, ann.clone()))
            .unwrap();
        assert_eq!(classify_problem(&ann, &catalog), ProblemStructureClass::Structured);
    }

    #[test]
    fn annotate_inserts_and_replaces() {
        let p = DecisionProblem::new("p", "test");
        let p = annotate(&p, ConceptAssertion::new(ConceptKind::DecisionTarget, "maximize ROI"))
            .unwrap();
        assert!(p.annotation.get(ConceptKind::DecisionTarget, "maximize ROI").is_some());

        let p = annotate(
            &p,
            ConceptAssertion::new(ConceptKind::DecisionTarget, "maximize ROI").with_value(0.2),
        )
        .unwrap();
        let p = annotate(
            &p,
            ConceptAssertion::new(ConceptKind::DecisionTarget, "maximize ROI").with_value(0.3),
        )
        .unwrap();
        assert_eq!(p.annotation.len(), 1);
        assert_eq!(
            p.annotation.get(ConceptKind::DecisionTarget, "maximize ROI").unwrap().value,
            Some(Scalar::Number(0.3))
        );
    }

    #[test]
    fn annotate_rejects_empty_label() {
        let p = DecisionProblem::new("p", "test");
        assert_eq!(
            annotate(&p, ConceptAssertion::new(ConceptKind::Scheme, "")),
            Err(OntologyError::EmptyLabel)
        );
    }

    #[test]
    fn query_filters() {
        let mut ann = basic_annotation();
        ann.insert(ConceptAssertion::new(ConceptKind::DecisionTarget, "cut churn")).unwrap();
        ann.insert(ConceptAssertion::new(ConceptKind::Scheme, "outsource")).unwrap();

        let targets = query_concepts(&ann, Some(ConceptKind::DecisionTarget), None);
        let labels: Vec<_> = targets.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, ["cut churn", "maximize ROI"]);

        let basic = query_concepts(&ann, None, Some(FactorClass::Basic));
        assert_eq!(basic.len(), 4);
        assert!(basic.iter().all(|a| a.kind.factor_class() == FactorClass::Basic));

        assert!(query_concepts(&ConceptAnnotation::new(), None, None).is_empty());
        assert_eq!(query_concepts(&ann, None, None).len(), 5);
    }

    #[test]
    fn duplicate_assertions_rejected_on_decode() {
        let json = r#"{"assertions":[
            {"kind":"Scheme","label":"a"},
            {"kind":"Scheme","label":"a","value":1.0}
        ]}"#;
        assert!(serde_json::from_str::<ConceptAnnotation>(json).is_err());
    }
}
