//! Decision-task trees and root-to-leaf decision paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptAnnotation, DecisionProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("outline is empty")]
    EmptyOutline,
    #[error("duplicate task id {0:?}")]
    DuplicateId(String),
    #[error("task tree is invalid: {0:?}")]
    InvalidTree(Vec<TreeViolation>),
    #[error("no score for task node {0:?}")]
    MissingScore(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "scheme")]
pub enum TaskStatus {
    Open,
    Solved(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskNode {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub annotation: ConceptAnnotation,
    #[serde(default)]
    pub children: Vec<String>,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTree {
    pub root: String,
    pub nodes: BTreeMap<String, TaskNode>,
}

pub type DecisionPath = Vec<String>;

/// User-supplied decomposition outline; one node per subtask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlineNode {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub annotation: ConceptAnnotation,
    #[serde(default)]
    pub children: Vec<OutlineNode>,
}

impl OutlineNode {
    pub fn leaf(id: impl Into<String>, label: impl Into<String>) -> Self {
        OutlineNode {
            id: id.into(),
            label: label.into(),
            annotation: ConceptAnnotation::default(),
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<OutlineNode>) -> Self {
        self.children = children;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum TreeViolation {
    MissingRoot { root: String },
    RootHasParent { root: String, parent: String },
    KeyMismatch { key: String, id: String },
    DanglingChild { parent: String, child: String },
    MultipleParents { node: String, parents: Vec<String> },
    ExtraRoot { node: String },
    Unreachable { node: String },
    Cycle { nodes: Vec<String> },
}

/// Builds a tree from an outline. A single top-level outline node becomes the
/// root; several top-level nodes are placed under a root named after the
/// problem. The root always carries the problem's annotation, with any
/// assertions from the outline root layered on top.
pub fn decompose(problem: &DecisionProblem, outline: &[OutlineNode]) -> Result<TaskTree, TaskError> {
    let root_outline = match outline {
        [] => return Err(TaskError::EmptyOutline),
        [single] => single.clone(),
        many => OutlineNode {
            id: problem.id.clone(),
            label: problem.title.clone(),
            annotation: ConceptAnnotation::default(),
            children: many.to_vec(),
        },
    };

    let mut nodes = BTreeMap::new();
    let mut stack = vec![&root_outline];
    while let Some(o) = stack.pop() {
        if o.id.is_empty() {
            return Err(TaskError::EmptyOutline);
        }
        let node = TaskNode {
            id: o.id.clone(),
            label: o.label.clone(),
            annotation: o.annotation.clone(),
            children: o.children.iter().map(|c| c.id.clone()).collect(),
            status: TaskStatus::Open,
        };
        if nodes.insert(o.id.clone(), node).is_some() {
            return Err(TaskError::DuplicateId(o.id.clone()));
        }
        stack.extend(o.children.iter().rev());
    }

    let root = nodes.get_mut(&root_outline.id).expect("root inserted");
    let mut annotation = problem.annotation.clone();
    for a in root.annotation.iter() {
        annotation.insert(a.clone()).expect("labels already validated");
    }
    root.annotation = annotation;

    let tree = TaskTree {
        root: root_outline.id.clone(),
        nodes,
    };
    debug_assert!(validate_tree(&tree).is_ok());
    Ok(tree)
}

/// Reports every structural problem found in `tree`.
pub fn validate_tree(tree: &TaskTree) -> Result<(), Vec<TreeViolation>> {
    let mut violations = BTreeSet::new();
    if !tree.nodes.contains_key(&tree.root) {
        violations.insert(TreeViolation::MissingRoot {
            root: tree.root.clone(),
        });
    }

    let mut parents: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (key, node) in &tree.nodes {
        if key != &node.id {
            violations.insert(TreeViolation::KeyMismatch {
                key: key.clone(),
                id: node.id.clone(),
            });
        }
        for child in &node.children {
            if tree.nodes.contains_key(child) {
                parents.entry(child.as_str()).or_default().push(key.clone());
            } else {
                violations.insert(TreeViolation::DanglingChild {
                    parent: key.clone(),
                    child: child.clone(),
                });
            }
        }
    }

    for key in tree.nodes.keys() {
        let ps = parents.get(key.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if *key == tree.root {
            for p in ps {
                violations.insert(TreeViolation::RootHasParent {
                    root: key.clone(),
                    parent: p.clone(),
                });
            }
        } else if ps.is_empty() {
            violations.insert(TreeViolation::ExtraRoot { node: key.clone() });
        } else if ps.len() > 1 {
            let mut sorted = ps.to_vec();
            sorted.sort();
            violations.insert(TreeViolation::MultipleParents {
                node: key.clone(),
                parents: sorted,
            });
        }
    }

    for cycle in find_cycles(tree) {
        violations.insert(TreeViolation::Cycle { nodes: cycle });
    }

    if tree.nodes.contains_key(&tree.root) {
        let mut seen = BTreeSet::new();
        let mut stack = vec![tree.root.as_str()];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Some(node) = tree.nodes.get(id) {
                stack.extend(node.children.iter().map(String::as_str));
            }
        }
        for key in tree.nodes.keys() {
            if !seen.contains(key.as_str()) {
                violations.insert(TreeViolation::Unreachable { node: key.clone() });
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations.into_iter().collect())
    }
}

/// One entry per back edge found by an iterative DFS; each cycle is listed
/// starting from its smallest id.
fn find_cycles(tree: &TaskTree) -> Vec<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark: BTreeMap<&str, Mark> = tree.nodes.keys().map(|k| (k.as_str(), Mark::New)).collect();
    let mut cycles = BTreeSet::new();

    for start in tree.nodes.keys() {
        if mark[start.as_str()] != Mark::New {
            continue;
        }
        // (node, index of next child to visit)
        let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
        mark.insert(start.as_str(), Mark::Active);
        while let Some((id, next)) = stack.last_mut() {
            let node = &tree.nodes[*id];
            if *next == node.children.len() {
                mark.insert(id, Mark::Done);
                stack.pop();
                continue;
            }
            let child = node.children[*next].as_str();
            *next += 1;
            match mark.get(child) {
                Some(Mark::New) => {
                    mark.insert(child, Mark::Active);
                    stack.push((child, 0));
                }
                Some(Mark::Active) => {
                    let from = stack.iter().position(|(n, _)| *n == child).expect("active on stack");
                    let mut cycle: Vec<String> = stack[from..].iter().map(|(n, _)| n.to_string()).collect();
                    let min = (0..cycle.len()).min_by_key(|&i| &cycle[i]).unwrap_or(0);
                    cycle.rotate_left(min);
                    cycles.insert(cycle);
                }
                _ => {}
            }
        }
    }
    cycles.into_iter().collect()
}

pub fn is_leaf(tree: &TaskTree, id: &str) -> bool {
    tree.nodes.get(id).is_some_and(|n| n.children.is_empty())
}

/// Leaf ids in depth-first child order.
pub fn leaves(tree: &TaskTree) -> Result<Vec<String>, TaskError> {
    Ok(decision_paths(tree)?
        .into_iter()
        .map(|mut p| p.pop().expect("paths are non-empty"))
        .collect())
}

/// One root-to-leaf path per leaf, depth-first in child order.
pub fn decision_paths(tree: &TaskTree) -> Result<Vec<DecisionPath>, TaskError> {
    validate_tree(tree).map_err(TaskError::InvalidTree)?;
    let mut paths = Vec::new();
    let mut current = Vec::new();
    walk(tree, &tree.root, &mut current, &mut paths);
    Ok(paths)
}

fn walk(tree: &TaskTree, id: &str, current: &mut Vec<String>, out: &mut Vec<DecisionPath>) {
    current.push(id.to_owned());
    let node = &tree.nodes[id];
    if node.children.is_empty() {
        out.push(current.clone());
    } else {
        for child in &node.children {
            walk(tree, child, current, out);
        }
    }
    current.pop();
}

/// Path with the largest sum of node scores; earliest path wins ties.
pub fn select_path(tree: &TaskTree, node_scores: &BTreeMap<String, f64>) -> Result<DecisionPath, TaskError> {
    validate_tree(tree).map_err(TaskError::InvalidTree)?;
    if let Some(missing) = tree.nodes.keys().find(|id| !node_scores.contains_key(*id)) {
        return Err(TaskError::MissingScore(missing.clone()));
    }
    let mut best: Option<(f64, DecisionPath)> = None;
    for path in decision_paths(tree)? {
        let total: f64 = path.iter().map(|id| node_scores[id]).sum();
        if best.as_ref().map_or(true, |(b, _)| total > *b) {
            best = Some((total, path));
        }
    }
    Ok(best.expect("a valid tree has at least one path").1)
}
