//! Multi-criteria ranking of schemes and group aggregation.
//!
//! * PROMETHEE II net flows with usual or linear preference functions.
//! * ELECTRE I concordance/discordance outranking and its kernel.
//! * Weighted Borda count over individual rankings.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Net flows closer than this are treated as tied and ordered by scheme id.
/// Absorbs rounding noise so that equivalent weightings rank identically.
pub const FLOW_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McdmError {
    #[error("at least two schemes are required, got {0}")]
    TooFewSchemes(usize),
    #[error("matrix is not rectangular: row {row} has {found} scores, expected {expected}")]
    NonRectangular { row: usize, found: usize, expected: usize },
    #[error("score for scheme {scheme:?} on criterion {criterion:?} is not finite")]
    NonFinite { scheme: String, criterion: String },
    #[error("invalid criterion {criterion:?}: {reason}")]
    InvalidCriterion { criterion: String, reason: String },
    #[error("duplicate scheme id {0:?}")]
    DuplicateScheme(String),
    #[error("matrix has no criteria")]
    NoCriteria,
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("no ballots to aggregate")]
    NoBallots,
    #[error("ballot of {evaluator:?} does not rank the same schemes as the first ballot")]
    MismatchedSchemeSets { evaluator: String },
    #[error("ballot of {evaluator:?} is invalid: {reason}")]
    InvalidBallot { evaluator: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum PreferenceFunction {
    Usual,
    /// Indifference up to `q`, strict preference from `p`, linear between.
    Linear { q: f64, p: f64 },
}

impl PreferenceFunction {
    pub fn eval(self, d: f64) -> f64 {
        match self {
            PreferenceFunction::Usual => {
                if d > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PreferenceFunction::Linear { q, p } => {
                if d <= q {
                    0.0
                } else if d >= p {
                    1.0
                } else {
                    (d - q) / (p - q)
                }
            }
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub name: String,
    pub direction: Direction,
    pub weight: f64,
    #[serde(default = "default_preference")]
    pub preference: PreferenceFunction,
    /// Divisor applied to ELECTRE discordance on this criterion.
    #[serde(default = "default_scale")]
    pub discordance_scale: f64,
}

fn default_preference() -> PreferenceFunction {
    PreferenceFunction::Usual
}

impl CriterionSpec {
    pub fn new(name: impl Into<String>, direction: Direction, weight: f64) -> Self {
        CriterionSpec {
            name: name.into(),
            direction,
            weight,
            preference: PreferenceFunction::Usual,
            discordance_scale: 1.0,
        }
    }

    pub fn with_preference(mut self, preference: PreferenceFunction) -> Self {
        self.preference = preference;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.discordance_scale = scale;
        self
    }

    fn validate(&self) -> Result<(), McdmError> {
        let bad = |reason: &str| {
            Err(McdmError::InvalidCriterion {
                criterion: self.name.clone(),
                reason: reason.to_owned(),
            })
        };
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return bad("weight must be finite and > 0");
        }
        if !(self.discordance_scale.is_finite() && self.discordance_scale > 0.0) {
            return bad("discordance scale must be finite and > 0");
        }
        if let PreferenceFunction::Linear { q, p } = self.preference {
            if !(q.is_finite() && p.is_finite() && q >= 0.0 && p > q) {
                return bad("linear preference needs p > q >= 0");
            }
        }
        Ok(())
    }

    /// Advantage of `a` over `b` on this criterion, direction-aware.
    fn advantage(&self, a: f64, b: f64) -> f64 {
        match self.direction {
            Direction::Maximize => a - b,
            Direction::Minimize => b - a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionMatrix {
    pub schemes: Vec<String>,
    pub criteria: Vec<CriterionSpec>,
    /// One row per scheme, one column per criterion.
    pub scores: Vec<Vec<f64>>,
}

impl DecisionMatrix {
    pub fn validate(&self) -> Result<(), McdmError> {
        if self.criteria.is_empty() {
            return Err(McdmError::NoCriteria);
        }
        if self.scores.len() != self.schemes.len() {
            return Err(McdmError::NonRectangular {
                row: self.scores.len().min(self.schemes.len()),
                found: 0,
                expected: self.criteria.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for s in &self.schemes {
            if !seen.insert(s) {
                return Err(McdmError::DuplicateScheme(s.clone()));
            }
        }
        for c in &self.criteria {
            c.validate()?;
        }
        for (row, values) in self.scores.iter().enumerate() {
            if values.len() != self.criteria.len() {
                return Err(McdmError::NonRectangular {
                    row,
                    found: values.len(),
                    expected: self.criteria.len(),
                });
            }
            if let Some(j) = values.iter().position(|v| !v.is_finite()) {
                return Err(McdmError::NonFinite {
                    scheme: self.schemes[row].clone(),
                    criterion: self.criteria[j].name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn scheme_index(&self, scheme: &str) -> Option<usize> {
        self.schemes.iter().position(|s| s == scheme)
    }

    /// Copy keeping only schemes for which `keep` returns true.
    pub fn retain_schemes(&self, mut keep: impl FnMut(&str) -> bool) -> DecisionMatrix {
        let (schemes, scores) = self
            .schemes
            .iter()
            .zip(&self.scores)
            .filter(|(s, _)| keep(s))
            .map(|(s, r)| (s.clone(), r.clone()))
            .unzip();
        DecisionMatrix {
            schemes,
            criteria: self.criteria.clone(),
            scores,
        }
    }

    fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.criteria.iter().map(|c| c.weight).sum();
        self.criteria.iter().map(|c| c.weight / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeFlow {
    pub scheme: String,
    pub positive: f64,
    pub negative: f64,
    pub net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    /// In matrix scheme order.
    pub flows: Vec<SchemeFlow>,
    /// Scheme ids, best net flow first.
    pub ranking: Vec<String>,
}

impl FlowResult {
    pub fn net(&self, scheme: &str) -> Option<f64> {
        self.flows.iter().find(|f| f.scheme == scheme).map(|f| f.net)
    }
}

/// Aggregated preference index π(a, b) for every ordered pair.
pub fn preference_matrix(matrix: &DecisionMatrix) -> Result<Vec<Vec<f64>>, McdmError> {
    matrix.validate()?;
    let w = matrix.normalized_weights();
    let n = matrix.schemes.len();
    let mut pi = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            pi[a][b] = matrix
                .criteria
                .iter()
                .enumerate()
                .map(|(j, c)| w[j] * c.preference.eval(c.advantage(matrix.scores[a][j], matrix.scores[b][j])))
                .sum::<f64>()
                .min(1.0);
        }
    }
    Ok(pi)
}

pub fn promethee2(matrix: &DecisionMatrix) -> Result<FlowResult, McdmError> {
    matrix.validate()?;
    let n = matrix.schemes.len();
    if n < 2 {
        return Err(McdmError::TooFewSchemes(n));
    }
    let pi = preference_matrix(matrix)?;
    let scale = 1.0 / (n - 1) as f64;
    let flows: Vec<SchemeFlow> = (0..n)
        .map(|a| {
            let positive = scale * (0..n).filter(|&b| b != a).map(|b| pi[a][b]).sum::<f64>();
            let negative = scale * (0..n).filter(|&b| b != a).map(|b| pi[b][a]).sum::<f64>();
            SchemeFlow {
                scheme: matrix.schemes[a].clone(),
                positive,
                negative,
                net: positive - negative,
            }
        })
        .collect();
    let ranking = rank_by_score(flows.iter().map(|f| (f.scheme.as_str(), f.net)), FLOW_TIE_TOLERANCE);
    Ok(FlowResult { flows, ranking })
}

/// Orders ids by descending score. Scores within `tolerance` of each other
/// form a tie class ordered by id.
fn rank_by_score<'a>(items: impl Iterator<Item = (&'a str, f64)>, tolerance: f64) -> Vec<String> {
    let mut items: Vec<(&str, f64)> = items.collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    // group into tie classes anchored at the best score of each class
    let mut out = Vec::with_capacity(items.len());
    let mut class: Vec<&str> = Vec::new();
    let mut anchor = f64::NAN;
    for (id, score) in items {
        if class.is_empty() || anchor - score <= tolerance {
            if class.is_empty() {
                anchor = score;
            }
            class.push(id);
        } else {
            class.sort();
            out.extend(class.drain(..).map(str::to_owned));
            anchor = score;
            class.push(id);
        }
    }
    class.sort();
    out.extend(class.into_iter().map(str::to_owned));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutrankingResult {
    pub schemes: Vec<String>,
    /// `None` on the diagonal.
    pub concordance: Vec<Vec<Option<f64>>>,
    pub discordance: Vec<Vec<Option<f64>>>,
    /// Pairs `(a, b)` with a outranking b.
    pub outranks: Vec<(String, String)>,
    pub kernel: Vec<String>,
}

impl OutrankingResult {
    fn idx(&self, s: &str) -> usize {
        self.schemes.iter().position(|x| x == s).expect("unknown scheme")
    }

    pub fn c(&self, a: &str, b: &str) -> f64 {
        self.concordance[self.idx(a)][self.idx(b)].expect("off-diagonal")
    }

    pub fn d(&self, a: &str, b: &str) -> f64 {
        self.discordance[self.idx(a)][self.idx(b)].expect("off-diagonal")
    }

    pub fn outranks(&self, a: &str, b: &str) -> bool {
        self.outranks.iter().any(|(x, y)| x == a && y == b)
    }
}

/// ELECTRE I. `a` outranks `b` when c(a, b) ≥ `concordance_threshold` and
/// d(a, b) ≤ `discordance_threshold`. Ties on a criterion count toward
/// concordance; discordance is the largest scaled advantage of `b` over `a`.
pub fn electre1(
    matrix: &DecisionMatrix,
    concordance_threshold: f64,
    discordance_threshold: f64,
) -> Result<OutrankingResult, McdmError> {
    matrix.validate()?;
    let n = matrix.schemes.len();
    if n < 2 {
        return Err(McdmError::TooFewSchemes(n));
    }
    if !(concordance_threshold > 0.0 && concordance_threshold <= 1.0) {
        return Err(McdmError::InvalidThreshold(format!(
            "concordance threshold {concordance_threshold} outside (0, 1]"
        )));
    }
    if !(discordance_threshold >= 0.0) {
        return Err(McdmError::InvalidThreshold(format!(
            "discordance threshold {discordance_threshold} is negative"
        )));
    }
    let total: f64 = matrix.criteria.iter().map(|c| c.weight).sum();
    let mut concordance = vec![vec![None; n]; n];
    let mut discordance = vec![vec![None; n]; n];
    let mut relation = vec![vec![false; n]; n];
    let mut outranks = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut agree = 0.0;
            let mut worst: f64 = 0.0;
            for (j, c) in matrix.criteria.iter().enumerate() {
                let adv = c.advantage(matrix.scores[a][j], matrix.scores[b][j]);
                if adv >= 0.0 {
                    agree += c.weight;
                }
                worst = worst.max(-adv / c.discordance_scale);
            }
            let c_ab = agree / total;
            concordance[a][b] = Some(c_ab);
            discordance[a][b] = Some(worst);
            if c_ab >= concordance_threshold && worst <= discordance_threshold {
                relation[a][b] = true;
                outranks.push((matrix.schemes[a].clone(), matrix.schemes[b].clone()));
            }
        }
    }
    let kernel = kernel(&relation)
        .into_iter()
        .map(|i| matrix.schemes[i].clone())
        .collect();
    Ok(OutrankingResult {
        schemes: matrix.schemes.clone(),
        concordance,
        discordance,
        outranks,
        kernel,
    })
}

/// Kernel of the outranking digraph after contracting strongly connected
/// components: processing components sources-first, a component joins the
/// kernel unless some kernel component outranks it. Members of kernel
/// components are returned in index order.
fn kernel(relation: &[Vec<bool>]) -> Vec<usize> {
    let n = relation.len();
    // transitive closure (reflexive)
    let mut reach: Vec<Vec<bool>> = relation.to_vec();
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if component[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &m in &members {
            component[m] = components.len();
        }
        components.push(members);
    }
    // topological order of the condensation: a component reachable from
    // fewer others comes first
    let mut order: Vec<usize> = (0..components.len()).collect();
    let upstream = |c: usize| {
        let rep = components[c][0];
        (0..n).filter(|&i| reach[i][rep] && component[i] != c).count()
    };
    order.sort_by_key(|&c| (upstream(c), components[c][0]));

    let mut in_kernel = vec![false; components.len()];
    for &c in &order {
        let beaten = components
            .iter()
            .enumerate()
            .filter(|(d, _)| *d != c && in_kernel[*d])
            .any(|(_, members)| {
                members
                    .iter()
                    .any(|&a| components[c].iter().any(|&b| relation[a][b]))
            });
        in_kernel[c] = !beaten;
    }
    let mut out: Vec<usize> = components
        .iter()
        .enumerate()
        .filter(|(c, _)| in_kernel[*c])
        .flat_map(|(_, m)| m.iter().copied())
        .collect();
    out.sort_unstable();
    out
}

fn default_ballot_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingBallot {
    pub evaluator: String,
    /// Best first.
    pub ranking: Vec<String>,
    #[serde(default = "default_ballot_weight")]
    pub weight: f64,
}

impl RankingBallot {
    pub fn new<S: Into<String>>(evaluator: impl Into<String>, ranking: impl IntoIterator<Item = S>) -> Self {
        RankingBallot {
            evaluator: evaluator.into(),
            ranking: ranking.into_iter().map(Into::into).collect(),
            weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), McdmError> {
        let invalid = |reason: &str| McdmError::InvalidBallot {
            evaluator: self.evaluator.clone(),
            reason: reason.to_owned(),
        };
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(invalid("weight must be finite and non-negative"));
        }
        if self.ranking.is_empty() {
            return Err(invalid("ranking is empty"));
        }
        let distinct: BTreeSet<&String> = self.ranking.iter().collect();
        if distinct.len() != self.ranking.len() {
            return Err(invalid("ranking lists a scheme twice"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRanking {
    /// Scheme id to Borda score.
    pub scores: BTreeMap<String, f64>,
    /// Best first.
    pub ranking: Vec<String>,
}

impl GroupRanking {
    pub fn top(&self) -> Option<&str> {
        self.ranking.first().map(String::as_str)
    }
}

/// Weighted Borda count: a scheme in position p (1-based) of m earns
/// `weight * (m - p)` from each ballot.
pub fn borda_aggregate(ballots: &[RankingBallot]) -> Result<GroupRanking, McdmError> {
    let first = ballots.first().ok_or(McdmError::NoBallots)?;
    let schemes: BTreeSet<&String> = first.ranking.iter().collect();
    let mut total_weight = 0.0;
    for b in ballots {
        b.validate()?;
        if b.ranking.iter().collect::<BTreeSet<_>>() != schemes {
            return Err(McdmError::MismatchedSchemeSets {
                evaluator: b.evaluator.clone(),
            });
        }
        total_weight += b.weight;
    }
    if total_weight <= 0.0 {
        return Err(McdmError::InvalidBallot {
            evaluator: first.evaluator.clone(),
            reason: "ballot weights sum to zero".into(),
        });
    }
    let m = schemes.len();
    let mut scores: BTreeMap<String, f64> = schemes.iter().map(|s| ((*s).clone(), 0.0)).collect();
    for b in ballots {
        for (pos, s) in b.ranking.iter().enumerate() {
            *scores.get_mut(s).expect("same scheme set") += b.weight * (m - 1 - pos) as f64;
        }
    }
    let ranking = rank_by_score(scores.iter().map(|(s, v)| (s.as_str(), *v)), 0.0);
    Ok(GroupRanking { scores, ranking })
}

pub fn flows_to_ballot(flow: &FlowResult, evaluator: impl Into<String>, weight: f64) -> RankingBallot {
    RankingBallot {
        evaluator: evaluator.into(),
        ranking: flow.ranking.clone(),
        weight,
    }
}
