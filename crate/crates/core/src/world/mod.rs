//! Bounded enumeration of snapshot interpretations ("worlds") of a model.
//!
//! A world is a finite set of individuals, each instantiating exactly one
//! identity-providing type (a kind, relator, mode or event) plus whatever
//! subtypes it is classified under, together with the dependence links
//! (mediation, participation, characterization) of its relators, events and
//! modes, the material links derived from them, and quality values.
//!
//! Worlds are returned up to isomorphism (renaming individuals of the same
//! kind) in a canonical, deterministic order.

mod comparative;
mod dot;
mod goal;
mod search;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::{Model, SpaceKind};
use crate::rules::check;

pub use comparative::{
    check_metaproperties, eval_comparative, Counterexample, MetaPropertyReport, PropertyVerdict,
};
pub use dot::{world_to_dot, worlds_to_dot};
pub use goal::{Atom, Goal};
pub use validate::validate_world;

/// A quality value: a point of an ordered space or a nominal label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Label(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Label(_) => None,
        }
    }

    pub fn parse(s: &str) -> Value {
        match s.trim().parse() {
            Ok(n) => Value::Int(n),
            Err(_) => Value::Label(s.trim().to_string()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Individual {
    pub id: String,
    /// The identity-providing type this individual instantiates.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Link {
    pub relation: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QualityValue {
    pub quality: String,
    pub bearer: String,
    pub value: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceWorld {
    pub individuals: Vec<Individual>,
    pub type_assignments: BTreeMap<String, BTreeSet<String>>,
    pub links: Vec<Link>,
    pub quality_values: Vec<QualityValue>,
}

impl InstanceWorld {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an individual; `types` need not repeat `kind`.
    pub fn add_individual<I, S>(&mut self, id: &str, kind: &str, types: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.individuals.push(Individual {
            id: id.to_string(),
            kind: kind.to_string(),
        });
        let entry = self.type_assignments.entry(id.to_string()).or_default();
        entry.insert(kind.to_string());
        entry.extend(types.into_iter().map(Into::into));
        self
    }

    pub fn add_link(&mut self, relation: &str, source: &str, target: &str) -> &mut Self {
        self.links.push(Link {
            relation: relation.to_string(),
            source: source.to_string(),
            target: target.to_string(),
        });
        self
    }

    pub fn set_quality(&mut self, quality: &str, bearer: &str, value: Value) -> &mut Self {
        self.quality_values
            .retain(|q| !(q.quality == quality && q.bearer == bearer));
        self.quality_values.push(QualityValue {
            quality: quality.to_string(),
            bearer: bearer.to_string(),
            value,
        });
        self
    }

    pub fn is_instance(&self, id: &str, classifier: &str) -> bool {
        self.type_assignments
            .get(id)
            .is_some_and(|ts| ts.contains(classifier))
    }

    pub fn instances_of<'a>(&'a self, classifier: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.individuals
            .iter()
            .map(|i| i.id.as_str())
            .filter(move |id| self.is_instance(id, classifier))
    }

    pub fn links_of<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.iter().filter(move |l| l.relation == relation)
    }

    pub fn has_link(&self, relation: &str, source: &str, target: &str) -> bool {
        self.links
            .iter()
            .any(|l| l.relation == relation && l.source == source && l.target == target)
    }

    pub fn quality_value(&self, quality: &str, bearer: &str) -> Option<&Value> {
        self.quality_values
            .iter()
            .find(|q| q.quality == quality && q.bearer == bearer)
            .map(|q| &q.value)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("worlds always serialize")
    }
}

/// Bounds for world enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    /// Maximum number of individuals per classifier. For identity-providing
    /// types this is the number of individuals tried; for other types it caps
    /// the size of their extension.
    pub per_classifier: BTreeMap<String, usize>,
    /// Count used for identity-providing types absent from `per_classifier`.
    pub default_count: usize,
    /// Values tried for each quality; absent qualities use [`Scope::DEFAULT_VALUES`]
    /// clipped to their space, or every label of a nominal space.
    pub quality_values: BTreeMap<String, Vec<Value>>,
    pub world_limit: usize,
}

impl Scope {
    pub const DEFAULT_COUNT: usize = 2;
    pub const DEFAULT_VALUES: [i64; 3] = [0, 1, 2];
    pub const DEFAULT_LIMIT: usize = 100;

    pub fn uniform(count: usize) -> Self {
        Scope {
            default_count: count,
            ..Default::default()
        }
    }

    pub fn with(mut self, classifier: &str, count: usize) -> Self {
        self.per_classifier.insert(classifier.to_string(), count);
        self
    }

    pub fn with_values<I: IntoIterator<Item = i64>>(mut self, quality: &str, values: I) -> Self {
        self.quality_values
            .insert(quality.to_string(), values.into_iter().map(Value::Int).collect());
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.world_limit = limit;
        self
    }

    pub fn unlimited(self) -> Self {
        self.with_limit(usize::MAX)
    }

    pub fn count_for(&self, classifier: &str) -> usize {
        self.per_classifier
            .get(classifier)
            .copied()
            .unwrap_or(self.default_count)
    }

    /// Values to try for `quality` in `model`.
    pub fn values_for(&self, model: &Model, quality: &str) -> Vec<Value> {
        if let Some(vs) = self.quality_values.get(quality) {
            return vs.clone();
        }
        match model.space(quality).map(|s| &s.kind) {
            Some(SpaceKind::Ordered { lo, hi }) => {
                let vs: Vec<Value> = Self::DEFAULT_VALUES
                    .iter()
                    .filter(|v| (*lo..=*hi).contains(*v))
                    .map(|v| Value::Int(*v))
                    .collect();
                if vs.is_empty() {
                    (*lo..=(*hi).min(lo.saturating_add(2))).map(Value::Int).collect()
                } else {
                    vs
                }
            }
            Some(SpaceKind::Nominal(labels)) => {
                labels.iter().cloned().map(Value::Label).collect()
            }
            None => Self::DEFAULT_VALUES.iter().map(|v| Value::Int(*v)).collect(),
        }
    }
}

impl Default for Scope {
    fn default() -> Self {
        Scope {
            per_classifier: BTreeMap::new(),
            default_count: Self::DEFAULT_COUNT,
            quality_values: BTreeMap::new(),
            world_limit: Self::DEFAULT_LIMIT,
        }
    }
}

/// Hard caps protecting against runaway searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_per_classifier: usize,
    pub max_nodes: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_per_classifier: 8,
            max_nodes: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinderError {
    #[error("model has {} error diagnostic(s); fix them before simulating", .0.iter().filter(|d| d.is_error()).count())]
    IllFormedModel(Vec<Diagnostic>),
    #[error("scope too large: {0}")]
    ScopeTooLarge(String),
    #[error("invalid scope: {0}")]
    InvalidScope(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("invalid goal: {0}")]
    InvalidGoal(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` is not a comparative or internal relation over an ordered quality")]
    NotOrdered(String),
    #[error("`{bearer}` has no value for quality `{quality}`")]
    MissingQualityValue { quality: String, bearer: String },
}

fn ensure_well_formed(model: &Model) -> Result<(), FinderError> {
    let diags = check(model);
    if has_errors(&diags) {
        return Err(FinderError::IllFormedModel(diags));
    }
    Ok(())
}

fn validate_scope(model: &Model, scope: &Scope) -> Result<(), FinderError> {
    if scope.world_limit == 0 {
        return Err(FinderError::InvalidScope("world limit must be at least 1".into()));
    }
    for name in scope.per_classifier.keys() {
        if model.classifier(name).is_none() {
            return Err(FinderError::InvalidScope(format!("unknown classifier `{name}`")));
        }
    }
    for (q, values) in &scope.quality_values {
        let Some(space) = model.space(q) else {
            if model.classifier(q).is_none() {
                return Err(FinderError::InvalidScope(format!("unknown quality `{q}`")));
            }
            continue;
        };
        for v in values {
            let ok = match (&space.kind, v) {
                (SpaceKind::Ordered { lo, hi }, Value::Int(n)) => (*lo..=*hi).contains(n),
                (SpaceKind::Nominal(labels), Value::Label(l)) => labels.contains(l),
                _ => false,
            };
            if !ok {
                return Err(FinderError::InvalidScope(format!(
                    "value {v} is outside the space of `{q}`"
                )));
            }
        }
    }
    Ok(())
}

/// Every non-isomorphic world within `scope`, in canonical order, ignoring
/// the world limit.
pub fn all_worlds(
    model: &Model,
    scope: &Scope,
    limits: SearchLimits,
) -> Result<Vec<InstanceWorld>, FinderError> {
    ensure_well_formed(model)?;
    validate_scope(model, scope)?;
    search::enumerate(model, scope, limits)
}

/// Up to `scope.world_limit` pairwise non-isomorphic worlds, in canonical
/// order. Exhaustive when the total count fits in the limit.
pub fn enumerate_worlds(model: &Model, scope: &Scope) -> Result<Vec<InstanceWorld>, FinderError> {
    let mut worlds = all_worlds(model, scope, SearchLimits::default())?;
    worlds.truncate(scope.world_limit);
    Ok(worlds)
}

/// The canonically first world in scope satisfying `goal`.
pub fn find_witness(
    model: &Model,
    scope: &Scope,
    goal: &Goal,
) -> Result<Option<InstanceWorld>, FinderError> {
    goal.validate(model)?;
    let worlds = all_worlds(model, scope, SearchLimits::default())?;
    Ok(worlds.into_iter().find(|w| goal.holds(w)))
}
