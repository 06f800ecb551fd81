//! In-memory representation of a conceptual model and the taxonomy queries
//! every other module relies on.
//!
//! A [`Model`] is built once through a [`ModelBuilder`], which enforces the
//! structural invariants (names resolve, the specialization graph is acyclic,
//! relation ends carry the right kind of source). Semantic constraints such as
//! "every role is relationally dependent" are *not* enforced here; they are
//! diagnosed by [`crate::rules`] so that malformed models can still be loaded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Position of a declaration in its source text. Line and column are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: u32,
    #[serde(rename = "col")]
    pub column: u32,
    #[serde(rename = "len")]
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        SourceSpan {
            line: line.max(1),
            column: column.max(1),
            length,
        }
    }
}

impl Default for SourceSpan {
    fn default() -> Self {
        SourceSpan::new(1, 1, 0)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rigidity {
    Rigid,
    AntiRigid,
}

/// Broad ontological category of a type. Types in different categories can
/// never be identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TopCategory {
    Endurant,
    Relator,
    Event,
    Aspect,
}

impl fmt::Display for TopCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopCategory::Endurant => "endurant type",
            TopCategory::Relator => "relator",
            TopCategory::Event => "event",
            TopCategory::Aspect => "mode/quality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stereotype {
    Kind,
    Subkind,
    Phase,
    Role,
    RoleMixin,
    HistoricalRole,
    HistoricalRoleMixin,
    Category,
    Relator,
    Mode,
    Quality,
    Event,
}

impl Serialize for Stereotype {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.keyword())
    }
}

impl Stereotype {
    pub const ALL: [Stereotype; 12] = [
        Stereotype::Kind,
        Stereotype::Subkind,
        Stereotype::Phase,
        Stereotype::Role,
        Stereotype::RoleMixin,
        Stereotype::HistoricalRole,
        Stereotype::HistoricalRoleMixin,
        Stereotype::Category,
        Stereotype::Relator,
        Stereotype::Mode,
        Stereotype::Quality,
        Stereotype::Event,
    ];

    /// DSL keyword, also used as the JSON tag.
    pub fn keyword(self) -> &'static str {
        match self {
            Stereotype::Kind => "kind",
            Stereotype::Subkind => "subkind",
            Stereotype::Phase => "phase",
            Stereotype::Role => "role",
            Stereotype::RoleMixin => "roleMixin",
            Stereotype::HistoricalRole => "historicalRole",
            Stereotype::HistoricalRoleMixin => "historicalRoleMixin",
            Stereotype::Category => "category",
            Stereotype::Relator => "relator",
            Stereotype::Mode => "mode",
            Stereotype::Quality => "quality",
            Stereotype::Event => "event",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Stereotype> {
        Stereotype::ALL.into_iter().find(|st| st.keyword() == s)
    }

    pub fn rigidity(self) -> Rigidity {
        match self {
            Stereotype::Phase
            | Stereotype::Role
            | Stereotype::RoleMixin
            | Stereotype::HistoricalRole
            | Stereotype::HistoricalRoleMixin => Rigidity::AntiRigid,
            _ => Rigidity::Rigid,
        }
    }

    /// Sortals classify individuals of a single kind.
    pub fn is_sortal(self) -> bool {
        matches!(
            self,
            Stereotype::Kind
                | Stereotype::Subkind
                | Stereotype::Phase
                | Stereotype::Role
                | Stereotype::HistoricalRole
        )
    }

    pub fn is_non_sortal(self) -> bool {
        matches!(
            self,
            Stereotype::Category | Stereotype::RoleMixin | Stereotype::HistoricalRoleMixin
        )
    }

    /// Types whose instances are classified through a relator or an event.
    pub fn is_relationally_dependent(self) -> bool {
        matches!(
            self,
            Stereotype::Role
                | Stereotype::RoleMixin
                | Stereotype::HistoricalRole
                | Stereotype::HistoricalRoleMixin
        )
    }

    pub fn is_historical(self) -> bool {
        matches!(
            self,
            Stereotype::HistoricalRole | Stereotype::HistoricalRoleMixin
        )
    }

    /// Stereotypes that supply identity to their instances directly.
    pub fn provides_identity(self) -> bool {
        matches!(
            self,
            Stereotype::Kind | Stereotype::Relator | Stereotype::Mode | Stereotype::Event
        )
    }

    pub fn top_category(self) -> TopCategory {
        match self {
            Stereotype::Relator => TopCategory::Relator,
            Stereotype::Event => TopCategory::Event,
            Stereotype::Mode | Stereotype::Quality => TopCategory::Aspect,
            _ => TopCategory::Endurant,
        }
    }
}

impl fmt::Display for Stereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Rigidity as a total function of the stereotype.
pub fn rigidity(c: &Classifier) -> Rigidity {
    c.stereotype.rigidity()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classifier {
    pub name: String,
    pub stereotype: Stereotype,
    pub parents: BTreeSet<String>,
    pub is_abstract: bool,
    pub span: SourceSpan,
}

impl Classifier {
    pub fn new(name: impl Into<String>, stereotype: Stereotype) -> Self {
        Classifier {
            name: name.into(),
            stereotype,
            parents: BTreeSet::new(),
            is_abstract: false,
            span: SourceSpan::default(),
        }
    }

    pub fn with_parents<I, S>(mut self, parents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.parents = parents.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = span;
        self
    }
}

/// Cardinality bounds; `max == None` is unbounded and rendered as `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiplicity {
    pub min: u32,
    pub max: Option<u32>,
}

impl Multiplicity {
    pub const ONE: Multiplicity = Multiplicity {
        min: 1,
        max: Some(1),
    };
    pub const ONE_OR_MORE: Multiplicity = Multiplicity { min: 1, max: None };
    pub const ANY: Multiplicity = Multiplicity { min: 0, max: None };

    pub fn new(min: u32, max: Option<u32>) -> Self {
        Multiplicity { min, max }
    }

    pub fn bounded(min: u32, max: u32) -> Self {
        Multiplicity {
            min,
            max: Some(max),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self.max {
            Some(max) => max >= 1 && self.min <= max,
            None => true,
        }
    }

    pub fn contains(&self, n: usize) -> bool {
        n >= self.min as usize && self.max.is_none_or(|m| n <= m as usize)
    }

    /// Parses `"1..*"` or `"0..3"` (the bracket-less form used on the command line).
    pub fn parse(s: &str) -> Option<Multiplicity> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        let (lo, hi) = s.split_once("..")?;
        let min = lo.trim().parse().ok()?;
        let max = match hi.trim() {
            "*" => None,
            other => Some(other.parse().ok()?),
        };
        let m = Multiplicity { min, max };
        m.is_valid().then_some(m)
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Some(max) => write!(f, "[{}..{}]", self.min, max),
            None => write!(f, "[{}..*]", self.min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationStereotype {
    Material,
    Comparative,
    Internal,
    Mediation,
    Characterization,
    Participation,
}

impl RelationStereotype {
    pub const ALL: [RelationStereotype; 6] = [
        RelationStereotype::Material,
        RelationStereotype::Comparative,
        RelationStereotype::Internal,
        RelationStereotype::Mediation,
        RelationStereotype::Characterization,
        RelationStereotype::Participation,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            RelationStereotype::Material => "material",
            RelationStereotype::Comparative => "comparative",
            RelationStereotype::Internal => "internal",
            RelationStereotype::Mediation => "mediation",
            RelationStereotype::Characterization => "characterization",
            RelationStereotype::Participation => "participation",
        }
    }

    pub fn from_keyword(s: &str) -> Option<RelationStereotype> {
        RelationStereotype::ALL
            .into_iter()
            .find(|st| st.keyword() == s)
    }
}

impl fmt::Display for RelationStereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Ordering used by a comparative relation: `Desc` relates `x` to `y` when
/// `x` carries the greater value. The `*OrEqual` variants admit ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Asc,
    Desc,
    AscOrEqual,
    DescOrEqual,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Asc,
        Direction::Desc,
        Direction::AscOrEqual,
        Direction::DescOrEqual,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
            Direction::AscOrEqual => "ascOrEqual",
            Direction::DescOrEqual => "descOrEqual",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.keyword() == s)
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Direction::Asc | Direction::Desc)
    }

    /// Whether a value `a` stands in this ordering to `b`.
    pub fn relates(self, a: i64, b: i64) -> bool {
        match self {
            Direction::Asc => a < b,
            Direction::Desc => a > b,
            Direction::AscOrEqual => a <= b,
            Direction::DescOrEqual => a >= b,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub relator: String,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityRef {
    pub quality: String,
    pub direction: Direction,
}

/// A binary relation. `source_mult` is written next to the source end: it
/// bounds how many sources each target relates to; `target_mult` bounds how
/// many targets each source relates to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub stereotype: RelationStereotype,
    pub source: String,
    pub target: String,
    pub source_mult: Multiplicity,
    pub target_mult: Multiplicity,
    pub derived_from: Option<Derivation>,
    pub via_quality: Option<QualityRef>,
    pub span: SourceSpan,
}

impl RelationDecl {
    pub fn new(
        name: impl Into<String>,
        stereotype: RelationStereotype,
        source: impl Into<String>,
        source_mult: Multiplicity,
        target_mult: Multiplicity,
        target: impl Into<String>,
    ) -> Self {
        RelationDecl {
            name: name.into(),
            stereotype,
            source: source.into(),
            target: target.into(),
            source_mult,
            target_mult,
            derived_from: None,
            via_quality: None,
            span: SourceSpan::default(),
        }
    }

    /// Relations whose instances are explicit links from a dependent
    /// individual (relator, event, mode) to what it depends on.
    pub fn is_dependence(&self) -> bool {
        matches!(
            self.stereotype,
            RelationStereotype::Mediation
                | RelationStereotype::Participation
                | RelationStereotype::Characterization
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceKind {
    Ordered { lo: i64, hi: i64 },
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualitySpace {
    pub owner: String,
    pub kind: SpaceKind,
    pub span: SourceSpan,
}

impl QualitySpace {
    pub fn ordered(owner: impl Into<String>, lo: i64, hi: i64) -> Self {
        QualitySpace {
            owner: owner.into(),
            kind: SpaceKind::Ordered { lo, hi },
            span: SourceSpan::default(),
        }
    }

    pub fn nominal<I, S>(owner: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        QualitySpace {
            owner: owner.into(),
            kind: SpaceKind::Nominal(labels.into_iter().map(Into::into).collect()),
            span: SourceSpan::default(),
        }
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self.kind, SpaceKind::Ordered { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizationSet {
    pub name: String,
    pub general: String,
    pub specifics: BTreeSet<String>,
    pub is_disjoint: bool,
    pub is_complete: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown classifier `{0}`")]
    UnknownClassifier(String),
    #[error("`{0}` is not a sortal and has no ultimate kind")]
    NotSortal(String),
    #[error("`{0}` specializes no kind")]
    NoKind(String),
    #[error("`{name}` specializes several kinds: {}", kinds.join(", "))]
    AmbiguousKind { name: String, kinds: Vec<String> },
}

/// A structural defect found while assembling a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralError {
    pub span: SourceSpan,
    pub message: String,
}

/// An immutable, fully resolved conceptual model. Declarations are stored
/// keyed by name, so two models with the same declarations compare equal
/// regardless of the order they were written in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    name: String,
    span: SourceSpan,
    classifiers: BTreeMap<String, Classifier>,
    relations: BTreeMap<String, RelationDecl>,
    generalization_sets: BTreeMap<String, GeneralizationSet>,
    spaces: BTreeMap<String, QualitySpace>,
}

impl Model {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn span(&self) -> SourceSpan {
        self.span
    }

    pub fn classifiers(&self) -> impl Iterator<Item = &Classifier> {
        self.classifiers.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationDecl> {
        self.relations.values()
    }

    pub fn generalization_sets(&self) -> impl Iterator<Item = &GeneralizationSet> {
        self.generalization_sets.values()
    }

    pub fn spaces(&self) -> impl Iterator<Item = &QualitySpace> {
        self.spaces.values()
    }

    pub fn classifier(&self, name: &str) -> Option<&Classifier> {
        self.classifiers.get(name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.get(name)
    }

    pub fn space(&self, quality: &str) -> Option<&QualitySpace> {
        self.spaces.get(quality)
    }

    pub fn stereotype(&self, name: &str) -> Option<Stereotype> {
        self.classifiers.get(name).map(|c| c.stereotype)
    }

    /// Reopens the model for editing.
    pub fn to_builder(&self) -> ModelBuilder {
        ModelBuilder {
            name: self.name.clone(),
            span: self.span,
            classifiers: self.classifiers.values().cloned().collect(),
            relations: self.relations.values().cloned().collect(),
            generalization_sets: self.generalization_sets.values().cloned().collect(),
            spaces: self.spaces.values().cloned().collect(),
        }
    }

    /// Strict ancestors of `name` (transitive parents, excluding itself).
    pub fn ancestors(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = vec![name];
        while let Some(cur) = stack.pop() {
            if let Some(c) = self.classifiers.get(cur) {
                for p in &c.parents {
                    if out.insert(p.clone()) {
                        stack.push(p);
                    }
                }
            }
        }
        out
    }

    /// Strict descendants of `name`.
    pub fn descendants(&self, name: &str) -> BTreeSet<String> {
        self.classifiers
            .keys()
            .filter(|c| c.as_str() != name && self.ancestors(c).contains(name))
            .cloned()
            .collect()
    }

    /// `sub` equals `sup` or specializes it transitively.
    pub fn specializes(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.ancestors(sub).contains(sup)
    }

    /// Equal, ancestor or descendant.
    pub fn taxonomically_related(&self, a: &str, b: &str) -> bool {
        self.specializes(a, b) || self.specializes(b, a)
    }

    /// Kind classifiers reachable from `name` through parents, stopping at
    /// the first kind on each path.
    fn kind_ancestors(&self, name: &str) -> BTreeSet<String> {
        let mut kinds = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(cur) = stack.pop() {
            if !seen.insert(cur.clone()) {
                continue;
            }
            let Some(c) = self.classifiers.get(&cur) else {
                continue;
            };
            if c.stereotype == Stereotype::Kind {
                kinds.insert(cur);
                continue;
            }
            stack.extend(c.parents.iter().cloned());
        }
        kinds
    }

    /// The unique kind supplying identity to instances of the sortal `name`.
    pub fn ultimate_kind(&self, name: &str) -> Result<String, TaxonomyError> {
        let c = self
            .classifiers
            .get(name)
            .ok_or_else(|| TaxonomyError::UnknownClassifier(name.to_string()))?;
        if !c.stereotype.is_sortal() {
            return Err(TaxonomyError::NotSortal(name.to_string()));
        }
        let kinds = self.kind_ancestors(name);
        match kinds.len() {
            0 => Err(TaxonomyError::NoKind(name.to_string())),
            1 => Ok(kinds.into_iter().next().unwrap()),
            _ => Err(TaxonomyError::AmbiguousKind {
                name: name.to_string(),
                kinds: kinds.into_iter().collect(),
            }),
        }
    }

    /// Identity-providing roots whose instances may instantiate `name`.
    ///
    /// For a sortal this is its ultimate kind; for a non-sortal, the kinds of
    /// every sortal specializing it; for relators, modes and events, the
    /// topmost ancestor of the same stereotype; for qualities, nothing.
    pub fn possible_roots(&self, name: &str) -> BTreeSet<String> {
        let Some(c) = self.classifiers.get(name) else {
            return BTreeSet::new();
        };
        match c.stereotype {
            s if s.is_sortal() => self.ultimate_kind(name).into_iter().collect(),
            s if s.is_non_sortal() => self
                .descendants(name)
                .iter()
                .filter(|d| self.stereotype(d).is_some_and(Stereotype::is_sortal))
                .filter_map(|d| self.ultimate_kind(d).ok())
                .collect(),
            Stereotype::Quality => BTreeSet::new(),
            s => {
                let mut roots: BTreeSet<String> = self
                    .ancestors(name)
                    .into_iter()
                    .filter(|a| {
                        self.stereotype(a) == Some(s) && self.classifiers[a].parents.is_empty()
                    })
                    .collect();
                if c.parents.is_empty() {
                    roots.insert(name.to_string());
                }
                roots
            }
        }
    }

    /// Relations of a given stereotype whose target is `name`.
    pub fn relations_targeting<'a>(
        &'a self,
        name: &'a str,
        stereotype: RelationStereotype,
    ) -> impl Iterator<Item = &'a RelationDecl> + 'a {
        self.relations
            .values()
            .filter(move |r| r.stereotype == stereotype && r.target == name)
    }
}

/// Accumulates declarations and validates them into a [`Model`].
#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    name: String,
    span: SourceSpan,
    classifiers: Vec<Classifier>,
    relations: Vec<RelationDecl>,
    generalization_sets: Vec<GeneralizationSet>,
    spaces: Vec<QualitySpace>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ModelBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn span(mut self, span: SourceSpan) -> Self {
        self.span = span;
        self
    }

    pub fn classifier(mut self, c: Classifier) -> Self {
        self.classifiers.push(c);
        self
    }

    pub fn relation(mut self, r: RelationDecl) -> Self {
        self.relations.push(r);
        self
    }

    pub fn generalization_set(mut self, g: GeneralizationSet) -> Self {
        self.generalization_sets.push(g);
        self
    }

    pub fn space(mut self, s: QualitySpace) -> Self {
        self.spaces.push(s);
        self
    }

    pub fn push_classifier(&mut self, c: Classifier) {
        self.classifiers.push(c);
    }

    pub fn push_relation(&mut self, r: RelationDecl) {
        self.relations.push(r);
    }

    pub fn push_generalization_set(&mut self, g: GeneralizationSet) {
        self.generalization_sets.push(g);
    }

    pub fn push_space(&mut self, s: QualitySpace) {
        self.spaces.push(s);
    }

    pub fn set_name(&mut self, name: impl Into<String>, span: SourceSpan) {
        self.name = name.into();
        self.span = span;
    }

    /// Removes a relation by name; returns whether it was present.
    pub fn remove_relation(&mut self, name: &str) -> bool {
        let before = self.relations.len();
        self.relations.retain(|r| r.name != name);
        before != self.relations.len()
    }

    pub fn relation_mut(&mut self, name: &str) -> Option<&mut RelationDecl> {
        self.relations.iter_mut().find(|r| r.name == name)
    }

    pub fn classifier_mut(&mut self, name: &str) -> Option<&mut Classifier> {
        self.classifiers.iter_mut().find(|c| c.name == name)
    }

    pub fn remove_classifier(&mut self, name: &str) -> bool {
        let before = self.classifiers.len();
        self.classifiers.retain(|c| c.name != name);
        before != self.classifiers.len()
    }

    pub fn space_mut(&mut self, owner: &str) -> Option<&mut QualitySpace> {
        self.spaces.iter_mut().find(|s| s.owner == owner)
    }

    pub fn build(self) -> Result<Model, Vec<StructuralError>> {
        let mut errors = Vec::new();
        let mut err = |span: SourceSpan, message: String| {
            errors.push(StructuralError { span, message });
        };

        if !is_identifier(&self.name) {
            err(self.span, format!("invalid model name `{}`", self.name));
        }

        let mut classifiers: BTreeMap<String, Classifier> = BTreeMap::new();
        for c in self.classifiers {
            if !is_identifier(&c.name) {
                err(c.span, format!("invalid identifier `{}`", c.name));
            }
            if classifiers.contains_key(&c.name) {
                err(c.span, format!("duplicate classifier `{}`", c.name));
                continue;
            }
            classifiers.insert(c.name.clone(), c);
        }

        for c in classifiers.values() {
            for p in &c.parents {
                if p == &c.name {
                    err(c.span, format!("`{}` cannot specialize itself", c.name));
                } else if !classifiers.contains_key(p) {
                    err(
                        c.span,
                        format!("`{}` specializes undeclared classifier `{}`", c.name, p),
                    );
                }
            }
        }

        // Cycle detection over the parent graph (three-colour DFS).
        {
            #[derive(Clone, Copy, PartialEq)]
            enum Mark {
                Open,
                Done,
            }
            let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
            let mut reported = BTreeSet::new();
            for start in classifiers.keys() {
                if marks.contains_key(start.as_str()) {
                    continue;
                }
                let mut stack: Vec<(&str, Vec<&str>)> = vec![(
                    start,
                    classifiers[start].parents.iter().map(String::as_str).collect(),
                )];
                marks.insert(start, Mark::Open);
                while let Some((node, pending)) = stack.last_mut() {
                    let node = *node;
                    match pending.pop() {
                        Some(p) if p != node && classifiers.contains_key(p) => {
                            match marks.get(p) {
                                Some(Mark::Open) => {
                                    if reported.insert(p) {
                                        err(
                                            classifiers[p].span,
                                            format!("specialization cycle through `{p}`"),
                                        );
                                    }
                                }
                                Some(Mark::Done) => {}
                                None => {
                                    marks.insert(p, Mark::Open);
                                    stack.push((
                                        p,
                                        classifiers[p].parents.iter().map(String::as_str).collect(),
                                    ));
                                }
                            }
                        }
                        Some(_) => {}
                        None => {
                            marks.insert(node, Mark::Done);
                            stack.pop();
                        }
                    }
                }
            }
        }

        let mut relations: BTreeMap<String, RelationDecl> = BTreeMap::new();
        for r in self.relations {
            if !is_identifier(&r.name) {
                err(r.span, format!("invalid identifier `{}`", r.name));
            }
            if relations.contains_key(&r.name) || classifiers.contains_key(&r.name) {
                err(r.span, format!("duplicate declaration `{}`", r.name));
                continue;
            }
            relations.insert(r.name.clone(), r);
        }

        for r in relations.values() {
            for end in [&r.source, &r.target] {
                if !classifiers.contains_key(end) {
                    err(
                        r.span,
                        format!("relation `{}` refers to undeclared classifier `{}`", r.name, end),
                    );
                }
            }
            for m in [r.source_mult, r.target_mult] {
                if !m.is_valid() {
                    err(r.span, format!("invalid multiplicity {m} on `{}`", r.name));
                }
            }
            if let Some(d) = &r.derived_from {
                if r.stereotype != RelationStereotype::Material {
                    err(
                        r.span,
                        format!("`derivedFrom` is only allowed on material relations (`{}`)", r.name),
                    );
                }
                if !classifiers.contains_key(&d.relator) {
                    err(
                        r.span,
                        format!("`{}` is derived from undeclared `{}`", r.name, d.relator),
                    );
                }
                if !d.multiplicity.is_valid() {
                    err(r.span, format!("invalid derivation multiplicity on `{}`", r.name));
                }
            }
            match (&r.via_quality, r.stereotype) {
                (Some(_), s) if s != RelationStereotype::Comparative => err(
                    r.span,
                    format!("`via` is only allowed on comparative relations (`{}`)", r.name),
                ),
                (Some(q), _) if !classifiers.contains_key(&q.quality) => err(
                    r.span,
                    format!("`{}` is grounded in undeclared quality `{}`", r.name, q.quality),
                ),
                _ => {}
            }
            if r.stereotype == RelationStereotype::Comparative
                && (r.source_mult != Multiplicity::ANY || r.target_mult != Multiplicity::ANY)
            {
                err(
                    r.span,
                    format!("comparative relation `{}` cannot carry multiplicities", r.name),
                );
            }
            let source = classifiers.get(&r.source).map(|c| c.stereotype);
            let required: Option<(&[Stereotype], &str)> = match r.stereotype {
                RelationStereotype::Mediation => Some((&[Stereotype::Relator], "a relator")),
                RelationStereotype::Characterization => {
                    Some((&[Stereotype::Mode, Stereotype::Quality], "a mode or quality"))
                }
                RelationStereotype::Participation => Some((&[Stereotype::Event], "an event")),
                _ => None,
            };
            if let (Some((allowed, what)), Some(st)) = (required, source) {
                if !allowed.contains(&st) {
                    err(
                        r.span,
                        format!(
                            "{} `{}` must have {what} as source, found {st} `{}`",
                            r.stereotype, r.name, r.source
                        ),
                    );
                }
            }
        }

        let mut spaces: BTreeMap<String, QualitySpace> = BTreeMap::new();
        for s in self.spaces {
            match classifiers.get(&s.owner) {
                None => err(s.span, format!("space for undeclared quality `{}`", s.owner)),
                Some(c) if c.stereotype != Stereotype::Quality => err(
                    s.span,
                    format!("space owner `{}` is a {}, not a quality", s.owner, c.stereotype),
                ),
                _ => {}
            }
            match &s.kind {
                SpaceKind::Ordered { lo, hi } if lo > hi => {
                    err(s.span, format!("empty ordered space {lo}..{hi}"))
                }
                SpaceKind::Nominal(labels) => {
                    let distinct: BTreeSet<_> = labels.iter().collect();
                    if labels.is_empty() {
                        err(s.span, "nominal space has no labels".to_string());
                    } else if distinct.len() != labels.len() {
                        err(s.span, "nominal space repeats a label".to_string());
                    }
                    if let Some(bad) = labels.iter().find(|l| !is_identifier(l)) {
                        err(s.span, format!("invalid label `{bad}`"));
                    }
                }
                _ => {}
            }
            if spaces.contains_key(&s.owner) {
                err(s.span, format!("second space declared for `{}`", s.owner));
                continue;
            }
            spaces.insert(s.owner.clone(), s);
        }

        let mut generalization_sets: BTreeMap<String, GeneralizationSet> = BTreeMap::new();
        for g in self.generalization_sets {
            if !is_identifier(&g.name) {
                err(g.span, format!("invalid identifier `{}`", g.name));
            }
            if generalization_sets.contains_key(&g.name) {
                err(g.span, format!("duplicate generalization set `{}`", g.name));
                continue;
            }
            generalization_sets.insert(g.name.clone(), g);
        }

        let partial = Model {
            name: self.name,
            span: self.span,
            classifiers,
            relations,
            generalization_sets: BTreeMap::new(),
            spaces,
        };
        for g in generalization_sets.values() {
            if !partial.classifiers.contains_key(&g.general) {
                err(g.span, format!("genset `{}` has undeclared general `{}`", g.name, g.general));
            }
            if g.specifics.len() < 2 {
                err(g.span, format!("genset `{}` needs at least two specifics", g.name));
            }
            for s in &g.specifics {
                if !partial.classifiers.contains_key(s) {
                    err(g.span, format!("genset `{}` has undeclared specific `{s}`", g.name));
                } else if !partial.ancestors(s).contains(&g.general) {
                    err(
                        g.span,
                        format!("`{s}` does not specialize `{}` (genset `{}`)", g.general, g.name),
                    );
                }
            }
        }

        if errors.is_empty() {
            Ok(Model {
                generalization_sets,
                ..partial
            })
        } else {
            errors.sort_by_key(|e| e.span);
            Err(errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person_model() -> Model {
        ModelBuilder::new("M")
            .classifier(Classifier::new("Person", Stereotype::Kind))
            .classifier(Classifier::new("Organization", Stereotype::Kind))
            .classifier(
                Classifier::new("UnhealthyPerson", Stereotype::Phase).with_parents(["Person"]),
            )
            .classifier(
                Classifier::new("Patient", Stereotype::Role).with_parents(["UnhealthyPerson"]),
            )
            .classifier(
                Classifier::new("Confused", Stereotype::Role)
                    .with_parents(["Person", "Organization"]),
            )
            .classifier(Classifier::new("Stray", Stereotype::Subkind))
            .classifier(Classifier::new("Provider", Stereotype::RoleMixin))
            .build()
            .unwrap()
    }

    #[test]
    fn ultimate_kind_walks_phases_and_roles() {
        let m = person_model();
        assert_eq!(m.ultimate_kind("Patient").unwrap(), "Person");
        assert_eq!(m.ultimate_kind("Person").unwrap(), "Person");
    }

    #[test]
    fn ultimate_kind_errors() {
        let m = person_model();
        assert!(matches!(
            m.ultimate_kind("Confused"),
            Err(TaxonomyError::AmbiguousKind { .. })
        ));
        assert_eq!(
            m.ultimate_kind("Stray"),
            Err(TaxonomyError::NoKind("Stray".into()))
        );
        assert_eq!(
            m.ultimate_kind("Provider"),
            Err(TaxonomyError::NotSortal("Provider".into()))
        );
        assert!(matches!(
            m.ultimate_kind("Nobody"),
            Err(TaxonomyError::UnknownClassifier(_))
        ));
    }

    #[test]
    fn rigidity_table() {
        assert_eq!(Stereotype::Phase.rigidity(), Rigidity::AntiRigid);
        assert_eq!(Stereotype::Subkind.rigidity(), Rigidity::Rigid);
        assert_eq!(Stereotype::Relator.rigidity(), Rigidity::Rigid);
        let rigid = Stereotype::ALL
            .iter()
            .filter(|s| s.rigidity() == Rigidity::Rigid)
            .count();
        assert_eq!(rigid, 7);
    }

    #[test]
    fn cycles_are_rejected() {
        let errs = ModelBuilder::new("M")
            .classifier(Classifier::new("A", Stereotype::Kind).with_parents(["B"]))
            .classifier(Classifier::new("B", Stereotype::Subkind).with_parents(["A"]))
            .build()
            .unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("cycle")));
    }

    #[test]
    fn multiplicity_parse_and_display() {
        assert_eq!(Multiplicity::parse("1..*"), Some(Multiplicity::ONE_OR_MORE));
        assert_eq!(Multiplicity::parse("[0..3]"), Some(Multiplicity::bounded(0, 3)));
        assert_eq!(Multiplicity::parse("3..1"), None);
        assert_eq!(Multiplicity::parse("0..0"), None);
        assert_eq!(Multiplicity::ONE_OR_MORE.to_string(), "[1..*]");
    }

    #[test]
    fn mediation_requires_relator_source() {
        let errs = ModelBuilder::new("M")
            .classifier(Classifier::new("Person", Stereotype::Kind))
            .relation(RelationDecl::new(
                "m",
                RelationStereotype::Mediation,
                "Person",
                Multiplicity::ONE,
                Multiplicity::ONE,
                "Person",
            ))
            .build()
            .unwrap_err();
        assert!(errs[0].message.contains("must have a relator"));
    }

    #[test]
    fn possible_roots_of_mixin() {
        let m = ModelBuilder::new("M")
            .classifier(Classifier::new("Person", Stereotype::Kind))
            .classifier(Classifier::new("Organization", Stereotype::Kind))
            .classifier(Classifier::new("Provider", Stereotype::RoleMixin))
            .classifier(
                Classifier::new("A", Stereotype::Role).with_parents(["Person", "Provider"]),
            )
            .classifier(
                Classifier::new("B", Stereotype::Role).with_parents(["Organization", "Provider"]),
            )
            .build()
            .unwrap();
        let roots: Vec<_> = m.possible_roots("Provider").into_iter().collect();
        assert_eq!(roots, ["Organization", "Person"]);
    }
}
