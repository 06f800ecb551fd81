//! Model rewrites that make the truthmakers of relations explicit.
//!
//! A material relation is rewritten into a relator type mediating a role for
//! each relatum; a comparative relation is grounded in an ordered quality of
//! its relata (or of modes inhering in them). Rewrites are computed as
//! [`UnpackPlan`] values and applied with [`apply_plan`].

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    Classifier, Derivation, Direction, Model, Multiplicity, QualityRef, QualitySpace,
    RelationDecl, RelationStereotype, SpaceKind, Stereotype, StructuralError,
};
use crate::rules::{end_compatible, mediations_of, quality_grounds_end};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnpackError {
    #[error("`{0}` is not a material relation of the model")]
    NotMaterial(String),
    #[error("`{0}` is already derived from a relator")]
    AlreadyDerived(String),
    #[error("names already declared: {}", .0.join(", "))]
    NameClash(Vec<String>),
    #[error("a comparative needs an ordered space, `{0}` is unordered")]
    UnorderedSpace(String),
    #[error("`{0}` is neither a comparative nor an underived material relation")]
    NotComparative(String),
    #[error("no single bearer is shared by the ends of `{0}`")]
    NoSharedBearer(String),
    #[error("`{0}` is not a relator of the model")]
    NotRelator(String),
    #[error("relator `{relator}` has {count} mediations, expected 2")]
    NotBinaryRelator { relator: String, count: usize },
    #[error("plan has no mediation to `{0}`")]
    NoSuchMediation(String),
    #[error("plan does not apply: {}", .0.iter().map(|e| e.message.as_str()).collect::<Vec<_>>().join("; "))]
    Inapplicable(Vec<StructuralError>),
}

/// A rewrite of one relation. `new_relations` includes the rewritten target
/// relation, which replaces the declaration named in `replaces`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnpackPlan {
    pub target_relation: String,
    pub new_classifiers: Vec<Classifier>,
    pub new_relations: Vec<RelationDecl>,
    pub new_spaces: Vec<QualitySpace>,
    pub replaces: Vec<String>,
}

impl UnpackPlan {
    /// Sets the number of `role` instances each relator mediates.
    pub fn with_mediated(mut self, role: &str, mult: Multiplicity) -> Result<Self, UnpackError> {
        let m = self
            .new_relations
            .iter_mut()
            .find(|r| r.stereotype == RelationStereotype::Mediation && r.target == role)
            .ok_or_else(|| UnpackError::NoSuchMediation(role.to_string()))?;
        m.target_mult = mult;
        Ok(self)
    }

    /// Sets the number of relators mediating each `role` instance.
    pub fn with_relators_per(mut self, role: &str, mult: Multiplicity) -> Result<Self, UnpackError> {
        let m = self
            .new_relations
            .iter_mut()
            .find(|r| r.stereotype == RelationStereotype::Mediation && r.target == role)
            .ok_or_else(|| UnpackError::NoSuchMediation(role.to_string()))?;
        m.source_mult = mult;
        Ok(self)
    }
}

fn lower_first(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_lowercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn clashes<'a>(model: &Model, names: impl IntoIterator<Item = &'a str>) -> Result<(), UnpackError> {
    let mut seen = BTreeSet::new();
    let mut bad = BTreeSet::new();
    for n in names {
        if model.classifier(n).is_some() || model.relation(n).is_some() || !seen.insert(n) {
            bad.insert(n.to_string());
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(UnpackError::NameClash(bad.into_iter().collect()))
    }
}

/// Rewrites material relation `relation` into relator `relator_name`
/// mediating one role per end. An end that is already a role is reused;
/// otherwise a role named by `role_names` specializes the end type. The
/// material relation is retargeted to the roles and derived from the relator.
pub fn unpack_material(
    model: &Model,
    relation: &str,
    relator_name: &str,
    role_names: (&str, &str),
) -> Result<UnpackPlan, UnpackError> {
    let r = model
        .relation(relation)
        .filter(|r| r.stereotype == RelationStereotype::Material)
        .ok_or_else(|| UnpackError::NotMaterial(relation.to_string()))?;
    if r.derived_from.is_some() {
        return Err(UnpackError::AlreadyDerived(relation.to_string()));
    }
    let span = r.span;
    let is_role = |t: &str| model.stereotype(t) == Some(Stereotype::Role);

    let mut new_classifiers = vec![Classifier::new(relator_name, Stereotype::Relator).with_span(span)];
    let mut ends = Vec::new();
    for (end, role) in [(&r.source, role_names.0), (&r.target, role_names.1)] {
        if is_role(end) {
            ends.push(end.clone());
        } else {
            new_classifiers.push(
                Classifier::new(role, Stereotype::Role)
                    .with_parents([end.clone()])
                    .with_span(span),
            );
            ends.push(role.to_string());
        }
    }
    if ends[0] == ends[1] {
        return Err(UnpackError::NameClash(vec![ends[0].clone()]));
    }

    let mut new_relations = Vec::new();
    for end in &ends {
        let mut m = RelationDecl::new(
            format!("{}{}", lower_first(relator_name), end),
            RelationStereotype::Mediation,
            relator_name,
            Multiplicity::ONE_OR_MORE,
            Multiplicity::ONE,
            end.clone(),
        );
        m.span = span;
        new_relations.push(m);
    }
    let mut updated = r.clone();
    updated.source = ends[0].clone();
    updated.target = ends[1].clone();
    updated.derived_from = Some(Derivation {
        relator: relator_name.to_string(),
        multiplicity: Multiplicity::ONE_OR_MORE,
    });
    new_relations.push(updated);

    clashes(
        model,
        new_classifiers
            .iter()
            .map(|c| c.name.as_str())
            .chain(new_relations[..2].iter().map(|m| m.name.as_str())),
    )?;

    Ok(UnpackPlan {
        target_relation: relation.to_string(),
        new_classifiers,
        new_relations,
        new_spaces: Vec::new(),
        replaces: vec![relation.to_string()],
    })
}

/// The type a new quality for `r` should characterize: a mode already
/// characterizing both ends, the shared end type, or the ends' shared kind.
fn shared_bearer(model: &Model, r: &RelationDecl) -> Option<String> {
    let mode = model
        .relations()
        .filter(|c| {
            c.stereotype == RelationStereotype::Characterization
                && model.stereotype(&c.source) == Some(Stereotype::Mode)
                && end_compatible(model, &c.target, &r.source)
                && end_compatible(model, &c.target, &r.target)
        })
        .map(|c| c.source.clone())
        .next();
    if mode.is_some() {
        return mode;
    }
    if r.source == r.target {
        return Some(r.source.clone());
    }
    match (model.ultimate_kind(&r.source), model.ultimate_kind(&r.target)) {
        (Ok(a), Ok(b)) if a == b => Some(a),
        _ => None,
    }
}

/// Grounds relation `relation` in the ordered quality `quality`, creating the
/// quality, its space and a characterization as needed. Underived material
/// relations are reclassified as comparatives.
pub fn unpack_comparative(
    model: &Model,
    relation: &str,
    quality: &str,
    space: SpaceKind,
    direction: Direction,
) -> Result<UnpackPlan, UnpackError> {
    let r = model
        .relation(relation)
        .filter(|r| {
            r.stereotype == RelationStereotype::Comparative
                || (r.stereotype == RelationStereotype::Material && r.derived_from.is_none())
        })
        .ok_or_else(|| UnpackError::NotComparative(relation.to_string()))?;
    if !matches!(space, SpaceKind::Ordered { .. }) {
        return Err(UnpackError::UnorderedSpace(quality.to_string()));
    }
    let span = r.span;
    let mut plan = UnpackPlan {
        target_relation: relation.to_string(),
        new_classifiers: Vec::new(),
        new_relations: Vec::new(),
        new_spaces: Vec::new(),
        replaces: vec![relation.to_string()],
    };

    match model.stereotype(quality) {
        Some(Stereotype::Quality) => match model.space(quality) {
            Some(s) if !s.is_ordered() => {
                return Err(UnpackError::UnorderedSpace(quality.to_string()))
            }
            Some(_) => {}
            None => plan.new_spaces.push(QualitySpace {
                owner: quality.to_string(),
                kind: space,
                span,
            }),
        },
        Some(_) => return Err(UnpackError::NameClash(vec![quality.to_string()])),
        None => {
            if model.relation(quality).is_some() {
                return Err(UnpackError::NameClash(vec![quality.to_string()]));
            }
            plan.new_classifiers
                .push(Classifier::new(quality, Stereotype::Quality).with_span(span));
            plan.new_spaces.push(QualitySpace {
                owner: quality.to_string(),
                kind: space,
                span,
            });
        }
    }

    let grounded = model.stereotype(quality).is_some()
        && quality_grounds_end(model, quality, &r.source)
        && quality_grounds_end(model, quality, &r.target);
    if !grounded {
        let bearer =
            shared_bearer(model, r).ok_or_else(|| UnpackError::NoSharedBearer(relation.to_string()))?;
        let mut name = format!("{}Of", lower_first(quality));
        if model.relation(&name).is_some() || model.classifier(&name).is_some() {
            name = format!("{name}{bearer}");
        }
        clashes(model, [name.as_str()])?;
        let mut c = RelationDecl::new(
            name,
            RelationStereotype::Characterization,
            quality,
            Multiplicity::ONE,
            Multiplicity::ONE,
            bearer,
        );
        c.span = span;
        plan.new_relations.push(c);
    }

    let mut updated = r.clone();
    updated.stereotype = RelationStereotype::Comparative;
    updated.source_mult = Multiplicity::ANY;
    updated.target_mult = Multiplicity::ANY;
    updated.derived_from = None;
    updated.via_quality = Some(QualityRef {
        quality: quality.to_string(),
        direction,
    });
    plan.new_relations.push(updated);
    Ok(plan)
}

/// Applies `plan` to `model`, producing a new model. Every declaration of
/// `model` except the replaced relations is kept unchanged.
pub fn apply_plan(model: &Model, plan: &UnpackPlan) -> Result<Model, UnpackError> {
    let mut b = model.to_builder();
    for name in &plan.replaces {
        b.remove_relation(name);
    }
    for c in &plan.new_classifiers {
        b.push_classifier(c.clone());
    }
    for s in &plan.new_spaces {
        b.push_space(s.clone());
    }
    for r in &plan.new_relations {
        b.push_relation(r.clone());
    }
    b.build().map_err(UnpackError::Inapplicable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EndCardinality {
    /// The mediated type at this end.
    #[serde(rename = "type")]
    pub ty: String,
    pub mediation: String,
    /// How many instances of this end one instance of the other end relates to.
    pub multiplicity: Multiplicity,
}

/// Multiplicities entailed for a material relation derived from a binary
/// relator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MaterialCardinalities {
    pub relator: String,
    pub end_a: EndCardinality,
    pub end_b: EndCardinality,
    /// How many relators ground one related pair.
    pub per_tuple: Multiplicity,
}

fn mul(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(0), _) | (_, Some(0)) => Some(0),
        (Some(a), Some(b)) => Some(a.saturating_mul(b)),
        _ => None,
    }
}

/// Bounds on how many instances of the far end one instance of the near end
/// relates to, given near-side relator counts `near` (relators per near
/// instance) and far mediation `far_rel` (relators per far instance) and
/// `far_med` (far instances per relator).
fn far_end(near: Multiplicity, far_rel: Multiplicity, far_med: Multiplicity) -> Multiplicity {
    let min = if near.min == 0 {
        0
    } else {
        // Each far instance shares at most `far_rel.max` of the near
        // instance's relators, each of which needs `far_med.min` of them.
        let spread = match far_rel.max {
            Some(0) => 0,
            Some(k) => (near.min * far_med.min).div_ceil(k),
            None => 0,
        };
        far_med.min.max(spread)
    };
    Multiplicity::new(min, mul(near.max, far_med.max))
}

/// Tightest multiplicities for the material relation derived from
/// `relator`, which must have exactly two mediations. End A is the mediation
/// matching the source end of a material relation derived from `relator`,
/// or the first mediation by name.
pub fn derive_material_cardinalities(
    model: &Model,
    relator: &str,
) -> Result<MaterialCardinalities, UnpackError> {
    if model.stereotype(relator) != Some(Stereotype::Relator) {
        return Err(UnpackError::NotRelator(relator.to_string()));
    }
    let mut meds = mediations_of(model, relator);
    if meds.len() != 2 {
        return Err(UnpackError::NotBinaryRelator {
            relator: relator.to_string(),
            count: meds.len(),
        });
    }
    let material = model.relations().find(|r| {
        r.stereotype == RelationStereotype::Material
            && r.derived_from.as_ref().is_some_and(|d| d.relator == relator)
    });
    if let Some(m) = material {
        let fit = |ty: &str| {
            if ty == m.source {
                3
            } else if model.taxonomically_related(ty, &m.source) {
                2
            } else if end_compatible(model, ty, &m.source) {
                1
            } else {
                0
            }
        };
        if fit(&meds[1].target) > fit(&meds[0].target) {
            meds.swap(0, 1);
        }
    }
    let (a, b) = (meds[0], meds[1]);
    let end_b = far_end(a.source_mult, b.source_mult, b.target_mult);
    let end_a = far_end(b.source_mult, a.source_mult, a.target_mult);
    let per_tuple = Multiplicity::new(
        1,
        match (a.source_mult.max, b.source_mult.max) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        },
    );
    Ok(MaterialCardinalities {
        relator: relator.to_string(),
        end_a: EndCardinality {
            ty: a.target.clone(),
            mediation: a.name.clone(),
            multiplicity: end_a,
        },
        end_b: EndCardinality {
            ty: b.target.clone(),
            mediation: b.name.clone(),
            multiplicity: end_b,
        },
        per_tuple,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rules::check;

    #[test]
    fn unpacking_plain_passes_the_catalog() {
        let m = fixtures::healthcare_plain();
        let plan = unpack_material(&m, "treatedBy", "Treatment", ("Patient", "ProviderRole")).unwrap();
        assert_eq!(plan.new_classifiers.len(), 3);
        assert_eq!(
            plan.new_relations.iter().filter(|r| r.stereotype == RelationStereotype::Mediation).count(),
            2
        );
        let out = apply_plan(&m, &plan).unwrap();
        assert_eq!(check(&out), []);
        assert_eq!(
            out.relation("treatedBy").unwrap().derived_from.as_ref().unwrap().relator,
            "Treatment"
        );
        assert!(matches!(
            unpack_material(&out, "treatedBy", "Treatment2", ("A", "B")),
            Err(UnpackError::AlreadyDerived(_))
        ));
    }

    #[test]
    fn unknown_relation_is_not_material() {
        let m = fixtures::healthcare_plain();
        assert_eq!(
            unpack_material(&m, "nope", "T", ("A", "B")),
            Err(UnpackError::NotMaterial("nope".into()))
        );
    }

    #[test]
    fn name_clash() {
        let m = fixtures::healthcare_plain();
        assert!(matches!(
            unpack_material(&m, "treatedBy", "Person", ("A", "B")),
            Err(UnpackError::NameClash(_))
        ));
    }

    #[test]
    fn nominal_space_is_rejected() {
        let m = crate::dsl::parse_text(
            "model M\nmode C\ncomparative moreSevereThan : C -- C",
        )
        .unwrap();
        let nominal = SpaceKind::Nominal(vec!["mild".into(), "severe".into()]);
        assert_eq!(
            unpack_comparative(&m, "moreSevereThan", "Severity", nominal, Direction::Desc),
            Err(UnpackError::UnorderedSpace("Severity".into()))
        );
        let plan = unpack_comparative(
            &m,
            "moreSevereThan",
            "Severity",
            SpaceKind::Ordered { lo: 0, hi: 100 },
            Direction::Desc,
        )
        .unwrap();
        assert_eq!(plan.new_classifiers.len(), 1);
        let out = apply_plan(&m, &plan).unwrap();
        assert!(check(&out).iter().all(|d| d.rule_id != "R9"));
    }

    #[test]
    fn treatment_cardinalities() {
        let m = fixtures::healthcare_relator();
        let c = derive_material_cardinalities(&m, "Treatment").unwrap();
        assert_eq!(c.end_a.ty, "Patient");
        assert_eq!(c.end_a.multiplicity, Multiplicity::ONE_OR_MORE);
        assert_eq!(c.end_b.multiplicity, Multiplicity::ONE_OR_MORE);
        assert_eq!(c.per_tuple, Multiplicity::ONE_OR_MORE);
    }

    #[test]
    fn far_end_bounds() {
        let m = |a, b| Multiplicity::new(a, b);
        // An A mediated by no relator relates to nothing.
        assert_eq!(far_end(m(0, Some(1)), m(1, None), m(1, Some(1))).min, 0);
        // Two relators per A, each B in one relator only: two distinct Bs.
        assert_eq!(far_end(m(2, Some(2)), m(1, Some(1)), m(1, Some(1))), m(2, Some(2)));
    }
}
