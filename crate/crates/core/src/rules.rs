//! Well-formedness rule catalog.
//!
//! | id  | severity | constraint |
//! |-----|----------|------------|
//! | R1  | error    | every subkind, phase, role and historical role has exactly one ultimate kind |
//! | R2  | error    | a kind specializes no sortal |
//! | R3  | error    | a rigid type never specializes an anti-rigid one |
//! | R4  | error    | roles and role mixins are (or inherit being) targets of a mediation or participation |
//! | R5  | error    | a relator's mediations require at least two mediated individuals |
//! | R6  | error    | a material relation is derived from exactly one relator |
//! | R7  | error    | the deriving relator mediates types related to both material ends |
//! | R8  | warning  | phases of one kind are covered by a disjoint, complete generalization set |
//! | R9  | error    | a comparative is grounded in an ordered quality characterizing both ends |
//! | R10 | error    | a historical role is tied to a participation in an event |

use std::collections::BTreeSet;

use crate::diagnostic::{sort_diagnostics, Diagnostic, Severity};
use crate::model::{Model, RelationDecl, RelationStereotype, Rigidity, Stereotype, TaxonomyError};

/// Runs the full catalog. The result is sorted by span, then rule id, and is
/// empty exactly when the model is well formed.
pub fn check(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    r1_unique_kind(model, &mut out);
    r2_kind_is_top(model, &mut out);
    r3_rigid_over_anti_rigid(model, &mut out);
    r4_relational_dependence(model, &mut out);
    r5_relator_arity(model, &mut out);
    r6_material_derivation(model, &mut out);
    r7_derivation_matches_ends(model, &mut out);
    r8_phase_partition(model, &mut out);
    r9_comparative_grounding(model, &mut out);
    r10_historical_participation(model, &mut out);
    sort_diagnostics(&mut out);
    out
}

fn error(id: &str, span: crate::model::SourceSpan, msg: String) -> Diagnostic {
    Diagnostic::new(id, Severity::Error, span, msg)
}

fn r1_unique_kind(model: &Model, out: &mut Vec<Diagnostic>) {
    for c in model.classifiers() {
        if !c.stereotype.is_sortal() || c.stereotype == Stereotype::Kind {
            continue;
        }
        match model.ultimate_kind(&c.name) {
            Ok(_) => {}
            Err(TaxonomyError::AmbiguousKind { kinds, .. }) => out.push(
                error(
                    "R1",
                    c.span,
                    format!(
                        "{} `{}` specializes several kinds ({})",
                        c.stereotype,
                        c.name,
                        kinds.join(", ")
                    ),
                )
                .with_related(std::iter::once(c.name.clone()).chain(kinds)),
            ),
            Err(_) => out.push(
                error(
                    "R1",
                    c.span,
                    format!("{} `{}` does not specialize any kind", c.stereotype, c.name),
                )
                .with_related([c.name.clone()]),
            ),
        }
    }
}

fn r2_kind_is_top(model: &Model, out: &mut Vec<Diagnostic>) {
    for c in model.classifiers() {
        if c.stereotype != Stereotype::Kind {
            continue;
        }
        let sortal_ancestors: Vec<String> = model
            .ancestors(&c.name)
            .into_iter()
            .filter(|a| model.stereotype(a).is_some_and(Stereotype::is_sortal))
            .collect();
        if !sortal_ancestors.is_empty() {
            out.push(
                error(
                    "R2",
                    c.span,
                    format!(
                        "kind `{}` specializes sortal {}",
                        c.name,
                        sortal_ancestors.join(", ")
                    ),
                )
                .with_related(std::iter::once(c.name.clone()).chain(sortal_ancestors)),
            );
        }
    }
}

fn r3_rigid_over_anti_rigid(model: &Model, out: &mut Vec<Diagnostic>) {
    for c in model.classifiers() {
        if c.stereotype.rigidity() != Rigidity::Rigid {
            continue;
        }
        let anti: Vec<String> = c
            .parents
            .iter()
            .filter(|p| model.stereotype(p).map(Stereotype::rigidity) == Some(Rigidity::AntiRigid))
            .cloned()
            .collect();
        if !anti.is_empty() {
            out.push(
                error(
                    "R3",
                    c.span,
                    format!(
                        "rigid {} `{}` specializes anti-rigid {}",
                        c.stereotype,
                        c.name,
                        anti.join(", ")
                    ),
                )
                .with_related(std::iter::once(c.name.clone()).chain(anti)),
            );
        }
    }
}

/// `name` or one of its ancestors is the target of a relation with one of
/// the given stereotypes.
fn targeted_by(model: &Model, name: &str, stereotypes: &[RelationStereotype]) -> bool {
    let mut candidates = model.ancestors(name);
    candidates.insert(name.to_string());
    model
        .relations()
        .any(|r| stereotypes.contains(&r.stereotype) && candidates.contains(&r.target))
}

fn r4_relational_dependence(model: &Model, out: &mut Vec<Diagnostic>) {
    for c in model.classifiers() {
        if !c.stereotype.is_relationally_dependent() {
            continue;
        }
        if !targeted_by(
            model,
            &c.name,
            &[RelationStereotype::Mediation, RelationStereotype::Participation],
        ) {
            out.push(
                error(
                    "R4",
                    c.span,
                    format!(
                        "{} `{}` is not the target of any mediation or participation",
                        c.stereotype, c.name
                    ),
                )
                .with_related([c.name.clone()]),
            );
        }
    }
}

/// Names of the mediations of `relator` whose mediated type is equal to, an
/// ancestor of or a descendant of the material end `end`.
pub(crate) fn material_sides(model: &Model, relator: &str, end: &str) -> Vec<String> {
    mediations_of(model, relator)
        .into_iter()
        .filter(|m| model.taxonomically_related(&m.target, end))
        .map(|m| m.name.clone())
        .collect()
}

/// Mediations whose source is `relator` or one of its ancestors.
pub(crate) fn mediations_of<'a>(model: &'a Model, relator: &str) -> Vec<&'a RelationDecl> {
    let mut sources = model.ancestors(relator);
    sources.insert(relator.to_string());
    model
        .relations()
        .filter(|r| r.stereotype == RelationStereotype::Mediation && sources.contains(&r.source))
        .collect()
}

fn r5_relator_arity(model: &Model, out: &mut Vec<Diagnostic>) {
    for c in model.classifiers() {
        if c.stereotype != Stereotype::Relator {
            continue;
        }
        let mediations = mediations_of(model, &c.name);
        let total: u32 = mediations.iter().map(|m| m.target_mult.min).sum();
        if total < 2 {
            out.push(
                error(
                    "R5",
                    c.span,
                    format!(
                        "relator `{}` must mediate at least two individuals, its mediations require {total}",
                        c.name
                    ),
                )
                .with_related(
                    std::iter::once(c.name.clone()).chain(mediations.iter().map(|m| m.name.clone())),
                ),
            );
        }
    }
}

fn r6_material_derivation(model: &Model, out: &mut Vec<Diagnostic>) {
    for r in model.relations() {
        if r.stereotype != RelationStereotype::Material {
            continue;
        }
        match &r.derived_from {
            None => out.push(
                error(
                    "R6",
                    r.span,
                    format!("material relation `{}` is not derived from a relator", r.name),
                )
                .with_related([r.name.clone()]),
            ),
            Some(d) if model.stereotype(&d.relator) != Some(Stereotype::Relator) => out.push(
                error(
                    "R6",
                    r.span,
                    format!(
                        "material relation `{}` is derived from `{}`, which is not a relator",
                        r.name, d.relator
                    ),
                )
                .with_related([r.name.clone(), d.relator.clone()]),
            ),
            Some(_) => {}
        }
    }
}

fn r7_derivation_matches_ends(model: &Model, out: &mut Vec<Diagnostic>) {
    for r in model.relations() {
        let Some(d) = &r.derived_from else { continue };
        if r.stereotype != RelationStereotype::Material
            || model.stereotype(&d.relator) != Some(Stereotype::Relator)
        {
            continue;
        }
        let mediations = mediations_of(model, &d.relator);
        let unmatched: Vec<String> = [&r.source, &r.target]
            .into_iter()
            .filter(|end| {
                !mediations
                    .iter()
                    .any(|m| model.taxonomically_related(&m.target, end))
            })
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !unmatched.is_empty() {
            out.push(
                error(
                    "R7",
                    r.span,
                    format!(
                        "relator `{}` mediates nothing compatible with {} of `{}`",
                        d.relator,
                        unmatched.join(", "),
                        r.name
                    ),
                )
                .with_related(
                    [r.name.clone(), d.relator.clone()]
                        .into_iter()
                        .chain(unmatched),
                ),
            );
        }
    }
}

fn r8_phase_partition(model: &Model, out: &mut Vec<Diagnostic>) {
    for kind in model.classifiers() {
        if kind.stereotype != Stereotype::Kind {
            continue;
        }
        let phases: Vec<_> = model
            .classifiers()
            .filter(|c| {
                c.stereotype == Stereotype::Phase
                    && model.ultimate_kind(&c.name).as_deref() == Ok(kind.name.as_str())
            })
            .collect();
        if phases.len() < 2 {
            continue;
        }
        let mut uncovered: Vec<_> = phases
            .iter()
            .filter(|p| {
                !model.generalization_sets().any(|g| {
                    g.is_disjoint && g.is_complete && g.specifics.contains(&p.name)
                })
            })
            .collect();
        if uncovered.is_empty() {
            continue;
        }
        uncovered.sort_by_key(|p| p.span);
        let names: Vec<String> = uncovered.iter().map(|p| p.name.clone()).collect();
        out.push(
            Diagnostic::new(
                "R8",
                Severity::Warning,
                uncovered[0].span,
                format!(
                    "phases of `{}` not grouped in a disjoint, complete generalization set: {}",
                    kind.name,
                    names.join(", ")
                ),
            )
            .with_related(std::iter::once(kind.name.clone()).chain(names)),
        );
    }
}

/// Whether `ty` stands for the same individuals as the relation end `end`:
/// taxonomically related, or sortals sharing their ultimate kind.
pub(crate) fn end_compatible(model: &Model, ty: &str, end: &str) -> bool {
    if model.taxonomically_related(ty, end) {
        return true;
    }
    matches!(
        (model.ultimate_kind(ty), model.ultimate_kind(end)),
        (Ok(a), Ok(b)) if a == b
    )
}

/// Whether `quality` characterizes `end`, directly or through a mode that
/// characterizes it.
pub(crate) fn quality_grounds_end(model: &Model, quality: &str, end: &str) -> bool {
    let characterizations: Vec<&RelationDecl> = model
        .relations()
        .filter(|r| r.stereotype == RelationStereotype::Characterization)
        .collect();
    characterizations.iter().any(|q| {
        q.source == quality
            && (end_compatible(model, &q.target, end)
                || (model.stereotype(&q.target) == Some(Stereotype::Mode)
                    && characterizations.iter().any(|m| {
                        model.taxonomically_related(&m.source, &q.target)
                            && end_compatible(model, &m.target, end)
                    })))
    })
}

fn r9_comparative_grounding(model: &Model, out: &mut Vec<Diagnostic>) {
    for r in model.relations() {
        if r.stereotype != RelationStereotype::Comparative {
            continue;
        }
        let problem = match &r.via_quality {
            None => Some("is not grounded in any quality".to_string()),
            Some(q) => match (model.stereotype(&q.quality), model.space(&q.quality)) {
                (Some(st), _) if st != Stereotype::Quality => {
                    Some(format!("is grounded in `{}`, which is a {st}", q.quality))
                }
                (_, None) => Some(format!("quality `{}` has no quality space", q.quality)),
                (_, Some(space)) if !space.is_ordered() => {
                    Some(format!("quality `{}` has an unordered space", q.quality))
                }
                _ => {
                    let missing: Vec<&str> = [r.source.as_str(), r.target.as_str()]
                        .into_iter()
                        .filter(|end| !quality_grounds_end(model, &q.quality, end))
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    (!missing.is_empty()).then(|| {
                        format!(
                            "quality `{}` does not characterize {}",
                            q.quality,
                            missing.join(", ")
                        )
                    })
                }
            },
        };
        if let Some(problem) = problem {
            let mut related = vec![r.name.clone()];
            related.extend(r.via_quality.as_ref().map(|q| q.quality.clone()));
            out.push(
                error("R9", r.span, format!("comparative `{}` {problem}", r.name))
                    .with_related(related),
            );
        }
    }
}

fn r10_historical_participation(model: &Model, out: &mut Vec<Diagnostic>) {
    for c in model.classifiers() {
        if c.stereotype != Stereotype::HistoricalRole {
            continue;
        }
        if !targeted_by(model, &c.name, &[RelationStereotype::Participation]) {
            out.push(
                error(
                    "R10",
                    c.span,
                    format!(
                        "historical role `{}` is not tied to a participation in any event",
                        c.name
                    ),
                )
                .with_related([c.name.clone()]),
            );
        }
    }
}
