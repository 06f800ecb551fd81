//! Anti-pattern detection backed by witness worlds.
//!
//! * `AP1` overlapping role fillers: a relator or event connects two end
//!   types whose extensions may overlap, so one individual could fill both
//!   ends of the same relator or event.
//! * `AP2` tie-admitting comparative: a comparative whose direction admits
//!   equal values and therefore fails asymmetry.

use std::collections::BTreeSet;

use crate::diagnostic::{has_errors, sort_diagnostics, Diagnostic, Severity};
use crate::model::{Model, RelationDecl, RelationStereotype, Stereotype};
use crate::rules::check;
use crate::world::{check_metaproperties, find_witness, FinderError, Goal, Scope};

pub const NO_WITNESS: &str = "structurally matched, no in-scope witness";

/// Sortals an instance of `ty` with ultimate kind `kind` might instantiate
/// that pin down its position below `ty`.
fn sortal_positions(model: &Model, ty: &str, kind: &str) -> BTreeSet<String> {
    let st = model.stereotype(ty);
    if st.is_some_and(Stereotype::is_sortal) {
        return [ty.to_string()].into();
    }
    model
        .descendants(ty)
        .into_iter()
        .filter(|d| model.stereotype(d).is_some_and(Stereotype::is_sortal))
        .filter(|d| model.ultimate_kind(d).is_ok_and(|k| k == kind))
        .collect()
}

/// Whether a disjoint generalization set places `a` and `b` under different
/// specifics.
fn separated(model: &Model, a: &str, b: &str) -> bool {
    model.generalization_sets().filter(|g| g.is_disjoint).any(|g| {
        g.specifics.iter().any(|sa| {
            model.specializes(a, sa)
                && g.specifics
                    .iter()
                    .any(|sb| sb != sa && model.specializes(b, sb))
        })
    })
}

/// Whether instances of `t1` and `t2` may coincide.
pub fn may_overlap(model: &Model, t1: &str, t2: &str) -> bool {
    let k1 = model.possible_roots(t1);
    let k2 = model.possible_roots(t2);
    k1.intersection(&k2).any(|k| {
        let s1 = sortal_positions(model, t1, k);
        let s2 = sortal_positions(model, t2, k);
        s1.iter().any(|a| s2.iter().any(|b| !separated(model, a, b)))
    })
}

fn dependence_links<'a>(model: &'a Model, owner: &str) -> Vec<&'a RelationDecl> {
    model
        .relations()
        .filter(|r| {
            r.source == owner
                && matches!(
                    r.stereotype,
                    RelationStereotype::Mediation | RelationStereotype::Participation
                )
        })
        .collect()
}

fn ap1(model: &Model, scope: &Scope, out: &mut Vec<Diagnostic>) -> Result<(), FinderError> {
    for c in model.classifiers() {
        if !matches!(c.stereotype, Stereotype::Relator | Stereotype::Event) {
            continue;
        }
        let links = dependence_links(model, &c.name);
        for (i, r1) in links.iter().enumerate() {
            for r2 in &links[i + 1..] {
                if !may_overlap(model, &r1.target, &r2.target) {
                    continue;
                }
                let goal = Goal::default()
                    .instance("e", &c.name)
                    .instance("x", &r1.target)
                    .instance("x", &r2.target)
                    .link(&r1.name, "e", "x")
                    .link(&r2.name, "e", "x");
                let related = [
                    c.name.clone(),
                    r1.name.clone(),
                    r2.name.clone(),
                    r1.target.clone(),
                    r2.target.clone(),
                ];
                let d = match find_witness(model, scope, &goal)? {
                    Some(w) => {
                        let mut d = Diagnostic::new(
                            "AP1",
                            Severity::Warning,
                            c.span,
                            format!(
                                "one individual can be both `{}` and `{}` of the same `{}` ({goal})",
                                r1.target, r2.target, c.name
                            ),
                        );
                        d.witness = Some(w);
                        d
                    }
                    None => Diagnostic::new(
                        "AP1",
                        Severity::Info,
                        c.span,
                        format!(
                            "`{}` and `{}` of `{}`: {NO_WITNESS}",
                            r1.target, r2.target, c.name
                        ),
                    ),
                };
                out.push(d.with_related(related));
            }
        }
    }
    Ok(())
}

fn ap2(model: &Model, scope: &Scope, out: &mut Vec<Diagnostic>) -> Result<(), FinderError> {
    for r in model.relations() {
        let Some(q) = &r.via_quality else { continue };
        if r.stereotype != RelationStereotype::Comparative || q.direction.is_strict() {
            continue;
        }
        let report = check_metaproperties(model, &r.name, scope)?;
        let related = [r.name.clone(), q.quality.clone()];
        let d = match report.asymmetric.counterexample {
            Some(cx) => {
                let mut d = Diagnostic::new(
                    "AP2",
                    Severity::Warning,
                    r.span,
                    format!(
                        "`{}` ordered by `{}` {} admits ties and is not asymmetric (witnesses {})",
                        r.name,
                        q.quality,
                        q.direction,
                        cx.witnesses.join(", ")
                    ),
                );
                d.witness = Some(cx.world);
                d
            }
            None => Diagnostic::new(
                "AP2",
                Severity::Info,
                r.span,
                format!("`{}` ordered by {}: {NO_WITNESS}", r.name, q.direction),
            ),
        };
        out.push(d.with_related(related));
    }
    Ok(())
}

/// Runs the anti-pattern catalog. Findings with an in-scope witness are
/// warnings carrying the witness world; structural matches without one are
/// informational.
pub fn lint(model: &Model, scope: &Scope) -> Result<Vec<Diagnostic>, FinderError> {
    let diags = check(model);
    if has_errors(&diags) {
        return Err(FinderError::IllFormedModel(diags));
    }
    let mut out = Vec::new();
    ap1(model, scope, &mut out)?;
    ap2(model, scope, &mut out)?;
    sort_diagnostics(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn relator_fixture_ends_cannot_overlap() {
        let m = fixtures::healthcare_relator();
        assert!(!may_overlap(&m, "Patient", "HealthcareProvider"));
    }

    #[test]
    fn event_fixture_ends_overlap() {
        let m = fixtures::healthcare_event();
        assert!(may_overlap(&m, "Patient", "HealthcareProvider"));
        assert!(!may_overlap(
            &m,
            "IndividualHealthcareProvider",
            "InstitutionalHealthcareProvider"
        ));
    }
}
