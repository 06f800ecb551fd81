//! Classification of candidate correspondences between types of two models.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::{Model, Rigidity, Stereotype};
use crate::rules::check;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Verdict {
    IdentityCandidate,
    SpecializationCandidate,
    SiblingSubtypesCandidate,
    ManifestationCandidate,
    HistoricalDependenceCandidate,
    IdentityExcluded,
}

/// Which side of a specialization candidate is the more specific type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SpecializationDirection {
    LeftSpecializesRight,
    RightSpecializesLeft,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Side {
    pub model: String,
    pub classifier: String,
    pub stereotype: Stereotype,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Correspondence {
    pub left: Side,
    pub right: Side,
    pub verdict: Verdict,
    pub alternatives: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<SpecializationDirection>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InteropError {
    #[error("unknown classifier `{name}` in the {side} model")]
    UnknownClassifier { side: &'static str, name: String },
    #[error("the {side} model has error diagnostics")]
    IllFormedModel {
        side: &'static str,
        diagnostics: Vec<Diagnostic>,
    },
}

fn root_stereotypes(model: &Model, name: &str) -> BTreeSet<Stereotype> {
    model
        .possible_roots(name)
        .iter()
        .filter_map(|r| model.stereotype(r))
        .collect()
}

fn is_role_like(s: Stereotype) -> bool {
    matches!(s, Stereotype::Role | Stereotype::RoleMixin)
}

fn is_historical_role(s: Stereotype) -> bool {
    matches!(s, Stereotype::HistoricalRole | Stereotype::HistoricalRoleMixin)
}

/// Declared surroundings of a classifier, normalized for comparison across
/// models: parents and every relation touching it, with the far end's name.
fn properties(model: &Model, name: &str) -> BTreeSet<String> {
    let c = model.classifier(name).expect("caller checked");
    let mut out: BTreeSet<String> = c
        .parents
        .iter()
        .map(|p| format!("parent:{}", p.to_lowercase()))
        .collect();
    for r in model.relations() {
        if r.source == name {
            out.insert(format!("source:{}:{}", r.stereotype, r.target.to_lowercase()));
        }
        if r.target == name {
            out.insert(format!("target:{}:{}", r.stereotype, r.source.to_lowercase()));
        }
    }
    out
}

fn classify(lm: &Model, l: &str, rm: &Model, r: &str) -> (Verdict, Vec<Verdict>, Option<SpecializationDirection>, String) {
    use SpecializationDirection::*;
    use Verdict::*;
    let ls = lm.stereotype(l).unwrap();
    let rs = rm.stereotype(r).unwrap();

    if ls == rs && root_stereotypes(lm, l) == root_stereotypes(rm, r) {
        let lp = properties(lm, l);
        let rp = properties(rm, r);
        if lp == rp {
            return (
                IdentityCandidate,
                vec![SpecializationCandidate, SiblingSubtypesCandidate],
                None,
                format!("rule 1: both are {ls} types with the same kind of identity and identical declared properties"),
            );
        }
        let direction = if lp.is_subset(&rp) {
            RightSpecializesLeft
        } else if rp.is_subset(&lp) {
            LeftSpecializesRight
        } else {
            Undetermined
        };
        let only_l: Vec<&str> = lp.difference(&rp).map(String::as_str).collect();
        let only_r: Vec<&str> = rp.difference(&lp).map(String::as_str).collect();
        return (
            SpecializationCandidate,
            vec![SiblingSubtypesCandidate],
            Some(direction),
            format!(
                "rule 1: both are {ls} types, but identicals share all properties; left only [{}], right only [{}]",
                only_l.join(", "),
                only_r.join(", ")
            ),
        );
    }

    let pair = |a: Stereotype, b: Stereotype| (ls == a && rs == b) || (ls == b && rs == a);
    if pair(Stereotype::Relator, Stereotype::Event) {
        return (
            IdentityExcluded,
            vec![ManifestationCandidate],
            None,
            "rule 2: a relator is an endurant and an event a perdurant; the event may manifest the relator's commitments and claims".into(),
        );
    }
    if ls.top_category() != rs.top_category() {
        return (
            IdentityExcluded,
            Vec::new(),
            None,
            format!(
                "rule 3: {ls} and {rs} belong to different top-level categories ({} vs {})",
                ls.top_category(),
                rs.top_category()
            ),
        );
    }
    let lk = lm.possible_roots(l);
    let rk = rm.possible_roots(r);
    if (is_role_like(ls) && is_historical_role(rs)) || (is_historical_role(ls) && is_role_like(rs)) {
        let shared = lk.intersection(&rk).cloned().collect::<Vec<_>>();
        if !shared.is_empty() {
            return (
                IdentityExcluded,
                vec![HistoricalDependenceCandidate],
                None,
                format!(
                    "rule 4: {ls} and {rs} over {}; the historical role is defined by past participation and may depend historically on the other",
                    shared.join(", ")
                ),
            );
        }
    }
    if ls.is_historical() || rs.is_historical() {
        return (
            IdentityExcluded,
            vec![HistoricalDependenceCandidate],
            None,
            format!("rule 5: {ls} vs {rs}; only one side is defined historically"),
        );
    }
    let (lr, rr) = (ls.rigidity(), rs.rigidity());
    if lr == rr {
        let direction = match (ls.provides_identity(), rs.provides_identity()) {
            (true, false) => RightSpecializesLeft,
            (false, true) => LeftSpecializesRight,
            _ => Undetermined,
        };
        (
            SpecializationCandidate,
            vec![SiblingSubtypesCandidate],
            Some(direction),
            format!("rule 5: {ls} vs {rs}; same rigidity, different stereotype"),
        )
    } else {
        let direction = if lr == Rigidity::AntiRigid {
            LeftSpecializesRight
        } else if rr == Rigidity::AntiRigid {
            RightSpecializesLeft
        } else {
            Undetermined
        };
        (
            IdentityExcluded,
            vec![SpecializationCandidate],
            Some(direction),
            format!("rule 5: {ls} and {rs} differ in rigidity; the anti-rigid one may specialize the other"),
        )
    }
}

/// Classifies each pair of classifiers. Without explicit `pairs`, every
/// classifier name declared in both models is paired with itself.
pub fn compare(
    left: &Model,
    right: &Model,
    pairs: Option<&[(String, String)]>,
) -> Result<Vec<Correspondence>, InteropError> {
    for (side, m) in [("left", left), ("right", right)] {
        let diags = check(m);
        if has_errors(&diags) {
            return Err(InteropError::IllFormedModel {
                side,
                diagnostics: diags,
            });
        }
    }
    let pairs: Vec<(String, String)> = match pairs {
        Some(ps) => ps.to_vec(),
        None => left
            .classifiers()
            .filter(|c| right.classifier(&c.name).is_some())
            .map(|c| (c.name.clone(), c.name.clone()))
            .collect(),
    };
    let mut out = Vec::with_capacity(pairs.len());
    for (l, r) in &pairs {
        for (side, m, n) in [("left", left, l), ("right", right, r)] {
            if m.classifier(n).is_none() {
                return Err(InteropError::UnknownClassifier {
                    side,
                    name: n.clone(),
                });
            }
        }
        let (verdict, alternatives, direction, rationale) = classify(left, l, right, r);
        out.push(Correspondence {
            left: Side {
                model: left.name().to_string(),
                classifier: l.clone(),
                stereotype: left.stereotype(l).unwrap(),
            },
            right: Side {
                model: right.name().to_string(),
                classifier: r.clone(),
                stereotype: right.stereotype(r).unwrap(),
            },
            verdict,
            alternatives,
            direction,
            rationale,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn verdict_of(cs: &[Correspondence], name: &str) -> (Verdict, Vec<Verdict>) {
        let c = cs.iter().find(|c| c.left.classifier == name).unwrap();
        (c.verdict, c.alternatives.clone())
    }

    #[test]
    fn relator_versus_event() {
        let cs = compare(&fixtures::healthcare_relator(), &fixtures::healthcare_event(), None).unwrap();
        assert_eq!(
            verdict_of(&cs, "Treatment"),
            (Verdict::IdentityExcluded, vec![Verdict::ManifestationCandidate])
        );
        assert_eq!(
            verdict_of(&cs, "Patient"),
            (Verdict::IdentityExcluded, vec![Verdict::HistoricalDependenceCandidate])
        );
        assert_eq!(verdict_of(&cs, "Person").0, Verdict::IdentityCandidate);
    }

    #[test]
    fn unknown_pair() {
        let m = fixtures::healthcare_event();
        let pairs = [("Person".to_string(), "Nobody".to_string())];
        assert!(matches!(
            compare(&m, &m, Some(&pairs)),
            Err(InteropError::UnknownClassifier { side: "right", .. })
        ));
    }

    #[test]
    fn leibniz_demotion_records_direction() {
        let l = crate::dsl::parse_text("model L\nkind Person").unwrap();
        let r = crate::dsl::parse_text("model R\nkind Person\nmode Fever\ncharacterization feverOf : Fever [0..*] -- [1..1] Person").unwrap();
        let cs = compare(&l, &r, None).unwrap();
        assert_eq!(cs[0].verdict, Verdict::SpecializationCandidate);
        assert_eq!(cs[0].direction, Some(SpecializationDirection::RightSpecializesLeft));
    }
}
