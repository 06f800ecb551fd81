use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{all_worlds, FinderError, InstanceWorld, Scope, SearchLimits};
use crate::model::{Direction, Model, RelationDecl, RelationStereotype, Stereotype};
use crate::rules::end_compatible;

/// How the values compared for one end of a comparative are obtained.
enum Grounding {
    /// The quality inheres in instances of the end type.
    Direct { bearer: String },
    /// The quality inheres in modes that characterize the end.
    ViaMode { mode: String, characterizations: Vec<String> },
}

struct Plan {
    quality: String,
    direction: Direction,
    source: (String, Grounding),
    target: (String, Grounding),
}

fn ordered_quality(model: &Model, quality: &str) -> bool {
    model.stereotype(quality) == Some(Stereotype::Quality)
        && model.space(quality).is_some_and(|s| s.is_ordered())
}

fn grounding(model: &Model, quality: &str, end: &str) -> Option<Grounding> {
    let chars: Vec<&RelationDecl> = model
        .relations()
        .filter(|r| r.stereotype == RelationStereotype::Characterization)
        .collect();
    let of_quality = || chars.iter().filter(|r| r.source == quality);
    if let Some(r) = of_quality().find(|r| end_compatible(model, &r.target, end)) {
        return Some(Grounding::Direct {
            bearer: r.target.clone(),
        });
    }
    of_quality()
        .filter(|r| model.stereotype(&r.target) == Some(Stereotype::Mode))
        .find_map(|r| {
            let links: Vec<String> = chars
                .iter()
                .filter(|m| {
                    model.taxonomically_related(&m.source, &r.target)
                        && end_compatible(model, &m.target, end)
                })
                .map(|m| m.name.clone())
                .collect();
            (!links.is_empty()).then(|| Grounding::ViaMode {
                mode: r.target.clone(),
                characterizations: links,
            })
        })
}

fn plan(model: &Model, relation: &str) -> Result<Plan, FinderError> {
    let r = model
        .relation(relation)
        .ok_or_else(|| FinderError::UnknownRelation(relation.to_string()))?;
    let not_ordered = || FinderError::NotOrdered(relation.to_string());
    let (quality, direction) = match (r.stereotype, &r.via_quality) {
        (RelationStereotype::Comparative, Some(q)) => (q.quality.clone(), q.direction),
        // An internal relation between points of an ordered space is the
        // space's own ordering, read between the bearers of those points.
        (RelationStereotype::Internal, None) if r.source == r.target => {
            (r.source.clone(), Direction::Asc)
        }
        _ => return Err(not_ordered()),
    };
    if !ordered_quality(model, &quality) {
        return Err(not_ordered());
    }
    if r.stereotype == RelationStereotype::Internal {
        let g = |q: &str| Grounding::Direct {
            bearer: q.to_string(),
        };
        return Ok(Plan {
            source: (r.source.clone(), g(&quality)),
            target: (r.target.clone(), g(&quality)),
            quality,
            direction,
        });
    }
    let source = grounding(model, &quality, &r.source).ok_or_else(not_ordered)?;
    let target = grounding(model, &quality, &r.target).ok_or_else(not_ordered)?;
    Ok(Plan {
        quality,
        direction,
        source: (r.source.clone(), source),
        target: (r.target.clone(), target),
    })
}

fn bearer_values(
    world: &InstanceWorld,
    model: &Model,
    quality: &str,
    end: &str,
    g: &Grounding,
) -> Result<BTreeMap<String, Vec<i64>>, FinderError> {
    let value = |bearer: &str| -> Result<i64, FinderError> {
        world
            .quality_value(quality, bearer)
            .and_then(|v| v.as_int())
            .ok_or_else(|| FinderError::MissingQualityValue {
                quality: quality.to_string(),
                bearer: bearer.to_string(),
            })
    };
    let mut out = BTreeMap::new();
    let quality_is_end = model.stereotype(end) == Some(Stereotype::Quality);
    for ind in &world.individuals {
        let x = ind.id.as_str();
        let values = match g {
            Grounding::Direct { .. } if quality_is_end => {
                match world.quality_value(quality, x) {
                    Some(_) => vec![value(x)?],
                    None => continue,
                }
            }
            _ if !world.is_instance(x, end) => continue,
            Grounding::Direct { bearer } => {
                if world.is_instance(x, bearer) {
                    vec![value(x)?]
                } else {
                    Vec::new()
                }
            }
            Grounding::ViaMode {
                mode,
                characterizations,
            } => {
                let mut vs = Vec::new();
                for l in &world.links {
                    if l.target == x
                        && characterizations.contains(&l.relation)
                        && world.is_instance(&l.source, mode)
                    {
                        vs.push(value(&l.source)?);
                    }
                }
                vs
            }
        };
        out.insert(x.to_string(), values);
    }
    Ok(out)
}

/// Extension of a comparative relation in `world`: `(x, y)` holds when both
/// bear values and some value of `x` stands in the declared ordering to every
/// value of `y`. Internal relations over an ordered quality yield the strict
/// ascending order between the bearers' values.
pub fn eval_comparative(
    world: &InstanceWorld,
    model: &Model,
    relation: &str,
) -> Result<BTreeSet<(String, String)>, FinderError> {
    let p = plan(model, relation)?;
    let xs = bearer_values(world, model, &p.quality, &p.source.0, &p.source.1)?;
    let ys = bearer_values(world, model, &p.quality, &p.target.0, &p.target.1)?;
    let mut pairs = BTreeSet::new();
    for (x, vx) in &xs {
        for (y, vy) in &ys {
            if vx.is_empty() || vy.is_empty() {
                continue;
            }
            if vx.iter().any(|&v| vy.iter().all(|&w| p.direction.relates(v, w))) {
                pairs.insert((x.clone(), y.clone()));
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub world: InstanceWorld,
    /// The offending individuals: `[x]`, `[x, y]` or `[x, y, z]`.
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyVerdict {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl PropertyVerdict {
    fn holding() -> Self {
        PropertyVerdict {
            holds: true,
            counterexample: None,
        }
    }

    fn record(&mut self, world: &InstanceWorld, witnesses: Option<Vec<String>>) {
        if let (true, Some(w)) = (self.holds, witnesses) {
            self.holds = false;
            self.counterexample = Some(Counterexample {
                world: world.clone(),
                witnesses: w,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaPropertyReport {
    pub relation: String,
    pub worlds_checked: usize,
    pub irreflexive: PropertyVerdict,
    pub asymmetric: PropertyVerdict,
    pub transitive: PropertyVerdict,
}

fn irreflexivity_violation(pairs: &BTreeSet<(String, String)>) -> Option<Vec<String>> {
    pairs
        .iter()
        .find(|(x, y)| x == y)
        .map(|(x, _)| vec![x.clone()])
}

fn asymmetry_violation(pairs: &BTreeSet<(String, String)>) -> Option<Vec<String>> {
    let mut reflexive = None;
    for (x, y) in pairs {
        if x == y {
            reflexive.get_or_insert_with(|| vec![x.clone(), y.clone()]);
        } else if pairs.contains(&(y.clone(), x.clone())) {
            return Some(vec![x.clone(), y.clone()]);
        }
    }
    reflexive
}

fn transitivity_violation(pairs: &BTreeSet<(String, String)>) -> Option<Vec<String>> {
    for (x, y) in pairs {
        for (y2, z) in pairs.range((y.clone(), String::new())..) {
            if y2 != y {
                break;
            }
            if !pairs.contains(&(x.clone(), z.clone())) {
                return Some(vec![x.clone(), y.clone(), z.clone()]);
            }
        }
    }
    None
}

/// Brute-forces every world in `scope` (ignoring its world limit) and tests
/// irreflexivity, asymmetry and transitivity of `relation`. The first
/// counterexample in canonical world order is kept for each property, except
/// that an asymmetry counterexample relating two distinct individuals is
/// preferred over a reflexive one.
pub fn check_metaproperties(
    model: &Model,
    relation: &str,
    scope: &Scope,
) -> Result<MetaPropertyReport, FinderError> {
    plan(model, relation)?;
    let worlds = all_worlds(model, scope, SearchLimits::default())?;
    let mut report = MetaPropertyReport {
        relation: relation.to_string(),
        worlds_checked: worlds.len(),
        irreflexive: PropertyVerdict::holding(),
        asymmetric: PropertyVerdict::holding(),
        transitive: PropertyVerdict::holding(),
    };
    for w in &worlds {
        let pairs = eval_comparative(w, model, relation)?;
        report.irreflexive.record(w, irreflexivity_violation(&pairs));
        let asym = asymmetry_violation(&pairs);
        let reflexive_only = report
            .asymmetric
            .counterexample
            .as_ref()
            .is_some_and(|c| c.witnesses.first() == c.witnesses.get(1));
        match asym {
            Some(ws) if reflexive_only && ws[0] != ws[1] => {
                report.asymmetric.counterexample = Some(Counterexample {
                    world: w.clone(),
                    witnesses: ws,
                });
            }
            other => report.asymmetric.record(w, other),
        }
        report.transitive.record(w, transitivity_violation(&pairs));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(ps: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        ps.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn violations() {
        assert_eq!(irreflexivity_violation(&pairs(&[("a", "b"), ("c", "c")])), Some(vec!["c".into()]));
        assert_eq!(
            asymmetry_violation(&pairs(&[("a", "a"), ("a", "b"), ("b", "a")])),
            Some(vec!["a".into(), "b".into()])
        );
        assert_eq!(
            asymmetry_violation(&pairs(&[("a", "a")])),
            Some(vec!["a".into(), "a".into()])
        );
        assert_eq!(
            transitivity_violation(&pairs(&[("a", "b"), ("b", "c")])),
            Some(vec!["a".into(), "b".into(), "c".into()])
        );
        assert_eq!(transitivity_violation(&pairs(&[("a", "b"), ("b", "c"), ("a", "c")])), None);
    }
}
