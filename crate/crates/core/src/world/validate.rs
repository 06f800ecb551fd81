use std::collections::{BTreeMap, BTreeSet};

use super::{InstanceWorld, Value};
use crate::model::{Model, RelationStereotype, SpaceKind, Stereotype};
use crate::rules::material_sides;

fn is_base(model: &Model, name: &str) -> bool {
    model.stereotype(name).is_some_and(Stereotype::provides_identity)
        && model
            .ancestors(name)
            .iter()
            .all(|a| !model.stereotype(a).is_some_and(Stereotype::provides_identity))
}

/// Checks every invariant of an instance world against `model`; returns a
/// list of violations.
pub fn validate_world(model: &Model, world: &InstanceWorld) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let ids: BTreeSet<&str> = world.individuals.iter().map(|i| i.id.as_str()).collect();
    if ids.len() != world.individuals.len() {
        errs.push("duplicate individual ids".to_string());
    }
    let assigned: BTreeSet<&str> = world.type_assignments.keys().map(String::as_str).collect();
    if assigned != ids {
        errs.push("type assignments do not match the individuals".to_string());
    }
    let empty = BTreeSet::new();
    let types_of = |id: &str| world.type_assignments.get(id).unwrap_or(&empty);

    // Classification.
    for ind in &world.individuals {
        let types = types_of(&ind.id);
        if !is_base(model, &ind.kind) {
            errs.push(format!("{}: `{}` does not provide identity", ind.id, ind.kind));
            continue;
        }
        if !types.contains(&ind.kind) {
            errs.push(format!("{}: does not instantiate its kind", ind.id));
        }
        for t in types {
            let Some(st) = model.stereotype(t) else {
                errs.push(format!("{}: unknown type `{t}`", ind.id));
                continue;
            };
            if st == Stereotype::Quality {
                errs.push(format!("{}: instantiates quality `{t}`", ind.id));
            }
            if t != &ind.kind && is_base(model, t) {
                errs.push(format!("{}: instantiates a second kind `{t}`", ind.id));
            }
            if t != &ind.kind && !model.possible_roots(t).contains(&ind.kind) {
                errs.push(format!("{}: `{t}` cannot classify a `{}`", ind.id, ind.kind));
            }
            for a in model.ancestors(t) {
                if !types.contains(&a) {
                    errs.push(format!("{}: has `{t}` but not its supertype `{a}`", ind.id));
                }
            }
            let c = model.classifier(t).unwrap();
            if (c.is_abstract || st.is_non_sortal())
                && !model.descendants(t).iter().any(|d| types.contains(d))
            {
                errs.push(format!("{}: instantiates `{t}` only directly", ind.id));
            }
        }
    }

    // Role justification.
    for c in model.classifiers() {
        if !c.stereotype.is_relationally_dependent() {
            continue;
        }
        let defining: Vec<&str> = model
            .relations()
            .filter(|r| {
                r.target == c.name
                    && matches!(
                        r.stereotype,
                        RelationStereotype::Mediation | RelationStereotype::Participation
                    )
            })
            .map(|r| r.name.as_str())
            .collect();
        if defining.is_empty() {
            continue;
        }
        for ind in &world.individuals {
            let has = types_of(&ind.id).contains(&c.name);
            let linked = world
                .links
                .iter()
                .any(|l| l.target == ind.id && defining.contains(&l.relation.as_str()));
            if has != linked {
                errs.push(format!(
                    "{}: `{}` membership is not justified by its defining relations",
                    ind.id, c.name
                ));
            }
        }
    }

    // Links and multiplicities.
    for l in &world.links {
        let Some(r) = model.relation(&l.relation) else {
            errs.push(format!("link of unknown relation `{}`", l.relation));
            continue;
        };
        let materialized = matches!(
            r.stereotype,
            RelationStereotype::Mediation
                | RelationStereotype::Participation
                | RelationStereotype::Material
        ) || (r.stereotype == RelationStereotype::Characterization
            && model.stereotype(&r.source) != Some(Stereotype::Quality));
        if !materialized {
            errs.push(format!("`{}` links are not part of worlds", r.name));
        }
        if !types_of(&l.source).contains(&r.source) || !types_of(&l.target).contains(&r.target) {
            errs.push(format!("{} link {} -> {} is ill-typed", r.name, l.source, l.target));
        }
    }
    let unique: BTreeSet<(&str, &str, &str)> = world
        .links
        .iter()
        .map(|l| (l.relation.as_str(), l.source.as_str(), l.target.as_str()))
        .collect();
    if unique.len() != world.links.len() {
        errs.push("duplicate links".to_string());
    }
    for r in model.relations() {
        if matches!(r.stereotype, RelationStereotype::Comparative | RelationStereotype::Internal)
            || (r.stereotype == RelationStereotype::Characterization
                && model.stereotype(&r.source) == Some(Stereotype::Quality))
        {
            continue;
        }
        for ind in &world.individuals {
            let types = types_of(&ind.id);
            if types.contains(&r.source) {
                let n = world.links_of(&r.name).filter(|l| l.source == ind.id).count();
                if !r.target_mult.contains(n) {
                    errs.push(format!("{}: {n} `{}` targets, expected {}", ind.id, r.name, r.target_mult));
                }
            }
            if types.contains(&r.target) {
                let n = world.links_of(&r.name).filter(|l| l.target == ind.id).count();
                if !r.source_mult.contains(n) {
                    errs.push(format!("{}: {n} `{}` sources, expected {}", ind.id, r.name, r.source_mult));
                }
            }
        }
    }

    // Material links are exactly the tuples grounded by relators.
    for r in model.relations().filter(|r| r.stereotype == RelationStereotype::Material) {
        let mut derived: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        if let Some(d) = &r.derived_from {
            let source_meds = material_sides(model, &d.relator, &r.source);
            let target_meds = material_sides(model, &d.relator, &r.target);
            for rel in world.instances_of(&d.relator) {
                let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
                for a in world.links.iter().filter(|l| l.source == rel) {
                    if !source_meds.contains(&a.relation) || !types_of(&a.target).contains(&r.source) {
                        continue;
                    }
                    for b in world.links.iter().filter(|l| l.source == rel) {
                        if target_meds.contains(&b.relation)
                            && types_of(&b.target).contains(&r.target)
                            && (a.relation != b.relation || a.target != b.target)
                        {
                            pairs.insert((a.target.as_str(), b.target.as_str()));
                        }
                    }
                }
                for p in pairs {
                    *derived.entry(p).or_default() += 1;
                }
            }
            for ((x, y), n) in &derived {
                if !d.multiplicity.contains(*n) {
                    errs.push(format!(
                        "{} tuple ({x}, {y}) grounded by {n} relators, expected {}",
                        r.name, d.multiplicity
                    ));
                }
            }
        }
        let actual: BTreeSet<(&str, &str)> = world
            .links_of(&r.name)
            .map(|l| (l.source.as_str(), l.target.as_str()))
            .collect();
        let expected: BTreeSet<(&str, &str)> = derived.keys().copied().collect();
        if actual != expected {
            errs.push(format!("`{}` links differ from the relator-derived tuples", r.name));
        }
    }

    // Generalization sets.
    for g in model.generalization_sets() {
        for ind in &world.individuals {
            let types = types_of(&ind.id);
            let k = g.specifics.iter().filter(|s| types.contains(*s)).count();
            if g.is_disjoint && k > 1 {
                errs.push(format!("{}: violates disjoint `{}`", ind.id, g.name));
            }
            if g.is_complete && types.contains(&g.general) && k == 0 {
                errs.push(format!("{}: violates complete `{}`", ind.id, g.name));
            }
        }
    }

    // Quality values.
    let mut bearers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in model.relations() {
        if r.stereotype == RelationStereotype::Characterization
            && model.stereotype(&r.source) == Some(Stereotype::Quality)
        {
            bearers.entry(r.source.as_str()).or_default().push(r.target.as_str());
        }
    }
    let mut seen = BTreeSet::new();
    for q in &world.quality_values {
        if !seen.insert((q.quality.as_str(), q.bearer.as_str())) {
            errs.push(format!("{}: several values for `{}`", q.bearer, q.quality));
        }
        if !ids.contains(q.bearer.as_str()) {
            errs.push(format!("value for unknown individual {}", q.bearer));
        }
        let in_space = match (model.space(&q.quality).map(|s| &s.kind), &q.value) {
            (Some(SpaceKind::Ordered { lo, hi }), Value::Int(n)) => (lo..=hi).contains(&n),
            (Some(SpaceKind::Nominal(ls)), Value::Label(l)) => ls.contains(l),
            (None, _) => true,
            _ => false,
        };
        if !in_space {
            errs.push(format!("{}: `{}` value {} outside its space", q.bearer, q.quality, q.value));
        }
    }
    for ind in &world.individuals {
        let types = types_of(&ind.id);
        for (q, bs) in &bearers {
            let should = bs.iter().any(|b| types.contains(*b));
            let does = world.quality_value(q, &ind.id).is_some();
            if should != does {
                errs.push(format!(
                    "{}: `{q}` value {}",
                    ind.id,
                    if should { "missing" } else { "on a non-bearer" }
                ));
            }
        }
    }
    for q in &world.quality_values {
        if !bearers.contains_key(q.quality.as_str()) {
            errs.push(format!("`{}` characterizes nothing", q.quality));
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}
