//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use onto_core::fixtures::HEALTHCARE_RELATOR;
use onto_core::model::{Model, Multiplicity, RelationStereotype};
use onto_core::world::{InstanceWorld, Value};

/// Mutants of the relator fixture, each violating exactly one rule.
pub fn rule_mutants() -> Vec<(&'static str, String)> {
    let base = HEALTHCARE_RELATOR;
    let replace = |from: &str, to: &str| {
        assert!(base.contains(from), "fixture lacks `{from}`");
        base.replacen(from, to, 1)
    };
    let append = |extra: &str| format!("{base}\n{extra}\n");
    vec![
        (
            "R1",
            replace(
                "role Patient specializes UnhealthyPerson",
                "kind Animal\nrole Patient specializes UnhealthyPerson, Animal",
            ),
        ),
        ("R2", append("kind Robot specializes HealthcareProvider")),
        ("R3", append("subkind Adult specializes UnhealthyPerson")),
        ("R4", append("role Visitor specializes Person")),
        (
            "R5",
            replace(
                "mediation treatmentPatient : Treatment [1..*] -- [1..1] Patient",
                "mediation treatmentPatient : Treatment [1..*] -- [0..1] Patient",
            ),
        ),
        (
            "R6",
            replace(
                "HealthcareProvider derivedFrom Treatment [1..*]",
                "HealthcareProvider",
            ),
        ),
        (
            "R7",
            append(
                "kind Animal\nmaterial treats : Animal [0..*] -- [0..*] HealthcareProvider derivedFrom Treatment [1..*]",
            ),
        ),
        ("R8", append("phase HealthyPerson specializes Person")),
        (
            "R9",
            append("comparative largerThan : Organization -- Organization via Severity desc"),
        ),
        (
            "R10",
            append(
                "historicalRole FormerPatient specializes Person\n\
                 mediation treatmentFormer : Treatment [0..*] -- [0..1] FormerPatient",
            ),
        ),
    ]
}

/// Material tuples recomputed from mediation links: `(x, y)` is derived
/// from relator `r` when `r` mediates `x` through a mediation whose mediated
/// type is taxonomically related to the source end, `y` through one related
/// to the target end, and `x`, `y` instantiate the end types. One mediation
/// may serve both ends only for distinct individuals.
pub fn derived_material_links(model: &Model, world: &InstanceWorld) -> BTreeSet<(String, String, String)> {
    let mut out = BTreeSet::new();
    for rel in model.relations() {
        if rel.stereotype != RelationStereotype::Material {
            continue;
        }
        let Some(d) = &rel.derived_from else { continue };
        let meds: Vec<_> = model
            .relations()
            .filter(|m| {
                m.stereotype == RelationStereotype::Mediation
                    && (m.source == d.relator || model.specializes(&d.relator, &m.source))
            })
            .collect();
        for r in world.instances_of(&d.relator) {
            let mediated = |m: &str| -> Vec<String> {
                world
                    .links
                    .iter()
                    .filter(|l| l.relation == m && l.source == r)
                    .map(|l| l.target.clone())
                    .collect()
            };
            let fits = |m: &str, end: &str| model.specializes(m, end) || model.specializes(end, m);
            for ma in meds.iter().filter(|m| fits(&m.target, &rel.source)) {
                for mb in meds.iter().filter(|m| fits(&m.target, &rel.target)) {
                    for x in mediated(&ma.name) {
                        if !world.is_instance(&x, &rel.source) {
                            continue;
                        }
                        for y in mediated(&mb.name) {
                            if world.is_instance(&y, &rel.target) && (ma.name != mb.name || x != y) {
                                out.insert((rel.name.clone(), x.clone(), y));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn material_links(model: &Model, world: &InstanceWorld) -> BTreeSet<(String, String, String)> {
    world
        .links
        .iter()
        .filter(|l| {
            model
                .relation(&l.relation)
                .is_some_and(|r| r.stereotype == RelationStereotype::Material)
        })
        .map(|l| (l.relation.clone(), l.source.clone(), l.target.clone()))
        .collect()
}

/// For a binary relation, how many targets each instance of `source_type`
/// has, and how many sources each instance of `target_type` has.
pub fn fan_counts(
    world: &InstanceWorld,
    relation: &str,
    source_type: &str,
    target_type: &str,
) -> (Vec<usize>, Vec<usize>) {
    let out: Vec<usize> = world
        .instances_of(source_type)
        .map(|x| world.links_of(relation).filter(|l| l.source == x).count())
        .collect();
    let inc: Vec<usize> = world
        .instances_of(target_type)
        .map(|y| world.links_of(relation).filter(|l| l.target == y).count())
        .collect();
    (out, inc)
}

/// Number of relators of `relator_type` mediating each linked `(x, y)`
/// pair of the material relation.
pub fn relators_per_tuple(
    world: &InstanceWorld,
    material: &str,
    relator_type: &str,
    med_a: &str,
    med_b: &str,
) -> Vec<usize> {
    world
        .links_of(material)
        .map(|l| {
            world
                .instances_of(relator_type)
                .filter(|r| {
                    (world.has_link(med_a, r, &l.source) && world.has_link(med_b, r, &l.target))
                        || (world.has_link(med_a, r, &l.target) && world.has_link(med_b, r, &l.source))
                })
                .count()
        })
        .collect()
}

pub fn within(m: Multiplicity, n: usize) -> bool {
    n >= m.min as usize && m.max.is_none_or(|mx| n <= mx as usize)
}

/// Cheap isomorphism invariant used to bucket worlds before brute force.
fn invariant(world: &InstanceWorld) -> Vec<String> {
    let mut parts: Vec<String> = world
        .individuals
        .iter()
        .map(|i| {
            let types = world.type_assignments[&i.id].iter().cloned().collect::<Vec<_>>().join("+");
            let mut out: Vec<&str> = world
                .links
                .iter()
                .filter(|l| l.source == i.id)
                .map(|l| l.relation.as_str())
                .collect();
            out.sort();
            let mut inc: Vec<&str> = world
                .links
                .iter()
                .filter(|l| l.target == i.id)
                .map(|l| l.relation.as_str())
                .collect();
            inc.sort();
            let mut qs: Vec<String> = world
                .quality_values
                .iter()
                .filter(|q| q.bearer == i.id)
                .map(|q| format!("{}={}", q.quality, q.value))
                .collect();
            qs.sort();
            format!("{}|{types}|{}|{}|{}", i.kind, out.join(","), inc.join(","), qs.join(","))
        })
        .collect();
    parts.sort();
    parts
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

type Shape = (
    BTreeMap<String, BTreeSet<String>>,
    BTreeSet<(String, String, String)>,
    BTreeSet<(String, String, Value)>,
);

fn shape(world: &InstanceWorld, rename: &HashMap<String, String>) -> Shape {
    let r = |s: &String| rename.get(s).cloned().unwrap_or_else(|| s.clone());
    (
        world
            .type_assignments
            .iter()
            .map(|(k, v)| (r(k), v.clone()))
            .collect(),
        world
            .links
            .iter()
            .map(|l| (l.relation.clone(), r(&l.source), r(&l.target)))
            .collect(),
        world
            .quality_values
            .iter()
            .map(|q| (q.quality.clone(), r(&q.bearer), q.value.clone()))
            .collect(),
    )
}

/// Whether some kind-preserving renaming of `a`'s individuals yields `b`.
pub fn isomorphic(a: &InstanceWorld, b: &InstanceWorld) -> bool {
    let group = |w: &InstanceWorld| {
        let mut g: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for i in &w.individuals {
            g.entry(i.kind.clone()).or_default().push(i.id.clone());
        }
        g
    };
    let (ga, gb) = (group(a), group(b));
    if ga.keys().ne(gb.keys()) || ga.values().zip(gb.values()).any(|(x, y)| x.len() != y.len()) {
        return false;
    }
    let target = shape(b, &HashMap::new());
    let kinds: Vec<(&Vec<String>, Vec<Vec<String>>)> = ga
        .iter()
        .map(|(k, ids)| (ids, permutations(&gb[k])))
        .collect();
    let mut idx = vec![0usize; kinds.len()];
    loop {
        let mut rename = HashMap::new();
        for (slot, (ids, perms)) in kinds.iter().enumerate() {
            for (from, to) in ids.iter().zip(&perms[idx[slot]]) {
                rename.insert(from.clone(), to.clone());
            }
        }
        if shape(a, &rename) == target {
            return true;
        }
        let mut k = 0;
        loop {
            if k == kinds.len() {
                return false;
            }
            idx[k] += 1;
            if idx[k] < kinds[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Pairs of indices of isomorphic worlds.
pub fn isomorphic_pairs(worlds: &[InstanceWorld]) -> Vec<(usize, usize)> {
    let mut buckets: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (i, w) in worlds.iter().enumerate() {
        buckets.entry(invariant(w)).or_default().push(i);
    }
    let mut out = Vec::new();
    for ids in buckets.values() {
        for (n, &i) in ids.iter().enumerate() {
            for &j in &ids[n + 1..] {
                if isomorphic(&worlds[i], &worlds[j]) {
                    out.push((i, j));
                }
            }
        }
    }
    out.sort();
    out
}
