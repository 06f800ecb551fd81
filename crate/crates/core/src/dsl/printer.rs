use std::fmt::Write;

use crate::model::{Model, RelationStereotype, SpaceKind};

/// Renders a model back to DSL text. Declarations come out grouped by
/// category and sorted by name; spans are not preserved.
pub fn to_dsl(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", model.name());

    let mut classifiers: Vec<_> = model.classifiers().collect();
    classifiers.sort_by(|a, b| (a.stereotype, &a.name).cmp(&(b.stereotype, &b.name)));
    if !classifiers.is_empty() {
        out.push('\n');
    }
    for c in classifiers {
        if c.is_abstract {
            out.push_str("abstract ");
        }
        let _ = write!(out, "{} {}", c.stereotype, c.name);
        if !c.parents.is_empty() {
            let parents: Vec<&str> = c.parents.iter().map(String::as_str).collect();
            let _ = write!(out, " specializes {}", parents.join(", "));
        }
        out.push('\n');
    }

    let spaces: Vec<_> = model.spaces().collect();
    if !spaces.is_empty() {
        out.push('\n');
    }
    for s in spaces {
        match &s.kind {
            SpaceKind::Ordered { lo, hi } => {
                let _ = writeln!(out, "space {} ordered {lo}..{hi}", s.owner);
            }
            SpaceKind::Nominal(labels) => {
                let _ = writeln!(out, "space {} nominal {{{}}}", s.owner, labels.join(", "));
            }
        }
    }

    let relations: Vec<_> = model.relations().collect();
    if !relations.is_empty() {
        out.push('\n');
    }
    for r in relations {
        if r.stereotype == RelationStereotype::Comparative {
            let _ = write!(out, "comparative {} : {} -- {}", r.name, r.source, r.target);
        } else {
            let _ = write!(
                out,
                "{} {} : {} {} -- {} {}",
                r.stereotype, r.name, r.source, r.source_mult, r.target_mult, r.target
            );
        }
        if let Some(d) = &r.derived_from {
            let _ = write!(out, " derivedFrom {} {}", d.relator, d.multiplicity);
        }
        if let Some(q) = &r.via_quality {
            let _ = write!(out, " via {} {}", q.quality, q.direction);
        }
        out.push('\n');
    }

    let gensets: Vec<_> = model.generalization_sets().collect();
    if !gensets.is_empty() {
        out.push('\n');
    }
    for g in gensets {
        let _ = write!(out, "genset {}", g.name);
        if g.is_disjoint {
            out.push_str(" disjoint");
        }
        if g.is_complete {
            out.push_str(" complete");
        }
        let specifics: Vec<&str> = g.specifics.iter().map(String::as_str).collect();
        let _ = writeln!(
            out,
            " general {} specifics {}",
            g.general,
            specifics.join(", ")
        );
    }
    out
}
