use std::fmt::Write;

use super::InstanceWorld;
use crate::model::{Model, Stereotype};

const LEGEND: &str = "// node shapes: box = object, diamond = relator, hexagon = event, ellipse = mode\n";

fn shape(model: &Model, kind: &str) -> &'static str {
    match model.stereotype(kind) {
        Some(Stereotype::Relator) => "diamond",
        Some(Stereotype::Event) => "hexagon",
        Some(Stereotype::Mode) => "ellipse",
        _ => "box",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_graph(out: &mut String, model: &Model, world: &InstanceWorld, name: &str) {
    let _ = writeln!(out, "digraph {} {{", quote(name));
    for ind in &world.individuals {
        let mut label = ind.id.clone();
        if let Some(types) = world.type_assignments.get(&ind.id) {
            label.push('\n');
            label.push_str(&types.iter().cloned().collect::<Vec<_>>().join(", "));
        }
        for q in world.quality_values.iter().filter(|q| q.bearer == ind.id) {
            let _ = write!(label, "\n{} = {}", q.quality, q.value);
        }
        let _ = writeln!(
            out,
            "  {} [shape={}, label={}];",
            quote(&ind.id),
            shape(model, &ind.kind),
            quote(&label)
        );
    }
    for l in &world.links {
        let _ = writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(&l.source),
            quote(&l.target),
            quote(&l.relation)
        );
    }
    out.push_str("}\n");
}

/// One `digraph` for a single world.
pub fn world_to_dot(model: &Model, world: &InstanceWorld, name: &str) -> String {
    let mut out = String::from(LEGEND);
    write_graph(&mut out, model, world, name);
    out
}

/// Consecutive digraphs `world_0`, `world_1`, ... under one legend header.
pub fn worlds_to_dot(model: &Model, worlds: &[InstanceWorld]) -> String {
    let mut out = String::from(LEGEND);
    for (i, w) in worlds.iter().enumerate() {
        write_graph(&mut out, model, w, &format!("world_{i}"));
    }
    out
}
