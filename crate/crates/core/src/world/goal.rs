use std::collections::BTreeMap;
use std::fmt;

use super::{FinderError, InstanceWorld};
use crate::model::{is_identifier, Model};

/// A conjunct of a [`Goal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    /// `var : Classifier`
    Instance { var: String, classifier: String },
    /// `relation(source, target)`
    Link {
        relation: String,
        source: String,
        target: String,
    },
}

/// An existentially quantified conjunction over individuals, written
/// `t:Treatment, x:Patient, participatesPatient(t, x)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Goal {
    pub atoms: Vec<Atom>,
}

impl Goal {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Goal { atoms }
    }

    pub fn instance(mut self, var: &str, classifier: &str) -> Self {
        self.atoms.push(Atom::Instance {
            var: var.into(),
            classifier: classifier.into(),
        });
        self
    }

    pub fn link(mut self, relation: &str, source: &str, target: &str) -> Self {
        self.atoms.push(Atom::Link {
            relation: relation.into(),
            source: source.into(),
            target: target.into(),
        });
        self
    }

    pub fn parse(text: &str) -> Result<Goal, FinderError> {
        let bad = |msg: String| FinderError::InvalidGoal(msg);
        let mut atoms = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let (atom, tail) = match rest.find(['(', ',', ':']) {
                Some(i) if rest.as_bytes()[i] == b'(' => {
                    let close = rest.find(')').ok_or_else(|| bad(format!("missing `)` in `{rest}`")))?;
                    let relation = rest[..i].trim();
                    let args: Vec<&str> = rest[i + 1..close].split(',').map(str::trim).collect();
                    let [source, target] = args[..] else {
                        return Err(bad(format!("`{relation}` needs exactly two arguments")));
                    };
                    let atom = Atom::Link {
                        relation: relation.into(),
                        source: source.into(),
                        target: target.into(),
                    };
                    (atom, &rest[close + 1..])
                }
                Some(i) if rest.as_bytes()[i] == b':' => {
                    let var = rest[..i].trim();
                    let after = &rest[i + 1..];
                    let end = after.find(',').unwrap_or(after.len());
                    let atom = Atom::Instance {
                        var: var.into(),
                        classifier: after[..end].trim().into(),
                    };
                    (atom, &after[end..])
                }
                _ => return Err(bad(format!("cannot read atom `{rest}`"))),
            };
            for name in atom_names(&atom) {
                if !is_identifier(name) {
                    return Err(bad(format!("`{name}` is not an identifier")));
                }
            }
            atoms.push(atom);
            rest = tail.trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(bad("trailing `,`".into()));
                }
            } else if !rest.is_empty() {
                return Err(bad(format!("expected `,` before `{rest}`")));
            }
        }
        if atoms.is_empty() {
            return Err(bad("empty goal".into()));
        }
        Ok(Goal { atoms })
    }

    /// Checks that every classifier and relation named exists in `model`
    /// and that every variable is typed.
    pub fn validate(&self, model: &Model) -> Result<(), FinderError> {
        for v in self.variables() {
            let typed = self
                .atoms
                .iter()
                .any(|a| matches!(a, Atom::Instance { var, .. } if var == v));
            if !typed {
                return Err(FinderError::InvalidGoal(format!(
                    "variable `{v}` has no typing atom"
                )));
            }
        }
        for a in &self.atoms {
            match a {
                Atom::Instance { classifier, .. } if model.classifier(classifier).is_none() => {
                    return Err(FinderError::InvalidGoal(format!(
                        "unknown classifier `{classifier}`"
                    )))
                }
                Atom::Link { relation, .. } if model.relation(relation).is_none() => {
                    return Err(FinderError::InvalidGoal(format!(
                        "unknown relation `{relation}`"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = Vec::new();
        for a in &self.atoms {
            let vs: Vec<&str> = match a {
                Atom::Instance { var, .. } => vec![var],
                Atom::Link { source, target, .. } => vec![source, target],
            };
            for v in vs {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars
    }

    /// A satisfying assignment of variables to individual ids, if any.
    pub fn assignment(&self, world: &InstanceWorld) -> Option<BTreeMap<String, String>> {
        let vars = self.variables();
        let ids: Vec<&str> = world.individuals.iter().map(|i| i.id.as_str()).collect();
        let mut binding: Vec<&str> = Vec::with_capacity(vars.len());
        if self.search(world, &vars, &ids, &mut binding) {
            Some(
                vars.iter()
                    .zip(binding)
                    .map(|(v, id)| (v.to_string(), id.to_string()))
                    .collect(),
            )
        } else {
            None
        }
    }

    pub fn holds(&self, world: &InstanceWorld) -> bool {
        self.assignment(world).is_some()
    }

    fn search<'w>(
        &self,
        world: &InstanceWorld,
        vars: &[&str],
        ids: &[&'w str],
        binding: &mut Vec<&'w str>,
    ) -> bool {
        let lookup = |binding: &[&'w str], v: &str| {
            vars.iter().position(|x| *x == v).and_then(|i| binding.get(i).copied())
        };
        // Reject as soon as an atom with all variables bound fails.
        for a in &self.atoms {
            let ok = match a {
                Atom::Instance { var, classifier } => {
                    lookup(binding, var).map(|id| world.is_instance(id, classifier))
                }
                Atom::Link {
                    relation,
                    source,
                    target,
                } => match (lookup(binding, source), lookup(binding, target)) {
                    (Some(s), Some(t)) => Some(world.has_link(relation, s, t)),
                    _ => None,
                },
            };
            if ok == Some(false) {
                return false;
            }
        }
        if binding.len() == vars.len() {
            return true;
        }
        for id in ids {
            binding.push(id);
            if self.search(world, vars, ids, binding) {
                return true;
            }
            binding.pop();
        }
        false
    }
}

fn atom_names(a: &Atom) -> Vec<&str> {
    match a {
        Atom::Instance { var, classifier } => vec![var, classifier],
        Atom::Link {
            relation,
            source,
            target,
        } => vec![relation, source, target],
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match a {
                Atom::Instance { var, classifier } => write!(f, "{var}:{classifier}")?,
                Atom::Link {
                    relation,
                    source,
                    target,
                } => write!(f, "{relation}({source}, {target})")?,
            }
        }
        Ok(())
    }
}
