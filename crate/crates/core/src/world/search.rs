//! Layered backtracking search over individuals.
//!
//! Identity-providing base types are ordered so that every base appears after
//! the bases its outgoing dependence links may point at. Individuals of a
//! base are chosen as a multiset of descriptors (free subtypes, quality
//! values, link targets), which removes symmetry within the layer; the
//! remaining symmetry is removed by a canonical key computed per world.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;

use super::{FinderError, InstanceWorld, Scope, SearchLimits, Value};
use crate::model::{Model, Multiplicity, RelationStereotype, Stereotype};
use crate::rules::material_sides;

type Mask = u128;

const MAX_TYPES: usize = 128;
const MAX_FREE_TYPES: usize = 16;

fn bit(i: usize) -> Mask {
    1 << i
}

fn has(m: Mask, i: usize) -> bool {
    m >> i & 1 == 1
}

fn bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

/// How membership in a classifier is decided for an individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Identity provider: the individual's own base.
    Base,
    /// Chosen freely (subkinds, phases, roles without a defining relation).
    Free,
    /// Held exactly when the individual is the target of a defining link.
    Linked,
    /// Held exactly when some subtype is held.
    Closure,
    /// Never instantiated by individuals (qualities).
    Inert,
}

#[derive(Debug)]
pub(crate) struct BaseSpec {
    pub ty: usize,
    pub name: String,
    pub count: usize,
    pub instantiable: Mask,
    pub free_options: Vec<Mask>,
    pub out_rels: Vec<usize>,
    pub quality_slots: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct LinkRel {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub source_mult: Multiplicity,
    pub target_mult: Multiplicity,
    pub defining: bool,
    pub source_bases: Vec<usize>,
    pub target_bases: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct QualityChar {
    pub quality: String,
    pub bearer: usize,
    pub values: Vec<Value>,
}

#[derive(Debug)]
pub(crate) struct MaterialRel {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub source_mult: Multiplicity,
    pub target_mult: Multiplicity,
    pub relator: usize,
    pub derivation: Multiplicity,
    /// Mediations whose mediated type fits the source end.
    pub source_meds: Vec<usize>,
    /// Mediations whose mediated type fits the target end.
    pub target_meds: Vec<usize>,
}

#[derive(Debug)]
struct GensetSpec {
    general: usize,
    specifics: Mask,
    disjoint: bool,
    complete: bool,
}

#[derive(Debug)]
pub(crate) struct Compiled {
    pub names: Vec<String>,
    ancestors: Vec<Mask>,
    descendants: Vec<Mask>,
    mode: Vec<Mode>,
    abstract_: Vec<bool>,
    free_mask: Mask,
    linked_mask: Mask,
    base_mask: Mask,
    pub bases: Vec<BaseSpec>,
    pub link_rels: Vec<LinkRel>,
    pub quality_chars: Vec<QualityChar>,
    pub materials: Vec<MaterialRel>,
    gensets: Vec<GensetSpec>,
    caps: Vec<(usize, usize)>,
    /// Link relations whose source individuals are all placed once the base
    /// at this position is complete.
    complete_at: Vec<Vec<usize>>,
    /// Whether a later base may link to individuals of this base.
    referenced: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Desc {
    free_idx: u32,
    free: Mask,
    values: Vec<Option<u16>>,
    targets: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
struct Ind {
    base: usize,
    desc: Desc,
}

/// Per base, per individual, the canonical descriptor words.
type Key = Vec<Vec<Vec<u32>>>;

struct Evaluated {
    types: Vec<Mask>,
    material_links: Vec<Vec<(usize, usize)>>,
}

fn subsets_with_size(items: &[u32], m: Multiplicity) -> Vec<Vec<u32>> {
    let max = m.max.map_or(items.len(), |x| (x as usize).min(items.len()));
    let min = m.min as usize;
    let mut out = Vec::new();
    if min > max {
        return out;
    }
    let mut cur = Vec::new();
    fn rec(items: &[u32], start: usize, min: usize, max: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() >= min {
            out.push(cur.clone());
        }
        if cur.len() == max {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i + 1, min, max, cur, out);
            cur.pop();
        }
    }
    rec(items, 0, min, max, &mut cur, &mut out);
    out
}

impl Compiled {
    pub(crate) fn new(model: &Model, scope: &Scope, limits: SearchLimits) -> Result<Compiled, FinderError> {
        let names: Vec<String> = model.classifiers().map(|c| c.name.clone()).collect();
        if names.len() > MAX_TYPES {
            return Err(FinderError::Unsupported(format!(
                "more than {MAX_TYPES} classifiers"
            )));
        }
        let index: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mask_of = |set: &BTreeSet<String>| -> Mask {
            set.iter().filter_map(|n| index.get(n.as_str())).fold(0, |m, &i| m | bit(i))
        };
        let ancestors: Vec<Mask> = names.iter().map(|n| mask_of(&model.ancestors(n))).collect();
        let descendants: Vec<Mask> = (0..names.len())
            .map(|i| (0..names.len()).filter(|&j| has(ancestors[j], i)).fold(0, |m, j| m | bit(j)))
            .collect();
        let stereo: Vec<Stereotype> = names.iter().map(|n| model.stereotype(n).unwrap()).collect();

        let defining_targets: BTreeSet<&str> = model
            .relations()
            .filter(|r| {
                matches!(
                    r.stereotype,
                    RelationStereotype::Mediation | RelationStereotype::Participation
                )
            })
            .map(|r| r.target.as_str())
            .collect();

        let mode: Vec<Mode> = (0..names.len())
            .map(|i| {
                let s = stereo[i];
                if s.provides_identity() && bits(ancestors[i]).all(|a| !stereo[a].provides_identity()) {
                    Mode::Base
                } else if s == Stereotype::Quality {
                    Mode::Inert
                } else if s.is_relationally_dependent() && defining_targets.contains(names[i].as_str()) {
                    Mode::Linked
                } else if s.is_non_sortal() {
                    Mode::Closure
                } else {
                    Mode::Free
                }
            })
            .collect();
        let mask_where = |f: &dyn Fn(usize) -> bool| (0..names.len()).filter(|&i| f(i)).fold(0, |m, i| m | bit(i));
        let free_mask = mask_where(&|i| mode[i] == Mode::Free);
        let linked_mask = mask_where(&|i| mode[i] == Mode::Linked);
        let base_mask = mask_where(&|i| mode[i] == Mode::Base);
        let abstract_: Vec<bool> = model
            .classifiers()
            .map(|c| c.is_abstract || c.stereotype.is_non_sortal())
            .collect();

        let base_types: Vec<usize> = (0..names.len()).filter(|&i| mode[i] == Mode::Base).collect();
        let roots: Vec<BTreeSet<String>> = names.iter().map(|n| model.possible_roots(n)).collect();
        let bases_for = |t: usize| -> Vec<usize> {
            base_types
                .iter()
                .filter(|&&b| b == t || roots[t].contains(&names[b]))
                .copied()
                .collect()
        };

        let mut link_rels = Vec::new();
        let mut quality_chars = Vec::new();
        for r in model.relations() {
            let dependence = match r.stereotype {
                RelationStereotype::Mediation | RelationStereotype::Participation => true,
                RelationStereotype::Characterization => {
                    model.stereotype(&r.source) != Some(Stereotype::Quality)
                }
                _ => false,
            };
            let (s, t) = (index[r.source.as_str()], index[r.target.as_str()]);
            if dependence {
                link_rels.push(LinkRel {
                    name: r.name.clone(),
                    source: s,
                    target: t,
                    source_mult: r.source_mult,
                    target_mult: r.target_mult,
                    defining: r.stereotype != RelationStereotype::Characterization
                        && mode[t] == Mode::Linked,
                    source_bases: bases_for(s),
                    target_bases: bases_for(t),
                });
            } else if r.stereotype == RelationStereotype::Characterization {
                if mode[t] == Mode::Inert {
                    continue;
                }
                quality_chars.push(QualityChar {
                    quality: r.source.clone(),
                    bearer: t,
                    values: scope.values_for(model, &r.source),
                });
            }
        }
        if quality_chars.iter().any(|q| q.values.len() > u16::MAX as usize) {
            return Err(FinderError::ScopeTooLarge("too many quality values".into()));
        }

        let rel_index: BTreeMap<&str, usize> =
            link_rels.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();
        let materials: Vec<MaterialRel> = model
            .relations()
            .filter(|r| r.stereotype == RelationStereotype::Material)
            .filter_map(|r| {
                let d = r.derived_from.as_ref()?;
                let relator = *index.get(d.relator.as_str())?;
                Some(MaterialRel {
                    name: r.name.clone(),
                    source: index[r.source.as_str()],
                    target: index[r.target.as_str()],
                    source_mult: r.source_mult,
                    target_mult: r.target_mult,
                    relator,
                    derivation: d.multiplicity,
                    source_meds: material_sides(model, &d.relator, &r.source)
                        .iter()
                        .filter_map(|m| rel_index.get(m.as_str()).copied())
                        .collect(),
                    target_meds: material_sides(model, &d.relator, &r.target)
                        .iter()
                        .filter_map(|m| rel_index.get(m.as_str()).copied())
                        .collect(),
                })
            })
            .collect();

        // Order bases so that link targets precede link sources.
        let mut deps: BTreeMap<usize, BTreeSet<usize>> =
            base_types.iter().map(|&b| (b, BTreeSet::new())).collect();
        for r in &link_rels {
            for &s in &r.source_bases {
                for &t in &r.target_bases {
                    if s == t {
                        return Err(FinderError::Unsupported(format!(
                            "relation `{}` links individuals of `{}` to each other",
                            r.name, names[s]
                        )));
                    }
                    deps.get_mut(&s).unwrap().insert(t);
                }
            }
        }
        let mut order: Vec<usize> = Vec::new();
        let mut done: BTreeSet<usize> = BTreeSet::new();
        while order.len() < base_types.len() {
            let ready: Vec<usize> = base_types
                .iter()
                .copied()
                .filter(|b| !done.contains(b) && deps[b].iter().all(|d| done.contains(d)))
                .collect();
            if ready.is_empty() {
                return Err(FinderError::Unsupported("cyclic dependence between identity-providing types".into()));
            }
            let mut layer: Vec<usize> = ready;
            layer.sort_by(|a, b| names[*a].cmp(&names[*b]));
            for b in layer {
                done.insert(b);
                order.push(b);
            }
        }
        let pos_of: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, &b)| (b, p)).collect();
        for r in &mut link_rels {
            r.source_bases = r.source_bases.iter().map(|b| pos_of[b]).collect();
            r.target_bases = r.target_bases.iter().map(|b| pos_of[b]).collect();
        }

        let gensets: Vec<GensetSpec> = model
            .generalization_sets()
            .map(|g| GensetSpec {
                general: index[g.general.as_str()],
                specifics: g.specifics.iter().fold(0, |m, s| m | bit(index[s.as_str()])),
                disjoint: g.is_disjoint,
                complete: g.is_complete,
            })
            .collect();

        let mut bases = Vec::new();
        for (pos, &b) in order.iter().enumerate() {
            let count = scope.count_for(&names[b]);
            if count > limits.max_per_classifier {
                return Err(FinderError::ScopeTooLarge(format!(
                    "{} individuals of `{}` exceeds the limit of {}",
                    count, names[b], limits.max_per_classifier
                )));
            }
            let instantiable = bit(b)
                | (0..names.len())
                    .filter(|&t| mode[t] != Mode::Inert && roots[t].contains(&names[b]))
                    .fold(0, |m, t| m | bit(t));
            let free: Vec<usize> = bits(instantiable & free_mask).collect();
            if free.len() > MAX_FREE_TYPES {
                return Err(FinderError::Unsupported(format!(
                    "`{}` has more than {MAX_FREE_TYPES} freely chosen subtypes",
                    names[b]
                )));
            }
            let mut free_options = Vec::new();
            for sel in 0u32..(1 << free.len()) {
                let m: Mask = free
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| sel >> k & 1 == 1)
                    .fold(0, |m, (_, &t)| m | bit(t));
                let closed = bits(m).all(|t| ancestors[t] & free_mask & !m == 0);
                let disjoint_ok = gensets
                    .iter()
                    .all(|g| !g.disjoint || (m & g.specifics).count_ones() <= 1);
                if closed && disjoint_ok {
                    free_options.push(m);
                }
            }
            free_options.sort_by_key(|m| (m.count_ones(), *m));
            let out_rels = (0..link_rels.len())
                .filter(|&r| link_rels[r].source_bases.contains(&pos))
                .collect();
            let quality_slots = (0..quality_chars.len())
                .filter(|&q| has(instantiable, quality_chars[q].bearer))
                .collect();
            bases.push(BaseSpec {
                ty: b,
                name: names[b].clone(),
                count,
                instantiable,
                free_options,
                out_rels,
                quality_slots,
            });
        }

        let mut complete_at = vec![Vec::new(); bases.len()];
        for (i, r) in link_rels.iter().enumerate() {
            if let Some(&last) = r.source_bases.iter().max() {
                complete_at[last].push(i);
            }
        }
        let mut referenced = vec![false; bases.len()];
        for r in &link_rels {
            for &t in &r.target_bases {
                referenced[t] = true;
            }
        }

        let caps = scope
            .per_classifier
            .iter()
            .filter_map(|(n, &c)| index.get(n.as_str()).map(|&i| (i, c)))
            .filter(|&(i, _)| mode[i] != Mode::Base)
            .collect();

        Ok(Compiled {
            names,
            ancestors,
            descendants,
            mode,
            abstract_,
            free_mask,
            linked_mask,
            base_mask,
            bases,
            link_rels,
            quality_chars,
            materials,
            gensets,
            caps,
            complete_at,
            referenced,
        })
    }

    fn closure(&self, m: Mask) -> Mask {
        bits(m).fold(m, |acc, t| acc | self.ancestors[t])
    }

    fn known_types(&self, ind: &Ind) -> Mask {
        self.closure(bit(self.bases[ind.base].ty) | ind.desc.free)
    }

    fn target_compatible(&self, y: &Ind, t: usize) -> bool {
        let base = &self.bases[y.base];
        if !has(base.instantiable, t) {
            return false;
        }
        match self.mode[t] {
            Mode::Base => base.ty == t,
            Mode::Free => has(y.desc.free, t),
            Mode::Linked => self.ancestors[t] & self.free_mask & !y.desc.free == 0,
            Mode::Closure => true,
            Mode::Inert => false,
        }
    }

    /// Descriptor options for a new individual of the base at `pos`, given
    /// the individuals already placed.
    fn options(&self, pos: usize, inds: &[Ind]) -> Vec<Desc> {
        let base = &self.bases[pos];
        let mut out = Vec::new();
        for (fi, &free) in base.free_options.iter().enumerate() {
            let known = self.closure(bit(base.ty) | free);
            let mut rel_choices: Vec<Vec<Vec<u32>>> = Vec::new();
            for &r in &base.out_rels {
                let rel = &self.link_rels[r];
                if !has(known, rel.source) {
                    rel_choices.push(vec![Vec::new()]);
                    continue;
                }
                let candidates: Vec<u32> = inds
                    .iter()
                    .enumerate()
                    .filter(|(_, y)| rel.target_bases.contains(&y.base) && self.target_compatible(y, rel.target))
                    .map(|(i, _)| i as u32)
                    .collect();
                rel_choices.push(subsets_with_size(&candidates, rel.target_mult));
            }
            let mut value_choices: Vec<Vec<Option<u16>>> = Vec::new();
            for &q in &base.quality_slots {
                let qc = &self.quality_chars[q];
                let n = qc.values.len() as u16;
                let choices: Vec<Option<u16>> = if has(known, qc.bearer) {
                    (0..n).map(Some).collect()
                } else if matches!(self.mode[qc.bearer], Mode::Linked | Mode::Closure) {
                    std::iter::once(None).chain((0..n).map(Some)).collect()
                } else {
                    vec![None]
                };
                value_choices.push(choices);
            }
            if rel_choices.iter().any(Vec::is_empty) || value_choices.iter().any(Vec::is_empty) {
                continue;
            }
            let mut targets_prod: Vec<Vec<Vec<u32>>> = vec![Vec::new()];
            for choices in &rel_choices {
                targets_prod = targets_prod
                    .into_iter()
                    .flat_map(|prefix| {
                        choices.iter().map(move |c| {
                            let mut p = prefix.clone();
                            p.push(c.clone());
                            p
                        })
                    })
                    .collect();
            }
            let mut values_prod: Vec<Vec<Option<u16>>> = vec![Vec::new()];
            for choices in &value_choices {
                values_prod = values_prod
                    .into_iter()
                    .flat_map(|prefix| {
                        choices.iter().map(move |c| {
                            let mut p = prefix.clone();
                            p.push(*c);
                            p
                        })
                    })
                    .collect();
            }
            for targets in &targets_prod {
                for values in &values_prod {
                    out.push(Desc {
                        free_idx: fi as u32,
                        free,
                        values: values.clone(),
                        targets: targets.clone(),
                    });
                }
            }
        }
        out
    }

    /// Checks source-side multiplicities of relations whose sources are all
    /// placed once the base at `pos` is complete.
    fn layer_ok(&self, pos: usize, inds: &[Ind]) -> bool {
        for &r in &self.complete_at[pos] {
            let rel = &self.link_rels[r];
            let mut incoming = vec![0usize; inds.len()];
            for x in inds {
                if let Some(k) = self.bases[x.base].out_rels.iter().position(|&o| o == r) {
                    for &y in &x.desc.targets[k] {
                        incoming[y as usize] += 1;
                    }
                }
            }
            for (y, ind) in inds.iter().enumerate() {
                let member = match self.mode[rel.target] {
                    Mode::Base | Mode::Free => has(self.known_types(ind), rel.target),
                    Mode::Linked => rel.defining && incoming[y] > 0,
                    _ => false,
                };
                if member && !rel.source_mult.contains(incoming[y]) {
                    return false;
                }
            }
        }
        true
    }

    /// Full validation; returns the derived types and material links.
    fn evaluate_inds(&self, inds: &[Ind]) -> Option<Evaluated> {
        let n = inds.len();
        let mut linked = vec![0 as Mask; n];
        for x in inds {
            let base = &self.bases[x.base];
            for (k, &r) in base.out_rels.iter().enumerate() {
                let rel = &self.link_rels[r];
                if rel.defining {
                    for &y in &x.desc.targets[k] {
                        linked[y as usize] |= bit(rel.target);
                    }
                }
            }
        }
        let mut types = Vec::with_capacity(n);
        for (i, x) in inds.iter().enumerate() {
            let base = &self.bases[x.base];
            let t = self.closure(bit(base.ty) | x.desc.free | linked[i]);
            if t & !base.instantiable != 0
                || t & self.base_mask != bit(base.ty)
                || t & self.free_mask & !x.desc.free != 0
                || t & self.linked_mask & !linked[i] != 0
            {
                return None;
            }
            if bits(t).any(|c| self.abstract_[c] && t & self.descendants[c] == 0) {
                return None;
            }
            for g in &self.gensets {
                let k = (t & g.specifics).count_ones();
                if (g.disjoint && k > 1) || (g.complete && has(t, g.general) && k == 0) {
                    return None;
                }
            }
            types.push(t);
        }

        let mut incoming = vec![vec![0usize; n]; self.link_rels.len()];
        for x in inds {
            let base = &self.bases[x.base];
            for (k, &r) in base.out_rels.iter().enumerate() {
                let rel = &self.link_rels[r];
                if !x.desc.targets[k].is_empty() && !has(self.known_types(x), rel.source) {
                    return None;
                }
                for &y in &x.desc.targets[k] {
                    if !has(types[y as usize], rel.target) {
                        return None;
                    }
                    incoming[r][y as usize] += 1;
                }
            }
        }
        for (r, rel) in self.link_rels.iter().enumerate() {
            for y in 0..n {
                if has(types[y], rel.target) && !rel.source_mult.contains(incoming[r][y]) {
                    return None;
                }
            }
        }
        for (i, x) in inds.iter().enumerate() {
            let base = &self.bases[x.base];
            for (k, &q) in base.quality_slots.iter().enumerate() {
                if has(types[i], self.quality_chars[q].bearer) != x.desc.values[k].is_some() {
                    return None;
                }
            }
        }

        let mut material_links = Vec::with_capacity(self.materials.len());
        for m in &self.materials {
            let mut grounds: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for (ri, r) in inds.iter().enumerate() {
                if !has(types[ri], m.relator) {
                    continue;
                }
                let base = &self.bases[r.base];
                let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
                for (ka, ra) in base.out_rels.iter().enumerate() {
                    if !m.source_meds.contains(ra) {
                        continue;
                    }
                    for (kb, rb) in base.out_rels.iter().enumerate() {
                        if !m.target_meds.contains(rb) {
                            continue;
                        }
                        for &x in &r.desc.targets[ka] {
                            for &y in &r.desc.targets[kb] {
                                let (x, y) = (x as usize, y as usize);
                                if (ka != kb || x != y)
                                    && has(types[x], m.source)
                                    && has(types[y], m.target)
                                {
                                    pairs.insert((x, y));
                                }
                            }
                        }
                    }
                }
                for p in pairs {
                    *grounds.entry(p).or_default() += 1;
                }
            }
            if grounds.values().any(|&c| !m.derivation.contains(c)) {
                return None;
            }
            let mut out_deg = vec![0usize; n];
            let mut in_deg = vec![0usize; n];
            for &(x, y) in grounds.keys() {
                out_deg[x] += 1;
                in_deg[y] += 1;
            }
            for i in 0..n {
                if has(types[i], m.source) && !m.target_mult.contains(out_deg[i]) {
                    return None;
                }
                if has(types[i], m.target) && !m.source_mult.contains(in_deg[i]) {
                    return None;
                }
            }
            material_links.push(grounds.into_keys().collect());
        }

        for &(t, cap) in &self.caps {
            if types.iter().filter(|&&m| has(m, t)).count() > cap {
                return None;
            }
        }
        Some(Evaluated {
            types,
            material_links,
        })
    }

    fn encode(&self, ind: &Ind, labels: &[u32]) -> Vec<u32> {
        let mut w = vec![ind.desc.free_idx];
        w.extend(ind.desc.values.iter().map(|v| v.map_or(0, |v| v as u32 + 1)));
        for ts in &ind.desc.targets {
            w.push(ts.len() as u32);
            let mut ls: Vec<u32> = ts.iter().map(|&y| labels[y as usize]).collect();
            ls.sort_unstable();
            w.extend(ls);
        }
        w
    }

    fn canon_rec(&self, pos: usize, inds: &[Ind], starts: &[usize], labels: &mut [u32]) -> Key {
        if pos == self.bases.len() {
            return Vec::new();
        }
        let range = starts[pos]..starts[pos + 1];
        let mut descs: Vec<(Vec<u32>, usize)> =
            range.map(|i| (self.encode(&inds[i], labels), i)).collect();
        descs.sort();
        let words: Vec<Vec<u32>> = descs.iter().map(|(w, _)| w.clone()).collect();
        let order: Vec<usize> = descs.iter().map(|(_, i)| *i).collect();
        let label = |p: usize| ((pos as u32) << 16) | p as u32;

        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut s = 0;
        for e in 1..=order.len() {
            if e == order.len() || words[e] != words[s] {
                if e - s > 1 {
                    groups.push((s, e));
                }
                s = e;
            }
        }

        let mut rest_best: Option<Key> = None;
        let mut perm = order.clone();
        if !self.referenced[pos] || groups.is_empty() {
            for (p, &i) in perm.iter().enumerate() {
                labels[i] = label(p);
            }
            rest_best = Some(self.canon_rec(pos + 1, inds, starts, labels));
        } else {
            // Try every arrangement of each tie group.
            loop {
                for (p, &i) in perm.iter().enumerate() {
                    labels[i] = label(p);
                }
                let rest = self.canon_rec(pos + 1, inds, starts, labels);
                if rest_best.as_ref().is_none_or(|b| rest < *b) {
                    rest_best = Some(rest);
                }
                let mut advanced = false;
                for &(a, b) in &groups {
                    if next_permutation(&mut perm[a..b]) {
                        advanced = true;
                        break;
                    }
                }
                if !advanced {
                    break;
                }
            }
        }
        let mut key = vec![words];
        key.extend(rest_best.unwrap_or_default());
        key
    }

    fn canonical_key(&self, inds: &[Ind]) -> Key {
        let starts = self.starts(inds);
        let mut labels = vec![u32::MAX; inds.len()];
        self.canon_rec(0, inds, &starts, &mut labels)
    }

    fn starts(&self, inds: &[Ind]) -> Vec<usize> {
        let mut starts = vec![0; self.bases.len() + 1];
        for x in inds {
            starts[x.base + 1] += 1;
        }
        for p in 0..self.bases.len() {
            starts[p + 1] += starts[p];
        }
        starts
    }

    fn decode(&self, key: &Key) -> Vec<Ind> {
        let mut starts = vec![0usize];
        for words in key {
            starts.push(starts.last().unwrap() + words.len());
        }
        let mut inds = Vec::new();
        for (pos, words) in key.iter().enumerate() {
            let base = &self.bases[pos];
            for w in words {
                let free_idx = w[0];
                let mut at = 1;
                let values = w[at..at + base.quality_slots.len()]
                    .iter()
                    .map(|&v| v.checked_sub(1).map(|v| v as u16))
                    .collect();
                at += base.quality_slots.len();
                let mut targets = Vec::new();
                for _ in &base.out_rels {
                    let len = w[at] as usize;
                    at += 1;
                    let ts: Vec<u32> = w[at..at + len]
                        .iter()
                        .map(|&l| (starts[(l >> 16) as usize] + (l & 0xffff) as usize) as u32)
                        .collect();
                    at += len;
                    targets.push(ts);
                }
                inds.push(Ind {
                    base: pos,
                    desc: Desc {
                        free_idx,
                        free: base.free_options[free_idx as usize],
                        values,
                        targets,
                    },
                });
            }
        }
        inds
    }

    fn to_world(&self, inds: &[Ind], eval: &Evaluated) -> InstanceWorld {
        let starts = self.starts(inds);
        let ids: Vec<String> = inds
            .iter()
            .enumerate()
            .map(|(i, x)| format!("{}_{}", self.bases[x.base].name, i - starts[x.base]))
            .collect();
        // Output individuals grouped by base name.
        let mut order: Vec<usize> = (0..inds.len()).collect();
        order.sort_by(|&a, &b| {
            self.bases[inds[a].base]
                .name
                .cmp(&self.bases[inds[b].base].name)
                .then(a.cmp(&b))
        });
        let mut rank = vec![0; inds.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }

        let mut w = InstanceWorld::new();
        for &i in &order {
            let kind = &self.bases[inds[i].base].name;
            let types = bits(eval.types[i]).map(|t| self.names[t].clone());
            w.add_individual(&ids[i], kind, types);
        }
        let mut links: Vec<(&str, usize, usize)> = Vec::new();
        for (x, ind) in inds.iter().enumerate() {
            let base = &self.bases[ind.base];
            for (k, &r) in base.out_rels.iter().enumerate() {
                for &y in &ind.desc.targets[k] {
                    links.push((&self.link_rels[r].name, x, y as usize));
                }
            }
        }
        for (m, pairs) in self.materials.iter().zip(&eval.material_links) {
            for &(x, y) in pairs {
                links.push((&m.name, x, y));
            }
        }
        links.sort_by_key(|&(r, x, y)| (r, rank[x], rank[y]));
        for (r, x, y) in links {
            w.add_link(r, &ids[x], &ids[y]);
        }
        let mut qvs: Vec<(&str, usize, &Value)> = Vec::new();
        for (i, x) in inds.iter().enumerate() {
            let base = &self.bases[x.base];
            for (k, &q) in base.quality_slots.iter().enumerate() {
                if let Some(v) = x.desc.values[k] {
                    let qc = &self.quality_chars[q];
                    qvs.push((&qc.quality, i, &qc.values[v as usize]));
                }
            }
        }
        qvs.sort_by_key(|&(q, i, _)| (q, rank[i]));
        for (q, i, v) in qvs {
            w.set_quality(q, &ids[i], v.clone());
        }
        w
    }
}

fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        xs.reverse();
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

struct Run<'a> {
    c: &'a Compiled,
    nodes: AtomicU64,
    max_nodes: u64,
    aborted: AtomicBool,
}

impl Run<'_> {
    fn tick(&self) -> bool {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed);
        if n >= self.max_nodes {
            self.aborted.store(true, Ordering::Relaxed);
        }
        !self.aborted.load(Ordering::Relaxed)
    }

    /// Calls `f` with every valid completion of the base at `pos`.
    fn layer(
        &self,
        pos: usize,
        opts: &[Desc],
        min_opt: usize,
        placed: usize,
        inds: &mut Vec<Ind>,
        f: &mut dyn FnMut(&mut Vec<Ind>),
    ) {
        if !self.tick() {
            return;
        }
        if self.c.layer_ok(pos, inds) {
            f(inds);
        }
        if placed < self.c.bases[pos].count {
            for o in min_opt..opts.len() {
                inds.push(Ind {
                    base: pos,
                    desc: opts[o].clone(),
                });
                self.layer(pos, opts, o, placed + 1, inds, f);
                inds.pop();
            }
        }
    }

    fn completions(&self, pos: usize, inds: &mut Vec<Ind>, f: &mut dyn FnMut(&mut Vec<Ind>)) {
        let opts = self.c.options(pos, inds);
        self.layer(pos, &opts, 0, 0, inds, f);
    }

    fn descend(&self, pos: usize, inds: &mut Vec<Ind>, out: &mut HashSet<Key>) {
        if pos == self.c.bases.len() {
            if self.tick() && self.c.evaluate_inds(inds).is_some() {
                out.insert(self.c.canonical_key(inds));
            }
            return;
        }
        self.completions(pos, inds, &mut |inds| self.descend(pos + 1, inds, out));
    }
}

pub(crate) fn enumerate(
    model: &Model,
    scope: &Scope,
    limits: SearchLimits,
) -> Result<Vec<InstanceWorld>, FinderError> {
    let c = Compiled::new(model, scope, limits)?;
    let run = Run {
        c: &c,
        nodes: AtomicU64::new(0),
        max_nodes: limits.max_nodes,
        aborted: AtomicBool::new(false),
    };

    // Expand leading layers breadth-first to get enough independent prefixes.
    let target = rayon::current_num_threads().max(1) * 8;
    let mut prefixes: Vec<Vec<Ind>> = vec![Vec::new()];
    let mut pos = 0;
    while pos < c.bases.len() && prefixes.len() < target {
        let mut next = Vec::new();
        for mut p in prefixes {
            run.completions(pos, &mut p, &mut |inds| next.push(inds.clone()));
        }
        prefixes = next;
        pos += 1;
    }

    let keys: BTreeSet<Key> = prefixes
        .into_par_iter()
        .map(|mut p| {
            let mut out = HashSet::new();
            run.descend(pos, &mut p, &mut out);
            out
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        })
        .into_iter()
        .collect();

    if run.aborted.load(Ordering::Relaxed) {
        return Err(FinderError::ScopeTooLarge(format!(
            "search exceeded {} nodes",
            limits.max_nodes
        )));
    }

    let mut worlds: Vec<(usize, usize, Key, InstanceWorld)> = keys
        .into_iter()
        .map(|key| {
            let inds = c.decode(&key);
            let eval = c
                .evaluate_inds(&inds)
                .expect("canonical relabeling preserves validity");
            let w = c.to_world(&inds, &eval);
            (w.individuals.len(), w.links.len(), key, w)
        })
        .collect();
    worlds.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    Ok(worlds.into_iter().map(|t| t.3).collect())
}
