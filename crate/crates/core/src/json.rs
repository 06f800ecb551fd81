//! Deterministic JSON interchange form (`.onto.json`) for models.
//!
//! Object keys are emitted in sorted order and every declaration list is
//! sorted by name, so structurally equal models serialize to identical bytes.

use std::collections::BTreeSet;

use serde_json::{Map, Value};

use crate::dsl::ParseError;
use crate::model::{
    Classifier, Derivation, Direction, GeneralizationSet, Model, ModelBuilder, Multiplicity,
    QualityRef, QualitySpace, RelationDecl, RelationStereotype, SourceSpan, SpaceKind, Stereotype,
};

fn obj<const N: usize>(fields: [(&str, Value); N]) -> Value {
    let mut fields = fields;
    fields.sort_by(|a, b| a.0.cmp(b.0));
    let mut map = Map::new();
    for (k, v) in fields {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub(crate) fn span_value(span: SourceSpan) -> Value {
    obj([
        ("col", span.column.into()),
        ("len", span.length.into()),
        ("line", span.line.into()),
    ])
}

fn strings<'a>(items: impl IntoIterator<Item = &'a String>) -> Value {
    Value::Array(items.into_iter().map(|s| Value::String(s.clone())).collect())
}

fn classifier_value(c: &Classifier) -> Value {
    obj([
        ("abstract", c.is_abstract.into()),
        ("name", c.name.clone().into()),
        ("parents", strings(&c.parents)),
        ("span", span_value(c.span)),
        ("stereotype", c.stereotype.keyword().into()),
    ])
}

fn relation_value(r: &RelationDecl) -> Value {
    let derived = match &r.derived_from {
        Some(d) => obj([
            ("multiplicity", d.multiplicity.to_string().into()),
            ("relator", d.relator.clone().into()),
        ]),
        None => Value::Null,
    };
    let via = match &r.via_quality {
        Some(q) => obj([
            ("direction", q.direction.keyword().into()),
            ("quality", q.quality.clone().into()),
        ]),
        None => Value::Null,
    };
    obj([
        ("derivedFrom", derived),
        ("name", r.name.clone().into()),
        ("source", r.source.clone().into()),
        ("sourceMult", r.source_mult.to_string().into()),
        ("span", span_value(r.span)),
        ("stereotype", r.stereotype.keyword().into()),
        ("target", r.target.clone().into()),
        ("targetMult", r.target_mult.to_string().into()),
        ("via", via),
    ])
}

fn space_value(s: &QualitySpace) -> Value {
    match &s.kind {
        SpaceKind::Ordered { lo, hi } => obj([
            ("hi", (*hi).into()),
            ("kind", "ordered".into()),
            ("lo", (*lo).into()),
            ("owner", s.owner.clone().into()),
            ("span", span_value(s.span)),
        ]),
        SpaceKind::Nominal(labels) => obj([
            ("kind", "nominal".into()),
            ("labels", strings(labels)),
            ("owner", s.owner.clone().into()),
            ("span", span_value(s.span)),
        ]),
    }
}

fn genset_value(g: &GeneralizationSet) -> Value {
    obj([
        ("complete", g.is_complete.into()),
        ("disjoint", g.is_disjoint.into()),
        ("general", g.general.clone().into()),
        ("name", g.name.clone().into()),
        ("span", span_value(g.span)),
        ("specifics", strings(&g.specifics)),
    ])
}

/// The model as a JSON value with sorted keys and name-sorted declarations.
pub fn model_value(model: &Model) -> Value {
    obj([
        (
            "classifiers",
            Value::Array(model.classifiers().map(classifier_value).collect()),
        ),
        (
            "generalizationSets",
            Value::Array(model.generalization_sets().map(genset_value).collect()),
        ),
        ("name", model.name().into()),
        (
            "qualitySpaces",
            Value::Array(model.spaces().map(space_value).collect()),
        ),
        (
            "relations",
            Value::Array(model.relations().map(relation_value).collect()),
        ),
        ("span", span_value(model.span())),
    ])
}

/// An unpacking plan as JSON.
pub fn plan_value(plan: &crate::unpack::UnpackPlan) -> Value {
    obj([
        (
            "newClassifiers",
            Value::Array(plan.new_classifiers.iter().map(classifier_value).collect()),
        ),
        (
            "newRelations",
            Value::Array(plan.new_relations.iter().map(relation_value).collect()),
        ),
        (
            "newSpaces",
            Value::Array(plan.new_spaces.iter().map(space_value).collect()),
        ),
        ("replaces", strings(&plan.replaces)),
        ("targetRelation", plan.target_relation.clone().into()),
    ])
}

/// Pretty-printed JSON terminated by a newline.
pub fn to_json_bytes(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

pub fn emit_json(model: &Model) -> Vec<u8> {
    to_json_bytes(&model_value(model))
}

fn schema_error(message: String) -> ParseError {
    ParseError {
        span: SourceSpan::default(),
        message,
        expected: vec![],
    }
}

/// Path-tracking reader over a JSON object.
struct Fields<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<Fields<'a>, ParseError> {
    match v {
        Value::Object(map) => Ok(Fields {
            map,
            path: path.to_string(),
        }),
        _ => Err(schema_error(format!(
            "expected object at {}",
            if path.is_empty() { "$" } else { path }
        ))),
    }
}

impl<'a> Fields<'a> {
    fn required(&self, key: &str) -> Result<&'a Value, ParseError> {
        match self.map.get(key) {
            Some(v) if !v.is_null() => Ok(v),
            _ => Err(schema_error(format!(
                "missing field: {}",
                join(&self.path, key)
            ))),
        }
    }

    fn optional(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn string(&self, key: &str) -> Result<String, ParseError> {
        self.required(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| schema_error(format!("expected string at {}", join(&self.path, key))))
    }

    fn boolean(&self, key: &str) -> Result<bool, ParseError> {
        match self.optional(key) {
            None => Ok(false),
            Some(v) => v.as_bool().ok_or_else(|| {
                schema_error(format!("expected boolean at {}", join(&self.path, key)))
            }),
        }
    }

    fn integer(&self, key: &str) -> Result<i64, ParseError> {
        self.required(key)?
            .as_i64()
            .ok_or_else(|| schema_error(format!("expected integer at {}", join(&self.path, key))))
    }

    fn array(&self, key: &str) -> Result<Vec<(String, &'a Value)>, ParseError> {
        match self.optional(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(items)) => Ok(items
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("{}[{i}]", join(&self.path, key)), v))
                .collect()),
            Some(_) => Err(schema_error(format!(
                "expected array at {}",
                join(&self.path, key)
            ))),
        }
    }

    fn string_list(&self, key: &str) -> Result<Vec<String>, ParseError> {
        self.array(key)?
            .into_iter()
            .map(|(path, v)| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| schema_error(format!("expected string at {path}")))
            })
            .collect()
    }

    fn multiplicity(&self, key: &str) -> Result<Multiplicity, ParseError> {
        let s = self.string(key)?;
        Multiplicity::parse(&s).ok_or_else(|| {
            schema_error(format!(
                "invalid multiplicity `{s}` at {}",
                join(&self.path, key)
            ))
        })
    }

    fn span(&self) -> Result<SourceSpan, ParseError> {
        let Some(v) = self.optional("span") else {
            return Ok(SourceSpan::default());
        };
        let f = as_object(v, &join(&self.path, "span"))?;
        let get = |k: &str| -> Result<u32, ParseError> {
            let n = f.integer(k)?;
            u32::try_from(n)
                .map_err(|_| schema_error(format!("out of range at {}", join(&f.path, k))))
        };
        Ok(SourceSpan::new(get("line")?, get("col")?, get("len")?))
    }
}

fn keyword<T>(
    f: &Fields<'_>,
    key: &str,
    what: &str,
    lookup: impl Fn(&str) -> Option<T>,
) -> Result<T, ParseError> {
    let s = f.string(key)?;
    lookup(&s).ok_or_else(|| {
        schema_error(format!(
            "unknown {what} `{s}` at {}",
            join(&f.path, key)
        ))
    })
}

/// Inverse of [`emit_json`]. Schema violations name the offending JSON path.
pub fn load_json(bytes: &[u8]) -> Result<Model, ParseError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| ParseError {
        span: SourceSpan::new(e.line() as u32, e.column() as u32, 1),
        message: format!("invalid JSON: {e}"),
        expected: vec![],
    })?;
    let f = as_object(&root, "")?;
    let mut b = ModelBuilder::new(f.string("name")?).span(f.span()?);

    for (path, v) in f.array("classifiers")? {
        let c = as_object(v, &path)?;
        let mut cls = Classifier::new(
            c.string("name")?,
            keyword(&c, "stereotype", "stereotype", Stereotype::from_keyword)?,
        )
        .with_parents(c.string_list("parents")?)
        .with_span(c.span()?);
        cls.is_abstract = c.boolean("abstract")?;
        b.push_classifier(cls);
    }

    for (path, v) in f.array("relations")? {
        let r = as_object(v, &path)?;
        let mut rel = RelationDecl::new(
            r.string("name")?,
            keyword(&r, "stereotype", "relation stereotype", RelationStereotype::from_keyword)?,
            r.string("source")?,
            r.multiplicity("sourceMult")?,
            r.multiplicity("targetMult")?,
            r.string("target")?,
        );
        rel.span = r.span()?;
        if let Some(d) = r.optional("derivedFrom") {
            let d = as_object(d, &join(&path, "derivedFrom"))?;
            rel.derived_from = Some(Derivation {
                relator: d.string("relator")?,
                multiplicity: d.multiplicity("multiplicity")?,
            });
        }
        if let Some(q) = r.optional("via") {
            let q = as_object(q, &join(&path, "via"))?;
            rel.via_quality = Some(QualityRef {
                quality: q.string("quality")?,
                direction: keyword(&q, "direction", "direction", Direction::from_keyword)?,
            });
        }
        b.push_relation(rel);
    }

    for (path, v) in f.array("qualitySpaces")? {
        let s = as_object(v, &path)?;
        let kind = match s.string("kind")?.as_str() {
            "ordered" => SpaceKind::Ordered {
                lo: s.integer("lo")?,
                hi: s.integer("hi")?,
            },
            "nominal" => SpaceKind::Nominal(s.string_list("labels")?),
            other => {
                return Err(schema_error(format!(
                    "unknown space kind `{other}` at {}",
                    join(&path, "kind")
                )))
            }
        };
        b.push_space(QualitySpace {
            owner: s.string("owner")?,
            kind,
            span: s.span()?,
        });
    }

    for (path, v) in f.array("generalizationSets")? {
        let g = as_object(v, &path)?;
        b.push_generalization_set(GeneralizationSet {
            name: g.string("name")?,
            general: g.string("general")?,
            specifics: g.string_list("specifics")?.into_iter().collect::<BTreeSet<_>>(),
            is_disjoint: g.boolean("disjoint")?,
            is_complete: g.boolean("complete")?,
            span: g.span()?,
        });
    }

    b.build().map_err(|errs| {
        let first = errs.into_iter().next().expect("build reports at least one error");
        ParseError {
            span: first.span,
            message: first.message,
            expected: vec![],
        }
    })
}
