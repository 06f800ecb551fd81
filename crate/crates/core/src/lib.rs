//! Conceptual-model toolkit: a textual modelling language with JSON
//! interchange, well-formedness rules, model rewrites that expose relators
//! and quality grounding, a bounded instance finder, an anti-pattern linter
//! and a cross-model correspondence classifier.

pub mod diagnostic;
pub mod dsl;
pub mod fixtures;
pub mod interop;
pub mod json;
pub mod lint;
pub mod model;
pub mod rules;
pub mod unpack;
pub mod world;

pub use diagnostic::{has_errors, sort_diagnostics, Diagnostic, Severity};
pub use dsl::{parse_bytes, parse_text, to_dsl, ParseError};
pub use json::{emit_json, load_json};
pub use model::{
    Classifier, Derivation, Direction, GeneralizationSet, Model, ModelBuilder, Multiplicity,
    QualityRef, QualitySpace, RelationDecl, RelationStereotype, Rigidity, SourceSpan, SpaceKind,
    Stereotype, StructuralError, TaxonomyError,
};
pub use interop::{compare, Correspondence, InteropError, Verdict};
pub use lint::lint;
pub use rules::check;
pub use unpack::{
    apply_plan, derive_material_cardinalities, unpack_comparative, unpack_material,
    MaterialCardinalities, UnpackError, UnpackPlan,
};
pub use world::{
    check_metaproperties, enumerate_worlds, eval_comparative, find_witness, validate_world,
    FinderError, Goal, InstanceWorld, Scope,
};
