//! The bundled healthcare example models.

use crate::dsl::parse_text;
use crate::model::Model;

/// Material relation `treatedBy` unpacked into the `Treatment` relator, with
/// a comparative relation grounded in condition severity.
pub const HEALTHCARE_RELATOR: &str = include_str!("../examples/healthcare_relator.onto");

/// `Treatment` as an event with historical roles for its participants.
pub const HEALTHCARE_EVENT: &str = include_str!("../examples/healthcare_event.onto");

/// The descriptive model before unpacking: a bare material relation.
pub const HEALTHCARE_PLAIN: &str = include_str!("../examples/healthcare_plain.onto");

pub const ALL: [(&str, &str); 3] = [
    ("healthcare_plain.onto", HEALTHCARE_PLAIN),
    ("healthcare_relator.onto", HEALTHCARE_RELATOR),
    ("healthcare_event.onto", HEALTHCARE_EVENT),
];

fn load(src: &str) -> Model {
    parse_text(src).expect("bundled fixtures parse")
}

pub fn healthcare_relator() -> Model {
    load(HEALTHCARE_RELATOR)
}

pub fn healthcare_event() -> Model {
    load(HEALTHCARE_EVENT)
}

pub fn healthcare_plain() -> Model {
    load(HEALTHCARE_PLAIN)
}
