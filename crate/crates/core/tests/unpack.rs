use onto_core::dsl::parse_text;
use onto_core::fixtures;
use onto_core::model::{Direction, Multiplicity, RelationStereotype, SpaceKind, Stereotype};
use onto_core::{apply_plan, check, unpack_comparative, unpack_material, UnpackError};

const ORDERED: SpaceKind = SpaceKind::Ordered { lo: 0, hi: 100 };

#[test]
fn plain_model_unpacks_into_relator_shape() {
    let plain = fixtures::healthcare_plain();
    let plan = unpack_material(&plain, "treatedBy", "Treatment", ("Patient", "ProviderRole"))
        .unwrap()
        .with_mediated("Patient", Multiplicity::new(1, Some(1)))
        .unwrap();
    let relators: Vec<_> = plan
        .new_classifiers
        .iter()
        .filter(|c| c.stereotype == Stereotype::Relator)
        .collect();
    assert_eq!(relators.len(), 1);
    let meds = plan
        .new_relations
        .iter()
        .filter(|r| r.stereotype == RelationStereotype::Mediation)
        .count();
    assert_eq!(meds, 2);
    let m = apply_plan(&plain, &plan).unwrap();
    assert_eq!(check(&m), vec![]);

    let material = m.relation("treatedBy").unwrap();
    let d = material.derived_from.as_ref().unwrap();
    assert_eq!((d.relator.as_str(), d.multiplicity), ("Treatment", Multiplicity::new(1, None)));
    assert_eq!(m.stereotype("Patient"), Some(Stereotype::Role));
    assert!(m.specializes("Patient", "Person"));
    assert!(m.specializes("ProviderRole", "HealthcareProvider"));
    let patient_med = m.relations().find(|r| r.stereotype == RelationStereotype::Mediation && r.target == "Patient").unwrap();
    assert_eq!(patient_med.source_mult, Multiplicity::new(1, None));
    assert_eq!(patient_med.target_mult, Multiplicity::new(1, Some(1)));

    // Nothing of the input is lost.
    for c in plain.classifiers() {
        assert_eq!(m.stereotype(&c.name), Some(c.stereotype));
    }
    for r in plain.relations() {
        assert!(m.relation(&r.name).is_some());
    }
}

#[test]
fn default_mediations_are_conservative() {
    let plain = fixtures::healthcare_plain();
    let plan = unpack_material(&plain, "treatedBy", "Treatment", ("Patient", "ProviderRole")).unwrap();
    for r in plan.new_relations.iter().filter(|r| r.stereotype == RelationStereotype::Mediation) {
        assert_eq!(r.source_mult, Multiplicity::new(1, None));
        assert_eq!(r.target_mult, Multiplicity::new(1, Some(1)));
    }
}

#[test]
fn second_application_is_refused() {
    let plain = fixtures::healthcare_plain();
    let plan = unpack_material(&plain, "treatedBy", "Treatment", ("Patient", "ProviderRole")).unwrap();
    let once = apply_plan(&plain, &plan).unwrap();
    assert!(matches!(
        unpack_material(&once, "treatedBy", "Care", ("P", "Q")),
        Err(UnpackError::AlreadyDerived(_))
    ));
}

#[test]
fn material_errors() {
    let plain = fixtures::healthcare_plain();
    assert!(matches!(
        unpack_material(&plain, "missing", "Treatment", ("A", "B")),
        Err(UnpackError::NotMaterial(_))
    ));
    assert!(matches!(
        unpack_material(&plain, "treatedBy", "Person", ("A", "B")),
        Err(UnpackError::NameClash(names)) if names == ["Person"]
    ));
    assert!(matches!(
        unpack_material(&plain, "treatedBy", "Treatment", ("Same", "Same")),
        Err(UnpackError::NameClash(_))
    ));
    let plan = unpack_material(&plain, "treatedBy", "Treatment", ("Patient", "ProviderRole")).unwrap();
    assert!(matches!(
        plan.with_mediated("Nobody", Multiplicity::new(1, Some(1))),
        Err(UnpackError::NoSuchMediation(_))
    ));
}

#[test]
fn existing_role_end_is_reused() {
    let m = parse_text(
        "model M\nkind Person\nrole Student specializes Person\nkind School\n\
         relator Enrollment\nmediation e1 : Enrollment [1..*] -- [1..1] Student\n\
         mediation e2 : Enrollment [0..*] -- [1..1] School\n\
         material enrolledIn : Student [0..*] -- [0..*] School derivedFrom Enrollment [1..*]\n\
         material tutors : Student [0..*] -- [0..*] Person",
    )
    .unwrap();
    let plan = unpack_material(&m, "tutors", "Tutoring", ("Tutor", "Tutee")).unwrap();
    assert!(plan.new_classifiers.iter().all(|c| c.name != "Tutor"));
    let out = apply_plan(&m, &plan).unwrap();
    assert_eq!(check(&out), vec![]);
    assert_eq!(out.relation("tutors").unwrap().source, "Student");
}

#[test]
fn comparative_grounding_adds_quality_and_space() {
    let m = parse_text(
        "model M\nmode PathologicalCondition\nkind Person\n\
         characterization conditionOf : PathologicalCondition [0..*] -- [1..1] Person\n\
         material moreSevereThan : PathologicalCondition [0..*] -- [0..*] PathologicalCondition",
    )
    .unwrap();
    let plan = unpack_comparative(&m, "moreSevereThan", "Severity", ORDERED, Direction::Desc).unwrap();
    assert_eq!(plan.new_classifiers.len(), 1);
    assert_eq!(plan.new_classifiers[0].stereotype, Stereotype::Quality);
    assert_eq!(plan.new_spaces.len(), 1);
    assert_eq!(plan.new_spaces[0].kind, ORDERED);
    let out = apply_plan(&m, &plan).unwrap();
    assert_eq!(check(&out), vec![]);
    let r = out.relation("moreSevereThan").unwrap();
    assert_eq!(r.stereotype, RelationStereotype::Comparative);
    assert_eq!(r.via_quality.as_ref().unwrap().quality, "Severity");
}

#[test]
fn comparative_over_persons_is_grounded_in_their_modes() {
    let m = parse_text(
        "model M\nkind Person\nmode Condition\n\
         characterization conditionOf : Condition [0..*] -- [1..1] Person\n\
         comparative sickerThan : Person -- Person",
    )
    .unwrap();
    let plan = unpack_comparative(&m, "sickerThan", "Severity", ORDERED, Direction::Desc).unwrap();
    let out = apply_plan(&m, &plan).unwrap();
    assert_eq!(check(&out), vec![]);
    let ch = out
        .relations()
        .find(|r| r.stereotype == RelationStereotype::Characterization && r.source == "Severity")
        .unwrap();
    assert_eq!(ch.target, "Condition");
}

#[test]
fn existing_ordered_quality_is_reused() {
    let m = fixtures::healthcare_relator();
    let plan = unpack_comparative(&m, "moreSevereThan", "Severity", ORDERED, Direction::Desc).unwrap();
    assert!(plan.new_classifiers.is_empty());
    assert!(plan.new_spaces.is_empty());
    assert_eq!(check(&apply_plan(&m, &plan).unwrap()), vec![]);
}

#[test]
fn comparative_errors() {
    let m = fixtures::healthcare_relator();
    let nominal = SpaceKind::Nominal(vec!["mild".into(), "severe".into()]);
    assert!(matches!(
        unpack_comparative(&m, "moreSevereThan", "Grade", nominal, Direction::Desc),
        Err(UnpackError::UnorderedSpace(_))
    ));
    assert!(matches!(
        unpack_comparative(&m, "treatedBy", "Grade", ORDERED, Direction::Desc),
        Err(UnpackError::NotComparative(_))
    ));
    assert!(matches!(
        unpack_comparative(&m, "moreSevereThan", "Person", ORDERED, Direction::Desc),
        Err(UnpackError::NameClash(_))
    ));
    let split = parse_text("model M\nkind A\nkind B\nmaterial r : A [0..*] -- [0..*] B").unwrap();
    assert!(matches!(
        unpack_comparative(&split, "r", "Q", ORDERED, Direction::Asc),
        Err(UnpackError::NoSharedBearer(_))
    ));
}
