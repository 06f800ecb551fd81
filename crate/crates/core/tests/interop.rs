use onto_core::dsl::parse_text;
use onto_core::fixtures;
use onto_core::interop::SpecializationDirection;
use onto_core::model::{Model, Stereotype};
use onto_core::{check, compare, Verdict};

/// A well-formed model declaring `X` with the given stereotype.
fn zoo(st: Stereotype) -> Model {
    let body = match st {
        Stereotype::Kind => "kind X",
        Stereotype::Subkind => "kind K\nsubkind X specializes K",
        Stereotype::Phase => {
            "kind K\nphase X specializes K\nphase Y specializes K\n\
             genset G disjoint complete general K specifics X, Y"
        }
        Stereotype::Role => {
            "kind K\nkind L\nrole X specializes K\nrelator R\n\
             mediation m1 : R [1..*] -- [1..1] X\nmediation m2 : R [1..*] -- [1..1] L"
        }
        Stereotype::RoleMixin => {
            "roleMixin X\nkind K\nrelator R\n\
             mediation m1 : R [1..*] -- [1..1] X\nmediation m2 : R [1..*] -- [1..1] K"
        }
        Stereotype::HistoricalRole => {
            "kind K\nevent E\nhistoricalRole X specializes K\nparticipation p : E [1..*] -- [1..1] X"
        }
        Stereotype::HistoricalRoleMixin => {
            "historicalRoleMixin X\nevent E\nparticipation p : E [1..*] -- [1..1] X"
        }
        Stereotype::Category => "category X",
        Stereotype::Relator => "kind K\nrelator X\nmediation m1 : X [0..*] -- [2..2] K",
        Stereotype::Mode => "mode X",
        Stereotype::Quality => "quality X\nspace X ordered 0..3",
        Stereotype::Event => "event X",
    };
    parse_text(&format!("model Zoo\n{body}")).unwrap()
}

const ALL: [Stereotype; 12] = [
    Stereotype::Kind,
    Stereotype::Subkind,
    Stereotype::Phase,
    Stereotype::Role,
    Stereotype::RoleMixin,
    Stereotype::HistoricalRole,
    Stereotype::HistoricalRoleMixin,
    Stereotype::Category,
    Stereotype::Relator,
    Stereotype::Mode,
    Stereotype::Quality,
    Stereotype::Event,
];

fn flipped(d: Option<SpecializationDirection>) -> Option<SpecializationDirection> {
    use SpecializationDirection::*;
    d.map(|d| match d {
        LeftSpecializesRight => RightSpecializesLeft,
        RightSpecializesLeft => LeftSpecializesRight,
        Undetermined => Undetermined,
    })
}

#[test]
fn fixture_pairs() {
    let cs = compare(&fixtures::healthcare_relator(), &fixtures::healthcare_event(), None).unwrap();
    let get = |n: &str| cs.iter().find(|c| c.left.classifier == n).unwrap();
    let t = get("Treatment");
    assert_eq!((t.verdict, t.alternatives.as_slice()), (Verdict::IdentityExcluded, &[Verdict::ManifestationCandidate][..]));
    assert!(t.rationale.contains("rule 2"));
    let p = get("Patient");
    assert_eq!(
        (p.verdict, p.alternatives.as_slice()),
        (Verdict::IdentityExcluded, &[Verdict::HistoricalDependenceCandidate][..])
    );
    assert!(p.rationale.contains("rule 4"));
    assert_eq!(get("Person").verdict, Verdict::IdentityCandidate);
    assert_eq!(get("Person").alternatives, [Verdict::SpecializationCandidate, Verdict::SiblingSubtypesCandidate]);
}

#[test]
fn self_comparison_is_identity_everywhere() {
    let mut models = vec![fixtures::healthcare_relator(), fixtures::healthcare_event()];
    models.extend(ALL.iter().map(|s| zoo(*s)));
    for m in models {
        let cs = compare(&m, &m, None).unwrap();
        assert_eq!(cs.len(), m.classifiers().count());
        assert!(cs.iter().all(|c| c.verdict == Verdict::IdentityCandidate), "{}", m.name());
    }
}

#[test]
fn verdict_table_is_total_and_symmetric() {
    for a in ALL {
        let ma = zoo(a);
        assert_eq!(check(&ma), vec![], "{a}");
        for b in ALL {
            let mb = zoo(b);
            let pair = [("X".to_string(), "X".to_string())];
            let ab = compare(&ma, &mb, Some(&pair)).unwrap();
            let ba = compare(&mb, &ma, Some(&pair)).unwrap();
            assert_eq!(ab.len(), 1);
            assert_eq!(ab[0].verdict, ba[0].verdict, "{a} vs {b}");
            assert_eq!(ab[0].alternatives, ba[0].alternatives, "{a} vs {b}");
            assert_eq!(ab[0].direction, flipped(ba[0].direction), "{a} vs {b}");
            assert!(ab[0].rationale.starts_with("rule "), "{a} vs {b}");
            if a.top_category() != b.top_category() {
                assert_eq!(ab[0].verdict, Verdict::IdentityExcluded, "{a} vs {b}");
            }
            if a == b {
                assert_eq!(ab[0].verdict, Verdict::IdentityCandidate, "{a}");
            }
        }
    }
}

#[test]
fn differing_surroundings_demote_identity() {
    let l = parse_text("model L\nkind Person").unwrap();
    let r = parse_text(
        "model R\nkind Person\nmode Fever\ncharacterization feverOf : Fever [0..*] -- [1..1] Person",
    )
    .unwrap();
    let cs = compare(&l, &r, None).unwrap();
    assert_eq!(cs[0].verdict, Verdict::SpecializationCandidate);
    assert_eq!(cs[0].direction, Some(SpecializationDirection::RightSpecializesLeft));
}

#[test]
fn explicit_pairs_and_errors() {
    let rel = fixtures::healthcare_relator();
    let ev = fixtures::healthcare_event();
    let pairs = [("HealthcareProvider".to_string(), "InstitutionalHealthcareProvider".to_string())];
    let cs = compare(&rel, &ev, Some(&pairs)).unwrap();
    assert_eq!(cs.len(), 1);
    assert_eq!(cs[0].verdict, Verdict::IdentityExcluded);
    let bad = [("Nobody".to_string(), "Person".to_string())];
    assert!(matches!(
        compare(&rel, &ev, Some(&bad)),
        Err(onto_core::InteropError::UnknownClassifier { side: "left", .. })
    ));
    assert!(matches!(
        compare(&fixtures::healthcare_plain(), &ev, None),
        Err(onto_core::InteropError::IllFormedModel { side: "left", .. })
    ));
}
