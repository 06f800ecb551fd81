use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use onto_bench::{fixtures, synthetic_model};
use onto_core::world::{all_worlds, Scope, SearchLimits};
use onto_core::{check, check_metaproperties, dsl::parse_text, lint, Goal};

fn parsing(c: &mut Criterion) {
    c.bench_function("parse/relator_fixture", |b| {
        b.iter(|| parse_text(black_box(fixtures::HEALTHCARE_RELATOR)).unwrap())
    });
    let big = synthetic_model(200);
    c.bench_function("parse/synthetic_200", |b| b.iter(|| parse_text(black_box(&big)).unwrap()));
}

fn checking(c: &mut Criterion) {
    let m = fixtures::healthcare_relator();
    c.bench_function("check/relator_fixture", |b| b.iter(|| check(black_box(&m))));
    let big = parse_text(&synthetic_model(200)).unwrap();
    c.bench_function("check/synthetic_200", |b| b.iter(|| check(black_box(&big))));
}

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    let event = fixtures::healthcare_event();
    let scope = Scope::default().with("Person", 2).with("Treatment", 2).unlimited();
    g.bench_function("event_p2_t2", |b| {
        b.iter(|| all_worlds(&event, &scope, SearchLimits::default()).unwrap())
    });
    let relator = fixtures::healthcare_relator();
    let scope = Scope::uniform(3).unlimited().with_values("Severity", [1]);
    g.bench_function("relator_uniform_3", |b| {
        b.iter(|| all_worlds(&relator, &scope, SearchLimits::default()).unwrap())
    });
    let scope = Scope::default()
        .with("Person", 3)
        .with("PathologicalCondition", 6)
        .with("Treatment", 0)
        .with("Organization", 0);
    g.bench_function("metaproperties_p3", |b| {
        b.iter(|| check_metaproperties(&relator, "moreSevereThan", &scope).unwrap())
    });
    g.finish();
}

fn witnesses(c: &mut Criterion) {
    let event = fixtures::healthcare_event();
    let scope = Scope::default().with("Person", 2).with("Treatment", 2);
    let goal = Goal::parse("t:Treatment, x:Patient, participatesPatient(t,x)").unwrap();
    c.bench_function("witness/event_goal", |b| {
        b.iter(|| onto_core::find_witness(&event, &scope, &goal).unwrap())
    });
    c.bench_function("lint/event_p2_t2", |b| b.iter(|| lint(&event, &scope).unwrap()));
}

criterion_group!(benches, parsing, checking, enumeration, witnesses);
criterion_main!(benches);
