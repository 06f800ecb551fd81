//! Acceptance criteria, one PASS/FAIL line each.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use onto_core::dsl::parse_text;
use onto_core::fixtures;
use onto_core::model::{Model, Multiplicity};
use onto_core::world::{all_worlds, check_metaproperties, Scope, SearchLimits};
use onto_core::{
    apply_plan, check, compare, derive_material_cardinalities, lint, unpack_material, Verdict,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    if let Some(limit) = limit {
        ensure!(took < limit, "{detail}; took {took:.2?}, limit {limit:?}");
    }
    Ok(format!("{detail} ({took:.2?})"))
}

fn unpacked_plain() -> Model {
    let plain = fixtures::healthcare_plain();
    let plan = unpack_material(&plain, "treatedBy", "Treatment", ("Patient", "ProviderRole"))
        .and_then(|p| p.with_mediated("Patient", Multiplicity::new(1, Some(1))))
        .expect("plain fixture unpacks");
    apply_plan(&plain, &plan).expect("plan applies")
}

fn rule_ids(m: &Model) -> Vec<String> {
    check(m).into_iter().map(|d| d.rule_id).collect()
}

fn fixture_parity() -> Outcome {
    let before = rule_ids(&fixtures::healthcare_plain());
    ensure!(before == ["R6"], "plain fixture gave {before:?}");
    let after = rule_ids(&unpacked_plain());
    ensure!(after.is_empty(), "unpacked model gave {after:?}");
    Ok("plain -> [R6]; unpacked -> []".into())
}

fn ap1_witness() -> Outcome {
    let scope = Scope::default().with("Person", 2).with("Treatment", 2);
    let m = fixtures::healthcare_event();
    let diags = lint(&m, &scope).map_err(|e| e.to_string())?;
    let ap1: Vec<_> = diags.iter().filter(|d| d.rule_id == "AP1").collect();
    ensure!(ap1.len() == 1, "expected one AP1, got {}", ap1.len());
    let w = ap1[0].witness.as_ref().ok_or("AP1 without witness")?;
    onto_core::world::validate_world(&m, w).map_err(|e| format!("witness invalid: {e:?}"))?;
    let both = w
        .links_of("participatesPatient")
        .find(|p| w.has_link("participatesProvider", &p.source, &p.target))
        .ok_or("witness lacks a same-treatment double role")?;
    let repaired = parse_text(&format!(
        "{}\ngenset patientOrProvider disjoint general Person specifics Patient, IndividualHealthcareProvider\n",
        fixtures::HEALTHCARE_EVENT
    ))
    .map_err(|e| format!("{e:?}"))?;
    let after = lint(&repaired, &scope).map_err(|e| e.to_string())?;
    ensure!(
        after.iter().all(|d| d.rule_id != "AP1"),
        "AP1 survives the disjoint genset"
    );
    Ok(format!(
        "{} is patient and provider of {}; disjoint genset clears it",
        both.target, both.source
    ))
}

fn meta_scope() -> Scope {
    Scope::default()
        .with("Person", 3)
        .with("PathologicalCondition", 6)
        .with("Treatment", 0)
        .with("Organization", 0)
        .with_values("Severity", [0, 1, 2])
}

fn meta_properties() -> Outcome {
    let m = fixtures::healthcare_relator();
    let r = check_metaproperties(&m, "moreSevereThan", &meta_scope()).map_err(|e| e.to_string())?;
    ensure!(
        r.irreflexive.holds && r.asymmetric.holds && r.transitive.holds,
        "strict order: irreflexive={} asymmetric={} transitive={}",
        r.irreflexive.holds,
        r.asymmetric.holds,
        r.transitive.holds
    );
    let mutant = parse_text(&fixtures::HEALTHCARE_RELATOR.replace("via Severity desc", "via Severity descOrEqual"))
        .map_err(|e| format!("{e:?}"))?;
    let b = check_metaproperties(&mutant, "moreSevereThan", &meta_scope()).map_err(|e| e.to_string())?;
    ensure!(!b.asymmetric.holds, "non-strict mutant reported asymmetric");
    let cx = b.asymmetric.counterexample.as_ref().ok_or("no counterexample")?;
    Ok(format!(
        "{} worlds all strict; mutant asymmetry broken by ({}, {})",
        r.worlds_checked, cx.witnesses[0], cx.witnesses[1]
    ))
}

fn cardinality_calculus() -> Outcome {
    let m = fixtures::healthcare_relator();
    let c = derive_material_cardinalities(&m, "Treatment").map_err(|e| e.to_string())?;
    let any = Multiplicity::new(1, None);
    let got = (c.end_a.multiplicity, c.end_b.multiplicity, c.per_tuple);
    ensure!(got == (any, any, any), "derived {got:?}");
    let rel = m.relation("treatedBy").ok_or("no treatedBy")?;
    let (per_source, per_target) = if c.end_a.ty == rel.source {
        (c.end_b.multiplicity, c.end_a.multiplicity)
    } else {
        (c.end_a.multiplicity, c.end_b.multiplicity)
    };
    let mut seen = [Vec::new(), Vec::new(), Vec::new()];
    let mut worlds = 0;
    for n in 1..=3 {
        let scope = Scope::uniform(n).unlimited().with_values("Severity", [1]);
        for w in all_worlds(&m, &scope, SearchLimits::default()).map_err(|e| e.to_string())? {
            worlds += 1;
            ensure!(
                common::material_links(&m, &w) == common::derived_material_links(&m, &w),
                "material links disagree with the oracle at scope {n}"
            );
            let (out, inc) = common::fan_counts(&w, "treatedBy", &rel.source, &rel.target);
            seen[0].extend(out);
            seen[1].extend(inc);
            seen[2].extend(common::relators_per_tuple(
                &w,
                "treatedBy",
                &c.relator,
                &c.end_a.mediation,
                &c.end_b.mediation,
            ));
        }
    }
    for ((what, bound), seen) in [("per source", per_source), ("per target", per_target), ("per tuple", c.per_tuple)]
        .into_iter()
        .zip(&seen)
    {
        if let Some(n) = seen.iter().find(|&&n| !common::within(bound, n)) {
            return Err(format!("{what}: observed {n} outside {bound}"));
        }
        let finite = std::iter::once(bound.min).chain(bound.max);
        for b in finite {
            ensure!(seen.contains(&(b as usize)), "{what}: bound {b} never attained");
        }
    }
    Ok(format!("([1..*], [1..*], [1..*]) sound and attained over {worlds} worlds"))
}

fn rule_mutations() -> Outcome {
    let mut ok = 0;
    let mut bad = Vec::new();
    let mutants = common::rule_mutants();
    for (rule, src) in &mutants {
        let got = parse_text(src).map(|m| rule_ids(&m));
        match got {
            Ok(ids) if ids == [*rule] => ok += 1,
            other => bad.push(format!("{rule}: {other:?}")),
        }
    }
    ensure!(bad.is_empty(), "{ok}/{}; {}", mutants.len(), bad.join("; "));
    ensure!(ok == 10, "only {ok} mutants");
    Ok(format!("{ok}/10"))
}

fn examples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/examples")
}

fn run_cli(args: &[String]) -> (Option<i32>, Vec<u8>, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_onto"))
        .args(args)
        .output()
        .expect("binary runs");
    (o.status.code(), o.stdout, o.stderr)
}

fn invocations(file: &str, other: &str) -> Vec<Vec<String>> {
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let lint_scope = ["--scope", "Person=2,Treatment=2"];
    let mut out = vec![
        v(&["parse", file]),
        v(&["parse", file, "--format", "text"]),
        v(&["check", file]),
        v(&["check", file, "--format", "text"]),
        v(&["unpack", file, "--relation", "treatedBy", "--relator", "Treatment", "--roles", "Patient,ProviderRole"]),
        v(&["unpack", file, "--relation", "moreSevereThan", "--quality", "Severity", "--format", "text"]),
        v(&["derive-cards", file, "--relator", "Treatment"]),
        v(&["derive-cards", file, "--relator", "Treatment", "--format", "text"]),
        v(&["simulate", file, "--scope", "Person=1,Organization=1,Treatment=1", "--limit", "5"]),
        v(&["simulate", file, "--scope", "Person=1,Organization=1,Treatment=1", "--limit", "5", "--format", "dot"]),
        v(&["simulate", file, "--metaproperties", "moreSevereThan", "--scope", "Person=2,PathologicalCondition=2,Treatment=0,Organization=0"]),
        v(&["simulate", file, "--goal", "t:Treatment, x:Person"]),
        v(&["diff", file, other]),
        v(&["diff", file, other, "--format", "text"]),
    ];
    for fmt in ["json", "dot"] {
        let mut a = v(&["lint", file, "--format", fmt]);
        a.extend(v(&lint_scope));
        out.push(a);
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let unpacked = dir.path().join("healthcare_unpacked.onto");
    std::fs::write(&unpacked, onto_core::to_dsl(&unpacked_plain())).map_err(|e| e.to_string())?;
    let mut files: Vec<PathBuf> = ["healthcare_plain.onto", "healthcare_relator.onto", "healthcare_event.onto"]
        .iter()
        .map(|f| examples_dir().join(f))
        .collect();
    files.push(unpacked);
    let other = examples_dir().join("healthcare_event.onto").to_string_lossy().into_owned();
    let mut runs = 0;
    for f in &files {
        let f = f.to_string_lossy();
        for args in invocations(&f, &other) {
            let first = run_cli(&args);
            let second = run_cli(&args);
            runs += 2;
            ensure!(first == second, "output differs for `onto {}`", args.join(" "));
            ensure!(first.0.is_some_and(|c| c <= 2), "`onto {}` crashed", args.join(" "));
        }
    }

    let relator = fixtures::healthcare_relator();
    let cases = [
        (relator.clone(), Scope::uniform(1)),
        (relator.clone(), Scope::uniform(2).with_values("Severity", [0, 1])),
        (relator, Scope::uniform(3).with_values("Severity", [1])),
        (fixtures::healthcare_event(), Scope::uniform(2)),
        (
            fixtures::healthcare_event(),
            Scope::default().with("Person", 3).with("Organization", 1).with("Treatment", 2),
        ),
        (unpacked_plain(), Scope::uniform(3)),
    ];
    let mut worlds = 0;
    for (m, s) in cases {
        let ws = all_worlds(&m, &s.unlimited(), SearchLimits::default()).map_err(|e| e.to_string())?;
        worlds += ws.len();
        let dups = common::isomorphic_pairs(&ws);
        ensure!(dups.is_empty(), "{} isomorphic pairs in {}", dups.len(), m.name());
    }
    Ok(format!("{runs} CLI runs byte-identical; {worlds} worlds pairwise non-isomorphic"))
}

fn interop() -> Outcome {
    let rel = fixtures::healthcare_relator();
    let ev = fixtures::healthcare_event();
    let cs = compare(&rel, &ev, None).map_err(|e| e.to_string())?;
    let find = |n: &str| cs.iter().find(|c| c.left.classifier == n && c.right.classifier == n);
    let t = find("Treatment").ok_or("Treatment not paired")?;
    ensure!(
        t.verdict == Verdict::IdentityExcluded && t.alternatives == [Verdict::ManifestationCandidate],
        "Treatment: {:?} {:?}",
        t.verdict,
        t.alternatives
    );
    let p = find("Patient").ok_or("Patient not paired")?;
    ensure!(
        p.verdict == Verdict::IdentityExcluded && p.alternatives == [Verdict::HistoricalDependenceCandidate],
        "Patient: {:?} {:?}",
        p.verdict,
        p.alternatives
    );
    for m in [&rel, &ev, &unpacked_plain()] {
        let same = compare(m, m, None).map_err(|e| e.to_string())?;
        ensure!(
            same.iter().all(|c| c.verdict == Verdict::IdentityCandidate),
            "self comparison of {} is not all identity",
            m.name()
        );
    }
    Ok("Treatment -> Manifestation; Patient -> HistoricalDependence; self -> Identity".into())
}

fn main() {
    panic::set_hook(Box::new(|_| {}));
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 7] = [
        ("fixture parity", Some(Duration::from_secs(1)), fixture_parity),
        ("AP1 witness", Some(Duration::from_secs(5)), ap1_witness),
        ("meta-properties", Some(Duration::from_secs(30)), meta_properties),
        ("cardinality calculus", None, cardinality_calculus),
        ("rule mutations", None, rule_mutations),
        ("determinism", None, determinism),
        ("interop", None, interop),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| timed(limit, f))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(d) => println!("criterion {}: PASS {name}: {d}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
