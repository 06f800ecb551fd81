//! Benchmark inputs.

use std::fmt::Write;

pub use onto_core::fixtures;

/// A well-formed model text with `n` kinds, each carrying a phase partition,
/// a role and a relator mediating the role and the next kind's role.
pub fn synthetic_model(n: usize) -> String {
    let mut s = String::from("model Synthetic\n");
    for i in 0..n {
        let _ = writeln!(
            s,
            "kind K{i}\nphase Active{i} specializes K{i}\nphase Idle{i} specializes K{i}\n\
             genset G{i} disjoint complete general K{i} specifics Active{i}, Idle{i}\n\
             role R{i} specializes K{i}\nrelator Rel{i}"
        );
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let _ = writeln!(
            s,
            "mediation m{i}a : Rel{i} [1..*] -- [1..1] R{i}\n\
             mediation m{i}b : Rel{i} [1..*] -- [1..1] R{j}\n\
             material link{i} : R{i} [1..*] -- [1..*] R{j} derivedFrom Rel{i} [1..*]"
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_models_are_well_formed() {
        for n in [1, 3, 10] {
            let m = onto_core::dsl::parse_text(&synthetic_model(n)).unwrap();
            assert_eq!(onto_core::check(&m), vec![]);
        }
    }
}
