//! Ready-made instances used across tests, documentation, and the guide.

use crate::geometry::Interval;
use crate::instance::Instance;
use crate::measure::StepMeasure;
use crate::rational::int;

/// The two-family estate: a strip of land `[0, 4]` with four unit
/// districts, divided between family `f1` (alice, bob, charlie) and
/// family `f2` (david, eva, frankie).
///
/// Per-district densities:
///
/// | agent   | [0,1] | [1,2] | [2,3] | [3,4] |
/// |---------|------:|------:|------:|------:|
/// | alice   | 6     | 3     | 0     | 0     |
/// | bob     | 5     | 4     | 0     | 0     |
/// | charlie | 1     | 8     | 0     | 0     |
/// | david   | 0     | 0     | 6     | 3     |
/// | eva     | 0     | 0     | 6     | 3     |
/// | frankie | 0     | 0     | 0     | 9     |
///
/// Every agent values the whole strip at 9. The two families' interests
/// are disjoint (f1 cares only about `[0, 2]`, f2 only about `[2, 4]`),
/// yet the intra-family disagreements are strong enough to separate all
/// three envy-freeness criteria on simple cuts. This makes the estate the
/// crate's canonical worked example.
pub fn estate() -> Instance {
    let cake = Interval::new(int(0), int(4));
    let rows = [
        ("alice", "f1", [6, 3, 0, 0]),
        ("bob", "f1", [5, 4, 0, 0]),
        ("charlie", "f1", [1, 8, 0, 0]),
        ("david", "f2", [0, 0, 6, 3]),
        ("eva", "f2", [0, 0, 6, 3]),
        ("frankie", "f2", [0, 0, 0, 9]),
    ];
    let rows = rows
        .into_iter()
        .map(|(agent, family, densities)| {
            let measure = StepMeasure::new(
                vec![int(0), int(1), int(2), int(3), int(4)],
                densities.into_iter().map(int).collect(),
            )
            .expect("estate densities are valid");
            (agent.to_owned(), family.to_owned(), measure)
        })
        .collect();
    Instance::from_rows(cake, rows).expect("estate instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn every_agent_values_the_estate_at_nine() {
        let inst = estate();
        for agent in inst.agents() {
            assert_eq!(agent.measure.total(), int(9), "agent {}", agent.id);
        }
    }
}
