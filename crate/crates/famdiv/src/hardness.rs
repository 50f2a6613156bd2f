//! Adversarial instances showing that fairness between families is
//! expensive in interval components, with desk-scale exhaustive
//! certification of the lower bounds.
//!
//! The construction interleaves the families' desires: on a cake of
//! `m·k` unit cells, member `i` of family `j` wants only the open cell
//! `(ik+j, ik+j+1)`, so consecutive cells always belong to different
//! families. Any allocation that gives a quota of `q` members per
//! family positive value must then switch ownership often, and
//! [`min_components_for_positivity`] finds the exact minimum number of
//! components by exhaustive search. [`verify_component_bound`] compares
//! that minimum against the closed-form bound `k(kq−m)/(k−1)` and
//! refuses to certify if the search ever came in below it.
//!
//! Cut points are restricted to cell boundaries and cell midpoints.
//! This loses no generality: whether a member is positive depends only
//! on which runs meet its cell in positive length, each cell can be
//! shared by at most two runs worth distinguishing, and any such
//! combinatorial arrangement is realizable on the half-unit lattice.

use crate::fairness::positive_agent_tally;
use crate::geometry::{Interval, Piece};
use crate::instance::{Allocation, Instance};
use crate::measure::StepMeasure;
use crate::rational::{int, rat, Rational};

/// Default cap on the number of unit cells the exhaustive search will
/// take on; override per call, up to a hard ceiling of 16.
pub const DEFAULT_CELL_LIMIT: usize = 8;

const HARD_CELL_LIMIT: usize = 16;

/// Errors from building or certifying lower-bound instances.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HardnessError {
    #[error("need at least two families with at least one member each, got k={k}, m={m}")]
    BadShape { k: usize, m: usize },
    #[error("quota must be between 1 and the family size {m}, got {q}")]
    InvalidQuota { q: usize, m: usize },
    #[error("{cells} unit cells exceed the exhaustive-search limit of {limit}")]
    TooLarge { cells: usize, limit: usize },
    #[error(
        "component bound violated: the formula requires at least {formula}, search found {found}"
    )]
    BoundViolated { formula: i64, found: usize },
}

/// The interleaved-cells instance: `k` families of `m` members on the
/// cake `[0, mk]`, member `i` of family `j` wanting exactly the unit
/// cell starting at `ik + j`.
#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    pub k: usize,
    pub m: usize,
    pub instance: Instance,
}

impl LowerBoundInstance {
    /// Number of unit cells, `m·k`.
    pub fn cells(&self) -> usize {
        self.m * self.k
    }

    /// The family owning a unit cell: cell `ik+j` belongs to family `j`.
    pub fn owner(&self, cell: usize) -> usize {
        cell % self.k
    }
}

/// A sequence of ownership runs along the cake; adjacent labels differ
/// and the length is the total component count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPattern {
    pub labels: Vec<usize>,
}

/// A concrete allocation realizing a run pattern.
#[derive(Debug, Clone)]
pub struct ComponentWitness {
    pub pattern: RunPattern,
    /// Interior cut positions between consecutive runs, strictly
    /// increasing on the half-unit lattice.
    pub cuts: Vec<Rational>,
    /// Family-indexed pieces assembled from the runs.
    pub allocation: Allocation,
    /// Members with positive value per family.
    pub tally: Vec<usize>,
}

/// Result of the exhaustive component search.
#[derive(Debug, Clone)]
pub struct ComponentSearch {
    /// The minimum total component count meeting the quota.
    pub components: usize,
    pub witness: ComponentWitness,
}

/// One quota's bound comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub quota: usize,
    /// `ceil(k(kq−m)/(k−1))`; may be nonpositive, in which case it is
    /// vacuous.
    pub formula_value: i64,
    pub search_value: usize,
}

/// Certificate that the exhaustive search respects the closed-form
/// bound at the requested quota, at a bare majority, and at unanimity.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub k: usize,
    pub m: usize,
    pub cells: usize,
    pub requested: BoundCheck,
    pub majority: BoundCheck,
    pub unanimous: BoundCheck,
    /// Witness for the requested quota.
    pub witness: ComponentWitness,
    /// Spacing of the cut lattice the search ranges over.
    pub cut_granularity: Rational,
}

/// Builds the interleaved instance for `k ≥ 2` families of `m ≥ 1`
/// members each.
pub fn build_lower_bound_instance(k: usize, m: usize) -> Result<LowerBoundInstance, HardnessError> {
    if k < 2 || m < 1 {
        return Err(HardnessError::BadShape { k, m });
    }
    let cake = Interval::new(int(0), int((m * k) as i64));
    let mut rows = Vec::with_capacity(m * k);
    for j in 0..k {
        for i in 0..m {
            let cell = (i * k + j) as i64;
            let measure = StepMeasure::from_segments(&cake, &[(int(cell), int(cell + 1), int(1))])
                .expect("unit cells lie inside the cake");
            rows.push((format!("f{j}m{i}"), format!("f{j}"), measure));
        }
    }
    let instance = Instance::from_rows(cake, rows).expect("generated rows are well-formed");
    Ok(LowerBoundInstance { k, m, instance })
}

/// Finds, by exhaustive search over the half-unit cut lattice, the
/// minimum total component count of an allocation giving at least `q`
/// members of every family strictly positive value. Returns the
/// minimum together with a materialized witness.
///
/// The search is breadth-first over ownership runs, so the first
/// complete arrangement found has minimal length; ties are broken by
/// scanning labels and cut positions in increasing order, making the
/// witness deterministic. Instances beyond `max_cells` unit cells
/// (default [`DEFAULT_CELL_LIMIT`], hard ceiling 16) are refused
/// rather than approximated.
pub fn min_components_for_positivity(
    lb: &LowerBoundInstance,
    q: usize,
    max_cells: Option<usize>,
) -> Result<ComponentSearch, HardnessError> {
    if q < 1 || q > lb.m {
        return Err(HardnessError::InvalidQuota { q, m: lb.m });
    }
    let cells = lb.cells();
    let limit = max_cells.unwrap_or(DEFAULT_CELL_LIMIT).min(HARD_CELL_LIMIT);
    if cells > limit {
        return Err(HardnessError::TooLarge { cells, limit });
    }

    let k = lb.k;
    let end = 2 * cells; // positions are half-units: p means p/2
    let family_masks: Vec<u32> = (0..k)
        .map(|j| {
            (0..cells)
                .filter(|&z| z % k == j)
                .fold(0u32, |mask, z| mask | (1 << z))
        })
        .collect();
    // Cells met with positive length by a run (from/2, to/2), keeping
    // only the run's own family.
    let touched = |from: usize, to: usize, label: usize| -> u32 {
        let mut mask = 0u32;
        let lo = from / 2;
        let hi = (to - 1) / 2;
        for z in lo..=hi {
            if z % k == label {
                mask |= 1 << z;
            }
        }
        mask & family_masks[label]
    };
    let satisfied = |mask: u32| -> bool {
        family_masks
            .iter()
            .all(|fm| (mask & fm).count_ones() as usize >= q)
    };

    // Breadth-first over runs. A node is the state after placing one
    // more run: (end position, its label, cells satisfied so far).
    struct Node {
        pos: usize,
        label: usize,
        mask: u32,
        parent: usize,
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut frontier: Vec<usize> = Vec::new();
    for label in 0..k {
        for pos in 1..=end {
            let mask = touched(0, pos, label);
            if seen.insert((pos, label, mask)) {
                nodes.push(Node {
                    pos,
                    label,
                    mask,
                    parent: usize::MAX,
                });
                frontier.push(nodes.len() - 1);
            }
        }
    }

    let mut components = 0;
    let goal = loop {
        components += 1;
        assert!(
            components <= cells,
            "one run per cell always meets a full quota",
        );
        if let Some(&idx) = frontier
            .iter()
            .find(|&&idx| nodes[idx].pos == end && satisfied(nodes[idx].mask))
        {
            break idx;
        }
        let mut next = Vec::new();
        for &idx in &frontier {
            let (pos, last, mask) = (nodes[idx].pos, nodes[idx].label, nodes[idx].mask);
            for label in 0..k {
                if label == last {
                    continue;
                }
                for stop in pos + 1..=end {
                    let mask = mask | touched(pos, stop, label);
                    if seen.insert((stop, label, mask)) {
                        nodes.push(Node {
                            pos: stop,
                            label,
                            mask,
                            parent: idx,
                        });
                        next.push(nodes.len() - 1);
                    }
                }
            }
        }
        frontier = next;
    };

    // Walk the parents back into a pattern and its cut positions.
    let mut labels = Vec::with_capacity(components);
    let mut ends = Vec::with_capacity(components);
    let mut at = goal;
    loop {
        labels.push(nodes[at].label);
        ends.push(nodes[at].pos);
        if nodes[at].parent == usize::MAX {
            break;
        }
        at = nodes[at].parent;
    }
    labels.reverse();
    ends.reverse();
    let cuts: Vec<Rational> = ends[..components - 1]
        .iter()
        .map(|&p| rat(p as i64, 2))
        .collect();

    let mut intervals: Vec<Vec<Interval>> = vec![Vec::new(); k];
    let mut start = int(0);
    for (run, &label) in labels.iter().enumerate() {
        let stop = rat(ends[run] as i64, 2);
        intervals[label].push(Interval::new(start.clone(), stop.clone()));
        start = stop;
    }
    let allocation = Allocation::new(intervals.into_iter().map(Piece::from_intervals).collect());
    let tally =
        positive_agent_tally(&lb.instance, &allocation).expect("witness runs partition the cake");
    debug_assert!(tally.iter().all(|&t| t >= q));
    debug_assert_eq!(allocation.component_count(), components);

    Ok(ComponentSearch {
        components,
        witness: ComponentWitness {
            pattern: RunPattern { labels },
            cuts,
            allocation,
            tally,
        },
    })
}

/// `ceil(k(kq − m)/(k − 1))`.
fn formula_value(k: usize, m: usize, q: usize) -> i64 {
    let (k, m, q) = (k as i64, m as i64, q as i64);
    let numerator = k * (k * q - m);
    let denominator = k - 1;
    // Ceiling division with a positive denominator.
    num::Integer::div_ceil(&numerator, &denominator)
}

/// Runs the exhaustive search at the requested quota `q`, at the bare
/// majority `ceil(m/2)`, and at unanimity `m`, and certifies that each
/// minimum respects the closed-form bound `ceil(k(kq−m)/(k−1))`. A
/// violated bound is a hard error — it would mean the formula is not a
/// valid lower bound at this size.
pub fn verify_component_bound(
    k: usize,
    m: usize,
    q: usize,
    max_cells: Option<usize>,
) -> Result<BoundCertificate, HardnessError> {
    let lb = build_lower_bound_instance(k, m)?;
    let run = |quota: usize| -> Result<(BoundCheck, ComponentSearch), HardnessError> {
        let search = min_components_for_positivity(&lb, quota, max_cells)?;
        let check = BoundCheck {
            quota,
            formula_value: formula_value(k, m, quota),
            search_value: search.components,
        };
        if (check.search_value as i64) < check.formula_value {
            return Err(HardnessError::BoundViolated {
                formula: check.formula_value,
                found: check.search_value,
            });
        }
        Ok((check, search))
    };
    let (requested, search) = run(q)?;
    let (majority, _) = run(m.div_ceil(2))?;
    let (unanimous, _) = run(m)?;
    // At unanimity the formula value is exactly m·k, and one run per
    // cell achieves it, so the search must land on the nose.
    debug_assert_eq!(unanimous.search_value, m * k);
    Ok(BoundCertificate {
        k,
        m,
        cells: lb.cells(),
        requested,
        majority,
        unanimous,
        witness: search.witness,
        cut_granularity: rat(1, 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaved_cells_for_two_families_of_three() {
        let lb = build_lower_bound_instance(2, 3).unwrap();
        assert_eq!(lb.instance.cake(), &Interval::new(int(0), int(6)));
        assert_eq!(lb.instance.agent_count(), 6);
        assert_eq!(lb.instance.family_count(), 2);
        // Family 0 wants cells 0, 2, 4; family 1 wants 1, 3, 5.
        let wants = |agent: usize, cell: i64| {
            let m = &lb.instance.agents()[agent].measure;
            assert_eq!(m.value_of(&Interval::new(int(cell), int(cell + 1))), int(1));
            assert_eq!(m.total(), int(1));
        };
        wants(0, 0);
        wants(1, 2);
        wants(2, 4);
        wants(3, 1);
        wants(4, 3);
        wants(5, 5);
        assert_eq!(lb.owner(1), 1);
        assert_eq!(lb.owner(4), 0);
    }

    #[test]
    fn diagonal_cells_for_three_families_of_two() {
        let lb = build_lower_bound_instance(3, 2).unwrap();
        assert_eq!(lb.instance.cake(), &Interval::new(int(0), int(6)));
        assert_eq!(lb.instance.agent_count(), 6);
        // Member i of family j wants cell 3i + j.
        let m = &lb.instance.agents()[3].measure; // f1m1 -> cell 4
        assert_eq!(m.value_of(&Interval::new(int(4), int(5))), int(1));
    }

    #[test]
    fn smallest_instance_and_bad_shapes() {
        let lb = build_lower_bound_instance(2, 1).unwrap();
        assert_eq!(lb.cells(), 2);
        assert!(matches!(
            build_lower_bound_instance(1, 3),
            Err(HardnessError::BadShape { k: 1, m: 3 })
        ));
        assert!(matches!(
            build_lower_bound_instance(2, 0),
            Err(HardnessError::BadShape { k: 2, m: 0 })
        ));
    }

    #[test]
    fn unanimity_needs_one_component_per_cell() {
        let lb = build_lower_bound_instance(2, 3).unwrap();
        let search = min_components_for_positivity(&lb, 3, None).unwrap();
        assert_eq!(search.components, 6);
        assert!(search.witness.tally.iter().all(|&t| t == 3));
        assert_eq!(search.witness.allocation.component_count(), 6);
    }

    #[test]
    fn a_majority_is_cheap_for_two_families() {
        let lb = build_lower_bound_instance(2, 3).unwrap();
        let search = min_components_for_positivity(&lb, 2, None).unwrap();
        assert_eq!(search.components, 2);
        assert!(search.witness.tally.iter().all(|&t| t >= 2));
        // One interior cut on the half-unit lattice.
        assert_eq!(search.witness.cuts.len(), 1);
    }

    #[test]
    fn one_positive_member_each_needs_k_runs() {
        for k in 2..=4 {
            let lb = build_lower_bound_instance(k, 1).unwrap();
            let search = min_components_for_positivity(&lb, 1, None).unwrap();
            assert_eq!(search.components, k);
        }
    }

    #[test]
    fn minimum_grows_with_the_quota() {
        let lb = build_lower_bound_instance(2, 3).unwrap();
        let minima: Vec<usize> = (1..=3)
            .map(|q| {
                min_components_for_positivity(&lb, q, None)
                    .unwrap()
                    .components
            })
            .collect();
        assert_eq!(minima, vec![2, 2, 6]);
        let lb = build_lower_bound_instance(3, 2).unwrap();
        let minima: Vec<usize> = (1..=2)
            .map(|q| {
                min_components_for_positivity(&lb, q, None)
                    .unwrap()
                    .components
            })
            .collect();
        assert_eq!(minima, vec![3, 6]);
    }

    #[test]
    fn witnesses_are_deterministic() {
        let lb = build_lower_bound_instance(2, 2).unwrap();
        let a = min_components_for_positivity(&lb, 2, None).unwrap();
        let b = min_components_for_positivity(&lb, 2, None).unwrap();
        assert_eq!(a.witness.pattern, b.witness.pattern);
        assert_eq!(a.witness.cuts, b.witness.cuts);
    }

    #[test]
    fn quota_and_scale_guards() {
        let lb = build_lower_bound_instance(2, 3).unwrap();
        assert!(matches!(
            min_components_for_positivity(&lb, 0, None),
            Err(HardnessError::InvalidQuota { q: 0, m: 3 })
        ));
        assert!(matches!(
            min_components_for_positivity(&lb, 4, None),
            Err(HardnessError::InvalidQuota { q: 4, m: 3 })
        ));
        let big = build_lower_bound_instance(3, 3).unwrap();
        assert!(matches!(
            min_components_for_positivity(&big, 1, None),
            Err(HardnessError::TooLarge { cells: 9, limit: 8 })
        ));
        // An explicit limit admits it.
        let search = min_components_for_positivity(&big, 1, Some(9)).unwrap();
        assert_eq!(search.components, 3);
    }

    #[test]
    fn certificates_match_the_formula() {
        let cert = verify_component_bound(2, 2, 2, None).unwrap();
        assert_eq!(cert.requested.formula_value, 4);
        assert_eq!(cert.requested.search_value, 4);
        assert_eq!(cert.majority.quota, 1);
        assert_eq!(cert.majority.formula_value, 0);
        assert_eq!(cert.majority.search_value, 2);

        let cert = verify_component_bound(3, 2, 2, None).unwrap();
        assert_eq!(cert.requested.formula_value, 6);
        assert_eq!(cert.requested.search_value, 6);

        let cert = verify_component_bound(2, 3, 3, None).unwrap();
        assert_eq!(cert.requested.formula_value, 6);
        assert_eq!(cert.requested.search_value, 6);
        assert_eq!(cert.unanimous.search_value, 6);
        assert_eq!(cert.cut_granularity, rat(1, 2));
    }

    #[test]
    fn formula_handles_vacuous_quotas() {
        // kq < m makes the bound nonpositive, never an error.
        assert_eq!(formula_value(2, 5, 1), -6);
        assert_eq!(formula_value(2, 4, 2), 0);
        assert_eq!(formula_value(3, 2, 2), 6);
        // Ceiling rounds up on fractions.
        assert_eq!(formula_value(3, 1, 1), 3);
        assert_eq!(formula_value(4, 3, 2), num::Integer::div_ceil(&20, &3));
    }
}
