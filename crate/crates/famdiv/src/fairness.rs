//! Exact fairness checkers: three envy-freeness criteria and three
//! proportionality criteria.
//!
//! With families, "nobody envies" can be read three ways, ordered here
//! from weakest to strongest:
//!
//! * **average**: each family's *averaged* valuation weakly prefers its
//!   own piece to every other piece;
//! * **democratic**: in each family, at least half the members weakly
//!   prefer the family's own piece;
//! * **unanimous**: every member of every family weakly prefers the
//!   family's own piece.
//!
//! Unanimous implies both the democratic and the average criterion; the
//! last two are incomparable. Each criterion has a proportionality
//! analogue where "prefers its own piece" is replaced by "values its own
//! piece at least `1/k` of the whole cake".
//!
//! All comparisons are weak inequalities decided in exact rational
//! arithmetic. A [`FairnessReport`] carries the full per-agent and
//! per-family evidence, so a verdict is always accompanied by the exact
//! numbers that produced it.

use crate::instance::{Allocation, Instance, InstanceError, ValidationReport};
use crate::rational::Rational;
use num::{Signed, Zero};
use std::fmt;

/// Errors from the fairness checkers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FairnessError {
    /// The allocation is not an exact partition of the cake; the report
    /// carries exact witnesses (overlaps, gaps, arity).
    #[error("allocation is not a partition of the cake:\n{0}")]
    InvalidPartition(ValidationReport),
    /// Error bubbled up from valuation queries or normalization.
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// The six fairness criteria this crate can check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    AverageEnvyFree,
    DemocraticEnvyFree,
    UnanimousEnvyFree,
    AverageProportional,
    DemocraticProportional,
    UnanimousProportional,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Criterion::AverageEnvyFree => "average-envy-free",
            Criterion::DemocraticEnvyFree => "democratic-envy-free",
            Criterion::UnanimousEnvyFree => "unanimous-envy-free",
            Criterion::AverageProportional => "average-proportional",
            Criterion::DemocraticProportional => "democratic-proportional",
            Criterion::UnanimousProportional => "unanimous-proportional",
        };
        f.write_str(name)
    }
}

/// The quantifier family of a proportionality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProportionalVariant {
    Average,
    Democratic,
    Unanimous,
}

/// What a verdict's own-value was compared against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    /// Envy check against the most attractive rival piece.
    BestRival { family: usize, value: Rational },
    /// Envy check with a single family: there is nothing to envy.
    NoRival,
    /// Proportionality check against the fair share `total / k`.
    FairShare { value: Rational },
}

impl Comparison {
    /// The rational value the own-value must weakly exceed (`None` when
    /// there is no rival at all).
    pub fn threshold(&self) -> Option<&Rational> {
        match self {
            Comparison::BestRival { value, .. } | Comparison::FairShare { value } => Some(value),
            Comparison::NoRival => None,
        }
    }
}

/// One agent's exact verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentVerdict {
    /// Agent index in the instance.
    pub agent: usize,
    /// Agent id, for readable reports.
    pub agent_id: String,
    /// The agent's family index.
    pub family: usize,
    /// The agent's value of its family's piece.
    pub own_value: Rational,
    /// What the own value was compared against.
    pub comparison: Comparison,
    /// `own_value + tolerance >= threshold`.
    pub satisfied: bool,
}

/// One family's exact verdict under the checked criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyVerdict {
    /// Family index in the instance.
    pub family: usize,
    /// Family id, for readable reports.
    pub family_id: String,
    /// Number of members.
    pub member_count: usize,
    /// Members whose individual verdict is satisfied.
    pub satisfied_members: usize,
    /// For average criteria: the family-averaged value of its own piece.
    pub average_own: Option<Rational>,
    /// For average criteria: the averaged comparison value.
    pub average_comparison: Option<Comparison>,
    /// Whether the family passes the criterion's quantifier.
    pub satisfied: bool,
}

/// Full evidence for one fairness check.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessReport {
    /// Which criterion was checked.
    pub criterion: Criterion,
    /// Whether member measures were rescaled to total 1 first.
    pub normalized: bool,
    /// Additive slack granted on every comparison (zero for the exact
    /// checkers; protocols with an epsilon contract set it explicitly).
    pub tolerance: Rational,
    /// The overall verdict.
    pub satisfied: bool,
    /// Per-agent evidence (individual preferences, even for the average
    /// criteria, where they are informative but not decisive).
    pub agents: Vec<AgentVerdict>,
    /// Per-family evidence and quantifier outcome.
    pub families: Vec<FamilyVerdict>,
}

impl FairnessReport {
    /// Agents whose individual verdict failed — the exact witnesses for a
    /// unanimous violation.
    pub fn dissatisfied_agents(&self) -> impl Iterator<Item = &AgentVerdict> {
        self.agents.iter().filter(|v| !v.satisfied)
    }
}

/// Checks average envy-freeness: for every family `j`, the family's
/// averaged valuation of its own piece weakly exceeds its averaged
/// valuation of every other piece. With `normalize`, each member's
/// measure is rescaled to total 1 before averaging (errors if a member
/// values the whole cake at zero).
pub fn check_average_ef(
    instance: &Instance,
    allocation: &Allocation,
    normalize: bool,
) -> Result<FairnessReport, FairnessError> {
    check_average_ef_within(instance, allocation, normalize, Rational::zero())
}

/// [`check_average_ef`] with an additive tolerance: a family is satisfied
/// when `own + tolerance >= rival` for every rival piece. Used by
/// protocols whose guarantee is epsilon-approximate.
pub fn check_average_ef_within(
    instance: &Instance,
    allocation: &Allocation,
    normalize: bool,
    tolerance: Rational,
) -> Result<FairnessReport, FairnessError> {
    require_partition(instance, allocation)?;
    let agents = agent_envy_verdicts(instance, allocation, &tolerance)?;
    let mut families = Vec::with_capacity(instance.family_count());
    for (j, family) in instance.families().iter().enumerate() {
        let averaged = instance.family_average_measure(j, normalize)?;
        let values: Vec<Rational> = allocation
            .pieces
            .iter()
            .map(|p| averaged.value_of_piece(p))
            .collect();
        let own = values[j].clone();
        let comparison = best_rival(&values, j);
        let satisfied = meets(&own, &comparison, &tolerance);
        families.push(FamilyVerdict {
            family: j,
            family_id: family.id.clone(),
            member_count: family.members.len(),
            satisfied_members: satisfied_members_of(&agents, j),
            average_own: Some(own),
            average_comparison: Some(comparison),
            satisfied,
        });
    }
    Ok(FairnessReport {
        criterion: Criterion::AverageEnvyFree,
        normalized: normalize,
        tolerance,
        satisfied: families.iter().all(|f| f.satisfied),
        agents,
        families,
    })
}

/// Checks unanimous envy-freeness: every member of every family weakly
/// prefers its family's own piece to every other piece.
pub fn check_unanimous_ef(
    instance: &Instance,
    allocation: &Allocation,
) -> Result<FairnessReport, FairnessError> {
    require_partition(instance, allocation)?;
    let tolerance = Rational::zero();
    let agents = agent_envy_verdicts(instance, allocation, &tolerance)?;
    let families = quantified_families(instance, &agents, |satisfied, count| satisfied == count);
    Ok(FairnessReport {
        criterion: Criterion::UnanimousEnvyFree,
        normalized: false,
        tolerance,
        satisfied: families.iter().all(|f| f.satisfied),
        agents,
        families,
    })
}

/// Checks democratic envy-freeness: in every family, at least
/// `ceil(members / 2)` members weakly prefer the family's own piece.
pub fn check_democratic_ef(
    instance: &Instance,
    allocation: &Allocation,
) -> Result<FairnessReport, FairnessError> {
    require_partition(instance, allocation)?;
    let tolerance = Rational::zero();
    let agents = agent_envy_verdicts(instance, allocation, &tolerance)?;
    let families = quantified_families(instance, &agents, |satisfied, count| {
        satisfied >= count.div_ceil(2)
    });
    Ok(FairnessReport {
        criterion: Criterion::DemocraticEnvyFree,
        normalized: false,
        tolerance,
        satisfied: families.iter().all(|f| f.satisfied),
        agents,
        families,
    })
}

/// Checks proportionality under the requested quantifier. The individual
/// predicate is `value(own piece) >= value(whole cake) / k`; the average
/// variant applies it to each family's averaged measure, the democratic
/// variant requires at least half of each family to pass, the unanimous
/// variant requires everyone to pass. `normalize` rescales members to
/// total 1 first; it changes nothing for the democratic and unanimous
/// variants (the predicate is scale-free) but does affect the average
/// variant, whose mean weights members by their totals otherwise.
pub fn check_proportional(
    instance: &Instance,
    allocation: &Allocation,
    variant: ProportionalVariant,
    normalize: bool,
) -> Result<FairnessReport, FairnessError> {
    require_partition(instance, allocation)?;
    let tolerance = Rational::zero();
    let k = Rational::from_integer(instance.family_count().into());
    let agents = agent_share_verdicts(instance, allocation, &k, &tolerance)?;
    let (criterion, families) = match variant {
        ProportionalVariant::Unanimous => (
            Criterion::UnanimousProportional,
            quantified_families(instance, &agents, |s, c| s == c),
        ),
        ProportionalVariant::Democratic => (
            Criterion::DemocraticProportional,
            quantified_families(instance, &agents, |s, c| s >= c.div_ceil(2)),
        ),
        ProportionalVariant::Average => {
            let mut families = Vec::with_capacity(instance.family_count());
            for (j, family) in instance.families().iter().enumerate() {
                let averaged = instance.family_average_measure(j, normalize)?;
                let own = averaged.value_of_piece(&allocation.pieces[j]);
                let share = averaged.total() / &k;
                let satisfied = &own + &tolerance >= share;
                families.push(FamilyVerdict {
                    family: j,
                    family_id: family.id.clone(),
                    member_count: family.members.len(),
                    satisfied_members: satisfied_members_of(&agents, j),
                    average_own: Some(own),
                    average_comparison: Some(Comparison::FairShare { value: share }),
                    satisfied,
                });
            }
            (Criterion::AverageProportional, families)
        }
    };
    Ok(FairnessReport {
        criterion,
        normalized: normalize,
        tolerance,
        satisfied: families.iter().all(|f| f.satisfied),
        agents,
        families,
    })
}

/// For each family, the number of members who assign strictly positive
/// value to the family's own piece. Returned in family order.
pub fn positive_agent_tally(
    instance: &Instance,
    allocation: &Allocation,
) -> Result<Vec<usize>, FairnessError> {
    require_partition(instance, allocation)?;
    let mut tallies = Vec::with_capacity(instance.family_count());
    for (j, family) in instance.families().iter().enumerate() {
        let mut positive = 0;
        for &member in &family.members {
            if instance.eval(member, &allocation.pieces[j])?.is_positive() {
                positive += 1;
            }
        }
        tallies.push(positive);
    }
    Ok(tallies)
}

fn require_partition(instance: &Instance, allocation: &Allocation) -> Result<(), FairnessError> {
    let report = instance.validate_partition(allocation);
    if report.is_valid() {
        Ok(())
    } else {
        Err(FairnessError::InvalidPartition(report))
    }
}

fn best_rival(values: &[Rational], own: usize) -> Comparison {
    let mut best: Option<(usize, &Rational)> = None;
    for (j, v) in values.iter().enumerate() {
        if j == own {
            continue;
        }
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((j, v));
        }
    }
    match best {
        Some((family, value)) => Comparison::BestRival {
            family,
            value: value.clone(),
        },
        None => Comparison::NoRival,
    }
}

fn meets(own: &Rational, comparison: &Comparison, tolerance: &Rational) -> bool {
    match comparison.threshold() {
        Some(threshold) => own + tolerance >= *threshold,
        None => true,
    }
}

fn agent_envy_verdicts(
    instance: &Instance,
    allocation: &Allocation,
    tolerance: &Rational,
) -> Result<Vec<AgentVerdict>, FairnessError> {
    let mut verdicts = Vec::with_capacity(instance.agent_count());
    for (i, agent) in instance.agents().iter().enumerate() {
        let family = instance.family_of(i);
        let values: Vec<Rational> = allocation
            .pieces
            .iter()
            .map(|p| agent.measure.value_of_piece(p))
            .collect();
        let own_value = values[family].clone();
        let comparison = best_rival(&values, family);
        let satisfied = meets(&own_value, &comparison, tolerance);
        verdicts.push(AgentVerdict {
            agent: i,
            agent_id: agent.id.clone(),
            family,
            own_value,
            comparison,
            satisfied,
        });
    }
    Ok(verdicts)
}

fn agent_share_verdicts(
    instance: &Instance,
    allocation: &Allocation,
    k: &Rational,
    tolerance: &Rational,
) -> Result<Vec<AgentVerdict>, FairnessError> {
    let mut verdicts = Vec::with_capacity(instance.agent_count());
    for (i, agent) in instance.agents().iter().enumerate() {
        let family = instance.family_of(i);
        let own_value = agent.measure.value_of_piece(&allocation.pieces[family]);
        let share = agent.measure.total() / k;
        let satisfied = &own_value + tolerance >= share;
        verdicts.push(AgentVerdict {
            agent: i,
            agent_id: agent.id.clone(),
            family,
            own_value,
            comparison: Comparison::FairShare { value: share },
            satisfied,
        });
    }
    Ok(verdicts)
}

fn satisfied_members_of(agents: &[AgentVerdict], family: usize) -> usize {
    agents
        .iter()
        .filter(|v| v.family == family && v.satisfied)
        .count()
}

fn quantified_families(
    instance: &Instance,
    agents: &[AgentVerdict],
    quantifier: impl Fn(usize, usize) -> bool,
) -> Vec<FamilyVerdict> {
    instance
        .families()
        .iter()
        .enumerate()
        .map(|(j, family)| {
            let satisfied_members = satisfied_members_of(agents, j);
            FamilyVerdict {
                family: j,
                family_id: family.id.clone(),
                member_count: family.members.len(),
                satisfied_members,
                average_own: None,
                average_comparison: None,
                satisfied: quantifier(satisfied_members, family.members.len()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::estate;
    use crate::geometry::{Interval, Piece};
    use crate::rational::{int, rat};

    fn iv(l: i64, r: i64) -> Interval {
        Interval::new(int(l), int(r))
    }

    fn split(inst: &Instance, cut: i64) -> Allocation {
        let cake = inst.cake().clone();
        Allocation::new(vec![
            Piece::from_interval(Interval::new(cake.left().clone(), int(cut))),
            Piece::from_interval(Interval::new(int(cut), cake.right().clone())),
        ])
    }

    #[test]
    fn estate_middle_cut_is_unanimous() {
        let inst = estate();
        let alloc = split(&inst, 2);
        let report = check_unanimous_ef(&inst, &alloc).unwrap();
        assert!(report.satisfied);
        assert!(report.agents.iter().all(|a| a.satisfied));
        // Unanimous implies the other two on the same allocation.
        assert!(check_average_ef(&inst, &alloc, false).unwrap().satisfied);
        assert!(check_democratic_ef(&inst, &alloc).unwrap().satisfied);
    }

    #[test]
    fn estate_cut_at_one_separates_democratic_from_the_rest() {
        let inst = estate();
        let alloc = split(&inst, 1);

        let democratic = check_democratic_ef(&inst, &alloc).unwrap();
        assert!(democratic.satisfied);
        assert_eq!(democratic.families[0].satisfied_members, 2);
        assert_eq!(democratic.families[1].satisfied_members, 3);

        // Family f1's averaged view: own [0,1] is worth 4, the rival
        // piece [1,4] is worth 5 — so the average criterion fails.
        let average = check_average_ef(&inst, &alloc, false).unwrap();
        assert!(!average.satisfied);
        let f1 = &average.families[0];
        assert_eq!(f1.average_own, Some(int(4)));
        assert_eq!(
            f1.average_comparison,
            Some(Comparison::BestRival {
                family: 1,
                value: int(5)
            })
        );
        assert!(!f1.satisfied);
        assert!(average.families[1].satisfied);

        // Charlie is the unanimity witness: 1 at home vs 8 across.
        let unanimous = check_unanimous_ef(&inst, &alloc).unwrap();
        assert!(!unanimous.satisfied);
        let charlie: Vec<_> = unanimous.dissatisfied_agents().collect();
        assert_eq!(charlie.len(), 1);
        assert_eq!(charlie[0].agent_id, "charlie");
        assert_eq!(charlie[0].own_value, int(1));
        assert_eq!(
            charlie[0].comparison,
            Comparison::BestRival {
                family: 1,
                value: int(8)
            }
        );
    }

    #[test]
    fn estate_cut_at_three_separates_average_from_democratic() {
        let inst = estate();
        let alloc = split(&inst, 3);

        let average = check_average_ef(&inst, &alloc, false).unwrap();
        assert!(average.satisfied);
        let f2 = &average.families[1];
        assert_eq!(f2.average_own, Some(int(5)));
        assert_eq!(
            f2.average_comparison,
            Some(Comparison::BestRival {
                family: 0,
                value: int(4)
            })
        );

        let democratic = check_democratic_ef(&inst, &alloc).unwrap();
        assert!(!democratic.satisfied);
        // David and Eva envy (6 across vs 3 at home); only Frankie is content.
        assert_eq!(democratic.families[1].satisfied_members, 1);
        assert!(democratic.families[0].satisfied);
    }

    #[test]
    fn normalization_changes_only_the_average_weighting() {
        // Make bob's scale dominate f1's raw average: same shape as alice
        // but 100x the density.
        let cake = iv(0, 2);
        let rows = vec![
            (
                "alice".to_owned(),
                "f1".to_owned(),
                StepMeasure::new(vec![int(0), int(1), int(2)], vec![int(1), int(0)]).unwrap(),
            ),
            (
                "bob".to_owned(),
                "f1".to_owned(),
                StepMeasure::new(vec![int(0), int(1), int(2)], vec![int(0), int(100)]).unwrap(),
            ),
            (
                "carol".to_owned(),
                "f2".to_owned(),
                StepMeasure::uniform(&cake, int(1)).unwrap(),
            ),
        ];
        let inst = Instance::from_rows(cake, rows).unwrap();
        let alloc = split(&inst, 1);
        // Raw averaging: f1's own piece [0,1] is worth (1+0)/2 = 1/2, the
        // rival [1,2] is worth (0+100)/2 = 50 — violated.
        assert!(!check_average_ef(&inst, &alloc, false).unwrap().satisfied);
        // Normalized: both members have total 1 entirely on opposite
        // halves; own = rival = 1/2 — satisfied (weakly).
        assert!(check_average_ef(&inst, &alloc, true).unwrap().satisfied);
    }

    use crate::measure::StepMeasure;

    #[test]
    fn normalization_rejects_zero_total_members() {
        let cake = iv(0, 1);
        let rows = vec![
            (
                "a".to_owned(),
                "f1".to_owned(),
                StepMeasure::uniform(&cake, int(0)).unwrap(),
            ),
            (
                "b".to_owned(),
                "f2".to_owned(),
                StepMeasure::uniform(&cake, int(1)).unwrap(),
            ),
        ];
        let inst = Instance::from_rows(cake, rows).unwrap();
        let alloc = Allocation::new(vec![
            Piece::from_interval(Interval::new(int(0), rat(1, 2))),
            Piece::from_interval(Interval::new(rat(1, 2), int(1))),
        ]);
        assert!(matches!(
            check_average_ef(&inst, &alloc, true),
            Err(FairnessError::Instance(
                InstanceError::DegenerateAgent { .. }
            ))
        ));
        // Raw averaging is fine: the zero agent never envies.
        let report = check_average_ef(&inst, &alloc, false).unwrap();
        assert!(report.satisfied);
    }

    #[test]
    fn proportionality_on_the_estate() {
        let inst = estate();
        let alloc = split(&inst, 2);
        for variant in [
            ProportionalVariant::Average,
            ProportionalVariant::Democratic,
            ProportionalVariant::Unanimous,
        ] {
            let report = check_proportional(&inst, &alloc, variant, false).unwrap();
            assert!(report.satisfied, "{:?}", variant);
        }
        // Cut at 1: charlie gets 1 < 9/2, alice and bob stay proportional,
        // so democratic-proportional holds for f1 while unanimous fails.
        let alloc = split(&inst, 1);
        let unan =
            check_proportional(&inst, &alloc, ProportionalVariant::Unanimous, false).unwrap();
        assert!(!unan.satisfied);
        let demo =
            check_proportional(&inst, &alloc, ProportionalVariant::Democratic, false).unwrap();
        assert!(demo.satisfied);
        // f1's raw average of [0,1] is 4 < 9/2: average-proportional fails.
        let avg = check_proportional(&inst, &alloc, ProportionalVariant::Average, false).unwrap();
        assert!(!avg.satisfied);
    }

    #[test]
    fn two_piece_envy_equals_half_share() {
        // With k = 2, an agent envies iff its own piece is below half the
        // agent's total — check both checkers agree on every agent.
        let inst = estate();
        for cut in [1, 2, 3] {
            let alloc = split(&inst, cut);
            let ef = check_unanimous_ef(&inst, &alloc).unwrap();
            let prop =
                check_proportional(&inst, &alloc, ProportionalVariant::Unanimous, false).unwrap();
            for (e, p) in ef.agents.iter().zip(prop.agents.iter()) {
                assert_eq!(e.satisfied, p.satisfied, "agent {}", e.agent_id);
            }
        }
    }

    #[test]
    fn tally_counts_positive_members() {
        let inst = estate();
        let alloc = split(&inst, 2);
        assert_eq!(positive_agent_tally(&inst, &alloc).unwrap(), vec![3, 3]);
        let alloc = split(&inst, 3);
        // f2's piece [3,4]: david 3, eva 3, frankie 9 — all positive.
        assert_eq!(positive_agent_tally(&inst, &alloc).unwrap(), vec![3, 3]);
    }

    #[test]
    fn invalid_partitions_are_rejected_with_witnesses() {
        let inst = estate();
        let alloc = Allocation::new(vec![
            Piece::from_interval(iv(0, 3)),
            Piece::from_interval(iv(2, 4)),
        ]);
        match check_unanimous_ef(&inst, &alloc) {
            Err(FairnessError::InvalidPartition(report)) => {
                assert_eq!(report.overlaps.len(), 1);
            }
            other => panic!("expected invalid partition, got {other:?}"),
        }
    }

    #[test]
    fn single_family_never_envies() {
        let cake = iv(0, 1);
        let inst = Instance::from_rows(
            cake.clone(),
            vec![(
                "solo".to_owned(),
                "f".to_owned(),
                StepMeasure::uniform(&cake, int(3)).unwrap(),
            )],
        )
        .unwrap();
        let alloc = Allocation::new(vec![Piece::from_interval(iv(0, 1))]);
        let report = check_unanimous_ef(&inst, &alloc).unwrap();
        assert!(report.satisfied);
        assert_eq!(report.agents[0].comparison, Comparison::NoRival);
    }
}
