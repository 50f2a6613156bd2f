//! Division protocols for families, one per fairness criterion, plus
//! the reduction that turns an unanimous-envy-free protocol into an
//! exact-division solver.
//!
//! * [`average_ef_connected`] — *connected* pieces, average criterion.
//!   Two families get an exact cut-and-choose on their averaged
//!   measures; three or more get a triangulation walk over the cut
//!   simplex with an `epsilon` guarantee, verified before returning.
//! * [`unanimous_ef_divide`] — unanimous criterion via an exact
//!   division among all agents but one, who then picks the piece its
//!   family keeps. Costs at most `n(k-1) + 1` components.
//! * [`democratic_two_families`] — democratic criterion for two
//!   families with `n` mark queries and a single cut: cut at the
//!   midpoint of the two family median halving points.
//! * [`democratic_general`] — democratic criterion for any number of
//!   families by satisfying only a majority of each family exactly.
//! * [`unef_to_exact_harness`] — the reverse reduction: a synthetic
//!   family instance on which *any* unanimous-envy-free division is
//!   forced to be an exact division of the original measures.

use crate::exact::{solve_exact, verify_exact, ExactDivisionProblem, ExactError, ExactReport};
use crate::fairness::{
    check_average_ef_within, check_democratic_ef, check_unanimous_ef, FairnessError, FairnessReport,
};
use crate::geometry::{Interval, Piece};
use crate::instance::{Allocation, Instance, InstanceError};
use crate::measure::{MeasureError, StepMeasure};
use crate::query::{run_protocol, HonestOracle, Protocol, QueryError, Session};
use crate::rational::Rational;
use num::{Signed, ToPrimitive, Zero};

/// Errors from the division protocols.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("this protocol handles exactly two families, the instance has {got}")]
    WrongFamilyCount { got: usize },
    #[error("epsilon must be positive, got {epsilon}")]
    NonPositiveEpsilon { epsilon: Rational },
    #[error("the harness needs at least one measure")]
    NoMeasures,
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// A division into connected pieces (at most one interval per family).
#[derive(Debug, Clone)]
pub struct ConnectedDivision {
    pub allocation: Allocation,
    /// Interior cut positions between the occupied slots, left to right.
    pub cuts: Vec<Rational>,
    /// Average-envy-freeness evidence, with the tolerance actually
    /// guaranteed (zero for one or two families).
    pub report: FairnessReport,
}

/// Divides the cake into connected pieces that satisfy the average
/// criterion: exactly for up to two families, within `epsilon` (on the
/// raw averaged measures) for three or more.
///
/// Families whose averaged measure is identically zero are never
/// envious; they receive empty pieces and the remaining families share
/// the whole cake.
pub fn average_ef_connected(
    instance: &Instance,
    epsilon: &Rational,
) -> Result<ConnectedDivision, ProtocolError> {
    if !epsilon.is_positive() {
        return Err(ProtocolError::NonPositiveEpsilon {
            epsilon: epsilon.clone(),
        });
    }
    let k = instance.family_count();
    let averages: Vec<StepMeasure> = (0..k)
        .map(|j| instance.family_average_measure(j, false))
        .collect::<Result<_, _>>()?;
    let positive: Vec<usize> = (0..k)
        .filter(|&j| averages[j].total().is_positive())
        .collect();
    let cake = instance.cake().clone();

    let (slot_cuts, slot_owner): (Vec<Rational>, Vec<usize>) = match positive.len() {
        0 => (Vec::new(), vec![]),
        1 => (Vec::new(), vec![positive[0]]),
        2 => {
            // Cut-and-choose on the averaged measures: the first family
            // is indifferent at its halving mark, the second takes the
            // side it weakly prefers.
            let (a, b) = (positive[0], positive[1]);
            let half = averages[a].total() / Rational::from_integer(2.into());
            let x = averages[a].mark(cake.left(), &half)?;
            let right_value = averages[b].value_of(&Interval::new(x.clone(), cake.right().clone()));
            let left_value = averages[b].value_of(&Interval::new(cake.left().clone(), x.clone()));
            if right_value >= left_value {
                (vec![x], vec![a, b])
            } else {
                (vec![x], vec![b, a])
            }
        }
        _ => {
            let sub: Vec<&StepMeasure> = positive.iter().map(|&j| &averages[j]).collect();
            let (cuts, perm) = sperner_connected(&cake, &sub, epsilon);
            // `perm[s]` is the slot assigned to sub-family `s`; invert to
            // owner-per-slot in original family indices.
            let mut owner = vec![usize::MAX; positive.len()];
            for (s, &slot) in perm.iter().enumerate() {
                owner[slot] = positive[s];
            }
            (cuts, owner)
        }
    };

    let mut pieces = vec![Piece::empty(); k];
    let mut boundaries = Vec::with_capacity(slot_owner.len() + 1);
    boundaries.push(cake.left().clone());
    boundaries.extend(slot_cuts.iter().cloned());
    boundaries.push(cake.right().clone());
    if slot_owner.is_empty() {
        // Every family is indifferent to everything; hand family 0 the
        // cake to complete the partition.
        pieces[0] = Piece::from_interval(cake.clone());
    } else {
        for (slot, &family) in slot_owner.iter().enumerate() {
            pieces[family] = Piece::from_interval(Interval::new(
                boundaries[slot].clone(),
                boundaries[slot + 1].clone(),
            ));
        }
    }
    let allocation = Allocation::new(pieces);
    let tolerance = if positive.len() <= 2 {
        Rational::zero()
    } else {
        epsilon.clone()
    };
    let report = check_average_ef_within(instance, &allocation, false, tolerance)?;
    debug_assert!(report.satisfied);
    Ok(ConnectedDivision {
        allocation,
        cuts: slot_cuts,
        report,
    })
}

/// Triangulation walk over the cut simplex for `k >= 3` connected
/// pieces. Returns interior cuts and, per sub-family, the slot index it
/// should own. The mesh is refined until the verified envy is within
/// `epsilon`; termination is guaranteed because the averaged measures
/// are Lipschitz (their densities are bounded), so a fine enough mesh
/// always certifies.
fn sperner_connected(
    cake: &Interval,
    averages: &[&StepMeasure],
    epsilon: &Rational,
) -> (Vec<Rational>, Vec<usize>) {
    let k = averages.len();
    let length = cake.length();
    // envy at a fully-labeled cell of mesh L/m is at most 4·D·L/m, with D
    // the largest density; past this mesh the first cell found certifies.
    let max_density = averages
        .iter()
        .flat_map(|w| w.densities().iter())
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero);
    let certifying_mesh = (Rational::from_integer(4.into()) * max_density * &length / epsilon)
        .ceil()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX / 4)
        .max(k);

    let mut m = k;
    loop {
        if let Some((cuts, perm)) = fully_labeled_cell(cake, averages, m) {
            if max_envy(averages, &cuts, &perm, cake) <= *epsilon {
                return (cuts, perm);
            }
        }
        assert!(
            m <= 2 * certifying_mesh,
            "triangulation failed to certify below the Lipschitz mesh bound",
        );
        m *= 2;
    }
}

fn max_envy(
    averages: &[&StepMeasure],
    cuts: &[Rational],
    perm: &[usize],
    cake: &Interval,
) -> Rational {
    let mut boundaries = Vec::with_capacity(cuts.len() + 2);
    boundaries.push(cake.left().clone());
    boundaries.extend(cuts.iter().cloned());
    boundaries.push(cake.right().clone());
    let mut worst = Rational::zero();
    for (s, w) in averages.iter().enumerate() {
        let values: Vec<Rational> = (0..=cuts.len())
            .map(|p| {
                w.value_of(&Interval::new(
                    boundaries[p].clone(),
                    boundaries[p + 1].clone(),
                ))
            })
            .collect();
        let own = &values[perm[s]];
        for v in &values {
            let envy = v - own;
            if envy > worst {
                worst = envy;
            }
        }
    }
    worst
}

/// Scans the Freudenthal triangulation of the ordered cut lattice at
/// mesh `m` for a cell whose vertices (owned round-robin by coordinate
/// sum) all prefer different slots. Returns the base vertex's cuts and
/// the per-sub-family slot choice.
fn fully_labeled_cell(
    cake: &Interval,
    averages: &[&StepMeasure],
    m: usize,
) -> Option<(Vec<Rational>, Vec<usize>)> {
    let k = averages.len();
    let dims = k - 1;
    let length = cake.length();
    let m_rat = Rational::from_integer(m.into());
    // cdf of each averaged measure at every lattice point.
    let lattice_point = |c: usize| -> Rational {
        cake.left() + &length * Rational::from_integer(c.into()) / &m_rat
    };
    let tables: Vec<Vec<Rational>> = averages
        .iter()
        .map(|w| (0..=m).map(|c| w.cdf(&lattice_point(c))).collect())
        .collect();

    // A vertex's label: which slot its owner likes best there.
    let label = |vertex: &[usize]| -> (usize, usize) {
        let owner = vertex.iter().sum::<usize>() % k;
        let table = &tables[owner];
        let mut best_slot = 0;
        let mut best_value: Option<Rational> = None;
        for p in 0..k {
            let left = if p == 0 { 0 } else { vertex[p - 1] };
            let right = if p == dims { m } else { vertex[p] };
            let value = &table[right] - &table[left];
            if best_value.as_ref().is_none_or(|b| value > *b) {
                best_value = Some(value);
                best_slot = p;
            }
        }
        (owner, best_slot)
    };

    let ordered = |v: &[usize]| -> bool {
        v.windows(2).all(|w| w[0] <= w[1]) && v.last().is_none_or(|&last| last <= m)
    };

    let mut perms: Vec<Vec<usize>> = Vec::new();
    permutations(dims, &mut Vec::new(), &mut vec![false; dims], &mut perms);

    let mut base = vec![0usize; dims];
    loop {
        'cell: for perm in &perms {
            let mut vertex = base.clone();
            let mut owners_to_slots = vec![usize::MAX; k];
            let mut seen_slots = vec![false; k];
            let (owner, slot) = label(&vertex);
            owners_to_slots[owner] = slot;
            seen_slots[slot] = true;
            for &coord in perm {
                vertex[coord] += 1;
                if !ordered(&vertex) {
                    continue 'cell;
                }
                let (owner, slot) = label(&vertex);
                if seen_slots[slot] {
                    continue 'cell;
                }
                owners_to_slots[owner] = slot;
                seen_slots[slot] = true;
            }
            let cuts = base.iter().map(|&c| lattice_point(c)).collect();
            return Some((cuts, owners_to_slots));
        }
        // Advance to the next nondecreasing base vector in lex order:
        // bump the rightmost coordinate below `m` and level everything
        // after it.
        let mut i = dims;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if base[i] < m {
                base[i] += 1;
                let floor = base[i];
                for b in base.iter_mut().skip(i + 1) {
                    *b = floor;
                }
                break true;
            }
        };
        if !advanced {
            return None;
        }
    }
}

fn permutations(
    n: usize,
    current: &mut Vec<usize>,
    used: &mut Vec<bool>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == n {
        out.push(current.clone());
        return;
    }
    for i in 0..n {
        if !used[i] {
            used[i] = true;
            current.push(i);
            permutations(n, current, used, out);
            current.pop();
            used[i] = false;
        }
    }
}

/// A division satisfying the unanimous criterion.
#[derive(Debug, Clone)]
pub struct UnanimousDivision {
    pub allocation: Allocation,
    /// The agent who chose last (and whose family keeps its pick).
    pub chooser: usize,
    /// Total interval components across all pieces.
    pub components: usize,
    pub report: FairnessReport,
}

/// Divides the cake so that *every* member of every family weakly
/// prefers its family's piece: all agents but one receive an exact
/// division (each piece worth exactly `1/k` to each of them), and the
/// remaining agent — the last member of the last family — picks the
/// piece its family keeps. Uses at most `n(k-1) + 1` components, with
/// `n` counting distinct non-chooser measures.
pub fn unanimous_ef_divide(instance: &Instance) -> Result<UnanimousDivision, ProtocolError> {
    let k = instance.family_count();
    let chooser = *instance
        .families()
        .last()
        .expect("instances have families")
        .members
        .last()
        .expect("families are nonempty");
    let measures: Vec<StepMeasure> = instance
        .agents()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != chooser)
        .map(|(_, a)| a.measure.clone())
        .collect();
    let problem = ExactDivisionProblem {
        cake: instance.cake().clone(),
        measures,
        pieces: k,
        max_components: None,
    };
    let solution = solve_exact(&problem)?;
    let allocation = assign_after_choice(
        instance,
        &solution.allocation,
        instance.family_of(chooser),
        pick_favorite(&instance.agents()[chooser].measure, &solution.allocation),
    );
    let components = allocation.component_count();
    let report = check_unanimous_ef(instance, &allocation)?;
    debug_assert!(report.satisfied);
    Ok(UnanimousDivision {
        allocation,
        chooser,
        components,
        report,
    })
}

/// The piece index the measure values most, lowest index on ties.
fn pick_favorite(measure: &StepMeasure, allocation: &Allocation) -> usize {
    let mut best = 0;
    let mut best_value: Option<Rational> = None;
    for (p, piece) in allocation.pieces.iter().enumerate() {
        let value = measure.value_of_piece(piece);
        if best_value.as_ref().is_none_or(|b| value > *b) {
            best_value = Some(value);
            best = p;
        }
    }
    best
}

/// Reindexes solver pieces to families: the chooser's family takes the
/// picked piece, the other families take the remaining pieces in index
/// order.
fn assign_after_choice(
    instance: &Instance,
    pieces: &Allocation,
    chooser_family: usize,
    picked: usize,
) -> Allocation {
    let k = instance.family_count();
    let mut assigned = vec![Piece::empty(); k];
    assigned[chooser_family] = pieces.pieces[picked].clone();
    let mut leftover = (0..k).filter(|&p| p != picked);
    for family in 0..k {
        if family != chooser_family {
            let p = leftover.next().expect("one piece per family");
            assigned[family] = pieces.pieces[p].clone();
        }
    }
    Allocation::new(assigned)
}

/// A median-based two-family split.
#[derive(Debug, Clone)]
pub struct DemocraticSplit {
    pub allocation: Allocation,
    /// The two families' lower-median halving points.
    pub medians: [Rational; 2],
    /// The cut: the midpoint of the two medians.
    pub midpoint: Rational,
    /// Queries spent (always exactly the number of agents).
    pub queries: usize,
    pub report: FairnessReport,
}

/// Asks every agent for its halving point in the query model.
struct HalfMarkProtocol {
    totals: Vec<Rational>,
}

impl Protocol for HalfMarkProtocol {
    type Output = Vec<Rational>;

    fn run(&self, session: &mut Session<'_>) -> Result<Vec<Rational>, QueryError> {
        let left = session.cake().left().clone();
        let two = Rational::from_integer(2.into());
        let mut marks = Vec::with_capacity(self.totals.len());
        for (agent, total) in self.totals.iter().enumerate() {
            marks.push(session.mark(agent, &left, &(total / &two))?);
        }
        Ok(marks)
    }
}

/// Splits the cake between exactly two families with a single cut and
/// one mark query per agent, guaranteeing the democratic criterion: at
/// least half of each family weakly prefers its side.
///
/// Each agent marks its halving point (its total is treated as public,
/// so this is one query). The cut is the midpoint of the two families'
/// lower-median marks; the family with the smaller median takes the
/// left side (ties go to the first family). Members whose halving
/// point is on their family's side of the cut are satisfied — and the
/// lower median puts at least half of each family there.
pub fn democratic_two_families(instance: &Instance) -> Result<DemocraticSplit, ProtocolError> {
    if instance.family_count() != 2 {
        return Err(ProtocolError::WrongFamilyCount {
            got: instance.family_count(),
        });
    }
    let protocol = HalfMarkProtocol {
        totals: instance
            .agents()
            .iter()
            .map(|a| a.measure.total())
            .collect(),
    };
    let mut oracle = HonestOracle::new(instance);
    let (marks, transcript) = run_protocol(&protocol, &mut oracle, Some(instance.agent_count()))?;

    let median = |family: usize| -> Rational {
        let mut member_marks: Vec<Rational> = instance.families()[family]
            .members
            .iter()
            .map(|&i| marks[i].clone())
            .collect();
        member_marks.sort();
        member_marks[member_marks.len().div_ceil(2) - 1].clone()
    };
    let medians = [median(0), median(1)];
    let midpoint = (&medians[0] + &medians[1]) / Rational::from_integer(2.into());
    let left_piece = Piece::from_interval(Interval::new(
        instance.cake().left().clone(),
        midpoint.clone(),
    ));
    let right_piece = Piece::from_interval(Interval::new(
        midpoint.clone(),
        instance.cake().right().clone(),
    ));
    let pieces = if medians[0] <= medians[1] {
        vec![left_piece, right_piece]
    } else {
        vec![right_piece, left_piece]
    };
    let allocation = Allocation::new(pieces);
    let report = check_democratic_ef(instance, &allocation)?;
    debug_assert!(report.satisfied);
    Ok(DemocraticSplit {
        allocation,
        medians,
        midpoint,
        queries: transcript.query_count(),
        report,
    })
}

/// A majority-exact division for any number of families.
#[derive(Debug, Clone)]
pub struct DemocraticGeneralDivision {
    pub allocation: Allocation,
    /// The agents (majority of each family) who took part.
    pub selected: Vec<usize>,
    /// The selected agent who picked rather than being cut for.
    pub chooser: usize,
    pub components: usize,
    pub report: FairnessReport,
}

/// Divides the cake among any number of families so that at least half
/// of every family weakly prefers its own piece: the first
/// `ceil(members/2)` members of each family join a sub-instance, which
/// is divided by [`unanimous_ef_divide`]'s cut-and-choose — exactly
/// indifferent agents plus one satisfied chooser are a majority
/// everywhere. Components stay within `(k-1)·(m'-1) + 1`, where `m'` is
/// the number of selected agents.
pub fn democratic_general(instance: &Instance) -> Result<DemocraticGeneralDivision, ProtocolError> {
    let k = instance.family_count();
    let mut selected: Vec<usize> = Vec::new();
    for family in instance.families() {
        let majority = family.members.len().div_ceil(2);
        selected.extend(family.members.iter().take(majority).copied());
    }
    let chooser = *selected.last().expect("at least one family");
    let measures: Vec<StepMeasure> = selected
        .iter()
        .filter(|&&i| i != chooser)
        .map(|&i| instance.agents()[i].measure.clone())
        .collect();
    let problem = ExactDivisionProblem {
        cake: instance.cake().clone(),
        measures,
        pieces: k,
        max_components: None,
    };
    let solution = solve_exact(&problem)?;
    let allocation = assign_after_choice(
        instance,
        &solution.allocation,
        instance.family_of(chooser),
        pick_favorite(&instance.agents()[chooser].measure, &solution.allocation),
    );
    let components = allocation.component_count();
    let report = check_democratic_ef(instance, &allocation)?;
    debug_assert!(report.satisfied);
    Ok(DemocraticGeneralDivision {
        allocation,
        selected,
        chooser,
        components,
        report,
    })
}

/// What the unanimous-to-exact reduction produced.
#[derive(Debug, Clone)]
pub struct HarnessOutcome {
    /// The synthetic family instance the reduction builds.
    pub instance: Instance,
    /// The unanimous division of that instance.
    pub division: UnanimousDivision,
    /// Audit of the division as an exact division of the *original*
    /// measures — `exact` is always true; that is the theorem.
    pub exact_report: ExactReport,
}

/// Builds the instance that forces unanimous envy-freeness to coincide
/// with exact division, divides it, and audits the result.
///
/// The construction: `pieces - 1` families each containing a copy of
/// every input measure, plus a final singleton family holding the
/// plain average of the inputs. Each copied agent sits in every
/// non-singleton family, so unanimity forces its value to be equal on
/// all their pieces and no smaller than on the singleton's piece;
/// summing against the average (which must also not envy) squeezes
/// every inequality into an equality. No rescaling of the inputs is
/// needed anywhere in that argument.
pub fn unef_to_exact_harness(
    cake: &Interval,
    measures: &[StepMeasure],
    pieces: usize,
) -> Result<HarnessOutcome, ProtocolError> {
    if measures.is_empty() {
        return Err(ProtocolError::NoMeasures);
    }
    if pieces == 0 {
        return Err(ProtocolError::Exact(ExactError::NoPieces));
    }
    let mut rows: Vec<(String, String, StepMeasure)> = Vec::new();
    for g in 1..pieces {
        for (i, m) in measures.iter().enumerate() {
            rows.push((format!("m{i}@g{g}"), format!("g{g}"), m.clone()));
        }
    }
    let refs: Vec<&StepMeasure> = measures.iter().collect();
    let average = StepMeasure::average_of(&refs)?;
    rows.push(("average".to_owned(), "avg".to_owned(), average));
    let instance = Instance::from_rows(cake.clone(), rows)?;
    let division = unanimous_ef_divide(&instance)?;
    let problem = ExactDivisionProblem {
        cake: cake.clone(),
        measures: measures.to_vec(),
        pieces,
        max_components: None,
    };
    let exact_report = verify_exact(&problem, &division.allocation)?;
    debug_assert!(exact_report.exact);
    Ok(HarnessOutcome {
        instance,
        division,
        exact_report,
    })
}
