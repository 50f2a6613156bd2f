//! Exact division: cutting the cake into `k` pieces that *every* agent
//! values at exactly `1/k` of the whole, and its approximate sibling,
//! the consensus halving.
//!
//! An exact division always exists using at most `n(k-1) + 1` interval
//! components in total, where `n` counts the *distinct* value measures
//! (agents whose measures are positive multiples of each other impose
//! the same constraint, and identically-zero agents impose none). The
//! solver below is exhaustive within that bound and therefore doubles
//! as a decision procedure: it either returns a division or proves that
//! none exists within the requested component budget.
//!
//! The search enumerates *patterns* — which piece each maximal cell
//! between consecutive cuts belongs to — in order of increasing cell
//! count, then assigns each cut to a density segment of the common
//! refinement, prunes assignments whose attainable piece values cannot
//! reach `1/k`, and solves the resulting linear system exactly at each
//! leaf. The output is deterministic: the first feasible pattern in
//! (length, lexicographic) order, with the lexicographically smallest
//! cut vector among its solutions.

use crate::geometry::{Interval, Piece};
use crate::instance::Allocation;
use crate::linalg::{kernel_vector, solve_linear_system, BoxedLp, LinearOutcome, LpOutcome};
use crate::measure::{common_breakpoints, MeasureError, StepMeasure};
use crate::rational::Rational;
use num::{One, Signed, Zero};

/// Errors from the exact-division solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    /// The number of pieces must be at least one.
    #[error("an exact division needs at least one piece")]
    NoPieces,
    /// Measure `index` is not defined exactly on the cake.
    #[error("measure {index} is defined on [{found_left}, {found_right}], not on the cake [{cake_left}, {cake_right}]")]
    DomainMismatch {
        index: usize,
        found_left: Rational,
        found_right: Rational,
        cake_left: Rational,
        cake_right: Rational,
    },
    /// The search space within the component budget is exhausted.
    #[error("no exact division with at most {budget} components; {needed} components always suffice here")]
    Infeasible { budget: usize, needed: usize },
    /// An allocation handed to the verifier has the wrong number of pieces.
    #[error("expected {expected} pieces, got {got}")]
    WrongArity { expected: usize, got: usize },
    /// An allocation handed to the verifier does not partition the cake.
    #[error("allocation is not a partition of the cake")]
    NotAPartition,
    /// The approximation parameter must be positive.
    #[error("epsilon must be positive, got {epsilon}")]
    NonPositiveEpsilon { epsilon: Rational },
    /// Error bubbled up from measure operations.
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// An exact-division instance: split `cake` into `pieces` pieces so that
/// every measure values each piece at exactly `total / pieces`.
#[derive(Debug, Clone)]
pub struct ExactDivisionProblem {
    pub cake: Interval,
    pub measures: Vec<StepMeasure>,
    pub pieces: usize,
    /// Optional cap on the total number of interval components; `None`
    /// grants the solver the `n(k-1) + 1` it may need.
    pub max_components: Option<usize>,
}

/// A solved exact division.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    /// One piece per index `0..pieces`, partitioning the cake.
    pub allocation: Allocation,
    /// The interior cut positions, sorted ascending.
    pub cuts: Vec<Rational>,
    /// `labels[c]` is the piece owning the `c`-th cell between cuts.
    pub labels: Vec<usize>,
    /// Total number of interval components across all pieces.
    pub components: usize,
    /// Distinct nonzero measures that actually constrained the search.
    pub effective_measures: usize,
}

/// Exact per-measure audit of a proposed division.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactReport {
    /// `piece_values[i][p]` is measure `i`'s value of piece `p`.
    pub piece_values: Vec<Vec<Rational>>,
    /// `targets[i]` is measure `i`'s total divided by the piece count.
    pub targets: Vec<Rational>,
    /// Largest `|piece_values[i][p] - targets[i]|`.
    pub max_abs_deviation: Rational,
    /// True when every deviation is exactly zero.
    pub exact: bool,
}

impl ExactDivisionProblem {
    fn validate(&self) -> Result<(), ExactError> {
        if self.pieces == 0 {
            return Err(ExactError::NoPieces);
        }
        for (index, m) in self.measures.iter().enumerate() {
            let domain = m.domain();
            if domain != self.cake {
                return Err(ExactError::DomainMismatch {
                    index,
                    found_left: domain.left().clone(),
                    found_right: domain.right().clone(),
                    cake_left: self.cake.left().clone(),
                    cake_right: self.cake.right().clone(),
                });
            }
        }
        Ok(())
    }

    /// Distinct nonzero measures, normalized to total 1. Two measures
    /// that are positive multiples of one another demand the same
    /// divisions, so only one representative is kept.
    fn effective_measures(&self) -> Vec<StepMeasure> {
        let mut kept: Vec<StepMeasure> = Vec::new();
        for m in &self.measures {
            if m.total().is_zero() {
                continue;
            }
            let normalized = m.normalized().expect("nonzero total").canonical();
            if !kept.iter().any(|k| k.equivalent(&normalized)) {
                kept.push(normalized);
            }
        }
        kept
    }
}

/// Solves the exact-division problem. Deterministic: the returned
/// division uses the fewest cells any solution needs, and among the
/// solutions with that cell layout, the lexicographically smallest cut
/// vector.
pub fn solve_exact(problem: &ExactDivisionProblem) -> Result<ExactSolution, ExactError> {
    problem.validate()?;
    let k = problem.pieces;
    let effective = problem.effective_measures();
    let n_eff = effective.len();
    let needed = if n_eff == 0 { k } else { n_eff * (k - 1) + 1 };
    let budget = problem.max_components.unwrap_or(needed).min(needed);
    if budget < k {
        return Err(ExactError::Infeasible { budget, needed });
    }

    if n_eff == 0 {
        // Nothing constrains the division; cut into k equal lengths.
        return Ok(assemble(
            &problem.cake,
            k,
            equal_length_cuts(&problem.cake, k),
            (0..k).collect(),
            0,
        ));
    }

    let refinement = Refinement::build(&problem.cake, &effective);
    for length in k..=budget {
        for pattern in canonical_patterns(length, k) {
            if let Some(cuts) = best_cuts_for_pattern(&refinement, &pattern, k) {
                return Ok(assemble(&problem.cake, k, cuts, pattern, n_eff));
            }
        }
    }
    Err(ExactError::Infeasible { budget, needed })
}

/// Audits `allocation` against the problem: exact piece values, targets,
/// and the largest deviation. Errors if the allocation does not have
/// `pieces` pieces or does not partition the cake.
pub fn verify_exact(
    problem: &ExactDivisionProblem,
    allocation: &Allocation,
) -> Result<ExactReport, ExactError> {
    problem.validate()?;
    if allocation.pieces.len() != problem.pieces {
        return Err(ExactError::WrongArity {
            expected: problem.pieces,
            got: allocation.pieces.len(),
        });
    }
    require_partition(&problem.cake, &allocation.pieces)?;
    let k = Rational::from_integer(problem.pieces.into());
    let mut piece_values = Vec::with_capacity(problem.measures.len());
    let mut targets = Vec::with_capacity(problem.measures.len());
    let mut max_abs = Rational::zero();
    for m in &problem.measures {
        let values: Vec<Rational> = allocation
            .pieces
            .iter()
            .map(|p| m.value_of_piece(p))
            .collect();
        let target = m.total() / &k;
        for v in &values {
            let dev = (v - &target).abs();
            if dev > max_abs {
                max_abs = dev;
            }
        }
        piece_values.push(values);
        targets.push(target);
    }
    Ok(ExactReport {
        piece_values,
        targets,
        exact: max_abs.is_zero(),
        max_abs_deviation: max_abs,
    })
}

fn require_partition(cake: &Interval, pieces: &[Piece]) -> Result<(), ExactError> {
    let mut union = Piece::empty();
    for (i, piece) in pieces.iter().enumerate() {
        if !piece.within(cake) {
            return Err(ExactError::NotAPartition);
        }
        for other in &pieces[i + 1..] {
            if piece.interior_overlap(other).is_some() {
                return Err(ExactError::NotAPartition);
            }
        }
        union = union.union(piece);
    }
    if union.gaps_within(cake).is_empty() {
        Ok(())
    } else {
        Err(ExactError::NotAPartition)
    }
}

fn equal_length_cuts(cake: &Interval, k: usize) -> Vec<Rational> {
    let len = cake.length();
    let k_rat = Rational::from_integer(k.into());
    (1..k)
        .map(|i| cake.left() + &len * Rational::from_integer(i.into()) / &k_rat)
        .collect()
}

fn assemble(
    cake: &Interval,
    k: usize,
    cuts: Vec<Rational>,
    labels: Vec<usize>,
    effective_measures: usize,
) -> ExactSolution {
    let mut boundaries = Vec::with_capacity(labels.len() + 1);
    boundaries.push(cake.left().clone());
    boundaries.extend(cuts.iter().cloned());
    boundaries.push(cake.right().clone());
    let mut per_piece: Vec<Vec<Interval>> = vec![Vec::new(); k];
    for (c, &label) in labels.iter().enumerate() {
        per_piece[label].push(Interval::new(
            boundaries[c].clone(),
            boundaries[c + 1].clone(),
        ));
    }
    let allocation = Allocation::new(per_piece.into_iter().map(Piece::from_intervals).collect());
    let components = allocation.component_count();
    ExactSolution {
        allocation,
        cuts,
        labels,
        components,
        effective_measures,
    }
}

/// The common breakpoint refinement of the effective measures, with a
/// normalized prefix-value table per measure: `cdf[i][s]` is measure
/// `i`'s value of the cake up to breakpoint `s`.
struct Refinement {
    breakpoints: Vec<Rational>,
    cdf: Vec<Vec<Rational>>,
    density: Vec<Vec<Rational>>,
}

impl Refinement {
    fn build(cake: &Interval, effective: &[StepMeasure]) -> Self {
        let mut breakpoints = common_breakpoints(effective.iter());
        if breakpoints.is_empty() {
            breakpoints = vec![cake.left().clone(), cake.right().clone()];
        }
        let cdf: Vec<Vec<Rational>> = effective
            .iter()
            .map(|m| breakpoints.iter().map(|b| m.cdf(b)).collect())
            .collect();
        let density: Vec<Vec<Rational>> = effective
            .iter()
            .map(|m| {
                (0..breakpoints.len() - 1)
                    .map(|s| {
                        let width = &breakpoints[s + 1] - &breakpoints[s];
                        if width.is_zero() {
                            Rational::zero()
                        } else {
                            (m.cdf(&breakpoints[s + 1]) - m.cdf(&breakpoints[s])) / width
                        }
                    })
                    .collect()
            })
            .collect();
        Refinement {
            breakpoints,
            cdf,
            density,
        }
    }

    fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    fn measures(&self) -> usize {
        self.cdf.len()
    }
}

/// All piece-label sequences of the given length in canonical form:
/// adjacent labels distinct, labels introduced in increasing order
/// starting from 0, and all `k` labels present.
fn canonical_patterns(length: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(length);
    fn recurse(
        length: usize,
        k: usize,
        used: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == length {
            if used == k {
                out.push(current.clone());
            }
            return;
        }
        // Even using a fresh label at every remaining step, can we still
        // introduce all k labels?
        if used + (length - current.len()) < k {
            return;
        }
        let prev = current.last().copied();
        for next in 0..=used.min(k - 1) {
            if Some(next) == prev || (next == used && next >= k) {
                continue;
            }
            let introduced = if next == used { used + 1 } else { used };
            current.push(next);
            recurse(length, k, introduced, current, out);
            current.pop();
        }
    }
    recurse(length, k, 0, &mut current, &mut out);
    out
}

/// Searches all segment assignments for the pattern's cuts and returns
/// the lexicographically smallest feasible cut vector, if any.
fn best_cuts_for_pattern(
    refinement: &Refinement,
    pattern: &[usize],
    k: usize,
) -> Option<Vec<Rational>> {
    let cut_count = pattern.len() - 1;
    if cut_count == 0 {
        // Single cell: feasible iff k == 1, and then there are no
        // equations to satisfy (the whole cake is the one piece).
        return if k == 1 { Some(Vec::new()) } else { None };
    }
    let mut assignment = Vec::with_capacity(cut_count);
    let mut best: Option<Vec<Rational>> = None;
    search_assignments(refinement, pattern, k, &mut assignment, &mut best);
    best
}

fn search_assignments(
    refinement: &Refinement,
    pattern: &[usize],
    k: usize,
    assignment: &mut Vec<usize>,
    best: &mut Option<Vec<Rational>>,
) {
    let cut_count = pattern.len() - 1;
    if !bounds_admit_target(refinement, pattern, k, assignment) {
        return;
    }
    if assignment.len() == cut_count {
        if let Some(cuts) = solve_leaf(refinement, pattern, k, assignment) {
            let better = match best {
                None => true,
                Some(current) => cuts < *current,
            };
            if better {
                *best = Some(cuts);
            }
        }
        return;
    }
    let from = assignment.last().copied().unwrap_or(0);
    for seg in from..refinement.segments() {
        assignment.push(seg);
        search_assignments(refinement, pattern, k, assignment, best);
        assignment.pop();
    }
}

/// Interval-arithmetic feasibility filter: with the cuts boxed by their
/// (partial) segment assignment, every piece's attainable value range
/// must still contain 1/k for every measure.
fn bounds_admit_target(
    refinement: &Refinement,
    pattern: &[usize],
    k: usize,
    assignment: &[usize],
) -> bool {
    let cut_count = pattern.len() - 1;
    let segments = refinement.segments();
    // Breakpoint-index box per cut: assigned cuts live in their segment,
    // unassigned ones anywhere from the last assigned segment rightward.
    let floor = assignment.last().copied().unwrap_or(0);
    let lo_idx = |t: usize| -> usize {
        if t < assignment.len() {
            assignment[t]
        } else {
            floor
        }
    };
    let hi_idx = |t: usize| -> usize {
        if t < assignment.len() {
            assignment[t] + 1
        } else {
            segments
        }
    };
    let target = Rational::from_integer(1.into()) / Rational::from_integer(k.into());
    for i in 0..refinement.measures() {
        let cdf = &refinement.cdf[i];
        let mut lo = vec![Rational::zero(); k];
        let mut hi = vec![Rational::zero(); k];
        for (c, &label) in pattern.iter().enumerate() {
            // Cell c spans cut c-1 to cut c (cake ends at the extremes).
            let (left_lo, left_hi) = if c == 0 {
                (0, 0)
            } else {
                (lo_idx(c - 1), hi_idx(c - 1))
            };
            let (right_lo, right_hi) = if c == cut_count {
                (segments, segments)
            } else {
                (lo_idx(c), hi_idx(c))
            };
            let cell_lo = &cdf[right_lo] - &cdf[left_hi];
            if cell_lo.is_positive() {
                lo[label] += cell_lo;
            }
            hi[label] += &cdf[right_hi] - &cdf[left_lo];
        }
        for p in 0..k {
            if lo[p] > target || hi[p] < target {
                return false;
            }
        }
    }
    true
}

/// Solves one fully-assigned leaf exactly. Returns the lexicographically
/// smallest cut vector satisfying the equations, the segment boxes, and
/// the cut ordering, or `None`.
fn solve_leaf(
    refinement: &Refinement,
    pattern: &[usize],
    k: usize,
    assignment: &[usize],
) -> Option<Vec<Rational>> {
    let cut_count = pattern.len() - 1;
    let n = refinement.measures();
    let target = Rational::from_integer(1.into()) / Rational::from_integer(k.into());

    // Linear value of cut t for measure i: coeff * x_t + constant.
    let coeff = |i: usize, t: usize| -> Rational { refinement.density[i][assignment[t]].clone() };
    let constant = |i: usize, t: usize| -> Rational {
        let s = assignment[t];
        &refinement.cdf[i][s] - &refinement.density[i][s] * &refinement.breakpoints[s]
    };

    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(n * (k - 1));
    let mut rhs: Vec<Rational> = Vec::with_capacity(n * (k - 1));
    for i in 0..n {
        for p in 0..k.saturating_sub(1) {
            let mut row = vec![Rational::zero(); cut_count];
            let mut cst = Rational::zero();
            for (c, &label) in pattern.iter().enumerate() {
                if label != p {
                    continue;
                }
                if c == cut_count {
                    cst += refinement.cdf[i].last().expect("nonempty");
                } else {
                    row[c] = &row[c] + coeff(i, c);
                    cst += constant(i, c);
                }
                if c == 0 {
                    // Left boundary of the first cell contributes zero.
                } else {
                    row[c - 1] = &row[c - 1] - coeff(i, c - 1);
                    cst -= constant(i, c - 1);
                }
            }
            rows.push(row);
            rhs.push(&target - cst);
        }
    }

    let in_box = |cuts: &[Rational]| -> bool {
        for (t, x) in cuts.iter().enumerate() {
            let s = assignment[t];
            if x < &refinement.breakpoints[s] || x > &refinement.breakpoints[s + 1] {
                return false;
            }
            if t + 1 < cuts.len() && assignment[t] == assignment[t + 1] && x > &cuts[t + 1] {
                return false;
            }
        }
        true
    };

    match solve_linear_system(rows.clone(), rhs.clone()) {
        LinearOutcome::Infeasible => None,
        LinearOutcome::Unique(cuts) => in_box(&cuts).then_some(cuts),
        LinearOutcome::Underdetermined { .. } => lexmin_cuts(refinement, assignment, rows, rhs),
    }
}

/// Lexicographic minimization over the leaf polytope, one linear program
/// per cut, pinning each optimal coordinate before minimizing the next.
fn lexmin_cuts(
    refinement: &Refinement,
    assignment: &[usize],
    mut rows: Vec<Vec<Rational>>,
    mut rhs: Vec<Rational>,
) -> Option<Vec<Rational>> {
    let cut_count = assignment.len();
    // Ordering rows are needed only between cuts sharing a segment; cuts
    // in different segments are separated by the segment boxes already.
    let order_pairs: Vec<usize> = (0..cut_count.saturating_sub(1))
        .filter(|&t| assignment[t] == assignment[t + 1])
        .collect();
    let slack_count = order_pairs.len();
    let total = cut_count + slack_count;
    for row in rows.iter_mut() {
        row.resize(total, Rational::zero());
    }
    for (s, &t) in order_pairs.iter().enumerate() {
        let mut row = vec![Rational::zero(); total];
        row[t + 1] = Rational::from_integer(1.into());
        row[t] = Rational::from_integer((-1).into());
        row[cut_count + s] = Rational::from_integer((-1).into());
        rows.push(row);
        rhs.push(Rational::zero());
    }
    let mut lower: Vec<Rational> = (0..cut_count)
        .map(|t| refinement.breakpoints[assignment[t]].clone())
        .collect();
    let mut upper: Vec<Option<Rational>> = (0..cut_count)
        .map(|t| Some(refinement.breakpoints[assignment[t] + 1].clone()))
        .collect();
    lower.extend(std::iter::repeat_n(Rational::zero(), slack_count));
    upper.extend(std::iter::repeat_n(None, slack_count));

    let mut pinned: Vec<Rational> = Vec::with_capacity(cut_count);
    for t in 0..cut_count {
        let mut objective = vec![Rational::zero(); total];
        objective[t] = Rational::from_integer(1.into());
        let lp = BoxedLp {
            objective,
            rows: rows.clone(),
            rhs: rhs.clone(),
            lower: lower.clone(),
            upper: upper.clone(),
        };
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => {
                let v = x[t].clone();
                let mut pin = vec![Rational::zero(); total];
                pin[t] = Rational::from_integer(1.into());
                rows.push(pin);
                rhs.push(v.clone());
                pinned.push(v);
            }
            LpOutcome::Infeasible => return None,
            LpOutcome::Unbounded => unreachable!("boxed variables cannot be unbounded"),
        }
    }
    Some(pinned)
}

/// A two-piece split every measure values at `1/2` of its total, up to
/// `epsilon` (in normalized units).
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusSplit {
    /// Two pieces partitioning the cake.
    pub allocation: Allocation,
    /// Per input measure: `|v(piece 0) - 1/2|` under the normalized
    /// measure (zero for identically-zero measures).
    pub deviations: Vec<Rational>,
    /// Largest entry of `deviations`.
    pub max_deviation: Rational,
    /// Number of atomic chunks the accepted split was rounded from.
    pub chunk_count: usize,
}

/// Splits the cake in two so that every measure's normalized value of
/// piece 0 is within `epsilon` of `1/2`.
///
/// The cake is first chopped into chunks each worth at most `delta` to
/// every agent (cutting at the *nearest* `delta`-mark each round), then
/// a streaming rounding walk assigns each chunk to one side: fractional
/// chunk weights start at `1/2` and move along exact kernel directions
/// of the value matrix, so at most `n` chunks are ever rounded crudely,
/// giving a deviation below `n·delta`. Internally the routine deepens
/// `delta` geometrically and keeps the best split found, so the achieved
/// deviation is monotone: calling with a smaller `epsilon` never returns
/// a worse split.
pub fn solve_consensus_split(
    cake: &Interval,
    measures: &[StepMeasure],
    epsilon: &Rational,
) -> Result<ConsensusSplit, ExactError> {
    if !epsilon.is_positive() {
        return Err(ExactError::NonPositiveEpsilon {
            epsilon: epsilon.clone(),
        });
    }
    let problem = ExactDivisionProblem {
        cake: cake.clone(),
        measures: measures.to_vec(),
        pieces: 2,
        max_components: None,
    };
    problem.validate()?;
    let effective = problem.effective_measures();
    let n_eff = effective.len();

    if n_eff == 0 {
        let cuts = equal_length_cuts(cake, 2);
        let allocation = assemble(cake, 2, cuts, vec![0, 1], 0).allocation;
        return Ok(ConsensusSplit {
            allocation,
            deviations: vec![Rational::zero(); measures.len()],
            max_deviation: Rational::zero(),
            chunk_count: 1,
        });
    }

    let half = Rational::from_integer(1.into()) / Rational::from_integer(2.into());
    let mut best: Option<ConsensusSplit> = None;
    let mut level = half.clone();
    loop {
        let delta = &level / Rational::from_integer(n_eff.into());
        let candidate = consensus_at_delta(cake, &problem.measures, &effective, &delta, &half);
        let replace = match &best {
            None => true,
            Some(b) => candidate.max_deviation < b.max_deviation,
        };
        if replace {
            best = Some(candidate);
        }
        let best_dev = &best.as_ref().expect("set above").max_deviation;
        if best_dev <= epsilon {
            return Ok(best.expect("set above"));
        }
        level = &level * &half;
    }
}

fn consensus_at_delta(
    cake: &Interval,
    original: &[StepMeasure],
    effective: &[StepMeasure],
    delta: &Rational,
    half: &Rational,
) -> ConsensusSplit {
    // Chop: cut at the nearest delta-mark over all measures, so each
    // chunk is worth at most delta to everyone.
    let mut boundaries = vec![cake.left().clone()];
    loop {
        let at = boundaries.last().expect("nonempty");
        if at == cake.right() {
            break;
        }
        let mut next: Option<Rational> = None;
        for m in effective {
            match m.mark(at, delta) {
                Ok(x) => {
                    if next.as_ref().is_none_or(|n| x < *n) {
                        next = Some(x);
                    }
                }
                Err(MeasureError::TargetOutOfRange { .. }) => {}
                Err(e) => unreachable!("mark within domain: {e}"),
            }
        }
        match next {
            Some(x) if &x < cake.right() => boundaries.push(x),
            _ => boundaries.push(cake.right().clone()),
        }
    }
    let chunk_count = boundaries.len() - 1;
    let chunk_values: Vec<Vec<Rational>> = (0..chunk_count)
        .map(|c| {
            effective
                .iter()
                .map(|m| m.cdf(&boundaries[c + 1]) - m.cdf(&boundaries[c]))
                .collect()
        })
        .collect();

    // Streaming rounding walk: keep at most n_eff + 1 fractional chunks.
    let n_eff = effective.len();
    let mut active: Vec<(usize, Rational)> = Vec::new();
    let mut selected: Vec<usize> = Vec::new();
    for c in 0..chunk_count {
        active.push((c, half.clone()));
        while active.len() > n_eff + 1 {
            reduce_active(&mut active, &mut selected, &chunk_values, n_eff);
        }
    }
    while active.len() > n_eff {
        reduce_active(&mut active, &mut selected, &chunk_values, n_eff);
    }
    for (c, t) in active {
        if t >= *half {
            selected.push(c);
        }
    }
    selected.sort_unstable();

    let piece0 = Piece::from_intervals(
        selected
            .iter()
            .map(|&c| Interval::new(boundaries[c].clone(), boundaries[c + 1].clone())),
    );
    let piece1 = Piece::from_intervals(piece0.gaps_within(cake));
    let allocation = Allocation::new(vec![piece0, piece1]);

    let deviations: Vec<Rational> = original
        .iter()
        .map(|m| {
            let total = m.total();
            if total.is_zero() {
                Rational::zero()
            } else {
                (m.value_of_piece(&allocation.pieces[0]) / total - half).abs()
            }
        })
        .collect();
    let max_deviation = deviations
        .iter()
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero);
    ConsensusSplit {
        allocation,
        deviations,
        max_deviation,
        chunk_count,
    }
}

/// One kernel-walk step: move the fractional weights along an exact
/// null direction of the active value matrix until at least one weight
/// hits 0 or 1, then freeze every weight that did.
fn reduce_active(
    active: &mut Vec<(usize, Rational)>,
    selected: &mut Vec<usize>,
    chunk_values: &[Vec<Rational>],
    n_eff: usize,
) {
    let cols = active.len();
    debug_assert!(cols > n_eff);
    let rows: Vec<Vec<Rational>> = (0..n_eff)
        .map(|i| {
            active
                .iter()
                .map(|(c, _)| chunk_values[*c][i].clone())
                .collect()
        })
        .collect();
    let u = kernel_vector(rows, cols).expect("wide matrix has a kernel");
    let mut step: Option<Rational> = None;
    for ((_, t), uj) in active.iter().zip(&u) {
        let cap = if uj.is_positive() {
            (Rational::one() - t) / uj
        } else if uj.is_negative() {
            t / -uj
        } else {
            continue;
        };
        if step.as_ref().is_none_or(|s| cap < *s) {
            step = Some(cap);
        }
    }
    let step = step.expect("kernel vector is nonzero");
    let mut remaining = Vec::with_capacity(active.len());
    for ((c, t), uj) in active.drain(..).zip(&u) {
        let t = t + &step * uj;
        if t.is_zero() {
            continue;
        }
        if t.is_one() {
            selected.push(c);
        } else {
            remaining.push((c, t));
        }
    }
    *active = remaining;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn iv(l: i64, r: i64) -> Interval {
        Interval::new(int(l), int(r))
    }

    fn steps(breaks: &[i64], densities: &[i64]) -> StepMeasure {
        StepMeasure::new(
            breaks.iter().map(|&b| int(b)).collect(),
            densities.iter().map(|&d| int(d)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn canonical_patterns_are_what_they_should_be() {
        assert_eq!(canonical_patterns(2, 2), vec![vec![0, 1]]);
        assert_eq!(canonical_patterns(3, 2), vec![vec![0, 1, 0]]);
        assert_eq!(canonical_patterns(4, 2), vec![vec![0, 1, 0, 1]]);
        assert_eq!(canonical_patterns(3, 3), vec![vec![0, 1, 2]]);
        // Length 4 over 3 labels: 0102, 0120, 0121, 0123 is out of range.
        assert_eq!(
            canonical_patterns(4, 3),
            vec![vec![0, 1, 0, 2], vec![0, 1, 2, 0], vec![0, 1, 2, 1]]
        );
        // Patterns never repeat a label in adjacent cells.
        for p in canonical_patterns(6, 3) {
            assert!(p.windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn two_agents_three_components() {
        // Uniform vs. left-loaded on [0,1]: the unique three-cell split
        // is [0,1/4] ∪ [3/4,1] against [1/4,3/4].
        let problem = ExactDivisionProblem {
            cake: iv(0, 1),
            measures: vec![
                StepMeasure::uniform(&iv(0, 1), int(1)).unwrap(),
                StepMeasure::from_segments(&iv(0, 1), &[(int(0), rat(1, 2), int(2))]).unwrap(),
            ],
            pieces: 2,
            max_components: None,
        };
        let solution = solve_exact(&problem).unwrap();
        assert_eq!(solution.cuts, vec![rat(1, 4), rat(3, 4)]);
        assert_eq!(solution.labels, vec![0, 1, 0]);
        assert_eq!(solution.components, 3);
        assert_eq!(solution.effective_measures, 2);
        let report = verify_exact(&problem, &solution.allocation).unwrap();
        assert!(report.exact);
        assert_eq!(report.piece_values[0][0], rat(1, 2));
    }

    #[test]
    fn estate_trio_needs_four_cells() {
        // Alice, bob and david from the estate: the search must reject
        // every pattern with fewer than four cells and land on the
        // alternating split with cuts 1/2, 3/2, 11/4.
        let problem = ExactDivisionProblem {
            cake: iv(0, 4),
            measures: vec![
                steps(&[0, 1, 2, 3, 4], &[6, 3, 0, 0]),
                steps(&[0, 1, 2, 3, 4], &[5, 4, 0, 0]),
                steps(&[0, 1, 2, 3, 4], &[0, 0, 6, 3]),
            ],
            pieces: 2,
            max_components: None,
        };
        let solution = solve_exact(&problem).unwrap();
        assert_eq!(solution.cuts, vec![rat(1, 2), rat(3, 2), rat(11, 4)]);
        assert_eq!(solution.labels, vec![0, 1, 0, 1]);
        assert_eq!(solution.components, 4);
        assert!(verify_exact(&problem, &solution.allocation).unwrap().exact);
    }

    #[test]
    fn one_agent_three_pieces() {
        let problem = ExactDivisionProblem {
            cake: iv(0, 1),
            measures: vec![StepMeasure::uniform(&iv(0, 1), int(3)).unwrap()],
            pieces: 3,
            max_components: None,
        };
        let solution = solve_exact(&problem).unwrap();
        assert_eq!(solution.cuts, vec![rat(1, 3), rat(2, 3)]);
        assert_eq!(solution.labels, vec![0, 1, 2]);
    }

    #[test]
    fn proportional_and_zero_measures_collapse() {
        // A measure, its doubled copy, and a zero measure constrain the
        // problem exactly as the single measure alone.
        let base = StepMeasure::uniform(&iv(0, 2), int(1)).unwrap();
        let problem = ExactDivisionProblem {
            cake: iv(0, 2),
            measures: vec![
                base.clone(),
                base.scale(&int(2)).unwrap(),
                StepMeasure::uniform(&iv(0, 2), int(0)).unwrap(),
            ],
            pieces: 2,
            max_components: None,
        };
        let solution = solve_exact(&problem).unwrap();
        assert_eq!(solution.effective_measures, 1);
        assert_eq!(solution.cuts, vec![int(1)]);
        assert_eq!(solution.components, 2);
        assert!(verify_exact(&problem, &solution.allocation).unwrap().exact);
    }

    #[test]
    fn budget_below_need_is_reported() {
        let problem = ExactDivisionProblem {
            cake: iv(0, 1),
            measures: vec![
                StepMeasure::uniform(&iv(0, 1), int(1)).unwrap(),
                StepMeasure::from_segments(&iv(0, 1), &[(int(0), rat(1, 2), int(2))]).unwrap(),
            ],
            pieces: 2,
            max_components: Some(2),
        };
        assert_eq!(
            solve_exact(&problem),
            Err(ExactError::Infeasible {
                budget: 2,
                needed: 3
            })
        );
    }

    #[test]
    fn no_measures_splits_by_length() {
        let problem = ExactDivisionProblem {
            cake: iv(0, 3),
            measures: vec![],
            pieces: 3,
            max_components: None,
        };
        let solution = solve_exact(&problem).unwrap();
        assert_eq!(solution.cuts, vec![int(1), int(2)]);
    }

    #[test]
    fn verifier_rejects_malformed_input() {
        let problem = ExactDivisionProblem {
            cake: iv(0, 1),
            measures: vec![StepMeasure::uniform(&iv(0, 1), int(1)).unwrap()],
            pieces: 2,
            max_components: None,
        };
        let wrong_arity = Allocation::new(vec![Piece::from_interval(iv(0, 1))]);
        assert!(matches!(
            verify_exact(&problem, &wrong_arity),
            Err(ExactError::WrongArity {
                expected: 2,
                got: 1
            })
        ));
        let overlapping = Allocation::new(vec![
            Piece::from_interval(iv(0, 1)),
            Piece::from_interval(iv(0, 1)),
        ]);
        assert!(matches!(
            verify_exact(&problem, &overlapping),
            Err(ExactError::NotAPartition)
        ));
    }

    #[test]
    fn verifier_measures_deviation() {
        let problem = ExactDivisionProblem {
            cake: iv(0, 1),
            measures: vec![StepMeasure::uniform(&iv(0, 1), int(2)).unwrap()],
            pieces: 2,
            max_components: None,
        };
        let lopsided = Allocation::new(vec![
            Piece::from_interval(Interval::new(int(0), rat(3, 4))),
            Piece::from_interval(Interval::new(rat(3, 4), int(1))),
        ]);
        let report = verify_exact(&problem, &lopsided).unwrap();
        assert!(!report.exact);
        // Piece values 3/2 and 1/2 against a target of 1.
        assert_eq!(report.max_abs_deviation, rat(1, 2));
    }

    #[test]
    fn consensus_split_on_opposed_measures() {
        let cake = iv(0, 4);
        let measures = vec![
            steps(&[0, 1, 2, 3, 4], &[6, 3, 0, 0]),
            steps(&[0, 1, 2, 3, 4], &[0, 0, 6, 3]),
        ];
        let eps = rat(1, 10);
        let split = solve_consensus_split(&cake, &measures, &eps).unwrap();
        assert!(split.max_deviation <= eps);
        assert_eq!(split.allocation.pieces.len(), 2);
        // The two pieces partition the cake exactly.
        assert!(require_partition(&cake, &split.allocation.pieces).is_ok());

        // Tightening epsilon never yields a worse split.
        let tighter = solve_consensus_split(&cake, &measures, &rat(1, 1000)).unwrap();
        assert!(tighter.max_deviation <= rat(1, 1000));
        assert!(tighter.max_deviation <= split.max_deviation);
    }

    #[test]
    fn consensus_split_single_uniform_agent_is_exact() {
        let cake = iv(0, 1);
        let measures = vec![StepMeasure::uniform(&cake, int(1)).unwrap()];
        let split = solve_consensus_split(&cake, &measures, &rat(1, 100)).unwrap();
        assert_eq!(split.max_deviation, int(0));
    }

    #[test]
    fn consensus_split_rejects_nonpositive_epsilon() {
        let cake = iv(0, 1);
        assert!(matches!(
            solve_consensus_split(&cake, &[], &int(0)),
            Err(ExactError::NonPositiveEpsilon { .. })
        ));
    }

    fn arb_measure() -> impl Strategy<Value = StepMeasure> {
        proptest::collection::vec(0i64..=3, 4).prop_map(|ds| steps(&[0, 1, 2, 3, 4], &ds))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn solver_output_verifies(
            measures in proptest::collection::vec(arb_measure(), 1..=3),
            k in 2usize..=3,
        ) {
            let problem = ExactDivisionProblem {
                cake: iv(0, 4),
                measures,
                pieces: k,
                max_components: None,
            };
            let solution = solve_exact(&problem).unwrap();
            let n_eff = solution.effective_measures;
            let bound = if n_eff == 0 { k } else { n_eff * (k - 1) + 1 };
            prop_assert!(solution.components <= bound);
            prop_assert_eq!(solution.allocation.pieces.len(), k);
            let report = verify_exact(&problem, &solution.allocation).unwrap();
            prop_assert!(report.exact);
        }

        #[test]
        fn consensus_honors_epsilon(
            measures in proptest::collection::vec(arb_measure(), 1..=3),
        ) {
            let cake = iv(0, 4);
            let eps = rat(1, 20);
            let split = solve_consensus_split(&cake, &measures, &eps).unwrap();
            prop_assert!(split.max_deviation <= eps);
            prop_assert!(require_partition(&cake, &split.allocation.pieces).is_ok());
        }
    }
}
