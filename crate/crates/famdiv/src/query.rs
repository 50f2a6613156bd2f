//! The query model: protocols that learn valuations only through
//! *eval* and *mark* queries, transcripts that record everything a
//! protocol ever learned, and an adversarial oracle that answers
//! queries while provably never exposing a piece worth exactly half to
//! the average of its two agents.
//!
//! A protocol's knowledge is limited to the points that appeared in its
//! queries and answers. The [`Transcript`] tracks exactly that set, so
//! lower-bound arguments can reason about what any output built from
//! known points can achieve.
//!
//! The adversary maintains a partition of `[0, 1]` into cells with
//! exact rational values for both agents. Its safety invariant is
//! arithmetic rather than combinatorial: every cell's *combined* value
//! (agent 0 plus agent 1, total 2) is kept an integer multiple of a
//! unit `u = 2 / 3^e`. A piece assembled from known points has combined
//! value `u·t` for an integer `t`, and `u·t = 1` would force
//! `2t = 3^e` — even equals odd. So no such piece is ever worth exactly
//! `1/2` on average, no matter how many queries are asked, and the
//! certificate of that fact is checkable in linear time.

use crate::geometry::Interval;
use crate::instance::Instance;
use crate::measure::{MeasureError, StepMeasure};
use crate::rational::Rational;
use num::{BigInt, One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeSet;

/// A single valuation query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// The agent's value of `[left, right]`.
    Eval {
        agent: usize,
        left: Rational,
        right: Rational,
    },
    /// The smallest point `x` with value of `[start, x]` equal to `target`.
    Mark {
        agent: usize,
        start: Rational,
        target: Rational,
    },
}

/// The oracle's reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Value(Rational),
    Point(Rational),
}

/// One recorded query/answer pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub query: Query,
    pub answer: Answer,
}

/// Errors raised while querying.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("agent {agent} out of range: the oracle has {agents} agents")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error("point {point} lies outside the cake [{left}, {right}]")]
    OutsideCake {
        point: Rational,
        left: Rational,
        right: Rational,
    },
    #[error("eval interval is backwards: left {left} > right {right}")]
    BackwardsInterval { left: Rational, right: Rational },
    #[error("mark target {target} from {start} exceeds the remaining value {available}")]
    TargetOutOfRange {
        target: Rational,
        start: Rational,
        available: Rational,
    },
    #[error("query limit of {limit} exceeded")]
    LimitExceeded { limit: usize },
}

/// Everything a protocol has asked and learned, including the set of
/// cake points that have appeared in queries or answers — the only
/// points a protocol can cut at without guessing.
#[derive(Debug, Clone)]
pub struct Transcript {
    cake: Interval,
    agents: usize,
    steps: Vec<Step>,
    known_points: BTreeSet<Rational>,
}

impl Transcript {
    pub fn new(cake: Interval, agents: usize) -> Self {
        let known_points = BTreeSet::from([cake.left().clone(), cake.right().clone()]);
        Transcript {
            cake,
            agents,
            steps: Vec::new(),
            known_points,
        }
    }

    fn record(&mut self, query: Query, answer: Answer) {
        match &query {
            Query::Eval { left, right, .. } => {
                self.known_points.insert(left.clone());
                self.known_points.insert(right.clone());
            }
            Query::Mark { start, .. } => {
                self.known_points.insert(start.clone());
            }
        }
        if let Answer::Point(p) = &answer {
            self.known_points.insert(p.clone());
        }
        self.steps.push(Step { query, answer });
    }

    pub fn cake(&self) -> &Interval {
        &self.cake
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn query_count(&self) -> usize {
        self.steps.len()
    }

    /// The known points in ascending order. Always contains both cake
    /// endpoints; each query contributes at most two more.
    pub fn known_points(&self) -> Vec<Rational> {
        self.known_points.iter().cloned().collect()
    }
}

/// Something that can answer valuation queries. Mutable because an
/// adversarial oracle commits to more of its measures with every answer.
pub trait Oracle {
    fn cake(&self) -> Interval;
    fn agents(&self) -> usize;
    fn answer(&mut self, query: &Query) -> Result<Answer, QueryError>;
}

/// An oracle that answers truthfully from an instance's measures.
pub struct HonestOracle<'a> {
    instance: &'a Instance,
}

impl<'a> HonestOracle<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        HonestOracle { instance }
    }
}

impl Oracle for HonestOracle<'_> {
    fn cake(&self) -> Interval {
        self.instance.cake().clone()
    }

    fn agents(&self) -> usize {
        self.instance.agent_count()
    }

    fn answer(&mut self, query: &Query) -> Result<Answer, QueryError> {
        match query {
            Query::Eval { agent, left, right } => {
                let measure = &self.instance.agents()[*agent].measure;
                Ok(Answer::Value(
                    measure.value_of(&Interval::new(left.clone(), right.clone())),
                ))
            }
            Query::Mark {
                agent,
                start,
                target,
            } => {
                let measure = &self.instance.agents()[*agent].measure;
                match measure.mark(start, target) {
                    Ok(point) => Ok(Answer::Point(point)),
                    Err(MeasureError::TargetOutOfRange { available, .. }) => {
                        Err(QueryError::TargetOutOfRange {
                            target: target.clone(),
                            start: start.clone(),
                            available,
                        })
                    }
                    Err(e) => unreachable!("validated before dispatch: {e}"),
                }
            }
        }
    }
}

/// A live protocol run: validates queries, enforces the query budget,
/// and records every step into the transcript.
pub struct Session<'a> {
    oracle: &'a mut dyn Oracle,
    transcript: Transcript,
    limit: Option<usize>,
}

impl<'a> Session<'a> {
    fn new(oracle: &'a mut dyn Oracle, limit: Option<usize>) -> Self {
        let transcript = Transcript::new(oracle.cake(), oracle.agents());
        Session {
            oracle,
            transcript,
            limit,
        }
    }

    pub fn cake(&self) -> &Interval {
        self.transcript.cake()
    }

    pub fn agents(&self) -> usize {
        self.transcript.agents()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn query_count(&self) -> usize {
        self.transcript.query_count()
    }

    /// Ask for an agent's value of `[left, right]`.
    pub fn eval(
        &mut self,
        agent: usize,
        left: &Rational,
        right: &Rational,
    ) -> Result<Rational, QueryError> {
        self.check_budget()?;
        self.check_agent(agent)?;
        self.check_point(left)?;
        self.check_point(right)?;
        if left > right {
            return Err(QueryError::BackwardsInterval {
                left: left.clone(),
                right: right.clone(),
            });
        }
        let query = Query::Eval {
            agent,
            left: left.clone(),
            right: right.clone(),
        };
        let answer = self.oracle.answer(&query)?;
        let Answer::Value(v) = &answer else {
            unreachable!("eval answered with a point")
        };
        let v = v.clone();
        self.transcript.record(query, answer);
        Ok(v)
    }

    /// Ask for the smallest point that closes a piece of value `target`
    /// starting at `start`.
    pub fn mark(
        &mut self,
        agent: usize,
        start: &Rational,
        target: &Rational,
    ) -> Result<Rational, QueryError> {
        self.check_budget()?;
        self.check_agent(agent)?;
        self.check_point(start)?;
        if target.is_negative() {
            return Err(QueryError::TargetOutOfRange {
                target: target.clone(),
                start: start.clone(),
                available: Rational::zero(),
            });
        }
        let query = Query::Mark {
            agent,
            start: start.clone(),
            target: target.clone(),
        };
        let answer = self.oracle.answer(&query)?;
        let Answer::Point(p) = &answer else {
            unreachable!("mark answered with a value")
        };
        let p = p.clone();
        self.transcript.record(query, answer);
        Ok(p)
    }

    fn check_budget(&self) -> Result<(), QueryError> {
        match self.limit {
            Some(limit) if self.transcript.query_count() >= limit => {
                Err(QueryError::LimitExceeded { limit })
            }
            _ => Ok(()),
        }
    }

    fn check_agent(&self, agent: usize) -> Result<(), QueryError> {
        if agent >= self.agents() {
            Err(QueryError::AgentOutOfRange {
                agent,
                agents: self.agents(),
            })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, point: &Rational) -> Result<(), QueryError> {
        if self.cake().contains(point) {
            Ok(())
        } else {
            Err(QueryError::OutsideCake {
                point: point.clone(),
                left: self.cake().left().clone(),
                right: self.cake().right().clone(),
            })
        }
    }
}

/// A division protocol in the query model.
pub trait Protocol {
    type Output;
    fn run(&self, session: &mut Session<'_>) -> Result<Self::Output, QueryError>;
}

/// Runs a protocol against an oracle, returning its output together
/// with the full transcript. `limit` caps the number of queries.
pub fn run_protocol<P: Protocol>(
    protocol: &P,
    oracle: &mut dyn Oracle,
    limit: Option<usize>,
) -> Result<(P::Output, Transcript), QueryError> {
    let mut session = Session::new(oracle, limit);
    let output = protocol.run(&mut session)?;
    Ok((output, session.transcript))
}

/// Replays a fixed list of queries.
pub struct ScriptedProtocol {
    pub queries: Vec<Query>,
}

impl Protocol for ScriptedProtocol {
    type Output = Vec<Answer>;

    fn run(&self, session: &mut Session<'_>) -> Result<Vec<Answer>, QueryError> {
        let mut answers = Vec::with_capacity(self.queries.len());
        for q in &self.queries {
            let answer = match q {
                Query::Eval { agent, left, right } => {
                    Answer::Value(session.eval(*agent, left, right)?)
                }
                Query::Mark {
                    agent,
                    start,
                    target,
                } => Answer::Point(session.mark(*agent, start, target)?),
            };
            answers.push(answer);
        }
        Ok(answers)
    }
}

/// A seeded protocol that asks a mix of valid random queries: totals,
/// evals between already-known points, and marks for random fractions
/// of an agent's total. Useful for stress-testing oracles.
pub struct RandomProtocol {
    pub queries: usize,
    pub seed: u64,
}

impl Protocol for RandomProtocol {
    type Output = ();

    fn run(&self, session: &mut Session<'_>) -> Result<(), QueryError> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let mut totals: Vec<Option<Rational>> = vec![None; session.agents()];
        let cake = session.cake().clone();
        while session.query_count() < self.queries {
            let agent = rng.gen_range(0..session.agents());
            match &totals[agent] {
                None => {
                    let total = session.eval(agent, cake.left(), cake.right())?;
                    totals[agent] = Some(total);
                }
                Some(total) => {
                    if rng.gen_bool(0.5) {
                        // Eval between two known points.
                        let points = session.transcript().known_points();
                        let a = rng.gen_range(0..points.len());
                        let b = rng.gen_range(0..points.len());
                        let (lo, hi) = if points[a] <= points[b] {
                            (a, b)
                        } else {
                            (b, a)
                        };
                        session.eval(agent, &points[lo].clone(), &points[hi].clone())?;
                    } else {
                        // Mark a random fraction of the total from the left
                        // end; always answerable.
                        let den = rng.gen_range(2i64..=64);
                        let num = rng.gen_range(1..den);
                        let target = total * Rational::new(BigInt::from(num), BigInt::from(den));
                        session.mark(agent, cake.left(), &target)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// One committed cell of the adversary: an interval plus both agents'
/// exact values on it, all strictly positive.
#[derive(Debug, Clone)]
struct Cell {
    left: Rational,
    right: Rational,
    values: [Rational; 2],
}

/// An adversarial two-agent oracle on the cake `[0, 1]` (both totals 1)
/// that answers every query consistently while guaranteeing that no
/// piece bounded by known points is ever worth exactly `1/2` to the
/// average of the two agents.
///
/// See the module docs for the invariant; [`AdversaryOracle::certify`]
/// produces the checkable certificate, and
/// [`AdversaryOracle::materialize`] exhibits a concrete pair of
/// honest measures consistent with every answer given so far.
#[derive(Debug, Clone)]
pub struct AdversaryOracle {
    cells: Vec<Cell>,
    /// Current lattice unit `u = 2 / 3^exponent`.
    unit: Rational,
    exponent: u64,
}

impl Default for AdversaryOracle {
    fn default() -> Self {
        Self::new()
    }
}

impl AdversaryOracle {
    pub fn new() -> Self {
        AdversaryOracle {
            cells: vec![Cell {
                left: Rational::zero(),
                right: Rational::one(),
                values: [Rational::one(), Rational::one()],
            }],
            unit: Rational::from_integer(2.into()),
            exponent: 0,
        }
    }

    /// The current number of committed cells.
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Shrink the lattice unit (by powers of 3) until it is at most a
    /// third of `bound`, so a unit multiple always fits strictly inside
    /// any value window of width `bound`.
    fn refine_unit(&mut self, bound: &Rational) {
        let three = Rational::from_integer(3.into());
        let limit = bound / &three;
        while self.unit > limit {
            self.unit = &self.unit / &three;
            self.exponent += 1;
        }
    }

    /// Make `point` a cell boundary. The free value split keeps both
    /// agents proportional to the original cell, and snaps the combined
    /// value to the lattice.
    fn ensure_boundary(&mut self, point: &Rational) {
        let Some(idx) = self
            .cells
            .iter()
            .position(|c| &c.left < point && point < &c.right)
        else {
            return;
        };
        let cell = self.cells[idx].clone();
        let w = &cell.values[0] + &cell.values[1];
        self.refine_unit(&w);
        let capacity = &w / &self.unit; // integer >= 3
        let ideal = &capacity * (point - &cell.left) / (&cell.right - &cell.left);
        let half = Rational::new(BigInt::from(1), BigInt::from(2));
        let mut t = (ideal + half).floor();
        if t < Rational::one() {
            t = Rational::one();
        }
        let max_t = &capacity - Rational::one();
        if t > max_t {
            t = max_t;
        }
        let w_left = t * &self.unit;
        let ratio = &w_left / &w;
        let left_values = [&cell.values[0] * &ratio, &cell.values[1] * &ratio];
        self.split_at(idx, point.clone(), left_values);
    }

    fn split_at(&mut self, idx: usize, point: Rational, left_values: [Rational; 2]) {
        let cell = self.cells[idx].clone();
        debug_assert!(cell.left < point && point < cell.right);
        let right_values = [
            &cell.values[0] - &left_values[0],
            &cell.values[1] - &left_values[1],
        ];
        debug_assert!(left_values.iter().all(|v| v.is_positive()));
        debug_assert!(right_values.iter().all(|v| v.is_positive()));
        self.cells[idx] = Cell {
            left: cell.left,
            right: point.clone(),
            values: left_values,
        };
        self.cells.insert(
            idx + 1,
            Cell {
                left: point,
                right: cell.right,
                values: right_values,
            },
        );
    }

    fn value_between(&self, agent: usize, left: &Rational, right: &Rational) -> Rational {
        self.cells
            .iter()
            .filter(|c| &c.left >= left && &c.right <= right)
            .map(|c| c.values[agent].clone())
            .fold(Rational::zero(), |acc, v| acc + v)
    }

    fn answer_eval(&mut self, agent: usize, left: &Rational, right: &Rational) -> Answer {
        self.ensure_boundary(left);
        self.ensure_boundary(right);
        Answer::Value(self.value_between(agent, left, right))
    }

    fn answer_mark(
        &mut self,
        agent: usize,
        start: &Rational,
        target: &Rational,
    ) -> Result<Answer, QueryError> {
        self.ensure_boundary(start);
        let other = 1 - agent;
        let from = self
            .cells
            .iter()
            .position(|c| &c.left >= start)
            .unwrap_or(self.cells.len());
        let mut remaining = target.clone();
        for idx in from..self.cells.len() {
            if remaining.is_zero() {
                return Ok(Answer::Point(self.cells[idx].left.clone()));
            }
            let v = self.cells[idx].values[agent].clone();
            if remaining == v {
                return Ok(Answer::Point(self.cells[idx].right.clone()));
            }
            if remaining < v {
                // Split the cell at its midpoint: the asked agent's left
                // share is forced to `remaining`; the other agent's share
                // is chosen so the combined left value lands on the
                // lattice, strictly between its positivity limits.
                let cell = self.cells[idx].clone();
                let free = cell.values[other].clone();
                self.refine_unit(&free);
                let half = Rational::new(BigInt::from(1), BigInt::from(2));
                let mid = (&remaining + &free * &half) / &self.unit;
                let mut t = mid.floor();
                if &t * &self.unit <= remaining {
                    t += Rational::one();
                }
                let combined_left = &t * &self.unit;
                debug_assert!(combined_left > remaining);
                debug_assert!(combined_left < &remaining + &free);
                let free_left = &combined_left - &remaining;
                let mut left_values = [Rational::zero(), Rational::zero()];
                left_values[agent] = remaining.clone();
                left_values[other] = free_left;
                let midpoint = (&cell.left + &cell.right) * half;
                self.split_at(idx, midpoint.clone(), left_values);
                return Ok(Answer::Point(midpoint));
            }
            remaining = remaining - v;
        }
        if remaining.is_zero() {
            return Ok(Answer::Point(self.cake().right().clone()));
        }
        Err(QueryError::TargetOutOfRange {
            target: target.clone(),
            start: start.clone(),
            available: target - remaining,
        })
    }

    /// A concrete pair of measures (uniform density per cell) consistent
    /// with every answer the adversary has given.
    pub fn materialize(&self) -> [StepMeasure; 2] {
        let breakpoints: Vec<Rational> = self
            .cells
            .iter()
            .map(|c| c.left.clone())
            .chain(std::iter::once(Rational::one()))
            .collect();
        let build = |agent: usize| {
            let densities: Vec<Rational> = self
                .cells
                .iter()
                .map(|c| &c.values[agent] / (&c.right - &c.left))
                .collect();
            StepMeasure::new(breakpoints.clone(), densities).expect("cells tile the cake")
        };
        [build(0), build(1)]
    }

    /// The safety certificate: recomputes the lattice invariant and, when
    /// the cell count is at most `enumeration_cap`, additionally
    /// brute-forces every subset of cells to confirm that no combined
    /// value sums to exactly 1.
    pub fn certify(&self, enumeration_cap: usize) -> SafetyCertificate {
        let three_to_e = num::pow(BigInt::from(3), self.exponent as usize);
        let mut lattice_valid =
            Rational::from_integer(2.into()) == Rational::from_integer(three_to_e) * &self.unit;
        let mut multiples = Vec::with_capacity(self.cells.len());
        let mut total = Rational::zero();
        for cell in &self.cells {
            let w = &cell.values[0] + &cell.values[1];
            total += &w;
            let m = &w / &self.unit;
            if !m.is_integer() || !m.is_positive() {
                lattice_valid = false;
            }
            multiples.push(m.to_integer());
        }
        if total != Rational::from_integer(2.into()) {
            lattice_valid = false;
        }
        let enumerated = (self.cells.len() <= enumeration_cap).then(|| {
            let one = Rational::one();
            let mut sums: BTreeSet<Rational> = BTreeSet::from([Rational::zero()]);
            for cell in &self.cells {
                let w = &cell.values[0] + &cell.values[1];
                let extended: Vec<Rational> = sums.iter().map(|s| s + &w).collect();
                sums.extend(extended);
                if sums.contains(&one) {
                    return false;
                }
            }
            !sums.contains(&one)
        });
        SafetyCertificate {
            cells: self.cells.len(),
            unit: self.unit.clone(),
            exponent: self.exponent,
            weight_multiples: multiples,
            lattice_valid,
            enumerated,
            safe: lattice_valid && enumerated != Some(false),
        }
    }
}

impl Oracle for AdversaryOracle {
    fn cake(&self) -> Interval {
        Interval::new(Rational::zero(), Rational::one())
    }

    fn agents(&self) -> usize {
        2
    }

    fn answer(&mut self, query: &Query) -> Result<Answer, QueryError> {
        match query {
            Query::Eval { agent, left, right } => Ok(self.answer_eval(*agent, left, right)),
            Query::Mark {
                agent,
                start,
                target,
            } => self.answer_mark(*agent, start, target),
        }
    }
}

/// Proof material that the adversary has never exposed an average-value
/// `1/2` piece. `lattice_valid` means every cell's combined value is a
/// positive integer multiple of `2 / 3^exponent` and the multiples sum
/// to `3^exponent` — so subset sums, all of the form `2t / 3^exponent`,
/// can never equal 1. `enumerated` is an independent brute-force check
/// run when the cell count is small enough.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyCertificate {
    pub cells: usize,
    pub unit: Rational,
    pub exponent: u64,
    pub weight_multiples: Vec<BigInt>,
    pub lattice_valid: bool,
    pub enumerated: Option<bool>,
    pub safe: bool,
}

/// Checks that a transcript is consistent with concrete measures:
/// every recorded answer matches what honest measures would have said.
pub fn transcript_consistent(measures: &[StepMeasure], transcript: &Transcript) -> bool {
    transcript.steps().iter().all(|step| match &step.query {
        Query::Eval { agent, left, right } => {
            let value = measures[*agent].value_of(&Interval::new(left.clone(), right.clone()));
            step.answer == Answer::Value(value)
        }
        Query::Mark {
            agent,
            start,
            target,
        } => match measures[*agent].mark(start, target) {
            Ok(point) => step.answer == Answer::Point(point),
            Err(_) => false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::estate;
    use crate::rational::{int, rat};

    #[test]
    fn honest_oracle_matches_direct_measure_calls() {
        let inst = estate();
        let mut oracle = HonestOracle::new(&inst);
        let script = ScriptedProtocol {
            queries: vec![
                Query::Eval {
                    agent: 0,
                    left: int(0),
                    right: int(2),
                },
                Query::Mark {
                    agent: 0,
                    start: int(0),
                    target: rat(9, 2),
                },
            ],
        };
        let (answers, transcript) = run_protocol(&script, &mut oracle, None).unwrap();
        assert_eq!(answers[0], Answer::Value(int(9)));
        assert_eq!(answers[1], Answer::Point(rat(3, 4)));
        assert_eq!(transcript.query_count(), 2);
    }

    #[test]
    fn transcript_tracks_known_points() {
        let inst = estate();
        let mut oracle = HonestOracle::new(&inst);
        // Three marks from the left end: each adds exactly one new point,
        // so |P| = queries + 2.
        let script = ScriptedProtocol {
            queries: (0..3)
                .map(|agent| Query::Mark {
                    agent,
                    start: int(0),
                    target: rat(9, 2),
                })
                .collect(),
        };
        let (_, transcript) = run_protocol(&script, &mut oracle, None).unwrap();
        let points = transcript.known_points();
        assert_eq!(points.len(), transcript.query_count() + 2);
        assert_eq!(points.first(), Some(&int(0)));
        assert_eq!(points.last(), Some(&int(4)));
        // Alice 3/4, bob 9/10, charlie 23/16.
        assert!(points.contains(&rat(3, 4)));
        assert!(points.contains(&rat(9, 10)));
        assert!(points.contains(&rat(23, 16)));
    }

    #[test]
    fn session_validates_queries() {
        let inst = estate();
        let mut oracle = HonestOracle::new(&inst);
        let bad_agent = ScriptedProtocol {
            queries: vec![Query::Eval {
                agent: 9,
                left: int(0),
                right: int(1),
            }],
        };
        assert!(matches!(
            run_protocol(&bad_agent, &mut oracle, None),
            Err(QueryError::AgentOutOfRange { agent: 9, .. })
        ));
        let outside = ScriptedProtocol {
            queries: vec![Query::Eval {
                agent: 0,
                left: int(-1),
                right: int(1),
            }],
        };
        assert!(matches!(
            run_protocol(&outside, &mut oracle, None),
            Err(QueryError::OutsideCake { .. })
        ));
        let too_greedy = ScriptedProtocol {
            queries: vec![Query::Mark {
                agent: 0,
                start: int(0),
                target: int(10),
            }],
        };
        assert!(matches!(
            run_protocol(&too_greedy, &mut oracle, None),
            Err(QueryError::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn query_limit_is_enforced() {
        let inst = estate();
        let mut oracle = HonestOracle::new(&inst);
        let script = ScriptedProtocol {
            queries: vec![
                Query::Eval {
                    agent: 0,
                    left: int(0),
                    right: int(4),
                },
                Query::Eval {
                    agent: 1,
                    left: int(0),
                    right: int(4),
                },
            ],
        };
        assert!(matches!(
            run_protocol(&script, &mut oracle, Some(1)),
            Err(QueryError::LimitExceeded { limit: 1 })
        ));
    }

    #[test]
    fn adversary_keeps_its_invariants() {
        let mut adv = AdversaryOracle::new();
        let protocol = RandomProtocol {
            queries: 20,
            seed: 7,
        };
        let (_, transcript) = run_protocol(&protocol, &mut adv, Some(20)).unwrap();
        assert_eq!(transcript.query_count(), 20);

        // Totals stay exactly 1 per agent, all cell values positive.
        for agent in 0..2 {
            let total = adv.value_between(agent, &int(0), &int(1));
            assert_eq!(total, int(1));
        }
        assert!(adv
            .cells
            .iter()
            .all(|c| c.values.iter().all(|v| v.is_positive())));

        // The lattice certificate holds and brute force agrees.
        let cert = adv.certify(64);
        assert!(cert.lattice_valid);
        assert_eq!(cert.enumerated, Some(true));
        assert!(cert.safe);
        assert_eq!(cert.cells, adv.cell_count());

        // Materialized measures reproduce the whole transcript.
        let measures = adv.materialize();
        assert_eq!(measures[0].total(), int(1));
        assert_eq!(measures[1].total(), int(1));
        assert!(transcript_consistent(&measures, &transcript));
    }

    #[test]
    fn adversary_is_consistent_across_seeds() {
        for seed in 0..12 {
            let mut adv = AdversaryOracle::new();
            let protocol = RandomProtocol { queries: 16, seed };
            let (_, transcript) = run_protocol(&protocol, &mut adv, Some(16)).unwrap();
            let cert = adv.certify(64);
            assert!(cert.safe, "seed {seed}");
            assert!(
                transcript_consistent(&adv.materialize(), &transcript),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn adversary_mark_lands_mid_cell_and_stays_exact() {
        let mut adv = AdversaryOracle::new();
        // Force agent 0's half-value mark: the answer must be the cell
        // midpoint 1/2, and the committed left value must be exactly 1/2.
        let answer = adv
            .answer(&Query::Mark {
                agent: 0,
                start: int(0),
                target: rat(1, 2),
            })
            .unwrap();
        assert_eq!(answer, Answer::Point(rat(1, 2)));
        assert_eq!(adv.value_between(0, &int(0), &rat(1, 2)), rat(1, 2));
        // Agent 1's value of the same piece is NOT 1/2 (that is the point).
        let other = adv.value_between(1, &int(0), &rat(1, 2));
        assert_ne!(other, rat(1, 2));
        // Combined weight of every cell multiples the unit exactly.
        let cert = adv.certify(64);
        assert!(cert.lattice_valid && cert.safe);
    }

    #[test]
    fn adversary_answers_boundary_targets_without_splitting() {
        let mut adv = AdversaryOracle::new();
        adv.answer(&Query::Mark {
            agent: 0,
            start: int(0),
            target: rat(1, 2),
        })
        .unwrap();
        let cells_before = adv.cell_count();
        // Asking for the value already committed up to a boundary answers
        // at the boundary without creating cells.
        let committed = adv.value_between(0, &int(0), &rat(1, 2));
        let answer = adv
            .answer(&Query::Mark {
                agent: 0,
                start: int(0),
                target: committed,
            })
            .unwrap();
        assert_eq!(answer, Answer::Point(rat(1, 2)));
        assert_eq!(adv.cell_count(), cells_before);
        // Target zero answers at the start point itself.
        let zero = adv
            .answer(&Query::Mark {
                agent: 1,
                start: rat(1, 2),
                target: int(0),
            })
            .unwrap();
        assert_eq!(zero, Answer::Point(rat(1, 2)));
    }

    #[test]
    fn no_known_piece_is_worth_half_on_average() {
        // After a battery of queries, assemble every piece from adjacent
        // known points and confirm none averages exactly 1/2.
        let mut adv = AdversaryOracle::new();
        let protocol = RandomProtocol {
            queries: 14,
            seed: 3,
        };
        let (_, _transcript) = run_protocol(&protocol, &mut adv, Some(14)).unwrap();
        let [m0, m1] = adv.materialize();
        let avg = StepMeasure::average_of(&[&m0, &m1]).unwrap();
        let half = rat(1, 2);
        let boundaries: Vec<Rational> = adv
            .cells
            .iter()
            .map(|c| c.left.clone())
            .chain(std::iter::once(int(1)))
            .collect();
        let n = adv.cell_count();
        // RandomProtocol only evals at known points, so just marks split
        // cells: at most one new cell per query.
        assert!(n <= 16, "cell growth should be at most one per query");
        let cell_avg: Vec<Rational> = (0..n)
            .map(|c| {
                avg.value_of(&Interval::new(
                    boundaries[c].clone(),
                    boundaries[c + 1].clone(),
                ))
            })
            .collect();
        for mask in 1u32..(1 << n) {
            let mut sum = Rational::zero();
            for (c, v) in cell_avg.iter().enumerate() {
                if mask & (1 << c) != 0 {
                    sum += v;
                }
            }
            assert_ne!(sum, half);
        }
    }
}
