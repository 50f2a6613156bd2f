//! Problem instances: a cake, agents with step-measure valuations, and a
//! partition of the agents into families.
//!
//! An [`Instance`] is the complete input to every checker and protocol in
//! this crate. An [`Allocation`] is a candidate output: one piece per
//! family, which together should partition the cake. Nothing in this
//! module judges fairness — it only answers exact valuation queries
//! ([`Instance::eval`], [`Instance::mark`]) and validates structure
//! ([`Instance::validate_partition`]).

use crate::geometry::{Interval, Piece};
use crate::measure::{MeasureError, StepMeasure};
use crate::rational::Rational;
use num::Zero;
use std::collections::HashSet;
use std::fmt;

/// Errors from building or querying an instance.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    /// Structural problem with the agents/families data.
    #[error("invalid instance: {0}")]
    Invalid(String),
    /// An evaluation was requested for a piece that leaves the cake.
    #[error("piece extends outside the cake: component {witness} not contained in {cake}")]
    PieceOutsideCake { witness: Interval, cake: Interval },
    /// An agent index or id that does not exist.
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    /// A family index or id that does not exist.
    #[error("unknown family {0}")]
    UnknownFamily(String),
    /// Normalization was requested but the agent values the whole cake at
    /// zero, so no rescaling to total 1 exists.
    #[error("agent {agent} has zero total value and cannot be normalized")]
    DegenerateAgent { agent: String },
    /// Error bubbled up from the underlying measure.
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One participant: an identifier plus a valuation over the cake.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    /// Unique identifier (unique across the whole instance).
    pub id: String,
    /// The agent's value density over the cake.
    pub measure: StepMeasure,
}

impl Agent {
    /// Convenience constructor.
    pub fn new(id: impl Into<String>, measure: StepMeasure) -> Self {
        Self {
            id: id.into(),
            measure,
        }
    }
}

/// A named group of agents that will receive one shared piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    /// Unique identifier.
    pub id: String,
    /// Indices into [`Instance::agents`], in declaration order.
    pub members: Vec<usize>,
}

/// A complete fair-division instance.
///
/// Invariants, checked at construction: at least one agent and one
/// family; agent and family ids unique; every family nonempty; the
/// families partition the agents exactly; every agent's measure spans
/// precisely the cake.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    cake: Interval,
    agents: Vec<Agent>,
    families: Vec<Family>,
}

impl Instance {
    /// Builds an instance from explicit families.
    pub fn new(
        cake: Interval,
        agents: Vec<Agent>,
        families: Vec<Family>,
    ) -> Result<Self, InstanceError> {
        if cake.is_empty() {
            return Err(InstanceError::Invalid("cake has zero width".into()));
        }
        if agents.is_empty() {
            return Err(InstanceError::Invalid("no agents".into()));
        }
        if families.is_empty() {
            return Err(InstanceError::Invalid("no families".into()));
        }
        let mut agent_ids = HashSet::new();
        for agent in &agents {
            if !agent_ids.insert(agent.id.as_str()) {
                return Err(InstanceError::Invalid(format!(
                    "duplicate agent id {:?}",
                    agent.id
                )));
            }
            if agent.measure.domain() != cake {
                return Err(InstanceError::Invalid(format!(
                    "agent {:?} has measure domain {} but the cake is {}",
                    agent.id,
                    agent.measure.domain(),
                    cake
                )));
            }
        }
        let mut family_ids = HashSet::new();
        let mut assigned = vec![false; agents.len()];
        for family in &families {
            if !family_ids.insert(family.id.as_str()) {
                return Err(InstanceError::Invalid(format!(
                    "duplicate family id {:?}",
                    family.id
                )));
            }
            if family.members.is_empty() {
                return Err(InstanceError::Invalid(format!(
                    "family {:?} has no members",
                    family.id
                )));
            }
            for &m in &family.members {
                if m >= agents.len() {
                    return Err(InstanceError::Invalid(format!(
                        "family {:?} references agent index {m} out of range",
                        family.id
                    )));
                }
                if assigned[m] {
                    return Err(InstanceError::Invalid(format!(
                        "agent {:?} belongs to more than one family",
                        agents[m].id
                    )));
                }
                assigned[m] = true;
            }
        }
        if let Some(idx) = assigned.iter().position(|done| !done) {
            return Err(InstanceError::Invalid(format!(
                "agent {:?} belongs to no family",
                agents[idx].id
            )));
        }
        Ok(Self {
            cake,
            agents,
            families,
        })
    }

    /// Builds an instance from `(agent_id, family_id, measure)` rows.
    /// Families are created in order of first appearance.
    pub fn from_rows(
        cake: Interval,
        rows: Vec<(String, String, StepMeasure)>,
    ) -> Result<Self, InstanceError> {
        let mut agents = Vec::with_capacity(rows.len());
        let mut families: Vec<Family> = Vec::new();
        for (agent_id, family_id, measure) in rows {
            let agent_index = agents.len();
            agents.push(Agent::new(agent_id, measure));
            match families.iter_mut().find(|f| f.id == family_id) {
                Some(f) => f.members.push(agent_index),
                None => families.push(Family {
                    id: family_id,
                    members: vec![agent_index],
                }),
            }
        }
        Self::new(cake, agents, families)
    }

    /// The cake being divided.
    pub fn cake(&self) -> &Interval {
        &self.cake
    }

    /// All agents, in declaration order.
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// All families, in declaration order.
    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// Number of agents.
    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Number of families (= number of pieces in an allocation).
    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    /// Index of the family containing the given agent.
    pub fn family_of(&self, agent: usize) -> usize {
        self.families
            .iter()
            .position(|f| f.members.contains(&agent))
            .expect("every agent belongs to a family")
    }

    /// Looks up an agent index by id.
    pub fn agent_index(&self, id: &str) -> Result<usize, InstanceError> {
        self.agents
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| InstanceError::UnknownAgent(id.to_owned()))
    }

    /// Looks up a family index by id.
    pub fn family_index(&self, id: &str) -> Result<usize, InstanceError> {
        self.families
            .iter()
            .position(|f| f.id == id)
            .ok_or_else(|| InstanceError::UnknownFamily(id.to_owned()))
    }

    /// Exact value of `piece` for the given agent.
    ///
    /// Errors when any component of the piece leaves the cake.
    pub fn eval(&self, agent: usize, piece: &Piece) -> Result<Rational, InstanceError> {
        self.check_agent(agent)?;
        self.check_within_cake(piece)?;
        Ok(self.agents[agent].measure.value_of_piece(piece))
    }

    /// The smallest `x >= start` with value of `[start, x]` exactly
    /// `target`, for the given agent. See [`StepMeasure::mark`].
    pub fn mark(
        &self,
        agent: usize,
        start: &Rational,
        target: &Rational,
    ) -> Result<Rational, InstanceError> {
        self.check_agent(agent)?;
        Ok(self.agents[agent].measure.mark(start, target)?)
    }

    /// The family's averaged measure: the pointwise mean of its members'
    /// densities. With `normalize` set, each member is first rescaled to
    /// total value 1; a member with zero total then triggers
    /// [`InstanceError::DegenerateAgent`].
    pub fn family_average_measure(
        &self,
        family: usize,
        normalize: bool,
    ) -> Result<StepMeasure, InstanceError> {
        let family = self
            .families
            .get(family)
            .ok_or_else(|| InstanceError::UnknownFamily(family.to_string()))?;
        let mut normalized_storage = Vec::new();
        let mut members: Vec<&StepMeasure> = Vec::with_capacity(family.members.len());
        for &m in &family.members {
            if normalize {
                let scaled = self.agents[m].measure.normalized().map_err(|e| match e {
                    MeasureError::ZeroTotal => InstanceError::DegenerateAgent {
                        agent: self.agents[m].id.clone(),
                    },
                    other => InstanceError::Measure(other),
                })?;
                normalized_storage.push(scaled);
            } else {
                members.push(&self.agents[m].measure);
            }
        }
        members.extend(normalized_storage.iter());
        Ok(StepMeasure::average_of(&members)?)
    }

    /// Structural validation of an allocation against this instance:
    /// piece count, containment in the cake, pairwise interior
    /// disjointness, and full coverage. All witnesses are exact.
    pub fn validate_partition(&self, allocation: &Allocation) -> ValidationReport {
        let mut report = ValidationReport {
            piece_count_expected: self.family_count(),
            piece_count_actual: allocation.pieces.len(),
            outside_cake: Vec::new(),
            overlaps: Vec::new(),
            gaps: Vec::new(),
        };
        for (f, piece) in allocation.pieces.iter().enumerate() {
            for iv in piece.intervals() {
                if !self.cake.contains_interval(iv) {
                    report.outside_cake.push((f, iv.clone()));
                }
            }
        }
        for a in 0..allocation.pieces.len() {
            for b in (a + 1)..allocation.pieces.len() {
                if let Some(witness) = allocation.pieces[a].interior_overlap(&allocation.pieces[b])
                {
                    report.overlaps.push(Overlap {
                        family_a: a,
                        family_b: b,
                        witness,
                    });
                }
            }
        }
        let union = allocation
            .pieces
            .iter()
            .fold(Piece::empty(), |acc, p| acc.union(p));
        report.gaps = union.gaps_within(&self.cake);
        report
    }

    fn check_agent(&self, agent: usize) -> Result<(), InstanceError> {
        if agent >= self.agents.len() {
            return Err(InstanceError::UnknownAgent(agent.to_string()));
        }
        Ok(())
    }

    fn check_within_cake(&self, piece: &Piece) -> Result<(), InstanceError> {
        for iv in piece.intervals() {
            if !self.cake.contains_interval(iv) {
                return Err(InstanceError::PieceOutsideCake {
                    witness: iv.clone(),
                    cake: self.cake.clone(),
                });
            }
        }
        Ok(())
    }
}

/// A candidate division: one piece per family, indexed like
/// [`Instance::families`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    /// `pieces[j]` is the share of family `j`.
    pub pieces: Vec<Piece>,
}

impl Allocation {
    /// Wraps a list of pieces (already in family order).
    pub fn new(pieces: Vec<Piece>) -> Self {
        Self { pieces }
    }

    /// Total number of connected components across all pieces.
    pub fn component_count(&self) -> usize {
        self.pieces.iter().map(Piece::component_count).sum()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, piece) in self.pieces.iter().enumerate() {
            writeln!(f, "piece {i}: {piece}")?;
        }
        Ok(())
    }
}

/// Exact structural findings for an allocation. The allocation is a valid
/// partition iff [`ValidationReport::is_valid`] returns true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Number of families in the instance.
    pub piece_count_expected: usize,
    /// Number of pieces in the allocation.
    pub piece_count_actual: usize,
    /// Components that leave the cake, with the offending family index.
    pub outside_cake: Vec<(usize, Interval)>,
    /// Pairs of pieces that overlap in positive length.
    pub overlaps: Vec<Overlap>,
    /// Stretches of cake covered by no piece.
    pub gaps: Vec<Interval>,
}

/// A positive-length overlap between two families' pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub family_a: usize,
    pub family_b: usize,
    /// A maximal interval (within one component pair) where both pieces
    /// claim positive length.
    pub witness: Interval,
}

impl ValidationReport {
    /// True when the allocation is an exact partition of the cake into
    /// the expected number of pieces.
    pub fn is_valid(&self) -> bool {
        self.piece_count_expected == self.piece_count_actual
            && self.outside_cake.is_empty()
            && self.overlaps.is_empty()
            && self.gaps.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid partition");
        }
        if self.piece_count_expected != self.piece_count_actual {
            writeln!(
                f,
                "expected {} pieces, found {}",
                self.piece_count_expected, self.piece_count_actual
            )?;
        }
        for (family, iv) in &self.outside_cake {
            writeln!(f, "piece {family} leaves the cake at {iv}")?;
        }
        for o in &self.overlaps {
            writeln!(
                f,
                "pieces {} and {} overlap on {}",
                o.family_a, o.family_b, o.witness
            )?;
        }
        for gap in &self.gaps {
            writeln!(f, "uncovered gap {gap}")?;
        }
        Ok(())
    }
}

/// True iff every interval value of the agent's measure is preserved by
/// the allocation — that is, the pieces are a partition, so each agent's
/// piece values sum to the agent's total.
pub fn allocation_conserves_value(instance: &Instance, allocation: &Allocation) -> bool {
    if !instance.validate_partition(allocation).is_valid() {
        return false;
    }
    (0..instance.agent_count()).all(|i| {
        let sum: Rational = allocation
            .pieces
            .iter()
            .map(|p| instance.agents()[i].measure.value_of_piece(p))
            .fold(Rational::zero(), |acc, v| acc + v);
        sum == instance.agents()[i].measure.total()
    })
}
