//! JSON documents for instances, allocations, and fairness reports.
//!
//! Every number crosses the boundary exactly: rationals are written as
//! bare integers when possible and as `"p/q"` strings otherwise, and
//! both forms are accepted on input. Floating-point literals are
//! rejected — `0.5` silently means `1/2` only until it doesn't.
//!
//! The three document shapes:
//!
//! ```json
//! { "cake": [0, 4],
//!   "agents": [ { "id": "alice", "family": "f1",
//!                 "density": [[0, 1, 6], [1, 2, 3]] } ] }
//! ```
//!
//! ```json
//! { "pieces": [ { "family": 0, "intervals": [[0, 2]] },
//!               { "family": 1, "intervals": [[2, 4]] } ] }
//! ```
//!
//! Reports serialize all the evidence a checker produced; see
//! [`serialize_report`]. All three round-trip losslessly.

use crate::fairness::{AgentVerdict, Comparison, Criterion, FairnessReport, FamilyVerdict};
use crate::geometry::{Interval, Piece};
use crate::instance::{Allocation, Instance, InstanceError};
use crate::measure::{MeasureError, StepMeasure};
use crate::rational::{parse_rational, Rational};
use num::ToPrimitive;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Errors from parsing or assembling documents.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    /// Malformed JSON or a field of the wrong shape; the message carries
    /// line and column.
    #[error("invalid document: {0}")]
    Json(String),
    #[error("agent {id:?}: {source}")]
    AgentMeasure {
        id: String,
        #[source]
        source: MeasureError,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("the cake [{left}, {right}] has no width")]
    EmptyCake { left: Rational, right: Rational },
    #[error("interval [{left}, {right}] has its endpoints out of order")]
    BackwardsInterval { left: Rational, right: Rational },
    #[error("allocation needs exactly {expected} pieces, found {got}")]
    WrongPieceCount { expected: usize, got: usize },
    #[error("allocation assigns family {family} more than once")]
    DuplicateFamily { family: usize },
    #[error("allocation references family {family}, valid indices are 0..{families}")]
    UnknownFamilyIndex { family: usize, families: usize },
    #[error("unknown criterion {0:?}")]
    UnknownCriterion(String),
}

/// A rational that serializes as a bare integer when it is one (and
/// fits in an `i64`) and as a `"p/q"` string otherwise.
#[derive(Debug, Clone, PartialEq)]
struct JsonRational(Rational);

impl Serialize for JsonRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Some(n) = self.0.numer().to_i64() {
                return serializer.serialize_i64(n);
            }
        }
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for JsonRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RationalVisitor;

        impl Visitor<'_> for RationalVisitor {
            type Value = JsonRational;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("an integer or a \"p/q\" string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<JsonRational, E> {
                Ok(JsonRational(Rational::from_integer(v.into())))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<JsonRational, E> {
                Ok(JsonRational(Rational::from_integer(v.into())))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<JsonRational, E> {
                Err(E::custom(format!(
                    "floating point is not exact; write {v} as a \"p/q\" string"
                )))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<JsonRational, E> {
                parse_rational(v).map(JsonRational).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RationalVisitor)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    cake: [JsonRational; 2],
    agents: Vec<AgentDoc>,
}

#[derive(Serialize, Deserialize)]
struct AgentDoc {
    id: String,
    family: String,
    density: Vec<[JsonRational; 3]>,
}

#[derive(Serialize, Deserialize)]
struct AllocationDoc {
    pieces: Vec<PieceDoc>,
}

#[derive(Serialize, Deserialize)]
struct PieceDoc {
    family: usize,
    intervals: Vec<[JsonRational; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    criterion: String,
    normalized: bool,
    tolerance: JsonRational,
    satisfied: bool,
    agents: Vec<AgentVerdictDoc>,
    families: Vec<FamilyVerdictDoc>,
}

#[derive(Serialize, Deserialize)]
struct AgentVerdictDoc {
    agent: usize,
    agent_id: String,
    family: usize,
    own_value: JsonRational,
    comparison: ComparisonDoc,
    satisfied: bool,
}

#[derive(Serialize, Deserialize)]
struct FamilyVerdictDoc {
    family: usize,
    family_id: String,
    member_count: usize,
    satisfied_members: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    average_own: Option<JsonRational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    average_comparison: Option<ComparisonDoc>,
    satisfied: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ComparisonDoc {
    BestRival { family: usize, value: JsonRational },
    NoRival,
    FairShare { value: JsonRational },
}

impl From<&Comparison> for ComparisonDoc {
    fn from(c: &Comparison) -> Self {
        match c {
            Comparison::BestRival { family, value } => ComparisonDoc::BestRival {
                family: *family,
                value: JsonRational(value.clone()),
            },
            Comparison::NoRival => ComparisonDoc::NoRival,
            Comparison::FairShare { value } => ComparisonDoc::FairShare {
                value: JsonRational(value.clone()),
            },
        }
    }
}

impl From<ComparisonDoc> for Comparison {
    fn from(c: ComparisonDoc) -> Self {
        match c {
            ComparisonDoc::BestRival { family, value } => Comparison::BestRival {
                family,
                value: value.0,
            },
            ComparisonDoc::NoRival => Comparison::NoRival,
            ComparisonDoc::FairShare { value } => Comparison::FairShare { value: value.0 },
        }
    }
}

fn criterion_from_name(name: &str) -> Result<Criterion, IoError> {
    Ok(match name {
        "average-envy-free" => Criterion::AverageEnvyFree,
        "democratic-envy-free" => Criterion::DemocraticEnvyFree,
        "unanimous-envy-free" => Criterion::UnanimousEnvyFree,
        "average-proportional" => Criterion::AverageProportional,
        "democratic-proportional" => Criterion::DemocraticProportional,
        "unanimous-proportional" => Criterion::UnanimousProportional,
        other => return Err(IoError::UnknownCriterion(other.to_owned())),
    })
}

fn pretty(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents always serialize");
    text.push('\n');
    text
}

/// Parses an instance document.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    let [left, right] = doc.cake;
    let cake = Interval::try_new(left.0.clone(), right.0.clone()).ok_or_else(|| {
        IoError::BackwardsInterval {
            left: left.0.clone(),
            right: right.0.clone(),
        }
    })?;
    if cake.is_empty() {
        return Err(IoError::EmptyCake {
            left: left.0,
            right: right.0,
        });
    }
    let mut rows = Vec::with_capacity(doc.agents.len());
    for agent in doc.agents {
        let segments: Vec<(Rational, Rational, Rational)> = agent
            .density
            .into_iter()
            .map(|[l, r, d]| (l.0, r.0, d.0))
            .collect();
        let measure = StepMeasure::from_segments(&cake, &segments).map_err(|source| {
            IoError::AgentMeasure {
                id: agent.id.clone(),
                source,
            }
        })?;
        rows.push((agent.id, agent.family, measure));
    }
    Ok(Instance::from_rows(cake, rows)?)
}

/// Serializes an instance; inverse of [`parse_instance`].
pub fn serialize_instance(instance: &Instance) -> String {
    let agents = instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let m = &agent.measure;
            let density = m
                .breakpoints()
                .windows(2)
                .zip(m.densities())
                .map(|(pair, d)| {
                    [
                        JsonRational(pair[0].clone()),
                        JsonRational(pair[1].clone()),
                        JsonRational(d.clone()),
                    ]
                })
                .collect();
            AgentDoc {
                id: agent.id.clone(),
                family: instance.families()[instance.family_of(i)].id.clone(),
                density,
            }
        })
        .collect();
    pretty(&InstanceDoc {
        cake: [
            JsonRational(instance.cake().left().clone()),
            JsonRational(instance.cake().right().clone()),
        ],
        agents,
    })
}

/// Parses an allocation document for an instance with `families`
/// families. Every family must appear exactly once, in any order.
pub fn parse_allocation(text: &str, families: usize) -> Result<Allocation, IoError> {
    let doc: AllocationDoc =
        serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    if doc.pieces.len() != families {
        return Err(IoError::WrongPieceCount {
            expected: families,
            got: doc.pieces.len(),
        });
    }
    let mut pieces: Vec<Option<Piece>> = vec![None; families];
    for piece in doc.pieces {
        if piece.family >= families {
            return Err(IoError::UnknownFamilyIndex {
                family: piece.family,
                families,
            });
        }
        if pieces[piece.family].is_some() {
            return Err(IoError::DuplicateFamily {
                family: piece.family,
            });
        }
        let mut intervals = Vec::with_capacity(piece.intervals.len());
        for [l, r] in piece.intervals {
            intervals.push(Interval::try_new(l.0.clone(), r.0.clone()).ok_or(
                IoError::BackwardsInterval {
                    left: l.0,
                    right: r.0,
                },
            )?);
        }
        pieces[piece.family] = Some(Piece::from_intervals(intervals));
    }
    Ok(Allocation::new(
        pieces.into_iter().map(|p| p.expect("all set")).collect(),
    ))
}

/// Serializes an allocation; inverse of [`parse_allocation`].
pub fn serialize_allocation(allocation: &Allocation) -> String {
    let pieces = allocation
        .pieces
        .iter()
        .enumerate()
        .map(|(family, piece)| PieceDoc {
            family,
            intervals: piece
                .intervals()
                .iter()
                .map(|iv| {
                    [
                        JsonRational(iv.left().clone()),
                        JsonRational(iv.right().clone()),
                    ]
                })
                .collect(),
        })
        .collect();
    pretty(&AllocationDoc { pieces })
}

/// Parses a fairness report document.
pub fn parse_report(text: &str) -> Result<FairnessReport, IoError> {
    let doc: ReportDoc = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    Ok(FairnessReport {
        criterion: criterion_from_name(&doc.criterion)?,
        normalized: doc.normalized,
        tolerance: doc.tolerance.0,
        satisfied: doc.satisfied,
        agents: doc
            .agents
            .into_iter()
            .map(|a| AgentVerdict {
                agent: a.agent,
                agent_id: a.agent_id,
                family: a.family,
                own_value: a.own_value.0,
                comparison: a.comparison.into(),
                satisfied: a.satisfied,
            })
            .collect(),
        families: doc
            .families
            .into_iter()
            .map(|f| FamilyVerdict {
                family: f.family,
                family_id: f.family_id,
                member_count: f.member_count,
                satisfied_members: f.satisfied_members,
                average_own: f.average_own.map(|v| v.0),
                average_comparison: f.average_comparison.map(Into::into),
                satisfied: f.satisfied,
            })
            .collect(),
    })
}

/// Serializes a fairness report; inverse of [`parse_report`].
pub fn serialize_report(report: &FairnessReport) -> String {
    pretty(&ReportDoc {
        criterion: report.criterion.to_string(),
        normalized: report.normalized,
        tolerance: JsonRational(report.tolerance.clone()),
        satisfied: report.satisfied,
        agents: report
            .agents
            .iter()
            .map(|a| AgentVerdictDoc {
                agent: a.agent,
                agent_id: a.agent_id.clone(),
                family: a.family,
                own_value: JsonRational(a.own_value.clone()),
                comparison: (&a.comparison).into(),
                satisfied: a.satisfied,
            })
            .collect(),
        families: report
            .families
            .iter()
            .map(|f| FamilyVerdictDoc {
                family: f.family,
                family_id: f.family_id.clone(),
                member_count: f.member_count,
                satisfied_members: f.satisfied_members,
                average_own: f.average_own.clone().map(JsonRational),
                average_comparison: f.average_comparison.as_ref().map(Into::into),
                satisfied: f.satisfied,
            })
            .collect(),
    })
}
