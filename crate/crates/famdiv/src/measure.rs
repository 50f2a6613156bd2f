//! Step-function value measures over the cake.
//!
//! Every agent values the cake through a [`StepMeasure`]: a piecewise
//! constant, nonnegative density with exact rational breakpoints. Step
//! measures are closed under the two operations this crate leans on —
//! pointwise averaging across a family and restriction to pieces — and
//! their cumulative distribution is piecewise linear, which is what makes
//! exact (tolerance-zero) division computable at all.
//!
//! A measure assigns zero mass outside its domain, so [`StepMeasure::cdf`]
//! and [`StepMeasure::value_of`] are total functions; domain policing for
//! user-facing queries happens at the instance level.

use crate::geometry::{Interval, Piece};
use crate::rational::Rational;
use num::{Signed, Zero};
use std::fmt;

/// Errors from constructing or querying a step measure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    /// The breakpoint/density data does not describe a valid step measure.
    #[error("invalid step measure: {0}")]
    InvalidConstruction(String),
    /// A query point lies outside the measure's domain.
    #[error("point {point} lies outside the domain [{left}, {right}]")]
    OutsideDomain {
        point: Rational,
        left: Rational,
        right: Rational,
    },
    /// A mark target is negative or exceeds the value available to the
    /// right of the start point.
    #[error("mark target {target} is outside [0, {available}]")]
    TargetOutOfRange {
        target: Rational,
        available: Rational,
    },
    /// An operation required a positive total value but the measure is
    /// identically zero.
    #[error("measure has zero total value")]
    ZeroTotal,
    /// Measures that must share a domain do not.
    #[error("domain mismatch: [{0}] vs [{1}]")]
    DomainMismatch(Interval, Interval),
}

/// A piecewise constant nonnegative density on a closed interval.
///
/// Invariants: at least two strictly increasing breakpoints; exactly one
/// density per gap between consecutive breakpoints; all densities >= 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepMeasure {
    breakpoints: Vec<Rational>,
    densities: Vec<Rational>,
}

impl StepMeasure {
    /// Creates a measure from explicit breakpoints and per-cell densities.
    pub fn new(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self, MeasureError> {
        if breakpoints.len() < 2 {
            return Err(MeasureError::InvalidConstruction(
                "need at least two breakpoints".into(),
            ));
        }
        if densities.len() + 1 != breakpoints.len() {
            return Err(MeasureError::InvalidConstruction(format!(
                "{} breakpoints require {} densities, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                densities.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MeasureError::InvalidConstruction(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if densities.iter().any(|d| d.is_negative()) {
            return Err(MeasureError::InvalidConstruction(
                "densities must be nonnegative".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            densities,
        })
    }

    /// Creates the constant measure `density` over `domain`.
    pub fn uniform(domain: &Interval, density: Rational) -> Result<Self, MeasureError> {
        Self::new(
            vec![domain.left().clone(), domain.right().clone()],
            vec![density],
        )
    }

    /// Builds a measure over `domain` from `(left, right, density)`
    /// segments. Segments must be sorted, non-overlapping (touching is
    /// fine), and contained in the domain; uncovered stretches get
    /// density zero.
    pub fn from_segments(
        domain: &Interval,
        segments: &[(Rational, Rational, Rational)],
    ) -> Result<Self, MeasureError> {
        let mut breakpoints = vec![domain.left().clone()];
        let mut densities = Vec::new();
        let mut cursor = domain.left().clone();
        for (left, right, density) in segments {
            if left >= right {
                return Err(MeasureError::InvalidConstruction(format!(
                    "segment [{left}, {right}] has no width"
                )));
            }
            if left < &cursor {
                return Err(MeasureError::InvalidConstruction(format!(
                    "segment [{left}, {right}] overlaps or is out of order"
                )));
            }
            if right > domain.right() || left < domain.left() {
                return Err(MeasureError::InvalidConstruction(format!(
                    "segment [{left}, {right}] extends outside the domain {domain}"
                )));
            }
            if left > &cursor {
                breakpoints.push(left.clone());
                densities.push(Rational::zero());
            }
            breakpoints.push(right.clone());
            densities.push(density.clone());
            cursor = right.clone();
        }
        if &cursor < domain.right() {
            breakpoints.push(domain.right().clone());
            densities.push(Rational::zero());
        }
        Self::new(breakpoints, densities)
    }

    /// The measure's domain as an interval.
    pub fn domain(&self) -> Interval {
        Interval::new(
            self.breakpoints[0].clone(),
            self.breakpoints[self.breakpoints.len() - 1].clone(),
        )
    }

    /// Breakpoints, strictly increasing, spanning the domain.
    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    /// Densities, one per cell between consecutive breakpoints.
    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    /// Total value of the whole domain.
    pub fn total(&self) -> Rational {
        let mut sum = Rational::zero();
        for (i, d) in self.densities.iter().enumerate() {
            sum += d * (&self.breakpoints[i + 1] - &self.breakpoints[i]);
        }
        sum
    }

    /// Cumulative value of `[domain.left, x]`, extended by zero density
    /// outside the domain (so `cdf` is total and monotone on all of Q).
    pub fn cdf(&self, x: &Rational) -> Rational {
        let mut sum = Rational::zero();
        for (i, d) in self.densities.iter().enumerate() {
            let (lo, hi) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
            if x <= lo {
                break;
            }
            let reach = if x < hi { x } else { hi };
            sum += d * (reach - lo);
        }
        sum
    }

    /// Value of a closed interval. Parts outside the domain contribute
    /// zero mass.
    pub fn value_of(&self, interval: &Interval) -> Rational {
        self.cdf(interval.right()) - self.cdf(interval.left())
    }

    /// Value of a piece (sum over its components).
    pub fn value_of_piece(&self, piece: &Piece) -> Rational {
        piece
            .intervals()
            .iter()
            .fold(Rational::zero(), |acc, iv| acc + self.value_of(iv))
    }

    /// Density at point `x`, taken right-continuous: at a breakpoint the
    /// density of the cell to its right applies, and at the domain's right
    /// endpoint the last cell's density. Zero outside the domain.
    pub fn density_at(&self, x: &Rational) -> Rational {
        let n = self.densities.len();
        if x < &self.breakpoints[0] || x > &self.breakpoints[n] {
            return Rational::zero();
        }
        for i in 0..n {
            if x < &self.breakpoints[i + 1] {
                return self.densities[i].clone();
            }
        }
        self.densities[n - 1].clone()
    }

    /// The smallest `x >= start` such that the value of `[start, x]` is
    /// exactly `target`.
    ///
    /// `start` must lie in the domain, and `target` must lie in
    /// `[0, value_of([start, domain.right])]`; otherwise an error is
    /// returned. Ties across zero-density stretches resolve to the
    /// leftmost point, so `mark(start, 0) == start`.
    pub fn mark(&self, start: &Rational, target: &Rational) -> Result<Rational, MeasureError> {
        let domain = self.domain();
        if !domain.contains(start) {
            return Err(MeasureError::OutsideDomain {
                point: start.clone(),
                left: domain.left().clone(),
                right: domain.right().clone(),
            });
        }
        let available = self.cdf(domain.right()) - self.cdf(start);
        if target.is_negative() || target > &available {
            return Err(MeasureError::TargetOutOfRange {
                target: target.clone(),
                available,
            });
        }
        if target.is_zero() {
            return Ok(start.clone());
        }
        let mut accumulated = Rational::zero();
        for (i, d) in self.densities.iter().enumerate() {
            let cell_right = &self.breakpoints[i + 1];
            if cell_right <= start {
                continue;
            }
            let cell_left = if &self.breakpoints[i] > start {
                &self.breakpoints[i]
            } else {
                start
            };
            let contribution = d * (cell_right - cell_left);
            if !d.is_zero() && &accumulated + &contribution >= *target {
                return Ok(cell_left + (target - accumulated) / d);
            }
            accumulated += contribution;
        }
        // Unreachable: the range check above guarantees the target is met.
        Err(MeasureError::TargetOutOfRange {
            target: target.clone(),
            available: accumulated,
        })
    }

    /// Pointwise scaling by a nonnegative factor.
    pub fn scale(&self, factor: &Rational) -> Result<Self, MeasureError> {
        if factor.is_negative() {
            return Err(MeasureError::InvalidConstruction(
                "scale factor must be nonnegative".into(),
            ));
        }
        Self::new(
            self.breakpoints.clone(),
            self.densities.iter().map(|d| d * factor).collect(),
        )
    }

    /// The same measure rescaled to total value 1. Errors with
    /// [`MeasureError::ZeroTotal`] when the measure is identically zero.
    pub fn normalized(&self) -> Result<Self, MeasureError> {
        let total = self.total();
        if total.is_zero() {
            return Err(MeasureError::ZeroTotal);
        }
        self.scale(&total.recip())
    }

    /// Pointwise average of several measures over one shared domain.
    pub fn average_of(measures: &[&StepMeasure]) -> Result<Self, MeasureError> {
        let first = measures
            .first()
            .ok_or_else(|| MeasureError::InvalidConstruction("no measures to average".into()))?;
        let domain = first.domain();
        for m in measures {
            if m.domain() != domain {
                return Err(MeasureError::DomainMismatch(domain, m.domain()));
            }
        }
        let grid = common_breakpoints(measures.iter().copied());
        let count = Rational::from_integer(measures.len().into());
        let mut densities = Vec::with_capacity(grid.len() - 1);
        for w in grid.windows(2) {
            let mid = (&w[0] + &w[1]) / Rational::from_integer(2.into());
            let sum = measures
                .iter()
                .fold(Rational::zero(), |acc, m| acc + m.density_at(&mid));
            densities.push(sum / &count);
        }
        Self::new(grid, densities)
    }

    /// Canonical form: adjacent cells with equal densities are merged.
    /// Two measures describe the same valuation iff their canonical forms
    /// are structurally equal (see [`StepMeasure::equivalent`]).
    pub fn canonical(&self) -> Self {
        let mut breakpoints = vec![self.breakpoints[0].clone()];
        let mut densities: Vec<Rational> = Vec::new();
        for (i, d) in self.densities.iter().enumerate() {
            match densities.last() {
                Some(last) if last == d => {
                    *breakpoints.last_mut().expect("nonempty") = self.breakpoints[i + 1].clone();
                }
                _ => {
                    breakpoints.push(self.breakpoints[i + 1].clone());
                    densities.push(d.clone());
                }
            }
        }
        Self {
            breakpoints,
            densities,
        }
    }

    /// True when the two measures assign the same value to every interval.
    pub fn equivalent(&self, other: &StepMeasure) -> bool {
        self.canonical() == other.canonical()
    }
}

impl fmt::Display for StepMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.densities.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "[{}, {}]×{}",
                self.breakpoints[i],
                self.breakpoints[i + 1],
                d
            )?;
        }
        Ok(())
    }
}

/// Sorted, deduplicated union of the breakpoints of several measures.
pub fn common_breakpoints<'a, I>(measures: I) -> Vec<Rational>
where
    I: IntoIterator<Item = &'a StepMeasure>,
{
    let mut points: Vec<Rational> = measures
        .into_iter()
        .flat_map(|m| m.breakpoints().iter().cloned())
        .collect();
    points.sort();
    points.dedup();
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn iv(l: i64, r: i64) -> Interval {
        Interval::new(int(l), int(r))
    }

    /// Density 6 on [0,1], 3 on [1,2], 0 on [2,4].
    fn alice() -> StepMeasure {
        StepMeasure::new(
            vec![int(0), int(1), int(2), int(4)],
            vec![int(6), int(3), int(0)],
        )
        .unwrap()
    }

    #[test]
    fn construction_is_validated() {
        assert!(StepMeasure::new(vec![int(0)], vec![]).is_err());
        assert!(StepMeasure::new(vec![int(0), int(0)], vec![int(1)]).is_err());
        assert!(StepMeasure::new(vec![int(1), int(0)], vec![int(1)]).is_err());
        assert!(StepMeasure::new(vec![int(0), int(1)], vec![int(-1)]).is_err());
        assert!(StepMeasure::new(vec![int(0), int(1)], vec![]).is_err());
    }

    #[test]
    fn totals_and_interval_values() {
        let m = alice();
        assert_eq!(m.total(), int(9));
        assert_eq!(m.value_of(&iv(0, 2)), int(9));
        assert_eq!(m.value_of(&iv(0, 1)), int(6));
        assert_eq!(m.value_of(&iv(2, 4)), int(0));
        assert_eq!(
            m.value_of(&Interval::new(rat(1, 2), rat(3, 2))),
            int(3) + rat(3, 2)
        );
    }

    #[test]
    fn values_are_additive_across_a_cut() {
        let m = alice();
        let cut = rat(7, 5);
        let left = Interval::new(int(0), cut.clone());
        let right = Interval::new(cut, int(4));
        assert_eq!(m.value_of(&left) + m.value_of(&right), m.total());
    }

    #[test]
    fn cdf_is_clamped_outside_domain() {
        let m = alice();
        assert_eq!(m.cdf(&int(-5)), int(0));
        assert_eq!(m.cdf(&int(10)), int(9));
    }

    #[test]
    fn mark_inverts_eval() {
        let m = alice();
        // 6x = 9/2 inside the first cell.
        let x = m.mark(&int(0), &rat(9, 2)).unwrap();
        assert_eq!(x, rat(3, 4));
        assert_eq!(m.value_of(&Interval::new(int(0), x)), rat(9, 2));
        // Target exactly the total: lands at 2, the leftmost point where
        // the full value has accumulated (density is zero beyond).
        assert_eq!(m.mark(&int(0), &int(9)).unwrap(), int(2));
    }

    #[test]
    fn mark_smallest_point_conventions() {
        let m = alice();
        assert_eq!(m.mark(&int(0), &int(0)).unwrap(), int(0));
        // From inside the dead zone, zero value accumulates at the start.
        assert_eq!(m.mark(&int(3), &int(0)).unwrap(), int(3));
        // A measure with a leading dead zone marks past it.
        let late = StepMeasure::new(vec![int(0), int(1), int(2)], vec![int(0), int(4)]).unwrap();
        assert_eq!(late.mark(&int(0), &int(2)).unwrap(), rat(3, 2));
    }

    #[test]
    fn mark_range_errors() {
        let m = alice();
        assert!(matches!(
            m.mark(&int(0), &int(10)),
            Err(MeasureError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            m.mark(&int(1), &int(4)),
            Err(MeasureError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            m.mark(&int(0), &int(-1)),
            Err(MeasureError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            m.mark(&int(5), &int(0)),
            Err(MeasureError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn from_segments_fills_gaps_with_zero() {
        let m = StepMeasure::from_segments(
            &iv(0, 4),
            &[(int(1), int(2), int(8)), (int(3), int(4), int(2))],
        )
        .unwrap();
        assert_eq!(m.total(), int(10));
        assert_eq!(m.value_of(&iv(0, 1)), int(0));
        assert_eq!(m.value_of(&iv(2, 3)), int(0));
        assert_eq!(m.breakpoints().len(), 5);
    }

    #[test]
    fn from_segments_rejects_disorder_and_overflow() {
        assert!(StepMeasure::from_segments(&iv(0, 4), &[(int(2), int(1), int(1))]).is_err());
        assert!(StepMeasure::from_segments(
            &iv(0, 4),
            &[(int(0), int(2), int(1)), (int(1), int(3), int(1))]
        )
        .is_err());
        assert!(StepMeasure::from_segments(&iv(0, 4), &[(int(3), int(5), int(1))]).is_err());
    }

    #[test]
    fn averaging_refines_the_grid() {
        let a = alice();
        let b = StepMeasure::new(vec![int(0), int(4)], vec![int(1)]).unwrap();
        let avg = StepMeasure::average_of(&[&a, &b]).unwrap();
        assert_eq!(avg.value_of(&iv(0, 1)), rat(7, 2));
        assert_eq!(avg.value_of(&iv(1, 2)), int(2));
        assert_eq!(avg.value_of(&iv(2, 4)), int(1));
        assert_eq!(avg.total(), (a.total() + int(4)) / int(2));
    }

    #[test]
    fn normalization() {
        let m = alice();
        let n = m.normalized().unwrap();
        assert_eq!(n.total(), int(1));
        let zero = StepMeasure::uniform(&iv(0, 1), int(0)).unwrap();
        assert_eq!(zero.normalized(), Err(MeasureError::ZeroTotal));
    }

    #[test]
    fn canonical_merges_equal_neighbors() {
        let m = StepMeasure::new(
            vec![int(0), int(1), int(2), int(3)],
            vec![int(5), int(5), int(2)],
        )
        .unwrap();
        let c = m.canonical();
        assert_eq!(c.breakpoints(), &[int(0), int(2), int(3)]);
        assert!(m.equivalent(&c));
        let other = StepMeasure::new(vec![int(0), int(3)], vec![int(5)]).unwrap();
        assert!(!m.equivalent(&other));
    }
}
