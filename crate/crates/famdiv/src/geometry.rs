//! Intervals and pieces: the geometry of a one-dimensional resource.
//!
//! The resource ("cake") is a closed interval `[left, right]` of the
//! rational line. A share handed to one family is a [`Piece`]: a finite
//! union of closed intervals kept in canonical form. Because all
//! endpoints are exact rationals, set operations here are exact; there is
//! no epsilon anywhere in this module.
//!
//! Two pieces are allowed to share single endpoints (a cut point belongs
//! to the closures of both sides). Disjointness therefore always means
//! *interior* disjointness: no overlap of positive length.

use crate::rational::Rational;
use num::Zero;
use std::fmt;

/// A closed interval `[left, right]` with rational endpoints.
///
/// Invariant: `left <= right`. A zero-width interval (`left == right`) is
/// permitted and counts as empty: it carries no length and no value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    left: Rational,
    right: Rational,
}

impl Interval {
    /// Creates `[left, right]`. Panics if `left > right`; use
    /// [`Interval::try_new`] when the order is not known statically.
    pub fn new(left: Rational, right: Rational) -> Self {
        Self::try_new(left, right).expect("interval endpoints out of order")
    }

    /// Creates `[left, right]`, or `None` when `left > right`.
    pub fn try_new(left: Rational, right: Rational) -> Option<Self> {
        if left <= right {
            Some(Self { left, right })
        } else {
            None
        }
    }

    /// Left endpoint.
    pub fn left(&self) -> &Rational {
        &self.left
    }

    /// Right endpoint.
    pub fn right(&self) -> &Rational {
        &self.right
    }

    /// `right - left`.
    pub fn length(&self) -> Rational {
        &self.right - &self.left
    }

    /// True when the interval has zero width.
    pub fn is_empty(&self) -> bool {
        self.left == self.right
    }

    /// True when `x` lies in the closed interval.
    pub fn contains(&self, x: &Rational) -> bool {
        &self.left <= x && x <= &self.right
    }

    /// True when `other` lies entirely inside `self` (closures).
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    /// Intersection of closures, or `None` when the closures are disjoint.
    /// The result may be a single shared point (zero width).
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let left = self.left.clone().max(other.left.clone());
        let right = self.right.clone().min(other.right.clone());
        Interval::try_new(left, right)
    }

    /// Length of the overlap between the two intervals (zero when they
    /// only touch or are disjoint).
    pub fn overlap_length(&self, other: &Interval) -> Rational {
        self.intersect(other)
            .map(|i| i.length())
            .unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.left, self.right)
    }
}

/// A finite union of closed intervals, in canonical form.
///
/// Canonical form means: no zero-width intervals, sorted by left endpoint,
/// and no two intervals that overlap or touch (those are merged). Under
/// this normal form, structural equality is set equality, and
/// [`Piece::component_count`] is the number of connected components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Piece {
    intervals: Vec<Interval>,
}

impl Piece {
    /// The empty piece.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a piece from arbitrary intervals, canonicalizing: empty
    /// intervals are dropped, the rest are sorted and merged.
    pub fn from_intervals<I>(intervals: I) -> Self
    where
        I: IntoIterator<Item = Interval>,
    {
        let mut list: Vec<Interval> = intervals.into_iter().filter(|iv| !iv.is_empty()).collect();
        list.sort();
        let mut merged: Vec<Interval> = Vec::with_capacity(list.len());
        for iv in list {
            match merged.last_mut() {
                Some(last) if iv.left() <= last.right() => {
                    if iv.right() > last.right() {
                        *last = Interval::new(last.left().clone(), iv.right().clone());
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    /// Builds a single-interval piece (or the empty piece if the interval
    /// is zero-width).
    pub fn from_interval(interval: Interval) -> Self {
        Self::from_intervals([interval])
    }

    /// The component intervals, in canonical order.
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        self.intervals.len()
    }

    /// True when the piece contains no positive length.
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total length of the piece.
    pub fn total_length(&self) -> Rational {
        self.intervals
            .iter()
            .fold(Rational::zero(), |acc, iv| acc + iv.length())
    }

    /// Union of two pieces, canonicalized.
    pub fn union(&self, other: &Piece) -> Piece {
        Piece::from_intervals(self.intervals.iter().chain(other.intervals.iter()).cloned())
    }

    /// True when every component lies inside `domain`.
    pub fn within(&self, domain: &Interval) -> bool {
        self.intervals.iter().all(|iv| domain.contains_interval(iv))
    }

    /// First positive-length overlap between the two pieces, if any.
    /// Used to produce exact witnesses for partition violations.
    pub fn interior_overlap(&self, other: &Piece) -> Option<Interval> {
        // Both interval lists are sorted, so a linear merge-scan suffices.
        let (mut a, mut b) = (self.intervals.iter(), other.intervals.iter());
        let (mut x, mut y) = (a.next(), b.next());
        while let (Some(ix), Some(iy)) = (x, y) {
            if let Some(overlap) = ix.intersect(iy) {
                if !overlap.is_empty() {
                    return Some(overlap);
                }
            }
            if ix.right() <= iy.right() {
                x = a.next();
            } else {
                y = b.next();
            }
        }
        None
    }

    /// The parts of `domain` not covered by this piece, as a canonical
    /// list of positive-length intervals.
    pub fn gaps_within(&self, domain: &Interval) -> Vec<Interval> {
        let mut gaps = Vec::new();
        let mut cursor = domain.left().clone();
        for iv in &self.intervals {
            let gap_right = iv.left().clone().min(domain.right().clone());
            if gap_right > cursor {
                gaps.push(Interval::new(cursor.clone(), gap_right));
            }
            if iv.right() > &cursor {
                cursor = iv.right().clone();
            }
        }
        if domain.right() > &cursor {
            gaps.push(Interval::new(cursor, domain.right().clone()));
        }
        gaps
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn iv(l: i64, r: i64) -> Interval {
        Interval::new(int(l), int(r))
    }

    #[test]
    fn interval_basics() {
        let i = Interval::new(rat(1, 2), rat(3, 2));
        assert_eq!(i.length(), int(1));
        assert!(!i.is_empty());
        assert!(i.contains(&int(1)));
        assert!(!i.contains(&int(2)));
        assert!(Interval::new(int(1), int(1)).is_empty());
        assert!(Interval::try_new(int(2), int(1)).is_none());
    }

    #[test]
    fn intersect_shares_endpoint() {
        let a = iv(0, 2);
        let b = iv(2, 4);
        let meet = a.intersect(&b).unwrap();
        assert!(meet.is_empty());
        assert_eq!(a.overlap_length(&b), int(0));
        assert_eq!(iv(0, 3).overlap_length(&iv(2, 4)), int(1));
    }

    #[test]
    fn canonicalization_sorts_merges_and_drops_empties() {
        let p = Piece::from_intervals([iv(3, 4), iv(0, 1), iv(1, 2), iv(5, 5)]);
        assert_eq!(p.intervals(), &[iv(0, 2), iv(3, 4)]);
        assert_eq!(p.component_count(), 2);
        assert_eq!(p.total_length(), int(3));
    }

    #[test]
    fn canonicalization_is_idempotent_and_order_free() {
        let a = Piece::from_intervals([iv(0, 1), iv(2, 3)]);
        let b = Piece::from_intervals([iv(2, 3), iv(0, 1)]);
        assert_eq!(a, b);
        let again = Piece::from_intervals(a.intervals().to_vec());
        assert_eq!(a, again);
    }

    #[test]
    fn overlapping_inputs_merge() {
        let p = Piece::from_intervals([iv(0, 2), iv(1, 3)]);
        assert_eq!(p.intervals(), &[iv(0, 3)]);
    }

    #[test]
    fn interior_overlap_witness() {
        let a = Piece::from_intervals([iv(0, 2)]);
        let b = Piece::from_intervals([iv(2, 4)]);
        assert!(a.interior_overlap(&b).is_none(), "shared endpoint is fine");
        let c = Piece::from_intervals([iv(1, 3)]);
        let w = a.interior_overlap(&c).unwrap();
        assert_eq!(w, iv(1, 2));
    }

    #[test]
    fn gaps_within_domain() {
        let p = Piece::from_intervals([iv(1, 2), iv(3, 4)]);
        let gaps = p.gaps_within(&iv(0, 5));
        assert_eq!(gaps, vec![iv(0, 1), iv(2, 3), iv(4, 5)]);
        let full = Piece::from_interval(iv(0, 5));
        assert!(full.gaps_within(&iv(0, 5)).is_empty());
        let empty = Piece::empty();
        assert_eq!(empty.gaps_within(&iv(0, 1)), vec![iv(0, 1)]);
    }

    #[test]
    fn union_merges_touching_components() {
        let a = Piece::from_intervals([iv(0, 1)]);
        let b = Piece::from_intervals([iv(1, 2), iv(4, 5)]);
        let u = a.union(&b);
        assert_eq!(u.intervals(), &[iv(0, 2), iv(4, 5)]);
    }
}
