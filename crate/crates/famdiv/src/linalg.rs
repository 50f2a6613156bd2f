//! Exact linear algebra over rationals: Gaussian elimination for square
//! and rank-deficient systems, and a small two-phase simplex with
//! Bland's rule for the leaf polytopes of the exact-division search.
//!
//! Everything here is dense and exact. The systems this crate solves are
//! tiny (tens of variables), so clarity and guaranteed termination beat
//! sparse cleverness: Bland's pivoting rule never cycles, and rational
//! arithmetic never needs a tolerance.

use crate::rational::Rational;
use num::{Signed, Zero};

/// Outcome of solving `A x = b` exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOutcome {
    /// The system has no solution.
    Infeasible,
    /// Exactly one solution.
    Unique(Vec<Rational>),
    /// Infinitely many solutions: a particular one (free variables set to
    /// zero) and the indices of the free columns.
    Underdetermined {
        particular: Vec<Rational>,
        free: Vec<usize>,
    },
}

/// Solves `rows · x = rhs` by Gauss–Jordan elimination.
pub fn solve_linear_system(mut rows: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> LinearOutcome {
    assert_eq!(rows.len(), rhs.len());
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    debug_assert!(rows.iter().all(|r| r.len() == n));

    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut next_row = 0;
    for col in 0..n {
        let Some(pivot) = (next_row..m).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next_row, pivot);
        rhs.swap(next_row, pivot);
        let inv = rows[next_row][col].recip();
        for c in col..n {
            let v = &rows[next_row][c] * &inv;
            rows[next_row][c] = v;
        }
        rhs[next_row] = &rhs[next_row] * &inv;
        for r in 0..m {
            if r == next_row || rows[r][col].is_zero() {
                continue;
            }
            // `take` zeroes the pivot-column entry, which is exactly its
            // post-elimination value; update only the columns right of it.
            let factor = std::mem::take(&mut rows[r][col]);
            for c in col + 1..n {
                let delta = &factor * &rows[next_row][c];
                rows[r][c] = &rows[r][c] - delta;
            }
            let delta = &factor * &rhs[next_row];
            rhs[r] = &rhs[r] - delta;
        }
        pivot_cols.push(col);
        next_row += 1;
        if next_row == m {
            break;
        }
    }

    // Any remaining row is all-zero on the left; a nonzero right side
    // certifies inconsistency.
    if rhs[next_row..].iter().any(|v| !v.is_zero()) {
        return LinearOutcome::Infeasible;
    }

    let mut solution = vec![Rational::zero(); n];
    for (r, &col) in pivot_cols.iter().enumerate() {
        solution[col] = rhs[r].clone();
    }
    if pivot_cols.len() == n {
        LinearOutcome::Unique(solution)
    } else {
        let free = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
        LinearOutcome::Underdetermined {
            particular: solution,
            free,
        }
    }
}

/// A nonzero solution of the homogeneous system `rows · u = 0` over `n`
/// variables, or `None` when the kernel is trivial. The vector returned
/// is the one with the first free column set to 1 and the others to 0.
pub fn kernel_vector(mut rows: Vec<Vec<Rational>>, n: usize) -> Option<Vec<Rational>> {
    debug_assert!(rows.iter().all(|r| r.len() == n));
    let m = rows.len();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut next_row = 0;
    for col in 0..n {
        let Some(pivot) = (next_row..m).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next_row, pivot);
        let inv = rows[next_row][col].recip();
        for c in col..n {
            let v = &rows[next_row][c] * &inv;
            rows[next_row][c] = v;
        }
        for r in 0..m {
            if r == next_row || rows[r][col].is_zero() {
                continue;
            }
            let factor = std::mem::take(&mut rows[r][col]);
            for c in col + 1..n {
                let delta = &factor * &rows[next_row][c];
                rows[r][c] = &rows[r][c] - delta;
            }
        }
        pivot_cols.push(col);
        next_row += 1;
        if next_row == m {
            break;
        }
    }
    let free = (0..n).find(|c| !pivot_cols.contains(c))?;
    let mut u = vec![Rational::zero(); n];
    u[free] = Rational::from_integer(1.into());
    for (r, &col) in pivot_cols.iter().enumerate() {
        u[col] = -rows[r][free].clone();
    }
    Some(u)
}

/// A linear program `min objective · x` subject to `rows · x = rhs` and
/// box bounds `lower[i] <= x[i] <= upper[i]` (`None` = unbounded above).
#[derive(Debug, Clone)]
pub struct BoxedLp {
    pub objective: Vec<Rational>,
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
    pub lower: Vec<Rational>,
    pub upper: Vec<Option<Rational>>,
}

/// Outcome of an exact LP solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

impl BoxedLp {
    /// Solves the program exactly. Shifts every variable by its lower
    /// bound, turns upper bounds into slack rows, and runs a two-phase
    /// simplex in standard form.
    pub fn solve(&self) -> LpOutcome {
        let n = self.objective.len();
        assert_eq!(self.lower.len(), n);
        assert_eq!(self.upper.len(), n);
        assert_eq!(self.rows.len(), self.rhs.len());

        // Substitute x = lower + y with y >= 0.
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        let mut rhs: Vec<Rational> = Vec::new();
        for (row, b) in self.rows.iter().zip(&self.rhs) {
            assert_eq!(row.len(), n);
            let shift: Rational = row
                .iter()
                .zip(&self.lower)
                .map(|(a, l)| a * l)
                .fold(Rational::zero(), |acc, v| acc + v);
            rows.push(row.clone());
            rhs.push(b - shift);
        }
        // Upper bounds become y_i + t_i = upper_i - lower_i.
        let mut slack_count = 0;
        for (i, up) in self.upper.iter().enumerate() {
            if let Some(up) = up {
                let width = up - &self.lower[i];
                if width.is_negative() {
                    return LpOutcome::Infeasible;
                }
                let mut row = vec![Rational::zero(); n];
                row[i] = Rational::from_integer(1.into());
                rows.push(row);
                rhs.push(width);
                slack_count += 1;
            }
        }
        let total = n + slack_count;
        let mut slack = n;
        for row in rows.iter_mut() {
            row.resize(total, Rational::zero());
        }
        for (i, up) in self.upper.iter().enumerate() {
            if up.is_some() {
                let r = self.rows.len() + (slack - n);
                rows[r][slack] = Rational::from_integer(1.into());
                let _ = i;
                slack += 1;
            }
        }
        let mut objective = self.objective.clone();
        objective.resize(total, Rational::zero());

        match simplex_standard(&objective, rows, rhs) {
            StandardOutcome::Infeasible => LpOutcome::Infeasible,
            StandardOutcome::Unbounded => LpOutcome::Unbounded,
            StandardOutcome::Optimal(y) => {
                let x: Vec<Rational> = (0..n).map(|i| &self.lower[i] + &y[i]).collect();
                let value = self
                    .objective
                    .iter()
                    .zip(&x)
                    .map(|(c, v)| c * v)
                    .fold(Rational::zero(), |acc, v| acc + v);
                LpOutcome::Optimal { x, value }
            }
        }
    }
}

enum StandardOutcome {
    Infeasible,
    Unbounded,
    Optimal(Vec<Rational>),
}

/// Two-phase simplex for `min c·x, A x = b, x >= 0`, Bland's rule
/// throughout.
fn simplex_standard(
    c: &[Rational],
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
) -> StandardOutcome {
    let n = c.len();

    // Make every right-hand side nonnegative.
    for (row, bv) in a.iter_mut().zip(b.iter_mut()) {
        if bv.is_negative() {
            for v in row.iter_mut() {
                *v = -std::mem::take(v);
            }
            *bv = -std::mem::take(bv);
        }
    }

    // Phase 1: artificial variable per row.
    let m = a.len();
    if m == 0 {
        // Only nonnegativity: optimum is 0 unless some cost is negative.
        if c.iter().any(|v| v.is_negative()) {
            return StandardOutcome::Unbounded;
        }
        return StandardOutcome::Optimal(vec![Rational::zero(); n]);
    }
    for (r, row) in a.iter_mut().enumerate() {
        row.resize(n + m, Rational::zero());
        row[n + r] = Rational::from_integer(1.into());
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let phase1_cost: Vec<Rational> = (0..n + m)
        .map(|j| {
            if j < n {
                Rational::zero()
            } else {
                Rational::from_integer(1.into())
            }
        })
        .collect();
    let feasible = run_simplex(&phase1_cost, &mut a, &mut b, &mut basis);
    debug_assert!(matches!(feasible, RunOutcome::Optimal));
    let phase1_value: Rational = basis
        .iter()
        .zip(&b)
        .filter(|(&j, _)| j >= n)
        .map(|(_, bv)| bv.clone())
        .fold(Rational::zero(), |acc, v| acc + v);
    if !phase1_value.is_zero() {
        return StandardOutcome::Infeasible;
    }

    // Drive any degenerate artificial out of the basis, dropping rows
    // that turn out to be redundant.
    let mut r = 0;
    while r < a.len() {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| !a[r][j].is_zero()) {
                pivot(&mut a, &mut b, &mut basis, r, j);
            } else {
                a.remove(r);
                b.remove(r);
                basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    for row in a.iter_mut() {
        row.truncate(n);
    }

    // Phase 2: the real objective.
    match run_simplex(c, &mut a, &mut b, &mut basis) {
        RunOutcome::Unbounded => StandardOutcome::Unbounded,
        RunOutcome::Optimal => {
            let mut x = vec![Rational::zero(); n];
            for (r, &j) in basis.iter().enumerate() {
                x[j] = b[r].clone();
            }
            StandardOutcome::Optimal(x)
        }
    }
}

enum RunOutcome {
    Optimal,
    Unbounded,
}

/// Simplex iterations from the current basic feasible solution. `b` stays
/// nonnegative throughout; Bland's rule (lowest eligible index for both
/// the entering and leaving choices) guarantees termination.
fn run_simplex(
    c: &[Rational],
    a: &mut Vec<Vec<Rational>>,
    b: &mut Vec<Rational>,
    basis: &mut [usize],
) -> RunOutcome {
    let cols = a.first().map_or(0, Vec::len);
    loop {
        // Reduced costs against the current basis.
        let entering = (0..cols).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let mut reduced = c[j].clone();
            for (r, &bj) in basis.iter().enumerate() {
                if !a[r][j].is_zero() {
                    reduced = reduced - &c[bj] * &a[r][j];
                }
            }
            reduced.is_negative()
        });
        let Some(j) = entering else {
            return RunOutcome::Optimal;
        };
        // Ratio test, ties to the lowest basis index.
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..a.len() {
            if a[r][j].is_positive() {
                let ratio = &b[r] / &a[r][j];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return RunOutcome::Unbounded;
        };
        pivot(a, b, basis, r, j);
    }
}

fn pivot(a: &mut [Vec<Rational>], b: &mut [Rational], basis: &mut [usize], r: usize, j: usize) {
    let inv = a[r][j].recip();
    for v in a[r].iter_mut() {
        *v = &*v * &inv;
    }
    b[r] = &b[r] * &inv;
    for rr in 0..a.len() {
        if rr == r || a[rr][j].is_zero() {
            continue;
        }
        // `take` zeroes column j in this row — its correct new value; the
        // loop must then leave it alone.
        let factor = std::mem::take(&mut a[rr][j]);
        for cc in 0..a[rr].len() {
            if cc == j || a[r][cc].is_zero() {
                continue;
            }
            let delta = &factor * &a[r][cc];
            a[rr][cc] = &a[rr][cc] - delta;
        }
        let delta = &factor * &b[r];
        b[rr] = &b[rr] - delta;
    }
    basis[r] = j;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn row(vals: &[(i64, i64)]) -> Vec<Rational> {
        vals.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    #[test]
    fn unique_system() {
        // 2x + y = 7, x - y = -1  =>  x = 2, y = 3.
        let outcome = solve_linear_system(
            vec![row(&[(2, 1), (1, 1)]), row(&[(1, 1), (-1, 1)])],
            vec![int(7), int(-1)],
        );
        assert_eq!(outcome, LinearOutcome::Unique(vec![int(2), int(3)]));
    }

    #[test]
    fn fractional_unique_system() {
        // x/2 + y/3 = 1, x/5 + y = 2  =>  x = 10/13, y = 24/13.
        let outcome = solve_linear_system(
            vec![row(&[(1, 2), (1, 3)]), row(&[(1, 5), (1, 1)])],
            vec![int(1), int(2)],
        );
        assert_eq!(
            outcome,
            LinearOutcome::Unique(vec![rat(10, 13), rat(24, 13)])
        );
    }

    #[test]
    fn inconsistent_system() {
        let outcome = solve_linear_system(
            vec![row(&[(1, 1), (1, 1)]), row(&[(2, 1), (2, 1)])],
            vec![int(1), int(3)],
        );
        assert_eq!(outcome, LinearOutcome::Infeasible);
    }

    #[test]
    fn underdetermined_system() {
        // x + y + z = 6 with x pivot, y and z free.
        let outcome = solve_linear_system(vec![row(&[(1, 1), (1, 1), (1, 1)])], vec![int(6)]);
        match outcome {
            LinearOutcome::Underdetermined { particular, free } => {
                assert_eq!(particular, vec![int(6), int(0), int(0)]);
                assert_eq!(free, vec![1, 2]);
            }
            other => panic!("expected underdetermined, got {other:?}"),
        }
    }

    #[test]
    fn redundant_rows_still_unique() {
        let outcome = solve_linear_system(
            vec![
                row(&[(1, 1), (1, 1)]),
                row(&[(2, 1), (2, 1)]),
                row(&[(1, 1), (-1, 1)]),
            ],
            vec![int(4), int(8), int(0)],
        );
        assert_eq!(outcome, LinearOutcome::Unique(vec![int(2), int(2)]));
    }

    #[test]
    fn kernel_of_wide_matrix() {
        // x + y + z = 0, y - z = 0 has kernel spanned by (-2, 1, 1).
        let u = kernel_vector(
            vec![
                row(&[(1, 1), (1, 1), (1, 1)]),
                row(&[(0, 1), (1, 1), (-1, 1)]),
            ],
            3,
        )
        .unwrap();
        assert!(u.iter().any(|v| !v.is_zero()));
        assert_eq!(&u[0] + &u[1] + &u[2], int(0));
        assert_eq!(&u[1] - &u[2], int(0));
    }

    #[test]
    fn kernel_of_invertible_matrix_is_trivial() {
        assert_eq!(
            kernel_vector(vec![row(&[(1, 1), (0, 1)]), row(&[(0, 1), (1, 1)])], 2),
            None
        );
    }

    #[test]
    fn kernel_with_no_rows() {
        let u = kernel_vector(vec![], 2);
        assert_eq!(u, Some(vec![int(1), int(0)]));
    }

    fn lp(
        objective: Vec<Rational>,
        rows: Vec<Vec<Rational>>,
        rhs: Vec<Rational>,
        lower: Vec<Rational>,
        upper: Vec<Option<Rational>>,
    ) -> BoxedLp {
        BoxedLp {
            objective,
            rows,
            rhs,
            lower,
            upper,
        }
    }

    #[test]
    fn lp_simple_box() {
        // min x subject to x + y = 1 on [0,1]^2: x = 0, y = 1.
        let outcome = lp(
            row(&[(1, 1), (0, 1)]),
            vec![row(&[(1, 1), (1, 1)])],
            vec![int(1)],
            vec![int(0), int(0)],
            vec![Some(int(1)), Some(int(1))],
        )
        .solve();
        assert_eq!(
            outcome,
            LpOutcome::Optimal {
                x: vec![int(0), int(1)],
                value: int(0)
            }
        );
    }

    #[test]
    fn lp_respects_lower_bounds() {
        // min x + y subject to x + y >= via equality x + y - s = 0? Use
        // shifted boxes instead: x in [1/3, 2], y in [1/4, 2], x + y = 1.
        let outcome = lp(
            row(&[(1, 1), (3, 1)]),
            vec![row(&[(1, 1), (1, 1)])],
            vec![int(1)],
            vec![rat(1, 3), rat(1, 4)],
            vec![Some(int(2)), Some(int(2))],
        )
        .solve();
        // Minimizing x + 3y pushes y to its lower bound 1/4, x = 3/4.
        assert_eq!(
            outcome,
            LpOutcome::Optimal {
                x: vec![rat(3, 4), rat(1, 4)],
                value: rat(3, 2)
            }
        );
    }

    #[test]
    fn lp_infeasible_box() {
        // x + y = 5 but both at most 1.
        let outcome = lp(
            row(&[(1, 1), (1, 1)]),
            vec![row(&[(1, 1), (1, 1)])],
            vec![int(5)],
            vec![int(0), int(0)],
            vec![Some(int(1)), Some(int(1))],
        )
        .solve();
        assert_eq!(outcome, LpOutcome::Infeasible);
    }

    #[test]
    fn lp_unbounded() {
        // min -x with x >= 0 unconstrained above.
        let outcome = lp(row(&[(-1, 1)]), vec![], vec![], vec![int(0)], vec![None]).solve();
        assert_eq!(outcome, LpOutcome::Unbounded);
    }

    #[test]
    fn lp_negative_rhs_rows() {
        // -x - y = -1 is the same constraint as x + y = 1.
        let outcome = lp(
            row(&[(0, 1), (1, 1)]),
            vec![row(&[(-1, 1), (-1, 1)])],
            vec![int(-1)],
            vec![int(0), int(0)],
            vec![None, None],
        )
        .solve();
        assert_eq!(
            outcome,
            LpOutcome::Optimal {
                x: vec![int(1), int(0)],
                value: int(0)
            }
        );
    }

    #[test]
    fn lp_redundant_constraints() {
        // Duplicate rows exercise the artificial-variable cleanup.
        let outcome = lp(
            row(&[(1, 1), (1, 1)]),
            vec![row(&[(1, 1), (1, 1)]), row(&[(1, 1), (1, 1)])],
            vec![int(1), int(1)],
            vec![int(0), int(0)],
            vec![None, None],
        )
        .solve();
        match outcome {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(1)),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn lp_min_max_bracket() {
        // min and max of x - y over the triangle x + y + z = 1, all in
        // [0,1]: extremes are -1 and 1.
        let base = lp(
            row(&[(1, 1), (-1, 1), (0, 1)]),
            vec![row(&[(1, 1), (1, 1), (1, 1)])],
            vec![int(1)],
            vec![int(0), int(0), int(0)],
            vec![Some(int(1)), Some(int(1)), Some(int(1))],
        );
        let min = base.solve();
        let mut negated = base;
        for c in negated.objective.iter_mut() {
            *c = -std::mem::take(c);
        }
        let max = negated.solve();
        match (min, max) {
            (LpOutcome::Optimal { value: lo, .. }, LpOutcome::Optimal { value: hi, .. }) => {
                assert_eq!(lo, int(-1));
                assert_eq!(hi, -int(1));
            }
            other => panic!("expected optima, got {other:?}"),
        }
    }
}
