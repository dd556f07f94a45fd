//! Brute-force vertex enumeration for tiny polytopes: every linearly
//! independent size-d subset of active constraints is solved exactly and
//! the resulting point kept if it satisfies the whole system.

use std::collections::BTreeSet;

use num_traits::Zero;
use thiserror::Error;

use crate::lp::{canonicalize, Assignment, LinearProgram, VarId};
use crate::rational::Rational;

use super::{feasible, variable_range, RangeEnd, SolveError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VertexError {
    #[error("instance exceeds the enumeration guard ({vars} variables, {rows} rows; limits 8/40)")]
    GuardExceeded { vars: usize, rows: usize },
    #[error("polytope is unbounded; the vertex set is not enumerable")]
    Unbounded,
}

/// All vertices of the (bounded) feasible region, as total assignments
/// over the occurring variables. Infeasible programs yield the empty set.
pub fn enumerate_vertices(lp: &LinearProgram) -> Result<BTreeSet<Assignment>, VertexError> {
    let canon = canonicalize(lp);
    let vars: Vec<VarId> = canon.occurring_vars().into_iter().collect();
    let d = vars.len();
    let nrows = canon.constraints.len();
    if !crate::guards_overridden() && (d > 8 || nrows > 40) {
        return Err(VertexError::GuardExceeded { vars: d, rows: nrows });
    }
    if !feasible(&canon) {
        return Ok(BTreeSet::new());
    }
    for v in &vars {
        match variable_range(&canon, v) {
            Ok((RangeEnd::Finite(_), RangeEnd::Finite(_))) => {}
            Ok(_) => return Err(VertexError::Unbounded),
            Err(SolveError::Infeasible) => return Ok(BTreeSet::new()),
            Err(e) => unreachable!("{e}"),
        }
    }
    if d == 0 {
        let mut set = BTreeSet::new();
        set.insert(Assignment::new());
        return Ok(set);
    }

    // Dense rows a·x ≤ b over the variable order above.
    let rows: Vec<(Vec<Rational>, Rational)> = canon
        .constraints
        .iter()
        .map(|c| {
            let mut a = vec![Rational::zero(); d];
            for (v, coef) in &c.coeffs {
                let j = vars.binary_search(v).unwrap();
                a[j] = coef.clone();
            }
            (a, c.rhs.clone())
        })
        .collect();

    let mut points: BTreeSet<Vec<Rational>> = BTreeSet::new();
    // Echelon of the chosen active rows, kept augmented with rhs.
    let mut echelon: Vec<(Vec<Rational>, Rational, usize)> = Vec::new();
    search(&rows, d, 0, &mut echelon, &mut points);

    Ok(points
        .into_iter()
        .map(|p| vars.iter().cloned().zip(p).collect())
        .collect())
}

/// Backtracking over row subsets; `echelon` holds the reduced active rows
/// with their pivot columns. Once rank d is reached the unique solution is
/// extracted and tested against every constraint.
fn search(
    rows: &[(Vec<Rational>, Rational)],
    d: usize,
    start: usize,
    echelon: &mut Vec<(Vec<Rational>, Rational, usize)>,
    points: &mut BTreeSet<Vec<Rational>>,
) {
    if echelon.len() == d {
        if let Some(x) = solve_echelon(echelon, d) {
            if rows.iter().all(|(a, b)| dot(a, &x) <= *b) {
                points.insert(x);
            }
        }
        return;
    }
    let need = d - echelon.len();
    if rows.len() - start < need {
        return;
    }
    for i in start..rows.len() {
        let (mut a, mut b) = rows[i].clone();
        for (ea, eb, pivot) in echelon.iter() {
            let f = a[*pivot].clone();
            if !f.is_zero() {
                for (x, y) in a.iter_mut().zip(ea.iter()) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
                b -= &f * eb;
            }
        }
        let Some(pivot) = a.iter().position(|v| !v.is_zero()) else { continue };
        let p = a[pivot].clone();
        for v in a.iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        b /= &p;
        echelon.push((a, b, pivot));
        search(rows, d, i + 1, echelon, points);
        echelon.pop();
    }
}

fn solve_echelon(echelon: &[(Vec<Rational>, Rational, usize)], d: usize) -> Option<Vec<Rational>> {
    // Full rank: every column is some row's pivot; back-substitute.
    let mut x = vec![Rational::zero(); d];
    for (a, b, pivot) in echelon.iter().rev() {
        let mut v = b.clone();
        for j in 0..d {
            if j != *pivot && !a[j].is_zero() {
                v -= &a[j] * &x[j];
            }
        }
        x[*pivot] = v;
    }
    Some(x)
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).map(|(c, v)| c * v).sum()
}
