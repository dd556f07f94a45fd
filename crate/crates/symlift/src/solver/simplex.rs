//! Dense two-phase simplex over exact rationals with Bland pivoting.
//!
//! Variables arrive with optional bounds. Each is shifted or split so the
//! tableau works with nonnegative columns only: a finite lower bound
//! shifts, an upper-only bound flips, a free variable splits into a
//! difference of two nonnegative parts. Equality rows and flipped
//! inequalities take artificial columns; phase 1 minimizes their sum.
//! Bland's least-index rule makes cycling impossible, which exact
//! arithmetic turns into an unconditional termination guarantee.

use num_traits::{One, Signed, Zero};

use crate::lp::Rel;
use crate::rational::Rational;

use super::Row;

pub(crate) enum SimplexResult {
    Infeasible,
    /// An unbounded improving direction over the input variables.
    Unbounded(Vec<Rational>),
    Optimal(Rational, Vec<Rational>),
}

/// How an input variable maps to tableau columns.
enum ColMap {
    /// x = shift + x' (or x = shift − x' when flipped), x' ≥ 0.
    Shifted { col: usize, shift: Rational, flip: bool },
    /// x = x⁺ − x⁻.
    Split { pos: usize, neg: usize },
}

pub(crate) fn solve(
    rows: &[Row],
    lb: &[Option<Rational>],
    ub: &[Option<Rational>],
    objective: &[Rational],
    nvars: usize,
    minimize: bool,
) -> SimplexResult {
    // Column layout: structural columns first, then slacks, then
    // artificials. `extra` collects upper-bound rows for doubly bounded
    // variables.
    let mut maps: Vec<ColMap> = Vec::with_capacity(nvars);
    let mut ncols = 0usize;
    let mut extra: Vec<Row> = Vec::new();
    for j in 0..nvars {
        match (&lb[j], &ub[j]) {
            (Some(l), maybe_u) => {
                maps.push(ColMap::Shifted { col: ncols, shift: l.clone(), flip: false });
                if let Some(u) = maybe_u {
                    debug_assert!(u >= l);
                    extra.push(Row {
                        terms: vec![(j, Rational::one())],
                        rel: Rel::Le,
                        rhs: u.clone(),
                    });
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(ColMap::Shifted { col: ncols, shift: u.clone(), flip: true });
                ncols += 1;
            }
            (None, None) => {
                maps.push(ColMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let nstruct = ncols;

    // Rewrite rows over tableau columns; track rhs adjustments.
    let all_rows: Vec<&Row> = rows.iter().chain(extra.iter()).collect();
    let m = all_rows.len();
    let mut a: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut b: Vec<Rational> = Vec::with_capacity(m);
    let mut rels: Vec<Rel> = Vec::with_capacity(m);
    for row in &all_rows {
        let mut dense = vec![Rational::zero(); nstruct];
        let mut rhs = row.rhs.clone();
        for (j, c) in &row.terms {
            match &maps[*j] {
                ColMap::Shifted { col, shift, flip } => {
                    rhs -= c * shift;
                    if *flip {
                        dense[*col] -= c;
                    } else {
                        dense[*col] += c;
                    }
                }
                ColMap::Split { pos, neg } => {
                    dense[*pos] += c;
                    dense[*neg] -= c;
                }
            }
        }
        a.push(dense);
        b.push(rhs);
        rels.push(row.rel);
    }

    // Slacks, sign normalization, artificials.
    let mut total = nstruct;
    let mut slack_col: Vec<Option<usize>> = vec![None; m];
    for (i, rel) in rels.iter().enumerate() {
        if *rel == Rel::Le {
            slack_col[i] = Some(total);
            total += 1;
        }
    }
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut art_cols: Vec<usize> = Vec::new();
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for i in 0..m {
        let negate = b[i] < Rational::zero();
        let mut dense = vec![Rational::zero(); total];
        for (jj, v) in a[i].iter().enumerate() {
            if !v.is_zero() {
                dense[jj] = if negate { -v.clone() } else { v.clone() };
            }
        }
        let rhs = if negate { -b[i].clone() } else { b[i].clone() };
        if let Some(s) = slack_col[i] {
            dense[s] = if negate { -Rational::one() } else { Rational::one() };
        }
        tab.push(dense);
        b[i] = rhs;
        // A slack with +1 gives a ready-made basic column; everything
        // else (equalities and flipped inequalities) needs an artificial.
        let natural = slack_col[i].filter(|_| !negate);
        basis.push(natural.unwrap_or(usize::MAX));
        if natural.is_none() {
            art_cols.push(i);
        }
    }
    let nreal = total;
    for &i in &art_cols {
        for row in tab.iter_mut() {
            row.push(Rational::zero());
        }
        tab[i][total] = Rational::one();
        basis[i] = total;
        total += 1;
    }

    // Phase 1: minimize the artificial sum.
    if !art_cols.is_empty() {
        let mut red = vec![Rational::zero(); total];
        let mut val = Rational::zero();
        // Reduced costs of cost vector e_artificials relative to the basis.
        for &i in &art_cols {
            for (jj, v) in tab[i].iter().enumerate() {
                red[jj] -= v;
            }
            val -= &b[i];
        }
        for jj in nreal..total {
            red[jj] += Rational::one();
        }
        pivot_loop(&mut tab, &mut b, &mut basis, &mut red, &mut val, total);
        if !val.is_zero() {
            return SimplexResult::Infeasible;
        }
        // Drive leftover artificials out of the basis or drop their rows.
        let mut i = 0;
        while i < tab.len() {
            if basis[i] >= nreal {
                let piv = (0..nreal).find(|&jj| !tab[i][jj].is_zero());
                match piv {
                    Some(jj) => {
                        pivot(&mut tab, &mut b, &mut basis, None, i, jj);
                    }
                    None => {
                        debug_assert!(b[i].is_zero());
                        tab.remove(i);
                        b.remove(i);
                        basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        // Strip artificial columns so phase 2 can never re-enter them.
        for row in tab.iter_mut() {
            row.truncate(nreal);
        }
        total = nreal;
    }

    // Phase 2 with the real objective (internally always minimizing).
    // Shifted columns leave a constant c·shift behind; collect it so the
    // reported value matches the reconstructed point.
    let mut cost = vec![Rational::zero(); total];
    let mut shift_const = Rational::zero();
    for j in 0..nvars {
        let c = if minimize { objective[j].clone() } else { -objective[j].clone() };
        if c.is_zero() {
            continue;
        }
        match &maps[j] {
            ColMap::Shifted { col, shift, flip } => {
                shift_const += &c * shift;
                if *flip {
                    cost[*col] -= &c;
                } else {
                    cost[*col] += &c;
                }
            }
            ColMap::Split { pos, neg } => {
                cost[*pos] += &c;
                cost[*neg] -= &c;
            }
        }
    }
    let mut red = cost.clone();
    let mut val = Rational::zero();
    for (i, &bi) in basis.iter().enumerate() {
        if !cost[bi].is_zero() {
            for (jj, v) in tab[i].iter().enumerate() {
                red[jj] -= &cost[bi] * v;
            }
            val -= &cost[bi] * &b[i];
        }
    }
    // `val` accumulates −c_B·b; the objective value is its negation.
    if let Some(entering) = pivot_loop(&mut tab, &mut b, &mut basis, &mut red, &mut val, total) {
        // Unbounded: build the improving ray through column `entering`.
        let mut dcols = vec![Rational::zero(); total];
        dcols[entering] = Rational::one();
        for (i, &bi) in basis.iter().enumerate() {
            dcols[bi] = -tab[i][entering].clone();
        }
        let mut ray = vec![Rational::zero(); nvars];
        for (j, map) in maps.iter().enumerate() {
            ray[j] = match map {
                ColMap::Shifted { col, flip, .. } => {
                    if *flip {
                        -dcols[*col].clone()
                    } else {
                        dcols[*col].clone()
                    }
                }
                ColMap::Split { pos, neg } => dcols[*pos].clone() - &dcols[*neg],
            };
        }
        return SimplexResult::Unbounded(ray);
    }

    let mut xcols = vec![Rational::zero(); total];
    for (i, &bi) in basis.iter().enumerate() {
        xcols[bi] = b[i].clone();
    }
    let mut point = vec![Rational::zero(); nvars];
    for (j, map) in maps.iter().enumerate() {
        point[j] = match map {
            ColMap::Shifted { col, shift, flip } => {
                if *flip {
                    shift - &xcols[*col]
                } else {
                    shift + &xcols[*col]
                }
            }
            ColMap::Split { pos, neg } => xcols[*pos].clone() - &xcols[*neg],
        };
    }
    let internal = -val + shift_const;
    let value = if minimize { internal } else { -internal };
    SimplexResult::Optimal(value, point)
}

/// Bland pivoting until optimal or an unbounded column appears (returned).
fn pivot_loop(
    tab: &mut Vec<Vec<Rational>>,
    b: &mut Vec<Rational>,
    basis: &mut Vec<usize>,
    red: &mut Vec<Rational>,
    val: &mut Rational,
    total: usize,
) -> Option<usize> {
    loop {
        let entering = (0..total).find(|&jj| red[jj].is_negative());
        let Some(e) = entering else { return None };
        // Ratio test, ties broken toward the smallest basic variable index.
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..tab.len() {
            if tab[i][e].is_positive() {
                let ratio = &b[i] / &tab[i][e];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((li, _)) = leave else { return Some(e) };
        pivot(tab, b, basis, Some((red.as_mut_slice(), &mut *val)), li, e);
    }
}

fn pivot(
    tab: &mut [Vec<Rational>],
    b: &mut [Rational],
    basis: &mut [usize],
    obj: Option<(&mut [Rational], &mut Rational)>,
    li: usize,
    e: usize,
) {
    let p = tab[li][e].clone();
    if !p.is_one() {
        for v in tab[li].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        b[li] /= &p;
    }
    let (pivot_row, pivot_rhs) = (tab[li].clone(), b[li].clone());
    for i in 0..tab.len() {
        if i == li {
            continue;
        }
        let f = tab[i][e].clone();
        if f.is_zero() {
            continue;
        }
        for (jj, v) in tab[i].iter_mut().enumerate() {
            if !pivot_row[jj].is_zero() {
                *v -= &f * &pivot_row[jj];
            }
        }
        b[i] -= &f * &pivot_rhs;
    }
    if let Some((red, val)) = obj {
        let f = red[e].clone();
        if !f.is_zero() {
            for (jj, v) in red.iter_mut().enumerate() {
                if !pivot_row[jj].is_zero() {
                    *v -= &f * &pivot_row[jj];
                }
            }
            *val -= &f * &pivot_rhs;
        }
    }
    basis[li] = e;
}
