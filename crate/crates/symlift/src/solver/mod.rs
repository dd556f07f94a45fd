//! Exact rational LP engine: feasibility, optimization, variable ranges,
//! and brute-force vertex enumeration for tiny instances.
//!
//! Every query runs a presolve pass first (bound extraction, fixed-variable
//! substitution, forcing-row analysis, doubleton elimination, and a couple
//! of structural rules for the variable-upper-bound patterns the gadget
//! lifts produce). On 0/1-substituted lifts presolve usually decides the
//! instance outright; whatever remains goes to a dense two-phase simplex
//! with Bland pivoting, which cannot cycle.

mod presolve;
mod simplex;
mod vertices;

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lp::{Assignment, LinearProgram, Rel, VarId};
use crate::rational::Rational;

pub use vertices::{enumerate_vertices, VertexError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Infeasible,
    Unbounded { ray: Assignment },
    Optimal { value: Rational, point: Assignment },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeEnd {
    Finite(Rational),
    Infinite,
}

impl RangeEnd {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            RangeEnd::Finite(r) => Some(r),
            RangeEnd::Infinite => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("variable {0} does not occur in the linear program")]
    UnknownVariable(String),
}

/// Internal indexed form: variables are dense indices, constraints are
/// sparse rows, bounds live in side arrays (populated by presolve).
#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub terms: Vec<(usize, Rational)>,
    pub rel: Rel,
    pub rhs: Rational,
}

pub(crate) struct Problem {
    pub vars: Vec<VarId>,
    pub rows: Vec<Row>,
}

impl Problem {
    /// Indexes the LP's occurring variables plus any extra variables the
    /// caller needs tracked (objective support).
    pub fn build(lp: &LinearProgram, extra: &[VarId]) -> Problem {
        let mut occ = lp.occurring_vars();
        for v in extra {
            occ.insert(v.clone());
        }
        let vars: Vec<VarId> = occ.into_iter().collect();
        let index: BTreeMap<&VarId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut rows = Vec::with_capacity(lp.constraints.len());
        for c in &lp.constraints {
            let mut terms: Vec<(usize, Rational)> =
                c.coeffs.iter().map(|(v, a)| (index[v], a.clone())).collect();
            terms.sort_by_key(|(j, _)| *j);
            rows.push(Row { terms, rel: c.rel, rhs: c.rhs.clone() });
        }
        Problem { vars, rows }
    }
}

fn solve_indexed(
    problem: &Problem,
    objective: &[Rational],
    minimize: bool,
) -> SolveStatus {
    let reduced = match presolve::presolve(problem.vars.len(), problem.rows.clone()) {
        presolve::Outcome::Infeasible => return SolveStatus::Infeasible,
        presolve::Outcome::Reduced(r) => r,
    };
    if std::env::var_os("SYMLIFT_DEBUG_PRESOLVE").is_some() {
        eprintln!("presolve residual: {} rows, {} vars", reduced.rows.len(), reduced.keep.len());
        if std::env::var_os("SYMLIFT_DEBUG_PRESOLVE_ROWS").is_some() {
            for row in &reduced.rows {
                let terms: Vec<String> = row
                    .terms
                    .iter()
                    .map(|(j, a)| format!("{a}*{}", problem.vars[reduced.keep[*j]]))
                    .collect();
                eprintln!("  {} {:?} {}", terms.join(" + "), row.rel, row.rhs);
            }
            for (k, &j) in reduced.keep.iter().enumerate() {
                eprintln!("  bounds {}: {:?}..{:?}", problem.vars[j], reduced.lb[k], reduced.ub[k]);
            }
        }
    }

    // Objective over the reduced variables, with eliminated variables
    // expanded through their back-substitution expressions.
    let (red_obj, obj_const) = reduced.reduce_objective(objective);

    // The residual decomposes into connected components (rows that share
    // no variable are independent); compiled circuit lifts leave one block
    // per gadget, so solving components separately keeps each dense
    // tableau small.
    let nred = reduced.keep.len();
    let mut parent: Vec<usize> = (0..nred).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for row in &reduced.rows {
        if let Some((first, _)) = row.terms.first() {
            let r = find(&mut parent, *first);
            for (j, _) in &row.terms[1..] {
                let rj = find(&mut parent, *j);
                parent[rj] = r;
            }
        }
    }
    let mut comp_vars: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut in_rows = vec![false; nred];
    for row in &reduced.rows {
        for (j, _) in &row.terms {
            in_rows[*j] = true;
        }
    }
    for j in 0..nred {
        if in_rows[j] {
            comp_vars.entry(find(&mut parent, j)).or_default().push(j);
        }
    }
    let mut comp_rows: BTreeMap<usize, Vec<&Row>> = BTreeMap::new();
    for row in &reduced.rows {
        if let Some((first, _)) = row.terms.first() {
            comp_rows.entry(find(&mut parent, *first)).or_default().push(row);
        } else if row_rhs_violated(row) {
            return SolveStatus::Infeasible;
        }
    }

    if std::env::var_os("SYMLIFT_DEBUG_PRESOLVE").is_some() {
        let sizes: Vec<(usize, usize)> = comp_vars
            .iter()
            .map(|(root, vs)| (comp_rows.get(root).map_or(0, |r| r.len()), vs.len()))
            .collect();
        eprintln!("components (rows, vars): {sizes:?}");
    }

    let mut point = vec![Rational::zero(); nred];
    let mut value = obj_const;
    // An unbounded component only makes the whole LP unbounded if every
    // other component is feasible, so finish the sweep before reporting.
    let mut pending_ray: Option<Vec<Rational>> = None;

    // Variables outside every row optimize independently over their bounds.
    for (j, slot) in point.iter_mut().enumerate() {
        if in_rows[j] {
            continue;
        }
        let c = &red_obj[j];
        let (lb, ub) = (&reduced.lb[j], &reduced.ub[j]);
        if c.is_zero() {
            *slot = lb.clone().or_else(|| ub.clone()).unwrap_or_else(Rational::zero);
            continue;
        }
        let want_low = c.is_positive() == minimize;
        let end = if want_low { lb } else { ub };
        match end {
            Some(v) => {
                *slot = v.clone();
                value += c * v;
            }
            None => {
                let ray = pending_ray.get_or_insert_with(|| vec![Rational::zero(); nred]);
                ray[j] = if want_low { -Rational::one() } else { Rational::one() };
            }
        }
    }

    for (root, vars) in &comp_vars {
        let local: BTreeMap<usize, usize> =
            vars.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let rows: Vec<Row> = comp_rows
            .remove(root)
            .unwrap_or_default()
            .into_iter()
            .map(|r| Row {
                terms: r.terms.iter().map(|(j, a)| (local[j], a.clone())).collect(),
                rel: r.rel,
                rhs: r.rhs.clone(),
            })
            .collect();
        let lb: Vec<_> = vars.iter().map(|&j| reduced.lb[j].clone()).collect();
        let ub: Vec<_> = vars.iter().map(|&j| reduced.ub[j].clone()).collect();
        let obj: Vec<_> = vars.iter().map(|&j| red_obj[j].clone()).collect();
        match simplex::solve(&rows, &lb, &ub, &obj, vars.len(), minimize) {
            simplex::SimplexResult::Infeasible => return SolveStatus::Infeasible,
            simplex::SimplexResult::Unbounded(local_ray) => {
                if pending_ray.is_none() {
                    let mut ray = vec![Rational::zero(); nred];
                    for (k, &j) in vars.iter().enumerate() {
                        ray[j] = local_ray[k].clone();
                    }
                    pending_ray = Some(ray);
                }
            }
            simplex::SimplexResult::Optimal(v, local_point) => {
                value += v;
                for (k, &j) in vars.iter().enumerate() {
                    point[j] = local_point[k].clone();
                }
            }
        }
    }

    if let Some(ray) = pending_ray {
        return unbounded_status(problem, &reduced, &ray);
    }
    let full = reduced.reconstruct_point(&point);
    let mut a = Assignment::new();
    for (j, x) in full.into_iter().enumerate() {
        a.set(problem.vars[j].clone(), x);
    }
    SolveStatus::Optimal { value, point: a }
}

fn row_rhs_violated(row: &Row) -> bool {
    debug_assert!(row.terms.is_empty());
    match row.rel {
        Rel::Le => row.rhs.is_negative(),
        Rel::Eq => !row.rhs.is_zero(),
    }
}

fn unbounded_status(
    problem: &Problem,
    reduced: &presolve::Reduced,
    ray: &[Rational],
) -> SolveStatus {
    let full = reduced.reconstruct_ray(ray);
    let mut a = Assignment::new();
    for (j, x) in full.into_iter().enumerate() {
        if !x.is_zero() {
            a.set(problem.vars[j].clone(), x);
        }
    }
    SolveStatus::Unbounded { ray: a }
}

/// True iff the feasible region is nonempty.
pub fn feasible(lp: &LinearProgram) -> bool {
    let problem = Problem::build(lp, &[]);
    let zeros = vec![Rational::zero(); problem.vars.len()];
    !matches!(solve_indexed(&problem, &zeros, true), SolveStatus::Infeasible)
}

/// Exact optimum of a linear objective over the LP's feasible region.
pub fn optimize(
    lp: &LinearProgram,
    objective: &BTreeMap<VarId, Rational>,
    sense: Sense,
) -> SolveStatus {
    let extra: Vec<VarId> = objective.keys().cloned().collect();
    let problem = Problem::build(lp, &extra);
    let mut obj = vec![Rational::zero(); problem.vars.len()];
    for (j, v) in problem.vars.iter().enumerate() {
        if let Some(c) = objective.get(v) {
            obj[j] = c.clone();
        }
    }
    solve_indexed(&problem, &obj, matches!(sense, Sense::Min))
}

/// Exact (min, max) of one variable over a feasible LP.
pub fn variable_range(lp: &LinearProgram, v: &VarId) -> Result<(RangeEnd, RangeEnd), SolveError> {
    let mut objective = BTreeMap::new();
    objective.insert(v.clone(), Rational::from_integer(1.into()));
    let lo = match optimize(lp, &objective, Sense::Min) {
        SolveStatus::Infeasible => return Err(SolveError::Infeasible),
        SolveStatus::Unbounded { .. } => RangeEnd::Infinite,
        SolveStatus::Optimal { value, .. } => RangeEnd::Finite(value),
    };
    let hi = match optimize(lp, &objective, Sense::Max) {
        SolveStatus::Infeasible => return Err(SolveError::Infeasible),
        SolveStatus::Unbounded { .. } => RangeEnd::Infinite,
        SolveStatus::Optimal { value, .. } => RangeEnd::Finite(value),
    };
    Ok((lo, hi))
}
