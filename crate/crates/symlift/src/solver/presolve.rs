//! Exact presolve. All reductions preserve the feasible set up to the
//! recorded affine back-substitutions, so points and rays of the reduced
//! problem map back to the original exactly.
//!
//! Rules, iterated to a fixpoint:
//! * empty and singleton rows (bound extraction, trivial conflicts);
//! * fixed-variable substitution (lower bound meets upper bound);
//! * activity analysis: rows whose bound activity proves them redundant,
//!   infeasible, or forcing (every variable pinned to one end);
//! * doubleton equality elimination;
//! * two structural rules for the `z ≤ w` variable-upper-bound pattern of
//!   the slice gadgets: a zero-right-hand-side row `Σ aᵢzᵢ = s·w` with all
//!   `zᵢ ≤ w` kills `w` when `s > Σ aᵢ` and pins `zᵢ = w` when `s = Σ aᵢ`;
//!   and a pair of uniform-coefficient equality rows with equal right-hand
//!   sides whose variables match one-to-one through VUBs pins each pair.
//!
//! On 0/1-substituted circuit lifts this fixpoint alone usually evaluates
//! the whole circuit, leaving nothing for the simplex.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::lp::Rel;
use crate::rational::Rational;

use super::Row;

#[derive(Debug, Clone)]
pub(crate) struct Affine {
    pub terms: Vec<(usize, Rational)>,
    pub constant: Rational,
}

impl Affine {
    fn constant(c: Rational) -> Affine {
        Affine { terms: vec![], constant: c }
    }

    fn var(j: usize) -> Affine {
        Affine { terms: vec![(j, Rational::one())], constant: Rational::zero() }
    }
}

pub(crate) enum Outcome {
    Infeasible,
    Reduced(Reduced),
}

pub(crate) struct Reduced {
    /// Original indices of the surviving variables, ascending.
    pub keep: Vec<usize>,
    /// Rows over compact indices `0..keep.len()`.
    pub rows: Vec<Row>,
    pub lb: Vec<Option<Rational>>,
    pub ub: Vec<Option<Rational>>,
    nvars: usize,
    solved: Vec<Option<Affine>>,
    elim_order: Vec<usize>,
    compact_of: Vec<Option<usize>>,
}

struct Infeasible;

struct Work {
    rows: Vec<Option<Row>>,
    lb: Vec<Option<Rational>>,
    ub: Vec<Option<Rational>>,
    solved: Vec<Option<Affine>>,
    elim_order: Vec<usize>,
    /// Variable → row ids that may contain it (append-only, may go stale).
    col: Vec<Vec<usize>>,
    pending: Vec<usize>,
    in_pending: Vec<bool>,
}

pub(crate) fn presolve(nvars: usize, rows: Vec<Row>) -> Outcome {
    let mut w = Work {
        rows: Vec::with_capacity(rows.len()),
        lb: vec![None; nvars],
        ub: vec![None; nvars],
        solved: vec![None; nvars],
        elim_order: Vec::new(),
        col: vec![Vec::new(); nvars],
        pending: Vec::new(),
        in_pending: Vec::new(),
    };
    for row in rows {
        w.add_row(row);
    }
    let ok = loop {
        match w.cheap_fixpoint() {
            Err(Infeasible) => break false,
            Ok(()) => {}
        }
        match w.structural_pass() {
            Err(Infeasible) => break false,
            Ok(true) => continue,
            Ok(false) => break true,
        }
    };
    if !ok {
        return Outcome::Infeasible;
    }

    let mut keep = Vec::new();
    let mut compact_of = vec![None; nvars];
    for j in 0..nvars {
        if w.solved[j].is_none() {
            compact_of[j] = Some(keep.len());
            keep.push(j);
        }
    }
    let mut out_rows = Vec::new();
    for slot in w.rows.iter().flatten() {
        let terms = slot
            .terms
            .iter()
            .map(|(j, a)| (compact_of[*j].expect("live row references solved var"), a.clone()))
            .collect();
        out_rows.push(Row { terms, rel: slot.rel, rhs: slot.rhs.clone() });
    }
    let lb = keep.iter().map(|&j| w.lb[j].clone()).collect();
    let ub = keep.iter().map(|&j| w.ub[j].clone()).collect();
    Outcome::Reduced(Reduced {
        keep,
        rows: out_rows,
        lb,
        ub,
        nvars,
        solved: w.solved,
        elim_order: w.elim_order,
        compact_of,
    })
}

impl Work {
    fn add_row(&mut self, row: Row) {
        let id = self.rows.len();
        for (j, _) in &row.terms {
            self.col[*j].push(id);
        }
        self.rows.push(Some(row));
        self.in_pending.push(true);
        self.pending.push(id);
    }

    fn touch_var(&mut self, j: usize) {
        let ids = self.col[j].clone();
        for id in ids {
            if self.rows[id].is_some() && !self.in_pending[id] {
                self.in_pending[id] = true;
                self.pending.push(id);
            }
        }
    }

    /// Expands solved variables and merges duplicate terms.
    fn reduce_row(&self, row: Row) -> Row {
        let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut rhs = row.rhs;
        let mut stack: Vec<(usize, Rational)> = row.terms;
        while let Some((j, a)) = stack.pop() {
            match &self.solved[j] {
                None => {
                    let e = acc.entry(j).or_insert_with(Rational::zero);
                    *e += a;
                }
                Some(expr) => {
                    rhs -= &a * &expr.constant;
                    for (t, c) in &expr.terms {
                        stack.push((*t, &a * c));
                    }
                }
            }
        }
        acc.retain(|_, a| !a.is_zero());
        Row { terms: acc.into_iter().collect(), rel: row.rel, rhs }
    }

    fn set_lb(&mut self, j: usize, v: Rational) -> Result<(), Infeasible> {
        if self.lb[j].as_ref().is_some_and(|cur| *cur >= v) {
            return Ok(());
        }
        if self.ub[j].as_ref().is_some_and(|u| *u < v) {
            return Err(Infeasible);
        }
        self.lb[j] = Some(v);
        if self.lb[j] == self.ub[j] {
            let c = self.lb[j].clone().unwrap();
            self.solve_var(j, Affine::constant(c));
        } else {
            self.touch_var(j);
        }
        Ok(())
    }

    fn set_ub(&mut self, j: usize, v: Rational) -> Result<(), Infeasible> {
        if self.ub[j].as_ref().is_some_and(|cur| *cur <= v) {
            return Ok(());
        }
        if self.lb[j].as_ref().is_some_and(|l| *l > v) {
            return Err(Infeasible);
        }
        self.ub[j] = Some(v);
        if self.lb[j] == self.ub[j] {
            let c = self.ub[j].clone().unwrap();
            self.solve_var(j, Affine::constant(c));
        } else {
            self.touch_var(j);
        }
        Ok(())
    }

    /// Records `x_j = expr` and re-queues every row that may mention `x_j`.
    /// The caller must have emitted rows carrying `x_j`'s bounds first if
    /// the expression is not a constant within them.
    fn solve_var(&mut self, j: usize, expr: Affine) {
        debug_assert!(self.solved[j].is_none());
        debug_assert!(expr.terms.iter().all(|(t, _)| self.solved[*t].is_none() && *t != j));
        self.solved[j] = Some(expr);
        self.elim_order.push(j);
        self.lb[j] = None;
        self.ub[j] = None;
        self.touch_var(j);
    }

    /// Emits `lb ≤ x_j ≤ ub` as raw rows so the bounds survive an
    /// elimination of `x_j`; the rows get the substituted expression when
    /// they are processed.
    fn emit_bound_rows(&mut self, j: usize) {
        if let Some(l) = self.lb[j].clone() {
            self.add_row(Row {
                terms: vec![(j, -Rational::one())],
                rel: Rel::Le,
                rhs: -l,
            });
        }
        if let Some(u) = self.ub[j].clone() {
            self.add_row(Row { terms: vec![(j, Rational::one())], rel: Rel::Le, rhs: u });
        }
        self.lb[j] = None;
        self.ub[j] = None;
    }

    fn cheap_fixpoint(&mut self) -> Result<(), Infeasible> {
        while let Some(id) = self.pending.pop() {
            self.in_pending[id] = false;
            let Some(row) = self.rows[id].take() else { continue };
            let row = self.reduce_row(row);
            if let Some(kept) = self.classify(row)? {
                // Substitution may have introduced variables this row did
                // not mention before; keep the column index a superset.
                for (j, _) in &kept.terms {
                    self.col[*j].push(id);
                }
                self.rows[id] = Some(kept);
            }
        }
        Ok(())
    }

    /// Handles one fully reduced row; returns it back if it must be kept.
    fn classify(&mut self, row: Row) -> Result<Option<Row>, Infeasible> {
        match row.terms.len() {
            0 => {
                let sat = match row.rel {
                    Rel::Le => row.rhs >= Rational::zero(),
                    Rel::Eq => row.rhs.is_zero(),
                };
                if sat {
                    Ok(None)
                } else {
                    Err(Infeasible)
                }
            }
            1 => {
                let (j, a) = (row.terms[0].0, row.terms[0].1.clone());
                let v = &row.rhs / &a;
                match row.rel {
                    Rel::Eq => {
                        self.set_lb(j, v.clone())?;
                        self.set_ub(j, v)?;
                    }
                    Rel::Le => {
                        if a > Rational::zero() {
                            self.set_ub(j, v)?;
                        } else {
                            self.set_lb(j, v)?;
                        }
                    }
                }
                Ok(None)
            }
            2 if row.rel == Rel::Eq => {
                // a·x + b·y = c: eliminate the higher-indexed variable.
                let ((x, a), (y, b)) = (row.terms[0].clone(), row.terms[1].clone());
                let (gone, g_coef, stay, s_coef) =
                    if x > y { (x, a, y, b) } else { (y, b, x, a) };
                self.emit_bound_rows(gone);
                let expr = Affine {
                    terms: vec![(stay, -s_coef / &g_coef)],
                    constant: &row.rhs / &g_coef,
                };
                self.solve_var(gone, expr);
                Ok(None)
            }
            _ => self.classify_wide(row),
        }
    }

    fn classify_wide(&mut self, row: Row) -> Result<Option<Row>, Infeasible> {
        // Bound activity of the left-hand side.
        let mut min_act = Some(Rational::zero());
        let mut max_act = Some(Rational::zero());
        for (j, a) in &row.terms {
            let (lo_bound, hi_bound) = if *a > Rational::zero() {
                (self.lb[*j].as_ref(), self.ub[*j].as_ref())
            } else {
                (self.ub[*j].as_ref(), self.lb[*j].as_ref())
            };
            min_act = match (min_act, lo_bound) {
                (Some(acc), Some(b)) => Some(acc + a * b),
                _ => None,
            };
            max_act = match (max_act, hi_bound) {
                (Some(acc), Some(b)) => Some(acc + a * b),
                _ => None,
            };
        }
        if let Some(lo) = &min_act {
            if *lo > row.rhs {
                return Err(Infeasible);
            }
        }
        if row.rel == Rel::Eq {
            if let Some(hi) = &max_act {
                if *hi < row.rhs {
                    return Err(Infeasible);
                }
            }
        }
        let forcing_min = min_act.as_ref() == Some(&row.rhs);
        let forcing_max = row.rel == Rel::Eq && max_act.as_ref() == Some(&row.rhs);
        if forcing_min || forcing_max {
            for (j, a) in row.terms.clone() {
                let at_lower = (a > Rational::zero()) == forcing_min;
                if at_lower {
                    let l = self.lb[j].clone().unwrap();
                    self.set_ub(j, l)?;
                } else {
                    let u = self.ub[j].clone().unwrap();
                    self.set_lb(j, u)?;
                }
            }
            return Ok(None);
        }
        if row.rel == Rel::Le {
            if let Some(hi) = &max_act {
                if *hi <= row.rhs {
                    return Ok(None);
                }
            }
        }
        Ok(Some(row))
    }

    /// The two VUB-pattern rules. Returns whether anything changed.
    fn structural_pass(&mut self) -> Result<bool, Infeasible> {
        // z → uppers w with a live row z ≤ w.
        let mut vub: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for slot in self.rows.iter().flatten() {
            if slot.rel == Rel::Le && slot.terms.len() == 2 && slot.rhs.is_zero() {
                let (j0, a0) = (&slot.terms[0].0, &slot.terms[0].1);
                let (j1, a1) = (&slot.terms[1].0, &slot.terms[1].1);
                if *a0 == -a1.clone() {
                    let (z, w) = if *a0 > Rational::zero() { (*j0, *j1) } else { (*j1, *j0) };
                    vub.entry(z).or_default().push(w);
                }
            }
        }
        let nonneg = |work: &Work, j: usize| {
            work.lb[j].as_ref().is_some_and(|l| *l >= Rational::zero())
        };

        let mut changed = false;

        // Rule: Σ aᵢ zᵢ = s·w with aᵢ > 0, zᵢ ≤ w, everything nonnegative.
        for id in 0..self.rows.len() {
            let Some(row) = &self.rows[id] else { continue };
            if row.rel != Rel::Eq || !row.rhs.is_zero() || row.terms.len() < 2 {
                continue;
            }
            let pos: Vec<_> =
                row.terms.iter().filter(|(_, a)| *a > Rational::zero()).cloned().collect();
            let neg: Vec<_> =
                row.terms.iter().filter(|(_, a)| *a < Rational::zero()).cloned().collect();
            let (zs, w, s) = if neg.len() == 1 && pos.len() >= 1 {
                (pos, neg[0].0, -neg[0].1.clone())
            } else if pos.len() == 1 && neg.len() >= 1 {
                (
                    neg.iter().map(|(j, a)| (*j, -a.clone())).collect(),
                    pos[0].0,
                    pos[0].1.clone(),
                )
            } else {
                continue;
            };
            if !nonneg(self, w) || !zs.iter().all(|(j, _)| nonneg(self, *j)) {
                continue;
            }
            if !zs
                .iter()
                .all(|(j, _)| vub.get(j).is_some_and(|ups| ups.contains(&w)))
            {
                continue;
            }
            let coef_sum: Rational = zs.iter().map(|(_, a)| a.clone()).sum();
            if s > coef_sum {
                // s·w = Σ aᵢzᵢ ≤ (Σ aᵢ)·w forces w ≤ 0, hence w = 0.
                self.set_ub(w, Rational::zero())?;
                changed = true;
            } else if s == coef_sum {
                // Σ aᵢ(w − zᵢ) = 0 with nonnegative summands: zᵢ = w.
                for (z, _) in zs {
                    if self.solved[z].is_none() && self.solved[w].is_none() && z != w {
                        self.emit_bound_rows(z);
                        self.solve_var(z, Affine::var(w));
                        changed = true;
                    }
                }
            }
        }
        if changed {
            return Ok(true);
        }

        // Rule: a uniform-coefficient equality ρ: Σ a·zᵢ = r whose zᵢ
        // match one-to-one through VUBs into a uniform equality
        // ρ': Σ a·wⱼ = R with {wᵢ} ⊆ {wⱼ} gives Σ_{A} a·w ≥ r, hence
        // Σ_{B∖A} a·w ≤ R − r. When R = r that pins every extra w to 0
        // (they are nonnegative), and when the rows match exactly it pins
        // each zᵢ = wᵢ.
        struct Uniform {
            coef: Rational,
            vars: Vec<usize>,
            sorted: Vec<usize>,
            rhs: Rational,
        }
        let mut uniform: Vec<Uniform> = Vec::new();
        let mut by_var: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for row in self.rows.iter().flatten() {
            if row.rel != Rel::Eq || row.terms.len() < 2 {
                continue;
            }
            let a = row.terms[0].1.clone();
            if a <= Rational::zero() || !row.terms.iter().all(|(_, c)| *c == a) {
                continue;
            }
            let vars: Vec<usize> = row.terms.iter().map(|(j, _)| *j).collect();
            let mut sorted = vars.clone();
            sorted.sort_unstable();
            let id = uniform.len();
            for &j in &sorted {
                by_var.entry(j).or_default().push(id);
            }
            uniform.push(Uniform { coef: a, vars, sorted, rhs: row.rhs.clone() });
        }
        'pairs: for lid in 0..uniform.len() {
            let lower = &uniform[lid];
            if lower.vars.iter().any(|z| self.solved[*z].is_some()) {
                continue;
            }
            // Each z maps through its unique VUB upper, or stands for
            // itself (z ≤ z) when it has none; all images distinct.
            let mut uppers: Vec<usize> = Vec::with_capacity(lower.vars.len());
            for z in &lower.vars {
                let mut ups = vub.get(z).cloned().unwrap_or_default();
                ups.sort_unstable();
                ups.dedup();
                match ups.as_slice() {
                    [] => uppers.push(*z),
                    [w] => uppers.push(*w),
                    _ => continue 'pairs,
                }
            }
            let mut key = uppers.clone();
            key.sort_unstable();
            key.dedup();
            if key.len() != uppers.len() {
                continue;
            }
            for &cand in by_var.get(&key[0]).into_iter().flatten() {
                let upper = &uniform[cand];
                if cand == lid || upper.coef != lower.coef || upper.sorted.len() < key.len() {
                    continue;
                }
                let mut it = upper.sorted.iter().peekable();
                let contained = key.iter().all(|w| {
                    while let Some(&&v) = it.peek() {
                        if v < *w {
                            it.next();
                        } else {
                            break;
                        }
                    }
                    it.next_if(|&&v| v == *w).is_some()
                });
                if !contained {
                    continue;
                }
                if upper.sorted.len() == key.len() && upper.rhs == lower.rhs {
                    // Exact match: Σ a(wᵢ − zᵢ) = 0 with wᵢ ≥ zᵢ.
                    for (z, w) in lower.vars.iter().zip(&uppers) {
                        if self.solved[*z].is_none() && self.solved[*w].is_none() && z != w {
                            self.emit_bound_rows(*z);
                            self.solve_var(*z, Affine::var(*w));
                            changed = true;
                        }
                    }
                } else if upper.rhs == lower.rhs {
                    // Zero slack: every w outside the matched set is 0.
                    for w in &upper.sorted {
                        if !key.contains(w) && self.solved[*w].is_none() && nonneg(self, *w) {
                            self.set_ub(*w, Rational::zero())?;
                            changed = true;
                        }
                    }
                }
                continue 'pairs;
            }
        }
        Ok(changed)
    }
}

impl Reduced {
    /// Rewrites an objective over original indices into one over the
    /// compact surviving variables plus a constant offset.
    pub fn reduce_objective(&self, obj: &[Rational]) -> (Vec<Rational>, Rational) {
        let mut red = vec![Rational::zero(); self.keep.len()];
        let mut constant = Rational::zero();
        for (j, c) in obj.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut stack = vec![(j, c.clone())];
            while let Some((t, a)) = stack.pop() {
                match &self.solved[t] {
                    None => red[self.compact_of[t].unwrap()] += &a,
                    Some(expr) => {
                        constant += &a * &expr.constant;
                        for (u, b) in &expr.terms {
                            stack.push((*u, &a * b));
                        }
                    }
                }
            }
        }
        (red, constant)
    }

    fn reconstruct(&self, compact_values: &[Rational], with_constants: bool) -> Vec<Rational> {
        let mut vals: Vec<Option<Rational>> = vec![None; self.nvars];
        for (k, &j) in self.keep.iter().enumerate() {
            vals[j] = Some(compact_values[k].clone());
        }
        for &j in self.elim_order.iter().rev() {
            let expr = self.solved[j].as_ref().unwrap();
            let mut v = if with_constants { expr.constant.clone() } else { Rational::zero() };
            for (t, a) in &expr.terms {
                v += a * vals[*t].as_ref().expect("back-substitution order");
            }
            vals[j] = Some(v);
        }
        vals.into_iter().map(|v| v.unwrap()).collect()
    }

    /// Values for all original variables from values of the survivors.
    pub fn reconstruct_point(&self, compact_values: &[Rational]) -> Vec<Rational> {
        self.reconstruct(compact_values, true)
    }

    /// Ray directions map through the eliminations with constants dropped.
    pub fn reconstruct_ray(&self, compact_ray: &[Rational]) -> Vec<Rational> {
        self.reconstruct(compact_ray, false)
    }
}
