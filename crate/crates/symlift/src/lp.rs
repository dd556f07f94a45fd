//! LP/polytope data model: structured variable identifiers, linear
//! constraints with exact rational coefficients, and the size measure.
//!
//! Variable identifiers separate *domain* indices, which the symmetric
//! group on `[n]` acts on, from *parameter* indices, which it fixes. Input
//! variables are relation atoms `R(i_1,...,i_k)`; auxiliary variables are
//! paths of tagged segments so nested gadget instances stay disjoint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{rational_bits, Rational};

/// One segment of an auxiliary-variable path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathSeg {
    pub tag: String,
    /// Indices in `[n]`, permuted by the group action.
    pub dom: Vec<usize>,
    /// Fixed parameters (slice numbers, bit positions, pad coordinates).
    pub par: Vec<i64>,
}

impl PathSeg {
    pub fn new(tag: impl Into<String>, dom: Vec<usize>, par: Vec<i64>) -> Self {
        PathSeg { tag: tag.into(), dom, par }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Input { rel: String, tuple: Vec<usize> },
    Aux { path: Vec<PathSeg> },
}

impl VarId {
    pub fn input(rel: impl Into<String>, tuple: Vec<usize>) -> Self {
        VarId::Input { rel: rel.into(), tuple }
    }

    pub fn aux(path: Vec<PathSeg>) -> Self {
        debug_assert!(!path.is_empty());
        VarId::Aux { path }
    }

    pub fn aux1(tag: impl Into<String>, dom: Vec<usize>, par: Vec<i64>) -> Self {
        VarId::Aux { path: vec![PathSeg::new(tag, dom, par)] }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, VarId::Input { .. })
    }

    /// Prepends a segment, pushing this variable under a new namespace.
    pub fn prefixed(&self, seg: &PathSeg) -> VarId {
        match self {
            VarId::Input { .. } => panic!("cannot prefix an input variable"),
            VarId::Aux { path } => {
                let mut p = Vec::with_capacity(path.len() + 1);
                p.push(seg.clone());
                p.extend(path.iter().cloned());
                VarId::Aux { path: p }
            }
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Input { rel, tuple } => {
                write!(f, "{rel}(")?;
                for (k, i) in tuple.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{i}")?;
                }
                write!(f, ")")
            }
            VarId::Aux { path } => {
                for (k, seg) in path.iter().enumerate() {
                    if k > 0 {
                        write!(f, ".")?;
                    }
                    write!(f, "{}", seg.tag)?;
                    if !seg.dom.is_empty() || !seg.par.is_empty() {
                        write!(f, "[")?;
                        let mut first = true;
                        for d in &seg.dom {
                            if !first {
                                write!(f, ",")?;
                            }
                            write!(f, "{d}")?;
                            first = false;
                        }
                        for p in &seg.par {
                            if !first {
                                write!(f, ";")?;
                            } else {
                                write!(f, ";")?;
                            }
                            write!(f, "{p}")?;
                            first = false;
                        }
                        write!(f, "]")?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Le,
    Eq,
}

/// A single row `sum coeffs · vars  rel  rhs`. Zero coefficients are never
/// stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<VarId, Rational>,
    pub rel: Rel,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn new(terms: impl IntoIterator<Item = (VarId, Rational)>, rel: Rel, rhs: Rational) -> Self {
        let mut coeffs: BTreeMap<VarId, Rational> = BTreeMap::new();
        for (v, c) in terms {
            let entry = coeffs.entry(v).or_insert_with(Rational::zero);
            *entry += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        LinearConstraint { coeffs, rel, rhs }
    }

    pub fn le(terms: impl IntoIterator<Item = (VarId, Rational)>, rhs: Rational) -> Self {
        Self::new(terms, Rel::Le, rhs)
    }

    pub fn eq(terms: impl IntoIterator<Item = (VarId, Rational)>, rhs: Rational) -> Self {
        Self::new(terms, Rel::Eq, rhs)
    }

    /// Negated-LHS copy, used when splitting an equality into two ≤ rows.
    fn negated(&self) -> LinearConstraint {
        LinearConstraint {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c.clone())).collect(),
            rel: Rel::Le,
            rhs: -self.rhs.clone(),
        }
    }

    pub fn satisfied_by(&self, point: &Assignment) -> bool {
        let mut lhs = Rational::zero();
        for (v, c) in &self.coeffs {
            match point.0.get(v) {
                Some(x) => lhs += c * x,
                None => return false,
            }
        }
        match self.rel {
            Rel::Le => lhs <= self.rhs,
            Rel::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelSym {
    pub name: String,
    pub arity: usize,
}

impl RelSym {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        RelSym { name: name.into(), arity }
    }
}

/// A polytope lift: input variables are all relation atoms over `[n]`,
/// auxiliary variables are explicit, and constraints form a multiset
/// (duplicates are meaningful for the reindexing construction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub n: usize,
    pub vocabulary: Vec<RelSym>,
    pub aux_vars: BTreeSet<VarId>,
    pub constraints: Vec<LinearConstraint>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("variable {0} is not an input over the vocabulary nor a declared auxiliary")]
    UnknownVariable(String),
    #[error("input {0} has an index outside [n]")]
    IndexOutOfRange(String),
    #[error("assignment fixes {0}, which does not occur in the LP")]
    AssignUnknown(String),
    #[error("n must be at least 1")]
    BadN,
}

impl LinearProgram {
    pub fn new(n: usize, vocabulary: Vec<RelSym>) -> Self {
        LinearProgram { n, vocabulary, aux_vars: BTreeSet::new(), constraints: Vec::new() }
    }

    pub fn arity_of(&self, rel: &str) -> Option<usize> {
        self.vocabulary.iter().find(|r| r.name == rel).map(|r| r.arity)
    }

    /// Checks the variable-scoping invariant: every variable in every
    /// constraint is either a vocabulary atom with indices in `[n]` or a
    /// declared auxiliary.
    pub fn validate(&self) -> Result<(), LpError> {
        if self.n == 0 {
            return Err(LpError::BadN);
        }
        for c in &self.constraints {
            for v in c.coeffs.keys() {
                match v {
                    VarId::Input { rel, tuple } => {
                        let arity = self
                            .arity_of(rel)
                            .ok_or_else(|| LpError::UnknownVariable(v.to_string()))?;
                        if tuple.len() != arity {
                            return Err(LpError::UnknownVariable(v.to_string()));
                        }
                        if tuple.iter().any(|&i| i < 1 || i > self.n) {
                            return Err(LpError::IndexOutOfRange(v.to_string()));
                        }
                    }
                    VarId::Aux { .. } => {
                        if !self.aux_vars.contains(v) {
                            return Err(LpError::UnknownVariable(v.to_string()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// All input atoms over the vocabulary, in lexicographic tuple order.
    pub fn all_input_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for rel in &self.vocabulary {
            for tuple in all_tuples(self.n, rel.arity) {
                out.push(VarId::input(rel.name.clone(), tuple));
            }
        }
        out
    }

    /// Distinct variables occurring in at least one constraint.
    pub fn occurring_vars(&self) -> BTreeSet<VarId> {
        let mut set = BTreeSet::new();
        for c in &self.constraints {
            for v in c.coeffs.keys() {
                set.insert(v.clone());
            }
        }
        set
    }
}

/// All tuples in `[n]^k`, lexicographic.
pub fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for i in 1..=n {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// All distinct-entry tuples in `[n]^k` for `k ≤ n`; for `k > n` the first
/// `n` entries are distinct and the rest repeat the `n`-th entry.
pub fn distinct_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return distinct_tuples(n, n)
            .into_iter()
            .map(|mut t| {
                let last = t[n - 1];
                t.extend(std::iter::repeat(last).take(k - n));
                t
            })
            .collect();
    }
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for i in 1..=n {
                if !t.contains(&i) {
                    let mut t2 = t.clone();
                    t2.push(i);
                    next.push(t2);
                }
            }
        }
        out = next;
    }
    out
}

/// Partial map from variables to rational values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment(pub BTreeMap<VarId, Rational>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn set(&mut self, v: VarId, x: Rational) {
        self.0.insert(v, x);
    }

    pub fn get(&self, v: &VarId) -> Option<&Rational> {
        self.0.get(v)
    }
}

impl FromIterator<(VarId, Rational)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, Rational)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// Size measure `(u+1)·v·b`: `u` distinct occurring variables, `v` rows
/// after splitting equalities into two inequalities, `b` the largest
/// per-entry bit cost over all coefficients and right-hand sides.
pub fn lp_size(lp: &LinearProgram) -> u64 {
    let u = lp.occurring_vars().len() as u64;
    let mut v: u64 = 0;
    let mut b: u64 = 0;
    for c in &lp.constraints {
        v += match c.rel {
            Rel::Le => 1,
            Rel::Eq => 2,
        };
        for coef in c.coeffs.values() {
            b = b.max(rational_bits(coef));
        }
        b = b.max(rational_bits(&c.rhs));
    }
    if v == 0 {
        return 0;
    }
    (u + 1) * v * b
}

/// Eliminates the assigned variables by folding their values into the
/// right-hand sides. Constant-only rows (possibly `0 ≤ 0`) are retained.
pub fn substitute(lp: &LinearProgram, a: &Assignment) -> Result<LinearProgram, LpError> {
    for v in a.0.keys() {
        let known = match v {
            VarId::Input { rel, tuple } => lp.arity_of(rel).is_some_and(|ar| {
                ar == tuple.len() && tuple.iter().all(|&i| i >= 1 && i <= lp.n)
            }),
            VarId::Aux { .. } => lp.aux_vars.contains(v),
        };
        if !known {
            return Err(LpError::AssignUnknown(v.to_string()));
        }
    }
    let mut out = lp.clone();
    for v in a.0.keys() {
        out.aux_vars.remove(v);
    }
    for c in &mut out.constraints {
        for (v, x) in &a.0 {
            if let Some(coef) = c.coeffs.remove(v) {
                c.rhs -= coef * x;
            }
        }
    }
    Ok(out)
}

/// Splits equalities into paired inequalities and drops nothing else;
/// coefficient maps are already ordered and zero-free by construction.
pub fn canonicalize(lp: &LinearProgram) -> LinearProgram {
    let mut out = lp.clone();
    let mut rows = Vec::with_capacity(out.constraints.len());
    for c in out.constraints.drain(..) {
        match c.rel {
            Rel::Le => rows.push(c),
            Rel::Eq => {
                let neg = c.negated();
                rows.push(LinearConstraint { rel: Rel::Le, ..c });
                rows.push(neg);
            }
        }
    }
    out.constraints = rows;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    fn x() -> VarId {
        VarId::input("E", vec![1, 2])
    }

    fn voc() -> Vec<RelSym> {
        vec![RelSym::new("E", 2)]
    }

    #[test]
    fn size_of_empty_constraint_list_is_zero() {
        let lp = LinearProgram::new(2, voc());
        assert_eq!(lp_size(&lp), 0);
    }

    #[test]
    fn size_of_single_row() {
        let mut lp = LinearProgram::new(2, voc());
        lp.constraints.push(LinearConstraint::le([(x(), rat_int(3))], rat_int(5)));
        assert_eq!(lp_size(&lp), 6);
    }

    #[test]
    fn size_of_and_gate_lp() {
        let lp = crate::gadgets::gate_lp(crate::circuit::GateKind::And, 2).unwrap().lp;
        assert_eq!(lp_size(&lp), 36);
    }

    #[test]
    fn substitute_folds_constants() {
        let mut lp = LinearProgram::new(2, voc());
        lp.constraints.push(LinearConstraint::le([(x(), rat_int(1))], rat_int(1)));
        let a: Assignment = [(x(), rat_int(1))].into_iter().collect();
        let out = substitute(&lp, &a).unwrap();
        assert_eq!(out.constraints.len(), 1);
        assert!(out.constraints[0].coeffs.is_empty());
        assert_eq!(out.constraints[0].rhs, rat_int(0));
    }

    #[test]
    fn substitute_unknown_variable_errors() {
        let lp = LinearProgram::new(2, voc());
        let ghost = VarId::aux1("g", vec![], vec![]);
        let a: Assignment = [(ghost, rat_int(1))].into_iter().collect();
        assert!(matches!(substitute(&lp, &a), Err(LpError::AssignUnknown(_))));
    }

    #[test]
    fn canonicalize_splits_equalities() {
        let mut lp = LinearProgram::new(2, voc());
        lp.constraints.push(LinearConstraint::eq([(x(), rat_int(1))], rat_int(1)));
        let out = canonicalize(&lp);
        assert_eq!(out.constraints.len(), 2);
        assert_eq!(out.constraints[0], LinearConstraint::le([(x(), rat_int(1))], rat_int(1)));
        assert_eq!(out.constraints[1], LinearConstraint::le([(x(), rat_int(-1))], rat_int(-1)));
    }

    #[test]
    fn constraint_ctor_drops_zero_terms() {
        let c = LinearConstraint::le([(x(), rat_int(0)), (x(), rat_int(0))], rat_int(1));
        assert!(c.coeffs.is_empty());
        let c2 = LinearConstraint::le([(x(), rat_int(2)), (x(), rat_int(-2))], rat_int(1));
        assert!(c2.coeffs.is_empty());
    }

    #[test]
    fn canonicalize_is_idempotent_on_samples() {
        let mut lp = LinearProgram::new(2, voc());
        lp.constraints.push(LinearConstraint::eq([(x(), rat_int(1))], rat_int(1)));
        lp.constraints.push(LinearConstraint::le([(x(), rat_int(2))], rat_int(3)));
        let once = canonicalize(&lp);
        assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn all_input_vars_enumerates_tuples() {
        let lp = LinearProgram::new(2, voc());
        let vars = lp.all_input_vars();
        assert_eq!(vars.len(), 4);
        assert_eq!(vars[0], VarId::input("E", vec![1, 1]));
        assert_eq!(vars[3], VarId::input("E", vec![2, 2]));
        let lp3 = LinearProgram::new(3, voc());
        assert_eq!(lp3.all_input_vars().len(), 9);
    }
}
