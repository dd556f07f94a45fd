//! Symmetric Boolean threshold circuits.
//!
//! Circuits are specified as *gate families*: a family of name `F` and
//! index arity `a` materializes into one gate per tuple in `[n]^a`, wired
//! by index patterns. This makes the Sym_n action explicit: π maps gate
//! `(F, s)` to `(F, π·s)`, and the circuit is symmetric by construction.
//! Raw (possibly asymmetric) DAGs are expressible with arity-0 families
//! and constant pattern slots; symmetry is then a property to verify, not
//! an assumption.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lp::{all_tuples, distinct_tuples, RelSym, VarId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GateKind {
    Input { rel: String },
    Not,
    And,
    Or,
    Th { k: u64 },
    Ex { t: u64 },
}

/// One slot of a wiring pattern: an index copied from the source gate's
/// tuple, a universally quantified fresh index, or a fixed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternSlot {
    /// `Bound(i)`: the i-th (0-based) index of the source gate.
    Bound(usize),
    /// `Star(j)`: fresh index label j; equal labels take equal values.
    Star(usize),
    /// A fixed element of `[n]` (raw-gate wiring).
    Const(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WiringPattern {
    pub target: String,
    pub pattern: Vec<PatternSlot>,
    /// Star labels range over all tuples when true, distinct tuples when
    /// false.
    pub all_tuples: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateFamily {
    pub name: String,
    pub arity: usize,
    pub kind: GateKind,
    pub wiring: Vec<WiringPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSpec {
    pub vocabulary: Vec<RelSym>,
    pub families: Vec<GateFamily>,
    pub output_family: String,
    pub output_tuple: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GateId {
    pub family: String,
    pub tuple: Vec<usize>,
}

impl GateId {
    pub fn new(family: impl Into<String>, tuple: Vec<usize>) -> Self {
        GateId { family: family.into(), tuple }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub children: BTreeSet<GateId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub n: usize,
    pub vocabulary: Vec<RelSym>,
    pub gates: BTreeMap<GateId, Gate>,
    pub output: GateId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("n must be at least 1")]
    BadN,
    #[error("wiring of family {0} targets unknown family {1}")]
    UnknownTarget(String, String),
    #[error("family reference graph has a cycle through {0}")]
    CyclicFamilies(String),
    #[error("pattern for target {target} has length {got}, expected {want}")]
    PatternArity { target: String, got: usize, want: usize },
    #[error("bound index {0} exceeds source arity {1}")]
    BadBound(usize, usize),
    #[error("constant index {0} outside [n]")]
    BadConst(usize),
    #[error("input family {0} must have arity {1} and no wiring")]
    BadInputFamily(String, usize),
    #[error("input family {0} names unknown relation {1}")]
    UnknownRelation(String, String),
    #[error("gate {0:?} is a NOT with fan-in {1}, expected 1")]
    NotFanIn(GateId, usize),
    #[error("non-input gate {0:?} has empty fan-in")]
    EmptyFanIn(GateId),
    #[error("threshold gate {0:?} has k = {1} above fan-in {2}")]
    ThresholdTooHigh(GateId, u64, usize),
    #[error("exact-count gate {0:?} has t = {1} above fan-in {2}")]
    ExactTooHigh(GateId, u64, usize),
    #[error("output family {0} not defined")]
    MissingOutput(String),
    #[error("output tuple length {0} does not match family arity {1}")]
    OutputArity(usize, usize),
    #[error("duplicate family name {0}")]
    DuplicateFamily(String),
    #[error("missing input value for {0}")]
    MissingInput(String),
}

/// Expands a spec into a concrete circuit over `[n]`.
pub fn materialize(spec: &CircuitSpec, n: usize) -> Result<Circuit, CircuitError> {
    if n == 0 {
        return Err(CircuitError::BadN);
    }
    let mut by_name: BTreeMap<&str, &GateFamily> = BTreeMap::new();
    for f in &spec.families {
        if by_name.insert(&f.name, f).is_some() {
            return Err(CircuitError::DuplicateFamily(f.name.clone()));
        }
    }

    // Static checks: wiring shapes plus acyclicity of the family graph.
    for f in &spec.families {
        if let GateKind::Input { rel } = &f.kind {
            let arity = spec
                .vocabulary
                .iter()
                .find(|r| r.name == *rel)
                .map(|r| r.arity)
                .ok_or_else(|| CircuitError::UnknownRelation(f.name.clone(), rel.clone()))?;
            if f.arity != arity || !f.wiring.is_empty() {
                return Err(CircuitError::BadInputFamily(f.name.clone(), arity));
            }
        }
        for w in &f.wiring {
            let target = by_name
                .get(w.target.as_str())
                .ok_or_else(|| CircuitError::UnknownTarget(f.name.clone(), w.target.clone()))?;
            if w.pattern.len() != target.arity {
                return Err(CircuitError::PatternArity {
                    target: w.target.clone(),
                    got: w.pattern.len(),
                    want: target.arity,
                });
            }
            for slot in &w.pattern {
                match slot {
                    PatternSlot::Bound(i) if *i >= f.arity => {
                        return Err(CircuitError::BadBound(*i, f.arity));
                    }
                    PatternSlot::Const(c) if *c < 1 || *c > n => {
                        return Err(CircuitError::BadConst(*c));
                    }
                    _ => {}
                }
            }
        }
    }
    check_acyclic(spec, &by_name)?;

    let mut gates: BTreeMap<GateId, Gate> = BTreeMap::new();
    for f in &spec.families {
        for tuple in all_tuples(n, f.arity) {
            let mut children = BTreeSet::new();
            for w in &f.wiring {
                expand_pattern(w, &tuple, n, &mut children);
            }
            gates.insert(
                GateId::new(f.name.clone(), tuple),
                Gate { kind: f.kind.clone(), children },
            );
        }
    }

    let out_family = by_name
        .get(spec.output_family.as_str())
        .ok_or_else(|| CircuitError::MissingOutput(spec.output_family.clone()))?;
    if spec.output_tuple.len() != out_family.arity {
        return Err(CircuitError::OutputArity(spec.output_tuple.len(), out_family.arity));
    }
    let output = GateId::new(spec.output_family.clone(), spec.output_tuple.clone());

    let circuit = Circuit { n, vocabulary: spec.vocabulary.clone(), gates, output };
    circuit.validate()?;
    Ok(circuit)
}

fn check_acyclic(
    spec: &CircuitSpec,
    by_name: &BTreeMap<&str, &GateFamily>,
) -> Result<(), CircuitError> {
    // 0 = unseen, 1 = in progress, 2 = done.
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn visit<'a>(
        name: &'a str,
        by_name: &BTreeMap<&'a str, &'a GateFamily>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), CircuitError> {
        match state.get(name) {
            Some(1) => return Err(CircuitError::CyclicFamilies(name.to_string())),
            Some(2) => return Ok(()),
            _ => {}
        }
        state.insert(name, 1);
        for w in &by_name[name].wiring {
            visit(&w.target, by_name, state)?;
        }
        state.insert(name, 2);
        Ok(())
    }
    for f in &spec.families {
        visit(&f.name, by_name, &mut state)?;
    }
    Ok(())
}

fn expand_pattern(w: &WiringPattern, source: &[usize], n: usize, out: &mut BTreeSet<GateId>) {
    let mut labels: Vec<usize> = w
        .pattern
        .iter()
        .filter_map(|s| match s {
            PatternSlot::Star(j) => Some(*j),
            _ => None,
        })
        .collect();
    labels.sort_unstable();
    labels.dedup();
    let assignments =
        if w.all_tuples { all_tuples(n, labels.len()) } else { distinct_tuples(n, labels.len()) };
    for values in assignments {
        let tuple: Vec<usize> = w
            .pattern
            .iter()
            .map(|s| match s {
                PatternSlot::Bound(i) => source[*i],
                PatternSlot::Const(c) => *c,
                PatternSlot::Star(j) => {
                    values[labels.binary_search(j).expect("label collected")]
                }
            })
            .collect();
        out.insert(GateId::new(w.target.clone(), tuple));
    }
}

impl Circuit {
    pub fn validate(&self) -> Result<(), CircuitError> {
        for (id, gate) in &self.gates {
            let fan_in = gate.children.len();
            match &gate.kind {
                GateKind::Input { .. } => continue,
                GateKind::Not if fan_in != 1 => {
                    return Err(CircuitError::NotFanIn(id.clone(), fan_in));
                }
                GateKind::Th { k } if *k as usize > fan_in => {
                    return Err(CircuitError::ThresholdTooHigh(id.clone(), *k, fan_in));
                }
                GateKind::Ex { t } if *t as usize > fan_in => {
                    return Err(CircuitError::ExactTooHigh(id.clone(), *t, fan_in));
                }
                _ => {}
            }
            if fan_in == 0 {
                return Err(CircuitError::EmptyFanIn(id.clone()));
            }
            for c in &gate.children {
                if !self.gates.contains_key(c) {
                    return Err(CircuitError::UnknownTarget(
                        id.family.clone(),
                        c.family.clone(),
                    ));
                }
            }
        }
        if !self.gates.contains_key(&self.output) {
            return Err(CircuitError::MissingOutput(self.output.family.clone()));
        }
        Ok(())
    }

    /// All input atoms the circuit reads.
    pub fn input_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for rel in &self.vocabulary {
            for tuple in all_tuples(self.n, rel.arity) {
                out.push(VarId::input(rel.name.clone(), tuple));
            }
        }
        out
    }

    /// Topological evaluation on a total 0/1 input.
    pub fn evaluate(&self, x: &BTreeMap<VarId, bool>) -> Result<bool, CircuitError> {
        let mut memo: BTreeMap<&GateId, bool> = BTreeMap::new();
        // Iterative DFS; the DAG is validated, so this terminates.
        let mut stack: Vec<&GateId> = vec![&self.output];
        while let Some(&id) = stack.last() {
            if memo.contains_key(id) {
                stack.pop();
                continue;
            }
            let gate = &self.gates[id];
            if let GateKind::Input { rel } = &gate.kind {
                let v = VarId::input(rel.clone(), id.tuple.clone());
                let bit = *x
                    .get(&v)
                    .ok_or_else(|| CircuitError::MissingInput(v.to_string()))?;
                memo.insert(id, bit);
                stack.pop();
                continue;
            }
            let unresolved: Vec<&GateId> =
                gate.children.iter().filter(|c| !memo.contains_key(*c)).collect();
            if !unresolved.is_empty() {
                stack.extend(unresolved);
                continue;
            }
            let ones = gate.children.iter().filter(|c| memo[*c]).count() as u64;
            let fan_in = gate.children.len() as u64;
            let v = match &gate.kind {
                GateKind::Input { .. } => unreachable!(),
                GateKind::Not => ones == 0,
                GateKind::And => ones == fan_in,
                GateKind::Or => ones > 0,
                GateKind::Th { k } => ones >= *k,
                GateKind::Ex { t } => ones == *t,
            };
            memo.insert(id, v);
            stack.pop();
        }
        Ok(memo[&self.output])
    }

    pub fn has_thresholds(&self) -> bool {
        self.gates.values().any(|g| matches!(g.kind, GateKind::Th { .. }))
    }
}

/// Rewrites every k-threshold gate of fan-in m into an OR of exact-count
/// gates EX_t for t = k..m over the same children. The threshold gate's
/// identity is kept for the OR, so references stay valid; the EX gates
/// live in fresh families named `{family}#ex{t}`.
pub fn eliminate_thresholds(c: &Circuit) -> Circuit {
    let mut gates: BTreeMap<GateId, Gate> = BTreeMap::new();
    // Thresholds over the same child set share their exact-count gates
    // (named after the first threshold, in gate-id order, that needs them),
    // so stacked thresholds like TH_1..TH_m over one wire bundle cost m
    // exact-count gadgets instead of m(m+1)/2.
    let mut shared: BTreeMap<(&BTreeSet<GateId>, u64), GateId> = BTreeMap::new();
    for (id, gate) in &c.gates {
        match &gate.kind {
            GateKind::Th { k } => {
                let m = gate.children.len() as u64;
                let mut or_children = BTreeSet::new();
                for t in *k..=m {
                    let ex_id = shared
                        .entry((&gate.children, t))
                        .or_insert_with(|| {
                            GateId::new(format!("{}#ex{}", id.family, t), id.tuple.clone())
                        })
                        .clone();
                    gates.entry(ex_id.clone()).or_insert_with(|| Gate {
                        kind: GateKind::Ex { t },
                        children: gate.children.clone(),
                    });
                    or_children.insert(ex_id);
                }
                gates.insert(id.clone(), Gate { kind: GateKind::Or, children: or_children });
            }
            _ => {
                gates.insert(id.clone(), gate.clone());
            }
        }
    }
    Circuit { n: c.n, vocabulary: c.vocabulary.clone(), gates, output: c.output.clone() }
}

/// The `any_edge` test circuit: an OR over every atom E(i,j).
pub fn any_edge_spec() -> CircuitSpec {
    CircuitSpec {
        vocabulary: vec![RelSym::new("E", 2)],
        families: vec![
            GateFamily {
                name: "inp".into(),
                arity: 2,
                kind: GateKind::Input { rel: "E".into() },
                wiring: vec![],
            },
            GateFamily {
                name: "or".into(),
                arity: 0,
                kind: GateKind::Or,
                wiring: vec![WiringPattern {
                    target: "inp".into(),
                    pattern: vec![PatternSlot::Star(1), PatternSlot::Star(2)],
                    all_tuples: true,
                }],
            },
        ],
        output_family: "or".into(),
        output_tuple: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input_assignment(n: usize, ones: &[(usize, usize)]) -> BTreeMap<VarId, bool> {
        let mut x = BTreeMap::new();
        for tuple in all_tuples(n, 2) {
            let on = ones.contains(&(tuple[0], tuple[1]));
            x.insert(VarId::input("E", tuple), on);
        }
        x
    }

    #[test]
    fn any_edge_materializes_to_five_gates() {
        let c = materialize(&any_edge_spec(), 2).unwrap();
        assert_eq!(c.gates.len(), 5);
        let or = &c.gates[&GateId::new("or", vec![])];
        assert_eq!(or.children.len(), 4);
    }

    #[test]
    fn input_only_spec_has_n_squared_gates() {
        let spec = CircuitSpec {
            vocabulary: vec![RelSym::new("E", 2)],
            families: vec![GateFamily {
                name: "inp".into(),
                arity: 2,
                kind: GateKind::Input { rel: "E".into() },
                wiring: vec![],
            }],
            output_family: "inp".into(),
            output_tuple: vec![1, 1],
        };
        let c = materialize(&spec, 3).unwrap();
        assert_eq!(c.gates.len(), 9);
    }

    #[test]
    fn missing_target_family_errors() {
        let mut spec = any_edge_spec();
        spec.families[1].wiring[0].target = "ghost".into();
        assert!(matches!(materialize(&spec, 2), Err(CircuitError::UnknownTarget(_, _))));
    }

    #[test]
    fn any_edge_rejects_empty_graph() {
        let c = materialize(&any_edge_spec(), 2).unwrap();
        assert!(!c.evaluate(&input_assignment(2, &[])).unwrap());
        assert!(c.evaluate(&input_assignment(2, &[(1, 2)])).unwrap());
    }

    fn tiny_counter(kind: GateKind) -> Circuit {
        // One gate of the requested kind over three arity-0 raw inputs
        // E(1,1), E(1,2), E(2,1).
        let spec = CircuitSpec {
            vocabulary: vec![RelSym::new("E", 2)],
            families: vec![
                GateFamily {
                    name: "inp".into(),
                    arity: 2,
                    kind: GateKind::Input { rel: "E".into() },
                    wiring: vec![],
                },
                GateFamily {
                    name: "top".into(),
                    arity: 0,
                    kind,
                    wiring: [(1, 1), (1, 2), (2, 1)]
                        .iter()
                        .map(|(i, j)| WiringPattern {
                            target: "inp".into(),
                            pattern: vec![PatternSlot::Const(*i), PatternSlot::Const(*j)],
                            all_tuples: true,
                        })
                        .collect(),
                },
            ],
            output_family: "top".into(),
            output_tuple: vec![],
        };
        materialize(&spec, 2).unwrap()
    }

    #[test]
    fn threshold_semantics() {
        let c = tiny_counter(GateKind::Th { k: 2 });
        assert!(c.evaluate(&input_assignment(2, &[(1, 1), (2, 1)])).unwrap());
        assert!(!c.evaluate(&input_assignment(2, &[(1, 2)])).unwrap());
    }

    #[test]
    fn exact_count_semantics() {
        let c = tiny_counter(GateKind::Ex { t: 2 });
        assert!(!c.evaluate(&input_assignment(2, &[(1, 1), (1, 2), (2, 1)])).unwrap());
        assert!(c.evaluate(&input_assignment(2, &[(1, 1), (2, 1)])).unwrap());
    }

    #[test]
    fn threshold_rewrite_matches_quoted_expansion() {
        let c = tiny_counter(GateKind::Th { k: 1 });
        let rewritten = eliminate_thresholds(&c);
        assert!(!rewritten.has_thresholds());
        let or = &rewritten.gates[&GateId::new("top", vec![])];
        assert_eq!(or.kind, GateKind::Or);
        let expected: BTreeSet<GateId> = (1..=3)
            .map(|t| GateId::new(format!("top#ex{t}"), vec![]))
            .collect();
        assert_eq!(or.children, expected);
    }

    #[test]
    fn rewrite_is_identity_without_thresholds() {
        let c = materialize(&any_edge_spec(), 2).unwrap();
        assert_eq!(eliminate_thresholds(&c), c);
    }

    #[test]
    fn threshold_zero_rewrite_is_constant_true() {
        let c = tiny_counter(GateKind::Th { k: 0 });
        let rewritten = eliminate_thresholds(&c);
        for bits in 0..8u32 {
            let ones: Vec<(usize, usize)> = [(1, 1), (1, 2), (2, 1)]
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, p)| *p)
                .collect();
            let x = input_assignment(2, &ones);
            assert!(rewritten.evaluate(&x).unwrap());
            assert_eq!(c.evaluate(&x).unwrap(), rewritten.evaluate(&x).unwrap());
        }
    }
}
