//! Lowering circuits to LP lifts, the per-permutation symmetry witness for
//! compiled lifts, and the subgraph-restriction combinator.
//!
//! Every gate `(F, s)` gets one auxiliary variable `F[s]` boxed in [0, 1]
//! plus kind-specific rows tying it to its children's variables; the
//! output variable is pinned to 1. On a fixed 0/1 input the rows propagate
//! the exact gate values, so the lift is feasible exactly on accepted
//! inputs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuit::{Circuit, GateId, GateKind};
use crate::gadgets::{self, GadgetError};
use crate::lp::{LinearConstraint, LinearProgram, PathSeg, VarId};
use crate::rational::rat_int;
use crate::symmetry::{AuxMap, Permutation, SymmetryError};

#[derive(Debug, Clone)]
pub struct CompiledLift {
    pub lp: LinearProgram,
    pub gate_var: BTreeMap<GateId, VarId>,
    pub circuit: Circuit,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("circuit contains threshold gates; rewrite them to exact counts first")]
    ThresholdPresent,
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error("gate {0} is not fixed by the permutation (its image gate differs)")]
    NotGateSymmetric(String),
    #[error("output gate moves under the permutation")]
    OutputMoves,
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("input variables are not exactly one binary relation over [n]")]
    BadRestrictionShape,
}

fn gate_seg(id: &GateId) -> PathSeg {
    PathSeg::new(id.family.clone(), id.tuple.clone(), vec![])
}

fn gate_var_of(id: &GateId) -> VarId {
    VarId::Aux { path: vec![gate_seg(id)] }
}

fn box_01(lp: &mut LinearProgram, v: &VarId) {
    lp.constraints
        .push(LinearConstraint::le([(v.clone(), rat_int(-1))], rat_int(0)));
    lp.constraints
        .push(LinearConstraint::le([(v.clone(), rat_int(1))], rat_int(1)));
}

/// Lowers a threshold-free circuit to its LP lift.
pub fn compile(c: &Circuit) -> Result<CompiledLift, CompileError> {
    if c.has_thresholds() {
        return Err(CompileError::ThresholdPresent);
    }
    c.validate()?;
    let mut lp = LinearProgram::new(c.n, c.vocabulary.clone());
    let mut gate_var = BTreeMap::new();
    for id in c.gates.keys() {
        let y = gate_var_of(id);
        lp.aux_vars.insert(y.clone());
        gate_var.insert(id.clone(), y);
    }
    for (id, gate) in &c.gates {
        let y = gate_var[id].clone();
        let children: Vec<VarId> = gate.children.iter().map(|cid| gate_var[cid].clone()).collect();
        match &gate.kind {
            GateKind::Input { rel } => {
                box_01(&mut lp, &y);
                lp.constraints.push(LinearConstraint::eq(
                    [
                        (y.clone(), rat_int(1)),
                        (VarId::input(rel.clone(), id.tuple.clone()), rat_int(-1)),
                    ],
                    rat_int(0),
                ));
            }
            GateKind::Not => {
                box_01(&mut lp, &y);
                lp.constraints.push(LinearConstraint::eq(
                    [(y.clone(), rat_int(1)), (children[0].clone(), rat_int(1))],
                    rat_int(1),
                ));
            }
            GateKind::And => {
                box_01(&mut lp, &y);
                let m = children.len() as i64;
                let mut terms = vec![(y.clone(), rat_int(-1))];
                terms.extend(children.iter().map(|v| (v.clone(), rat_int(1))));
                lp.constraints.push(LinearConstraint::le(terms, rat_int(m - 1)));
                for v in &children {
                    lp.constraints.push(LinearConstraint::le(
                        [(y.clone(), rat_int(1)), (v.clone(), rat_int(-1))],
                        rat_int(0),
                    ));
                }
            }
            GateKind::Or => {
                box_01(&mut lp, &y);
                let mut terms = vec![(y.clone(), rat_int(1))];
                terms.extend(children.iter().map(|v| (v.clone(), rat_int(-1))));
                lp.constraints.push(LinearConstraint::le(terms, rat_int(0)));
                for v in &children {
                    lp.constraints.push(LinearConstraint::le(
                        [(v.clone(), rat_int(1)), (y.clone(), rat_int(-1))],
                        rat_int(0),
                    ));
                }
            }
            GateKind::Ex { t } => {
                // ex_gate_into boxes y itself; internals live under the
                // gate's namespace.
                gadgets::ex_gate_into(&mut lp, &[gate_seg(id)], *t, &children, &y)?;
            }
            GateKind::Th { .. } => unreachable!("checked above"),
        }
    }
    lp.constraints.push(LinearConstraint::eq(
        [(gate_var[&c.output].clone(), rat_int(1))],
        rat_int(1),
    ));
    Ok(CompiledLift { lp, gate_var, circuit: c.clone() })
}

/// Feasibility of the compiled lift on a 0/1 input.
pub fn feasible_on(cl: &CompiledLift, x: &BTreeMap<VarId, bool>) -> bool {
    let a: crate::lp::Assignment = x
        .iter()
        .map(|(v, &b)| (v.clone(), rat_int(b as i64)))
        .collect();
    let fixed = crate::lp::substitute(&cl.lp, &a).expect("inputs belong to the lift");
    crate::solver::feasible(&fixed)
}

/// The aux bijection certifying the compiled lift's invariance under π,
/// built gate by gate: the variable of gate `(F, s)` maps to that of
/// `(F, π·s)`, and each counting gadget's slot-indexed internals follow the
/// induced permutation of the gate's (sorted) child list.
pub fn symmetry_witness(cl: &CompiledLift, pi: &Permutation) -> Result<AuxMap, CompileError> {
    let c = &cl.circuit;
    if pi.n() != c.n {
        return Err(SymmetryError::DegreeMismatch(pi.n(), c.n).into());
    }
    // The gate map and, per gate, the child-slot permutation τ (1-based).
    let mut tau: BTreeMap<&GateId, Vec<usize>> = BTreeMap::new();
    let image_of = |id: &GateId| GateId::new(id.family.clone(), pi.apply_tuple(&id.tuple));
    for (id, gate) in &c.gates {
        let img_id = image_of(id);
        let img = c
            .gates
            .get(&img_id)
            .ok_or_else(|| CompileError::NotGateSymmetric(format!("{}[{:?}]", id.family, id.tuple)))?;
        if img.kind != gate.kind {
            return Err(CompileError::NotGateSymmetric(format!("{}[{:?}]", id.family, id.tuple)));
        }
        let img_children: Vec<&GateId> = img.children.iter().collect();
        let mut slots = Vec::with_capacity(gate.children.len());
        for child in &gate.children {
            let target = image_of(child);
            let pos = img_children
                .binary_search_by(|probe| (*probe).cmp(&&target))
                .map_err(|_| {
                    CompileError::NotGateSymmetric(format!("{}[{:?}]", id.family, id.tuple))
                })?;
            slots.push(pos + 1);
        }
        tau.insert(id, slots);
    }
    if image_of(&c.output) != c.output {
        return Err(CompileError::OutputMoves);
    }

    let mut sigma = BTreeMap::new();
    for v in &cl.lp.aux_vars {
        let VarId::Aux { path } = v else { unreachable!() };
        let id = GateId::new(path[0].tag.clone(), path[0].dom.clone());
        let img_seg = PathSeg::new(id.family.clone(), pi.apply_tuple(&id.tuple), vec![]);
        let mut new_path = vec![img_seg];
        // Gadget internals: only the slot index inside z-variables follows
        // the child permutation; slice numbers, pad slots, and bit indices
        // are position-fixed.
        let fan_in = c.gates[&id].children.len();
        for seg in &path[1..] {
            if seg.tag == "z" {
                let i = *seg.par.last().unwrap() as usize;
                let mapped = if i <= fan_in { tau[&id][i - 1] } else { i };
                let mut par = seg.par.clone();
                *par.last_mut().unwrap() = mapped as i64;
                new_path.push(PathSeg::new(seg.tag.clone(), seg.dom.clone(), par));
            } else {
                new_path.push(seg.clone());
            }
        }
        sigma.insert(v.clone(), VarId::Aux { path: new_path });
    }
    Ok(AuxMap(sigma))
}

/// Wraps a lift over edge variables y_{ij} into one over graph inputs
/// x_{ij}: the y's become auxiliaries constrained by 0 ≤ y_{ij} ≤ x_{ij},
/// so the new lift accepts x exactly when some accepted y is
/// coordinatewise below x.
pub fn subgraph_restriction_lift(p: &LinearProgram) -> Result<LinearProgram, CompileError> {
    if p.vocabulary.len() != 1 || p.vocabulary[0].arity != 2 {
        return Err(CompileError::BadRestrictionShape);
    }
    let rel = p.vocabulary[0].name.clone();
    let n = p.n;
    let y_of = |tuple: &[usize]| VarId::aux1("y", tuple.to_vec(), vec![]);
    let map = |v: &VarId| match v {
        VarId::Input { tuple, .. } => y_of(tuple),
        VarId::Aux { .. } => v.prefixed(&PathSeg::new("p", vec![], vec![])),
    };
    let mut out = LinearProgram::new(n, p.vocabulary.clone());
    out.aux_vars = p.aux_vars.iter().map(&map).collect();
    for tuple in crate::lp::all_tuples(n, 2) {
        out.aux_vars.insert(y_of(&tuple));
    }
    for c in &p.constraints {
        out.constraints.push(LinearConstraint::new(
            c.coeffs.iter().map(|(v, a)| (map(v), a.clone())),
            c.rel,
            c.rhs.clone(),
        ));
    }
    for tuple in crate::lp::all_tuples(n, 2) {
        let y = y_of(&tuple);
        let x = VarId::input(rel.clone(), tuple);
        out.constraints
            .push(LinearConstraint::le([(y.clone(), rat_int(-1))], rat_int(0)));
        out.constraints
            .push(LinearConstraint::le([(y, rat_int(1)), (x, rat_int(-1))], rat_int(0)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        any_edge_spec, eliminate_thresholds, materialize, CircuitSpec, GateFamily, PatternSlot,
        WiringPattern,
    };
    use crate::lp::{all_tuples, RelSym};
    use crate::symmetry::is_invariant;

    fn graph_input(n: usize, bits: u32) -> BTreeMap<VarId, bool> {
        all_tuples(n, 2)
            .into_iter()
            .enumerate()
            .map(|(i, t)| (VarId::input("E", t), bits >> i & 1 == 1))
            .collect()
    }

    fn exhaustively_equivalent(c: &Circuit) {
        let cl = compile(c).unwrap();
        let n2 = c.n * c.n;
        for bits in 0..1u32 << n2 {
            let x = graph_input(c.n, bits);
            assert_eq!(
                feasible_on(&cl, &x),
                c.evaluate(&x).unwrap(),
                "n={} bits={bits:b}",
                c.n
            );
        }
    }

    fn single_edge_circuit(n: usize) -> Circuit {
        let spec = CircuitSpec {
            vocabulary: vec![RelSym::new("E", 2)],
            families: vec![GateFamily {
                name: "inp".into(),
                arity: 2,
                kind: GateKind::Input { rel: "E".into() },
                wiring: vec![],
            }],
            output_family: "inp".into(),
            output_tuple: vec![1, 2],
        };
        materialize(&spec, n).unwrap()
    }

    #[test]
    fn single_input_circuit_matches_edge() {
        exhaustively_equivalent(&single_edge_circuit(2));
    }

    #[test]
    fn any_edge_feasible_on_fifteen_graphs() {
        let c = materialize(&any_edge_spec(), 2).unwrap();
        let cl = compile(&c).unwrap();
        let count = (0..16u32).filter(|&b| feasible_on(&cl, &graph_input(2, b))).count();
        assert_eq!(count, 15);
    }

    fn at_least_k_edges(n: usize, k: u64) -> Circuit {
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
                    name: "th".into(),
                    arity: 0,
                    kind: GateKind::Th { k },
                    wiring: vec![WiringPattern {
                        target: "inp".into(),
                        pattern: vec![PatternSlot::Star(1), PatternSlot::Star(2)],
                        all_tuples: true,
                    }],
                },
            ],
            output_family: "th".into(),
            output_tuple: vec![],
        };
        materialize(&spec, n).unwrap()
    }

    #[test]
    fn threshold_circuit_compiles_after_rewrite() {
        let c = at_least_k_edges(2, 2);
        assert_eq!(compile(&c).unwrap_err(), CompileError::ThresholdPresent);
        exhaustively_equivalent(&eliminate_thresholds(&c));
    }

    #[test]
    fn and_or_not_only_lift_has_no_gadget_auxiliaries() {
        let c = materialize(&any_edge_spec(), 3).unwrap();
        let cl = compile(&c).unwrap();
        assert!(cl.lp.aux_vars.iter().all(|v| match v {
            VarId::Aux { path } => path.len() == 1,
            _ => false,
        }));
    }

    #[test]
    fn witness_identity_is_identity() {
        let c = materialize(&any_edge_spec(), 2).unwrap();
        let cl = compile(&c).unwrap();
        let sigma = symmetry_witness(&cl, &Permutation::identity(2)).unwrap();
        assert!(sigma.is_identity());
    }

    #[test]
    fn witness_certifies_invariance() {
        for n in [2usize, 3] {
            for c in [
                materialize(&any_edge_spec(), n).unwrap(),
                eliminate_thresholds(&at_least_k_edges(n, 2)),
            ] {
                let cl = compile(&c).unwrap();
                for pi in Permutation::all(n) {
                    let sigma = symmetry_witness(&cl, &pi).unwrap();
                    assert!(is_invariant(&cl.lp, &pi, &sigma).unwrap(), "n={n} pi={pi:?}");
                }
            }
        }
    }

    #[test]
    fn witness_rejects_asymmetric_circuit() {
        let c = single_edge_circuit(2);
        let cl = compile(&c).unwrap();
        // The output gate inp[1,2] moves under the transposition.
        let err = symmetry_witness(&cl, &Permutation::transposition(2, 1, 2)).unwrap_err();
        assert_eq!(err, CompileError::OutputMoves);
    }

    fn y_cube(n: usize, pinned: bool) -> LinearProgram {
        let mut lp = LinearProgram::new(n, vec![RelSym::new("E", 2)]);
        for t in all_tuples(n, 2) {
            let y = VarId::input("E", t);
            lp.constraints
                .push(LinearConstraint::le([(y.clone(), rat_int(-1))], rat_int(0)));
            lp.constraints
                .push(LinearConstraint::le([(y.clone(), rat_int(1))], rat_int(1)));
            if pinned {
                lp.constraints.push(LinearConstraint::eq([(y, rat_int(1))], rat_int(1)));
            }
        }
        lp
    }

    #[test]
    fn restriction_of_pinned_point_accepts_only_complete_graph() {
        let q = subgraph_restriction_lift(&y_cube(2, true)).unwrap();
        for bits in 0..16u32 {
            let a: crate::lp::Assignment = graph_input(2, bits)
                .into_iter()
                .map(|(v, b)| (v, rat_int(b as i64)))
                .collect();
            let feas = crate::solver::feasible(&crate::lp::substitute(&q, &a).unwrap());
            assert_eq!(feas, bits == 15, "bits={bits:b}");
        }
    }

    #[test]
    fn restriction_of_cube_accepts_everything() {
        let q = subgraph_restriction_lift(&y_cube(2, false)).unwrap();
        for bits in 0..16u32 {
            let a: crate::lp::Assignment = graph_input(2, bits)
                .into_iter()
                .map(|(v, b)| (v, rat_int(b as i64)))
                .collect();
            assert!(crate::solver::feasible(&crate::lp::substitute(&q, &a).unwrap()));
        }
    }

    #[test]
    fn restriction_of_infeasible_is_infeasible() {
        let mut p = y_cube(2, false);
        p.constraints.push(LinearConstraint::le(
            [(VarId::input("E", vec![1, 1]), rat_int(1))],
            rat_int(-1),
        ));
        let q = subgraph_restriction_lift(&p).unwrap();
        for bits in [0u32, 15] {
            let a: crate::lp::Assignment = graph_input(2, bits)
                .into_iter()
                .map(|(v, b)| (v, rat_int(b as i64)))
                .collect();
            assert!(!crate::solver::feasible(&crate::lp::substitute(&q, &a).unwrap()));
        }
    }

    #[test]
    fn restriction_rejects_bad_shape() {
        let lp = LinearProgram::new(2, vec![RelSym::new("U", 1)]);
        assert_eq!(
            subgraph_restriction_lift(&lp).unwrap_err(),
            CompileError::BadRestrictionShape
        );
    }
}
