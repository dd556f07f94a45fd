//! Randomized invariants over the LP data model, the circuit IR, and the
//! solver.

use std::collections::BTreeMap;

use proptest::prelude::*;

use symlift::circuit::{any_edge_spec, eliminate_thresholds, materialize};
use symlift::lp::{
    canonicalize, lp_size, substitute, Assignment, LinearConstraint, LinearProgram, Rel, RelSym,
    VarId,
};
use symlift::rational::rat_int;
use symlift::solver::{self, Sense, SolveStatus};
use symlift::symmetry::Permutation;

fn var_pool(n: usize) -> Vec<VarId> {
    let mut pool: Vec<VarId> = LinearProgram::new(n, vec![RelSym::new("E", 2)]).all_input_vars();
    for i in 0..3 {
        pool.push(VarId::aux1("a", vec![], vec![i]));
    }
    pool
}

prop_compose! {
    fn arb_row(n: usize)(
        picks in prop::collection::vec((0usize..7, -3i64..=3), 1..4),
        eq in prop::bool::ANY,
        rhs in -4i64..=4,
    ) -> LinearConstraint {
        let pool = var_pool(n);
        let rel = if eq { Rel::Eq } else { Rel::Le };
        LinearConstraint::new(
            picks.into_iter().map(|(i, c)| (pool[i % pool.len()].clone(), rat_int(c))),
            rel,
            rat_int(rhs),
        )
    }
}

prop_compose! {
    fn arb_lp()(n in 1usize..=2)(
        rows in prop::collection::vec(arb_row(n), 0..6),
        n in Just(n),
    ) -> LinearProgram {
        let mut lp = LinearProgram::new(n, vec![RelSym::new("E", 2)]);
        for i in 0..3 {
            lp.aux_vars.insert(VarId::aux1("a", vec![], vec![i]));
        }
        lp.constraints = rows;
        lp
    }
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(lp in arb_lp()) {
        let once = canonicalize(&lp);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn lp_size_ignores_row_order(lp in arb_lp()) {
        let mut reversed = lp.clone();
        reversed.constraints.reverse();
        prop_assert_eq!(lp_size(&lp), lp_size(&reversed));
        let mut rotated = lp.clone();
        if !rotated.constraints.is_empty() {
            rotated.constraints.rotate_left(1);
        }
        prop_assert_eq!(lp_size(&lp), lp_size(&rotated));
    }

    #[test]
    fn substitute_agrees_with_pinning(lp in arb_lp(), bits in prop::collection::vec(prop::bool::ANY, 9)) {
        // Fix every input atom to a 0/1 value, once by substitution and
        // once by adjoined equality rows; feasibility must agree.
        let inputs = lp.all_input_vars();
        let a: Assignment = inputs
            .iter()
            .zip(&bits)
            .map(|(v, &b)| (v.clone(), rat_int(b as i64)))
            .collect();
        let folded = substitute(&lp, &a).unwrap();
        let mut pinned = lp.clone();
        for (v, x) in &a.0 {
            pinned
                .constraints
                .push(LinearConstraint::eq([(v.clone(), rat_int(1))], x.clone()));
        }
        prop_assert_eq!(solver::feasible(&folded), solver::feasible(&pinned));
    }

    #[test]
    fn optimum_point_satisfies_all_rows(lp in arb_lp(), maximize in prop::bool::ANY) {
        // Box every variable so the region is bounded.
        let mut boxed = lp.clone();
        let pool = var_pool(lp.n);
        for v in &pool {
            boxed.constraints.push(LinearConstraint::le([(v.clone(), rat_int(1))], rat_int(2)));
            boxed.constraints.push(LinearConstraint::le([(v.clone(), rat_int(-1))], rat_int(2)));
        }
        let mut obj = BTreeMap::new();
        obj.insert(pool[0].clone(), rat_int(1));
        obj.insert(pool[1].clone(), rat_int(-2));
        let sense = if maximize { Sense::Max } else { Sense::Min };
        match solver::optimize(&boxed, &obj, sense) {
            SolveStatus::Optimal { point, .. } => {
                for c in &boxed.constraints {
                    prop_assert!(c.satisfied_by(&point));
                }
            }
            SolveStatus::Infeasible => {}
            SolveStatus::Unbounded { .. } => prop_assert!(false, "boxed LP cannot be unbounded"),
        }
    }

    #[test]
    fn symmetric_circuit_evaluation_commutes_with_permutation(
        bits in 0u32..512,
        perm_index in 0usize..6,
    ) {
        let c = materialize(&any_edge_spec(), 3).unwrap();
        let pi = &Permutation::all(3)[perm_index];
        let x: BTreeMap<VarId, bool> = c
            .input_vars()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, bits >> i & 1 == 1))
            .collect();
        let permuted: BTreeMap<VarId, bool> = x
            .iter()
            .map(|(v, &b)| {
                let VarId::Input { rel, tuple } = v else { unreachable!() };
                (VarId::input(rel.clone(), pi.apply_tuple(tuple)), b)
            })
            .collect();
        prop_assert_eq!(c.evaluate(&x).unwrap(), c.evaluate(&permuted).unwrap());
    }

    #[test]
    fn threshold_rewrite_preserves_evaluation(bits in 0u32..16, k in 0u64..=4) {
        let spec = symlift::circuit::CircuitSpec {
            vocabulary: vec![RelSym::new("E", 2)],
            families: vec![
                symlift::circuit::GateFamily {
                    name: "inp".into(),
                    arity: 2,
                    kind: symlift::circuit::GateKind::Input { rel: "E".into() },
                    wiring: vec![],
                },
                symlift::circuit::GateFamily {
                    name: "th".into(),
                    arity: 0,
                    kind: symlift::circuit::GateKind::Th { k },
                    wiring: vec![symlift::circuit::WiringPattern {
                        target: "inp".into(),
                        pattern: vec![
                            symlift::circuit::PatternSlot::Star(1),
                            symlift::circuit::PatternSlot::Star(2),
                        ],
                        all_tuples: true,
                    }],
                },
            ],
            output_family: "th".into(),
            output_tuple: vec![],
        };
        let c = materialize(&spec, 2).unwrap();
        let rewritten = eliminate_thresholds(&c);
        let x: BTreeMap<VarId, bool> = c
            .input_vars()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, bits >> i & 1 == 1))
            .collect();
        prop_assert_eq!(c.evaluate(&x).unwrap(), rewritten.evaluate(&x).unwrap());
    }
}
