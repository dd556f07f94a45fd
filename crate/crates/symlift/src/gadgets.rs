//! LP building blocks: Hamming-slice polytopes, parity-polytope lifts,
//! truncated parity lifts, the bit-extraction cascade, the exact-counting
//! gate LP, and the AND/OR/NOT gate LPs.
//!
//! Constructors append rows to a caller-supplied `LinearProgram`, rooting
//! all auxiliary variables at a caller-supplied path prefix so nested
//! instances never collide. The `*_lp` wrappers build standalone programs.

use num_traits::One;
use thiserror::Error;

use crate::circuit::GateKind;
use crate::lp::{LinearConstraint, LinearProgram, PathSeg, VarId};
use crate::rational::{bit_len, rat_int, Rational};

/// A coordinate of a membership row: a variable, a flipped variable
/// (`1 − v`), or the constant one. Replication is expressed by passing
/// the same variable in several slots; constants are folded into the
/// right-hand sides rather than materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Var(VarId),
    OneMinus(VarId),
    One,
}

impl Slot {
    /// The (coefficient-on-variable, constant) decomposition of the slot
    /// value: `Var v` is `v`, `OneMinus v` is `1 − v`, `One` is `1`.
    fn parts(&self) -> (Option<(&VarId, i64)>, i64) {
        match self {
            Slot::Var(v) => (Some((v, 1)), 0),
            Slot::OneMinus(v) => (Some((v, -1)), 1),
            Slot::One => (None, 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GadgetOutput {
    pub lp: LinearProgram,
    pub xs: Vec<VarId>,
    pub y: Option<VarId>,
    /// Bit variables, least significant first (bit extraction and the
    /// exact-counting gate).
    pub bits: Vec<VarId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("slice weight t = {t} exceeds the input count {n}")]
    SliceTooHigh { t: u64, n: usize },
    #[error("truncation q = {q} outside 0..|{n}|−1")]
    TruncationOutOfRange { q: u32, n: usize },
    #[error("NOT gate takes exactly one input, got {0}")]
    NotArity(usize),
    #[error("gadget needs at least one input")]
    Empty,
    #[error("gate kind has no standalone LP")]
    NoGateLp,
}

fn box_01(lp: &mut LinearProgram, v: &VarId) {
    lp.constraints
        .push(LinearConstraint::le([(v.clone(), rat_int(-1))], rat_int(0)));
    lp.constraints
        .push(LinearConstraint::le([(v.clone(), rat_int(1))], rat_int(1)));
}

fn aux(lp: &mut LinearProgram, prefix: &[PathSeg], seg: PathSeg) -> VarId {
    let mut path = prefix.to_vec();
    path.push(seg);
    let v = VarId::aux(path);
    lp.aux_vars.insert(v.clone());
    v
}

/// The tight slice relaxation: Σ x = t inside the unit box.
pub fn ex_slice_into(
    lp: &mut LinearProgram,
    t: u64,
    xs: &[VarId],
) -> Result<(), GadgetError> {
    if xs.is_empty() {
        return Err(GadgetError::Empty);
    }
    if t as usize > xs.len() {
        return Err(GadgetError::SliceTooHigh { t, n: xs.len() });
    }
    lp.constraints.push(LinearConstraint::eq(
        xs.iter().map(|v| (v.clone(), rat_int(1))),
        rat_int(t as i64),
    ));
    for v in xs {
        box_01(lp, v);
    }
    Ok(())
}

/// Generic slice-decomposition lift shared by the parity and truncated
/// parity constructions. `slices` lists (w-variable, slice value); each
/// slot gets one z per slice. Rows:
///   Σ w = 1;  0 ≤ w ≤ 1;  Σ_s z_{s,i} = slot_i;  Σ_i z_{s,i} = value_s·w_s;
///   0 ≤ z_{s,i} ≤ w_s.
fn slice_lift_into(
    lp: &mut LinearProgram,
    prefix: &[PathSeg],
    slots: &[Slot],
    slices: &[(PathSeg, u64)],
    z_seg: impl Fn(&PathSeg, usize) -> PathSeg,
) {
    let ws: Vec<VarId> = slices.iter().map(|(seg, _)| aux(lp, prefix, seg.clone())).collect();
    let zs: Vec<Vec<VarId>> = slices
        .iter()
        .map(|(seg, _)| {
            (1..=slots.len()).map(|i| aux(lp, prefix, z_seg(seg, i))).collect()
        })
        .collect();

    lp.constraints.push(LinearConstraint::eq(
        ws.iter().map(|w| (w.clone(), rat_int(1))),
        rat_int(1),
    ));
    for w in &ws {
        box_01(lp, w);
    }
    for (i, slot) in slots.iter().enumerate() {
        let (var_part, constant) = slot.parts();
        let mut terms: Vec<(VarId, Rational)> =
            zs.iter().map(|row| (row[i].clone(), rat_int(1))).collect();
        if let Some((v, coef)) = var_part {
            terms.push((v.clone(), rat_int(-coef)));
        }
        lp.constraints
            .push(LinearConstraint::eq(terms, rat_int(constant)));
    }
    for (s, (_, value)) in slices.iter().enumerate() {
        let mut terms: Vec<(VarId, Rational)> =
            zs[s].iter().map(|z| (z.clone(), rat_int(1))).collect();
        terms.push((ws[s].clone(), rat_int(-(*value as i64))));
        lp.constraints.push(LinearConstraint::eq(terms, rat_int(0)));
    }
    for (s, row) in zs.iter().enumerate() {
        for z in row {
            lp.constraints
                .push(LinearConstraint::le([(z.clone(), rat_int(-1))], rat_int(0)));
            lp.constraints.push(LinearConstraint::le(
                [(z.clone(), rat_int(1)), (ws[s].clone(), rat_int(-1))],
                rat_int(0),
            ));
        }
    }
}

/// Parity-polytope lift over the given coordinates: the shadow is the set
/// of 0/1 points with odd coordinate sum. Slices are the odd weights
/// 2t+1 for t = 0..⌊m/2⌋.
pub fn pp_into(lp: &mut LinearProgram, prefix: &[PathSeg], slots: &[Slot]) {
    let m = slots.len();
    let slices: Vec<(PathSeg, u64)> = (0..=(m as u64) / 2)
        .map(|t| (PathSeg::new("w", vec![], vec![t as i64]), 2 * t + 1))
        .collect();
    slice_lift_into(lp, prefix, slots, &slices, |seg, i| {
        PathSeg::new("z", vec![], vec![seg.par[0], i as i64])
    });
}

/// Truncated parity lift: the shadow is the set of 0/1 points x with
/// ⌊2^{−q}·Σx⌋ odd. Slices are valued 2^q(2t+1)+r over
/// t = 0..⌊m/2^{q+1}⌋, r = 0..2^q−1.
pub fn tpp_into(lp: &mut LinearProgram, prefix: &[PathSeg], q: u32, slots: &[Slot]) {
    let m = slots.len() as u64;
    let mut slices = Vec::new();
    for t in 0..=(m >> (q + 1)) {
        for r in 0..(1u64 << q) {
            slices.push((
                PathSeg::new("w", vec![], vec![t as i64, r as i64]),
                (1u64 << q) * (2 * t + 1) + r,
            ));
        }
    }
    slice_lift_into(lp, prefix, slots, &slices, |seg, i| {
        PathSeg::new("z", vec![], vec![seg.par[0], seg.par[1], i as i64])
    });
}

/// Bit-extraction cascade: one truncated parity membership row per level
/// q = 0..|m|−1 over the padded coordinates
/// (x₁..x_m, 1^(2^q), z₁^(1), ..., z_q^(2^{q−1}), 1−z_{q+1}),
/// pinning z_k to the flip of the k-th bit of Σx (LSB first).
pub fn bits_into(
    lp: &mut LinearProgram,
    prefix: &[PathSeg],
    xs: &[VarId],
) -> Result<Vec<VarId>, GadgetError> {
    if xs.is_empty() {
        return Err(GadgetError::Empty);
    }
    let len = bit_len(xs.len() as u64);
    let bits: Vec<VarId> = (1..=len)
        .map(|k| aux(lp, prefix, PathSeg::new("bit", vec![], vec![k as i64])))
        .collect();
    for b in &bits {
        box_01(lp, b);
    }
    for q in 0..len {
        let mut slots: Vec<Slot> = xs.iter().cloned().map(Slot::Var).collect();
        slots.extend(std::iter::repeat(Slot::One).take(1 << q));
        for (j, b) in bits.iter().take(q as usize).enumerate() {
            slots.extend(std::iter::repeat(Slot::Var(b.clone())).take(1 << j));
        }
        slots.push(Slot::OneMinus(bits[q as usize].clone()));
        debug_assert_eq!(slots.len(), xs.len() + (1 << (q + 1)));
        let mut level = prefix.to_vec();
        level.push(PathSeg::new("pp", vec![], vec![q as i64]));
        tpp_into(lp, &level, q, &slots);
    }
    Ok(bits)
}

/// Exact-counting gate rows: bit extraction plus the comparison block
/// pinning y to [Σx = t]. K₀/K₁ are the bit positions where the |m|-bit
/// representation of t is 0 resp. 1; the target count is hit exactly when
/// z_k = 1 on K₀ and z_k = 0 on K₁, and y is the AND of those literals.
pub fn ex_gate_into(
    lp: &mut LinearProgram,
    prefix: &[PathSeg],
    t: u64,
    xs: &[VarId],
    y: &VarId,
) -> Result<Vec<VarId>, GadgetError> {
    if t as usize > xs.len() {
        return Err(GadgetError::SliceTooHigh { t, n: xs.len() });
    }
    let bits = bits_into(lp, prefix, xs)?;
    let len = bit_len(xs.len() as u64) as usize;
    let k1: Vec<usize> = (0..len).filter(|k| t >> k & 1 == 1).collect();
    let k0: Vec<usize> = (0..len).filter(|k| t >> k & 1 == 0).collect();

    // y ≥ Σ_{K0} z_k + Σ_{K1} (1 − z_k) − |m| + 1
    let mut terms: Vec<(VarId, Rational)> = vec![(y.clone(), rat_int(-1))];
    for &k in &k0 {
        terms.push((bits[k].clone(), rat_int(1)));
    }
    for &k in &k1 {
        terms.push((bits[k].clone(), rat_int(-1)));
    }
    lp.constraints
        .push(LinearConstraint::le(terms, rat_int(len as i64 - 1 - k1.len() as i64)));
    for &k in &k0 {
        lp.constraints.push(LinearConstraint::le(
            [(y.clone(), rat_int(1)), (bits[k].clone(), rat_int(-1))],
            rat_int(0),
        ));
    }
    for &k in &k1 {
        lp.constraints.push(LinearConstraint::le(
            [(y.clone(), rat_int(1)), (bits[k].clone(), rat_int(1))],
            rat_int(1),
        ));
    }
    box_01(lp, y);
    Ok(bits)
}

/// AND/OR/NOT rows, verbatim gate displays including input boxes.
pub fn gate_into(
    lp: &mut LinearProgram,
    kind: &GateKind,
    xs: &[VarId],
    y: &VarId,
) -> Result<(), GadgetError> {
    if xs.is_empty() {
        return Err(GadgetError::Empty);
    }
    let m = xs.len() as i64;
    match kind {
        GateKind::And => {
            let mut terms: Vec<(VarId, Rational)> = vec![(y.clone(), rat_int(-1))];
            terms.extend(xs.iter().map(|v| (v.clone(), rat_int(1))));
            lp.constraints.push(LinearConstraint::le(terms, rat_int(m - 1)));
            for v in xs {
                lp.constraints.push(LinearConstraint::le(
                    [(y.clone(), rat_int(1)), (v.clone(), rat_int(-1))],
                    rat_int(0),
                ));
            }
        }
        GateKind::Or => {
            let mut terms: Vec<(VarId, Rational)> = vec![(y.clone(), rat_int(1))];
            terms.extend(xs.iter().map(|v| (v.clone(), rat_int(-1))));
            lp.constraints.push(LinearConstraint::le(terms, rat_int(0)));
            for v in xs {
                lp.constraints.push(LinearConstraint::le(
                    [(v.clone(), rat_int(1)), (y.clone(), rat_int(-1))],
                    rat_int(0),
                ));
            }
        }
        GateKind::Not => {
            if xs.len() != 1 {
                return Err(GadgetError::NotArity(xs.len()));
            }
            lp.constraints.push(LinearConstraint::eq(
                [(y.clone(), rat_int(1)), (xs[0].clone(), rat_int(1))],
                rat_int(1),
            ));
        }
        _ => return Err(GadgetError::NoGateLp),
    }
    for v in xs {
        box_01(lp, v);
    }
    box_01(lp, y);
    Ok(())
}

// --- standalone wrappers -------------------------------------------------
//
// The wrappers host the gadget over a fresh unary vocabulary so it can be
// emitted, solved, and inspected on its own: inputs are X(1)..X(m) and the
// ambient domain is [m].

fn standalone(m: usize) -> (LinearProgram, Vec<VarId>) {
    let lp = LinearProgram::new(m, vec![crate::lp::RelSym::new("X", 1)]);
    let xs = (1..=m).map(|i| VarId::input("X", vec![i])).collect();
    (lp, xs)
}

fn root(tag: &str) -> Vec<PathSeg> {
    vec![PathSeg::new(tag, vec![], vec![])]
}

pub fn ex_slice_lp(n: usize, t: u64) -> Result<GadgetOutput, GadgetError> {
    let (mut lp, xs) = standalone(n);
    ex_slice_into(&mut lp, t, &xs)?;
    Ok(GadgetOutput { lp, xs, y: None, bits: vec![] })
}

pub fn pp_lift(n: usize) -> Result<GadgetOutput, GadgetError> {
    if n == 0 {
        return Err(GadgetError::Empty);
    }
    let (mut lp, xs) = standalone(n);
    let slots: Vec<Slot> = xs.iter().cloned().map(Slot::Var).collect();
    pp_into(&mut lp, &root("pp"), &slots);
    Ok(GadgetOutput { lp, xs, y: None, bits: vec![] })
}

pub fn truncated_pp_lift(n: usize, q: u32) -> Result<GadgetOutput, GadgetError> {
    if n == 0 {
        return Err(GadgetError::Empty);
    }
    if q >= bit_len(n as u64) {
        return Err(GadgetError::TruncationOutOfRange { q, n });
    }
    let (mut lp, xs) = standalone(n);
    let slots: Vec<Slot> = xs.iter().cloned().map(Slot::Var).collect();
    tpp_into(&mut lp, &root("tpp"), q, &slots);
    Ok(GadgetOutput { lp, xs, y: None, bits: vec![] })
}

pub fn bit_extraction_lp(n: usize) -> Result<GadgetOutput, GadgetError> {
    let (mut lp, xs) = standalone(n);
    let bits = bits_into(&mut lp, &root("bx"), &xs)?;
    Ok(GadgetOutput { lp, xs, y: None, bits })
}

pub fn ex_gate_lp(n: usize, t: u64) -> Result<GadgetOutput, GadgetError> {
    let (mut lp, xs) = standalone(n);
    let y = aux(&mut lp, &[], PathSeg::new("y", vec![], vec![]));
    let bits = ex_gate_into(&mut lp, &root("bx"), t, &xs, &y)?;
    Ok(GadgetOutput { lp, xs, y: Some(y), bits })
}

pub fn gate_lp(kind: GateKind, n: usize) -> Result<GadgetOutput, GadgetError> {
    let (mut lp, xs) = standalone(n);
    let y = aux(&mut lp, &[], PathSeg::new("y", vec![], vec![]));
    gate_into(&mut lp, &kind, &xs, &y)?;
    Ok(GadgetOutput { lp, xs, y: Some(y), bits: vec![] })
}

impl GadgetOutput {
    /// Fixes the inputs to a 0/1 vector and returns the restricted LP.
    pub fn fix_inputs(&self, bits: &[bool]) -> LinearProgram {
        assert_eq!(bits.len(), self.xs.len());
        let a: crate::lp::Assignment = self
            .xs
            .iter()
            .cloned()
            .zip(bits.iter().map(|&b| if b { Rational::one() } else { rat_int(0) }))
            .collect();
        crate::lp::substitute(&self.lp, &a).expect("inputs belong to the LP")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{self, RangeEnd};

    fn bits_of(mut v: u64, len: usize) -> Vec<bool> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(v & 1 == 1);
            v >>= 1;
        }
        out
    }

    #[test]
    fn ex_slice_members() {
        let g = ex_slice_lp(3, 1).unwrap();
        assert!(solver::feasible(&g.fix_inputs(&[true, false, false])));
        // The fractional point (1/2, 1/2, 0) is feasible in the relaxation.
        let half: crate::lp::Assignment = g
            .xs
            .iter()
            .cloned()
            .zip([rat_int(1) / rat_int(2), rat_int(1) / rat_int(2), rat_int(0)])
            .collect();
        let fixed = crate::lp::substitute(&g.lp, &half).unwrap();
        assert!(solver::feasible(&fixed));
    }

    #[test]
    fn ex_slice_vertices_are_unit_vectors() {
        let g = ex_slice_lp(3, 1).unwrap();
        let verts = solver::enumerate_vertices(&g.lp).unwrap();
        assert_eq!(verts.len(), 3);
        for v in &verts {
            let ones = g
                .xs
                .iter()
                .filter(|x| v.get(x) == Some(&rat_int(1)))
                .count();
            let zeros = g
                .xs
                .iter()
                .filter(|x| v.get(x) == Some(&rat_int(0)))
                .count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn ex_slice_rejects_overweight() {
        assert_eq!(
            ex_slice_lp(3, 4).unwrap_err(),
            GadgetError::SliceTooHigh { t: 4, n: 3 }
        );
    }

    #[test]
    fn pp_recognizes_odd_parity() {
        let g = pp_lift(3).unwrap();
        assert!(solver::feasible(&g.fix_inputs(&[true, true, true])));
        assert!(!solver::feasible(&g.fix_inputs(&[true, true, false])));
        assert!(solver::feasible(&g.fix_inputs(&[true, false, false])));
    }

    #[test]
    fn pp_aux_count_matches_structure() {
        let g = pp_lift(3).unwrap();
        assert_eq!(g.lp.aux_vars.len(), 8);
    }

    #[test]
    fn pp_single_input() {
        let g = pp_lift(1).unwrap();
        assert!(solver::feasible(&g.fix_inputs(&[true])));
        assert!(!solver::feasible(&g.fix_inputs(&[false])));
    }

    #[test]
    fn tpp_recognizes_shifted_parity() {
        let g = truncated_pp_lift(4, 1).unwrap();
        assert!(solver::feasible(&g.fix_inputs(&[true, true, false, false])));
        assert!(!solver::feasible(&g.fix_inputs(&[true, true, true, true])));
        assert!(!solver::feasible(&g.fix_inputs(&[true, false, false, false])));
    }

    #[test]
    fn tpp_at_q_zero_matches_pp() {
        for n in 1..=4usize {
            let pp = pp_lift(n).unwrap();
            let tpp = truncated_pp_lift(n, 0).unwrap();
            for v in 0..1u64 << n {
                let x = bits_of(v, n);
                assert_eq!(
                    solver::feasible(&pp.fix_inputs(&x)),
                    solver::feasible(&tpp.fix_inputs(&x)),
                    "n={n} x={x:?}"
                );
            }
        }
    }

    #[test]
    fn tpp_two_inputs_q_one() {
        let g = truncated_pp_lift(2, 1).unwrap();
        for v in 0..4u64 {
            let x = bits_of(v, 2);
            let member = x.iter().filter(|b| **b).count() == 2;
            assert_eq!(solver::feasible(&g.fix_inputs(&x)), member, "x={x:?}");
        }
    }

    #[test]
    fn tpp_rejects_out_of_range_q() {
        assert!(matches!(
            truncated_pp_lift(4, 3),
            Err(GadgetError::TruncationOutOfRange { .. })
        ));
    }

    #[test]
    fn bit_extraction_pins_flipped_bits() {
        let g = bit_extraction_lp(3).unwrap();
        for (x, want) in [
            ([true, true, false], [true, false]),
            ([false, false, false], [true, true]),
        ] {
            let fixed = g.fix_inputs(&x);
            for (k, bit) in g.bits.iter().enumerate() {
                let (lo, hi) = solver::variable_range(&fixed, bit).unwrap();
                let expect = RangeEnd::Finite(rat_int(want[k] as i64));
                assert_eq!(lo, expect, "x={x:?} k={k}");
                assert_eq!(hi, expect, "x={x:?} k={k}");
            }
        }
    }

    #[test]
    fn bit_extraction_single_input() {
        let g = bit_extraction_lp(1).unwrap();
        let fixed = g.fix_inputs(&[true]);
        let (lo, hi) = solver::variable_range(&fixed, &g.bits[0]).unwrap();
        assert_eq!((lo, hi), (RangeEnd::Finite(rat_int(0)), RangeEnd::Finite(rat_int(0))));
    }

    #[test]
    fn ex_gate_counts_exactly() {
        let g = ex_gate_lp(3, 2).unwrap();
        let y = g.y.clone().unwrap();
        for (x, want) in [([true, true, false], 1), ([true, true, true], 0)] {
            let fixed = g.fix_inputs(&x);
            let (lo, hi) = solver::variable_range(&fixed, &y).unwrap();
            assert_eq!(lo, RangeEnd::Finite(rat_int(want)), "x={x:?}");
            assert_eq!(hi, RangeEnd::Finite(rat_int(want)), "x={x:?}");
        }
    }

    #[test]
    fn ex_gate_zero_target() {
        let g = ex_gate_lp(1, 0).unwrap();
        let y = g.y.clone().unwrap();
        let fixed = g.fix_inputs(&[false]);
        let (lo, hi) = solver::variable_range(&fixed, &y).unwrap();
        assert_eq!((lo, hi), (RangeEnd::Finite(rat_int(1)), RangeEnd::Finite(rat_int(1))));
    }

    #[test]
    fn boolean_gate_semantics() {
        for (kind, table) in [
            (GateKind::And, [(0b11, 1), (0b01, 0), (0b00, 0)]),
            (GateKind::Or, [(0b11, 1), (0b01, 1), (0b00, 0)]),
        ] {
            let g = gate_lp(kind.clone(), 2).unwrap();
            let y = g.y.clone().unwrap();
            for (v, want) in table {
                let fixed = g.fix_inputs(&bits_of(v, 2));
                let (lo, hi) = solver::variable_range(&fixed, &y).unwrap();
                assert_eq!(lo, RangeEnd::Finite(rat_int(want)), "{kind:?} {v:b}");
                assert_eq!(hi, RangeEnd::Finite(rat_int(want)), "{kind:?} {v:b}");
            }
        }
        let g = gate_lp(GateKind::Not, 1).unwrap();
        let y = g.y.clone().unwrap();
        let fixed = g.fix_inputs(&[true]);
        let (lo, hi) = solver::variable_range(&fixed, &y).unwrap();
        assert_eq!((lo, hi), (RangeEnd::Finite(rat_int(0)), RangeEnd::Finite(rat_int(0))));
    }

    #[test]
    fn not_gate_arity_enforced() {
        assert_eq!(gate_lp(GateKind::Not, 2).unwrap_err(), GadgetError::NotArity(2));
    }
}
