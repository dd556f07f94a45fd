//! Group actions on LP lifts and the symmetric-LP analyses built on them:
//! automorphism-extension search, rigidification, minimal supports, and
//! manageable reindexing.
//!
//! Everything here is exhaustive search behind desk-scale guards. A
//! permutation π of `[n]` acts on input atoms componentwise; its action on
//! auxiliary variables is an explicit bijection σ, either supplied by a
//! caller (gadget constructions document theirs) or found by search.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use thiserror::Error;

use crate::lp::{canonicalize, LinearConstraint, LinearProgram, VarId};
use crate::rational::Rational;

/// A bijection on `[n]`, stored as the image list (`image[i-1] = π(i)`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("image list {0:?} is not a permutation of [n]")]
    NotPermutation(Vec<usize>),
    #[error("permutation degree {0} does not match the LP's n = {1}")]
    DegreeMismatch(usize, usize),
    #[error("aux map is not total on the LP's auxiliary variables (missing {0})")]
    AuxMapNotTotal(String),
    #[error("aux map is not injective (collision on {0})")]
    AuxMapNotInjective(String),
    #[error("instance exceeds the search guard ({what}: {got}, limit {limit})")]
    GuardExceeded { what: &'static str, got: usize, limit: usize },
    #[error("operation requires a rigid LP (ext_id is nontrivial)")]
    NotRigid,
    #[error("LP is not invariant under the permutation {0:?} (no aux extension exists)")]
    NotSymmetric(Vec<usize>),
    #[error("support {support:?} of {element} exceeds k = {k}")]
    SupportTooLarge { element: String, support: Vec<usize>, k: usize },
    #[error("row index {0} out of range")]
    BadRowIndex(usize),
    #[error("LP does not have the manageable index shape")]
    NotManageableShape,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self, SymmetryError> {
        let n = image.len();
        let mut seen = vec![false; n + 1];
        for &v in &image {
            if v < 1 || v > n || seen[v] {
                return Err(SymmetryError::NotPermutation(image));
            }
            seen[v] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { image: (1..=n).collect() }
    }

    /// The transposition (a b) inside `[n]`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut image: Vec<usize> = (1..=n).collect();
        image.swap(a - 1, b - 1);
        Permutation { image }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i - 1]
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&i| self.apply(i)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(k, &v)| v == k + 1)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Permutation { image: (1..=self.n()).map(|i| self.apply(other.apply(i))).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut image = vec![0; self.n()];
        for (k, &v) in self.image.iter().enumerate() {
            image[v - 1] = k + 1;
        }
        Permutation { image }
    }

    /// All of Sym_n in lexicographic image order.
    pub fn all(n: usize) -> Vec<Permutation> {
        (1..=n)
            .permutations(n)
            .map(|image| Permutation { image })
            .collect()
    }
}

/// An explicit bijection on auxiliary variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuxMap(pub BTreeMap<VarId, VarId>);

impl AuxMap {
    pub fn identity(lp: &LinearProgram) -> Self {
        AuxMap(lp.aux_vars.iter().map(|v| (v.clone(), v.clone())).collect())
    }

    pub fn get(&self, v: &VarId) -> Option<&VarId> {
        self.0.get(v)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|(a, b)| a == b)
    }

    fn check_against(&self, lp: &LinearProgram) -> Result<(), SymmetryError> {
        let mut seen = BTreeSet::new();
        for v in &lp.aux_vars {
            let w = self
                .0
                .get(v)
                .ok_or_else(|| SymmetryError::AuxMapNotTotal(v.to_string()))?;
            if !seen.insert(w.clone()) {
                return Err(SymmetryError::AuxMapNotInjective(w.to_string()));
            }
        }
        Ok(())
    }
}

fn map_var(v: &VarId, pi: &Permutation, sigma: &AuxMap) -> VarId {
    match v {
        VarId::Input { rel, tuple } => VarId::input(rel.clone(), pi.apply_tuple(tuple)),
        VarId::Aux { .. } => sigma.get(v).cloned().unwrap_or_else(|| v.clone()),
    }
}

/// The image LP under the pair (π, σ): input atoms reindexed by π, aux
/// variables renamed by σ, rows carried over.
pub fn apply(
    lp: &LinearProgram,
    pi: &Permutation,
    sigma: &AuxMap,
) -> Result<LinearProgram, SymmetryError> {
    if pi.n() != lp.n {
        return Err(SymmetryError::DegreeMismatch(pi.n(), lp.n));
    }
    sigma.check_against(lp)?;
    let mut out = lp.clone();
    out.aux_vars = lp.aux_vars.iter().map(|v| map_var(v, pi, sigma)).collect();
    out.constraints = lp
        .constraints
        .iter()
        .map(|c| {
            LinearConstraint::new(
                c.coeffs.iter().map(|(v, a)| (map_var(v, pi, sigma), a.clone())),
                c.rel,
                c.rhs.clone(),
            )
        })
        .collect();
    Ok(out)
}

fn sorted_rows(lp: &LinearProgram) -> Vec<LinearConstraint> {
    let mut rows = canonicalize(lp).constraints;
    rows.sort();
    rows
}

/// True iff (π, σ) is an automorphism: the canonicalized constraint
/// multisets of the LP and of its image coincide.
pub fn is_invariant(
    lp: &LinearProgram,
    pi: &Permutation,
    sigma: &AuxMap,
) -> Result<bool, SymmetryError> {
    let image = apply(lp, pi, sigma)?;
    Ok(sorted_rows(&image) == sorted_rows(lp))
}

const AUX_SEARCH_LIMIT: usize = 64;

fn aux_guard(lp: &LinearProgram) -> Result<(), SymmetryError> {
    let count = lp.aux_vars.len();
    if count > AUX_SEARCH_LIMIT && !crate::guards_overridden() {
        return Err(SymmetryError::GuardExceeded {
            what: "aux variables",
            got: count,
            limit: AUX_SEARCH_LIMIT,
        });
    }
    Ok(())
}

/// Finds some σ making (π, σ) an automorphism, if one exists.
pub fn find_extension(
    lp: &LinearProgram,
    pi: &Permutation,
) -> Result<Option<AuxMap>, SymmetryError> {
    let mut found = search_extensions(lp, pi, Some(1))?;
    Ok(found.pop())
}

/// All σ making (id, σ) an automorphism. Always contains the identity and
/// is closed under composition.
pub fn ext_id(lp: &LinearProgram) -> Result<Vec<AuxMap>, SymmetryError> {
    search_extensions(lp, &Permutation::identity(lp.n), None)
}

// --- extension search ----------------------------------------------------
//
// Finding σ with apply(lp, π, σ) = lp is a variable-renaming isomorphism
// problem between the input-mapped LP and the original. The search runs
// partition refinement on coefficient signatures and backtracks with
// individualization; complete candidates are verified against the full
// constraint multiset.

/// A variable occurrence token: inputs are compared by identity, aux
/// variables by their current refinement color.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Tok {
    Inp(VarId),
    Aux(u32),
}

/// One side of the isomorphism instance: rows with aux occurrences turned
/// into dense indices over `vars`.
struct Side {
    vars: Vec<VarId>,
    /// Per row: (rel as u8, rhs, terms); aux terms hold var indices.
    rows: Vec<(u8, Rational, Vec<(Result<usize, VarId>, Rational)>)>,
    occ: Vec<Vec<usize>>,
}

impl Side {
    fn build(lp: &LinearProgram, rows: &[LinearConstraint]) -> Side {
        let vars: Vec<VarId> = lp.aux_vars.iter().cloned().collect();
        let index: BTreeMap<&VarId, usize> =
            vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut occ = vec![Vec::new(); vars.len()];
        let rows = rows
            .iter()
            .enumerate()
            .map(|(r, c)| {
                let terms = c
                    .coeffs
                    .iter()
                    .map(|(v, a)| {
                        let t = match index.get(v) {
                            Some(&i) => {
                                occ[i].push(r);
                                Ok(i)
                            }
                            None => Err(v.clone()),
                        };
                        (t, a.clone())
                    })
                    .collect();
                (c.rel as u8, c.rhs.clone(), terms)
            })
            .collect();
        Side { vars, rows, occ }
    }

    fn signature(&self, v: usize, colors: &[u32]) -> (u32, Vec<RowSig>) {
        let mut rowsigs: Vec<RowSig> = self.occ[v]
            .iter()
            .map(|&r| {
                let (rel, rhs, terms) = &self.rows[r];
                let mut own = Rational::from_integer(0.into());
                let mut rest: Vec<(Tok, Rational)> = Vec::with_capacity(terms.len());
                for (t, a) in terms {
                    match t {
                        Ok(i) if *i == v => own = a.clone(),
                        Ok(i) => rest.push((Tok::Aux(colors[*i]), a.clone())),
                        Err(inp) => rest.push((Tok::Inp(inp.clone()), a.clone())),
                    }
                }
                rest.sort();
                (*rel, rhs.clone(), own, rest)
            })
            .collect();
        rowsigs.sort();
        (colors[v], rowsigs)
    }
}

type RowSig = (u8, Rational, Rational, Vec<(Tok, Rational)>);

/// Joint refinement of both color vectors; returns false on a provable
/// mismatch (some color class has different sizes on the two sides).
fn refine(src: &Side, dst: &Side, cs: &mut Vec<u32>, cd: &mut Vec<u32>) -> bool {
    loop {
        let sig_s: Vec<_> = (0..src.vars.len()).map(|v| src.signature(v, cs)).collect();
        let sig_d: Vec<_> = (0..dst.vars.len()).map(|v| dst.signature(v, cd)).collect();
        let mut all: Vec<_> = sig_s.iter().chain(sig_d.iter()).cloned().collect();
        all.sort();
        all.dedup();
        let color_of = |sig: &(u32, Vec<RowSig>)| all.binary_search(sig).unwrap() as u32;
        let new_s: Vec<u32> = sig_s.iter().map(color_of).collect();
        let new_d: Vec<u32> = sig_d.iter().map(color_of).collect();
        let mut count_s: BTreeMap<u32, usize> = BTreeMap::new();
        let mut count_d: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &new_s {
            *count_s.entry(c).or_default() += 1;
        }
        for &c in &new_d {
            *count_d.entry(c).or_default() += 1;
        }
        if count_s != count_d {
            return false;
        }
        let stable = new_s == *cs && new_d == *cd;
        *cs = new_s;
        *cd = new_d;
        if stable {
            return true;
        }
    }
}

fn search_extensions(
    lp: &LinearProgram,
    pi: &Permutation,
    limit: Option<usize>,
) -> Result<Vec<AuxMap>, SymmetryError> {
    if pi.n() != lp.n {
        return Err(SymmetryError::DegreeMismatch(pi.n(), lp.n));
    }
    aux_guard(lp)?;
    // Source rows: inputs already reindexed by π, aux untouched.
    let mapped = apply(lp, pi, &AuxMap::identity(lp))?;
    let src_rows = sorted_rows(&mapped);
    let dst_rows = sorted_rows(lp);
    if lp.aux_vars.is_empty() {
        return Ok(if src_rows == dst_rows { vec![AuxMap::default()] } else { vec![] });
    }
    let src = Side::build(lp, &src_rows);
    let dst = Side::build(lp, &dst_rows);
    let mut out = Vec::new();
    let mut cs = vec![0u32; src.vars.len()];
    let mut cd = vec![0u32; dst.vars.len()];
    if refine(&src, &dst, &mut cs, &mut cd) {
        branch(&src, &dst, &dst_rows, cs, cd, limit, &mut out);
    }
    Ok(out)
}

fn branch(
    src: &Side,
    dst: &Side,
    dst_rows: &[LinearConstraint],
    cs: Vec<u32>,
    cd: Vec<u32>,
    limit: Option<usize>,
    out: &mut Vec<AuxMap>,
) {
    if limit.is_some_and(|l| out.len() >= l) {
        return;
    }
    // Smallest non-singleton source color class; if none, the coloring is
    // discrete and determines a candidate bijection.
    let mut class_size: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in &cs {
        *class_size.entry(c).or_default() += 1;
    }
    let split = class_size
        .iter()
        .filter(|(_, &sz)| sz > 1)
        .min_by_key(|(c, &sz)| (sz, **c))
        .map(|(&c, _)| c);
    let Some(color) = split else {
        // Discrete: each color names exactly one var per side.
        let mut by_color: BTreeMap<u32, usize> = BTreeMap::new();
        for (w, &c) in cd.iter().enumerate() {
            by_color.insert(c, w);
        }
        let mut sigma = BTreeMap::new();
        for (v, &c) in cs.iter().enumerate() {
            sigma.insert(src.vars[v].clone(), dst.vars[by_color[&c]].clone());
        }
        let sigma = AuxMap(sigma);
        if verify_candidate(src, dst_rows, &sigma) {
            out.push(sigma);
        }
        return;
    };
    let v = cs.iter().position(|&c| c == color).unwrap();
    let fresh = *cs.iter().chain(cd.iter()).max().unwrap() + 1;
    for w in 0..cd.len() {
        if cd[w] != color {
            continue;
        }
        let mut cs2 = cs.clone();
        let mut cd2 = cd.clone();
        cs2[v] = fresh;
        cd2[w] = fresh;
        if refine(src, dst, &mut cs2, &mut cd2) {
            branch(src, dst, dst_rows, cs2, cd2, limit, out);
        }
        if limit.is_some_and(|l| out.len() >= l) {
            return;
        }
    }
}

/// Full multiset check: rename the source rows through σ and compare.
fn verify_candidate(src: &Side, dst_rows: &[LinearConstraint], sigma: &AuxMap) -> bool {
    let mut mapped: Vec<LinearConstraint> = src
        .rows
        .iter()
        .map(|(rel, rhs, terms)| {
            LinearConstraint::new(
                terms.iter().map(|(t, a)| {
                    let v = match t {
                        Ok(i) => sigma.0[&src.vars[*i]].clone(),
                        Err(inp) => inp.clone(),
                    };
                    (v, a.clone())
                }),
                if *rel == crate::lp::Rel::Eq as u8 { crate::lp::Rel::Eq } else { crate::lp::Rel::Le },
                rhs.clone(),
            )
        })
        .collect();
    mapped.sort();
    mapped == dst_rows
}

// --- rigidification -------------------------------------------------------

/// Merges ext_id orbits of auxiliary variables until the LP is rigid. Every
/// orbit collapses onto its lexicographically least member; coefficients of
/// co-occurring orbit members sum. The recognized 0/1 set is unchanged.
pub fn rigidify(lp: &LinearProgram) -> Result<LinearProgram, SymmetryError> {
    let mut cur = lp.clone();
    loop {
        let exts = ext_id(&cur)?;
        if exts.len() <= 1 {
            return Ok(cur);
        }
        // Orbits of the automorphism group on aux vars.
        let vars: Vec<VarId> = cur.aux_vars.iter().cloned().collect();
        let index: BTreeMap<&VarId, usize> =
            vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut rep: Vec<usize> = (0..vars.len()).collect();
        fn find(rep: &mut Vec<usize>, i: usize) -> usize {
            if rep[i] != i {
                let r = find(rep, rep[i]);
                rep[i] = r;
            }
            rep[i]
        }
        for sigma in &exts {
            for (a, b) in &sigma.0 {
                let (ia, ib) = (index[a], index[b]);
                let (ra, rb) = (find(&mut rep, ia), find(&mut rep, ib));
                if ra != rb {
                    // Union toward the smaller index, keeping reps lex-min.
                    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                    rep[hi] = lo;
                }
            }
        }
        let merged: AuxMap = AuxMap(
            (0..vars.len())
                .map(|i| (vars[i].clone(), vars[find(&mut rep, i)].clone()))
                .collect(),
        );
        if merged.is_identity() {
            // ext_id nontrivial yet orbits are singletons cannot happen:
            // a nonidentity σ moves some variable.
            unreachable!("nontrivial automorphism with trivial orbits");
        }
        cur.aux_vars = cur.aux_vars.iter().map(|v| merged.0[v].clone()).collect();
        cur.constraints = cur
            .constraints
            .iter()
            .map(|c| {
                LinearConstraint::new(
                    c.coeffs.iter().map(|(v, a)| {
                        (
                            match v {
                                VarId::Aux { .. } => merged.0[v].clone(),
                                _ => v.clone(),
                            },
                            a.clone(),
                        )
                    }),
                    c.rel,
                    c.rhs.clone(),
                )
            })
            .collect();
    }
}

// --- supports -------------------------------------------------------------

/// What a support is computed for: an auxiliary variable or one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Aux(VarId),
    Row(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportReport {
    pub target: Target,
    pub support: Vec<usize>,
    /// Size of the pointwise stabilizer enumerated during verification.
    pub verified_against: usize,
}

const SUPPORT_N_LIMIT: usize = 6;

/// The unique action of Sym_n on a rigid LP's aux variables and rows,
/// tabulated by brute force.
struct RigidAction {
    perms: Vec<Permutation>,
    sigmas: Vec<AuxMap>,
}

impl RigidAction {
    fn build(lp: &LinearProgram) -> Result<RigidAction, SymmetryError> {
        if ext_id(lp)?.len() != 1 {
            return Err(SymmetryError::NotRigid);
        }
        let perms = Permutation::all(lp.n);
        let mut sigmas = Vec::with_capacity(perms.len());
        for pi in &perms {
            match find_extension(lp, pi)? {
                Some(s) => sigmas.push(s),
                None => return Err(SymmetryError::NotSymmetric(pi.image.clone())),
            }
        }
        Ok(RigidAction { perms, sigmas })
    }

    fn sigma_for(&self, pi: &Permutation) -> &AuxMap {
        let i = self.perms.iter().position(|p| p == pi).expect("known degree");
        &self.sigmas[i]
    }

    /// Image of a row value under (π, σ_π).
    fn map_row(&self, row: &LinearConstraint, i: usize) -> LinearConstraint {
        LinearConstraint::new(
            row.coeffs
                .iter()
                .map(|(v, a)| (map_var(v, &self.perms[i], &self.sigmas[i]), a.clone())),
            row.rel,
            row.rhs.clone(),
        )
    }
}

fn support_guard(n: usize) -> Result<(), SymmetryError> {
    if n > SUPPORT_N_LIMIT && !crate::guards_overridden() {
        return Err(SymmetryError::GuardExceeded {
            what: "n for support search",
            got: n,
            limit: SUPPORT_N_LIMIT,
        });
    }
    Ok(())
}

/// The minimum-cardinality, lexicographically least subset S of `[n]` such
/// that every permutation fixing S pointwise fixes the target.
pub fn min_support(lp: &LinearProgram, target: &Target) -> Result<SupportReport, SymmetryError> {
    support_guard(lp.n)?;
    let action = RigidAction::build(lp)?;
    min_support_with(lp, &action, target)
}

fn min_support_with(
    lp: &LinearProgram,
    action: &RigidAction,
    target: &Target,
) -> Result<SupportReport, SymmetryError> {
    let fixes: Vec<bool> = (0..action.perms.len())
        .map(|i| match target {
            Target::Aux(v) => action.sigmas[i].get(v) == Some(v),
            Target::Row(r) => {
                let row = &lp.constraints[*r];
                action.map_row(row, i) == *row
            }
        })
        .collect::<Vec<_>>();
    if let Target::Row(r) = target {
        if *r >= lp.constraints.len() {
            return Err(SymmetryError::BadRowIndex(*r));
        }
    }
    for size in 0..=lp.n {
        for s in (1..=lp.n).combinations(size) {
            let mut checked = 0usize;
            let mut ok = true;
            for (i, pi) in action.perms.iter().enumerate() {
                if s.iter().all(|&e| pi.apply(e) == e) {
                    checked += 1;
                    if !fixes[i] {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(SupportReport {
                    target: target.clone(),
                    support: s,
                    verified_against: checked,
                });
            }
        }
    }
    unreachable!("S = [n] leaves only the identity, which fixes everything")
}

// --- manageable reindexing ------------------------------------------------

/// A manageably reindexed lift together with the index bookkeeping the
/// property checks need: rows come in blocks of one constraint orbit times
/// all identifier tuples, aux variables are named by (orbit, tuple).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manageable {
    pub lp: LinearProgram,
    pub k: usize,
    pub aux_orbits: usize,
    pub row_orbits: usize,
}

const MANAGEABLE_N_LIMIT: usize = 4;
const MANAGEABLE_K_LIMIT: usize = 3;

/// Tag used for reindexed aux variables: `m[j_1,...,j_k;t]`.
const MANAGEABLE_TAG: &str = "m";

fn manageable_var(t: usize, tuple: &[usize]) -> VarId {
    VarId::aux1(MANAGEABLE_TAG, tuple.to_vec(), vec![t as i64])
}

/// Pads a support to a fixed distinct tuple of length k: sorted support
/// entries first, then the smallest unused elements up to min(k, n), then
/// (for k > n) repetitions of the last entry.
fn padded_tuple(support: &[usize], n: usize, k: usize) -> Vec<usize> {
    let mut s: Vec<usize> = support.to_vec();
    s.sort_unstable();
    let m = k.min(n);
    for e in 1..=n {
        if s.len() >= m {
            break;
        }
        if !s.contains(&e) {
            s.push(e);
        }
    }
    while s.len() < k {
        s.push(*s.last().expect("k >= 1 implies a last element"));
    }
    s
}

/// Any permutation sending the distinct tuple `from` to the distinct tuple
/// `to` componentwise (padding repeats are consistent by construction).
fn perm_sending(from: &[usize], to: &[usize], n: usize) -> Permutation {
    let mut image = vec![0usize; n];
    for (f, t) in from.iter().zip(to) {
        debug_assert!(image[f - 1] == 0 || image[f - 1] == *t);
        image[f - 1] = *t;
    }
    let used: BTreeSet<usize> = image.iter().copied().filter(|&v| v != 0).collect();
    let mut free = (1..=n).filter(|v| !used.contains(v));
    for slot in image.iter_mut() {
        if *slot == 0 {
            *slot = free.next().expect("bijection completes");
        }
    }
    Permutation { image }
}

/// Reindexes a rigid k-supported lift so that aux variables carry
/// identifiers (orbit, tuple over distinct k-tuples of [n]) and every
/// constraint orbit is instantiated once per identifier tuple. Each
/// original aux variable is replaced by the sum of its identifier copies,
/// so the recognized 0/1 set is preserved.
pub fn make_manageable(lp: &LinearProgram, k: usize) -> Result<Manageable, SymmetryError> {
    if !crate::guards_overridden() {
        if lp.n > MANAGEABLE_N_LIMIT {
            return Err(SymmetryError::GuardExceeded {
                what: "n for manageable reindexing",
                got: lp.n,
                limit: MANAGEABLE_N_LIMIT,
            });
        }
        if k > MANAGEABLE_K_LIMIT {
            return Err(SymmetryError::GuardExceeded {
                what: "k for manageable reindexing",
                got: k,
                limit: MANAGEABLE_K_LIMIT,
            });
        }
    }
    let action = RigidAction::build(lp)?;
    let tuples = crate::lp::distinct_tuples(lp.n, k);

    // Aux orbits under the unique action, ordered by lex-min member.
    let aux: Vec<VarId> = lp.aux_vars.iter().cloned().collect();
    let mut orbit_of: BTreeMap<VarId, usize> = BTreeMap::new();
    let mut orbit_reps: Vec<VarId> = Vec::new();
    for v in &aux {
        if orbit_of.contains_key(v) {
            continue;
        }
        let t = orbit_reps.len();
        orbit_reps.push(v.clone());
        for sigma in &action.sigmas {
            let w = sigma.0[v].clone();
            orbit_of.entry(w).or_insert(t);
        }
        orbit_of.insert(v.clone(), t);
    }

    // Identifier map per orbit: ids[t][w] = all tuples j with f_t(j) = w.
    let mut ids: Vec<BTreeMap<VarId, Vec<Vec<usize>>>> = Vec::with_capacity(orbit_reps.len());
    for (t, y) in orbit_reps.iter().enumerate() {
        let report = min_support_with(lp, &action, &Target::Aux(y.clone()))?;
        if report.support.len() > k {
            return Err(SymmetryError::SupportTooLarge {
                element: y.to_string(),
                support: report.support,
                k,
            });
        }
        let s = padded_tuple(&report.support, lp.n, k);
        let mut map: BTreeMap<VarId, Vec<Vec<usize>>> = BTreeMap::new();
        for j in &tuples {
            let pi = perm_sending(&s, j, lp.n);
            let image = action.sigma_for(&pi).0[y].clone();
            debug_assert_eq!(orbit_of[&image], t);
            map.entry(image).or_default().push(j.clone());
        }
        ids.push(map);
    }

    // Constraint orbits over distinct row values (duplicates collapse; the
    // feasible region is unchanged).
    let distinct: BTreeSet<LinearConstraint> = lp.constraints.iter().cloned().collect();
    let mut row_orbit_of: BTreeMap<LinearConstraint, usize> = BTreeMap::new();
    let mut row_reps: Vec<LinearConstraint> = Vec::new();
    for row in &distinct {
        if row_orbit_of.contains_key(row) {
            continue;
        }
        let q = row_reps.len();
        row_reps.push(row.clone());
        for i in 0..action.perms.len() {
            let image = action.map_row(row, i);
            row_orbit_of.entry(image).or_insert(q);
        }
    }

    // Substitution: original aux w of orbit t becomes the sum of its
    // identifier copies y_{(t,j)}.
    let substitute_row = |row: &LinearConstraint| -> LinearConstraint {
        LinearConstraint::new(
            row.coeffs.iter().flat_map(|(v, a)| match v {
                VarId::Aux { .. } => {
                    let t = orbit_of[v];
                    ids[t][v]
                        .iter()
                        .map(|j| (manageable_var(t, j), a.clone()))
                        .collect::<Vec<_>>()
                }
                _ => vec![(v.clone(), a.clone())],
            }),
            row.rel,
            row.rhs.clone(),
        )
    };

    let mut out = LinearProgram::new(lp.n, lp.vocabulary.clone());
    for t in 0..orbit_reps.len() {
        for j in &tuples {
            out.aux_vars.insert(manageable_var(t, j));
        }
    }
    for gamma in &row_reps {
        // Row support and identifier map, mirroring the aux construction.
        let row_index = lp
            .constraints
            .iter()
            .position(|c| c == gamma)
            .expect("representative from this LP");
        let report = min_support_with(lp, &action, &Target::Row(row_index))?;
        if report.support.len() > k {
            return Err(SymmetryError::SupportTooLarge {
                element: format!("row {row_index}"),
                support: report.support,
                k,
            });
        }
        let s = padded_tuple(&report.support, lp.n, k);
        for i in &tuples {
            let pi = perm_sending(&s, i, lp.n);
            let pidx = action.perms.iter().position(|p| p == &pi).unwrap();
            let image = action.map_row(gamma, pidx);
            out.constraints.push(substitute_row(&image));
        }
    }
    Ok(Manageable { lp: out, k, aux_orbits: orbit_reps.len(), row_orbits: row_reps.len() })
}

/// Equality type of a tuple: each position labelled with the first position
/// holding the same value.
fn eq_type(tuple: &[usize]) -> Vec<usize> {
    tuple
        .iter()
        .enumerate()
        .map(|(p, v)| tuple.iter().position(|w| w == v).min(Some(p)).unwrap())
        .collect()
}

/// Checks the structural uniformity a manageable reindexing guarantees:
/// within one constraint orbit, the right-hand side is constant, and every
/// coefficient (on reindexed aux variables and on input atoms alike)
/// depends only on the equality type of the concatenated index tuples.
pub fn check_manageable_properties(m: &Manageable) -> Result<bool, SymmetryError> {
    let n = m.lp.n;
    let tuples = crate::lp::distinct_tuples(n, m.k);
    let d = tuples.len();
    if m.lp.constraints.len() != m.row_orbits * d {
        return Err(SymmetryError::NotManageableShape);
    }
    for v in &m.lp.aux_vars {
        match v {
            VarId::Aux { path }
                if path.len() == 1
                    && path[0].tag == MANAGEABLE_TAG
                    && path[0].dom.len() == m.k
                    && path[0].par.len() == 1 => {}
            _ => return Err(SymmetryError::NotManageableShape),
        }
    }
    let zero = Rational::from_integer(0.into());
    let inputs = m.lp.all_input_vars();
    for q in 0..m.row_orbits {
        let block = &m.lp.constraints[q * d..(q + 1) * d];
        // Item 1: constant terms (and the relation) agree across the orbit.
        if block.iter().any(|c| c.rhs != block[0].rhs || c.rel != block[0].rel) {
            return Ok(false);
        }
        // Items 2 and 3: coefficients are functions of the equality type.
        let mut aux_coef: BTreeMap<(usize, Vec<usize>), &Rational> = BTreeMap::new();
        let mut inp_coef: BTreeMap<(String, Vec<usize>), &Rational> = BTreeMap::new();
        for (i, row) in tuples.iter().zip(block) {
            for t in 0..m.aux_orbits {
                for j in &tuples {
                    let coef = row.coeffs.get(&manageable_var(t, j)).unwrap_or(&zero);
                    let key: Vec<usize> = j.iter().chain(i.iter()).copied().collect();
                    if *aux_coef.entry((t, eq_type(&key))).or_insert(coef) != coef {
                        return Ok(false);
                    }
                }
            }
            for v in &inputs {
                let VarId::Input { rel, tuple } = v else { unreachable!() };
                let coef = row.coeffs.get(v).unwrap_or(&zero);
                let key: Vec<usize> = tuple.iter().chain(i.iter()).copied().collect();
                if *inp_coef.entry((rel.clone(), eq_type(&key))).or_insert(coef) != coef {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
