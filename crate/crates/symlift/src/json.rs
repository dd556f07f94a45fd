//! JSON interchange for LPs, circuits, and assignments.
//!
//! Rationals travel as strings ("p" or "p/q"); plain JSON integers are
//! accepted as shorthand on input. Variable identifiers are tagged by
//! "kind". Wiring pattern slots are strings ("b0" for the 0th bound index,
//! "*1" for star label 1) or bare integers for fixed constants.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitSpec, GateFamily, GateKind, PatternSlot, WiringPattern};
use crate::lp::{Assignment, LinearConstraint, LinearProgram, PathSeg, Rel, RelSym, VarId};
use crate::rational::{rational_parse, rational_to_string, ParseRationalError, Rational};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("{0}")]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error("unknown relation symbol {0:?} in constraint row")]
    UnknownRel(String),
    #[error("malformed pattern slot {0:?}")]
    BadSlot(String),
}

// --- rationals -------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RatJson {
    Int(i64),
    Str(String),
}

fn rat_to_json(r: &Rational) -> RatJson {
    RatJson::Str(rational_to_string(r))
}

fn rat_from_json(r: &RatJson) -> Result<Rational, JsonError> {
    match r {
        RatJson::Int(v) => Ok(crate::rational::rat_int(*v)),
        RatJson::Str(s) => Ok(rational_parse(s)?),
    }
}

// --- variable identifiers ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PathSegJson {
    tag: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dom: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    par: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum VarIdJson {
    Input { rel: String, tuple: Vec<usize> },
    Aux { path: Vec<PathSegJson> },
}

fn var_to_json(v: &VarId) -> VarIdJson {
    match v {
        VarId::Input { rel, tuple } => VarIdJson::Input { rel: rel.clone(), tuple: tuple.clone() },
        VarId::Aux { path } => VarIdJson::Aux {
            path: path
                .iter()
                .map(|s| PathSegJson { tag: s.tag.clone(), dom: s.dom.clone(), par: s.par.clone() })
                .collect(),
        },
    }
}

fn var_from_json(v: VarIdJson) -> VarId {
    match v {
        VarIdJson::Input { rel, tuple } => VarId::input(rel, tuple),
        VarIdJson::Aux { path } => VarId::aux(
            path.into_iter().map(|s| PathSeg::new(s.tag, s.dom, s.par)).collect(),
        ),
    }
}

// --- linear programs --------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermJson {
    var: VarIdJson,
    coef: RatJson,
}

#[derive(Serialize, Deserialize)]
struct ConstraintJson {
    lhs: Vec<TermJson>,
    rel: String,
    rhs: RatJson,
}

#[derive(Serialize, Deserialize)]
struct RelSymJson {
    name: String,
    arity: usize,
}

#[derive(Serialize, Deserialize)]
struct LpJson {
    n: usize,
    vocabulary: Vec<RelSymJson>,
    #[serde(default)]
    aux_vars: Vec<VarIdJson>,
    constraints: Vec<ConstraintJson>,
}

pub fn lp_to_string(lp: &LinearProgram) -> String {
    let doc = LpJson {
        n: lp.n,
        vocabulary: lp
            .vocabulary
            .iter()
            .map(|r| RelSymJson { name: r.name.clone(), arity: r.arity })
            .collect(),
        aux_vars: lp.aux_vars.iter().map(var_to_json).collect(),
        constraints: lp
            .constraints
            .iter()
            .map(|c| ConstraintJson {
                lhs: c
                    .coeffs
                    .iter()
                    .map(|(v, a)| TermJson { var: var_to_json(v), coef: rat_to_json(a) })
                    .collect(),
                rel: match c.rel {
                    Rel::Le => "<=".into(),
                    Rel::Eq => "=".into(),
                },
                rhs: rat_to_json(&c.rhs),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn lp_from_str(s: &str) -> Result<LinearProgram, JsonError> {
    let doc: LpJson = serde_json::from_str(s)?;
    let mut lp = LinearProgram::new(
        doc.n,
        doc.vocabulary.into_iter().map(|r| RelSym::new(r.name, r.arity)).collect(),
    );
    lp.aux_vars = doc.aux_vars.into_iter().map(var_from_json).collect();
    for c in doc.constraints {
        let rel = match c.rel.as_str() {
            "<=" => Rel::Le,
            "=" => Rel::Eq,
            other => {
                return Err(JsonError::Syntax(serde::de::Error::custom(format!(
                    "unknown relation {other:?}"
                ))))
            }
        };
        let mut terms = Vec::with_capacity(c.lhs.len());
        for t in c.lhs {
            terms.push((var_from_json(t.var), rat_from_json(&t.coef)?));
        }
        lp.constraints
            .push(LinearConstraint::new(terms, rel, rat_from_json(&c.rhs)?));
    }
    Ok(lp)
}

// --- circuits ----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindJson {
    Input { rel: String },
    Not {},
    And {},
    Or {},
    Th { k: u64 },
    Ex { t: u64 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SlotJson {
    Num(usize),
    Str(String),
}

#[derive(Serialize, Deserialize)]
struct WiringJson {
    target: String,
    pattern: Vec<SlotJson>,
    #[serde(default = "default_true")]
    all_tuples: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    name: String,
    arity: usize,
    kind: KindJson,
    #[serde(default)]
    wiring: Vec<WiringJson>,
}

#[derive(Serialize, Deserialize)]
struct OutputJson {
    family: String,
    #[serde(default)]
    tuple: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    vocabulary: Vec<RelSymJson>,
    families: Vec<FamilyJson>,
    output: OutputJson,
}

fn slot_to_json(s: &PatternSlot) -> SlotJson {
    match s {
        PatternSlot::Bound(i) => SlotJson::Str(format!("b{i}")),
        PatternSlot::Star(j) => SlotJson::Str(format!("*{j}")),
        PatternSlot::Const(c) => SlotJson::Num(*c),
    }
}

fn slot_from_json(s: SlotJson) -> Result<PatternSlot, JsonError> {
    match s {
        SlotJson::Num(c) => Ok(PatternSlot::Const(c)),
        SlotJson::Str(t) => {
            let parse = |rest: &str| rest.parse::<usize>().map_err(|_| JsonError::BadSlot(t.clone()));
            if let Some(rest) = t.strip_prefix('b') {
                Ok(PatternSlot::Bound(parse(rest)?))
            } else if let Some(rest) = t.strip_prefix('*') {
                Ok(PatternSlot::Star(parse(rest)?))
            } else {
                Err(JsonError::BadSlot(t))
            }
        }
    }
}

pub fn circuit_to_string(spec: &CircuitSpec) -> String {
    let doc = CircuitJson {
        vocabulary: spec
            .vocabulary
            .iter()
            .map(|r| RelSymJson { name: r.name.clone(), arity: r.arity })
            .collect(),
        families: spec
            .families
            .iter()
            .map(|f| FamilyJson {
                name: f.name.clone(),
                arity: f.arity,
                kind: match &f.kind {
                    GateKind::Input { rel } => KindJson::Input { rel: rel.clone() },
                    GateKind::Not => KindJson::Not {},
                    GateKind::And => KindJson::And {},
                    GateKind::Or => KindJson::Or {},
                    GateKind::Th { k } => KindJson::Th { k: *k },
                    GateKind::Ex { t } => KindJson::Ex { t: *t },
                },
                wiring: f
                    .wiring
                    .iter()
                    .map(|w| WiringJson {
                        target: w.target.clone(),
                        pattern: w.pattern.iter().map(slot_to_json).collect(),
                        all_tuples: w.all_tuples,
                    })
                    .collect(),
            })
            .collect(),
        output: OutputJson { family: spec.output_family.clone(), tuple: spec.output_tuple.clone() },
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn circuit_from_str(s: &str) -> Result<CircuitSpec, JsonError> {
    let doc: CircuitJson = serde_json::from_str(s)?;
    let mut families = Vec::with_capacity(doc.families.len());
    for f in doc.families {
        let mut wiring = Vec::with_capacity(f.wiring.len());
        for w in f.wiring {
            let mut pattern = Vec::with_capacity(w.pattern.len());
            for s in w.pattern {
                pattern.push(slot_from_json(s)?);
            }
            wiring.push(WiringPattern { target: w.target, pattern, all_tuples: w.all_tuples });
        }
        families.push(GateFamily {
            name: f.name,
            arity: f.arity,
            kind: match f.kind {
                KindJson::Input { rel } => GateKind::Input { rel },
                KindJson::Not {} => GateKind::Not,
                KindJson::And {} => GateKind::And,
                KindJson::Or {} => GateKind::Or,
                KindJson::Th { k } => GateKind::Th { k },
                KindJson::Ex { t } => GateKind::Ex { t },
            },
            wiring,
        });
    }
    Ok(CircuitSpec {
        vocabulary: doc
            .vocabulary
            .into_iter()
            .map(|r| RelSym::new(r.name, r.arity))
            .collect(),
        families,
        output_family: doc.output.family,
        output_tuple: doc.output.tuple,
    })
}

// --- assignments ---------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BindingJson {
    var: VarIdJson,
    value: RatJson,
}

pub fn assignment_to_string(a: &Assignment) -> String {
    let doc: Vec<BindingJson> = a
        .0
        .iter()
        .map(|(v, x)| BindingJson { var: var_to_json(v), value: rat_to_json(x) })
        .collect();
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn assignment_to_value(a: &Assignment) -> serde_json::Value {
    serde_json::from_str(&assignment_to_string(a)).expect("round-trips")
}

pub fn assignment_from_str(s: &str) -> Result<Assignment, JsonError> {
    let doc: Vec<BindingJson> = serde_json::from_str(s)?;
    let mut a = Assignment::new();
    for b in doc {
        a.set(var_from_json(b.var), rat_from_json(&b.value)?);
    }
    Ok(a)
}

pub fn var_to_value(v: &VarId) -> serde_json::Value {
    serde_json::to_value(var_to_json(v)).expect("serializable")
}

pub fn var_from_value(v: serde_json::Value) -> Result<VarId, JsonError> {
    Ok(var_from_json(serde_json::from_value(v)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::any_edge_spec;
    use crate::rational::rat_int;

    #[test]
    fn lp_round_trip() {
        let g = crate::gadgets::ex_gate_lp(3, 1).unwrap();
        let s = lp_to_string(&g.lp);
        let back = lp_from_str(&s).unwrap();
        assert_eq!(back, g.lp);
    }

    #[test]
    fn circuit_round_trip() {
        let spec = any_edge_spec();
        let s = circuit_to_string(&spec);
        let back = circuit_from_str(&s).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn integer_shorthand_accepted() {
        let s = r#"{"n":1,"vocabulary":[{"name":"E","arity":2}],
                     "constraints":[{"lhs":[{"var":{"kind":"input","rel":"E","tuple":[1,1]},
                     "coef":2}],"rel":"<=","rhs":"5/3"}]}"#;
        let lp = lp_from_str(s).unwrap();
        assert_eq!(lp.constraints[0].rhs, rat_int(5) / rat_int(3));
        assert_eq!(
            lp.constraints[0].coeffs[&VarId::input("E", vec![1, 1])],
            rat_int(2)
        );
    }

    #[test]
    fn kind_tags_are_lowercase_external() {
        let s = circuit_to_string(&any_edge_spec());
        assert!(s.contains(r#""or": {}"#));
        assert!(s.contains(r#""input""#));
        assert!(s.contains(r#""*1""#));
    }

    #[test]
    fn assignment_round_trip() {
        let mut a = Assignment::new();
        a.set(VarId::input("E", vec![1, 2]), rat_int(1) / rat_int(2));
        a.set(VarId::aux1("y", vec![], vec![3]), rat_int(-2));
        let back = assignment_from_str(&assignment_to_string(&a)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn malformed_rational_rejected() {
        let s = r#"{"n":1,"vocabulary":[],"constraints":
                    [{"lhs":[],"rel":"<=","rhs":"1/0"}]}"#;
        assert!(matches!(lp_from_str(s), Err(JsonError::Rational(_))));
    }
}
