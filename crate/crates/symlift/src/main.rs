//! Command-line driver. Reports are JSON on standard output; human
//! summaries and timing go to standard error. Exit codes: 0 on success
//! (including "the answer is infeasible"), 1 on domain errors or failed
//! verification, 2 on usage errors.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use symlift::circuit::{eliminate_thresholds, materialize, Circuit, CircuitSpec};
use symlift::compiler::{self, CompiledLift};
use symlift::gadgets;
use symlift::json as sj;
use symlift::lp::{lp_size, substitute, Assignment, LinearProgram, PathSeg, VarId};
use symlift::rational::{rat_int, rational_to_string};
use symlift::solver::{self, Sense, SolveStatus};
use symlift::symmetry::{self, Permutation, Target};

#[derive(Parser)]
#[command(name = "symlift", version, about = "Symmetric circuit-to-LP compiler and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetKind {
    ExSlice,
    Pp,
    Tpp,
    Bits,
    ExGate,
    And,
    Or,
    Not,
}

#[derive(Clone, Copy, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a gadget LP.
    Gadget {
        #[arg(long, value_enum)]
        kind: GadgetKind,
        #[arg(long)]
        n: usize,
        /// Slice weight / exact-count target (ex-slice, ex-gate).
        #[arg(long)]
        t: Option<u64>,
        /// Truncation level (tpp).
        #[arg(long)]
        q: Option<u32>,
        /// Extra namespace segment prepended to every auxiliary variable.
        #[arg(long)]
        prefix: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a circuit to its LP lift (thresholds are rewritten first).
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide feasibility or optimize an objective over an LP.
    Solve {
        #[arg(long)]
        lp: PathBuf,
        /// Assignment JSON fixing some variables before solving.
        #[arg(long)]
        fix: Option<PathBuf>,
        /// Objective as assignment JSON (variable -> coefficient).
        #[arg(long)]
        objective: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "min")]
        sense: SenseArg,
    },
    /// Enumerate all vertices of a small bounded LP.
    Vertices {
        #[arg(long)]
        lp: PathBuf,
    },
    /// Check compiled-LP feasibility against circuit evaluation on all
    /// 0/1 inputs.
    VerifyEquivalence {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        exhaustive: bool,
        /// Worker threads for the per-input checks.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check invariance under all of Sym_n, via compiled witnesses when a
    /// circuit is given, else by extension search on a raw LP.
    VerifySymmetry {
        #[arg(long)]
        lp: Option<PathBuf>,
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Merge automorphism orbits of auxiliary variables until rigid.
    Rigidify {
        #[arg(long)]
        lp: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal supports of auxiliary variables (or one given target).
    Supports {
        #[arg(long)]
        lp: PathBuf,
        /// Target as VarId JSON; all aux variables when omitted.
        #[arg(long)]
        target: Option<String>,
    },
    /// Reindex a rigid k-supported lift by identifier tuples.
    Manageable {
        #[arg(long)]
        lp: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also verify the structural uniformity properties.
        #[arg(long)]
        check: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            println!("{}", json!({ "error": msg }));
            eprintln!("error: {msg}");
            1
        }
    };
    eprintln!("done in {} ms", started.elapsed().as_millis());
    std::process::exit(code);
}

fn fail<E: Display>(e: E) -> String {
    e.to_string()
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn emit_lp(lp: &LinearProgram, out: &Option<PathBuf>) -> Result<(), String> {
    let s = sj::lp_to_string(lp);
    match out {
        Some(path) => {
            std::fs::write(path, s.as_bytes()).map_err(|e| format!("writing {}: {e}", path.display()))?;
            println!("{}", json!({ "written": path.display().to_string(), "lp_size": lp_size(lp) }));
        }
        None => println!("{s}"),
    }
    let _ = std::io::stdout().flush();
    eprintln!("{} rows, {} aux vars, lp_size {}", lp.constraints.len(), lp.aux_vars.len(), lp_size(lp));
    Ok(())
}

fn load_circuit(path: &PathBuf, n: usize) -> Result<(CircuitSpec, Circuit), String> {
    let spec = sj::circuit_from_str(&read(path)?).map_err(fail)?;
    let c = materialize(&spec, n).map_err(fail)?;
    Ok((spec, c))
}

fn compile_rewritten(c: &Circuit) -> Result<CompiledLift, String> {
    compiler::compile(&eliminate_thresholds(c)).map_err(fail)
}

/// Splits `0..count` across workers and merges per-chunk results in
/// chunk order, keeping reports deterministic.
fn parallel_map<R: Send>(
    count: usize,
    jobs: Option<usize>,
    f: impl Fn(std::ops::Range<usize>) -> R + Sync,
) -> Vec<R> {
    let jobs = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()))
        .clamp(1, count.max(1));
    let chunk = count.div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let f = &f;
                let range = (w * chunk).min(count)..((w + 1) * chunk).min(count);
                s.spawn(move || f(range))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn graph_inputs(c: &Circuit, bits: u64) -> BTreeMap<VarId, bool> {
    c.input_vars()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, bits >> i & 1 == 1))
        .collect()
}

fn run(cmd: Command) -> Result<i32, String> {
    match cmd {
        Command::Gadget { kind, n, t, q, prefix, out } => {
            let need = |v: Option<u64>, flag: &str| v.ok_or(format!("--{flag} is required for this kind"));
            let g = match kind {
                GadgetKind::ExSlice => gadgets::ex_slice_lp(n, need(t, "t")?),
                GadgetKind::Pp => gadgets::pp_lift(n),
                GadgetKind::Tpp => {
                    gadgets::truncated_pp_lift(n, need(q.map(u64::from), "q")? as u32)
                }
                GadgetKind::Bits => gadgets::bit_extraction_lp(n),
                GadgetKind::ExGate => gadgets::ex_gate_lp(n, need(t, "t")?),
                GadgetKind::And => gadgets::gate_lp(symlift::circuit::GateKind::And, n),
                GadgetKind::Or => gadgets::gate_lp(symlift::circuit::GateKind::Or, n),
                GadgetKind::Not => gadgets::gate_lp(symlift::circuit::GateKind::Not, n),
            }
            .map_err(fail)?;
            let mut lp = g.lp;
            if let Some(tag) = prefix {
                let seg = PathSeg::new(tag, vec![], vec![]);
                let rename = |v: &VarId| match v {
                    VarId::Aux { .. } => v.prefixed(&seg),
                    _ => v.clone(),
                };
                lp.aux_vars = lp.aux_vars.iter().map(|v| rename(v)).collect();
                lp.constraints = lp
                    .constraints
                    .iter()
                    .map(|c| {
                        symlift::lp::LinearConstraint::new(
                            c.coeffs.iter().map(|(v, a)| (rename(v), a.clone())),
                            c.rel,
                            c.rhs.clone(),
                        )
                    })
                    .collect();
            }
            emit_lp(&lp, &out)?;
            Ok(0)
        }
        Command::Compile { circuit, n, out } => {
            let (_, c) = load_circuit(&circuit, n)?;
            let cl = compile_rewritten(&c)?;
            emit_lp(&cl.lp, &out)?;
            Ok(0)
        }
        Command::Solve { lp, fix, objective, sense } => {
            let mut prog = sj::lp_from_str(&read(&lp)?).map_err(fail)?;
            prog.validate().map_err(fail)?;
            if let Some(path) = fix {
                let a = sj::assignment_from_str(&read(&path)?).map_err(fail)?;
                prog = substitute(&prog, &a).map_err(fail)?;
            }
            let status = match objective {
                Some(path) => {
                    let a = sj::assignment_from_str(&read(&path)?).map_err(fail)?;
                    let obj: BTreeMap<VarId, _> = a.0.into_iter().collect();
                    let sense = match sense {
                        SenseArg::Min => Sense::Min,
                        SenseArg::Max => Sense::Max,
                    };
                    solver::optimize(&prog, &obj, sense)
                }
                None => {
                    let obj = BTreeMap::new();
                    solver::optimize(&prog, &obj, Sense::Min)
                }
            };
            let report = match &status {
                SolveStatus::Infeasible => json!({ "status": "infeasible" }),
                SolveStatus::Unbounded { ray } => {
                    json!({ "status": "unbounded", "ray": sj::assignment_to_value(ray) })
                }
                SolveStatus::Optimal { value, point } => json!({
                    "status": "optimal",
                    "value": rational_to_string(value),
                    "point": sj::assignment_to_value(point),
                }),
            };
            println!("{report}");
            Ok(0)
        }
        Command::Vertices { lp } => {
            let prog = sj::lp_from_str(&read(&lp)?).map_err(fail)?;
            prog.validate().map_err(fail)?;
            let verts = solver::enumerate_vertices(&prog).map_err(fail)?;
            let list: Vec<Value> = verts.iter().map(sj::assignment_to_value).collect();
            println!("{}", json!({ "count": list.len(), "vertices": list }));
            Ok(0)
        }
        Command::VerifyEquivalence { circuit, n, exhaustive, jobs } => {
            if !exhaustive {
                return Err("only --exhaustive verification is implemented".into());
            }
            let (_, c) = load_circuit(&circuit, n)?;
            let cl = compile_rewritten(&c)?;
            let bits = c.input_vars().len();
            if bits > 16 {
                return Err(format!("{bits} input atoms is beyond exhaustive range"));
            }
            let count = 1usize << bits;
            let chunks = parallel_map(count, jobs, |range| {
                let mut mismatches = 0usize;
                let mut first: Option<u64> = None;
                for i in range {
                    let x = graph_inputs(&c, i as u64);
                    if compiler::feasible_on(&cl, &x) != c.evaluate(&x).unwrap() {
                        mismatches += 1;
                        first.get_or_insert(i as u64);
                    }
                }
                (mismatches, first)
            });
            let mismatches: usize = chunks.iter().map(|(m, _)| m).sum();
            let first = chunks.iter().find_map(|(_, f)| *f);
            let report = json!({
                "inputs_checked": count,
                "mismatches": mismatches,
                "first_counterexample": first.map(|b| {
                    sj::assignment_to_value(&graph_inputs(&c, b)
                        .into_iter()
                        .map(|(v, on)| (v, rat_int(on as i64)))
                        .collect::<Assignment>())
                }),
            });
            println!("{report}");
            eprintln!("checked {count} inputs, {mismatches} mismatches");
            Ok(if mismatches == 0 { 0 } else { 1 })
        }
        Command::VerifySymmetry { lp, circuit, n, jobs } => {
            let (prog, witness_source) = match (&lp, &circuit) {
                (Some(path), None) => (sj::lp_from_str(&read(path)?).map_err(fail)?, None),
                (None, Some(path)) => {
                    let n = n.ok_or("--n is required with --circuit")?;
                    let (_, c) = load_circuit(path, n)?;
                    let cl = compile_rewritten(&c)?;
                    (cl.lp.clone(), Some(cl))
                }
                _ => return Err("pass exactly one of --lp or --circuit".into()),
            };
            let perms = Permutation::all(prog.n);
            let results = parallel_map(perms.len(), jobs, |range| {
                let mut failures: Vec<Vec<usize>> = Vec::new();
                for i in range {
                    let pi = &perms[i];
                    let ok = match &witness_source {
                        Some(cl) => compiler::symmetry_witness(cl, pi)
                            .ok()
                            .map(|sigma| symmetry::is_invariant(&prog, pi, &sigma).unwrap_or(false))
                            .unwrap_or(false),
                        None => symmetry::find_extension(&prog, pi)
                            .map(|s| s.is_some())
                            .unwrap_or(false),
                    };
                    if !ok {
                        failures.push(pi.image().to_vec());
                    }
                }
                failures
            });
            let failures: Vec<Vec<usize>> = results.into_iter().flatten().collect();
            println!(
                "{}",
                json!({ "permutations_checked": perms.len(), "violations": failures })
            );
            eprintln!("checked {} permutations, {} violations", perms.len(), failures.len());
            Ok(if failures.is_empty() { 0 } else { 1 })
        }
        Command::Rigidify { lp, out } => {
            let prog = sj::lp_from_str(&read(&lp)?).map_err(fail)?;
            let rigid = symmetry::rigidify(&prog).map_err(fail)?;
            eprintln!(
                "aux vars {} -> {}",
                prog.aux_vars.len(),
                rigid.aux_vars.len()
            );
            emit_lp(&rigid, &out)?;
            Ok(0)
        }
        Command::Supports { lp, target } => {
            let prog = sj::lp_from_str(&read(&lp)?).map_err(fail)?;
            let targets: Vec<Target> = match target {
                Some(s) => {
                    let v = sj::var_from_value(serde_json::from_str(&s).map_err(fail)?)
                        .map_err(fail)?;
                    vec![Target::Aux(v)]
                }
                None => prog.aux_vars.iter().cloned().map(Target::Aux).collect(),
            };
            let mut reports = Vec::new();
            for t in &targets {
                let r = symmetry::min_support(&prog, t).map_err(fail)?;
                let target_json = match t {
                    Target::Aux(v) => sj::var_to_value(v),
                    Target::Row(i) => json!({ "row": i }),
                };
                reports.push(json!({
                    "target": target_json,
                    "support": r.support,
                    "verified_against": r.verified_against,
                }));
            }
            println!("{}", json!({ "reports": reports }));
            Ok(0)
        }
        Command::Manageable { lp, k, out, check } => {
            let prog = sj::lp_from_str(&read(&lp)?).map_err(fail)?;
            let m = symmetry::make_manageable(&prog, k).map_err(fail)?;
            let checked = if check {
                Some(symmetry::check_manageable_properties(&m).map_err(fail)?)
            } else {
                None
            };
            eprintln!(
                "{} aux orbits, {} row orbits, {} rows",
                m.aux_orbits,
                m.row_orbits,
                m.lp.constraints.len()
            );
            if let Some(path) = &out {
                std::fs::write(path, sj::lp_to_string(&m.lp).as_bytes())
                    .map_err(|e| format!("writing {}: {e}", path.display()))?;
            }
            let report = json!({
                "aux_orbits": m.aux_orbits,
                "row_orbits": m.row_orbits,
                "rows": m.lp.constraints.len(),
                "properties_hold": checked,
                "written": out.map(|p| p.display().to_string()),
            });
            println!("{report}");
            Ok(match checked {
                Some(false) => 1,
                _ => 0,
            })
        }
    }
}
