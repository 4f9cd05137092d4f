//! End-to-end soundness checks of compiled programs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approx::check::{appr_member, CheckConfig, Replay, Verdict};
use crate::approx::{instantiate_err, instantiate_poly, ApproxTy};
use crate::eval::EvalConfig;
use crate::lang::{elaborate, parse_program, Expr, ParseError, Ty, TyCtx, TypeError, E};
use crate::report::{CHECK_SCHEMA, CORPUS_SCHEMA};
use crate::sample::stream_id;
use crate::transform::compile::{compile_closed, weaken_by, CompileError, CompileOpts, CompileResult, Rule};
use crate::transform::simplify::simplify;

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub program: String,
    pub family: String,
    /// Families at which a polymorphic result was instantiated.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub passes: usize,
    /// Passes that needed the enclosure width of the exact value.
    pub slack_passes: usize,
    /// Passes with an infinite or divergent bound.
    pub vacuous_passes: usize,
    pub failures: Vec<Replay>,
    pub inconclusive: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive_reason: Option<String>,
    /// Not serialized so reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn absorb(&mut self, v: Verdict) {
        self.trials += v.trials;
        self.passes += v.passes;
        self.slack_passes += v.slack_passes;
        self.vacuous_passes += v.vacuous_passes;
        self.inconclusive += v.inconclusive;
        if self.inconclusive_reason.is_none() {
            self.inconclusive_reason = v.inconclusive_reason;
        }
        self.failures.extend(v.failures);
    }
}

/// Monomorphic instances of a compiled result: polymorphic families are
/// instantiated at Fl and at Nat, recursively.
pub fn monomorphize(fam: &ApproxTy, e: &E, a: &E, q: &E) -> Vec<(String, ApproxTy, E, E, E)> {
    let ApproxTy::PiTy(..) = fam else {
        return vec![(String::new(), fam.clone(), e.clone(), a.clone(), q.clone())];
    };
    let mut out = Vec::new();
    for inst in [ApproxTy::FlBase, ApproxTy::NatBase] {
        let body = instantiate_poly(fam, &inst).expect("polymorphic family");
        let e2 = Expr::tyapp(e.clone(), inst.exact_ty());
        let a2 = Expr::tyapp(a.clone(), inst.approx_ty());
        let q2 = simplify(&instantiate_err(q.clone(), &inst));
        for (name, f, e3, a3, q3) in monomorphize(&body, &e2, &a2, &q2) {
            let name = if name.is_empty() { inst.to_string() } else { format!("{inst},{name}") };
            out.push((name, f, e3, a3, q3));
        }
    }
    out
}

/// Samples `e ∈ appr(err, approx)` for a compiled program. Polymorphic
/// results run `trials` trials per instance.
pub fn check_soundness(
    program: &str,
    e: &E,
    result: &CompileResult,
    trials: usize,
    seed: u64,
    cfg: &EvalConfig,
) -> CheckReport {
    let start = Instant::now();
    let mut report = CheckReport {
        schema: CHECK_SCHEMA,
        program: program.to_string(),
        family: result.family.to_string(),
        instances: Vec::new(),
        seed,
        trials: 0,
        passes: 0,
        slack_passes: 0,
        vacuous_passes: 0,
        failures: Vec::new(),
        inconclusive: 0,
        inconclusive_reason: None,
        wall_time: Duration::ZERO,
    };
    for (name, fam, e, a, q) in monomorphize(&result.family, e, &result.approx, &result.err) {
        let check = CheckConfig { trials, seed, stream: stream_id(&format!("check/{name}")), eval: *cfg };
        report.absorb(appr_member(&fam, &q, &a, &e, &check));
        if !name.is_empty() {
            report.instances.push(name);
        }
    }
    report.wall_time = start.elapsed();
    report
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("io: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("compile error: {0}")]
    Compile(#[from] CompileError),
    #[error("options: {0}")]
    Options(String),
}

/// A parsed and elaborated program with its `redseq` byte spans.
#[derive(Clone, Debug)]
pub struct Program {
    pub expr: E,
    pub ty: Ty,
    pub redseq_spans: Vec<(usize, usize)>,
}

pub fn load_program(src: &str) -> Result<Program, ProgramError> {
    let parsed = parse_program(src)?;
    let (expr, ty) = elaborate(&TyCtx::new(), &parsed.expr)?;
    Ok(Program { expr, ty, redseq_spans: parsed.redseq_spans })
}

/// Per-program options stored next to `name.ax` as `name.opts.json`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sidecar {
    pub subst_sin: bool,
    pub perforate: BTreeMap<String, u64>,
    /// An error expression the program is weakened to.
    pub weaken: Option<String>,
}

impl Sidecar {
    pub fn apply(&self, base: &CompileOpts) -> Result<CompileOpts, ProgramError> {
        let mut opts = base.clone();
        opts.enable_sin_subst |= self.subst_sin;
        opts.perforation.extend(self.perforate.iter().map(|(k, v)| (k.clone(), *v)));
        if let Some(w) = &self.weaken {
            let parsed = parse_program(w)?;
            opts.weaken_to = Some(elaborate(&TyCtx::new(), &parsed.expr)?.0);
        }
        Ok(opts)
    }
}

pub fn sidecar_path(program: &Path) -> PathBuf {
    program.with_extension("opts.json")
}

#[derive(Clone, Debug)]
pub struct CorpusOpts {
    pub compile: CompileOpts,
    pub trials: usize,
    pub seed: u64,
    /// Adds this constant to every top-level error through A-Weak.
    pub weaken_by: Option<BigRational>,
}

impl Default for CorpusOpts {
    fn default() -> Self {
        CorpusOpts { compile: CompileOpts::default(), trials: 1000, seed: 42, weaken_by: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProgramReport {
    pub file: String,
    pub rules: Vec<Rule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub schema: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub programs: Vec<ProgramReport>,
    /// Rules used by at least one program.
    pub rules_covered: Vec<Rule>,
    pub failures: usize,
    pub errors: usize,
    pub inconclusive: usize,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.errors == 0
    }
}

/// Compiles a program with the corpus options, weakening its result when
/// asked.
pub fn compile_program(p: &Program, opts: &CompileOpts, weaken: Option<&BigRational>) -> Result<CompileResult, ProgramError> {
    let result = compile_closed(&p.expr, opts)?;
    let Some(c) = weaken else { return Ok(result) };
    let to = weaken_by(&result.family, &result.err, c);
    let opts = CompileOpts { weaken_to: Some(to), ..opts.clone() };
    Ok(compile_closed(&p.expr, &opts)?)
}

fn check_file(path: &Path, opts: &CorpusOpts) -> Result<(Vec<Rule>, CheckReport), ProgramError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| ProgramError::Io(format!("{}: {e}", p.display())));
    let program = load_program(&read(path)?)?;
    let side = sidecar_path(path);
    let sidecar: Sidecar = if side.exists() {
        serde_json::from_str(&read(&side)?).map_err(|e| ProgramError::Options(format!("{}: {e}", side.display())))?
    } else {
        Sidecar::default()
    };
    let compile_opts = sidecar.apply(&opts.compile)?;
    let result = compile_program(&program, &compile_opts, opts.weaken_by.as_ref())?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let report = check_soundness(&name, &program.expr, &result, opts.trials, opts.seed, &compile_opts.eval);
    Ok((result.derivation.rules().into_iter().collect(), report))
}

/// Compiles and checks every `.ax` file in `dir`, in file-name order.
/// Per-file problems are recorded without stopping the batch.
pub fn check_rule_corpus(dir: &Path, opts: &CorpusOpts) -> std::io::Result<CorpusReport> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ax"))
        .collect();
    files.sort();
    let mut programs = Vec::with_capacity(files.len());
    let mut covered = std::collections::BTreeSet::new();
    let (mut failures, mut errors, mut inconclusive) = (0, 0, 0);
    for path in &files {
        let file = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match check_file(path, opts) {
            Ok((rules, report)) => {
                covered.extend(rules.iter().copied());
                failures += report.failures.len();
                inconclusive += report.inconclusive;
                programs.push(ProgramReport { file, rules, check: Some(report), error: None });
            }
            Err(e) => {
                errors += 1;
                programs.push(ProgramReport { file, rules: Vec::new(), check: None, error: Some(e.to_string()) });
            }
        }
    }
    Ok(CorpusReport {
        schema: CORPUS_SCHEMA,
        seed: opts.seed,
        trials: opts.trials,
        programs,
        rules_covered: covered.into_iter().collect(),
        failures,
        errors,
        inconclusive,
    })
}
