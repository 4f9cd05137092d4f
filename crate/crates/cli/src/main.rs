use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use approxc_core::approx::axioms::check_approx_axioms;
use approxc_core::approx::check::CheckConfig;
use approxc_core::approx::ApproxTy;
use approxc_core::checker::{
    check_rule_corpus, check_soundness, compile_program, load_program, sidecar_path, CheckReport, CorpusOpts,
    Program, ProgramError, Sidecar,
};
use approxc_core::eval::EvalConfig;
use approxc_core::lang::site_label;
use approxc_core::quant::{check_quant_axioms, QuantInstance};
use approxc_core::report::{to_json, to_json_line, AxiomReport, DERIVATION_SCHEMA};
use approxc_core::transform::{CompileError, CompileOpts, CompileResult, Derivation};

#[derive(Parser)]
#[command(name = "approxc", version, about = "Compile exact real programs to floating point with error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile programs and write the approximation, its error and the derivation.
    Compile(Common),
    /// Compile programs (or corpus directories) and sample their soundness.
    Check(Common),
    /// Run the quantification and approximation law suites.
    Axioms(Flags),
}

#[derive(Args)]
struct Common {
    /// `.ax` files; `check` also accepts directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Perforate a redseq site, named by label (L0) or byte offset.
    #[arg(long = "perforate", value_name = "SITE=K")]
    perforate: Vec<String>,
    /// Replace sinr by the identity.
    #[arg(long)]
    subst_sin: bool,
    #[arg(long, value_enum, default_value = "all")]
    emit: Emit,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    precision_bits: u32,
    #[arg(long, default_value_t = 1_000_000)]
    fuel: u64,
    /// Output directory; defaults to the input's directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print newline-delimited JSON documents on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Approx,
    Err,
    Derivation,
    All,
}

impl Flags {
    fn eval(&self) -> EvalConfig {
        EvalConfig { fuel: self.fuel, precision_bits: self.precision_bits, ..EvalConfig::default() }
    }

    fn out_dir(&self, input: &Path) -> PathBuf {
        match &self.out {
            Some(d) => d.clone(),
            None => input.parent().map(Path::to_path_buf).unwrap_or_default(),
        }
    }
}

/// Run outcome, mapped to the process exit code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok = 0,
    Failures = 1,
    Broken = 2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(c) => run_compile(c),
        Command::Check(c) => run_check(c),
        Command::Axioms(f) => run_axioms(f),
    };
    match result {
        Ok(s) => ExitCode::from(s as u8),
        Err(e) => {
            eprintln!("approxc: {e:#}");
            ExitCode::from(Status::Broken as u8)
        }
    }
}

fn stem(input: &Path) -> String {
    input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Resolves `SITE=K` flags against a program's redseq sites.
fn perforation(flags: &[String], program: &Program) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for f in flags {
        let (site, k) = f.split_once('=').ok_or_else(|| anyhow!("--perforate expects SITE=K, got `{f}`"))?;
        let k: u64 = k.parse().with_context(|| format!("bad perforation factor in `{f}`"))?;
        let label = if let Ok(offset) = site.parse::<usize>() {
            // The innermost site whose span contains the offset.
            let idx = program
                .redseq_spans
                .iter()
                .enumerate()
                .filter(|(_, (s, e))| *s <= offset && offset < *e)
                .max_by_key(|(_, (s, _))| *s)
                .map(|(i, _)| i)
                .ok_or_else(|| anyhow!("no redseq at byte offset {offset}"))?;
            site_label(idx)
        } else {
            site.to_string()
        };
        out.insert(label, k);
    }
    Ok(out)
}

/// Compile options for one file: command-line flags over its sidecar.
fn options(c: &Common, input: &Path, program: &Program) -> Result<CompileOpts> {
    let side = sidecar_path(input);
    let sidecar: Sidecar = if side.exists() {
        let text = fs::read_to_string(&side).with_context(|| format!("reading {}", side.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", side.display()))?
    } else {
        Sidecar::default()
    };
    let base = CompileOpts {
        enable_sin_subst: c.subst_sin,
        perforation: perforation(&c.perforate, program)?,
        seed: c.flags.seed,
        eval: c.flags.eval(),
        ..CompileOpts::default()
    };
    let mut opts = sidecar.apply(&base)?;
    // Flags win over the sidecar.
    opts.perforation.extend(base.perforation);
    Ok(opts)
}

fn load(input: &Path) -> Result<Program> {
    let src = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    load_program(&src).with_context(|| input.display().to_string())
}

/// Exit status for a compile error: a refuted side condition is a failure,
/// anything else means the input could not be processed.
fn compile_status(e: &ProgramError) -> Status {
    match e {
        ProgramError::Compile(CompileError::SideConditionFailed { .. }) => Status::Failures,
        _ => Status::Broken,
    }
}

#[derive(serde::Serialize)]
struct DerivationDoc<'a> {
    schema: &'static str,
    program: String,
    sites: Vec<Site>,
    derivation: &'a Derivation,
}

#[derive(serde::Serialize)]
struct Site {
    label: String,
    start: usize,
    end: usize,
}

fn derivation_doc<'a>(input: &Path, program: &Program, r: &'a CompileResult) -> DerivationDoc<'a> {
    let sites = program
        .redseq_spans
        .iter()
        .enumerate()
        .map(|(i, &(start, end))| Site { label: site_label(i), start, end })
        .collect();
    DerivationDoc { schema: DERIVATION_SCHEMA, program: file_name(input), sites, derivation: &r.derivation }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn emit(c: &Common, input: &Path, program: &Program, r: &CompileResult) -> Result<()> {
    let dir = c.flags.out_dir(input);
    let stem = stem(input);
    let all = c.emit == Emit::All;
    if all || c.emit == Emit::Approx {
        write(&dir.join(format!("{stem}.approx.ax")), &format!("{}\n", r.approx))?;
    }
    if all || c.emit == Emit::Err {
        write(&dir.join(format!("{stem}.err.ax")), &format!("{}\n", r.err))?;
    }
    if all || c.emit == Emit::Derivation {
        let doc = derivation_doc(input, program, r);
        write(&dir.join(format!("{stem}.derivation.json")), &format!("{}\n", to_json(&doc)))?;
        if c.flags.json {
            println!("{}", to_json_line(&doc));
        }
    }
    Ok(())
}

fn run_compile(c: &Common) -> Result<Status> {
    let mut status = Status::Ok;
    for input in &c.inputs {
        let program = load(input)?;
        let opts = options(c, input, &program)?;
        match compile_program(&program, &opts, None) {
            Ok(r) => {
                emit(c, input, &program, &r)?;
                if !c.flags.json {
                    println!("{}: {} with error {}", file_name(input), r.family, r.err);
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", input.display());
                status = status.max(compile_status(&e));
            }
        }
    }
    Ok(status)
}

fn summarize(r: &CheckReport) -> String {
    let mut line = format!(
        "{}: {}/{} passed at {}, {} failed, {} inconclusive",
        r.program,
        r.passes,
        r.trials,
        r.family,
        r.failures.len(),
        r.inconclusive
    );
    if let Some(f) = r.failures.first() {
        line.push_str(&format!(
            "\n  first failure (seed {}, stream {}, trial {}): inputs [{}]; bound {} < distance {}",
            f.seed,
            f.stream,
            f.index,
            f.inputs.join("; "),
            f.bound,
            f.distance
        ));
    }
    line
}

fn run_check(c: &Common) -> Result<Status> {
    let mut status = Status::Ok;
    for input in &c.inputs {
        if input.is_dir() {
            status = status.max(check_dir(c, input)?);
            continue;
        }
        let program = load(input)?;
        let opts = options(c, input, &program)?;
        let r = match compile_program(&program, &opts, None) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}: {e}", input.display());
                status = status.max(compile_status(&e));
                continue;
            }
        };
        emit(c, input, &program, &r)?;
        let report = check_soundness(&file_name(input), &program.expr, &r, c.flags.trials, c.flags.seed, &opts.eval);
        let path = c.flags.out_dir(input).join(format!("{}.check.json", stem(input)));
        write(&path, &format!("{}\n", to_json(&report)))?;
        if c.flags.json {
            println!("{}", to_json_line(&report));
        } else {
            println!("{}", summarize(&report));
            eprintln!("  {:.2?}", report.wall_time);
        }
        if !report.passed() {
            status = status.max(Status::Failures);
        }
    }
    Ok(status)
}

fn check_dir(c: &Common, dir: &Path) -> Result<Status> {
    if !c.perforate.is_empty() {
        bail!("--perforate applies to single programs; use sidecar files in {}", dir.display());
    }
    let opts = CorpusOpts {
        compile: CompileOpts {
            enable_sin_subst: c.subst_sin,
            seed: c.flags.seed,
            eval: c.flags.eval(),
            ..CompileOpts::default()
        },
        trials: c.flags.trials,
        seed: c.flags.seed,
        weaken_by: None,
    };
    let report = check_rule_corpus(dir, &opts).with_context(|| format!("reading {}", dir.display()))?;
    let out = c.flags.out.clone().unwrap_or_else(|| dir.to_path_buf());
    write(&out.join("corpus.check.json"), &format!("{}\n", to_json(&report)))?;
    if c.flags.json {
        println!("{}", to_json_line(&report));
    } else {
        for p in &report.programs {
            match (&p.check, &p.error) {
                (Some(r), _) => println!("{}", summarize(r)),
                (None, Some(e)) => println!("{}: error: {e}", p.file),
                (None, None) => {}
            }
        }
        let rules: Vec<_> = report.rules_covered.iter().map(|r| r.name()).collect();
        println!("rules covered: {}", rules.join(" "));
    }
    Ok(if report.errors > 0 {
        Status::Broken
    } else if report.failures > 0 {
        Status::Failures
    } else {
        Status::Ok
    })
}

fn run_axioms(f: &Flags) -> Result<Status> {
    let fl = ApproxTy::FlBase;
    let fl_fl = ApproxTy::pi(fl.clone(), fl.clone());
    let cfg = CheckConfig { trials: f.trials, seed: f.seed, stream: 0, eval: f.eval() };
    let reports: Vec<AxiomReport> = vec![
        check_quant_axioms(&QuantInstance::reals(), f.trials, f.seed),
        check_quant_axioms(&QuantInstance::nats(), f.trials, f.seed),
        check_quant_axioms(&fl_fl.quant(), f.trials, f.seed),
        check_approx_axioms(&fl, &cfg),
        check_approx_axioms(&ApproxTy::NatBase, &cfg),
        check_approx_axioms(&ApproxTy::BoolBase, &cfg),
        check_approx_axioms(&fl_fl, &cfg),
    ];
    let mut status = Status::Ok;
    for (i, r) in reports.iter().enumerate() {
        if let Some(dir) = &f.out {
            write(&dir.join(format!("axioms-{i}.json")), &format!("{}\n", to_json(r)))?;
        }
        if f.json {
            println!("{}", to_json_line(r));
        } else {
            for a in &r.results {
                let status = serde_json::to_value(a.status).map_err(|e| anyhow!(e))?;
                println!("{} / {}: {}", r.suite, a.axiom, status.as_str().unwrap_or("?"));
                if let Some(w) = &a.witness {
                    println!("  counterexample: {w}");
                }
            }
        }
        if r.failures() > 0 {
            status = Status::Failures;
        }
    }
    Ok(status)
}
