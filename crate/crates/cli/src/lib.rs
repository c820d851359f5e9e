//! `conslaw` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails,
//! 2 for usage, input and parse errors.

use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use conslaw_core::adjointcl::reduce_on_solutions;
use conslaw_core::corpus::{corpus_source, run_sources, CORPUS};
use conslaw_core::dsl::{parse_expression, parse_problem, render, Directive, Format, Problem, Task};
use conslaw_core::expr::ZeroTest;
use conslaw_core::oracle::oracle_compare;
use conslaw_core::runner::{report_json, report_text, run_task, value_text, RunConfig, Value, SCHEMA};
use conslaw_core::symmetry::GeneratorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "conslaw",
    version,
    about = "Adjoint systems, Noether fluxes and divergence decompositions for PDE systems"
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = OutputFormat::Text, global = true)]
    pub format: OutputFormat,
    /// Random points per numeric identity check.
    #[arg(long, default_value_t = 20, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub oracle_points: u64,
    /// Relative tolerance of the numeric check.
    #[arg(long, default_value_t = 1e-8, global = true, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, default_value_t = 0x5eed, global = true)]
    pub seed: u64,
    /// Highest derivative order of recursion-operator coefficients.
    #[arg(long, default_value_t = 3, global = true)]
    pub max_op_order: u32,
    #[command(subcommand)]
    pub command: Command,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Problem file, or the name of a built-in example.
    pub file: String,
    #[arg(long, short)]
    pub generator: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the adjoint system.
    Adjoint { file: String },
    /// Print the conserved vector built from a generator.
    Flux(GeneratorArgs),
    /// Split the flux divergence into W F plus multiplier or operator terms.
    Decompose(GeneratorArgs),
    /// Multiplier from an adjoint solution, or explicit multipliers via --check.
    Multiplier {
        file: String,
        #[arg(long, short, requires = "solution", conflicts_with = "check")]
        generator: Option<String>,
        #[arg(long, short)]
        solution: Option<String>,
        /// Explicit multiplier, one per equation.
        #[arg(long, num_args = 1..)]
        check: Vec<String>,
    },
    /// Check that the flux divergence vanishes on solutions but not identically.
    Verify {
        #[command(flatten)]
        args: GeneratorArgs,
        #[arg(long, short)]
        solution: Option<String>,
    },
    /// Reduce an expression modulo the equations.
    Reduce {
        file: String,
        #[arg(long, short)]
        expr: String,
    },
    /// Run every task in the given problem files, or the built-in examples.
    Corpus { files: Vec<String> },
    /// Compare two expressions numerically at seeded random points.
    Oracle {
        file: String,
        #[arg(long)]
        lhs: String,
        #[arg(long, default_value = "0")]
        rhs: String,
    },
}

impl Cli {
    pub fn config(&self) -> RunConfig {
        RunConfig {
            zero_test: ZeroTest { points: self.oracle_points as usize, tolerance: self.tol, seed: self.seed },
            max_op_order: self.max_op_order,
        }
    }
}

struct Failure(i32, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

/// Reads a problem file; a bare built-in name such as `heat` or `heat.prob`
/// falls back to the embedded example when no such file exists.
fn read_source(file: &str) -> Result<(String, String), Failure> {
    let path = Path::new(file);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(file).to_string();
    match std::fs::read_to_string(path) {
        Ok(text) => Ok((stem, text)),
        Err(e) => match corpus_source(&stem) {
            Some(src) if path.parent().is_none_or(|p| p.as_os_str().is_empty()) => Ok((stem, src.to_string())),
            _ => Err(usage(format!("{file}: {e}"))),
        },
    }
}

fn load(file: &str) -> Result<(String, Problem), Failure> {
    let (name, text) = read_source(file)?;
    let problem = parse_problem(&text).map_err(|e| usage(format!("{file}:{e}")))?;
    Ok((name, problem))
}

fn single_task(cli: &Cli, file: &str, directive: Directive, out: &mut dyn Write, bare: bool) -> Result<i32, Failure> {
    let (name, problem) = load(file)?;
    let task = Task { directive, expect: Vec::new(), line: 0 };
    let report = run_task(&name, &problem, &task, &cli.config());
    let ctx = &problem.context;
    match cli.format {
        OutputFormat::Json => writeln!(out, "{}", report_json(&report, ctx)).ok(),
        OutputFormat::Text => {
            if let Some(err) = &report.error {
                return Err(Failure(2, format!("{file}: {err}")));
            }
            let output = report.output.as_ref().expect("successful task has output");
            if bare {
                for (_, v) in &output.entries {
                    if let Value::List(items) = v {
                        for (_, e) in items {
                            writeln!(out, "{}", render(e, ctx, Format::Text)).ok();
                        }
                        break;
                    }
                }
            } else {
                for (k, v) in &output.entries {
                    for (suffix, text) in value_text(v, ctx) {
                        writeln!(out, "{k}{suffix} = {text}").ok();
                    }
                }
                for c in report.checks.iter().filter(|c| !c.passed) {
                    writeln!(out, "check {} FAILED: {}", c.key, c.detail).ok();
                }
            }
            Some(())
        }
    };
    if report.error.is_some() {
        return Ok(2);
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn run_corpus(cli: &Cli, files: &[String], out: &mut dyn Write) -> Result<i32, Failure> {
    let entries: Vec<(String, String)> = if files.is_empty() {
        CORPUS.iter().map(|e| (e.name.to_string(), e.source.to_string())).collect()
    } else {
        files.iter().map(|f| read_source(f)).collect::<Result<_, _>>()?
    };
    let reports = run_sources(&entries, &cli.config());
    let mut code = 0;
    let mut total = 0;
    let mut passed = 0;
    for entry in &reports {
        if let Some(err) = &entry.parse_error {
            match cli.format {
                OutputFormat::Json => writeln!(
                    out,
                    "{}",
                    json!({ "schema": SCHEMA, "problem": entry.name, "passed": false, "error": err })
                )
                .ok(),
                OutputFormat::Text => writeln!(out, "{}: parse error: {err}", entry.name).ok(),
            };
            code = 2;
            continue;
        }
        let ctx = &entry.problem.as_ref().expect("parsed").context;
        for task in &entry.tasks {
            total += 1;
            if task.passed() {
                passed += 1;
            } else if code == 0 {
                code = 1;
            }
            match cli.format {
                OutputFormat::Json => writeln!(out, "{}", report_json(task, ctx)).ok(),
                OutputFormat::Text => write!(out, "{}", report_text(task, ctx)).ok(),
            };
        }
    }
    if cli.format == OutputFormat::Text {
        writeln!(out, "{passed}/{total} tasks passed").ok();
    }
    Ok(code)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match &cli.command {
        Command::Adjoint { file } => single_task(cli, file, Directive::Adjoint, out, true),
        Command::Flux(a) => single_task(cli, &a.file, Directive::Flux { generator: a.generator.clone() }, out, false),
        Command::Decompose(a) => {
            let (_, problem) = load(&a.file)?;
            let g =
                problem.generator(&a.generator).ok_or_else(|| usage(format!("unknown generator `{}`", a.generator)))?;
            let directive = match g.kind() {
                GeneratorKind::Point => Directive::Decompose1 { generator: a.generator.clone() },
                GeneratorKind::Evolutionary => {
                    Directive::Decompose2 { generator: a.generator.clone(), max_order: None }
                }
            };
            single_task(cli, &a.file, directive, out, false)
        }
        Command::Multiplier { file, generator, solution, check } => {
            let directive = match (generator, solution) {
                (Some(g), Some(s)) => Directive::Multiplier { generator: g.clone(), solution: s.clone() },
                _ if !check.is_empty() => {
                    let (_, problem) = load(file)?;
                    let multipliers = check
                        .iter()
                        .map(|s| parse_expression(s, &problem.context).map_err(|e| usage(format!("--check: {e}"))))
                        .collect::<Result<_, _>>()?;
                    Directive::Annihilate { multipliers }
                }
                _ => return Err(usage("give --generator with --solution, or --check")),
            };
            single_task(cli, file, directive, out, false)
        }
        Command::Verify { args, solution } => single_task(
            cli,
            &args.file,
            Directive::Verify { generator: args.generator.clone(), solution: solution.clone() },
            out,
            false,
        ),
        Command::Reduce { file, expr } => {
            let (_, problem) = load(file)?;
            let e = parse_expression(expr, &problem.context).map_err(|e| usage(format!("--expr: {e}")))?;
            let reduced = reduce_on_solutions(&e, &problem.system).map_err(|e| usage(e.to_string()))?;
            let ctx = &problem.context;
            match cli.format {
                OutputFormat::Text => writeln!(out, "{}", render(&reduced, ctx, Format::Text)).ok(),
                OutputFormat::Json => writeln!(
                    out,
                    "{}",
                    json!({
                        "schema": SCHEMA,
                        "command": "reduce",
                        "text": render(&reduced, ctx, Format::Text),
                        "terms": serde_json::from_str::<Json>(&render(&reduced, ctx, Format::Json)).expect("valid json"),
                    })
                )
                .ok(),
            };
            Ok(0)
        }
        Command::Corpus { files } => run_corpus(cli, files, out),
        Command::Oracle { file, lhs, rhs } => {
            let (_, problem) = load(file)?;
            let ctx = &problem.context;
            let l = parse_expression(lhs, ctx).map_err(|e| usage(format!("--lhs: {e}")))?;
            let r = parse_expression(rhs, ctx).map_err(|e| usage(format!("--rhs: {e}")))?;
            let report = oracle_compare(&l, &r, &cli.config().zero_test);
            let exact = l == r;
            match cli.format {
                OutputFormat::Text => writeln!(
                    out,
                    "{}: max residual {:.3e} over {} points (tolerance {:e}); symbolic {}",
                    if report.passed { "pass" } else { "fail" },
                    report.max_residual,
                    report.points,
                    report.tolerance,
                    if exact { "equal" } else { "different" }
                )
                .ok(),
                OutputFormat::Json => writeln!(
                    out,
                    "{}",
                    json!({
                        "schema": SCHEMA,
                        "command": "oracle",
                        "points": report.points,
                        "max_residual": report.max_residual,
                        "tolerance": report.tolerance,
                        "passed": report.passed,
                        "symbolic_equal": exact,
                    })
                )
                .ok(),
            };
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

/// Runs the command line `args` (including the program name), writing
/// reports to `out` and diagnostics to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                write!(out, "{text}").ok();
            } else {
                write!(err, "{text}").ok();
            }
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            writeln!(err, "error: {msg}").ok();
            code
        }
    }
}
