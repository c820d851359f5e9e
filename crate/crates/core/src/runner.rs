//! Executes problem-file tasks, checks their expectations and renders the
//! resulting reports.

use serde_json::{json, Map, Value as Json};

use crate::adjointcl::{
    adjoint_system, decompose_prop1, decompose_prop2, multiplier_from_adjoint_solution, noether_flux,
    verify_conservation, verify_multiplier, DecompositionReport, Factor, ResidualStatus,
};
use crate::diffops::LinearDiffOperator;
use crate::dsl::{
    expression_to_json, operator_to_json, render, render_operator, Directive, ExpectValue, Format, Problem, Task,
};
use crate::error::{Error, Result};
use crate::expr::{Expression, ZeroTest};
use crate::jetspace::Context;
use crate::oracle::{oracle_compare, OracleReport};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub zero_test: ZeroTest,
    pub max_op_order: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { zero_test: ZeroTest::default(), max_op_order: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Label(String),
    Expr(Expression),
    List(Vec<(String, Expression)>),
    Operators(Vec<(String, LinearDiffOperator)>),
}

/// Named results of one directive, in display order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskOutput {
    pub entries: Vec<(String, Value)>,
    /// Checks that hold unless an expectation says otherwise.
    pub defaults: Vec<(String, bool)>,
    /// `(lhs, rhs)` pairs claimed equal, compared by the oracle.
    pub identities: Vec<(String, Expression, Expression)>,
}

impl TaskOutput {
    fn push(&mut self, key: &str, value: Value) {
        self.entries.push((key.to_string(), value));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub key: String,
    pub passed: bool,
    pub detail: String,
    pub oracle: Option<OracleReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport {
    pub problem: String,
    pub line: usize,
    pub task: String,
    pub output: Option<TaskOutput>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl TaskReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

pub fn describe(d: &Directive) -> String {
    match d {
        Directive::Adjoint => "adjoint".into(),
        Directive::Flux { generator } => format!("flux {generator}"),
        Directive::Decompose1 { generator } => format!("decompose1 {generator}"),
        Directive::Decompose2 { generator, max_order } => match max_order {
            Some(k) => format!("decompose2 {generator} {k}"),
            None => format!("decompose2 {generator}"),
        },
        Directive::Multiplier { generator, solution } => format!("multiplier {generator} {solution}"),
        Directive::Verify { generator, solution } => match solution {
            Some(s) => format!("verify {generator} {s}"),
            None => format!("verify {generator}"),
        },
        Directive::Annihilate { .. } => "annihilate".into(),
    }
}

fn generator<'a>(p: &'a Problem, name: &str) -> Result<&'a crate::symmetry::Generator> {
    p.generator(name).ok_or_else(|| Error::InvalidGenerator(format!("unknown generator `{name}`")))
}

fn dep_labels(p: &Problem) -> Vec<String> {
    p.context.originals().map(|d| p.context.dep_name(d).to_string()).collect()
}

fn eq_labels(p: &Problem) -> Vec<String> {
    p.system.equations().iter().map(|e| e.name.clone()).collect()
}

fn labelled(labels: Vec<String>, values: impl IntoIterator<Item = Expression>) -> Value {
    Value::List(labels.into_iter().zip(values).collect())
}

fn decomposition_output(p: &Problem, report: &DecompositionReport) -> Result<TaskOutput> {
    let mut out = TaskOutput::default();
    out.push("W", labelled(dep_labels(p), report.characteristic.values().cloned()));
    out.push("F", labelled(dep_labels(p), report.adjoint.iter().map(|(_, f)| f.clone())));
    match &report.factor {
        Factor::Multipliers(qs) => out.push("Q", labelled(eq_labels(p), qs.iter().cloned())),
        Factor::Operators(ops) => {
            out.push("R", Value::Operators(eq_labels(p).into_iter().zip(ops.iter().cloned()).collect()));
            out.push("lambda", labelled(eq_labels(p), ops.iter().map(LinearDiffOperator::zeroth)));
        }
    }
    if let Some(cmp) = &report.prop1 {
        if let Some(cf) = &cmp.conformal {
            out.push("mu1", Value::Expr(cf.mu1.clone()));
            out.push("mu2", Value::Expr(cf.mu2.clone()));
            out.push("lambda", Value::Expr(cf.lambda.clone()));
        }
        if let Some(pred) = &cmp.predicted {
            out.push("predicted", labelled(eq_labels(p), pred.iter().cloned()));
        }
        out.push("agree", Value::Bool(cmp.agree));
    }
    let divisible = report.status == ResidualStatus::Zero;
    out.push("residual_status", Value::Label(report.status.as_str().into()));
    out.push("residual", Value::Expr(report.remainder.clone()));
    out.push("divisible", Value::Bool(divisible));
    out.defaults.push(("divisible".into(), true));
    out.identities.push((
        "reassembly".into(),
        report.w_dot_f() + report.factor_part(&p.system)?,
        report.divergence.clone() - &report.remainder,
    ));
    Ok(out)
}

/// Runs one directive on a problem.
pub fn execute(p: &Problem, d: &Directive, cfg: &RunConfig) -> Result<TaskOutput> {
    let sys = &p.system;
    let ctx = &p.context;
    let mut out = TaskOutput::default();
    match d {
        Directive::Adjoint => {
            let adj = adjoint_system(sys)?;
            out.push("F", labelled(dep_labels(p), adj.iter().map(|a| a.expr.clone())));
            out.push("sign", Value::Label(adj.iter().map(|a| a.sign.to_string()).collect::<Vec<_>>().join(",")));
        }
        Directive::Flux { generator: g } => {
            let flux = noether_flux(sys, generator(p, g)?)?;
            let names = ctx.independents().iter().map(|v| v.name.clone()).collect();
            out.push("T", labelled(names, flux.components));
        }
        Directive::Decompose1 { generator: g } => {
            let report = decompose_prop1(sys, generator(p, g)?)?;
            out = decomposition_output(p, &report)?;
        }
        Directive::Decompose2 { generator: g, max_order } => {
            let k = max_order.unwrap_or(cfg.max_op_order);
            let report = decompose_prop2(sys, generator(p, g)?, k)?;
            out = decomposition_output(p, &report)?;
        }
        Directive::Multiplier { generator: g, solution } => {
            let report = decompose_prop1(sys, generator(p, g)?)?;
            let sol =
                p.solution(solution).ok_or_else(|| Error::InvalidBinding(format!("unknown solution `{solution}`")))?;
            let q = multiplier_from_adjoint_solution(&report, sol)?;
            let (status, _) = verify_multiplier(&q, sys, &cfg.zero_test)?;
            out.push("Q", labelled(eq_labels(p), q));
            out.push("status", Value::Label(status.as_str().into()));
            out.push("verified", Value::Bool(status.passed()));
            out.defaults.push(("verified".into(), true));
        }
        Directive::Annihilate { multipliers } => {
            let (status, residuals) = verify_multiplier(multipliers, sys, &cfg.zero_test)?;
            out.push("Q", labelled(eq_labels(p), multipliers.iter().cloned()));
            out.push("euler", labelled(dep_labels(p), residuals));
            out.push("status", Value::Label(status.as_str().into()));
            out.push("verified", Value::Bool(status.passed()));
            out.defaults.push(("verified".into(), true));
        }
        Directive::Verify { generator: g, solution } => {
            let flux = noether_flux(sys, generator(p, g)?)?;
            let sol = match solution {
                Some(s) => Some(p.solution(s).ok_or_else(|| Error::InvalidBinding(format!("unknown solution `{s}`")))?),
                None => None,
            };
            let report = verify_conservation(&flux, sys, sol, &cfg.zero_test)?;
            out.push("divergence", Value::Expr(report.divergence.clone()));
            out.push("residual", Value::Expr(report.reduced.clone()));
            out.push("residual_status", Value::Label(report.status.as_str().into()));
            out.push("nontrivial", Value::Bool(report.nontrivial));
            out.push("conserved", Value::Bool(report.conserved()));
            out.defaults.push(("nontrivial".into(), true));
            out.defaults.push(("conserved".into(), true));
        }
    }
    Ok(out)
}

fn expr_check(key: &str, actual: &Expression, expected: &Expression, ctx: &Context, cfg: &RunConfig) -> Check {
    let equal = actual == expected;
    let oracle = oracle_compare(actual, expected, &cfg.zero_test);
    let detail = if equal {
        render(actual, ctx, Format::Text)
    } else {
        format!("expected {} but got {}", render(expected, ctx, Format::Text), render(actual, ctx, Format::Text))
    };
    Check { key: key.into(), passed: equal && oracle.passed, detail, oracle: Some(oracle) }
}

fn failed(key: &str, detail: impl Into<String>) -> Check {
    Check { key: key.into(), passed: false, detail: detail.into(), oracle: None }
}

fn check_expectation(
    key: &str,
    expected: &ExpectValue,
    out: &TaskOutput,
    ctx: &Context,
    cfg: &RunConfig,
) -> Vec<Check> {
    let Some(actual) = out.get(key) else {
        return vec![failed(key, format!("this task produces no `{key}`"))];
    };
    match (expected, actual) {
        (ExpectValue::Bool(e), Value::Bool(a)) => {
            vec![Check { key: key.into(), passed: e == a, detail: format!("expected {e}, got {a}"), oracle: None }]
        }
        (ExpectValue::Expr(e), Value::Expr(a)) => vec![expr_check(key, a, e, ctx, cfg)],
        (ExpectValue::Expr(e), Value::List(items)) if items.len() == 1 => {
            vec![expr_check(&format!("{key}[{}]", items[0].0), &items[0].1, e, ctx, cfg)]
        }
        (ExpectValue::List(es), Value::List(items)) => {
            if es.len() != items.len() {
                return vec![failed(key, format!("expected {} entries, got {}", es.len(), items.len()))];
            }
            items.iter().zip(es).map(|((label, a), e)| expr_check(&format!("{key}[{label}]"), a, e, ctx, cfg)).collect()
        }
        (ExpectValue::Operators(es), Value::Operators(items)) => {
            if es.len() != items.len() {
                return vec![failed(key, format!("expected {} operators, got {}", es.len(), items.len()))];
            }
            let mut checks = Vec::new();
            for ((label, a), e) in items.iter().zip(es) {
                let mut indices: Vec<_> = a.terms().map(|(j, _)| j.clone()).collect();
                indices.extend(e.terms().map(|(j, _)| j.clone()));
                indices.sort();
                indices.dedup();
                let mut ok = true;
                let mut worst: Option<OracleReport> = None;
                for j in &indices {
                    let c = expr_check(key, &a.coefficient(j), &e.coefficient(j), ctx, cfg);
                    ok &= c.passed;
                    if let Some(o) = c.oracle {
                        if worst.as_ref().is_none_or(|w| o.max_residual >= w.max_residual) {
                            worst = Some(o);
                        }
                    }
                }
                let detail = if ok {
                    render_operator(a, ctx)
                } else {
                    format!("expected {} but got {}", render_operator(e, ctx), render_operator(a, ctx))
                };
                checks.push(Check { key: format!("{key}[{label}]"), passed: ok, detail, oracle: worst });
            }
            checks
        }
        _ => vec![failed(key, "expectation has the wrong shape for this value")],
    }
}

/// Executes a task and checks its expectations, its default claims and
/// the oracle on every identity it relies on.
pub fn run_task(problem_name: &str, p: &Problem, task: &Task, cfg: &RunConfig) -> TaskReport {
    let mut report = TaskReport {
        problem: problem_name.to_string(),
        line: task.line,
        task: describe(&task.directive),
        output: None,
        checks: Vec::new(),
        error: None,
    };
    let out = match execute(p, &task.directive, cfg) {
        Ok(out) => out,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    for exp in &task.expect {
        report.checks.extend(check_expectation(&exp.key, &exp.value, &out, &p.context, cfg));
    }
    for (key, want) in &out.defaults {
        if task.expect.iter().any(|e| e.key == *key) {
            continue;
        }
        report.checks.extend(check_expectation(key, &ExpectValue::Bool(*want), &out, &p.context, cfg));
    }
    for (key, lhs, rhs) in &out.identities {
        let oracle = oracle_compare(lhs, rhs, &cfg.zero_test);
        report.checks.push(Check {
            key: key.clone(),
            passed: lhs == rhs && oracle.passed,
            detail: if lhs == rhs { "exact".into() } else { "symbolic mismatch".into() },
            oracle: Some(oracle),
        });
    }
    report.output = Some(out);
    report
}

pub fn run_problem(problem_name: &str, p: &Problem, cfg: &RunConfig) -> Vec<TaskReport> {
    p.tasks.iter().map(|t| run_task(problem_name, p, t, cfg)).collect()
}

// rendering

pub fn value_text(v: &Value, ctx: &Context) -> Vec<(String, String)> {
    match v {
        Value::Bool(b) => vec![(String::new(), b.to_string())],
        Value::Label(s) => vec![(String::new(), s.clone())],
        Value::Expr(e) => vec![(String::new(), render(e, ctx, Format::Text))],
        Value::List(items) => items.iter().map(|(l, e)| (format!("[{l}]"), render(e, ctx, Format::Text))).collect(),
        Value::Operators(items) => items.iter().map(|(l, op)| (format!("[{l}]"), render_operator(op, ctx))).collect(),
    }
}

pub fn value_json(v: &Value, ctx: &Context) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Label(s) => json!(s),
        Value::Expr(e) => expression_to_json(e, ctx),
        Value::List(items) => Json::Array(
            items
                .iter()
                .map(|(l, e)| json!({ "label": l, "text": render(e, ctx, Format::Text), "terms": expression_to_json(e, ctx) }))
                .collect(),
        ),
        Value::Operators(items) => Json::Array(
            items
                .iter()
                .map(|(l, op)| json!({ "label": l, "text": render_operator(op, ctx), "terms": operator_to_json(op, ctx) }))
                .collect(),
        ),
    }
}

pub fn output_json(out: &TaskOutput, ctx: &Context) -> Json {
    let mut m = Map::new();
    for (k, v) in &out.entries {
        m.insert(k.clone(), value_json(v, ctx));
    }
    Json::Object(m)
}

fn oracle_json(o: &OracleReport) -> Json {
    json!({
        "points": o.points,
        "max_residual": o.max_residual,
        "tolerance": o.tolerance,
        "passed": o.passed,
    })
}

pub fn report_json(r: &TaskReport, ctx: &Context) -> Json {
    let checks: Vec<Json> = r
        .checks
        .iter()
        .map(|c| {
            json!({
                "key": c.key,
                "passed": c.passed,
                "detail": c.detail,
                "oracle": c.oracle.as_ref().map(oracle_json),
            })
        })
        .collect();
    json!({
        "schema": SCHEMA,
        "problem": r.problem,
        "line": r.line,
        "task": r.task,
        "passed": r.passed(),
        "output": r.output.as_ref().map(|o| output_json(o, ctx)),
        "checks": checks,
        "error": r.error,
    })
}

pub fn report_text(r: &TaskReport, ctx: &Context) -> String {
    let mut s = format!("{}:{} {}: {}\n", r.problem, r.line, r.task, if r.passed() { "PASS" } else { "FAIL" });
    if let Some(err) = &r.error {
        s.push_str(&format!("  error: {err}\n"));
    }
    if let Some(out) = &r.output {
        for (k, v) in &out.entries {
            for (suffix, text) in value_text(v, ctx) {
                s.push_str(&format!("  {k}{suffix} = {text}\n"));
            }
        }
    }
    for c in &r.checks {
        let oracle = c
            .oracle
            .as_ref()
            .map(|o| format!(" [oracle max residual {:.3e} over {} points]", o.max_residual, o.points))
            .unwrap_or_default();
        s.push_str(&format!(
            "  check {}: {}{}{}\n",
            c.key,
            if c.passed { "ok" } else { "FAILED" },
            if c.passed { String::new() } else { format!(" ({})", c.detail) },
            oracle
        ));
    }
    s
}
