use serde_json::{json, Value};

use super::ParseError;
use crate::diffops::LinearDiffOperator;
use crate::expr::{Atom, Expression, FuncHead, Monomial, Rational};
use crate::jetspace::{Context, JetCoordinate, MultiIndex};

fn atom_to_json(a: &Atom, ctx: &Context) -> Value {
    match a {
        Atom::Indep(i) => json!({ "var": ctx.indep_name(*i) }),
        Atom::Jet(c) => {
            let mut parts = vec![ctx.dep_name(c.dep).to_string()];
            parts.extend(c.index.sequence().into_iter().map(|i| ctx.indep_name(i).to_string()));
            json!({ "jet": parts })
        }
        Atom::Func(h, arg) => json!({ "fn": { "head": h.name(), "arg": expression_to_json(arg, ctx) } }),
    }
}

/// Term list `[{"coeff": "p/q", "monomial": [{"atom": .., "power": n}]}]`.
pub fn expression_to_json(e: &Expression, ctx: &Context) -> Value {
    Value::Array(
        e.terms()
            .map(|(m, c)| {
                let factors: Vec<Value> =
                    m.factors().iter().map(|(a, p)| json!({ "atom": atom_to_json(a, ctx), "power": p })).collect();
                json!({ "coeff": c.to_string(), "monomial": factors })
            })
            .collect(),
    )
}

/// `[{"index": ["x"], "coeff": [...]}]` in canonical index order.
pub fn operator_to_json(op: &LinearDiffOperator, ctx: &Context) -> Value {
    Value::Array(
        op.terms()
            .map(|(j, c)| {
                let index: Vec<&str> = j.sequence().into_iter().map(|i| ctx.indep_name(i)).collect();
                json!({ "index": index, "coeff": expression_to_json(c, ctx) })
            })
            .collect(),
    )
}

fn bad(message: impl Into<String>) -> ParseError {
    ParseError::new(0, 0, message, Vec::new())
}

fn atom_from_json(v: &Value, ctx: &Context) -> Result<Atom, ParseError> {
    if let Some(name) = v.get("var").and_then(Value::as_str) {
        return ctx.indep(name).map(Atom::Indep).ok_or_else(|| bad(format!("unknown independent variable `{name}`")));
    }
    if let Some(parts) = v.get("jet").and_then(Value::as_array) {
        let names: Vec<&str> = parts.iter().filter_map(Value::as_str).collect();
        if names.len() != parts.len() || names.is_empty() {
            return Err(bad("a jet is a list of names"));
        }
        let dep = ctx.dep(names[0]).ok_or_else(|| bad(format!("unknown dependent variable `{}`", names[0])))?;
        let seq = names[1..]
            .iter()
            .map(|n| ctx.indep(n).ok_or_else(|| bad(format!("unknown independent variable `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Atom::Jet(JetCoordinate::new(dep, MultiIndex::from_sequence(&seq))));
    }
    if let Some(f) = v.get("fn") {
        let head = f
            .get("head")
            .and_then(Value::as_str)
            .and_then(FuncHead::from_name)
            .ok_or_else(|| bad("unknown function head"))?;
        let arg = expression_from_json(f.get("arg").unwrap_or(&Value::Null), ctx)?;
        return match Expression::apply(head, arg).terms().next() {
            Some((m, _)) if m.factors().len() == 1 => Ok(m.factors()[0].0.clone()),
            _ => Err(bad("function application folds to a constant")),
        };
    }
    Err(bad("an atom is one of var, jet or fn"))
}

pub fn expression_from_json(v: &Value, ctx: &Context) -> Result<Expression, ParseError> {
    let terms = v.as_array().ok_or_else(|| bad("an expression is a list of terms"))?;
    let mut out = Expression::zero();
    for t in terms {
        let coeff: Rational = t
            .get("coeff")
            .and_then(Value::as_str)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("term coefficient must be a rational string"))?;
        let factors = t.get("monomial").and_then(Value::as_array).ok_or_else(|| bad("term monomial must be a list"))?;
        let mut parts = Vec::new();
        for f in factors {
            let atom = atom_from_json(f.get("atom").unwrap_or(&Value::Null), ctx)?;
            let power = f
                .get("power")
                .and_then(Value::as_u64)
                .and_then(|p| u32::try_from(p).ok())
                .filter(|p| *p > 0)
                .ok_or_else(|| bad("power must be a positive integer"))?;
            parts.push((atom, power));
        }
        out += Expression::term(Monomial::from_factors(parts), coeff);
    }
    Ok(out)
}
