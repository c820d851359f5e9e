use num_traits::{One, Signed};

use crate::diffops::LinearDiffOperator;
use crate::expr::{Atom, Expression, Monomial};
use crate::jetspace::{Context, JetCoordinate, MultiIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    /// LaTeX-like display form; output only.
    Latex,
    Json,
}

/// Deterministic rendering; text output parses back to the same expression.
pub fn render(e: &Expression, ctx: &Context, format: Format) -> String {
    match format {
        Format::Text => text(e, ctx),
        Format::Latex => latex(e, ctx),
        Format::Json => super::expression_to_json(e, ctx).to_string(),
    }
}

fn jet_name(c: &JetCoordinate, ctx: &Context) -> String {
    ctx.coordinate_name(c)
}

fn atom_text(a: &Atom, ctx: &Context) -> String {
    match a {
        Atom::Indep(i) => ctx.indep_name(*i).to_string(),
        Atom::Jet(c) => jet_name(c, ctx),
        Atom::Func(h, arg) => format!("{}({})", h.name(), text(arg, ctx)),
    }
}

fn display_rank(a: &Atom) -> u8 {
    match a {
        Atom::Indep(_) => 0,
        Atom::Jet(_) => 1,
        Atom::Func(..) => 2,
    }
}

fn monomial_text(m: &Monomial, ctx: &Context) -> Vec<String> {
    let mut factors: Vec<&(Atom, u32)> = m.factors().iter().collect();
    factors.sort_by_key(|(a, _)| display_rank(a));
    factors
        .into_iter()
        .map(|(a, p)| match p {
            1 => atom_text(a, ctx),
            _ => format!("{}^{p}", atom_text(a, ctx)),
        })
        .collect()
}

fn text(e: &Expression, ctx: &Context) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (m, c)) in e.terms().enumerate() {
        let negative = c.is_negative();
        match (k, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let magnitude = c.abs();
        let mut parts = Vec::new();
        if !magnitude.is_one() || m.is_unit() {
            parts.push(magnitude.to_string());
        }
        parts.extend(monomial_text(m, ctx));
        out.push_str(&parts.join("*"));
    }
    out
}

fn latex_atom(a: &Atom, ctx: &Context) -> String {
    match a {
        Atom::Indep(i) => ctx.indep_name(*i).to_string(),
        Atom::Jet(c) if c.index.is_zero() => ctx.dep_name(c.dep).to_string(),
        Atom::Jet(c) => {
            let names: Vec<&str> = c.index.sequence().into_iter().map(|i| ctx.indep_name(i)).collect();
            let sep = if names.iter().all(|n| n.chars().count() == 1) { "" } else { "," };
            format!("{}_{{{}}}", ctx.dep_name(c.dep), names.join(sep))
        }
        Atom::Func(h, arg) => format!("\\{}\\left({}\\right)", h.name(), latex(arg, ctx)),
    }
}

fn latex(e: &Expression, ctx: &Context) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (m, c)) in e.terms().enumerate() {
        match (k, c.is_negative()) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let magnitude = c.abs();
        let mut parts = Vec::new();
        if !magnitude.is_one() || m.is_unit() {
            parts.push(if magnitude.denom().is_one() {
                magnitude.numer().to_string()
            } else {
                format!("\\frac{{{}}}{{{}}}", magnitude.numer(), magnitude.denom())
            });
        }
        let mut factors: Vec<&(Atom, u32)> = m.factors().iter().collect();
        factors.sort_by_key(|(a, _)| display_rank(a));
        for (a, p) in factors {
            parts.push(match p {
                1 => latex_atom(a, ctx),
                _ => format!("{}^{{{p}}}", latex_atom(a, ctx)),
            });
        }
        out.push_str(&parts.join(" "));
    }
    out
}

fn index_text(j: &MultiIndex, ctx: &Context) -> String {
    let names: Vec<&str> = j.sequence().into_iter().map(|i| ctx.indep_name(i)).collect();
    format!("D[{}]", names.join(","))
}

/// `{D[x]: t, D[]: 1/2*x}` in canonical index order.
pub fn render_operator(op: &LinearDiffOperator, ctx: &Context) -> String {
    let terms: Vec<String> = op.terms().map(|(j, c)| format!("{}: {}", index_text(j, ctx), text(c, ctx))).collect();
    format!("{{{}}}", terms.join(", "))
}
