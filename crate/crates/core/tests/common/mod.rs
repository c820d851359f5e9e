#![allow(dead_code)]

use std::collections::HashMap;

use conslaw_core::expr::{eval_numeric, Atom, FuncHead, Point};
use conslaw_core::{Context, DepId, Expression, IndepId, JetCoordinate, MultiIndex};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub fn config(cases: u32, seed: u64) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

/// `{t, x; u; v}`.
pub fn scalar_context() -> Context {
    Context::new(&["t", "x"], &["u"], &["v"]).unwrap()
}

pub fn coord(d: usize, counts: &[u32]) -> Expression {
    Expression::deriv(DepId(d), MultiIndex::from_counts(counts.to_vec()))
}

/// Atom pool over `{t, x; u; v}`: independents, `u` up to `max_order`,
/// optionally `v` and its first derivatives, optionally `sin x` and `exp t`.
pub fn pool(max_order: u32, adjoint: bool, functions: bool) -> Vec<Expression> {
    let mut atoms = vec![Expression::indep(IndepId(0)), Expression::indep(IndepId(1))];
    for idx in MultiIndex::up_to_order(2, max_order) {
        atoms.push(Expression::deriv(DepId(0), idx));
    }
    if adjoint {
        for idx in MultiIndex::up_to_order(2, 1) {
            atoms.push(Expression::deriv(DepId(1), idx));
        }
    }
    if functions {
        atoms.push(Expression::apply(FuncHead::Sin, Expression::indep(IndepId(1))));
        atoms.push(Expression::apply(FuncHead::Exp, Expression::indep(IndepId(0))));
    }
    atoms
}

/// Raw polynomial data: terms of `(coefficient numerator, denominator, factor indices)`.
pub type PolySpec = Vec<(i64, i64, Vec<usize>)>;

pub fn poly_spec(pool_len: usize, max_terms: usize, max_degree: usize) -> impl Strategy<Value = PolySpec> {
    prop::collection::vec((-4i64..=4, 1i64..=3, prop::collection::vec(0..pool_len, 0..=max_degree)), 0..=max_terms)
}

pub fn build(pool: &[Expression], spec: &PolySpec) -> Expression {
    let mut e = Expression::zero();
    for (n, d, factors) in spec {
        let mut term = Expression::ratio(*n, *d);
        for &f in factors {
            term = term * &pool[f % pool.len()];
        }
        e += term;
    }
    e
}

/// A smooth test field, `sum c * exp(a t + b x)`, whose derivatives are
/// computed in closed form independently of the library.
#[derive(Debug, Clone)]
pub struct Field(pub Vec<(f64, f64, f64)>);

impl Field {
    pub fn derivative(&self, counts: &[u32], t: f64, x: f64) -> f64 {
        let nt = counts.first().copied().unwrap_or(0) as i32;
        let nx = counts.get(1).copied().unwrap_or(0) as i32;
        self.0.iter().map(|&(c, a, b)| c * a.powi(nt) * b.powi(nx) * (a * t + b * x).exp()).sum()
    }
}

/// Evaluates `e` at `(t, x)` with every dependent replaced by its field.
pub fn eval_on_fields(e: &Expression, fields: &[Field], t: f64, x: f64) -> f64 {
    let mut point: Point = HashMap::new();
    for atom in e.variables() {
        let value = match &atom {
            Atom::Indep(i) => [t, x][i.0],
            Atom::Jet(c) => fields[c.dep.0].derivative(c.index.counts(), t, x),
            Atom::Func(..) => unreachable!("variables are never functions"),
        };
        point.insert(atom, value);
    }
    eval_numeric(e, &point).unwrap()
}

/// Fourth-order central difference of `f` along `t` (axis 0) or `x` (axis 1).
pub fn central_difference(f: impl Fn(f64, f64) -> f64, axis: usize, t: f64, x: f64) -> f64 {
    let h = 1e-3;
    let at = |s: f64| if axis == 0 { f(t + s, x) } else { f(t, x + s) };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

/// Numerical `D_t T^t + D_x T^x` compared against `rhs` at a few points and
/// random exponential fields. Returns the worst relative mismatch.
pub fn divergence_mismatch(flux: &[Expression], rhs: &Expression, n_fields: usize) -> f64 {
    let fields: Vec<Field> = (0..n_fields)
        .map(|k| {
            let s = k as f64;
            Field(vec![
                (0.7 + 0.1 * s, 0.3 - 0.2 * s, 0.5 + 0.1 * s),
                (-0.4, 0.2 + 0.1 * s, -0.6),
                (0.25, -0.35, 0.45 - 0.15 * s),
            ])
        })
        .collect();
    let mut worst: f64 = 0.0;
    for &(t, x) in &[(0.3, -0.4), (-0.7, 0.9), (1.1, 0.2)] {
        let mut numeric = 0.0;
        for (axis, component) in flux.iter().enumerate() {
            numeric += central_difference(|tt, xx| eval_on_fields(component, &fields, tt, xx), axis, t, x);
        }
        let exact = eval_on_fields(rhs, &fields, t, x);
        worst = worst.max((numeric - exact).abs() / (1.0 + exact.abs()));
    }
    worst
}

pub fn jet(d: usize, counts: &[u32]) -> JetCoordinate {
    JetCoordinate::new(DepId(d), MultiIndex::from_counts(counts.to_vec()))
}
