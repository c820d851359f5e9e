mod common;

use std::collections::BTreeMap;

use common::*;
use conslaw_core::adjointcl::{formal_lagrangian, noether_adjoint, noether_flux, Equation, PdeSystem};
use conslaw_core::diffops::{divergence, euler, partial_jet, total_derivative, LinearDiffOperator};
use conslaw_core::dsl::{expression_from_json, expression_to_json};
use conslaw_core::dsl::{parse_expression, render, Format};
use conslaw_core::expr::exact_divide;
use conslaw_core::expr::{eval_numeric, Sampler};
use conslaw_core::symmetry::{apply_generator, characteristic, evolutionary_form, prolong_coefficient, Generator};
use conslaw_core::{DepId, Expression, IndepId, MultiIndex};
use proptest::prelude::*;

const T: IndepId = IndepId(0);
const X: IndepId = IndepId(1);

fn d(e: &Expression, i: IndepId) -> Expression {
    total_derivative(e, i).unwrap()
}

/// Point generator with polynomial `xi`, `phi` in `(t, x, u)`.
fn point_generator(specs: [&PolySpec; 3]) -> Generator {
    let ctx = scalar_context();
    let lie = [Expression::indep(T), Expression::indep(X), coord(0, &[])];
    let xi = vec![build(&lie, specs[0]), build(&lie, specs[1])];
    let phi = BTreeMap::from([(DepId(0), build(&lie, specs[2]))]);
    Generator::point(&ctx, xi, phi).unwrap()
}

fn lie_spec() -> impl Strategy<Value = PolySpec> {
    poly_spec(3, 3, 2)
}

proptest! {
    #![proptest_config(config(200, 0x0a11))]

    #[test]
    fn ring_axioms(a in poly_spec(12, 4, 2), b in poly_spec(12, 4, 2), c in poly_spec(12, 4, 2)) {
        let p = pool(2, false, true);
        let (a, b, c) = (build(&p, &a), build(&p, &b), build(&p, &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
        prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
        prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
        prop_assert_eq!(&a - &a, Expression::zero());
        prop_assert_eq!(&a * &Expression::one(), a.clone());
    }

    #[test]
    fn construction_order_is_immaterial(a in poly_spec(12, 5, 3)) {
        let p = pool(2, false, true);
        let forward = build(&p, &a);
        let reversed: PolySpec = a.iter().rev().map(|(n, d, f)| (*n, *d, f.iter().rev().copied().collect())).collect();
        prop_assert_eq!(forward, build(&p, &reversed));
    }

    #[test]
    fn divide_after_multiply_is_identity(q in poly_spec(10, 4, 2), den in poly_spec(10, 3, 2)) {
        let p = pool(2, true, false);
        let (q, den) = (build(&p, &q), build(&p, &den));
        prop_assume!(!den.is_zero());
        prop_assert_eq!(exact_divide(&(&q * &den), &den).unwrap(), q);
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(a in poly_spec(12, 4, 2), b in poly_spec(12, 4, 2), seed in 0u64..1000) {
        let p = pool(2, false, true);
        let (a, b) = (build(&p, &a), build(&p, &b));
        let mut vars = a.variables();
        vars.extend(b.variables());
        let point = Sampler::new(seed).point(&vars);
        let ev = |e: &Expression| eval_numeric(e, &point).unwrap();
        let close = |l: f64, r: f64| (l - r).abs() <= 1e-10 * (1.0 + l.abs().max(r.abs()));
        prop_assert!(close(ev(&(&a + &b)), ev(&a) + ev(&b)));
        prop_assert!(close(ev(&(&a * &b)), ev(&a) * ev(&b)));
    }

    #[test]
    fn total_derivatives_commute(a in poly_spec(13, 4, 3)) {
        let e = build(&pool(3, true, true), &a);
        prop_assert_eq!(d(&d(&e, X), T), d(&d(&e, T), X));
    }

    #[test]
    fn leibniz_rule(a in poly_spec(12, 4, 2), b in poly_spec(12, 4, 2)) {
        let p = pool(2, true, true);
        let (a, b) = (build(&p, &a), build(&p, &b));
        for i in [T, X] {
            prop_assert_eq!(d(&(&a * &b), i), d(&a, i) * &b + &a * d(&b, i));
        }
    }

    #[test]
    fn euler_annihilates_divergences(a in poly_spec(13, 4, 3), b in poly_spec(13, 4, 3)) {
        let ctx = scalar_context();
        let p = pool(2, true, true);
        let div = divergence(&[build(&p, &a), build(&p, &b)], &ctx).unwrap();
        prop_assert!(euler(&div, DepId(0)).unwrap().is_zero());
        prop_assert!(euler(&div, DepId(1)).unwrap().is_zero());
    }

    #[test]
    fn euler_and_total_derivative_are_linear(a in poly_spec(11, 4, 3), b in poly_spec(11, 4, 3), k in -5i64..=5) {
        let p = pool(2, false, true);
        let (a, b) = (build(&p, &a), build(&p, &b));
        let k = Expression::ratio(k, 3);
        let combo = &a + &k * &b;
        let u = DepId(0);
        prop_assert_eq!(euler(&combo, u).unwrap(), euler(&a, u).unwrap() + &k * euler(&b, u).unwrap());
        prop_assert_eq!(d(&combo, X), d(&a, X) + &k * d(&b, X));
    }

    #[test]
    fn euler_recovers_equation_from_vl(a in poly_spec(11, 4, 3)) {
        let e = build(&pool(2, false, true), &a);
        let l = coord(1, &[]) * &e;
        prop_assert_eq!(euler(&l, DepId(1)).unwrap(), e);
    }

    #[test]
    fn parse_render_round_trip(a in poly_spec(14, 5, 3)) {
        let ctx = scalar_context();
        let e = build(&pool(2, true, true), &a);
        let text = render(&e, &ctx, Format::Text);
        prop_assert_eq!(parse_expression(&text, &ctx).unwrap(), e.clone(), "{}", text);
        let json = expression_to_json(&e, &ctx);
        prop_assert_eq!(expression_from_json(&json, &ctx).unwrap(), e.clone());
        let json_text = render(&e, &ctx, Format::Json);
        let reparsed: serde_json::Value = serde_json::from_str(&json_text).unwrap();
        prop_assert_eq!(&reparsed, &json);
        prop_assert_eq!(render(&parse_expression(&text, &ctx).unwrap(), &ctx, Format::Text), text);
    }

    #[test]
    fn linear_operators_apply_termwise(c0 in poly_spec(2, 2, 2), c1 in poly_spec(2, 2, 2), a in poly_spec(12, 3, 2)) {
        let indep = [Expression::indep(T), Expression::indep(X)];
        let (c0, c1) = (build(&indep, &c0), build(&indep, &c1));
        let e = build(&pool(2, false, true), &a);
        let mut op = LinearDiffOperator::multiplication(c0.clone());
        op.add_term(MultiIndex::from_counts(vec![0, 2]), c1.clone());
        prop_assert_eq!(op.apply(&e).unwrap(), &c0 * &e + &c1 * d(&d(&e, X), X));
    }
}

proptest! {
    #![proptest_config(config(100, 0x9e4e))]

    #[test]
    fn prolongation_recursion(specs in [lie_spec(), lie_spec(), lie_spec()], which in 0usize..10) {
        let ctx = scalar_context();
        let g = point_generator([&specs[0], &specs[1], &specs[2]]);
        let index = MultiIndex::up_to_order(2, 2)[which % 6].clone();
        let c = jet(0, index.counts());
        let phi_j = prolong_coefficient(&g, &ctx, &c).unwrap();
        for i in [T, X] {
            let raised = c.raised(i);
            let mut expected = d(&phi_j, i);
            for k in [T, X] {
                let u_jk = Expression::jet(c.raised(k));
                expected -= d(&g.xi()[k.0], i) * u_jk;
            }
            prop_assert_eq!(prolong_coefficient(&g, &ctx, &raised).unwrap(), expected);
        }
    }

    #[test]
    fn generator_is_a_derivation(specs in [lie_spec(), lie_spec(), lie_spec()], a in poly_spec(12, 3, 2), b in poly_spec(12, 3, 2)) {
        let ctx = scalar_context();
        let g = point_generator([&specs[0], &specs[1], &specs[2]]);
        let p = pool(2, true, true);
        let (a, b) = (build(&p, &a), build(&p, &b));
        let x = |e: &Expression| apply_generator(&g, &ctx, e).unwrap();
        prop_assert_eq!(x(&(&a * &b)), x(&a) * &b + &a * x(&b));
    }

    #[test]
    fn evolutionary_form_keeps_characteristic(specs in [lie_spec(), lie_spec(), lie_spec()]) {
        let ctx = scalar_context();
        let g = point_generator([&specs[0], &specs[1], &specs[2]]);
        let ev = evolutionary_form(&g, &ctx);
        prop_assert_eq!(characteristic(&ev, &ctx), characteristic(&g, &ctx));
        let again = evolutionary_form(&ev, &ctx);
        prop_assert_eq!(again.phi(), ev.phi());
    }

    /// `Div T = X L + L Div xi + W F + xi^i v_i E` for `L = v E`, where `F`
    /// is minus the variational derivative and the last term accounts for the
    /// generator acting on `v` only through its characteristic.
    #[test]
    fn noether_identity(specs in [lie_spec(), lie_spec(), lie_spec()], rest in poly_spec(7, 3, 2), lead in poly_spec(5, 2, 1), evolutionary: bool) {
        let ctx = scalar_context();
        let (sys, e) = second_order_system(&rest, &lead);
        let point = point_generator([&specs[0], &specs[1], &specs[2]]);
        let g = if evolutionary { evolutionary_form(&point, &ctx) } else { point };
        let l = formal_lagrangian(&sys).unwrap().body;
        prop_assert_eq!(&l, &(coord(1, &[]) * &e));
        let flux = noether_flux(&sys, &g).unwrap().components;
        let w = characteristic(&g, &ctx)[&DepId(0)].clone();
        let f = noether_adjoint(&sys).unwrap()[0].1.clone();
        let xi = g.xi();
        let (div_xi, transport) = if xi.is_empty() {
            (Expression::zero(), Expression::zero())
        } else {
            (d(&xi[0], T) + d(&xi[1], X), (&xi[0] * coord(1, &[1]) + &xi[1] * coord(1, &[0, 1])) * &e)
        };
        let lhs = apply_generator(&g, &ctx, &l).unwrap() + &l * div_xi + transport;
        prop_assert_eq!(divergence(&flux, &ctx).unwrap(), lhs + w * f);
    }

    /// Flux components agree with the two-variable second-order formula in
    /// which the mixed partial is split evenly between the two components.
    #[test]
    fn flux_matches_second_order_formula(specs in [lie_spec(), lie_spec(), lie_spec()], rest in poly_spec(7, 3, 2), lead in poly_spec(5, 2, 1)) {
        let ctx = scalar_context();
        let (sys, _) = second_order_system(&rest, &lead);
        let g = point_generator([&specs[0], &specs[1], &specs[2]]);
        let l = formal_lagrangian(&sys).unwrap().body;
        let w = characteristic(&g, &ctx)[&DepId(0)].clone();
        let dl = |counts: &[u32]| partial_jet(&l, &jet(0, counts)).unwrap();
        let half = Expression::ratio(1, 2);
        let (l_t, l_x, l_tt, l_xx) = (dl(&[1]), dl(&[0, 1]), dl(&[2]), dl(&[0, 2]));
        let l_tx = &half * dl(&[1, 1]);
        let tau = &g.xi()[0];
        let xi = &g.xi()[1];
        let t_t = tau * &l
            + &w * (l_t - d(&l_tt, T) - d(&l_tx, X))
            + d(&w, T) * &l_tt
            + d(&w, X) * &l_tx;
        let t_x = xi * &l
            + &w * (l_x - d(&l_tx, T) - d(&l_xx, X))
            + d(&w, T) * &l_tx
            + d(&w, X) * &l_xx;
        prop_assert_eq!(noether_flux(&sys, &g).unwrap().components, vec![t_t, t_x]);
    }
}

/// `E = c u_xx + P` with `c` in `(t, x, u)` nonzero and `P` free of `u_xx`.
fn second_order_system(rest: &PolySpec, lead: &PolySpec) -> (PdeSystem, Expression) {
    let ctx = scalar_context();
    let lower = [
        Expression::indep(T),
        Expression::indep(X),
        coord(0, &[]),
        coord(0, &[1]),
        coord(0, &[0, 1]),
        coord(0, &[2]),
        coord(0, &[1, 1]),
    ];
    let mut c = Expression::one() + build(&lower[..5], lead);
    if c.is_zero() {
        c = Expression::one();
    }
    let e = c * coord(0, &[0, 2]) + build(&lower, rest);
    let eq = Equation { name: "e".into(), expr: e.clone(), leading: jet(0, &[0, 2]) };
    (PdeSystem::new(ctx, vec![eq]).unwrap(), e)
}

#[test]
fn independent_oracle_confirms_a_divergence_identity() {
    let ctx = scalar_context();
    let p = |s: &str| parse_expression(s, &ctx).unwrap();
    let flux = [p("u^2*D(u,x)*v"), p("sin(x)*D(u,t)*D(v,x)")];
    let div = divergence(&flux, &ctx).unwrap();
    assert!(divergence_mismatch(&flux, &div, 2) < 1e-7);
    assert!(divergence_mismatch(&flux, &(div + p("D(u,x)")), 2) > 1e-3);
}

proptest! {
    #![proptest_config(config(200, 0x1d3c))]

    #[test]
    fn index_canonicalization_ignores_order(seq in prop::collection::vec(0usize..3, 0..7), swaps in prop::collection::vec((0usize..7, 0usize..7), 0..5)) {
        let seq: Vec<IndepId> = seq.into_iter().map(IndepId).collect();
        let mut shuffled = seq.clone();
        for (i, j) in swaps {
            if i < shuffled.len() && j < shuffled.len() {
                shuffled.swap(i, j);
            }
        }
        let a = MultiIndex::from_sequence(&seq);
        prop_assert_eq!(&a, &MultiIndex::from_sequence(&shuffled));
        prop_assert_eq!(a.clone().canonicalize(), a.clone());
        prop_assert_eq!(a.order() as usize, seq.len());
    }

    #[test]
    fn coordinate_count_is_binomial(n in 1usize..4, p in 1usize..3, k in 0u32..4) {
        let indep = ["t", "x", "y"];
        let deps = ["u", "w"];
        let ctx = conslaw_core::Context::new(&indep[..n], &deps[..p], &[]).unwrap();
        let binom = (1..=n as u64).fold(1u64, |acc, i| acc * (k as u64 + i) / i);
        prop_assert_eq!(ctx.enumerate_coordinates(k).len() as u64, p as u64 * binom);
    }
}

proptest! {
    #![proptest_config(config(100, 0xc0f))]

    /// Any generator that scales the heat equation has `X(E) = mu1 E` exactly.
    #[test]
    fn conformal_factor_is_exact(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, k in -3i64..=3) {
        use conslaw_core::symmetry::conformal_factor;
        let ctx = scalar_context();
        let (t, x, u) = (Expression::indep(T), Expression::indep(X), coord(0, &[]));
        // Combination of time shift, space shift, Galilean boost, scaling and u-scaling.
        let xi = vec![
            Expression::int(a) + Expression::int(2 * c) * &t,
            Expression::int(b) + Expression::int(c) * &x + Expression::int(2 * k) * &t,
        ];
        let phi = BTreeMap::from([(DepId(0), (Expression::int(a + b) - Expression::int(k) * &x) * &u)]);
        let g = Generator::point(&ctx, xi, phi).unwrap();
        let e = coord(0, &[1]) - coord(0, &[0, 2]);
        let f = conformal_factor(&g, &ctx, &e).unwrap();
        prop_assert!((apply_generator(&g, &ctx, &e).unwrap() - &f.mu1 * &e).is_zero());
        prop_assert_eq!(&f.lambda, &(&f.mu1 + &f.mu2));
    }
}
