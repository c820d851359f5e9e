//! Seeded random-point comparison of two expressions, used to back every
//! symbolic equality with an independent numeric evaluation.

use crate::expr::{eval_with_scale, Expression, Sampler, ZeroTest};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evaluates both sides separately at `cfg.points` seeded points and
/// compares them with `|l - r| <= tol * (1 + scale)`.
pub fn oracle_compare(lhs: &Expression, rhs: &Expression, cfg: &ZeroTest) -> OracleReport {
    let mut vars = lhs.variables();
    vars.extend(rhs.variables());
    let mut sampler = Sampler::new(cfg.seed);
    let points = cfg.points.max(1);
    let mut max_residual: f64 = 0.0;
    let mut passed = true;
    for _ in 0..points {
        let point = sampler.point(&vars);
        match (eval_with_scale(lhs, &point), eval_with_scale(rhs, &point)) {
            (Ok((l, ls)), Ok((r, rs))) => {
                let residual = (l - r).abs();
                max_residual = max_residual.max(residual);
                passed &= cfg.accepts(residual, ls.max(rs));
            }
            _ => {
                max_residual = f64::INFINITY;
                passed = false;
            }
        }
    }
    OracleReport { points, max_residual, tolerance: cfg.tolerance, passed }
}

/// `identity = 0` at random points.
pub fn oracle_check(identity: &Expression, cfg: &ZeroTest) -> OracleReport {
    oracle_compare(identity, &Expression::zero(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_expression;
    use crate::jetspace::Context;

    #[test]
    fn detects_perturbation() {
        let ctx = Context::new(&["t", "x"], &["u"], &["v"]).unwrap();
        let p = |s: &str| parse_expression(s, &ctx).unwrap();
        let cfg = ZeroTest::default();
        let lhs = p("(x*u + 2*t*D(u,x))*(D(v,t) + D(v,x,x))");
        let rhs = p("x*u*D(v,t) + x*u*D(v,x,x) + 2*t*D(u,x)*D(v,t) + 2*t*D(u,x)*D(v,x,x)");
        let ok = oracle_compare(&lhs, &rhs, &cfg);
        assert!(ok.passed && ok.max_residual < 1e-12, "{ok:?}");
        let bad = oracle_compare(&lhs, &(rhs + p("D(u,x)")), &cfg);
        assert!(!bad.passed);
        let zero = oracle_check(&Expression::zero(), &cfg);
        assert_eq!(zero.max_residual, 0.0);
        assert_eq!(oracle_check(&p("x"), &cfg), oracle_check(&p("x"), &cfg));
    }
}
