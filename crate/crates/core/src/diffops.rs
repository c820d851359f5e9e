//! Total derivatives, jet partials, the Euler operator, divergence and
//! linear differential operators with expression coefficients.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{head_derivative, Atom, Expression};
use crate::jetspace::{Context, DepId, IndepId, JetCoordinate, MultiIndex};

/// `D_i` of a single atom.
fn atom_derivative(a: &Atom, i: IndepId) -> Result<Expression> {
    Ok(match a {
        Atom::Jet(c) => Expression::jet(c.raised(i)),
        Atom::Indep(j) if *j == i => Expression::one(),
        Atom::Indep(_) => Expression::zero(),
        Atom::Func(h, arg) => {
            let d_arg = total_derivative(arg, i)?;
            if d_arg.is_zero() {
                return Ok(Expression::zero());
            }
            &head_derivative(*h, arg)? * &d_arg
        }
    })
}

/// Total derivative `D_i e`: explicit dependence on `x_i` plus the chain
/// rule through every jet coordinate and function application.
pub fn total_derivative(e: &Expression, i: IndepId) -> Result<Expression> {
    let mut cache: BTreeMap<&Atom, Expression> = BTreeMap::new();
    for a in e.terms().flat_map(|(m, _)| m.factors().iter().map(|(a, _)| a)) {
        if !cache.contains_key(a) {
            cache.insert(a, atom_derivative(a, i)?);
        }
    }
    let mut out = Expression::zero();
    for (m, c) in e.terms() {
        for (k, (a, p)) in m.factors().iter().enumerate() {
            let da = &cache[a];
            if da.is_zero() {
                continue;
            }
            let rest = m.factors().iter().enumerate().map(|(j, (b, q))| (b.clone(), if j == k { q - 1 } else { *q }));
            let coeff = c * crate::expr::integer(*p as i64);
            let lowered = Expression::term(crate::expr::Monomial::from_factors(rest), coeff);
            out += &lowered * da;
        }
    }
    Ok(out)
}

/// `D_J e`, applying one total derivative per differentiation in `J`.
pub fn total_derivative_multi(e: &Expression, index: &MultiIndex) -> Result<Expression> {
    let mut out = e.clone();
    for i in index.sequence() {
        if out.is_zero() {
            break;
        }
        out = total_derivative(&out, i)?;
    }
    Ok(out)
}

/// Memoised `D_J e` for many `J` sharing the same `e`.
pub(crate) struct DerivativeTable {
    table: BTreeMap<MultiIndex, Expression>,
}

impl DerivativeTable {
    pub(crate) fn new(e: Expression) -> Self {
        Self { table: BTreeMap::from([(MultiIndex::zero(), e)]) }
    }

    pub(crate) fn get(&mut self, index: &MultiIndex) -> Result<&Expression> {
        if !self.table.contains_key(index) {
            // peel the last differentiation and build on the shorter index
            let seq = index.sequence();
            let last = *seq.last().expect("zero index is always cached");
            let shorter = index.lowered(last).expect("index contains its own variable");
            let base = self.get(&shorter)?.clone();
            let d = total_derivative(&base, last)?;
            self.table.insert(index.clone(), d);
        }
        Ok(&self.table[index])
    }
}

/// Formal partial derivative treating every jet coordinate as an
/// independent unknown.
pub fn partial_jet(e: &Expression, c: &JetCoordinate) -> Result<Expression> {
    e.partial(&Atom::Jet(c.clone()))
}

/// Explicit partial derivative with respect to an independent variable.
pub fn partial_indep(e: &Expression, i: IndepId) -> Result<Expression> {
    e.partial(&Atom::Indep(i))
}

/// Euler operator `sum_J (-D)_J d e / d w_J`, summed over the coordinates of
/// `w` that actually occur in `e`.
pub fn euler(e: &Expression, w: DepId) -> Result<Expression> {
    let mut out = Expression::zero();
    for c in e.jets().into_iter().filter(|c| c.dep == w) {
        let p = partial_jet(e, &c)?;
        let d = total_derivative_multi(&p, &c.index)?;
        if c.order() % 2 == 0 {
            out += d;
        } else {
            out -= d;
        }
    }
    Ok(out)
}

/// [`euler`] with an explicit summation bound, which must cover the
/// expression's order in `w`.
pub fn euler_bounded(e: &Expression, w: DepId, max_order: u32) -> Result<Expression> {
    if let Some(required) = e.max_order_of(w) {
        if required > max_order {
            return Err(Error::MaxOrderTooSmall { given: max_order, required });
        }
    }
    euler(e, w)
}

/// `sum_i D_i T^i` with one flux component per independent variable.
pub fn divergence(flux: &[Expression], ctx: &Context) -> Result<Expression> {
    if flux.len() != ctx.n_independents() {
        return Err(Error::LengthMismatch { expected: ctx.n_independents(), found: flux.len() });
    }
    let mut out = Expression::zero();
    for (i, t) in ctx.indep_ids().zip(flux) {
        out += total_derivative(t, i)?;
    }
    Ok(out)
}

/// `sum_J c_J D_J` with coefficients in normal form; the zero index is the
/// multiplication term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearDiffOperator {
    terms: BTreeMap<MultiIndex, Expression>,
}

impl LinearDiffOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::multiplication(Expression::one())
    }

    pub fn multiplication(c: Expression) -> Self {
        Self::from_terms([(MultiIndex::zero(), c)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (MultiIndex, Expression)>) -> Self {
        let mut op = Self::zero();
        for (j, c) in terms {
            op.add_term(j, c);
        }
        op
    }

    pub fn add_term(&mut self, index: MultiIndex, c: Expression) {
        let slot = self.terms.entry(index.canonicalize()).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Expression)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, index: &MultiIndex) -> Expression {
        self.terms.get(index).cloned().unwrap_or_default()
    }

    /// The multiplication part `c_0`.
    pub fn zeroth(&self) -> Expression {
        self.coefficient(&MultiIndex::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    pub fn apply(&self, e: &Expression) -> Result<Expression> {
        let mut table = DerivativeTable::new(e.clone());
        let mut out = Expression::zero();
        for (j, c) in &self.terms {
            out += c * table.get(j)?;
        }
        Ok(out)
    }
}

pub fn apply_lindop(op: &LinearDiffOperator, e: &Expression) -> Result<Expression> {
    op.apply(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{rational, FuncHead};

    struct Jet {
        ctx: Context,
        t: IndepId,
        x: IndepId,
        u: DepId,
        v: DepId,
    }

    impl Jet {
        fn new() -> Self {
            let ctx = Context::new(&["t", "x"], &["u"], &["v"]).unwrap();
            Jet {
                t: ctx.indep("t").unwrap(),
                x: ctx.indep("x").unwrap(),
                u: ctx.dep("u").unwrap(),
                v: ctx.dep("v").unwrap(),
                ctx,
            }
        }
        fn d(&self, dep: DepId, seq: &[IndepId]) -> Expression {
            Expression::deriv(dep, MultiIndex::from_sequence(seq))
        }
        fn tx(&self) -> (Expression, Expression) {
            (Expression::indep(self.t), Expression::indep(self.x))
        }
    }

    #[test]
    fn product_rule_on_x_u() {
        let j = Jet::new();
        let (_, x) = j.tx();
        let e = &x * &j.d(j.u, &[]);
        assert_eq!(total_derivative(&e, j.x).unwrap(), j.d(j.u, &[]) + &x * &j.d(j.u, &[j.x]));
    }

    #[test]
    fn heat_flux_time_derivative() {
        let j = Jet::new();
        let (t, x) = j.tx();
        let two = Expression::int(2);
        let v = j.d(j.v, &[]);
        let w = &x * &j.d(j.u, &[]) + &two * &t * &j.d(j.u, &[j.x]);
        let tt = -(&v * &w);
        let expected = -(j.d(j.v, &[j.t]) * &w)
            - &v * (&x * j.d(j.u, &[j.t]) + &two * j.d(j.u, &[j.x]) + &two * &t * j.d(j.u, &[j.x, j.t]));
        assert_eq!(total_derivative(&tt, j.t).unwrap(), expected);
    }

    #[test]
    fn chain_rule_on_functions() {
        let j = Jet::new();
        let (t, x) = j.tx();
        let e = Expression::apply(FuncHead::Exp, t.clone()) * Expression::apply(FuncHead::Sin, x.clone());
        assert_eq!(
            total_derivative(&e, j.x).unwrap(),
            Expression::apply(FuncHead::Exp, t.clone()) * Expression::apply(FuncHead::Cos, x.clone())
        );
        // two derivation paths to e^t sin x normalize identically
        let by_t = total_derivative(&e, j.t).unwrap();
        let by_xx = -total_derivative_multi(&e, &MultiIndex::from_sequence(&[j.x, j.x])).unwrap();
        assert!((by_t - by_xx).is_zero());
    }

    #[test]
    fn log_derivative_is_rejected() {
        let j = Jet::new();
        let (t, x) = j.tx();
        let e = Expression::apply(FuncHead::Log, x.clone());
        assert!(matches!(total_derivative(&e, j.x), Err(Error::UnsupportedDerivative(_))));
        assert!(total_derivative(&e, j.t).unwrap().is_zero());
        let _ = t;
    }

    #[test]
    fn jet_partials() {
        let j = Jet::new();
        let (_, x) = j.tx();
        let v = j.d(j.v, &[]);
        let l = &v * &j.d(j.u, &[j.t]) - &v * &j.d(j.u, &[j.x, j.x]);
        let ut = JetCoordinate::new(j.u, MultiIndex::single(j.t));
        let uxx = JetCoordinate::new(j.u, MultiIndex::from_sequence(&[j.x, j.x]));
        assert_eq!(partial_jet(&l, &ut).unwrap(), v);
        assert_eq!(partial_jet(&l, &uxx).unwrap(), -v.clone());
        let ux = JetCoordinate::new(j.u, MultiIndex::single(j.x));
        assert!(partial_jet(&(&x * &x), &ux).unwrap().is_zero());
    }

    #[test]
    fn euler_of_heat_and_kdv_lagrangians() {
        let j = Jet::new();
        let v = j.d(j.v, &[]);
        let heat = j.d(j.u, &[j.t]) - j.d(j.u, &[j.x, j.x]);
        assert_eq!(euler(&(&v * &heat), j.u).unwrap(), -j.d(j.v, &[j.t]) - j.d(j.v, &[j.x, j.x]));
        let u = j.d(j.u, &[]);
        let kdv = j.d(j.u, &[j.t]) - &u * j.d(j.u, &[j.x]) - j.d(j.u, &[j.x, j.x, j.x]);
        assert_eq!(
            euler(&(&v * &kdv), j.u).unwrap(),
            -j.d(j.v, &[j.t]) + &u * j.d(j.v, &[j.x]) + j.d(j.v, &[j.x, j.x, j.x])
        );
        // the adjoint variable recovers the equation
        assert_eq!(euler(&(&v * &kdv), j.v).unwrap(), kdv);
    }

    #[test]
    fn euler_bound_checked() {
        let j = Jet::new();
        let e = j.d(j.u, &[j.x, j.x]) * j.d(j.v, &[]);
        assert_eq!(euler_bounded(&e, j.u, 1), Err(Error::MaxOrderTooSmall { given: 1, required: 2 }));
        assert!(euler_bounded(&e, j.u, 2).is_ok());
    }

    #[test]
    fn divergence_cases() {
        let j = Jet::new();
        let zero = [Expression::zero(), Expression::zero()];
        assert!(divergence(&zero, &j.ctx).unwrap().is_zero());
        // (D_t A, -D_x A) ordering with t first: D_t(u_x) + D_x(-u_t) = 0
        let curl = [j.d(j.u, &[j.x]), -j.d(j.u, &[j.t])];
        assert!(divergence(&curl, &j.ctx).unwrap().is_zero());
        assert_eq!(divergence(&[Expression::zero()], &j.ctx), Err(Error::LengthMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn operators_apply() {
        let j = Jet::new();
        let (t, x) = j.tx();
        let v = j.d(j.v, &[]);
        let op = LinearDiffOperator::from_terms([
            (MultiIndex::single(j.x), Expression::int(2) * &t),
            (MultiIndex::zero(), -x.clone()),
        ]);
        assert_eq!(op.apply(&v).unwrap(), Expression::int(2) * &t * j.d(j.v, &[j.x]) - &x * &v);
        let heat = j.d(j.u, &[j.t]) - j.d(j.u, &[j.x, j.x]);
        assert_eq!(LinearDiffOperator::identity().apply(&heat).unwrap(), heat);

        let u = j.d(j.u, &[]);
        let kdv = j.d(j.u, &[j.t]) - &u * j.d(j.u, &[j.x]) - j.d(j.u, &[j.x, j.x, j.x]);
        let r = LinearDiffOperator::from_terms([
            (MultiIndex::single(j.t), Expression::int(3) * &t),
            (MultiIndex::single(j.x), x.clone()),
            (MultiIndex::zero(), Expression::int(2)),
        ]);
        let expected = Expression::int(3) * &t * total_derivative(&kdv, j.t).unwrap()
            + &x * total_derivative(&kdv, j.x).unwrap()
            + Expression::int(2) * &kdv;
        assert_eq!(r.apply(&kdv).unwrap(), expected);
        assert_eq!(r.zeroth(), Expression::int(2));
        let half = LinearDiffOperator::multiplication(Expression::constant(rational(1, 2)));
        assert_eq!(half.apply(&u).unwrap(), u.scale(&rational(1, 2)));
    }
}
