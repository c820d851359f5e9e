//! Normal-form differential polynomials.
//!
//! An [`Expression`] is a map from [`Monomial`] to a nonzero exact rational.
//! Monomials are products of [`Atom`]s: jet coordinates, independent
//! variables and elementary-function applications whose arguments are
//! themselves normal-form expressions. No trigonometric or exponential
//! identities are applied, so two expressions are equal exactly when their
//! term maps are.

mod divide;
mod eval;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::jetspace::{DepId, IndepId, JetCoordinate, MultiIndex};

pub use divide::{divide_with_remainder, exact_divide};
pub use eval::{eval_numeric, eval_with_scale, zero_status, Point, Sampler, ZeroStatus, ZeroTest};

pub type Rational = num_rational::BigRational;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FuncHead {
    Exp,
    Sin,
    Cos,
    Log,
}

impl FuncHead {
    pub fn name(self) -> &'static str {
        match self {
            FuncHead::Exp => "exp",
            FuncHead::Sin => "sin",
            FuncHead::Cos => "cos",
            FuncHead::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "exp" => Some(FuncHead::Exp),
            "sin" => Some(FuncHead::Sin),
            "cos" => Some(FuncHead::Cos),
            "log" => Some(FuncHead::Log),
            _ => None,
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            FuncHead::Exp => x.exp(),
            FuncHead::Sin => x.sin(),
            FuncHead::Cos => x.cos(),
            FuncHead::Log => x.ln(),
        }
    }
}

/// Variants order as jet < independent < function; the derived order is the
/// atom order used by monomials.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Jet(JetCoordinate),
    Indep(IndepId),
    Func(FuncHead, Box<Expression>),
}

impl Atom {
    pub fn is_variable(&self) -> bool {
        !matches!(self, Atom::Func(..))
    }

    /// True when the atom is built from independent variables only.
    pub fn is_independent_only(&self) -> bool {
        match self {
            Atom::Jet(_) => false,
            Atom::Indep(_) => true,
            Atom::Func(_, arg) => arg.is_independent_only(),
        }
    }

    pub fn depends_on(&self, var: &Atom) -> bool {
        match self {
            Atom::Func(_, arg) => arg.depends_on(var),
            _ => self == var,
        }
    }
}

/// Product of atoms with positive exponents, sorted by atom.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Monomial {
    factors: Vec<(Atom, u32)>,
}

impl Monomial {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn from_atom(atom: Atom, power: u32) -> Self {
        if power == 0 {
            return Self::unit();
        }
        Self { factors: vec![(atom, power)] }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (Atom, u32)>) -> Self {
        let mut map: BTreeMap<Atom, u32> = BTreeMap::new();
        for (a, p) in factors {
            *map.entry(a).or_insert(0) += p;
        }
        Self { factors: map.into_iter().filter(|(_, p)| *p > 0).collect() }
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, p)| p).sum()
    }

    pub fn exponent(&self, atom: &Atom) -> u32 {
        self.factors.binary_search_by(|(a, _)| a.cmp(atom)).map(|k| self.factors[k].1).unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, p) = &self.factors[i];
            let (b, q) = &other.factors[j];
            match a.cmp(b) {
                Ordering::Less => {
                    out.push((a.clone(), *p));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b.clone(), *q));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.clone(), p + q));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut j = 0;
        for (a, p) in &self.factors {
            if j < other.factors.len() && other.factors[j].0 == *a {
                let q = other.factors[j].1;
                match p.cmp(&q) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((a.clone(), p - q)),
                }
                j += 1;
            } else if j < other.factors.len() && other.factors[j].0 < *a {
                return None;
            } else {
                out.push((a.clone(), *p));
            }
        }
        (j == other.factors.len()).then_some(Monomial { factors: out })
    }

    /// The monomial with one power of its `k`-th factor removed, together
    /// with that factor's original exponent.
    fn lower(&self, k: usize) -> (Monomial, u32) {
        let mut factors = self.factors.clone();
        let p = factors[k].1;
        if p == 1 {
            factors.remove(k);
        } else {
            factors[k].1 -= 1;
        }
        (Monomial { factors }, p)
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order: total degree first, then the exponent of
    /// the largest atom on which the two differ.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let mut a = self.factors.iter().rev().peekable();
            let mut b = other.factors.iter().rev().peekable();
            loop {
                match (a.peek(), b.peek()) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Greater,
                    (None, Some(_)) => return Ordering::Less,
                    (Some((x, p)), Some((y, q))) => match x.cmp(y) {
                        Ordering::Greater => return Ordering::Greater,
                        Ordering::Less => return Ordering::Less,
                        Ordering::Equal => {
                            if p != q {
                                return p.cmp(q);
                            }
                            a.next();
                            b.next();
                        }
                    },
                }
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expression {
    terms: BTreeMap<Monomial, Rational>,
}

impl Expression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::unit(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(integer(n))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Self::constant(rational(numer, denom))
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn atom(a: Atom) -> Self {
        Self::term(Monomial::from_atom(a, 1), Rational::one())
    }

    pub fn indep(i: IndepId) -> Self {
        Self::atom(Atom::Indep(i))
    }

    pub fn jet(c: JetCoordinate) -> Self {
        Self::atom(Atom::Jet(c))
    }

    /// The order-0 coordinate of a dependent variable.
    pub fn dep(d: DepId) -> Self {
        Self::jet(JetCoordinate::base(d))
    }

    /// The derivative `D_J d` as a coordinate.
    pub fn deriv(d: DepId, index: MultiIndex) -> Self {
        Self::jet(JetCoordinate::new(d, index))
    }

    /// Applies an elementary function, folding the exact values at zero and
    /// `log(1)`.
    pub fn apply(head: FuncHead, arg: Expression) -> Self {
        if arg.is_zero() {
            return match head {
                FuncHead::Exp | FuncHead::Cos => Self::one(),
                FuncHead::Sin => Self::zero(),
                FuncHead::Log => Self::atom(Atom::Func(head, Box::new(arg))),
            };
        }
        if head == FuncHead::Log && arg.as_constant().is_some_and(|c| c.is_one()) {
            return Self::zero();
        }
        Self::atom(Atom::Func(head, Box::new(arg)))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_unit().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Largest term under the monomial order.
    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut e = Self::zero();
        for (m, c) in terms {
            e.add_term(m, c);
        }
        e
    }

    /// Top-level atoms (function arguments are not entered).
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms.keys().flat_map(|m| m.factors.iter().map(|(a, _)| a.clone())).collect()
    }

    /// Jet and independent-variable atoms, including those inside function
    /// arguments.
    pub fn variables(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<Atom>) {
        for m in self.terms.keys() {
            for (a, _) in &m.factors {
                match a {
                    Atom::Func(_, arg) => arg.collect_variables(out),
                    _ => {
                        out.insert(a.clone());
                    }
                }
            }
        }
    }

    pub fn jets(&self) -> BTreeSet<JetCoordinate> {
        self.variables()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Jet(c) => Some(c),
                _ => None,
            })
            .collect()
    }

    /// Highest derivative order of `dep` anywhere in the expression.
    pub fn max_order_of(&self, dep: DepId) -> Option<u32> {
        self.jets().iter().filter(|c| c.dep == dep).map(JetCoordinate::order).max()
    }

    pub fn depends_on(&self, var: &Atom) -> bool {
        self.terms.keys().any(|m| m.factors.iter().any(|(a, _)| a.depends_on(var)))
    }

    pub fn is_independent_only(&self) -> bool {
        self.terms.keys().all(|m| m.factors.iter().all(|(a, _)| a.is_independent_only()))
    }

    /// Degree of the expression in a top-level atom.
    pub fn degree_in(&self, atom: &Atom) -> u32 {
        self.terms.keys().map(|m| m.exponent(atom)).max().unwrap_or(0)
    }

    /// Rebuilds the expression, replacing each variable atom for which `f`
    /// returns `Some`. Function arguments are rewritten recursively.
    pub fn map_variables<F>(&self, f: &F) -> Self
    where
        F: Fn(&Atom) -> Option<Expression>,
    {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut prod = Self::constant(c.clone());
            for (a, p) in &m.factors {
                let replaced = match a {
                    Atom::Func(h, arg) => Self::apply(*h, arg.map_variables(f)),
                    _ => f(a).unwrap_or_else(|| Self::atom(a.clone())),
                };
                prod = &prod * &replaced.pow(*p);
                if prod.is_zero() {
                    break;
                }
            }
            out += prod;
        }
        out
    }

    /// Replaces order-0 jet atoms and independent-variable atoms.
    ///
    /// A bound dependent variable whose derivative coordinates also occur is
    /// rewritten by total differentiation of its binding; that requires the
    /// binding to be a function of the independent variables only.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expression>) -> Result<Self> {
        let mut dep_bindings = BTreeMap::new();
        let mut indep_bindings = BTreeMap::new();
        for (atom, value) in bindings {
            match atom {
                Atom::Jet(c) if c.index.is_zero() => {
                    dep_bindings.insert(c.dep, value.clone());
                }
                Atom::Jet(_) => {
                    return Err(Error::InvalidBinding("derivative coordinates cannot be bound directly".into()))
                }
                Atom::Indep(i) => {
                    indep_bindings.insert(*i, value.clone());
                }
                Atom::Func(..) => return Err(Error::InvalidBinding("function applications cannot be bound".into())),
            }
        }
        let jets = self.jets();
        for (dep, value) in &dep_bindings {
            let identity = *value == Self::dep(*dep);
            let has_derivatives = jets.iter().any(|c| c.dep == *dep && !c.index.is_zero());
            if has_derivatives && !identity && !value.jets().is_empty() {
                return Err(Error::InvalidBinding(
                    "a dependent variable whose derivatives occur must be bound to a function of the independent variables".into(),
                ));
            }
        }
        dep_bindings.retain(|d, v| *v != Self::dep(*d));
        let substituted = self.substitute_dependents(&dep_bindings)?;
        if indep_bindings.is_empty() {
            return Ok(substituted);
        }
        Ok(substituted.map_variables(&|a| match a {
            Atom::Indep(i) => indep_bindings.get(i).cloned(),
            _ => None,
        }))
    }

    /// Replaces every coordinate `w_J` of a bound dependent `w` by `D_J` of
    /// its binding. Bindings may contain jets.
    pub fn substitute_dependents(&self, bindings: &BTreeMap<DepId, Expression>) -> Result<Self> {
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut table: BTreeMap<JetCoordinate, Expression> = BTreeMap::new();
        for c in self.jets() {
            if let Some(value) = bindings.get(&c.dep) {
                let d = crate::diffops::total_derivative_multi(value, &c.index)?;
                table.insert(c, d);
            }
        }
        Ok(self.map_variables(&|a| match a {
            Atom::Jet(c) => table.get(c).cloned(),
            _ => None,
        }))
    }

    /// Renames every coordinate of `from` to the same coordinate of `to`.
    pub fn rename_dependent(&self, from: DepId, to: DepId) -> Self {
        self.map_variables(&|a| match a {
            Atom::Jet(c) if c.dep == from => Some(Self::jet(JetCoordinate::new(to, c.index.clone()))),
            _ => None,
        })
    }

    /// Formal partial derivative with respect to a variable atom, with the
    /// chain rule through function applications.
    pub fn partial(&self, var: &Atom) -> Result<Self> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (k, (a, _)) in m.factors.iter().enumerate() {
                let inner = match a {
                    Atom::Func(h, arg) => {
                        let d_arg = arg.partial(var)?;
                        if d_arg.is_zero() {
                            continue;
                        }
                        &head_derivative(*h, arg)? * &d_arg
                    }
                    _ if a == var => Self::one(),
                    _ => continue,
                };
                let (rest, p) = m.lower(k);
                let scaled = c * integer(p as i64);
                out += &Self::term(rest, scaled) * &inner;
            }
        }
        Ok(out)
    }

    /// Splits every term into (independent-only part, remaining part) and
    /// collects the coefficient of each remaining monomial.
    pub fn split_independent(&self) -> BTreeMap<Monomial, Expression> {
        let mut out: BTreeMap<Monomial, Expression> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (indep, rest): (Vec<_>, Vec<_>) = m.factors.iter().cloned().partition(|(a, _)| a.is_independent_only());
            let coeff = Self::term(Monomial { factors: indep }, c.clone());
            *out.entry(Monomial { factors: rest }).or_default() += coeff;
        }
        out.retain(|_, e| !e.is_zero());
        out
    }

    /// Sign of the leading coefficient; 0 for the zero expression.
    pub fn leading_sign(&self) -> i32 {
        match self.leading_term() {
            None => 0,
            Some((_, c)) if c.is_negative() => -1,
            Some(_) => 1,
        }
    }
}

/// `d/dz head(z)` evaluated at `arg`.
pub(crate) fn head_derivative(head: FuncHead, arg: &Expression) -> Result<Expression> {
    Ok(match head {
        FuncHead::Exp => Expression::apply(FuncHead::Exp, arg.clone()),
        FuncHead::Sin => Expression::apply(FuncHead::Cos, arg.clone()),
        FuncHead::Cos => -Expression::apply(FuncHead::Sin, arg.clone()),
        FuncHead::Log => return Err(Error::UnsupportedDerivative("log".into())),
    })
}

impl From<Rational> for Expression {
    fn from(c: Rational) -> Self {
        Self::constant(c)
    }
}

impl From<i64> for Expression {
    fn from(n: i64) -> Self {
        Self::int(n)
    }
}

impl AddAssign<&Expression> for Expression {
    fn add_assign(&mut self, rhs: &Expression) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign<Expression> for Expression {
    fn add_assign(&mut self, rhs: Expression) {
        if self.terms.len() < rhs.terms.len() {
            let lhs = std::mem::replace(self, rhs);
            *self += &lhs;
            return;
        }
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl SubAssign<&Expression> for Expression {
    fn sub_assign(&mut self, rhs: &Expression) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl SubAssign<Expression> for Expression {
    fn sub_assign(&mut self, rhs: Expression) {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(mut self) -> Expression {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -self.clone()
    }
}

impl Mul<&Expression> for &Expression {
    type Output = Expression;
    fn mul(self, rhs: &Expression) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            for (n, d) in &rhs.terms {
                out.add_term(m.mul(n), c * d);
            }
        }
        out
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $assign:ident) => {
        impl $trait<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }
        impl $trait<Expression> for Expression {
            type Output = Expression;
            fn $method(mut self, rhs: Expression) -> Expression {
                self.$assign(rhs);
                self
            }
        }
        impl $trait<&Expression> for Expression {
            type Output = Expression;
            fn $method(mut self, rhs: &Expression) -> Expression {
                self.$assign(rhs);
                self
            }
        }
        impl $trait<Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }
    };
}

forward_binop!(Add, add, add_assign);
forward_binop!(Sub, sub, sub_assign);

impl Mul<Expression> for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        &self * &rhs
    }
}

impl Mul<&Expression> for Expression {
    type Output = Expression;
    fn mul(self, rhs: &Expression) -> Expression {
        &self * rhs
    }
}

impl Mul<Expression> for &Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        self * &rhs
    }
}

impl std::iter::Sum for Expression {
    fn sum<I: Iterator<Item = Expression>>(iter: I) -> Self {
        iter.fold(Expression::zero(), |acc, e| acc + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetspace::Context;

    struct Heat {
        x: Expression,
        t: Expression,
        u: Expression,
        ux: Expression,
        ut: Expression,
        uxx: Expression,
        v: Expression,
        vx: Expression,
        ctx: Context,
    }

    fn heat() -> Heat {
        let ctx = Context::new(&["t", "x"], &["u"], &["v"]).unwrap();
        let (t, x) = (ctx.indep("t").unwrap(), ctx.indep("x").unwrap());
        let (u, v) = (ctx.dep("u").unwrap(), ctx.dep("v").unwrap());
        Heat {
            x: Expression::indep(x),
            t: Expression::indep(t),
            u: Expression::dep(u),
            ux: Expression::deriv(u, MultiIndex::single(x)),
            ut: Expression::deriv(u, MultiIndex::single(t)),
            uxx: Expression::deriv(u, MultiIndex::from_sequence(&[x, x])),
            v: Expression::dep(v),
            vx: Expression::deriv(v, MultiIndex::single(x)),
            ctx,
        }
    }

    #[test]
    fn add_identity_and_cancellation() {
        let h = heat();
        let xu = &h.x * &h.u;
        assert_eq!(&xu + &Expression::zero(), xu);
        let e = &h.ut - &h.uxx;
        assert_eq!(&e + &h.uxx, h.ut);
        let w = Expression::int(2) * &h.t * &h.ux + &h.x * &h.u;
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn mul_distributes() {
        let h = heat();
        let e = &h.ut - &h.uxx;
        let ve = &h.v * &e;
        assert_eq!(ve, &h.v * &h.ut - &h.v * &h.uxx);
        assert!((&e * &Expression::zero()).is_zero());
    }

    #[test]
    fn nls_cubic_product() {
        let ctx = Context::new(&["t", "x"], &["p", "q"], &[]).unwrap();
        let p = Expression::dep(ctx.dep("p").unwrap());
        let q = Expression::dep(ctx.dep("q").unwrap());
        let lhs = (&p * &p + &q * &q) * &p;
        assert_eq!(lhs, p.pow(3) + &p * &q.pow(2));
    }

    #[test]
    fn substitute_adjoint_solutions() {
        let h = heat();
        let vd = h.ctx.dep("v").unwrap();
        let q = Expression::int(-1) * &h.x * &h.v + Expression::int(2) * &h.t * &h.vx;
        let one = BTreeMap::from([(Atom::Jet(JetCoordinate::base(vd)), Expression::one())]);
        assert_eq!(q.substitute(&one).unwrap(), -h.x.clone());
        let by_x = BTreeMap::from([(Atom::Jet(JetCoordinate::base(vd)), h.x.clone())]);
        assert_eq!(q.substitute(&by_x).unwrap(), -(&h.x * &h.x) + Expression::int(2) * &h.t);
    }

    #[test]
    fn substitute_identity_binding() {
        let h = heat();
        let ud = h.ctx.dep("u").unwrap();
        let b = BTreeMap::from([(Atom::Jet(JetCoordinate::base(ud)), h.u.clone())]);
        assert_eq!(h.ux.substitute(&b).unwrap(), h.ux);
    }

    #[test]
    fn substitute_rejects_bad_bindings() {
        let h = heat();
        let ud = h.ctx.dep("u").unwrap();
        let vd = h.ctx.dep("v").unwrap();
        let x = h.ctx.indep("x").unwrap();
        let direct = BTreeMap::from([(Atom::Jet(JetCoordinate::new(ud, MultiIndex::single(x))), Expression::one())]);
        assert!(matches!(h.ux.substitute(&direct), Err(Error::InvalidBinding(_))));
        let jetty = BTreeMap::from([(Atom::Jet(JetCoordinate::base(vd)), h.u.clone())]);
        assert!(matches!(h.vx.substitute(&jetty), Err(Error::InvalidBinding(_))));
    }

    #[test]
    fn monomial_order_is_graded() {
        let h = heat();
        let lt = (&h.ut - &h.uxx + &h.u * &h.u).leading_term().unwrap().0.clone();
        assert_eq!(lt.degree(), 2);
        let lt = (&h.ut - &h.uxx).leading_term().unwrap().0.clone();
        assert_eq!(Expression::term(lt, integer(1)), h.uxx);
    }

    #[test]
    fn apply_folds_zero_argument() {
        assert_eq!(Expression::apply(FuncHead::Exp, Expression::zero()), Expression::one());
        assert!(Expression::apply(FuncHead::Sin, Expression::zero()).is_zero());
        assert!(Expression::apply(FuncHead::Log, Expression::one()).is_zero());
    }

    #[test]
    fn partial_through_functions() {
        let h = heat();
        let s = Expression::apply(FuncHead::Sin, &h.x * &h.u);
        let x_atom = h.x.atoms().into_iter().next().unwrap();
        let d = s.partial(&x_atom).unwrap();
        assert_eq!(d, Expression::apply(FuncHead::Cos, &h.x * &h.u) * &h.u);
    }
}
