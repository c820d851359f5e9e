//! Point and evolutionary symmetry generators and their prolonged action.

use std::collections::BTreeMap;

use crate::diffops::{divergence, partial_indep, partial_jet, total_derivative_multi};
use crate::error::{Error, Result};
use crate::expr::{exact_divide, Atom, Expression};
use crate::jetspace::{Context, DepId, JetCoordinate, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Point,
    Evolutionary,
}

/// `sum_i xi^i d/dx_i + sum_a phi^a d/du^a`.
///
/// `xi` holds one entry per independent variable in declaration order and is
/// empty for evolutionary generators. Dependents missing from `phi` have a
/// zero coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    kind: GeneratorKind,
    xi: Vec<Expression>,
    phi: BTreeMap<DepId, Expression>,
}

/// `W^a` for every original dependent variable.
pub type Characteristic = BTreeMap<DepId, Expression>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformalFactors {
    pub mu1: Expression,
    pub mu2: Expression,
    pub lambda: Expression,
}

fn check_originals(ctx: &Context, phi: &BTreeMap<DepId, Expression>) -> Result<()> {
    for d in phi.keys() {
        if d.0 >= ctx.dependents().len() || ctx.kind(*d) != VarKind::Original {
            return Err(Error::InvalidGenerator("generators act on original dependent variables only".into()));
        }
    }
    Ok(())
}

impl Generator {
    pub fn point(ctx: &Context, xi: Vec<Expression>, phi: BTreeMap<DepId, Expression>) -> Result<Self> {
        if xi.len() != ctx.n_independents() {
            return Err(Error::LengthMismatch { expected: ctx.n_independents(), found: xi.len() });
        }
        check_originals(ctx, &phi)?;
        let lie_point = |e: &Expression| {
            e.variables().iter().all(|a| match a {
                Atom::Jet(c) => c.index.is_zero() && ctx.kind(c.dep) == VarKind::Original,
                _ => true,
            })
        };
        if !xi.iter().chain(phi.values()).all(lie_point) {
            return Err(Error::InvalidGenerator(
                "point generator coefficients may depend only on independent variables and undifferentiated original dependents".into(),
            ));
        }
        Ok(Self { kind: GeneratorKind::Point, xi, phi })
    }

    pub fn evolutionary(ctx: &Context, phi: BTreeMap<DepId, Expression>) -> Result<Self> {
        check_originals(ctx, &phi)?;
        let originals_only = phi.values().all(|e| e.jets().iter().all(|c| ctx.kind(c.dep) == VarKind::Original));
        if !originals_only {
            return Err(Error::InvalidGenerator("characteristics may not involve adjoint variables".into()));
        }
        Ok(Self { kind: GeneratorKind::Evolutionary, xi: Vec::new(), phi })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn xi(&self) -> &[Expression] {
        &self.xi
    }

    pub fn phi(&self) -> &BTreeMap<DepId, Expression> {
        &self.phi
    }

    fn phi_of(&self, d: DepId) -> Expression {
        self.phi.get(&d).cloned().unwrap_or_default()
    }

    /// `xi^i * u^a_{J,i}` summed over `i`.
    fn transport(&self, ctx: &Context, c: &JetCoordinate) -> Expression {
        ctx.indep_ids().zip(&self.xi).map(|(i, xi)| xi * &Expression::jet(c.raised(i))).sum()
    }
}

fn component(g: &Generator, ctx: &Context, d: DepId) -> Expression {
    g.phi_of(d) - g.transport(ctx, &JetCoordinate::base(d))
}

pub fn characteristic(g: &Generator, ctx: &Context) -> Characteristic {
    ctx.originals().map(|d| (d, component(g, ctx, d))).collect()
}

/// Coefficient of `d/dc` in the prolonged generator,
/// `D_J W^a + sum_i xi^i u^a_{J,i}`. Adjoint coordinates are left fixed.
pub fn prolong_coefficient(g: &Generator, ctx: &Context, c: &JetCoordinate) -> Result<Expression> {
    if ctx.kind(c.dep) != VarKind::Original {
        return Ok(Expression::zero());
    }
    if c.index.is_zero() {
        return Ok(g.phi_of(c.dep));
    }
    let w = component(g, ctx, c.dep);
    Ok(total_derivative_multi(&w, &c.index)? + g.transport(ctx, c))
}

pub fn apply_generator(g: &Generator, ctx: &Context, e: &Expression) -> Result<Expression> {
    let mut out = Expression::zero();
    for c in e.jets() {
        let coeff = prolong_coefficient(g, ctx, &c)?;
        if !coeff.is_zero() {
            out += coeff * partial_jet(e, &c)?;
        }
    }
    for (i, xi) in ctx.indep_ids().zip(&g.xi) {
        if !xi.is_zero() {
            out += xi * &partial_indep(e, i)?;
        }
    }
    Ok(out)
}

/// `X(E) = mu1 E`, `mu2 = sum_i D_i xi^i`, `lambda = mu1 + mu2`.
pub fn conformal_factor(g: &Generator, ctx: &Context, e: &Expression) -> Result<ConformalFactors> {
    if g.kind != GeneratorKind::Point {
        return Err(Error::InvalidGenerator("conformal factors need a point generator".into()));
    }
    let image = apply_generator(g, ctx, e)?;
    let mu1 = match exact_divide(&image, e) {
        Ok(q) => q,
        Err(Error::NotDivisible) => {
            return Err(Error::NotConformal("the generator does not map the equation to a multiple of itself".into()))
        }
        Err(err) => return Err(err),
    };
    let mu2 = divergence(&g.xi, ctx)?;
    let lambda = &mu1 + &mu2;
    Ok(ConformalFactors { mu1, mu2, lambda })
}

pub fn evolutionary_form(g: &Generator, ctx: &Context) -> Generator {
    match g.kind {
        GeneratorKind::Evolutionary => g.clone(),
        GeneratorKind::Point => {
            Generator { kind: GeneratorKind::Evolutionary, xi: Vec::new(), phi: characteristic(g, ctx) }
        }
    }
}
