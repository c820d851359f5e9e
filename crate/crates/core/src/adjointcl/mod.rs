//! Formal Lagrangians, adjoint systems and the Noether-operator flux.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::diffops::{euler, partial_jet, DerivativeTable};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expression, Rational};
use crate::jetspace::{Context, DepId, JetCoordinate, VarKind};
use crate::symmetry::{characteristic, Generator, GeneratorKind};

mod decompose;
mod solutions;

pub use decompose::{decompose_prop1, decompose_prop2, DecompositionReport, Factor, Prop1Comparison, ResidualStatus};
pub use solutions::{
    multiplier_from_adjoint_solution, reduce_on_solutions, verify_conservation, verify_multiplier, AdjointSolution,
    ConservationReport, Multiplier, MultiplierStatus,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub name: String,
    pub expr: Expression,
    pub leading: JetCoordinate,
}

impl Equation {
    /// Coefficient of the leading coordinate.
    pub fn leading_coefficient(&self) -> Expression {
        partial_jet(&self.expr, &self.leading).unwrap_or_default()
    }
}

/// Equations `E_k = 0` with a declared solve-for coordinate each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdeSystem {
    ctx: Context,
    equations: Vec<Equation>,
}

impl PdeSystem {
    pub fn new(ctx: Context, equations: Vec<Equation>) -> Result<Self> {
        if equations.is_empty() {
            return Err(Error::InvalidSystem("a system needs at least one equation".into()));
        }
        let mut leads = BTreeSet::new();
        for eq in &equations {
            let bad = |why: &str| Error::InvalidSystem(format!("equation {}: {why}", eq.name));
            if eq.leading.dep.0 >= ctx.dependents().len() || ctx.kind(eq.leading.dep) != VarKind::Original {
                return Err(bad("the leading coordinate must belong to an original dependent variable"));
            }
            if eq.expr.jets().iter().any(|c| ctx.kind(c.dep) != VarKind::Original) {
                return Err(bad("equations may not involve adjoint variables"));
            }
            let lead = Atom::Jet(eq.leading.clone());
            if eq.expr.degree_in(&lead) != 1 {
                return Err(bad("the equation must be linear in its leading coordinate"));
            }
            let coeff = eq.leading_coefficient();
            if coeff.depends_on(&lead) || coeff.jets().iter().any(|c| c.order() >= eq.leading.order()) {
                return Err(bad("the leading coefficient may only involve lower-order jets"));
            }
            if !leads.insert(eq.leading.clone()) {
                return Err(bad("leading coordinates must be distinct"));
            }
        }
        Ok(Self { ctx, equations })
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    /// Adjoint variable paired with each equation, in declaration order.
    pub fn adjoint_vars(&self) -> Result<Vec<DepId>> {
        let adjoints: Vec<DepId> = self.ctx.adjoints().collect();
        if adjoints.len() < self.equations.len() {
            return Err(Error::NotEnoughAdjointVars { equations: self.equations.len(), adjoints: adjoints.len() });
        }
        Ok(adjoints[..self.equations.len()].to_vec())
    }

    /// Index of the equation whose leading coordinate belongs to `dep`.
    pub fn equation_for(&self, dep: DepId) -> Option<usize> {
        self.equations.iter().position(|eq| eq.leading.dep == dep)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalLagrangian {
    pub body: Expression,
    pub adjoint_vars: Vec<DepId>,
}

/// `L = sum_k v_k E_k`.
pub fn formal_lagrangian(sys: &PdeSystem) -> Result<FormalLagrangian> {
    let adjoint_vars = sys.adjoint_vars()?;
    let body = adjoint_vars.iter().zip(&sys.equations).map(|(v, eq)| Expression::dep(*v) * &eq.expr).sum();
    Ok(FormalLagrangian { body, adjoint_vars })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjointEquation {
    /// The original dependent variable the Euler operator was taken in.
    pub dependent: DepId,
    pub expr: Expression,
    pub leading: Option<JetCoordinate>,
    /// `expr = sign * dL/du`.
    pub sign: i32,
}

fn sign_of(e: &Expression) -> i32 {
    match e.as_constant() {
        Some(c) if c < Rational::from_integer(0.into()) => -1,
        Some(_) => 1,
        None => e.leading_sign(),
    }
}

/// `dL/du^a` for every original dependent, scaled by `+-1` so the adjoint
/// leading coordinate (the highest-ranked jet of the paired adjoint
/// variable) carries the sign of the paired equation's leading coefficient.
pub fn adjoint_system(sys: &PdeSystem) -> Result<Vec<AdjointEquation>> {
    let lag = formal_lagrangian(sys)?;
    let mut out = Vec::new();
    for dep in sys.ctx.originals() {
        let raw = euler(&lag.body, dep)?;
        let (leading, sign) = match sys.equation_for(dep) {
            Some(k) => {
                let eq = &sys.equations[k];
                let v = lag.adjoint_vars[k];
                let lead = raw
                    .jets()
                    .into_iter()
                    .filter(|c| c.dep == v)
                    .max_by(|a, b| a.index.cmp(&b.index))
                    .unwrap_or_else(|| JetCoordinate::base(v));
                let adj = partial_jet(&raw, &lead)?;
                let sign = if adj.is_zero() || sign_of(&adj) == sign_of(&eq.leading_coefficient()) { 1 } else { -1 };
                (Some(lead), sign)
            }
            None => (None, 1),
        };
        let expr = if sign < 0 { -raw } else { raw };
        out.push(AdjointEquation { dependent: dep, expr, leading, sign });
    }
    Ok(out)
}

/// `F_a = -dL/du^a`, the sign under which `Div T = sum_a W^a F_a + (...)E`.
pub fn noether_adjoint(sys: &PdeSystem) -> Result<Vec<(DepId, Expression)>> {
    let lag = formal_lagrangian(sys)?;
    sys.ctx.originals().map(|d| Ok((d, -euler(&lag.body, d)?))).collect()
}

/// One flux component per independent variable, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservedVector {
    pub components: Vec<Expression>,
}

/// Noether-operator flux of the formal Lagrangian for any order and any
/// number of independent variables.
///
/// A coordinate `u_J` with `J = a + e_i + b` contributes
/// `mult(a) mult(b) / mult(J) * (-1)^|a| * D_b(W) * D_a(dL/du_J)` to `T^i`,
/// which splits mixed derivatives symmetrically between their variables.
pub fn noether_flux(sys: &PdeSystem, g: &Generator) -> Result<ConservedVector> {
    let ctx = &sys.ctx;
    let lag = formal_lagrangian(sys)?.body;
    let mut components: Vec<Expression> = match g.kind() {
        GeneratorKind::Point => g.xi().iter().map(|xi| xi * &lag).collect(),
        GeneratorKind::Evolutionary => vec![Expression::zero(); ctx.n_independents()],
    };
    let jets = lag.jets();
    for (dep, w) in characteristic(g, ctx) {
        if w.is_zero() {
            continue;
        }
        let mut w_table = DerivativeTable::new(w);
        for c in jets.iter().filter(|c| c.dep == dep && !c.index.is_zero()) {
            let mut p_table = DerivativeTable::new(partial_jet(&lag, c)?);
            let mult_j = BigInt::from(c.index.multinomial());
            for i in ctx.indep_ids() {
                let Some(rest) = c.index.lowered(i) else { continue };
                for a in rest.sub_indices() {
                    let b = rest.checked_sub(&a).expect("sub-index of rest");
                    let mut weight = Rational::new(BigInt::from(a.multinomial() * b.multinomial()), mult_j.clone());
                    if a.order() % 2 == 1 {
                        weight = -weight;
                    }
                    let db_w = w_table.get(&b)?.clone();
                    let term = &db_w * p_table.get(&a)?;
                    components[i.0] += term.scale(&weight);
                }
            }
        }
    }
    Ok(ConservedVector { components })
}
