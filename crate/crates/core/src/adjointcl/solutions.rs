use std::collections::BTreeMap;

use super::{adjoint_system, ConservedVector, DecompositionReport, Factor, PdeSystem};
use crate::diffops::{divergence, euler, total_derivative_multi};
use crate::error::{Error, Result};
use crate::expr::{zero_status, Atom, Expression, ZeroStatus, ZeroTest};
use crate::jetspace::{DepId, JetCoordinate};

/// Values of adjoint variables as expressions in the independent variables
/// (or, for conservation checks, in the original dependents).
pub type AdjointSolution = BTreeMap<DepId, Expression>;

/// One multiplier per equation.
pub type Multiplier = Vec<Expression>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierStatus {
    Verified,
    VerifiedNumerically,
    Failed,
}

impl MultiplierStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MultiplierStatus::Verified => "verified",
            MultiplierStatus::VerifiedNumerically => "verified_numerically",
            MultiplierStatus::Failed => "failed",
        }
    }

    pub fn passed(self) -> bool {
        self != MultiplierStatus::Failed
    }
}

/// Substitutes a concrete adjoint solution into the extracted multipliers.
pub fn multiplier_from_adjoint_solution(
    report: &DecompositionReport,
    solution: &AdjointSolution,
) -> Result<Multiplier> {
    if solution.values().any(|e| !e.jets().is_empty()) {
        return Err(Error::InvalidBinding(
            "adjoint solutions for multipliers must be functions of the independent variables".into(),
        ));
    }
    let Factor::Multipliers(qs) = &report.factor else {
        return Err(Error::NoMultiplier);
    };
    qs.iter().map(|q| q.substitute_dependents(solution)).collect()
}

/// `E(sum_k Q_k E_k)` for every original dependent, then the zero test.
pub fn verify_multiplier(
    q: &Multiplier,
    sys: &PdeSystem,
    cfg: &ZeroTest,
) -> Result<(MultiplierStatus, Vec<Expression>)> {
    if q.len() != sys.equations().len() {
        return Err(Error::LengthMismatch { expected: sys.equations().len(), found: q.len() });
    }
    let product: Expression = q.iter().zip(sys.equations()).map(|(q, eq)| q * &eq.expr).sum();
    let mut residuals = Vec::new();
    let mut status = MultiplierStatus::Verified;
    for dep in sys.context().originals() {
        let r = euler(&product, dep)?;
        match zero_status(&r, cfg) {
            ZeroStatus::Zero => {}
            ZeroStatus::NumericallyZero if status == MultiplierStatus::Verified => {
                status = MultiplierStatus::VerifiedNumerically
            }
            ZeroStatus::NumericallyZero => {}
            ZeroStatus::NonZero => status = MultiplierStatus::Failed,
        }
        residuals.push(r);
    }
    Ok((status, residuals))
}

/// `c * lead + rest = 0` solved for `lead`.
struct Rule {
    lead: JetCoordinate,
    value: Expression,
}

fn rule(expr: &Expression, lead: &JetCoordinate) -> Result<Rule> {
    let atom = Atom::Jet(lead.clone());
    let coeff = expr.partial(&atom)?;
    let c = coeff
        .as_constant()
        .filter(|c| *c != crate::expr::integer(0))
        .ok_or_else(|| Error::InvalidSystem("on-solution reduction needs a constant leading coefficient".into()))?;
    let rest = expr - &(&coeff * &Expression::atom(atom));
    Ok(Rule { lead: lead.clone(), value: rest.scale(&-c.recip()) })
}

const MAX_REDUCTION_ROUNDS: usize = 64;

fn reduce_with(e: &Expression, rules: &[Rule]) -> Result<Expression> {
    let mut current = e.clone();
    for _ in 0..MAX_REDUCTION_ROUNDS {
        let mut table: BTreeMap<JetCoordinate, Expression> = BTreeMap::new();
        for c in current.jets() {
            let hit = rules.iter().find_map(|r| {
                (r.lead.dep == c.dep).then(|| c.index.checked_sub(&r.lead.index)).flatten().map(|k| (r, k))
            });
            if let Some((r, k)) = hit {
                table.insert(c, total_derivative_multi(&r.value, &k)?);
            }
        }
        if table.is_empty() {
            return Ok(current);
        }
        current = current.map_variables(&|a| match a {
            Atom::Jet(c) => table.get(c).cloned(),
            _ => None,
        });
    }
    Err(Error::ReductionDiverged(MAX_REDUCTION_ROUNDS))
}

/// Eliminates every leading coordinate and its derivatives using the
/// equations, to a fixed point.
pub fn reduce_on_solutions(e: &Expression, sys: &PdeSystem) -> Result<Expression> {
    let rules = sys.equations().iter().map(|eq| rule(&eq.expr, &eq.leading)).collect::<Result<Vec<_>>>()?;
    reduce_with(e, &rules)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationReport {
    /// `Div T`, after substituting the adjoint solution when one is given.
    pub divergence: Expression,
    pub nontrivial: bool,
    pub reduced: Expression,
    pub status: ZeroStatus,
}

impl ConservationReport {
    pub fn conserved(&self) -> bool {
        self.status.is_zero()
    }
}

/// Checks that `Div T` does not vanish identically but does vanish on
/// solutions. Without an adjoint solution the adjoint system is used for
/// the reduction as well.
pub fn verify_conservation(
    flux: &ConservedVector,
    sys: &PdeSystem,
    solution: Option<&AdjointSolution>,
    cfg: &ZeroTest,
) -> Result<ConservationReport> {
    let mut div = divergence(&flux.components, sys.context())?;
    let mut rules = sys.equations().iter().map(|eq| rule(&eq.expr, &eq.leading)).collect::<Result<Vec<_>>>()?;
    match solution {
        Some(s) => div = div.substitute_dependents(s)?,
        None => {
            for adj in adjoint_system(sys)? {
                if let Some(lead) = &adj.leading {
                    rules.push(rule(&adj.expr, lead)?);
                }
            }
        }
    }
    let nontrivial = zero_status(&div, cfg) == ZeroStatus::NonZero;
    let reduced = reduce_with(&div, &rules)?;
    let status = zero_status(&reduced, cfg);
    Ok(ConservationReport { divergence: div, nontrivial, reduced, status })
}
