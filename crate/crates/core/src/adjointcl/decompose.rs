use std::collections::BTreeMap;

use super::{noether_adjoint, noether_flux, PdeSystem};
use crate::diffops::{divergence, DerivativeTable, LinearDiffOperator};
use crate::error::{Error, Result};
use crate::expr::{divide_with_remainder, exact_divide, Expression, Monomial};
use crate::jetspace::{DepId, MultiIndex, VarKind};
use crate::symmetry::{characteristic, conformal_factor, Characteristic, ConformalFactors, Generator, GeneratorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualStatus {
    Zero,
    NotDivisible,
}

impl ResidualStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualStatus::Zero => "zero",
            ResidualStatus::NotDivisible => "not_divisible",
        }
    }
}

/// Factor multiplying the equations once `W F` is split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    /// `Q_k E_k` per equation.
    Multipliers(Vec<Expression>),
    /// `v_k (sum_J c_J D_J) E_k` per equation; `c_0` is the `lambda` part.
    Operators(Vec<LinearDiffOperator>),
}

/// Prediction `Zv - lambda v` next to the multiplier actually extracted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prop1Comparison {
    pub conformal: Option<ConformalFactors>,
    pub predicted: Option<Vec<Expression>>,
    pub extracted: Vec<Expression>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    pub characteristic: Characteristic,
    /// `(u^a, F_a)` with `F_a = -dL/du^a`.
    pub adjoint: Vec<(DepId, Expression)>,
    pub adjoint_vars: Vec<DepId>,
    pub divergence: Expression,
    pub factor: Factor,
    pub status: ResidualStatus,
    /// What is left of `Div T - W F - (factor) E`.
    pub remainder: Expression,
    pub prop1: Option<Prop1Comparison>,
}

impl DecompositionReport {
    pub fn w_dot_f(&self) -> Expression {
        self.adjoint.iter().map(|(d, f)| self.characteristic.get(d).cloned().unwrap_or_default() * f).sum()
    }

    /// `sum_k (factor_k applied to E_k)`.
    pub fn factor_part(&self, sys: &PdeSystem) -> Result<Expression> {
        let eqs = sys.equations();
        match &self.factor {
            Factor::Multipliers(qs) => Ok(qs.iter().zip(eqs).map(|(q, eq)| q * &eq.expr).sum()),
            Factor::Operators(ops) => {
                let mut out = Expression::zero();
                for ((op, eq), v) in ops.iter().zip(eqs).zip(&self.adjoint_vars) {
                    out += Expression::dep(*v) * op.apply(&eq.expr)?;
                }
                Ok(out)
            }
        }
    }

    /// `W F + (factor) E - Div T`; zero exactly when the decomposition holds.
    pub fn reassembly_residual(&self, sys: &PdeSystem) -> Result<Expression> {
        Ok(self.w_dot_f() + self.factor_part(sys)? - &self.divergence)
    }
}

struct Split {
    characteristic: Characteristic,
    adjoint: Vec<(DepId, Expression)>,
    divergence: Expression,
    rest: Expression,
}

/// `Div T` and `Div T - W F`.
fn split_off_wf(sys: &PdeSystem, g: &Generator) -> Result<Split> {
    let ctx = sys.context();
    let flux = noether_flux(sys, g)?;
    let div = divergence(&flux.components, ctx)?;
    let w = characteristic(g, ctx);
    let f = noether_adjoint(sys)?;
    let wf: Expression = f.iter().map(|(d, fa)| &w[d] * fa).sum();
    Ok(Split { rest: &div - &wf, characteristic: w, adjoint: f, divergence: div })
}

/// `Div T = W F + sum_k Q_k E_k`, with `Q_k` recovered by dividing by the
/// equations in declaration order.
pub fn decompose_prop1(sys: &PdeSystem, g: &Generator) -> Result<DecompositionReport> {
    if g.kind() != GeneratorKind::Point {
        return Err(Error::InvalidGenerator("the multiplier decomposition needs a point generator".into()));
    }
    let split = split_off_wf(sys, g)?;
    let mut remainder = split.rest.clone();
    let mut extracted = Vec::new();
    for eq in sys.equations() {
        let (q, r) = divide_with_remainder(&remainder, &eq.expr)?;
        extracted.push(q);
        remainder = r;
    }
    let status = if remainder.is_zero() { ResidualStatus::Zero } else { ResidualStatus::NotDivisible };
    let prop1 = prop1_prediction(sys, g, &extracted, status)?;
    Ok(DecompositionReport {
        characteristic: split.characteristic,
        adjoint: split.adjoint,
        adjoint_vars: sys.adjoint_vars()?,
        divergence: split.divergence,
        factor: Factor::Multipliers(extracted),
        status,
        remainder,
        prop1: Some(prop1),
    })
}

/// Common conformal factor of every equation, when there is one.
fn system_conformal(sys: &PdeSystem, g: &Generator) -> Result<Option<ConformalFactors>> {
    let mut common: Option<ConformalFactors> = None;
    for eq in sys.equations() {
        let cf = match conformal_factor(g, sys.context(), &eq.expr) {
            Ok(cf) => cf,
            Err(Error::NotConformal(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        match &common {
            Some(prev) if prev.mu1 != cf.mu1 => return Ok(None),
            Some(_) => {}
            None => common = Some(cf),
        }
    }
    Ok(common)
}

fn prop1_prediction(
    sys: &PdeSystem,
    g: &Generator,
    extracted: &[Expression],
    status: ResidualStatus,
) -> Result<Prop1Comparison> {
    let ctx = sys.context();
    let conformal = system_conformal(sys, g)?;
    let adjoints = sys.adjoint_vars()?;
    // u^a -> v_k where equation k solves for u^a
    let mut to_adjoint = BTreeMap::new();
    for d in ctx.originals() {
        if let Some(k) = sys.equation_for(d) {
            to_adjoint.insert(d, Expression::dep(adjoints[k]));
        }
    }
    let complete = ctx.originals().all(|d| to_adjoint.contains_key(&d));
    let predicted = match (&conformal, complete) {
        (Some(cf), true) => {
            let mut out = Vec::new();
            for (k, eq) in sys.equations().iter().enumerate() {
                let v = adjoints[k];
                let mut zv =
                    g.phi().get(&eq.leading.dep).cloned().unwrap_or_default().substitute_dependents(&to_adjoint)?;
                for (i, xi) in ctx.indep_ids().zip(g.xi()) {
                    let vi = Expression::deriv(v, MultiIndex::single(i));
                    zv += xi.substitute_dependents(&to_adjoint)? * vi;
                }
                let lambda = cf.lambda.substitute_dependents(&to_adjoint)?;
                out.push(zv - lambda * Expression::dep(v));
            }
            Some(out)
        }
        _ => None,
    };
    let agree = status == ResidualStatus::Zero && predicted.as_deref() == Some(extracted);
    Ok(Prop1Comparison { conformal, predicted, extracted: extracted.to_vec(), agree })
}

/// `Div T = W F + sum_k v_k (sum_{|J| <= K} c_{k,J} D_J) E_k` with the
/// `c_{k,J}` functions of the independent variables, found by matching
/// coefficients of every jet monomial.
pub fn decompose_prop2(sys: &PdeSystem, g: &Generator, max_op_order: u32) -> Result<DecompositionReport> {
    if g.kind() != GeneratorKind::Evolutionary {
        return Err(Error::InvalidGenerator("the operator decomposition needs an evolutionary generator".into()));
    }
    let ctx = sys.context();
    let split = split_off_wf(sys, g)?;
    let adjoint_vars = sys.adjoint_vars()?;
    let indices = MultiIndex::up_to_order(ctx.n_independents(), max_op_order);

    let mut unknowns = Vec::new();
    let mut columns = Vec::new();
    for (k, eq) in sys.equations().iter().enumerate() {
        let mut table = DerivativeTable::new(eq.expr.clone());
        for j in &indices {
            columns.push((Expression::dep(adjoint_vars[k]) * table.get(j)?).split_independent());
            unknowns.push((k, j.clone()));
        }
    }
    let target = split.rest.split_independent();
    let mut keys: Vec<&Monomial> = target.keys().chain(columns.iter().flat_map(|c| c.keys())).collect();
    keys.sort();
    keys.dedup();
    let rows: Vec<Row> = keys
        .iter()
        .map(|m| Row {
            coeffs: columns.iter().map(|c| c.get(*m).cloned().unwrap_or_default()).collect(),
            rhs: target.get(*m).cloned().unwrap_or_default(),
        })
        .collect();

    let mut ops = vec![LinearDiffOperator::zero(); sys.equations().len()];
    let (status, remainder) = match solve(rows, unknowns.len())? {
        Some(values) => {
            for ((k, j), c) in unknowns.into_iter().zip(values) {
                ops[k].add_term(j, c);
            }
            let mut rem = split.rest.clone();
            for ((op, eq), v) in ops.iter().zip(sys.equations()).zip(&adjoint_vars) {
                rem -= Expression::dep(*v) * op.apply(&eq.expr)?;
            }
            let status = if rem.is_zero() { ResidualStatus::Zero } else { ResidualStatus::NotDivisible };
            (status, rem)
        }
        None => {
            let eq_order = sys.equations().iter().flat_map(|eq| eq.expr.jets()).map(|c| c.order()).max().unwrap_or(0);
            let needed = split
                .rest
                .jets()
                .iter()
                .filter(|c| ctx.kind(c.dep) == VarKind::Original)
                .map(|c| c.order())
                .max()
                .unwrap_or(0);
            if needed > eq_order + max_op_order {
                return Err(Error::UnderdeterminedOrder { max_op_order });
            }
            (ResidualStatus::NotDivisible, split.rest.clone())
        }
    };
    Ok(DecompositionReport {
        characteristic: split.characteristic,
        adjoint: split.adjoint,
        adjoint_vars,
        divergence: split.divergence,
        factor: Factor::Operators(ops),
        status,
        remainder,
        prop1: None,
    })
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<Expression>,
    rhs: Expression,
}

impl Row {
    fn combine(&self, own: &Expression, other: &Row, factor: &Expression) -> Row {
        Row {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| own * a - factor * b).collect(),
            rhs: own * &self.rhs - factor * &other.rhs,
        }
    }
}

/// Pivot preference: constants first, then the shortest coefficient.
fn pivot_rank(e: &Expression) -> (bool, usize) {
    (e.as_constant().is_none(), e.len())
}

/// Solves `rows` over functions of the independent variables; free
/// unknowns are set to zero. `None` when the system is inconsistent.
fn solve(mut rows: Vec<Row>, n: usize) -> Result<Option<Vec<Expression>>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len())
            .filter(|&i| !rows[i].coeffs[col].is_zero())
            .min_by_key(|&i| pivot_rank(&rows[i].coeffs[col]))
        else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].coeffs[col].clone();
        let pivot_row = rows[r].clone();
        for row in rows.iter_mut().skip(r + 1) {
            let f = row.coeffs[col].clone();
            if f.is_zero() {
                continue;
            }
            *row = match pivot.as_constant() {
                Some(c) => row.combine(&Expression::one(), &pivot_row, &f.scale(&c.recip())),
                None => row.combine(&pivot, &pivot_row, &f),
            };
        }
        pivots.push((r, col));
        r += 1;
    }
    if rows[r..].iter().any(|row| !row.rhs.is_zero()) {
        return Ok(None);
    }
    let mut values = vec![Expression::zero(); n];
    for &(row, col) in pivots.iter().rev() {
        let mut rhs = rows[row].rhs.clone();
        for (c, coeff) in rows[row].coeffs.iter().enumerate() {
            if c != col && !coeff.is_zero() && !values[c].is_zero() {
                rhs -= coeff * &values[c];
            }
        }
        values[col] = match exact_divide(&rhs, &rows[row].coeffs[col]) {
            Ok(v) => v,
            Err(Error::NotDivisible) => return Ok(None),
            Err(e) => return Err(e),
        };
    }
    Ok(Some(values))
}
