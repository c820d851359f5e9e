//! The symbol universe: independent variables, dependent variables (original
//! and adjoint), multi-indices and jet coordinates.
//!
//! Everything downstream refers to variables by position ([`IndepId`],
//! [`DepId`]) inside one [`Context`]; names only matter for parsing and
//! rendering.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndepId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DepId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Original,
    Adjoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependentVar {
    pub name: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependentVar {
    pub name: String,
    pub position: usize,
    pub kind: VarKind,
}

/// Differentiation counts per independent variable.
///
/// Stored without trailing zeros, so the representation does not depend on
/// how many independents the context declares and `D_x D_t` equals `D_t D_x`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    counts: Vec<u32>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: impl Into<Vec<u32>>) -> Self {
        Self { counts: counts.into() }.canonicalize()
    }

    /// Builds the index of a differentiation sequence, in any order.
    pub fn from_sequence(seq: &[IndepId]) -> Self {
        let mut index = Self::zero();
        for &i in seq {
            index = index.raised(i);
        }
        index
    }

    pub fn single(i: IndepId) -> Self {
        Self::zero().raised(i)
    }

    pub fn canonicalize(mut self) -> Self {
        while self.counts.last() == Some(&0) {
            self.counts.pop();
        }
        self
    }

    pub fn order(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, i: IndepId) -> u32 {
        self.counts.get(i.0).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn raised(&self, i: IndepId) -> Self {
        let mut counts = self.counts.clone();
        if counts.len() <= i.0 {
            counts.resize(i.0 + 1, 0);
        }
        counts[i.0] += 1;
        Self { counts }
    }

    pub fn lowered(&self, i: IndepId) -> Option<Self> {
        if self.count(i) == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[i.0] -= 1;
        Some(Self { counts }.canonicalize())
    }

    pub fn plus(&self, other: &MultiIndex) -> Self {
        let len = self.counts.len().max(other.counts.len());
        let counts = (0..len).map(|k| self.count(IndepId(k)) + other.count(IndepId(k))).collect::<Vec<_>>();
        Self { counts }
    }

    /// `self - other` when `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<Self> {
        let mut counts = self.counts.clone();
        for (k, &c) in other.counts.iter().enumerate() {
            let slot = counts.get_mut(k)?;
            *slot = slot.checked_sub(c)?;
        }
        Some(Self { counts }.canonicalize())
    }

    pub fn contains(&self, other: &MultiIndex) -> bool {
        self.checked_sub(other).is_some()
    }

    /// One differentiation sequence for this index, grouped by variable.
    pub fn sequence(&self) -> Vec<IndepId> {
        self.counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(IndepId(k), c as usize)).collect()
    }

    /// Number of distinct differentiation orderings, `|J|! / prod(J_k!)`.
    pub fn multinomial(&self) -> u128 {
        let mut result: u128 = 1;
        let mut seen: u128 = 0;
        for &c in &self.counts {
            for j in 1..=c as u128 {
                seen += 1;
                // running binomial product stays integral at every step
                result = result * seen / j;
            }
        }
        result
    }

    /// Every index `a` with `a <= self` componentwise, in canonical order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero()];
        for (k, &c) in self.counts.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
            for base in &out {
                let mut idx = base.clone();
                next.push(idx.clone());
                for _ in 0..c {
                    idx = idx.raised(IndepId(k));
                    next.push(idx.clone());
                }
            }
            out = next;
        }
        let mut out: Vec<_> = out.into_iter().map(MultiIndex::canonicalize).collect();
        out.sort();
        out
    }

    /// All indices of exactly `order` over `n` independents, canonical order.
    pub fn all_of_order(n: usize, order: u32) -> Vec<MultiIndex> {
        fn fill(n: usize, k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if k + 1 == n {
                cur.push(left);
                out.push(MultiIndex::from_counts(cur.clone()));
                cur.pop();
                return;
            }
            for c in (0..=left).rev() {
                cur.push(c);
                fill(n, k + 1, left - c, cur, out);
                cur.pop();
            }
        }
        if n == 0 {
            return if order == 0 { vec![MultiIndex::zero()] } else { Vec::new() };
        }
        let mut out = Vec::new();
        fill(n, 0, order, &mut Vec::with_capacity(n), &mut out);
        out
    }

    pub fn up_to_order(n: usize, max_order: u32) -> Vec<MultiIndex> {
        (0..=max_order).flat_map(|k| Self::all_of_order(n, k)).collect()
    }
}

impl Ord for MultiIndex {
    /// Total order first; within an order, more differentiations in an
    /// earlier-declared variable sort first (`xx < xt < tt` for `x, t`).
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| {
            let len = self.counts.len().max(other.counts.len());
            for k in 0..len {
                let (a, b) = (self.count(IndepId(k)), other.count(IndepId(k)));
                if a != b {
                    return b.cmp(&a);
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A derivative symbol `u_J`; order 0 is the dependent variable itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetCoordinate {
    pub dep: DepId,
    pub index: MultiIndex,
}

impl JetCoordinate {
    pub fn new(dep: DepId, index: MultiIndex) -> Self {
        Self { dep, index }
    }

    pub fn base(dep: DepId) -> Self {
        Self::new(dep, MultiIndex::zero())
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }

    pub fn raised(&self, i: IndepId) -> Self {
        Self::new(self.dep, self.index.raised(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    independents: Vec<IndependentVar>,
    dependents: Vec<DependentVar>,
}

impl Context {
    pub fn new(independents: &[&str], originals: &[&str], adjoints: &[&str]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for name in independents.iter().chain(originals).chain(adjoints) {
            if !seen.insert(*name) {
                return Err(Error::DuplicateName(name.to_string()));
            }
        }
        let independents = independents
            .iter()
            .enumerate()
            .map(|(position, name)| IndependentVar { name: name.to_string(), position })
            .collect();
        let dependents = originals
            .iter()
            .map(|n| (n, VarKind::Original))
            .chain(adjoints.iter().map(|n| (n, VarKind::Adjoint)))
            .enumerate()
            .map(|(position, (name, kind))| DependentVar { name: name.to_string(), position, kind })
            .collect();
        Ok(Self { independents, dependents })
    }

    pub fn independents(&self) -> &[IndependentVar] {
        &self.independents
    }

    pub fn dependents(&self) -> &[DependentVar] {
        &self.dependents
    }

    pub fn n_independents(&self) -> usize {
        self.independents.len()
    }

    pub fn indep_ids(&self) -> impl Iterator<Item = IndepId> + '_ {
        (0..self.independents.len()).map(IndepId)
    }

    pub fn originals(&self) -> impl Iterator<Item = DepId> + '_ {
        self.dependents.iter().filter(|d| d.kind == VarKind::Original).map(|d| DepId(d.position))
    }

    pub fn adjoints(&self) -> impl Iterator<Item = DepId> + '_ {
        self.dependents.iter().filter(|d| d.kind == VarKind::Adjoint).map(|d| DepId(d.position))
    }

    pub fn indep(&self, name: &str) -> Option<IndepId> {
        self.independents.iter().position(|v| v.name == name).map(IndepId)
    }

    pub fn dep(&self, name: &str) -> Option<DepId> {
        self.dependents.iter().position(|v| v.name == name).map(DepId)
    }

    pub fn indep_name(&self, i: IndepId) -> &str {
        &self.independents[i.0].name
    }

    pub fn dep_name(&self, d: DepId) -> &str {
        &self.dependents[d.0].name
    }

    pub fn kind(&self, d: DepId) -> VarKind {
        self.dependents[d.0].kind
    }

    /// Functional notation used throughout I/O: `u`, `D(u,x)`, `D(u,t,x,x)`.
    pub fn coordinate_name(&self, c: &JetCoordinate) -> String {
        let dep = self.dep_name(c.dep);
        if c.index.is_zero() {
            return dep.to_string();
        }
        let mut s = format!("D({dep}");
        for i in c.index.sequence() {
            s.push(',');
            s.push_str(self.indep_name(i));
        }
        s.push(')');
        s
    }

    /// Every coordinate of order `<= max_order`, ordered by dependent, then
    /// index order, then counts in declaration order.
    pub fn enumerate_coordinates(&self, max_order: u32) -> Vec<JetCoordinate> {
        let indices = MultiIndex::up_to_order(self.n_independents(), max_order);
        (0..self.dependents.len())
            .flat_map(|d| indices.iter().map(move |j| JetCoordinate::new(DepId(d), j.clone())))
            .collect()
    }
}
