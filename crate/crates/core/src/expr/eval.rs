use std::collections::{BTreeSet, HashMap};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Atom, Expression};
use crate::error::{Error, Result};

/// Values for variable atoms (jet coordinates and independent variables).
pub type Point = HashMap<Atom, f64>;

pub fn eval_numeric(e: &Expression, point: &Point) -> Result<f64> {
    eval_with_scale(e, point).map(|(v, _)| v)
}

/// Value of `e` together with the largest absolute term value, which sets the
/// scale for relative tolerances.
pub fn eval_with_scale(e: &Expression, point: &Point) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut scale: f64 = 0.0;
    for (m, c) in e.terms() {
        let mut term = c.to_f64().unwrap_or(f64::NAN);
        for (atom, p) in m.factors() {
            let base = match atom {
                Atom::Func(h, arg) => h.eval(eval_numeric(arg, point)?),
                _ => *point.get(atom).ok_or_else(|| Error::MissingAssignment(format!("{atom:?}")))?,
            };
            term *= base.powi(*p as i32);
        }
        scale = scale.max(term.abs());
        total += term;
    }
    Ok((total, scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroStatus {
    Zero,
    NumericallyZero,
    NonZero,
}

impl ZeroStatus {
    pub fn is_zero(self) -> bool {
        self != ZeroStatus::NonZero
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ZeroStatus::Zero => "zero",
            ZeroStatus::NumericallyZero => "numerically_zero",
            ZeroStatus::NonZero => "nonzero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTest {
    pub points: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        Self { points: 20, tolerance: 1e-8, seed: 0x5eed }
    }
}

impl ZeroTest {
    /// `|residual| <= tol * (1 + scale)`.
    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual.is_finite() && residual.abs() <= self.tolerance * (1.0 + scale)
    }
}

/// Seeded uniform sampler over `[-2, 2]`.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn point(&mut self, vars: &BTreeSet<Atom>) -> Point {
        vars.iter().map(|a| (a.clone(), self.rng.gen_range(-2.0..=2.0))).collect()
    }
}

/// `Zero` for the empty term map; otherwise samples `cfg.points` random
/// points and reports `NumericallyZero` when every residual is within
/// tolerance.
pub fn zero_status(e: &Expression, cfg: &ZeroTest) -> ZeroStatus {
    if e.is_zero() {
        return ZeroStatus::Zero;
    }
    let vars = e.variables();
    let mut sampler = Sampler::new(cfg.seed);
    for _ in 0..cfg.points.max(1) {
        let point = sampler.point(&vars);
        match eval_with_scale(e, &point) {
            Ok((v, s)) if cfg.accepts(v, s) => {}
            _ => return ZeroStatus::NonZero,
        }
    }
    ZeroStatus::NumericallyZero
}
