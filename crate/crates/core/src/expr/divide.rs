use super::Expression;
use crate::error::{Error, Result};

/// Division by leading-term elimination under the graded monomial order.
///
/// Returns `(quotient, remainder)` with `num = quotient * den + remainder`
/// and no term of the remainder divisible by the leading monomial of `den`.
pub fn divide_with_remainder(num: &Expression, den: &Expression) -> Result<(Expression, Expression)> {
    let (lead_m, lead_c) = match den.leading_term() {
        Some((m, c)) => (m.clone(), c.clone()),
        None => return Err(Error::DivisionByZero),
    };
    let mut rest = num.clone();
    let mut quotient = Expression::zero();
    let mut remainder = Expression::zero();
    while let Some((m, c)) = rest.leading_term() {
        let (m, c) = (m.clone(), c.clone());
        match m.div(&lead_m) {
            Some(q) => {
                let step = Expression::term(q, &c / &lead_c);
                rest -= &step * den;
                quotient += step;
            }
            None => {
                let lead = Expression::term(m, c);
                rest -= &lead;
                remainder += lead;
            }
        }
    }
    Ok((quotient, remainder))
}

/// `num / den`, failing with [`Error::NotDivisible`] when a remainder is left.
pub fn exact_divide(num: &Expression, den: &Expression) -> Result<Expression> {
    let (q, r) = divide_with_remainder(num, den)?;
    if r.is_zero() {
        Ok(q)
    } else {
        Err(Error::NotDivisible)
    }
}
