use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("division by the zero expression")]
    DivisionByZero,

    #[error("exact division left a nonzero remainder")]
    NotDivisible,

    #[error("no value assigned to `{0}`")]
    MissingAssignment(String),

    #[error("cannot differentiate `{0}`: its derivative is not polynomial in the atoms")]
    UnsupportedDerivative(String),

    #[error("euler operator bound {given} is below the expression's order {required}")]
    MaxOrderTooSmall { given: u32, required: u32 },

    #[error("expected {expected} components, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid binding: {0}")]
    InvalidBinding(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("the system has {equations} equations but only {adjoints} adjoint variables are declared")]
    NotEnoughAdjointVars { equations: usize, adjoints: usize },

    #[error("generator does not map equation `{0}` to a multiple of itself")]
    NotConformal(String),

    #[error("operator ansatz of order {max_op_order} cannot express the residual; raise the order")]
    UnderdeterminedOrder { max_op_order: u32 },

    #[error("decomposition report carries no multiplier (operator-form report)")]
    NoMultiplier,

    #[error("on-solution reduction did not terminate within {0} passes")]
    ReductionDiverged(usize),
}
