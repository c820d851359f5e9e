pub mod adjointcl;
pub mod corpus;
pub mod diffops;
pub mod dsl;
pub mod error;
pub mod expr;
pub mod jetspace;
pub mod oracle;
pub mod runner;
pub mod symmetry;

pub use error::{Error, Result};
pub use expr::Expression;
pub use jetspace::{Context, DepId, IndepId, JetCoordinate, MultiIndex};
