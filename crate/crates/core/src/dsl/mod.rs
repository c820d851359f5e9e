//! Problem files: declarations, equations, generators, adjoint solutions
//! and tasks, plus text and JSON rendering of expressions.

use std::fmt;

use crate::adjointcl::{AdjointSolution, PdeSystem};
use crate::diffops::LinearDiffOperator;
use crate::expr::Expression;
use crate::jetspace::Context;
use crate::symmetry::Generator;

mod json;
mod lexer;
mod parser;
mod render;

pub use json::{expression_from_json, expression_to_json, operator_to_json};
pub use parser::{parse_expression, parse_problem};
pub use render::{render, render_operator, Format};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>, expected: Vec<String>) -> Self {
        Self { line, col, message: message.into(), expected }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Adjoint,
    Flux {
        generator: String,
    },
    Decompose1 {
        generator: String,
    },
    Decompose2 {
        generator: String,
        max_order: Option<u32>,
    },
    Multiplier {
        generator: String,
        solution: String,
    },
    Verify {
        generator: String,
        solution: Option<String>,
    },
    /// Euler-annihilation test of explicit multipliers, one per equation.
    Annihilate {
        multipliers: Vec<Expression>,
    },
}

impl Directive {
    pub fn keyword(&self) -> &'static str {
        match self {
            Directive::Adjoint => "adjoint",
            Directive::Flux { .. } => "flux",
            Directive::Decompose1 { .. } => "decompose1",
            Directive::Decompose2 { .. } => "decompose2",
            Directive::Multiplier { .. } => "multiplier",
            Directive::Verify { .. } => "verify",
            Directive::Annihilate { .. } => "annihilate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpectValue {
    Bool(bool),
    Expr(Expression),
    List(Vec<Expression>),
    Operators(Vec<LinearDiffOperator>),
}

/// Golden value attached to a task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub key: String,
    pub value: ExpectValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub directive: Directive,
    pub expect: Vec<Expectation>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub context: Context,
    pub system: PdeSystem,
    pub generators: Vec<(String, Generator)>,
    pub solutions: Vec<(String, AdjointSolution)>,
    pub tasks: Vec<Task>,
}

impl Problem {
    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.generators.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn solution(&self, name: &str) -> Option<&AdjointSolution> {
        self.solutions.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}
