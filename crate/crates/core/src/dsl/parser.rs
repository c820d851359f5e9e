use std::collections::BTreeMap;

use num_traits::Zero;

use super::lexer::{tokenize, Tok, Token};
use super::{Directive, ExpectValue, Expectation, ParseError, Problem, Task};
use crate::adjointcl::{AdjointSolution, Equation, PdeSystem};
use crate::diffops::LinearDiffOperator;
use crate::expr::{FuncHead, Rational};
use crate::jetspace::{Context, DepId, IndepId, JetCoordinate, MultiIndex, VarKind};
use crate::symmetry::Generator;
use crate::Expression;

const STATEMENTS: [&str; 7] = ["independent", "dependent", "adjoint", "equation", "generator", "solution", "task"];
const RESERVED: [&str; 14] = [
    "independent",
    "dependent",
    "adjoint",
    "equation",
    "generator",
    "solution",
    "task",
    "leading",
    "expect",
    "D",
    "exp",
    "sin",
    "cos",
    "log",
];

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    ctx: Option<&'a Context>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(text: &str) -> PResult<Self> {
        Ok(Self { toks: tokenize(text)?, pos: 0, ctx: None })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError::new(t.line, t.col, message, expected.iter().map(|s| s.to_string()).collect())
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        self.error_at(t, format!("unexpected {}", t.tok.describe()), expected)
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        let hit = self.is_sym(c);
        if hit {
            self.next();
        }
        hit
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{c}`")]))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{w}`")]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Token)> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.next()))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn int(&mut self) -> PResult<u32> {
        match &self.peek().tok {
            Tok::Int(s) => {
                let s = s.clone();
                let t = self.next();
                s.parse().map_err(|_| self.error_at(&t, "integer too large", &[]))
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn ctx(&self) -> &'a Context {
        self.ctx.expect("context is set before expressions are parsed")
    }

    fn indep(&mut self) -> PResult<IndepId> {
        let (name, t) = self.ident()?;
        self.ctx()
            .indep(&name)
            .ok_or_else(|| self.error_at(&t, format!("`{name}` is not an independent variable"), &[]))
    }

    fn dep(&mut self) -> PResult<(DepId, Token)> {
        let (name, t) = self.ident()?;
        match self.ctx().dep(&name) {
            Some(d) => Ok((d, t)),
            None => Err(self.error_at(&t, format!("`{name}` is not a dependent variable"), &[])),
        }
    }

    // expression grammar

    fn expr(&mut self) -> PResult<Expression> {
        let mut acc = if self.eat_sym('-') {
            -self.term()?
        } else {
            self.eat_sym('+');
            self.term()?
        };
        loop {
            if self.eat_sym('+') {
                acc += self.term()?;
            } else if self.eat_sym('-') {
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Expression> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_sym('*') {
                acc = acc * self.unary()?;
            } else if self.is_sym('/') {
                let t = self.next();
                let d = self.unary()?;
                match d.as_constant() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&c.recip()),
                    Some(_) => return Err(self.error_at(&t, "division by zero", &[])),
                    None => return Err(self.error_at(&t, "only division by a nonzero constant is supported", &[])),
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expression> {
        if self.eat_sym('-') {
            return Ok(-self.unary()?);
        }
        let base = self.primary()?;
        if self.eat_sym('^') {
            let n = self.int()?;
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expression> {
        const EXPECTED: [&str; 5] = ["number", "variable", "`D(`", "function", "`(`"];
        match self.peek().tok.clone() {
            Tok::Int(s) => {
                self.next();
                let n: num_bigint::BigInt = s.parse().expect("digits");
                Ok(Expression::constant(Rational::from_integer(n)))
            }
            Tok::Sym('(') => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(s) if s == "D" => {
                let c = self.derivative()?;
                Ok(Expression::jet(c))
            }
            Tok::Ident(s) if FuncHead::from_name(&s).is_some() => {
                self.next();
                self.expect_sym('(')?;
                let arg = self.expr()?;
                self.expect_sym(')')?;
                Ok(Expression::apply(FuncHead::from_name(&s).expect("checked"), arg))
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let t = self.next();
                let ctx = self.ctx();
                if let Some(i) = ctx.indep(&s) {
                    Ok(Expression::indep(i))
                } else if let Some(d) = ctx.dep(&s) {
                    Ok(Expression::dep(d))
                } else {
                    Err(self.error_at(&t, format!("undeclared variable `{s}`"), &[]))
                }
            }
            _ => Err(self.unexpected(&EXPECTED)),
        }
    }

    /// `D(u, x, x, t)`
    fn derivative(&mut self) -> PResult<JetCoordinate> {
        self.expect_word("D")?;
        self.expect_sym('(')?;
        let (dep, _) = self.dep()?;
        let mut seq = Vec::new();
        while self.eat_sym(',') {
            seq.push(self.indep()?);
        }
        self.expect_sym(')')?;
        Ok(JetCoordinate::new(dep, MultiIndex::from_sequence(&seq)))
    }

    fn expr_list(&mut self) -> PResult<Vec<Expression>> {
        self.expect_sym('[')?;
        let mut out = Vec::new();
        if !self.is_sym(']') {
            out.push(self.expr()?);
            while self.eat_sym(',') {
                out.push(self.expr()?);
            }
        }
        self.expect_sym(']')?;
        Ok(out)
    }

    /// `{ D[]: e, D[x,x]: e }`
    fn operator(&mut self) -> PResult<LinearDiffOperator> {
        self.expect_sym('{')?;
        let mut op = LinearDiffOperator::zero();
        if !self.is_sym('}') {
            loop {
                self.expect_word("D")?;
                self.expect_sym('[')?;
                let mut seq = Vec::new();
                if !self.is_sym(']') {
                    seq.push(self.indep()?);
                    while self.eat_sym(',') {
                        seq.push(self.indep()?);
                    }
                }
                self.expect_sym(']')?;
                self.expect_sym(':')?;
                let c = self.expr()?;
                op.add_term(MultiIndex::from_sequence(&seq), c);
                if !self.eat_sym(',') {
                    break;
                }
            }
        }
        self.expect_sym('}')?;
        Ok(op)
    }

    fn at_statement(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if STATEMENTS.contains(&s.as_str())) || self.peek().tok == Tok::Eof
    }
}

/// Parses a single expression over an existing context.
pub fn parse_expression(text: &str, ctx: &Context) -> Result<Expression, ParseError> {
    let mut p = Parser::new(text)?;
    p.ctx = Some(ctx);
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}

struct Declarations {
    independents: Vec<String>,
    originals: Vec<String>,
    adjoints: Vec<String>,
}

fn parse_declarations(p: &mut Parser<'_>) -> PResult<Declarations> {
    let mut d = Declarations { independents: Vec::new(), originals: Vec::new(), adjoints: Vec::new() };
    loop {
        p.eat_sym(';');
        let list = if p.is_word("independent") {
            &mut d.independents
        } else if p.is_word("dependent") {
            &mut d.originals
        } else if p.is_word("adjoint") {
            &mut d.adjoints
        } else {
            return Ok(d);
        };
        let kw = p.next();
        let before = list.len();
        while let Tok::Ident(s) = &p.peek().tok {
            if RESERVED.contains(&s.as_str()) {
                break;
            }
            list.push(p.ident()?.0);
        }
        if list.len() == before {
            return Err(p.error_at(&kw, "declaration lists at least one name", &["identifier"]));
        }
    }
}

/// Parses a complete problem file.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut p = Parser::new(text)?;
    let start = p.peek().clone();
    let decls = parse_declarations(&mut p)?;
    fn names(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    let ctx = Context::new(&names(&decls.independents), &names(&decls.originals), &names(&decls.adjoints))
        .map_err(|e| p.error_at(&start, e.to_string(), &[]))?;
    let body = parse_body(text, &ctx, p.pos)?;
    Ok(body)
}

fn parse_body(text: &str, ctx: &Context, pos: usize) -> PResult<Problem> {
    let mut p = Parser::new(text)?;
    p.pos = pos;
    p.ctx = Some(ctx);
    let mut equations: Vec<(Equation, Token)> = Vec::new();
    let mut generators: Vec<(String, Generator)> = Vec::new();
    let mut solutions: Vec<(String, AdjointSolution)> = Vec::new();
    let mut tasks: Vec<(Task, Vec<(String, Token)>)> = Vec::new();
    loop {
        p.eat_sym(';');
        let t = p.peek().clone();
        match &t.tok {
            Tok::Eof => break,
            Tok::Ident(s) if s == "independent" || s == "dependent" || s == "adjoint" => {
                return Err(p.error_at(&t, "declarations must precede all other statements", &[]));
            }
            Tok::Ident(s) if s == "equation" => {
                p.next();
                let (name, _) = p.ident()?;
                p.expect_sym(':')?;
                let lhs = p.expr()?;
                p.expect_sym('=')?;
                let rhs = p.expr()?;
                p.expect_word("leading")?;
                let lead_tok = p.peek().clone();
                let leading = if p.is_word("D") { p.derivative()? } else { JetCoordinate::base(p.dep()?.0) };
                equations.push((Equation { name, expr: lhs - rhs, leading }, lead_tok));
            }
            Tok::Ident(s) if s == "generator" => {
                p.next();
                let (name, name_tok) = p.ident()?;
                if generators.iter().any(|(n, _)| *n == name) {
                    return Err(p.error_at(&name_tok, format!("generator `{name}` is defined twice"), &[]));
                }
                p.expect_sym(':')?;
                let g = parse_generator(&mut p, ctx)?;
                generators.push((name, g));
            }
            Tok::Ident(s) if s == "solution" => {
                p.next();
                let (name, name_tok) = p.ident()?;
                if solutions.iter().any(|(n, _)| *n == name) {
                    return Err(p.error_at(&name_tok, format!("solution `{name}` is defined twice"), &[]));
                }
                p.expect_sym(':')?;
                let mut map = BTreeMap::new();
                loop {
                    let (d, dt) = p.dep()?;
                    if ctx.kind(d) != VarKind::Adjoint {
                        return Err(p.error_at(&dt, "solutions bind adjoint variables", &[]));
                    }
                    p.expect_sym('=')?;
                    map.insert(d, p.expr()?);
                    if !p.eat_sym(',') {
                        break;
                    }
                }
                solutions.push((name, map));
            }
            Tok::Ident(s) if s == "task" => {
                p.next();
                tasks.push(parse_task(&mut p, t.line)?);
            }
            _ => return Err(p.unexpected(&STATEMENTS)),
        }
    }

    let first = equations.first().map(|(_, t)| t.clone());
    let system = PdeSystem::new(ctx.clone(), equations.into_iter().map(|(e, _)| e).collect()).map_err(|e| {
        let at = first.clone().unwrap_or_else(|| p.peek().clone());
        p.error_at(&at, e.to_string(), &[])
    })?;

    let mut out_tasks = Vec::new();
    for (task, refs) in tasks {
        for (name, tok) in refs {
            let known = generators.iter().any(|(n, _)| *n == name) || solutions.iter().any(|(n, _)| *n == name);
            if !known {
                return Err(p.error_at(&tok, format!("unknown generator or solution `{name}`"), &[]));
            }
        }
        out_tasks.push(task);
    }
    Ok(Problem { context: ctx.clone(), system, generators, solutions, tasks: out_tasks })
}

fn parse_generator(p: &mut Parser<'_>, ctx: &Context) -> PResult<Generator> {
    let kind_tok = p.peek().clone();
    let point = if p.is_word("point") {
        true
    } else if p.is_word("evolutionary") {
        false
    } else {
        return Err(p.unexpected(&["`point`", "`evolutionary`"]));
    };
    p.next();
    p.expect_sym('{')?;
    let mut xi = vec![Expression::zero(); ctx.n_independents()];
    let mut phi = BTreeMap::new();
    if !p.is_sym('}') {
        loop {
            let key_tok = p.peek().clone();
            if point && p.is_word("xi") {
                p.next();
                p.expect_sym('(')?;
                let i = p.indep()?;
                p.expect_sym(')')?;
                p.expect_sym('=')?;
                xi[i.0] = p.expr()?;
            } else if p.is_word("phi") {
                p.next();
                p.expect_sym('(')?;
                let (d, dt) = p.dep()?;
                if ctx.kind(d) != VarKind::Original {
                    return Err(p.error_at(&dt, "phi applies to original dependent variables", &[]));
                }
                p.expect_sym(')')?;
                p.expect_sym('=')?;
                phi.insert(d, p.expr()?);
            } else {
                let expected: &[&str] = if point { &["`xi(`", "`phi(`"] } else { &["`phi(`"] };
                return Err(p.error_at(&key_tok, format!("unexpected {}", key_tok.tok.describe()), expected));
            }
            if !p.eat_sym(',') {
                break;
            }
        }
    }
    p.expect_sym('}')?;
    let g = if point { Generator::point(ctx, xi, phi) } else { Generator::evolutionary(ctx, phi) };
    g.map_err(|e| p.error_at(&kind_tok, e.to_string(), &[]))
}

fn parse_task(p: &mut Parser<'_>, line: usize) -> PResult<(Task, Vec<(String, Token)>)> {
    const DIRECTIVES: [&str; 7] = ["adjoint", "flux", "decompose1", "decompose2", "multiplier", "verify", "annihilate"];
    let mut refs = Vec::new();
    let mut name = |p: &mut Parser<'_>| -> PResult<String> {
        let (n, t) = p.ident()?;
        refs.push((n.clone(), t));
        Ok(n)
    };
    let word = match &p.peek().tok {
        Tok::Ident(s) if DIRECTIVES.contains(&s.as_str()) => s.clone(),
        _ => return Err(p.unexpected(&DIRECTIVES)),
    };
    p.next();
    let directive = match word.as_str() {
        "adjoint" => Directive::Adjoint,
        "flux" => Directive::Flux { generator: name(p)? },
        "decompose1" => Directive::Decompose1 { generator: name(p)? },
        "decompose2" => {
            let generator = name(p)?;
            let max_order = match p.peek().tok {
                Tok::Int(_) => Some(p.int()?),
                _ => None,
            };
            Directive::Decompose2 { generator, max_order }
        }
        "multiplier" => Directive::Multiplier { generator: name(p)?, solution: name(p)? },
        "verify" => {
            let generator = name(p)?;
            let solution = match &p.peek().tok {
                Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => Some(name(p)?),
                _ => None,
            };
            Directive::Verify { generator, solution }
        }
        "annihilate" => Directive::Annihilate { multipliers: p.expr_list()? },
        _ => unreachable!("directive list is exhaustive"),
    };
    let mut expect = Vec::new();
    if p.is_word("expect") {
        p.next();
        p.expect_sym('{')?;
        if !p.is_sym('}') {
            loop {
                expect.push(parse_expectation(p)?);
                if !p.eat_sym(',') {
                    break;
                }
            }
        }
        p.expect_sym('}')?;
    }
    if !p.at_statement() && !p.is_sym(';') {
        return Err(p.unexpected(&["`expect`", "statement"]));
    }
    Ok((Task { directive, expect, line }, refs))
}

fn parse_expectation(p: &mut Parser<'_>) -> PResult<Expectation> {
    let key = match &p.peek().tok {
        Tok::Ident(s) => s.clone(),
        _ => return Err(p.unexpected(&["expectation key"])),
    };
    p.next();
    p.expect_sym('=')?;
    let value = if p.is_word("true") || p.is_word("false") {
        ExpectValue::Bool(p.next().tok == Tok::Ident("true".into()))
    } else if p.is_sym('[') && p.peek_at(1) == &Tok::Sym('{') {
        p.next();
        let mut ops = vec![p.operator()?];
        while p.eat_sym(',') {
            ops.push(p.operator()?);
        }
        p.expect_sym(']')?;
        ExpectValue::Operators(ops)
    } else if p.is_sym('[') {
        ExpectValue::List(p.expr_list()?)
    } else {
        ExpectValue::Expr(p.expr()?)
    };
    Ok(Expectation { key, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = "\
# heat equation
independent t x
dependent u
adjoint v
equation heat : D(u,t) - D(u,x,x) = 0 leading D(u,t)
generator galilean : point { xi(x) = 2*t, phi(u) = -x*u }
solution affine : v = x
task adjoint expect { F = [D(v,t) + D(v,x,x)] }
task multiplier galilean affine expect { Q = [-x^2 + 2*t] }
";

    #[test]
    fn parses_heat_problem() {
        let prob = parse_problem(HEAT).unwrap();
        let ctx = &prob.context;
        assert_eq!(ctx.n_independents(), 2);
        let eq = &prob.system.equations()[0];
        assert_eq!(eq.name, "heat");
        assert_eq!(eq.expr, parse_expression("D(u,t) - D(u,x,x)", ctx).unwrap());
        let g = prob.generator("galilean").unwrap();
        assert_eq!(g.xi()[1], parse_expression("2*t", ctx).unwrap());
        assert_eq!(prob.solution("affine").unwrap().len(), 1);
        assert_eq!(prob.tasks.len(), 2);
        assert_eq!(
            prob.tasks[1].directive,
            Directive::Multiplier { generator: "galilean".into(), solution: "affine".into() }
        );
        assert_eq!(prob.tasks[1].line, 9);
    }

    #[test]
    fn crlf_and_semicolons() {
        let text = HEAT.replace('\n', ";\r\n");
        assert_eq!(parse_problem(&text).unwrap(), parse_problem(HEAT).unwrap());
    }

    #[test]
    fn resolution_errors_carry_positions() {
        let bad = HEAT.replace("phi(u) = -x*u", "phi(w) = -x*u");
        let err = parse_problem(&bad).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.message.contains("`w`"), "{err}");

        let bad = HEAT.replace("task adjoint", "task adjoint_eq");
        let err = parse_problem(&bad).unwrap_err();
        assert!(err.expected.contains(&"adjoint".to_string()), "{err}");

        let bad = HEAT.replace("multiplier galilean affine", "multiplier galilean missing");
        let err = parse_problem(&bad).unwrap_err();
        assert!(err.message.contains("missing"), "{err}");
    }

    #[test]
    fn kdv_third_order_leading() {
        let text = "independent t x\ndependent u\nadjoint v\n\
                    equation kdv : D(u,t) - u*D(u,x) - D(u,x,x,x) = 0 leading D(u,x,x,x)\n";
        let prob = parse_problem(text).unwrap();
        assert_eq!(prob.system.equations()[0].leading.order(), 3);
    }

    #[test]
    fn leading_must_be_linear() {
        let text = "independent t x\ndependent u\nadjoint v\n\
                    equation bad : D(u,t)^2 - D(u,x,x) = 0 leading D(u,t)\n";
        let err = parse_problem(text).unwrap_err();
        assert!(err.message.contains("linear"), "{err}");
    }

    #[test]
    fn expressions() {
        let ctx = Context::new(&["t", "x"], &["u"], &["v"]).unwrap();
        let e = parse_expression("1/2*x*u - (x + 1)^2 / 3 + exp(-t)*sin(x)", &ctx).unwrap();
        assert_eq!(e.len(), 5);
        assert!(parse_expression("x / u", &ctx).is_err());
        assert!(parse_expression("x / 0", &ctx).is_err());
        let err = parse_expression("x +", &ctx).unwrap_err();
        assert_eq!((err.line, err.col), (1, 4));
        assert!(!err.expected.is_empty());
    }
}
