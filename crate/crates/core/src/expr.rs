//! A small expression language for perturbation functions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' ['-'] integer)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := exp | sin | cos | sqrt
//! ```
//!
//! Identifiers are `x1..x4` (ambient coordinates on S³), `y1..y3` (coordinates
//! on ℝ³) and `pi`. An expression may use one family of variables, not both.
//!
//! Sums and products are n-ary nodes, so `2*y1/(1+y1^2+y2^2+y3^2)` has eleven
//! nodes. Expressions compile to a postfix tape evaluated over any
//! [`Scalar`], which gives exact gradients and Hessians through [`Jet2`].

use std::fmt;

use thiserror::Error;

use crate::jet::{Jet2, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at position {position}: expected {expected}")]
    Parse { position: usize, expected: String },
    #[error("domain error at position {position}: {message}")]
    Domain { position: usize, message: String },
    #[error("variable at position {position} mixes sphere (x) and flat (y) coordinates")]
    MixedVariables { position: usize },
    #[error("expression takes {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// 1-based character position in the source text. Positions never take part
/// in structural comparison.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos(pub usize);

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `y1, y2, y3`
    Flat,
    /// `x1, x2, x3, x4`
    Sphere,
}

impl Domain {
    pub fn dimension(self) -> usize {
        match self {
            Domain::Flat => 3,
            Domain::Sphere => 4,
        }
    }

    fn prefix(self) -> char {
        match self {
            Domain::Flat => 'y',
            Domain::Sphere => 'x',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulOp {
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Pi,
    /// Zero-based coordinate index within its domain.
    Var(Domain, usize),
    Neg(Box<Ast>),
    Sum(Box<Ast>, Vec<(AddOp, Ast)>),
    Product(Box<Ast>, Vec<(MulOp, Ast, Pos)>),
    Pow(Box<Ast>, i32, Pos),
    Call(Func, Box<Ast>, Pos),
}

impl Ast {
    pub fn node_count(&self) -> usize {
        1 + match self {
            Ast::Num(_) | Ast::Pi | Ast::Var(..) => 0,
            Ast::Neg(a) | Ast::Pow(a, ..) | Ast::Call(_, a, _) => a.node_count(),
            Ast::Sum(first, rest) => {
                first.node_count() + rest.iter().map(|(_, t)| t.node_count()).sum::<usize>()
            }
            Ast::Product(first, rest) => {
                first.node_count() + rest.iter().map(|(_, t, _)| t.node_count()).sum::<usize>()
            }
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self, Ast::Num(_) | Ast::Pi | Ast::Var(..) | Ast::Call(..))
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Num(v) => write!(f, "{v:?}"),
            Ast::Pi => write!(f, "pi"),
            Ast::Var(d, i) => write!(f, "{}{}", d.prefix(), i + 1),
            Ast::Neg(a) => {
                if matches!(**a, Ast::Sum(..) | Ast::Product(..)) {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            Ast::Sum(first, rest) => {
                write_operand(f, first, |a| matches!(a, Ast::Sum(..)))?;
                for (op, t) in rest {
                    f.write_str(if *op == AddOp::Add { " + " } else { " - " })?;
                    write_operand(f, t, |a| matches!(a, Ast::Sum(..)))?;
                }
                Ok(())
            }
            Ast::Product(first, rest) => {
                let nested = |a: &Ast| matches!(a, Ast::Sum(..) | Ast::Product(..));
                write_operand(f, first, nested)?;
                for (op, t, _) in rest {
                    f.write_str(if *op == MulOp::Mul { " * " } else { " / " })?;
                    write_operand(f, t, nested)?;
                }
                Ok(())
            }
            Ast::Pow(base, n, _) => {
                write_operand(f, base, |a| !a.is_atom())?;
                write!(f, "^{n}")
            }
            Ast::Call(func, arg, _) => write!(f, "{}({arg})", func.name()),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, a: &Ast, paren: impl Fn(&Ast) -> bool) -> fmt::Result {
    if paren(a) {
        write!(f, "({a})")
    } else {
        write!(f, "{a}")
    }
}

struct Parser {
    chars: Vec<char>,
    at: usize,
}

const OPERAND: &str = "number, variable, function or '('";

impl Parser {
    fn skip_ws(&mut self) {
        while self.chars.get(self.at).is_some_and(|c| c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.at).copied()
    }

    fn pos(&self) -> Pos {
        Pos(self.at + 1)
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ExprError> {
        Err(ExprError::Parse {
            position: self.at + 1,
            expected: expected.to_string(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.at += 1;
            Ok(())
        } else {
            self.fail(&format!("'{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let first = self.term()?;
        let mut rest = Vec::new();
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.at += 1;
            let op = if c == '+' { AddOp::Add } else { AddOp::Sub };
            rest.push((op, self.term()?));
        }
        Ok(if rest.is_empty() {
            first
        } else {
            Ast::Sum(Box::new(first), rest)
        })
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let first = self.factor()?;
        let mut rest = Vec::new();
        while let Some(c @ ('*' | '/')) = self.peek() {
            let pos = self.pos();
            self.at += 1;
            let op = if c == '*' { MulOp::Mul } else { MulOp::Div };
            rest.push((op, self.factor()?, pos));
        }
        Ok(if rest.is_empty() {
            first
        } else {
            Ast::Product(Box::new(first), rest)
        })
    }

    fn factor(&mut self) -> Result<Ast, ExprError> {
        if self.peek() == Some('-') {
            self.at += 1;
            return Ok(Ast::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek() != Some('^') {
            return Ok(base);
        }
        let pos = self.pos();
        self.at += 1;
        let negative = if self.peek() == Some('-') {
            self.at += 1;
            true
        } else {
            false
        };
        self.skip_ws();
        let start = self.at;
        while self.chars.get(self.at).is_some_and(|c| c.is_ascii_digit()) {
            self.at += 1;
        }
        if start == self.at {
            return self.fail("integer exponent");
        }
        let digits: String = self.chars[start..self.at].iter().collect();
        let Ok(mut n) = digits.parse::<i32>() else {
            self.at = start;
            return self.fail("integer exponent within 32-bit range");
        };
        if negative {
            n = -n;
        }
        Ok(Ast::Pow(Box::new(base), n, pos))
    }

    fn base(&mut self) -> Result<Ast, ExprError> {
        match self.peek() {
            Some('(') => {
                self.at += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => self.fail(OPERAND),
        }
    }

    fn number(&mut self) -> Result<Ast, ExprError> {
        let start = self.at;
        let digits = |p: &mut Parser| {
            let s = p.at;
            while p.chars.get(p.at).is_some_and(|c| c.is_ascii_digit()) {
                p.at += 1;
            }
            p.at > s
        };
        let mut any = digits(self);
        if self.chars.get(self.at) == Some(&'.') {
            self.at += 1;
            any |= digits(self);
        }
        if !any {
            self.at = start;
            return self.fail("number");
        }
        if matches!(self.chars.get(self.at), Some('e' | 'E')) {
            let mark = self.at;
            self.at += 1;
            if matches!(self.chars.get(self.at), Some('+' | '-')) {
                self.at += 1;
            }
            if !digits(self) {
                self.at = mark + 1;
                return self.fail("exponent digits");
            }
        }
        let text: String = self.chars[start..self.at].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Ast::Num(v)),
            _ => {
                self.at = start;
                self.fail("finite number")
            }
        }
    }

    fn ident(&mut self) -> Result<Ast, ExprError> {
        let start = self.at;
        while self.chars.get(self.at).is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.at += 1;
        }
        let name: String = self.chars[start..self.at].iter().collect();
        let func = match name.as_str() {
            "pi" => return Ok(Ast::Pi),
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        };
        if let Some(func) = func {
            let pos = Pos(start + 1);
            self.expect('(')?;
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Ast::Call(func, Box::new(arg), pos));
        }
        let var = match name.as_str() {
            "x1" => Ast::Var(Domain::Sphere, 0),
            "x2" => Ast::Var(Domain::Sphere, 1),
            "x3" => Ast::Var(Domain::Sphere, 2),
            "x4" => Ast::Var(Domain::Sphere, 3),
            "y1" => Ast::Var(Domain::Flat, 0),
            "y2" => Ast::Var(Domain::Flat, 1),
            "y3" => Ast::Var(Domain::Flat, 2),
            _ => {
                self.at = start;
                return self.fail("variable x1..x4 or y1..y3, pi, or one of exp, sin, cos, sqrt");
            }
        };
        Ok(var)
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Ast, ExprError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        at: 0,
    };
    let ast = p.expr()?;
    if p.peek().is_some() {
        return p.fail("operator or end of input");
    }
    Ok(ast)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Add,
    Sub,
    Mul,
    Div(usize),
    Neg,
    Powi(i32, usize),
    Exp,
    Sin,
    Cos,
    Sqrt(usize),
}

/// A parsed, domain-checked expression compiled for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Ast,
    domain: Option<Domain>,
    tape: Vec<Op>,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let ast = parse(text)?;
        let mut domain = None;
        let mut tape = Vec::new();
        compile(&ast, &mut tape, &mut domain, text)?;
        Ok(Self { ast, domain, tape })
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    /// The variable family used, or `None` for a constant expression.
    pub fn domain(&self) -> Option<Domain> {
        self.domain
    }

    /// Evaluates at `point`, whose length must match the domain (any length
    /// is accepted by constant expressions).
    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<T, ExprError> {
        if let Some(d) = self.domain {
            if point.len() != d.dimension() {
                return Err(ExprError::Dimension {
                    expected: d.dimension(),
                    got: point.len(),
                });
            }
        }
        let mut stack: Vec<T> = Vec::with_capacity(self.tape.len());
        for op in &self.tape {
            let v = match *op {
                Op::Const(c) => T::constant(c),
                Op::Var(i) => point[i],
                Op::Neg => -pop(&mut stack),
                Op::Exp => pop(&mut stack).exp(),
                Op::Sin => pop(&mut stack).sin(),
                Op::Cos => pop(&mut stack).cos(),
                Op::Sqrt(pos) => {
                    let a = pop(&mut stack);
                    if a.value() < 0.0 || (a.value() == 0.0 && !a.is_constant()) {
                        return Err(domain_error(pos, "square root of a non-positive value"));
                    }
                    a.sqrt()
                }
                Op::Powi(n, pos) => {
                    let a = pop(&mut stack);
                    if n < 0 && a.value() == 0.0 {
                        return Err(domain_error(pos, "negative power of zero"));
                    }
                    a.powi(n)
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div(_) => {
                    let b = pop(&mut stack);
                    let a = pop(&mut stack);
                    match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div(pos) => {
                            if b.value() == 0.0 {
                                return Err(domain_error(pos, "division by zero"));
                            }
                            a / b
                        }
                        _ => unreachable!(),
                    }
                }
            };
            stack.push(v);
        }
        Ok(pop(&mut stack))
    }

    /// Value, gradient and Hessian at `point`.
    pub fn eval_jet2<const N: usize>(&self, point: [f64; N]) -> Result<Jet2<N>, ExprError> {
        self.eval(&Jet2::seed(point))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

fn pop<T>(stack: &mut Vec<T>) -> T {
    stack.pop().expect("tape is well formed")
}

fn domain_error(position: usize, message: &str) -> ExprError {
    ExprError::Domain {
        position,
        message: message.to_string(),
    }
}

fn compile(ast: &Ast, tape: &mut Vec<Op>, domain: &mut Option<Domain>, text: &str) -> Result<(), ExprError> {
    match ast {
        Ast::Num(v) => tape.push(Op::Const(*v)),
        Ast::Pi => tape.push(Op::Const(std::f64::consts::PI)),
        Ast::Var(d, i) => {
            match domain {
                Some(existing) if existing != d => {
                    return Err(ExprError::MixedVariables {
                        position: find_var(text, *d, *i),
                    })
                }
                _ => *domain = Some(*d),
            }
            tape.push(Op::Var(*i));
        }
        Ast::Neg(a) => {
            compile(a, tape, domain, text)?;
            tape.push(Op::Neg);
        }
        Ast::Sum(first, rest) => {
            compile(first, tape, domain, text)?;
            for (op, t) in rest {
                compile(t, tape, domain, text)?;
                tape.push(if *op == AddOp::Add { Op::Add } else { Op::Sub });
            }
        }
        Ast::Product(first, rest) => {
            compile(first, tape, domain, text)?;
            for (op, t, pos) in rest {
                compile(t, tape, domain, text)?;
                tape.push(if *op == MulOp::Mul { Op::Mul } else { Op::Div(pos.0) });
            }
        }
        Ast::Pow(base, n, pos) => {
            compile(base, tape, domain, text)?;
            tape.push(Op::Powi(*n, pos.0));
        }
        Ast::Call(func, arg, pos) => {
            compile(arg, tape, domain, text)?;
            tape.push(match func {
                Func::Exp => Op::Exp,
                Func::Sin => Op::Sin,
                Func::Cos => Op::Cos,
                Func::Sqrt => Op::Sqrt(pos.0),
            });
        }
    }
    Ok(())
}

/// Position of the first occurrence of a variable name in `text`.
fn find_var(text: &str, d: Domain, i: usize) -> usize {
    let name = format!("{}{}", d.prefix(), i + 1);
    text.find(&name).map_or(0, |b| text[..b].chars().count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn parses_variables_and_counts_nodes() {
        assert_eq!(parse("x1").unwrap(), Ast::Var(Domain::Sphere, 0));
        let ast = parse("2*y1/(1+y1^2+y2^2+y3^2)").unwrap();
        assert_eq!(ast.node_count(), 11);
    }

    #[test]
    fn reports_parse_position() {
        match parse("x1 + * x2") {
            Err(ExprError::Parse { position, expected }) => {
                assert_eq!(position, 6);
                assert!(expected.contains("variable"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(y1"), Err(ExprError::Parse { position: 4, .. })));
        assert!(matches!(parse("y1 y2"), Err(ExprError::Parse { position: 4, .. })));
        assert!(matches!(parse("z1"), Err(ExprError::Parse { position: 1, .. })));
        assert!(matches!(parse("y1^1.5"), Err(ExprError::Parse { .. })));
        assert!(matches!(parse(""), Err(ExprError::Parse { position: 1, .. })));
    }

    #[test]
    fn rejects_mixed_domains() {
        assert!(matches!(
            Expression::parse("x1 + y2"),
            Err(ExprError::MixedVariables { position: 6 })
        ));
        assert_eq!(Expression::parse("x4").unwrap().domain(), Some(Domain::Sphere));
        assert_eq!(Expression::parse("2*pi").unwrap().domain(), None);
    }

    #[test]
    fn evaluates_unary_minus_and_signed_powers() {
        let e = Expression::parse("-y1^2 + 2^-1 - -3").unwrap();
        assert_eq!(e.eval(&[2.0, 0.0, 0.0]).unwrap(), -4.0 + 0.5 + 3.0);
    }

    #[test]
    fn laplacian_of_radius_squared() {
        let e = Expression::parse("y1^2+y2^2+y3^2").unwrap();
        for p in [[0.0, 0.0, 0.0], [1.3, -2.0, 0.7]] {
            assert_eq!(e.eval_jet2(p).unwrap().laplacian(), 6.0);
        }
    }

    #[test]
    fn gradient_of_sine_product() {
        let e = Expression::parse("sin(y1)*y2").unwrap();
        assert_eq!(e.eval_jet2([0.0, 2.0, 0.0]).unwrap().grad, [2.0, 0.0, 0.0]);
    }

    #[test]
    fn domain_errors_carry_positions() {
        let e = Expression::parse("1/(y1 - 1)").unwrap();
        assert!(matches!(
            e.eval(&[1.0, 0.0, 0.0]),
            Err(ExprError::Domain { position: 2, .. })
        ));
        let e = Expression::parse("2 + sqrt(y1)").unwrap();
        assert!(matches!(e.eval(&[-1.0, 0.0, 0.0]), Err(ExprError::Domain { position: 5, .. })));
        assert_eq!(e.eval(&[0.0, 0.0, 0.0]).unwrap(), 2.0);
        assert!(e.eval_jet2([0.0, 0.0, 0.0]).is_err());
        let e = Expression::parse("y1^-2").unwrap();
        assert!(matches!(e.eval(&[0.0, 1.0, 0.0]), Err(ExprError::Domain { position: 3, .. })));
        assert!(matches!(
            e.eval(&[0.0, 1.0]),
            Err(ExprError::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn printing_is_canonical() {
        let ast = parse("2*y1/(1+y1^2+y2^2+y3^2)").unwrap();
        assert_eq!(ast.to_string(), "2.0 * y1 / (1.0 + y1^2 + y2^2 + y3^2)");
        let ast = parse("-(x1+x2)^3 - (x3*x4)*2 + (-x1)^2 - exp(-x2)").unwrap();
        assert_eq!(ast.to_string(), "-(x1 + x2)^3 - (x3 * x4) * 2.0 + (-x1)^2 - exp(-x2)");
    }

    /// Random smooth expression over y1..y3, built as text.
    fn random_expr(rng: &mut impl Rng, depth: u32) -> String {
        if depth == 0 || rng.gen_bool(0.25) {
            return match rng.gen_range(0..4) {
                0 => format!("{:.3}", rng.gen_range(0.1..2.0)),
                n => format!("y{n}"),
            };
        }
        let a = random_expr(rng, depth - 1);
        let b = random_expr(rng, depth - 1);
        match rng.gen_range(0..9) {
            0 => format!("({a} + {b})"),
            1 => format!("({a} - {b})"),
            2 | 3 => format!("({a}) * ({b})"),
            4 => format!("({a}) / (2 + sin({b}))"),
            5 => format!("exp(0.3 * sin({a}))"),
            6 => format!("cos({a})"),
            7 => format!("sqrt(1 + ({a})^2)"),
            _ => format!("({a})^{}", rng.gen_range(2..4)),
        }
    }

    fn check_against_differences(e: &Expression, p: [f64; 3]) {
        let f = |q: [f64; 3]| e.eval(&q).unwrap();
        let jet = e.eval_jet2(p).unwrap();
        let h = 1e-4;
        let shifted = |i: usize, d: f64| {
            let mut q = p;
            q[i] += d;
            q
        };
        for i in 0..3 {
            let fd = (f(shifted(i, h)) - f(shifted(i, -h))) / (2.0 * h);
            let scale = jet.grad_norm().max(jet.value.abs()).max(1.0);
            assert!((fd - jet.grad[i]).abs() <= 1e-6 * scale, "{e}: grad {i} {fd} vs {}", jet.grad[i]);
            for j in 0..3 {
                let gi = |q: [f64; 3]| e.eval_jet2(q).unwrap().grad[i];
                let fd2 = (gi(shifted(j, h)) - gi(shifted(j, -h))) / (2.0 * h);
                let hscale = jet.hess.iter().flatten().fold(scale, |m, v| m.max(v.abs()));
                assert!(
                    (fd2 - jet.hess[i][j]).abs() <= 1e-6 * hscale,
                    "{e}: hess {i}{j} {fd2} vs {}",
                    jet.hess[i][j]
                );
                assert_eq!(jet.hess[i][j], jet.hess[j][i]);
            }
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let text = random_expr(&mut rng, 4);
            let e = Expression::parse(&text).unwrap();
            let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            check_against_differences(&e, p);
        }
    }

    fn arb_ast() -> impl Strategy<Value = Ast> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(Ast::Num),
            Just(Ast::Pi),
            (0..3usize).prop_map(|i| Ast::Var(Domain::Flat, i)),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Ast::Neg(Box::new(a))),
                (inner.clone(), prop::collection::vec((any::<bool>(), inner.clone()), 1..3)).prop_map(
                    |(a, rest)| Ast::Sum(
                        Box::new(a),
                        rest.into_iter()
                            .map(|(s, t)| (if s { AddOp::Add } else { AddOp::Sub }, t))
                            .collect()
                    )
                ),
                (inner.clone(), prop::collection::vec((any::<bool>(), inner.clone()), 1..3)).prop_map(
                    |(a, rest)| Ast::Product(
                        Box::new(a),
                        rest.into_iter()
                            .map(|(m, t)| (if m { MulOp::Mul } else { MulOp::Div }, t, Pos(0)))
                            .collect()
                    )
                ),
                (inner.clone(), -3..5i32).prop_map(|(a, n)| Ast::Pow(Box::new(a), n, Pos(0))),
                (inner, 0..4usize).prop_map(|(a, f)| {
                    let func = [Func::Exp, Func::Sin, Func::Cos, Func::Sqrt][f];
                    Ast::Call(func, Box::new(a), Pos(0))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_round_trips(ast in arb_ast()) {
            let text = ast.to_string();
            let reparsed = parse(&text).unwrap();
            prop_assert_eq!(&reparsed, &ast);
            prop_assert_eq!(parse(&reparsed.to_string()).unwrap(), reparsed);
        }
    }
}
