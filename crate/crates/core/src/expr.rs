//! Expression trees for vector-field components.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | const | var | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Constants are `pi` and `e`; functions are `sin cos tan atan exp log sqrt
//! abs tanh bump frac`. Exponentiation is right-associative and binds tighter
//! than unary minus, so `-x^2 = -(x^2)`.

use std::fmt;

use crate::error::{Error, Result, Span};
use crate::jet::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    R,
    Theta,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::R => "r",
            Var::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Bump,
    Frac,
}

impl Func {
    const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Atan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Bump,
        Func::Frac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Bump => "bump",
            Func::Frac => "frac",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// An expression node with the source span it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub span: Span,
}

/// Evaluation environment: values of the variables in scope.
pub trait Env<S> {
    fn get(&self, v: Var) -> S;
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr {
            node: Node::Num(v),
            span: Span::new(0, 0),
        }
    }

    /// True if the tree references no variables.
    pub fn is_constant(&self) -> bool {
        match &self.node {
            Node::Num(_) => true,
            Node::Var(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.is_constant(),
            Node::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn uses_func(&self, f: Func) -> bool {
        match &self.node {
            Node::Num(_) | Node::Var(_) => false,
            Node::Neg(a) => a.uses_func(f),
            Node::Call(g, a) => *g == f || a.uses_func(f),
            Node::Bin(_, a, b) => a.uses_func(f) || b.uses_func(f),
        }
    }

    pub fn vars(&self, out: &mut Vec<Var>) {
        match &self.node {
            Node::Num(_) => {}
            Node::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Node::Neg(a) | Node::Call(_, a) => a.vars(out),
            Node::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Evaluate in any [`Scalar`]; `src` is used for error snippets.
    pub fn eval<S: Scalar>(&self, env: &impl Env<S>, src: &str) -> Result<S> {
        let domain = |msg: &str| Error::Domain {
            msg: msg.to_string(),
            span: self.span,
            snippet: src.get(self.span.start..self.span.end).unwrap_or("").to_string(),
        };
        let out = match &self.node {
            Node::Num(v) => S::constant(*v),
            Node::Var(v) => env.get(*v),
            Node::Neg(a) => -a.eval(env, src)?,
            Node::Bin(op, a, b) => {
                if *op == BinOp::Pow && b.is_constant() {
                    let base = a.eval(env, src)?;
                    let n = b.eval::<f64>(&NoVars, src)?;
                    return powi_like(base, n).ok_or_else(|| domain("power undefined for this base"));
                }
                let a = a.eval(env, src)?;
                let b = b.eval(env, src)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        let v = b.value();
                        if v == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        a * b.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
                    }
                    BinOp::Pow => {
                        let v = a.value();
                        if v <= 0.0 {
                            return Err(domain("non-constant exponent needs a positive base"));
                        }
                        let ln = a.compose(v.ln(), 1.0 / v, -1.0 / (v * v));
                        let e = (b * ln).value().exp();
                        (b * ln).compose(e, e, e)
                    }
                }
            }
            Node::Call(f, a) => {
                let a = a.eval(env, src)?;
                apply(*f, a).map_err(&domain)?
            }
        };
        if !out.value().is_finite() {
            return Err(domain("non-finite value"));
        }
        Ok(out)
    }
}

struct NoVars;

impl Env<f64> for NoVars {
    fn get(&self, _v: Var) -> f64 {
        f64::NAN
    }
}

fn powi_like<S: Scalar>(base: S, n: f64) -> Option<S> {
    let v = base.value();
    let integral = n.fract() == 0.0;
    if v < 0.0 && !integral {
        return None;
    }
    if v == 0.0 && n < 0.0 {
        return None;
    }
    if S::TRACKS_DERIVATIVES && v == 0.0 && !integral && n < 2.0 {
        // first or second derivative blows up
        return None;
    }
    let f0 = v.powf(n);
    let f1 = if n == 0.0 { 0.0 } else { n * v.powf(n - 1.0) };
    let f2 = if n == 0.0 || n == 1.0 {
        0.0
    } else {
        n * (n - 1.0) * v.powf(n - 2.0)
    };
    Some(base.compose(f0, f1, f2))
}

fn bump_derivs(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 || t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = t * (1.0 - t);
    let s1 = 1.0 - 2.0 * t;
    let b = (-1.0 / s).exp();
    // g = -1/s, g' = s'/s^2, g'' = (s'' s - 2 s'^2) / s^3 with s'' = -2
    let g1 = s1 / (s * s);
    let g2 = (-2.0 * s - 2.0 * s1 * s1) / (s * s * s);
    (b, b * g1, b * (g1 * g1 + g2))
}

fn apply<S: Scalar>(f: Func, a: S) -> std::result::Result<S, &'static str> {
    let v = a.value();
    Ok(match f {
        Func::Sin => a.compose(v.sin(), v.cos(), -v.sin()),
        Func::Cos => a.compose(v.cos(), -v.sin(), -v.cos()),
        Func::Tan => {
            if v.cos().abs() < 1e-300 {
                return Err("tan at a pole");
            }
            let t = v.tan();
            a.compose(t, 1.0 + t * t, 2.0 * t * (1.0 + t * t))
        }
        Func::Atan => {
            let d = 1.0 + v * v;
            a.compose(v.atan(), 1.0 / d, -2.0 * v / (d * d))
        }
        Func::Exp => {
            let e = v.exp();
            a.compose(e, e, e)
        }
        Func::Log => {
            if v <= 0.0 {
                return Err("log of nonpositive value");
            }
            a.compose(v.ln(), 1.0 / v, -1.0 / (v * v))
        }
        Func::Sqrt => {
            if v < 0.0 {
                return Err("sqrt of negative value");
            }
            if v == 0.0 && S::TRACKS_DERIVATIVES {
                return Err("sqrt not differentiable at 0");
            }
            let s = v.sqrt();
            a.compose(s, 0.5 / s, -0.25 / (s * v))
        }
        Func::Abs => a.compose(v.abs(), v.signum() * (v != 0.0) as i32 as f64, 0.0),
        Func::Tanh => {
            let t = v.tanh();
            a.compose(t, 1.0 - t * t, -2.0 * t * (1.0 - t * t))
        }
        Func::Bump => {
            let (b0, b1, b2) = bump_derivs(v);
            a.compose(b0, b1, b2)
        }
        Func::Frac => a.compose(v - v.floor(), 1.0, 0.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, Span)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let t = lx.next()?;
            let end = matches!(t.0, Tok::End);
            out.push(t);
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, Span)> {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, Span::new(start, start)));
        };
        let tok = if c.is_ascii_digit() || c == '.' {
            self.number()?
        } else if c.is_ascii_alphabetic() || c == '_' {
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            Tok::Ident(self.src[start..self.pos].to_string())
        } else {
            self.pos += c.len_utf8();
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        Ok((tok, Span::new(start, self.pos)))
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        // exponent only when followed by digits, so that `2e` is not swallowed
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if q < bytes.len() && bytes[q].is_ascii_digit() {
                digits(&mut q);
                p = q;
            }
        }
        self.pos = p;
        let text = &self.src[start..p];
        text.parse::<f64>().map(Tok::Num).map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("malformed number `{text}`"),
        })
    }
}

/// Recursive-descent parser over a token list.
pub struct Parser<'a> {
    toks: Vec<(Tok, Span)>,
    i: usize,
    allowed: &'a [Var],
}

impl<'a> Parser<'a> {
    pub fn new(src: &str, allowed: &'a [Var]) -> Result<Self> {
        Ok(Parser {
            toks: Lexer::tokens(src)?,
            i: 0,
            allowed,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn span(&self) -> Span {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        };
        Error::Syntax {
            pos: self.span().start,
            msg: format!("expected {what}, found {found}"),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Span> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(self.expected(what))
        }
    }

    pub fn expect_end(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.expected("end of input"))
        }
    }

    pub fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match *self.peek() {
            Tok::Op('-') => {
                let s = self.bump().1;
                let inner = self.unary()?;
                let span = s.join(inner.span);
                Ok(Expr {
                    node: Node::Neg(Box::new(inner)),
                    span,
                })
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, span) = self.toks[self.i].clone();
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr {
                    node: Node::Num(v),
                    span,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Expr {
                    node: inner.node,
                    span: span.join(close),
                })
            }
            Tok::Ident(name) => {
                self.bump();
                self.ident(name, span)
            }
            _ => Err(self.expected("a number, variable, function or `(`")),
        }
    }

    fn ident(&mut self, name: String, span: Span) -> Result<Expr> {
        let node = match name.as_str() {
            "pi" => Node::Num(std::f64::consts::PI),
            "e" => Node::Num(std::f64::consts::E),
            "x" | "y" | "r" | "theta" => {
                let v = match name.as_str() {
                    "x" => Var::X,
                    "y" => Var::Y,
                    "r" => Var::R,
                    _ => Var::Theta,
                };
                if !self.allowed.contains(&v) {
                    return Err(Error::UnknownIdentifier {
                        name,
                        pos: span.start,
                    });
                }
                Node::Var(v)
            }
            _ => {
                let Some(f) = Func::lookup(&name) else {
                    return Err(Error::UnknownIdentifier {
                        name,
                        pos: span.start,
                    });
                };
                if *self.peek() != Tok::LParen {
                    return Err(self.expected(&format!("`(` after `{name}`")));
                }
                self.bump();
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                let close = self.expect(Tok::RParen, "`)`")?;
                if args.len() != 1 {
                    return Err(Error::Arity {
                        name,
                        expected: 1,
                        found: args.len(),
                        pos: span.start,
                    });
                }
                return Ok(Expr {
                    node: Node::Call(f, Box::new(args.pop().unwrap())),
                    span: span.join(close),
                });
            }
        };
        Ok(Expr { node, span })
    }

}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    let span = a.span.join(b.span);
    Expr {
        node: Node::Bin(op, Box::new(a), Box::new(b)),
        span,
    }
}

/// Parse `(expr, expr)`; trailing input is an error.
pub fn parse_pair(src: &str, allowed: &[Var]) -> Result<[Expr; 2]> {
    let mut p = Parser::new(src, allowed)?;
    p.expect(Tok::LParen, "`(` opening the component pair")?;
    let a = p.expr()?;
    p.expect(Tok::Comma, "`,` between components")?;
    let b = p.expr()?;
    p.expect(Tok::RParen, "`)` closing the component pair")?;
    p.expect_end()?;
    Ok([a, b])
}

/// Parse a single scalar expression over the given variables.
pub fn parse_expr(src: &str, allowed: &[Var]) -> Result<Expr> {
    let mut p = Parser::new(src, allowed)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => {
                let o = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "({a} {o} {b})")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;

    struct Xy(f64, f64);
    impl Env<f64> for Xy {
        fn get(&self, v: Var) -> f64 {
            match v {
                Var::X => self.0,
                _ => self.1,
            }
        }
    }

    const XY: &[Var] = &[Var::X, Var::Y];

    fn ev(src: &str, x: f64, y: f64) -> Result<f64> {
        parse_expr(src, XY)?.eval(&Xy(x, y), src)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0).unwrap(), 7.0);
        assert_eq!(ev("-x^2", 3.0, 0.0).unwrap(), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0).unwrap(), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0).unwrap(), 0.5);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(ev("x - y - 1", 5.0, 1.0).unwrap(), 3.0);
        assert_eq!(ev("2e3 + 1.5E-1", 0.0, 0.0).unwrap(), 2000.15);
        assert!((ev("2*e", 0.0, 0.0).unwrap() - 2.0 * std::f64::consts::E).abs() < 1e-15);
        assert_eq!(ev("(-2)^3", 0.0, 0.0).unwrap(), -8.0);
    }

    #[test]
    fn errors_are_located() {
        assert!(matches!(ev("x +", 0.0, 0.0), Err(Error::Syntax { pos: 3, .. })));
        assert!(matches!(
            ev("foo(x)", 0.0, 0.0),
            Err(Error::UnknownIdentifier { pos: 0, .. })
        ));
        assert!(matches!(ev("sin(x, y)", 0.0, 0.0), Err(Error::Arity { found: 2, .. })));
        assert!(matches!(ev("r", 0.0, 0.0), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(ev("x y", 0.0, 0.0), Err(Error::Syntax { pos: 2, .. })));
        match ev("1 + 1/x", 0.0, 0.0) {
            Err(Error::Domain { snippet, span, .. }) => {
                assert_eq!(snippet, "1/x");
                assert_eq!(span, Span::new(4, 7));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(ev("log(x - 1)", 0.5, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(ev("(-2)^0.5", 0.0, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn bump_is_flat_outside_unit_interval() {
        assert_eq!(ev("bump(x)", -0.3, 0.0).unwrap(), 0.0);
        assert_eq!(ev("bump(x)", 1.0, 0.0).unwrap(), 0.0);
        assert!((ev("bump(x)", 0.5, 0.0).unwrap() - (-4.0f64).exp()).abs() < 1e-16);
        assert_eq!(ev("frac(x)", 2.25, 0.0).unwrap(), 0.25);
        assert_eq!(ev("frac(x)", -0.25, 0.0).unwrap(), 0.75);
    }

    struct JetEnv(f64, f64);
    impl Env<Jet2> for JetEnv {
        fn get(&self, v: Var) -> Jet2 {
            match v {
                Var::X => Jet2::var_x(self.0),
                _ => Jet2::var_y(self.1),
            }
        }
    }

    fn central(src: &str, x: f64, y: f64) -> ([f64; 2], [f64; 3]) {
        let h = 1e-4;
        let f = |a: f64, b: f64| ev(src, a, b).unwrap();
        let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        let hxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let hyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let hxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        ([gx, gy], [hxx, hxy, hyy])
    }

    #[test]
    fn every_function_jet_matches_finite_differences() {
        let cases = [
            "sin(x*y) + cos(x - y)",
            "tan(0.3*x) * atan(y)",
            "exp(x/2) * log(2 + y^2)",
            "sqrt(1 + x^2 + y^4)",
            "abs(x - 3) * tanh(y)",
            "bump(0.4 + 0.1*x*y)",
            "x^y",
            "frac(2 + 0.1*x) * y",
            "1 / (1 + x^2 + y^2)",
        ];
        for src in cases {
            let (x, y) = (0.7, 1.3);
            let e = parse_expr(src, XY).unwrap();
            let j = e.eval(&JetEnv(x, y), src).unwrap();
            let (g, h) = central(src, x, y);
            for (k, (a, b)) in j.gradient.iter().zip(g).enumerate() {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{src} grad {k}");
            }
            for (k, (a, b)) in j.hessian.iter().zip(h).enumerate() {
                assert!((a - b).abs() < 1e-4 * (1.0 + b.abs()), "{src} hess {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sqrt_at_zero_refuses_jets_only() {
        let e = parse_expr("sqrt(x^2)", XY).unwrap();
        assert_eq!(e.eval(&Xy(0.0, 0.0), "").unwrap(), 0.0);
        assert!(e.eval(&JetEnv(0.0, 0.0), "").is_err());
    }
}
