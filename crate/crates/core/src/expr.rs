//! Small arithmetic expressions in the coordinates `u1..un`.
//!
//! Grammar (usual precedence, `^` binds tighter than unary minus and is
//! right-associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'u' index | ('sqrt' | 'abs') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Expressions can be differentiated symbolically, which gives the exact
//! derivative path for closed-form spray fields.

use std::fmt;

use crate::error::{Error, Result};

/// Deepest tree accepted.
const MAX_DEPTH: usize = 200;
/// Parser recursion bound. A printed tree spends up to three levels per
/// node (parentheses, then a unary minus), so this stays above that.
const MAX_NESTING: usize = 3 * MAX_DEPTH + 8;
const MAX_LEN: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    /// Only produced by differentiating `abs`.
    Sign(Box<Expr>),
    /// Only produced by differentiating a power with a non-constant exponent.
    Ln(Box<Expr>),
}

impl Expr {
    /// Parses `text`; variables must lie in `u1..=u{nvars}`.
    pub fn parse(text: &str, nvars: usize) -> Result<Expr> {
        if text.len() > MAX_LEN {
            return Err(Error::Expression { column: 1, message: "expression too long".into() });
        }
        let tokens = tokenize(text, nvars)?;
        let mut p = Parser { tokens: &tokens, pos: 0, depth: 0, text_len: text.chars().count() };
        let (e, _) = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(Error::Expression { column: t.column, message: format!("unexpected {}", t.kind) });
        }
        Ok(e)
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => u[*i],
            Expr::Neg(a) => -a.eval(u),
            Expr::Add(a, b) => a.eval(u) + b.eval(u),
            Expr::Sub(a, b) => a.eval(u) - b.eval(u),
            Expr::Mul(a, b) => a.eval(u) * b.eval(u),
            Expr::Div(a, b) => a.eval(u) / b.eval(u),
            Expr::Pow(a, b) => match **b {
                Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 1024.0 => a.eval(u).powi(c as i32),
                _ => a.eval(u).powf(b.eval(u)),
            },
            Expr::Ln(a) => a.eval(u).ln(),
            Expr::Sqrt(a) => a.eval(u).sqrt(),
            Expr::Abs(a) => a.eval(u).abs(),
            Expr::Sign(a) => {
                let x = a.eval(u);
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Evaluates and rejects non-finite results.
    pub fn eval_checked(&self, u: &[f64]) -> Result<f64> {
        let v = self.eval(u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteExpression { value: v, at: u.to_vec() })
        }
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Abs(a) | Expr::Sign(a) | Expr::Ln(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().map_or(0, |(a, b)| a.size() + b.map_or(0, Expr::size))
    }

    pub fn depth(&self) -> usize {
        1 + self.children().map_or(0, |(a, b)| a.depth().max(b.map_or(0, Expr::depth)))
    }

    fn children(&self) -> Option<(&Expr, Option<&Expr>)> {
        match self {
            Expr::Const(_) | Expr::Var(_) => None,
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Abs(a) | Expr::Sign(a) | Expr::Ln(a) => Some((a, None)),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                Some((a, Some(b)))
            }
        }
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        let d = |e: &Expr| e.derivative(var);
        match self {
            Const(_) | Sign(_) => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(d(a)),
            Add(a, b) => add(d(a), d(b)),
            Sub(a, b) => sub(d(a), d(b)),
            Mul(a, b) => add(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
            Div(a, b) => {
                div(sub(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))), mul((**b).clone(), (**b).clone()))
            }
            Pow(a, b) => match **b {
                Const(c) => mul(mul(Const(c), pow_expr((**a).clone(), Const(c - 1.0))), d(a)),
                _ => mul(self.clone(), add(mul(d(b), Ln(a.clone())), div(mul((**b).clone(), d(a)), (**a).clone()))),
            },
            Ln(a) => div(d(a), (**a).clone()),
            Sqrt(a) => div(d(a), mul(Const(2.0), Sqrt(a.clone()))),
            Abs(a) => mul(Sign(a.clone()), d(a)),
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(0.0), e) | (e, Expr::Const(0.0)) => e,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (e, Expr::Const(0.0)) => e,
        (Expr::Const(0.0), e) => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(0.0), _) | (_, Expr::Const(0.0)) => Expr::Const(0.0),
        (Expr::Const(1.0), e) | (e, Expr::Const(1.0)) => e,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(0.0), _) => Expr::Const(0.0),
        (e, Expr::Const(1.0)) => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow_expr(a: Expr, b: Expr) -> Expr {
    match b {
        Expr::Const(0.0) => Expr::Const(1.0),
        Expr::Const(1.0) => a,
        b => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "u{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Sign(a) => write!(f, "sign({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sqrt,
    Abs,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(x) => write!(f, "number {x}"),
            TokenKind::Var(i) => write!(f, "variable u{}", i + 1),
            TokenKind::Func(Func::Sqrt) => f.write_str("`sqrt`"),
            TokenKind::Func(Func::Abs) => f.write_str("`abs`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::Caret => f.write_str("`^`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(text: &str, nvars: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let err = |message: String| Error::Expression { column, message };
        let simple = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => Some(TokenKind::Plus),
            '-' | '\u{2212}' => Some(TokenKind::Minus),
            '*' => Some(TokenKind::Star),
            '/' => Some(TokenKind::Slash),
            '^' => Some(TokenKind::Caret),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, column });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let value: f64 = lit
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("invalid number `{lit}`")))?;
            out.push(Token { kind: TokenKind::Num(value), column });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let kind = match word.as_str() {
                "sqrt" => TokenKind::Func(Func::Sqrt),
                "abs" => TokenKind::Func(Func::Abs),
                w => {
                    let idx = w
                        .strip_prefix('u')
                        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                        .and_then(|d| d.parse::<usize>().ok())
                        .ok_or_else(|| err(format!("unknown identifier `{w}`")))?;
                    if idx == 0 || idx > nvars {
                        return Err(err(format!("variable `{w}` outside u1..u{nvars}")));
                    }
                    TokenKind::Var(idx - 1)
                }
            };
            out.push(Token { kind, column });
            continue;
        }
        return Err(err(format!("unexpected character `{c}`")));
    }
    Ok(out)
}

/// An expression with its tree depth.
type Node = (Expr, usize);

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    depth: usize,
    text_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eof_column(&self) -> usize {
        self.text_len + 1
    }

    fn next_if(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            let column = self.peek().map_or(self.eof_column(), |t| t.column);
            return Err(Error::Expression { column, message: "expression nested too deeply".into() });
        }
        Ok(())
    }

    /// Wraps a freshly built node, enforcing the tree depth limit. Left
    /// associative chains grow the tree without recursing, so the recursion
    /// guard alone does not bound it.
    fn node(&self, e: Expr, depth: usize) -> Result<Node> {
        if depth > MAX_DEPTH {
            let column = self.peek().map_or(self.eof_column(), |t| t.column);
            return Err(Error::Expression { column, message: "expression nested too deeply".into() });
        }
        Ok((e, depth))
    }

    fn binary(&self, f: fn(Box<Expr>, Box<Expr>) -> Expr, (a, da): Node, (b, db): Node) -> Result<Node> {
        self.node(f(Box::new(a), Box::new(b)), 1 + da.max(db))
    }

    fn unary_node(&self, f: fn(Box<Expr>) -> Expr, (a, da): Node) -> Result<Node> {
        self.node(f(Box::new(a)), 1 + da)
    }

    fn expr(&mut self) -> Result<Node> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.next_if(&TokenKind::Plus) {
                let rhs = self.term()?;
                lhs = self.binary(Expr::Add, lhs, rhs)?;
            } else if self.next_if(&TokenKind::Minus) {
                let rhs = self.term()?;
                lhs = self.binary(Expr::Sub, lhs, rhs)?;
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.next_if(&TokenKind::Star) {
                let rhs = self.unary()?;
                lhs = self.binary(Expr::Mul, lhs, rhs)?;
            } else if self.next_if(&TokenKind::Slash) {
                let rhs = self.unary()?;
                lhs = self.binary(Expr::Div, lhs, rhs)?;
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        self.enter()?;
        let e = if self.next_if(&TokenKind::Minus) {
            let inner = self.unary()?;
            self.unary_node(Expr::Neg, inner)?
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.next_if(&TokenKind::Caret) {
            let exponent = self.unary()?;
            return self.binary(Expr::Pow, base, exponent);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Expression {
                column: self.eof_column(),
                message: "unexpected end of expression".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(x) => Ok((Expr::Const(x), 1)),
            TokenKind::Var(i) => Ok((Expr::Var(i), 1)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect_rparen(tok.column)?;
                Ok(e)
            }
            TokenKind::Func(func) => {
                if !self.next_if(&TokenKind::LParen) {
                    let column = self.peek().map_or(self.eof_column(), |t| t.column);
                    return Err(Error::Expression { column, message: "expected `(` after function".into() });
                }
                let arg = self.expr()?;
                self.expect_rparen(tok.column)?;
                match func {
                    Func::Sqrt => self.unary_node(Expr::Sqrt, arg),
                    Func::Abs => self.unary_node(Expr::Abs, arg),
                }
            }
            kind => Err(Error::Expression { column: tok.column, message: format!("unexpected {kind}") }),
        }
    }

    fn expect_rparen(&mut self, open_column: usize) -> Result<()> {
        if self.next_if(&TokenKind::RParen) {
            Ok(())
        } else {
            let column = self.peek().map_or(self.eof_column(), |t| t.column);
            Err(Error::Expression { column, message: format!("unclosed `(` opened at column {open_column}") })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(text: &str, u: &[f64]) -> f64 {
        Expr::parse(text, u.len()).unwrap().eval(u)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", &[]), 7.0);
        assert_eq!(eval("-u1^2", &[3.0]), -9.0);
        assert_eq!(eval("2^3^2", &[]), 512.0);
        assert_eq!(eval("8 / 4 / 2", &[]), 1.0);
        assert_eq!(eval("(1 - 2) - 3", &[]), -4.0);
        assert_eq!(eval("2^-1", &[]), 0.5);
        assert_eq!(eval("sqrt(u1^2 + u2^2)", &[3.0, 4.0]), 5.0);
        assert_eq!(eval("abs(-u2) * 1.5e1", &[0.0, 2.0]), 30.0);
        assert_eq!(eval("(-2)^3", &[]), -8.0);
        assert_eq!(eval("u1 \u{2212} 1", &[3.0]), 2.0);
    }

    #[test]
    fn errors_carry_columns() {
        let col = |text: &str| match Expr::parse(text, 2) {
            Err(Error::Expression { column, .. }) => column,
            other => panic!("{text}: {other:?}"),
        };
        assert_eq!(col("u1 + u3"), 6);
        assert_eq!(col("u1 + x"), 6);
        assert_eq!(col("(u1 + u2"), 9);
        assert_eq!(col("u1 +"), 5);
        assert_eq!(col("u1 u2"), 4);
        assert_eq!(col("sqrt u1"), 6);
        assert_eq!(col("1 # 2"), 3);
        assert_eq!(col(""), 1);
        assert_eq!(col("u0"), 1);
    }

    #[test]
    fn nesting_is_bounded() {
        let deep = "(".repeat(10_000) + "u1" + &")".repeat(10_000);
        assert!(Expr::parse(&deep, 1).is_err());
        let minus = "-".repeat(10_000) + "1";
        assert!(Expr::parse(&minus, 1).is_err());
        assert!(Expr::parse(&("(".repeat(50) + "u1" + &")".repeat(50)), 1).is_ok());
    }

    #[test]
    fn non_finite_is_reported() {
        let e = Expr::parse("1 / u1", 1).unwrap();
        assert!(matches!(e.eval_checked(&[0.0]), Err(Error::NonFiniteExpression { .. })));
        assert_eq!(e.eval_checked(&[2.0]).unwrap(), 0.5);
    }

    #[test]
    fn derivative_of_polynomial() {
        // d/du2 of u2^2 - u1*u2 is 2 u2 - u1
        let e = Expr::parse("u2^2 - u1*u2", 2).unwrap();
        let d = e.derivative(1);
        assert_eq!(d.eval(&[3.0, 5.0]), 7.0);
        assert_eq!(e.derivative(0).eval(&[3.0, 5.0]), -5.0);
    }

    #[test]
    fn display_parses_back() {
        let e = Expr::parse("-sqrt(u1^2+u2^2)*u1 / (1 + abs(u2)) ^ 2", 2).unwrap();
        let again = Expr::parse(&e.to_string(), 2).unwrap();
        for u in [[0.3, -1.2], [2.0, 0.5]] {
            assert_eq!(e.eval(&u), again.eval(&u));
        }
    }

    proptest! {
        #[test]
        fn symbolic_derivative_matches_central_difference(
            x in 0.5..2.0f64, y in -2.0..2.0f64, which in 0usize..6,
        ) {
            let exprs = [
                "u1^3 * u2 - 2*u2^2",
                "sqrt(u1^2 + u2^2) * u1",
                "u1 / (1 + u2^2)",
                "abs(u2) * u1 + u1^0.5",
                "u1^u2",
                "-(u1 - u2)^2 / sqrt(u1)",
            ];
            let e = Expr::parse(exprs[which], 2).unwrap();
            for var in 0..2 {
                let d = e.derivative(var).eval(&[x, y]);
                let h = 1e-6;
                let mut p = [x, y];
                let mut m = [x, y];
                p[var] += h;
                m[var] -= h;
                let fd = (e.eval(&p) - e.eval(&m)) / (2.0 * h);
                // abs has a kink at 0
                if which == 3 && var == 1 && y.abs() < 1e-5 {
                    continue;
                }
                prop_assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()), "{} d/du{}: {} vs {}", exprs[which], var + 1, d, fd);
            }
        }
    }
}
