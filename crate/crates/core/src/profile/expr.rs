//! Closed-form generator expressions in the single variable `t`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 't' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := exp | ln | sqrt | min1 | pow
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-t^2`
//! is `-(t^2)`. `min1(e)` is `min(e, 1)` and `pow(a, b)` is `a^b`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Min1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// True when the expression does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Unary(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    pub fn eval<T: Real>(&self, t: T) -> Result<T> {
        self.eval_jet(t).map(|j| j.value)
    }

    /// Value together with first and second derivative in `t`.
    pub fn eval_jet<T: Real>(&self, t: T) -> Result<Jet<T>> {
        let out = self.jet(t)?;
        if !out.value.is_finite() {
            return Err(Error::Domain {
                what: "non-finite result",
                at: t.as_f64(),
            });
        }
        Ok(out)
    }

    fn jet<T: Real>(&self, t: T) -> Result<Jet<T>> {
        let domain = |what| Error::Domain { what, at: t.as_f64() };
        Ok(match self {
            Expr::Const(c) => Jet::constant(T::lit(*c)),
            Expr::Var => Jet::variable(t),
            Expr::Unary(op, e) => {
                let a = e.jet(t)?;
                match op {
                    UnaryOp::Neg => a.neg(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Ln => {
                        if a.value <= T::zero() {
                            return Err(domain("ln of a nonpositive value"));
                        }
                        a.ln()
                    }
                    UnaryOp::Sqrt => {
                        if a.value < T::zero() {
                            return Err(domain("sqrt of a negative value"));
                        }
                        a.sqrt()
                    }
                    UnaryOp::Min1 => {
                        if a.value < T::one() {
                            a
                        } else {
                            Jet::constant(T::one())
                        }
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.jet(t)?;
                let b = r.jet(t)?;
                match op {
                    BinaryOp::Add => a.add(b),
                    BinaryOp::Sub => a.add(b.neg()),
                    BinaryOp::Mul => a.mul(b),
                    BinaryOp::Div => {
                        if b.value == T::zero() {
                            return Err(domain("division by zero"));
                        }
                        a.div(b)
                    }
                    BinaryOp::Pow => {
                        if r.is_constant() {
                            let p = b.value;
                            if a.value < T::zero() && p.fract() != T::zero() {
                                return Err(domain("fractional power of a negative value"));
                            }
                            if a.value == T::zero() && p < T::zero() {
                                return Err(domain("division by zero"));
                            }
                            a.powf(p)
                        } else {
                            if a.value <= T::zero() {
                                return Err(domain("variable exponent of a nonpositive base"));
                            }
                            a.ln().mul(b).exp()
                        }
                    }
                }
            }
        })
    }
}

/// Truncated Taylor jet: value, first and second derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Self { value: v, d1: T::zero(), d2: T::zero() }
    }

    pub fn variable(v: T) -> Self {
        Self { value: v, d1: T::one(), d2: T::zero() }
    }

    fn neg(self) -> Self {
        Self { value: -self.value, d1: -self.d1, d2: -self.d2 }
    }

    fn add(self, o: Self) -> Self {
        Self { value: self.value + o.value, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }

    fn mul(self, o: Self) -> Self {
        let two = T::lit(2.0);
        Self {
            value: self.value * o.value,
            d1: self.d1 * o.value + self.value * o.d1,
            d2: self.d2 * o.value + two * self.d1 * o.d1 + self.value * o.d2,
        }
    }

    fn div(self, o: Self) -> Self {
        let q = self.value / o.value;
        let q1 = (self.d1 - q * o.d1) / o.value;
        let q2 = (self.d2 - T::lit(2.0) * q1 * o.d1 - q * o.d2) / o.value;
        Self { value: q, d1: q1, d2: q2 }
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        Self { value: e, d1: e * self.d1, d2: e * (self.d2 + self.d1 * self.d1) }
    }

    fn ln(self) -> Self {
        let v = self.value;
        Self {
            value: v.ln(),
            d1: self.d1 / v,
            d2: self.d2 / v - self.d1 * self.d1 / (v * v),
        }
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let half = T::lit(0.5);
        // derivatives of a constant argument stay zero even at the origin
        let d1 = if self.d1 == T::zero() { T::zero() } else { half * self.d1 / s };
        let d2 = if self.d1 == T::zero() && self.d2 == T::zero() {
            T::zero()
        } else {
            half * self.d2 / s - T::lit(0.25) * self.d1 * self.d1 / (s * s * s)
        };
        Self { value: s, d1, d2 }
    }

    fn powf(self, p: T) -> Self {
        if p == T::zero() {
            return Self::constant(T::one());
        }
        let int = p.fract() == T::zero() && p.abs() < T::lit(1e9);
        let pw = |q: T| {
            if int {
                self.value.powi(q.to_i32().unwrap_or(0))
            } else {
                self.value.powf(q)
            }
        };
        let one = T::one();
        let v = pw(p);
        let dv = if p == one { one } else { p * pw(p - one) };
        let ddv = if p == one || p == T::lit(2.0) {
            if p == one { T::zero() } else { T::lit(2.0) }
        } else {
            p * (p - one) * pw(p - T::lit(2.0))
        };
        Self {
            value: v,
            d1: dv * self.d1,
            d2: ddv * self.d1 * self.d1 + dv * self.d2,
        }
    }
}

impl fmt::Display for Expr {
    /// Canonical, fully parenthesised form; `parse(to_string())` reproduces
    /// the tree exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var => f.write_str("t"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(op, e) => {
                let name = match op {
                    UnaryOp::Exp => "exp",
                    UnaryOp::Ln => "ln",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Min1 => "min1",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({e})")
            }
            Expr::Binary(op, l, r) => {
                let sym = match op {
                    BinaryOp::Add => '+',
                    BinaryOp::Sub => '-',
                    BinaryOp::Mul => '*',
                    BinaryOp::Div => '/',
                    BinaryOp::Pow => '^',
                };
                write!(f, "({l}{sym}{r})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next token and the byte offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            let bytes = rest.as_bytes();
            let mut i = 0;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &rest[..i];
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            self.pos += i;
            return Ok((Tok::Num(value), start));
        }
        if c.is_alphabetic() || c == '_' {
            let len: usize = rest
                .chars()
                .take_while(|ch| ch.is_alphanumeric() || *ch == '_')
                .map(char::len_utf8)
                .sum();
            self.pos += len;
            return Ok((Tok::Ident(rest[..len].to_string()), start));
        }
        if "+-*/^(),".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{c}`"),
        })
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(self.unexpected(&format!("expected `{c}`")))
        }
    }

    fn unexpected(&self, message: &str) -> Error {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
        };
        Error::Syntax {
            offset: self.at,
            message: format!("{message}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinaryOp::Add,
                Tok::Sym('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinaryOp::Mul,
                Tok::Sym('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(Expr::unary(UnaryOp::Neg, self.unary()?));
        }
        let base = self.atom()?;
        if self.tok == Tok::Sym('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.at;
                self.bump()?;
                if name == "t" {
                    return Ok(Expr::Var);
                }
                let arity = match name.as_str() {
                    "exp" | "ln" | "sqrt" | "min1" => 1,
                    "pow" => 2,
                    _ => return Err(Error::UnknownIdentifier { name, offset }),
                };
                self.expect('(')?;
                let mut args = vec![self.expr()?];
                while self.tok == Tok::Sym(',') {
                    self.bump()?;
                    args.push(self.expr()?);
                }
                self.expect(')')?;
                if args.len() != arity {
                    return Err(Error::Arity {
                        name,
                        expected: arity,
                        found: args.len(),
                        offset,
                    });
                }
                let mut args = args.into_iter();
                let first = args.next().expect("one argument");
                Ok(match name.as_str() {
                    "exp" => Expr::unary(UnaryOp::Exp, first),
                    "ln" => Expr::unary(UnaryOp::Ln, first),
                    "sqrt" => Expr::unary(UnaryOp::Sqrt, first),
                    "min1" => Expr::unary(UnaryOp::Min1, first),
                    _ => Expr::binary(BinaryOp::Pow, first, args.next().expect("two arguments")),
                })
            }
            _ => Err(self.unexpected("expected a number, `t`, a function or `(`")),
        }
    }
}

/// Parse `src` into an expression tree.
pub fn parse_expression(src: &str) -> Result<Expr> {
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        lex: Lexer { src, pos: 0 },
        tok: Tok::End,
        at: 0,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    #[test]
    fn rational_xi() {
        let e = parse_expression("t/(1+t)").unwrap();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Div, Expr::Var, Expr::binary(BinaryOp::Add, c(1.0), Expr::Var))
        );
        assert_eq!(e.eval(1.0).unwrap(), 0.5);
        assert_eq!(e.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn exponential_xi() {
        let e = parse_expression("0.5*(1 - exp(-t))").unwrap();
        let expected = Expr::binary(
            BinaryOp::Mul,
            c(0.5),
            Expr::binary(
                BinaryOp::Sub,
                c(1.0),
                Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Neg, Expr::Var)),
            ),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_paren_offset() {
        match parse_expression("t/(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            parse_expression("sin(t)"),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("1 + exp(t, 2)"),
            Err(Error::Arity { expected: 1, found: 2, offset: 4, .. })
        ));
        assert!(matches!(parse_expression("pow(t)"), Err(Error::Arity { .. })));
    }

    #[test]
    fn precedence() {
        let e = parse_expression("-t^2 + 2^3^2 * t").unwrap();
        assert_eq!(e.eval(2.0).unwrap(), -4.0 + 512.0 * 2.0);
        let e = parse_expression("pow(t, 0.5) - sqrt(t)").unwrap();
        assert_eq!(e.eval(3.0).unwrap(), 0.0);
        let e = parse_expression(" 1.5e1 * t ").unwrap();
        assert_eq!(e.eval(2.0).unwrap(), 30.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(parse_expression("ln(t)").unwrap().eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(parse_expression("sqrt(t-1)").unwrap().eval(0.5), Err(Error::Domain { .. })));
        assert!(matches!(parse_expression("1/t").unwrap().eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(parse_expression("(t-1)^0.5").unwrap().eval(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn min1_clamps() {
        let e = parse_expression("min1(2*t)").unwrap();
        assert_eq!(e.eval(0.25).unwrap(), 0.5);
        assert_eq!(e.eval(3.0).unwrap(), 1.0);
        let j = e.eval_jet(3.0).unwrap();
        assert_eq!(j.d1, 0.0);
    }

    #[test]
    fn jets_match_finite_differences() {
        let e = parse_expression("t/(1+t) * exp(-t/3) + ln(1+t^2) - sqrt(1+t)^3").unwrap();
        for &t in &[0.1, 0.7, 2.5] {
            let j = e.eval_jet(t).unwrap();
            let h = 1e-4;
            let f = |x: f64| e.eval(x).unwrap();
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            assert!((j.d1 - d1).abs() < 1e-7, "{t}");
            assert!((j.d2 - d2).abs() < 1e-5, "{t}");
        }
    }

    #[test]
    fn integer_power_at_origin() {
        let j = parse_expression("t^2").unwrap().eval_jet(0.0).unwrap();
        assert_eq!((j.value, j.d1, j.d2), (0.0, 0.0, 2.0));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            (0.0f64..1e6).prop_map(Expr::Const),
            (0u32..100).prop_map(|k| Expr::Const(k as f64)),
        ];
        leaf.prop_recursive(7, 256, 2, |inner| {
            prop_oneof![
                (
                    prop_oneof![
                        Just(UnaryOp::Neg),
                        Just(UnaryOp::Exp),
                        Just(UnaryOp::Ln),
                        Just(UnaryOp::Sqrt),
                        Just(UnaryOp::Min1)
                    ],
                    inner.clone()
                )
                    .prop_map(|(op, e)| Expr::unary(op, e)),
                (
                    prop_oneof![
                        Just(BinaryOp::Add),
                        Just(BinaryOp::Sub),
                        Just(BinaryOp::Mul),
                        Just(BinaryOp::Div),
                        Just(BinaryOp::Pow)
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn canonical_form_round_trips(e in arb_expr()) {
            prop_assume!(e.depth() <= 8);
            let printed = e.to_string();
            let back = parse_expression(&printed).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
