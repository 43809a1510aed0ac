//! Small symbolic algebra over the jet variables `rho`, `S` and their
//! derivatives, plus a text parser for it.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::fields::Jet;

/// Field variable an expression may read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Rho,
    S,
    DRho { axis: usize, order: usize },
    DS { axis: usize, order: usize },
}

impl Sym {
    pub fn order(self) -> usize {
        match self {
            Sym::Rho | Sym::S => 0,
            Sym::DRho { order, .. } | Sym::DS { order, .. } => order,
        }
    }

    pub fn axis(self) -> Option<usize> {
        match self {
            Sym::Rho | Sym::S => None,
            Sym::DRho { axis, .. } | Sym::DS { axis, .. } => Some(axis),
        }
    }

    pub fn is_phase(self) -> bool {
        matches!(self, Sym::S | Sym::DS { .. })
    }

    fn differentiate(self, axis: usize) -> Result<Sym> {
        let next = |o: usize, a: Option<usize>| -> Result<usize> {
            match a {
                Some(b) if b != axis => Err(Error::ExpressionOrder { order: o + 1 }),
                _ if o >= 2 => Err(Error::ExpressionOrder { order: o + 1 }),
                _ => Ok(o + 1),
            }
        };
        Ok(match self {
            Sym::Rho => Sym::DRho { axis, order: 1 },
            Sym::S => Sym::DS { axis, order: 1 },
            Sym::DRho { axis: a, order } => Sym::DRho {
                axis,
                order: next(order, Some(a))?,
            },
            Sym::DS { axis: a, order } => Sym::DS {
                axis,
                order: next(order, Some(a))?,
            },
        })
    }

    fn values<'a>(self, jet: &'a Jet) -> Result<&'a [f64]> {
        let axis_ok = |a: usize| -> Result<()> {
            if a < jet.dims() {
                Ok(())
            } else {
                Err(Error::AxisOutOfRange { axis: a, dims: jet.dims() })
            }
        };
        Ok(match self {
            Sym::Rho => &jet.rho,
            Sym::S => jet.s.as_deref().ok_or(Error::PhaseUnavailable)?,
            Sym::DRho { axis, order } => {
                axis_ok(axis)?;
                match order {
                    1 => &jet.d_rho[axis],
                    2 => &jet.dd_rho[axis],
                    o => return Err(Error::ExpressionOrder { order: o }),
                }
            }
            Sym::DS { axis, order } => {
                axis_ok(axis)?;
                match order {
                    1 => &jet.d_s[axis],
                    2 => &jet.dd_s[axis],
                    o => return Err(Error::ExpressionOrder { order: o }),
                }
            }
        })
    }
}

const AXIS_NAMES: [char; 2] = ['x', 'y'];

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = |axis: usize, order: usize| -> String {
            std::iter::repeat(AXIS_NAMES.get(axis).copied().unwrap_or('?'))
                .take(order)
                .collect()
        };
        match *self {
            Sym::Rho => write!(f, "rho"),
            Sym::S => write!(f, "S"),
            Sym::DRho { axis, order } => write!(f, "rho_{}", suffix(axis, order)),
            Sym::DS { axis, order } => write!(f, "S_{}", suffix(axis, order)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Sym(Sym),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// `base^(num/den)` with `den > 0`.
    Pow(Box<Expr>, i64, i64),
    Log(Box<Expr>),
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn rational_pow(x: f64, num: i64, den: i64) -> f64 {
    if den == 1 {
        x.powi(num as i32)
    } else if den == 2 {
        x.sqrt().powi(num as i32)
    } else {
        x.powf(num as f64 / den as f64)
    }
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn sym(s: Sym) -> Expr {
        Expr::Sym(s)
    }

    pub fn rho() -> Expr {
        Expr::Sym(Sym::Rho)
    }

    pub fn d_rho(axis: usize, order: usize) -> Expr {
        Expr::Sym(Sym::DRho { axis, order })
    }

    pub fn d_s(axis: usize, order: usize) -> Expr {
        Expr::Sym(Sym::DS { axis, order })
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Expr, num: i64, den: i64) -> Expr {
        assert!(den != 0, "zero denominator in exponent");
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd(num, den).max(1);
        num /= g;
        den /= g;
        if num == 0 {
            return Expr::Const(1.0);
        }
        if num == den {
            return a;
        }
        match a {
            Expr::Const(x) => Expr::Const(rational_pow(x, num, den)),
            other => Expr::Pow(Box::new(other), num, den),
        }
    }

    pub fn log(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(x.ln()),
            other => Expr::Log(Box::new(other)),
        }
    }

    /// Sum of terms; zero for an empty iterator.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::Const(0.0), Expr::add)
    }

    pub fn scale(self, k: f64) -> Expr {
        Expr::mul(Expr::Const(k), self)
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Sym(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(a) | Expr::Pow(a, _, _) | Expr::Log(a) => a.visit(f),
        }
    }

    /// Distinct symbols, sorted.
    pub fn symbols(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Sym(s) = e {
                if !out.contains(s) {
                    out.push(*s);
                }
            }
        });
        out.sort();
        out
    }

    pub fn depends_on(&self, s: Sym) -> bool {
        self.symbols().contains(&s)
    }

    pub fn max_axis(&self) -> Option<usize> {
        self.symbols().into_iter().filter_map(Sym::axis).max()
    }

    /// Partial derivative treating every jet variable as independent.
    pub fn partial(&self, wrt: Sym) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Sym(s) => Expr::Const(if *s == wrt { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => Expr::add(a.partial(wrt), b.partial(wrt)),
            Expr::Sub(a, b) => Expr::sub(a.partial(wrt), b.partial(wrt)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.partial(wrt), (**b).clone()),
                Expr::mul((**a).clone(), b.partial(wrt)),
            ),
            Expr::Div(a, b) => {
                let da = a.partial(wrt);
                let db = b.partial(wrt);
                if db == Expr::Const(0.0) {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                        Expr::pow((**b).clone(), 2, 1),
                    )
                }
            }
            Expr::Neg(a) => Expr::neg(a.partial(wrt)),
            Expr::Pow(a, n, d) => {
                let da = a.partial(wrt);
                if da == Expr::Const(0.0) {
                    return da;
                }
                Expr::mul(
                    Expr::mul(Expr::Const(*n as f64 / *d as f64), Expr::pow((**a).clone(), n - d, *d)),
                    da,
                )
            }
            Expr::Log(a) => Expr::div(a.partial(wrt), (**a).clone()),
        }
    }

    /// Total derivative along `axis` by the chain rule. Fails when a
    /// third-order or mixed derivative would be produced.
    pub fn total_derivative(&self, axis: usize) -> Result<Expr> {
        let mut acc = Expr::Const(0.0);
        for s in self.symbols() {
            let p = self.partial(s);
            if p == Expr::Const(0.0) {
                continue;
            }
            acc = Expr::add(acc, Expr::mul(p, Expr::Sym(s.differentiate(axis)?)));
        }
        Ok(acc)
    }

    /// Pointwise value on every site of the jet.
    pub fn eval(&self, jet: &Jet) -> Result<Vec<f64>> {
        let n = jet.len();
        Ok(match self {
            Expr::Const(v) => vec![*v; n],
            Expr::Sym(s) => s.values(jet)?.to_vec(),
            Expr::Add(a, b) => zip(a.eval(jet)?, &b.eval(jet)?, |x, y| x + y),
            Expr::Sub(a, b) => zip(a.eval(jet)?, &b.eval(jet)?, |x, y| x - y),
            Expr::Mul(a, b) => zip(a.eval(jet)?, &b.eval(jet)?, |x, y| x * y),
            Expr::Div(a, b) => zip(a.eval(jet)?, &b.eval(jet)?, |x, y| x / y),
            Expr::Neg(a) => a.eval(jet)?.into_iter().map(|x| -x).collect(),
            Expr::Pow(a, num, den) => a
                .eval(jet)?
                .into_iter()
                .map(|x| rational_pow(x, *num, *den))
                .collect(),
            Expr::Log(a) => a.eval(jet)?.into_iter().map(f64::ln).collect(),
        })
    }

    /// Value at a single point given a lookup for each symbol.
    pub fn eval_point(&self, lookup: &impl Fn(Sym) -> f64) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Sym(s) => lookup(*s),
            Expr::Add(a, b) => a.eval_point(lookup) + b.eval_point(lookup),
            Expr::Sub(a, b) => a.eval_point(lookup) - b.eval_point(lookup),
            Expr::Mul(a, b) => a.eval_point(lookup) * b.eval_point(lookup),
            Expr::Div(a, b) => a.eval_point(lookup) / b.eval_point(lookup),
            Expr::Neg(a) => -a.eval_point(lookup),
            Expr::Pow(a, n, d) => rational_pow(a.eval_point(lookup), *n, *d),
            Expr::Log(a) => a.eval_point(lookup).ln(),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $ctor:path) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl std::ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $ctor(self, Expr::Const(rhs))
            }
        }
        impl std::ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::Const(self), rhs)
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

fn zip(mut a: Vec<f64>, b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x = f(*x, *y);
    }
    a
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) if *v < 0.0 => write!(f, "({v:?})"),
            Expr::Const(v) => write!(f, "{v:?}"),
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, n, d) => {
                if matches!(**a, Expr::Pow(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                if *d == 1 && *n >= 0 {
                    write!(f, "^{n}")
                } else {
                    write!(f, "^({n}/{d})")
                }
            }
            Expr::Log(a) => write!(f, "log({a})"),
        }
    }
}

/// Named constants visible to the parser (`pi` is always defined).
pub type Scope = BTreeMap<String, f64>;

pub const MAX_DEPTH: usize = 256;

/// Parses an expression such as `0.5*g*rho^2 - alpha/hbar*S_x*rho`.
///
/// Identifiers are the jet variables (`rho`, `S`, `rho_x`, `S_yy`, ...),
/// names in `scope` and `pi`; functions are `log` and `sqrt`; `^` takes a
/// rational literal exponent such as `2`, `-1`, `0.5` or `(3/2)`.
pub fn parse(src: &str, scope: &Scope) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        depth: 0,
        scope,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
    scope: &'a Scope,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.err("expression nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::add(acc, self.term()?);
            } else if self.eat(b'-') {
                acc = Expr::sub(acc, self.term()?);
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::mul(acc, self.unary()?);
            } else if self.eat(b'/') {
                acc = Expr::div(acc, self.unary()?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            self.enter()?;
            let e = Expr::neg(self.unary()?);
            self.depth -= 1;
            Ok(e)
        } else if self.eat(b'+') {
            self.enter()?;
            let e = self.unary()?;
            self.depth -= 1;
            Ok(e)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let (n, d) = self.exponent()?;
            Ok(Expr::pow(base, n, d))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<(i64, i64)> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let n = self.integer()?;
            let d = if self.eat(b'/') { self.integer()? } else { 1 };
            if !self.eat(b')') {
                return Err(self.err("expected `)` after exponent"));
            }
            if d == 0 {
                return Err(self.err("zero denominator in exponent"));
            }
            return Ok((if neg { -n } else { n }, d));
        }
        let neg = self.eat(b'-');
        let start = self.pos;
        let v = self.number()?;
        let (n, d) = to_rational(v).ok_or(Error::Parse {
            pos: start,
            msg: "exponent must be a simple rational number".into(),
        })?;
        Ok((if neg { -n } else { n }, d))
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<i64>().ok())
            .filter(|v| *v <= 1_000_000)
            .ok_or(Error::Parse {
                pos: start,
                msg: "integer out of range".into(),
            })
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.err("expected number"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| Error::Parse {
            pos: start,
            msg: format!("bad number `{text}`"),
        })
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.ident();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)` after function argument"));
                    }
                    return match name.as_str() {
                        "log" => Ok(Expr::log(arg)),
                        "sqrt" => Ok(Expr::pow(arg, 1, 2)),
                        _ => Err(Error::Parse {
                            pos: start,
                            msg: format!("unknown function `{name}`"),
                        }),
                    };
                }
                self.identifier(&name, start)
            }
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn identifier(&self, name: &str, pos: usize) -> Result<Expr> {
        if let Some(sym) = field_symbol(name, pos)? {
            return Ok(Expr::Sym(sym));
        }
        if let Some(v) = self.scope.get(name) {
            return Ok(Expr::Const(*v));
        }
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        Err(Error::Parse {
            pos,
            msg: format!("unknown identifier `{name}`"),
        })
    }
}

fn field_symbol(name: &str, pos: usize) -> Result<Option<Sym>> {
    let (is_rho, rest) = if let Some(r) = name.strip_prefix("rho") {
        (true, r)
    } else if let Some(r) = name.strip_prefix('S') {
        (false, r)
    } else {
        return Ok(None);
    };
    if rest.is_empty() {
        return Ok(Some(if is_rho { Sym::Rho } else { Sym::S }));
    }
    let Some(suffix) = rest.strip_prefix('_') else {
        return Ok(None);
    };
    if suffix.is_empty() || !suffix.bytes().all(|b| b == b'x' || b == b'y') {
        return Ok(None);
    }
    let first = suffix.as_bytes()[0];
    if !suffix.bytes().all(|b| b == first) {
        return Err(Error::Parse {
            pos,
            msg: format!("mixed derivative `{name}` is not supported"),
        });
    }
    let order = suffix.len();
    if order > 2 {
        return Err(Error::ExpressionOrder { order });
    }
    let axis = usize::from(first == b'y');
    Ok(Some(if is_rho {
        Sym::DRho { axis, order }
    } else {
        Sym::DS { axis, order }
    }))
}

fn to_rational(v: f64) -> Option<(i64, i64)> {
    if !v.is_finite() || v.abs() > 1e6 {
        return None;
    }
    (1..=64i64).find_map(|d| {
        let n = (v * d as f64).round();
        ((n / d as f64 - v).abs() < 1e-12).then_some((n as i64, d))
    })
}
