//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! One polynomial type carries every symbolic object in the crate: the
//! generalized Hermite indeterminates `H_k`, the log-density derivatives
//! `a_k`, the formal cumulant sequence `L_k`, standardized cumulant
//! coefficients `A_{ri}` and the plain variable `x`.

use crate::error::{Error, Result};
use crate::ring::{q_to_f64, qi, Coeff, Q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    X,
    /// Generalized Hermite function `H_k`, k ≥ 1.
    H(u16),
    /// Log-density derivative `a_k = D^k(-ln p)`.
    A(u16),
    /// Formal adjusted cumulant `L_k`.
    L(u16),
    /// Standardized cumulant coefficient `A_{ri}`.
    Cum(u16, u16),
}

impl Var {
    pub fn is_h(self) -> bool {
        matches!(self, Var::H(_))
    }
    pub fn is_l(self) -> bool {
        matches!(self, Var::L(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => write!(f, "x"),
            Var::H(k) => write!(f, "H{k}"),
            Var::A(k) => write!(f, "a{k}"),
            Var::L(k) => write!(f, "L{k}"),
            Var::Cum(r, i) => write!(f, "A({r},{i})"),
        }
    }
}

/// Product of powers of variables, sorted by variable, exponents ≥ 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Mono(Vec<(Var, u32)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn var(v: Var, e: u32) -> Self {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(v, e)])
        }
    }

    pub fn from_factors(mut f: Vec<(Var, u32)>) -> Self {
        f.retain(|&(_, e)| e > 0);
        f.sort();
        let mut out: Vec<(Var, u32)> = Vec::with_capacity(f.len());
        for (v, e) in f {
            match out.last_mut() {
                Some((w, x)) if *w == v => *x += e,
                _ => out.push((v, e)),
            }
        }
        Mono(out)
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map_or(0, |&(_, e)| e)
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let (a, b) = (&self.0, &o.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    /// Split into the factors selected by `pred` and the rest.
    pub fn split(&self, pred: impl Fn(Var) -> bool) -> (Mono, Mono) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().partition(|(v, _)| pred(*v));
        (Mono(a), Mono(b))
    }

    /// Sum of H indices weighted by exponent.
    pub fn h_weight(&self) -> u32 {
        self.0
            .iter()
            .map(|&(v, e)| match v {
                Var::H(k) => k as u32 * e,
                _ => 0,
            })
            .sum()
    }

    /// Ordering used for printing: total degree, then the multiset of
    /// variables compared largest-first, larger multisets first.
    fn print_cmp(&self, o: &Mono) -> Ordering {
        self.degree().cmp(&o.degree()).then_with(|| {
            let expand = |m: &Mono| {
                let mut v: Vec<Var> =
                    m.0.iter().flat_map(|&(v, e)| std::iter::repeat_n(v, e as usize)).collect();
                v.sort_by(|a, b| b.cmp(a));
                v
            };
            expand(o).cmp(&expand(self))
        })
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (n, (v, e)) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Poly::term(c, Mono::one())
    }

    pub fn int(c: i64) -> Self {
        Poly::constant(qi(c))
    }

    pub fn term(c: Q, m: Mono) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Self {
        Poly::term(Q::one(), Mono::var(v, 1))
    }

    /// `H_k` with `H_0 = 1`.
    pub fn h(k: usize) -> Self {
        if k == 0 {
            Poly::one()
        } else {
            Poly::var(Var::H(k as u16))
        }
    }

    pub fn x() -> Self {
        Poly::var(Var::X)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Mono::one())
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign_ref(&mut self, o: &Poly) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scale_q(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn mul_ref(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = acc.mul_ref(self);
        }
        acc
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut v: Vec<Var> =
            self.terms.keys().flat_map(|m| m.0.iter().map(|&(v, _)| v)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// The derivative `D = d/dx`, acting through the rules
    /// `D H_r = H_1 H_r - H_{r+1}`, `D a_r = a_{r+1}`, `D x = 1`;
    /// cumulant symbols are constants.
    pub fn diff(&self) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (idx, &(v, e)) in m.0.iter().enumerate() {
                let dv = match v {
                    Var::X => Poly::one(),
                    Var::H(r) => {
                        let mut p = Poly::h(1).mul_ref(&Poly::h(r as usize));
                        p.add_term(Mono::var(Var::H(r + 1), 1), -Q::one());
                        p
                    }
                    Var::A(r) => Poly::var(Var::A(r + 1)),
                    Var::L(_) | Var::Cum(..) => continue,
                };
                let mut rest = m.0.clone();
                if e == 1 {
                    rest.remove(idx);
                } else {
                    rest[idx].1 -= 1;
                }
                let scaled = Poly::term(c * qi(e as i64), Mono(rest));
                out.add_assign_ref(&scaled.mul_ref(&dv));
            }
        }
        out
    }

    /// Replace variables for which `f` returns a polynomial.
    pub fn substitute(&self, f: impl Fn(Var) -> Option<Poly>) -> Poly {
        let mut cache: BTreeMap<(Var, u32), Option<Poly>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(c.clone());
            let mut keep = Vec::new();
            for &(v, e) in &m.0 {
                let entry = cache
                    .entry((v, e))
                    .or_insert_with(|| f(v).map(|p| p.pow(e)))
                    .clone();
                match entry {
                    Some(p) => acc = acc.mul_ref(&p),
                    None => keep.push((v, e)),
                }
            }
            out.add_assign_ref(&acc.mul_ref(&Poly::term(Q::one(), Mono(keep))));
        }
        out
    }

    /// Evaluate with values supplied per variable.
    pub fn eval<T: Coeff>(&self, f: &impl Fn(Var) -> Result<T>) -> Result<T> {
        let mut total = T::nil();
        for (m, c) in &self.terms {
            let mut t = T::from_q(c);
            for &(v, e) in &m.0 {
                t = t.times(&f(v)?.powi(e));
            }
            total = total.plus(&t);
        }
        Ok(total)
    }

    /// Evaluate an `H`-polynomial at numeric `H_1, H_2, …` (`hs[k-1] = H_k`).
    pub fn eval_h(&self, hs: &[f64]) -> Result<f64> {
        self.eval(&|v| match v {
            Var::H(k) => hs
                .get(k as usize - 1)
                .copied()
                .ok_or(Error::Length { needed: k as usize, available: hs.len() }),
            other => Err(Error::Domain(format!("variable {other} has no numeric value"))),
        })
    }

    /// Group terms by the factors selected by `pred`; each group maps to the
    /// polynomial in the remaining variables.
    pub fn split_by(&self, pred: impl Fn(Var) -> bool + Copy) -> BTreeMap<Mono, Poly> {
        let mut out: BTreeMap<Mono, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (sel, rest) = m.split(pred);
            out.entry(sel).or_default().add_term(rest, c.clone());
        }
        out
    }

    /// Drop every term containing a variable rejected by `keep`.
    pub fn retain_vars(&self, keep: impl Fn(Var) -> bool) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.0.iter().all(|&(v, _)| keep(v)))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    fn sorted_terms(&self) -> Vec<(&Mono, &Q)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        let univariate_x = self.variables().iter().all(|&v| v == Var::X);
        if univariate_x {
            v.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()));
        } else {
            v.sort_by(|a, b| a.0.print_cmp(b.0));
        }
        v
    }

    /// Terms in printing order.
    pub fn ordered_terms(&self) -> Vec<(Mono, Q)> {
        self.sorted_terms().into_iter().map(|(m, c)| (m.clone(), c.clone())).collect()
    }

    /// Integer content pulled out with the sign of the leading term:
    /// `-8*x^3 + 14*x` prints as `-2(4x^3 - 7x)`. Other polynomials print as usual.
    pub fn to_factored(&self) -> String {
        let univariate_x = self.variables().iter().all(|&v| v == Var::X);
        if self.len() < 2 || !univariate_x || !self.terms.values().all(|c| c.is_integer()) {
            return self.to_string();
        }
        let terms = self.sorted_terms();
        let mut content = BigInt::zero();
        for (_, c) in &terms {
            content = content.gcd(c.numer());
        }
        if terms[0].1.is_negative() {
            content = -content;
        }
        let inner = self.scale_q(&(Q::one() / Q::from_integer(content.clone())));
        let mut body = String::new();
        for (n, (m, c)) in inner.sorted_terms().into_iter().enumerate() {
            let a = c.abs();
            match (n, c.is_negative()) {
                (0, true) => body.push('-'),
                (0, false) => {}
                (_, true) => body.push_str(" - "),
                (_, false) => body.push_str(" + "),
            }
            let d = m.degree();
            if !a.is_one() || d == 0 {
                body.push_str(&a.to_string());
            }
            match d {
                0 => {}
                1 => body.push('x'),
                _ => body.push_str(&format!("x^{d}")),
            }
        }
        if content.is_one() {
            body
        } else if content == -BigInt::one() {
            format!("-({body})")
        } else {
            format!("{content}({body})")
        }
    }

    /// Compact notation for `H`-polynomials: `k·1^{i1}2^{i2}…` stands for
    /// `k H_1^{i1} H_2^{i2} …`, indices of two digits in parentheses.
    pub fn to_compact(&self) -> Result<String> {
        if self.is_zero() {
            return Ok("0".into());
        }
        let mut out = String::new();
        for (n, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if n == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if !a.is_one() {
                out.push_str(&format!("{a}·"));
            }
            if m.is_one() {
                out.push('0');
            }
            for &(v, e) in &m.0 {
                let Var::H(k) = v else {
                    return Err(Error::Domain(format!("compact form needs H only, found {v}")));
                };
                if k >= 10 {
                    out.push_str(&format!("({k})"));
                } else {
                    out.push_str(&k.to_string());
                }
                if e > 1 {
                    out.push_str(&format!("^{e}"));
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (n, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, o: Poly) -> Poly {
        self.add_assign_ref(&o);
        self
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut s = self.clone();
        s.add_assign_ref(o);
        s
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        self + (-o)
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        self + &(-o)
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -(self.clone())
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        self.mul_ref(&o)
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        self.mul_ref(o)
    }
}

impl Coeff for Poly {
    fn nil() -> Self {
        Poly::zero()
    }
    fn unit() -> Self {
        Poly::one()
    }
    fn is_nil(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self.mul_ref(o)
    }
    fn negate(&self) -> Self {
        -self
    }
    fn from_q(x: &Q) -> Self {
        Poly::constant(x.clone())
    }
    fn scale(&self, x: &Q) -> Self {
        self.scale_q(x)
    }
}

/// Numeric value of a constant polynomial.
pub fn constant_f64(p: &Poly) -> Option<f64> {
    p.terms().all(|(m, _)| m.is_one()).then(|| q_to_f64(&p.constant_term()))
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.s.get(self.pos).copied()
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {} of {:?}", self.pos, String::from_utf8_lossy(self.s)))
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn uint(&mut self) -> Result<u64> {
        self.peek();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("integer overflow"))
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = Poly::zero();
        let mut sign = if self.eat(b'-') {
            -1
        } else {
            self.eat(b'+');
            1
        };
        loop {
            let t = self.term()?;
            acc = if sign < 0 { acc - t } else { acc + t };
            if self.eat(b'+') {
                sign = 1;
            } else if self.eat(b'-') {
                sign = -1;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&mut self) -> bool {
        matches!(self.peek(), Some(c) if c.is_ascii_digit() || b"xHaLA(".contains(&c))
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.eat(b'/') {
                let d = self.uint()?;
                acc = acc.scale_q(&Q::new(1.into(), (d as i64).into()));
            } else if self.starts_factor() {
                acc = acc * self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.uint()?;
            Ok(base.pow(e as u32))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Poly::constant(qi(self.uint()? as i64))),
            Some(b'x') => {
                self.pos += 1;
                Ok(Poly::x())
            }
            Some(b'H') => {
                self.pos += 1;
                Ok(Poly::h(self.uint()? as usize))
            }
            Some(b'a') => {
                self.pos += 1;
                Ok(Poly::var(Var::A(self.uint()? as u16)))
            }
            Some(b'L') => {
                self.pos += 1;
                Ok(Poly::var(Var::L(self.uint()? as u16)))
            }
            Some(b'A') => {
                self.pos += 1;
                if !self.eat(b'(') {
                    return Err(self.err("expected '(' after A"));
                }
                let r = self.uint()?;
                if !self.eat(b',') {
                    return Err(self.err("expected ','"));
                }
                let i = self.uint()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(Poly::var(Var::Cum(r as u16, i as u16)))
            }
            _ => Err(self.err("unexpected token")),
        }
    }
}

/// Parse an algebraic expression such as `H7 - 2*H3*H4 + H1*H3^2`,
/// `-2(4x^3 - 7x)` or `A(4,3)^2/2`. Juxtaposition multiplies; `/` takes an
/// integer divisor. Multi-digit indices must be separated from what follows.
pub fn parse(s: &str) -> Result<Poly> {
    let mut p = Parser { s: s.as_bytes(), pos: 0 };
    let out = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(out)
}

/// Parse the compact `k·1^{i1}2^{i2}…` notation for `H`-polynomials.
/// Index `0` denotes the constant `H_0 = 1`.
pub fn parse_compact(s: &str) -> Result<Poly> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let cleaned = cleaned.replace('·', "*");
    let bytes = cleaned.as_bytes();
    let mut out = Poly::zero();
    let mut pos = 0;
    let bad = |what: &str| Error::Parse(format!("{what} in compact form {s:?}"));
    while pos < bytes.len() {
        let mut sign = Q::one();
        if bytes[pos] == b'-' {
            sign = -sign;
            pos += 1;
        } else if bytes[pos] == b'+' {
            pos += 1;
        }
        let end = bytes[pos..]
            .iter()
            .position(|&c| c == b'+' || c == b'-')
            .map_or(bytes.len(), |e| pos + e);
        let chunk = &cleaned[pos..end];
        pos = end;
        let (coef, body) = match chunk.split_once('*') {
            Some((c, b)) => (qi(c.parse::<i64>().map_err(|_| bad("bad coefficient"))?), b),
            None => (Q::one(), chunk),
        };
        let b = body.as_bytes();
        let mut i = 0;
        let mut mono = Poly::one();
        if b.is_empty() {
            return Err(bad("empty term"));
        }
        while i < b.len() {
            let k: usize = if b[i] == b'(' {
                let close = body[i..].find(')').ok_or_else(|| bad("unclosed paren"))? + i;
                let k = body[i + 1..close].parse().map_err(|_| bad("bad index"))?;
                i = close + 1;
                k
            } else if b[i].is_ascii_digit() {
                i += 1;
                (b[i - 1] - b'0') as usize
            } else {
                return Err(bad("unexpected character"));
            };
            let mut e = 1u32;
            if i < b.len() && b[i] == b'^' {
                i += 1;
                // exponents are single digits: `1^23^3` is H_1^2 H_3^3
                if i >= b.len() || !b[i].is_ascii_digit() {
                    return Err(bad("bad exponent"));
                }
                e = (b[i] - b'0') as u32;
                i += 1;
            }
            mono = mono * Poly::h(k).pow(e);
        }
        out = out + mono.scale_q(&(coef * &sign));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::q;

    fn p(s: &str) -> Poly {
        parse(s).unwrap()
    }

    #[test]
    fn ring_operations() {
        assert_eq!(p("H1") * p("H1"), p("H1^2"));
        assert_eq!(p("H2 - H1^2") + p("H1^2"), p("H2"));
        assert!((Poly::zero() * p("H3 + 4")).is_zero());
        assert_eq!(p("(x+1)^2"), p("x^2 + 2x + 1"));
        assert_eq!(p("A(4,3)^2/2"), Poly::var(Var::Cum(4, 3)).pow(2).scale_q(&q(1, 2)));
    }

    #[test]
    fn derivative_rules() {
        assert_eq!(p("H2").diff(), p("H1*H2 - H3"));
        assert!(Poly::one().diff().is_zero());
        assert_eq!(p("H1^2").diff(), p("2*H1^3 - 2*H1*H2"));
        assert_eq!(p("x^3").diff(), p("3x^2"));
        assert_eq!(p("a1*a2").diff(), p("a2^2 + a1*a3"));
    }

    #[test]
    fn canonical_order() {
        let g = p("H1*H3^2 + H7 - 2*H3*H4");
        assert_eq!(g.to_string(), "H7 - 2*H3*H4 + H1*H3^2");
        let g34 = p("H1*H2*H3 - H3^2 + H6 - H2*H4");
        assert_eq!(g34.to_string(), "H6 - H2*H4 - H3^2 + H1*H2*H3");
        assert_eq!(p("-15 + 42x^2 - 11x^4").to_string(), "-11*x^4 + 42*x^2 - 15");
    }

    #[test]
    fn factored_form() {
        assert_eq!(parse("-8*x^3 + 14*x").unwrap().to_factored(), "-2(4x^3 - 7x)");
        assert_eq!(parse("-7*x^3 + 15*x").unwrap().to_factored(), "-(7x^3 - 15x)");
        assert_eq!(parse("x^2 - 1").unwrap().to_factored(), "x^2 - 1");
        assert_eq!(parse("3").unwrap().to_factored(), "3");
    }

    #[test]
    fn compact_round_trip() {
        let s = "9 - 2·45 + 14^2";
        let poly = parse_compact(s).unwrap();
        assert_eq!(poly, p("H9 - 2*H4*H5 + H1*H4^2"));
        assert_eq!(poly.to_compact().unwrap(), s);
        let big = parse_compact("(14)-5·12(11) + 3 · 1^23^3").unwrap();
        assert_eq!(big, p("H14 - 5*H1*H2*H11 + 3*H1^2*H3^3"));
        assert_eq!(parse_compact("7-1 2 4").unwrap(), p("H7 - H1*H2*H4"));
        assert_eq!(parse_compact("10·12^ 5").unwrap(), p("10*H1*H2^5"));
    }

    #[test]
    fn split_groups_by_selected_variables() {
        let e = p("L1*H2 + 3*L1*H1 + L3^2*H5");
        let groups = e.split_by(Var::is_l);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[&Mono::var(Var::L(1), 1)], p("H2 + 3*H1"));
    }

    #[test]
    fn substitution_and_eval() {
        let e = p("H2 + H1*H3");
        let sub = e.substitute(|v| match v {
            Var::H(1) => Some(p("x")),
            Var::H(2) => Some(p("x^2 - 1")),
            Var::H(3) => Some(p("x^3 - 3x")),
            _ => None,
        });
        assert_eq!(sub, p("x^4 - 2x^2 - 1"));
        assert_eq!(e.eval_h(&[2.0, 3.0, 2.0]).unwrap(), 7.0);
        assert!(e.eval_h(&[2.0]).is_err());
    }
}
