//! Elements of K_ν = F_q((π)), π = 1/T, with explicit precision.
//!
//! A [`Laurent`] is either exact (a Laurent polynomial in π) or known only
//! modulo π^k. Precision is propagated pessimistically through arithmetic
//! and a value that is zero to the known precision is kept distinct from the
//! exact zero.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gf::{Field, GfElem};
use crate::poly::Poly;

/// Relative precision used when inverting an exact non-monomial element.
pub const DEFAULT_PRECISION: i64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    /// Exact zero.
    Infinity,
    /// Zero to precision k: the true valuation is at least k.
    AtLeast(i64),
}

/// An absolute value `0` or `q^e`. Ordered as real numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbsValue {
    Zero,
    Pow(i64),
}

impl AbsValue {
    pub fn one() -> AbsValue {
        AbsValue::Pow(0)
    }

    /// `log_q` of the value, `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        match self {
            AbsValue::Zero => None,
            AbsValue::Pow(e) => Some(*e),
        }
    }

    pub fn to_f64(&self, q: usize) -> f64 {
        match self {
            AbsValue::Zero => 0.0,
            AbsValue::Pow(e) => (q as f64).powi(*e as i32),
        }
    }

    pub fn to_rational(&self, q: usize) -> BigRational {
        match self {
            AbsValue::Zero => BigRational::zero(),
            AbsValue::Pow(e) => q_pow(q, *e),
        }
    }

    pub fn mul(&self, other: &AbsValue) -> AbsValue {
        match (self, other) {
            (AbsValue::Pow(a), AbsValue::Pow(b)) => AbsValue::Pow(a + b),
            _ => AbsValue::Zero,
        }
    }
}

/// `q^e` as an exact rational.
pub fn q_pow(q: usize, e: i64) -> BigRational {
    let base = BigInt::from(q);
    let p = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Laurent {
    field: Field,
    v0: i64,
    c: Vec<u8>,
    prec: Option<i64>,
}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(a.min(b)),
    }
}

impl Laurent {
    /// Builds a normalized element from raw coefficients for exponents
    /// `v0, v0 + 1, ...`; coefficients at or beyond `prec` are discarded.
    pub fn from_raw(field: Field, v0: i64, mut c: Vec<u8>, prec: Option<i64>) -> Laurent {
        if let Some(k) = prec {
            let keep = (k - v0).clamp(0, c.len() as i64) as usize;
            c.truncate(keep);
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        let lead = c.iter().position(|&x| x != 0);
        match lead {
            None => Laurent { field, v0: prec.unwrap_or(0), c: Vec::new(), prec },
            Some(s) => {
                c.drain(..s);
                Laurent { field, v0: v0 + s as i64, c, prec }
            }
        }
    }

    pub fn from_elems(field: Field, v0: i64, c: &[GfElem], prec: Option<i64>) -> Result<Laurent> {
        let mut raw = Vec::with_capacity(c.len());
        for e in c {
            if e.field() != field {
                return Err(Error::FieldMismatch);
            }
            raw.push(e.rep());
        }
        Ok(Laurent::from_raw(field, v0, raw, prec))
    }

    pub fn zero(field: Field) -> Laurent {
        Laurent { field, v0: 0, c: Vec::new(), prec: None }
    }

    /// `O(π^k)`.
    pub fn zero_to(field: Field, k: i64) -> Laurent {
        Laurent { field, v0: k, c: Vec::new(), prec: Some(k) }
    }

    pub fn one(field: Field) -> Laurent {
        Laurent { field, v0: 0, c: vec![1], prec: None }
    }

    pub fn constant(e: GfElem) -> Laurent {
        Laurent::from_raw(e.field(), 0, vec![e.rep()], None)
    }

    /// `c π^j` for a raw coefficient.
    pub fn monomial(field: Field, c: u8, j: i64) -> Laurent {
        Laurent::from_raw(field, j, vec![c], None)
    }

    /// `π^j`.
    pub fn pi_pow(field: Field, j: i64) -> Laurent {
        Laurent::monomial(field, 1, j)
    }

    /// `T^j = π^{-j}`.
    pub fn t_pow(field: Field, j: i64) -> Laurent {
        Laurent::monomial(field, 1, -j)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Lowest stored exponent; for a zero to precision k this is k.
    pub fn v0(&self) -> i64 {
        self.v0
    }

    /// Raw coefficients for exponents `v0 ..`.
    pub fn raw_coeffs(&self) -> &[u8] {
        &self.c
    }

    /// Highest exponent with a nonzero stored coefficient (`v0 - 1` if none).
    pub fn max_exponent(&self) -> i64 {
        self.v0 + self.c.len() as i64 - 1
    }

    /// Raw coefficient of π^j; zero outside the stored range.
    pub fn coeff(&self, j: i64) -> u8 {
        if j < self.v0 {
            return 0;
        }
        self.c.get((j - self.v0) as usize).copied().unwrap_or(0)
    }

    pub fn coeff_elem(&self, j: i64) -> GfElem {
        self.field.elem(self.coeff(j) as u64).expect("stored coefficient in range")
    }

    /// `None` for exact elements, `Some(k)` when known modulo π^k.
    pub fn precision(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Exact zero.
    pub fn is_zero(&self) -> bool {
        self.c.is_empty() && self.prec.is_none()
    }

    /// Zero to the known precision, but not exactly zero.
    pub fn is_zero_to_precision(&self) -> bool {
        self.c.is_empty() && self.prec.is_some()
    }

    /// Has a nonzero known coefficient, so valuation and absolute value are
    /// determinate.
    pub fn is_nonzero(&self) -> bool {
        !self.c.is_empty()
    }

    pub fn is_monomial(&self) -> bool {
        self.c.len() == 1
    }

    pub fn valuation(&self) -> Valuation {
        if !self.c.is_empty() {
            Valuation::Finite(self.v0)
        } else {
            match self.prec {
                None => Valuation::Infinity,
                Some(k) => Valuation::AtLeast(k),
            }
        }
    }

    /// A lower bound for the valuation, `None` for exact zero.
    pub fn valuation_lower_bound(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.v0)
        }
    }

    /// `|x| = q^{-ν(x)}`; errors on a zero to precision.
    pub fn abs(&self) -> Result<AbsValue> {
        match self.valuation() {
            Valuation::Finite(v) => Ok(AbsValue::Pow(-v)),
            Valuation::Infinity => Ok(AbsValue::Zero),
            Valuation::AtLeast(k) => Err(Error::Indeterminate(k)),
        }
    }

    /// Upper-bound mode: a zero to precision k is reported as `q^{-k}`.
    pub fn abs_upper(&self) -> AbsValue {
        match self.valuation() {
            Valuation::Finite(v) | Valuation::AtLeast(v) => AbsValue::Pow(-v),
            Valuation::Infinity => AbsValue::Zero,
        }
    }

    /// Forgets everything at and beyond π^k.
    pub fn truncate(&self, k: i64) -> Laurent {
        let p = min_prec(self.prec, Some(k));
        Laurent::from_raw(self.field, self.v0, self.c.clone(), p)
    }

    /// Drops all terms of exponent >= k and declares the result exact.
    pub fn truncate_exact(&self, k: i64) -> Laurent {
        let keep = (k - self.v0).clamp(0, self.c.len() as i64) as usize;
        Laurent::from_raw(self.field, self.v0, self.c[..keep].to_vec(), None)
    }

    fn same_field(&self, other: &Laurent) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn checked_add(&self, other: &Laurent) -> Result<Laurent> {
        self.same_field(other)?;
        let prec = min_prec(self.prec, other.prec);
        let f = self.field;
        let (lo, hi) = match (self.c.is_empty(), other.c.is_empty()) {
            (true, true) => return Ok(Laurent::from_raw(f, 0, Vec::new(), prec)),
            (false, true) => (self.v0, self.max_exponent() + 1),
            (true, false) => (other.v0, other.max_exponent() + 1),
            (false, false) => (
                self.v0.min(other.v0),
                (self.max_exponent() + 1).max(other.max_exponent() + 1),
            ),
        };
        let hi = prec.map_or(hi, |p| hi.min(p));
        if hi <= lo {
            return Ok(Laurent::from_raw(f, lo, Vec::new(), prec));
        }
        let v = (lo..hi).map(|j| f.add_raw(self.coeff(j), other.coeff(j))).collect();
        Ok(Laurent::from_raw(f, lo, v, prec))
    }

    pub fn neg(&self) -> Laurent {
        let f = self.field;
        Laurent {
            field: f,
            v0: self.v0,
            c: self.c.iter().map(|&a| f.neg_raw(a)).collect(),
            prec: self.prec,
        }
    }

    pub fn checked_sub(&self, other: &Laurent) -> Result<Laurent> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Laurent) -> Result<Laurent> {
        self.same_field(other)?;
        let f = self.field;
        if self.is_zero() || other.is_zero() {
            return Ok(Laurent::zero(f));
        }
        let (lx, ly) = (self.v0, other.v0);
        let prec = match (self.prec, other.prec) {
            (None, None) => None,
            (Some(a), None) => Some(ly + a),
            (None, Some(b)) => Some(lx + b),
            (Some(a), Some(b)) => Some((lx + b).min(ly + a)),
        };
        let v0 = lx + ly;
        if self.c.is_empty() || other.c.is_empty() {
            return Ok(Laurent::from_raw(f, v0, Vec::new(), prec));
        }
        let (nx, ny) = (self.c.len(), other.c.len());
        let full = nx + ny - 1;
        let lim = prec.map_or(full, |p| ((p - v0).max(0) as usize).min(full));
        let mut v = vec![0u8; lim];
        for (i, &a) in self.c.iter().enumerate().take(lim) {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate().take(lim - i) {
                v[i + j] = f.add_raw(v[i + j], f.mul_raw(a, b));
            }
        }
        Ok(Laurent::from_raw(f, v0, v, prec))
    }

    /// Multiplication by a field scalar given as a raw index.
    pub fn scale_raw(&self, c: u8) -> Laurent {
        if c == 0 {
            return Laurent::zero(self.field);
        }
        let f = self.field;
        Laurent {
            field: f,
            v0: self.v0,
            c: self.c.iter().map(|&a| f.mul_raw(a, c)).collect(),
            prec: self.prec,
        }
    }

    pub fn scale(&self, c: GfElem) -> Result<Laurent> {
        if c.field() != self.field {
            return Err(Error::FieldMismatch);
        }
        Ok(self.scale_raw(c.rep()))
    }

    /// Multiplication by π^j.
    pub fn shift(&self, j: i64) -> Laurent {
        Laurent {
            field: self.field,
            v0: self.v0 + j,
            c: self.c.clone(),
            prec: self.prec.map(|k| k + j),
        }
    }

    /// Inverse known to absolute precision `target`, or less if the input's
    /// own precision does not support it (`k - 2ν(x)` for x known mod π^k).
    pub fn inv_to(&self, target: i64) -> Result<Laurent> {
        let v = match self.valuation() {
            Valuation::Finite(v) => v,
            Valuation::Infinity => return Err(Error::DivisionByZero),
            Valuation::AtLeast(k) => return Err(Error::Indeterminate(k)),
        };
        let f = self.field;
        if self.prec.is_none() && self.c.len() == 1 {
            return Ok(Laurent::monomial(f, f.inv_raw(self.c[0]), -v));
        }
        let goal = match self.prec {
            None => target,
            Some(k) => target.min(k - 2 * v),
        };
        let n_terms = goal + v;
        if n_terms <= 0 {
            return Ok(Laurent::zero_to(f, goal));
        }
        let n = n_terms as usize;
        let a = &self.c;
        let b0 = f.inv_raw(a[0]);
        let mut b = vec![0u8; n];
        b[0] = b0;
        for j in 1..n {
            let mut s = 0u8;
            for i in 1..=j.min(a.len() - 1) {
                s = f.add_raw(s, f.mul_raw(a[i], b[j - i]));
            }
            b[j] = f.neg_raw(f.mul_raw(b0, s));
        }
        Ok(Laurent::from_raw(f, -v, b, Some(goal)))
    }

    /// Exact for monomials, otherwise to the best available precision
    /// ([`DEFAULT_PRECISION`] relative for exact inputs).
    pub fn inv(&self) -> Result<Laurent> {
        match (self.valuation(), self.prec) {
            (Valuation::Finite(v), None) => self.inv_to(-v + DEFAULT_PRECISION),
            (Valuation::Finite(v), Some(k)) => self.inv_to(k - 2 * v),
            _ => self.inv_to(0),
        }
    }

    pub fn checked_div(&self, other: &Laurent) -> Result<Laurent> {
        self.checked_mul(&other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Result<Laurent> {
        let mut acc = Laurent::one(self.field);
        for _ in 0..e {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    /// Terms with exponent <= 0, as a polynomial in T.
    pub fn polynomial_part(&self) -> Result<Poly> {
        if let Some(k) = self.prec {
            if k < 1 {
                return Err(Error::InsufficientPrecision { required: 1, available: k });
            }
        }
        let f = self.field;
        if self.c.is_empty() || self.v0 > 0 {
            return Ok(Poly::zero(f));
        }
        let deg = (-self.v0) as usize;
        Ok(Poly::new(f, (0..=deg).map(|j| self.coeff(-(j as i64))).collect()))
    }

    /// Terms with exponent >= 1, keeping the precision.
    pub fn fractional_part(&self) -> Laurent {
        let f = self.field;
        if self.v0 >= 1 {
            return self.clone();
        }
        let start = (1 - self.v0) as usize;
        let c = if start < self.c.len() { self.c[start..].to_vec() } else { Vec::new() };
        Laurent::from_raw(f, 1, c, self.prec)
    }

    /// Parses the text form produced by `Display`. Accepts `π`, `pi` or `T`
    /// (with `T^j = π^{-j}`), integer or tuple coefficients and a trailing
    /// `O(π^k)` term.
    pub fn parse(field: Field, s: &str) -> Result<Laurent> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty Laurent expression".into()));
        }
        let mut acc = Laurent::zero(field);
        for (negate, term) in split_terms(&s)? {
            let t = parse_term(field, term)?;
            let t = if negate { t.neg() } else { t };
            acc = acc.checked_add(&t)?;
        }
        Ok(acc)
    }
}

fn split_terms(s: &str) -> Result<Vec<(bool, &str)>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    let mut negate = false;
    let mut i = 0usize;
    while i < bytes.len() {
        let ch = bytes[i];
        match ch {
            b'(' | b'{' => depth += 1,
            b')' | b'}' => depth -= 1,
            b'+' | b'-' if depth == 0 => {
                let prev = if i == 0 { None } else { Some(bytes[i - 1]) };
                if ch == b'-' && prev == Some(b'^') {
                    i += 1;
                    continue;
                }
                if i > start {
                    out.push((negate, &s[start..i]));
                } else if i != 0 && ch == b'+' {
                    return Err(Error::Parse(format!("empty term in {s:?}")));
                }
                negate = ch == b'-';
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced brackets in {s:?}")));
    }
    if start >= s.len() {
        return Err(Error::Parse(format!("trailing operator in {s:?}")));
    }
    out.push((negate, &s[start..]));
    Ok(out)
}

fn parse_exponent(s: &str) -> Result<i64> {
    let inner = s
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .or_else(|| s.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
        .unwrap_or(s);
    inner.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent {s:?}")))
}

/// Splits `base^exp` where base is π, pi or T; returns the π-exponent.
fn parse_power(s: &str) -> Result<i64> {
    let (base, rest) = if let Some(r) = s.strip_prefix('π') {
        (1i64, r)
    } else if let Some(r) = s.strip_prefix("pi") {
        (1, r)
    } else if let Some(r) = s.strip_prefix('T') {
        (-1, r)
    } else {
        return Err(Error::Parse(format!("expected π, pi or T in {s:?}")));
    };
    let e = if rest.is_empty() {
        1
    } else {
        let r = rest
            .strip_prefix('^')
            .ok_or_else(|| Error::Parse(format!("unexpected {rest:?}")))?;
        parse_exponent(r)?
    };
    Ok(base * e)
}

fn parse_coefficient(field: Field, s: &str) -> Result<GfElem> {
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let digits = inner
            .split(',')
            .map(|d| d.parse::<u32>().map_err(|_| Error::Parse(format!("bad coefficient {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        return field.from_coeffs(&digits);
    }
    let n = s.parse::<i64>().map_err(|_| Error::Parse(format!("bad coefficient {s:?}")))?;
    Ok(field.from_int(n))
}

fn parse_term(field: Field, term: &str) -> Result<Laurent> {
    if let Some(inner) = term.strip_prefix("O(").and_then(|r| r.strip_suffix(')')) {
        let k = parse_power(inner)?;
        return Ok(Laurent::zero_to(field, k));
    }
    let (coef, power) = match term.find('*') {
        Some(pos) => (Some(&term[..pos]), Some(&term[pos + 1..])),
        None => {
            if term.starts_with('π') || term.starts_with("pi") || term.starts_with('T') {
                (None, Some(term))
            } else {
                (Some(term), None)
            }
        }
    };
    let c = match coef {
        Some(c) => parse_coefficient(field, c)?,
        None => field.one(),
    };
    let j = match power {
        Some(p) => parse_power(p)?,
        None => 0,
    };
    Ok(Laurent::monomial(field, c.rep(), j))
}

/// Series expansion of `num/den` at T = ∞, correct to precision k. Exact
/// when the quotient is a Laurent polynomial in π.
pub fn lift_rational(num: &Poly, den: &Poly, k: i64) -> Result<Laurent> {
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if num.field() != den.field() {
        return Err(Error::FieldMismatch);
    }
    if num.is_zero() {
        return Ok(Laurent::zero(num.field()));
    }
    let (quot, rem) = num.divrem(den)?;
    if rem.is_zero() {
        return Ok(quot.to_laurent());
    }
    let nl = num.to_laurent();
    let dl = den.to_laurent();
    if den.is_monomial() {
        return nl.checked_mul(&dl.inv()?);
    }
    let inv = dl.inv_to(k - nl.v0())?;
    Ok(nl.checked_mul(&inv)?.truncate(k))
}

impl fmt::Debug for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.c.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let e = self.field.elem(c as u64).map_err(|_| fmt::Error)?;
            write!(f, "{e}*π^{}", self.v0 + i as i64)?;
        }
        match self.prec {
            Some(k) => {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "O(π^{k})")
            }
            None if first => write!(f, "0"),
            None => Ok(()),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $checked:ident, $msg:expr) => {
        impl std::ops::$tr<&Laurent> for &Laurent {
            type Output = Laurent;
            fn $m(self, rhs: &Laurent) -> Laurent {
                self.$checked(rhs).expect($msg)
            }
        }
        impl std::ops::$tr<Laurent> for Laurent {
            type Output = Laurent;
            fn $m(self, rhs: Laurent) -> Laurent {
                self.$checked(&rhs).expect($msg)
            }
        }
    };
}

// Operator forms panic on mixed fields; the checked methods return errors.
forward_binop!(Add, add, checked_add, "mixed-field addition");
forward_binop!(Sub, sub, checked_sub, "mixed-field subtraction");
forward_binop!(Mul, mul, checked_mul, "mixed-field multiplication");

impl std::ops::Neg for &Laurent {
    type Output = Laurent;
    fn neg(self) -> Laurent {
        Laurent::neg(self)
    }
}
