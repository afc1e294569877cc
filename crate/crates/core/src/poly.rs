//! Polynomials in T over F_q, the ring R = F_q[T].

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{Field, GfElem};
use crate::laurent::Laurent;

/// A polynomial `c_0 + c_1 T + ...`, coefficients stored as raw field
/// indices, low degree first, with no trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: Field,
    c: Vec<u8>,
}

impl Poly {
    pub fn new(field: Field, mut c: Vec<u8>) -> Poly {
        while c.last() == Some(&0) {
            c.pop();
        }
        Poly { field, c }
    }

    pub fn from_elems(field: Field, c: &[GfElem]) -> Result<Poly> {
        let mut raw = Vec::with_capacity(c.len());
        for e in c {
            if e.field() != field {
                return Err(Error::FieldMismatch);
            }
            raw.push(e.rep());
        }
        Ok(Poly::new(field, raw))
    }

    pub fn zero(field: Field) -> Poly {
        Poly { field, c: Vec::new() }
    }

    pub fn one(field: Field) -> Poly {
        Poly { field, c: vec![1] }
    }

    /// `c * T^k`.
    pub fn monomial(field: Field, c: u8, k: usize) -> Poly {
        let mut v = vec![0u8; k + 1];
        v[k] = c;
        Poly::new(field, v)
    }

    /// The variable T.
    pub fn t(field: Field) -> Poly {
        Poly::monomial(field, 1, 1)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> u8 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn is_monomial(&self) -> bool {
        self.c.iter().filter(|&&x| x != 0).count() == 1
    }

    fn check(&self, other: &Poly) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check(other)?;
        let f = self.field;
        let n = self.c.len().max(other.c.len());
        let v = (0..n)
            .map(|i| {
                let a = self.c.get(i).copied().unwrap_or(0);
                let b = other.c.get(i).copied().unwrap_or(0);
                f.add_raw(a, b)
            })
            .collect();
        Ok(Poly::new(f, v))
    }

    pub fn neg(&self) -> Poly {
        let f = self.field;
        Poly { field: f, c: self.c.iter().map(|&a| f.neg_raw(a)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        self.check(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero(self.field));
        }
        let f = self.field;
        let mut v = vec![0u8; self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate() {
                v[i + j] = f.add_raw(v[i + j], f.mul_raw(a, b));
            }
        }
        Ok(Poly::new(f, v))
    }

    pub fn scale(&self, c: u8) -> Poly {
        let f = self.field;
        Poly::new(f, self.c.iter().map(|&a| f.mul_raw(a, c)).collect())
    }

    /// Multiplication by T^k.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![0u8; k];
        v.extend_from_slice(&self.c);
        Poly { field: self.field, c: v }
    }

    /// Euclidean division: `self = q * d + r` with deg r < deg d.
    pub fn divrem(&self, d: &Poly) -> Result<(Poly, Poly)> {
        self.check(d)?;
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let f = self.field;
        let inv_lead = f.inv_raw(d.lead());
        let mut r = self.c.clone();
        if r.len() <= dd {
            return Ok((Poly::zero(f), self.clone()));
        }
        let mut qv = vec![0u8; r.len() - dd];
        for k in (0..qv.len()).rev() {
            let coef = f.mul_raw(r[k + dd], inv_lead);
            qv[k] = coef;
            if coef != 0 {
                for (j, &dc) in d.c.iter().enumerate() {
                    r[k + j] = f.sub_raw(r[k + j], f.mul_raw(coef, dc));
                }
            }
        }
        r.truncate(dd);
        Ok((Poly::new(f, qv), Poly::new(f, r)))
    }

    /// Monic greatest common divisor (zero if both are zero).
    pub fn gcd(&self, other: &Poly) -> Result<Poly> {
        self.check(other)?;
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Ok(a);
        }
        let inv = self.field.inv_raw(a.lead());
        Ok(a.scale(inv))
    }

    /// The image in K_ν: `T^j` becomes `π^{-j}`.
    pub fn to_laurent(&self) -> Laurent {
        match self.degree() {
            None => Laurent::zero(self.field),
            Some(deg) => {
                let coeffs: Vec<u8> = self.c.iter().rev().copied().collect();
                Laurent::from_raw(self.field, -(deg as i64), coeffs, None)
            }
        }
    }

    /// Inverse of [`Poly::to_laurent`]: the element must be exact with no
    /// positive powers of π.
    pub fn from_laurent(x: &Laurent) -> Result<Poly> {
        if !x.is_exact() {
            return Err(Error::NotExact);
        }
        let f = x.field();
        if x.is_zero() {
            return Ok(Poly::zero(f));
        }
        if x.max_exponent() > 0 {
            return Err(Error::OutOfRange("element has positive powers of π".into()));
        }
        let deg = (-x.v0()) as usize;
        let c = (0..=deg).map(|j| x.coeff(-(j as i64))).collect();
        Ok(Poly::new(f, c))
    }

    pub fn norm_exponent(&self) -> Option<i64> {
        self.degree().map(|d| d as i64)
    }

    /// All polynomials of degree at most `max_deg` (including zero), in
    /// packed-index order.
    pub fn enumerate(field: Field, max_deg: usize) -> impl Iterator<Item = Poly> {
        let q = field.q() as u64;
        let len = max_deg + 1;
        let count = q.pow(len as u32);
        (0..count).map(move |mut idx| {
            let mut c = Vec::with_capacity(len);
            for _ in 0..len {
                c.push((idx % q) as u8);
                idx /= q;
            }
            Poly::new(field, c)
        })
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Renders as `c*T^j` terms in increasing degree.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, &c) in self.c.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let e = self.field.elem(c as u64).expect("stored coefficient in range");
            write!(f, "{e}*T^{j}")?;
        }
        Ok(())
    }
}
