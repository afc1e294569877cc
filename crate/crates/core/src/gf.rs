//! Finite fields F_q, q = p^e, with table-driven arithmetic.
//!
//! A [`Field`] is an interned, immutable handle: constructing the same
//! [`FieldSpec`] twice yields the same handle, so field identity is a pointer
//! comparison and handles are `Copy`. Elements are stored as their index in
//! `0..q`, the base-p packing of the coefficient vector `c_0 + c_1 x + ...`.

use std::fmt;
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Default upper bound on q for enumeration-driven code.
pub const DEFAULT_FIELD_CAP: u64 = 16;

/// Hard representation limit: elements are packed into a `u8`.
pub const MAX_FIELD_SIZE: u64 = 256;

/// Characteristic, extension degree and (for e > 1) the defining modulus.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub p: u32,
    pub e: u32,
    /// Coefficients of the monic modulus, low degree first, length e + 1.
    /// Empty for prime fields.
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn prime(p: u32) -> Self {
        FieldSpec { p, e: 1, modulus: Vec::new() }
    }

    pub fn extension(p: u32, modulus: Vec<u32>) -> Self {
        let e = modulus.len().saturating_sub(1) as u32;
        FieldSpec { p, e, modulus }
    }

    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.e)
    }

    /// Checks primality of p and irreducibility of the modulus.
    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::InvalidField(format!("{} is not prime", self.p)));
        }
        if self.e == 0 {
            return Err(Error::InvalidField("extension degree must be >= 1".into()));
        }
        if self.e == 1 {
            return Ok(());
        }
        if self.modulus.len() != self.e as usize + 1 {
            return Err(Error::InvalidField(format!(
                "modulus must have {} coefficients",
                self.e + 1
            )));
        }
        if self.modulus.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidField("modulus coefficients must be reduced mod p".into()));
        }
        if self.modulus[self.e as usize] != 1 {
            return Err(Error::InvalidField("modulus must be monic".into()));
        }
        if !is_irreducible(self.p, &self.modulus) {
            return Err(Error::InvalidField("modulus is reducible".into()));
        }
        Ok(())
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e == 1 {
            write!(f, "F_{}", self.p)
        } else {
            write!(f, "F_{}^{} mod {:?}", self.p, self.e, self.modulus)
        }
    }
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Remainder of `a` modulo the monic `m` over F_p; both low-degree first.
fn poly_rem_mod_p(p: u32, a: &[u32], m: &[u32]) -> Vec<u32> {
    let mut r: Vec<u32> = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (j, &mc) in m.iter().enumerate() {
                let idx = shift + j;
                r[idx] = (r[idx] + p - (lead * mc) % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Trial division by every monic polynomial of degree 1..=e/2.
fn is_irreducible(p: u32, modulus: &[u32]) -> bool {
    let e = modulus.len() - 1;
    for deg in 1..=e / 2 {
        let count = (p as u64).pow(deg as u32);
        for idx in 0..count {
            let mut div = Vec::with_capacity(deg + 1);
            let mut x = idx;
            for _ in 0..deg {
                div.push((x % p as u64) as u32);
                x /= p as u64;
            }
            div.push(1);
            if poly_rem_mod_p(p, modulus, &div).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

pub(crate) struct FieldData {
    spec: FieldSpec,
    q: usize,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

static REGISTRY: Mutex<Vec<&'static FieldData>> = Mutex::new(Vec::new());

/// Interned handle to a finite field's arithmetic tables.
#[derive(Clone, Copy)]
pub struct Field(&'static FieldData);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({})", self.0.spec)
    }
}

impl Field {
    /// Field with the default cap of q <= 16.
    pub fn new(spec: &FieldSpec) -> Result<Field> {
        Field::with_cap(spec, DEFAULT_FIELD_CAP)
    }

    pub fn prime(p: u32) -> Result<Field> {
        Field::new(&FieldSpec::prime(p))
    }

    /// Parses `q = p^e` notation: a bare prime, or `p^e` together with a
    /// modulus for e > 1.
    pub fn from_q(q: u64, modulus: Option<Vec<u32>>) -> Result<Field> {
        let (p, e) = prime_power(q)
            .ok_or_else(|| Error::InvalidField(format!("{q} is not a prime power")))?;
        let spec = if e == 1 {
            FieldSpec::prime(p)
        } else {
            let m = modulus.ok_or_else(|| {
                Error::InvalidField(format!("q = {p}^{e} needs an explicit modulus"))
            })?;
            FieldSpec::extension(p, m)
        };
        if spec.e != e {
            return Err(Error::InvalidField("modulus degree does not match q".into()));
        }
        Field::new(&spec)
    }

    pub fn with_cap(spec: &FieldSpec, cap: u64) -> Result<Field> {
        spec.validate()?;
        let q = spec.q();
        let cap = cap.min(MAX_FIELD_SIZE);
        if q > cap {
            return Err(Error::FieldTooLarge { q, cap });
        }
        let canonical = if spec.e == 1 { FieldSpec::prime(spec.p) } else { spec.clone() };
        let mut reg = REGISTRY.lock().expect("field registry poisoned");
        if let Some(found) = reg.iter().find(|d| d.spec == canonical) {
            return Ok(Field(found));
        }
        let data: &'static FieldData = Box::leak(Box::new(build_tables(canonical)));
        reg.push(data);
        Ok(Field(data))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }

    pub fn q(&self) -> usize {
        self.0.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.spec.p
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: u8, b: u8) -> u8 {
        self.0.add[a as usize * self.0.q + b as usize]
    }
    #[inline]
    pub(crate) fn mul_raw(&self, a: u8, b: u8) -> u8 {
        self.0.mul[a as usize * self.0.q + b as usize]
    }
    #[inline]
    pub(crate) fn neg_raw(&self, a: u8) -> u8 {
        self.0.neg[a as usize]
    }
    #[inline]
    pub(crate) fn sub_raw(&self, a: u8, b: u8) -> u8 {
        self.add_raw(a, self.neg_raw(b))
    }
    /// Inverse of a nonzero raw element; 0 maps to 0.
    #[inline]
    pub(crate) fn inv_raw(&self, a: u8) -> u8 {
        self.0.inv[a as usize]
    }

    pub fn zero(&self) -> GfElem {
        GfElem { field: *self, rep: 0 }
    }

    pub fn one(&self) -> GfElem {
        GfElem { field: *self, rep: 1 }
    }

    /// Element with the given packed index in `0..q`.
    pub fn elem(&self, rep: u64) -> Result<GfElem> {
        if rep >= self.0.q as u64 {
            return Err(Error::OutOfRange(format!("element index {rep} >= q = {}", self.0.q)));
        }
        Ok(GfElem { field: *self, rep: rep as u8 })
    }

    /// Element from its coefficient vector over F_p (low degree first).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<GfElem> {
        let spec = &self.0.spec;
        if coeffs.len() > spec.e as usize {
            return Err(Error::OutOfRange("too many coefficients".into()));
        }
        let mut rep = 0u64;
        for &c in coeffs.iter().rev() {
            rep = rep * spec.p as u64 + (c % spec.p) as u64;
        }
        self.elem(rep)
    }

    /// The image of an integer under Z -> F_p -> F_q.
    pub fn from_int(&self, n: i64) -> GfElem {
        let p = self.0.spec.p as i64;
        GfElem { field: *self, rep: n.rem_euclid(p) as u8 }
    }

    /// All q elements in packed-index order.
    pub fn elements(&self) -> Vec<GfElem> {
        (0..self.0.q).map(|r| GfElem { field: *self, rep: r as u8 }).collect()
    }
}

/// Enumerates F_q, refusing fields larger than `cap`.
pub fn enumerate_field(spec: &FieldSpec, cap: u64) -> Result<Vec<GfElem>> {
    let q = spec.q();
    if q > cap {
        return Err(Error::FieldTooLarge { q, cap });
    }
    Ok(Field::with_cap(spec, cap)?.elements())
}

/// Decomposes q = p^e.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2u64;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        p = q;
    }
    let mut e = 0;
    let mut r = q;
    while r % p == 0 {
        r /= p;
        e += 1;
    }
    (r == 1).then_some((p as u32, e))
}

fn build_tables(spec: FieldSpec) -> FieldData {
    let p = spec.p as usize;
    let e = spec.e as usize;
    let q = p.pow(spec.e);
    let digits = |mut x: usize| -> Vec<u32> {
        let mut v = vec![0u32; e];
        for d in v.iter_mut() {
            *d = (x % p) as u32;
            x /= p;
        }
        v
    };
    let pack = |v: &[u32]| -> usize { v.iter().rev().fold(0usize, |acc, &c| acc * p + c as usize) };

    let mut add = vec![0u8; q * q];
    let mut mul = vec![0u8; q * q];
    let mut neg = vec![0u8; q];
    for a in 0..q {
        let da = digits(a);
        let nd: Vec<u32> = da.iter().map(|&c| (p as u32 - c) % p as u32).collect();
        neg[a] = pack(&nd) as u8;
        for b in 0..q {
            let db = digits(b);
            let s: Vec<u32> = da.iter().zip(&db).map(|(&x, &y)| (x + y) % p as u32).collect();
            add[a * q + b] = pack(&s) as u8;
            let mut prod = vec![0u32; 2 * e - 1];
            for (i, &x) in da.iter().enumerate() {
                for (j, &y) in db.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p as u32;
                }
            }
            let red = if e == 1 { prod } else { poly_rem_mod_p(spec.p, &prod, &spec.modulus) };
            let mut r = red;
            r.resize(e, 0);
            mul[a * q + b] = pack(&r) as u8;
        }
    }
    let mut inv = vec![0u8; q];
    for a in 1..q {
        inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).expect("field has no zero divisors") as u8;
    }
    FieldData { spec, q, add, mul, neg, inv }
}

/// An element of F_q together with its field.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GfElem {
    field: Field,
    rep: u8,
}

impl GfElem {
    pub fn field(&self) -> Field {
        self.field
    }

    /// Packed index in `0..q`.
    pub fn rep(&self) -> u8 {
        self.rep
    }

    pub fn is_zero(&self) -> bool {
        self.rep == 0
    }

    /// Coefficient vector over F_p, low degree first, length e.
    pub fn coeffs(&self) -> Vec<u32> {
        let spec = self.field.spec();
        let mut x = self.rep as u32;
        (0..spec.e)
            .map(|_| {
                let c = x % spec.p;
                x /= spec.p;
                c
            })
            .collect()
    }

    fn same_field(&self, other: &GfElem) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn checked_add(&self, other: &GfElem) -> Result<GfElem> {
        self.same_field(other)?;
        Ok(GfElem { field: self.field, rep: self.field.add_raw(self.rep, other.rep) })
    }

    pub fn checked_sub(&self, other: &GfElem) -> Result<GfElem> {
        self.same_field(other)?;
        Ok(GfElem { field: self.field, rep: self.field.sub_raw(self.rep, other.rep) })
    }

    pub fn checked_mul(&self, other: &GfElem) -> Result<GfElem> {
        self.same_field(other)?;
        Ok(GfElem { field: self.field, rep: self.field.mul_raw(self.rep, other.rep) })
    }

    pub fn inv(&self) -> Result<GfElem> {
        if self.rep == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(GfElem { field: self.field, rep: self.field.inv_raw(self.rep) })
    }

    pub fn pow(&self, mut exp: u64) -> GfElem {
        let f = self.field;
        let mut base = self.rep;
        let mut acc = 1u8;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = f.mul_raw(acc, base);
            }
            base = f.mul_raw(base, base);
            exp >>= 1;
        }
        GfElem { field: f, rep: acc }
    }
}

impl fmt::Debug for GfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Prime-field elements print as integers, extension elements as their
/// coefficient tuple `(c0,c1,...)`.
impl fmt::Display for GfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.spec().e == 1 {
            write!(f, "{}", self.rep)
        } else {
            let c: Vec<String> = self.coeffs().iter().map(|c| c.to_string()).collect();
            write!(f, "({})", c.join(","))
        }
    }
}

// Operator forms panic on mixed fields; use the `checked_*` methods to get
// an error instead.
impl std::ops::Add for GfElem {
    type Output = GfElem;
    fn add(self, rhs: GfElem) -> GfElem {
        self.checked_add(&rhs).expect("mixed-field addition")
    }
}
impl std::ops::Sub for GfElem {
    type Output = GfElem;
    fn sub(self, rhs: GfElem) -> GfElem {
        self.checked_sub(&rhs).expect("mixed-field subtraction")
    }
}
impl std::ops::Mul for GfElem {
    type Output = GfElem;
    fn mul(self, rhs: GfElem) -> GfElem {
        self.checked_mul(&rhs).expect("mixed-field multiplication")
    }
}
impl std::ops::Neg for GfElem {
    type Output = GfElem;
    fn neg(self) -> GfElem {
        GfElem { field: self.field, rep: self.field.neg_raw(self.rep) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4() -> Field {
        Field::new(&FieldSpec::extension(2, vec![1, 1, 1])).unwrap()
    }

    #[test]
    fn char_two_one_plus_one() {
        let f = Field::prime(2).unwrap();
        assert!((f.one() + f.one()).is_zero());
    }

    #[test]
    fn inverse_of_two_in_f3() {
        let f = Field::prime(3).unwrap();
        let two = f.from_int(2);
        // exhaustive multiplication table oracle
        let inv = f.elements().into_iter().find(|b| (two * *b) == f.one()).unwrap();
        assert_eq!(inv, two);
        assert_eq!(two.inv().unwrap(), inv);
    }

    #[test]
    fn f4_x_squared_is_x_plus_one() {
        let f = f4();
        let x = f.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(x * x, f.from_coeffs(&[1, 1]).unwrap());
        assert_eq!((x * x).to_string(), "(1,1)");
    }

    #[test]
    fn zero_has_no_inverse() {
        let f = Field::prime(5).unwrap();
        assert_eq!(f.zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn mixed_fields_are_rejected() {
        let a = Field::prime(2).unwrap().one();
        let b = Field::prime(3).unwrap().one();
        assert_eq!(a.checked_add(&b), Err(Error::FieldMismatch));
        assert_eq!(a.checked_mul(&b), Err(Error::FieldMismatch));
    }

    #[test]
    fn enumeration() {
        let e2 = enumerate_field(&FieldSpec::prime(2), 16).unwrap();
        assert_eq!(e2.iter().map(|x| x.rep()).collect::<Vec<_>>(), vec![0, 1]);
        let e3 = enumerate_field(&FieldSpec::prime(3), 16).unwrap();
        assert_eq!(e3.len(), 3);
        let e4 = enumerate_field(&FieldSpec::extension(2, vec![1, 1, 1]), 16).unwrap();
        assert_eq!(e4.len(), 4);
        for a in e4.iter().filter(|a| !a.is_zero()) {
            assert!(e4.iter().any(|b| *a * *b == a.field().one()));
        }
        assert!(matches!(
            enumerate_field(&FieldSpec::prime(17), 16),
            Err(Error::FieldTooLarge { q: 17, cap: 16 })
        ));
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 1 = (x + 1)^2 over F_2
        assert!(Field::new(&FieldSpec::extension(2, vec![1, 0, 1])).is_err());
        assert!(Field::prime(4).is_err());
        assert!(Field::from_q(9, Some(vec![1, 0, 1])).is_ok());
        assert!(Field::from_q(8, None).is_err());
    }

    #[test]
    fn fermat_for_all_small_fields() {
        let fields = [
            Field::prime(2).unwrap(),
            Field::prime(3).unwrap(),
            f4(),
            Field::prime(5).unwrap(),
            Field::prime(7).unwrap(),
            Field::from_q(8, Some(vec![1, 1, 0, 1])).unwrap(),
            Field::from_q(9, Some(vec![1, 0, 1])).unwrap(),
            Field::prime(11).unwrap(),
            Field::prime(13).unwrap(),
            Field::from_q(16, Some(vec![1, 1, 0, 0, 1])).unwrap(),
        ];
        for f in fields {
            let q = f.q() as u64;
            for a in f.elements().into_iter().filter(|a| !a.is_zero()) {
                assert_eq!(a.pow(q - 1), f.one(), "{f:?}");
                assert_eq!(a * a.inv().unwrap(), f.one());
            }
        }
    }

    #[test]
    fn interning_gives_equal_handles() {
        let a = Field::prime(7).unwrap();
        let b = Field::new(&FieldSpec::prime(7)).unwrap();
        assert_eq!(a, b);
    }
}
