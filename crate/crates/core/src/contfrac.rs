//! Continued fractions over F_q((1/T)) and the test corpus of singular and
//! badly approximable elements.

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::laurent::{lift_rational, Laurent};
use crate::poly::Poly;

/// Convergent p/q of [a_0; a_1, ..., a_k].
pub fn convergent(a0: &Poly, partials: &[Poly]) -> Result<(Poly, Poly)> {
    let f = a0.field();
    let (mut p_prev, mut p) = (Poly::one(f), a0.clone());
    let (mut q_prev, mut q) = (Poly::zero(f), Poly::one(f));
    for a in partials {
        let p_next = a.mul(&p)?.add(&p_prev)?;
        let q_next = a.mul(&q)?.add(&q_prev)?;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    Ok((p, q))
}

/// Value of the finite continued fraction [a_0; a_1, ..., a_k] to precision
/// `prec` (exact when the quotient is a polynomial in π).
pub fn finite_cf(a0: &Poly, partials: &[Poly], prec: i64) -> Result<Laurent> {
    let (p, q) = convergent(a0, partials)?;
    lift_rational(&p, &q, prec)
}

/// Value of [a_0; a_1, a_2, ...] with the partial quotients after a_0
/// repeating `period`, to precision `prec`. Every partial quotient must have
/// positive degree.
pub fn periodic_cf(a0: &Poly, period: &[Poly], prec: i64) -> Result<Laurent> {
    if period.is_empty() || period.iter().any(|a| a.degree().is_none_or(|d| d == 0)) {
        return Err(Error::OutOfRange("partial quotients must have positive degree".into()));
    }
    // |x - p_k/q_k| = 1/(|q_k| |q_{k+1}|) <= q^{-(2 deg q_k + 1)}
    let mut partials = Vec::new();
    let mut deg = 0usize;
    while 2 * deg as i64 + 1 < prec {
        let a = &period[partials.len() % period.len()];
        deg += a.degree().unwrap_or(0);
        partials.push(a.clone());
    }
    Ok(finite_cf(a0, &partials, prec)?.truncate(prec))
}

/// Partial quotients of x: a_0 = polynomial part, then of 1/(fractional
/// part), stopping at an exact zero remainder or when precision runs out.
pub fn cf_expand(x: &Laurent, max_terms: usize) -> Result<Vec<Poly>> {
    let mut out = Vec::new();
    let mut cur = x.clone();
    for _ in 0..max_terms {
        out.push(cur.polynomial_part()?);
        let frac = cur.fractional_part();
        if !frac.is_nonzero() {
            break;
        }
        let inv = frac.inv()?;
        if inv.precision().is_some_and(|k| k < 1) {
            break;
        }
        cur = inv;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub s: Laurent,
    pub singular: bool,
}

/// s = 0, three rationals and three continued fractions whose partial
/// quotients all have degree 1, as 1×1 matrices known to precision `prec`.
pub fn dani_corpus(field: Field, prec: i64) -> Result<Vec<CorpusEntry>> {
    let t = Poly::t(field);
    let one = Poly::one(field);
    let t1 = t.add(&one)?;
    let t2t1 = t.mul(&t)?.add(&t1)?;
    let zero = Poly::zero(field);
    let entry = |name: &str, s: Laurent, singular: bool| CorpusEntry { name: name.into(), s, singular };
    Ok(vec![
        entry("zero", Laurent::zero(field), true),
        entry("T/(T+1)", lift_rational(&t, &t1, prec)?, true),
        entry("1/(T+1)", lift_rational(&one, &t1, prec)?, true),
        entry("(T+1)/(T^2+T+1)", lift_rational(&t1, &t2t1, prec)?, true),
        entry("[T;T,T,...]", periodic_cf(&t, std::slice::from_ref(&t), prec)?, false),
        entry("[0;T+1,T+1,...]", periodic_cf(&zero, std::slice::from_ref(&t1), prec)?, false),
        entry("[0;T,T+1,...]", periodic_cf(&zero, &[t.clone(), t1.clone()], prec)?, false),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_root() {
        let f = Field::prime(2).unwrap();
        let t = Poly::t(f);
        let x = periodic_cf(&t, std::slice::from_ref(&t), 30).unwrap();
        // x^2 = T x + 1
        let lhs = x.checked_mul(&x).unwrap();
        let rhs = x.checked_mul(&t.to_laurent()).unwrap().checked_add(&Laurent::one(f)).unwrap();
        assert!(lhs.checked_sub(&rhs).unwrap().is_zero_to_precision());
        let cf = cf_expand(&x, 8).unwrap();
        assert_eq!(cf.len(), 8);
        assert!(cf.iter().all(|a| *a == t));
    }

    #[test]
    fn rational_expansion_terminates() {
        let f = Field::prime(3).unwrap();
        let t = Poly::t(f);
        let a = vec![Poly::new(f, vec![1, 1]), Poly::new(f, vec![2, 0, 1])];
        let x = finite_cf(&t, &a, 40).unwrap();
        let cf = cf_expand(&x, 10).unwrap();
        assert_eq!(cf[..3], [t, a[0].clone(), a[1].clone()]);
    }
}
