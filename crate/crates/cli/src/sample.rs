//! Random exact inputs for the property checks.

use fqdyn::exterior::binomial;
use fqdyn::{Field, KMatrix, Laurent, WedgeVector};
use rand::Rng;

/// Exact element with uniform coefficients at exponents lo..=hi of π.
pub fn laurent_poly(f: Field, lo: i64, hi: i64, r: &mut impl Rng) -> Laurent {
    let q = f.q() as u8;
    let c = (lo..=hi).map(|_| r.random_range(0..q)).collect();
    Laurent::from_raw(f, lo, c, None)
}

/// Product of `steps` elementary matrices I + c·E_{ab}, c exact with
/// support in lo..=hi; the determinant is exactly 1.
pub fn elementary_sl(f: Field, d: usize, steps: usize, lo: i64, hi: i64, r: &mut impl Rng) -> KMatrix {
    let mut g = KMatrix::identity(f, d);
    for _ in 0..steps {
        let a = r.random_range(0..d);
        let mut b = r.random_range(0..d - 1);
        if b >= a {
            b += 1;
        }
        let mut e = KMatrix::identity(f, d);
        e.set(a, b, laurent_poly(f, lo, hi, r));
        g = g.mul(&e).expect("square factors");
    }
    g
}

/// Wedge vector of degree i with exact coordinates supported in -2..=3.
pub fn random_wedge(f: Field, d: usize, i: usize, r: &mut impl Rng) -> WedgeVector {
    let coords = (0..binomial(d, i)).map(|_| laurent_poly(f, -2, 3, r)).collect();
    WedgeVector::new(f, d, i, coords).expect("coordinate count matches")
}

/// x == y exactly, or to the precision both are known to.
pub fn same(x: &Laurent, y: &Laurent) -> bool {
    x.checked_sub(y).is_ok_and(|d| if d.is_exact() { d.is_zero() } else { d.is_zero_to_precision() })
}

pub fn same_wedge(a: &WedgeVector, b: &WedgeVector) -> bool {
    a.degree() == b.degree() && a.coords().iter().zip(b.coords()).all(|(x, y)| same(x, y))
}
