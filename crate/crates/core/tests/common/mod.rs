#![allow(dead_code)]

use fqdyn::{Field, KMatrix, Laurent, PolyLattice, WedgeVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn f2() -> Field {
    Field::prime(2).unwrap()
}

/// Exact element with random coefficients at exponents lo..=hi.
pub fn laurent_poly(f: Field, lo: i64, hi: i64, r: &mut impl Rng) -> Laurent {
    let q = f.q() as u8;
    let c = (lo..=hi).map(|_| r.random_range(0..q)).collect();
    Laurent::from_raw(f, lo, c, None)
}

/// Element known to precision k with coefficients from exponent lo.
pub fn laurent_inexact(f: Field, lo: i64, k: i64, r: &mut impl Rng) -> Laurent {
    let q = f.q() as u8;
    let c = (lo..k).map(|_| r.random_range(0..q)).collect();
    Laurent::from_raw(f, lo, c, Some(k))
}

/// x - y is exactly zero, or zero to the available precision.
pub fn same(x: &Laurent, y: &Laurent) -> bool {
    let d = x.checked_sub(y).unwrap();
    if d.is_exact() {
        d.is_zero()
    } else {
        d.is_zero_to_precision()
    }
}

pub fn same_wedge(a: &WedgeVector, b: &WedgeVector) -> bool {
    a.degree() == b.degree() && a.coords().iter().zip(b.coords()).all(|(x, y)| same(x, y))
}

/// Product of `steps` elementary matrices I + c·E_{rs} with c exact and
/// supported on exponents lo..=hi; det = 1 exactly.
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
        g = g.mul(&e).unwrap();
    }
    g
}

/// Random element of GL_d(O) with exact polynomial entries in π.
pub fn gl_o(f: Field, d: usize, r: &mut impl Rng) -> KMatrix {
    loop {
        let g = KMatrix::from_fn(f, d, d, |_, _| laurent_poly(f, 0, 3, r));
        if g.det().unwrap().coeff(0) != 0 {
            return g;
        }
    }
}

/// Nonsingular lattice with entries polynomials in T of degree <= max_deg.
pub fn random_lattice(f: Field, d: usize, max_deg: i64, r: &mut impl Rng) -> PolyLattice {
    loop {
        let b = KMatrix::from_fn(f, d, d, |_, _| laurent_poly(f, -max_deg, 0, r));
        if let Ok(x) = PolyLattice::new(b) {
            return x;
        }
    }
}

/// Unimodular lattice g·R^d with g a product of elementary matrices.
pub fn random_unimodular(f: Field, d: usize, r: &mut impl Rng) -> PolyLattice {
    let g = elementary_sl(f, d, 2 * d, -2, 2, r);
    PolyLattice::new(g).unwrap()
}

pub fn random_wedge(f: Field, d: usize, i: usize, r: &mut impl Rng) -> WedgeVector {
    let n = fqdyn::exterior::binomial(d, i);
    WedgeVector::new(f, d, i, (0..n).map(|_| laurent_poly(f, -2, 3, r)).collect()).unwrap()
}

pub fn random_decomposable(f: Field, d: usize, i: usize, r: &mut impl Rng) -> WedgeVector {
    let cols: Vec<Vec<Laurent>> = (0..i).map(|_| (0..d).map(|_| laurent_poly(f, -2, 3, r)).collect()).collect();
    WedgeVector::wedge(f, &cols).unwrap()
}

/// F_q for q <= 16 with a fixed irreducible modulus when q is not prime.
pub fn field_q(q: u64) -> Field {
    let modulus = match q {
        4 => Some(vec![1, 1, 1]),
        8 => Some(vec![1, 1, 0, 1]),
        9 => Some(vec![1, 0, 1]),
        16 => Some(vec![1, 1, 0, 0, 1]),
        _ => None,
    };
    Field::from_q(q, modulus).unwrap()
}
