//! F_q[T]-lattices in K_ν^d: reduction, successive minima, covolume,
//! saturated sublattices and the heights α_i.
//!
//! A basis is reduced when the leading-coefficient vectors of its columns
//! are independent over F_q. The leading vector of a column b with
//! ‖b‖ = q^e collects the coefficients of π^{-e} in its entries. A reduced
//! basis is orthogonal for the sup norm, so its sorted column norms are the
//! successive minima.

use std::sync::OnceLock;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exterior::{KMatrix, WedgeVector};
use crate::gf::Field;
use crate::laurent::{q_pow, AbsValue, Laurent};
use crate::poly::Poly;

#[derive(Debug, Clone)]
struct Reduced {
    basis: KMatrix,
    /// `log_q` of the reduced column norms, ascending.
    norms: Vec<i64>,
}

/// A lattice with an exact basis (columns), caching its reduction.
#[derive(Debug)]
pub struct PolyLattice {
    basis: KMatrix,
    reduced: OnceLock<Reduced>,
}

impl Clone for PolyLattice {
    fn clone(&self) -> Self {
        let reduced = OnceLock::new();
        if let Some(r) = self.reduced.get() {
            let _ = reduced.set(r.clone());
        }
        PolyLattice { basis: self.basis.clone(), reduced }
    }
}

/// `log_q ‖v‖`, `None` for the zero vector.
pub fn vector_norm_exponent(v: &[Laurent]) -> Option<i64> {
    v.iter().filter_map(|x| x.valuation_lower_bound()).min().map(|m| -m)
}

/// Leading-coefficient vector of a column of norm q^e.
fn leading_vector(col: &[Laurent], e: i64) -> Vec<u8> {
    col.iter().map(|x| x.coeff(-e)).collect()
}

/// Finds c with Σ c_j v_j = 0 over F_q, scanning the vectors in the given
/// order. Returns the first index whose vector depends on its predecessors,
/// together with coefficients normalized so that index has coefficient 1.
fn first_dependency(f: Field, vectors: &[Vec<u8>], order: &[usize]) -> Option<(usize, Vec<u8>)> {
    let n = vectors.len();
    // echelon rows: (vector, combination of original vectors)
    let mut rows: Vec<(Vec<u8>, Vec<u8>, usize)> = Vec::new();
    for &j in order {
        let mut v = vectors[j].clone();
        let mut comb = vec![0u8; n];
        comb[j] = 1;
        for (rv, rc, piv) in &rows {
            let a = v[*piv];
            if a == 0 {
                continue;
            }
            let s = f.neg_raw(a);
            for (x, y) in v.iter_mut().zip(rv) {
                *x = f.add_raw(*x, f.mul_raw(s, *y));
            }
            for (x, y) in comb.iter_mut().zip(rc) {
                *x = f.add_raw(*x, f.mul_raw(s, *y));
            }
        }
        match v.iter().position(|&x| x != 0) {
            None => return Some((j, comb)),
            Some(p) => {
                let inv = f.inv_raw(v[p]);
                for x in v.iter_mut() {
                    *x = f.mul_raw(*x, inv);
                }
                for x in comb.iter_mut() {
                    *x = f.mul_raw(*x, inv);
                }
                rows.push((v, comb, p));
            }
        }
    }
    None
}

/// Reduces the columns in place; returns their norm exponents.
fn reduce_columns(f: Field, cols: &mut [Vec<Laurent>]) -> Result<Vec<i64>> {
    let n = cols.len();
    loop {
        let mut norms = Vec::with_capacity(n);
        for c in cols.iter() {
            norms.push(vector_norm_exponent(c).ok_or(Error::Singular)?);
        }
        let leads: Vec<Vec<u8>> = cols.iter().zip(&norms).map(|(c, &e)| leading_vector(c, e)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| (norms[j], j));
        let Some((j0, comb)) = first_dependency(f, &leads, &order) else {
            return Ok(norms);
        };
        // b_{j0} <- Σ c_j T^{e_{j0} - e_j} b_j; the leading terms cancel
        let mut new = cols[j0].clone();
        for j in 0..n {
            if j == j0 || comb[j] == 0 {
                continue;
            }
            let shift = norms[j] - norms[j0];
            for (r, x) in new.iter_mut().enumerate() {
                let term = cols[j][r].scale_raw(comb[j]).shift(shift);
                *x = x.checked_add(&term)?;
            }
        }
        if vector_norm_exponent(&new).is_none_or(|e| e >= norms[j0]) {
            return Err(Error::Singular);
        }
        cols[j0] = new;
    }
}

impl PolyLattice {
    /// Lattice spanned over F_q[T] by the columns of an exact, nonsingular
    /// square matrix.
    pub fn new(basis: KMatrix) -> Result<PolyLattice> {
        if !basis.is_square() {
            return Err(Error::DimensionMismatch("lattice basis must be square".into()));
        }
        if !basis.is_exact() {
            return Err(Error::NotExact);
        }
        if basis.det()?.is_zero() {
            return Err(Error::Singular);
        }
        Ok(PolyLattice { basis, reduced: OnceLock::new() })
    }

    /// Skips the determinant check; reduction still fails on a singular
    /// basis.
    pub(crate) fn new_unchecked(basis: KMatrix) -> PolyLattice {
        PolyLattice { basis, reduced: OnceLock::new() }
    }

    /// The standard lattice R^d = F_q[T]^d.
    pub fn standard(field: Field, d: usize) -> PolyLattice {
        PolyLattice::new_unchecked(KMatrix::identity(field, d))
    }

    pub fn field(&self) -> Field {
        self.basis.field()
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &KMatrix {
        &self.basis
    }

    fn reduction(&self) -> Result<&Reduced> {
        if let Some(r) = self.reduced.get() {
            return Ok(r);
        }
        let f = self.field();
        let mut cols = self.basis.columns();
        let norms = reduce_columns(f, &mut cols)?;
        let mut idx: Vec<usize> = (0..cols.len()).collect();
        idx.sort_by_key(|&j| (norms[j], j));
        let sorted: Vec<Vec<Laurent>> = idx.iter().map(|&j| cols[j].clone()).collect();
        let r = Reduced {
            basis: KMatrix::from_columns(f, &sorted)?,
            norms: idx.iter().map(|&j| norms[j]).collect(),
        };
        Ok(self.reduced.get_or_init(|| r))
    }

    /// The same lattice with a reduced basis, columns sorted by norm.
    pub fn reduce_basis(&self) -> Result<PolyLattice> {
        let r = self.reduction()?.clone();
        let basis = r.basis.clone();
        let reduced = OnceLock::new();
        let _ = reduced.set(r);
        Ok(PolyLattice { basis, reduced })
    }

    pub fn reduced_basis(&self) -> Result<&KMatrix> {
        Ok(&self.reduction()?.basis)
    }

    /// `log_q λ_1 <= ... <= log_q λ_d`.
    pub fn minima_exponents(&self) -> Result<&[i64]> {
        Ok(&self.reduction()?.norms)
    }

    pub fn successive_minima(&self) -> Result<Vec<AbsValue>> {
        Ok(self.minima_exponents()?.iter().map(|&e| AbsValue::Pow(e)).collect())
    }

    /// |det basis| computed from the determinant itself.
    pub fn det_abs(&self) -> Result<AbsValue> {
        self.basis.det()?.abs()
    }

    /// cov(x) = |det basis| · cov(R^d) = |det basis| · q^{-d}.
    pub fn covolume(&self) -> Result<BigRational> {
        let q = self.field().q();
        let s: i64 = self.minima_exponents()?.iter().sum();
        Ok(q_pow(q, s - self.dim() as i64))
    }

    /// `log_q α_i` for i = 0..=d, where α_i = 1/(λ_1 ⋯ λ_i).
    pub fn alpha_exponents(&self) -> Result<Vec<i64>> {
        let norms = self.minima_exponents()?;
        let mut out = Vec::with_capacity(norms.len() + 1);
        let mut acc = 0i64;
        out.push(0);
        for &e in norms {
            acc -= e;
            out.push(acc);
        }
        Ok(out)
    }

    pub fn alpha(&self, i: usize) -> Result<AbsValue> {
        let a = self.alpha_exponents()?;
        a.get(i)
            .map(|&e| AbsValue::Pow(e))
            .ok_or_else(|| Error::OutOfRange(format!("alpha index {i} > {}", self.dim())))
    }

    /// The lattice g·x.
    pub fn transform(&self, g: &KMatrix) -> Result<PolyLattice> {
        Ok(PolyLattice::new_unchecked(g.mul(&self.basis)?))
    }

    /// The lattice g·x computed from the reduced basis, which keeps entry
    /// degrees small along an orbit.
    pub fn transform_reduced(&self, g: &KMatrix) -> Result<PolyLattice> {
        Ok(PolyLattice::new_unchecked(g.mul(self.reduced_basis()?)?))
    }

    /// Coordinates (over F_q[T]) of lattice vectors given as columns,
    /// relative to this basis. Errors if some column is not in the lattice.
    pub fn coordinates(&self, vectors: &KMatrix) -> Result<Vec<Vec<Poly>>> {
        let f = self.field();
        let det = self.basis.det()?;
        let adj = self.basis.adjugate()?;
        let num = adj.mul(vectors)?;
        let det_poly = laurent_to_poly_parts(&det)?;
        let mut cols = Vec::with_capacity(vectors.cols());
        for c in 0..vectors.cols() {
            let mut col = Vec::with_capacity(self.dim());
            for r in 0..self.dim() {
                // entry = num / det as elements of F_q(T); both are Laurent
                // polynomials in T, so clear powers of T before dividing
                let (np, ns) = laurent_to_poly_parts(num.get(r, c))?;
                let (dp, ds) = det_poly.clone();
                let (quot, rem) = np.divrem(&dp)?;
                if !rem.is_zero() {
                    return Err(Error::OutOfRange("vector is not in the lattice".into()));
                }
                // value = quot * T^{ds - ns}
                let shift = ds - ns;
                let value = if shift >= 0 {
                    quot.shift(shift as usize)
                } else {
                    let (q2, r2) = quot.divrem(&Poly::monomial(f, 1, (-shift) as usize))?;
                    if !r2.is_zero() {
                        return Err(Error::OutOfRange("vector is not in the lattice".into()));
                    }
                    q2
                };
                col.push(value);
            }
            cols.push(col);
        }
        Ok(cols)
    }

    /// The lattice vector with the given polynomial coordinates.
    pub fn vector_from_coordinates(&self, coords: &[Poly]) -> Result<Vec<Laurent>> {
        let v: Vec<Laurent> = coords.iter().map(|p| p.to_laurent()).collect();
        self.basis.mul_vec(&v)
    }
}

/// Writes an exact Laurent polynomial as `p(T) · T^{-s}` with p a
/// polynomial; returns (p, s).
fn laurent_to_poly_parts(x: &Laurent) -> Result<(Poly, i64)> {
    if !x.is_exact() {
        return Err(Error::NotExact);
    }
    if x.is_zero() {
        return Ok((Poly::zero(x.field()), 0));
    }
    let s = x.max_exponent().max(0);
    Ok((Poly::from_laurent(&x.shift(-s))?, s))
}

/// Result of bounded exhaustive search for a shortest vector.
#[derive(Debug, Clone)]
pub struct ShortestVector {
    pub vector: Vec<Laurent>,
    pub coords: Vec<Poly>,
    pub norm: AbsValue,
}

/// Exhaustive minimum of ‖Σ p_j b_j‖ over nonzero coefficient tuples with
/// deg p_j <= degree_bound. Independent of the reduction code.
pub fn shortest_vector_oracle(x: &PolyLattice, degree_bound: usize, cap: u128) -> Result<ShortestVector> {
    let f = x.field();
    let d = x.dim();
    let per = (f.q() as u128).pow(degree_bound as u32 + 1);
    let states = per.checked_pow(d as u32).unwrap_or(u128::MAX);
    if states > cap {
        return Err(Error::CapExceeded { states, cap });
    }
    let polys: Vec<Poly> = Poly::enumerate(f, degree_bound).collect();
    let cols = x.basis.columns();
    // multiples[j][k] = polys[k] * b_j
    let multiples: Vec<Vec<Vec<Laurent>>> = cols
        .iter()
        .map(|b| {
            polys
                .iter()
                .map(|p| {
                    let pl = p.to_laurent();
                    b.iter().map(|e| e.checked_mul(&pl)).collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(i64, Vec<usize>, Vec<Laurent>)> = None;
    let mut idx = vec![0usize; d];
    loop {
        // advance odometer; the all-zero tuple is skipped
        let mut pos = 0;
        loop {
            if pos == d {
                let (e, ks, v) = best.ok_or(Error::Singular)?;
                return Ok(ShortestVector {
                    vector: v,
                    coords: ks.iter().map(|&k| polys[k].clone()).collect(),
                    norm: AbsValue::Pow(e),
                });
            }
            idx[pos] += 1;
            if idx[pos] < polys.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        let mut v = vec![Laurent::zero(f); d];
        for j in 0..d {
            if idx[j] == 0 {
                continue;
            }
            for (r, e) in v.iter_mut().enumerate() {
                *e = e.checked_add(&multiples[j][idx[j]][r])?;
            }
        }
        if let Some(e) = vector_norm_exponent(&v) {
            if best.as_ref().is_none_or(|(b, _, _)| e < *b) {
                best = Some((e, idx.clone(), v));
            }
        }
    }
}

/// A degree bound that provably contains the coordinates of a shortest
/// vector: |c_j| <= max_r |adj(B)_{jr}| · ‖v‖ / |det B|, with ‖v‖ bounded
/// by the shortest input column.
pub fn oracle_degree_bound(x: &PolyLattice) -> Result<usize> {
    let adj = x.basis.adjugate()?;
    let det = x.basis.det()?.abs()?.exponent().ok_or(Error::Singular)?;
    let shortest = x
        .basis
        .columns()
        .iter()
        .filter_map(|c| vector_norm_exponent(c))
        .min()
        .ok_or(Error::Singular)?;
    let adj_max = adj.entries().iter().filter_map(|e| e.abs().ok()?.exponent()).max().unwrap_or(0);
    Ok((adj_max + shortest - det).max(0) as usize)
}

/// An x-rational subspace, stored through a saturated basis of L ∩ x.
#[derive(Debug, Clone)]
pub struct RationalSubspace {
    generators: KMatrix,
    coords: Vec<Vec<Poly>>,
}

impl RationalSubspace {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Saturated basis vectors as columns (d x i).
    pub fn generators(&self) -> &KMatrix {
        &self.generators
    }

    /// Polynomial coordinates of the generators in the lattice basis.
    pub fn coordinates(&self) -> &[Vec<Poly>] {
        &self.coords
    }

    /// Builds the subspace from lattice vectors that must already be
    /// saturated; with `auto_saturate` the saturation is taken instead.
    pub fn from_generators(x: &PolyLattice, gens: &KMatrix, auto_saturate: bool) -> Result<RationalSubspace> {
        let sat = saturate(x, gens)?;
        if auto_saturate {
            return Ok(sat);
        }
        let coords = x.coordinates(gens)?;
        let given = WedgeVector::wedge_columns(gens)?.sup_norm()?;
        if given != subspace_norm(&sat)? {
            return Err(Error::NotSaturated);
        }
        Ok(RationalSubspace { generators: gens.clone(), coords })
    }
}

/// Unimodular row echelon over F_q[T]: returns (rank, H, W, W^{-1}) with
/// W·A = H, H in row echelon form (zero rows last).
#[allow(clippy::type_complexity)]
fn echelon(f: Field, a: &[Vec<Poly>]) -> Result<(usize, Vec<Vec<Poly>>, Vec<Vec<Poly>>, Vec<Vec<Poly>>)> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut h: Vec<Vec<Poly>> = a.to_vec();
    let ident = |n: usize| -> Vec<Vec<Poly>> {
        (0..n)
            .map(|r| (0..n).map(|c| if r == c { Poly::one(f) } else { Poly::zero(f) }).collect())
            .collect()
    };
    let mut w = ident(rows);
    let mut winv = ident(rows);
    let mut rank = 0usize;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        loop {
            // pivot: smallest degree nonzero entry in column c among rows >= rank
            let piv = (rank..rows)
                .filter(|&r| !h[r][c].is_zero())
                .min_by_key(|&r| (h[r][c].degree().unwrap(), r));
            let Some(p) = piv else { break };
            if p != rank {
                h.swap(p, rank);
                w.swap(p, rank);
                for row in winv.iter_mut() {
                    row.swap(p, rank);
                }
            }
            let mut done = true;
            for r in rank + 1..rows {
                if h[r][c].is_zero() {
                    continue;
                }
                let (quot, rem) = h[r][c].divrem(&h[rank][c])?;
                // row_r <- row_r - quot * row_rank; inverse: col_rank += quot * col_r
                for k in 0..cols {
                    let t = quot.mul(&h[rank][k])?;
                    h[r][k] = h[r][k].sub(&t)?;
                }
                for k in 0..rows {
                    let t = quot.mul(&w[rank][k])?;
                    w[r][k] = w[r][k].sub(&t)?;
                }
                for row in winv.iter_mut() {
                    let t = quot.mul(&row[r])?;
                    row[rank] = row[rank].add(&t)?;
                }
                if !rem.is_zero() {
                    done = false;
                }
            }
            if done {
                rank += 1;
                break;
            }
        }
    }
    Ok((rank, h, w, winv))
}

/// Polynomial coordinates of vectors (as columns) over F_q[T], up to a
/// common power of T, which does not change their K-span.
fn span_coordinates(x: &PolyLattice, vectors: &KMatrix) -> Result<Vec<Vec<Poly>>> {
    if vectors.rows() != x.dim() {
        return Err(Error::DimensionMismatch("vector length differs from lattice dimension".into()));
    }
    if !vectors.is_exact() {
        return Err(Error::NotExact);
    }
    let adj = x.basis.adjugate()?;
    let num = adj.mul(vectors)?;
    let shift = num.entries().iter().filter(|e| !e.is_zero()).map(|e| e.max_exponent()).max().unwrap_or(0).max(0);
    let d = x.dim();
    let mut rows = vec![Vec::with_capacity(vectors.cols()); d];
    for (r, row) in rows.iter_mut().enumerate() {
        for c in 0..vectors.cols() {
            row.push(Poly::from_laurent(&num.get(r, c).shift(-shift))?);
        }
    }
    Ok(rows)
}

fn subspace_from_coords(x: &PolyLattice, coords: Vec<Vec<Poly>>) -> Result<RationalSubspace> {
    let f = x.field();
    let cols: Vec<Vec<Laurent>> = coords
        .iter()
        .map(|c| x.vector_from_coordinates(c))
        .collect::<Result<Vec<_>>>()?;
    let generators = if cols.is_empty() {
        KMatrix::zeros(f, x.dim(), 0)
    } else {
        KMatrix::from_columns(f, &cols)?
    };
    Ok(RationalSubspace { generators, coords })
}

/// Saturated basis of the K-span of the given vectors (any rank).
fn saturate_span(x: &PolyLattice, vectors: &KMatrix) -> Result<(usize, RationalSubspace)> {
    let a = span_coordinates(x, vectors)?;
    let (rank, _, _, winv) = echelon(x.field(), &a)?;
    let d = x.dim();
    let coords: Vec<Vec<Poly>> = (0..rank).map(|c| (0..d).map(|r| winv[r][c].clone()).collect()).collect();
    Ok((rank, subspace_from_coords(x, coords)?))
}

/// Basis of {v ∈ x : v ∈ span_K(vectors)} for independent vectors.
pub fn saturate(x: &PolyLattice, vectors: &KMatrix) -> Result<RationalSubspace> {
    let (rank, s) = saturate_span(x, vectors)?;
    if rank < vectors.cols() {
        return Err(Error::Dependent);
    }
    Ok(s)
}

/// ‖L‖ = ‖v_1 ∧ ⋯ ∧ v_i‖ for the saturated basis; ‖{0}‖ = 1.
pub fn subspace_norm(l: &RationalSubspace) -> Result<AbsValue> {
    if l.dim() == 0 {
        return Ok(AbsValue::one());
    }
    WedgeVector::wedge_columns(&l.generators)?.sup_norm()
}

/// L + L' as the saturation of the concatenated generators.
pub fn subspace_sum(x: &PolyLattice, l1: &RationalSubspace, l2: &RationalSubspace) -> Result<RationalSubspace> {
    let f = x.field();
    let mut cols = l1.generators.columns();
    cols.extend(l2.generators.columns());
    if cols.is_empty() {
        return Ok(subspace_from_coords(x, Vec::new())?);
    }
    Ok(saturate_span(x, &KMatrix::from_columns(f, &cols)?)?.1)
}

/// L ∩ L' from the kernel of [P | -P'] over F_q[T], P, P' the polynomial
/// coordinates of the saturated bases.
pub fn subspace_intersection(x: &PolyLattice, l1: &RationalSubspace, l2: &RationalSubspace) -> Result<RationalSubspace> {
    let f = x.field();
    let (i1, i2) = (l1.dim(), l2.dim());
    let d = x.dim();
    // transpose of [P | -P']: (i1 + i2) x d
    let mut mt: Vec<Vec<Poly>> = Vec::with_capacity(i1 + i2);
    for c in &l1.coords {
        mt.push(c.clone());
    }
    for c in &l2.coords {
        mt.push(c.iter().map(|p| p.neg()).collect());
    }
    if mt.is_empty() {
        return subspace_from_coords(x, Vec::new());
    }
    let (rank, _, w, _) = echelon(f, &mt)?;
    // rows of W beyond the rank span the kernel of [P | -P']
    let mut coords = Vec::new();
    for kr in rank..i1 + i2 {
        let a = &w[kr][..i1];
        let mut v = vec![Poly::zero(f); d];
        for (j, aj) in a.iter().enumerate() {
            for r in 0..d {
                v[r] = v[r].add(&aj.mul(&l1.coords[j][r])?)?;
            }
        }
        coords.push(v);
    }
    subspace_from_coords(x, coords)
}
