//! Matrices over K_ν, exterior powers with the sup norm, the Hodge dual and
//! the P(O)·U(O) factorization near the identity.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::laurent::{AbsValue, Laurent};

/// Largest ambient dimension supported by subset bitmasks.
pub const MAX_DIM: usize = 16;

/// All i-subsets of {0..d-1} as bitmasks, in lexicographic order of their
/// sorted index sequences.
pub fn subsets(d: usize, i: usize) -> Vec<u32> {
    fn rec(start: usize, d: usize, left: usize, mask: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        for r in start..=d - left {
            rec(r + 1, d, left - 1, mask | (1 << r), out);
        }
    }
    let mut out = Vec::new();
    if i <= d {
        rec(0, d, i, 0, &mut out);
    }
    out
}

/// Position of every i-subset mask in the order of [`subsets`].
fn subset_positions(d: usize, i: usize) -> Vec<u32> {
    let mut pos = vec![u32::MAX; 1 << d];
    for (k, m) in subsets(d, i).into_iter().enumerate() {
        pos[m as usize] = k as u32;
    }
    pos
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, j| acc * (n - j) / (j + 1))
}

/// A strictly increasing index set in {1..d}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetIndex {
    d: usize,
    idx: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(d: usize, idx: Vec<usize>) -> Result<SubsetIndex> {
        if d > MAX_DIM {
            return Err(Error::OutOfRange(format!("dimension {d} > {MAX_DIM}")));
        }
        if idx.iter().any(|&a| a == 0 || a > d) || idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::OutOfRange(format!("{idx:?} is not an increasing subset of 1..{d}")));
        }
        Ok(SubsetIndex { d, idx })
    }

    pub fn from_mask(d: usize, mask: u32) -> SubsetIndex {
        SubsetIndex { d, idx: (0..d).filter(|r| mask >> r & 1 == 1).map(|r| r + 1).collect() }
    }

    pub fn mask(&self) -> u32 {
        self.idx.iter().fold(0, |m, &a| m | 1 << (a - 1))
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn complement(&self) -> SubsetIndex {
        SubsetIndex::from_mask(self.d, !self.mask() & ((1u32 << self.d) - 1))
    }

    /// σ_I = (−1)^{i(i+1)/2 + Σ a_s}, with 1-based indices.
    pub fn hodge_sign_negative(&self) -> bool {
        let i = self.idx.len();
        (i * (i + 1) / 2 + self.idx.iter().sum::<usize>()) % 2 == 1
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.idx.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", s.join(","))
    }
}

fn hodge_negative_mask(d: usize, mask: u32) -> bool {
    SubsetIndex::from_mask(d, mask).hodge_sign_negative()
}

/// Dense row-major matrix over K_ν.
#[derive(Clone, PartialEq, Eq)]
pub struct KMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    e: Vec<Laurent>,
}

impl KMatrix {
    pub fn new(field: Field, rows: usize, cols: usize, e: Vec<Laurent>) -> Result<KMatrix> {
        if e.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                e.len()
            )));
        }
        if e.iter().any(|x| x.field() != field) {
            return Err(Error::FieldMismatch);
        }
        Ok(KMatrix { field, rows, cols, e })
    }

    pub fn from_fn(
        field: Field,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Laurent,
    ) -> KMatrix {
        let mut e = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                e.push(f(r, c));
            }
        }
        KMatrix { field, rows, cols, e }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(field: Field, cols: &[Vec<Laurent>]) -> Result<KMatrix> {
        let rows = cols.first().map_or(0, |c| c.len());
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let m = KMatrix::from_fn(field, rows, cols.len(), |r, c| cols[c][r].clone());
        if m.e.iter().any(|x| x.field() != field) {
            return Err(Error::FieldMismatch);
        }
        Ok(m)
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> KMatrix {
        KMatrix::from_fn(field, rows, cols, |_, _| Laurent::zero(field))
    }

    pub fn identity(field: Field, d: usize) -> KMatrix {
        KMatrix::from_fn(field, d, d, |r, c| {
            if r == c {
                Laurent::one(field)
            } else {
                Laurent::zero(field)
            }
        })
    }

    /// Diagonal matrix with entries π^{e_j}.
    pub fn diag_pi(field: Field, exps: &[i64]) -> KMatrix {
        let d = exps.len();
        KMatrix::from_fn(field, d, d, |r, c| {
            if r == c {
                Laurent::pi_pow(field, exps[r])
            } else {
                Laurent::zero(field)
            }
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Laurent {
        &self.e[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, x: Laurent) {
        self.e[r * self.cols + c] = x;
    }

    pub fn entries(&self) -> &[Laurent] {
        &self.e
    }

    pub fn column(&self, c: usize) -> Vec<Laurent> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Laurent>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.e.iter().all(|x| x.is_exact())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> KMatrix {
        KMatrix::from_fn(self.field, self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn map(&self, f: impl Fn(&Laurent) -> Laurent) -> KMatrix {
        KMatrix { field: self.field, rows: self.rows, cols: self.cols, e: self.e.iter().map(f).collect() }
    }

    /// Submatrix of rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> KMatrix {
        KMatrix::from_fn(self.field, r1 - r0, c1 - c0, |r, c| self.get(r0 + r, c0 + c).clone())
    }

    /// `[[a, b], [c, d]]` from four compatible blocks.
    pub fn from_blocks(a: &KMatrix, b: &KMatrix, c: &KMatrix, d: &KMatrix) -> Result<KMatrix> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::DimensionMismatch("incompatible blocks".into()));
        }
        let (m, n) = (a.rows, c.rows);
        let (p, s) = (a.cols, b.cols);
        Ok(KMatrix::from_fn(a.field, m + n, p + s, |r, col| {
            match (r < m, col < p) {
                (true, true) => a.get(r, col).clone(),
                (true, false) => b.get(r, col - p).clone(),
                (false, true) => c.get(r - m, col).clone(),
                (false, false) => d.get(r - m, col - p).clone(),
            }
        }))
    }

    pub fn mul(&self, other: &KMatrix) -> Result<KMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        let mut e = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Laurent::zero(self.field);
                for k in 0..self.cols {
                    let a = self.get(r, k);
                    let b = other.get(k, c);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.checked_add(&a.checked_mul(b)?)?;
                }
                e.push(acc);
            }
        }
        Ok(KMatrix { field: self.field, rows: self.rows, cols: other.cols, e })
    }

    pub fn mul_vec(&self, v: &[Laurent]) -> Result<Vec<Laurent>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch("vector length".into()));
        }
        (0..self.rows)
            .map(|r| {
                let mut acc = Laurent::zero(self.field);
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(r, k);
                    if a.is_zero() || x.is_zero() {
                        continue;
                    }
                    acc = acc.checked_add(&a.checked_mul(x)?)?;
                }
                Ok(acc)
            })
            .collect()
    }

    fn zip(&self, other: &KMatrix, f: impl Fn(&Laurent, &Laurent) -> Result<Laurent>) -> Result<KMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("shape".into()));
        }
        let e = self.e.iter().zip(&other.e).map(|(a, b)| f(a, b)).collect::<Result<Vec<_>>>()?;
        Ok(KMatrix { field: self.field, rows: self.rows, cols: self.cols, e })
    }

    pub fn add(&self, other: &KMatrix) -> Result<KMatrix> {
        self.zip(other, |a, b| a.checked_add(b))
    }

    pub fn sub(&self, other: &KMatrix) -> Result<KMatrix> {
        self.zip(other, |a, b| a.checked_sub(b))
    }

    pub fn scale(&self, c: &Laurent) -> Result<KMatrix> {
        let e = self.e.iter().map(|a| a.checked_mul(c)).collect::<Result<Vec<_>>>()?;
        Ok(KMatrix { field: self.field, rows: self.rows, cols: self.cols, e })
    }

    /// All |cols|-minors on the given columns, indexed by row-subset mask.
    /// Computed by Laplace expansion along the last column, one column at a
    /// time, so that every minor is a polynomial expression in the entries.
    fn minors_on_columns(&self, cols: &[usize]) -> Result<Vec<Option<Laurent>>> {
        let d = self.rows;
        if d > MAX_DIM {
            return Err(Error::OutOfRange(format!("{d} rows exceed {MAX_DIM}")));
        }
        let f = self.field;
        let mut cur: Vec<Option<Laurent>> = vec![None; 1 << d];
        cur[0] = Some(Laurent::one(f));
        for &col in cols {
            let mut next: Vec<Option<Laurent>> = vec![None; 1 << d];
            for (mask, val) in cur.iter().enumerate() {
                let Some(val) = val else { continue };
                for r in 0..d {
                    if mask >> r & 1 == 1 {
                        continue;
                    }
                    let nmask = mask | 1 << r;
                    let entry = self.get(r, col);
                    let slot = next[nmask].get_or_insert_with(|| Laurent::zero(f));
                    if entry.is_zero() || val.is_zero() {
                        continue;
                    }
                    let mut term = entry.checked_mul(val)?;
                    if (mask >> (r + 1)).count_ones() % 2 == 1 {
                        term = term.neg();
                    }
                    *slot = slot.checked_add(&term)?;
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Determinant of the submatrix on rows J and columns I.
    pub fn minor(&self, rows_j: &SubsetIndex, cols_i: &SubsetIndex) -> Result<Laurent> {
        if rows_j.indices().len() != cols_i.indices().len() {
            return Err(Error::DimensionMismatch("minor index sets differ in size".into()));
        }
        if rows_j.indices().iter().any(|&r| r > self.rows) || cols_i.indices().iter().any(|&c| c > self.cols) {
            return Err(Error::OutOfRange("minor index outside the matrix".into()));
        }
        let cols: Vec<usize> = cols_i.indices().iter().map(|c| c - 1).collect();
        let all = self.minors_on_columns(&cols)?;
        Ok(all[rows_j.mask() as usize].clone().unwrap_or_else(|| Laurent::zero(self.field)))
    }

    pub fn det(&self) -> Result<Laurent> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        let cols: Vec<usize> = (0..self.cols).collect();
        let all = self.minors_on_columns(&cols)?;
        Ok(all[(1usize << self.rows) - 1].clone().unwrap_or_else(|| Laurent::one(self.field)))
    }

    /// Matrix of the induced action on ⋀^i: entry (J, I) is det g_{J,I}.
    pub fn exterior_power(&self, i: usize) -> Result<KMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("exterior power of a non-square matrix".into()));
        }
        let d = self.rows;
        let masks = subsets(d, i);
        let n = masks.len();
        let mut e = vec![Laurent::zero(self.field); n * n];
        for (ci, &cm) in masks.iter().enumerate() {
            let cols: Vec<usize> = (0..d).filter(|r| cm >> r & 1 == 1).collect();
            let all = self.minors_on_columns(&cols)?;
            for (ri, &rm) in masks.iter().enumerate() {
                if let Some(v) = &all[rm as usize] {
                    e[ri * n + ci] = v.clone();
                }
            }
        }
        Ok(KMatrix { field: self.field, rows: n, cols: n, e })
    }

    pub fn adjugate(&self) -> Result<KMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("adjugate of a non-square matrix".into()));
        }
        let d = self.rows;
        if d == 1 {
            return Ok(KMatrix::identity(self.field, 1));
        }
        // cofactors come from the (d-1)-th exterior power
        let ext = self.exterior_power(d - 1)?;
        let pos = subset_positions(d, d - 1);
        let full = (1u32 << d) - 1;
        Ok(KMatrix::from_fn(self.field, d, d, |r, c| {
            // adj[r][c] = (−1)^{r+c} det(g without row c and column r)
            let rm = pos[(full & !(1 << c)) as usize] as usize;
            let cm = pos[(full & !(1 << r)) as usize] as usize;
            let m = ext.get(rm, cm);
            if (r + c) % 2 == 1 {
                m.neg()
            } else {
                m.clone()
            }
        }))
    }

    /// Inverse as adjugate / det; errors when det is (possibly) zero.
    pub fn inverse(&self) -> Result<KMatrix> {
        let det = self.det()?;
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let inv_det = det.inv()?;
        self.adjugate()?.scale(&inv_det)
    }

    /// Drops every entry's terms at and beyond π^k, declaring them exact.
    pub fn truncate_exact(&self, k: i64) -> KMatrix {
        self.map(|x| x.truncate_exact(k))
    }

    /// Smallest entry precision, `None` if all entries are exact.
    pub fn precision(&self) -> Option<i64> {
        self.e.iter().filter_map(|x| x.precision()).min()
    }

    /// Whether all entries lie in O and |det| = 1.
    pub fn in_gl_o(&self) -> Result<bool> {
        if !self.is_square() {
            return Ok(false);
        }
        for x in &self.e {
            match x.valuation_lower_bound() {
                Some(v) if v < 0 => return Ok(false),
                _ => {}
            }
        }
        Ok(self.det()?.abs()? == AbsValue::one())
    }
}

impl fmt::Debug for KMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Row-major grid: rows separated by `;`, entries by `|`.
impl fmt::Display for KMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
        }
        write!(f, "]")
    }
}

/// Element of ⋀^i K_ν^d; coordinates follow the order of [`subsets`].
#[derive(Clone, PartialEq, Eq)]
pub struct WedgeVector {
    field: Field,
    d: usize,
    i: usize,
    coords: Vec<Laurent>,
}

impl WedgeVector {
    pub fn new(field: Field, d: usize, i: usize, coords: Vec<Laurent>) -> Result<WedgeVector> {
        if d > MAX_DIM || i > d {
            return Err(Error::OutOfRange(format!("degree {i} in dimension {d}")));
        }
        if coords.len() != binomial(d, i) {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for degree {i} in dimension {d}",
                coords.len()
            )));
        }
        if coords.iter().any(|x| x.field() != field) {
            return Err(Error::FieldMismatch);
        }
        Ok(WedgeVector { field, d, i, coords })
    }

    pub fn zero(field: Field, d: usize, i: usize) -> WedgeVector {
        WedgeVector { field, d, i, coords: vec![Laurent::zero(field); binomial(d, i)] }
    }

    /// The basis vector e_I.
    pub fn basis(field: Field, idx: &SubsetIndex) -> WedgeVector {
        let d = idx.d;
        let i = idx.indices().len();
        let mut v = WedgeVector::zero(field, d, i);
        let pos = subset_positions(d, i);
        v.coords[pos[idx.mask() as usize] as usize] = Laurent::one(field);
        v
    }

    /// v_1 ∧ ⋯ ∧ v_i: the coordinate at I is the minor on rows I of the
    /// matrix with columns v_j.
    pub fn wedge(field: Field, vectors: &[Vec<Laurent>]) -> Result<WedgeVector> {
        let i = vectors.len();
        let d = match vectors.first() {
            Some(v) => v.len(),
            None => return Err(Error::DimensionMismatch("empty wedge needs a dimension".into())),
        };
        if i > d {
            return Err(Error::DimensionMismatch(format!("{i} vectors in dimension {d}")));
        }
        let m = KMatrix::from_columns(field, vectors)?;
        WedgeVector::wedge_columns(&m)
    }

    /// Wedge of the columns of `m`.
    pub fn wedge_columns(m: &KMatrix) -> Result<WedgeVector> {
        let (d, i) = (m.rows(), m.cols());
        if i > d {
            return Err(Error::DimensionMismatch(format!("{i} vectors in dimension {d}")));
        }
        let cols: Vec<usize> = (0..i).collect();
        let all = m.minors_on_columns(&cols)?;
        let coords = subsets(d, i)
            .into_iter()
            .map(|mask| all[mask as usize].clone().unwrap_or_else(|| Laurent::zero(m.field())))
            .collect();
        Ok(WedgeVector { field: m.field(), d, i, coords })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.i
    }

    pub fn coords(&self) -> &[Laurent] {
        &self.coords
    }

    pub fn coord(&self, idx: &SubsetIndex) -> Result<&Laurent> {
        if idx.d != self.d || idx.indices().len() != self.i {
            return Err(Error::DimensionMismatch("index set does not match".into()));
        }
        let pos = subset_positions(self.d, self.i);
        Ok(&self.coords[pos[idx.mask() as usize] as usize])
    }

    /// Index sets in coordinate order.
    pub fn index_sets(&self) -> Vec<SubsetIndex> {
        subsets(self.d, self.i).into_iter().map(|m| SubsetIndex::from_mask(self.d, m)).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.coords.iter().all(|x| x.is_exact())
    }

    pub fn add(&self, other: &WedgeVector) -> Result<WedgeVector> {
        if self.d != other.d || self.i != other.i {
            return Err(Error::DimensionMismatch("wedge degrees differ".into()));
        }
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.checked_add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(WedgeVector { coords, ..self.clone() })
    }

    pub fn scale(&self, c: &Laurent) -> Result<WedgeVector> {
        let coords = self.coords.iter().map(|a| a.checked_mul(c)).collect::<Result<Vec<_>>>()?;
        Ok(WedgeVector { coords, ..self.clone() })
    }

    /// max_I |v_I|. Zero-to-precision coordinates only bound their value
    /// from above; the result is determinate when some known coordinate is
    /// at least every such bound.
    pub fn sup_norm(&self) -> Result<AbsValue> {
        let mut known = AbsValue::Zero;
        let mut bound: Option<(AbsValue, i64)> = None;
        for x in &self.coords {
            match x.abs() {
                Ok(a) => known = known.max(a),
                Err(Error::Indeterminate(k)) => {
                    let ub = x.abs_upper();
                    if bound.map_or(true, |(b, _)| ub > b) {
                        bound = Some((ub, k));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        match bound {
            Some((b, k)) if known == AbsValue::Zero || b > known => Err(Error::Indeterminate(k)),
            _ => Ok(known),
        }
    }

    /// Upper-bound mode of [`WedgeVector::sup_norm`].
    pub fn sup_norm_upper(&self) -> AbsValue {
        self.coords.iter().map(|x| x.abs_upper()).max().unwrap_or(AbsValue::Zero)
    }

    /// The Hodge dual *(e_I) = σ_I e_{I^c}, extended linearly.
    pub fn hodge(&self) -> WedgeVector {
        let d = self.d;
        let full = (1u32 << d) - 1;
        let pos = subset_positions(d, d - self.i);
        let mut out = WedgeVector::zero(self.field, d, d - self.i);
        for (mask, x) in subsets(d, self.i).into_iter().zip(&self.coords) {
            let target = pos[(full & !mask) as usize] as usize;
            out.coords[target] = if hodge_negative_mask(d, mask) { x.neg() } else { x.clone() };
        }
        out
    }

    /// g.(v_1 ∧ ⋯ ∧ v_i) = (g v_1) ∧ ⋯ ∧ (g v_i), via the matrix of minors.
    pub fn apply(&self, g: &KMatrix) -> Result<WedgeVector> {
        if !g.is_square() || g.rows() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on degree-{} vectors in dimension {}",
                g.rows(),
                g.cols(),
                self.i,
                self.d
            )));
        }
        let ext = g.exterior_power(self.i)?;
        self.apply_power(&ext)
    }

    /// Applies a precomputed exterior-power matrix.
    pub fn apply_power(&self, ext: &KMatrix) -> Result<WedgeVector> {
        let coords = ext.mul_vec(&self.coords)?;
        Ok(WedgeVector { coords, ..self.clone() })
    }
}

impl fmt::Debug for WedgeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Sum of `(coeff)*e{I}` over nonzero coordinates.
impl fmt::Display for WedgeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, x) in self.index_sets().iter().zip(&self.coords) {
            if x.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({x})*e{idx}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Factors x ∈ (I + π M_d(O)) ∩ SL_d(O) as p·u with p lower block
/// triangular in P(O) and u = [[I_m, (I_m + a)^{-1} b], [0, I_n]].
pub fn pu_factor(x: &KMatrix, m: usize, n: usize) -> Result<(KMatrix, KMatrix)> {
    let d = m + n;
    if x.rows() != d || x.cols() != d {
        return Err(Error::DimensionMismatch(format!("expected a {d}x{d} matrix")));
    }
    let f = x.field();
    let id = KMatrix::identity(f, d);
    let diff = x.sub(&id)?;
    for e in diff.entries() {
        if let Some(v) = e.valuation_lower_bound() {
            if v < 1 {
                return Err(Error::OutsideDomain("x - I has an entry outside πO".into()));
            }
        }
    }
    let det = x.det()?;
    let one_minus = det.checked_sub(&Laurent::one(f))?;
    if one_minus.is_nonzero() {
        return Err(Error::OutsideDomain("det x is not 1".into()));
    }
    let a = x.block(0, m, 0, m);
    let b = x.block(0, m, m, d);
    let c = x.block(m, d, 0, m);
    let dd = x.block(m, d, m, d);
    let a_inv = a.inverse().map_err(|_| Error::OutsideDomain("top-left block is not invertible".into()))?;
    if !a.in_gl_o()? {
        return Err(Error::OutsideDomain("top-left block is not invertible over O".into()));
    }
    let ainv_b = a_inv.mul(&b)?;
    let schur = dd.sub(&c.mul(&ainv_b)?)?;
    let p = KMatrix::from_blocks(&a, &KMatrix::zeros(f, m, n), &c, &schur)?;
    let u = KMatrix::from_blocks(&KMatrix::identity(f, m), &ainv_b, &KMatrix::zeros(f, n, m), &KMatrix::identity(f, n))?;
    Ok((p, u))
}
