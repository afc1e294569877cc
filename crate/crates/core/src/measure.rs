//! Haar measure on M_{d,i}(O): exact counting over O/π^k, uniform and
//! SL_d(O) samplers, and Monte Carlo contraction integrals.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{flow_matrix, horospherical, FlowSpec};
use crate::error::{Error, Result};
use crate::exterior::{subsets, KMatrix, SubsetIndex, WedgeVector};
use crate::gf::Field;
use crate::laurent::{q_pow, Laurent};
use crate::margulis::beta;
use crate::seed::trial_rng;

pub const DEFAULT_CAP: u128 = 1 << 24;

/// Deepest quotient the counting engine handles.
pub const MAX_DEPTH: u32 = 16;

/// M_{d,i}(O/π^k) over a given field, with an enumeration cap.
#[derive(Debug, Clone)]
pub struct QuotientMatrixSpace {
    pub field: Field,
    pub d: usize,
    pub i: usize,
    pub k: u32,
    pub cap: u128,
}

impl QuotientMatrixSpace {
    pub fn new(field: Field, d: usize, i: usize, k: u32) -> Result<QuotientMatrixSpace> {
        if i == 0 || i > d || d > 8 {
            return Err(Error::DimensionMismatch(format!("need 1 <= i <= d <= 8, got d={d} i={i}")));
        }
        if k > MAX_DEPTH {
            return Err(Error::OutOfRange(format!("depth {k} above {MAX_DEPTH}")));
        }
        Ok(QuotientMatrixSpace { field, d, i, k, cap: DEFAULT_CAP })
    }

    pub fn with_cap(mut self, cap: u128) -> QuotientMatrixSpace {
        self.cap = cap;
        self
    }

    /// q^{d·i·k}, or None on overflow.
    pub fn states(&self) -> Option<u128> {
        (self.field.q() as u128).checked_pow((self.d * self.i) as u32 * self.k)
    }

    fn check_cap(&self) -> Result<u128> {
        match self.states() {
            Some(s) if s <= self.cap => Ok(s),
            s => Err(Error::CapExceeded { states: s.unwrap_or(u128::MAX), cap: self.cap }),
        }
    }
}

/// Largest k with q^{d·i·k} <= cap.
pub fn max_feasible_depth(q: usize, d: usize, i: usize, cap: u128) -> u32 {
    let mut k = 0u32;
    while k < MAX_DEPTH && (q as u128).checked_pow((d * i) as u32 * (k + 1)).is_some_and(|s| s <= cap) {
        k += 1;
    }
    k
}

/// Predicate on the vector of capped minor valuations.
pub type ValuationPredicate = Arc<dyn Fn(&[u32]) -> bool + Send + Sync>;

/// Events determined by the valuations of the i×i minors c_I, listed in
/// lexicographic order of I.
#[derive(Clone)]
pub enum ValuationEvent {
    /// ‖s_1 ∧ ⋯ ∧ s_i‖ <= q^{-ℓ}.
    E(u32),
    /// E(ℓ) together with |c_{1..i}| <= q^{-ℓ′}.
    F(u32, u32),
    /// |c_I| = q^{-n_I} for every I.
    D(Vec<u32>),
    Custom { name: String, depth: u32, pred: ValuationPredicate },
}

impl fmt::Debug for ValuationEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationEvent::E(l) => write!(f, "E({l})"),
            ValuationEvent::F(l, lp) => write!(f, "F({l},{lp})"),
            ValuationEvent::D(n) => write!(f, "D({n:?})"),
            ValuationEvent::Custom { name, depth, .. } => write!(f, "{name}@{depth}"),
        }
    }
}

impl ValuationEvent {
    /// Smallest depth at which the event is a union of cylinders.
    pub fn depth_needed(&self) -> u32 {
        match self {
            ValuationEvent::E(l) => *l,
            ValuationEvent::F(l, lp) => (*l).max(*lp),
            ValuationEvent::D(n) => n.iter().max().map_or(0, |m| m + 1),
            ValuationEvent::Custom { depth, .. } => *depth,
        }
    }

    /// Membership from valuations capped at the depth (value k meaning >= k).
    pub fn contains(&self, vals: &[u32]) -> bool {
        match self {
            ValuationEvent::E(l) => vals.iter().all(|v| v >= l),
            ValuationEvent::F(l, lp) => vals.iter().all(|v| v >= l) && vals[0] >= *lp,
            ValuationEvent::D(n) => n.len() == vals.len() && n.iter().zip(vals).all(|(a, b)| a == b),
            ValuationEvent::Custom { pred, .. } => pred(vals),
        }
    }

    fn check_shape(&self, d: usize, i: usize) -> Result<()> {
        if let ValuationEvent::D(n) = self {
            let c = crate::exterior::binomial(d, i);
            if n.len() != c {
                return Err(Error::DimensionMismatch(format!("profile has {} entries, need C({d},{i}) = {c}", n.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    ExactCount { depth: u32, states: u128 },
    MonteCarlo { trials: u64, seed: u64, std_error: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult {
    pub value: f64,
    /// Present for exact counts; the denominator is a power of q.
    pub exact: Option<BigRational>,
    pub method: Method,
}

impl MeasureResult {
    pub fn from_exact(r: BigRational, depth: u32, states: u128) -> MeasureResult {
        MeasureResult { value: rat_f64(&r), exact: Some(r), method: Method::ExactCount { depth, states } }
    }

    pub fn from_mc(s: &McSummary, seed: u64) -> MeasureResult {
        MeasureResult {
            value: s.mean,
            exact: None,
            method: Method::MonteCarlo { trials: s.trials, seed, std_error: s.std_error },
        }
    }

    pub fn std_error(&self) -> f64 {
        match self.method {
            Method::MonteCarlo { std_error, .. } => std_error,
            Method::ExactCount { .. } => 0.0,
        }
    }
}

pub fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl McSummary {
    pub fn from_samples(v: &[f64]) -> McSummary {
        let n = v.len() as f64;
        if v.is_empty() {
            return McSummary { mean: 0.0, std_error: 0.0, trials: 0 };
        }
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        McSummary { mean, std_error: (var / n).sqrt(), trials: v.len() as u64 }
    }
}

/// Runs `trials` independent trials, trial j drawing from
/// `trial_rng(seed, j)`, and returns results in trial order.
pub fn monte_carlo<T, F>(trials: u64, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..trials).into_par_iter().map(|j| f(&mut trial_rng(seed, j))).collect()
}

/// Exact polynomial in π with uniform coefficients for π^0..π^{depth-1}.
pub fn sample_truncated(field: Field, depth: i64, rng: &mut impl Rng) -> Laurent {
    let q = field.q() as u8;
    let c: Vec<u8> = (0..depth.max(0)).map(|_| rng.random_range(0..q)).collect();
    Laurent::from_raw(field, 0, c, None)
}

/// Uniform element of M_{rows,cols}(O) modulo π^depth, as exact polynomials.
pub fn sample_truncated_block(field: Field, rows: usize, cols: usize, depth: i64, rng: &mut impl Rng) -> KMatrix {
    let e = (0..rows * cols).map(|_| sample_truncated(field, depth, rng)).collect();
    KMatrix::new(field, rows, cols, e).expect("shape matches")
}

/// Uniform element of M_{d1,d2}(O) known to precision k.
pub fn sample_o_matrix_with(field: Field, d1: usize, d2: usize, k: i64, rng: &mut impl Rng) -> KMatrix {
    let q = field.q() as u8;
    let e = (0..d1 * d2)
        .map(|_| {
            let c: Vec<u8> = (0..k.max(0)).map(|_| rng.random_range(0..q)).collect();
            Laurent::from_raw(field, 0, c, Some(k))
        })
        .collect();
    KMatrix::new(field, d1, d2, e).expect("shape matches")
}

pub fn sample_o_matrix(field: Field, d1: usize, d2: usize, k: i64, seed: u64) -> KMatrix {
    sample_o_matrix_with(field, d1, d2, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Haar sample from SL_d(O) to precision k: rejection-sample GL_d(O), then
/// right-multiply by diag(det^{-1}, 1, ..., 1). Returns the matrix and the
/// number of GL draws used.
pub fn sample_sl_o_with(field: Field, d: usize, k: i64, rng: &mut impl Rng) -> Result<(KMatrix, u64)> {
    if k < 1 {
        return Err(Error::OutOfRange("precision must be at least 1".into()));
    }
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        let mut g = sample_o_matrix_with(field, d, d, k, rng);
        let det = g.det()?;
        if det.coeff(0) == 0 {
            continue;
        }
        let u = det.inv_to(k)?;
        for r in 0..d {
            let v = g.get(r, 0).checked_mul(&u)?;
            g.set(r, 0, v);
        }
        return Ok((g, attempts));
    }
}

pub fn sample_sl_o(field: Field, d: usize, k: i64, seed: u64) -> Result<(KMatrix, u64)> {
    sample_sl_o_with(field, d, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Minor valuations of a d×i matrix, lexicographic in I, capped at k.
pub fn valuation_profile(s: &KMatrix, k: u32) -> Result<Vec<u32>> {
    let w = WedgeVector::wedge_columns(s)?;
    Ok(w.coords().iter().map(|c| c.valuation_lower_bound().map_or(k, |v| (v.max(0) as u32).min(k))).collect())
}

const KMAX: usize = MAX_DEPTH as usize;
type Series = [u8; KMAX];

/// Counts matrices over O/π^k by their capped minor valuations.
struct Counter {
    f: Field,
    q: usize,
    d: usize,
    i: usize,
    k: usize,
    /// Masks of each size j, with their Laplace terms (row, sub-mask, sign).
    expand: Vec<Vec<(u32, Vec<(usize, u32, bool)>)>>,
    leaf_masks: Vec<u32>,
    radix: u64,
    dense_len: Option<usize>,
}

enum Hist {
    Dense(Vec<u64>),
    Sparse(HashMap<u64, u64>),
}

impl Hist {
    fn add(&mut self, key: u64, n: u64) {
        match self {
            Hist::Dense(v) => v[key as usize] += n,
            Hist::Sparse(m) => *m.entry(key).or_insert(0) += n,
        }
    }

    fn merge(mut self, other: Hist) -> Hist {
        match other {
            Hist::Dense(v) => {
                for (k, n) in v.into_iter().enumerate() {
                    if n > 0 {
                        self.add(k as u64, n);
                    }
                }
            }
            Hist::Sparse(m) => {
                for (k, n) in m {
                    self.add(k, n);
                }
            }
        }
        self
    }

    fn entries(self) -> Vec<(u64, u64)> {
        let mut out: Vec<(u64, u64)> = match self {
            Hist::Dense(v) => v.into_iter().enumerate().filter(|e| e.1 > 0).map(|(k, n)| (k as u64, n)).collect(),
            Hist::Sparse(m) => m.into_iter().collect(),
        };
        out.sort_unstable();
        out
    }
}

impl Counter {
    fn new(space: &QuotientMatrixSpace) -> Result<Counter> {
        let d = space.d;
        let mut expand = vec![Vec::new(); space.i + 1];
        for (j, slot) in expand.iter_mut().enumerate().skip(1) {
            for mask in subsets(d, j) {
                let mut terms = Vec::new();
                let mut above = 0usize;
                for r in (0..d).rev() {
                    if mask & (1 << r) != 0 {
                        terms.push((r, mask & !(1 << r), above % 2 == 1));
                        above += 1;
                    }
                }
                slot.push((mask, terms));
            }
        }
        let leaf_masks = subsets(d, space.i);
        let radix = space.k as u64 + 1;
        let keys = (radix as u128).checked_pow(leaf_masks.len() as u32);
        if keys.is_none_or(|n| n > u64::MAX as u128) {
            return Err(Error::OutOfRange("too many valuation profiles to index".into()));
        }
        let keys = keys.unwrap();
        let dense_len = if keys <= 1 << 16 { Some(keys as usize) } else { None };
        Ok(Counter {
            f: space.field,
            q: space.field.q(),
            d,
            i: space.i,
            k: space.k as usize,
            expand,
            leaf_masks,
            radix,
            dense_len,
        })
    }

    fn new_hist(&self) -> Hist {
        match self.dense_len {
            Some(n) => Hist::Dense(vec![0; n]),
            None => Hist::Sparse(HashMap::new()),
        }
    }

    fn columns(&self) -> u64 {
        (self.q as u64).pow((self.d * self.k) as u32)
    }

    fn decode_column(&self, mut idx: u64, col: &mut [Series]) {
        for s in col.iter_mut() {
            for c in s.iter_mut().take(self.k) {
                *c = (idx % self.q as u64) as u8;
                idx /= self.q as u64;
            }
        }
    }

    fn mul_acc(&self, acc: &mut Series, a: &Series, b: &Series, negate: bool) {
        let k = self.k;
        for x in 0..k {
            let ax = a[x];
            if ax == 0 {
                continue;
            }
            for y in 0..k - x {
                let mut p = self.f.mul_raw(ax, b[y]);
                if negate {
                    p = self.f.neg_raw(p);
                }
                acc[x + y] = self.f.add_raw(acc[x + y], p);
            }
        }
    }

    fn valuation(&self, s: &Series) -> u64 {
        s[..self.k].iter().position(|&c| c != 0).unwrap_or(self.k) as u64
    }

    /// Minors of size j from minors of size j-1 and the j-th column.
    fn extend(&self, prev: &[Series], col: &[Series], j: usize, out: &mut [Series]) {
        for (mask, terms) in &self.expand[j] {
            let mut acc = [0u8; KMAX];
            for &(r, sub, neg) in terms {
                let base = if j == 1 { one_series() } else { prev[sub as usize] };
                self.mul_acc(&mut acc, &col[r], &base, neg);
            }
            out[*mask as usize] = acc;
        }
    }

    fn key(&self, minors: &[Series]) -> u64 {
        self.leaf_masks.iter().fold(0u64, |key, &m| key * self.radix + self.valuation(&minors[m as usize]))
    }

    /// Enumerates columns j.. given the minors of the first j columns.
    fn walk(&self, j: usize, prev: &[Series], hist: &mut Hist) {
        let mut col = vec![[0u8; KMAX]; self.d];
        let mut next = vec![[0u8; KMAX]; 1 << self.d];
        for idx in 0..self.columns() {
            self.decode_column(idx, &mut col);
            self.extend(prev, &col, j + 1, &mut next);
            if j + 1 == self.i {
                hist.add(self.key(&next), 1);
            } else {
                self.walk(j + 1, &next, hist);
            }
        }
    }

    fn run(&self) -> Vec<(Vec<u32>, u64)> {
        let empty = vec![[0u8; KMAX]; 1 << self.d];
        let hist = (0..self.columns())
            .into_par_iter()
            .fold(
                || self.new_hist(),
                |mut hist, idx| {
                    let mut col = vec![[0u8; KMAX]; self.d];
                    let mut first = vec![[0u8; KMAX]; 1 << self.d];
                    self.decode_column(idx, &mut col);
                    self.extend(&empty, &col, 1, &mut first);
                    if self.i == 1 {
                        hist.add(self.key(&first), 1);
                    } else {
                        self.walk(1, &first, &mut hist);
                    }
                    hist
                },
            )
            .reduce(|| self.new_hist(), Hist::merge);
        let c = self.leaf_masks.len();
        hist.entries()
            .into_iter()
            .map(|(mut key, n)| {
                let mut vals = vec![0u32; c];
                for v in vals.iter_mut().rev() {
                    *v = (key % self.radix) as u32;
                    key /= self.radix;
                }
                (vals, n)
            })
            .collect()
    }
}

fn one_series() -> Series {
    let mut s = [0u8; KMAX];
    s[0] = 1;
    s
}

/// Exact counts of matrices over O/π^k by capped minor valuations.
#[derive(Debug, Clone)]
pub struct ValuationHistogram {
    pub q: usize,
    pub d: usize,
    pub i: usize,
    pub k: u32,
    pub states: u128,
    pub counts: BTreeMap<Vec<u32>, u64>,
}

impl ValuationHistogram {
    pub fn compute(space: &QuotientMatrixSpace) -> Result<ValuationHistogram> {
        let states = space.check_cap()?;
        let counter = Counter::new(space)?;
        let counts = counter.run().into_iter().collect();
        Ok(ValuationHistogram { q: space.field.q(), d: space.d, i: space.i, k: space.k, states, counts })
    }

    /// μ(event) as count / q^{dik}.
    pub fn measure(&self, event: &ValuationEvent) -> Result<BigRational> {
        if event.depth_needed() > self.k {
            return Err(Error::InsufficientDepth { have: self.k, need: event.depth_needed() });
        }
        event.check_shape(self.d, self.i)?;
        let hits: u64 = self.counts.iter().filter(|(v, _)| event.contains(v)).map(|(_, n)| n).sum();
        Ok(BigRational::new(BigInt::from(hits), BigInt::from(self.states)))
    }
}

/// Exact μ(event) by enumeration of M_{d,i}(O/π^k).
pub fn exact_measure(space: &QuotientMatrixSpace, event: &ValuationEvent) -> Result<MeasureResult> {
    if event.depth_needed() > space.k {
        return Err(Error::InsufficientDepth { have: space.k, need: event.depth_needed() });
    }
    event.check_shape(space.d, space.i)?;
    let h = ValuationHistogram::compute(space)?;
    Ok(MeasureResult::from_exact(h.measure(event)?, space.k, h.states))
}

/// Monte Carlo μ(event) from uniform matrices truncated at the event depth.
pub fn monte_carlo_measure(field: Field, d: usize, i: usize, event: &ValuationEvent, trials: u64, seed: u64) -> Result<MeasureResult> {
    event.check_shape(d, i)?;
    let k = event.depth_needed().max(1);
    let hits = monte_carlo(trials, seed, |rng| {
        let s = sample_truncated_block(field, d, i, k as i64, rng);
        Ok(if event.contains(&valuation_profile(&s, k)?) { 1.0 } else { 0.0 })
    })?;
    Ok(MeasureResult::from_mc(&McSummary::from_samples(&hits), seed))
}

#[derive(Debug, Clone)]
pub struct EBoundRow {
    pub ell: u32,
    pub measure: BigRational,
    /// μ(E_ℓ)·q^{ℓ(d-i+1)}.
    pub ratio: BigRational,
}

#[derive(Debug, Clone)]
pub struct EBoundReport {
    pub d: usize,
    pub i: usize,
    pub rows: Vec<EBoundRow>,
    /// Empirical C_2: the sup of the ratios.
    pub sup: BigRational,
    /// log_q μ(E_{ℓ+1}) - log_q μ(E_ℓ) for consecutive ℓ.
    pub slopes: Vec<f64>,
}

pub fn verify_bound_e(field: Field, d: usize, i: usize, ell_max: u32, cap: u128) -> Result<EBoundReport> {
    let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(field, d, i, ell_max)?.with_cap(cap))?;
    let q = field.q();
    let gamma = (d - i + 1) as i64;
    let mut rows = Vec::new();
    for ell in 0..=ell_max {
        let measure = h.measure(&ValuationEvent::E(ell))?;
        let ratio = &measure * q_pow(q, gamma * ell as i64);
        rows.push(EBoundRow { ell, measure, ratio });
    }
    let sup = rows.iter().map(|r| r.ratio.clone()).max().unwrap_or_else(BigRational::zero);
    let lq = (q as f64).ln();
    let slopes = rows
        .windows(2)
        .map(|w| (rat_f64(&w[1].measure).ln() - rat_f64(&w[0].measure).ln()) / lq)
        .collect();
    Ok(EBoundReport { d, i, rows, sup, slopes })
}

#[derive(Debug, Clone)]
pub struct DBoundRow {
    pub profile: Vec<u32>,
    pub measure: BigRational,
    /// μ(D)·q^{max n_I + (d-i)·min n_I}.
    pub ratio: BigRational,
}

#[derive(Debug, Clone)]
pub struct DBoundReport {
    pub rows: Vec<DBoundRow>,
    pub fitted_c: BigRational,
}

pub fn verify_bound_d(field: Field, d: usize, i: usize, profiles: &[Vec<u32>], cap: u128) -> Result<DBoundReport> {
    let depth = profiles.iter().flatten().max().map_or(1, |m| m + 1);
    let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(field, d, i, depth)?.with_cap(cap))?;
    let q = field.q();
    let mut rows = Vec::new();
    for p in profiles {
        let measure = h.measure(&ValuationEvent::D(p.clone()))?;
        let mx = *p.iter().max().unwrap_or(&0) as i64;
        let mn = *p.iter().min().unwrap_or(&0) as i64;
        let ratio = &measure * q_pow(q, mx + (d - i) as i64 * mn);
        rows.push(DBoundRow { profile: p.clone(), measure, ratio });
    }
    let fitted_c = rows.iter().map(|r| r.ratio.clone()).max().unwrap_or_else(BigRational::zero);
    Ok(DBoundReport { rows, fitted_c })
}

/// Product formula for i = 1: ∏_j (q^{-n_j} - q^{-n_j-1}).
pub fn step0_product(q: usize, profile: &[u32]) -> BigRational {
    profile.iter().fold(BigRational::one(), |acc, &n| {
        acc * (q_pow(q, -(n as i64)) - q_pow(q, -(n as i64) - 1))
    })
}

/// μ(‖s_1 ∧ ⋯ ∧ s_i‖ = q^{-ℓ}) for ℓ = 0..levels, exactly.
fn level_measures(field: Field, d: usize, i: usize, levels: u32, cap: u128) -> Result<Vec<BigRational>> {
    let q = field.q();
    if i == 1 {
        let first = BigRational::one() - q_pow(q, -(d as i64));
        return Ok((0..levels).map(|l| &first * q_pow(q, -(l as i64) * d as i64)).collect());
    }
    let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(field, d, i, levels)?.with_cap(cap))?;
    (0..levels)
        .map(|l| Ok(h.measure(&ValuationEvent::E(l))? - h.measure(&ValuationEvent::E(l + 1))?))
        .collect()
}

/// sup_ℓ μ(E_ℓ) q^{ℓ(d-i+1)} over the given level measures; exactly 1 for
/// i = 1.
fn fitted_c2(q: usize, d: usize, i: usize, levels: &[BigRational]) -> BigRational {
    if i == 1 {
        return BigRational::one();
    }
    let gamma = (d - i + 1) as i64;
    let mut tail = BigRational::one();
    let mut best = BigRational::one();
    for (l, m) in levels.iter().enumerate() {
        let r = &tail * q_pow(q, gamma * l as i64);
        if r > best {
            best = r;
        }
        tail -= m;
    }
    let r = &tail * q_pow(q, gamma * levels.len() as i64);
    best.max(r)
}

#[derive(Debug, Clone)]
pub struct NegMoment {
    pub lower: f64,
    pub upper: Option<f64>,
    /// Exact bracket when β is an integer.
    pub exact: Option<(BigRational, Option<BigRational>)>,
    pub c2: BigRational,
    /// Tail bound is rigorous (i = 1) rather than based on a fitted C_2.
    pub rigorous: bool,
    pub divergent: bool,
    /// Partial sums for tail depths 0..=L.
    pub partial_sums: Vec<f64>,
}

impl NegMoment {
    pub fn width(&self) -> Option<f64> {
        self.upper.map(|u| u - self.lower)
    }
}

/// Bracket for E(‖x_1 ∧ ⋯ ∧ x_i‖^{-β}): partial sum over levels 0..=L plus
/// the geometric tail C_2 r^{L+1}/(1-r), r = q^{β-(d-i+1)}.
pub fn neg_moment(field: Field, d: usize, i: usize, beta_exp: Rational64, tail_depth: u32, cap: u128) -> Result<NegMoment> {
    if i == 0 || i > d {
        return Err(Error::DimensionMismatch(format!("need 1 <= i <= d, got d={d} i={i}")));
    }
    let q = field.q();
    let levels = level_measures(field, d, i, tail_depth + 1, cap)?;
    let c2 = fitted_c2(q, d, i, &levels);
    let gamma = Rational64::from_integer((d - i + 1) as i64);
    let divergent = beta_exp >= gamma;
    let bf = *beta_exp.numer() as f64 / *beta_exp.denom() as f64;
    let qf = q as f64;
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for (l, m) in levels.iter().enumerate() {
        acc += qf.powf(l as f64 * bf) * rat_f64(m);
        partial_sums.push(acc);
    }
    let r = qf.powf(bf - (d - i + 1) as f64);
    let upper = (!divergent).then(|| acc + rat_f64(&c2) * r.powi(tail_depth as i32 + 1) / (1.0 - r));
    let exact = if beta_exp.is_integer() {
        let b = beta_exp.to_integer();
        let lower: BigRational = levels.iter().enumerate().map(|(l, m)| m * q_pow(q, b * l as i64)).sum();
        let up = (!divergent).then(|| {
            let rr = q_pow(q, b - (d - i + 1) as i64);
            let tail = &c2 * rr.pow(tail_depth as i32 + 1) / (BigRational::one() - &rr);
            &lower + tail
        });
        Some((lower, up))
    } else {
        None
    };
    Ok(NegMoment { lower: acc, upper, exact, c2, rigorous: i == 1, divergent, partial_sums })
}

#[derive(Debug, Clone)]
pub struct TruncatedMoment {
    pub kappa: u32,
    pub value: BigRational,
    pub c2: BigRational,
    /// C_2·κ.
    pub bound: BigRational,
}

/// Σ_{ℓ<κ} q^{ℓ(d-i+1)} μ(level ℓ), exactly.
pub fn truncated_neg_moment(field: Field, d: usize, i: usize, kappa: u32, cap: u128) -> Result<TruncatedMoment> {
    if kappa < 1 {
        return Err(Error::OutOfRange("kappa must be at least 1".into()));
    }
    if i == 0 || i > d {
        return Err(Error::DimensionMismatch(format!("need 1 <= i <= d, got d={d} i={i}")));
    }
    let q = field.q();
    let levels = level_measures(field, d, i, kappa, cap)?;
    let c2 = fitted_c2(q, d, i, &levels);
    let gamma = (d - i + 1) as i64;
    let value: BigRational = levels.iter().enumerate().map(|(l, m)| m * q_pow(q, gamma * l as i64)).sum();
    let bound = &c2 * BigRational::from_integer(BigInt::from(kappa));
    Ok(TruncatedMoment { kappa, value, c2, bound })
}

fn check_degree(v: &WedgeVector, d: usize) -> Result<usize> {
    let i = v.degree();
    if v.dim() != d || i == 0 || i >= d {
        return Err(Error::DimensionMismatch(format!("need a degree 1..{} vector in dimension {d}", d - 1)));
    }
    Ok(i)
}

fn beta_f64(m: usize, n: usize, i: usize) -> Result<f64> {
    let b = beta(m, n, i)?;
    Ok(*b.numer() as f64 / *b.denom() as f64)
}

/// Monte Carlo ∫_{M_{m,n}(O)} ‖g_t u_s v‖^{-β_i} ds. The integrand depends
/// only on s mod π^{(m+n)t}, so s is drawn exactly at that depth.
pub fn contraction_integral_u(field: Field, m: usize, n: usize, t: u32, v: &WedgeVector, trials: u64, seed: u64) -> Result<MeasureResult> {
    let i = check_degree(v, m + n)?;
    let b = beta_f64(m, n, i)?;
    let spec = FlowSpec::new(m, n, t as i64)?;
    let g = flow_matrix(field, &spec);
    let depth = ((m + n) as i64) * t as i64;
    let q = field.q() as f64;
    let vals = monte_carlo(trials, seed, |rng| {
        let s = sample_truncated_block(field, m, n, depth, rng);
        let w = v.apply(&g.mul(&horospherical(field, m, n, &s)?)?)?;
        let e = w.sup_norm()?.exponent().ok_or(Error::DivisionByZero)?;
        Ok(q.powf(-b * e as f64))
    })?;
    Ok(MeasureResult::from_mc(&McSummary::from_samples(&vals), seed))
}

/// Monte Carlo ∫_{SL_{m+n}(O)} ‖g_t k v‖^{-β_i} dk with Haar samples.
pub fn contraction_integral_sl(field: Field, m: usize, n: usize, t: u32, v: &WedgeVector, trials: u64, seed: u64) -> Result<MeasureResult> {
    let i = check_degree(v, m + n)?;
    if i > m {
        return Err(Error::OutOfRange(format!("degree {i} exceeds m = {m}")));
    }
    let b = beta_f64(m, n, i)?;
    let spec = FlowSpec::new(m, n, t as i64)?;
    let g = flow_matrix(field, &spec);
    let lead = v.coords().iter().filter_map(|c| c.valuation_lower_bound()).min().unwrap_or(0);
    let prec = lead.max(0) + ((m + n) as i64) * t as i64 * i as i64 + 8;
    let q = field.q() as f64;
    let vals = monte_carlo(trials, seed, |rng| {
        let (k, _) = sample_sl_o_with(field, m + n, prec, rng)?;
        let w = v.apply(&g.mul(&k)?)?;
        let e = w.sup_norm()?.exponent().ok_or(Error::DivisionByZero)?;
        Ok(q.powf(-b * e as f64))
    })?;
    Ok(MeasureResult::from_mc(&McSummary::from_samples(&vals), seed))
}

/// e_I for a 1-based index set.
pub fn basis_wedge(field: Field, d: usize, idx: &[usize]) -> Result<WedgeVector> {
    Ok(WedgeVector::basis(field, &SubsetIndex::new(d, idx.to_vec())?))
}
