//! The diagonal flow g_t, horospherical u_s, Dani scans, trajectories,
//! escape statistics and cylinder covering counts.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{KMatrix, WedgeVector};
use crate::gf::Field;
use crate::lattice::PolyLattice;
use crate::laurent::{AbsValue, Laurent};
use crate::margulis::MargulisParams;
use crate::measure::{monte_carlo, sample_truncated_block, McSummary, MeasureResult};
use crate::poly::Poly;

/// Block sizes m, n and the integer time step t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlowSpec {
    pub m: usize,
    pub n: usize,
    pub t: i64,
}

impl FlowSpec {
    pub fn new(m: usize, n: usize, t: i64) -> Result<FlowSpec> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch("block sizes must be positive".into()));
        }
        Ok(FlowSpec { m, n, t })
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// (m+n)t: the s-depth one flow step resolves.
    pub fn block_depth(&self) -> i64 {
        self.dim() as i64 * self.t
    }
}

/// g_t = diag(π^{-nt} I_m, π^{mt} I_n).
pub fn flow_matrix(field: Field, spec: &FlowSpec) -> KMatrix {
    let mut e = vec![-(spec.n as i64) * spec.t; spec.m];
    e.extend(std::iter::repeat_n(spec.m as i64 * spec.t, spec.n));
    KMatrix::diag_pi(field, &e)
}

/// u_s = [[I_m, s], [0, I_n]].
pub fn horospherical(field: Field, m: usize, n: usize, s: &KMatrix) -> Result<KMatrix> {
    if s.rows() != m || s.cols() != n {
        return Err(Error::DimensionMismatch(format!("s is {}x{}, expected {m}x{n}", s.rows(), s.cols())));
    }
    let d = m + n;
    let mut u = KMatrix::identity(field, d);
    for r in 0..m {
        for c in 0..n {
            u.set(r, m + c, s.get(r, c).clone());
        }
    }
    Ok(u)
}

/// l_s = [[I_m, 0], [s, I_n]] for an n×m matrix s.
pub fn lower_horospherical(field: Field, m: usize, n: usize, s: &KMatrix) -> Result<KMatrix> {
    if s.rows() != n || s.cols() != m {
        return Err(Error::DimensionMismatch(format!("s is {}x{}, expected {n}x{m}", s.rows(), s.cols())));
    }
    let mut l = KMatrix::identity(field, m + n);
    for r in 0..n {
        for c in 0..m {
            l.set(m + r, c, s.get(r, c).clone());
        }
    }
    Ok(l)
}

/// E = [[0, I_n], [I_m, 0]], sending (x, y) ∈ K^m × K^n to (y, x).
pub fn swap_matrix(field: Field, m: usize, n: usize) -> KMatrix {
    let d = m + n;
    let mut e = KMatrix::zeros(field, d, d);
    for r in 0..d {
        let c = if r < n { m + r } else { r - n };
        e.set(r, c, Laurent::one(field));
    }
    e
}

/// Checks E g_{-t} l_s w = g̃_t ũ_s E w exactly, where g̃ and ũ are the flow
/// and horospherical maps with the roles of m and n exchanged.
pub fn duality_flow_check(w: &WedgeVector, s: &KMatrix, spec: &FlowSpec) -> Result<bool> {
    let f = w.field();
    let (m, n) = (spec.m, spec.n);
    if w.dim() != m + n {
        return Err(Error::DimensionMismatch("wedge dimension differs from m+n".into()));
    }
    let e = swap_matrix(f, m, n);
    let back = FlowSpec::new(m, n, -spec.t)?;
    let lhs = e.mul(&flow_matrix(f, &back))?.mul(&lower_horospherical(f, m, n, s)?)?;
    let dual = FlowSpec::new(n, m, spec.t)?;
    let rhs = flow_matrix(f, &dual).mul(&horospherical(f, n, m, s)?)?.mul(&e)?;
    let a = w.apply(&lhs)?;
    let b = w.apply(&rhs)?;
    for (x, y) in a.coords().iter().zip(b.coords()) {
        let diff = x.checked_sub(y)?;
        let same = if diff.is_exact() { diff.is_zero() } else { diff.is_zero_to_precision() };
        if !same {
            return Ok(false);
        }
    }
    Ok(true)
}

/// φ(s_1, …, s_N) = Σ π^{(i-1)(m+n)t} s_i.
pub fn phi_combine(blocks: &[KMatrix], spec: &FlowSpec) -> Result<KMatrix> {
    let first = blocks.first().ok_or_else(|| Error::OutOfRange("no blocks".into()))?;
    let mut acc = KMatrix::zeros(first.field(), first.rows(), first.cols());
    for (i, b) in blocks.iter().enumerate() {
        acc = acc.add(&b.map(|x| x.shift(i as i64 * spec.block_depth())))?;
    }
    Ok(acc)
}

/// Histogram of φ(s_1, …, s_N) mod π^k over all blocks s_i mod π^k, indexed
/// by the class of φ (coefficients read as base-q digits).
pub fn phi_pushforward_counts(field: Field, spec: &FlowSpec, n_blocks: usize, k: u32, cap: u128) -> Result<Vec<u64>> {
    let q = field.q() as u128;
    let per_block = q.checked_pow((spec.m * spec.n) as u32 * k).ok_or(Error::CapExceeded { states: u128::MAX, cap })?;
    let total = per_block.checked_pow(n_blocks as u32).unwrap_or(u128::MAX);
    if total > cap {
        return Err(Error::CapExceeded { states: total, cap });
    }
    let mn = spec.m * spec.n;
    let decode = |mut idx: u128| -> KMatrix {
        let e = (0..mn)
            .map(|_| {
                let c: Vec<u8> = (0..k).map(|_| {
                    let x = (idx % q) as u8;
                    idx /= q;
                    x
                }).collect();
                Laurent::from_raw(field, 0, c, None)
            })
            .collect();
        KMatrix::new(field, spec.m, spec.n, e).expect("shape matches")
    };
    let mut counts = vec![0u64; per_block as usize];
    for combo in 0..total {
        let mut rest = combo;
        let blocks: Vec<KMatrix> = (0..n_blocks)
            .map(|_| {
                let b = decode(rest % per_block);
                rest /= per_block;
                b
            })
            .collect();
        let phi = phi_combine(&blocks, spec)?;
        let mut class = 0u128;
        for x in phi.entries().iter().rev() {
            for j in (0..k as i64).rev() {
                class = class * q + x.coeff(j) as u128;
            }
        }
        counts[class as usize] += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub step: usize,
    /// `log_q α_i` for i = 0..=d.
    pub alpha_exps: Vec<i64>,
    pub alpha_tilde: f64,
    /// α̃ <= M.
    pub in_compact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub spec: FlowSpec,
    pub big_m: f64,
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryRecord {
    pub fn alpha_tildes(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.alpha_tilde).collect()
    }
}

/// Truncates s to exponents below `depth`, failing if s is not known that
/// far.
fn truncate_for_depth(s: &KMatrix, depth: i64) -> Result<KMatrix> {
    if let Some(p) = s.precision() {
        if p < depth {
            return Err(Error::InsufficientPrecision { required: depth, available: p });
        }
    }
    Ok(s.truncate_exact(depth))
}

/// Lattices g_{ℓt} u_s x for ℓ = 1..=N with s exact.
fn orbit(x: &PolyLattice, s: &KMatrix, spec: &FlowSpec, n_steps: usize) -> Result<Vec<PolyLattice>> {
    let f = x.field();
    let g = flow_matrix(f, spec);
    let mut cur = x.transform(&horospherical(f, spec.m, spec.n, s)?)?;
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        cur = cur.transform_reduced(&g)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Heights along g_{ℓt} u_s x, ℓ = 1..=N. Only s mod π^{(m+n)Nt} matters, so
/// s must be known to that precision.
pub fn trajectory(
    x: &PolyLattice,
    s: &KMatrix,
    spec: &FlowSpec,
    n_steps: usize,
    params: &MargulisParams,
    big_m: f64,
) -> Result<TrajectoryRecord> {
    if x.dim() != spec.dim() || params.dim() != spec.dim() {
        return Err(Error::DimensionMismatch("lattice, flow and weights disagree on dimension".into()));
    }
    let s = truncate_for_depth(s, spec.block_depth() * n_steps as i64)?;
    let q = x.field().q();
    let steps = orbit(x, &s, spec, n_steps)?
        .iter()
        .enumerate()
        .map(|(l, y)| {
            let alpha_exps = y.alpha_exponents()?;
            let alpha_tilde = params.alpha_tilde_from_exponents(q, &alpha_exps);
            Ok(TrajectoryStep { step: l + 1, alpha_exps, alpha_tilde, in_compact: alpha_tilde <= big_m })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryRecord { spec: *spec, big_m, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Verdict {
    /// α̃ exceeds M_div, never returns, and is monotone over the last 5 steps.
    Divergent,
    /// α̃ never exceeds M_div.
    Bounded,
    Borderline,
}

pub fn divergence_verdict(record: &TrajectoryRecord, m_div: f64) -> Verdict {
    let a = record.alpha_tildes();
    if a.iter().all(|&v| v <= m_div) {
        return Verdict::Bounded;
    }
    let stays = a.iter().rposition(|&v| v <= m_div).map_or(0, |p| p + 1);
    let tail = &a[a.len().saturating_sub(5)..];
    if stays < a.len() && tail.windows(2).all(|w| w[1] >= w[0]) {
        Verdict::Divergent
    } else {
        Verdict::Borderline
    }
}

/// Fraction of steps with α̃ > M, and whether it reaches δ.
pub fn escape_fraction(record: &TrajectoryRecord, delta: f64) -> (bool, f64) {
    if record.steps.is_empty() {
        return (delta <= 0.0, 0.0);
    }
    let out = record.steps.iter().filter(|s| !s.in_compact).count() as f64;
    let frac = out / record.steps.len() as f64;
    (frac >= delta, frac)
}

/// C″(x) = max{1, max_i α_i(x)^{β_i}}.
pub fn c_double_prime(x: &PolyLattice, params: &MargulisParams) -> Result<f64> {
    let q = x.field().q() as f64;
    let a = x.alpha_exponents()?;
    Ok(a.iter().zip(&params.betas).map(|(&e, &b)| q.powf(e as f64 * b)).fold(1.0, f64::max))
}

/// α̃ along g_{ℓt} u_s x, ℓ = 1..=N, for uniform s per trial.
pub fn sample_alpha_tilde_paths(
    x: &PolyLattice,
    params: &MargulisParams,
    n_steps: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let f = x.field();
    let spec = FlowSpec::new(params.m, params.n, params.t as i64)?;
    let depth = spec.block_depth() * n_steps as i64;
    let q = f.q();
    monte_carlo(trials, seed, |rng| {
        let s = sample_truncated_block(f, spec.m, spec.n, depth, rng);
        orbit(x, &s, &spec, n_steps)?
            .iter()
            .map(|y| Ok(params.alpha_tilde_from_exponents(q, &y.alpha_exponents()?)))
            .collect()
    })
}

/// Monte Carlo μ(Z_x(M, N', t)) for N' = 0..=N from shared samples.
pub fn measure_z_profile(
    x: &PolyLattice,
    params: &MargulisParams,
    big_m: f64,
    n_steps: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<MeasureResult>> {
    let paths = sample_alpha_tilde_paths(x, params, n_steps, trials, seed)?;
    Ok((0..=n_steps)
        .map(|nn| {
            let v: Vec<f64> = paths
                .iter()
                .map(|p| if p[..nn].iter().all(|&a| a > big_m) { 1.0 } else { 0.0 })
                .collect();
            MeasureResult::from_mc(&McSummary::from_samples(&v), seed)
        })
        .collect())
}

pub fn measure_z(
    x: &PolyLattice,
    params: &MargulisParams,
    big_m: f64,
    n_steps: usize,
    trials: u64,
    seed: u64,
) -> Result<MeasureResult> {
    Ok(measure_z_profile(x, params, big_m, n_steps, trials, seed)?.pop().expect("nonempty profile"))
}

/// Number of depth-(m+n)tN cylinders of M_{m,n}(O) whose points s have
/// α̃(g_{ℓt} u_s x) > M for at least ⌈δN⌉ of ℓ = 1..=N. Membership is
/// constant on such cylinders, so the count is exact.
pub fn escape_count(
    x: &PolyLattice,
    params: &MargulisParams,
    big_m: f64,
    n_steps: usize,
    delta: f64,
    cap: u128,
) -> Result<u128> {
    let f = x.field();
    let spec = FlowSpec::new(params.m, params.n, params.t as i64)?;
    if x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch("lattice dimension differs from m+n".into()));
    }
    let q = f.q() as u128;
    let b = spec.block_depth() as u32;
    let mn = (spec.m * spec.n) as u32;
    let children = q.checked_pow(mn * b).ok_or(Error::CapExceeded { states: u128::MAX, cap })?;
    let total = children.checked_pow(n_steps as u32).unwrap_or(u128::MAX);
    if total > cap {
        return Err(Error::CapExceeded { states: total, cap });
    }
    if n_steps == 0 {
        return Ok(1);
    }
    let need = (delta * n_steps as f64 - 1e-9).ceil().max(0.0) as usize;
    let allowed = n_steps.saturating_sub(need);
    let sweep = CylinderSweep {
        q: f.q(),
        spec,
        g: flow_matrix(f, &spec),
        params,
        big_m,
        n_steps,
        allowed,
        children: children as u64,
        block: b,
    };
    let start = x.reduce_basis()?;
    let counts = (0..children as u64)
        .into_par_iter()
        .map(|c| sweep.descend(&start, c, 1, 0))
        .collect::<Result<Vec<u128>>>()?;
    Ok(counts.into_iter().sum())
}

/// Depth-first search over s one flow block at a time: refining s below
/// π^{(ℓ-1)(m+n)t} acts on g_{(ℓ-1)t} u_s x by u_r with r ∈ M_{m,n}(O) of
/// depth (m+n)t.
struct CylinderSweep<'a> {
    q: usize,
    spec: FlowSpec,
    g: KMatrix,
    params: &'a MargulisParams,
    big_m: f64,
    n_steps: usize,
    allowed: usize,
    children: u64,
    block: u32,
}

impl CylinderSweep<'_> {
    fn block_matrix(&self, mut idx: u64, field: Field) -> KMatrix {
        let q = self.q as u64;
        let e = (0..self.spec.m * self.spec.n)
            .map(|_| {
                let c: Vec<u8> = (0..self.block)
                    .map(|_| {
                        let x = (idx % q) as u8;
                        idx /= q;
                        x
                    })
                    .collect();
                Laurent::from_raw(field, 0, c, None)
            })
            .collect();
        KMatrix::new(field, self.spec.m, self.spec.n, e).expect("shape matches")
    }

    fn descend(&self, prev: &PolyLattice, child: u64, level: usize, failures: usize) -> Result<u128> {
        let f = prev.field();
        let r = self.block_matrix(child, f);
        let u = horospherical(f, self.spec.m, self.spec.n, &r)?;
        let cur = prev.transform_reduced(&self.g.mul(&u)?)?;
        let a = self.params.alpha_tilde_from_exponents(self.q, &cur.alpha_exponents()?);
        let failures = failures + usize::from(a <= self.big_m);
        if failures > self.allowed {
            return Ok(0);
        }
        if level == self.n_steps {
            return Ok(1);
        }
        let mut total = 0u128;
        for c in 0..self.children {
            total += self.descend(&cur, c, level + 1, failures)?;
        }
        Ok(total)
    }
}

pub fn covering_count(x: &PolyLattice, params: &MargulisParams, big_m: f64, n_steps: usize, cap: u128) -> Result<u128> {
    escape_count(x, params, big_m, n_steps, 1.0, cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxRow {
    pub n_steps: usize,
    /// Cylinders have radius q^{-radius_exp}.
    pub radius_exp: i64,
    pub count: u128,
    /// log_q(count) / radius_exp.
    pub slope: f64,
    /// (m+n-δ)mn/(m+n).
    pub target: f64,
}

pub fn box_dimension_estimate(
    x: &PolyLattice,
    params: &MargulisParams,
    big_m: f64,
    delta: f64,
    n_values: &[usize],
    cap: u128,
) -> Result<Vec<BoxRow>> {
    let q = x.field().q() as f64;
    let (m, n) = (params.m as f64, params.n as f64);
    let target = (m + n - delta) * m * n / (m + n);
    n_values
        .iter()
        .map(|&nn| {
            let count = escape_count(x, params, big_m, nn, delta, cap)?;
            let radius_exp = (params.m + params.n) as i64 * params.t as i64 * nn as i64;
            let slope = if count == 0 || radius_exp == 0 {
                f64::NEG_INFINITY
            } else {
                (count as f64).ln() / q.ln() / radius_exp as f64
            };
            Ok(BoxRow { n_steps: nn, radius_exp, count, slope, target })
        })
        .collect()
}

/// Best Dani witness for T = q^τ.
#[derive(Debug, Clone, PartialEq)]
pub struct DaniWitness {
    pub t_exp: u32,
    pub p: Vec<Poly>,
    pub q_vec: Vec<Poly>,
    /// `log_q ‖s·q_vec + p‖`; None for an exact zero.
    pub defect_exp: Option<i64>,
    /// The defect is only known to be at most q^{defect_exp}.
    pub defect_is_bound: bool,
    /// defect <= ε T^{-n/m}.
    pub passes: bool,
}

#[derive(Debug, Clone)]
struct Candidate {
    degree: usize,
    p: Vec<Poly>,
    q_vec: Vec<Poly>,
    defect: AbsValue,
    is_bound: bool,
}

fn poly_vectors(field: Field, n: usize, max_deg: usize) -> Vec<Vec<Poly>> {
    let polys: Vec<Poly> = Poly::enumerate(field, max_deg).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                polys.iter().map(move |p| {
                    let mut w = v.clone();
                    w.push(p.clone());
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|p| !p.is_zero()));
    out
}

fn dani_candidate(s: &KMatrix, q_vec: Vec<Poly>) -> Result<Candidate> {
    let lq: Vec<Laurent> = q_vec.iter().map(Poly::to_laurent).collect();
    let y = s.mul_vec(&lq)?;
    let mut p = Vec::with_capacity(y.len());
    let mut defect = AbsValue::Zero;
    let mut is_bound = false;
    let mut known = AbsValue::Zero;
    for yi in &y {
        p.push(yi.polynomial_part()?.neg());
        let frac = yi.fractional_part();
        if frac.is_nonzero() {
            known = known.max(frac.abs()?);
        } else if !frac.is_exact() {
            let up = frac.abs_upper();
            if up > known {
                is_bound = true;
            }
        }
        defect = defect.max(frac.abs_upper());
    }
    if known >= defect {
        is_bound = false;
    }
    let degree = q_vec.iter().filter_map(Poly::degree).max().unwrap_or(0);
    Ok(Candidate { degree, p, q_vec, defect, is_bound })
}

/// For T = q^1..q^{τ_max}: the q_vec with ‖q_vec‖ <= T minimizing
/// ‖s·q_vec + p‖, where p is minus the polynomial part of s·q_vec, and
/// whether that defect is at most ε T^{-n/m}, ε = q^{eps_exp}.
pub fn dani_scan(s: &KMatrix, eps_exp: i64, t_max_exp: u32, cap: u128) -> Result<Vec<DaniWitness>> {
    let f = s.field();
    let (m, n) = (s.rows(), s.cols());
    let count = (f.q() as u128).checked_pow(n as u32 * (t_max_exp + 1)).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::CapExceeded { states: count, cap });
    }
    let cands = poly_vectors(f, n, t_max_exp as usize)
        .into_par_iter()
        .map(|v| dani_candidate(s, v))
        .collect::<Result<Vec<_>>>()?;
    // best per maximal degree, first in enumeration order on ties
    let mut best_by_deg: Vec<Option<&Candidate>> = vec![None; t_max_exp as usize + 1];
    for c in &cands {
        let slot = &mut best_by_deg[c.degree];
        if slot.is_none_or(|b| c.defect < b.defect) {
            *slot = Some(c);
        }
    }
    let mut out = Vec::new();
    let mut best: Option<&Candidate> = None;
    for tau in 0..=t_max_exp {
        if let Some(c) = best_by_deg[tau as usize] {
            if best.is_none_or(|b| c.defect < b.defect) {
                best = Some(c);
            }
        }
        if tau == 0 {
            continue;
        }
        let c = best.expect("degree-0 vectors exist");
        // defect <= q^{eps} q^{-τn/m}  <=>  m·log_q(defect) <= m·eps - τn
        let limit = m as i64 * eps_exp - tau as i64 * n as i64;
        let passes = match c.defect.exponent() {
            None => true,
            Some(e) => m as i64 * e <= limit,
        };
        if !passes && c.is_bound {
            let need = (-limit).div_euclid(m as i64) + 1 + tau as i64;
            return Err(Error::InsufficientPrecision { required: need, available: s.precision().unwrap_or(i64::MAX) });
        }
        out.push(DaniWitness {
            t_exp: tau,
            p: c.p.clone(),
            q_vec: c.q_vec.clone(),
            defect_exp: c.defect.exponent(),
            defect_is_bound: c.is_bound,
            passes,
        });
    }
    Ok(out)
}

/// Singular when every T in the upper half of the scanned range passes.
pub fn dani_verdict(witnesses: &[DaniWitness]) -> bool {
    let top = witnesses.iter().map(|w| w.t_exp).max().unwrap_or(0);
    witnesses.iter().filter(|w| 2 * w.t_exp >= top).all(|w| w.passes)
}

/// Exact cylinder measure μ(Z) = count · q^{-mn(m+n)tN}.
pub fn covering_measure(count: u128, q: usize, params: &MargulisParams, n_steps: usize) -> BigRational {
    let e = (params.m * params.n * (params.m + params.n)) as i64 * params.t as i64 * n_steps as i64;
    BigRational::from_integer(count.into()) * crate::laurent::q_pow(q, -e)
}
