//! Exponents β_i, the height α̃ = Σ (ω_i α_i)^{β_i}, weight fitting and
//! Monte Carlo checks of the averaged contraction inequalities.

use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{flow_matrix, horospherical, FlowSpec};
use crate::error::{Error, Result};
use crate::lattice::PolyLattice;
use crate::measure::{monte_carlo, sample_truncated_block, McSummary};

/// β_i = m/i for i <= m and n/(m+n-i) for i > m, 1 <= i <= m+n-1.
pub fn beta(m: usize, n: usize, i: usize) -> Result<Rational64> {
    let d = m + n;
    if m == 0 || n == 0 || i == 0 || i >= d {
        return Err(Error::OutOfRange(format!("beta index {i} outside 1..{}", d.saturating_sub(1))));
    }
    Ok(if i <= m {
        Rational64::new(m as i64, i as i64)
    } else {
        Rational64::new(n as i64, (d - i) as i64)
    })
}

fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Weights, exponents and threshold defining α̃ for a flow with blocks m, n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MargulisParams {
    pub m: usize,
    pub n: usize,
    pub t: u32,
    /// β_0..β_d, with the convention β_0 = β_d = 1.
    pub betas: Vec<f64>,
    /// ω_0..ω_d.
    pub omegas: Vec<f64>,
    pub threshold: f64,
}

impl MargulisParams {
    /// Unit weights and threshold 0.
    pub fn new(m: usize, n: usize, t: u32) -> Result<MargulisParams> {
        let d = m + n;
        let mut betas = vec![1.0; d + 1];
        for (i, b) in betas.iter_mut().enumerate().take(d).skip(1) {
            *b = ratio_f64(beta(m, n, i)?);
        }
        Ok(MargulisParams { m, n, t, betas, omegas: vec![1.0; d + 1], threshold: 0.0 })
    }

    pub fn with_omegas(mut self, omegas: Vec<f64>) -> Result<MargulisParams> {
        if omegas.len() != self.m + self.n + 1 || omegas.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::OutOfRange("need m+n+1 positive weights".into()));
        }
        self.omegas = omegas;
        Ok(self)
    }

    pub fn with_threshold(mut self, threshold: f64) -> MargulisParams {
        self.threshold = threshold;
        self
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// α̃ from `log_q α_i`, i = 0..=d.
    pub fn alpha_tilde_from_exponents(&self, q: usize, alpha_exps: &[i64]) -> f64 {
        let qf = q as f64;
        alpha_exps
            .iter()
            .zip(&self.omegas)
            .zip(&self.betas)
            .map(|((&a, &w), &b)| (w * qf.powi(a as i32)).powf(b))
            .sum()
    }

    /// max_i q^{mntβ_i}: the one-step growth bound of α̃.
    pub fn one_step_bound(&self, q: usize) -> f64 {
        let mnt = (self.m * self.n) as f64 * self.t as f64;
        self.betas.iter().map(|b| (q as f64).powf(mnt * b)).fold(1.0, f64::max)
    }
}

pub fn alpha_tilde(x: &PolyLattice, params: &MargulisParams) -> Result<f64> {
    if x.dim() != params.dim() {
        return Err(Error::DimensionMismatch("lattice dimension differs from m+n".into()));
    }
    Ok(params.alpha_tilde_from_exponents(x.field().q(), &x.alpha_exponents()?))
}

/// `log_q α_i` (i = 0..=d) of g_t u_s x for uniform s at the exact depth
/// (m+n)t, one entry per trial.
fn one_step_alpha_samples(x: &PolyLattice, m: usize, n: usize, t: u32, trials: u64, seed: u64) -> Result<Vec<Vec<i64>>> {
    let f = x.field();
    let spec = FlowSpec::new(m, n, t as i64)?;
    let g = flow_matrix(f, &spec);
    let depth = ((m + n) as i64) * t as i64;
    let base = x.reduced_basis()?.clone();
    monte_carlo(trials, seed, |rng| {
        let s = sample_truncated_block(f, m, n, depth, rng);
        let u = horospherical(f, m, n, &s)?;
        let y = PolyLattice::new_unchecked(g.mul(&u)?.mul(&base)?);
        y.alpha_exponents()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearGrowthReport {
    pub i: usize,
    pub t: u32,
    pub lhs: McSummary,
    /// t q^{-mnt} α_i(x)^{β_i}, the coefficient of the fitted c.
    pub term1: f64,
    /// q^{2mntβ_i} max_j (α_{i+j}(x) α_{i-j}(x))^{β_i/2}.
    pub term2: f64,
    /// Smallest c >= 0 with lhs <= c·term1 + term2.
    pub fitted_c: f64,
}

/// Monte Carlo left side of the single-height contraction inequality with
/// both right-hand terms and the fitted constant.
pub fn check_linear_growth(x: &PolyLattice, m: usize, n: usize, i: usize, t: u32, trials: u64, seed: u64) -> Result<LinearGrowthReport> {
    let d = m + n;
    if x.dim() != d {
        return Err(Error::DimensionMismatch("lattice dimension differs from m+n".into()));
    }
    let b = ratio_f64(beta(m, n, i)?);
    let q = x.field().q() as f64;
    let samples = one_step_alpha_samples(x, m, n, t, trials, seed)?;
    let vals: Vec<f64> = samples.iter().map(|a| q.powf(a[i] as f64 * b)).collect();
    let lhs = McSummary::from_samples(&vals);
    let ax = x.alpha_exponents()?;
    let mnt = (m * n) as f64 * t as f64;
    let term1 = t as f64 * q.powf(-mnt) * q.powf(ax[i] as f64 * b);
    let jmax = i.min(d - i);
    let best = (1..=jmax).map(|j| (ax[i + j] + ax[i - j]) as f64 / 2.0).fold(f64::NEG_INFINITY, f64::max);
    let term2 = q.powf(2.0 * mnt * b) * q.powf(best * b);
    let fitted_c = ((lhs.mean - term2) / term1).max(0.0);
    Ok(LinearGrowthReport { i, t, lhs, term1, term2, fitted_c })
}

/// Precomputed one-step heights for a set of lattices, shared by every
/// weight vector tried during fitting.
struct FitData {
    q: usize,
    x_alphas: Vec<Vec<i64>>,
    step_alphas: Vec<Vec<Vec<i64>>>,
}

impl FitData {
    fn new(samples: &[PolyLattice], m: usize, n: usize, t: u32, trials: u64, seed: u64) -> Result<FitData> {
        let q = samples.first().ok_or_else(|| Error::OutOfRange("no sample lattices".into()))?.field().q();
        let x_alphas = samples.iter().map(|x| x.alpha_exponents()).collect::<Result<Vec<_>>>()?;
        // common random numbers: the same seed for every lattice
        let step_alphas = samples
            .iter()
            .map(|x| one_step_alpha_samples(x, m, n, t, trials, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(FitData { q, x_alphas, step_alphas })
    }

    /// (threshold, K, number of lattices above the threshold).
    fn evaluate(&self, params: &MargulisParams, threshold: Option<f64>) -> (f64, f64, usize) {
        let at: Vec<f64> = self.x_alphas.iter().map(|a| params.alpha_tilde_from_exponents(self.q, a)).collect();
        let thr = threshold.unwrap_or_else(|| percentile(&at, 0.9));
        let mnt = (params.m * params.n) as f64 * params.t as f64;
        let scale = params.t as f64 * (self.q as f64).powf(-mnt);
        let per: Vec<Option<f64>> = (0..at.len())
            .into_par_iter()
            .map(|k| {
                if at[k] <= thr {
                    return None;
                }
                let steps = &self.step_alphas[k];
                let mean = steps.iter().map(|a| params.alpha_tilde_from_exponents(self.q, a)).sum::<f64>()
                    / steps.len().max(1) as f64;
                Some(mean / (scale * at[k]))
            })
            .collect();
        let active = per.iter().flatten().count();
        let k = per.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        (thr, k, active)
    }
}

/// Nearest-rank percentile.
fn percentile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return 0.0;
    }
    let rank = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightFit {
    pub params: MargulisParams,
    /// `log_q ω_i` for i = 0..=d.
    pub log_omegas: Vec<i32>,
    pub k: f64,
    /// Number of sample lattices above the threshold.
    pub active: usize,
    /// True when no sample exceeds the threshold, so K is vacuous.
    pub vacuous: bool,
}

pub const WEIGHT_GRID: std::ops::RangeInclusive<i32> = -8..=8;

/// Coordinate descent on `log_q ω_i` (i = 1..d-1, grid -8..=8) minimizing
/// K, the smallest constant with ∫α̃(g_t u_s x) ds <= K t q^{-mnt} α̃(x)
/// for every sample above the 90th-percentile threshold. ω_0 = ω_d = 1.
pub fn fit_weights(
    m: usize,
    n: usize,
    t: u32,
    samples: &[PolyLattice],
    trials: u64,
    seed: u64,
    max_k: f64,
) -> Result<WeightFit> {
    let d = m + n;
    let data = FitData::new(samples, m, n, t, trials, seed)?;
    let q = data.q as f64;
    let base = MargulisParams::new(m, n, t)?;
    let build = |w: &[i32]| -> MargulisParams {
        let mut p = base.clone();
        p.omegas = w.iter().map(|&e| q.powi(e)).collect();
        p
    };
    let score = |w: &[i32]| -> (f64, f64, usize) { data.evaluate(&build(w), None) };
    let mut w = vec![0i32; d + 1];
    let (mut thr, mut best, mut active) = score(&w);
    for _sweep in 0..10 {
        let mut improved = false;
        for i in 1..d {
            for cand in WEIGHT_GRID {
                if cand == w[i] {
                    continue;
                }
                let mut w2 = w.clone();
                w2[i] = cand;
                let (t2, k2, a2) = score(&w2);
                // only non-vacuous candidates compete unless nothing is active
                if a2 > 0 && (k2 < best || active == 0) {
                    w = w2;
                    thr = t2;
                    best = k2;
                    active = a2;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let params = build(&w).with_threshold(thr);
    if active > 0 && best > max_k {
        return Err(Error::SearchFailed { log_omegas: w, threshold: thr, best_k: best });
    }
    Ok(WeightFit { params, log_omegas: w, k: best, active, vacuous: active == 0 })
}

/// K for fixed weights and threshold (no search).
pub fn contraction_constant(
    params: &MargulisParams,
    samples: &[PolyLattice],
    trials: u64,
    seed: u64,
) -> Result<(f64, usize)> {
    let data = FitData::new(samples, params.m, params.n, params.t, trials, seed)?;
    let (_, k, active) = data.evaluate(params, Some(params.threshold));
    Ok((k, active))
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedDecayRow {
    pub n_steps: usize,
    pub integral: McSummary,
    /// Fraction of samples still in Z_x(M, N-1, t).
    pub survivors: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedDecayReport {
    pub rows: Vec<RestrictedDecayRow>,
    /// Least-squares slope of log_q(integral) against N.
    pub slope: f64,
    pub target: f64,
    pub pass: bool,
    /// Set when the restricted integral vanished for some N.
    pub vacuous: bool,
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Monte Carlo ∫_{Z_x(M,N-1,t)} α̃(g_{Nt} u_s x) ds for N = 1..=n_max.
/// Passes when the log_q slope in N is at most -mnt/2.
pub fn check_restricted_decay(
    x: &PolyLattice,
    params: &MargulisParams,
    big_m: f64,
    n_max: usize,
    trials: u64,
    seed: u64,
) -> Result<RestrictedDecayReport> {
    let f = x.field();
    let q = f.q() as f64;
    let traj = crate::dynamics::sample_alpha_tilde_paths(x, params, n_max, trials, seed)?;
    let mut rows = Vec::with_capacity(n_max);
    let mut vacuous = false;
    for nn in 1..=n_max {
        let vals: Vec<f64> = traj
            .iter()
            .map(|path| if path[..nn - 1].iter().all(|&a| a > big_m) { path[nn - 1] } else { 0.0 })
            .collect();
        let survivors = traj.iter().filter(|p| p[..nn - 1].iter().all(|&a| a > big_m)).count() as f64 / trials as f64;
        let integral = McSummary::from_samples(&vals);
        if integral.mean == 0.0 {
            vacuous = true;
        }
        rows.push(RestrictedDecayRow { n_steps: nn, integral, survivors });
    }
    let mnt = (params.m * params.n) as f64 * params.t as f64;
    let xs: Vec<f64> = rows.iter().filter(|r| r.integral.mean > 0.0).map(|r| r.n_steps as f64).collect();
    let ys: Vec<f64> = rows.iter().filter(|r| r.integral.mean > 0.0).map(|r| r.integral.mean.ln() / q.ln()).collect();
    let slope = if xs.len() >= 2 { ls_slope(&xs, &ys) } else { f64::NEG_INFINITY };
    let target = -mnt / 2.0;
    Ok(RestrictedDecayReport { rows, slope, target, pass: vacuous || slope <= target, vacuous })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::KMatrix;
    use crate::gf::Field;

    #[test]
    fn beta_values() {
        assert_eq!(beta(2, 1, 1).unwrap(), Rational64::new(2, 1));
        assert_eq!(beta(2, 1, 2).unwrap(), Rational64::new(1, 1));
        assert_eq!(beta(1, 2, 1).unwrap(), Rational64::new(1, 1));
        assert_eq!(beta(1, 2, 2).unwrap(), Rational64::new(2, 1));
        for m in 1..5 {
            assert_eq!(beta(m, 3, m).unwrap(), Rational64::new(1, 1));
        }
        assert!(beta(2, 1, 0).is_err());
        assert!(beta(2, 1, 3).is_err());
    }

    #[test]
    fn inverse_beta_is_concave() {
        for m in 1..=6 {
            for n in 1..=6 {
                let inv: Vec<Rational64> = (1..m + n).map(|i| beta(m, n, i).unwrap().recip()).collect();
                for w in inv.windows(3) {
                    // second difference <= 0
                    assert!(w[0] + w[2] - w[1] * 2 <= Rational64::new(0, 1), "m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn alpha_tilde_examples() {
        let f = Field::prime(2).unwrap();
        let p = MargulisParams::new(1, 1, 1).unwrap();
        let r2 = PolyLattice::standard(f, 2);
        assert_eq!(alpha_tilde(&r2, &p).unwrap(), 3.0);
        let x = PolyLattice::new(KMatrix::diag_pi(f, &[-1, 1])).unwrap();
        assert_eq!(alpha_tilde(&x, &p).unwrap(), 4.0);
        let p2 = p.clone().with_omegas(vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(alpha_tilde(&x, &p2).unwrap(), 4.0 + 2.0);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(|x| x as f64).collect();
        assert_eq!(percentile(&v, 0.9), 9.0);
        assert_eq!(percentile(&[5.0], 0.9), 5.0);
    }
}
