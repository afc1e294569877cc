//! Acceptance criteria 1-11. Each test prints one `criterion N: PASS|FAIL`
//! line and then asserts.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use fqdyn::contfrac::dani_corpus;
use fqdyn::dynamics::{
    dani_scan, dani_verdict, divergence_verdict, measure_z_profile, phi_pushforward_counts, trajectory, FlowSpec, Verdict,
};
use fqdyn::exterior::{binomial, subsets};
use fqdyn::lattice::{saturate, subspace_intersection, subspace_norm, subspace_sum};
use fqdyn::laurent::q_pow;
use fqdyn::margulis::{ls_slope, MargulisParams};
use fqdyn::measure::{
    basis_wedge, contraction_integral_u, neg_moment, truncated_neg_moment, verify_bound_d, verify_bound_e, ValuationEvent,
    ValuationHistogram, QuotientMatrixSpace,
};
use fqdyn::{Field, KMatrix, Laurent, Poly, PolyLattice, SubsetIndex, WedgeVector};
use fqdyn_cli::config::RunConfig;
use fqdyn_cli::execute;
use fqdyn_cli::sample::{elementary_sl, laurent_poly};
use num_rational::{BigRational, Rational64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: impl std::fmt::Display) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn field(q: u64) -> Field {
    Field::from_q(q, None).unwrap()
}

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// All vectors of length `len` over {0..q-1}.
fn tuples(q: u8, len: usize) -> impl Iterator<Item = Vec<u8>> {
    let total = (q as u64).pow(len as u32);
    (0..total).map(move |mut idx| {
        (0..len)
            .map(|_| {
                let c = (idx % q as u64) as u8;
                idx /= q as u64;
                c
            })
            .collect()
    })
}

/// d×i matrix over O/π^depth from a flat digit vector (entry-major).
fn matrix_from_digits(f: Field, d: usize, i: usize, depth: usize, digits: &[u8]) -> KMatrix {
    let e = digits.chunks(depth).map(|c| Laurent::from_raw(f, 0, c.to_vec(), None)).collect();
    KMatrix::new(f, d, i, e).unwrap()
}

/// Valuation of x truncated below π^depth (depth when it vanishes there).
fn capped_val(x: &Laurent, depth: i64) -> i64 {
    (0..depth).find(|&j| x.coeff(j) != 0).unwrap_or(depth)
}

/// min over i×i minors of the capped valuation.
fn wedge_val(s: &KMatrix, depth: i64) -> i64 {
    let (d, i) = (s.rows(), s.cols());
    let all = SubsetIndex::new(i, (1..=i).collect()).unwrap();
    subsets(d, i)
        .into_iter()
        .map(|m| capped_val(&s.minor(&SubsetIndex::from_mask(d, m), &all).unwrap(), depth))
        .min()
        .unwrap()
}

/// Brute-force μ(‖s_1 ∧ ⋯ ∧ s_i‖ <= q^{-ℓ}) for ℓ = 0..=levels.
fn brute_e(f: Field, d: usize, i: usize, levels: usize) -> Vec<BigRational> {
    let q = f.q();
    let depth = levels.max(1);
    let mut hits = vec![0i64; levels + 1];
    let mut total = 0i64;
    for digits in tuples(q as u8, d * i * depth) {
        let v = wedge_val(&matrix_from_digits(f, d, i, depth, &digits), depth as i64);
        for (l, h) in hits.iter_mut().enumerate() {
            if v >= l as i64 {
                *h += 1;
            }
        }
        total += 1;
    }
    hits.iter().map(|&h| rat(h, total)).collect()
}

#[test]
fn criterion_01_exact_measure_identities() {
    let mut pass = true;
    for q in [2u64, 3] {
        let f = field(q);
        for d in 1..=3usize {
            let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(f, d, 1, 3).unwrap()).unwrap();
            for ell in 1..=3u32 {
                let engine = h.measure(&ValuationEvent::E(ell)).unwrap();
                // oracle: vectors of (O/π^ℓ)^d that vanish
                let states = (q as i64).pow(ell * d as u32);
                pass &= engine == rat(1, states);
                pass &= engine == q_pow(q as usize, -(ell as i64) * d as i64);
            }
        }
    }
    let f2 = field(2);
    let h = ValuationHistogram::compute(&QuotientMatrixSpace::new(f2, 2, 2, 1).unwrap()).unwrap();
    let e1 = h.measure(&ValuationEvent::E(1)).unwrap();
    let singular = tuples(2, 4).filter(|e| (e[0] * e[3] + e[1] * e[2]) % 2 == 0).count() as i64;
    pass &= e1 == rat(5, 8) && e1 == rat(singular, 16);
    // exact coordinate valuation profiles against enumeration at depth 3
    for d in 1..=3usize {
        let mut counts: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for digits in tuples(2, 3 * d) {
            let prof: Vec<u32> = digits
                .chunks(3)
                .map(|c| c.iter().position(|&x| x != 0).map_or(3, |p| p as u32))
                .collect();
            *counts.entry(prof).or_default() += 1;
        }
        let profiles: Vec<Vec<u32>> = counts.keys().filter(|p| p.iter().all(|&x| x <= 2)).cloned().collect();
        let r = verify_bound_d(f2, d, 1, &profiles, 1 << 24).unwrap();
        for row in &r.rows {
            pass &= row.measure == rat(counts[&row.profile], 1 << (3 * d));
        }
        pass &= r.rows.len() == 3usize.pow(d as u32);
    }
    report(1, pass, "ball volumes, singular 2x2 mod pi = 5/8, step-0 profiles");
    assert!(pass);
}

#[test]
fn criterion_02_single_height_exponent() {
    let f = field(2);
    let mut pass = true;
    let mut detail = Vec::new();
    for (d, i) in [(2usize, 1usize), (3, 2), (2, 2), (3, 3)] {
        let r = verify_bound_e(f, d, i, 3, 1 << 27).unwrap();
        let base = r.rows[0].ratio.clone();
        let ok = r.rows.iter().all(|x| x.ratio <= &base * rat(4, 1));
        // brute-force oracle while the state space stays small
        let levels = (1..=3).filter(|&l| 2usize.pow((d * i * l) as u32) <= 1 << 18).max().unwrap_or(0);
        if levels > 0 {
            let oracle = brute_e(f, d, i, levels);
            for (l, o) in oracle.iter().enumerate() {
                pass &= r.rows[l].measure == *o;
            }
        }
        pass &= ok;
        let ratios: Vec<String> = r.rows.iter().map(|x| x.ratio.to_string()).collect();
        detail.push(format!("({d},{i}) [{}]", ratios.join(", ")));
    }
    report(2, pass, detail.join(" "));
    assert!(pass);
}

#[test]
fn criterion_03_negative_moments() {
    let f = field(2);
    let m = neg_moment(f, 2, 1, Rational64::from_integer(1), 20, 1 << 24).unwrap();
    let (lo, hi) = m.exact.clone().unwrap();
    let hi = hi.unwrap();
    let three_halves = rat(3, 2);
    let width = m.width().unwrap();
    let mut pass = lo <= three_halves && three_halves <= hi && width < 1e-3;
    let mut worst = 0.0f64;
    for kappa in 1..=6 {
        let t = truncated_neg_moment(f, 2, 1, kappa, 1 << 24).unwrap();
        let ok = t.value <= &t.bound * rat(3, 2);
        pass &= ok;
        worst = worst.max(fqdyn::measure::rat_f64(&t.value) / fqdyn::measure::rat_f64(&t.bound));
    }
    report(3, pass, format!("bracket [{lo}, {hi}] width {width:.3e}; max value/(C_2 kappa) = {worst:.4} <= 1.5"));
    assert!(pass);
}

fn cfg(pairs: &[(&str, &str)]) -> RunConfig {
    RunConfig::from_map(pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()).unwrap()
}

#[test]
fn criterion_04_hodge_and_jacobi() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(&[("q", "2"), ("d_max", "4"), ("trials", "10000"), ("jacobi_trials", "1000"), ("seed", "4")]);
    let out = execute("verify-hodge", &c, dir.path(), None);
    let get = |name: &str| out.report.checks.iter().find(|c| c.name == name).map(|c| c.pass && !c.vacuous);
    let mut pass = out.code == 0;
    for name in ["hodge_norm", "hodge_contragredient", "jacobi_sl4", "hodge_counterexample"] {
        pass &= get(name) == Some(true);
    }
    // the counterexample, independently: A = [[1,1],[0,1]], A e_1 = e_1, *e_1 = e_2, A e_2 = e_1 + e_2
    let f = field(2);
    let (one, zero) = (Laurent::one(f), Laurent::zero(f));
    let a = KMatrix::new(f, 2, 2, vec![one.clone(), one.clone(), zero, one.clone()]).unwrap();
    let e = |k: usize| WedgeVector::basis(f, &SubsetIndex::new(2, vec![k]).unwrap());
    pass &= e(1).apply(&a).unwrap().hodge() == e(2);
    pass &= e(1).hodge().apply(&a).unwrap() == e(1).add(&e(2)).unwrap();
    report(4, pass, "10^4 Hodge instances d <= 4, 10^3 Jacobi instances on SL_4, counterexample");
    assert!(pass);
}

/// Exact ∫ ‖g_t u_s e_2‖^{-1} ds by summing over the level sets |s| = q^{-k}.
fn level_set_oracle(q: f64, t: i32) -> f64 {
    let deep = (2 * t) as usize;
    let mut acc = 0.0;
    for k in 0..=deep {
        let mass = if k < deep { (1.0 - 1.0 / q) * q.powi(-(k as i32)) } else { q.powi(-(deep as i32)) };
        let norm = q.powi(t - k as i32).max(q.powi(-t));
        acc += mass / norm;
    }
    acc
}

#[test]
fn criterion_05_contraction_exponent() {
    let f = field(2);
    let v = basis_wedge(f, 2, &[2]).unwrap();
    let ts: Vec<f64> = (1..=6).map(f64::from).collect();
    let mut ys = Vec::new();
    let mut t1 = None;
    for t in 1..=6u32 {
        let r = contraction_integral_u(f, 1, 1, t, &v, 10_000, 500 + t as u64).unwrap();
        if t == 1 {
            t1 = Some(r.clone());
        }
        ys.push(r.value.log2());
    }
    let slope = ls_slope(&ts, &ys);
    let t1 = t1.unwrap();
    let exact = level_set_oracle(2.0, 1);
    let t1_ok = (t1.value - exact).abs() <= 3.0 * t1.std_error();
    let oracle_slope = ls_slope(&ts, &(1..=6).map(|t| level_set_oracle(2.0, t).log2()).collect::<Vec<_>>());
    let slope_ok = (-1.3..=-0.7).contains(&slope);
    report(
        5,
        slope_ok && t1_ok,
        format!(
            "slope {slope:.3} (target [-1.3, -0.7], exact level-set slope {oracle_slope:.3}); t=1 value {:.4} +- {:.4} vs {exact}",
            t1.value,
            t1.std_error()
        ),
    );
    assert!(t1_ok, "t = 1 value off the level-set oracle");
    assert!(slope_ok, "slope {slope} outside [-1.3, -0.7]");
}

/// Successive minima exponents by enumerating coordinate tuples against the
/// input basis. Coordinates of any vector of norm <= q^E satisfy
/// |c_j| <= max_r |adj(B)_{jr}| q^E / |det B|, and λ_d <= q^E for E the
/// longest input column.
fn brute_minima(x: &PolyLattice) -> Vec<i64> {
    let f = x.field();
    let d = x.dim();
    let b = x.basis();
    let norm = |v: &[Laurent]| v.iter().filter_map(|z| z.abs().ok()?.exponent()).max();
    let cols = b.columns();
    let e_max = cols.iter().filter_map(|c| norm(c)).max().unwrap();
    let adj = b.adjugate().unwrap();
    let det = b.det().unwrap().abs().unwrap().exponent().unwrap();
    let bounds: Vec<i64> = (0..d)
        .map(|j| (0..d).filter_map(|r| adj.get(j, r).abs().ok()?.exponent()).max().unwrap() + e_max - det)
        .collect();
    let polys: Vec<Vec<Poly>> = bounds
        .iter()
        .map(|&bd| if bd < 0 { vec![Poly::zero(f)] } else { Poly::enumerate(f, bd as usize).collect() })
        .collect();
    let multiples: Vec<Vec<Vec<Laurent>>> = (0..d)
        .map(|j| polys[j].iter().map(|p| cols[j].iter().map(|e| e.checked_mul(&p.to_laurent()).unwrap()).collect()).collect())
        .collect();
    let mut found: Vec<(i64, Vec<usize>)> = Vec::new();
    let mut idx = vec![0usize; d];
    'outer: loop {
        let mut pos = 0;
        loop {
            if pos == d {
                break 'outer;
            }
            idx[pos] += 1;
            if idx[pos] < polys[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        let mut v = vec![Laurent::zero(f); d];
        for j in 0..d {
            for (r, e) in v.iter_mut().enumerate() {
                *e = e.checked_add(&multiples[j][idx[j]][r]).unwrap();
            }
        }
        if let Some(e) = norm(&v) {
            if e <= e_max {
                found.push((e, idx.clone()));
            }
        }
    }
    found.sort();
    let mut basis: Vec<Vec<Laurent>> = Vec::new();
    let mut out = Vec::new();
    for (e, id) in found {
        let v: Vec<Laurent> = (0..d)
            .map(|r| (0..d).fold(Laurent::zero(f), |acc, j| acc.checked_add(&multiples[j][id[j]][r]).unwrap()))
            .collect();
        let mut trial = basis.clone();
        trial.push(v);
        if WedgeVector::wedge(f, &trial).unwrap().coords().iter().any(|c| !c.is_zero()) {
            basis = trial;
            out.push(e);
            if out.len() == d {
                break;
            }
        }
    }
    out
}

#[test]
fn criterion_06_reduction_oracle() {
    let f = field(2);
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let mut det_failures = 0;
    for k in 0..1000usize {
        let d = 1 + k % 3;
        let x = loop {
            let b = KMatrix::from_fn(f, d, d, |_, _| laurent_poly(f, -3, 0, &mut r));
            if let Ok(x) = PolyLattice::new(b) {
                break x;
            }
        };
        let red = x.minima_exponents().unwrap().to_vec();
        let brute = brute_minima(&x);
        mismatches += usize::from(red != brute);
        let det = x.det_abs().unwrap().exponent().unwrap();
        det_failures += usize::from(red.iter().sum::<i64>() != det || brute.iter().sum::<i64>() != det);
    }
    let mut sub_failures = 0;
    for _ in 0..1000 {
        let d = r.random_range(2..=4usize);
        let g = elementary_sl(f, d, 2 * d, -2, 2, &mut r);
        let x = PolyLattice::new(g).unwrap();
        let pick = |r: &mut ChaCha8Rng| {
            let i = r.random_range(1..d);
            loop {
                let coords: Vec<Vec<Laurent>> = (0..i).map(|_| (0..d).map(|_| laurent_poly(f, -1, 0, r)).collect()).collect();
                let v = x.basis().mul(&KMatrix::from_columns(f, &coords).unwrap()).unwrap();
                if let Ok(l) = saturate(&x, &v) {
                    return l;
                }
            }
        };
        let l1 = pick(&mut r);
        let l2 = pick(&mut r);
        let cap = subspace_intersection(&x, &l1, &l2).unwrap();
        let cup = subspace_sum(&x, &l1, &l2).unwrap();
        let lhs = subspace_norm(&cap).unwrap().mul(&subspace_norm(&cup).unwrap());
        let rhs = subspace_norm(&l1).unwrap().mul(&subspace_norm(&l2).unwrap());
        sub_failures += usize::from(lhs > rhs || cap.dim() + cup.dim() != l1.dim() + l2.dim());
    }
    let pass = mismatches == 0 && det_failures == 0 && sub_failures == 0;
    report(6, pass, format!("minima mismatches {mismatches}/1000, det failures {det_failures}, submodularity failures {sub_failures}/1000"));
    assert!(pass);
}

#[test]
fn criterion_07_dani_corpus() {
    let f = field(2);
    let params = MargulisParams::new(1, 1, 1).unwrap();
    let spec = FlowSpec::new(1, 1, 1).unwrap();
    let m_div = 2f64.powi(10);
    let x = PolyLattice::standard(f, 2);
    let mut agree = 0;
    let corpus = dani_corpus(f, 64).unwrap();
    let mut detail = Vec::new();
    for c in &corpus {
        let s = KMatrix::new(f, 1, 1, vec![c.s.clone()]).unwrap();
        let singular = dani_verdict(&dani_scan(&s, -2, 10, 1 << 16).unwrap());
        let tr = trajectory(&x, &s, &spec, 20, &params, m_div).unwrap();
        let verdict = divergence_verdict(&tr, m_div);
        let alpha1_max = tr.steps.iter().map(|st| st.alpha_exps[1]).max().unwrap();
        let ok = if c.singular {
            singular && verdict == Verdict::Divergent && alpha1_max > 10
        } else {
            !singular && verdict == Verdict::Bounded
        };
        agree += usize::from(ok);
        detail.push(format!("{}:{}", c.name, if ok { "ok" } else { "mismatch" }));
    }
    let pass = agree == corpus.len() && corpus.len() == 7;
    report(7, pass, format!("{agree}/{} agree [{}]", corpus.len(), detail.join(" ")));
    assert!(pass);
}

#[test]
fn criterion_08_phi_uniformity() {
    let f = field(2);
    let spec = FlowSpec::new(1, 1, 1).unwrap();
    let counts = phi_pushforward_counts(f, &spec, 2, 2, 1 << 24).unwrap();
    let total: u64 = counts.iter().sum();
    // φ takes values in O/π^2 with q^{mn·2} = 4 classes
    let pass = counts.len() == 4 && counts.iter().all(|&c| c * 4 == total);
    report(8, pass, format!("counts {counts:?}"));
    assert!(pass);
}

#[test]
fn criterion_09_escape_measure_decay() {
    let f = field(2);
    let params = MargulisParams::new(1, 1, 2).unwrap();
    let x = PolyLattice::new(KMatrix::diag_pi(f, &[-8, 8])).unwrap();
    let prof = measure_z_profile(&x, &params, 2f64.powi(7), 4, 100_000, 9).unwrap();
    let ns: Vec<f64> = (1..=4).map(f64::from).collect();
    let ys: Vec<f64> = prof[1..].iter().map(|r| r.value.log2()).collect();
    let slope = ls_slope(&ns, &ys);
    let pass = ys.iter().all(|y| y.is_finite()) && slope <= -1.0;
    let vals: Vec<String> = prof.iter().map(|r| format!("{:.4}", r.value)).collect();
    report(9, pass, format!("mu(Z) for N=0..4 [{}], slope {slope:.3} <= -1 (target -2)", vals.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_10_box_slopes() {
    let mut pass = true;
    let mut detail = Vec::new();
    for t in ["1", "2"] {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(&[("t", t), ("steps", "4"), ("deltas", "0,0.5,1"), ("big_m", "3")]);
        let out = execute("dim-estimate", &c, dir.path(), None);
        let slope1 = out.report.checks.iter().find(|c| c.name == "box_slope_delta_1").unwrap();
        let mono = out.report.checks.iter().find(|c| c.name == "slope_nonincreasing_in_delta").unwrap();
        let target = out.report.fitted["target_delta_1"].as_f64().unwrap();
        let v = slope1.value.as_f64().unwrap();
        pass &= out.code == 0 && slope1.pass && mono.pass && v <= 0.85 && target == 0.5;
        detail.push(format!("t={t}: max slope {v} <= 0.85 (target {target})"));
    }
    report(10, pass, detail.join("; "));
    assert!(pass);
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in std::fs::read_dir(&p).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_11_determinism() {
    let runs: &[(&str, &[&str])] = &[
        ("verify-measure", &[]),
        ("verify-hodge", &["--trials", "300", "--jacobi-trials", "30"]),
        ("contraction", &["--trials", "2000", "--t-max", "3"]),
        ("contraction", &["--target", "sl", "--m", "2", "--trials", "300", "--t-max", "2"]),
        ("contraction", &["--target", "linear-growth", "--trials", "300", "--t-max", "2"]),
        ("contraction", &["--target", "fit", "--trials", "50", "--cusp", "6"]),
        ("contraction", &["--target", "restricted", "--trials", "2000"]),
        ("trajectory", &["--s", "cf(T|T)"]),
        ("dani-scan", &["--s", "(T+1)/(T^2+T+1)"]),
        ("covering", &["--t", "2", "--trials", "500"]),
        ("dim-estimate", &[]),
    ];
    let bin = env!("CARGO_BIN_EXE_fqdyn");
    let mut bad = Vec::new();
    for (cmd, extra) in runs {
        let mut trees = Vec::new();
        let mut codes = Vec::new();
        for workers in ["1", "8"] {
            let dir = tempfile::tempdir().unwrap();
            let status = Command::new(bin)
                .arg(cmd)
                .args(*extra)
                .args(["--seed", "11", "--workers", workers, "--out"])
                .arg(dir.path())
                .output()
                .unwrap();
            codes.push(status.status.code());
            trees.push(read_tree(dir.path()));
        }
        if trees[0] != trees[1] || codes[0] != codes[1] || trees[0].is_empty() {
            bad.push(format!("{cmd} {extra:?}"));
        }
    }
    let pass = bad.is_empty();
    report(11, pass, format!("{} runs byte-identical across 1 and 8 workers; differing: {bad:?}", runs.len() - bad.len()));
    assert!(pass);
}

#[test]
fn oracle_helpers_self_check() {
    // the brute-force E measure reproduces the 5/8 singular fraction
    let f = field(2);
    assert_eq!(brute_e(f, 2, 2, 1)[1], rat(5, 8));
    assert_eq!(binomial(3, 2), 3);
    assert!((level_set_oracle(2.0, 1) - 1.0).abs() < 1e-12);
    assert!((level_set_oracle(2.0, 3) - 0.5).abs() < 1e-12);
}
